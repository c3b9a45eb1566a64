#![no_std]

extern crate alloc;

pub mod combin;
pub mod frames;
pub mod l1solvers;
pub mod error;
pub mod experiments;
pub mod lp;
pub mod matcore;
pub mod matrix;
pub mod nspcert;
pub mod rng;
pub mod stability;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
