//! Flat `key=value` output blocks.

use std::fmt::Display;

#[derive(Debug, Default, Clone, PartialEq)]
pub struct KvBlock {
    entries: Vec<(String, String)>,
}

impl KvBlock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_list<T: Display>(&mut self, key: &str, values: &[T]) -> &mut Self {
        let joined = values.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        self.push(key, joined)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

/// Parses rendered output back into pairs; lines without `=` are skipped.
pub fn parse_kv(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_and_parse() {
        let mut b = KvBlock::new();
        b.push("holds", false).push("worst_value", 1.0).push_list("worst_support", &[0usize, 3]);
        let text = b.render();
        assert_eq!(text, "holds=false\nworst_value=1\nworst_support=0,3\n");
        assert_eq!(parse_kv(&text)[2], ("worst_support".into(), "0,3".into()));
        assert_eq!(b.get("holds"), Some("false"));
    }
}
