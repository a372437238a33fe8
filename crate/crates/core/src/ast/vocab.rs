use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Token table with `PAD` at 0 and `UNK` at 1; real tokens follow in
/// decreasing frequency. Size is at most `max_size + 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    pub max_size: usize,
    pub min_freq: usize,
}

impl Vocabulary {
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>, max_size: usize, min_freq: usize) -> Self {
        let mut all = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        all.extend(tokens.into_iter().filter(|t| t != PAD_TOKEN && t != UNK_TOKEN));
        let index = all.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            tokens: all,
            index,
            max_size,
            min_freq,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, idx: usize) -> Option<&str> {
        self.tokens.get(idx).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// One token per line, index = line number. Backslashes and newlines
    /// inside tokens are escaped.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        for t in &self.tokens {
            text.push_str(&t.replace('\\', "\\\\").replace('\n', "\\n"));
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let tokens: Vec<String> = text.lines().map(unescape).collect();
        if tokens.len() < 2 || tokens[PAD] != PAD_TOKEN || tokens[UNK] != UNK_TOKEN {
            return Err(Error::ingest(path, "vocabulary must start with <pad>, <unk>"));
        }
        let n = tokens.len() - 2;
        Ok(Self::from_tokens(tokens.into_iter().skip(2), n, 1))
    }
}

fn unescape(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut chars = line.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some(o) => out.push(o),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Counts tokens over all streams, drops those seen fewer than `min_freq`
/// times, and keeps the `max_size` most frequent (ties lexicographic).
pub fn build_vocab<S, T>(streams: impl IntoIterator<Item = S>, max_size: usize, min_freq: usize) -> Vocabulary
where
    S: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    let mut counts: HashMap<String, usize> = HashMap::new();
    for stream in streams {
        for tok in stream {
            *counts.entry(tok.as_ref().to_string()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(t, c)| *c >= min_freq.max(1) && t != PAD_TOKEN && t != UNK_TOKEN)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_size);
    Vocabulary::from_tokens(ranked.into_iter().map(|(t, _)| t), max_size, min_freq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_freq_threshold() {
        let v = build_vocab([vec!["a", "a", "b"], vec!["a"]], 10, 2);
        assert!(v.contains("a"));
        assert!(!v.contains("b"));
        assert_eq!(v.get("b"), UNK);
    }

    #[test]
    fn truncation_keeps_most_frequent() {
        let v = build_vocab([vec!["e", "d", "d", "c", "c", "c", "b", "a"]], 2, 1);
        assert_eq!(v.len(), 4);
        assert_eq!(v.tokens()[2..], ["c".to_string(), "d".to_string()]);
        assert_eq!(v.get("a"), UNK);
        assert_eq!(v.get(PAD_TOKEN), PAD);
    }

    #[test]
    fn ties_are_lexicographic() {
        let v = build_vocab([vec!["z", "y", "x"]], 2, 1);
        assert_eq!(v.tokens()[2..], ["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let v = build_vocab([vec!["a\\b", "line\nbreak", "plain"]], 10, 1);
        let path = dir.path().join("vocab.txt");
        v.save(&path).unwrap();
        let back = Vocabulary::load(&path).unwrap();
        assert_eq!(back.tokens(), v.tokens());
        for (i, t) in v.tokens().iter().enumerate() {
            assert_eq!(back.get(t), i);
        }
    }
}
