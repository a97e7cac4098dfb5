use std::collections::HashSet;
use std::path::Path;

/// Pluggable tokenizer used for token budgets.
///
/// Implementations must be deterministic, return no tokens for empty input,
/// and keep `detokenize(tokenize(s))` equal to `s` up to whitespace
/// normalization.
pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<String>;
    fn detokenize(&self, tokens: &[String]) -> String;
}

/// Splits on Unicode whitespace; joins with single spaces.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        text.split_whitespace().map(str::to_owned).collect()
    }

    fn detokenize(&self, tokens: &[String]) -> String {
        tokens.join(" ")
    }
}

/// Greedy longest-match subword tokenizer driven by a vocabulary file (one
/// entry per line). Word-internal pieces carry a continuation prefix (`##` by
/// default). Characters with no vocabulary entry become single-character
/// pieces, so no text is lost. Registered special tokens are kept atomic.
#[derive(Debug, Clone)]
pub struct VocabTokenizer {
    vocab: HashSet<String>,
    specials: HashSet<String>,
    continuation: String,
    max_piece_chars: usize,
}

impl VocabTokenizer {
    pub fn new<I, S>(vocab: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let vocab: HashSet<String> = vocab.into_iter().map(Into::into).filter(|s: &String| !s.is_empty()).collect();
        let max_piece_chars = vocab.iter().map(|s| s.chars().count()).max().unwrap_or(1);
        Self {
            vocab,
            specials: HashSet::new(),
            continuation: "##".to_owned(),
            max_piece_chars,
        }
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::new(text.lines().map(str::trim_end).filter(|l| !l.is_empty())))
    }

    pub fn with_specials<I, S>(mut self, specials: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.specials.extend(specials.into_iter().map(Into::into));
        self
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    fn longest_piece(&self, chars: &[char], start: usize, first: bool) -> usize {
        let max = (chars.len() - start).min(self.max_piece_chars);
        for len in (1..=max).rev() {
            let piece: String = chars[start..start + len].iter().collect();
            let candidate = if first {
                if piece.starts_with(&self.continuation) {
                    continue;
                }
                piece
            } else {
                format!("{}{piece}", self.continuation)
            };
            if self.vocab.contains(&candidate) {
                return len;
            }
        }
        1
    }
}

impl Tokenizer for VocabTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for word in text.split_whitespace() {
            if self.specials.contains(word) {
                out.push(word.to_owned());
                continue;
            }
            let chars: Vec<char> = word.chars().collect();
            let mut start = 0;
            while start < chars.len() {
                let first = start == 0;
                let len = self.longest_piece(&chars, start, first);
                let piece: String = chars[start..start + len].iter().collect();
                out.push(if first { piece } else { format!("{}{piece}", self.continuation) });
                start += len;
            }
        }
        out
    }

    fn detokenize(&self, tokens: &[String]) -> String {
        let mut out = String::new();
        for token in tokens {
            match token.strip_prefix(self.continuation.as_str()) {
                Some(rest) if !self.specials.contains(token) => out.push_str(rest),
                _ => {
                    if !out.is_empty() {
                        out.push(' ');
                    }
                    out.push_str(token);
                }
            }
        }
        out
    }
}
