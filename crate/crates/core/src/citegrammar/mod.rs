//! Parenthetical author-date citation strings.
//!
//! The accepted grammar is deliberately small:
//!
//! ```text
//! citation := names "," SP year
//! names    := surname                     (Single)
//!           | surname " and " surname     (Pair)
//!           | surname " et al."           (EtAl)
//! year     := DIGIT DIGIT DIGIT DIGIT
//! surname  := letters, apostrophes, hyphens, periods and single internal
//!             spaces; LaTeX accent escapes (`\'a`, `\v{c}`) are allowed
//! ```
//!
//! A string outside this grammar is a [`FormatError`]; the hallucination
//! analyzer treats that as the wrong-format class.

mod fold;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fold::fold_surname;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("not an author-date citation ({reason}): {input:?}")]
pub struct FormatError {
    pub input: String,
    pub reason: &'static str,
}

impl FormatError {
    fn new(input: &str, reason: &'static str) -> Self {
        Self {
            input: input.to_owned(),
            reason,
        }
    }
}

/// A parsed author-date citation such as `Yao and Zweig, 2015`.
///
/// When `et_al` is set only the lead surname is carried.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CitationToken {
    pub surnames: Vec<String>,
    pub et_al: bool,
    pub year: u16,
    pub raw: String,
}

/// Comparison key: folded surnames, et-al flag and year.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NormalizedKey {
    pub folded_surnames: Vec<String>,
    pub et_al: bool,
    pub year: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OverlapReport {
    pub all_names: bool,
    pub one_name: bool,
    pub year: bool,
}

const ET_AL: &str = " et al.";
const AND: &str = " and ";

impl CitationToken {
    /// Build a token from parts, formatting `raw` canonically.
    pub fn new(surnames: Vec<String>, et_al: bool, year: u16) -> Result<Self, FormatError> {
        let raw = format_parts(&surnames, et_al, year);
        let token = Self {
            surnames,
            et_al,
            year,
            raw,
        };
        // Re-parse so constructed tokens obey exactly the same rules.
        let reparsed = parse(&token.raw)?;
        if reparsed.surnames != token.surnames || reparsed.et_al != et_al {
            return Err(FormatError::new(&token.raw, "surname not representable"));
        }
        Ok(token)
    }

    pub fn key(&self) -> NormalizedKey {
        normalize(self)
    }

    /// Canonical surface form, e.g. `Rezende et al., 2014`.
    pub fn canonical(&self) -> String {
        format_parts(&self.surnames, self.et_al, self.year)
    }

    pub fn lead_surname(&self) -> &str {
        &self.surnames[0]
    }
}

impl fmt::Display for CitationToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl FromStr for CitationToken {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl fmt::Display for NormalizedKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_parts(&self.folded_surnames, self.et_al, self.year))
    }
}

fn format_parts(surnames: &[String], et_al: bool, year: u16) -> String {
    match (surnames, et_al) {
        ([lead, ..], true) => format!("{lead} et al., {year:04}"),
        ([a, b], false) => format!("{a} and {b}, {year:04}"),
        _ => format!("{}, {year:04}", surnames.join(" and ")),
    }
}

/// Parse one citation string under the author-date grammar.
pub fn parse(s: &str) -> Result<CitationToken, FormatError> {
    let trimmed = s.trim();
    if trimmed.is_empty() {
        return Err(FormatError::new(s, "empty"));
    }
    let (names, year) = trimmed
        .rsplit_once(',')
        .ok_or_else(|| FormatError::new(s, "missing comma before year"))?;
    let year = year.trim();
    if year.len() != 4 || !year.bytes().all(|b| b.is_ascii_digit()) {
        return Err(FormatError::new(s, "year is not four digits"));
    }
    let year: u16 = year.parse().expect("four ascii digits");

    let names = names.trim_end();
    if names.contains(',') {
        return Err(FormatError::new(s, "unexpected comma in author list"));
    }
    let (surnames, et_al) = if let Some(lead) = names.strip_suffix(ET_AL) {
        (vec![lead], true)
    } else {
        let parts: Vec<&str> = names.split(AND).collect();
        if parts.len() > 2 {
            return Err(FormatError::new(s, "more than two authors without et al."));
        }
        (parts, false)
    };
    for name in &surnames {
        check_surname(name).map_err(|reason| FormatError::new(s, reason))?;
    }
    Ok(CitationToken {
        surnames: surnames.into_iter().map(str::to_owned).collect(),
        et_al,
        year,
        raw: s.to_owned(),
    })
}

fn check_surname(name: &str) -> Result<(), &'static str> {
    if name.is_empty() {
        return Err("empty author name");
    }
    if name.starts_with([' ', '-']) || name.ends_with([' ', '-']) || name.contains("  ") {
        return Err("malformed spacing in author name");
    }
    if name.split(' ').any(|w| w == "and" || w == "et" || w == "al.") {
        return Err("connective inside author name");
    }
    let decoded = fold::decode_latex(name).ok_or("unrecognised escape in author name")?;
    let mut letters = 0;
    for c in decoded.chars() {
        if c.is_alphabetic() {
            letters += 1;
        } else if !(unicode_normalization::char::is_combining_mark(c)
            || fold::is_apostrophe(c)
            || matches!(c, '-' | '.' | ' '))
        {
            return Err("invalid character in author name");
        }
    }
    if letters == 0 {
        return Err("author name has no letters");
    }
    Ok(())
}

/// Fold a token into its comparison key. Idempotent: a key rendered back to
/// text and re-parsed folds to itself.
pub fn normalize(token: &CitationToken) -> NormalizedKey {
    NormalizedKey {
        folded_surnames: token.surnames.iter().map(|s| fold_surname(s)).collect(),
        et_al: token.et_al,
        year: token.year,
    }
}

/// Name and year agreement between a prediction and a reference citation.
///
/// `all_names` requires equal folded surname lists and equal et-al flags.
/// `one_name` holds when the names are not all equal but at least one folded
/// surname is shared; a shared lead surname across differing et-al flags
/// therefore counts as `one_name`.
pub fn overlap(a: &CitationToken, b: &CitationToken) -> OverlapReport {
    let ka = normalize(a);
    let kb = normalize(b);
    let all_names = ka.folded_surnames == kb.folded_surnames && ka.et_al == kb.et_al;
    let set_a: BTreeSet<&String> = ka.folded_surnames.iter().collect();
    let one_name = !all_names && kb.folded_surnames.iter().any(|s| set_a.contains(s));
    OverlapReport {
        all_names,
        one_name,
        year: ka.year == kb.year,
    }
}
