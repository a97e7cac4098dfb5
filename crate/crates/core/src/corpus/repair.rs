use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::RejectReason;
use crate::citegrammar::{self, fold_surname, CitationToken};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    EmptyAuthor,
    AuthorMismatch { metadata: String, surface: String },
    Malformed(citegrammar::FormatError),
}

impl Rejection {
    pub fn reason(&self) -> RejectReason {
        match self {
            Rejection::EmptyAuthor => RejectReason::EmptyAuthor,
            Rejection::AuthorMismatch { .. } => RejectReason::AuthorMismatch,
            Rejection::Malformed(_) => RejectReason::MalformedCitation,
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::EmptyAuthor => f.write_str("empty author name"),
            Rejection::AuthorMismatch { metadata, surface } => {
                write!(f, "metadata {metadata:?} irreconcilable with context form {surface:?}")
            }
            Rejection::Malformed(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for Rejection {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairKind {
    /// Surname spelling taken from the in-context form (diacritics, case).
    SurfaceSpelling,
    /// Two-author order taken from the in-context form.
    PairOrder,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Repaired {
    pub token: CitationToken,
    pub repairs: Vec<RepairKind>,
}

/// True when some author slot of a citation string is empty: `""`,
/// `", 2010"`, `"Smith and , 2010"`, `"et al., 2010"`.
pub fn has_empty_author(s: &str) -> bool {
    let trimmed = s.trim();
    let names = trimmed.rsplit_once(',').map_or(trimmed, |(names, _)| names);
    let mut groups: Vec<usize> = vec![0];
    for word in names.split_whitespace() {
        match word {
            "and" | "&" => groups.push(0),
            "et" | "al." | "al" => {}
            _ => *groups.last_mut().expect("non-empty") += 1,
        }
    }
    groups.contains(&0)
}

fn parse_checked(s: &str) -> Result<CitationToken, Rejection> {
    if has_empty_author(s) {
        return Err(Rejection::EmptyAuthor);
    }
    citegrammar::parse(s).map_err(Rejection::Malformed)
}

fn rebuild(surnames: Vec<String>, et_al: bool, year: u16) -> Result<CitationToken, Rejection> {
    CitationToken::new(surnames, et_al, year).map_err(Rejection::Malformed)
}

/// Reconcile the metadata form of a target citation with the way the citing
/// text writes it.
///
/// With an explicit `surface` form: equal folded names adopt the surface
/// spelling; a two-author citation whose names agree up to order adopts the
/// surface order; anything else is an author mismatch. Without one, single
/// word surnames whose folded form occurs in the context text with a
/// different capitalised spelling adopt that spelling.
pub fn repair_citation(
    target: &str,
    surface: Option<&str>,
    left_text: &str,
    right_text: &str,
) -> Result<Repaired, Rejection> {
    let meta = parse_checked(target)?;
    let mut repairs = Vec::new();

    if let Some(surface) = surface.filter(|s| !s.trim().is_empty()) {
        let surf = parse_checked(surface)?;
        let mismatch = || Rejection::AuthorMismatch {
            metadata: target.to_owned(),
            surface: surface.to_owned(),
        };
        if surf.year != meta.year || surf.et_al != meta.et_al {
            return Err(mismatch());
        }
        let meta_key = meta.key();
        let surf_key = surf.key();
        let same_order = meta_key.folded_surnames == surf_key.folded_surnames;
        let swapped = meta_key.folded_surnames.len() == 2
            && meta_key.folded_surnames[0] == surf_key.folded_surnames[1]
            && meta_key.folded_surnames[1] == surf_key.folded_surnames[0];
        if !(same_order || swapped) {
            return Err(mismatch());
        }
        if swapped && !same_order {
            repairs.push(RepairKind::PairOrder);
        }
        let aligned: Vec<&String> = if swapped && !same_order {
            meta.surnames.iter().rev().collect()
        } else {
            meta.surnames.iter().collect()
        };
        if aligned.iter().zip(&surf.surnames).any(|(m, s)| *m != s) {
            repairs.push(RepairKind::SurfaceSpelling);
        }
        let token = rebuild(surf.surnames, surf.et_al, surf.year)?;
        return Ok(Repaired { token, repairs });
    }

    let spellings = context_spellings(&meta, left_text, right_text);
    let mut surnames = meta.surnames.clone();
    for (slot, spelling) in surnames.iter_mut().zip(spellings) {
        if let Some(spelling) = spelling {
            *slot = spelling;
            if !repairs.contains(&RepairKind::SurfaceSpelling) {
                repairs.push(RepairKind::SurfaceSpelling);
            }
        }
    }
    let token = rebuild(surnames, meta.et_al, meta.year)?;
    Ok(Repaired { token, repairs })
}

/// For each surname, the most frequent differing spelling of it in the text.
fn context_spellings(meta: &CitationToken, left: &str, right: &str) -> Vec<Option<String>> {
    meta.surnames
        .iter()
        .map(|name| {
            if name.contains(' ') {
                return None;
            }
            let folded = fold_surname(name);
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for word in left.split_whitespace().chain(right.split_whitespace()) {
                let word = word.trim_matches(|c: char| !(c.is_alphanumeric() || c == '\\' || c == '{' || c == '}'));
                if word.is_empty() || word == name || !word.starts_with(char::is_uppercase) {
                    continue;
                }
                if fold_surname(word) == folded && citegrammar::parse(&format!("{word}, 2000")).is_ok() {
                    *counts.entry(word).or_default() += 1;
                }
            }
            counts
                .into_iter()
                .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(a.0)))
                .map(|(w, _)| w.to_owned())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diacritics_from_surface() {
        let r = repair_citation("Petrovic et al., 2010", Some("Petrović et al., 2010"), "", "").unwrap();
        assert_eq!(r.token.surnames, ["Petrović"]);
        assert_eq!(r.token.key().folded_surnames, ["petrovic"]);
        assert!(r.token.et_al);
        assert_eq!(r.token.year, 2010);
        assert_eq!(r.repairs, [RepairKind::SurfaceSpelling]);
    }

    #[test]
    fn pair_order_from_surface() {
        let r = repair_citation("Zeinalian and Rivera, 2016", Some("Rivera and Zeinalian, 2016"), "", "").unwrap();
        assert_eq!(r.token.surnames, ["Rivera", "Zeinalian"]);
        assert_eq!(r.token.year, 2016);
        assert_eq!(r.repairs, [RepairKind::PairOrder]);
    }

    #[test]
    fn diacritics_from_context_text() {
        let r = repair_citation(
            "Petrovic et al., 2010",
            None,
            "first story detection as in Petrović and colleagues ",
            " shows",
        )
        .unwrap();
        assert_eq!(r.token.canonical(), "Petrović et al., 2010");
        assert_eq!(r.repairs, [RepairKind::SurfaceSpelling]);
    }

    #[test]
    fn untouched_when_consistent() {
        let r = repair_citation("Yao and Zweig, 2015", Some("Yao and Zweig, 2015"), "", "").unwrap();
        assert!(r.repairs.is_empty());
        let r = repair_citation("Yao and Zweig, 2015", None, "Yao showed", "").unwrap();
        assert!(r.repairs.is_empty());
    }

    #[test]
    fn rejections() {
        assert_eq!(repair_citation("", None, "", ""), Err(Rejection::EmptyAuthor));
        assert_eq!(repair_citation(", 2010", None, "", ""), Err(Rejection::EmptyAuthor));
        assert_eq!(repair_citation("Smith and , 2010", None, "", ""), Err(Rejection::EmptyAuthor));
        assert_eq!(repair_citation("et al., 2010", None, "", ""), Err(Rejection::EmptyAuthor));
        assert!(matches!(
            repair_citation("Smith, 2010", Some("Jones, 2010"), "", ""),
            Err(Rejection::AuthorMismatch { .. })
        ));
        assert!(matches!(
            repair_citation("Smith, 2010", Some("Smith, 2011"), "", ""),
            Err(Rejection::AuthorMismatch { .. })
        ));
        assert!(matches!(repair_citation("Smith 2010", None, "", ""), Err(Rejection::Malformed(_))));
    }

    #[test]
    fn idempotent() {
        let first = repair_citation("Zeinalian and Rivera, 2016", Some("Rivera and Zeinalian, 2016"), "", "").unwrap();
        let second = repair_citation(&first.token.raw, Some("Rivera and Zeinalian, 2016"), "", "").unwrap();
        assert_eq!(first.token, second.token);
        assert!(second.repairs.is_empty());
    }
}
