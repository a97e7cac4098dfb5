use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Dataset, LocalContext, PaperMeta};
use crate::citegrammar::{CitationToken, NormalizedKey};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntry {
    /// Canonical surface form, taken from the lowest context id citing it.
    pub display: String,
    pub paper_ids: BTreeSet<String>,
    #[serde(skip)]
    first_context: String,
}

impl PoolEntry {
    fn merge(&mut self, other: PoolEntry) {
        if other.first_context < self.first_context {
            self.display = other.display;
            self.first_context = other.first_context;
        }
        self.paper_ids.extend(other.paper_ids);
    }
}

/// Distinct normalized ground-truth citations of a dataset; the reference
/// set for hallucination judgements.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CitationPool {
    pub dataset: Option<Dataset>,
    pub entries: BTreeMap<NormalizedKey, PoolEntry>,
}

impl CitationPool {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, key: &NormalizedKey) -> bool {
        self.entries.contains_key(key)
    }

    pub fn contains_token(&self, token: &CitationToken) -> bool {
        self.contains(&token.key())
    }

    /// Attach papers whose author-date key is in the pool. Returns the number
    /// of entries that still have no paper.
    pub fn link_papers(&mut self, papers: &[PaperMeta]) -> usize {
        for paper in papers {
            if let Some(entry) = paper.citation_key().and_then(|k| self.entries.get_mut(&k)) {
                entry.paper_ids.insert(paper.paper_id.clone());
            }
        }
        self.unlinked()
    }

    pub fn unlinked(&self) -> usize {
        self.entries.values().filter(|e| e.paper_ids.is_empty()).count()
    }

    /// Entries in key order; ordinals used by the retriever follow this order.
    pub fn iter(&self) -> impl Iterator<Item = (&NormalizedKey, &PoolEntry)> {
        self.entries.iter()
    }
}

fn single(ctx: &LocalContext) -> BTreeMap<NormalizedKey, PoolEntry> {
    let entry = PoolEntry {
        display: ctx.ground_truth.canonical(),
        paper_ids: ctx.cited_paper_id.iter().cloned().collect(),
        first_context: ctx.context_id.clone(),
    };
    BTreeMap::from([(ctx.key(), entry)])
}

fn union(
    mut a: BTreeMap<NormalizedKey, PoolEntry>,
    b: BTreeMap<NormalizedKey, PoolEntry>,
) -> BTreeMap<NormalizedKey, PoolEntry> {
    for (key, entry) in b {
        match a.get_mut(&key) {
            Some(existing) => existing.merge(entry),
            None => {
                a.insert(key, entry);
            }
        }
    }
    a
}

/// Pool of the distinct ground-truth keys of `contexts`. The result does not
/// depend on input order.
pub fn build_pool(contexts: &[LocalContext]) -> CitationPool {
    let entries = contexts
        .par_iter()
        .map(single)
        .reduce(BTreeMap::new, union);
    let mut datasets: BTreeSet<Dataset> = contexts.iter().map(|c| c.dataset).collect();
    let dataset = if datasets.len() == 1 { datasets.pop_first() } else { None };
    CitationPool { dataset, entries }
}

/// Pool over bare citation tokens, displayed as their first occurrence.
pub fn build_pool_from_tokens(tokens: &[CitationToken]) -> CitationPool {
    let mut entries = BTreeMap::new();
    for token in tokens {
        entries.entry(token.key()).or_insert_with(|| PoolEntry {
            display: token.canonical(),
            paper_ids: BTreeSet::new(),
            first_context: String::new(),
        });
    }
    CitationPool { dataset: None, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::citegrammar::parse;

    fn ctx(id: &str, gt: &str) -> LocalContext {
        LocalContext {
            context_id: id.into(),
            dataset: Dataset::Custom,
            left_text: "l".into(),
            right_text: "r".into(),
            ground_truth: parse(gt).unwrap(),
            citing_paper_id: None,
            cited_paper_id: None,
        }
    }

    #[test]
    fn single_context() {
        let pool = build_pool(&[ctx("a", "Yao and Zweig, 2015")]);
        assert_eq!(pool.len(), 1);
        assert_eq!(pool.dataset, Some(Dataset::Custom));
    }

    #[test]
    fn folded_duplicates_collapse_and_display_is_order_independent() {
        let a = ctx("b", "Petrovic et al., 2010");
        let b = ctx("a", "Petrović et al., 2010");
        let c = ctx("c", "Talbot and Brants, 2008");
        let p1 = build_pool(&[a.clone(), b.clone(), c.clone()]);
        let p2 = build_pool(&[c, b, a]);
        assert_eq!(p1.len(), 2);
        assert_eq!(p1, p2);
        let key = parse("petrovic et al., 2010").unwrap().key();
        assert_eq!(p1.entries[&key].display, "Petrović et al., 2010");
    }

    #[test]
    fn links_papers_by_author_date_key() {
        let mut pool = build_pool(&[ctx("a", "Talbot and Brants, 2008"), ctx("b", "Och, 2003")]);
        let papers = vec![PaperMeta {
            paper_id: "P08-1058".into(),
            title: "Randomized Language Models via Perfect Hash Functions".into(),
            abstract_text: String::new(),
            author_surnames: vec!["Talbot".into(), "Brants".into()],
            year: 2008,
        }];
        assert_eq!(pool.link_papers(&papers), 1);
        let key = parse("Talbot and Brants, 2008").unwrap().key();
        assert!(pool.entries[&key].paper_ids.contains("P08-1058"));
    }
}
