use std::collections::HashMap;

use aho_corasick::{AhoCorasick, MatchKind};

use super::{normalize_term, ClassSet, Lexicon, NormalizationConfig};
use crate::segmentation::{
    is_unsegmented_char, word_tokens, SegmentationKind, SegmentationStrategy,
};

/// Token id used for corpus tokens that appear in no lexicon entry.
pub(crate) const UNKNOWN_TOKEN: u32 = u32::MAX;

/// Immutable lookup structures for one language's lexicon.
///
/// Entries written in Han, Kana or Thai go into a leftmost-longest substring
/// automaton when the language is unsegmented; every other entry is keyed by
/// its token sequence. Each entry lives in exactly one of the two.
#[derive(Debug, Clone)]
pub struct MatchIndex {
    language: String,
    kind: SegmentationKind,
    config: NormalizationConfig,
    /// Indexed terms: normalized surface and classes.
    terms: Vec<(String, ClassSet)>,
    vocab: HashMap<String, u32>,
    ngrams: HashMap<Vec<u32>, u32>,
    max_ngram: usize,
    automaton: Option<AhoCorasick>,
    /// Term id for each automaton pattern id.
    pattern_terms: Vec<u32>,
    pattern_lookup: HashMap<String, u32>,
}

impl MatchIndex {
    pub fn build(lexicon: &Lexicon, strategy: &SegmentationStrategy) -> MatchIndex {
        let mut index = MatchIndex {
            language: lexicon.language().to_string(),
            kind: strategy.kind,
            config: *lexicon.config(),
            terms: Vec::with_capacity(lexicon.len()),
            vocab: HashMap::new(),
            ngrams: HashMap::new(),
            max_ngram: 0,
            automaton: None,
            pattern_terms: Vec::new(),
            pattern_lookup: HashMap::new(),
        };

        let mut patterns = Vec::new();
        for entry in lexicon.entries() {
            let substring_entry = strategy.kind == SegmentationKind::Unsegmented
                && entry.surface.chars().any(is_unsegmented_char);
            if substring_entry {
                let id = index.terms.len() as u32;
                index.terms.push((entry.surface.clone(), entry.classes));
                index.pattern_terms.push(id);
                index.pattern_lookup.insert(entry.surface.clone(), id);
                patterns.push(entry.surface.clone());
                continue;
            }

            let key: Vec<u32> = entry
                .tokens
                .iter()
                .map(|token| {
                    let next = index.vocab.len() as u32;
                    *index.vocab.entry(token.clone()).or_insert(next)
                })
                .collect();
            if key.is_empty() {
                continue;
            }
            // Distinct surfaces can share a token sequence ("step-mother" and
            // "step mother"); they become one key carrying both class sets.
            match index.ngrams.get(&key) {
                Some(&id) => {
                    let term = &mut index.terms[id as usize];
                    term.1 = term.1.union(entry.classes);
                }
                None => {
                    let id = index.terms.len() as u32;
                    index.terms.push((entry.surface.clone(), entry.classes));
                    index.max_ngram = index.max_ngram.max(key.len());
                    index.ngrams.insert(key, id);
                }
            }
        }

        if !patterns.is_empty() {
            let automaton = AhoCorasick::builder()
                .match_kind(MatchKind::LeftmostLongest)
                .build(&patterns)
                .expect("lexicon patterns fit the automaton size limits");
            index.automaton = Some(automaton);
        }
        index
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn kind(&self) -> SegmentationKind {
        self.kind
    }

    pub fn config(&self) -> &NormalizationConfig {
        &self.config
    }

    /// Longest indexed token sequence.
    pub fn max_ngram(&self) -> usize {
        self.max_ngram
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of entries held in the token n-gram table.
    pub fn ngram_entries(&self) -> usize {
        self.ngrams.len()
    }

    /// Number of entries held in the substring automaton.
    pub fn substring_entries(&self) -> usize {
        self.pattern_terms.len()
    }

    pub fn term(&self, id: u32) -> (&str, ClassSet) {
        let (surface, classes) = &self.terms[id as usize];
        (surface, *classes)
    }

    /// Classes of an exact lexicon term, routed to whichever structure holds it.
    pub fn lookup(&self, term: &str) -> Option<ClassSet> {
        let surface = normalize_term(term, &self.config);
        if let Some(&id) = self.pattern_lookup.get(&surface) {
            return Some(self.terms[id as usize].1);
        }
        let key: Option<Vec<u32>> = word_tokens(&surface, &self.config)
            .iter()
            .map(|t| self.vocab.get(t).copied())
            .collect();
        key.and_then(|k| self.ngrams.get(&k))
            .map(|&id| self.terms[id as usize].1)
    }

    /// Id of a normalized token, or [`UNKNOWN_TOKEN`].
    pub(crate) fn token_id(&self, normalized: &str) -> u32 {
        self.vocab.get(normalized).copied().unwrap_or(UNKNOWN_TOKEN)
    }

    /// Longest n-gram starting at `ids[0]`, as `(length, term id)`.
    pub(crate) fn longest_ngram_at(&self, ids: &[u32]) -> Option<(usize, u32)> {
        if ids.first().is_none_or(|&id| id == UNKNOWN_TOKEN) {
            return None;
        }
        let known = ids
            .iter()
            .take(self.max_ngram)
            .take_while(|&&id| id != UNKNOWN_TOKEN)
            .count();
        (1..=known)
            .rev()
            .find_map(|n| self.ngrams.get(&ids[..n]).map(|&id| (n, id)))
    }

    /// Leftmost-longest, non-overlapping substring matches in a normalized
    /// run, as `(start, end, term id)` byte ranges into `run`.
    pub(crate) fn substring_matches<'a>(
        &'a self,
        run: &'a str,
    ) -> impl Iterator<Item = (usize, usize, u32)> + 'a {
        self.automaton.iter().flat_map(move |automaton| {
            automaton.find_iter(run).map(move |m| {
                (
                    m.start(),
                    m.end(),
                    self.pattern_terms[m.pattern().as_usize()],
                )
            })
        })
    }
}
