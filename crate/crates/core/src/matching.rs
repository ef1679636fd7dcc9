//! Per-sample lexicon matching: the counting stage of the pipeline.
//!
//! Word tokens are matched whole, never inside a longer token. At each
//! position the longest lexicon n-gram wins and matching resumes after it,
//! so hits never overlap. Unsegmented script runs are searched with the
//! index automaton under the same leftmost-longest rule. Every hit adds one
//! to each class in its class set.

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::lexicon::{normalize_into, normalize_term, ClassSet, GenderClass, MatchIndex};
use crate::segmentation::{self, run_word_estimate, Piece, SpanKind, TokenSpan, WordList};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub fem: u64,
    pub masc: u64,
    pub uns: u64,
    pub words: u64,
    /// At least one lexicon hit in the sample.
    pub matched: bool,
}

impl SampleCounts {
    fn record(&mut self, classes: ClassSet) {
        for class in classes.iter() {
            match class {
                GenderClass::Feminine => self.fem += 1,
                GenderClass::Masculine => self.masc += 1,
                GenderClass::Unspecified => self.uns += 1,
            }
        }
        self.matched = true;
    }
}

/// One lexicon hit with its byte range in the original sample text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchAnnotation {
    /// Normalized lexicon surface that matched.
    pub term: String,
    pub classes: ClassSet,
    pub byte_start: usize,
    pub byte_end: usize,
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    byte_start: usize,
    byte_end: usize,
    term: u32,
}

/// Leftmost-longest scan over a token id sequence; `offsets` holds each
/// token's byte range.
fn scan_ids(
    index: &MatchIndex,
    ids: &[u32],
    offsets: &[(usize, usize)],
    hits: &mut impl FnMut(Hit),
) {
    let mut i = 0;
    while i < ids.len() {
        match index.longest_ngram_at(&ids[i..]) {
            Some((len, term)) => {
                hits(Hit {
                    byte_start: offsets[i].0,
                    byte_end: offsets[i + len - 1].1,
                    term,
                });
                i += len;
            }
            None => i += 1,
        }
    }
}

/// Scans a normalized-on-the-fly run and returns its word estimate.
fn scan_run(
    index: &MatchIndex,
    raw: &str,
    base: usize,
    word_list: Option<&WordList>,
    hits: &mut impl FnMut(Hit),
) -> u64 {
    let normalized = normalize_term(raw, index.config());
    if normalized == raw {
        for (start, end, term) in index.substring_matches(raw) {
            hits(Hit {
                byte_start: base + start,
                byte_end: base + end,
                term,
            });
        }
        return run_word_estimate(raw, word_list);
    }

    // Normalize grapheme by grapheme so matches can be mapped back to the
    // original bytes. `bounds` pairs normalized and raw grapheme offsets.
    let mut text = String::with_capacity(raw.len());
    let mut bounds = Vec::new();
    for (raw_start, grapheme) in raw.grapheme_indices(true) {
        bounds.push((text.len(), raw_start));
        text.push_str(&normalize_term(grapheme, index.config()));
    }
    bounds.push((text.len(), raw.len()));

    for (start, end, term) in index.substring_matches(&text) {
        let first = bounds.partition_point(|&(n, _)| n <= start) - 1;
        let last = bounds.partition_point(|&(n, _)| n < end);
        hits(Hit {
            byte_start: base + bounds[first].1,
            byte_end: base + bounds[last].1,
            term,
        });
    }
    run_word_estimate(&text, word_list)
}

/// Leftmost-longest whole-token matches over delimited-script spans.
/// Script runs in `spans` break n-gram windows and are otherwise ignored.
pub fn scan_tokenized(spans: &[TokenSpan], index: &MatchIndex) -> Vec<MatchAnnotation> {
    let mut out = Vec::new();
    let mut on_hit = |hit: Hit| out.push(annotation(index, hit));
    for group in spans.split(|s| s.kind != SpanKind::Word) {
        let ids: Vec<u32> = group.iter().map(|s| index.token_id(&s.text)).collect();
        let offsets: Vec<(usize, usize)> =
            group.iter().map(|s| (s.byte_start, s.byte_end)).collect();
        scan_ids(index, &ids, &offsets, &mut on_hit);
    }
    out
}

/// Substring matches inside one run of an unsegmented script. `run` is the
/// original text of the run and `base` its byte offset in the sample.
pub fn scan_unsegmented(run: &str, base: usize, index: &MatchIndex) -> Vec<MatchAnnotation> {
    let mut out = Vec::new();
    scan_run(index, run, base, None, &mut |hit| {
        out.push(annotation(index, hit))
    });
    out
}

fn annotation(index: &MatchIndex, hit: Hit) -> MatchAnnotation {
    let (term, classes) = index.term(hit.term);
    MatchAnnotation {
        term: term.to_string(),
        classes,
        byte_start: hit.byte_start,
        byte_end: hit.byte_end,
    }
}

/// Counts lexicon hits per sample against one language's index.
#[derive(Debug, Clone)]
pub struct Matcher {
    index: MatchIndex,
    word_list: Option<WordList>,
}

#[derive(Default)]
struct Scratch<'a> {
    pieces: Vec<Piece<'a>>,
    ids: Vec<u32>,
    offsets: Vec<(usize, usize)>,
    token: String,
}

impl Matcher {
    pub fn new(index: MatchIndex) -> Self {
        Matcher {
            index,
            word_list: None,
        }
    }

    /// Uses `word_list` to estimate word counts inside unsegmented runs.
    pub fn with_word_list(mut self, word_list: WordList) -> Self {
        self.word_list = Some(word_list);
        self
    }

    pub fn index(&self) -> &MatchIndex {
        &self.index
    }

    pub fn language(&self) -> &str {
        self.index.language()
    }

    fn scan(&self, text: &str, mut on_hit: impl FnMut(Hit)) -> u64 {
        let index = &self.index;
        let mut scratch = Scratch::default();
        segmentation::pieces(text, index.kind(), &mut scratch.pieces);

        let mut words = 0;
        for piece in &scratch.pieces {
            match *piece {
                Piece::Word { raw, start } => {
                    normalize_into(raw, index.config(), &mut scratch.token);
                    scratch.ids.push(index.token_id(&scratch.token));
                    scratch.offsets.push((start, start + raw.len()));
                    words += 1;
                }
                Piece::Run { raw, start } => {
                    scan_ids(index, &scratch.ids, &scratch.offsets, &mut on_hit);
                    scratch.ids.clear();
                    scratch.offsets.clear();
                    words += scan_run(index, raw, start, self.word_list.as_ref(), &mut on_hit);
                }
            }
        }
        scan_ids(index, &scratch.ids, &scratch.offsets, &mut on_hit);
        words
    }

    pub fn count_sample(&self, text: &str) -> SampleCounts {
        let mut counts = SampleCounts::default();
        counts.words = self.scan(text, |hit| counts.record(self.index.term(hit.term).1));
        counts
    }

    /// Counts plus the hits that produced them, in text order.
    pub fn annotate_sample(&self, text: &str) -> (SampleCounts, Vec<MatchAnnotation>) {
        let mut counts = SampleCounts::default();
        let mut annotations = Vec::new();
        counts.words = self.scan(text, |hit| {
            counts.record(self.index.term(hit.term).1);
            annotations.push(annotation(&self.index, hit));
        });
        (counts, annotations)
    }
}
