//! Gender representation statistics for multilingual text corpora.
//!
//! The crate measures how often gendered person nouns from a per-language
//! lexicon occur in a corpus. Counting happens per sample (a sentence or a
//! document); the per-sample counts are merged and turned into class scores
//! expressed as a percentage of all words, the feminine/masculine gap with
//! its standard error, a skew label, and the share of samples that matched.
//!
//! The building blocks, bottom-up:
//!
//! * [`lexicon`]: TSV lexicon parsing, normalization, validation and the
//!   immutable [`MatchIndex`](lexicon::MatchIndex).
//! * [`segmentation`]: word tokenization and word counting for delimited and
//!   unsegmented scripts.
//! * [`matching`]: per-sample leftmost-longest lexicon matching.
//! * [`statistics`]: mergeable counters and the derived report.
//! * [`ingestion`]: streaming plain-text / JSONL corpora, gzip aware.
//! * [`reporting`]: TSV, JSON and Markdown tables plus explain-mode output.
//! * [`pipeline`]: the parallel count-then-reduce driver used by the CLI.

pub mod ingestion;
pub mod lexicon;
pub mod matching;
pub mod pipeline;
pub mod reporting;
pub mod segmentation;
pub mod statistics;

pub use lexicon::{
    normalize_term, parse_lexicon, ClassSet, GenderClass, Lexicon, LexiconEntry, MatchIndex,
    NormalizationConfig,
};
pub use matching::{MatchAnnotation, Matcher, SampleCounts};
pub use segmentation::{detect_strategy, SegmentationKind, SegmentationStrategy, TokenSpan};
pub use statistics::{finalize, GenderCounts, GenderReport, Skew};
