//! Splitting samples into countable word units.
//!
//! Languages written with word delimiters use Unicode default word
//! boundaries (UAX #29); fragments with no letter or digit are dropped.
//! Languages whose script does not delimit words (Han, Kana, Thai) are cut
//! into script runs: runs in those scripts stay whole and are matched by
//! substring search, everything else is tokenized like a delimited language.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::lexicon::{normalize_term, NormalizationConfig};

/// Language codes with a lexicon in the reference 55-language set.
pub const SUPPORTED_LANGUAGES: [&str; 55] = [
    "arb_Arab", "asm_Beng", "bel_Cyrl", "ben_Beng", "bul_Cyrl", "cat_Latn", "ces_Latn", "ckb_Arab",
    "cmn_Hans", "cym_Latn", "dan_Latn", "deu_Latn", "ell_Grek", "eng_Latn", "est_Latn", "fin_Latn",
    "fra_Latn", "gle_Latn", "hin_Deva", "hun_Latn", "ind_Latn", "ita_Latn", "jpn_Jpan", "kat_Geor",
    "khk_Cyrl", "kir_Cyrl", "lit_Latn", "lug_Latn", "lvs_Latn", "mar_Deva", "mlt_Latn", "nld_Latn",
    "pan_Guru", "pes_Arab", "pol_Latn", "por_Latn", "ron_Latn", "rus_Cyrl", "slk_Latn", "slv_Latn",
    "spa_Latn", "swe_Latn", "swh_Latn", "tam_Taml", "tha_Thai", "tur_Latn", "ukr_Cyrl", "urd_Arab",
    "uzn_Latn", "vie_Latn", "yue_Hant", "kan_Knda", "tel_Telu", "tgl_Latn", "zul_Latn",
];

/// Languages whose dominant script has no word delimiters.
pub const UNSEGMENTED_LANGUAGES: [&str; 4] = ["cmn_Hans", "yue_Hant", "jpn_Jpan", "tha_Thai"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentationKind {
    Delimited,
    Unsegmented,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationStrategy {
    pub language: String,
    pub kind: SegmentationKind,
}

impl SegmentationStrategy {
    pub fn delimited(language: impl Into<String>) -> Self {
        SegmentationStrategy {
            language: language.into(),
            kind: SegmentationKind::Delimited,
        }
    }

    pub fn unsegmented(language: impl Into<String>) -> Self {
        SegmentationStrategy {
            language: language.into(),
            kind: SegmentationKind::Unsegmented,
        }
    }
}

pub fn is_supported_language(language: &str) -> bool {
    SUPPORTED_LANGUAGES.contains(&language)
}

/// Picks the matching strategy for a language code. Unknown codes fall back
/// to delimited tokenization with a logged warning.
pub fn detect_strategy(language: &str) -> SegmentationStrategy {
    if UNSEGMENTED_LANGUAGES.contains(&language) {
        return SegmentationStrategy::unsegmented(language);
    }
    if !is_supported_language(language) {
        log::warn!("unknown language code `{language}`, using delimited tokenization");
    }
    SegmentationStrategy::delimited(language)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanKind {
    /// A single normalized word token.
    Word,
    /// A whole run of an unsegmented script, matched by substring search.
    UnsegmentedRun,
}

/// A countable unit with its byte range in the original sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSpan {
    pub text: String,
    pub byte_start: usize,
    pub byte_end: usize,
    pub kind: SpanKind,
}

/// Raw (not yet normalized) piece of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Piece<'a> {
    Word { raw: &'a str, start: usize },
    Run { raw: &'a str, start: usize },
}

pub(crate) fn has_word_char(s: &str) -> bool {
    if s.is_ascii() {
        s.bytes().any(|b| b.is_ascii_alphanumeric())
    } else {
        s.chars().any(char::is_alphanumeric)
    }
}

fn in_unsegmented_block(c: char) -> bool {
    matches!(c as u32,
        0x0E00..=0x0E7F       // Thai
        | 0x2E80..=0x2FDF     // CJK radicals
        | 0x3005 | 0x3007 | 0x3021..=0x3029 | 0x3038..=0x303B
        | 0x3040..=0x309F     // Hiragana
        | 0x30A0..=0x30FF     // Katakana
        | 0x31F0..=0x31FF
        | 0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0xFF66..=0xFF9F     // halfwidth Katakana
        | 0x20000..=0x3134F
    )
}

/// True for letters, digits and combining marks of Han, Kana or Thai.
pub fn is_unsegmented_char(c: char) -> bool {
    in_unsegmented_block(c)
        && (c.is_alphanumeric() || unicode_normalization::char::is_combining_mark(c))
}

fn is_inherited(c: char) -> bool {
    unicode_normalization::char::is_combining_mark(c)
        || matches!(c as u32, 0x200C | 0x200D | 0xFE00..=0xFE0F)
}

fn delimited_pieces<'a>(text: &'a str, offset: usize, out: &mut Vec<Piece<'a>>) {
    for (start, word) in text.split_word_bound_indices() {
        if has_word_char(word) {
            out.push(Piece::Word {
                raw: word,
                start: offset + start,
            });
        }
    }
}

pub(crate) fn pieces<'a>(text: &'a str, kind: SegmentationKind, out: &mut Vec<Piece<'a>>) {
    out.clear();
    match kind {
        SegmentationKind::Delimited => delimited_pieces(text, 0, out),
        SegmentationKind::Unsegmented => {
            let mut run_start = 0;
            let mut run_is_unseg: Option<bool> = None;
            for (idx, c) in text.char_indices() {
                let this = if is_inherited(c) {
                    run_is_unseg.unwrap_or(false)
                } else {
                    is_unsegmented_char(c)
                };
                match run_is_unseg {
                    Some(prev) if prev == this => {}
                    Some(prev) => {
                        push_run(text, run_start, idx, prev, out);
                        run_start = idx;
                        run_is_unseg = Some(this);
                    }
                    None => run_is_unseg = Some(this),
                }
            }
            if let Some(prev) = run_is_unseg {
                push_run(text, run_start, text.len(), prev, out);
            }
        }
    }
}

fn push_run<'a>(text: &'a str, start: usize, end: usize, unseg: bool, out: &mut Vec<Piece<'a>>) {
    let slice = &text[start..end];
    if unseg {
        if slice.chars().any(char::is_alphanumeric) {
            out.push(Piece::Run { raw: slice, start });
        }
    } else {
        delimited_pieces(slice, start, out);
    }
}

/// Splits `text` into word spans (and, for unsegmented languages, script
/// runs) in text order. Each span's text is normalized.
pub fn tokenize_words(
    text: &str,
    strategy: &SegmentationStrategy,
    config: &NormalizationConfig,
) -> Vec<TokenSpan> {
    let mut buf = Vec::new();
    pieces(text, strategy.kind, &mut buf);
    buf.into_iter()
        .map(|piece| match piece {
            Piece::Word { raw, start } => TokenSpan {
                text: normalize_term(raw, config),
                byte_start: start,
                byte_end: start + raw.len(),
                kind: SpanKind::Word,
            },
            Piece::Run { raw, start } => TokenSpan {
                text: normalize_term(raw, config),
                byte_start: start,
                byte_end: start + raw.len(),
                kind: SpanKind::UnsegmentedRun,
            },
        })
        .collect()
}

/// Normalized delimited-script tokens of `text`.
pub fn word_tokens(text: &str, config: &NormalizationConfig) -> Vec<String> {
    let mut buf = Vec::new();
    delimited_pieces(text, 0, &mut buf);
    buf.into_iter()
        .map(|piece| match piece {
            Piece::Word { raw, .. } | Piece::Run { raw, .. } => normalize_term(raw, config),
        })
        .collect()
}

/// Word list used to estimate word counts inside unsegmented runs by greedy
/// longest matching.
#[derive(Debug, Clone, Default)]
pub struct WordList {
    words: HashSet<String>,
    max_graphemes: usize,
}

impl WordList {
    pub fn from_words<I, S>(words: I, config: &NormalizationConfig) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut list = WordList::default();
        for word in words {
            let word = normalize_term(word.as_ref(), config);
            if word.is_empty() {
                continue;
            }
            list.max_graphemes = list.max_graphemes.max(word.graphemes(true).count());
            list.words.insert(word);
        }
        list
    }

    /// One word per line, UTF-8. Blank lines are ignored.
    pub fn from_reader<R: BufRead>(reader: R, config: &NormalizationConfig) -> io::Result<Self> {
        let lines = reader.lines().collect::<io::Result<Vec<_>>>()?;
        Ok(WordList::from_words(lines, config))
    }

    pub fn load(path: &Path, config: &NormalizationConfig) -> io::Result<Self> {
        WordList::from_reader(BufReader::new(File::open(path)?), config)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Number of words in a run: greedy leftmost-longest dictionary matches,
    /// with every unmatched grapheme counted as one word.
    pub fn count_run(&self, run: &str) -> u64 {
        let bounds: Vec<usize> = run
            .grapheme_indices(true)
            .map(|(i, _)| i)
            .chain(std::iter::once(run.len()))
            .collect();
        let graphemes = bounds.len() - 1;
        let mut pos = 0;
        let mut count = 0;
        while pos < graphemes {
            let longest = self.max_graphemes.min(graphemes - pos);
            let step = (2..=longest)
                .rev()
                .find(|&len| self.words.contains(&run[bounds[pos]..bounds[pos + len]]))
                .unwrap_or(1);
            pos += step;
            count += 1;
        }
        count
    }
}

/// Word count of a run when no word list is available: its grapheme count.
pub(crate) fn run_word_estimate(run: &str, word_list: Option<&WordList>) -> u64 {
    match word_list {
        Some(list) => list.count_run(run),
        None => run.graphemes(true).count() as u64,
    }
}

/// Words contributed by the spans of one sample.
pub fn count_words(spans: &[TokenSpan], word_list: Option<&WordList>) -> u64 {
    spans
        .iter()
        .map(|span| match span.kind {
            SpanKind::Word => 1,
            SpanKind::UnsegmentedRun => run_word_estimate(&span.text, word_list),
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> NormalizationConfig {
        NormalizationConfig::default()
    }

    fn texts(spans: &[TokenSpan]) -> Vec<&str> {
        spans.iter().map(|s| s.text.as_str()).collect()
    }

    #[test]
    fn strategies() {
        assert_eq!(
            detect_strategy("spa_Latn").kind,
            SegmentationKind::Delimited
        );
        assert_eq!(
            detect_strategy("tha_Thai").kind,
            SegmentationKind::Unsegmented
        );
        for lang in UNSEGMENTED_LANGUAGES {
            assert_eq!(detect_strategy(lang).kind, SegmentationKind::Unsegmented);
        }
        let unknown = detect_strategy("xx_Latn");
        assert_eq!(unknown.kind, SegmentationKind::Delimited);
        assert!(!is_supported_language("xx_Latn"));
        let unsegmented = SUPPORTED_LANGUAGES
            .iter()
            .filter(|l| detect_strategy(l).kind == SegmentationKind::Unsegmented)
            .count();
        assert_eq!(unsegmented, 4);
    }

    #[test]
    fn simple_sentence() {
        let spans = tokenize_words(
            "my mother was a nurse",
            &detect_strategy("eng_Latn"),
            &cfg(),
        );
        assert_eq!(texts(&spans), ["my", "mother", "was", "a", "nurse"]);
        assert_eq!(count_words(&spans, None), 5);
        assert_eq!((spans[1].byte_start, spans[1].byte_end), (3, 9));
    }

    #[test]
    fn empty_text() {
        assert!(tokenize_words("", &detect_strategy("eng_Latn"), &cfg()).is_empty());
        assert!(tokenize_words("", &detect_strategy("cmn_Hans"), &cfg()).is_empty());
    }

    #[test]
    fn hyphens_split_and_punctuation_drops() {
        let strategy = detect_strategy("eng_Latn");
        let spans = tokenize_words("Mother-of-three Willoughby", &strategy, &cfg());
        assert_eq!(texts(&spans), ["mother", "of", "three", "willoughby"]);
        let spans = tokenize_words(
            "shark injures 13-year-old on lobster dive, ok?!",
            &strategy,
            &cfg(),
        );
        assert_eq!(
            texts(&spans),
            ["shark", "injures", "13", "year", "old", "on", "lobster", "dive", "ok"]
        );
        assert!(tokenize_words("... -- !!", &strategy, &cfg()).is_empty());
    }

    #[test]
    fn han_run_counts_graphemes() {
        let strategy = detect_strategy("cmn_Hans");
        let run = "母亲的威洛比";
        let spans = tokenize_words(run, &strategy, &cfg());
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].kind, SpanKind::UnsegmentedRun);
        let graphemes: Vec<&str> = run.graphemes(true).collect();
        assert_eq!(graphemes.len(), 6);
        assert_eq!(count_words(&spans, None), 6);
    }

    #[test]
    fn mixed_scripts_split_into_runs() {
        let strategy = detect_strategy("cmn_Hans");
        let text = "及其丈夫 Dan Baldwin 十年来，与琼斯";
        let spans = tokenize_words(text, &strategy, &cfg());
        let kinds: Vec<SpanKind> = spans.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            [
                SpanKind::UnsegmentedRun,
                SpanKind::Word,
                SpanKind::Word,
                SpanKind::UnsegmentedRun,
                SpanKind::UnsegmentedRun
            ]
        );
        assert_eq!(
            texts(&spans),
            ["及其丈夫", "dan", "baldwin", "十年来", "与琼斯"]
        );
        for span in &spans {
            assert!(normalize_term(&text[span.byte_start..span.byte_end], &cfg()) == span.text);
        }
        assert_eq!(count_words(&spans, None), 4 + 2 + 3 + 3);
    }

    #[test]
    fn thai_marks_stay_in_run() {
        let strategy = detect_strategy("tha_Thai");
        let spans = tokenize_words("แม่ของฉัน", &strategy, &cfg());
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].text, "แม่ของฉัน");
    }

    #[test]
    fn word_list_greedy_counting() {
        let list = WordList::from_words(["母亲", "孩子", "孩子的"], &cfg());
        // 个 | 孩子的 | 母亲 | 的
        assert_eq!(list.count_run("个孩子的母亲的"), 4);
        assert_eq!(list.count_run(""), 0);
        let spans = tokenize_words("个孩子的母亲的", &detect_strategy("cmn_Hans"), &cfg());
        assert_eq!(count_words(&spans, Some(&list)), 4);
        assert_eq!(count_words(&spans, None), 7);
    }

    #[test]
    fn word_list_reader_skips_blanks() {
        let list = WordList::from_reader("母亲\n\n孩子\n".as_bytes(), &cfg()).unwrap();
        assert_eq!(list.len(), 2);
    }

    proptest! {
        #[test]
        fn ascii_words_match_whitespace_split(words in proptest::collection::vec("[a-zA-Z]{1,8}", 0..20), sep in " {1,3}") {
            let text = words.join(&sep);
            let spans = tokenize_words(&text, &detect_strategy("eng_Latn"), &cfg());
            prop_assert_eq!(spans.len(), text.split_whitespace().count());
        }

        #[test]
        fn spans_are_ordered_and_in_bounds(text in "[a-zé 母亲丈夫。,.\\-ก-ฮ่]{0,40}", unseg in any::<bool>()) {
            let strategy = if unseg { detect_strategy("cmn_Hans") } else { detect_strategy("eng_Latn") };
            let spans = tokenize_words(&text, &strategy, &cfg());
            let mut last_end = 0;
            for span in &spans {
                prop_assert!(span.byte_start >= last_end);
                prop_assert!(span.byte_start < span.byte_end && span.byte_end <= text.len());
                prop_assert!(has_word_char(&span.text));
                last_end = span.byte_end;
            }
            prop_assert_eq!(tokenize_words(&text, &strategy, &cfg()), spans.clone());
            let words = count_words(&spans, None);
            let delimited = spans.iter().filter(|s| s.kind == SpanKind::Word).count() as u64;
            prop_assert!(words >= delimited);
            prop_assert_eq!(words == 0, !text.chars().any(char::is_alphanumeric));
        }
    }
}
