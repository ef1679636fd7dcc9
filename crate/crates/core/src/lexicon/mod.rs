//! Gendered-noun lexicons: the class model, term normalization, the TSV
//! file format, validation, and the lookup index used by the matcher.
//!
//! A lexicon file holds one entry per line:
//!
//! ```text
//! # comment
//! abuelos	masculine;unspecified	plural
//! ```
//!
//! The first column is the term, the second a `;`-separated list of gender
//! classes, and the optional third column tags grammatical number. Terms are
//! normalized on load and repeated terms have their class sets unioned.

#![allow(clippy::tabs_in_doc_comments)]

mod index;
mod validate;

pub use index::MatchIndex;
pub use validate::{
    flag_size_outliers, validate_lexicon, SizeOutlier, SuspicionReason, SuspiciousEntry,
    ValidationReport, SIZE_OUTLIER_FACTOR,
};

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::segmentation;

/// Semantic gender class of a person noun.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenderClass {
    Feminine,
    Masculine,
    Unspecified,
}

impl GenderClass {
    pub const ALL: [GenderClass; 3] = [
        GenderClass::Feminine,
        GenderClass::Masculine,
        GenderClass::Unspecified,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GenderClass::Feminine => "feminine",
            GenderClass::Masculine => "masculine",
            GenderClass::Unspecified => "unspecified",
        }
    }

    fn bit(self) -> u8 {
        match self {
            GenderClass::Feminine => 0b001,
            GenderClass::Masculine => 0b010,
            GenderClass::Unspecified => 0b100,
        }
    }
}

impl fmt::Display for GenderClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown gender class `{0}`")]
pub struct UnknownClass(pub String);

impl FromStr for GenderClass {
    type Err = UnknownClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "feminine" | "fem" | "f" => Ok(GenderClass::Feminine),
            "masculine" | "masc" | "m" => Ok(GenderClass::Masculine),
            "unspecified" | "uns" | "u" => Ok(GenderClass::Unspecified),
            _ => Err(UnknownClass(s.to_string())),
        }
    }
}

/// A subset of the three gender classes, stored as a bit set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ClassSet(u8);

impl ClassSet {
    pub const EMPTY: ClassSet = ClassSet(0);

    pub fn single(class: GenderClass) -> Self {
        ClassSet(class.bit())
    }

    pub fn insert(&mut self, class: GenderClass) {
        self.0 |= class.bit();
    }

    pub fn contains(self, class: GenderClass) -> bool {
        self.0 & class.bit() != 0
    }

    pub fn union(self, other: ClassSet) -> ClassSet {
        ClassSet(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Members in canonical order (feminine, masculine, unspecified).
    pub fn iter(self) -> impl Iterator<Item = GenderClass> {
        GenderClass::ALL
            .into_iter()
            .filter(move |c| self.contains(*c))
    }
}

impl FromIterator<GenderClass> for ClassSet {
    fn from_iter<I: IntoIterator<Item = GenderClass>>(iter: I) -> Self {
        let mut set = ClassSet::EMPTY;
        for class in iter {
            set.insert(class);
        }
        set
    }
}

impl fmt::Display for ClassSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, class) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            f.write_str(class.as_str())?;
        }
        Ok(())
    }
}

impl Serialize for ClassSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for ClassSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let classes = Vec::<GenderClass>::deserialize(deserializer)?;
        Ok(classes.into_iter().collect())
    }
}

/// Grammatical number tag carried by an optional third lexicon column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrammaticalNumber {
    Singular,
    Plural,
}

impl GrammaticalNumber {
    pub fn as_str(self) -> &'static str {
        match self {
            GrammaticalNumber::Singular => "singular",
            GrammaticalNumber::Plural => "plural",
        }
    }
}

impl FromStr for GrammaticalNumber {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "singular" | "sg" => Ok(GrammaticalNumber::Singular),
            "plural" | "pl" => Ok(GrammaticalNumber::Plural),
            other => Err(format!("unknown number tag `{other}`")),
        }
    }
}

/// Controls how lexicon terms and corpus tokens are canonicalized.
///
/// Both sides of a match must be normalized with the same configuration;
/// [`MatchIndex`] stores the one it was built with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationConfig {
    /// Apply Unicode default case folding (no locale tailoring).
    pub case_fold: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig { case_fold: true }
    }
}

/// Canonical form of a term or token: NFC, default case folded, trimmed,
/// with internal whitespace runs collapsed to one space.
pub fn normalize_term(raw: &str, config: &NormalizationConfig) -> String {
    let mut out = String::with_capacity(raw.len());
    normalize_into(raw, config, &mut out);
    out
}

/// Same as [`normalize_term`] but writes into a reusable buffer.
pub(crate) fn normalize_into(raw: &str, config: &NormalizationConfig, out: &mut String) {
    out.clear();
    if raw.is_ascii() {
        for word in raw.split_whitespace() {
            if !out.is_empty() {
                out.push(' ');
            }
            if config.case_fold {
                out.extend(word.bytes().map(|b| b.to_ascii_lowercase() as char));
            } else {
                out.push_str(word);
            }
        }
        return;
    }

    let composed: String = raw.nfc().collect();
    let canonical = if config.case_fold {
        // Folding can produce decomposed sequences (e.g. U+01F0), so recompose.
        caseless::default_case_fold_str(&composed).nfc().collect()
    } else {
        composed
    };
    for word in canonical.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
}

/// One normalized lexicon term and the classes it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub surface: String,
    /// Word tokens of `surface` under delimited-script tokenization.
    pub tokens: Vec<String>,
    pub classes: ClassSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub number: Option<GrammaticalNumber>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LexiconWarning {
    EmptyLexicon,
}

/// All entries for one language, with unique surfaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    language: String,
    config: NormalizationConfig,
    entries: Vec<LexiconEntry>,
    positions: HashMap<String, usize>,
    max_ngram: usize,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("term `{0}` is empty or has no letters or digits after normalization")]
    InvalidTerm(String),
    #[error("no lexicon for `{language}` at {}", path.display())]
    Missing { language: String, path: PathBuf },
    #[error("reading lexicon: {0}")]
    Io(#[from] std::io::Error),
}

impl Lexicon {
    pub fn new(language: impl Into<String>, config: NormalizationConfig) -> Self {
        Lexicon {
            language: language.into(),
            config,
            entries: Vec::new(),
            positions: HashMap::new(),
            max_ngram: 0,
        }
    }

    /// Builds a lexicon from `(term, classes)` pairs, unioning duplicates.
    pub fn from_terms<'a, I>(
        language: impl Into<String>,
        config: NormalizationConfig,
        terms: I,
    ) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (&'a str, ClassSet)>,
    {
        let mut lexicon = Lexicon::new(language, config);
        for (term, classes) in terms {
            lexicon.insert(term, classes, None)?;
        }
        Ok(lexicon)
    }

    /// Adds a term. Repeated surfaces accumulate classes; the first number
    /// tag seen for a surface is kept.
    pub fn insert(
        &mut self,
        raw_term: &str,
        classes: ClassSet,
        number: Option<GrammaticalNumber>,
    ) -> Result<(), LexiconError> {
        let surface = normalize_term(raw_term, &self.config);
        if !surface.chars().any(char::is_alphanumeric) {
            return Err(LexiconError::InvalidTerm(raw_term.to_string()));
        }
        if let Some(&pos) = self.positions.get(&surface) {
            let entry = &mut self.entries[pos];
            entry.classes = entry.classes.union(classes);
            if entry.number.is_none() {
                entry.number = number;
            }
            return Ok(());
        }
        let tokens: Vec<String> = segmentation::word_tokens(&surface, &self.config);
        self.max_ngram = self.max_ngram.max(tokens.len());
        self.positions.insert(surface.clone(), self.entries.len());
        self.entries.push(LexiconEntry {
            surface,
            tokens,
            classes,
            number,
        });
        Ok(())
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn config(&self) -> &NormalizationConfig {
        &self.config
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Longest entry in word tokens.
    pub fn max_ngram(&self) -> usize {
        self.max_ngram
    }

    /// Classes of a term, normalizing the query first.
    pub fn classes_of(&self, term: &str) -> Option<ClassSet> {
        let surface = normalize_term(term, &self.config);
        self.positions
            .get(&surface)
            .map(|&pos| self.entries[pos].classes)
    }

    pub fn warnings(&self) -> Vec<LexiconWarning> {
        if self.entries.is_empty() {
            vec![LexiconWarning::EmptyLexicon]
        } else {
            Vec::new()
        }
    }

    /// Entries keyed by surface, independent of insertion order.
    pub fn to_sorted_pairs(&self) -> Vec<(String, ClassSet)> {
        let mut pairs: Vec<_> = self
            .entries
            .iter()
            .map(|e| (e.surface.clone(), e.classes))
            .collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        pairs
    }
}

/// Reads a TSV lexicon. See the module docs for the line format.
pub fn parse_lexicon<R: BufRead>(
    source: R,
    language: &str,
    config: &NormalizationConfig,
) -> Result<Lexicon, LexiconError> {
    let mut lexicon = Lexicon::new(language, *config);
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = if line_no == 1 {
            line.trim_start_matches('\u{feff}')
        } else {
            line.as_str()
        };
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }

        let columns: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&columns.len()) {
            return Err(LexiconError::MalformedLine {
                line: line_no,
                reason: format!(
                    "expected 2 or 3 tab-separated columns, found {}",
                    columns.len()
                ),
            });
        }

        let mut classes = ClassSet::EMPTY;
        for name in columns[1].split(';').filter(|s| !s.trim().is_empty()) {
            let class = name
                .parse::<GenderClass>()
                .map_err(|e| LexiconError::MalformedLine {
                    line: line_no,
                    reason: e.to_string(),
                })?;
            classes.insert(class);
        }
        if classes.is_empty() {
            return Err(LexiconError::MalformedLine {
                line: line_no,
                reason: "no gender class given".to_string(),
            });
        }

        let number = match columns.get(2).map(|s| s.trim()) {
            None | Some("") => None,
            Some(tag) => Some(tag.parse::<GrammaticalNumber>().map_err(|reason| {
                LexiconError::MalformedLine {
                    line: line_no,
                    reason,
                }
            })?),
        };

        lexicon
            .insert(columns[0], classes, number)
            .map_err(|e| match e {
                LexiconError::InvalidTerm(_) => LexiconError::MalformedLine {
                    line: line_no,
                    reason: e.to_string(),
                },
                other => other,
            })?;
    }

    if lexicon.is_empty() {
        log::warn!("lexicon for {language} has no entries");
    }
    Ok(lexicon)
}

/// Serializes a lexicon back to the TSV format accepted by [`parse_lexicon`].
pub fn render_lexicon(lexicon: &Lexicon) -> String {
    let mut out = String::new();
    for entry in lexicon.entries() {
        out.push_str(&entry.surface);
        out.push('\t');
        out.push_str(&entry.classes.to_string());
        if let Some(number) = entry.number {
            out.push('\t');
            out.push_str(number.as_str());
        }
        out.push('\n');
    }
    out
}

/// Path of the lexicon file for `language` inside `dir`.
pub fn lexicon_path(dir: &Path, language: &str) -> PathBuf {
    dir.join(format!("{language}.tsv"))
}

/// Loads `<dir>/<language>.tsv`.
pub fn load_lexicon(
    dir: &Path,
    language: &str,
    config: &NormalizationConfig,
) -> Result<Lexicon, LexiconError> {
    let path = lexicon_path(dir, language);
    let file = File::open(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => LexiconError::Missing {
            language: language.to_string(),
            path: path.clone(),
        },
        _ => LexiconError::Io(e),
    })?;
    parse_lexicon(BufReader::new(file), language, config)
}
