use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use super::{GenderClass, GrammaticalNumber, Lexicon};
use crate::segmentation::{detect_strategy, SegmentationKind};

/// Entries this many times above the mean lexicon size are reported.
pub const SIZE_OUTLIER_FACTOR: f64 = 3.0;

/// Terms this short (in graphemes) are ambiguous in delimited scripts.
const SHORT_TERM_GRAPHEMES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuspicionReason {
    ShortTerm,
    ContainsDigit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuspiciousEntry {
    pub surface: String,
    pub reason: SuspicionReason,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumberBreakdown {
    pub singular: usize,
    pub plural: usize,
    pub untagged: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub language: String,
    pub entries: usize,
    /// Entries per class; a multi-class entry counts once in each class.
    pub feminine: usize,
    pub masculine: usize,
    pub unspecified: usize,
    pub multi_class: usize,
    pub by_token_length: BTreeMap<usize, usize>,
    pub by_class_and_number: BTreeMap<GenderClass, NumberBreakdown>,
    pub suspicious: Vec<SuspiciousEntry>,
}

impl ValidationReport {
    pub fn class_count(&self, class: GenderClass) -> usize {
        match class {
            GenderClass::Feminine => self.feminine,
            GenderClass::Masculine => self.masculine,
            GenderClass::Unspecified => self.unspecified,
        }
    }
}

pub fn validate_lexicon(lexicon: &Lexicon) -> ValidationReport {
    let delimited = detect_strategy(lexicon.language()).kind == SegmentationKind::Delimited;
    let mut report = ValidationReport {
        language: lexicon.language().to_string(),
        entries: lexicon.len(),
        feminine: 0,
        masculine: 0,
        unspecified: 0,
        multi_class: 0,
        by_token_length: BTreeMap::new(),
        by_class_and_number: GenderClass::ALL
            .into_iter()
            .map(|c| (c, NumberBreakdown::default()))
            .collect(),
        suspicious: Vec::new(),
    };

    for entry in lexicon.entries() {
        for class in entry.classes.iter() {
            match class {
                GenderClass::Feminine => report.feminine += 1,
                GenderClass::Masculine => report.masculine += 1,
                GenderClass::Unspecified => report.unspecified += 1,
            }
            let breakdown = report.by_class_and_number.entry(class).or_default();
            match entry.number {
                Some(GrammaticalNumber::Singular) => breakdown.singular += 1,
                Some(GrammaticalNumber::Plural) => breakdown.plural += 1,
                None => breakdown.untagged += 1,
            }
        }
        if entry.classes.len() > 1 {
            report.multi_class += 1;
        }
        *report
            .by_token_length
            .entry(entry.tokens.len())
            .or_default() += 1;

        if delimited && entry.surface.graphemes(true).count() <= SHORT_TERM_GRAPHEMES {
            report.suspicious.push(SuspiciousEntry {
                surface: entry.surface.clone(),
                reason: SuspicionReason::ShortTerm,
            });
        }
        if entry.surface.chars().any(|c| c.is_numeric()) {
            report.suspicious.push(SuspiciousEntry {
                surface: entry.surface.clone(),
                reason: SuspicionReason::ContainsDigit,
            });
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeOutlier {
    pub language: String,
    pub entries: usize,
    pub mean_entries: f64,
    pub ratio: f64,
}

/// Lexicons whose size is at least `factor` times the mean over `reports`.
/// Informational: large lexicons usually list inflected case forms.
pub fn flag_size_outliers(reports: &[ValidationReport], factor: f64) -> Vec<SizeOutlier> {
    if reports.is_empty() {
        return Vec::new();
    }
    let mean = reports.iter().map(|r| r.entries as f64).sum::<f64>() / reports.len() as f64;
    if mean == 0.0 {
        return Vec::new();
    }
    reports
        .iter()
        .filter(|r| r.entries as f64 >= factor * mean)
        .map(|r| SizeOutlier {
            language: r.language.clone(),
            entries: r.entries,
            mean_entries: mean,
            ratio: r.entries as f64 / mean,
        })
        .collect()
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lexicon {}: {} entries", self.language, self.entries)?;
        writeln!(
            f,
            "  feminine {}  masculine {}  unspecified {}  (multi-class {})",
            self.feminine, self.masculine, self.unspecified, self.multi_class
        )?;
        for (class, n) in &self.by_class_and_number {
            writeln!(
                f,
                "  {:<12} singular {:>4}  plural {:>4}  untagged {:>4}",
                class.as_str(),
                n.singular,
                n.plural,
                n.untagged
            )?;
        }
        let lengths: Vec<String> = self
            .by_token_length
            .iter()
            .map(|(len, n)| format!("{len}:{n}"))
            .collect();
        writeln!(f, "  token lengths {}", lengths.join(" "))?;
        for s in &self.suspicious {
            let why = match s.reason {
                SuspicionReason::ShortTerm => "short term, likely ambiguous",
                SuspicionReason::ContainsDigit => "contains a digit",
            };
            writeln!(f, "  suspicious `{}`: {why}", s.surface)?;
        }
        Ok(())
    }
}
