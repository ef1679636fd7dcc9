//! Aggregation and the derived per-language statistics.
//!
//! Scores are percentages of all words. The standard error attached to the
//! feminine/masculine gap is the two-proportion standard error computed on
//! the proportions themselves (not on percentages), which is the scale the
//! published tables print and the scale the skew rule compares against.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::SampleCounts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("counter overflow while merging gender counts")]
pub struct CountOverflow;

/// Mergeable totals for a corpus or a shard of it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GenderCounts {
    pub fem: u64,
    pub masc: u64,
    pub uns: u64,
    pub words: u64,
    pub samples: u64,
    pub samples_matched: u64,
}

impl GenderCounts {
    pub const ZERO: GenderCounts = GenderCounts {
        fem: 0,
        masc: 0,
        uns: 0,
        words: 0,
        samples: 0,
        samples_matched: 0,
    };

    /// Adds one sample's counts.
    pub fn add_sample(&mut self, sample: &SampleCounts) -> Result<(), CountOverflow> {
        *self = merge(
            self,
            &GenderCounts {
                fem: sample.fem,
                masc: sample.masc,
                uns: sample.uns,
                words: sample.words,
                samples: 1,
                samples_matched: u64::from(sample.matched),
            },
        )?;
        Ok(())
    }
}

/// Field-wise sum.
pub fn merge(a: &GenderCounts, b: &GenderCounts) -> Result<GenderCounts, CountOverflow> {
    let add = |x: u64, y: u64| x.checked_add(y).ok_or(CountOverflow);
    Ok(GenderCounts {
        fem: add(a.fem, b.fem)?,
        masc: add(a.masc, b.masc)?,
        uns: add(a.uns, b.uns)?,
        words: add(a.words, b.words)?,
        samples: add(a.samples, b.samples)?,
        samples_matched: add(a.samples_matched, b.samples_matched)?,
    })
}

/// `100 * count / words`, or 0 for an empty corpus.
pub fn class_score(count: u64, words: u64) -> f64 {
    if words == 0 {
        0.0
    } else {
        100.0 * count as f64 / words as f64
    }
}

/// Absolute feminine/masculine difference in percentage points.
pub fn gender_gap(score_fem: f64, score_masc: f64) -> f64 {
    (score_fem - score_masc).abs()
}

/// Standard error of the difference between the feminine and masculine
/// proportions, `sqrt((pf(1-pf) + pm(1-pm)) / N)` with `p = score / 100`.
/// Undefined for an empty corpus.
pub fn standard_error(score_fem: f64, score_masc: f64, words: u64) -> Option<f64> {
    if words == 0 {
        return None;
    }
    let pf = score_fem / 100.0;
    let pm = score_masc / 100.0;
    Some(((pf * (1.0 - pf) + pm * (1.0 - pm)) / words as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Skew {
    Masculine,
    Feminine,
    Balanced,
}

impl Skew {
    pub fn as_str(self) -> &'static str {
        match self {
            Skew::Masculine => "masculine",
            Skew::Feminine => "feminine",
            Skew::Balanced => "balanced",
        }
    }
}

/// A gap counts as skew only when it exceeds twice the standard error.
pub fn classify_skew(score_fem: f64, score_masc: f64, ste: f64) -> Skew {
    if score_masc - score_fem > 2.0 * ste {
        Skew::Masculine
    } else if score_fem - score_masc > 2.0 * ste {
        Skew::Feminine
    } else {
        Skew::Balanced
    }
}

/// Percentage of samples with at least one hit.
pub fn coverage(samples_matched: u64, samples: u64) -> f64 {
    if samples == 0 {
        0.0
    } else {
        100.0 * samples_matched as f64 / samples as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportWarning {
    /// No words were counted; all scores are zero and the gap has no error.
    ZeroWords,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenderReport {
    pub score_fem: f64,
    pub score_masc: f64,
    pub score_uns: f64,
    pub delta: f64,
    pub ste: f64,
    pub skew: Skew,
    pub coverage: f64,
    pub words: u64,
    pub samples: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<ReportWarning>,
}

pub fn finalize(counts: &GenderCounts) -> GenderReport {
    let score_fem = class_score(counts.fem, counts.words);
    let score_masc = class_score(counts.masc, counts.words);
    let score_uns = class_score(counts.uns, counts.words);
    let delta = gender_gap(score_fem, score_masc);
    let mut warnings = Vec::new();
    let ste = match standard_error(score_fem, score_masc, counts.words) {
        Some(ste) => ste,
        None => {
            warnings.push(ReportWarning::ZeroWords);
            0.0
        }
    };
    GenderReport {
        score_fem,
        score_masc,
        score_uns,
        delta,
        ste,
        skew: classify_skew(score_fem, score_masc, ste),
        coverage: coverage(counts.samples_matched, counts.samples),
        words: counts.words,
        samples: counts.samples,
        warnings,
    }
}
