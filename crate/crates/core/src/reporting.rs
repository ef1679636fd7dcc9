//! Report and explain-mode rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::lexicon::GenderClass;
use crate::pipeline::AnnotatedSample;
use crate::statistics::GenderReport;

const TSV_HEADER: &str = "lang\tfem\tmasc\tuns\tdelta\tste\tskew\twords\tcoverage";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Json,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationFormat {
    Jsonl,
    Text,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowMeta {
    pub decode_errors: u64,
    pub skipped_records: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub language: String,
    /// `None` when the language failed; `error` then says why.
    pub report: Option<GenderReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub meta: RowMeta,
}

impl ReportRow {
    pub fn ok(language: impl Into<String>, report: GenderReport, meta: RowMeta) -> Self {
        ReportRow {
            language: language.into(),
            report: Some(report),
            error: None,
            meta,
        }
    }

    pub fn failed(language: impl Into<String>, error: impl Into<String>) -> Self {
        ReportRow {
            language: language.into(),
            report: None,
            error: Some(error.into()),
            meta: RowMeta::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub dataset: String,
    rows: Vec<ReportRow>,
}

impl ReportDocument {
    pub fn new(dataset: impl Into<String>) -> Self {
        ReportDocument {
            dataset: dataset.into(),
            rows: Vec::new(),
        }
    }

    /// Adds a row, keeping rows sorted by language code. A row for a
    /// language already present replaces it.
    pub fn push(&mut self, row: ReportRow) {
        match self
            .rows
            .binary_search_by(|r| r.language.as_str().cmp(&row.language))
        {
            Ok(i) => self.rows[i] = row,
            Err(i) => self.rows.insert(i, row),
        }
    }

    pub fn rows(&self) -> &[ReportRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl FromIterator<ReportRow> for ReportDocument {
    fn from_iter<I: IntoIterator<Item = ReportRow>>(iter: I) -> Self {
        let mut doc = ReportDocument::default();
        for row in iter {
            doc.push(row);
        }
        doc
    }
}

pub fn render_report(doc: &ReportDocument, format: ReportFormat) -> String {
    match format {
        ReportFormat::Tsv => render_tsv(doc),
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(doc).expect("report serializes");
            out.push('\n');
            out
        }
        ReportFormat::Markdown => render_markdown(doc),
    }
}

fn render_tsv(doc: &ReportDocument) -> String {
    let mut out = String::new();
    out.push_str(TSV_HEADER);
    out.push('\n');
    for row in &doc.rows {
        match &row.report {
            Some(r) => {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    row.language,
                    r.score_fem,
                    r.score_masc,
                    r.score_uns,
                    r.delta,
                    r.ste,
                    r.skew.as_str(),
                    r.words,
                    r.coverage
                );
            }
            None => {
                let _ = writeln!(out, "{}{}", row.language, "\tNA".repeat(8));
            }
        }
    }
    out
}

/// Ranks the three class scores; ties keep the fixed class order.
fn class_ranks(r: &GenderReport) -> [usize; 3] {
    let scores = [r.score_fem, r.score_masc, r.score_uns];
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut ranks = [0; 3];
    for (rank, &i) in order.iter().enumerate() {
        ranks[i] = rank;
    }
    ranks
}

fn render_markdown(doc: &ReportDocument) -> String {
    let mut out = String::new();
    if !doc.dataset.is_empty() {
        let _ = writeln!(out, "### {}\n", doc.dataset);
    }
    out.push_str("| lang | fem | masc | uns | delta | ste | skew | # words | coverage |\n");
    out.push_str("|---|---:|---:|---:|---:|---:|---|---:|---:|\n");
    let mut notes = Vec::new();
    for row in &doc.rows {
        let Some(r) = &row.report else {
            let _ = writeln!(out, "| {} |{}", row.language, " - |".repeat(8));
            notes.push(format!(
                "{}: {}",
                row.language,
                row.error.as_deref().unwrap_or("failed")
            ));
            continue;
        };
        let ranks = class_ranks(r);
        let cells: Vec<String> = [r.score_fem, r.score_masc, r.score_uns]
            .iter()
            .zip(ranks)
            .map(|(score, rank)| {
                let s = format!("{score:.3}");
                match rank {
                    _ if *score == 0.0 => s,
                    0 => format!("**{s}**"),
                    1 => format!("<u>{s}</u>"),
                    _ => s,
                }
            })
            .collect();
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {:.3} | {:.4} | {} | {} | {:.1} |",
            row.language,
            cells[0],
            cells[1],
            cells[2],
            r.delta,
            r.ste,
            r.skew.as_str(),
            r.words,
            r.coverage
        );
        for w in &r.warnings {
            notes.push(format!("{}: {:?}", row.language, w));
        }
        if row.meta.decode_errors > 0 || row.meta.skipped_records > 0 {
            notes.push(format!(
                "{}: {} decode errors, {} skipped records",
                row.language, row.meta.decode_errors, row.meta.skipped_records
            ));
        }
    }
    if !notes.is_empty() {
        out.push('\n');
        for note in notes {
            let _ = writeln!(out, "- {note}");
        }
    }
    out
}

fn class_tally(sample: &AnnotatedSample) -> String {
    format!(
        "fem+={}, masc+={}, uns+={}",
        sample.counts.fem, sample.counts.masc, sample.counts.uns
    )
}

/// Wraps every hit of `sample` in `**`.
pub fn mark_hits(sample: &AnnotatedSample) -> String {
    let text = &sample.text;
    let mut out = String::with_capacity(text.len() + 4 * sample.annotations.len());
    let mut pos = 0;
    for a in &sample.annotations {
        if a.byte_start < pos || a.byte_end > text.len() {
            continue;
        }
        out.push_str(&text[pos..a.byte_start]);
        out.push_str("**");
        out.push_str(&text[a.byte_start..a.byte_end]);
        out.push_str("**");
        pos = a.byte_end;
    }
    out.push_str(&text[pos..]);
    out
}

/// Explain-mode output. Text lists matched samples only unless
/// `include_unmatched`; Jsonl always emits one record per sample.
pub fn render_annotations(
    samples: &[AnnotatedSample],
    format: AnnotationFormat,
    include_unmatched: bool,
) -> String {
    let mut out = String::new();
    for sample in samples {
        match format {
            AnnotationFormat::Jsonl => {
                out.push_str(&serde_json::to_string(sample).expect("annotation serializes"));
                out.push('\n');
            }
            AnnotationFormat::Text => {
                if sample.annotations.is_empty() && !include_unmatched {
                    continue;
                }
                let _ = writeln!(out, "{}  {}", mark_hits(sample), class_tally(sample));
            }
        }
    }
    out
}

/// Classes a sample's hits incremented, in fixed class order.
pub fn incremented_classes(sample: &AnnotatedSample) -> Vec<GenderClass> {
    GenderClass::ALL
        .into_iter()
        .filter(|c| sample.annotations.iter().any(|a| a.classes.contains(*c)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{ClassSet, Lexicon, MatchIndex, NormalizationConfig};
    use crate::matching::Matcher;
    use crate::segmentation::detect_strategy;
    use crate::statistics::{finalize, GenderCounts, Skew};
    use proptest::prelude::*;

    fn eng_row() -> ReportRow {
        ReportRow::ok(
            "eng",
            GenderReport {
                score_fem: 0.121,
                score_masc: 0.065,
                score_uns: 0.379,
                delta: 0.056,
                ste: 0.0003,
                skew: Skew::Feminine,
                coverage: 11.2,
                words: 23211,
                samples: 1012,
                warnings: Vec::new(),
            },
            RowMeta::default(),
        )
    }

    #[test]
    fn tsv_row_layout() {
        let doc: ReportDocument = [eng_row()].into_iter().collect();
        let tsv = render_report(&doc, ReportFormat::Tsv);
        let mut lines = tsv.lines();
        assert_eq!(lines.next(), Some(TSV_HEADER));
        assert_eq!(
            lines.next(),
            Some("eng\t0.121\t0.065\t0.379\t0.056\t0.0003\tfeminine\t23211\t11.2")
        );
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn zero_report_renders_zeros() {
        let doc: ReportDocument = [ReportRow::ok(
            "xxx_Latn",
            finalize(&GenderCounts::ZERO),
            RowMeta::default(),
        )]
        .into_iter()
        .collect();
        let tsv = render_report(&doc, ReportFormat::Tsv);
        assert_eq!(
            tsv.lines().nth(1),
            Some("xxx_Latn\t0\t0\t0\t0\t0\tbalanced\t0\t0")
        );
    }

    #[test]
    fn rows_sorted_and_failures_kept() {
        let doc: ReportDocument = [ReportRow::failed("spa_Latn", "missing lexicon"), eng_row()]
            .into_iter()
            .collect();
        let langs: Vec<&str> = doc.rows().iter().map(|r| r.language.as_str()).collect();
        assert_eq!(langs, ["eng", "spa_Latn"]);
        let tsv = render_report(&doc, ReportFormat::Tsv);
        assert!(tsv.ends_with("spa_Latn\tNA\tNA\tNA\tNA\tNA\tNA\tNA\tNA\n"));
        let md = render_report(&doc, ReportFormat::Markdown);
        assert!(md.contains("- spa_Latn: missing lexicon"));
    }

    #[test]
    fn markdown_rounds_and_highlights() {
        let mut row = eng_row();
        if let Some(r) = row.report.as_mut() {
            r.score_fem = 0.120_632;
            r.ste = 0.000_283;
            r.coverage = 11.166;
        }
        let doc: ReportDocument = [row].into_iter().collect();
        let md = render_report(&doc, ReportFormat::Markdown);
        assert!(md.contains("| eng | <u>0.121</u> | 0.065 | **0.379** | 0.056 | 0.0003 | feminine | 23211 | 11.2 |"), "{md}");
    }

    #[test]
    fn rendering_is_pure() {
        let doc: ReportDocument = [eng_row()].into_iter().collect();
        for f in [
            ReportFormat::Tsv,
            ReportFormat::Json,
            ReportFormat::Markdown,
        ] {
            assert_eq!(render_report(&doc, f), render_report(&doc, f));
        }
    }

    fn explain(lang: &str, terms: &[(&str, &str)], text: &str) -> AnnotatedSample {
        let lex = Lexicon::from_terms(
            lang,
            NormalizationConfig::default(),
            terms.iter().map(|(t, c)| {
                (
                    *t,
                    c.split(';')
                        .map(|c| c.parse().unwrap())
                        .collect::<ClassSet>(),
                )
            }),
        )
        .unwrap();
        let matcher = Matcher::new(MatchIndex::build(&lex, &detect_strategy(lang)));
        let (counts, annotations) = matcher.annotate_sample(text);
        AnnotatedSample {
            ordinal: 0,
            text: text.to_string(),
            counts,
            annotations,
        }
    }

    #[test]
    fn text_annotation_marks_hits() {
        let s = explain(
            "eng_Latn",
            &[("mother", "feminine")],
            "my mother was a nurse",
        );
        assert_eq!(
            render_annotations(&[s], AnnotationFormat::Text, false),
            "my **mother** was a nurse  fem+=1, masc+=0, uns+=0\n"
        );
    }

    #[test]
    fn unmatched_samples_omitted_from_text() {
        let s = explain("eng_Latn", &[("mother", "feminine")], "nothing here");
        assert_eq!(
            render_annotations(std::slice::from_ref(&s), AnnotationFormat::Text, false),
            ""
        );
        assert_eq!(
            render_annotations(std::slice::from_ref(&s), AnnotationFormat::Text, true),
            "nothing here  fem+=0, masc+=0, uns+=0\n"
        );
        let jsonl = render_annotations(&[s], AnnotationFormat::Jsonl, false);
        let v: serde_json::Value = serde_json::from_str(jsonl.trim_end()).unwrap();
        assert_eq!(v["ordinal"], 0);
        assert!(v["annotations"].as_array().unwrap().is_empty());
        assert_eq!(v["counts"]["words"], 2);
    }

    #[test]
    fn spanish_nino_counts_masculine() {
        let s = explain(
            "spa_Latn",
            &[("niño", "masculine"), ("niña", "feminine")],
            "El niño juega en el parque.",
        );
        let text = render_annotations(std::slice::from_ref(&s), AnnotationFormat::Text, false);
        assert!(text.contains("**niño**"));
        assert!(text.trim_end().ends_with("fem+=0, masc+=1, uns+=0"));
        assert_eq!(incremented_classes(&s), [GenderClass::Masculine]);
    }

    fn report_strategy() -> impl Strategy<Value = GenderReport> {
        (
            0u64..1000,
            0u64..1000,
            0u64..1000,
            0u64..100_000,
            0u64..5000,
            0u64..5000,
        )
            .prop_map(|(f, m, u, w, s, sm)| {
                finalize(&GenderCounts {
                    fem: f,
                    masc: m,
                    uns: u,
                    words: w.max(f + m + u),
                    samples: s.max(sm),
                    samples_matched: sm,
                })
            })
    }

    proptest! {
        #[test]
        fn json_round_trip(
            dataset in "[a-z]{0,8}",
            rows in proptest::collection::vec(("[a-z]{3}_[A-Z][a-z]{3}", report_strategy(), 0u64..5, 0u64..5), 1..6),
        ) {
            let doc: ReportDocument = rows
                .into_iter()
                .map(|(lang, r, d, s)| ReportRow::ok(lang, r, RowMeta { decode_errors: d, skipped_records: s }))
                .chain([ReportRow::failed("zzz_Zzzz", "boom")])
                .collect::<ReportDocument>();
            let mut doc = doc;
            doc.dataset = dataset;
            let back: ReportDocument = serde_json::from_str(&render_report(&doc, ReportFormat::Json)).unwrap();
            prop_assert_eq!(&back, &doc);

            // TSV carries the same values.
            let tsv = render_report(&doc, ReportFormat::Tsv);
            for (line, row) in tsv.lines().skip(1).zip(doc.rows()) {
                let cols: Vec<&str> = line.split('\t').collect();
                prop_assert_eq!(cols[0], row.language.as_str());
                if let Some(r) = &row.report {
                    prop_assert_eq!(cols[1].parse::<f64>().unwrap(), r.score_fem);
                    prop_assert_eq!(cols[5].parse::<f64>().unwrap(), r.ste);
                    prop_assert_eq!(cols[8].parse::<f64>().unwrap(), r.coverage);
                    prop_assert_eq!(cols[7].parse::<u64>().unwrap(), r.words);
                }
            }
        }
    }
}
