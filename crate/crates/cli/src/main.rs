use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use gender_gap::ingestion::{open_corpus, CorpusSource, CorpusSpec, IngestTally, SampleLevel};
use gender_gap::lexicon::{
    flag_size_outliers, load_lexicon, validate_lexicon, LexiconError, SIZE_OUTLIER_FACTOR,
};
use gender_gap::pipeline::{bench, process_stream, AnnotatedSample, RunOptions};
use gender_gap::reporting::{
    render_annotations, render_report, AnnotationFormat, ReportDocument, ReportFormat, ReportRow,
    RowMeta,
};
use gender_gap::segmentation::{is_supported_language, WordList};
use gender_gap::statistics::{merge, GenderCounts, ReportWarning};
use gender_gap::{
    detect_strategy, finalize, Lexicon, MatchIndex, Matcher, NormalizationConfig, SegmentationKind,
};

/// Placeholder replaced by the language code in `--input` and
/// `--wordcount-dict` paths.
const LANG_PLACEHOLDER: &str = "{lang}";

#[derive(Parser)]
#[command(
    name = "gender-gap",
    version,
    about = "Measure gender representation in text corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score each language's corpus against its lexicon
    Analyze(AnalyzeArgs),
    /// Analyze, and also print every matched sample with its hits marked
    Explain(ExplainArgs),
    /// Check lexicon files without reading any corpus
    ValidateLexicon(ValidateArgs),
    /// Time end-to-end counting throughput on one corpus
    Bench(BenchArgs),
}

#[derive(Args)]
struct LexiconArgs {
    /// Language code such as eng_Latn; repeat for several languages
    #[arg(long = "lang", required = true)]
    langs: Vec<String>,
    /// Directory holding one <lang>.tsv lexicon per language
    #[arg(long, default_value = "data/lexicon")]
    lexicon_dir: PathBuf,
    /// Match case-sensitively
    #[arg(long)]
    no_case_fold: bool,
}

impl LexiconArgs {
    fn normalization(&self) -> NormalizationConfig {
        NormalizationConfig {
            case_fold: !self.no_case_fold,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Txt,
    Jsonl,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Sentence,
    Document,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportKind {
    Tsv,
    Json,
    Md,
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus file, `-` for stdin. Repeat once per --lang, or several times
    /// for a single language. `{lang}` in the path is replaced per language
    #[arg(long = "input", required = true)]
    inputs: Vec<String>,
    #[arg(long, value_enum, default_value_t = InputFormat::Txt)]
    format: InputFormat,
    /// JSONL field holding the sample text
    #[arg(long, default_value = "text")]
    jsonl_field: String,
    /// Sample granularity; defaults to sentence for txt and document for jsonl
    #[arg(long, value_enum)]
    level: Option<Level>,
    /// Stop after this many samples per input
    #[arg(long)]
    limit: Option<u64>,
    /// Word list for word counts in Chinese, Japanese and Thai text
    #[arg(long)]
    wordcount_dict: Option<String>,
}

impl CorpusArgs {
    fn spec(&self, input: &str) -> CorpusSpec {
        let source = CorpusSource::from_arg(input);
        let mut spec = match self.format {
            InputFormat::Txt => CorpusSpec::lines(source),
            InputFormat::Jsonl => CorpusSpec::jsonl(source),
        };
        spec.jsonl_field = self.jsonl_field.clone();
        if let Some(level) = self.level {
            spec.level = match level {
                Level::Sentence => SampleLevel::Sentence,
                Level::Document => SampleLevel::Document,
            };
        }
        spec.limit = self.limit;
        spec
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    lexicon: LexiconArgs,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Counting threads
    #[arg(long, default_value_t = default_workers(), value_parser = clap::value_parser!(u64).range(1..))]
    workers: u64,
    /// Write output here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportKind::Tsv)]
    report: ReportKind,
    /// Dataset label carried by JSON and Markdown reports
    #[arg(long, default_value = "corpus")]
    dataset: String,
    /// Fail on a missing lexicon or unreadable corpus instead of
    /// reporting the language as a failed row
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExplainFormat {
    Text,
    Jsonl,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value_t = ExplainFormat::Text)]
    explain_format: ExplainFormat,
    /// Also list samples without any hit
    #[arg(long)]
    all: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    lexicon: LexiconArgs,
    /// Emit JSON instead of text
    #[arg(long)]
    json: bool,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Fail when a lexicon is missing or malformed
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    lexicon: LexiconArgs,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Worker counts to time, comma separated
    #[arg(long, value_delimiter = ',', default_value = "1", value_parser = clap::value_parser!(u64).range(1..))]
    workers: Vec<u64>,
    /// Passes per worker count; the fastest is reported
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    repeat: u64,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn default_workers() -> u64 {
    std::thread::available_parallelism().map_or(1, |n| n.get() as u64)
}

/// A fatal error and the exit code it maps to.
enum Failure {
    Config(anyhow::Error),
    Io(anyhow::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Io(_) => 2,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Io(e) => e,
        }
    }
}

type Outcome = Result<(), Failure>;

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn io_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Io(e.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    let result = match cli.command {
        Command::Analyze(args) => analyze(&args.run, None),
        Command::Explain(args) => analyze(&args.run, Some((args.explain_format, args.all))),
        Command::ValidateLexicon(args) => validate(&args),
        Command::Bench(args) => run_bench(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.exit_code())
        }
    }
}

fn expand(template: &str, lang: &str) -> String {
    template.replace(LANG_PLACEHOLDER, lang)
}

/// Inputs for each language: paired one-to-one, a single templated input
/// expanded per language, or all inputs for a single language.
fn inputs_per_language(langs: &[String], inputs: &[String]) -> Result<Vec<Vec<String>>, Failure> {
    if langs.len() == 1 {
        return Ok(vec![inputs.iter().map(|i| expand(i, &langs[0])).collect()]);
    }
    if inputs.len() == langs.len() {
        return Ok(langs
            .iter()
            .zip(inputs)
            .map(|(l, i)| vec![expand(i, l)])
            .collect());
    }
    if inputs.len() == 1 && inputs[0].contains(LANG_PLACEHOLDER) {
        return Ok(langs.iter().map(|l| vec![expand(&inputs[0], l)]).collect());
    }
    Err(config_err(anyhow!(
        "{} languages but {} inputs; pass one --input per --lang or a single path containing {LANG_PLACEHOLDER}",
        langs.len(),
        inputs.len()
    )))
}

fn check_languages(langs: &[String]) -> Outcome {
    let mut seen = std::collections::HashSet::new();
    for lang in langs {
        if !seen.insert(lang) {
            return Err(config_err(anyhow!("language {lang} requested twice")));
        }
        if !is_supported_language(lang) {
            warn!("{lang} is not a known language code; treating it as space-delimited");
        }
    }
    Ok(())
}

/// Loads every lexicon before any corpus is read. Under `strict` the first
/// failure aborts the run.
fn load_lexicons(
    args: &LexiconArgs,
    strict: bool,
) -> Result<Vec<Result<Lexicon, LexiconError>>, Failure> {
    let cfg = args.normalization();
    let mut out = Vec::with_capacity(args.langs.len());
    for lang in &args.langs {
        let loaded = load_lexicon(&args.lexicon_dir, lang, &cfg);
        match &loaded {
            Ok(lex) if lex.is_empty() => {
                warn!("{lang}: lexicon is empty; every score will be zero")
            }
            Ok(_) => {}
            Err(e) if strict => return Err(config_err(anyhow!("{lang}: {e}"))),
            Err(e) => warn!("{lang}: {e}"),
        }
        out.push(loaded);
    }
    Ok(out)
}

fn build_matcher(lexicon: &Lexicon, corpus: &CorpusArgs) -> anyhow::Result<Matcher> {
    let strategy = detect_strategy(lexicon.language());
    let mut matcher = Matcher::new(MatchIndex::build(lexicon, &strategy));
    if let Some(dict) = &corpus.wordcount_dict {
        if strategy.kind == SegmentationKind::Unsegmented {
            let path = PathBuf::from(expand(dict, lexicon.language()));
            let list = WordList::load(&path, lexicon.config())
                .with_context(|| format!("reading word list {}", path.display()))?;
            matcher = matcher.with_word_list(list);
        }
    }
    Ok(matcher)
}

struct LanguageRun {
    counts: GenderCounts,
    tally: IngestTally,
    annotated: Vec<AnnotatedSample>,
}

fn run_language(
    matcher: &Matcher,
    inputs: &[String],
    corpus: &CorpusArgs,
    options: &RunOptions,
) -> anyhow::Result<LanguageRun> {
    let mut run = LanguageRun {
        counts: GenderCounts::ZERO,
        tally: IngestTally::default(),
        annotated: Vec::new(),
    };
    for input in inputs {
        let spec = corpus.spec(input);
        let mut stream = open_corpus(&spec)?;
        let outcome = process_stream(matcher, &mut stream, options)
            .with_context(|| format!("reading {input}"))?;
        run.counts = merge(&run.counts, &outcome.counts)?;
        run.tally.decode_errors += outcome.tally.decode_errors;
        run.tally.skipped_records += outcome.tally.skipped_records;
        for example in &outcome.tally.skip_examples {
            warn!("{}: {input}: skipped {example}", matcher.language());
        }
        run.annotated.extend(outcome.annotated);
    }
    Ok(run)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(path) => Box::new(BufWriter::new(
            File::create(path)
                .with_context(|| format!("creating {}", path.display()))
                .map_err(io_err)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_all(out: &mut dyn Write, text: &str) -> Outcome {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .context("writing output")
        .map_err(io_err)
}

fn report_format(kind: ReportKind) -> ReportFormat {
    match kind {
        ReportKind::Tsv => ReportFormat::Tsv,
        ReportKind::Json => ReportFormat::Json,
        ReportKind::Md => ReportFormat::Markdown,
    }
}

fn annotations_jsonl(language: &str, samples: &[AnnotatedSample]) -> String {
    render_annotations(samples, AnnotationFormat::Jsonl, true)
        .lines()
        .map(|line| {
            let record: serde_json::Value =
                serde_json::from_str(line).expect("rendered JSONL parses");
            let mut tagged = serde_json::Map::new();
            tagged.insert("language".into(), language.into());
            if let serde_json::Value::Object(fields) = record {
                tagged.extend(fields);
            }
            serde_json::Value::Object(tagged).to_string() + "\n"
        })
        .collect()
}

fn analyze(args: &RunArgs, explain: Option<(ExplainFormat, bool)>) -> Outcome {
    let langs = &args.lexicon.langs;
    check_languages(langs)?;
    let inputs = inputs_per_language(langs, &args.corpus.inputs)?;
    if inputs.iter().flatten().filter(|i| *i == "-").count() > 1 {
        return Err(config_err(anyhow!("stdin (`-`) can be read only once")));
    }
    let lexicons = load_lexicons(&args.lexicon, args.strict)?;
    let options = RunOptions {
        workers: args.workers as usize,
        annotate: explain.is_some(),
        ..RunOptions::default()
    };

    let mut doc = ReportDocument::new(args.dataset.clone());
    let mut explained = String::new();
    for ((lang, lexicon), inputs) in langs.iter().zip(lexicons).zip(&inputs) {
        let lexicon = match lexicon {
            Ok(lexicon) => lexicon,
            Err(e) => {
                doc.push(ReportRow::failed(lang, e.to_string()));
                continue;
            }
        };
        let started = Instant::now();
        let result = build_matcher(&lexicon, &args.corpus)
            .and_then(|matcher| run_language(&matcher, inputs, &args.corpus, &options));
        let run = match result {
            Ok(run) => run,
            Err(e) if args.strict => return Err(io_err(e.context(lang.clone()))),
            Err(e) => {
                warn!("{lang}: {e:#}");
                doc.push(ReportRow::failed(lang, format!("{e:#}")));
                continue;
            }
        };
        let report = finalize(&run.counts);
        if report.warnings.contains(&ReportWarning::ZeroWords) {
            warn!("{lang}: no words counted; reporting zeros");
        }
        if run.tally.decode_errors > 0 {
            warn!(
                "{lang}: {} lines were not valid UTF-8",
                run.tally.decode_errors
            );
        }
        if run.tally.skipped_records > 0 {
            warn!("{lang}: {} records skipped", run.tally.skipped_records);
        }
        info!(
            "{lang}: {} samples, {} words in {:.3}s",
            run.counts.samples,
            run.counts.words,
            started.elapsed().as_secs_f64()
        );

        if let Some((format, all)) = explain {
            match format {
                ExplainFormat::Text => {
                    if langs.len() > 1 {
                        explained.push_str(&format!("# {lang}\n"));
                    }
                    explained.push_str(&render_annotations(
                        &run.annotated,
                        AnnotationFormat::Text,
                        all,
                    ));
                }
                ExplainFormat::Jsonl => {
                    let samples: Vec<AnnotatedSample> = run
                        .annotated
                        .into_iter()
                        .filter(|s| all || !s.annotations.is_empty())
                        .collect();
                    explained.push_str(&annotations_jsonl(lang, &samples));
                }
            }
        }

        let meta = RowMeta {
            decode_errors: run.tally.decode_errors,
            skipped_records: run.tally.skipped_records,
        };
        doc.push(ReportRow::ok(lang, report, meta));
    }

    let mut out = open_output(args.output.as_deref())?;
    let rendered = render_report(&doc, report_format(args.report));
    let text = match explain {
        None => rendered,
        Some((ExplainFormat::Text, _)) => format!("{explained}\n{rendered}"),
        // Keep JSONL output parseable; the summary goes to stderr.
        Some((ExplainFormat::Jsonl, _)) => {
            eprint!("{rendered}");
            explained
        }
    };
    write_all(&mut *out, &text)
}

fn validate(args: &ValidateArgs) -> Outcome {
    check_languages(&args.lexicon.langs)?;
    let lexicons = load_lexicons(&args.lexicon, args.strict)?;
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (lang, lexicon) in args.lexicon.langs.iter().zip(lexicons) {
        match lexicon {
            Ok(lexicon) => reports.push(validate_lexicon(&lexicon)),
            Err(e) => {
                failures.push(serde_json::json!({ "language": lang, "error": e.to_string() }))
            }
        }
    }
    let outliers = flag_size_outliers(&reports, SIZE_OUTLIER_FACTOR);

    let text = if args.json {
        let mut text = serde_json::to_string_pretty(&serde_json::json!({
            "lexicons": reports,
            "size_outliers": outliers,
            "failures": failures,
        }))
        .expect("validation report serializes");
        text.push('\n');
        text
    } else {
        let mut text: String = reports.iter().map(|r| r.to_string()).collect();
        for o in &outliers {
            text.push_str(&format!(
                "size outlier {}: {} entries, {:.1}x the mean of {:.1}\n",
                o.language, o.entries, o.ratio, o.mean_entries
            ));
        }
        for f in &failures {
            text.push_str(&format!(
                "failed {}: {}\n",
                f["language"].as_str().unwrap_or(""),
                f["error"].as_str().unwrap_or("")
            ));
        }
        text
    };
    let mut out = open_output(args.output.as_deref())?;
    write_all(&mut *out, &text)
}

fn run_bench(args: &BenchArgs) -> Outcome {
    if args.lexicon.langs.len() != 1 || args.corpus.inputs.len() != 1 {
        return Err(config_err(anyhow!(
            "bench takes exactly one --lang and one --input"
        )));
    }
    let lang = &args.lexicon.langs[0];
    check_languages(&args.lexicon.langs)?;
    let input = expand(&args.corpus.inputs[0], lang);
    if input == "-" {
        return Err(config_err(anyhow!(
            "bench needs a corpus file it can read repeatedly"
        )));
    }
    let lexicon = load_lexicons(&args.lexicon, true)?
        .pop()
        .expect("one language")
        .map_err(config_err)?;
    let matcher = build_matcher(&lexicon, &args.corpus).map_err(io_err)?;
    let spec = args.corpus.spec(&input);

    let mut results = Vec::new();
    for &workers in &args.workers {
        let mut best: Option<gender_gap::pipeline::BenchResult> = None;
        for _ in 0..args.repeat {
            let result = bench(&matcher, &spec, workers as usize)
                .with_context(|| format!("reading {input}"))
                .map_err(io_err)?;
            if best.as_ref().is_none_or(|b| result.seconds < b.seconds) {
                best = Some(result);
            }
        }
        let best = best.expect("at least one pass");
        eprintln!(
            "{lang} workers={} {:.3}s {:.0} words/s {:.0} bytes/s",
            best.workers, best.seconds, best.words_per_sec, best.bytes_per_sec
        );
        results.push(best);
    }

    let text = if args.json {
        serde_json::to_string_pretty(&results).expect("bench results serialize") + "\n"
    } else {
        let mut text =
            String::from("workers\tsamples\twords\tbytes\tseconds\twords_per_sec\tbytes_per_sec\n");
        for r in &results {
            text.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.workers, r.samples, r.words, r.bytes, r.seconds, r.words_per_sec, r.bytes_per_sec
            ));
        }
        text
    };
    let mut out = open_output(args.output.as_deref())?;
    write_all(&mut *out, &text)
}
