//! Parallel count-then-reduce driver.
//!
//! One reader feeds batches of samples to a pool of workers. Each worker
//! keeps its own [`GenderCounts`]; the partial counts are merged once the
//! stream is drained. Because merging is an integer sum the result does not
//! depend on the number of workers or on which worker saw which batch.

use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingestion::{
    next_batch, open_corpus, CorpusSpec, IngestError, IngestTally, SampleStream,
};
use crate::matching::{MatchAnnotation, Matcher, SampleCounts};
use crate::statistics::{merge, CountOverflow, GenderCounts};

pub const DEFAULT_BATCH_SIZE: usize = 256;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Overflow(#[from] CountOverflow),
    #[error("worker count must be at least 1")]
    NoWorkers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: usize,
    pub batch_size: usize,
    /// Keep per-sample annotations for explain output.
    pub annotate: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            workers: 1,
            batch_size: DEFAULT_BATCH_SIZE,
            annotate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSample {
    pub ordinal: u64,
    pub text: String,
    pub counts: SampleCounts,
    pub annotations: Vec<MatchAnnotation>,
}

#[derive(Debug, Clone)]
pub struct CorpusOutcome {
    pub counts: GenderCounts,
    /// Sorted by ordinal; empty unless annotations were requested.
    pub annotated: Vec<AnnotatedSample>,
    pub tally: IngestTally,
    pub bytes: u64,
    pub elapsed: Duration,
}

#[derive(Default)]
struct Partial {
    counts: GenderCounts,
    annotated: Vec<AnnotatedSample>,
}

fn work(
    matcher: &Matcher,
    batch: Vec<crate::ingestion::Sample>,
    annotate: bool,
    acc: &mut Partial,
) -> Result<(), CountOverflow> {
    for sample in batch {
        if annotate {
            let (counts, annotations) = matcher.annotate_sample(&sample.text);
            acc.counts.add_sample(&counts)?;
            acc.annotated.push(AnnotatedSample {
                ordinal: sample.ordinal,
                text: sample.text,
                counts,
                annotations,
            });
        } else {
            acc.counts.add_sample(&matcher.count_sample(&sample.text))?;
        }
    }
    Ok(())
}

/// Drains `stream` through `options.workers` counting threads.
pub fn process_stream(
    matcher: &Matcher,
    stream: &mut SampleStream,
    options: &RunOptions,
) -> Result<CorpusOutcome, PipelineError> {
    if options.workers == 0 {
        return Err(PipelineError::NoWorkers);
    }
    let batch_size = options.batch_size.max(1);
    let started = Instant::now();

    let partials: Vec<Partial> = if options.workers == 1 {
        let mut acc = Partial::default();
        loop {
            let batch = next_batch(stream, batch_size)?;
            if batch.is_empty() {
                break;
            }
            work(matcher, batch, options.annotate, &mut acc)?;
        }
        vec![acc]
    } else {
        thread::scope(|scope| -> Result<Vec<Partial>, PipelineError> {
            let (tx, rx) =
                crossbeam_channel::bounded::<Vec<crate::ingestion::Sample>>(options.workers * 2);
            let handles: Vec<_> = (0..options.workers)
                .map(|_| {
                    let rx = rx.clone();
                    scope.spawn(move || -> Result<Partial, CountOverflow> {
                        let mut acc = Partial::default();
                        for batch in rx {
                            work(matcher, batch, options.annotate, &mut acc)?;
                        }
                        Ok(acc)
                    })
                })
                .collect();
            drop(rx);

            let mut read_result = Ok(());
            loop {
                match next_batch(stream, batch_size) {
                    Ok(batch) if batch.is_empty() => break,
                    Ok(batch) => {
                        if tx.send(batch).is_err() {
                            // Every worker has stopped; its error is reported below.
                            break;
                        }
                    }
                    Err(e) => {
                        read_result = Err(e);
                        break;
                    }
                }
            }
            drop(tx);

            let mut partials = Vec::with_capacity(handles.len());
            for handle in handles {
                partials.push(handle.join().expect("counting worker panicked")?);
            }
            read_result?;
            Ok(partials)
        })?
    };

    let mut counts = GenderCounts::ZERO;
    let mut annotated = Vec::new();
    for partial in partials {
        counts = merge(&counts, &partial.counts)?;
        annotated.extend(partial.annotated);
    }
    annotated.sort_by_key(|a| a.ordinal);

    Ok(CorpusOutcome {
        counts,
        annotated,
        tally: stream.tally().clone(),
        bytes: stream.bytes_read(),
        elapsed: started.elapsed(),
    })
}

/// Sequential counting over in-memory samples.
pub fn count_texts<S: AsRef<str>>(
    matcher: &Matcher,
    texts: &[S],
) -> Result<GenderCounts, CountOverflow> {
    let mut counts = GenderCounts::ZERO;
    for text in texts {
        counts.add_sample(&matcher.count_sample(text.as_ref()))?;
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub workers: usize,
    pub samples: u64,
    pub words: u64,
    pub bytes: u64,
    pub seconds: f64,
    pub words_per_sec: f64,
    pub bytes_per_sec: f64,
}

/// Times a full pass (read, decompress, count, merge) over one corpus.
pub fn bench(
    matcher: &Matcher,
    spec: &CorpusSpec,
    workers: usize,
) -> Result<BenchResult, PipelineError> {
    let mut stream = open_corpus(spec)?;
    let options = RunOptions {
        workers,
        ..RunOptions::default()
    };
    let outcome = process_stream(matcher, &mut stream, &options)?;
    let seconds = outcome.elapsed.as_secs_f64().max(f64::MIN_POSITIVE);
    Ok(BenchResult {
        workers,
        samples: outcome.counts.samples,
        words: outcome.counts.words,
        bytes: outcome.bytes,
        seconds,
        words_per_sec: outcome.counts.words as f64 / seconds,
        bytes_per_sec: outcome.bytes as f64 / seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::{from_reader, CorpusSource};
    use crate::lexicon::{ClassSet, GenderClass, Lexicon, MatchIndex, NormalizationConfig};
    use crate::segmentation::detect_strategy;

    fn matcher() -> Matcher {
        let lex = Lexicon::from_terms(
            "eng_Latn",
            NormalizationConfig::default(),
            [
                ("mother", ClassSet::single(GenderClass::Feminine)),
                ("father", ClassSet::single(GenderClass::Masculine)),
                ("people", ClassSet::single(GenderClass::Unspecified)),
            ],
        )
        .unwrap();
        Matcher::new(MatchIndex::build(&lex, &detect_strategy("eng_Latn")))
    }

    fn corpus() -> String {
        (0..500)
            .map(|i| match i % 4 {
                0 => format!("my mother said {i} things\n"),
                1 => format!("the father and the mother {i}\n"),
                2 => "nothing to see here\n".to_string(),
                _ => format!("people people {i}\n"),
            })
            .collect()
    }

    fn run(workers: usize, annotate: bool, batch_size: usize) -> CorpusOutcome {
        let spec = CorpusSpec::lines(CorpusSource::Stdin);
        let mut stream = from_reader(std::io::Cursor::new(corpus().into_bytes()), &spec).unwrap();
        let options = RunOptions {
            workers,
            batch_size,
            annotate,
        };
        process_stream(&matcher(), &mut stream, &options).unwrap()
    }

    #[test]
    fn worker_count_does_not_change_counts() {
        let base = run(1, false, 7);
        assert_eq!(base.counts.samples, 500);
        assert_eq!(base.counts.fem, 250);
        assert_eq!(base.counts.masc, 125);
        assert_eq!(base.counts.uns, 250);
        assert_eq!(base.counts.samples_matched, 375);
        for workers in [2, 3, 7, 16] {
            assert_eq!(run(workers, false, 5).counts, base.counts);
        }
    }

    #[test]
    fn annotations_come_back_in_order() {
        let out = run(4, true, 3);
        assert_eq!(out.annotated.len(), 500);
        assert!(out
            .annotated
            .windows(2)
            .all(|w| w[0].ordinal < w[1].ordinal));
        assert_eq!(out.annotated[1].annotations.len(), 2);
        assert_eq!(out.counts, run(1, false, 64).counts);
    }

    #[test]
    fn zero_workers_rejected() {
        let spec = CorpusSpec::lines(CorpusSource::Stdin);
        let mut stream = from_reader(std::io::Cursor::new(Vec::new()), &spec).unwrap();
        let options = RunOptions {
            workers: 0,
            ..RunOptions::default()
        };
        assert!(matches!(
            process_stream(&matcher(), &mut stream, &options),
            Err(PipelineError::NoWorkers)
        ));
    }

    #[test]
    fn count_texts_matches_stream() {
        let texts: Vec<String> = corpus().lines().map(str::to_string).collect();
        assert_eq!(
            count_texts(&matcher(), &texts).unwrap(),
            run(2, false, 11).counts
        );
    }
}
