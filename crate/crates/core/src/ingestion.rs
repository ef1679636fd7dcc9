//! Streaming corpus readers.
//!
//! Plain text corpora carry one sample per line at sentence level. At
//! document level, documents are separated by blank lines and keep their
//! internal newlines. JSONL corpora carry one sample per record, taken from a
//! string field. Gzip input is detected from its magic bytes.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::PathBuf;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorpusSource {
    Path(PathBuf),
    Stdin,
}

impl CorpusSource {
    /// `-` selects standard input.
    pub fn from_arg(arg: &str) -> Self {
        if arg == "-" {
            CorpusSource::Stdin
        } else {
            CorpusSource::Path(PathBuf::from(arg))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    PlainLines,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleLevel {
    Sentence,
    Document,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Compression {
    None,
    Gzip,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub source: CorpusSource,
    pub format: CorpusFormat,
    /// Field holding the text in JSONL records.
    pub jsonl_field: String,
    pub level: SampleLevel,
    /// `None` detects gzip from the first bytes.
    pub compression: Option<Compression>,
    pub limit: Option<u64>,
}

impl CorpusSpec {
    pub fn lines(source: CorpusSource) -> Self {
        CorpusSpec {
            source,
            format: CorpusFormat::PlainLines,
            jsonl_field: "text".to_string(),
            level: SampleLevel::Sentence,
            compression: None,
            limit: None,
        }
    }

    pub fn jsonl(source: CorpusSource) -> Self {
        CorpusSpec {
            format: CorpusFormat::Jsonl,
            level: SampleLevel::Document,
            ..CorpusSpec::lines(source)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub text: String,
    pub ordinal: u64,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("opening {}", path.display())]
    Open { path: PathBuf, source: io::Error },
    #[error("reading corpus: {0}")]
    Io(#[from] io::Error),
    #[error("batch size must be at least 1")]
    ZeroBatch,
}

/// Problems that were tolerated while reading.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestTally {
    /// Lines that were not valid UTF-8 and were decoded lossily.
    pub decode_errors: u64,
    /// JSONL records dropped (malformed JSON, missing or non-string field).
    pub skipped_records: u64,
    /// First few skip reasons with their line numbers.
    pub skip_examples: Vec<String>,
}

const MAX_SKIP_EXAMPLES: usize = 5;

/// Lazy sample iterator over one corpus.
pub struct SampleStream {
    reader: Box<dyn BufRead + Send>,
    format: CorpusFormat,
    level: SampleLevel,
    jsonl_field: String,
    limit: Option<u64>,
    line_no: u64,
    emitted: u64,
    bytes: u64,
    done: bool,
    buf: Vec<u8>,
    tally: IngestTally,
}

pub fn open_corpus(spec: &CorpusSpec) -> Result<SampleStream, IngestError> {
    let raw: Box<dyn Read + Send> = match &spec.source {
        CorpusSource::Stdin => Box::new(io::stdin()),
        CorpusSource::Path(path) => {
            Box::new(File::open(path).map_err(|source| IngestError::Open {
                path: path.clone(),
                source,
            })?)
        }
    };
    from_reader(raw, spec)
}

/// Builds a stream over any reader, honoring the spec's format options.
pub fn from_reader<R: Read + Send + 'static>(
    reader: R,
    spec: &CorpusSpec,
) -> Result<SampleStream, IngestError> {
    let mut buffered = BufReader::with_capacity(1 << 16, reader);
    let compression = match spec.compression {
        Some(c) => c,
        None => {
            let head = buffered.fill_buf()?;
            if head.starts_with(&[0x1f, 0x8b]) {
                Compression::Gzip
            } else {
                Compression::None
            }
        }
    };
    let reader: Box<dyn BufRead + Send> = match compression {
        Compression::None => Box::new(buffered),
        Compression::Gzip => Box::new(BufReader::with_capacity(
            1 << 16,
            MultiGzDecoder::new(buffered),
        )),
    };
    Ok(SampleStream {
        reader,
        format: spec.format,
        level: spec.level,
        jsonl_field: spec.jsonl_field.clone(),
        limit: spec.limit,
        line_no: 0,
        emitted: 0,
        bytes: 0,
        done: false,
        buf: Vec::new(),
        tally: IngestTally::default(),
    })
}

impl SampleStream {
    pub fn tally(&self) -> &IngestTally {
        &self.tally
    }

    /// Bytes of sample text emitted so far.
    pub fn bytes_read(&self) -> u64 {
        self.bytes
    }

    fn read_line(&mut self) -> Result<Option<String>, IngestError> {
        self.buf.clear();
        if self.reader.read_until(b'\n', &mut self.buf)? == 0 {
            return Ok(None);
        }
        self.line_no += 1;
        if self.buf.last() == Some(&b'\n') {
            self.buf.pop();
            if self.buf.last() == Some(&b'\r') {
                self.buf.pop();
            }
        }
        let line = match String::from_utf8(std::mem::take(&mut self.buf)) {
            Ok(line) => line,
            Err(err) => {
                self.tally.decode_errors += 1;
                let line = String::from_utf8_lossy(err.as_bytes()).into_owned();
                self.buf = err.into_bytes();
                line
            }
        };
        Ok(Some(line))
    }

    fn skip(&mut self, reason: String) {
        self.tally.skipped_records += 1;
        if self.tally.skip_examples.len() < MAX_SKIP_EXAMPLES {
            log::warn!("{reason}");
            self.tally.skip_examples.push(reason);
        }
    }

    fn next_text(&mut self) -> Result<Option<String>, IngestError> {
        match (self.format, self.level) {
            (CorpusFormat::PlainLines, SampleLevel::Sentence) => self.read_line(),
            (CorpusFormat::PlainLines, SampleLevel::Document) => {
                let mut doc: Option<String> = None;
                while let Some(line) = self.read_line()? {
                    if line.trim().is_empty() {
                        if doc.is_some() {
                            break;
                        }
                        continue;
                    }
                    match doc.as_mut() {
                        Some(d) => {
                            d.push('\n');
                            d.push_str(&line);
                        }
                        None => doc = Some(line),
                    }
                }
                Ok(doc)
            }
            (CorpusFormat::Jsonl, _) => loop {
                let Some(line) = self.read_line()? else {
                    return Ok(None);
                };
                if line.trim().is_empty() {
                    continue;
                }
                let line_no = self.line_no;
                match serde_json::from_str::<serde_json::Value>(&line) {
                    Ok(record) => match record.get(&self.jsonl_field) {
                        Some(serde_json::Value::String(text)) => return Ok(Some(text.clone())),
                        Some(_) => self.skip(format!(
                            "line {line_no}: field `{}` is not a string",
                            self.jsonl_field
                        )),
                        None => self.skip(format!(
                            "line {line_no}: record has no `{}` field",
                            self.jsonl_field
                        )),
                    },
                    Err(err) => self.skip(format!("line {line_no}: malformed JSON: {err}")),
                }
            },
        }
    }

    pub fn next_sample(&mut self) -> Result<Option<Sample>, IngestError> {
        if self.done || self.limit.is_some_and(|limit| self.emitted >= limit) {
            self.done = true;
            return Ok(None);
        }
        match self.next_text()? {
            Some(text) => {
                let sample = Sample {
                    ordinal: self.emitted,
                    text,
                };
                self.emitted += 1;
                self.bytes += sample.text.len() as u64;
                Ok(Some(sample))
            }
            None => {
                self.done = true;
                Ok(None)
            }
        }
    }
}

impl Iterator for SampleStream {
    type Item = Result<Sample, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_sample().transpose()
    }
}

/// Up to `batch_size` samples in order; an empty batch means the stream is
/// exhausted.
pub fn next_batch(
    stream: &mut SampleStream,
    batch_size: usize,
) -> Result<Vec<Sample>, IngestError> {
    if batch_size == 0 {
        return Err(IngestError::ZeroBatch);
    }
    let mut batch = Vec::with_capacity(batch_size);
    while batch.len() < batch_size {
        match stream.next_sample()? {
            Some(sample) => batch.push(sample),
            None => break,
        }
    }
    Ok(batch)
}
