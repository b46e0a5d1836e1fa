//! JSON-lines serialization of corpora and similarity triplets.

use super::{CorpusError, CorpusRecord, SimilarityTriplet};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::Path;

pub fn write_corpus(path: &Path, records: &[CorpusRecord]) -> Result<(), CorpusError> {
    write_jsonl(path, records)
}

/// Read a corpus. Blank lines are skipped; record numbers in errors are
/// 1-based line numbers.
pub fn read_corpus(path: &Path) -> Result<Vec<CorpusRecord>, CorpusError> {
    let records: Vec<CorpusRecord> = read_jsonl(path)?;
    for (i, r) in records.iter().enumerate() {
        if let Some(l) = r.labels.iter().find(|l| l.label > 1 || l.line == 0) {
            return Err(CorpusError::Format {
                record: i + 1,
                message: format!("invalid label {} on line {}", l.label, l.line),
            });
        }
    }
    Ok(records)
}

pub fn write_triplets(path: &Path, triplets: &[SimilarityTriplet]) -> Result<(), CorpusError> {
    write_jsonl(path, triplets)
}

pub fn read_triplets(path: &Path) -> Result<Vec<SimilarityTriplet>, CorpusError> {
    read_jsonl(path)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CorpusError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::io::BufWriter::new(fs::File::create(&tmp)?);
        for item in items {
            serde_json::to_writer(&mut f, item).map_err(|e| CorpusError::Io(e.to_string()))?;
            f.write_all(b"\n")?;
        }
        f.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(line).map_err(|e| CorpusError::Format {
            record: i + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}
