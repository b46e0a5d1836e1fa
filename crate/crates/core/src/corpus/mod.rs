//! Synthetic MiniSol corpora with exact line labels.
//!
//! Three vulnerability classes are planted, each visible only through
//! dependence structure:
//!
//! - [`VulnClass::DeadAfterCall`]: an assignment placed after an `ext_call`
//!   in the same block.
//! - [`VulnClass::UncheckedDiv`]: a division whose identifier denominator was
//!   last defined without an `assert_nonzero` guard.
//! - [`VulnClass::LoopOverflow`]: an addition whose identifier operand was
//!   last defined inside a loop, on a line not enclosed by any `if`.
//!
//! [`label_oracle`] recomputes labels from a parsed program and is the
//! reference the generator is checked against.

mod generator;
mod io;
mod ir;
mod oracle;
mod rename;
mod similarity;

pub use generator::{generate_program, GeneratedProgram, PlantSpec, SizeSpec, MAX_ATTEMPTS};
pub use io::{read_corpus, read_triplets, write_corpus, write_triplets};
pub use oracle::label_oracle;
pub use rename::{alpha_rename, alpha_rename_source};
pub use similarity::{generate_similarity_triplets, LinesOfInterest, SimilarityTriplet};

use crate::frontend::{NodeKind, SourceProgram};
use crate::seed::{rng_for, sub_seed};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("could not satisfy generation constraints after {attempts} attempts")]
    GenerationRetryExceeded { attempts: usize },
    #[error("malformed record {record}: {message}")]
    Format { record: usize, message: String },
    #[error("invalid generation spec: {0}")]
    InvalidSpec(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CorpusError {
    fn from(e: std::io::Error) -> Self {
        CorpusError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VulnClass {
    DeadAfterCall,
    UncheckedDiv,
    LoopOverflow,
}

impl VulnClass {
    pub const ALL: [VulnClass; 3] = [VulnClass::DeadAfterCall, VulnClass::UncheckedDiv, VulnClass::LoopOverflow];
}

impl fmt::Display for VulnClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledLine {
    pub line: usize,
    pub label: u8,
    #[serde(default)]
    pub vuln: Option<VulnClass>,
}

impl LabeledLine {
    pub fn new(line: usize, vuln: Option<VulnClass>) -> Self {
        LabeledLine {
            line,
            label: vuln.is_some() as u8,
            vuln,
        }
    }
}

/// One statement as written by the generator: its line, function, kind,
/// and the variables it defines (parameters for a function header).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementRecord {
    pub line: usize,
    pub function: String,
    pub kind: NodeKind,
    pub writes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub source: String,
    pub labels: Vec<LabeledLine>,
    pub split: Split,
}

impl CorpusRecord {
    pub fn program(&self) -> SourceProgram {
        SourceProgram::new(self.id.clone(), self.source.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub programs: usize,
    pub size: SizeSpec,
    /// Probability of flipping each label after generation.
    pub label_noise: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            programs: 200,
            size: SizeSpec::default(),
            label_noise: 0.0,
        }
    }
}

/// Generate `spec.programs` programs and assign 70/15/15 splits by program.
pub fn generate_corpus(seed: u64, spec: &CorpusSpec) -> Result<Vec<CorpusRecord>, CorpusError> {
    if !(0.0..=1.0).contains(&spec.label_noise) {
        return Err(CorpusError::InvalidSpec(format!("label noise {} outside [0, 1]", spec.label_noise)));
    }
    let gen_seed = sub_seed(seed, crate::seed::GENERATION);
    let mut records = Vec::with_capacity(spec.programs);
    for i in 0..spec.programs {
        let g = generate_program(sub_seed(gen_seed, &format!("program/{i}")), &spec.size)?;
        records.push(CorpusRecord {
            id: format!("prog-{i:04}"),
            source: g.program.source,
            labels: g.labels,
            split: Split::Train,
        });
    }
    let splits = assign_splits(records.len(), seed);
    for (r, s) in records.iter_mut().zip(splits) {
        r.split = s;
    }
    if spec.label_noise > 0.0 {
        let mut rng = rng_for(seed, "label_noise");
        for l in records.iter_mut().flat_map(|r| r.labels.iter_mut()) {
            if rng.gen_bool(spec.label_noise) {
                // a flipped label no longer says anything about the class
                l.label = 1 - l.label;
                l.vuln = None;
            }
        }
    }
    Ok(records)
}

/// Seeded 70/15/15 split of `n` programs.
pub fn assign_splits(n: usize, seed: u64) -> Vec<Split> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(seed, "split"));
    let n_train = (n as f64 * 0.70).round() as usize;
    let n_val = (n as f64 * 0.15).round() as usize;
    let mut out = vec![Split::Test; n];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }
    out
}

pub fn positive_rate(records: &[CorpusRecord]) -> f64 {
    let (pos, total) = records
        .iter()
        .flat_map(|r| &r.labels)
        .fold((0usize, 0usize), |(p, t), l| (p + l.label as usize, t + 1));
    if total == 0 {
        0.0
    } else {
        pos as f64 / total as f64
    }
}

/// SHA-256 over the serialized records, identifying a corpus in results.
pub fn corpus_hash(records: &[CorpusRecord]) -> String {
    let mut h = Sha256::new();
    for r in records {
        h.update(serde_json::to_vec(r).expect("records serialize"));
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// A labeled line addressed by its record index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LineExample {
    pub record: usize,
    pub line: usize,
    pub label: u8,
}

pub fn line_examples(records: &[CorpusRecord], split: Split) -> Vec<LineExample> {
    records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.split == split)
        .flat_map(|(i, r)| {
            r.labels.iter().map(move |l| LineExample {
                record: i,
                line: l.line,
                label: l.label,
            })
        })
        .collect()
}

/// Keep every positive and a uniform sample of at most `ratio` negatives
/// per positive, preserving order.
pub fn subsample_negatives(examples: &[LineExample], ratio: f64, seed: u64) -> Vec<LineExample> {
    assert!(ratio >= 1.0, "ratio must be at least 1");
    let positives = examples.iter().filter(|e| e.label == 1).count();
    let negatives: Vec<usize> = (0..examples.len()).filter(|&i| examples[i].label == 0).collect();
    let keep = ((ratio * positives as f64).floor() as usize).min(negatives.len());
    let mut rng = rng_for(seed, crate::seed::SUBSAMPLE);
    let mut kept = vec![false; examples.len()];
    for j in index::sample(&mut rng, negatives.len(), keep) {
        kept[negatives[j]] = true;
    }
    examples
        .iter()
        .enumerate()
        .filter(|&(i, e)| e.label == 1 || kept[i])
        .map(|(_, e)| *e)
        .collect()
}

#[cfg(test)]
mod tests;
