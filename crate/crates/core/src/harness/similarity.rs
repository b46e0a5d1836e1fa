//! L2 distances between line representations across similarity triplets.

use super::ablation::write_atomic;
use super::metrics::mean_std;
use super::HarnessError;
use crate::corpus::SimilarityTriplet;
use crate::model::VulcanModel;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

pub const PAIRS: [&str; 3] = ["base-mod_dep", "base-no_mod_dep", "mod_dep-no_mod_dep"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub pair: String,
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
    pub n: usize,
    pub distances: Vec<f64>,
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Distances between the line-of-interest vectors of each triplet, one row
/// per pair in [`PAIRS`] order.
pub fn similarity_experiment(model: &VulcanModel, triplets: &[SimilarityTriplet]) -> Result<Vec<DistanceRow>, HarnessError> {
    let mut dists: [Vec<f64>; 3] = Default::default();
    for t in triplets {
        let loi = t.line_of_interest;
        let rep = |p: &crate::frontend::SourceProgram, line| -> Result<Vec<f64>, HarnessError> {
            let prepared = model.prepare(&p.id, &p.source)?;
            Ok(model.represent_line(&prepared, line)?)
        };
        let base = rep(&t.base, loi.base)?;
        let modified = rep(&t.mod_dep, loi.mod_dep)?;
        let nomod = rep(&t.no_mod_dep, loi.no_mod_dep)?;
        dists[0].push(l2(&base, &modified));
        dists[1].push(l2(&base, &nomod));
        dists[2].push(l2(&modified, &nomod));
    }
    Ok(PAIRS
        .iter()
        .zip(dists)
        .map(|(pair, d)| {
            let (mean, std) = mean_std(&d);
            DistanceRow {
                pair: pair.to_string(),
                mean,
                std,
                n: d.len(),
                distances: d,
            }
        })
        .collect())
}

pub fn write_similarity_csv(path: &Path, rows: &[DistanceRow]) -> Result<(), HarnessError> {
    let mut out = String::from("pair,mean,std,n\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.pair, r.mean, r.std, r.n);
    }
    write_atomic(path, out.as_bytes())
}
