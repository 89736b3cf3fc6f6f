use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ncc::Matrix;
use super::patches::PatchGrid;
use super::SacConfig;
use crate::error::{Error, Result};
use crate::tensor::FeatureMap;

/// How source patches aggregate reference patches.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrespondenceMode {
    /// Gate out reference patches below the semantic threshold, then softmax
    /// over the survivors. Matched rows sum to 1.
    #[default]
    SemanticSoft,
    /// Softmax over every reference patch, then multiply by semantic NCC.
    /// Rows may sum to less than 1.
    SemanticLiteral,
    /// Softmax over every reference patch, no semantics.
    PlainSoft,
    /// One-hot argmax of NCC; ties go to the smallest reference index.
    Nearest,
}

impl std::str::FromStr for CorrespondenceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "semantic_soft" => Ok(Self::SemanticSoft),
            "semantic_literal" => Ok(Self::SemanticLiteral),
            "plain_soft" => Ok(Self::PlainSoft),
            "nearest" => Ok(Self::Nearest),
            other => Err(format!(
                "unknown mode {other:?} (expected semantic_soft, semantic_literal, plain_soft or nearest)"
            )),
        }
    }
}

/// Per-source-patch weight rows over reference patches.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrespondenceField {
    n_source: usize,
    n_reference: usize,
    weights: Vec<f32>,
    mode: CorrespondenceMode,
    unmatched: Vec<usize>,
}

impl CorrespondenceField {
    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn n_reference(&self) -> usize {
        self.n_reference
    }

    pub fn mode(&self) -> CorrespondenceMode {
        self.mode
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.weights[i * self.n_reference..(i + 1) * self.n_reference]
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    /// Source patches with no admissible reference patch, ascending.
    pub fn unmatched(&self) -> &[usize] {
        &self.unmatched
    }

    pub fn is_matched(&self, i: usize) -> bool {
        self.unmatched.binary_search(&i).is_err()
    }

    /// Heaviest reference patch for source patch `i` (first on ties).
    pub fn best_match(&self, i: usize) -> Option<usize> {
        if !self.is_matched(i) {
            return None;
        }
        let row = self.row(i);
        let mut best = 0;
        for (j, &w) in row.iter().enumerate() {
            if w > row[best] {
                best = j;
            }
        }
        Some(best)
    }
}

/// Candidate filter consulted in addition to the semantic gate.
pub(crate) type Window<'a> = &'a (dyn Fn(usize, usize) -> bool + Sync);

/// Softmax of `beta * ncc` over `candidates`, written into `out`.
fn softmax_into(ncc: &[f64], candidates: &[usize], beta: f64, out: &mut [f64]) {
    let max = candidates
        .iter()
        .map(|&j| beta * ncc[j])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for &j in candidates {
        let e = (beta * ncc[j] - max).exp();
        out[j] = e;
        sum += e;
    }
    for &j in candidates {
        out[j] /= sum;
    }
}

/// Returns the weight row and whether the row is matched.
fn correspond_row(
    i: usize,
    ncc: &[f64],
    sem: &[f64],
    cfg: &SacConfig,
    window: Option<Window<'_>>,
) -> (Vec<f64>, bool) {
    let n = ncc.len();
    let gate = |j: usize| match cfg.mode {
        CorrespondenceMode::SemanticSoft => sem[j] >= cfg.semantic_gate_threshold,
        _ => true,
    };
    let mut candidates: Vec<usize> = match window {
        Some(win) => (0..n).filter(|&j| gate(j) && win(i, j)).collect(),
        None => Vec::new(),
    };
    // an empty guidance window falls back to the unrestricted candidate set
    if candidates.is_empty() {
        candidates = (0..n).filter(|&j| gate(j)).collect();
    }
    let mut row = vec![0f64; n];
    if candidates.is_empty() {
        return (row, false);
    }
    match cfg.mode {
        CorrespondenceMode::SemanticSoft | CorrespondenceMode::PlainSoft => {
            softmax_into(ncc, &candidates, cfg.temperature, &mut row);
            (row, true)
        }
        CorrespondenceMode::SemanticLiteral => {
            softmax_into(ncc, &candidates, cfg.temperature, &mut row);
            let mut any = false;
            for &j in &candidates {
                row[j] *= sem[j];
                any |= row[j] > 0.0;
            }
            (row, any)
        }
        CorrespondenceMode::Nearest => {
            let mut best = candidates[0];
            for &j in &candidates[1..] {
                if ncc[j] > ncc[best] {
                    best = j;
                }
            }
            row[best] = 1.0;
            (row, true)
        }
    }
}

pub(crate) fn correspond_windowed(
    ncc: &Matrix,
    semncc: &Matrix,
    cfg: &SacConfig,
    window: Option<Window<'_>>,
) -> Result<CorrespondenceField> {
    if ncc.rows() != semncc.rows() || ncc.cols() != semncc.cols() {
        return Err(Error::shape(format!(
            "NCC {}x{} and semantic NCC {}x{} differ",
            ncc.rows(),
            ncc.cols(),
            semncc.rows(),
            semncc.cols()
        )));
    }
    let (n_source, n_reference) = (ncc.rows(), ncc.cols());
    let mut weights = vec![0f32; n_source * n_reference];
    let mut matched = vec![true; n_source];
    if n_reference > 0 {
        weights
            .par_chunks_mut(n_reference)
            .zip(matched.par_iter_mut())
            .enumerate()
            .for_each(|(i, (out, ok))| {
                let (row, m) = correspond_row(i, ncc.row(i), semncc.row(i), cfg, window);
                for (o, w) in out.iter_mut().zip(row) {
                    *o = w as f32;
                }
                *ok = m;
            });
    } else {
        matched.iter_mut().for_each(|m| *m = false);
    }
    let unmatched = matched
        .iter()
        .enumerate()
        .filter(|(_, &m)| !m)
        .map(|(i, _)| i)
        .collect();
    Ok(CorrespondenceField {
        n_source,
        n_reference,
        weights,
        mode: cfg.mode,
        unmatched,
    })
}

/// Turns NCC and semantic NCC matrices into weight rows per `cfg.mode`.
/// Rows with no admissible candidate are recorded as unmatched.
pub fn correspond(ncc: &Matrix, semncc: &Matrix, cfg: &SacConfig) -> Result<CorrespondenceField> {
    correspond_windowed(ncc, semncc, cfg, None)
}

/// Rebuilds the source tiling from weighted reference patches. Unmatched
/// source patches are copied from `px` unchanged. Pixels outside the grid
/// are zero.
pub fn reconstruct(
    field: &CorrespondenceField,
    py: &PatchGrid,
    px: &PatchGrid,
) -> Result<FeatureMap> {
    let patches = reconstruct_patches(field, py, px)?;
    let (h, w) = px.map_dims();
    px.stitch(&patches, &FeatureMap::zeros(px.channels(), h, w))
}

pub(crate) fn reconstruct_patches(
    field: &CorrespondenceField,
    py: &PatchGrid,
    px: &PatchGrid,
) -> Result<Vec<f32>> {
    if field.n_source != px.len() || field.n_reference != py.len() {
        return Err(Error::shape(format!(
            "field {}x{} does not match grids of {} source and {} reference patches",
            field.n_source,
            field.n_reference,
            px.len(),
            py.len()
        )));
    }
    if px.patch_len() != py.patch_len() {
        return Err(Error::shape("source and reference patch shapes differ"));
    }
    let dim = px.patch_len();
    let mut out = vec![0f32; px.len() * dim];
    if dim == 0 {
        return Ok(out);
    }
    out.par_chunks_mut(dim).enumerate().for_each(|(i, dst)| {
        if !field.is_matched(i) {
            dst.copy_from_slice(px.patch(i));
            return;
        }
        let mut acc = vec![0f64; dim];
        for (j, &w) in field.row(i).iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let w = w as f64;
            for (a, &v) in acc.iter_mut().zip(py.patch(j)) {
                *a += w * v as f64;
            }
        }
        for (d, a) in dst.iter_mut().zip(acc) {
            *d = a as f32;
        }
    });
    Ok(out)
}
