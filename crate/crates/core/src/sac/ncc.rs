use rayon::prelude::*;

use super::patches::{MaskPatches, PatchGrid};
use crate::error::{Error, Result};

/// Dense row-major `f64` matrix indexed `[source patch, reference patch]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Each patch divided by `max(|patch|, eps)`, widened to `f64`.
fn normalized_rows(grid: &PatchGrid, eps: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len() * grid.patch_len());
    for p in grid.patches() {
        let norm = p.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
        let scale = 1.0 / norm.max(eps);
        out.extend(p.iter().map(|&v| v as f64 * scale));
    }
    out
}

/// Cosine similarity between every source and every reference patch, with
/// norms floored at `eps`. Rows are computed independently, so the result
/// does not depend on the thread count.
pub fn ncc_matrix(px: &PatchGrid, py: &PatchGrid, eps: f64) -> Result<Matrix> {
    if px.channels() != py.channels() || px.patch_size() != py.patch_size() {
        return Err(Error::shape(format!(
            "NCC needs matching patches: {} channels / k={} vs {} channels / k={}",
            px.channels(),
            px.patch_size(),
            py.channels(),
            py.patch_size()
        )));
    }
    let dim = px.patch_len();
    let (nx, ny) = (px.len(), py.len());
    let ux = normalized_rows(px, eps);
    let uy = normalized_rows(py, eps);
    let mut data = vec![0f64; nx * ny];
    if ny > 0 {
        data.par_chunks_mut(ny).enumerate().for_each(|(i, row)| {
            let a = &ux[i * dim..(i + 1) * dim];
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = dot(a, &uy[j * dim..(j + 1) * dim]);
            }
        });
    }
    Matrix::from_vec(nx, ny, data)
}

/// NCC of flattened one-hot mask patches. For one-hot vectors the dot
/// product counts positions whose labels agree and each norm is `k`, so the
/// entry is the fraction of agreeing positions.
pub fn sem_ncc_matrix(mx: &MaskPatches, my: &MaskPatches, eps: f64) -> Result<Matrix> {
    if mx.patch_size() != my.patch_size() {
        return Err(Error::shape(format!(
            "semantic NCC needs equal patch sizes, got {} and {}",
            mx.patch_size(),
            my.patch_size()
        )));
    }
    let k = mx.patch_size() as f64;
    let denom = k.max(eps) * k.max(eps);
    let (nx, ny) = (mx.len(), my.len());
    let mut data = vec![0f64; nx * ny];
    if ny > 0 {
        data.par_chunks_mut(ny).enumerate().for_each(|(i, row)| {
            let a = mx.patch(i);
            for (j, slot) in row.iter_mut().enumerate() {
                let agree = a.iter().zip(my.patch(j)).filter(|(p, q)| p == q).count();
                *slot = agree as f64 / denom;
            }
        });
    }
    Matrix::from_vec(nx, ny, data)
}
