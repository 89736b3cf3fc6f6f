use crate::error::{Error, Result};
use crate::tensor::{FeatureMap, OneHotMask};

/// Non-overlapping `k x k` patches of a feature map, stride `k`, in row-major
/// grid order. Each patch is flattened channel-major (`c x k x k`).
#[derive(Clone, Debug, PartialEq)]
pub struct PatchGrid {
    channels: usize,
    patch: usize,
    grid_h: usize,
    grid_w: usize,
    map_h: usize,
    map_w: usize,
    data: Vec<f32>,
}

impl PatchGrid {
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn patch_size(&self) -> usize {
        self.patch
    }

    pub fn stride(&self) -> usize {
        self.patch
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn map_dims(&self) -> (usize, usize) {
        (self.map_h, self.map_w)
    }

    pub fn len(&self) -> usize {
        self.grid_h * self.grid_w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Length of one flattened patch.
    pub fn patch_len(&self) -> usize {
        self.channels * self.patch * self.patch
    }

    pub fn patch(&self, i: usize) -> &[f32] {
        let n = self.patch_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn patches(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.data.chunks_exact(self.patch_len())
    }

    /// Grid row/column of patch `i`.
    pub fn position(&self, i: usize) -> (usize, usize) {
        (i / self.grid_w, i % self.grid_w)
    }

    /// Writes flattened patches back to their grid positions. Pixels the grid
    /// does not cover are taken from `fill`.
    pub fn stitch(&self, patches: &[f32], fill: &FeatureMap) -> Result<FeatureMap> {
        if fill.dims() != (self.channels, self.map_h, self.map_w) {
            return Err(Error::shape(format!(
                "stitch target {:?} does not match grid source {:?}",
                fill.dims(),
                (self.channels, self.map_h, self.map_w)
            )));
        }
        if patches.len() != self.len() * self.patch_len() {
            return Err(Error::shape("patch buffer length does not match grid"));
        }
        let mut out = fill.clone();
        let (k, w, h) = (self.patch, self.map_w, self.map_h);
        let data = out.data_mut();
        for (i, p) in patches.chunks_exact(self.patch_len()).enumerate() {
            let (gy, gx) = self.position(i);
            for c in 0..self.channels {
                for dy in 0..k {
                    let src = &p[(c * k + dy) * k..(c * k + dy + 1) * k];
                    let row = (c * h + gy * k + dy) * w + gx * k;
                    data[row..row + k].copy_from_slice(src);
                }
            }
        }
        Ok(out)
    }
}

/// Splits `map` into non-overlapping `k x k` patches. Trailing rows and
/// columns not covered by a whole patch are left out.
pub fn extract_patches(map: &FeatureMap, k: usize) -> Result<PatchGrid> {
    let (c, h, w) = map.dims();
    if k == 0 || k > h || k > w {
        return Err(Error::shape(format!(
            "patch size {k} does not fit a {h}x{w} map"
        )));
    }
    let (grid_h, grid_w) = (h / k, w / k);
    let mut data = Vec::with_capacity(grid_h * grid_w * c * k * k);
    let src = map.data();
    for gy in 0..grid_h {
        for gx in 0..grid_w {
            for ch in 0..c {
                for dy in 0..k {
                    let row = (ch * h + gy * k + dy) * w + gx * k;
                    data.extend_from_slice(&src[row..row + k]);
                }
            }
        }
    }
    Ok(PatchGrid {
        channels: c,
        patch: k,
        grid_h,
        grid_w,
        map_h: h,
        map_w: w,
        data,
    })
}

/// Patches of a one-hot mask, stored as the active class per pixel. A one-hot
/// patch is fully determined by those `k x k` class ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskPatches {
    patch: usize,
    grid_h: usize,
    grid_w: usize,
    classes: Vec<u8>,
}

impl MaskPatches {
    pub fn patch_size(&self) -> usize {
        self.patch
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn len(&self) -> usize {
        self.grid_h * self.grid_w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn patch(&self, i: usize) -> &[u8] {
        let n = self.patch * self.patch;
        &self.classes[i * n..(i + 1) * n]
    }

    /// True when this mask tiling lines up with a feature tiling.
    pub fn matches_grid(&self, grid: &PatchGrid) -> bool {
        self.patch == grid.patch_size() && self.grid_h == grid.grid_h() && self.grid_w == grid.grid_w()
    }
}

pub fn extract_mask_patches(mask: &OneHotMask, k: usize) -> Result<MaskPatches> {
    let (h, w) = (mask.height(), mask.width());
    if k == 0 || k > h || k > w {
        return Err(Error::shape(format!(
            "patch size {k} does not fit a {h}x{w} mask"
        )));
    }
    let idx = mask.class_indices();
    let (grid_h, grid_w) = (h / k, w / k);
    let mut classes = Vec::with_capacity(grid_h * grid_w * k * k);
    for gy in 0..grid_h {
        for gx in 0..grid_w {
            for dy in 0..k {
                let row = (gy * k + dy) * w + gx * k;
                classes.extend_from_slice(&idx[row..row + k]);
            }
        }
    }
    Ok(MaskPatches {
        patch: k,
        grid_h,
        grid_w,
        classes,
    })
}
