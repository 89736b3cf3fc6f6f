//! User intent for one transfer, in the JSON form shared by the CLI and the
//! HTTP service.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::control::check_weights;
use crate::engine::Settings;
use crate::error::{Error, Result};
use crate::labels::Part;
use crate::sac::CorrespondenceMode;
use crate::tensor::PYRAMID_LEVELS;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct TransferRecipe {
    /// 0 keeps the source, 1 applies the full reconstruction.
    pub shade: f64,
    /// Service reference ids, in the order indices refer to. Empty means
    /// every reference of the session. Ignored by the CLI.
    pub references: Vec<String>,
    /// Fusion weights, one per reference. Empty means uniform.
    pub ref_weights: Vec<f64>,
    /// Part to reference index. When non-empty, only assigned parts
    /// receive makeup.
    pub part_assignment: BTreeMap<Part, usize>,
    pub transfer_parts: Vec<Part>,
    /// Strip makeup from the (single) reference using the source as the
    /// bare exemplar.
    pub removal: bool,

    pub mode: Option<CorrespondenceMode>,
    pub temperature: Option<f64>,
    pub alphas: Option<[f64; PYRAMID_LEVELS]>,
    pub hm: Option<bool>,
    pub feather: Option<u32>,
    pub coarse_guidance: Option<bool>,
}

impl Default for TransferRecipe {
    fn default() -> Self {
        Self {
            shade: 1.0,
            references: Vec::new(),
            ref_weights: Vec::new(),
            part_assignment: BTreeMap::new(),
            transfer_parts: Part::ALL.to_vec(),
            removal: false,
            mode: None,
            temperature: None,
            alphas: None,
            hm: None,
            feather: None,
            coarse_guidance: None,
        }
    }
}

impl TransferRecipe {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Recipe(format!("invalid recipe JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("recipe serializes")
    }

    /// Checks the recipe against `n_refs` available references.
    pub fn validate(&self, n_refs: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.shade) {
            return Err(Error::Recipe(format!("shade {} outside [0, 1]", self.shade)));
        }
        if n_refs == 0 {
            return Err(Error::Recipe("at least one reference is required".into()));
        }
        if !self.ref_weights.is_empty() {
            check_weights(&self.ref_weights, n_refs)?;
        }
        if let Some((part, &idx)) = self.part_assignment.iter().find(|(_, &i)| i >= n_refs) {
            return Err(Error::Recipe(format!(
                "{part} assigned to reference {idx}, but only {n_refs} given"
            )));
        }
        if self.removal && n_refs != 1 {
            return Err(Error::Recipe(format!("removal takes exactly one reference, got {n_refs}")));
        }
        if let Some(t) = self.temperature {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Recipe(format!("temperature must be positive, got {t}")));
            }
        }
        if let Some(a) = self.alphas.iter().flatten().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::Recipe(format!("alpha {a} outside [0, 1]")));
        }
        Ok(())
    }

    /// Fusion weights, uniform when none were given.
    pub fn weights(&self, n_refs: usize) -> Vec<f64> {
        if self.ref_weights.is_empty() {
            vec![1.0 / n_refs as f64; n_refs]
        } else {
            self.ref_weights.clone()
        }
    }

    /// Parts that receive makeup: the assigned ones when an assignment is
    /// given, otherwise `transfer_parts`. Sorted and deduplicated.
    pub fn active_parts(&self) -> Vec<Part> {
        let mut parts: Vec<Part> = if self.part_assignment.is_empty() {
            self.transfer_parts.clone()
        } else {
            self.part_assignment
                .keys()
                .copied()
                .filter(|p| self.transfer_parts.contains(p))
                .collect()
        };
        parts.sort();
        parts.dedup();
        parts
    }

    /// `settings` with this recipe's overrides applied.
    pub fn apply(&self, settings: &Settings) -> Settings {
        let mut s = settings.clone();
        if let Some(m) = self.mode {
            s.sac.mode = m;
        }
        if let Some(t) = self.temperature {
            s.sac.temperature = t;
        }
        if let Some(a) = self.alphas {
            s.sac.alphas = a;
        }
        if let Some(hm) = self.hm {
            s.render.hm_postprocess = hm;
        }
        if let Some(r) = self.feather {
            s.render.seam_feather_radius = r;
        }
        if let Some(g) = self.coarse_guidance {
            s.render.coarse_guidance = g;
        }
        s
    }
}
