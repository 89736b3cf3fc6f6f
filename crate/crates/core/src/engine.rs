//! End-to-end transfer: faces in, reconstructions, recipe composition and
//! rendering out. The CLI and the service are thin adapters over this.

use serde::{Deserialize, Serialize};

use crate::control::{assign_parts, fuse_references, shade_interpolate, PartLayer, RegionMap, RegionPyramid};
use crate::encoder::encode_builtin;
use crate::error::{Error, Result};
use crate::labels::{Part, DEFAULT_EYE_SHADOW_RADIUS};
use crate::metrics::{self, EvalInputs, MetricReport};
use crate::recipe::TransferRecipe;
use crate::sac::{
    alpha_blend, apply_fields, apply_transfer_mask, compute_fields, label_agreement, CorrespondenceField, SacConfig,
};
use crate::synthesis::{render, RenderConfig, RenderContext};
use crate::tensor::{level_dim, BinaryMask, FeatureMap, FeaturePyramid, LabelMask, MaskPyramid, Provenance, PYRAMID_LEVELS};

/// Default half-width, in base pixels, of the coarse-guidance window.
pub const DEFAULT_GUIDANCE_RADIUS: u32 = 48;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub sac: SacConfig,
    pub render: RenderConfig,
    pub gradient_channels: bool,
    pub eye_shadow_radius: u32,
    pub guidance_radius: u32,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            sac: SacConfig::default(),
            render: RenderConfig::default(),
            gradient_channels: true,
            eye_shadow_radius: DEFAULT_EYE_SHADOW_RADIUS,
            guidance_radius: DEFAULT_GUIDANCE_RADIUS,
        }
    }
}

impl Settings {
    /// The correspondence config actually used, with the renderer's
    /// coarse-guidance switch folded in.
    pub fn effective_sac(&self) -> SacConfig {
        let mut sac = self.sac.clone();
        sac.guidance_radius = self.render.coarse_guidance.then_some(self.guidance_radius);
        sac
    }

    /// Stable key over everything a [`Reconstruction`] depends on.
    pub fn reconstruction_key(&self) -> String {
        serde_json::json!({
            "sac": self.effective_sac(),
            "gradients": self.gradient_channels,
            "eyeShadowRadius": self.eye_shadow_radius,
        })
        .to_string()
    }
}

/// A face image with its parse and everything derived from them.
#[derive(Clone, Debug)]
pub struct Face {
    image: FeatureMap,
    labels: LabelMask,
    /// Built-in pyramid; its finest level carries the pixels.
    pyramid: FeaturePyramid,
    /// Imported features used for matching instead of `pyramid`.
    match_features: Option<FeaturePyramid>,
    masks: MaskPyramid,
    regions: RegionMap,
    region_levels: RegionPyramid,
}

impl Face {
    pub fn new(image: FeatureMap, labels: LabelMask, settings: &Settings) -> Result<Self> {
        if image.channels() != 3 {
            return Err(Error::shape(format!("face image needs 3 channels, got {}", image.channels())));
        }
        if (image.height(), image.width()) != (labels.height(), labels.width()) {
            return Err(Error::shape(format!(
                "image {}x{} and mask {}x{} differ in size",
                image.height(),
                image.width(),
                labels.height(),
                labels.width()
            )));
        }
        let pyramid = encode_builtin(&image, settings.gradient_channels)?;
        let masks = MaskPyramid::from_labels(&labels);
        let regions = RegionMap::from_labels(&labels, settings.eye_shadow_radius);
        let region_levels = RegionPyramid::new(&regions);
        Ok(Self {
            image,
            labels,
            pyramid,
            match_features: None,
            masks,
            regions,
            region_levels,
        })
    }

    /// Matches on `features` instead of the built-in pyramid. Pixels still
    /// come from the built-in pyramid.
    pub fn with_match_features(mut self, features: FeaturePyramid) -> Result<Self> {
        if (features.base_height(), features.base_width()) != (self.pyramid.base_height(), self.pyramid.base_width()) {
            return Err(Error::shape(format!(
                "imported features are {}x{} at the finest level, image is {}x{}",
                features.base_height(),
                features.base_width(),
                self.pyramid.base_height(),
                self.pyramid.base_width()
            )));
        }
        self.match_features = Some(features);
        Ok(self)
    }

    pub fn image(&self) -> &FeatureMap {
        &self.image
    }

    pub fn labels(&self) -> &LabelMask {
        &self.labels
    }

    pub fn pyramid(&self) -> &FeaturePyramid {
        &self.pyramid
    }

    pub fn match_features(&self) -> &FeaturePyramid {
        self.match_features.as_ref().unwrap_or(&self.pyramid)
    }

    pub fn masks(&self) -> &MaskPyramid {
        &self.masks
    }

    pub fn regions(&self) -> &RegionMap {
        &self.regions
    }

    pub fn region_levels(&self) -> &RegionPyramid {
        &self.region_levels
    }
}

/// Correspondence fields of `source` against one reference, the
/// reconstructed pyramid over every makeup part, and the per-pixel share of
/// that reconstruction drawn from same-label reference pixels.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub fields: Vec<CorrespondenceField>,
    pub fxhat: FeaturePyramid,
    /// One channel; only the finest level is meaningful, coarser ones are 1.
    pub agreement: FeaturePyramid,
}

/// Runs the correspondence of `source` against `reference`. Transfer and
/// removal both go through here; removal just passes the made-up face as
/// `source`.
pub fn reconstruct(source: &Face, reference: &Face, settings: &Settings) -> Result<Reconstruction> {
    let sac = settings.effective_sac();
    let fields = compute_fields(
        source.match_features(),
        reference.match_features(),
        &source.masks,
        &reference.masks,
        &sac,
    )?;
    rebuild(fields, source, reference, settings)
}

/// Reconstruction from precomputed fields.
pub fn rebuild(fields: Vec<CorrespondenceField>, source: &Face, reference: &Face, settings: &Settings) -> Result<Reconstruction> {
    let sac = settings.effective_sac();
    let mt = source.region_levels.masks(&Part::ALL);
    let fxhat = apply_fields(&fields, &source.pyramid, &reference.pyramid, &mt, &sac)?;
    let raw = label_agreement(&fields[0], source.masks.level(0), reference.masks.level(0), sac.patch_sizes[0])?;
    let ones = ones_like(&raw);
    let finest = alpha_blend(&apply_transfer_mask(&raw, &ones, &mt[0])?, &ones, sac.alphas[0])?;
    let agreement = unit_pyramid(finest)?;
    Ok(Reconstruction { fields, fxhat, agreement })
}

fn ones_like(map: &FeatureMap) -> FeatureMap {
    FeatureMap::new(map.channels(), map.height(), map.width(), vec![1.0; map.data().len()]).expect("finite")
}

/// `finest` on top of all-ones coarser levels.
fn unit_pyramid(finest: FeatureMap) -> Result<FeaturePyramid> {
    let (h, w) = (finest.height(), finest.width());
    let mut levels = vec![finest];
    for l in 1..PYRAMID_LEVELS {
        levels.push(FeatureMap::new(1, level_dim(h, l), level_dim(w, l), vec![1.0; level_dim(h, l) * level_dim(w, l)])?);
    }
    FeaturePyramid::new(levels, Provenance::Imported)
}

/// Per-recipe mixing: part assignment or weighted fusion restricted to the
/// active parts, then shade against `fx`.
pub fn compose_pyramids(
    fx: &FeaturePyramid,
    fxhats: &[&FeaturePyramid],
    regions: &RegionPyramid,
    recipe: &TransferRecipe,
) -> Result<FeaturePyramid> {
    recipe.validate(fxhats.len())?;
    let parts = recipe.active_parts();
    let mt = regions.masks(&parts);
    let mixed = if recipe.part_assignment.is_empty() {
        let fused = fuse_references(fxhats, &recipe.weights(fxhats.len()))?;
        fx.map_levels(|l, x| apply_transfer_mask(fused.level(l), x, &mt[l]))?
    } else {
        let part_masks: Vec<(Part, Vec<BinaryMask>)> = parts.iter().map(|&p| (p, regions.masks(&[p]))).collect();
        let layers: Vec<PartLayer<'_>> = part_masks
            .iter()
            .map(|(p, masks)| PartLayer {
                masks,
                features: fxhats[recipe.part_assignment[p]],
            })
            .collect();
        assign_parts(&layers, fx, &mt)?
    };
    shade_interpolate(&mixed, fx, recipe.shade)
}

/// [`compose_pyramids`] over a face's own pyramid and regions.
pub fn compose(source: &Face, fxhats: &[&FeaturePyramid], recipe: &TransferRecipe) -> Result<FeaturePyramid> {
    compose_pyramids(&source.pyramid, fxhats, &source.region_levels, recipe)
}

/// Composed pyramid to pixels. `agreement` is the composed finest-level
/// agreement map, when known.
pub fn render_face(
    source: &Face,
    pyramid: &FeaturePyramid,
    agreement: Option<&FeatureMap>,
    parts: &[Part],
    settings: &Settings,
) -> Result<FeatureMap> {
    let ctx = RenderContext {
        source: &source.image,
        regions: &source.regions,
        parts,
        patch_size: settings.sac.patch_sizes[0],
        agreement,
    };
    render(pyramid, &settings.render, Some(&ctx))
}

#[derive(Clone, Debug)]
pub struct TransferOutput {
    pub image: FeatureMap,
    /// The composed pyramid the image was rendered from.
    pub pyramid: FeaturePyramid,
    pub transfer_mask: BinaryMask,
}

/// Composes and renders from ready reconstructions. `target` is the face
/// receiving makeup (the reference itself for removal).
pub fn synthesize(
    target: &Face,
    recs: &[&Reconstruction],
    recipe: &TransferRecipe,
    settings: &Settings,
) -> Result<TransferOutput> {
    let fxhats: Vec<&FeaturePyramid> = recs.iter().map(|r| &r.fxhat).collect();
    let pyramid = compose(target, &fxhats, recipe)?;
    let agreements: Vec<&FeaturePyramid> = recs.iter().map(|r| &r.agreement).collect();
    let ones = unit_pyramid(ones_like(agreements[0].level(0)))?;
    let agreement = compose_pyramids(&ones, &agreements, &target.region_levels, recipe)?;
    let parts = recipe.active_parts();
    let image = render_face(target, &pyramid, Some(agreement.level(0)), &parts, settings)?;
    Ok(TransferOutput {
        image,
        pyramid,
        transfer_mask: target.regions.mask(&parts),
    })
}

/// Full transfer from raw faces. With `recipe.removal`, strips makeup from
/// the single reference using `source` as the bare exemplar.
pub fn transfer(source: &Face, references: &[Face], recipe: &TransferRecipe, base: &Settings) -> Result<TransferOutput> {
    recipe.validate(references.len())?;
    let settings = recipe.apply(base);
    settings.sac.validate()?;
    if recipe.removal {
        let made_up = &references[0];
        let rec = reconstruct(made_up, source, &settings)?;
        return synthesize(made_up, &[&rec], recipe, &settings);
    }
    let recs = references
        .iter()
        .map(|r| reconstruct(source, r, &settings))
        .collect::<Result<Vec<_>>>()?;
    let views: Vec<&Reconstruction> = recs.iter().collect();
    synthesize(source, &views, recipe, &settings)
}

/// Reference the metrics compare against: the one covering most assigned
/// parts, otherwise the heaviest fusion weight. Lowest index on ties.
pub fn dominant_reference(recipe: &TransferRecipe, n_refs: usize) -> usize {
    let score: Vec<f64> = if recipe.part_assignment.is_empty() {
        recipe.weights(n_refs)
    } else {
        (0..n_refs)
            .map(|i| recipe.part_assignment.values().filter(|&&r| r == i).count() as f64)
            .collect()
    };
    let mut best = 0;
    for (i, &v) in score.iter().enumerate() {
        if v > score[best] {
            best = i;
        }
    }
    best
}

/// Metrics of `out`, which `target` received from `reference`. For removal
/// `target` is the made-up face and `reference` the bare one.
pub fn evaluate_output(target: &Face, reference: &Face, out: &TransferOutput, settings: &Settings) -> Result<MetricReport> {
    metrics::evaluate(&EvalInputs {
        out: &out.image,
        src: &target.image,
        reference: &reference.image,
        src_mask: &target.labels,
        ref_mask: &reference.labels,
        transfer_mask: &out.transfer_mask,
        fxhat: &out.pyramid,
        reference_features: Some(&reference.pyramid),
        eye_shadow_radius: settings.eye_shadow_radius,
    })
}

/// True when `pyr` can be rendered to pixels.
pub fn renderable(pyr: &FeaturePyramid) -> bool {
    matches!(pyr.provenance(), Provenance::Builtin { .. })
}
