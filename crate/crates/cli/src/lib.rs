//! `spmt` command line. Every flag lands in a [`TransferRecipe`] or
//! [`Settings`] field; the work itself lives in `spmt-core`.
//!
//! Exit codes: 0 success, 1 rejected input (bad flag, missing or malformed
//! file, invalid recipe), 2 failure after the inputs were accepted.

use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use spmt_core::encoder::encode_builtin;
use spmt_core::engine::{dominant_reference, evaluate_output, transfer, TransferOutput};
use spmt_core::io::{load_image, load_label_mask, load_tensor, save_image, save_tensor};
use spmt_core::labels::Part;
use spmt_core::parallel::{pool, threads_from_env};
use spmt_core::sac::{CorrespondenceMode, SacConfig};
use spmt_core::synthesis::hm_composite_with_radius;
use spmt_core::{Face, FeaturePyramid, Provenance, Settings, TransferRecipe};

#[derive(Debug)]
enum Failure {
    User(String),
    Internal(String),
}

type Outcome<T = ()> = Result<T, Failure>;

fn user(e: impl std::fmt::Display) -> Failure {
    Failure::User(e.to_string())
}

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure::Internal(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "spmt", version, about = "Makeup transfer with semantic-aware patch correspondence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Put the reference makeup on the source face.
    Transfer(TransferArgs),
    /// Strip makeup from --source, using --ref as the bare exemplar.
    Remove(TransferArgs),
    /// Region-wise histogram matching baseline.
    Hm(PairArgs),
    /// Score an existing output image; JSON on standard output.
    Metrics(MetricsArgs),
    /// Write the built-in feature pyramid of an image as four tensor files.
    Encode(EncodeArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
struct FaceArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    source_mask: PathBuf,
    /// Reference image; repeat for several references.
    #[arg(long = "ref", required = true)]
    refs: Vec<PathBuf>,
    /// Label mask of each --ref, in the same order.
    #[arg(long = "ref-mask", required = true)]
    ref_masks: Vec<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct RecipeArgs {
    /// Recipe JSON file, or inline JSON. Flags below override its fields.
    #[arg(long)]
    recipe: Option<String>,
    #[arg(long)]
    shade: Option<f64>,
    /// Fusion weight of each --ref, in order.
    #[arg(long = "ref-weight")]
    ref_weights: Vec<f64>,
    /// semantic_soft, semantic_literal, plain_soft or nearest.
    #[arg(long)]
    mode: Option<String>,
    /// Softmax temperature.
    #[arg(long)]
    beta: Option<f64>,
    /// Per-level blend weight as level=value, level 0 finest.
    #[arg(long = "alpha")]
    alphas: Vec<String>,
    /// Comma-separated parts to transfer.
    #[arg(long, value_delimiter = ',')]
    parts: Vec<String>,
    /// part=refIndex; repeat per part.
    #[arg(long = "assign")]
    assign: Vec<String>,
    #[arg(long)]
    no_hm: bool,
    #[arg(long)]
    feather: Option<u32>,
    /// Disable the coarse-to-fine candidate window.
    #[arg(long)]
    no_guidance: bool,
}

#[derive(Args, Debug)]
struct TransferArgs {
    #[command(flatten)]
    faces: FaceArgs,
    #[command(flatten)]
    recipe: RecipeArgs,
    /// Four tensor files (levels 0..3) of matching features. The first
    /// group belongs to --source, later groups to each --ref in order.
    #[arg(long = "import-features", num_args = 4, action = clap::ArgAction::Append)]
    import_features: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the metric report as JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PairArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    source_mask: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long = "ref-mask")]
    ref_mask: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// The output image to score.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    faces: FaceArgs,
    #[command(flatten)]
    recipe: RecipeArgs,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[arg(long)]
    source: PathBuf,
    /// Directory for level0.spt .. level3.spt.
    #[arg(long)]
    out: PathBuf,
    /// Colour channels only.
    #[arg(long)]
    no_gradients: bool,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Browser origin allowed by CORS; any origin when absent.
    #[arg(long)]
    cors_origin: Option<String>,
    #[arg(long, default_value_t = 30)]
    ttl_minutes: u64,
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.render().to_string();
            eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
            return 1;
        }
    };
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let outcome = match pool(threads) {
        Ok(p) => p.install(|| dispatch(cli.command)),
        Err(e) => Err(internal(e)),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::User(m)) => {
            eprintln!("error: {}", one_line(&m));
            1
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {}", one_line(&m));
            2
        }
    }
}

fn one_line(m: &str) -> String {
    m.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Transfer(a) => run_transfer(a, false),
        Command::Remove(a) => run_transfer(a, true),
        Command::Hm(a) => run_hm(a),
        Command::Metrics(a) => run_metrics(a),
        Command::Encode(a) => run_encode(a),
        Command::Serve(a) => run_serve(a),
    }
}

/// Mode names are the recipe's JSON names.
fn parse_mode(value: &str) -> Outcome<CorrespondenceMode> {
    serde_json::from_value(serde_json::Value::String(value.to_string())).map_err(|_| {
        user(format!(
            "unknown mode {value:?} (expected semantic_soft, semantic_literal, plain_soft or nearest)"
        ))
    })
}

fn parse_level_value(spec: &str) -> Outcome<(usize, f64)> {
    let (l, v) = spec
        .split_once('=')
        .ok_or_else(|| user(format!("--alpha expects level=value, got {spec:?}")))?;
    let level: usize = l.trim().parse().map_err(|_| user(format!("bad level in --alpha {spec:?}")))?;
    if level >= spmt_core::tensor::PYRAMID_LEVELS {
        return Err(user(format!("--alpha level {level} out of range 0..=3")));
    }
    let value: f64 = v.trim().parse().map_err(|_| user(format!("bad value in --alpha {spec:?}")))?;
    Ok((level, value))
}

impl RecipeArgs {
    fn build(&self) -> Outcome<TransferRecipe> {
        let mut r = match &self.recipe {
            None => TransferRecipe::default(),
            Some(s) if s.trim_start().starts_with('{') => TransferRecipe::from_json(s).map_err(user)?,
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| user(format!("{path}: {e}")))?;
                TransferRecipe::from_json(&text).map_err(user)?
            }
        };
        if !r.references.is_empty() {
            log::warn!("recipe references are ignored on the command line; --ref decides");
            r.references.clear();
        }
        if let Some(s) = self.shade {
            r.shade = s;
        }
        if !self.ref_weights.is_empty() {
            r.ref_weights = self.ref_weights.clone();
        }
        if let Some(m) = &self.mode {
            r.mode = Some(parse_mode(m)?);
        }
        if let Some(b) = self.beta {
            r.temperature = Some(b);
        }
        if !self.alphas.is_empty() {
            let mut a = r.alphas.unwrap_or(SacConfig::default().alphas);
            for spec in &self.alphas {
                let (l, v) = parse_level_value(spec)?;
                a[l] = v;
            }
            r.alphas = Some(a);
        }
        if !self.parts.is_empty() {
            r.transfer_parts = self.parts.iter().map(|p| p.parse::<Part>().map_err(user)).collect::<Outcome<_>>()?;
        }
        for spec in &self.assign {
            let (p, i) = spec
                .split_once('=')
                .ok_or_else(|| user(format!("--assign expects part=refIndex, got {spec:?}")))?;
            let part: Part = p.parse().map_err(user)?;
            let idx: usize = i.trim().parse().map_err(|_| user(format!("bad reference index in --assign {spec:?}")))?;
            if r.part_assignment.insert(part, idx).is_some() {
                return Err(user(format!("{part} assigned twice")));
            }
        }
        if self.no_hm {
            r.hm = Some(false);
        }
        if let Some(f) = self.feather {
            r.feather = Some(f);
        }
        if self.no_guidance {
            r.coarse_guidance = Some(false);
        }
        Ok(r)
    }
}

fn load_face(image: &Path, mask: &Path, settings: &Settings) -> Outcome<Face> {
    let img = load_image(image).map_err(user)?;
    let labels = load_label_mask(mask).map_err(user)?;
    Face::new(img, labels, settings).map_err(user)
}

fn load_pyramid(paths: &[PathBuf]) -> Outcome<FeaturePyramid> {
    let levels = paths.iter().map(|p| load_tensor(p).map_err(user)).collect::<Outcome<Vec<_>>>()?;
    FeaturePyramid::new(levels, Provenance::Imported).map_err(user)
}

struct Loaded {
    source: Face,
    refs: Vec<Face>,
    recipe: TransferRecipe,
    settings: Settings,
}

fn load_all(faces: &FaceArgs, recipe: &RecipeArgs, features: &[PathBuf]) -> Outcome<Loaded> {
    if faces.refs.len() != faces.ref_masks.len() {
        return Err(user(format!(
            "{} --ref given but {} --ref-mask",
            faces.refs.len(),
            faces.ref_masks.len()
        )));
    }
    let recipe = recipe.build()?;
    recipe.validate(faces.refs.len()).map_err(user)?;
    let settings = recipe.apply(&Settings::default());
    settings.sac.validate().map_err(user)?;
    let mut source = load_face(&faces.source, &faces.source_mask, &settings)?;
    let mut refs = faces
        .refs
        .iter()
        .zip(&faces.ref_masks)
        .map(|(i, m)| load_face(i, m, &settings))
        .collect::<Outcome<Vec<_>>>()?;
    let groups: Vec<&[PathBuf]> = features.chunks(4).collect();
    if groups.len() > 1 + refs.len() {
        return Err(user(format!("{} --import-features groups for {} faces", groups.len(), 1 + refs.len())));
    }
    for (n, group) in groups.into_iter().enumerate() {
        let pyr = load_pyramid(group)?;
        if n == 0 {
            source = source.with_match_features(pyr).map_err(user)?;
        } else {
            let r = refs.remove(n - 1);
            refs.insert(n - 1, r.with_match_features(pyr).map_err(user)?);
        }
    }
    Ok(Loaded {
        source,
        refs,
        recipe,
        settings,
    })
}

fn run_transfer(args: TransferArgs, removal: bool) -> Outcome {
    let mut loaded = load_all(&args.faces, &args.recipe, &args.import_features)?;
    if loaded.recipe.removal && !removal {
        return Err(user("the recipe asks for removal; use the remove subcommand"));
    }
    if removal {
        loaded.recipe.removal = true;
        loaded.recipe.validate(loaded.refs.len()).map_err(user)?;
        // the engine strips makeup from its single reference, with the
        // source as the bare exemplar
        let made_up = std::mem::replace(&mut loaded.source, loaded.refs.remove(0));
        loaded.refs.push(made_up);
    }
    let out = transfer(&loaded.source, &loaded.refs, &loaded.recipe, &Settings::default()).map_err(internal)?;
    save_image(&out.image, &args.out).map_err(user)?;
    if let Some(path) = &args.report {
        let report = score(&loaded, &out)?;
        std::fs::write(path, report.to_json()).map_err(|e| user(format!("{}: {e}", path.display())))?;
    }
    log::info!("wrote {}", args.out.display());
    Ok(())
}

fn score(loaded: &Loaded, out: &TransferOutput) -> Outcome<spmt_core::metrics::MetricReport> {
    let (target, giver) = if loaded.recipe.removal {
        (&loaded.refs[0], &loaded.source)
    } else {
        (&loaded.source, &loaded.refs[dominant_reference(&loaded.recipe, loaded.refs.len())])
    };
    evaluate_output(target, giver, out, &loaded.settings).map_err(internal)
}

fn run_hm(args: PairArgs) -> Outcome {
    let src = load_image(&args.source).map_err(user)?;
    let reference = load_image(&args.reference).map_err(user)?;
    let sm = load_label_mask(&args.source_mask).map_err(user)?;
    let rm = load_label_mask(&args.ref_mask).map_err(user)?;
    let radius = Settings::default().eye_shadow_radius;
    let out = hm_composite_with_radius(&src, &reference, &sm, &rm, radius).map_err(user)?;
    save_image(&out, &args.out).map_err(user)
}

fn run_metrics(args: MetricsArgs) -> Outcome {
    let image = load_image(&args.out).map_err(user)?;
    let loaded = load_all(&args.faces, &args.recipe, &[])?;
    let mut out = transfer(&loaded.source, &loaded.refs, &loaded.recipe, &Settings::default()).map_err(internal)?;
    if image.dims() != out.image.dims() {
        return Err(user(format!(
            "{}: size {:?} does not match the source {:?}",
            args.out.display(),
            image.dims(),
            out.image.dims()
        )));
    }
    out.image = image;
    println!("{}", score(&loaded, &out)?.to_json());
    Ok(())
}

fn run_encode(args: EncodeArgs) -> Outcome {
    let img = load_image(&args.source).map_err(user)?;
    let pyr = encode_builtin(&img, !args.no_gradients).map_err(internal)?;
    std::fs::create_dir_all(&args.out).map_err(|e| user(format!("{}: {e}", args.out.display())))?;
    for (l, level) in pyr.levels().iter().enumerate() {
        save_tensor(level, args.out.join(format!("level{l}.spt"))).map_err(user)?;
    }
    Ok(())
}

fn run_serve(args: ServeArgs) -> Outcome {
    let config = spmt_service::ServiceConfig {
        cors_origin: args.cors_origin,
        session_ttl: Duration::from_secs(args.ttl_minutes * 60),
        ..Default::default()
    };
    let rt = tokio::runtime::Runtime::new().map_err(internal)?;
    rt.block_on(spmt_service::serve(args.addr, config)).map_err(user)
}
