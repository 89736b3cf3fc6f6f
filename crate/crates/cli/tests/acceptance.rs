//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the lines reach the `cargo test` output in order.

#![allow(clippy::needless_range_loop)]

#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use http_body_util::BodyExt;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use spmt_core::control::build_transfer_mask;
use spmt_core::engine::transfer;
use spmt_core::io::{decode_image, encode_image, load_image, load_label_mask};
use spmt_core::labels::{self, Part, DEFAULT_EYE_SHADOW_RADIUS};
use spmt_core::metrics::ssim;
use spmt_core::parallel::pool;
use spmt_core::sac::{
    compute_fields, correspond, extract_mask_patches, extract_patches, ncc_matrix, reconstruct, sac_full,
    sem_ncc_matrix, CorrespondenceField, CorrespondenceMode, SacConfig,
};
use spmt_core::synthesis::{hm_composite, region_histogram, RenderConfig};
use spmt_core::tensor::{one_hot, PYRAMID_LEVELS};
use spmt_core::{BinaryMask, Face, FeatureMap, LabelMask, Settings, TransferRecipe};
use tower::ServiceExt;

const MODES: [CorrespondenceMode; 4] = [
    CorrespondenceMode::SemanticSoft,
    CorrespondenceMode::SemanticLiteral,
    CorrespondenceMode::PlainSoft,
    CorrespondenceMode::Nearest,
];

const PAPER_SSIM: f64 = 0.89;

struct Verdict {
    pass: bool,
    /// Failure tolerated on this host; printed, not gated.
    waived: Option<String>,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            waived: None,
            detail: detail.into(),
        }
    }
}

fn samples() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../samples")
}

fn sample_face(name: &str, s: &Settings) -> Face {
    let dir = samples();
    let img = load_image(dir.join(format!("{name}.png"))).unwrap();
    let labels = load_label_mask(dir.join(format!("{name}_mask.png"))).unwrap();
    Face::new(img, labels, s).unwrap()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// A cartoon face with jittered geometry and noisy per-label colours.
fn synthetic_face(rng: &mut ChaCha8Rng, n: usize) -> (FeatureMap, LabelMask) {
    let f = n as f64;
    let jitter = |rng: &mut ChaCha8Rng, v: f64| v + rng.gen_range(-0.03..0.03) * f;
    let (cx, cy) = (jitter(rng, 0.5 * f), jitter(rng, 0.55 * f));
    let (fa, fb) = (0.3 * f, 0.38 * f);
    let eye_y = jitter(rng, 0.47 * f);
    let eye_dx = jitter(rng, 0.13 * f);
    let lip_y = jitter(rng, 0.72 * f);
    let inside = |x: f64, y: f64, ex: f64, ey: f64, a: f64, b: f64| ((x - ex) / a).powi(2) + ((y - ey) / b).powi(2) <= 1.0;
    let mut labels = vec![labels::BACKGROUND; n * n];
    for (i, l) in labels.iter_mut().enumerate() {
        let (x, y) = ((i % n) as f64 + 0.5, (i / n) as f64 + 0.5);
        *l = if inside(x, y, cx, cy, fa, fb) {
            if inside(x, y, cx - eye_dx, eye_y, 0.06 * f, 0.025 * f) {
                labels::LEFT_EYE
            } else if inside(x, y, cx + eye_dx, eye_y, 0.06 * f, 0.025 * f) {
                labels::RIGHT_EYE
            } else if inside(x, y, cx - eye_dx, eye_y - 0.07 * f, 0.07 * f, 0.015 * f) {
                labels::LEFT_BROW
            } else if inside(x, y, cx + eye_dx, eye_y - 0.07 * f, 0.07 * f, 0.015 * f) {
                labels::RIGHT_BROW
            } else if inside(x, y, cx, lip_y - 0.012 * f, 0.09 * f, 0.018 * f) {
                labels::UPPER_LIP
            } else if inside(x, y, cx, lip_y + 0.015 * f, 0.08 * f, 0.022 * f) {
                labels::LOWER_LIP
            } else {
                labels::SKIN
            }
        } else if y < cy - 0.1 * f && inside(x, y, cx, cy - 0.1 * f, fa * 1.2, fb * 1.05) {
            labels::HAIR
        } else {
            labels::BACKGROUND
        };
    }
    let mut palette = [[0f64; 3]; 19];
    for c in palette.iter_mut() {
        for v in c.iter_mut() {
            *v = rng.gen_range(-0.8..0.8);
        }
    }
    // paired parts wear the same colour, as on a real face
    for (a, b) in [
        (labels::UPPER_LIP, labels::LOWER_LIP),
        (labels::LEFT_EYE, labels::RIGHT_EYE),
        (labels::LEFT_BROW, labels::RIGHT_BROW),
    ] {
        palette[b as usize] = palette[a as usize];
    }
    let sigma = rng.gen_range(0.03..0.12);
    let ring = build_transfer_mask(
        &LabelMask::new(n, n, labels.clone()).unwrap(),
        &[Part::Eyes],
        DEFAULT_EYE_SHADOW_RADIUS * n as u32 / 256,
    );
    let shadow: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.6..0.6));
    let mut data = vec![0f32; 3 * n * n];
    for p in 0..n * n {
        let base = palette[labels[p] as usize];
        for c in 0..3 {
            let mut v = base[c] + sigma * gaussian(rng);
            if ring.data()[p] == 1 {
                v = 0.5 * v + 0.5 * shadow[c];
            }
            // 8-bit grid, as if read from a PNG
            let q = spmt_core::io::unit_to_pixel(v.clamp(-1.0, 1.0) as f32);
            data[c * n * n + p] = spmt_core::io::pixel_to_unit(q);
        }
    }
    (
        FeatureMap::new(3, n, n, data).unwrap(),
        LabelMask::new(n, n, labels).unwrap(),
    )
}

fn field_for(inst: &oracle::Instance, cfg: &SacConfig) -> (CorrespondenceField, FeatureMap) {
    let k = inst.k;
    let px = extract_patches(&inst.src, k).unwrap();
    let py = extract_patches(&inst.reference, k).unwrap();
    let ncc = ncc_matrix(&px, &py, cfg.epsilon).unwrap();
    let sem = sem_ncc_matrix(
        &extract_mask_patches(&one_hot(&inst.src_labels), k).unwrap(),
        &extract_mask_patches(&one_hot(&inst.ref_labels), k).unwrap(),
        cfg.epsilon,
    )
    .unwrap();
    let f = correspond(&ncc, &sem, cfg).unwrap();
    let map = reconstruct(&f, &py, &px).unwrap();
    (f, map)
}

fn oracle_equivalence() -> Verdict {
    let mut rng = oracle::rng(1001);
    let start = Instant::now();
    let (mut worst, mut bad) = (0f64, 0usize);
    for n in 0..50 {
        let k = [1, 2, 4][n % 3];
        let mode = MODES[n % 4];
        let inst = oracle::random_instance(&mut rng, k);
        let cfg = SacConfig { mode, ..SacConfig::default() };
        let (field, got) = field_for(&inst, &cfg);
        let on = oracle::ncc(&inst.src, &inst.reference, k, cfg.epsilon);
        let os = oracle::sem_ncc(&inst.src_labels, &inst.ref_labels, k, cfg.epsilon);
        let (w, matched) = oracle::weights(&on, &os, mode, cfg.temperature, cfg.semantic_gate_threshold);
        for (i, row) in w.iter().enumerate() {
            worst = worst.max(oracle::max_abs_diff(row, field.row(i)));
            bad += usize::from(field.is_matched(i) != matched[i]);
        }
        let want = oracle::reconstruct(&w, &matched, &inst.src, &inst.reference, k);
        worst = worst.max(oracle::max_abs_diff(&want, got.data()));
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        worst <= 1e-5 && bad == 0 && secs < 30.0,
        format!("50 instances, 4 modes, max |diff| {worst:.2e} (<= 1e-5), {bad} matched-flag mismatches, {secs:.2} s (< 30 s)"),
    )
}

fn zero_leakage() -> Verdict {
    let mut rng = oracle::rng(1002);
    let cfg = SacConfig::default();
    let (mut leaked, mut worst_sum) = (0f64, 0f64);
    for n in 0..100 {
        let inst = oracle::random_instance(&mut rng, [1, 2, 4][n % 3]);
        let (f, _) = field_for(&inst, &cfg);
        let os = oracle::sem_ncc(&inst.src_labels, &inst.ref_labels, inst.k, cfg.epsilon);
        for i in 0..f.n_source() {
            let row = f.row(i);
            leaked += row
                .iter()
                .zip(&os[i])
                .filter(|(_, &s)| s < cfg.semantic_gate_threshold)
                .map(|(&w, _)| w as f64)
                .sum::<f64>();
            if f.is_matched(i) {
                let sum: f64 = row.iter().map(|&w| w as f64).sum();
                worst_sum = worst_sum.max((sum - 1.0).abs());
            }
        }
    }
    Verdict::new(
        leaked == 0.0 && worst_sum <= 1e-5,
        format!("100 instances, gated-out mass {leaked:e} (== 0), worst matched-row |sum - 1| {worst_sum:.1e} (<= 1e-5)"),
    )
}

fn identity_suite() -> Verdict {
    let s = Settings::default();
    let (src, r) = (sample_face("bare", &s), sample_face("red_lips", &s));
    let sp = src.pyramid();
    let full = BinaryMask::filled(256, 256, true).pyramid();
    let nearest = SacConfig {
        mode: CorrespondenceMode::Nearest,
        alphas: [1.0; PYRAMID_LEVELS],
        ..s.effective_sac()
    };
    let (self_out, _) = sac_full(sp, sp, src.masks(), src.masks(), &full, &nearest).unwrap();
    let nearest_ok = &self_out == sp;

    let zero = TransferRecipe { shade: 0.0, ..Default::default() };
    let out = transfer(&src, std::slice::from_ref(&r), &zero, &s).unwrap();
    let png = encode_image(&out.image).unwrap();
    let decoded = decode_image(&png, "output".as_ref()).unwrap();
    let source_png = load_image(samples().join("bare.png")).unwrap();
    let shade_ok = decoded == source_png;

    let zero_alpha = SacConfig {
        alphas: [0.0; PYRAMID_LEVELS],
        ..s.effective_sac()
    };
    let (alpha_out, _) = sac_full(sp, r.pyramid(), src.masks(), r.masks(), &full, &zero_alpha).unwrap();
    let alpha_ok = &alpha_out == sp;
    Verdict::new(
        nearest_ok && shade_ok && alpha_ok,
        format!(
            "nearest self-transfer exact: {nearest_ok}; shade 0 PNG pixel-identical: {shade_ok}; all-zero alpha returns source pyramid: {alpha_ok} (bitwise)"
        ),
    )
}

fn content_preservation() -> Verdict {
    let mut rng = oracle::rng(1003);
    let base = Settings {
        render: RenderConfig {
            seam_feather_radius: 0,
            ..RenderConfig::default()
        },
        ..Settings::default()
    };
    let mut changed = 0usize;
    let mut checked = 0usize;
    for n in 0..20 {
        let size = [64, 128][n % 2];
        let (si, sl) = synthetic_face(&mut rng, size);
        let (ri, rl) = synthetic_face(&mut rng, size);
        let src = Face::new(si.clone(), sl, &base).unwrap();
        let reference = Face::new(ri, rl, &base).unwrap();
        let parts: Vec<Part> = Part::ALL.iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
        let recipe = TransferRecipe {
            shade: rng.gen_range(0.3..=1.0),
            transfer_parts: if parts.is_empty() { vec![Part::Lips] } else { parts },
            ..Default::default()
        };
        let out = transfer(&src, &[reference], &recipe, &base).unwrap();
        // the loader resamples to the working size, so quantize in place
        let q = |m: &FeatureMap, i: usize| spmt_core::io::unit_to_pixel(m.data()[i]);
        let plane = size * size;
        for p in 0..plane {
            if out.transfer_mask.data()[p] == 0 {
                checked += 1;
                changed += usize::from((0..3).any(|c| q(&out.image, c * plane + p) != q(&si, c * plane + p)));
            }
        }
    }
    Verdict::new(
        changed == 0,
        format!("20 synthetic pairs, feathering off: {changed} of {checked} pixels outside M_t differ (== 0)"),
    )
}

fn histogram_matching() -> Verdict {
    let mut rng = oracle::rng(1004);
    let (mut worst, mut regions, mut skipped) = (0f64, 0usize, 0usize);
    for _ in 0..20 {
        let (si, sl) = synthetic_face(&mut rng, 128);
        let (ri, rl) = synthetic_face(&mut rng, 128);
        let out = hm_composite(&si, &ri, &sl, &rl).unwrap();
        for part in Part::ALL {
            let sr = build_transfer_mask(&sl, &[part], DEFAULT_EYE_SHADOW_RADIUS);
            let rr = build_transfer_mask(&rl, &[part], DEFAULT_EYE_SHADOW_RADIUS);
            if sr.is_empty() || rr.is_empty() {
                skipped += 1;
                continue;
            }
            regions += 1;
            for c in 0..3 {
                worst = worst.max(oracle::emd(&region_histogram(&out, c, &sr), &region_histogram(&ri, c, &rr)));
            }
        }
    }
    Verdict::new(
        worst <= 2.0 / 256.0 && regions > 0,
        format!(
            "20 synthetic pairs, {regions} regions x 3 channels ({skipped} absent), worst normalized EMD {worst:.5} (<= {:.5})",
            2.0 / 256.0
        ),
    )
}

fn ssim_correctness() -> Verdict {
    let mut rng = oracle::rng(1005);
    let s = Settings::default();
    let src = sample_face("bare", &s);
    let self_err = (ssim(src.image(), src.image()).unwrap() - 1.0).abs();
    let mut worst = 0f64;
    for n in 0..10 {
        let (a, _) = synthetic_face(&mut rng, 48);
        let b = if n % 2 == 0 {
            oracle::random_map(&mut rng, 3, 48, 48)
        } else {
            let noise: Vec<f32> = (0..a.data().len()).map(|_| 0.2 * gaussian(&mut rng) as f32).collect();
            let data = a.data().iter().zip(&noise).map(|(v, n)| (v + n).clamp(-1.0, 1.0)).collect();
            FeatureMap::new(3, 48, 48, data).unwrap()
        };
        worst = worst.max((ssim(&a, &b).unwrap() - oracle::ssim(&a, &b)).abs());
    }
    let mut reported = Vec::new();
    for name in ["red_lips", "smoky", "coral"] {
        let out = transfer(&src, &[sample_face(name, &s)], &TransferRecipe::default(), &s).unwrap();
        reported.push(format!("{name} {:.4}", ssim(&out.image, src.image()).unwrap()));
    }
    Verdict::new(
        self_err <= 1e-9 && worst <= 1e-4,
        format!(
            "|ssim(a,a) - 1| {self_err:.1e} (<= 1e-9); 10 pairs vs naive max |diff| {worst:.1e} (<= 1e-4); sample transfers (not gated): {}; reference point {PAPER_SSIM}",
            reported.join(", ")
        ),
    )
}

fn temperature_limit() -> Verdict {
    let mut rng = oracle::rng(1006);
    let cfg = SacConfig {
        temperature: 1e6,
        ..SacConfig::default()
    };
    let mut worst = 0f64;
    for n in 0..20 {
        let k = [2, 4][n % 2];
        let c = rng.gen_range(3..=8);
        let (h, w) = (16 << (n % 2), 16);
        let palette = [1u8, 12, 4];
        let inst = oracle::Instance {
            src: oracle::random_map(&mut rng, c, h, w),
            reference: oracle::random_map(&mut rng, c, 16, w * 2),
            src_labels: oracle::random_labels(&mut rng, h, w, &palette),
            ref_labels: oracle::random_labels(&mut rng, 16, w * 2, &palette),
            k,
        };
        let (_, got) = field_for(&inst, &cfg);
        let on = oracle::ncc(&inst.src, &inst.reference, k, cfg.epsilon);
        let os = oracle::sem_ncc(&inst.src_labels, &inst.ref_labels, k, cfg.epsilon);
        let (w, matched) = oracle::gated_argmax(&on, &os, cfg.semantic_gate_threshold);
        let want = oracle::reconstruct(&w, &matched, &inst.src, &inst.reference, k);
        worst = worst.max(oracle::max_abs_diff(&want, got.data()));
    }
    Verdict::new(
        worst <= 1e-4,
        format!("20 instances, beta 1e6 vs gated argmax, max |diff| {worst:.2e} (<= 1e-4)"),
    )
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

struct ServiceRun {
    latency: Duration,
    png: Vec<u8>,
    repeat_identical: bool,
}

fn service_run(recipe: &serde_json::Value) -> ServiceRun {
    let rt = tokio::runtime::Runtime::new().unwrap();
    rt.block_on(async {
        let config = spmt_service::ServiceConfig::default();
        let app = spmt_service::router(spmt_service::AppState::new(&config), &config);
        let send = |req: Request<Body>| {
            let app = app.clone();
            async move {
                let res = app.oneshot(req).await.unwrap();
                let status = res.status();
                (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
            }
        };
        let upload = |uri: String, name: &str| {
            let dir = samples();
            let mut body = Vec::new();
            for (field, file) in [("image", format!("{name}.png")), ("mask", format!("{name}_mask.png"))] {
                body.extend_from_slice(
                    format!("--b\r\nContent-Disposition: form-data; name=\"{field}\"; filename=\"{file}\"\r\n\r\n").as_bytes(),
                );
                body.extend_from_slice(&std::fs::read(dir.join(file)).unwrap());
                body.extend_from_slice(b"\r\n");
            }
            body.extend_from_slice(b"--b--\r\n");
            Request::post(uri)
                .header(header::CONTENT_TYPE, "multipart/form-data; boundary=b")
                .body(Body::from(body))
                .unwrap()
        };
        let (st, body) = send(upload("/sessions".into(), "bare")).await;
        assert_eq!(st, StatusCode::CREATED);
        let id = serde_json::from_slice::<serde_json::Value>(&body).unwrap()["id"].as_str().unwrap().to_string();
        let (st, _) = send(upload(format!("/sessions/{id}/references"), "red_lips")).await;
        assert_eq!(st, StatusCode::CREATED);
        let post = |body: String| {
            Request::post(format!("/sessions/{id}/transfer"))
                .header(header::CONTENT_TYPE, "application/json")
                .body(Body::from(body))
                .unwrap()
        };
        let mut times = Vec::new();
        for step in 0..50 {
            let shade = serde_json::json!({ "shade": step as f64 / 49.0 }).to_string();
            let t = Instant::now();
            let (st, _) = send(post(shade)).await;
            times.push(t.elapsed());
            assert_eq!(st, StatusCode::OK);
        }
        let (_, a) = send(post(recipe.to_string())).await;
        let (_, b) = send(post(recipe.to_string())).await;
        ServiceRun {
            latency: median(times),
            repeat_identical: a == b,
            png: a,
        }
    })
}

fn performance(service: &ServiceRun) -> Verdict {
    let s = Settings::default();
    let one = pool(Some(1)).unwrap();
    let start = Instant::now();
    one.install(|| {
        let (src, r) = (sample_face("bare", &s), sample_face("red_lips", &s));
        transfer(&src, &[r], &TransferRecipe::default(), &s).unwrap();
    });
    let single = start.elapsed().as_secs_f64();

    let (src, r) = (sample_face("bare", &s), sample_face("red_lips", &s));
    let sac = s.effective_sac();
    let time_fields = |threads: usize| {
        let p = pool(Some(threads)).unwrap();
        let t = Instant::now();
        p.install(|| compute_fields(src.match_features(), r.match_features(), src.masks(), r.masks(), &sac).unwrap());
        t.elapsed().as_secs_f64()
    };
    time_fields(1); // warm-up
    let t1 = time_fields(1);
    let t8 = time_fields(8);
    let speedup = t1 / t8;
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let latency_ms = service.latency.as_secs_f64() * 1e3;

    let (budget_ok, speed_ok, latency_ok) = (single <= 5.0, speedup >= 3.0, latency_ms <= 100.0);
    let mut v = Verdict::new(
        budget_ok && speed_ok && latency_ok,
        format!(
            "single-thread 256^2 transfer {single:.2} s (<= 5 s); correspondence speedup 1->8 threads {speedup:.2}x (>= 3x, {t1:.2} s -> {t8:.2} s, {cores} cores available); cached shade transfer median {latency_ms:.1} ms over 50 (<= 100 ms)"
        ),
    );
    if budget_ok && latency_ok && !speed_ok && cores < 8 {
        v.waived = Some(format!("speedup not attainable with {cores} core(s)"));
    }
    v
}

fn cli_transfer(threads: &str, out: &std::path::Path) -> Vec<u8> {
    let dir = samples();
    let p = |n: &str| dir.join(n).display().to_string();
    let status = Command::new(env!("CARGO_BIN_EXE_spmt"))
        .args(["transfer", "--source", &p("bare.png"), "--source-mask", &p("bare_mask.png")])
        .args(["--ref", &p("red_lips.png"), "--ref-mask", &p("red_lips_mask.png")])
        .args(["--shade", "0.75", "--out"])
        .arg(out)
        .env("SPMT_THREADS", threads)
        .status()
        .unwrap();
    assert!(status.success());
    std::fs::read(out).unwrap()
}

fn determinism(service: &ServiceRun) -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<u8>> = [("1", "a"), ("1", "b"), ("8", "c")]
        .iter()
        .map(|(t, n)| cli_transfer(t, &dir.path().join(format!("{n}.png"))))
        .collect();
    let cli_ok = runs.iter().all(|r| r == &runs[0]);
    let again = service_run(&serde_json::json!({ "shade": 0.75 }));
    let service_ok = service.repeat_identical && again.repeat_identical && service.png == again.png;
    let parity = service.png == runs[0];
    Verdict::new(
        cli_ok && service_ok,
        format!(
            "CLI runs (1, 1, 8 threads) byte-identical: {cli_ok}; service repeats and fresh sessions byte-identical: {service_ok}; service PNG equals CLI PNG: {parity}"
        ),
    )
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        // libtest-style discovery probe
        return;
    }
    let service = service_run(&serde_json::json!({ "shade": 0.75 }));
    type Check<'a> = Box<dyn Fn() -> Verdict + 'a>;
    let criteria: Vec<(&str, Check)> = vec![
        ("oracle-equivalence", Box::new(oracle_equivalence)),
        ("zero-semantic-leakage", Box::new(zero_leakage)),
        ("identity-suite", Box::new(identity_suite)),
        ("content-preservation", Box::new(content_preservation)),
        ("histogram-matching", Box::new(histogram_matching)),
        ("ssim-correctness", Box::new(ssim_correctness)),
        ("temperature-limit", Box::new(temperature_limit)),
        ("performance-budget", Box::new(|| performance(&service))),
        ("determinism", Box::new(|| determinism(&service))),
    ];
    let mut gated_failures = 0;
    println!("acceptance: {} criteria", criteria.len());
    for (name, check) in criteria {
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        match &v.waived {
            Some(why) => println!("{tag} {name}: {} [not gated: {why}]", v.detail),
            None => println!("{tag} {name}: {}", v.detail),
        }
        if !v.pass && v.waived.is_none() {
            gated_failures += 1;
        }
    }
    if gated_failures > 0 {
        println!("acceptance: {gated_failures} gated criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all gated criteria passed");
}
