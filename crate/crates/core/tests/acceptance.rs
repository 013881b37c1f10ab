//! Acceptance criteria A1-A11. Runs as a plain binary so every criterion
//! prints its pass/fail line; exits non-zero if any criterion fails.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ris_core::estimator::{
    build_structured_operator, estimate_channels, ls_estimate, nmse, soft_threshold, svt, AdmmWeights,
};
use ris_core::frontend::{
    build_codebook, generate_pilots, lorentzian, on_lorentzian_circle, sample_selection_mask,
    synthesize_observations, Architecture, FrontEndModel, Resolution, SelectionMask,
};
use ris_core::geometry::{
    complex_gaussian, dft_matrix, sample_channel, steering_ris, steering_ula, AngleGrid, ArrayGeometry,
    BeamspaceBasis,
};
use ris_core::harness::{
    derive_trial_seed, median, results_csv, run_experiment, summary_csv, summarize, ArchitectureSpec,
    ExperimentConfig, ExperimentKind, ResultRecord, RunOptions,
};
use ris_core::linalg::{frobenius, singular_values};
use ris_core::reflection::{grid_spacing, quantize_phases, rate, rate_gradient, LinkSet, PhaseVector};
use ris_core::CMatrix;

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn report(id: &'static str, pass: bool, detail: String) -> Outcome {
    println!("{id} {}: {detail}", if pass { "PASS" } else { "FAIL" });
    Outcome { id, pass, detail }
}

fn run(config: &ExperimentConfig) -> Vec<ResultRecord> {
    run_experiment(config, &RunOptions::default()).expect("experiment runs")
}

fn median_of(rows: &[ResultRecord], sweep_value: f64, metric: &str) -> f64 {
    let values: Vec<f64> = rows
        .iter()
        .filter(|r| r.sweep_value == sweep_value && r.metric == metric)
        .map(|r| r.value)
        .collect();
    assert!(!values.is_empty(), "no rows for {metric} at {sweep_value}");
    median(&values)
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

const A1_CONFIG: &str = r#"
experiment = "nmse_vs_snr"
trials = 50
master_seed = 1
sweep = [30.0]
[system]
n_ris = 64
n1 = 2
n2 = 2
paths_p = 1
paths_q = 1
training_length = 512
absorption_bits = 4
[[architectures]]
estimator = "admm"
mode = "fc"
n_rf = 64
[[architectures]]
estimator = "ls"
mode = "fc"
n_rf = 64
[estimator]
max_iterations = 300
"#;

const A4_CONFIG: &str = r#"
experiment = "nmse_vs_paths"
trials = 100
master_seed = 4
sweep = [1.0, 2.0, 3.0, 4.0]
[system]
n_ris = 64
n1 = 2
n2 = 2
training_length = 256
snr_db = 30.0
[[architectures]]
estimator = "admm"
mode = "pc"
n_rf = 4
[estimator]
max_iterations = 300
"#;

fn a1() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::from_toml_str(A1_CONFIG).unwrap();
    let rows = run(&cfg);
    let admm = median_of(&rows, 30.0, "nmse.admm_fc_nrf64");
    let ls = median_of(&rows, 30.0, "nmse.ls_fc_nrf64");
    let elapsed = start.elapsed();
    let gap = db(admm) - db(ls);
    report(
        "A1",
        gap <= 3.0 && elapsed < Duration::from_secs(120),
        format!(
            "median ADMM {:.2} dB vs LS {:.2} dB (gap {gap:+.2} dB, limit +3 dB), {:.1} s",
            db(admm),
            db(ls),
            elapsed.as_secs_f64()
        ),
    )
}

/// Shared run for A2 and A3: 100 trials per SNR point.
fn nmse_sweep_rows() -> Vec<ResultRecord> {
    let mut cfg = ExperimentConfig::desk_nmse();
    cfg.trials = 100;
    cfg.master_seed = 202;
    run(&cfg)
}

fn a2(rows: &[ResultRecord]) -> Outcome {
    let snrs = [0.0, 10.0, 20.0, 30.0];
    let medians: Vec<f64> = snrs.iter().map(|&s| median_of(rows, s, "nmse.admm_pc_nrf4")).collect();
    let monotone = medians.windows(2).all(|w| w[1] <= w[0]);
    let text: Vec<String> = snrs.iter().zip(&medians).map(|(s, m)| format!("{s} dB: {m:.4}")).collect();
    report("A2", monotone, format!("PC N_RF=4 median NMSE {}", text.join(", ")))
}

fn a3(rows: &[ResultRecord]) -> Outcome {
    let fc4 = median_of(rows, 30.0, "nmse.admm_fc_nrf4");
    let pc4 = median_of(rows, 30.0, "nmse.admm_pc_nrf4");
    let fc1 = median_of(rows, 30.0, "nmse.admm_fc_nrf1");
    let trials = rows.iter().filter(|r| r.sweep_value == 30.0 && r.metric == "nmse.admm_fc_nrf4").count();
    report(
        "A3",
        fc4 <= pc4 && pc4 <= fc1 && trials >= 100,
        format!("30 dB medians FC4 {fc4:.4} <= PC4 {pc4:.4} <= FC1 {fc1:.4} over {trials} trials"),
    )
}

fn a4() -> Outcome {
    let cfg = ExperimentConfig::from_toml_str(A4_CONFIG).unwrap();
    let rows = run(&cfg);
    let medians: Vec<f64> = cfg.sweep.iter().map(|&p| median_of(&rows, p, "nmse.admm_pc_nrf4")).collect();
    let lo = medians.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = medians.iter().cloned().fold(0.0, f64::max);
    // spread relative to the smallest median
    let variation = (hi - lo) / lo;
    report(
        "A4",
        variation < 0.25,
        format!("median NMSE over P=Q=1..4 {medians:.4?}, relative spread {:.1}% (limit 25%)", 100.0 * variation),
    )
}

/// Shared rate run for A5 and A6.
fn rate_rows() -> Vec<ResultRecord> {
    let mut cfg = ExperimentConfig::desk_rate();
    cfg.trials = 100;
    cfg.master_seed = 505;
    run(&cfg)
}

fn a5(rows: &[ResultRecord]) -> Outcome {
    let perfect_30 = median_of(rows, 30.0, "rate_bits.perfect_binf");
    let gap_256 = perfect_30 - median_of(rows, 30.0, "rate_bits.imperfect_T256_binf");
    let gap_1024 = perfect_30 - median_of(rows, 30.0, "rate_bits.imperfect_T1024_binf");
    let mut ordered = true;
    for snr in [0.0, 10.0, 20.0, 30.0] {
        let p = median_of(rows, snr, "rate_bits.perfect_binf");
        for t in [256, 1024] {
            ordered &= p >= median_of(rows, snr, &format!("rate_bits.imperfect_T{t}_binf"));
        }
    }
    report(
        "A5",
        gap_1024 < gap_256 && ordered,
        format!("30 dB gap T=256 {gap_256:.3} bits, T=1024 {gap_1024:.3} bits; perfect >= imperfect at all SNRs: {ordered}"),
    )
}

fn a6(rows: &[ResultRecord]) -> Outcome {
    let inf = median_of(rows, 30.0, "rate_bits.perfect_binf");
    let b2 = median_of(rows, 30.0, "rate_bits.perfect_b2");
    let b3 = median_of(rows, 30.0, "rate_bits.perfect_b3");
    report(
        "A6",
        b2 >= 0.9 * inf && b3 >= b2,
        format!("30 dB perfect-CSI medians b=inf {inf:.3}, b=3 {b3:.3}, b=2 {b2:.3} (ratio {:.3}, limit 0.90)", b2 / inf),
    )
}

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

fn a7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n_ris = rng.random_range(2..=16);
        let n1 = rng.random_range(1..=4);
        let n2 = rng.random_range(1..=4);
        let links = LinkSet::new(
            random(n2, n1, &mut rng),
            random(n_ris, n1, &mut rng),
            random(n_ris, n2, &mut rng),
            rng.random_range(0.1..10.0),
        )
        .unwrap();
        let angles = DVector::from_fn(n_ris, |_, _| rng.random_range(0.0..TAU));
        let grad = rate_gradient(&links, &angles).unwrap();
        let h = 1e-6;
        let f = |a: &DVector<f64>| rate(&links, &PhaseVector::from_angles(a.as_slice())).unwrap();
        let fd = DVector::from_fn(n_ris, |i, _| {
            let mut plus = angles.clone();
            let mut minus = angles.clone();
            plus[i] += h;
            minus[i] -= h;
            (f(&plus) - f(&minus)) / (2.0 * h)
        });
        worst = worst.max((grad - &fd).norm() / fd.norm());
    }
    report("A7", worst < 1e-5, format!("worst relative error {worst:.2e} over 20 instances"))
}

fn a8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (n_y, n_z) = [(2, 2), (2, 4), (4, 2), (2, 3), (3, 2)][rng.random_range(0..5)];
        let n_ris = n_y * n_z;
        let n1 = rng.random_range(1..=2);
        let n2 = rng.random_range(1..=2);
        let t = rng.random_range(1..=6);
        let basis = BeamspaceBasis::new(&ArrayGeometry::upa(n_y, n_z, 0.5).unwrap(), n1, n2);
        let divisors: Vec<usize> = (1..=n_ris).filter(|d| n_ris % d == 0).collect();
        let n_rf = divisors[rng.random_range(0..divisors.len())];
        let mode = if rng.random_bool(0.5) { Architecture::PartiallyConnected } else { Architecture::FullyConnected };
        let cb = build_codebook(Resolution::Bits(3)).unwrap();
        let fe = FrontEndModel::draw(mode, n_ris, n_rf, cb, None, &mut rng).unwrap();
        let pilots = generate_pilots(n1, n2, t, 1.0, &mut rng).unwrap();
        let mask = sample_selection_mask(n_ris, n_rf, t, &mut rng).unwrap();
        let rho = rng.random_range(0.05..0.95);
        let op = build_structured_operator(&fe, &basis, &pilots, &mask, rho).unwrap();
        let oracle = op.materialize_stacked().pseudo_inverse(1e-12).unwrap();
        worst = worst.max(frobenius(&(op.materialize_pinv() - oracle)));
    }
    report("A8", worst < 1e-8, format!("worst Frobenius deviation from dense SVD pseudoinverse {worst:.2e}"))
}

fn a9() -> Outcome {
    let ris = ExperimentConfig::from_toml_str(A1_CONFIG).unwrap().system.ris_geometry().unwrap();
    let ue = ArrayGeometry::ula(2, 0.5).unwrap();
    let basis = BeamspaceBasis::new(&ris, 2, 2);
    let (mut worst_admm, mut worst_ls): (f64, f64) = (0.0, 0.0);
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        let (h1, _) = sample_channel(&ue, &ris, 1, AngleGrid::OnGrid, &mut rng).unwrap();
        let (h2, _) = sample_channel(&ue, &ris, 1, AngleGrid::OnGrid, &mut rng).unwrap();
        let pilots = generate_pilots(2, 2, 512, 1.0, &mut rng).unwrap();
        let cb = build_codebook(Resolution::Bits(4)).unwrap();
        let fe = FrontEndModel::draw(Architecture::FullyConnected, 64, 64, cb, None, &mut rng).unwrap();
        let mask = SelectionMask::all_ones(64, 512);
        let obs = synthesize_observations(&h1, &h2, &pilots, &fe, &mask, 0.0, &mut rng).unwrap();
        let op = build_structured_operator(&fe, &basis, &pilots, &mask, 0.5).unwrap();
        let mut cfg = AdmmWeights::default().config(0.0, &op).unwrap();
        cfg.max_iterations = 300;
        let est = estimate_channels(&obs, &op, &basis, &cfg).unwrap();
        let ls = ls_estimate(&obs, &fe, &pilots, &mask).unwrap();
        worst_admm = worst_admm.max(nmse((&est.h1, &est.h2), (&h1, &h2)).unwrap());
        worst_ls = worst_ls.max(nmse((&ls.h1, &ls.h2), (&h1, &h2)).unwrap());
    }
    report(
        "A9",
        worst_admm < 1e-2 && worst_ls < 1e-8,
        format!("noiseless on-grid worst NMSE: ADMM {worst_admm:.2e} (< 1e-2), LS {worst_ls:.2e} (< 1e-8)"),
    )
}

fn small_config(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = match kind {
        ExperimentKind::RateVsSnr => ExperimentConfig::desk_rate(),
        ExperimentKind::ConvergenceTrace => ExperimentConfig::desk_convergence(),
        _ => ExperimentConfig::desk_nmse(),
    };
    cfg.experiment = kind;
    cfg.trials = 3;
    cfg.master_seed = 1010;
    cfg.system.n_ris = 16;
    cfg.system.training_length = 64;
    cfg.estimator.max_iterations = 40;
    cfg.sweep = match kind {
        ExperimentKind::NmseVsTrainingLength => vec![32.0, 64.0],
        ExperimentKind::NmseVsPaths => vec![1.0, 2.0],
        _ => vec![10.0, 20.0],
    };
    cfg.architectures.retain(|a| a.n_rf <= 16);
    if cfg.architectures.is_empty() {
        cfg.architectures.push(ArchitectureSpec::admm(Architecture::FullyConnected, 16));
    }
    cfg.rate.training_lengths = vec![64];
    cfg
}

fn a10() -> Outcome {
    let kinds = [
        ExperimentKind::ConvergenceTrace,
        ExperimentKind::NmseVsSnr,
        ExperimentKind::NmseVsTrainingLength,
        ExperimentKind::NmseVsPaths,
        ExperimentKind::RateVsSnr,
    ];
    let mut identical = true;
    for kind in kinds {
        let cfg = small_config(kind);
        let serial = run_experiment(&cfg, &RunOptions { threads: 1, timing: false }).unwrap();
        let parallel = run_experiment(&cfg, &RunOptions { threads: 4, timing: false }).unwrap();
        identical &= results_csv(&serial) == results_csv(&parallel);
        identical &= summary_csv(&summarize(&serial)) == summary_csv(&summarize(&parallel));
    }
    report("A10", identical, format!("{} experiment kinds, 1 vs 4 threads byte-identical: {identical}", kinds.len()))
}

fn timed(name: &'static str, suite: fn() -> bool) -> (String, bool, Duration) {
    let start = Instant::now();
    let ok = suite();
    (name.to_string(), ok, start.elapsed())
}

fn geometry_suite() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let upa = ArrayGeometry::upa(6, 5, 0.5).unwrap();
    let mut ok = true;
    for _ in 0..2000 {
        let x = rng.random_range(-1.0..=1.0);
        ok &= (steering_ula(x, 9).unwrap().norm() - 1.0).abs() < 1e-12;
        let a = steering_ris(rng.random_range(-1.5..1.5), rng.random_range(0.0..3.1), &upa).unwrap();
        ok &= (a.norm() - 1.0).abs() < 1e-12;
    }
    for n in 1..=64 {
        let d = dft_matrix(n);
        ok &= frobenius(&(d.adjoint() * &d - CMatrix::identity(n, n))) < 1e-10;
    }
    ok
}

fn frontend_suite() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ok = true;
    for _ in 0..5000 {
        ok &= on_lorentzian_circle(lorentzian(rng.random_range(-10.0..10.0)), 1e-12);
    }
    for bits in 1..=6 {
        let cb = build_codebook(Resolution::Bits(bits)).unwrap();
        for _ in 0..100 {
            ok &= on_lorentzian_circle(cb.sample(&mut rng), 1e-12);
        }
    }
    for (n, n_rf) in [(16, 1), (16, 4), (36, 6), (64, 64)] {
        let mask = sample_selection_mask(n, n_rf, 200, &mut rng).unwrap();
        ok &= mask.column_sums().iter().all(|&s| s == n_rf);
    }
    ok
}

fn estimator_suite() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ok = true;
    for _ in 0..300 {
        let (r, c) = (rng.random_range(1..8), rng.random_range(1..8));
        let a = random(r, c, &mut rng);
        let b = random(r, c, &mut rng);
        let tau = rng.random_range(0.0..2.0);
        // shrink law against an independent decomposition
        let expect: Vec<f64> = singular_values(&a).iter().map(|s| (s - tau).max(0.0)).collect();
        let got = singular_values(&svt(&a, tau).unwrap());
        ok &= expect.iter().zip(&got).all(|(e, g)| (e - g).abs() < 1e-9);
        // nonexpansiveness of both proximal maps
        let d = frobenius(&(svt(&a, tau).unwrap() - svt(&b, tau).unwrap()));
        ok &= d <= frobenius(&(&a - &b)) + 1e-12;
        let va = a.column(0).into_owned();
        let vb = b.column(0).into_owned();
        let sa = soft_threshold(&va, tau).unwrap();
        let sb = soft_threshold(&vb, tau).unwrap();
        ok &= (&sa - &sb).norm() <= (&va - &vb).norm() + 1e-12;
        ok &= sa.iter().zip(va.iter()).all(|(s, v)| s.re.abs() <= v.re.abs() && s.im.abs() <= v.im.abs());
        // NMSE is a sum of two per-link relative errors
        let zero = CMatrix::zeros(r, c);
        ok &= nmse((&a, &b), (&a, &b)).unwrap() == 0.0;
        ok &= (nmse((&zero, &zero), (&a, &b)).unwrap() - 2.0).abs() < 1e-12;
        let half = Complex64::from(0.5);
        ok &= (nmse((&(&a * half), &(&b * half)), (&a, &b)).unwrap() - 1.0).abs() < 1e-12;
    }
    ok
}

fn reflection_suite() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut ok = true;
    for _ in 0..500 {
        let n = rng.random_range(1..12);
        let angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        let p = PhaseVector::from_angles(&angles);
        ok &= p.values.iter().all(|v| on_lorentzian_circle(*v, 1e-12));
        let bits = rng.random_range(1..6);
        let q = quantize_phases(&p, bits).unwrap();
        let spacing = grid_spacing(bits);
        for (a, s) in p.angles.iter().zip(q.angles.iter()) {
            let d = (a - s).rem_euclid(TAU);
            ok &= d.min(TAU - d) <= spacing / 2.0 + 1e-12;
        }
        let links = LinkSet::new(random(2, 3, &mut rng), random(n, 3, &mut rng), random(n, 2, &mut rng), 4.0).unwrap();
        ok &= rate(&links, &p).unwrap() >= 0.0;
    }
    ok
}

fn harness_suite() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ok = true;
    for _ in 0..10_000 {
        let s: u64 = rng.random();
        ok &= derive_trial_seed(s, 0, 0) != derive_trial_seed(s, 0, 1);
        ok &= derive_trial_seed(s, 2, 7) == derive_trial_seed(s, 2, 7);
    }
    ok
}

fn a11() -> Outcome {
    let suites = [
        timed("geometry", geometry_suite),
        timed("frontend", frontend_suite),
        timed("estimator", estimator_suite),
        timed("reflection", reflection_suite),
        timed("harness", harness_suite),
    ];
    let pass = suites.iter().all(|(_, ok, t)| *ok && *t < Duration::from_secs(30));
    let text: Vec<String> = suites
        .iter()
        .map(|(n, ok, t)| format!("{n} {} {:.2}s", if *ok { "ok" } else { "broken" }, t.as_secs_f64()))
        .collect();
    report("A11", pass, text.join(", "))
}

fn main() {
    // `cargo test -- --list` and filters are not meaningful for this target
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut outcomes = vec![a1()];
    let nmse_rows = nmse_sweep_rows();
    outcomes.push(a2(&nmse_rows));
    outcomes.push(a3(&nmse_rows));
    outcomes.push(a4());
    let rate = rate_rows();
    outcomes.push(a5(&rate));
    outcomes.push(a6(&rate));
    outcomes.push(a7());
    outcomes.push(a8());
    outcomes.push(a9());
    outcomes.push(a10());
    outcomes.push(a11());

    let failed: Vec<&Outcome> = outcomes.iter().filter(|o| !o.pass).collect();
    println!("acceptance: {} passed, {} failed", outcomes.len() - failed.len(), failed.len());
    if !failed.is_empty() {
        for o in &failed {
            eprintln!("failed {}: {}", o.id, o.detail);
        }
        std::process::exit(1);
    }
}
