//! One pass/fail line per acceptance criterion.
//!
//! Dataset criteria read `<dir>/cora/cora.{content,cites}` and
//! `<dir>/citeseer/citeseer.{content,cites}` where `<dir>` is `$DEEPGWC_DATA`
//! or `data/` at the workspace root; they are skipped when the files are
//! absent. Full training runs (criteria 8–10) additionally require
//! `DEEPGWC_ACCEPT_FULL=1`.

mod common;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use deepgwc::data::{
    class_balanced_split, load_content_cites, random_graph, rate_split, row_normalize, standard_split,
    synthetic_two_clique, DatasetSplit,
};
use deepgwc::graph::{build_laplacian, Graph};
use deepgwc::linalg::{eigh_sym, frobenius_rel_error, DenseMatrix, SparseMatrix};
use deepgwc::model::{layer_forward, ModelConfig, ReductionMode};
use deepgwc::propagation::{assemble, scalar_absorption_check, FilterConfig, PropagationOperator};
use deepgwc::train::{gradient_check_suite, train, AdamConfig, GradCheckOptions, Schedule, TrainOptions, TrainReport};
use deepgwc::wavelet::{wavelet_chebyshev, wavelet_exact, WaveletBasis};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn within(outcome: Outcome, elapsed: Duration, budget: Duration) -> Outcome {
    match outcome {
        Outcome::Pass(d) if elapsed > budget => {
            Outcome::Fail(format!("{d}; took {:.1}s, budget {}s", elapsed.as_secs_f64(), budget.as_secs()))
        }
        other => other,
    }
}

fn graph_set() -> Vec<Graph<f64>> {
    (0..50u64)
        .map(|seed| {
            let n = 2 + (seed as usize * 37) % 99;
            let p = 0.02 + 0.3 * ((seed * 13 % 17) as f64 / 17.0);
            random_graph(n, p, 2, 2, seed)
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    for g in graph_set() {
        let n = g.num_nodes();
        let b = wavelet_exact(&build_laplacian(&g), 1.0, 0.0).unwrap();
        let prod = b.psi.matmul(&b.psi_inverse).unwrap().to_dense();
        worst = worst.max(prod.sub(&DenseMatrix::identity(n)).unwrap().frobenius_norm());
    }
    check(worst <= 1e-8, format!("max ‖ψψ⁻¹ − I‖_F = {worst:.2e} over 50 graphs (≤ 1e-8)"))
}

fn criterion_2() -> Outcome {
    let (mut residual, mut lo, mut hi) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for g in graph_set() {
        let l = build_laplacian(&g).laplacian_dense();
        let eig = eigh_sym(&l).unwrap();
        residual = residual.max(eig.reconstruct().max_abs_diff(&l).unwrap());
        lo = lo.min(eig.values[0]);
        hi = hi.max(*eig.values.last().unwrap());
    }
    check(
        residual <= 1e-10 && lo >= -1e-9 && hi <= 2.0 + 1e-9,
        format!("reconstruction {residual:.2e} (≤ 1e-10), spectrum [{lo:.2e}, {hi:.6}] ⊂ [−1e-9, 2+1e-9]"),
    )
}

fn criterion_3() -> Outcome {
    let (mut worst, mut monotone) = (0.0f64, true);
    for seed in 0..10u64 {
        let g = random_graph::<f64>(50, 0.08, 2, 2, 1000 + seed);
        let b = build_laplacian(&g);
        for s in [0.5, 1.0, 1.5] {
            let exact = wavelet_exact(&b, s, 0.0).unwrap().psi.to_dense();
            let errors: Vec<f64> = [5, 10, 20, 30]
                .iter()
                .map(|&k| {
                    let approx = wavelet_chebyshev(&b, s, 0.0, k).unwrap().psi.to_dense();
                    frobenius_rel_error(&approx, &exact).unwrap()
                })
                .collect();
            worst = worst.max(errors[3]);
            monotone &= errors.windows(2).all(|w| w[1] <= w[0] + 1e-13);
        }
    }
    check(
        worst <= 1e-6 && monotone,
        format!("order-30 rel error {worst:.2e} (≤ 1e-6); monotone over {{5,10,20,30}}: {monotone}"),
    )
}

fn criterion_4() -> Outcome {
    let (mut gcn, mut gwnn) = (0.0f64, 0.0f64);
    for seed in 0..20u64 {
        let n = 5 + seed as usize;
        let g = random_graph::<f64>(n, 0.25, 2, 2, 2000 + seed);
        let b = build_laplacian(&g);
        let h = common::random_dense(n, 6, seed);
        let w = common::random_dense(6, 6, seed + 100);
        let f = 0.3 + 0.1 * seed as f64;
        let op0 = assemble(&b, None, 0.0, FilterConfig::new(1.0).unwrap()).unwrap();
        let got = layer_forward(&h, &h, &op0, &w, 0.0, 1.0).unwrap();
        gcn = gcn.max(got.max_abs_diff(&common::gcn_layer_oracle(n, g.edges(), &h, &w)).unwrap());

        let basis = wavelet_exact(&b, 1.0, 0.0).unwrap();
        let op1 = assemble(&b, Some(&basis), 1.0, FilterConfig::new(f).unwrap()).unwrap();
        let got = layer_forward(&h, &h, &op1, &w, 0.0, 1.0).unwrap();
        let l = common::laplacian_oracle(n, g.edges());
        let psi = common::spectral_function(&l, |x| (-x).exp());
        let psi_inv = common::spectral_function(&l, f64::exp);
        gwnn = gwnn.max(got.max_abs_diff(&common::gwnn_layer_oracle(&psi, &psi_inv, f, &h, &w)).unwrap());
    }
    check(
        gcn <= 1e-12 && gwnn <= 1e-12,
        format!("gcn reduction {gcn:.2e}, gwnn reduction {gwnn:.2e} (≤ 1e-12)"),
    )
}

fn criterion_5() -> Outcome {
    let modes = [
        ReductionMode::Gcn,
        ReductionMode::Gwnn,
        ReductionMode::GcniiLike,
        ReductionMode::Deepgwc,
    ];
    let opts = GradCheckOptions::default();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for eta in [0.8, 0.0] {
        for r in gradient_check_suite(&modes, eta, &opts).unwrap() {
            worst = worst.max(r.max_rel_error);
            parts.push(format!("{}(η={eta})={:.1e}", r.mode, r.max_rel_error));
        }
    }
    check(worst <= 1e-4, format!("max rel error {worst:.2e} (≤ 1e-4): {}", parts.join(" ")))
}

fn criterion_6() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let g = random_graph::<f64>(10 + 3 * seed as usize, 0.25, 2, 2, 3000 + seed);
        let basis = wavelet_exact(&build_laplacian(&g), 1.0, 1e-4).unwrap();
        for (gamma, f) in [(0.4, 0.4), (0.7, 1.6), (1.0, 0.25)] {
            worst = worst.max(scalar_absorption_check(&basis, gamma, f).unwrap());
        }
    }
    check(worst <= 1e-12, format!("max |γψFψ⁻¹ − γfψψ⁻¹| = {worst:.2e} (≤ 1e-12)"))
}

fn two_clique_config(mode: ReductionMode) -> ModelConfig {
    ModelConfig {
        layers: 4,
        hidden: 16,
        alpha: 0.2,
        eta: 0.8,
        gamma: 0.4,
        filter_f: 0.8,
        scale_s: 1.0,
        threshold_t: 1e-4,
        dropout: 0.2,
        classes: 2,
        input_dim: 3,
        beta_override: None,
    }
    .with_mode(mode)
}

fn operator(g: &Graph<f64>, config: &ModelConfig, basis: Option<&WaveletBasis<f64>>) -> PropagationOperator<f64> {
    let b = build_laplacian(g);
    assemble(&b, basis, config.gamma, FilterConfig::new(config.filter_f).unwrap()).unwrap()
}

fn criterion_11() -> Outcome {
    let g = synthetic_two_clique::<f64>(40, 3);
    let x = SparseMatrix::from_dense(g.features(), 0.0);
    let split = class_balanced_split(&g, 4, 32, 40, 11).unwrap();
    let basis = wavelet_exact(&build_laplacian(&g), 1.0, 1e-4).unwrap();
    let opts = TrainOptions {
        schedule: Schedule {
            max_epochs: 200,
            patience: 200,
        },
        adam: AdamConfig {
            learning_rate: 0.01,
            ..AdamConfig::default()
        },
        seed: 7,
    };
    let mut parts = Vec::new();
    let mut ok = true;
    for mode in ReductionMode::ALL {
        let config = two_clique_config(mode);
        let op = operator(&g, &config, Some(&basis));
        let (report, _) = train(&x, g.labels(), &split, &config, &op, &opts).unwrap();
        ok &= report.test_accuracy == 1.0 && report.best_epoch <= 200;
        parts.push(format!("{mode}={:.3}@{}", report.test_accuracy, report.best_epoch));
    }
    check(ok, format!("test accuracy within 200 epochs: {}", parts.join(" ")))
}

// ---------------------------------------------------------------- datasets

fn data_dir() -> PathBuf {
    std::env::var_os("DEEPGWC_DATA")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

struct Dataset {
    name: &'static str,
    graph: Graph<f64>,
    features: SparseMatrix<f64>,
}

fn load(name: &'static str) -> Option<Dataset> {
    let dir = data_dir().join(name);
    let content = dir.join(format!("{name}.content"));
    let cites = dir.join(format!("{name}.cites"));
    if !content.exists() || !cites.exists() {
        return None;
    }
    let loaded = load_content_cites::<f64>(&content, &cites).expect("dataset parses");
    let features = SparseMatrix::from_dense(&row_normalize(loaded.graph.features()), 0.0);
    Some(Dataset {
        name,
        graph: loaded.graph,
        features,
    })
}

fn load_missing(name: &str) -> bool {
    let dir = data_dir().join(name);
    !dir.join(format!("{name}.content")).exists() || !dir.join(format!("{name}.cites")).exists()
}

fn needs_full() -> Outcome {
    Outcome::Skip("dataset present; full training runs need DEEPGWC_ACCEPT_FULL=1".into())
}

fn full_runs_enabled() -> bool {
    std::env::var("DEEPGWC_ACCEPT_FULL").is_ok_and(|v| v == "1")
}

fn missing(name: &str) -> Outcome {
    Outcome::Skip(format!(
        "{name} files not found under {}",
        data_dir().join(name).display()
    ))
}

fn reference_config(ds: &Dataset) -> ModelConfig {
    ModelConfig::cora(ds.graph.num_features(), ds.graph.num_classes())
}

fn run(
    ds: &Dataset,
    config: &ModelConfig,
    basis: Option<&WaveletBasis<f64>>,
    split: &DatasetSplit,
    schedule: Schedule,
    seed: u64,
) -> TrainReport {
    let op = operator(&ds.graph, config, basis)
        .sparsified(config.threshold_t)
        .unwrap();
    let opts = TrainOptions {
        schedule,
        adam: AdamConfig::default(),
        seed,
    };
    train(&ds.features, ds.graph.labels(), split, config, &op, &opts).unwrap().0
}

fn criterion_7() -> Outcome {
    let targets = [("cora", 1.0, 1e-4, 0.0281), ("citeseer", 0.7, 1e-5, 0.0152)];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, s, t, want) in targets {
        let Some(ds) = load(name) else {
            return missing(name);
        };
        let basis = wavelet_exact(&build_laplacian(&ds.graph), s, t).unwrap();
        let d = basis.density_psi;
        ok &= (d - want).abs() <= 0.005;
        parts.push(format!("{}: {:.2}% (target {:.2}% ± 0.5pp)", ds.name, 100.0 * d, 100.0 * want));
    }
    check(ok, parts.join(", "))
}

fn criterion_8() -> Outcome {
    for name in ["cora", "citeseer"] {
        if load_missing(name) {
            return missing(name);
        }
    }
    if !full_runs_enabled() {
        return needs_full();
    }
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, want, s, t) in [("cora", 0.864, 1.0, 1e-4), ("citeseer", 0.750, 0.7, 1e-5)] {
        let Some(ds) = load(name) else {
            return missing(name);
        };
        let config = ModelConfig {
            scale_s: s,
            threshold_t: t,
            ..reference_config(&ds)
        };
        let basis = wavelet_exact(&build_laplacian(&ds.graph), s, t).unwrap();
        let split = standard_split(&ds.graph, 42).unwrap();
        let report = run(&ds, &config, Some(&basis), &split, Schedule::default(), 42);
        ok &= (report.test_accuracy - want).abs() <= 0.015;
        parts.push(format!("{}: {:.1}% (target {:.1}% ± 1.5pp)", name, 100.0 * report.test_accuracy, 100.0 * want));
    }
    check(ok, parts.join(", "))
}

fn criterion_9() -> Outcome {
    if load_missing("cora") {
        return missing("cora");
    }
    if !full_runs_enabled() {
        return needs_full();
    }
    let ds = load("cora").unwrap();
    let basis = wavelet_exact(&build_laplacian(&ds.graph), 1.0, 1e-4).unwrap();
    let split = standard_split(&ds.graph, 42).unwrap();
    let acc = |mode: ReductionMode, layers: usize| {
        let config = ModelConfig {
            layers,
            ..reference_config(&ds)
        }
        .with_mode(mode);
        run(&ds, &config, Some(&basis), &split, Schedule::default(), 42).test_accuracy
    };
    let (gcn2, gcn32) = (acc(ReductionMode::Gcn, 2), acc(ReductionMode::Gcn, 32));
    let deep: Vec<f64> = [2, 4, 8, 16, 32].iter().map(|&l| acc(ReductionMode::Deepgwc, l)).collect();
    let best = deep.iter().copied().fold(0.0, f64::max);
    let ok = gcn2 - gcn32 >= 0.10 && best - deep[4] <= 0.02;
    check(
        ok,
        format!(
            "gcn 2→32 layers {:.1}% → {:.1}% (drop ≥ 10pp); deepgwc@32 {:.1}% vs best {:.1}% (within 2pp)",
            100.0 * gcn2,
            100.0 * gcn32,
            100.0 * deep[4],
            100.0 * best
        ),
    )
}

fn criterion_10() -> Outcome {
    if load_missing("cora") {
        return missing("cora");
    }
    if !full_runs_enabled() {
        return needs_full();
    }
    let ds = load("cora").unwrap();
    let basis = wavelet_exact(&build_laplacian(&ds.graph), 1.0, 1e-4).unwrap();
    let split = rate_split(&ds.graph, 0.005, 42).unwrap();
    let deep = run(&ds, &reference_config(&ds), Some(&basis), &split, Schedule::default(), 42);
    let gcn_config = ModelConfig {
        layers: 2,
        ..reference_config(&ds)
    }
    .with_mode(ReductionMode::Gcn);
    let gcn = run(&ds, &gcn_config, None, &split, Schedule::default(), 42);
    check(
        deep.test_accuracy - gcn.test_accuracy >= 0.08,
        format!(
            "0.5% label rate: deepgwc {:.1}% vs gcn {:.1}% (gap ≥ 8pp)",
            100.0 * deep.test_accuracy,
            100.0 * gcn.test_accuracy
        ),
    )
}

fn criterion_12() -> Outcome {
    let Some(ds) = load("cora") else {
        return missing("cora");
    };
    let config = reference_config(&ds);
    let basis = wavelet_exact(&build_laplacian(&ds.graph), 1.0, 1e-4).unwrap();
    let split = standard_split(&ds.graph, 42).unwrap();
    let schedule = Schedule {
        max_epochs: 10,
        patience: 10,
    };
    let a = serde_json::to_string(&run(&ds, &config, Some(&basis), &split, schedule, 42).epochs).unwrap();
    let b = serde_json::to_string(&run(&ds, &config, Some(&basis), &split, schedule, 42).epochs).unwrap();
    check(a == b, format!("two seeded Cora runs ({} bytes of records) identical: {}", a.len(), a == b))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome, u64); 12] = [
        (1, "wavelet inverse pair", criterion_1, 10),
        (2, "eigensolver", criterion_2, 10),
        (3, "chebyshev vs exact", criterion_3, 30),
        (4, "reduction equivalences", criterion_4, 5),
        (5, "gradient check", criterion_5, 60),
        (6, "scalar absorption", criterion_6, 10),
        (7, "wavelet density", criterion_7, 600),
        (8, "standard-split accuracy", criterion_8, 7200),
        (9, "over-smoothing contrast", criterion_9, 14400),
        (10, "low label rate", criterion_10, 7200),
        (11, "two-clique oracle", criterion_11, 10),
        (12, "determinism", criterion_12, 1200),
    ];
    let (mut failed, mut skipped) = (0, 0);
    for (id, name, f, budget) in criteria {
        let start = Instant::now();
        let outcome = within(f(), start.elapsed(), Duration::from_secs(budget));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Outcome::Pass(d) => println!("criterion {id:>2} PASS {name}: {d} [{secs:.2}s]"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("criterion {id:>2} FAIL {name}: {d} [{secs:.2}s]");
            }
            Outcome::Skip(d) => {
                skipped += 1;
                println!("criterion {id:>2} SKIP {name}: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed, {skipped} skipped", 12 - failed - skipped);
    if failed > 0 {
        std::process::exit(1);
    }
}
