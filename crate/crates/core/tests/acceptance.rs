//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! The benchmark-table and label-propagation criteria need converted
//! datasets (`cora`, `citeseer`, `pubmed` DatasetDirs) under
//! `$GLGCN_DATA_DIR` or `<workspace>/data`. Without them those lines read
//! `NOT RUN` and do not fail the gate unless `GLGCN_REQUIRE_DATASETS=1`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use glgcn::bench::{label_propagation_accuracy, run_bench, BenchSpec};
use glgcn::data_io::{load_dataset, FixtureSpec};
use glgcn::graph::{laplacian_from_similarity, LabelPropagation};
use glgcn::loss_grad::laplacian_reg;
use glgcn::model::ModelParams;
use glgcn::numerics::seeded_rng;
use glgcn::optim_train::{gradcheck_suite, train, Prepared, TrainConfig};
use glgcn::report::Method;
use glgcn::{Dataset, DenseMatrix, SparseMatrix, Variant};
use rand::seq::SliceRandom;
use rand::Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    NotRun(String),
}

type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn gradient_correctness() -> Outcome {
    let started = Instant::now();
    let results = match gradcheck_suite(&Variant::ALL, 1e-5) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let secs = started.elapsed().as_secs_f64();
    let worst = results.iter().map(|(_, r)| r.max_rel_error).fold(0.0, f64::max);
    let detail: Vec<String> = results
        .iter()
        .map(|(v, r)| format!("{}={:.1e}", v.as_str(), r.max_rel_error))
        .collect();
    check(
        worst < 1e-5 && secs < 10.0,
        format!("{} (limit 1e-5), {secs:.2}s (limit 10s)", detail.join(" ")),
    )
}

fn regularizer_oracles() -> Outcome {
    let started = Instant::now();
    let mut rng = seeded_rng(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=12);
        let d = rng.gen_range(1..=5);
        let m = DenseMatrix::from_vec(n, d, (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let mut t = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(0.4) {
                    let w = rng.gen_range(-1.0..2.0);
                    t.push((i, j, w));
                    t.push((j, i, w));
                }
            }
        }
        let s = SparseMatrix::from_triplets(n, t).unwrap();
        let fast = laplacian_reg(&m, &s).unwrap();

        let sd = s.to_dense();
        let mut pairwise = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d2: f64 = m.row(i).iter().zip(m.row(j)).map(|(a, b)| (a - b).powi(2)).sum();
                pairwise += sd.get(i, j) * d2;
            }
        }
        let lm = laplacian_from_similarity(&s).to_dense().matmul(&m).unwrap();
        let trace = 2.0 * m.as_slice().iter().zip(lm.as_slice()).map(|(a, b)| a * b).sum::<f64>();

        for oracle in [pairwise, trace] {
            let scale = fast.abs().max(oracle.abs()).max(1e-12);
            worst = worst.max((fast - oracle).abs() / scale);
        }
    }
    let secs = started.elapsed().as_secs_f64();
    check(
        worst <= 1e-10 && secs < 5.0,
        format!("100 instances, max relative gap {worst:.1e} (limit 1e-10), {secs:.2}s (limit 5s)"),
    )
}

fn sbm2() -> Dataset {
    FixtureSpec::default().build().unwrap()
}

fn lambda_zero_reduction() -> Outcome {
    let ds = sbm2();
    let gcn = TrainConfig::default();
    let fl = TrainConfig {
        variant: Variant::GlgcnFl,
        lambda_label: 0.0,
        lambda_feature: 0.0,
        ..TrainConfig::default()
    };
    match (train(&ds, &gcn), train(&ds, &fl)) {
        (Ok((p0, r0)), Ok((p1, r1))) => check(
            r0.same_trajectory(&r1) && p0 == p1,
            format!("{} epochs compared bit for bit", r0.outcome.epochs_run),
        ),
        (Err(e), _) | (_, Err(e)) => Outcome::Fail(e.to_string()),
    }
}

fn permutation_equivariance() -> Outcome {
    let ds = sbm2();
    let cfg = TrainConfig::default();
    let mut perm: Vec<usize> = (0..ds.num_nodes()).collect();
    perm.shuffle(&mut seeded_rng(17));
    let pds = ds.permute(&perm).unwrap();
    let params = ModelParams::glorot(&cfg.layer_dims(&ds), false, &mut seeded_rng(3)).unwrap();
    let z = Prepared::new(&ds, &cfg).unwrap().infer(&params).unwrap();
    let pz = Prepared::new(&pds, &cfg).unwrap().infer(&params).unwrap();
    let mut worst: f64 = 0.0;
    for (i, &pi) in perm.iter().enumerate() {
        for (a, b) in z.row(i).iter().zip(pz.row(pi)) {
            worst = worst.max((a - b).abs());
        }
    }
    check(worst <= 1e-12, format!("max |ΔZ| = {worst:.1e} (limit 1e-12)"))
}

fn overfit_sanity() -> Outcome {
    let ds = sbm2();
    let mut parts = Vec::new();
    let mut ok = true;
    for variant in Variant::ALL {
        let cfg = TrainConfig {
            variant,
            max_epochs: 200,
            ..TrainConfig::default()
        };
        match train(&ds, &cfg) {
            Ok((_, r)) => {
                let first = r
                    .outcome
                    .history
                    .iter()
                    .find(|h| h.train_accuracy == 1.0)
                    .map(|h| h.epoch);
                ok &= first.is_some();
                parts.push(format!(
                    "{}@{}",
                    variant.as_str(),
                    first.map_or("never".to_string(), |e| format!("epoch {e}"))
                ));
            }
            Err(e) => return Outcome::Fail(format!("{variant}: {e}")),
        }
    }
    check(ok, format!("train accuracy 1.0 reached: {}", parts.join(", ")))
}

fn data_root() -> PathBuf {
    std::env::var_os("GLGCN_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            let core = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
            core.ancestors().nth(2).unwrap_or(&core).join("data")
        })
}

fn load_named(name: &str) -> Option<Dataset> {
    let dir = data_root().join(name);
    if !dir.is_dir() {
        return None;
    }
    match load_dataset(&dir) {
        Ok(d) => Some(d),
        Err(e) => {
            eprintln!("cannot load {}: {e}", dir.display());
            None
        }
    }
}

/// (dataset, GCN %, gLGCN-F-L %, time budget in seconds)
const REFERENCE: [(&str, f64, f64, f64); 3] = [
    ("cora", 81.4, 83.3, 120.0),
    ("citeseer", 70.4, 71.4, 120.0),
    ("pubmed", 78.6, 79.3, 600.0),
];
const REFERENCE_TOL: f64 = 1.5;

fn benchmark_reproduction() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut missing = Vec::new();
    for (name, gcn_ref, fl_ref, budget) in REFERENCE {
        let Some(ds) = load_named(name) else {
            missing.push(name);
            continue;
        };
        let started = Instant::now();
        let spec = BenchSpec {
            variants: vec![Variant::Gcn, Variant::GlgcnFl],
            include_lp: false,
            ..BenchSpec::default()
        };
        let report = match run_bench(std::slice::from_ref(&ds), Vec::new(), &spec) {
            Ok(r) => r,
            Err(e) => return Outcome::Fail(format!("{name}: {e}")),
        };
        let secs = started.elapsed().as_secs_f64();
        let mean = |v| 100.0 * report.cell(&ds.name, Method::Model(v)).unwrap().mean;
        let (gcn, fl) = (mean(Variant::Gcn), mean(Variant::GlgcnFl));
        let cell_ok = (gcn - gcn_ref).abs() <= REFERENCE_TOL
            && (fl - fl_ref).abs() <= REFERENCE_TOL
            && fl >= gcn - 0.3
            && secs < budget;
        ok &= cell_ok;
        lines.push(format!(
            "{name}: GCN {gcn:.1} (ref {gcn_ref}) gLGCN-F-L {fl:.1} (ref {fl_ref}) {secs:.0}s/{budget:.0}s"
        ));
    }
    if lines.is_empty() {
        return Outcome::NotRun(format!(
            "no datasets under {} (missing: {})",
            data_root().display(),
            missing.join(", ")
        ));
    }
    if !missing.is_empty() {
        ok = false;
        lines.push(format!("missing: {}", missing.join(", ")));
    }
    check(ok, lines.join("; "))
}

fn lp_citeseer() -> Outcome {
    let Some(ds) = load_named("citeseer") else {
        return Outcome::NotRun(format!("citeseer not found under {}", data_root().display()));
    };
    match label_propagation_accuracy(&ds, &TrainConfig::default(), &LabelPropagation::default()) {
        Ok(acc) => check(
            (100.0 * acc - 45.3).abs() <= 3.0,
            format!("test accuracy {:.1} (ref 45.3 ± 3.0)", 100.0 * acc),
        ),
        Err(e) => Outcome::Fail(e.to_string()),
    }
}

fn main() -> ExitCode {
    // libtest flags such as --nocapture are accepted and ignored
    let require_data = std::env::var("GLGCN_REQUIRE_DATASETS").is_ok_and(|v| v == "1");
    let criteria: [Criterion; 7] = [
        ("gradient correctness", gradient_correctness),
        ("regularizer oracle equivalence", regularizer_oracles),
        ("lambda=0 reduction", lambda_zero_reduction),
        ("permutation equivariance", permutation_equivariance),
        ("overfit sanity", overfit_sanity),
        ("benchmark table reproduction", benchmark_reproduction),
        ("label propagation baseline", lp_citeseer),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let (tag, detail) = match run() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::NotRun(d) => {
                if require_data {
                    failed += 1;
                }
                ("NOT RUN", d)
            }
        };
        println!("[{tag}] {name}: {detail}");
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
