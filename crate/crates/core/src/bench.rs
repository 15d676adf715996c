//! Accuracy table over datasets × methods.

use rayon::prelude::*;

use crate::data_io::{Dataset, Split};
use crate::error::{Error, Result};
use crate::graph::{label_propagation, LabelPropagation};
use crate::loss_grad::Variant;
use crate::optim_train::{select_lambda, similarity_graph, train_seeds, TrainConfig};
use crate::report::{BenchCell, BenchReport, Method};

/// Default λ grid for validation-based selection.
pub const LAMBDA_GRID: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];
/// Default α grid, searched only with the correlation-based feature term.
pub const ALPHA_GRID: [f64; 3] = [0.1, 0.5, 1.0];

#[derive(Clone, Debug, PartialEq)]
pub struct BenchSpec {
    pub base: TrainConfig,
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    pub lambda_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    /// Use the base λ values as given instead of searching.
    pub pin_lambda: bool,
    pub include_lp: bool,
    pub lp: LabelPropagation,
}

impl Default for BenchSpec {
    fn default() -> Self {
        BenchSpec {
            base: TrainConfig::default(),
            variants: Variant::ALL.to_vec(),
            seeds: (0..10).collect(),
            lambda_grid: LAMBDA_GRID.to_vec(),
            alpha_grid: ALPHA_GRID.to_vec(),
            pin_lambda: false,
            include_lp: true,
            lp: LabelPropagation::default(),
        }
    }
}

/// Test accuracy of label propagation over the configured similarity graph.
pub fn label_propagation_accuracy(dataset: &Dataset, config: &TrainConfig, lp: &LabelPropagation) -> Result<f64> {
    if dataset.test.is_empty() {
        return Err(Error::invalid("test split is empty"));
    }
    let s = similarity_graph(dataset, config)?;
    let pred = label_propagation(
        &s,
        dataset.labels(),
        dataset.num_classes(),
        &dataset.train,
        lp.max_iters,
        lp.tol,
    )?;
    let nodes = dataset.split(Split::Test);
    let correct = nodes.iter().filter(|&&i| dataset.labels()[i] == Some(pred[i])).count();
    Ok(correct as f64 / nodes.len() as f64)
}

fn run_cell(dataset: &Dataset, method: Method, spec: &BenchSpec) -> Result<BenchCell> {
    let variant = match method {
        Method::Lp => {
            let acc = label_propagation_accuracy(dataset, &spec.base, &spec.lp)?;
            return Ok(BenchCell::new(&dataset.name, method, vec![acc], None, Vec::new(), None));
        }
        Method::Model(v) => v,
    };
    let base = TrainConfig {
        variant,
        seed: spec.seeds[0],
        ..spec.base.clone()
    };
    let (config, search) = if variant == Variant::Gcn || spec.pin_lambda {
        (base, None)
    } else {
        let s = select_lambda(dataset, &base, &spec.lambda_grid, &spec.alpha_grid)?;
        (s.best.clone(), Some(s))
    };
    log::info!("{}: training {} on {} seed(s)", dataset.name, variant, spec.seeds.len());
    let reports = train_seeds(dataset, &config, &spec.seeds)?;
    let accs = reports
        .iter()
        .map(|r| {
            r.outcome
                .test_accuracy
                .ok_or_else(|| Error::invalid(format!("{} has no test split", dataset.name)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchCell::new(
        &dataset.name,
        method,
        accs,
        Some(config),
        spec.seeds.clone(),
        search,
    ))
}

/// Runs every (dataset, method) cell, in parallel, and assembles the table.
pub fn run_bench(datasets: &[Dataset], skipped: Vec<String>, spec: &BenchSpec) -> Result<BenchReport> {
    if spec.seeds.is_empty() {
        return Err(Error::invalid("at least one seed is required"));
    }
    spec.base.validate()?;
    let mut methods = Vec::new();
    if spec.include_lp {
        methods.push(Method::Lp);
    }
    methods.extend(spec.variants.iter().map(|&v| Method::Model(v)));
    let jobs: Vec<(&Dataset, Method)> = datasets
        .iter()
        .flat_map(|d| methods.iter().map(move |&m| (d, m)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(d, m)| run_cell(d, m, spec))
        .collect::<Result<Vec<_>>>()?;
    let names = datasets.iter().map(|d| d.name.clone()).collect();
    Ok(BenchReport::new(names, skipped, cells))
}
