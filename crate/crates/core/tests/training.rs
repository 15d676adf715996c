use glgcn::data_io::{six_node_fixture, FixtureSpec};
use glgcn::optim_train::{select_lambda, train, FeatureRegGraph, Prepared, TrainConfig};
use glgcn::{Split, Variant};

fn sbm2() -> glgcn::Dataset {
    FixtureSpec::default().build().unwrap()
}

#[test]
fn every_variant_fits_the_planted_partition() {
    let ds = sbm2();
    for variant in Variant::ALL {
        let cfg = TrainConfig {
            variant,
            ..TrainConfig::default()
        };
        let (_, report) = train(&ds, &cfg).unwrap();
        assert_eq!(
            report.peak_train_accuracy(),
            1.0,
            "{variant}: {:?}",
            report.outcome.history.last()
        );
    }
}

#[test]
fn six_node_gcn_fits_training_labels() {
    let ds = six_node_fixture();
    let cfg = TrainConfig {
        max_epochs: 200,
        patience: 200,
        dropout_rate: 0.0,
        weight_decay: 0.0,
        ..TrainConfig::default()
    };
    let (params, report) = train(&ds, &cfg).unwrap();
    assert_eq!(report.peak_train_accuracy(), 1.0);
    let prepared = Prepared::new(&ds, &cfg).unwrap();
    assert!(prepared.evaluate(&params, &ds, Split::Train).unwrap() > 0.0);
}

#[test]
fn zero_lambdas_reproduce_plain_gcn() {
    let ds = sbm2();
    for seed in [0, 7] {
        let gcn = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        let (p0, r0) = train(&ds, &gcn).unwrap();
        for graph in [FeatureRegGraph::Similarity, FeatureRegGraph::Correlation] {
            let fl = TrainConfig {
                variant: Variant::GlgcnFl,
                lambda_label: 0.0,
                lambda_feature: 0.0,
                feature_reg_graph: graph,
                ..gcn.clone()
            };
            let (p1, r1) = train(&ds, &fl).unwrap();
            assert!(r0.same_trajectory(&r1));
            assert_eq!(p0, p1);
        }
    }
}

#[test]
fn training_is_deterministic() {
    let ds = sbm2();
    let cfg = TrainConfig {
        variant: Variant::GlgcnFl,
        feature_reg_graph: FeatureRegGraph::Correlation,
        seed: 11,
        ..TrainConfig::default()
    };
    let (p0, r0) = train(&ds, &cfg).unwrap();
    let (p1, r1) = train(&ds, &cfg).unwrap();
    assert_eq!(p0, p1);
    assert!(r0.same_trajectory(&r1));
    assert_eq!(r0.config, r1.config);
}

#[test]
fn returned_params_have_the_lowest_validation_loss() {
    let ds = sbm2();
    for variant in Variant::ALL {
        let cfg = TrainConfig {
            variant,
            patience: 3,
            ..TrainConfig::default()
        };
        let (params, report) = train(&ds, &cfg).unwrap();
        let o = &report.outcome;
        assert!(o.best_epoch <= o.epochs_run);
        let min = o.history.iter().map(|h| h.val_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(o.best_val_loss, min);
        // earliest epoch attaining the minimum
        let first = o.history.iter().position(|h| h.val_loss == min).unwrap() + 1;
        assert_eq!(o.best_epoch, first);
        let prepared = Prepared::new(&ds, &cfg).unwrap();
        let acc = prepared.evaluate(&params, &ds, Split::Val).unwrap();
        assert_eq!(acc, o.history[first - 1].val_accuracy);
        for h in &o.history {
            for a in [h.val_accuracy, h.train_accuracy] {
                assert!((0.0..=1.0).contains(&a));
            }
        }
    }
}

#[test]
fn early_stopping_halts_after_patience() {
    let ds = sbm2();
    let cfg = TrainConfig {
        patience: 1,
        ..TrainConfig::default()
    };
    let (_, report) = train(&ds, &cfg).unwrap();
    let o = &report.outcome;
    if o.stopped_early {
        assert_eq!(o.epochs_run, o.history.len());
        assert!(o.history[o.epochs_run - 1].val_loss >= o.best_val_loss);
        assert!(o.epochs_run < cfg.max_epochs);
    }
}

#[test]
fn train_loss_mostly_decreases_early_on() {
    // dropout resamples the objective every epoch, so measure without it
    let ds = sbm2();
    for variant in Variant::ALL {
        let cfg = TrainConfig {
            variant,
            dropout_rate: 0.0,
            ..TrainConfig::default()
        };
        let (_, report) = train(&ds, &cfg).unwrap();
        let h = &report.outcome.history;
        let steps = h.len().min(11);
        let down = h[..steps]
            .windows(2)
            .filter(|w| w[1].train_objective <= w[0].train_objective)
            .count();
        assert!(
            down + 2 >= steps - 1,
            "{variant}: {down} of {} steps decreased",
            steps - 1
        );
    }
}

#[test]
fn lambda_search_winner_dominates_the_table() {
    let ds = sbm2();
    let base = TrainConfig {
        variant: Variant::GlgcnFl,
        feature_reg_graph: FeatureRegGraph::Correlation,
        max_epochs: 60,
        ..TrainConfig::default()
    };
    let search = select_lambda(&ds, &base, &[1e-2, 1e-3, 1e-1], &[0.1, 1.0]).unwrap();
    assert_eq!(search.table.len(), 6);
    let best = &search.table[search.best_cell];
    for (i, cell) in search.table.iter().enumerate() {
        assert!(best.val_accuracy >= cell.val_accuracy);
        if cell.val_accuracy == best.val_accuracy {
            assert!(i >= search.best_cell, "tie must go to the earlier (smaller) cell");
        }
    }
    assert_eq!(search.best.lambda_label, best.lambda);
    assert_eq!(search.best.lambda_feature, best.lambda);
    assert_eq!(search.best.alpha, best.alpha);
    // cells are listed λ-major in ascending order
    let lambdas: Vec<f64> = search.table.iter().map(|c| c.lambda).collect();
    assert_eq!(lambdas, [1e-3, 1e-3, 1e-2, 1e-2, 1e-1, 1e-1]);
}

#[test]
fn degenerate_lambda_grids() {
    let ds = sbm2();
    let base = TrainConfig {
        variant: Variant::GlgcnL,
        max_epochs: 60,
        ..TrainConfig::default()
    };
    let only_zero = select_lambda(&ds, &base, &[0.0], &[0.5, 1.0]).unwrap();
    assert_eq!(only_zero.best.lambda_label, 0.0);
    // α only matters for the correlation graph
    assert_eq!(only_zero.table.len(), 1);

    // a huge label penalty flattens Z on a connected graph
    let connected = FixtureSpec {
        inter_edge_prob: 0.3,
        ..FixtureSpec::default()
    }
    .build()
    .unwrap();
    let s = select_lambda(&connected, &base, &[0.0, 1e6], &[1.0]).unwrap();
    assert_eq!(s.best.lambda_label, 0.0, "{:?}", s.table);
}

#[test]
fn multi_seed_runs_come_back_in_order() {
    let ds = sbm2();
    let cfg = TrainConfig {
        max_epochs: 20,
        ..TrainConfig::default()
    };
    let reports = glgcn::optim_train::train_seeds(&ds, &cfg, &[3, 1, 2]).unwrap();
    let seeds: Vec<u64> = reports.iter().map(|r| r.config.seed).collect();
    assert_eq!(seeds, [3, 1, 2]);
    let (_, solo) = train(&ds, &TrainConfig { seed: 1, ..cfg }).unwrap();
    assert!(solo.same_trajectory(&reports[1]));
}
