use std::collections::BTreeMap;

use proptest::prelude::*;
use tangency_core::lattice::{PredicateMask, Unconstrained};
use tangency_core::sampler::{build_table, sample, sample_one, PathMeasure};
use tangency_core::{LatticePath, WalkModel};

fn binomial(n: i64, k: i64) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}

/// Every path to `target` above `floor`, with its unnormalized weight.
fn all_paths(model: &WalkModel, q: f64, target: (i64, i64), floor: i64) -> Vec<(Vec<u16>, f64)> {
    fn walk(
        model: &WalkModel,
        q: f64,
        target: (i64, i64),
        floor: i64,
        site: (i64, i64),
        prefix: &mut Vec<u16>,
        weight: f64,
        out: &mut Vec<(Vec<u16>, f64)>,
    ) {
        if site == target {
            out.push((prefix.clone(), weight));
            return;
        }
        for (i, (s, &w)) in model.steps().iter().zip(model.weights()).enumerate() {
            let next = (site.0 + s.u, site.1 + s.v);
            if next.0 > target.0 || next.1 < floor {
                continue;
            }
            let area = s.u as f64 * (site.1 as f64 + 0.5 * s.v as f64);
            prefix.push(i as u16);
            walk(model, q, target, floor, next, prefix, weight * w * q.powf(area), out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    walk(model, q, target, floor, (0, 0), &mut Vec::new(), 1.0, &mut out);
    out
}

#[test]
fn path_frequencies_match_exact_weights() {
    let model = WalkModel::schroder(0.5).unwrap();
    let (target, floor, q) = ((8, 0), -1, 0.8);
    let mask = PredicateMask(move |_x: i64, y: i64| y >= floor);
    let paths = all_paths(&model, q, target, floor);
    let total: f64 = paths.iter().map(|p| p.1).sum();
    let table = build_table(&model, (0, 0), target, &mask, q).unwrap();
    assert!((table.log_weight_to_go(0, 0) - total.ln()).abs() < 1e-12);
    let draws = 40_000;
    let ensemble = sample(&table, 5, draws);
    let mut seen: BTreeMap<Vec<u16>, usize> = BTreeMap::new();
    for path in &ensemble.paths {
        *seen.entry(path.steps.clone()).or_default() += 1;
    }
    assert!(seen.len() <= paths.len());
    for (steps, weight) in &paths {
        let p = weight / total;
        let count = *seen.get(steps).unwrap_or(&0) as f64;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!((count - draws as f64 * p).abs() <= 5.0 * sd + 1.0, "{steps:?}: {count} vs {}", draws as f64 * p);
    }
}

#[test]
fn visit_law_is_the_binomial_ratio() {
    let model = WalkModel::unit_steps();
    let n = 60;
    let measure = PathMeasure::new(&model, (0, 0), (n, n), &Unconstrained, 1.0).unwrap();
    let z = binomial(2 * n, n);
    for x in [0, 7, 30, 59] {
        let law = measure.visit_law(x).unwrap();
        for (&y, &p) in &law {
            let exact = binomial(x + y, x) * binomial(2 * n - x - y, n - x) / z;
            assert!((p - exact).abs() < 1e-12 * exact.max(1e-300) + 1e-15, "({x},{y})");
        }
        // every column is crossed by a vertical run: n/(n+1) + 1 sites on average
        let mass: f64 = law.values().sum();
        assert!((mass - (1.0 + n as f64 / (n as f64 + 1.0))).abs() < 1e-9, "{mass}");
    }
}

#[test]
fn exact_mean_matches_sampled_mean() {
    let model = WalkModel::schroder(1.0).unwrap();
    let mask = PredicateMask(|x: i64, y: i64| y >= 0 && y <= 6 + x / 4);
    let measure = PathMeasure::new(&model, (0, 0), (40, 4), &mask, 0.97).unwrap();
    let exact = measure.mean_heights();
    let ensemble = sample(measure.table(), 21, 20_000);
    let profile = ensemble.mean_and_variance().unwrap();
    for (i, &h) in exact.iter().enumerate() {
        let se = (profile.variance[i] / 20_000.0).sqrt();
        assert!((profile.mean[i] - h).abs() <= 5.0 * se + 1e-9, "column {i}");
    }
}

#[test]
fn draws_depend_only_on_seed_and_index() {
    let model = WalkModel::schroder(0.5).unwrap();
    let table = build_table(&model, (0, 0), (30, 2), &Unconstrained, 1.0).unwrap();
    let a = sample(&table, 9, 50);
    let b = sample(&table, 9, 80);
    assert_eq!(a.paths[..], b.paths[..50]);
    assert_eq!(sample_one(&table, 9, 17), a.paths[17]);
    let c = sample(&table, 10, 50);
    assert_ne!(a.paths, c.paths);
}

fn ends_at(path: &LatticePath, model: &WalkModel, end: (i64, i64)) -> bool {
    path.end(model.steps()) == end
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn samples_stay_admissible(seed in any::<u64>(), width in 2i64..6, q in 0.7f64..1.3) {
        let model = WalkModel::schroder(0.5).unwrap();
        let mask = PredicateMask(move |_x: i64, y: i64| y.abs() <= width);
        let table = build_table(&model, (0, 0), (20, 0), &mask, q).unwrap();
        for path in sample(&table, seed, 20).paths {
            prop_assert!(ends_at(&path, &model, (20, 0)));
            prop_assert!(path.sites(model.steps()).iter().all(|&(_, y)| y.abs() <= width));
        }
    }

    #[test]
    fn passage_laws_are_normalized(column in 1i64..30, q in 0.8f64..1.2) {
        let model = WalkModel::new([(1, 1), (1, -1), (2, 0), (3, 1)], vec![1.0, 1.0, 0.5, 0.3]).unwrap();
        let measure = PathMeasure::new(&model, (0, 0), (30, 4), &Unconstrained, q).unwrap();
        let (on, beyond) = measure.first_passage_law(column).unwrap();
        let total: f64 = on.values().sum::<f64>() + beyond.values().sum::<f64>();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }
}
