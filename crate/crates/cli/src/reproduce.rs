use std::path::{Path, PathBuf};

use anyhow::Result;
use tangency_core::domain::Domain;
use tangency_core::passage::gaussian_law;
use tangency_core::sampler::{build_table, sample, PathMeasure};
use tangency_core::stats::{empirical_law, ks_distance};
use tangency_core::variational::{constrained_optimum, DEFAULT_RESOLUTION};
use tangency_core::WalkModel;

use crate::commands::{ensemble_tables, trajectory_tables};
use crate::output::{num, Run, Table};
use crate::{Figure, ReproduceArgs};

pub fn run(args: ReproduceArgs, argv: Vec<String>, out: &Path) -> Result<Vec<PathBuf>> {
    match args.figure {
        Figure::Fig2 => fig2(args, argv, out),
        Figure::Fig4 => fig4(args, argv, out),
        Figure::Fig5 => fig5(args, argv, out),
    }
}

/// Unit steps from the origin to `(n, n)`: sampled histograms against the Gaussian passage law.
fn fig2(args: ReproduceArgs, argv: Vec<String>, out: &Path) -> Result<Vec<PathBuf>> {
    let mut run = Run::new("reproduce fig2", argv);
    let n = args.n.unwrap_or(200);
    let samples = args.samples.unwrap_or(36_000);
    run.param("n", n);
    run.param("samples", samples);
    run.param("walk", "unit steps (1,0) (0,1)");
    run.seed = Some(args.seed);
    let model = WalkModel::unit_steps();
    let columns: Vec<i64> = [0.1, 0.25, 0.5, 0.75, 0.9]
        .iter()
        .map(|f| (f * n as f64).round() as i64)
        .collect();
    let table = build_table(&model, (0, 0), (n, n), &tangency_core::lattice::Unconstrained, 1.0)?;
    let ensemble = sample(&table, args.seed, samples);
    let suffix = format!("_N{n}");
    run.tables = ensemble_tables(&ensemble, &columns, false, &suffix)?;
    let nf = n as f64;
    let mut summary = Table::new(
        format!("summary{suffix}.tsv"),
        &["column", "ks", "sampled_mass", "theory_mass"],
    );
    for &c in &columns {
        let law = gaussian_law(&model, c as f64 / nf, (1.0, 1.0), nf)?;
        let (lo, hi) = law.lattice_window(6.0);
        let theory = law.lattice_law(lo, hi);
        let mut tsv = Table::new(format!("theory_x{c}{suffix}.tsv"), &["y", "probability", "normalized"]);
        tsv.note(format!("column={c}"));
        for y in lo..=hi {
            tsv.row(&[y.to_string(), num(law.site_probability(y)), num(theory[&y])]);
        }
        run.tables.push(tsv);
        let hist = ensemble.passage_histogram(c)?;
        let ks = ks_distance(&empirical_law(&hist.counts), &theory);
        let sampled_mass = hist.total() as f64 / samples as f64;
        summary.row(&[c.to_string(), num(ks), num(sampled_mass), num(law.mass)]);
    }
    run.tables.push(summary);
    run.finish(out)
}

/// Schröder paths under the double parabola, without and with an area weight.
fn fig4(args: ReproduceArgs, argv: Vec<String>, out: &Path) -> Result<Vec<PathBuf>> {
    let mut run = Run::new("reproduce fig4", argv);
    let n = args.n.unwrap_or(960);
    let samples = args.samples.unwrap_or(1);
    let area_base: f64 = 0.05;
    run.param("n", n);
    run.param("samples", samples);
    run.param("w", args.w);
    run.param("area_base", area_base);
    run.param("domain", "double_parabola");
    run.seed = Some(args.seed);
    let model = WalkModel::schroder(args.w)?;
    let domain = Domain::double_parabola();
    let end = (n, 0);
    let mask = domain.lattice_mask(n, &[(0, 0), end])?;
    let nf = n as f64;
    for (side, lambda) in [("left", 0.0), ("right", area_base.ln())] {
        let q = (lambda / nf).exp();
        let measure = PathMeasure::new(&model, (0, 0), end, &mask, q)?;
        let ensemble = sample(measure.table(), args.seed, samples);
        for (k, path) in ensemble.paths.iter().enumerate() {
            let mut tsv = Table::new(format!("path_{side}_{k}.tsv"), &["x", "y"]);
            tsv.note(format!("q={q}"));
            for (x, y) in path.sites(&ensemble.steps) {
                tsv.row(&[x.to_string(), y.to_string()]);
            }
            run.tables.push(tsv);
        }
        let mut mean = Table::new(format!("mean_path_{side}.tsv"), &["x", "h"]);
        mean.note("exact expectation under the sampling measure");
        for (x, h) in measure.mean_heights().into_iter().enumerate() {
            mean.row(&[x.to_string(), num(h)]);
        }
        run.tables.push(mean);
        let traj = constrained_optimum(&model, lambda, &domain, (0.0, 0.0), (1.0, 0.0), DEFAULT_RESOLUTION)?;
        run.tables.extend(trajectory_tables(&traj, nf, &format!("_{side}")));
    }
    run.finish(out)
}

/// Exact mean path above the arch against the continuum optimum, for several lengths.
fn fig5(args: ReproduceArgs, argv: Vec<String>, out: &Path) -> Result<Vec<PathBuf>> {
    let mut run = Run::new("reproduce fig5", argv);
    let largest = args.n.unwrap_or(200);
    let sizes: Vec<i64> = [8, 4, 2, 1].iter().map(|d| largest / d).filter(|&n| n >= 1).collect();
    run.param("sizes", sizes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
    run.param("domain", "arch");
    let model = WalkModel::unit_steps();
    let domain = Domain::preset("arch", &Default::default())?;
    let traj = constrained_optimum(&model, 0.0, &domain, (0.0, 0.0), (1.0, 1.0), DEFAULT_RESOLUTION)?;
    let region = (traj.contacts[0].x, traj.contacts[traj.contacts.len() - 1].x);
    for &n in &sizes {
        let nf = n as f64;
        let mask = domain.lattice_mask(n, &[(0, 0), (n, n)])?;
        let measure = PathMeasure::new(&model, (0, 0), (n, n), &mask, 1.0)?;
        let mut tsv = Table::new(format!("gap_N{n}.tsv"), &["x", "gap"]);
        tsv.note(format!("contact region [{}, {}]", region.0, region.1));
        for (c, h) in measure.mean_heights().into_iter().enumerate() {
            let x = c as f64 / nf;
            if x < region.0 || x > region.1 {
                continue;
            }
            let wall = nf * domain.lower_at(x);
            tsv.row(&[num(x), num((h - wall) / nf.sqrt())]);
        }
        run.tables.push(tsv);
    }
    run.tables.extend(trajectory_tables(&traj, 1.0, ""));
    run.finish(out)
}
