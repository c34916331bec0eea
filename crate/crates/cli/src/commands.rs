use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use tangency_core::config::{parse_domain, parse_walk_file};
use tangency_core::domain::{Domain, LatticeMask};
use tangency_core::exact::parse_rational;
use tangency_core::lattice::{SiteMask, Unconstrained};
use tangency_core::passage::{bulk_first_passage_law, bulk_mean_height, diagonal_first_passage_law, gaussian_law};
use tangency_core::sampler::{build_table, sample as draw, PathEnsemble};
use tangency_core::tangent::{most_likely_entry, tangent_family};
use tangency_core::variational::{constrained_optimum, tangency_tolerance, verify_tangency, Trajectory};
use tangency_core::{count_between, LagrangeanTable, Mode, QWeight, WalkModel};

use crate::output::{num, Run, Table};
use crate::{
    linspace, CountArgs, CountMode, LagrangeanArgs, OptimizeArgs, PassageArgs, PassageLaw, SampleArgs, TangentArgs,
};

pub fn parse_q(text: &str) -> Result<QWeight> {
    if let Some(q) = parse_rational(text) {
        return Ok(QWeight::rational(q));
    }
    let value: f64 = text.trim().parse().map_err(|_| anyhow!("cannot read q from `{text}`"))?;
    Ok(QWeight::float(value))
}

fn load_walk(run: &mut Run, path: &Path, q: Option<&str>) -> Result<(WalkModel, QWeight)> {
    let text = run.input(path)?;
    let spec = parse_walk_file(&text).with_context(|| format!("in {}", path.display()))?;
    let q = match q {
        Some(text) => {
            run.param("q", text);
            parse_q(text)?
        }
        None => spec.q,
    };
    Ok((spec.model, q))
}

fn load_domain(run: &mut Run, path: &Path) -> Result<Domain> {
    let text = run.input(path)?;
    parse_domain(&text).with_context(|| format!("in {}", path.display()))
}

fn site(p: (i64, i64)) -> String {
    format!("{},{}", p.0, p.1)
}

fn point(p: (f64, f64)) -> String {
    format!("{},{}", p.0, p.1)
}

fn mask_for(
    run: &mut Run,
    domain: Option<&PathBuf>,
    n: i64,
    endpoints: &[(i64, i64)],
) -> Result<Option<LatticeMask>> {
    let Some(path) = domain else { return Ok(None) };
    let domain = load_domain(run, path)?;
    run.param("n", n);
    Ok(Some(domain.lattice_mask(n, endpoints)?))
}

pub fn lagrangean(args: LagrangeanArgs, argv: Vec<String>, out: &Path) -> Result<Vec<PathBuf>> {
    let mut run = Run::new("lagrangean", argv);
    let (model, _) = load_walk(&mut run, &args.walk, None)?;
    let (from, to, count) = args.t_range;
    run.param("t_range", format!("{from}:{to}:{count}"));
    let nhat: Vec<String> = args.nhat_n.iter().map(|n| n.to_string()).collect();
    run.param("nhat_n", nhat.join(","));
    let mut table = LagrangeanTable::build(&model, &linspace(from, to, count))?;
    if !args.nhat_n.is_empty() {
        table = table.with_prefactors(&model, &args.nhat_n);
    }
    let mut tsv = Table::new("lagrangean.tsv", &["t", "x", "y", "L", "Lp", "Lpp", "Nhat"]);
    for r in &table.rows {
        let nhat = r.nhat.map_or("nan".to_string(), num);
        tsv.row(&[num(r.t), num(r.x), num(r.y), num(r.l), num(r.lp), num(r.lpp), nhat]);
    }
    run.tables.push(tsv);
    run.finish(out)
}

pub fn count(args: CountArgs, argv: Vec<String>, out: &Path) -> Result<Vec<PathBuf>> {
    let mut run = Run::new("count", argv);
    let (model, q) = load_walk(&mut run, &args.walk, args.q.as_deref())?;
    run.param("start", site(args.start));
    run.param("target", site(args.target));
    let mode = match args.mode {
        CountMode::Exact => Mode::Exact,
        CountMode::Log => Mode::Log,
    };
    run.param("mode", format!("{mode:?}").to_lowercase());
    let n = args.n.unwrap_or(args.target.0.max(1));
    let mask = mask_for(&mut run, args.domain.as_ref(), n, &[args.start, args.target])?;
    let mask: &dyn SiteMask = match &mask {
        Some(m) => m,
        None => &Unconstrained,
    };
    let value = count_between(&model, args.start, args.target, mask, &q, mode)?;
    let shown = match mode {
        Mode::Exact => value.to_string(),
        Mode::Log => num(value.log_value),
    };
    println!("{shown}");
    let mut tsv = Table::new("count.tsv", &["start", "target", "mode", "value", "log_value"]);
    tsv.row(&[
        site(args.start),
        site(args.target),
        format!("{mode:?}").to_lowercase(),
        shown,
        num(value.log_value),
    ]);
    run.tables.push(tsv);
    run.finish(out)
}

/// Histogram tables and the mean path of an ensemble.
pub fn ensemble_tables(ensemble: &PathEnsemble, columns: &[i64], first: bool, suffix: &str) -> Result<Vec<Table>> {
    let mut tables = Vec::new();
    for &c in columns {
        let dist = if first {
            ensemble.first_passage_histogram(c)?
        } else {
            ensemble.passage_histogram(c)?
        };
        let mut tsv = Table::new(format!("hist_x{c}{suffix}.tsv"), &["y", "count"]);
        tsv.note(format!("column={c}"));
        tsv.note(format!("samples={}", dist.samples));
        for (&(x, y), &k) in &dist.skipped {
            tsv.note(format!("skipped {x} {y} {k}"));
        }
        for (&y, &k) in &dist.counts {
            tsv.row(&[y.to_string(), k.to_string()]);
        }
        tables.push(tsv);
    }
    let profile = ensemble.mean_and_variance()?;
    let mut tsv = Table::new(format!("mean_path{suffix}.tsv"), &["x", "h", "sigma2"]);
    for i in 0..profile.xs.len() {
        tsv.row(&[profile.xs[i].to_string(), num(profile.mean[i]), num(profile.variance[i])]);
    }
    tables.push(tsv);
    Ok(tables)
}

pub fn sample(args: SampleArgs, argv: Vec<String>, out: &Path) -> Result<Vec<PathBuf>> {
    let mut run = Run::new("sample", argv);
    let (model, q) = load_walk(&mut run, &args.walk, args.q.as_deref())?;
    run.param("start", site(args.start));
    run.param("end", site(args.end));
    run.param("n_samples", args.n_samples);
    run.param("first_passage", args.first_passage);
    let cols: Vec<String> = args.columns.iter().map(|c| c.to_string()).collect();
    run.param("columns", cols.join(","));
    run.seed = Some(args.seed);
    let n = args.n.unwrap_or(args.end.0.max(1));
    let mask = mask_for(&mut run, args.domain.as_ref(), n, &[args.start, args.end])?;
    let mask: &dyn SiteMask = match &mask {
        Some(m) => m,
        None => &Unconstrained,
    };
    let table = build_table(&model, args.start, args.end, mask, q.value())?;
    let ensemble = draw(&table, args.seed, args.n_samples);
    run.tables = ensemble_tables(&ensemble, &args.columns, args.first_passage, "")?;
    run.finish(out)
}

pub fn passage(args: PassageArgs, argv: Vec<String>, out: &Path) -> Result<Vec<PathBuf>> {
    let mut run = Run::new("passage", argv);
    run.param("n", args.n);
    run.param("end", point(args.end));
    let nf = args.n as f64;
    match args.law {
        PassageLaw::Gaussian => {
            run.param("law", "gaussian");
            run.param("width", args.width);
            let walk = args.walk.as_ref().ok_or_else(|| anyhow!("the gaussian law needs --walk"))?;
            let (model, _) = load_walk(&mut run, walk, None)?;
            if args.columns.is_empty() {
                bail!("the gaussian law needs --columns");
            }
            for &c in &args.columns {
                let law = gaussian_law(&model, c as f64 / nf, args.end, nf)?;
                let (lo, hi) = law.lattice_window(args.width);
                let normalized = law.lattice_law(lo, hi);
                let mut tsv = Table::new(format!("theory_x{c}.tsv"), &["y", "probability", "normalized"]);
                tsv.note(format!("column={c}"));
                tsv.note(format!("mean={} sigma={} mass={}", law.mean * nf, law.sigma * nf, law.mass));
                for y in lo..=hi {
                    tsv.row(&[y.to_string(), num(law.site_probability(y)), num(normalized[&y])]);
                }
                run.tables.push(tsv);
            }
        }
        PassageLaw::Entry => {
            run.param("law", "entry");
            let a_c = args.a_c.ok_or_else(|| anyhow!("the entry law needs --a-c"))?;
            run.param("a_c", a_c);
            let (rate, law) = diagonal_first_passage_law(args.end.0, args.end.1, a_c)?;
            let mut tsv = Table::new("entry_law.tsv", &["m", "probability"]);
            tsv.note(format!("rate={rate} mean={}", law.mean()));
            for (m, p) in law.pmf.iter().enumerate() {
                tsv.row(&[m.to_string(), num(*p)]);
            }
            run.tables.push(tsv);
        }
        PassageLaw::Bulk => {
            run.param("law", "bulk");
            let a_c = args.a_c.ok_or_else(|| anyhow!("the bulk law needs --a-c"))?;
            let gamma = args.gamma.ok_or_else(|| anyhow!("the bulk law needs --gamma"))?;
            run.param("a_c", a_c);
            run.param("gamma", gamma);
            let law = bulk_first_passage_law(gamma, a_c, nf)?;
            let mut tsv = Table::new("bulk_law.tsv", &["m", "probability"]);
            tsv.note(format!(
                "mean={} leading_mean={}",
                law.mean(),
                bulk_mean_height(gamma, a_c, nf)
            ));
            for (m, p) in law.pmf.iter().enumerate() {
                tsv.row(&[m.to_string(), num(*p)]);
            }
            run.tables.push(tsv);
        }
    }
    run.finish(out)
}

/// Trajectory and contact tables, scaled by `scale` in both coordinates.
pub fn trajectory_tables(traj: &Trajectory, scale: f64, suffix: &str) -> Vec<Table> {
    let mut path = Table::new(format!("trajectory{suffix}.tsv"), &["x", "h", "contact_flag"]);
    path.note(format!("lambda={} start={} end={}", traj.lambda, point(traj.start), point(traj.end)));
    for i in 0..traj.xs.len() {
        let flag = if traj.on_wall[i].is_some() { "1" } else { "0" };
        path.row(&[num(scale * traj.xs[i]), num(scale * traj.hs[i]), flag.into()]);
    }
    let report = verify_tangency(traj, &traj.domain, tangency_tolerance(traj.resolution()));
    let mut contacts = Table::new(
        format!("contacts{suffix}.tsv"),
        &["kind", "wall", "x", "y", "corner", "free_slope", "wall_slope", "residual", "status"],
    );
    contacts.note(format!("tolerance={} passed={}", report.tol, report.passed()));
    let slope = |s: Option<f64>| s.map_or("nan".to_string(), num);
    for check in &report.checks {
        let c = &check.contact;
        contacts.row(&[
            c.kind.name().into(),
            c.wall.name().into(),
            num(scale * c.x),
            num(scale * c.y),
            c.corner.to_string(),
            slope(check.free_slope),
            slope(check.wall_slope),
            num(check.residual),
            format!("{:?}", check.status).to_lowercase(),
        ]);
    }
    vec![path, contacts]
}

pub fn optimize(args: OptimizeArgs, argv: Vec<String>, out: &Path) -> Result<Vec<PathBuf>> {
    let mut run = Run::new("optimize", argv);
    let (model, _) = load_walk(&mut run, &args.walk, None)?;
    let domain = load_domain(&mut run, &args.domain)?;
    run.param("lambda", args.lambda);
    run.param("start", point(args.start));
    run.param("end", point(args.end));
    run.param("resolution", args.resolution);
    let traj = constrained_optimum(&model, args.lambda, &domain, args.start, args.end, args.resolution)?;
    for c in &traj.contacts {
        println!("{}\t{}\t{}\t{}", c.kind.name(), c.wall.name(), c.x, c.y);
    }
    run.tables = trajectory_tables(&traj, 1.0, "");
    run.finish(out)
}

pub fn tangent(args: TangentArgs, argv: Vec<String>, out: &Path) -> Result<Vec<PathBuf>> {
    let mut run = Run::new("tangent", argv);
    let (model, _) = load_walk(&mut run, &args.walk, None)?;
    let domain = load_domain(&mut run, &args.domain)?;
    let starts = args.starts.0;
    run.param("lambda", args.lambda);
    run.param("end", point(args.end));
    run.param("starts", starts.iter().map(|&p| point(p)).collect::<Vec<_>>().join(" "));
    run.param("resolution", args.resolution);
    let family = tangent_family(&model, args.lambda, &domain, &starts, args.end, args.resolution);
    let mut columns = vec!["start_x", "start_y", "entry_slope", "contact_x", "contact_y"];
    if args.n.is_some() {
        columns.extend(["entry_x", "entry_y"]);
    }
    let mut tsv = Table::new("family.tsv", &columns);
    for failure in &family.failures {
        eprintln!("warning: start {} failed: {}", point(failure.start), failure.error);
        tsv.note(format!("failed {} {}", point(failure.start), failure.error));
    }
    for record in &family.records {
        let (cx, cy) = record.contact.as_ref().map_or((f64::NAN, f64::NAN), |c| (c.x, c.y));
        let mut row = vec![num(record.start.0), num(record.start.1), num(record.entry_slope), num(cx), num(cy)];
        if let Some(n) = args.n {
            let nf = n as f64;
            let lattice = |p: (f64, f64)| ((nf * p.0).round() as i64, (nf * p.1).round() as i64);
            let entry = most_likely_entry(&model, lattice(record.start), &domain, lattice(args.end), n)?;
            row.push(num(entry.site.0 as f64 / nf));
            row.push(num(entry.site.1 as f64 / nf));
        }
        tsv.row(&row);
    }
    if let Some(n) = args.n {
        run.param("n", n);
    }
    run.tables.push(tsv);
    let mut env = Table::new("envelope.tsv", &["x", "y"]);
    for (x, y) in family.envelope()? {
        env.row(&[num(x), num(y)]);
    }
    run.tables.push(env);
    run.finish(out)
}
