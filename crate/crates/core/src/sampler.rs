//! Exact endpoint-conditioned path sampling from a backward weight-to-go
//! table, and statistics of path ensembles.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::enumerate::LatticePath;
use crate::lattice::{column_range, forward_sweep, log_sum_exp, Column, Keep, LogRing, SiteMask, Sweep};
use crate::walk::{Step, WalkModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("({}, {}) cannot be reached from ({}, {}) inside the mask", .end.0, .end.1, .start.0, .start.1)]
    UnreachableEndpoint { start: (i64, i64), end: (i64, i64) },
    #[error("column {column} is outside [{first}, {last}]")]
    ColumnOutOfRange { column: i64, first: i64, last: i64 },
    #[error("the ensemble is empty")]
    EmptyEnsemble,
    #[error("q must be a positive finite number, got {0}")]
    InvalidQ(f64),
}

/// Log weight-to-go `G(site)`: log of the weighted sum of admissible paths
/// from `site` to the endpoint.
#[derive(Debug, Clone)]
pub struct SamplingTable {
    steps: Vec<Step>,
    log_w: Vec<f64>,
    log_q: f64,
    start: (i64, i64),
    end: (i64, i64),
    columns: Vec<Column<f64>>,
}

impl SamplingTable {
    pub fn start(&self) -> (i64, i64) {
        self.start
    }

    pub fn end(&self) -> (i64, i64) {
        self.end
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// `G(x, y)`, `-inf` outside the admissible set.
    pub fn log_weight_to_go(&self, x: i64, y: i64) -> f64 {
        if x < self.start.0 || x > self.end.0 {
            return f64::NEG_INFINITY;
        }
        self.columns[(x - self.start.0) as usize]
            .get(y)
            .copied()
            .unwrap_or(f64::NEG_INFINITY)
    }

    /// Log weight of step `i` leaving height `y`.
    pub fn log_step_weight(&self, i: usize, y: i64) -> f64 {
        let s = self.steps[i];
        self.log_w[i] + self.log_q * s.u as f64 * (y as f64 + 0.5 * s.v as f64)
    }

    /// Admissible sites with finite weight-to-go.
    pub fn sites(&self) -> impl Iterator<Item = ((i64, i64), f64)> + '_ {
        self.columns.iter().flat_map(|c| {
            c.heights()
                .zip(c.values.iter().copied())
                .filter(|(_, g)| g.is_finite())
                .map(move |(y, g)| ((c.x, y), g))
        })
    }

    /// Largest violation of `G(s) = log Σ_i w_i(s) e^{G(s + step_i)}` over non-terminal sites.
    pub fn consistency_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for ((x, y), g) in self.sites() {
            if (x, y) == self.end {
                continue;
            }
            let terms: Vec<f64> = (0..self.steps.len())
                .map(|i| {
                    let s = self.steps[i];
                    self.log_step_weight(i, y) + self.log_weight_to_go(x + s.u, y + s.v)
                })
                .collect();
            worst = worst.max((log_sum_exp(&terms) - g).abs());
        }
        worst
    }
}

/// Builds the weight-to-go table for paths `start → end` inside `mask`, with
/// area weight `q`.
pub fn build_table(
    model: &WalkModel,
    start: (i64, i64),
    end: (i64, i64),
    mask: &dyn SiteMask,
    q: f64,
) -> Result<SamplingTable, SamplerError> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(SamplerError::InvalidQ(q));
    }
    let unreachable = SamplerError::UnreachableEndpoint { start, end };
    if end.0 < start.0 || !mask.admits(start.0, start.1) || !mask.admits(end.0, end.1) {
        return Err(unreachable);
    }
    let steps = model.steps().to_vec();
    let mut table = SamplingTable {
        log_w: model.weights().iter().map(|w| w.ln()).collect(),
        log_q: q.ln(),
        steps,
        start,
        end,
        columns: Vec::new(),
    };
    let width = (end.0 - start.0 + 1) as usize;
    let mut columns: Vec<Column<f64>> = (start.0..=end.0).map(Column::empty).collect();
    let ascending = model.vertical_sign() < 0;
    let mut terms = Vec::with_capacity(table.steps.len() + 1);
    for idx in (0..width).rev() {
        let x = start.0 + idx as i64;
        let Some((lo, hi)) = column_range(model, start, end, mask, x) else {
            continue;
        };
        let mut values = vec![f64::NEG_INFINITY; (hi - lo + 1) as usize];
        let heights: Box<dyn Iterator<Item = i64>> = if ascending {
            Box::new(lo..=hi)
        } else {
            Box::new((lo..=hi).rev())
        };
        for y in heights {
            if !mask.admits(x, y) {
                continue;
            }
            terms.clear();
            if (x, y) == end {
                terms.push(0.0);
            }
            for (i, s) in table.steps.iter().enumerate() {
                let (nx, ny) = (x + s.u, y + s.v);
                if nx > end.0 {
                    continue;
                }
                let g = if s.u == 0 {
                    if ny < lo || ny > hi {
                        f64::NEG_INFINITY
                    } else {
                        values[(ny - lo) as usize]
                    }
                } else {
                    columns[idx + s.u as usize]
                        .get(ny)
                        .copied()
                        .unwrap_or(f64::NEG_INFINITY)
                };
                if g.is_finite() {
                    let lw = table.log_w[i] + table.log_q * s.u as f64 * (y as f64 + 0.5 * s.v as f64);
                    terms.push(lw + g);
                }
            }
            if !terms.is_empty() {
                values[(y - lo) as usize] = log_sum_exp(&terms);
            }
        }
        columns[idx] = Column { x, lo, values };
    }
    table.columns = columns;
    if !table.log_weight_to_go(start.0, start.1).is_finite() {
        return Err(unreachable);
    }
    Ok(table)
}

/// A set of sampled paths sharing start, end and step set.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub steps: Vec<Step>,
    pub start: (i64, i64),
    pub end: (i64, i64),
    pub seed: u64,
    pub paths: Vec<LatticePath>,
}

/// Draws path `index` of the stream `seed`.
pub fn sample_one(table: &SamplingTable, seed: u64, index: u64) -> LatticePath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut site = table.start;
    let mut steps = Vec::new();
    while site != table.end {
        let here = table.log_weight_to_go(site.0, site.1);
        let r: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = None;
        for (i, s) in table.steps.iter().enumerate() {
            let next = table.log_weight_to_go(site.0 + s.u, site.1 + s.v);
            if !next.is_finite() {
                continue;
            }
            acc += (table.log_step_weight(i, site.1) + next - here).exp();
            chosen = Some(i);
            if r < acc {
                break;
            }
        }
        let i = chosen.expect("every admissible site continues to the endpoint");
        let s = table.steps[i];
        site = (site.0 + s.u, site.1 + s.v);
        steps.push(i as u16);
    }
    LatticePath {
        start: table.start,
        steps,
    }
}

/// Draws `count` independent paths; path `k` depends only on `(seed, k)`.
pub fn sample(table: &SamplingTable, seed: u64, count: usize) -> PathEnsemble {
    let paths = (0..count as u64)
        .into_par_iter()
        .map(|k| sample_one(table, seed, k))
        .collect();
    PathEnsemble {
        steps: table.steps.clone(),
        start: table.start,
        end: table.end,
        seed,
        paths,
    }
}

/// Counts of sites (or first sites) hit in one column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PassageDistribution {
    pub column: i64,
    pub counts: BTreeMap<i64, u64>,
    /// Paths that jumped over the column, keyed by their first site beyond it.
    pub skipped: BTreeMap<(i64, i64), u64>,
    pub samples: usize,
}

impl PassageDistribution {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn skipped_total(&self) -> u64 {
        self.skipped.values().sum()
    }

    pub fn mean(&self) -> f64 {
        let total = self.total() as f64;
        self.counts
            .iter()
            .map(|(&y, &c)| y as f64 * c as f64)
            .sum::<f64>()
            / total
    }

    /// Counts normalized to a probability law over heights.
    pub fn normalized(&self) -> BTreeMap<i64, f64> {
        let total = self.total() as f64;
        self.counts
            .iter()
            .map(|(&y, &c)| (y, c as f64 / total))
            .collect()
    }
}

/// Per-column mean and variance of the path height.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightProfile {
    pub xs: Vec<i64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl PathEnsemble {
    fn check_column(&self, column: i64) -> Result<(), SamplerError> {
        if column < self.start.0 || column > self.end.0 {
            return Err(SamplerError::ColumnOutOfRange {
                column,
                first: self.start.0,
                last: self.end.0,
            });
        }
        Ok(())
    }

    /// Every visit to column `column`, including repeated heights reached by vertical steps.
    pub fn passage_histogram(&self, column: i64) -> Result<PassageDistribution, SamplerError> {
        self.check_column(column)?;
        let mut dist = PassageDistribution {
            column,
            samples: self.paths.len(),
            ..Default::default()
        };
        for path in &self.paths {
            let mut skipped = true;
            for (x, y) in path.sites(&self.steps) {
                if x == column {
                    *dist.counts.entry(y).or_default() += 1;
                    skipped = false;
                } else if x > column {
                    if skipped {
                        *dist.skipped.entry((x, y)).or_default() += 1;
                    }
                    break;
                }
            }
        }
        Ok(dist)
    }

    /// First site with abscissa `>= column`; jumps over the column go to `skipped`.
    pub fn first_passage_histogram(&self, column: i64) -> Result<PassageDistribution, SamplerError> {
        self.check_column(column)?;
        let mut dist = PassageDistribution {
            column,
            samples: self.paths.len(),
            ..Default::default()
        };
        for path in &self.paths {
            if let Some((x, y)) = path.sites(&self.steps).into_iter().find(|s| s.0 >= column) {
                if x == column {
                    *dist.counts.entry(y).or_default() += 1;
                } else {
                    *dist.skipped.entry((x, y)).or_default() += 1;
                }
            }
        }
        Ok(dist)
    }

    /// Mean and population variance of the per-column height. A column's
    /// height is the midpoint of the heights visited there; skipped columns
    /// interpolate linearly along the jumping step.
    pub fn mean_and_variance(&self) -> Result<HeightProfile, SamplerError> {
        if self.paths.is_empty() {
            return Err(SamplerError::EmptyEnsemble);
        }
        let width = (self.end.0 - self.start.0 + 1) as usize;
        let stats = self
            .paths
            .par_iter()
            .fold(
                || Moments::new(width),
                |mut acc, path| {
                    acc.push(&column_heights(path, &self.steps, self.start.0, width));
                    acc
                },
            )
            .reduce(|| Moments::new(width), Moments::merge);
        Ok(HeightProfile {
            xs: (0..width as i64).map(|i| self.start.0 + i).collect(),
            mean: stats.mean,
            variance: stats
                .m2
                .iter()
                .map(|m| m / stats.count as f64)
                .collect(),
        })
    }
}

/// Height of a path in each column `first .. first + width`.
pub fn column_heights(path: &LatticePath, steps: &[Step], first: i64, width: usize) -> Vec<f64> {
    let mut heights = vec![f64::NAN; width];
    let mut lo = path.start.1;
    let mut hi = path.start.1;
    let (mut x, mut y) = path.start;
    let mut put = |col: i64, h: f64| {
        let i = col - first;
        if i >= 0 && (i as usize) < width {
            heights[i as usize] = h;
        }
    };
    for &i in &path.steps {
        let s = steps[i as usize];
        let (nx, ny) = (x + s.u, y + s.v);
        if s.u == 0 {
            lo = lo.min(ny);
            hi = hi.max(ny);
        } else {
            put(x, 0.5 * (lo + hi) as f64);
            for c in x + 1..nx {
                let frac = (c - x) as f64 / s.u as f64;
                put(c, y as f64 + frac * s.v as f64);
            }
            lo = ny;
            hi = ny;
        }
        x = nx;
        y = ny;
    }
    put(x, 0.5 * (lo + hi) as f64);
    heights
}

#[derive(Debug, Clone)]
struct Moments {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(width: usize) -> Self {
        Moments {
            count: 0,
            mean: vec![0.0; width],
            m2: vec![0.0; width],
        }
    }

    fn push(&mut self, heights: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for (i, &h) in heights.iter().enumerate() {
            let delta = h - self.mean[i];
            self.mean[i] += delta / n;
            self.m2[i] += delta * (h - self.mean[i]);
        }
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.count == 0 {
            return b;
        }
        if b.count == 0 {
            return a;
        }
        let (na, nb) = (a.count as f64, b.count as f64);
        let n = na + nb;
        let mut out = Moments::new(a.mean.len());
        out.count = a.count + b.count;
        for i in 0..a.mean.len() {
            let delta = b.mean[i] - a.mean[i];
            out.mean[i] = a.mean[i] + delta * nb / n;
            out.m2[i] = a.m2[i] + b.m2[i] + delta * delta * na * nb / n;
        }
        out
    }
}

/// Exact path measure: forward and backward tables between two sites.
#[derive(Debug, Clone)]
pub struct PathMeasure {
    forward: Sweep<f64>,
    backward: SamplingTable,
    log_z: f64,
}

impl PathMeasure {
    pub fn new(
        model: &WalkModel,
        start: (i64, i64),
        end: (i64, i64),
        mask: &dyn SiteMask,
        q: f64,
    ) -> Result<Self, SamplerError> {
        let backward = build_table(model, start, end, mask, q)?;
        let forward = forward_sweep(
            model,
            start,
            end,
            mask,
            &LogRing,
            |i, y| backward.log_step_weight(i, y),
            Keep::All,
        );
        let log_z = backward.log_weight_to_go(start.0, start.1);
        Ok(PathMeasure {
            forward,
            backward,
            log_z,
        })
    }

    pub fn table(&self) -> &SamplingTable {
        &self.backward
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    fn log_forward(&self, x: i64, y: i64) -> f64 {
        self.forward
            .get(x, y)
            .copied()
            .unwrap_or(f64::NEG_INFINITY)
    }

    fn check_column(&self, column: i64) -> Result<(), SamplerError> {
        let (start, end) = (self.backward.start, self.backward.end);
        if column < start.0 || column > end.0 {
            return Err(SamplerError::ColumnOutOfRange {
                column,
                first: start.0,
                last: end.0,
            });
        }
        Ok(())
    }

    /// Probability that a path visits `(column, y)`, for every `y`.
    pub fn visit_law(&self, column: i64) -> Result<BTreeMap<i64, f64>, SamplerError> {
        self.check_column(column)?;
        let col = self.forward.column(column).expect("column in range");
        Ok(col
            .heights()
            .filter_map(|y| {
                let lp = self.log_forward(column, y) + self.backward.log_weight_to_go(column, y) - self.log_z;
                lp.is_finite().then(|| (y, lp.exp()))
            })
            .collect())
    }

    /// Law of the first site at abscissa `>= column`, split into sites on
    /// the column and sites beyond it (column skipped).
    pub fn first_passage_law(
        &self,
        column: i64,
    ) -> Result<(BTreeMap<i64, f64>, BTreeMap<(i64, i64), f64>), SamplerError> {
        self.check_column(column)?;
        let start = self.backward.start;
        let mut on: BTreeMap<i64, f64> = BTreeMap::new();
        let mut beyond: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        if column == start.0 {
            on.insert(start.1, 1.0);
            return Ok((on, beyond));
        }
        let max_u = self.backward.steps.iter().map(|s| s.u).max().unwrap_or(0);
        for px in (column - max_u).max(start.0)..column {
            let Some(col) = self.forward.column(px) else { continue };
            for py in col.heights() {
                let f = self.log_forward(px, py);
                if !f.is_finite() {
                    continue;
                }
                for (i, s) in self.backward.steps.iter().enumerate() {
                    let (nx, ny) = (px + s.u, py + s.v);
                    if nx < column {
                        continue;
                    }
                    let lp = f + self.backward.log_step_weight(i, py)
                        + self.backward.log_weight_to_go(nx, ny)
                        - self.log_z;
                    if !lp.is_finite() {
                        continue;
                    }
                    if nx == column {
                        *on.entry(ny).or_default() += lp.exp();
                    } else {
                        *beyond.entry((nx, ny)).or_default() += lp.exp();
                    }
                }
            }
        }
        Ok((on, beyond))
    }

    /// Law of the last site with abscissa `<= column` before the path moves right of it.
    fn last_passage_law(&self, column: i64) -> BTreeMap<i64, f64> {
        let mut out = BTreeMap::new();
        let end = self.backward.end;
        if column == end.0 {
            out.insert(end.1, 1.0);
            return out;
        }
        let Some(col) = self.forward.column(column) else {
            return out;
        };
        for y in col.heights() {
            let f = self.log_forward(column, y);
            if !f.is_finite() {
                continue;
            }
            let terms: Vec<f64> = self
                .backward
                .steps
                .iter()
                .enumerate()
                .filter(|(_, s)| s.u > 0)
                .map(|(i, s)| {
                    self.backward.log_step_weight(i, y)
                        + self.backward.log_weight_to_go(column + s.u, y + s.v)
                })
                .collect();
            let lp = f + log_sum_exp(&terms) - self.log_z;
            if lp.is_finite() {
                out.insert(y, lp.exp());
            }
        }
        out
    }

    /// Exact expectation of the per-column height used by
    /// [`PathEnsemble::mean_and_variance`].
    pub fn mean_heights(&self) -> Vec<f64> {
        let (start, end) = (self.backward.start, self.backward.end);
        let max_u = self.backward.steps.iter().map(|s| s.u).max().unwrap_or(0);
        (start.0..=end.0)
            .into_par_iter()
            .map(|c| {
                let (first, _) = self.first_passage_law(c).expect("column in range");
                let last = self.last_passage_law(c);
                let mut mean: f64 = first.iter().map(|(&y, &p)| 0.5 * y as f64 * p).sum::<f64>()
                    + last.iter().map(|(&y, &p)| 0.5 * y as f64 * p).sum::<f64>();
                // columns jumped over by a step are interpolated along it
                for px in (c - max_u + 1).max(start.0)..c {
                    let Some(col) = self.forward.column(px) else { continue };
                    for py in col.heights() {
                        let f = self.log_forward(px, py);
                        if !f.is_finite() {
                            continue;
                        }
                        for (i, s) in self.backward.steps.iter().enumerate() {
                            if px + s.u <= c {
                                continue;
                            }
                            let lp = f + self.backward.log_step_weight(i, py)
                                + self.backward.log_weight_to_go(px + s.u, py + s.v)
                                - self.log_z;
                            if lp.is_finite() {
                                let frac = (c - px) as f64 / s.u as f64;
                                mean += lp.exp() * (py as f64 + frac * s.v as f64);
                            }
                        }
                    }
                }
                mean
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{AboveDiagonal, Unconstrained};

    #[test]
    fn table_counts_paths() {
        let model = WalkModel::unit_steps();
        let table = build_table(&model, (0, 0), (2, 2), &Unconstrained, 1.0).unwrap();
        assert!((table.log_weight_to_go(0, 0) - 6f64.ln()).abs() < 1e-12);
        assert!(table.consistency_error() < 1e-12);
        let ballot = build_table(&model, (0, 0), (2, 2), &AboveDiagonal, 1.0).unwrap();
        assert!((ballot.log_weight_to_go(0, 0) - 2f64.ln()).abs() < 1e-12);
        let trivial = build_table(&model, (1, 1), (1, 1), &Unconstrained, 1.0).unwrap();
        assert_eq!(trivial.log_weight_to_go(1, 1), 0.0);
        let ens = sample(&trivial, 3, 4);
        assert!(ens.paths.iter().all(|p| p.steps.is_empty()));
    }

    #[test]
    fn unreachable_endpoints() {
        let schroder = WalkModel::schroder(1.0).unwrap();
        assert!(matches!(
            build_table(&schroder, (0, 0), (3, 0), &Unconstrained, 1.0),
            Err(SamplerError::UnreachableEndpoint { .. })
        ));
    }

    #[test]
    fn deterministic_per_index() {
        let model = WalkModel::unit_steps();
        let table = build_table(&model, (0, 0), (6, 6), &Unconstrained, 1.0).unwrap();
        let a = sample(&table, 11, 50);
        let b = sample(&table, 11, 50);
        assert_eq!(a.paths, b.paths);
        assert_eq!(sample_one(&table, 11, 17), a.paths[17]);
        let c = sample(&table, 12, 50);
        assert_ne!(a.paths, c.paths);
    }

    #[test]
    fn heights_with_vertical_and_long_steps() {
        let unit = WalkModel::unit_steps();
        // R U U R: column 1 visits heights 0..2
        let path = LatticePath {
            start: (0, 0),
            steps: vec![0, 1, 1, 0],
        };
        assert_eq!(column_heights(&path, unit.steps(), 0, 3), vec![0.0, 1.0, 2.0]);
        let schroder = WalkModel::schroder(1.0).unwrap();
        // (1,1) then (2,0): column 2 is skipped at height 1
        let path = LatticePath {
            start: (0, 0),
            steps: vec![0, 2],
        };
        assert_eq!(
            column_heights(&path, schroder.steps(), 0, 4),
            vec![0.0, 1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn single_sample_has_zero_variance() {
        let model = WalkModel::unit_steps();
        let table = build_table(&model, (0, 0), (5, 3), &Unconstrained, 1.0).unwrap();
        let ens = sample(&table, 1, 1);
        let profile = ens.mean_and_variance().unwrap();
        assert!(profile.variance.iter().all(|&v| v == 0.0));
        let empty = PathEnsemble {
            paths: vec![],
            ..ens
        };
        assert_eq!(empty.mean_and_variance().unwrap_err(), SamplerError::EmptyEnsemble);
    }

    #[test]
    fn exact_laws_are_normalized() {
        let model = WalkModel::schroder(0.5).unwrap();
        let measure = PathMeasure::new(&model, (0, 0), (12, 2), &Unconstrained, 1.1).unwrap();
        for c in 0..=12 {
            let (on, beyond) = measure.first_passage_law(c).unwrap();
            let total: f64 = on.values().sum::<f64>() + beyond.values().sum::<f64>();
            assert!((total - 1.0).abs() < 1e-12, "column {c}: {total}");
        }
        let visits: f64 = measure.visit_law(6).unwrap().values().sum();
        assert!(visits <= 1.0 + 1e-12);
    }

    #[test]
    fn column_range_errors() {
        let model = WalkModel::unit_steps();
        let table = build_table(&model, (0, 0), (3, 3), &Unconstrained, 1.0).unwrap();
        let ens = sample(&table, 1, 3);
        assert!(matches!(
            ens.passage_histogram(4),
            Err(SamplerError::ColumnOutOfRange { .. })
        ));
        let first = ens.first_passage_histogram(0).unwrap();
        assert_eq!(first.counts.get(&0), Some(&3));
    }
}
