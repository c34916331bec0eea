//! Families of optimal trajectories from moving start points, their
//! envelope, and the most likely lattice entry point into a domain.

use rayon::prelude::*;
use thiserror::Error;

use crate::domain::{Domain, DomainError, Side};
use crate::lattice::{column_range, forward_sweep, log_sum_exp, Keep, LogRing, PredicateMask, SiteMask};
use crate::variational::{
    bisect_root, constrained_optimum, Contact, Geodesic, Piece, Trajectory, VariationalError, FLAT,
};
use crate::walk::WalkModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvelopeError {
    #[error("an envelope needs at least 3 tangent curves, got {0}")]
    TooFewLines(usize),
    #[error("tangent curves {0} and {1} are parallel")]
    ParallelConsecutiveLines(usize, usize),
    #[error("tangent curves {0} and {1} do not cross between their contact points")]
    NoCrossing(usize, usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntryError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("no admissible path from ({}, {}) to ({}, {}) enters the domain", start.0, start.1, end.0, end.1)]
    UnreachableEndpoint { start: (i64, i64), end: (i64, i64) },
}

/// One member of a tangent family.
#[derive(Debug, Clone)]
pub struct TangentRecord {
    pub start: (f64, f64),
    pub trajectory: Trajectory,
    /// First point where the trajectory meets the boundary.
    pub contact: Option<Contact>,
    /// Right slope at `start`.
    pub entry_slope: f64,
}

#[derive(Debug, Clone)]
pub struct FamilyFailure {
    pub start: (f64, f64),
    pub error: VariationalError,
}

#[derive(Debug, Clone)]
pub struct TangentFamily {
    pub lambda: f64,
    pub end: (f64, f64),
    /// Successful records, in the order the starts were given.
    pub records: Vec<TangentRecord>,
    pub failures: Vec<FamilyFailure>,
}

/// A straight line, or a free arc of the area-weighted problem.
#[derive(Debug, Clone)]
pub enum TangentCurve {
    Line { point: (f64, f64), slope: f64 },
    Arc { path: Geodesic, contact: f64 },
}

impl TangentCurve {
    pub fn height(&self, x: f64) -> Option<f64> {
        match self {
            TangentCurve::Line { point, slope } => Some(point.1 + slope * (x - point.0)),
            TangentCurve::Arc { path, .. } => path.height(x),
        }
    }
}

impl TangentRecord {
    /// The entry curve, extended past the contact point.
    pub fn tangent(&self) -> Option<TangentCurve> {
        let contact = self.contact.as_ref()?;
        if self.trajectory.lambda.abs() < FLAT {
            return Some(TangentCurve::Line {
                point: self.start,
                slope: self.entry_slope,
            });
        }
        match self.trajectory.pieces.first()? {
            Piece::Free { path, .. } => Some(TangentCurve::Arc {
                path: path.clone(),
                contact: contact.x,
            }),
            Piece::Wall { .. } => None,
        }
    }
}

impl TangentFamily {
    pub fn tangents(&self) -> Vec<TangentCurve> {
        self.records.iter().filter_map(TangentRecord::tangent).collect()
    }

    pub fn envelope(&self) -> Result<Vec<(f64, f64)>, EnvelopeError> {
        envelope(&self.tangents())
    }
}

/// Optimal trajectory from each start to the common `end`, computed in parallel.
pub fn tangent_family(
    model: &WalkModel,
    lambda: f64,
    domain: &Domain,
    starts: &[(f64, f64)],
    end: (f64, f64),
    resolution: usize,
) -> TangentFamily {
    let outcomes: Vec<_> = starts
        .par_iter()
        .map(|&start| {
            constrained_optimum(model, lambda, domain, start, end, resolution).map(|trajectory| {
                let contact = trajectory.first_contact().cloned();
                let entry_slope = trajectory.slope(start.0, Side::Right).unwrap_or(f64::NAN);
                TangentRecord {
                    start,
                    trajectory,
                    contact,
                    entry_slope,
                }
            })
        })
        .collect();
    let mut family = TangentFamily {
        lambda,
        end,
        records: Vec::new(),
        failures: Vec::new(),
    };
    for (outcome, &start) in outcomes.into_iter().zip(starts) {
        match outcome {
            Ok(record) => family.records.push(record),
            Err(error) => family.failures.push(FamilyFailure { start, error }),
        }
    }
    family
}

/// Intersections of consecutive tangent curves.
pub fn envelope(curves: &[TangentCurve]) -> Result<Vec<(f64, f64)>, EnvelopeError> {
    if curves.len() < 3 {
        return Err(EnvelopeError::TooFewLines(curves.len()));
    }
    curves
        .windows(2)
        .enumerate()
        .map(|(i, pair)| match intersect(&pair[0], &pair[1]) {
            Some(Ok(point)) => Ok(point),
            Some(Err(Parallel)) => Err(EnvelopeError::ParallelConsecutiveLines(i, i + 1)),
            None => Err(EnvelopeError::NoCrossing(i, i + 1)),
        })
        .collect()
}

struct Parallel;

fn intersect(a: &TangentCurve, b: &TangentCurve) -> Option<Result<(f64, f64), Parallel>> {
    if let (
        TangentCurve::Line { point: p, slope: s },
        TangentCurve::Line { point: q, slope: t },
    ) = (a, b)
    {
        if (s - t).abs() <= 1e-12 * (1.0 + s.abs().max(t.abs())) {
            return Some(Err(Parallel));
        }
        let x = (q.1 - p.1 + s * p.0 - t * q.0) / (s - t);
        return Some(Ok((x, p.1 + s * (x - p.0))));
    }
    let contact = |c: &TangentCurve| match c {
        TangentCurve::Line { point, .. } => point.0,
        TangentCurve::Arc { contact, .. } => *contact,
    };
    let (ca, cb) = (contact(a), contact(b));
    let diff = |x: f64| Some(a.height(x)? - b.height(x)?);
    let (mut lo, mut hi) = (ca.min(cb), ca.max(cb));
    let mut reach = (hi - lo).max(1e-6);
    // widen the bracket until the curves change order
    for _ in 0..8 {
        if let (Some(dl), Some(dh)) = (diff(lo), diff(hi)) {
            if dl == 0.0 {
                return Some(Ok((lo, a.height(lo)?)));
            }
            if dl.signum() != dh.signum() {
                let x = bisect_root(&diff, lo, hi, dl)?;
                return Some(Ok((x, a.height(x)?)));
            }
        }
        lo -= reach;
        hi += reach;
        reach *= 2.0;
    }
    None
}

/// The entry site of maximal probability, with every site sharing that weight.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryPoint {
    pub site: (i64, i64),
    pub log_weight: f64,
    /// Sites tied with `site` to relative precision 1e-12, `site` included,
    /// by increasing abscissa.
    pub ties: Vec<(i64, i64)>,
    /// Log weight of every possible entry site.
    pub law: Vec<((i64, i64), f64)>,
}

impl EntryPoint {
    pub fn is_tie(&self) -> bool {
        self.ties.len() > 1
    }
}

/// Most likely first admissible site of a path from `start`, lying outside
/// the domain at scale `n`, to `end` inside it.
///
/// Site `e` is weighted by the paths that stay outside until `e` and inside
/// from `e` on.
pub fn most_likely_entry(
    model: &WalkModel,
    start: (i64, i64),
    domain: &Domain,
    end: (i64, i64),
    n: i64,
) -> Result<EntryPoint, EntryError> {
    let mask = domain.lattice_mask(n, &[end])?;
    let unreachable = EntryError::UnreachableEndpoint { start, end };
    let log_w: Vec<f64> = model.weights().iter().map(|w| w.ln()).collect();

    let inside = |x: i64, y: i64| mask.admits(x, y);
    let reflected = PredicateMask(|x: i64, y: i64| inside(-x, -y));
    let to_go = forward_sweep(
        model,
        (-end.0, -end.1),
        (-start.0, -start.1),
        &reflected,
        &LogRing,
        |i, _| log_w[i],
        Keep::All,
    );
    let remaining = |x: i64, y: i64| to_go.get(-x, -y).copied().unwrap_or(f64::NEG_INFINITY);

    if inside(start.0, start.1) {
        let g = remaining(start.0, start.1);
        if !g.is_finite() {
            return Err(unreachable);
        }
        return Ok(EntryPoint {
            site: start,
            log_weight: g,
            ties: vec![start],
            law: vec![(start, g)],
        });
    }

    let outside = PredicateMask(|x: i64, y: i64| !inside(x, y));
    let before = forward_sweep(model, start, end, &outside, &LogRing, |i, _| log_w[i], Keep::All);
    let steps = model.steps();
    let mut law = Vec::new();
    for column in &before.columns {
        let x = column.x;
        let Some((lo, hi)) = column_range(model, start, end, &mask, x) else {
            continue;
        };
        for y in lo..=hi {
            if !inside(x, y) {
                continue;
            }
            let g = remaining(x, y);
            if !g.is_finite() {
                continue;
            }
            let terms: Vec<f64> = steps
                .iter()
                .zip(&log_w)
                .filter_map(|(s, lw)| before.get(x - s.u, y - s.v).map(|f| f + lw))
                .collect();
            let f = log_sum_exp(&terms);
            if f.is_finite() {
                law.push(((x, y), f + g));
            }
        }
    }
    let best = law.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return Err(unreachable);
    }
    let tol = 1e-12 * best.abs().max(1.0);
    let mut ties: Vec<(i64, i64)> = law.iter().filter(|e| best - e.1 <= tol).map(|e| e.0).collect();
    ties.sort();
    Ok(EntryPoint {
        site: ties[0],
        log_weight: best,
        ties,
        law,
    })
}
