//! The action functional `∫ L(h') dx + λ ∫ h dx` and its maximizers, free or
//! confined to a [`Domain`].

mod construct;
mod geodesic;
mod taut;

use rayon::prelude::*;
use thiserror::Error;

use crate::domain::{Domain, Side, Wall};
use crate::lagrangean::{closed_rate, derivatives, Kernel, LagrangeanError};
use crate::walk::WalkModel;

pub use geodesic::{Geodesic, Geodesics};
pub(crate) use geodesic::FLAT;

pub const DEFAULT_RESOLUTION: usize = 2048;

/// Heights closer than this to a wall count as touching it.
const CONTACT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VariationalError {
    #[error("slope {slope} at x={x} is outside the support [{t_min}, {t_max}]")]
    SlopeOutOfSupport {
        x: f64,
        slope: f64,
        t_min: f64,
        t_max: f64,
    },
    #[error("no free trajectory joins ({}, {}) to ({}, {})", .start.0, .start.1, .end.0, .end.1)]
    NoAdmissibleGeodesic { start: (f64, f64), end: (f64, f64) },
    #[error("no admissible path: {0}")]
    NoAdmissiblePath(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Lagrangean(#[from] LagrangeanError),
}

/// A stretch of a trajectory over `[from, to]`.
#[derive(Debug, Clone)]
pub enum Piece {
    Free { from: f64, to: f64, path: Geodesic },
    Wall { from: f64, to: f64, wall: Wall },
}

impl Piece {
    pub fn from(&self) -> f64 {
        match self {
            Piece::Free { from, .. } | Piece::Wall { from, .. } => *from,
        }
    }

    pub fn to(&self) -> f64 {
        match self {
            Piece::Free { to, .. } | Piece::Wall { to, .. } => *to,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactKind {
    /// A free arc lands on a wall and the trajectory follows it.
    Touchdown,
    /// The trajectory leaves a wall along a free arc.
    Liftoff,
    /// Two free arcs meet on a wall.
    Touch,
}

impl ContactKind {
    pub fn name(self) -> &'static str {
        match self {
            ContactKind::Touchdown => "touchdown",
            ContactKind::Liftoff => "liftoff",
            ContactKind::Touch => "touch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub x: f64,
    pub y: f64,
    pub wall: Wall,
    pub kind: ContactKind,
    /// The wall has a slope discontinuity here.
    pub corner: bool,
}

/// A continuous trajectory from `start` to `end` made of free arcs and wall
/// arcs, sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub lambda: f64,
    pub start: (f64, f64),
    pub end: (f64, f64),
    pub domain: Domain,
    pub pieces: Vec<Piece>,
    pub xs: Vec<f64>,
    pub hs: Vec<f64>,
    pub on_wall: Vec<Option<Wall>>,
    pub contacts: Vec<Contact>,
}

fn touching(domain: &Domain, x: f64, y: f64) -> Option<Wall> {
    let tol = CONTACT_TOL * (1.0 + y.abs());
    if (y - domain.lower_at(x)).abs() <= tol {
        Some(Wall::Lower)
    } else if (y - domain.upper_at(x)).abs() <= tol {
        Some(Wall::Upper)
    } else {
        None
    }
}

fn grid(from: f64, to: f64, resolution: usize) -> Vec<f64> {
    let step = (to - from) / resolution as f64;
    (0..=resolution)
        .map(|i| if i == resolution { to } else { from + i as f64 * step })
        .collect()
}

impl Trajectory {
    /// Assembles a trajectory from consecutive pieces covering `[start.0, end.0]`.
    pub fn from_pieces(
        lambda: f64,
        domain: Domain,
        start: (f64, f64),
        end: (f64, f64),
        pieces: Vec<Piece>,
        resolution: usize,
    ) -> Result<Self, VariationalError> {
        if pieces.is_empty() || resolution == 0 {
            return Err(VariationalError::BadInput(
                "a trajectory needs at least one piece and one grid cell".into(),
            ));
        }
        let span = end.0 - start.0;
        let gap_tol = 1e-9 * (1.0 + span.abs());
        let first = pieces[0].from();
        let last = pieces[pieces.len() - 1].to();
        if (first - start.0).abs() > gap_tol || (last - end.0).abs() > gap_tol {
            return Err(VariationalError::BadInput(
                "pieces do not span the trajectory".into(),
            ));
        }
        for pair in pieces.windows(2) {
            if (pair[0].to() - pair[1].from()).abs() > gap_tol {
                return Err(VariationalError::BadInput(format!(
                    "gap between pieces at x={}",
                    pair[0].to()
                )));
            }
        }
        let mut trajectory = Trajectory {
            lambda,
            start,
            end,
            domain,
            pieces,
            xs: grid(start.0, end.0, resolution),
            hs: Vec::new(),
            on_wall: Vec::new(),
            contacts: Vec::new(),
        };
        trajectory.hs = trajectory
            .xs
            .iter()
            .map(|&x| trajectory.height(x).unwrap_or(f64::NAN))
            .collect();
        trajectory.on_wall = trajectory
            .xs
            .iter()
            .zip(&trajectory.hs)
            .map(|(&x, &h)| touching(&trajectory.domain, x, h))
            .collect();
        trajectory.contacts = trajectory.find_contacts();
        Ok(trajectory)
    }

    fn find_contacts(&self) -> Vec<Contact> {
        let domain = &self.domain;
        let mut contacts = Vec::new();
        let mut push = |x: f64, wall: Wall, kind: ContactKind| {
            contacts.push(Contact {
                x,
                y: domain.wall_at(wall, x),
                wall,
                kind,
                corner: domain.is_corner(wall, x),
            });
        };
        for (i, piece) in self.pieces.iter().enumerate() {
            match piece {
                Piece::Wall { from, to, wall } => {
                    push(*from, *wall, ContactKind::Touchdown);
                    push(*to, *wall, ContactKind::Liftoff);
                }
                Piece::Free { to, path, .. } => {
                    if let Some(Piece::Free { .. }) = self.pieces.get(i + 1) {
                        if let Some(y) = path.height(*to) {
                            if let Some(wall) = touching(domain, *to, y) {
                                push(*to, wall, ContactKind::Touch);
                            }
                        }
                    }
                }
            }
        }
        contacts
    }

    pub fn resolution(&self) -> usize {
        self.xs.len() - 1
    }

    fn piece_at(&self, x: f64, side: Side) -> Option<&Piece> {
        let inside = |p: &&Piece| match side {
            Side::Left => p.from() < x && x <= p.to(),
            Side::Right => p.from() <= x && x < p.to(),
        };
        self.pieces.iter().find(inside).or_else(|| match side {
            Side::Left => self.pieces.first(),
            Side::Right => self.pieces.last(),
        })
    }

    pub fn height(&self, x: f64) -> Option<f64> {
        match self.piece_at(x, Side::Right)? {
            Piece::Free { path, .. } => path.height(x),
            Piece::Wall { wall, .. } => Some(self.domain.wall_at(*wall, x)),
        }
    }

    /// One-sided slope at `x`.
    pub fn slope(&self, x: f64, side: Side) -> Option<f64> {
        match self.piece_at(x, side)? {
            Piece::Free { path, .. } => path.slope(x),
            Piece::Wall { wall, .. } => self.domain.wall_slope(*wall, x, side),
        }
    }

    pub fn first_contact(&self) -> Option<&Contact> {
        self.contacts.first()
    }

    /// The free arc arriving at the first contact, if the trajectory starts free.
    pub fn entry_arc(&self) -> Option<&Geodesic> {
        match self.pieces.first()? {
            Piece::Free { path, .. } if self.pieces.len() > 1 || !self.contacts.is_empty() => {
                Some(path)
            }
            _ => None,
        }
    }

    /// Largest distance by which a grid node leaves the domain.
    pub fn max_violation(&self) -> f64 {
        self.xs
            .iter()
            .zip(&self.hs)
            .map(|(&x, &h)| {
                (self.domain.lower_at(x) - h)
                    .max(h - self.domain.upper_at(x))
                    .max(0.0)
            })
            .fold(0.0, f64::max)
    }

    pub fn action(&self, model: &WalkModel) -> Result<f64, VariationalError> {
        action(model, &self.xs, &self.hs, self.lambda)
    }
}

/// `Σ L(Δh/Δx)·Δx + λ·(trapezoid rule for ∫h)` over a sampled profile.
pub fn action(model: &WalkModel, xs: &[f64], hs: &[f64], lambda: f64) -> Result<f64, VariationalError> {
    if xs.len() != hs.len() {
        return Err(VariationalError::BadInput(format!(
            "{} abscissae but {} heights",
            xs.len(),
            hs.len()
        )));
    }
    if xs.len() < 2 {
        return Ok(0.0);
    }
    let kernel = Kernel::new(model);
    let (t_min, t_max) = kernel.support();
    let cells: Result<Vec<f64>, VariationalError> = (0..xs.len() - 1)
        .into_par_iter()
        .map(|i| {
            let dx = xs[i + 1] - xs[i];
            if !(dx > 0.0) {
                return Err(VariationalError::BadInput(format!(
                    "abscissae must increase, x[{i}]={} x[{}]={}",
                    xs[i],
                    i + 1,
                    xs[i + 1]
                )));
            }
            let slope = (hs[i + 1] - hs[i]) / dx;
            let rate = closed_rate(&kernel, slope).map_err(|_| VariationalError::SlopeOutOfSupport {
                x: xs[i],
                slope,
                t_min,
                t_max,
            })?;
            Ok(rate * dx + lambda * 0.5 * (hs[i] + hs[i + 1]) * dx)
        })
        .collect();
    Ok(cells?.iter().sum())
}

/// The unconstrained maximizer between two points.
pub fn free_geodesic(
    model: &WalkModel,
    lambda: f64,
    start: (f64, f64),
    end: (f64, f64),
    resolution: usize,
) -> Result<Trajectory, VariationalError> {
    let flow = Geodesics::new(model, lambda);
    let path = flow.shoot(start, end)?;
    let piece = Piece::Free {
        from: start.0,
        to: end.0,
        path,
    };
    Trajectory::from_pieces(lambda, Domain::free(), start, end, vec![piece], resolution)
}

fn check_endpoints(
    domain: &Domain,
    start: (f64, f64),
    end: (f64, f64),
    resolution: usize,
) -> Result<(), VariationalError> {
    if resolution < 2 {
        return Err(VariationalError::BadInput(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    if !(end.0 > start.0) || !start.1.is_finite() || !end.1.is_finite() {
        return Err(VariationalError::BadInput(format!(
            "need start.x < end.x, got {start:?} and {end:?}"
        )));
    }
    for (name, p) in [("start", start), ("end", end)] {
        if !domain.contains(p.0, p.1, CONTACT_TOL) {
            return Err(VariationalError::BadInput(format!(
                "{name} ({}, {}) lies outside the domain",
                p.0, p.1
            )));
        }
    }
    Ok(())
}

/// Rejects wall arcs that climb or fall faster than any admissible slope.
fn check_wall_slopes(
    flow: &Geodesics,
    domain: &Domain,
    pieces: &[Piece],
    resolution: usize,
) -> Result<(), VariationalError> {
    let (t_min, t_max) = flow.support();
    for piece in pieces {
        let Piece::Wall { from, to, wall } = *piece else {
            continue;
        };
        let cells = resolution.max(1);
        for i in 0..=cells {
            let x = from + (to - from) * i as f64 / cells as f64;
            for side in [Side::Left, Side::Right] {
                if (side == Side::Left && i == 0) || (side == Side::Right && i == cells) {
                    continue;
                }
                let Some(slope) = domain.wall_slope(wall, x, side) else {
                    continue;
                };
                let tol = 1e-9 * (1.0 + slope.abs());
                if slope < t_min - tol || slope > t_max + tol {
                    return Err(VariationalError::NoAdmissiblePath(format!(
                        "following the {} wall at x={x} needs slope {slope} outside [{t_min}, {t_max}]",
                        wall.name()
                    )));
                }
            }
        }
    }
    Ok(())
}

/// The maximizer among trajectories inside `domain`: a taut string for
/// `λ = 0`, free arcs alternating with wall arcs otherwise.
pub fn constrained_optimum(
    model: &WalkModel,
    lambda: f64,
    domain: &Domain,
    start: (f64, f64),
    end: (f64, f64),
    resolution: usize,
) -> Result<Trajectory, VariationalError> {
    check_endpoints(domain, start, end, resolution)?;
    let flow = Geodesics::new(model, lambda);
    let pieces = if flow.is_flat() {
        taut::taut_pieces(&flow, domain, start, end, resolution)?
    } else {
        construct::construct_pieces(&flow, domain, start, end, resolution)?
    };
    check_wall_slopes(&flow, domain, &pieces, resolution)?;
    Trajectory::from_pieces(lambda, domain.clone(), start, end, pieces, resolution)
}

/// Left-to-right construction for any `λ`, including `λ = 0`.
pub fn constructive_optimum(
    model: &WalkModel,
    lambda: f64,
    domain: &Domain,
    start: (f64, f64),
    end: (f64, f64),
    resolution: usize,
) -> Result<Trajectory, VariationalError> {
    check_endpoints(domain, start, end, resolution)?;
    let flow = Geodesics::new(model, lambda);
    let pieces = construct::construct_pieces(&flow, domain, start, end, resolution)?;
    check_wall_slopes(&flow, domain, &pieces, resolution)?;
    Trajectory::from_pieces(lambda, domain.clone(), start, end, pieces, resolution)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangencyStatus {
    Pass,
    Fail,
    /// Corner contact, or no free arc on the relevant side.
    Inapplicable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangencyCheck {
    pub contact: Contact,
    pub free_slope: Option<f64>,
    pub wall_slope: Option<f64>,
    pub residual: f64,
    pub status: TangencyStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangencyReport {
    pub tol: f64,
    pub checks: Vec<TangencyCheck>,
}

impl TangencyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != TangencyStatus::Fail)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.status != TangencyStatus::Inapplicable)
            .map(|c| c.residual)
            .fold(0.0, f64::max)
    }
}

/// Checks that free arcs meet the walls with matching slopes.
pub fn verify_tangency(trajectory: &Trajectory, domain: &Domain, tol: f64) -> TangencyReport {
    let edge = 1e-12 * (1.0 + (trajectory.end.0 - trajectory.start.0).abs());
    let checks = trajectory
        .contacts
        .iter()
        .map(|&contact| {
            let x = contact.x;
            let corner = contact.corner || domain.is_corner(contact.wall, x);
            let wall_slope = domain
                .wall_slope(contact.wall, x, Side::Right)
                .or_else(|| domain.wall_slope(contact.wall, x, Side::Left));
            let left = trajectory.slope(x, Side::Left);
            let right = trajectory.slope(x, Side::Right);
            let (free_slope, residual) = match (contact.kind, wall_slope) {
                (_, None) => (None, f64::NAN),
                (ContactKind::Touchdown, Some(w)) if x > trajectory.start.0 + edge => {
                    (left, left.map_or(f64::NAN, |s| (s - w).abs()))
                }
                (ContactKind::Liftoff, Some(w)) if x < trajectory.end.0 - edge => {
                    (right, right.map_or(f64::NAN, |s| (s - w).abs()))
                }
                (ContactKind::Touch, Some(w)) => match (left, right) {
                    (Some(l), Some(r)) => {
                        let worst = if (l - w).abs() >= (r - w).abs() { l } else { r };
                        (Some(worst), (l - w).abs().max((r - w).abs()))
                    }
                    _ => (None, f64::NAN),
                },
                _ => (None, f64::NAN),
            };
            let status = if corner || free_slope.is_none() || residual.is_nan() {
                TangencyStatus::Inapplicable
            } else if residual <= tol {
                TangencyStatus::Pass
            } else {
                TangencyStatus::Fail
            };
            TangencyCheck {
                contact,
                free_slope,
                wall_slope,
                residual,
                status,
            }
        })
        .collect();
    TangencyReport { tol, checks }
}

/// Root of `f` between `a` and `b`, given `f(a) = fa` and a sign change.
pub(crate) fn bisect_root(f: &impl Fn(f64) -> Option<f64>, mut a: f64, mut b: f64, mut fa: f64) -> Option<f64> {
    if fa == 0.0 {
        return Some(a);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a.min(b) || m >= a.max(b) {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Default tangency tolerance for a grid: `4/resolution`.
pub fn tangency_tolerance(resolution: usize) -> f64 {
    4.0 / resolution as f64
}

/// Largest `|d/dx L'(h') − λ|` over grid nodes interior to free arcs,
/// by central differences.
pub fn euler_lagrange_residual(model: &WalkModel, trajectory: &Trajectory) -> Result<f64, VariationalError> {
    let xs = &trajectory.xs;
    let step = xs[1] - xs[0];
    let mut worst = 0.0f64;
    for piece in &trajectory.pieces {
        let Piece::Free { from, to, path } = piece else {
            continue;
        };
        let inner: Vec<f64> = xs
            .iter()
            .copied()
            .filter(|&x| x - step >= *from - 1e-12 && x + step <= *to + 1e-12)
            .collect();
        let residuals: Result<Vec<f64>, VariationalError> = inner
            .par_iter()
            .map(|&x| {
                let lp = |p: f64| -> Result<f64, VariationalError> {
                    let slope = path.slope(p).ok_or(VariationalError::NoAdmissiblePath(format!(
                        "free arc undefined at x={p}"
                    )))?;
                    Ok(derivatives(model, slope)?.0)
                };
                let d = (lp(x + step)? - lp(x - step)?) / (2.0 * step);
                Ok((d - trajectory.lambda).abs())
            })
            .collect();
        worst = residuals?.into_iter().fold(worst, f64::max);
    }
    Ok(worst)
}
