//! Column-sweep dynamic programming over lattice sites, generic over the
//! value semiring, plus site masks.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::exact::QuadraticSurd;
use crate::walk::WalkModel;

/// A set of admissible lattice sites.
pub trait SiteMask: Sync {
    /// Inclusive admissible `y` interval of column `x`, or `None` when the
    /// whole column is excluded. May be wider than the admissible set.
    fn column_bounds(&self, x: i64) -> Option<(i64, i64)>;

    fn admits(&self, x: i64, y: i64) -> bool {
        matches!(self.column_bounds(x), Some((lo, hi)) if lo <= y && y <= hi)
    }
}

/// Every site is admissible.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unconstrained;

impl SiteMask for Unconstrained {
    fn column_bounds(&self, _x: i64) -> Option<(i64, i64)> {
        Some((i64::MIN, i64::MAX))
    }
}

/// Mask given by an arbitrary predicate.
pub struct PredicateMask<F>(pub F);

impl<F: Fn(i64, i64) -> bool + Sync> SiteMask for PredicateMask<F> {
    fn column_bounds(&self, _x: i64) -> Option<(i64, i64)> {
        Some((i64::MIN, i64::MAX))
    }

    fn admits(&self, x: i64, y: i64) -> bool {
        (self.0)(x, y)
    }
}

/// Sites reachable from the origin and sitting above or on the diagonal `y = x`.
#[derive(Debug, Clone, Copy, Default)]
pub struct AboveDiagonal;

impl SiteMask for AboveDiagonal {
    fn column_bounds(&self, x: i64) -> Option<(i64, i64)> {
        Some((x, i64::MAX))
    }
}

pub trait Semiring {
    type Elem: Clone;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, e: &Self::Elem) -> bool;
    fn sum(&self, terms: &[Self::Elem]) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
}

/// Reachability.
pub struct BoolRing;

impl Semiring for BoolRing {
    type Elem = bool;
    fn zero(&self) -> bool {
        false
    }
    fn one(&self) -> bool {
        true
    }
    fn is_zero(&self, e: &bool) -> bool {
        !e
    }
    fn sum(&self, terms: &[bool]) -> bool {
        terms.iter().any(|&t| t)
    }
    fn mul(&self, a: &bool, b: &bool) -> bool {
        *a && *b
    }
}

/// Natural logs of nonnegative reals, summed by log-sum-exp.
pub struct LogRing;

pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

impl Semiring for LogRing {
    type Elem = f64;
    fn zero(&self) -> f64 {
        f64::NEG_INFINITY
    }
    fn one(&self) -> f64 {
        0.0
    }
    fn is_zero(&self, e: &f64) -> bool {
        *e == f64::NEG_INFINITY
    }
    fn sum(&self, terms: &[f64]) -> f64 {
        log_sum_exp(terms)
    }
    fn mul(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }
}

pub struct RationalRing;

impl Semiring for RationalRing {
    type Elem = BigRational;
    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn is_zero(&self, e: &BigRational) -> bool {
        e.is_zero()
    }
    fn sum(&self, terms: &[BigRational]) -> BigRational {
        terms.iter().fold(BigRational::zero(), |acc, t| acc + t)
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
}

/// Numbers `a + b·√r` for a fixed radicand `r`.
pub struct SurdRing {
    pub radicand: BigRational,
}

impl Semiring for SurdRing {
    type Elem = QuadraticSurd;
    fn zero(&self) -> QuadraticSurd {
        QuadraticSurd::from_rational(BigRational::zero(), self.radicand.clone())
    }
    fn one(&self) -> QuadraticSurd {
        QuadraticSurd::from_rational(BigRational::one(), self.radicand.clone())
    }
    fn is_zero(&self, e: &QuadraticSurd) -> bool {
        e.rational.is_zero() && e.coefficient.is_zero()
    }
    fn sum(&self, terms: &[QuadraticSurd]) -> QuadraticSurd {
        let mut acc = self.zero();
        for t in terms {
            acc.rational += &t.rational;
            acc.coefficient += &t.coefficient;
        }
        acc
    }
    fn mul(&self, a: &QuadraticSurd, b: &QuadraticSurd) -> QuadraticSurd {
        QuadraticSurd {
            rational: &a.rational * &b.rational
                + &a.coefficient * &b.coefficient * &self.radicand,
            coefficient: &a.rational * &b.coefficient + &a.coefficient * &b.rational,
            radicand: self.radicand.clone(),
        }
    }
}

/// Values of one lattice column, indexed from `lo`.
#[derive(Debug, Clone)]
pub struct Column<E> {
    pub x: i64,
    pub lo: i64,
    pub values: Vec<E>,
}

impl<E> Column<E> {
    pub fn empty(x: i64) -> Self {
        Column {
            x,
            lo: 0,
            values: Vec::new(),
        }
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn get(&self, y: i64) -> Option<&E> {
        if y < self.lo {
            return None;
        }
        self.values.get((y - self.lo) as usize)
    }

    pub fn heights(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.values.len() as i64).map(move |i| self.lo + i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    /// Retain only the columns still needed by the recursion.
    Window,
    /// Retain every column.
    All,
}

#[derive(Debug, Clone)]
pub struct Sweep<E> {
    pub start: (i64, i64),
    pub target: (i64, i64),
    pub target_value: E,
    /// Columns `start.0 ..= target.0`; only populated with [`Keep::All`].
    pub columns: Vec<Column<E>>,
}

impl<E> Sweep<E> {
    pub fn column(&self, x: i64) -> Option<&Column<E>> {
        if x < self.start.0 {
            return None;
        }
        self.columns.get((x - self.start.0) as usize)
    }

    pub fn get(&self, x: i64, y: i64) -> Option<&E> {
        self.column(x).and_then(|c| c.get(y))
    }
}

fn floor_div(a: i64, b: i64) -> i64 {
    a.div_euclid(b)
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -(-a).div_euclid(b)
}

/// Heights of column `x` lying on some path from `start` to `target`, as
/// allowed by the slope support alone.
pub fn cone_bounds(
    model: &WalkModel,
    start: (i64, i64),
    target: (i64, i64),
    x: i64,
) -> Option<(i64, i64)> {
    if x < start.0 || x > target.0 {
        return None;
    }
    let mut lo = i64::MIN;
    let mut hi = i64::MAX;
    let ahead = x - start.0;
    let behind = target.0 - x;
    if let Some(s) = model.min_slope_step() {
        lo = lo.max(start.1 + ceil_div(s.v * ahead, s.u));
        hi = hi.min(target.1 - ceil_div(s.v * behind, s.u));
    }
    if let Some(s) = model.max_slope_step() {
        hi = hi.min(start.1 + floor_div(s.v * ahead, s.u));
        lo = lo.max(target.1 - floor_div(s.v * behind, s.u));
    }
    (lo <= hi).then_some((lo, hi))
}

/// Admissible height range of column `x`: slope cone intersected with the mask bounds.
pub fn column_range(
    model: &WalkModel,
    start: (i64, i64),
    target: (i64, i64),
    mask: &dyn SiteMask,
    x: i64,
) -> Option<(i64, i64)> {
    let (clo, chi) = cone_bounds(model, start, target, x)?;
    let (mlo, mhi) = mask.column_bounds(x)?;
    let lo = clo.max(mlo);
    let hi = chi.min(mhi);
    (lo <= hi).then_some((lo, hi))
}

/// Weighted sum over paths from `start` to every site up to `target`'s column.
///
/// `weight(i, y)` is the weight of step `i` leaving height `y`.
pub fn forward_sweep<R, W>(
    model: &WalkModel,
    start: (i64, i64),
    target: (i64, i64),
    mask: &dyn SiteMask,
    ring: &R,
    mut weight: W,
    keep: Keep,
) -> Sweep<R::Elem>
where
    R: Semiring,
    W: FnMut(usize, i64) -> R::Elem,
{
    let mut sweep = Sweep {
        start,
        target,
        target_value: ring.zero(),
        columns: Vec::new(),
    };
    if target.0 < start.0 || !mask.admits(start.0, start.1) {
        return sweep;
    }
    let steps = model.steps();
    let max_u = model.max_u();
    let descending = model.vertical_sign() < 0;
    let mut terms: Vec<R::Elem> = Vec::with_capacity(steps.len() + 1);
    let mut columns: Vec<Column<R::Elem>> = Vec::with_capacity((target.0 - start.0 + 1) as usize);

    for x in start.0..=target.0 {
        let Some((lo, hi)) = column_range(model, start, target, mask, x) else {
            columns.push(Column::empty(x));
            continue;
        };
        let len = (hi - lo + 1) as usize;
        let mut values = vec![ring.zero(); len];
        let heights: Box<dyn Iterator<Item = i64>> = if descending {
            Box::new((lo..=hi).rev())
        } else {
            Box::new(lo..=hi)
        };
        for y in heights {
            if !mask.admits(x, y) {
                continue;
            }
            terms.clear();
            if (x, y) == start {
                terms.push(ring.one());
            }
            for (i, s) in steps.iter().enumerate() {
                let (px, py) = (x - s.u, y - s.v);
                if px < start.0 {
                    continue;
                }
                let prev = if s.u == 0 {
                    if py < lo || py > hi {
                        None
                    } else {
                        Some(&values[(py - lo) as usize])
                    }
                } else {
                    columns[(px - start.0) as usize].get(py)
                };
                if let Some(prev) = prev {
                    if !ring.is_zero(prev) {
                        let w = weight(i, py);
                        terms.push(ring.mul(&w, prev));
                    }
                }
            }
            if !terms.is_empty() {
                values[(y - lo) as usize] = ring.sum(&terms);
            }
        }
        columns.push(Column { x, lo, values });
        if keep == Keep::Window {
            let stale = x - start.0 - max_u;
            if stale >= 0 {
                columns[stale as usize] = Column::empty(start.0 + stale);
            }
        }
    }

    if let Some(v) = columns.last().and_then(|c| c.get(target.1)) {
        sweep.target_value = v.clone();
    }
    if keep == Keep::All {
        sweep.columns = columns;
    }
    sweep
}
