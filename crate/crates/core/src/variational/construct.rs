//! Left-to-right construction of the constrained maximizer: free arcs are
//! launched from the current point, land tangentially on the wall they would
//! otherwise cross, and leave it at the last point from which the tangent arc
//! no longer needs the wall's support.

use rayon::prelude::*;

use crate::domain::{Domain, Side, Wall};

use super::geodesic::{Geodesic, Geodesics};
use super::{bisect_root, grid, Piece, VariationalError};

const CROSS_TOL: f64 = 1e-9;
const MAX_PHASES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cause {
    Crosses(Wall, f64),
    End,
    Escapes,
}

/// Where a free arc ends up relative to the target.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Verdict {
    High(Cause),
    Low(Cause),
    Hit,
}

enum State {
    Free((f64, f64)),
    OnWall(Wall, f64),
}

struct Builder<'a> {
    flow: &'a Geodesics,
    domain: &'a Domain,
    end: (f64, f64),
    xs: Vec<f64>,
    step: f64,
}

impl<'a> Builder<'a> {
    fn nodes_after(&self, from: f64) -> impl Iterator<Item = f64> + '_ {
        let first = self.xs.partition_point(|&x| x <= from + 1e-13 * (1.0 + from.abs()));
        self.xs[first..].iter().copied()
    }

    fn wall(&self, wall: Wall, x: f64) -> Option<f64> {
        self.domain.curve(wall)?.eval(x)
    }

    /// Follows `path` from `from` to the target abscissa.
    fn trace(&self, path: &Geodesic, from: f64) -> Verdict {
        let mut last = None;
        for x in self.nodes_after(from) {
            let Some(h) = path.height(x) else {
                return match path.escape_direction(x) {
                    -1 => Verdict::Low(Cause::Escapes),
                    _ => Verdict::High(Cause::Escapes),
                };
            };
            let tol = CROSS_TOL * (1.0 + h.abs());
            if h < self.domain.lower_at(x) - tol {
                return Verdict::Low(Cause::Crosses(Wall::Lower, x));
            }
            if h > self.domain.upper_at(x) + tol {
                return Verdict::High(Cause::Crosses(Wall::Upper, x));
            }
            last = Some(h);
        }
        let Some(h) = last.or_else(|| path.height(self.end.0)) else {
            return Verdict::High(Cause::Escapes);
        };
        let miss = h - self.end.1;
        if miss.abs() <= 1e-12 * (1.0 + self.end.1.abs()) {
            Verdict::Hit
        } else if miss > 0.0 {
            Verdict::High(Cause::End)
        } else {
            Verdict::Low(Cause::End)
        }
    }

    /// Whether `path` stays inside the domain strictly between `from` and `to`.
    fn feasible(&self, path: &Geodesic, from: f64, to: f64) -> bool {
        for x in self.nodes_after(from) {
            if x >= to - 1e-13 * (1.0 + to.abs()) {
                break;
            }
            let Some(h) = path.height(x) else {
                return false;
            };
            let tol = CROSS_TOL * (1.0 + h.abs());
            if h < self.domain.lower_at(x) - tol || h > self.domain.upper_at(x) + tol {
                return false;
            }
        }
        true
    }

    fn landing(&self, from: (f64, f64), wall: Wall, x: f64) -> Option<Geodesic> {
        let y = self.wall(wall, x)?;
        let path = self.flow.shoot(from, (x, y)).ok()?;
        self.feasible(&path, from.0, x).then_some(path)
    }

    /// Largest wall abscissa reachable by a feasible free arc from `from`.
    fn touchdown(&self, from: (f64, f64), wall: Wall) -> Option<f64> {
        let candidates: Vec<f64> = self
            .nodes_after(from.0)
            .filter(|&x| self.wall(wall, x).is_some())
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let stride = (candidates.len() / 256).max(1);
        let mut coarse: Vec<usize> = (0..candidates.len()).step_by(stride).collect();
        if *coarse.last().unwrap() != candidates.len() - 1 {
            coarse.push(candidates.len() - 1);
        }
        let ok: Vec<bool> = coarse
            .par_iter()
            .map(|&i| self.landing(from, wall, candidates[i]).is_some())
            .collect();
        let best = match ok.iter().rposition(|&b| b) {
            Some(c) => {
                let mut good = coarse[c];
                if let Some(mut bad) = coarse.get(c + 1).copied() {
                    while bad - good > 1 {
                        let m = (good + bad) / 2;
                        if self.landing(from, wall, candidates[m]).is_some() {
                            good = m;
                        } else {
                            bad = m;
                        }
                    }
                }
                good
            }
            None => {
                // the feasible stretch may be narrower than a coarse cell
                (0..candidates.len())
                    .rev()
                    .find(|&i| self.landing(from, wall, candidates[i]).is_some())?
            }
        };
        Some(candidates[best])
    }

    /// Slides a grid touchdown to the point where the arriving arc is tangent
    /// to the wall, or onto a nearby corner.
    fn refine_touchdown(&self, from: (f64, f64), wall: Wall, node: f64) -> (f64, bool) {
        let step = self.step;
        if let Some(c) = self
            .domain
            .next_corner(wall, node - 2.0 * step, node + 2.0 * step, step / 2.0)
        {
            if c > from.0 && self.wall(wall, c).is_some() {
                return (c, true);
            }
        }
        let mismatch = |x: f64| -> Option<f64> {
            let y = self.wall(wall, x)?;
            let path = self.flow.shoot(from, (x, y)).ok()?;
            Some(path.slope(x)? - self.domain.wall_slope(wall, x, Side::Left)?)
        };
        let lo = (node - 2.0 * step).max(from.0 + 1e-3 * step);
        let hi = (node + 2.0 * step).min(self.end.0);
        let samples = 16;
        let points: Vec<(f64, f64)> = (0..=samples)
            .filter_map(|i| {
                let x = lo + (hi - lo) * i as f64 / samples as f64;
                mismatch(x).map(|m| (x, m))
            })
            .collect();
        let mut best: Option<f64> = None;
        for pair in points.windows(2) {
            let ((a, fa), (b, fb)) = (pair[0], pair[1]);
            if fa.signum() != fb.signum() || fa == 0.0 {
                if let Some(root) = bisect_root(&mismatch, a, b, fa) {
                    if best.map_or(true, |r| (root - node).abs() < (r - node).abs()) {
                        best = Some(root);
                    }
                }
            }
        }
        (best.unwrap_or(node), false)
    }

    /// Verdict for the arc leaving `wall` tangentially at `x`.
    fn leave(&self, wall: Wall, x: f64, side: Side) -> (Verdict, Option<Geodesic>) {
        let (Some(y), Some(slope)) = (self.wall(wall, x), self.domain.wall_slope(wall, x, side)) else {
            return (Verdict::High(Cause::Escapes), None);
        };
        match self.flow.with_slope((x, y), slope) {
            Ok(path) => (self.trace(&path, x), Some(path)),
            Err(_) => {
                if slope >= self.flow.support().1 {
                    (Verdict::High(Cause::Escapes), None)
                } else {
                    (Verdict::Low(Cause::Escapes), None)
                }
            }
        }
    }

    fn stays(wall: Wall, verdict: Verdict) -> bool {
        match wall {
            Wall::Lower => matches!(verdict, Verdict::High(_)),
            Wall::Upper => matches!(verdict, Verdict::Low(_)),
        }
    }

    /// Point of deepest contact between `path` and `wall` near `guess`.
    fn touch_point(&self, path: &Geodesic, wall: Wall, guess: f64, after: f64) -> Option<f64> {
        let depth = |x: f64| -> Option<f64> {
            let h = path.height(x)?;
            let w = self.wall(wall, x)?;
            Some(match wall {
                Wall::Lower => w - h,
                Wall::Upper => h - w,
            })
        };
        let lo = (guess - 4.0 * self.step).max(after + 1e-9 * self.step);
        let hi = (guess + 4.0 * self.step).min(self.end.0);
        let samples = 64;
        let mut best: Option<(usize, f64)> = None;
        let at = |i: usize| lo + (hi - lo) * i as f64 / samples as f64;
        for i in 0..=samples {
            if let Some(d) = depth(at(i)) {
                if best.map_or(true, |(_, bd)| d > bd) {
                    best = Some((i, d));
                }
            }
        }
        let (i, _) = best?;
        let (mut a, mut b) = (at(i.saturating_sub(1)), at((i + 1).min(samples)));
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let score = |x: f64| depth(x).unwrap_or(f64::NEG_INFINITY);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut fc, mut fd) = (score(c), score(d));
        for _ in 0..200 {
            if b - a <= 1e-15 * (1.0 + a.abs()) {
                break;
            }
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = score(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = score(d);
            }
        }
        Some(0.5 * (a + b))
    }

    fn free_piece(&self, from: (f64, f64), to: (f64, f64), fallback: Option<Geodesic>) -> Result<Piece, VariationalError> {
        let path = match self.flow.shoot(from, to) {
            Ok(p) => p,
            Err(e) => fallback.ok_or(e)?,
        };
        Ok(Piece::Free {
            from: from.0,
            to: to.0,
            path,
        })
    }

    fn run(&self, start: (f64, f64)) -> Result<Vec<Piece>, VariationalError> {
        let end = self.end;
        let mut pieces = Vec::new();
        let mut state = State::Free(start);
        for _ in 0..MAX_PHASES {
            state = match state {
                State::Free(from) => {
                    let direct = self.flow.shoot(from, end).map_err(|_| {
                        VariationalError::NoAdmissiblePath(format!(
                            "no free arc from ({}, {}) reaches the end",
                            from.0, from.1
                        ))
                    })?;
                    let wall = match self.trace(&direct, from.0) {
                        Verdict::Low(Cause::Crosses(w, _)) | Verdict::High(Cause::Crosses(w, _)) => w,
                        _ => {
                            pieces.push(Piece::Free {
                                from: from.0,
                                to: end.0,
                                path: direct,
                            });
                            return Ok(pieces);
                        }
                    };
                    let on_wall = self
                        .wall(wall, from.0)
                        .is_some_and(|y| (y - from.1).abs() <= CROSS_TOL * (1.0 + y.abs()));
                    match self.touchdown(from, wall) {
                        Some(node) => {
                            let (x, corner) = self.refine_touchdown(from, wall, node);
                            let y = self.wall(wall, x).unwrap_or(from.1);
                            pieces.push(self.free_piece(from, (x, y), self.landing(from, wall, node))?);
                            if corner {
                                State::Free((x, y))
                            } else {
                                State::OnWall(wall, x)
                            }
                        }
                        None if on_wall => State::OnWall(wall, from.0),
                        None => {
                            return Err(VariationalError::NoAdmissiblePath(format!(
                                "no free arc from ({}, {}) reaches the {} wall",
                                from.0,
                                from.1,
                                wall.name()
                            )))
                        }
                    }
                }
                State::OnWall(wall, touch) => {
                    let step = self.step;
                    let extent = self
                        .domain
                        .wall_extent(wall, touch, end.0, step)
                        .unwrap_or(touch);
                    let corner = self
                        .domain
                        .next_corner(wall, touch + 1e-6 * step, extent, step);
                    let limit = corner.unwrap_or(extent).min(end.0);
                    let (first, _) = self.leave(wall, touch, Side::Right);
                    let liftoff = if !Self::stays(wall, first) {
                        touch
                    } else {
                        let (last, _) = self.leave(wall, limit, Side::Left);
                        if Self::stays(wall, last) || limit <= touch {
                            if limit >= end.0 - 1e-12 * (1.0 + end.0.abs()) {
                                let y = self.wall(wall, end.0).unwrap_or(f64::NAN);
                                if (y - end.1).abs() <= CROSS_TOL * (1.0 + y.abs()) {
                                    pieces.push(Piece::Wall {
                                        from: touch,
                                        to: end.0,
                                        wall,
                                    });
                                    return Ok(pieces);
                                }
                                return Err(VariationalError::NoAdmissiblePath(format!(
                                    "the {} wall runs to the end abscissa without meeting the end",
                                    wall.name()
                                )));
                            }
                            if limit > touch {
                                pieces.push(Piece::Wall {
                                    from: touch,
                                    to: limit,
                                    wall,
                                });
                            }
                            let y = self.wall(wall, limit).ok_or_else(|| {
                                VariationalError::NoAdmissiblePath(format!(
                                    "the {} wall ends at x={limit}",
                                    wall.name()
                                ))
                            })?;
                            state = State::Free((limit, y));
                            continue;
                        }
                        let (mut a, mut b) = (touch, limit);
                        for _ in 0..200 {
                            let m = 0.5 * (a + b);
                            if m <= a || m >= b || b - a <= 1e-14 * (1.0 + a.abs()) {
                                break;
                            }
                            if Self::stays(wall, self.leave(wall, m, Side::Right).0) {
                                a = m;
                            } else {
                                b = m;
                            }
                        }
                        0.5 * (a + b)
                    };
                    if liftoff > touch {
                        pieces.push(Piece::Wall {
                            from: touch,
                            to: liftoff,
                            wall,
                        });
                    }
                    let gap = 1e-11 * (1.0 + liftoff.abs());
                    let before = self.leave(wall, (liftoff - gap).max(touch), Side::Right).0;
                    let (after, tangent) = self.leave(wall, liftoff, Side::Right);
                    let after_next = self.leave(wall, (liftoff + gap).min(limit), Side::Right).0;
                    let mut touches: Vec<(Wall, f64)> = Vec::new();
                    for verdict in [before, after, after_next] {
                        match verdict {
                            Verdict::High(Cause::Crosses(Wall::Upper, x))
                            | Verdict::Low(Cause::Crosses(Wall::Lower, x)) => {
                                let w = if matches!(verdict, Verdict::High(_)) {
                                    Wall::Upper
                                } else {
                                    Wall::Lower
                                };
                                touches.push((w, x));
                            }
                            _ => {}
                        }
                    }
                    touches.sort_by(|a, b| a.1.total_cmp(&b.1));
                    let from = (liftoff, self.wall(wall, liftoff).unwrap_or(f64::NAN));
                    let Some(&(next_wall, guess)) = touches.first() else {
                        pieces.push(self.free_piece(from, end, tangent)?);
                        return Ok(pieces);
                    };
                    let path = tangent.ok_or_else(|| {
                        VariationalError::NoAdmissiblePath(format!("no free arc leaves the wall at x={liftoff}"))
                    })?;
                    let x = self.touch_point(&path, next_wall, guess, liftoff).ok_or_else(|| {
                        VariationalError::NoAdmissiblePath(format!(
                            "lost the {} wall near x={guess}",
                            next_wall.name()
                        ))
                    })?;
                    let y = self.wall(next_wall, x).unwrap_or(f64::NAN);
                    pieces.push(self.free_piece(from, (x, y), Some(path))?);
                    if self.domain.is_corner(next_wall, x) {
                        State::Free((x, y))
                    } else {
                        State::OnWall(next_wall, x)
                    }
                }
            };
        }
        Err(VariationalError::NoAdmissiblePath(format!(
            "construction did not finish within {MAX_PHASES} phases"
        )))
    }
}

pub(crate) fn construct_pieces(
    flow: &Geodesics,
    domain: &Domain,
    start: (f64, f64),
    end: (f64, f64),
    resolution: usize,
) -> Result<Vec<Piece>, VariationalError> {
    let xs = grid(start.0, end.0, resolution);
    let builder = Builder {
        flow,
        domain,
        end,
        step: xs[1] - xs[0],
        xs,
    };
    builder.run(start)
}
