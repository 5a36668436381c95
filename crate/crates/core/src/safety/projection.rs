//! Exact Euclidean projections onto small polyhedra in the plane.

use serde::{Deserialize, Serialize};

use super::{SafetyError, DEGENERACY_TOL, FEASIBILITY_TOL};
use crate::math::Vec2;

/// The closed half-space `{u : normal·u ≥ offset}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Vec2,
    pub offset: f64,
}

impl HalfSpace {
    pub fn residual(&self, u: Vec2) -> f64 {
        self.normal.dot(u) - self.offset
    }

    pub fn contains(&self, u: Vec2) -> bool {
        self.residual(u) >= -FEASIBILITY_TOL
    }

    pub fn is_tight(&self, u: Vec2) -> bool {
        self.residual(u).abs() <= FEASIBILITY_TOL
    }

    /// Projection onto the boundary line. Only meaningful for points outside.
    fn project(&self, u: Vec2) -> Vec2 {
        let step = (self.offset - self.normal.dot(u)) / self.normal.norm_sq();
        u + self.normal * step
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub point: Vec2,
    pub active_first: bool,
    pub active_second: bool,
}

/// Projects `u_nom` onto the intersection of two half-spaces by active-set
/// enumeration.
///
/// Order of attempts: the nominal itself, each single-constraint projection
/// (smaller deviation wins; exact ties go to `first`), then the corner where
/// both boundaries meet.
pub fn project_two_halfspaces(u_nom: Vec2, first: &HalfSpace, second: &HalfSpace) -> Result<Projection, SafetyError> {
    if first.normal.norm_sq() == 0.0 || second.normal.norm_sq() == 0.0 {
        return Err(SafetyError::InvalidParams("half-space with zero normal".into()));
    }

    if first.contains(u_nom) && second.contains(u_nom) {
        return Ok(Projection {
            point: u_nom,
            active_first: first.is_tight(u_nom),
            active_second: second.is_tight(u_nom),
        });
    }

    let on_first = (!first.contains(u_nom))
        .then(|| first.project(u_nom))
        .filter(|p| second.contains(*p));
    let on_second = (!second.contains(u_nom))
        .then(|| second.project(u_nom))
        .filter(|p| first.contains(*p));

    let chosen = match (on_first, on_second) {
        (Some(a), Some(b)) => {
            let da = (a - u_nom).norm_sq();
            let db = (b - u_nom).norm_sq();
            if db < da - DEGENERACY_TOL {
                Some((b, false))
            } else {
                Some((a, true))
            }
        }
        (Some(a), None) => Some((a, true)),
        (None, Some(b)) => Some((b, false)),
        (None, None) => None,
    };
    if let Some((point, is_first)) = chosen {
        return Ok(Projection {
            point,
            active_first: is_first || first.is_tight(point),
            active_second: !is_first || second.is_tight(point),
        });
    }

    // Corner: both boundaries active.
    let (a1, a2) = (first.normal, second.normal);
    let det = a1.x * a2.y - a1.y * a2.x;
    if det.abs() <= DEGENERACY_TOL * a1.norm() * a2.norm() {
        return Err(SafetyError::InfeasibleConstraints);
    }
    let point = Vec2::new(
        (first.offset * a2.y - a1.y * second.offset) / det,
        (a1.x * second.offset - first.offset * a2.x) / det,
    );
    Ok(Projection {
        point,
        active_first: true,
        active_second: true,
    })
}

/// Exact projection of `u` onto `{v : h.normal·v ≥ h.offset} ∩ [−limit, limit]²`.
///
/// The minimizer has the form `clip(u + λ·a)` for some `λ ≥ 0`, and
/// `a·clip(u + λ·a)` is piecewise linear and nondecreasing in `λ`, so the
/// multiplier is found by walking the breakpoints. The flag is false when the
/// half-space misses the box, in which case the returned point is the box
/// point that maximizes `a·v`.
pub fn project_halfspace_box(u: Vec2, h: &HalfSpace, limit: f64) -> (Vec2, bool) {
    let a = h.normal;
    let at = |lambda: f64| (u + a * lambda).clamp_box(limit);
    let start = at(0.0);
    if h.normal.dot(start) >= h.offset {
        return (start, true);
    }

    let mut breaks: Vec<f64> = Vec::with_capacity(4);
    for (ui, ai) in [(u.x, a.x), (u.y, a.y)] {
        if ai != 0.0 {
            for bound in [-limit, limit] {
                let lambda = (bound - ui) / ai;
                if lambda > 0.0 {
                    breaks.push(lambda);
                }
            }
        }
    }
    breaks.sort_by(|x, y| x.total_cmp(y));

    let mut lo = 0.0;
    for &hi in &breaks {
        let g_lo = a.dot(at(lo));
        let g_hi = a.dot(at(hi));
        if g_hi >= h.offset {
            if g_hi == g_lo {
                return (at(hi), true);
            }
            let t = (h.offset - g_lo) / (g_hi - g_lo);
            let lambda = lo + t * (hi - lo);
            return (at(lambda), true);
        }
        lo = hi;
    }
    // Past the last breakpoint every component is saturated.
    let corner = Vec2::new(limit * a.x.signum(), limit * a.y.signum());
    let corner = Vec2::new(
        if a.x == 0.0 { start.x } else { corner.x },
        if a.y == 0.0 { start.y } else { corner.y },
    );
    (corner, h.normal.dot(corner) >= h.offset - FEASIBILITY_TOL)
}
