use crate::geom::{closest_on_segment, point_segment_distance, segment_segment_distance, Vec2};
use crate::runtime::{normalize_angle, EnvError};

use super::World;

/// Something a robot cannot pass through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Blocker {
    Circle { id: u32, center: Vec2, radius: f64 },
    /// A bar: all points within `radius` of the segment `p`-`q`.
    Capsule { id: u32, p: Vec2, q: Vec2, radius: f64 },
}

impl Blocker {
    pub fn id(&self) -> u32 {
        match self {
            Blocker::Circle { id, .. } | Blocker::Capsule { id, .. } => *id,
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            Blocker::Circle { radius, .. } | Blocker::Capsule { radius, .. } => *radius,
        }
    }

    /// Distance from `x` to the blocker's core (center point or bar axis).
    fn core_distance(&self, x: Vec2) -> f64 {
        match *self {
            Blocker::Circle { center, .. } => x.dist(center),
            Blocker::Capsule { p, q, .. } => point_segment_distance(x, p, q),
        }
    }

    fn core_segment_distance(&self, a: Vec2, b: Vec2) -> f64 {
        match *self {
            Blocker::Circle { center, .. } => point_segment_distance(center, a, b),
            Blocker::Capsule { p, q, .. } => segment_segment_distance(a, b, p, q),
        }
    }

    /// Smallest circle containing the blocker.
    pub fn bounding_circle(&self) -> (Vec2, f64) {
        match *self {
            Blocker::Circle { center, radius, .. } => (center, radius),
            Blocker::Capsule { p, q, radius, .. } => ((p + q) * 0.5, p.dist(q) * 0.5 + radius),
        }
    }
}

const SEARCH_ITERS: usize = 80;

/// First `t` in [0, 1] with `g(t) <= 0`, for convex `g`.
fn first_nonpositive(g: impl Fn(f64) -> f64) -> Option<f64> {
    if g(0.0) <= 0.0 {
        return Some(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..SEARCH_ITERS {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if g(m1) <= g(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let tmin = (lo + hi) * 0.5;
    let tmin = if g(1.0) <= g(tmin) { 1.0 } else { tmin };
    if g(tmin) > 0.0 {
        return None;
    }
    let (mut outside, mut inside) = (0.0, tmin);
    for _ in 0..SEARCH_ITERS {
        let m = (outside + inside) * 0.5;
        if g(m) > 0.0 {
            outside = m;
        } else {
            inside = m;
        }
    }
    Some(outside)
}

/// Fraction of `step` a disk of `radius` at `from` can travel before touching
/// a blocker. A disk already overlapping something may only move outward.
pub(super) fn contact_fraction(from: Vec2, step: Vec2, radius: f64, blockers: &[Blocker]) -> f64 {
    let mut t = 1.0f64;
    for b in blockers {
        let reach = b.radius() + radius;
        let g = |s: f64| b.core_distance(from + step * s) - reach;
        let g0 = g(0.0);
        if g0 < 0.0 {
            if g(1.0) < g0 {
                t = 0.0;
            }
            continue;
        }
        if let Some(hit) = first_nonpositive(g) {
            t = t.min(hit);
        }
    }
    t
}

pub fn course(from: Vec2, to: Vec2) -> Result<f64, EnvError> {
    if from.dist(to) <= 1e-9 {
        return Err(EnvError::DegenerateCourse);
    }
    Ok(normalize_angle((to - from).angle()))
}

fn path_clear(blockers: &[Blocker], p1: Vec2, p2: Vec2, inflate: f64) -> bool {
    blockers.iter().all(|b| b.core_segment_distance(p1, p2) > b.radius() + inflate)
}

/// True iff the segment `p1`-`p2`, swept by a disk of radius `rho` plus the
/// world's clearance, touches no obstacle and no unheld bar.
pub fn clear_path(w: &World, p1: Vec2, p2: Vec2, rho: f64) -> bool {
    path_clear(&w.blockers(), p1, p2, rho + w.params.clearance)
}

/// A waypoint beside the first blocker on the way from `p1` to `p2`.
///
/// The point sits on the perpendicular to the path through the blocker's
/// center, on the side away from the center, at least `R + rho + 2*delta` out
/// and far enough that the straight leg from `p1` clears the blocker. If that
/// leg is still blocked by something else and the point is not closer to `p1`
/// than the blocker is, a point halfway to the blocker along the same bearing
/// is returned instead, so recursive detours always make progress. A start
/// already inside the blocker's clearance band gets a point straight out.
pub fn new_point(w: &World, p1: Vec2, p2: Vec2, rho: f64) -> Result<Vec2, EnvError> {
    let delta = w.params.clearance;
    let inflate = rho + delta;
    let blockers = w.blockers();
    let dir = p2 - p1;
    let mut first: Option<(f64, &Blocker)> = None;
    for b in &blockers {
        let reach = b.radius() + inflate;
        if let Some(t) = first_nonpositive(|s| b.core_distance(p1 + dir * s) - reach) {
            if first.is_none_or(|(best, fb)| t < best || (t == best && b.id() < fb.id())) {
                first = Some((t, b));
            }
        }
    }
    let (_, blocker) = first.ok_or(EnvError::NoBlocker)?;
    let (center, r_b) = blocker.bounding_circle();
    let base = r_b + rho + 2.0 * delta;
    if blocker.core_distance(p1) < blocker.radius() + inflate {
        // Already inside the clearance band: back straight out.
        let away = p1 - center;
        let u = if away.norm() < 1e-12 { (p1 - p2).normalized() } else { away.normalized() };
        let u = if u.norm() < 1e-12 { Vec2::new(0.0, 1.0) } else { u };
        return Ok(center + u * base);
    }
    let (c, _) = closest_on_segment(center, p1, p2);
    let u = if dir.norm() < 1e-12 {
        let away = p1 - center;
        if away.norm() < 1e-12 { Vec2::new(0.0, 1.0) } else { away.normalized() }
    } else {
        let side = dir.cross(center - p1);
        let left = dir.normalized().perp();
        if side > 1e-12 { -left } else { left }
    };
    let needed = r_b + inflate + 0.05;
    let cap = 4.0 * (p1.dist(center) + base);
    let mut s = base;
    while point_segment_distance(center, p1, center + u * s) < needed && s < cap {
        s *= 1.05;
    }
    let x = center + u * s;
    if path_clear(&blockers, p1, x, inflate) || p1.dist(x) < p1.dist(c) {
        return Ok(x);
    }
    let half = p1.dist(c) * 0.5;
    if half <= 0.0 || p1.dist(x) < 1e-12 {
        return Ok(x);
    }
    Ok(p1 + (x - p1).normalized() * half)
}
