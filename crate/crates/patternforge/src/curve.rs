//! Evaluation and discretization of the four edge kinds: straight lines,
//! quadratic/cubic Bezier curves, and circular arcs with SVG-style
//! (large_arc, sweep) selection in a y-up frame (sweep=true is CCW).

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::pattern::{EdgeKind, EdgeSpec, Panel};

/// Radius deficits up to this fraction of the chord are inflated to half-chord.
pub const ARC_INFLATE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline2 {
    pub points: Vec<Vec2>,
}

impl Polyline2 {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].dist(w[1])).sum()
    }
}

/// Solved circular arc: center, start angle, and signed swept angle.
/// The point at parameter t is center + r * (cos, sin)(a0 + t * sweep_angle).
#[derive(Debug, Clone, Copy)]
pub struct SolvedArc {
    pub center: Vec2,
    pub radius: f64,
    pub start_angle: f64,
    pub sweep_angle: f64,
}

pub fn solve_arc(
    p0: Vec2,
    p1: Vec2,
    radius: f64,
    large_arc: bool,
    sweep: bool,
) -> Result<SolvedArc> {
    let chord = p0.dist(p1);
    if chord == 0.0 {
        return Err(Error::Geometry("arc endpoints coincide".into()));
    }
    let mut r = radius;
    if r < chord / 2.0 {
        if chord / 2.0 - r <= ARC_INFLATE_TOL * chord {
            r = chord / 2.0;
        } else {
            return Err(Error::Geometry(format!(
                "arc radius {r} < half chord {}",
                chord / 2.0
            )));
        }
    }
    let mid = p0.add(p1).scale(0.5);
    let dir = p1.sub(p0).scale(1.0 / chord);
    let perp = Vec2::new(-dir.y, dir.x);
    let h = (r * r - chord * chord / 4.0).max(0.0).sqrt();

    // Two candidate centers; pick the one whose swept angle in the requested
    // direction matches the large_arc flag.
    for sign in [1.0, -1.0] {
        let c = mid.add(perp.scale(sign * h));
        let a0 = (p0.y - c.y).atan2(p0.x - c.x);
        let a1 = (p1.y - c.y).atan2(p1.x - c.x);
        let delta = if sweep {
            ((a1 - a0).rem_euclid(TAU) + TAU) % TAU
        } else {
            ((a0 - a1).rem_euclid(TAU) + TAU) % TAU
        };
        let delta = if delta == 0.0 { TAU } else { delta };
        if (delta > PI) == large_arc || h == 0.0 {
            let sweep_angle = if sweep { delta } else { -delta };
            return Ok(SolvedArc {
                center: c,
                radius: r,
                start_angle: a0,
                sweep_angle,
            });
        }
    }
    unreachable!("one of the two candidate centers always matches the flags")
}

impl SolvedArc {
    pub fn eval(&self, t: f64) -> Vec2 {
        let a = self.start_angle + self.sweep_angle * t;
        self.center
            .add(Vec2::new(a.cos(), a.sin()).scale(self.radius))
    }
}

/// Evaluate an edge at parameter t in [0, 1]. Endpoints are exact.
pub fn eval_edge(panel: &Panel, edge: &EdgeSpec, t: f64) -> Result<Vec2> {
    let p0 = panel.vertex(edge.start);
    let p3 = panel.vertex(edge.end);
    if t == 0.0 {
        return Ok(p0);
    }
    if t == 1.0 {
        return Ok(p3);
    }
    match edge.kind {
        EdgeKind::Line => Ok(p0.lerp(p3, t)),
        EdgeKind::Quad => {
            let c = edge.control[0];
            let u = 1.0 - t;
            Ok(p0
                .scale(u * u)
                .add(c.scale(2.0 * u * t))
                .add(p3.scale(t * t)))
        }
        EdgeKind::Cubic => {
            let c1 = edge.control[0];
            let c2 = edge.control[1];
            let u = 1.0 - t;
            Ok(p0
                .scale(u * u * u)
                .add(c1.scale(3.0 * u * u * t))
                .add(c2.scale(3.0 * u * t * t))
                .add(p3.scale(t * t * t)))
        }
        EdgeKind::Arc => {
            let a = edge
                .arc
                .as_ref()
                .ok_or_else(|| Error::Geometry("arc edge without parameters".into()))?;
            let solved = solve_arc(p0, p3, a.radius, a.large_arc, a.sweep)?;
            Ok(solved.eval(t))
        }
    }
}

/// Derivative of the edge curve with respect to t.
fn eval_derivative(panel: &Panel, edge: &EdgeSpec, t: f64) -> Vec2 {
    let p0 = panel.vertex(edge.start);
    let p3 = panel.vertex(edge.end);
    match edge.kind {
        EdgeKind::Line => p3.sub(p0),
        EdgeKind::Quad => {
            let c = edge.control[0];
            let u = 1.0 - t;
            c.sub(p0).scale(2.0 * u).add(p3.sub(c).scale(2.0 * t))
        }
        EdgeKind::Cubic => {
            let c1 = edge.control[0];
            let c2 = edge.control[1];
            let u = 1.0 - t;
            c1.sub(p0)
                .scale(3.0 * u * u)
                .add(c2.sub(c1).scale(6.0 * u * t))
                .add(p3.sub(c2).scale(3.0 * t * t))
        }
        EdgeKind::Arc => unreachable!("arc length computed analytically"),
    }
}

/// Arc length of an edge via adaptive Simpson quadrature on the speed
/// (analytic for lines and circular arcs). Relative error <= 1e-6.
pub fn edge_arc_length(panel: &Panel, edge: &EdgeSpec) -> Result<f64> {
    let p0 = panel.vertex(edge.start);
    let p3 = panel.vertex(edge.end);
    match edge.kind {
        EdgeKind::Line => Ok(p0.dist(p3)),
        EdgeKind::Arc => {
            let a = edge
                .arc
                .as_ref()
                .ok_or_else(|| Error::Geometry("arc edge without parameters".into()))?;
            let solved = solve_arc(p0, p3, a.radius, a.large_arc, a.sweep)?;
            Ok(solved.radius * solved.sweep_angle.abs())
        }
        EdgeKind::Quad | EdgeKind::Cubic => {
            let speed = |t: f64| eval_derivative(panel, edge, t).norm();
            Ok(adaptive_simpson(&speed, 0.0, 1.0, 1e-9, 24))
        }
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, eps, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
    }
}

/// Uniform-parameter discretization into n segments (n + 1 points).
pub fn discretize_edge(panel: &Panel, edge: &EdgeSpec, n: usize) -> Result<Polyline2> {
    assert!(n >= 1, "sample count must be >= 1");
    let mut points = Vec::with_capacity(n + 1);
    for k in 0..=n {
        points.push(eval_edge(panel, edge, k as f64 / n as f64)?);
    }
    Ok(Polyline2 { points })
}
