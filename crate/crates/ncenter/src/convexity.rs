//! Geodesic convexity of region boundaries in the Jacobi metric.
//!
//! For the conformally flat metric `ρ |dq|²` with `ρ = 2 (h − V) g`, a
//! boundary curve with Euclidean curvature `κ` (signed toward the inner
//! normal `ν`) is geodesically convex exactly when
//!
//! `2 κ (h − V) + ⟨∇V, ν⟩ − (h − V) ⟨∇g, ν⟩ / g  ≥  0`
//!
//! pointwise; the left side (the *margin*) is what these routines report.

use crate::geom::{polygon_signed_area, segments_cross, Vec2};
use crate::jacobi::DiscreteCurve;
use crate::model::Problem;
use crate::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 1024;

#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvexityReport {
    pub min_margin: f64,
    pub samples: usize,
    pub pass: bool,
    /// Sample point attaining the minimum margin.
    pub worst_point: Vec2,
}

/// Closed uniform-knot periodic cubic spline through `n` points.
struct PeriodicSpline {
    points: Vec<Vec2>,
    second: Vec<Vec2>,
}

impl PeriodicSpline {
    fn new(points: &[Vec2]) -> Result<PeriodicSpline> {
        let n = points.len();
        if n < 3 {
            return Err(Error::InvalidCurve("spline needs at least 3 points".into()));
        }
        let mut rhs_x = vec![0.0; n];
        let mut rhs_y = vec![0.0; n];
        for i in 0..n {
            let prev = points[(i + n - 1) % n];
            let next = points[(i + 1) % n];
            let r = (prev - points[i] * 2.0 + next) * 6.0;
            rhs_x[i] = r.x;
            rhs_y[i] = r.y;
        }
        let mx = solve_cyclic(&rhs_x)?;
        let my = solve_cyclic(&rhs_y)?;
        Ok(PeriodicSpline {
            points: points.to_vec(),
            second: mx.into_iter().zip(my).map(|(x, y)| Vec2::new(x, y)).collect(),
        })
    }

    fn n(&self) -> usize {
        self.points.len()
    }

    /// Position, first and second parameter derivative at t ∈ [0, n).
    fn eval(&self, t: f64) -> (Vec2, Vec2, Vec2) {
        let n = self.n();
        let tw = t.rem_euclid(n as f64);
        let i = (tw.floor() as usize).min(n - 1);
        let u = tw - i as f64;
        let j = (i + 1) % n;
        let (p0, p1) = (self.points[i], self.points[j]);
        let (m0, m1) = (self.second[i], self.second[j]);
        let v = 1.0 - u;
        let pos = p0 * v + p1 * u + (m0 * (v * v * v - v) + m1 * (u * u * u - u)) / 6.0;
        let d1 = p1 - p0 + (m0 * (1.0 - 3.0 * v * v) + m1 * (3.0 * u * u - 1.0)) / 6.0;
        let d2 = m0 * v + m1 * u;
        (pos, d1, d2)
    }
}

/// Cyclic tridiagonal solve for `x_{i-1} + 4 x_i + x_{i+1} = r_i` via the
/// rank-one (Sherman–Morrison) correction of a plain tridiagonal system.
fn solve_cyclic(r: &[f64]) -> Result<Vec<f64>> {
    let n = r.len();
    let mut diag = vec![4.0; n];
    // Pull the two corner 1-entries into u vᵀ with u = (1,0,…,0,1),
    // v = (1,0,…,0,1): this also perturbs both end diagonals by 1.
    diag[0] = 3.0;
    diag[n - 1] = 3.0;
    let mut u = vec![0.0; n];
    u[0] = 1.0;
    u[n - 1] = 1.0;
    let y = thomas(&diag, r)?;
    let z = thomas(&diag, &u)?;
    let vy = y[0] + y[n - 1];
    let vz = z[0] + z[n - 1];
    let factor = vy / (1.0 + vz);
    Ok(y.iter().zip(&z).map(|(a, b)| a - factor * b).collect())
}

/// Plain tridiagonal solve, unit off-diagonals.
fn thomas(diag: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = 1.0 / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - c[i - 1];
        if m.abs() < 1e-300 {
            return Err(Error::InvalidCurve("degenerate spline system".into()));
        }
        c[i] = 1.0 / m;
        d[i] = (rhs[i] - d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

fn margin_at(problem: &Problem, q: Vec2, nu: Vec2, kappa: f64) -> Result<f64> {
    let v = problem.potential(q);
    let h = problem.energy();
    if v >= h {
        return Err(Error::OutsideHillRegion { x: q.x, y: q.y });
    }
    let grad_v = problem.potential_gradient(q)?;
    let g = problem.conformal_eval(q);
    let grad_g = problem.conformal_gradient(q);
    Ok(2.0 * kappa * (h - v) + grad_v.dot(nu) - (h - v) * grad_g.dot(nu) / g)
}

/// Pointwise convexity margin of a closed curve, resolved through a periodic
/// cubic spline so curvature is well defined.  Fails on open or
/// self-intersecting curves.
pub fn boundary_convexity(
    problem: &Problem,
    curve: &DiscreteCurve,
    samples: usize,
) -> Result<ConvexityReport> {
    if !curve.closed() {
        return Err(Error::InvalidCurve("convexity check needs a closed curve".into()));
    }
    let pts = curve.vertices();
    let n = pts.len();
    // Pairwise crossing scan over non-adjacent edges.
    for i in 0..n {
        let a = (pts[i], pts[(i + 1) % n]);
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let b = (pts[j], pts[(j + 1) % n]);
            if segments_cross(a.0, a.1, b.0, b.1) {
                return Err(Error::InvalidCurve(format!(
                    "boundary self-intersects (edges {i} and {j})"
                )));
            }
        }
    }
    let samples = if samples == 0 { DEFAULT_SAMPLES } else { samples };
    let orient = if polygon_signed_area(pts) >= 0.0 { 1.0 } else { -1.0 };
    let spline = PeriodicSpline::new(pts)?;

    let mut min_margin = f64::INFINITY;
    let mut worst = pts[0];
    for k in 0..samples {
        let t = n as f64 * k as f64 / samples as f64;
        let (q, d1, d2) = spline.eval(t);
        let speed = d1.norm();
        if speed < 1e-14 {
            return Err(Error::InvalidCurve("stationary point on boundary spline".into()));
        }
        let kappa = orient * d1.cross(d2) / (speed * speed * speed);
        let nu = d1.perp() * (orient / speed);
        let m = margin_at(problem, q, nu, kappa)?;
        if m < min_margin {
            min_margin = m;
            worst = q;
        }
    }
    Ok(ConvexityReport {
        min_margin,
        samples,
        pass: min_margin >= 0.0,
        worst_point: worst,
    })
}

/// Convexity margin of the circle of radius `radius` about `center`, scaled
/// by the radius: the reported quantity is `radius ×` the boundary margin,
/// i.e. `2 (h − V) − ⟨∇V, q − c⟩ + (h − V) ⟨∇g, q − c⟩ / g`.
///
/// Every singularity must lie strictly inside the circle.
pub fn disk_convexity(
    problem: &Problem,
    center: Vec2,
    radius: f64,
    samples: usize,
) -> Result<ConvexityReport> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::BadInput("disk radius must be positive".into()));
    }
    for (j, s) in problem.singularities().iter().enumerate() {
        let d = s.position.dist(center);
        if (d - radius).abs() <= 1e-9 * problem.scale() {
            return Err(Error::AtCenter { index: j });
        }
        if d > radius {
            return Err(Error::OutOfRange(format!(
                "center {j} lies outside the circle of radius {radius}"
            )));
        }
    }
    let samples = if samples == 0 { DEFAULT_SAMPLES } else { samples };
    let mut min_margin = f64::INFINITY;
    let mut worst = center + Vec2::new(radius, 0.0);
    for k in 0..samples {
        let theta = std::f64::consts::TAU * k as f64 / samples as f64;
        let d = Vec2::from_polar(radius, theta);
        let q = center + d;
        // radius × margin, with ν = −d/radius and κ = 1/radius.
        let m = margin_at(problem, q, -d / radius, 1.0 / radius)? * radius;
        if m < min_margin {
            min_margin = m;
            worst = q;
        }
    }
    Ok(ConvexityReport {
        min_margin,
        samples,
        pass: min_margin >= 0.0,
        worst_point: worst,
    })
}

/// Convexity of the problem's own domain boundary.  Disks go through
/// [`disk_convexity`]; polygon edges are sampled with zero curvature (the
/// corners of a convex polygon only help, so they are not sampled).
pub fn domain_convexity(problem: &Problem, samples: usize) -> Result<ConvexityReport> {
    use crate::model::Domain;
    let samples = if samples == 0 { DEFAULT_SAMPLES } else { samples };
    match problem.domain() {
        Domain::Disk { cx, cy, radius } => {
            disk_convexity(problem, Vec2::new(*cx, *cy), *radius, samples)
        }
        Domain::Polygon { vertices } => {
            let pts: Vec<Vec2> = vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect();
            let n = pts.len();
            let orient = if polygon_signed_area(&pts) >= 0.0 { 1.0 } else { -1.0 };
            let per_edge = (samples / n).max(8);
            let mut min_margin = f64::INFINITY;
            let mut worst = pts[0];
            for i in 0..n {
                let (a, b) = (pts[i], pts[(i + 1) % n]);
                let nu = (b - a).perp().normalized() * orient;
                for k in 0..per_edge {
                    let t = (k as f64 + 0.5) / per_edge as f64;
                    let q = a + (b - a) * t;
                    let m = margin_at(problem, q, nu, 0.0)?;
                    if m < min_margin {
                        min_margin = m;
                        worst = q;
                    }
                }
            }
            Ok(ConvexityReport {
                min_margin,
                samples: per_edge * n,
                pass: min_margin >= 0.0,
                worst_point: worst,
            })
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvexRadius {
    pub radius: f64,
    pub center: Vec2,
    /// The disk report at `radius`; absent when the variational fence produced
    /// a radius whose disk still fails the pointwise margin test.
    pub report: Option<ConvexityReport>,
    /// True when the radius came from the variational fence rather than from
    /// a passing disk.
    pub variational: bool,
}

/// Smallest radius (about the centroid of the singularities) at which the
/// enclosing disk becomes geodesically convex: doubling until the margin
/// turns positive, then bisection on the bracket.
pub fn find_convex_radius(problem: &Problem) -> Result<ConvexRadius> {
    let centers = problem.singularities();
    let centroid = if centers.is_empty() {
        let (lo, hi) = problem.domain().bounding_box();
        (lo + hi) * 0.5
    } else {
        centers.iter().fold(Vec2::ZERO, |s, c| s + c.position) / centers.len() as f64
    };
    let spread = centers
        .iter()
        .map(|c| c.position.dist(centroid))
        .fold(0.0, f64::max);
    let r_min = if spread > 0.0 {
        1.02 * spread
    } else {
        1e-3 * problem.scale()
    };
    let probe = |r: f64| -> Option<ConvexityReport> {
        disk_convexity(problem, centroid, r, DEFAULT_SAMPLES)
            .ok()
            .filter(|rep| rep.pass)
    };

    if let Some(report) = probe(r_min) {
        return Ok(ConvexRadius {
            radius: r_min,
            center: centroid,
            report: Some(report),
            variational: false,
        });
    }
    let mut lo = r_min;
    let mut hi = r_min;
    let mut found = false;
    for _ in 0..40 {
        lo = hi;
        hi *= 2.0;
        if probe(hi).is_some() {
            found = true;
            break;
        }
    }
    if found {
        for _ in 0..90 {
            let mid = 0.5 * (lo + hi);
            if probe(mid).is_some() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if let Some(report) = probe(hi) {
            return Ok(ConvexRadius {
                radius: hi,
                center: centroid,
                report: Some(report),
                variational: false,
            });
        }
    }
    variational_fence(problem, centroid)
}

/// Fence fallback for [`find_convex_radius`]: when no enclosing disk passes
/// the pointwise margin test, minimize in the class that encircles every
/// non-weak center once and report the circumscribed radius of that curve.
/// The minimizer itself provides the barrier, so the resulting disk need not
/// have a nonnegative margin everywhere.
fn variational_fence(problem: &Problem, centroid: Vec2) -> Result<ConvexRadius> {
    use crate::classify::{classify_order, StrengthKind};
    use crate::homotopy::{HomotopyWord, Letter};
    use crate::minimize::{minimize_in_class, MinimizeOptions};

    let mut letters = Vec::new();
    for (j, s) in problem.singularities().iter().enumerate() {
        if classify_order(&s.order)?.kind != StrengthKind::Weak {
            letters.push(Letter { index: j, sign: 1 });
        }
    }
    if letters.len() < 2 {
        return Err(Error::NoConvergence(
            "no convex enclosing disk found, and fewer than two non-weak centers \
             leave the fence class trivial"
                .into(),
        ));
    }
    let word = HomotopyWord::new(letters, true)?;
    let options = MinimizeOptions {
        resolution: 48,
        max_iterations: 400,
        step_tolerance: 1e-8,
        refinement_levels: 1,
        force: true,
        ..MinimizeOptions::default()
    };
    let fence = minimize_in_class(problem, &word, &options)?;
    let radius = fence
        .curve
        .vertices()
        .iter()
        .map(|v| v.dist(centroid))
        .fold(0.0, f64::max)
        * (1.0 + 1e-3);
    if !(radius > 0.0) {
        return Err(Error::NoConvergence("variational fence collapsed to a point".into()));
    }
    let report = disk_convexity(problem, centroid, radius, DEFAULT_SAMPLES).ok();
    Ok(ConvexRadius {
        radius,
        center: centroid,
        report,
        variational: true,
    })
}

/// Sign of the small-circle convexity margin around an isolated center of
/// homogeneity `alpha`: the leading term scales as `(2 − α) m ε^{−α−1}`, so
/// small punctured balls are convex below the critical strength, flat at it,
/// and concave above.
pub fn ball_convexity_sign(alpha: f64) -> Result<i8> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::OutOfRange(format!("order must be positive, got {alpha}")));
    }
    Ok(if alpha < 2.0 {
        1
    } else if alpha == 2.0 {
        0
    } else {
        -1
    })
}
