//! Regularizing cone charts around centers of order < 2.
//!
//! Around a center of order `alpha` the Jacobi metric is a cone of total
//! angle `2π/β` with `β = 2/(2−α)`.  The chart coordinate `w` with
//! `z = a + w^β` flattens the metric: the pulled-back speed is
//! `β √(2 g(z) (m + (h − V_rest(z)) |w|^{2(β−1)})) |dw|`, smooth through
//! `w = 0` where it tends to `c = β √(2 m g(a))`.  Several small lemmas about
//! these cones (chord bounds, the strict triangle-type inequality at the
//! apex) are verified numerically here on a fine graph.

use crate::geom::Vec2;
use crate::model::{Order, Problem};
use crate::{Error, Result};
use num_rational::Ratio;
use std::collections::BinaryHeap;

/// `β = 2/(2−α)` for `α ∈ (0, 2)`; the metric is complete from order 2 on
/// and has no cone chart.
pub fn beta_of_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::OutOfRange(format!(
            "cone charts need order in (0, 2), got {alpha}"
        )));
    }
    Ok(2.0 / (2.0 - alpha))
}

/// Order of the singularity after a degree-k root chart: `2 − k(2 − alpha)`.
/// Vanishes exactly on the regularizable ladder `alpha = 2 − 2/k`, and fixes
/// `alpha = 2`.
pub fn transformed_order(alpha: f64, k: u32) -> f64 {
    2.0 - k as f64 * (2.0 - alpha)
}

/// Exact-rational version of `transformed_order`.
pub fn transformed_order_exact(alpha: Ratio<i64>, k: u32) -> Ratio<i64> {
    let two = Ratio::from_integer(2);
    two - Ratio::from_integer(k as i64) * (two - alpha)
}

/// Local root chart `z = a_j + w^β` around one center.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConeChart {
    pub center_index: usize,
    /// Singularity order of the chart's center.
    pub alpha: f64,
    /// `β = 2/(2−α)`, the root degree of the chart.
    pub beta: f64,
    /// `Some(k)` when β is the integer k: the chart closes up smoothly and
    /// curves may pass through the center.
    pub order_k: Option<u32>,
    /// Chart radius in base coordinates: the chart covers `|z − a_j| ≤ ε`.
    pub epsilon: f64,
    /// Total cone angle `2π/β` (< 2π).
    pub total_angle: f64,
}

impl ConeChart {
    /// Chart with an explicit base radius.
    pub fn with_radius(problem: &Problem, center_index: usize, epsilon: f64) -> Result<ConeChart> {
        let s = problem
            .singularities()
            .get(center_index)
            .ok_or_else(|| Error::OutOfRange(format!("no center {center_index}")))?;
        let alpha = s.order.as_f64();
        let beta = beta_of_alpha(alpha)?;
        if !(epsilon > 0.0) {
            return Err(Error::OutOfRange("chart radius must be positive".into()));
        }
        let order_k = match &s.order {
            Order::Exact(r) => {
                let b = Ratio::from_integer(2) / (Ratio::from_integer(2) - *r);
                (b.is_integer() && b >= Ratio::from_integer(2)).then(|| *b.numer() as u32)
            }
            Order::Approx(_) => {
                let k = beta.round();
                ((beta - k).abs() < 1e-9 && k >= 2.0).then_some(k as u32)
            }
        };
        Ok(ConeChart {
            center_index,
            alpha,
            beta,
            order_k,
            epsilon,
            total_angle: 2.0 * std::f64::consts::PI / beta,
        })
    }

    /// Chart with the default radius: large enough to be useful, small enough
    /// that the sampled metric perturbation `C ε_w^{2(β−1)}` stays below 5%
    /// of the apex speed `c`, and clear of other centers and the boundary.
    pub fn for_center(problem: &Problem, center_index: usize) -> Result<ConeChart> {
        let s = problem
            .singularities()
            .get(center_index)
            .ok_or_else(|| Error::OutOfRange(format!("no center {center_index}")))?;
        let a = s.position;
        let mut limit = 0.45 * problem.domain().boundary_distance(a);
        for (i, o) in problem.singularities().iter().enumerate() {
            if i != center_index {
                limit = limit.min(0.45 * a.dist(o.position));
            }
        }
        let mut chart = ConeChart::with_radius(problem, center_index, limit)?;
        let c = chart.apex_speed(problem);
        // Estimate the perturbation constant on the trial chart and shrink.
        for _ in 0..4 {
            let rw = chart.w_radius();
            let mut cc: f64 = 0.0;
            for i in 1..=8 {
                for j in 0..8 {
                    let w = Vec2::from_polar(
                        rw * i as f64 / 8.0,
                        chart.total_angle * (j as f64 + 0.5) / 8.0,
                    );
                    if let Ok(f) = pullback_speed(problem, &chart, w, Vec2::new(1.0, 0.0)) {
                        let dev = (f - c).abs() / w.norm().powf(2.0 * (chart.beta - 1.0));
                        cc = cc.max(dev);
                    }
                }
            }
            if cc * rw.powf(2.0 * (chart.beta - 1.0)) <= 0.05 * c {
                break;
            }
            let rw_new = (0.05 * c / cc).powf(0.5 / (chart.beta - 1.0));
            chart.epsilon = rw_new.min(rw * 0.8).powf(chart.beta);
        }
        Ok(chart)
    }

    /// Chart radius in w coordinates.
    pub fn w_radius(&self) -> f64 {
        self.epsilon.powf(1.0 / self.beta)
    }

    /// Base point `z = a_j + w^β`.
    pub fn to_base(&self, problem: &Problem, w: Vec2) -> Vec2 {
        problem.singularities()[self.center_index].position + cpow(w, self.beta)
    }

    /// Push a chart vector forward: `dz = β w^{β−1} dw`.
    pub fn push_vector(&self, w: Vec2, dw: Vec2) -> Vec2 {
        cpow(w, self.beta - 1.0).cmul(dw) * self.beta
    }

    /// Finite chart speed at the apex per unit `|dw|`: `β √(2 m g(a))`.
    pub fn apex_speed(&self, problem: &Problem) -> f64 {
        let s = &problem.singularities()[self.center_index];
        self.beta * (2.0 * s.mass * problem.conformal_eval(s.position)).sqrt()
    }
}

/// Complex power by polar decomposition (principal branch).
fn cpow(w: Vec2, p: f64) -> Vec2 {
    let r = w.norm();
    if r == 0.0 {
        return Vec2::ZERO;
    }
    Vec2::from_polar(r.powf(p), w.angle() * p)
}

/// Potential with center `j`'s own singular term removed.
fn potential_rest(problem: &Problem, j: usize, z: Vec2) -> f64 {
    let mut v = problem.background().eval(z);
    for (i, s) in problem.singularities().iter().enumerate() {
        if i != j {
            v -= s.mass / z.dist(s.position).powf(s.order.as_f64());
        }
    }
    v
}

/// Jacobi speed of the pushed-forward vector, evaluated in the chart.
///
/// Equal to `jacobi_speed(z, dz)` with `z = a + w^β`, `dz = β w^{β−1} dw`,
/// but written in the factored form
/// `β √(2 g(z) (m + (h − V_rest(z)) |w|^{2(β−1)})) |dw|`
/// in which the singular factors have cancelled exactly, so it stays finite
/// and accurate through `w = 0`.
pub fn pullback_speed(problem: &Problem, chart: &ConeChart, w: Vec2, dw: Vec2) -> Result<f64> {
    let r = w.norm();
    if r > chart.w_radius() * (1.0 + 1e-12) {
        return Err(Error::OutOfRange(format!(
            "|w| = {r} outside the chart (w-radius {})",
            chart.w_radius()
        )));
    }
    let s = &problem.singularities()[chart.center_index];
    let z = chart.to_base(problem, w);
    let g = problem.conformal_eval(z);
    let rest = problem.energy() - potential_rest(problem, chart.center_index, z);
    let radicand = 2.0 * g * (s.mass + rest * r.powf(2.0 * (chart.beta - 1.0)));
    if !(radicand >= 0.0) {
        return Err(Error::OutsideHillRegion { x: z.x, y: z.y });
    }
    Ok(chart.beta * radicand.sqrt() * dw.norm())
}

/// Longest chord of the flat cone of total angle `2π/β` and radius `eps`:
/// `2 eps sin(π/(2β))`.
pub fn cone_chord_bound(beta: f64, eps: f64) -> f64 {
    2.0 * eps * (std::f64::consts::PI / (2.0 * beta)).sin()
}

/// Outcome of the numerical cone-lemma check around one center.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConeLemmaReport {
    /// Worst observed `ρ(x,y) / (ρ(x,a) + ρ(a,y))` over the sampled pairs.
    pub max_ratio: f64,
    /// The flat-cone constant: `sin(π/(2β))`, or `sin(π/β)` for the doubled
    /// chart.
    pub lambda: f64,
    pub epsilon: f64,
    pub samples: usize,
    pub doubled: bool,
    /// `max_ratio ≤ lambda · 1.05`.
    pub pass: bool,
}

/// Check the strict apex triangle inequality `ρ(x,y) < λ (ρ(x,a) + ρ(a,y))`
/// on the ε-circle around center `j`, with distances computed by Dijkstra on
/// a fine polar graph carrying the pulled-back metric.
///
/// With `doubled`, the check runs on the double cover of the chart (total
/// angle `4π/β`), which is only a cone — and the inequality only strict —
/// for orders above Newtonian (`α > 1`).
pub fn verify_cone_lemma<R: rand::Rng>(
    problem: &Problem,
    j: usize,
    epsilon: f64,
    samples: usize,
    doubled: bool,
    rng: &mut R,
) -> Result<ConeLemmaReport> {
    let chart = ConeChart::with_radius(problem, j, epsilon)?;
    if doubled && chart.alpha <= 1.0 {
        return Err(Error::OutOfRange(format!(
            "doubled cone needs order > 1 (got {}): the doubled total angle 4π/β reaches 2π",
            chart.alpha
        )));
    }
    let lambda = if doubled {
        (std::f64::consts::PI / chart.beta).sin()
    } else {
        (std::f64::consts::PI / (2.0 * chart.beta)).sin()
    };

    let grid = ConeGrid::build(problem, &chart, doubled)?;
    let apex_dist = grid.dijkstra(GridNode::Apex);

    let mut max_ratio: f64 = 0.0;
    for _ in 0..samples {
        let xi = rng.gen_range(0..grid.n_theta);
        let mut yi = rng.gen_range(0..grid.n_theta);
        while yi == xi {
            yi = rng.gen_range(0..grid.n_theta);
        }
        let from = grid.dijkstra(GridNode::Ring(xi));
        let rho_xy = from[grid.index(GridNode::Ring(yi))];
        let rho_xa = from[grid.index(GridNode::Apex)];
        let rho_ay = apex_dist[grid.index(GridNode::Ring(yi))];
        let ratio = rho_xy / (rho_xa + rho_ay);
        max_ratio = max_ratio.max(ratio);
    }
    Ok(ConeLemmaReport {
        max_ratio,
        lambda,
        epsilon,
        samples,
        doubled,
        pass: max_ratio <= lambda * 1.05,
    })
}

#[derive(Clone, Copy)]
enum GridNode {
    Apex,
    /// Boundary-ring node at this angular index.
    Ring(usize),
}

/// Polar graph over the (possibly doubled) cone chart with precomputed node
/// speeds; distances by Dijkstra over a dense primitive-direction stencil.
struct ConeGrid {
    n_r: usize,
    n_theta: usize,
    dr: f64,
    dtheta: f64,
    /// Pullback speed per unit |dw| at each node, apex first.
    speed: Vec<f64>,
    /// Primitive stencil directions (radial steps, angular steps).
    stencil: Vec<(i64, i64)>,
}

impl ConeGrid {
    fn build(problem: &Problem, chart: &ConeChart, doubled: bool) -> Result<ConeGrid> {
        let total = chart.total_angle * if doubled { 2.0 } else { 1.0 };
        let n_r = 110;
        let n_theta = ((total / (2.0 * std::f64::consts::PI) * 640.0).round() as usize).max(96);
        let rw = chart.w_radius();
        let dr = rw / n_r as f64;
        let dtheta = total / n_theta as f64;

        let mut speed = Vec::with_capacity(1 + n_r * n_theta);
        speed.push(chart.apex_speed(problem));
        let unit = Vec2::new(1.0, 0.0);
        for i in 1..=n_r {
            for t in 0..n_theta {
                let w = Vec2::from_polar(i as f64 * dr, t as f64 * dtheta);
                speed.push(pullback_speed(problem, chart, w, unit)?);
            }
        }

        let mut stencil = Vec::new();
        for a in -3i64..=3 {
            for b in -3i64..=3 {
                if (a, b) != (0, 0) && gcd(a.unsigned_abs(), b.unsigned_abs()) == 1 {
                    stencil.push((a, b));
                }
            }
        }
        Ok(ConeGrid {
            n_r,
            n_theta,
            dr,
            dtheta,
            speed,
            stencil,
        })
    }

    fn index(&self, node: GridNode) -> usize {
        match node {
            GridNode::Apex => 0,
            GridNode::Ring(t) => 1 + (self.n_r - 1) * self.n_theta + t,
        }
    }

    fn node_id(&self, i: usize, t: usize) -> usize {
        1 + (i - 1) * self.n_theta + t
    }

    /// Chord length in the flat cone between polar nodes (i1, t1), (i2, t2).
    fn chord(&self, i1: i64, dt: i64, i2: i64) -> f64 {
        let r1 = i1 as f64 * self.dr;
        let r2 = i2 as f64 * self.dr;
        let ang = dt as f64 * self.dtheta;
        (r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * ang.cos()).max(0.0).sqrt()
    }

    fn dijkstra(&self, source: GridNode) -> Vec<f64> {
        let n = self.speed.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap: BinaryHeap<HeapItem> = BinaryHeap::new();
        let s = self.index(source);
        dist[s] = 0.0;
        heap.push(HeapItem(0.0, s));
        while let Some(HeapItem(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            if u == 0 {
                // Apex connects radially to the whole first ring.
                for t in 0..self.n_theta {
                    let v = self.node_id(1, t);
                    let w = d + self.dr * 0.5 * (self.speed[0] + self.speed[v]);
                    if w < dist[v] {
                        dist[v] = w;
                        heap.push(HeapItem(w, v));
                    }
                }
                continue;
            }
            let i = ((u - 1) / self.n_theta + 1) as i64;
            let t = ((u - 1) % self.n_theta) as i64;
            for &(a, b) in &self.stencil {
                let i2 = i + a;
                if i2 < 1 || i2 > self.n_r as i64 {
                    if i2 == 0 && b == 0 {
                        // Step onto the apex.
                        let w = d + self.dr * 0.5 * (self.speed[u] + self.speed[0]);
                        if w < dist[0] {
                            dist[0] = w;
                            heap.push(HeapItem(w, 0));
                        }
                    }
                    continue;
                }
                let t2 = (t + b).rem_euclid(self.n_theta as i64);
                let v = self.node_id(i2 as usize, t2 as usize);
                let w = d + self.chord(i, b, i2) * 0.5 * (self.speed[u] + self.speed[v]);
                if w < dist[v] {
                    dist[v] = w;
                    heap.push(HeapItem(w, v));
                }
            }
        }
        dist
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Min-heap item ordered by distance.
struct HeapItem(f64, usize);

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0 && self.1 == other.1
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.0.total_cmp(&self.0)
    }
}
