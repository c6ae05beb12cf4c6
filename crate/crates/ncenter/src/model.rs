//! Problem data: attracting centers, background field, conformal factor,
//! energy level, and the bounded domain the dynamics lives in.
//!
//! The potential is `V(q) = -sum_j m_j / |q - a_j|^alpha_j + U(q)` and the
//! kinetic metric is conformal-Euclidean with factor `g`.  Everything downstream
//! (Jacobi lengths, classification, convexity) reads the problem through this
//! module.

use crate::geom::{polygon_signed_area, Vec2};
use crate::{Error, Result};
use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Power-law order of a center.  Orders written as `"p/q"` strings in configs
/// stay exact rationals so ladder membership can be decided without float
/// round-off; plain numbers are carried as floats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Exact(Ratio<i64>),
    Approx(f64),
}

impl Order {
    pub fn as_f64(&self) -> f64 {
        match self {
            Order::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Order::Approx(a) => *a,
        }
    }

    pub fn exact(&self) -> Option<Ratio<i64>> {
        match self {
            Order::Exact(r) => Some(*r),
            Order::Approx(_) => None,
        }
    }

    /// Parse `"p/q"` or a plain integer string as an exact rational order.
    pub fn parse_exact(s: &str) -> Result<Order> {
        let s = s.trim();
        let (num, den) = match s.split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s, "1"),
        };
        let p: i64 = num
            .parse()
            .map_err(|_| Error::BadInput(format!("bad order numerator in {s:?}")))?;
        let q: i64 = den
            .parse()
            .map_err(|_| Error::BadInput(format!("bad order denominator in {s:?}")))?;
        if q == 0 {
            return Err(Error::BadInput(format!("zero denominator in order {s:?}")));
        }
        Ok(Order::Exact(Ratio::new(p, q)))
    }
}

impl From<f64> for Order {
    fn from(a: f64) -> Self {
        Order::Approx(a)
    }
}

impl From<Ratio<i64>> for Order {
    fn from(r: Ratio<i64>) -> Self {
        Order::Exact(r)
    }
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Order::Exact(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Order::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Order::Approx(a) => write!(f, "{a}"),
        }
    }
}

impl Serialize for Order {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Order::Exact(r) if r.is_integer() => ser.serialize_str(&format!("{}", r.numer())),
            Order::Exact(r) => ser.serialize_str(&format!("{}/{}", r.numer(), r.denom())),
            Order::Approx(a) => ser.serialize_f64(*a),
        }
    }
}

impl<'de> Deserialize<'de> for Order {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(a) => Ok(Order::Approx(a)),
            Raw::Str(s) => Order::parse_exact(&s).map_err(serde::de::Error::custom),
        }
    }
}

/// One attracting center `-m / |q - a|^alpha`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Singularity {
    pub position: Vec2,
    pub mass: f64,
    pub order: Order,
}

/// Bivariate polynomial `sum c[i][j] x^i y^j`, degree capped at 8 per variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial2 {
    coeffs: Vec<Vec<f64>>,
}

pub const MAX_POLY_DEGREE: usize = 8;

impl Polynomial2 {
    pub fn new(coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if coeffs.len() > MAX_POLY_DEGREE + 1 || coeffs.iter().any(|r| r.len() > MAX_POLY_DEGREE + 1)
        {
            return Err(Error::BadInput(format!(
                "polynomial degree exceeds {MAX_POLY_DEGREE}"
            )));
        }
        if coeffs
            .iter()
            .any(|r| r.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::BadInput("non-finite polynomial coefficient".into()));
        }
        Ok(Polynomial2 { coeffs })
    }

    pub fn zero() -> Self {
        Polynomial2 { coeffs: vec![] }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial2 {
            coeffs: vec![vec![c]],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|r| r.iter().all(|&c| c == 0.0))
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(i, r)| r.iter().enumerate().all(|(j, &c)| (i == 0 && j == 0) || c == 0.0))
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn eval(&self, q: Vec2) -> f64 {
        // Horner in x of Horner-in-y rows.
        let mut acc = 0.0;
        for row in self.coeffs.iter().rev() {
            let mut ry = 0.0;
            for &c in row.iter().rev() {
                ry = ry * q.y + c;
            }
            acc = acc * q.x + ry;
        }
        acc
    }

    pub fn gradient(&self, q: Vec2) -> Vec2 {
        let mut gx = 0.0;
        let mut gy = 0.0;
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                if i > 0 {
                    gx += c * i as f64 * q.x.powi(i as i32 - 1) * q.y.powi(j as i32);
                }
                if j > 0 {
                    gy += c * q.x.powi(i as i32) * j as f64 * q.y.powi(j as i32 - 1);
                }
            }
        }
        Vec2::new(gx, gy)
    }
}

/// Bounded planar domain: a disk, or a convex region with polygonal boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Domain {
    Disk {
        cx: f64,
        cy: f64,
        #[serde(rename = "R")]
        radius: f64,
    },
    Polygon { vertices: Vec<[f64; 2]> },
}

impl Domain {
    pub fn disk(center: Vec2, radius: f64) -> Domain {
        Domain::Disk {
            cx: center.x,
            cy: center.y,
            radius,
        }
    }

    pub fn contains(&self, q: Vec2) -> bool {
        match self {
            Domain::Disk { cx, cy, radius } => q.dist(Vec2::new(*cx, *cy)) <= *radius,
            Domain::Polygon { vertices } => {
                // Convexity is validated at construction; inside = on the inner
                // side of every edge for the counterclockwise orientation.
                let n = vertices.len();
                for i in 0..n {
                    let a = Vec2::new(vertices[i][0], vertices[i][1]);
                    let b = Vec2::new(vertices[(i + 1) % n][0], vertices[(i + 1) % n][1]);
                    if (b - a).cross(q - a) < -1e-12 * (b - a).norm() {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// Euclidean projection onto the domain (identity for interior points).
    pub fn project(&self, q: Vec2) -> Vec2 {
        match self {
            Domain::Disk { cx, cy, radius } => {
                let c = Vec2::new(*cx, *cy);
                let d = q - c;
                let n = d.norm();
                if n <= *radius {
                    q
                } else {
                    c + d * (*radius / n)
                }
            }
            Domain::Polygon { vertices } => {
                if self.contains(q) {
                    return q;
                }
                let n = vertices.len();
                let mut best = q;
                let mut best_d = f64::INFINITY;
                for i in 0..n {
                    let a = Vec2::new(vertices[i][0], vertices[i][1]);
                    let b = Vec2::new(vertices[(i + 1) % n][0], vertices[(i + 1) % n][1]);
                    let ab = b - a;
                    let t = ((q - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
                    let p = a + ab * t;
                    let d = q.dist(p);
                    if d < best_d {
                        best_d = d;
                        best = p;
                    }
                }
                best
            }
        }
    }

    /// Axis-aligned bounding box (lo, hi).
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        match self {
            Domain::Disk { cx, cy, radius } => (
                Vec2::new(cx - radius, cy - radius),
                Vec2::new(cx + radius, cy + radius),
            ),
            Domain::Polygon { vertices } => {
                let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
                let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for v in vertices {
                    lo.x = lo.x.min(v[0]);
                    lo.y = lo.y.min(v[1]);
                    hi.x = hi.x.max(v[0]);
                    hi.y = hi.y.max(v[1]);
                }
                (lo, hi)
            }
        }
    }

    /// Distance from `q` to the boundary (positive inside).
    pub fn boundary_distance(&self, q: Vec2) -> f64 {
        match self {
            Domain::Disk { cx, cy, radius } => radius - q.dist(Vec2::new(*cx, *cy)),
            Domain::Polygon { vertices } => {
                let n = vertices.len();
                let mut d = f64::INFINITY;
                for i in 0..n {
                    let a = Vec2::new(vertices[i][0], vertices[i][1]);
                    let b = Vec2::new(vertices[(i + 1) % n][0], vertices[(i + 1) % n][1]);
                    d = d.min(crate::geom::point_segment_distance(q, a, b));
                }
                if self.contains(q) {
                    d
                } else {
                    -d
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Domain::Disk { radius, cx, cy } => {
                if !radius.is_finite() || *radius <= 0.0 || !cx.is_finite() || !cy.is_finite() {
                    return Err(Error::InvalidProblem("disk domain needs finite center and R > 0".into()));
                }
            }
            Domain::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::InvalidProblem("polygon domain needs >= 3 vertices".into()));
                }
                let vs: Vec<Vec2> = vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect();
                if vs.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidProblem("non-finite polygon vertex".into()));
                }
                if polygon_signed_area(&vs) <= 0.0 {
                    return Err(Error::InvalidProblem(
                        "polygon boundary must be counterclockwise and non-degenerate".into(),
                    ));
                }
                // Convex check: all turns weakly left.
                let n = vs.len();
                for i in 0..n {
                    let a = vs[i];
                    let b = vs[(i + 1) % n];
                    let c = vs[(i + 2) % n];
                    if (b - a).cross(c - b) < -1e-12 * (b - a).norm() * (c - b).norm() {
                        return Err(Error::InvalidProblem("polygon domain must be convex".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Position and velocity of a point mass.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhaseState {
    pub position: Vec2,
    pub velocity: Vec2,
}

/// Number of grid samples per axis used to certify `h > V` on the domain.
pub const ENERGY_GRID: usize = 256;

/// A complete fixed-energy problem.  Construction validates the data; the
/// struct then guarantees `h > V` on a dense sample of the domain and a
/// strictly positive conformal factor.
#[derive(Debug, Clone)]
pub struct Problem {
    singularities: Vec<Singularity>,
    background: Polynomial2,
    conformal: Polynomial2,
    energy: f64,
    domain: Domain,
    // Cached at construction:
    sup_v: f64,
    min_separation: f64,
    scale: f64,
}

impl Problem {
    pub fn new(
        singularities: Vec<Singularity>,
        background: Polynomial2,
        conformal: Polynomial2,
        energy: f64,
        domain: Domain,
    ) -> Result<Problem> {
        domain.validate()?;
        if !energy.is_finite() {
            return Err(Error::InvalidProblem("energy must be finite".into()));
        }
        for (i, s) in singularities.iter().enumerate() {
            if !s.position.is_finite() {
                return Err(Error::InvalidProblem(format!("center {i} has non-finite position")));
            }
            if !(s.mass > 0.0) || !s.mass.is_finite() {
                return Err(Error::InvalidProblem(format!("center {i} needs mass > 0")));
            }
            let a = s.order.as_f64();
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::InvalidProblem(format!("center {i} needs order > 0")));
            }
            if domain.boundary_distance(s.position) <= 0.0 {
                return Err(Error::InvalidProblem(format!("center {i} must lie inside the domain")));
            }
        }
        for i in 0..singularities.len() {
            for j in (i + 1)..singularities.len() {
                if singularities[i].position.dist(singularities[j].position) == 0.0 {
                    return Err(Error::InvalidProblem(format!("centers {i} and {j} coincide")));
                }
            }
        }

        let (lo, hi) = domain.bounding_box();
        let scale = (hi - lo).norm().max(1e-12);
        let min_separation = {
            let mut m = f64::INFINITY;
            for i in 0..singularities.len() {
                for j in (i + 1)..singularities.len() {
                    m = m.min(singularities[i].position.dist(singularities[j].position));
                }
            }
            if m.is_finite() {
                m
            } else {
                scale
            }
        };

        let p = Problem {
            singularities,
            background,
            conformal,
            energy,
            domain,
            sup_v: f64::NEG_INFINITY,
            min_separation,
            scale,
        };

        // Certify h > V and g > 0 on a dense grid (plus the boundary for disks).
        let mut sup_v = f64::NEG_INFINITY;
        let n = ENERGY_GRID;
        for i in 0..=n {
            for j in 0..=n {
                let q = Vec2::new(
                    lo.x + (hi.x - lo.x) * i as f64 / n as f64,
                    lo.y + (hi.y - lo.y) * j as f64 / n as f64,
                );
                if !p.domain.contains(q) {
                    continue;
                }
                let g = p.conformal_eval(q);
                if !(g > 0.0) {
                    return Err(Error::InvalidProblem(format!(
                        "conformal factor must be positive on the domain; g({}, {}) = {g}",
                        q.x, q.y
                    )));
                }
                let v = p.potential(q);
                if v > sup_v {
                    sup_v = v;
                }
            }
        }
        if sup_v >= p.energy {
            return Err(Error::InvalidProblem(format!(
                "energy {} is not above the sampled potential maximum {sup_v}",
                p.energy
            )));
        }
        Ok(Problem { sup_v, ..p })
    }

    pub fn singularities(&self) -> &[Singularity] {
        &self.singularities
    }

    pub fn background(&self) -> &Polynomial2 {
        &self.background
    }

    pub fn conformal(&self) -> &Polynomial2 {
        &self.conformal
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Sampled maximum of V over the domain (always < energy).
    pub fn sup_potential(&self) -> f64 {
        self.sup_v
    }

    /// Smallest distance between two centers (domain scale if < 2 centers).
    pub fn min_separation(&self) -> f64 {
        self.min_separation
    }

    /// Characteristic length of the domain.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Potential `V(q)`; `-inf` exactly at a center.
    pub fn potential(&self, q: Vec2) -> f64 {
        let mut v = self.background.eval(q);
        for s in &self.singularities {
            let d = q.dist(s.position);
            v -= s.mass / d.powf(s.order.as_f64());
        }
        v
    }

    /// Potential with an explicit error when `q` is a center.
    pub fn potential_eval(&self, q: Vec2) -> Result<f64> {
        if let Some(i) = self.center_at(q) {
            return Err(Error::AtCenter { index: i });
        }
        Ok(self.potential(q))
    }

    /// Gradient of V away from centers.
    pub fn potential_gradient(&self, q: Vec2) -> Result<Vec2> {
        if let Some(i) = self.center_at(q) {
            return Err(Error::AtCenter { index: i });
        }
        let mut grad = self.background.gradient(q);
        for s in &self.singularities {
            let d = q - s.position;
            let r = d.norm();
            let a = s.order.as_f64();
            // d/dq of -m r^-a  =  a m r^(-a-2) (q - pos)
            grad += d * (a * s.mass * r.powf(-a - 2.0));
        }
        Ok(grad)
    }

    /// Conformal factor `g(q)` (defaults to 1 when the table is empty).
    pub fn conformal_eval(&self, q: Vec2) -> f64 {
        if self.conformal.coeffs().is_empty() {
            1.0
        } else {
            self.conformal.eval(q)
        }
    }

    pub fn conformal_gradient(&self, q: Vec2) -> Vec2 {
        self.conformal.gradient(q)
    }

    /// Index of a center at exactly `q`, if any.
    pub fn center_at(&self, q: Vec2) -> Option<usize> {
        self.singularities
            .iter()
            .position(|s| s.position.x == q.x && s.position.y == q.y)
    }

    /// Index and distance of the center nearest to `q`.
    pub fn nearest_center(&self, q: Vec2) -> Option<(usize, f64)> {
        self.singularities
            .iter()
            .enumerate()
            .map(|(i, s)| (i, q.dist(s.position)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Uniform lower bound for the Jacobi speed per Euclidean length, from the
    /// sampled potential maximum: `sqrt(2 (h - sup V) inf g)`.
    pub fn speed_floor(&self) -> f64 {
        // inf g over the grid; recomputing is cheap relative to construction.
        let (lo, hi) = self.domain.bounding_box();
        let mut inf_g = f64::INFINITY;
        let n = 64;
        for i in 0..=n {
            for j in 0..=n {
                let q = Vec2::new(
                    lo.x + (hi.x - lo.x) * i as f64 / n as f64,
                    lo.y + (hi.y - lo.y) * j as f64 / n as f64,
                );
                if self.domain.contains(q) {
                    inf_g = inf_g.min(self.conformal_eval(q));
                }
            }
        }
        if !inf_g.is_finite() {
            inf_g = 1.0;
        }
        (2.0 * (self.energy - self.sup_v) * inf_g).max(0.0).sqrt()
    }

    /// Total mechanical energy of a state: `g |v|^2 / 2 + V(q)`.
    pub fn state_energy(&self, s: &PhaseState) -> f64 {
        0.5 * self.conformal_eval(s.position) * s.velocity.norm_sq() + self.potential(s.position)
    }
}

// ---------------------------------------------------------------------------
// JSON configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CenterConfig {
    x: f64,
    y: f64,
    mass: f64,
    alpha: Order,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyConfig {
    coeffs: Vec<Vec<f64>>,
}

/// On-disk problem description.  Unknown keys are rejected.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    centers: Vec<CenterConfig>,
    #[serde(rename = "U", skip_serializing_if = "Option::is_none")]
    background: Option<PolyConfig>,
    #[serde(rename = "g", skip_serializing_if = "Option::is_none")]
    conformal: Option<PolyConfig>,
    h: f64,
    domain: Domain,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<ProblemConfig> {
        serde_json::from_str(text).map_err(|e| Error::BadInput(format!("config parse error: {e}")))
    }

    pub fn to_problem(&self) -> Result<Problem> {
        let singularities = self
            .centers
            .iter()
            .map(|c| Singularity {
                position: Vec2::new(c.x, c.y),
                mass: c.mass,
                order: c.alpha,
            })
            .collect();
        let background = match &self.background {
            Some(p) => Polynomial2::new(p.coeffs.clone())?,
            None => Polynomial2::zero(),
        };
        let conformal = match &self.conformal {
            Some(p) => Polynomial2::new(p.coeffs.clone())?,
            None => Polynomial2::zero(),
        };
        Problem::new(singularities, background, conformal, self.h, self.domain.clone())
    }
}

/// Parse a problem straight from config JSON.
pub fn problem_from_json(text: &str) -> Result<Problem> {
    ProblemConfig::from_json(text)?.to_problem()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kepler(h: f64) -> Problem {
        Problem::new(
            vec![Singularity {
                position: Vec2::ZERO,
                mass: 1.0,
                order: Order::Approx(1.0),
            }],
            Polynomial2::zero(),
            Polynomial2::zero(),
            h,
            Domain::disk(Vec2::ZERO, 2.0),
        )
        .unwrap()
    }

    #[test]
    fn potential_and_gradient_values() {
        let p = kepler(1.0);
        let q = Vec2::new(1.0, 0.0);
        assert!((p.potential_eval(q).unwrap() + 1.0).abs() < 1e-15);
        let g = p.potential_gradient(q).unwrap();
        assert!((g - Vec2::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gradient_example_alpha_three_halves() {
        // Single center, m = 2, alpha = 3/2: grad V at (1, 0) is (3, 0).
        let p = Problem::new(
            vec![Singularity {
                position: Vec2::ZERO,
                mass: 2.0,
                order: Order::parse_exact("3/2").unwrap(),
            }],
            Polynomial2::zero(),
            Polynomial2::zero(),
            1.0,
            Domain::disk(Vec2::ZERO, 3.0),
        )
        .unwrap();
        let g = p.potential_gradient(Vec2::new(1.0, 0.0)).unwrap();
        assert!((g - Vec2::new(3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // Oracle: central differences on randomly placed probe points.
        let p = Problem::new(
            vec![
                Singularity {
                    position: Vec2::new(0.4, -0.3),
                    mass: 1.5,
                    order: Order::Approx(1.2),
                },
                Singularity {
                    position: Vec2::new(-0.6, 0.2),
                    mass: 0.7,
                    order: Order::parse_exact("1/2").unwrap(),
                },
            ],
            Polynomial2::new(vec![vec![0.0, 0.1], vec![0.2, -0.05]]).unwrap(),
            Polynomial2::zero(),
            5.0,
            Domain::disk(Vec2::ZERO, 2.0),
        )
        .unwrap();
        let probes = [
            Vec2::new(1.0, 0.9),
            Vec2::new(-0.2, -1.1),
            Vec2::new(0.9, -0.8),
            Vec2::new(-1.2, 0.7),
        ];
        let eps = 1e-6;
        for q in probes {
            let g = p.potential_gradient(q).unwrap();
            let fd = Vec2::new(
                (p.potential(q + Vec2::new(eps, 0.0)) - p.potential(q - Vec2::new(eps, 0.0)))
                    / (2.0 * eps),
                (p.potential(q + Vec2::new(0.0, eps)) - p.potential(q - Vec2::new(0.0, eps)))
                    / (2.0 * eps),
            );
            assert!((g - fd).norm() <= 1e-6 * (1.0 + g.norm()), "q={q:?} g={g:?} fd={fd:?}");
        }
    }

    #[test]
    fn energy_must_clear_potential() {
        // h below the sampled sup of V must be rejected: U = 10 makes V ~ 10 far
        // from the center, so h = 1 fails.
        let r = Problem::new(
            vec![Singularity {
                position: Vec2::ZERO,
                mass: 1.0,
                order: Order::Approx(1.0),
            }],
            Polynomial2::constant(10.0),
            Polynomial2::zero(),
            1.0,
            Domain::disk(Vec2::ZERO, 2.0),
        );
        assert!(matches!(r, Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn config_round_trip_and_unknown_keys() {
        let text = r#"{
            "centers": [{"x": 1.0, "y": 0.0, "mass": 1.0, "alpha": "4/3"}],
            "U": {"coeffs": [[0.0]]},
            "h": 1.0,
            "domain": {"type": "disk", "cx": 0.0, "cy": 0.0, "R": 3.0}
        }"#;
        let p = problem_from_json(text).unwrap();
        assert_eq!(p.singularities().len(), 1);
        assert_eq!(
            p.singularities()[0].order.exact().unwrap(),
            Ratio::new(4, 3)
        );

        let bad = r#"{
            "centers": [{"x": 1.0, "y": 0.0, "mass": 1.0, "alpha": 1.0, "extra": 3}],
            "h": 1.0,
            "domain": {"type": "disk", "cx": 0.0, "cy": 0.0, "R": 3.0}
        }"#;
        assert!(problem_from_json(bad).is_err());
    }

    #[test]
    fn state_energy_is_h_for_jacobi_speed() {
        let p = kepler(1.0);
        let q = Vec2::new(1.0, 0.5);
        let speed = (2.0 * (p.energy() - p.potential(q))).sqrt();
        let s = PhaseState {
            position: q,
            velocity: Vec2::from_polar(speed, 0.7),
        };
        assert!((p.state_energy(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polygon_domain_validation() {
        // Counterclockwise convex quadrilateral is fine.
        let ok = Domain::Polygon {
            vertices: vec![[-2.0, -2.0], [2.0, -2.0], [2.0, 2.0], [-2.0, 2.0]],
        };
        assert!(ok.validate().is_ok());
        assert!(ok.contains(Vec2::ZERO));
        assert!(!ok.contains(Vec2::new(3.0, 0.0)));
        // Clockwise ordering is rejected.
        let cw = Domain::Polygon {
            vertices: vec![[-2.0, -2.0], [-2.0, 2.0], [2.0, 2.0], [2.0, -2.0]],
        };
        assert!(cw.validate().is_err());
        // Non-convex polygon is rejected.
        let bent = Domain::Polygon {
            vertices: vec![[-2.0, -2.0], [2.0, -2.0], [0.0, 0.0], [2.0, 2.0], [-2.0, 2.0]],
        };
        assert!(bent.validate().is_err());
    }
}
