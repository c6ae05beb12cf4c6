//! Free-homotopy classes of curves in the punctured domain, encoded as words
//! in the free group on one generator per center.
//!
//! The generator `x_j` is "one counterclockwise turn around center j".
//! Concretely the word of a curve is its sequence of signed transversal
//! crossings with a downward ray hung from each center, freely (and, for
//! closed curves, cyclically) reduced.

use crate::geom::Vec2;
use crate::jacobi::DiscreteCurve;
use crate::model::Problem;
use crate::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// One signed generator: `index` is the 0-based center, `sign` is ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub index: usize,
    pub sign: i8,
}

impl Letter {
    pub fn inverse(self) -> Letter {
        Letter {
            index: self.index,
            sign: -self.sign,
        }
    }
}

/// A word in the free group on generators `x_1 … x_n`; `cyclic` words are
/// classes of closed curves, defined up to cyclic permutation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HomotopyWord {
    letters: Vec<Letter>,
    cyclic: bool,
}

impl HomotopyWord {
    pub fn new(letters: Vec<Letter>, cyclic: bool) -> Result<HomotopyWord> {
        for l in &letters {
            if l.sign != 1 && l.sign != -1 {
                return Err(Error::Word(format!("letter sign must be ±1, got {}", l.sign)));
            }
        }
        Ok(reduce_word(&HomotopyWord { letters, cyclic }))
    }

    pub fn empty(cyclic: bool) -> HomotopyWord {
        HomotopyWord {
            letters: Vec::new(),
            cyclic,
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn cyclic(&self) -> bool {
        self.cyclic
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Largest generator index mentioned, if any.
    pub fn max_index(&self) -> Option<usize> {
        self.letters.iter().map(|l| l.index).max()
    }

    /// Exponent sum of generator `j` — the winding number around center j.
    pub fn exponent_sum(&self, j: usize) -> i64 {
        self.letters
            .iter()
            .filter(|l| l.index == j)
            .map(|l| l.sign as i64)
            .sum()
    }

    /// The inverse class: reversed order, every letter inverted.
    pub fn inverse(&self) -> HomotopyWord {
        HomotopyWord {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
            cyclic: self.cyclic,
        }
    }

    fn shifted(&self, k: usize) -> Vec<Letter> {
        let n = self.letters.len();
        (0..n).map(|i| self.letters[(i + k) % n]).collect()
    }

    /// Canonical representative modulo cyclic shift and inversion, for use as
    /// a dedup key when enumerating classes.
    pub fn canonical_key(&self) -> Vec<(usize, i8)> {
        let encode = |ls: &[Letter]| ls.iter().map(|l| (l.index, l.sign)).collect::<Vec<_>>();
        let mut best: Option<Vec<(usize, i8)>> = None;
        for w in [self.clone(), self.inverse()] {
            let w = reduce_word(&w);
            let n = w.letters.len().max(1);
            for k in 0..n {
                let cand = encode(&w.shifted(k % n.max(1)));
                if best.as_ref().map_or(true, |b| cand < *b) {
                    best = Some(cand);
                }
            }
        }
        best.unwrap_or_default()
    }
}

/// Freely reduce; cyclically reduce as well when the word is cyclic.
/// Idempotent.
pub fn reduce_word(word: &HomotopyWord) -> HomotopyWord {
    let mut stack: Vec<Letter> = Vec::with_capacity(word.letters.len());
    for &l in &word.letters {
        if stack.last().copied() == Some(l.inverse()) {
            stack.pop();
        } else {
            stack.push(l);
        }
    }
    if word.cyclic {
        while stack.len() >= 2 && *stack.first().unwrap() == stack.last().unwrap().inverse() {
            stack.pop();
            stack.remove(0);
        }
    }
    HomotopyWord {
        letters: stack,
        cyclic: word.cyclic,
    }
}

/// True iff the class is contractible in the domain minus large balls: the
/// reduced word is empty or a power of a single generator (a loop that
/// retracts into one puncture's neighborhood).
pub fn is_trivial(word: &HomotopyWord) -> bool {
    let w = reduce_word(word);
    match w.letters.first() {
        None => true,
        Some(first) => w.letters.iter().all(|l| l.index == first.index),
    }
}

/// Conservative syntactic admissibility: no simple subloop of the curve can
/// bound a disk containing exactly one center.
///
/// We accept exactly the reduced cyclic words of length ≥ 2 whose letters all
/// carry the same sign and in which no two cyclically adjacent letters repeat
/// a generator.  Any removable one-puncture subloop shows up syntactically as
/// an isolated `u x_j^{±1} u⁻¹` (which forces a sign change unless `u` is
/// empty) or as a repeated adjacent generator; both are excluded.  The test is
/// sufficient but not necessary — some admissible classes are rejected.
pub fn is_admissible(word: &HomotopyWord) -> bool {
    let w = reduce_word(word);
    let n = w.letters.len();
    if n < 2 {
        return false;
    }
    let sign0 = w.letters[0].sign;
    if w.letters.iter().any(|l| l.sign != sign0) {
        return false;
    }
    (0..n).all(|i| w.letters[i].index != w.letters[(i + 1) % n].index)
}

/// True iff the class equals its own time reversal composed with the sheet
/// involution that inverts every generator.  Reversal inverts the word
/// (reverse order, inverted letters) and the involution inverts letters
/// again, so the syntactic test is: some cyclic shift of the word equals its
/// plain reversal, signs intact.
pub fn is_reversible(word: &HomotopyWord) -> bool {
    let w = reduce_word(word);
    let n = w.letters.len();
    if n == 0 {
        return true;
    }
    let rev: Vec<Letter> = w.letters.iter().rev().copied().collect();
    (0..n).any(|k| w.shifted(k) == rev)
}

impl fmt::Display for HomotopyWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for l in &self.letters {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "x{}", l.index + 1)?;
            if l.sign < 0 {
                write!(f, "^-1")?;
            }
        }
        Ok(())
    }
}

impl FromStr for HomotopyWord {
    type Err = Error;

    /// Parses words like `"x1 x2^-1 x1"`; powers `x1^3` and `x2^-2` expand.
    fn from_str(s: &str) -> Result<HomotopyWord> {
        let mut letters = Vec::new();
        for tok in s.split_whitespace() {
            let rest = tok
                .strip_prefix('x')
                .ok_or_else(|| Error::Word(format!("bad token {tok:?}: expected x<j>[^±m]")))?;
            let (idx_str, exp) = match rest.split_once('^') {
                Some((i, e)) => (
                    i,
                    e.parse::<i64>()
                        .map_err(|_| Error::Word(format!("bad exponent in {tok:?}")))?,
                ),
                None => (rest, 1),
            };
            let idx: usize = idx_str
                .parse()
                .map_err(|_| Error::Word(format!("bad generator index in {tok:?}")))?;
            if idx == 0 {
                return Err(Error::Word("generators are numbered from x1".into()));
            }
            if exp == 0 || exp.unsigned_abs() > 64 {
                return Err(Error::Word(format!("exponent out of range in {tok:?}")));
            }
            for _ in 0..exp.unsigned_abs() {
                letters.push(Letter {
                    index: idx - 1,
                    sign: if exp > 0 { 1 } else { -1 },
                });
            }
        }
        HomotopyWord::new(letters, true)
    }
}

impl serde::Serialize for HomotopyWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for HomotopyWord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ray angles tried in order until every crossing is transversal and
/// unambiguous: straight down, then tilted by i·1e−7 rad.
const RAY_ATTEMPTS: usize = 64;
const RAY_TILT_STEP: f64 = 1e-7;

/// The word of a polygonal curve with respect to downward rays from the given
/// centers.  Errors if the curve touches a center.
pub fn word_of_curve(curve: &DiscreteCurve, centers: &[Vec2]) -> Result<HomotopyWord> {
    for (i, c) in centers.iter().enumerate() {
        for v in curve.vertices() {
            if v == c {
                return Err(Error::AtCenter { index: i });
            }
        }
        for (a, b) in curve.segments() {
            if crate::geom::point_segment_distance(*c, a, b) < 1e-13 {
                return Err(Error::AtCenter { index: i });
            }
        }
    }

    'attempt: for attempt in 0..RAY_ATTEMPTS {
        let theta = -std::f64::consts::FRAC_PI_2 + attempt as f64 * RAY_TILT_STEP;
        let u = Vec2::new(theta.cos(), theta.sin());
        // (segment index, parameter along segment, letter)
        let mut crossings: Vec<(usize, f64, Letter)> = Vec::new();
        for (j, &c) in centers.iter().enumerate() {
            for (s, (p, q)) in curve.segments().enumerate() {
                let d = q - p;
                if d.norm() == 0.0 {
                    // Repeated vertex: the degenerate segment crosses nothing.
                    continue;
                }
                let det = d.cross(u);
                let rel = c - p;
                if det.abs() < 1e-14 * d.norm().max(1.0) {
                    // Segment parallel to the ray: reject the angle if the
                    // segment lies on the ray's line near it.
                    if rel.cross(d).abs() < 1e-12 * d.norm().max(1.0) {
                        continue 'attempt;
                    }
                    continue;
                }
                let t = rel.cross(u) / det;
                let tau = rel.cross(d) / det;
                // The ray is { c + tau·u : tau > 0 } (pointing down).
                if t < -1e-12 || t > 1.0 + 1e-12 || tau < -1e-12 {
                    continue;
                }
                if t < 1e-12 || t > 1.0 - 1e-12 || tau < 1e-12 {
                    // Vertex on a ray, or the segment grazes the center.
                    continue 'attempt;
                }
                let sign = if u.cross(d) > 0.0 { 1 } else { -1 };
                crossings.push((s, t, Letter { index: j, sign }));
            }
        }
        crossings.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
        // Two rays meeting one segment at the same parameter would leave the
        // letter order ambiguous.
        for w in crossings.windows(2) {
            if w[0].0 == w[1].0 && (w[0].1 - w[1].1).abs() < 1e-10 {
                continue 'attempt;
            }
        }
        let letters = crossings.into_iter().map(|(_, _, l)| l).collect();
        return HomotopyWord::new(letters, curve.closed());
    }
    Err(Error::Word(
        "ray perturbation schedule exhausted without a clean crossing pattern".into(),
    ))
}

/// Internal: like `word_of_curve` but starting the angle schedule at a given
/// attempt, for testing angle independence.
#[doc(hidden)]
pub fn word_of_curve_from_attempt(
    curve: &DiscreteCurve,
    centers: &[Vec2],
    start: usize,
) -> Result<HomotopyWord> {
    // Cheap wrapper: re-run with the tilt baked in by rotating center rays is
    // not possible from outside, so we just re-do the loop here.
    let sub = |attempt: usize| -> Result<Option<HomotopyWord>> {
        let theta = -std::f64::consts::FRAC_PI_2 + attempt as f64 * RAY_TILT_STEP;
        let u = Vec2::new(theta.cos(), theta.sin());
        let mut crossings: Vec<(usize, f64, Letter)> = Vec::new();
        for (j, &c) in centers.iter().enumerate() {
            for (s, (p, q)) in curve.segments().enumerate() {
                let d = q - p;
                if d.norm() == 0.0 {
                    continue;
                }
                let det = d.cross(u);
                let rel = c - p;
                if det.abs() < 1e-14 * d.norm().max(1.0) {
                    if rel.cross(d).abs() < 1e-12 * d.norm().max(1.0) {
                        return Ok(None);
                    }
                    continue;
                }
                let t = rel.cross(u) / det;
                let tau = rel.cross(d) / det;
                if t < -1e-12 || t > 1.0 + 1e-12 || tau < -1e-12 {
                    continue;
                }
                if t < 1e-12 || t > 1.0 - 1e-12 || tau < 1e-12 {
                    return Ok(None);
                }
                let sign = if u.cross(d) > 0.0 { 1 } else { -1 };
                crossings.push((s, t, Letter { index: j, sign }));
            }
        }
        crossings.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
        for w in crossings.windows(2) {
            if w[0].0 == w[1].0 && (w[0].1 - w[1].1).abs() < 1e-10 {
                return Ok(None);
            }
        }
        let letters = crossings.into_iter().map(|(_, _, l)| l).collect();
        Ok(Some(HomotopyWord::new(letters, curve.closed())?))
    };
    for attempt in start..start + RAY_ATTEMPTS {
        if let Some(w) = sub(attempt)? {
            return Ok(w);
        }
    }
    Err(Error::Word("ray schedule exhausted".into()))
}

/// Build a closed polygonal curve realizing `word` exactly, verified by a
/// `word_of_curve` round trip, with at least `resolution` vertices.
///
/// The curve hangs letter gadgets from a rail that tracks the upper domain
/// boundary: each gadget dives between the target center and its horizontal
/// neighbors, passes underneath it once (that single pass contributes the
/// letter), and retreats the way it came.  Centers vertically aligned with
/// the target are crossed twice in cancelling order, so each gadget freely
/// reduces to its letter and the concatenation reduces to the word.
pub fn seed_curve(word: &HomotopyWord, problem: &Problem, resolution: usize) -> Result<DiscreteCurve> {
    let w = reduce_word(word);
    if w.is_empty() {
        return Err(Error::TrivialClass(
            "empty word: the infimum is attained on a point curve".into(),
        ));
    }
    let centers: Vec<Vec2> = problem
        .singularities()
        .iter()
        .map(|s| s.position)
        .collect();
    if let Some(max) = w.max_index() {
        if max >= centers.len() {
            return Err(Error::Word(format!(
                "word references x{} but the problem has {} centers",
                max + 1,
                centers.len()
            )));
        }
    }

    // Occurrence counter per center, to offset repeated gadgets.
    let mut seen = vec![0usize; centers.len()];
    let occurrences: Vec<usize> = w
        .letters()
        .iter()
        .map(|l| {
            let o = seen[l.index];
            seen[l.index] += 1;
            o
        })
        .collect();
    let radius0 = 0.25 * problem.min_separation();

    for shrink in 0..6 {
        let scale = 0.5f64.powi(shrink);
        if let Ok(curve) = try_seed(problem, &centers, &w, &occurrences, radius0 * scale) {
            if word_of_curve(&curve, &centers).map_or(false, |got| got == w) {
                return Ok(curve.densified(resolution.max(curve.len())));
            }
        }
    }
    Err(Error::Word(format!(
        "could not realize the word {w} inside the domain"
    )))
}

fn try_seed(
    problem: &Problem,
    centers: &[Vec2],
    word: &HomotopyWord,
    occurrences: &[usize],
    radius: f64,
) -> Result<DiscreteCurve> {
    let domain = problem.domain();
    let mut verts: Vec<Vec2> = Vec::new();

    // Rail height at a given x: just below the upper domain boundary, clamped
    // to clear every center column it passes over.
    let clearance: f64 = centers
        .iter()
        .map(|c| domain.boundary_distance(*c))
        .fold(f64::INFINITY, f64::min)
        .min(radius)
        * 0.5;
    let rail_y = |x: f64| -> Option<f64> {
        let top = upper_boundary(domain, x)?;
        Some(top - clearance)
    };

    for (pos, l) in word.letters().iter().enumerate() {
        let c = centers[l.index];
        // Shrink repeated gadgets so they do not overlap each other.
        let occ = occurrences[pos];
        let total = occurrences
            .iter()
            .zip(word.letters())
            .filter(|(_, m)| m.index == l.index)
            .count();
        let f = 1.0 - 0.35 * occ as f64 / total.max(1) as f64;

        // Horizontal gaps to the nearest center columns strictly left/right;
        // centers sharing the exact x-coordinate are handled by the gadget's
        // cancelling double pass.
        let mut gap_l = f64::INFINITY;
        let mut gap_r = f64::INFINITY;
        for other in centers {
            let dx = other.x - c.x;
            if dx < 0.0 {
                gap_l = gap_l.min(-dx);
            } else if dx > 0.0 {
                gap_r = gap_r.min(dx);
            }
        }
        let d_l = (0.5 * gap_l).min(radius) * f;
        let d_r = (0.5 * gap_r).min(radius) * f;
        let (x_l, x_r) = (c.x - d_l, c.x + d_r);
        let x_exit = x_l + 0.25 * d_l;
        let y_bot = c.y - radius * f;
        let y_mid = c.y + radius * f * 0.8;

        let (y_in, y_out) = match (rail_y(x_l), rail_y(x_exit), rail_y(x_r)) {
            (Some(a), Some(b), Some(_)) => (a, b),
            _ => {
                return Err(Error::Word("gadget column leaves the domain".into()));
            }
        };
        let path: Vec<Vec2> = if l.sign > 0 {
            // Down the left lane, rightward under the center (the letter),
            // up, back left above the center, and out.
            vec![
                Vec2::new(x_l, y_in),
                Vec2::new(x_l, y_bot),
                Vec2::new(x_r, y_bot),
                Vec2::new(x_r, y_mid),
                Vec2::new(x_exit, y_mid),
                Vec2::new(x_exit, y_out),
            ]
        } else {
            // Mirror traversal: the under-center pass runs leftward.
            vec![
                Vec2::new(x_exit, y_out),
                Vec2::new(x_exit, y_mid),
                Vec2::new(x_r, y_mid),
                Vec2::new(x_r, y_bot),
                Vec2::new(x_l, y_bot),
                Vec2::new(x_l, y_in),
            ]
        };
        // Rail hop from the previous gadget, stopping at every center column
        // it passes so the connecting segments stay above the centers.
        if let Some(&last) = verts.last() {
            let x0 = last.x;
            let x1 = path[0].x;
            let mut stops: Vec<f64> = centers
                .iter()
                .map(|o| o.x)
                .filter(|&x| (x - x0.min(x1)) > 1e-12 && (x0.max(x1) - x) > 1e-12)
                .collect();
            stops.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if x1 < x0 {
                stops.reverse();
            }
            for x in stops {
                match rail_y(x) {
                    Some(y) => verts.push(Vec2::new(x, y)),
                    None => return Err(Error::Word("rail leaves the domain".into())),
                }
            }
        }
        verts.extend_from_slice(&path);
    }
    // Close with a rail hop back to the start.
    let (x0, x1) = (verts.last().unwrap().x, verts[0].x);
    let mut stops: Vec<f64> = centers
        .iter()
        .map(|o| o.x)
        .filter(|&x| (x - x0.min(x1)) > 1e-12 && (x0.max(x1) - x) > 1e-12)
        .collect();
    stops.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if x1 < x0 {
        stops.reverse();
    }
    for x in stops {
        match rail_y(x) {
            Some(y) => verts.push(Vec2::new(x, y)),
            None => return Err(Error::Word("rail leaves the domain".into())),
        }
    }
    // Drop immediate duplicates from coincident rail stops.
    verts.dedup_by(|a, b| a.dist(*b) < 1e-12);
    if verts.len() >= 2 && verts[0].dist(*verts.last().unwrap()) < 1e-12 {
        verts.pop();
    }
    for v in &verts {
        if !domain.contains(*v) {
            return Err(Error::Word("seed vertex outside the domain".into()));
        }
    }
    DiscreteCurve::new(verts, true)
}

/// Largest y with (x, y) in the domain, or None when the column misses it.
fn upper_boundary(domain: &crate::model::Domain, x: f64) -> Option<f64> {
    match domain {
        crate::model::Domain::Disk { cx, cy, radius } => {
            let dx = x - cx;
            let s = radius * radius - dx * dx;
            if s <= 0.0 {
                None
            } else {
                Some(cy + s.sqrt())
            }
        }
        crate::model::Domain::Polygon { vertices } => {
            let mut best: Option<f64> = None;
            let n = vertices.len();
            for i in 0..n {
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let (x0, y0, x1, y1) = (a[0], a[1], b[0], b[1]);
                if (x0 - x).abs() < 1e-15 && (x1 - x).abs() < 1e-15 {
                    best = Some(best.map_or(y0.max(y1), |v: f64| v.max(y0.max(y1))));
                    continue;
                }
                if (x0 <= x && x < x1) || (x1 <= x && x < x0) {
                    let t = (x - x0) / (x1 - x0);
                    let y = y0 + t * (y1 - y0);
                    best = Some(best.map_or(y, |v: f64| v.max(y)));
                }
            }
            best
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::winding_number;
    use crate::model::{Domain, Order, Polynomial2, Singularity};

    fn problem_with_centers(centers: &[(f64, f64)], radius: f64) -> Problem {
        Problem::new(
            centers
                .iter()
                .map(|&(x, y)| Singularity {
                    position: Vec2::new(x, y),
                    mass: 1.0,
                    order: Order::Approx(1.0),
                })
                .collect(),
            Polynomial2::zero(),
            Polynomial2::zero(),
            2.0,
            Domain::disk(Vec2::ZERO, radius),
        )
        .unwrap()
    }

    fn circle(center: Vec2, r: f64, n: usize, ccw: bool) -> DiscreteCurve {
        let verts = (0..n)
            .map(|i| {
                let mut th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                if !ccw {
                    th = -th;
                }
                center + Vec2::from_polar(r, th + 0.1)
            })
            .collect();
        DiscreteCurve::new(verts, true).unwrap()
    }

    fn word(s: &str) -> HomotopyWord {
        s.parse().unwrap()
    }

    #[test]
    fn generator_from_small_circle() {
        let centers = [Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0)];
        let w = word_of_curve(&circle(centers[0], 0.5, 16, true), &centers).unwrap();
        assert_eq!(w.to_string(), "x1");
        let w = word_of_curve(&circle(centers[1], 0.5, 16, false), &centers).unwrap();
        assert_eq!(w.to_string(), "x2^-1");
    }

    #[test]
    fn contractible_loop_is_empty() {
        let centers = [Vec2::new(0.0, 0.0)];
        let w = word_of_curve(&circle(Vec2::new(3.0, 1.0), 0.5, 12, true), &centers).unwrap();
        assert!(w.is_empty());
    }

    #[test]
    fn figure_eight_word_and_winding_oracle() {
        let centers = [Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0)];
        // CCW around a_1, then CW around a_2, fused at the origin.
        let mut verts = Vec::new();
        let n = 64;
        for i in 0..n {
            let th = std::f64::consts::PI * (2.0 * i as f64 / n as f64 - 1.0);
            verts.push(centers[0] + Vec2::from_polar(0.9, th));
        }
        for i in 0..n {
            let th = std::f64::consts::PI * (1.0 - 2.0 * i as f64 / n as f64) - std::f64::consts::PI;
            verts.push(centers[1] + Vec2::from_polar(0.9, th));
        }
        let curve = DiscreteCurve::new(verts, true).unwrap();
        let w = word_of_curve(&curve, &centers).unwrap();
        assert_eq!(w.to_string(), "x1 x2^-1");
        // Independent winding-number oracle per center.
        assert_eq!(winding_number(curve.vertices(), centers[0]), 1);
        assert_eq!(winding_number(curve.vertices(), centers[1]), -1);
        assert_eq!(w.exponent_sum(0), 1);
        assert_eq!(w.exponent_sum(1), -1);
    }

    #[test]
    fn reduction_examples() {
        let w = HomotopyWord::new(
            vec![
                Letter { index: 0, sign: 1 },
                Letter { index: 0, sign: -1 },
            ],
            false,
        )
        .unwrap();
        assert!(w.is_empty());

        // Cyclic conjugation collapses: x2 x1 x2^-1 -> x1.
        let w = HomotopyWord::new(
            vec![
                Letter { index: 1, sign: 1 },
                Letter { index: 0, sign: 1 },
                Letter { index: 1, sign: -1 },
            ],
            true,
        )
        .unwrap();
        assert_eq!(w.to_string(), "x1");

        let w = word("x1 x2 x2^-1 x1");
        assert_eq!(w.to_string(), "x1 x1");
    }

    #[test]
    fn triviality() {
        assert!(is_trivial(&HomotopyWord::empty(true)));
        assert!(is_trivial(&word("x1 x1 x1")));
        assert!(!is_trivial(&word("x1 x2^-1")));
    }

    #[test]
    fn admissibility() {
        assert!(is_admissible(&word("x1 x2")));
        assert!(!is_admissible(&word("x1")));
        assert!(is_admissible(&word("x1 x2 x1 x2")));
        // Mixed signs and adjacent repeats are conservatively rejected.
        assert!(!is_admissible(&word("x1 x2^-1")));
        assert!(!is_admissible(&word("x1 x1 x2")));
        assert!(!is_admissible(&word("x1 x2 x2 x3")));
    }

    #[test]
    fn reversibility() {
        assert!(is_reversible(&word("x1 x2^-1")));
        assert!(!is_reversible(&word("x1 x2 x3")));
        assert!(is_reversible(&HomotopyWord::empty(true)));
        assert!(is_reversible(&word("x1 x2")));
        assert!(is_reversible(&word("x1 x2 x1 x3")));
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["x1", "x1 x2^-1", "x1 x2^-1 x1", "x3 x1 x2"] {
            assert_eq!(word(s).to_string(), s);
        }
        // Powers expand.
        assert_eq!(word("x1^3").to_string(), "x1 x1 x1");
        assert_eq!(word("x2^-2").to_string(), "x2^-1 x2^-1");
        assert!("y1".parse::<HomotopyWord>().is_err());
        assert!("x0".parse::<HomotopyWord>().is_err());
    }

    #[test]
    fn canonical_key_identifies_shift_and_inverse() {
        let a = word("x1 x2 x3");
        let b = word("x2 x3 x1");
        let c = word("x3^-1 x2^-1 x1^-1");
        assert_eq!(a.canonical_key(), b.canonical_key());
        assert_eq!(a.canonical_key(), c.canonical_key());
        assert_ne!(a.canonical_key(), word("x1 x3 x2").canonical_key());
    }

    #[test]
    fn seed_round_trip_simple_words() {
        let p = problem_with_centers(&[(-1.0, 0.0), (1.0, 0.0), (0.0, 1.2)], 4.0);
        let centers: Vec<Vec2> = p.singularities().iter().map(|s| s.position).collect();
        for s in [
            "x1",
            "x2^-1",
            "x1 x2",
            "x1 x2^-1",
            "x1 x2 x3",
            "x1 x2 x1 x3",
            "x1 x2^-1 x1 x3^-1",
            "x1 x1 x2",
        ] {
            let w = word(s);
            let curve = seed_curve(&w, &p, 64).unwrap();
            assert!(curve.len() >= 64);
            let got = word_of_curve(&curve, &centers).unwrap();
            assert_eq!(got, w, "word {s}");
        }
    }

    #[test]
    fn seed_round_trip_vertically_aligned_centers() {
        // A column of centers sharing an x-coordinate exercises the
        // cancelling double-pass logic of the gadgets.
        let p = problem_with_centers(&[(0.0, -1.0), (0.0, 0.5), (0.0, 2.0), (1.5, 0.0)], 5.0);
        let centers: Vec<Vec2> = p.singularities().iter().map(|s| s.position).collect();
        for s in [
            "x1",
            "x2",
            "x3",
            "x1 x2",
            "x2 x3^-1",
            "x1 x3 x2",
            "x1 x4 x2^-1",
            "x2 x1 x2 x3",
        ] {
            let w = word(s);
            let curve = seed_curve(&w, &p, 32).unwrap();
            let got = word_of_curve(&curve, &centers).unwrap();
            assert_eq!(got, w, "word {s}");
        }
    }

    #[test]
    fn seed_rejects_bad_input() {
        let p = problem_with_centers(&[(0.0, 0.0)], 2.0);
        assert!(matches!(
            seed_curve(&HomotopyWord::empty(true), &p, 32),
            Err(Error::TrivialClass(_))
        ));
        assert!(seed_curve(&word("x5"), &p, 32).is_err());
    }

    #[test]
    fn ray_angle_independence() {
        let centers = [Vec2::new(0.0, 0.0), Vec2::new(1.3, 0.4)];
        let curve = circle(Vec2::new(0.6, 0.2), 1.9, 40, true);
        let w0 = word_of_curve_from_attempt(&curve, &centers, 0).unwrap();
        for start in 1..6 {
            let w = word_of_curve_from_attempt(&curve, &centers, start).unwrap();
            assert_eq!(w.canonical_key(), w0.canonical_key());
        }
    }

    #[test]
    fn word_is_stable_under_small_vertex_noise() {
        let centers = [Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0)];
        let curve = circle(Vec2::ZERO, 2.0, 48, true);
        let w0 = word_of_curve(&curve, &centers).unwrap();
        // Perturb each vertex by much less than the clearance to centers.
        let mut rng_state = 0x1234_5678_u64;
        let mut small = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((rng_state >> 33) as f64 / (1u64 << 31) as f64 - 0.5) * 1e-3
        };
        let verts: Vec<Vec2> = curve
            .vertices()
            .iter()
            .map(|v| *v + Vec2::new(small(), small()))
            .collect();
        let perturbed = DiscreteCurve::new(verts, true).unwrap();
        assert_eq!(word_of_curve(&perturbed, &centers).unwrap(), w0);
    }

    #[test]
    fn curve_touching_center_errors() {
        let centers = [Vec2::new(0.0, 0.0)];
        let curve = DiscreteCurve::new(
            vec![
                Vec2::new(-1.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, 1.0),
            ],
            true,
        )
        .unwrap();
        assert!(matches!(
            word_of_curve(&curve, &centers),
            Err(Error::AtCenter { index: 0 })
        ));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]

        /// Round trip over random reduced cyclic words, length ≤ 8, ≤ 4
        /// generators, against the crossing and winding oracles.
        #[test]
        fn seed_round_trip_random_words(raw in proptest::collection::vec((0usize..4, proptest::bool::ANY), 1..8)) {
            let p = problem_with_centers(
                &[(-1.4, -0.3), (0.2, 0.4), (1.3, -0.5), (0.1, 1.6)],
                5.0,
            );
            let centers: Vec<Vec2> = p.singularities().iter().map(|s| s.position).collect();
            let letters: Vec<Letter> = raw
                .into_iter()
                .map(|(i, s)| Letter { index: i, sign: if s { 1 } else { -1 } })
                .collect();
            let w = HomotopyWord::new(letters, true).unwrap();
            proptest::prop_assume!(!w.is_empty());
            let curve = seed_curve(&w, &p, 48).unwrap();
            let got = word_of_curve(&curve, &centers).unwrap();
            proptest::prop_assert_eq!(&got, &w);
            // Abelianization against the angle-summation winding oracle.
            for j in 0..4 {
                proptest::prop_assert_eq!(
                    i64::from(winding_number(curve.vertices(), centers[j])),
                    w.exponent_sum(j)
                );
            }
        }
    }
}
