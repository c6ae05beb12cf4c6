//! Classification of centers by singularity strength, and the combinatorial
//! consequences: the strength sum, the instability certificate, and branched
//! covers that regularize the metric.
//!
//! The ladder values `A_k = 2 - 2/k` (k = 1, 2, 3, ...) split the order range:
//! a center of order `alpha` with `A_k <= alpha < A_{k+1}` carries ladder index
//! k, contributes `A_k` to the strength sum, and is regularizable by a k-fold
//! cover exactly when `alpha = A_k` with `k >= 2`.  Orders >= 2 contribute 2
//! and cannot be regularized by finite covers.

use crate::model::{Order, Problem};
use crate::{Error, Result};
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

/// Absolute tolerance used to snap float orders onto ladder values.
pub const LADDER_SNAP_TOL: f64 = 1e-12;

/// Kind of singularity the Jacobi metric sees at a center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrengthKind {
    /// 0 < alpha < 1: metrically negligible, no covering needed.
    Weak,
    /// alpha = 1: the classical square-root cover case.
    Newtonian,
    /// 1 < alpha < 2.
    Moderate,
    /// alpha = 2: the metric becomes complete, centers recede to infinite distance.
    Jacobi,
    /// alpha > 2.
    Strong,
}

/// Ladder index of a center; `Infinite` covers orders >= 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum LadderIndex {
    Finite(u32),
    Infinite,
}

/// Classification of one center.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StrengthClass {
    pub kind: StrengthKind,
    pub ladder: LadderIndex,
    /// True iff the order equals a ladder value `A_k` with k >= 2, so a k-fold
    /// cover removes the singularity of the metric completely.
    pub regularizable: bool,
}

/// `A_k = 2 - 2/k`.
pub fn ladder_value(k: u32) -> Ratio<i64> {
    assert!(k >= 1);
    Ratio::new(2 * k as i64 - 2, k as i64)
}

/// Contribution of one classified center to the strength sum.
pub fn class_contribution(c: &StrengthClass) -> Ratio<i64> {
    match c.ladder {
        LadderIndex::Finite(1) => Ratio::zero(),
        LadderIndex::Finite(k) => ladder_value(k),
        LadderIndex::Infinite => Ratio::from_integer(2),
    }
}

fn classify_rational(a: Ratio<i64>) -> Result<StrengthClass> {
    if a <= Ratio::zero() {
        return Err(Error::OutOfRange(format!("order {a} must be positive")));
    }
    let two = Ratio::from_integer(2);
    if a >= two {
        let kind = if a == two {
            StrengthKind::Jacobi
        } else {
            StrengthKind::Strong
        };
        return Ok(StrengthClass {
            kind,
            ladder: LadderIndex::Infinite,
            regularizable: false,
        });
    }
    // beta = 2 / (2 - a); ladder index is floor(beta), regularizable iff beta
    // is an integer >= 2 (equivalently a = A_k).
    let beta = two / (two - a);
    let k = beta.floor().to_integer();
    let regularizable = beta.is_integer() && k >= 2;
    let kind = if a < Ratio::from_integer(1) {
        StrengthKind::Weak
    } else if a == Ratio::from_integer(1) {
        StrengthKind::Newtonian
    } else {
        StrengthKind::Moderate
    };
    Ok(StrengthClass {
        kind,
        ladder: LadderIndex::Finite(k as u32),
        regularizable,
    })
}

fn classify_float(a: f64) -> Result<StrengthClass> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::OutOfRange(format!("order {a} must be positive and finite")));
    }
    // Snap to the nearest ladder value (or to 2) within tolerance, then reuse
    // the exact classifier.
    if (a - 2.0).abs() <= LADDER_SNAP_TOL {
        return classify_rational(Ratio::from_integer(2));
    }
    if a < 2.0 {
        let beta = 2.0 / (2.0 - a);
        let k_near = beta.round();
        if k_near >= 1.0 && k_near <= u32::MAX as f64 {
            let k = k_near as u32;
            let ak = ladder_value(k).to_f64().unwrap();
            if (a - ak).abs() <= LADDER_SNAP_TOL {
                return classify_rational(ladder_value(k));
            }
        }
        let k = beta.floor() as u32;
        let kind = if a < 1.0 {
            StrengthKind::Weak
        } else {
            StrengthKind::Moderate
        };
        return Ok(StrengthClass {
            kind,
            ladder: LadderIndex::Finite(k.max(1)),
            regularizable: false,
        });
    }
    Ok(StrengthClass {
        kind: StrengthKind::Strong,
        ladder: LadderIndex::Infinite,
        regularizable: false,
    })
}

/// Classify a single order.
pub fn classify_order(order: &Order) -> Result<StrengthClass> {
    match order {
        Order::Exact(r) => classify_rational(*r),
        Order::Approx(a) => classify_float(*a),
    }
}

/// Classify every center of a problem.
pub fn classify_problem(problem: &Problem) -> Result<Vec<StrengthClass>> {
    problem
        .singularities()
        .iter()
        .map(|s| classify_order(&s.order))
        .collect()
}

/// Strength sum `A = sum of ladder contributions` as an exact rational.
/// Weak centers contribute 0, ladder class k contributes `2 - 2/k`, and
/// orders >= 2 contribute 2, so the sum is rational even for float orders.
pub fn strength_sum_of_orders(orders: &[Order]) -> Result<Ratio<i64>> {
    let mut sum = Ratio::zero();
    for o in orders {
        sum += class_contribution(&classify_order(o)?);
    }
    Ok(sum)
}

pub fn strength_sum(problem: &Problem) -> Result<Ratio<i64>> {
    let orders: Vec<Order> = problem.singularities().iter().map(|s| s.order).collect();
    strength_sum_of_orders(&orders)
}

// ---------------------------------------------------------------------------
// Branched covers
// ---------------------------------------------------------------------------

/// How the branched cover was assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverConstruction {
    /// Fiber product of cyclic covers, available for plane domains and for
    /// closed surfaces whose per-class counts are divisible by the class index.
    Direct,
    /// An unbranched degree-K pre-cover first, then the fiber product; the
    /// total degree is K^2.
    PreCoverDoubling,
}

/// Bookkeeping for a smooth branched cover that pulls the Jacobi metric back
/// to a metric with at worst weak singularities.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CoverPlan {
    /// Total degree of the covering map.
    pub degree: u64,
    /// Per input center: branching index of the points over it (None = weak,
    /// unbranched).
    pub branch_index: Vec<Option<u32>>,
    /// Per input center: number of cover points lying over it.
    pub preimages: Vec<u64>,
    /// Euler characteristic of the covering surface.
    pub euler_char_cover: i64,
    pub construction: CoverConstruction,
    /// Strength sum of the branch data (weak centers contribute 0).
    #[serde(serialize_with = "ser_ratio")]
    pub strength_sum: Ratio<i64>,
}

/// Serialize a rational as the string "p/q" (or "p" for integers).
fn ser_ratio<S: serde::Serializer>(r: &Ratio<i64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_ratio(*r))
}

/// Plan a branched cover over a surface of Euler characteristic `chi` whose
/// punctures have the given orders.  `plane_domain` marks subsurfaces of the
/// plane, where the direct fiber product always exists.
///
/// All orders must be < 2: a center with order >= 2 sits infinitely deep in
/// the Jacobi metric and can never be a branch point of a finite smooth cover.
pub fn cover_plan_for_orders(
    orders: &[Order],
    chi: i64,
    plane_domain: bool,
) -> Result<CoverPlan> {
    let classes: Vec<StrengthClass> = orders
        .iter()
        .map(classify_order)
        .collect::<Result<_>>()?;
    let unbranchable: Vec<usize> = classes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.ladder == LadderIndex::Infinite)
        .map(|(i, _)| i)
        .collect();
    if !unbranchable.is_empty() {
        return Err(Error::Unbranchable { indices: unbranchable });
    }

    // Distinct ladder indices >= 2 and their counts.
    let mut counts: std::collections::BTreeMap<u32, u64> = std::collections::BTreeMap::new();
    for c in &classes {
        if let LadderIndex::Finite(k) = c.ladder {
            if k >= 2 {
                *counts.entry(k).or_insert(0) += 1;
            }
        }
    }
    let k_base: u64 = counts.keys().map(|&k| k as u64).product();
    let a_sum: Ratio<i64> = classes.iter().map(class_contribution).sum();

    let direct = plane_domain || counts.iter().all(|(&k, &n)| n % k as u64 == 0);
    let (degree, construction) = if direct {
        (k_base, CoverConstruction::Direct)
    } else {
        (k_base * k_base, CoverConstruction::PreCoverDoubling)
    };

    // chi(X) = degree * (chi - A/2); the Riemann-Hurwitz count guarantees this
    // is an integer.
    let chi_cover = Ratio::from_integer(degree as i64)
        * (Ratio::from_integer(chi) - a_sum / Ratio::from_integer(2));
    debug_assert!(chi_cover.is_integer());

    let branch_index: Vec<Option<u32>> = classes
        .iter()
        .map(|c| match c.ladder {
            LadderIndex::Finite(k) if k >= 2 => Some(k),
            _ => None,
        })
        .collect();
    let preimages: Vec<u64> = branch_index
        .iter()
        .map(|b| match b {
            Some(k) => degree / *k as u64,
            None => degree,
        })
        .collect();

    Ok(CoverPlan {
        degree,
        branch_index,
        preimages,
        euler_char_cover: chi_cover.to_integer(),
        construction,
        strength_sum: a_sum,
    })
}

/// Cover plan for a problem's own (plane) domain, chi = 1.
pub fn cover_plan(problem: &Problem) -> Result<CoverPlan> {
    let orders: Vec<Order> = problem.singularities().iter().map(|s| s.order).collect();
    cover_plan_for_orders(&orders, 1, true)
}

// ---------------------------------------------------------------------------
// Cascade planner for closed surfaces
// ---------------------------------------------------------------------------

/// One step of a cascade of cyclic branched covers over a closed surface.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CascadeStep {
    /// Branching index (= degree) of this step's cyclic cover.
    pub order_k: u32,
    /// Number of branch points used in this step.
    pub branch_points: usize,
    /// Euler characteristic after the step.
    pub chi_after: i64,
}

/// Result of the cascade planner.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CascadePlan {
    pub steps: Vec<CascadeStep>,
    pub total_degree: u64,
    pub final_chi: i64,
}

/// Plan a sequence of cyclic branched covers of a closed surface (Euler
/// characteristic `chi`) that regularizes every center, even when per-class
/// counts are not divisible by the class index.  Each step either branches a
/// k-fold cover over the largest k-divisible subset of a ladder class (those
/// points become weak or vanish; everything else is copied k times), or, when
/// no class is large enough, takes a double cover branched over an even subset
/// of some class, which lowers those orders by one rung.
pub fn cascade_plan(orders: &[Order], chi: i64) -> Result<CascadePlan> {
    // Working multiset of non-weak orders (exactness preserved where present).
    let mut live: Vec<Order> = Vec::new();
    for (i, o) in orders.iter().enumerate() {
        let c = classify_order(o)?;
        match c.ladder {
            LadderIndex::Infinite => return Err(Error::Unbranchable { indices: vec![i] }),
            LadderIndex::Finite(k) if k >= 2 => live.push(*o),
            _ => {} // weak: irrelevant for the cascade
        }
    }

    let transform = |o: &Order, k: u32| -> Order {
        // Pulled-back order 2 - k (2 - alpha).
        match o {
            Order::Exact(r) => Order::Exact(
                Ratio::from_integer(2)
                    - Ratio::from_integer(k as i64) * (Ratio::from_integer(2) - r),
            ),
            Order::Approx(a) => Order::Approx(2.0 - k as f64 * (2.0 - a)),
        }
    };

    let mut steps = Vec::new();
    let mut total_degree: u64 = 1;
    let mut cur_chi = chi;

    for _guard in 0..64 {
        if live.is_empty() {
            break;
        }
        // Group by ladder class.
        let mut by_class: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
        for (i, o) in live.iter().enumerate() {
            if let LadderIndex::Finite(k) = classify_order(o)?.ladder {
                by_class.entry(k).or_default().push(i);
            }
        }

        // Preferred move: smallest class with at least k members (even subset
        // for k = 2); branch over the largest k-divisible subset.
        let mut chosen: Option<(u32, Vec<usize>)> = None;
        for (&k, idxs) in &by_class {
            let m = (idxs.len() / k as usize) * k as usize;
            if m >= k as usize {
                chosen = Some((k, idxs[..m].to_vec()));
                break;
            }
        }
        // Fallback: double cover over an even subset of any class with >= 2
        // members, which demotes their orders by one rung and doubles the rest.
        if chosen.is_none() {
            for (_, idxs) in &by_class {
                if idxs.len() >= 2 {
                    let m = (idxs.len() / 2) * 2;
                    chosen = Some((2, idxs[..m].to_vec()));
                    break;
                }
            }
        }
        let Some((k, branch_set)) = chosen else {
            return Err(Error::NoConvergence(
                "cascade stuck: no class offers a valid branch set".into(),
            ));
        };

        // Riemann-Hurwitz for a k-fold cyclic cover totally branched over the
        // chosen points: chi -> k chi - (k - 1) #branch.
        cur_chi = k as i64 * cur_chi - (k as i64 - 1) * branch_set.len() as i64;
        total_degree *= k as u64;
        steps.push(CascadeStep {
            order_k: k,
            branch_points: branch_set.len(),
            chi_after: cur_chi,
        });

        // Update the multiset: branched points transform (and drop out when
        // weak or regularized), unbranched points get k copies each.
        let branch_mark: std::collections::BTreeSet<usize> = branch_set.into_iter().collect();
        let mut next = Vec::new();
        for (i, o) in live.iter().enumerate() {
            if branch_mark.contains(&i) {
                let t = transform(o, k);
                let c = classify_order(&t);
                if let Ok(c) = c {
                    if matches!(c.ladder, LadderIndex::Finite(kk) if kk >= 2) {
                        next.push(t);
                    }
                }
                // order <= 0 means the singularity vanished entirely
            } else {
                for _ in 0..k {
                    next.push(*o);
                }
            }
        }
        live = next;
    }

    if !live.is_empty() {
        return Err(Error::NoConvergence("cascade did not terminate".into()));
    }
    Ok(CascadePlan {
        steps,
        total_degree,
        final_chi: cur_chi,
    })
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

/// Entropy lower bound status.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyBound {
    /// `sqrt(pi (A - 2 chi) / Vol)` with Vol the Jacobi area of the domain.
    Positive(f64),
    /// The strength sum does not exceed 2 chi; no conclusion.
    NoCertificate,
    /// Some order is >= 2, the Jacobi area diverges and the bound is undefined.
    Undefined,
}

impl EntropyBound {
    pub fn value(&self) -> Option<f64> {
        match self {
            EntropyBound::Positive(v) => Some(*v),
            _ => None,
        }
    }
}

/// Assemble the entropy bound from its ingredients.
pub fn entropy_from_parts(a_sum: Ratio<i64>, chi: i64, volume: f64) -> EntropyBound {
    if !volume.is_finite() {
        return EntropyBound::Undefined;
    }
    let excess = a_sum - Ratio::from_integer(2 * chi);
    if excess <= Ratio::zero() {
        return EntropyBound::NoCertificate;
    }
    let excess = excess.to_f64().unwrap();
    EntropyBound::Positive((std::f64::consts::PI * excess / volume).sqrt())
}

/// Entropy lower bound for a problem on its own domain (chi = 1).
pub fn entropy_lower_bound(problem: &Problem) -> Result<EntropyBound> {
    let orders: Vec<Order> = problem.singularities().iter().map(|s| s.order).collect();
    if orders
        .iter()
        .map(classify_order)
        .collect::<Result<Vec<_>>>()?
        .iter()
        .any(|c| c.ladder == LadderIndex::Infinite)
    {
        return Ok(EntropyBound::Undefined);
    }
    let a = strength_sum_of_orders(&orders)?;
    if a <= Ratio::from_integer(2) {
        return Ok(EntropyBound::NoCertificate);
    }
    let vol = crate::jacobi::jacobi_area(problem, 1e-6)?;
    Ok(entropy_from_parts(a, 1, vol))
}

/// The instability certificate: strength sum versus twice the Euler
/// characteristic, with the cover bookkeeping attached when available.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ChaosCertificate {
    #[serde(serialize_with = "ser_ratio")]
    pub strength_sum: Ratio<i64>,
    pub chi: i64,
    /// True iff `strength_sum > 2 chi`: every collision-free energy-h flow on
    /// this data has positive topological entropy.
    pub verdict: bool,
    /// None when some order >= 2 blocks a finite branched cover; the verdict
    /// stands regardless.
    pub cover: Option<CoverPlan>,
}

/// Certificate from bare orders over a surface of Euler characteristic `chi`.
pub fn certificate_for_orders(
    orders: &[Order],
    chi: i64,
    plane_domain: bool,
) -> Result<ChaosCertificate> {
    let a = strength_sum_of_orders(orders)?;
    let verdict = a > Ratio::from_integer(2 * chi);
    let cover = match cover_plan_for_orders(orders, chi, plane_domain) {
        Ok(c) => Some(c),
        Err(Error::Unbranchable { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(ChaosCertificate {
        strength_sum: a,
        chi,
        verdict,
        cover,
    })
}

/// Certificate for a problem's own plane domain (chi = 1).
pub fn chaos_certificate(problem: &Problem) -> Result<ChaosCertificate> {
    let orders: Vec<Order> = problem.singularities().iter().map(|s| s.order).collect();
    certificate_for_orders(&orders, 1, true)
}

/// Excision bookkeeping: removing the n_strong concave balls around strong
/// centers changes (A, chi) to (A - 2 n_strong, chi - n_strong), leaving the
/// certificate quantity A - 2 chi untouched.
pub fn excise_strong(a_sum: Ratio<i64>, chi: i64, n_strong: usize) -> (Ratio<i64>, i64) {
    (
        a_sum - Ratio::from_integer(2 * n_strong as i64),
        chi - n_strong as i64,
    )
}

/// Format a rational nicely for reports: integer when possible, else `p/q`.
pub fn format_ratio(r: Ratio<i64>) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else if r.is_negative() {
        format!("-{}/{}", -r.numer(), r.denom())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ord(a: f64) -> Order {
        Order::Approx(a)
    }

    fn ordx(s: &str) -> Order {
        Order::parse_exact(s).unwrap()
    }

    #[test]
    fn ladder_values_are_exact() {
        assert_eq!(ladder_value(1), Ratio::zero());
        assert_eq!(ladder_value(2), Ratio::from_integer(1));
        assert_eq!(ladder_value(3), Ratio::new(4, 3));
        assert_eq!(ladder_value(4), Ratio::new(3, 2));
        assert_eq!(ladder_value(10), Ratio::new(9, 5));
    }

    #[test]
    fn taxonomy() {
        let c = classify_order(&ord(0.5)).unwrap();
        assert_eq!(c.kind, StrengthKind::Weak);
        assert_eq!(c.ladder, LadderIndex::Finite(1));
        assert!(!c.regularizable);

        let c = classify_order(&ord(1.0)).unwrap();
        assert_eq!(c.kind, StrengthKind::Newtonian);
        assert_eq!(c.ladder, LadderIndex::Finite(2));
        assert!(c.regularizable);

        let c = classify_order(&ordx("4/3")).unwrap();
        assert_eq!(c.kind, StrengthKind::Moderate);
        assert_eq!(c.ladder, LadderIndex::Finite(3));
        assert!(c.regularizable);

        let c = classify_order(&ord(1.4)).unwrap();
        assert_eq!(c.kind, StrengthKind::Moderate);
        assert_eq!(c.ladder, LadderIndex::Finite(3));
        assert!(!c.regularizable);

        let c = classify_order(&ord(2.0)).unwrap();
        assert_eq!(c.kind, StrengthKind::Jacobi);
        assert_eq!(c.ladder, LadderIndex::Infinite);

        let c = classify_order(&ord(2.5)).unwrap();
        assert_eq!(c.kind, StrengthKind::Strong);
        assert_eq!(c.ladder, LadderIndex::Infinite);
    }

    #[test]
    fn float_snap_to_ladder() {
        // Within 1e-12 of 4/3 the order counts as exactly regularizable.
        let near = 4.0 / 3.0; // float round of 4/3
        let c = classify_order(&ord(near)).unwrap();
        assert_eq!(c.ladder, LadderIndex::Finite(3));
        assert!(c.regularizable);
        // Clearly off the ladder: not regularizable.
        let c = classify_order(&ord(4.0 / 3.0 + 1e-6)).unwrap();
        assert!(!c.regularizable);
    }

    #[test]
    fn strength_sum_examples() {
        // {1, 1, 1}: three Newtonian centers.
        let a = strength_sum_of_orders(&[ord(1.0), ord(1.0), ord(1.0)]).unwrap();
        assert_eq!(a, Ratio::from_integer(3));
        // {1, 1, 1, 4/3}: adds one rung-3 center.
        let a =
            strength_sum_of_orders(&[ord(1.0), ord(1.0), ord(1.0), ordx("4/3")]).unwrap();
        assert_eq!(a, Ratio::new(13, 3));
        // Weak centers contribute nothing; orders >= 2 contribute 2.
        let a = strength_sum_of_orders(&[ord(0.3), ord(2.0), ord(7.0)]).unwrap();
        assert_eq!(a, Ratio::from_integer(4));
        // Empty set.
        assert_eq!(strength_sum_of_orders(&[]).unwrap(), Ratio::zero());
    }

    #[test]
    fn cover_two_newtonian_disk() {
        // Disk with two Newtonian centers: the classical square-root cover,
        // degree 2, torus-like chi = 0? chi(X) = 2 (1 - 1) = 0.
        let plan = cover_plan_for_orders(&[ord(1.0), ord(1.0)], 1, true).unwrap();
        assert_eq!(plan.degree, 2);
        assert_eq!(plan.euler_char_cover, 0);
        assert_eq!(plan.branch_index, vec![Some(2), Some(2)]);
        assert_eq!(plan.preimages, vec![1, 1]);
        assert_eq!(plan.construction, CoverConstruction::Direct);
    }

    #[test]
    fn cover_mixed_ladder_disk() {
        // Orders {1, 1, 1, 4/3} on the disk: K = 2 * 3 = 6,
        // chi(X) = 6 (1 - 13/6) = -7.
        let plan =
            cover_plan_for_orders(&[ord(1.0), ord(1.0), ord(1.0), ordx("4/3")], 1, true).unwrap();
        assert_eq!(plan.degree, 6);
        assert_eq!(plan.euler_char_cover, -7);
        assert_eq!(plan.preimages, vec![3, 3, 3, 2]);
    }

    #[test]
    fn cover_sphere_newtonian_pairs() {
        // 2k Newtonian centers on the sphere: chi(X) = 2 (2 - k).
        for k in 1..6usize {
            let orders = vec![ord(1.0); 2 * k];
            let plan = cover_plan_for_orders(&orders, 2, false).unwrap();
            assert_eq!(plan.degree, 2);
            assert_eq!(plan.euler_char_cover, 2 * (2 - k as i64));
            assert_eq!(plan.construction, CoverConstruction::Direct);
        }
    }

    #[test]
    fn cover_sphere_odd_count_doubles() {
        // Three Newtonian centers on the sphere: 3 is not divisible by 2, so
        // the pre-covering doubling fires and the degree becomes K^2 = 4.
        let plan = cover_plan_for_orders(&[ord(1.0); 3], 2, false).unwrap();
        assert_eq!(plan.construction, CoverConstruction::PreCoverDoubling);
        assert_eq!(plan.degree, 4);
        // chi = 4 (2 - 3/2) = 2.
        assert_eq!(plan.euler_char_cover, 2);
    }

    #[test]
    fn cover_rejects_strong() {
        let err = cover_plan_for_orders(&[ord(1.0), ord(3.0)], 1, true).unwrap_err();
        match err {
            Error::Unbranchable { indices } => assert_eq!(indices, vec![1]),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn cascade_reproduces_degree_36() {
        // Sphere, three Newtonian centers plus one of order 4/3.  The planner
        // should produce double covers over pairs of Newtonian points, then
        // 3-fold covers over the rung-3 points, reaching chi = -6 at total
        // degree 2 * 2 * 3 * 3 = 36.
        let plan =
            cascade_plan(&[ord(1.0), ord(1.0), ord(1.0), ordx("4/3")], 2).unwrap();
        let degrees: Vec<u32> = plan.steps.iter().map(|s| s.order_k).collect();
        assert_eq!(degrees, vec![2, 2, 3, 3]);
        let chis: Vec<i64> = plan.steps.iter().map(|s| s.chi_after).collect();
        assert_eq!(chis, vec![2, 2, 0, -6]);
        assert_eq!(plan.total_degree, 36);
        assert_eq!(plan.final_chi, -6);
    }

    #[test]
    fn cascade_mixed_small_classes() {
        // {4/3, 4/3, 3/2, 3/2} on the sphere: no class reaches its own index,
        // so the fallback double cover demotes the rung-3 pair to weak and
        // doubles the rung-4 pair, which is then fully branchable.
        let plan = cascade_plan(&[ordx("4/3"), ordx("4/3"), ordx("3/2"), ordx("3/2")], 2).unwrap();
        assert!(plan.final_chi < 0, "final chi {}", plan.final_chi);
        assert!(plan.steps.len() >= 2);
    }

    #[test]
    fn certificate_verdicts() {
        // Disk, chi = 1.  Three Newtonian centers: A = 3 > 2.
        let c = certificate_for_orders(&[ord(1.0); 3], 1, true).unwrap();
        assert!(c.verdict);
        // Two Newtonian centers: A = 2, not > 2.
        let c = certificate_for_orders(&[ord(1.0); 2], 1, true).unwrap();
        assert!(!c.verdict);
        // Sphere: A = 13/3 > 4.
        let c =
            certificate_for_orders(&[ord(1.0), ord(1.0), ord(1.0), ordx("4/3")], 2, false).unwrap();
        assert!(c.verdict);
        assert_eq!(c.strength_sum, Ratio::new(13, 3));
        // One strong center on the disk: A = 2, no cover, no verdict.
        let c = certificate_for_orders(&[ord(3.0)], 1, true).unwrap();
        assert!(!c.verdict);
        assert!(c.cover.is_none());
    }

    #[test]
    fn excision_identity() {
        let (a, chi) = excise_strong(Ratio::new(13, 3), 1, 2);
        assert_eq!(a, Ratio::new(1, 3));
        assert_eq!(chi, -1);
        // A - 2 chi is invariant.
        assert_eq!(
            Ratio::new(13, 3) - Ratio::from_integer(2),
            a - Ratio::from_integer(2 * chi)
        );
    }

    #[test]
    fn entropy_parts() {
        assert_eq!(
            entropy_from_parts(Ratio::from_integer(2), 1, 10.0),
            EntropyBound::NoCertificate
        );
        assert_eq!(
            entropy_from_parts(Ratio::from_integer(3), 1, f64::INFINITY),
            EntropyBound::Undefined
        );
        match entropy_from_parts(Ratio::from_integer(3), 1, std::f64::consts::PI) {
            EntropyBound::Positive(v) => assert!((v - 1.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ratio_formatting() {
        assert_eq!(format_ratio(Ratio::new(13, 3)), "13/3");
        assert_eq!(format_ratio(Ratio::from_integer(3)), "3");
        assert_eq!(format_ratio(Ratio::zero()), "0");
        assert_eq!(format_ratio(Ratio::new(-7, 2)), "-7/2");
    }
}
