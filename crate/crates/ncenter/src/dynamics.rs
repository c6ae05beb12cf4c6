//! Time parametrization: turning Jacobi geodesics into energy-h trajectories
//! of the Newton equation, integrating that equation independently, and
//! measuring how well a trajectory satisfies it.

use crate::geom::Vec2;
use crate::jacobi::DiscreteCurve;
use crate::model::{PhaseState, Problem};
use crate::{Error, Result};

/// A time-parametrized solution sample set.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Trajectory {
    /// (time, state), time strictly increasing.
    pub samples: Vec<(f64, PhaseState)>,
    pub energy_target: f64,
    /// Center entered during integration, if the run was halted by the
    /// collision guard.
    pub collision: Option<usize>,
    /// False when integration stopped early (collision or step underflow).
    pub complete: bool,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.0 - a.0,
            _ => 0.0,
        }
    }

    /// Worst energy error over the samples.
    pub fn max_energy_deviation(&self, problem: &Problem) -> f64 {
        self.samples
            .iter()
            .map(|(_, s)| (problem.state_energy(s) - self.energy_target).abs())
            .fold(0.0, f64::max)
    }
}

/// Reparametrize a curve to physical time at the problem's energy.
///
/// The speed is fixed by energy conservation, `|q̇| = sqrt(2 (h − V)/g)`, the
/// direction is the curve tangent, and time accumulates as `dt = dL/|q̇|`
/// along each edge.  The produced states satisfy `H = h` exactly by
/// construction.
pub fn geodesic_to_trajectory(problem: &Problem, curve: &DiscreteCurve) -> Result<Trajectory> {
    let clearance = 1e-9 * problem.scale().max(1.0);
    for v in curve.vertices() {
        if let Some((j, d)) = problem.nearest_center(*v) {
            if d <= clearance {
                return Err(Error::AtCenter { index: j });
            }
        }
        if problem.potential(*v) >= problem.energy() {
            return Err(Error::OutsideHillRegion { x: v.x, y: v.y });
        }
    }

    let n = curve.len();
    let closed = curve.closed();
    let vel_mag = |q: Vec2| -> f64 {
        (2.0 * (problem.energy() - problem.potential(q)) / problem.conformal_eval(q)).sqrt()
    };

    // Tangent at a vertex: mean of the adjacent edge directions.
    let vertex_tangent = |i: usize| -> Vec2 {
        let v = curve.vertices();
        let prev = if i == 0 {
            if closed {
                v[n - 1]
            } else {
                v[0]
            }
        } else {
            v[i - 1]
        };
        let next = if i + 1 == n {
            if closed {
                v[0]
            } else {
                v[n - 1]
            }
        } else {
            v[i + 1]
        };
        let mut t = Vec2::ZERO;
        if prev != v[i] {
            t += (v[i] - prev).normalized();
        }
        if next != v[i] {
            t += (next - v[i]).normalized();
        }
        if t.norm() == 0.0 {
            Vec2::new(1.0, 0.0)
        } else {
            t.normalized()
        }
    };

    let count = if closed { n + 1 } else { n };
    let mut samples = Vec::with_capacity(count);
    let mut t = 0.0;
    for i in 0..count {
        let q = curve.vertices()[i % n];
        samples.push((
            t,
            PhaseState {
                position: q,
                velocity: vertex_tangent(i % n) * vel_mag(q),
            },
        ));
        if i + 1 < count {
            let a = q;
            let b = curve.vertices()[(i + 1) % n];
            let dt = crate::quad::gauss3(|s| 1.0 / vel_mag(a + (b - a) * s), 0.0, 1.0) * a.dist(b);
            t += dt;
        }
    }
    Ok(Trajectory {
        samples,
        energy_target: problem.energy(),
        collision: None,
        complete: true,
    })
}

/// Acceleration of the conformal Newton equation,
/// `q̈ = (∇g |q̇|²/2 − (∇g·q̇) q̇ − ∇V) / g`.
fn acceleration(problem: &Problem, q: Vec2, v: Vec2) -> Result<Vec2> {
    let grad_v = problem.potential_gradient(q)?;
    let g = problem.conformal_eval(q);
    if problem.conformal().is_constant() {
        return Ok(-grad_v / g);
    }
    let grad_g = problem.conformal_gradient(q);
    Ok((grad_g * (0.5 * v.norm_sq()) - v * grad_g.dot(v) - grad_v) / g)
}

/// Dormand–Prince 5(4) coefficients.
const DOPRI_C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DOPRI_A: [&[f64]; 6] = [
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DOPRI_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

type Deriv = [Vec2; 2];

fn eval_rhs(problem: &Problem, y: &(Vec2, Vec2)) -> Result<Deriv> {
    Ok([y.1, acceleration(problem, y.0, y.1)?])
}

/// Integrate the Newton equation with adaptive Dormand–Prince 5(4) steps.
///
/// Steps are controlled by the embedded local-error estimate and by the
/// per-step energy change; the run halts with a collision flag when the
/// position enters the guard ball of any center, and returns a partial
/// trajectory if the step size underflows.
pub fn integrate_newton(
    problem: &Problem,
    initial: PhaseState,
    duration: f64,
    tolerance: f64,
) -> Result<Trajectory> {
    if problem.nearest_center(initial.position).map_or(false, |(_, d)| d == 0.0) {
        return Err(Error::AtCenter {
            index: problem.nearest_center(initial.position).unwrap().0,
        });
    }
    if !(duration > 0.0) || !(tolerance > 0.0) {
        return Err(Error::BadInput("duration and tolerance must be positive".into()));
    }
    let guard = 1e-7 * problem.scale().max(1e-6);
    let h0_energy = problem.state_energy(&initial);
    let energy_budget = 50.0 * tolerance * h0_energy.abs().max(1.0);

    let mut samples = vec![(0.0, initial.clone())];
    let mut t = 0.0;
    let mut y = (initial.position, initial.velocity);
    let mut k0 = eval_rhs(problem, &y)?;
    // Start coarse: the controller shrinks a bad first step geometrically,
    // while a needlessly tiny first step leaves sample gaps small enough to
    // amplify roundoff in finite differences taken over the output.
    let mut dt = (duration * 1e-2).min(1e-2);
    let mut collision = None;
    let mut complete = true;

    while t < duration {
        dt = dt.min(duration - t);
        if dt < 1e-14 * duration.max(1.0) {
            complete = false;
            break;
        }
        // Stage evaluations; a stage falling into a center aborts the step.
        let mut ks: Vec<Deriv> = vec![k0];
        let mut failed = false;
        for s in 0..6 {
            let mut dq = Vec2::ZERO;
            let mut dv = Vec2::ZERO;
            for (j, a) in DOPRI_A[s].iter().enumerate() {
                dq += ks[j][0] * *a;
                dv += ks[j][1] * *a;
            }
            let ys = (y.0 + dq * dt, y.1 + dv * dt);
            let _ = DOPRI_C[s];
            match eval_rhs(problem, &ys) {
                Ok(k) => ks.push(k),
                Err(_) => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            dt *= 0.25;
            continue;
        }
        // 5th-order solution is stage row 6 (FSAL: equals k of the new point).
        let mut dq = Vec2::ZERO;
        let mut dv = Vec2::ZERO;
        for (j, a) in DOPRI_A[5].iter().enumerate() {
            dq += ks[j][0] * *a;
            dv += ks[j][1] * *a;
        }
        let y_new = (y.0 + dq * dt, y.1 + dv * dt);

        // Embedded error estimate.
        let mut eq = Vec2::ZERO;
        let mut ev = Vec2::ZERO;
        for (j, e) in DOPRI_E.iter().enumerate() {
            eq += ks[j][0] * *e;
            ev += ks[j][1] * *e;
        }
        let scale_q = 1.0 + y.0.norm().max(y_new.0.norm());
        let scale_v = 1.0 + y.1.norm().max(y_new.1.norm());
        let err = ((eq.norm() * dt / scale_q).powi(2) + (ev.norm() * dt / scale_v).powi(2)).sqrt()
            / tolerance;

        let state_new = PhaseState {
            position: y_new.0,
            velocity: y_new.1,
        };
        let energy_ok =
            (problem.state_energy(&state_new) - problem.state_energy(&samples.last().unwrap().1))
                .abs()
                <= energy_budget;

        if err <= 1.0 && energy_ok {
            t += dt;
            y = y_new;
            k0 = ks[6];
            samples.push((t, state_new));
            if let Some((j, d)) = problem.nearest_center(y.0) {
                if d <= guard {
                    collision = Some(j);
                    complete = false;
                    break;
                }
            }
            dt *= (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        } else {
            let fac = if energy_ok {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.5
            };
            dt *= fac;
        }
    }
    Ok(Trajectory {
        samples,
        energy_target: h0_energy,
        collision,
        complete,
    })
}

/// Normalized supremum residual of the Newton equation along a trajectory:
/// finite-difference acceleration versus the force, `‖fd_acc − a(q, q̇)‖ /
/// (1 + ‖a(q, q̇)‖)`, maximized over interior samples.
pub fn newton_residual(problem: &Problem, trajectory: &Trajectory) -> Result<f64> {
    let s = &trajectory.samples;
    if s.len() < 5 {
        return Err(Error::BadInput(
            "newton residual needs at least 5 samples".into(),
        ));
    }
    let span = s.last().unwrap().0 - s[0].0;
    let mut worst: f64 = 0.0;
    for i in 1..s.len() - 1 {
        let (t0, a) = (s[i - 1].0, &s[i - 1].1);
        let (t1, b) = (s[i].0, &s[i].1);
        let (t2, c) = (s[i + 1].0, &s[i + 1].1);
        let (d1, d2) = (t1 - t0, t2 - t1);
        if d1.min(d2) < 1e-9 * span {
            continue;
        }
        // Nonuniform central second difference.  It approximates q̈ at the
        // centroid time of the triplet, so the force side is interpolated
        // there too; comparing at the middle sample instead would leave an
        // O(d2 − d1) error on adaptive grids.
        let fd = ((c.position - b.position) / d2 - (b.position - a.position) / d1)
            * (2.0 / (d1 + d2));
        let tm = (t0 + t1 + t2) / 3.0;
        let acc0 = acceleration(problem, a.position, a.velocity)?;
        let acc1 = acceleration(problem, b.position, b.velocity)?;
        let acc2 = acceleration(problem, c.position, c.velocity)?;
        let l0 = (tm - t1) * (tm - t2) / ((t0 - t1) * (t0 - t2));
        let l1 = (tm - t0) * (tm - t2) / ((t1 - t0) * (t1 - t2));
        let l2 = (tm - t0) * (tm - t1) / ((t2 - t0) * (t2 - t1));
        let acc = acc0 * l0 + acc1 * l1 + acc2 * l2;
        worst = worst.max((fd - acc).norm() / (1.0 + acc.norm()));
    }
    Ok(worst)
}

/// Separation constant of the two-center problem with unit particle mass and
/// centers (±c, 0) of Newtonian masses `m_plus`, `m_minus`: in elliptic
/// coordinates `x = c cosh ξ cos η`, `y = c sinh ξ sin η` the quantity
/// `G = p_η²/(2c²) − (m₊ − m₋) cos η / c + E cos²η` commutes with the flow.
pub fn two_center_integral(
    state: &PhaseState,
    c: f64,
    m_plus: f64,
    m_minus: f64,
    energy: f64,
) -> f64 {
    let q = state.position;
    let r_plus = q.dist(Vec2::new(c, 0.0));
    let r_minus = q.dist(Vec2::new(-c, 0.0));
    let cosh_xi = (r_plus + r_minus) / (2.0 * c);
    let cos_eta = (r_minus - r_plus) / (2.0 * c);
    let sinh_xi = (cosh_xi * cosh_xi - 1.0).max(0.0).sqrt();
    let sin_eta = (1.0 - cos_eta * cos_eta).max(0.0).sqrt() * q.y.signum();
    let p_eta = c * (-state.velocity.x * cosh_xi * sin_eta + state.velocity.y * sinh_xi * cos_eta);
    p_eta * p_eta / (2.0 * c * c) - (m_plus - m_minus) * cos_eta / c + energy * cos_eta * cos_eta
}

/// Write a trajectory as CSV: `t,x,y,vx,vy,H`, one row per sample.
pub fn write_csv<W: std::io::Write>(
    problem: &Problem,
    trajectory: &Trajectory,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "t,x,y,vx,vy,H")?;
    for (t, s) in &trajectory.samples {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            t,
            s.position.x,
            s.position.y,
            s.velocity.x,
            s.velocity.y,
            problem.state_energy(s)
        )?;
    }
    Ok(())
}
