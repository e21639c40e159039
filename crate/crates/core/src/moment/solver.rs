use serde::Serialize;

use super::{energy, energy_difference, moment_at, subsolution_check};
use crate::algebra::{stabiliser_lie, GroupDirection, Scene};
use crate::charge::CentralCharge;
use crate::error::{Error, Result};
use crate::linalg;

pub const DEFAULT_TOL: f64 = 1e-8;

const STEP_CAP: f64 = 4.0;
const ARMIJO: f64 = 1e-4;
const STAGNATION_WINDOW: usize = 100;
const CHOLESKY_FLOOR: f64 = 1e-14;
/// Certification floor for the reduced Hessian, relative to `Σ r_k diam_k²`.
const CERTIFY_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FlowStatus {
    Converged,
    MaxSteps,
    Diverging,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    pub sigmas: Vec<GroupDirection>,
    pub residual_norms: Vec<f64>,
    pub energies: Vec<f64>,
    /// `ℰ(σ_{n+1}) − ℰ(σ_n)` evaluated without cancellation; one shorter than
    /// `energies`.
    pub energy_decrements: Vec<f64>,
    pub status: Option<FlowStatus>,
    /// Set when the adaptive step fell below its floor.
    pub underflow: bool,
}

impl FlowTrace {
    fn push(&mut self, t: f64, sigma: &[f64], residual: f64, energy: f64) {
        self.times.push(t);
        self.sigmas.push(GroupDirection(sigma.to_vec()));
        self.residual_norms.push(residual);
        self.energies.push(energy);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with columns `t, sigma_1..r, residual_norm, energy`.
    pub fn to_csv(&self) -> String {
        let r = self.sigmas.first().map_or(0, GroupDirection::rank);
        let mut out = String::from("t");
        for j in 1..=r {
            out.push_str(&format!(",sigma_{j}"));
        }
        out.push_str(",residual_norm,energy\n");
        for i in 0..self.len() {
            out.push_str(&format!("{}", self.times[i]));
            for s in self.sigmas[i].entries() {
                out.push_str(&format!(",{s}"));
            }
            out.push_str(&format!(",{},{}\n", self.residual_norms[i], self.energies[i]));
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveOutcome {
    pub status: FlowStatus,
    /// Present only on convergence.
    pub sigma: Option<GroupDirection>,
    pub last_sigma: GroupDirection,
    pub residual_norm: f64,
    /// Smallest residual norm seen along the iteration.
    pub residual_floor: f64,
    pub iterations: usize,
    pub trace: FlowTrace,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn divergence_radius(scene: &Scene) -> f64 {
    50.0 * (1.0 + scene.weight_spread() as f64)
}

fn require_subsolution(scene: &Scene, charge: &CentralCharge) -> Result<()> {
    if subsolution_check(scene, charge)?.holds {
        Ok(())
    } else {
        Err(Error::Precondition("charge is not a subsolution on this scene".into()))
    }
}

/// Damped Newton on the energy over the orthogonal complement of the
/// stabiliser.
///
/// Convergence needs the residual below `tol` together with a positive definite
/// reduced Hessian and a Newton correction under `1e-7`; a residual that only
/// tends to zero at infinity is not accepted.
pub fn solve_critical(
    scene: &Scene,
    charge: &CentralCharge,
    sigma0: &GroupDirection,
    tol: f64,
    max_iter: usize,
) -> Result<SolveOutcome> {
    require_subsolution(scene, charge)?;
    scene.check_direction(sigma0)?;
    if !(tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let basis = stabiliser_lie(scene).complement_orthonormal();
    let d = basis.len();
    let radius = divergence_radius(scene);
    let certify_floor = CERTIFY_FLOOR * curvature_scale(scene, charge);
    let mut sigma = sigma0.entries().to_vec();
    let mut trace = FlowTrace::default();
    let mut floor_history: Vec<f64> = Vec::new();
    let mut floor = f64::INFINITY;

    let finish = |status: FlowStatus, sigma: Vec<f64>, res: f64, floor: f64, it: usize, mut trace: FlowTrace| {
        trace.status = Some(status);
        SolveOutcome {
            status,
            sigma: (status == FlowStatus::Converged).then(|| GroupDirection(sigma.clone())),
            last_sigma: GroupDirection(sigma),
            residual_norm: res,
            residual_floor: floor,
            iterations: it,
            trace,
        }
    };

    for it in 0..=max_iter {
        let e = energy(scene, charge, &GroupDirection(sigma.clone()))?;
        let res = norm(&e.gradient);
        if !res.is_finite() || !e.value.is_finite() {
            return Err(Error::Numeric(format!("non-finite energy at iteration {it}")));
        }
        floor = floor.min(res);
        floor_history.push(floor);
        trace.push(it as f64, &sigma, res, e.value);

        if d == 0 {
            let status = if res < tol { FlowStatus::Converged } else { FlowStatus::Diverging };
            return Ok(finish(status, sigma, res, floor, it, trace));
        }
        let (g, h) = reduce(&e.gradient, &e.hessian, &basis);
        if let Some(l) = &linalg::cholesky(&h, certify_floor) {
            if norm(&g) < tol && norm(&linalg::cholesky_solve(l, &g)) < 1e-7 {
                // what is left of the residual lies along the stabiliser
                if res >= tol {
                    return Ok(finish(FlowStatus::Diverging, sigma, res, floor, it, trace));
                }
                let (sigma, res) = polish(scene, charge, &basis, sigma, res)?;
                return Ok(finish(FlowStatus::Converged, sigma, res, floor.min(res), it, trace));
            }
        }
        // (H + μI)Δ = −g with μ = |g|: Newton on curved directions, a
        // gradient step along the flat ones that open up at infinity
        let mu = norm(&g);
        let damped: Vec<Vec<f64>> =
            h.iter().enumerate().map(|(i, row)| row.iter().enumerate().map(|(j, x)| if i == j { x + mu } else { *x }).collect()).collect();
        let chol = linalg::cholesky(&damped, CHOLESKY_FLOOR);
        let newton = chol.is_some();
        let mut step: Vec<f64> = match &chol {
            Some(l) => linalg::cholesky_solve(l, &g).into_iter().map(|x| -x).collect(),
            None => g.iter().map(|x| -x).collect(),
        };
        let len = norm(&step);
        if it == max_iter {
            break;
        }
        if len > STEP_CAP {
            step.iter_mut().for_each(|x| *x *= STEP_CAP / len);
        }
        let full: Vec<f64> = (0..sigma.len()).map(|a| basis.iter().zip(&step).map(|(b, s)| b[a] * s).sum()).collect();
        let slope: f64 = g.iter().zip(&step).map(|(x, y)| x * y).sum();
        let mut t = 1.0;
        let mut delta_e;
        loop {
            let trial: Vec<f64> = full.iter().map(|x| x * t).collect();
            delta_e = energy_difference(scene, charge, &sigma, &trial);
            if (newton && len < 1e-3) || delta_e <= ARMIJO * t * slope || t < 1e-12 {
                break;
            }
            t *= 0.5;
        }
        trace.energy_decrements.push(delta_e);
        for (s, x) in sigma.iter_mut().zip(&full) {
            *s += t * x;
        }
        if norm(&sigma) > radius && floor_history.len() > STAGNATION_WINDOW {
            let earlier = floor_history[floor_history.len() - 1 - STAGNATION_WINDOW];
            if earlier - floor <= 1e-12 * (1.0 + floor) {
                let e = energy(scene, charge, &GroupDirection(sigma.clone()))?;
                let res = norm(&e.gradient);
                trace.push((it + 1) as f64, &sigma, res, e.value);
                return Ok(finish(FlowStatus::Diverging, sigma, res, floor.min(res), it + 1, trace));
            }
        }
    }
    let res = *trace.residual_norms.last().unwrap_or(&f64::INFINITY);
    Ok(finish(FlowStatus::MaxSteps, sigma, res, floor, max_iter, trace))
}

/// Gradient and Hessian in the orthonormal `basis`.
fn reduce(gradient: &[f64], hessian: &[Vec<f64>], basis: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let g = basis.iter().map(|b| b.iter().zip(gradient).map(|(x, y)| x * y).sum()).collect();
    let h = basis
        .iter()
        .map(|bi| {
            basis
                .iter()
                .map(|bj| {
                    let mut s = 0.0;
                    for (a, row) in hessian.iter().enumerate() {
                        for (c, x) in row.iter().enumerate() {
                            s += bi[a] * x * bj[c];
                        }
                    }
                    s
                })
                .collect()
        })
        .collect();
    (g, h)
}

/// A few full Newton steps past the certificate, kept while the residual
/// keeps falling.
fn polish(scene: &Scene, charge: &CentralCharge, basis: &[Vec<f64>], mut sigma: Vec<f64>, mut res: f64) -> Result<(Vec<f64>, f64)> {
    for _ in 0..4 {
        let e = energy(scene, charge, &GroupDirection(sigma.clone()))?;
        let (g, h) = reduce(&e.gradient, &e.hessian, basis);
        let Some(l) = linalg::cholesky(&h, 0.0) else { break };
        let step = linalg::cholesky_solve(&l, &g);
        let trial: Vec<f64> =
            (0..sigma.len()).map(|a| sigma[a] - basis.iter().zip(&step).map(|(b, s)| b[a] * s).sum::<f64>()).collect();
        let r = moment_at(scene, charge, &GroupDirection(trial.clone()))?.residual_norm;
        if !(r < res) {
            break;
        }
        sigma = trial;
        res = r;
    }
    Ok((sigma, res))
}

/// `Σ_k |r_k| diam_k²`, an upper bound for the Hessian up to a factor.
fn curvature_scale(scene: &Scene, charge: &CentralCharge) -> f64 {
    let rk = charge.r_f64();
    let mut curvature = 0.0;
    for (k, r) in rk.iter().enumerate() {
        let w = scene.supported_weights(k);
        let mut diam2: f64 = 0.0;
        for a in &w {
            for b in &w {
                diam2 = diam2.max(a.iter().zip(b).map(|(x, y)| ((x - y) as f64).powi(2)).sum());
            }
        }
        curvature += r.abs() * diam2;
    }
    curvature
}

fn initial_step(scene: &Scene, charge: &CentralCharge) -> f64 {
    let curvature = curvature_scale(scene, charge);
    if curvature > 0.0 {
        (1.0 / curvature).min(0.5)
    } else {
        0.5
    }
}

const MAX_FLOW_STEPS: usize = 200_000;
const MIN_STEP: f64 = 1e-14;

/// Explicit Euler on `dσ/dt = residual(e^σ x) = −∇ℰ(σ)`.
///
/// A step is rejected, and `h` halved, when the energy fails to decrease or
/// the residual norm grows.
pub fn z_flow(scene: &Scene, charge: &CentralCharge, sigma0: &GroupDirection, t_end: f64, tol: f64) -> Result<FlowTrace> {
    scene.check_direction(sigma0)?;
    if !(t_end >= 0.0) || !(tol > 0.0) {
        return Err(Error::Precondition("t_end must be non-negative and tol positive".into()));
    }
    let radius = divergence_radius(scene);
    let mut h = initial_step(scene, charge);
    let mut sigma = sigma0.entries().to_vec();
    let mut t = 0.0;
    let mut trace = FlowTrace::default();
    let mut m = moment_at(scene, charge, sigma0)?;
    let mut value = energy(scene, charge, sigma0)?.value;
    trace.push(t, &sigma, m.residual_norm, value);
    let mut steps = 0;
    loop {
        if m.residual_norm < tol {
            trace.status = Some(FlowStatus::Converged);
            return Ok(trace);
        }
        if norm(&sigma) > radius {
            trace.status = Some(FlowStatus::Diverging);
            return Ok(trace);
        }
        if t >= t_end || steps >= MAX_FLOW_STEPS {
            trace.status = Some(FlowStatus::MaxSteps);
            return Ok(trace);
        }
        let hh = h.min(t_end - t);
        let delta: Vec<f64> = m.residual.iter().map(|x| x * hh).collect();
        let de = energy_difference(scene, charge, &sigma, &delta);
        let next: Vec<f64> = sigma.iter().zip(&delta).map(|(a, b)| a + b).collect();
        let m_next = moment_at(scene, charge, &GroupDirection(next.clone()))?;
        if de < 0.0 && m_next.residual_norm <= m.residual_norm + 1e-12 {
            sigma = next;
            m = m_next;
            t += hh;
            value += de;
            steps += 1;
            trace.push(t, &sigma, m.residual_norm, value);
            trace.energy_decrements.push(de);
            h *= 1.25;
        } else {
            h *= 0.5;
            if h < MIN_STEP {
                trace.underflow = true;
                trace.status = Some(FlowStatus::MaxSteps);
                return Ok(trace);
            }
        }
    }
}
