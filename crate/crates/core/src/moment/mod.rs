//! Complex moment maps, compatibility with the charge, the Z-energy and its
//! derivatives.
//!
//! Everything here is evaluated at `e^σ·x` through per-factor Gibbs weights
//! `p_i ∝ |x_i|² e^{2⟨w_i, σ⟩}` with a log-sum-exp shift, so large `σ` never
//! overflows.

mod solver;

pub use solver::{solve_critical, z_flow, FlowStatus, FlowTrace, SolveOutcome, DEFAULT_TOL};

use num_complex::Complex64;
use num_traits::Zero;
use serde::Serialize;

use crate::algebra::{stabiliser_lie, GroupDirection, Scene};
use crate::charge::{z_of_degeneration, CentralCharge};
use crate::error::{Error, Result};
use crate::graded::GradedPoint;
use crate::linalg;
use crate::num::{f64_to_rat, int, rat_to_f64, CValue, Rational, Real};

/// Gibbs distribution of factor `k` at `σ`: supported indices, probabilities
/// and `log Σ_i |x_i|² e^{2⟨w_i,σ⟩}`.
pub(crate) struct Gibbs {
    pub idx: Vec<usize>,
    pub p: Vec<f64>,
    pub log_partition: f64,
}

pub(crate) fn gibbs(scene: &Scene, k: usize, sigma: &[f64]) -> Gibbs {
    let f = &scene.factors()[k];
    let x = &scene.point()[k];
    let idx = scene.support(k);
    let logs: Vec<f64> = idx
        .iter()
        .map(|&i| {
            let pair: f64 = f.weights[i].iter().zip(sigma).map(|(&w, s)| w as f64 * s).sum();
            x[i].norm_sqr().ln() + 2.0 * pair
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = e.iter().sum();
    Gibbs { p: e.iter().map(|v| v / z).collect(), log_partition: top + z.ln(), idx }
}

/// Barycenter `Σ p_i w_i` and covariance of factor `k` at `σ`.
pub(crate) fn barycenter_cov(scene: &Scene, k: usize, g: &Gibbs) -> (Vec<f64>, Vec<Vec<f64>>) {
    let r = scene.rank();
    let f = &scene.factors()[k];
    let mut b = vec![0.0; r];
    for (&i, p) in g.idx.iter().zip(&g.p) {
        for (bj, &w) in b.iter_mut().zip(&f.weights[i]) {
            *bj += p * w as f64;
        }
    }
    let mut cov = vec![vec![0.0; r]; r];
    for (&i, p) in g.idx.iter().zip(&g.p) {
        let d: Vec<f64> = f.weights[i].iter().zip(&b).map(|(&w, m)| w as f64 - m).collect();
        for a in 0..r {
            for c in 0..r {
                cov[a][c] += p * d[a] * d[c];
            }
        }
    }
    (b, cov)
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentValue {
    pub z_tilde: Vec<Complex64>,
    /// `Im(e^{-iφ} z̃) = Σ_k r_k (u_k − b_k)`.
    pub residual: Vec<f64>,
    pub residual_norm: f64,
}

fn check(scene: &Scene, charge: &CentralCharge) -> Result<()> {
    if scene.num_factors() != charge.num_factors() {
        return Err(Error::DimensionMismatch { expected: scene.num_factors(), found: charge.num_factors() });
    }
    Ok(())
}

/// `z̃ = Σ_k c_k (u_k − b_k)` at `e^σ·x`.
pub fn moment_at(scene: &Scene, charge: &CentralCharge, sigma: &GroupDirection) -> Result<MomentValue> {
    check(scene, charge)?;
    scene.check_direction(sigma)?;
    let r = scene.rank();
    let rk = charge.r_f64();
    let mut z_tilde = vec![Complex64::zero(); r];
    let mut residual = vec![0.0; r];
    for (k, f) in scene.factors().iter().enumerate() {
        let g = gibbs(scene, k, sigma.entries());
        let (b, _) = barycenter_cov(scene, k, &g);
        let c = charge.coefficients()[k].to_complex();
        for j in 0..r {
            let diff = rat_to_f64(&f.shift[j]) - b[j];
            z_tilde[j] += c * diff;
            residual[j] += rk[k] * diff;
        }
    }
    let residual_norm = residual.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(MomentValue { z_tilde, residual, residual_norm })
}

pub fn complex_moment(scene: &Scene, charge: &CentralCharge) -> Result<MomentValue> {
    moment_at(scene, charge, &GroupDirection::zero(scene.rank()))
}

/// `z̃` with barycenters computed exactly from the float coordinates.
pub fn complex_moment_exact(scene: &Scene, charge: &CentralCharge) -> Result<Vec<CValue>> {
    check(scene, charge)?;
    let r = scene.rank();
    let mut out = vec![CValue::zero(); r];
    for (k, f) in scene.factors().iter().enumerate() {
        let mut total = Rational::zero();
        let mut b = vec![Rational::zero(); r];
        for i in scene.support(k) {
            let z = scene.point()[k][i];
            let m = f64_to_rat(z.re) * f64_to_rat(z.re) + f64_to_rat(z.im) * f64_to_rat(z.im);
            for (bj, &w) in b.iter_mut().zip(&f.weights[i]) {
                *bj += &m * int(w);
            }
            total += m;
        }
        for j in 0..r {
            let diff = &f.shift[j] - &b[j] / &total;
            out[j] = &out[j] + &charge.coefficients()[k].scale(&Real::Exact(diff));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct Compatibility {
    /// `|⟨z̃(y), λ⟩ − Z(y, λ)|`; exact zero when computed in rationals.
    pub deviation: Real,
    /// Angle between `tr z̃(y)` and the line `e^{iφ}ℝ`, when `y` is critical
    /// and the trace is not below [`TRACE_FLOOR`].
    pub phase_deviation: Option<f64>,
}

/// Residual norm below which [`compatibility_check`] reports the phase test.
pub const CRITICAL_TOL: f64 = 1e-8;

/// Below `TRACE_FLOOR·max(1, |τ|)` the trace is treated as zero and its
/// argument as undefined; with a single active factor `z̃` is proportional to
/// the residual and vanishes at every critical point.
pub const TRACE_FLOOR: f64 = 1e-6;

/// The trace direction `τ = Σ_k Σ_i w_i` used to pair `z̃` to a scalar.
pub fn trace_direction(scene: &Scene) -> Vec<f64> {
    let mut tau = vec![0.0; scene.rank()];
    for f in scene.factors() {
        for w in &f.weights {
            for (t, &x) in tau.iter_mut().zip(w) {
                *t += x as f64;
            }
        }
    }
    tau
}

pub fn compatibility_check(charge: &CentralCharge, g: &GradedPoint) -> Result<Compatibility> {
    let y = g.scene();
    let lambda = g.lambda();
    check(y, charge)?;
    let z = z_of_degeneration(y, charge, lambda)?.z;
    let deviation = if charge.coefficients().iter().all(CValue::is_exact) {
        let zt = complex_moment_exact(y, charge)?;
        let paired = zt
            .iter()
            .zip(lambda.entries())
            .fold(CValue::zero(), |acc, (c, &l)| &acc + &c.scale(&Real::from_i64(l)));
        let diff = &paired - &z;
        match (&diff.re, &diff.im) {
            (Real::Exact(a), Real::Exact(b)) if a.is_zero() && b.is_zero() => Real::zero(),
            _ => Real::Float(diff.to_complex().norm()),
        }
    } else {
        let m = complex_moment(y, charge)?;
        let paired: Complex64 = m.z_tilde.iter().zip(lambda.entries()).map(|(c, &l)| c * l as f64).sum();
        Real::Float((paired - z.to_complex()).norm())
    };
    let m = complex_moment(y, charge)?;
    let phase_deviation = if m.residual_norm < CRITICAL_TOL {
        let tau = trace_direction(y);
        let tr: Complex64 = m.z_tilde.iter().zip(&tau).map(|(c, t)| c * t).sum();
        let scale = tau.iter().map(|t| t * t).sum::<f64>().sqrt().max(1.0);
        if tr.norm() <= TRACE_FLOOR * scale {
            None
        } else {
            let rot = Complex64::from_polar(1.0, -charge.phase().value()) * tr;
            Some((rot.im.abs() / rot.norm()).asin())
        }
    } else {
        None
    };
    Ok(Compatibility { deviation, phase_deviation })
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorSign {
    pub r: Real,
    pub degenerate: bool,
    pub positive: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubsolutionReport {
    pub holds: bool,
    pub factors: Vec<FactorSign>,
}

/// `r_k > 0` on every factor whose supported orbit is not a single point.
pub fn subsolution_check(scene: &Scene, charge: &CentralCharge) -> Result<SubsolutionReport> {
    check(scene, charge)?;
    let factors: Vec<FactorSign> = charge
        .r()
        .iter()
        .enumerate()
        .map(|(k, r)| FactorSign {
            r: r.clone(),
            degenerate: scene.factor_is_degenerate(k),
            positive: r.sign() == std::cmp::Ordering::Greater,
        })
        .collect();
    let holds = factors.iter().all(|f| f.positive || f.degenerate);
    Ok(SubsolutionReport { holds, factors })
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    pub value: f64,
    pub complex_value: Complex64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
}

/// `ℰ(σ) = Σ_k r_k (½ log Σ_i |x_i|² e^{2⟨w_i,σ⟩} − ⟨u_k, σ⟩)` with its
/// gradient `−residual(e^σ x)` and Hessian `Σ_k 2 r_k Cov_k`.
pub fn energy(scene: &Scene, charge: &CentralCharge, sigma: &GroupDirection) -> Result<EnergyReport> {
    check(scene, charge)?;
    scene.check_direction(sigma)?;
    let r = scene.rank();
    let rk = charge.r_f64();
    let mut value = 0.0;
    let mut complex_value = Complex64::zero();
    let mut gradient = vec![0.0; r];
    let mut hessian = vec![vec![0.0; r]; r];
    for (k, f) in scene.factors().iter().enumerate() {
        let g = gibbs(scene, k, sigma.entries());
        let (b, cov) = barycenter_cov(scene, k, &g);
        let u = f.shift_f64();
        let us: f64 = u.iter().zip(sigma.entries()).map(|(a, s)| a * s).sum();
        let a_k = us - 0.5 * g.log_partition;
        value -= rk[k] * a_k;
        complex_value += Complex64::i() * charge.coefficients()[k].to_complex() * a_k;
        for j in 0..r {
            gradient[j] += rk[k] * (b[j] - u[j]);
            for c in 0..r {
                hessian[j][c] += 2.0 * rk[k] * cov[j][c];
            }
        }
    }
    if !value.is_finite() || !complex_value.is_finite() {
        return Err(Error::Numeric(format!("energy overflows at sigma = {:?}", sigma.entries())));
    }
    Ok(EnergyReport { value, complex_value, gradient, hessian })
}

/// `ℰ(σ + δ) − ℰ(σ)` without cancellation, via `log1p`/`expm1`.
pub fn energy_difference(scene: &Scene, charge: &CentralCharge, sigma: &[f64], delta: &[f64]) -> f64 {
    let rk = charge.r_f64();
    let mut total = 0.0;
    for (k, f) in scene.factors().iter().enumerate() {
        if rk[k] == 0.0 {
            continue;
        }
        let g = gibbs(scene, k, sigma);
        let mut s = 0.0;
        for (&i, p) in g.idx.iter().zip(&g.p) {
            let pair: f64 = f.weights[i].iter().zip(delta).map(|(&w, d)| w as f64 * d).sum();
            s += p * (2.0 * pair).exp_m1();
        }
        let ud: f64 = f.shift_f64().iter().zip(delta).map(|(a, d)| a * d).sum();
        total += rk[k] * (0.5 * s.ln_1p() - ud);
    }
    total
}

/// `d/dt ℰ(tλ)` at `t = −T`; tends to `−margin(λ)` as `T → ∞`.
pub fn energy_slope(scene: &Scene, charge: &CentralCharge, lambda: &[f64], t: f64) -> Result<f64> {
    let sigma = GroupDirection(lambda.iter().map(|l| l * t).collect());
    let e = energy(scene, charge, &sigma)?;
    Ok(e.gradient.iter().zip(lambda).map(|(g, l)| g * l).sum())
}

/// Residual projected onto the orthogonal complement of the stabiliser.
pub fn extremal_defect(scene: &Scene, charge: &CentralCharge, sigma: &GroupDirection) -> Result<f64> {
    let m = moment_at(scene, charge, sigma)?;
    let onb = stabiliser_lie(scene).orthonormal();
    let rest = linalg::reject(&m.residual, &onb);
    Ok(rest.iter().map(|x| x * x).sum::<f64>().sqrt())
}

/// Residual lies in the stabiliser directions up to `tol`.
pub fn is_extremal(scene: &Scene, charge: &CentralCharge, tol: f64) -> Result<bool> {
    Ok(extremal_defect(scene, charge, &GroupDirection::zero(scene.rank()))? < tol)
}
