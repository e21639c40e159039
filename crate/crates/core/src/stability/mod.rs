//! Z-stability classification.
//!
//! The margin `Σ_k r_k ν_k(λ)` equals `⟨a, λ⟩ − min_{q ∈ Q} ⟨q, λ⟩` for the
//! weighted polytope `Q = Σ_k r_k·conv(supported weights of factor k)` and
//! shift `a = Σ_k r_k u_k`, so every question about signs of margins becomes
//! a question about where `a` sits relative to `Q`.

pub mod hull;
pub mod lp;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use crate::algebra::{stabiliser_lie, Cocharacter, GroupDirection, Scene};
use crate::charge::{margin, CentralCharge};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::graded::specialise;
use crate::linalg;
use crate::num::{int, rat_to_f64, Field, Rational, Real};

use hull::Position;
use lp::LpResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum StabilityClass {
    Stable,
    Polystable,
    StrictlySemistable,
    Unstable,
}

impl StabilityClass {
    pub fn is_polystable(self) -> bool {
        matches!(self, StabilityClass::Stable | StabilityClass::Polystable)
    }
}

impl fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub class: StabilityClass,
    /// Destabiliser for `Unstable`, zero-margin degeneration leaving the
    /// orbit for `StrictlySemistable`.
    pub witness: Option<Cocharacter>,
    /// Margin of the witness.
    pub margin: Option<Real>,
    /// True when the classification used floating-point tolerances.
    pub numeric: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightedPolytope {
    pub vertices: Vec<Vec<Real>>,
    pub shift: Vec<Real>,
    pub affine_hull_dim: usize,
    pub exact: bool,
}

/// `Q` and `a` over a concrete field.
struct Poly<F> {
    vertices: Vec<Vec<F>>,
    shift: Vec<F>,
}

/// Factors entering `Q`: nonzero `r_k`, and negative `r_k` only where the
/// supported orbit is a single point.
fn active_factors(scene: &Scene, charge: &CentralCharge) -> Result<Vec<usize>> {
    if scene.num_factors() != charge.num_factors() {
        return Err(Error::DimensionMismatch { expected: scene.num_factors(), found: charge.num_factors() });
    }
    let mut out = Vec::new();
    for (k, r) in charge.r().iter().enumerate() {
        match r.sign() {
            Ordering::Equal => {}
            Ordering::Greater => out.push(k),
            Ordering::Less if scene.factor_is_degenerate(k) => out.push(k),
            Ordering::Less => return Err(Error::MixedSigns { factor: k }),
        }
    }
    Ok(out)
}

fn build<F: Field>(scene: &Scene, charge: &CentralCharge, active: &[usize]) -> Poly<F> {
    let d = scene.rank();
    let mut vertices: Vec<Vec<F>> = vec![vec![F::f_zero(); d]];
    let mut shift = vec![F::f_zero(); d];
    for &k in active {
        let r = F::f_from_real(&charge.r()[k]);
        let pk: Vec<Vec<F>> = scene
            .supported_weights(k)
            .iter()
            .map(|w| w.iter().map(|&x| F::f_from_i64(x).f_mul(&r)).collect())
            .collect();
        vertices = hull::minkowski(&vertices, &hull::extreme_points(pk));
        for (s, u) in shift.iter_mut().zip(&scene.factors()[k].shift) {
            *s = s.f_add(&F::f_from_real(&Real::Exact(u.clone())).f_mul(&r));
        }
    }
    Poly { vertices, shift }
}

/// Exact rational kernel of the weight differences of the given factors.
fn difference_kernel(scene: &Scene, factors: &[usize]) -> Vec<Vec<Rational>> {
    let rows: Vec<Vec<Rational>> = factors
        .iter()
        .flat_map(|&k| {
            let ws = scene.supported_weights(k);
            let first = ws[0].clone();
            ws.into_iter().skip(1).map(move |w| w.iter().zip(&first).map(|(a, b)| int(a - b)).collect())
        })
        .collect();
    linalg::kernel(&rows, scene.rank())
}

fn nondegenerate(scene: &Scene, active: &[usize]) -> Vec<usize> {
    active.iter().copied().filter(|&k| !scene.factor_is_degenerate(k)).collect()
}

pub fn weighted_polytope(scene: &Scene, charge: &CentralCharge) -> Result<WeightedPolytope> {
    let active = active_factors(scene, charge)?;
    let affine_hull_dim = scene.rank() - difference_kernel(scene, &nondegenerate(scene, &active)).len();
    if charge.is_exact() {
        let p = build::<Rational>(scene, charge, &active);
        Ok(WeightedPolytope {
            vertices: p.vertices.iter().map(|v| v.iter().map(|x| Real::Exact(x.clone())).collect()).collect(),
            shift: p.shift.into_iter().map(Real::Exact).collect(),
            affine_hull_dim,
            exact: true,
        })
    } else {
        let p = build::<f64>(scene, charge, &active);
        Ok(WeightedPolytope {
            vertices: p.vertices.iter().map(|v| v.iter().map(|&x| Real::Float(x)).collect()).collect(),
            shift: p.shift.into_iter().map(Real::Float).collect(),
            affine_hull_dim,
            exact: false,
        })
    }
}

/// Integer direction whose minimising sets in each listed factor are exactly
/// `keep[k]`: an exact LP on the weight data alone.
fn lattice_direction(scene: &Scene, factors: &[usize], keep: &[Vec<Vec<i64>>]) -> Option<Cocharacter> {
    let d = scene.rank();
    let mut eq_rows: Vec<Vec<Rational>> = Vec::new();
    let mut ge_rows: Vec<Vec<Rational>> = Vec::new();
    for (&k, kept) in factors.iter().zip(keep) {
        let base = &kept[0];
        for w in scene.supported_weights(k) {
            let diff: Vec<Rational> = w.iter().zip(base).map(|(a, b)| int(a - b)).collect();
            if kept.contains(&w) {
                if w != *base {
                    eq_rows.push(diff);
                }
            } else {
                ge_rows.push(diff);
            }
        }
    }
    // variables: mu+ (d), mu- (d), slack per ge row; minimise |mu|_1
    let g = ge_rows.len();
    let width = 2 * d + g;
    let mut rows = Vec::new();
    let mut b = Vec::new();
    for row in &eq_rows {
        let mut r = vec![Rational::zero(); width];
        for i in 0..d {
            r[i] = row[i].clone();
            r[d + i] = -row[i].clone();
        }
        rows.push(r);
        b.push(Rational::zero());
    }
    for (j, row) in ge_rows.iter().enumerate() {
        let mut r = vec![Rational::zero(); width];
        for i in 0..d {
            r[i] = row[i].clone();
            r[d + i] = -row[i].clone();
        }
        r[2 * d + j] = int(-1);
        rows.push(r);
        b.push(int(1));
    }
    let c: Vec<Rational> = (0..width).map(|j| if j < 2 * d { int(-1) } else { int(0) }).collect();
    match lp::maximize(&rows, &b, &c) {
        LpResult::Optimal { x, .. } => {
            let mu: Vec<Rational> = (0..d).map(|i| &x[i] - &x[d + i]).collect();
            Some(Cocharacter(linalg::primitive_integer(&mu)))
        }
        _ => None,
    }
}

/// Minimising supported weights of factor `k` for a float or exact direction.
fn minimising_weights<F: Field>(scene: &Scene, k: usize, lambda: &[F]) -> Vec<Vec<i64>> {
    let ws = scene.supported_weights(k);
    let vals: Vec<F> = ws
        .iter()
        .map(|w| w.iter().zip(lambda).fold(F::f_zero(), |acc, (&x, l)| acc.f_add(&l.f_mul(&F::f_from_i64(x)))))
        .collect();
    let min = vals.iter().skip(1).fold(vals[0].clone(), |m, v| if v.f_cmp_to(&m) == Ordering::Less { v.clone() } else { m });
    ws.into_iter().zip(vals).filter(|(_, v)| v.f_cmp_to(&min) == Ordering::Equal).map(|(w, _)| w).collect()
}

fn classify_in<F: Field>(scene: &Scene, charge: &CentralCharge, active: &[usize]) -> Result<Verdict> {
    let poly = build::<F>(scene, charge, active);
    let numeric = !F::EXACT;
    let make = |class: StabilityClass, witness: Option<Cocharacter>| -> Result<Verdict> {
        let margin = match &witness {
            Some(l) => Some(margin(scene, charge, l)?),
            None => None,
        };
        Ok(Verdict { class, witness, margin, numeric })
    };
    match hull::locate(&poly.shift, &poly.vertices) {
        Position::Outside => {
            let translated: Vec<Vec<F>> = poly
                .vertices
                .iter()
                .map(|v| v.iter().zip(&poly.shift).map(|(x, a)| x.f_sub(a)).collect())
                .collect();
            let d = hull::min_norm_point(&translated);
            let witness = if F::EXACT {
                let q: Vec<Rational> = d.iter().map(|x| Rational::f_from_real(&x.f_to_real())).collect();
                Cocharacter(linalg::primitive_integer(&q))
            } else {
                let dir: Vec<f64> = d.iter().map(Field::f_to_f64).collect();
                rationalise_destabiliser(scene, charge, &dir)?
            };
            make(StabilityClass::Unstable, Some(witness))
        }
        Position::Boundary => {
            let normal = hull::minimal_face_normal(&poly.shift, &poly.vertices);
            let factors = nondegenerate(scene, active);
            let keep: Vec<Vec<Vec<i64>>> = factors.iter().map(|&k| minimising_weights(scene, k, &normal)).collect();
            let witness = lattice_direction(scene, &factors, &keep).ok_or_else(|| {
                Error::Numeric("no lattice direction realises the supporting face".into())
            })?;
            make(StabilityClass::StrictlySemistable, Some(witness))
        }
        Position::Interior => {
            let stab = stabiliser_lie(scene);
            let normal_space = difference_kernel(scene, &nondegenerate(scene, active));
            if let Some(v) = normal_space.iter().find(|v| !stab.contains_exact(v)) {
                return make(StabilityClass::StrictlySemistable, Some(Cocharacter(linalg::primitive_integer(v))));
            }
            if stab.is_trivial() {
                make(StabilityClass::Stable, None)
            } else {
                make(StabilityClass::Polystable, None)
            }
        }
    }
}

/// Polytope-criterion classification; exact when every `r_k` is rational.
pub fn classify(scene: &Scene, charge: &CentralCharge) -> Result<Verdict> {
    let active = active_factors(scene, charge)?;
    if charge.is_exact() {
        classify_in::<Rational>(scene, charge, &active)
    } else {
        classify_in::<f64>(scene, charge, &active)
    }
}

/// [`classify`], falling back to the oracle when signs are mixed.
pub fn classify_allowing_mixed(scene: &Scene, charge: &CentralCharge, oracle_bound: i64) -> Result<Verdict> {
    match classify(scene, charge) {
        Err(Error::MixedSigns { .. }) => {
            let mut v = brute_force_classify(scene, charge, oracle_bound, Execution::Sequential)?;
            v.numeric = true;
            Ok(v)
        }
        other => other,
    }
}

/// Candidate directions for the oracle beyond the box: rays of the
/// arrangement cut out by the weight-difference hyperplanes, and the
/// stabiliser directions.
pub fn arrangement_rays(scene: &Scene) -> Vec<Cocharacter> {
    let stab = stabiliser_lie(scene);
    let lin: Vec<Vec<Rational>> = stab.basis().to_vec();
    let d = scene.rank() - lin.len();
    let diffs: Vec<Vec<Rational>> = {
        let mut set = BTreeSet::new();
        for k in 0..scene.num_factors() {
            let ws = scene.supported_weights(k);
            for i in 0..ws.len() {
                for j in i + 1..ws.len() {
                    let v: Vec<Rational> = ws[j].iter().zip(&ws[i]).map(|(a, b)| int(a - b)).collect();
                    let p = linalg::primitive_integer(&v);
                    let canon = if p.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
                        p.iter().map(|x| -x).collect()
                    } else {
                        p
                    };
                    set.insert(canon);
                }
            }
        }
        set.into_iter().map(|v: Vec<i64>| v.into_iter().map(int).collect()).collect()
    };
    let mut rays: BTreeSet<Cocharacter> = BTreeSet::new();
    for b in stab.lattice_basis() {
        rays.insert(b.neg());
        rays.insert(b);
    }
    if d == 0 {
        return rays.into_iter().collect();
    }
    let mut push = |rows: &[Vec<Rational>]| {
        let mut all = rows.to_vec();
        all.extend(lin.iter().cloned());
        let ker = linalg::kernel(&all, scene.rank());
        if ker.len() == 1 {
            let c = Cocharacter(linalg::primitive_integer(&ker[0]));
            rays.insert(c.neg());
            rays.insert(c);
        }
    };
    for_each_subset(diffs.len(), d - 1, &mut |idx| {
        let rows: Vec<Vec<Rational>> = idx.iter().map(|&i| diffs[i].clone()).collect();
        push(&rows);
    });
    rays.into_iter().collect()
}

fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Exhaustive classification over `[-bound, bound]^r` plus the arrangement
/// rays, using only margins and supports.
pub fn brute_force_classify(scene: &Scene, charge: &CentralCharge, bound: i64, mode: Execution) -> Result<Verdict> {
    if bound < 1 {
        return Err(Error::Precondition("oracle bound must be at least 1".into()));
    }
    if scene.num_factors() != charge.num_factors() {
        return Err(Error::DimensionMismatch { expected: scene.num_factors(), found: charge.num_factors() });
    }
    let mut candidates: BTreeSet<Cocharacter> = Cocharacter::enumerate_box(scene.rank(), bound).into_iter().collect();
    candidates.extend(arrangement_rays(scene));
    candidates.remove(&Cocharacter::zero(scene.rank()));
    let candidates: Vec<Cocharacter> = candidates.into_iter().collect();
    let supports = scene.supports();
    let evaluated = exec::map(mode, &candidates, |l| -> Result<(Real, bool)> {
        let m = margin(scene, charge, l)?;
        let leaves = specialise(scene, l)?.supports != supports;
        Ok((m, leaves))
    });
    let mut rows = Vec::with_capacity(candidates.len());
    for (l, e) in candidates.iter().zip(evaluated) {
        let (m, leaves) = e?;
        rows.push((l, m, leaves));
    }
    let numeric = !charge.is_exact();
    // most negative normalised margin wins, ties by enumeration order
    let mut worst: Option<(&Cocharacter, &Real, f64)> = None;
    for (l, m, _) in &rows {
        if m.sign() == Ordering::Less {
            let nm = m.to_f64() / l.norm();
            if worst.as_ref().is_none_or(|w| nm < w.2) {
                worst = Some((l, m, nm));
            }
        }
    }
    if let Some((l, m, _)) = worst {
        return Ok(Verdict {
            class: StabilityClass::Unstable,
            witness: Some((*l).clone()),
            margin: Some(m.clone()),
            numeric,
        });
    }
    if let Some((l, m, _)) = rows.iter().find(|(_, m, leaves)| *leaves && m.sign() == Ordering::Equal) {
        return Ok(Verdict {
            class: StabilityClass::StrictlySemistable,
            witness: Some((*l).clone()),
            margin: Some(m.clone()),
            numeric,
        });
    }
    let has_stabiliser = rows.iter().any(|(_, _, leaves)| !leaves);
    let class = if has_stabiliser { StabilityClass::Polystable } else { StabilityClass::Stable };
    Ok(Verdict { class, witness: None, margin: None, numeric })
}

#[derive(Clone, Debug, Serialize)]
pub struct Destabiliser {
    /// Unit vector along `proj_Q(a) − a`.
    pub direction: GroupDirection,
    pub rational_approx: Cocharacter,
    /// `margin(direction) / |direction| = −dist(a, Q)`.
    pub normalized_margin: f64,
    pub approx_normalized_margin: f64,
    pub distance: f64,
}

/// Normalised margin `margin(λ)/|λ|` as a float.
pub fn normalized_margin(scene: &Scene, charge: &CentralCharge, lambda: &Cocharacter) -> Result<f64> {
    Ok(margin(scene, charge, lambda)?.to_f64() / lambda.norm())
}

/// Margin on an arbitrary real direction: `⟨a,v⟩ − min_Q ⟨q,v⟩`.
pub fn direction_margin(scene: &Scene, charge: &CentralCharge, v: &[f64]) -> f64 {
    let r = charge.r_f64();
    let mut total = 0.0;
    for (k, f) in scene.factors().iter().enumerate() {
        if r[k] == 0.0 {
            continue;
        }
        let u: f64 = f.shift_f64().iter().zip(v).map(|(a, b)| a * b).sum();
        let m = scene
            .support(k)
            .into_iter()
            .map(|i| f.weights[i].iter().zip(v).map(|(&w, x)| w as f64 * x).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        total += r[k] * (u - m);
    }
    total
}

/// Small lattice vector near the float direction `dir` whose normalised
/// margin is within 1e-6 of the optimum `-|dir|`.
fn rationalise_destabiliser(scene: &Scene, charge: &CentralCharge, dir: &[f64]) -> Result<Cocharacter> {
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Numeric("zero destabilising direction".into()));
    }
    let target = -norm;
    let unit: Vec<f64> = dir.iter().map(|x| x / norm).collect();
    let mut scale = 1.0;
    let mut best: Option<(Cocharacter, f64)> = None;
    while scale <= 1e9 {
        let cand = Cocharacter(unit.iter().map(|x| (x * scale).round() as i64).collect());
        if !cand.is_trivial() {
            let nm = normalized_margin(scene, charge, &cand)?;
            if best.as_ref().is_none_or(|b| nm < b.1) {
                best = Some((cand.clone(), nm));
            }
            if nm - target < 1e-6 {
                return Ok(cand);
            }
        }
        scale *= 2.0;
    }
    best.map(|b| b.0).ok_or_else(|| Error::Numeric("could not rationalise destabilising direction".into()))
}

fn destabiliser_in<F: Field>(scene: &Scene, charge: &CentralCharge, active: &[usize]) -> Result<Destabiliser> {
    let poly = build::<F>(scene, charge, active);
    if hull::locate(&poly.shift, &poly.vertices) != Position::Outside {
        return Err(Error::Precondition("scene is not unstable for this charge".into()));
    }
    let translated: Vec<Vec<F>> = poly
        .vertices
        .iter()
        .map(|v| v.iter().zip(&poly.shift).map(|(x, a)| x.f_sub(a)).collect())
        .collect();
    let d = hull::min_norm_point(&translated);
    let dir: Vec<f64> = d.iter().map(Field::f_to_f64).collect();
    let distance = if F::EXACT {
        rat_to_f64(&d.iter().map(|x| Rational::f_from_real(&x.f_to_real())).map(|x| &x * &x).sum::<Rational>()).sqrt()
    } else {
        dir.iter().map(|x| x * x).sum::<f64>().sqrt()
    };
    let rational_approx = if F::EXACT {
        let q: Vec<Rational> = d.iter().map(|x| Rational::f_from_real(&x.f_to_real())).collect();
        Cocharacter(linalg::primitive_integer(&q))
    } else {
        rationalise_destabiliser(scene, charge, &dir)?
    };
    let direction = GroupDirection(dir.iter().map(|x| x / distance).collect());
    Ok(Destabiliser {
        normalized_margin: direction_margin(scene, charge, direction.entries()),
        approx_normalized_margin: normalized_margin(scene, charge, &rational_approx)?,
        direction,
        rational_approx,
        distance,
    })
}

/// Direction of steepest descent of the normalised margin.
pub fn optimal_destabiliser(scene: &Scene, charge: &CentralCharge) -> Result<Destabiliser> {
    let active = active_factors(scene, charge)?;
    if charge.is_exact() {
        destabiliser_in::<Rational>(scene, charge, &active)
    } else {
        destabiliser_in::<f64>(scene, charge, &active)
    }
}

fn distance_in<F: Field>(scene: &Scene, charge: &CentralCharge, active: &[usize]) -> f64 {
    let poly = build::<F>(scene, charge, active);
    let translated: Vec<Vec<F>> = poly
        .vertices
        .iter()
        .map(|v| v.iter().zip(&poly.shift).map(|(x, a)| x.f_sub(a)).collect())
        .collect();
    let d = hull::min_norm_point(&translated);
    d.iter().map(|x| x.f_to_f64().powi(2)).sum::<f64>().sqrt()
}

/// `dist(a, Q)`, zero when `a ∈ Q`.
pub fn distance_to_polytope(scene: &Scene, charge: &CentralCharge) -> Result<f64> {
    let active = active_factors(scene, charge)?;
    Ok(if charge.is_exact() {
        distance_in::<Rational>(scene, charge, &active)
    } else {
        distance_in::<f64>(scene, charge, &active)
    })
}
