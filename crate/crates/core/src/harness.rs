//! Seeded instance generation, the Kempf–Ness cross-check between exact
//! classification and the numerical solver, and charge-space sweeps.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{pairing_int, Cocharacter, GroupDirection, LinearisedFactor, Scene};
use crate::charge::{CentralCharge, Phase};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::graded::specialise;
use crate::moment::{solve_critical, FlowStatus};
use crate::num::{int, rat, CValue, Rational, Real};
use crate::scenario::ScenarioFile;
use crate::stability::{classify, classify_allowing_mixed, distance_to_polytope, StabilityClass};

pub const REPORT_VERSION: u32 = 1;
/// Allowed gap between the solver's residual floor and `dist(a, Q)`.
pub const FLOOR_TOL: f64 = 1e-4;
pub const SOLVER_MAX_ITER: usize = 2000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    /// Inclusive bounds.
    pub rank_range: (usize, usize),
    pub factor_count_range: (usize, usize),
    pub coords_range: (usize, usize),
    pub weight_bound: i64,
    pub seed: u64,
    pub count: usize,
}

impl InstanceSpec {
    pub fn new(seed: u64, count: usize) -> Self {
        InstanceSpec {
            rank_range: (1, 3),
            factor_count_range: (1, 3),
            coords_range: (2, 5),
            weight_bound: 3,
            seed,
            count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (usize, usize), min: usize, cap: usize| lo >= min && lo <= hi && hi <= cap;
        if !ok(self.rank_range, 1, 4) {
            return Err(Error::Precondition(format!("rank range {:?} outside 1..=4", self.rank_range)));
        }
        if !ok(self.factor_count_range, 1, 3) {
            return Err(Error::Precondition(format!("factor range {:?} outside 1..=3", self.factor_count_range)));
        }
        if !ok(self.coords_range, 2, 10) {
            return Err(Error::Precondition(format!("coordinate range {:?} outside 2..=10", self.coords_range)));
        }
        if self.weight_bound <= 0 {
            return Err(Error::Precondition("weight bound must be positive".into()));
        }
        Ok(())
    }
}

/// Where the generated shift sits relative to the weight polytope.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ShiftPlacement {
    Interior,
    Boundary,
    Exterior,
}

fn rng_for(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn small_rational(rng: &mut ChaCha8Rng, span: i64) -> Rational {
    let q = rng.gen_range(1..=4);
    rat(rng.gen_range(-span * q..=span * q), q)
}

/// Random convex combination of `points` with positive rational weights.
fn convex_combination(rng: &mut ChaCha8Rng, points: &[Vec<i64>], rank: usize) -> Vec<Rational> {
    let coeffs: Vec<i64> = points.iter().map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = coeffs.iter().sum();
    (0..rank)
        .map(|j| points.iter().zip(&coeffs).map(|(p, &c)| int(p[j] * c)).sum::<Rational>() / int(total))
        .collect()
}

fn random_phase(rng: &mut ChaCha8Rng) -> Phase {
    match rng.gen_range(0..3) {
        0 => Phase::zero(),
        1 => Phase::pi_times(rat(1, 4)).expect("finite"),
        _ => Phase::radians(FRAC_PI_2 - 0.1).expect("finite"),
    }
}

/// Gaussian-rational coefficients with `r_k > 0.05`.
fn random_charge(rng: &mut ChaCha8Rng, m: usize) -> CentralCharge {
    let phase = random_phase(rng);
    let rot = Complex64::from_polar(1.0, -phase.value());
    let coefficients = (0..m)
        .map(|_| loop {
            let c = CValue::exact(small_rational(rng, 2), small_rational(rng, 2));
            if (rot * c.to_complex()).im > 0.05 {
                break c;
            }
        })
        .collect();
    CentralCharge::new(coefficients, phase).expect("nonzero coefficients")
}

/// Deterministic in `(spec.seed, index)`.
pub fn generate_scene(spec: &InstanceSpec, index: usize) -> Result<(Scene, CentralCharge)> {
    generate_with_placement(spec, index).map(|(s, c, _)| (s, c))
}

pub fn generate_with_placement(spec: &InstanceSpec, index: usize) -> Result<(Scene, CentralCharge, ShiftPlacement)> {
    spec.validate()?;
    if index >= spec.count {
        return Err(Error::Precondition(format!("index {index} out of range for count {}", spec.count)));
    }
    let mut rng = rng_for(spec.seed, index);
    let r = rng.gen_range(spec.rank_range.0..=spec.rank_range.1);
    let m = rng.gen_range(spec.factor_count_range.0..=spec.factor_count_range.1);
    let b = spec.weight_bound;
    let mut weights = Vec::with_capacity(m);
    let mut point = Vec::with_capacity(m);
    for _ in 0..m {
        let n = rng.gen_range(spec.coords_range.0..=spec.coords_range.1);
        weights.push((0..n).map(|_| (0..r).map(|_| rng.gen_range(-b..=b)).collect::<Vec<i64>>()).collect::<Vec<_>>());
        let mut x: Vec<Complex64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.15) {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::from_polar(rng.gen_range(-1.0f64..1.0).exp(), rng.gen_range(0.0..std::f64::consts::TAU))
                }
            })
            .collect();
        if x.iter().all(|z| z.norm() == 0.0) {
            let i = rng.gen_range(0..n);
            x[i] = Complex64::new(1.0, 0.0);
        }
        point.push(x);
    }
    let charge = random_charge(&mut rng, m);
    let placement = match rng.gen_range(0..20) {
        0..=7 => ShiftPlacement::Interior,
        8..=14 => ShiftPlacement::Boundary,
        _ => ShiftPlacement::Exterior,
    };
    let lambda: Vec<i64> = loop {
        let v: Vec<i64> = (0..r).map(|_| rng.gen_range(-2..=2)).collect();
        if v.iter().any(|&x| x != 0) {
            break v;
        }
    };
    let lambda = Cocharacter(lambda);
    let mut shifts = Vec::with_capacity(m);
    for k in 0..m {
        let supported: Vec<Vec<i64>> = point[k]
            .iter()
            .zip(&weights[k])
            .filter(|(z, _)| z.norm() != 0.0)
            .map(|(_, w)| w.clone())
            .collect();
        let pool = match placement {
            ShiftPlacement::Interior => supported,
            _ => {
                let lo = supported.iter().map(|w| pairing_int(w, &lambda)).min().expect("nonempty");
                supported.into_iter().filter(|w| pairing_int(w, &lambda) == lo).collect()
            }
        };
        shifts.push(convex_combination(&mut rng, &pool, r));
    }
    if placement == ShiftPlacement::Exterior {
        let k = rng.gen_range(0..m);
        let delta = rat(1, rng.gen_range(1..=3));
        for (u, &l) in shifts[k].iter_mut().zip(lambda.entries()) {
            *u -= &delta * int(l);
        }
    }
    let factors = weights
        .into_iter()
        .zip(shifts)
        .enumerate()
        .map(|(k, (w, u))| LinearisedFactor::new(format!("F{k}"), w, u))
        .collect();
    Ok((Scene::new(r, factors, point)?, charge, placement))
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationRow {
    pub index: usize,
    pub rank: usize,
    pub factors: usize,
    pub verdict: StabilityClass,
    pub witness: Option<Cocharacter>,
    pub solver_status: FlowStatus,
    pub iterations: usize,
    pub residual_norm: f64,
    pub residual_floor: f64,
    /// `dist(a, Q)`, reported for unstable rows.
    pub distance: Option<f64>,
    /// Solver status on the polystable limit, for strictly semistable rows.
    pub limit_status: Option<FlowStatus>,
    pub agreement: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub total: usize,
    pub agreements: usize,
    pub disagreements: usize,
    pub by_class: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub index: usize,
    pub seed: u64,
    pub note: Option<String>,
    /// Shrunk scene and charge that still disagree.
    pub reproduction: ScenarioFile,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub version: u32,
    pub spec: InstanceSpec,
    pub tol: f64,
    pub rows: Vec<VerificationRow>,
    pub summary: Summary,
    pub failures: Vec<Failure>,
}

impl VerificationReport {
    pub fn all_agree(&self) -> bool {
        self.summary.disagreements == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

struct Check {
    row: VerificationRow,
}

/// Walks semistable limits until a polystable one appears.
fn polystable_limit(scene: &Scene, charge: &CentralCharge, witness: &Cocharacter) -> Result<Option<Scene>> {
    let mut current = specialise(scene, witness)?.limit;
    for _ in 0..4 * scene.rank() + 4 {
        let v = classify(&current, charge)?;
        match v.class {
            StabilityClass::Stable | StabilityClass::Polystable => return Ok(Some(current)),
            StabilityClass::StrictlySemistable => {
                let w = v.witness.ok_or_else(|| Error::Numeric("semistable limit without witness".into()))?;
                current = specialise(&current, &w)?.limit;
            }
            StabilityClass::Unstable => return Ok(None),
        }
    }
    Ok(None)
}

fn check_instance(index: usize, scene: &Scene, charge: &CentralCharge, tol: f64) -> Result<Check> {
    let verdict = classify(scene, charge)?;
    let out = solve_critical(scene, charge, &GroupDirection::zero(scene.rank()), tol, SOLVER_MAX_ITER)?;
    let mut distance = None;
    let mut limit_status = None;
    let mut note = None;
    let converged = out.status == FlowStatus::Converged && out.residual_norm < tol;
    let agreement = match verdict.class {
        StabilityClass::Stable | StabilityClass::Polystable => converged,
        StabilityClass::StrictlySemistable => {
            let witness = verdict.witness.clone().ok_or_else(|| Error::Numeric("semistable verdict without witness".into()))?;
            match polystable_limit(scene, charge, &witness)? {
                Some(limit) => {
                    let again = solve_critical(&limit, charge, &GroupDirection::zero(scene.rank()), tol, SOLVER_MAX_ITER)?;
                    limit_status = Some(again.status);
                    !converged && again.status == FlowStatus::Converged
                }
                None => {
                    note = Some("no polystable limit reached".into());
                    false
                }
            }
        }
        StabilityClass::Unstable => {
            let d = distance_to_polytope(scene, charge)?;
            distance = Some(d);
            let gap = (out.residual_floor - d).abs();
            if gap >= FLOOR_TOL {
                note = Some(format!("floor gap {gap:.3e}"));
            }
            out.status == FlowStatus::Diverging && gap < FLOOR_TOL
        }
    };
    Ok(Check {
        row: VerificationRow {
            index,
            rank: scene.rank(),
            factors: scene.num_factors(),
            verdict: verdict.class,
            witness: verdict.witness,
            solver_status: out.status,
            iterations: out.iterations,
            residual_norm: out.residual_norm,
            residual_floor: out.residual_floor,
            distance,
            limit_status,
            agreement,
            note,
        },
    })
}

fn disagrees(scene: &Scene, charge: &CentralCharge, tol: f64) -> bool {
    !matches!(check_instance(0, scene, charge, tol), Ok(c) if c.row.agreement)
}

fn drop_factor(scene: &Scene, charge: &CentralCharge, k: usize) -> Option<(Scene, CentralCharge)> {
    if scene.num_factors() < 2 {
        return None;
    }
    let mut factors = scene.factors().to_vec();
    let mut point = scene.point().to_vec();
    let mut coeffs = charge.coefficients().to_vec();
    factors.remove(k);
    point.remove(k);
    coeffs.remove(k);
    let s = Scene::new(scene.rank(), factors, point).ok()?;
    let c = CentralCharge::new(coeffs, charge.phase().clone()).ok()?;
    Some((s, c))
}

fn drop_coordinate(scene: &Scene, k: usize, i: usize) -> Option<Scene> {
    if scene.factors()[k].dim() <= 2 {
        return None;
    }
    let mut factors = scene.factors().to_vec();
    let mut point = scene.point().to_vec();
    factors[k].weights.remove(i);
    point[k].remove(i);
    Scene::new(scene.rank(), factors, point).ok()
}

/// Greedy shrinking: drop factors, then coordinates, while the
/// disagreement persists.
pub fn shrink(scene: &Scene, charge: &CentralCharge, tol: f64) -> (Scene, CentralCharge) {
    let mut s = scene.clone();
    let mut c = charge.clone();
    'outer: loop {
        for k in 0..s.num_factors() {
            if let Some((s2, c2)) = drop_factor(&s, &c, k) {
                if disagrees(&s2, &c2, tol) {
                    s = s2;
                    c = c2;
                    continue 'outer;
                }
            }
        }
        for k in 0..s.num_factors() {
            for i in 0..s.factors()[k].dim() {
                if let Some(s2) = drop_coordinate(&s, k, i) {
                    if disagrees(&s2, &c, tol) {
                        s = s2;
                        continue 'outer;
                    }
                }
            }
        }
        return (s, c);
    }
}

/// Classifies and solves every instance of `spec`; rows come back in index
/// order whatever `mode` is.
pub fn kempf_ness_verify(spec: &InstanceSpec, tol: f64, mode: Execution) -> Result<VerificationReport> {
    spec.validate()?;
    let results: Vec<Result<(Scene, CentralCharge, Check)>> = exec::map_range(mode, spec.count, |i| {
        let (scene, charge) = generate_scene(spec, i)?;
        let check = check_instance(i, &scene, &charge, tol)?;
        Ok((scene, charge, check))
    });
    let mut rows = Vec::with_capacity(spec.count);
    let mut failures = Vec::new();
    let mut summary = Summary { total: spec.count, ..Summary::default() };
    for res in results {
        let (scene, charge, check) = res?;
        let row = check.row;
        *summary.by_class.entry(row.verdict.to_string()).or_default() += 1;
        if row.agreement {
            summary.agreements += 1;
        } else {
            summary.disagreements += 1;
            let (s, c) = shrink(&scene, &charge, tol);
            failures.push(Failure {
                index: row.index,
                seed: spec.seed,
                note: row.note.clone(),
                reproduction: ScenarioFile::from_scene(&s, &[("charge".into(), c)]),
            });
        }
        rows.push(row);
    }
    Ok(VerificationReport { version: REPORT_VERSION, spec: spec.clone(), tol, rows, summary, failures })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub step: usize,
    pub t: Real,
    pub class: Option<StabilityClass>,
    pub margin: Option<Real>,
    /// Some `r_k` is negative here, so the verdict came from the oracle.
    pub mixed_signs: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Wall {
    pub between: (Real, Real),
    pub before: StabilityClass,
    pub after: StabilityClass,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub steps: usize,
    pub points: Vec<SweepPoint>,
    pub walls: Vec<Wall>,
}

/// Classifies at `base + (j/steps)·direction` for `j = 0..=steps`.
pub fn charge_sweep(scene: &Scene, base: &CentralCharge, direction: &[CValue], steps: usize) -> Result<SweepReport> {
    if steps == 0 {
        return Err(Error::Precondition("steps must be positive".into()));
    }
    if direction.len() != base.num_factors() || base.num_factors() != scene.num_factors() {
        return Err(Error::DimensionMismatch { expected: scene.num_factors(), found: direction.len() });
    }
    let bound = 1 + scene.weight_spread();
    let mut points = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        let t = Real::Exact(rat(j as i64, steps as i64));
        let coeffs: Vec<CValue> = base.coefficients().iter().zip(direction).map(|(a, d)| a + &d.scale(&t)).collect();
        let attempt = CentralCharge::new(coeffs, base.phase().clone()).and_then(|c| {
            let mixed = c
                .r()
                .iter()
                .enumerate()
                .any(|(k, r)| r.sign().is_lt() && !scene.factor_is_degenerate(k));
            classify_allowing_mixed(scene, &c, bound).map(|v| (v, mixed))
        });
        points.push(match attempt {
            Ok((v, mixed)) => {
                SweepPoint { step: j, t, class: Some(v.class), margin: v.margin, mixed_signs: mixed, error: None }
            }
            Err(e) => SweepPoint { step: j, t, class: None, margin: None, mixed_signs: false, error: Some(e.to_string()) },
        });
    }
    let mut walls = Vec::new();
    let classified: Vec<&SweepPoint> = points.iter().filter(|p| p.class.is_some()).collect();
    for w in classified.windows(2) {
        let (a, b) = (w[0].class.unwrap(), w[1].class.unwrap());
        if a != b {
            walls.push(Wall { between: (w[0].t.clone(), w[1].t.clone()), before: a, after: b });
        }
    }
    Ok(SweepReport { steps, points, walls })
}

/// Shuffled copy of `0..n` from a seed; used to perturb iteration order in
/// determinism checks.
pub fn shuffled_indices(seed: u64, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moment::subsolution_check;

    #[test]
    fn generation_is_deterministic() {
        let spec = InstanceSpec::new(7, 20);
        for i in 0..20 {
            let (a, ca) = generate_scene(&spec, i).unwrap();
            let (b, cb) = generate_scene(&spec, i).unwrap();
            assert_eq!(a, b);
            assert_eq!(ca.coefficients(), cb.coefficients());
        }
    }

    #[test]
    fn rank_range_respected_and_subsolution() {
        let spec = InstanceSpec { rank_range: (1, 1), ..InstanceSpec::new(3, 30) };
        for i in 0..30 {
            let (s, c) = generate_scene(&spec, i).unwrap();
            assert_eq!(s.rank(), 1);
            assert!(subsolution_check(&s, &c).unwrap().holds);
        }
    }

    #[test]
    fn index_out_of_range() {
        assert!(generate_scene(&InstanceSpec::new(1, 2), 2).is_err());
    }

    #[test]
    fn empty_spec_is_vacuous() {
        let r = kempf_ness_verify(&InstanceSpec::new(1, 0), 1e-8, Execution::Sequential).unwrap();
        assert!(r.rows.is_empty() && r.all_agree());
    }

    #[test]
    fn small_batch_agrees() {
        let r = kempf_ness_verify(&InstanceSpec::new(11, 12), 1e-8, Execution::Parallel).unwrap();
        assert!(r.all_agree(), "{}", r.to_json());
    }

    fn sweep_scene() -> Scene {
        let one = Complex64::new(1.0, 0.0);
        Scene::new(
            1,
            vec![
                LinearisedFactor::unshifted("A", vec![vec![0], vec![1], vec![2]]),
                LinearisedFactor::new("B", vec![vec![0], vec![5]], vec![int(1)]),
            ],
            vec![vec![one; 3], vec![one, Complex64::new(0.0, 0.0)]],
        )
        .unwrap()
    }

    #[test]
    fn sweep_detects_walls_in_order() {
        let s = sweep_scene();
        let base = CentralCharge::new(vec![CValue::i(), CValue::parse("-i").unwrap()], Phase::zero()).unwrap();
        let dir = vec![CValue::zero(), CValue::parse("2i").unwrap()];
        let rep = charge_sweep(&s, &base, &dir, 4).unwrap();
        let seq: Vec<_> = rep.walls.iter().map(|w| (w.before, w.after)).collect();
        assert_eq!(
            seq,
            vec![
                (StabilityClass::Unstable, StabilityClass::StrictlySemistable),
                (StabilityClass::StrictlySemistable, StabilityClass::Stable)
            ]
        );
        let back = CentralCharge::new(vec![CValue::i(), CValue::i()], Phase::zero()).unwrap();
        let neg = vec![CValue::zero(), CValue::parse("-2i").unwrap()];
        let rev = charge_sweep(&s, &back, &neg, 4).unwrap();
        let seq2: Vec<_> = rev.walls.iter().rev().map(|w| (w.after, w.before)).collect();
        assert_eq!(seq, seq2);
    }

    #[test]
    fn sweep_inside_a_chamber() {
        let s = sweep_scene();
        let base = CentralCharge::new(vec![CValue::i(), CValue::i()], Phase::zero()).unwrap();
        let rep = charge_sweep(&s, &base, &[CValue::parse("i").unwrap(), CValue::zero()], 5).unwrap();
        assert!(rep.walls.is_empty());
    }
}
