//! Central charges: Hilbert–Mumford weights, complex combinations of
//! linearisations, the stabiliser character, phases and the sheaf/K-stability
//! style example charges.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::{pairing, pairing_int, pairing_rat, stabiliser_lie, Cocharacter, GroupDirection, RootDatumLite, Scene};
use crate::error::{check_len, Error, Result};
use crate::graded::specialise;
use crate::linalg;
use crate::num::{int, parse_rational, CValue, Rational, Real};

/// Tolerance for float membership in the stabiliser Lie algebra.
pub const STABILISER_TOL: f64 = 1e-12;

/// A phase in `(-π, π)`, remembered as a rational multiple of π when given so.
#[derive(Clone, Debug, PartialEq)]
pub struct Phase {
    radians: f64,
    pi_multiple: Option<Rational>,
}

impl Phase {
    pub fn zero() -> Self {
        Phase { radians: 0.0, pi_multiple: Some(Rational::zero()) }
    }

    pub fn pi_times(q: Rational) -> Result<Self> {
        if q.abs() >= Rational::one() {
            return Err(Error::InvalidCharge(format!("phase {}·π outside (-π, π)", q)));
        }
        Ok(Phase { radians: crate::num::rat_to_f64(&q) * PI, pi_multiple: Some(q) })
    }

    pub fn radians(x: f64) -> Result<Self> {
        if !x.is_finite() || x.abs() >= PI {
            return Err(Error::InvalidCharge(format!("phase {x} outside (-π, π)")));
        }
        if x == 0.0 {
            return Ok(Phase::zero());
        }
        Ok(Phase { radians: x, pi_multiple: None })
    }

    /// Parses "pi/4", "-pi/2", "3pi/4", "2/3pi", "0" or a radian float.
    pub fn parse(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
        let t = t.replace('π', "pi").replace('*', "");
        if let Some(pos) = t.find("pi") {
            let before = &t[..pos];
            let after = &t[pos + 2..];
            let mut q = match before {
                "" | "+" => Rational::one(),
                "-" => -Rational::one(),
                b => parse_rational(b)?,
            };
            if let Some(d) = after.strip_prefix('/') {
                let d = parse_rational(d)?;
                if d.is_zero() {
                    return Err(Error::Parse(format!("zero denominator in phase {s:?}")));
                }
                q /= d;
            } else if !after.is_empty() {
                return Err(Error::Parse(format!("cannot parse phase {s:?}")));
            }
            return Phase::pi_times(q);
        }
        let x: f64 = t.parse().map_err(|_| Error::Parse(format!("cannot parse phase {s:?}")))?;
        Phase::radians(x)
    }

    pub fn value(&self) -> f64 {
        self.radians
    }

    pub fn pi_multiple(&self) -> Option<&Rational> {
        self.pi_multiple.as_ref()
    }

    /// `e^{-iφ}`, exact for φ ∈ {0, ±π/2}.
    pub fn rotor(&self) -> CValue {
        if let Some(q) = &self.pi_multiple {
            let half = Rational::new(1.into(), 2.into());
            if q.is_zero() {
                return CValue::exact(int(1), int(0));
            } else if *q == half {
                return CValue::exact(int(0), int(-1));
            } else if *q == -half {
                return CValue::exact(int(0), int(1));
            }
        }
        CValue::new(Real::Float(self.radians.cos()), Real::Float(-self.radians.sin()))
    }

    /// `φ + θ`, keeping the π-multiple form when both have it.
    pub fn add(&self, other: &Phase) -> Result<Phase> {
        match (&self.pi_multiple, &other.pi_multiple) {
            (Some(a), Some(b)) => Phase::pi_times(a + b),
            _ => Phase::radians(self.radians + other.radians),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.pi_multiple {
            Some(q) if q.is_zero() => f.write_str("0"),
            Some(q) => {
                let n = q.numer();
                let d = q.denom();
                let head = if n == &1.into() {
                    String::new()
                } else if n == &(-1).into() {
                    "-".into()
                } else {
                    n.to_string()
                };
                if d == &1.into() {
                    write!(f, "{head}pi")
                } else {
                    write!(f, "{head}pi/{d}")
                }
            }
            None => write!(f, "{}", self.radians),
        }
    }
}

impl Serialize for Phase {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.pi_multiple {
            Some(_) => s.serialize_str(&self.to_string()),
            None => s.serialize_f64(self.radians),
        }
    }
}

impl<'de> Deserialize<'de> for Phase {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Number(f64),
        }
        match Repr::deserialize(d)? {
            Repr::Text(s) => Phase::parse(&s),
            Repr::Number(x) => Phase::radians(x),
        }
        .map_err(crate::error::de_error)
    }
}

/// `Z = Σ_k c_k ν_k` with a phase; caches `e^{-iφ} c_k = s_k + i r_k`.
#[derive(Clone, Debug)]
pub struct CentralCharge {
    coefficients: Vec<CValue>,
    phase: Phase,
    r: Vec<Real>,
    s: Vec<Real>,
}

impl CentralCharge {
    pub fn new(coefficients: Vec<CValue>, phase: Phase) -> Result<Self> {
        if coefficients.is_empty() || coefficients.iter().all(|c| c.to_complex().norm() == 0.0) {
            return Err(Error::InvalidCharge("at least one coefficient must be nonzero".into()));
        }
        let rot = phase.rotor();
        let (s, r) = coefficients
            .iter()
            .map(|c| {
                let z = &rot * c;
                (z.re, z.im)
            })
            .unzip();
        Ok(CentralCharge { coefficients, phase, r, s })
    }

    /// The classical charge `c_k = i` with phase 0 on `m` factors.
    pub fn classical(m: usize) -> Self {
        CentralCharge::new(vec![CValue::i(); m], Phase::zero()).unwrap()
    }

    pub fn coefficients(&self) -> &[CValue] {
        &self.coefficients
    }

    pub fn phase(&self) -> &Phase {
        &self.phase
    }

    /// `r_k = Im(e^{-iφ} c_k)`.
    pub fn r(&self) -> &[Real] {
        &self.r
    }

    /// `s_k = Re(e^{-iφ} c_k)`.
    pub fn s(&self) -> &[Real] {
        &self.s
    }

    pub fn r_f64(&self) -> Vec<f64> {
        self.r.iter().map(Real::to_f64).collect()
    }

    /// True when every `r_k` is an exact rational.
    pub fn is_exact(&self) -> bool {
        self.r.iter().all(Real::is_exact)
    }

    pub fn num_factors(&self) -> usize {
        self.coefficients.len()
    }

    /// `(φ + θ, e^{iθ} c)`.
    pub fn rotated(&self, theta: &Phase) -> Result<CentralCharge> {
        let phase = self.phase.add(theta)?;
        let neg = match theta.pi_multiple() {
            Some(q) => Phase::pi_times(-q)?,
            None => Phase::radians(-theta.value())?,
        };
        let e = neg.rotor();
        let coefficients = self.coefficients.iter().map(|c| &e * c).collect();
        CentralCharge::new(coefficients, phase)
    }

    /// `t·c` for a real scalar `t`, same phase.
    pub fn scaled(&self, t: &Real) -> Result<CentralCharge> {
        CentralCharge::new(self.coefficients.iter().map(|c| c.scale(t)).collect(), self.phase.clone())
    }

    /// `self + t·other`, with this charge's phase.
    pub fn combine(&self, other: &CentralCharge, t: &Real) -> Result<CentralCharge> {
        check_len(self.num_factors(), other.num_factors())?;
        let coefficients = self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| a + &b.scale(t))
            .collect();
        CentralCharge::new(coefficients, self.phase.clone())
    }

    pub(crate) fn check_scene(&self, scene: &Scene) -> Result<()> {
        check_len(scene.num_factors(), self.num_factors())
    }
}

/// `ν_k = ⟨u_k, λ⟩ − min_{i ∈ supp} ⟨w_i, λ⟩`.
pub fn hm_weight(scene: &Scene, k: usize, lambda: &Cocharacter) -> Result<Rational> {
    scene.check_cocharacter(lambda)?;
    let f = scene
        .factors()
        .get(k)
        .ok_or_else(|| Error::Precondition(format!("factor index {k} out of range")))?;
    let m = scene
        .support(k)
        .into_iter()
        .map(|i| pairing_int(&f.weights[i], lambda))
        .min()
        .expect("nonempty support");
    Ok(pairing_rat(&f.shift, lambda) - int(m))
}

/// `Z(y, λ)` for the limit `y` together with the margin `Im(e^{-iφ} Z)`.
#[derive(Clone, Debug, Serialize)]
pub struct Degeneration {
    pub z: CValue,
    pub margin: Real,
}

pub fn z_of_degeneration(scene: &Scene, charge: &CentralCharge, lambda: &Cocharacter) -> Result<Degeneration> {
    charge.check_scene(scene)?;
    let mut z = CValue::zero();
    let mut margin = Real::zero();
    for k in 0..scene.num_factors() {
        let nu = Real::Exact(hm_weight(scene, k, lambda)?);
        z = &z + &charge.coefficients[k].scale(&nu);
        margin = &margin + &(&charge.r[k] * &nu);
    }
    Ok(Degeneration { z, margin })
}

/// Just the margin `Σ_k r_k ν_k`.
pub fn margin(scene: &Scene, charge: &CentralCharge, lambda: &Cocharacter) -> Result<Real> {
    charge.check_scene(scene)?;
    let mut m = Real::zero();
    for k in 0..scene.num_factors() {
        m = &m + &(&charge.r[k] * &Real::Exact(hm_weight(scene, k, lambda)?));
    }
    Ok(m)
}

/// Exact character `Σ c_k(⟨u_k, v⟩ − ℓ_k(v))` for a rational stabiliser direction.
pub fn z_on_stabiliser_exact(scene: &Scene, charge: &CentralCharge, v: &[Rational]) -> Result<CValue> {
    charge.check_scene(scene)?;
    check_len(scene.rank(), v.len())?;
    if !stabiliser_lie(scene).contains_exact(v) {
        return Err(Error::Precondition("direction is not in the stabiliser Lie algebra".into()));
    }
    let mut z = CValue::zero();
    for (k, f) in scene.factors().iter().enumerate() {
        let i0 = scene.support(k)[0];
        let level: Rational = f.weights[i0].iter().zip(v).map(|(&w, x)| int(w) * x).sum();
        let u: Rational = f.shift.iter().zip(v).map(|(a, b)| a * b).sum();
        z = &z + &charge.coefficients[k].scale(&Real::Exact(u - level));
    }
    Ok(z)
}

/// Float character on an arbitrary (possibly irrational) stabiliser direction.
pub fn z_on_stabiliser(scene: &Scene, charge: &CentralCharge, v: &GroupDirection) -> Result<Complex64> {
    charge.check_scene(scene)?;
    scene.check_direction(v)?;
    let stab = stabiliser_lie(scene);
    if !stab.contains(v, STABILISER_TOL * (1.0 + v.norm())) {
        return Err(Error::Precondition("direction is not in the stabiliser Lie algebra".into()));
    }
    let mut z = Complex64::new(0.0, 0.0);
    for (k, f) in scene.factors().iter().enumerate() {
        let i0 = scene.support(k)[0];
        let level = pairing(&f.weights[i0], v)?;
        let u = pairing_f64(&f.shift_f64(), v);
        z += charge.coefficients[k].to_complex() * (u - level);
    }
    Ok(z)
}

fn pairing_f64(a: &[f64], v: &GroupDirection) -> f64 {
    a.iter().zip(v.entries()).map(|(x, y)| x * y).sum()
}

/// Principal argument of `z` in the upper half plane with the negative real
/// axis removed.
pub fn phase_of(z: Complex64) -> Result<f64> {
    if z.im < 0.0 || (z.im == 0.0 && z.re <= 0.0) {
        return Err(Error::Precondition(format!("{z} is outside the upper half plane")));
    }
    Ok(z.im.atan2(z.re))
}

/// `rk − i·deg`.
pub fn slope_charge(rank: i64, degree: &Rational) -> Result<CValue> {
    if rank < 0 {
        return Err(Error::Precondition("rank must be nonnegative".into()));
    }
    Ok(CValue::exact(int(rank), -degree))
}

/// `Σ a_j Z_j`.
pub fn direct_sum_charge(values: &[CValue], exponents: &[i64]) -> Result<CValue> {
    check_len(values.len(), exponents.len())?;
    Ok(values
        .iter()
        .zip(exponents)
        .fold(CValue::zero(), |acc, (z, &a)| &acc + &z.scale(&Real::from_i64(a))))
}

#[derive(Clone, Debug, Serialize)]
pub struct KCharge {
    pub z_total: CValue,
    pub z_tc: CValue,
    #[serde(with = "crate::num::rational_str")]
    pub df_margin: Rational,
}

/// Charge from Hilbert and weight polynomial leading coefficients.
pub fn k_charge(a0: &Rational, a1: &Rational, b0: &Rational, b1: &Rational) -> Result<KCharge> {
    if !a0.is_positive() {
        return Err(Error::Precondition("a0 must be positive".into()));
    }
    Ok(KCharge {
        z_total: CValue::exact(-a1, a0.clone()),
        z_tc: CValue::exact(b1.clone(), -b0),
        df_margin: a1 * b0 - a0 * b1,
    })
}

/// A charge given by its values on a box of cocharacters.
#[derive(Clone, Debug)]
pub struct TabulatedCharge {
    pub rank: usize,
    pub bound: i64,
    pub table: BTreeMap<Cocharacter, CValue>,
    pub datum: Option<RootDatumLite>,
}

impl TabulatedCharge {
    pub fn new(
        rank: usize,
        bound: i64,
        table: BTreeMap<Cocharacter, CValue>,
        datum: Option<RootDatumLite>,
    ) -> Result<Self> {
        if rank == 0 || bound < 1 {
            return Err(Error::Precondition("table needs positive rank and bound".into()));
        }
        if let Some(d) = &datum {
            check_len(rank, d.rank)?;
        }
        for key in table.keys() {
            check_len(rank, key.rank())?;
            if key.entries().iter().any(|x| x.abs() > bound) {
                return Err(Error::Precondition(format!("entry {key} lies outside the box")));
            }
        }
        let expected = (2 * bound as usize + 1).pow(rank as u32);
        if table.len() != expected {
            return Err(Error::Precondition(format!(
                "table has {} entries, the symmetric box needs {expected}",
                table.len()
            )));
        }
        let zero = Cocharacter::zero(rank);
        if !table[&zero].to_complex().norm().eq(&0.0) {
            return Err(Error::Precondition("table must map 0 to 0".into()));
        }
        Ok(TabulatedCharge { rank, bound, table, datum })
    }

    /// Tabulates `λ ↦ f(λ)` over the box.
    pub fn from_fn(
        rank: usize,
        bound: i64,
        datum: Option<RootDatumLite>,
        f: impl Fn(&Cocharacter) -> CValue,
    ) -> Result<Self> {
        let table = Cocharacter::enumerate_box(rank, bound).into_iter().map(|l| {
            let v = f(&l);
            (l, v)
        });
        TabulatedCharge::new(rank, bound, table.collect(), datum)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AdditivityViolation {
    pub lambda: Cocharacter,
    pub gamma: Cocharacter,
    pub sum_of_values: CValue,
    pub value_of_sum: CValue,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeylViolation {
    pub lambda: Cocharacter,
    pub image: Cocharacter,
    pub value: CValue,
    pub image_value: CValue,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub additivity_violations: Vec<AdditivityViolation>,
    pub weyl_violations: Vec<WeylViolation>,
    /// Reconstructed character, when additivity and invariance hold.
    pub character: Option<Vec<CValue>>,
    pub max_residual: Option<f64>,
}

const VALIDATION_TOL: f64 = 1e-9;

/// Checks additivity, Weyl invariance and reconstructs the character.
pub fn validate_tabulated(t: &TabulatedCharge) -> ValidationReport {
    let keys: Vec<&Cocharacter> = t.table.keys().collect();
    let mut additivity_violations = Vec::new();
    for l in &keys {
        for g in &keys {
            let sum = l.compose(g);
            if let Some(v) = t.table.get(&sum) {
                let lhs = &t.table[*l] + &t.table[*g];
                if !lhs.approx_eq(v, VALIDATION_TOL) {
                    additivity_violations.push(AdditivityViolation {
                        lambda: (*l).clone(),
                        gamma: (*g).clone(),
                        sum_of_values: lhs,
                        value_of_sum: v.clone(),
                    });
                }
            }
        }
    }
    let mut weyl_violations = Vec::new();
    if let Some(d) = &t.datum {
        for l in &keys {
            for s in &d.weyl_generators {
                let image = RootDatumLite::apply(s, l);
                if let Some(v) = t.table.get(&image) {
                    if !v.approx_eq(&t.table[*l], VALIDATION_TOL) {
                        weyl_violations.push(WeylViolation {
                            lambda: (*l).clone(),
                            image,
                            value: t.table[*l].clone(),
                            image_value: v.clone(),
                        });
                    }
                }
            }
        }
    }
    let passed = additivity_violations.is_empty() && weyl_violations.is_empty();
    let (character, max_residual) = if passed {
        let chi = least_squares_character(t);
        let res = t
            .table
            .iter()
            .map(|(l, v)| {
                let fit: Complex64 = chi.iter().zip(l.entries()).map(|(c, &x)| c.to_complex() * x as f64).sum();
                (fit - v.to_complex()).norm()
            })
            .fold(0.0, f64::max);
        (Some(chi), Some(res))
    } else {
        (None, None)
    };
    ValidationReport { passed, additivity_violations, weyl_violations, character, max_residual }
}

/// Normal equations `(Σ λλᵀ) χ = Σ λ t(λ)`, solved separately for real and
/// imaginary parts; exact when every entry is exact.
fn least_squares_character(t: &TabulatedCharge) -> Vec<CValue> {
    let r = t.rank;
    let exact = t.table.values().all(CValue::is_exact);
    if exact {
        let mut gram = vec![vec![Rational::zero(); r]; r];
        let mut rhs_re = vec![Rational::zero(); r];
        let mut rhs_im = vec![Rational::zero(); r];
        for (l, v) in &t.table {
            let (re, im) = (v.re.as_exact().unwrap(), v.im.as_exact().unwrap());
            for i in 0..r {
                let li = int(l.0[i]);
                for j in 0..r {
                    gram[i][j] += &li * int(l.0[j]);
                }
                rhs_re[i] += &li * re;
                rhs_im[i] += &li * im;
            }
        }
        let re = linalg::solve(&gram, &rhs_re).expect("box Gram matrix is invertible");
        let im = linalg::solve(&gram, &rhs_im).expect("box Gram matrix is invertible");
        re.into_iter().zip(im).map(|(a, b)| CValue::exact(a, b)).collect()
    } else {
        let mut gram = vec![vec![0.0; r]; r];
        let mut rhs_re = vec![0.0; r];
        let mut rhs_im = vec![0.0; r];
        for (l, v) in &t.table {
            let z = v.to_complex();
            for i in 0..r {
                let li = l.0[i] as f64;
                for j in 0..r {
                    gram[i][j] += li * l.0[j] as f64;
                }
                rhs_re[i] += li * z.re;
                rhs_im[i] += li * z.im;
            }
        }
        let re = linalg::solve(&gram, &rhs_re).expect("box Gram matrix is invertible");
        let im = linalg::solve(&gram, &rhs_im).expect("box Gram matrix is invertible");
        re.into_iter()
            .zip(im)
            .map(|(a, b)| CValue::from_complex(Complex64::new(a, b)))
            .collect()
    }
}

/// Composite check `Z(x,ζ) + Z(y,λ) − Z(y, ζ∘λ)`, exact.
pub fn composite_defect(
    scene: &Scene,
    charge: &CentralCharge,
    zeta: &Cocharacter,
    lambda: &Cocharacter,
) -> Result<CValue> {
    let lhs = z_on_stabiliser_exact(scene, charge, &zeta.to_rational())?;
    let deg = z_of_degeneration(scene, charge, lambda)?;
    let y = specialise(scene, lambda)?.limit;
    let rhs = z_on_stabiliser_exact(&y, charge, &zeta.compose(lambda).to_rational())?;
    Ok(&(&lhs + &deg.z) - &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::LinearisedFactor;
    use crate::num::rat;

    fn rank1(weights: &[i64]) -> Scene {
        let n = weights.len();
        Scene::new(
            1,
            vec![LinearisedFactor::unshifted("A", weights.iter().map(|&w| vec![w]).collect())],
            vec![vec![Complex64::new(1.0, 0.0); n]],
        )
        .unwrap()
    }

    fn cv(s: &str) -> CValue {
        CValue::parse(s).unwrap()
    }

    #[test]
    fn hm_weight_examples() {
        let s = rank1(&[2, 0, -1]);
        assert_eq!(hm_weight(&s, 0, &Cocharacter(vec![1])).unwrap(), int(1));
        assert_eq!(hm_weight(&s, 0, &Cocharacter(vec![0])).unwrap(), int(0));
        assert_eq!(hm_weight(&s, 0, &Cocharacter(vec![-1])).unwrap(), int(2));
    }

    #[test]
    fn z_of_degeneration_examples() {
        let s = rank1(&[2, 0, -1]);
        let ch = CentralCharge::new(vec![cv("1+i")], Phase::zero()).unwrap();
        let d = z_of_degeneration(&s, &ch, &Cocharacter(vec![1])).unwrap();
        assert!(d.z.approx_eq(&cv("1+i"), 0.0));
        assert_eq!(d.margin.as_exact().unwrap(), &int(1));
        let d = z_of_degeneration(&s, &ch, &Cocharacter(vec![0])).unwrap();
        assert!(d.z.is_exact_zero());
        let classical = CentralCharge::classical(1);
        let d = z_of_degeneration(&s, &classical, &Cocharacter(vec![-1])).unwrap();
        assert!(d.z.approx_eq(&cv("2i"), 0.0));
        assert_eq!(d.margin.as_exact().unwrap(), &int(2));
    }

    #[test]
    fn stabiliser_character_is_linear() {
        let s = rank1(&[1, 1]);
        let shifted = Scene::new(
            1,
            vec![LinearisedFactor::new("A", vec![vec![1], vec![1]], vec![rat(1, 3)])],
            s.point().to_vec(),
        )
        .unwrap();
        let ch = CentralCharge::new(vec![cv("2+i")], Phase::zero()).unwrap();
        let z1 = z_on_stabiliser_exact(&shifted, &ch, &[int(1)]).unwrap();
        let z2 = z_on_stabiliser_exact(&shifted, &ch, &[int(2)]).unwrap();
        assert!(z2.approx_eq(&(&z1 + &z1), 0.0));
        let d = z_of_degeneration(&shifted, &ch, &Cocharacter(vec![2])).unwrap();
        assert!(z2.approx_eq(&d.z, 0.0));
        assert!(z_on_stabiliser_exact(&shifted, &ch, &[int(0)]).unwrap().is_exact_zero());
        let zf = z_on_stabiliser(&shifted, &ch, &GroupDirection(vec![std::f64::consts::SQRT_2])).unwrap();
        assert!((zf - z1.to_complex() * std::f64::consts::SQRT_2).norm() < 1e-12);
        assert!(z_on_stabiliser_exact(&rank1(&[2, 0, -1]), &ch, &[int(1)]).is_err());
    }

    #[test]
    fn phase_of_examples() {
        assert!((phase_of(Complex64::new(0.0, 1.0)).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((phase_of(Complex64::new(1.0, 1.0)).unwrap() - PI / 4.0).abs() < 1e-15);
        assert!(phase_of(Complex64::new(-1.0, 0.0)).is_err());
        assert!(phase_of(Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn sheaf_charges() {
        assert!(slope_charge(2, &int(3)).unwrap().approx_eq(&cv("2-3i"), 0.0));
        assert!(slope_charge(0, &int(0)).unwrap().is_exact_zero());
        assert!(slope_charge(1, &int(-2)).unwrap().approx_eq(&cv("1+2i"), 0.0));
        let z = direct_sum_charge(&[cv("1+i"), cv("2")], &[1, -1]).unwrap();
        assert!(z.approx_eq(&cv("-1+i"), 0.0));
        assert!(direct_sum_charge(&[cv("1+i")], &[0]).unwrap().is_exact_zero());
        assert!(direct_sum_charge(&[cv("1+i")], &[1, 2]).is_err());
    }

    #[test]
    fn k_charge_examples() {
        let k = k_charge(&int(1), &int(0), &int(1), &int(1)).unwrap();
        assert!(k.z_tc.approx_eq(&cv("1-i"), 0.0));
        assert_eq!(k.df_margin, int(-1));
        assert_eq!(k_charge(&int(1), &int(0), &int(1), &int(0)).unwrap().df_margin, int(0));
        assert_eq!(k_charge(&int(2), &int(1), &int(1), &int(0)).unwrap().df_margin, int(1));
        assert!(k_charge(&int(0), &int(0), &int(1), &int(0)).is_err());
    }

    #[test]
    fn k_charge_margin_matches_float_expression() {
        for (a0, a1, b0, b1) in [(1, 0, 1, 1), (2, 1, 1, 0), (3, -2, 5, 7)] {
            let k = k_charge(&int(a0), &int(a1), &int(b0), &int(b1)).unwrap();
            let zt = k.z_total.to_complex();
            let zc = k.z_tc.to_complex();
            let phi = zt.arg();
            let m = (Complex64::from_polar(1.0, -phi) * zc).im * zt.norm();
            assert!((m - crate::num::rat_to_f64(&k.df_margin)).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_parsing() {
        assert_eq!(Phase::parse("pi/4").unwrap().pi_multiple(), Some(&rat(1, 4)));
        assert_eq!(Phase::parse("-pi/2").unwrap().pi_multiple(), Some(&rat(-1, 2)));
        assert_eq!(Phase::parse("3pi/4").unwrap().pi_multiple(), Some(&rat(3, 4)));
        assert_eq!(Phase::parse("0").unwrap().pi_multiple(), Some(&int(0)));
        assert!(Phase::parse("pi").is_err());
        assert!(Phase::parse("4").is_err());
        assert!(Phase::parse("1.4707963267948966").unwrap().pi_multiple().is_none());
        for s in ["pi/4", "-pi/2", "3pi/4", "0"] {
            assert_eq!(Phase::parse(s).unwrap().to_string(), s);
        }
    }

    #[test]
    fn subsolution_style_r_values() {
        let ch = CentralCharge::new(vec![cv("i")], Phase::parse("pi/3").unwrap()).unwrap();
        assert!((ch.r_f64()[0] - 0.5).abs() < 1e-15);
        let ch = CentralCharge::new(vec![cv("i"), cv("2i")], Phase::zero()).unwrap();
        assert!(ch.is_exact());
        assert_eq!(ch.r()[1].as_exact().unwrap(), &int(2));
        let ch = CentralCharge::new(vec![cv("1")], Phase::parse("pi/2").unwrap()).unwrap();
        assert_eq!(ch.r()[0].as_exact().unwrap(), &int(-1));
    }

    #[test]
    fn tabulated_examples() {
        let chi = [cv("1+2i"), cv("3")];
        let lin = TabulatedCharge::from_fn(2, 2, None, |l| {
            chi.iter().zip(l.entries()).fold(CValue::zero(), |acc, (c, &x)| &acc + &c.scale(&Real::from_i64(x)))
        })
        .unwrap();
        let rep = validate_tabulated(&lin);
        assert!(rep.passed);
        let got = rep.character.unwrap();
        assert!(got[0].approx_eq(&chi[0], 0.0) && got[1].approx_eq(&chi[1], 0.0));
        assert_eq!(rep.max_residual, Some(0.0));

        let quad = TabulatedCharge::from_fn(2, 2, None, |l| {
            CValue::exact(int(l.entries().iter().map(|x| x * x).sum()), int(0))
        })
        .unwrap();
        let rep = validate_tabulated(&quad);
        assert!(!rep.passed);
        assert!(rep
            .additivity_violations
            .iter()
            .any(|v| v.lambda.0 == vec![1, 0] && v.gamma.0 == vec![1, 0]));

        let gl2 = RootDatumLite::gl(2).unwrap();
        let mut swapped = TabulatedCharge::from_fn(2, 2, Some(gl2), |l| {
            CValue::exact(int(l.entries().iter().sum()), int(0))
        })
        .unwrap();
        swapped.table.insert(Cocharacter(vec![1, 0]), CValue::exact(int(2), int(0)));
        let rep = validate_tabulated(&swapped);
        assert!(!rep.weyl_violations.is_empty());
    }
}
