//! Lattice and linear-algebra substrate: cocharacters, group directions,
//! linearised factors, scenes, stabiliser Lie algebras and Weyl data.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use num_complex::Complex64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg;
use crate::num::{int, rat_to_f64, Rational};

/// Hard cap on the size of a generated Weyl group (or orbit).
pub const WEYL_CAP: usize = 50_000;

/// A one-parameter subgroup of the torus, as a point of the cocharacter lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cocharacter(pub Vec<i64>);

impl Cocharacter {
    pub fn new(entries: Vec<i64>) -> Self {
        Cocharacter(entries)
    }

    pub fn zero(rank: usize) -> Self {
        Cocharacter(vec![0; rank])
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[i64] {
        &self.0
    }

    pub fn is_trivial(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    /// The composite `self ∘ other`, which for a torus is the sum.
    pub fn compose(&self, other: &Cocharacter) -> Cocharacter {
        Cocharacter(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, n: i64) -> Cocharacter {
        Cocharacter(self.0.iter().map(|a| a * n).collect())
    }

    pub fn neg(&self) -> Cocharacter {
        self.scale(-1)
    }

    pub fn to_rational(&self) -> Vec<Rational> {
        self.0.iter().map(|&x| int(x)).collect()
    }

    pub fn to_direction(&self) -> GroupDirection {
        GroupDirection(self.0.iter().map(|&x| x as f64).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt()
    }

    /// All cocharacters in the box `[-bound, bound]^rank`, in lexicographic order.
    pub fn enumerate_box(rank: usize, bound: i64) -> Vec<Cocharacter> {
        let side = (2 * bound + 1) as usize;
        let total = side.pow(rank as u32);
        (0..total)
            .map(|mut idx| {
                let mut v = vec![0i64; rank];
                for slot in v.iter_mut().rev() {
                    *slot = (idx % side) as i64 - bound;
                    idx /= side;
                }
                Cocharacter(v)
            })
            .collect()
    }
}

impl fmt::Display for Cocharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(i64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A real direction in the Lie algebra of the compact torus; may be irrational.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupDirection(pub Vec<f64>);

impl GroupDirection {
    pub fn zero(rank: usize) -> Self {
        GroupDirection(vec![0.0; rank])
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &GroupDirection) -> GroupDirection {
        GroupDirection(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, t: f64) -> GroupDirection {
        GroupDirection(self.0.iter().map(|a| a * t).collect())
    }
}

/// The standard dot product `⟨w, v⟩` of an integer weight with a direction.
pub fn pairing(w: &[i64], v: &GroupDirection) -> Result<f64> {
    check_len(w.len(), v.rank())?;
    Ok(w.iter().zip(&v.0).map(|(&a, b)| a as f64 * b).sum())
}

pub fn pairing_int(w: &[i64], lambda: &Cocharacter) -> i64 {
    w.iter().zip(&lambda.0).map(|(a, b)| a * b).sum()
}

pub fn pairing_rat(u: &[Rational], lambda: &Cocharacter) -> Rational {
    u.iter()
        .zip(&lambda.0)
        .fold(Rational::zero(), |acc, (a, &b)| acc + a * int(b))
}

/// One projective-space factor with its linearisation: integer weight rows
/// and a rational shift.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearisedFactor {
    pub label: String,
    pub weights: Vec<Vec<i64>>,
    pub shift: Vec<Rational>,
}

impl LinearisedFactor {
    pub fn new(label: impl Into<String>, weights: Vec<Vec<i64>>, shift: Vec<Rational>) -> Self {
        LinearisedFactor { label: label.into(), weights, shift }
    }

    /// Factor with zero shift.
    pub fn unshifted(label: impl Into<String>, weights: Vec<Vec<i64>>) -> Self {
        let r = weights.first().map_or(0, Vec::len);
        LinearisedFactor::new(label, weights, vec![Rational::zero(); r])
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn shift_f64(&self) -> Vec<f64> {
        self.shift.iter().map(rat_to_f64).collect()
    }
}

/// A linearised torus action on a product of projective spaces together with
/// a marked point.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    rank: usize,
    factors: Vec<LinearisedFactor>,
    point: Vec<Vec<Complex64>>,
}

impl Scene {
    pub fn new(rank: usize, factors: Vec<LinearisedFactor>, point: Vec<Vec<Complex64>>) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidScene("rank must be positive".into()));
        }
        if factors.is_empty() {
            return Err(Error::InvalidScene("at least one factor is required".into()));
        }
        check_len(factors.len(), point.len())?;
        for (k, (f, x)) in factors.iter().zip(&point).enumerate() {
            if f.weights.len() < 2 {
                return Err(Error::InvalidScene(format!(
                    "factor {k} ({}) needs at least two homogeneous coordinates",
                    f.label
                )));
            }
            for row in &f.weights {
                check_len(rank, row.len())?;
            }
            check_len(rank, f.shift.len())?;
            check_len(f.weights.len(), x.len())?;
            if x.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                return Err(Error::InvalidScene(format!("factor {k} ({}) has the zero vector as point", f.label)));
            }
            if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidScene(format!("factor {k} ({}) has a non-finite coordinate", f.label)));
            }
        }
        Ok(Scene { rank, factors, point })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn factors(&self) -> &[LinearisedFactor] {
        &self.factors
    }

    pub fn point(&self) -> &[Vec<Complex64>] {
        &self.point
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    /// Same linearised action, different point.
    pub fn with_point(&self, point: Vec<Vec<Complex64>>) -> Result<Scene> {
        Scene::new(self.rank, self.factors.clone(), point)
    }

    /// Indices of the nonzero coordinates of factor `k` (literal zero test).
    pub fn support(&self, k: usize) -> Vec<usize> {
        self.point[k]
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != Complex64::new(0.0, 0.0))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn supports(&self) -> Vec<Vec<usize>> {
        (0..self.factors.len()).map(|k| self.support(k)).collect()
    }

    /// Distinct weight rows over the support of factor `k`.
    pub fn supported_weights(&self, k: usize) -> Vec<Vec<i64>> {
        let set: BTreeSet<Vec<i64>> = self
            .support(k)
            .into_iter()
            .map(|i| self.factors[k].weights[i].clone())
            .collect();
        set.into_iter().collect()
    }

    /// Whether the orbit in factor `k` is a single point (one supported weight).
    pub fn factor_is_degenerate(&self, k: usize) -> bool {
        self.supported_weights(k).len() <= 1
    }

    /// Differences `w_i - w_{i0}` of supported weights, pooled over all factors.
    pub fn weight_differences(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        for k in 0..self.factors.len() {
            let ws = self.supported_weights(k);
            if let Some((first, rest)) = ws.split_first() {
                for w in rest {
                    out.push(w.iter().zip(first).map(|(a, b)| a - b).collect());
                }
            }
        }
        out
    }

    /// Largest spread `max - min` of any weight entry over the whole scene.
    pub fn weight_spread(&self) -> i64 {
        let all = self.factors.iter().flat_map(|f| f.weights.iter().flatten());
        let (lo, hi) = all.fold((i64::MAX, i64::MIN), |(lo, hi), &w| (lo.min(w), hi.max(w)));
        if lo > hi {
            0
        } else {
            hi - lo
        }
    }

    pub(crate) fn check_cocharacter(&self, lambda: &Cocharacter) -> Result<()> {
        check_len(self.rank, lambda.rank())
    }

    pub(crate) fn check_direction(&self, v: &GroupDirection) -> Result<()> {
        check_len(self.rank, v.rank())
    }
}

/// Applies `exp(sigma + i theta)` and renormalises every factor to unit norm.
pub fn act(scene: &Scene, sigma: &GroupDirection, theta: &GroupDirection) -> Result<Scene> {
    scene.check_direction(sigma)?;
    scene.check_direction(theta)?;
    let mut point = Vec::with_capacity(scene.num_factors());
    for (f, x) in scene.factors().iter().zip(scene.point()) {
        // log-moduli first so large sigma cannot overflow
        let logs: Vec<Option<(f64, f64)>> = x
            .iter()
            .zip(&f.weights)
            .map(|(z, w)| {
                if *z == Complex64::new(0.0, 0.0) {
                    None
                } else {
                    let (r, arg) = z.to_polar();
                    Some((r.ln() + pairing(w, sigma).unwrap(), arg + pairing(w, theta).unwrap()))
                }
            })
            .collect();
        let top = logs.iter().flatten().map(|(l, _)| *l).fold(f64::NEG_INFINITY, f64::max);
        let mut y: Vec<Complex64> = logs
            .iter()
            .map(|e| match e {
                Some((l, a)) => Complex64::from_polar((l - top).exp(), *a),
                None => Complex64::new(0.0, 0.0),
            })
            .collect();
        let n = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in y.iter_mut() {
            *z /= n;
        }
        point.push(y);
    }
    scene.with_point(point)
}

/// A linear subspace of the Lie algebra with an exact rational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct LieSubspace {
    rank: usize,
    basis: Vec<Vec<Rational>>,
}

impl LieSubspace {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[Vec<Rational>] {
        &self.basis
    }

    /// Basis vectors scaled to primitive lattice vectors.
    pub fn lattice_basis(&self) -> Vec<Cocharacter> {
        self.basis.iter().map(|b| Cocharacter(linalg::primitive_integer(b))).collect()
    }

    pub fn contains_exact(&self, v: &[Rational]) -> bool {
        let mut rows = self.basis.clone();
        let before = linalg::rank(&rows);
        rows.push(v.to_vec());
        linalg::rank(&rows) == before
    }

    pub fn contains(&self, v: &GroupDirection, tol: f64) -> bool {
        let onb = self.orthonormal();
        let rest = linalg::reject(&v.0, &onb);
        rest.iter().map(|x| x * x).sum::<f64>().sqrt() <= tol
    }

    pub fn orthonormal(&self) -> Vec<Vec<f64>> {
        let float: Vec<Vec<f64>> = self.basis.iter().map(|b| b.iter().map(rat_to_f64).collect()).collect();
        linalg::orthonormal_basis(&float)
    }

    /// Orthonormal basis of the Euclidean orthogonal complement.
    pub fn complement_orthonormal(&self) -> Vec<Vec<f64>> {
        let inner = self.orthonormal();
        let mut all = inner.clone();
        for i in 0..self.rank {
            let mut e = vec![0.0; self.rank];
            e[i] = 1.0;
            all.push(e);
        }
        linalg::orthonormal_basis(&all).split_off(inner.len())
    }
}

/// Lie algebra of the stabiliser: directions pairing equally with every
/// supported weight of each factor.
pub fn stabiliser_lie(scene: &Scene) -> LieSubspace {
    let rows: Vec<Vec<Rational>> = scene
        .weight_differences()
        .into_iter()
        .map(|d| d.into_iter().map(int).collect())
        .collect();
    let basis = linalg::kernel(&rows, scene.rank())
        .into_iter()
        .map(|v| linalg::primitive_integer(&v).into_iter().map(int).collect())
        .collect();
    LieSubspace { rank: scene.rank(), basis }
}

type IntMatrix = Vec<Vec<i64>>;

/// Minimal root datum: a rank and integer generators of the Weyl group acting
/// on the cocharacter lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootDatumLite {
    pub name: String,
    pub rank: usize,
    pub weyl_generators: Vec<IntMatrix>,
}

impl RootDatumLite {
    pub fn new(name: impl Into<String>, rank: usize, weyl_generators: Vec<IntMatrix>) -> Result<Self> {
        if rank == 0 {
            return Err(Error::Precondition("root datum rank must be positive".into()));
        }
        for g in &weyl_generators {
            check_len(rank, g.len())?;
            for row in g {
                check_len(rank, row.len())?;
            }
            let det = determinant(g);
            if det.abs() != int(1) {
                return Err(Error::Precondition(format!(
                    "Weyl generator {g:?} is not invertible over the integers"
                )));
            }
        }
        Ok(RootDatumLite { name: name.into(), rank, weyl_generators })
    }

    /// Torus of rank `r`: trivial Weyl group.
    pub fn torus(r: usize) -> Result<Self> {
        RootDatumLite::new(format!("torus:{r}"), r, Vec::new())
    }

    /// `GL_n`: Weyl group `S_n` generated by adjacent transpositions.
    pub fn gl(n: usize) -> Result<Self> {
        let gens = (0..n.saturating_sub(1))
            .map(|i| {
                let mut m = identity(n);
                m.swap(i, i + 1);
                m
            })
            .collect();
        RootDatumLite::new(format!("gl:{n}"), n, gens)
    }

    /// `GL_n` presented by all transpositions instead of adjacent ones.
    pub fn gl_all_transpositions(n: usize) -> Result<Self> {
        let mut gens = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let mut m = identity(n);
                m.swap(i, j);
                gens.push(m);
            }
        }
        RootDatumLite::new(format!("gl:{n}"), n, gens)
    }

    /// `SL_n` on its coroot lattice (rank `n-1`), simple reflections
    /// `s_i(a_j) = a_j - C_ij a_i` with the type-A Cartan matrix.
    pub fn sl(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Precondition("sl:N needs N >= 2".into()));
        }
        let r = n - 1;
        let cartan = |i: usize, j: usize| -> i64 {
            if i == j {
                2
            } else if i.abs_diff(j) == 1 {
                -1
            } else {
                0
            }
        };
        let gens = (0..r)
            .map(|i| {
                let mut m = identity(r);
                // column j is the image of basis vector a_j
                for j in 0..r {
                    m[i][j] -= cartan(i, j);
                }
                m
            })
            .collect();
        RootDatumLite::new(format!("sl:{n}"), r, gens)
    }

    /// Parses `gl:N`, `sl:N` or `torus:R`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, n) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("group spec {spec:?} is not of the form kind:N")))?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad group size in {spec:?}")))?;
        if n == 0 {
            return Err(Error::Parse(format!("group size must be positive in {spec:?}")));
        }
        match kind.trim() {
            "gl" => RootDatumLite::gl(n),
            "sl" => RootDatumLite::sl(n),
            "torus" => RootDatumLite::torus(n),
            other => Err(Error::Parse(format!("unknown group kind {other:?}"))),
        }
    }

    pub fn apply(m: &IntMatrix, lambda: &Cocharacter) -> Cocharacter {
        Cocharacter(m.iter().map(|row| pairing_int(row, lambda)).collect())
    }

    /// All group elements, by closure of the generators.
    pub fn elements(&self) -> Result<Vec<IntMatrix>> {
        let id = identity(self.rank);
        let mut seen: HashSet<IntMatrix> = HashSet::from([id.clone()]);
        let mut order = vec![id.clone()];
        let mut queue = VecDeque::from([id]);
        while let Some(g) = queue.pop_front() {
            for s in &self.weyl_generators {
                let h = matmul(s, &g);
                if seen.insert(h.clone()) {
                    if seen.len() > WEYL_CAP {
                        return Err(Error::WeylCapExceeded(WEYL_CAP));
                    }
                    order.push(h.clone());
                    queue.push_back(h);
                }
            }
        }
        Ok(order)
    }

    /// The Weyl orbit of `lambda`.
    pub fn orbit(&self, lambda: &Cocharacter) -> Result<Vec<Cocharacter>> {
        let mut seen: HashSet<Cocharacter> = HashSet::from([lambda.clone()]);
        let mut queue = VecDeque::from([lambda.clone()]);
        while let Some(mu) = queue.pop_front() {
            for s in &self.weyl_generators {
                let nu = RootDatumLite::apply(s, &mu);
                if seen.insert(nu.clone()) {
                    if seen.len() > WEYL_CAP {
                        return Err(Error::WeylCapExceeded(WEYL_CAP));
                    }
                    queue.push_back(nu);
                }
            }
        }
        let mut out: Vec<Cocharacter> = seen.into_iter().collect();
        out.sort();
        Ok(out)
    }
}

/// Lexicographically maximal element of the Weyl orbit of `lambda`.
pub fn weyl_canonical(lambda: &Cocharacter, datum: &RootDatumLite) -> Result<Cocharacter> {
    check_len(datum.rank, lambda.rank())?;
    let orbit = datum.orbit(lambda)?;
    Ok(orbit.into_iter().max().expect("orbit contains lambda"))
}

fn identity(n: usize) -> IntMatrix {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

fn matmul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

fn determinant(m: &IntMatrix) -> Rational {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect();
    let mut det = int(1);
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c].clone();
        for i in c + 1..n {
            let f = &a[i][c] / &a[c][c];
            for j in c..n {
                let v = &a[c][j] * &f;
                a[i][j] -= v;
            }
        }
    }
    det
}
