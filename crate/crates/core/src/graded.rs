//! Graded points, specialisation along cocharacters, and the combinatorics of
//! graded points of a classifying stack `BG`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{pairing_int, Cocharacter, RootDatumLite, Scene};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::linalg;
use crate::num::{int, Rational};

/// The common pairing value `⟨w_i, λ⟩` over the support of each factor, or
/// `None` when `lambda` does not fix the point.
pub fn fixed_levels(scene: &Scene, lambda: &Cocharacter) -> Result<Option<Vec<i64>>> {
    scene.check_cocharacter(lambda)?;
    let mut levels = Vec::with_capacity(scene.num_factors());
    for (k, f) in scene.factors().iter().enumerate() {
        let mut vals = scene.support(k).into_iter().map(|i| pairing_int(&f.weights[i], lambda));
        let first = vals.next().expect("support is nonempty");
        if vals.any(|v| v != first) {
            return Ok(None);
        }
        levels.push(first);
    }
    Ok(Some(levels))
}

/// A point together with a cocharacter of its stabiliser.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedPoint {
    scene: Scene,
    lambda: Cocharacter,
}

impl GradedPoint {
    pub fn new(scene: Scene, lambda: Cocharacter) -> Result<Self> {
        match fixed_levels(&scene, &lambda)? {
            Some(_) => Ok(GradedPoint { scene, lambda }),
            None => Err(Error::Precondition(format!("cocharacter {lambda} does not fix the point"))),
        }
    }

    /// The graded point `(x, 0)`.
    pub fn ungraded(scene: Scene) -> Self {
        let lambda = Cocharacter::zero(scene.rank());
        GradedPoint { scene, lambda }
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn lambda(&self) -> &Cocharacter {
        &self.lambda
    }

    pub fn levels(&self) -> Vec<i64> {
        fixed_levels(&self.scene, &self.lambda).unwrap().expect("validated on construction")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpecialisationResult {
    pub limit: Scene,
    /// Minimal pairing `m_k` over the support of each factor.
    pub levels: Vec<i64>,
    pub supports: Vec<Vec<usize>>,
}

impl SpecialisationResult {
    /// Whether the limit left the orbit, i.e. some factor lost support.
    pub fn leaves_orbit(&self, original: &Scene) -> bool {
        self.supports != original.supports()
    }
}

/// The limit of `lambda(t)·x` as `t → 0`: keeps the argmin coordinates of
/// each factor.
pub fn specialise(scene: &Scene, lambda: &Cocharacter) -> Result<SpecialisationResult> {
    scene.check_cocharacter(lambda)?;
    let mut levels = Vec::new();
    let mut supports = Vec::new();
    let mut point = Vec::new();
    for (k, f) in scene.factors().iter().enumerate() {
        let supp = scene.support(k);
        let m = supp.iter().map(|&i| pairing_int(&f.weights[i], lambda)).min().expect("nonempty support");
        let keep: Vec<usize> = supp.into_iter().filter(|&i| pairing_int(&f.weights[i], lambda) == m).collect();
        let y = scene.point()[k]
            .iter()
            .enumerate()
            .map(|(i, z)| if keep.contains(&i) { *z } else { Complex64::new(0.0, 0.0) })
            .collect();
        levels.push(m);
        supports.push(keep);
        point.push(y);
    }
    Ok(SpecialisationResult { limit: scene.with_point(point)?, levels, supports })
}

/// `(x, ζ) ⇝ (lim_λ x, ζ∘λ)`.
pub fn equivariant_specialise(g: &GradedPoint, lambda: &Cocharacter) -> Result<GradedPoint> {
    let spec = specialise(&g.scene, lambda)?;
    GradedPoint::new(spec.limit, g.lambda.compose(lambda))
}

/// One connected component of `Grad(BG)`, labelled by a Weyl orbit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GradComponent {
    pub representative: Cocharacter,
    pub orbit_size: usize,
    /// Coordinate indices grouped by entry value, in increasing value.
    pub levi_blocks: Vec<Vec<usize>>,
}

fn levi_blocks(lambda: &Cocharacter) -> Vec<Vec<usize>> {
    let mut by_value: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &v) in lambda.entries().iter().enumerate() {
        by_value.entry(v).or_default().push(i);
    }
    by_value.into_values().collect()
}

/// Weyl orbits of cocharacters in `[-bound, bound]^rank`, one component each,
/// sorted by representative.
pub fn grad_components_bg(datum: &RootDatumLite, bound: i64, mode: Execution) -> Result<Vec<GradComponent>> {
    if bound < 1 {
        return Err(Error::Precondition("bound must be at least 1".into()));
    }
    let lattice = Cocharacter::enumerate_box(datum.rank, bound);
    let canon = exec::map(mode, &lattice, |l| datum.orbit(l).map(|o| (o.last().cloned().unwrap(), o.len())));
    let mut comps: BTreeMap<Cocharacter, usize> = BTreeMap::new();
    for c in canon {
        let (rep, size) = c?;
        comps.insert(rep, size);
    }
    Ok(comps
        .into_iter()
        .map(|(rep, orbit_size)| GradComponent { levi_blocks: levi_blocks(&rep), representative: rep, orbit_size })
        .collect())
}

/// Dimension of the Weyl-invariant linear functionals on the cocharacter
/// lattice: `r - rank[gᵀ - I]` stacked over the generators.
pub fn charges_dimension_bg(datum: &RootDatumLite) -> usize {
    let r = datum.rank;
    let rows: Vec<Vec<Rational>> = datum
        .weyl_generators
        .iter()
        .flat_map(|g| {
            (0..r).map(move |i| (0..r).map(|j| int(g[j][i] - i64::from(i == j))).collect::<Vec<_>>())
        })
        .collect();
    r - linalg::rank(&rows)
}

/// Same dimension through the trace of the averaging projector
/// `|W|⁻¹ Σ_g g`, which needs the whole group.
pub fn charges_dimension_by_averaging(datum: &RootDatumLite) -> Result<usize> {
    let elems = datum.elements()?;
    let trace: i64 = elems.iter().map(|g| (0..datum.rank).map(|i| g[i][i]).sum::<i64>()).sum();
    let n = elems.len() as i64;
    if trace % n != 0 {
        return Err(Error::Numeric(format!("averaged trace {trace}/{n} is not an integer")));
    }
    Ok((trace / n) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::LinearisedFactor;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn rank1(weights: &[i64], x: &[f64]) -> Scene {
        Scene::new(
            1,
            vec![LinearisedFactor::unshifted("A", weights.iter().map(|&w| vec![w]).collect())],
            vec![x.iter().map(|&v| c(v)).collect()],
        )
        .unwrap()
    }

    #[test]
    fn specialise_examples() {
        let s = rank1(&[2, 0, -1], &[1.0, 1.0, 1.0]);
        let r = specialise(&s, &Cocharacter(vec![1])).unwrap();
        assert_eq!(r.levels, vec![-1]);
        assert_eq!(r.limit.point()[0], vec![c(0.0), c(0.0), c(1.0)]);
        let r = specialise(&s, &Cocharacter(vec![0])).unwrap();
        assert_eq!(r.levels, vec![0]);
        assert_eq!(r.limit, s);
        let r = specialise(&s, &Cocharacter(vec![-1])).unwrap();
        assert_eq!(r.levels, vec![-2]);
        assert_eq!(r.limit.point()[0], vec![c(1.0), c(0.0), c(0.0)]);
    }

    #[test]
    fn equivariant_specialise_example() {
        let s = Scene::new(
            2,
            vec![LinearisedFactor::unshifted("A", vec![vec![1, 0], vec![1, 3], vec![0, 3]])],
            vec![vec![c(1.0), c(0.0), c(1.0)]],
        )
        .unwrap();
        let g = GradedPoint::new(s, Cocharacter(vec![3, 1])).unwrap();
        let h = equivariant_specialise(&g, &Cocharacter(vec![1, 0])).unwrap();
        assert_eq!(h.lambda(), &Cocharacter(vec![4, 1]));
        assert_eq!(h.scene().point()[0], vec![c(0.0), c(0.0), c(1.0)]);
        let same = equivariant_specialise(&g, &Cocharacter(vec![0, 0])).unwrap();
        assert_eq!(same, g);
        assert!(GradedPoint::new(g.scene().clone(), Cocharacter(vec![3, -1])).is_err());
    }

    #[test]
    fn grad_bg_gl2() {
        let comps = grad_components_bg(&RootDatumLite::gl(2).unwrap(), 1, Execution::Sequential).unwrap();
        let reps: Vec<Vec<i64>> = comps.iter().map(|c| c.representative.0.clone()).collect();
        assert_eq!(reps, vec![vec![-1, -1], vec![0, -1], vec![0, 0], vec![1, -1], vec![1, 0], vec![1, 1]]);
        let scalar = comps.iter().find(|c| c.representative.0 == vec![1, 1]).unwrap();
        assert_eq!(scalar.levi_blocks, vec![vec![0, 1]]);
        assert_eq!(scalar.orbit_size, 1);
        let split = comps.iter().find(|c| c.representative.0 == vec![1, 0]).unwrap();
        assert_eq!(split.levi_blocks.len(), 2);
        assert_eq!(split.orbit_size, 2);
    }

    #[test]
    fn grad_bg_torus_rank1() {
        let comps = grad_components_bg(&RootDatumLite::torus(1).unwrap(), 1, Execution::Sequential).unwrap();
        assert_eq!(comps.len(), 3);
    }

    #[test]
    fn charges_dimensions() {
        for n in 1..=5 {
            assert_eq!(charges_dimension_bg(&RootDatumLite::gl(n).unwrap()), 1);
        }
        assert_eq!(charges_dimension_bg(&RootDatumLite::sl(2).unwrap()), 0);
        assert_eq!(charges_dimension_bg(&RootDatumLite::sl(3).unwrap()), 0);
        for r in 1..=4 {
            assert_eq!(charges_dimension_bg(&RootDatumLite::torus(r).unwrap()), r);
        }
    }
}
