//! Polytope kernels on V-representations: extreme points, Minkowski sums,
//! relative-interior tests, supporting faces and the minimum-norm point.

use std::cmp::Ordering;

use crate::linalg;
use crate::num::{dot, Field};

use super::lp::{self, LpResult};

pub(crate) fn same_point<F: Field>(p: &[F], q: &[F]) -> bool {
    p.iter().zip(q).all(|(x, y)| x.f_sub(y).f_is_zero())
}

pub(crate) fn dedup<F: Field>(pts: Vec<Vec<F>>) -> Vec<Vec<F>> {
    let mut out: Vec<Vec<F>> = Vec::with_capacity(pts.len());
    for p in pts {
        if !out.iter().any(|q| same_point(q, &p)) {
            out.push(p);
        }
    }
    out
}

fn sub<F: Field>(p: &[F], q: &[F]) -> Vec<F> {
    p.iter().zip(q).map(|(x, y)| x.f_sub(y)).collect()
}

/// Whether `p` is a convex combination of `pts`.
pub(crate) fn in_hull<F: Field>(p: &[F], pts: &[Vec<F>]) -> bool {
    if pts.is_empty() {
        return false;
    }
    let d = p.len();
    let mut a: Vec<Vec<F>> = (0..d).map(|i| pts.iter().map(|q| q[i].clone()).collect()).collect();
    a.push(vec![F::f_one(); pts.len()]);
    let mut b = p.to_vec();
    b.push(F::f_one());
    lp::feasible(&a, &b)
}

fn cross<F: Field>(o: &[F], a: &[F], b: &[F]) -> F {
    let (ax, ay) = (a[0].f_sub(&o[0]), a[1].f_sub(&o[1]));
    let (bx, by) = (b[0].f_sub(&o[0]), b[1].f_sub(&o[1]));
    ax.f_mul(&by).f_sub(&ay.f_mul(&bx))
}

fn lex_cmp<F: Field>(p: &[F], q: &[F]) -> Ordering {
    for (x, y) in p.iter().zip(q) {
        match x.f_cmp_to(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Monotone chain hull in the plane, strict vertices only.
fn planar_hull<F: Field>(mut pts: Vec<Vec<F>>) -> Vec<Vec<F>> {
    pts.sort_by(|p, q| lex_cmp(p, q));
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Vec<F>> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && !cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p).f_is_pos() {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Vec<F>> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && !cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p).f_is_pos() {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    dedup(lower)
}

/// Extreme points of `conv(pts)`, in lexicographic order.
pub(crate) fn extreme_points<F: Field>(pts: Vec<Vec<F>>) -> Vec<Vec<F>> {
    let pts = dedup(pts);
    if pts.len() <= 1 {
        return pts;
    }
    let d = pts[0].len();
    let mut out = match d {
        1 => {
            let lo = pts.iter().min_by(|p, q| lex_cmp(p, q)).unwrap().clone();
            let hi = pts.iter().max_by(|p, q| lex_cmp(p, q)).unwrap().clone();
            dedup(vec![lo, hi])
        }
        2 => planar_hull(pts),
        _ => {
            let mut keep: Vec<Vec<F>> = Vec::new();
            for (i, p) in pts.iter().enumerate() {
                let others: Vec<Vec<F>> =
                    pts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, q)| q.clone()).collect();
                if !in_hull(p, &others) {
                    keep.push(p.clone());
                }
            }
            keep
        }
    };
    out.sort_by(|p, q| lex_cmp(p, q));
    out
}

pub(crate) fn minkowski<F: Field>(a: &[Vec<F>], b: &[Vec<F>]) -> Vec<Vec<F>> {
    let mut sums = Vec::with_capacity(a.len() * b.len());
    for p in a {
        for q in b {
            sums.push(p.iter().zip(q).map(|(x, y)| x.f_add(y)).collect());
        }
    }
    extreme_points(sums)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Position {
    Outside,
    Boundary,
    Interior,
}

/// Locates `a` relative to `conv(pts)`: a point is in the relative interior
/// iff it is a convex combination with all weights positive, so maximise the
/// smallest weight `t`.
pub(crate) fn locate<F: Field>(a: &[F], pts: &[Vec<F>]) -> Position {
    let n = pts.len();
    let d = a.len();
    // variables: t, nu_1..nu_n, weights t + nu_p
    let mut rows: Vec<Vec<F>> = Vec::with_capacity(d + 1);
    for i in 0..d {
        let total = pts.iter().fold(F::f_zero(), |acc, p| acc.f_add(&p[i]));
        let mut row = vec![total];
        row.extend(pts.iter().map(|p| p[i].clone()));
        rows.push(row);
    }
    let mut last = vec![F::f_from_i64(n as i64)];
    last.extend(std::iter::repeat(F::f_one()).take(n));
    rows.push(last);
    let mut b = a.to_vec();
    b.push(F::f_one());
    let mut c = vec![F::f_zero(); n + 1];
    c[0] = F::f_one();
    match lp::maximize(&rows, &b, &c) {
        LpResult::Infeasible => Position::Outside,
        LpResult::Optimal { value, .. } if value.f_is_pos() => Position::Interior,
        LpResult::Optimal { .. } => Position::Boundary,
        LpResult::Unbounded => unreachable!("weights are bounded by the simplex constraint"),
    }
}

/// A direction `λ` with `⟨p − a, λ⟩ ≥ 0` on every point whose minimising face
/// is the smallest face of `conv(pts)` containing `a` (assumed in the hull).
pub(crate) fn minimal_face_normal<F: Field>(a: &[F], pts: &[Vec<F>]) -> Vec<F> {
    let d = a.len();
    let n = pts.len();
    // variables: lam+ (d), lam- (d), s (n), e (n), f (n)
    let width = 2 * d + 3 * n;
    let mut rows = Vec::with_capacity(2 * n);
    let mut b = Vec::with_capacity(2 * n);
    for (k, p) in pts.iter().enumerate() {
        let diff = sub(p, a);
        let mut row = vec![F::f_zero(); width];
        for i in 0..d {
            row[i] = diff[i].clone();
            row[d + i] = diff[i].f_neg();
        }
        row[2 * d + k] = F::f_one().f_neg();
        row[2 * d + n + k] = F::f_one().f_neg();
        rows.push(row);
        b.push(F::f_zero());
        let mut cap = vec![F::f_zero(); width];
        cap[2 * d + k] = F::f_one();
        cap[2 * d + 2 * n + k] = F::f_one();
        rows.push(cap);
        b.push(F::f_one());
    }
    let mut c = vec![F::f_zero(); width];
    for k in 0..n {
        c[2 * d + k] = F::f_one();
    }
    match lp::maximize(&rows, &b, &c) {
        LpResult::Optimal { x, .. } => (0..d).map(|i| x[i].f_sub(&x[d + i])).collect(),
        _ => vec![F::f_zero(); d],
    }
}

/// Nearest point of `conv(pts)` to the origin (Wolfe's algorithm).
pub(crate) fn min_norm_point<F: Field>(pts: &[Vec<F>]) -> Vec<F> {
    assert!(!pts.is_empty(), "min_norm_point on an empty set");
    let norm2 = |p: &[F]| dot(p, p);
    let start = (0..pts.len())
        .min_by(|&i, &j| norm2(&pts[i]).f_cmp_to(&norm2(&pts[j])))
        .unwrap();
    let mut active: Vec<usize> = vec![start];
    let mut weights: Vec<F> = vec![F::f_one()];
    let mut x = pts[start].clone();
    let combine = |idx: &[usize], w: &[F]| -> Vec<F> {
        let d = pts[0].len();
        let mut out = vec![F::f_zero(); d];
        for (&i, wi) in idx.iter().zip(w) {
            for (o, p) in out.iter_mut().zip(&pts[i]) {
                *o = o.f_add(&p.f_mul(wi));
            }
        }
        out
    };
    for _major in 0..10_000 {
        let xx = norm2(&x);
        if xx.f_is_zero() {
            return x;
        }
        let (j, best) = (0..pts.len())
            .map(|j| (j, dot(&x, &pts[j])))
            .min_by(|a, b| a.1.f_cmp_to(&b.1))
            .unwrap();
        if best.f_cmp_to(&xx) != Ordering::Less || active.contains(&j) {
            return x;
        }
        active.push(j);
        weights.push(F::f_zero());
        loop {
            let Some(v) = affine_minimizer(pts, &active) else { return x };
            if v.iter().all(F::f_is_pos) {
                x = combine(&active, &v);
                weights = v;
                break;
            }
            // step from weights towards v until a weight hits zero
            let mut theta = F::f_one();
            for (w, vi) in weights.iter().zip(&v) {
                if !vi.f_is_pos() {
                    let denom = w.f_sub(vi);
                    if denom.f_is_pos() {
                        let t = w.f_div(&denom);
                        if t.f_cmp_to(&theta) == Ordering::Less {
                            theta = t;
                        }
                    } else {
                        theta = F::f_zero();
                    }
                }
            }
            let one_minus = F::f_one().f_sub(&theta);
            let mixed: Vec<F> =
                weights.iter().zip(&v).map(|(w, vi)| w.f_mul(&one_minus).f_add(&vi.f_mul(&theta))).collect();
            let keep: Vec<usize> = (0..active.len()).filter(|&i| mixed[i].f_is_pos()).collect();
            if keep.len() == active.len() {
                // no weight vanished: only possible under float round-off
                return x;
            }
            active = keep.iter().map(|&i| active[i]).collect();
            weights = keep.iter().map(|&i| mixed[i].clone()).collect();
            let total = weights.iter().fold(F::f_zero(), |acc, w| acc.f_add(w));
            weights = weights.iter().map(|w| w.f_div(&total)).collect();
            x = combine(&active, &weights);
        }
    }
    x
}

/// Affine coefficients of the point of `aff(S)` nearest the origin.
fn affine_minimizer<F: Field>(pts: &[Vec<F>], active: &[usize]) -> Option<Vec<F>> {
    let s = active.len();
    let mut m = vec![vec![F::f_zero(); s + 1]; s + 1];
    for (a, &i) in active.iter().enumerate() {
        for (b, &j) in active.iter().enumerate() {
            m[a][b] = dot(&pts[i], &pts[j]);
        }
        m[a][s] = F::f_one();
        m[s][a] = F::f_one();
    }
    let mut rhs = vec![F::f_zero(); s + 1];
    rhs[s] = F::f_one();
    let sol = linalg::solve(&m, &rhs)?;
    Some(sol[..s].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, rat, Rational};

    fn pts(v: &[&[i64]]) -> Vec<Vec<Rational>> {
        v.iter().map(|p| p.iter().map(|&x| int(x)).collect()).collect()
    }

    #[test]
    fn interval_and_square() {
        assert_eq!(extreme_points(pts(&[&[2], &[0], &[-1]])), pts(&[&[-1], &[2]]));
        let sq = extreme_points(pts(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1], &[1, 0], &[0, 0]]));
        assert_eq!(sq.len(), 4);
        let cube = extreme_points(pts(&[
            &[0, 0, 0],
            &[1, 0, 0],
            &[0, 1, 0],
            &[0, 0, 1],
            &[1, 1, 1],
            &[1, 1, 0],
            &[1, 0, 1],
            &[0, 1, 1],
        ]));
        assert_eq!(cube.len(), 8);
        let with_center = extreme_points(pts(&[&[0, 0, 0], &[2, 0, 0], &[0, 2, 0], &[0, 0, 2], &[1, 1, 0]]));
        assert_eq!(with_center.len(), 4);
    }

    #[test]
    fn minkowski_intervals() {
        let a: Vec<Vec<Rational>> = vec![vec![int(-1)], vec![int(1)]];
        let b: Vec<Vec<Rational>> = vec![vec![int(-2)], vec![int(6)]];
        assert_eq!(minkowski(&a, &b), pts(&[&[-3], &[7]]));
    }

    #[test]
    fn locate_cases() {
        let seg = pts(&[&[-1], &[2]]);
        assert_eq!(locate(&[int(0)], &seg), Position::Interior);
        assert_eq!(locate(&[int(2)], &seg), Position::Boundary);
        assert_eq!(locate(&[int(3)], &seg), Position::Outside);
        let flat = pts(&[&[0, 0], &[2, 0]]);
        assert_eq!(locate(&[int(1), int(0)], &flat), Position::Interior);
        assert_eq!(locate(&[int(1), int(1)], &flat), Position::Outside);
        let single = pts(&[&[1, 1]]);
        assert_eq!(locate(&[int(1), int(1)], &single), Position::Interior);
    }

    #[test]
    fn wolfe_examples() {
        let seg = pts(&[&[1], &[3]]);
        assert_eq!(min_norm_point(&seg), vec![int(1)]);
        let tri = pts(&[&[1, -1], &[1, 1], &[3, 0]]);
        assert_eq!(min_norm_point(&tri), vec![int(1), int(0)]);
        let edge = pts(&[&[2, 0], &[0, 2], &[3, 3]]);
        assert_eq!(min_norm_point(&edge), vec![int(1), int(1)]);
        let inside = pts(&[&[-1, -1], &[2, -1], &[0, 3]]);
        assert_eq!(min_norm_point(&inside), vec![int(0), int(0)]);
        let skew = pts(&[&[1, 2], &[3, -1]]);
        // projection of 0 onto the segment: p + t(q - p) with t = 1/13·(…)
        let x = min_norm_point(&skew);
        let d: Vec<Rational> = vec![int(2), int(-3)];
        assert_eq!(dot(&x, &d), int(0));
        assert_eq!(x, vec![rat(21, 13), rat(14, 13)]);
    }

    #[test]
    fn face_normal_for_boundary_point() {
        let sq = pts(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1]]);
        let lam = minimal_face_normal(&[int(0), rat(1, 2)], &sq);
        // minimal face is the left edge x = 0
        assert!(lam[0] > int(0));
        assert_eq!(lam[1], int(0));
        let lam = minimal_face_normal(&[int(0), int(0)], &sq);
        assert!(lam[0] > int(0) && lam[1] > int(0));
    }
}
