//! Dense two-phase simplex with Bland's rule over a [`Field`].
//!
//! Solves `max cᵀx` subject to `Ax = b`, `x ≥ 0`. Exact over rationals; over
//! floats every sign test goes through the field tolerance.

use crate::num::Field;

#[derive(Clone, Debug, PartialEq)]
pub enum LpResult<F> {
    Optimal { x: Vec<F>, value: F },
    Infeasible,
    Unbounded,
}

impl<F> LpResult<F> {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpResult::Infeasible)
    }
}

struct Tableau<F> {
    rows: Vec<Vec<F>>,
    basis: Vec<usize>,
    cost: Vec<F>,
    rhs: usize,
}

impl<F: Field> Tableau<F> {
    fn pivot(&mut self, r: usize, col: usize) {
        let inv = F::f_one().f_div(&self.rows[r][col]);
        for x in self.rows[r].iter_mut() {
            *x = x.f_mul(&inv);
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r && !row[col].f_is_zero() {
                let f = row[col].clone();
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x = x.f_sub(&p.f_mul(&f));
                }
                row[col] = F::f_zero();
            }
        }
        if !self.cost[col].f_is_zero() {
            let f = self.cost[col].clone();
            for (x, p) in self.cost.iter_mut().zip(&pivot_row) {
                *x = x.f_sub(&p.f_mul(&f));
            }
            self.cost[col] = F::f_zero();
        }
        self.basis[r] = col;
    }

    /// Runs simplex iterations over columns `< allowed`; false when unbounded.
    fn run(&mut self, allowed: usize) -> bool {
        loop {
            let Some(col) = (0..allowed).find(|&j| self.cost[j].f_is_pos()) else {
                return true;
            };
            let mut best: Option<(usize, F)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[col].f_is_pos() {
                    continue;
                }
                let ratio = row[self.rhs].f_div(&row[col]);
                let better = match &best {
                    None => true,
                    Some((bi, br)) => match ratio.f_cmp_to(br) {
                        std::cmp::Ordering::Less => true,
                        std::cmp::Ordering::Equal => self.basis[i] < self.basis[*bi],
                        std::cmp::Ordering::Greater => false,
                    },
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, col),
                None => return false,
            }
        }
    }

    fn reset_cost(&mut self, c: &[F]) {
        let width = self.rhs + 1;
        let mut cost = vec![F::f_zero(); width];
        cost[..c.len()].clone_from_slice(c);
        for (i, row) in self.rows.iter().enumerate() {
            let cb = cost_of(c, self.basis[i]);
            if cb.f_is_zero() {
                continue;
            }
            for (x, t) in cost.iter_mut().zip(row) {
                *x = x.f_sub(&cb.f_mul(t));
            }
        }
        self.cost = cost;
    }
}

fn cost_of<F: Field>(c: &[F], j: usize) -> F {
    c.get(j).cloned().unwrap_or_else(F::f_zero)
}

pub fn maximize<F: Field>(a: &[Vec<F>], b: &[F], c: &[F]) -> LpResult<F> {
    let m = a.len();
    let n = c.len();
    let rhs = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (row, bi)) in a.iter().zip(b).enumerate() {
        let flip = bi.f_is_neg();
        let mut t = vec![F::f_zero(); rhs + 1];
        for (j, x) in row.iter().enumerate() {
            t[j] = if flip { x.f_neg() } else { x.clone() };
        }
        t[n + i] = F::f_one();
        t[rhs] = if flip { bi.f_neg() } else { bi.clone() };
        rows.push(t);
    }
    let mut tab = Tableau { rows, basis: (n..n + m).collect(), cost: Vec::new(), rhs };

    // phase 1: maximise minus the sum of artificials
    let phase1: Vec<F> = (0..rhs).map(|j| if j >= n { F::f_one().f_neg() } else { F::f_zero() }).collect();
    tab.reset_cost(&phase1);
    tab.run(rhs);
    let infeasibility = tab
        .rows
        .iter()
        .zip(&tab.basis)
        .filter(|(_, &bv)| bv >= n)
        .fold(F::f_zero(), |acc, (row, _)| acc.f_add(&row[rhs]));
    if infeasibility.f_is_pos() {
        return LpResult::Infeasible;
    }
    // drive remaining artificials out, dropping redundant rows
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| !tab.rows[i][j].f_is_zero()) {
                tab.pivot(i, j);
                i += 1;
            } else {
                tab.rows.remove(i);
                tab.basis.remove(i);
            }
        } else {
            i += 1;
        }
    }

    tab.reset_cost(c);
    if !tab.run(n) {
        return LpResult::Unbounded;
    }
    let mut x = vec![F::f_zero(); n];
    for (row, &bv) in tab.rows.iter().zip(&tab.basis) {
        if bv < n {
            x[bv] = row[rhs].clone();
        }
    }
    let value = c.iter().zip(&x).fold(F::f_zero(), |acc, (ci, xi)| acc.f_add(&ci.f_mul(xi)));
    LpResult::Optimal { x, value }
}

/// Feasibility of `Ax = b, x ≥ 0`.
pub fn feasible<F: Field>(a: &[Vec<F>], b: &[F]) -> bool {
    let n = a.first().map_or(0, Vec::len);
    maximize(a, b, &vec![F::f_zero(); n]).is_feasible()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, rat, Rational};

    fn q(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect()
    }

    #[test]
    fn small_lp_exact() {
        // max x + y s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let a = q(&[&[1, 2, 1, 0], &[3, 1, 0, 1]]);
        let b = vec![int(4), int(6)];
        let c = vec![int(1), int(1), int(0), int(0)];
        match maximize(&a, &b, &c) {
            LpResult::Optimal { x, value } => {
                assert_eq!(value, rat(14, 5));
                assert_eq!(x[0], rat(8, 5));
                assert_eq!(x[1], rat(6, 5));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = q(&[&[1, 1]]);
        assert_eq!(maximize(&a, &[int(-1)], &[int(0), int(0)]), LpResult::Infeasible);
        let a = q(&[&[1, -1]]);
        assert_eq!(maximize(&a, &[int(0)], &[int(1), int(0)]), LpResult::Unbounded);
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let a = q(&[&[1, 1], &[2, 2]]);
        match maximize(&a, &[int(1), int(2)], &[int(1), int(0)]) {
            LpResult::Optimal { value, .. } => assert_eq!(value, int(1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn float_lp_matches_exact() {
        let a = vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]];
        match maximize(&a, &[4.0, 6.0], &[1.0, 1.0, 0.0, 0.0]) {
            LpResult::Optimal { value, .. } => assert!((value - 2.8).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }
}
