//! Dense two-phase simplex over an ordered field.
//!
//! The symmetrizability checks only ever build small feasibility programs, so
//! a dense tableau is enough. The solver is generic over [`Field`] so the same
//! code runs in `f64` and in exact rational arithmetic.

use std::cmp::Ordering;
use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("pivot limit of {0} exceeded")]
    PivotLimit(usize),
}

/// Arithmetic needed by the tableau. `sign` decides zero-ness, so the float
/// implementation carries its own tolerance.
pub trait Field: Clone + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn sign(&self) -> Ordering;
    fn to_f64(&self) -> f64;
    fn cmp_value(&self, o: &Self) -> Ordering {
        self.sub(o).sign()
    }
}

const FLOAT_EPS: f64 = 1e-12;

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn sign(&self) -> Ordering {
        if *self > FLOAT_EPS {
            Ordering::Greater
        } else if *self < -FLOAT_EPS {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Field for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn sign(&self) -> Ordering {
        if self.is_positive() {
            Ordering::Greater
        } else if self.is_negative() {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint<F> {
    pub coeffs: Vec<(usize, F)>,
    pub relation: Relation,
    pub rhs: F,
}

/// `minimize c·x` subject to the constraints and `x ≥ 0`.
#[derive(Debug, Clone)]
pub struct Problem<F> {
    pub num_vars: usize,
    pub objective: Vec<(usize, F)>,
    pub constraints: Vec<Constraint<F>>,
}

impl<F: Field> Problem<F> {
    pub fn new(num_vars: usize) -> Self {
        Problem {
            num_vars,
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, F)>, relation: Relation, rhs: F) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Tableau entries the solver would allocate.
    pub fn tableau_size(&self) -> usize {
        let m = self.constraints.len();
        let slacks = self
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        (m + 1) * (self.num_vars + slacks + m + 1)
    }
}

#[derive(Debug, Clone)]
pub enum Outcome<F> {
    Optimal { x: Vec<F>, value: F },
    Infeasible,
    Unbounded,
}

struct Tableau<F> {
    // m constraint rows then the objective row; last column is the rhs
    rows: Vec<Vec<F>>,
    basis: Vec<usize>,
    cols: usize,
}

impl<F: Field> Tableau<F> {
    fn rhs(&self, r: usize) -> &F {
        &self.rows[r][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.div(&p);
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c].clone();
            if f.sign() == Ordering::Equal {
                continue;
            }
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if pv.sign() != Ordering::Equal {
                    *v = v.sub(&f.mul(pv));
                }
            }
            row[c] = F::zero();
        }
        self.basis[r] = c;
    }

    /// Minimizes the objective row over columns allowed by `allowed`.
    fn optimize(&mut self, allowed: &dyn Fn(usize) -> bool, max_pivots: usize) -> Result<bool, LpError> {
        let m = self.basis.len();
        let obj = m;
        let mut degenerate_run = 0usize;
        for _ in 0..max_pivots {
            // Dantzig entering rule, switching to Bland after a degenerate stall.
            let bland = degenerate_run > 50;
            let mut entering: Option<usize> = None;
            for c in 0..self.cols {
                if !allowed(c) || self.rows[obj][c].sign() != Ordering::Less {
                    continue;
                }
                match entering {
                    None => entering = Some(c),
                    Some(e) if !bland => {
                        if self.rows[obj][c].cmp_value(&self.rows[obj][e]) == Ordering::Less {
                            entering = Some(c);
                        }
                    }
                    Some(_) => {}
                }
                if bland && entering.is_some() {
                    break;
                }
            }
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leaving: Option<(usize, F)> = None;
            for r in 0..m {
                if self.rows[r][c].sign() != Ordering::Greater {
                    continue;
                }
                let ratio = self.rhs(r).div(&self.rows[r][c]);
                let better = match &leaving {
                    None => true,
                    Some((lr, best)) => match ratio.cmp_value(best) {
                        Ordering::Less => true,
                        Ordering::Equal => self.basis[r] < self.basis[*lr],
                        Ordering::Greater => false,
                    },
                };
                if better {
                    leaving = Some((r, ratio));
                }
            }
            let Some((r, ratio)) = leaving else {
                return Ok(false);
            };
            if ratio.sign() == Ordering::Equal {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
        }
        Err(LpError::PivotLimit(max_pivots))
    }
}

/// Solve with the two-phase method.
pub fn solve<F: Field>(problem: &Problem<F>, max_pivots: usize) -> Result<Outcome<F>, LpError> {
    let n = problem.num_vars;
    let m = problem.constraints.len();
    let slack_count = problem
        .constraints
        .iter()
        .filter(|c| c.relation != Relation::Eq)
        .count();
    let art_start = n + slack_count;
    let cols = art_start + m;
    let mut rows: Vec<Vec<F>> = Vec::with_capacity(m + 1);
    let mut basis = Vec::with_capacity(m);
    let mut slack = n;
    let mut uses_artificial = vec![false; m];
    for (i, con) in problem.constraints.iter().enumerate() {
        let mut row = vec![F::zero(); cols + 1];
        for (j, v) in &con.coeffs {
            row[*j] = row[*j].add(v);
        }
        let mut slack_col = None;
        match con.relation {
            Relation::Le => {
                row[slack] = F::one();
                slack_col = Some(slack);
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = F::zero().sub(&F::one());
                slack_col = Some(slack);
                slack += 1;
            }
            Relation::Eq => {}
        }
        row[cols] = con.rhs.clone();
        if row[cols].sign() == Ordering::Less {
            for v in row.iter_mut() {
                *v = F::zero().sub(v);
            }
        }
        match slack_col {
            Some(sc) if row[sc].sign() == Ordering::Greater => basis.push(sc),
            _ => {
                row[art_start + i] = F::one();
                basis.push(art_start + i);
                uses_artificial[i] = true;
            }
        }
        rows.push(row);
    }
    // phase one objective: sum of artificials, expressed in nonbasic terms
    let mut obj = vec![F::zero(); cols + 1];
    for (i, row) in rows.iter().enumerate() {
        if uses_artificial[i] {
            for (o, v) in obj.iter_mut().zip(row) {
                *o = o.sub(v);
            }
        }
    }
    for i in 0..m {
        if uses_artificial[i] {
            obj[art_start + i] = F::zero();
        }
    }
    rows.push(obj);
    let mut t = Tableau { rows, basis, cols };

    if uses_artificial.iter().any(|&a| a) {
        t.optimize(&|c| c < cols, max_pivots)?;
        // phase one optimum is -rhs of the objective row
        if t.rhs(m).sign() == Ordering::Less {
            return Ok(Outcome::Infeasible);
        }
        // drive remaining artificials out of the basis
        for r in 0..m {
            if t.basis[r] >= art_start {
                if let Some(c) = (0..art_start).find(|&c| t.rows[r][c].sign() != Ordering::Equal) {
                    t.pivot(r, c);
                }
            }
        }
    }

    // phase two objective row
    let mut obj = vec![F::zero(); cols + 1];
    for (j, v) in &problem.objective {
        obj[*j] = obj[*j].add(v);
    }
    for r in 0..m {
        let b = t.basis[r];
        let cb = obj[b].clone();
        if cb.sign() != Ordering::Equal {
            for (o, v) in obj.iter_mut().zip(&t.rows[r]) {
                *o = o.sub(&cb.mul(v));
            }
        }
    }
    t.rows[m] = obj;
    let bounded = t.optimize(&|c| c < art_start, max_pivots)?;
    if !bounded {
        return Ok(Outcome::Unbounded);
    }
    let mut x = vec![F::zero(); n];
    for r in 0..m {
        if t.basis[r] < n {
            x[t.basis[r]] = t.rhs(r).clone();
        }
    }
    let value = problem
        .objective
        .iter()
        .fold(F::zero(), |acc, (j, v)| acc.add(&v.mul(&x[*j])));
    Ok(Outcome::Optimal { x, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ratio;

    #[test]
    fn small_float_lp() {
        // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6
        let mut p = Problem::<f64>::new(2);
        p.objective = vec![(0, -1.0), (1, -1.0)];
        p.add(vec![(0, 1.0), (1, 2.0)], Relation::Le, 4.0);
        p.add(vec![(0, 3.0), (1, 1.0)], Relation::Le, 6.0);
        match solve(&p, 100).unwrap() {
            Outcome::Optimal { x, value } => {
                assert!((x[0] - 1.6).abs() < 1e-12 && (x[1] - 1.2).abs() < 1e-12);
                assert!((value + 2.8).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exact_equalities() {
        // x + y = 1, x - y >= 1/3, min y
        let mut p = Problem::<BigRational>::new(2);
        p.objective = vec![(1, ratio(1, 1))];
        p.add(vec![(0, ratio(1, 1)), (1, ratio(1, 1))], Relation::Eq, ratio(1, 1));
        p.add(vec![(0, ratio(1, 1)), (1, ratio(-1, 1))], Relation::Ge, ratio(1, 3));
        match solve(&p, 100).unwrap() {
            Outcome::Optimal { x, value } => {
                assert_eq!(x[0], ratio(1, 1));
                assert_eq!(value, ratio(0, 1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = Problem::<f64>::new(1);
        p.add(vec![(0, 1.0)], Relation::Ge, 2.0);
        p.add(vec![(0, 1.0)], Relation::Le, 1.0);
        assert!(matches!(solve(&p, 100).unwrap(), Outcome::Infeasible));

        let mut p = Problem::<f64>::new(1);
        p.objective = vec![(0, -1.0)];
        p.add(vec![(0, 1.0)], Relation::Ge, 2.0);
        assert!(matches!(solve(&p, 100).unwrap(), Outcome::Unbounded));
    }

    #[test]
    fn negative_rhs_equality() {
        let mut p = Problem::<f64>::new(2);
        p.objective = vec![(0, 1.0)];
        p.add(vec![(0, -1.0), (1, -1.0)], Relation::Eq, -3.0);
        match solve(&p, 100).unwrap() {
            Outcome::Optimal { x, .. } => assert!((x[1] - 3.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }
}
