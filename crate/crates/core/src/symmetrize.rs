//! Symmetrizability of an AVMAC.
//!
//! A channel is `u`-symmetrizable when a conditional state distribution makes
//! the averaged output law invariant under permuting `u + 1` input pairs
//! (diagonal condition), or under separate permutations of `a + 1` inputs of
//! the first sender and `b + 1` inputs of the second with
//! `(a + 1)(b + 1) ≥ u + 1` (rectangle condition).
//!
//! Both conditions are linear in the unknown table. We solve the min-max
//! program `min t` subject to `|LHS − RHS| ≤ t` over tables stored on
//! multisets of their tail arguments, imposing only the transposition of the
//! first two positions. Tail symmetry plus that one transposition generates
//! every permutation, and averaging any table over tail permutations does
//! not increase its worst residual, so the optimum equals the best achievable
//! worst-case residual over all tables. [`verify_certificate`] audits the
//! result against the full permutation set.

use std::collections::HashMap;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{Avmac, Dist};
use crate::lp::{self, Field, LpError, Outcome, Problem, Relation};
use crate::util::{digits, multiset_count, multisets, permutations, pow_sat, undigits};

/// Default cap on `|X·Y|^u · |S|` (diagonal) or `|X|^a |Y|^b |S|` (rectangle).
pub const DEFAULT_VAR_LIMIT: usize = 200_000;
/// Default feasibility tolerance on the worst residual.
pub const DEFAULT_TOL: f64 = 1e-9;
const TABLEAU_LIMIT: usize = 40_000_000;
const EXACT_VAR_LIMIT: usize = 600;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymError {
    #[error("problem has {size} variables, limit is {limit}")]
    ProblemTooLarge { size: usize, limit: usize },
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl From<LpError> for SymError {
    fn from(e: LpError) -> Self {
        SymError::SolverFailure(e.to_string())
    }
}

/// How the feasibility program is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    /// Exact rationals when the channel is exact and the program is small.
    #[default]
    Auto,
    Float,
    Exact,
}

#[derive(Debug, Clone, Copy)]
pub struct SymConfig {
    pub tol: f64,
    pub var_limit: usize,
    pub mode: SolveMode,
}

impl Default for SymConfig {
    fn default() -> Self {
        SymConfig {
            tol: DEFAULT_TOL,
            var_limit: DEFAULT_VAR_LIMIT,
            mode: SolveMode::Auto,
        }
    }
}

impl SymConfig {
    pub fn with_tol(tol: f64) -> Self {
        SymConfig {
            tol,
            ..Default::default()
        }
    }
}

/// `U(s | (x₂,y₂), …, (x_{u+1},y_{u+1}))`, one row per ordered `u`-tuple of
/// input pairs. Pair `(x, y)` has index `x·|Y| + y`; rows are indexed by the
/// tuple read as a base-`|X·Y|` number, first argument most significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizerDiag {
    pub u: usize,
    pub x_size: usize,
    pub y_size: usize,
    pub s_size: usize,
    pub table: Vec<Vec<f64>>,
}

/// `U(s | x₂…x_{a+1}, y₂…y_{b+1})`; row index is the x-tuple (base `|X|`)
/// followed by the y-tuple (base `|Y|`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizerRect {
    pub a: usize,
    pub b: usize,
    pub x_size: usize,
    pub y_size: usize,
    pub s_size: usize,
    pub table: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Certificate {
    Diag(SymmetrizerDiag),
    Rect(SymmetrizerRect),
}

impl SymmetrizerDiag {
    pub fn pairs(&self) -> usize {
        self.x_size * self.y_size
    }

    /// Row for an ordered tuple of pair indices.
    pub fn row(&self, tail: &[usize]) -> &[f64] {
        &self.table[undigits(tail, self.pairs())]
    }

    /// Build from a rule mapping a tail tuple of pair indices to a state law.
    pub fn from_fn<F>(u: usize, x_size: usize, y_size: usize, s_size: usize, f: F) -> Self
    where
        F: Fn(&[usize]) -> Vec<f64>,
    {
        let pairs = x_size * y_size;
        let rows = pow_sat(pairs, u);
        let table = (0..rows).map(|r| f(&digits(r, pairs, u))).collect();
        SymmetrizerDiag {
            u,
            x_size,
            y_size,
            s_size,
            table,
        }
    }

    /// Average every row over the permutations of its tail arguments.
    pub fn symmetrized(&self) -> Self {
        let pairs = self.pairs();
        let perms = permutations(self.u);
        let table = (0..self.table.len())
            .map(|r| {
                let tail = digits(r, pairs, self.u);
                let mut acc = vec![0.0; self.s_size];
                for p in &perms {
                    let permuted: Vec<usize> = p.iter().map(|&i| tail[i]).collect();
                    for (a, v) in acc.iter_mut().zip(self.row(&permuted)) {
                        *a += v;
                    }
                }
                acc.iter().map(|v| v / perms.len() as f64).collect()
            })
            .collect();
        SymmetrizerDiag {
            table,
            ..self.clone()
        }
    }
}

impl SymmetrizerRect {
    pub fn row(&self, xs: &[usize], ys: &[usize]) -> &[f64] {
        let xi = undigits(xs, self.x_size);
        let yi = undigits(ys, self.y_size);
        &self.table[xi * pow_sat(self.y_size, self.b) + yi]
    }

    pub fn from_fn<F>(a: usize, b: usize, x_size: usize, y_size: usize, s_size: usize, f: F) -> Self
    where
        F: Fn(&[usize], &[usize]) -> Vec<f64>,
    {
        let ny = pow_sat(y_size, b);
        let rows = pow_sat(x_size, a) * ny;
        let table = (0..rows)
            .map(|r| f(&digits(r / ny, x_size, a), &digits(r % ny, y_size, b)))
            .collect();
        SymmetrizerRect {
            a,
            b,
            x_size,
            y_size,
            s_size,
            table,
        }
    }
}

/// Outcome of one feasibility check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub feasible: bool,
    /// Optimal worst-case residual of the reduced program.
    pub min_residual: f64,
    /// Full-permutation residual of the returned certificate.
    pub residual: Option<f64>,
    pub exact: bool,
    pub certificate: Option<Certificate>,
}

// ---------------------------------------------------------------------------
// Program construction

struct Layout {
    /// multiset (canonical key) -> block index
    blocks: HashMap<Vec<usize>, usize>,
    s_size: usize,
}

impl Layout {
    fn var(&self, key: &[usize], s: usize) -> usize {
        self.blocks[key] * self.s_size + s
    }
    fn block_count(&self) -> usize {
        self.blocks.len()
    }
}

fn sorted_with(extra: usize, rest: &[usize]) -> Vec<usize> {
    let mut v = Vec::with_capacity(rest.len() + 1);
    v.push(extra);
    v.extend_from_slice(rest);
    v.sort_unstable();
    v
}

fn push_minmax_rows<F: Field>(p: &mut Problem<F>, t_var: usize, coeffs: Vec<(usize, F)>) {
    if coeffs.iter().all(|(_, c)| c.sign().is_eq()) {
        return;
    }
    let neg: Vec<(usize, F)> = coeffs
        .iter()
        .map(|(j, c)| (*j, F::zero().sub(c)))
        .chain(std::iter::once((t_var, F::zero().sub(&F::one()))))
        .collect();
    let mut pos = coeffs;
    pos.push((t_var, F::zero().sub(&F::one())));
    p.add(pos, Relation::Le, F::zero());
    p.add(neg, Relation::Le, F::zero());
}

fn finish_program<F: Field>(p: &mut Problem<F>, layout: &Layout, t_var: usize) {
    for b in 0..layout.block_count() {
        let coeffs = (0..layout.s_size)
            .map(|s| (b * layout.s_size + s, F::one()))
            .collect();
        p.add(coeffs, Relation::Eq, F::one());
    }
    p.objective = vec![(t_var, F::one())];
}

fn diag_program<F: Field>(
    ch: &Avmac,
    w: &dyn Fn(usize, usize, usize, usize) -> F,
    u: usize,
) -> (Problem<F>, Layout) {
    let sz = ch.sizes();
    let pairs = sz.x * sz.y;
    let tails = multisets(pairs, u);
    let blocks: HashMap<Vec<usize>, usize> =
        tails.into_iter().enumerate().map(|(i, m)| (m, i)).collect();
    let layout = Layout {
        blocks,
        s_size: sz.s,
    };
    let t_var = layout.block_count() * sz.s;
    let mut p = Problem::new(t_var + 1);
    let rests = multisets(pairs, u - 1);
    for p1 in 0..pairs {
        for p2 in p1 + 1..pairs {
            let (x1, y1) = (p1 / sz.y, p1 % sz.y);
            let (x2, y2) = (p2 / sz.y, p2 % sz.y);
            for rest in &rests {
                let k_left = sorted_with(p2, rest);
                let k_right = sorted_with(p1, rest);
                for z in 0..sz.z {
                    let mut coeffs = Vec::with_capacity(2 * sz.s);
                    for s in 0..sz.s {
                        coeffs.push((layout.var(&k_left, s), w(x1, y1, s, z)));
                        coeffs.push((layout.var(&k_right, s), F::zero().sub(&w(x2, y2, s, z))));
                    }
                    push_minmax_rows(&mut p, t_var, coeffs);
                }
            }
        }
    }
    finish_program(&mut p, &layout, t_var);
    (p, layout)
}

/// Rect blocks are keyed by the x-multiset followed by the y-multiset, with
/// y symbols offset by `|X|` so the two parts cannot collide.
fn rect_key(xs: &[usize], ys: &[usize], x_size: usize) -> Vec<usize> {
    let mut k: Vec<usize> = xs.to_vec();
    k.sort_unstable();
    let mut yk: Vec<usize> = ys.iter().map(|y| y + x_size).collect();
    yk.sort_unstable();
    k.extend(yk);
    k
}

fn rect_program<F: Field>(
    ch: &Avmac,
    w: &dyn Fn(usize, usize, usize, usize) -> F,
    a: usize,
    b: usize,
) -> (Problem<F>, Layout) {
    let sz = ch.sizes();
    let xms = multisets(sz.x, a);
    let yms = multisets(sz.y, b);
    let mut blocks = HashMap::new();
    for xm in &xms {
        for ym in &yms {
            let key = rect_key(xm, ym, sz.x);
            let next = blocks.len();
            blocks.insert(key, next);
        }
    }
    let layout = Layout {
        blocks,
        s_size: sz.s,
    };
    let t_var = layout.block_count() * sz.s;
    let mut p = Problem::new(t_var + 1);
    if a >= 1 {
        let rests = multisets(sz.x, a - 1);
        for x1 in 0..sz.x {
            for x2 in x1 + 1..sz.x {
                for rest in &rests {
                    for y1 in 0..sz.y {
                        for ym in &yms {
                            let kl = rect_key(&sorted_with(x2, rest), ym, sz.x);
                            let kr = rect_key(&sorted_with(x1, rest), ym, sz.x);
                            for z in 0..sz.z {
                                let mut coeffs = Vec::with_capacity(2 * sz.s);
                                for s in 0..sz.s {
                                    coeffs.push((layout.var(&kl, s), w(x1, y1, s, z)));
                                    coeffs.push((
                                        layout.var(&kr, s),
                                        F::zero().sub(&w(x2, y1, s, z)),
                                    ));
                                }
                                push_minmax_rows(&mut p, t_var, coeffs);
                            }
                        }
                    }
                }
            }
        }
    }
    if b >= 1 {
        let rests = multisets(sz.y, b - 1);
        for y1 in 0..sz.y {
            for y2 in y1 + 1..sz.y {
                for rest in &rests {
                    for x1 in 0..sz.x {
                        for xm in &xms {
                            let kl = rect_key(xm, &sorted_with(y2, rest), sz.x);
                            let kr = rect_key(xm, &sorted_with(y1, rest), sz.x);
                            for z in 0..sz.z {
                                let mut coeffs = Vec::with_capacity(2 * sz.s);
                                for s in 0..sz.s {
                                    coeffs.push((layout.var(&kl, s), w(x1, y1, s, z)));
                                    coeffs.push((
                                        layout.var(&kr, s),
                                        F::zero().sub(&w(x1, y2, s, z)),
                                    ));
                                }
                                push_minmax_rows(&mut p, t_var, coeffs);
                            }
                        }
                    }
                }
            }
        }
    }
    finish_program(&mut p, &layout, t_var);
    (p, layout)
}

struct Solved {
    min_residual: f64,
    zero_exactly: Option<bool>,
    /// block-major solution values, `blocks × |S|`
    values: Vec<f64>,
}

fn run_program<F: Field>(p: &Problem<F>) -> Result<(F, Vec<f64>), SymError> {
    match lp::solve(p, MAX_PIVOTS)? {
        Outcome::Optimal { x, value } => {
            let vals = x[..p.num_vars - 1].iter().map(Field::to_f64).collect();
            Ok((value, vals))
        }
        Outcome::Infeasible => Err(SymError::SolverFailure(
            "min-max program reported infeasible".into(),
        )),
        Outcome::Unbounded => Err(SymError::SolverFailure(
            "min-max program reported unbounded".into(),
        )),
    }
}

fn solve_program(
    ch: &Avmac,
    cfg: &SymConfig,
    build_f: &dyn Fn(&dyn Fn(usize, usize, usize, usize) -> f64) -> (Problem<f64>, Layout),
    build_q: &dyn Fn(
        &dyn Fn(usize, usize, usize, usize) -> BigRational,
    ) -> (Problem<BigRational>, Layout),
    reduced_vars: usize,
) -> Result<(Solved, Layout), SymError> {
    let use_exact = match cfg.mode {
        SolveMode::Float => false,
        SolveMode::Exact => {
            if !ch.is_exact() {
                return Err(SymError::InvalidArgument(
                    "exact mode needs a channel with rational entries".into(),
                ));
            }
            true
        }
        SolveMode::Auto => ch.is_exact() && reduced_vars <= EXACT_VAR_LIMIT,
    };
    if use_exact {
        let exact = ch.exact_kernel().expect("checked exact");
        let w = |x: usize, y: usize, s: usize, z: usize| exact[ch.index(x, y, s, z)].clone();
        let (p, layout) = build_q(&w);
        check_tableau(&p)?;
        let (value, values) = run_program(&p)?;
        Ok((
            Solved {
                min_residual: Field::to_f64(&value),
                zero_exactly: Some(value.sign().is_eq()),
                values,
            },
            layout,
        ))
    } else {
        let w = |x: usize, y: usize, s: usize, z: usize| ch.w(x, y, s, z);
        let (p, layout) = build_f(&w);
        check_tableau(&p)?;
        let (value, values) = run_program(&p)?;
        Ok((
            Solved {
                min_residual: value.max(0.0),
                zero_exactly: None,
                values,
            },
            layout,
        ))
    }
}

fn check_tableau<F: Field>(p: &Problem<F>) -> Result<(), SymError> {
    let size = p.tableau_size();
    if size > TABLEAU_LIMIT {
        return Err(SymError::ProblemTooLarge {
            size,
            limit: TABLEAU_LIMIT,
        });
    }
    Ok(())
}

fn clean_row(raw: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = raw.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total > 0.0 {
        clipped.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / raw.len() as f64; raw.len()]
    }
}

fn decide(
    ch: &Avmac,
    cfg: &SymConfig,
    solved: Solved,
    cert: Certificate,
) -> Result<CheckResult, SymError> {
    let residual = verify_certificate(ch, &cert)?;
    let exact = solved.zero_exactly.is_some();
    let feasible = match solved.zero_exactly {
        Some(zero) => zero,
        None => {
            if solved.min_residual <= cfg.tol && residual > cfg.tol {
                return Err(SymError::SolverFailure(format!(
                    "program optimum {:.3e} within tolerance but certificate residual {:.3e} is not",
                    solved.min_residual, residual
                )));
            }
            residual <= cfg.tol
        }
    };
    Ok(CheckResult {
        feasible,
        min_residual: solved.min_residual,
        residual: feasible.then_some(residual),
        exact,
        certificate: feasible.then_some(cert),
    })
}

/// Decide the diagonal condition for `u` pairs of tail arguments.
pub fn check_diag_symmetrizable(
    ch: &Avmac,
    u: usize,
    cfg: &SymConfig,
) -> Result<CheckResult, SymError> {
    if u == 0 {
        return Err(SymError::InvalidArgument("u must be at least 1".into()));
    }
    let sz = ch.sizes();
    let pairs = sz.x * sz.y;
    let size = pow_sat(pairs, u).saturating_mul(sz.s);
    if size > cfg.var_limit {
        return Err(SymError::ProblemTooLarge {
            size,
            limit: cfg.var_limit,
        });
    }
    let reduced = multiset_count(pairs, u) as usize * sz.s;
    let (solved, layout) = solve_program(
        ch,
        cfg,
        &|w| diag_program(ch, w, u),
        &|w| diag_program(ch, w, u),
        reduced,
    )?;
    let cert = SymmetrizerDiag::from_fn(u, sz.x, sz.y, sz.s, |tail| {
        let mut key = tail.to_vec();
        key.sort_unstable();
        let start = layout.var(&key, 0);
        clean_row(&solved.values[start..start + sz.s])
    });
    decide(ch, cfg, solved, Certificate::Diag(cert))
}

/// Decide the rectangle condition for tail sizes `(a, b)`.
pub fn check_rect_symmetrizable(
    ch: &Avmac,
    a: usize,
    b: usize,
    cfg: &SymConfig,
) -> Result<CheckResult, SymError> {
    if a + b == 0 {
        return Err(SymError::InvalidArgument("need a + b >= 1".into()));
    }
    let sz = ch.sizes();
    let size = pow_sat(sz.x, a)
        .saturating_mul(pow_sat(sz.y, b))
        .saturating_mul(sz.s);
    if size > cfg.var_limit {
        return Err(SymError::ProblemTooLarge {
            size,
            limit: cfg.var_limit,
        });
    }
    let reduced = (multiset_count(sz.x, a) * multiset_count(sz.y, b)) as usize * sz.s;
    let (solved, layout) = solve_program(
        ch,
        cfg,
        &|w| rect_program(ch, w, a, b),
        &|w| rect_program(ch, w, a, b),
        reduced,
    )?;
    let cert = SymmetrizerRect::from_fn(a, b, sz.x, sz.y, sz.s, |xs, ys| {
        let start = layout.var(&rect_key(xs, ys, sz.x), 0);
        clean_row(&solved.values[start..start + sz.s])
    });
    decide(ch, cfg, solved, Certificate::Rect(cert))
}

// ---------------------------------------------------------------------------
// Verification

fn check_rows(table: &[Vec<f64>], s_size: usize) -> Result<(), SymError> {
    for (i, row) in table.iter().enumerate() {
        if row.len() != s_size {
            return Err(SymError::DimensionMismatch(format!(
                "row {i} has {} states, expected {s_size}",
                row.len()
            )));
        }
    }
    Ok(())
}

/// Worst `|LHS − RHS|` over every argument tuple, output symbol and
/// permutation. Independent of any solver.
pub fn verify_certificate(ch: &Avmac, cert: &Certificate) -> Result<f64, SymError> {
    let sz = ch.sizes();
    match cert {
        Certificate::Diag(c) => {
            if (c.x_size, c.y_size, c.s_size) != (sz.x, sz.y, sz.s)
                || c.table.len() != pow_sat(sz.x * sz.y, c.u)
            {
                return Err(SymError::DimensionMismatch("certificate does not match channel".into()));
            }
            check_rows(&c.table, sz.s)?;
            let pairs = sz.x * sz.y;
            let k = c.u + 1;
            let perms = permutations(k);
            let total = pow_sat(pairs, k);
            let worst = (0..total)
                .into_par_iter()
                .map(|idx| {
                    let tuple = digits(idx, pairs, k);
                    let eval = |perm: &[usize]| -> Vec<f64> {
                        let first = tuple[perm[0]];
                        let tail: Vec<usize> = perm[1..].iter().map(|&i| tuple[i]).collect();
                        let row = c.row(&tail);
                        let (x, y) = (first / sz.y, first % sz.y);
                        (0..sz.z)
                            .map(|z| (0..sz.s).map(|s| ch.w(x, y, s, z) * row[s]).sum())
                            .collect()
                    };
                    let base = eval(&perms[0]);
                    let mut worst = 0.0f64;
                    for perm in &perms[1..] {
                        for (a, b) in base.iter().zip(eval(perm)) {
                            worst = worst.max((a - b).abs());
                        }
                    }
                    worst
                })
                .reduce(|| 0.0, f64::max);
            Ok(worst)
        }
        Certificate::Rect(c) => {
            if (c.x_size, c.y_size, c.s_size) != (sz.x, sz.y, sz.s)
                || c.table.len() != pow_sat(sz.x, c.a) * pow_sat(sz.y, c.b)
            {
                return Err(SymError::DimensionMismatch("certificate does not match channel".into()));
            }
            check_rows(&c.table, sz.s)?;
            let (ka, kb) = (c.a + 1, c.b + 1);
            let xperms = permutations(ka);
            let yperms = permutations(kb);
            let ny = pow_sat(sz.y, kb);
            let total = pow_sat(sz.x, ka) * ny;
            let worst = (0..total)
                .into_par_iter()
                .map(|idx| {
                    let xs = digits(idx / ny, sz.x, ka);
                    let ys = digits(idx % ny, sz.y, kb);
                    let eval = |pi: &[usize], sigma: &[usize]| -> Vec<f64> {
                        let xt: Vec<usize> = pi[1..].iter().map(|&i| xs[i]).collect();
                        let yt: Vec<usize> = sigma[1..].iter().map(|&i| ys[i]).collect();
                        let row = c.row(&xt, &yt);
                        let (x, y) = (xs[pi[0]], ys[sigma[0]]);
                        (0..sz.z)
                            .map(|z| (0..sz.s).map(|s| ch.w(x, y, s, z) * row[s]).sum())
                            .collect()
                    };
                    let base = eval(&xperms[0], &yperms[0]);
                    let mut worst = 0.0f64;
                    for pi in &xperms {
                        for sigma in &yperms {
                            for (a, b) in base.iter().zip(eval(pi, sigma)) {
                                worst = worst.max((a - b).abs());
                            }
                        }
                    }
                    worst
                })
                .reduce(|| 0.0, f64::max);
            Ok(worst)
        }
    }
}

// ---------------------------------------------------------------------------
// Index

/// `(a, b)` pairs minimal in the product order with `(a+1)(b+1) ≥ u+1`.
pub fn minimal_rect_pairs(u: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    let mut best_b = usize::MAX;
    for a in 0..=u {
        let b = (u + 1).div_ceil(a + 1) - 1;
        if b < best_b {
            out.push((a, b));
            best_b = b;
        }
    }
    out.retain(|&(a, b)| a + b >= 1);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub feasible: Option<bool>,
    pub min_residual: Option<f64>,
    pub residual: Option<f64>,
    pub exact: bool,
    pub error: Option<String>,
    pub certificate: Option<Certificate>,
}

impl CheckEntry {
    fn from_result(r: Result<CheckResult, SymError>) -> Self {
        match r {
            Ok(c) => CheckEntry {
                feasible: Some(c.feasible),
                min_residual: Some(c.min_residual),
                residual: c.residual,
                exact: c.exact,
                error: None,
                certificate: c.certificate,
            },
            Err(e) => CheckEntry {
                feasible: None,
                min_residual: None,
                residual: None,
                exact: false,
                error: Some(e.to_string()),
                certificate: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectEntry {
    pub a: usize,
    pub b: usize,
    pub check: CheckEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UVerdict {
    pub u: usize,
    pub diag: CheckEntry,
    pub rect: Vec<RectEntry>,
    /// Some check succeeded.
    pub symmetrizable: bool,
    /// Every check either failed to solve or was decided.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymReport {
    pub u_max: usize,
    pub tol: f64,
    pub verdicts: Vec<UVerdict>,
    /// Largest `u ≤ u_max` found symmetrizable (0 by convention).
    pub index: usize,
    /// Set when the channel is still symmetrizable at `u_max`.
    pub index_is_lower_bound: bool,
    /// `u`-symmetrizable implies `(u−1)`-symmetrizable across the report.
    pub monotone: bool,
}

impl SymReport {
    /// A verified certificate at level `u`, diagonal preferred.
    pub fn certificate_at(&self, u: usize) -> Option<&Certificate> {
        let v = self.verdicts.iter().find(|v| v.u == u)?;
        v.diag
            .certificate
            .as_ref()
            .or_else(|| v.rect.iter().find_map(|r| r.check.certificate.as_ref()))
    }
}

#[derive(Clone, Copy)]
enum Job {
    Diag(usize),
    Rect(usize, usize),
}

/// Compute `U(G)` up to `u_max`, recording every sub-check.
pub fn symmetrizability_index(ch: &Avmac, u_max: usize, cfg: &SymConfig) -> SymReport {
    let mut jobs = Vec::new();
    for u in 1..=u_max {
        jobs.push(Job::Diag(u));
        for (a, b) in minimal_rect_pairs(u) {
            jobs.push(Job::Rect(a, b));
        }
    }
    let results: Vec<CheckEntry> = jobs
        .par_iter()
        .map(|job| match *job {
            Job::Diag(u) => CheckEntry::from_result(check_diag_symmetrizable(ch, u, cfg)),
            Job::Rect(a, b) => CheckEntry::from_result(check_rect_symmetrizable(ch, a, b, cfg)),
        })
        .collect();
    let mut verdicts: Vec<UVerdict> = Vec::new();
    for (job, entry) in jobs.into_iter().zip(results) {
        match job {
            Job::Diag(u) => verdicts.push(UVerdict {
                u,
                diag: entry,
                rect: Vec::new(),
                symmetrizable: false,
                complete: true,
            }),
            Job::Rect(a, b) => verdicts
                .last_mut()
                .expect("diag job precedes rect jobs")
                .rect
                .push(RectEntry { a, b, check: entry }),
        }
    }
    for v in verdicts.iter_mut() {
        let entries = std::iter::once(&v.diag).chain(v.rect.iter().map(|r| &r.check));
        let mut any = false;
        let mut complete = true;
        for e in entries {
            match e.feasible {
                Some(true) => any = true,
                Some(false) => {}
                None => complete = false,
            }
        }
        v.symmetrizable = any;
        v.complete = complete;
    }
    let index = verdicts
        .iter()
        .filter(|v| v.symmetrizable)
        .map(|v| v.u)
        .max()
        .unwrap_or(0);
    let monotone = verdicts
        .iter()
        .filter(|v| v.u <= index)
        .all(|v| v.symmetrizable || !v.complete);
    SymReport {
        u_max,
        tol: cfg.tol,
        verdicts,
        index,
        index_is_lower_bound: u_max > 0 && index == u_max,
        monotone,
    }
}

// ---------------------------------------------------------------------------
// Certificate files

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    #[serde(flatten)]
    pub certificate: Certificate,
    pub residual: f64,
    pub tol: f64,
}

// ---------------------------------------------------------------------------
// Gap evaluator

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapMode {
    /// `U + 2` tables over `X^{U+1} × Y^{U+1} × S`.
    Diag,
    /// `(a+1)(b+1)` tables over `X^a × Y^b × S`, ordered row-major in `(i, j)`.
    Rect { a: usize, b: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapValue {
    pub value: f64,
    /// Some input probability is zero, so no positive `α` bounds it.
    pub alpha_violated: bool,
}

/// Largest pairwise variational distance between the mixtures
/// `P(x_i)Q(y_j) Σ_s W(z|x_i,y_j,s) U_ij(x_{−i}, y_{−j}, s)`.
///
/// Evaluator only: the tables are taken as given.
pub fn lemma_gap_eval(
    ch: &Avmac,
    p: &Dist,
    q: &Dist,
    tables: &[Vec<f64>],
    mode: GapMode,
) -> Result<GapValue, SymError> {
    let sz = ch.sizes();
    if p.len() != sz.x || q.len() != sz.y {
        return Err(SymError::DimensionMismatch("input distributions".into()));
    }
    // roles: (index of the x argument, index of the y argument) per table
    let (kx, ky, roles): (usize, usize, Vec<(usize, usize)>) = match mode {
        GapMode::Diag => {
            let k = tables.len();
            if k < 2 {
                return Err(SymError::DimensionMismatch("need at least two tables".into()));
            }
            (k, k, (0..k).map(|i| (i, i)).collect())
        }
        GapMode::Rect { a, b } => {
            if tables.len() != (a + 1) * (b + 1) {
                return Err(SymError::DimensionMismatch(format!(
                    "expected {} tables",
                    (a + 1) * (b + 1)
                )));
            }
            let roles = (0..=a).flat_map(|i| (0..=b).map(move |j| (i, j))).collect();
            (a + 1, b + 1, roles)
        }
    };
    let expected = pow_sat(sz.x, kx - 1) * pow_sat(sz.y, ky - 1) * sz.s;
    if let Some(t) = tables.iter().find(|t| t.len() != expected) {
        return Err(SymError::DimensionMismatch(format!(
            "table has {} entries, expected {expected}",
            t.len()
        )));
    }
    let nyk = pow_sat(sz.y, ky);
    let cells = pow_sat(sz.x, kx) * nyk;
    let ny_tail = pow_sat(sz.y, ky - 1);
    let mixtures: Vec<Vec<f64>> = roles
        .iter()
        .zip(tables)
        .map(|(&(i, j), table)| {
            let mut out = vec![0.0; cells * sz.z];
            for cell in 0..cells {
                let xs = digits(cell / nyk, sz.x, kx);
                let ys = digits(cell % nyk, sz.y, ky);
                let (x, y) = (xs[i], ys[j]);
                let xt: Vec<usize> = (0..kx).filter(|&k| k != i).map(|k| xs[k]).collect();
                let yt: Vec<usize> = (0..ky).filter(|&k| k != j).map(|k| ys[k]).collect();
                let base = (undigits(&xt, sz.x) * ny_tail + undigits(&yt, sz.y)) * sz.s;
                let weight = p.values()[x] * q.values()[y];
                for z in 0..sz.z {
                    let mix: f64 = (0..sz.s).map(|s| ch.w(x, y, s, z) * table[base + s]).sum();
                    out[cell * sz.z + z] = weight * mix;
                }
            }
            out
        })
        .collect();
    let mut value = 0.0f64;
    for i in 0..mixtures.len() {
        for j in i + 1..mixtures.len() {
            let d: f64 = mixtures[i]
                .iter()
                .zip(&mixtures[j])
                .map(|(a, b)| (a - b).abs())
                .sum();
            value = value.max(d);
        }
    }
    Ok(GapValue {
        value,
        alpha_violated: p.min_prob() <= 0.0 || q.min_prob() <= 0.0,
    })
}
