//! Cell sets in the `M × M` message-pair grid: diagonal and rectangle
//! detection, extremal avoiding sets, and the list-size functions `g`, `f`.
//!
//! Coordinates are 1-based in the public API.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::binomial;

/// Largest grid side supported by the bitmask representation.
pub const MAX_SIDE: usize = 64;
pub const DEFAULT_BUDGET: u64 = 50_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CombError {
    #[error("cell ({row}, {col}) outside [1, {m}]²")]
    OutOfRange { row: usize, col: usize, m: usize },
    #[error("duplicate cell ({row}, {col})")]
    Duplicate { row: usize, col: usize },
    #[error("grid side must be in 1..={MAX_SIDE}, got {0}")]
    BadSide(usize),
    #[error("parameter must be positive")]
    NonPositive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSet {
    m: usize,
    cells: Vec<(usize, usize)>,
}

impl CellSet {
    pub fn new(m: usize, mut cells: Vec<(usize, usize)>) -> Result<Self, CombError> {
        if m == 0 || m > MAX_SIDE {
            return Err(CombError::BadSide(m));
        }
        cells.sort_unstable();
        for w in cells.windows(2) {
            if w[0] == w[1] {
                return Err(CombError::Duplicate { row: w[0].0, col: w[0].1 });
            }
        }
        if let Some(&(row, col)) = cells
            .iter()
            .find(|(r, c)| *r == 0 || *c == 0 || *r > m || *c > m)
        {
            return Err(CombError::OutOfRange { row, col, m });
        }
        Ok(CellSet { m, cells })
    }

    pub fn side(&self) -> usize {
        self.m
    }

    /// Sorted cells.
    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Distinct rows `I_K`, ascending.
    pub fn rows(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cells.iter().map(|c| c.0).collect();
        r.dedup();
        r
    }

    /// Distinct columns `J_K`, ascending.
    pub fn cols(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self.cells.iter().map(|c| c.1).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    fn masks(&self) -> Vec<u64> {
        let mut rows = vec![0u64; self.m];
        for &(r, c) in &self.cells {
            rows[r - 1] |= 1 << (c - 1);
        }
        rows
    }
}

/// Size of a maximum matching between rows and columns.
fn matching_size(rows: &[u64], m: usize) -> usize {
    fn augment(r: usize, rows: &[u64], seen: &mut u64, col_owner: &mut [usize]) -> bool {
        let mut avail = rows[r] & !*seen;
        while avail != 0 {
            let c = avail.trailing_zeros() as usize;
            avail &= avail - 1;
            *seen |= 1 << c;
            if col_owner[c] == usize::MAX || augment(col_owner[c], rows, seen, col_owner) {
                col_owner[c] = r;
                return true;
            }
        }
        false
    }
    let mut col_owner = vec![usize::MAX; m];
    let mut size = 0;
    for r in 0..rows.len() {
        if rows[r] != 0 {
            let mut seen = 0u64;
            if augment(r, rows, &mut seen, &mut col_owner) {
                size += 1;
            }
        }
    }
    size
}

fn has_rectangle(rows: &[u64], a: usize) -> bool {
    fn rec(rows: &[u64], a: usize, start: usize, depth: usize, common: u64) -> bool {
        for r in start..rows.len() {
            let next = common & rows[r];
            if next == 0 {
                continue;
            }
            if (depth + 1) * next.count_ones() as usize >= a {
                return true;
            }
            if depth + 1 < a && rec(rows, a, r + 1, depth + 1, next) {
                return true;
            }
        }
        false
    }
    rec(rows, a, 0, 0, u64::MAX)
}

/// Some `A` cells with pairwise distinct rows and pairwise distinct columns.
pub fn contains_diagonal(k: &CellSet, a: usize) -> bool {
    matching_size(&k.masks(), k.m) >= a
}

/// Some full product `I × J ⊆ K` with `|I|·|J| ≥ A`.
pub fn contains_rectangle(k: &CellSet, a: usize) -> bool {
    has_rectangle(&k.masks(), a)
}

fn avoids(rows: &[u64], m: usize, a: usize) -> bool {
    matching_size(rows, m) < a && !has_rectangle(rows, a)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvoidingResult {
    pub a: usize,
    pub m: usize,
    pub size: usize,
    pub witness: CellSet,
    /// The search finished or hit the `(A−1)²` cap; otherwise `size` is a lower bound.
    pub exact: bool,
    pub nodes: u64,
}

struct Search {
    m: usize,
    a: usize,
    cap: usize,
    budget: u64,
    nodes: u64,
    rows: Vec<u64>,
    col_count: Vec<usize>,
    cur: Vec<(usize, usize)>,
    best: Vec<(usize, usize)>,
    aborted: bool,
}

impl Search {
    fn done(&self) -> bool {
        self.best.len() >= self.cap || self.aborted
    }

    /// Cells are added in row-major order; used rows form a prefix and
    /// columns appear in first-use order, which covers every set up to
    /// row and column permutation.
    fn dfs(&mut self, last: Option<(usize, usize)>, max_col: usize) {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
            return;
        }
        if self.cur.len() > self.best.len() {
            self.best = self.cur.clone();
            if self.done() {
                return;
            }
        }
        let (last_row, last_col) = match last {
            Some((r, c)) => (r, Some(c)),
            None => (0, None),
        };
        let first_row = last_row;
        let last_allowed_row = if last.is_some() { (last_row + 1).min(self.m - 1) } else { 0 };
        for r in first_row..=last_allowed_row {
            let start_col = match (r == last_row, last_col) {
                (true, Some(c)) => c + 1,
                _ => 0,
            };
            let col_limit = (max_col + 1).min(self.m);
            // row r holds at most A−1 cells
            if r == last_row && last.is_some() && self.rows[r].count_ones() as usize >= self.a - 1 {
                continue;
            }
            for c in start_col..col_limit {
                if self.col_count[c] >= self.a - 1 {
                    continue;
                }
                self.rows[r] |= 1 << c;
                if avoids(&self.rows, self.m, self.a) {
                    self.col_count[c] += 1;
                    self.cur.push((r, c));
                    self.dfs(Some((r, c)), max_col.max(c + 1));
                    self.cur.pop();
                    self.col_count[c] -= 1;
                }
                self.rows[r] &= !(1 << c);
                if self.done() {
                    return;
                }
            }
        }
    }
}

/// Largest `K ⊆ [M]²` with no `A`-diagonal and no `A`-rectangle.
pub fn max_avoiding_set(a: usize, m: usize, budget: u64) -> Result<AvoidingResult, CombError> {
    if a == 0 {
        return Err(CombError::NonPositive);
    }
    if m == 0 || m > MAX_SIDE {
        return Err(CombError::BadSide(m));
    }
    let empty = |nodes| AvoidingResult {
        a,
        m,
        size: 0,
        witness: CellSet { m, cells: vec![] },
        exact: true,
        nodes,
    };
    if a == 1 {
        return Ok(empty(0));
    }
    let mut s = Search {
        m,
        a,
        cap: (a - 1) * (a - 1),
        budget,
        nodes: 0,
        rows: vec![0; m],
        col_count: vec![0; m],
        cur: vec![],
        best: vec![],
        aborted: false,
    };
    s.dfs(None, 0);
    let cells: Vec<(usize, usize)> = s.best.iter().map(|&(r, c)| (r + 1, c + 1)).collect();
    let witness = CellSet::new(m, cells).expect("search cells are in range");
    Ok(AvoidingResult {
        size: witness.len(),
        witness,
        exact: !s.aborted || s.best.len() >= s.cap,
        nodes: s.nodes,
        ..empty(0)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GValue {
    pub a: usize,
    pub lower: usize,
    /// `(A−1)² + 1`.
    pub upper: usize,
    pub exact: bool,
    /// Avoiding set of size `lower − 1`.
    pub witness: CellSet,
    pub m_searched: usize,
}

pub fn g_upper_bound(a: usize) -> usize {
    (a - 1) * (a - 1) + 1
}

/// `g(A)` from searches over `M ≤ m_max`, bracketed by the universal bound.
pub fn g_of(a: usize, m_max: usize, budget: u64) -> Result<GValue, CombError> {
    if a == 0 {
        return Err(CombError::NonPositive);
    }
    if m_max == 0 || m_max > MAX_SIDE {
        return Err(CombError::BadSide(m_max));
    }
    let upper = g_upper_bound(a);
    let mut best: Option<AvoidingResult> = None;
    let mut m_searched = 0;
    for m in 1..=m_max {
        let r = max_avoiding_set(a, m, budget)?;
        m_searched = m;
        if best.as_ref().is_none_or(|b| r.size > b.size) {
            best = Some(r);
        }
        if best.as_ref().unwrap().size + 1 >= upper {
            break;
        }
    }
    let best = best.expect("m_max ≥ 1");
    let lower = (best.size + 1).max(a);
    assert!(lower <= upper, "g({a}) lower bound {lower} exceeds {upper}");
    Ok(GValue {
        a,
        lower,
        upper,
        // beyond m_max only the universal bound closes the bracket
        exact: lower == upper,
        witness: best.witness,
        m_searched,
    })
}

impl GValue {
    pub fn value(&self) -> Option<usize> {
        self.exact.then_some(self.lower)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FValue {
    pub u: usize,
    pub lower: usize,
    /// `(u+1)²`.
    pub upper: usize,
    pub exact: bool,
}

/// `f(u) = g(u+2) − 1`.
pub fn f_of(u: usize, m_max: usize, budget: u64) -> Result<FValue, CombError> {
    let g = g_of(u + 2, m_max, budget)?;
    let upper = (u + 1) * (u + 1);
    assert!(g.upper - 1 == upper);
    Ok(FValue {
        u,
        lower: g.lower - 1,
        upper,
        exact: g.exact,
    })
}

/// Visit every `R`-subset of `[M]²` as per-row column masks.
pub fn for_each_subset(m: usize, r: usize, mut visit: impl FnMut(&[u64]) -> bool) {
    fn rec(
        m: usize,
        left: usize,
        next: usize,
        rows: &mut [u64],
        visit: &mut dyn FnMut(&[u64]) -> bool,
    ) -> bool {
        if left == 0 {
            return visit(rows);
        }
        for cell in next..=(m * m - left) {
            rows[cell / m] |= 1 << (cell % m);
            let go = rec(m, left - 1, cell + 1, rows, visit);
            rows[cell / m] &= !(1 << (cell % m));
            if !go {
                return false;
            }
        }
        true
    }
    if r > m * m {
        return;
    }
    let mut rows = vec![0u64; m];
    rec(m, r, 0, &mut rows, &mut visit);
}

/// Number of `R`-subsets of `[M]²` with no `A`-diagonal and no `A`-rectangle.
pub fn count_avoiding(a: usize, r: usize, m: usize) -> u128 {
    assert!(m <= 8, "exhaustive count limited to M ≤ 8");
    let mut n: u128 = 0;
    for_each_subset(m, r, |rows| {
        if avoids(rows, m, a) {
            n += 1;
        }
        true
    });
    n
}

/// Number of `R`-subsets of `[M]²`.
pub fn subset_count(m: usize, r: usize) -> u128 {
    binomial((m * m) as u64, r as u64)
}

/// Whether a raw row-mask configuration avoids both patterns.
pub fn masks_avoid(rows: &[u64], a: usize) -> bool {
    avoids(rows, rows.len().max(1), a)
}
