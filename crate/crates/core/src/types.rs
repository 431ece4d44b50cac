//! Method-of-types utilities. All information quantities are in bits.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TypeError {
    #[error("sequence lengths differ: {0:?}")]
    LengthMismatch(Vec<usize>),
    #[error("empty input")]
    Empty,
    #[error("symbol {symbol} out of range for axis {axis} of size {size}")]
    SymbolOutOfRange { axis: String, symbol: usize, size: usize },
    #[error("shapes differ: {0:?} vs {1:?}")]
    ShapeMismatch(Vec<usize>, Vec<usize>),
    #[error("axis groups overlap or reference a missing axis")]
    BadAxisGroups,
    #[error("invalid table: {0}")]
    InvalidTable(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axis {
    pub name: String,
    pub size: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Axis {
            name: name.into(),
            size,
        }
    }
}

/// A dense joint distribution over a product of finite alphabets.
///
/// The table is row-major with the last axis varying fastest. When built by
/// [`joint_type`] the blocklength is kept in `denominator`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    axes: Vec<Axis>,
    table: Vec<f64>,
    denominator: Option<usize>,
}

const TOTAL_TOL: f64 = 1e-12;

impl JointDist {
    pub fn new(axes: Vec<Axis>, table: Vec<f64>) -> Result<Self, TypeError> {
        let len: usize = axes.iter().map(|a| a.size).product();
        if axes.is_empty() || table.len() != len {
            return Err(TypeError::InvalidTable(format!(
                "{} entries for shape {:?}",
                table.len(),
                axes.iter().map(|a| a.size).collect::<Vec<_>>()
            )));
        }
        if table.iter().any(|p| !(*p >= 0.0)) {
            return Err(TypeError::InvalidTable("negative entry".into()));
        }
        let total: f64 = table.iter().sum();
        if (total - 1.0).abs() > TOTAL_TOL {
            return Err(TypeError::InvalidTable(format!("total mass {total}")));
        }
        Ok(JointDist {
            axes,
            table,
            denominator: None,
        })
    }

    /// Product distribution of independent factors.
    pub fn product(factors: &[JointDist]) -> Result<Self, TypeError> {
        let mut axes = Vec::new();
        let mut table = vec![1.0];
        for f in factors {
            axes.extend(f.axes.iter().cloned());
            let mut next = Vec::with_capacity(table.len() * f.table.len());
            for a in &table {
                for b in &f.table {
                    next.push(a * b);
                }
            }
            table = next;
        }
        if axes.is_empty() {
            return Err(TypeError::Empty);
        }
        Ok(JointDist {
            axes,
            table,
            denominator: None,
        })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.size).collect()
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn denominator(&self) -> Option<usize> {
        self.denominator
    }

    pub fn get(&self, cell: &[usize]) -> f64 {
        self.table[self.flat_index(cell)]
    }

    fn flat_index(&self, cell: &[usize]) -> usize {
        cell.iter()
            .zip(&self.axes)
            .fold(0, |acc, (c, a)| acc * a.size + c)
    }

    /// Marginal on the listed axes, in the listed order.
    pub fn marginal(&self, keep: &[usize]) -> Result<JointDist, TypeError> {
        if keep.iter().any(|&k| k >= self.axes.len())
            || keep.iter().collect::<BTreeSet<_>>().len() != keep.len()
        {
            return Err(TypeError::BadAxisGroups);
        }
        let axes: Vec<Axis> = keep.iter().map(|&k| self.axes[k].clone()).collect();
        let len: usize = axes.iter().map(|a| a.size).product();
        let mut table = vec![0.0; len];
        let mut cell = vec![0usize; self.axes.len()];
        for &p in &self.table {
            if p != 0.0 {
                let idx = keep
                    .iter()
                    .fold(0, |acc, &k| acc * self.axes[k].size + cell[k]);
                table[idx] += p;
            }
            advance(&mut cell, &self.axes);
        }
        Ok(JointDist {
            axes,
            table,
            denominator: self.denominator,
        })
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        entropy_bits(self.table.iter().copied())
    }

    /// Relabel symbols of one axis: old symbol `c` moves to `perm[c]`.
    pub fn relabel(&self, axis: usize, perm: &[usize]) -> JointDist {
        let mut table = vec![0.0; self.table.len()];
        let mut cell = vec![0usize; self.axes.len()];
        for &p in &self.table {
            let mut moved = cell.clone();
            moved[axis] = perm[cell[axis]];
            table[self.flat_index(&moved)] = p;
            advance(&mut cell, &self.axes);
        }
        JointDist {
            axes: self.axes.clone(),
            table,
            denominator: self.denominator,
        }
    }
}

fn advance(cell: &mut [usize], axes: &[Axis]) {
    for k in (0..cell.len()).rev() {
        cell[k] += 1;
        if cell[k] < axes[k].size {
            return;
        }
        cell[k] = 0;
    }
}

/// `-Σ p log₂ p` with `0 log 0 = 0`.
pub fn entropy_bits(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs
        .into_iter()
        .filter(|p| *p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

/// Joint type of aligned sequences; one axis per sequence.
pub fn joint_type(seqs: &[(Axis, &[usize])]) -> Result<JointDist, TypeError> {
    let Some((_, first)) = seqs.first() else {
        return Err(TypeError::Empty);
    };
    let n = first.len();
    if n == 0 {
        return Err(TypeError::Empty);
    }
    if seqs.iter().any(|(_, s)| s.len() != n) {
        return Err(TypeError::LengthMismatch(
            seqs.iter().map(|(_, s)| s.len()).collect(),
        ));
    }
    for (axis, seq) in seqs {
        if let Some(&symbol) = seq.iter().find(|&&v| v >= axis.size) {
            return Err(TypeError::SymbolOutOfRange {
                axis: axis.name.clone(),
                symbol,
                size: axis.size,
            });
        }
    }
    let axes: Vec<Axis> = seqs.iter().map(|(a, _)| a.clone()).collect();
    let len: usize = axes.iter().map(|a| a.size).product();
    let mut counts = vec![0usize; len];
    for t in 0..n {
        let idx = seqs.iter().fold(0, |acc, (a, s)| acc * a.size + s[t]);
        counts[idx] += 1;
    }
    Ok(JointDist {
        axes,
        table: counts.into_iter().map(|c| c as f64 / n as f64).collect(),
        denominator: Some(n),
    })
}

/// `D(P‖Q)` in bits; `f64::INFINITY` when `P` charges a cell where `Q` is zero.
pub fn divergence(p: &JointDist, q: &JointDist) -> Result<f64, TypeError> {
    if p.shape() != q.shape() {
        return Err(TypeError::ShapeMismatch(p.shape(), q.shape()));
    }
    Ok(divergence_slices(&p.table, &q.table))
}

pub(crate) fn divergence_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).log2();
        }
    }
    d.max(0.0)
}

/// `Σ |P(c) − Q(c)|`, in `[0, 2]`.
pub fn variational_distance(p: &JointDist, q: &JointDist) -> Result<f64, TypeError> {
    if p.shape() != q.shape() {
        return Err(TypeError::ShapeMismatch(p.shape(), q.shape()));
    }
    Ok(p.table.iter().zip(&q.table).map(|(a, b)| (a - b).abs()).sum())
}

/// `I(left ∧ right | given)` in bits. Axes outside the three groups are
/// marginalized out.
pub fn mutual_information(
    j: &JointDist,
    left: &[usize],
    right: &[usize],
    given: &[usize],
) -> Result<f64, TypeError> {
    let all: Vec<usize> = left.iter().chain(right).chain(given).copied().collect();
    let distinct: BTreeSet<usize> = all.iter().copied().collect();
    if left.is_empty()
        || right.is_empty()
        || distinct.len() != all.len()
        || all.iter().any(|&k| k >= j.axes.len())
    {
        return Err(TypeError::BadAxisGroups);
    }
    let h = |axes: Vec<usize>| -> Result<f64, TypeError> {
        if axes.is_empty() {
            Ok(0.0)
        } else {
            Ok(j.marginal(&axes)?.entropy())
        }
    };
    let lg: Vec<usize> = left.iter().chain(given).copied().collect();
    let rg: Vec<usize> = right.iter().chain(given).copied().collect();
    let value = h(lg)? + h(rg)? - h(all)? - h(given.to_vec())?;
    Ok(value.max(0.0))
}

/// Entropy in bits of the joint type of aligned columns `(sequence, alphabet size)`.
///
/// Equivalent to `joint_type(..).entropy()` without materializing the dense
/// table; the decoder uses it for tuples with many axes.
pub fn column_entropy(cols: &[(&[usize], usize)]) -> f64 {
    let Some((first, _)) = cols.first() else {
        return 0.0;
    };
    let n = first.len();
    if n == 0 {
        return 0.0;
    }
    let mut keys: Vec<u128> = (0..n)
        .map(|t| cols.iter().fold(0u128, |acc, (s, size)| acc * *size as u128 + s[t] as u128))
        .collect();
    keys.sort_unstable();
    let nf = n as f64;
    let mut h = 0.0;
    let mut run = 1usize;
    for w in 1..=n {
        if w < n && keys[w] == keys[w - 1] {
            run += 1;
        } else {
            let p = run as f64 / nf;
            h -= p * p.log2();
            run = 1;
        }
    }
    h
}

/// `I(left ∧ right | given)` of the joint type of aligned columns.
pub fn column_mutual_information(
    left: &[(&[usize], usize)],
    right: &[(&[usize], usize)],
    given: &[(&[usize], usize)],
) -> f64 {
    let lg: Vec<(&[usize], usize)> = left.iter().chain(given).copied().collect();
    let rg: Vec<(&[usize], usize)> = right.iter().chain(given).copied().collect();
    let all: Vec<(&[usize], usize)> = left.iter().chain(right).chain(given).copied().collect();
    let value = column_entropy(&lg) + column_entropy(&rg) - column_entropy(&all)
        - column_entropy(given);
    value.max(0.0)
}
