//! Discrete memoryless arbitrarily varying multiple-access channels.
//!
//! A channel is a kernel `W(z | x, y, s)` over four finite alphabets, stored
//! densely in the canonical index order `(x, y, s, z)`. Entries given as exact
//! rationals keep their exact value next to the `f64` view used for numerics.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// Row-sum tolerance for kernels given in floating point.
pub const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("negative entry {value} at (x={x}, y={y}, s={s}, z={z})")]
    NegativeEntry {
        x: usize,
        y: usize,
        s: usize,
        z: usize,
        value: f64,
    },
    #[error("row (x={x}, y={y}, s={s}) sums to {sum}, expected 1")]
    RowSumMismatch { x: usize, y: usize, s: usize, sum: f64 },
    #[error("dimension mismatch at {locus}: {detail}")]
    DimensionMismatch { locus: String, detail: String },
    #[error("alphabet sizes must be positive")]
    EmptyAlphabet,
    #[error("sequence lengths differ: {0:?}")]
    LengthMismatch(Vec<usize>),
    #[error("symbol {symbol} out of range for alphabet {axis} of size {size} (position {position})")]
    SymbolOutOfRange {
        axis: char,
        position: usize,
        symbol: usize,
        size: usize,
    },
    #[error("distribution over {found} symbols where {expected} were expected")]
    SizeMismatch { expected: usize, found: usize },
    #[error("invalid distribution: {0}")]
    InvalidDist(String),
    #[error("syntax error at line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },
    #[error("invalid value at {locus}: {msg}")]
    Field { locus: String, msg: String },
}

/// One kernel entry as it was supplied.
#[derive(Debug, Clone, PartialEq)]
pub enum Prob {
    Exact(BigRational),
    Float(f64),
}

impl Prob {
    pub fn to_f64(&self) -> f64 {
        match self {
            Prob::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Prob::Float(v) => *v,
        }
    }

    fn is_negative(&self) -> bool {
        match self {
            Prob::Exact(r) => r.is_negative(),
            Prob::Float(v) => *v < 0.0 || v.is_nan(),
        }
    }
}

impl From<f64> for Prob {
    fn from(v: f64) -> Self {
        Prob::Float(v)
    }
}

impl From<BigRational> for Prob {
    fn from(r: BigRational) -> Self {
        Prob::Exact(r)
    }
}

/// Build an exact rational `num/den`.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabets {
    pub x: usize,
    pub y: usize,
    pub s: usize,
    pub z: usize,
}

impl Alphabets {
    pub fn new(x: usize, y: usize, s: usize, z: usize) -> Self {
        Alphabets { x, y, s, z }
    }

    pub fn kernel_len(&self) -> usize {
        self.x * self.y * self.s * self.z
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub s: Vec<String>,
    pub z: Vec<String>,
}

impl Labels {
    pub fn numeric(sizes: Alphabets) -> Self {
        let names = |n: usize| (0..n).map(|i| i.to_string()).collect();
        Labels {
            x: names(sizes.x),
            y: names(sizes.y),
            s: names(sizes.s),
            z: names(sizes.z),
        }
    }
}

/// A validated AVMAC kernel. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Avmac {
    sizes: Alphabets,
    labels: Labels,
    entries: Vec<Prob>,
    kernel: Vec<f64>,
}

impl Avmac {
    /// Validate a kernel laid out in `(x, y, s, z)` order.
    pub fn new(sizes: Alphabets, entries: Vec<Prob>) -> Result<Self, ChannelError> {
        Self::with_labels(sizes, Labels::numeric(sizes), entries)
    }

    pub fn with_labels(
        sizes: Alphabets,
        labels: Labels,
        entries: Vec<Prob>,
    ) -> Result<Self, ChannelError> {
        validate_channel(sizes, labels, entries)
    }

    /// Float kernel from a closure `w(x, y, s, z)`.
    pub fn from_fn<F>(sizes: Alphabets, mut w: F) -> Result<Self, ChannelError>
    where
        F: FnMut(usize, usize, usize, usize) -> f64,
    {
        let mut entries = Vec::with_capacity(sizes.kernel_len());
        for x in 0..sizes.x {
            for y in 0..sizes.y {
                for s in 0..sizes.s {
                    for z in 0..sizes.z {
                        entries.push(Prob::Float(w(x, y, s, z)));
                    }
                }
            }
        }
        Self::new(sizes, entries)
    }

    /// Exact kernel from a closure returning rationals.
    pub fn from_exact_fn<F>(sizes: Alphabets, mut w: F) -> Result<Self, ChannelError>
    where
        F: FnMut(usize, usize, usize, usize) -> BigRational,
    {
        let mut entries = Vec::with_capacity(sizes.kernel_len());
        for x in 0..sizes.x {
            for y in 0..sizes.y {
                for s in 0..sizes.s {
                    for z in 0..sizes.z {
                        entries.push(Prob::Exact(w(x, y, s, z)));
                    }
                }
            }
        }
        Self::new(sizes, entries)
    }

    /// Deterministic channel `z = f(x, y, s)` with exact 0/1 entries.
    pub fn deterministic<F>(sizes: Alphabets, f: F) -> Result<Self, ChannelError>
    where
        F: Fn(usize, usize, usize) -> usize,
    {
        Self::from_exact_fn(sizes, |x, y, s, z| {
            if f(x, y, s) == z {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        })
    }

    pub fn sizes(&self) -> Alphabets {
        self.sizes
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn entries(&self) -> &[Prob] {
        &self.entries
    }

    /// Flat `f64` kernel in `(x, y, s, z)` order.
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, s: usize, z: usize) -> usize {
        ((x * self.sizes.y + y) * self.sizes.s + s) * self.sizes.z + z
    }

    #[inline]
    pub fn w(&self, x: usize, y: usize, s: usize, z: usize) -> f64 {
        self.kernel[self.index(x, y, s, z)]
    }

    /// The output distribution `W(. | x, y, s)`.
    #[inline]
    pub fn row(&self, x: usize, y: usize, s: usize) -> &[f64] {
        let start = self.index(x, y, s, 0);
        &self.kernel[start..start + self.sizes.z]
    }

    /// Exact view, available when every entry was supplied as a rational.
    pub fn exact_kernel(&self) -> Option<Vec<BigRational>> {
        self.entries
            .iter()
            .map(|e| match e {
                Prob::Exact(r) => Some(r.clone()),
                Prob::Float(_) => None,
            })
            .collect()
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().all(|e| matches!(e, Prob::Exact(_)))
    }

    /// `Σ_s q(s) W(z | x, y, s)`.
    pub fn average_under_state(&self, q: &Dist) -> Result<AveragedMac, ChannelError> {
        if q.len() != self.sizes.s {
            return Err(ChannelError::SizeMismatch {
                expected: self.sizes.s,
                found: q.len(),
            });
        }
        let Alphabets { x: nx, y: ny, s: ns, z: nz } = self.sizes;
        let mut kernel = vec![0.0; nx * ny * nz];
        for x in 0..nx {
            for y in 0..ny {
                let out = &mut kernel[(x * ny + y) * nz..(x * ny + y + 1) * nz];
                for s in 0..ns {
                    let qs = q.values()[s];
                    if qs == 0.0 {
                        continue;
                    }
                    for (o, w) in out.iter_mut().zip(self.row(x, y, s)) {
                        *o += qs * w;
                    }
                }
                let total: f64 = out.iter().sum();
                if total > 0.0 {
                    out.iter_mut().for_each(|o| *o /= total);
                }
            }
        }
        Ok(AveragedMac {
            x_size: nx,
            y_size: ny,
            z_size: nz,
            kernel,
        })
    }

    /// `W^n(z | x, y, s) = Π_i W(z_i | x_i, y_i, s_i)`.
    pub fn nfold_prob(
        &self,
        xs: &[usize],
        ys: &[usize],
        ss: &[usize],
        zs: &[usize],
    ) -> Result<f64, ChannelError> {
        let n = xs.len();
        if ys.len() != n || ss.len() != n || zs.len() != n {
            return Err(ChannelError::LengthMismatch(vec![
                xs.len(),
                ys.len(),
                ss.len(),
                zs.len(),
            ]));
        }
        let checks = [
            ('x', xs, self.sizes.x),
            ('y', ys, self.sizes.y),
            ('s', ss, self.sizes.s),
            ('z', zs, self.sizes.z),
        ];
        for (axis, seq, size) in checks {
            if let Some((position, &symbol)) = seq.iter().enumerate().find(|(_, &v)| v >= size) {
                return Err(ChannelError::SymbolOutOfRange {
                    axis,
                    position,
                    symbol,
                    size,
                });
            }
        }
        Ok((0..n)
            .map(|i| self.w(xs[i], ys[i], ss[i], zs[i]))
            .product())
    }

    /// Relabel output symbols: new symbol `perm[z]` carries old symbol `z`.
    pub fn permute_outputs(&self, perm: &[usize]) -> Result<Self, ChannelError> {
        let sizes = self.sizes;
        if perm.len() != sizes.z {
            return Err(ChannelError::SizeMismatch {
                expected: sizes.z,
                found: perm.len(),
            });
        }
        let mut entries = self.entries.clone();
        let mut z_labels = self.labels.z.clone();
        for x in 0..sizes.x {
            for y in 0..sizes.y {
                for s in 0..sizes.s {
                    for z in 0..sizes.z {
                        entries[self.index(x, y, s, perm[z])] =
                            self.entries[self.index(x, y, s, z)].clone();
                    }
                }
            }
        }
        for z in 0..sizes.z {
            z_labels[perm[z]] = self.labels.z[z].clone();
        }
        let labels = Labels {
            z: z_labels,
            ..self.labels.clone()
        };
        Self::with_labels(sizes, labels, entries)
    }
}

/// Validate raw kernel values against the declared alphabet sizes.
pub fn validate_channel(
    sizes: Alphabets,
    labels: Labels,
    entries: Vec<Prob>,
) -> Result<Avmac, ChannelError> {
    if sizes.x == 0 || sizes.y == 0 || sizes.s == 0 || sizes.z == 0 {
        return Err(ChannelError::EmptyAlphabet);
    }
    if entries.len() != sizes.kernel_len() {
        return Err(ChannelError::DimensionMismatch {
            locus: "w".into(),
            detail: format!(
                "{} entries for alphabets {}x{}x{}x{}",
                entries.len(),
                sizes.x,
                sizes.y,
                sizes.s,
                sizes.z
            ),
        });
    }
    for (axis, names, size) in [
        ("x", &labels.x, sizes.x),
        ("y", &labels.y, sizes.y),
        ("s", &labels.s, sizes.s),
        ("z", &labels.z, sizes.z),
    ] {
        if names.len() != size {
            return Err(ChannelError::DimensionMismatch {
                locus: axis.into(),
                detail: format!("{} labels for alphabet of size {}", names.len(), size),
            });
        }
    }
    let nz = sizes.z;
    for (row, chunk) in entries.chunks(nz).enumerate() {
        let s = row % sizes.s;
        let y = (row / sizes.s) % sizes.y;
        let x = row / (sizes.s * sizes.y);
        if let Some(z) = chunk.iter().position(Prob::is_negative) {
            return Err(ChannelError::NegativeEntry {
                x,
                y,
                s,
                z,
                value: chunk[z].to_f64(),
            });
        }
        let all_exact = chunk.iter().all(|e| matches!(e, Prob::Exact(_)));
        if all_exact {
            let sum = chunk.iter().fold(BigRational::zero(), |acc, e| match e {
                Prob::Exact(r) => acc + r,
                Prob::Float(_) => unreachable!(),
            });
            if !sum.is_one() {
                return Err(ChannelError::RowSumMismatch {
                    x,
                    y,
                    s,
                    sum: sum.to_f64().unwrap_or(f64::NAN),
                });
            }
        } else {
            let sum: f64 = chunk.iter().map(Prob::to_f64).sum();
            if !((sum - 1.0).abs() <= ROW_SUM_TOL) {
                return Err(ChannelError::RowSumMismatch { x, y, s, sum });
            }
        }
    }
    let kernel = entries.iter().map(Prob::to_f64).collect();
    Ok(Avmac {
        sizes,
        labels,
        entries,
        kernel,
    })
}

/// A probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dist {
    values: Vec<f64>,
}

impl Dist {
    pub fn new(values: Vec<f64>) -> Result<Self, ChannelError> {
        if values.is_empty() {
            return Err(ChannelError::InvalidDist("empty".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(ChannelError::InvalidDist(format!("negative entry in {values:?}")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(ChannelError::InvalidDist(format!("sums to {sum}")));
        }
        Ok(Dist { values })
    }

    /// Normalizes a nonnegative weight vector.
    pub fn from_weights(weights: &[f64]) -> Result<Self, ChannelError> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(ChannelError::InvalidDist(format!("bad weights {weights:?}")));
        }
        Ok(Dist {
            values: weights.iter().map(|w| w / sum).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        Dist {
            values: vec![1.0 / n as f64; n],
        }
    }

    pub fn point(n: usize, at: usize) -> Self {
        let mut values = vec![0.0; n];
        values[at] = 1.0;
        Dist { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min_prob(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// The state-averaged single-letter MAC `V(z | x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedMac {
    pub x_size: usize,
    pub y_size: usize,
    pub z_size: usize,
    kernel: Vec<f64>,
}

impl AveragedMac {
    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.kernel[(x * self.y_size + y) * self.z_size + z]
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }
}

// ---------------------------------------------------------------------------
// File format

fn entry_to_json(e: &Prob) -> Value {
    match e {
        Prob::Float(v) => Value::from(*v),
        Prob::Exact(r) if r.is_integer() => match r.to_integer().to_i64() {
            Some(i) => Value::from(i),
            None => Value::String(r.to_string()),
        },
        Prob::Exact(r) => Value::String(r.to_string()),
    }
}

fn entry_from_json(v: &Value, locus: &str) -> Result<Prob, ChannelError> {
    let field = |msg: String| ChannelError::Field {
        locus: locus.to_string(),
        msg,
    };
    match v {
        Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                Ok(Prob::Exact(BigRational::from_integer(BigInt::from(i))))
            } else if let Some(f) = num.as_f64() {
                Ok(Prob::Float(f))
            } else {
                Err(field(format!("unrepresentable number {num}")))
            }
        }
        Value::String(text) => BigRational::from_str(text.trim())
            .map(Prob::Exact)
            .map_err(|_| field(format!("expected a rational of the form \"p/q\", got {text:?}"))),
        other => Err(field(format!("expected a number or \"p/q\" string, got {other}"))),
    }
}

/// Render a channel in the JSON channel file format.
pub fn serialize_channel(ch: &Avmac) -> String {
    let sizes = ch.sizes;
    let mut w = Vec::with_capacity(sizes.x);
    for x in 0..sizes.x {
        let mut wy = Vec::with_capacity(sizes.y);
        for y in 0..sizes.y {
            let mut ws = Vec::with_capacity(sizes.s);
            for s in 0..sizes.s {
                let row: Vec<Value> = (0..sizes.z)
                    .map(|z| entry_to_json(&ch.entries[ch.index(x, y, s, z)]))
                    .collect();
                ws.push(Value::Array(row));
            }
            wy.push(Value::Array(ws));
        }
        w.push(Value::Array(wy));
    }
    let mut obj = Map::new();
    obj.insert("x".into(), Value::from(ch.labels.x.clone()));
    obj.insert("y".into(), Value::from(ch.labels.y.clone()));
    obj.insert("s".into(), Value::from(ch.labels.s.clone()));
    obj.insert("z".into(), Value::from(ch.labels.z.clone()));
    obj.insert("w".into(), Value::Array(w));
    let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("json value");
    text.push('\n');
    text
}

/// Parse a channel file; syntax and shape errors carry their locus.
pub fn parse_channel(text: &str) -> Result<Avmac, ChannelError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ChannelError::Syntax {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    let obj = root.as_object().ok_or_else(|| ChannelError::Field {
        locus: "<root>".into(),
        msg: "expected a JSON object".into(),
    })?;
    let labels_of = |key: &str| -> Result<Vec<String>, ChannelError> {
        let arr = obj
            .get(key)
            .and_then(Value::as_array)
            .ok_or_else(|| ChannelError::Field {
                locus: key.into(),
                msg: "missing array of symbol labels".into(),
            })?;
        arr.iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_str().map(str::to_string).ok_or_else(|| ChannelError::Field {
                    locus: format!("{key}[{i}]"),
                    msg: "symbol labels must be strings".into(),
                })
            })
            .collect()
    };
    let labels = Labels {
        x: labels_of("x")?,
        y: labels_of("y")?,
        s: labels_of("s")?,
        z: labels_of("z")?,
    };
    let sizes = Alphabets::new(labels.x.len(), labels.y.len(), labels.s.len(), labels.z.len());
    if sizes.x == 0 || sizes.y == 0 || sizes.s == 0 || sizes.z == 0 {
        return Err(ChannelError::EmptyAlphabet);
    }
    let w = obj.get("w").ok_or_else(|| ChannelError::Field {
        locus: "w".into(),
        msg: "missing kernel".into(),
    })?;
    let dims = [sizes.x, sizes.y, sizes.s, sizes.z];
    let mut entries = Vec::with_capacity(sizes.kernel_len());
    collect_entries(w, &dims, "w".to_string(), &mut entries)?;
    validate_channel(sizes, labels, entries)
}

fn collect_entries(
    v: &Value,
    dims: &[usize],
    locus: String,
    out: &mut Vec<Prob>,
) -> Result<(), ChannelError> {
    let Some((&len, rest)) = dims.split_first() else {
        out.push(entry_from_json(v, &locus)?);
        return Ok(());
    };
    let arr = v.as_array().ok_or_else(|| ChannelError::DimensionMismatch {
        locus: locus.clone(),
        detail: format!("expected an array of length {len}"),
    })?;
    if arr.len() != len {
        return Err(ChannelError::DimensionMismatch {
            locus,
            detail: format!("expected {len} entries, found {}", arr.len()),
        });
    }
    for (i, item) in arr.iter().enumerate() {
        collect_entries(item, rest, format!("{locus}[{i}]"), out)?;
    }
    Ok(())
}

impl fmt::Display for Avmac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.sizes;
        write!(f, "AVMAC |X|={} |Y|={} |S|={} |Z|={}", a.x, a.y, a.s, a.z)
    }
}

/// Channels used throughout the tests and examples.
pub mod library {
    use super::*;

    /// `z = x XOR y XOR s` over binary alphabets.
    pub fn xor() -> Avmac {
        Avmac::deterministic(Alphabets::new(2, 2, 2, 2), |x, y, s| x ^ y ^ s).unwrap()
    }

    /// Single-state binary AND channel.
    pub fn and_gate() -> Avmac {
        Avmac::deterministic(Alphabets::new(2, 2, 1, 2), |x, y, _| x & y).unwrap()
    }

    /// Single-state binary adder, `z = x + y`.
    pub fn adder() -> Avmac {
        Avmac::deterministic(Alphabets::new(2, 2, 1, 3), |x, y, _| x + y).unwrap()
    }

    /// Single-state noiseless pair channel, `z = (x, y)`.
    pub fn identity_pair() -> Avmac {
        Avmac::deterministic(Alphabets::new(2, 2, 1, 4), |x, y, _| 2 * x + y).unwrap()
    }

    /// States are input pairs `(x', y')`; `z = (x ^ x') | (y ^ y')`.
    pub fn swap_symmetric() -> Avmac {
        Avmac::deterministic(Alphabets::new(2, 2, 4, 2), |x, y, s| {
            let (xs, ys) = (s / 2, s % 2);
            (x ^ xs) | (y ^ ys)
        })
        .unwrap()
    }

    /// `z = (x + s, y)`: the state adds to the first input, the second passes cleanly.
    pub fn x_adder_clean_y() -> Avmac {
        Avmac::deterministic(Alphabets::new(2, 2, 2, 6), |x, y, s| 2 * (x + s) + y).unwrap()
    }

    /// `z = (x, y)` under `s = 0`; under `s = 1` the pair survives with
    /// probability 4/5 and is otherwise uniform.
    pub fn noisy_pair() -> Avmac {
        Avmac::from_exact_fn(Alphabets::new(2, 2, 2, 4), |x, y, s, z| {
            let hit = z == 2 * x + y;
            match (s, hit) {
                (0, true) => ratio(1, 1),
                (0, false) => ratio(0, 1),
                (_, true) => ratio(17, 20),
                (_, false) => ratio(1, 20),
            }
        })
        .unwrap()
    }

    /// `z = x XOR s` with `S = X`; the second input is ignored.
    pub fn x_state_xor() -> Avmac {
        Avmac::deterministic(Alphabets::new(2, 2, 2, 2), |x, _, s| x ^ s).unwrap()
    }
}
