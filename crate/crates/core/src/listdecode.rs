//! Constant-composition codes, the two-step list decoder, good-code sets and
//! error simulation at small blocklength.
//!
//! Message indices are 0-based; the fallback list is `{(0, 0)}`.

use std::collections::{BTreeSet, HashSet};

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{Avmac, ChannelError, Dist};
use crate::types::{column_entropy, column_mutual_information};
use crate::util::{binomial, compositions, digits, multinomial, multiset_count, next_permutation};

pub const DEFAULT_S_BUDGET: usize = 1 << 16;
pub const DEFAULT_Z_BUDGET: usize = 1 << 16;
pub const DEFAULT_SUBSET_BUDGET: u128 = 5_000_000;
const ENUMERATE_LIMIT: u128 = 100_000;
const TYPE_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("n·P_{sender} is not integral for n = {n}")]
    TypeNotIntegral { sender: char, n: usize },
    #[error("sender {sender} has {available} admissible sequences, {requested} requested")]
    NotEnoughSequences {
        sender: char,
        available: u128,
        requested: usize,
    },
    #[error("{size} state configurations exceed the budget {budget}; reduce n or |S|")]
    StateSpaceTooLarge { size: u128, budget: usize },
    #[error("{size} output sequences exceed the budget {budget}")]
    OutputSpaceTooLarge { size: u128, budget: usize },
    #[error("{work} subset evaluations exceed the budget {budget}")]
    SubsetBudget { work: u128, budget: u128 },
    #[error("invalid codebook: {0}")]
    BadCode(String),
    #[error("invalid parameters: {0}")]
    BadParams(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebook {
    pub n: usize,
    pub x_size: usize,
    pub y_size: usize,
    pub xwords: Vec<Vec<usize>>,
    pub ywords: Vec<Vec<usize>>,
}

fn letter_counts(word: &[usize], size: usize) -> Vec<usize> {
    let mut c = vec![0; size];
    for &v in word {
        c[v] += 1;
    }
    c
}

impl Codebook {
    pub fn new(
        x_size: usize,
        y_size: usize,
        xwords: Vec<Vec<usize>>,
        ywords: Vec<Vec<usize>>,
    ) -> Result<Self, DecodeError> {
        let m = xwords.len();
        if m == 0 || ywords.len() != m {
            return Err(DecodeError::BadCode(format!(
                "need M ≥ 1 words per sender, got {} and {}",
                m,
                ywords.len()
            )));
        }
        let n = xwords[0].len();
        if n == 0 {
            return Err(DecodeError::BadCode("blocklength must be positive".into()));
        }
        for (words, size, who) in [(&xwords, x_size, 'X'), (&ywords, y_size, 'Y')] {
            for (k, w) in words.iter().enumerate() {
                if w.len() != n {
                    return Err(DecodeError::BadCode(format!("{who} word {k} has length {}", w.len())));
                }
                if let Some(v) = w.iter().find(|&&v| v >= size) {
                    return Err(DecodeError::BadCode(format!("{who} word {k} has symbol {v}")));
                }
            }
        }
        Ok(Codebook {
            n,
            x_size,
            y_size,
            xwords,
            ywords,
        })
    }

    pub fn messages(&self) -> usize {
        self.xwords.len()
    }

    /// `(1/n) log₂ M`.
    pub fn rate(&self) -> f64 {
        (self.messages() as f64).log2() / self.n as f64
    }

    fn common_composition(words: &[Vec<usize>], size: usize) -> Option<Vec<usize>> {
        let first = letter_counts(&words[0], size);
        words
            .iter()
            .all(|w| letter_counts(w, size) == first)
            .then_some(first)
    }

    /// Letter counts shared by every first-sender word, if any.
    pub fn x_composition(&self) -> Option<Vec<usize>> {
        Self::common_composition(&self.xwords, self.x_size)
    }

    pub fn y_composition(&self) -> Option<Vec<usize>> {
        Self::common_composition(&self.ywords, self.y_size)
    }

    /// Smallest letter frequency over all words of both senders.
    pub fn min_letter_prob(&self) -> f64 {
        let x = self.xwords.iter().map(|w| letter_counts(w, self.x_size));
        let y = self.ywords.iter().map(|w| letter_counts(w, self.y_size));
        x.chain(y)
            .flat_map(|c| c.into_iter())
            .min()
            .map_or(0.0, |c| c as f64 / self.n as f64)
    }

    /// Code whose message `k` is old message `px[k]` (resp. `py[k]`).
    pub fn permuted(&self, px: &[usize], py: &[usize]) -> Codebook {
        Codebook {
            xwords: px.iter().map(|&k| self.xwords[k].clone()).collect(),
            ywords: py.iter().map(|&k| self.ywords[k].clone()).collect(),
            ..self.clone()
        }
    }
}

/// `n·P` as integer counts, if integral.
pub fn type_counts(p: &Dist, n: usize) -> Option<Vec<usize>> {
    let counts: Vec<usize> = p
        .values()
        .iter()
        .map(|&v| {
            let c = v * n as f64;
            ((c - c.round()).abs() <= TYPE_EPS).then_some(c.round() as usize)
        })
        .collect::<Option<_>>()?;
    (counts.iter().sum::<usize>() == n).then_some(counts)
}

fn sample_type_class(
    counts: &[usize],
    m: usize,
    sender: char,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<usize>>, DecodeError> {
    let available = multinomial(counts);
    if available < m as u128 {
        return Err(DecodeError::NotEnoughSequences {
            sender,
            available,
            requested: m,
        });
    }
    let base: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(v, &c)| std::iter::repeat_n(v, c))
        .collect();
    if available <= ENUMERATE_LIMIT {
        let mut all = vec![base.clone()];
        let mut cur = base;
        while next_permutation(&mut cur) {
            all.push(cur.clone());
        }
        all.shuffle(rng);
        all.truncate(m);
        return Ok(all);
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let mut w = base.clone();
        w.shuffle(rng);
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    Ok(out)
}

fn sample_distinct(
    radix: usize,
    n: usize,
    m: usize,
    sender: char,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<usize>>, DecodeError> {
    let available = (radix as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if available < m as u128 {
        return Err(DecodeError::NotEnoughSequences {
            sender,
            available,
            requested: m,
        });
    }
    if available <= ENUMERATE_LIMIT {
        let mut all: Vec<usize> = (0..available as usize).collect();
        all.shuffle(rng);
        return Ok(all[..m].iter().map(|&k| digits(k, radix, n)).collect());
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let w: Vec<usize> = (0..n).map(|_| rng.gen_range(0..radix)).collect();
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    Ok(out)
}

fn sender_rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut rx = ChaCha8Rng::seed_from_u64(seed);
    rx.set_stream(0);
    let mut ry = ChaCha8Rng::seed_from_u64(seed);
    ry.set_stream(1);
    (rx, ry)
}

/// `M` distinct words of the exact types `n·P_X`, `n·P_Y`, drawn uniformly.
pub fn build_code(px: &Dist, py: &Dist, m: usize, n: usize, seed: u64) -> Result<Codebook, DecodeError> {
    if m == 0 || n == 0 {
        return Err(DecodeError::BadParams("M and n must be positive".into()));
    }
    let cx = type_counts(px, n).ok_or(DecodeError::TypeNotIntegral { sender: 'X', n })?;
    let cy = type_counts(py, n).ok_or(DecodeError::TypeNotIntegral { sender: 'Y', n })?;
    let (mut rx, mut ry) = sender_rngs(seed);
    let xwords = sample_type_class(&cx, m, 'X', &mut rx)?;
    let ywords = sample_type_class(&cy, m, 'Y', &mut ry)?;
    Codebook::new(px.len(), py.len(), xwords, ywords)
}

/// `M` distinct words per sender drawn uniformly from all of `X^n`, `Y^n`.
pub fn random_code(
    x_size: usize,
    y_size: usize,
    m: usize,
    n: usize,
    seed: u64,
) -> Result<Codebook, DecodeError> {
    if m == 0 || n == 0 {
        return Err(DecodeError::BadParams("M and n must be positive".into()));
    }
    let (mut rx, mut ry) = sender_rngs(seed);
    let xwords = sample_distinct(x_size, n, m, 'X', &mut rx)?;
    let ywords = sample_distinct(y_size, n, m, 'Y', &mut ry)?;
    Codebook::new(x_size, y_size, xwords, ywords)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOneMode {
    /// Every `s ∈ S^n`.
    Exhaustive,
    /// Conditional types of `s` given the `(x, y, z)` cells.
    ConditionalTypes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderParams {
    pub eta: f64,
    pub l: usize,
    pub s_budget: usize,
    pub step_one: StepOneMode,
}

impl DecoderParams {
    pub fn new(eta: f64, l: usize) -> Self {
        DecoderParams {
            eta,
            l,
            s_budget: DEFAULT_S_BUDGET,
            step_one: StepOneMode::Exhaustive,
        }
    }

    pub fn with_step_one(mut self, mode: StepOneMode) -> Self {
        self.step_one = mode;
        self
    }

    fn validate(&self) -> Result<(), DecodeError> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(DecodeError::BadParams(format!("eta = {} must be finite and ≥ 0", self.eta)));
        }
        if self.l == 0 {
            return Err(DecodeError::BadParams("L must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    /// Pairs passing the step-one test, ascending.
    pub gamma: Vec<(usize, usize)>,
    /// A state sequence passing the step-one test, aligned with `gamma`.
    pub gamma_witness: Vec<Vec<usize>>,
    pub list: Vec<(usize, usize)>,
    /// State sequence passing both tests, aligned with `list`; empty on fallback.
    pub list_witness: Vec<Vec<usize>>,
    pub fallback_used: bool,
}

struct Ctx<'a> {
    ch: &'a Avmac,
    code: &'a Codebook,
    z: &'a [usize],
    px: Vec<Vec<f64>>,
    py: Vec<Vec<f64>>,
}

impl<'a> Ctx<'a> {
    fn new(ch: &'a Avmac, code: &'a Codebook, z: &'a [usize]) -> Result<Self, DecodeError> {
        let sz = ch.sizes();
        if code.x_size != sz.x || code.y_size != sz.y {
            return Err(ChannelError::DimensionMismatch {
                locus: "codebook".into(),
                detail: format!(
                    "code alphabets {}×{}, channel {}×{}",
                    code.x_size, code.y_size, sz.x, sz.y
                ),
            }
            .into());
        }
        if z.len() != code.n {
            return Err(ChannelError::LengthMismatch(vec![code.n, z.len()]).into());
        }
        symbols_in_range(z, sz.z, 'z')?;
        let freq = |w: &Vec<usize>, size| {
            letter_counts(w, size)
                .into_iter()
                .map(|c| c as f64 / code.n as f64)
                .collect()
        };
        Ok(Ctx {
            ch,
            code,
            z,
            px: code.xwords.iter().map(|w| freq(w, sz.x)).collect(),
            py: code.ywords.iter().map(|w| freq(w, sz.y)).collect(),
        })
    }

    /// `D(P_{XYSZ} ‖ P_X × P_Y × P_S × W)` from joint counts on `(x, y, s, z)`.
    fn divergence_from_counts(&self, i: usize, j: usize, counts: &[u32], ps: &[f64]) -> f64 {
        let sz = self.ch.sizes();
        let n = self.code.n as f64;
        let mut d = 0.0;
        for (idx, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let z = idx % sz.z;
            let s = (idx / sz.z) % sz.s;
            let y = (idx / (sz.z * sz.s)) % sz.y;
            let x = idx / (sz.z * sz.s * sz.y);
            let q = self.px[i][x] * self.py[j][y] * ps[s] * self.ch.w(x, y, s, z);
            if q == 0.0 {
                return f64::INFINITY;
            }
            let p = c as f64 / n;
            d += p * (p / q).log2();
        }
        d.max(0.0)
    }

    fn step_one_value(&self, i: usize, j: usize, s: &[usize]) -> f64 {
        let sz = self.ch.sizes();
        let (xw, yw) = (&self.code.xwords[i], &self.code.ywords[j]);
        let mut counts = vec![0u32; sz.x * sz.y * sz.s * sz.z];
        let mut ps = vec![0.0; sz.s];
        for t in 0..self.code.n {
            counts[((xw[t] * sz.y + yw[t]) * sz.s + s[t]) * sz.z + self.z[t]] += 1;
            ps[s[t]] += 1.0 / self.code.n as f64;
        }
        self.divergence_from_counts(i, j, &counts, &ps)
    }

    fn state_space(&self, budget: usize) -> Result<usize, DecodeError> {
        let size = (self.ch.sizes().s as u128)
            .checked_pow(self.code.n as u32)
            .unwrap_or(u128::MAX);
        if size > budget as u128 {
            return Err(DecodeError::StateSpaceTooLarge { size, budget });
        }
        Ok(size as usize)
    }

    /// Indices of every `s ∈ S^n` passing the step-one test for `(i, j)`.
    fn passing_states(&self, i: usize, j: usize, eta: f64, total: usize) -> Vec<usize> {
        let s_size = self.ch.sizes().s;
        (0..total)
            .filter(|&k| self.step_one_value(i, j, &digits(k, s_size, self.code.n)) <= eta)
            .collect()
    }

    /// First state sequence, in conditional-type order, passing step one.
    fn step_one_by_types(&self, i: usize, j: usize, eta: f64, budget: usize) -> Result<Option<Vec<usize>>, DecodeError> {
        let sz = self.ch.sizes();
        let (xw, yw) = (&self.code.xwords[i], &self.code.ywords[j]);
        let mut cells: Vec<((usize, usize, usize), Vec<usize>)> = Vec::new();
        for t in 0..self.code.n {
            let key = (xw[t], yw[t], self.z[t]);
            match cells.iter_mut().find(|(k, _)| *k == key) {
                Some((_, pos)) => pos.push(t),
                None => cells.push((key, vec![t])),
            }
        }
        let size = cells
            .iter()
            .map(|(_, pos)| multiset_count(sz.s, pos.len()))
            .fold(1u128, |a, b| a.saturating_mul(b));
        if size > budget as u128 {
            return Err(DecodeError::StateSpaceTooLarge { size, budget });
        }
        let options: Vec<Vec<Vec<usize>>> = cells
            .iter()
            .map(|(_, pos)| compositions(pos.len(), sz.s))
            .collect();
        let n = self.code.n as f64;
        for choice in options.iter().map(|o| o.iter()).multi_cartesian_product() {
            let mut counts = vec![0u32; sz.x * sz.y * sz.s * sz.z];
            let mut ps = vec![0.0; sz.s];
            for (((x, y, z), _), comp) in cells.iter().zip(&choice) {
                for (s, &c) in comp.iter().enumerate() {
                    counts[((x * sz.y + y) * sz.s + s) * sz.z + z] += c as u32;
                    ps[s] += c as f64 / n;
                }
            }
            if self.divergence_from_counts(i, j, &counts, &ps) <= eta {
                let mut s_seq = vec![0; self.code.n];
                for ((_, pos), comp) in cells.iter().zip(&choice) {
                    let mut it = pos.iter();
                    for (s, &c) in comp.iter().enumerate() {
                        for &t in it.by_ref().take(c) {
                            s_seq[t] = s;
                        }
                    }
                }
                return Ok(Some(s_seq));
            }
        }
        Ok(None)
    }

    /// `I(X Y Z ∧ X_{rows}, Y_{cols} | S)` for the pair `(i, j)`.
    fn step_two_value(&self, i: usize, j: usize, rows: &[usize], cols: &[usize], s: &[usize]) -> f64 {
        if rows.is_empty() && cols.is_empty() {
            return 0.0;
        }
        let sz = self.ch.sizes();
        let left = [
            (self.code.xwords[i].as_slice(), sz.x),
            (self.code.ywords[j].as_slice(), sz.y),
            (self.z, sz.z),
        ];
        let right: Vec<(&[usize], usize)> = rows
            .iter()
            .map(|&r| (self.code.xwords[r].as_slice(), sz.x))
            .chain(cols.iter().map(|&c| (self.code.ywords[c].as_slice(), sz.y)))
            .collect();
        column_mutual_information(&left, &right, &[(s, sz.s)])
    }
}

/// The two-step list decoder.
pub fn decode_list(
    ch: &Avmac,
    code: &Codebook,
    z: &[usize],
    params: &DecoderParams,
) -> Result<DecodeResult, DecodeError> {
    params.validate()?;
    let ctx = Ctx::new(ch, code, z)?;
    let m = code.messages();
    let s_size = ch.sizes().s;
    let pairs: Vec<(usize, usize)> = (0..m).cartesian_product(0..m).collect();

    let exhaustive = params.step_one == StepOneMode::Exhaustive;
    let total = if exhaustive {
        ctx.state_space(params.s_budget)?
    } else {
        0
    };
    type StepOne = Option<(Vec<usize>, Option<Vec<usize>>)>;
    let step_one: Vec<StepOne> = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<StepOne, DecodeError> {
            if exhaustive {
                let passing = ctx.passing_states(i, j, params.eta, total);
                Ok(passing
                    .first()
                    .map(|&k| (digits(k, s_size, code.n), Some(passing.clone()))))
            } else {
                Ok(ctx
                    .step_one_by_types(i, j, params.eta, params.s_budget)?
                    .map(|s| (s, None)))
            }
        })
        .collect::<Result<_, _>>()?;

    let mut gamma = Vec::new();
    let mut gamma_witness = Vec::new();
    let mut passing = Vec::new();
    for (&pair, r) in pairs.iter().zip(step_one) {
        if let Some((w, p)) = r {
            gamma.push(pair);
            gamma_witness.push(w);
            passing.push(p);
        }
    }

    let (list, list_witness) = if gamma.len() < params.l + 1 {
        // no subset K of size L+1 exists
        (gamma.clone(), gamma_witness.clone())
    } else {
        let combos_work = binomial(gamma.len() as u64 - 1, params.l as u64);
        if combos_work > DEFAULT_SUBSET_BUDGET {
            return Err(DecodeError::SubsetBudget {
                work: combos_work,
                budget: DEFAULT_SUBSET_BUDGET,
            });
        }
        let total = ctx.state_space(params.s_budget)?;
        let accepted: Vec<Option<Vec<usize>>> = gamma
            .par_iter()
            .zip(passing.par_iter())
            .map(|(&(i, j), pass)| {
                let others: Vec<(usize, usize)> =
                    gamma.iter().copied().filter(|&p| p != (i, j)).collect();
                let mut restricted: BTreeSet<(Vec<usize>, Vec<usize>)> = BTreeSet::new();
                for k in others.iter().combinations(params.l) {
                    let rows: BTreeSet<usize> = k.iter().map(|p| p.0).filter(|&r| r != i).collect();
                    let cols: BTreeSet<usize> = k.iter().map(|p| p.1).filter(|&c| c != j).collect();
                    restricted.insert((rows.into_iter().collect(), cols.into_iter().collect()));
                }
                let candidates = match pass {
                    Some(p) => p.clone(),
                    None => ctx.passing_states(i, j, params.eta, total),
                };
                candidates.into_iter().find_map(|k| {
                    let s = digits(k, s_size, code.n);
                    restricted
                        .iter()
                        .all(|(rows, cols)| ctx.step_two_value(i, j, rows, cols, &s) <= params.eta)
                        .then_some(s)
                })
            })
            .collect();
        let mut list = Vec::new();
        let mut witness = Vec::new();
        for (&pair, a) in gamma.iter().zip(accepted) {
            if let Some(s) = a {
                list.push(pair);
                witness.push(s);
            }
        }
        (list, witness)
    };

    if list.is_empty() {
        return Ok(DecodeResult {
            gamma,
            gamma_witness,
            list: vec![(0, 0)],
            list_witness: vec![],
            fallback_used: true,
        });
    }
    Ok(DecodeResult {
        gamma,
        gamma_witness,
        list,
        list_witness,
        fallback_used: false,
    })
}

/// Maps an output sequence to a list of message pairs.
pub trait ListDecoder: Sync {
    fn decode(&self, z: &[usize]) -> Result<Vec<(usize, usize)>, DecodeError>;
}

pub struct TwoStepDecoder<'a> {
    pub ch: &'a Avmac,
    pub code: &'a Codebook,
    pub params: DecoderParams,
}

impl ListDecoder for TwoStepDecoder<'_> {
    fn decode(&self, z: &[usize]) -> Result<Vec<(usize, usize)>, DecodeError> {
        Ok(decode_list(self.ch, self.code, z, &self.params)?.list)
    }
}

/// The `L` pairs of highest likelihood under the state-averaged channel;
/// ties go to the smaller pair.
pub struct LikelihoodDecoder<'a> {
    code: &'a Codebook,
    l: usize,
    z_size: usize,
    log_v: Vec<f64>,
}

impl<'a> LikelihoodDecoder<'a> {
    pub fn new(ch: &Avmac, code: &'a Codebook, q: &Dist, l: usize) -> Result<Self, DecodeError> {
        if l == 0 {
            return Err(DecodeError::BadParams("L must be positive".into()));
        }
        let avg = ch.average_under_state(q)?;
        Ok(LikelihoodDecoder {
            code,
            l,
            z_size: ch.sizes().z,
            log_v: avg.kernel().iter().map(|v| v.log2()).collect(),
        })
    }

    fn score(&self, i: usize, j: usize, z: &[usize]) -> f64 {
        let (xw, yw) = (&self.code.xwords[i], &self.code.ywords[j]);
        (0..z.len())
            .map(|t| self.log_v[(xw[t] * self.code.y_size + yw[t]) * self.z_size + z[t]])
            .sum()
    }
}

impl ListDecoder for LikelihoodDecoder<'_> {
    fn decode(&self, z: &[usize]) -> Result<Vec<(usize, usize)>, DecodeError> {
        if z.len() != self.code.n {
            return Err(ChannelError::LengthMismatch(vec![self.code.n, z.len()]).into());
        }
        let m = self.code.messages();
        let mut scored: Vec<(f64, (usize, usize))> = (0..m)
            .cartesian_product(0..m)
            .map(|(i, j)| (self.score(i, j, z), (i, j)))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(scored.into_iter().take(self.l).map(|(_, p)| p).collect())
    }
}

/// One draw of `z ~ W^n(· | x, y, s)`.
pub fn sample_output(ch: &Avmac, x: &[usize], y: &[usize], s: &[usize], rng: &mut impl Rng) -> Vec<usize> {
    (0..x.len())
        .map(|t| {
            let row = ch.row(x[t], y[t], s[t]);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (z, &w) in row.iter().enumerate() {
                acc += w;
                if u < acc {
                    return z;
                }
            }
            // rounding slack: last symbol with positive mass
            row.iter().rposition(|&w| w > 0.0).unwrap_or(0)
        })
        .collect()
}

/// Per-trial generator; trial streams are independent of thread scheduling.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub mean: f64,
    /// Binomial standard error; zero in exact mode.
    pub std_err: f64,
    /// Zero in exact mode.
    pub trials: usize,
    pub exact: bool,
}

fn symbols_in_range(seq: &[usize], size: usize, axis: char) -> Result<(), DecodeError> {
    match seq.iter().position(|&v| v >= size) {
        Some(position) => Err(ChannelError::SymbolOutOfRange {
            axis,
            position,
            symbol: seq[position],
            size,
        }
        .into()),
        None => Ok(()),
    }
}

fn check_state(ch: &Avmac, code: &Codebook, s: &[usize]) -> Result<(), DecodeError> {
    if s.len() != code.n {
        return Err(ChannelError::LengthMismatch(vec![code.n, s.len()]).into());
    }
    symbols_in_range(s, ch.sizes().s, 's')
}

/// Monte Carlo estimate of the average list-decoding error under state `s`.
pub fn simulate_error(
    ch: &Avmac,
    code: &Codebook,
    decoder: &dyn ListDecoder,
    s: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ErrorEstimate, DecodeError> {
    if trials == 0 {
        return Err(DecodeError::BadParams("trials must be positive".into()));
    }
    check_state(ch, code, s)?;
    let m = code.messages();
    let errors: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let i = rng.gen_range(0..m);
            let j = rng.gen_range(0..m);
            let z = sample_output(ch, &code.xwords[i], &code.ywords[j], s, &mut rng);
            Ok(!decoder.decode(&z)?.contains(&(i, j)))
        })
        .collect::<Result<_, DecodeError>>()?;
    let mean = errors.iter().filter(|&&e| e).count() as f64 / trials as f64;
    Ok(ErrorEstimate {
        mean,
        std_err: (mean * (1.0 - mean) / trials as f64).sqrt(),
        trials,
        exact: false,
    })
}

/// Average error by enumerating every output sequence.
pub fn exact_error(
    ch: &Avmac,
    code: &Codebook,
    decoder: &dyn ListDecoder,
    s: &[usize],
    z_budget: usize,
) -> Result<ErrorEstimate, DecodeError> {
    check_state(ch, code, s)?;
    let z_size = ch.sizes().z;
    let size = (z_size as u128).checked_pow(code.n as u32).unwrap_or(u128::MAX);
    if size > z_budget as u128 {
        return Err(DecodeError::OutputSpaceTooLarge {
            size,
            budget: z_budget,
        });
    }
    let m = code.messages();
    let per_z: Vec<f64> = (0..size as usize)
        .into_par_iter()
        .map(|k| {
            let z = digits(k, z_size, code.n);
            let probs: Vec<((usize, usize), f64)> = (0..m)
                .cartesian_product(0..m)
                .map(|(i, j)| {
                    let p = (0..code.n)
                        .map(|t| ch.w(code.xwords[i][t], code.ywords[j][t], s[t], z[t]))
                        .product::<f64>();
                    ((i, j), p)
                })
                .collect();
            if probs.iter().all(|(_, p)| *p == 0.0) {
                return Ok(0.0);
            }
            let list = decoder.decode(&z)?;
            Ok(probs
                .iter()
                .filter(|(pair, _)| !list.contains(pair))
                .map(|(_, p)| p)
                .sum())
        })
        .collect::<Result<_, DecodeError>>()?;
    Ok(ErrorEstimate {
        mean: per_z.iter().sum::<f64>() / (m * m) as f64,
        std_err: 0.0,
        trials: 0,
        exact: true,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodSets {
    pub a_set: Vec<(usize, usize)>,
    pub b_set: Vec<usize>,
    pub c_set: Vec<usize>,
}

/// The three good-code sets for one state sequence.
pub fn goodcode_sets(
    code: &Codebook,
    s: &[usize],
    s_size: usize,
    eps: f64,
    l: usize,
    budget: u128,
) -> Result<GoodSets, DecodeError> {
    if s.len() != code.n {
        return Err(ChannelError::LengthMismatch(vec![code.n, s.len()]).into());
    }
    symbols_in_range(s, s_size, 's')?;
    let m = code.messages();
    let mm = m as u64;
    let work = 2 * (m as u128) * binomial(mm.saturating_sub(1), l as u64) * binomial(mm, l as u64 + 1);
    if work > budget {
        return Err(DecodeError::SubsetBudget { work, budget });
    }
    let xs = |k: usize| (code.xwords[k].as_slice(), code.x_size);
    let ys = |k: usize| (code.ywords[k].as_slice(), code.y_size);
    let sc = (s, s_size);

    let h_s = column_entropy(&[sc]);
    let a_set = (0..m)
        .cartesian_product(0..m)
        .filter(|&(i, j)| {
            let d = column_entropy(&[xs(i)]) + column_entropy(&[ys(j)]) + h_s
                - column_entropy(&[xs(i), ys(j), sc]);
            d < eps
        })
        .collect();

    let threshold = (2 * l + 1) as f64 * code.rate() + eps;
    // for every I ⊆ [M]∖{own}, |I| = L and J ⊆ [M], |J| = L+1
    let good = |own: (&[usize], usize), own_k: usize, own_side_x: bool| -> bool {
        let rest: Vec<usize> = (0..m).filter(|&k| k != own_k).collect();
        rest.iter().copied().combinations(l).all(|same| {
            (0..m).combinations(l + 1).all(|other| {
                let right: Vec<(&[usize], usize)> = if own_side_x {
                    same.iter().map(|&k| xs(k)).chain(other.iter().map(|&k| ys(k))).chain([sc]).collect()
                } else {
                    other.iter().map(|&k| xs(k)).chain(same.iter().map(|&k| ys(k))).chain([sc]).collect()
                };
                column_mutual_information(&[own], &right, &[]) < threshold
            })
        })
    };
    let b_set = (0..m).filter(|&i| good(xs(i), i, true)).collect();
    let c_set = (0..m).filter(|&j| good(ys(j), j, false)).collect();
    Ok(GoodSets { a_set, b_set, c_set })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodCodeEntry {
    pub s: Vec<usize>,
    pub a_complement: usize,
    pub b_complement: usize,
    pub c_complement: usize,
    /// `2^{−(ε/4)n}·M²`.
    pub a_bound: f64,
    /// `2^{−(ε/4)n}·M`.
    pub bc_bound: f64,
    /// Smallest of the three margins, each normalized by its set's universe size.
    pub margin: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodCodeReport {
    pub entries: Vec<GoodCodeEntry>,
    pub worst: usize,
    pub passes: bool,
}

/// Checks the good-code bounds on the complements of the three sets.
pub fn goodcode_check(
    code: &Codebook,
    s_samples: &[Vec<usize>],
    s_size: usize,
    eps: f64,
    l: usize,
    budget: u128,
) -> Result<GoodCodeReport, DecodeError> {
    if s_samples.is_empty() {
        return Err(DecodeError::BadParams("at least one state sequence required".into()));
    }
    let m = code.messages();
    let factor = (-(eps / 4.0) * code.n as f64).exp2();
    let a_bound = factor * (m * m) as f64;
    let bc_bound = factor * m as f64;
    let entries: Vec<GoodCodeEntry> = s_samples
        .par_iter()
        .map(|s| {
            let sets = goodcode_sets(code, s, s_size, eps, l, budget)?;
            let a_c = m * m - sets.a_set.len();
            let b_c = m - sets.b_set.len();
            let c_c = m - sets.c_set.len();
            let margin = ((a_bound - a_c as f64) / (m * m) as f64)
                .min((bc_bound - b_c as f64) / m as f64)
                .min((bc_bound - c_c as f64) / m as f64);
            Ok(GoodCodeEntry {
                s: s.clone(),
                a_complement: a_c,
                b_complement: b_c,
                c_complement: c_c,
                a_bound,
                bc_bound,
                margin,
                passes: a_c as f64 <= a_bound && b_c as f64 <= bc_bound && c_c as f64 <= bc_bound,
            })
        })
        .collect::<Result<_, DecodeError>>()?;
    let worst = entries
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.margin.total_cmp(&b.1.margin))
        .map(|(k, _)| k)
        .unwrap();
    let passes = entries.iter().all(|e| e.passes);
    Ok(GoodCodeReport {
        entries,
        worst,
        passes,
    })
}

/// `0 < ε < δ ≤ R < η / (2(6L + 4))`.
pub fn params_ok(eps: f64, delta: f64, r: f64, eta: f64, l: usize) -> bool {
    0.0 < eps && eps < delta && delta <= r && r < eta / (2.0 * (6 * l + 4) as f64)
}
