//! The symmetrizing jammer and its average-error lower bound.

use itertools::Itertools;
use rand::seq::{index::sample, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::Avmac;
use crate::listdecode::{sample_output, trial_rng, Codebook, DecodeError, ListDecoder};
use crate::symmetrize::{verify_certificate, Certificate, SymError, SymReport};
use crate::util::binomial;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JamError {
    #[error("M = {m} must exceed the symmetrizability {u}")]
    TooFewMessages { m: usize, u: usize },
    #[error("attack not applicable: {0}")]
    NotApplicable(String),
    #[error("certificate residual {residual} exceeds tolerance {tol}")]
    BadCertificate { residual: f64, tol: f64 },
    #[error("certificate alphabets do not match the channel and code")]
    DimensionMismatch,
    #[error("L must be positive")]
    BadListSize,
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// `((M−U)/M)² (1 − L/(U+1))`, floored at zero.
pub fn diag_bound(m: usize, u: usize, l: usize) -> Result<f64, JamError> {
    if m <= u {
        return Err(JamError::TooFewMessages { m, u });
    }
    if l == 0 {
        return Err(JamError::BadListSize);
    }
    let f = (m - u) as f64 / m as f64;
    Ok((f * f * (1.0 - l as f64 / (u + 1) as f64)).max(0.0))
}

/// `(M−a)(M−b)/M² · (1 − L/((a+1)(b+1)))`, floored at zero.
pub fn rect_bound(m: usize, a: usize, b: usize, l: usize) -> Result<f64, JamError> {
    if m <= a.max(b) {
        return Err(JamError::TooFewMessages { m, u: a.max(b) });
    }
    if l == 0 {
        return Err(JamError::BadListSize);
    }
    let mm = (m * m) as f64;
    let share = ((m - a) * (m - b)) as f64 / mm;
    Ok((share * (1.0 - l as f64 / ((a + 1) * (b + 1)) as f64)).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub certificate: Certificate,
    /// Symmetrizability level the certificate realizes.
    pub u: usize,
    pub trials: usize,
    pub seed: u64,
    /// Count errors only for pairs outside the jammer's rows and columns.
    pub restricted: bool,
}

impl AttackSpec {
    /// Verifies `cert` against `ch` before accepting it.
    pub fn new(ch: &Avmac, certificate: Certificate, tol: f64, trials: usize, seed: u64) -> Result<Self, JamError> {
        let residual = verify_certificate(ch, &certificate)?;
        if residual > tol {
            return Err(JamError::BadCertificate { residual, tol });
        }
        let u = match &certificate {
            Certificate::Diag(d) => d.u,
            Certificate::Rect(r) => (r.a + 1) * (r.b + 1) - 1,
        };
        if u == 0 {
            return Err(JamError::NotApplicable("certificate has no tail arguments".into()));
        }
        Ok(AttackSpec {
            certificate,
            u,
            trials,
            seed,
            restricted: false,
        })
    }

    /// The certificate at level `u` of a symmetrizability report.
    pub fn from_report(
        ch: &Avmac,
        report: &SymReport,
        u: usize,
        trials: usize,
        seed: u64,
    ) -> Result<Self, JamError> {
        if u == 0 || report.index == 0 {
            return Err(JamError::NotApplicable("channel has symmetrizability 0".into()));
        }
        let cert = report
            .certificate_at(u)
            .ok_or_else(|| JamError::NotApplicable(format!("no certificate at u = {u}")))?;
        Self::new(ch, cert.clone(), report.tol.max(1e-12), trials, seed)
    }

    pub fn restricted(mut self, on: bool) -> Self {
        self.restricted = on;
        self
    }

    pub fn bound(&self, m: usize, l: usize) -> Result<f64, JamError> {
        match &self.certificate {
            Certificate::Diag(d) => diag_bound(m, d.u, l),
            Certificate::Rect(r) => rect_bound(m, r.a, r.b, l),
        }
    }
}

/// Messages the jammer imitates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selection {
    /// `K` with `|K| = |I_K| = |J_K| = U`, pairs ascending.
    Diag(Vec<(usize, usize)>),
    /// Ascending `I` of size `a` and `J` of size `b`.
    Rect(Vec<usize>, Vec<usize>),
}

impl Selection {
    pub fn rows(&self) -> Vec<usize> {
        match self {
            Selection::Diag(k) => k.iter().map(|p| p.0).sorted().collect(),
            Selection::Rect(i, _) => i.clone(),
        }
    }

    pub fn cols(&self) -> Vec<usize> {
        match self {
            Selection::Diag(k) => k.iter().map(|p| p.1).sorted().collect(),
            Selection::Rect(_, j) => j.clone(),
        }
    }
}

fn sorted_subset(m: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut v = sample(rng, m, k).into_vec();
    v.sort_unstable();
    v
}

fn draw(row: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (s, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return s;
        }
    }
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn check_dims(cert: &Certificate, code: &Codebook) -> Result<(), JamError> {
    let (x, y) = match cert {
        Certificate::Diag(d) => (d.x_size, d.y_size),
        Certificate::Rect(r) => (r.x_size, r.y_size),
    };
    if x != code.x_size || y != code.y_size {
        return Err(JamError::DimensionMismatch);
    }
    Ok(())
}

/// Uniform selection, then a state drawn letterwise from the certificate row
/// indexed by the selected codewords' letters.
pub fn sample_attack_state(
    spec: &AttackSpec,
    code: &Codebook,
    rng: &mut impl Rng,
) -> Result<(Selection, Vec<usize>), JamError> {
    check_dims(&spec.certificate, code)?;
    let m = code.messages();
    match &spec.certificate {
        Certificate::Diag(d) => {
            if m <= d.u {
                return Err(JamError::TooFewMessages { m, u: d.u });
            }
            let rows = sorted_subset(m, d.u, rng);
            let mut cols = sorted_subset(m, d.u, rng);
            cols.shuffle(rng);
            let k: Vec<(usize, usize)> = rows.into_iter().zip(cols).sorted().collect();
            let s = (0..code.n)
                .map(|t| {
                    let tail: Vec<usize> = k
                        .iter()
                        .map(|&(i, j)| code.xwords[i][t] * d.y_size + code.ywords[j][t])
                        .collect();
                    draw(d.row(&tail), rng)
                })
                .collect();
            Ok((Selection::Diag(k), s))
        }
        Certificate::Rect(r) => {
            if m <= r.a.max(r.b) {
                return Err(JamError::TooFewMessages { m, u: r.a.max(r.b) });
            }
            let is = sorted_subset(m, r.a, rng);
            let js = sorted_subset(m, r.b, rng);
            let s = (0..code.n)
                .map(|t| {
                    let xs: Vec<usize> = is.iter().map(|&i| code.xwords[i][t]).collect();
                    let ys: Vec<usize> = js.iter().map(|&j| code.ywords[j][t]).collect();
                    draw(r.row(&xs, &ys), rng)
                })
                .collect();
            Ok((Selection::Rect(is, js), s))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub m: usize,
    pub u: usize,
    pub l: usize,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub restricted: bool,
    pub estimate: f64,
    pub std_err: f64,
    pub bound: f64,
    /// `estimate ≥ bound − 3·std_err`.
    pub pass: bool,
}

/// Monte Carlo over the selection, the message pair and the channel noise.
/// Decoded lists are truncated to their first `l` pairs.
pub fn run_attack(
    ch: &Avmac,
    code: &Codebook,
    decoder: &dyn ListDecoder,
    l: usize,
    spec: &AttackSpec,
) -> Result<AttackReport, JamError> {
    if spec.trials == 0 {
        return Err(JamError::Decode(DecodeError::BadParams("trials must be positive".into())));
    }
    let bound = spec.bound(code.messages(), l)?;
    let m = code.messages();
    let errors: Vec<bool> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(spec.seed, t as u64);
            let (sel, s) = sample_attack_state(spec, code, &mut rng)?;
            let i = rng.gen_range(0..m);
            let j = rng.gen_range(0..m);
            if spec.restricted && (sel.rows().contains(&i) || sel.cols().contains(&j)) {
                return Ok(false);
            }
            let z = sample_output(ch, &code.xwords[i], &code.ywords[j], &s, &mut rng);
            let list = decoder.decode(&z)?;
            Ok(!list.iter().take(l).any(|&p| p == (i, j)))
        })
        .collect::<Result<_, JamError>>()?;
    let trials = spec.trials;
    let estimate = errors.iter().filter(|&&e| e).count() as f64 / trials as f64;
    let std_err = (estimate * (1.0 - estimate) / trials as f64).sqrt();
    Ok(AttackReport {
        m,
        u: spec.u,
        l,
        n: code.n,
        trials,
        seed: spec.seed,
        restricted: spec.restricted,
        estimate,
        std_err,
        bound,
        pass: estimate >= bound - 3.0 * std_err,
    })
}

/// All `K ⊆ [M]²` with `|K| = |I_K| = |J_K| = u`, pairs ascending.
pub fn diagonal_sets(m: usize, u: usize) -> Vec<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for rows in (0..m).combinations(u) {
        for cols in (0..m).permutations(u) {
            let k: Vec<(usize, usize)> = rows.iter().copied().zip(cols).collect();
            out.push(k);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaveOneOutCounts {
    pub p_u: u128,
    pub p_u1: u128,
    /// Pairs `(K, (i, j))` with `K ∪ {(i, j)}` a `(u+1)`-diagonal.
    pub extensions: u128,
}

/// Exhaustive bookkeeping behind the averaging step of the bound.
pub fn leave_one_out_counts(m: usize, u: usize) -> LeaveOneOutCounts {
    let p_u = diagonal_sets(m, u);
    let p_u1 = diagonal_sets(m, u + 1).len() as u128;
    let mut extensions = 0u128;
    for k in &p_u {
        for i in 0..m {
            for j in 0..m {
                if k.iter().all(|&(a, b)| a != i && b != j) {
                    extensions += 1;
                }
            }
        }
    }
    LeaveOneOutCounts {
        p_u: p_u.len() as u128,
        p_u1,
        extensions,
    }
}

/// `C(M, u)² u!`.
pub fn diagonal_count(m: usize, u: usize) -> u128 {
    let c = binomial(m as u64, u as u64);
    c * c * (1..=u as u128).product::<u128>()
}
