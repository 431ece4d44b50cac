mod support;

use std::collections::HashMap;

use avmac::channel::library::*;
use avmac::jammer::*;
use avmac::listcomb::{f_of, DEFAULT_BUDGET};
use avmac::listdecode::*;
use avmac::symmetrize::{symmetrizability_index, Certificate, SymConfig, SymmetrizerDiag};
use avmac::util::digits;
use avmac::{Alphabets, Avmac, Dist};
use itertools::Itertools;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest list over every output sequence.
fn worst_list(ch: &Avmac, code: &Codebook, params: &DecoderParams) -> usize {
    let zs = ch.sizes().z;
    (0..zs.pow(code.n as u32))
        .map(|k| decode_list(ch, code, &digits(k, zs, code.n), params).unwrap().list.len())
        .max()
        .unwrap()
}

#[test]
fn list_size_respects_l_at_f_of_u() {
    let half = Dist::uniform(2);
    for ch in [x_adder_clean_y(), noisy_pair(), and_gate(), identity_pair()] {
        let rep = symmetrizability_index(&ch, 3, &SymConfig::default());
        assert!(!rep.index_is_lower_bound);
        let l = f_of(rep.index, 6, DEFAULT_BUDGET).unwrap().lower;
        for (m, n, seed) in [(2, 4, 1), (3, 4, 2), (4, 4, 3)] {
            let code = build_code(&half, &half, m, n, seed).unwrap();
            let params = DecoderParams::new(1e-9, l);
            assert!(worst_list(&ch, &code, &params) <= l, "{ch} M={m} n={n}");
        }
    }
}

#[test]
fn noiseless_pairs_are_never_missed() {
    // every x word is independent of every y word in joint type
    let code = Codebook::new(
        2,
        2,
        vec![vec![0, 0, 1, 1], vec![1, 1, 0, 0]],
        vec![vec![0, 1, 0, 1], vec![1, 0, 1, 0]],
    )
    .unwrap();
    let ch = identity_pair();
    let dec = TwoStepDecoder {
        ch: &ch,
        code: &code,
        params: DecoderParams::new(1e-9, 1),
    };
    let e = exact_error(&ch, &code, &dec, &[0; 4], DEFAULT_Z_BUDGET).unwrap();
    assert_eq!(e.mean, 0.0);
}

#[test]
fn monte_carlo_matches_enumeration() {
    let half = Dist::uniform(2);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let noisy_xor = Avmac::from_fn(Alphabets::new(2, 2, 2, 2), |x, y, s, z| {
        let flip = if s == 0 { 0.1 } else { 0.35 };
        if z == x ^ y { 1.0 - flip } else { flip }
    })
    .unwrap();
    for cfg in 0..4 {
        let code = build_code(&half, &half, 2, 6, cfg).unwrap();
        let s: Vec<usize> = (0..6).map(|_| rng.gen_range(0..2)).collect();
        let dec = TwoStepDecoder {
            ch: &noisy_xor,
            code: &code,
            params: DecoderParams::new(0.3, 2),
        };
        let exact = exact_error(&noisy_xor, &code, &dec, &s, DEFAULT_Z_BUDGET).unwrap();
        let mc = simulate_error(&noisy_xor, &code, &dec, &s, 3000, cfg).unwrap();
        let sigma = (exact.mean * (1.0 - exact.mean) / 3000.0).sqrt();
        assert!((mc.mean - exact.mean).abs() <= 3.0 * sigma, "{} vs {}", mc.mean, exact.mean);
    }
}

#[test]
fn simulation_is_reproducible() {
    let half = Dist::uniform(2);
    let ch = xor();
    let code = build_code(&half, &half, 2, 4, 0).unwrap();
    let dec = LikelihoodDecoder::new(&ch, &code, &Dist::uniform(2), 1).unwrap();
    let a = simulate_error(&ch, &code, &dec, &[0, 1, 0, 1], 500, 3).unwrap();
    let b = simulate_error(&ch, &code, &dec, &[0, 1, 0, 1], 500, 3).unwrap();
    assert_eq!(a, b);
}

fn naive_mi(a: &[Vec<usize>], b: &[Vec<usize>], n: usize) -> f64 {
    let col = |seqs: &[Vec<usize>], t: usize| seqs.iter().map(|s| s[t]).collect::<Vec<_>>();
    let mut pa: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut pb: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut pab: HashMap<(Vec<usize>, Vec<usize>), f64> = HashMap::new();
    for t in 0..n {
        *pa.entry(col(a, t)).or_default() += 1.0 / n as f64;
        *pb.entry(col(b, t)).or_default() += 1.0 / n as f64;
        *pab.entry((col(a, t), col(b, t))).or_default() += 1.0 / n as f64;
    }
    pab.iter().map(|((ka, kb), p)| p * (p / (pa[ka] * pb[kb])).log2()).sum()
}

#[test]
fn good_sets_match_direct_enumeration() {
    let code = random_code(2, 2, 4, 6, 21).unwrap();
    let (eps, l) = (0.1, 1);
    let s = vec![0; 6];
    let sets = goodcode_sets(&code, &s, 2, eps, l, DEFAULT_SUBSET_BUDGET).unwrap();
    let r = code.rate();
    let a: Vec<(usize, usize)> = (0..4)
        .cartesian_product(0..4)
        .filter(|&(i, j)| {
            // with a constant state the divergence reduces to I(X ∧ Y)
            naive_mi(&[code.xwords[i].clone()], &[code.ywords[j].clone()], 6) < eps
        })
        .collect();
    assert_eq!(sets.a_set, a);
    let b: Vec<usize> = (0..4)
        .filter(|&i| {
            let rest: Vec<usize> = (0..4).filter(|&k| k != i).collect();
            rest.iter().combinations(l).all(|ii| {
                (0..4).combinations(l + 1).all(|jj| {
                    let mut right: Vec<Vec<usize>> = ii.iter().map(|&&k| code.xwords[k].clone()).collect();
                    right.extend(jj.iter().map(|&k| code.ywords[k].clone()));
                    right.push(s.clone());
                    naive_mi(&[code.xwords[i].clone()], &right, 6) < (2 * l + 1) as f64 * r + eps
                })
            })
        })
        .collect();
    assert_eq!(sets.b_set, b);
}

#[test]
fn good_sets_vacuous_when_m_equals_l() {
    let half = Dist::uniform(2);
    let code = build_code(&half, &half, 2, 4, 9).unwrap();
    let sets = goodcode_sets(&code, &[0, 1, 1, 0], 2, 0.01, 2, DEFAULT_SUBSET_BUDGET).unwrap();
    assert_eq!(sets.b_set, vec![0, 1]);
    assert_eq!(sets.c_set, vec![0, 1]);
}

#[test]
fn noiseless_product_code_has_empty_complements() {
    let code = Codebook::new(
        2,
        2,
        vec![vec![0, 0, 1, 1], vec![1, 1, 0, 0]],
        vec![vec![0, 1, 0, 1], vec![1, 0, 1, 0]],
    )
    .unwrap();
    let rep = goodcode_check(&code, &[vec![0; 4]], 1, 0.5, 1, DEFAULT_SUBSET_BUDGET).unwrap();
    let e = &rep.entries[0];
    assert_eq!((e.a_complement, e.b_complement, e.c_complement), (0, 0, 0));
    assert!(rep.passes);
}

#[test]
fn sampler_reproduces_product_law() {
    // any table symmetrizes a channel whose output ignores the inputs
    let ch = Avmac::from_fn(Alphabets::new(2, 2, 2, 2), |_, _, _, _| 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rows: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..0.9)).collect();
    let cert = SymmetrizerDiag::from_fn(1, 2, 2, 2, |t| vec![rows[t[0]], 1.0 - rows[t[0]]]);
    let spec = AttackSpec::new(&ch, Certificate::Diag(cert), 1e-9, 1, 0).unwrap();
    let code = random_code(2, 2, 2, 3, 4).unwrap();
    let samples = 200_000;
    let mut counts = [0usize; 8];
    for t in 0..samples {
        let (_, s) = sample_attack_state(&spec, &code, &mut trial_rng(77, t)).unwrap();
        counts[s[0] * 4 + s[1] * 2 + s[2]] += 1;
    }
    let mut tv = 0.0;
    for (k, &c) in counts.iter().enumerate() {
        let s = digits(k, 2, 3);
        let mut p = 0.0;
        for (i, j) in (0..2).cartesian_product(0..2) {
            let q: f64 = (0..3)
                .map(|t| {
                    let r = rows[code.xwords[i][t] * 2 + code.ywords[j][t]];
                    if s[t] == 0 { r } else { 1.0 - r }
                })
                .product();
            p += q / 4.0;
        }
        tv += (c as f64 / samples as f64 - p).abs() / 2.0;
    }
    assert!(tv < 0.01, "{tv}");
}

#[test]
fn attack_verdict_survives_message_relabeling() {
    let ch = swap_symmetric();
    let rep = symmetrizability_index(&ch, 1, &SymConfig::default());
    let spec = AttackSpec::from_report(&ch, &rep, 1, 600, 3).unwrap();
    let code = random_code(2, 2, 8, 4, 6).unwrap();
    let perm: Vec<usize> = (0..8).rev().collect();
    let relabeled = code.permuted(&perm, &perm);
    let mut verdicts = vec![];
    for c in [&code, &relabeled] {
        let dec = LikelihoodDecoder::new(&ch, c, &Dist::uniform(4), 1).unwrap();
        verdicts.push(run_attack(&ch, c, &dec, 1, &spec).unwrap().pass);
    }
    assert_eq!(verdicts, vec![true, true]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gamma_grows_with_eta(seed in 0u64..1000, zk in 0usize..16, e1 in 0.0f64..0.5, e2 in 0.0f64..0.5) {
        let half = Dist::uniform(2);
        let ch = noisy_pair();
        let code = build_code(&half, &half, 3, 4, seed).unwrap();
        let z = digits(zk * 13 % 256, 4, 4);
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = decode_list(&ch, &code, &z, &DecoderParams::new(lo, 2)).unwrap();
        let b = decode_list(&ch, &code, &z, &DecoderParams::new(hi, 2)).unwrap();
        prop_assert!(a.gamma.iter().all(|p| b.gamma.contains(p)));
    }

    #[test]
    fn decoding_commutes_with_message_relabeling(seed in 0u64..1000, zk in 0usize..64, rot in 1usize..3) {
        let half = Dist::uniform(2);
        let ch = x_adder_clean_y();
        let code = build_code(&half, &half, 3, 4, seed).unwrap();
        let px: Vec<usize> = (0..3).map(|k| (k + rot) % 3).collect();
        let py: Vec<usize> = (0..3).rev().collect();
        let relabeled = code.permuted(&px, &py);
        let z = digits(zk * 37 % 1296, 6, 4);
        let params = DecoderParams::new(0.2, 4);
        let a = decode_list(&ch, &code, &z, &params).unwrap();
        let b = decode_list(&ch, &relabeled, &z, &params).unwrap();
        prop_assert_eq!(a.fallback_used, b.fallback_used);
        if !a.fallback_used {
            // new index k holds old message px[k]
            let mut mapped: Vec<(usize, usize)> = b.list.iter().map(|&(i, j)| (px[i], py[j])).collect();
            mapped.sort_unstable();
            prop_assert_eq!(mapped, a.list);
        }
    }
}
