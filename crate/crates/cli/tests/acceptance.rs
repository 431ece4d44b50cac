//! One PASS/FAIL line per acceptance criterion.

#[path = "../../core/tests/support/channels.rs"]
#[allow(dead_code)]
mod channels;
#[path = "../../core/tests/support/grid.rs"]
#[allow(dead_code)]
mod grid;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use avmac::capacity::{pentagon, random_code_region};
use avmac::channel::library::*;
use avmac::jammer::{run_attack, diag_bound, AttackSpec};
use avmac::listcomb::{f_of, g_of, g_upper_bound, DEFAULT_BUDGET};
use avmac::listdecode::*;
use avmac::symmetrize::*;
use avmac::types::{divergence, mutual_information, variational_distance, Axis, JointDist};
use avmac::util::digits;
use avmac::{Alphabets, Avmac, Dist};
use channels::{random_channel, symmetric_binary_channel};
use grid::{grid_verdict, GridMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dist(n: usize, rng: &mut impl Rng) -> Dist {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    Dist::from_weights(&w).unwrap()
}

fn criterion_1() -> Result<(), String> {
    for (a, want) in [(1, 1), (2, 2), (3, 5)] {
        let g = g_of(a, 6, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        if !g.exact || g.lower != want || g.lower > g_upper_bound(a) || g_upper_bound(a) != (a - 1).pow(2) + 1 {
            return Err(format!("g({a}) = {g:?}"));
        }
    }
    for (u, want) in [(0, 1), (1, 4)] {
        let f = f_of(u, 6, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        if !f.exact || f.lower != want || want != (u + 1).pow(2) {
            return Err(format!("f({u}) = {f:?}"));
        }
    }
    Ok(())
}

fn criterion_2() -> Result<(), String> {
    let cfg = SymConfig::default();
    let and = symmetrizability_index(&and_gate(), 2, &cfg);
    if and.index != 0 || and.index_is_lower_bound {
        return Err(format!("AND index {}", and.index));
    }
    let swap = swap_symmetric();
    let r = check_diag_symmetrizable(&swap, 1, &cfg).map_err(|e| e.to_string())?;
    let cert = r.certificate.ok_or("swap channel: no certificate")?;
    let residual = verify_certificate(&swap, &cert).map_err(|e| e.to_string())?;
    if !r.feasible || residual > 1e-9 {
        return Err(format!("swap certificate residual {residual}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut chans: Vec<Avmac> = (0..14)
        .map(|_| random_channel(Alphabets::new(2, 2, 2, 2), &mut rng))
        .collect();
    chans.extend((0..10).map(|_| symmetric_binary_channel(&mut rng)));
    let mut disagreements = Vec::new();
    for (k, ch) in chans.iter().enumerate() {
        for mode in [GridMode::Diag, GridMode::RectX, GridMode::RectY] {
            let lp = match mode {
                GridMode::Diag => check_diag_symmetrizable(ch, 1, &cfg),
                GridMode::RectX => check_rect_symmetrizable(ch, 1, 0, &cfg),
                GridMode::RectY => check_rect_symmetrizable(ch, 0, 1, &cfg),
            }
            .map_err(|e| e.to_string())?;
            let v = grid_verdict(ch, mode, 64, lp.min_residual, DEFAULT_TOL);
            if !v.consistent_with(lp.feasible) {
                disagreements.push(format!("channel {k} {mode:?}: lp {} grid {:?}", lp.min_residual, v));
            }
        }
    }
    if disagreements.is_empty() {
        Ok(())
    } else {
        Err(disagreements.join("; "))
    }
}

fn criterion_3() -> Result<(), String> {
    let tol = avmac::capacity::DEFAULT_TOL;
    let adder_region = random_code_region(&adder(), 4, tol).map_err(|e| e.to_string())?;
    let best = adder_region.region.max_sum_rate();
    if (best - 1.5).abs() > 1e-3 {
        return Err(format!("adder max sum-rate {best}"));
    }
    let xor_region = random_code_region(&xor(), 4, tol).map_err(|e| e.to_string())?;
    let worst = xor_region
        .pentagons
        .iter()
        .map(|p| p.r1_max.max(p.r2_max).max(p.rsum_max))
        .fold(0.0f64, f64::max);
    if worst > 1e-6 || xor_region.region.max_sum_rate() > 1e-6 {
        return Err(format!("xor pentagon bound {worst}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for k in 0..100 {
        let sizes = Alphabets::new(rng.gen_range(2..4), rng.gen_range(2..4), rng.gen_range(1..4), rng.gen_range(2..4));
        let ch = random_channel(sizes, &mut rng);
        let px = random_dist(sizes.x, &mut rng);
        let py = random_dist(sizes.y, &mut rng);
        let p = pentagon(&ch, &px, &py, tol).map_err(|e| e.to_string())?;
        if p.rsum_max < p.r1_max.max(p.r2_max) - 2.0 * tol {
            return Err(format!("channel {k}: {p:?}"));
        }
    }
    Ok(())
}

fn criterion_4() -> Result<(), String> {
    let ch = swap_symmetric();
    let rep = symmetrizability_index(&ch, 1, &SymConfig::default());
    let spec = AttackSpec::from_report(&ch, &rep, 1, 2000, 7).map_err(|e| e.to_string())?;
    let code = random_code(2, 2, 32, 6, 11).map_err(|e| e.to_string())?;
    let dec = LikelihoodDecoder::new(&ch, &code, &Dist::uniform(4), 1).map_err(|e| e.to_string())?;
    let r = run_attack(&ch, &code, &dec, 1, &spec).map_err(|e| e.to_string())?;
    let bound = diag_bound(32, 1, 1).map_err(|e| e.to_string())?;
    println!("    estimate {:.4} ± {:.4}, bound {bound:.6}", r.estimate, r.std_err);
    if (bound - 0.469238).abs() > 1e-6 || r.estimate < 0.469238 - 3.0 * r.std_err {
        return Err(format!("{r:?}"));
    }
    Ok(())
}

fn worst_list(ch: &Avmac, code: &Codebook, params: &DecoderParams) -> usize {
    let zs = ch.sizes().z;
    (0..zs.pow(code.n as u32))
        .map(|k| decode_list(ch, code, &digits(k, zs, code.n), params).unwrap().list.len())
        .max()
        .unwrap()
}

fn criterion_5() -> Result<(), String> {
    let half = Dist::uniform(2);
    for (ch, configs) in [
        (x_adder_clean_y(), vec![(3, 4), (4, 4), (2, 6)]),
        (noisy_pair(), vec![(4, 4), (3, 6)]),
        (and_gate(), vec![(4, 4), (3, 6)]),
        (identity_pair(), vec![(4, 4), (3, 6)]),
    ] {
        let rep = symmetrizability_index(&ch, 3, &SymConfig::default());
        if rep.index_is_lower_bound {
            return Err(format!("{ch}: index not determined"));
        }
        let l = f_of(rep.index, 6, DEFAULT_BUDGET).map_err(|e| e.to_string())?.lower;
        for (seed, &(m, n)) in configs.iter().enumerate() {
            let code = build_code(&half, &half, m, n, seed as u64).map_err(|e| e.to_string())?;
            let params = DecoderParams::new(1e-9, l).with_step_one(StepOneMode::ConditionalTypes);
            let worst = worst_list(&ch, &code, &params);
            if worst > l {
                return Err(format!("{ch} M={m} n={n}: list of {worst} > L={l}"));
            }
        }
    }

    let code = Codebook::new(
        2,
        2,
        vec![vec![0, 0, 0, 1, 1, 1], vec![1, 1, 1, 0, 0, 0]],
        vec![vec![0, 1, 1, 0, 1, 1], vec![1, 0, 1, 1, 0, 1]],
    )
    .map_err(|e| e.to_string())?;
    // every x word and y word have a product joint type
    let ch = identity_pair();
    let dec = TwoStepDecoder {
        ch: &ch,
        code: &code,
        params: DecoderParams::new(1e-9, 1),
    };
    let e = exact_error(&ch, &code, &dec, &[0; 6], DEFAULT_Z_BUDGET).map_err(|e| e.to_string())?;
    if e.mean != 0.0 {
        return Err(format!("identity pair error {}", e.mean));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let trials = 2000;
    for k in 0..10 {
        let ch = random_channel(Alphabets::new(2, 2, 2, 2), &mut rng);
        let n = [4, 6][k % 2];
        let code = build_code(&half, &half, 2, n, k as u64).map_err(|e| e.to_string())?;
        let s: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let eta = rng.gen_range(0.05..0.6);
        let dec = TwoStepDecoder {
            ch: &ch,
            code: &code,
            params: DecoderParams::new(eta, 1 + k % 2),
        };
        let exact = exact_error(&ch, &code, &dec, &s, DEFAULT_Z_BUDGET).map_err(|e| e.to_string())?;
        let mc = simulate_error(&ch, &code, &dec, &s, trials, 100 + k as u64).map_err(|e| e.to_string())?;
        let sigma = (exact.mean * (1.0 - exact.mean) / trials as f64).sqrt();
        if (mc.mean - exact.mean).abs() > 3.0 * sigma {
            return Err(format!("config {k}: mc {} exact {}", mc.mean, exact.mean));
        }
    }
    Ok(())
}

fn joint(shape: &[usize], rng: &mut impl Rng) -> JointDist {
    let len: usize = shape.iter().product();
    let w: Vec<f64> = (0..len).map(|_| rng.gen::<f64>()).collect();
    let total: f64 = w.iter().sum();
    let axes = shape.iter().enumerate().map(|(k, &s)| Axis::new(format!("a{k}"), s)).collect();
    JointDist::new(axes, w.iter().map(|v| v / total).collect()).unwrap()
}

fn entropy_of(probs: &[f64]) -> f64 {
    probs.iter().filter(|&&p| p > 0.0).map(|p| -p * p.log2()).sum()
}

fn criterion_6() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 0..1000 {
        let j = joint(&[2, 3, 2], &mut rng);
        let mi = |a: &[usize], b: &[usize], c: &[usize]| mutual_information(&j, a, b, c).unwrap();
        let lhs = mi(&[0, 1], &[2], &[]);
        let rhs = mi(&[1], &[2], &[]) + mi(&[0], &[2], &[1]);
        // H(XY) + H(Z) − H(XYZ) straight from the table
        let t = j.table();
        let pxy: Vec<f64> = (0..6).map(|c| t[2 * c] + t[2 * c + 1]).collect();
        let pz: Vec<f64> = (0..2).map(|z| (0..6).map(|c| t[2 * c + z]).sum()).collect();
        let oracle = entropy_of(&pxy) + entropy_of(&pz) - entropy_of(t);
        if (lhs - rhs).abs() > 1e-12 || (lhs - oracle).abs() > 1e-12 {
            return Err(format!("joint {k}: {lhs} {rhs} {oracle}"));
        }
    }
    for k in 0..1000 {
        let p = joint(&[2, 3], &mut rng);
        let q = joint(&[2, 3], &mut rng);
        let d = divergence(&p, &q).unwrap();
        let v = variational_distance(&p, &q).unwrap();
        let self_d = divergence(&p, &p).unwrap();
        if d <= 0.0 || self_d != 0.0 || (v / 2.0).powi(2) > std::f64::consts::LN_2 / 2.0 * d + 1e-12 {
            return Err(format!("pair {k}: D={d} V={v} D(p|p)={self_d}"));
        }
    }
    for n in 1..=6 {
        let ch = random_channel(Alphabets::new(2, 2, 2, 2), &mut rng);
        let x: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let s: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let total: f64 = (0..1usize << n)
            .map(|k| ch.nfold_prob(&x, &y, &s, &digits(k, 2, n)).unwrap())
            .sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(format!("n={n}: total {total}"));
        }
    }
    Ok(())
}

fn run_cli(dir: &Path, args: &[&str], threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_avmac"))
        .args(args)
        .current_dir(dir)
        .env("AVMAC_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn criterion_7() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = dir.path();
    std::fs::write(dir.join("xor.json"), avmac::channel::serialize_channel(&xor())).unwrap();
    let commands: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (vec!["validate", "--channel", "xor.json"], vec![]),
        (
            vec!["sym", "--channel", "builtin:swap", "--u-max", "1", "--cert-out", "cert.json"],
            vec!["cert.json"],
        ),
        (
            vec!["capacity", "--channel", "builtin:adder", "--grid-k", "3", "--csv", "region.csv"],
            vec!["region.csv"],
        ),
        (vec!["gtable", "--a-max", "3", "--csv", "g.csv"], vec!["g.csv"]),
        (
            vec![
                "attack", "--channel", "builtin:swap", "--certificate", "cert.json", "--m", "8", "--n", "4",
                "--code", "random", "--decoder", "likelihood", "--trials", "300",
            ],
            vec![],
        ),
        (
            vec![
                "decode-sim", "--channel", "xor.json", "--m", "2", "--n", "4", "--l", "2", "--eta", "0.2",
                "--state", "0101", "--random-states", "2", "--trials", "300",
            ],
            vec![],
        ),
        (
            vec!["goodcode", "--channel", "xor.json", "--m", "4", "--n", "6", "--random-states", "2"],
            vec![],
        ),
    ];
    for (args, side_files) in &commands {
        let mut runs = Vec::new();
        for threads in ["1", "4"] {
            let mut bytes = run_cli(dir, args, threads)?;
            for f in side_files {
                bytes.extend(std::fs::read(dir.join(f)).map_err(|e| e.to_string())?);
            }
            runs.push(bytes);
        }
        if runs[0] != runs[1] {
            return Err(format!("{} differs between runs", args[0]));
        }
        std::fs::write(dir.join("report.json"), &runs[0][..]).ok();
        let report = run_cli(dir, args, "2")?;
        std::fs::write(dir.join("report.json"), &report).unwrap();
        let again = run_cli(dir, &["render", "--report", "report.json", "--format", "json"], "1")?;
        if again != report {
            return Err(format!("{} report does not round-trip through render", args[0]));
        }
        let csv1 = run_cli(dir, &["render", "--report", "report.json"], "1")?;
        let csv2 = run_cli(dir, &["render", "--report", "report.json"], "1")?;
        if csv1 != csv2 || csv1.is_empty() {
            return Err(format!("{} csv rendering unstable", args[0]));
        }
    }
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Result<(), String>, Duration); 7] = [
        ("combinatorics exactness", criterion_1, Duration::from_secs(120)),
        ("symmetrizability decisions", criterion_2, Duration::MAX),
        ("capacity region", criterion_3, Duration::from_secs(300)),
        ("symmetrizing attack", criterion_4, Duration::from_secs(300)),
        ("decoder properties", criterion_5, Duration::MAX),
        ("information measures", criterion_6, Duration::MAX),
        ("reproducibility", criterion_7, Duration::MAX),
    ];
    let mut failed = Vec::new();
    for (k, (name, check, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|()| {
            if elapsed > limit {
                Err(format!("took {elapsed:?}, limit {limit:?}"))
            } else {
                Ok(())
            }
        });
        match outcome {
            Ok(()) => println!("PASS {} {name} ({:.1}s)", k + 1, elapsed.as_secs_f64()),
            Err(e) => {
                println!("FAIL {} {name} ({:.1}s): {e}", k + 1, elapsed.as_secs_f64());
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
