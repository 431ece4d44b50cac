mod render;
mod report;

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use avmac::capacity::{random_code_region, region_csv};
use avmac::channel::{library, parse_channel, serialize_channel};
use avmac::jammer::{run_attack, AttackSpec};
use avmac::listcomb::{f_of, g_of};
use avmac::listdecode::{
    build_code, exact_error, goodcode_check, random_code, simulate_error, trial_rng, Codebook, DecoderParams,
    LikelihoodDecoder, ListDecoder, StepOneMode, TwoStepDecoder,
};
use avmac::symmetrize::{
    symmetrizability_index, verify_certificate, Certificate, CertificateFile, SymConfig,
};
use avmac::{Avmac, Dist};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use report::{canonical_json, emit, fmt_float, sha256_hex, Report};

/// Seed used whenever none is given.
const DEFAULT_SEED: u64 = 20_240_611;

#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage_check(ok: bool, msg: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Usage(msg.into()).into())
    }
}

#[derive(Parser)]
#[command(name = "avmac", version, about = "Arbitrarily varying multiple-access channel toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a channel file.
    Validate(ValidateArgs),
    /// Symmetrizability index with certificates.
    Sym(SymArgs),
    /// Random-code rate region over an input grid.
    Capacity(CapacityArgs),
    /// Table of g(A) and f(u).
    Gtable(GtableArgs),
    /// Monte Carlo of the symmetrizing jammer against a random code.
    Attack(AttackArgs),
    /// List-decoding error under fixed state sequences.
    DecodeSim(DecodeSimArgs),
    /// Good-code set sizes of a random code.
    Goodcode(GoodcodeArgs),
    /// Re-render a saved report as CSV or JSON.
    Render(RenderArgs),
}

#[derive(Args, Serialize)]
struct OutputArgs {
    /// Report destination (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ValidateArgs {
    /// Channel file, or `builtin:<name>`.
    #[arg(long)]
    channel: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct SymArgs {
    #[arg(long)]
    channel: String,
    #[arg(long, default_value_t = 2)]
    u_max: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Also write the certificate at the index level.
    #[arg(long)]
    cert_out: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct CapacityArgs {
    #[arg(long)]
    channel: String,
    #[arg(long, default_value_t = 4)]
    grid_k: usize,
    #[arg(long, default_value_t = avmac::capacity::DEFAULT_TOL)]
    tol: f64,
    /// Also write the hull vertices as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct GtableArgs {
    #[arg(long, default_value_t = 3)]
    a_max: usize,
    /// Largest side searched.
    #[arg(long, default_value_t = 6)]
    m_max: usize,
    /// Search nodes per side.
    #[arg(long, default_value_t = avmac::listcomb::DEFAULT_BUDGET)]
    budget: u64,
    /// Also write the g rows as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CodeKind {
    /// Constant composition with uniform types.
    Typed,
    /// Distinct uniformly drawn words.
    Random,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum DecoderKind {
    TwoStep,
    /// Top-L pairs under the state-averaged channel.
    Likelihood,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum StepOne {
    Exhaustive,
    ConditionalTypes,
}

#[derive(Args, Serialize)]
struct CodeArgs {
    /// Messages per sender.
    #[arg(long, default_value_t = 4)]
    m: usize,
    /// Block length.
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, value_enum, default_value_t = CodeKind::Typed)]
    code: CodeKind,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    code_seed: u64,
}

#[derive(Args, Serialize)]
struct DecoderArgs {
    /// List size.
    #[arg(long, default_value_t = 1)]
    l: usize,
    #[arg(long, value_enum, default_value_t = DecoderKind::TwoStep)]
    decoder: DecoderKind,
    /// Divergence threshold of the two-step decoder.
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long, value_enum, default_value_t = StepOne::Exhaustive)]
    step_one: StepOne,
    /// State sequences tried per candidate pair.
    #[arg(long, default_value_t = avmac::listdecode::DEFAULT_S_BUDGET)]
    s_budget: usize,
}

#[derive(Args, Serialize)]
struct AttackArgs {
    #[arg(long)]
    channel: String,
    /// Certificate file; computed from the channel when absent.
    #[arg(long)]
    certificate: Option<PathBuf>,
    /// Search depth when computing the certificate.
    #[arg(long, default_value_t = 2)]
    u_max: usize,
    /// Certificate level (defaults to the index).
    #[arg(long)]
    u: Option<usize>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    decoder: DecoderArgs,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Count errors only outside the jammer's rows and columns.
    #[arg(long)]
    restricted: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct StateArgs {
    /// State sequence, one digit per letter or comma separated.
    #[arg(long = "state")]
    states: Vec<String>,
    /// Additional uniformly drawn state sequences.
    #[arg(long, default_value_t = 0)]
    random_states: usize,
}

#[derive(Args, Serialize)]
struct DecodeSimArgs {
    #[arg(long)]
    channel: String,
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    decoder: DecoderArgs,
    #[command(flatten)]
    states: StateArgs,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Enumerate every output sequence instead of sampling.
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = avmac::listdecode::DEFAULT_Z_BUDGET)]
    z_budget: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct GoodcodeArgs {
    /// Channel whose alphabets the code uses.
    #[arg(long)]
    channel: String,
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long, default_value_t = 1)]
    l: usize,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[command(flatten)]
    states: StateArgs,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Message subsets examined per state.
    #[arg(long, default_value_t = avmac::listdecode::DEFAULT_SUBSET_BUDGET)]
    budget: u128,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    report: PathBuf,
    /// `csv` or `json`.
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn builtin(name: &str) -> Option<Avmac> {
    Some(match name {
        "xor" => library::xor(),
        "and" => library::and_gate(),
        "adder" => library::adder(),
        "identity-pair" => library::identity_pair(),
        "swap" => library::swap_symmetric(),
        "x-adder-clean-y" => library::x_adder_clean_y(),
        "noisy-pair" => library::noisy_pair(),
        "x-state-xor" => library::x_state_xor(),
        _ => return None,
    })
}

/// Channel plus the bytes it was read from.
fn load_channel(spec: &str) -> Result<(Avmac, Vec<u8>)> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        let ch = builtin(name).ok_or_else(|| Usage(format!("unknown builtin channel {name:?}")))?;
        let text = serialize_channel(&ch);
        return Ok((ch, text.into_bytes()));
    }
    let bytes = fs::read(spec).with_context(|| format!("reading channel file {spec}"))?;
    let text = std::str::from_utf8(&bytes).with_context(|| format!("{spec}: not UTF-8"))?;
    let ch = parse_channel(text).with_context(|| spec.to_string())?;
    Ok((ch, bytes))
}

fn channel_input(report: &mut Report, spec: &str) -> Result<Avmac> {
    let (ch, bytes) = load_channel(spec)?;
    report.input("channel", spec, &bytes);
    Ok(ch)
}

fn make_code(ch: &Avmac, args: &CodeArgs) -> Result<Codebook> {
    usage_check(args.m >= 1, "--m must be positive")?;
    usage_check(args.n >= 1, "--n must be positive")?;
    let sizes = ch.sizes();
    let code = match args.code {
        CodeKind::Typed => build_code(
            &Dist::uniform(sizes.x),
            &Dist::uniform(sizes.y),
            args.m,
            args.n,
            args.code_seed,
        )?,
        CodeKind::Random => random_code(sizes.x, sizes.y, args.m, args.n, args.code_seed)?,
    };
    Ok(code)
}

fn make_decoder<'a>(ch: &'a Avmac, code: &'a Codebook, args: &DecoderArgs) -> Result<Box<dyn ListDecoder + 'a>> {
    usage_check(args.l >= 1, "--l must be positive")?;
    usage_check(args.eta >= 0.0 && args.eta.is_finite(), "--eta must be finite and nonnegative")?;
    Ok(match args.decoder {
        DecoderKind::TwoStep => {
            let mode = match args.step_one {
                StepOne::Exhaustive => StepOneMode::Exhaustive,
                StepOne::ConditionalTypes => StepOneMode::ConditionalTypes,
            };
            let mut params = DecoderParams::new(args.eta, args.l).with_step_one(mode);
            params.s_budget = args.s_budget;
            Box::new(TwoStepDecoder { ch, code, params })
        }
        DecoderKind::Likelihood => Box::new(LikelihoodDecoder::new(ch, code, &Dist::uniform(ch.sizes().s), args.l)?),
    })
}

fn parse_state(text: &str, n: usize, s_size: usize) -> Result<Vec<usize>> {
    let letters: Result<Vec<usize>, _> = if text.contains(',') {
        text.split(',').map(|t| t.trim().parse::<usize>().map_err(|e| e.to_string())).collect()
    } else {
        text.chars()
            .map(|c| c.to_digit(36).map(|d| d as usize).ok_or_else(|| format!("bad letter {c:?}")))
            .collect()
    };
    let s = letters.map_err(|e| Usage(format!("--state {text:?}: {e}")))?;
    usage_check(s.len() == n, format!("--state {text:?} has length {}, expected {n}", s.len()))?;
    usage_check(
        s.iter().all(|&v| v < s_size),
        format!("--state {text:?} uses a letter outside the {s_size}-letter state alphabet"),
    )?;
    Ok(s)
}

fn collect_states(args: &StateArgs, n: usize, s_size: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let mut out: Vec<Vec<usize>> = args.states.iter().map(|t| parse_state(t, n, s_size)).collect::<Result<_>>()?;
    // stream 2 keeps state draws apart from the code streams
    let mut rng = trial_rng(seed, 2);
    for _ in 0..args.random_states {
        out.push((0..n).map(|_| rng.gen_range(0..s_size)).collect());
    }
    if out.is_empty() {
        out.push(vec![0; n]);
    }
    Ok(out)
}

fn cmd_validate(args: &ValidateArgs) -> Result<String> {
    let mut report = Report::new("validate", args);
    let ch = channel_input(&mut report, &args.channel)?;
    let sizes = ch.sizes();
    report.result = json!({
        "x": sizes.x,
        "y": sizes.y,
        "s": sizes.s,
        "z": sizes.z,
        "entries": sizes.kernel_len(),
        "exact": ch.is_exact(),
        "canonical_sha256": sha256_hex(serialize_channel(&ch).as_bytes()),
    });
    Ok(canonical_json(&report.to_value()))
}

fn cmd_sym(args: &SymArgs) -> Result<String> {
    usage_check(args.tol > 0.0 && args.tol.is_finite(), "--tol must be positive")?;
    let mut report = Report::new("sym", args);
    let ch = channel_input(&mut report, &args.channel)?;
    let sym = symmetrizability_index(&ch, args.u_max, &SymConfig::with_tol(args.tol));
    if let Some(path) = &args.cert_out {
        let cert = sym
            .certificate_at(sym.index)
            .ok_or_else(|| anyhow!("no certificate: the channel is not symmetrizable up to u = {}", args.u_max))?;
        let residual = verify_certificate(&ch, cert)?;
        let file = CertificateFile {
            certificate: cert.clone(),
            residual,
            tol: args.tol,
        };
        let text = canonical_json(&serde_json::to_value(&file)?);
        emit(&text, Some(path))?;
    }
    report.result = serde_json::to_value(&sym)?;
    Ok(canonical_json(&report.to_value()))
}

fn cmd_capacity(args: &CapacityArgs) -> Result<String> {
    usage_check(args.grid_k >= 1, "--grid-k must be positive")?;
    usage_check(args.tol > 0.0 && args.tol.is_finite(), "--tol must be positive")?;
    let mut report = Report::new("capacity", args);
    let ch = channel_input(&mut report, &args.channel)?;
    let region = random_code_region(&ch, args.grid_k, args.tol)?;
    if let Some(path) = &args.csv {
        emit(&region_csv(&region.region, &fmt_float), Some(path))?;
    }
    let mut result = serde_json::to_value(&region)?;
    result["max_sum_rate"] = json!(region.region.max_sum_rate());
    report.result = result;
    Ok(canonical_json(&report.to_value()))
}

fn cmd_gtable(args: &GtableArgs) -> Result<String> {
    usage_check(args.a_max >= 1, "--a-max must be positive")?;
    usage_check(
        (1..=avmac::listcomb::MAX_SIDE).contains(&args.m_max),
        format!("--m-max must lie in 1..={}", avmac::listcomb::MAX_SIDE),
    )?;
    let mut report = Report::new("gtable", args);
    let g = (1..=args.a_max)
        .map(|a| g_of(a, args.m_max, args.budget))
        .collect::<Result<Vec<_>, _>>()?;
    let f = (0..=args.a_max.saturating_sub(2))
        .filter(|&u| u + 2 <= args.a_max)
        .map(|u| f_of(u, args.m_max, args.budget))
        .collect::<Result<Vec<_>, _>>()?;
    report.result = json!({ "g": g, "f": f });
    let text = canonical_json(&report.to_value());
    if let Some(path) = &args.csv {
        emit(&render::render(&report.to_value(), "csv")?, Some(path))?;
    }
    Ok(text)
}

fn cmd_attack(args: &AttackArgs) -> Result<String> {
    usage_check(args.trials >= 1, "--trials must be positive")?;
    let mut report = Report::new("attack", args);
    let ch = channel_input(&mut report, &args.channel)?;
    let spec = match &args.certificate {
        Some(path) => {
            let bytes = fs::read(path).with_context(|| format!("reading certificate file {}", path.display()))?;
            report.input("certificate", &path.display().to_string(), &bytes);
            let file: CertificateFile =
                serde_json::from_slice(&bytes).with_context(|| format!("{}", path.display()))?;
            AttackSpec::new(&ch, file.certificate, args.tol.max(file.tol), args.trials, args.seed)?
        }
        None => {
            let sym = symmetrizability_index(&ch, args.u_max, &SymConfig::with_tol(args.tol));
            let u = args.u.unwrap_or(sym.index);
            AttackSpec::from_report(&ch, &sym, u, args.trials, args.seed)?
        }
    }
    .restricted(args.restricted);
    let code = make_code(&ch, &args.code)?;
    let decoder = make_decoder(&ch, &code, &args.decoder)?;
    let attack = run_attack(&ch, &code, decoder.as_ref(), args.decoder.l, &spec)?;
    let cert_json = serde_json::to_string(&spec.certificate)?;
    let mode = match &spec.certificate {
        Certificate::Diag(_) => "diag",
        Certificate::Rect(_) => "rect",
    };
    report.result = json!({
        "attack": attack,
        "certificate_mode": mode,
        "certificate_residual": verify_certificate(&ch, &spec.certificate)?,
        "certificate_sha256": sha256_hex(cert_json.as_bytes()),
        "channel_sha256": report.inputs[0].sha256,
    });
    Ok(canonical_json(&report.to_value()))
}

fn cmd_decode_sim(args: &DecodeSimArgs) -> Result<String> {
    usage_check(args.trials >= 1, "--trials must be positive")?;
    let mut report = Report::new("decode-sim", args);
    let ch = channel_input(&mut report, &args.channel)?;
    let code = make_code(&ch, &args.code)?;
    let decoder = make_decoder(&ch, &code, &args.decoder)?;
    let states = collect_states(&args.states, code.n, ch.sizes().s, args.seed)?;
    let mut rows = Vec::with_capacity(states.len());
    for s in &states {
        let estimate = if args.exact {
            exact_error(&ch, &code, decoder.as_ref(), s, args.z_budget)?
        } else {
            simulate_error(&ch, &code, decoder.as_ref(), s, args.trials, args.seed)?
        };
        rows.push(json!({ "s": s, "estimate": estimate }));
    }
    report.result = json!({
        "code": code,
        "rate": code.rate(),
        "states": rows,
    });
    Ok(canonical_json(&report.to_value()))
}

fn cmd_goodcode(args: &GoodcodeArgs) -> Result<String> {
    usage_check(args.eps > 0.0 && args.eps.is_finite(), "--eps must be positive")?;
    usage_check(args.l >= 1, "--l must be positive")?;
    let mut report = Report::new("goodcode", args);
    let ch = channel_input(&mut report, &args.channel)?;
    let code = make_code(&ch, &args.code)?;
    let s_size = ch.sizes().s;
    let states = collect_states(&args.states, code.n, s_size, args.seed)?;
    let check = goodcode_check(&code, &states, s_size, args.eps, args.l, args.budget)?;
    report.result = json!({
        "code": code,
        "rate": code.rate(),
        "report": check,
    });
    Ok(canonical_json(&report.to_value()))
}

fn cmd_render(args: &RenderArgs) -> Result<String> {
    let text = fs::read_to_string(&args.report).with_context(|| format!("reading report {}", args.report.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("{}", args.report.display()))?;
    render::render(&value, &args.format).map_err(|e| {
        if e.to_string().starts_with("unknown format") {
            Usage(e.to_string()).into()
        } else {
            e
        }
    })
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("AVMAC_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| Usage(format!("AVMAC_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let (text, out) = match &cli.command {
        Command::Validate(a) => (cmd_validate(a)?, a.output.out.as_deref()),
        Command::Sym(a) => (cmd_sym(a)?, a.output.out.as_deref()),
        Command::Capacity(a) => (cmd_capacity(a)?, a.output.out.as_deref()),
        Command::Gtable(a) => (cmd_gtable(a)?, a.output.out.as_deref()),
        Command::Attack(a) => (cmd_attack(a)?, a.output.out.as_deref()),
        Command::DecodeSim(a) => (cmd_decode_sim(a)?, a.output.out.as_deref()),
        Command::Goodcode(a) => (cmd_goodcode(a)?, a.output.out.as_deref()),
        Command::Render(a) => (cmd_render(a)?, a.out.as_deref()),
    };
    emit(&text, out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
