use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Value};

use robustness_envelope::bounds::{bounds_table, BOUNDS_CSV_HEADER};
use robustness_envelope::classifiers::{parse_classifier, Classifier};
use robustness_envelope::image_space::{decode_image, ImageTensor, PerturbationBudget, SpaceParams};
use robustness_envelope::perturb::{
    attack_sum_classifier, find_perturbation, minimal_perturbation, SearchLimits,
};
use robustness_envelope::robustness::{
    class_robust_fraction, Limits, Method, Sampler, REPORT_CSV_HEADER,
};
use robustness_envelope::verify::{run_suites, Mutant, Suite, VerifyConfig};
use robustness_envelope::Error;

const THREADS_ENV: &str = "ROBUSTNESS_ENVELOPE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "robustness-envelope", version, about = "Robustness bounds and checkers for discrete image spaces")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Upper and lower bounds on attainable robustness, one row per norm.
    Bounds(BoundsArgs),
    /// Run verification suites; exits 1 if any check fails.
    Verify(VerifyArgs),
    /// Find a differently labelled image near a given one.
    Attack(AttackArgs),
    /// Robust fraction of one class.
    Estimate(EstimateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpaceArgs {
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    h: Option<u32>,
    #[arg(long)]
    b: Option<u32>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// Robust fraction, strictly between 0 and 1.
    #[arg(long, conflicts_with = "c", required_unless_present = "c")]
    r: Option<f64>,
    /// Count-norm constant; sets r = 2 exp(-2 c^2).
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    n: u32,
    #[arg(long)]
    h: u32,
    #[arg(long)]
    b: u32,
    /// Norms, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    p: Vec<u32>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Suite name or `all`.
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    cap_images: Option<u128>,
    #[arg(long)]
    cap_subsets: Option<u64>,
    /// Smaller sample counts.
    #[arg(long)]
    quick: bool,
    #[arg(long, hide = true)]
    mutant: Option<String>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum AttackMethod {
    /// Exact nearest differently labelled image by full scan.
    Exhaustive,
    /// Closed form for the sum classifier.
    Sum,
    /// Randomized cell search within an L2 radius.
    Findpert,
}

#[derive(Args, Debug)]
struct AttackArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long, default_value = "sum")]
    classifier: String,
    /// Image JSON: a file path, `-` for stdin, or the JSON itself. Defaults
    /// to the all-zeros image.
    #[arg(long)]
    image: Option<String>,
    #[arg(long, value_enum, default_value = "exhaustive")]
    method: AttackMethod,
    /// Norm for the exact methods.
    #[arg(long, default_value_t = 2)]
    norm: u32,
    /// Search radius for `findpert`.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1 << 20)]
    cap_images: u128,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum EstimateMethod {
    Exhaustive,
    Analytic,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum SamplerArg {
    Rejection,
    SumConditional,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long, default_value = "sum")]
    classifier: String,
    #[arg(long, default_value_t = 0)]
    label: u32,
    #[arg(long)]
    norm: u32,
    /// Perturbation size: integer, decimal or fraction such as `3/2`.
    #[arg(long)]
    size: String,
    #[arg(long, value_enum, default_value = "monte-carlo")]
    method: EstimateMethod,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "rejection")]
    sampler: SamplerArg,
    #[arg(long, default_value_t = 1 << 20)]
    cap_images: u128,
    #[command(flatten)]
    out: OutputArgs,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::PrecisionInsufficient { .. } | Error::NoOtherClass => 1,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = with_pool(cli.threads, || match &cli.command {
        Command::Bounds(a) => cmd_bounds(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Estimate(a) => cmd_estimate(a),
    });
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn with_pool(threads: Option<usize>, run: impl FnOnce() -> CmdResult + Send) -> CmdResult {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| usage(format!("cannot start thread pool: {e}")))?;
    pool.install(run)
}

fn emit(out: &OutputArgs, body: &[u8]) -> Result<(), Failure> {
    match &out.output {
        Some(path) => fs::write(path, body)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(body)
            .map_err(|e| Failure { code: 1, message: format!("stdout: {e}") }),
    }
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(&row).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

fn space_of(s: &SpaceArgs) -> Result<SpaceParams, Failure> {
    match (s.n, s.h, s.b) {
        (Some(n), Some(h), Some(b)) => Ok(SpaceParams::new(n, h, b)?),
        _ => Err(usage("--n, --h and --b are required")),
    }
}

/// Parses `3`, `1.25` or `3/2` into an exact rational.
fn parse_size(text: &str) -> Result<BigRational, Failure> {
    let bad = || usage(format!("invalid size {text:?}"));
    let text = text.trim();
    if let Some((a, b)) = text.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok(BigRational::new(a.into(), b.into()));
    }
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    if !digits.chars().all(|ch| ch.is_ascii_digit()) {
        return Err(bad());
    }
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let den = BigInt::from(10u32).pow(frac.len() as u32);
    Ok(BigRational::new(num, den))
}

// ------------------------------------------------------------------ bounds

fn cmd_bounds(a: &BoundsArgs) -> CmdResult {
    let r = match (a.r, a.c) {
        (Some(r), None) => r,
        (None, Some(c)) => 2.0 * (-2.0 * c * c).exp(),
        _ => return Err(usage("give exactly one of --r and --c")),
    };
    let rows = bounds_table(r, a.n, a.h, a.b, &a.p)?;
    let body = match a.out.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_bytes(&BOUNDS_CSV_HEADER, rows.iter().map(|r| r.csv_record())),
        Format::Json => json_bytes(&serde_json::to_value(&rows).expect("rows serialize")),
    };
    emit(&a.out, &body)?;
    Ok(0)
}

// ------------------------------------------------------------------ verify

fn cmd_verify(a: &VerifyArgs) -> CmdResult {
    let suites = Suite::parse(&a.suite).ok_or_else(|| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        usage(format!("unknown suite {:?}; expected one of {} or all", a.suite, names.join(", ")))
    })?;
    let mut cfg = if a.quick { VerifyConfig::quick() } else { VerifyConfig::default() };
    cfg.seed = a.seed;
    if let Some(c) = a.cap_images {
        cfg.cap_images = c;
    }
    if let Some(c) = a.cap_subsets {
        cfg.cap_subsets = c;
    }
    if let Some(m) = &a.mutant {
        cfg.mutant = Some(Mutant::parse(m).ok_or_else(|| usage(format!("unknown mutant {m:?}")))?);
    }
    let reports = run_suites(&suites, &cfg)?;
    let passed = reports.iter().all(|r| r.passed());
    for r in &reports {
        for c in r.checks.iter().filter(|c| !c.passed) {
            eprintln!(
                "FAIL {}/{}: {}",
                r.suite,
                c.id,
                c.counterexample.as_deref().unwrap_or(&c.detail)
            );
        }
    }
    let body = match a.out.format.unwrap_or(Format::Json) {
        Format::Json => json_bytes(&json!({
            "config": {
                "suite": a.suite,
                "seed": cfg.seed,
                "cap_images": cfg.cap_images.to_string(),
                "cap_subsets": cfg.cap_subsets,
                "quick": a.quick,
                "mutant": cfg.mutant.map(|m| m.name()),
            },
            "passed": passed,
            "suites": reports,
        })),
        Format::Csv => csv_bytes(
            &["suite", "check", "passed", "checked", "margin", "counterexample", "detail"],
            reports.iter().flat_map(|r| {
                r.checks.iter().map(move |c| {
                    vec![
                        r.suite.to_string(),
                        c.id.clone(),
                        c.passed.to_string(),
                        c.checked.to_string(),
                        c.margin.map(|m| m.to_string()).unwrap_or_default(),
                        c.counterexample.clone().unwrap_or_default(),
                        c.detail.clone(),
                    ]
                })
            }),
        ),
    };
    emit(&a.out, &body)?;
    Ok(if passed { 0 } else { 1 })
}

// ------------------------------------------------------------------ attack

fn read_image(spec: &str) -> Result<ImageTensor, Failure> {
    let bytes = if spec == "-" {
        let mut buf = Vec::new();
        io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| usage(format!("stdin: {e}")))?;
        buf
    } else if spec.trim_start().starts_with('{') {
        spec.as_bytes().to_vec()
    } else {
        fs::read(spec).map_err(|e| usage(format!("cannot read {spec}: {e}")))?
    };
    Ok(decode_image(&bytes)?)
}

fn attack_input(space: &SpaceArgs, image: &Option<String>) -> Result<ImageTensor, Failure> {
    match image {
        Some(spec) => {
            let img = read_image(spec)?;
            let p = img.params();
            let clash = [(space.n, p.n, "n"), (space.h, p.h, "h"), (space.b, p.b, "b")]
                .into_iter()
                .find(|(given, actual, _)| given.is_some_and(|g| g != *actual));
            if let Some((given, actual, name)) = clash {
                return Err(usage(format!(
                    "--{name} {} disagrees with the image ({name}={actual})",
                    given.unwrap_or_default()
                )));
            }
            Ok(img)
        }
        None => Ok(ImageTensor::zeros(space_of(space)?)),
    }
}

fn cmd_attack(a: &AttackArgs) -> CmdResult {
    let img = attack_input(&a.space, &a.image)?;
    let params = img.params();
    let c: Classifier = parse_classifier(&a.classifier, params, a.cap_images)?;
    let mut config = json!({
        "n": params.n,
        "h": params.h,
        "b": params.b,
        "classifier": c.name(),
        "image": img.levels(),
        "method": a.method,
    });
    let (result, code) = match a.method {
        AttackMethod::Findpert => {
            let radius = a.radius.ok_or_else(|| usage("--radius is required for findpert"))?;
            let seed = a.seed.ok_or_else(|| usage("--seed is required for findpert"))?;
            config["radius"] = json!(radius);
            config["seed"] = json!(seed);
            let out = find_perturbation(&c, &img, radius, seed, SearchLimits::default())?;
            let code = if out.succeeded() { 0 } else { 1 };
            (serde_json::to_value(&out).expect("outcome serializes"), code)
        }
        AttackMethod::Exhaustive | AttackMethod::Sum => {
            config["norm"] = json!(a.norm);
            let found = if a.method == AttackMethod::Sum {
                if !c.is_sum() {
                    return Err(usage("method sum needs --classifier sum"));
                }
                attack_sum_classifier(&img, a.norm)
            } else {
                minimal_perturbation(&c, &img, a.norm, a.cap_images)
            };
            match found {
                Ok(m) => (serde_json::to_value(&m).expect("record serializes"), 0),
                Err(Error::NoOtherClass) => (json!({ "result": null, "reason": "no other class" }), 1),
                Err(e) => return Err(e.into()),
            }
        }
    };
    if a.out.format == Some(Format::Csv) {
        return Err(usage("attack output is JSON only"));
    }
    emit(&a.out, &json_bytes(&json!({ "config": config, "outcome": result })))?;
    Ok(code)
}

// ---------------------------------------------------------------- estimate

fn cmd_estimate(a: &EstimateArgs) -> CmdResult {
    let params = space_of(&a.space)?;
    let c = parse_classifier(&a.classifier, params, a.cap_images)?;
    if a.label >= c.label_count() {
        return Err(usage(format!("label {} out of range for {}", a.label, c.name())));
    }
    let budget = PerturbationBudget::exact(a.norm, parse_size(&a.size)?)?;
    let method = match a.method {
        EstimateMethod::Exhaustive => Method::Exhaustive,
        EstimateMethod::Analytic => Method::Analytic,
        EstimateMethod::MonteCarlo => {
            let samples = a.samples.ok_or_else(|| usage("--samples is required for monte-carlo"))?;
            if samples == 0 {
                return Err(usage("--samples must be positive"));
            }
            let seed = a.seed.ok_or_else(|| usage("--seed is required for monte-carlo"))?;
            let sampler = match a.sampler {
                SamplerArg::Rejection => Sampler::Rejection,
                SamplerArg::SumConditional => Sampler::SumConditional,
            };
            Method::MonteCarlo { samples, seed, sampler }
        }
    };
    let limits = Limits { cap_images: a.cap_images, cap_ball: a.cap_images };
    let report = class_robust_fraction(&c, a.label, &budget, method, limits)?;
    let body = match a.out.format.unwrap_or(Format::Json) {
        Format::Csv => csv_bytes(&REPORT_CSV_HEADER, [report.csv_record()]),
        Format::Json => json_bytes(&json!({
            "config": {
                "n": params.n,
                "h": params.h,
                "b": params.b,
                "classifier": c.name(),
                "label": a.label,
                "norm": a.norm,
                "size": a.size,
                "method": a.method,
                "samples": a.samples,
                "seed": a.seed,
                "sampler": a.sampler,
                "cap_images": a.cap_images.to_string(),
            },
            "report": report.to_json(),
        })),
    };
    emit(&a.out, &body)?;
    Ok(0)
}
