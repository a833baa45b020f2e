//! The `marstrand` command line: builds, audits, geometry helpers and target
//! generation.
//!
//! Exit status is 0 when every structural audit check passes, 2 when one
//! fails and 1 on usage, input or precision errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::audit::plot::{profile_csv, profile_svg};
use crate::audit::{verify_thm1, verify_thm2, AuditOptions, AuditReport};
use crate::bits::BitString;
use crate::construct::{
    build_thm1, build_thm2, gen_target, Condition, PrngBits, Ratio, Schedule, StageTrace, TargetSequence, Thm1Build,
    Thm2Build, Thm2StageTrace,
};
use crate::dyadic::{Dyadic, Openness, Real};
use crate::error::{Error, Result};
use crate::geometry::{
    cart_of_polar, count_dyadics_in_ball, count_dyadics_within, parse_rational, projection_length, signed_projection,
    Angle, PolarPoint,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_AUDIT_FAILED: i32 = 2;

/// `println!` that stays quiet when stdout is closed early, as under `| head`.
macro_rules! say {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

const DEFAULT_BIT_BUDGET: u64 = 1 << 30;

#[derive(Parser, Debug)]
#[command(name = "marstrand", version, about = "Dyadic coding constructions for projection counterexamples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Zero-coding build: long zero runs in every a_i·r, oracle folded into r.
    Construct1(BuildArgs),
    /// Block-coding build: target blocks coded into every a_i·r.
    Construct2(BuildArgs),
    /// Re-audit a finished run directory.
    Audit(AuditArgs),
    /// Polar approximation balls, projections and dyadic counts.
    #[command(subcommand)]
    Geometry(GeometryCmd),
    /// Print a prefix of the target sequence.
    GenTarget(GenTargetArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Svg,
}

/// Flags shared by both builds. Every flag may also be given in the TOML
/// file passed with `--config`, under the same name; flags win.
#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct BuildArgs {
    /// TOML file with defaults for the other flags.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// `paper` or `scaled:B`.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    stages: Option<u64>,
    /// A multiplier: `p/q`, `j/2^k`, `0.375`, `cos(1/3 pi)` or `proj(φ, θ)`.
    #[arg(long = "cond")]
    cond: Vec<String>,
    /// Density of the target sequence.
    #[arg(long)]
    eps: Option<String>,
    /// Seed of the target sequence and of φ.
    #[arg(long)]
    seed: Option<u64>,
    /// Seed of the oracle A.
    #[arg(long)]
    oracle_seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Largest ν(N) the run may reach.
    #[arg(long)]
    bit_budget: Option<u64>,
    #[arg(long, value_enum)]
    format: Vec<Format>,
    /// Longest prefix of a_i·r given a density estimate.
    #[arg(long)]
    max_profile_len: Option<u64>,
}

impl BuildArgs {
    fn merged(self) -> Result<BuildArgs> {
        let Some(path) = &self.config else { return Ok(self) };
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let file: BuildArgs = toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Ok(BuildArgs {
            config: self.config,
            schedule: self.schedule.or(file.schedule),
            stages: self.stages.or(file.stages),
            cond: if self.cond.is_empty() { file.cond } else { self.cond },
            eps: self.eps.or(file.eps),
            seed: self.seed.or(file.seed),
            oracle_seed: self.oracle_seed.or(file.oracle_seed),
            out: self.out.or(file.out),
            bit_budget: self.bit_budget.or(file.bit_budget),
            format: if self.format.is_empty() { file.format } else { self.format },
            max_profile_len: self.max_profile_len.or(file.max_profile_len),
        })
    }
}

#[derive(Args, Debug)]
struct AuditArgs {
    /// Directory holding `x.txt` and `trace.json`.
    #[arg(long)]
    run: PathBuf,
    /// Where to write the report; defaults to the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Vec<Format>,
    #[arg(long)]
    max_profile_len: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum GeometryCmd {
    /// The certified ball around `(x[s], y[s])` for the point `(r cos θ, r sin θ)`.
    Polar {
        #[arg(long)]
        r: String,
        /// `p/q pi` or radians.
        #[arg(long)]
        theta: String,
        #[arg(long)]
        s: u64,
        /// Also project onto the line at this angle.
        #[arg(long)]
        line: Option<String>,
    },
    /// Grid points `2^-level·z` in the open ball of radius `2^-level(1 + √2)` around `(x, y)`.
    Count {
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        #[arg(long)]
        level: u64,
        /// Replace the radius by this dyadic `j/2^k`.
        #[arg(long)]
        radius: Option<String>,
    },
}

#[derive(Args, Debug)]
struct GenTargetArgs {
    #[arg(long)]
    eps: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    n: u64,
    /// Write `target.txt` here instead of printing.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Everything that determines a build, recorded in `trace.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub theorem: u8,
    pub schedule: Schedule,
    pub stages: u64,
    pub conditions: Vec<String>,
    pub eps: Option<Ratio>,
    pub seed: u64,
    pub oracle_seed: u64,
    pub bit_budget: u64,
}

#[derive(Serialize, Deserialize)]
struct Thm1Record {
    config: RunConfig,
    traces: Vec<StageTrace>,
}

#[derive(Serialize, Deserialize)]
struct Thm2Record {
    config: RunConfig,
    traces: Vec<Thm2StageTrace>,
}

impl RunConfig {
    fn oracle(&self) -> PrngBits {
        PrngBits::new(self.oracle_seed)
    }

    fn phi(&self) -> PrngBits {
        PrngBits::with_stream(self.seed, 1)
    }

    fn target(&self) -> Result<TargetSequence> {
        let eps = self.eps.ok_or_else(|| Error::Invalid("block coding needs --eps".into()))?;
        Ok(TargetSequence::new(eps, self.seed))
    }

    fn conditions(&self) -> Result<Vec<Condition>> {
        Condition::parse_all(&self.conditions)
    }
}

fn resolve(theorem: u8, args: &BuildArgs) -> Result<RunConfig> {
    let schedule = Schedule::parse_for(args.schedule.as_deref().unwrap_or("paper"), theorem)?;
    let stages = args.stages.ok_or_else(|| Error::Invalid("--stages is required".into()))?;
    if args.cond.is_empty() {
        return Err(Error::Invalid("at least one --cond is required".into()));
    }
    let eps = match (theorem, &args.eps) {
        (2, None) => return Err(Error::Invalid("--eps is required for construct2".into())),
        (_, Some(e)) => Some(e.parse::<Ratio>()?),
        _ => None,
    };
    Ok(RunConfig {
        theorem,
        schedule,
        stages,
        conditions: args.cond.clone(),
        eps,
        seed: args.seed.unwrap_or(0),
        oracle_seed: args.oracle_seed.unwrap_or(0),
        bit_budget: args.bit_budget.unwrap_or(DEFAULT_BIT_BUDGET),
    })
}

fn audit_options(max_profile_len: Option<u64>) -> AuditOptions {
    let mut o = AuditOptions::default();
    if let Some(m) = max_profile_len {
        o.max_profile_len = m;
    }
    o
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, contents).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
}

fn write_report(dir: &Path, report: &AuditReport, formats: &[Format]) -> Result<()> {
    let formats = if formats.is_empty() { &[Format::Json][..] } else { formats };
    if formats.contains(&Format::Json) {
        write(dir, "audit.json", serde_json::to_string_pretty(report)? + "\n")?;
    }
    if formats.contains(&Format::Csv) {
        for p in &report.density {
            write(dir, &format!("density_{}.csv", p.requirement), profile_csv(&p.points))?;
            if !p.reference.is_empty() {
                write(dir, &format!("density_{}_target.csv", p.requirement), profile_csv(&p.reference))?;
            }
        }
    }
    if formats.contains(&Format::Svg) {
        let mut series = Vec::new();
        for p in &report.density {
            series.push((format!("a{}·r  ({})", p.requirement, p.spec), p.points.clone()));
            if !p.reference.is_empty() {
                series.push((format!("T at a{}·r ends", p.requirement), p.reference.clone()));
            }
        }
        write(dir, "density.svg", profile_svg(&format!("K̂/n, theorem {} build", report.theorem), &series))?;
    }
    Ok(())
}

fn summarize(report: &AuditReport) -> i32 {
    for c in &report.checks {
        let tag = match (c.passed, c.structural) {
            (true, _) => "pass",
            (false, true) => "FAIL",
            (false, false) => "note",
        };
        say!("{tag:4} {:20} {}", c.name, c.detail);
    }
    if report.passed {
        say!("audit passed");
        EXIT_OK
    } else {
        say!("audit FAILED");
        EXIT_AUDIT_FAILED
    }
}

fn run_build(theorem: u8, args: BuildArgs) -> Result<i32> {
    let args = args.merged()?;
    let cfg = resolve(theorem, &args)?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    let conds = cfg.conditions()?;
    let oracle = cfg.oracle();
    let opts = audit_options(args.max_profile_len);
    let report = if theorem == 1 {
        let b = build_thm1(&oracle, &conds, cfg.schedule, cfg.stages, cfg.bit_budget)?;
        write(&out, "x.txt", b.x.to_text() + "\n")?;
        let rec = Thm1Record { config: cfg.clone(), traces: b.traces.clone() };
        write(&out, "trace.json", serde_json::to_string_pretty(&rec)? + "\n")?;
        verify_thm1(&b, &conds, Some(&oracle), &opts)?
    } else {
        let (phi, target) = (cfg.phi(), cfg.target()?);
        let b = build_thm2(&oracle, &phi, &conds, &target, cfg.schedule, cfg.stages, cfg.bit_budget)?;
        write(&out, "x.txt", b.x.to_text() + "\n")?;
        let rec = Thm2Record { config: cfg.clone(), traces: b.traces.clone() };
        write(&out, "trace.json", serde_json::to_string_pretty(&rec)? + "\n")?;
        verify_thm2(&b, &conds, &target, Some(&oracle), Some(&phi), &opts)?
    };
    write_report(&out, &report, &args.format)?;
    Ok(summarize(&report))
}

fn run_audit(args: AuditArgs) -> Result<i32> {
    let read = |name: &str| {
        let p = args.run.join(name);
        fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
    };
    let x = BitString::parse_text(&read("x.txt")?)?;
    let trace = read("trace.json")?;
    let head: serde_json::Value = serde_json::from_str(&trace)?;
    let theorem = head["config"]["theorem"].as_u64().ok_or_else(|| Error::Parse("trace.json has no config.theorem".into()))?;
    let opts = audit_options(args.max_profile_len);
    let report = match theorem {
        1 => {
            let rec: Thm1Record = serde_json::from_value(head)?;
            let cfg = &rec.config;
            let b = Thm1Build { schedule: cfg.schedule, stages: cfg.stages, x, traces: rec.traces };
            verify_thm1(&b, &cfg.conditions()?, Some(&cfg.oracle()), &opts)?
        }
        2 => {
            let rec: Thm2Record = serde_json::from_value(head)?;
            let cfg = &rec.config;
            let b = Thm2Build { schedule: cfg.schedule, stages: cfg.stages, x, traces: rec.traces };
            verify_thm2(&b, &cfg.conditions()?, &cfg.target()?, Some(&cfg.oracle()), Some(&cfg.phi()), &opts)?
        }
        t => return Err(Error::Parse(format!("unknown theorem {t} in trace.json"))),
    };
    let out = args.out.unwrap_or(args.run);
    fs::create_dir_all(&out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    write_report(&out, &report, &args.format)?;
    Ok(summarize(&report))
}

fn parse_dyadic(s: &str) -> Result<Dyadic> {
    let q = parse_rational(s)?;
    let d = q.denom();
    if d.magnitude().count_ones() != 1 {
        return Err(Error::Parse(format!("`{s}` is not dyadic")));
    }
    Ok(Dyadic::new(q.numer().clone(), d.trailing_zeros().unwrap_or(0)))
}

fn run_geometry(cmd: GeometryCmd) -> Result<i32> {
    let json = match cmd {
        GeometryCmd::Polar { r, theta, s, line } => {
            let r = Real::from_rational(parse_rational(&r)?);
            let theta: Angle = theta.parse()?;
            let ball = cart_of_polar(&PolarPoint { r: r.clone(), theta: theta.clone() }, s)?;
            let mut v = serde_json::json!({
                "center": [ball.center.0.to_string(), ball.center.1.to_string()],
                "center_approx": [ball.center.0.to_f64(), ball.center.1.to_f64()],
                "radius": ball.radius.to_string(),
                "radius_approx": ball.radius.to_f64(),
            });
            if let Some(line) = line {
                let line: Angle = line.parse()?;
                v["projection_length"] = projection_length(&r, &theta, &line).approx_f64().into();
                v["signed_projection"] = signed_projection(&r, &theta, &line).approx_f64().into();
            }
            v
        }
        GeometryCmd::Count { x, y, level, radius } => {
            let a = (parse_dyadic(&x)?, parse_dyadic(&y)?);
            let n = match radius {
                None => count_dyadics_in_ball(&a, level),
                Some(rad) => count_dyadics_within(&a, level, &parse_dyadic(&rad)?, Openness::Open),
            };
            serde_json::json!({ "count": n })
        }
    };
    say!("{}", serde_json::to_string_pretty(&json)?);
    Ok(EXIT_OK)
}

fn run_gen_target(args: GenTargetArgs) -> Result<i32> {
    let t = gen_target(args.eps.parse()?, args.seed, args.n);
    match args.out {
        Some(dir) => {
            fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
            write(&dir, "target.txt", t.to_text() + "\n")?;
        }
        None => say!("{}", t.to_text()),
    }
    Ok(EXIT_OK)
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Construct1(a) => run_build(1, a),
        Command::Construct2(a) => run_build(2, a),
        Command::Audit(a) => run_audit(a),
        Command::Geometry(g) => run_geometry(g),
        Command::GenTarget(g) => run_gen_target(g),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
