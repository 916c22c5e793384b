//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a well-formed request fails (for
//! example an infeasible σ), 2 on malformed input or usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::breakpoints::{
    breakpoints, marginal_f, marginal_h, marginal_h_table, optimal_set_constrained, optimal_set_penalty,
    plot_lines, BreakpointSequence,
};
use crate::cardinality::{level_report, penalty_cardinality, strictness_p2};
use crate::error::{Error, Result};
use crate::format::{csv_opt, f4, g17, to_json};
use crate::instance::{Instance, DEFAULT_MAX_SUPPORTS};
use crate::levels::{levels, LevelSequence, ResidualStaircase};
use crate::phi::{Exponent, PhiSpec};
use crate::relation::{classify, exact_penalty_threshold, verify_exactness};
use crate::repro::{recovery_instance, run_checks, LevelValues};
use crate::smooth::{
    default_step, gradient_check, lipschitz_bound, prox_grad_solve, SmoothPenaltyProblem,
};

/// Environment variable capping the number of enumerated supports.
pub const MAX_SUPPORTS_ENV: &str = "L0LAB_MAX_SUPPORTS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "l0lab",
    version,
    about = "Exact analysis of l0-constrained and l0-penalized least residual problems on small instances"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: OutputFormat,

    /// Tolerance for pass/fail numerical checks (gradient-check).
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Seed for randomized checks and random starts.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Clone)]
pub struct Source {
    /// Instance JSON {"A": [[...]], "b": [...], "p": 1|2}; defaults to the
    /// bundled 4×5 recovery instance.
    #[arg(long)]
    pub instance: Option<PathBuf>,

    /// Synthetic level JSON {"s": [...], "rho": [...], "phi": {...}} used
    /// instead of an instance.
    #[arg(long, conflicts_with = "instance")]
    pub levels: Option<PathBuf>,

    /// Penalty function: identity | power:P | shifted_power:SIGMA:P |
    /// squared_hinge:SIGMA, or its JSON form.
    #[arg(long)]
    pub phi: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Residual staircase and level sequence.
    Levels(Source),
    /// Breakpoints of the penalty value function.
    Breakpoints(Source),
    /// Constrained value function H at sigma (or its step table).
    MarginalH {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Penalty value function F at lambda (or its pieces).
    MarginalF {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// How the penalty optimal sets meet the constrained optimal set at sigma.
    Classify {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        sigma: f64,
    },
    /// Threshold above which the penalty problem is exact for sigma.
    ExactPenalty {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        sigma: f64,
        /// Penalty parameters at which to verify exactness by enumeration.
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<f64>,
    },
    /// Finiteness of a level set, constrained optimal set or penalty optimal set.
    Cardinality {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        level: Option<usize>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Gradient and Lipschitz checks of the smooth squared-hinge penalty.
    GradientCheck {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
    },
    /// Hard-thresholding solver on the smooth penalty problem.
    Solve {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        lambda: f64,
        /// Starting point, comma separated; zeros by default.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Vec<f64>,
        /// Additional random starts drawn with --seed.
        #[arg(long, default_value_t = 0)]
        random_starts: usize,
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Line arrangement whose lower envelope is the penalty value function.
    PlotData(Source),
    /// Golden checks on the bundled fixtures.
    Repro,
}

/// Parses `argv` (including the program name), runs the command and writes
/// the report to `out`, diagnostics to `err`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if code == 0 {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    match execute(&cli) {
        Ok(Outcome { text, ok }) => {
            let _ = out.write_all(text.as_bytes());
            if !text.ends_with('\n') {
                let _ = writeln!(out);
            }
            if ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_input_error() {
                2
            } else {
                1
            }
        }
    }
}

/// [`run_with`] on standard output and standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

struct Outcome {
    text: String,
    ok: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, ok: true }
    }
}

fn max_supports() -> Result<u128> {
    match std::env::var(MAX_SUPPORTS_ENV) {
        Ok(v) => v.trim().parse::<u128>().map_err(|e| {
            Error::InvalidInput(format!("{MAX_SUPPORTS_ENV} = '{v}' is not a nonnegative integer: {e}"))
        }),
        Err(_) => Ok(DEFAULT_MAX_SUPPORTS),
    }
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn parse_phi(source: &Source) -> Result<Option<PhiSpec>> {
    source.phi.as_deref().map(str::parse).transpose()
}

impl Source {
    fn instance(&self) -> Result<Instance> {
        if self.levels.is_some() {
            return Err(Error::InvalidInput("this command needs an instance, not synthetic levels".into()));
        }
        match &self.instance {
            Some(p) => Instance::from_json(&read(p)?),
            None => Ok(recovery_instance()),
        }
    }

    fn staircase(&self) -> Result<ResidualStaircase> {
        ResidualStaircase::compute_with_limit(&self.instance()?, max_supports()?)
    }

    /// Levels from synthetic data, or from the instance under `--phi`
    /// (falling back to `default`).
    fn level_sequence(&self, default: impl FnOnce(Exponent) -> PhiSpec) -> Result<LevelSequence> {
        if let Some(p) = &self.levels {
            if self.phi.is_some() {
                return Err(Error::InvalidInput(
                    "--phi is taken from the levels file, not the command line".into(),
                ));
            }
            return LevelValues::from_json(&read(p)?);
        }
        let st = self.staircase()?;
        let phi = parse_phi(self)?.unwrap_or_else(|| default(st.instance().p()));
        levels(&st, phi)
    }
}

fn power(p: Exponent) -> PhiSpec {
    PhiSpec::Power { p }
}

fn identity(_: Exponent) -> PhiSpec {
    PhiSpec::Identity
}

fn unsupported(format: OutputFormat, what: &str) -> Error {
    Error::InvalidInput(format!("{format:?} output is not available for {what}").to_lowercase())
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let fmt = cli.format;
    match &cli.command {
        Command::Levels(src) => {
            let seq = src.level_sequence(identity)?;
            Ok(Outcome::ok(render_levels(&seq, fmt)))
        }
        Command::Breakpoints(src) => {
            let seq = src.level_sequence(power)?;
            let bp = breakpoints(&seq);
            Ok(Outcome::ok(render_breakpoints(&bp, fmt)?))
        }
        Command::MarginalH { source, sigma } => {
            let seq = source.level_sequence(identity)?;
            match sigma {
                Some(sigma) => {
                    let h = marginal_h(&seq, *sigma)?;
                    let opt = optimal_set_constrained(&seq, *sigma)?;
                    Ok(Outcome::ok(match fmt {
                        OutputFormat::Text => format!("{h}\n"),
                        OutputFormat::Json => to_json(&opt),
                        OutputFormat::Csv => format!("sigma,value,k,exact\n{},{h},{},{}\n", g17(*sigma), opt.k, opt.exact),
                    }))
                }
                None => {
                    let table = marginal_h_table(&seq)?;
                    Ok(Outcome::ok(match fmt {
                        OutputFormat::Json => to_json(&table),
                        OutputFormat::Csv => {
                            let mut s = String::from("sigma_lo,sigma_hi,value\n");
                            for p in &table.pieces {
                                s += &format!("{},{},{}\n", g17(p.sigma_lo), csv_opt(p.sigma_hi, "inf"), p.value);
                            }
                            s
                        }
                        OutputFormat::Text => {
                            let mut s = String::new();
                            for p in &table.pieces {
                                let hi = p.sigma_hi.map_or("inf".into(), f4);
                                s += &format!("H = {} on [{}, {})\n", p.value, f4(p.sigma_lo), hi);
                            }
                            s
                        }
                    }))
                }
            }
        }
        Command::MarginalF { source, lambda } => {
            let seq = source.level_sequence(power)?;
            let bp = breakpoints(&seq);
            let f = marginal_f(&seq, &bp);
            match lambda {
                Some(l) => {
                    let opt = optimal_set_penalty(&seq, &bp, *l)?;
                    Ok(Outcome::ok(match fmt {
                        OutputFormat::Json => to_json(&opt),
                        OutputFormat::Text => format!(
                            "F({}) = {}  active levels {:?}\n",
                            f4(*l),
                            f4(opt.value),
                            opt.level_indices
                        ),
                        OutputFormat::Csv => return Err(unsupported(fmt, "a single F value")),
                    }))
                }
                None => Ok(Outcome::ok(match fmt {
                    OutputFormat::Json => to_json(&f),
                    OutputFormat::Csv => {
                        let mut s = String::from("level,slope,intercept,lambda_lo,lambda_hi\n");
                        for p in &f.pieces {
                            s += &format!(
                                "{},{},{},{},{}\n",
                                p.level,
                                g17(p.slope),
                                g17(p.intercept),
                                g17(p.lambda_lo),
                                csv_opt(p.lambda_hi, "inf")
                            );
                        }
                        s
                    }
                    OutputFormat::Text => {
                        let mut s = String::new();
                        for p in &f.pieces {
                            let hi = p.lambda_hi.map_or("inf".into(), f4);
                            s += &format!(
                                "F = {} + {} lambda on ({}, {}]\n",
                                p.intercept,
                                f4(p.slope),
                                f4(p.lambda_lo),
                                hi
                            );
                        }
                        s
                    }
                })),
            }
        }
        Command::Classify { source, sigma } => {
            let seq = source.level_sequence(power)?;
            let bp = breakpoints(&seq);
            let r = classify(&seq, &bp, *sigma)?;
            Ok(Outcome::ok(match fmt {
                OutputFormat::Json => to_json(&r),
                OutputFormat::Text => format!(
                    "sigma = {}  k = {}  case = {}  window = {:?}\n",
                    f4(r.sigma),
                    r.k,
                    r.case_name,
                    r.lambda_window
                ),
                OutputFormat::Csv => return Err(unsupported(fmt, "classify")),
            }))
        }
        Command::ExactPenalty { source, sigma, lambda } => {
            let st = source.staircase()?;
            let phi = parse_phi(source)?.map_or_else(|| PhiSpec::squared_hinge(*sigma), Ok)?;
            let t = exact_penalty_threshold(&st, phi, *sigma)?;
            #[derive(Serialize)]
            struct Report<'a> {
                sigma: f64,
                phi: PhiSpec,
                lambda_star: f64,
                all_lambda_exact: bool,
                s: Vec<usize>,
                rho: Vec<f64>,
                breakpoints: &'a BreakpointSequence,
                verification: Option<crate::relation::ExactnessReport>,
            }
            let verification = if lambda.is_empty() {
                None
            } else {
                Some(verify_exactness(&st, phi, *sigma, lambda)?)
            };
            let ok = verification.as_ref().is_none_or(|v| v.all_pass_above_threshold);
            let rep = Report {
                sigma: *sigma,
                phi,
                lambda_star: t.lambda_star,
                all_lambda_exact: t.all_lambda_exact,
                s: t.levels.s(),
                rho: t.levels.rho(),
                breakpoints: &t.breakpoints,
                verification,
            };
            let text = match fmt {
                OutputFormat::Json => to_json(&rep),
                OutputFormat::Text => {
                    let mut s = format!(
                        "lambda* = {}\ns = {:?}\nrho = [{}]\n",
                        f4(rep.lambda_star),
                        rep.s,
                        rep.rho.iter().map(|v| f4(*v)).collect::<Vec<_>>().join(", ")
                    );
                    if let Some(v) = &rep.verification {
                        for smp in &v.samples {
                            s += &format!(
                                "lambda = {}  {}  {}\n",
                                f4(smp.lambda),
                                if smp.above_threshold { "above" } else { "below" },
                                if smp.pass { "PASS" } else { "FAIL" }
                            );
                        }
                    }
                    s
                }
                OutputFormat::Csv => return Err(unsupported(fmt, "exact-penalty")),
            };
            Ok(Outcome { text, ok })
        }
        Command::Cardinality { source, level, sigma, lambda } => {
            let chosen = [level.is_some(), sigma.is_some(), lambda.is_some()]
                .iter()
                .filter(|b| **b)
                .count();
            if chosen != 1 {
                return Err(Error::InvalidInput("give exactly one of --level, --sigma, --lambda".into()));
            }
            let inst = source.instance()?;
            let st = ResidualStaircase::compute_with_limit(&inst, max_supports()?)?;
            let text = if let Some(sigma) = sigma {
                let seq = levels(&st, PhiSpec::Identity)?;
                let r = strictness_p2(&inst, &seq, *sigma)?;
                match fmt {
                    OutputFormat::Json => to_json(&r),
                    OutputFormat::Text => format!(
                        "sigma = {}  on grid = {}  finite = {}  all strict = {}\n",
                        f4(r.sigma),
                        r.sigma_on_grid,
                        r.finite,
                        r.all_strict
                    ),
                    OutputFormat::Csv => return Err(unsupported(fmt, "cardinality")),
                }
            } else {
                let default = if lambda.is_some() { power(inst.p()) } else { PhiSpec::Identity };
                let phi = parse_phi(source)?.unwrap_or(default);
                let seq = levels(&st, phi)?;
                let r = match (level, lambda) {
                    (Some(k), _) => level_report(&inst, &seq, *k)?,
                    (_, Some(l)) => penalty_cardinality(&inst, &seq, &breakpoints(&seq), *l)?,
                    _ => unreachable!("exactly one selector is set"),
                };
                match fmt {
                    OutputFormat::Json => to_json(&r),
                    OutputFormat::Text => format!(
                        "levels {:?}  {:?}  bound {:?}  witnesses {}\n",
                        r.active_levels, r.finite, r.upper_bound, r.witnesses
                    ),
                    OutputFormat::Csv => return Err(unsupported(fmt, "cardinality")),
                }
            };
            Ok(Outcome::ok(text))
        }
        Command::GradientCheck { source, sigma, points, pairs } => {
            let prob = SmoothPenaltyProblem::new(source.instance()?, *sigma, 1.0)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let tol = cli.tol.unwrap_or(1e-6);
            let r = gradient_check(&prob, *points, *pairs, tol, &mut rng)?;
            let ok = r.pass;
            let text = match fmt {
                OutputFormat::Json => to_json(&r),
                OutputFormat::Text => format!(
                    "max relative gradient error = {:e} (tol {:e})\nmax Lipschitz ratio = {} (bound {})\n{}\n",
                    r.max_gradient_error,
                    r.tolerance,
                    f4(r.max_lipschitz_ratio),
                    f4(r.lipschitz_bound),
                    if r.pass { "PASS" } else { "FAIL" }
                ),
                OutputFormat::Csv => return Err(unsupported(fmt, "gradient-check")),
            };
            Ok(Outcome { text, ok })
        }
        Command::Solve { source, sigma, lambda, x0, random_starts, max_iters, step } => {
            let st = source.staircase()?;
            let inst = st.instance().clone();
            let n = inst.n();
            let prob = SmoothPenaltyProblem::new(inst, *sigma, *lambda)?;
            let step = match step {
                Some(s) => *s,
                None => default_step(&prob)?,
            };
            let seq = levels(&st, PhiSpec::squared_hinge(*sigma)?)?;
            let optimum = optimal_set_penalty(&seq, &breakpoints(&seq), *lambda)?.value;

            let mut starts = vec![if x0.is_empty() { vec![0.0; n] } else { x0.clone() }];
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let radius = (inst_scale(&prob)).max(1.0);
            for _ in 0..*random_starts {
                starts.push((0..n).map(|_| rng.gen_range(-radius..=radius)).collect());
            }
            #[derive(Serialize)]
            struct Run {
                start: Vec<f64>,
                result: crate::smooth::SolveResult,
                gap: f64,
            }
            #[derive(Serialize)]
            struct Report {
                step: f64,
                lipschitz_bound: f64,
                enumeration_optimum: f64,
                runs: Vec<Run>,
            }
            let runs = starts
                .into_iter()
                .map(|s| {
                    let result = prox_grad_solve(&prob, &s, *max_iters, step)?;
                    Ok(Run {
                        gap: result.objective - optimum,
                        start: s,
                        result,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let rep = Report {
                step,
                lipschitz_bound: lipschitz_bound(&prob)?,
                enumeration_optimum: optimum,
                runs,
            };
            let text = match fmt {
                OutputFormat::Json => to_json(&rep),
                OutputFormat::Csv => {
                    let mut s = String::from("run,iteration,objective,support_size\n");
                    for (i, r) in rep.runs.iter().enumerate() {
                        for row in &r.result.trace {
                            s += &format!("{i},{},{},{}\n", row.iteration, g17(row.objective), row.support_size);
                        }
                    }
                    s
                }
                OutputFormat::Text => {
                    let mut s = format!("enumeration optimum = {}\n", f4(optimum));
                    for (i, r) in rep.runs.iter().enumerate() {
                        s += &format!(
                            "run {i}: objective = {}  gap = {}  iterations = {}\n",
                            f4(r.result.objective),
                            f4(r.gap),
                            r.result.iterations
                        );
                    }
                    s
                }
            };
            Ok(Outcome::ok(text))
        }
        Command::PlotData(src) => {
            let seq = src.level_sequence(power)?;
            let bp = breakpoints(&seq);
            let lines = plot_lines(&seq, &bp);
            Ok(Outcome::ok(match fmt {
                OutputFormat::Json => to_json(&lines),
                OutputFormat::Csv | OutputFormat::Text => {
                    let mut s = String::from("level_index,slope,intercept,lambda_lo,lambda_hi,active\n");
                    for l in &lines {
                        let hi = match (l.lambda_lo, l.lambda_hi) {
                            (Some(_), None) => "inf".to_string(),
                            (_, hi) => csv_opt(hi, ""),
                        };
                        s += &format!(
                            "{},{},{},{},{},{}\n",
                            l.level_index,
                            g17(l.slope),
                            g17(l.intercept),
                            csv_opt(l.lambda_lo, ""),
                            hi,
                            u8::from(l.active)
                        );
                    }
                    s
                }
            }))
        }
        Command::Repro => {
            let checks = run_checks()?;
            let ok = checks.iter().all(|c| c.pass);
            let text = match fmt {
                OutputFormat::Json => to_json(&checks),
                OutputFormat::Csv => return Err(unsupported(fmt, "repro")),
                OutputFormat::Text => {
                    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
                    let mut s = String::new();
                    for c in &checks {
                        s += &format!(
                            "{}  {:width$}  expected {}  got {}\n",
                            if c.pass { "PASS" } else { "FAIL" },
                            c.name,
                            c.expected,
                            c.got
                        );
                    }
                    s
                }
            };
            Ok(Outcome { text, ok })
        }
    }
}

/// Coordinate scale for random starts: ‖b‖₂ / max|A|.
fn inst_scale(prob: &SmoothPenaltyProblem) -> f64 {
    let a = prob.instance.a().max_abs();
    if a > 0.0 {
        prob.instance.b_norm() / a
    } else {
        1.0
    }
}

fn render_levels(seq: &LevelSequence, fmt: OutputFormat) -> String {
    match fmt {
        OutputFormat::Json => to_json(seq),
        OutputFormat::Csv => {
            let mut s = String::from("level,s,rho,supports,omega_infinite\n");
            for (i, l) in seq.levels.iter().enumerate() {
                let sup: Vec<String> = l
                    .supports
                    .iter()
                    .map(|x| x.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(" "))
                    .collect();
                s += &format!("{i},{},{},{},{}\n", l.s, g17(l.rho), sup.join(";"), l.omega_infinite);
            }
            s
        }
        OutputFormat::Text => {
            let mut s = format!("L = {}  phi = {}\n", seq.last, seq.phi);
            for (i, l) in seq.levels.iter().enumerate() {
                s += &format!(
                    "level {i}: s = {}  rho = {}  supports = {:?}{}\n",
                    l.s,
                    f4(l.rho),
                    l.supports,
                    if l.omega_infinite { "  (infinite)" } else { "" }
                );
            }
            s
        }
    }
}

fn render_breakpoints(bp: &BreakpointSequence, fmt: OutputFormat) -> Result<String> {
    Ok(match fmt {
        OutputFormat::Json => to_json(bp),
        OutputFormat::Csv => {
            let mut s = String::from("i,t,lambda,ties\n");
            for i in 0..=bp.k {
                let ties = if i < bp.k {
                    bp.ties_at(i).iter().map(|j| j.to_string()).collect::<Vec<_>>().join(" ")
                } else {
                    String::new()
                };
                s += &format!("{i},{},{},{ties}\n", bp.t[i], g17(bp.lambda[i]));
            }
            s
        }
        OutputFormat::Text => {
            let mut s = format!("K = {}\n", bp.k);
            for i in 0..=bp.k {
                s += &format!("t_{i} = {}  lambda_{i} = {}", bp.t[i], f4(bp.lambda[i]));
                if i < bp.k {
                    s += &format!("  ties {:?}", bp.ties_at(i));
                }
                s.push('\n');
            }
            for w in &bp.warnings {
                s += &format!("warning: {w}\n");
            }
            s
        }
    })
}
