//! Command-line front end. Every subcommand reads JSON, writes CSV and
//! JSON into `--out`, and records a manifest of what it did.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::counterexample::{
    binom_sweep, bound_lower_terms, bound_upper_series, build_sequence, omega,
    toy_scale_validation, unif_sweep, verify_constraints, CexParams, CexSequence, ToyParams,
};
use crate::criteria::{
    backtrack_bound_sweep, classify_drrw, concentration_sandwich_check, esseen_bounds_check,
    ClassifyOptions, Engine, Verdict,
};
use crate::error::{Error, Result};
use crate::lattice_dist::LatticePmf;
use crate::montecarlo::{dichotomy_probe, ensemble, with_jobs, EnsembleOptions};
use crate::quad_comb::{csv_err, simulate_prw, Model};
use crate::skeleton::{build_kernel, extract_skeleton, skeleton_check};
use crate::spectral::{
    fourier_criterion, separated_half_width, spectral_grid, Classification, FourierOptions,
    MarkovWalk, PeriodicPolicy,
};

#[derive(Parser, Debug)]
#[command(
    name = "combwalk",
    version,
    about = "Persistent walks on the quadruple comb"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Monte Carlo ensemble with return diagnostics.
    Simulate(SimulateArgs),
    /// Internal kernel and a simulated skeleton checked against it.
    Skeleton(SkeletonArgs),
    /// Series criterion for a DRRW model.
    Classify(ClassifyArgs),
    /// Dominant eigenvalue table and Fourier recurrence test.
    Spectral(SpectralArgs),
    /// Counterexample sequence construction and checks.
    Cex {
        #[command(subcommand)]
        command: CexCommand,
    },
    /// Exact inequality sweeps.
    Check {
        #[command(subcommand)]
        command: CheckCommand,
    },
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub horizon: u64,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Defaults to a tenth of the horizon.
    #[arg(long)]
    pub burn_in: Option<u64>,
    /// Also run the ensemble from every reachable configuration.
    #[arg(long)]
    pub probe: bool,
    /// Also write the path of one trajectory.
    #[arg(long)]
    pub trajectory: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SkeletonArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Steps of the simulated walk.
    #[arg(long, default_value_t = 1_000_000)]
    pub horizon: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EngineArg {
    Auto,
    Direct,
    Spectral,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 4096)]
    pub n: usize,
    #[arg(long, default_value_t = 0.01)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,
    #[arg(long, value_enum, default_value = "auto")]
    pub engine: EngineArg,
    /// FFT grid for the spectral engine; 0 picks one.
    #[arg(long, default_value_t = 0)]
    pub grid: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SpectralArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Refuse walks whose jumps generate a proper sublattice.
    #[arg(long)]
    pub strict: bool,
    /// Integration neighbourhood `[-h, h]²` of the Fourier test; by default
    /// the largest dyadic fraction of π where the eigenvalue is separated.
    #[arg(long)]
    pub half_width: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SequenceSource {
    /// Parameters JSON; defaults apply to missing fields.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    pub k: usize,
    /// Previously built sequence; overrides `--params`.
    #[arg(long)]
    pub sequence: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum CexCommand {
    /// Block sequence with enclosed parameters.
    Build {
        #[command(flatten)]
        source: SequenceSource,
        #[command(flatten)]
        common: Common,
    },
    /// Every construction constraint, level by level.
    Verify {
        #[command(flatten)]
        source: SequenceSource,
        #[command(flatten)]
        common: Common,
    },
    /// Enclosures of the upper series and the lower terms.
    Bounds {
        #[command(flatten)]
        source: SequenceSource,
        #[command(flatten)]
        common: Common,
    },
    /// Defective-walk recursion on dense toy blocks.
    Lemmas {
        /// Toy blocks JSON `{y, l, p}`.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 512)]
        n: usize,
        /// Horizon of the series criterion on the toy walk; 0 skips it.
        #[arg(long, default_value_t = 0)]
        classify_n: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Unif,
    Binom,
    Sandwich,
    Esseen,
    Backtrack,
    All,
}

#[derive(Subcommand, Debug)]
pub enum CheckCommand {
    Lemmas(LemmaArgs),
}

#[derive(Args, Debug)]
pub struct LemmaArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    #[arg(long, default_value_t = 8)]
    pub lmax: usize,
    #[arg(long, default_value_t = 6)]
    pub mmax: usize,
    #[arg(long, default_value_t = 200)]
    pub nmax: usize,
    /// Grid of the positivity radius search.
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    #[command(flatten)]
    pub common: Common,
}

/// Successful completion, possibly without a decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Done,
    Undecided,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Done => 0,
            Status::Undecided => 2,
        }
    }
}

#[derive(Serialize)]
struct InputRecord {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    version: &'static str,
    command: String,
    argv: Vec<String>,
    inputs: Vec<InputRecord>,
    seed: Option<u64>,
    settings: Value,
    outputs: Vec<String>,
    status: String,
}

/// Output directory plus the bookkeeping that ends up in the manifest.
struct Run {
    out: PathBuf,
    inputs: Vec<InputRecord>,
    outputs: Vec<String>,
    seed: Option<u64>,
    settings: Value,
}

impl Run {
    fn new(out: &Path) -> Result<Run> {
        fs::create_dir_all(out)?;
        Ok(Run {
            out: out.to_path_buf(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            settings: Value::Null,
        })
    }

    fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
        self.inputs.push(InputRecord {
            path: path.display().to_string(),
            sha256: format!("{:x}", Sha256::digest(&bytes)),
        });
        String::from_utf8(bytes).map_err(|e| Error::input(format!("{}: {e}", path.display())))
    }

    fn model(&mut self, path: &Path) -> Result<Model> {
        let text = self.read(path)?;
        Model::from_json(&text).map_err(|e| match e {
            Error::Json {
                path: field,
                source,
            } => Error::Json {
                path: format!("{}: {field}", path.display()),
                source,
            },
            other => other,
        })
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).expect("plain data serializes");
        self.write(name, text.as_bytes())
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.out.join(name), bytes)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn csv(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    fn finish(mut self, command: &str, argv: &[String], status: &str) -> Result<()> {
        self.outputs.push("manifest.json".into());
        let m = Manifest {
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            argv: argv.to_vec(),
            inputs: std::mem::take(&mut self.inputs),
            seed: self.seed,
            settings: std::mem::take(&mut self.settings),
            outputs: std::mem::take(&mut self.outputs),
            status: status.to_string(),
        };
        let text = serde_json::to_string_pretty(&m).expect("plain data serializes");
        fs::write(self.out.join("manifest.json"), text)?;
        Ok(())
    }
}

fn write_rows<W: std::io::Write>(
    out: W,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn simulate(a: &SimulateArgs, run: &mut Run) -> Result<Status> {
    let spec = run.model(&a.model)?.comb()?;
    let opts = EnsembleOptions {
        horizon: a.horizon,
        trials: a.trials,
        seed: a.seed,
        burn_in: a.burn_in,
        jobs: a.common.jobs,
    };
    run.seed = Some(a.seed);
    run.settings = json!({ "horizon": a.horizon, "trials": a.trials, "burn_in": opts.burn_in() });
    let e = ensemble(&spec, &opts)?;
    run.csv("ensemble.csv", |b| e.write_csv(b))?;
    run.json(
        "summary.json",
        &json!({ "start": e.start, "options": e.options, "summary": e.summary }),
    )?;
    if a.probe {
        let report = dichotomy_probe(&spec, &opts)?;
        run.json("dichotomy.json", &report)?;
    }
    if a.trajectory {
        let traj = simulate_prw(&spec, a.horizon as usize, a.seed);
        run.csv("trajectory.csv", |b| traj.write_csv(b))?;
    }
    Ok(Status::Done)
}

fn skeleton(a: &SkeletonArgs, run: &mut Run) -> Result<Status> {
    let model = run.model(&a.model)?;
    let spec = model.comb()?;
    run.seed = Some(a.seed);
    run.settings = json!({ "horizon": a.horizon });
    let kernel = build_kernel(&spec)?;
    let rows: Vec<Vec<f64>> = (0..kernel.len())
        .map(|i| kernel.matrix.row(i).iter().copied().collect())
        .collect();
    let states: Vec<String> = kernel.states.iter().map(|c| c.to_string()).collect();
    run.json(
        "kernel.json",
        &json!({ "states": states, "matrix": rows, "pi": kernel.pi }),
    )?;
    let check = skeleton_check(&spec, model.drrw(), a.horizon as usize, a.seed)?;
    run.json("check.json", &check)?;
    let sk = extract_skeleton(&simulate_prw(&spec, a.horizon as usize, a.seed));
    run.csv("skeleton.csv", |b| sk.write_csv(b))?;
    Ok(Status::Done)
}

fn classify(a: &ClassifyArgs, run: &mut Run) -> Result<Status> {
    let model = run.model(&a.model)?;
    let drrw = model
        .drrw()
        .ok_or_else(|| Error::input("classify needs a drrw model; use spectral for comb models"))?;
    let opts = ClassifyOptions {
        tolerance: a.tolerance,
        margin: a.margin,
        engine: match a.engine {
            EngineArg::Auto => Engine::Auto,
            EngineArg::Direct => Engine::Direct,
            EngineArg::Spectral => Engine::Spectral,
        },
        grid: a.grid,
        ..ClassifyOptions::default()
    };
    run.settings = serde_json::to_value(opts).expect("plain data serializes");
    let report = classify_drrw(drrw, a.n, &opts)?;
    let t = &report.terms;
    run.csv("terms.csv", |b| {
        write_rows(
            b,
            &["n", "a_n", "b_n"],
            (0..t.a.len()).map(|n| vec![n.to_string(), t.a[n].to_string(), t.b[n].to_string()]),
        )
    })?;
    run.json(
        "verdict.json",
        &json!({
            "verdict": report.verdict,
            "n": report.n,
            "engine": report.engine,
            "g_max": report.g_max,
            "aliasing_bound": t.aliasing_bound,
            "a": report.a,
            "b": report.b,
            "options": report.options,
        }),
    )?;
    Ok(match report.verdict {
        Verdict::Undecided => Status::Undecided,
        _ => Status::Done,
    })
}

fn spectral(a: &SpectralArgs, run: &mut Run) -> Result<Status> {
    let spec = run.model(&a.model)?.comb()?;
    let walk = MarkovWalk::from_comb(&spec)?;
    let half_width = match a.half_width {
        Some(h) => h,
        None => separated_half_width(&walk, 33)
            .ok_or_else(|| Error::Range("no separated neighbourhood of the origin".into()))?,
    };
    let opts = FourierOptions {
        half_width,
        policy: if a.strict {
            PeriodicPolicy::Reject
        } else {
            PeriodicPolicy::Report
        },
        ..FourierOptions::default()
    };
    run.settings = json!({ "grid": a.grid, "fourier": opts });
    let rows = spectral_grid(&walk, a.grid);
    run.csv("spectral.csv", |b| {
        write_rows(
            b,
            &["t1", "t2", "re_lambda", "im_lambda", "integrand"],
            rows.iter().map(|r| {
                let (re, im) = r.lambda.map_or((f64::NAN, f64::NAN), |z| (z.re, z.im));
                vec![
                    r.t.0.to_string(),
                    r.t.1.to_string(),
                    re.to_string(),
                    im.to_string(),
                    r.integrand.to_string(),
                ]
            }),
        )
    })?;
    let report = fourier_criterion(&walk, &opts)?;
    run.json("classification.json", &report)?;
    Ok(match report.classification {
        Classification::Undecided => Status::Undecided,
        _ => Status::Done,
    })
}

fn sequence(src: &SequenceSource, run: &mut Run) -> Result<CexSequence> {
    if let Some(p) = &src.sequence {
        let text = run.read(p)?;
        return CexSequence::from_json(&text);
    }
    let params = match &src.params {
        Some(p) => {
            let text = run.read(p)?;
            serde_json::from_str(&text).map_err(|e| Error::Json {
                path: p.display().to_string(),
                source: e,
            })?
        }
        None => CexParams::default(),
    };
    run.settings = json!({ "k": src.k, "params": params });
    build_sequence(&params, src.k)
}

fn cex(c: &CexCommand, run: &mut Run) -> Result<Status> {
    match c {
        CexCommand::Build { source, .. } => {
            let seq = sequence(source, run)?;
            run.write("sequence.json", seq.to_json().as_bytes())?;
        }
        CexCommand::Verify { source, .. } => {
            let seq = sequence(source, run)?;
            let report = verify_constraints(&seq)?;
            run.csv("constraints.csv", |b| {
                write_rows(
                    b,
                    &["k", "constraint", "holds", "margin", "margin_value"],
                    report.rows.iter().map(|r| {
                        vec![
                            r.k.to_string(),
                            r.constraint.to_string(),
                            r.holds.to_string(),
                            r.margin.clone(),
                            r.margin_value.map_or(String::new(), |v| v.to_string()),
                        ]
                    }),
                )
            })?;
            run.json("verify.json", &report)?;
            let first = report.failures().next().map(|f| (f.k, f.constraint));
            if let Some((k, constraint)) = first {
                return Err(Error::Infeasible {
                    k,
                    constraint: constraint.to_string(),
                });
            }
        }
        CexCommand::Bounds { source, .. } => {
            let seq = sequence(source, run)?;
            let k = seq.len();
            let upper = bound_upper_series(&seq, k)?;
            let lower = bound_lower_terms(&seq, k)?;
            run.json(
                "bounds.json",
                &json!({ "k": k, "upper": upper, "lower": lower }),
            )?;
        }
        CexCommand::Lemmas {
            params,
            n,
            classify_n,
            ..
        } => {
            let toy: ToyParams = match params {
                Some(p) => {
                    let text = run.read(p)?;
                    serde_json::from_str(&text).map_err(|e| Error::Json {
                        path: p.display().to_string(),
                        source: e,
                    })?
                }
                None => ToyParams::default(),
            };
            run.settings = json!({ "n": n, "classify_n": classify_n });
            let report = toy_scale_validation(&toy, *n, *classify_n)?;
            run.json("toy.json", &report)?;
            if !report.holds {
                return Err(Error::Check("toy recursion violated".into()));
            }
        }
    }
    Ok(Status::Done)
}

/// Laws used by the concentration suites.
pub fn symmetric_family() -> Result<Vec<(&'static str, LatticePmf)>> {
    let wide = LatticePmf::uniform(-3, 3)?;
    let narrow = LatticePmf::uniform(-1, 1)?;
    Ok(vec![
        ("srw", LatticePmf::from_points(&[(-1, 0.5), (1, 0.5)], 0.0)?),
        (
            "lazy_srw",
            LatticePmf::from_points(&[(-1, 0.25), (0, 0.5), (1, 0.25)], 0.0)?,
        ),
        (
            "quarter_hold",
            LatticePmf::from_points(&[(-1, 0.375), (0, 0.25), (1, 0.375)], 0.0)?,
        ),
        (
            "interval_mixture",
            LatticePmf::mixture(&[(0.5, &wide), (0.5, &narrow)])?,
        ),
    ])
}

fn lemmas(a: &LemmaArgs, run: &mut Run) -> Result<Status> {
    let all = a.suite == Suite::All;
    let mut failures = Vec::new();
    run.settings = json!({
        "suite": a.suite, "lmax": a.lmax, "mmax": a.mmax, "nmax": a.nmax, "grid": a.grid,
    });
    if all || a.suite == Suite::Unif {
        let ls: Vec<usize> = (2..=a.lmax).collect();
        let ms: Vec<usize> = (1..=a.mmax).collect();
        let s = unif_sweep(&ls, &ms)?;
        if s.violations > 0 {
            failures.push(format!("unif: {} violations", s.violations));
        }
        run.json("check_unif.json", &s)?;
    }
    if all || a.suite == Suite::Binom {
        let ns: Vec<u64> = (1..=a.nmax as u64).collect();
        let ps: Vec<f64> = (1..=50).map(|i| i as f64 / 100.0).collect();
        let s = binom_sweep(&ns, &ps)?;
        if s.violations > 0 {
            failures.push(format!("binom: {} violations", s.violations));
        }
        let small: Vec<Value> = [1e-4, 1e-6, 1e-8]
            .iter()
            .map(|&p| json!({ "p": p, "omega_ratio": omega(p) * (2.0 * std::f64::consts::E * p).sqrt() }))
            .collect();
        run.json("check_binom.json", &json!({ "sweep": s, "small_p": small }))?;
    }
    if all || a.suite == Suite::Sandwich || a.suite == Suite::Esseen {
        let mut sandwich = Vec::new();
        let mut esseen = Vec::new();
        for (name, law) in symmetric_family()? {
            let p = law.positivity_radius(a.grid)?;
            let floor = 2.0 * std::f64::consts::PI * a.grid as f64 / p;
            let lambdas = [floor, 2.0 * floor, 4.0 * floor];
            if all || a.suite == Suite::Sandwich {
                let r = concentration_sandwich_check(&law, a.nmax, &lambdas, a.grid, 16.0)?;
                if r.violations > 0 {
                    failures.push(format!("sandwich {name}: {} violations", r.violations));
                }
                sandwich.push(json!({ "law": name, "report": r }));
            }
            if all || a.suite == Suite::Esseen {
                let ns: Vec<usize> = [1, 2, 5, 10, 20, 50, 100, 200]
                    .into_iter()
                    .filter(|&n| n <= a.nmax)
                    .collect();
                let r = esseen_bounds_check(&law, &ns, &lambdas, a.grid)?;
                esseen.push(json!({ "law": name, "m_hat": r.m_hat, "big_m_hat": r.big_m_hat, "points": r.points }));
            }
        }
        if !sandwich.is_empty() {
            run.json("check_sandwich.json", &sandwich)?;
        }
        if !esseen.is_empty() {
            run.json("check_esseen.json", &esseen)?;
        }
    }
    if all || a.suite == Suite::Backtrack {
        let nus = [
            ("unit", LatticePmf::dirac(1)),
            (
                "one_or_two",
                LatticePmf::from_points(&[(1, 0.5), (2, 0.5)], 0.0)?,
            ),
        ];
        let mut out = Vec::new();
        for (name, nu) in &nus {
            for p in [0.0, 1.0 / 3.0, 0.5] {
                let cases = backtrack_bound_sweep(nu, p, 6)?;
                let bad = cases.iter().filter(|c| !c.check.holds).count();
                if bad > 0 {
                    failures.push(format!("backtrack {name} p={p}: {bad} violations"));
                }
                out.push(json!({ "nu": name, "p": p, "cases": cases }));
            }
        }
        run.json("check_backtrack.json", &out)?;
    }
    if failures.is_empty() {
        Ok(Status::Done)
    } else {
        Err(Error::Check(failures.join("; ")))
    }
}

fn common(c: &Command) -> &Common {
    match c {
        Command::Simulate(a) => &a.common,
        Command::Skeleton(a) => &a.common,
        Command::Classify(a) => &a.common,
        Command::Spectral(a) => &a.common,
        Command::Cex { command } => match command {
            CexCommand::Build { common, .. }
            | CexCommand::Verify { common, .. }
            | CexCommand::Bounds { common, .. }
            | CexCommand::Lemmas { common, .. } => common,
        },
        Command::Check {
            command: CheckCommand::Lemmas(a),
        } => &a.common,
    }
}

fn name(c: &Command) -> &'static str {
    match c {
        Command::Simulate(_) => "simulate",
        Command::Skeleton(_) => "skeleton",
        Command::Classify(_) => "classify",
        Command::Spectral(_) => "spectral",
        Command::Cex { command } => match command {
            CexCommand::Build { .. } => "cex build",
            CexCommand::Verify { .. } => "cex verify",
            CexCommand::Bounds { .. } => "cex bounds",
            CexCommand::Lemmas { .. } => "cex lemmas",
        },
        Command::Check { .. } => "check lemmas",
    }
}

/// Runs a parsed command; the manifest is written whether or not it
/// succeeds.
pub fn run(cli: &Cli, argv: &[String]) -> Result<Status> {
    let c = common(&cli.command);
    let mut run = Run::new(&c.out)?;
    let result = with_jobs(c.jobs, || match &cli.command {
        Command::Simulate(a) => simulate(a, &mut run),
        Command::Skeleton(a) => skeleton(a, &mut run),
        Command::Classify(a) => classify(a, &mut run),
        Command::Spectral(a) => spectral(a, &mut run),
        Command::Cex { command } => cex(command, &mut run),
        Command::Check {
            command: CheckCommand::Lemmas(a),
        } => lemmas(a, &mut run),
    })
    .and_then(|r| r);
    let status = match &result {
        Ok(Status::Done) => "ok".to_string(),
        Ok(Status::Undecided) => "undecided".to_string(),
        Err(e) => format!("error: {e}"),
    };
    run.finish(name(&cli.command), argv, &status)?;
    result
}

/// Parses `argv`, runs it and returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let text: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match run(&cli, &text) {
        Ok(s) => s.code(),
        Err(e) => {
            eprintln!("combwalk: {e}");
            1
        }
    }
}
