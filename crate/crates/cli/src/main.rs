use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use jcl::benchmarks::{make_problem, run_campaign, BenchmarkName, BenchmarkSpec};
use jcl::io::{read_results, summarize_rows, write_summary, ResultRow, ResultWriter, SessionState};
use jcl::design::StopReason;
use jcl::{JclConfig, JclSession, Method, Mode, Status, Step, SurrogateKind};

#[derive(Parser, Debug)]
#[command(name = "jcl", version, about = "Sequential design for the joint root of several black-box functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a Monte Carlo benchmark campaign and write one CSV row per iteration
    Bench(BenchArgs),
    /// Per-n 10/50/90 percentiles of D_n from a bench CSV
    Summary {
        #[arg(long)]
        input: PathBuf,
        /// Output CSV (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Create an ask-tell session state file
    Init(InitArgs),
    /// Print the next point to evaluate as one JSON line
    Suggest {
        #[arg(long)]
        state: PathBuf,
    },
    /// Record responses observed at a point
    Tell {
        #[arg(long)]
        state: PathBuf,
        /// Input vector, comma separated or a JSON array
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// Response vector, comma separated or a JSON array
        #[arg(long, allow_hyphen_values = true)]
        y: String,
    },
}

#[derive(Args, Debug, Clone)]
struct Tuning {
    /// Initial design size
    #[arg(long)]
    n0: Option<usize>,
    /// Total evaluation budget
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, default_value_t = jcl::acquisition::DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = jcl::acquisition::DEFAULT_W)]
    w: f64,
    #[arg(long, default_value_t = jcl::acquisition::DEFAULT_P_STAR)]
    pstar: f64,
    /// DGP MCMC sweeps, burn-in and thinning
    #[arg(long, default_value_t = 1000)]
    mcmc_iter: usize,
    #[arg(long, default_value_t = 500)]
    mcmc_burn: usize,
    #[arg(long, default_value_t = 5)]
    mcmc_thin: usize,
}

impl Tuning {
    fn apply(&self, c: &mut JclConfig) {
        if let Some(n0) = self.n0 {
            c.n0 = n0;
        }
        if let Some(b) = self.budget {
            c.n_max = b;
        }
        c.epsilon = self.epsilon;
        c.w = self.w;
        c.p_star = self.pstar;
        c.mcmc = jcl::McmcSettings { n_iter: self.mcmc_iter, burn: self.mcmc_burn, thin: self.mcmc_thin };
    }
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    problem: String,
    /// Comma-separated subset of jcl, lhs, alt-entropy, alt-pareto
    #[arg(long, default_value = "jcl,lhs,alt-entropy,alt-pareto")]
    methods: String,
    /// gp or dgp (defaults to the problem's recommended surrogate)
    #[arg(long)]
    surrogate: Option<String>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Leave the wall_ms column empty so reruns are byte-identical
    #[arg(long)]
    no_timing: bool,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args, Debug)]
struct InitArgs {
    #[arg(long)]
    state: PathBuf,
    /// Take dimension, targets and budget defaults from a benchmark
    #[arg(long)]
    problem: Option<String>,
    /// Input dimension (required without --problem)
    #[arg(long)]
    dim: Option<usize>,
    /// Target values, comma separated (required without --problem)
    #[arg(long, allow_hyphen_values = true)]
    targets: Option<String>,
    #[arg(long, default_value = "gp")]
    surrogate: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Overwrite an existing state file
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    tuning: Tuning,
}

/// Error carrying the process exit code: 2 for bad input, 1 for run failures.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

fn runtime(error: anyhow::Error) -> Failure {
    Failure { code: 1, error }
}

type CmdResult = std::result::Result<(), Failure>;

fn parse_vec(s: &str) -> Result<Vec<f64>> {
    let t = s.trim();
    let v: Vec<f64> = if t.starts_with('[') {
        serde_json::from_str(t).with_context(|| format!("malformed JSON vector '{t}'"))?
    } else {
        t.split(',').map(|p| p.trim().parse::<f64>().with_context(|| format!("bad number '{p}'"))).collect::<Result<_>>()?
    };
    if v.iter().any(|x| !x.is_finite()) {
        bail!("vector '{t}' contains non-finite values");
    }
    Ok(v)
}

fn bench(a: BenchArgs) -> CmdResult {
    let name: BenchmarkName = a.problem.parse().map_err(|e| usage(anyhow!("{e}")))?;
    let spec = BenchmarkSpec::get(name);
    let kind = match &a.surrogate {
        Some(s) => s.parse::<SurrogateKind>().map_err(|e| usage(anyhow!("{e}")))?,
        None => spec.surrogate,
    };
    let methods = a
        .methods
        .split(',')
        .map(|m| m.trim().parse::<Method>())
        .collect::<jcl::Result<Vec<_>>>()
        .map_err(|e| usage(anyhow!("{e}")))?;
    if a.reps == 0 {
        return Err(usage(anyhow!("--reps must be at least 1")));
    }
    let mut config = spec.config(a.seed);
    a.tuning.apply(&mut config);
    config.validate().map_err(|e| usage(anyhow!("{e}")))?;

    let problem = make_problem(&spec);
    let result = run_campaign(&problem, &config, kind, &methods, a.reps, a.seed).map_err(|e| runtime(anyhow!("{e}")))?;

    let file = File::create(&a.out).with_context(|| format!("creating {}", a.out.display())).map_err(runtime)?;
    let mut w = ResultWriter::new(BufWriter::new(file), spec.d, spec.r()).map_err(|e| runtime(anyhow!("{e}")))?;
    for run in &result.runs {
        for row in ResultRow::from_trace(&run.record, run.rep, !a.no_timing) {
            w.write(&row).map_err(|e| runtime(anyhow!("{e}")))?;
        }
    }
    w.flush().map_err(|e| runtime(anyhow!("{e}")))?;

    let failed: Vec<_> = result.failures().collect();
    for f in &failed {
        eprintln!(
            "run {} rep {} failed after {} rows: {}",
            f.method,
            f.rep,
            f.record.rows.len(),
            f.record.failure.as_deref().unwrap_or("unknown error")
        );
    }
    if !failed.is_empty() {
        return Err(runtime(anyhow!("{} of {} runs failed; partial traces kept in {}", failed.len(), result.runs.len(), a.out.display())));
    }
    let reached = result.runs.iter().filter(|r| r.record.status == Status::EpsilonReached).count();
    eprintln!("{} runs written to {} ({} reached epsilon)", result.runs.len(), a.out.display(), reached);
    Ok(())
}

fn summary(input: PathBuf, out: Option<PathBuf>) -> CmdResult {
    let file = File::open(&input).with_context(|| format!("opening {}", input.display())).map_err(usage)?;
    let (_, _, rows) = read_results(file).map_err(|e| usage(anyhow!("{e}")))?;
    let table = summarize_rows(&rows);
    match out {
        Some(p) => {
            let f = File::create(&p).with_context(|| format!("creating {}", p.display())).map_err(runtime)?;
            write_summary(BufWriter::new(f), &table)
                .and_then(|mut w| w.flush().map_err(|e| jcl::Error::Unknown(e.to_string())))
                .map_err(|e| runtime(anyhow!("{e}")))?;
        }
        None => {
            let buf = write_summary(Vec::new(), &table).map_err(|e| runtime(anyhow!("{e}")))?;
            io::stdout().write_all(&buf).map_err(|e| runtime(e.into()))?;
        }
    }
    Ok(())
}

/// Exclusive lock on a state file, released on drop.
struct StateLock(PathBuf);

impl StateLock {
    fn acquire(state: &Path) -> Result<Self> {
        let mut p = state.as_os_str().to_owned();
        p.push(".lock");
        let p = PathBuf::from(p);
        OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&p)
            .with_context(|| format!("state {} is locked by another process ({} exists)", state.display(), p.display()))?;
        Ok(StateLock(p))
    }
}

impl Drop for StateLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn load_state(path: &Path) -> Result<SessionState> {
    let text = fs::read_to_string(path).with_context(|| format!("reading state {}", path.display()))?;
    Ok(SessionState::from_json(&text)?)
}

/// Writes to a sibling temporary file, then renames over the target.
fn save_state(path: &Path, state: &SessionState) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(state.to_json()?.as_bytes())?;
        f.write_all(b"\n")?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("replacing {}", path.display()))?;
    Ok(())
}

fn init(a: InitArgs) -> CmdResult {
    let kind: SurrogateKind = a.surrogate.parse().map_err(|e| usage(anyhow!("{e}")))?;
    let (d, mut config) = match &a.problem {
        Some(p) => {
            let spec = BenchmarkSpec::get(p.parse().map_err(|e| usage(anyhow!("{e}")))?);
            (spec.d, spec.config(a.seed))
        }
        None => {
            let d = a.dim.ok_or_else(|| usage(anyhow!("--dim is required without --problem")))?;
            let t = a.targets.as_deref().ok_or_else(|| usage(anyhow!("--targets is required without --problem")))?;
            let targets = parse_vec(t).map_err(usage)?;
            let n0 = a.tuning.n0.unwrap_or(5);
            (d, JclConfig::new(targets, n0, a.tuning.budget.unwrap_or(n0 + 20), a.seed))
        }
    };
    a.tuning.apply(&mut config);
    if a.state.exists() && !a.force {
        return Err(usage(anyhow!("{} exists (pass --force to overwrite)", a.state.display())));
    }
    let session = JclSession::new(config, kind, d).map_err(|e| usage(anyhow!("{e}")))?;
    save_state(&a.state, &SessionState::new(session)).map_err(runtime)?;
    println!("{}", json!({"ok": true, "d": d, "state": a.state.display().to_string()}));
    Ok(())
}

// field order is part of the protocol
#[derive(Serialize)]
struct SuggestLine {
    x: Vec<f64>,
    mode: &'static str,
    jmax: Option<f64>,
    t: Option<f64>,
}

#[derive(Serialize)]
struct DoneLine {
    done: bool,
    reason: StopReason,
}

fn suggest(state: PathBuf) -> CmdResult {
    let _lock = StateLock::acquire(&state).map_err(usage)?;
    let mut st = load_state(&state).map_err(usage)?;
    let step = st.session.suggest().map_err(|e| runtime(anyhow!("{e}")))?;
    let line = match step {
        Step::Done(reason) => serde_json::to_string(&DoneLine { done: true, reason }),
        Step::Suggest(s) => {
            let mode = match s.mode {
                Mode::Initial => "initial",
                Mode::Exploit => "exploit",
                _ => "explore",
            };
            serde_json::to_string(&SuggestLine { x: s.x, mode, jmax: s.jmax, t: s.t })
        }
    }
    .map_err(|e| runtime(e.into()))?;
    save_state(&state, &st).map_err(runtime)?;
    println!("{line}");
    Ok(())
}

fn tell(state: PathBuf, x: &str, y: &str) -> CmdResult {
    let _lock = StateLock::acquire(&state).map_err(usage)?;
    let mut st = load_state(&state).map_err(usage)?;
    let x = parse_vec(x).map_err(usage)?;
    let y = parse_vec(y).map_err(usage)?;
    st.session.tell(x, y).map_err(|e| usage(anyhow!("{e}")))?;
    save_state(&state, &st).map_err(runtime)?;
    println!("{}", json!({"ok": true, "n": st.session.data.n()}));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let machine_errors = matches!(cli.command, Command::Suggest { .. } | Command::Tell { .. });
    let result = match cli.command {
        Command::Bench(a) => bench(a),
        Command::Summary { input, out } => summary(input, out),
        Command::Init(a) => init(a),
        Command::Suggest { state } => suggest(state),
        Command::Tell { state, x, y } => tell(state, &x, &y),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if machine_errors {
                println!("{}", json!({"error": format!("{:#}", f.error), "code": f.code}));
            }
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
