use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ruin_asym::asym::AsymError;
use ruin_asym::config::{self, parse_x_grid, ConfigError, ScenarioConfig, PRESETS};
use ruin_asym::mc::estimate_tail;
use ruin_asym::quad::Tolerance;
use ruin_asym::report::{self, Check, ReportError};
use ruin_asym::validate::{Outcome, ValidateError};

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;
const EXIT_INCONCLUSIVE: u8 = 4;

/// Tail asymptotics and Monte-Carlo estimates for discounted aggregate claims.
#[derive(Parser)]
#[command(name = "ruin-asym", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo tail probabilities with Wilson intervals.
    Simulate(ScenarioArgs),
    /// First- and second-order asymptotics with each correction term.
    Asymptotics(ScenarioArgs),
    /// Monte-Carlo estimates beside the asymptotic approximations.
    Compare(ScenarioArgs),
    /// Numerical checks of the ingredients behind the expansions.
    Validate {
        #[arg(value_enum)]
        check: CheckArg,
        /// Draws per Monte-Carlo estimate; defaults to --samples.
        #[arg(long)]
        mc_n: Option<u64>,
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// List presets, or print one as a scenario file.
    Presets { name: Option<String> },
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    S2,
    Kesten,
    Lemma62,
    Lemma63,
    Lemma64,
}

impl From<CheckArg> for Check {
    fn from(c: CheckArg) -> Self {
        match c {
            CheckArg::S2 => Check::S2,
            CheckArg::Kesten => Check::Kesten,
            CheckArg::Lemma62 => Check::Lemma62,
            CheckArg::Lemma63 => Check::Lemma63,
            CheckArg::Lemma64 => Check::Lemma64,
        }
    }
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario; pareto-s4 when neither this nor --config is given.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo substreams; RUIN_ASYM_THREADS takes precedence.
    #[arg(long)]
    workers: Option<usize>,
    /// `a,b,c` or `logspace:lo:hi:count`.
    #[arg(long)]
    x_grid: Option<String>,
    /// Evaluation time, at most the scenario's horizon cap.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    quad_tol: Option<f64>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    NoConvergence(String),
    Other(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<AsymError> for Failure {
    fn from(e: AsymError) -> Self {
        match e {
            AsymError::Quad(_) | AsymError::Dist(_) => Failure::NoConvergence(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Asym(a) | ReportError::Validate(ValidateError::Asym(a)) => a.into(),
            ReportError::Validate(ValidateError::Quad(q)) => Failure::NoConvergence(q.to_string()),
            ReportError::Mc(m) => Failure::Config(m.to_string()),
            e => Failure::Other(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig, Failure> {
        let mut c = match &self.config {
            Some(path) => config::parse_scenario(path)?,
            None => config::preset(self.preset.as_deref().unwrap_or("pareto-s4"))?,
        };
        let run = &mut c.run;
        if let Some(n) = self.samples {
            run.samples = n;
        }
        if let Some(s) = self.seed {
            run.seed = s;
        }
        if let Some(w) = self.workers {
            run.workers = w;
        }
        if let Ok(v) = std::env::var("RUIN_ASYM_THREADS") {
            run.workers = v
                .parse()
                .map_err(|_| Failure::Config(format!("RUIN_ASYM_THREADS: not a count: {v:?}")))?;
        }
        if let Some(g) = &self.x_grid {
            run.x_grid = parse_x_grid(g)?;
        }
        if let Some(q) = self.quad_tol {
            if !(q > 0.0 && q < 1.0) {
                return Err(Failure::Config("--quad-tol must lie in (0, 1)".into()));
            }
            run.quad_tol = q;
            c.scenario = c.scenario.with_tolerance(Tolerance::relative(q));
        }
        if let Some(t) = self.t {
            c.scenario = c.scenario.at_time(t)?;
        }
        if c.run.samples == 0 || c.run.workers == 0 {
            return Err(Failure::Config("samples and workers must be >= 1".into()));
        }
        Ok(c)
    }

    fn sink(&self) -> Result<Box<dyn Write>, Failure> {
        Ok(match &self.out {
            Some(path) => Box::new(File::create(path)?),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Simulate(a) => {
            let c = a.load()?;
            let r = &c.run;
            let rows = estimate_tail(&c.scenario, &r.x_grid, r.samples, r.seed, r.workers)
                .map_err(ReportError::from)?;
            report::write_simulate_csv(a.sink()?, &rows)?;
        }
        Command::Asymptotics(a) => {
            let c = a.load()?;
            let rows = report::breakdowns(&c.scenario, &c.run.x_grid)?;
            report::write_asymptotics_csv(a.sink()?, &rows)?;
        }
        Command::Compare(a) => {
            let c = a.load()?;
            let rows = report::run_compare(&c.scenario, &c.run)?;
            report::write_compare_csv(a.sink()?, &rows)?;
        }
        Command::Validate { check, mc_n, scenario: a } => {
            let c = a.load()?;
            let check = Check::from(check);
            let grid = match &a.x_grid {
                Some(_) => c.run.x_grid.clone(),
                None => check.default_grid(),
            };
            let r = &c.run;
            let rows = report::run_check(check, &c.scenario, &grid, mc_n.unwrap_or(r.samples), r.seed, r.workers)?;
            report::write_validation_csv(a.sink()?, &rows)?;
            let verdicts: Vec<Outcome> = rows
                .iter()
                .filter(|row| check != Check::S2 || row.check == "s2-verdict")
                .filter(|row| check != Check::Kesten || row.check == "kesten-slope")
                .map(|row| row.outcome)
                .collect();
            if verdicts.contains(&Outcome::Fail) {
                return Ok(EXIT_FAIL);
            }
            if verdicts.contains(&Outcome::Inconclusive) {
                return Ok(EXIT_INCONCLUSIVE);
            }
        }
        Command::Presets { name: None } => {
            let mut out = io::stdout().lock();
            for (name, _) in PRESETS {
                writeln!(out, "{name}")?;
            }
        }
        Command::Presets { name: Some(name) } => {
            print!("{}", config::preset_text(&name)?);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let (code, msg) = match f {
                Failure::Config(m) => (EXIT_CONFIG, m),
                Failure::NoConvergence(m) => (EXIT_NO_CONVERGENCE, m),
                Failure::Other(m) => (EXIT_FAIL, m),
            };
            eprintln!("ruin-asym: {msg}");
            ExitCode::from(code)
        }
    }
}
