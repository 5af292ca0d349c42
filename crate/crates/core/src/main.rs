use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::rngs::StdRng;
use rand::SeedableRng;

use seqcert::circuit::{kraus_deviation, random_case, AncillaMode};
use seqcert::experiment::{
    compare, find_crossover, run_experiment, CrossoverStudy, ExperimentConfig, Format, Grid, Preset,
};
use seqcert::lhs::enumerate_strategies;
use seqcert::measurement::build_assemblage;
use seqcert::sdp::{steering_weight, ClarabelSolver};
use seqcert::{
    certify, ion_trap_state, pure_state, BitString, CertifyOptions, Error, MeasurementSchedule,
    Result, TwoQubitState,
};

#[derive(Parser)]
#[command(
    version,
    about = "Randomness certification for sequential qubit measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format: csv or json.
    #[arg(long, global = true, default_value = "json")]
    format: String,

    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Scale of the explicit final-round functional.
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Solver feasibility and optimality tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Only require Eve to reach at least the observed violations.
    #[arg(long, global = true)]
    relax_violation: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Guessing probability and min-entropy for one configuration.
    Certify(PointArgs),
    /// Sweep the first-round angle for a preset or a JSON config.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Steering weight of every round's assemblage.
    SteeringWeight(PointArgs),
    /// Compare the circuit simulation against the Kraus engine.
    OracleCheck {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Bisect on raw-state infidelity for where longer sequences stop paying off.
    Crossover {
        /// two-vs-one or three-vs-two.
        #[arg(long, default_value = "two-vs-one")]
        study: String,
        #[arg(long)]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
        #[arg(long)]
        width: Option<f64>,
        #[arg(long, default_value_t = seqcert::experiment::DEFAULT_GRID_POINTS)]
        points: usize,
        /// Only compare at these infidelities instead of bisecting.
        #[arg(long, value_delimiter = ',')]
        at: Vec<f64>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Args)]
struct PointArgs {
    /// Entanglement angle of the pure state.
    #[arg(long, conflicts_with = "epsilon")]
    zeta: Option<f64>,
    /// Infidelity of the ion-trap state.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Purification rounds applied to the ion-trap state.
    #[arg(long, default_value_t = 0)]
    purification_round: u8,
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    #[arg(long, default_value_t = 0.0)]
    theta1: f64,
    #[arg(long, default_value_t = 0.0)]
    phi2: f64,
    /// Settings to extract randomness from, round 1 first.
    #[arg(long)]
    y_star: Option<String>,
}

impl PointArgs {
    fn state(&self) -> Result<TwoQubitState> {
        match (self.zeta, self.epsilon) {
            (_, Some(e)) => ion_trap_state(e, self.purification_round),
            (Some(z), None) => pure_state(z),
            (None, None) => pure_state(PI / 4.0),
        }
    }

    fn schedule(&self) -> Result<MeasurementSchedule> {
        let y_star: BitString = match &self.y_star {
            Some(s) => s.parse()?,
            // alternate X, Z, X, ... starting with X
            None => BitString::from_bits(
                &(0..self.rounds)
                    .map(|i| ((i + 1) % 2) as u8)
                    .collect::<Vec<_>>(),
            ),
        };
        MeasurementSchedule::standard(self.rounds, self.theta1, self.phi2, y_star)
    }
}

impl Cli {
    fn options(&self, base: CertifyOptions) -> CertifyOptions {
        CertifyOptions {
            alpha: self.alpha.unwrap_or(base.alpha),
            tol: self.tol.unwrap_or(base.tol),
            relax_violation: self.relax_violation || base.relax_violation,
            ..base
        }
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(io::stdout().lock()),
        })
    }

    fn write_json<T: serde::Serialize>(&self, value: &T) -> Result<()> {
        let mut w = self.output()?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        Ok(())
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let format: Format = cli.format.parse()?;
    match &cli.command {
        Command::Certify(p) => {
            let report = certify(
                &p.state()?,
                &p.schedule()?,
                &cli.options(Default::default()),
            )?;
            cli.write_json(&report)?;
            Ok(true)
        }
        Command::Sweep {
            config,
            preset,
            workers,
        } => {
            let mut cfg = match (config, preset) {
                (Some(path), _) => ExperimentConfig::load(path)?,
                (None, Some(name)) => ExperimentConfig::from_preset(name.parse::<Preset>()?),
                (None, None) => {
                    return Err(Error::InvalidConfig(
                        "sweep needs --config or --preset".into(),
                    ))
                }
            };
            if config.is_some() {
                if let Some(name) = preset {
                    cfg.preset = Some(name.parse()?);
                }
            }
            cfg.options = cli.options(cfg.options);
            if workers.is_some() {
                cfg.workers = *workers;
            }
            let table = run_experiment(&cfg)?;
            table.write(format, cli.output()?)?;
            Ok(!table.any_failed())
        }
        Command::SteeringWeight(p) => {
            let state = p.state()?;
            let schedule = p.schedule()?;
            let solver = ClarabelSolver::with_tol(cli.options(Default::default()).tol);
            let mut weights = Vec::new();
            for k in 1..=schedule.n_rounds() {
                let a = build_assemblage(&state, &schedule, k)?;
                let (sw, f) = steering_weight(&a, &enumerate_strategies(k)?, &solver)?;
                weights.push(serde_json::json!({
                    "round": k,
                    "steering_weight": sw,
                    "violation": f.violation(),
                    "status": f.status(),
                }));
            }
            cli.write_json(&weights)?;
            Ok(true)
        }
        Command::OracleCheck { cases, seed } => {
            let mut rng = StdRng::seed_from_u64(*seed);
            let mut worst: f64 = 0.0;
            for _ in 0..*cases {
                let (state, schedule, y) = random_case(&mut rng)?;
                for mode in [
                    AncillaMode::Deferred,
                    AncillaMode::Immediate,
                    AncillaMode::SingleReset,
                ] {
                    worst = worst.max(kraus_deviation(&state, &schedule, y, mode)?);
                }
            }
            let pass = worst <= 1e-10;
            cli.write_json(&serde_json::json!({
                "cases": cases,
                "max_deviation": worst,
                "pass": pass,
            }))?;
            Ok(pass)
        }
        Command::Crossover {
            study,
            lo,
            hi,
            width,
            points,
            at,
            workers,
        } => {
            let study = match study.as_str() {
                "two-vs-one" => CrossoverStudy::TwoVsOne,
                "three-vs-two" => CrossoverStudy::ThreeVsTwo,
                other => return Err(Error::Parse(format!("unknown study {other:?}"))),
            };
            let grid = Grid {
                points: *points,
                ..Grid::default()
            };
            let options = cli.options(Default::default());
            if !at.is_empty() {
                let rows = at
                    .iter()
                    .map(|&e| compare(study, e, &grid, &options, *workers))
                    .collect::<Result<Vec<_>>>()?;
                cli.write_json(&rows)?;
                return Ok(true);
            }
            let (d_lo, d_hi, d_width) = study.default_search();
            let result = find_crossover(
                study,
                lo.unwrap_or(d_lo),
                hi.unwrap_or(d_hi),
                width.unwrap_or(d_width),
                &grid,
                &options,
                *workers,
            )?;
            cli.write_json(&result)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
