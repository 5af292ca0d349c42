//! Parameter sweeps over the first-round measurement angle, named presets
//! for the standard study families, crossover searches over state noise and
//! CSV/JSON table output.

use std::f64::consts::PI;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::measurement::MeasurementSchedule;
use crate::sdp::{certify, CertifyOptions};
use crate::states::{ion_trap_state, pure_state, TwoQubitState};

/// Default number of `θ₁` grid points.
pub const DEFAULT_GRID_POINTS: usize = 60;

/// Default second-round Z angle for three-round series.
pub const DEFAULT_PHI2: f64 = 0.08;

/// How much one max `H_min` must exceed another to count as a gain.
pub const GAIN_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    Pure { zeta: f64 },
    IonTrap { epsilon: f64, round: u8 },
}

impl StateSpec {
    pub fn build(&self) -> Result<TwoQubitState> {
        match *self {
            StateSpec::Pure { zeta } => pure_state(zeta),
            StateSpec::IonTrap { epsilon, round } => ion_trap_state(epsilon, round),
        }
    }

    fn zeta(&self) -> Option<f64> {
        match *self {
            StateSpec::Pure { zeta } => Some(zeta),
            StateSpec::IonTrap { .. } => None,
        }
    }

    fn epsilon(&self) -> Option<(f64, u8)> {
        match *self {
            StateSpec::Pure { .. } => None,
            StateSpec::IonTrap { epsilon, round } => Some((epsilon, round)),
        }
    }
}

/// One curve: a state, a round count and the settings randomness is
/// extracted from. `phi2` only matters for three rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub state: StateSpec,
    pub n_rounds: usize,
    pub y_star: BitString,
    #[serde(default)]
    pub phi2: f64,
}

impl SeriesSpec {
    pub fn new(state: StateSpec, n_rounds: usize, y_star: &str, phi2: f64) -> Self {
        Self {
            state,
            n_rounds,
            y_star: y_star.parse().expect("valid preset setting string"),
            phi2,
        }
    }

    pub fn schedule(&self, theta1: f64) -> Result<MeasurementSchedule> {
        MeasurementSchedule::standard(self.n_rounds, theta1, self.phi2, self.y_star)
    }
}

/// Uniform grid over `θ₁`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            start: 0.0,
            end: PI / 4.0,
            points: DEFAULT_GRID_POINTS,
        }
    }
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|i| {
                    if i == n - 1 {
                        self.end
                    } else {
                        self.start + (self.end - self.start) * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return Err(Error::InvalidConfig("empty θ1 grid".into()));
        }
        for x in [self.start, self.end] {
            if !(0.0..=PI / 4.0).contains(&x) {
                return Err(Error::AngleOutOfRange {
                    angle: x,
                    min: 0.0,
                    max: PI / 4.0,
                });
            }
        }
        if self.start > self.end {
            return Err(Error::InvalidConfig(format!(
                "θ1 grid start {} exceeds end {}",
                self.start, self.end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    FigOneRound,
    FigTwoRounds,
    FigTwoRoundsSettings,
    FigThreeRounds,
    IonTrapOne,
    IonTrapTwo,
    IonTrapThree,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::FigOneRound,
        Preset::FigTwoRounds,
        Preset::FigTwoRoundsSettings,
        Preset::FigThreeRounds,
        Preset::IonTrapOne,
        Preset::IonTrapTwo,
        Preset::IonTrapThree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::FigOneRound => "fig_one_round",
            Preset::FigTwoRounds => "fig_two_rounds",
            Preset::FigTwoRoundsSettings => "fig_two_rounds_settings",
            Preset::FigThreeRounds => "fig_three_rounds",
            Preset::IonTrapOne => "ion_trap_one",
            Preset::IonTrapTwo => "ion_trap_two",
            Preset::IonTrapThree => "ion_trap_three",
        }
    }

    pub fn series(self) -> Vec<SeriesSpec> {
        let pure = |zeta| StateSpec::Pure { zeta };
        let max_ent = pure(PI / 4.0);
        // Raw infidelity fed through 0..=3 purification rounds, plus a
        // noiseless reference.
        let ion_family = || {
            (0..=3u8)
                .map(|round| StateSpec::IonTrap {
                    epsilon: 0.15,
                    round,
                })
                .chain([StateSpec::IonTrap {
                    epsilon: 0.0,
                    round: 0,
                }])
        };
        match self {
            Preset::FigOneRound => [0.0, PI / 32.0, PI / 16.0, PI / 8.0, PI / 4.0]
                .into_iter()
                .map(|z| SeriesSpec::new(pure(z), 1, "1", 0.0))
                .collect(),
            Preset::FigTwoRounds => [PI / 32.0, PI / 16.0, PI / 8.0, PI / 4.0]
                .into_iter()
                .map(|z| SeriesSpec::new(pure(z), 2, "10", 0.0))
                .collect(),
            Preset::FigTwoRoundsSettings => ["10", "11"]
                .into_iter()
                .map(|y| SeriesSpec::new(max_ent, 2, y, 0.0))
                .collect(),
            Preset::FigThreeRounds => {
                let mut s: Vec<_> = [PI / 4.0, PI / 5.0, PI / 7.0, PI / 8.0, PI / 12.0]
                    .into_iter()
                    .map(|z| SeriesSpec::new(pure(z), 3, "101", DEFAULT_PHI2))
                    .collect();
                s.extend(BitString::all(3).map(|y| SeriesSpec {
                    state: max_ent,
                    n_rounds: 3,
                    y_star: y,
                    phi2: DEFAULT_PHI2,
                }));
                s.extend(
                    [0.08, 0.1, 0.2, 0.4, PI / 4.0]
                        .into_iter()
                        .map(|phi| SeriesSpec::new(max_ent, 3, "101", phi)),
                );
                s
            }
            Preset::IonTrapOne => ion_family()
                .map(|st| SeriesSpec::new(st, 1, "1", 0.0))
                .collect(),
            Preset::IonTrapTwo => ion_family()
                .map(|st| SeriesSpec::new(st, 2, "10", 0.0))
                .collect(),
            Preset::IonTrapThree => ion_family()
                .chain(
                    [5e-3, 5e-4, 3e-4, 2e-4, 1e-4]
                        .into_iter()
                        .map(|epsilon| StateSpec::IonTrap { epsilon, round: 0 }),
                )
                .map(|st| SeriesSpec::new(st, 3, "101", DEFAULT_PHI2))
                .collect(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown preset {s:?}")))
    }
}

/// A sweep: the preset's series (if any) followed by explicit ones, each
/// evaluated on every `θ₁` grid point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub preset: Option<Preset>,
    pub series: Vec<SeriesSpec>,
    pub theta1: Grid,
    pub options: CertifyOptions,
    /// Worker threads; `None` uses all available cores.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_preset(preset: Preset) -> Self {
        Self {
            preset: Some(preset),
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut text = String::new();
        File::open(path)?.read_to_string(&mut text)?;
        Self::from_json(&text)
    }

    pub fn all_series(&self) -> Vec<SeriesSpec> {
        let mut s = self.preset.map(Preset::series).unwrap_or_default();
        s.extend(self.series.iter().cloned());
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.theta1.validate()?;
        let series = self.all_series();
        if series.is_empty() {
            return Err(Error::InvalidConfig("no series to run".into()));
        }
        for s in &series {
            s.state.build()?;
            s.schedule(self.theta1.start)?;
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be positive".into()));
        }
        if self.options.alpha.is_nan()
            || self.options.alpha <= 0.0
            || self.options.tol.is_nan()
            || self.options.tol <= 0.0
        {
            return Err(Error::InvalidConfig(
                "alpha and tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One grid point. Parameters that do not apply to the row's series are
/// `None` and serialize as empty CSV fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub n_rounds: usize,
    pub zeta1: Option<f64>,
    pub epsilon: Option<f64>,
    pub purification_round: Option<u8>,
    pub theta1: f64,
    pub phi2: Option<f64>,
    pub theta3: Option<f64>,
    pub y_star: BitString,
    pub v1: Option<f64>,
    pub v2: Option<f64>,
    pub v3: Option<f64>,
    pub p_guess: Option<f64>,
    pub h_min: Option<f64>,
    pub best_guess: Option<BitString>,
    /// Solver verdict, or `error: <message>` when the point failed.
    pub status: String,
    pub seconds: f64,
}

impl Row {
    pub fn failed(&self) -> bool {
        self.status.starts_with("error")
    }
}

fn run_point(series: &SeriesSpec, theta1: f64, options: &CertifyOptions) -> Row {
    let start = Instant::now();
    let n = series.n_rounds;
    let mut row = Row {
        n_rounds: n,
        zeta1: series.state.zeta(),
        epsilon: series.state.epsilon().map(|e| e.0),
        purification_round: series.state.epsilon().map(|e| e.1),
        theta1,
        phi2: (n >= 2).then_some(if n >= 3 { series.phi2 } else { 0.0 }),
        theta3: (n >= 3).then_some(0.0),
        y_star: series.y_star,
        v1: None,
        v2: None,
        v3: None,
        p_guess: None,
        h_min: None,
        best_guess: None,
        status: String::new(),
        seconds: 0.0,
    };
    let result = series.state.build().and_then(|state| {
        let schedule = series.schedule(theta1)?;
        certify(&state, &schedule, options)
    });
    match result {
        Ok(report) => {
            let v = &report.per_round_violations;
            row.v1 = v.first().copied();
            row.v2 = v.get(1).copied();
            row.v3 = v.get(2).copied();
            row.p_guess = Some(report.guessing_probability);
            row.h_min = Some(report.min_entropy_bits);
            row.best_guess = Some(report.best_guess);
            row.status = report.solver_status.to_string();
        }
        Err(e) => {
            log::warn!("θ1 = {theta1}: {e}");
            row.status = format!("error: {e}");
        }
    }
    row.seconds = start.elapsed().as_secs_f64();
    row
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w);
    }
    b.build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))
}

/// Evaluates every (series, `θ₁`) point. Rows come back in grid order:
/// series by series, `θ₁` ascending within each.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Table> {
    config.validate()?;
    let thetas = config.theta1.values();
    let points: Vec<(SeriesSpec, f64)> = config
        .all_series()
        .into_iter()
        .flat_map(|s| thetas.iter().map(move |&t| (s.clone(), t)))
        .collect();
    let rows = pool(config.workers)?.install(|| {
        points
            .par_iter()
            .map(|(s, t)| run_point(s, *t, &config.options))
            .collect()
    });
    Ok(Table { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Parse(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Table {
    pub rows: Vec<Row>,
}

impl Table {
    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(Row::failed)
    }

    /// Largest `H_min` among successful rows.
    pub fn max_min_entropy(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.h_min)
            .fold(None, |acc, h| Some(acc.map_or(h, |a: f64| a.max(h))))
    }

    pub fn write<W: Write>(&self, format: Format, w: W) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::InvalidConfig(
                "refusing to emit an empty table".into(),
            ));
        }
        match format {
            Format::Csv => {
                let mut out = csv::Writer::from_writer(w);
                for r in &self.rows {
                    out.serialize(r)?;
                }
                out.flush()?;
            }
            Format::Json => {
                let mut w = w;
                serde_json::to_writer_pretty(&mut w, self)?;
                writeln!(w)?;
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(format: Format, r: R) -> Result<Self> {
        match format {
            Format::Csv => {
                let rows = csv::Reader::from_reader(r)
                    .deserialize()
                    .collect::<std::result::Result<Vec<Row>, _>>()?;
                Ok(Self { rows })
            }
            Format::Json => Ok(serde_json::from_reader(r)?),
        }
    }
}

/// Writes `table` to `path` in `format`.
pub fn emit(table: &Table, format: Format, path: &Path) -> Result<()> {
    table.write(format, BufWriter::new(File::create(path)?))
}

/// Largest `H_min` over `grid` for `series`; fails only if every point failed.
pub fn max_min_entropy(
    series: &SeriesSpec,
    grid: &Grid,
    options: &CertifyOptions,
    workers: Option<usize>,
) -> Result<f64> {
    let config = ExperimentConfig {
        preset: None,
        series: vec![series.clone()],
        theta1: *grid,
        options: options.clone(),
        workers,
    };
    let table = run_experiment(&config)?;
    table.max_min_entropy().ok_or_else(|| {
        Error::InvalidProblem(format!(
            "every θ1 point failed for {series:?}: {}",
            table.rows[0].status
        ))
    })
}

/// Noise studies comparing a longer sequence against a shorter one on raw
/// ion-trap states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossoverStudy {
    TwoVsOne,
    ThreeVsTwo,
}

impl CrossoverStudy {
    /// `(shorter, longer)` series at infidelity `epsilon`.
    pub fn series(self, epsilon: f64) -> (SeriesSpec, SeriesSpec) {
        let st = StateSpec::IonTrap { epsilon, round: 0 };
        match self {
            CrossoverStudy::TwoVsOne => (
                SeriesSpec::new(st, 1, "1", 0.0),
                SeriesSpec::new(st, 2, "10", 0.0),
            ),
            CrossoverStudy::ThreeVsTwo => (
                SeriesSpec::new(st, 2, "10", 0.0),
                SeriesSpec::new(st, 3, "101", DEFAULT_PHI2),
            ),
        }
    }

    /// Default bracket and target width.
    pub fn default_search(self) -> (f64, f64, f64) {
        match self {
            CrossoverStudy::TwoVsOne => (0.0, 0.15, 5e-3),
            CrossoverStudy::ThreeVsTwo => (0.0, 5e-3, 2.5e-5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub epsilon: f64,
    pub shorter: f64,
    pub longer: f64,
}

impl Comparison {
    pub fn longer_wins(&self) -> bool {
        self.longer > self.shorter + GAIN_MARGIN
    }
}

pub fn compare(
    study: CrossoverStudy,
    epsilon: f64,
    grid: &Grid,
    options: &CertifyOptions,
    workers: Option<usize>,
) -> Result<Comparison> {
    let (short, long) = study.series(epsilon);
    Ok(Comparison {
        epsilon,
        shorter: max_min_entropy(&short, grid, options, workers)?,
        longer: max_min_entropy(&long, grid, options, workers)?,
    })
}

/// Bracket `(lo, hi)` on infidelity where the longer sequence stops
/// certifying more randomness than the shorter one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    pub lo: f64,
    pub hi: f64,
    pub evaluations: Vec<Comparison>,
}

/// Bisection on `ε ∈ [lo, hi]`, assuming the longer sequence wins at `lo`
/// and loses at `hi`, until the bracket is narrower than `width`.
pub fn find_crossover(
    study: CrossoverStudy,
    lo: f64,
    hi: f64,
    width: f64,
    grid: &Grid,
    options: &CertifyOptions,
    workers: Option<usize>,
) -> Result<Crossover> {
    if lo.is_nan() || hi.is_nan() || lo >= hi || width.is_nan() || width <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "bad crossover bracket [{lo}, {hi}] with width {width}"
        )));
    }
    let mut evaluations = Vec::new();
    let mut eval = |eps| -> Result<bool> {
        let c = compare(study, eps, grid, options, workers)?;
        log::info!(
            "ε = {eps:.6e}: shorter {:.6}, longer {:.6}",
            c.shorter,
            c.longer
        );
        evaluations.push(c);
        Ok(c.longer_wins())
    };
    if !eval(lo)? {
        return Err(Error::InvalidConfig(format!(
            "longer sequence does not win at the lower end ε = {lo}"
        )));
    }
    if eval(hi)? {
        return Err(Error::InvalidConfig(format!(
            "longer sequence still wins at the upper end ε = {hi}"
        )));
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Crossover {
        lo,
        hi,
        evaluations,
    })
}
