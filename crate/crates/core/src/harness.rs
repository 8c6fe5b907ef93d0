//! Subcommand runners behind the `paretolearn` binary.
//!
//! Every runner writes into its own output directory and finishes with a
//! `manifest.json` holding the resolved configuration, the input fingerprint
//! and the files produced.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::{analyze, verify_lemmas, write_edge_list, AnalysisConfig, AnalysisReport, LemmaReport};
use crate::error::{Error, Result};
use crate::game::{random_interdependent_game, ActionProfile, Game, RandomGameSpec};
use crate::learner::{run, EpsilonSchedule, LearnerConfig, RhoSetting};
use crate::traffic::{
    calibrate, load_or_build_traffic_game, DemandProfile, FreewaySpec, TrafficComparison,
    DEFAULT_RAMP_CAP,
};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "PARETOLEARN_OUT";

/// Histogram rows at or below this fraction are dropped.
pub const DEFAULT_THRESHOLD: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    Validation,
    VerificationFailed,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Validation => 1,
            ExitStatus::VerificationFailed => 2,
        }
    }
}

/// What a runner hands back to the binary.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub status: ExitStatus,
    pub message: String,
    pub out_dir: PathBuf,
}

/// Learner parameters plus the game they apply to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Game path, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game: Option<String>,
    pub epsilon: EpsilonSchedule,
    pub c: f64,
    #[serde(default)]
    pub rho: RhoSetting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub iterations: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
}

impl RunConfig {
    /// The ramp-coordination settings: ε = 1e-4, c = 10, β = 5e-5, ρ = 0.6,
    /// 1000 iterations.
    pub fn ramp_coordination(seed: u64) -> Self {
        RunConfig {
            game: None,
            epsilon: EpsilonSchedule::fixed(1e-4),
            c: 10.0,
            rho: RhoSetting::Value(0.6),
            beta: Some(5e-5),
            iterations: 1000,
            seed,
            threshold: None,
            eps_grid: None,
        }
    }

    /// Reads a config file, or the config embedded in a manifest. A relative
    /// `game` path is resolved against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |source| Error::Parse {
            context: path.display().to_string(),
            source,
        };
        let value: serde_json::Value = serde_json::from_str(&text).map_err(parse_err)?;
        let mut config: RunConfig = if value.get("subcommand").is_some() {
            serde_json::from_value::<RunManifest>(value)
                .map_err(parse_err)?
                .config
                .ok_or_else(|| Error::InvalidConfig(format!("{}: manifest has no config", path.display())))?
        } else {
            serde_json::from_value(value).map_err(parse_err)?
        };
        if let Some(game) = &config.game {
            let p = Path::new(game);
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new(""));
                config.game = Some(absolute(&base.join(p)));
            }
        }
        Ok(config)
    }

    pub fn learner(&self) -> LearnerConfig {
        LearnerConfig {
            epsilon: self.epsilon,
            c: self.c,
            rho: self.rho,
            beta: self.beta,
            iterations: self.iterations,
            seed: self.seed,
            keep_records: false,
        }
    }

    pub fn analysis(&self) -> AnalysisConfig {
        let mut a = AnalysisConfig::new(self.c);
        a.rho = self.rho;
        a.beta = self.beta;
        if let Some(grid) = &self.eps_grid {
            a.eps_grid = grid.clone();
        }
        a
    }

    /// Applies command-line overrides.
    pub fn with(mut self, o: &Overrides) -> Self {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(t) = o.threshold {
            self.threshold = Some(t);
        }
        if let Some(grid) = &o.eps_grid {
            self.eps_grid = Some(grid.clone());
        }
        if let Some(rho) = o.unverified_rho {
            self.rho = RhoSetting::Value(rho);
        }
        if let Some(game) = &o.game {
            self.game = Some(absolute(game));
        }
        self
    }
}

/// Absolute form of `p` so a manifest stays valid wherever it is moved.
fn absolute(p: &Path) -> String {
    std::path::absolute(p)
        .unwrap_or_else(|_| p.to_path_buf())
        .to_string_lossy()
        .into_owned()
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub game: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
    pub eps_grid: Option<Vec<f64>>,
    pub unverified_rho: Option<f64>,
}

/// Parses `1e-2,1e-3,...` into a list of ε values.
pub fn parse_eps_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad ε value {t:?} in grid")))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Option<RunConfig>,
    /// Hex SHA-256 of the input game, or of the freeway and demands.
    pub fingerprint: String,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
    pub version: String,
}

impl RunManifest {
    fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("manifest.json"), self)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `out`, else `$PARETOLEARN_OUT/<subcommand>`, else `paretolearn-out/<subcommand>`.
pub fn resolve_out_dir(out: Option<&Path>, subcommand: &str) -> PathBuf {
    match out {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("paretolearn-out"))
            .join(subcommand),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serialisable");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn load_game(config: &RunConfig) -> Result<(Game, String)> {
    let path = config
        .game
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("no game given; pass --game or set \"game\" in the config".into()))?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8_lossy(&bytes);
    let game = Game::from_json(&text).map_err(|e| match e {
        Error::Parse { source, .. } => Error::Parse {
            context: path.to_string(),
            source,
        },
        other => other,
    })?;
    Ok((game, sha256_hex(&bytes)))
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    #[serde(flatten)]
    summary: crate::learner::TrajectorySummary,
    final_state: Option<String>,
    threshold: f64,
    rows_written: usize,
    config: &'a RunConfig,
}

pub fn cmd_simulate(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let (game, fingerprint) = load_game(config)?;
    let threshold = config.threshold.unwrap_or(DEFAULT_THRESHOLD);
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::InvalidConfig(format!("threshold must lie in [0, 1), got {threshold}")));
    }
    let trajectory = run(&game, &config.learner())?;
    create_dir(out)?;
    trajectory.write_histogram_csv(create(&out.join("histogram.csv"))?, threshold)?;
    let rows_written = trajectory
        .histogram
        .iter()
        .filter(|r| r.fraction > threshold)
        .count();
    let summary = SimulateSummary {
        summary: trajectory.summary(),
        final_state: trajectory.final_state.as_ref().map(|s| s.to_string()),
        threshold,
        rows_written,
        config,
    };
    write_json(&out.join("summary.json"), &summary)?;
    RunManifest {
        subcommand: "simulate".into(),
        config: Some(config.clone()),
        fingerprint,
        seeds: vec![config.seed],
        outputs: vec!["histogram.csv".into(), "summary.json".into()],
        version: env!("CARGO_PKG_VERSION").into(),
    }
    .write(out)?;

    let mut message = format!(
        "{} iterations, ρ = {} ({}), average welfare {:.4}, {} states visited\n",
        trajectory.iterations,
        trajectory.rho,
        if trajectory.verified { "verified" } else { "unverified" },
        trajectory.average_welfare,
        trajectory.histogram.len()
    );
    for row in trajectory.histogram.iter().filter(|r| r.fraction > threshold).take(10) {
        let _ = writeln!(message, "  {:<40} {:.4}", row.state.to_string(), row.fraction);
    }
    Ok(Outcome {
        status: ExitStatus::Success,
        message,
        out_dir: out.to_path_buf(),
    })
}

fn check_table(lemmas: &LemmaReport) -> String {
    let mut s = String::new();
    for check in &lemmas.checks {
        let _ = writeln!(
            s,
            "  {:<28} {}  {}",
            check.name,
            if check.passed { "pass" } else { "FAIL" },
            check.detail
        );
    }
    s
}

/// Runs the full chain pipeline and writes `report.json` and `resistances.csv`.
/// Exit status 2 when a check fails and ρ came from the game.
pub fn cmd_analyze(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let (game, fingerprint) = load_game(config)?;
    let analysis_config = config.analysis();
    let analysis = analyze(&game, &analysis_config)?;
    let lemmas = verify_lemmas(&game, &analysis, &analysis_config);
    let failed = !lemmas.passed;
    let verified = lemmas.verified_mode;
    let report = AnalysisReport::new(&analysis, Some(lemmas.clone()));
    create_dir(out)?;
    write_json(&out.join("report.json"), &report)?;
    write_edge_list(&analysis.graph, create(&out.join("resistances.csv"))?)?;
    RunManifest {
        subcommand: "analyze".into(),
        config: Some(config.clone()),
        fingerprint,
        seeds: vec![],
        outputs: vec!["report.json".into(), "resistances.csv".into()],
        version: env!("CARGO_PKG_VERSION").into(),
    }
    .write(out)?;

    let mut message = format!(
        "{} states, {} transitions, {} recurrence classes ({} transient states)\n",
        report.state_count,
        report.transition_count,
        report.classes.len(),
        report.transient_count
    );
    for class in &report.classes {
        let _ = writeln!(
            message,
            "  {:>3} {:<4} γ = {:<8} {} state(s)",
            class.id,
            class.label,
            class.potential.to_string(),
            class.states.len()
        );
    }
    let _ = writeln!(message, "stable:    {}", report.stable_set.join(" "));
    let _ = writeln!(message, "predicted: {}", report.predicted_set.join(" "));
    message.push_str(&check_table(&lemmas));
    if !verified {
        message.push_str("ρ was overridden or interdependence fails: results are unverified\n");
    }
    Ok(Outcome {
        status: if failed && verified {
            ExitStatus::VerificationFailed
        } else {
            ExitStatus::Success
        },
        message,
        out_dir: out.to_path_buf(),
    })
}

#[derive(Serialize)]
struct Verdict {
    game: String,
    verified_mode: bool,
    passed: bool,
    checks: Vec<VerdictRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct VerdictRow {
    name: String,
    passed: bool,
    violations: usize,
}

fn verdict(name: String, lemmas: &LemmaReport) -> Verdict {
    Verdict {
        game: name,
        verified_mode: lemmas.verified_mode,
        passed: lemmas.passed,
        checks: lemmas
            .checks
            .iter()
            .map(|c| VerdictRow {
                name: c.name.clone(),
                passed: c.passed,
                violations: c.violation_count,
            })
            .collect(),
        error: None,
    }
}

/// Pass/fail matrix for one game. Any failed check gives exit status 2.
pub fn cmd_verify(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let (game, fingerprint) = load_game(config)?;
    let analysis_config = config.analysis();
    let analysis = analyze(&game, &analysis_config)?;
    let lemmas = verify_lemmas(&game, &analysis, &analysis_config);
    create_dir(out)?;
    let name = config.game.clone().unwrap_or_default();
    write_json(&out.join("verdict.json"), &verdict(name, &lemmas))?;
    RunManifest {
        subcommand: "verify".into(),
        config: Some(config.clone()),
        fingerprint,
        seeds: vec![],
        outputs: vec!["verdict.json".into()],
        version: env!("CARGO_PKG_VERSION").into(),
    }
    .write(out)?;
    let failed = lemmas.failed().len();
    let mut message = check_table(&lemmas);
    let _ = writeln!(message, "{} of {} checks passed", lemmas.checks.len() - failed, lemmas.checks.len());
    Ok(Outcome {
        status: if failed > 0 {
            ExitStatus::VerificationFailed
        } else {
            ExitStatus::Success
        },
        message,
        out_dir: out.to_path_buf(),
    })
}

/// Shape of the `i`-th game in a random batch: two or three agents with up
/// to three actions each and one or two disturbances, the second shifting
/// payoffs by at most one grid step.
pub fn random_batch_spec(i: u64) -> RandomGameSpec {
    let n = 2 + (i % 2) as usize;
    let actions = (0..n).map(|a| 2 + ((i as usize / 2 + a) % 2)).collect();
    let disturbances = 1 + (i as usize / 4) % 2;
    RandomGameSpec::new(actions, disturbances).with_spread(1)
}

/// Verifies `count` random interdependent games at `c = n + 1` (or the
/// configured `c` when larger) and prints per-check pass rates.
pub fn cmd_verify_random(config: Option<&RunConfig>, count: u64, seed: u64, out: &Path) -> Result<Outcome> {
    let mut verdicts = Vec::new();
    let mut tally: Vec<(String, usize, usize)> = Vec::new();
    for i in 0..count {
        let spec = random_batch_spec(i);
        let Some(game) = random_interdependent_game(&spec, seed.wrapping_add(i), 200)? else {
            continue;
        };
        let c = config.map_or(0.0, |c| c.c).max(game.n() as f64 + 1.0);
        let mut analysis_config = config.map_or_else(|| AnalysisConfig::new(c), |cfg| cfg.analysis());
        analysis_config.c = c;
        analysis_config.rho = RhoSetting::AUTO;
        let name = format!("random seed {}", seed.wrapping_add(i));
        let v = match analyze(&game, &analysis_config) {
            Ok(analysis) => verdict(name, &verify_lemmas(&game, &analysis, &analysis_config)),
            // Recorded as a failed classification; the rest of the checks need the classes.
            Err(e @ Error::Unclassifiable { .. }) => Verdict {
                game: name,
                verified_mode: true,
                passed: false,
                checks: vec![VerdictRow {
                    name: "recurrence classes".into(),
                    passed: false,
                    violations: 1,
                }],
                error: Some(e.to_string()),
            },
            Err(e) => return Err(e),
        };
        for check in &v.checks {
            match tally.iter_mut().find(|t| t.0 == check.name) {
                Some(t) => {
                    t.1 += check.passed as usize;
                    t.2 += 1;
                }
                None => tally.push((check.name.clone(), check.passed as usize, 1)),
            }
        }
        verdicts.push(v);
    }
    create_dir(out)?;
    write_json(&out.join("verdicts.json"), &verdicts)?;
    let fingerprint = sha256_hex(format!("random:{seed}:{count}").as_bytes());
    RunManifest {
        subcommand: "verify".into(),
        config: config.cloned(),
        fingerprint,
        seeds: (0..count).map(|i| seed.wrapping_add(i)).collect(),
        outputs: vec!["verdicts.json".into()],
        version: env!("CARGO_PKG_VERSION").into(),
    }
    .write(out)?;
    let all = verdicts.iter().filter(|v| v.passed).count();
    let unclassifiable = verdicts.iter().filter(|v| v.error.is_some()).count();
    let mut message = format!(
        "{} games, {} pass every check, {} with an unclassifiable recurrent state\n",
        verdicts.len(),
        all,
        unclassifiable
    );
    for (name, pass, total) in &tally {
        let _ = writeln!(message, "  {name:<28} {pass}/{total}");
    }
    Ok(Outcome {
        status: if all == verdicts.len() {
            ExitStatus::Success
        } else {
            ExitStatus::VerificationFailed
        },
        message,
        out_dir: out.to_path_buf(),
    })
}

#[derive(Serialize)]
struct TrafficSummary<'a> {
    cache_hit: bool,
    ramps: usize,
    days: Vec<String>,
    final_state: Option<String>,
    learned_meets_all_loc: bool,
    learned_beats_no_metering: bool,
    #[serde(flatten)]
    comparison: &'a TrafficComparison,
}

/// Tabulates (or reloads) the ramp game, runs the learner and compares the
/// learned profile against all-`LOC` and no metering.
pub fn cmd_traffic(freeway: &Path, demands: &Path, config: &RunConfig, out: &Path) -> Result<Outcome> {
    let spec = FreewaySpec::load(freeway)?;
    let days = DemandProfile::load_all(demands, &spec)?;
    if spec.ramps.len() > DEFAULT_RAMP_CAP {
        return Err(Error::RampCap {
            cap: DEFAULT_RAMP_CAP,
            ramps: spec.ramps.len(),
        });
    }
    create_dir(out)?;
    let calibration = calibrate(&spec, &days)?;
    let (game, cache_hit) =
        load_or_build_traffic_game(&spec, &days, &calibration, DEFAULT_RAMP_CAP, &out.join("game.json"))?;
    write_json(&out.join("calibration.json"), &calibration)?;
    let trajectory = run(&game, &config.learner())?;
    let final_state = trajectory.final_state.clone();
    let learned = ActionProfile(
        final_state
            .as_ref()
            .map(|s| s.baseline_actions())
            .unwrap_or_else(|| vec![0; spec.ramps.len()]),
    );
    let comparison = TrafficComparison::new(&spec, &days, &calibration, &game, &learned)?;
    let summary = TrafficSummary {
        cache_hit,
        ramps: spec.ramps.len(),
        days: days.iter().map(|d| d.name.clone()).collect(),
        final_state: final_state.map(|s| s.to_string()),
        learned_meets_all_loc: comparison.learned_welfare >= comparison.all_loc_welfare,
        learned_beats_no_metering: comparison.learned_welfare > comparison.no_metering_welfare,
        comparison: &comparison,
    };
    write_json(&out.join("summary.json"), &summary)?;
    RunManifest {
        subcommand: "traffic".into(),
        config: Some(config.clone()),
        fingerprint: crate::traffic::fingerprint(&spec, &days, DEFAULT_RAMP_CAP),
        seeds: vec![config.seed],
        outputs: vec![
            "game.json".into(),
            "game.json.sha256".into(),
            "calibration.json".into(),
            "summary.json".into(),
        ],
        version: env!("CARGO_PKG_VERSION").into(),
    }
    .write(out)?;
    let message = format!(
        "{} ramps x {} days ({})\nlearned   {}  welfare {:.4}  total time {:.1} veh·h\nall-LOC   welfare {:.4}  total time {:.1} veh·h\nno meter  welfare {:.4}  total time {:.1} veh·h\nsaving vs no metering: {:.1}%\n",
        spec.ramps.len(),
        days.len(),
        if cache_hit { "cached table" } else { "tabulated" },
        comparison.learned_profile.join(","),
        comparison.learned_welfare,
        comparison.learned_total_time,
        comparison.all_loc_welfare,
        comparison.all_loc_total_time,
        comparison.no_metering_welfare,
        comparison.no_metering_total_time,
        comparison.saving_percent
    );
    Ok(Outcome {
        status: ExitStatus::Success,
        message,
        out_dir: out.to_path_buf(),
    })
}
