//! Command-line front end. The binary is a thin wrapper over [`run`].
//!
//! Shared flags may also come from `--config <json>`, whose keys are the
//! flag names (`"K"`, `"sigma-log"`, ...); flags given on the command line win.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::belief::{BeliefStrategy, PriorModel};
use crate::error::{Error, Result};
use crate::mental_chain::{
    finite_n_distribution, general_stationary, ladder_transition, stationary, LadderState,
    LadderSystem, MentalSystem,
};
use crate::numeric::fmt17;
use crate::oracle::{simulate_chain, simulate_ladder, simulate_welfare};
use crate::props::{run_all, PropsConfig};
use crate::scenarios::{autocorr_table, evidence_row, Scenario, LUNAR_THETA1_ROW, LUNAR_THETA2_ROW};
use crate::signal_model::{
    censor_path, conditional_dynamics, ContinuousSignalModel, PVector, SignalModel, TransitionKernel,
    DEFAULT_SPIKED,
};
use crate::sweep::{sweep, Axis, Grid, Metric, SweepConfig, SweepParams};
use crate::welfare::{finite_n_welfare, ProblemSpec};

#[derive(Debug, Parser)]
#[command(name = "coarse-beliefs", version, about = "Coarse belief formation: chains, welfare, sweeps and checks")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. All are optional so that a config
/// file can fill the gaps.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Common {
    /// Memory size: states run from -K to K
    #[arg(long = "K", global = true)]
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Likelihood-ratio step of the belief rule
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    /// Scale of the belief rule
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Censoring level
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Frequency of state 1
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi: Option<f64>,
    /// Stakes: cost weight of state 2
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Prior odds; defaults to pi/(1-pi)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Log-scale noise of the perceived prior
    #[arg(long = "sigma-log", global = true)]
    #[serde(rename = "sigma-log", alias = "sigma_log", skip_serializing_if = "Option::is_none")]
    pub sigma_log: Option<f64>,
    /// Sweep metric
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
    /// Grid as lo:hi:n (props-check: points per axis)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    /// Output file instead of stdout
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Base seed of the Monte Carlo streams
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Monte Carlo trials
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    /// JSON file of defaults for these flags
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Pr(signal read as 1 | state 1), when no signal model is given
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p11: Option<f64>,
    /// Pr(signal read as 2 | state 2), when no signal model is given
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p22: Option<f64>,
    /// Number of signals
    #[arg(long = "N", global = true)]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// True state of the world (1-based)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<usize>,
    /// Signal model: inline JSON or a path to a JSON file
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Use a named scenario as the signal model
    #[arg(long = "from-scenario", global = true)]
    #[serde(rename = "from-scenario", skip_serializing_if = "Option::is_none")]
    pub from_scenario: Option<String>,
    /// Scenario parameters: inline JSON or a path
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<String>,
    /// Continuous signal family
    #[arg(long, global = true, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    /// Tilt of the continuous family
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tilt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Family {
    ExpTilt,
    SpikedTilt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Long-run law of the mental chain for drift ratio r
    Stationary {
        #[arg(long)]
        r: f64,
    },
    /// Censored transition kernel and conditional dynamics of a signal model
    Transitions,
    /// Evaluate a metric on a two-axis grid
    Sweep {
        /// First axis, outer loop: p11, p22, gamma, K, d or beta
        #[arg(long)]
        x: String,
        /// Second axis, inner loop
        #[arg(long)]
        y: String,
        /// First-axis grid as lo:hi:n
        #[arg(long = "x-grid")]
        x_grid: Option<String>,
        /// Second-axis grid as lo:hi:n
        #[arg(long = "y-grid")]
        y_grid: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Conditional dynamics along a censoring grid (default 0:1:101)
    CensorPath,
    /// Evidence table of a named scenario
    Scenario { name: String },
    /// Monte Carlo estimates with their closed-form counterparts
    Oracle {
        #[command(subcommand)]
        kind: OracleKind,
    },
    /// Run the verification battery
    PropsCheck {
        /// Reduced sizes
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum OracleKind {
    /// Mental-state occupancy after N signals
    Chain,
    /// Expected welfare after N signals
    Welfare,
    /// Ladder occupancy after N signals, three-state models
    Ladder,
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Stationary { .. } => "stationary".into(),
            Command::Transitions => "transitions".into(),
            Command::Sweep { .. } => "sweep".into(),
            Command::CensorPath => "censor-path".into(),
            Command::Scenario { name } => format!("scenario {name}"),
            Command::Oracle { kind } => format!("oracle {}", format!("{kind:?}").to_lowercase()),
            Command::PropsCheck { .. } => "props-check".into(),
        }
    }
}

macro_rules! fill {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.clone(); } )*
    };
}

/// Inline JSON when it looks like an object, otherwise a file path.
fn read_json_arg(arg: &str) -> Result<Value> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg)?
    };
    Ok(serde_json::from_str(&text)?)
}

impl Common {
    /// Fills unset flags from the config file, if any.
    pub fn resolve(mut self) -> Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file: Common = serde_json::from_str(&fs::read_to_string(&path)?)
            .map_err(|e| Error::Usage(format!("config {}: {e}", path.display())))?;
        fill!(self, file; k, d, lambda, beta, pi, gamma, rho, sigma_log, metric, grid, out, seed,
              trials, p11, p22, n, theta, model, from_scenario, params, family, tilt);
        Ok(self)
    }

    fn k(&self) -> usize {
        self.k.unwrap_or(2)
    }

    fn system(&self) -> Result<MentalSystem> {
        MentalSystem::new(self.k())
    }

    fn beta(&self) -> f64 {
        self.beta.unwrap_or(0.0)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    fn trials(&self) -> u64 {
        self.trials.unwrap_or(100_000)
    }

    fn spec(&self) -> Result<ProblemSpec> {
        let pi = self.pi.unwrap_or(0.5);
        let sigma = self.sigma_log.unwrap_or(0.0);
        let prior = match self.rho {
            Some(rho) => PriorModel::new(rho, sigma)?,
            None => PriorModel::from_pi(pi, sigma)?,
        };
        ProblemSpec::new(pi, self.gamma.unwrap_or(0.5), prior, self.system()?)
    }

    fn strategy(&self) -> Result<BeliefStrategy> {
        BeliefStrategy::new(self.d.unwrap_or(3.0), self.lambda.unwrap_or(1.0))
    }

    fn pvector(&self) -> Result<PVector> {
        PVector::new(self.p11.unwrap_or(0.8), self.p22.unwrap_or(0.8))
    }

    /// The signal model named by `--model`, `--from-scenario` or `--family`.
    fn model(&self) -> Result<Option<SignalModel>> {
        let chosen = [self.model.is_some(), self.from_scenario.is_some(), self.family.is_some()];
        if chosen.iter().filter(|c| **c).count() > 1 {
            return Err(Error::Usage("give only one of --model, --from-scenario, --family".into()));
        }
        if let Some(m) = &self.model {
            let doc = read_json_arg(m)?;
            return Ok(Some(SignalModel::from_json(&doc.to_string())?));
        }
        if let Some(name) = &self.from_scenario {
            return Ok(Some(self.scenario(name)?.model()?.into()));
        }
        Ok(match self.family {
            Some(Family::ExpTilt) => Some(ContinuousSignalModel::exp_tilt(self.tilt.unwrap_or(1.0))?.into()),
            Some(Family::SpikedTilt) => Some(
                ContinuousSignalModel::spiked_tilt(self.tilt.unwrap_or(DEFAULT_SPIKED.0), DEFAULT_SPIKED.1, DEFAULT_SPIKED.2)?
                    .into(),
            ),
            None => None,
        })
    }

    fn require_model(&self) -> Result<SignalModel> {
        self.model()?
            .ok_or_else(|| Error::Usage("this command needs --model, --from-scenario or --family".into()))
    }

    fn scenario(&self, name: &str) -> Result<Scenario> {
        let params = self.params.as_deref().map(read_json_arg).transpose()?;
        Scenario::from_name(name, params.as_ref())
    }

    /// Kernel from the model at `beta`, or uncensored from `p`.
    fn kernel(&self) -> Result<TransitionKernel> {
        match self.model()? {
            Some(m) => m.censored_transitions(self.beta()),
            None => Ok(TransitionKernel::from_p(self.pvector()?)),
        }
    }
}

fn metadata(command: &str, common: &Common) -> Value {
    json!({
        "command": command,
        "flags": serde_json::to_value(common).expect("flags serialise"),
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn json_text(v: &Value) -> String {
    // serde_json maps are ordered, so keys come out sorted
    let mut s = serde_json::to_string_pretty(v).expect("values serialise");
    s.push('\n');
    s
}

fn emit(common: &Common, text: &str, out: &mut dyn Write) -> Result<()> {
    match &common.out {
        Some(path) => fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Writes `<out>.meta.json` beside a CSV file.
fn emit_sidecar(common: &Common, meta: &Value) -> Result<()> {
    if let Some(path) = &common.out {
        let mut name = path.as_os_str().to_owned();
        name.push(".meta.json");
        fs::write(Path::new(&name), json_text(meta))?;
    }
    Ok(())
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(fmt17(v))
    }
}

fn kernel_json(q: &TransitionKernel) -> Value {
    let row = |perception| json!([q.q(perception, 1), q.q(perception, 2)]);
    json!({"q0": row(0), "q1": row(1), "q2": row(2)})
}

fn cmd_stationary(common: &Common, r: f64, meta: Value, out: &mut dyn Write) -> Result<()> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::Usage(format!("r must be in [0, inf], got {r}")));
    }
    let system = common.system()?;
    let dist = stationary(r, system);
    let states: Vec<i64> = system.states().collect();
    let tails: Vec<f64> = (-system.k_i()..=system.k_i() + 1).map(|k| dist.upper_tail(k)).collect();
    let v = json!({
        "metadata": meta,
        "r": num(r),
        "states": states,
        "probs": dist.probs(),
        "upper_tails": tails,
    });
    emit(common, &json_text(&v), out)
}

fn cmd_transitions(common: &Common, meta: Value, out: &mut dyn Write) -> Result<()> {
    let model = common.require_model()?;
    let point = censor_path(&model, &[common.beta()])?.remove(0);
    let v = json!({
        "metadata": meta,
        "beta": point.beta,
        "kernel": kernel_json(&point.kernel),
        "p": point.p,
        "flags": point.flags,
        "model": serde_json::to_value(model.to_doc())?,
    });
    emit(common, &json_text(&v), out)
}

fn parse_grid(text: Option<&str>) -> Result<Option<Grid>> {
    text.map(str::parse).transpose()
}

fn cmd_sweep(
    common: &Common,
    x: &str,
    y: &str,
    grids: (Option<&str>, Option<&str>),
    format: Format,
    meta: Value,
    out: &mut dyn Write,
) -> Result<()> {
    let metric: Metric = common.metric.as_deref().unwrap_or("delta_bayes").parse()?;
    let (x, y): (Axis, Axis) = (x.parse()?, y.parse()?);
    let defaults = SweepParams::default();
    let params = SweepParams {
        p11: common.p11.unwrap_or(defaults.p11),
        p22: common.p22.unwrap_or(defaults.p22),
        pi: common.pi.unwrap_or(defaults.pi),
        gamma: common.gamma.unwrap_or(defaults.gamma),
        sigma_log: common.sigma_log.unwrap_or(defaults.sigma_log),
        rho: common.rho,
        k: common.k(),
        d: common.d.unwrap_or(defaults.d),
        lambda: common.lambda.unwrap_or(defaults.lambda),
        beta: common.beta(),
        model: common.model()?,
        censor_step: defaults.censor_step,
        horizon: common.n.unwrap_or(defaults.horizon),
    };
    let mut cfg = SweepConfig::new(x, y, metric, params);
    let shared = parse_grid(common.grid.as_deref())?;
    if let Some(g) = parse_grid(grids.0)?.or(shared) {
        cfg.x_grid = g;
    }
    if let Some(g) = parse_grid(grids.1)?.or(shared) {
        cfg.y_grid = g;
    }
    let table = sweep(&cfg)?;
    match format {
        Format::Csv => {
            emit(common, &table.to_csv_string()?, out)?;
            let mut meta = meta;
            meta["sweep"] = sweep_meta(&table.to_json());
            emit_sidecar(common, &meta)
        }
        Format::Json => {
            let mut v = table.to_json();
            v["metadata"] = meta;
            emit(common, &json_text(&v), out)
        }
    }
}

/// Everything of a sweep document but its rows.
fn sweep_meta(doc: &Value) -> Value {
    let mut v = doc.clone();
    if let Some(obj) = v.as_object_mut() {
        obj.remove("rows");
    }
    v
}

fn cmd_censor_path(common: &Common, meta: Value, out: &mut dyn Write) -> Result<()> {
    let model = common.require_model()?;
    let grid = parse_grid(common.grid.as_deref())?.unwrap_or(Grid::new(0.0, 1.0, 101)?);
    let path = censor_path(&model, &grid.values())?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["beta", "q1_theta1", "q1_theta2", "q2_theta1", "q2_theta2", "q0_theta1", "q0_theta2", "p11", "p22", "flags"])?;
    for pt in &path {
        let q = &pt.kernel;
        let (p11, p22) = pt.p.map_or((String::new(), String::new()), |p| (fmt17(p.p11), fmt17(p.p22)));
        let flags: Vec<String> = pt.flags.iter().map(|f| serde_json::to_value(f).expect("flags serialise").as_str().unwrap_or_default().to_string()).collect();
        w.write_record([
            fmt17(pt.beta),
            fmt17(q.q(1, 1)),
            fmt17(q.q(1, 2)),
            fmt17(q.q(2, 1)),
            fmt17(q.q(2, 2)),
            fmt17(q.q(0, 1)),
            fmt17(q.q(0, 2)),
            p11,
            p22,
            flags.join("|"),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    emit(common, &String::from_utf8(bytes).expect("csv output is utf-8"), out)?;
    let mut meta = meta;
    meta["model"] = serde_json::to_value(model.to_doc())?;
    meta["grid"] = serde_json::to_value(grid)?;
    emit_sidecar(common, &meta)
}

fn cmd_scenario(common: &Common, name: &str, meta: Value, out: &mut dyn Write) -> Result<()> {
    let scenario = common.scenario(name)?;
    let model = scenario.model()?;
    let beta = common.beta();
    let mut text = String::new();
    text.push_str(&format!("# scenario {}\n", scenario.name()));
    text.push_str(&format!("# params {}\n", scenario.params_json()));
    text.push_str(&format!("# metadata {}\n", serde_json::to_string(&meta)?));
    let m = model.theta_count();
    let probs_head: Vec<String> = (1..=m).map(|t| format!("Pr(.|theta={t})")).collect();
    text.push_str(&format!("{:<12} {:>9} {:>12} {:>9}", "outcome", "direction", "strength", "processed"));
    for h in &probs_head {
        text.push_str(&format!(" {h:>18}"));
    }
    text.push('\n');
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["outcome".to_string(), "direction".into(), "strength".into(), "processed".into()];
    header.extend((1..=m).map(|t| format!("prob_theta{t}")));
    w.write_record(&header)?;
    for row in model.evidence_table() {
        let processed = row.evidence.is_processed(beta);
        text.push_str(&format!(
            "{:<12} {:>9} {:>12.4} {:>9}",
            row.outcome,
            row.evidence.direction,
            row.evidence.strength,
            if processed { "yes" } else { "no" }
        ));
        for p in &row.probs {
            text.push_str(&format!(" {p:>18.6e}"));
        }
        text.push('\n');
        let mut rec = vec![row.outcome.clone(), row.evidence.direction.to_string(), fmt17(row.evidence.strength), (processed as u8).to_string()];
        rec.extend(row.probs.iter().map(|p| fmt17(*p)));
        w.write_record(&rec)?;
    }
    text.push_str(&format!("\nperception at beta = {beta}\n"));
    let pp = model.perception_probs(beta)?;
    for (t, row) in pp.iter().enumerate() {
        text.push_str(&format!("theta={}:", t + 1));
        for (slot, p) in row.iter().enumerate() {
            let label = if slot == 0 { "unprocessed".to_string() } else { format!("for {slot}") };
            text.push_str(&format!("  {label} {p:.6e}"));
        }
        text.push('\n');
    }
    if m == 2 {
        match conditional_dynamics(&model.censored_transitions(beta)?) {
            Ok(p) => text.push_str(&format!("p11 = {:.6}  p22 = {:.6}\n", p.p11, p.p22)),
            Err(e) => text.push_str(&format!("p undefined: {e}\n")),
        }
    }
    if let Scenario::Lunar(_) = scenario {
        for (label, labels) in [("theta=2 row", &LUNAR_THETA2_ROW), ("theta=1 row", &LUNAR_THETA1_ROW)] {
            match evidence_row(&model, labels) {
                Ok(row) => {
                    let cells: Vec<String> = row.iter().map(|e| format!("{:.4}", e.strength)).collect();
                    text.push_str(&format!("{label}: {}\n", cells.join(" ")));
                }
                Err(_) => text.push_str(&format!("{label}: outcomes pooled away\n")),
            }
        }
    }
    if let Scenario::Autocorr(params) = &scenario {
        text.push_str(&format!("\n{:>9} {:>9} {:>10} {:>14}\n", "reversals", "direction", "strength", "Pr(x|last)"));
        for r in autocorr_table(params)? {
            text.push_str(&format!("{:>9} {:>9} {:>10.4} {:>14.6}\n", r.reversals, r.direction, r.strength, r.prob_last));
        }
    }
    out.write_all(text.as_bytes())?;
    if let Some(path) = &common.out {
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        fs::write(path, bytes)?;
        emit_sidecar(common, &meta)?;
    }
    Ok(())
}

fn cmd_oracle(common: &Common, kind: OracleKind, meta: Value, out: &mut dyn Write) -> Result<()> {
    let (seed, trials) = (common.seed(), common.trials());
    let v = match kind {
        OracleKind::Chain => {
            let n = common.n.unwrap_or(200);
            let theta = common.theta.unwrap_or(1);
            if !(1..=2).contains(&theta) {
                return Err(Error::Usage(format!("theta must be 1 or 2, got {theta}")));
            }
            let q = common.kernel()?;
            let system = common.system()?;
            let est = simulate_chain(&q, theta, system, n, trials, seed)?;
            json!({
                "metadata": meta,
                "estimate": est.distribution.probs(),
                "stderr": est.stderr,
                "trials": trials,
                "seed": seed,
                "exact": finite_n_distribution(&q, theta, system, n).probs(),
            })
        }
        OracleKind::Welfare => {
            let n = common.n.unwrap_or(200);
            let model = match common.model()? {
                Some(m) => m,
                None => ContinuousSignalModel::exp_tilt(1.0)?.into(),
            };
            let spec = common.spec()?;
            let strategy = common.strategy()?;
            let est = simulate_welfare(&model, &spec, &strategy, common.beta(), n, trials, seed)?;
            let exact = finite_n_welfare(&model.censored_transitions(common.beta())?, &spec, &strategy, n)?;
            json!({
                "metadata": meta,
                "estimate": est.estimate,
                "stderr": est.stderr,
                "ci95": [est.ci_low, est.ci_high],
                "trials": trials,
                "seed": seed,
                "exact": exact,
                "z": est.z_score(exact),
            })
        }
        OracleKind::Ladder => {
            let n = common.n.unwrap_or(500);
            let model = match common.model()? {
                Some(SignalModel::Discrete(m)) => m,
                Some(SignalModel::Continuous(_)) => {
                    return Err(Error::Usage("the ladder needs a discrete three-state model".into()))
                }
                None => common.scenario("autocorr")?.model()?,
            };
            let system = LadderSystem::new(common.k())?;
            let est = simulate_ladder(&model, system, common.beta(), n, trials, seed)?;
            let matrices = ladder_transition(&model.ladder_evidence(common.beta())?, system)?;
            let long_run = matrices
                .iter()
                .map(|m| general_stationary(m).map(|d| d.into_vec()))
                .collect::<Result<Vec<_>>>()?;
            let labels: Vec<String> = (0..system.state_count())
                .map(|i| match system.state(i) {
                    LadderState::Neutral => "0".to_string(),
                    LadderState::Rung(t, k) => format!("({t},{k})"),
                })
                .collect();
            json!({
                "metadata": meta,
                "states": labels,
                "estimate": est.iter().map(|e| e.distribution.probs().to_vec()).collect::<Vec<_>>(),
                "stderr": est.iter().map(|e| e.stderr.clone()).collect::<Vec<_>>(),
                "trials": trials,
                "seed": seed,
                "long_run": long_run,
            })
        }
    };
    emit(common, &json_text(&v), out)
}

fn cmd_props(common: &Common, quick: bool, out: &mut dyn Write) -> Result<bool> {
    let mut cfg = if quick {
        PropsConfig {
            strategies: 100,
            points: 20,
            grid: 31,
            slope_samples: 200,
            witness_grid: 60,
            ..Default::default()
        }
    } else {
        PropsConfig::default()
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(g) = &common.grid {
        cfg.grid = match g.parse::<usize>() {
            Ok(n) => n,
            Err(_) => g.parse::<Grid>()?.n,
        };
    }
    let outcomes = run_all(&cfg)?;
    let mut text = String::new();
    for o in &outcomes {
        text.push_str(&format!("{o}\n"));
    }
    let passed = outcomes.iter().all(|o| o.passed);
    text.push_str(if passed { "all checks passed\n" } else { "some checks FAILED\n" });
    emit(common, &text, out)?;
    Ok(passed)
}

/// Runs one command line. Returns the process exit code: 0 on success,
/// 1 on a failed check or runtime error, 2 on bad usage.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                2
            } else {
                let _ = out.write_all(text.as_bytes());
                0
            };
        }
    };
    match dispatch(cli, out) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if matches!(e, Error::Usage(_)) {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<bool> {
    let common = cli.common.resolve()?;
    let meta = metadata(&cli.command.name(), &common);
    match &cli.command {
        Command::Stationary { r } => cmd_stationary(&common, *r, meta, out)?,
        Command::Transitions => cmd_transitions(&common, meta, out)?,
        Command::Sweep { x, y, x_grid, y_grid, format } => {
            cmd_sweep(&common, x, y, (x_grid.as_deref(), y_grid.as_deref()), *format, meta, out)?
        }
        Command::CensorPath => cmd_censor_path(&common, meta, out)?,
        Command::Scenario { name } => cmd_scenario(&common, name, meta, out)?,
        Command::Oracle { kind } => cmd_oracle(&common, *kind, meta, out)?,
        Command::PropsCheck { quick } => return cmd_props(&common, *quick, out),
    }
    Ok(true)
}
