//! Two-dimensional parameter sweeps of welfare metrics.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::belief::{bayes_params, BeliefStrategy, PriorModel};
use crate::error::{Error, Result};
use crate::mental_chain::MentalSystem;
use crate::numeric::fmt17;
use crate::signal_model::{conditional_dynamics, PVector, SignalModel, TransitionKernel};
use crate::welfare::{
    delta_bayes, expected_welfare, finite_n_welfare, in_b, regularity, ProblemSpec, Regularity,
    WelfareReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    P11,
    P22,
    Gamma,
    K,
    D,
    Beta,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::P11 => "p11",
            Axis::P22 => "p22",
            Axis::Gamma => "gamma",
            Axis::K => "K",
            Axis::D => "d",
            Axis::Beta => "beta",
        }
    }

    /// Default grid: 101 points on `[0.005, 0.995]` for probabilities.
    pub fn default_grid(&self) -> Grid {
        match self {
            Axis::P11 | Axis::P22 | Axis::Gamma => Grid::new(0.005, 0.995, 101),
            Axis::K => Grid::new(1.0, 8.0, 8),
            Axis::D => Grid::new(1.0, 10.0, 91),
            Axis::Beta => Grid::new(0.0, 1.0, 101),
        }
        .expect("default grids are valid")
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "p11" => Axis::P11,
            "p22" => Axis::P22,
            "gamma" => Axis::Gamma,
            "K" | "k" => Axis::K,
            "d" => Axis::D,
            "beta" => Axis::Beta,
            _ => return Err(Error::Usage(format!("unknown axis {s:?}; use p11, p22, gamma, K, d or beta"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    DeltaBayes,
    DeltaFixed,
    CensorGain,
    FiniteNRatio,
    LambdaBar,
    InB,
    Regularity,
}

pub const METRIC_NAMES: [&str; 7] = [
    "delta_bayes",
    "delta_fixed",
    "censor_gain",
    "finite_n_ratio",
    "lambda_bar",
    "in_B",
    "regularity",
];

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::DeltaBayes => "delta_bayes",
            Metric::DeltaFixed => "delta_fixed",
            Metric::CensorGain => "censor_gain",
            Metric::FiniteNRatio => "finite_n_ratio",
            Metric::LambdaBar => "lambda_bar",
            Metric::InB => "in_B",
            Metric::Regularity => "regularity",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "delta_bayes" => Metric::DeltaBayes,
            "delta_fixed" => Metric::DeltaFixed,
            "censor_gain" => Metric::CensorGain,
            "finite_n_ratio" => Metric::FiniteNRatio,
            "lambda_bar" => Metric::LambdaBar,
            "in_B" | "in_b" => Metric::InB,
            "regularity" => Metric::Regularity,
            _ => {
                return Err(Error::Usage(format!(
                    "unknown metric {s:?}; expected one of {}",
                    METRIC_NAMES.join(", ")
                )))
            }
        })
    }
}

/// Evenly spaced points `lo..=hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 || !lo.is_finite() || !hi.is_finite() || hi < lo || (n == 1 && hi != lo) {
            return Err(Error::Usage(format!("bad grid {lo}:{hi}:{n}")));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| if i + 1 == self.n { self.hi } else { self.lo + step * i as f64 })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// `lo:hi:n`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Usage(format!("grid {s:?} is not lo:hi:n"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo = parts[0].trim().parse().map_err(|_| bad())?;
        let hi = parts[1].trim().parse().map_err(|_| bad())?;
        let n = parts[2].trim().parse().map_err(|_| bad())?;
        Grid::new(lo, hi, n)
    }
}

/// Values held fixed while two axes vary.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepParams {
    pub p11: f64,
    pub p22: f64,
    pub pi: f64,
    pub gamma: f64,
    pub sigma_log: f64,
    /// Prior odds; `None` ties them to `π`.
    pub rho: Option<f64>,
    pub k: usize,
    pub d: f64,
    pub lambda: f64,
    pub beta: f64,
    /// Source of `p` when `beta` is swept or set.
    pub model: Option<SignalModel>,
    /// Step of the censoring difference quotient.
    pub censor_step: f64,
    /// Horizon compared with the long run in `finite_n_ratio`.
    pub horizon: usize,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            p11: 0.8,
            p22: 0.8,
            pi: 0.5,
            gamma: 0.5,
            sigma_log: 0.0,
            rho: None,
            k: 2,
            d: 3.0,
            lambda: 1.0,
            beta: 0.0,
            model: None,
            censor_step: 1e-3,
            horizon: 10,
        }
    }
}

impl SweepParams {
    fn with(&self, axis: Axis, v: f64) -> Result<Self> {
        let mut out = self.clone();
        match axis {
            Axis::P11 => out.p11 = v,
            Axis::P22 => out.p22 = v,
            Axis::Gamma => out.gamma = v,
            Axis::K => {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(Error::Usage(format!("K must be a positive integer, got {v}")));
                }
                out.k = v as usize
            }
            Axis::D => out.d = v,
            Axis::Beta => out.beta = v,
        }
        Ok(out)
    }

    fn spec(&self) -> Result<ProblemSpec> {
        let prior = match self.rho {
            Some(rho) => PriorModel::new(rho, self.sigma_log)?,
            None => PriorModel::from_pi(self.pi, self.sigma_log)?,
        };
        ProblemSpec::new(self.pi, self.gamma, prior, MentalSystem::new(self.k)?)
    }

    /// Kernel and conditional dynamics at this point.
    fn dynamics(&self) -> Result<(TransitionKernel, PVector)> {
        match &self.model {
            Some(model) => {
                let q = model.censored_transitions(self.beta)?;
                let p = conditional_dynamics(&q)?;
                Ok((q, p))
            }
            None => {
                let p = PVector::new(self.p11, self.p22)?;
                Ok((TransitionKernel::from_p(p), p))
            }
        }
    }

    /// Echo of every fixed value, for output metadata.
    pub fn to_json(&self) -> Value {
        json!({
            "p11": self.p11,
            "p22": self.p22,
            "pi": self.pi,
            "gamma": self.gamma,
            "sigma_log": self.sigma_log,
            "rho": self.rho,
            "K": self.k,
            "d": self.d,
            "lambda": self.lambda,
            "beta": self.beta,
            "model": self.model.as_ref().map(|m| serde_json::to_value(m.to_doc()).expect("model documents serialise")),
            "censor_step": self.censor_step,
            "horizon": self.horizon,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub x: Axis,
    pub y: Axis,
    pub x_grid: Grid,
    pub y_grid: Grid,
    pub metric: Metric,
    pub params: SweepParams,
}

impl SweepConfig {
    pub fn new(x: Axis, y: Axis, metric: Metric, params: SweepParams) -> Self {
        Self {
            x,
            y,
            x_grid: x.default_grid(),
            y_grid: y.default_grid(),
            metric,
            params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: f64,
    pub y: f64,
    /// NaN where the metric is undefined at this point.
    pub value: f64,
    pub regular: Option<bool>,
    pub in_b: Option<bool>,
    pub report: Option<WelfareReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub config: SweepConfig,
    /// Row-major: `x` outer, `y` inner.
    pub rows: Vec<SweepRow>,
}

fn evaluate(metric: Metric, params: &SweepParams) -> Result<(f64, Option<WelfareReport>)> {
    let spec = params.spec()?;
    let (q, p) = params.dynamics()?;
    let fixed = || BeliefStrategy::new(params.d, params.lambda);
    Ok(match metric {
        Metric::DeltaBayes => (delta_bayes(p, &spec)?, None),
        Metric::DeltaFixed => {
            let r = expected_welfare(p, &spec, &fixed()?)?;
            (r.delta, Some(r))
        }
        Metric::CensorGain => {
            let x = params.censor_step;
            let inside = [p.p11, p.p22, 1.0 - p.p11, 1.0 - p.p22].iter().all(|&v| v >= x);
            if !inside {
                return Ok((f64::NAN, None));
            }
            let s = fixed()?;
            let before = expected_welfare(p, &spec, &s)?;
            let after = expected_welfare(p.censored_by(x), &spec, &s)?;
            ((after.value - before.value) / x, Some(before))
        }
        Metric::FiniteNRatio => {
            let s = fixed()?;
            let long = expected_welfare(p, &spec, &s)?;
            let short = finite_n_welfare(&q, &spec, &s, params.horizon)?;
            ((long.value - short) / long.baseline, Some(long))
        }
        Metric::LambdaBar => (bayes_params(p, spec.system)?.lambda_bar(spec.system), None),
        Metric::InB => (in_b(p, &spec)? as u8 as f64, None),
        Metric::Regularity => ((regularity(p) == Regularity::Regular) as u8 as f64, None),
    })
}

fn evaluate_row(metric: Metric, params: &SweepParams, x: f64, y: f64) -> SweepRow {
    // boundary points (degenerate or fully censored) have no value
    let (value, report) = evaluate(metric, params).unwrap_or((f64::NAN, None));
    let dynamics = params.dynamics().ok().map(|(_, p)| p);
    let spec = params.spec().ok();
    SweepRow {
        x,
        y,
        value,
        regular: dynamics.map(|p| regularity(p) == Regularity::Regular),
        in_b: match (dynamics, spec) {
            (Some(p), Some(s)) => in_b(p, &s).ok(),
            _ => None,
        },
        report,
    }
}

/// Evaluates `metric` on the grid, in parallel, rows in fixed order.
pub fn sweep(config: &SweepConfig) -> Result<SweepTable> {
    if config.x == config.y {
        return Err(Error::Usage(format!("both axes are {}", config.x)));
    }
    let uses_beta = config.x == Axis::Beta || config.y == Axis::Beta;
    if uses_beta && config.params.model.is_none() {
        return Err(Error::Usage("sweeping beta needs a signal model".into()));
    }
    let p_axis = [config.x, config.y].iter().any(|a| matches!(a, Axis::P11 | Axis::P22));
    if p_axis && config.params.model.is_some() {
        return Err(Error::Usage("p11/p22 axes conflict with a signal model, which fixes p".into()));
    }
    let mut points = Vec::with_capacity(config.x_grid.n * config.y_grid.n);
    for x in config.x_grid.values() {
        for y in config.y_grid.values() {
            let params = config.params.with(config.x, x)?.with(config.y, y)?;
            points.push((x, y, params));
        }
    }
    // validate the fixed values once so that bad flags are reported, not NaN'd
    points[0].2.spec()?;
    let rows = points
        .par_iter()
        .map(|(x, y, params)| evaluate_row(config.metric, params, *x, *y))
        .collect();
    Ok(SweepTable {
        config: config.clone(),
        rows,
    })
}

fn flag(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    }
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record([
            self.config.x.name(),
            self.config.y.name(),
            self.config.metric.name(),
            "regular",
            "in_B",
        ])?;
        for r in &self.rows {
            w.write_record([fmt17(r.x), fmt17(r.y), fmt17(r.value), flag(r.regular).into(), flag(r.in_b).into()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Value {
        let c = &self.config;
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    c.x.name(): r.x,
                    c.y.name(): r.y,
                    "value": finite_or_null(r.value),
                    "regular": r.regular,
                    "in_B": r.in_b,
                    "report": r.report,
                })
            })
            .collect();
        json!({
            "metric": c.metric.name(),
            "x": {"axis": c.x.name(), "grid": c.x_grid},
            "y": {"axis": c.y.name(), "grid": c.y_grid},
            "params": c.params.to_json(),
            "rows": rows,
        })
    }

    /// Values in row order.
    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        assert_eq!("p22".parse::<Axis>().unwrap(), Axis::P22);
        assert_eq!("K".parse::<Axis>().unwrap(), Axis::K);
        assert!("theta".parse::<Axis>().is_err());
        assert_eq!("in_B".parse::<Metric>().unwrap(), Metric::InB);
        assert!(matches!("welfare".parse::<Metric>(), Err(Error::Usage(_))));
        let g: Grid = "0.1:0.9:5".parse().unwrap();
        assert_eq!(g.values(), vec![0.1, 0.30000000000000004, 0.5, 0.7000000000000001, 0.9]);
        assert!("0.1:0.9".parse::<Grid>().is_err());
    }

    #[test]
    fn default_grid_shape() {
        let v = Axis::P22.default_grid().values();
        assert_eq!(v.len(), 101);
        assert_eq!(v[0], 0.005);
        assert_eq!(v[100], 0.995);
    }

    #[test]
    fn delta_bayes_is_nonnegative_with_correct_priors() {
        let mut cfg = SweepConfig::new(Axis::P22, Axis::Gamma, Metric::DeltaBayes, SweepParams::default());
        cfg.x_grid = Grid::new(0.005, 0.995, 21).unwrap();
        cfg.y_grid = Grid::new(0.005, 0.995, 21).unwrap();
        let t = sweep(&cfg).unwrap();
        assert_eq!(t.rows.len(), 441);
        assert!(t.values().iter().all(|&v| v >= -1e-12));
        assert!(t.values().contains(&0.0));
    }

    #[test]
    fn row_major_order_and_csv() {
        let mut cfg = SweepConfig::new(Axis::P11, Axis::K, Metric::Regularity, SweepParams::default());
        cfg.x_grid = Grid::new(0.4, 0.6, 2).unwrap();
        cfg.y_grid = Grid::new(1.0, 2.0, 2).unwrap();
        let t = sweep(&cfg).unwrap();
        let xy: Vec<(f64, f64)> = t.rows.iter().map(|r| (r.x, r.y)).collect();
        assert_eq!(xy, vec![(0.4, 1.0), (0.4, 2.0), (0.6, 1.0), (0.6, 2.0)]);
        let csv = t.to_csv_string().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "p11,K,regularity,regular,in_B");
        assert_eq!(lines.next().unwrap(), "4.0000000000000002e-1,1.0000000000000000e0,0.0000000000000000e0,0,1");
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn beta_needs_a_model() {
        let cfg = SweepConfig::new(Axis::Beta, Axis::Gamma, Metric::DeltaBayes, SweepParams::default());
        assert!(matches!(sweep(&cfg), Err(Error::Usage(_))));
    }

    #[test]
    fn beta_sweep_from_model() {
        let model = SignalModel::from(crate::signal_model::ContinuousSignalModel::exp_tilt(1.0).unwrap());
        let params = SweepParams {
            model: Some(model),
            ..Default::default()
        };
        let mut cfg = SweepConfig::new(Axis::Beta, Axis::Gamma, Metric::LambdaBar, params);
        cfg.x_grid = Grid::new(0.0, 0.5, 3).unwrap();
        cfg.y_grid = Grid::new(0.5, 0.5, 1).unwrap();
        let t = sweep(&cfg).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.values().iter().all(|v| v.is_finite() && *v > 1.0));
    }

    #[test]
    fn json_keys_are_sorted() {
        let mut cfg = SweepConfig::new(Axis::P11, Axis::P22, Metric::DeltaFixed, SweepParams::default());
        cfg.x_grid = Grid::new(0.6, 0.6, 1).unwrap();
        cfg.y_grid = Grid::new(0.7, 0.7, 1).unwrap();
        let v = sweep(&cfg).unwrap().to_json();
        let text = serde_json::to_string_pretty(&v).unwrap();
        let metric_at = text.find("\"metric\"").unwrap();
        let params_at = text.find("\"params\"").unwrap();
        assert!(metric_at < params_at);
        assert!(v["rows"][0]["report"]["baseline"].is_number());
    }
}
