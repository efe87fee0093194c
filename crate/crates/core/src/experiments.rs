//! Monte Carlo experiments, canned figure grids and CSV/JSON result tables.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{delay_infinite, delay_tdma};
use crate::content::{distinct_demands, SystemConfig};
use crate::error::{Error, Result};
use crate::placement::{coordinated_group_size, Placement};
use crate::seed;
use crate::sim::{plan_trial, run_trial, Delivery, TrialSetup};

pub const CSV_HEADER: &str =
    "sweep_param,sweep_value,mean_delay_norm,std_delay_norm,analytic_infinite,analytic_tdma,decode_failures,trials,seed";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    K,
    L,
    N,
    M,
    F,
    Kc,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::K => "k",
            SweepParam::L => "l",
            SweepParam::N => "n",
            SweepParam::M => "m",
            SweepParam::F => "f",
            SweepParam::Kc => "kc",
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "k" => SweepParam::K,
            "l" => SweepParam::L,
            "n" => SweepParam::N,
            "m" | "m-cache" => SweepParam::M,
            "f" | "file-size" => SweepParam::F,
            "kc" => SweepParam::Kc,
            other => return Err(Error::Parse(format!("unknown sweep parameter '{other}'"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
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
            other => Err(Error::Parse(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub cfg: SystemConfig,
    pub placement: Placement,
    pub kc: usize,
    pub delivery: Delivery,
    pub trials: usize,
    pub root_seed: u64,
    pub sweep: Option<SweepAxis>,
    /// Defaults to all-distinct demands.
    pub demands: Option<Vec<usize>>,
    /// Run the symbol-level pipeline and decode, instead of counting slots.
    pub decode: bool,
    /// Overrides the `sweep_param` column, e.g. to tag a figure series.
    pub label: Option<String>,
}

impl ExperimentSpec {
    pub fn new(cfg: SystemConfig) -> ExperimentSpec {
        ExperimentSpec {
            cfg,
            placement: Placement::Decentralized,
            kc: 0,
            delivery: Delivery::Joint,
            trials: 100,
            root_seed: 0,
            sweep: None,
            demands: None,
            decode: false,
            label: None,
        }
    }

    fn setup(&self, cfg: SystemConfig, kc: usize) -> TrialSetup {
        let demands = self
            .demands
            .clone()
            .unwrap_or_else(|| distinct_demands(cfg.k));
        TrialSetup {
            cfg,
            placement: self.placement,
            kc,
            delivery: self.delivery,
            demands,
        }
    }

    /// Every sweep point as (value, setup), validated.
    pub fn points(&self) -> Result<Vec<(f64, TrialSetup)>> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        let Some(axis) = &self.sweep else {
            let s = self.setup(self.cfg.clone(), self.kc);
            s.validate()?;
            return Ok(vec![(0.0, s)]);
        };
        if axis.values.is_empty() {
            return Err(Error::InvalidConfig("sweep has no values".into()));
        }
        axis.values
            .iter()
            .map(|&v| {
                let mut cfg = self.cfg.clone();
                let mut kc = self.kc;
                let count = || -> Result<usize> {
                    if v.fract() != 0.0 || v < 0.0 || !v.is_finite() {
                        return Err(Error::InvalidConfig(format!(
                            "sweep value {v} for '{}' must be a non-negative integer",
                            axis.param.name()
                        )));
                    }
                    Ok(v as usize)
                };
                match axis.param {
                    SweepParam::K => cfg.k = count()?,
                    SweepParam::L => cfg.l = count()?,
                    SweepParam::N => cfg.n = count()?,
                    SweepParam::F => cfg.f = count()?,
                    SweepParam::Kc => kc = count()?,
                    SweepParam::M => cfg.m = v,
                }
                let s = self.setup(cfg, kc);
                s.validate()?;
                if self.placement != Placement::Decentralized {
                    let (a, _) = s.groups();
                    crate::placement::centralized_level(a.len(), &s.cfg)?;
                }
                Ok((v, s))
            })
            .collect()
    }

    fn column_label(&self) -> String {
        match (&self.label, &self.sweep) {
            (Some(l), _) => l.clone(),
            (None, Some(axis)) => axis.param.name().to_string(),
            (None, None) => "none".to_string(),
        }
    }
}

/// One row of the result table; float fields carry 6 significant digits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_param: String,
    pub sweep_value: f64,
    pub mean_delay_norm: f64,
    pub std_delay_norm: f64,
    pub analytic_infinite: f64,
    pub analytic_tdma: f64,
    pub decode_failures: u64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

/// Per-point statistics not carried in the table.
#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub row: ResultRow,
    /// Normalized delay of every trial, by trial index.
    pub delays: Vec<f64>,
    pub resamples: usize,
    /// Trials in which some user did not recover its file.
    pub incorrect_trials: usize,
}

/// Rounds to 6 significant digits.
pub fn round_sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}")
        .parse()
        .expect("float formatting round-trips")
}

fn fmt_sig6(x: f64) -> String {
    let r = round_sig6(x);
    if r != 0.0 && (r.abs() < 1e-4 || r.abs() >= 1e15) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return (xs[0], 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs all trials of one sweep point in parallel.
pub fn run_point(
    spec: &ExperimentSpec,
    label: &str,
    value: f64,
    setup: &TrialSetup,
) -> Result<PointResult> {
    let outcomes: Vec<(usize, usize, usize, bool)> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let s = seed::trial_seed(spec.root_seed, t as u64);
            if spec.decode {
                let o = run_trial(setup, s)?;
                Ok((o.delay_slots, o.decode_failures, o.resamples, o.all_ok))
            } else {
                let (plan, _) = plan_trial(setup, s)?;
                Ok((plan.total_slots(), 0, 0, true))
            }
        })
        .collect::<Result<_>>()?;
    let f = setup.cfg.f as f64;
    let delays: Vec<f64> = outcomes.iter().map(|o| o.0 as f64 / f).collect();
    let (mean, std) = mean_std(&delays);
    let cfg = &setup.cfg;
    let kc = coordinated_group_size(setup.placement, cfg.k, setup.kc);
    let row = ResultRow {
        sweep_param: label.to_string(),
        sweep_value: round_sig6(value),
        mean_delay_norm: round_sig6(mean),
        std_delay_norm: round_sig6(std),
        analytic_infinite: round_sig6(delay_infinite(cfg.k, cfg.l, cfg.p())),
        analytic_tdma: round_sig6(delay_tdma(kc, cfg.k - kc, cfg.l, cfg.p())),
        decode_failures: outcomes.iter().map(|o| o.1 as u64).sum(),
        trials: spec.trials,
        seed: spec.root_seed,
    };
    Ok(PointResult {
        row,
        delays,
        resamples: outcomes.iter().map(|o| o.2).sum(),
        incorrect_trials: outcomes.iter().filter(|o| !o.3).count(),
    })
}

/// Runs every sweep point; one row per point.
pub fn run_monte_carlo(spec: &ExperimentSpec) -> Result<ResultTable> {
    Ok(ResultTable {
        rows: run_points(spec)?.into_iter().map(|p| p.row).collect(),
    })
}

pub fn run_points(spec: &ExperimentSpec) -> Result<Vec<PointResult>> {
    let label = spec.column_label();
    spec.points()?
        .iter()
        .map(|(v, s)| run_point(spec, &label, *v, s))
        .collect()
}

/// Canned grids for figures 2 to 6, one spec per plotted series.
pub fn figure_specs(id: u32, trials: usize, root_seed: u64) -> Result<Vec<ExperimentSpec>> {
    let base = |k, l, n, m, f| -> Result<ExperimentSpec> {
        let mut s = ExperimentSpec::new(SystemConfig::new(k, l, n, m, f)?);
        s.trials = trials;
        s.root_seed = root_seed;
        Ok(s)
    };
    let axis = |param, values: Vec<f64>| Some(SweepAxis { param, values });
    let mut out = Vec::new();
    match id {
        2 => {
            for m in [2.0, 4.0, 6.0] {
                let mut s = base(10, 1, 10, m, 100)?;
                s.sweep = axis(SweepParam::L, (1..=6).map(f64::from).collect());
                s.label = Some(format!("l[m={m}]"));
                out.push(s);
            }
        }
        3 => {
            let mut s = base(4, 2, 4, 2.0, 100)?;
            s.sweep = axis(SweepParam::F, vec![1e2, 1e3, 1e4, 1e5]);
            out.push(s);
        }
        4 | 5 => {
            let kc = if id == 4 { 4 } else { 6 };
            let (k, n) = (8usize, 8usize);
            let integer_m: Vec<f64> = (1..n).map(|m| m as f64).collect();
            let mut d = base(k, 1, n, 1.0, 1000)?;
            d.sweep = axis(SweepParam::M, integer_m.clone());
            d.label = Some("m[decentralized]".into());
            let mut c = d.clone();
            c.placement = Placement::Centralized;
            c.sweep = axis(
                SweepParam::M,
                integer_m
                    .into_iter()
                    .filter(|m| (k as f64 * m / n as f64).fract() == 0.0)
                    .collect(),
            );
            c.label = Some("m[centralized]".into());
            // multiples of N/24 that give group A an integer caching level
            let mut h = d.clone();
            h.placement = Placement::Hybrid;
            h.kc = kc;
            h.delivery = Delivery::Tdma;
            h.sweep = axis(
                SweepParam::M,
                (1..24)
                    .filter(|i| (kc * i) % 24 == 0)
                    .map(|i| n as f64 * i as f64 / 24.0)
                    .collect(),
            );
            h.label = Some(format!("m[hybrid-tdma kc={kc}]"));
            out.extend([d, c, h]);
        }
        6 => {
            for delivery in [Delivery::Tdma, Delivery::Joint] {
                let mut s = base(10, 1, 10, 5.0, 1000)?;
                s.placement = Placement::Hybrid;
                s.delivery = delivery;
                s.sweep = axis(SweepParam::Kc, (0..=10).step_by(2).map(f64::from).collect());
                s.label = Some(format!(
                    "kc[{}]",
                    if delivery == Delivery::Tdma {
                        "tdma"
                    } else {
                        "joint"
                    }
                ));
                out.push(s);
            }
        }
        other => return Err(Error::UnknownFigure(other)),
    }
    Ok(out)
}

pub fn sweep_figure(id: u32, trials: usize, root_seed: u64) -> Result<ResultTable> {
    let mut table = ResultTable::default();
    for spec in figure_specs(id, trials, root_seed)? {
        table.rows.extend(run_monte_carlo(&spec)?.rows);
    }
    Ok(table)
}

pub fn render(table: &ResultTable, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut s =
                serde_json::to_string_pretty(table).map_err(|e| Error::Parse(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Parse(e.to_string());
            w.write_record(CSV_HEADER.split(',')).map_err(io)?;
            for r in &table.rows {
                w.write_record([
                    r.sweep_param.clone(),
                    fmt_sig6(r.sweep_value),
                    fmt_sig6(r.mean_delay_norm),
                    fmt_sig6(r.std_delay_norm),
                    fmt_sig6(r.analytic_infinite),
                    fmt_sig6(r.analytic_tdma),
                    r.decode_failures.to_string(),
                    r.trials.to_string(),
                    r.seed.to_string(),
                ])
                .map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

/// Writes the table to `path`, or to stdout when `path` is `None`.
pub fn emit_results(table: &ResultTable, format: Format, path: Option<&Path>) -> Result<()> {
    let text = render(table, format)?;
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn parse_results(text: &str, format: Format) -> Result<ResultTable> {
    match format {
        Format::Json => serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string())),
        Format::Csv => {
            let mut r = csv::Reader::from_reader(text.as_bytes());
            let header = r.headers().map_err(|e| Error::Parse(e.to_string()))?;
            if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
                return Err(Error::Parse(format!(
                    "unexpected header '{}'",
                    header.iter().collect::<Vec<_>>().join(",")
                )));
            }
            let mut rows = Vec::new();
            for rec in r.deserialize() {
                rows.push(rec.map_err(|e: csv::Error| Error::Parse(e.to_string()))?);
            }
            Ok(ResultTable { rows })
        }
    }
}

impl fmt::Display for ResultTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self, Format::Csv).map_err(|_| fmt::Error)?)
    }
}
