use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mtcache::analytics::{
    delay_centralized, delay_infinite, delay_single_transmitter, delay_tdma, delta_tc, fit_gamma,
    fit_gamma_mle, hybrid_superior, ks_statistic, lower_bound, piece_lengths_by_level,
    taylor_delays, GammaFit,
};
use mtcache::content::{build_piece_table, distinct_demands, SystemConfig};
use mtcache::experiments::{
    emit_results, run_monte_carlo, sweep_figure, ExperimentSpec, Format, SweepAxis, SweepParam,
};
use mtcache::placement::{place_decentralized, Placement};
use mtcache::sim::{build_trial, Delivery, TrialSetup};
use mtcache::{seed, Error};

#[derive(Parser)]
#[command(
    name = "mtcache",
    version,
    about = "Multi-transmitter coded caching simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo run at one operating point, decoding every trial.
    Simulate(SimulateArgs),
    /// Monte Carlo run over a list of values of one parameter.
    Sweep(SweepArgs),
    /// Canned parameter grid of a figure (2 to 6).
    Figure(FigureArgs),
    /// Closed-form delays at one operating point.
    Analytic(AnalyticArgs),
    /// Gamma fit of piece lengths, or of samples read from a file.
    FitGamma(FitArgs),
}

#[derive(Args, Clone)]
struct SystemArgs {
    /// Users.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Transmitters.
    #[arg(long, default_value_t = 2)]
    l: usize,
    /// Files in the library; defaults to K.
    #[arg(long)]
    n: Option<usize>,
    /// Cache size per user, in files.
    #[arg(long = "m-cache", default_value_t = 0.0)]
    m_cache: f64,
    /// File size, in symbols.
    #[arg(long = "file-size", default_value_t = 1000)]
    file_size: usize,
    #[arg(long = "field-bits", default_value_t = 16)]
    field_bits: u32,
}

impl SystemArgs {
    fn config(&self) -> Result<SystemConfig, Error> {
        SystemConfig::new(
            self.k,
            self.l,
            self.n.unwrap_or(self.k),
            self.m_cache,
            self.file_size,
        )?
        .with_field_bits(self.field_bits)
    }
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// csv or json.
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// decentralized, centralized or hybrid.
    #[arg(long, default_value = "decentralized")]
    placement: Placement,
    /// Size of the coordinated group for hybrid placement.
    #[arg(long, default_value_t = 0)]
    kc: usize,
    /// joint or tdma.
    #[arg(long, default_value = "joint")]
    delivery: Delivery,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated demanded file per user; all-distinct by default.
    #[arg(long, value_delimiter = ',')]
    demands: Option<Vec<usize>>,
    #[command(flatten)]
    output: OutputArgs,
}

impl RunArgs {
    fn spec(&self) -> Result<ExperimentSpec, Error> {
        let mut s = ExperimentSpec::new(self.system.config()?);
        s.placement = self.placement;
        s.kc = self.kc;
        s.delivery = self.delivery;
        s.trials = self.trials;
        s.root_seed = self.seed;
        s.demands = self.demands.clone();
        Ok(s)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Count slots only, skipping transmission and decoding.
    #[arg(long)]
    no_decode: bool,
    /// Write the first trial's schedule as JSON lines.
    #[arg(long)]
    schedule_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// k, l, n, m, f or kc.
    #[arg(long)]
    param: SweepParam,
    /// Comma-separated values of the swept parameter.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Transmit and decode in every trial.
    #[arg(long)]
    decode: bool,
}

#[derive(Args)]
struct FigureArgs {
    /// Figure number, 2 to 6.
    #[arg(long)]
    id: u32,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct AnalyticArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 0)]
    kc: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FitArgs {
    /// Whitespace-separated samples; otherwise piece lengths are simulated.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    system: SystemArgs,
    /// Only pieces cached at this level.
    #[arg(long)]
    alpha: Option<usize>,
    /// Placements to pool.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Serialize)]
struct AnalyticReport {
    k: usize,
    l: usize,
    kc: usize,
    p: f64,
    delay_infinite: f64,
    delay_centralized: f64,
    delay_tdma: f64,
    delay_single_transmitter: f64,
    taylor_hybrid: f64,
    taylor_centralized: f64,
    taylor_decentralized: f64,
    delta_tc: f64,
    lower_bound: f64,
    hybrid_superior: bool,
}

#[derive(Serialize)]
struct FitReport {
    samples: usize,
    used: usize,
    dropped: usize,
    shape: f64,
    scale: f64,
    mle_shape: f64,
    mle_scale: f64,
    ks: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidCentralizedParameter { .. }
        | Error::UnknownFigure(_)
        | Error::UnsupportedFieldBits(_)
        | Error::Parse(_) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(a) => {
            let mut spec = a.run.spec()?;
            spec.decode = !a.no_decode;
            let table = run_monte_carlo(&spec)?;
            if let Some(path) = &a.schedule_out {
                write_schedule(&spec, path)?;
            }
            emit_results(&table, a.run.output.format, a.run.output.out.as_deref())
        }
        Command::Sweep(a) => {
            let mut spec = a.run.spec()?;
            spec.decode = a.decode;
            spec.sweep = Some(SweepAxis {
                param: a.param,
                values: a.values,
            });
            let table = run_monte_carlo(&spec)?;
            emit_results(&table, a.run.output.format, a.run.output.out.as_deref())
        }
        Command::Figure(a) => {
            let table = sweep_figure(a.id, a.trials, a.seed)?;
            emit_results(&table, a.output.format, a.output.out.as_deref())
        }
        Command::Analytic(a) => {
            let cfg = a.system.config()?;
            if a.kc > cfg.k {
                return Err(Error::InvalidConfig(format!(
                    "Kc={} exceeds K={}",
                    a.kc, cfg.k
                )));
            }
            let p = cfg.p();
            let t = taylor_delays(cfg.k, a.kc, cfg.k - a.kc, p);
            let report = AnalyticReport {
                k: cfg.k,
                l: cfg.l,
                kc: a.kc,
                p,
                delay_infinite: delay_infinite(cfg.k, cfg.l, p),
                delay_centralized: delay_centralized(cfg.k, cfg.l, p),
                delay_tdma: delay_tdma(a.kc, cfg.k - a.kc, cfg.l, p),
                delay_single_transmitter: delay_single_transmitter(cfg.k, p),
                taylor_hybrid: t.hybrid,
                taylor_centralized: t.centralized,
                taylor_decentralized: t.decentralized,
                delta_tc: delta_tc(cfg.k, cfg.l, p),
                lower_bound: lower_bound(cfg.k, cfg.l, p),
                hybrid_superior: hybrid_superior(cfg.k, a.kc),
            };
            write_record(&report, &a.output)
        }
        Command::FitGamma(a) => {
            let samples = match &a.input {
                Some(path) => read_samples(path)?,
                None => simulated_piece_lengths(&a)?,
            };
            let fit: GammaFit = fit_gamma(&samples)?;
            let mle = fit_gamma_mle(&samples)?;
            let report = FitReport {
                samples: samples.len(),
                used: fit.used,
                dropped: fit.dropped,
                shape: fit.params.shape,
                scale: fit.params.scale,
                mle_shape: mle.params.shape,
                mle_scale: mle.params.scale,
                ks: ks_statistic(&samples, &fit.params),
            };
            write_record(&report, &a.output)
        }
    }
}

fn write_schedule(spec: &ExperimentSpec, path: &Path) -> Result<(), Error> {
    let setup = TrialSetup {
        cfg: spec.cfg.clone(),
        placement: spec.placement,
        kc: spec.kc,
        delivery: spec.delivery,
        demands: spec
            .demands
            .clone()
            .unwrap_or_else(|| distinct_demands(spec.cfg.k)),
    };
    let run = build_trial(&setup, seed::trial_seed(spec.root_seed, 0))?;
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    run.schedule.dump_jsonl(&mut file).map_err(io)
}

fn read_samples(path: &Path) -> Result<Vec<f64>, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad sample '{s}' in {}", path.display())))
        })
        .collect()
}

fn simulated_piece_lengths(a: &FitArgs) -> Result<Vec<f64>, Error> {
    let cfg = a.system.config()?;
    let mut out = Vec::new();
    for t in 0..a.trials {
        let cache = place_decentralized(&cfg, seed::trial_seed(a.seed, t as u64))?;
        let table = build_piece_table(&cache, &distinct_demands(cfg.k))?;
        for (level, lens) in piece_lengths_by_level(&table) {
            if a.alpha.is_none_or(|want| want == level) {
                out.extend(lens.into_iter().map(|x| x as f64));
            }
        }
    }
    Ok(out)
}

/// One flat record as a two-line CSV or a JSON object.
fn write_record<T: Serialize>(record: &T, output: &OutputArgs) -> Result<(), Error> {
    let value = serde_json::to_value(record).map_err(|e| Error::Parse(e.to_string()))?;
    let text = match output.format {
        Format::Json => {
            serde_json::to_string_pretty(&value).map_err(|e| Error::Parse(e.to_string()))? + "\n"
        }
        Format::Csv => {
            let obj = value.as_object().expect("record serializes to an object");
            let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
            let vals: Vec<String> = obj.values().map(|v| v.to_string()).collect();
            format!("{}\n{}\n", keys.join(","), vals.join(","))
        }
    };
    match &output.out {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.clone(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
