//! `csklab` command-line tool.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use csklab::analytic::{capacity, joint_distribution, min_error_prob, mutual_information, ChannelParams};
use csklab::experiments::{
    calibrate_diffusion, format_number, run_distance_sweep, run_threshold_sweep, write_csv, DiffusionSource, Engine,
    EngineSelection, ExperimentConfig, ExperimentError, MonteCarloSettings, SweepResult, SweepSpec, SweepVariable,
};
use csklab::physics::{einstein_diffusion, LinkGeometry};
use csklab::simulator::{mi_from_counts, simulate_trace, SimConfig};

#[derive(Debug, Parser)]
#[command(name = "csklab", version, about = "CSK and Zebra-CSK molecular link calculator and simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config file (`key = value` lines)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for Monte Carlo runs
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (default: stdout)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// analytic, mc or both
    #[arg(long, global = true)]
    engine: Option<EngineSelection>,
    /// Slots per Monte Carlo stream
    #[arg(long, global = true)]
    slots: Option<usize>,
    /// Comma-separated inhibition efficiencies, e.g. 0,0.5,1
    #[arg(long, global = true, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recover the diffusion coefficient from a target CSK error probability
    Calibrate,
    /// Error probability and mutual information against the detection threshold
    SweepThreshold,
    /// Error probability against distance at a fixed threshold
    SweepDistance,
    /// Simulate one symbol stream per beta and compare with the closed form
    Simulate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Calibrate => "calibrate",
            Command::SweepThreshold => "sweep-threshold",
            Command::SweepDistance => "sweep-distance",
            Command::Simulate => "simulate",
        }
    }
}

struct Resolved {
    config: ExperimentConfig,
    base: ChannelParams,
    notes: Vec<(String, String)>,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, ExperimentError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
                path: path.clone(),
                source,
            })?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(slots) = cli.slots {
        config.num_slots = slots;
    }
    if let Some(engine) = cli.engine {
        config.engine = engine;
    }
    if let Some(betas) = &cli.betas {
        config.betas = betas.clone();
    }
    config.validate()?;
    Ok(config)
}

fn resolve(config: ExperimentConfig) -> Result<Resolved, ExperimentError> {
    let placeholder = LinkGeometry::new(config.distance, 1.0).map_err(|e| ExperimentError::Config {
        line: None,
        message: e.to_string(),
    })?;
    let mut base = ChannelParams {
        molecules: config.molecules,
        geometry: placeholder,
        slot_duration: config.slot_duration,
        inhibition_efficiency: config.inhibition_efficiency,
        prior_one: config.prior_one,
    };
    let mut notes = Vec::new();
    let diffusion = match config.diffusion {
        DiffusionSource::Fixed(d) => {
            notes.push(("diffusion_source".to_string(), "fixed".to_string()));
            d
        }
        DiffusionSource::Einstein(medium) => {
            notes.push(("diffusion_source".to_string(), "einstein".to_string()));
            einstein_diffusion(&medium).map_err(|e| ExperimentError::Config {
                line: None,
                message: e.to_string(),
            })?
        }
        DiffusionSource::Calibrate { target_pe } => {
            let c = calibrate_diffusion(target_pe, &base, &config.threshold_grid())?;
            notes.extend([
                ("diffusion_source".to_string(), "calibrate".to_string()),
                ("calibration_target_pe".to_string(), format_number(target_pe)),
                ("calibration_achieved_pe".to_string(), format_number(c.achieved_pe)),
                ("calibration_threshold".to_string(), format_number(c.threshold)),
            ]);
            c.diffusion_coefficient
        }
    };
    base.geometry = placeholder
        .with_diffusion_coefficient(diffusion)
        .map_err(|e| ExperimentError::Config {
            line: None,
            message: e.to_string(),
        })?;
    Ok(Resolved { config, base, notes })
}

fn engines(selection: EngineSelection) -> Vec<Engine> {
    match selection {
        EngineSelection::Analytic => vec![Engine::Analytic],
        EngineSelection::MonteCarlo => vec![Engine::MonteCarlo],
        EngineSelection::Both => vec![Engine::Analytic, Engine::MonteCarlo],
    }
}

fn settings(config: &ExperimentConfig) -> MonteCarloSettings {
    MonteCarloSettings {
        num_slots: config.num_slots,
        master_seed: config.master_seed,
        isi_memory_slots: config.isi_memory_slots,
        inhibitor_policy: config.inhibitor_policy,
        scheme: config.scheme,
        counting: config.counting,
    }
}

fn metadata(command: &Command, r: &Resolved, result: &SweepResult) -> Vec<(String, String)> {
    let mut m = vec![
        ("tool_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("command".to_string(), command.name().to_string()),
    ];
    m.extend(r.config.to_entries(Some(r.base.geometry.diffusion_coefficient())));
    m.extend(r.notes.iter().cloned());
    m.extend(result.metadata.iter().filter(|(k, _)| k.starts_with("optimum[")).cloned());
    m
}

fn open_output(out: Option<&Path>) -> Result<Box<dyn Write>, ExperimentError> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn output_error(out: Option<&Path>) -> impl Fn(io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("<stdout>")),
        source,
    }
}

fn write_lines(out: Option<&Path>, lines: &[(String, String)]) -> Result<(), ExperimentError> {
    let mut w = open_output(out)?;
    for (k, v) in lines {
        writeln!(w, "{k} = {v}").map_err(output_error(out))?;
    }
    w.flush().map_err(output_error(out))
}

fn sweep(cli: &Cli, r: &Resolved, variable: SweepVariable) -> Result<(), ExperimentError> {
    let spec = SweepSpec {
        base: r.base,
        variable,
        grid: match variable {
            SweepVariable::Distance => r.config.distance_grid.clone(),
            _ => r.config.threshold_grid(),
        },
        betas: r.config.betas.clone(),
        engines: engines(r.config.engine),
        threshold: (variable == SweepVariable::Distance).then_some(r.config.threshold),
        monte_carlo: settings(&r.config),
    };
    let mut result = match variable {
        SweepVariable::Distance => run_distance_sweep(&spec)?,
        _ => run_threshold_sweep(&spec)?,
    };
    for o in &result.optima {
        eprintln!(
            "{} beta={}: min Pe {} at lambda {}, max MI {} bits at lambda {}",
            o.engine.as_str(),
            format_number(o.beta),
            format_number(o.min_pe),
            format_number(o.argmin_threshold),
            format_number(o.max_mi),
            format_number(o.argmax_threshold)
        );
    }
    for g in &result.gaps {
        eprintln!(
            "{} d={} beta={}: CSK Pe {} vs {} (gap {})",
            g.engine.as_str(),
            format_number(g.distance),
            format_number(g.beta),
            format_number(g.csk_pe),
            format_number(g.zebra_pe),
            format_number(g.gap())
        );
    }
    result.metadata = metadata(&cli.command, r, &result);
    let out = cli.out.as_deref();
    let mut w = open_output(out)?;
    write_csv(&result, &mut w)?;
    w.flush().map_err(output_error(out))
}

fn calibrate(cli: &Cli, config: ExperimentConfig) -> Result<(), ExperimentError> {
    let target = match config.diffusion {
        DiffusionSource::Calibrate { target_pe } => target_pe,
        _ => 0.069,
    };
    let calibrating = ExperimentConfig {
        diffusion: DiffusionSource::Calibrate { target_pe: target },
        ..config
    };
    let r = resolve(calibrating)?;
    let grid = r.config.threshold_grid();
    let mut lines = vec![(
        "diffusion_coefficient".to_string(),
        format_number(r.base.geometry.diffusion_coefficient()),
    )];
    lines.extend(r.notes.iter().cloned());
    for &beta in &r.config.betas {
        let channel = r.base.with_beta(beta);
        let best = min_error_prob(&channel, &grid)?;
        let cap = capacity(&channel, &grid)?;
        let b = format_number(beta);
        lines.push((format!("min_pe[beta={b}]"), format_number(best.value)));
        lines.push((format!("argmin_lambda[beta={b}]"), format_number(best.threshold)));
        lines.push((format!("capacity_bits[beta={b}]"), format_number(cap.value)));
        lines.push((format!("argmax_lambda[beta={b}]"), format_number(cap.threshold)));
    }
    write_lines(cli.out.as_deref(), &lines)
}

fn simulate(cli: &Cli, r: &Resolved) -> Result<(), ExperimentError> {
    let betas = match &cli.betas {
        Some(b) => b.clone(),
        None => vec![r.config.inhibition_efficiency],
    };
    let threshold = r.config.threshold;
    let mut lines = vec![
        ("tool_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("diffusion_coefficient".to_string(), format_number(r.base.geometry.diffusion_coefficient())),
        ("threshold".to_string(), format_number(threshold)),
        ("master_seed".to_string(), r.config.master_seed.to_string()),
        ("num_slots".to_string(), r.config.num_slots.to_string()),
    ];
    for (i, &beta) in betas.iter().enumerate() {
        let s = settings(&r.config);
        let channel = r.base.with_beta(beta);
        let config = SimConfig {
            channel,
            num_slots: s.num_slots,
            master_seed: s.master_seed,
            isi_memory_slots: s.isi_memory_slots,
            inhibitor_policy: s.inhibitor_policy,
            scheme: s.scheme,
            counting: s.counting,
        };
        let report = simulate_trace(&config, i as u64)?.report(threshold);
        let analytic = joint_distribution(&channel, threshold)?;
        let mi = mi_from_counts(&report.joint_counts);
        let b = format!("[beta={}]", format_number(beta));
        let j = report.joint_counts;
        let m = report.molecules;
        lines.extend([
            (format!("pe{b}"), format_number(report.error_rate.estimate)),
            (format!("pe_ci95{b}"), format!("{}, {}", format_number(report.error_rate.ci_low), format_number(report.error_rate.ci_high))),
            (format!("analytic_pe{b}"), format_number(analytic.error_probability())),
            (format!("mi_bits{b}"), format_number(mi.bits)),
            (format!("analytic_mi_bits{b}"), format_number(mutual_information(&analytic))),
            (format!("joint_counts{b}"), format!("{} {} {} {}", j[0][0], j[0][1], j[1][0], j[1][1])),
            (
                format!("molecules{b}"),
                format!(
                    "released {} counted {} inhibited {} beyond_horizon {} after_end {}",
                    m.released, m.counted, m.inhibited, m.beyond_horizon, m.after_stream_end
                ),
            ),
        ]);
        if mi.low_counts {
            eprintln!("warning: beta={}: some joint cells have fewer than 5 expected counts", format_number(beta));
        }
    }
    write_lines(cli.out.as_deref(), &lines)
}

fn run(cli: &Cli) -> Result<(), ExperimentError> {
    let config = load(cli)?;
    match cli.command {
        Command::Calibrate => calibrate(cli, config),
        Command::SweepThreshold => sweep(cli, &resolve(config)?, SweepVariable::Threshold),
        Command::SweepDistance => sweep(cli, &resolve(config)?, SweepVariable::Distance),
        Command::Simulate => simulate(cli, &resolve(config)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
