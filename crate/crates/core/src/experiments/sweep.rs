use rayon::prelude::*;

use super::config::{counting_name, policy_name, scheme_name};
use super::{format_number, ExperimentError};
use crate::analytic::{joint_distribution, mutual_information, ChannelParams};
use crate::simulator::{mi_from_counts, simulate_trace, Counting, InhibitorPolicy, Scheme, SimConfig, StreamTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVariable {
    Threshold,
    Distance,
    Beta,
}

impl SweepVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVariable::Threshold => "threshold",
            SweepVariable::Distance => "distance",
            SweepVariable::Beta => "beta",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "threshold" => Some(SweepVariable::Threshold),
            "distance" => Some(SweepVariable::Distance),
            "beta" => Some(SweepVariable::Beta),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    Analytic,
    MonteCarlo,
}

impl Engine {
    pub fn as_str(&self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::MonteCarlo => "montecarlo",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "analytic" => Some(Engine::Analytic),
            "montecarlo" => Some(Engine::MonteCarlo),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloSettings {
    pub num_slots: usize,
    pub master_seed: u64,
    pub isi_memory_slots: usize,
    pub inhibitor_policy: InhibitorPolicy,
    pub scheme: Scheme,
    pub counting: Counting,
}

impl Default for MonteCarloSettings {
    fn default() -> Self {
        Self {
            num_slots: 100_000,
            master_seed: 0,
            isi_memory_slots: 1,
            inhibitor_policy: InhibitorPolicy::EverySlot,
            scheme: Scheme::ZebraCsk,
            counting: Counting::AllTypes,
        }
    }
}

impl MonteCarloSettings {
    fn config(&self, channel: ChannelParams) -> SimConfig {
        SimConfig {
            channel,
            num_slots: self.num_slots,
            master_seed: self.master_seed,
            isi_memory_slots: self.isi_memory_slots,
            inhibitor_policy: self.inhibitor_policy,
            scheme: self.scheme,
            counting: self.counting,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ChannelParams,
    pub variable: SweepVariable,
    /// Values of the swept variable, strictly increasing.
    pub grid: Vec<f64>,
    /// Inhibition efficiencies overlaid on threshold and distance sweeps.
    pub betas: Vec<f64>,
    pub engines: Vec<Engine>,
    /// Fixed threshold for distance and beta sweeps.
    pub threshold: Option<f64>,
    pub monte_carlo: MonteCarloSettings,
}

impl SweepSpec {
    fn validate(&self, expected: SweepVariable) -> Result<(), ExperimentError> {
        if self.variable != expected {
            return Err(ExperimentError::config(format!(
                "expected a {} sweep, got {}",
                expected.as_str(),
                self.variable.as_str()
            )));
        }
        self.base.validate()?;
        if self.grid.is_empty() || self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ExperimentError::config("sweep grid must be nonempty and strictly increasing"));
        }
        if expected != SweepVariable::Beta && self.betas.is_empty() {
            return Err(ExperimentError::config("at least one beta is required"));
        }
        if self.engines.is_empty() {
            return Err(ExperimentError::config("at least one engine is required"));
        }
        if expected != SweepVariable::Threshold && self.threshold.is_none() {
            return Err(ExperimentError::config("a fixed threshold is required"));
        }
        Ok(())
    }

    fn metadata(&self) -> Vec<(String, String)> {
        let mut m = vec![
            ("tool_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("variable".to_string(), self.variable.as_str().to_string()),
            ("n".to_string(), self.base.molecules.to_string()),
            ("distance".to_string(), format_number(self.base.geometry.distance())),
            (
                "diffusion_coefficient".to_string(),
                format_number(self.base.geometry.diffusion_coefficient()),
            ),
            ("slot_duration".to_string(), format_number(self.base.slot_duration)),
            ("prior_one".to_string(), format_number(self.base.prior_one)),
            (
                "betas".to_string(),
                self.betas.iter().map(|b| format_number(*b)).collect::<Vec<_>>().join(", "),
            ),
            (
                "engines".to_string(),
                self.engines.iter().map(Engine::as_str).collect::<Vec<_>>().join(", "),
            ),
        ];
        if let Some(t) = self.threshold {
            m.push(("threshold".to_string(), format_number(t)));
        }
        if self.engines.contains(&Engine::MonteCarlo) {
            let mc = &self.monte_carlo;
            m.extend([
                ("num_slots".to_string(), mc.num_slots.to_string()),
                ("master_seed".to_string(), mc.master_seed.to_string()),
                ("isi_memory_slots".to_string(), mc.isi_memory_slots.to_string()),
                ("inhibitor_policy".to_string(), policy_name(mc.inhibitor_policy).to_string()),
                ("scheme".to_string(), scheme_name(mc.scheme).to_string()),
                ("counting".to_string(), counting_name(mc.counting).to_string()),
            ]);
        }
        m
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variable: SweepVariable,
    pub value: f64,
    pub beta: f64,
    pub engine: Engine,
    pub pe: f64,
    /// Wilson 95% half-width; Monte Carlo rows only.
    pub pe_ci_halfwidth: Option<f64>,
    pub mi_bits: f64,
    /// Fixed threshold; absent on threshold sweeps, where it is the variable.
    pub lambda: Option<f64>,
    pub n: u32,
    pub distance: f64,
    pub diffusion_coefficient: f64,
    pub slot_duration: f64,
    pub prior_one: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimumSummary {
    pub beta: f64,
    pub engine: Engine,
    pub min_pe: f64,
    pub argmin_threshold: f64,
    pub max_mi: f64,
    pub argmax_threshold: f64,
}

/// CSK (`beta = 0`) minus Zebra-CSK error probability at one distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceGap {
    pub distance: f64,
    pub beta: f64,
    pub engine: Engine,
    pub csk_pe: f64,
    pub zebra_pe: f64,
}

impl DistanceGap {
    pub fn gap(&self) -> f64 {
        self.csk_pe - self.zebra_pe
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<SweepRow>,
    /// Threshold sweeps: per-beta optimum of each engine.
    pub optima: Vec<OptimumSummary>,
    /// Distance sweeps: CSK-vs-Zebra gap at every distance.
    pub gaps: Vec<DistanceGap>,
}

impl SweepResult {
    pub fn rows_for(&self, engine: Engine, beta: f64) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.engine == engine && r.beta == beta)
    }

    pub fn optimum(&self, engine: Engine, beta: f64) -> Option<&OptimumSummary> {
        self.optima.iter().find(|o| o.engine == engine && o.beta == beta)
    }
}

struct Point {
    pe: f64,
    ci: Option<f64>,
    mi: f64,
}

fn analytic_point(channel: &ChannelParams, threshold: f64) -> Result<Point, ExperimentError> {
    let joint = joint_distribution(channel, threshold)?;
    Ok(Point {
        pe: joint.error_probability(),
        ci: None,
        mi: mutual_information(&joint),
    })
}

fn mc_point(trace: &StreamTrace, threshold: f64) -> Point {
    let report = trace.report(threshold);
    Point {
        pe: report.error_rate.estimate,
        ci: Some(report.error_rate.half_width()),
        mi: mi_from_counts(&report.joint_counts).bits,
    }
}

fn row(variable: SweepVariable, value: f64, beta: f64, engine: Engine, channel: &ChannelParams, lambda: Option<f64>, p: Point) -> SweepRow {
    SweepRow {
        variable,
        value,
        beta,
        engine,
        pe: p.pe,
        pe_ci_halfwidth: p.ci,
        mi_bits: p.mi,
        lambda,
        n: channel.molecules,
        distance: channel.geometry.distance(),
        diffusion_coefficient: channel.geometry.diffusion_coefficient(),
        slot_duration: channel.slot_duration,
        prior_one: channel.prior_one,
    }
}

/// Simulate one trace per job, in parallel, keeping job order. Trial indices
/// are the job positions, so every job draws from its own random streams.
fn traces(settings: &MonteCarloSettings, channels: &[ChannelParams]) -> Result<Vec<StreamTrace>, ExperimentError> {
    channels
        .par_iter()
        .enumerate()
        .map(|(i, c)| simulate_trace(&settings.config(*c), i as u64).map_err(ExperimentError::from))
        .collect()
}

/// Error probability and mutual information against the threshold, one curve
/// per beta. Monte Carlo rows decode a single simulated stream per beta at
/// every threshold.
pub fn run_threshold_sweep(spec: &SweepSpec) -> Result<SweepResult, ExperimentError> {
    spec.validate(SweepVariable::Threshold)?;
    let channels: Vec<ChannelParams> = spec.betas.iter().map(|&b| spec.base.with_beta(b)).collect();
    for c in &channels {
        c.validate()?;
    }
    let mc = if spec.engines.contains(&Engine::MonteCarlo) {
        traces(&spec.monte_carlo, &channels)?
    } else {
        Vec::new()
    };

    let mut result = SweepResult {
        metadata: spec.metadata(),
        ..SweepResult::default()
    };
    let mut per_curve: Vec<Vec<(f64, f64, f64)>> = vec![Vec::new(); channels.len() * spec.engines.len()];
    for &lambda in &spec.grid {
        for (b, channel) in channels.iter().enumerate() {
            for (e, &engine) in spec.engines.iter().enumerate() {
                let p = match engine {
                    Engine::Analytic => analytic_point(channel, lambda)?,
                    Engine::MonteCarlo => mc_point(&mc[b], lambda),
                };
                per_curve[b * spec.engines.len() + e].push((lambda, p.pe, p.mi));
                result.rows.push(row(SweepVariable::Threshold, lambda, spec.betas[b], engine, channel, None, p));
            }
        }
    }

    for (b, &beta) in spec.betas.iter().enumerate() {
        for (e, &engine) in spec.engines.iter().enumerate() {
            let curve = &per_curve[b * spec.engines.len() + e];
            // strict comparisons keep the smallest threshold on ties
            let min = curve.iter().fold(curve[0], |a, &x| if x.1 < a.1 { x } else { a });
            let max = curve.iter().fold(curve[0], |a, &x| if x.2 > a.2 { x } else { a });
            let summary = OptimumSummary {
                beta,
                engine,
                min_pe: min.1,
                argmin_threshold: min.0,
                max_mi: max.2,
                argmax_threshold: max.0,
            };
            result.metadata.push((
                format!("optimum[{}, beta={}]", engine.as_str(), format_number(beta)),
                format!(
                    "min_pe={} at lambda={}; max_mi={} at lambda={}",
                    format_number(summary.min_pe),
                    format_number(summary.argmin_threshold),
                    format_number(summary.max_mi),
                    format_number(summary.argmax_threshold)
                ),
            ));
            result.optima.push(summary);
        }
    }
    Ok(result)
}

/// Error probability against transmitter-receiver distance at a fixed
/// threshold, one curve per beta.
pub fn run_distance_sweep(spec: &SweepSpec) -> Result<SweepResult, ExperimentError> {
    spec.validate(SweepVariable::Distance)?;
    let threshold = spec.threshold.expect("validated");
    let mut channels = Vec::with_capacity(spec.grid.len() * spec.betas.len());
    for &d in &spec.grid {
        let geometry = spec.base.geometry.with_distance(d).map_err(|e| ExperimentError::config(e.to_string()))?;
        for &b in &spec.betas {
            channels.push(spec.base.with_geometry(geometry).with_beta(b));
        }
    }
    let mc = if spec.engines.contains(&Engine::MonteCarlo) {
        traces(&spec.monte_carlo, &channels)?
    } else {
        Vec::new()
    };

    let mut result = SweepResult {
        metadata: spec.metadata(),
        ..SweepResult::default()
    };
    for (i, &d) in spec.grid.iter().enumerate() {
        let csk_analytic = analytic_point(&channels[i * spec.betas.len()].with_beta(0.0), threshold)?.pe;
        let mut csk_mc = None;
        let mut points = Vec::new();
        for (b, &beta) in spec.betas.iter().enumerate() {
            let idx = i * spec.betas.len() + b;
            for &engine in &spec.engines {
                let p = match engine {
                    Engine::Analytic => analytic_point(&channels[idx], threshold)?,
                    Engine::MonteCarlo => mc_point(&mc[idx], threshold),
                };
                if engine == Engine::MonteCarlo && beta == 0.0 {
                    csk_mc = Some(p.pe);
                }
                points.push((beta, engine, p.pe));
                result.rows.push(row(SweepVariable::Distance, d, beta, engine, &channels[idx], Some(threshold), p));
            }
        }
        for (beta, engine, pe) in points {
            if beta == 0.0 {
                continue;
            }
            let reference = match engine {
                Engine::Analytic => Some(csk_analytic),
                Engine::MonteCarlo => csk_mc,
            };
            if let Some(csk_pe) = reference {
                result.gaps.push(DistanceGap {
                    distance: d,
                    beta,
                    engine,
                    csk_pe,
                    zebra_pe: pe,
                });
            }
        }
    }
    Ok(result)
}

/// Error probability against inhibition efficiency at a fixed threshold.
pub fn run_beta_sweep(spec: &SweepSpec) -> Result<SweepResult, ExperimentError> {
    spec.validate(SweepVariable::Beta)?;
    let threshold = spec.threshold.expect("validated");
    let channels: Vec<ChannelParams> = spec.grid.iter().map(|&b| spec.base.with_beta(b)).collect();
    for c in &channels {
        c.validate()?;
    }
    let mc = if spec.engines.contains(&Engine::MonteCarlo) {
        traces(&spec.monte_carlo, &channels)?
    } else {
        Vec::new()
    };
    let mut result = SweepResult {
        metadata: spec.metadata(),
        ..SweepResult::default()
    };
    for (i, channel) in channels.iter().enumerate() {
        for &engine in &spec.engines {
            let p = match engine {
                Engine::Analytic => analytic_point(channel, threshold)?,
                Engine::MonteCarlo => mc_point(&mc[i], threshold),
            };
            result.rows.push(row(SweepVariable::Beta, spec.grid[i], spec.grid[i], engine, channel, Some(threshold), p));
        }
    }
    Ok(result)
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, ExperimentError> {
    match spec.variable {
        SweepVariable::Threshold => run_threshold_sweep(spec),
        SweepVariable::Distance => run_distance_sweep(spec),
        SweepVariable::Beta => run_beta_sweep(spec),
    }
}
