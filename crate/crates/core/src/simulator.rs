//! Particle-level Monte Carlo of CSK and Zebra-CSK symbol streams.
//!
//! Every emission releases `n` molecules whose first-passage times are drawn
//! directly from the hitting-time law and binned into slots relative to the
//! emission. Under Zebra-CSK the messenger type alternates with slot parity
//! and each slot carries the inhibitor of the other type, so a late arrival is
//! exposed to inhibition when it lands an odd number of slots after its
//! emission. Exposed molecules are destroyed independently with probability
//! `beta`.
//!
//! Randomness is split per trial: the symbol stream and the molecule times use
//! separate ChaCha streams derived from the master seed and the trial index,
//! so results never depend on thread scheduling.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use thiserror::Error;

use crate::analytic::{mutual_information, ChannelParams, JointDistribution, ModelError};
use crate::physics::FirstPassageTime;
use crate::stats::{wilson_interval, ProportionEstimate};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Csk,
    ZebraCsk,
}

/// When a Zebra-CSK slot carries inhibitor molecules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InhibitorPolicy {
    /// Every slot, whether or not it carries a messenger emission.
    EverySlot,
    /// Only slots that emit messengers (symbol `1`).
    OnlyOnEmission,
}

/// What the receiver adds up before comparing with the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Counting {
    /// All surviving molecules, whatever their type.
    AllTypes,
    /// Only molecules of the messenger type assigned to the slot.
    SlotType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoleculeType {
    A,
    B,
}

impl MoleculeType {
    pub fn for_slot(slot: usize) -> Self {
        if slot.is_multiple_of(2) {
            MoleculeType::A
        } else {
            MoleculeType::B
        }
    }

    fn index(self) -> usize {
        match self {
            MoleculeType::A => 0,
            MoleculeType::B => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub channel: ChannelParams,
    pub num_slots: usize,
    pub master_seed: u64,
    /// How many slots after its emission a molecule can still be counted.
    pub isi_memory_slots: usize,
    pub inhibitor_policy: InhibitorPolicy,
    pub scheme: Scheme,
    pub counting: Counting,
}

impl SimConfig {
    /// Zebra-CSK, one slot of memory, inhibitors in every slot, all types counted.
    pub fn new(channel: ChannelParams, num_slots: usize, master_seed: u64) -> Self {
        Self {
            channel,
            num_slots,
            master_seed,
            isi_memory_slots: 1,
            inhibitor_policy: InhibitorPolicy::EverySlot,
            scheme: Scheme::ZebraCsk,
            counting: Counting::AllTypes,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.channel.validate()?;
        if self.num_slots < 2 {
            return Err(SimError::InvalidConfig(format!(
                "num_slots must be at least 2, got {}",
                self.num_slots
            )));
        }
        if self.isi_memory_slots < 1 {
            return Err(SimError::InvalidConfig("isi_memory_slots must be at least 1".into()));
        }
        if self.isi_memory_slots >= self.num_slots {
            return Err(SimError::InvalidConfig(format!(
                "isi_memory_slots ({}) leaves no slots after warm-up",
                self.isi_memory_slots
            )));
        }
        Ok(())
    }

    fn beta(&self) -> f64 {
        match self.scheme {
            Scheme::Csk => 0.0,
            Scheme::ZebraCsk => self.channel.inhibition_efficiency,
        }
    }
}

/// Per-trial random sources: one for symbols, one for molecules.
pub fn trial_rngs(master_seed: u64, trial: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut symbols = ChaCha8Rng::seed_from_u64(master_seed);
    symbols.set_stream(2 * trial);
    let mut molecules = ChaCha8Rng::seed_from_u64(master_seed);
    molecules.set_stream(2 * trial + 1);
    (symbols, molecules)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolStream {
    symbols: Vec<bool>,
}

impl SymbolStream {
    pub fn as_slice(&self) -> &[bool] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.symbols.iter().filter(|&&s| s).count()
    }
}

/// I.i.d. Bernoulli(`q`) symbols.
pub fn generate_symbols<R: Rng + ?Sized>(q: f64, length: usize, rng: &mut R) -> Result<SymbolStream, SimError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(SimError::InvalidConfig(format!("prior {q} outside (0, 1)")));
    }
    Ok(SymbolStream {
        symbols: (0..length).map(|_| rng.random::<f64>() < q).collect(),
    })
}

/// Arrivals of one emission grouped by slot offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalBins {
    /// `by_offset[j]` molecules land `j` slots after emission, `j <= memory`.
    pub by_offset: Vec<u32>,
    pub beyond_horizon: u32,
}

impl ArrivalBins {
    pub fn total(&self) -> u32 {
        self.by_offset.iter().sum::<u32>() + self.beyond_horizon
    }
}

fn slot_offset(t: f64, slot_duration: f64, memory: usize) -> Option<usize> {
    let j = (t / slot_duration).floor();
    if j <= memory as f64 {
        Some(j as usize)
    } else {
        None
    }
}

pub fn bin_arrivals(hit_times: &[f64], slot_duration: f64, memory: usize) -> ArrivalBins {
    let mut bins = ArrivalBins {
        by_offset: vec![0; memory + 1],
        beyond_horizon: 0,
    };
    for &t in hit_times {
        match slot_offset(t, slot_duration, memory) {
            Some(j) => bins.by_offset[j] += 1,
            None => bins.beyond_horizon += 1,
        }
    }
    bins
}

/// Where every released molecule ended up.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MoleculeLedger {
    pub released: u64,
    pub counted: u64,
    pub inhibited: u64,
    /// Arrived later than the ISI memory allows.
    pub beyond_horizon: u64,
    /// Would have landed after the last simulated slot.
    pub after_stream_end: u64,
}

impl MoleculeLedger {
    pub fn is_balanced(&self) -> bool {
        self.released == self.counted + self.inhibited + self.beyond_horizon + self.after_stream_end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SlotCounts {
    sent: bool,
    by_type: [u32; 2],
}

/// Received molecule counts for a whole stream, before threshold decoding.
///
/// The counts do not depend on the threshold, so a sweep over thresholds can
/// decode one trace many times.
#[derive(Debug, Clone)]
pub struct StreamTrace {
    config: SimConfig,
    slots: Vec<SlotCounts>,
    ledger: MoleculeLedger,
}

/// One received slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotObservation {
    pub slot_index: usize,
    pub sent: bool,
    counts_by_type: [u32; 2],
    /// The count compared with the threshold.
    pub counted: u32,
    pub decoded: bool,
}

impl SlotObservation {
    pub fn count(&self, kind: MoleculeType) -> u32 {
        self.counts_by_type[kind.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub scheme: Scheme,
    pub beta: f64,
    pub threshold: f64,
    /// `[sent][decoded]`, warm-up slots excluded.
    pub joint_counts: [[u64; 2]; 2],
    pub error_rate: ProportionEstimate,
    pub molecules: MoleculeLedger,
}

impl TrialReport {
    pub fn slots_scored(&self) -> u64 {
        self.joint_counts.iter().flatten().sum()
    }

    pub fn empirical_joint(&self) -> Option<JointDistribution> {
        JointDistribution::from_counts(&self.joint_counts)
    }
}

impl StreamTrace {
    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn molecules(&self) -> MoleculeLedger {
        self.ledger
    }

    fn counted(&self, slot: usize) -> u32 {
        let c = &self.slots[slot];
        match (self.config.scheme, self.config.counting) {
            (Scheme::ZebraCsk, Counting::SlotType) => c.by_type[MoleculeType::for_slot(slot).index()],
            _ => c.by_type[0] + c.by_type[1],
        }
    }

    pub fn observations(&self, threshold: f64) -> Vec<SlotObservation> {
        (0..self.slots.len())
            .map(|k| {
                let counted = self.counted(k);
                SlotObservation {
                    slot_index: k,
                    sent: self.slots[k].sent,
                    counts_by_type: self.slots[k].by_type,
                    counted,
                    decoded: f64::from(counted) >= threshold,
                }
            })
            .collect()
    }

    /// `[sent][decoded]` over the scored (post warm-up) slots.
    pub fn joint_counts(&self, threshold: f64) -> [[u64; 2]; 2] {
        let mut table = [[0u64; 2]; 2];
        for k in self.config.isi_memory_slots..self.slots.len() {
            let decoded = f64::from(self.counted(k)) >= threshold;
            table[usize::from(self.slots[k].sent)][usize::from(decoded)] += 1;
        }
        table
    }

    pub fn report(&self, threshold: f64) -> TrialReport {
        let joint_counts = self.joint_counts(threshold);
        TrialReport {
            scheme: self.config.scheme,
            beta: self.config.beta(),
            threshold,
            joint_counts,
            error_rate: error_estimate(&joint_counts),
            molecules: self.ledger,
        }
    }
}

fn error_estimate(table: &[[u64; 2]; 2]) -> ProportionEstimate {
    let errors = table[0][1] + table[1][0];
    let total: u64 = table.iter().flatten().sum();
    wilson_interval(errors, total)
}

/// Simulate trial `trial` of `config` and return the undecoded counts.
pub fn simulate_trace(config: &SimConfig, trial: u64) -> Result<StreamTrace, SimError> {
    config.validate()?;
    let (mut sym_rng, mut mol_rng) = trial_rngs(config.master_seed, trial);
    let channel = &config.channel;
    let stream = generate_symbols(channel.prior_one, config.num_slots, &mut sym_rng)?;
    let symbols = stream.as_slice();
    let ts = channel.slot_duration;
    let memory = config.isi_memory_slots;
    let beta = config.beta();
    let zebra = config.scheme == Scheme::ZebraCsk;
    let law = FirstPassageTime::new(&channel.geometry);

    let mut slots: Vec<SlotCounts> = symbols
        .iter()
        .map(|&sent| SlotCounts { sent, by_type: [0; 2] })
        .collect();
    let mut ledger = MoleculeLedger::default();

    for (k, _) in symbols.iter().enumerate().filter(|(_, &s)| s) {
        let kind = if zebra { MoleculeType::for_slot(k) } else { MoleculeType::A };
        for _ in 0..channel.molecules {
            ledger.released += 1;
            let t = law.sample(&mut mol_rng);
            let Some(j) = slot_offset(t, ts, memory) else {
                ledger.beyond_horizon += 1;
                continue;
            };
            let landing = k + j;
            if landing >= symbols.len() {
                ledger.after_stream_end += 1;
                continue;
            }
            // slot `landing` carries the inhibitor of the type it does not emit
            let exposed = zebra
                && j % 2 == 1
                && match config.inhibitor_policy {
                    InhibitorPolicy::EverySlot => true,
                    InhibitorPolicy::OnlyOnEmission => symbols[landing],
                };
            if exposed && mol_rng.random::<f64>() < beta {
                ledger.inhibited += 1;
                continue;
            }
            slots[landing].by_type[kind.index()] += 1;
            ledger.counted += 1;
        }
    }

    Ok(StreamTrace {
        config: *config,
        slots,
        ledger,
    })
}

/// Simulate one stream (trial 0) and decode it with `threshold`.
pub fn simulate_stream(config: &SimConfig, threshold: f64) -> Result<(Vec<SlotObservation>, TrialReport), SimError> {
    let trace = simulate_trace(config, 0)?;
    Ok((trace.observations(threshold), trace.report(threshold)))
}

/// Pooled error rate over independent trials `0..repetitions`, with a 95%
/// Wilson interval.
pub fn estimate_error_rate(config: &SimConfig, threshold: f64, repetitions: u64) -> Result<ProportionEstimate, SimError> {
    if repetitions == 0 {
        return Err(SimError::InvalidConfig("repetitions must be at least 1".into()));
    }
    let tables = (0..repetitions)
        .into_par_iter()
        .map(|trial| simulate_trace(config, trial).map(|t| t.joint_counts(threshold)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut pooled = [[0u64; 2]; 2];
    for table in &tables {
        for s in 0..2 {
            for r in 0..2 {
                pooled[s][r] += table[s][r];
            }
        }
    }
    Ok(error_estimate(&pooled))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    pub bits: f64,
    /// Some cell has fewer than five expected observations under independence.
    pub low_counts: bool,
    /// A marginal is empty; `bits` is reported as zero.
    pub degenerate: bool,
}

/// Plug-in estimate of `I(S; R)` on the empirical joint table of trial 0.
pub fn estimate_mutual_information(config: &SimConfig, threshold: f64) -> Result<MiEstimate, SimError> {
    let trace = simulate_trace(config, 0)?;
    Ok(mi_from_counts(&trace.joint_counts(threshold)))
}

pub fn mi_from_counts(table: &[[u64; 2]; 2]) -> MiEstimate {
    let Some(joint) = JointDistribution::from_counts(table) else {
        return MiEstimate { bits: 0.0, low_counts: true, degenerate: true };
    };
    let total = table.iter().flatten().sum::<u64>() as f64;
    let sent = joint.sent_marginal();
    let received = joint.received_marginal();
    if sent.contains(&0.0) || received.contains(&0.0) {
        return MiEstimate { bits: 0.0, low_counts: true, degenerate: true };
    }
    let low_counts = sent
        .iter()
        .any(|&s| received.iter().any(|&r| total * s * r < 5.0));
    MiEstimate {
        bits: mutual_information(&joint),
        low_counts,
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::LinkGeometry;
    use proptest::prelude::*;

    fn channel(beta: f64) -> ChannelParams {
        ChannelParams {
            molecules: 100,
            geometry: LinkGeometry::new(32e-6, 7.6e-11).unwrap(),
            slot_duration: 5.9,
            inhibition_efficiency: beta,
            prior_one: 0.5,
        }
    }

    #[test]
    fn config_validation() {
        let ok = SimConfig::new(channel(0.5), 100, 1);
        assert!(ok.validate().is_ok());
        assert!(SimConfig { num_slots: 1, ..ok }.validate().is_err());
        assert!(SimConfig { isi_memory_slots: 0, ..ok }.validate().is_err());
        assert!(SimConfig { isi_memory_slots: 100, ..ok }.validate().is_err());
        assert!(estimate_error_rate(&ok, 10.0, 0).is_err());
    }

    #[test]
    fn symbols_concentrate_and_repeat() {
        let n = 100_000;
        let (mut a, _) = trial_rngs(5, 0);
        let s = generate_symbols(0.5, n, &mut a).unwrap();
        let frac = s.ones() as f64 / n as f64;
        assert!((frac - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
        let (mut b, _) = trial_rngs(5, 0);
        assert_eq!(s, generate_symbols(0.5, n, &mut b).unwrap());
        let (mut c, _) = trial_rngs(5, 0);
        assert_eq!(generate_symbols(1e-12, 1000, &mut c).unwrap().ones(), 0);
        assert!(generate_symbols(0.0, 10, &mut c).is_err());
    }

    #[test]
    fn molecule_types_alternate() {
        assert_eq!(MoleculeType::for_slot(0), MoleculeType::A);
        assert_eq!(MoleculeType::for_slot(1), MoleculeType::B);
        assert_eq!(MoleculeType::for_slot(2), MoleculeType::A);
    }

    #[test]
    fn no_emissions_decode_zero() {
        let config = SimConfig::new(ChannelParams { prior_one: 1e-12, ..channel(0.0) }, 500, 3);
        let (obs, report) = simulate_stream(&config, 1.0).unwrap();
        assert!(obs.iter().all(|o| !o.decoded && o.counted == 0));
        assert_eq!(report.error_rate.successes, 0);
        assert_eq!(report.molecules.released, 0);
    }

    #[test]
    fn zero_threshold_always_decodes_one() {
        let config = SimConfig::new(channel(0.5), 5000, 4);
        let (_, report) = simulate_stream(&config, 0.0).unwrap();
        assert_eq!(report.joint_counts[0][0] + report.joint_counts[1][0], 0);
        let zeros = report.joint_counts[0][1] as f64 / report.slots_scored() as f64;
        assert!((report.error_rate.estimate - zeros).abs() < 1e-15);
        assert!((zeros - 0.5).abs() < 0.03);
    }

    #[test]
    fn unreachable_threshold_always_decodes_zero() {
        let config = SimConfig { isi_memory_slots: 6, ..SimConfig::new(channel(0.0), 4000, 9) };
        // at most 7 emissions can contribute, 700 molecules
        let p = estimate_error_rate(&config, 701.0, 2).unwrap();
        assert!((p.estimate - 0.5).abs() < 0.03);
    }

    #[test]
    fn warm_up_slots_are_excluded() {
        let config = SimConfig { isi_memory_slots: 3, ..SimConfig::new(channel(0.5), 50, 2) };
        let (_, report) = simulate_stream(&config, 10.0).unwrap();
        assert_eq!(report.slots_scored(), 47);
    }

    #[test]
    fn ledger_balances_in_every_mode() {
        for scheme in [Scheme::Csk, Scheme::ZebraCsk] {
            for policy in [InhibitorPolicy::EverySlot, InhibitorPolicy::OnlyOnEmission] {
                for memory in [1, 3] {
                    let config = SimConfig {
                        scheme,
                        inhibitor_policy: policy,
                        isi_memory_slots: memory,
                        ..SimConfig::new(channel(0.7), 300, 11)
                    };
                    let trace = simulate_trace(&config, 0).unwrap();
                    let ledger = trace.molecules();
                    assert!(ledger.is_balanced(), "{ledger:?}");
                    let ones = trace.slots.iter().filter(|s| s.sent).count() as u64;
                    assert_eq!(ledger.released, 100 * ones);
                    if scheme == Scheme::Csk {
                        assert_eq!(ledger.inhibited, 0);
                    }
                }
            }
        }
    }

    #[test]
    fn full_inhibition_blocks_next_slot_arrivals() {
        let config = SimConfig::new(channel(1.0), 2000, 21);
        let trace = simulate_trace(&config, 0).unwrap();
        for (k, slot) in trace.slots.iter().enumerate() {
            // only own-slot molecules survive, so a silent slot stays empty
            if !slot.sent {
                assert_eq!(slot.by_type, [0, 0], "slot {k}");
            } else {
                assert_eq!(slot.by_type[1 - MoleculeType::for_slot(k).index()], 0);
            }
        }
    }

    #[test]
    fn slot_type_counting_ignores_other_type() {
        let config = SimConfig {
            counting: Counting::SlotType,
            ..SimConfig::new(channel(0.0), 2000, 8)
        };
        let trace = simulate_trace(&config, 0).unwrap();
        for obs in trace.observations(15.0) {
            assert_eq!(obs.counted, obs.count(MoleculeType::for_slot(obs.slot_index)));
        }
    }

    #[test]
    fn only_on_emission_suppresses_less() {
        let every = SimConfig::new(channel(1.0), 20_000, 13);
        let only = SimConfig { inhibitor_policy: InhibitorPolicy::OnlyOnEmission, ..every };
        let a = simulate_trace(&every, 0).unwrap().molecules();
        let b = simulate_trace(&only, 0).unwrap().molecules();
        assert!(b.inhibited < a.inhibited);
        assert!(b.counted > a.counted);
    }

    #[test]
    fn trials_are_reproducible_and_distinct() {
        let config = SimConfig::new(channel(0.5), 3000, 77);
        let a = simulate_trace(&config, 0).unwrap().joint_counts(19.0);
        let b = simulate_trace(&config, 0).unwrap().joint_counts(19.0);
        let c = simulate_trace(&config, 1).unwrap().joint_counts(19.0);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let p1 = estimate_error_rate(&config, 19.0, 4).unwrap();
        let p2 = estimate_error_rate(&config, 19.0, 4).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn mi_estimator_flags() {
        let degenerate = mi_from_counts(&[[10, 0], [5, 0]]);
        assert!(degenerate.degenerate && degenerate.bits == 0.0);
        let perfect = mi_from_counts(&[[500, 0], [0, 500]]);
        assert!((perfect.bits - 1.0).abs() < 1e-12);
        assert!(!perfect.low_counts);
        let small = mi_from_counts(&[[3, 1], [1, 3]]);
        assert!(small.low_counts);
        assert!(mi_from_counts(&[[0, 0], [0, 0]]).degenerate);
    }

    #[test]
    fn tiny_signal_carries_no_information() {
        let weak = ChannelParams { molecules: 1, ..channel(0.0) }
            .with_geometry(LinkGeometry::new(200e-6, 7.6e-11).unwrap());
        let config = SimConfig::new(weak, 20_000, 5);
        let mi = estimate_mutual_information(&config, 1.0).unwrap();
        assert!(mi.bits < 0.01, "{mi:?}");
    }

    proptest! {
        #[test]
        fn binning_conserves_molecules(
            times in proptest::collection::vec(0.0f64..1e3, 0..300),
            ts in 0.1f64..20.0,
            memory in 1usize..6,
        ) {
            let bins = bin_arrivals(&times, ts, memory);
            prop_assert_eq!(bins.total() as usize, times.len());
            prop_assert_eq!(bins.by_offset.len(), memory + 1);
        }
    }
}
