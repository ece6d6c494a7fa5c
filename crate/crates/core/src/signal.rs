//! Three-phase current synthesis with sensor faults.
//!
//! Ideal phase currents are balanced sinusoids. A faulty current sensor
//! reports `gain * ideal + noise`, where the gain is drawn once per scenario
//! from the soft or hard fault range.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seed;

/// One of the three measured phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    pub fn index(self) -> usize {
        match self {
            Phase::A => 0,
            Phase::B => 1,
            Phase::C => 2,
        }
    }

    /// Phase offset in radians: A leads, B lags by 120°, C leads by 120°.
    pub fn offset(self) -> f64 {
        match self {
            Phase::A => 0.0,
            Phase::B => -2.0 * PI / 3.0,
            Phase::C => 2.0 * PI / 3.0,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Phase::A => 'A',
            Phase::B => 'B',
            Phase::C => 'C',
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Phase::A),
            "B" | "b" => Ok(Phase::B),
            "C" | "c" => Ok(Phase::C),
            other => Err(Error::InvalidInput(format!("unknown phase {other:?}"))),
        }
    }
}

/// Closed interval of sensor gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainRange {
    pub lo: f64,
    pub hi: f64,
}

impl GainRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, g: f64) -> bool {
        (self.lo..=self.hi).contains(&g)
    }

    fn overlaps(&self, other: &GainRange) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

/// Electrical and fault-model parameters for synthesis.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalConfig {
    /// Phase current amplitude in amperes.
    pub amplitude: f64,
    /// Grid frequency in hertz.
    pub grid_freq: f64,
    /// Sampling rate in hertz; must be an integer multiple of `grid_freq`.
    pub sample_rate: f64,
    /// Noise standard deviation as a fraction of `amplitude`.
    pub noise_sigma_frac: f64,
    pub soft_range: GainRange,
    pub hard_range: GainRange,
}

/// Amplitude implied by a 40 V phase voltage feeding 625 W
/// (100 V across 16 Ω): `2 P / (3 V_m)`.
pub const DEFAULT_AMPLITUDE: f64 = 2.0 * 625.0 / (3.0 * 40.0);

impl Default for SignalConfig {
    fn default() -> Self {
        Self {
            amplitude: DEFAULT_AMPLITUDE,
            grid_freq: 50.0,
            sample_rate: 25_600.0,
            noise_sigma_frac: 0.02,
            soft_range: GainRange::new(0.6, 0.8),
            hard_range: GainRange::new(0.3, 0.5),
        }
    }
}

impl SignalConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return bad(format!("amplitude must be > 0, got {}", self.amplitude));
        }
        if !(self.grid_freq.is_finite() && self.grid_freq > 0.0) {
            return bad(format!(
                "grid frequency must be > 0, got {}",
                self.grid_freq
            ));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return bad(format!("sample rate must be > 0, got {}", self.sample_rate));
        }
        let ratio = self.sample_rate / self.grid_freq;
        if ratio.fract() != 0.0 || ratio < 2.0 {
            return bad(format!(
                "sample rate {} is not an integer multiple (>= 2) of grid frequency {}",
                self.sample_rate, self.grid_freq
            ));
        }
        if !(self.noise_sigma_frac.is_finite() && self.noise_sigma_frac >= 0.0) {
            return bad(format!(
                "noise fraction must be >= 0, got {}",
                self.noise_sigma_frac
            ));
        }
        for (name, r) in [("soft", self.soft_range), ("hard", self.hard_range)] {
            if !(r.lo.is_finite() && r.hi.is_finite() && 0.0 <= r.lo && r.lo <= r.hi && r.hi < 1.0)
            {
                return bad(format!(
                    "{name} gain range [{}, {}] must satisfy 0 <= lo <= hi < 1",
                    r.lo, r.hi
                ));
            }
        }
        if self.soft_range.overlaps(&self.hard_range) {
            return bad("soft and hard gain ranges overlap".into());
        }
        Ok(())
    }

    /// Samples in one grid cycle (512 at the defaults).
    pub fn samples_per_cycle(&self) -> usize {
        (self.sample_rate / self.grid_freq).round() as usize
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.grid_freq
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma_frac * self.amplitude
    }

    /// Renders the configuration as `key=value` pairs for file headers.
    pub fn describe(&self) -> String {
        format!(
            "amplitude={} grid_freq={} sample_rate={} noise_sigma_frac={} soft_range={}..{} hard_range={}..{}",
            self.amplitude,
            self.grid_freq,
            self.sample_rate,
            self.noise_sigma_frac,
            self.soft_range.lo,
            self.soft_range.hi,
            self.hard_range.lo,
            self.hard_range.hi
        )
    }
}

/// Health of a single current sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    Normal,
    Soft,
    Hard,
}

/// Condition and applied gain of one phase sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFault {
    pub condition: Condition,
    pub gain: f64,
}

impl SensorFault {
    pub const NORMAL: SensorFault = SensorFault {
        condition: Condition::Normal,
        gain: 1.0,
    };
}

/// Per-phase sensor condition; the ground truth of a cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultState {
    sensors: [SensorFault; 3],
}

impl Default for FaultState {
    fn default() -> Self {
        Self::normal()
    }
}

impl FaultState {
    pub fn normal() -> Self {
        Self {
            sensors: [SensorFault::NORMAL; 3],
        }
    }

    /// Builds a state from explicit gains, checking each against its range.
    pub fn new(sensors: [SensorFault; 3], cfg: &SignalConfig) -> Result<Self> {
        for (phase, s) in Phase::ALL.iter().zip(sensors.iter()) {
            let ok = match s.condition {
                Condition::Normal => s.gain == 1.0,
                Condition::Soft => cfg.soft_range.contains(s.gain),
                Condition::Hard => cfg.hard_range.contains(s.gain),
            };
            if !ok {
                return Err(Error::InvalidInput(format!(
                    "phase {phase}: gain {} inconsistent with {:?}",
                    s.gain, s.condition
                )));
            }
        }
        Ok(Self { sensors })
    }

    /// Draws gains for the given conditions from the configured ranges.
    pub fn draw<R: Rng + ?Sized>(
        conditions: [Condition; 3],
        cfg: &SignalConfig,
        rng: &mut R,
    ) -> Self {
        let sensors = conditions.map(|condition| SensorFault {
            condition,
            gain: match condition {
                Condition::Normal => 1.0,
                Condition::Soft => cfg.soft_range.sample(rng),
                Condition::Hard => cfg.hard_range.sample(rng),
            },
        });
        Self { sensors }
    }

    pub fn sensor(&self, phase: Phase) -> SensorFault {
        self.sensors[phase.index()]
    }

    pub fn gain(&self, phase: Phase) -> f64 {
        self.sensors[phase.index()].gain
    }

    pub fn conditions(&self) -> [Condition; 3] {
        self.sensors.map(|s| s.condition)
    }

    pub fn is_normal(&self) -> bool {
        self.sensors
            .iter()
            .all(|s| s.condition == Condition::Normal)
    }
}

/// One grid cycle of measured three-phase current.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleWindow {
    rows: [Vec<f64>; 3],
    cycle_index: usize,
    truth: Option<FaultState>,
}

impl CycleWindow {
    /// Builds a window from phase rows `[A, B, C]` of equal length.
    pub fn new(rows: [Vec<f64>; 3], cycle_index: usize) -> Result<Self> {
        let n = rows[0].len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("phase rows differ in length".into()));
        }
        if n == 0 {
            return Err(Error::InvalidInput("empty cycle window".into()));
        }
        for (phase, row) in Phase::ALL.iter().zip(rows.iter()) {
            if let Some(i) = row.iter().position(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite sample at phase {phase}, index {i}"
                )));
            }
        }
        Ok(Self {
            rows,
            cycle_index,
            truth: None,
        })
    }

    pub fn with_truth(mut self, truth: FaultState) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn row(&self, phase: Phase) -> &[f64] {
        &self.rows[phase.index()]
    }

    pub fn rows(&self) -> &[Vec<f64>; 3] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows[0].is_empty()
    }

    pub fn cycle_index(&self) -> usize {
        self.cycle_index
    }

    pub fn truth(&self) -> Option<&FaultState> {
        self.truth.as_ref()
    }
}

/// Ideal balanced current of `phase` at time `t` seconds.
pub fn ideal_phase_current(t: f64, phase: Phase, cfg: &SignalConfig) -> f64 {
    cfg.amplitude * (cfg.omega() * t + phase.offset()).sin()
}

/// Synthesizes one measured cycle. Time continues across cycles through
/// `cycle_index`, so consecutive windows join without a phase jump.
pub fn synthesize_cycle<R: Rng + ?Sized>(
    cfg: &SignalConfig,
    fault: &FaultState,
    cycle_index: usize,
    rng: &mut R,
) -> CycleWindow {
    let spc = cfg.samples_per_cycle();
    let start = cycle_index * spc;
    let sigma = cfg.noise_sigma();
    let noise = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("sigma is finite"));

    let rows = Phase::ALL.map(|phase| {
        let gain = fault.gain(phase);
        (0..spc)
            .map(|n| {
                let t = (start + n) as f64 / cfg.sample_rate;
                let clean = gain * ideal_phase_current(t, phase, cfg);
                match &noise {
                    Some(d) => clean + d.sample(rng),
                    None => clean,
                }
            })
            .collect::<Vec<_>>()
    });

    CycleWindow {
        rows,
        cycle_index,
        truth: Some(*fault),
    }
}

/// A multi-cycle run with a fault appearing at a cycle boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub total_cycles: usize,
    pub onset_cycle: usize,
    pub pre_state: FaultState,
    pub post_state: FaultState,
    pub seed: u64,
}

impl Scenario {
    pub const DEFAULT_CYCLES: usize = 5;

    /// Draws the pre- and post-onset gains from `seed`; noise later uses an
    /// independent stream of the same seed.
    pub fn draw(
        pre: [Condition; 3],
        post: [Condition; 3],
        total_cycles: usize,
        onset_cycle: usize,
        seed: u64,
        cfg: &SignalConfig,
    ) -> Self {
        let mut rng = seed::rng_for(seed, 0);
        let pre_state = FaultState::draw(pre, cfg, &mut rng);
        let post_state = FaultState::draw(post, cfg, &mut rng);
        Self {
            total_cycles,
            onset_cycle,
            pre_state,
            post_state,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.onset_cycle > self.total_cycles {
            return Err(Error::InvalidInput(format!(
                "onset cycle {} beyond total cycles {}",
                self.onset_cycle, self.total_cycles
            )));
        }
        Ok(())
    }

    pub fn state_at(&self, cycle: usize) -> &FaultState {
        if cycle < self.onset_cycle {
            &self.pre_state
        } else {
            &self.post_state
        }
    }
}

/// Synthesizes every cycle of `scenario`, each stamped with its truth.
pub fn synthesize_stream(scenario: &Scenario, cfg: &SignalConfig) -> Result<Vec<CycleWindow>> {
    cfg.validate()?;
    scenario.validate()?;
    let mut rng = seed::rng_for(scenario.seed, 1);
    Ok((0..scenario.total_cycles)
        .map(|k| synthesize_cycle(cfg, scenario.state_at(k), k, &mut rng))
        .collect())
}

/// Writes cycles as `cycle,phase,sample_index,value` rows.
pub fn write_stream_csv<W: Write>(
    mut out: W,
    cycles: &[CycleWindow],
    comments: &[String],
) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "cycle,phase,sample_index,value")?;
    for w in cycles {
        for phase in Phase::ALL {
            for (i, v) in w.row(phase).iter().enumerate() {
                writeln!(out, "{},{},{},{}", w.cycle_index(), phase, i, v)?;
            }
        }
    }
    Ok(())
}

/// Reads a stream CSV back into windows, ordered by cycle index.
pub fn read_stream_csv<R: Read>(input: R) -> Result<Vec<CycleWindow>> {
    use std::collections::BTreeMap;

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["cycle", "phase", "sample_index", "value"] {
        return Err(Error::parse(
            1,
            "expected header cycle,phase,sample_index,value",
        ));
    }

    let mut cycles: BTreeMap<usize, [Vec<(usize, f64)>; 3]> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| {
            rec.get(i)
                .ok_or_else(|| Error::parse(line, "missing field"))
        };
        let cycle: usize = field(0)?
            .parse()
            .map_err(|_| Error::parse(line, "bad cycle index"))?;
        let phase: Phase = field(1)?
            .parse()
            .map_err(|_| Error::parse(line, "bad phase"))?;
        let idx: usize = field(2)?
            .parse()
            .map_err(|_| Error::parse(line, "bad sample index"))?;
        let value: f64 = field(3)?
            .parse()
            .map_err(|_| Error::parse(line, "bad sample value"))?;
        if !value.is_finite() {
            return Err(Error::parse(line, "non-finite sample value"));
        }
        cycles.entry(cycle).or_default()[phase.index()].push((idx, value));
    }

    let mut out = Vec::with_capacity(cycles.len());
    for (cycle, mut rows) in cycles {
        for r in rows.iter_mut() {
            r.sort_by_key(|(i, _)| *i);
            if r.iter().enumerate().any(|(k, (i, _))| k != *i) {
                return Err(Error::InvalidInput(format!(
                    "cycle {cycle}: sample indices are not contiguous from 0"
                )));
            }
        }
        let rows = rows.map(|r| r.into_iter().map(|(_, v)| v).collect());
        out.push(CycleWindow::new(rows, cycle)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn quiet(amplitude: f64) -> SignalConfig {
        SignalConfig {
            amplitude,
            noise_sigma_frac: 0.0,
            ..SignalConfig::default()
        }
    }

    #[test]
    fn ideal_current_examples() {
        let cfg = quiet(10.0);
        assert_eq!(ideal_phase_current(0.0, Phase::A, &cfg), 0.0);
        assert!((ideal_phase_current(1.0 / 200.0, Phase::A, &cfg) - 10.0).abs() < 1e-12);
        let b = ideal_phase_current(0.0, Phase::B, &cfg);
        assert!((b - (-10.0 * 3f64.sqrt() / 2.0)).abs() < 1e-12);
        assert!((b + 8.6603).abs() < 1e-4);
    }

    #[test]
    fn defaults() {
        let cfg = SignalConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.samples_per_cycle(), 512);
        assert!((cfg.amplitude - 10.416_666_666_666_666).abs() < 1e-12);
    }

    #[test]
    fn config_rejections() {
        let base = SignalConfig::default();
        let bad = [
            SignalConfig {
                sample_rate: 25_601.0,
                ..base
            },
            SignalConfig {
                amplitude: 0.0,
                ..base
            },
            SignalConfig {
                noise_sigma_frac: -0.1,
                ..base
            },
            SignalConfig {
                hard_range: GainRange::new(0.5, 0.65),
                ..base
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn zero_noise_matches_ideal() {
        let cfg = quiet(10.0);
        let w = synthesize_cycle(&cfg, &FaultState::normal(), 3, &mut rng_from_seed(1));
        for phase in Phase::ALL {
            for (n, v) in w.row(phase).iter().enumerate() {
                let t = (3 * 512 + n) as f64 / cfg.sample_rate;
                assert_eq!(*v, ideal_phase_current(t, phase, &cfg));
            }
        }
    }

    #[test]
    fn soft_gain_scales_only_faulted_row() {
        let cfg = quiet(10.0);
        let fault = FaultState::new(
            [
                SensorFault {
                    condition: Condition::Soft,
                    gain: 0.7,
                },
                SensorFault::NORMAL,
                SensorFault::NORMAL,
            ],
            &cfg,
        )
        .unwrap();
        let normal = synthesize_cycle(&cfg, &FaultState::normal(), 0, &mut rng_from_seed(1));
        let w = synthesize_cycle(&cfg, &fault, 0, &mut rng_from_seed(1));
        for (f, n) in w.row(Phase::A).iter().zip(normal.row(Phase::A)) {
            assert_eq!(*f, 0.7 * n);
        }
        assert_eq!(w.row(Phase::B), normal.row(Phase::B));
        assert_eq!(w.row(Phase::C), normal.row(Phase::C));
    }

    #[test]
    fn phases_sum_to_zero() {
        let cfg = quiet(10.0);
        let w = synthesize_cycle(&cfg, &FaultState::normal(), 7, &mut rng_from_seed(0));
        for n in 0..w.len() {
            let s: f64 = Phase::ALL.iter().map(|p| w.row(*p)[n]).sum();
            assert!(s.abs() <= 1e-9 * cfg.amplitude);
        }
    }

    #[test]
    fn noise_is_zero_mean() {
        // 10^4 cycles of residuals; the sample mean must sit within 0.005 A of 0.
        let cfg = SignalConfig {
            amplitude: 10.0,
            ..SignalConfig::default()
        };
        let fault = FaultState::normal();
        let clean = synthesize_cycle(&quiet(10.0), &fault, 0, &mut rng_from_seed(0));
        let mut rng = rng_from_seed(42);
        let (mut sum, mut count) = (0.0, 0usize);
        for k in 0..10_000 {
            let w = synthesize_cycle(&cfg, &fault, k, &mut rng);
            for phase in Phase::ALL {
                for (m, c) in w.row(phase).iter().zip(clean.row(phase)) {
                    sum += m - c;
                    count += 1;
                }
            }
        }
        let mean = sum / count as f64;
        assert!(mean.abs() < 0.005 * cfg.amplitude, "residual mean {mean}");
    }

    #[test]
    fn stream_truths_follow_onset() {
        let cfg = SignalConfig::default();
        let a_soft = [Condition::Soft, Condition::Normal, Condition::Normal];
        let sc = Scenario::draw([Condition::Normal; 3], a_soft, 5, 2, 9, &cfg);
        let cycles = synthesize_stream(&sc, &cfg).unwrap();
        let conds: Vec<_> = cycles
            .iter()
            .map(|c| c.truth().unwrap().conditions()[0])
            .collect();
        use Condition::*;
        assert_eq!(conds, [Normal, Normal, Soft, Soft, Soft]);
        assert_eq!(
            cycles.iter().map(|c| c.cycle_index()).collect::<Vec<_>>(),
            [0, 1, 2, 3, 4]
        );

        let sc0 = Scenario::draw([Normal; 3], a_soft, 5, 0, 9, &cfg);
        assert!(synthesize_stream(&sc0, &cfg)
            .unwrap()
            .iter()
            .all(|c| !c.truth().unwrap().is_normal()));
    }

    #[test]
    fn multi_fault_gains_in_range() {
        use Condition::*;
        let cfg = SignalConfig::default();
        for seed in 0..50 {
            let sc = Scenario::draw([Normal; 3], [Soft, Hard, Normal], 5, 2, seed, &cfg);
            let post = synthesize_stream(&sc, &cfg).unwrap()[4]
                .truth()
                .copied()
                .unwrap();
            assert!(cfg.soft_range.contains(post.gain(Phase::A)));
            assert!(cfg.hard_range.contains(post.gain(Phase::B)));
            assert_eq!(post.gain(Phase::C), 1.0);
        }
    }

    #[test]
    fn onset_past_end_rejected() {
        let cfg = SignalConfig::default();
        let sc = Scenario::draw(
            [Condition::Normal; 3],
            [Condition::Normal; 3],
            5,
            6,
            0,
            &cfg,
        );
        assert!(synthesize_stream(&sc, &cfg).is_err());
    }

    #[test]
    fn stream_is_seed_deterministic() {
        use Condition::*;
        let cfg = SignalConfig::default();
        let sc = Scenario::draw([Normal; 3], [Hard, Hard, Normal], 5, 1, 77, &cfg);
        assert_eq!(
            synthesize_stream(&sc, &cfg).unwrap(),
            synthesize_stream(&sc, &cfg).unwrap()
        );
    }

    #[test]
    fn stream_csv_round_trip() {
        let cfg = SignalConfig {
            sample_rate: 400.0,
            ..SignalConfig::default()
        };
        let sc = Scenario::draw(
            [Condition::Normal; 3],
            [Condition::Normal, Condition::Hard, Condition::Normal],
            3,
            1,
            5,
            &cfg,
        );
        let cycles = synthesize_stream(&sc, &cfg).unwrap();
        let mut buf = Vec::new();
        write_stream_csv(&mut buf, &cycles, &["seed=5".into()]).unwrap();
        let back = read_stream_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in cycles.iter().zip(&back) {
            assert_eq!(a.rows(), b.rows());
            assert_eq!(a.cycle_index(), b.cycle_index());
        }
    }

    #[test]
    fn window_rejects_non_finite() {
        assert!(CycleWindow::new([vec![1.0, f64::NAN], vec![0.0; 2], vec![0.0; 2]], 0).is_err());
        assert!(CycleWindow::new([vec![1.0], vec![0.0; 2], vec![0.0; 2]], 0).is_err());
    }
}
