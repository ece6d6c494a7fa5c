//! Per-cycle feature extraction.
//!
//! The texture vector summarizes each phase by six statistics, in this
//! order: mean, standard deviation, smoothness, skewness, kurtosis, rms.
//! Phases are laid out A, B, C, giving 18 values. The raw vector is the
//! untransformed cycle, phases concatenated.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::signal::{CycleWindow, Phase, SignalConfig};

/// Statistics per phase in the texture vector.
pub const STATS_PER_PHASE: usize = 6;
/// Length of a texture feature vector.
pub const TEXTURE_DIM: usize = 3 * STATS_PER_PHASE;

/// Names of the per-phase statistics, in vector order.
pub const STAT_NAMES: [&str; STATS_PER_PHASE] =
    ["mean", "std", "smoothness", "skewness", "kurtosis", "rms"];

/// Which transform produced a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Texture,
    Raw,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Texture => "texture",
            FeatureKind::Raw => "raw",
        }
    }

    /// Feature dimension for a cycle of `samples_per_cycle` samples.
    pub fn dim(self, samples_per_cycle: usize) -> usize {
        match self {
            FeatureKind::Texture => TEXTURE_DIM,
            FeatureKind::Raw => 3 * samples_per_cycle,
        }
    }

    /// Column-name prefix used in feature CSV headers.
    pub fn column_prefix(self) -> char {
        match self {
            FeatureKind::Texture => 'f',
            FeatureKind::Raw => 'r',
        }
    }

    /// Default features tried per split: `ceil(sqrt(dim))`.
    pub fn default_m_features(self, dim: usize) -> usize {
        ((dim as f64).sqrt().ceil() as usize).clamp(1, dim.max(1))
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "texture" => Ok(FeatureKind::Texture),
            "raw" => Ok(FeatureKind::Raw),
            other => Err(Error::InvalidInput(format!(
                "unknown feature kind {other:?} (expected texture or raw)"
            ))),
        }
    }
}

/// Population moments of a sample sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
    /// Second central moment.
    pub m2: f64,
    /// Third central moment.
    pub m3: f64,
    /// Fourth central moment.
    pub m4: f64,
}

/// Mean, standard deviation and central moments with `1/n` normalization.
pub fn phase_moments(samples: &[f64]) -> Result<Moments> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "moments need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    Ok(Moments {
        mean,
        std: m2.sqrt(),
        m2,
        m3,
        m4,
    })
}

/// Texture statistics of one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTexture {
    pub mean: f64,
    pub std: f64,
    pub smoothness: f64,
    pub skewness: f64,
    /// Non-excess kurtosis; a pure sinusoid gives 1.5.
    pub kurtosis: f64,
    pub rms: f64,
}

impl PhaseTexture {
    pub fn to_array(self) -> [f64; STATS_PER_PHASE] {
        [
            self.mean,
            self.std,
            self.smoothness,
            self.skewness,
            self.kurtosis,
            self.rms,
        ]
    }
}

/// Texture statistics of a single phase row. `amplitude` normalizes the
/// smoothness term and scales the degenerate-variance threshold.
pub fn phase_texture(samples: &[f64], amplitude: f64) -> Result<PhaseTexture> {
    if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite sample at index {i}"
        )));
    }
    let m = phase_moments(samples)?;
    let sigma_n = m.std / amplitude;
    let smoothness = 1.0 - 1.0 / (1.0 + sigma_n * sigma_n);
    let (skewness, kurtosis) = if m.m2 < 1e-12 * amplitude * amplitude {
        (0.0, 0.0)
    } else {
        (m.m3 / m.m2.powf(1.5), m.m4 / (m.m2 * m.m2))
    };
    let rms = (samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64).sqrt();
    Ok(PhaseTexture {
        mean: m.mean,
        std: m.std,
        smoothness,
        skewness,
        kurtosis,
        rms,
    })
}

/// The 18-value texture vector of one cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextureFeatures {
    phases: [PhaseTexture; 3],
}

impl TextureFeatures {
    pub fn phase(&self, phase: Phase) -> &PhaseTexture {
        &self.phases[phase.index()]
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.phases.iter().flat_map(|p| p.to_array()).collect()
    }
}

/// Texture features of a cycle window.
pub fn extract_texture(w: &CycleWindow, cfg: &SignalConfig) -> Result<TextureFeatures> {
    let mut phases = [None; 3];
    for phase in Phase::ALL {
        phases[phase.index()] = Some(phase_texture(w.row(phase), cfg.amplitude)?);
    }
    Ok(TextureFeatures {
        phases: phases.map(|p| p.expect("all phases filled")),
    })
}

/// Raw samples of a cycle, phases concatenated A, B, C.
pub fn extract_raw(w: &CycleWindow) -> Vec<f64> {
    w.rows().iter().flatten().copied().collect()
}

/// Feature vector of the requested kind.
pub fn extract(kind: FeatureKind, w: &CycleWindow, cfg: &SignalConfig) -> Result<Vec<f64>> {
    match kind {
        FeatureKind::Texture => Ok(extract_texture(w, cfg)?.to_vec()),
        FeatureKind::Raw => Ok(extract_raw(w)),
    }
}
