//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::scenario::ScenarioSpec;
use crate::hardy::{EnsembleSpec, DEFAULT_POINTS_PER_DECADE, MIN_RESOLUTIONS};
use crate::multiplier::Multiplier;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MultiplierSpec {
    One,
    Zero,
    Constant { value: f64 },
    Gaussian { width: f64 },
    Sinc { rho: f64 },
    Indicator { radius: f64 },
    BochnerRiesz { radius: f64, delta: f64 },
    Table { path: PathBuf },
}

impl MultiplierSpec {
    pub fn build(&self) -> Result<Multiplier> {
        match self {
            Self::One => Ok(Multiplier::one()),
            Self::Zero => Ok(Multiplier::zero()),
            Self::Constant { value } => Ok(Multiplier::constant(*value)),
            Self::Gaussian { width } => {
                positive("gaussian width", *width)?;
                Ok(Multiplier::gaussian(*width))
            }
            Self::Sinc { rho } => {
                positive("sinc rho", *rho)?;
                Ok(Multiplier::sinc(*rho))
            }
            Self::Indicator { radius } => Multiplier::indicator(*radius),
            Self::BochnerRiesz { radius, delta } => Multiplier::bochner_riesz(*radius, *delta),
            Self::Table { path } => Multiplier::from_table_file(path),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Table { path } if path.as_os_str().is_empty() => Err(Error::Config("empty table path".into())),
            Self::Table { .. } => Ok(()),
            other => other.build().map(|_| ()).map_err(|e| Error::Config(e.to_string())),
        }
    }
}

/// Spectral cutoffs `R`, either absolute or as a fraction `φ` of the grid
/// size: `φ` names the Fourier mode `k = φN`, i.e. `R = 2πφ/h`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mode_fractions: Vec<f64>,
}

impl CutoffSpec {
    pub fn resolve(&self, spacing: f64) -> Vec<f64> {
        self.values
            .iter()
            .copied()
            .chain(self.mode_fractions.iter().map(|f| 2.0 * std::f64::consts::PI * f / spacing))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.values.is_empty() && self.mode_fractions.is_empty() {
            return Err(Error::Config("cutoffs: give `values` or `mode_fractions`".into()));
        }
        for v in self.values.iter().chain(&self.mode_fractions) {
            positive("cutoff", *v)?;
        }
        Ok(())
    }
}

fn ppd() -> usize {
    DEFAULT_POINTS_PER_DECADE
}
fn mass_tol() -> f64 {
    crate::calculus::DEFAULT_MASS_TOL
}
fn centers() -> Vec<usize> {
    vec![0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentSpec {
    /// `max_f ‖F(√L)f‖_{H^p_L} / ‖f‖_{H^p_L}` over an ensemble.
    HardyRatio {
        multiplier: MultiplierSpec,
        p: f64,
        #[serde(default)]
        ensemble: EnsembleSpec,
        #[serde(default = "ppd")]
        points_per_decade: usize,
    },
    /// Bochner-Riesz ratios across all resolutions with a verdict per order.
    RieszSweep {
        p: f64,
        q: f64,
        deltas: Vec<f64>,
        cutoffs: CutoffSpec,
        #[serde(default)]
        ensemble: EnsembleSpec,
        #[serde(default = "ppd")]
        points_per_decade: usize,
    },
    /// Support of the wave propagator `cos(t√L)`.
    FiniteSpeed {
        times: Vec<f64>,
        #[serde(default = "mass_tol")]
        mass_tol: f64,
    },
    /// Heat decay between `B(x₀, w)` and the shell `w + d ≤ d(x₀, ·) ≤ 3w + d`.
    DaviesGaffney {
        distances: Vec<f64>,
        times: Vec<f64>,
        #[serde(default)]
        set_radius: f64,
    },
    /// Restriction-type constant for balls `B(x, k/R)`.
    Restriction {
        multiplier: MultiplierSpec,
        cutoff: f64,
        p0: f64,
        q: f64,
        radii: Vec<f64>,
        #[serde(default = "centers")]
        centers: Vec<usize>,
    },
    /// Smoothed spectral measure `(2h)^{−1}‖E[λ−h, λ+h]‖_{p0→p0'}`.
    SpectralMeasure {
        p0: f64,
        lambdas: Vec<f64>,
        half_width: f64,
    },
    /// `‖P_{B(x,2^j r)^c} F(√L) P_{B(x,r)}‖_{p0→2}` against `j`.
    OffdiagDecay {
        multiplier: MultiplierSpec,
        cutoff: f64,
        p0: f64,
        q: f64,
        s: f64,
        radius: f64,
        j: Vec<u32>,
        wave_time: f64,
        #[serde(default)]
        center: usize,
    },
    /// `‖F(√L)(I − e^{−r²L})^M f‖_{L²(annulus j)} / ‖f‖_{L²(B)}` over atoms.
    CriterionDecay {
        multiplier: MultiplierSpec,
        m: u32,
        s: f64,
        radius: f64,
        j: Vec<u32>,
        #[serde(default)]
        center: usize,
    },
    /// Heat and resolvent conditions on sampled `(x, r, t)`.
    Conditions {
        p0: f64,
        power: f64,
        radii: Vec<f64>,
        times: Vec<f64>,
        #[serde(default = "centers")]
        centers: Vec<usize>,
    },
}

impl ExperimentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::HardyRatio { .. } => "hardy_ratio",
            Self::RieszSweep { .. } => "riesz_sweep",
            Self::FiniteSpeed { .. } => "finite_speed",
            Self::DaviesGaffney { .. } => "davies_gaffney",
            Self::Restriction { .. } => "restriction",
            Self::SpectralMeasure { .. } => "spectral_measure",
            Self::OffdiagDecay { .. } => "offdiag_decay",
            Self::CriterionDecay { .. } => "criterion_decay",
            Self::Conditions { .. } => "conditions",
        }
    }

    fn validate(&self, resolutions: usize) -> Result<()> {
        match self {
            Self::HardyRatio {
                multiplier,
                p,
                ensemble,
                points_per_decade,
            } => {
                multiplier.validate()?;
                hardy_p(*p)?;
                ensemble.validate().map_err(cfg)?;
                at_least("points_per_decade", *points_per_decade, 2)
            }
            Self::RieszSweep {
                p,
                q,
                deltas,
                cutoffs,
                ensemble,
                points_per_decade,
            } => {
                hardy_p(*p)?;
                exponent_q(*q)?;
                nonempty("deltas", deltas)?;
                if let Some(d) = deltas.iter().find(|d| !(**d > -1.0 && d.is_finite())) {
                    return Err(Error::Config(format!("Bochner-Riesz order must exceed −1, got {d}")));
                }
                cutoffs.validate()?;
                ensemble.validate().map_err(cfg)?;
                at_least("points_per_decade", *points_per_decade, 2)?;
                if resolutions < MIN_RESOLUTIONS {
                    return Err(Error::Config(format!(
                        "riesz_sweep needs at least {MIN_RESOLUTIONS} resolutions, got {resolutions}"
                    )));
                }
                Ok(())
            }
            Self::FiniteSpeed { times, mass_tol } => {
                all_positive("times", times)?;
                if !(*mass_tol > 0.0 && *mass_tol < 1.0) {
                    return Err(Error::Config(format!("mass_tol must lie in (0, 1), got {mass_tol}")));
                }
                Ok(())
            }
            Self::DaviesGaffney {
                distances,
                times,
                set_radius,
            } => {
                all_positive("distances", distances)?;
                all_positive("times", times)?;
                if !(*set_radius >= 0.0 && set_radius.is_finite()) {
                    return Err(Error::Config(format!("set_radius must be ≥ 0, got {set_radius}")));
                }
                Ok(())
            }
            Self::Restriction {
                multiplier,
                cutoff,
                p0,
                q,
                radii,
                centers,
            } => {
                multiplier.validate()?;
                positive("cutoff", *cutoff)?;
                source_p0(*p0)?;
                exponent_q(*q)?;
                all_positive("radii", radii)?;
                nonempty("centers", centers)
            }
            Self::SpectralMeasure {
                p0,
                lambdas,
                half_width,
            } => {
                source_p0(*p0)?;
                all_positive("lambdas", lambdas)?;
                positive("half_width", *half_width)
            }
            Self::OffdiagDecay {
                multiplier,
                cutoff,
                p0,
                q,
                s,
                radius,
                j,
                wave_time,
                ..
            } => {
                multiplier.validate()?;
                positive("cutoff", *cutoff)?;
                source_p0(*p0)?;
                exponent_q(*q)?;
                positive("s", *s)?;
                positive("radius", *radius)?;
                positive("wave_time", *wave_time)?;
                j_range(j)
            }
            Self::CriterionDecay {
                multiplier,
                m,
                s,
                radius,
                j,
                ..
            } => {
                multiplier.validate()?;
                if *m < 1 {
                    return Err(Error::Config("M must be at least 1".into()));
                }
                positive("s", *s)?;
                positive("radius", *radius)?;
                j_range(j)?;
                if j[0] < 1 {
                    return Err(Error::Config("annuli start at j = 1".into()));
                }
                Ok(())
            }
            Self::Conditions {
                p0,
                power,
                radii,
                times,
                centers,
            } => {
                source_p0(*p0)?;
                positive("power", *power)?;
                all_positive("radii", radii)?;
                all_positive("times", times)?;
                nonempty("centers", centers)
            }
        }
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Grid sizes `N` the scenario is built at.
    pub resolutions: Vec<usize>,
    /// Overrides the scenario's dimension `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<f64>,
    pub scenario: ScenarioSpec,
    #[serde(rename = "experiment")]
    pub experiments: Vec<ExperimentSpec>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Every precondition that can be checked without building a space.
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Config("name must not be empty".into()));
        }
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config("seed must fit in a signed 64-bit integer".into()));
        }
        nonempty("resolutions", &self.resolutions)?;
        let sized = !matches!(self.scenario, ScenarioSpec::GraphFile { .. });
        if let Some(r) = self.resolutions.iter().find(|&&r| sized && r < 2) {
            return Err(Error::Config(format!("resolution {r} is too small")));
        }
        let mut sorted = self.resolutions.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.resolutions.len() {
            return Err(Error::Config("resolutions must be distinct".into()));
        }
        if let Some(n) = self.dimension {
            positive("dimension", n)?;
        }
        self.scenario.validate()?;
        nonempty("experiment", &self.experiments)?;
        for (k, e) in self.experiments.iter().enumerate() {
            e.validate(self.resolutions.len())
                .map_err(|err| Error::Config(format!("experiment {k} ({}): {}", e.kind(), strip(err))))?;
        }
        Ok(())
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

fn cfg(e: Error) -> Error {
    Error::Config(strip(e))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn all_positive(name: &str, v: &[f64]) -> Result<()> {
    nonempty(name, v)?;
    v.iter().try_for_each(|x| positive(name, *x))
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("{name} must not be empty")));
    }
    Ok(())
}

fn at_least(name: &str, v: usize, min: usize) -> Result<()> {
    if v < min {
        return Err(Error::Config(format!("{name} must be at least {min}, got {v}")));
    }
    Ok(())
}

fn hardy_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Config(format!("p must lie in (0, ∞), got {p}")));
    }
    Ok(())
}

fn source_p0(p0: f64) -> Result<()> {
    if !(1.0..=2.0).contains(&p0) {
        return Err(Error::Config(format!("p0 must lie in [1, 2], got {p0}")));
    }
    Ok(())
}

fn exponent_q(q: f64) -> Result<()> {
    if !(q >= 1.0) {
        return Err(Error::Config(format!("q must lie in [1, ∞], got {q}")));
    }
    Ok(())
}

fn j_range(j: &[u32]) -> Result<()> {
    if j.len() < crate::estimates::MIN_FIT_POINTS {
        return Err(Error::Config(format!(
            "j needs at least {} values, got {}",
            crate::estimates::MIN_FIT_POINTS,
            j.len()
        )));
    }
    if j.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("j must be strictly increasing".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "riesz"
seed = 7
resolutions = [128, 256, 512]

[scenario]
kind = "torus1d"

[[experiment]]
kind = "riesz_sweep"
p = 1.0
q = 2.0
deltas = [-0.25, 0.25, 1.0]
cutoffs = { mode_fractions = [0.125, 0.25] }

[[experiment]]
kind = "hardy_ratio"
p = 1.0
multiplier = { kind = "one" }

[[experiment]]
kind = "restriction"
multiplier = { kind = "indicator", radius = 0.5 }
cutoff = 0.5
p0 = 1.0
q = inf
radii = [4.0, 8.0]
"#;

    #[test]
    fn parses_and_round_trips() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        c.validate().unwrap();
        assert_eq!(c.output, PathBuf::from("out"));
        assert_eq!(c.experiments.len(), 3);
        let again = ExperimentConfig::parse(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_bad_exponents_before_compute() {
        let bad = SAMPLE.replace("p0 = 1.0", "p0 = 3.0");
        let c = ExperimentConfig::parse(&bad).unwrap();
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("p0"), "{msg}");
    }

    #[test]
    fn rejects_unknown_keys_and_short_sweeps() {
        assert!(ExperimentConfig::parse(&SAMPLE.replace("seed = 7", "seed = 7\ncolour = 1")).is_err());
        let short = SAMPLE.replace("[128, 256, 512]", "[128, 256]");
        assert!(ExperimentConfig::parse(&short).unwrap().validate().is_err());
    }

    #[test]
    fn mode_fraction_cutoffs() {
        let c = CutoffSpec {
            values: vec![1.0],
            mode_fractions: vec![0.25],
        };
        let r = c.resolve(0.5);
        assert_eq!(r[0], 1.0);
        assert!((r[1] - std::f64::consts::PI).abs() < 1e-15);
    }
}
