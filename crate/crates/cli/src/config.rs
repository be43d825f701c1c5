//! Run configuration files.
//!
//! The format is TOML: `[section]` headers, `key = value` lines and `#`
//! comments. Every section is optional at parse time; each subcommand checks
//! for the ones it needs. Unknown keys are rejected.
//!
//! ```toml
//! [system]            # alpha, e_max, sigma2, b_p
//! [[slots]]           # h_pp, h_ps, h_ss, h_sp, e_p, e_s; one table per slot
//! [channel]           # exactly one of: regime, variances, gains
//! [energy]            # e_p + e_s vectors, or uniform = [lo, hi]
//! [sweep]             # axis, grid, trials, seed, cooperation, series_*
//! [solver]            # subgradient settings, see SubgradientConfig
//! [oracle]            # instances, points_per_axis, seed, n_slots, ranges
//! [output]            # csv, log
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ehcrn_core::experiments::{Cooperation, EnergySpec, GainSpec, Regime, SweepAxis};
use ehcrn_core::{ChannelModel, SlotData, SubgradientConfig, SystemParams, Trace};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub alpha: f64,
    #[serde(default = "default_e_max")]
    pub e_max: f64,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    pub b_p: f64,
}

fn default_e_max() -> f64 {
    6.0
}

fn default_sigma2() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<Regime>,
    /// `[pp, ps, ss, sp]` exponential means.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variances: Option<[f64; 4]>,
    /// `[pp, ps, ss, sp]` used in every slot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<[f64; 4]>,
}

impl ChannelSection {
    pub fn gain_spec(&self) -> Result<GainSpec> {
        match (self.regime, self.variances, self.gains) {
            (Some(r), None, None) => Ok(GainSpec::Rayleigh(ChannelModel::preset(r))),
            (None, Some(v), None) => Ok(GainSpec::Rayleigh(ChannelModel::new(v[0], v[1], v[2], v[3])?)),
            (None, None, Some(g)) => Ok(GainSpec::Fixed { h_pp: g[0], h_ps: g[1], h_ss: g[2], h_sp: g[3] }),
            _ => bail!("[channel] needs exactly one of regime, variances, gains"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<[f64; 2]>,
}

impl EnergySection {
    pub fn spec(&self) -> Result<EnergySpec> {
        match (&self.e_p, &self.e_s, self.uniform) {
            (Some(e_p), Some(e_s), None) => Ok(EnergySpec::Fixed { e_p: e_p.clone(), e_s: e_s.clone() }),
            (None, None, Some([lo, hi])) => Ok(EnergySpec::Uniform { lo, hi }),
            _ => bail!("[energy] needs either both e_p and e_s, or uniform"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_cooperation")]
    pub cooperation: Cooperation,
    /// Horizon length; defaults to the length of the `[energy]` vectors, or 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_slots: Option<usize>,
    /// Repeat the sweep once per value of this second parameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_axis: Option<SweepAxis>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<f64>,
}

fn default_cooperation() -> Cooperation {
    Cooperation::Both
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub instances: usize,
    pub points_per_axis: usize,
    pub seed: u64,
    #[serde(default = "default_one")]
    pub n_slots: usize,
    /// Draw `b_p` per instance from this range instead of using `[system]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_p_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_range: Option<[f64; 2]>,
    /// Smallest accepted subgradient/oracle ratio for two-slot checks.
    #[serde(default = "default_min_ratio")]
    pub min_ratio: f64,
}

fn default_one() -> usize {
    1
}

fn default_min_ratio() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// Iteration log of `solve-multi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slots: Vec<SlotData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub solver: SubgradientConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn system(&self) -> Result<&SystemSection> {
        self.system.as_ref().context("missing [system] section")
    }

    /// System parameters for an `n_slots` horizon.
    pub fn params(&self, n_slots: usize) -> Result<SystemParams> {
        let s = self.system()?;
        Ok(SystemParams::new(s.alpha, s.e_max, s.sigma2, s.b_p, n_slots)?)
    }

    pub fn trace(&self) -> Result<Trace> {
        if self.slots.is_empty() {
            bail!("missing [[slots]] tables");
        }
        let trace = Trace::new(self.slots.clone())?;
        for s in &trace.slots {
            s.validate()?;
        }
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[system]
alpha = 0.8
b_p = 2.0

[channel]
regime = "weak_pt_sr"

[energy]
e_p = [2.0, 3.0, 2.0, 2.0]
e_s = [4.0, 5.0, 5.0, 3.0]

[sweep]
axis = "b_p"
grid = [0.5, 1.0]
trials = 3
seed = 11

[solver]
max_iters = 1000
"#;

    #[test]
    fn round_trip_is_stable() {
        let a = RunConfig::parse(SAMPLE).unwrap();
        let b = RunConfig::parse(&a.to_toml().unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.solver.max_iters, 1000);
        assert_eq!(a.system().unwrap().e_max, 6.0);
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let err = RunConfig::parse("[system]\nalpha = 1.0\nb_p = 1.0\nbogus = 3\n").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("bogus") && msg.contains("line 4"), "{msg}");
    }

    #[test]
    fn channel_needs_one_source() {
        let both = ChannelSection { regime: Some(Regime::Equal), gains: Some([1.0; 4]), ..Default::default() };
        assert!(both.gain_spec().is_err());
        assert!(ChannelSection::default().gain_spec().is_err());
    }
}
