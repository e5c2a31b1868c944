//! Flat key-value run configuration.
//!
//! A config file is TOML with only top-level keys; unknown keys are
//! rejected. Command-line flags override file values, and every command
//! fills its own defaults for the fields left empty.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Tableau name: `cnh`, `ark436`, `ark548` (empty = command default).
    pub tableau: String,
    /// Filter designations, e.g. `jacobi(3)`, `gs(5,0.9)`, `ilu(0.02)`.
    pub filters: Vec<String>,
    /// `simex`, `imex`, or `both`.
    pub method: String,
    /// Step sizes for the 1D convergence studies.
    pub h: Vec<f64>,
    /// Grid indices `j` for the 2D study (`h_j = 2^-j/5`, `N_j = 5·2^j`).
    pub grid_j: Vec<u32>,
    /// 1D grid intervals / stability-scan grid parameter.
    pub n: usize,
    pub t_end: f64,
    pub seed: u64,
    /// Steps per stability-scan trajectory.
    pub steps: usize,
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub resolution_re: usize,
    pub resolution_im: usize,
    /// Instability guard threshold.
    pub guard: f64,
    /// Worker threads (0 = all cores).
    pub jobs: usize,
    /// Number of smallest completed step sizes used for the slope fit.
    pub slope_points: usize,
    /// Output directory.
    pub out: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tableau: String::new(),
            filters: Vec::new(),
            method: "both".into(),
            h: Vec::new(),
            grid_j: Vec::new(),
            n: 0,
            t_end: 1.0,
            seed: 42,
            steps: 30,
            re_min: -40.0,
            re_max: 8.0,
            im_min: -25.0,
            im_max: 25.0,
            resolution_re: 48,
            resolution_im: 48,
            guard: 1e3,
            jobs: 0,
            slope_points: 3,
            out: "out".into(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reject non-positive physical parameters and malformed selections.
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) {
            bail!("t_end must be positive");
        }
        if !(self.guard > 0.0) {
            bail!("guard must be positive");
        }
        for &h in &self.h {
            if !(h > 0.0) {
                bail!("step sizes must be positive (got {h})");
            }
        }
        if !self.tableau.is_empty() && simex_core::tableau::by_name(&self.tableau).is_none() {
            bail!("unknown tableau `{}`", self.tableau);
        }
        match self.method.as_str() {
            "simex" | "imex" | "both" => {}
            other => bail!("method must be simex, imex or both (got `{other}`)"),
        }
        for f in &self.filters {
            simex_core::filters::FilterSpec::parse(f).map_err(anyhow::Error::msg)?;
        }
        if self.re_max <= self.re_min || self.im_max <= self.im_min {
            bail!("empty scan window");
        }
        if self.steps < 2 {
            bail!("steps must be at least 2");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.tableau = "ark436".into();
        cfg.filters = vec!["jacobi(2)".into(), "gs(5,0.9)".into()];
        cfg.h = vec![0.1, 0.05];
        let text = cfg.to_toml();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("bogus_key = 3\n");
        assert!(err.is_err());
    }

    #[test]
    fn negative_parameters_are_rejected() {
        let mut cfg = RunConfig::default();
        cfg.t_end = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.h = vec![0.1, -0.2];
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.filters = vec!["nonsense(1)".into()];
        assert!(cfg.validate().is_err());
    }
}
