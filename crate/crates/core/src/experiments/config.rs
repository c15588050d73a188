use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{CornerMode, DumbbellOptions, InclusionPair, Shape};
use crate::potentials::HarmonicBackground;
use crate::solver::MIN_EPS;

/// Supported range of nodes per smooth curve.
pub const MIN_NODES: usize = 64;
pub const MAX_NODES: usize = 16384;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub left: Shape,
    pub right: Shape,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamLists {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_list: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Discretization {
    /// Nodes per smooth curve.
    pub nodes: usize,
    /// Dyadic refinement levels at each dumbbell corner.
    pub panel_depth: u32,
    /// Gauss nodes per dumbbell panel.
    pub panel_order: usize,
    pub corner_mode: CornerMode,
}

impl Default for Discretization {
    fn default() -> Self {
        let d = DumbbellOptions::default();
        Self { nodes: 1024, panel_depth: d.depth, panel_order: d.order, corner_mode: d.mode }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    Solve,
    SweepEps,
    SweepRho,
    Decay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub geometry: GeometryConfig,
    pub background: HarmonicBackground,
    #[serde(default)]
    pub params: ParamLists,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<SweepMode>,
    /// Keep the largest parameter value in rate fits.
    #[serde(default)]
    pub fit_include_largest: bool,
}

fn check_ladder(name: &str, list: &[f64]) -> Result<()> {
    if list.is_empty() {
        return invalid(format!("{name} is empty"));
    }
    if let Some(v) = list.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return invalid(format!("{name} entries must be positive, got {v}"));
    }
    if list.windows(2).any(|w| w[1] >= w[0]) {
        return invalid(format!("{name} must be strictly decreasing"));
    }
    Ok(())
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Unit disks touching at the origin in the background `h`.
    pub fn unit_disks(h: HarmonicBackground) -> Self {
        Self {
            geometry: GeometryConfig {
                left: Shape::Disk { center: [-1.0, 0.0].into(), radius: 1.0 },
                right: Shape::Disk { center: [1.0, 0.0].into(), radius: 1.0 },
            },
            background: h,
            params: ParamLists::default(),
            discretization: Discretization::default(),
            output: None,
            mode: None,
            fit_include_largest: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.left.validate()?;
        self.geometry.right.validate()?;
        self.background.validate()?;
        let d = &self.discretization;
        if !(MIN_NODES..=MAX_NODES).contains(&d.nodes) || !d.nodes.is_multiple_of(2) {
            return invalid(format!("nodes must be even and within [{MIN_NODES}, {MAX_NODES}], got {}", d.nodes));
        }
        if d.panel_order < 4 || d.panel_order > 32 {
            return invalid(format!("panel_order must lie in [4, 32], got {}", d.panel_order));
        }
        if d.panel_depth > 40 {
            return invalid(format!("panel_depth must be at most 40, got {}", d.panel_depth));
        }
        if let Some(list) = &self.params.eps_list {
            check_ladder("eps_list", list)?;
            if let Some(e) = list.last().filter(|e| **e < MIN_EPS) {
                return Err(Error::Unsupported(format!("eps = {e:e} is below the supported minimum {MIN_EPS:e}")));
            }
        }
        if let Some(list) = &self.params.rho_list {
            check_ladder("rho_list", list)?;
        }
        Ok(())
    }

    pub fn eps_list(&self) -> Result<&[f64]> {
        self.params.eps_list.as_deref().ok_or_else(|| Error::Configuration("params.eps_list is required".into()))
    }

    pub fn rho_list(&self) -> Result<&[f64]> {
        self.params.rho_list.as_deref().ok_or_else(|| Error::Configuration("params.rho_list is required".into()))
    }

    pub fn pair(&self, eps: f64) -> Result<InclusionPair> {
        InclusionPair::new(self.geometry.left, self.geometry.right, eps, self.discretization.nodes)
    }

    pub fn dumbbell_options(&self) -> DumbbellOptions {
        let d = &self.discretization;
        DumbbellOptions { mode: d.corner_mode, order: d.panel_order, depth: d.panel_depth, ..Default::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "geometry": {
            "left": {"shape": "disk", "center": [-1, 0], "radius": 1},
            "right": {"shape": "disk", "center": [1, 0], "radius": 1}
        },
        "background": {"coeffs": [{"n": 1, "re": 1.0}]},
        "params": {"eps_list": [0.04, 0.01, 0.004, 0.001]},
        "discretization": {"nodes": 512, "panel_depth": 6},
        "output": "out.csv"
    }"#;

    #[test]
    fn parses_documented_layout() {
        let cfg = SweepConfig::from_json(SAMPLE).unwrap();
        assert_eq!(cfg.discretization.nodes, 512);
        assert_eq!(cfg.discretization.panel_depth, 6);
        assert_eq!(cfg.discretization.panel_order, 16);
        assert_eq!(cfg.eps_list().unwrap().len(), 4);
        assert!(cfg.rho_list().is_err());
        assert_eq!(cfg.background, HarmonicBackground::x());
        assert_eq!(cfg.output.as_deref(), Some(Path::new("out.csv")));
    }

    #[test]
    fn rejects_bad_ladders() {
        let bad = SAMPLE.replace("[0.04, 0.01, 0.004, 0.001]", "[0.01, 0.04]");
        assert!(SweepConfig::from_json(&bad).is_err());
        let bad = SAMPLE.replace("[0.04, 0.01, 0.004, 0.001]", "[0.04, -0.01]");
        assert!(SweepConfig::from_json(&bad).is_err());
        let bad = SAMPLE.replace("[0.04, 0.01, 0.004, 0.001]", "[0.04, 0.0005]");
        assert!(matches!(SweepConfig::from_json(&bad), Err(Error::Unsupported(_))));
        let bad = SAMPLE.replace("\"nodes\": 512", "\"nodes\": 513");
        assert!(SweepConfig::from_json(&bad).is_err());
        let bad = SAMPLE.replace("\"eps_list\"", "\"gap_list\"");
        assert!(SweepConfig::from_json(&bad).is_err());
    }
}
