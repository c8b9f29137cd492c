//! JSON run configuration. Unknown keys are rejected everywhere.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::flow::FlowConfig;
use crate::l1::{find_blowup_initial, to_spectrum, RationalState};
use crate::spectrum::{SpectrumPlus, C64};

use super::LabError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    EvolvePde,
    EvolveL1,
    Compare,
    BlowupHunt,
    LaxAudit,
    XyDemo,
    Fit,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::EvolvePde => "evolve-pde",
            ExperimentKind::EvolveL1 => "evolve-l1",
            ExperimentKind::Compare => "compare",
            ExperimentKind::BlowupHunt => "blowup-hunt",
            ExperimentKind::LaxAudit => "lax-audit",
            ExperimentKind::XyDemo => "xy-demo",
            ExperimentKind::Fit => "fit",
        }
    }
}

/// A complex number written as `[re, im]`.
pub type ComplexPair = [f64; 2];

fn to_c64(z: ComplexPair) -> C64 {
    C64::new(z[0], z[1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalSpec {
    pub b: ComplexPair,
    pub c: ComplexPair,
    pub p: ComplexPair,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupRequest {
    pub q: f64,
    pub m: f64,
    pub p_abs: f64,
}

/// Exactly one initial-data source (a single-key JSON object).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    /// `û(0..=N)`; padded with zeros up to the flow cutoff.
    Coefficients(Vec<ComplexPair>),
    Rational(RationalSpec),
    Blowup(BlowupRequest),
}

impl InitialData {
    /// The rational-manifold coordinates, when the source has them.
    pub fn rational_state(&self) -> Result<Option<RationalState>, LabError> {
        match self {
            InitialData::Coefficients(_) => Ok(None),
            InitialData::Rational(r) => RationalState::new(to_c64(r.b), to_c64(r.c), to_c64(r.p))
                .map(Some)
                .map_err(LabError::config),
            InitialData::Blowup(req) => find_blowup_initial(req.q, req.m, req.p_abs)
                .map(Some)
                .map_err(LabError::config),
        }
    }

    pub fn spectrum(&self, cutoff: usize) -> Result<SpectrumPlus, LabError> {
        match self {
            InitialData::Coefficients(v) => {
                if v.len() > cutoff + 1 {
                    return Err(LabError::Config(format!(
                        "{} coefficients exceed cutoff {cutoff}",
                        v.len()
                    )));
                }
                let mut coeffs: Vec<C64> = v.iter().copied().map(to_c64).collect();
                coeffs.resize(cutoff + 1, C64::new(0.0, 0.0));
                SpectrumPlus::new(coeffs).map_err(LabError::config)
            }
            _ => {
                let s = self.rational_state()?.expect("rational source");
                to_spectrum(&s, cutoff).map_err(LabError::config)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default = "OutputPaths::default_csv")]
    pub csv: String,
    #[serde(default = "OutputPaths::default_summary")]
    pub summary: String,
}

impl OutputPaths {
    fn default_csv() -> String {
        "trajectory.csv".into()
    }
    fn default_summary() -> String {
        "summary.json".into()
    }
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self { csv: Self::default_csv(), summary: Self::default_summary() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareMode {
    /// Galerkin PDE against the reduced L(1) system from the same state.
    #[default]
    PdeVsL1,
    /// The PDE at `dt` against the PDE at `dt/2`.
    Refinement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareOptions {
    #[serde(default)]
    pub mode: CompareMode,
    /// PDE/ODE deviations only count while `|p(t)|` stays at or below this.
    #[serde(default = "CompareOptions::default_p_limit")]
    pub p_limit: f64,
    /// Verdict threshold for the L² state deviation.
    #[serde(default = "CompareOptions::default_tolerance")]
    pub l2_tolerance: f64,
    /// Per-column thresholds for the monitored columns (default 1e-6).
    #[serde(default)]
    pub column_tolerances: BTreeMap<String, f64>,
}

impl CompareOptions {
    fn default_p_limit() -> f64 {
        0.9
    }
    fn default_tolerance() -> f64 {
        1e-6
    }
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            mode: CompareMode::default(),
            p_limit: Self::default_p_limit(),
            l2_tolerance: Self::default_tolerance(),
            column_tolerances: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthOptions {
    /// Sobolev orders whose `‖u‖²_{H^s}` growth is fitted.
    #[serde(default = "GrowthOptions::default_orders")]
    pub orders: Vec<f64>,
}

impl GrowthOptions {
    fn default_orders() -> Vec<f64> {
        vec![1.0]
    }
}

impl Default for GrowthOptions {
    fn default() -> Self {
        Self { orders: Self::default_orders() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaxOptions {
    /// Galerkin cutoff `N` of the audited state.
    pub cutoff: usize,
    /// Block size of the audited `K_u` section.
    pub size: usize,
    pub dts: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XyOptions {
    pub x0: f64,
    pub y0: f64,
    pub q: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitOptions {
    /// CSV file with a `t` column.
    pub input: String,
    pub column: String,
    #[serde(default)]
    pub window: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// Optional; when present it must match the subcommand.
    #[serde(default)]
    pub kind: Option<ExperimentKind>,
    #[serde(default)]
    pub initial: Option<InitialData>,
    #[serde(default)]
    pub flow: Option<FlowConfig>,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub compare: Option<CompareOptions>,
    #[serde(default)]
    pub growth: Option<GrowthOptions>,
    #[serde(default)]
    pub lax: Option<LaxOptions>,
    #[serde(default)]
    pub xy: Option<XyOptions>,
    #[serde(default)]
    pub fit: Option<FitOptions>,
}

impl RunSpec {
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        serde_json::from_str(text).map_err(|e| LabError::Config(format!("bad config: {e}")))
    }

    /// Reads a config file; a relative `fit.input` is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut spec = Self::from_json(&text)?;
        if let (Some(fit), Some(dir)) = (spec.fit.as_mut(), path.parent()) {
            if Path::new(&fit.input).is_relative() {
                fit.input = dir.join(&fit.input).to_string_lossy().into_owned();
            }
        }
        Ok(spec)
    }

    /// Checks that the sections required by `kind` are present and that no
    /// section for another experiment sneaks in.
    pub fn validate(&self, kind: ExperimentKind) -> Result<(), LabError> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(LabError::Config(format!(
                    "config is for `{}` but `{}` was requested",
                    k.name(),
                    kind.name()
                )));
            }
        }
        use ExperimentKind::*;
        let needs_initial = matches!(kind, EvolvePde | EvolveL1 | Compare | BlowupHunt | LaxAudit);
        let needs_flow = matches!(kind, EvolvePde | EvolveL1 | Compare | BlowupHunt);
        let present = [
            ("initial", self.initial.is_some(), needs_initial, needs_initial),
            ("flow", self.flow.is_some(), needs_flow, needs_flow),
            ("compare", self.compare.is_some(), false, kind == Compare),
            ("growth", self.growth.is_some(), false, matches!(kind, EvolveL1 | BlowupHunt)),
            ("lax", self.lax.is_some(), kind == LaxAudit, kind == LaxAudit),
            ("xy", self.xy.is_some(), kind == XyDemo, kind == XyDemo),
            ("fit", self.fit.is_some(), kind == Fit, kind == Fit),
        ];
        for (name, is_present, required, allowed) in present {
            if required && !is_present {
                return Err(LabError::Config(format!("`{}` needs a `{name}` section", kind.name())));
            }
            if is_present && !allowed {
                return Err(LabError::Config(format!("`{name}` is not used by `{}`", kind.name())));
            }
        }
        if let Some(flow) = &self.flow {
            flow.validate().map_err(LabError::config)?;
        }
        let needs_rational = match kind {
            EvolveL1 | BlowupHunt => true,
            Compare => self.compare.as_ref().is_none_or(|c| c.mode == CompareMode::PdeVsL1),
            _ => false,
        };
        if needs_rational && matches!(self.initial, Some(InitialData::Coefficients(_))) {
            return Err(LabError::Config(format!("`{}` needs rational or blowup initial data", kind.name())));
        }
        if kind == BlowupHunt && !matches!(self.initial, Some(InitialData::Blowup(_))) {
            return Err(LabError::Config("`blowup-hunt` needs a `blowup` initial-data request".into()));
        }
        Ok(())
    }
}
