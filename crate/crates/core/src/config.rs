//! Experiment configuration: a single TOML document, schema-validated with
//! unknown fields rejected, plus dotted-path overrides from the command line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{RegimeHints, SelectionRegime};
use crate::lowerbound::FanoKnobs;
use crate::measure::{CoordinateLaw, InputMeasure};
use crate::noise::{NoiseKind, NoiseModel, UpsilonSpectrum};
use crate::operators::{ScalarFunctional, TestOperator};
use crate::rates::RateRegime;
use crate::risk::DesignChoice;
use crate::spectrum::SpectrumProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    RiskCurve,
    LowerBound,
    Rates,
    Verify,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::RiskCurve => "risk-curve",
            ExperimentKind::LowerBound => "lower-bound",
            ExperimentKind::Rates => "rates",
            ExperimentKind::Verify => "verify",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "risk-curve" => Ok(ExperimentKind::RiskCurve),
            "lower-bound" => Ok(ExperimentKind::LowerBound),
            "rates" => Ok(ExperimentKind::Rates),
            "verify" => Ok(ExperimentKind::Verify),
            other => Err(Error::Config(format!(
                "unknown experiment kind '{other}' (expected risk-curve, lower-bound, rates, or verify)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SpectrumConfig {
    pub kind: String,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub values: Option<Vec<f64>>,
}

impl SpectrumConfig {
    pub fn build(&self) -> Result<SpectrumProfile> {
        let need = |field: &str, v: Option<f64>| {
            v.ok_or_else(|| {
                Error::Config(format!("spectrum.{field} is required for kind '{}'", self.kind))
            })
        };
        match self.kind.as_str() {
            "algebraic" => SpectrumProfile::algebraic(need("alpha", self.alpha)?),
            "exponential" => {
                SpectrumProfile::exponential(need("alpha", self.alpha)?, need("beta", self.beta)?)
            }
            "double-exponential" => {
                SpectrumProfile::double_exponential(need("alpha", self.alpha)?)
            }
            "explicit" => SpectrumProfile::explicit(self.values.clone().ok_or_else(|| {
                Error::Config("spectrum.values is required for kind 'explicit'".into())
            })?),
            other => Err(Error::Config(format!("unknown spectrum kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub law: String,
    pub sim_dim: Option<usize>,
}

impl MeasureConfig {
    pub fn law(&self) -> Result<CoordinateLaw> {
        match self.law.as_str() {
            "uniform" => Ok(CoordinateLaw::UniformUnitVariance),
            "gaussian" => Ok(CoordinateLaw::StandardGaussian),
            other => Err(Error::Config(format!(
                "unknown coordinate law '{other}' (expected uniform or gaussian)"
            ))),
        }
    }

    pub fn build(&self, spectrum: &SpectrumProfile) -> Result<InputMeasure> {
        let law = self.law()?;
        match self.sim_dim {
            Some(dim) => InputMeasure::new(spectrum.clone(), law, dim),
            None => InputMeasure::with_default_sim_dim(spectrum.clone(), law),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub kind: String,
    pub in_dim: Option<usize>,
    pub out_dim: Option<usize>,
    pub coeff_decay: Option<f64>,
    pub rows: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub family: String,
    pub b: Option<f64>,
    pub l: Option<f64>,
    pub d: Option<usize>,
    pub direction: Option<usize>,
    pub output_dim: Option<usize>,
    pub weights: Option<WeightsConfig>,
}

impl OperatorConfig {
    pub fn build(&self, spectrum: &SpectrumProfile, sim_dim: usize) -> Result<TestOperator> {
        match self.family.as_str() {
            "zero" => Ok(TestOperator::zero(self.output_dim.unwrap_or(1))),
            "tent-product" => {
                let d = self.d.unwrap_or(1);
                let f = ScalarFunctional::tent(d, spectrum.clone())?;
                TestOperator::lift(f, self.direction.unwrap_or(1))
            }
            "clipped-linear" => {
                let weights = self
                    .weights
                    .as_ref()
                    .ok_or_else(|| Error::Config("clipped-linear needs operator.weights".into()))?;
                let rows = build_weight_rows(weights, spectrum, sim_dim)?;
                let l = self.l.unwrap_or_else(|| frobenius(&rows) * (1.0 + 1e-9));
                let b = self
                    .b
                    .ok_or_else(|| Error::Config("clipped-linear needs operator.b".into()))?;
                TestOperator::clipped_linear(rows, b, l)
            }
            other => Err(Error::Config(format!(
                "unknown operator family '{other}' (expected zero, tent-product, or clipped-linear)"
            ))),
        }
    }
}

fn frobenius(rows: &[Vec<f64>]) -> f64 {
    rows.iter()
        .flat_map(|r| r.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

fn build_weight_rows(
    cfg: &WeightsConfig,
    spectrum: &SpectrumProfile,
    sim_dim: usize,
) -> Result<Vec<Vec<f64>>> {
    match cfg.kind.as_str() {
        // one output row proportional to sqrt(lambda), normalized to unit norm
        "spectral-row" => {
            let in_dim = cfg.in_dim.unwrap_or(sim_dim).min(sim_dim);
            let mut row: Vec<f64> = (1..=in_dim)
                .map(|j| spectrum.eigenvalue(j).map(f64::sqrt))
                .collect::<Result<Vec<_>>>()?;
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in &mut row {
                *v /= norm;
            }
            Ok(vec![row])
        }
        // rank-one map x -> u v^T x with u_j = j^(-q) and v the unit
        // spectral row; output coefficients then decay like j^(-q)
        "rank-one" => {
            let in_dim = cfg.in_dim.unwrap_or(sim_dim).min(sim_dim);
            let out_dim = cfg
                .out_dim
                .ok_or_else(|| Error::Config("weights.out_dim is required for rank-one".into()))?;
            let q = cfg.coeff_decay.unwrap_or(1.0);
            let mut v: Vec<f64> = (1..=in_dim)
                .map(|j| spectrum.eigenvalue(j).map(f64::sqrt))
                .collect::<Result<Vec<_>>>()?;
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in &mut v {
                *x /= norm;
            }
            Ok((1..=out_dim)
                .map(|j| {
                    let u = (j as f64).powf(-q);
                    v.iter().map(|x| u * x).collect()
                })
                .collect())
        }
        "explicit" => cfg
            .rows
            .clone()
            .ok_or_else(|| Error::Config("weights.rows is required for explicit".into())),
        other => Err(Error::Config(format!("unknown weights kind '{other}'"))),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: String,
    pub sigma: f64,
    pub coeff_dim: usize,
    /// "geometric" or a spectrum table normalized to unit trace.
    pub upsilon: Option<String>,
    pub upsilon_spectrum: Option<SpectrumConfig>,
}

impl NoiseConfig {
    pub fn kind(&self) -> Result<NoiseKind> {
        match self.kind.as_str() {
            "hilbert" => Ok(NoiseKind::Hilbert),
            "white" => Ok(NoiseKind::White),
            other => Err(Error::Config(format!(
                "unknown noise kind '{other}' (expected hilbert or white)"
            ))),
        }
    }

    pub fn build(&self) -> Result<NoiseModel> {
        match self.kind()? {
            NoiseKind::Hilbert => {
                let upsilon = match (self.upsilon.as_deref(), &self.upsilon_spectrum) {
                    (None, None) | (Some("geometric"), None) => UpsilonSpectrum::Geometric,
                    (Some("spectrum"), Some(cfg)) => UpsilonSpectrum::Profile(cfg.build()?),
                    _ => {
                        return Err(Error::Config(
                            "noise.upsilon must be 'geometric' or 'spectrum' (with noise.upsilon_spectrum)"
                                .into(),
                        ))
                    }
                };
                NoiseModel::hilbert(self.sigma, self.coeff_dim, upsilon)
            }
            NoiseKind::White => NoiseModel::white(self.sigma, self.coeff_dim),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub kind: String,
}

impl DesignConfig {
    pub fn choice(&self) -> Result<DesignChoice> {
        match self.kind.as_str() {
            "fixed" => Ok(DesignChoice::FixedStratified),
            "random" => Ok(DesignChoice::RandomBox),
            other => Err(Error::Config(format!(
                "unknown design kind '{other}' (expected fixed or random)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    pub regime: Option<String>,
    pub d: Option<usize>,
    pub r: Option<usize>,
    pub r_box: Option<f64>,
    pub n_per_axis: Option<Vec<usize>>,
    pub c_prime: Option<f64>,
    pub t: Option<f64>,
}

impl SelectionConfig {
    pub fn hints(&self) -> Result<RegimeHints> {
        let regime = match self.regime.as_deref() {
            None | Some("auto") => None,
            Some("finite-dim") => Some(SelectionRegime::FiniteDim),
            Some("exponential") => Some(SelectionRegime::Exponential),
            Some("algebraic") => Some(SelectionRegime::Algebraic),
            Some("scan") => Some(SelectionRegime::Scan),
            Some(other) => {
                return Err(Error::Config(format!(
                    "unknown selection regime '{other}'"
                )))
            }
        };
        Ok(RegimeHints {
            regime,
            d: self.d,
            r: self.r,
            r_box: self.r_box,
            n_per_axis: self.n_per_axis.clone(),
            c_prime: self.c_prime.unwrap_or(1.0),
            t: self.t.unwrap_or(1.0),
            cells_at_most_m: false,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskCurveConfig {
    pub m_grid: Vec<u64>,
    pub trials: usize,
    pub n_mc: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerBoundConfig {
    pub m_grid: Vec<u64>,
    pub b: f64,
    pub l: f64,
    pub d: Option<usize>,
    pub d_max: Option<usize>,
    pub h: Option<f64>,
    pub c0: Option<f64>,
    pub budget_c: Option<f64>,
    pub prop_const: Option<f64>,
    pub export_instances: Option<bool>,
}

impl LowerBoundConfig {
    pub fn knobs(&self) -> FanoKnobs {
        FanoKnobs {
            c0_override: self.c0,
            budget_c_override: self.budget_c,
            prop_const: self.prop_const.unwrap_or(1.0),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub curve: RateCurveConfig,
    pub k_min: f64,
    pub k_max: f64,
    pub points: usize,
    pub constant: Option<f64>,
    pub b: Option<f64>,
    pub l: Option<f64>,
    pub d_max: Option<usize>,
    pub rank: Option<usize>,
    pub t: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RateCurveConfig {
    ExpLogMinimax { beta: f64 },
    AlgUpper,
    AlgLower { alpha: f64 },
    DoubleExp,
    FiniteDim { d: usize },
    GenericUpper,
    GenericLower,
}

impl RateCurveConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RateCurveConfig::ExpLogMinimax { .. } => "exp-log-minimax",
            RateCurveConfig::AlgUpper => "alg-upper",
            RateCurveConfig::AlgLower { .. } => "alg-lower",
            RateCurveConfig::DoubleExp => "double-exp",
            RateCurveConfig::FiniteDim { .. } => "finite-dim",
            RateCurveConfig::GenericUpper => "generic-upper",
            RateCurveConfig::GenericLower => "generic-lower",
        }
    }

    pub fn asymptotic_regime(&self) -> Option<RateRegime> {
        match self {
            RateCurveConfig::ExpLogMinimax { beta } => {
                Some(RateRegime::ExpLogMinimax { beta: *beta })
            }
            RateCurveConfig::AlgUpper => Some(RateRegime::AlgUpper),
            RateCurveConfig::AlgLower { alpha } => Some(RateRegime::AlgLower { alpha: *alpha }),
            RateCurveConfig::DoubleExp => Some(RateRegime::DoubleExp),
            RateCurveConfig::FiniteDim { d } => Some(RateRegime::FiniteDim { d: *d }),
            _ => None,
        }
    }
}

/// The whole experiment document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub p: Option<f64>,
    pub out_dir: Option<String>,
    pub spectrum: Option<SpectrumConfig>,
    pub measure: Option<MeasureConfig>,
    pub operator: Option<OperatorConfig>,
    pub noise: Option<NoiseConfig>,
    pub design: Option<DesignConfig>,
    pub selection: Option<SelectionConfig>,
    pub risk_curve: Option<RiskCurveConfig>,
    pub lower_bound: Option<LowerBoundConfig>,
    pub rates: Option<RatesConfig>,
}

impl ExperimentConfig {
    /// Parses and validates a TOML document after applying overrides.
    pub fn from_toml(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut value: toml::Value = toml::from_str(text)
            .map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        for (path, raw) in overrides {
            apply_override(&mut value, path, raw)?;
        }
        let config: ExperimentConfig = value
            .try_into()
            .map_err(|e| Error::Config(format!("config validation error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let want = |name: &str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "experiment kind '{}' requires the [{name}] section",
                    self.kind.name()
                )))
            }
        };
        match self.kind {
            ExperimentKind::RiskCurve => {
                want("spectrum", self.spectrum.is_some())?;
                want("measure", self.measure.is_some())?;
                want("operator", self.operator.is_some())?;
                want("noise", self.noise.is_some())?;
                want("design", self.design.is_some())?;
                want("risk_curve", self.risk_curve.is_some())?;
            }
            ExperimentKind::LowerBound => {
                want("spectrum", self.spectrum.is_some())?;
                want("measure", self.measure.is_some())?;
                want("noise", self.noise.is_some())?;
                want("lower_bound", self.lower_bound.is_some())?;
            }
            ExperimentKind::Rates => {
                want("spectrum", self.spectrum.is_some())?;
                want("rates", self.rates.is_some())?;
            }
            ExperimentKind::Verify => {}
        }
        if let Some(p) = self.p {
            if !(p >= 1.0) || !p.is_finite() {
                return Err(Error::Config(format!("p must lie in [1, infinity), got {p}")));
            }
        }
        Ok(())
    }

    pub fn p(&self) -> f64 {
        self.p.unwrap_or(2.0)
    }

    /// Canonical serialization used for the manifest hash.
    pub fn canonical_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Internal(format!("serialize config: {e}")))
    }
}

/// Sets `path = value` inside a parsed TOML document. The value text is
/// parsed as a TOML literal and falls back to a string.
fn apply_override(root: &mut toml::Value, path: &str, raw: &str) -> Result<()> {
    let parsed: toml::Value = match toml::from_str::<toml::Table>(&format!("x = {raw}")) {
        Ok(mut table) => table.remove("x").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut cursor = root;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(Error::Config(format!("bad override path '{path}'")));
    }
    for segment in &segments[..segments.len() - 1] {
        let table = cursor
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override path '{path}' crosses a non-table")))?;
        cursor = table
            .entry(segment.to_string())
            .or_insert(toml::Value::Table(toml::Table::new()));
    }
    let table = cursor
        .as_table_mut()
        .ok_or_else(|| Error::Config(format!("override path '{path}' crosses a non-table")))?;
    table.insert(segments[segments.len() - 1].to_string(), parsed);
    Ok(())
}
