//! Monte Carlo evaluation of the L^p Bochner risk and end-to-end
//! risk-versus-sample-size curves.
//!
//! Risk is estimated by fresh-sample Monte Carlo (tensor quadrature is
//! hopeless in tens of coordinates), so standard errors are first-class
//! outputs and all downstream tolerances are stated in combined-sigma units.
//! The expectation over noise and design is approximated by the trial
//! average; the trial count and the per-trial Monte Carlo budget are
//! independent knobs.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{self, HistogramEstimator, ParameterSelection, RegimeHints, SelectionInputs};
use crate::measure::{make_fixed_design, make_random_design, InputMeasure};
use crate::noise::NoiseModel;
use crate::operators::TestOperator;
use crate::rng::{derive_seed, stream};

/// Anything that maps a coordinate vector to output coefficients.
pub trait Predictor: Sync {
    fn predict_coeffs(&self, x: &[f64]) -> Vec<f64>;
}

impl Predictor for TestOperator {
    fn predict_coeffs(&self, x: &[f64]) -> Vec<f64> {
        self.eval(x)
    }
}

impl Predictor for HistogramEstimator {
    fn predict_coeffs(&self, x: &[f64]) -> Vec<f64> {
        self.predict(x)
    }
}

/// Predicts the zero vector; the baseline in norm-consistency checks.
pub struct ZeroPredictor(pub usize);

impl Predictor for ZeroPredictor {
    fn predict_coeffs(&self, _x: &[f64]) -> Vec<f64> {
        vec![0.0; self.0]
    }
}

/// A Monte Carlo estimate of `(E ||F - G||^p)^(1/p)` with a delta-method
/// standard error, plus the input-tail energy the simulation neglected.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub value: f64,
    pub mc_std_err: f64,
    pub n_mc: usize,
    pub p: f64,
    pub tail_energy_neglected: f64,
}

fn coeff_distance_sq(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let mut acc = 0.0;
    for j in 0..len {
        let d = a.get(j).copied().unwrap_or(0.0) - b.get(j).copied().unwrap_or(0.0);
        acc += d * d;
    }
    acc
}

/// Draws `n_mc` fresh inputs and averages `||truth(X) - approx(X)||^p` over
/// the materialized coefficients.
pub fn empirical_risk(
    truth: &dyn Predictor,
    approx: &dyn Predictor,
    p: f64,
    measure: &InputMeasure,
    n_mc: usize,
    rng: &mut ChaCha8Rng,
) -> Result<RiskEstimate> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "p must lie in [1, infinity), got {p}"
        )));
    }
    if n_mc < 2 {
        return Err(Error::InvalidParameter("n_mc must be >= 2".into()));
    }
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for i in 0..n_mc {
        let x = measure.sample_one(rng);
        let t = truth.predict_coeffs(&x);
        let a = approx.predict_coeffs(&x);
        let e = coeff_distance_sq(&t, &a).powf(0.5 * p);
        let delta = e - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (e - mean);
    }
    let se_mean = (m2 / (n_mc as f64 - 1.0)).sqrt() / (n_mc as f64).sqrt();
    let (value, mc_std_err) = if mean > 0.0 {
        let v = mean.powf(1.0 / p);
        (v, v / (p * mean) * se_mean)
    } else {
        (0.0, 0.0)
    };
    Ok(RiskEstimate {
        value,
        mc_std_err,
        n_mc,
        p,
        tail_energy_neglected: measure.tail_energy_neglected(),
    })
}

/// Design scheme for a risk experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignChoice {
    FixedStratified,
    RandomBox,
}

/// Assembled components of a risk-versus-m experiment.
pub struct RiskExperiment {
    pub measure: InputMeasure,
    pub operator: TestOperator,
    pub noise: NoiseModel,
    pub design: DesignChoice,
    pub m_grid: Vec<u64>,
    pub trials: usize,
    pub n_mc: usize,
    pub p: f64,
    pub hints: RegimeHints,
}

/// One grid row of a risk curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskCurveRow {
    pub m: u64,
    pub m_effective: u64,
    pub trials: usize,
    pub mean_risk: Option<f64>,
    pub std_err: Option<f64>,
    pub selection: Option<ParameterSelection>,
    pub infeasible: Option<String>,
    pub tail_energy_neglected: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskCurve {
    pub rows: Vec<RiskCurveRow>,
    pub sigma: f64,
    pub p: f64,
    pub trials: usize,
    pub n_mc: usize,
    pub master_seed: u64,
}

const STAGE_DESIGN: u64 = 0;
const STAGE_OBSERVE: u64 = 1;
const STAGE_RISK: u64 = 2;

/// Runs the full pipeline per grid point: select parameters, build the
/// design, observe, fit, and measure risk; averages over independently
/// seeded trials. Selection infeasibility marks the row instead of aborting
/// the grid. Deterministic given the master seed; trials run in parallel and
/// are reduced in trial order.
pub fn risk_curve(exp: &RiskExperiment, master_seed: u64) -> Result<RiskCurve> {
    if exp.trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(exp.m_grid.len());
    for (mi, &m) in exp.m_grid.iter().enumerate() {
        let row_seed = derive_seed(master_seed, &[mi as u64]);
        let mut hints = exp.hints.clone();
        if exp.design == DesignChoice::FixedStratified {
            hints.cells_at_most_m = true;
        }
        let selection = match estimator::select_parameters(&SelectionInputs {
            m,
            sigma: exp.noise.sigma(),
            spectrum: exp.measure.spectrum(),
            b_bound: exp.operator.b_bound(),
            lipschitz: exp.operator.lipschitz(),
            p: exp.p,
            noise: exp.noise.kind(),
            hints,
        }) {
            Ok(sel) => sel,
            Err(err) => {
                rows.push(RiskCurveRow {
                    m,
                    m_effective: 0,
                    trials: 0,
                    mean_risk: None,
                    std_err: None,
                    selection: None,
                    infeasible: Some(err.to_string()),
                    tail_energy_neglected: exp.measure.tail_energy_neglected(),
                    seed: row_seed,
                });
                continue;
            }
        };
        match run_row(exp, master_seed, mi, m, &selection) {
            Ok((m_effective, mean, se)) => rows.push(RiskCurveRow {
                m,
                m_effective,
                trials: exp.trials,
                mean_risk: Some(mean),
                std_err: Some(se),
                selection: Some(selection),
                infeasible: None,
                tail_energy_neglected: exp.measure.tail_energy_neglected(),
                seed: row_seed,
            }),
            Err(err) => rows.push(RiskCurveRow {
                m,
                m_effective: 0,
                trials: 0,
                mean_risk: None,
                std_err: None,
                selection: Some(selection),
                infeasible: Some(err.to_string()),
                tail_energy_neglected: exp.measure.tail_energy_neglected(),
                seed: row_seed,
            }),
        }
    }
    Ok(RiskCurve {
        rows,
        sigma: exp.noise.sigma(),
        p: exp.p,
        trials: exp.trials,
        n_mc: exp.n_mc,
        master_seed,
    })
}

fn run_row(
    exp: &RiskExperiment,
    master_seed: u64,
    mi: usize,
    m: u64,
    selection: &ParameterSelection,
) -> Result<(u64, f64, f64)> {
    let partition = selection.partition(exp.measure.spectrum())?;
    // Fixed designs are deterministic; build once per row.
    let fixed_design = match exp.design {
        DesignChoice::FixedStratified => Some(make_fixed_design(&partition, m)?),
        DesignChoice::RandomBox => None,
    };
    let risks: Vec<Result<(u64, f64)>> = (0..exp.trials)
        .into_par_iter()
        .map(|trial| {
            let tags = |stage: u64| [mi as u64, trial as u64, stage];
            let design = match &fixed_design {
                Some(d) => d.clone(),
                None => make_random_design(
                    selection.r_box,
                    selection.d,
                    exp.measure.spectrum(),
                    m,
                    &mut stream(master_seed, &tags(STAGE_DESIGN)),
                )?,
            };
            let dataset = exp.noise.observe(
                &exp.operator,
                &design,
                &mut stream(master_seed, &tags(STAGE_OBSERVE)),
            )?;
            let est = estimator::fit(&dataset, partition.clone(), selection.truncation())?;
            let risk = empirical_risk(
                &exp.operator,
                &est,
                exp.p,
                &exp.measure,
                exp.n_mc,
                &mut stream(master_seed, &tags(STAGE_RISK)),
            )?;
            Ok((design.m_effective, risk.value))
        })
        .collect();
    let mut values = Vec::with_capacity(exp.trials);
    let mut m_effective = m;
    for r in risks {
        let (me, v) = r?;
        m_effective = me;
        values.push(v);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let se = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / (values.len() - 1) as f64;
        (var / values.len() as f64).sqrt()
    } else {
        0.0
    };
    Ok((m_effective, mean, se))
}

/// Regressor choices for rate-shape diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Abscissa {
    /// ln m
    LogM,
    /// (ln k)^gamma with k = m / sigma^2
    LogKPow(f64),
    /// ln k / ln ln k
    LogKOverLogLogK,
}

impl Abscissa {
    fn value(&self, m: f64, sigma: f64) -> Option<f64> {
        let k = m / (sigma * sigma);
        match self {
            Abscissa::LogM => Some(m.ln()),
            Abscissa::LogKPow(gamma) => {
                let lk = k.ln();
                (lk > 0.0).then(|| lk.powf(*gamma))
            }
            Abscissa::LogKOverLogLogK => {
                let lk = k.ln();
                (lk > 1.0 && lk.ln() > 0.0).then(|| lk / lk.ln())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares of `-ln(mean risk)` against the chosen abscissa
/// over the finite rows of a curve. Permutation invariant by construction.
pub fn fit_rate(curve: &RiskCurve, abscissa: Abscissa) -> Result<RateFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in &curve.rows {
        let Some(risk) = row.mean_risk else { continue };
        if !(risk > 0.0) || !risk.is_finite() {
            continue;
        }
        let Some(x) = abscissa.value(row.m as f64, curve.sigma) else {
            continue;
        };
        xs.push(x);
        ys.push(-risk.ln());
    }
    ols(&xs, &ys)
}

/// OLS on explicit points; shared by the theoretical-curve diagnostics.
/// Points are sorted before accumulation so the fit is bit-identical under
/// row permutations.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    let n = xs.len();
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "rate fit needs at least 4 finite rows, got {n}"
        )));
    }
    let mut points: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite regression points"));
    let nf = n as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / nf;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in &points {
        sxx += (x - mean_x).powi(2);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y).powi(2);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "rate fit abscissa is constant across rows".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::SelectionRegime;
    use crate::measure::CoordinateLaw;
    use crate::noise::UpsilonSpectrum;
    use crate::operators::ScalarFunctional;
    use crate::spectrum::SpectrumProfile;

    fn flat_measure(dim: usize) -> InputMeasure {
        InputMeasure::new(
            SpectrumProfile::explicit(vec![1.0; dim]).unwrap(),
            CoordinateLaw::UniformUnitVariance,
            dim,
        )
        .unwrap()
    }

    #[test]
    fn identical_predictors_have_zero_risk() {
        let measure = flat_measure(2);
        let op = TestOperator::lift(
            ScalarFunctional::tent(2, measure.spectrum().clone()).unwrap(),
            1,
        )
        .unwrap();
        let est = empirical_risk(&op, &op, 2.0, &measure, 100, &mut stream(1, &[])).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.mc_std_err, 0.0);
    }

    struct ConstPredictor(Vec<f64>);

    impl Predictor for ConstPredictor {
        fn predict_coeffs(&self, _x: &[f64]) -> Vec<f64> {
            self.0.clone()
        }
    }

    #[test]
    fn constant_signal_risk_is_exact() {
        // truth c * e_1 vs zero predictor: risk = |c| exactly, zero variance
        let measure = flat_measure(1);
        let c = -2.5f64;
        let truth = ConstPredictor(vec![c]);
        let zero = ZeroPredictor(1);
        for p in [1.0f64, 2.0, 3.5] {
            let est = empirical_risk(&truth, &zero, p, &measure, 100, &mut stream(2, &[])).unwrap();
            assert!((est.value - c.abs()).abs() < 1e-12, "p={p}: {}", est.value);
            assert_eq!(est.mc_std_err, 0.0);
        }
    }

    #[test]
    fn linear_risk_under_uniform_law_matches_closed_form() {
        // f(x) = w x (clip inactive) vs zero: ||f||_2 = |w| since E x^2 = 1
        let measure = flat_measure(1);
        let w = 0.8f64;
        let op = TestOperator::clipped_linear(vec![vec![w]], 10.0, w * 1.0001).unwrap();
        let est = empirical_risk(
            &op,
            &ZeroPredictor(1),
            2.0,
            &measure,
            50_000,
            &mut stream(20, &[]),
        )
        .unwrap();
        assert!((est.value - w).abs() <= 3.0 * est.mc_std_err);
        assert!(est.mc_std_err > 0.0);
    }

    #[test]
    fn tail_accounting_is_exact() {
        let spectrum = SpectrumProfile::exponential(1.0, 1.0).unwrap();
        let measure = InputMeasure::new(spectrum.clone(), CoordinateLaw::UniformUnitVariance, 3)
            .unwrap();
        let op = TestOperator::zero(1);
        let est = empirical_risk(
            &op,
            &ZeroPredictor(1),
            2.0,
            &measure,
            10,
            &mut stream(3, &[]),
        )
        .unwrap();
        let expect = spectrum.tail_sum(3, 1e-9).unwrap();
        assert_eq!(est.tail_energy_neglected, expect);
    }

    #[test]
    fn linear_truth_matches_high_budget_oracle() {
        // truth f(x) = sum_j w_j x_j (clip never active), homogeneous closed form:
        // ||f||_2^2 = sum w_j^2 lambda_j under unit-variance whitened coordinates.
        let spectrum = SpectrumProfile::explicit(vec![1.0, 0.5, 0.25]).unwrap();
        let measure =
            InputMeasure::new(spectrum.clone(), CoordinateLaw::UniformUnitVariance, 3).unwrap();
        let w = [0.4f64, -0.3, 0.2];
        let op = TestOperator::clipped_linear(vec![w.to_vec()], 100.0, 1.0).unwrap();
        let est = empirical_risk(
            &op,
            &ZeroPredictor(1),
            2.0,
            &measure,
            200_000,
            &mut stream(4, &[]),
        )
        .unwrap();
        let mut closed = 0.0;
        for (j, wj) in w.iter().enumerate() {
            closed += wj * wj * spectrum.eigenvalue(j + 1).unwrap();
        }
        let closed = closed.sqrt();
        // independent high-budget oracle on its own stream
        let mut rng = stream(40_004, &[]);
        let n = 10_000_000usize;
        let mut acc = 0.0;
        for _ in 0..n {
            let x = measure.sample_one(&mut rng);
            let f: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
            acc += f * f;
        }
        let oracle = (acc / n as f64).sqrt();
        assert!(
            (est.value - closed).abs() <= 3.0 * est.mc_std_err,
            "mc={} closed={closed}",
            est.value
        );
        assert!((est.value - oracle).abs() <= 4.0 * est.mc_std_err);
    }

    fn synthetic_curve(rows: Vec<(u64, f64)>, sigma: f64) -> RiskCurve {
        RiskCurve {
            rows: rows
                .into_iter()
                .map(|(m, risk)| RiskCurveRow {
                    m,
                    m_effective: m,
                    trials: 1,
                    mean_risk: Some(risk),
                    std_err: Some(0.0),
                    selection: None,
                    infeasible: None,
                    tail_energy_neglected: 0.0,
                    seed: 0,
                })
                .collect(),
            sigma,
            p: 2.0,
            trials: 1,
            n_mc: 1,
            master_seed: 0,
        }
    }

    #[test]
    fn fit_rate_recovers_power_law() {
        let rows: Vec<(u64, f64)> = [100u64, 400, 1600, 6400, 25600]
            .iter()
            .map(|&m| (m, (m as f64).powf(-1.0 / 3.0)))
            .collect();
        let curve = synthetic_curve(rows, 1.0);
        let fit = fit_rate(&curve, Abscissa::LogM).unwrap();
        assert!((fit.slope - 1.0 / 3.0).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_rate_recovers_sqrt_log_shape() {
        let sigma = 1.0;
        let rows: Vec<(u64, f64)> = [100u64, 1000, 10_000, 100_000, 1_000_000]
            .iter()
            .map(|&m| {
                let k = m as f64 / (sigma * sigma);
                (m, (-2.0 * k.ln().sqrt()).exp())
            })
            .collect();
        let curve = synthetic_curve(rows, sigma);
        let fit = fit_rate(&curve, Abscissa::LogKPow(0.5)).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-9);
    }

    #[test]
    fn fit_rate_log_over_loglog_abscissa() {
        let sigma = 1.0;
        let rows: Vec<(u64, f64)> = [1_000u64, 31_623, 1_000_000, 31_622_777, 1_000_000_000]
            .iter()
            .map(|&m| {
                let lk = (m as f64).ln();
                (m, (-0.7 * lk / lk.ln()).exp())
            })
            .collect();
        let curve = synthetic_curve(rows, sigma);
        let fit = fit_rate(&curve, Abscissa::LogKOverLogLogK).unwrap();
        assert!((fit.slope - 0.7).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_rate_is_order_invariant() {
        let rows = vec![
            (100u64, 0.5),
            (1000, 0.2),
            (10_000, 0.09),
            (100_000, 0.031),
            (1_000_000, 0.012),
        ];
        let mut shuffled = rows.clone();
        shuffled.swap(0, 3);
        shuffled.swap(1, 4);
        let a = fit_rate(&synthetic_curve(rows, 0.5), Abscissa::LogM).unwrap();
        let b = fit_rate(&synthetic_curve(shuffled, 0.5), Abscissa::LogM).unwrap();
        assert_eq!(a.slope, b.slope);
        assert_eq!(a.r_squared, b.r_squared);
    }

    #[test]
    fn fit_rate_needs_four_rows() {
        let curve = synthetic_curve(vec![(10, 0.5), (100, 0.2), (1000, 0.1)], 1.0);
        assert!(fit_rate(&curve, Abscissa::LogM).is_err());
    }

    fn small_experiment(m_grid: Vec<u64>, trials: usize) -> RiskExperiment {
        let measure = flat_measure(1);
        let op = TestOperator::clipped_linear(vec![vec![1.0]], 2.0, 1.0).unwrap();
        let noise = NoiseModel::hilbert(0.1, 4, UpsilonSpectrum::Geometric).unwrap();
        RiskExperiment {
            measure,
            operator: op,
            noise,
            design: DesignChoice::FixedStratified,
            m_grid,
            trials,
            n_mc: 2000,
            p: 2.0,
            hints: RegimeHints {
                regime: Some(SelectionRegime::FiniteDim),
                d: Some(1),
                r_box: Some(3.0),
                ..RegimeHints::default()
            },
        }
    }

    #[test]
    fn risk_curve_is_seed_deterministic() {
        let exp = small_experiment(vec![64, 256], 1);
        let a = risk_curve(&exp, 12345).unwrap();
        let b = risk_curve(&exp, 12345).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = risk_curve(&exp, 54321).unwrap();
        assert_ne!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
    }

    #[test]
    fn sigma_zero_cellwise_constant_recovers_exactly() {
        // truth constant on cells: a 1-cell partition with a constant operator output.
        // With sigma = 0 the fitted mean equals the constant, so risk is zero up to
        // the (zero) input tail.
        let measure = flat_measure(1);
        let op = TestOperator::zero(2);
        let noise = NoiseModel::hilbert(0.0, 2, UpsilonSpectrum::Geometric).unwrap();
        let exp = RiskExperiment {
            measure,
            operator: op,
            noise,
            design: DesignChoice::FixedStratified,
            m_grid: vec![16],
            trials: 2,
            n_mc: 500,
            p: 2.0,
            hints: RegimeHints {
                d: Some(1),
                r_box: Some(3.0),
                n_per_axis: Some(vec![4]),
                ..RegimeHints::default()
            },
        };
        let curve = risk_curve(&exp, 7).unwrap();
        assert_eq!(curve.rows[0].mean_risk, Some(0.0));
    }

    #[test]
    fn infeasible_rows_are_marked_not_fatal() {
        let measure = InputMeasure::new(
            SpectrumProfile::explicit(vec![1e-8]).unwrap(),
            CoordinateLaw::UniformUnitVariance,
            1,
        )
        .unwrap();
        let op = TestOperator::clipped_linear(vec![vec![1.0]], 2.0, 1.0).unwrap();
        let noise = NoiseModel::hilbert(1.0, 2, UpsilonSpectrum::Geometric).unwrap();
        let exp = RiskExperiment {
            measure,
            operator: op,
            noise,
            design: DesignChoice::FixedStratified,
            m_grid: vec![2, 4],
            trials: 1,
            n_mc: 100,
            p: 2.0,
            hints: RegimeHints::default(),
        };
        let curve = risk_curve(&exp, 3).unwrap();
        assert_eq!(curve.rows.len(), 2);
        assert!(curve.rows.iter().all(|r| r.infeasible.is_some()));
    }

    #[test]
    fn mean_risk_weakly_monotone_in_m() {
        let exp = small_experiment(vec![64, 256], 50);
        let curve = risk_curve(&exp, 99).unwrap();
        let (r1, s1) = (
            curve.rows[0].mean_risk.unwrap(),
            curve.rows[0].std_err.unwrap(),
        );
        let (r2, s2) = (
            curve.rows[1].mean_risk.unwrap(),
            curve.rows[1].std_err.unwrap(),
        );
        let combined = (s1 * s1 + s2 * s2).sqrt();
        assert!(
            r1 >= r2 - 2.0 * combined,
            "risk at m=64 ({r1}) should not beat m=256 ({r2}) by more than noise"
        );
    }
}
