//! Observation-noise models in output-coefficient form.
//!
//! Outputs are represented by their coefficients against a fixed orthonormal
//! basis of the output space. The trace-class model draws coefficient `j`
//! from N(0, upsilon_j) with a unit-trace coefficient covariance; the white
//! model draws every materialized coefficient from N(0, 1). White noise is
//! not a bona fide output-space element, so only the first `coeff_dim`
//! coefficients are ever materialized; the truncated estimator reads nothing
//! beyond them.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::Design;
use crate::operators::TestOperator;
use crate::spectrum::SpectrumProfile;

/// Which observation-noise model is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// Mean-zero Gaussian noise with trace-one coefficient covariance.
    Hilbert,
    /// Gaussian white noise: unit variance in every coefficient.
    White,
}

/// Source of the coefficient covariance eigenvalues for the trace-class model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UpsilonSpectrum {
    /// upsilon_j = 2^-j; sums to one exactly and keeps the materialized
    /// dimension small.
    Geometric,
    /// A decay profile normalized by its trace.
    Profile(SpectrumProfile),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseModel {
    kind: NoiseKind,
    sigma: f64,
    coeff_dim: usize,
    /// Materialized coefficient variances (before the sigma scale). Unit for
    /// every coefficient in the white model.
    upsilon: Vec<f64>,
    upsilon_trace_full: f64,
}

impl NoiseModel {
    pub fn hilbert(sigma: f64, coeff_dim: usize, spectrum: UpsilonSpectrum) -> Result<Self> {
        check_sigma_dim(sigma, coeff_dim)?;
        let upsilon: Vec<f64> = match &spectrum {
            UpsilonSpectrum::Geometric => (1..=coeff_dim).map(|j| 0.5f64.powi(j as i32)).collect(),
            UpsilonSpectrum::Profile(profile) => {
                let trace = profile.trace(1e-12)?;
                (1..=coeff_dim)
                    .map(|j| profile.eigenvalue(j).map(|l| l / trace))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let materialized: f64 = upsilon.iter().sum();
        if materialized > 1.0 + 1e-9 {
            return Err(Error::Internal(format!(
                "materialized coefficient variances sum to {materialized} > 1"
            )));
        }
        Ok(Self {
            kind: NoiseKind::Hilbert,
            sigma,
            coeff_dim,
            upsilon,
            upsilon_trace_full: 1.0,
        })
    }

    pub fn white(sigma: f64, coeff_dim: usize) -> Result<Self> {
        check_sigma_dim(sigma, coeff_dim)?;
        Ok(Self {
            kind: NoiseKind::White,
            sigma,
            coeff_dim,
            upsilon: vec![1.0; coeff_dim],
            upsilon_trace_full: f64::INFINITY,
        })
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn coeff_dim(&self) -> usize {
        self.coeff_dim
    }

    /// Materialized coefficient variances before the sigma scale.
    pub fn upsilon(&self) -> &[f64] {
        &self.upsilon
    }

    /// Largest coefficient variance (enters the divergence budget constant).
    pub fn upsilon_top(&self) -> f64 {
        self.upsilon[0]
    }

    /// Sum of materialized coefficient variances.
    pub fn materialized_trace(&self) -> f64 {
        self.upsilon.iter().sum()
    }

    /// Full trace of the coefficient covariance (infinite for white noise).
    pub fn full_trace(&self) -> f64 {
        self.upsilon_trace_full
    }

    /// `count` unscaled noise vectors: coefficient j ~ N(0, upsilon_j)
    /// (trace-class) or N(0, 1) (white). The sigma scale is applied by
    /// [`NoiseModel::observe`].
    pub fn sample_noise(&self, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Err(Error::InvalidParameter("noise draw count must be >= 1".into()));
        }
        let scales: Vec<f64> = self.upsilon.iter().map(|&u| u.sqrt()).collect();
        Ok((0..count)
            .map(|_| {
                scales
                    .iter()
                    .map(|&s| s * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect())
    }

    /// Noisy evaluations of `operator` at the design points:
    /// output i = coefficients of F(X_i), truncated or zero-padded to
    /// `coeff_dim`, plus sigma times a noise draw.
    pub fn observe(
        &self,
        operator: &TestOperator,
        design: &Design,
        rng: &mut ChaCha8Rng,
    ) -> Result<Dataset> {
        if design.is_empty() {
            return Err(Error::InvalidParameter("design has no points".into()));
        }
        let noise = self.sample_noise(design.len(), rng)?;
        let mut outputs = Vec::with_capacity(design.len());
        for (point, eps) in design.points.iter().zip(noise) {
            let coeffs = operator.eval(point);
            let mut y = vec![0.0f64; self.coeff_dim];
            for j in 0..self.coeff_dim {
                let signal = coeffs.get(j).copied().unwrap_or(0.0);
                y[j] = signal + self.sigma * eps[j];
            }
            outputs.push(y);
        }
        Ok(Dataset {
            inputs: design.points.clone(),
            outputs,
            coeff_dim: self.coeff_dim,
        })
    }
}

fn check_sigma_dim(sigma: f64, coeff_dim: usize) -> Result<()> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sigma must be a finite nonnegative real, got {sigma}"
        )));
    }
    if coeff_dim == 0 {
        return Err(Error::InvalidParameter("coeff_dim must be >= 1".into()));
    }
    Ok(())
}

/// Paired observations (X_i, Y_i) with outputs in coefficient form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub coeff_dim: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// One row per observation: input coordinates then output coefficients.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for (x, y) in self.inputs.iter().zip(&self.outputs) {
            let mut row: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
            row.extend(y.iter().map(|v| format!("{v}")));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{make_random_design, Design, DesignKind};
    use crate::operators::{ScalarFunctional, TestOperator};
    use crate::rng::stream;

    #[test]
    fn geometric_trace_normalized() {
        let m8 = NoiseModel::hilbert(1.0, 8, UpsilonSpectrum::Geometric).unwrap();
        let m20 = NoiseModel::hilbert(1.0, 20, UpsilonSpectrum::Geometric).unwrap();
        assert!(m8.materialized_trace() <= 1.0);
        assert!(m20.materialized_trace() <= 1.0);
        assert!(m20.materialized_trace() > m8.materialized_trace());
        assert!((m20.materialized_trace() - 1.0).abs() < 1e-6);
        assert!((m8.upsilon_top() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn noise_variance_tracks_upsilon() {
        let model = NoiseModel::hilbert(1.0, 4, UpsilonSpectrum::Geometric).unwrap();
        let mut rng = stream(21, &[]);
        let draws = model.sample_noise(100_000, &mut rng).unwrap();
        for j in 0..4 {
            let var: f64 =
                draws.iter().map(|e| e[j] * e[j]).sum::<f64>() / draws.len() as f64;
            let expect = 0.5f64.powi(j as i32 + 1);
            assert!(
                (var - expect).abs() <= 0.05 * expect,
                "coefficient {j}: var={var} expect={expect}"
            );
        }
    }

    #[test]
    fn white_noise_unit_variance() {
        let model = NoiseModel::white(1.0, 3).unwrap();
        let mut rng = stream(22, &[]);
        let draws = model.sample_noise(100_000, &mut rng).unwrap();
        for j in 0..3 {
            let var: f64 =
                draws.iter().map(|e| e[j] * e[j]).sum::<f64>() / draws.len() as f64;
            assert!((var - 1.0).abs() <= 0.05, "coefficient {j}: var={var}");
        }
    }

    fn unit_design(points: Vec<Vec<f64>>) -> Design {
        let m = points.len() as u64;
        Design {
            kind: DesignKind::RandomBox { r_box: 1.0, d: 1 },
            points,
            m_requested: m,
            m_effective: m,
        }
    }

    #[test]
    fn sigma_zero_observations_are_exact() {
        let spectrum = SpectrumProfile::explicit(vec![1.0]).unwrap();
        let op = TestOperator::lift(
            ScalarFunctional::tent(1, spectrum.clone()).unwrap(),
            1,
        )
        .unwrap();
        let model = NoiseModel::hilbert(0.0, 4, UpsilonSpectrum::Geometric).unwrap();
        let mut rng = stream(4, &[]);
        let design = unit_design(vec![vec![0.0], vec![0.25], vec![0.5]]);
        let data = model.observe(&op, &design, &mut rng).unwrap();
        assert_eq!(data.len(), 3);
        for (x, y) in data.inputs.iter().zip(&data.outputs) {
            let truth = op.eval(x);
            assert_eq!(y[0], truth[0]);
            assert!(y[1..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn zero_operator_observation_variance() {
        let op = TestOperator::zero(4);
        let sigma = 0.7;
        let model = NoiseModel::hilbert(sigma, 4, UpsilonSpectrum::Geometric).unwrap();
        let spectrum = SpectrumProfile::explicit(vec![1.0]).unwrap();
        let mut rng = stream(31, &[]);
        let design = make_random_design(1.0, 1, &spectrum, 100_000, &mut rng).unwrap();
        let data = model.observe(&op, &design, &mut rng).unwrap();
        for j in 0..4 {
            let var: f64 =
                data.outputs.iter().map(|y| y[j] * y[j]).sum::<f64>() / data.len() as f64;
            let expect = sigma * sigma * 0.5f64.powi(j as i32 + 1);
            assert!(
                (var - expect).abs() <= 0.05 * expect,
                "coefficient {j}: var={var} expect={expect}"
            );
        }
    }

    #[test]
    fn observation_is_seed_deterministic() {
        let op = TestOperator::zero(2);
        let model = NoiseModel::white(1.0, 2).unwrap();
        let design = unit_design(vec![vec![0.1], vec![0.2]]);
        let a = model
            .observe(&op, &design, &mut stream(99, &[1]))
            .unwrap();
        let b = model
            .observe(&op, &design, &mut stream(99, &[1]))
            .unwrap();
        assert_eq!(a, b);
    }
}
