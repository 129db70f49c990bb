//! The input measure in eigencoordinates, plus fixed and random designs.
//!
//! A coordinate vector `x` lists the components of an input against the
//! covariance eigenbasis; coordinate `j` of a draw is distributed as
//! `sqrt(lambda_j) * xi` for a whitened coordinate `xi` with mean zero and
//! unit variance. Vectors shorter than an operation's working dimension are
//! read as zero-padded.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::HistogramPartition;
use crate::spectrum::SpectrumProfile;

/// Density-floor constants of a coordinate law: the density is at least `b`
/// on `[-a, a]`, and `iota = 2ab <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawConstants {
    pub a: f64,
    pub b: f64,
    pub iota: f64,
}

/// Law of the whitened coordinates. Both shipped laws have mean zero and
/// unit variance; one has compact support, one does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoordinateLaw {
    /// Uniform on [-sqrt(3), sqrt(3)].
    UniformUnitVariance,
    /// Standard normal.
    StandardGaussian,
}

impl CoordinateLaw {
    pub fn name(&self) -> &'static str {
        match self {
            CoordinateLaw::UniformUnitVariance => "uniform",
            CoordinateLaw::StandardGaussian => "gaussian",
        }
    }

    /// Half-width of the certified density floor interval.
    pub fn a(&self) -> f64 {
        match self {
            CoordinateLaw::UniformUnitVariance => 3.0f64.sqrt(),
            CoordinateLaw::StandardGaussian => 1.0,
        }
    }

    /// Density floor on [-a, a]. For the uniform law this is the exact
    /// density; for the Gaussian it is the density at the endpoints.
    pub fn b(&self) -> f64 {
        match self {
            CoordinateLaw::UniformUnitVariance => 1.0 / (2.0 * 3.0f64.sqrt()),
            CoordinateLaw::StandardGaussian => {
                (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt()
            }
        }
    }

    pub fn iota(&self) -> f64 {
        2.0 * self.a() * self.b()
    }

    pub fn constants(&self) -> LawConstants {
        LawConstants {
            a: self.a(),
            b: self.b(),
            iota: self.iota(),
        }
    }

    /// Density of the law at `x`.
    pub fn density(&self, x: f64) -> f64 {
        match self {
            CoordinateLaw::UniformUnitVariance => {
                if x.abs() <= 3.0f64.sqrt() {
                    1.0 / (2.0 * 3.0f64.sqrt())
                } else {
                    0.0
                }
            }
            CoordinateLaw::StandardGaussian => {
                (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
            }
        }
    }

    /// Closed form of E|xi|^q.
    ///
    /// Uniform: (sqrt 3)^q / (q + 1). Gaussian: 2^(q/2) Gamma((q+1)/2) / sqrt(pi),
    /// which reduces to the double factorial (q-1)!! at even integer q.
    pub fn abs_moment(&self, q: f64) -> Result<f64> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "moment order must be positive and finite, got {q}"
            )));
        }
        Ok(match self {
            CoordinateLaw::UniformUnitVariance => 3.0f64.sqrt().powf(q) / (q + 1.0),
            CoordinateLaw::StandardGaussian => {
                let ln_gamma = libm::lgamma((q + 1.0) / 2.0);
                (0.5 * q * 2.0f64.ln() + ln_gamma - 0.5 * std::f64::consts::PI.ln()).exp()
            }
        })
    }

    /// One whitened draw.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            CoordinateLaw::UniformUnitVariance => {
                let s = 3.0f64.sqrt();
                rng.random_range(-s..=s)
            }
            CoordinateLaw::StandardGaussian => rng.sample(StandardNormal),
        }
    }
}

/// The input measure truncated to its first `sim_dim` eigencoordinates.
/// The neglected tail energy `sum_{j>sim_dim} lambda_j` is carried along so
/// every downstream risk report can state what the truncation dropped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputMeasure {
    spectrum: SpectrumProfile,
    law: CoordinateLaw,
    sim_dim: usize,
    tail_energy: f64,
    sqrt_lambdas: Vec<f64>,
}

/// Default cap on the automatically chosen simulation dimension.
pub const SIM_DIM_CAP: usize = 2048;

impl InputMeasure {
    pub fn new(spectrum: SpectrumProfile, law: CoordinateLaw, sim_dim: usize) -> Result<Self> {
        if sim_dim == 0 {
            return Err(Error::InvalidParameter("sim_dim must be >= 1".into()));
        }
        if let Some(len) = spectrum.len() {
            if sim_dim > len {
                return Err(Error::OutOfRange {
                    index: sim_dim,
                    limit: len,
                });
            }
        }
        let tail_energy = spectrum.tail_sum(sim_dim, 1e-9)?;
        let sqrt_lambdas = (1..=sim_dim)
            .map(|j| spectrum.eigenvalue(j).map(f64::sqrt))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spectrum,
            law,
            sim_dim,
            tail_energy,
            sqrt_lambdas,
        })
    }

    /// Picks the smallest simulation dimension whose neglected tail energy is
    /// below `1e-3 * lambda_1`, capped at [`SIM_DIM_CAP`] (the realized tail
    /// energy is always reported, so a capped choice stays honest).
    pub fn with_default_sim_dim(spectrum: SpectrumProfile, law: CoordinateLaw) -> Result<Self> {
        let target = 1e-3 * spectrum.eigenvalue(1)?;
        let cap = spectrum.len().unwrap_or(SIM_DIM_CAP).min(SIM_DIM_CAP);
        let mut dim = 1;
        while dim < cap && spectrum.tail_sum(dim, 1e-6)? >= target {
            dim += 1;
        }
        Self::new(spectrum, law, dim)
    }

    pub fn spectrum(&self) -> &SpectrumProfile {
        &self.spectrum
    }

    pub fn law(&self) -> CoordinateLaw {
        self.law
    }

    pub fn sim_dim(&self) -> usize {
        self.sim_dim
    }

    /// Energy `sum_{j>sim_dim} lambda_j` dropped by the truncation.
    pub fn tail_energy_neglected(&self) -> f64 {
        self.tail_energy
    }

    /// One coordinate vector of length `sim_dim`.
    pub fn sample_one(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.sqrt_lambdas
            .iter()
            .map(|&s| s * self.law.sample(rng))
            .collect()
    }

    /// `count` independent draws; deterministic given the stream.
    pub fn sample_inputs(&self, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Err(Error::InvalidParameter(
                "sample count must be >= 1".into(),
            ));
        }
        Ok((0..count).map(|_| self.sample_one(rng)).collect())
    }
}

/// How a design was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DesignKind {
    /// Every cell of a partition holds the same number of replicated
    /// midpoints; coordinates beyond the partition dimension are zero.
    FixedStratified { points_per_cell: usize },
    /// i.i.d. draws with coordinate i uniform on [-sqrt(R lambda_i), sqrt(R lambda_i)]
    /// for i <= d, zero beyond.
    RandomBox { r_box: f64, d: usize },
}

/// A materialized set of design points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Design {
    pub kind: DesignKind,
    pub points: Vec<Vec<f64>>,
    /// Requested sample count.
    pub m_requested: u64,
    /// Count actually materialized (fixed designs round down to a multiple
    /// of the cell count).
    pub m_effective: u64,
}

impl Design {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// One row per point, one column per coordinate.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for point in &self.points {
            let row: Vec<String> = point.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Stratified design: `floor(m / n)` copies of each cell midpoint, where `n`
/// is the cell count. Requires at least one point per cell; when `m` is not a
/// multiple of `n` the count is rounded down and recorded.
pub fn make_fixed_design(partition: &HistogramPartition, m: u64) -> Result<Design> {
    let n = partition.n_cells();
    if m < n {
        return Err(Error::Infeasible(format!(
            "fixed stratified design needs at least one point per cell: m={m} < n={n}"
        )));
    }
    let per_cell = (m / n) as usize;
    let m_effective = per_cell as u64 * n;
    let mut points = Vec::with_capacity(m_effective as usize);
    for cell in 0..n {
        let midpoint = partition.cell_midpoint(cell);
        for _ in 0..per_cell {
            points.push(midpoint.clone());
        }
    }
    Ok(Design {
        kind: DesignKind::FixedStratified {
            points_per_cell: per_cell,
        },
        points,
        m_requested: m,
        m_effective,
    })
}

/// Random box design: coordinate i of each point is
/// `sqrt(R lambda_i) * zeta_i` with `zeta_i ~ U[-1, 1]`, i <= d.
pub fn make_random_design(
    r_box: f64,
    d: usize,
    spectrum: &SpectrumProfile,
    m: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Design> {
    if !(r_box > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "box scale must be positive, got {r_box}"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("design dimension must be >= 1".into()));
    }
    let half_widths: Vec<f64> = (1..=d)
        .map(|i| spectrum.eigenvalue(i).map(|l| (r_box * l).sqrt()))
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(m as usize);
    for _ in 0..m {
        let point: Vec<f64> = half_widths
            .iter()
            .map(|&s| s * rng.random_range(-1.0..=1.0))
            .collect();
        points.push(point);
    }
    Ok(Design {
        kind: DesignKind::RandomBox { r_box, d },
        points,
        m_requested: m,
        m_effective: m,
    })
}
