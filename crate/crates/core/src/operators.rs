//! Test operators with certified norm and Lipschitz constants.
//!
//! All certificates are analytic, per family; sampling appears only in the
//! test suite as an independent check. Coordinate vectors shorter than a
//! family's working dimension are read as zero-padded.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::SpectrumProfile;

/// Product tent in the first `d` eigencoordinates:
/// `prod_{i<=d} max(1 - |x_i| / sqrt(lambda_i), 0)`.
/// Values lie in [0, 1]; the Lipschitz constant is at most
/// `sqrt(sum_{i<=d} 1/lambda_i)`.
pub fn tent(x: &[f64], d: usize, spectrum: &SpectrumProfile) -> Result<f64> {
    let mut value = 1.0f64;
    for i in 1..=d {
        let xi = x.get(i - 1).copied().unwrap_or(0.0);
        let scale = spectrum.eigenvalue(i)?.sqrt();
        let factor = 1.0 - xi.abs() / scale;
        if factor <= 0.0 {
            return Ok(0.0);
        }
        value *= factor;
    }
    Ok(value)
}

/// A sum of disjointly supported bumps in whitened coordinates, scaled so the
/// whole functional is `lipschitz`-Lipschitz:
/// `F_theta(x) = (L h / sqrt(sum 1/lambda_i)) * sum_i theta_i T((xi - c_i)/h)`
/// where `T` is the unit product tent and `xi_j = x_j / sqrt(lambda_j)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BumpFamilyParams {
    pub d: usize,
    pub h: f64,
    /// Half-width of the admissible whitened box [-a, a]^d.
    pub a: f64,
    /// Bump centers in whitened coordinates.
    pub centers: Vec<Vec<f64>>,
    pub theta: Vec<bool>,
    pub lipschitz: f64,
    pub spectrum: SpectrumProfile,
    amplitude: f64,
    sqrt_lambdas: Vec<f64>,
}

impl BumpFamilyParams {
    pub fn new(
        d: usize,
        h: f64,
        a: f64,
        centers: Vec<Vec<f64>>,
        theta: Vec<bool>,
        lipschitz: f64,
        spectrum: SpectrumProfile,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("bump dimension must be >= 1".into()));
        }
        if !(h > 0.0) || !(a > 0.0) || h > a / 8.0 + 1e-15 {
            return Err(Error::InvalidParameter(format!(
                "bump width must satisfy 0 < h/a <= 1/8, got h={h}, a={a}"
            )));
        }
        if !(lipschitz > 0.0) {
            return Err(Error::InvalidParameter(
                "bump family Lipschitz constant must be positive".into(),
            ));
        }
        if theta.len() != centers.len() {
            return Err(Error::InvalidParameter(format!(
                "theta length {} does not match center count {}",
                theta.len(),
                centers.len()
            )));
        }
        for (i, c) in centers.iter().enumerate() {
            if c.len() != d {
                return Err(Error::InvalidParameter(format!(
                    "center {i} has dimension {} != d = {d}",
                    c.len()
                )));
            }
            if c.iter().any(|&v| v.abs() > a - h + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "support box of center {i} leaves [-a, a]^d"
                )));
            }
            for (j, other) in centers.iter().enumerate().take(i) {
                let linf = c
                    .iter()
                    .zip(other)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0f64, f64::max);
                if linf < 2.0 * h - 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "support boxes of centers {j} and {i} overlap"
                    )));
                }
            }
        }
        let inv_sum_sqrt = (0.5 * spectrum.log_inv_sum(d)?).exp();
        if !inv_sum_sqrt.is_finite() {
            return Err(Error::Overflow {
                log_value: spectrum.log_inv_sum(d)?,
            });
        }
        let amplitude = lipschitz * h / inv_sum_sqrt;
        let sqrt_lambdas = (1..=d)
            .map(|i| spectrum.eigenvalue(i).map(f64::sqrt))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            d,
            h,
            a,
            centers,
            theta,
            lipschitz,
            spectrum,
            amplitude,
            sqrt_lambdas,
        })
    }

    /// Peak value `L h / sqrt(sum_{i<=d} 1/lambda_i)`, reached at every
    /// active center. Zero when no center is active.
    pub fn amplitude(&self) -> f64 {
        if self.theta.iter().any(|&on| on) {
            self.amplitude
        } else {
            0.0
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0f64;
        'centers: for (center, &on) in self.centers.iter().zip(&self.theta) {
            if !on {
                continue;
            }
            let mut value = 1.0f64;
            for j in 0..self.d {
                let xi = x.get(j).copied().unwrap_or(0.0) / self.sqrt_lambdas[j];
                let factor = 1.0 - (xi - center[j]).abs() / self.h;
                if factor <= 0.0 {
                    continue 'centers;
                }
                value *= factor;
            }
            acc += value;
        }
        self.amplitude * acc
    }
}

/// Scalar building blocks that get lifted to operators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ScalarFunctional {
    Zero,
    Tent {
        d: usize,
        spectrum: SpectrumProfile,
        lipschitz: f64,
    },
    Bump(BumpFamilyParams),
}

impl ScalarFunctional {
    pub fn zero() -> Self {
        ScalarFunctional::Zero
    }

    pub fn tent(d: usize, spectrum: SpectrumProfile) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("tent dimension must be >= 1".into()));
        }
        let lipschitz = (0.5 * spectrum.log_inv_sum(d)?).exp();
        if !lipschitz.is_finite() {
            return Err(Error::Overflow {
                log_value: spectrum.log_inv_sum(d)?,
            });
        }
        Ok(ScalarFunctional::Tent {
            d,
            spectrum,
            lipschitz,
        })
    }

    pub fn bump(params: BumpFamilyParams) -> Self {
        ScalarFunctional::Bump(params)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarFunctional::Zero => 0.0,
            ScalarFunctional::Tent { d, spectrum, .. } => {
                tent(x, *d, spectrum).expect("tent dimensions validated at construction")
            }
            ScalarFunctional::Bump(params) => params.eval(x),
        }
    }

    /// Certified bound on |f|.
    pub fn sup_bound(&self) -> f64 {
        match self {
            ScalarFunctional::Zero => 0.0,
            ScalarFunctional::Tent { .. } => 1.0,
            ScalarFunctional::Bump(params) => params.amplitude(),
        }
    }

    /// Certified Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        match self {
            ScalarFunctional::Zero => 0.0,
            ScalarFunctional::Tent { lipschitz, .. } => *lipschitz,
            ScalarFunctional::Bump(params) => params.lipschitz,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum OperatorFamily {
    Zero,
    /// x -> f(x) * e_direction (direction is 1-based).
    Lifted {
        functional: ScalarFunctional,
        direction: usize,
    },
    /// x -> A x, radially clipped to norm at most B.
    ClippedLinear {
        weights: Vec<Vec<f64>>,
        in_dim: usize,
    },
}

/// An operator with certified output bound `B`, Lipschitz constant `L`, and
/// (for single-direction operators) membership in every weighted-coefficient
/// smoothness class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestOperator {
    family: OperatorFamily,
    b_bound: f64,
    lipschitz: f64,
    output_dim: usize,
}

impl TestOperator {
    pub fn zero(output_dim: usize) -> Self {
        Self {
            family: OperatorFamily::Zero,
            b_bound: 0.0,
            lipschitz: 0.0,
            output_dim: output_dim.max(1),
        }
    }

    /// Lift a scalar functional along output basis direction `direction`
    /// (1-based). The certified constants carry over unchanged.
    pub fn lift(functional: ScalarFunctional, direction: usize) -> Result<Self> {
        if direction == 0 {
            return Err(Error::InvalidParameter(
                "output direction is 1-based and must be >= 1".into(),
            ));
        }
        let b_bound = functional.sup_bound();
        let lipschitz = functional.lipschitz();
        Ok(Self {
            family: OperatorFamily::Lifted {
                functional,
                direction,
            },
            b_bound,
            lipschitz,
            output_dim: direction,
        })
    }

    /// Linear map given by `weights` (one row per output coefficient),
    /// radially clipped to output norm `b_bound`. Construction certifies
    /// `||A||_op <= lipschitz` by power iteration to relative 1e-9; the
    /// radial clip is nonexpansive, so the certified constant survives it.
    pub fn clipped_linear(weights: Vec<Vec<f64>>, b_bound: f64, lipschitz: f64) -> Result<Self> {
        if weights.is_empty() || weights[0].is_empty() {
            return Err(Error::InvalidParameter(
                "weight matrix must have at least one row and column".into(),
            ));
        }
        let in_dim = weights[0].len();
        if weights.iter().any(|row| row.len() != in_dim) {
            return Err(Error::InvalidParameter(
                "weight matrix rows must all have the same length".into(),
            ));
        }
        if !(b_bound > 0.0) || !(lipschitz > 0.0) {
            return Err(Error::InvalidParameter(
                "clipped-linear bounds B and L must be positive".into(),
            ));
        }
        let norm = operator_norm(&weights, 1e-9);
        if !(norm <= lipschitz * (1.0 + 1e-9)) {
            return Err(Error::Certification(format!(
                "weight matrix operator norm {norm:.12e} exceeds the requested Lipschitz constant {lipschitz:.12e}"
            )));
        }
        let output_dim = weights.len();
        Ok(Self {
            family: OperatorFamily::ClippedLinear { weights, in_dim },
            b_bound,
            lipschitz,
            output_dim,
        })
    }

    pub fn b_bound(&self) -> f64 {
        self.b_bound
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// The single nonzero output direction, when there is one.
    pub fn direction(&self) -> Option<usize> {
        match &self.family {
            OperatorFamily::Lifted { direction, .. } => Some(*direction),
            _ => None,
        }
    }

    /// Certified bound on the weighted coefficient norm with weights
    /// `w_i = i` at scale `t`. Exact scaling for single-direction operators;
    /// a crude but valid `output_dim^t * B` otherwise.
    pub fn bound_in_weighted_norm(&self, t: f64) -> f64 {
        match &self.family {
            OperatorFamily::Zero => 0.0,
            OperatorFamily::Lifted { direction, .. } => {
                (*direction as f64).powf(t) * self.b_bound
            }
            OperatorFamily::ClippedLinear { .. } => {
                (self.output_dim as f64).powf(t) * self.b_bound
            }
        }
    }

    /// Output coefficients at `x` (length `output_dim`).
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match &self.family {
            OperatorFamily::Zero => vec![0.0; self.output_dim],
            OperatorFamily::Lifted {
                functional,
                direction,
            } => {
                let mut out = vec![0.0; self.output_dim];
                out[direction - 1] = functional.eval(x);
                out
            }
            OperatorFamily::ClippedLinear { weights, in_dim } => {
                let mut out: Vec<f64> = weights
                    .iter()
                    .map(|row| {
                        let mut acc = 0.0;
                        for (k, &w) in row.iter().enumerate().take(*in_dim) {
                            acc += w * x.get(k).copied().unwrap_or(0.0);
                        }
                        acc
                    })
                    .collect();
                let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > self.b_bound {
                    let scale = self.b_bound / norm;
                    for v in &mut out {
                        *v *= scale;
                    }
                }
                out
            }
        }
    }
}

/// Largest singular value of the row-major matrix, by power iteration on
/// A^T A with a deterministic start vector. The iterate is monotone
/// nondecreasing, so stopping at relative change `tol` certifies the value
/// to that tolerance.
fn operator_norm(weights: &[Vec<f64>], tol: f64) -> f64 {
    let in_dim = weights[0].len();
    let mut v: Vec<f64> = (0..in_dim)
        .map(|i| 1.0 + (i as f64 + 1.0) / (in_dim as f64 + 1.0))
        .collect();
    normalize(&mut v);
    let mut prev = 0.0f64;
    for _ in 0..100_000 {
        let av: Vec<f64> = weights
            .iter()
            .map(|row| row.iter().zip(&v).map(|(w, x)| w * x).sum())
            .collect();
        let rho = av.iter().map(|x| x * x).sum::<f64>().sqrt();
        if rho == 0.0 {
            return 0.0;
        }
        // v <- A^T (A v), renormalized
        let mut next = vec![0.0f64; in_dim];
        for (row, &a) in weights.iter().zip(&av) {
            for (k, &w) in row.iter().enumerate() {
                next[k] += w * a;
            }
        }
        normalize(&mut next);
        v = next;
        if (rho - prev).abs() <= tol * rho {
            return rho;
        }
        prev = rho;
    }
    prev
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    fn spectrum3() -> SpectrumProfile {
        SpectrumProfile::explicit(vec![1.0, 0.5, 0.25]).unwrap()
    }

    fn random_box_point(
        rng: &mut rand_chacha::ChaCha8Rng,
        spectrum: &SpectrumProfile,
        d: usize,
        scale: f64,
    ) -> Vec<f64> {
        (1..=d)
            .map(|i| {
                let s = scale * spectrum.eigenvalue(i).unwrap().sqrt();
                rng.random_range(-s..=s)
            })
            .collect()
    }

    #[test]
    fn tent_peak_and_zero() {
        let s = spectrum3();
        assert_eq!(tent(&[0.0, 0.0, 0.0], 3, &s).unwrap(), 1.0);
        let lambda1 = s.eigenvalue(1).unwrap().sqrt();
        assert_eq!(tent(&[lambda1, 0.0, 0.0], 3, &s).unwrap(), 0.0);
    }

    #[test]
    fn tent_sampled_lipschitz_within_certificate() {
        let s = spectrum3();
        let d = 3;
        let cert = (0.5 * s.log_inv_sum(d).unwrap()).exp();
        let mut rng = stream(41, &[]);
        let mut max_quotient = 0.0f64;
        for _ in 0..10_000 {
            let x = random_box_point(&mut rng, &s, d, 1.5);
            let y = random_box_point(&mut rng, &s, d, 1.5);
            let dist: f64 = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            if dist < 1e-12 {
                continue;
            }
            let df = (tent(&x, d, &s).unwrap() - tent(&y, d, &s).unwrap()).abs();
            max_quotient = max_quotient.max(df / dist);
        }
        assert!(
            max_quotient <= cert * (1.0 + 1e-6),
            "quotient {max_quotient} vs certificate {cert}"
        );
    }

    fn small_bump(theta: Vec<bool>) -> BumpFamilyParams {
        let s = spectrum3();
        let a = 1.0;
        let h = 0.125;
        let centers = vec![vec![-0.5, -0.5], vec![0.5, 0.5], vec![-0.5, 0.5]];
        BumpFamilyParams::new(2, h, a, centers, theta, 2.0, s).unwrap()
    }

    #[test]
    fn bump_all_zero_theta_vanishes() {
        let params = small_bump(vec![false, false, false]);
        let mut rng = stream(42, &[]);
        for _ in 0..100 {
            let x = random_box_point(&mut rng, &spectrum3(), 2, 1.0);
            assert_eq!(params.eval(&x), 0.0);
        }
    }

    #[test]
    fn bump_peaks_at_active_center() {
        let params = small_bump(vec![true, true, false]);
        // x with whitened coordinates at the second center
        let s = spectrum3();
        let x: Vec<f64> = (0..2)
            .map(|j| 0.5 * s.eigenvalue(j + 1).unwrap().sqrt())
            .collect();
        let expect = params.amplitude();
        assert!((params.eval(&x) - expect).abs() < 1e-12);
    }

    #[test]
    fn bump_sampled_sup_within_amplitude() {
        let params = small_bump(vec![true, false, true]);
        let mut rng = stream(43, &[]);
        let mut sup = 0.0f64;
        for _ in 0..100_000 {
            let x = random_box_point(&mut rng, &spectrum3(), 2, 1.0);
            sup = sup.max(params.eval(&x).abs());
        }
        assert!(sup <= params.amplitude() * (1.0 + 1e-12));
    }

    #[test]
    fn bump_sampled_lipschitz_within_certificate() {
        let params = small_bump(vec![true, true, true]);
        let cert = params.lipschitz;
        let mut rng = stream(44, &[]);
        let mut max_quotient = 0.0f64;
        for _ in 0..10_000 {
            let x = random_box_point(&mut rng, &spectrum3(), 2, 1.1);
            let y = random_box_point(&mut rng, &spectrum3(), 2, 1.1);
            let dist: f64 = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            if dist < 1e-12 {
                continue;
            }
            let df = (params.eval(&x) - params.eval(&y)).abs();
            max_quotient = max_quotient.max(df / dist);
        }
        assert!(
            max_quotient <= cert * (1.0 + 1e-6),
            "quotient {max_quotient} vs certificate {cert}"
        );
    }

    #[test]
    fn lift_zero_functional_gives_zero_operator() {
        let op = TestOperator::lift(ScalarFunctional::zero(), 2).unwrap();
        assert_eq!(op.b_bound(), 0.0);
        assert_eq!(op.eval(&[0.3, 0.4]), vec![0.0, 0.0]);
    }

    #[test]
    fn lift_direction_one_has_unit_weight_for_all_t() {
        let op = TestOperator::lift(
            ScalarFunctional::tent(2, spectrum3()).unwrap(),
            1,
        )
        .unwrap();
        for t in [0.0, 0.5, 1.0, 4.0] {
            assert_eq!(op.bound_in_weighted_norm(t), op.b_bound());
        }
        // predicted norm equals |f(x)| pointwise
        let f = ScalarFunctional::tent(2, spectrum3()).unwrap();
        let mut rng = stream(45, &[]);
        for _ in 0..100 {
            let x = random_box_point(&mut rng, &spectrum3(), 2, 1.2);
            let out = op.eval(&x);
            let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - f.eval(&x).abs()).abs() < 1e-14);
        }
    }

    #[test]
    fn clipped_linear_zero_maps_to_zero_and_clip_inactive_is_linear() {
        let weights = vec![vec![0.6, 0.0], vec![0.0, 0.8]];
        let op = TestOperator::clipped_linear(weights, 10.0, 1.0).unwrap();
        assert_eq!(op.eval(&[0.0, 0.0]), vec![0.0, 0.0]);
        let out = op.eval(&[1.0, 2.0]);
        assert!((out[0] - 0.6).abs() < 1e-15);
        assert!((out[1] - 1.6).abs() < 1e-15);
    }

    #[test]
    fn clipped_linear_certification_rejects_large_norm() {
        let weights = vec![vec![2.0]];
        assert!(matches!(
            TestOperator::clipped_linear(weights, 1.0, 1.0),
            Err(Error::Certification(_))
        ));
    }

    #[test]
    fn clipped_linear_sampled_difference_quotients() {
        let weights = vec![vec![0.5, 0.2, 0.1], vec![0.1, 0.4, 0.0]];
        let lip = operator_norm(&weights, 1e-12);
        let op = TestOperator::clipped_linear(weights, 0.3, lip * (1.0 + 1e-12)).unwrap();
        let mut rng = stream(46, &[]);
        let mut max_quotient = 0.0f64;
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let dist: f64 = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            if dist < 1e-12 {
                continue;
            }
            let fx = op.eval(&x);
            let fy = op.eval(&y);
            let df: f64 = fx
                .iter()
                .zip(&fy)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            max_quotient = max_quotient.max(df / dist);
        }
        assert!(max_quotient <= op.lipschitz() * (1.0 + 1e-6));
    }

    #[test]
    fn sampled_sup_within_b_for_all_families() {
        let mut rng = stream(47, &[]);
        let ops = vec![
            TestOperator::zero(3),
            TestOperator::lift(ScalarFunctional::tent(2, spectrum3()).unwrap(), 2).unwrap(),
            TestOperator::lift(
                ScalarFunctional::bump(small_bump(vec![true, true, false])),
                1,
            )
            .unwrap(),
            TestOperator::clipped_linear(vec![vec![0.9, 0.0], vec![0.3, 0.2]], 0.5, 1.0).unwrap(),
        ];
        for op in &ops {
            for _ in 0..100_000 {
                let x = random_box_point(&mut rng, &spectrum3(), 2, 1.4);
                let norm = op.eval(&x).iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(norm <= op.b_bound() * (1.0 + 1e-12) + 1e-15);
            }
        }
    }

    #[test]
    fn operator_norm_matches_known_singular_value() {
        // rank-one u v^T has norm ||u|| ||v||
        let u = [0.3f64, -0.4, 0.5];
        let v = [0.8f64, 0.6];
        let weights: Vec<Vec<f64>> = u.iter().map(|a| v.iter().map(|b| a * b).collect()).collect();
        let expect = (u.iter().map(|x| x * x).sum::<f64>()
            * v.iter().map(|x| x * x).sum::<f64>())
        .sqrt();
        let got = operator_norm(&weights, 1e-12);
        assert!((got - expect).abs() < 1e-9 * expect);
    }
}
