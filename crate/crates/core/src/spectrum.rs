//! Eigenvalue decay profiles of the input covariance operator.
//!
//! A profile describes a nonincreasing positive sequence `lambda_1 >= lambda_2 >= ... > 0`
//! together with the scalar aggregates consumed by the bound formulas: partial
//! inverse sums, certified tail sums and log-products. Aggregates that can leave
//! the f64 range are also exposed in the log domain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_F64_MAX: f64 = 709.782712893384;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Kind {
    /// lambda_i = i^(-alpha), alpha > 1 so the trace is finite.
    Algebraic { alpha: f64 },
    /// lambda_i = exp(-alpha * i^beta).
    Exponential { alpha: f64, beta: f64 },
    /// lambda_i = exp(-exp(alpha * i)).
    DoubleExponential { alpha: f64 },
    /// A finite nonincreasing list of positive values; zero beyond the list.
    Explicit { values: Vec<f64> },
}

/// An eigenvalue decay profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumProfile {
    kind: Kind,
}

impl SpectrumProfile {
    pub fn algebraic(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "algebraic profile requires alpha > 1 for a finite trace, got {alpha}"
            )));
        }
        Ok(Self {
            kind: Kind::Algebraic { alpha },
        })
    }

    pub fn exponential(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 || !beta.is_finite() || beta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "exponential profile requires alpha > 0 and beta > 0, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(Self {
            kind: Kind::Exponential { alpha, beta },
        })
    }

    pub fn double_exponential(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "double-exponential profile requires alpha > 0, got {alpha}"
            )));
        }
        Ok(Self {
            kind: Kind::DoubleExponential { alpha },
        })
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "explicit profile requires at least one eigenvalue".into(),
            ));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "explicit eigenvalue {} must be positive and finite, got {v}",
                    i + 1
                )));
            }
            if i > 0 && v > values[i - 1] {
                return Err(Error::InvalidParameter(format!(
                    "explicit eigenvalues must be nonincreasing; value {} ({v}) exceeds its predecessor ({})",
                    i + 1,
                    values[i - 1]
                )));
            }
        }
        Ok(Self {
            kind: Kind::Explicit { values },
        })
    }

    /// Number of defined eigenvalues, if finite.
    pub fn len(&self) -> Option<usize> {
        match &self.kind {
            Kind::Explicit { values } => Some(values.len()),
            _ => None,
        }
    }

    /// Short name of the decay kind, for reports.
    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            Kind::Algebraic { .. } => "algebraic",
            Kind::Exponential { .. } => "exponential",
            Kind::DoubleExponential { .. } => "double-exponential",
            Kind::Explicit { .. } => "explicit",
        }
    }

    /// Decay parameters (alpha, beta) when the kind has them.
    pub fn decay_params(&self) -> (Option<f64>, Option<f64>) {
        match &self.kind {
            Kind::Algebraic { alpha } => (Some(*alpha), None),
            Kind::Exponential { alpha, beta } => (Some(*alpha), Some(*beta)),
            Kind::DoubleExponential { alpha } => (Some(*alpha), None),
            Kind::Explicit { .. } => (None, None),
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 {
            return Err(Error::OutOfRange { index: 0, limit: 1 });
        }
        if let Kind::Explicit { values } = &self.kind {
            if i > values.len() {
                return Err(Error::OutOfRange {
                    index: i,
                    limit: values.len(),
                });
            }
        }
        Ok(())
    }

    /// lambda_i for i >= 1. May underflow to zero for extreme indices of the
    /// fast-decaying kinds; `log_eigenvalue` stays exact much further.
    pub fn eigenvalue(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        Ok(match &self.kind {
            Kind::Algebraic { alpha } => (i as f64).powf(-alpha),
            Kind::Exponential { alpha, beta } => (-alpha * (i as f64).powf(*beta)).exp(),
            Kind::DoubleExponential { alpha } => (-(alpha * i as f64).exp()).exp(),
            Kind::Explicit { values } => values[i - 1],
        })
    }

    /// ln lambda_i.
    pub fn log_eigenvalue(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        Ok(match &self.kind {
            Kind::Algebraic { alpha } => -alpha * (i as f64).ln(),
            Kind::Exponential { alpha, beta } => -alpha * (i as f64).powf(*beta),
            Kind::DoubleExponential { alpha } => -(alpha * i as f64).exp(),
            Kind::Explicit { values } => values[i - 1].ln(),
        })
    }

    /// Sum_{j<=d} 1/lambda_j in the linear domain. Errors with the log of the
    /// value when the sum exceeds the f64 range.
    pub fn inv_sum(&self, d: usize) -> Result<f64> {
        if d == 0 {
            return Err(Error::OutOfRange { index: 0, limit: 1 });
        }
        self.check_index(d)?;
        // Kahan summation; individual terms can be large without the sum overflowing.
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for j in 1..=d {
            let term = (-self.log_eigenvalue(j)?).exp();
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        if !sum.is_finite() {
            return Err(Error::Overflow {
                log_value: self.log_inv_sum(d)?,
            });
        }
        Ok(sum)
    }

    /// ln of Sum_{j<=d} 1/lambda_j, computed stably via log-sum-exp.
    pub fn log_inv_sum(&self, d: usize) -> Result<f64> {
        if d == 0 {
            return Err(Error::OutOfRange { index: 0, limit: 1 });
        }
        self.check_index(d)?;
        let mut max = f64::NEG_INFINITY;
        for j in 1..=d {
            max = max.max(-self.log_eigenvalue(j)?);
        }
        let mut acc = 0.0f64;
        for j in 1..=d {
            acc += (-self.log_eigenvalue(j)? - max).exp();
        }
        Ok(max + acc.ln())
    }

    /// Sum_{j<=d} ln lambda_j.
    pub fn log_product(&self, d: usize) -> Result<f64> {
        if d == 0 {
            return Err(Error::OutOfRange { index: 0, limit: 1 });
        }
        self.check_index(d)?;
        let mut acc = 0.0f64;
        for j in 1..=d {
            acc += self.log_eigenvalue(j)?;
        }
        Ok(acc)
    }

    /// Sum_{j>d} lambda_j to relative tolerance `rel_tol`. The stopping index
    /// is chosen by an analytic remainder bound (integral comparison for the
    /// algebraic and exponential kinds, geometric domination for the
    /// double-exponential kind), never by a fixed iteration cap.
    pub fn tail_sum(&self, d: usize, rel_tol: f64) -> Result<f64> {
        if !(rel_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol must be positive, got {rel_tol}"
            )));
        }
        match &self.kind {
            Kind::Explicit { values } => {
                if d >= values.len() {
                    return Ok(0.0);
                }
                let mut sum = 0.0;
                for &v in &values[d..] {
                    sum += v;
                }
                Ok(sum)
            }
            Kind::Algebraic { alpha } => Ok(algebraic_tail(*alpha, d, rel_tol)),
            Kind::Exponential { alpha, beta } => Ok(exponential_tail(*alpha, *beta, d, rel_tol)),
            Kind::DoubleExponential { alpha } => Ok(double_exponential_tail(*alpha, d, rel_tol)),
        }
    }

    /// Full trace Sum_j lambda_j.
    pub fn trace(&self, rel_tol: f64) -> Result<f64> {
        self.tail_sum(0, rel_tol)
    }

    /// True when the linear-domain inverse sum up to `d` stays representable.
    pub fn inv_sum_in_range(&self, d: usize) -> Result<bool> {
        Ok(self.log_inv_sum(d)? < LN_F64_MAX)
    }
}

/// Tail of Sum j^(-alpha) beyond d via Euler-Maclaurin from a cut point N:
/// explicit terms up to N-1, then the integral plus correction terms, with
/// the first omitted term bounding the error.
fn algebraic_tail(alpha: f64, d: usize, rel_tol: f64) -> f64 {
    let a = alpha;
    let em_tail = |nf: f64| -> f64 {
        nf.powf(1.0 - a) / (a - 1.0) + 0.5 * nf.powf(-a) + a * nf.powf(-a - 1.0) / 12.0
            - a * (a + 1.0) * (a + 2.0) * nf.powf(-a - 3.0) / 720.0
    };
    let em_err = |nf: f64| -> f64 {
        a * (a + 1.0) * (a + 2.0) * (a + 3.0) * (a + 4.0) * nf.powf(-a - 5.0) / 30240.0
    };

    let mut cut = (d + 1).max(16);
    let mut partial = 0.0f64;
    let mut summed_to = d; // explicit terms cover d+1 ..= summed_to
    loop {
        for j in (summed_to + 1)..cut {
            partial += (j as f64).powf(-a);
        }
        summed_to = cut - 1;
        let nf = cut as f64;
        let total = partial + em_tail(nf);
        if em_err(nf) <= rel_tol * total {
            return total;
        }
        cut *= 2;
    }
}

/// Tail of Sum exp(-alpha j^beta) beyond d. Remainder after summing through N:
///   integral_N^inf exp(-alpha x^beta) dx
///     <= N^(1-beta) exp(-alpha N^beta) / (beta (alpha - max(0, (1-beta)/beta) / N^beta)),
/// valid once the denominator is positive (always, for beta >= 1).
fn exponential_tail(alpha: f64, beta: f64, d: usize, rel_tol: f64) -> f64 {
    let c = (1.0 - beta) / beta;
    let mut partial = 0.0f64;
    let mut n = d;
    loop {
        n += 1;
        partial += (-alpha * (n as f64).powf(beta)).exp();
        let nf = n as f64;
        let u0 = nf.powf(beta);
        let denom = alpha - c.max(0.0) / u0;
        if denom > 0.0 {
            let remainder = nf.powf(1.0 - beta) * (-alpha * u0).exp() / (beta * denom);
            if remainder <= rel_tol * partial {
                return partial;
            }
        }
    }
}

/// Tail of Sum exp(-exp(alpha j)) beyond d. Term ratios decrease, so the
/// remainder after N is dominated by the geometric series at the next ratio.
fn double_exponential_tail(alpha: f64, d: usize, rel_tol: f64) -> f64 {
    let lambda = |j: usize| (-(alpha * j as f64).exp()).exp();
    let mut partial = 0.0f64;
    let mut n = d;
    loop {
        n += 1;
        partial += lambda(n);
        let next = lambda(n + 1);
        if next == 0.0 {
            return partial;
        }
        let ratio = ((alpha * (n + 1) as f64).exp() - (alpha * (n + 2) as f64).exp()).exp();
        let remainder = next / (1.0 - ratio);
        if remainder <= rel_tol * partial {
            return partial;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(a.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn algebraic_eigenvalue_closed_form() {
        let s = SpectrumProfile::algebraic(2.0).unwrap();
        assert_eq!(s.eigenvalue(3).unwrap(), 1.0 / 9.0);
    }

    #[test]
    fn exponential_eigenvalue_closed_form() {
        let s = SpectrumProfile::exponential(1.0, 1.0).unwrap();
        assert!(close(s.eigenvalue(2).unwrap(), (-2.0f64).exp(), 1e-15));
    }

    #[test]
    fn explicit_eigenvalue_read_back() {
        let s = SpectrumProfile::explicit(vec![1.0, 0.5]).unwrap();
        assert_eq!(s.eigenvalue(1).unwrap(), 1.0);
    }

    #[test]
    fn explicit_index_beyond_list_errors() {
        let s = SpectrumProfile::explicit(vec![1.0, 0.5]).unwrap();
        assert!(matches!(
            s.eigenvalue(3),
            Err(Error::OutOfRange { index: 3, limit: 2 })
        ));
    }

    #[test]
    fn algebraic_requires_alpha_above_one() {
        assert!(SpectrumProfile::algebraic(1.0).is_err());
        assert!(SpectrumProfile::algebraic(0.5).is_err());
    }

    #[test]
    fn inv_sum_small_cases() {
        let s = SpectrumProfile::algebraic(2.0).unwrap();
        assert_eq!(s.inv_sum(2).unwrap(), 5.0);
        let e = SpectrumProfile::exponential(1.0, 1.0).unwrap();
        let expect = std::f64::consts::E + std::f64::consts::E.powi(2);
        assert!(close(e.inv_sum(2).unwrap(), expect, 1e-14));
    }

    #[test]
    fn inv_sum_matches_brute_force_loop() {
        // Independent oracle: direct term-by-term accumulation.
        let s = SpectrumProfile::algebraic(3.0).unwrap();
        let mut oracle = 0.0f64;
        for j in 1..=10u32 {
            oracle += (j as f64).powi(3);
        }
        assert!(close(s.inv_sum(10).unwrap(), oracle, 1e-14));
    }

    #[test]
    fn inv_sum_overflow_reports_log() {
        let s = SpectrumProfile::exponential(1.0, 1.0).unwrap();
        match s.inv_sum(800) {
            Err(Error::Overflow { log_value }) => {
                // log of sum_{j<=800} e^j = 800 + ln(1/(1 - e^-1)) + o(1)
                let expect = 800.0 + (1.0 / (1.0 - (-1.0f64).exp())).ln();
                assert!((log_value - expect).abs() < 1e-6, "log_value={log_value}");
            }
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn tail_sum_basel() {
        let s = SpectrumProfile::algebraic(2.0).unwrap();
        let expect = std::f64::consts::PI.powi(2) / 6.0 - 1.0;
        assert!(close(s.tail_sum(1, 1e-10).unwrap(), expect, 1e-10));
    }

    #[test]
    fn tail_sum_empty_tail_is_zero() {
        let s = SpectrumProfile::explicit(vec![0.5, 0.25, 0.25]).unwrap();
        assert_eq!(s.tail_sum(3, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn tail_sum_geometric_oracle() {
        // sum_{j>=6} e^-j = e^-6 / (1 - e^-1)
        let s = SpectrumProfile::exponential(1.0, 1.0).unwrap();
        let expect = (-6.0f64).exp() / (1.0 - (-1.0f64).exp());
        assert!(close(s.tail_sum(5, 1e-12).unwrap(), expect, 1e-11));
    }

    #[test]
    fn tail_sum_high_cutoff_oracle_sub_beta_one() {
        // beta < 1 exercises the corrected integral remainder.
        let s = SpectrumProfile::exponential(1.5, 0.5).unwrap();
        let mut oracle = 0.0f64;
        for j in 3..4000usize {
            oracle += (-1.5 * (j as f64).sqrt()).exp();
        }
        assert!(close(s.tail_sum(2, 1e-10).unwrap(), oracle, 1e-9));
    }

    #[test]
    fn log_product_closed_forms() {
        let s = SpectrumProfile::algebraic(2.0).unwrap();
        assert!(close(s.log_product(3).unwrap(), -2.0 * 6.0f64.ln(), 1e-14));
        let e = SpectrumProfile::exponential(1.0, 1.0).unwrap();
        assert!(close(e.log_product(4).unwrap(), -10.0, 1e-14));
        let x = SpectrumProfile::explicit(vec![0.25]).unwrap();
        assert!(close(x.log_product(1).unwrap(), 0.25f64.ln(), 1e-15));
    }

    #[test]
    fn trace_telescopes() {
        for s in [
            SpectrumProfile::algebraic(2.5).unwrap(),
            SpectrumProfile::exponential(0.7, 1.3).unwrap(),
            SpectrumProfile::double_exponential(0.9).unwrap(),
        ] {
            let total = s.trace(1e-11).unwrap();
            for d in [1usize, 3, 7] {
                let mut head = 0.0;
                for j in 1..=d {
                    head += s.eigenvalue(j).unwrap();
                }
                let rebuilt = head + s.tail_sum(d, 1e-11).unwrap();
                assert!(close(rebuilt, total, 1e-9), "d={d} rebuilt={rebuilt} total={total}");
            }
        }
    }

    fn arb_profile() -> impl Strategy<Value = SpectrumProfile> {
        prop_oneof![
            (1.01f64..4.0).prop_map(|a| SpectrumProfile::algebraic(a).unwrap()),
            ((0.05f64..3.0), (0.2f64..2.5))
                .prop_map(|(a, b)| SpectrumProfile::exponential(a, b).unwrap()),
            (0.05f64..1.5).prop_map(|a| SpectrumProfile::double_exponential(a).unwrap()),
            proptest::collection::vec(0.01f64..10.0, 1..12).prop_map(|mut v| {
                v.sort_by(|x, y| y.partial_cmp(x).unwrap());
                SpectrumProfile::explicit(v).unwrap()
            }),
        ]
    }

    proptest! {
        #[test]
        fn eigenvalues_nonincreasing(s in arb_profile(), i in 1usize..20) {
            let limit = s.len().unwrap_or(usize::MAX);
            if i + 1 <= limit {
                let a = s.log_eigenvalue(i).unwrap();
                let b = s.log_eigenvalue(i + 1).unwrap();
                prop_assert!(b <= a + 1e-12);
            }
        }

        #[test]
        fn log_product_consistent_with_eigenvalue(s in arb_profile(), d in 1usize..12) {
            let limit = s.len().unwrap_or(usize::MAX);
            if d + 1 <= limit {
                let diff = s.log_product(d + 1).unwrap() - s.log_product(d).unwrap();
                let expect = s.log_eigenvalue(d + 1).unwrap();
                prop_assert!((diff - expect).abs() <= 1e-12 * expect.abs().max(1.0));
            }
        }
    }
}
