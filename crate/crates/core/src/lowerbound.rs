//! Information-theoretic lower-bound instances: binary codes with large
//! pairwise Hamming separation, packed bump families indexed by the code
//! words, divergence budgets, and the resulting minimax lower-bound values.
//!
//! Construction is randomized search with exhaustive verification: a code is
//! never returned until all of its claimed properties have been checked over
//! every pair. The bound arithmetic itself is deterministic, so the same
//! numbers are reproducible without the materialized instance (see the
//! closed-form twin in [`crate::rates`]).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{Design, DesignKind, InputMeasure, LawConstants};
use crate::noise::NoiseKind;
use crate::operators::{BumpFamilyParams, ScalarFunctional, TestOperator};
use crate::spectrum::SpectrumProfile;

/// Fano mixing constant; must stay below 1/8.
pub const FANO_ALPHA: f64 = 1.0 / 16.0;

/// Largest supported code length. Word count grows like 2^(n/8), so the
/// exhaustive pairwise verification (and memory) pins this to desk scale.
pub const MAX_CODE_LEN: usize = 96;

const DEFAULT_RETRY_BUDGET: usize = 1_000_000;

/// A verified binary code: the all-zeros word first, at least 2^(n/8) more,
/// all pairs at Hamming distance n/8 or better.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VGCode {
    n: usize,
    words: Vec<u128>,
    min_distance: usize,
}

impl VGCode {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of words beyond the all-zeros word.
    pub fn m_count(&self) -> usize {
        self.words.len() - 1
    }

    pub fn words(&self) -> &[u128] {
        &self.words
    }

    /// Word `j` as booleans (bit i = coordinate i).
    pub fn word_bits(&self, j: usize) -> Vec<bool> {
        (0..self.n).map(|i| (self.words[j] >> i) & 1 == 1).collect()
    }

    pub fn word_string(&self, j: usize) -> String {
        (0..self.n)
            .map(|i| if (self.words[j] >> i) & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    /// Verified minimum pairwise Hamming distance.
    pub fn min_distance(&self) -> usize {
        self.min_distance
    }
}

pub fn hamming(a: u128, b: u128) -> usize {
    (a ^ b).count_ones() as usize
}

/// Target word count `ceil(2^(n/8))`.
pub fn vg_target_m(n: usize) -> u64 {
    (2.0f64).powf(n as f64 / 8.0).ceil() as u64
}

/// `ln` of the target word count, exact ceil for countable sizes.
pub fn log_vg_target(ln_n: f64) -> f64 {
    let n = ln_n.exp();
    if n <= 8000.0 {
        ((2.0f64).powf(n.round() / 8.0).ceil()).ln()
    } else {
        n / 8.0 * (2.0f64).ln()
    }
}

/// Builds a code of length `n >= 8` by seeded rejection sampling against the
/// `ceil(n/8)` Hamming floor, then verifies every property exhaustively over
/// all pairs before returning.
pub fn vg_code(n: usize, rng: &mut ChaCha8Rng) -> Result<VGCode> {
    vg_code_with_budget(n, rng, DEFAULT_RETRY_BUDGET)
}

pub fn vg_code_with_budget(n: usize, rng: &mut ChaCha8Rng, budget: usize) -> Result<VGCode> {
    if n < 8 {
        return Err(Error::InvalidParameter(format!(
            "code length must be >= 8, got {n}"
        )));
    }
    if n > MAX_CODE_LEN {
        return Err(Error::InvalidParameter(format!(
            "code length {n} exceeds the supported desk-scale maximum {MAX_CODE_LEN}"
        )));
    }
    let floor = n.div_ceil(8);
    let target = vg_target_m(n) as usize;
    let mask: u128 = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    let mut words: Vec<u128> = vec![0];
    let mut draws = 0usize;
    while words.len() < target + 1 {
        if draws >= budget {
            return Err(Error::RetryBudget(draws));
        }
        draws += 1;
        let candidate = rng.random::<u128>() & mask;
        if words.iter().all(|&w| hamming(w, candidate) >= floor) {
            words.push(candidate);
        }
    }
    // Exhaustive verification; an invalid code is an internal error, never a
    // silent return.
    if words[0] != 0 {
        return Err(Error::Internal("first code word is not all-zeros".into()));
    }
    if (words.len() - 1) < target {
        return Err(Error::Internal("code is smaller than its target".into()));
    }
    let mut min_distance = n;
    for i in 0..words.len() {
        for j in (i + 1)..words.len() {
            let dist = hamming(words[i], words[j]);
            if (dist as f64) < n as f64 / 8.0 {
                return Err(Error::Internal(format!(
                    "verification failed: words {i} and {j} at distance {dist} < {n}/8"
                )));
            }
            min_distance = min_distance.min(dist);
        }
    }
    Ok(VGCode {
        n,
        words,
        min_distance,
    })
}

/// Regular grid of `floor(a/h)^d` bump centers with spacing `2h`, first
/// center at `-a + h` on every axis. Every center's h-box (sup norm) lies in
/// `[-a, a]^d` and the open boxes are pairwise disjoint.
pub fn packing_centers(a: f64, h: f64, d: usize) -> Result<Vec<Vec<f64>>> {
    if !(h > 0.0) || !(a > 0.0) || h > a / 8.0 + 1e-15 {
        return Err(Error::InvalidParameter(format!(
            "packing requires 0 < h/a <= 1/8, got h={h}, a={a}"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("packing dimension must be >= 1".into()));
    }
    let per_axis = (a / h).floor() as usize;
    let total = per_axis
        .checked_pow(d as u32)
        .filter(|&t| t <= 1 << 20)
        .ok_or_else(|| {
            Error::InvalidParameter("packing would materialize too many centers".into())
        })?;
    let axis: Vec<f64> = (0..per_axis)
        .map(|t| -a + h + 2.0 * h * t as f64)
        .collect();
    let mut centers = Vec::with_capacity(total);
    let mut index = vec![0usize; d];
    loop {
        centers.push(index.iter().map(|&t| axis[t]).collect());
        let mut axis_i = 0;
        loop {
            if axis_i == d {
                return Ok(centers);
            }
            index[axis_i] += 1;
            if index[axis_i] < per_axis {
                break;
            }
            index[axis_i] = 0;
            axis_i += 1;
        }
    }
}

/// Overridable constants of the bound arithmetic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FanoKnobs {
    /// Separation constant; default is the exact value the uniform-law
    /// computation yields, `(h/a)^(d/p) (n/8)^(1/p)`.
    pub c0_override: Option<f64>,
    /// Display constant in the width formula; default
    /// `(7/8)^d ln 2 / (128 kl_c)`, which certifies the realized divergence
    /// condition at the optimized width.
    pub budget_c_override: Option<f64>,
    /// Proportionality constant multiplying the final bound.
    pub prop_const: f64,
}

impl Default for FanoKnobs {
    fn default() -> Self {
        Self {
            c0_override: None,
            budget_c_override: None,
            prop_const: 1.0,
        }
    }
}

/// Inputs for instance construction and width optimization.
#[derive(Debug, Clone)]
pub struct FanoParams<'a> {
    pub d: usize,
    pub m: u64,
    pub sigma: f64,
    pub lipschitz: f64,
    pub b_bound: f64,
    pub spectrum: &'a SpectrumProfile,
    pub law: LawConstants,
    pub p: f64,
    pub noise: NoiseKind,
    /// Top eigenvalue of the noise coefficient covariance (trace-class model).
    pub upsilon_top: f64,
    pub knobs: FanoKnobs,
}

impl FanoParams<'_> {
    fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParameter("d must be >= 1".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidParameter("sigma must be positive".into()));
        }
        if !(self.lipschitz > 0.0) || !(self.b_bound > 0.0) {
            return Err(Error::InvalidParameter("B and L must be positive".into()));
        }
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "p must lie in [1, infinity), got {}",
                self.p
            )));
        }
        if self.noise == NoiseKind::Hilbert && !(self.upsilon_top > 0.0) {
            return Err(Error::InvalidParameter(
                "trace-class model needs a positive top noise eigenvalue".into(),
            ));
        }
        Ok(())
    }

    /// Divergence chain constant: `1/(2 upsilon_1)` for the trace-class
    /// model, `1/2` for white noise.
    pub fn kl_c(&self) -> f64 {
        match self.noise {
            NoiseKind::Hilbert => 1.0 / (2.0 * self.upsilon_top),
            NoiseKind::White => 0.5,
        }
    }

    fn budget_c(&self) -> f64 {
        self.knobs.budget_c_override.unwrap_or_else(|| {
            (7.0f64 / 8.0).powi(self.d as i32) * (2.0f64).ln() / (128.0 * self.kl_c())
        })
    }

    /// The admissibility condition `a L / (8 sqrt(sum 1/lambda_i)) <= B`,
    /// with the smallest admissible B named on failure.
    fn check_b_condition(&self) -> Result<f64> {
        let ln_inv_sum = self.spectrum.log_inv_sum(self.d)?;
        let min_b = ((self.law.a * self.lipschitz / 8.0).ln() - 0.5 * ln_inv_sum).exp();
        if min_b > self.b_bound {
            return Err(Error::Infeasible(format!(
                "bump amplitude condition fails at d={}: requires B >= {min_b:.6e}, got {:.6e}",
                self.d, self.b_bound
            )));
        }
        Ok(ln_inv_sum)
    }
}

/// `sqrt(M)/(1 + sqrt(M)) * (1 - 2 alpha - 2 sqrt(alpha / ln M))` at
/// `alpha = 1/16`, stable for very large M.
pub fn fano_factor(ln_m: f64) -> f64 {
    let s = 1.0 / (1.0 + (-0.5 * ln_m).exp());
    s * (1.0 - 2.0 * FANO_ALPHA - 2.0 * (FANO_ALPHA / ln_m).sqrt())
}

/// A packed, coded, lifted family of hypotheses with its separation and
/// divergence budget.
#[derive(Debug, Clone)]
pub struct FanoInstance {
    pub d: usize,
    pub h: f64,
    pub m: u64,
    pub sigma: f64,
    pub lipschitz: f64,
    pub b_bound: f64,
    pub p: f64,
    pub noise: NoiseKind,
    pub upsilon_top: f64,
    pub law: LawConstants,
    pub spectrum: SpectrumProfile,
    pub centers: Vec<Vec<f64>>,
    pub code: VGCode,
    /// Scalar bump functionals F_0 .. F_M (F_0 identically zero).
    pub functionals: Vec<ScalarFunctional>,
    /// Lifted operators G_j = F_j * e_1.
    pub operators: Vec<TestOperator>,
    pub ln_inv_sum: f64,
    pub kl_c: f64,
    pub kl_budget: f64,
    pub log_m_words: f64,
    pub c0: f64,
    pub s_star: f64,
    pub prop_const: f64,
    pub fano_ok: bool,
    pub lower_bound_value: f64,
    pub diagnostic: Option<String>,
}

/// Assembles packing -> code -> bump family -> lifted operators, computes
/// the separation `s*` and the divergence budget, and records whether the
/// mixing condition `budget <= (1/16) ln M` holds. A failed condition is not
/// an error: the instance comes back with a zero bound and a diagnostic.
pub fn build_instance(params: &FanoParams, h: f64, rng: &mut ChaCha8Rng) -> Result<FanoInstance> {
    params.validate()?;
    let a = params.law.a;
    if !(h > 0.0) || h > a / 8.0 + 1e-15 {
        return Err(Error::InvalidParameter(format!(
            "bump width must satisfy 0 < h/a <= 1/8, got h={h}, a={a}"
        )));
    }
    let ln_inv_sum = params.check_b_condition()?;

    let centers = packing_centers(a, h, params.d)?;
    let n = centers.len();
    let code = vg_code(n, rng)?;

    let mut functionals = Vec::with_capacity(code.words().len());
    let mut operators = Vec::with_capacity(code.words().len());
    for j in 0..code.words().len() {
        let bump = BumpFamilyParams::new(
            params.d,
            h,
            a,
            centers.clone(),
            code.word_bits(j),
            params.lipschitz,
            params.spectrum.clone(),
        )?;
        let f = ScalarFunctional::bump(bump);
        // Case split on the noise model picks the output direction: the top
        // noise eigenvector for the trace-class model, the first basis
        // vector for white noise. Both are coefficient index 1.
        operators.push(TestOperator::lift(f.clone(), 1)?);
        functionals.push(f);
    }

    let kl_c = params.kl_c();
    let kl_budget = (kl_c.ln()
        + 2.0 * params.lipschitz.ln()
        + 2.0 * h.ln()
        + (params.m as f64).ln()
        - 2.0 * params.sigma.ln()
        - ln_inv_sum)
        .exp();
    let log_m_words = (code.m_count() as f64).ln();
    let fano_ok = kl_budget <= FANO_ALPHA * log_m_words;

    let c0 = params.knobs.c0_override.unwrap_or_else(|| {
        ((params.d as f64 / params.p) * (h.ln() - a.ln())
            + (1.0 / params.p) * ((n as f64).ln() - 8.0f64.ln()))
        .exp()
    });
    let s_star = 0.5
        * c0
        * (params.lipschitz.ln() - 0.5 * ln_inv_sum
            + (params.d as f64 / params.p) * (params.law.iota / (params.p + 1.0)).ln()
            + h.ln())
        .exp();
    let lower_bound_value = if fano_ok {
        params.knobs.prop_const * fano_factor(log_m_words) * s_star
    } else {
        0.0
    };
    Ok(FanoInstance {
        d: params.d,
        h,
        m: params.m,
        sigma: params.sigma,
        lipschitz: params.lipschitz,
        b_bound: params.b_bound,
        p: params.p,
        noise: params.noise,
        upsilon_top: params.upsilon_top,
        law: params.law,
        spectrum: params.spectrum.clone(),
        centers,
        code,
        functionals,
        operators,
        ln_inv_sum,
        kl_c,
        kl_budget,
        log_m_words,
        c0,
        s_star,
        prop_const: params.knobs.prop_const,
        fano_ok,
        lower_bound_value,
        diagnostic: (!fano_ok).then(|| {
            format!(
                "divergence budget {kl_budget:.6e} exceeds {FANO_ALPHA} * ln M = {:.6e}; the width h = {h} is too large for m = {}",
                FANO_ALPHA * log_m_words,
                params.m
            )
        }),
    })
}

/// The final bound `prop * factor(M) * s*`; zero when the mixing condition
/// failed at assembly.
pub fn fano_lower_bound(instance: &FanoInstance) -> f64 {
    if !instance.fano_ok {
        return 0.0;
    }
    instance.prop_const * fano_factor(instance.log_m_words) * instance.s_star
}

/// Optimized width and the bound it yields.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OptimizedWidth {
    pub h_star: f64,
    pub bound: f64,
    pub budget_c: f64,
}

/// Width rule `h = min(a/8, (L^2 m / (c a^d sigma^2 sum 1/lambda_j))^(-1/(2+d)))`
/// with the display constant `c` chosen so the realized mixing condition is
/// certified with margin at least zero at `h_star`. The returned bound is the
/// same deterministic arithmetic the materialized instance would produce.
pub fn optimize_h(params: &FanoParams) -> Result<OptimizedWidth> {
    params.validate()?;
    let ln_inv_sum = params.check_b_condition()?;
    let a = params.law.a;
    let budget_c = params.budget_c();
    let ln_h = (budget_c.ln() + (params.d as f64) * a.ln() + 2.0 * params.sigma.ln() + ln_inv_sum
        - 2.0 * params.lipschitz.ln()
        - (params.m as f64).ln())
        / (2.0 + params.d as f64);
    let h_star = (a / 8.0).min(ln_h.exp());
    let bound = closed_form_bound(params, h_star, ln_inv_sum);
    Ok(OptimizedWidth {
        h_star,
        bound,
        budget_c,
    })
}

/// Deterministic replica of the instance arithmetic at width `h`: packing
/// count by floor, target word count, mixing check, separation, factor.
pub(crate) fn closed_form_bound(params: &FanoParams, h: f64, ln_inv_sum: f64) -> f64 {
    let a = params.law.a;
    let per_axis = (a / h).floor();
    let ln_n = params.d as f64 * per_axis.ln();
    let ln_m_words = log_vg_target(ln_n);
    let kl_budget = (params.kl_c().ln()
        + 2.0 * params.lipschitz.ln()
        + 2.0 * h.ln()
        + (params.m as f64).ln()
        - 2.0 * params.sigma.ln()
        - ln_inv_sum)
        .exp();
    if kl_budget > FANO_ALPHA * ln_m_words {
        return 0.0;
    }
    let c0 = params.knobs.c0_override.unwrap_or_else(|| {
        ((params.d as f64 / params.p) * (h.ln() - a.ln())
            + (1.0 / params.p) * (ln_n - 8.0f64.ln()))
        .exp()
    });
    let s_star = 0.5
        * c0
        * (params.lipschitz.ln() - 0.5 * ln_inv_sum
            + (params.d as f64 / params.p) * (params.law.iota / (params.p + 1.0)).ln()
            + h.ln())
        .exp();
    params.knobs.prop_const * fano_factor(ln_m_words) * s_star
}

/// Exact divergence of hypothesis `j` against the zero hypothesis for a
/// materialized design. Fixed designs use the Gaussian mean-shift form over
/// the evaluated points; random-box designs use the budget-style bound
/// through the sup norm, which is what the argument actually consumes.
pub fn exact_kl(instance: &FanoInstance, j: usize, design: &Design) -> Result<f64> {
    if j >= instance.functionals.len() {
        return Err(Error::OutOfRange {
            index: j,
            limit: instance.functionals.len() - 1,
        });
    }
    let f = &instance.functionals[j];
    let denom = match instance.noise {
        NoiseKind::Hilbert => 2.0 * instance.sigma.powi(2) * instance.upsilon_top,
        NoiseKind::White => 2.0 * instance.sigma.powi(2),
    };
    match &design.kind {
        DesignKind::FixedStratified { .. } => {
            let mut acc = 0.0;
            for x in &design.points {
                let v = f.eval(x);
                acc += v * v;
            }
            Ok(acc / denom)
        }
        DesignKind::RandomBox { .. } => {
            let sup = f.sup_bound();
            Ok(design.len() as f64 * sup * sup / denom)
        }
    }
}

/// The budget `kl_c L^2 h^2 m / (sigma^2 sum 1/lambda_j)` every per-hypothesis
/// divergence is bounded by.
pub fn kl_budget_value(instance: &FanoInstance) -> f64 {
    instance.kl_budget
}

/// Monte Carlo separation of a hypothesis pair against its analytic floor.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SeparationCheck {
    pub mc_distance: f64,
    pub mc_std_err: f64,
    pub floor: f64,
    pub hamming: usize,
}

/// Estimates `||F_j - F_k||_p` under the input measure and returns it with
/// the closed-form floor
/// `(L / sqrt(sum 1/lambda)) (2b/(p+1))^(d/p) h^(d/p+1) H(j,k)^(1/p)`.
/// The floor is an equality for the uniform law and one-sided for others.
/// `p = infinity` evaluates the sampled max against `(L/sqrt(sum)) h`
/// (experimental).
pub fn separation_check(
    instance: &FanoInstance,
    j: usize,
    k: usize,
    p: f64,
    measure: &InputMeasure,
    n_mc: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SeparationCheck> {
    if j == k {
        return Err(Error::InvalidParameter(
            "separation needs two distinct hypotheses".into(),
        ));
    }
    let limit = instance.functionals.len() - 1;
    if j > limit || k > limit {
        return Err(Error::OutOfRange {
            index: j.max(k),
            limit,
        });
    }
    if measure.sim_dim() < instance.d {
        return Err(Error::InvalidParameter(format!(
            "measure must simulate at least d = {} coordinates",
            instance.d
        )));
    }
    if n_mc < 2 {
        return Err(Error::InvalidParameter("n_mc must be >= 2".into()));
    }
    let dist = hamming(instance.code.words()[j], instance.code.words()[k]);
    let fj = &instance.functionals[j];
    let fk = &instance.functionals[k];
    let base = instance.lipschitz.ln() - 0.5 * instance.ln_inv_sum;
    let (floor, mc_distance, mc_std_err);
    if p.is_infinite() {
        floor = (base + instance.h.ln()).exp() * if dist >= 1 { 1.0 } else { 0.0 };
        let mut max = 0.0f64;
        for _ in 0..n_mc {
            let x = measure.sample_one(rng);
            max = max.max((fj.eval(&x) - fk.eval(&x)).abs());
        }
        mc_distance = max;
        mc_std_err = 0.0;
    } else {
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p must lie in [1, infinity], got {p}"
            )));
        }
        let dp = instance.d as f64 / p;
        floor = (base
            + dp * (2.0 * instance.law.b / (p + 1.0)).ln()
            + (dp + 1.0) * instance.h.ln()
            + (dist as f64).ln() / p)
            .exp();
        let mut mean = 0.0f64;
        let mut m2 = 0.0f64;
        for i in 0..n_mc {
            let x = measure.sample_one(rng);
            let e = (fj.eval(&x) - fk.eval(&x)).abs().powf(p);
            let delta = e - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (e - mean);
        }
        let se_mean = (m2 / (n_mc as f64 - 1.0)).sqrt() / (n_mc as f64).sqrt();
        if mean > 0.0 {
            mc_distance = mean.powf(1.0 / p);
            mc_std_err = mc_distance / (p * mean) * se_mean;
        } else {
            mc_distance = 0.0;
            mc_std_err = 0.0;
        }
    }
    Ok(SeparationCheck {
        mc_distance,
        mc_std_err,
        floor,
        hamming: dist,
    })
}

/// Audit export: code words, centers, constants, bound values.
#[derive(Debug, Clone, Serialize)]
pub struct FanoInstanceExport {
    pub d: usize,
    pub h: f64,
    pub m: u64,
    pub sigma: f64,
    pub lipschitz: f64,
    pub b_bound: f64,
    pub p: f64,
    pub noise: NoiseKind,
    pub law: LawConstants,
    pub centers: Vec<Vec<f64>>,
    pub code_words: Vec<String>,
    pub code_min_distance: usize,
    pub m_words: usize,
    pub c0: f64,
    pub kl_c: f64,
    pub kl_budget: f64,
    pub s_star: f64,
    pub prop_const: f64,
    pub fano_ok: bool,
    pub lower_bound_value: f64,
    pub diagnostic: Option<String>,
}

impl FanoInstance {
    pub fn export(&self) -> FanoInstanceExport {
        FanoInstanceExport {
            d: self.d,
            h: self.h,
            m: self.m,
            sigma: self.sigma,
            lipschitz: self.lipschitz,
            b_bound: self.b_bound,
            p: self.p,
            noise: self.noise,
            law: self.law,
            centers: self.centers.clone(),
            code_words: (0..self.code.words().len())
                .map(|j| self.code.word_string(j))
                .collect(),
            code_min_distance: self.code.min_distance(),
            m_words: self.code.m_count(),
            c0: self.c0,
            kl_c: self.kl_c,
            kl_budget: self.kl_budget,
            s_star: self.s_star,
            prop_const: self.prop_const,
            fano_ok: self.fano_ok,
            lower_bound_value: self.lower_bound_value,
            diagnostic: self.diagnostic.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::CoordinateLaw;
    use crate::rng::stream;

    #[test]
    fn vg_code_small_cases() {
        let mut rng = stream(61, &[]);
        let code = vg_code(8, &mut rng).unwrap();
        assert!(code.m_count() >= 2);
        assert!(code.min_distance() >= 1);
        assert_eq!(code.words()[0], 0);
        // Hamming identity
        for &w in code.words() {
            assert_eq!(hamming(w, w), 0);
        }
    }

    #[test]
    fn vg_code_sixteen_exhaustive() {
        let mut rng = stream(62, &[]);
        let code = vg_code(16, &mut rng).unwrap();
        assert!(code.m_count() >= 4);
        // independent exhaustive pair scan
        let words = code.words();
        for i in 0..words.len() {
            for j in (i + 1)..words.len() {
                assert!(hamming(words[i], words[j]) >= 2);
            }
        }
    }

    #[test]
    fn vg_code_rejects_out_of_range_lengths() {
        let mut rng = stream(63, &[]);
        assert!(vg_code(7, &mut rng).is_err());
        assert!(vg_code(MAX_CODE_LEN + 1, &mut rng).is_err());
    }

    #[test]
    fn vg_code_deterministic_given_seed() {
        let a = vg_code(24, &mut stream(64, &[])).unwrap();
        let b = vg_code(24, &mut stream(64, &[])).unwrap();
        assert_eq!(a.words(), b.words());
    }

    #[test]
    fn packing_counts_and_layout() {
        let centers = packing_centers(1.0, 0.125, 2).unwrap();
        assert_eq!(centers.len(), 64);
        let line = packing_centers(1.0, 0.125, 1).unwrap();
        let expect: Vec<f64> = (0..8).map(|t| -0.875 + 0.25 * t as f64).collect();
        for (c, e) in line.iter().zip(&expect) {
            assert!((c[0] - e).abs() < 1e-15);
        }
    }

    #[test]
    fn packing_boxes_disjoint_and_contained() {
        let (a, h, d) = (2.0f64, 0.2f64, 2usize);
        let centers = packing_centers(a, h, d).unwrap();
        for c in &centers {
            for &v in c {
                assert!(v - h >= -a - 1e-12 && v + h <= a + 1e-12);
            }
        }
        for i in 0..centers.len() {
            for j in (i + 1)..centers.len() {
                // open boxes disjoint: sup-distance of centers >= 2h
                let linf = centers[i]
                    .iter()
                    .zip(&centers[j])
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0f64, f64::max);
                assert!(linf >= 2.0 * h - 1e-12);
            }
        }
    }

    fn base_params(spectrum: &SpectrumProfile) -> FanoParams<'_> {
        FanoParams {
            d: 1,
            m: 8,
            sigma: 0.5,
            lipschitz: 1.0,
            b_bound: 5.0,
            spectrum,
            law: CoordinateLaw::UniformUnitVariance.constants(),
            p: 2.0,
            noise: NoiseKind::Hilbert,
            upsilon_top: 0.5,
            knobs: FanoKnobs::default(),
        }
    }

    #[test]
    fn fano_factor_matches_direct_arithmetic() {
        // M = 2 case computed by hand from the displayed expression
        let ln2 = (2.0f64).ln();
        let direct = (2.0f64.sqrt() / (1.0 + 2.0f64.sqrt()))
            * (1.0 - 0.125 - 2.0 * (0.0625f64 / ln2).sqrt());
        assert!((fano_factor(ln2) - direct).abs() < 1e-15);
        assert!((fano_factor(ln2) - 0.16078).abs() < 5e-5);
    }

    #[test]
    fn zero_word_hypothesis_has_zero_kl() {
        let spectrum = SpectrumProfile::explicit(vec![1.0]).unwrap();
        let params = base_params(&spectrum);
        let mut rng = stream(65, &[]);
        let instance = build_instance(&params, params.law.a / 8.0, &mut rng).unwrap();
        let design = Design {
            kind: DesignKind::FixedStratified { points_per_cell: 1 },
            points: vec![vec![0.0]],
            m_requested: 1,
            m_effective: 1,
        };
        assert_eq!(exact_kl(&instance, 0, &design).unwrap(), 0.0);
    }

    #[test]
    fn kl_zero_when_hypothesis_misses_design() {
        let spectrum = SpectrumProfile::explicit(vec![1.0]).unwrap();
        let params = base_params(&spectrum);
        let mut rng = stream(66, &[]);
        let instance = build_instance(&params, params.law.a / 8.0, &mut rng).unwrap();
        // a design point outside every bump support: whitened coordinate 0 is
        // at distance >= h from all centers iff it misses each [c - h, c + h]
        let h = instance.h;
        let c0 = instance.centers[0][0];
        let x = vec![(c0 + h) * 1.0]; // boundary of first bump: tent = 0 there
        let design = Design {
            kind: DesignKind::FixedStratified { points_per_cell: 1 },
            points: vec![x],
            m_requested: 1,
            m_effective: 1,
        };
        for j in 0..instance.functionals.len() {
            let f = &instance.functionals[j];
            if f.eval(&design.points[0]) == 0.0 {
                assert_eq!(exact_kl(&instance, j, &design).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn kl_matches_gaussian_mean_shift_oracle_hand_case() {
        // d = 1, one design point at a center, trace-class noise with
        // upsilon_1 = 1/2: KL = (Lh / sqrt(1/lambda_1))^2 / (2 sigma^2 * 1/2)
        let spectrum = SpectrumProfile::explicit(vec![1.0]).unwrap();
        let params = base_params(&spectrum);
        let mut rng = stream(67, &[]);
        let h = params.law.a / 8.0;
        let instance = build_instance(&params, h, &mut rng).unwrap();
        // pick a hypothesis whose first bump is active
        let j = (1..instance.functionals.len())
            .find(|&j| instance.code.word_bits(j)[0])
            .expect("some word activates the first bump");
        let center_x = instance.centers[0][0] * spectrum.eigenvalue(1).unwrap().sqrt();
        let design = Design {
            kind: DesignKind::FixedStratified { points_per_cell: 1 },
            points: vec![vec![center_x]],
            m_requested: 1,
            m_effective: 1,
        };
        let got = exact_kl(&instance, j, &design).unwrap();
        let peak = params.lipschitz * h / (1.0f64 / 1.0).sqrt();
        let expect = peak * peak / (2.0 * params.sigma.powi(2) * 0.5);
        assert!((got - expect).abs() <= 1e-10 * expect, "got {got} expect {expect}");
        // and within the budget
        assert!(got <= instance.kl_budget * (1.0 + 1e-12));
    }

    #[test]
    fn instance_bound_components() {
        let spectrum = SpectrumProfile::explicit(vec![1.0, 0.5]).unwrap();
        let mut params = base_params(&spectrum);
        params.d = 2;
        params.m = 4;
        let mut rng = stream(68, &[]);
        let h = params.law.a / 8.0;
        let instance = build_instance(&params, h, &mut rng).unwrap();
        assert_eq!(instance.centers.len(), 64);
        assert!(instance.code.m_count() >= 256);
        assert_eq!(instance.functionals[0].sup_bound(), 0.0); // theta_0 = 0
        if instance.fano_ok {
            assert!(fano_lower_bound(&instance) > 0.0);
            assert!(
                (fano_lower_bound(&instance) - instance.lower_bound_value).abs()
                    <= 1e-15 * instance.lower_bound_value
            );
        } else {
            assert_eq!(fano_lower_bound(&instance), 0.0);
        }
    }

    #[test]
    fn condition_failed_instance_reports_zero_with_diagnostic() {
        let spectrum = SpectrumProfile::explicit(vec![1.0]).unwrap();
        let mut params = base_params(&spectrum);
        params.m = 100_000_000; // budget blows past alpha ln M at h = a/8
        let mut rng = stream(69, &[]);
        let instance = build_instance(&params, params.law.a / 8.0, &mut rng).unwrap();
        assert!(!instance.fano_ok);
        assert_eq!(fano_lower_bound(&instance), 0.0);
        assert!(instance.diagnostic.is_some());
    }

    #[test]
    fn optimize_h_saturates_and_scales() {
        let spectrum = SpectrumProfile::explicit(vec![1.0]).unwrap();
        let mut params = base_params(&spectrum);
        params.m = 1;
        params.sigma = 10.0; // noisy enough that the width saturates at a/8
        let opt = optimize_h(&params).unwrap();
        assert!((opt.h_star - params.law.a / 8.0).abs() < 1e-15);
        params.sigma = 0.5;

        // in the interior branch, doubling m scales h by 2^(-1/(2+d))
        params.m = 1_000_000;
        let h1 = optimize_h(&params).unwrap().h_star;
        params.m = 2_000_000;
        let h2 = optimize_h(&params).unwrap().h_star;
        let expect = 2.0f64.powf(-1.0 / 3.0);
        assert!(h1 < params.law.a / 8.0);
        assert!(((h2 / h1) - expect).abs() < 1e-12);
    }

    #[test]
    fn optimized_width_instance_satisfies_condition_with_margin() {
        // self-consistency sweep: the materialized instance at h_star always
        // meets the mixing condition
        let spectrum = SpectrumProfile::explicit(vec![1.0, 0.25]).unwrap();
        for (d, m) in [(1usize, 50u64), (1, 5_000), (2, 30), (2, 2_000)] {
            let mut params = base_params(&spectrum);
            params.d = d;
            params.m = m;
            let opt = optimize_h(&params).unwrap();
            // construction caps: skip widths whose packing outgrows the code
            let per_axis = (params.law.a / opt.h_star).floor() as usize;
            if per_axis.pow(d as u32) > MAX_CODE_LEN {
                continue;
            }
            let mut rng = stream(70, &[d as u64, m]);
            let instance = build_instance(&params, opt.h_star, &mut rng).unwrap();
            assert!(
                instance.fano_ok,
                "d={d} m={m}: budget {} vs {}",
                instance.kl_budget,
                FANO_ALPHA * instance.log_m_words
            );
            // and the closed-form twin agrees with the materialized value
            let lower = fano_lower_bound(&instance);
            assert!(
                (opt.bound - lower).abs() <= 1e-12 * lower.max(1e-300),
                "d={d} m={m}: closed form {} vs instance {lower}",
                opt.bound
            );
        }
    }

    #[test]
    fn separation_identical_words_rejected() {
        let spectrum = SpectrumProfile::explicit(vec![1.0]).unwrap();
        let params = base_params(&spectrum);
        let mut rng = stream(71, &[]);
        let instance = build_instance(&params, params.law.a / 8.0, &mut rng).unwrap();
        let measure =
            InputMeasure::new(spectrum.clone(), CoordinateLaw::UniformUnitVariance, 1).unwrap();
        assert!(
            separation_check(&instance, 1, 1, 2.0, &measure, 100, &mut rng).is_err()
        );
    }

    #[test]
    fn separation_floor_is_equality_for_uniform_law() {
        let spectrum = SpectrumProfile::explicit(vec![1.0]).unwrap();
        let params = base_params(&spectrum);
        let mut rng = stream(72, &[]);
        let instance = build_instance(&params, params.law.a / 8.0, &mut rng).unwrap();
        let measure =
            InputMeasure::new(spectrum.clone(), CoordinateLaw::UniformUnitVariance, 1).unwrap();
        let check =
            separation_check(&instance, 1, 2, 2.0, &measure, 400_000, &mut rng).unwrap();
        assert!(
            (check.mc_distance - check.floor).abs() <= 3.0 * check.mc_std_err,
            "mc {} vs floor {} (se {})",
            check.mc_distance,
            check.floor,
            check.mc_std_err
        );
    }

    #[test]
    fn separation_floor_one_sided_for_gaussian_law() {
        let spectrum = SpectrumProfile::explicit(vec![1.0]).unwrap();
        let mut params = base_params(&spectrum);
        params.law = CoordinateLaw::StandardGaussian.constants();
        let mut rng = stream(73, &[]);
        let instance = build_instance(&params, params.law.a / 8.0, &mut rng).unwrap();
        let measure =
            InputMeasure::new(spectrum.clone(), CoordinateLaw::StandardGaussian, 1).unwrap();
        let check =
            separation_check(&instance, 1, 2, 2.0, &measure, 400_000, &mut rng).unwrap();
        assert!(check.mc_distance >= check.floor * (1.0 - 3.0 * check.mc_std_err / check.floor));
    }

    #[test]
    fn kl_budget_bound_over_random_instances() {
        // exact KL per hypothesis stays below the budget for both noise and
        // design kinds
        let spectrum = SpectrumProfile::explicit(vec![1.0, 0.5]).unwrap();
        let mut rng = stream(74, &[]);
        for trial in 0..20u64 {
            let d = 1 + (trial % 2) as usize;
            let noise = if trial % 3 == 0 {
                NoiseKind::White
            } else {
                NoiseKind::Hilbert
            };
            let mut params = base_params(&spectrum);
            params.d = d;
            params.noise = noise;
            params.m = 4 + (trial % 5);
            let h = params.law.a / 8.0;
            let mut crng = stream(75, &[trial]);
            let instance = build_instance(&params, h, &mut crng).unwrap();
            // fixed design: m points inside the whitened box, scaled back
            let mut points = Vec::new();
            for _ in 0..params.m {
                let point: Vec<f64> = (1..=d)
                    .map(|i| {
                        let s = spectrum.eigenvalue(i).unwrap().sqrt();
                        s * rng.random_range(-params.law.a..=params.law.a)
                    })
                    .collect();
                points.push(point);
            }
            let fixed = Design {
                kind: DesignKind::FixedStratified { points_per_cell: 1 },
                points: points.clone(),
                m_requested: params.m,
                m_effective: params.m,
            };
            let random = Design {
                kind: DesignKind::RandomBox { r_box: 1.0, d },
                points,
                m_requested: params.m,
                m_effective: params.m,
            };
            for j in 0..instance.functionals.len().min(8) {
                for design in [&fixed, &random] {
                    let kl = exact_kl(&instance, j, design).unwrap();
                    assert!(
                        kl <= instance.kl_budget * (1.0 + 1e-12),
                        "trial {trial} hypothesis {j}: kl {kl} budget {}",
                        instance.kl_budget
                    );
                }
            }
        }
    }
}
