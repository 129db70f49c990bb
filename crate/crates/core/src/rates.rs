//! Closed-form theoretical bound curves for overlaying against measured
//! risk.
//!
//! All unspecified proportionality constants default to 1 and travel with
//! every emitted curve; downstream comparisons look at shapes (slopes,
//! exponents), never absolute constants. Evaluation works in the log domain
//! so eigenvalue products and inverse sums cannot overflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lowerbound::{fano_factor, log_vg_target, FanoKnobs, FANO_ALPHA};
use crate::measure::LawConstants;
use crate::noise::NoiseKind;
use crate::spectrum::SpectrumProfile;

/// Inputs to the upper-bound display.
#[derive(Debug, Clone)]
pub struct UpperBoundInputs<'a> {
    pub spectrum: &'a SpectrumProfile,
    pub m: f64,
    pub sigma: f64,
    pub b_bound: f64,
    pub lipschitz: f64,
    pub p: f64,
    pub noise: NoiseKind,
    /// Truncation rank; required for white noise, ignored otherwise.
    pub rank: Option<usize>,
    /// Smoothness scale of the truncation term `B r^-t`.
    pub t: f64,
}

/// Upper-bound value at dimension `d`:
/// `(k / sqrt(lambda_1..lambda_d))^(-2/((p+2)d+4)) (B^2p L^4 d^4)^(d/(2((p+2)d+4)))
///  + L sqrt(tail(d))`, plus `B r^-t` under white noise (where `k = m/(r sigma^2)`).
/// Errors when the feasibility inequality fails at `(m, sigma, d[, r])`.
pub fn eval_upper_bound(inputs: &UpperBoundInputs, d: usize) -> Result<f64> {
    let UpperBoundInputs {
        spectrum,
        m,
        sigma,
        b_bound,
        lipschitz,
        p,
        noise,
        rank,
        t,
    } = inputs;
    let (m, sigma, b_bound, lipschitz, p, t) = (*m, *sigma, *b_bound, *lipschitz, *p, *t);
    if d == 0 {
        return Err(Error::InvalidParameter("d must be >= 1".into()));
    }
    if !(m > 0.0) || !(sigma > 0.0) || !(b_bound > 0.0) || !(lipschitz > 0.0) {
        return Err(Error::InvalidParameter(
            "m, sigma, B, L must all be positive".into(),
        ));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "p must lie in [1, infinity), got {p}"
        )));
    }
    let rank = match noise {
        NoiseKind::White => {
            let r = rank.ok_or_else(|| {
                Error::InvalidParameter("white-noise bound needs a truncation rank".into())
            })?;
            if r == 0 {
                return Err(Error::InvalidParameter("rank must be >= 1".into()));
            }
            Some(r)
        }
        NoiseKind::Hilbert => None,
    };
    let ln_k = m.ln() - 2.0 * sigma.ln() - rank.map_or(0.0, |r| (r as f64).ln());

    // Feasibility: k >= (lambda_1..lambda_d)^(1/2) /
    //   ((B^2p L^4 d^4)^(1/(p+2)) lambda_d^(((p+2)d+4)/(2(p+2))))
    let lp = spectrum.log_product(d)?;
    let cb = 2.0 * p * b_bound.ln() + 4.0 * lipschitz.ln() + 4.0 * (d as f64).ln();
    let denom = (p + 2.0) * d as f64 + 4.0;
    let min_ln_k = 0.5 * lp - (cb + denom * 0.5 * spectrum.log_eigenvalue(d)?) / (p + 2.0);
    if ln_k < min_ln_k {
        return Err(Error::InfeasibleSelection {
            d,
            inequality:
                "m/sigma^2 >= (lambda_1..lambda_d)^(1/2) / ((B^2p L^4 d^4)^(1/(p+2)) lambda_d^(((p+2)d+4)/(2(p+2))))"
                    .into(),
            min_k: min_ln_k.exp() * rank.map_or(1.0, |r| r as f64),
        });
    }

    let ln_main = -2.0 / denom * (ln_k - 0.5 * lp) + d as f64 / (2.0 * denom) * cb;
    let tail = spectrum.tail_sum(d, 1e-9)?;
    let mut value = ln_main.exp() + lipschitz * tail.sqrt();
    if let Some(r) = rank {
        value += b_bound * (r as f64).powf(-t);
    }
    Ok(value)
}

/// Scans `d = 1..=d_max` and returns the smallest feasible bound value.
pub fn best_upper_bound(inputs: &UpperBoundInputs, d_max: usize) -> Result<(usize, f64)> {
    let cap = inputs.spectrum.len().unwrap_or(d_max).min(d_max);
    let mut best: Option<(usize, f64)> = None;
    let mut last_err = None;
    for d in 1..=cap {
        match eval_upper_bound(inputs, d) {
            Ok(value) => {
                if best.map_or(true, |(_, b)| value < b) {
                    best = Some((d, value));
                }
            }
            Err(err) => last_err = Some(err),
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or_else(|| Error::Infeasible("no feasible dimension".into()))
    })
}

/// Inputs to the lower-bound display.
#[derive(Debug, Clone)]
pub struct LowerBoundInputs<'a> {
    pub spectrum: &'a SpectrumProfile,
    pub m: f64,
    pub sigma: f64,
    pub lipschitz: f64,
    pub b_bound: f64,
    pub p: f64,
    pub noise: NoiseKind,
    /// Top noise coefficient variance (trace-class model).
    pub upsilon_top: f64,
    pub law: LawConstants,
    pub knobs: FanoKnobs,
}

/// The evaluated display with the width it used and its audit components.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LowerBoundEval {
    pub d: usize,
    pub h_star: f64,
    pub value: f64,
    /// floor(a/h)^d, the packed hypothesis count before coding.
    pub n_centers: f64,
    /// ln of the coded word count.
    pub log_m_words: f64,
    pub kl_budget: f64,
    pub s_star: f64,
    pub fano_ok: bool,
}

/// Lower-bound display at dimension `d` with explicit constants:
/// `prop * factor(M) * (c0/2) (L/sqrt(sum 1/lambda)) (iota/(p+1))^(d/p) h*`,
/// `h* = min(a/8, (L^2 m/(c a^d sigma^2 sum 1/lambda))^(-1/(2+d)))`.
/// This reproduces, in closed form, exactly what the materialized
/// instance pipeline computes for the same constants.
pub fn eval_lower_bound(inputs: &LowerBoundInputs, d: usize) -> Result<LowerBoundEval> {
    let LowerBoundInputs {
        spectrum,
        m,
        sigma,
        lipschitz,
        b_bound,
        p,
        noise,
        upsilon_top,
        law,
        knobs,
    } = inputs;
    let (m, sigma, lipschitz, b_bound, p) = (*m, *sigma, *lipschitz, *b_bound, *p);
    if d == 0 {
        return Err(Error::InvalidParameter("d must be >= 1".into()));
    }
    if !(m > 0.0) || !(sigma > 0.0) || !(lipschitz > 0.0) || !(b_bound > 0.0) {
        return Err(Error::InvalidParameter(
            "m, sigma, B, L must all be positive".into(),
        ));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "p must lie in [1, infinity), got {p}"
        )));
    }
    let ln_inv_sum = spectrum.log_inv_sum(d)?;
    let min_b = ((law.a * lipschitz / 8.0).ln() - 0.5 * ln_inv_sum).exp();
    if min_b > b_bound {
        return Err(Error::Infeasible(format!(
            "bump amplitude condition fails at d={d}: requires B >= {min_b:.6e}, got {b_bound:.6e}"
        )));
    }
    let kl_c = match noise {
        NoiseKind::Hilbert => 1.0 / (2.0 * upsilon_top),
        NoiseKind::White => 0.5,
    };
    let budget_c = knobs
        .budget_c_override
        .unwrap_or_else(|| (7.0f64 / 8.0).powi(d as i32) * (2.0f64).ln() / (128.0 * kl_c));
    let a = law.a;
    let ln_h = (budget_c.ln() + d as f64 * a.ln() + 2.0 * sigma.ln() + ln_inv_sum
        - 2.0 * lipschitz.ln()
        - m.ln())
        / (2.0 + d as f64);
    let h_star = (a / 8.0).min(ln_h.exp());

    let per_axis = (a / h_star).floor();
    let ln_n = d as f64 * per_axis.ln();
    let ln_m_words = log_vg_target(ln_n);
    let kl_budget = (kl_c.ln() + 2.0 * lipschitz.ln() + 2.0 * h_star.ln() + m.ln()
        - 2.0 * sigma.ln()
        - ln_inv_sum)
        .exp();
    let c0 = knobs.c0_override.unwrap_or_else(|| {
        ((d as f64 / p) * (h_star.ln() - a.ln()) + (1.0 / p) * (ln_n - 8.0f64.ln())).exp()
    });
    let s_star = 0.5
        * c0
        * (lipschitz.ln() - 0.5 * ln_inv_sum + (d as f64 / p) * (law.iota / (p + 1.0)).ln()
            + h_star.ln())
        .exp();
    let fano_ok = kl_budget <= FANO_ALPHA * ln_m_words;
    Ok(LowerBoundEval {
        d,
        h_star,
        value: if fano_ok {
            knobs.prop_const * fano_factor(ln_m_words) * s_star
        } else {
            0.0
        },
        n_centers: ln_n.exp(),
        log_m_words: ln_m_words,
        kl_budget,
        s_star,
        fano_ok,
    })
}

/// Scans `d = 1..=d_max` (skipping dimensions where the amplitude condition
/// fails) and returns the largest bound.
pub fn best_lower_bound(inputs: &LowerBoundInputs, d_max: usize) -> Result<LowerBoundEval> {
    let cap = inputs.spectrum.len().unwrap_or(d_max).min(d_max);
    let mut best: Option<LowerBoundEval> = None;
    let mut last_err = None;
    for d in 1..=cap {
        match eval_lower_bound(inputs, d) {
            Ok(eval) => {
                if best.map_or(true, |b| eval.value > b.value) {
                    best = Some(eval);
                }
            }
            Err(err) => last_err = Some(err),
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or_else(|| Error::Infeasible("no admissible dimension".into()))
    })
}

/// Leading-order negative-log-risk expressions per decay regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RateRegime {
    /// `C (ln k)^(beta/(beta+1))`; two-sided for beta >= 1, lower side only
    /// for 0 < beta < 1 (non-tight there; pair with `AlgUpper` for the band).
    ExpLogMinimax { beta: f64 },
    /// `C sqrt(ln k)`: the generic upper expression for the negative log risk
    /// under slow decay.
    AlgUpper,
    /// `C ((alpha-1)/2) ln(ln k / ln ln k)`: the algebraic-decay lower
    /// expression for the negative log risk.
    AlgLower { alpha: f64 },
    /// `C ln k / ln ln k` under double-exponential decay.
    DoubleExp,
    /// `C ln k / (2 + d)`: flat d-dimensional recovery.
    FiniteDim { d: usize },
}

impl RateRegime {
    pub fn name(&self) -> &'static str {
        match self {
            RateRegime::ExpLogMinimax { .. } => "exp-log-minimax",
            RateRegime::AlgUpper => "alg-upper",
            RateRegime::AlgLower { .. } => "alg-lower",
            RateRegime::DoubleExp => "double-exp",
            RateRegime::FiniteDim { .. } => "finite-dim",
        }
    }

    fn k_min(&self) -> f64 {
        match self {
            RateRegime::AlgLower { .. } | RateRegime::DoubleExp => {
                std::f64::consts::E.powf(std::f64::consts::E)
            }
            _ => 1.0,
        }
    }
}

/// The regime's leading-order expression at `k = m/sigma^2`, scaled by
/// `constant`. Errors below the regime's minimum k.
pub fn asymptotic_log_rate(regime: RateRegime, k: f64, constant: f64) -> Result<f64> {
    if !(k > regime.k_min()) {
        return Err(Error::InvalidParameter(format!(
            "k = {k} is at or below the regime minimum {}",
            regime.k_min()
        )));
    }
    let ln_k = k.ln();
    Ok(match regime {
        RateRegime::ExpLogMinimax { beta } => {
            if !(beta > 0.0) {
                return Err(Error::InvalidParameter("beta must be positive".into()));
            }
            constant * ln_k.powf(beta / (beta + 1.0))
        }
        RateRegime::AlgUpper => constant * ln_k.sqrt(),
        RateRegime::AlgLower { alpha } => {
            if !(alpha > 1.0) {
                return Err(Error::InvalidParameter("alpha must exceed 1".into()));
            }
            constant * (alpha - 1.0) / 2.0 * (ln_k / ln_k.ln()).ln()
        }
        RateRegime::DoubleExp => constant * ln_k / ln_k.ln(),
        RateRegime::FiniteDim { d } => constant * ln_k / (2.0 + d as f64),
    })
}
