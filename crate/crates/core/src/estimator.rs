//! The histogram estimator on a tensor grid in eigencoordinates, and the
//! parameter-selection rules that size it.
//!
//! The grid covers the box `D = { |x_i| <= sqrt(R lambda_i), i <= d }`. Each
//! axis interval is split into `n_i` equal cells, half-open on the right
//! except the final cell, so the cells partition `D` exactly. A fitted
//! estimator stores per-cell output means keyed by the mixed-radix flattened
//! cell index; memory scales with occupied cells, not the full grid.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{Dataset, NoiseKind};
use crate::spectrum::SpectrumProfile;

const MAX_CELLS: u64 = 1 << 62;

/// Tensor-grid partition of the box D.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistogramPartition {
    spectrum: SpectrumProfile,
    d: usize,
    r_box: f64,
    n_per_axis: Vec<usize>,
    half_widths: Vec<f64>,
    n_cells: u64,
}

impl HistogramPartition {
    pub fn new(
        spectrum: SpectrumProfile,
        d: usize,
        r_box: f64,
        n_per_axis: Vec<usize>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("partition dimension must be >= 1".into()));
        }
        if n_per_axis.len() != d {
            return Err(Error::InvalidParameter(format!(
                "need one cell count per axis: got {} counts for d = {d}",
                n_per_axis.len()
            )));
        }
        if !(r_box > 0.0) || !r_box.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "box scale must be positive and finite, got {r_box}"
            )));
        }
        if n_per_axis.iter().any(|&n| n == 0) {
            return Err(Error::InvalidParameter(
                "every axis needs at least one cell".into(),
            ));
        }
        let mut n_cells: u64 = 1;
        for &n in &n_per_axis {
            n_cells = n_cells
                .checked_mul(n as u64)
                .filter(|&v| v <= MAX_CELLS)
                .ok_or_else(|| {
                    Error::InvalidParameter("total cell count exceeds the supported range".into())
                })?;
        }
        let half_widths = (1..=d)
            .map(|i| spectrum.eigenvalue(i).map(|l| (r_box * l).sqrt()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spectrum,
            d,
            r_box,
            n_per_axis,
            half_widths,
            n_cells,
        })
    }

    pub fn spectrum(&self) -> &SpectrumProfile {
        &self.spectrum
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn r_box(&self) -> f64 {
        self.r_box
    }

    pub fn n_per_axis(&self) -> &[usize] {
        &self.n_per_axis
    }

    pub fn n_cells(&self) -> u64 {
        self.n_cells
    }

    /// Half-width `sqrt(R lambda_i)` of axis `i` (0-based).
    pub fn half_width(&self, axis: usize) -> f64 {
        self.half_widths[axis]
    }

    /// Flattened index of the cell containing `x`, or `None` when `x` is
    /// outside D. Intervals are half-open `[l, r)` except the last, which is
    /// closed on the right. Coordinates beyond the vector length read as 0.
    pub fn cell_index(&self, x: &[f64]) -> Option<u64> {
        let mut index: u64 = 0;
        let mut stride: u64 = 1;
        for i in 0..self.d {
            let xi = x.get(i).copied().unwrap_or(0.0);
            let s = self.half_widths[i];
            if xi < -s || xi > s {
                return None;
            }
            let n = self.n_per_axis[i];
            let width = 2.0 * s / n as f64;
            let mut j = ((xi + s) / width).floor() as i64;
            if j < 0 {
                j = 0;
            }
            if j >= n as i64 {
                j = n as i64 - 1; // right endpoint belongs to the last cell
            }
            index += stride * j as u64;
            stride *= n as u64;
        }
        Some(index)
    }

    /// Per-axis cell coordinates of a flattened index.
    pub fn multi_index(&self, mut cell: u64) -> Vec<usize> {
        let mut multi = Vec::with_capacity(self.d);
        for &n in &self.n_per_axis {
            multi.push((cell % n as u64) as usize);
            cell /= n as u64;
        }
        multi
    }

    /// Axis interval `[left, right]` of cell coordinate `j` on `axis`.
    pub fn axis_interval(&self, axis: usize, j: usize) -> (f64, f64) {
        let s = self.half_widths[axis];
        let width = 2.0 * s / self.n_per_axis[axis] as f64;
        (-s + j as f64 * width, -s + (j + 1) as f64 * width)
    }

    /// Coordinatewise midpoint of a cell, as a length-`d` vector.
    pub fn cell_midpoint(&self, cell: u64) -> Vec<f64> {
        self.multi_index(cell)
            .iter()
            .enumerate()
            .map(|(axis, &j)| {
                let s = self.half_widths[axis];
                let width = 2.0 * s / self.n_per_axis[axis] as f64;
                -s + (j as f64 + 0.5) * width
            })
            .collect()
    }

    /// `sum_{j<=d} lambda_j / n_j^2`, the squared within-cell scale.
    pub fn cell_scale_sq(&self) -> Result<f64> {
        let mut acc = 0.0;
        for i in 1..=self.d {
            let l = self.spectrum.eigenvalue(i)?;
            let n = self.n_per_axis[i - 1] as f64;
            acc += l / (n * n);
        }
        Ok(acc)
    }
}

/// Output-coefficient truncation rank of a fitted estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Truncation {
    Full,
    Rank(usize),
}

impl Truncation {
    pub fn rank(&self) -> Option<usize> {
        match self {
            Truncation::Full => None,
            Truncation::Rank(r) => Some(*r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CellMean {
    count: usize,
    mean: Vec<f64>,
}

/// Piecewise-constant estimator: the fitted mean of the observations in each
/// occupied cell, zero elsewhere. Empty cells and points outside D predict
/// the zero vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistogramEstimator {
    partition: HistogramPartition,
    truncation: Truncation,
    coeff_dim: usize,
    cells: BTreeMap<u64, CellMean>,
}

/// One-pass cell means. Points outside D belong to no cell and are dropped;
/// coefficients beyond the truncation rank are zeroed in the stored means.
pub fn fit(
    dataset: &Dataset,
    partition: HistogramPartition,
    truncation: Truncation,
) -> Result<HistogramEstimator> {
    if dataset.is_empty() {
        return Err(Error::InvalidParameter("dataset is empty".into()));
    }
    let coeff_dim = dataset.coeff_dim;
    let keep = match truncation {
        Truncation::Full => coeff_dim,
        Truncation::Rank(r) => r.min(coeff_dim),
    };
    let mut cells: BTreeMap<u64, CellMean> = BTreeMap::new();
    for (x, y) in dataset.inputs.iter().zip(&dataset.outputs) {
        let Some(cell) = partition.cell_index(x) else {
            continue;
        };
        let entry = cells.entry(cell).or_insert_with(|| CellMean {
            count: 0,
            mean: vec![0.0; coeff_dim],
        });
        entry.count += 1;
        for j in 0..keep {
            entry.mean[j] += y[j];
        }
    }
    for stats in cells.values_mut() {
        let inv = 1.0 / stats.count as f64;
        for v in stats.mean.iter_mut() {
            *v *= inv;
        }
    }
    Ok(HistogramEstimator {
        partition,
        truncation,
        coeff_dim,
        cells,
    })
}

impl HistogramEstimator {
    pub fn partition(&self) -> &HistogramPartition {
        &self.partition
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn coeff_dim(&self) -> usize {
        self.coeff_dim
    }

    pub fn occupied_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_count(&self, cell: u64) -> usize {
        self.cells.get(&cell).map_or(0, |c| c.count)
    }

    /// Stored mean of `x`'s cell; the zero vector outside D or in an
    /// unoccupied cell.
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        match self.partition.cell_index(x) {
            Some(cell) => match self.cells.get(&cell) {
                Some(stats) => stats.mean.clone(),
                None => vec![0.0; self.coeff_dim],
            },
            None => vec![0.0; self.coeff_dim],
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Internal(format!("serialize: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("estimator json: {e}")))
    }
}

/// Which selection rule chose the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionRegime {
    /// Grid-in-dimension-d rule for a flat finite spectrum: `n_i = floor(k^(1/(2+d)))`
    /// per axis with a pinned box scale.
    FiniteDim,
    /// Exponential-decay rule for the working dimension.
    Exponential,
    /// Algebraic-decay rule for the working dimension.
    Algebraic,
    /// Largest feasible dimension by direct scan.
    Scan,
    /// Fully pinned grid.
    Pinned,
}

/// Optional overrides for the selection rules. Fields mirror the symbolic
/// constants the selection formulas leave free.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeHints {
    pub regime: Option<SelectionRegime>,
    /// Pin the working dimension.
    pub d: Option<usize>,
    /// Pin the white-noise truncation rank.
    pub r: Option<usize>,
    /// Box scale for the finite-dimensional rule (default 3, which makes the
    /// box cover the uniform law's support exactly).
    pub r_box: Option<f64>,
    /// Pin the per-axis cell counts outright (requires `d` and `r_box`).
    pub n_per_axis: Option<Vec<usize>>,
    /// Feasibility constant in the exponential-regime dimension rule.
    pub c_prime: f64,
    /// Smoothness scale used by the algebraic white-noise rank rule.
    pub t: f64,
    /// Also require the total cell count to stay at or below m, so a
    /// stratified design can place at least one point per cell.
    pub cells_at_most_m: bool,
}

impl Default for RegimeHints {
    fn default() -> Self {
        Self {
            regime: None,
            d: None,
            r: None,
            r_box: None,
            n_per_axis: None,
            c_prime: 1.0,
            t: 1.0,
            cells_at_most_m: false,
        }
    }
}

/// Inputs to parameter selection.
#[derive(Debug, Clone)]
pub struct SelectionInputs<'a> {
    pub m: u64,
    pub sigma: f64,
    pub spectrum: &'a SpectrumProfile,
    pub b_bound: f64,
    pub lipschitz: f64,
    pub p: f64,
    pub noise: NoiseKind,
    pub hints: RegimeHints,
}

/// A resolved grid: dimension, cell counts, box scale, truncation rank, and
/// the feasibility margin `c sqrt(lambda_d) - 1 >= 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParameterSelection {
    pub regime: SelectionRegime,
    pub d: usize,
    /// Dimension the regime rule asked for before feasibility reductions.
    pub d_regime_target: usize,
    /// True when feasibility forced `d` below the regime target.
    pub d_shrunk: bool,
    pub c: f64,
    pub n_per_axis: Vec<usize>,
    pub n_cells: u64,
    pub r_box: f64,
    /// White-noise truncation rank (None for the trace-class model).
    pub rank: Option<usize>,
    pub feasibility_margin: f64,
    /// Effective sample-to-noise ratio `m / sigma^2` (white noise: `m / (r sigma^2)`).
    pub k_effective: f64,
    pub c_prime: f64,
}

impl ParameterSelection {
    pub fn partition(&self, spectrum: &SpectrumProfile) -> Result<HistogramPartition> {
        HistogramPartition::new(spectrum.clone(), self.d, self.r_box, self.n_per_axis.clone())
    }

    pub fn truncation(&self) -> Truncation {
        match self.rank {
            Some(r) => Truncation::Rank(r),
            None => Truncation::Full,
        }
    }
}

fn d_cap(spectrum: &SpectrumProfile) -> usize {
    spectrum.len().unwrap_or(64).min(64)
}

/// `ln c(d)` of the grid-scale formula:
/// `c = (k / sqrt(lambda_1...lambda_d))^((p+2)/((p+2)d+4)) * (B^(2p) L^4 d^4)^(1/((p+2)d+4))`.
fn log_c(
    spectrum: &SpectrumProfile,
    d: usize,
    ln_k: f64,
    b_bound: f64,
    lipschitz: f64,
    p: f64,
) -> Result<f64> {
    let lp = spectrum.log_product(d)?;
    let cb = 2.0 * p * b_bound.ln() + 4.0 * lipschitz.ln() + 4.0 * (d as f64).ln();
    Ok(((p + 2.0) * (ln_k - 0.5 * lp) + cb) / ((p + 2.0) * d as f64 + 4.0))
}

/// Smallest `ln k` satisfying `c(d) sqrt(lambda_d) >= 1`.
fn min_ln_k(
    spectrum: &SpectrumProfile,
    d: usize,
    b_bound: f64,
    lipschitz: f64,
    p: f64,
) -> Result<f64> {
    let lp = spectrum.log_product(d)?;
    let cb = 2.0 * p * b_bound.ln() + 4.0 * lipschitz.ln() + 4.0 * (d as f64).ln();
    let ll_d = spectrum.log_eigenvalue(d)?;
    Ok(0.5 * lp - (cb + ((p + 2.0) * d as f64 + 4.0) * 0.5 * ll_d) / (p + 2.0))
}

fn per_axis_counts(
    spectrum: &SpectrumProfile,
    d: usize,
    ln_c: f64,
) -> Result<Option<Vec<usize>>> {
    let mut counts = Vec::with_capacity(d);
    for i in 1..=d {
        let v = (ln_c + 0.5 * spectrum.log_eigenvalue(i)?).exp();
        if !v.is_finite() || v >= 1e15 {
            return Err(Error::InvalidParameter(
                "per-axis cell count exceeds the supported range".into(),
            ));
        }
        if v < 1.0 {
            return Ok(None); // infeasible at this d
        }
        counts.push(v.floor() as usize);
    }
    Ok(Some(counts))
}

fn total_cells(counts: &[usize]) -> Option<u64> {
    let mut acc: u64 = 1;
    for &n in counts {
        acc = acc.checked_mul(n as u64)?;
        if acc > MAX_CELLS {
            return None;
        }
    }
    Some(acc)
}

/// Box scale `R = (B d^(1/p) / (L sqrt(sum lambda_j / n_j^2)))^(2p/(p+2))`.
fn box_scale(
    spectrum: &SpectrumProfile,
    counts: &[usize],
    b_bound: f64,
    lipschitz: f64,
    p: f64,
) -> Result<f64> {
    let d = counts.len();
    let mut s = 0.0f64;
    for i in 1..=d {
        let l = spectrum.eigenvalue(i)?;
        let n = counts[i - 1] as f64;
        s += l / (n * n);
    }
    if s <= 0.0 {
        return Err(Error::Internal("degenerate within-cell scale".into()));
    }
    Ok((b_bound * (d as f64).powf(1.0 / p) / (lipschitz * s.sqrt())).powf(2.0 * p / (p + 2.0)))
}

/// Smallest integer rank with `ln r >= target`.
fn smallest_rank_with_log_at_least(target: f64) -> usize {
    if target <= 0.0 {
        return 1;
    }
    let mut r = target.exp().ceil().max(1.0) as usize;
    while r > 1 && ((r - 1) as f64).ln() >= target {
        r -= 1;
    }
    if (r as f64).ln() < target {
        r += 1;
    }
    r
}

fn white_rank(spectrum: &SpectrumProfile, ln_k0: f64, hints: &RegimeHints) -> Result<usize> {
    if let Some(r) = hints.r {
        if r == 0 {
            return Err(Error::InvalidParameter("truncation rank must be >= 1".into()));
        }
        return Ok(r);
    }
    let (alpha, beta) = spectrum.decay_params();
    match spectrum.kind_name() {
        "exponential" => {
            let beta = beta.unwrap();
            Ok(smallest_rank_with_log_at_least(
                ln_k0.max(0.0).powf(beta / (beta + 1.0)),
            ))
        }
        "algebraic" => {
            let alpha = alpha.unwrap();
            if !(hints.t > 0.0) {
                return Err(Error::InvalidParameter(
                    "algebraic white-noise rank rule needs a positive smoothness scale t".into(),
                ));
            }
            if ln_k0 <= 1.0 || ln_k0.ln() <= 0.0 {
                return Ok(1);
            }
            let target = (alpha - 1.0) / (2.0 * hints.t) * (ln_k0 / ln_k0.ln()).ln();
            Ok(smallest_rank_with_log_at_least(target))
        }
        _ => Err(Error::InvalidParameter(
            "white-noise rank rule is defined for algebraic and exponential decay; pin the rank for other spectra"
                .into(),
        )),
    }
}

/// Dimension the regime rule targets before feasibility enforcement.
fn regime_target_d(
    regime: SelectionRegime,
    spectrum: &SpectrumProfile,
    ln_k: f64,
    p: f64,
    hints: &RegimeHints,
    b_bound: f64,
    lipschitz: f64,
) -> Result<usize> {
    let cap = d_cap(spectrum);
    match regime {
        SelectionRegime::Exponential => {
            let (_, beta) = spectrum.decay_params();
            let beta = beta.ok_or_else(|| {
                Error::InvalidParameter("exponential rule needs an exponential spectrum".into())
            })?;
            if !(hints.c_prime > 0.0) {
                return Err(Error::InvalidParameter("c_prime must be positive".into()));
            }
            let raw = (ln_k.max(0.0) / hints.c_prime).powf(1.0 / (beta + 1.0));
            Ok((raw.floor() as usize).clamp(1, cap))
        }
        SelectionRegime::Algebraic => {
            let (alpha, _) = spectrum.decay_params();
            let alpha = alpha.ok_or_else(|| {
                Error::InvalidParameter("algebraic rule needs an algebraic spectrum".into())
            })?;
            if ln_k <= 1.0 {
                return Ok(1);
            }
            let raw = 4.0 / ((p + 2.0) + alpha * p) * ln_k / ln_k.ln();
            Ok((raw.floor() as usize).clamp(1, cap))
        }
        SelectionRegime::Scan => {
            let mut best = None;
            for d in 1..=cap {
                let ln_c = log_c(spectrum, d, ln_k, b_bound, lipschitz, p)?;
                if ln_c + 0.5 * spectrum.log_eigenvalue(d)? >= 0.0 {
                    best = Some(d);
                }
            }
            best.ok_or_else(|| feasibility_error(spectrum, 1, b_bound, lipschitz, p))
        }
        SelectionRegime::FiniteDim | SelectionRegime::Pinned => Ok(hints.d.unwrap_or(1)),
    }
}

fn feasibility_error(
    spectrum: &SpectrumProfile,
    d: usize,
    b_bound: f64,
    lipschitz: f64,
    p: f64,
) -> Error {
    let min_k = min_ln_k(spectrum, d, b_bound, lipschitz, p)
        .map(f64::exp)
        .unwrap_or(f64::NAN);
    Error::InfeasibleSelection {
        d,
        inequality: "c sqrt(lambda_d) >= 1 (grid scale supports at least one cell per axis)"
            .into(),
        min_k,
    }
}

/// Chooses, in order: the working dimension `d` (regime rule, then reduced
/// until feasible unless pinned), the grid scale `c`, per-axis counts
/// `n_i = floor(c sqrt(lambda_i))`, the box scale `R`, and for white noise
/// the truncation rank `r` (after which `k` is recomputed as `m/(r sigma^2)`
/// and the grid re-derived).
pub fn select_parameters(inputs: &SelectionInputs) -> Result<ParameterSelection> {
    let SelectionInputs {
        m,
        sigma,
        spectrum,
        b_bound,
        lipschitz,
        p,
        noise,
        hints,
    } = inputs;
    let (m, sigma, b_bound, lipschitz, p) = (*m, *sigma, *b_bound, *lipschitz, *p);
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "p must lie in [1, infinity), got {p}"
        )));
    }

    // Fully pinned grid: no formulas, no sigma requirement.
    if let Some(counts) = &hints.n_per_axis {
        let d = counts.len();
        let r_box = hints.r_box.ok_or_else(|| {
            Error::InvalidParameter("pinned cell counts require a pinned box scale".into())
        })?;
        if let Some(hd) = hints.d {
            if hd != d {
                return Err(Error::InvalidParameter(format!(
                    "pinned d = {hd} disagrees with {d} pinned cell counts"
                )));
            }
        }
        let n_cells = total_cells(counts)
            .ok_or_else(|| Error::InvalidParameter("pinned grid is too large".into()))?;
        let c = counts[0] as f64 / spectrum.eigenvalue(1)?.sqrt();
        let margin = counts[d - 1] as f64 / spectrum.eigenvalue(d)?.sqrt() - 1.0;
        let rank = match noise {
            NoiseKind::White => Some(hints.r.unwrap_or(1)),
            NoiseKind::Hilbert => None,
        };
        return Ok(ParameterSelection {
            regime: SelectionRegime::Pinned,
            d,
            d_regime_target: d,
            d_shrunk: false,
            c,
            n_per_axis: counts.clone(),
            n_cells,
            r_box,
            rank,
            feasibility_margin: margin,
            k_effective: if sigma > 0.0 {
                m as f64 / (sigma * sigma)
            } else {
                f64::INFINITY
            },
            c_prime: hints.c_prime,
        });
    }

    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(
            "sigma must be positive unless the grid is fully pinned".into(),
        ));
    }

    let ln_k0 = (m as f64).ln() - 2.0 * sigma.ln();
    let rank = match noise {
        NoiseKind::White => Some(white_rank(spectrum, ln_k0, hints)?),
        NoiseKind::Hilbert => None,
    };
    let ln_k = match rank {
        Some(r) => ln_k0 - (r as f64).ln(),
        None => ln_k0,
    };
    let k_effective = ln_k.exp();

    let regime = hints.regime.unwrap_or(match spectrum.kind_name() {
        "exponential" => SelectionRegime::Exponential,
        "algebraic" => SelectionRegime::Algebraic,
        _ => SelectionRegime::Scan,
    });

    // Finite-dimensional rule: per-axis counts floor(k^(1/(2+d))), pinned box.
    if regime == SelectionRegime::FiniteDim {
        let d = hints.d.unwrap_or_else(|| spectrum.len().unwrap_or(1)).max(1);
        let r_box = hints.r_box.unwrap_or(3.0);
        let c = k_effective.powf(1.0 / (2.0 + d as f64));
        let mut per_axis = (c.floor() as usize).max(1);
        let mut counts = vec![per_axis; d];
        if hints.cells_at_most_m {
            while per_axis > 1 && total_cells(&counts).map_or(true, |n| n > m) {
                per_axis -= 1;
                counts = vec![per_axis; d];
            }
        }
        let n_cells = total_cells(&counts)
            .ok_or_else(|| Error::InvalidParameter("grid too large".into()))?;
        let margin = per_axis as f64 / spectrum.eigenvalue(d)?.sqrt() - 1.0;
        return Ok(ParameterSelection {
            regime,
            d,
            d_regime_target: d,
            d_shrunk: false,
            c,
            n_per_axis: counts,
            n_cells,
            r_box,
            rank,
            feasibility_margin: margin,
            k_effective,
            c_prime: hints.c_prime,
        });
    }

    let d_target = regime_target_d(regime, spectrum, ln_k, p, hints, b_bound, lipschitz)?;

    if let Some(d) = hints.d {
        // Pinned dimension: feasibility is checked, never adjusted.
        if d == 0 || d > d_cap(spectrum) {
            return Err(Error::InvalidParameter(format!("pinned d = {d} out of range")));
        }
        let ln_c = log_c(spectrum, d, ln_k, b_bound, lipschitz, p)?;
        let counts = per_axis_counts(spectrum, d, ln_c)?
            .ok_or_else(|| feasibility_error(spectrum, d, b_bound, lipschitz, p))?;
        let n_cells = total_cells(&counts)
            .ok_or_else(|| Error::InvalidParameter("grid too large".into()))?;
        let margin = (ln_c + 0.5 * spectrum.log_eigenvalue(d)?).exp() - 1.0;
        let r_box = box_scale(spectrum, &counts, b_bound, lipschitz, p)?;
        return Ok(ParameterSelection {
            regime,
            d,
            d_regime_target: d,
            d_shrunk: false,
            c: ln_c.exp(),
            n_per_axis: counts,
            n_cells,
            r_box,
            rank,
            feasibility_margin: margin,
            k_effective,
            c_prime: hints.c_prime,
        });
    }

    // Reduce d from the regime target until the grid is feasible.
    let mut d = d_target;
    loop {
        let ln_c = log_c(spectrum, d, ln_k, b_bound, lipschitz, p)?;
        let counts = per_axis_counts(spectrum, d, ln_c)?;
        let feasible = match &counts {
            None => false,
            Some(counts) => match total_cells(counts) {
                None => false,
                Some(n) => !hints.cells_at_most_m || n <= m,
            },
        };
        if feasible {
            let counts = counts.unwrap();
            let n_cells = total_cells(&counts).unwrap();
            let margin = (ln_c + 0.5 * spectrum.log_eigenvalue(d)?).exp() - 1.0;
            let r_box = box_scale(spectrum, &counts, b_bound, lipschitz, p)?;
            return Ok(ParameterSelection {
                regime,
                d,
                d_regime_target: d_target,
                d_shrunk: d < d_target,
                c: ln_c.exp(),
                n_per_axis: counts,
                n_cells,
                r_box,
                rank,
                feasibility_margin: margin,
                k_effective,
                c_prime: hints.c_prime,
            });
        }
        if d == 1 {
            return Err(feasibility_error(spectrum, 1, b_bound, lipschitz, p));
        }
        d -= 1;
    }
}
