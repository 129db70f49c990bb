//! Experiment orchestration and artifact emission.
//!
//! Each run writes CSV artifacts (the reproducibility contract: identical
//! config and seed give byte-identical CSV), a JSON mirror with full
//! parameter provenance, and a manifest with the config hash, seed, crate
//! version and wall time.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, ExperimentKind, RateCurveConfig};
use crate::error::{Error, Result};
use crate::lowerbound::{
    self, build_instance, fano_lower_bound, separation_check, vg_code, FanoKnobs, FanoParams,
    MAX_CODE_LEN,
};
use crate::measure::{CoordinateLaw, Design, DesignKind, InputMeasure};
use crate::noise::NoiseKind;
use crate::rates::{self, LowerBoundEval, LowerBoundInputs, UpperBoundInputs};
use crate::risk::{self, RiskCurve, RiskExperiment};
use crate::rng::{derive_seed, stream};
use crate::spectrum::SpectrumProfile;

#[derive(Debug)]
pub struct RunOutcome {
    pub artifacts: Vec<PathBuf>,
    /// Failed verify checks (zero for non-verify kinds).
    pub failures: usize,
}

/// Runs the configured experiment, writing artifacts under `out_dir`.
pub fn run(config: &ExperimentConfig, out_dir: &Path, workers: Option<usize>) -> Result<RunOutcome> {
    match workers {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            pool.install(|| run_inner(config, out_dir))
        }
        _ => run_inner(config, out_dir),
    }
}

fn run_inner(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let mut artifacts = Vec::new();
    let mut failures = 0usize;
    match config.kind {
        ExperimentKind::RiskCurve => run_risk_curve(config, out_dir, &mut artifacts)?,
        ExperimentKind::LowerBound => run_lower_bound(config, out_dir, &mut artifacts)?,
        ExperimentKind::Rates => run_rates(config, out_dir, &mut artifacts)?,
        ExperimentKind::Verify => {
            failures = run_verify(config, out_dir, &mut artifacts)?;
        }
    }
    write_manifest(config, out_dir, &artifacts, start)?;
    artifacts.push(out_dir.join("manifest.json"));
    Ok(RunOutcome {
        artifacts,
        failures,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Internal(format!("serialize artifact: {e}")))?;
    write_text(path, &text)
}

#[derive(Serialize)]
struct Manifest {
    kind: String,
    config_sha256: String,
    seed: u64,
    version: String,
    wall_time_ms: u128,
    artifacts: Vec<String>,
}

fn write_manifest(
    config: &ExperimentConfig,
    out_dir: &Path,
    artifacts: &[PathBuf],
    start: Instant,
) -> Result<()> {
    let canonical = config.canonical_json()?;
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    hasher.update(env!("CARGO_PKG_VERSION").as_bytes());
    let digest = hasher.finalize();
    let config_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
    let manifest = Manifest {
        kind: config.kind.name().to_string(),
        config_sha256,
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_ms: start.elapsed().as_millis(),
        artifacts: artifacts
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect(),
    };
    write_json(&out_dir.join("manifest.json"), &manifest)
}

/// Builds the assembled experiment from a validated risk-curve config.
pub fn assemble_risk_experiment(config: &ExperimentConfig) -> Result<RiskExperiment> {
    let spectrum = config.spectrum.as_ref().unwrap().build()?;
    let measure = config.measure.as_ref().unwrap().build(&spectrum)?;
    let operator = config
        .operator
        .as_ref()
        .unwrap()
        .build(&spectrum, measure.sim_dim())?;
    let noise = config.noise.as_ref().unwrap().build()?;
    let design = config.design.as_ref().unwrap().choice()?;
    let rc = config.risk_curve.as_ref().unwrap();
    let hints = config
        .selection
        .as_ref()
        .map(|s| s.hints())
        .transpose()?
        .unwrap_or_default();
    Ok(RiskExperiment {
        measure,
        operator,
        noise,
        design,
        m_grid: rc.m_grid.clone(),
        trials: rc.trials,
        n_mc: rc.n_mc,
        p: config.p(),
        hints,
    })
}

fn run_risk_curve(
    config: &ExperimentConfig,
    out_dir: &Path,
    artifacts: &mut Vec<PathBuf>,
) -> Result<()> {
    let experiment = assemble_risk_experiment(config)?;
    let curve = risk::risk_curve(&experiment, config.seed)?;
    let csv_path = out_dir.join("risk_curve.csv");
    write_text(&csv_path, &risk_curve_csv(&curve))?;
    artifacts.push(csv_path);
    let json_path = out_dir.join("risk_curve.json");
    write_json(&json_path, &curve)?;
    artifacts.push(json_path);
    Ok(())
}

/// Fixed CSV schema: m, trial_count, mean_risk, std_err, d, R, c, r,
/// feasible, seed.
pub fn risk_curve_csv(curve: &RiskCurve) -> String {
    let mut out = String::from("m,trial_count,mean_risk,std_err,d,R,c,r,feasible,seed\n");
    for row in &curve.rows {
        let (d, r_box, c, rank) = match &row.selection {
            Some(sel) => (
                sel.d.to_string(),
                format!("{}", sel.r_box),
                format!("{}", sel.c),
                sel.rank.map(|r| r.to_string()).unwrap_or_default(),
            ),
            None => (String::new(), String::new(), String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            row.m,
            row.trials,
            fmt_opt(row.mean_risk),
            fmt_opt(row.std_err),
            d,
            r_box,
            c,
            rank,
            row.infeasible.is_none(),
            row.seed
        ));
    }
    out
}

#[derive(Serialize)]
struct LowerBoundRow {
    m: u64,
    eval: LowerBoundEval,
    materialized: bool,
    pipeline_value: Option<f64>,
    seed: u64,
}

fn run_lower_bound(
    config: &ExperimentConfig,
    out_dir: &Path,
    artifacts: &mut Vec<PathBuf>,
) -> Result<()> {
    let spectrum = config.spectrum.as_ref().unwrap().build()?;
    let law = config.measure.as_ref().unwrap().law()?.constants();
    let noise_cfg = config.noise.as_ref().unwrap();
    let noise_kind = noise_cfg.kind()?;
    let upsilon_top = match noise_kind {
        NoiseKind::Hilbert => noise_cfg.build()?.upsilon_top(),
        NoiseKind::White => 1.0,
    };
    let lb = config.lower_bound.as_ref().unwrap();
    let knobs = lb.knobs();
    let export = lb.export_instances.unwrap_or(false);
    let mut rows = Vec::new();
    for (mi, &m) in lb.m_grid.iter().enumerate() {
        let inputs = LowerBoundInputs {
            spectrum: &spectrum,
            m: m as f64,
            sigma: noise_cfg.sigma,
            lipschitz: lb.l,
            b_bound: lb.b,
            p: config.p(),
            noise: noise_kind,
            upsilon_top,
            law,
            knobs: knobs.clone(),
        };
        let eval = match lb.d {
            Some(d) => rates::eval_lower_bound(&inputs, d)?,
            None => rates::best_lower_bound(&inputs, lb.d_max.unwrap_or(8))?,
        };
        let params = FanoParams {
            d: eval.d,
            m,
            sigma: noise_cfg.sigma,
            lipschitz: lb.l,
            b_bound: lb.b,
            spectrum: &spectrum,
            law,
            p: config.p(),
            noise: noise_kind,
            upsilon_top,
            knobs: knobs.clone(),
        };
        let h = lb.h.unwrap_or(eval.h_star);
        let per_axis = (law.a / h).floor() as u64;
        let constructible = per_axis
            .checked_pow(eval.d as u32)
            .is_some_and(|n| n <= MAX_CODE_LEN as u64);
        let seed = derive_seed(config.seed, &[mi as u64]);
        let mut pipeline_value = None;
        if constructible {
            let instance = build_instance(&params, h, &mut stream(config.seed, &[mi as u64]))?;
            pipeline_value = Some(fano_lower_bound(&instance));
            if export {
                let path = out_dir.join(format!("instance_m{m}.json"));
                write_json(&path, &instance.export())?;
                artifacts.push(path);
            }
        }
        rows.push(LowerBoundRow {
            m,
            eval,
            materialized: constructible,
            pipeline_value,
            seed,
        });
    }
    let mut csv = String::from(
        "m,d,h_star,n_centers,log_m_words,s_star,kl_budget,fano_ok,bound,materialized,seed\n",
    );
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            row.m,
            row.eval.d,
            row.eval.h_star,
            row.eval.n_centers,
            row.eval.log_m_words,
            row.eval.s_star,
            row.eval.kl_budget,
            row.eval.fano_ok,
            row.eval.value,
            row.materialized,
            row.seed
        ));
    }
    let csv_path = out_dir.join("lower_bound.csv");
    write_text(&csv_path, &csv)?;
    artifacts.push(csv_path);
    let json_path = out_dir.join("lower_bound.json");
    write_json(&json_path, &rows)?;
    artifacts.push(json_path);
    Ok(())
}

fn run_rates(config: &ExperimentConfig, out_dir: &Path, artifacts: &mut Vec<PathBuf>) -> Result<()> {
    let spectrum = config.spectrum.as_ref().unwrap().build()?;
    let rc = config.rates.as_ref().unwrap();
    if rc.points < 2 || !(rc.k_min > 0.0) || !(rc.k_max > rc.k_min) {
        return Err(Error::Config(
            "rates needs points >= 2 and 0 < k_min < k_max".into(),
        ));
    }
    let constant = rc.constant.unwrap_or(1.0);
    let b = rc.b.unwrap_or(1.0);
    let l = rc.l.unwrap_or(1.0);
    let p = config.p();
    let d_max = rc.d_max.unwrap_or(16);
    let law = config
        .measure
        .as_ref()
        .map(|m| m.law())
        .transpose()?
        .unwrap_or(CoordinateLaw::UniformUnitVariance)
        .constants();
    let (noise_kind, upsilon_top) = match config.noise.as_ref() {
        Some(cfg) => {
            let kind = cfg.kind()?;
            let top = match kind {
                NoiseKind::Hilbert => cfg.build()?.upsilon_top(),
                NoiseKind::White => 1.0,
            };
            (kind, top)
        }
        None => (NoiseKind::Hilbert, 0.5),
    };

    #[derive(Serialize)]
    struct RateRow {
        k: f64,
        value: Option<f64>,
        d: Option<usize>,
    }
    let mut rows = Vec::with_capacity(rc.points);
    let ln_min = rc.k_min.ln();
    let step = (rc.k_max.ln() - ln_min) / (rc.points - 1) as f64;
    for i in 0..rc.points {
        let k = (ln_min + step * i as f64).exp();
        let (value, d) = match &rc.curve {
            RateCurveConfig::GenericUpper => {
                let inputs = UpperBoundInputs {
                    spectrum: &spectrum,
                    m: k,
                    sigma: 1.0,
                    b_bound: b,
                    lipschitz: l,
                    p,
                    noise: noise_kind,
                    rank: rc.rank.or(match noise_kind {
                        NoiseKind::White => Some(1),
                        NoiseKind::Hilbert => None,
                    }),
                    t: rc.t.unwrap_or(1.0),
                };
                match rates::best_upper_bound(&inputs, d_max) {
                    Ok((d, v)) => (Some(v), Some(d)),
                    Err(_) => (None, None),
                }
            }
            RateCurveConfig::GenericLower => {
                let inputs = LowerBoundInputs {
                    spectrum: &spectrum,
                    m: k,
                    sigma: 1.0,
                    lipschitz: l,
                    b_bound: b,
                    p,
                    noise: noise_kind,
                    upsilon_top,
                    law,
                    knobs: FanoKnobs {
                        prop_const: constant,
                        ..FanoKnobs::default()
                    },
                };
                match rates::best_lower_bound(&inputs, d_max) {
                    Ok(eval) => (Some(eval.value), Some(eval.d)),
                    Err(_) => (None, None),
                }
            }
            asymptotic => {
                let regime = asymptotic.asymptotic_regime().unwrap();
                match rates::asymptotic_log_rate(regime, k, constant) {
                    Ok(v) => (Some(v), None),
                    Err(_) => (None, None),
                }
            }
        };
        rows.push(RateRow { k, value, d });
    }
    let constants = format!(
        "constant={constant};b={b};l={l};p={p};law={};noise={:?};spectrum={}",
        law.iota,
        noise_kind,
        spectrum.kind_name()
    );
    let mut csv = String::from("k,value,regime,constants\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.k,
            fmt_opt(row.value),
            rc.curve.name(),
            constants
        ));
    }
    let csv_path = out_dir.join("rates.csv");
    write_text(&csv_path, &csv)?;
    artifacts.push(csv_path);
    let json_path = out_dir.join("rates.json");
    write_json(&json_path, &rows)?;
    artifacts.push(json_path);
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// The invariant suite behind `run verify`: code properties, packing
/// geometry, separation floors, and divergence oracles. Prints one line per
/// check and returns the failure count.
fn run_verify(
    config: &ExperimentConfig,
    out_dir: &Path,
    artifacts: &mut Vec<PathBuf>,
) -> Result<usize> {
    let checks = verify_suite(config.seed)?;
    for check in &checks {
        println!(
            "{} {}: {}",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    let failures = checks.iter().filter(|c| !c.pass).count();
    let path = out_dir.join("verify.json");
    write_json(&path, &checks)?;
    artifacts.push(path);
    Ok(failures)
}

pub fn verify_suite(seed: u64) -> Result<Vec<VerifyCheck>> {
    let mut checks = Vec::new();

    // Code properties, re-verified independently of the constructor.
    for n in [8usize, 16, 24, 32] {
        let code = vg_code(n, &mut stream(seed, &[1, n as u64]))?;
        let target = lowerbound::vg_target_m(n);
        let floor = n as f64 / 8.0;
        let mut ok = code.words()[0] == 0 && code.m_count() as u64 >= target;
        let mut min_dist = n;
        for i in 0..code.words().len() {
            for j in (i + 1)..code.words().len() {
                let dist = lowerbound::hamming(code.words()[i], code.words()[j]);
                min_dist = min_dist.min(dist);
                if (dist as f64) < floor {
                    ok = false;
                }
            }
        }
        checks.push(VerifyCheck {
            name: format!("vg-code n={n}"),
            pass: ok,
            detail: format!(
                "M = {} (target {target}), min pairwise distance {min_dist} (floor {floor})",
                code.m_count()
            ),
        });
    }

    // Packing geometry by interval arithmetic.
    for (a, d) in [(1.0f64, 1usize), (1.0, 2), (3.0f64.sqrt(), 2)] {
        let h = a / 8.0;
        let centers = lowerbound::packing_centers(a, h, d)?;
        let mut ok = true;
        for c in &centers {
            if c.iter().any(|&v| v - h < -a - 1e-12 || v + h > a + 1e-12) {
                ok = false;
            }
        }
        for i in 0..centers.len() {
            for j in (i + 1)..centers.len() {
                let linf = centers[i]
                    .iter()
                    .zip(&centers[j])
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0f64, f64::max);
                if linf < 2.0 * h - 1e-12 {
                    ok = false;
                }
            }
        }
        checks.push(VerifyCheck {
            name: format!("packing a={a:.4} d={d}"),
            pass: ok,
            detail: format!("{} boxes contained and disjoint", centers.len()),
        });
    }

    // Separation floor equality for the uniform law.
    let spectrum = SpectrumProfile::explicit(vec![1.0, 0.5]).unwrap();
    for (d, p) in [(1usize, 1.0f64), (1, 2.0), (2, 2.0)] {
        let law = CoordinateLaw::UniformUnitVariance.constants();
        let params = FanoParams {
            d,
            m: 8,
            sigma: 0.5,
            lipschitz: 1.0,
            b_bound: 5.0,
            spectrum: &spectrum,
            law,
            p,
            noise: NoiseKind::Hilbert,
            upsilon_top: 0.5,
            knobs: FanoKnobs::default(),
        };
        let instance = build_instance(&params, law.a / 8.0, &mut stream(seed, &[2, d as u64]))?;
        let measure = InputMeasure::new(
            spectrum.clone(),
            CoordinateLaw::UniformUnitVariance,
            2,
        )?;
        let check = separation_check(
            &instance,
            1,
            2,
            p,
            &measure,
            200_000,
            &mut stream(seed, &[3, d as u64, p as u64]),
        )?;
        let pass = (check.mc_distance - check.floor).abs() <= 3.0 * check.mc_std_err;
        checks.push(VerifyCheck {
            name: format!("separation d={d} p={p}"),
            pass,
            detail: format!(
                "mc {:.6e} vs floor {:.6e} (3 se = {:.2e})",
                check.mc_distance,
                check.floor,
                3.0 * check.mc_std_err
            ),
        });
    }

    // Divergence oracle: exact value against the stacked Gaussian mean-shift
    // form, and the budget bound, over random small instances.
    let mut rng = stream(seed, &[4]);
    let mut worst_rel = 0.0f64;
    let mut budget_ok = true;
    let mut oracle_ok = true;
    for trial in 0..100u64 {
        let d = 1 + (trial % 2) as usize;
        let m = 1 + (trial % 16);
        let noise = if trial % 2 == 0 {
            NoiseKind::Hilbert
        } else {
            NoiseKind::White
        };
        let law = CoordinateLaw::UniformUnitVariance.constants();
        let params = FanoParams {
            d,
            m,
            sigma: 0.3 + 0.05 * (trial % 7) as f64,
            lipschitz: 1.0,
            b_bound: 10.0,
            spectrum: &spectrum,
            law,
            p: 2.0,
            noise,
            upsilon_top: 0.5,
            knobs: FanoKnobs::default(),
        };
        let instance = build_instance(&params, law.a / 8.0, &mut stream(seed, &[5, trial]))?;
        let coeff_dim = 4usize;
        let upsilon: Vec<f64> = match noise {
            NoiseKind::Hilbert => (1..=coeff_dim).map(|j| 0.5f64.powi(j as i32)).collect(),
            NoiseKind::White => vec![1.0; coeff_dim],
        };
        let points: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                (1..=d)
                    .map(|i| {
                        let s = spectrum.eigenvalue(i).unwrap().sqrt();
                        s * rng.random_range(-law.a..=law.a)
                    })
                    .collect()
            })
            .collect();
        let design = Design {
            kind: DesignKind::FixedStratified { points_per_cell: 1 },
            points: points.clone(),
            m_requested: m,
            m_effective: m,
        };
        let j = 1 + (trial as usize % instance.code.m_count());
        let got = lowerbound::exact_kl(&instance, j, &design)?;
        // stacked mean-shift oracle over materialized coefficients
        let mut oracle = 0.0;
        for x in &points {
            let coeffs = instance.operators[j].eval(x);
            for (l, &u) in upsilon.iter().enumerate() {
                let shift = coeffs.get(l).copied().unwrap_or(0.0);
                oracle += shift * shift / (2.0 * params.sigma.powi(2) * u);
            }
        }
        let rel = if oracle > 0.0 {
            (got - oracle).abs() / oracle
        } else {
            (got - oracle).abs()
        };
        worst_rel = worst_rel.max(rel);
        if rel > 1e-10 {
            oracle_ok = false;
        }
        if got > instance.kl_budget * (1.0 + 1e-12) {
            budget_ok = false;
        }
    }
    checks.push(VerifyCheck {
        name: "kl-oracle".into(),
        pass: oracle_ok,
        detail: format!("worst relative deviation {worst_rel:.3e} over 100 instances"),
    });
    checks.push(VerifyCheck {
        name: "kl-budget".into(),
        pass: budget_ok,
        detail: "per-hypothesis divergence within budget".into(),
    });

    // Bump sup bound through the amplitude chain.
    {
        let law = CoordinateLaw::UniformUnitVariance.constants();
        let params = FanoParams {
            d: 2,
            m: 8,
            sigma: 0.5,
            lipschitz: 1.0,
            b_bound: 5.0,
            spectrum: &spectrum,
            law,
            p: 2.0,
            noise: NoiseKind::Hilbert,
            upsilon_top: 0.5,
            knobs: FanoKnobs::default(),
        };
        let instance = build_instance(&params, law.a / 8.0, &mut stream(seed, &[6]))?;
        let measure =
            InputMeasure::new(spectrum.clone(), CoordinateLaw::UniformUnitVariance, 2)?;
        let mut srng = stream(seed, &[7]);
        let mut sup = 0.0f64;
        for _ in 0..100_000 {
            let x = measure.sample_one(&mut srng);
            sup = sup.max(instance.functionals[1].eval(&x).abs());
        }
        let amplitude = instance.functionals[1].sup_bound();
        let chain = params.law.a * params.lipschitz
            / (8.0 * (0.5 * spectrum.log_inv_sum(2).unwrap()).exp());
        let pass = sup <= amplitude * (1.0 + 1e-12) && amplitude <= chain * (1.0 + 1e-12)
            && chain <= params.b_bound;
        checks.push(VerifyCheck {
            name: "bump-sup-chain".into(),
            pass,
            detail: format!(
                "sampled sup {sup:.6e} <= amplitude {amplitude:.6e} <= aL/(8 sqrt(sum)) {chain:.6e} <= B {}",
                params.b_bound
            ),
        });
    }

    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    const RISK_TOML: &str = r#"
kind = "risk-curve"
seed = 11
p = 2.0

[spectrum]
kind = "explicit"
values = [1.0]

[measure]
law = "uniform"
sim_dim = 1

[operator]
family = "clipped-linear"
b = 2.0
l = 1.0

[operator.weights]
kind = "explicit"
rows = [[1.0]]

[noise]
kind = "hilbert"
sigma = 0.1
coeff_dim = 4

[design]
kind = "fixed"

[selection]
regime = "finite-dim"
d = 1
r_box = 3.0

[risk_curve]
m_grid = [64, 256]
trials = 2
n_mc = 400
"#;

    #[test]
    fn risk_curve_run_is_byte_deterministic() {
        let cfg = ExperimentConfig::from_toml(RISK_TOML, &[]).unwrap();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        run(&cfg, dir_a.path(), Some(2)).unwrap();
        run(&cfg, dir_b.path(), Some(4)).unwrap();
        let a = fs::read(dir_a.path().join("risk_curve.csv")).unwrap();
        let b = fs::read(dir_b.path().join("risk_curve.csv")).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }

    #[test]
    fn verify_suite_passes() {
        let checks = verify_suite(5).unwrap();
        for check in &checks {
            assert!(check.pass, "{}: {}", check.name, check.detail);
        }
    }

    #[test]
    fn lower_bound_run_emits_rows() {
        let toml = r#"
kind = "lower-bound"
seed = 3
p = 2.0

[spectrum]
kind = "explicit"
values = [1.0, 0.5]

[measure]
law = "uniform"

[noise]
kind = "hilbert"
sigma = 0.5
coeff_dim = 4

[lower_bound]
m_grid = [16, 64, 256]
b = 5.0
l = 1.0
d_max = 2
export_instances = true
"#;
        let cfg = ExperimentConfig::from_toml(toml, &[]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let outcome = run(&cfg, dir.path(), None).unwrap();
        assert!(outcome.artifacts.iter().any(|p| p.ends_with("lower_bound.csv")));
        let csv = fs::read_to_string(dir.path().join("lower_bound.csv")).unwrap();
        assert_eq!(csv.lines().count(), 4); // header + 3 rows
    }

    #[test]
    fn rates_run_emits_curve() {
        let toml = r#"
kind = "rates"
seed = 1

[spectrum]
kind = "exponential"
alpha = 1.0
beta = 1.0

[rates]
k_min = 1e3
k_max = 1e9
points = 7

[rates.curve]
kind = "exp-log-minimax"
beta = 1.0
"#;
        let cfg = ExperimentConfig::from_toml(toml, &[]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        run(&cfg, dir.path(), None).unwrap();
        let csv = fs::read_to_string(dir.path().join("rates.csv")).unwrap();
        assert_eq!(csv.lines().count(), 8);
        assert!(csv.starts_with("k,value,regime,constants"));
    }
}
