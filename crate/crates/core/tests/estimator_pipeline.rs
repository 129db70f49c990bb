//! End-to-end estimator pipeline invariants that need the observe -> fit ->
//! risk chain rather than a single module.

use oplab_core::estimator::{self, HistogramPartition, Truncation};
use oplab_core::measure::{make_fixed_design, CoordinateLaw, InputMeasure};
use oplab_core::noise::{NoiseModel, UpsilonSpectrum};
use oplab_core::operators::TestOperator;
use oplab_core::risk::empirical_risk;
use oplab_core::rng::stream;
use oplab_core::spectrum::SpectrumProfile;

/// Truncating the fitted estimator can only cost up to the tail of the truth
/// it discards: risk(rank r) >= risk(full) - B r^-t, up to Monte Carlo noise.
#[test]
fn truncation_monotonicity() {
    let spectrum = SpectrumProfile::explicit(vec![1.0]).unwrap();
    let measure =
        InputMeasure::new(spectrum.clone(), CoordinateLaw::UniformUnitVariance, 1).unwrap();
    // output coefficients decay like j^-1 so truncation has a real cost
    let rows: Vec<Vec<f64>> = (1..=8).map(|j| vec![(j as f64).recip()]).collect();
    let operator = TestOperator::clipped_linear(rows, 3.0, 1.3).unwrap();
    let noise = NoiseModel::hilbert(0.3, 8, UpsilonSpectrum::Geometric).unwrap();
    let partition = HistogramPartition::new(spectrum, 1, 3.0, vec![8]).unwrap();
    let design = make_fixed_design(&partition, 128).unwrap();
    let t = 1.0;
    let r = 2usize;
    let mut worst = f64::INFINITY;
    for trial in 0..20u64 {
        let dataset = noise
            .observe(&operator, &design, &mut stream(2001, &[trial]))
            .unwrap();
        let full = estimator::fit(&dataset, partition.clone(), Truncation::Full).unwrap();
        let truncated = estimator::fit(&dataset, partition.clone(), Truncation::Rank(r)).unwrap();
        let risk_full = empirical_risk(
            &operator,
            &full,
            2.0,
            &measure,
            20_000,
            &mut stream(2002, &[trial, 0]),
        )
        .unwrap();
        let risk_trunc = empirical_risk(
            &operator,
            &truncated,
            2.0,
            &measure,
            20_000,
            &mut stream(2002, &[trial, 1]),
        )
        .unwrap();
        let slack = operator.b_bound() * (r as f64).powf(-t)
            + 1.5 * (risk_full.mc_std_err + risk_trunc.mc_std_err);
        worst = worst.min(risk_trunc.value - (risk_full.value - slack));
        assert!(
            risk_trunc.value >= risk_full.value - slack,
            "trial {trial}: truncated risk {} under full risk {} minus slack {slack}",
            risk_trunc.value,
            risk_full.value
        );
    }
    assert!(worst.is_finite());
}
