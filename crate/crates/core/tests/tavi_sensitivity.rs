//! Response of the angular-variation features to view-replacement
//! distortions on synthetic fields, measured on the central horizontal
//! stack.

use lfiqa::colorspace::{lab_channels, LAB_NOMINAL_RANGE};
use lfiqa::lfio::LightField;
use lfiqa::synth::{distort, generate, DistortionKind, DistortionSpec, SynthSpec};
use lfiqa::tavi::{ss_curve, tavi_features};
use lfiqa::tucker::first_principal_component;
use lfiqa::viewstack::{build_stacks, Orientation, ViewStack};

const SEEDS: u64 = 10;

fn field(seed: u64, d: Option<(DistortionKind, u8)>) -> LightField {
    let lf = generate(&SynthSpec {
        seed,
        ..SynthSpec::default()
    })
    .unwrap();
    match d {
        Some((kind, sev)) => distort(&lf, DistortionSpec::new(kind, sev).unwrap()).unwrap(),
        None => lf,
    }
    .quantized_8bit()
}

fn central_stacks(lf: &LightField) -> [ViewStack; 3] {
    let grids = lab_channels(lf);
    let mid = lf.angular_size().0 / 2;
    std::array::from_fn(|c| build_stacks(&grids[c], Orientation::Deg0, c).swap_remove(mid))
}

fn curve_std(lf: &LightField) -> f64 {
    let [l, _, _] = central_stacks(lf);
    let pc = first_principal_component(&l).unwrap();
    ss_curve(&l, &pc, LAB_NOMINAL_RANGE[0]).unwrap().std_dev()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    0.5 * (v[(n - 1) / 2] + v[n / 2])
}

fn median_std(d: Option<(DistortionKind, u8)>) -> f64 {
    median((0..SEEDS).map(|seed| curve_std(&field(seed, d))).collect())
}

#[test]
fn identical_views_give_flat_curve() {
    let lf = generate(&SynthSpec {
        disparity: 0.0,
        ..SynthSpec::default()
    })
    .unwrap();
    assert!(curve_std(&lf) < 1e-9);
}

// Measured on the central stack: 2 of 10 seeds higher at severity 3.
#[test]
#[ignore = "does not hold on the synthetic generator"]
fn nn_severity_3_raises_contrast_over_severity_1() {
    let contrast = |seed, sev| {
        let lf = field(seed, Some((DistortionKind::NnView, sev)));
        let s = central_stacks(&lf);
        let pcs: Vec<_> = s
            .iter()
            .map(|x| first_principal_component(x).unwrap())
            .collect();
        tavi_features(
            [&s[0], &s[1], &s[2]],
            [&pcs[0], &pcs[1], &pcs[2]],
            LAB_NOMINAL_RANGE,
        )
        .unwrap()
        .to_vec()[3]
    };
    let wins = (0..SEEDS)
        .filter(|&seed| contrast(seed, 3) > contrast(seed, 1))
        .count();
    assert!(wins as u64 * 2 > SEEDS, "{wins} of {SEEDS} seeds");
}

#[test]
#[ignore = "does not hold on the synthetic generator"]
fn undistorted_curve_is_smoother_than_nn_at_every_level() {
    let base = median_std(None);
    for sev in 1..=5 {
        let d = median_std(Some((DistortionKind::NnView, sev)));
        assert!(base < d, "severity {sev}: {d} not above undistorted {base}");
    }
}

#[test]
#[ignore = "does not hold on the synthetic generator"]
fn angular_distortions_do_not_reduce_curve_spread() {
    for kind in [DistortionKind::NnView, DistortionKind::LinearView] {
        let meds: Vec<f64> = (1..=5).map(|sev| median_std(Some((kind, sev)))).collect();
        assert!(meds.windows(2).all(|w| w[1] >= w[0]), "{kind}: {meds:?}");
    }
}
