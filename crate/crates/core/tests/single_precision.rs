//! The numerical core instantiated at `f32`, checked against `f64`.

use rand::rngs::SmallRng;
use rand::SeedableRng;

use stable_brw::branching::{make_binary_gaussian_model, survival_prob, BarrierSpec, SurvivalConfig};
use stable_brw::critical_ode::{a_alpha, r_a, solve_h, SolveOptions};
use stable_brw::rng::Streams;
use stable_brw::spine_law::{SpineLaw, StabilityIndex, StepLaw};
use stable_brw::stable_process::{sample_stable, StableSpec};
use stable_brw::tube_prob::{tube_prob_mc, TubeSpec};

#[test]
fn critical_constants_match_across_precisions() {
    for al in [1.2, 1.5, 2.0] {
        let a64 = a_alpha(StabilityIndex::new(al).unwrap(), 3.0f64);
        let a32 = a_alpha(StabilityIndex::new(al as f32).unwrap(), 3.0f32);
        assert!((a32 as f64 - a64).abs() < 1e-5 * a64);
        let r64 = r_a(2.0 * a64, StabilityIndex::new(al).unwrap(), 3.0).unwrap();
        let r32 = r_a(2.0 * a32, StabilityIndex::new(al as f32).unwrap(), 3.0).unwrap();
        assert!((r32 as f64 - r64).abs() < 1e-4 * r64);
    }
}

#[test]
fn spine_law_in_single_precision() {
    let law = SpineLaw::pareto(StabilityIndex::new(1.5f32).unwrap(), 0.5, 1.0).unwrap();
    let mut rng = SmallRng::seed_from_u64(3);
    let n = 200_000;
    let above = (0..n).filter(|_| StepLaw::<f32>::sample(&law, &mut rng) > 1.0).count();
    let p = above as f64 / n as f64;
    assert!((p - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt(), "{p}");
}

#[test]
fn ode_in_single_precision_tracks_double() {
    let s64 = solve_h(2.0f64, StabilityIndex::new(2.0).unwrap(), 4.0, 1.0, SolveOptions::default()).unwrap();
    let s32 = solve_h(2.0f32, StabilityIndex::new(2.0).unwrap(), 4.0, 1.0, SolveOptions::default()).unwrap();
    assert!((s32.t_max as f64 - s64.t_max).abs() < 1e-3 * s64.t_max);
    assert!((s32.k as f64 - s64.k).abs() < 1e-3 * s64.k);
}

#[test]
fn stable_samples_and_tubes_in_single_precision() {
    let spec = StableSpec::new(StabilityIndex::new(1.5f32).unwrap(), 1.0).unwrap();
    let mut rng = SmallRng::seed_from_u64(5);
    assert!((0..1000).map(|_| sample_stable(&spec, &mut rng)).all(f32::is_finite));

    let tube = TubeSpec::centered(1.0f32, StabilityIndex::new(2.0).unwrap(), 20).unwrap();
    let law = stable_brw::spine_law::GaussianStep { sigma: 1.0f32 };
    let e = tube_prob_mc(&law, &tube, 0.0, 5000, &Streams::new(2), None).unwrap();
    assert!(e.value > 0.0 && e.value < 1.0);
}

#[test]
fn survival_in_single_precision_is_ordered_in_a() {
    let m = make_binary_gaussian_model::<f32>();
    let al = m.alpha();
    let cfg = SurvivalConfig::new(100, 200).max_pop(2000);
    let s = Streams::new(6);
    let lo = survival_prob(&m, &BarrierSpec::power(2.0f32, al).unwrap(), &cfg, &s).unwrap();
    let hi = survival_prob(&m, &BarrierSpec::power(8.0f32, al).unwrap(), &cfg, &s).unwrap();
    assert!(lo.estimate.value <= hi.estimate.value);
}
