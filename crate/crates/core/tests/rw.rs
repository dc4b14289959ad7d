use gyrad::asymptotics::{k_scaling, main1_prediction, main2_prediction, AsymptoticParams};
use gyrad::rw::{
    abs_moment_axis, characteristic_ratio, evolve, gyration_radius, Backend, BoxPolicy, EvolveOptions, MomentSeries,
};
use gyrad::series::PowerSeries;
use gyrad::StepDistribution;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn mass_is_conserved_under_the_grow_policy() {
    let k = StepDistribution::kac(1, 2.0, 2.5, 40).unwrap();
    for f in evolve(&k, 50, EvolveOptions::default().with_policy(BoxPolicy::Grow)).unwrap() {
        assert!((f.mass() - 1.0).abs() < 1e-12, "t = {}", f.t);
        assert_eq!(f.leak, 0.0);
    }
}

#[test]
fn axis_variance_is_additive_in_two_dimensions() {
    let k = StepDistribution::kac(2, 1.0, 3.5, 12).unwrap();
    let sigma2 = k.variance();
    for f in evolve(&k, 20, EvolveOptions::default()).unwrap().iter().skip(1) {
        let m = abs_moment_axis(f, 2.0).unwrap();
        assert!(rel(m, sigma2 * f.t as f64 / 2.0) < 1e-10);
        assert!(rel(gyration_radius(f, 2.0).unwrap(), (sigma2 * f.t as f64).sqrt()) < 1e-10);
    }
}

#[test]
fn moment_series_agrees_with_direct_functionals() {
    for d in [1, 2] {
        let k = StepDistribution::truncated_kac(d, 1.0, 1.5, 3).unwrap();
        let fields = evolve(&k, 6, EvolveOptions::default()).unwrap();
        let r_list = vec![0.0, 0.7, 1.0, 2.0];
        let series = MomentSeries::from_evolution(&k, 6, r_list.clone(), EvolveOptions::default()).unwrap();
        for (rec, f) in series.records.iter().zip(&fields) {
            for (i, &r) in r_list.iter().enumerate() {
                let direct = abs_moment_axis(f, r).unwrap();
                assert!((rec.moments[i] - direct).abs() <= 1e-14 * direct.max(1e-300));
                assert!((rec.ratios[i] - rec.moments[i] / rec.mass).abs() <= 1e-15 * rec.ratios[i].max(1.0));
                if r > 0.0 && f.t > 0 {
                    assert!(rel(rec.gyration[i], gyration_radius(f, r).unwrap()) < 1e-13);
                }
            }
            let xi = &rec.gyration[1..];
            if f.t > 0 {
                assert!(xi.windows(2).all(|w| w[1] >= w[0]));
            }
        }
    }
}

#[test]
fn characteristic_function_approaches_the_stable_limit() {
    let k = StepDistribution::kac(1, 1.0, 1.5, 2000).unwrap();
    let v = k.v_alpha_closed_form().unwrap();
    let t = 400;
    let opts = EvolveOptions::default()
        .with_policy(BoxPolicy::Fixed { radius: 1 << 14, leak_tolerance: 1e-9 })
        .with_backend(Backend::Fft);
    let fields = evolve(&k, t, opts).unwrap();
    let kt = k_scaling(&[1.0], 1.5, v, t as u64).unwrap();
    let value = characteristic_ratio(&fields[t], &kt).unwrap();
    // the evolved field has transform D̂^t exactly
    assert!((value - k.fourier(&kt).powi(t as i32)).abs() < 1e-10);
    let minus = characteristic_ratio(&fields[t], &[-kt[0]]).unwrap();
    assert!((value - minus).abs() < 1e-14);
    assert_eq!(characteristic_ratio(&fields[t], &[0.0]).unwrap(), 1.0);

    let target = (-1.0f64).exp();
    let gaps: Vec<f64> = [400u64, 1000, 2000]
        .iter()
        .map(|&t| {
            let kt = k_scaling(&[1.0], 1.5, v, t).unwrap();
            (k.fourier(&kt).powi(t as i32) - target).abs()
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[2] < 0.02, "{gaps:?}");
}

#[test]
fn finite_variance_convergence_improves_along_the_ladder() {
    // α = 3, r = 2.5: the correction decays, so the relative error must shrink.
    let k = StepDistribution::kac(1, 1.0, 3.0, 200).unwrap();
    let params = AsymptoticParams::random_walk(3.0, k.v_alpha_closed_form().unwrap()).unwrap();
    let series = MomentSeries::from_evolution(&k, 400, vec![2.5], EvolveOptions::default()).unwrap();
    let errs: Vec<f64> = [50, 100, 200, 400]
        .iter()
        .map(|&t| rel(series.records[t].ratios[0], main2_prediction(&params, 2.5, t as u64).unwrap()))
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn generating_function_matches_its_main_term_for_the_second_moment() {
    // Σ_t m^t σ² t = σ² m/(1−m)², so prediction/partial sum = 1/m.
    let k = StepDistribution::kac(1, 1.0, 3.5, 100).unwrap();
    let series = MomentSeries::from_evolution(
        &k,
        3000,
        vec![2.0],
        EvolveOptions::default().with_policy(BoxPolicy::Fixed { radius: 1 << 13, leak_tolerance: 1e-9 }),
    )
    .unwrap();
    let params = AsymptoticParams::random_walk(3.5, k.v_alpha_closed_form().unwrap()).unwrap();
    let gf = PowerSeries::new(series.moment_sequence(0));
    for m in [0.9, 0.95, 0.98] {
        let ratio = main1_prediction(&params, 2.0, m).unwrap() / gf.evaluate(m);
        assert!(rel(ratio, 1.0 / m) < 1e-8, "m = {m}: {ratio}");
    }
}
