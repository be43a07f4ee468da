use proptest::prelude::*;
use systole::laws::*;
use systole::number_theory::AlphaSpec;
use systole::surface::*;

type F = fn(f64) -> f64;

fn synth(times: &[f64], delta: F) -> SystoleTrajectory {
    SystoleTrajectory::synthetic(times, delta, None::<F>, None::<F>)
}

#[test]
fn inverse_sqrt_has_ratio_one_half() {
    let grid = uniform_grid(1.0, 500.0, 0.5);
    let st = loglaw_stats(&synth(&grid, |t| t.powf(-0.5)), &[0.1], 2.0).unwrap();
    for r in &st.ratios {
        assert!((r.ratio - 0.5).abs() < 1e-13, "t = {}", r.t);
    }
    assert!((st.limsup - 0.5).abs() < 1e-13);
    assert!(st.limsup_min_times.is_none());
    // delta = t^{-1/2} never exceeds t^{-1/2 + lambda} for lambda > 0
    assert_eq!(st.density[0].lower_density, 0.0);
}

#[test]
fn inverse_sqrt_integrates_to_log() {
    for &end in &[10.0, 100.0, 1000.0] {
        let grid = uniform_grid(1.0, end, 0.001);
        let rep = divergence_integral(
            &synth(&grid, |t| t.powf(-0.5)),
            &DivergenceConfig::default(),
        )
        .unwrap();
        let last = rep.partial.last().unwrap();
        assert!((last.t - end).abs() < 1e-9);
        assert!(
            (last.value - end.ln()).abs() < 1e-6,
            "T = {end}: {}",
            last.value
        );
        assert!(last.lo <= end.ln() && end.ln() <= last.hi);
        assert!(rep.quadrature_error < 1e-6);
        for p in &rep.partial {
            assert!((p.value - p.t.ln()).abs() < 1e-6);
        }
    }
}

#[test]
fn lone_cells_use_trapezoid() {
    // odd number of cells: last one is a plain trapezoid; still within the reported error
    let grid: Vec<f64> = (0..=7).map(|i| 1.0 + i as f64 * 0.01).collect();
    let rep = divergence_integral(
        &synth(&grid, |t| t.powf(-0.5)),
        &DivergenceConfig::default(),
    )
    .unwrap();
    let last = rep.partial.last().unwrap();
    assert!(last.lo <= 1.07f64.ln() && 1.07f64.ln() <= last.hi);
}

#[test]
fn constant_systole_diverges_linearly() {
    let grid = uniform_grid(0.0, 1000.0, 0.1);
    let rep = divergence_integral(&synth(&grid, |_| 0.7), &DivergenceConfig::default()).unwrap();
    assert!((rep.growth_exponent - 1.0).abs() < 1e-9);
    assert_eq!(rep.verdict, DivergenceVerdict::DivergingTrend);
    assert!((rep.partial.last().unwrap().value - 0.49 * 1000.0).abs() < 1e-9);
    for w in rep.partial.windows(2) {
        assert!(w[1].value >= w[0].value);
    }
}

#[test]
fn summable_systole_converges() {
    let grid = uniform_grid(1.0, 2000.0, 0.05);
    let rep =
        divergence_integral(&synth(&grid, |t| 1.0 / t), &DivergenceConfig::default()).unwrap();
    // ∫_1^T t^{-2} = 1 - 1/T; increment over [1000, 2000] is 5e-4
    assert!((rep.window_increment - 5e-4).abs() < 1e-6);
    assert_eq!(rep.verdict, DivergenceVerdict::ConvergingTrend);
}

#[test]
fn step_function_density_is_exact() {
    // delta = 10 on [2k, 2k+1), 1e-6 elsewhere; S_lambda is the union of [2k, 2k+1) minus {0}
    let grid = uniform_grid(0.0, 100.0, 0.25);
    let tr = synth(&grid, |t| {
        if (t.floor() as i64) % 2 == 0 {
            10.0
        } else {
            1e-6
        }
    });
    let d = density_estimate(&tr, 0.25, 10.0).unwrap();
    // s = 0 is never in S (the threshold is infinite there), so the first cell is lost
    let exact = |s: f64| {
        let k = (s / 2.0).floor();
        (k + (s - 2.0 * k).min(1.0) - 0.25) / s
    };
    let oracle = grid
        .iter()
        .filter(|&&s| s >= 10.0)
        .map(|&s| exact(s))
        .fold(f64::INFINITY, f64::min);
    assert!(
        (d.lower_density - oracle).abs() < 1e-12,
        "{} vs {oracle}",
        d.lower_density
    );
    assert_eq!(d.undecided, 0);
}

#[test]
fn distance_bound_closed_forms() {
    let e2 = std::f64::consts::E.powi(2);
    let times = [2.0, e2, 50.0];
    let tr = SystoleTrajectory::synthetic(
        &times,
        |t| (-t).exp(),
        Some(|t: f64| (-t).exp()),
        Some(|_| 0.5),
    );
    let cfg = DistanceBoundConfig { k2: 0.75, t0: 0.0 };
    let d = distance_bound_series(&tr, &cfg).unwrap();
    assert!((d.points[0].bound - (2f64.ln() + 0.75)).abs() < 1e-12);
    assert!((d.points[1].bound - (1.0 + 0.75)).abs() < 1e-12);
    assert!((d.points[2].bound - (0.5 * 50f64.ln() + 0.75)).abs() < 1e-12);
    assert!((d.points[2].ratio - (0.5 + 0.75 / 50f64.ln())).abs() < 1e-12);
    let torus = synth(&times, |_| 1.0);
    assert_eq!(
        distance_bound_series(&torus, &cfg).unwrap_err(),
        LawError::NoSplit
    );
}

#[test]
fn distance_bound_drops_undefined_term() {
    let tr = SystoleTrajectory::synthetic(&[3.0, 4.0], |_| 0.5, Some(|_| 2.0), Some(|_| 0.5));
    let d = distance_bound_series(&tr, &DistanceBoundConfig::default()).unwrap();
    assert!(!d.points[0].sep_term_defined);
    assert!((d.points[0].bound - 2f64.ln()).abs() < 1e-12);
    assert_eq!(d.sep_undefined, 2);
}

#[test]
fn zero_systole_is_rejected() {
    let tr = synth(&[2.0, 3.0], |_| 0.0);
    assert!(matches!(
        loglaw_stats(&tr, &[], 0.0),
        Err(LawError::ZeroSystole(_))
    ));
}

#[test]
fn gap_chain_rejects_bad_exponent() {
    let tr = synth(&[0.0, 1.0], |_| 1.0);
    assert!(gap_chain(&tr, &[true, true], 0.7, 0.0, &[1.0]).is_err());
}

#[test]
fn golden_torus_laws() {
    let s = build_surface(
        &AlphaSpec::golden(),
        &SurfaceOptions {
            mode: SurfaceMode::Torus,
            k_max: 2200,
            ..SurfaceOptions::default()
        },
    )
    .unwrap();
    let grid = uniform_grid(0.0, 1000.0, 0.01);
    let tr = systole_trajectory(&s, &grid).unwrap();
    let st = loglaw_stats(&tr, &[0.1, 0.25, 0.4], 100.0).unwrap();
    assert!(st.limsup <= 0.05, "limsup {}", st.limsup);
    for d in &st.density {
        assert!(
            d.lower_density > 0.98,
            "lambda {}: {}",
            d.lambda,
            d.lower_density
        );
        // the density tends to 1: the deficit comes from t < 1 only
        let late = density_estimate(&tr, d.lambda, 800.0).unwrap();
        assert!(late.lower_density > 0.998 && late.lower_density >= d.lower_density);
    }
    let rep = divergence_integral(&tr, &DivergenceConfig::default()).unwrap();
    assert_eq!(rep.verdict, DivergenceVerdict::DivergingTrend);
    let win: Vec<(f64, f64)> = rep
        .partial
        .iter()
        .filter(|p| p.t >= 10.0)
        .map(|p| (p.t, p.value))
        .collect();
    let slope = fit_log_slope(win.iter().copied());
    assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
    // bounded below by the minimum systole squared times the length
    let dmin = tr
        .samples
        .iter()
        .map(|x| x.delta.value())
        .fold(f64::INFINITY, f64::min);
    assert!(rep.partial.last().unwrap().lo >= dmin * dmin * 1000.0 * (1.0 - 1e-9));
}

#[test]
fn log_squared_contrast() {
    let s = build_surface(
        &AlphaSpec::paper(),
        &SurfaceOptions {
            k_max: 60,
            ..SurfaceOptions::default()
        },
    )
    .unwrap();
    let grid = uniform_grid(1.0, 300.0, 0.05);
    let tr = systole_trajectory(&s, &grid).unwrap();
    let st = loglaw_stats(&tr, &[0.25], 20.0).unwrap();
    assert!(st.limsup >= st.limsup_min_times.unwrap() && st.limsup >= st.limsup_grid);
    assert!(st.limsup > 0.85);
    let d = distance_bound_series(&tr, &DistanceBoundConfig { k2: 0.0, t0: 145.0 }).unwrap();
    assert!(d.limsup_ratio <= 0.55, "distance ratio {}", d.limsup_ratio);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gap_chain_holds_for_any_set(mask in prop::collection::vec(any::<bool>(), 40..200), c in 0.05f64..0.5, step in 0.1f64..2.0) {
        let times: Vec<f64> = (0..mask.len()).map(|i| i as f64 * step).collect();
        let tr = synth(&times, |_| 1.0);
        let end = *times.last().unwrap();
        let cps: Vec<f64> = (1..=10).map(|i| end * i as f64 / 10.0).collect();
        for g in gap_chain(&tr, &mask, c, 0.0, &cps).unwrap() {
            prop_assert!(g.holds, "{:?}", g);
            prop_assert!(g.density >= 0.0 && g.density <= 1.0);
        }
    }

    #[test]
    fn density_matches_direct_count(mask_bits in prop::collection::vec(any::<bool>(), 10..80)) {
        // delta alternates between 1 and a tiny value according to the mask
        let n = mask_bits.len();
        let times: Vec<f64> = (0..n).map(|i| 2.0 + i as f64).collect();
        let bits = mask_bits.clone();
        let tr = SystoleTrajectory::synthetic(
            &times,
            move |t: f64| if bits[(t - 2.0) as usize] { 1.0 } else { 1e-9 },
            None::<F>,
            None::<F>,
        );
        let d = density_estimate(&tr, 0.3, 1.0).unwrap();
        prop_assert_eq!(&d.mask, &mask_bits);
        let mut best = f64::INFINITY;
        for j in 1..n {
            let m = mask_bits[..j].iter().filter(|&&b| b).count() as f64;
            best = best.min(m / j as f64);
        }
        prop_assert!((d.lower_density - best).abs() < 1e-12);
    }

    #[test]
    fn limsup_bounds_every_ratio(xs in prop::collection::vec(0.01f64..5.0, 5..50)) {
        let times: Vec<f64> = (0..xs.len()).map(|i| 2.0 + i as f64).collect();
        let vals = xs.clone();
        let tr = SystoleTrajectory::synthetic(&times, move |t: f64| vals[(t - 2.0) as usize], None::<F>, None::<F>);
        let st = loglaw_stats(&tr, &[], 0.0).unwrap();
        for r in &st.ratios {
            prop_assert!(r.ratio <= st.limsup);
        }
    }
}
