use systole::holonomy::{flow_length, min_length_time};
use systole::interval::Interval;
use systole::number_theory::{slit_tail_sum, AlphaSpec};
use systole::surface::*;

const TARGET_S1: f64 = 0.301520737842896604053553645175;
const TARGET_S2: f64 = 0.0183291148035505343286564818623;

fn target(k_max: usize) -> SlitTorusSurface {
    build_surface(
        &AlphaSpec::paper(),
        &SurfaceOptions {
            k_max,
            ..SurfaceOptions::default()
        },
    )
    .unwrap()
}

fn torus(spec: AlphaSpec, k_max: usize) -> SlitTorusSurface {
    build_surface(
        &spec,
        &SurfaceOptions {
            mode: SurfaceMode::Torus,
            k_max,
            ..SurfaceOptions::default()
        },
    )
    .unwrap()
}

/// Exhaustive `(m - v alpha + shift s, v)` scan over a fixed box, lengths in f64.
fn scan(alpha: f64, s: Option<f64>, bound: f64, t: f64, r: i64) -> Vec<(f64, i64)> {
    let shifts: Vec<f64> = match s {
        Some(s) => vec![0.0, s, -s],
        None => vec![0.0],
    };
    let mut out: Vec<(f64, i64)> = Vec::new();
    for v in -r..=r {
        for m in -r..=r {
            for sh in &shifts {
                let h = m as f64 - v as f64 * alpha + sh;
                let (h, v) = if v < 0 || (v == 0 && h < 0.0) {
                    (-h, -v)
                } else {
                    (h, v)
                };
                if v == 0 && h == 0.0 {
                    continue;
                }
                let l = ((t.exp() * h).powi(2) + ((-t).exp() * v as f64).powi(2)).sqrt();
                if l <= bound
                    && !out
                        .iter()
                        .any(|&(h2, v2)| v2 == v && (h2 - h).abs() < 1e-12)
                {
                    out.push((h, v));
                }
            }
        }
    }
    out
}

#[test]
fn target_slit_and_candidates() {
    let s = target(20);
    assert!((s.slit_f64().unwrap() - TARGET_S1).abs() < 1e-15);
    assert_eq!(s.area(), 2.0);
    let c = enumerate_candidates(&s).unwrap();
    let ids: Vec<CandidateId> = c.iter().map(|x| x.id).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    assert_eq!(c.len(), 2 * 22 + 20);
    for x in &c {
        assert_eq!(x.separating(), x.id.family == Family::Slit);
    }
    let cyl2 = c
        .iter()
        .find(|x| {
            x.id == CandidateId {
                family: Family::Cylinder,
                k: 2,
            }
        })
        .unwrap();
    assert_eq!(cyl2.holonomy.v(), &Interval::from_int(7));
    let b = cyl2.holonomy.h_f64();
    assert!(1.0 / 120.0 < b && b < 1.0 / 112.0);
    let dbl = c
        .iter()
        .find(|x| {
            x.id == CandidateId {
                family: Family::CylinderDouble,
                k: 2,
            }
        })
        .unwrap();
    assert_eq!(dbl.holonomy.v(), &Interval::from_int(14));
    assert!((dbl.holonomy.h_f64() / cyl2.holonomy.h_f64() - 2.0).abs() < 1e-15);
    let slit2 = c
        .iter()
        .find(|x| {
            x.id == CandidateId {
                family: Family::Slit,
                k: 2,
            }
        })
        .unwrap();
    assert_eq!(slit2.holonomy.v(), &Interval::from_int(2));
    assert!((slit2.holonomy.h_f64() - TARGET_S2).abs() < 1e-16);
}

#[test]
fn construction_errors() {
    assert_eq!(
        build_surface(&AlphaSpec::rational(3, 7), &SurfaceOptions::default()).unwrap_err(),
        SurfaceError::RationalAlpha
    );
    // golden ratio: S_1 = 2
    let err = build_surface(&AlphaSpec::golden(), &SurfaceOptions::default()).unwrap_err();
    assert!(matches!(err, SurfaceError::SlitTooLong(_)));
    assert!(SlitTorusSurface::with_slit_length(
        &AlphaSpec::golden(),
        &SurfaceOptions::default(),
        1.5
    )
    .is_err());
    let s = target(10);
    let err = systole_trajectory(&s, &[0.0, s.coverage_limit() + 1.0]).unwrap_err();
    assert!(matches!(err, SurfaceError::CoverageExceeded { .. }));
    assert_eq!(
        systole_trajectory(&s, &[1.0, 1.0]).unwrap_err(),
        SurfaceError::BadGrid
    );
}

#[test]
fn square_lattice_classes() {
    let zero = Interval::zero();
    let v = brute_force_lattice_vectors(&zero, None, 1.2, 0.0, 10_000, 128).unwrap();
    assert_eq!(v.len(), 2);
    let v = brute_force_lattice_vectors(&zero, None, 1.5, 0.0, 10_000, 128).unwrap();
    assert_eq!(v.len(), 4);
}

#[test]
fn golden_lattice_matches_exhaustive_scan() {
    let s = torus(AlphaSpec::golden(), 30);
    let a = s.alpha_f64();
    for &(bound, t) in &[(1.2, 0.0), (1.5, 0.0), (1.0, 1.3), (0.9, -0.7)] {
        let got = brute_force_saddle_connections(&s, bound, t, 100_000).unwrap();
        let want = scan(a, None, bound, t, 8);
        assert_eq!(got.len(), want.len(), "bound {bound} t {t}");
        for g in &got {
            let h = g.h.mid_f64();
            assert!(want
                .iter()
                .any(|&(h2, v2)| v2 == g.v && (h2 - h).abs() < 1e-12));
        }
    }
    let v = brute_force_saddle_connections(&s, 1.2, 0.0, 10_000).unwrap();
    assert!(v.iter().any(|w| w.v == 0 && w.m == 1));
    assert!(v
        .iter()
        .any(|w| w.v == 1 && (w.h.mid_f64() - (1.0 - a)).abs() < 1e-12));
}

#[test]
fn slit_lattice_matches_exhaustive_scan() {
    let s = SlitTorusSurface::with_slit_length(
        &AlphaSpec::periodic(vec![2]),
        &SurfaceOptions::default(),
        0.3,
    )
    .unwrap();
    let got = brute_force_saddle_connections(&s, 1.1, 0.4, 100_000).unwrap();
    let want = scan(s.alpha_f64(), Some(0.3), 1.1, 0.4, 8);
    assert_eq!(got.len(), want.len());
}

#[test]
fn search_box_overflow() {
    let s = target(10);
    let err = brute_force_saddle_connections(&s, 1.0, 20.0, 1000).unwrap_err();
    assert!(matches!(err, SurfaceError::SearchBoxOverflow { .. }));
}

#[test]
fn golden_torus_systole_is_bounded_below() {
    let s = torus(AlphaSpec::golden(), 80);
    let grid = uniform_grid(0.0, 30.0, 0.01);
    let traj = systole_trajectory(&s, &grid).unwrap();
    let first = &traj.samples[0];
    assert!(first.delta.contains(0.0), "delta_0 = 1");
    assert_eq!(
        first.argmin.unwrap(),
        CandidateId {
            family: Family::Cylinder,
            k: -1
        }
    );
    let mut lowest = f64::INFINITY;
    for smp in &traj.samples {
        lowest = lowest.min(smp.delta.value());
        assert!(smp.delta_sep.is_none());
        assert_eq!(smp.delta, smp.delta_nonsep.unwrap());
    }
    // the deepest dip is the minimum of (1 - alpha, 1), at length sqrt(2 (1 - alpha))
    assert!(lowest >= 0.5);
    let a = s.alpha_f64();
    assert!((lowest - (2.0 * (1.0 - a)).sqrt()).abs() < 1e-4);
}

#[test]
fn cylinder_envelope_equals_lattice_minimum() {
    for spec in [
        AlphaSpec::golden(),
        AlphaSpec::paper(),
        AlphaSpec::periodic(vec![1, 3, 1, 7, 2]),
    ] {
        let s = torus(spec, 40);
        let grid = uniform_grid(-1.0, 6.0, 0.173);
        let traj = systole_trajectory(&s, &grid).unwrap();
        for smp in &traj.samples {
            let brute = brute_force_saddle_connections(&s, 2.0, smp.t, 10_000_000).unwrap();
            let best = brute
                .iter()
                .map(|w| flow_length(&w.holonomy(), smp.t).mid())
                .fold(f64::INFINITY, f64::min);
            assert!((smp.delta.mid() - best).abs() < 1e-12, "t = {}", smp.t);
        }
    }
}

#[test]
fn slit_candidates_appear_in_brute_force() {
    let s = target(10);
    let c = enumerate_candidates(&s).unwrap();
    for k in [1i64, 2] {
        let cand = c
            .iter()
            .find(|x| {
                x.id == CandidateId {
                    family: Family::Slit,
                    k,
                }
            })
            .unwrap();
        let m = min_length_time(&cand.holonomy).ok();
        let t = m.as_ref().map(|m| m.t_star).unwrap_or(0.0);
        let l = flow_length(&cand.holonomy, t).value();
        let brute = brute_force_saddle_connections(&s, l * 1.01, t, 10_000_000).unwrap();
        let h = cand.holonomy.h_f64();
        let v = cand.holonomy.v_f64() as i64;
        assert!(
            brute
                .iter()
                .any(|w| w.shift != 0 && w.v == v && (w.h.mid_f64().abs() - h).abs() < 1e-14),
            "slit k = {k}"
        );
    }
    for x in c
        .iter()
        .filter(|x| x.id.family == Family::Cylinder && x.id.k >= 0 && x.id.k <= 4)
    {
        let m = min_length_time(&x.holonomy).unwrap();
        let brute =
            brute_force_saddle_connections(&s, m.length() * 1.01, m.t_star, 10_000_000).unwrap();
        let v = x.holonomy.v_f64() as i64;
        assert!(
            brute.iter().any(|w| w.shift == 0
                && w.v == v
                && (w.h.mid_f64().abs() - x.holonomy.h_f64()).abs() < 1e-14),
            "{:?} {:?}",
            x.id,
            brute
        );
    }
}

#[test]
fn candidate_minimum_lengths() {
    let s = target(60);
    let t = s.table();
    let c = enumerate_candidates(&s).unwrap();
    for k in 2..=60usize {
        let q = |i: usize| t.q(i).to_string().parse::<f64>().unwrap();
        let slit = c
            .iter()
            .find(|x| {
                x.id == CandidateId {
                    family: Family::Slit,
                    k: k as i64,
                }
            })
            .unwrap();
        let ml = min_length_time(&slit.holonomy).unwrap();
        let sk = slit_tail_sum(t, k).unwrap().mid_f64();
        let reference = (q(k - 1) * sk).sqrt();
        let ratio = ml.length() / reference;
        assert!(
            (2.0..=2.0 * 1.2f64.sqrt()).contains(&ratio),
            "k = {k}: ratio {ratio}"
        );
        assert!(ml.length() >= 2.0 * (q(k - 1) / q(k + 1)).sqrt());
        if k < 60 {
            let cyl = c
                .iter()
                .find(|x| {
                    x.id == CandidateId {
                        family: Family::Cylinder,
                        k: k as i64,
                    }
                })
                .unwrap();
            let cl = min_length_time(&cyl.holonomy).unwrap().length();
            let a = t.a(k + 1) as f64;
            assert!(
                cl > (2.0 * q(k) / (q(k + 1) + q(k))).sqrt() && cl < (2.0 / a).sqrt(),
                "k = {k}"
            );
            // proportional to sqrt(1/(a+2)) within a bounded factor
            let p = cl / (1.0 / (a + 2.0)).sqrt();
            assert!((1.0..=1.5).contains(&p));
        }
    }
}

#[test]
fn candidates_are_long_before_their_time() {
    let s = target(30);
    let c = enumerate_candidates(&s).unwrap();
    for x in c.iter().filter(|x| x.id.k >= 2) {
        let k = x.id.k as usize;
        let lim = match x.id.family {
            Family::Slit => ln_q(s.table(), k - 1),
            _ => ln_q(s.table(), k),
        };
        for i in 0..50 {
            let t = lim * i as f64 / 50.0;
            assert!(
                flow_length(&x.holonomy, t).lo >= 0.0,
                "{:?} at t = {t}",
                x.id
            );
        }
    }
}

#[test]
fn unit_area_scales_lengths() {
    let raw = target(20);
    let unit = build_surface(
        &AlphaSpec::paper(),
        &SurfaceOptions {
            k_max: 20,
            unit_area: true,
            ..SurfaceOptions::default()
        },
    )
    .unwrap();
    let grid = uniform_grid(0.0, 20.0, 0.5);
    let a = systole_trajectory(&raw, &grid).unwrap();
    let b = systole_trajectory(&unit, &grid).unwrap();
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert!((x.delta.mid() - 0.5 * 2f64.ln() - y.delta.mid()).abs() < 1e-12);
        assert_eq!(x.argmin, y.argmin);
    }
}

#[test]
fn trajectory_invariants() {
    let s = target(40);
    let grid = uniform_grid(0.0, 60.0, 0.25);
    let a = systole_trajectory(&s, &grid).unwrap();
    let b = systole_trajectory(&s, &grid).unwrap();
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert_eq!(x.delta, y.delta);
        let (ds, dn) = (x.delta_sep.unwrap(), x.delta_nonsep.unwrap());
        assert_eq!(x.delta, ds.min(&dn));
    }
    assert!(!a.min_time_samples.is_empty());
}
