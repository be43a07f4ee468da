use proptest::prelude::*;
use systole::holonomy::*;

fn direct_length(h: f64, v: f64, t: f64) -> f64 {
    ((t.exp() * h).powi(2) + ((-t).exp() * v).powi(2)).sqrt()
}

/// Golden-section search for the minimum of the flowed length on `[a, b]`.
fn golden_min(h: f64, v: f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if direct_length(h, v, c) < direct_length(h, v, d) {
            b = d;
        } else {
            a = c;
        }
    }
    let t = 0.5 * (a + b);
    (t, direct_length(h, v, t))
}

#[test]
fn basic_lengths() {
    let e = flow_length(&Holonomy::from_f64(1.0, 0.0).unwrap(), 0.0);
    assert!(e.contains(0.0));
    let e = flow_length(&Holonomy::from_f64(1.0, 1.0).unwrap(), 0.0);
    assert!((e.value() - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn minimum_of_short_vector() {
    let hol = Holonomy::from_rationals((1, 100), (4, 1), 128).unwrap();
    let m = min_length_time(&hol).unwrap();
    assert!((m.t_star - 0.5 * 400f64.ln()).abs() < 1e-13);
    assert!(m.t_bounds.0 <= 0.5 * 400f64.ln() && 0.5 * 400f64.ln() <= m.t_bounds.1);
    assert!((m.length() - 0.08f64.sqrt()).abs() < 1e-14);
    let (t, l) = golden_min(0.01, 4.0, -10.0, 10.0);
    assert!((t - m.t_star).abs() < 1e-6);
    assert!((l - m.length()).abs() < 1e-12);
}

#[test]
fn tie_resolves_to_lowest_index() {
    let c = vec![
        Holonomy::from_f64(1.0, 1.0).unwrap(),
        Holonomy::from_f64(1.0, 1.0).unwrap(),
    ];
    let e = envelope_min(&c, 0.3).unwrap();
    assert_eq!(e.argmin, 0);
    assert!(!e.decisive);
    assert!(envelope_min(&[], 0.0).is_err());
}

#[test]
fn huge_times_do_not_overflow() {
    let hol = Holonomy::from_f64(1e-300, 1e300).unwrap();
    let m = min_length_time(&hol).unwrap();
    assert!((m.length() - 2f64.sqrt()).abs() < 1e-12);
    let l = flow_length(&hol, 2000.0);
    assert!(l.lo > 1000.0 && l.lo.is_finite());
}

proptest! {
    #[test]
    fn enclosure_contains_direct_value(h in 1e-6f64..1e3, v in 0.0f64..1e3, t in -8.0f64..8.0) {
        let e = flow_length(&Holonomy::from_f64(h, v).unwrap(), t);
        let d = direct_length(h, v, t).ln();
        prop_assert!(e.lo <= d + 1e-14 && d <= e.hi + 1e-14);
    }

    #[test]
    fn flow_composes(h in 1e-3f64..1e3, v in 1e-3f64..1e3, t in -5.0f64..5.0, s in -5.0f64..5.0) {
        let a = flow_length(&Holonomy::from_f64(h, v).unwrap(), t + s);
        let b = flow_length(&Holonomy::from_f64(h * s.exp(), v * (-s).exp()).unwrap(), t);
        prop_assert!((a.mid() - b.mid()).abs() < 1e-12);
    }

    #[test]
    fn minimum_is_a_lower_bound(h in 1e-4f64..1e2, v in 1e-4f64..1e2, t in -10.0f64..10.0) {
        let hol = Holonomy::from_f64(h, v).unwrap();
        let m = min_length_time(&hol).unwrap();
        prop_assert!(m.ln_length.lo <= flow_length(&hol, t).hi);
        let at = flow_length(&hol, m.t_star);
        prop_assert!((at.mid() - m.ln_length.mid()).abs() < 1e-12);
    }

    #[test]
    fn envelope_is_minimum(vs in prop::collection::vec((1e-3f64..10.0, 1e-3f64..10.0), 1..12), t in -3.0f64..3.0) {
        let c: Vec<_> = vs.iter().map(|&(h, v)| Holonomy::from_f64(h, v).unwrap()).collect();
        let e = envelope_min(&c, t).unwrap();
        let direct = vs.iter().map(|&(h, v)| direct_length(h, v, t)).fold(f64::INFINITY, f64::min);
        prop_assert!((e.ln_length.mid() - direct.ln()).abs() < 1e-12);
        let first = vs.iter().position(|&(h, v)| (direct_length(h, v, t) - direct).abs() <= 1e-12 * direct).unwrap();
        prop_assert!(e.argmin == first || !e.decisive);
    }
}
