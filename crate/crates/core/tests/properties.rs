use delaymap::*;
use proptest::prelude::*;

fn sv(v: Vec<f64>) -> StateVector {
    StateVector::new(v).unwrap()
}

fn trig(dim: usize) -> impl Strategy<Value = ObservableSpec> {
    let term = (prop::collection::vec(-3i32..=3, dim), -1.0f64..1.0, -1.0f64..1.0).prop_map(|(f, c, s)| TrigTerm {
        freq: f.into_iter().map(f64::from).collect(),
        cos: c,
        sin: s + if c.abs() + s.abs() < 1e-3 { 0.5 } else { 0.0 },
    });
    prop::collection::vec(term, 1..4).prop_map(|terms| ObservableSpec::TrigPolynomial { terms })
}

fn anchors(dim: usize) -> impl Strategy<Value = ObservableSpec> {
    let anchor = (prop::collection::vec(0.0f64..1.0, dim), 0.0f64..1.0).prop_map(|(point, value)| Anchor { point, value });
    (prop::collection::vec(anchor, 1..8), 0.05f64..0.5, 0.0f64..1.0)
        .prop_map(|(anchors, radius, base)| ObservableSpec::PiecewiseAnchor { anchors, radius, base })
}

fn unit_points(dim: usize, n: usize) -> impl Strategy<Value = Vec<StateVector>> {
    prop::collection::vec(prop::collection::vec(0.0f64..1.0, dim), n).prop_map(|v| v.into_iter().map(sv).collect())
}

fn rotation_pairs(n: usize) -> impl Strategy<Value = PairSet> {
    prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..n).prop_map(|v| {
        let pairs = v
            .into_iter()
            .map(|(a, b)| Pair { x: sv(vec![a]), y: sv(vec![b]), class: PairClass::C1 })
            .collect();
        PairSet { pairs, delta: 0.0, incomplete: false }
    })
}

fn rotation() -> SystemSpec {
    SystemSpec::circle_rotation(systems::GOLDEN_ROTATION)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evaluate_lands_in_unit_interval(a in trig(2), b in anchors(2), pts in unit_points(2, 20), c in 0.0f64..1.0, s in 0.0f64..1.0) {
        let sum = ObservableSpec::perturbed(a.clone(), b.clone(), c, s);
        for p in &pts {
            for obs in [&a, &b, &sum] {
                let v = obs.evaluate(p).unwrap();
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn sup_distance_is_pseudometric(a in trig(2), b in trig(2), c in anchors(2), pts in unit_points(2, 30)) {
        let d = |x: &ObservableSpec, y: &ObservableSpec| sup_distance(x, y, &pts).unwrap().value;
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }

    #[test]
    fn lipschitz_bound_holds(h in prop_oneof![trig(2), anchors(2)], pts in unit_points(2, 20)) {
        let l = h.lipschitz();
        for w in pts.windows(2) {
            let gap = (h.evaluate(&w[0]).unwrap() - h.evaluate(&w[1]).unwrap()).abs();
            prop_assert!(gap <= l * w[0].dist(&w[1]) + 1e-12);
        }
    }

    #[test]
    fn hankel_shift(x in 0.0f64..1.0, m in 1usize..7, len in 10usize..40, h in trig(1)) {
        let traj = rotation().iterate(&sv(vec![x]), len).unwrap();
        let rows = delay_matrix(&h, &traj, m).unwrap();
        prop_assert_eq!(rows.len(), len - m + 1);
        for w in rows.windows(2) {
            prop_assert_eq!(&w[0].values()[1..], &w[1].values()[..m - 1]);
        }
    }

    #[test]
    fn adding_pairs_never_raises_margin(k in rotation_pairs(20), extra in rotation_pairs(5), h in trig(1)) {
        let sys = rotation();
        let before = compatibility_margin(&h, &sys, &k, 3).unwrap().margin;
        let mut more = k.clone();
        more.pairs.extend(extra.pairs);
        prop_assert!(compatibility_margin(&h, &sys, &more, 3).unwrap().margin <= before);
    }

    #[test]
    fn margin_grows_with_m(k in rotation_pairs(20), h in trig(1), m in 1usize..6) {
        let sys = rotation();
        let a = compatibility_margin(&h, &sys, &k, m).unwrap().margin;
        let b = compatibility_margin(&h, &sys, &k, m + 1).unwrap().margin;
        prop_assert!(b >= a);
    }

    #[test]
    fn margin_moves_at_most_twice_sup_distance(k in rotation_pairs(20), f in trig(1), g in trig(1)) {
        let sys = rotation();
        let m = 3;
        let orbit: Vec<StateVector> = k
            .pairs
            .iter()
            .flat_map(|p| [p.x.clone(), p.y.clone()])
            .flat_map(|z| sys.iterate(&z, m).unwrap().into_states())
            .collect();
        let sup = sup_distance(&f, &g, &orbit).unwrap().value;
        let a = compatibility_margin(&f, &sys, &k, m).unwrap().margin;
        let b = compatibility_margin(&g, &sys, &k, m).unwrap().margin;
        prop_assert!((a - b).abs() <= 2.0 * sup + 1e-12);
    }

    #[test]
    fn periodic_extension_repeats(base in prop::collection::vec(0.0f64..1.0, 1..6), target in 1usize..20) {
        let v = DelayVector::new(base.clone()).unwrap().extend_periodically(target);
        prop_assert_eq!(v.m(), target);
        for (k, x) in v.values().iter().enumerate() {
            prop_assert_eq!(*x, base[k % base.len()]);
        }
    }

    #[test]
    fn openness_radius_keeps_compatibility(k in rotation_pairs(20), h in trig(1), amp in 0.0f64..1.0, g in trig(1)) {
        let sys = rotation();
        let r = compatibility_margin(&h, &sys, &k, 3).unwrap();
        prop_assume!(r.margin > 1e-9);
        let radius = openness_radius(&r).unwrap();
        // bump of sup-norm < radius
        let f = ObservableSpec::perturbed(h.clone(), g, 0.5, 2.0 * amp * radius * 0.999);
        prop_assert!(compatibility_margin(&f, &sys, &k, 3).unwrap().margin > 0.0);
    }
}
