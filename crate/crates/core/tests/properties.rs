use fiemkit::iem::is_reversible;
use fiemkit::scalar::{circle_dist, ratio};
use fiemkit::*;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

/// Positive integer weights turned into rational lengths summing to one.
fn lengths(weights: &[i64]) -> Vec<BigRational> {
    let total: i64 = weights.iter().sum();
    weights.iter().map(|&w| ratio(w, total)).collect()
}

fn weights(d: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<i64>> {
    d.prop_flat_map(|d| prop::collection::vec(1i64..20, d))
}

fn symmetric_iem() -> impl Strategy<Value = Iem<BigRational>> {
    weights(2..=7).prop_map(|w| Iem::new(Permutation::reversing(w.len()), lengths(&w)).unwrap())
}

fn any_iem() -> impl Strategy<Value = Iem<BigRational>> {
    weights(1..=6)
        .prop_flat_map(|w| {
            let d = w.len();
            (Just(w), Just((1..=d).collect::<Vec<_>>()).prop_shuffle())
        })
        .prop_map(|(w, order)| Iem::new(Permutation::new(order).unwrap(), lengths(&w)).unwrap())
}

fn unit_rational() -> impl Strategy<Value = BigRational> {
    (0i64..1000).prop_map(|n| ratio(n, 1000))
}

fn float_map() -> impl Strategy<Value = PerturbedMap> {
    (weights(2..=6), 1u32..5, 0.0f64..0.05).prop_flat_map(|(w0, ell, eps)| {
        let d = w0.len();
        (
            prop::collection::vec(1i64..20, d),
            Just(w0),
            Just(ell),
            Just(eps),
        )
            .prop_map(|(w1, w0, ell, eps)| {
                let fam = Family::linear(
                    Permutation::reversing(w0.len()),
                    lengths(&w0),
                    lengths(&w1),
                    (0.0, 1.0),
                )
                .unwrap();
                PerturbedMap::new(fam, Forcing::sine(ell), eps).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn images_tile_the_unit_interval(f in any_iem(), x in unit_rational()) {
        let y = f.evaluate(&x);
        prop_assert!(y >= BigRational::zero() && y < BigRational::one());
        prop_assert_eq!(f.invert().evaluate(&y), x);
    }

    #[test]
    fn composition_evaluates_pointwise(f in any_iem(), g in any_iem(), x in unit_rational()) {
        let h = compose(&f, &g);
        prop_assert_eq!(h.evaluate(&x), f.evaluate(&g.evaluate(&x)));
        prop_assert_eq!(compose(&f, &f.invert()).canonical(), Iem::identity());
    }

    #[test]
    fn symmetric_maps_are_reversible(f in symmetric_iem(), x in unit_rational()) {
        prop_assert!(f.is_symmetric().symmetric());
        prop_assert!(is_reversible(&f));
        // R F R = F^{-1} away from the discontinuities
        let on_edge = f.left_endpoints().contains(&x) || f.invert().left_endpoints().contains(&x);
        if !on_edge && !x.is_zero() {
            let rfr = reflection(&f.evaluate(&reflection(&x)));
            prop_assert_eq!(rfr, f.invert().evaluate(&x));
        }
    }

    #[test]
    fn swap_round_trip(w in weights(2..=4), pair in any::<prop::sample::Index>()) {
        // duplicate the weights so every interval has an equal-length partner
        let half = w.len();
        let mut all = w.clone();
        all.extend(&w);
        let f = Iem::new(Permutation::reversing(2 * half), lengths(&all)).unwrap();
        let k = pair.index(half);
        let mut order: Vec<usize> = (1..=2 * half).collect();
        order.swap(k, k + half);
        let swap = Iem::new(Permutation::new(order).unwrap(), f.lengths().to_vec()).unwrap();
        let g = compose(&f, &swap);
        match swap_decompose(&g) {
            Ok(dec) => {
                prop_assert!(dec.symmetric.is_symmetric().symmetric());
                prop_assert!(dec.swap.is_involution());
                prop_assert_eq!(compose(&dec.symmetric, &dec.swap_map()).canonical(), g.canonical());
            }
            Err(e) => {
                prop_assert_eq!(e, Error::NotReversible);
                prop_assert!(!is_reversible(&g));
            }
        }
    }

    #[test]
    fn periodic_intervals_return(f in symmetric_iem()) {
        for j in periodic_intervals(&f, 8) {
            let mut x = j.midpoint();
            for (k, &a) in j.itinerary.iter().enumerate() {
                prop_assert_eq!(f.locate(&x), a, "step {}", k);
                x = f.evaluate(&x);
            }
            prop_assert_eq!(x, j.midpoint());
            prop_assert!(j.symmetric_partner_offset.is_some());
        }
    }

    #[test]
    fn involutions_and_reversibility(t in float_map(), x in 0.0f64..1.0, y in 0.05f64..0.95) {
        let p = PhasePoint::new(x, y);
        prop_assert!(t.symmetry_s(&t.symmetry_s(&p)).dist(&p) <= 1e-12);
        let l = t.local_symmetry_l(&p).unwrap();
        prop_assert!(t.local_symmetry_l(&l).unwrap().dist(&p) <= 1e-12);
        let smooth = |q: &PhasePoint| t.distance_to_discontinuity(q).unwrap() > 1e-9;
        if let Ok(q) = t.step(&p) {
            let sq = t.symmetry_s(&q);
            if smooth(&p) && smooth(&sq) {
                if let Ok(r) = t.step(&sq) {
                    prop_assert!(t.symmetry_s(&r).dist(&p) <= 1e-11);
                }
            }
            prop_assert!(t.step_inverse(&q).unwrap().dist(&p) <= 1e-12);
        }
    }

    #[test]
    fn unperturbed_step_is_the_exchange(t in float_map(), x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let t0 = t.with_eps(0.0).unwrap();
        let p = t0.step(&PhasePoint::new(x, y)).unwrap();
        let f = t0.family().iem_at(y).unwrap();
        prop_assert_eq!(p.y, y);
        prop_assert!(circle_dist(p.x, f.evaluate(&x)) <= 1e-12);
    }
}
