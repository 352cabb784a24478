use fiemkit::orbits::{minimal_period, SearchConfig};
use fiemkit::symmetry::{GammaConfig, IntersectionConfig};
use fiemkit::*;

fn growing_family(eps: f64) -> PerturbedMap {
    let fam = Family::linear_decimal(
        Permutation::reversing(4),
        &[0.07, 0.06, 0.13, 0.29],
        &[0.12, 0.23, 0.29, 0.45],
        (0.0, 1.0),
    )
    .unwrap();
    PerturbedMap::new(fam, Forcing::sine(1), eps).unwrap()
}

#[test]
fn period_23_crossings() {
    let t = growing_family(0.01);
    let cfg = GammaConfig::default();
    let a = gamma(&t, 14, &cfg).unwrap();
    let b = gamma(&t, -9, &cfg).unwrap();
    let found = intersections(&t, &a, &b, &IntersectionConfig::default()).unwrap();
    assert!(!found.is_empty());
    let mut periods: Vec<usize> = found
        .iter()
        .map(|c| {
            assert!(c.refined && c.divisor_period == 23, "{:?}", c);
            minimal_period(&t, &c.point(), 23).unwrap()
        })
        .collect();
    periods.dedup();
    assert!(periods.contains(&23), "{:?}", periods);
    // every crossing is a symmetric orbit with a point on both lines
    for c in &found {
        let z = c.point();
        let o = newton_refine(&t, &z, 23, true).unwrap();
        assert!(o.symmetric);
        assert!(t.symmetry_i(&z, 14).unwrap().dist(&z) <= 1e-9);
        assert!(t.symmetry_i(&z, -9).unwrap().dist(&z) <= 1e-9);
    }
}

#[test]
fn intersections_are_deterministic() {
    let t = growing_family(0.01);
    let cfg = GammaConfig {
        base_samples: 500,
        ..GammaConfig::default()
    };
    let run = || {
        let a = gamma(&t, 4, &cfg).unwrap();
        let b = gamma(&t, -3, &cfg).unwrap();
        intersections(&t, &a, &b, &IntersectionConfig::default()).unwrap()
    };
    let first = run();
    assert!(!first.is_empty());
    for _ in 0..3 {
        assert_eq!(run(), first);
    }
}

#[test]
fn symmetric_search_records_are_consistent() {
    let t = growing_family(0.01);
    let cfg = SearchConfig {
        gamma: GammaConfig {
            base_samples: 800,
            ..GammaConfig::default()
        },
        ..SearchConfig::default()
    };
    let s = find_symmetric(&t, 6, &cfg).unwrap();
    assert!(!s.orbits.is_empty());
    for o in &s.orbits {
        assert!(o.symmetric && o.q <= 6);
        assert_eq!(o.points.len(), o.q);
        let z = o.points[0];
        assert!(t.power(&z, o.q as i64).unwrap().dist(&z) <= 1e-10);
        assert_eq!(minimal_period(&t, &z, o.q).unwrap(), o.q);
        assert_eq!(o.class, classify(o.residue, 1e-12));
        let w = o.witness.unwrap();
        let p = o.points[w.point];
        assert!(t.symmetry_i(&p, w.j).unwrap().dist(&p) <= 1e-8);
        assert!(t.symmetry_i(&p, w.k).unwrap().dist(&p) <= 1e-8);
    }
    // sorted by period, then height
    assert!(s
        .orbits
        .windows(2)
        .all(|w| (w[0].q, w[0].points[0].y) <= (w[1].q, w[1].points[0].y)));
}

#[test]
fn sweep_track_csv() {
    let fam = Family::linear_decimal(
        Permutation::reversing(4),
        &[0.38, 0.01, 0.01, 0.6],
        &[0.6, 0.01, 0.01, 0.38],
        (0.0, 1.0),
    )
    .unwrap();
    let t = PerturbedMap::new(fam, Forcing::sine(1), 1e-3).unwrap();
    let o = newton_refine(&t, &PhasePoint::new(0.245, 0.5), 2, true).unwrap();
    let grid: Vec<f64> = (1..=20).map(|k| k as f64 * 1e-3).collect();
    let s = sweep_eps(&t, &o, &grid, &orbits::SweepConfig::default()).unwrap();
    assert_eq!(s.rows.len(), 20);
    assert!(!s.truncated);
    let csv = s.to_csv();
    assert_eq!(csv.lines().count(), 21);
    assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 7));
    // the orbit stays elliptic while eps is small
    assert!(s
        .rows
        .iter()
        .all(|r| r.record.class == StabilityClass::Elliptic));
}
