use super::{balance_with, newton_refine_with, OrbitRecord, OrbitTolerances};
use crate::connections::periodic_intervals;
use crate::error::{Error, Result};
use crate::perturbed::{PerturbedMap, PhasePoint};
use crate::scalar::circle_dist;
use crate::symmetry::{
    gamma, intersections, GammaConfig, IntersectionCandidate, IntersectionConfig, SymmetryLineSet,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Orbits closer than this are the same orbit.
const SAME_ORBIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SearchConfig {
    pub gamma: GammaConfig,
    pub intersections: IntersectionConfig,
    pub orbit: OrbitTolerances,
}

/// A crossing that did not lead to a symmetric orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub x: f64,
    pub y: f64,
    pub j: i64,
    pub k: i64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricSearch {
    pub orbits: Vec<OrbitRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

fn sort_orbits(orbits: &mut [OrbitRecord]) {
    orbits.sort_by(|a, b| {
        let (p, q) = (&a.points[0], &b.points[0]);
        a.q.cmp(&b.q)
            .then(p.y.total_cmp(&q.y))
            .then(p.x.total_cmp(&q.x))
    });
}

/// Keeps the first of every group of equal orbits.
fn dedup_orbits(found: Vec<OrbitRecord>) -> Vec<OrbitRecord> {
    let mut out: Vec<OrbitRecord> = Vec::new();
    for r in found {
        if !out.iter().any(|o| o.same_orbit(&r, SAME_ORBIT_TOL)) {
            out.push(r);
        }
    }
    out
}

/// Symmetric periodic orbits of period at most `q_max`, from the crossings
/// `Γ_0 ∩ Γ_q` and `Γ_{-1} ∩ Γ_{q-1}`.
pub fn find_symmetric(
    t: &PerturbedMap,
    q_max: usize,
    cfg: &SearchConfig,
) -> Result<SymmetricSearch> {
    if q_max as u64 > cfg.gamma.i_max as u64 {
        return Err(Error::Precondition(format!(
            "q_max = {} exceeds i_max = {}",
            q_max, cfg.gamma.i_max
        )));
    }
    let indices: Vec<i64> = (-1..=q_max as i64).collect();
    let lines: BTreeMap<i64, SymmetryLineSet> = indices
        .par_iter()
        .map(|&i| gamma(t, i, &cfg.gamma).map(|l| (i, l)))
        .collect::<Result<_>>()?;

    let pairs: Vec<(i64, i64, usize)> = (1..=q_max)
        .flat_map(|q| [(0, q as i64, q), (-1, q as i64 - 1, q)])
        .collect();
    let candidates: Vec<(IntersectionCandidate, usize)> = pairs
        .par_iter()
        .map(|&(j, k, q)| {
            intersections(t, &lines[&j], &lines[&k], &cfg.intersections)
                .map(|c| c.into_iter().map(|c| (c, q)).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let refined: Vec<std::result::Result<OrbitRecord, Diagnostic>> = candidates
        .par_iter()
        .map(|(c, q)| {
            let diag = |reason: String| Diagnostic {
                x: c.x,
                y: c.y,
                j: c.j,
                k: c.k,
                reason,
            };
            let mut r = newton_refine_with(t, &c.point(), *q, true, &cfg.orbit)
                .map_err(|e| diag(e.to_string()))?;
            if !r.symmetric {
                return Err(diag("refined orbit is not symmetric".into()));
            }
            r.canonicalize();
            Ok(r)
        })
        .collect();

    let mut found = Vec::new();
    let mut diagnostics = Vec::new();
    for r in refined {
        match r {
            Ok(o) => found.push(o),
            Err(d) => diagnostics.push(d),
        }
    }
    sort_orbits(&mut found);
    Ok(SymmetricSearch {
        orbits: dedup_orbits(found),
        diagnostics,
    })
}

/// Predicted non-symmetric orbits persisting from the periodic interval of a
/// symmetric unperturbed orbit under the harmonic `sin(2 pi l x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub ell: u32,
    pub q: usize,
    /// Width of the periodic interval.
    pub width: f64,
    pub count: usize,
    pub seeds: Vec<PhasePoint>,
}

/// Seeds `x_0 ± m / (2l)`, `m = 1 .. ceil(l d) - 1`, for the non-symmetric
/// orbits born from the periodic interval of width `d` around `orbit`.
pub fn predict_nonsymmetric(
    t: &PerturbedMap,
    orbit: &OrbitRecord,
    ell: u32,
    tol: &OrbitTolerances,
) -> Result<Prediction> {
    if ell == 0 {
        return Err(Error::Precondition("harmonic must be at least 1".into()));
    }
    if !orbit.symmetric {
        return Err(Error::Precondition("orbit is not symmetric".into()));
    }
    let z = orbit.points[0];
    let iem = t.family().iem_at(z.y)?;
    let width = periodic_intervals(&iem, orbit.q)
        .into_iter()
        .find(|j| {
            j.period == orbit.q && (j.contains(&z.x) || circle_dist(j.midpoint(), z.x) <= 1e-9)
        })
        .map(|j| j.width())
        .ok_or_else(|| {
            Error::Precondition(format!(
                "no periodic interval of period {} around x = {} at y = {}",
                orbit.q, z.x, z.y
            ))
        })?;
    if balance_with(&orbit.points, ell, tol.balance_tol).balanced {
        return Err(Error::BalancedOrbit { ell });
    }
    let l = ell as f64;
    let n = if ell < (1.0 / width).ceil() as u32 {
        0
    } else {
        ((l * width).ceil() as usize).saturating_sub(1)
    };
    let mut seeds = Vec::with_capacity(2 * n);
    for m in 1..=n {
        let d = m as f64 / (2.0 * l);
        for x in [z.x - d, z.x + d] {
            seeds.push(PhasePoint::new(x.rem_euclid(1.0), z.y));
        }
    }
    Ok(Prediction {
        ell,
        q: orbit.q,
        width,
        count: seeds.len(),
        seeds,
    })
}

/// Runs Newton from every predicted seed on `t`.
pub fn confirm_nonsymmetric(
    t: &PerturbedMap,
    prediction: &Prediction,
    tol: &OrbitTolerances,
) -> Vec<Result<OrbitRecord>> {
    prediction
        .seeds
        .par_iter()
        .map(|s| newton_refine_with(t, s, prediction.q, true, tol))
        .collect()
}

/// `b` is the image of `a` under the local symmetry `L`.
pub fn l_related(t: &PerturbedMap, a: &OrbitRecord, b: &OrbitRecord, tol: f64) -> bool {
    a.q == b.q
        && a.points.iter().all(|p| {
            t.local_symmetry_l(p)
                .map(|l| b.find(&l, tol).is_some())
                .unwrap_or(false)
        })
}

#[cfg(test)]
mod tests {
    use super::super::tests::{pitchfork_family, three};
    use super::super::{newton_refine, StabilityClass};
    use super::*;
    use crate::family::Family;
    use crate::scalar::ratio;
    use crate::Permutation;

    fn quick() -> SearchConfig {
        SearchConfig {
            gamma: GammaConfig {
                base_samples: 600,
                ..GammaConfig::default()
            },
            ..SearchConfig::default()
        }
    }

    #[test]
    fn pitchfork_family_symmetric_period_two() {
        let t = pitchfork_family(1e-3);
        let s = find_symmetric(&t, 2, &quick()).unwrap();
        let two: Vec<_> = s.orbits.iter().filter(|o| o.q == 2).collect();
        let near = |x: f64| {
            two.iter().find(|o| {
                o.points
                    .iter()
                    .any(|p| (p.x - x).abs() < 0.01 && (p.y - 0.5).abs() < 0.05)
            })
        };
        let a = near(0.245).expect("orbit near 0.245");
        let b = near(0.495).expect("orbit near 0.495");
        assert_eq!(a.class, StabilityClass::Elliptic);
        assert_eq!(b.class, StabilityClass::Hyperbolic);
        for o in &s.orbits {
            let w = o.witness.unwrap();
            let z = o.points[w.point];
            assert!(t.symmetry_i(&z, w.j).unwrap().dist(&z) <= 1e-8);
            assert!(t.symmetry_i(&z, w.k).unwrap().dist(&z) <= 1e-8);
        }
    }

    #[test]
    fn small_q_max_finds_nothing() {
        // a fixed point needs w_B = l_C - l_A = 0, never met here
        let fam = Family::linear(
            Permutation::reversing(3),
            vec![ratio(1, 10), ratio(1, 10), ratio(4, 5)],
            vec![ratio(1, 5), ratio(1, 10), ratio(7, 10)],
            (0.0, 1.0),
        )
        .unwrap();
        let t = PerturbedMap::new(fam, crate::Forcing::sine(1), 0.0).unwrap();
        let s = find_symmetric(&t, 1, &quick()).unwrap();
        assert!(s.orbits.is_empty());
    }

    #[test]
    fn three_interval_prediction() {
        let t0 = three(9, 0.0);
        let sym = newton_refine(&t0, &PhasePoint::new(0.5, 0.5), 1, true).unwrap();
        let p = predict_nonsymmetric(&t0, &sym, 9, &OrbitTolerances::default()).unwrap();
        assert!((p.width - 0.3).abs() < 1e-12);
        assert_eq!(p.count, 4);
        let mut xs: Vec<f64> = p.seeds.iter().map(|s| s.x).collect();
        xs.sort_by(f64::total_cmp);
        let expect = [
            0.5 - 1.0 / 9.0,
            0.5 - 1.0 / 18.0,
            0.5 + 1.0 / 18.0,
            0.5 + 1.0 / 9.0,
        ];
        for (x, e) in xs.iter().zip(expect) {
            assert!((x - e).abs() < 1e-15);
        }
        for ell in [1, 2, 3] {
            let t = three(ell, 0.0);
            let sym = newton_refine(&t, &PhasePoint::new(0.5, 0.5), 1, true).unwrap();
            assert_eq!(
                predict_nonsymmetric(&t, &sym, ell, &OrbitTolerances::default())
                    .unwrap()
                    .count,
                0
            );
        }

        let t = three(9, 1e-3);
        let found: Vec<_> = confirm_nonsymmetric(&t, &p, &OrbitTolerances::default())
            .into_iter()
            .map(|r| r.unwrap())
            .collect();
        assert_eq!(found.len(), 4);
        for r in &found {
            assert!(!r.symmetric);
            let d = (r.points[0].x - 0.5).abs();
            if (d - 1.0 / 18.0).abs() < 0.01 {
                assert_eq!(r.class, StabilityClass::Elliptic);
            } else {
                assert!((d - 1.0 / 9.0).abs() < 0.01);
                assert_eq!(r.class, StabilityClass::Hyperbolic);
            }
        }
        // the pairs x0 ± d are L-images of each other
        assert!(found
            .iter()
            .all(|a| found.iter().any(|b| l_related(&t, a, b, 1e-8) && a != b)));
    }

    #[test]
    fn balanced_orbit_is_rejected() {
        // rotation by 1/2: the orbit {1/2, 0} is symmetric and balanced for l = 1
        let t = PerturbedMap::standard(0.0).unwrap();
        let orbit = OrbitRecord::from_point(&t, &PhasePoint::new(0.5, 0.5), 2).unwrap();
        assert!(orbit.symmetric);
        assert_eq!(
            predict_nonsymmetric(&t, &orbit, 1, &OrbitTolerances::default()).unwrap_err(),
            Error::BalancedOrbit { ell: 1 }
        );
    }
}
