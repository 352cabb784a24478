//! The area-preserving map
//! `T(x, y) = (x', y + eps f(x'))` with `x' = x + omega_a(y) mod 1`.

use crate::error::{Error, Result};
use crate::family::{Family, Slice};
use crate::scalar::{circle_dist, unit, Coord};
use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt::Write as _;

/// Distance to a discontinuity below which derivatives are not trusted.
pub const DISCONTINUITY_TOL: f64 = 1e-12;

/// Odd forcing `f(x) = sum a_l sin(2 pi l x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forcing {
    terms: Vec<(u32, f64)>,
}

impl Forcing {
    pub fn new(terms: Vec<(u32, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidForcing("no terms".into()));
        }
        for &(ell, a) in &terms {
            if ell == 0 {
                return Err(Error::InvalidForcing(
                    "harmonic 0 is a constant term; only sine terms with l >= 1 are odd".into(),
                ));
            }
            if !a.is_finite() {
                return Err(Error::InvalidForcing(format!(
                    "amplitude {} for harmonic {}",
                    a, ell
                )));
            }
        }
        Ok(Self { terms })
    }

    /// `f(x) = sin(2 pi l x)`.
    pub fn sine(ell: u32) -> Self {
        Self::new(vec![(ell, 1.0)]).expect("l >= 1")
    }

    pub fn terms(&self) -> &[(u32, f64)] {
        &self.terms
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(l, a)| a * (TAU * l as f64 * x).sin())
            .sum()
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(l, a)| a * TAU * l as f64 * (TAU * l as f64 * x).cos())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
    /// Interval of the partition at height `y` containing `x`.
    pub alpha: Option<usize>,
}

impl PhasePoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y, alpha: None }
    }

    /// Distance on the cylinder (x on the circle).
    pub fn dist(&self, other: &PhasePoint) -> f64 {
        circle_dist(self.x, other.x).hypot(self.y - other.y)
    }

    /// Distance on the torus, for periodic `y`.
    pub fn dist_torus(&self, other: &PhasePoint) -> f64 {
        circle_dist(self.x, other.x).hypot(circle_dist(self.y, other.y))
    }
}

/// Jacobian of one step together with a flag for points too close to a
/// discontinuity for the derivative to be meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepJacobian {
    pub matrix: Matrix2<f64>,
    pub near_discontinuity: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// All visited points when recording, otherwise only the last one.
    pub points: Vec<PhasePoint>,
    pub steps: usize,
    /// Set when the orbit left the domain; `steps` counts completed steps.
    pub escaped: bool,
}

impl Trajectory {
    pub fn last(&self) -> &PhasePoint {
        self.points
            .last()
            .expect("trajectory holds at least one point")
    }

    /// CSV with header `step,x,y,alpha`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,x,y,alpha\n");
        let first = self.steps + 1 - self.points.len();
        for (k, p) in self.points.iter().enumerate() {
            let a = p.alpha.map(|a| a.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{}", first + k, p.x, p.y, a);
        }
        s
    }
}

/// A perturbed symmetric family.
#[derive(Debug, Clone)]
pub struct PerturbedMap {
    fam: Family,
    forcing: Forcing,
    eps: f64,
}

impl PerturbedMap {
    pub fn new(fam: Family, forcing: Forcing, eps: f64) -> Result<Self> {
        if !fam.is_symmetric() {
            return Err(Error::NotSymmetric);
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Precondition(format!("eps = {} must be >= 0", eps)));
        }
        Ok(Self { fam, forcing, eps })
    }

    /// The Chirikov standard map `x' = x + y`, `y' = y + eps sin(2 pi x')`.
    pub fn standard(eps: f64) -> Result<Self> {
        Self::new(Family::standard_map(), Forcing::sine(1), eps)
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.fam.clone(), self.forcing.clone(), eps)
    }

    pub fn family(&self) -> &Family {
        &self.fam
    }

    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Reduces a new height into the domain, returning it with the number of
    /// turns it wrapped by (always 0 for a non-periodic domain).
    fn settle_y(&self, from: &PhasePoint, y: f64) -> Result<(f64, i64)> {
        if self.fam.periodic_y() {
            let turns = y.floor();
            Ok((y.frac(), turns as i64))
        } else if self.fam.contains_y(y) {
            Ok((y, 0))
        } else {
            Err(Error::BoundaryEscape {
                step: 1,
                state: *from,
                attempted_y: y,
            })
        }
    }

    fn tagged(&self, x: f64, y: f64) -> PhasePoint {
        PhasePoint {
            x,
            y,
            alpha: self.fam.locate(x, y).ok(),
        }
    }

    /// One step; also returns the interval the step used.
    pub fn step_slice(&self, p: &PhasePoint) -> Result<(PhasePoint, Slice)> {
        self.step_traced(p).map(|(q, s, _)| (q, s))
    }

    /// One step with the slice used and the number of turns `y` wrapped by.
    pub fn step_traced(&self, p: &PhasePoint) -> Result<(PhasePoint, Slice, i64)> {
        let s = self.fam.slice(p.x, p.y)?;
        let y0 = self.fam.check_y(p.y)?;
        let x1 = unit(p.x.frac() + s.omega);
        let (y1, turns) = self.settle_y(p, y0 + self.eps * self.forcing.eval(x1))?;
        Ok((self.tagged(x1, y1), s, turns))
    }

    pub fn step(&self, p: &PhasePoint) -> Result<PhasePoint> {
        self.step_traced(p).map(|r| r.0)
    }

    /// Inverse step; the slice is the one the forward step from the result
    /// uses.
    pub fn step_inverse_traced(&self, p: &PhasePoint) -> Result<(PhasePoint, Slice, i64)> {
        let y0 = self.fam.check_y(p.y)?;
        let x1 = p.x.frac();
        let (y, turns) = self.settle_y(p, y0 - self.eps * self.forcing.eval(x1))?;
        let s = self.fam.preimage_slice(x1, y)?;
        let x = unit(x1 - s.omega);
        let q = PhasePoint {
            x,
            y,
            alpha: Some(s.alpha),
        };
        Ok((q, s, turns))
    }

    pub fn step_inverse(&self, p: &PhasePoint) -> Result<PhasePoint> {
        self.step_inverse_traced(p).map(|r| r.0)
    }

    /// `S(x, y) = (R(x), y - eps f(x))`.
    pub fn symmetry_s(&self, p: &PhasePoint) -> PhasePoint {
        let x = (-p.x).frac();
        let mut y = p.y - self.eps * self.forcing.eval(p.x);
        if self.fam.periodic_y() {
            y = y.frac();
        }
        self.tagged(x, y)
    }

    /// `L(x, y) = (R(F_y(x)), y)`: reflection of each interval about its
    /// midpoint.
    pub fn local_symmetry_l(&self, p: &PhasePoint) -> Result<PhasePoint> {
        let s = self.fam.slice(p.x, p.y)?;
        let x1 = unit(p.x.frac() + s.omega);
        Ok(PhasePoint {
            x: (-x1).frac(),
            y: p.y,
            alpha: self.fam.locate(-x1, p.y).ok(),
        })
    }

    /// `[[1, w'], [eps f'(x'), 1 + eps f'(x') w']]`.
    pub fn jacobian_step(&self, p: &PhasePoint) -> Result<StepJacobian> {
        let s = self.fam.slice(p.x, p.y)?;
        let x1 = unit(p.x.frac() + s.omega);
        let k = self.eps * self.forcing.deriv(x1);
        let matrix = Matrix2::new(1.0, s.omega_deriv, k, 1.0 + k * s.omega_deriv);
        let near_discontinuity = self.distance_to_discontinuity(p)? < DISCONTINUITY_TOL;
        Ok(StepJacobian {
            matrix,
            near_discontinuity,
        })
    }

    /// Distance from `x` to the nearest interval endpoint at height `y`.
    pub fn distance_to_discontinuity(&self, p: &PhasePoint) -> Result<f64> {
        let lefts = self.fam.left_endpoints(p.y)?;
        Ok(lefts
            .iter()
            .map(|&l| circle_dist(p.x, l))
            .fold(f64::INFINITY, f64::min))
    }

    /// `n` steps from `p`. Leaving the domain stops the orbit and sets the
    /// `escaped` flag.
    pub fn iterate(&self, p: &PhasePoint, n: usize, record: bool) -> Trajectory {
        let start = self.tagged(p.x.frac(), p.y);
        let mut points = vec![start];
        let mut cur = start;
        for k in 0..n {
            match self.step(&cur) {
                Ok(next) => {
                    cur = next;
                    if record {
                        points.push(cur);
                    } else {
                        points[0] = cur;
                    }
                }
                Err(_) => {
                    return Trajectory {
                        points,
                        steps: k,
                        escaped: true,
                    }
                }
            }
        }
        Trajectory {
            points,
            steps: n,
            escaped: false,
        }
    }

    /// `T^n` for any integer `n`, using inverse steps for negative powers.
    pub fn power(&self, p: &PhasePoint, n: i64) -> Result<PhasePoint> {
        let mut cur = *p;
        for k in 0..n.unsigned_abs() {
            let next = if n >= 0 {
                self.step(&cur)
            } else {
                self.step_inverse(&cur)
            };
            cur = next.map_err(|e| match e {
                Error::BoundaryEscape {
                    state, attempted_y, ..
                } => Error::BoundaryEscape {
                    step: k as usize + 1,
                    state,
                    attempted_y,
                },
                other => other,
            })?;
        }
        Ok(cur)
    }

    /// `S_i = T^i ∘ S`.
    pub fn symmetry_i(&self, p: &PhasePoint, i: i64) -> Result<PhasePoint> {
        self.power(&self.symmetry_s(p), i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::Permutation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pitchfork_family(eps: f64) -> PerturbedMap {
        let fam = Family::linear_decimal(
            Permutation::reversing(4),
            &[0.38, 0.01, 0.01, 0.6],
            &[0.6, 0.01, 0.01, 0.38],
            (0.0, 1.0),
        )
        .unwrap();
        PerturbedMap::new(fam, Forcing::sine(1), eps).unwrap()
    }

    fn chirikov(x: f64, y: f64, eps: f64) -> (f64, f64) {
        let x1 = (x + y).rem_euclid(1.0);
        let y1 = (y + eps * (TAU * x1).sin()).rem_euclid(1.0);
        (x1, y1)
    }

    #[test]
    fn forcing_is_odd() {
        let f = Forcing::new(vec![(1, 1.0), (3, -0.2)]).unwrap();
        for k in 0..50 {
            let x = k as f64 / 50.0;
            assert!((f.eval((-x).rem_euclid(1.0)) + f.eval(x)).abs() < 1e-12);
        }
        assert!(f.eval(0.0).abs() < 1e-15 && f.eval(0.5).abs() < 1e-12);
        assert!(Forcing::new(vec![(0, 1.0)]).is_err());
        assert!(Forcing::new(vec![]).is_err());
    }

    #[test]
    fn unperturbed_step_is_the_exchange() {
        let t = pitchfork_family(0.0);
        let iem = t.family().iem_at(0.3).unwrap();
        for k in 0..100 {
            let x = (k as f64 + 0.25) / 100.0;
            let p = t.step(&PhasePoint::new(x, 0.3)).unwrap();
            assert_eq!(p.y, 0.3);
            assert!((p.x - iem.evaluate(&x)).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_chirikov_per_step() {
        let t = PerturbedMap::standard(0.1545).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let (x, y) = (rng.gen::<f64>(), rng.gen::<f64>());
            let p = t.step(&PhasePoint::new(x, y)).unwrap();
            let (cx, cy) = chirikov(x, y, 0.1545);
            assert!(circle_dist(p.x, cx) <= 1e-12 && circle_dist(p.y, cy) <= 1e-12);
        }
    }

    #[test]
    fn closed_left_convention() {
        let t = pitchfork_family(0.0);
        let lefts = t.family().left_endpoints(0.5).unwrap();
        let p = t.step(&PhasePoint::new(lefts[1], 0.5)).unwrap();
        let w = t.family().omega_at(0.5, 1).unwrap();
        assert!((p.x - (lefts[1] + w)).abs() < 1e-15);
    }

    #[test]
    fn inverse_and_symmetries() {
        let t = pitchfork_family(0.02);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let p = PhasePoint::new(rng.gen(), rng.gen_range(0.2..0.8));
            let q = t.step(&p).unwrap();
            let back = t.step_inverse(&q).unwrap();
            assert!(back.dist(&p) <= 1e-13);
            let s = t.symmetry_s(&p);
            assert!(t.symmetry_s(&s).dist(&p) <= 1e-13);
            let l = t.local_symmetry_l(&p).unwrap();
            assert_eq!(l.y, p.y);
            assert_eq!(l.alpha, p.alpha.or(t.family().locate(p.x, p.y).ok()));
            assert!(t.local_symmetry_l(&l).unwrap().dist(&p) <= 1e-13);
            let lhs = t.step(&t.symmetry_s(&q)).unwrap();
            assert!(lhs.dist(&t.symmetry_s(&p)) <= 1e-12);
        }
    }

    #[test]
    fn gamma_zero_points_are_fixed_by_s() {
        let t = pitchfork_family(0.05);
        for y in [0.1, 0.5, 0.9] {
            for x in [0.0, 0.5] {
                let s = t.symmetry_s(&PhasePoint::new(x, y));
                assert!(s.dist(&PhasePoint::new(x, y)) < 1e-15);
            }
        }
    }

    #[test]
    fn midpoints_are_fixed_by_l() {
        let t = pitchfork_family(0.05);
        let m = t.family().midpoints(0.4).unwrap();
        for x in m {
            let l = t.local_symmetry_l(&PhasePoint::new(x, 0.4)).unwrap();
            assert!(circle_dist(l.x, x) < 1e-15);
        }
    }

    #[test]
    fn jacobian_examples() {
        let t = pitchfork_family(0.0);
        let j = t.jacobian_step(&PhasePoint::new(0.1, 0.5)).unwrap();
        assert_eq!(j.matrix, Matrix2::new(1.0, -0.22, 0.0, 1.0));
        let t = pitchfork_family(0.03);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-6;
        let mut checked = 0;
        while checked < 200 {
            let p = PhasePoint::new(rng.gen(), rng.gen_range(0.2..0.8));
            if t.distance_to_discontinuity(&p).unwrap() < 1e-3 {
                continue;
            }
            let j = t.jacobian_step(&p).unwrap();
            assert!(!j.near_discontinuity);
            assert!((j.matrix.determinant() - 1.0).abs() < 1e-14);
            let diff = |dx: f64, dy: f64| {
                let a = t.step(&PhasePoint::new(p.x + dx, p.y + dy)).unwrap();
                let b = t.step(&PhasePoint::new(p.x - dx, p.y - dy)).unwrap();
                (
                    crate::scalar::wrap_centered(a.x - b.x) / (2.0 * h),
                    (a.y - b.y) / (2.0 * h),
                )
            };
            let (a, c) = diff(h, 0.0);
            let (b, d) = diff(0.0, h);
            let fd = Matrix2::new(a, b, c, d);
            assert!((fd - j.matrix).abs().max() < 1e-6);
            checked += 1;
        }
        let lefts = t.family().left_endpoints(0.5).unwrap();
        assert!(
            t.jacobian_step(&PhasePoint::new(lefts[2], 0.5))
                .unwrap()
                .near_discontinuity
        );
    }

    #[test]
    fn iterate_records_and_escapes() {
        let t = pitchfork_family(0.05);
        let traj = t.iterate(&PhasePoint::new(0.3, 0.5), 0, true);
        assert_eq!(traj.points.len(), 1);
        assert_eq!(traj.to_csv().lines().count(), 2);
        let traj = t.iterate(&PhasePoint::new(0.3, 0.5), 50, true);
        assert_eq!(traj.points.len(), 51);
        let short = t.iterate(&PhasePoint::new(0.3, 0.5), 50, false);
        assert_eq!(short.points.len(), 1);
        assert_eq!(short.last(), traj.last());
        // strong forcing right at the edge of the domain
        let t = pitchfork_family(0.5);
        let traj = t.iterate(&PhasePoint::new(0.7, 0.999), 100, true);
        assert!(traj.escaped);
        assert!(matches!(
            t.step(&PhasePoint::new(0.7, 0.999)),
            Err(Error::BoundaryEscape { .. })
        ));
    }

    #[test]
    fn unperturbed_orbits_stay_on_their_level() {
        let t = pitchfork_family(0.0);
        let traj = t.iterate(&PhasePoint::new(0.123, 0.4567), 500, true);
        assert!(traj.points.iter().all(|p| p.y == 0.4567));
    }

    #[test]
    fn requires_reversing_permutation() {
        let fam = Family::linear_decimal(
            Permutation::new(vec![3, 2, 4, 1]).unwrap(),
            &[0.1, 0.2, 0.3, 0.4],
            &[0.1, 0.2, 0.3, 0.4],
            (0.0, 1.0),
        )
        .unwrap();
        assert_eq!(
            PerturbedMap::new(fam, Forcing::sine(1), 0.1).unwrap_err(),
            Error::NotSymmetric
        );
    }
}
