//! Periodic orbits of the perturbed map: Newton refinement on the residual
//! `G`, stability, balance, symmetric search and continuation in `eps`.

mod search;
mod sweep;

pub use search::{
    confirm_nonsymmetric, find_symmetric, l_related, predict_nonsymmetric, Diagnostic, Prediction,
    SearchConfig, SymmetricSearch,
};
pub use sweep::{sweep_eps, Sweep, SweepConfig, SweepEvent, SweepRow, TRACK_CSV_HEADER};

use crate::error::{Error, Result};
use crate::perturbed::{PerturbedMap, PhasePoint};
use crate::scalar::{wrap_centered, Coord};
use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;

/// Closure tolerance for `T^q(z) = z`.
pub const ORBIT_TOL: f64 = 1e-10;
/// Newton stops once `|G|` is below this.
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;
/// `|det DG|` below this, relative to the squared size of the entries of
/// `DG`, is treated as a failure of persistence.
pub const SINGULAR_TOL: f64 = 1e-14;
pub const RESIDUE_TOL: f64 = 1e-12;
pub const BALANCE_TOL: f64 = 1e-9;
/// Keeps the closure test on `sum f(x_k)` finite at `eps = 0`.
pub const EPS_FLOOR: f64 = 1e-8;

/// Tolerances of Newton refinement and of the orbit record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitTolerances {
    pub orbit_tol: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub singular_tol: f64,
    pub residue_tol: f64,
    pub balance_tol: f64,
}

impl Default for OrbitTolerances {
    fn default() -> Self {
        Self {
            orbit_tol: ORBIT_TOL,
            newton_tol: NEWTON_TOL,
            newton_max_iter: NEWTON_MAX_ITER,
            singular_tol: SINGULAR_TOL,
            residue_tol: RESIDUE_TOL,
            balance_tol: BALANCE_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityClass {
    Elliptic,
    Hyperbolic,
    HyperbolicWithReflection,
    Parabolic,
}

impl fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StabilityClass::Elliptic => "elliptic",
            StabilityClass::Hyperbolic => "hyperbolic",
            StabilityClass::HyperbolicWithReflection => "hyperbolic-with-reflection",
            StabilityClass::Parabolic => "parabolic",
        })
    }
}

/// Class of a residue. A residue of 1 (eigenvalues -1) is treated as
/// parabolic as well as a residue of 0.
pub fn classify(residue: f64, tol: f64) -> StabilityClass {
    if residue.abs() <= tol || (residue - 1.0).abs() <= tol {
        StabilityClass::Parabolic
    } else if residue < 0.0 {
        StabilityClass::Hyperbolic
    } else if residue < 1.0 {
        StabilityClass::Elliptic
    } else {
        StabilityClass::HyperbolicWithReflection
    }
}

/// Trigonometric sums of an orbit for one harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Balance {
    pub ell: u32,
    pub s: f64,
    pub c: f64,
    pub balanced: bool,
}

/// `S_l = sum sin(2 pi l x_k)` and `C_l = sum cos(2 pi l x_k)`.
pub fn balance(points: &[PhasePoint], ell: u32) -> Balance {
    balance_with(points, ell, BALANCE_TOL)
}

pub fn balance_with(points: &[PhasePoint], ell: u32, tol: f64) -> Balance {
    let w = TAU * ell as f64;
    let s: f64 = points.iter().map(|p| (w * p.x).sin()).sum();
    let c: f64 = points.iter().map(|p| (w * p.x).cos()).sum();
    Balance {
        ell,
        s,
        c,
        balanced: s.abs() <= tol && c.abs() <= tol,
    }
}

/// Point `point` of the orbit lies on `Γ_j` and `Γ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryWitness {
    pub point: usize,
    pub j: i64,
    pub k: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub q: usize,
    pub points: Vec<PhasePoint>,
    pub eps: f64,
    pub symmetric: bool,
    pub witness: Option<SymmetryWitness>,
    pub itinerary: Vec<usize>,
    #[serde(rename = "M")]
    pub m: f64,
    pub residue: f64,
    pub class: StabilityClass,
    pub balance: Vec<Balance>,
    /// False when an orbit point sits on a discontinuity.
    pub residue_reliable: bool,
}

impl OrbitRecord {
    /// Builds the record of a closed orbit through `start`.
    pub fn from_point(t: &PerturbedMap, start: &PhasePoint, q: usize) -> Result<Self> {
        Self::from_point_with(t, start, q, &OrbitTolerances::default())
    }

    pub fn from_point_with(
        t: &PerturbedMap,
        start: &PhasePoint,
        q: usize,
        tol: &OrbitTolerances,
    ) -> Result<Self> {
        let mut points = Vec::with_capacity(q);
        let mut p = PhasePoint {
            alpha: Some(t.family().locate(start.x, start.y)?),
            ..*start
        };
        for _ in 0..q {
            points.push(p);
            p = t.step(&p)?;
        }
        let itinerary = points.iter().map(|p| p.alpha.expect("tagged")).collect();
        let (residue, residue_reliable) = residue(t, &points)?;
        let m = evaluate_m(t, &points)?;
        let witness = symmetry_witness(t, &points);
        Ok(OrbitRecord {
            q,
            eps: t.eps(),
            symmetric: witness.is_some(),
            witness,
            itinerary,
            m,
            residue,
            class: classify(residue, tol.residue_tol),
            balance: t
                .forcing()
                .terms()
                .iter()
                .map(|&(l, _)| balance_with(&points, l, tol.balance_tol))
                .collect(),
            residue_reliable,
            points,
        })
    }

    /// Index of the point matching `z`, if any.
    pub fn find(&self, z: &PhasePoint, tol: f64) -> Option<usize> {
        self.points.iter().position(|p| p.dist(z) <= tol)
    }

    /// Same orbit, possibly started at another point.
    pub fn same_orbit(&self, other: &OrbitRecord, tol: f64) -> bool {
        self.q == other.q && other.find(&self.points[0], tol).is_some()
    }

    /// Restarts the orbit at its point with the smallest `(y, x)`.
    pub fn canonicalize(&mut self) {
        let k = (0..self.q)
            .min_by(|&a, &b| {
                let (p, q) = (&self.points[a], &self.points[b]);
                p.y.total_cmp(&q.y).then(p.x.total_cmp(&q.x))
            })
            .unwrap_or(0);
        self.points.rotate_left(k);
        self.itinerary.rotate_left(k);
        // the witnessing point keeps its lines, only its index moves
        if let Some(w) = &mut self.witness {
            w.point = (w.point + self.q - k) % self.q;
        }
    }
}

/// `M = (sum f'(x_k)) (sum w'_{a_k}(y_0))`.
pub fn evaluate_m(t: &PerturbedMap, points: &[PhasePoint]) -> Result<f64> {
    let y0 = points
        .first()
        .ok_or_else(|| Error::Precondition("empty orbit".into()))?
        .y;
    let fam = t.family();
    let mut sf = 0.0;
    let mut sw = 0.0;
    for p in points {
        sf += t.forcing().deriv(p.x);
        sw += fam.omega_deriv(y0, fam.locate(p.x, p.y)?)?;
    }
    Ok(sf * sw)
}

/// Monodromy matrix `D(T^q)` along the orbit, with a flag for points on a
/// discontinuity.
pub fn monodromy(t: &PerturbedMap, points: &[PhasePoint]) -> Result<(Matrix2<f64>, bool)> {
    let mut m = Matrix2::identity();
    let mut near = false;
    for p in points {
        let j = t.jacobian_step(p)?;
        m = j.matrix * m;
        near |= j.near_discontinuity;
    }
    Ok((m, near))
}

/// Greene's residue `(2 - tr D(T^q)) / 4` and whether it can be trusted.
pub fn residue(t: &PerturbedMap, points: &[PhasePoint]) -> Result<(f64, bool)> {
    let (m, near) = monodromy(t, points)?;
    Ok(((2.0 - m.trace()) / 4.0, !near))
}

/// Finds the witnessing symmetry lines for a symmetric orbit.
///
/// If `S(z_0) = z_m` then `z_r` lies on `Γ_i` for `i = 2r - m (mod q)`;
/// reported for `r = 0` with `i` in `[-1, q - 1)` and its partner `i + q`.
fn symmetry_witness(t: &PerturbedMap, points: &[PhasePoint]) -> Option<SymmetryWitness> {
    let q = points.len() as i64;
    let s0 = t.symmetry_s(&points[0]);
    let m = points.iter().position(|p| p.dist(&s0) <= 1e-8)? as i64;
    let mut i = (-m).rem_euclid(q);
    if i == q - 1 {
        i = -1;
    }
    Some(SymmetryWitness {
        point: 0,
        j: i,
        k: i + q,
    })
}

/// Residual `G(x0, y0) = (sum w_{a_k}(y_k), sum_{k=1..q} f(x_k))` along a
/// fixed itinerary, the first component wrapped to `(-1/2, 1/2]`.
pub struct ResidualG<'a> {
    t: &'a PerturbedMap,
    itinerary: Vec<usize>,
}

impl<'a> ResidualG<'a> {
    pub fn new(t: &'a PerturbedMap, itinerary: Vec<usize>) -> Self {
        Self { t, itinerary }
    }

    /// The itinerary followed by `T` from `seed` for `q` steps.
    pub fn from_seed(t: &'a PerturbedMap, seed: &PhasePoint, q: usize) -> Result<Self> {
        Ok(Self::new(t, itinerary_of(t, seed, q)?))
    }

    pub fn itinerary(&self) -> &[usize] {
        &self.itinerary
    }

    /// `G` and `DG` by forward accumulation of the partial derivatives.
    pub fn eval(&self, x0: f64, y0: f64) -> (Vector2<f64>, Matrix2<f64>) {
        let fam = self.t.family();
        let eps = self.t.eps();
        let periodic = fam.periodic_y();
        let (mut x, mut y) = (x0, y0);
        // gradients of x_k and y_k with respect to (x0, y0)
        let mut dx = Vector2::new(1.0, 0.0);
        let mut dy = Vector2::new(0.0, 1.0);
        let (mut g1, mut g2) = (0.0, 0.0);
        let mut dg1 = Vector2::zeros();
        let mut dg2 = Vector2::zeros();
        for &a in &self.itinerary {
            let (w, dw) = fam.omega_unchecked(y, a);
            g1 += w;
            dg1 += dy * dw;
            x += w;
            dx += dy * dw;
            let fx = self.t.forcing().eval(x);
            let dfx = self.t.forcing().deriv(x);
            g2 += fx;
            dg2 += dx * dfx;
            y += eps * fx;
            dy += dx * (eps * dfx);
            if periodic {
                y = y.frac();
            }
        }
        (
            Vector2::new(wrap_centered(g1), g2),
            Matrix2::new(dg1.x, dg1.y, dg2.x, dg2.y),
        )
    }
}

/// Intervals visited by `seed` in its first `q` steps.
pub fn itinerary_of(t: &PerturbedMap, seed: &PhasePoint, q: usize) -> Result<Vec<usize>> {
    let mut p = *seed;
    let mut out = Vec::with_capacity(q);
    for _ in 0..q {
        let (next, s) = t.step_slice(&p)?;
        out.push(s.alpha);
        p = next;
    }
    Ok(out)
}

fn closure_distance(t: &PerturbedMap, z: &PhasePoint, n: usize) -> Result<f64> {
    let w = t.power(z, n as i64)?;
    Ok(if t.family().periodic_y() {
        w.dist_torus(z)
    } else {
        w.dist(z)
    })
}

/// Smallest divisor `p` of `q` with `T^p(z) = z`.
pub fn minimal_period(t: &PerturbedMap, z: &PhasePoint, q: usize) -> Result<usize> {
    minimal_period_with(t, z, q, ORBIT_TOL)
}

pub fn minimal_period_with(
    t: &PerturbedMap,
    z: &PhasePoint,
    q: usize,
    orbit_tol: f64,
) -> Result<usize> {
    for p in 1..q {
        if q.is_multiple_of(p) && closure_distance(t, z, p)? <= orbit_tol {
            return Ok(p);
        }
    }
    Ok(q)
}

/// Newton's method on `G` from `seed`. With `freeze_itinerary` the itinerary
/// of the seed is kept throughout and checked against the converged orbit;
/// otherwise it is recomputed at every iterate.
pub fn newton_refine(
    t: &PerturbedMap,
    seed: &PhasePoint,
    q: usize,
    freeze_itinerary: bool,
) -> Result<OrbitRecord> {
    newton_refine_with(t, seed, q, freeze_itinerary, &OrbitTolerances::default())
}

pub fn newton_refine_with(
    t: &PerturbedMap,
    seed: &PhasePoint,
    q: usize,
    freeze_itinerary: bool,
    tol: &OrbitTolerances,
) -> Result<OrbitRecord> {
    if q == 0 {
        return Err(Error::Precondition("period must be at least 1".into()));
    }
    let fam = t.family();
    let mut g = ResidualG::from_seed(t, seed, q)?;
    let (mut x, mut y) = (seed.x.frac(), seed.y);
    let mut norm = f64::INFINITY;
    let mut converged = false;
    for _ in 0..=tol.newton_max_iter {
        if !freeze_itinerary {
            g = ResidualG::from_seed(t, &PhasePoint::new(x, y), q)?;
        }
        let (r, d) = g.eval(x, y);
        norm = r.norm();
        let det = d.determinant();
        // a zero with singular DG is not isolated, so it does not persist;
        // det is quadratic in the entries, hence the scale
        let scale = d.abs().max().max(1.0).powi(2);
        if det.abs() < tol.singular_tol * scale || !det.is_finite() {
            return Err(Error::DegeneratePersistence { det });
        }
        if norm <= tol.newton_tol {
            converged = true;
            break;
        }
        let step = d
            .try_inverse()
            .ok_or(Error::DegeneratePersistence { det })?
            * r;
        x = (x - step.x).frac();
        y -= step.y;
        if fam.periodic_y() {
            y = y.frac();
        }
        if !fam.contains_y(y) || !x.is_finite() {
            return Err(Error::NewtonFailure {
                iterations: tol.newton_max_iter,
                residual: norm,
            });
        }
    }
    if !converged {
        return Err(Error::NewtonFailure {
            iterations: tol.newton_max_iter,
            residual: norm,
        });
    }

    let z = PhasePoint::new(x, y);
    let observed = itinerary_of(t, &z, q)?;
    if observed != g.itinerary() {
        return Err(Error::ItineraryMismatch {
            expected: g.itinerary().to_vec(),
            observed,
        });
    }
    let distance = closure_distance(t, &z, q)?;
    if distance > tol.orbit_tol {
        return Err(Error::NotClosed { distance });
    }
    let sum_f: f64 = g.eval(x, y).0.y;
    if sum_f.abs() > tol.orbit_tol / t.eps().max(EPS_FLOOR) {
        return Err(Error::NotClosed {
            distance: sum_f.abs(),
        });
    }
    let p = minimal_period_with(t, &z, q, tol.orbit_tol)?;
    OrbitRecord::from_point_with(t, &z, p, tol)
}
