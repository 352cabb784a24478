//! Symmetry lines `Γ_i = Fix(T^i ∘ S)` of a perturbed symmetric family.
//!
//! Only the two primary lines are known in closed form: `Γ_0` is the pair of
//! vertical lines `x = 0` and `x = 1/2`, and `Γ_{-1}` is the union of the
//! midpoint curves of the elemental subintervals. Every other line is a
//! pushforward, `Γ_{2n} = T^n Γ_0` and `Γ_{2n+1} = T^{n+1} Γ_{-1}`.

use crate::error::{Error, Result};
use crate::perturbed::{PerturbedMap, PhasePoint};
use crate::scalar::{circle_dist, Coord};
use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Sampling options for [`gamma`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaConfig {
    pub i_max: u32,
    pub base_samples: usize,
    /// Itinerary changes are resolved down to this separation in `y`.
    pub y_res: f64,
    /// Samples with `|S_i(z) - z|` above this are not on `Γ_i`.
    pub tol_line: f64,
}

impl Default for GammaConfig {
    fn default() -> Self {
        Self {
            i_max: 60,
            base_samples: 2000,
            y_res: 1e-6,
            tol_line: 1e-9,
        }
    }
}

/// Options for [`intersections`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionConfig {
    pub param_tol: f64,
    pub dedup_tol: f64,
    pub orbit_tol: f64,
    /// Crossings with `|sin(angle)|` below this are reported as tangential.
    pub angle_tol: f64,
    /// A crossing must be within this of both fixed sets.
    pub tol_line: f64,
}

impl Default for IntersectionConfig {
    fn default() -> Self {
        Self {
            param_tol: 1e-12,
            dedup_tol: 1e-9,
            orbit_tol: 1e-10,
            angle_tol: 1e-6,
            tol_line: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    /// `Γ_0`; branch 0 is `x = 0`, branch 1 is `x = 1/2`.
    Gamma0,
    /// `Γ_{-1}`; branch `b` is the midpoint curve of interval `b`.
    GammaMinus1,
}

impl Source {
    pub fn index(self) -> i64 {
        match self {
            Source::Gamma0 => 0,
            Source::GammaMinus1 => -1,
        }
    }
}

/// Source line and power of `T` generating `Γ_i`.
pub fn generation(i: i64) -> (Source, i64) {
    if i.rem_euclid(2) == 0 {
        (Source::Gamma0, i / 2)
    } else {
        (Source::GammaMinus1, (i + 1).div_euclid(2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSample {
    /// Height of the generating point on the source line.
    pub param: f64,
    pub x: f64,
    pub y: f64,
}

/// A piece of a branch along which the generating orbit keeps its itinerary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub itinerary: Vec<usize>,
    pub samples: Vec<LineSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub source_branch: usize,
    pub segments: Vec<Segment>,
    /// Some generating orbits left the domain.
    pub truncated: bool,
    /// Pieces too short to sample with two points; not emitted.
    pub unresolved: usize,
    /// Pieces whose pushed points are not fixed by `S_i`; not emitted.
    pub off_line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryLineSet {
    pub index: i64,
    pub source: Source,
    pub power: i64,
    pub branches: Vec<Branch>,
}

impl SymmetryLineSet {
    pub fn samples(&self) -> impl Iterator<Item = &LineSample> {
        self.branches
            .iter()
            .flat_map(|b| b.segments.iter().flat_map(|s| s.samples.iter()))
    }

    pub fn segment_count(&self) -> usize {
        self.branches.iter().map(|b| b.segments.len()).sum()
    }

    /// Rows `line_index,branch,segment,y_param,x,y`, without header.
    pub fn write_csv_rows(&self, out: &mut String) {
        for (bi, b) in self.branches.iter().enumerate() {
            for (si, s) in b.segments.iter().enumerate() {
                for p in &s.samples {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        self.index, bi, si, p.param, p.x, p.y
                    );
                }
            }
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        self.write_csv_rows(&mut s);
        s
    }
}

pub const CSV_HEADER: &str = "line_index,branch,segment,y_param,x,y\n";

/// Itinerary of a generating orbit: intervals visited and turns of `y`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Key {
    alphas: Vec<usize>,
    turns: Vec<i64>,
    /// The point is fixed by `S_i`. Pushforwards through a discontinuity can
    /// fail this under the closed-left convention.
    on_line: bool,
}

fn on_line(t: &PerturbedMap, p: &PhasePoint, i: i64, tol: f64) -> bool {
    t.symmetry_i(p, i)
        .map(|q| {
            let d = if t.family().periodic_y() {
                q.dist_torus(p)
            } else {
                q.dist(p)
            };
            d <= tol
        })
        .unwrap_or(false)
}

struct Generator<'a> {
    t: &'a PerturbedMap,
    source: Source,
    power: i64,
    branch: usize,
    tol_line: f64,
}

impl Generator<'_> {
    fn source_point(&self, param: f64) -> Option<PhasePoint> {
        let fam = self.t.family();
        match self.source {
            Source::Gamma0 => Some(PhasePoint::new(0.5 * self.branch as f64, param)),
            Source::GammaMinus1 => {
                let m = fam.midpoints(param).ok()?[self.branch];
                // A midpoint of an empty interval belongs to its neighbour.
                (fam.locate(m, param).ok()? == self.branch).then(|| PhasePoint::new(m, param))
            }
        }
    }

    fn eval(&self, param: f64) -> Option<(PhasePoint, Key)> {
        let mut p = self.source_point(param)?;
        let n = self.power.unsigned_abs() as usize;
        let mut key = Key {
            alphas: Vec::with_capacity(n),
            turns: Vec::new(),
            on_line: true,
        };
        for _ in 0..n {
            let (q, s, turns) = if self.power > 0 {
                self.t.step_traced(&p).ok()?
            } else {
                self.t.step_inverse_traced(&p).ok()?
            };
            key.alphas.push(s.alpha);
            if self.t.family().periodic_y() {
                key.turns.push(turns);
            }
            p = q;
        }
        if n > 0 {
            key.on_line = on_line(self.t, &p, self.index(), self.tol_line);
        }
        Some((p, key))
    }

    fn index(&self) -> i64 {
        match self.source {
            Source::Gamma0 => 2 * self.power,
            Source::GammaMinus1 => 2 * self.power - 1,
        }
    }

    fn point(&self, param: f64) -> Option<Vector2<f64>> {
        self.eval(param).map(|(p, _)| Vector2::new(p.x, p.y))
    }
}

type Sample = (f64, Option<(PhasePoint, Key)>);

fn same_key(a: &Option<(PhasePoint, Key)>, b: &Option<(PhasePoint, Key)>) -> bool {
    match (a, b) {
        (Some((_, ka)), Some((_, kb))) => ka == kb,
        (None, None) => true,
        _ => false,
    }
}

/// Inserts samples between `a` and `b` until every itinerary change is
/// pinned down to `y_res`.
fn split(g: &Generator<'_>, a: &Sample, b: &Sample, y_res: f64, out: &mut Vec<Sample>) {
    if same_key(&a.1, &b.1) || b.0 - a.0 <= y_res {
        return;
    }
    let mid = 0.5 * (a.0 + b.0);
    let m = (mid, g.eval(mid));
    split(g, a, &m, y_res, out);
    out.push(m.clone());
    split(g, &m, b, y_res, out);
}

fn params(t: &PerturbedMap, n: usize) -> Vec<f64> {
    let (lo, hi) = t.family().domain();
    let n = n.max(2);
    if t.family().periodic_y() {
        (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / n as f64)
            .collect()
    } else {
        (0..n)
            .map(|k| {
                if k == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

fn build_branch(g: &Generator<'_>, grid: &[f64], y_res: f64) -> Branch {
    let base: Vec<Sample> = grid.par_iter().map(|&s| (s, g.eval(s))).collect();
    let mut all = Vec::with_capacity(base.len());
    for w in base.windows(2) {
        all.push(w[0].clone());
        split(g, &w[0], &w[1], y_res, &mut all);
    }
    if let Some(last) = base.last() {
        all.push(last.clone());
    }

    let mut branch = Branch {
        source_branch: g.branch,
        segments: Vec::new(),
        truncated: false,
        unresolved: 0,
        off_line: 0,
    };
    let mut start = 0;
    while start < all.len() {
        let mut end = start + 1;
        while end < all.len() && same_key(&all[start].1, &all[end].1) {
            end += 1;
        }
        match &all[start].1 {
            None => {
                // escapes, or a midpoint of an empty interval
                if g.source_point(all[start].0).is_some() {
                    branch.truncated = true;
                }
            }
            Some((_, key)) if !key.on_line => branch.off_line += 1,
            Some((_, key)) if end - start >= 2 => branch.segments.push(Segment {
                itinerary: key.alphas.clone(),
                samples: all[start..end]
                    .iter()
                    .map(|(s, e)| {
                        let p = &e.as_ref().expect("same key").0;
                        LineSample {
                            param: *s,
                            x: p.x,
                            y: p.y,
                        }
                    })
                    .collect(),
            }),
            Some(_) => branch.unresolved += 1,
        }
        start = end;
    }
    branch
}

/// The primary lines `(Γ_0, Γ_{-1})`.
pub fn gamma_primary(
    t: &PerturbedMap,
    cfg: &GammaConfig,
) -> Result<(SymmetryLineSet, SymmetryLineSet)> {
    Ok((gamma(t, 0, cfg)?, gamma(t, -1, cfg)?))
}

/// Samples `Γ_i`, split into pieces of constant itinerary.
pub fn gamma(t: &PerturbedMap, i: i64, cfg: &GammaConfig) -> Result<SymmetryLineSet> {
    if i.unsigned_abs() > cfg.i_max as u64 {
        return Err(Error::Precondition(format!(
            "symmetry line {} is beyond i_max = {}",
            i, cfg.i_max
        )));
    }
    let (source, power) = generation(i);
    let count = match source {
        Source::Gamma0 => 2,
        Source::GammaMinus1 => t.family().size(),
    };
    let grid = params(t, cfg.base_samples);
    let branches = (0..count)
        .map(|branch| {
            let g = Generator {
                t,
                source,
                power,
                branch,
                tol_line: cfg.tol_line,
            };
            build_branch(&g, &grid, cfg.y_res)
        })
        .collect();
    Ok(SymmetryLineSet {
        index: i,
        source,
        power,
        branches,
    })
}

/// Tangent `(dx/dy, 1)` of the unperturbed line `Γ_i` at `point`.
///
/// The point is pulled back to the source line and the derivative of the
/// pushforward is accumulated along its orbit at fixed height.
pub fn tangent_unperturbed(t: &PerturbedMap, i: i64, point: &PhasePoint) -> Result<Vector2<f64>> {
    let t0 = t.with_eps(0.0)?;
    let fam = t0.family();
    let (source, power) = generation(i);
    let z0 = t0.power(point, -power)?;
    let mut slope = match source {
        Source::Gamma0 => {
            if circle_dist(z0.x, 0.0).min(circle_dist(z0.x, 0.5)) > 1e-9 {
                return Err(Error::Precondition(format!("point is not on line {}", i)));
            }
            0.0
        }
        Source::GammaMinus1 => {
            let a = fam.locate(z0.x, z0.y)?;
            let m = fam.midpoints(z0.y)?[a];
            if circle_dist(z0.x, m) > 1e-9 {
                return Err(Error::Precondition(format!("point is not on line {}", i)));
            }
            fam.midpoint_deriv(z0.y)?[a]
        }
    };
    let (mut p, sign) = if power >= 0 {
        (z0, 1.0)
    } else {
        (*point, -1.0)
    };
    for _ in 0..power.unsigned_abs() {
        let (q, s) = t0.step_slice(&p)?;
        slope += sign * s.omega_deriv;
        p = q;
    }
    Ok(Vector2::new(slope, 1.0))
}

/// Outcome of the transversality test for an unperturbed symmetric orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    /// The two lines compared at `point`.
    pub lines: (i64, i64),
    pub point: PhasePoint,
    /// Difference of the x-components of the two tangents.
    pub tangent_difference: f64,
    /// Visits of the orbit to each interval.
    pub k_hat: Vec<u32>,
    /// `k_hat · ω'(y)`, twice the tangent difference.
    pub k_dot_omega: f64,
    pub transversal: bool,
}

pub const TRANSVERSALITY_TOL: f64 = 1e-10;

/// Decides whether the symmetry lines through a symmetric periodic orbit of
/// the unperturbed map cross transversally. `orbit` lists the `q` points in
/// orbit order.
pub fn transversality_test(t: &PerturbedMap, orbit: &[PhasePoint]) -> Result<TransversalityReport> {
    let q = orbit.len() as i64;
    if q == 0 {
        return Err(Error::Precondition("empty orbit".into()));
    }
    let fam = t.family();
    let on_gamma0 = orbit
        .iter()
        .find(|p| circle_dist(p.x, 0.0).min(circle_dist(p.x, 0.5)) <= 1e-9);
    let on_midpoint = || {
        orbit.iter().find(|p| {
            fam.locate(p.x, p.y)
                .and_then(|a| fam.midpoints(p.y).map(|m| circle_dist(p.x, m[a]) <= 1e-9))
                .unwrap_or(false)
        })
    };
    let (lines, point) = match on_gamma0 {
        Some(p) => ((0, q), *p),
        None => match on_midpoint() {
            Some(p) => ((-1, q - 1), *p),
            None => {
                return Err(Error::Precondition(
                    "orbit has no point on the primary symmetry lines".into(),
                ))
            }
        },
    };
    let a = tangent_unperturbed(t, lines.0, &point)?;
    let b = tangent_unperturbed(t, lines.1, &point)?;
    let mut k_hat = vec![0u32; fam.size()];
    for p in orbit {
        k_hat[fam.locate(p.x, p.y)?] += 1;
    }
    let w = fam.omega_deriv_all(point.y)?;
    let k_dot_omega: f64 = k_hat.iter().zip(&w).map(|(&k, d)| k as f64 * d).sum();
    let diff = b.x - a.x;
    Ok(TransversalityReport {
        lines,
        point,
        tangent_difference: diff,
        k_hat,
        k_dot_omega,
        transversal: diff.abs() > TRANSVERSALITY_TOL,
    })
}

/// A crossing of two symmetry lines; a periodic point whose period divides
/// `|j - k|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionCandidate {
    pub x: f64,
    pub y: f64,
    pub j: i64,
    pub k: i64,
    pub divisor_period: u64,
    /// Returns under `T^|j-k|` within the orbit tolerance.
    pub refined: bool,
    pub transversal: bool,
}

impl IntersectionCandidate {
    pub fn point(&self) -> PhasePoint {
        PhasePoint::new(self.x, self.y)
    }
}

struct Chord {
    seg: usize,
    lo: usize,
    p0: Vector2<f64>,
    p1: Vector2<f64>,
}

struct Flat<'a> {
    gens: Vec<Generator<'a>>,
    /// (branch, samples of one segment)
    segments: Vec<(usize, &'a [LineSample])>,
    chords: Vec<Chord>,
}

fn flatten<'a>(t: &'a PerturbedMap, set: &'a SymmetryLineSet, tol_line: f64) -> Flat<'a> {
    let gens = set
        .branches
        .iter()
        .map(|b| Generator {
            t,
            source: set.source,
            power: set.power,
            branch: b.source_branch,
            tol_line,
        })
        .collect();
    let mut segments = Vec::new();
    let mut chords = Vec::new();
    for (bi, b) in set.branches.iter().enumerate() {
        for s in &b.segments {
            let seg = segments.len();
            segments.push((bi, s.samples.as_slice()));
            for (lo, w) in s.samples.windows(2).enumerate() {
                chords.push(Chord {
                    seg,
                    lo,
                    p0: Vector2::new(w[0].x, w[0].y),
                    p1: Vector2::new(w[1].x, w[1].y),
                });
            }
        }
    }
    Flat {
        gens,
        segments,
        chords,
    }
}

/// Parameters `(u, v)` where the lines through `p0 p1` and `q0 q1` meet.
fn line_cross(
    p0: &Vector2<f64>,
    p1: &Vector2<f64>,
    q0: &Vector2<f64>,
    q1: &Vector2<f64>,
) -> Option<(f64, f64)> {
    let d = p1 - p0;
    let e = q1 - q0;
    let den = d.perp(&e);
    if den == 0.0 || !den.is_finite() {
        return None;
    }
    let w = q0 - p0;
    Some((w.perp(&e) / den, w.perp(&d) / den))
}

fn outside(u: f64) -> f64 {
    (-u).max(u - 1.0).max(0.0)
}

/// Grid of chord bounding boxes for quick overlap queries.
struct Grid {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
}

impl Grid {
    fn new(chords: &[Chord], ylo: f64, yhi: f64) -> Self {
        let n = ((chords.len() as f64).sqrt() as usize).clamp(8, 512);
        let cell = 1.0 / n as f64;
        let x0 = 0.0;
        let y0 = ylo - cell;
        let ny = (((yhi - ylo) / cell).ceil() as usize + 2).max(1);
        let mut g = Grid {
            x0,
            y0,
            cell,
            nx: n,
            ny,
            cells: vec![Vec::new(); n * ny],
        };
        for (ci, c) in chords.iter().enumerate() {
            if let Some((a, b, cc, d)) = g.range(&c.p0, &c.p1) {
                for iy in cc..=d {
                    for ix in a..=b {
                        g.cells[iy * g.nx + ix].push(ci);
                    }
                }
            }
        }
        g
    }

    fn range(&self, p: &Vector2<f64>, q: &Vector2<f64>) -> Option<(usize, usize, usize, usize)> {
        let pad = 1e-12;
        let fx = |v: f64| ((v - self.x0) / self.cell).floor();
        let fy = |v: f64| ((v - self.y0) / self.cell).floor();
        let (xa, xb) = (fx(p.x.min(q.x) - pad), fx(p.x.max(q.x) + pad));
        let (ya, yb) = (fy(p.y.min(q.y) - pad), fy(p.y.max(q.y) + pad));
        if xb < 0.0 || yb < 0.0 || xa >= self.nx as f64 || ya >= self.ny as f64 {
            return None;
        }
        let c = |v: f64, n: usize| v.clamp(0.0, (n - 1) as f64) as usize;
        Some((
            c(xa, self.nx),
            c(xb, self.nx),
            c(ya, self.ny),
            c(yb, self.ny),
        ))
    }

    fn query(&self, p: &Vector2<f64>, q: &Vector2<f64>, out: &mut Vec<usize>) {
        out.clear();
        if let Some((a, b, c, d)) = self.range(p, q) {
            for iy in c..=d {
                for ix in a..=b {
                    out.extend_from_slice(&self.cells[iy * self.nx + ix]);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
    }
}

/// A curve piece being bisected: parameter bracket and its end points.
struct Bracket<'a> {
    g: &'a Generator<'a>,
    shift: Vector2<f64>,
    s0: f64,
    s1: f64,
    p0: Vector2<f64>,
    p1: Vector2<f64>,
}

impl Bracket<'_> {
    fn at(&self, s: f64) -> Option<Vector2<f64>> {
        self.g.point(s).map(|p| p + self.shift)
    }

    /// Halves the bracket, keeping the half whose chord meets `other`'s.
    fn halve(&mut self, other: &Bracket<'_>) -> Option<()> {
        let sm = 0.5 * (self.s0 + self.s1);
        let pm = self.at(sm)?;
        let score = |a: &Vector2<f64>, b: &Vector2<f64>| {
            line_cross(a, b, &other.p0, &other.p1)
                .map(|(u, v)| outside(u) + outside(v))
                .unwrap_or(f64::INFINITY)
        };
        let left = score(&self.p0, &pm);
        let right = score(&pm, &self.p1);
        if !left.is_finite() && !right.is_finite() {
            return None;
        }
        if left <= right {
            self.s1 = sm;
            self.p1 = pm;
        } else {
            self.s0 = sm;
            self.p0 = pm;
        }
        Some(())
    }
}

fn refine(a: &mut Bracket<'_>, b: &mut Bracket<'_>, tol: f64) -> Option<Vector2<f64>> {
    for _ in 0..400 {
        let wa = a.s1 - a.s0 > tol;
        let wb = b.s1 - b.s0 > tol;
        if !wa && !wb {
            break;
        }
        if wa {
            a.halve(b)?;
        }
        if wb {
            b.halve(a)?;
        }
    }
    let (u, v) = line_cross(&a.p0, &a.p1, &b.p0, &b.p1)?;
    if outside(u) + outside(v) > 0.5 {
        return None;
    }
    let u = u.clamp(0.0, 1.0);
    Some(a.p0 + (a.p1 - a.p0) * u)
}

/// Crossings of two symmetry lines, refined on the curves themselves and
/// deduplicated. Sorted by `(y, x)`.
pub fn intersections(
    t: &PerturbedMap,
    a: &SymmetryLineSet,
    b: &SymmetryLineSet,
    cfg: &IntersectionConfig,
) -> Result<Vec<IntersectionCandidate>> {
    if a.index == b.index {
        return Err(Error::Precondition(format!(
            "both lines are Γ_{}; their intersection is not a point set",
            a.index
        )));
    }
    let fa = flatten(t, a, cfg.tol_line);
    let fb = flatten(t, b, cfg.tol_line);
    let (ylo, yhi) = t.family().domain();
    let grid = Grid::new(&fb.chords, ylo, yhi);
    let periodic = t.family().periodic_y();
    let mut shifts = Vec::new();
    for sx in [-1.0, 0.0, 1.0] {
        if periodic {
            for sy in [-1.0, 0.0, 1.0] {
                shifts.push(Vector2::new(sx, sy));
            }
        } else {
            shifts.push(Vector2::new(sx, 0.0));
        }
    }

    let period = a.index.abs_diff(b.index);
    let found: Vec<(Vector2<f64>, bool)> = fa
        .chords
        .par_iter()
        .map_init(Vec::new, |near, ca| {
            let mut hits = Vec::new();
            for shift in &shifts {
                // B shifted by `shift` against A, i.e. A shifted back.
                grid.query(&(ca.p0 - shift), &(ca.p1 - shift), near);
                for &ci in near.iter() {
                    let cb = &fb.chords[ci];
                    let (q0, q1) = (cb.p0 + shift, cb.p1 + shift);
                    let Some((u, v)) = line_cross(&ca.p0, &ca.p1, &q0, &q1) else {
                        continue;
                    };
                    // half-open in both chords so shared sample points count once
                    if !((0.0..1.0).contains(&u) && (0.0..1.0).contains(&v)) {
                        continue;
                    }
                    let sin = (ca.p1 - ca.p0).normalize().perp(&(q1 - q0).normalize());
                    let (sa_seg, sb_seg) = (&fa.segments[ca.seg], &fb.segments[cb.seg]);
                    let mut ba = Bracket {
                        g: &fa.gens[sa_seg.0],
                        shift: Vector2::zeros(),
                        s0: sa_seg.1[ca.lo].param,
                        s1: sa_seg.1[ca.lo + 1].param,
                        p0: ca.p0,
                        p1: ca.p1,
                    };
                    let mut bb = Bracket {
                        g: &fb.gens[sb_seg.0],
                        shift: *shift,
                        s0: sb_seg.1[cb.lo].param,
                        s1: sb_seg.1[cb.lo + 1].param,
                        p0: q0,
                        p1: q1,
                    };
                    if let Some(z) = refine(&mut ba, &mut bb, cfg.param_tol) {
                        hits.push((z, sin.abs() > cfg.angle_tol));
                    }
                }
            }
            hits
        })
        .flatten()
        .collect();

    let dist = |p: &PhasePoint, q: &PhasePoint| {
        if periodic {
            p.dist_torus(q)
        } else {
            p.dist(q)
        }
    };
    let mut out: Vec<IntersectionCandidate> = Vec::new();
    let mut sorted: Vec<(PhasePoint, bool)> = found
        .into_iter()
        .map(|(z, tr)| {
            let y = if periodic { z.y.frac() } else { z.y };
            (PhasePoint::new(z.x.frac(), y), tr)
        })
        .collect();
    sorted.sort_by(|p, q| p.0.y.total_cmp(&q.0.y).then(p.0.x.total_cmp(&q.0.x)));
    let mut kept: Vec<(PhasePoint, bool)> = Vec::new();
    for (p, tr) in sorted {
        if let Some(k) = kept.iter_mut().find(|k| dist(&k.0, &p) <= cfg.dedup_tol) {
            k.1 |= tr;
        } else {
            kept.push((p, tr));
        }
    }
    for (p, transversal) in kept {
        // a chord can bridge a short piece that is off the fixed set
        if !(on_line(t, &p, a.index, cfg.tol_line) && on_line(t, &p, b.index, cfg.tol_line)) {
            continue;
        }
        let refined = t
            .power(&p, period as i64)
            .map(|q| dist(&q, &p) <= cfg.orbit_tol)
            .unwrap_or(false);
        out.push(IntersectionCandidate {
            x: p.x,
            y: p.y,
            j: a.index,
            k: b.index,
            divisor_period: period,
            refined,
            transversal,
        });
    }
    Ok(out)
}
