//! One-parameter families `y -> F_y` of exchange maps with a fixed
//! permutation and lengths `lambda(y)`.

use crate::error::{Error, Result};
use crate::iem::{translation_vector, Iem};
use crate::perm::Permutation;
use crate::scalar::{parse_exact, Coord};
use log::warn;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::fmt;
use std::sync::Arc;

/// Grid size used to validate callback families.
pub const CALLBACK_GRID: usize = 1024;

pub type LengthFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// User-supplied `lambda(y)` and `lambda'(y)`. Both closures must be pure.
#[derive(Clone)]
pub struct Callback {
    pub name: String,
    pub lengths: LengthFn,
    pub derivative: LengthFn,
}

#[derive(Clone)]
pub enum FamilyKind {
    /// `lambda(y) = (1 - y) lambda0 + y lambda1`.
    Linear {
        lambda0: Vec<BigRational>,
        lambda1: Vec<BigRational>,
    },
    Callback(Callback),
}

impl fmt::Debug for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyKind::Linear { lambda0, lambda1 } => {
                let t = |v: &[BigRational]| v.iter().map(|x| x.to_text()).collect::<Vec<_>>();
                f.debug_struct("Linear")
                    .field("lambda0", &t(lambda0))
                    .field("lambda1", &t(lambda1))
                    .finish()
            }
            FamilyKind::Callback(c) => f.debug_tuple("Callback").field(&c.name).finish(),
        }
    }
}

#[derive(Debug, Clone)]
struct LinearData {
    l0: Vec<f64>,
    dl: Vec<f64>,
    left0: Vec<f64>,
    dleft: Vec<f64>,
    w0: Vec<f64>,
    dw: Vec<f64>,
}

/// A family of exchange maps over the parameter domain `P = [y_min, y_max]`.
///
/// With `periodic_y` the domain is the circle `[0, 1)` and `y` is reduced
/// mod 1, as for the standard map.
#[derive(Debug, Clone)]
pub struct Family {
    perm: Permutation,
    kind: FamilyKind,
    domain: (f64, f64),
    periodic_y: bool,
    linear: Option<LinearData>,
}

/// One row of the partition at height `y`: interval index, translation and
/// its derivative in `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slice {
    pub alpha: usize,
    pub omega: f64,
    pub omega_deriv: f64,
}

fn normalized(v: Vec<BigRational>, what: &str) -> Result<Vec<BigRational>> {
    let total = v.iter().fold(BigRational::zero(), |a, b| a + b);
    if total.is_zero() || total < BigRational::zero() {
        return Err(Error::InvalidLengths(format!(
            "{} has nonpositive total",
            what
        )));
    }
    if total.is_one() {
        return Ok(v);
    }
    warn!("{} sums to {}, rescaling to 1", what, total.to_text());
    Ok(v.into_iter().map(|x| x / &total).collect())
}

fn exact_of(v: f64) -> BigRational {
    parse_exact(&format!("{}", v)).unwrap_or_else(|_| BigRational::from_f64(v))
}

impl Family {
    /// Linear family. Each endpoint vector is rescaled to sum 1 if needed.
    /// Lengths must be positive inside `P`; they may vanish at an endpoint.
    pub fn linear(
        perm: Permutation,
        lambda0: Vec<BigRational>,
        lambda1: Vec<BigRational>,
        domain: (f64, f64),
    ) -> Result<Self> {
        let d = perm.size();
        if lambda0.len() != d || lambda1.len() != d {
            return Err(Error::InvalidLengths(format!(
                "expected {} lengths per endpoint vector",
                d
            )));
        }
        check_domain(domain)?;
        let lambda0 = normalized(lambda0, "lambda0")?;
        let lambda1 = normalized(lambda1, "lambda1")?;
        let at = |y: f64| -> Vec<BigRational> {
            let y = exact_of(y);
            let one_minus = BigRational::one() - &y;
            lambda0
                .iter()
                .zip(&lambda1)
                .map(|(a, b)| &one_minus * a + &y * b)
                .collect()
        };
        let lo = at(domain.0);
        let hi = at(domain.1);
        for i in 0..d {
            let zero = BigRational::zero();
            if lo[i] < zero || hi[i] < zero || (lo[i].is_zero() && hi[i].is_zero()) {
                return Err(Error::InvalidLengths(format!(
                    "length {} is not positive on the domain",
                    i + 1
                )));
            }
        }
        let to_f = |v: &[BigRational]| v.iter().map(|x| x.as_f64()).collect::<Vec<_>>();
        let lefts = |v: &[BigRational]| {
            let mut acc = BigRational::zero();
            v.iter()
                .map(|l| {
                    let out = acc.clone();
                    acc += l;
                    out
                })
                .collect::<Vec<_>>()
        };
        let diff = |a: &[BigRational], b: &[BigRational]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (y - x).as_f64())
                .collect::<Vec<_>>()
        };
        let w0 = translation_vector(&perm, &lambda0);
        let w1 = translation_vector(&perm, &lambda1);
        let (left0, left1) = (lefts(&lambda0), lefts(&lambda1));
        let linear = LinearData {
            l0: to_f(&lambda0),
            dl: diff(&lambda0, &lambda1),
            left0: to_f(&left0),
            dleft: diff(&left0, &left1),
            w0: to_f(&w0),
            dw: diff(&w0, &w1),
        };
        Ok(Self {
            perm,
            kind: FamilyKind::Linear { lambda0, lambda1 },
            domain,
            periodic_y: false,
            linear: Some(linear),
        })
    }

    /// Linear family from decimal endpoint vectors; each entry is read as the
    /// exact decimal it prints as.
    pub fn linear_decimal(
        perm: Permutation,
        lambda0: &[f64],
        lambda1: &[f64],
        domain: (f64, f64),
    ) -> Result<Self> {
        let conv = |v: &[f64]| v.iter().map(|&x| exact_of(x)).collect();
        Self::linear(perm, conv(lambda0), conv(lambda1), domain)
    }

    /// The same exchange map at every `y`.
    pub fn constant(perm: Permutation, lengths: Vec<BigRational>) -> Result<Self> {
        Self::linear(perm, lengths.clone(), lengths, (0.0, 1.0))
    }

    /// `lambda(y) = (1 - y, y)` with the reversing permutation on the circle
    /// `y in [0, 1)`: the unperturbed standard map.
    pub fn standard_map() -> Self {
        let z = BigRational::zero;
        let o = BigRational::one;
        Self::linear(
            Permutation::reversing(2),
            vec![o(), z()],
            vec![z(), o()],
            (0.0, 1.0),
        )
        .and_then(|f| f.with_periodic_y(true))
        .expect("standard map family is valid")
    }

    /// Callback family, validated on a grid of [`CALLBACK_GRID`] points.
    pub fn callback(perm: Permutation, callback: Callback, domain: (f64, f64)) -> Result<Self> {
        check_domain(domain)?;
        let d = perm.size();
        for k in 0..CALLBACK_GRID {
            let y = domain.0 + (domain.1 - domain.0) * k as f64 / (CALLBACK_GRID - 1) as f64;
            let l = (callback.lengths)(y);
            let dl = (callback.derivative)(y);
            if l.len() != d || dl.len() != d {
                return Err(Error::InvalidLengths(format!(
                    "callback '{}' returned the wrong number of lengths at y = {}",
                    callback.name, y
                )));
            }
            if l.iter().any(|&v| v.is_nan() || v <= 0.0) {
                return Err(Error::InvalidLengths(format!(
                    "callback '{}' has a nonpositive length at y = {}",
                    callback.name, y
                )));
            }
            let total: f64 = l.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidLengths(format!(
                    "callback '{}' lengths sum to {} at y = {}",
                    callback.name, total, y
                )));
            }
        }
        Ok(Self {
            perm,
            kind: FamilyKind::Callback(callback),
            domain,
            periodic_y: false,
            linear: None,
        })
    }

    /// Treats `y` as a circle coordinate; needs the domain `[0, 1]`.
    pub fn with_periodic_y(mut self, periodic: bool) -> Result<Self> {
        if periodic && self.domain != (0.0, 1.0) {
            return Err(Error::Precondition(
                "periodic y needs the domain [0, 1]".into(),
            ));
        }
        self.periodic_y = periodic;
        Ok(self)
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn size(&self) -> usize {
        self.perm.size()
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn periodic_y(&self) -> bool {
        self.periodic_y
    }

    pub fn is_symmetric(&self) -> bool {
        self.perm.is_reversing()
    }

    /// Reduces `y` for periodic families; otherwise checks `y` lies in `P`.
    pub fn check_y(&self, y: f64) -> Result<f64> {
        if self.periodic_y {
            return Ok(y.frac());
        }
        if y >= self.domain.0 && y <= self.domain.1 {
            Ok(y)
        } else {
            Err(Error::Domain {
                y,
                min: self.domain.0,
                max: self.domain.1,
            })
        }
    }

    pub fn contains_y(&self, y: f64) -> bool {
        self.periodic_y || (y >= self.domain.0 && y <= self.domain.1)
    }

    fn raw_lengths(&self, y: f64) -> Vec<f64> {
        match (&self.kind, &self.linear) {
            (_, Some(l)) => l.l0.iter().zip(&l.dl).map(|(a, b)| a + y * b).collect(),
            (FamilyKind::Callback(c), None) => (c.lengths)(y),
            _ => unreachable!("linear families carry float data"),
        }
    }

    fn raw_deriv(&self, y: f64) -> Vec<f64> {
        match (&self.kind, &self.linear) {
            (_, Some(l)) => l.dl.clone(),
            (FamilyKind::Callback(c), None) => (c.derivative)(y),
            _ => unreachable!("linear families carry float data"),
        }
    }

    pub fn lambda_at(&self, y: f64) -> Result<Vec<f64>> {
        let y = self.check_y(y)?;
        Ok(self.raw_lengths(y))
    }

    pub fn lambda_deriv(&self, y: f64) -> Result<Vec<f64>> {
        let y = self.check_y(y)?;
        Ok(self.raw_deriv(y))
    }

    /// Exact lengths of a linear family at a rational `y`.
    pub fn lambda_at_exact(&self, y: &BigRational) -> Result<Vec<BigRational>> {
        self.check_y(y.as_f64())?;
        match &self.kind {
            FamilyKind::Linear { lambda0, lambda1 } => {
                let one_minus = BigRational::one() - y;
                Ok(lambda0
                    .iter()
                    .zip(lambda1)
                    .map(|(a, b)| &one_minus * a + y * b)
                    .collect())
            }
            FamilyKind::Callback(_) => Err(Error::Precondition(
                "exact evaluation needs a linear family".into(),
            )),
        }
    }

    /// The exchange map at height `y`; zero lengths are rejected.
    pub fn iem_at(&self, y: f64) -> Result<Iem<f64>> {
        Iem::new(self.perm.clone(), self.lambda_at(y)?)
    }

    pub fn iem_at_exact(&self, y: &BigRational) -> Result<Iem<BigRational>> {
        Iem::new(self.perm.clone(), self.lambda_at_exact(y)?)
    }

    fn raw_lefts(&self, y: f64) -> Vec<f64> {
        match &self.linear {
            Some(l) => l
                .left0
                .iter()
                .zip(&l.dleft)
                .map(|(a, b)| a + y * b)
                .collect(),
            None => {
                let mut acc = 0.0;
                self.raw_lengths(y)
                    .iter()
                    .map(|v| {
                        let out = acc;
                        acc += v;
                        out
                    })
                    .collect()
            }
        }
    }

    pub fn left_endpoints(&self, y: f64) -> Result<Vec<f64>> {
        let y = self.check_y(y)?;
        Ok(self.raw_lefts(y))
    }

    /// `m_i(y) = lambda_i(y) / 2 + sum_{j<i} lambda_j(y)`.
    pub fn midpoints(&self, y: f64) -> Result<Vec<f64>> {
        let y = self.check_y(y)?;
        let l = self.raw_lengths(y);
        Ok(self
            .raw_lefts(y)
            .iter()
            .zip(&l)
            .map(|(a, b)| a + 0.5 * b)
            .collect())
    }

    pub fn midpoint_deriv(&self, y: f64) -> Result<Vec<f64>> {
        let dl = self.lambda_deriv(y)?;
        let mut acc = 0.0;
        Ok(dl
            .iter()
            .map(|v| {
                let out = acc + 0.5 * v;
                acc += v;
                out
            })
            .collect())
    }

    fn raw_omega(&self, y: f64) -> Vec<f64> {
        match &self.linear {
            Some(l) => l.w0.iter().zip(&l.dw).map(|(a, b)| a + y * b).collect(),
            None => translation_vector(&self.perm, &self.raw_lengths(y)),
        }
    }

    fn raw_omega_deriv(&self, y: f64) -> Vec<f64> {
        match &self.linear {
            Some(l) => l.dw.clone(),
            None => translation_vector(&self.perm, &self.raw_deriv(y)),
        }
    }

    pub fn omega_all(&self, y: f64) -> Result<Vec<f64>> {
        let y = self.check_y(y)?;
        Ok(self.raw_omega(y))
    }

    pub fn omega_deriv_all(&self, y: f64) -> Result<Vec<f64>> {
        let y = self.check_y(y)?;
        Ok(self.raw_omega_deriv(y))
    }

    pub fn omega_at(&self, y: f64, alpha: usize) -> Result<f64> {
        Ok(self.omega_all(y)?[alpha])
    }

    pub fn omega_deriv(&self, y: f64, alpha: usize) -> Result<f64> {
        Ok(self.omega_deriv_all(y)?[alpha])
    }

    /// Translation and its `y`-derivative for interval `alpha`, with `y`
    /// taken as is (no domain check).
    pub fn omega_unchecked(&self, y: f64, alpha: usize) -> (f64, f64) {
        match &self.linear {
            Some(l) => (l.w0[alpha] + y * l.dw[alpha], l.dw[alpha]),
            None => (self.raw_omega(y)[alpha], self.raw_omega_deriv(y)[alpha]),
        }
    }

    /// Interval containing `x` (taken mod 1) at height `y`, closed on the left.
    pub fn locate(&self, x: f64, y: f64) -> Result<usize> {
        let y = self.check_y(y)?;
        Ok(self.locate_unchecked(x.frac(), y))
    }

    pub(crate) fn locate_unchecked(&self, x: f64, y: f64) -> usize {
        match &self.linear {
            Some(l) => {
                let mut a = 0;
                for i in 1..l.left0.len() {
                    if x >= l.left0[i] + y * l.dleft[i] {
                        a = i;
                    } else {
                        break;
                    }
                }
                a
            }
            None => {
                let lefts = self.raw_lefts(y);
                lefts.iter().rposition(|&v| x >= v).unwrap_or(0)
            }
        }
    }

    /// The piece of `F_y` acting on `x`.
    pub fn slice(&self, x: f64, y: f64) -> Result<Slice> {
        let y = self.check_y(y)?;
        let alpha = self.locate_unchecked(x.frac(), y);
        let (omega, omega_deriv) = self.omega_unchecked(y, alpha);
        Ok(Slice {
            alpha,
            omega,
            omega_deriv,
        })
    }

    /// The piece of `F_y` whose image contains `x`.
    pub fn preimage_slice(&self, x: f64, y: f64) -> Result<Slice> {
        let y = self.check_y(y)?;
        let x = x.frac();
        let l = self.raw_lengths(y);
        let mut acc = 0.0;
        let mut alpha = self.perm.at_position(0);
        for k in 0..self.size() {
            let i = self.perm.at_position(k);
            if x >= acc {
                alpha = i;
            } else {
                break;
            }
            acc += l[i];
        }
        let (omega, omega_deriv) = self.omega_unchecked(y, alpha);
        Ok(Slice {
            alpha,
            omega,
            omega_deriv,
        })
    }

    /// Elemental subregion `{(x, y) : x in I_alpha(y)}`.
    pub fn subregion(&self, alpha: usize) -> Subregion<'_> {
        Subregion {
            family: self,
            alpha,
        }
    }
}

fn check_domain(domain: (f64, f64)) -> Result<()> {
    if !(domain.0.is_finite() && domain.1.is_finite() && domain.0 < domain.1) {
        return Err(Error::Precondition(format!(
            "domain [{}, {}] is not a nonempty interval",
            domain.0, domain.1
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct Subregion<'a> {
    family: &'a Family,
    pub alpha: usize,
}

impl Subregion<'_> {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.family
            .locate(x, y)
            .map(|a| a == self.alpha)
            .unwrap_or(false)
    }
}
