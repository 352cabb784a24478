//! Circle exchange maps: an exchange of arcs starting at `theta0`, followed
//! by a rotation taking `theta0` to `theta1`.

use crate::error::{Error, Result};
use crate::iem::Iem;
use crate::perm::Permutation;
use crate::scalar::Coord;

#[derive(Debug, Clone, PartialEq)]
pub struct Cem<T: Coord> {
    base: Iem<T>,
    theta0: T,
    theta1: T,
}

impl<T: Coord> Cem<T> {
    pub fn new(perm: Permutation, lengths: Vec<T>, theta0: T, theta1: T) -> Result<Self> {
        let unit = |t: &T| *t >= T::zero() && *t < T::one();
        if !unit(&theta0) || !unit(&theta1) {
            return Err(Error::InvalidLengths("angles must lie in [0, 1)".into()));
        }
        Ok(Self {
            base: Iem::new(perm, lengths)?,
            theta0,
            theta1,
        })
    }

    /// The rotation `x -> x + angle` as a one-arc exchange.
    pub fn rotation(angle: T) -> Result<Self> {
        Self::new(
            Permutation::identity(1),
            vec![T::one()],
            T::zero(),
            angle.frac(),
        )
    }

    pub fn from_iem(iem: Iem<T>) -> Self {
        Self {
            base: iem,
            theta0: T::zero(),
            theta1: T::zero(),
        }
    }

    pub fn base(&self) -> &Iem<T> {
        &self.base
    }

    pub fn theta0(&self) -> &T {
        &self.theta0
    }

    pub fn theta1(&self) -> &T {
        &self.theta1
    }

    pub fn size(&self) -> usize {
        self.base.size()
    }

    fn offset(&self) -> T {
        self.theta1.clone() - self.theta0.clone()
    }

    /// Start of arc `i` on the circle.
    pub fn arc_left(&self, i: usize) -> T {
        (self.theta0.clone() + self.base.left_endpoints()[i].clone()).frac()
    }

    pub fn locate(&self, x: &T) -> usize {
        self.base.locate(&(x.clone() - self.theta0.clone()).frac())
    }

    /// `x + omega_a - theta0 + theta1 mod 1`.
    pub fn evaluate(&self, x: &T) -> T {
        let a = self.locate(x);
        (x.clone() + self.base.omega()[a].clone() + self.offset()).frac()
    }

    pub fn evaluate_left_limit(&self, x: &T) -> T {
        let mut local = (x.clone() - self.theta0.clone()).frac();
        if local.is_null() {
            local = T::one();
        }
        (self.base.evaluate_left_limit(&local) + self.theta0.clone() + self.offset()).frac()
    }

    /// Reflection about `(theta0 + theta1) / 2`.
    pub fn reflection(&self, x: &T) -> T {
        (self.theta0.clone() + self.theta1.clone() - x.clone()).frac()
    }

    /// Whether every arc is mapped onto its own mirror image.
    pub fn is_symmetric(&self) -> bool {
        (0..self.size()).all(|i| {
            let img = (self.arc_left(i) + self.base.omega()[i].clone() + self.offset()).frac();
            let right = self.arc_left(i) + self.base.lengths()[i].clone();
            self.reflection(&right).same(&img)
        })
    }
}

/// Maps whose discontinuities can be followed by [`crate::saddle_connections`].
pub trait Exchange<T: Coord> {
    fn size(&self) -> usize;
    fn left_endpoint(&self, i: usize) -> T;
    fn right_endpoint(&self, i: usize) -> T;
    fn evaluate(&self, x: &T) -> T;
    fn evaluate_left_limit(&self, x: &T) -> T;
}

impl<T: Coord> Exchange<T> for Iem<T> {
    fn size(&self) -> usize {
        Iem::size(self)
    }
    fn left_endpoint(&self, i: usize) -> T {
        self.left_endpoints()[i].clone()
    }
    fn right_endpoint(&self, i: usize) -> T {
        Iem::right_endpoint(self, i)
    }
    fn evaluate(&self, x: &T) -> T {
        Iem::evaluate(self, x)
    }
    fn evaluate_left_limit(&self, x: &T) -> T {
        let mut x = x.frac();
        if x.is_null() {
            x = T::one();
        }
        Iem::evaluate_left_limit(self, &x)
    }
}

impl<T: Coord> Exchange<T> for Cem<T> {
    fn size(&self) -> usize {
        Cem::size(self)
    }
    fn left_endpoint(&self, i: usize) -> T {
        self.arc_left(i)
    }
    fn right_endpoint(&self, i: usize) -> T {
        (self.arc_left(i) + self.base.lengths()[i].clone()).frac()
    }
    fn evaluate(&self, x: &T) -> T {
        Cem::evaluate(self, x)
    }
    fn evaluate_left_limit(&self, x: &T) -> T {
        Cem::evaluate_left_limit(self, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn rotation_evaluates() {
        let r = Cem::rotation(ratio(1, 3)).unwrap();
        assert_eq!(r.evaluate(&ratio(5, 6)), ratio(1, 6));
        assert!(r.is_symmetric());
    }

    #[test]
    fn cem_formula() {
        let c = Cem::new(
            Permutation::new(vec![3, 1, 2]).unwrap(),
            vec![0.5, 0.3, 0.2],
            0.1,
            0.4,
        )
        .unwrap();
        // x = 0.65 lies in the second arc [0.6, 0.9)
        assert_eq!(c.locate(&0.65), 1);
        let w = c.base().omega()[1];
        assert!((c.evaluate(&0.65) - (0.65 + w - 0.1 + 0.4).rem_euclid(1.0)).abs() < 1e-15);
        // bijection on a sample grid
        let mut images: Vec<f64> = (0..1000)
            .map(|k| c.evaluate(&(k as f64 / 1000.0)))
            .collect();
        images.sort_by(|a, b| a.partial_cmp(b).unwrap());
        images.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        assert_eq!(images.len(), 1000);
    }

    #[test]
    fn symmetric_cem_reflects_arcs() {
        let c = Cem::new(Permutation::reversing(3), vec![0.2, 0.5, 0.3], 0.25, 0.6).unwrap();
        assert!(c.is_symmetric());
        let c = Cem::new(
            Permutation::new(vec![2, 1, 3]).unwrap(),
            vec![0.2, 0.5, 0.3],
            0.25,
            0.6,
        )
        .unwrap();
        assert!(!c.is_symmetric());
    }
}
