//! Interval exchange maps on the unit circle `[0, 1)`.

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::scalar::Coord;
use log::warn;

/// Translation vector of an exchange map with the given combinatorics.
///
/// `omega[i]` is the total length of the intervals placed before `i` in the
/// final ordering minus the total length of the intervals before `i` in the
/// initial ordering.
pub fn translation_vector<T: Coord>(perm: &Permutation, lengths: &[T]) -> Vec<T> {
    let d = perm.size();
    (0..d)
        .map(|i| {
            let pi = perm.position(i);
            let mut w = T::zero();
            for (b, l) in lengths.iter().enumerate() {
                if perm.position(b) < pi {
                    w = w + l.clone();
                }
                if b < i {
                    w = w - l.clone();
                }
            }
            w
        })
        .collect()
}

/// The reflection `R(x) = -x mod 1`.
pub fn reflection<T: Coord>(x: &T) -> T {
    (-x.clone()).frac()
}

/// One continuity piece of a piecewise translation.
#[derive(Debug, Clone)]
pub(crate) struct Piece<T> {
    pub left: T,
    pub len: T,
    pub shift: T,
}

/// Drops empty pieces and merges neighbours that translate by the same amount.
pub(crate) fn canonical_pieces<T: Coord>(pieces: Vec<Piece<T>>) -> Vec<Piece<T>> {
    let mut out: Vec<Piece<T>> = Vec::with_capacity(pieces.len());
    for p in pieces {
        if p.len.is_null() || p.len < T::zero() {
            continue;
        }
        if let Some(last) = out.last_mut() {
            if last.shift.same(&p.shift) {
                last.len = last.len.clone() + p.len;
                continue;
            }
        }
        out.push(p);
    }
    out
}

/// An interval exchange map `F(x) = x + omega_a` for `x` in `I_a`.
///
/// Intervals are closed on the left and open on the right.
#[derive(Debug, Clone, PartialEq)]
pub struct Iem<T: Coord> {
    perm: Permutation,
    lengths: Vec<T>,
    omega: Vec<T>,
    lefts: Vec<T>,
}

impl<T: Coord> Iem<T> {
    /// Builds an exchange map. Lengths not summing to one are rescaled with a
    /// warning; nonpositive lengths are rejected.
    pub fn new(perm: Permutation, lengths: Vec<T>) -> Result<Self> {
        if perm.size() != lengths.len() {
            return Err(Error::InvalidLengths(format!(
                "{} lengths for a permutation of size {}",
                lengths.len(),
                perm.size()
            )));
        }
        if let Some(i) = lengths.iter().position(|l| *l <= T::zero()) {
            return Err(Error::InvalidLengths(format!(
                "length {} of interval {} is not positive",
                lengths[i].to_text(),
                i + 1
            )));
        }
        let total = lengths.iter().fold(T::zero(), |a, l| a + l.clone());
        let lengths = if total.same(&T::one()) {
            lengths
        } else {
            warn!(
                "interval lengths sum to {}, rescaling to 1",
                total.to_text()
            );
            lengths.into_iter().map(|l| l / total.clone()).collect()
        };
        Ok(Self::assemble(perm, lengths))
    }

    fn assemble(perm: Permutation, lengths: Vec<T>) -> Self {
        let omega = translation_vector(&perm, &lengths);
        let mut lefts = Vec::with_capacity(lengths.len());
        let mut acc = T::zero();
        for l in &lengths {
            lefts.push(acc.clone());
            acc = acc + l.clone();
        }
        Self {
            perm,
            lengths,
            omega,
            lefts,
        }
    }

    pub fn identity() -> Self {
        Self::assemble(Permutation::identity(1), vec![T::one()])
    }

    /// Builds the map from consecutive pieces given by length and translation.
    /// The permutation is read off from the order of the images, which must
    /// tile `[0, 1)`.
    pub fn from_pieces(lengths: Vec<T>, translations: Vec<T>) -> Result<Self> {
        if lengths.len() != translations.len() || lengths.is_empty() {
            return Err(Error::InvalidPieces(
                "need the same positive number of lengths and translations".into(),
            ));
        }
        if lengths.iter().any(|l| *l <= T::zero()) {
            return Err(Error::InvalidPieces("nonpositive piece length".into()));
        }
        let mut left = T::zero();
        let mut images = Vec::with_capacity(lengths.len());
        for (i, (l, w)) in lengths.iter().zip(&translations).enumerate() {
            images.push((left.clone() + w.clone(), i));
            left = left + l.clone();
        }
        if !left.same(&T::one()) {
            return Err(Error::InvalidPieces(format!(
                "pieces cover length {}",
                left.to_text()
            )));
        }
        images.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("comparable"));
        let mut edge = T::zero();
        for (start, i) in &images {
            if !start.same(&edge) {
                return Err(Error::InvalidPieces(format!(
                    "images do not tile [0,1): gap or overlap at {}",
                    edge.to_text()
                )));
            }
            edge = start.clone() + lengths[*i].clone();
        }
        let perm = Permutation::new(images.iter().map(|(_, i)| i + 1).collect())?;
        let iem = Self::assemble(perm, lengths);
        for (a, b) in iem.omega.iter().zip(&translations) {
            if !a.same(b) {
                return Err(Error::InvalidPieces(
                    "translations inconsistent with the image order".into(),
                ));
            }
        }
        Ok(iem)
    }

    pub(crate) fn from_canonical(pieces: Vec<Piece<T>>) -> Result<Self> {
        let (lengths, shifts) = pieces.into_iter().map(|p| (p.len, p.shift)).unzip();
        Self::from_pieces(lengths, shifts)
    }

    pub(crate) fn pieces(&self) -> Vec<Piece<T>> {
        (0..self.size())
            .map(|i| Piece {
                left: self.lefts[i].clone(),
                len: self.lengths[i].clone(),
                shift: self.omega[i].clone(),
            })
            .collect()
    }

    pub fn size(&self) -> usize {
        self.lengths.len()
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn lengths(&self) -> &[T] {
        &self.lengths
    }

    pub fn omega(&self) -> &[T] {
        &self.omega
    }

    pub fn left_endpoints(&self) -> &[T] {
        &self.lefts
    }

    pub fn right_endpoint(&self, i: usize) -> T {
        self.lefts[i].clone() + self.lengths[i].clone()
    }

    /// Image `F(I_i)` as `(left, right)`.
    pub fn image(&self, i: usize) -> (T, T) {
        let l = self.lefts[i].clone() + self.omega[i].clone();
        (l.clone(), l + self.lengths[i].clone())
    }

    /// Index of the interval containing `x` (taken mod 1).
    pub fn locate(&self, x: &T) -> usize {
        let x = x.frac();
        match self
            .lefts
            .binary_search_by(|l| l.partial_cmp(&x).expect("comparable"))
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }

    pub fn evaluate(&self, x: &T) -> T {
        let x = x.frac();
        let a = self.locate(&x);
        (x + self.omega[a].clone()).frac()
    }

    /// Left limit `lim_{t -> x-} F(t)`, for `x` in `(0, 1]`; the result lies in
    /// `(0, 1]`.
    pub fn evaluate_left_limit(&self, x: &T) -> T {
        let a = (0..self.size())
            .rev()
            .find(|&i| self.lefts[i] < *x)
            .unwrap_or(0);
        x.clone() + self.omega[a].clone()
    }

    pub fn invert(&self) -> Self {
        let mut pieces: Vec<Piece<T>> = (0..self.size())
            .map(|i| Piece {
                left: self.image(i).0,
                len: self.lengths[i].clone(),
                shift: -self.omega[i].clone(),
            })
            .collect();
        pieces.sort_by(|a, b| a.left.partial_cmp(&b.left).expect("comparable"));
        Self::from_canonical(pieces).expect("inverse of a valid exchange map")
    }

    /// Merges adjacent intervals with equal translation.
    pub fn canonical(&self) -> Self {
        if self.size() == 1 {
            return self.clone();
        }
        Self::from_canonical(canonical_pieces(self.pieces())).expect("merging keeps validity")
    }

    /// Checks whether the permutation reverses the order and, interval by
    /// interval, whether `F(J_i) = R(J_i)`.
    pub fn is_symmetric(&self) -> SymmetryCheck {
        let per_interval = (0..self.size())
            .map(|i| {
                let (img_left, _) = self.image(i);
                let reflected_left = (T::one() - self.right_endpoint(i)).frac();
                img_left.frac().same(&reflected_left)
            })
            .collect();
        SymmetryCheck {
            reverses_order: self.perm.is_reversing(),
            per_interval,
        }
    }
}

/// Outcome of [`Iem::is_symmetric`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryCheck {
    pub reverses_order: bool,
    /// `per_interval[i]` is true when `F(J_i)` coincides with `R(J_i)`.
    pub per_interval: Vec<bool>,
}

impl SymmetryCheck {
    pub fn symmetric(&self) -> bool {
        self.reverses_order
    }

    /// Both characterisations agree.
    pub fn consistent(&self) -> bool {
        self.reverses_order == self.per_interval.iter().all(|&b| b)
    }
}

/// `outer ∘ inner`, on the common refinement of the two partitions, with
/// equal-translation neighbours merged.
pub fn compose<T: Coord>(outer: &Iem<T>, inner: &Iem<T>) -> Iem<T> {
    Iem::from_canonical(canonical_pieces(compose_pieces(outer, inner)))
        .expect("composition of exchange maps is an exchange map")
}

pub(crate) fn compose_pieces<T: Coord>(outer: &Iem<T>, inner: &Iem<T>) -> Vec<Piece<T>> {
    let mut out = Vec::new();
    for p in inner.pieces() {
        let img_left = p.left.clone() + p.shift.clone();
        let img_right = img_left.clone() + p.len.clone();
        let mut cuts = vec![img_left.clone()];
        for c in outer.left_endpoints() {
            if *c > img_left && *c < img_right {
                if !T::EXACT && (c.same(&img_left) || c.same(&img_right)) {
                    warn!(
                        "discontinuity collision at {} within tolerance, merged",
                        c.to_text()
                    );
                    continue;
                }
                cuts.push(c.clone());
            }
        }
        cuts.push(img_right);
        for w in cuts.windows(2) {
            let j = outer.locate(&w[0]);
            out.push(Piece {
                left: w[0].clone() - p.shift.clone(),
                len: w[1].clone() - w[0].clone(),
                shift: p.shift.clone() + outer.omega()[j].clone(),
            });
        }
    }
    out
}

/// Result of [`swap_decompose`]: the input equals `symmetric ∘ W` where `W`
/// swaps the intervals paired by `swap`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapDecomposition<T: Coord> {
    pub symmetric: Iem<T>,
    pub swap: Permutation,
}

impl<T: Coord> SwapDecomposition<T> {
    /// The exchange map `W` exchanging the paired (equal-length) intervals.
    pub fn swap_map(&self) -> Iem<T> {
        Iem::new(self.swap.clone(), self.symmetric.lengths().to_vec())
            .expect("swap acts on the same partition")
    }
}

/// Whether `R ∘ F ∘ R = F^{-1}`, compared on interiors after merging.
pub fn is_reversible<T: Coord>(iem: &Iem<T>) -> bool {
    let g = iem.canonical();
    let mut conj: Vec<Piece<T>> = (0..g.size())
        .map(|i| Piece {
            left: T::one() - g.right_endpoint(i),
            len: g.lengths()[i].clone(),
            shift: -g.omega()[i].clone(),
        })
        .collect();
    conj.sort_by(|a, b| a.left.partial_cmp(&b.left).expect("comparable"));
    let conj = canonical_pieces(conj);
    let inv = g.invert().canonical().pieces();
    conj.len() == inv.len()
        && conj
            .iter()
            .zip(&inv)
            .all(|(a, b)| a.left.same(&b.left) && a.len.same(&b.len) && a.shift.same(&b.shift))
}

/// Writes a reversible exchange map as a symmetric one composed with an
/// involution swapping equal-length intervals.
pub fn swap_decompose<T: Coord>(iem: &Iem<T>) -> Result<SwapDecomposition<T>> {
    if !is_reversible(iem) {
        return Err(Error::NotReversible);
    }
    let g = iem.canonical();
    let d = g.size();
    // w[i] = i' with R(J_i) = G(J_i')
    let mut w = vec![usize::MAX; d];
    for (i, wi) in w.iter_mut().enumerate() {
        let r_left = T::one() - g.right_endpoint(i);
        for j in 0..d {
            let (img_left, img_right) = g.image(j);
            if img_left.same(&r_left) && img_right.same(&(T::one() - g.left_endpoints()[i].clone()))
            {
                *wi = j;
                break;
            }
        }
        if *wi == usize::MAX {
            return Err(Error::InvalidPieces(format!(
                "reflected interval {} is not an image interval",
                i + 1
            )));
        }
    }
    let swap = Permutation::new(w.iter().map(|j| j + 1).collect())?;
    if !swap.is_involution() {
        return Err(Error::InvalidPieces(
            "inclusion graph has a long cycle".into(),
        ));
    }
    let w_map = Iem::new(swap.clone(), g.lengths().to_vec())?;
    let f = Iem::from_canonical(compose_pieces(&g, &w_map))?;
    if !f.is_symmetric().symmetric() {
        return Err(Error::InvalidPieces(
            "swap did not produce a symmetric map".into(),
        ));
    }
    Ok(SwapDecomposition { symmetric: f, swap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_rational::BigRational;
    use num_traits::Zero;

    fn four_reversed() -> Iem<BigRational> {
        Iem::new(
            Permutation::reversing(4),
            vec![
                ratio(14, 100),
                ratio(40, 100),
                ratio(10, 100),
                ratio(36, 100),
            ],
        )
        .unwrap()
    }

    // Independent evaluation of the translation vector: place the intervals
    // in their final order and read off where each one landed.
    fn omega_by_placement(order: &[usize], lengths: &[f64]) -> Vec<f64> {
        let mut start = vec![0.0; lengths.len()];
        let mut acc = 0.0;
        for &label in order {
            start[label - 1] = acc;
            acc += lengths[label - 1];
        }
        let mut left = 0.0;
        let mut out = Vec::new();
        for (i, l) in lengths.iter().enumerate() {
            out.push(start[i] - left);
            left += l;
        }
        out
    }

    #[test]
    fn four_reversed_translation_vector() {
        let f = four_reversed();
        let expected = [
            ratio(86, 100),
            ratio(32, 100),
            ratio(-18, 100),
            ratio(-64, 100),
        ];
        assert_eq!(f.omega(), &expected);
        let oracle = omega_by_placement(&[4, 3, 2, 1], &[0.14, 0.4, 0.1, 0.36]);
        for (a, b) in f.omega().iter().zip(oracle) {
            assert!((a.as_f64() - b).abs() < 1e-15);
        }
    }

    #[test]
    fn trivial_and_two_interval_vectors() {
        let id: Iem<f64> = Iem::identity();
        assert_eq!(id.omega(), &[0.0]);
        let rot = Iem::new(Permutation::reversing(2), vec![0.7, 0.3]).unwrap();
        assert!((rot.omega()[0] - 0.3).abs() < 1e-15);
        assert!((rot.omega()[1] + 0.7).abs() < 1e-15);
    }

    #[test]
    fn evaluation_examples() {
        let id: Iem<f64> = Iem::identity();
        assert_eq!(id.evaluate(&0.7), 0.7);
        assert_eq!(four_reversed().evaluate(&ratio(0, 1)), ratio(86, 100));
        let f = Iem::new(Permutation::reversing(2), vec![0.25, 0.75]).unwrap();
        assert_eq!(f.evaluate(&0.5), 0.25);
        // closed-left convention
        assert_eq!(f.locate(&0.25), 1);
    }

    #[test]
    fn lengths_are_validated() {
        assert!(Iem::new(Permutation::reversing(2), vec![0.0, 1.0]).is_err());
        assert!(Iem::new(Permutation::reversing(2), vec![-0.1, 1.1]).is_err());
        assert!(Iem::new(Permutation::reversing(3), vec![0.5, 0.5]).is_err());
        let scaled = Iem::new(Permutation::reversing(2), vec![ratio(1, 4), ratio(1, 4)]).unwrap();
        assert_eq!(scaled.lengths(), &[ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn inverse_examples() {
        let f = four_reversed();
        assert_eq!(f.invert().invert(), f);
        let g = Iem::new(Permutation::reversing(2), vec![ratio(1, 4), ratio(3, 4)]).unwrap();
        let expected = Iem::new(Permutation::reversing(2), vec![ratio(3, 4), ratio(1, 4)]).unwrap();
        assert_eq!(g.invert(), expected);
        let id: Iem<BigRational> = Iem::identity();
        assert_eq!(id.invert(), id);
    }

    #[test]
    fn composition_examples() {
        let f = four_reversed();
        let id: Iem<BigRational> = Iem::identity();
        assert_eq!(compose(&f, &f.invert()), id);
        assert_eq!(compose(&id, &f), f);
        let f3 = compose(&f, &compose(&f, &f));
        let j = ratio(18, 100);
        let piece = f3.locate(&j);
        assert!(f3.omega()[piece].is_zero());
        assert_eq!(f3.left_endpoints()[piece], ratio(14, 100));
        assert_eq!(f3.right_endpoint(piece), ratio(22, 100));
    }

    #[test]
    fn reflection_examples() {
        assert_eq!(reflection(&0.0), 0.0);
        assert_eq!(reflection(&0.5), 0.5);
        assert!((reflection(&0.2) - 0.8).abs() < 1e-15);
        assert_eq!(reflection(&reflection(&ratio(3, 7))), ratio(3, 7));
    }

    #[test]
    fn symmetry_examples() {
        let c = four_reversed().is_symmetric();
        assert!(c.symmetric() && c.consistent());
        let g = Iem::new(
            Permutation::new(vec![3, 2, 4, 1]).unwrap(),
            vec![0.1, 0.2, 0.3, 0.4],
        )
        .unwrap();
        let c = g.is_symmetric();
        assert!(!c.symmetric() && c.consistent());
        assert!(Iem::<f64>::identity().is_symmetric().symmetric());
    }

    #[test]
    fn symmetric_map_decomposes_trivially() {
        let f = four_reversed();
        let dec = swap_decompose(&f).unwrap();
        assert_eq!(dec.symmetric, f);
        assert!(dec.swap.is_identity());
    }

    #[test]
    fn swap_round_trip() {
        let f = Iem::new(
            Permutation::reversing(4),
            vec![ratio(2, 10), ratio(3, 10), ratio(3, 10), ratio(2, 10)],
        )
        .unwrap();
        let w = Iem::new(
            Permutation::new(vec![4, 2, 3, 1]).unwrap(),
            f.lengths().to_vec(),
        )
        .unwrap();
        let g = compose(&f, &w);
        assert!(!g.is_symmetric().symmetric());
        let dec = swap_decompose(&g).unwrap();
        assert_eq!(dec.swap.final_order(), &[4, 2, 3, 1]);
        assert_eq!(dec.symmetric, f);
        assert_eq!(compose(&dec.symmetric, &dec.swap_map()), g);
    }

    #[test]
    fn double_swap_round_trip() {
        let f = Iem::new(
            Permutation::reversing(5),
            vec![
                ratio(1, 10),
                ratio(2, 10),
                ratio(1, 10),
                ratio(2, 10),
                ratio(4, 10),
            ],
        )
        .unwrap();
        let w = Iem::new(
            Permutation::new(vec![3, 4, 1, 2, 5]).unwrap(),
            f.lengths().to_vec(),
        )
        .unwrap();
        let g = compose(&f, &w);
        let dec = swap_decompose(&g).unwrap();
        assert_eq!(dec.swap.final_order(), &[3, 4, 1, 2, 5]);
        assert_eq!(dec.symmetric, f);
        assert_eq!(compose(&dec.symmetric, &dec.swap_map()), g);
    }

    #[test]
    fn not_reversible_is_reported() {
        let g = Iem::new(
            Permutation::new(vec![3, 2, 4, 1]).unwrap(),
            vec![ratio(1, 10), ratio(2, 10), ratio(3, 10), ratio(4, 10)],
        )
        .unwrap();
        assert_eq!(swap_decompose(&g), Err(Error::NotReversible));
    }

    #[test]
    fn identity_permutation_collapses_to_identity() {
        let g = Iem::new(Permutation::identity(2), vec![ratio(1, 3), ratio(2, 3)]).unwrap();
        assert!(is_reversible(&g));
        assert_eq!(g.canonical(), Iem::identity());
    }

    #[test]
    fn left_limits() {
        let f = four_reversed();
        assert_eq!(f.evaluate_left_limit(&ratio(54, 100)), ratio(86, 100));
        assert_eq!(f.evaluate_left_limit(&ratio(1, 1)), ratio(36, 100));
    }
}
