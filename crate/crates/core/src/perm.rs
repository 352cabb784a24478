use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Combinatorial data of an exchange map.
///
/// The initial ordering is the identity; `final_order[k]` is the (1-based)
/// label of the interval that ends up in position `k + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    final_order: Vec<usize>,
    position: Vec<usize>,
}

impl Permutation {
    pub fn new(final_order: Vec<usize>) -> Result<Self> {
        let d = final_order.len();
        if d == 0 {
            return Err(Error::InvalidPermutation("empty permutation".into()));
        }
        let mut position = vec![usize::MAX; d];
        for (k, &label) in final_order.iter().enumerate() {
            if label == 0 || label > d {
                return Err(Error::InvalidPermutation(format!(
                    "label {} outside 1..={}",
                    label, d
                )));
            }
            if position[label - 1] != usize::MAX {
                return Err(Error::InvalidPermutation(format!(
                    "label {} repeated",
                    label
                )));
            }
            position[label - 1] = k;
        }
        Ok(Self {
            final_order,
            position,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self::new((1..=d).collect()).expect("identity is a permutation")
    }

    /// The order-reversing permutation `D ... B A`.
    pub fn reversing(d: usize) -> Self {
        Self::new((1..=d).rev().collect()).expect("reversal is a permutation")
    }

    pub fn size(&self) -> usize {
        self.final_order.len()
    }

    pub fn final_order(&self) -> &[usize] {
        &self.final_order
    }

    /// Zero-based final position of the zero-based interval `i`.
    pub fn position(&self, i: usize) -> usize {
        self.position[i]
    }

    /// Zero-based interval occupying zero-based final position `k`.
    pub fn at_position(&self, k: usize) -> usize {
        self.final_order[k] - 1
    }

    pub fn is_reversing(&self) -> bool {
        let d = self.size();
        self.final_order
            .iter()
            .enumerate()
            .all(|(k, &label)| label == d - k)
    }

    pub fn is_identity(&self) -> bool {
        self.final_order
            .iter()
            .enumerate()
            .all(|(k, &label)| label == k + 1)
    }

    pub fn is_involution(&self) -> bool {
        (0..self.size()).all(|i| self.at_position(self.at_position(i)) == i)
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.final_order
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.final_order.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", s.join(","))
    }
}

/// Letter name of a zero-based interval index (`0 -> A`).
pub fn label(i: usize) -> String {
    let mut n = i;
    let mut out = Vec::new();
    loop {
        out.push((b'A' + (n % 26) as u8) as char);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    out.iter().rev().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![1, 1]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![3, 1]).is_err());
        assert!(Permutation::new(vec![]).is_err());
    }

    #[test]
    fn positions_invert_the_order() {
        let p = Permutation::new(vec![3, 2, 4, 1]).unwrap();
        assert_eq!(p.position(0), 3);
        assert_eq!(p.position(2), 0);
        assert_eq!(p.at_position(0), 2);
        assert!(!p.is_reversing());
        assert!(Permutation::reversing(4).is_reversing());
        assert!(Permutation::identity(1).is_reversing());
    }

    #[test]
    fn labels() {
        assert_eq!(label(0), "A");
        assert_eq!(label(1), "B");
        assert_eq!(label(26), "AA");
    }
}
