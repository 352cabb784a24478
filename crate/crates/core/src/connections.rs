//! Saddle connections and periodic intervals of exchange maps.

use crate::cem::Exchange;
use crate::error::{Error, Result};
use crate::iem::Iem;
use crate::perm::label;
use crate::scalar::{circle_dist, Coord};
use log::warn;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Float-mode tolerance for endpoint collisions.
pub const CONNECTION_TOL: f64 = 1e-10;

/// Float-mode tolerance for a vanishing total translation.
pub const PERIOD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// `(alpha, beta, m)`: an endpoint of `I_alpha` lands on the same-side
/// endpoint of `I_beta` after `m` iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SaddleConnection {
    pub alpha: usize,
    pub beta: usize,
    pub m: usize,
    pub side: Side,
}

impl fmt::Display for SaddleConnection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.side {
            Side::Left => "left",
            Side::Right => "right",
        };
        write!(
            f,
            "{} ({},{},{})",
            side,
            label(self.alpha),
            label(self.beta),
            self.m
        )
    }
}

fn same_point<T: Coord>(a: &T, b: &T) -> bool {
    if T::EXACT {
        a.frac() == b.frac()
    } else {
        circle_dist(a.as_f64(), b.as_f64()) <= CONNECTION_TOL
    }
}

/// All left and right saddle connections with `m <= m_max`.
///
/// Left endpoints are iterated with the map itself; right endpoints are
/// iterated with its left-continuous version.
pub fn saddle_connections<T: Coord, M: Exchange<T>>(
    map: &M,
    m_max: usize,
) -> Vec<SaddleConnection> {
    let d = map.size();
    let lefts: Vec<T> = (0..d).map(|i| map.left_endpoint(i)).collect();
    let rights: Vec<T> = (0..d).map(|i| map.right_endpoint(i)).collect();
    let mut out = Vec::new();
    for alpha in 0..d {
        let mut x = lefts[alpha].clone();
        let mut r = rights[alpha].clone();
        for m in 1..=m_max {
            x = map.evaluate(&x);
            r = map.evaluate_left_limit(&r);
            for beta in 0..d {
                if same_point(&x, &lefts[beta]) {
                    out.push(SaddleConnection {
                        alpha,
                        beta,
                        m,
                        side: Side::Left,
                    });
                }
                if same_point(&r, &rights[beta]) {
                    out.push(SaddleConnection {
                        alpha,
                        beta,
                        m,
                        side: Side::Right,
                    });
                }
            }
        }
    }
    out.sort_by_key(|c| (c.side, c.m, c.alpha, c.beta));
    out
}

/// A maximal interval `[left, right)` on which `F^period` is the identity,
/// with every iterate inside a single interval of the partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicInterval<T: Coord> {
    pub left: T,
    pub right: T,
    pub period: usize,
    pub itinerary: Vec<usize>,
    /// `k` with `R(J) = F^k(J)`, if any.
    pub symmetric_partner_offset: Option<usize>,
}

impl<T: Coord> PeriodicInterval<T> {
    pub fn width(&self) -> T {
        self.right.clone() - self.left.clone()
    }

    pub fn midpoint(&self) -> T {
        (self.left.clone() + self.right.clone()) * T::half()
    }

    pub fn contains(&self, x: &T) -> bool {
        *x >= self.left && *x < self.right
    }
}

#[derive(Debug, Clone)]
struct Node<T> {
    left: T,
    len: T,
    /// shifts[k] = total translation after k + 1 steps
    shifts: Vec<T>,
    itinerary: Vec<usize>,
}

fn null<T: Coord>(v: &T) -> bool {
    v.same_tol(&T::zero(), PERIOD_TOL)
}

/// Periodic intervals of minimal period `q <= q_max`, in orbit order
/// (`J, F(J), ...`), orbits sorted by period and then by leftmost point.
pub fn periodic_intervals<T: Coord>(iem: &Iem<T>, q_max: usize) -> Vec<PeriodicInterval<T>> {
    if !T::EXACT {
        let bound = q_max as f64 * iem.size() as f64 * f64::EPSILON * 4.0;
        if bound > 1e-8 {
            warn!(
                "accumulated rounding bound {:e} exceeds 1e-8 for q_max = {}; use rational mode",
                bound, q_max
            );
        }
    }
    let mut nodes: Vec<Node<T>> = (0..iem.size())
        .map(|i| Node {
            left: iem.left_endpoints()[i].clone(),
            len: iem.lengths()[i].clone(),
            shifts: vec![iem.omega()[i].clone()],
            itinerary: vec![i],
        })
        .collect();
    let mut found: Vec<Node<T>> = Vec::new();
    for q in 1..=q_max {
        let mut rest = Vec::with_capacity(nodes.len());
        for n in nodes {
            if null(&n.shifts[q - 1]) {
                // earlier periods were split off, so q is minimal here
                found.push(n);
            } else {
                rest.push(n);
            }
        }
        nodes = rest;
        if q == q_max {
            break;
        }
        let mut next = Vec::with_capacity(nodes.len() + iem.size());
        for n in nodes {
            let shift = n.shifts[q - 1].clone();
            let img_left = n.left.clone() + shift.clone();
            let img_right = img_left.clone() + n.len.clone();
            let mut cuts = vec![img_left.clone()];
            for c in iem.left_endpoints() {
                if *c > img_left && *c < img_right && !(c.same(&img_left) || c.same(&img_right)) {
                    cuts.push(c.clone());
                }
            }
            cuts.push(img_right);
            for w in cuts.windows(2) {
                let j = iem.locate(&w[0]);
                let mut shifts = n.shifts.clone();
                shifts.push(shift.clone() + iem.omega()[j].clone());
                let mut itinerary = n.itinerary.clone();
                itinerary.push(j);
                next.push(Node {
                    left: w[0].clone() - shift.clone(),
                    len: w[1].clone() - w[0].clone(),
                    shifts,
                    itinerary,
                });
            }
        }
        nodes = next;
    }

    // merge neighbours with identical itinerary (maximality)
    found.sort_by(|a, b| a.left.partial_cmp(&b.left).expect("comparable"));
    let mut merged: Vec<Node<T>> = Vec::new();
    for n in found {
        if let Some(last) = merged.last_mut() {
            let touching = (last.left.clone() + last.len.clone()).same(&n.left);
            if touching && last.itinerary == n.itinerary {
                last.len = last.len.clone() + n.len;
                continue;
            }
        }
        merged.push(n);
    }

    // group into orbits by the rotation class of the itinerary
    let mut by_class: BTreeMap<Vec<usize>, Vec<Node<T>>> = BTreeMap::new();
    for n in merged {
        let q = n.itinerary.len();
        let key = (0..q)
            .map(|r| {
                let mut v = n.itinerary.clone();
                v.rotate_left(r);
                v
            })
            .min()
            .expect("nonempty itinerary");
        by_class.entry(key).or_default().push(n);
    }
    let mut orbits: Vec<Vec<Node<T>>> = by_class
        .into_values()
        .map(|members| {
            let start = members
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.left.partial_cmp(&b.1.left).expect("comparable"))
                .map(|(i, _)| i)
                .expect("nonempty class");
            let mut ordered = vec![members[start].clone()];
            while ordered.len() < members.len() {
                let mut want = ordered.last().expect("nonempty").itinerary.clone();
                want.rotate_left(1);
                match members.iter().find(|m| m.itinerary == want) {
                    Some(m) => ordered.push(m.clone()),
                    None => break,
                }
            }
            ordered
        })
        .collect();
    orbits.sort_by(|a, b| {
        a[0].itinerary
            .len()
            .cmp(&b[0].itinerary.len())
            .then(a[0].left.partial_cmp(&b[0].left).expect("comparable"))
    });

    let mut out = Vec::new();
    for orbit in orbits {
        for n in &orbit {
            let right = n.left.clone() + n.len.clone();
            let reflected_left = (T::one() - right.clone()).frac();
            let partner = (0..n.itinerary.len()).find(|&k| {
                let img = if k == 0 {
                    n.left.clone()
                } else {
                    n.left.clone() + n.shifts[k - 1].clone()
                };
                img.frac().same(&reflected_left)
            });
            out.push(PeriodicInterval {
                left: n.left.clone(),
                right,
                period: n.itinerary.len(),
                itinerary: n.itinerary.clone(),
                symmetric_partner_offset: partner,
            });
        }
    }
    out
}

/// Splits the output of [`periodic_intervals`] into orbits.
pub fn group_orbits<T: Coord>(intervals: &[PeriodicInterval<T>]) -> Vec<Vec<PeriodicInterval<T>>> {
    let mut out: Vec<Vec<PeriodicInterval<T>>> = Vec::new();
    let mut i = 0;
    while i < intervals.len() {
        let q = intervals[i].period;
        out.push(intervals[i..(i + q).min(intervals.len())].to_vec());
        i += q;
    }
    out
}

/// Report of [`verify_no_nonsymmetric`].
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport<T: Coord> {
    pub checked: usize,
    pub counterexamples: Vec<PeriodicInterval<T>>,
}

impl<T: Coord> SymmetryReport<T> {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Checks that every periodic interval of a symmetric map has its mirror
/// image on its own orbit. Non-symmetric maps are exempt.
pub fn verify_no_nonsymmetric<T: Coord>(iem: &Iem<T>, q_max: usize) -> Result<SymmetryReport<T>> {
    if !iem.is_symmetric().symmetric() {
        return Err(Error::NotSymmetric);
    }
    let intervals = periodic_intervals(iem, q_max);
    let checked = intervals.len();
    let counterexamples = intervals
        .into_iter()
        .filter(|j| j.symmetric_partner_offset.is_none())
        .collect();
    Ok(SymmetryReport {
        checked,
        counterexamples,
    })
}
