//! Named length functions for callback families.

use fiemkit::family::Callback;
use std::f64::consts::TAU;
use std::sync::Arc;

pub struct Entry {
    pub name: &'static str,
    pub size: usize,
    pub build: fn() -> Callback,
}

const REGISTRY: &[Entry] = &[
    Entry {
        name: "sine-3",
        size: 3,
        build: sine3,
    },
    Entry {
        name: "cubic-4",
        size: 4,
        build: cubic4,
    },
];

pub fn lookup(name: &str) -> Option<&'static Entry> {
    REGISTRY.iter().find(|e| e.name == name)
}

pub fn names() -> Vec<&'static str> {
    REGISTRY.iter().map(|e| e.name).collect()
}

/// `lambda(y) = (0.25 + 0.1 s, 0.3, 0.45 - 0.1 s)` with `s = sin(2 pi y)`.
fn sine3() -> Callback {
    Callback {
        name: "sine-3".into(),
        lengths: Arc::new(|y| {
            let s = 0.1 * (TAU * y).sin();
            vec![0.25 + s, 0.3, 0.45 - s]
        }),
        derivative: Arc::new(|y| {
            let c = 0.1 * TAU * (TAU * y).cos();
            vec![c, 0.0, -c]
        }),
    }
}

/// Outer lengths moving with `(y - 1/2)^3`.
fn cubic4() -> Callback {
    Callback {
        name: "cubic-4".into(),
        lengths: Arc::new(|y| {
            let u = 0.8 * (y - 0.5).powi(3);
            vec![0.3 + u, 0.2, 0.2, 0.3 - u]
        }),
        derivative: Arc::new(|y| {
            let du = 2.4 * (y - 0.5).powi(2);
            vec![du, 0.0, 0.0, -du]
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fiemkit::{Family, Permutation};

    #[test]
    fn registered_families_are_valid() {
        for e in REGISTRY {
            let cb = (e.build)();
            assert_eq!(cb.name, e.name);
            let fam = Family::callback(Permutation::reversing(e.size), cb, (0.0, 1.0)).unwrap();
            // derivative against central differences
            let h = 1e-6;
            for k in 1..10 {
                let y = k as f64 / 10.0;
                let a = fam.lambda_at(y + h).unwrap();
                let b = fam.lambda_at(y - h).unwrap();
                let d = fam.lambda_deriv(y).unwrap();
                for i in 0..e.size {
                    assert!(((a[i] - b[i]) / (2.0 * h) - d[i]).abs() < 1e-6);
                }
            }
        }
        assert!(lookup("nope").is_none());
    }
}
