//! Smooth dyadic partition of unity `Σ_ℓ φ(2^{−ℓ}λ) = 1` on `(0, ∞)`.
//!
//! `φ = η / Σ_k η(2^{−k} ·)` with the bump
//! `η(λ) = exp(1/((λ − 1/4)(λ − 1)))` on `(1/4, 1)`. Only two dilates of `η`
//! overlap any given `λ`, so the normalizing sum has at most two terms.

use super::Multiplier;
use crate::{Error, Result};

pub fn bump(lambda: f64) -> f64 {
    if lambda > 0.25 && lambda < 1.0 {
        (1.0 / ((lambda - 0.25) * (lambda - 1.0))).exp()
    } else {
        0.0
    }
}

fn dyadic_sum(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    // η(2^{−k}λ) ≠ 0 needs log2 λ < k < log2 λ + 2.
    let k0 = lambda.log2().floor() as i32;
    (k0..=k0 + 2).map(|k| bump(lambda * 2f64.powi(-k))).sum()
}

/// `φ(λ)`, supported in `(1/4, 1)`.
pub fn phi(lambda: f64) -> f64 {
    let b = bump(lambda);
    if b == 0.0 {
        0.0
    } else {
        b / dyadic_sum(lambda)
    }
}

/// `φ` as a multiplier.
pub fn phi_window() -> Multiplier {
    Multiplier::new("phi", phi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartitionFamily {
    pub level_min: i32,
    pub level_max: i32,
}

pub fn dyadic_partition(level_min: i32, level_max: i32) -> Result<PartitionFamily> {
    if level_min >= level_max {
        return Err(Error::invalid(format!(
            "partition needs level_min < level_max, got {level_min} ≥ {level_max}"
        )));
    }
    Ok(PartitionFamily { level_min, level_max })
}

impl PartitionFamily {
    /// `φ(2^{−ℓ}λ)`, supported in `(2^{ℓ−2}, 2^ℓ)`.
    pub fn level(&self, l: i32, lambda: f64) -> f64 {
        phi(lambda * 2f64.powi(-l))
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<i32> {
        self.level_min..=self.level_max
    }

    /// Interval on which the finite family sums to one.
    pub fn covered_range(&self) -> (f64, f64) {
        (2f64.powi(self.level_min - 1), 2f64.powi(self.level_max - 2))
    }

    pub fn sum(&self, lambda: f64) -> f64 {
        self.levels().map(|l| self.level(l, lambda)).sum()
    }

    /// The piece `F_ℓ = F · φ(2^{−ℓ}·)`.
    pub fn piece(&self, f: &Multiplier, l: i32) -> Multiplier {
        let g = f.clone();
        Multiplier::new(format!("{}·phi_{l}", f.label()), move |x| g.eval(x) * phi(x * 2f64.powi(-l)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints_vanish() {
        assert_eq!(phi(0.25), 0.0);
        assert_eq!(phi(1.0), 0.0);
        assert!(phi(0.5) > 0.0);
    }

    #[test]
    fn overlapping_levels() {
        let p = dyadic_partition(-4, 4).unwrap();
        let active = |x: f64| -> Vec<i32> { p.levels().filter(|&l| p.level(l, x) > 0.0).collect() };
        assert_eq!(active(0.7), vec![0, 1]);
        // 1/2 sits on the support edges of levels −1 and 1.
        assert_eq!(active(0.5), vec![0]);
    }

    #[test]
    fn inverted_levels_rejected() {
        assert!(dyadic_partition(3, 3).is_err());
    }

    proptest! {
        #[test]
        fn partition_of_unity(t in 0.0f64..1.0) {
            let p = dyadic_partition(-3, 6).unwrap();
            let (lo, hi) = p.covered_range();
            let lambda = lo * (hi / lo).powf(t);
            prop_assert!((p.sum(lambda) - 1.0).abs() < 1e-10);
        }

        #[test]
        fn reconstruction(t in 0.0f64..1.0) {
            let p = dyadic_partition(-2, 5).unwrap();
            let (lo, hi) = p.covered_range();
            let lambda = lo + (hi - lo) * t;
            let f = Multiplier::gaussian(3.0);
            let total: f64 = p.levels().map(|l| p.piece(&f, l).eval(lambda)).sum();
            prop_assert!((total - f.eval(lambda)).abs() < 1e-9);
        }
    }
}
