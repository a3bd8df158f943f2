//! Seeded random fields.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::spectral::{bracket, Projection, SpectralField};

pub type LabRng = ChaCha8Rng;

pub fn rng(seed: u64) -> LabRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian, `E|z|² = 1`.
pub fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Random trigonometric polynomial with `f̂(k) = z_k ⟨k⟩^{-decay}`.
pub fn gaussian_field(rng: &mut impl Rng, cutoff: usize, decay: f64) -> SpectralField {
    SpectralField::from_fn(cutoff, |k| complex_gaussian(rng) * bracket(k).powf(-decay))
}

/// Unit-modulus coefficients with random phases on one side of the spectrum:
/// `⟨k⟩^{-exponent} e^{iθ_k}` for `1 ≤ |k| ≤ cutoff` in the chosen half.
pub fn rough_tail(rng: &mut impl Rng, cutoff: usize, exponent: f64, side: Projection) -> SpectralField {
    SpectralField::from_fn(cutoff, |k| {
        let on_side = match side {
            Projection::Minus => k < 0,
            Projection::Plus => k > 0,
            Projection::NonMean => k != 0,
            Projection::Mean => k == 0,
        };
        if on_side {
            let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(bracket(k).powf(-exponent), theta)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeding_is_deterministic() {
        let a = gaussian_field(&mut rng(7), 6, 1.5);
        let b = gaussian_field(&mut rng(7), 6, 1.5);
        assert_eq!(a, b);
        let c = gaussian_field(&mut rng(8), 6, 1.5);
        assert_ne!(a, c);
    }

    #[test]
    fn tail_sits_on_requested_side() {
        let t = rough_tail(&mut rng(1), 10, 2.0, Projection::Minus);
        assert!(t.modes().all(|(k, c)| k < 0 || c.norm() == 0.0));
        assert!((t.coeff(-3).norm() - bracket(3).powf(-2.0)).abs() < 1e-15);
    }
}
