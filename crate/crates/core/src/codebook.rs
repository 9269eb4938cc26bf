//! Beam-steering reflection codebook.

use num_complex::Complex;

use crate::channel::ula_steering;
use crate::scalar::Real;

/// One codebook entry: RIS phase vector steering toward `2 pi l / L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionCandidate<T> {
    pub index: usize,
    /// Unit-modulus reflection coefficients, one per element. The
    /// reflection matrix is `diag(theta)`.
    pub theta: Vec<Complex<T>>,
    pub steer_angle: T,
}

/// The `L` steering candidates for an `N`-element surface.
pub fn build_codebook<T: Real>(n: usize, l: usize) -> Vec<ReflectionCandidate<T>> {
    (0..l)
        .map(|index| {
            let steer_angle = T::TAU() * T::lit(index as f64) / T::lit(l as f64);
            ReflectionCandidate { index, theta: ula_steering(n, steer_angle), steer_angle }
        })
        .collect()
}
