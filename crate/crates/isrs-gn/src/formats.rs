//! Modulation formats and their excess kurtosis.
//!
//! The closed-form correction terms depend on the transmitted constellation
//! only through its excess kurtosis
//!
//!   Phi = E|x|^4 / (E|x|^2)^2 - 2
//!
//! for zero-mean complex symbols. Named QAM formats are evaluated from
//! their point lists rather than hard-coded.

use crate::error::{Error, Result};

/// One constellation point with its transmit probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstellationPoint {
    pub re: f64,
    pub im: f64,
    pub probability: f64,
}

impl ConstellationPoint {
    pub fn new(re: f64, im: f64, probability: f64) -> Self {
        Self {
            re,
            im,
            probability,
        }
    }

    fn power(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// Excess kurtosis of a discrete constellation.
///
/// Scale-invariant: the points need not be normalized to unit power.
/// Probabilities must be non-negative and sum to 1 (within 1e-9).
pub fn excess_kurtosis(points: &[ConstellationPoint]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::invalid("empty constellation"));
    }
    let mut p_sum = 0.0;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for pt in points {
        if pt.probability < 0.0 || !pt.probability.is_finite() {
            return Err(Error::invalid("constellation probabilities must be non-negative"));
        }
        if !pt.re.is_finite() || !pt.im.is_finite() {
            return Err(Error::invalid("constellation points must be finite"));
        }
        let pw = pt.power();
        p_sum += pt.probability;
        m2 += pt.probability * pw;
        m4 += pt.probability * pw * pw;
    }
    if (p_sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "constellation probabilities sum to {p_sum}, expected 1"
        )));
    }
    if m2 <= 0.0 {
        return Err(Error::invalid("constellation has zero average power"));
    }
    Ok(m4 / (m2 * m2) - 2.0)
}

/// Uniform square QAM constellation with the conventional odd-integer
/// levels (+/-1, +/-3, ...). `order` must be an even power of two.
pub fn square_qam(order: usize) -> Result<Vec<ConstellationPoint>> {
    let side = (order as f64).sqrt() as usize;
    if side * side != order || !side.is_power_of_two() {
        return Err(Error::invalid(format!(
            "square QAM order must be an even power of two, got {order}"
        )));
    }
    let p = 1.0 / order as f64;
    let mut points = Vec::with_capacity(order);
    for a in 0..side {
        for b in 0..side {
            let re = (2 * a) as f64 - (side - 1) as f64;
            let im = (2 * b) as f64 - (side - 1) as f64;
            points.push(ConstellationPoint::new(re, im, p));
        }
    }
    Ok(points)
}

/// The named formats shipped with the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// Circularly symmetric Gaussian signaling; excess kurtosis 0 by the
    /// Gaussian moment theorem, no point list needed.
    Gaussian,
    Qpsk,
    Qam16,
    Qam64,
    Qam256,
}

impl Format {
    pub fn excess_kurtosis(self) -> f64 {
        match self {
            Format::Gaussian => 0.0,
            Format::Qpsk => excess_kurtosis(&square_qam(4).unwrap()).unwrap(),
            Format::Qam16 => excess_kurtosis(&square_qam(16).unwrap()).unwrap(),
            Format::Qam64 => excess_kurtosis(&square_qam(64).unwrap()).unwrap(),
            Format::Qam256 => excess_kurtosis(&square_qam(256).unwrap()).unwrap(),
        }
    }

    pub fn parse(name: &str) -> Option<Format> {
        match name.to_ascii_lowercase().as_str() {
            "gaussian" => Some(Format::Gaussian),
            "qpsk" | "4qam" => Some(Format::Qpsk),
            "16qam" => Some(Format::Qam16),
            "64qam" => Some(Format::Qam64),
            "256qam" => Some(Format::Qam256),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Format::Gaussian => "gaussian",
            Format::Qpsk => "qpsk",
            Format::Qam16 => "16qam",
            Format::Qam64 => "64qam",
            Format::Qam256 => "256qam",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Brute-force fourth/second moment ratio over explicit points,
    /// independent of the accumulation in `excess_kurtosis`.
    fn moments_oracle(points: &[(f64, f64)]) -> f64 {
        let n = points.len() as f64;
        let e2: f64 = points.iter().map(|(r, i)| (r * r + i * i) / n).sum();
        let e4: f64 = points
            .iter()
            .map(|(r, i)| {
                let p = r * r + i * i;
                p * p / n
            })
            .sum();
        e4 / (e2 * e2) - 2.0
    }

    #[test]
    fn qpsk_is_constant_modulus() {
        assert_relative_eq!(Format::Qpsk.excess_kurtosis(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn gaussian_is_zero() {
        assert_eq!(Format::Gaussian.excess_kurtosis(), 0.0);
    }

    #[test]
    fn qam64_matches_bruteforce_moments() {
        let pts: Vec<(f64, f64)> = square_qam(64)
            .unwrap()
            .iter()
            .map(|p| (p.re, p.im))
            .collect();
        let oracle = moments_oracle(&pts);
        assert_relative_eq!(oracle, -13.0 / 21.0, epsilon = 1e-12);
        assert_relative_eq!(Format::Qam64.excess_kurtosis(), oracle, epsilon = 1e-4);
        assert_relative_eq!(Format::Qam64.excess_kurtosis(), -0.6190, epsilon = 1e-4);
    }

    #[test]
    fn qam_family_values() {
        assert_relative_eq!(Format::Qam16.excess_kurtosis(), -0.68, epsilon = 1e-12);
        assert_relative_eq!(
            Format::Qam256.excess_kurtosis(),
            -0.60470588235294118,
            epsilon = 1e-12
        );
    }

    #[test]
    fn empty_constellation_is_invalid() {
        assert!(excess_kurtosis(&[]).is_err());
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        let pts = vec![
            ConstellationPoint::new(1.0, 0.0, 0.4),
            ConstellationPoint::new(-1.0, 0.0, 0.4),
        ];
        assert!(excess_kurtosis(&pts).is_err());
    }

    proptest::proptest! {
        /// Kurtosis is invariant under global scaling and rotation.
        #[test]
        fn scale_and_rotation_invariance(
            scale in 0.05f64..20.0,
            angle in 0.0f64..std::f64::consts::TAU,
        ) {
            let base = square_qam(16).unwrap();
            let (sin, cos) = angle.sin_cos();
            let transformed: Vec<ConstellationPoint> = base
                .iter()
                .map(|p| ConstellationPoint::new(
                    scale * (p.re * cos - p.im * sin),
                    scale * (p.re * sin + p.im * cos),
                    p.probability,
                ))
                .collect();
            let a = excess_kurtosis(&base).unwrap();
            let b = excess_kurtosis(&transformed).unwrap();
            proptest::prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}
