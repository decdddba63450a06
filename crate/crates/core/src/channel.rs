//! Uniform circular array response, LoS and Rayleigh channel synthesis, and
//! log-distance path loss.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{ChannelVector, Error, Result, VectorRole, C64};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    antennas: usize,
    radius: f64,
    wavelength: f64,
}

impl ArrayGeometry {
    pub fn new(antennas: usize, radius: f64, wavelength: f64) -> Result<Self> {
        if antennas < 2 {
            return Err(Error::invalid("antennas", "a UCA needs at least 2 elements"));
        }
        if !(radius > 0.0) {
            return Err(Error::invalid("radius", "must be positive"));
        }
        if !(wavelength > 0.0) {
            return Err(Error::invalid("wavelength", "must be positive"));
        }
        Ok(Self {
            antennas,
            radius,
            wavelength,
        })
    }

    /// Half-wavelength spacing along the circumference: `d = M λ / (4π)`.
    pub fn half_wavelength(antennas: usize, wavelength: f64) -> Result<Self> {
        Self::new(antennas, antennas as f64 * wavelength / (4.0 * PI), wavelength)
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// `2π d / λ`.
    pub fn phase_scale(&self) -> f64 {
        2.0 * PI * self.radius / self.wavelength
    }

    /// Angular position of (zero-based) element `m`.
    pub fn element_angle(&self, m: usize) -> f64 {
        2.0 * PI * m as f64 / self.antennas as f64
    }
}

/// UCA steering vector, element `m`: `exp(-j k sin(theta) cos(phi - gamma_m))`.
pub fn steering_vector(array: &ArrayGeometry, theta: f64, phi: f64) -> ChannelVector {
    let ks = array.phase_scale() * theta.sin();
    // e^{j(phi - gamma_m)} by rotation, re-anchored every ANCHOR elements to
    // keep the recurrence error at the 1e-15 level.
    const ANCHOR: usize = 32;
    let step = C64::from_polar(1.0, -array.element_angle(1));
    let mut z = C64::new(1.0, 0.0);
    let entries = (0..array.antennas)
        .map(|m| {
            if m % ANCHOR == 0 {
                z = C64::from_polar(1.0, phi - array.element_angle(m));
            } else {
                z *= step;
            }
            C64::from_polar(1.0, -ks * z.re)
        })
        .collect();
    ChannelVector::new(entries, VectorRole::Steering)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkType {
    LoS,
    NLoS,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeScaleFading {
    pub beta: f64,
    pub link_type: LinkType,
}

/// Intercept (loss at the reference distance), exponent and shadowing for one
/// link class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkLawParams {
    pub intercept_db: f64,
    pub exponent: f64,
    #[serde(default)]
    pub shadowing_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossModel {
    pub reference_distance: f64,
    pub los: LinkLawParams,
    pub nlos: LinkLawParams,
}

impl Default for PathLossModel {
    /// 2 GHz air-to-ground style defaults: LoS intercept
    /// `28 + 20 log10(2)` dB, NLoS intercept `13.54 + 20 log10(2)` dB, with
    /// exponents 2.2 / 3.7 and 8 dB NLoS shadowing.
    fn default() -> Self {
        Self {
            reference_distance: 1.0,
            los: LinkLawParams {
                intercept_db: 34.02,
                exponent: 2.2,
                shadowing_db: 0.0,
            },
            nlos: LinkLawParams {
                intercept_db: 19.56,
                exponent: 3.7,
                shadowing_db: 8.0,
            },
        }
    }
}

impl PathLossModel {
    pub fn params(&self, link: LinkType) -> &LinkLawParams {
        match link {
            LinkType::LoS => &self.los,
            LinkType::NLoS => &self.nlos,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reference_distance > 0.0) {
            return Err(Error::invalid("reference_distance", "must be positive"));
        }
        for p in [&self.los, &self.nlos] {
            if !(p.exponent > 0.0) || !p.intercept_db.is_finite() {
                return Err(Error::invalid(
                    "path_loss",
                    "exponent must be positive, intercept finite",
                ));
            }
            if !(p.shadowing_db >= 0.0) {
                return Err(Error::invalid("shadowing_db", "must be non-negative"));
            }
        }
        Ok(())
    }

    /// Median gain `PL0 (d/d0)^-alpha` with `PL0 = 10^(-intercept/10)`.
    pub fn median_gain(&self, distance: f64, link: LinkType) -> Result<f64> {
        if !(distance >= self.reference_distance) {
            return Err(Error::invalid(
                "distance",
                format!(
                    "{distance} m is below the reference distance {} m",
                    self.reference_distance
                ),
            ));
        }
        let p = self.params(link);
        let pl0 = 10f64.powf(-p.intercept_db / 10.0);
        Ok(pl0 * (distance / self.reference_distance).powf(-p.exponent))
    }
}

/// Large-scale gain with log-normal shadowing drawn from `rng` when the link
/// class has non-zero shadowing.
pub fn path_loss<R: Rng + ?Sized>(
    distance: f64,
    link: LinkType,
    model: &PathLossModel,
    rng: &mut R,
) -> Result<LargeScaleFading> {
    let mut beta = model.median_gain(distance, link)?;
    let sigma = model.params(link).shadowing_db;
    if sigma > 0.0 {
        let shadow_db: f64 = Normal::new(0.0, sigma).expect("finite sigma").sample(rng);
        beta *= 10f64.powf(shadow_db / 10.0);
    }
    Ok(LargeScaleFading { beta, link_type: link })
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid(
            "beta",
            format!("must be positive and finite, got {beta}"),
        ));
    }
    Ok(())
}

/// LoS channel with a caller-supplied phase: `sqrt(beta) e^{j psi} a(theta, phi)`.
pub fn uav_channel_with_phase(
    array: &ArrayGeometry,
    beta: f64,
    theta: f64,
    phi: f64,
    psi: f64,
) -> Result<ChannelVector> {
    check_beta(beta)?;
    let gain = C64::from_polar(beta.sqrt(), psi);
    Ok(steering_vector(array, theta, phi)
        .scaled(gain)
        .with_role(VectorRole::TrueChannel))
}

/// LoS UAV channel with a uniformly random phase rotation.
pub fn gen_uav_channel<R: Rng + ?Sized>(
    array: &ArrayGeometry,
    beta: f64,
    theta: f64,
    phi: f64,
    rng: &mut R,
) -> Result<ChannelVector> {
    let psi = rng.gen_range(0.0..2.0 * PI);
    uav_channel_with_phase(array, beta, theta, phi, psi)
}

/// `n` i.i.d. CN(0, variance) samples.
pub fn complex_gaussian<R: Rng + ?Sized>(n: usize, variance: f64, rng: &mut R) -> Vec<C64> {
    let s = (variance / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(s * re, s * im)
        })
        .collect()
}

/// Rayleigh ground-user channel, entries CN(0, beta).
pub fn gen_gue_channel<R: Rng + ?Sized>(antennas: usize, beta: f64, rng: &mut R) -> Result<ChannelVector> {
    check_beta(beta)?;
    Ok(ChannelVector::new(
        complex_gaussian(antennas, beta, rng),
        VectorRole::TrueChannel,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn steering_matches_direct_formula_at_large_m() {
        let arr = ArrayGeometry::half_wavelength(4096, 0.15).unwrap();
        for (theta, phi) in [(0.3, -2.9), (1.2, 0.4), (PI / 2.0, 3.1)] {
            let a = steering_vector(&arr, theta, phi);
            let ks = arr.phase_scale() * f64::sin(theta);
            for m in 0..arr.antennas() {
                let direct = C64::from_polar(1.0, -ks * (phi - arr.element_angle(m)).cos());
                assert!((a[m] - direct).norm() < 1e-10, "m = {m}");
            }
        }
    }

    fn half_lambda_array(m: usize) -> ArrayGeometry {
        // d / lambda = 0.5 for the hand-evaluated case
        ArrayGeometry::new(m, 0.5, 1.0).unwrap()
    }

    #[test]
    fn zenith_steering_is_all_ones() {
        let a = steering_vector(&ArrayGeometry::half_wavelength(16, 0.15).unwrap(), 0.0, 1.3);
        assert!(a.entries().iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn four_element_hand_values() {
        let a = steering_vector(&half_lambda_array(4), PI / 2.0, 0.0);
        assert_abs_diff_eq!(a[0].re, (-PI).cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(a[0].im, (-PI).sin(), epsilon = 1e-12);
        assert_abs_diff_eq!(a[1].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a[1].im, 0.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn steering_has_unit_modulus(theta in 0.0..PI, phi in -PI..PI, m in 2usize..300) {
            let a = steering_vector(&ArrayGeometry::half_wavelength(m, 0.15).unwrap(), theta, phi);
            for z in a.entries() {
                prop_assert!((z.norm() - 1.0).abs() < 1e-12);
            }
            prop_assert!((a.norm_sqr() - m as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn array_rejects_invalid() {
        assert!(ArrayGeometry::new(1, 1.0, 1.0).is_err());
        assert!(ArrayGeometry::new(4, 0.0, 1.0).is_err());
        assert!(ArrayGeometry::new(4, 1.0, -1.0).is_err());
        let arr = ArrayGeometry::half_wavelength(128, 0.15).unwrap();
        assert_abs_diff_eq!(arr.phase_scale(), 64.0, epsilon = 1e-12);
    }

    #[test]
    fn path_loss_reference_points() {
        let model = PathLossModel {
            reference_distance: 1.0,
            los: LinkLawParams {
                intercept_db: 30.0,
                exponent: 2.2,
                shadowing_db: 0.0,
            },
            nlos: LinkLawParams {
                intercept_db: 30.0,
                exponent: 3.7,
                shadowing_db: 0.0,
            },
        };
        let pl0 = 1e-3;
        assert_abs_diff_eq!(model.median_gain(1.0, LinkType::LoS).unwrap(), pl0, epsilon = 1e-18);
        let g10 = model.median_gain(10.0, LinkType::LoS).unwrap();
        assert!((g10 / (pl0 * 10f64.powf(-2.2)) - 1.0).abs() < 1e-12);
        let los = model.median_gain(250.0, LinkType::LoS).unwrap();
        let nlos = model.median_gain(250.0, LinkType::NLoS).unwrap();
        assert!(nlos < los);
        assert!(model.median_gain(0.5, LinkType::LoS).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lsf = path_loss(10.0, LinkType::LoS, &model, &mut rng).unwrap();
        assert_eq!(lsf.beta, g10);
        assert_eq!(lsf.link_type, LinkType::LoS);
    }

    #[test]
    fn uav_channel_norms_and_determinism() {
        let arr = ArrayGeometry::half_wavelength(64, 0.15).unwrap();
        let h1 = gen_uav_channel(&arr, 2.5, 1.0, 0.3, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let h2 = gen_uav_channel(&arr, 2.5, 1.0, 0.3, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(h1, h2);
        assert_abs_diff_eq!(h1.norm_sqr(), 2.5 * 64.0, epsilon = 1e-9);
        for z in h1.entries() {
            assert_abs_diff_eq!(z.norm_sqr(), 2.5, epsilon = 1e-12);
        }
        assert!(gen_uav_channel(&arr, 0.0, 1.0, 0.3, &mut ChaCha8Rng::seed_from_u64(3)).is_err());
    }

    #[test]
    fn gue_channel_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let beta = 0.7;
        let m = 8;
        let draws = 100_000;
        let mut energy = 0.0;
        let mut cov = vec![C64::new(0.0, 0.0); m * m];
        let mut pseudo = C64::new(0.0, 0.0);
        for _ in 0..draws {
            let h = gen_gue_channel(m, beta, &mut rng).unwrap();
            energy += h.norm_sqr() / m as f64;
            for i in 0..m {
                pseudo += h[i] * h[i];
                for j in 0..m {
                    cov[i * m + j] += h[i] * h[j].conj();
                }
            }
        }
        let mean = energy / draws as f64;
        assert!((mean / beta - 1.0).abs() < 0.01, "mean {mean}");
        for i in 0..m {
            for j in 0..m {
                let c = cov[i * m + j] / draws as f64;
                let expect = if i == j { beta } else { 0.0 };
                assert!((c - C64::new(expect, 0.0)).norm() < 0.02, "cov[{i},{j}] = {c}");
            }
        }
        // circular symmetry: E[h h] = 0
        assert!((pseudo / (draws * m) as f64).norm() < 0.01);
        assert!(gen_gue_channel(m, 0.0, &mut rng).is_err());
    }
}
