//! Uplink pilot training and the contaminated least-squares estimate.
//!
//! The estimate is synthesised in its post-correlation form
//! `h_own + sum(h_interferers) + n`, `n ~ CN(0, I / (tau p_p))`. Because the
//! pilot has unit energy this has the same distribution as transmitting the
//! pilot, receiving `Y` and correlating; [`ls_estimate_materialized`] does the
//! latter and is kept for equivalence checks.

use rand::Rng;

use crate::channel::complex_gaussian;
use crate::{ChannelVector, Error, Result, VectorRole, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotConfig {
    tau: usize,
    power: f64,
}

impl PilotConfig {
    /// `power` is the noise-normalised pilot power `p_p`; it may be
    /// `f64::INFINITY` to disable estimation noise.
    pub fn new(tau: usize, power: f64) -> Result<Self> {
        if tau < 1 {
            return Err(Error::invalid("tau", "pilot length must be >= 1"));
        }
        if !(power > 0.0) {
            return Err(Error::invalid("pilot_power", "must be positive"));
        }
        Ok(Self { tau, power })
    }

    /// A single effective processing gain `tau * p_p`.
    pub fn from_processing_gain(tau_pp: f64) -> Result<Self> {
        Self::new(1, tau_pp)
    }

    pub fn noiseless() -> Self {
        Self {
            tau: 1,
            power: f64::INFINITY,
        }
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn processing_gain(&self) -> f64 {
        self.tau as f64 * self.power
    }

    /// Per-entry variance of the post-correlation noise, `1 / (tau p_p)`.
    pub fn noise_variance(&self) -> f64 {
        1.0 / self.processing_gain()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsEstimate {
    pub vector: ChannelVector,
    pub owner_bs: usize,
    pub block_index: usize,
}

fn check_dims(own: &ChannelVector, interferers: &[&ChannelVector]) -> Result<()> {
    for h in interferers {
        h.ensure_len(own.len())?;
    }
    Ok(())
}

/// Contaminated estimate `h_own + sum(interferers) + n` at BS `owner_bs`.
pub fn ls_estimate<R: Rng + ?Sized>(
    own: &ChannelVector,
    interferers: &[&ChannelVector],
    pilot: &PilotConfig,
    owner_bs: usize,
    block_index: usize,
    rng: &mut R,
) -> Result<LsEstimate> {
    check_dims(own, interferers)?;
    let mut v = own.clone().with_role(VectorRole::Estimate);
    for h in interferers {
        v.axpy(C64::new(1.0, 0.0), h);
    }
    let var = pilot.noise_variance();
    if var > 0.0 {
        let noise = complex_gaussian(v.len(), var, rng);
        for (e, n) in v.entries_mut().iter_mut().zip(noise) {
            *e += n;
        }
    }
    Ok(LsEstimate {
        vector: v,
        owner_bs,
        block_index,
    })
}

/// Materialises `Y = sqrt(tau p_p) (h_own + sum h_k) psi^T + N` and correlates
/// with `psi*`. `pilot_sequence` must have unit energy and length `tau`.
/// Noise is drawn column by column (one `CN(0, I)` vector per pilot symbol).
pub fn ls_estimate_materialized<R: Rng + ?Sized>(
    own: &ChannelVector,
    interferers: &[&ChannelVector],
    pilot: &PilotConfig,
    pilot_sequence: &[C64],
    rng: &mut R,
) -> Result<ChannelVector> {
    check_dims(own, interferers)?;
    if pilot_sequence.len() != pilot.tau() {
        return Err(Error::DimensionMismatch {
            expected: pilot.tau(),
            actual: pilot_sequence.len(),
        });
    }
    let energy: f64 = pilot_sequence.iter().map(|z| z.norm_sqr()).sum();
    if (energy - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("pilot_sequence", "must have unit energy"));
    }
    if !pilot.processing_gain().is_finite() {
        return Err(Error::invalid(
            "pilot_power",
            "materialised training needs finite power",
        ));
    }
    let m = own.len();
    let amp = pilot.processing_gain().sqrt();
    let mut composite = own.clone();
    for h in interferers {
        composite.axpy(C64::new(1.0, 0.0), h);
    }
    // Y is M x tau, stored column-major.
    let mut y = Vec::with_capacity(m * pilot.tau());
    for psi in pilot_sequence {
        let noise = complex_gaussian(m, 1.0, rng);
        y.extend(composite.entries().iter().zip(noise).map(|(h, n)| amp * h * psi + n));
    }
    let mut out = vec![C64::new(0.0, 0.0); m];
    for (t, psi) in pilot_sequence.iter().enumerate() {
        let col = &y[t * m..(t + 1) * m];
        for (o, v) in out.iter_mut().zip(col) {
            *o += v * psi.conj();
        }
    }
    for o in &mut out {
        *o /= amp;
    }
    Ok(ChannelVector::new(out, VectorRole::Estimate))
}

/// Large-array limit of `||h_hat||^2 / M`:
/// `beta_own + sum(beta_interferers) + 1 / (tau p_p)`.
pub fn estimate_norm_sq_asymptote(beta_own: f64, betas_interferers: &[f64], pilot: &PilotConfig) -> f64 {
    beta_own + betas_interferers.iter().sum::<f64>() + pilot.noise_variance()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_gue_channel, steering_vector, uav_channel_with_phase, ArrayGeometry};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_single_user_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = gen_gue_channel(32, 1.0, &mut rng).unwrap();
        let est = ls_estimate(&h, &[], &PilotConfig::noiseless(), 0, 0, &mut rng).unwrap();
        assert_eq!(est.vector.entries(), h.entries());
        assert_eq!(est.vector.role(), VectorRole::Estimate);
    }

    #[test]
    fn noise_variance_matches_processing_gain() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pilot = PilotConfig::new(4, 2.5).unwrap();
        let zero = ChannelVector::zeros(10, VectorRole::TrueChannel);
        let mut acc = 0.0;
        let draws = 10_000;
        for _ in 0..draws {
            acc += ls_estimate(&zero, &[], &pilot, 0, 0, &mut rng)
                .unwrap()
                .vector
                .norm_sqr();
        }
        let per_entry = acc / (draws * 10) as f64;
        assert!((per_entry * 10.0 - 1.0).abs() < 0.01, "{per_entry}");
    }

    #[test]
    fn construct_and_subtract_recovers_interferer() {
        let arr = ArrayGeometry::half_wavelength(64, 0.15).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let own = gen_gue_channel(64, 1.0, &mut rng).unwrap();
        let (beta, psi) = (3.0, 0.7);
        let intf = uav_channel_with_phase(&arr, beta, 1.2, -0.4, psi).unwrap();
        let pilot = PilotConfig::new(2, 5.0).unwrap();

        let mut noise_rng = ChaCha8Rng::seed_from_u64(9);
        let est = ls_estimate(&own, &[&intf], &pilot, 0, 0, &mut noise_rng).unwrap();
        let mut noise_rng = ChaCha8Rng::seed_from_u64(9);
        let noise = ls_estimate(
            &ChannelVector::zeros(64, VectorRole::TrueChannel),
            &[],
            &pilot,
            0,
            0,
            &mut noise_rng,
        )
        .unwrap();
        let left = est.vector.sub(&own).sub(&noise.vector);
        let expected = steering_vector(&arr, 1.2, -0.4).scaled(C64::from_polar(beta.sqrt(), psi));
        for (a, b) in left.entries().iter().zip(expected.entries()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = ChannelVector::zeros(8, VectorRole::TrueChannel);
        let b = ChannelVector::zeros(9, VectorRole::TrueChannel);
        assert!(matches!(
            ls_estimate(&a, &[&b], &PilotConfig::noiseless(), 0, 0, &mut rng),
            Err(Error::DimensionMismatch { expected: 8, actual: 9 })
        ));
        assert!(PilotConfig::new(0, 1.0).is_err());
        assert!(PilotConfig::new(1, 0.0).is_err());
    }

    #[test]
    fn materialized_with_unit_pilot_matches_direct_synthesis() {
        // With psi = e_1 the correlator picks the first noise column, which is
        // drawn from the same stream as the direct path's noise.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let own = gen_gue_channel(16, 0.8, &mut rng).unwrap();
        let intf = gen_gue_channel(16, 0.3, &mut rng).unwrap();
        let pilot = PilotConfig::new(1, 7.0).unwrap();
        let direct = ls_estimate(&own, &[&intf], &pilot, 0, 0, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let mat = ls_estimate_materialized(
            &own,
            &[&intf],
            &pilot,
            &[C64::new(1.0, 0.0)],
            &mut ChaCha8Rng::seed_from_u64(77),
        )
        .unwrap();
        for (a, b) in direct.vector.entries().iter().zip(mat.entries()) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn materialized_noise_has_expected_variance() {
        let tau = 5;
        let pilot = PilotConfig::new(tau, 3.0).unwrap();
        let psi: Vec<C64> = (0..tau)
            .map(|t| C64::from_polar(1.0 / (tau as f64).sqrt(), 0.9 * t as f64))
            .collect();
        let zero = ChannelVector::zeros(8, VectorRole::TrueChannel);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let draws = 20_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            acc += ls_estimate_materialized(&zero, &[], &pilot, &psi, &mut rng)
                .unwrap()
                .norm_sqr();
        }
        let per_entry = acc / (draws * 8) as f64;
        assert!((per_entry / pilot.noise_variance() - 1.0).abs() < 0.02, "{per_entry}");
    }

    #[test]
    fn asymptote_arithmetic() {
        assert_eq!(estimate_norm_sq_asymptote(1.0, &[], &PilotConfig::noiseless()), 1.0);
        let pilot = PilotConfig::from_processing_gain(10.0).unwrap();
        assert_abs_diff_eq!(
            estimate_norm_sq_asymptote(1.0, &[1.0, 1.0], &pilot),
            3.1,
            epsilon = 1e-12
        );
    }

    #[test]
    fn estimate_energy_converges_at_large_m() {
        let m = 4096;
        let arr = ArrayGeometry::half_wavelength(m, 0.15).unwrap();
        let pilot = PilotConfig::from_processing_gain(10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let trials = 200;
        let mut within = 0;
        for _ in 0..trials {
            let own = gen_gue_channel(m, 1.0, &mut rng).unwrap();
            let i1 =
                crate::channel::gen_uav_channel(&arr, 0.5, rng.gen_range(0.0..1.5), rng.gen_range(-3.0..3.0), &mut rng)
                    .unwrap();
            let i2 = crate::channel::gen_uav_channel(
                &arr,
                0.25,
                rng.gen_range(0.0..1.5),
                rng.gen_range(-3.0..3.0),
                &mut rng,
            )
            .unwrap();
            let est = ls_estimate(&own, &[&i1, &i2], &pilot, 0, 0, &mut rng).unwrap();
            let target = estimate_norm_sq_asymptote(1.0, &[0.5, 0.25], &pilot);
            if (est.vector.norm_sqr() / m as f64 / target - 1.0).abs() < 0.05 {
                within += 1;
            }
        }
        assert!(within as f64 >= 0.99 * trials as f64, "{within}/{trials}");
    }
}
