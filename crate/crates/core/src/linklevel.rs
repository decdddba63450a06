//! Uplink MRC and downlink conjugate-precoding SINRs, their large-array
//! limits, and their high-SNR equal-gain values.
//!
//! Transmit powers scale as `p = E / M`; combiners and precoders are
//! normalised by `eta = ||h_hat|| / sqrt(M)` of the estimate they use.

use serde::{Deserialize, Serialize};

use crate::topology::UserKind;
use crate::training::PilotConfig;
use crate::{ChannelVector, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    pub e_u: f64,
    pub e_d: f64,
}

impl PowerBudget {
    pub fn new(e_u: f64, e_d: f64) -> Result<Self> {
        if !(e_u > 0.0) || !(e_d > 0.0) {
            return Err(Error::invalid("power", "E_u and E_d must be positive"));
        }
        Ok(Self { e_u, e_d })
    }

    /// Per-transmission uplink power `E_u / M`.
    pub fn uplink_power(&self, antennas: usize) -> f64 {
        self.e_u / antennas as f64
    }

    pub fn downlink_power(&self, antennas: usize) -> f64 {
        self.e_d / antennas as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Ul,
    Dl,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Ul => "ul",
            Direction::Dl => "dl",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ul" => Ok(Direction::Ul),
            "dl" => Ok(Direction::Dl),
            other => Err(Error::invalid("direction", format!("unknown direction `{other}`"))),
        }
    }
}

/// Estimation path a SINR was computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Contaminated LS estimate.
    Before,
    /// Detection-based decontamination.
    After,
    /// Genie projection with the true interferer directions.
    Perfect,
    /// Combining/precoding with the true own channel.
    TrueCsi,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Before, Scheme::After, Scheme::Perfect, Scheme::TrueCsi];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Before => "before",
            Scheme::After => "after",
            Scheme::Perfect => "perfect",
            Scheme::TrueCsi => "truecsi",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "before" => Ok(Scheme::Before),
            "after" => Ok(Scheme::After),
            "perfect" => Ok(Scheme::Perfect),
            "truecsi" => Ok(Scheme::TrueCsi),
            other => Err(Error::invalid("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrSample {
    pub trial: u64,
    pub user: usize,
    pub user_kind: UserKind,
    pub direction: Direction,
    pub scheme: Scheme,
    /// Linear SINR.
    pub value: f64,
}

impl SinrSample {
    pub fn db(&self) -> f64 {
        to_db(self.value)
    }
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn eta_sq(estimate: &ChannelVector) -> Result<f64> {
    let e = estimate.norm_sqr() / estimate.len() as f64;
    if !(e > 0.0) {
        return Err(Error::ZeroEstimate);
    }
    Ok(e)
}

/// `|x^H y / M|^2`
fn normalized_gain(x: &ChannelVector, y: &ChannelVector) -> f64 {
    (x.inner(y) / x.len() as f64).norm_sqr()
}

/// Uplink SINR with MRC on `estimate`:
/// `(E_u/eta^2)|h_hat^H h_own/M|^2 / (sum_k (E_u/eta^2)|h_hat^H h_k/M|^2 + 1)`.
pub fn uplink_sinr(
    estimate: &ChannelVector,
    true_own: &ChannelVector,
    true_interferers: &[&ChannelVector],
    budget: &PowerBudget,
) -> Result<f64> {
    let m = estimate.len();
    true_own.ensure_len(m)?;
    for h in true_interferers {
        h.ensure_len(m)?;
    }
    let scale = budget.e_u / eta_sq(estimate)?;
    let signal = scale * normalized_gain(estimate, true_own);
    let interference: f64 = true_interferers
        .iter()
        .map(|h| scale * normalized_gain(estimate, h))
        .sum();
    Ok(signal / (interference + 1.0))
}

/// Downlink SINR of the user served by BS `serving` when every BS `l` precodes
/// with the conjugate of `precoders[l]`. `channels_to_user[l]` is the true
/// channel from the user to BS `l`.
pub fn downlink_sinr_uav(
    channels_to_user: &[&ChannelVector],
    precoders: &[&ChannelVector],
    serving: usize,
    budget: &PowerBudget,
) -> Result<f64> {
    if channels_to_user.len() != precoders.len() {
        return Err(Error::DimensionMismatch {
            expected: channels_to_user.len(),
            actual: precoders.len(),
        });
    }
    if serving >= precoders.len() {
        return Err(Error::invalid("serving", "index out of range"));
    }
    let m = precoders[serving].len();
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (l, (h, w)) in channels_to_user.iter().zip(precoders).enumerate() {
        h.ensure_len(m)?;
        w.ensure_len(m)?;
        let term = budget.e_d / eta_sq(w)? * normalized_gain(h, w);
        if l == serving {
            signal = term;
        } else {
            interference += term;
        }
    }
    Ok(signal / (interference + 1.0))
}

/// Downlink SINR of a ground user: `(E_d/eta^2)|h^H h_hat/M|^2`, with no
/// inter-cell term.
pub fn downlink_sinr_gue(true_own: &ChannelVector, precoder: &ChannelVector, budget: &PowerBudget) -> Result<f64> {
    true_own.ensure_len(precoder.len())?;
    Ok(budget.e_d / eta_sq(precoder)? * normalized_gain(true_own, precoder))
}

/// Cross link for the downlink UAV limit: gain `beta_li` from non-serving BS
/// `l` to the user, and that BS's estimate energy limit `eta_l^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossLink {
    pub beta: f64,
    pub eta_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AsymptoticInputs {
    /// `beta_ll`, the user's gain to its own BS.
    pub beta_own: f64,
    /// Gains of the same-pilot interferers at the serving BS.
    pub interferer_betas: Vec<f64>,
    /// Non-serving BSs (downlink UAV limit only).
    pub downlink_cross: Option<Vec<CrossLink>>,
}

/// Large-array SINR limits.
///
/// * Before, uplink: `E_u b^2/eta^2 / (sum E_u b_k^2/eta^2 + 1)`.
/// * Before, downlink UAV: `E_d b^2/eta_i^2 / (sum_l E_d b_li^2/eta_l^2 + 1)`.
/// * Before, downlink GUE: `E_d b^2/eta^2`.
/// * After / Perfect: `E b^2 / (b + 1/(tau p_p))`.
/// * TrueCsi: `E b`.
///
/// `eta^2 = b + sum(b_k) + 1/(tau p_p)`.
pub fn asymptotic_sinr(
    scheme: Scheme,
    direction: Direction,
    kind: UserKind,
    inputs: &AsymptoticInputs,
    budget: &PowerBudget,
    pilot: &PilotConfig,
) -> Result<f64> {
    let b = inputs.beta_own;
    if !(b > 0.0) {
        return Err(Error::MissingBetas("beta_own must be positive"));
    }
    if inputs.interferer_betas.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::MissingBetas("interferer betas must be positive"));
    }
    let e = match direction {
        Direction::Ul => budget.e_u,
        Direction::Dl => budget.e_d,
    };
    let noise = pilot.noise_variance();
    let eta_sq = b + inputs.interferer_betas.iter().sum::<f64>() + noise;
    Ok(match scheme {
        Scheme::TrueCsi => e * b,
        Scheme::After | Scheme::Perfect => e * b * b / (b + noise),
        Scheme::Before => match (direction, kind) {
            (Direction::Ul, _) => {
                let interference: f64 = inputs.interferer_betas.iter().map(|bk| e * bk * bk / eta_sq).sum();
                (e * b * b / eta_sq) / (interference + 1.0)
            }
            (Direction::Dl, UserKind::Gue) => e * b * b / eta_sq,
            (Direction::Dl, UserKind::Uav) => {
                let cross = inputs
                    .downlink_cross
                    .as_ref()
                    .ok_or(Error::MissingBetas("downlink UAV limit needs the non-serving BS terms"))?;
                let mut interference = 0.0;
                for c in cross {
                    if !(c.beta > 0.0) || !(c.eta_sq > 0.0) {
                        return Err(Error::MissingBetas("cross-link terms must be positive"));
                    }
                    interference += e * c.beta * c.beta / c.eta_sq;
                }
                (e * b * b / eta_sq) / (interference + 1.0)
            }
        },
    })
}

/// High-SNR limits of the equal-gain construction (all gains equal).
pub fn high_snr_limit(
    kind: UserKind,
    direction: Direction,
    scheme: Scheme,
    k: usize,
    k_u: usize,
    beta: f64,
    budget: &PowerBudget,
) -> Result<f64> {
    if k_u < 1 {
        return Err(Error::invalid("uavs", "K_u >= 1 required"));
    }
    if k_u >= k {
        return Err(Error::invalid("uavs", "K_u < K required"));
    }
    Ok(match (scheme, direction, kind) {
        (Scheme::Before, Direction::Ul, UserKind::Uav) => {
            if k_u == 1 {
                return Err(Error::InterferenceFree);
            }
            1.0 / (k_u - 1) as f64
        }
        (Scheme::Before, Direction::Ul, UserKind::Gue) => 1.0 / k_u as f64,
        (Scheme::Before, Direction::Dl, UserKind::Uav) => 1.0 / (k - 1) as f64,
        (Scheme::Before, Direction::Dl, UserKind::Gue) => budget.e_d * beta / (k_u + 1) as f64,
        (_, Direction::Ul, _) => budget.e_u * beta,
        (_, Direction::Dl, _) => budget.e_d * beta,
    })
}
