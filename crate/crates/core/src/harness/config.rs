//! Scenario configuration (TOML) and the physical-to-normalised link budget.

use serde::{Deserialize, Serialize};

use crate::channel::{ArrayGeometry, PathLossModel, SPEED_OF_LIGHT};
use crate::detector::{AngularGrid, DetectorConfig};
use crate::linklevel::{PowerBudget, Scheme};
use crate::pdc::MatchTolerance;
use crate::topology::HeightProfile;
use crate::training::PilotConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub cell_radius: f64,
    pub reuse_factor: usize,
    /// Co-pilot cells `K`, one user each.
    pub cells: usize,
    /// UAV users `K_u`; the remaining cells serve ground users.
    pub uavs: usize,
    pub bs_height: f64,
    pub uav_height_min: f64,
    pub uav_height_max: f64,
    pub gue_height: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        let h = HeightProfile::default();
        Self {
            cell_radius: 500.0,
            reuse_factor: 7,
            cells: 9,
            uavs: 3,
            bs_height: h.bs,
            uav_height_min: h.uav_min,
            uav_height_max: h.uav_max,
            gue_height: h.gue,
        }
    }
}

impl LayoutConfig {
    pub fn heights(&self) -> HeightProfile {
        HeightProfile {
            bs: self.bs_height,
            uav_min: self.uav_height_min,
            uav_max: self.uav_height_max,
            gue: self.gue_height,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub antennas: usize,
    pub carrier_hz: f64,
    /// UCA radius in metres; half-wavelength element spacing when absent.
    pub radius: Option<f64>,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            antennas: 128,
            carrier_hz: 2e9,
            radius: None,
        }
    }
}

impl ArrayConfig {
    pub fn geometry(&self) -> Result<ArrayGeometry> {
        if !(self.carrier_hz > 0.0) {
            return Err(Error::invalid("carrier_hz", "must be positive"));
        }
        let wavelength = SPEED_OF_LIGHT / self.carrier_hz;
        match self.radius {
            Some(r) => ArrayGeometry::new(self.antennas, r, wavelength),
            None => ArrayGeometry::half_wavelength(self.antennas, wavelength),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerConfig {
    pub user_dbm: f64,
    pub bs_dbm: f64,
    pub noise_density_dbm_hz: f64,
    pub bandwidth_hz: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            user_dbm: 23.0,
            bs_dbm: 46.0,
            noise_density_dbm_hz: -164.0,
            bandwidth_hz: 10e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PilotSection {
    /// Pilot length `tau`; defaults to the number of co-pilot cells.
    pub length: Option<usize>,
    /// Pilot symbol power; defaults to the user transmit power.
    pub power_dbm: Option<f64>,
    /// Overrides `tau p_p` (noise-normalised, linear) when set.
    pub processing_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub kappa: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Defaults to `2 K`.
    pub max_iterations: Option<usize>,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            kappa: 3.0,
            n_theta: 64,
            n_phi: 256,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdcSection {
    pub epsilon_rel: f64,
    /// Probability that a block-1 interferer still shares the pilot in the
    /// second training block.
    pub persistence: f64,
}

impl Default for PdcSection {
    fn default() -> Self {
        Self {
            epsilon_rel: 0.15,
            persistence: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterferenceSection {
    /// Ground users contaminate other cells' pilots and uplink data.
    pub gue_pilot: bool,
    /// Non-serving BSs interfere with ground users in the downlink.
    pub dl_gue: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub trials: u64,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    pub layout: LayoutConfig,
    pub array: ArrayConfig,
    pub power: PowerConfig,
    pub pilot: PilotSection,
    pub pathloss: PathLossModel,
    pub detector: DetectorSection,
    pub pdc: PdcSection,
    pub interference: InterferenceSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            trials: 10_000,
            seed: 1,
            schemes: Scheme::ALL.to_vec(),
            workers: 0,
            layout: LayoutConfig::default(),
            array: ArrayConfig::default(),
            power: PowerConfig::default(),
            pilot: PilotSection::default(),
            pathloss: PathLossModel::default(),
            detector: DetectorSection::default(),
            pdc: PdcSection::default(),
            interference: InterferenceSection::default(),
        }
    }
}

/// Noise-normalised link budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Noise power over the band, watts.
    pub noise_w: f64,
    pub power: PowerBudget,
    pub pilot: PilotConfig,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serialisable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::invalid("trials", "must be >= 1"));
        }
        if self.schemes.is_empty() {
            return Err(Error::invalid("schemes", "at least one scheme is required"));
        }
        let l = &self.layout;
        if !(l.cell_radius > 0.0) {
            return Err(Error::invalid("cell_radius", "must be positive"));
        }
        if l.cells < 2 || l.uavs < 1 || l.uavs >= l.cells {
            return Err(Error::invalid("uavs", "need 1 <= uavs < cells"));
        }
        l.heights().validate()?;
        self.array.geometry()?;
        let p = &self.power;
        for (name, v) in [
            ("user_dbm", p.user_dbm),
            ("bs_dbm", p.bs_dbm),
            ("noise_density_dbm_hz", p.noise_density_dbm_hz),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if !(p.bandwidth_hz > 0.0) || !p.bandwidth_hz.is_finite() {
            return Err(Error::invalid("bandwidth_hz", "must be positive"));
        }
        self.pathloss.validate()?;
        self.detector_config()?;
        AngularGrid::new(self.detector.n_theta, self.detector.n_phi)?;
        MatchTolerance::new(self.pdc.epsilon_rel)?;
        if !(0.0..=1.0).contains(&self.pdc.persistence) {
            return Err(Error::invalid("persistence", "must lie in [0, 1]"));
        }
        self.link_budget()?;
        Ok(())
    }

    pub fn detector_config(&self) -> Result<DetectorConfig> {
        let cap = self.detector.max_iterations.unwrap_or(2 * self.layout.cells);
        DetectorConfig::new(self.detector.kappa, cap)
    }

    pub fn grid(&self) -> Result<AngularGrid> {
        AngularGrid::new(self.detector.n_theta, self.detector.n_phi)
    }

    pub fn tolerance(&self) -> Result<MatchTolerance> {
        MatchTolerance::new(self.pdc.epsilon_rel)
    }

    pub fn link_budget(&self) -> Result<LinkBudget> {
        link_budget_normalize(self)
    }
}

/// Maps physical powers to the noise-normalised model: `E_u = M P_u / N`,
/// `E_d = M P_bs / N`, `p_p = P_pilot / N`, so that large-scale gains enter
/// as raw path-loss values.
pub fn link_budget_normalize(cfg: &ScenarioConfig) -> Result<LinkBudget> {
    let p = &cfg.power;
    let noise_w = dbm_to_watts(p.noise_density_dbm_hz) * p.bandwidth_hz;
    let m = cfg.array.antennas as f64;
    let power = PowerBudget::new(
        m * dbm_to_watts(p.user_dbm) / noise_w,
        m * dbm_to_watts(p.bs_dbm) / noise_w,
    )?;
    let pilot = match cfg.pilot.processing_gain {
        Some(g) => PilotConfig::from_processing_gain(g)?,
        None => {
            let tau = cfg.pilot.length.unwrap_or(cfg.layout.cells);
            let pp = dbm_to_watts(cfg.pilot.power_dbm.unwrap_or(p.user_dbm)) / noise_w;
            PilotConfig::new(tau, pp)?
        }
    };
    Ok(LinkBudget { noise_w, power, pilot })
}

/// Parses a comma-separated scheme list such as `before,after,truecsi`.
/// Duplicates are dropped; order is preserved.
pub fn parse_schemes(list: &str) -> Result<Vec<Scheme>> {
    let mut out = Vec::new();
    for item in list.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let s: Scheme = item.parse()?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    if out.is_empty() {
        return Err(Error::invalid("schemes", "empty scheme list"));
    }
    Ok(out)
}
