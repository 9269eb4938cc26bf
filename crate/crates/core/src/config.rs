//! Scenario parameters, their defaults, validation, and linear-unit conversion.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// All physical and protocol parameters of a scenario.
///
/// Power-like quantities are stored in the units a user writes them in
/// (dBm, dBm/Hz, dB); [`ScenarioConfig::link_budget`] converts them to
/// linear watts once, and everything downstream works in linear units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// BS antennas.
    pub m: usize,
    /// RIS elements.
    pub n: usize,
    /// Users.
    pub k: usize,
    /// Codebook size, also the number of discrete phase levels.
    pub l: usize,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub pt_dbm: f64,
    /// Rician factor (linear).
    pub beta: f64,
    /// Path loss at the 1 m reference distance.
    pub c0_db: f64,
    pub d_br: f64,
    pub alpha_br: f64,
    pub alpha_ru: f64,
    /// RIS configuration overhead as a fraction of the scheduling cycle.
    pub t_p: f64,
    /// Grouping threshold.
    pub eta: f64,
    /// Adjacent-element correlation of the RIS-side exponential model.
    pub r_corr: f64,
    /// Inner radius of the user drop annulus around the RIS, m.
    pub d_min: f64,
    /// Outer radius of the user drop annulus around the RIS, m.
    pub d_max: f64,
    /// Half-angle of the user fan sector, rad.
    pub fan_halfangle: f64,
    /// Angle of arrival at the RIS of the BS-RIS line-of-sight path, rad.
    pub aoa: f64,
    /// Angle of departure at the BS of the BS-RIS line-of-sight path, rad.
    pub aod: f64,
    /// Sub-surfaces used by the refined search.
    pub subsurfaces: usize,
    pub rs_max_passes: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            m: 32,
            n: 100,
            k: 30,
            l: 16,
            bandwidth_hz: 10e6,
            noise_psd_dbm_hz: -174.0,
            pt_dbm: 40.0,
            beta: 5.0,
            c0_db: -30.0,
            d_br: 50.0,
            alpha_br: 2.2,
            alpha_ru: 2.8,
            t_p: 0.01,
            eta: 0.65,
            r_corr: 0.9,
            d_min: 10.0,
            d_max: 12.5,
            fan_halfangle: 60f64.to_radians(),
            aoa: 0.0,
            aod: 0.0,
            subsurfaces: 5,
            rs_max_passes: 20,
            seed: 1,
        }
    }
}

/// Command-line style overrides applied on top of a loaded configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub eta: Option<f64>,
    pub t_p: Option<f64>,
    pub subsurfaces: Option<usize>,
    pub seed: Option<u64>,
}

/// Linear-unit view of the power-related parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget<T> {
    /// Total transmit power, W.
    pub pt_w: T,
    /// Noise power spectral density, W/Hz.
    pub noise_psd_w_hz: T,
    /// `B * noise_psd`, W.
    pub noise_power_w: T,
    pub bandwidth_hz: T,
    /// Linear reference path loss.
    pub c0: T,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

impl ScenarioConfig {
    /// Reads a TOML file; absent fields take their defaults.
    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = toml::from_str(&text)
            .map_err(|e| Error::ConfigParse { path: path.to_path_buf(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.n {
            self.n = v;
        }
        if let Some(v) = o.k {
            self.k = v;
        }
        if let Some(v) = o.l {
            self.l = v;
        }
        if let Some(v) = o.eta {
            self.eta = v;
        }
        if let Some(v) = o.t_p {
            self.t_p = v;
        }
        if let Some(v) = o.subsurfaces {
            self.subsurfaces = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("m", self.m), ("n", self.n), ("k", self.k), ("l", self.l), ("subsurfaces", self.subsurfaces)] {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if !self.n.is_multiple_of(self.subsurfaces) {
            return Err(Error::config(
                "subsurfaces",
                format!("{} does not divide the RIS element count {}", self.subsurfaces, self.n),
            ));
        }
        if self.rs_max_passes == 0 {
            return Err(Error::config("rs_max_passes", "must be at least 1"));
        }
        let finite = [
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_psd_dbm_hz", self.noise_psd_dbm_hz),
            ("pt_dbm", self.pt_dbm),
            ("beta", self.beta),
            ("c0_db", self.c0_db),
            ("d_br", self.d_br),
            ("alpha_br", self.alpha_br),
            ("alpha_ru", self.alpha_ru),
            ("t_p", self.t_p),
            ("eta", self.eta),
            ("r_corr", self.r_corr),
            ("d_min", self.d_min),
            ("d_max", self.d_max),
            ("fan_halfangle", self.fan_halfangle),
            ("aoa", self.aoa),
            ("aod", self.aod),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(Error::config(field, "must be finite"));
            }
        }
        if self.bandwidth_hz <= 0.0 {
            return Err(Error::config("bandwidth_hz", "must be positive"));
        }
        if self.beta < 0.0 {
            return Err(Error::config("beta", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.t_p) {
            return Err(Error::config("t_p", "must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::config("eta", "must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.r_corr) {
            return Err(Error::config("r_corr", "must lie in [0, 1)"));
        }
        if self.d_br <= 0.0 {
            return Err(Error::config("d_br", "must be positive"));
        }
        if self.d_min <= 0.0 {
            return Err(Error::config("d_min", "must be positive"));
        }
        if self.d_max < self.d_min {
            return Err(Error::config("d_max", "must be at least d_min"));
        }
        if self.fan_halfangle < 0.0 {
            return Err(Error::config("fan_halfangle", "must be non-negative"));
        }
        Ok(())
    }

    pub fn link_budget<T: Real>(&self) -> LinkBudget<T> {
        let psd = dbm_to_watts(self.noise_psd_dbm_hz);
        LinkBudget {
            pt_w: T::lit(dbm_to_watts(self.pt_dbm)),
            noise_psd_w_hz: T::lit(psd),
            noise_power_w: T::lit(psd * self.bandwidth_hz),
            bandwidth_hz: T::lit(self.bandwidth_hz),
            c0: T::lit(db_to_linear(self.c0_db)),
        }
    }
}
