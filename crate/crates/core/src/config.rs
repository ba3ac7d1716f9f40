//! System parameters for the RIS-aided downlink and their file / flag layers.
//!
//! Config files are TOML. Power-like quantities carry an explicit unit tag:
//!
//! ```toml
//! gamma = { value = 0.0, unit = "db" }
//! mu = { value = 5.0, unit = "db" }
//! k1 = inf
//! ```
//!
//! A bare number is read as linear. `mu` is an amplitude ratio, so its dB
//! value converts with `10^(dB/20)`; everything else is a power and converts
//! with `10^(dB/10)`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Linear,
    Db,
}

/// A scalar with a linear/dB tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub value: f64,
    pub unit: Unit,
}

impl Level {
    pub fn linear(value: f64) -> Self {
        Self { value, unit: Unit::Linear }
    }

    pub fn db(value: f64) -> Self {
        Self { value, unit: Unit::Db }
    }

    /// Interpret as a power ratio.
    pub fn as_power(&self) -> f64 {
        match self.unit {
            Unit::Linear => self.value,
            Unit::Db => 10f64.powf(self.value / 10.0),
        }
    }

    /// Interpret as an amplitude ratio (`-inf dB` gives 0).
    pub fn as_amplitude(&self) -> f64 {
        match self.unit {
            Unit::Linear => self.value,
            Unit::Db => 10f64.powf(self.value / 20.0),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.unit {
            Unit::Linear => write!(f, "{}", self.value),
            Unit::Db => write!(f, "{}dB", self.value),
        }
    }
}

impl FromStr for Level {
    type Err = Error;

    /// Accepts `"1.5"`, `"5dB"`, `"5 db"`, `"-inf dB"`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let lower = t.to_ascii_lowercase();
        let (num, unit) = match lower.strip_suffix("db") {
            Some(rest) => (rest.trim(), Unit::Db),
            None => (lower.as_str(), Unit::Linear),
        };
        let value = parse_real(num).map_err(|_| Error::Config(format!("cannot parse level `{s}`")))?;
        Ok(Self { value, unit })
    }
}

impl<'de> Deserialize<'de> for Level {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
            Tagged { value: f64, unit: Unit },
        }
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(Level::linear(v)),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Tagged { value, unit } => Ok(Level { value, unit }),
        }
    }
}

/// Parses a real number, also accepting `inf` / `+inf` / `infinity`.
pub fn parse_real(s: &str) -> std::result::Result<f64, std::num::ParseFloatError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        other => other.parse(),
    }
}

/// LoS and scattered amplitude weights `(κ_l, κ_n)` for Rician factor `k`.
pub fn kappa(k: f64) -> (f64, f64) {
    if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (1.0 + k)).sqrt(), (1.0 / (1.0 + k)).sqrt())
    }
}

/// Which physical link a Rician factor belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    BsUser,
    BsRis,
    RisUser,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Transmit antennas.
    pub m: usize,
    /// RIS elements.
    pub n: usize,
    /// Total transmit power.
    pub ps: Level,
    /// Noise power.
    pub sigma_n_sq: Level,
    pub alpha: f64,
    /// BS–user distance.
    pub d0: f64,
    /// BS–RIS distance.
    pub d1: f64,
    /// RIS–user distance.
    pub d2: f64,
    /// Rician factor of the BS–user link.
    pub k0: f64,
    /// Rician factor of the BS–RIS link.
    pub k1: f64,
    /// Rician factor of the RIS–user link.
    pub k2: f64,
    /// Departure angle of the direct LoS path at the BS (radians).
    pub theta_bd_d: f64,
    /// Departure angle of the BS–RIS LoS path at the BS (radians).
    pub theta_bd_i: f64,
    /// Departure angle at the RIS towards the user (radians).
    pub theta_rd: f64,
    /// Arrival angle at the RIS from the BS (radians).
    pub theta_ra: f64,
    pub d_over_lambda: f64,
    pub direct_link: bool,
    /// Overrides the SNR scale derived from power, noise and geometry.
    pub gamma: Option<Level>,
    /// Overrides the direct/indirect amplitude ratio derived from geometry.
    pub mu: Option<Level>,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            m: 4,
            n: 64,
            ps: Level::linear(1.0),
            sigma_n_sq: Level::db(-100.0),
            alpha: 2.0,
            d0: 60.0,
            d1: 50.0,
            d2: 10.0,
            k0: 10.0,
            k1: 10.0,
            k2: 10.0,
            theta_bd_d: 70f64.to_radians(),
            theta_bd_i: 30f64.to_radians(),
            theta_rd: 60f64.to_radians(),
            theta_ra: 45f64.to_radians(),
            d_over_lambda: 0.5,
            direct_link: true,
            gamma: Some(Level::linear(1.0)),
            mu: Some(Level::db(5.0)),
            seed: 1,
        }
    }
}

impl SystemConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SystemConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m == 0 || self.n == 0 {
            return bad(format!("antenna and element counts must be >= 1 (m={}, n={})", self.m, self.n));
        }
        for (name, v) in [
            ("ps", self.ps.as_power()),
            ("sigma_n_sq", self.sigma_n_sq.as_power()),
            ("alpha", self.alpha),
            ("d0", self.d0),
            ("d1", self.d1),
            ("d2", self.d2),
            ("d_over_lambda", self.d_over_lambda),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        for (name, k) in [("k0", self.k0), ("k1", self.k1), ("k2", self.k2)] {
            if k.is_nan() || k < 0.0 {
                return bad(format!("{name} must be >= 0 or inf, got {k}"));
            }
        }
        for (name, t) in [
            ("theta_bd_d", self.theta_bd_d),
            ("theta_bd_i", self.theta_bd_i),
            ("theta_rd", self.theta_rd),
            ("theta_ra", self.theta_ra),
        ] {
            if !t.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if let Some(g) = self.gamma {
            let v = g.as_power();
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("gamma must be positive, got {g}"));
            }
        }
        if let Some(mu) = self.mu {
            let v = mu.as_amplitude();
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("mu must be non-negative, got {mu}"));
            }
        }
        Ok(())
    }

    /// SNR scale `Ps (d1 d2)^{-α} / σ²`, unless overridden.
    pub fn gamma(&self) -> f64 {
        match self.gamma {
            Some(g) => g.as_power(),
            None => self.ps.as_power() * (self.d1 * self.d2).powf(-self.alpha) / self.sigma_n_sq.as_power(),
        }
    }

    /// Direct-link amplitude ratio `(d0 / (d1 d2))^{-α/2}`; 0 without a direct link.
    pub fn mu(&self) -> f64 {
        if !self.direct_link {
            return 0.0;
        }
        match self.mu {
            Some(m) => m.as_amplitude(),
            None => (self.d0 / (self.d1 * self.d2)).powf(-0.5 * self.alpha),
        }
    }

    pub fn rician_factor(&self, link: Link) -> f64 {
        match link {
            Link::BsUser => self.k0,
            Link::BsRis => self.k1,
            Link::RisUser => self.k2,
        }
    }

    /// `(κ_l, κ_n)` for one link.
    pub fn kappa(&self, link: Link) -> (f64, f64) {
        kappa(self.rician_factor(link))
    }

    /// Sets all three Rician factors.
    pub fn set_rician_factor(&mut self, k: f64) {
        self.k0 = k;
        self.k1 = k;
        self.k2 = k;
    }

    /// Short content hash of the resolved configuration.
    pub fn hash_hex(&self) -> String {
        content_hash(self.to_toml_string().as_bytes())
    }
}

pub(crate) fn content_hash(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Per-field overrides, applied on top of a file or the defaults.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub ps: Option<Level>,
    pub sigma_n_sq: Option<Level>,
    pub alpha: Option<f64>,
    pub d0: Option<f64>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    /// Sets k0, k1 and k2 together; the per-link fields below win over it.
    pub k: Option<f64>,
    pub k0: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub theta_bd_d: Option<f64>,
    pub theta_bd_i: Option<f64>,
    pub theta_rd: Option<f64>,
    pub theta_ra: Option<f64>,
    pub d_over_lambda: Option<f64>,
    pub direct_link: Option<bool>,
    pub gamma: Option<Level>,
    pub mu: Option<Level>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut SystemConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = v; } )* };
        }
        if let Some(k) = self.k {
            cfg.set_rician_factor(k);
        }
        set!(m, n, ps, sigma_n_sq, alpha, d0, d1, d2, k0, k1, k2, theta_bd_d, theta_bd_i, theta_rd, theta_ra,
             d_over_lambda, direct_link, seed);
        if let Some(g) = self.gamma {
            cfg.gamma = Some(g);
        }
        if let Some(mu) = self.mu {
            cfg.mu = Some(mu);
        }
    }
}

/// Defaults, then the optional file, then the overrides.
pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> Result<SystemConfig> {
    let mut cfg = match file {
        Some(p) => SystemConfig::load(p)?,
        None => SystemConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_weights_are_unit_power() {
        for k in [0.0, 0.5, 1.0, 5.0, 10.0, 1e6] {
            let (l, n) = kappa(k);
            assert!((l * l + n * n - 1.0).abs() < 1e-12);
        }
        assert_eq!(kappa(f64::INFINITY), (1.0, 0.0));
        assert_eq!(kappa(0.0), (0.0, 1.0));
    }

    #[test]
    fn mu_db_is_an_amplitude_ratio() {
        let cfg = SystemConfig::default();
        assert!((cfg.mu() - 10f64.powf(0.25)).abs() < 1e-15);
        assert!((cfg.mu().powi(2) - 10f64.powf(0.5)).abs() < 1e-14);
        let off = SystemConfig { direct_link: false, ..SystemConfig::default() };
        assert_eq!(off.mu(), 0.0);
        assert_eq!(Level::db(f64::NEG_INFINITY).as_amplitude(), 0.0);
    }

    #[test]
    fn derived_gamma_and_mu_from_geometry() {
        let cfg = SystemConfig {
            gamma: None,
            mu: None,
            ps: Level::linear(2.0),
            sigma_n_sq: Level::linear(1e-3),
            d0: 40.0,
            d1: 20.0,
            d2: 5.0,
            alpha: 2.0,
            ..SystemConfig::default()
        };
        assert!((cfg.gamma() - 2.0 * 100f64.powi(-2) / 1e-3).abs() < 1e-12);
        assert!((cfg.mu() - (40.0f64 / 100.0).powf(-1.0)).abs() < 1e-12);
    }

    #[test]
    fn level_parsing() {
        assert_eq!("5dB".parse::<Level>().unwrap(), Level::db(5.0));
        assert_eq!(" -3 db".parse::<Level>().unwrap(), Level::db(-3.0));
        assert_eq!("1.5".parse::<Level>().unwrap(), Level::linear(1.5));
        assert!("-inf dB".parse::<Level>().unwrap().as_amplitude() == 0.0);
        assert!("five".parse::<Level>().is_err());
    }

    #[test]
    fn toml_round_trip_with_infinite_k() {
        let mut cfg = SystemConfig::default();
        cfg.set_rician_factor(f64::INFINITY);
        let text = cfg.to_toml_string();
        let back = SystemConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn file_accepts_tagged_and_bare_levels() {
        let cfg = SystemConfig::from_toml_str(
            "m = 2\nn = 8\nmu = { value = 10.0, unit = \"db\" }\ngamma = 2.0\nk1 = inf\nsigma_n_sq = \"-90 dB\"\n",
        )
        .unwrap();
        assert_eq!(cfg.m, 2);
        assert!((cfg.mu() - 10f64.powf(0.5)).abs() < 1e-14);
        assert_eq!(cfg.gamma(), 2.0);
        assert!(cfg.k1.is_infinite());
        assert!((cfg.sigma_n_sq.as_power() - 1e-9).abs() < 1e-24);
    }

    #[test]
    fn validation_rejects_bad_values() {
        assert!(SystemConfig::from_toml_str("m = 0").is_err());
        assert!(SystemConfig::from_toml_str("d1 = -1.0").is_err());
        assert!(SystemConfig::from_toml_str("k0 = -2.0").is_err());
        assert!(SystemConfig::from_toml_str("bogus = 1").is_err());
    }
}
