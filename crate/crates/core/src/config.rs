//! Environment configuration file.
//!
//! A versioned TOML key-value document. Every key is optional; missing keys
//! take the nominal values (50×50 arena, 45 trunks, LiDAR range 5, ...).
//!
//! ```toml
//! version = 1
//! h = 50
//! w = 50
//! n_t = 45
//! r_range = [1.0, 3.0]
//! l = 5.0
//! rho_star = 0.98
//! n_s_star = 2500
//! k = 7
//! beta = 0.5
//! r_exp = 100.0
//! r_sigma = -5.0
//! seed = 0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub version: u32,
    /// Map height in cells.
    #[serde(rename = "h")]
    pub height: usize,
    /// Map width in cells.
    #[serde(rename = "w")]
    pub width: usize,
    /// Number of trunks.
    #[serde(rename = "n_t")]
    pub trunks: usize,
    /// Trunk radius range `[r_min, r_max]` in cells.
    #[serde(rename = "r_range")]
    pub radius_range: [f64; 2],
    /// LiDAR range in cells.
    #[serde(rename = "l")]
    pub lidar_range: f64,
    #[serde(rename = "n_rays")]
    pub lidar_rays: usize,
    /// Coverage threshold that ends an episode.
    #[serde(rename = "rho_star")]
    pub coverage_threshold: f64,
    /// Step budget that ends an episode.
    #[serde(rename = "n_s_star")]
    pub max_steps: usize,
    /// Side length of the local feature / information gain window.
    #[serde(rename = "k")]
    pub window: usize,
    /// Distance vs. gain trade-off in the frontier potential.
    pub beta: f64,
    pub r_exp: f64,
    pub r_sigma: f64,
    pub seed: u64,
    /// Keep only the nearest N frontier nodes in the observation graph.
    pub max_frontier_nodes: Option<usize>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            height: 50,
            width: 50,
            trunks: 45,
            radius_range: [1.0, 3.0],
            lidar_range: 5.0,
            lidar_rays: 360,
            coverage_threshold: 0.98,
            max_steps: 2500,
            window: 7,
            beta: 0.5,
            r_exp: 100.0,
            r_sigma: -5.0,
            seed: 0,
            max_frontier_nodes: None,
        }
    }
}

impl EnvConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Returns a copy with the keys of a JSON object applied on top.
    /// Unknown keys are ignored.
    pub fn with_overrides(&self, overrides: &serde_json::Value) -> Result<Self, ConfigError> {
        let serde_json::Value::Object(patch) = overrides else {
            return Err(ConfigError::Invalid("overrides must be an object".into()));
        };
        let mut base = serde_json::to_value(self).expect("config serializes");
        let fields = base.as_object_mut().expect("config is an object");
        for (key, value) in patch {
            if fields.contains_key(key) {
                fields.insert(key.clone(), value.clone());
            }
        }
        let config: Self =
            serde_json::from_value(base).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::Version(self.version));
        }
        if self.height < 8 || self.width < 8 {
            return invalid(format!(
                "map must be at least 8x8, got {}x{}",
                self.height, self.width
            ));
        }
        let [r_min, r_max] = self.radius_range;
        if !(r_min > 0.0 && r_min <= r_max && r_max.is_finite()) {
            return invalid(format!("bad radius range [{r_min}, {r_max}]"));
        }
        if !(self.lidar_range > 0.0 && self.lidar_range.is_finite()) {
            return invalid(format!("lidar range must be positive, got {}", self.lidar_range));
        }
        if self.lidar_rays < 4 {
            return invalid(format!("need at least 4 rays, got {}", self.lidar_rays));
        }
        if self.window == 0 || self.window % 2 == 0 {
            return invalid(format!("window k must be odd, got {}", self.window));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return invalid(format!("beta must be non-negative, got {}", self.beta));
        }
        if !(0.0..=1.0).contains(&self.coverage_threshold) {
            return invalid(format!("rho_star out of [0,1]: {}", self.coverage_threshold));
        }
        Ok(())
    }
}
