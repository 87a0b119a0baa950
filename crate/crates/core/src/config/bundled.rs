//! Scenario files shipped with the crate: the four fault cases for dCVOC and
//! the PLL baseline, plus a dVOC run.

use super::ScenarioConfig;
use crate::error::{Error, Result};

macro_rules! bundle {
    ($($name:literal),* $(,)?) => {
        /// Names of the bundled scenarios, in campaign order.
        pub const BUNDLED_NAMES: &[&str] = &[$($name),*];
        const TEXTS: &[&str] = &[$(include_str!(concat!("../../scenarios/", $name, ".toml"))),*];
    };
}

bundle!(
    "case11_dcvoc",
    "case12_dcvoc",
    "case21_dcvoc",
    "case22_dcvoc",
    "case11_gfl",
    "case12_gfl",
    "case21_gfl",
    "case22_gfl",
    "dvoc_duality_demo",
);

/// `(name, toml text)` pairs.
pub fn bundled() -> Vec<(&'static str, &'static str)> {
    BUNDLED_NAMES.iter().copied().zip(TEXTS.iter().copied()).collect()
}

pub fn bundled_config(name: &str) -> Result<ScenarioConfig> {
    let k = BUNDLED_NAMES
        .iter()
        .position(|n| *n == name)
        .ok_or_else(|| Error::Config(format!("no bundled scenario named {name}")))?;
    ScenarioConfig::parse(TEXTS[k])
}
