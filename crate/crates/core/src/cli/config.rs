//! Optional TOML run configuration. Every key mirrors a command-line flag;
//! flags take precedence.
//!
//! ```toml
//! [channel]
//! x = 1.0        # distance, m
//! d = 0.1        # diffusivity, m^2/s
//! v = 0.0        # drift, m/s
//! m = 1.0        # molecules per emission
//!
//! [sampling]
//! t0 = 2.5       # window start after emission, s
//! tau = 7.5      # delay spread, s
//! n = 1.0        # window multiplier
//!
//! [walk]
//! dt = 0.001     # step, s
//! walkers = 100000
//! seed = 42
//! workers = 4
//! horizon = 10.0 # s
//! ```

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub walk: WalkSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub x: Option<f64>,
    pub d: Option<f64>,
    pub v: Option<f64>,
    pub m: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub t0: Option<f64>,
    pub tau: Option<f64>,
    pub n: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSection {
    pub dt: Option<f64>,
    pub walkers: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub horizon: Option<f64>,
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| {
            let prefix = &text.as_bytes()[..s.start.min(text.len())];
            prefix.iter().filter(|&&b| b == b'\n').count() + 1
        });
        Error::parse(line, e.message().to_string())
    })
}
