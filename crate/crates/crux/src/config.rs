use std::fmt::Display;
use std::str::FromStr;

use crux_core::sim::DEFAULT_BUCKETS;
use crux_core::{PluginKind, ReplicationPolicy, RingMode, DEFAULT_R_MIN_MS};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest supported hierarchy depth.
pub const MAX_K: u32 = 32;

/// Every parameter that influences a planning or simulation run. Written into
/// each output file so a run can be reproduced from its artifacts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub k: u32,
    pub seed: u64,
    pub r_min_ms: f64,
    #[serde(with = "text")]
    pub mode: RingMode,
    #[serde(with = "text")]
    pub policy: ReplicationPolicy,
    #[serde(with = "text")]
    pub plugin: PluginKind,
    pub o_a_ms: f64,
    pub paced: bool,
    pub ops_per_node: usize,
    pub bucket_count: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            k: 5,
            seed: 0,
            r_min_ms: DEFAULT_R_MIN_MS,
            mode: RingMode::Inclusive,
            policy: ReplicationPolicy::Symmetric,
            plugin: PluginKind::Kv,
            o_a_ms: 0.0,
            paced: false,
            ops_per_node: 10,
            bucket_count: DEFAULT_BUCKETS,
        }
    }
}

impl RunConfig {
    pub fn check(&self) -> Result<()> {
        if self.k == 0 || self.k > MAX_K {
            return Err(Error::Usage(format!(
                "k must be in 1..={MAX_K}, got {}",
                self.k
            )));
        }
        if !(self.r_min_ms.is_finite() && self.r_min_ms > 0.0) {
            return Err(Error::Usage(format!(
                "r_min must be positive, got {}",
                self.r_min_ms
            )));
        }
        if !(self.o_a_ms.is_finite() && self.o_a_ms >= 0.0) {
            return Err(Error::Usage(format!(
                "o_A must be non-negative, got {}",
                self.o_a_ms
            )));
        }
        if self.bucket_count == 0 {
            return Err(Error::Usage("bucket count must be at least 1".into()));
        }
        Ok(())
    }

    /// Single-line JSON form used in file headers.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Serde adapter for the core enums, which carry `Display`/`FromStr` but no
/// serde impls of their own.
pub(crate) mod text {
    use super::*;
    use serde::{de, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}
