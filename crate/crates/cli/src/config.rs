//! Flat `key = value` simulation configs.
//!
//! ```text
//! # model 1, weg and wnid
//! models  = 1
//! sizes   = 100, 300
//! alphas  = 0.25, 0.5, 0.75
//! a       = 0, 0.5, 1, 1.5
//! methods = weg, wnid
//! reps    = 1000
//! seed    = 7
//! ```

use std::collections::HashSet;
use std::str::FromStr;

use qrwald_core::sim::{ErrorDist, SimConfig};
use qrwald_core::{Error, GMethod, KernelSupport, LevelMode};

fn err(key: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T, Error> {
    v.trim().parse().map_err(|_| err(key, format!("cannot parse `{}`", v.trim())))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, Error> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| err(key, format!("cannot parse `{s}`"))))
        .collect()
}

pub fn parse_sim_config(text: &str) -> Result<SimConfig, Error> {
    let mut cfg = SimConfig::default();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(Error::Parse {
            line: i + 1,
            msg: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        if !seen.insert(key.to_string()) {
            return Err(err(key, "given more than once"));
        }
        match key {
            "models" => cfg.models = list(key, value)?,
            "sizes" => cfg.sample_sizes = list(key, value)?,
            "alphas" => cfg.alphas = list(key, value)?,
            "a" => cfg.a_values = list(key, value)?,
            "methods" => {
                cfg.methods = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<GMethod>().map_err(|_| err(key, format!("unknown method `{s}`"))))
                    .collect::<Result<_, _>>()?;
                let mut dedup = cfg.methods.clone();
                dedup.sort();
                dedup.dedup();
                if dedup.len() != cfg.methods.len() {
                    return Err(err(key, "duplicate method"));
                }
            }
            "reps" => cfg.replications = scalar(key, value)?,
            "seed" => cfg.base_seed = scalar(key, value)?,
            "tau" => cfg.nominal_tau = scalar(key, value)?,
            "k" => cfg.eg_config.k = scalar(key, value)?,
            "c" => cfg.eg_config.c = scalar(key, value)?,
            "m" => cfg.eg_config.m_override = Some(scalar(key, value)?),
            "h" => cfg.eg_config.h_override = Some(scalar(key, value)?),
            "a1" => cfg.eg_config.a1 = scalar(key, value)?,
            "a2" => cfg.eg_config.a2 = scalar(key, value)?,
            "level_mode" => cfg.eg_config.level_mode = value.trim().parse::<LevelMode>().map_err(|_| err(key, "expected equispaced or iid"))?,
            "level_seed" => cfg.eg_config.seed = scalar(key, value)?,
            "kernel" => cfg.eg_config.kernel = value.parse::<KernelSupport>().map_err(|_| err(key, "expected unit or half"))?,
            "error" => cfg.error_dist = value.parse::<ErrorDist>().map_err(|_| err(key, "expected normal or t3"))?,
            other => return Err(err(other, "unknown key")),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
