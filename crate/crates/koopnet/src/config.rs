//! Run configuration: a flat `key = value` file with `#` comments and
//! dotted keys. Unknown keys are rejected; every key has a documented
//! default except the data paths. A fully resolved copy of the effective
//! configuration is echoed into every output directory so a run can be
//! reconstructed from its outputs alone.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::koopman::{KConstraint, LossWeights, ModelArch, OuterKind, TrainConfig};
use crate::nn::adam::AdamConfig;
use crate::pde::{IcRanges, Mix, PdeKind};

/// Every recognized key with its default (None = no default, optional key).
const KNOWN_KEYS: &[(&str, Option<&str>)] = &[
    ("pde.kind", Some("heat")),
    ("pde.epsilon", Some("10")),
    ("pde.mu", Some("1")),
    ("grid.n", Some("128")),
    ("data.count", Some("1000")),
    ("data.t_steps", Some("50")),
    ("data.dt", Some("0.0025")),
    ("data.mix", Some("1")),
    ("data.seed", Some("0")),
    ("data.substeps", Some("0")),
    ("ic.sigma", Some("0.5")),
    ("ic.geometric_p", Some("0.25")),
    ("ic.omega_max", Some("10")),
    ("ic.sine.amplitude", Some("0,1")),
    ("ic.square.height", Some("0.2,1")),
    ("ic.square.width", Some("0.5,0.25")),
    ("ic.gaussian.amplitude", Some("0.2,1")),
    ("ic.gaussian.width", Some("0.03125,0.125")),
    ("ic.triangle.amplitude", Some("0.2,1")),
    ("ic.triangle.half_width", Some("0.0625,0.25")),
    ("arch.outer", Some("none")),
    ("arch.r", Some("21")),
    ("arch.k", Some("full")),
    ("arch.residual", Some("true")),
    ("loss.w1", Some("1")),
    ("loss.w2", Some("1")),
    ("loss.w3", Some("1")),
    ("loss.w4", Some("1")),
    ("loss.w5", Some("1")),
    ("loss.l2", Some("1e-8")),
    ("loss.horizon", Some("0")),
    ("loss.k_stride", Some("1")),
    ("opt.lr", Some("0.001")),
    ("opt.batch", Some("128")),
    ("opt.epochs", Some("10")),
    ("opt.seed", Some("0")),
    ("opt.patience", Some("0")),
    ("paths.train", None),
    ("paths.val", None),
    ("paths.test", None),
];

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.split_once('#') {
                Some((before, _)) => before,
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value, got {raw:?}", lineno + 1))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.iter().any(|(k, _)| *k == key) {
                return Err(Error::Config(format!("line {}: unknown key {key:?}", lineno + 1)));
            }
            if values.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {key:?}", lineno + 1)));
            }
        }
        Ok(RunConfig { values })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    /// Override a key programmatically (used by CLI flags like --seed).
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KNOWN_KEYS.iter().any(|(k, _)| *k == key) {
            return Err(Error::Config(format!("unknown key {key:?}")));
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&str> {
        if let Some(v) = self.values.get(key) {
            return Some(v);
        }
        KNOWN_KEYS
            .iter()
            .find(|(k, _)| *k == key)
            .and_then(|(_, d)| *d)
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.raw(key)
            .ok_or_else(|| Error::Config(format!("missing required key {key}")))
    }

    fn get_f64(&self, key: &str) -> Result<f64> {
        let v = self.required(key)?;
        v.parse()
            .map_err(|_| Error::Config(format!("{key}: not a number: {v:?}")))
    }

    fn get_usize(&self, key: &str) -> Result<usize> {
        let v = self.required(key)?;
        v.parse()
            .map_err(|_| Error::Config(format!("{key}: not an integer: {v:?}")))
    }

    fn get_u64(&self, key: &str) -> Result<u64> {
        let v = self.required(key)?;
        v.parse()
            .map_err(|_| Error::Config(format!("{key}: not an integer: {v:?}")))
    }

    fn get_bool(&self, key: &str) -> Result<bool> {
        let v = self.required(key)?;
        v.parse()
            .map_err(|_| Error::Config(format!("{key}: not a boolean: {v:?}")))
    }

    fn get_pair(&self, key: &str) -> Result<(f64, f64)> {
        let v = self.required(key)?;
        let (a, b) = v
            .split_once(',')
            .ok_or_else(|| Error::Config(format!("{key}: expected min,max, got {v:?}")))?;
        let lo = a
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{key}: bad number {a:?}")))?;
        let hi = b
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{key}: bad number {b:?}")))?;
        Ok((lo, hi))
    }

    pub fn pde(&self) -> Result<PdeKind> {
        match self.required("pde.kind")? {
            "heat" => Ok(PdeKind::Heat),
            "burgers" => Ok(PdeKind::Burgers {
                epsilon: self.get_f64("pde.epsilon")?,
                mu: self.get_f64("pde.mu")?,
            }),
            "ks" => Ok(PdeKind::Ks),
            other => Err(Error::Config(format!(
                "pde.kind: expected heat, burgers, or ks, got {other:?}"
            ))),
        }
    }

    pub fn grid_n(&self) -> Result<usize> {
        self.get_usize("grid.n")
    }

    pub fn data_count(&self) -> Result<usize> {
        self.get_usize("data.count")
    }

    pub fn data_t_steps(&self) -> Result<usize> {
        self.get_usize("data.t_steps")
    }

    pub fn data_dt(&self) -> Result<f64> {
        self.get_f64("data.dt")
    }

    pub fn data_mix(&self) -> Result<Mix> {
        Mix::parse(self.required("data.mix")?)
    }

    pub fn data_seed(&self) -> Result<u64> {
        self.get_u64("data.seed")
    }

    pub fn data_substeps(&self) -> Result<usize> {
        self.get_usize("data.substeps")
    }

    pub fn ic_ranges(&self) -> Result<IcRanges> {
        Ok(IcRanges {
            sigma: self.get_f64("ic.sigma")?,
            geometric_p: self.get_f64("ic.geometric_p")?,
            omega_max: self.get_usize("ic.omega_max")?,
            sine_amplitude: self.get_pair("ic.sine.amplitude")?,
            square_height: self.get_pair("ic.square.height")?,
            square_width: self.get_pair("ic.square.width")?,
            gaussian_amplitude: self.get_pair("ic.gaussian.amplitude")?,
            gaussian_width: self.get_pair("ic.gaussian.width")?,
            triangle_amplitude: self.get_pair("ic.triangle.amplitude")?,
            triangle_half_width: self.get_pair("ic.triangle.half_width")?,
        })
    }

    pub fn arch(&self) -> Result<ModelArch> {
        Ok(ModelArch {
            n: self.grid_n()?,
            r: self.get_usize("arch.r")?,
            outer: OuterKind::parse(self.required("arch.outer")?)?,
            k_constraint: KConstraint::parse(self.required("arch.k")?)?,
            residual: self.get_bool("arch.residual")?,
        })
    }

    pub fn loss_weights(&self) -> Result<LossWeights> {
        Ok(LossWeights {
            w: [
                self.get_f64("loss.w1")?,
                self.get_f64("loss.w2")?,
                self.get_f64("loss.w3")?,
                self.get_f64("loss.w4")?,
                self.get_f64("loss.w5")?,
            ],
            l2: self.get_f64("loss.l2")?,
            horizon: self.get_usize("loss.horizon")?,
            k_stride: self.get_usize("loss.k_stride")?,
        })
    }

    pub fn train_config(&self, threads: usize) -> Result<TrainConfig> {
        let patience = self.get_usize("opt.patience")?;
        Ok(TrainConfig {
            weights: self.loss_weights()?,
            adam: AdamConfig {
                learning_rate: self.get_f64("opt.lr")?,
                ..AdamConfig::default()
            },
            epochs: self.get_usize("opt.epochs")?,
            batch_size: self.get_usize("opt.batch")?,
            seed: self.get_u64("opt.seed")?,
            threads,
            patience: if patience == 0 { None } else { Some(patience) },
        })
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        Ok(PathBuf::from(self.required(key)?))
    }

    pub fn has(&self, key: &str) -> bool {
        self.raw(key).is_some()
    }

    /// The effective configuration: every known key with its resolved value,
    /// sorted, one per line. Optional keys appear only when set.
    pub fn resolved(&self) -> String {
        let mut out = String::new();
        for (key, _) in KNOWN_KEYS {
            if let Some(v) = self.raw(key) {
                out.push_str(&format!("{key} = {v}\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_values_comments_and_defaults() {
        let cfg = RunConfig::parse(
            "# a comment\n\
             pde.kind = burgers\n\
             pde.epsilon = 10 # inline comment\n\
             arch.r = 16\n",
        )
        .unwrap();
        assert_eq!(cfg.pde().unwrap(), PdeKind::Burgers { epsilon: 10.0, mu: 1.0 });
        assert_eq!(cfg.arch().unwrap().r, 16);
        // defaults
        assert_eq!(cfg.grid_n().unwrap(), 128);
        assert_eq!(cfg.data_dt().unwrap(), 0.0025);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(RunConfig::parse("no.such.key = 1\n").is_err());
        assert!(RunConfig::parse("arch.r = 2\narch.r = 3\n").is_err());
        assert!(RunConfig::parse("just some words\n").is_err());
    }

    #[test]
    fn resolved_echo_is_stable_and_complete() {
        let cfg = RunConfig::parse("arch.r = 5\n").unwrap();
        let echo = cfg.resolved();
        assert!(echo.contains("arch.r = 5"));
        assert!(echo.contains("pde.kind = heat"));
        assert!(!echo.contains("paths.train"));
        // reparsing the echo reproduces the same resolution
        let again = RunConfig::parse(&echo).unwrap();
        assert_eq!(again.resolved(), echo);
    }

    #[test]
    fn pair_parsing() {
        let cfg = RunConfig::parse("ic.square.height = 0.3, 0.9\n").unwrap();
        assert_eq!(cfg.ic_ranges().unwrap().square_height, (0.3, 0.9));
    }
}
