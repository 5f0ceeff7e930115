//! Experiment configuration from `key = value` lines.

use std::path::PathBuf;

use crate::error::{LabError, Result};

/// Every setting is optional; commands fill the gaps with their own
/// defaults.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentConfig {
    pub resolution: Option<usize>,
    pub alpha: Option<f64>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub lambda: Option<f64>,
    pub r: Option<f64>,
    pub d: Option<usize>,
    pub direction_set: Option<usize>,
    pub params: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(LabError::Config(format!("{key} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| LabError::Config(format!("line {}: expected key = value", no + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let float = || -> Result<f64> {
                let v = value.parse().map_err(|_| LabError::Config(format!("line {}: {key} = {value:?} is not a number", no + 1)))?;
                positive(key, v)
            };
            let count = || -> Result<usize> {
                value.parse().map_err(|_| LabError::Config(format!("line {}: {key} = {value:?} is not a whole number", no + 1)))
            };
            match key {
                "resolution" => cfg.resolution = Some(count()?),
                "alpha" => cfg.alpha = Some(float()?),
                "dt" => cfg.dt = Some(float()?),
                "t_final" => cfg.t_final = Some(float()?),
                "lambda" => cfg.lambda = Some(float()?),
                "r" => cfg.r = Some(float()?),
                "d" => cfg.d = Some(count()?),
                "direction_set" => cfg.direction_set = Some(count()?),
                "params" => cfg.params = Some(PathBuf::from(value)),
                "output_dir" => cfg.output_dir = Some(PathBuf::from(value)),
                "seed" => {
                    cfg.seed = Some(value.parse().map_err(|_| LabError::Config(format!("line {}: bad seed {value:?}", no + 1)))?)
                }
                other => return Err(LabError::Config(format!("line {}: unknown key {other:?}", no + 1))),
            }
        }
        if cfg.resolution == Some(0) || cfg.d == Some(0) {
            return Err(LabError::Config("resolution and d must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Output directory: `EAF_OUTPUT_DIR` wins over the file, the fallback
    /// is `alphalab-out`.
    pub fn output_dir(&self) -> PathBuf {
        self.output_dir_with(std::env::var_os("EAF_OUTPUT_DIR").map(PathBuf::from))
    }

    fn output_dir_with(&self, env: Option<PathBuf>) -> PathBuf {
        env.filter(|p| !p.as_os_str().is_empty())
            .or_else(|| self.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("alphalab-out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text = "resolution = 64\nalpha = 0.1 # filter\ndt=1e-3\nt_final = 1\nlambda = 8\nr = 0.5\nd = 2\n\
                    direction_set = 1\nparams = p.cfg\noutput_dir = out\nseed = 42\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.resolution, Some(64));
        assert_eq!(c.dt, Some(1e-3));
        assert_eq!(c.direction_set, Some(1));
        assert_eq!(c.params, Some(PathBuf::from("p.cfg")));
        assert_eq!(c.seed, Some(42));
    }

    #[test]
    fn rejects_unknown_and_nonpositive() {
        assert!(matches!(ExperimentConfig::parse("viscosity = 1"), Err(LabError::Config(_))));
        assert!(ExperimentConfig::parse("alpha = -0.1").is_err());
        assert!(ExperimentConfig::parse("dt = 0").is_err());
        assert!(ExperimentConfig::parse("resolution = 0").is_err());
        assert!(ExperimentConfig::parse("lambda").is_err());
        assert!(ExperimentConfig::parse("r = nan").is_err());
    }

    #[test]
    fn environment_overrides_output() {
        let c = ExperimentConfig::parse("output_dir = from_file").unwrap();
        assert_eq!(c.output_dir_with(None), PathBuf::from("from_file"));
        assert_eq!(c.output_dir_with(Some("env".into())), PathBuf::from("env"));
        assert_eq!(ExperimentConfig::default().output_dir_with(None), PathBuf::from("alphalab-out"));
    }
}
