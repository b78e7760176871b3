//! Experiment configuration: flat `key=value` pairs over per-experiment
//! defaults, from an optional file and the command line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SSBSQ_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    DopoSpectrum,
    DopoOrientation,
    DopoFixedLo,
    DopoSeeded,
    FwmRegion,
    SpatialDiffusion,
    JcmVariance,
    ModesCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::DopoSpectrum,
        Experiment::DopoOrientation,
        Experiment::DopoFixedLo,
        Experiment::DopoSeeded,
        Experiment::FwmRegion,
        Experiment::SpatialDiffusion,
        Experiment::JcmVariance,
        Experiment::ModesCheck,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::DopoSpectrum => "dopo-spectrum",
            Experiment::DopoOrientation => "dopo-orientation",
            Experiment::DopoFixedLo => "dopo-fixed-lo",
            Experiment::DopoSeeded => "dopo-seeded",
            Experiment::FwmRegion => "fwm-region",
            Experiment::SpatialDiffusion => "spatial-diffusion",
            Experiment::JcmVariance => "jcm-variance",
            Experiment::ModesCheck => "modes-check",
        }
    }

    pub fn parse(id: &str) -> Result<Self, CliError> {
        Self::ALL.into_iter().find(|e| e.id() == id).ok_or_else(|| {
            let known: Vec<_> = Self::ALL.iter().map(|e| e.id()).collect();
            CliError::Config(format!(
                "unknown experiment `{id}` (known: {})",
                known.join(", ")
            ))
        })
    }

    pub fn summary(self) -> &'static str {
        match self {
            Experiment::DopoSpectrum => {
                "co-rotating dark-mode squeezing spectrum of the two-mode DOPO"
            }
            Experiment::DopoOrientation => "orientation variance growth of the two-mode DOPO",
            Experiment::DopoFixedLo => {
                "fixed local oscillator: best noise frequency and level vs LO phase"
            }
            Experiment::DopoSeeded => {
                "seeded DOPO: steady-state branches and zero-frequency squeezing"
            }
            Experiment::FwmRegion => "four-wave-mixing existence region, closed form vs numeric",
            Experiment::SpatialDiffusion => "1D spatial DOPO: pattern position diffusion vs theory",
            Experiment::JcmVariance => {
                "single-pair Jaynes-Cummings variances, closed form vs matrix"
            }
            Experiment::ModesCheck => "transverse mode identities on a sampled grid",
        }
    }

    /// Every accepted key with its default value.
    pub fn defaults(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Experiment::DopoSpectrum => &[
                ("sigma", "1.4142135623730951"),
                ("d", "1e-6"),
                ("gamma_p", "1"),
                ("gamma_s", "1"),
                ("n_traj", "2000"),
                ("dt", "0.02"),
                ("t_end", "210"),
                ("stride", "5"),
                ("t_transient", "10"),
                ("segment", "40"),
                ("omegas", "0,0.5,1,2,4"),
                ("theta0", "0.3"),
            ],
            Experiment::DopoOrientation => &[
                ("sigma", "2"),
                ("d", "1e-6"),
                ("gamma_p", "1"),
                ("gamma_s", "1"),
                ("n_traj", "2000"),
                ("dt", "0.02"),
                ("t_end", "300"),
                ("stride", "10"),
                ("t_fit", "10"),
                ("theta0", "0.3"),
            ],
            Experiment::DopoFixedLo => &[
                ("sigma", "1.4142135623730951"),
                ("d", "1e-6"),
                ("gamma_s", "1"),
                ("t_det", "0"),
                ("phi_min", "60"),
                ("phi_max", "120"),
                ("n_phi", "25"),
                ("omega_max", "10"),
            ],
            Experiment::DopoSeeded => &[
                ("sigma", "1.5"),
                ("is_min", "1e-4"),
                ("is_max", "1"),
                ("n_is", "41"),
                ("gamma_s", "1"),
            ],
            Experiment::FwmRegion => &[
                ("delta_min", "0"),
                ("delta_max", "4.75"),
                ("n_delta", "20"),
                ("rho2_min", "0"),
                ("rho2_max", "1.9"),
                ("n_rho2", "20"),
                ("g", "1"),
                ("gamma_s", "1"),
            ],
            Experiment::SpatialDiffusion => &[
                ("chi", "10"),
                ("gain", "1.1"),
                ("gamma_p", "100"),
                ("gamma_s", "1"),
                ("delta_p", "1e5"),
                ("delta_s", "-1"),
                ("l_s", "1"),
                ("n_grid", "64"),
                ("n_traj", "500"),
                ("dt", "0.02"),
                ("t_end", "200"),
                ("stride", "10"),
                ("t_fit", "10"),
            ],
            Experiment::JcmVariance => &[
                ("N", "0..20"),
                ("chi", "1"),
                ("n_t", "32"),
                ("t_max", "3.141592653589793"),
                ("phi", "0"),
                ("phi0", "0"),
            ],
            Experiment::ModesCheck => &[
                ("w_s", "1"),
                ("half_width", "4"),
                ("n_grid", "241"),
                ("n_psi", "8"),
                ("eps", "1e-4"),
            ],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// A fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub values: BTreeMap<String, String>,
    pub seed: u64,
    pub out: PathBuf,
}

/// Splits `key=value`, trimming whitespace around both.
fn split_pair(pair: &str) -> Result<(String, String), CliError> {
    let (k, v) = pair
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("expected key=value, got `{pair}`")))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() {
        return Err(CliError::Config(format!("empty key or value in `{pair}`")));
    }
    Ok((k.to_string(), v.to_string()))
}

/// Pairs from a config file: one per line, `#` comments and blank lines ignored.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read config file {}: {e}", path.display()))
    })?;
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(split_pair)
        .collect()
}

impl ExperimentConfig {
    /// Defaults, then file pairs, then command-line pairs; unknown keys are
    /// rejected wherever they appear.
    pub fn resolve(
        experiment: Experiment,
        file_pairs: &[(String, String)],
        overrides: &[String],
        seed: u64,
        out: Option<PathBuf>,
    ) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> = experiment
            .defaults()
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let cli_pairs = overrides
            .iter()
            .map(|s| split_pair(s))
            .collect::<Result<Vec<_>, _>>()?;
        for (k, v) in file_pairs.iter().cloned().chain(cli_pairs) {
            match values.get_mut(&k) {
                Some(slot) => *slot = v,
                None => {
                    let known: Vec<_> = experiment.defaults().iter().map(|(k, _)| *k).collect();
                    return Err(CliError::Config(format!(
                        "unknown key `{k}` for {experiment} (accepted: {})",
                        known.join(", ")
                    )));
                }
            }
        }
        let out = out.unwrap_or_else(|| {
            let dir = std::env::var_os(OUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("."));
            dir.join(format!("{}.csv", experiment.id()))
        });
        let cfg = Self {
            experiment,
            values,
            seed,
            out,
        };
        cfg.validate_types()?;
        Ok(cfg)
    }

    /// Parses every value once so that malformed input fails before any work.
    fn validate_types(&self) -> Result<(), CliError> {
        for key in self.values.keys() {
            match key.as_str() {
                "omegas" => drop(self.f64_list(key)?),
                "N" => drop(self.usize_list(key)?),
                k if is_count(k) => drop(self.usize(k)?),
                k => drop(self.f64(k)?),
            }
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("key `{key}` has no default"))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let v = self.raw(key);
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| CliError::Config(format!("`{key}` must be a finite number, got `{v}`")))
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        let v = self.raw(key);
        v.parse::<usize>().map_err(|_| {
            CliError::Config(format!("`{key}` must be a non-negative integer, got `{v}`"))
        })
    }

    /// Comma-separated numbers.
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let v = self.raw(key);
        v.split(',')
            .map(|s| s.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<_>>>()
            .filter(|l| !l.is_empty())
            .ok_or_else(|| {
                CliError::Config(format!(
                    "`{key}` must be a comma-separated list of numbers, got `{v}`"
                ))
            })
    }

    /// Integers as a comma-separated list whose items may be inclusive
    /// ranges `a..b`.
    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>, CliError> {
        let v = self.raw(key);
        let bad = || {
            CliError::Config(format!(
                "`{key}` must be integers or ranges a..b, got `{v}`"
            ))
        };
        let mut out = Vec::new();
        for item in v.split(',').map(str::trim) {
            match item.split_once("..") {
                Some((a, b)) => {
                    let (a, b) = (
                        a.trim().parse::<usize>().map_err(|_| bad())?,
                        b.trim().parse::<usize>().map_err(|_| bad())?,
                    );
                    if a > b {
                        return Err(bad());
                    }
                    out.extend(a..=b);
                }
                None => out.push(item.parse::<usize>().map_err(|_| bad())?),
            }
        }
        Ok(out)
    }

    /// `#`-prefixed description of the resolved configuration.
    pub fn header_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("experiment = {}", self.experiment),
            format!("seed = {}", self.seed),
        ];
        lines.extend(self.values.iter().map(|(k, v)| format!("{k} = {v}")));
        lines
    }
}

/// Keys holding counts rather than real numbers.
fn is_count(key: &str) -> bool {
    key.starts_with("n_") || key == "stride"
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(exp: Experiment, overrides: &[&str]) -> Result<ExperimentConfig, CliError> {
        let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        ExperimentConfig::resolve(exp, &[], &o, 1, Some(PathBuf::from("x.csv")))
    }

    #[test]
    fn experiment_ids_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(Experiment::parse(e.id()).unwrap(), e);
        }
        assert!(matches!(
            Experiment::parse("nope"),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn overrides_replace_defaults_and_unknown_keys_fail() {
        let c = resolve(Experiment::DopoSpectrum, &["sigma=2", "n_traj = 10"]).unwrap();
        assert_eq!(c.f64("sigma").unwrap(), 2.0);
        assert_eq!(c.usize("n_traj").unwrap(), 10);
        assert!(matches!(
            resolve(Experiment::DopoSpectrum, &["sigmaa=2"]),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            resolve(Experiment::DopoSpectrum, &["sigma"]),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            resolve(Experiment::DopoSpectrum, &["n_traj=1.5"]),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn integer_ranges_and_lists() {
        let c = resolve(Experiment::JcmVariance, &["N=0..3,7,9..10"]).unwrap();
        assert_eq!(c.usize_list("N").unwrap(), vec![0, 1, 2, 3, 7, 9, 10]);
        assert!(resolve(Experiment::JcmVariance, &["N=5..2"]).is_err());
        let c = resolve(Experiment::DopoSpectrum, &["omegas=0, 1.5"]).unwrap();
        assert_eq!(c.f64_list("omegas").unwrap(), vec![0.0, 1.5]);
    }

    #[test]
    fn header_lists_every_resolved_key() {
        let c = resolve(Experiment::FwmRegion, &["g=2"]).unwrap();
        let h = c.header_lines();
        assert_eq!(h[0], "experiment = fwm-region");
        assert!(h.contains(&"g = 2".to_string()));
        assert_eq!(h.len(), 2 + Experiment::FwmRegion.defaults().len());
    }
}
