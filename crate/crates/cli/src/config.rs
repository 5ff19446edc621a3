use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use monogenic::verify::Schedule;
use monogenic::Error;
use serde::{Deserialize, Serialize};

/// One run. Built from an optional JSON document; command-line flags
/// replace the corresponding fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `sphere`, `ball`, `torus`, or a path to an `.off` / `.msh` file.
    pub mesh: Option<String>,
    pub level: Option<u32>,
    pub h: Option<f64>,
    /// Conductivity factor: catalog name or per-node CSV.
    pub f: Option<String>,
    /// Boundary data: harmonic name or CSV.
    pub phi: Option<String>,
    /// Div-curl right-hand side: catalog name or per-node CSV.
    pub source: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<String, f64>,
    pub schedule: Option<Schedule>,
    pub suites: Vec<String>,
}

pub fn config_err(field: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        msg: msg.into(),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> monogenic::Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&src).map_err(|e| config_err("config", format!("{}: {e}", path.display())))
    }

    /// Fields set in `flags` win.
    pub fn merge(mut self, flags: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => {$(if flags.$f.is_some() { self.$f = flags.$f; })*};
        }
        take!(mesh, level, h, f, phi, source, out, seed, schedule);
        self.tolerances.extend(flags.tolerances);
        if !flags.suites.is_empty() {
            self.suites = flags.suites;
        }
        self
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn validate(&self) -> monogenic::Result<()> {
        for (field, v) in [("mesh", &self.mesh), ("f", &self.f), ("phi", &self.phi), ("source", &self.source)] {
            if let Some(p) = v.as_deref().filter(|s| is_path(s)) {
                if !Path::new(p).is_file() {
                    return Err(config_err(field, format!("file not found: {p}")));
                }
            }
        }
        if let Some(h) = self.h {
            if !(h.is_finite() && h > 0.0) {
                return Err(config_err("h", format!("must be positive, got {h}")));
            }
        }
        for (k, v) in &self.tolerances {
            if !(v.is_finite() && *v > 0.0) {
                return Err(config_err(&format!("tolerances.{k}"), format!("must be positive, got {v}")));
            }
        }
        if let Some(s) = &self.schedule {
            s.validate()?;
        }
        Ok(())
    }

    /// Schedule for `verify`: `--level` and `--h` reduce it to one entry.
    pub fn schedule(&self) -> Schedule {
        let mut s = self.schedule.clone().unwrap_or_default();
        if let Some(l) = self.level {
            s.levels = vec![l];
        }
        if let Some(h) = self.h {
            s.ball_h = vec![h];
        }
        s
    }
}

/// Anything with a path separator or a file extension is a file.
pub fn is_path(s: &str) -> bool {
    s.contains('/') || s.contains('\\') || Path::new(s).extension().is_some() && s.parse::<f64>().is_err() && !s.contains(':')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: RunConfig = serde_json::from_str(r#"{"mesh": "ball", "h": 0.5, "seed": 3}"#).unwrap();
        let flags = RunConfig {
            h: Some(0.3),
            ..RunConfig::default()
        };
        let c = file.merge(flags);
        assert_eq!(c.h, Some(0.3));
        assert_eq!(c.seed(), 3);
        assert_eq!(c.mesh.as_deref(), Some("ball"));
    }

    #[test]
    fn unknown_field_is_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"mesh_name": "ball"}"#).is_err());
    }

    #[test]
    fn paths_and_names() {
        assert!(is_path("data/phi.csv"));
        assert!(is_path("ball.msh"));
        assert!(!is_path("ball"));
        assert!(!is_path("constant:1.5"));
        assert!(!is_path("x1^2-x2^2"));
    }

    #[test]
    fn negative_tolerance_names_field() {
        let mut c = RunConfig::default();
        c.tolerances.insert("dn/flux conservation".into(), -1.0);
        match c.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "tolerances.dn/flux conservation"),
            other => panic!("{other:?}"),
        }
    }
}
