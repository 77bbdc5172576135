//! `key = value` run configuration files.
//!
//! ```text
//! # comment
//! dataset = sccl2
//! initial = 1
//! intermediate = 5a
//! target = 6
//! pump_amplitude_au = 3.11e-6
//! stokes_amplitude_au = 3.44e-6
//! fwhm_ps = 215
//! lambda = 1
//! ```
//!
//! Sequential schemes use `stage<N>.<key>` entries instead of the single
//! stage pulse keys.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use stirap::dynamics::Picture;
use stirap::scenarios::{CarrierPhases, Scenario, Stage};
use stirap::spectro::{Dataset, LevelSystem};

use crate::CliError;

const SINGLE_KEYS: &[&str] = &[
    "initial",
    "intermediate",
    "target",
    "pump_amplitude_au",
    "stokes_amplitude_au",
    "fwhm_ps",
    "eta",
    "midpoint_ps",
];

const COMMON_KEYS: &[&str] = &[
    "name",
    "dataset",
    "levels",
    "tdm",
    "lambda",
    "stirap_weight",
    "pump_phase",
    "stokes_phase",
    "cdf_phase",
    "subset",
    "dt_au",
    "window_ps",
    "picture",
    "sample_interval_ps",
];

const STAGE_KEYS: &[&str] = &[
    "initial",
    "intermediate",
    "target",
    "pump_amplitude_au",
    "pump_center_ps",
    "stokes_amplitude_au",
    "stokes_center_ps",
    "fwhm_ps",
    "lambda",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DatasetSource {
    Bundled(Dataset),
    Custom { levels: PathBuf, tdm: PathBuf },
}

impl DatasetSource {
    pub fn load(&self) -> Result<LevelSystem, CliError> {
        match self {
            DatasetSource::Bundled(d) => Ok(LevelSystem::bundled(*d)),
            DatasetSource::Custom { levels, tdm } => Ok(LevelSystem::load(levels, tdm)?),
        }
    }

    pub fn name(&self) -> String {
        match self {
            DatasetSource::Bundled(d) => d.name().to_string(),
            DatasetSource::Custom { levels, .. } => format!("custom ({})", levels.display()),
        }
    }
}

/// Parsed key/value pairs with their line numbers.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
    origin: String,
    base_dir: Option<PathBuf>,
}

impl RawConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(format!("{origin}:{line_no}: expected 'key = value', got '{line}'")));
            };
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(CliError::config(format!("{origin}:{line_no}: empty key or value")));
            }
            check_known(&key).map_err(|m| CliError::config(format!("{origin}:{line_no}: {m}")))?;
            if let Some((_, first)) = entries.insert(key.clone(), (value, line_no)) {
                return Err(CliError::config(format!(
                    "{origin}:{line_no}: '{key}' already set on line {first}"
                )));
            }
        }
        Ok(RawConfig {
            entries,
            origin: origin.to_string(),
            base_dir: None,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn err(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        match self.entries.get(key) {
            Some((_, line)) => CliError::config(format!("{}:{line}: {key}: {msg}", self.origin)),
            None => CliError::config(format!("{}: {key}: {msg}", self.origin)),
        }
    }

    fn string(&self, key: &str) -> Result<String, CliError> {
        self.get(key)
            .map(str::to_string)
            .ok_or_else(|| self.err(key, "required key missing"))
    }

    fn number(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Some(x)),
                _ => Err(self.err(key, format!("'{v}' is not a finite number"))),
            },
        }
    }

    fn positive(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.number(key)? {
            Some(x) if x <= 0.0 => Err(self.err(key, format!("must be positive, got {x}"))),
            other => Ok(other),
        }
    }

    fn non_negative(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.number(key)? {
            Some(x) if x < 0.0 => Err(self.err(key, format!("must be non-negative, got {x}"))),
            other => Ok(other),
        }
    }

    fn required<T>(&self, key: &str, v: Option<T>) -> Result<T, CliError> {
        v.ok_or_else(|| self.err(key, "required key missing"))
    }

    fn resolve(&self, path: &str) -> PathBuf {
        let p = PathBuf::from(path);
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p,
        }
    }

    pub fn dataset(&self) -> Result<DatasetSource, CliError> {
        let custom = match (self.get("levels"), self.get("tdm")) {
            (Some(l), Some(t)) => Some(DatasetSource::Custom {
                levels: self.resolve(l),
                tdm: self.resolve(t),
            }),
            (None, None) => None,
            _ => return Err(self.err("levels", "'levels' and 'tdm' must be given together")),
        };
        match (self.get("dataset"), custom) {
            (Some("custom") | None, Some(c)) => Ok(c),
            (Some("custom") | None, None) => Err(self.err("dataset", "required key missing")),
            (Some(name), None) => name.parse().map(DatasetSource::Bundled).map_err(|e| self.err("dataset", e)),
            (Some(name), Some(_)) => Err(self.err("dataset", format!("'{name}' conflicts with levels/tdm paths"))),
        }
    }

    fn stage_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = self
            .entries
            .keys()
            .filter_map(|k| k.strip_prefix("stage")?.split_once('.')?.0.parse().ok())
            .collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    /// Builds the scenario against an already loaded level system.
    pub fn scenario(&self, system: Arc<LevelSystem>) -> Result<Scenario, CliError> {
        let name = self.get("name").unwrap_or("custom").to_string();
        let stages = self.stage_indices();
        let mut sc = if stages.is_empty() {
            let sc = Scenario::new(
                name,
                system,
                [
                    &self.string("initial")?,
                    &self.string("intermediate")?,
                    &self.string("target")?,
                ],
                self.required("pump_amplitude_au", self.non_negative("pump_amplitude_au")?)?,
                self.required("stokes_amplitude_au", self.non_negative("stokes_amplitude_au")?)?,
                self.required("fwhm_ps", self.positive("fwhm_ps")?)?,
            );
            Scenario {
                eta: self.positive("eta")?.unwrap_or(1.0),
                midpoint: self.number("midpoint_ps")?.unwrap_or(0.0),
                ..sc
            }
        } else {
            if let Some(k) = SINGLE_KEYS.iter().find(|k| self.has(k)) {
                return Err(self.err(k, "not allowed together with stage<N>.* keys"));
            }
            if stages != (1..=stages.len()).collect::<Vec<_>>() {
                return Err(CliError::config(format!(
                    "{}: stages must be numbered 1..N without gaps, got {stages:?}",
                    self.origin
                )));
            }
            let list = stages.iter().map(|&i| self.stage(i)).collect::<Result<Vec<_>, _>>()?;
            let first = &list[0];
            let mut sc = Scenario::new(
                name,
                system,
                [&first.initial, &first.intermediate, &list[list.len() - 1].target],
                0.0,
                0.0,
                first.fwhm,
            );
            sc.stages = Some(list);
            sc
        };
        if let Some(l) = self.non_negative("lambda")? {
            set_lambda(&mut sc, l);
        }
        sc.stirap_weight = self.non_negative("stirap_weight")?.unwrap_or(1.0);
        sc.phases = CarrierPhases {
            pump: self.number("pump_phase")?.unwrap_or(0.0),
            stokes: self.number("stokes_phase")?.unwrap_or(0.0),
            cdf: self.number("cdf_phase")?.unwrap_or(0.0),
        };
        if let Some(s) = self.get("subset") {
            sc.subset = Some(parse_list(s));
        }
        sc.dt = self.positive("dt_au")?;
        if let Some(w) = self.get("window_ps") {
            sc.window = Some(parse_window(w).map_err(|m| self.err("window_ps", m))?);
        }
        if let Some(p) = self.get("picture") {
            sc.picture = p.parse::<Picture>().map_err(|e| self.err("picture", e))?;
        }
        if let Some(s) = self.positive("sample_interval_ps")? {
            sc.sample_interval = s;
        }
        Ok(sc)
    }

    fn stage(&self, i: usize) -> Result<Stage, CliError> {
        let key = |k: &str| format!("stage{i}.{k}");
        let num = |k: &str| -> Result<f64, CliError> { self.required(&key(k), self.number(&key(k))?) };
        let non_neg = |k: &str| -> Result<f64, CliError> { self.required(&key(k), self.non_negative(&key(k))?) };
        Ok(Stage {
            initial: self.string(&key("initial"))?,
            intermediate: self.string(&key("intermediate"))?,
            target: self.string(&key("target"))?,
            pump_amplitude: non_neg("pump_amplitude_au")?,
            pump_center: num("pump_center_ps")?,
            stokes_amplitude: non_neg("stokes_amplitude_au")?,
            stokes_center: num("stokes_center_ps")?,
            fwhm: self.required(&key("fwhm_ps"), self.positive(&key("fwhm_ps"))?)?,
            lambda: self.non_negative(&key("lambda"))?.unwrap_or(0.0),
        })
    }
}

/// Sets λ on the scenario and on every stage.
pub fn set_lambda(sc: &mut Scenario, lambda: f64) {
    sc.lambda = lambda;
    if let Some(stages) = sc.stages.as_mut() {
        for st in stages {
            st.lambda = lambda;
        }
    }
}

fn check_known(key: &str) -> Result<(), String> {
    if let Some(rest) = key.strip_prefix("stage") {
        if let Some((n, field)) = rest.split_once('.') {
            if n.parse::<usize>().is_ok_and(|n| n >= 1) && STAGE_KEYS.contains(&field) {
                return Ok(());
            }
        }
    }
    if SINGLE_KEYS.contains(&key) || COMMON_KEYS.contains(&key) {
        Ok(())
    } else {
        Err(format!("unknown key '{key}'"))
    }
}

pub fn parse_list(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b] = parts.as_slice() else {
        return Err(format!("expected 'start, end' in ps, got '{s}'"));
    };
    let a: f64 = a.parse().map_err(|_| format!("bad start '{a}'"))?;
    let b: f64 = b.parse().map_err(|_| format!("bad end '{b}'"))?;
    if !(b > a) {
        return Err(format!("end {b} must exceed start {a}"));
    }
    Ok((a, b))
}

/// Reference configurations shipped with the binary.
pub const BUNDLED: [(&str, &str); 4] = [
    ("sccl2_1to6", include_str!("../configs/sccl2_1to6.cfg")),
    ("sccl2_1to3", include_str!("../configs/sccl2_1to3.cfg")),
    ("hcn_sequential", include_str!("../configs/hcn_sequential.cfg")),
    ("hcn_stage2", include_str!("../configs/hcn_stage2.cfg")),
];

pub fn bundled(name: &str) -> Result<RawConfig, CliError> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, text)| RawConfig::parse(text, &format!("<bundled {n}>")))
        .unwrap_or_else(|| {
            let names: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).collect();
            Err(CliError::config(format!("no bundled config '{name}' (have {})", names.join(", "))))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(text: &str) -> Result<Scenario, CliError> {
        let raw = RawConfig::parse(text, "test")?;
        let sys = Arc::new(raw.dataset()?.load()?);
        raw.scenario(sys)
    }

    #[test]
    fn bundled_configs_match_library_references() {
        for (name, _) in BUNDLED {
            let raw = bundled(name).unwrap();
            let sys = Arc::new(raw.dataset().unwrap().load().unwrap());
            let mut from_cfg = raw.scenario(sys).unwrap();
            let reference = Scenario::reference(name).unwrap();
            if name == "sccl2_1to3" {
                let rel = |a: f64, b: f64| ((a - b) / b).abs();
                assert!(rel(from_cfg.pump_amplitude, reference.pump_amplitude) < 1e-12);
                assert!(rel(from_cfg.stokes_amplitude, reference.stokes_amplitude) < 1e-12);
                from_cfg.pump_amplitude = reference.pump_amplitude;
                from_cfg.stokes_amplitude = reference.stokes_amplitude;
            }
            assert_eq!(from_cfg, reference, "{name}");
        }
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(RawConfig::parse("pulse_width = 3\n", "t").is_err());
        assert!(RawConfig::parse("lambda = 1\nlambda = 2\n", "t").is_err());
        assert!(RawConfig::parse("stage0.initial = 1\n", "t").is_err());
        assert!(RawConfig::parse("stage1.eta = 1\n", "t").is_err());
        assert!(RawConfig::parse("lambda\n", "t").is_err());
        assert!(RawConfig::parse("# only a comment\n\n", "t").is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        let base = "dataset = sccl2\ninitial = 1\nintermediate = 5a\ntarget = 6\n\
                    pump_amplitude_au = 3e-6\nstokes_amplitude_au = 3e-6\n";
        assert!(scenario(&format!("{base}fwhm_ps = 215\n")).is_ok());
        assert!(scenario(&format!("{base}fwhm_ps = -1\n")).is_err());
        assert!(scenario(&format!("{base}fwhm_ps = 215\nlambda = -1\n")).is_err());
        assert!(scenario(&format!("{base}fwhm_ps = 215\neta = 0\n")).is_err());
        assert!(scenario(&format!("{base}fwhm_ps = abc\n")).is_err());
        assert!(scenario(base).is_err());
        assert!(scenario(&format!("{base}fwhm_ps = 215\nwindow_ps = 5, 1\n")).is_err());
        assert!(scenario(&format!("{base}fwhm_ps = 215\ndataset = nope\n")).is_err());
    }

    #[test]
    fn inline_comments_and_case() {
        let sc = scenario(
            "dataset = hcn   # bundled\nInitial = 3\nintermediate = 4\ntarget = 5\n\
             pump_amplitude_au = 1e-3\nstokes_amplitude_au = 2e-3\nfwhm_ps = 100\n\
             subset = 3, 4 ,5\npicture = schrodinger\nwindow_ps = -300, 300\n",
        )
        .unwrap();
        assert_eq!(sc.subset.as_deref(), Some(&["3".to_string(), "4".into(), "5".into()][..]));
        assert_eq!(sc.picture, Picture::Schrodinger);
        assert_eq!(sc.window, Some((-300.0, 300.0)));
    }

    #[test]
    fn stage_keys_exclude_single_stage_pulses() {
        let raw = bundled("hcn_sequential").unwrap();
        let text: String = BUNDLED[2].1.to_string() + "fwhm_ps = 85\n";
        assert!(scenario(&text).is_err());
        assert!(raw.stage_indices() == vec![1, 2]);
        let gap = BUNDLED[2].1.replace("stage2.", "stage3.");
        assert!(scenario(&gap).is_err());
    }
}
