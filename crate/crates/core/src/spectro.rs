//! Physical constants, unit conversions and vibrational level-system data.
//!
//! Energies are kept in cm⁻¹ and transition dipole moments in atomic units
//! exactly as tabulated; conversion to Hartree happens only when a propagator
//! assembles its Hamiltonian.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Conversion factors between the laboratory units used in the data files
/// and atomic units (ħ = 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitConstants {
    /// Hartree per cm⁻¹.
    pub cm1_to_hartree: f64,
    /// Atomic time units per picosecond.
    pub ps_to_atu: f64,
    /// Cycle-averaged intensity in W/cm² of a field with unit amplitude in
    /// atomic units, ½·c·ε₀·(5.14220674763e11 V/m)².
    pub intensity_factor: f64,
    pub hbar: f64,
}

pub const UNITS: UnitConstants = UnitConstants {
    cm1_to_hartree: 4.556335252912e-6,
    ps_to_atu: 41341.3733366,
    intensity_factor: 3.50944758e16,
    hbar: 1.0,
};

impl UnitConstants {
    pub fn cm1_to_au(&self, energy_cm1: f64) -> f64 {
        energy_cm1 * self.cm1_to_hartree
    }

    pub fn au_to_cm1(&self, energy_au: f64) -> f64 {
        energy_au / self.cm1_to_hartree
    }

    pub fn ps_to_au(&self, t_ps: f64) -> f64 {
        t_ps * self.ps_to_atu
    }

    pub fn au_to_ps(&self, t_au: f64) -> f64 {
        t_au / self.ps_to_atu
    }
}

/// Intensity (W/cm²) of a field whose envelope amplitude is `amplitude` a.u.
pub fn intensity_of_field(amplitude: f64) -> f64 {
    UNITS.intensity_factor * amplitude * amplitude
}

/// Dipole moments above this value (a.u.) are reported as suspected outliers.
pub const TDM_OUTLIER_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectroState {
    pub label: String,
    /// cm⁻¹
    pub energy: f64,
    pub mode_tag: Option<String>,
}

/// One undirected dipole coupling as listed in a TDM file.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub from: String,
    pub to: String,
    pub tdm: f64,
}

/// The bundled molecular datasets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dataset {
    Sccl2,
    Hcn,
}

impl Dataset {
    pub fn name(self) -> &'static str {
        match self {
            Dataset::Sccl2 => "sccl2",
            Dataset::Hcn => "hcn",
        }
    }

    fn sources(self) -> (&'static str, &'static str) {
        match self {
            Dataset::Sccl2 => (
                include_str!("../data/sccl2_levels.csv"),
                include_str!("../data/sccl2_tdm.csv"),
            ),
            Dataset::Hcn => (
                include_str!("../data/hcn_levels.csv"),
                include_str!("../data/hcn_tdm.csv"),
            ),
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sccl2" => Ok(Dataset::Sccl2),
            "hcn" => Ok(Dataset::Hcn),
            other => Err(Error::invalid(
                "dataset",
                format!("'{other}' (expected sccl2 or hcn)"),
            )),
        }
    }
}

/// Ordered vibrational states with a symmetric transition-dipole matrix.
///
/// Immutable once built. The state order is the file order; nothing here
/// assumes the energies are sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSystem {
    states: Vec<SpectroState>,
    // row-major, len = n*n
    tdm: Vec<f64>,
    index: HashMap<String, usize>,
}

impl LevelSystem {
    /// Builds a validated system. Each transition is mirrored; pairs that are
    /// not listed have zero dipole moment.
    pub fn new(states: Vec<SpectroState>, transitions: &[Transition]) -> Result<Self> {
        let mut index = HashMap::with_capacity(states.len());
        for (k, s) in states.iter().enumerate() {
            if s.label.is_empty() {
                return Err(Error::invalid("state label", "empty label"));
            }
            if !s.energy.is_finite() || s.energy < 0.0 {
                return Err(Error::invalid(
                    "state energy",
                    format!("state '{}' has energy {}", s.label, s.energy),
                ));
            }
            if index.insert(s.label.clone(), k).is_some() {
                return Err(Error::DuplicateLabel(s.label.clone()));
            }
        }

        let n = states.len();
        let mut tdm = vec![0.0; n * n];
        let mut listed = vec![false; n * n];
        for t in transitions {
            let i = *index
                .get(&t.from)
                .ok_or_else(|| Error::UnknownLabel(t.from.clone()))?;
            let j = *index
                .get(&t.to)
                .ok_or_else(|| Error::UnknownLabel(t.to.clone()))?;
            if i == j {
                return Err(Error::SelfTransition(t.from.clone()));
            }
            if !t.tdm.is_finite() {
                return Err(Error::invalid(
                    "transition dipole",
                    format!("{}-{} is {}", t.from, t.to, t.tdm),
                ));
            }
            if listed[i * n + j] {
                let first = tdm[i * n + j];
                if first != t.tdm {
                    return Err(Error::ConflictingTransition {
                        a: t.from.clone(),
                        b: t.to.clone(),
                        first,
                        second: t.tdm,
                    });
                }
                continue;
            }
            tdm[i * n + j] = t.tdm;
            tdm[j * n + i] = t.tdm;
            listed[i * n + j] = true;
            listed[j * n + i] = true;
        }

        let sys = LevelSystem {
            states,
            tdm,
            index,
        };
        for (a, b, mu) in sys.tdm_outliers(TDM_OUTLIER_THRESHOLD) {
            log::warn!("transition {a}-{b} has dipole moment {mu} a.u. (> {TDM_OUTLIER_THRESHOLD}); suspected outlier");
        }
        Ok(sys)
    }

    /// Parses the levels and TDM CSV grammars from in-memory text.
    pub fn from_csv_str(levels: &str, tdm: &str) -> Result<Self> {
        let states = parse_levels(levels, "levels")?;
        let transitions = parse_transitions(tdm, "transition dipoles")?;
        Self::new(states, &transitions)
    }

    pub fn load(levels_file: impl AsRef<Path>, tdm_file: impl AsRef<Path>) -> Result<Self> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| Error::Io {
                path: p.to_path_buf(),
                source,
            })
        };
        let levels_path = levels_file.as_ref();
        let tdm_path = tdm_file.as_ref();
        let states = parse_levels(&read(levels_path)?, &levels_path.display().to_string())?;
        let transitions = parse_transitions(&read(tdm_path)?, &tdm_path.display().to_string())?;
        Self::new(states, &transitions)
    }

    pub fn bundled(dataset: Dataset) -> Self {
        let (levels, tdm) = dataset.sources();
        Self::from_csv_str(levels, tdm).expect("bundled dataset is valid")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[SpectroState] {
        &self.states
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.states.iter().map(|s| s.label.as_str())
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    pub fn state(&self, label: &str) -> Result<&SpectroState> {
        Ok(&self.states[self.index_of(label)?])
    }

    pub fn energy(&self, label: &str) -> Result<f64> {
        Ok(self.state(label)?.energy)
    }

    /// Dipole moment between two states by index (a.u.).
    pub fn tdm_at(&self, i: usize, j: usize) -> f64 {
        self.tdm[i * self.len() + j]
    }

    pub fn tdm(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.tdm_at(self.index_of(a)?, self.index_of(b)?))
    }

    /// Signed transition energy ε_b − ε_a in cm⁻¹.
    pub fn transition_energy(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.energy(b)? - self.energy(a)?)
    }

    /// Row-major copy of the dipole matrix.
    pub fn tdm_matrix(&self) -> &[f64] {
        &self.tdm
    }

    /// Every coupled pair (i < j) with its dipole moment.
    pub fn couplings(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| {
            ((i + 1)..n).filter_map(move |j| {
                let mu = self.tdm_at(i, j);
                (mu != 0.0).then_some((i, j, mu))
            })
        })
    }

    pub fn tdm_outliers(&self, threshold: f64) -> Vec<(String, String, f64)> {
        self.couplings()
            .filter(|&(_, _, mu)| mu.abs() > threshold)
            .map(|(i, j, mu)| {
                (
                    self.states[i].label.clone(),
                    self.states[j].label.clone(),
                    mu,
                )
            })
            .collect()
    }

    /// Restriction to the given labels, decoupled from everything else. The
    /// original state order is kept.
    pub fn restrict<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        let mut keep = vec![false; self.len()];
        for l in labels {
            keep[self.index_of(l.as_ref())?] = true;
        }
        let states: Vec<SpectroState> = self
            .states
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(s, _)| s.clone())
            .collect();
        let transitions: Vec<Transition> = self
            .couplings()
            .filter(|&(i, j, _)| keep[i] && keep[j])
            .map(|(i, j, mu)| Transition {
                from: self.states[i].label.clone(),
                to: self.states[j].label.clone(),
                tdm: mu,
            })
            .collect();
        Self::new(states, &transitions)
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str], context: &str) -> Result<()> {
    let header = rdr.headers().map_err(|source| Error::Csv {
        context: context.to_string(),
        source,
    })?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::Parse {
            context: context.to_string(),
            line: 1,
            message: format!("expected header '{}', got '{}'", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn parse_number(field: &str, context: &str, line: u64, what: &str) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::Parse {
        context: context.to_string(),
        line,
        message: format!("{what} '{field}' is not a number"),
    })
}

fn parse_levels(text: &str, context: &str) -> Result<Vec<SpectroState>> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &["label", "energy_cm1", "mode_tag"], context)?;
    let mut states = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|source| Error::Csv {
            context: context.to_string(),
            source,
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() < 2 || record.len() > 3 {
            return Err(Error::Parse {
                context: context.to_string(),
                line,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let label = record[0].to_string();
        let energy = parse_number(&record[1], context, line, "energy")?;
        let mode_tag = record
            .get(2)
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        states.push(SpectroState {
            label,
            energy,
            mode_tag,
        });
    }
    Ok(states)
}

fn parse_transitions(text: &str, context: &str) -> Result<Vec<Transition>> {
    // An empty file means "no couplings".
    if text.lines().all(|l| l.trim().is_empty() || l.trim_start().starts_with('#')) {
        return Ok(Vec::new());
    }
    let mut rdr = reader(text);
    check_header(&mut rdr, &["from", "to", "tdm_au"], context)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|source| Error::Csv {
            context: context.to_string(),
            source,
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(Error::Parse {
                context: context.to_string(),
                line,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        out.push(Transition {
            from: record[0].to_string(),
            to: record[1].to_string(),
            tdm: parse_number(&record[2], context, line, "dipole moment")?,
        });
    }
    Ok(out)
}
