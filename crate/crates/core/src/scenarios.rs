//! Reference transfer scenarios and the λ / FWHM / η parameter scans.

use std::sync::Arc;

use rayon::prelude::*;

use crate::dynamics::{convergence_check, default_dt, propagate, ConvergenceReport, Picture, PropagationConfig, PropagationResult, MAX_NORM_DRIFT};
use crate::error::{Error, Result};
use crate::pulse::{pulse_interval, Field, GaussianPulse, StirapDrive, Waveform};
use crate::rwa3::Rwa3System;
use crate::spectro::{intensity_of_field, Dataset, LevelSystem};

/// One pump/Stokes pair of a sequential scheme, with explicit pulse centers.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub initial: String,
    pub intermediate: String,
    pub target: String,
    pub pump_amplitude: f64,
    pub stokes_amplitude: f64,
    /// ps
    pub pump_center: f64,
    /// ps
    pub stokes_center: f64,
    /// ps
    pub fwhm: f64,
    pub lambda: f64,
}

/// Carrier phases (rad) for the three field components.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CarrierPhases {
    pub pump: f64,
    pub stokes: f64,
    pub cdf: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub system: Arc<LevelSystem>,
    pub initial: String,
    pub intermediate: String,
    pub target: String,
    /// a.u.
    pub pump_amplitude: f64,
    /// a.u.
    pub stokes_amplitude: f64,
    /// ps
    pub fwhm: f64,
    pub lambda: f64,
    pub eta: f64,
    /// Point halfway between the Stokes and pump centers, ps.
    pub midpoint: f64,
    pub subset: Option<Vec<String>>,
    /// Sequential scheme; when present, the single-stage pulse fields above
    /// are ignored and `initial`/`target` refer to the whole chain.
    pub stages: Option<Vec<Stage>>,
    /// Weight on the pump and Stokes fields (0 for CDF-only control).
    pub stirap_weight: f64,
    pub phases: CarrierPhases,
    pub picture: Picture,
    /// Step override, a.u.
    pub dt: Option<f64>,
    /// Window override, ps.
    pub window: Option<(f64, f64)>,
    pub sample_interval: f64,
}

/// A finished run with the derived figures of merit.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub result: PropagationResult,
    pub fidelity: f64,
    /// Final population outside the scenario's active states.
    pub leakage: f64,
}

/// The field of a scenario: one STIRAP(+CDF) pair or a chain of them.
#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioField {
    Single(StirapDrive),
    Sequential(Vec<StirapDrive>),
}

impl ScenarioField {
    pub fn drives(&self) -> &[StirapDrive] {
        match self {
            ScenarioField::Single(d) => std::slice::from_ref(d),
            ScenarioField::Sequential(v) => v,
        }
    }
}

impl Field for ScenarioField {
    fn field_au(&self, t_au: f64) -> f64 {
        match self {
            ScenarioField::Single(d) => d.field_au(t_au),
            ScenarioField::Sequential(v) => v.field_au(t_au),
        }
    }

    fn carriers(&self) -> Vec<f64> {
        self.drives().carriers()
    }
}

/// Resonant STIRAP(+CDF) drive for initial → intermediate → target.
#[allow(clippy::too_many_arguments)]
fn resonant_drive(
    sys: &LevelSystem,
    initial: &str,
    intermediate: &str,
    target: &str,
    pump: (f64, f64),
    stokes: (f64, f64),
    fwhm: f64,
    lambda: f64,
    stirap_weight: f64,
    phases: CarrierPhases,
) -> Result<StirapDrive> {
    let pump_freq = sys.transition_energy(initial, intermediate)?.abs();
    let stokes_freq = sys.transition_energy(intermediate, target)?.abs();
    let bridge = sys.transition_energy(initial, target)?;
    let drive = StirapDrive {
        pump: GaussianPulse::new(pump.0, pump.1, fwhm)?.with_carrier(pump_freq, phases.pump, Waveform::Cosine),
        stokes: GaussianPulse::new(stokes.0, stokes.1, fwhm)?.with_carrier(stokes_freq, phases.stokes, Waveform::Cosine),
        mu_pump: sys.tdm(initial, intermediate)?,
        mu_stokes: sys.tdm(intermediate, target)?,
        mu_bridge: sys.tdm(initial, target)?,
        cdf_carrier: bridge.abs(),
        cdf_sign: if bridge >= 0.0 { 1.0 } else { -1.0 },
        cdf_phase: phases.cdf,
        lambda,
        stirap_weight,
    };
    drive.validate()?;
    Ok(drive)
}

fn distinct_labels(sys: &LevelSystem, labels: [&str; 3]) -> Result<()> {
    for l in labels {
        sys.index_of(l)?;
    }
    if labels[0] == labels[1] || labels[1] == labels[2] || labels[0] == labels[2] {
        return Err(Error::invalid(
            "scenario states",
            format!("initial, intermediate and target must differ ({labels:?})"),
        ));
    }
    Ok(())
}

impl Scenario {
    /// A single-stage scenario with default settings (λ = 0, η = 1, centered
    /// on t = 0, full manifold).
    pub fn new(
        name: impl Into<String>,
        system: Arc<LevelSystem>,
        states: [&str; 3],
        pump_amplitude: f64,
        stokes_amplitude: f64,
        fwhm: f64,
    ) -> Self {
        Scenario {
            name: name.into(),
            system,
            initial: states[0].into(),
            intermediate: states[1].into(),
            target: states[2].into(),
            pump_amplitude,
            stokes_amplitude,
            fwhm,
            lambda: 0.0,
            eta: 1.0,
            midpoint: 0.0,
            subset: None,
            stages: None,
            stirap_weight: 1.0,
            phases: CarrierPhases::default(),
            picture: Picture::Interaction,
            dt: None,
            window: None,
            sample_interval: crate::dynamics::DEFAULT_SAMPLE_INTERVAL,
        }
    }

    /// SCCl₂ |1⟩ → |6⟩ via |5ᵃ⟩ with the pulse table's amplitudes, λ = 1.
    pub fn sccl2_1to6() -> Self {
        let sys = Arc::new(LevelSystem::bundled(Dataset::Sccl2));
        Scenario {
            lambda: 1.0,
            ..Scenario::new("sccl2_1to6", sys, ["1", "5a", "6"], 3.11e-6, 3.44e-6, 215.0)
        }
    }

    /// SCCl₂ |1⟩ → |3⟩ via |2⟩, amplitudes chosen so the peak Rabi
    /// frequencies equal those of [`Scenario::sccl2_1to6`], λ = 1.
    pub fn sccl2_1to3() -> Self {
        let reference = Self::sccl2_1to6();
        let sys = reference.system.clone();
        let mu = |a, b| sys.tdm(a, b).expect("bundled labels");
        let pump = reference.pump_amplitude * mu("1", "5a") / mu("1", "2");
        let stokes = reference.stokes_amplitude * mu("5a", "6") / mu("2", "3");
        Scenario {
            lambda: 1.0,
            ..Scenario::new("sccl2_1to3", sys.clone(), ["1", "2", "3"], pump, stokes, 215.0)
        }
    }

    /// HCN second stage (5,0,1) → (2,0,1) HNC → (0,0,0) HNC, λ = 1.
    pub fn hcn_stage2() -> Self {
        let sys = Arc::new(LevelSystem::bundled(Dataset::Hcn));
        Scenario {
            lambda: 1.0,
            ..Scenario::new("hcn_stage2", sys, ["3", "4", "5"], 0.0009295, 0.002875, 212.5)
        }
    }

    /// Two chained STIRAP stages HCN (0,0,0) → (5,0,1) → HNC (0,0,0) with
    /// the sequential pulse table, STIRAP only.
    pub fn hcn_sequential() -> Self {
        let sys = Arc::new(LevelSystem::bundled(Dataset::Hcn));
        let stage = |s: [&str; 3], pump: (f64, f64), stokes: (f64, f64)| Stage {
            initial: s[0].into(),
            intermediate: s[1].into(),
            target: s[2].into(),
            pump_amplitude: pump.0,
            pump_center: pump.1,
            stokes_amplitude: stokes.0,
            stokes_center: stokes.1,
            fwhm: 85.0,
            lambda: 0.0,
        };
        let stages = vec![
            stage(["1", "2", "3"], (0.00728, 194.0), (0.00692, 133.0)),
            stage(["3", "4", "5"], (0.00220, 484.0), (0.00575, 423.0)),
        ];
        Scenario {
            stages: Some(stages),
            ..Scenario::new("hcn_sequential", sys, ["1", "2", "5"], 0.0, 0.0, 85.0)
        }
    }

    pub fn reference(name: &str) -> Result<Self> {
        match name {
            "sccl2_1to6" => Ok(Self::sccl2_1to6()),
            "sccl2_1to3" => Ok(Self::sccl2_1to3()),
            "hcn_stage2" => Ok(Self::hcn_stage2()),
            "hcn_sequential" => Ok(Self::hcn_sequential()),
            other => Err(Error::invalid("reference scenario", format!("'{other}'"))),
        }
    }

    pub const REFERENCE_NAMES: [&'static str; 4] = ["sccl2_1to6", "sccl2_1to3", "hcn_sequential", "hcn_stage2"];

    pub fn is_sequential(&self) -> bool {
        self.stages.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        let sys = &self.system;
        if let Some(subset) = &self.subset {
            for l in subset {
                sys.index_of(l)?;
            }
            if !subset.contains(&self.initial) {
                return Err(Error::invalid("subset", format!("missing initial state '{}'", self.initial)));
            }
        }
        if let Some(stages) = &self.stages {
            if stages.is_empty() {
                return Err(Error::invalid("stages", "empty stage list"));
            }
            for st in stages {
                distinct_labels(sys, [&st.initial, &st.intermediate, &st.target])?;
            }
            let centers: Vec<f64> = stages.iter().flat_map(|s| [s.stokes_center, s.pump_center]).collect();
            if centers.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::invalid(
                    "stage order",
                    format!("pulse centers must be non-decreasing (Stokes, pump per stage): {centers:?}"),
                ));
            }
            sys.index_of(&self.initial)?;
            sys.index_of(&self.target)?;
            return Ok(());
        }
        distinct_labels(sys, [&self.initial, &self.intermediate, &self.target])?;
        if !(self.fwhm > 0.0) {
            return Err(Error::invalid("FWHM", format!("{} ps", self.fwhm)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid("eta", format!("{}", self.eta)));
        }
        if !(self.pump_amplitude >= 0.0 && self.stokes_amplitude >= 0.0) {
            return Err(Error::invalid("amplitude", "pump and Stokes amplitudes must be non-negative"));
        }
        Ok(())
    }

    /// Single-stage drive with resonant carriers and T_p − T_S =
    /// FWHM/(2η√ln2) about `midpoint`.
    pub fn drive(&self) -> Result<StirapDrive> {
        self.validate()?;
        if self.is_sequential() {
            return Err(Error::invalid("scenario", format!("'{}' is sequential", self.name)));
        }
        let interval = pulse_interval(self.fwhm, self.eta);
        resonant_drive(
            &self.system,
            &self.initial,
            &self.intermediate,
            &self.target,
            (self.pump_amplitude, self.midpoint + 0.5 * interval),
            (self.stokes_amplitude, self.midpoint - 0.5 * interval),
            self.fwhm,
            self.lambda,
            self.stirap_weight,
            self.phases,
        )
    }

    pub fn field(&self) -> Result<ScenarioField> {
        match &self.stages {
            None => Ok(ScenarioField::Single(self.drive()?)),
            Some(stages) => {
                self.validate()?;
                stages
                    .iter()
                    .map(|st| {
                        resonant_drive(
                            &self.system,
                            &st.initial,
                            &st.intermediate,
                            &st.target,
                            (st.pump_amplitude, st.pump_center),
                            (st.stokes_amplitude, st.stokes_center),
                            st.fwhm,
                            st.lambda,
                            self.stirap_weight,
                            self.phases,
                        )
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(ScenarioField::Sequential)
            }
        }
    }

    /// States the transfer is meant to stay within.
    pub fn active_states(&self) -> Vec<String> {
        let mut out: Vec<String> = match &self.stages {
            Some(stages) => stages
                .iter()
                .flat_map(|s| [s.initial.clone(), s.intermediate.clone(), s.target.clone()])
                .collect(),
            None => vec![self.initial.clone(), self.intermediate.clone(), self.target.clone()],
        };
        out.dedup();
        let mut seen = Vec::new();
        out.retain(|l| {
            let fresh = !seen.contains(l);
            seen.push(l.clone());
            fresh
        });
        out
    }

    /// Default window spans every pulse center ± 4Δτ.
    pub fn window_for(&self, field: &ScenarioField) -> (f64, f64) {
        self.window.unwrap_or_else(|| {
            field
                .drives()
                .iter()
                .map(StirapDrive::default_window)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, w| (acc.0.min(w.0), acc.1.max(w.1)))
        })
    }

    pub fn propagation_config(&self, field: &ScenarioField) -> Result<PropagationConfig> {
        let dt = match self.dt {
            Some(dt) => dt,
            None => {
                let carriers = field.carriers();
                match &self.subset {
                    Some(s) => default_dt(&self.system.restrict(s)?, &carriers),
                    None => default_dt(&self.system, &carriers),
                }
            }
        };
        let mut cfg = PropagationConfig::new(self.initial.clone(), self.window_for(field), dt);
        cfg.picture = self.picture;
        cfg.subset = self.subset.clone();
        cfg.sample_interval = self.sample_interval;
        Ok(cfg)
    }

    pub fn run(&self) -> Result<Outcome> {
        let field = self.field()?;
        let cfg = self.propagation_config(&field)?;
        self.finish(propagate(&self.system, &field, &cfg)?)
    }

    /// Runs at the configured dt and at dt/2; returns the dt outcome with the
    /// comparison.
    pub fn run_checked(&self) -> Result<(Outcome, ConvergenceReport)> {
        let field = self.field()?;
        let cfg = self.propagation_config(&field)?;
        let mut report = convergence_check(&self.system, &field, &cfg)?;
        match report.result.take() {
            Some(result) => Ok((self.finish(result)?, report)),
            None => Err(propagate(&self.system, &field, &cfg).err().unwrap_or_else(|| {
                Error::invalid("convergence check", report.failure.clone().unwrap_or_default())
            })),
        }
    }

    fn run_lenient(&self) -> Result<Outcome> {
        let field = self.field()?;
        let mut cfg = self.propagation_config(&field)?;
        cfg.max_norm_drift = f64::INFINITY;
        self.finish(propagate(&self.system, &field, &cfg)?)
    }

    fn finish(&self, result: PropagationResult) -> Result<Outcome> {
        let fidelity = fidelity(&result, &self.target)?;
        let active = self.active_states();
        let last = result.populations.nrows() - 1;
        let leakage = result
            .labels
            .iter()
            .enumerate()
            .filter(|(_, l)| !active.contains(l))
            .map(|(k, _)| result.populations[[last, k]])
            .sum();
        Ok(Outcome {
            result,
            fidelity,
            leakage,
        })
    }

    /// The decoupled three-level RWA model of this scenario's drive, with
    /// the counter-diabatic term scaled by λ.
    pub fn rwa3(&self) -> Result<Rwa3System> {
        let drive = self.drive()?;
        let lambda = drive.lambda;
        let mut s = Rwa3System::new(drive, lambda > 0.0).with_labels(&self.initial, &self.intermediate, &self.target);
        s.cd_scale = lambda;
        Ok(s)
    }

    /// Summary figures of a drive that do not need a propagation.
    pub fn diagnostics(&self) -> Result<Vec<DriveDiagnostics>> {
        let field = self.field()?;
        Ok(field.drives().iter().map(DriveDiagnostics::of).collect())
    }
}

/// Peak Rabi frequencies, adiabaticity and intensities of one drive.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveDiagnostics {
    /// cm⁻¹
    pub pump_freq: f64,
    pub stokes_freq: f64,
    pub cdf_freq: f64,
    /// rad/a.u.
    pub peak_rabi_pump: f64,
    pub peak_rabi_stokes: f64,
    pub adiabaticity: f64,
    /// W/cm²
    pub pump_intensity: f64,
    pub stokes_intensity: f64,
    /// λ·E_CD peak, W/cm²; zero when λ = 0 or the bridge dipole vanishes.
    pub cdf_intensity: f64,
}

impl DriveDiagnostics {
    pub fn of(d: &StirapDrive) -> Self {
        let cdf_peak = if d.lambda > 0.0 {
            d.peak_cdf_amplitude().unwrap_or(0.0) * d.lambda
        } else {
            0.0
        };
        let rwa = Rwa3System::new(d.clone(), false);
        DriveDiagnostics {
            pump_freq: d.pump.carrier_freq,
            stokes_freq: d.stokes.carrier_freq,
            cdf_freq: d.cdf_carrier,
            peak_rabi_pump: d.pump.peak_rabi(d.mu_pump),
            peak_rabi_stokes: d.stokes.peak_rabi(d.mu_stokes),
            adiabaticity: rwa.adiabaticity_metric(d.interval()),
            pump_intensity: intensity_of_field(d.pump.amplitude * d.stirap_weight),
            stokes_intensity: intensity_of_field(d.stokes.amplitude * d.stirap_weight),
            cdf_intensity: intensity_of_field(cdf_peak),
        }
    }
}

/// Final-time population of `target`.
pub fn fidelity(r: &PropagationResult, target: &str) -> Result<f64> {
    r.final_population(target)
}

/// Propagates the chained stages of `sc` as one continuous run.
pub fn run_sequential(sc: &Scenario) -> Result<PropagationResult> {
    if !sc.is_sequential() {
        return Err(Error::invalid("scenario", format!("'{}' has no stage list", sc.name)));
    }
    Ok(sc.run()?.result)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ScanMode {
    #[default]
    StirapPlusCdf,
    /// Pump and Stokes switched off; the CDF keeps the shape their Θ̇ gives.
    CdfOnly,
}

impl std::str::FromStr for ScanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stirap_plus_cdf" => Ok(ScanMode::StirapPlusCdf),
            "cdf_only" => Ok(ScanMode::CdfOnly),
            other => Err(Error::invalid("scan mode", format!("'{other}' (expected stirap_plus_cdf or cdf_only)"))),
        }
    }
}

/// How pulse amplitudes follow a FWHM change.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KeepRule {
    /// Ẽ·FWHM held fixed, so envelope areas match the reference.
    #[default]
    PulseArea,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanPoint {
    pub value: f64,
    pub fidelity: f64,
    pub leakage: f64,
    pub norm_drift: f64,
    /// Norm drift at or above the divergence limit.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub parameter_name: String,
    pub points: Vec<ScanPoint>,
}

impl ScanResult {
    pub fn fidelities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.fidelity).collect()
    }

    /// Grid value with the highest fidelity (first one on ties).
    pub fn argmax(&self) -> Option<f64> {
        self.points
            .iter()
            .fold(None::<&ScanPoint>, |best, p| match best {
                Some(b) if b.fidelity >= p.fidelity => Some(b),
                _ => Some(p),
            })
            .map(|p| p.value)
    }
}

/// Worker-pool size for scans; `None` uses rayon's global pool.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ScanOptions {
    pub threads: Option<usize>,
}

fn run_grid<F>(name: &str, grid: &[f64], opts: ScanOptions, point: F) -> Result<ScanResult>
where
    F: Fn(f64) -> Result<Scenario> + Sync,
{
    if grid.is_empty() {
        return Err(Error::invalid("scan grid", "empty"));
    }
    let eval = |&v: &f64| -> Result<ScanPoint> {
        let wrap = |e: Error| Error::ScanPoint {
            parameter: name.to_string(),
            value: v,
            source: Box::new(e),
        };
        let outcome = point(v).and_then(|sc| sc.run_lenient()).map_err(wrap)?;
        let drift = outcome.result.norm_drift;
        if drift >= MAX_NORM_DRIFT {
            log::warn!("{name} = {v}: norm drift {drift:.2e} at or above {MAX_NORM_DRIFT:.0e}");
        }
        Ok(ScanPoint {
            value: v,
            fidelity: outcome.fidelity,
            leakage: outcome.leakage,
            norm_drift: drift,
            flagged: drift >= MAX_NORM_DRIFT,
        })
    };
    let results: Vec<Result<ScanPoint>> = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::invalid("thread pool", e.to_string()))?
            .install(|| grid.par_iter().map(eval).collect()),
        None => grid.par_iter().map(eval).collect(),
    };
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ScanResult {
        parameter_name: name.to_string(),
        points,
    })
}

fn single_stage(sc: &Scenario) -> Result<()> {
    if sc.is_sequential() {
        return Err(Error::invalid("scan", "scans apply to single-stage scenarios"));
    }
    sc.validate()
}

/// One propagation per λ. In `CdfOnly` mode the pump and Stokes fields are
/// removed and only λ·E_CD drives the system.
pub fn scan_lambda(sc: &Scenario, grid: &[f64], mode: ScanMode, opts: ScanOptions) -> Result<ScanResult> {
    single_stage(sc)?;
    run_grid("lambda", grid, opts, |lambda| {
        Ok(Scenario {
            lambda,
            stirap_weight: match mode {
                ScanMode::StirapPlusCdf => sc.stirap_weight,
                ScanMode::CdfOnly => 0.0,
            },
            ..sc.clone()
        })
    })
}

/// One propagation per FWHM with amplitudes rescaled as Ẽ·FWHM_ref/FWHM;
/// the pulse interval and CDF follow from the new width and η.
pub fn scan_fwhm(sc: &Scenario, grid: &[f64], keep: KeepRule, opts: ScanOptions) -> Result<ScanResult> {
    single_stage(sc)?;
    if let Some(bad) = grid.iter().find(|&&w| !(w > 0.0)) {
        return Err(Error::invalid("FWHM grid", format!("non-positive value {bad}")));
    }
    run_grid("fwhm", grid, opts, |fwhm| Ok(rescaled_fwhm(sc, fwhm, keep)))
}

/// The scenario at another FWHM under `keep`.
pub fn rescaled_fwhm(sc: &Scenario, fwhm: f64, keep: KeepRule) -> Scenario {
    match keep {
        KeepRule::PulseArea => {
            let scale = sc.fwhm / fwhm;
            Scenario {
                fwhm,
                pump_amplitude: sc.pump_amplitude * scale,
                stokes_amplitude: sc.stokes_amplitude * scale,
                ..sc.clone()
            }
        }
    }
}

/// One propagation per η, pulse interval FWHM/(2η√ln2).
pub fn scan_eta(sc: &Scenario, grid: &[f64], opts: ScanOptions) -> Result<ScanResult> {
    single_stage(sc)?;
    if let Some(bad) = grid.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::invalid("eta grid", format!("non-positive value {bad}")));
    }
    run_grid("eta", grid, opts, |eta| Ok(Scenario { eta, ..sc.clone() }))
}

/// Evenly spaced grid from `from` to `to` inclusive.
pub fn linear_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(to >= from) {
        return Err(Error::invalid("grid", format!("from {from} to {to} step {step}")));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| from + step * k as f64).collect())
}

/// `count` log-spaced values from `from` to `to` inclusive.
pub fn log_grid(from: f64, to: f64, count: usize) -> Result<Vec<f64>> {
    if !(from > 0.0 && to > from) || count < 2 {
        return Err(Error::invalid("grid", format!("log grid {from}..{to} with {count} points")));
    }
    let ratio = (to / from).ln() / (count - 1) as f64;
    Ok((0..count)
        .map(|k| if k + 1 == count { to } else { from * (ratio * k as f64).exp() })
        .collect())
}

/// Default scan grids.
pub mod grids {
    use super::*;

    pub fn lambda() -> Vec<f64> {
        linear_grid(0.0, 2.0, 0.05).expect("static grid")
    }

    /// Thirteen widths from reference/8 to 2·reference in steps of 2^(1/3);
    /// the reference itself is on the grid exactly.
    pub fn fwhm(reference: f64) -> Vec<f64> {
        (-9..=3).map(|k| reference * (k as f64 / 3.0).exp2()).collect()
    }

    pub fn eta() -> Vec<f64> {
        vec![0.5, 1.0, 2.0, 3.0, 4.0, 5.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(linear_grid(0.0, 2.0, 0.05).unwrap().len(), 41);
        assert_eq!(grids::lambda().len(), 41);
        let g = grids::fwhm(215.0);
        assert_eq!(g.len(), 13);
        assert_eq!(g[9], 215.0);
        assert!((g[0] - 215.0 / 8.0).abs() < 1e-12);
        let g = log_grid(25.0, 430.0, 12).unwrap();
        assert_eq!(g[0], 25.0);
        assert_eq!(*g.last().unwrap(), 430.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(linear_grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn reference_drives() {
        let d = Scenario::sccl2_1to6().drive().unwrap();
        assert!((d.cdf_carrier - 1312.9592).abs() < 1e-9);
        assert_eq!(d.cdf_sign, 1.0);
        assert!((d.eta() - 1.0).abs() < 1e-12);
        assert_eq!(d.mu_bridge, 0.03448);
        let d = Scenario::hcn_stage2().drive().unwrap();
        assert_eq!(d.cdf_sign, -1.0);
        assert!((d.cdf_carrier - 12551.2).abs() < 1e-9);
        assert!((d.pump.carrier_freq - 3420.1).abs() < 1e-9);
        assert!((d.stokes.carrier_freq - 9131.1).abs() < 1e-9);
    }

    #[test]
    fn sccl2_1to3_matches_rabi_frequencies() {
        let a = Scenario::sccl2_1to6().drive().unwrap();
        let b = Scenario::sccl2_1to3().drive().unwrap();
        let rel = |x: f64, y: f64| ((x - y) / y).abs();
        assert!(rel(b.pump.peak_rabi(b.mu_pump), a.pump.peak_rabi(a.mu_pump)) < 1e-14);
        assert!(rel(b.stokes.peak_rabi(b.mu_stokes), a.stokes.peak_rabi(a.mu_stokes)) < 1e-14);
    }

    #[test]
    fn invalid_scenarios() {
        let mut sc = Scenario::sccl2_1to6();
        sc.intermediate = "1".into();
        assert!(sc.drive().is_err());
        let mut sc = Scenario::sccl2_1to6();
        sc.target = "42".into();
        assert!(matches!(sc.drive(), Err(Error::UnknownLabel(_))));
        let mut sc = Scenario::hcn_sequential();
        if let Some(st) = sc.stages.as_mut() {
            st[1].stokes_center = 100.0;
        }
        assert!(sc.field().is_err());
        assert!(run_sequential(&Scenario::sccl2_1to6()).is_err());
        assert!(scan_eta(&Scenario::sccl2_1to6(), &[0.0], ScanOptions::default()).is_err());
        assert!(scan_lambda(&Scenario::sccl2_1to6(), &[], ScanMode::CdfOnly, ScanOptions::default()).is_err());
    }

    #[test]
    fn fwhm_rescale_at_reference_is_identity() {
        let sc = Scenario::hcn_stage2();
        assert_eq!(rescaled_fwhm(&sc, sc.fwhm, KeepRule::PulseArea), sc);
        let half = rescaled_fwhm(&sc, sc.fwhm / 2.0, KeepRule::PulseArea);
        assert!((half.pump_amplitude / sc.pump_amplitude - 2.0).abs() < 1e-15);
    }

    #[test]
    fn sequential_window_covers_all_stages() {
        let sc = Scenario::hcn_sequential();
        let field = sc.field().unwrap();
        let (a, b) = sc.window_for(&field);
        let w = crate::pulse::envelope_width(85.0);
        assert!((a - (133.0 - 4.0 * w)).abs() < 1e-9);
        assert!((b - (484.0 + 4.0 * w)).abs() < 1e-9);
        assert_eq!(sc.active_states(), ["1", "2", "3", "4", "5"]);
    }
}
