use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use stirap::dynamics::{Picture, PropagationResult};
use stirap::scenarios::{
    grids, linear_grid, rescaled_fwhm, scan_eta, scan_fwhm, scan_lambda, DriveDiagnostics, KeepRule, Outcome,
    ScanMode, ScanOptions, ScanResult, Scenario,
};
use stirap::spectro::{Dataset, LevelSystem, TDM_OUTLIER_THRESHOLD, UNITS};

use crate::config::{self, parse_list, set_lambda, DatasetSource, RawConfig};
use crate::{Axis, CliError, Common, ScanArgs};

/// The scenario selected by --config / --scenario / --dataset, with the
/// command-line overrides applied.
pub fn resolve(args: &Common) -> Result<Scenario, CliError> {
    let raw = match (&args.config, &args.scenario) {
        (Some(_), Some(_)) => return Err(CliError::config("--config and --scenario are mutually exclusive")),
        (Some(path), None) => RawConfig::load(path)?,
        (None, Some(name)) => config::bundled(name)?,
        (None, None) => match args.dataset.as_deref() {
            Some("sccl2") => config::bundled("sccl2_1to6")?,
            Some("hcn") => config::bundled("hcn_stage2")?,
            _ => {
                return Err(CliError::config(
                    "choose a run with --config <file>, --scenario <name> or --dataset sccl2|hcn",
                ))
            }
        },
    };
    let source = dataset_source(args)?.map_or_else(|| raw.dataset(), Ok)?;
    let system = Arc::new(source.load()?);
    let mut sc = raw.scenario(system)?;
    apply_overrides(&mut sc, args)?;
    Ok(sc)
}

/// Dataset named on the command line, if any.
fn dataset_source(args: &Common) -> Result<Option<DatasetSource>, CliError> {
    if let (Some(levels), Some(tdm)) = (&args.levels, &args.tdm) {
        return match args.dataset.as_deref() {
            None | Some("custom") => Ok(Some(DatasetSource::Custom {
                levels: levels.clone(),
                tdm: tdm.clone(),
            })),
            Some(other) => Err(CliError::config(format!("--dataset {other} conflicts with --levels/--tdm"))),
        };
    }
    match args.dataset.as_deref() {
        None => Ok(None),
        Some("custom") => Err(CliError::config("--dataset custom needs --levels and --tdm")),
        Some(name) => name
            .parse::<Dataset>()
            .map(|d| Some(DatasetSource::Bundled(d)))
            .map_err(|e| CliError::config(e.to_string())),
    }
}

fn apply_overrides(sc: &mut Scenario, args: &Common) -> Result<(), CliError> {
    let finite = |name: &str, v: f64| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::config(format!("{name} must be finite")))
        }
    };
    if let Some(l) = args.lambda {
        if finite("--lambda", l)? < 0.0 {
            return Err(CliError::config(format!("--lambda must be non-negative, got {l}")));
        }
        set_lambda(sc, l);
    }
    if let Some(eta) = args.eta {
        if finite("--eta", eta)? <= 0.0 {
            return Err(CliError::config(format!("--eta must be positive, got {eta}")));
        }
        single_stage(sc, "--eta")?;
        sc.eta = eta;
    }
    if let Some(w) = args.fwhm_ps {
        if finite("--fwhm-ps", w)? <= 0.0 {
            return Err(CliError::config(format!("--fwhm-ps must be positive, got {w}")));
        }
        single_stage(sc, "--fwhm-ps")?;
        *sc = rescaled_fwhm(sc, w, KeepRule::PulseArea);
    }
    if let Some(dt) = args.dt_au {
        if finite("--dt-au", dt)? <= 0.0 {
            return Err(CliError::config(format!("--dt-au must be positive, got {dt}")));
        }
        sc.dt = Some(dt);
    }
    if let Some(s) = &args.subset {
        sc.subset = Some(parse_list(s));
    }
    if let Some(p) = &args.picture {
        sc.picture = p.parse::<Picture>().map_err(|e| CliError::config(e.to_string()))?;
    }
    if args.threads == Some(0) {
        return Err(CliError::config("--threads must be at least 1"));
    }
    sc.validate()?;
    Ok(())
}

fn single_stage(sc: &Scenario, flag: &str) -> Result<(), CliError> {
    if sc.is_sequential() {
        Err(CliError::config(format!("{flag} applies to single-stage scenarios only")))
    } else {
        Ok(())
    }
}

fn create_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
        path: dir.to_path_buf(),
        source,
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows<I>(path: &Path, header: Vec<String>, rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let wrap = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(&header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_trajectory(path: &Path, r: &PropagationResult) -> Result<(), CliError> {
    let header = std::iter::once("t_ps".to_string())
        .chain(r.labels.iter().map(|l| format!("P_{l}")))
        .chain(std::iter::once("norm".to_string()))
        .collect();
    let rows = r.times.iter().enumerate().map(|(k, t)| {
        std::iter::once(t.to_string())
            .chain(r.populations.row(k).iter().map(f64::to_string))
            .chain(std::iter::once(r.norms[k].to_string()))
            .collect()
    });
    write_rows(path, header, rows)
}

pub fn write_scan(path: &Path, scan: &ScanResult) -> Result<(), CliError> {
    let header = [scan.parameter_name.as_str(), "fidelity", "leakage", "norm_drift"]
        .map(String::from)
        .to_vec();
    let rows = scan.points.iter().map(|p| {
        vec![
            p.value.to_string(),
            p.fidelity.to_string(),
            p.leakage.to_string(),
            p.norm_drift.to_string(),
        ]
    });
    write_rows(path, header, rows)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

fn describe_drive(out: &mut String, prefix: &str, d: &DriveDiagnostics) {
    let _ = writeln!(out, "{prefix}pump_frequency_cm1 = {:.4}", d.pump_freq);
    let _ = writeln!(out, "{prefix}stokes_frequency_cm1 = {:.4}", d.stokes_freq);
    let _ = writeln!(out, "{prefix}cdf_frequency_cm1 = {:.4}", d.cdf_freq);
    let _ = writeln!(
        out,
        "{prefix}peak_rabi_pump = {:.6e} a.u. ({:.6e} cm-1)",
        d.peak_rabi_pump,
        UNITS.au_to_cm1(d.peak_rabi_pump)
    );
    let _ = writeln!(
        out,
        "{prefix}peak_rabi_stokes = {:.6e} a.u. ({:.6e} cm-1)",
        d.peak_rabi_stokes,
        UNITS.au_to_cm1(d.peak_rabi_stokes)
    );
    let _ = writeln!(out, "{prefix}adiabaticity = {:.4}", d.adiabaticity);
    let _ = writeln!(out, "{prefix}pump_peak_intensity_w_cm2 = {:.4e}", d.pump_intensity);
    let _ = writeln!(out, "{prefix}stokes_peak_intensity_w_cm2 = {:.4e}", d.stokes_intensity);
    let _ = writeln!(out, "{prefix}cdf_peak_intensity_w_cm2 = {:.4e}", d.cdf_intensity);
}

fn stage_prefix(sc: &Scenario, k: usize) -> String {
    if sc.is_sequential() {
        format!("stage{}.", k + 1)
    } else {
        String::new()
    }
}

pub fn summary(sc: &Scenario, outcome: &Outcome) -> Result<String, CliError> {
    let r = &outcome.result;
    let mut s = String::new();
    let _ = writeln!(s, "scenario = {}", sc.name);
    let _ = writeln!(s, "transfer = {} -> {}", sc.initial, sc.target);
    let _ = writeln!(s, "lambda = {}", sc.lambda);
    if !sc.is_sequential() {
        let _ = writeln!(s, "intermediate = {}", sc.intermediate);
        let _ = writeln!(s, "fwhm_ps = {}", sc.fwhm);
        let _ = writeln!(s, "eta = {}", sc.eta);
    }
    let _ = writeln!(s, "picture = {:?}", sc.picture);
    let _ = writeln!(s, "states = {}", r.labels.join(","));
    let _ = writeln!(s, "fidelity = {:.6}", outcome.fidelity);
    let _ = writeln!(s, "leakage = {:.6e}", outcome.leakage);
    let _ = writeln!(s, "norm_drift = {:.3e}", r.norm_drift);
    let _ = writeln!(s, "dt_au = {:.6}", r.dt);
    let _ = writeln!(s, "steps = {}", r.steps);
    let (first, last) = (r.times[0], r.times[r.times.len() - 1]);
    let _ = writeln!(s, "window_ps = {first:.4}, {last:.4}");
    let final_row = r.populations.row(r.populations.nrows() - 1);
    for (label, p) in r.labels.iter().zip(final_row.iter()) {
        let _ = writeln!(s, "final_P_{label} = {p:.6e}");
    }
    for (k, d) in sc.diagnostics()?.iter().enumerate() {
        describe_drive(&mut s, &stage_prefix(sc, k), d);
    }
    Ok(s)
}

pub fn propagate(args: &Common) -> Result<(), CliError> {
    let sc = resolve(args)?;
    let outcome = sc.run()?;
    create_out_dir(&args.out)?;
    write_trajectory(&args.out.join("trajectory.csv"), &outcome.result)?;
    let text = summary(&sc, &outcome)?;
    write_text(&args.out.join("summary.txt"), &text)?;
    print!("{text}");
    Ok(())
}

pub fn scan(args: &ScanArgs) -> Result<(), CliError> {
    let sc = resolve(&args.common)?;
    let mode: ScanMode = args.mode.parse().map_err(|e: stirap::Error| CliError::config(e.to_string()))?;
    if mode == ScanMode::CdfOnly && args.axis != Axis::Lambda {
        return Err(CliError::config("--mode cdf_only applies to --axis lambda"));
    }
    let grid = match (args.from, args.to, args.step) {
        (Some(a), Some(b), Some(h)) => linear_grid(a, b, h).map_err(|e| CliError::config(e.to_string()))?,
        _ => match args.axis {
            Axis::Lambda => grids::lambda(),
            Axis::Fwhm => grids::fwhm(sc.fwhm),
            Axis::Eta => grids::eta(),
        },
    };
    let opts = ScanOptions {
        threads: args.common.threads,
    };
    let result = match args.axis {
        Axis::Lambda => scan_lambda(&sc, &grid, mode, opts)?,
        Axis::Fwhm => scan_fwhm(&sc, &grid, KeepRule::PulseArea, opts)?,
        Axis::Eta => scan_eta(&sc, &grid, opts)?,
    };
    create_out_dir(&args.common.out)?;
    let path: PathBuf = args.common.out.join(format!("scan_{}.csv", args.axis.name()));
    write_scan(&path, &result)?;
    println!("{} points written to {}", result.points.len(), path.display());
    let flagged = result.points.iter().filter(|p| p.flagged).count();
    if flagged > 0 {
        println!("{flagged} point(s) exceeded the norm-drift limit; rerun them with a smaller --dt-au");
    }
    if let Some(best) = result.argmax() {
        println!("best {} = {best}", args.axis.name());
    }
    Ok(())
}

fn report_system(out: &mut String, name: &str, sys: &LevelSystem) {
    let couplings = sys.couplings().count();
    let _ = writeln!(out, "[{name}] {} states, {couplings} coupled pairs", sys.len());
    for (a, b, mu) in sys.tdm_outliers(TDM_OUTLIER_THRESHOLD) {
        let _ = writeln!(
            out,
            "warning: dipole moment {a}-{b} = {mu} a.u. exceeds {TDM_OUTLIER_THRESHOLD} a.u.; check the source table"
        );
    }
}

fn report_scenario(out: &mut String, sc: &Scenario) -> Result<(), CliError> {
    let _ = writeln!(out, "\nscenario {}", sc.name);
    let field = sc.field()?;
    for (k, (drive, d)) in field.drives().iter().zip(sc.diagnostics()?).enumerate() {
        let prefix = stage_prefix(sc, k);
        let stage = sc.stages.as_ref().map(|s| &s[k]);
        let (i, m, t) = match stage {
            Some(st) => (&st.initial, &st.intermediate, &st.target),
            None => (&sc.initial, &sc.intermediate, &sc.target),
        };
        let _ = writeln!(out, "{prefix}path = {i} -> {m} -> {t}");
        let _ = writeln!(
            out,
            "{prefix}dipoles_au = pump {}, stokes {}, bridge {}",
            drive.mu_pump, drive.mu_stokes, drive.mu_bridge
        );
        let _ = writeln!(out, "{prefix}pulse_interval_ps = {:.4}", drive.interval());
        describe_drive(out, &prefix, &d);
    }
    Ok(())
}

pub fn validate(args: &Common) -> Result<(), CliError> {
    let mut out = String::new();
    let custom = args.config.is_some() || args.scenario.is_some() || args.levels.is_some();
    if custom {
        if let Some(source) = dataset_source(args)? {
            let sys = source.load()?;
            report_system(&mut out, &source.name(), &sys);
        }
        if args.config.is_some() || args.scenario.is_some() {
            let sc = resolve(args)?;
            if args.levels.is_none() {
                report_system(&mut out, &sc.name, &sc.system);
            }
            report_scenario(&mut out, &sc)?;
        }
    } else {
        let datasets = match dataset_source(args)? {
            Some(DatasetSource::Bundled(d)) => vec![d],
            _ => vec![Dataset::Sccl2, Dataset::Hcn],
        };
        for d in datasets {
            report_system(&mut out, d.name(), &LevelSystem::bundled(d));
            for name in Scenario::REFERENCE_NAMES {
                let raw = config::bundled(name)?;
                if raw.dataset()? != DatasetSource::Bundled(d) {
                    continue;
                }
                let sc = raw.scenario(Arc::new(LevelSystem::bundled(d)))?;
                report_scenario(&mut out, &sc)?;
            }
            out.push('\n');
        }
    }
    print!("{out}");
    Ok(())
}
