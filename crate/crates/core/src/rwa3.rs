//! Three-level rotating-wave reference model of STIRAP with the exact
//! counter-diabatic term.
//!
//! Works directly in the rotating frame, without carriers, so its step can
//! be thousands of times longer than the full propagator's. It is used as
//! an independent oracle for the decoupled-subset limit; the RK4 stepper
//! below is deliberately separate from the one in [`crate::dynamics`].

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::dynamics::{PropagationResult, DEFAULT_SAMPLE_INTERVAL};
use crate::error::{Error, Result};
use crate::pulse::StirapDrive;
use crate::spectro::UNITS;

pub type Matrix3 = [[C64; 3]; 3];

#[derive(Clone, Debug, PartialEq)]
pub struct Rwa3System {
    /// Supplies Ω_p(t), Ω_S(t) and Θ̇(t).
    pub drive: StirapDrive,
    pub include_cd: bool,
    /// Multiplier on the counter-diabatic term (λ).
    pub cd_scale: f64,
    /// Labels for initial, intermediate and target in results.
    pub labels: [String; 3],
}

/// Oracle output plus dark-state diagnostics accumulated over every step.
#[derive(Clone, Debug, PartialEq)]
pub struct Rwa3Run {
    pub result: PropagationResult,
    /// min_t |⟨a₀(t)|ψ(t)⟩|²
    pub min_dark_overlap: f64,
    /// max_t |c₂(t)|²
    pub max_intermediate: f64,
}

impl Rwa3System {
    pub fn new(drive: StirapDrive, include_cd: bool) -> Self {
        Rwa3System {
            drive,
            include_cd,
            cd_scale: 1.0,
            labels: ["1".into(), "2".into(), "3".into()],
        }
    }

    pub fn with_labels(mut self, initial: &str, intermediate: &str, target: &str) -> Self {
        self.labels = [initial.into(), intermediate.into(), target.into()];
        self
    }

    pub fn omega_p(&self, t: f64) -> f64 {
        self.drive.rabi_pump(t)
    }

    pub fn omega_s(&self, t: f64) -> f64 {
        self.drive.rabi_stokes(t)
    }

    fn cd_rate(&self, t: f64) -> f64 {
        if !self.include_cd {
            return 0.0;
        }
        self.cd_scale * self.drive.mixing_angle_rate(t).unwrap_or(0.0)
    }

    /// −ħ[[0,Ω_p,0],[Ω_p,0,Ω_S],[0,Ω_S,0]], plus ħ·Θ̇ in the (1,3)/(3,1)
    /// corners as +i/−i when the counter-diabatic term is on.
    pub fn h_rwa(&self, t: f64) -> Matrix3 {
        let p = C64::new(-UNITS.hbar * self.omega_p(t), 0.0);
        let s = C64::new(-UNITS.hbar * self.omega_s(t), 0.0);
        let cd = C64::new(0.0, UNITS.hbar * self.cd_rate(t));
        let z = C64::new(0.0, 0.0);
        [[z, p, cd], [p, z, s], [-cd, s, z]]
    }

    /// a₀(t) = (cosΘ, 0, −sinΘ).
    pub fn dark_state(&self, t: f64) -> Result<[f64; 3]> {
        let theta = self.drive.mixing_angle(t)?;
        Ok([theta.cos(), 0.0, -theta.sin()])
    }

    /// ΔT·√(Ω_S,peak² + Ω_p,peak²), with ΔT in ps.
    pub fn adiabaticity_metric(&self, delta_t: f64) -> f64 {
        let op = self.drive.pump.peak_rabi(self.drive.mu_pump);
        let os = self.drive.stokes.peak_rabi(self.drive.mu_stokes);
        UNITS.ps_to_au(delta_t) * op.hypot(os)
    }

    /// Step size resolving both the pulse shape and the strongest coupling.
    pub fn default_dt(&self) -> f64 {
        let width = UNITS.ps_to_au(self.drive.width());
        let op = self.drive.pump.peak_rabi(self.drive.mu_pump).abs();
        let os = self.drive.stokes.peak_rabi(self.drive.mu_stokes).abs();
        let cd = if self.include_cd {
            self.cd_scale * UNITS.ps_to_au(self.drive.interval()).abs() / (width * width)
        } else {
            0.0
        };
        let fastest = op.max(os).max(cd);
        let by_rate = if fastest > 0.0 { 0.02 / fastest } else { f64::INFINITY };
        (width / 2000.0).min(by_rate)
    }

    /// RK4 in the rotating frame from |initial⟩ at `window.0` (ps).
    pub fn propagate_rwa3(&self, window: (f64, f64), dt: f64) -> Result<Rwa3Run> {
        let (start, end) = window;
        if !(end > start) {
            return Err(Error::invalid("time window", format!("[{start}, {end}] ps")));
        }
        if !(dt > 0.0) {
            return Err(Error::invalid("time step", format!("{dt} a.u.")));
        }
        let span = UNITS.ps_to_au(end - start);
        let steps = ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        let stride = (UNITS.ps_to_au(DEFAULT_SAMPLE_INTERVAL) / h).round().max(1.0) as usize;
        let t0 = UNITS.ps_to_au(start);

        let rhs = |t_au: f64, y: &[C64; 3]| -> [C64; 3] {
            let hm = self.h_rwa(UNITS.au_to_ps(t_au));
            let mut out = [C64::new(0.0, 0.0); 3];
            for (i, row) in hm.iter().enumerate() {
                let hy: C64 = row.iter().zip(y).map(|(a, b)| a * b).sum();
                out[i] = C64::new(hy.im, -hy.re) / UNITS.hbar;
            }
            out
        };
        let axpy = |y: &[C64; 3], k: &[C64; 3], a: f64| -> [C64; 3] {
            [y[0] + k[0] * a, y[1] + k[1] * a, y[2] + k[2] * a]
        };

        let mut psi = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        let mut times = vec![start];
        let mut rows = vec![1.0, 0.0, 0.0];
        let mut norms = vec![1.0];
        let mut drift: f64 = 0.0;
        let mut min_overlap = self.dark_overlap(start, &psi);
        let mut max_intermediate: f64 = 0.0;

        for step in 1..=steps {
            let t = t0 + (step - 1) as f64 * h;
            let k1 = rhs(t, &psi);
            let k2 = rhs(t + 0.5 * h, &axpy(&psi, &k1, 0.5 * h));
            let k3 = rhs(t + 0.5 * h, &axpy(&psi, &k2, 0.5 * h));
            let k4 = rhs(t + h, &axpy(&psi, &k3, h));
            for k in 0..3 {
                psi[k] += (k1[k] + (k2[k] + k3[k]) * 2.0 + k4[k]) * (h / 6.0);
            }
            let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
            drift = drift.max((1.0 - norm).abs());
            let t_ps = UNITS.au_to_ps(t0 + step as f64 * h);
            min_overlap = min_overlap.min(self.dark_overlap(t_ps, &psi));
            max_intermediate = max_intermediate.max(psi[1].norm_sqr());
            if step % stride == 0 || step == steps {
                times.push(t_ps);
                rows.extend(psi.iter().map(|c| c.norm_sqr()));
                norms.push(norm);
            }
        }

        let populations = Array2::from_shape_vec((times.len(), 3), rows).expect("rows are 3 wide");
        Ok(Rwa3Run {
            result: PropagationResult {
                labels: self.labels.to_vec(),
                times,
                populations,
                norms,
                final_amplitudes: psi.to_vec(),
                norm_drift: drift,
                dt: h,
                steps,
            },
            min_dark_overlap: min_overlap,
            max_intermediate,
        })
    }

    fn dark_overlap(&self, t: f64, psi: &[C64; 3]) -> f64 {
        match self.dark_state(t) {
            Ok(a) => (psi[0] * a[0] + psi[2] * a[2]).norm_sqr(),
            Err(_) => f64::NAN,
        }
    }
}

/// Product of a 3×3 matrix with a real 3-vector.
pub fn apply(m: &Matrix3, v: &[f64; 3]) -> [C64; 3] {
    let mut out = [C64::new(0.0, 0.0); 3];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{pulse_interval, GaussianPulse};

    fn system(ep: f64, es: f64, include_cd: bool) -> Rwa3System {
        let fwhm = 100.0;
        let dt = pulse_interval(fwhm, 1.0);
        let drive = StirapDrive {
            pump: GaussianPulse::new(ep, 0.5 * dt, fwhm).unwrap(),
            stokes: GaussianPulse::new(es, -0.5 * dt, fwhm).unwrap(),
            mu_pump: 0.2,
            mu_stokes: 0.2,
            mu_bridge: 0.05,
            cdf_carrier: 0.0,
            cdf_sign: 1.0,
            cdf_phase: 0.0,
            lambda: 1.0,
            stirap_weight: 1.0,
        };
        Rwa3System::new(drive, include_cd)
    }

    #[test]
    fn zero_drive_gives_zero_matrix() {
        let s = system(0.0, 0.0, false);
        let h = s.h_rwa(0.0);
        assert!(h.iter().flatten().all(|z| *z == C64::new(0.0, 0.0)));
        assert!(s.dark_state(0.0).is_err());
        assert_eq!(s.adiabaticity_metric(100.0), 0.0);
    }

    #[test]
    fn cd_matrix_structure() {
        let s = system(1e-5, 1e-5, true);
        let h = s.h_rwa(3.0);
        assert_eq!(h[0][2].re, 0.0);
        assert!(h[0][2].im > 0.0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h[i][j], h[j][i].conj());
            }
        }
    }

    #[test]
    fn dark_state_is_null_vector() {
        let s = system(2e-5, 1e-5, false);
        for k in -100..=100 {
            let t = k as f64 * 3.0;
            let a = s.dark_state(t).unwrap();
            let v = apply(&s.h_rwa(t), &a);
            let scale = s.omega_p(t).hypot(s.omega_s(t)).max(1e-300);
            assert!(v.iter().all(|z| z.norm() <= 1e-12 * scale.max(1.0)));
            assert!(((a[0] * a[0] + a[2] * a[2]) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn metric_is_linear_in_amplitude() {
        let a = system(1e-6, 2e-6, false).adiabaticity_metric(50.0);
        let b = system(1e-5, 2e-5, false).adiabaticity_metric(50.0);
        assert!((b / a - 10.0).abs() < 1e-12);
    }

    #[test]
    fn exact_cd_follows_dark_state() {
        let s = system(1e-6, 1.3e-6, true);
        let run = s.propagate_rwa3(s.drive.default_window(), s.default_dt()).unwrap();
        let fid = run.result.final_population("3").unwrap();
        assert!(fid > 1.0 - 1e-6, "{fid}");
        assert!(run.max_intermediate < 1e-6);
        assert!(run.min_dark_overlap > 1.0 - 1e-6);
    }
}
