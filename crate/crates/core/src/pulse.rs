//! Gaussian pump/Stokes pulses, the STIRAP mixing angle and the
//! counter-diabatic field derived from it.
//!
//! Pulse parameters are given in laboratory units (ps, cm⁻¹, a.u. field);
//! rates such as Rabi frequencies and Θ̇ are returned per atomic time unit.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::quad;
use crate::spectro::UNITS;

/// Δτ = FWHM / (2√ln2), the 1/e half-width of the field envelope.
pub fn envelope_width(fwhm: f64) -> f64 {
    fwhm / (2.0 * LN_2.sqrt())
}

/// Pump-after-Stokes delay T_p − T_S = FWHM / (2η√ln2).
pub fn pulse_interval(fwhm: f64, eta: f64) -> f64 {
    envelope_width(fwhm) / eta
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Waveform {
    #[default]
    Cosine,
    Sine,
}

/// Anything that can act as the total driving field of a propagation.
pub trait Field: Sync {
    /// Field strength (a.u.) at time `t_au` (atomic units).
    fn field_au(&self, t_au: f64) -> f64;

    /// Carrier frequencies (cm⁻¹) of the components that are switched on.
    fn carriers(&self) -> Vec<f64>;
}

impl<T: Field + ?Sized> Field for &T {
    fn field_au(&self, t_au: f64) -> f64 {
        (**self).field_au(t_au)
    }

    fn carriers(&self) -> Vec<f64> {
        (**self).carriers()
    }
}

impl<T: Field> Field for [T] {
    fn field_au(&self, t_au: f64) -> f64 {
        self.iter().map(|f| f.field_au(t_au)).sum()
    }

    fn carriers(&self) -> Vec<f64> {
        self.iter().flat_map(Field::carriers).collect()
    }
}

impl<T: Field> Field for Vec<T> {
    fn field_au(&self, t_au: f64) -> f64 {
        self.as_slice().field_au(t_au)
    }

    fn carriers(&self) -> Vec<f64> {
        self.as_slice().carriers()
    }
}

/// E(t) = 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoField;

impl Field for NoField {
    fn field_au(&self, _t_au: f64) -> f64 {
        0.0
    }

    fn carriers(&self) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPulse {
    /// Peak envelope amplitude Ẽ, a.u.
    pub amplitude: f64,
    /// Envelope center T, ps.
    pub center: f64,
    /// Full width at half maximum of the envelope, ps.
    pub fwhm: f64,
    /// Carrier frequency ω, cm⁻¹.
    pub carrier_freq: f64,
    /// rad
    pub carrier_phase: f64,
    pub waveform: Waveform,
}

impl GaussianPulse {
    /// A pulse with a zero-frequency cosine carrier; set the carrier with
    /// [`GaussianPulse::with_carrier`].
    pub fn new(amplitude: f64, center: f64, fwhm: f64) -> Result<Self> {
        let p = GaussianPulse {
            amplitude,
            center,
            fwhm,
            carrier_freq: 0.0,
            carrier_phase: 0.0,
            waveform: Waveform::Cosine,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_carrier(mut self, freq_cm1: f64, phase: f64, waveform: Waveform) -> Self {
        self.carrier_freq = freq_cm1;
        self.carrier_phase = phase;
        self.waveform = waveform;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm > 0.0 && self.fwhm.is_finite()) {
            return Err(Error::invalid("pulse FWHM", format!("{} ps", self.fwhm)));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::invalid("pulse amplitude", format!("{} a.u.", self.amplitude)));
        }
        if !self.center.is_finite() || !self.carrier_freq.is_finite() || !self.carrier_phase.is_finite() {
            return Err(Error::invalid("pulse", "non-finite center or carrier"));
        }
        Ok(())
    }

    /// Δτ in ps.
    pub fn width(&self) -> f64 {
        envelope_width(self.fwhm)
    }

    pub fn envelope(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.width();
        self.amplitude * (-x * x).exp()
    }

    pub fn carrier(&self, t: f64) -> f64 {
        self.carrier_au(UNITS.ps_to_au(t))
    }

    fn carrier_au(&self, t_au: f64) -> f64 {
        let phase = UNITS.cm1_to_au(self.carrier_freq) * t_au + self.carrier_phase;
        match self.waveform {
            Waveform::Cosine => phase.cos(),
            Waveform::Sine => phase.sin(),
        }
    }

    /// Envelope times carrier.
    pub fn field(&self, t: f64) -> f64 {
        self.field_au(UNITS.ps_to_au(t))
    }

    /// Ω(t) = μ·E⁽ᵉ⁾(t)/2ħ, rad per atomic time unit.
    pub fn rabi(&self, mu: f64, t: f64) -> f64 {
        mu * self.envelope(t) / (2.0 * UNITS.hbar)
    }

    pub fn peak_rabi(&self, mu: f64) -> f64 {
        mu * self.amplitude / (2.0 * UNITS.hbar)
    }
}

impl Field for GaussianPulse {
    fn field_au(&self, t_au: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        self.envelope(UNITS.au_to_ps(t_au)) * self.carrier_au(t_au)
    }

    fn carriers(&self) -> Vec<f64> {
        if self.amplitude == 0.0 {
            Vec::new()
        } else {
            vec![self.carrier_freq]
        }
    }
}

/// Pump and Stokes pulses plus the counter-diabatic field built from their
/// mixing angle, blended as E = w·(E_p + E_S) + λ·E_CD.
#[derive(Clone, Debug, PartialEq)]
pub struct StirapDrive {
    pub pump: GaussianPulse,
    pub stokes: GaussianPulse,
    /// Initial–intermediate dipole moment, a.u.
    pub mu_pump: f64,
    /// Intermediate–target dipole moment, a.u.
    pub mu_stokes: f64,
    /// Initial–target dipole moment, a.u.; the CDF couples through it.
    pub mu_bridge: f64,
    /// ω_CD = |ε_target − ε_initial|, cm⁻¹.
    pub cdf_carrier: f64,
    /// sgn(ε_target − ε_initial).
    pub cdf_sign: f64,
    pub cdf_phase: f64,
    /// Blend factor λ on the counter-diabatic field.
    pub lambda: f64,
    /// Weight on the pump and Stokes fields themselves. Zero gives a
    /// CDF-only drive whose Θ̇ still comes from the pump/Stokes shapes.
    pub stirap_weight: f64,
}

impl StirapDrive {
    pub fn validate(&self) -> Result<()> {
        self.pump.validate()?;
        self.stokes.validate()?;
        if self.pump.fwhm != self.stokes.fwhm {
            return Err(Error::invalid(
                "STIRAP drive",
                format!(
                    "pump and Stokes FWHM differ ({} vs {} ps)",
                    self.pump.fwhm, self.stokes.fwhm
                ),
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("{}", self.lambda)));
        }
        if !(self.stirap_weight >= 0.0 && self.stirap_weight.is_finite()) {
            return Err(Error::invalid("STIRAP weight", format!("{}", self.stirap_weight)));
        }
        if self.cdf_sign != 1.0 && self.cdf_sign != -1.0 {
            return Err(Error::invalid("CDF sign", format!("{} (expected ±1)", self.cdf_sign)));
        }
        if self.lambda > 0.0 && self.mu_bridge == 0.0 {
            return Err(Error::ZeroBridgeDipole);
        }
        Ok(())
    }

    /// Δτ shared by pump and Stokes, ps.
    pub fn width(&self) -> f64 {
        self.pump.width()
    }

    /// T_p − T_S in ps.
    pub fn interval(&self) -> f64 {
        self.pump.center - self.stokes.center
    }

    /// η such that T_p − T_S = FWHM/(2η√ln2).
    pub fn eta(&self) -> f64 {
        self.width() / self.interval()
    }

    /// Midpoint between the two pulse centers, ps.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.pump.center + self.stokes.center)
    }

    pub fn rabi_pump(&self, t: f64) -> f64 {
        self.pump.rabi(self.mu_pump, t)
    }

    pub fn rabi_stokes(&self, t: f64) -> f64 {
        self.stokes.rabi(self.mu_stokes, t)
    }

    // Peak couplings Ẽ·μ; the common 1/2ħ cancels in every ratio below.
    fn strengths(&self) -> Result<(f64, f64)> {
        let ap = self.pump.amplitude * self.mu_pump;
        let as_ = self.stokes.amplitude * self.mu_stokes;
        if ap == 0.0 && as_ == 0.0 {
            return Err(Error::UndefinedMixingAngle);
        }
        Ok((ap, as_))
    }

    /// Θ̇(t) in rad per atomic time unit.
    ///
    /// Both the numerator and the denominator of the Gaussian closed form
    /// are multiplied by exp(2·min(x_p², x_S²)), so one denominator term is
    /// always O(1) and far wings decay to zero instead of producing 0/0.
    pub fn mixing_angle_rate(&self, t: f64) -> Result<f64> {
        let (ap, as_) = self.strengths()?;
        if ap == 0.0 || as_ == 0.0 {
            return Ok(0.0);
        }
        let width = self.width();
        let xp = (t - self.pump.center) / width;
        let xs = (t - self.stokes.center) / width;
        let (xp2, xs2) = (xp * xp, xs * xs);
        let m = xp2.min(xs2);
        let width_au = UNITS.ps_to_au(width);
        let prefactor = 2.0 * ap * as_ * UNITS.ps_to_au(self.interval()) / (width_au * width_au);
        let numerator = prefactor * (-(xp2 + xs2) + 2.0 * m).exp();
        let denominator = ap * ap * (-2.0 * xp2 + 2.0 * m).exp() + as_ * as_ * (-2.0 * xs2 + 2.0 * m).exp();
        Ok(numerator / denominator)
    }

    /// Θ(t) = arctan(Ω_p/Ω_S), in [0, π/2] for non-negative couplings.
    pub fn mixing_angle(&self, t: f64) -> Result<f64> {
        let (ap, as_) = self.strengths()?;
        let width = self.width();
        let xp = (t - self.pump.center) / width;
        let xs = (t - self.stokes.center) / width;
        let m = (xp * xp).min(xs * xs);
        Ok((ap * (-xp * xp + m).exp()).atan2(as_ * (-xs * xs + m).exp()))
    }

    /// Envelope of the counter-diabatic field, sgn·2ħΘ̇/μ_bridge (a.u.).
    pub fn cdf_envelope(&self, t: f64) -> Result<f64> {
        if self.mu_bridge == 0.0 {
            return Err(Error::ZeroBridgeDipole);
        }
        Ok(self.cdf_sign * 2.0 * UNITS.hbar * self.mixing_angle_rate(t)? / self.mu_bridge)
    }

    /// E_CD(t) = sgn·(2ħΘ̇/μ_bridge)·sin(ω_CD·t + φ), without the λ factor.
    pub fn cdf_field(&self, t: f64) -> Result<f64> {
        let t_au = UNITS.ps_to_au(t);
        Ok(self.cdf_envelope(t)? * self.cdf_carrier_au(t_au))
    }

    fn cdf_carrier_au(&self, t_au: f64) -> f64 {
        (UNITS.cm1_to_au(self.cdf_carrier) * t_au + self.cdf_phase).sin()
    }

    /// E(t) = w·(E_p + E_S) + λ·E_CD.
    pub fn total_field(&self, t: f64) -> f64 {
        self.field_au(UNITS.ps_to_au(t))
    }

    /// Time at which Θ̇ peaks (Ω_p = Ω_S), ps. None when the pulses do not
    /// overlap into a transfer (one amplitude zero or no delay).
    pub fn crossing_time(&self) -> Option<f64> {
        let (ap, as_) = self.strengths().ok()?;
        let dt = self.interval();
        if ap <= 0.0 || as_ <= 0.0 || dt == 0.0 {
            return None;
        }
        let w = self.width();
        Some(self.midpoint() - (ap / as_).ln() * w * w / (2.0 * dt))
    }

    /// Largest |E_CD| envelope over time (a.u., before λ).
    pub fn peak_cdf_amplitude(&self) -> Result<f64> {
        match self.crossing_time() {
            Some(t) => Ok(self.cdf_envelope(t)?.abs()),
            None => {
                self.cdf_envelope(self.midpoint())?;
                Ok(0.0)
            }
        }
    }

    /// Interval over which Θ goes from 0 to π/2 to within ~1e-17, i.e.
    /// where |ln(Ω_p/Ω_S)| ≤ 40. Falls back to the default window when the
    /// pulses do not overlap into a transfer.
    pub fn transfer_window(&self) -> (f64, f64) {
        let Some(tc) = self.crossing_time() else {
            return self.default_window();
        };
        let w = self.width();
        let half = 40.0 * w * w / (2.0 * self.interval().abs());
        (tc - half, tc + half)
    }

    /// [min(T_S,T_p) − 4Δτ, max(T_S,T_p) + 4Δτ] in ps.
    pub fn default_window(&self) -> (f64, f64) {
        let lo = self.pump.center.min(self.stokes.center);
        let hi = self.pump.center.max(self.stokes.center);
        (lo - 4.0 * self.width(), hi + 4.0 * self.width())
    }

    /// ∫Θ̇ dt over [t0, t1] (ps bounds), by adaptive quadrature.
    pub fn pulse_area_theta(&self, t0: f64, t1: f64) -> Result<f64> {
        self.strengths()?;
        if t0 == t1 {
            return Ok(0.0);
        }
        let (a, b) = (UNITS.ps_to_au(t0), UNITS.ps_to_au(t1));
        let rate = |t_au: f64| self.mixing_angle_rate(UNITS.au_to_ps(t_au)).unwrap_or(0.0);
        Ok(quad::integrate(rate, a, b, 1e-13, 256))
    }
}

impl Field for StirapDrive {
    fn field_au(&self, t_au: f64) -> f64 {
        let stirap = self.pump.field_au(t_au) + self.stokes.field_au(t_au);
        let stirap = if self.stirap_weight == 1.0 {
            stirap
        } else {
            self.stirap_weight * stirap
        };
        if self.lambda == 0.0 {
            return stirap;
        }
        let t = UNITS.au_to_ps(t_au);
        // validate() rules out a zero bridge with λ > 0; a drive with both
        // amplitudes zero has no mixing angle and therefore no CDF.
        let cdf = self
            .cdf_envelope(t)
            .map(|env| env * self.cdf_carrier_au(t_au))
            .unwrap_or(0.0);
        stirap + self.lambda * cdf
    }

    fn carriers(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(3);
        if self.stirap_weight != 0.0 {
            out.extend(self.pump.carriers());
            out.extend(self.stokes.carriers());
        }
        if self.lambda != 0.0 && self.strengths().is_ok() {
            out.push(self.cdf_carrier);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn drive(ep: f64, es: f64, fwhm: f64, eta: f64) -> StirapDrive {
        let dt = pulse_interval(fwhm, eta);
        StirapDrive {
            pump: GaussianPulse::new(ep, 0.5 * dt, fwhm).unwrap().with_carrier(858.0, 0.0, Waveform::Cosine),
            stokes: GaussianPulse::new(es, -0.5 * dt, fwhm).unwrap().with_carrier(454.0, 0.0, Waveform::Cosine),
            mu_pump: 0.2,
            mu_stokes: 0.2,
            mu_bridge: 0.03,
            cdf_carrier: 1312.0,
            cdf_sign: 1.0,
            cdf_phase: 0.0,
            lambda: 1.0,
            stirap_weight: 1.0,
        }
    }

    #[test]
    fn envelope_half_maximum() {
        let p = GaussianPulse::new(2.0, 10.0, 215.0).unwrap();
        assert_eq!(p.envelope(10.0), 2.0);
        assert!((p.envelope(10.0 + 107.5) - 1.0).abs() < 1e-15);
        assert!((p.envelope(10.0 - 107.5) - 1.0).abs() < 1e-15);
        assert!((p.width() - 129.120659).abs() < 1e-6);
        assert!(p.envelope(10.0 + 50.0 * p.width()).is_finite());
    }

    #[test]
    fn rejects_bad_pulses() {
        assert!(GaussianPulse::new(1.0, 0.0, 0.0).is_err());
        assert!(GaussianPulse::new(-1.0, 0.0, 10.0).is_err());
        let mut d = drive(1e-6, 1e-6, 100.0, 1.0);
        d.mu_bridge = 0.0;
        assert!(matches!(d.validate(), Err(Error::ZeroBridgeDipole)));
        d.lambda = 0.0;
        assert!(d.validate().is_ok());
        d.stokes.fwhm = 90.0;
        assert!(d.validate().is_err());
    }

    #[test]
    fn zero_amplitudes() {
        let d = drive(0.0, 0.0, 100.0, 1.0);
        assert!(matches!(d.mixing_angle_rate(0.0), Err(Error::UndefinedMixingAngle)));
        assert!(d.mixing_angle(0.0).is_err());
        let d = drive(0.0, 1e-6, 100.0, 1.0);
        assert_eq!(d.mixing_angle_rate(3.0).unwrap(), 0.0);
        assert_eq!(d.mixing_angle(3.0).unwrap(), 0.0);
    }

    #[test]
    fn mixing_angle_limits() {
        let d = drive(1e-6, 1e-6, 100.0, 1.0);
        assert!(d.mixing_angle(-2000.0).unwrap() < 1e-12);
        assert!((d.mixing_angle(2000.0).unwrap() - FRAC_PI_2).abs() < 1e-12);
        assert!((d.mixing_angle(0.0).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(d.crossing_time(), Some(0.0));
    }

    #[test]
    fn lambda_zero_is_plain_sum() {
        let mut d = drive(1e-6, 2e-6, 100.0, 1.0);
        d.lambda = 0.0;
        for k in -50..50 {
            let t = k as f64 * 7.3;
            let expect = d.pump.field(t) + d.stokes.field(t);
            assert_eq!(d.total_field(t).to_bits(), expect.to_bits());
        }
    }

    #[test]
    fn theta_rate_is_positive_for_counterintuitive_order() {
        let d = drive(3e-6, 1e-6, 80.0, 1.5);
        for k in -400..400 {
            let t = k as f64;
            assert!(d.mixing_angle_rate(t).unwrap() >= 0.0);
        }
        assert!(d.mixing_angle_rate(0.0).unwrap() > 0.0);
    }

    #[test]
    fn pulse_area_edges() {
        let d = drive(1e-6, 1e-6, 100.0, 1.0);
        assert_eq!(d.pulse_area_theta(5.0, 5.0).unwrap(), 0.0);
        let (t0, _) = d.transfer_window();
        let half = d.pulse_area_theta(t0, d.midpoint()).unwrap();
        assert!((half - FRAC_PI_4).abs() < 1e-9);
    }
}
