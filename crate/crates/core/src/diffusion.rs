//! Closed-form 1-D diffusion channel: hit concentration, cumulative
//! first-passage fraction and windowed capture counts.
//!
//! The receiver is an absorbing point at distance `x` from the emitter.
//! With zero drift the probability that a released molecule has been
//! captured by time `t` is `F(t) = erfc(x / (2 sqrt(D t)))`, and the
//! number of molecules captured over a sampling window `[T, T + tau]` is
//! `M (F(T + tau) - F(T))`.

use crate::error::{Error, Result};

/// Physical description of the diffusion channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Emitter to receiver distance, metres.
    pub distance: f64,
    /// Diffusivity, m^2/s.
    pub diffusivity: f64,
    /// Drift velocity towards the receiver, m/s.
    pub drift: f64,
    /// Molecules released per impulse.
    pub molecules: f64,
}

impl ChannelParams {
    pub fn new(distance: f64, diffusivity: f64, drift: f64, molecules: f64) -> Result<Self> {
        let p = ChannelParams {
            distance,
            diffusivity,
            drift,
            molecules,
        };
        p.validate()?;
        Ok(p)
    }

    /// Zero-drift channel.
    pub fn still(distance: f64, diffusivity: f64, molecules: f64) -> Result<Self> {
        Self::new(distance, diffusivity, 0.0, molecules)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return Err(Error::domain(format!(
                "distance must be positive and finite, got {}",
                self.distance
            )));
        }
        if !(self.diffusivity > 0.0 && self.diffusivity.is_finite()) {
            return Err(Error::domain(format!(
                "diffusivity must be positive and finite, got {}",
                self.diffusivity
            )));
        }
        if !(self.drift >= 0.0 && self.drift.is_finite()) {
            return Err(Error::domain(format!(
                "drift must be non-negative and finite, got {}",
                self.drift
            )));
        }
        if !(self.molecules > 0.0 && self.molecules.is_finite()) {
            return Err(Error::domain(format!(
                "molecule count must be positive and finite, got {}",
                self.molecules
            )));
        }
        Ok(())
    }

    pub fn with_molecules(self, molecules: f64) -> Self {
        ChannelParams { molecules, ..self }
    }

    /// Time at which [`hit_concentration`] peaks.
    ///
    /// Setting the time derivative of the log concentration to zero gives
    /// `v^2 t^2 + 2 D t - x^2 = 0`; for `v = 0` this is `x^2 / (2 D)`.
    pub fn peak_time(&self) -> f64 {
        let (x, d, v) = (self.distance, self.diffusivity, self.drift);
        if v == 0.0 {
            return x * x / (2.0 * d);
        }
        // Rationalised root; avoids cancellation when v x << D.
        x * x / (d + (d * d + v * v * x * x).sqrt())
    }

    fn require_still(&self) -> Result<()> {
        if self.drift != 0.0 {
            return Err(Error::Unsupported(format!(
                "capture counts are only available for zero drift (got v = {})",
                self.drift
            )));
        }
        Ok(())
    }
}

/// Receiver sampling window `[start, start + duration]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub start: f64,
    pub duration: f64,
}

impl TimeWindow {
    pub fn new(start: f64, duration: f64) -> Result<Self> {
        if !(start >= 0.0 && start.is_finite()) {
            return Err(Error::domain(format!(
                "window start must be non-negative and finite, got {start}"
            )));
        }
        if !(duration > 0.0) || duration.is_nan() {
            return Err(Error::domain(format!(
                "window duration must be positive, got {duration}"
            )));
        }
        Ok(TimeWindow { start, duration })
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

/// Complementary error function, double precision.
pub fn erfc(z: f64) -> f64 {
    libm::erfc(z)
}

/// Molecular concentration at the receiver `t` seconds after an impulse:
/// `M / sqrt(pi D t) * exp(-(x - v t)^2 / (4 D t))`.
pub fn hit_concentration(p: &ChannelParams, t: f64) -> Result<f64> {
    p.validate()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("time must be positive, got {t}")));
    }
    Ok(hit_concentration_unchecked(p, t))
}

#[inline]
pub(crate) fn hit_concentration_unchecked(p: &ChannelParams, t: f64) -> f64 {
    let dt = p.diffusivity * t;
    let offset = p.distance - p.drift * t;
    p.molecules / (std::f64::consts::PI * dt).sqrt() * (-(offset * offset) / (4.0 * dt)).exp()
}

/// Fraction of released molecules absorbed by time `t` (zero drift only).
/// `F(0)` is 0.
pub fn cumulative_capture_fraction(p: &ChannelParams, t: f64) -> Result<f64> {
    p.validate()?;
    p.require_still()?;
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be non-negative, got {t}")));
    }
    Ok(capture_fraction_unchecked(p, t))
}

#[inline]
pub(crate) fn capture_fraction_unchecked(p: &ChannelParams, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t.is_infinite() {
        return 1.0;
    }
    erfc(p.distance / (2.0 * (p.diffusivity * t).sqrt()))
}

/// Expected molecule count absorbed inside the window:
/// `M (F(T + tau) - F(T))`.
pub fn windowed_capture(p: &ChannelParams, w: &TimeWindow) -> Result<f64> {
    p.validate()?;
    p.require_still()?;
    Ok(p.molecules * window_fraction_unchecked(p, w.start, w.duration))
}

#[inline]
pub(crate) fn window_fraction_unchecked(p: &ChannelParams, start: f64, duration: f64) -> f64 {
    let hi = capture_fraction_unchecked(p, start + duration);
    let lo = capture_fraction_unchecked(p, start);
    (hi - lo).max(0.0)
}
