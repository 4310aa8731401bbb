//! Pulse responses, OOK pulse trains and delay-spread estimation.
//!
//! The delay spread is the time from the response peak to the first point
//! after it where the amplitude has fallen to `peak / sqrt(2)` (the 3 dB
//! power point).

use std::io::{Read, Write};

use crate::diffusion::{hit_concentration_unchecked, ChannelParams};
use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 8;

/// Default spray length of one emission, seconds.
pub const DEFAULT_SPRAY_DURATION: f64 = 0.5;

/// Relative spacing jitter accepted when ingesting traces.
pub const SPACING_TOLERANCE: f64 = 0.01;

/// Fraction of leading samples used to estimate the baseline.
pub const BASELINE_FRACTION: f64 = 0.05;

/// Peak height over the median, in units of the estimated noise sigma,
/// required before a pulse is considered detected.
pub const DETECTION_SIGMAS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Synthesized,
    Measured,
}

/// Uniformly sampled amplitude waveform; sample `i` is at
/// `start_time + i * sample_period`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrace {
    pub sample_period: f64,
    pub start_time: f64,
    pub samples: Vec<f64>,
    pub origin: Origin,
}

impl PulseTrace {
    pub fn new(sample_period: f64, start_time: f64, samples: Vec<f64>, origin: Origin) -> Result<Self> {
        if !(sample_period > 0.0) || !sample_period.is_finite() {
            return Err(Error::domain(format!(
                "sample period must be positive, got {sample_period}"
            )));
        }
        if !start_time.is_finite() {
            return Err(Error::domain("start time must be finite"));
        }
        if samples.len() < MIN_SAMPLES {
            return Err(Error::domain(format!(
                "a trace needs at least {MIN_SAMPLES} samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::domain("trace samples must be finite"));
        }
        Ok(PulseTrace {
            sample_period,
            start_time,
            samples,
            origin,
        })
    }

    pub fn time_of(&self, i: usize) -> f64 {
        self.start_time + i as f64 * self.sample_period
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PulseTrace {
            samples: self.samples.iter().map(|s| s * factor).collect(),
            ..self.clone()
        }
    }

    pub fn shifted(&self, dt: f64) -> Self {
        PulseTrace {
            start_time: self.start_time + dt,
            ..self.clone()
        }
    }

    /// Writes the `t_s,amplitude` format, preceded by `#` header lines.
    pub fn write_csv<W: Write>(&self, out: W, header: &[String]) -> Result<()> {
        let mut out = out;
        for line in header {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_s", "amplitude"])?;
        for (i, s) in self.samples.iter().enumerate() {
            w.write_record([self.time_of(i).to_string(), s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaySpread {
    pub peak_time: f64,
    pub cross_time: f64,
    pub tau: f64,
}

/// OOK emission plan: a 1-bit sprays at the start of its symbol slot.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionSchedule {
    pub bits: Vec<bool>,
    pub symbol_period: f64,
    pub spray_duration: f64,
}

impl EmissionSchedule {
    pub fn new(bits: Vec<bool>, symbol_period: f64, spray_duration: f64) -> Result<Self> {
        if !(spray_duration > 0.0) || !spray_duration.is_finite() {
            return Err(Error::domain(format!(
                "spray duration must be positive, got {spray_duration}"
            )));
        }
        if !(symbol_period >= spray_duration) || !symbol_period.is_finite() {
            return Err(Error::domain(format!(
                "symbol period ({symbol_period}) must be at least the spray duration ({spray_duration})"
            )));
        }
        if bits.is_empty() {
            return Err(Error::domain("bit sequence is empty"));
        }
        Ok(EmissionSchedule {
            bits,
            symbol_period,
            spray_duration,
        })
    }

    /// Parses a `0`/`1` string such as `"10110"`.
    pub fn from_bit_str(bits: &str, symbol_period: f64, spray_duration: f64) -> Result<Self> {
        let bits = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::domain(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bits, symbol_period, spray_duration)
    }

    pub fn symbol_start(&self, k: usize) -> f64 {
        k as f64 * self.symbol_period
    }

    pub fn duration(&self) -> f64 {
        self.bits.len() as f64 * self.symbol_period
    }
}

fn sample_count(p: &ChannelParams, sample_period: f64, horizon: f64) -> Result<usize> {
    p.validate()?;
    if !(sample_period > 0.0) || !sample_period.is_finite() {
        return Err(Error::domain(format!(
            "sample period must be positive, got {sample_period}"
        )));
    }
    let needed = 3.0 * p.peak_time();
    if !(horizon >= needed) || !horizon.is_finite() {
        return Err(Error::domain(format!(
            "horizon {horizon} s is shorter than three peak times ({needed} s)"
        )));
    }
    Ok((horizon / sample_period * (1.0 + 1e-12)).floor() as usize)
}

/// Samples the impulse response at `t_i = (i + 1) * sample_period`.
pub fn synthesize_impulse_trace(p: &ChannelParams, sample_period: f64, horizon: f64) -> Result<PulseTrace> {
    let n = sample_count(p, sample_period, horizon)?;
    let samples = (0..n)
        .map(|i| hit_concentration_unchecked(p, (i + 1) as f64 * sample_period))
        .collect();
    PulseTrace::new(sample_period, sample_period, samples, Origin::Synthesized)
}

/// Superposes one impulse response per 1-bit, each starting at its symbol
/// slot. Sample times match [`synthesize_impulse_trace`].
pub fn synthesize_train_trace(
    p: &ChannelParams,
    sched: &EmissionSchedule,
    sample_period: f64,
    horizon: f64,
) -> Result<PulseTrace> {
    let n = sample_count(p, sample_period, horizon)?;
    let emissions: Vec<f64> = sched
        .bits
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(k, _)| sched.symbol_start(k))
        .collect();
    let samples = (0..n)
        .map(|i| {
            let t = (i + 1) as f64 * sample_period;
            emissions
                .iter()
                .filter(|&&e| t > e)
                .map(|&e| hit_concentration_unchecked(p, t - e))
                .sum()
        })
        .collect();
    PulseTrace::new(sample_period, sample_period, samples, Origin::Synthesized)
}

/// Minimum amplitude inside each symbol slot `[k P, (k + 1) P)`; the ISI
/// floor a pulse sits on. Slots without samples yield `None`.
pub fn slot_minima(trace: &PulseTrace, sched: &EmissionSchedule) -> Vec<Option<f64>> {
    let mut minima = vec![None::<f64>; sched.bits.len()];
    for (i, &s) in trace.samples.iter().enumerate() {
        let t = trace.time_of(i);
        if t < 0.0 {
            continue;
        }
        let slot = (t / sched.symbol_period).floor() as usize;
        if let Some(m) = minima.get_mut(slot) {
            *m = Some(m.map_or(s, |cur| cur.min(s)));
        }
    }
    minima
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Robust noise sigma from second differences (smooth pulses contribute
/// almost nothing; white noise has second-difference variance `6 sigma^2`).
fn noise_sigma(samples: &[f64]) -> f64 {
    let mut d2: Vec<f64> = samples.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).abs()).collect();
    1.4826 * median(&mut d2) / 6f64.sqrt()
}

pub fn estimate_delay_spread(trace: &PulseTrace) -> Result<DelaySpread> {
    let s = &trace.samples;
    if s.len() < MIN_SAMPLES {
        return Err(Error::domain("trace too short"));
    }
    // earliest sample attaining the maximum
    let (peak_idx, peak) =
        s.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (i, v)| if v > best.1 { (i, v) } else { best },
        );

    let med = median(&mut s.clone());
    let sigma = noise_sigma(s);
    if !(peak > 0.0 && peak > med && peak - med > DETECTION_SIGMAS * sigma) {
        return Err(Error::NoSignal(format!(
            "peak {peak} is not distinguishable from median {med} (noise sigma {sigma})"
        )));
    }

    let threshold = peak / std::f64::consts::SQRT_2;
    let Some(j) = (peak_idx + 1..s.len()).find(|&i| s[i] <= threshold) else {
        return Err(Error::IncompleteTrace(format!(
            "amplitude never falls to {threshold} after the peak at {}",
            trace.time_of(peak_idx)
        )));
    };
    let (a, b) = (s[j - 1], s[j]);
    let frac = if a > b { (a - threshold) / (a - b) } else { 1.0 };
    let tau = ((j - 1 - peak_idx) as f64 + frac) * trace.sample_period;
    let peak_time = trace.time_of(peak_idx);
    Ok(DelaySpread {
        peak_time,
        cross_time: peak_time + tau,
        tau,
    })
}

/// Reads a `t_s,amplitude` CSV (lines starting with `#` are ignored),
/// checks that the timestamps are uniformly spaced, and removes the
/// baseline: the median of the first 5% of samples, clamped at zero, is
/// subtracted and negative results are clamped to zero.
pub fn ingest_trace_csv<R: Read>(input: R) -> Result<PulseTrace> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);

    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut header_seen = false;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if !header_seen {
            if rec.len() != 2 || &rec[0] != "t_s" || &rec[1] != "amplitude" {
                return Err(Error::parse(line, "expected header `t_s,amplitude`"));
            }
            header_seen = true;
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::parse(line, format!("expected 2 fields, got {}", rec.len())));
        }
        let num = |field: &str| -> Result<f64> {
            field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(line, format!("not a finite number: {field:?}")))
        };
        times.push(num(&rec[0])?);
        values.push(num(&rec[1])?);
    }
    if !header_seen {
        return Err(Error::parse(1, "missing header `t_s,amplitude`"));
    }
    if values.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "trace has {} rows; at least {MIN_SAMPLES} are required",
            values.len()
        )));
    }

    let n = times.len();
    let period = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::domain("timestamps must be strictly increasing"));
    }
    for (i, w) in times.windows(2).enumerate() {
        let step = w[1] - w[0];
        if !(step > 0.0) {
            return Err(Error::domain(format!(
                "timestamps must be strictly increasing (row {})",
                i + 2
            )));
        }
        if (step - period).abs() > SPACING_TOLERANCE * period {
            return Err(Error::domain(format!(
                "sample spacing {step} at row {} deviates more than 1% from the mean {period}",
                i + 2
            )));
        }
    }

    let head = ((n as f64 * BASELINE_FRACTION).ceil() as usize).clamp(1, n);
    let baseline = median(&mut values[..head].to_vec()).max(0.0);
    let samples = values.iter().map(|v| (v - baseline).max(0.0)).collect();
    PulseTrace::new(period, times[0], samples, Origin::Measured)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle(sample_period: f64) -> PulseTrace {
        let n = (20.0 / sample_period).round() as usize + 1;
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 * sample_period;
                if t <= 5.0 {
                    t / 5.0
                } else if t <= 15.0 {
                    (15.0 - t) / 10.0
                } else {
                    0.0
                }
            })
            .collect();
        PulseTrace::new(sample_period, 0.0, samples, Origin::Synthesized).unwrap()
    }

    #[test]
    fn triangle_delay_spread() {
        let d = estimate_delay_spread(&triangle(0.1)).unwrap();
        let expected = 10.0 * (1.0 - std::f64::consts::FRAC_1_SQRT_2);
        assert!((d.peak_time - 5.0).abs() < 1e-12);
        assert!((d.tau - expected).abs() < 1e-9, "{}", d.tau);
        assert!((d.cross_time - (5.0 + expected)).abs() < 1e-9);
    }

    #[test]
    fn scale_and_shift_invariance() {
        let tr = triangle(0.1);
        let d = estimate_delay_spread(&tr).unwrap();
        let d4 = estimate_delay_spread(&tr.scaled(4.0)).unwrap();
        assert_eq!(d.tau, d4.tau);
        let d3 = estimate_delay_spread(&tr.scaled(3.7)).unwrap();
        assert!((d.tau - d3.tau).abs() < 1e-12);
        let shifted = estimate_delay_spread(&tr.shifted(123.25)).unwrap();
        assert_eq!(d.tau, shifted.tau);
        assert_eq!(shifted.peak_time, d.peak_time + 123.25);
    }

    #[test]
    fn peak_ties_take_earliest_sample() {
        let mut s: Vec<f64> = (0..=10).map(f64::from).collect();
        s.extend((0..=10).rev().map(f64::from));
        s.extend([0.0; 10]);
        let tr = PulseTrace::new(1.0, 0.0, s, Origin::Measured).unwrap();
        let d = estimate_delay_spread(&tr).unwrap();
        assert_eq!(d.peak_time, 10.0);
        // 10 / sqrt(2) is crossed 2.93 samples after the second maximum
        assert!((d.tau - (1.0 + 10.0 - 10.0 / 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn flat_trace_is_no_signal() {
        let tr = PulseTrace::new(0.1, 0.0, vec![1.0; 50], Origin::Measured).unwrap();
        assert!(matches!(estimate_delay_spread(&tr), Err(Error::NoSignal(_))));
        let zeros = PulseTrace::new(0.1, 0.0, vec![0.0; 50], Origin::Measured).unwrap();
        assert!(matches!(estimate_delay_spread(&zeros), Err(Error::NoSignal(_))));
    }

    #[test]
    fn truncated_trace_is_incomplete() {
        let s: Vec<f64> = (0..20).map(|i| i as f64).chain([19.5, 19.0]).collect();
        let tr = PulseTrace::new(0.1, 0.0, s, Origin::Measured).unwrap();
        assert!(matches!(estimate_delay_spread(&tr), Err(Error::IncompleteTrace(_))));
    }

    #[test]
    fn schedule_validation() {
        assert!(EmissionSchedule::new(vec![true], 0.4, 0.5).is_err());
        assert!(EmissionSchedule::new(vec![], 1.0, 0.5).is_err());
        assert!(EmissionSchedule::from_bit_str("10x", 1.0, 0.5).is_err());
        let s = EmissionSchedule::from_bit_str("101", 2.0, 0.5).unwrap();
        assert_eq!(s.bits, vec![true, false, true]);
        assert_eq!(s.symbol_start(2), 4.0);
    }

    #[test]
    fn short_horizon_rejected() {
        let p = ChannelParams::still(1.0, 0.1, 1.0).unwrap();
        assert!(synthesize_impulse_trace(&p, 0.01, 14.9).is_err());
        assert!(synthesize_impulse_trace(&p, 0.01, 15.0).is_ok());
    }

    #[test]
    fn ingest_rejects_short_and_malformed() {
        let short = "t_s,amplitude\n0,0\n1,1\n2,0\n";
        assert!(matches!(
            ingest_trace_csv(short.as_bytes()),
            Err(Error::InsufficientData(_))
        ));
        let bad = "t_s,amplitude\n0,0\n1,x\n2,0\n3,0\n4,0\n5,0\n6,0\n7,0\n";
        assert!(matches!(
            ingest_trace_csv(bad.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        let no_header = "0,0\n1,1\n";
        assert!(matches!(
            ingest_trace_csv(no_header.as_bytes()),
            Err(Error::Parse { .. })
        ));
        let mut uneven = String::from("t_s,amplitude\n");
        for (i, t) in [0.0, 1.0, 2.0, 3.0, 4.5, 5.0, 6.0, 7.0, 8.0].iter().enumerate() {
            uneven.push_str(&format!("{t},{i}\n"));
        }
        assert!(matches!(ingest_trace_csv(uneven.as_bytes()), Err(Error::Domain(_))));
    }

    #[test]
    fn ingest_removes_baseline() {
        let mut body = String::from("# comment\nt_s,amplitude\n");
        for i in 0..40 {
            let v = if i == 20 {
                5.0
            } else if i == 3 {
                1.5
            } else {
                2.0
            };
            body.push_str(&format!("{},{}\n", i as f64 * 0.5, v));
        }
        let tr = ingest_trace_csv(body.as_bytes()).unwrap();
        assert_eq!(tr.origin, Origin::Measured);
        assert_eq!(tr.sample_period, 0.5);
        assert_eq!(tr.samples[20], 3.0);
        assert_eq!(tr.samples[3], 0.0);
        assert_eq!(tr.samples[0], 0.0);
    }
}
