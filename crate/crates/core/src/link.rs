//! Bit error rate and throughput of the OOK molecular link, the rate
//! surface over (delay spread, arrival delay), and a Monte Carlo OOK link
//! driven by the particle oracle.
//!
//! The receiver samples for `n * tau` seconds starting `T` seconds after an
//! emission. Molecules arriving outside that window are counted as errors:
//! `ber = 1 - (F(T + n tau) - F(T))` and the good-put is
//! `(F(T + n tau) - F(T)) / (n tau)` bits/s per chemical.

use std::io::Write;

use crate::diffusion::{capture_fraction_unchecked, window_fraction_unchecked, ChannelParams};
use crate::error::{Error, Result};
use crate::oracle::{stream_rng, sum_over_units, WalkConfig, Walker};
use crate::propagation::{
    classify_feasibility, predict_delay_spread, predict_rssi, Censored, Feasibility, MolecularModel, PipeTopology,
    RadioModel,
};
use crate::pulse::EmissionSchedule;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPolicy {
    /// Delay from emission to the start of the sampling window (T), s.
    pub peak_arrival: f64,
    /// Delay spread (tau), s.
    pub delay_spread: f64,
    /// Window length in units of the delay spread (n).
    pub multiplier: f64,
}

impl SamplingPolicy {
    pub fn new(peak_arrival: f64, delay_spread: f64, multiplier: f64) -> Result<Self> {
        let pol = SamplingPolicy {
            peak_arrival,
            delay_spread,
            multiplier,
        };
        pol.validate()?;
        Ok(pol)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_arrival >= 0.0) || !self.peak_arrival.is_finite() {
            return Err(Error::domain(format!(
                "arrival delay T must be non-negative, got {}",
                self.peak_arrival
            )));
        }
        if !(self.delay_spread > 0.0) || self.delay_spread.is_nan() {
            return Err(Error::domain(format!(
                "delay spread must be positive, got {}",
                self.delay_spread
            )));
        }
        if !(self.multiplier > 0.0) || self.multiplier.is_nan() {
            return Err(Error::domain(format!(
                "multiplier n must be positive, got {}",
                self.multiplier
            )));
        }
        Ok(())
    }

    /// Sampling window length `n * tau`.
    pub fn window(&self) -> f64 {
        self.multiplier * self.delay_spread
    }

    pub fn with_multiplier(self, multiplier: f64) -> Self {
        SamplingPolicy { multiplier, ..self }
    }
}

fn check_inputs(p: &ChannelParams, pol: &SamplingPolicy) -> Result<()> {
    p.validate()?;
    pol.validate()?;
    if p.drift != 0.0 {
        return Err(Error::Unsupported(format!(
            "error rate and throughput need zero drift (got v = {})",
            p.drift
        )));
    }
    Ok(())
}

fn captured(p: &ChannelParams, pol: &SamplingPolicy) -> f64 {
    window_fraction_unchecked(p, pol.peak_arrival, pol.window())
}

/// Fraction of molecules missing the sampling window.
pub fn molecular_ber(p: &ChannelParams, pol: &SamplingPolicy) -> Result<f64> {
    check_inputs(p, pol)?;
    Ok(1.0 - captured(p, pol))
}

/// Successful bits per second per chemical.
pub fn molecular_throughput(p: &ChannelParams, pol: &SamplingPolicy) -> Result<f64> {
    check_inputs(p, pol)?;
    Ok(captured(p, pol) / pol.window())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub tau: f64,
    pub arrival: f64,
    pub rate: f64,
    pub ber: f64,
}

/// Evaluates rate and BER on the `tau_grid x arrival_grid` product, `tau`
/// major.
pub fn rate_surface(p: &ChannelParams, tau_grid: &[f64], arrival_grid: &[f64], n: f64) -> Result<Vec<RatePoint>> {
    if tau_grid.is_empty() || arrival_grid.is_empty() {
        return Err(Error::domain("rate surface grids must be non-empty"));
    }
    let mut out = Vec::with_capacity(tau_grid.len() * arrival_grid.len());
    for &tau in tau_grid {
        for &arrival in arrival_grid {
            let pol = SamplingPolicy::new(arrival, tau, n)?;
            check_inputs(p, &pol)?;
            let c = captured(p, &pol);
            out.push(RatePoint {
                tau,
                arrival,
                rate: c / pol.window(),
                ber: 1.0 - c,
            });
        }
    }
    Ok(out)
}

/// Writes `tau_s,T_s,rate_bps,ber`.
pub fn write_rate_surface_csv<W: Write>(points: &[RatePoint], out: W, header: &[String]) -> Result<()> {
    let mut out = out;
    for line in header {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tau_s", "T_s", "rate_bps", "ber"])?;
    for pt in points {
        w.write_record([
            pt.tau.to_string(),
            pt.arrival.to_string(),
            pt.rate.to_string(),
            pt.ber.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Smallest multiplier `n` whose BER meets `target`, or `None` when the
/// molecules that arrive before `T` already exceed the target.
pub fn min_multiplier_for_ber(p: &ChannelParams, pol: &SamplingPolicy, target: f64) -> Result<Option<f64>> {
    check_inputs(p, pol)?;
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::domain(format!("BER target must be in [0, 1], got {target}")));
    }
    let ber = |n: f64| 1.0 - captured(p, &pol.with_multiplier(n));
    if ber(pol.multiplier) <= target {
        // shrink towards the boundary
        let mut hi = pol.multiplier;
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ber(mid) <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return Ok(Some(hi));
    }
    if capture_fraction_unchecked(p, pol.peak_arrival) >= target {
        return Ok(None);
    }
    let mut lo = pol.multiplier;
    let mut hi = pol.multiplier;
    loop {
        hi *= 2.0;
        if ber(hi) <= target {
            break;
        }
        if hi > 1e300 {
            return Ok(None);
        }
        lo = hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ber(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Half the expected in-window capture of an isolated 1-bit.
pub fn default_threshold(p: &ChannelParams, pol: &SamplingPolicy) -> Result<f64> {
    check_inputs(p, pol)?;
    Ok(0.5 * p.molecules * captured(p, pol))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OokOutcome {
    pub empirical_ber: f64,
    /// Molecules absorbed in each symbol's sampling window, from any emission.
    pub per_symbol_captures: Vec<u64>,
    /// Molecules absorbed between each symbol start and its window.
    pub pre_window_captures: Vec<u64>,
    pub decisions: Vec<bool>,
    pub threshold: f64,
    pub warnings: Vec<String>,
}

impl OokOutcome {
    /// Writes `symbol,bit,pre_window,captures,decision`.
    pub fn write_csv<W: Write>(&self, bits: &[bool], out: W, header: &[String]) -> Result<()> {
        let mut out = out;
        for line in header {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["symbol", "bit", "pre_window", "captures", "decision"])?;
        for (k, &bit) in bits.iter().enumerate() {
            w.write_record([
                k.to_string(),
                u8::from(bit).to_string(),
                self.pre_window_captures[k].to_string(),
                self.per_symbol_captures[k].to_string(),
                u8::from(self.decisions[k]).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Symbols `j` with `t` in `[j P + offset, j P + offset + len)`.
fn covering_symbols(t: f64, period: f64, offset: f64, len: f64, symbols: usize) -> std::ops::Range<usize> {
    let last = ((t - offset) / period).floor();
    if last < 0.0 {
        return 0..0;
    }
    let first = ((t - offset - len) / period).floor() + 1.0;
    let first = first.max(0.0) as usize;
    let end = ((last as usize).saturating_add(1)).min(symbols);
    first.min(end)..end
}

/// Monte Carlo OOK link.
///
/// Every 1-bit releases `round(M)` walkers at its symbol start; each walker
/// is followed until absorption or the end of the final sampling window, so
/// stragglers land in later windows (ISI). A symbol is decided 1 when its
/// window count reaches `threshold`. `cfg` supplies the step, stepping
/// mode, seed and worker count; its channel, walker count and horizon are not used. Each
/// emission draws from its own stream (seeded by `cfg.seed`, stream = symbol
/// index) so results are independent of the worker count.
pub fn simulate_ook_link(
    p: &ChannelParams,
    sched: &EmissionSchedule,
    pol: &SamplingPolicy,
    threshold: f64,
    cfg: &WalkConfig,
) -> Result<OokOutcome> {
    p.validate()?;
    pol.validate()?;
    cfg.validate()?;
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::domain(format!(
            "detector threshold must be positive, got {threshold}"
        )));
    }
    let per_bit = p.molecules.round();
    if per_bit < 1.0 {
        return Err(Error::domain("at least one molecule per emission is required"));
    }
    let per_bit = per_bit as u64;
    let mut warnings = Vec::new();
    if sched.symbol_period < pol.window() {
        warnings.push(format!(
            "symbol period {} s is shorter than the sampling window {} s; windows overlap",
            sched.symbol_period,
            pol.window()
        ));
    }

    let symbols = sched.bits.len();
    let period = sched.symbol_period;
    let offset = pol.peak_arrival;
    let window = pol.window();
    let end = (symbols - 1) as f64 * period + offset + window;
    let dt = cfg.step_dt;
    let walker = Walker::new(p, dt, cfg.stepping);

    let acc = sum_over_units(symbols as u64, 2 * symbols, cfg.workers, |k, acc| {
        let k = k as usize;
        if !sched.bits[k] {
            return;
        }
        let emitted = sched.symbol_start(k);
        let max_steps = ((end - emitted) / dt).ceil() as u64;
        let mut rng = stream_rng(cfg.seed, k as u64);
        for _ in 0..per_bit {
            let Some(step) = walker.first_passage(&mut rng, max_steps) else {
                continue;
            };
            let t = emitted + step as f64 * dt;
            for j in covering_symbols(t, period, offset, window, symbols) {
                acc[j] += 1;
            }
            for j in covering_symbols(t, period, 0.0, offset, symbols) {
                acc[symbols + j] += 1;
            }
        }
    });

    let per_symbol_captures = acc[..symbols].to_vec();
    let pre_window_captures = acc[symbols..].to_vec();
    let decisions: Vec<bool> = per_symbol_captures.iter().map(|&c| c as f64 >= threshold).collect();
    let errors = decisions.iter().zip(&sched.bits).filter(|(d, b)| d != b).count();
    Ok(OokOutcome {
        empirical_ber: errors as f64 / symbols as f64,
        per_symbol_captures,
        pre_window_captures,
        decisions,
        threshold,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputEstimate {
    pub policy: SamplingPolicy,
    pub ber: f64,
    pub rate: f64,
    pub ber_target: f64,
    pub meets_target: bool,
    /// Smallest multiplier meeting the target, if any does.
    pub min_multiplier: Option<f64>,
}

/// Joint radio and molecular prediction for a topology.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkReport {
    pub topology: PipeTopology,
    pub rssi_dbm: Censored<f64>,
    pub delay_spread_s: f64,
    pub feasibility: Feasibility,
    pub throughput: Option<ThroughputEstimate>,
}

pub fn predict_link(rm: &RadioModel, mm: &MolecularModel, topo: &PipeTopology) -> Result<LinkReport> {
    Ok(LinkReport {
        topology: topo.clone(),
        rssi_dbm: predict_rssi(rm, topo)?,
        delay_spread_s: predict_delay_spread(mm, topo)?,
        feasibility: classify_feasibility(rm, mm, topo)?,
        throughput: None,
    })
}

/// Fills the throughput section of a report using the predicted delay
/// spread as `tau`.
pub fn with_throughput(
    mut report: LinkReport,
    p: &ChannelParams,
    peak_arrival: f64,
    multiplier: f64,
    ber_target: f64,
) -> Result<LinkReport> {
    let pol = SamplingPolicy::new(peak_arrival, report.delay_spread_s, multiplier)?;
    let ber = molecular_ber(p, &pol)?;
    report.throughput = Some(ThroughputEstimate {
        policy: pol,
        ber,
        rate: molecular_throughput(p, &pol)?,
        ber_target,
        meets_target: ber <= ber_target,
        min_multiplier: min_multiplier_for_ber(p, &pol, ber_target)?,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ch() -> ChannelParams {
        ChannelParams::still(1.0, 0.1, 1.0).unwrap()
    }

    #[test]
    fn ber_and_rate_reference_point() {
        let pol = SamplingPolicy::new(2.5, 7.5, 1.0).unwrap();
        let ber = molecular_ber(&ch(), &pol).unwrap();
        assert!((ber - 0.677_799_084_863_331_7).abs() < 1e-12);
        let rate = molecular_throughput(&ch(), &pol).unwrap();
        assert!((rate - 0.322_200_915_136_668_3 / 7.5).abs() < 1e-12);
    }

    #[test]
    fn ber_limits() {
        let open = SamplingPolicy::new(0.0, 1e12, 1.0).unwrap();
        assert!(molecular_ber(&ch(), &open).unwrap() < 1e-5);
        let empty = SamplingPolicy::new(2.5, 1e-12, 1.0).unwrap();
        assert!((molecular_ber(&ch(), &empty).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn drift_is_rejected() {
        let p = ChannelParams::new(1.0, 0.1, 0.5, 1.0).unwrap();
        let pol = SamplingPolicy::new(1.0, 1.0, 1.0).unwrap();
        assert!(matches!(molecular_ber(&p, &pol), Err(Error::Unsupported(_))));
        assert!(matches!(molecular_throughput(&p, &pol), Err(Error::Unsupported(_))));
    }

    #[test]
    fn policy_validation() {
        assert!(SamplingPolicy::new(-1.0, 1.0, 1.0).is_err());
        assert!(SamplingPolicy::new(1.0, 0.0, 1.0).is_err());
        assert!(SamplingPolicy::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn single_cell_surface_matches_direct_calls() {
        let s = rate_surface(&ch(), &[7.5], &[2.5], 1.0).unwrap();
        assert_eq!(s.len(), 1);
        let pol = SamplingPolicy::new(2.5, 7.5, 1.0).unwrap();
        assert_eq!(s[0].rate, molecular_throughput(&ch(), &pol).unwrap());
        assert_eq!(s[0].ber, molecular_ber(&ch(), &pol).unwrap());
        assert!(rate_surface(&ch(), &[], &[1.0], 1.0).is_err());
    }

    #[test]
    fn covering_symbols_half_open() {
        // windows [1,2), [3,4), [5,6)
        assert_eq!(covering_symbols(0.5, 2.0, 1.0, 1.0, 3), 0..0);
        assert_eq!(covering_symbols(1.0, 2.0, 1.0, 1.0, 3), 0..1);
        assert_eq!(covering_symbols(2.0, 2.0, 1.0, 1.0, 3), 1..1);
        assert_eq!(covering_symbols(5.5, 2.0, 1.0, 1.0, 3), 2..3);
        assert_eq!(covering_symbols(9.0, 2.0, 1.0, 1.0, 3), 3..3);
        // overlapping windows of length 5: [1,6), [3,8), [5,10)
        assert_eq!(covering_symbols(5.5, 2.0, 1.0, 5.0, 3), 0..3);
    }

    #[test]
    fn min_multiplier_meets_target() {
        let p = ChannelParams::still(1.0, 0.25, 1.0).unwrap();
        let pol = SamplingPolicy::new(0.5, 2.0, 1.0).unwrap();
        let n = min_multiplier_for_ber(&p, &pol, 0.3).unwrap().unwrap();
        let ber = molecular_ber(&p, &pol.with_multiplier(n)).unwrap();
        assert!(ber <= 0.3 && ber > 0.3 - 1e-9);
        // F(T) already above target: unattainable
        let late = SamplingPolicy::new(50.0, 2.0, 1.0).unwrap();
        assert_eq!(min_multiplier_for_ber(&p, &late, 0.3).unwrap(), None);
    }

    #[test]
    fn all_zero_sequence_has_no_errors() {
        let sched = EmissionSchedule::from_bit_str("0000000000", 5.0, 0.5).unwrap();
        let pol = SamplingPolicy::new(2.5, 2.5, 1.0).unwrap();
        let cfg = WalkConfig::with_default_step(ch(), 1.0, 1, 3).unwrap();
        let out = simulate_ook_link(&ch().with_molecules(100.0), &sched, &pol, 0.5, &cfg).unwrap();
        assert_eq!(out.empirical_ber, 0.0);
        assert!(out.per_symbol_captures.iter().all(|&c| c == 0));
    }

    #[test]
    fn overlapping_windows_warn() {
        let sched = EmissionSchedule::from_bit_str("1", 1.0, 0.5).unwrap();
        let pol = SamplingPolicy::new(0.5, 2.0, 1.0).unwrap();
        let cfg = WalkConfig::with_default_step(ch(), 1.0, 1, 3).unwrap();
        let out = simulate_ook_link(&ch().with_molecules(10.0), &sched, &pol, 1.0, &cfg).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert!(simulate_ook_link(&ch(), &sched, &pol, 0.0, &cfg).is_err());
    }

    proptest! {
        #[test]
        fn rate_times_window_plus_ber_is_one(
            x in 0.1f64..5.0, d in 0.01f64..2.0, t0 in 0.0f64..50.0,
            tau in 0.01f64..50.0, n in 0.1f64..10.0,
        ) {
            let p = ChannelParams::still(x, d, 1.0).unwrap();
            let pol = SamplingPolicy::new(t0, tau, n).unwrap();
            let ber = molecular_ber(&p, &pol).unwrap();
            let rate = molecular_throughput(&p, &pol).unwrap();
            prop_assert!((0.0..=1.0).contains(&ber));
            prop_assert!((rate * pol.window() + ber - 1.0).abs() <= 1e-12);
            prop_assert!(rate <= 1.0 / pol.window());
        }

        #[test]
        fn ber_nonincreasing_in_n(t0 in 0.0f64..20.0, tau in 0.1f64..20.0, n in 0.1f64..10.0, dn in 0.0f64..10.0) {
            let pol = SamplingPolicy::new(t0, tau, n).unwrap();
            let a = molecular_ber(&ch(), &pol).unwrap();
            let b = molecular_ber(&ch(), &pol.with_multiplier(n + dn)).unwrap();
            prop_assert!(b <= a);
        }
    }
}
