//! Empirical propagation laws for a pair of sealed metal tanks joined by an
//! iron pipe network.
//!
//! Radio: received power falls linearly with pipe length and takes a one-off
//! penalty at the first bend; later bends add nothing. Molecular: the delay
//! spread grows linearly with length and is multiplied by a constant factor
//! per bend. Intercepts are fitted; the straight-pipe measurements are the
//! default calibration set.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};

use crate::equipment::RECEIVER_SENSITIVITY_DBM;
use crate::error::{Error, Result};

/// Token used in CSV files for a censored ("No Signal") cell.
pub const NO_SIGNAL_TOKEN: &str = "NS";

/// Range the fitted per-bend delay-spread factor is clamped to.
pub const BEND_FACTOR_RANGE: (f64, f64) = (1.35, 1.5);

/// A reading that may fall below the detection limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Censored<T> {
    Detected(T),
    NoSignal,
}

impl<T> Censored<T> {
    pub fn detected(self) -> Option<T> {
        match self {
            Censored::Detected(v) => Some(v),
            Censored::NoSignal => None,
        }
    }

    pub fn is_detected(&self) -> bool {
        matches!(self, Censored::Detected(_))
    }
}

impl fmt::Display for Censored<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Censored::Detected(v) => match f.precision() {
                Some(p) => write!(f, "{v:.p$}"),
                None => write!(f, "{v}"),
            },
            Censored::NoSignal => f.write_str(NO_SIGNAL_TOKEN),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Endpoints {
    /// Sealed tanks joined by a pipe; the regime the laws describe.
    PipedTanks,
    /// Sealed tank(s) with no pipe path.
    SealedTanks,
    OpenTanks,
    FreeSpace,
}

impl Endpoints {
    /// Infers the regime from a shape label.
    pub fn from_label(label: &str) -> Self {
        let l = label.to_ascii_lowercase();
        if l.contains("sealed") {
            Endpoints::SealedTanks
        } else if l.contains("open tank") {
            Endpoints::OpenTanks
        } else if l.contains("free space") {
            Endpoints::FreeSpace
        } else {
            Endpoints::PipedTanks
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipeTopology {
    pub total_length: f64,
    pub bend_count: u32,
    pub shape_label: String,
    pub endpoints: Endpoints,
}

impl PipeTopology {
    pub fn new(
        total_length: f64,
        bend_count: u32,
        shape_label: impl Into<String>,
        endpoints: Endpoints,
    ) -> Result<Self> {
        if !(total_length > 0.0) || !total_length.is_finite() {
            return Err(Error::domain(format!(
                "total length must be positive, got {total_length}"
            )));
        }
        let shape_label = shape_label.into();
        if shape_label.starts_with('#') {
            return Err(Error::domain(format!(
                "shape label must not start with `#`: {shape_label:?}"
            )));
        }
        Ok(PipeTopology {
            total_length,
            bend_count,
            shape_label,
            endpoints,
        })
    }

    /// Sealed tanks joined by a pipe of the given length and bend count.
    pub fn pipe(total_length: f64, bend_count: u32) -> Result<Self> {
        let label = match bend_count {
            0 => "Straight",
            1 => "L-Shape",
            _ => "Bent",
        };
        Self::new(total_length, bend_count, label, Endpoints::PipedTanks)
    }

    /// Label in the style of the measurement table, e.g.
    /// `L-Shape (1 bend, 4.8m)`.
    pub fn display_name(&self) -> String {
        match self.endpoints {
            Endpoints::PipedTanks => format!(
                "{} ({} {}, {:.1}m)",
                self.shape_label,
                self.bend_count,
                if self.bend_count > 1 { "bends" } else { "bend" },
                self.total_length
            ),
            _ => format!("{} ({:.1}m)", self.shape_label, self.total_length),
        }
    }

    fn require_pipe(&self) -> Result<()> {
        if self.endpoints != Endpoints::PipedTanks {
            return Err(Error::Unsupported(format!(
                "{:?} endpoints are baseline data, not covered by the pipe laws",
                self.endpoints
            )));
        }
        Ok(())
    }
}

/// Mean and standard deviation over repeated batches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reading {
    pub mean: f64,
    pub sd: f64,
}

impl Reading {
    pub const fn new(mean: f64, sd: f64) -> Self {
        Reading { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub topology: PipeTopology,
    pub rssi_dbm: Censored<Reading>,
    pub delay_spread_s: Censored<Reading>,
}

impl MeasurementRecord {
    pub fn validate(&self) -> Result<()> {
        for r in [self.rssi_dbm, self.delay_spread_s].iter().filter_map(|c| c.detected()) {
            if !(r.sd >= 0.0) || !r.mean.is_finite() || !r.sd.is_finite() {
                return Err(Error::domain(format!(
                    "{}: readings need a finite mean and non-negative sd",
                    self.topology.display_name()
                )));
            }
        }
        if let Censored::Detected(r) = self.rssi_dbm {
            if r.mean < RECEIVER_SENSITIVITY_DBM {
                return Err(Error::domain(format!(
                    "{}: RSSI {} dBm is below the receiver sensitivity",
                    self.topology.display_name(),
                    r.mean
                )));
            }
        }
        Ok(())
    }
}

fn row(label: &str, length: f64, bends: u32, rssi: Option<(f64, f64)>, delay: Option<(f64, f64)>) -> MeasurementRecord {
    let censor = |v: Option<(f64, f64)>| match v {
        Some((m, s)) => Censored::Detected(Reading::new(m, s)),
        None => Censored::NoSignal,
    };
    MeasurementRecord {
        topology: PipeTopology {
            total_length: length,
            bend_count: bends,
            shape_label: label.to_string(),
            endpoints: Endpoints::from_label(label),
        },
        rssi_dbm: censor(rssi),
        delay_spread_s: censor(delay),
    }
}

/// The measurement table as published: four baselines, five pipe shapes and
/// six pipe lengths (some configurations appear in both pipe groups).
pub fn builtin_dataset() -> Vec<MeasurementRecord> {
    vec![
        // baselines
        row("Free Space", 4.0, 0, Some((-70.0, 1.0)), Some((17.0, 3.0))),
        row("1 Sealed Tank", 2.5, 0, None, None),
        row("2 Sealed Tanks", 1.0, 0, None, None),
        row("2 Open Tanks", 4.0, 0, Some((-90.0, 1.0)), Some((65.0, 11.0))),
        // pipeline shape
        row("Straight", 3.6, 0, Some((-79.0, 1.0)), Some((3.57, 0.4))),
        row("L-Shape", 3.7, 1, Some((-92.0, 0.0)), Some((4.29, 0.3))),
        row("L-Shape", 4.8, 1, None, Some((6.24, 0.5))),
        row("Z-Shape", 3.8, 2, Some((-93.0, 3.0)), Some((9.07, 2.0))),
        row("U-Shape", 3.9, 2, None, Some((8.81, 1.1))),
        // pipeline length
        row("Short", 1.3, 0, Some((-62.0, 1.0)), Some((2.20, 0.2))),
        row("Medium", 2.5, 0, Some((-71.0, 1.0)), Some((2.91, 0.4))),
        row("Medium", 2.6, 1, Some((-87.0, 1.0)), Some((4.45, 0.4))),
        row("Long", 3.6, 0, Some((-80.0, 1.0)), Some((3.57, 0.4))),
        row("Long", 3.9, 2, None, Some((8.81, 1.1))),
        row("L-Shape", 4.8, 1, None, Some((6.24, 0.5))),
    ]
}

/// Collapses repeated configurations (same endpoints, length and bend count)
/// to a single record. The last listed measurement wins; first-appearance
/// order is kept.
pub fn unique_configurations(data: &[MeasurementRecord]) -> Vec<MeasurementRecord> {
    let mut index: HashMap<(Endpoints, u64, u32), usize> = HashMap::new();
    let mut out: Vec<MeasurementRecord> = Vec::new();
    for rec in data {
        let t = &rec.topology;
        let key = (t.endpoints, t.total_length.to_bits(), t.bend_count);
        match index.get(&key) {
            Some(&i) => out[i] = rec.clone(),
            None => {
                index.insert(key, out.len());
                out.push(rec.clone());
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioModel {
    /// Received power extrapolated to zero pipe length, dBm.
    pub intercept_dbm: f64,
    pub slope_db_per_m: f64,
    /// Signal change at the first bend (negative: a loss), dB.
    pub first_bend_loss_db: f64,
    pub sensitivity_dbm: f64,
}

impl RadioModel {
    pub fn new(intercept_dbm: f64, slope_db_per_m: f64, first_bend_loss_db: f64) -> Result<Self> {
        let m = RadioModel {
            intercept_dbm,
            slope_db_per_m,
            first_bend_loss_db,
            sensitivity_dbm: RECEIVER_SENSITIVITY_DBM,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slope_db_per_m < 0.0) {
            return Err(Error::domain(format!(
                "radio slope must be negative, got {} dB/m",
                self.slope_db_per_m
            )));
        }
        if !(self.first_bend_loss_db <= 0.0) {
            return Err(Error::domain(format!(
                "first-bend term must be a loss (<= 0 dB), got {}",
                self.first_bend_loss_db
            )));
        }
        if !self.intercept_dbm.is_finite() || !self.sensitivity_dbm.is_finite() {
            return Err(Error::domain("radio model terms must be finite"));
        }
        Ok(())
    }

    /// Raw law, without the sensitivity cut.
    pub fn evaluate(&self, length_m: f64, bends: u32) -> f64 {
        let bend = if bends >= 1 { self.first_bend_loss_db } else { 0.0 };
        self.intercept_dbm + self.slope_db_per_m * length_m + bend
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MolecularModel {
    pub tau_intercept_s: f64,
    pub slope_s_per_m: f64,
    pub bend_factor: f64,
}

impl MolecularModel {
    pub fn new(tau_intercept_s: f64, slope_s_per_m: f64, bend_factor: f64) -> Result<Self> {
        if !(slope_s_per_m > 0.0) || !slope_s_per_m.is_finite() {
            return Err(Error::domain(format!(
                "delay-spread slope must be positive, got {slope_s_per_m}"
            )));
        }
        if !(bend_factor >= 1.0) || !bend_factor.is_finite() {
            return Err(Error::domain(format!(
                "bend factor must be at least 1, got {bend_factor}"
            )));
        }
        if !tau_intercept_s.is_finite() {
            return Err(Error::domain("delay-spread intercept must be finite"));
        }
        Ok(MolecularModel {
            tau_intercept_s,
            slope_s_per_m,
            bend_factor,
        })
    }

    pub fn evaluate(&self, length_m: f64, bends: u32) -> f64 {
        (self.tau_intercept_s + self.slope_s_per_m * length_m) * self.bend_factor.powi(bends as i32)
    }
}

pub fn predict_rssi(m: &RadioModel, topo: &PipeTopology) -> Result<Censored<f64>> {
    topo.require_pipe()?;
    let rssi = m.evaluate(topo.total_length, topo.bend_count);
    Ok(if rssi < m.sensitivity_dbm {
        Censored::NoSignal
    } else {
        Censored::Detected(rssi)
    })
}

pub fn predict_delay_spread(m: &MolecularModel, topo: &PipeTopology) -> Result<f64> {
    topo.require_pipe()?;
    Ok(m.evaluate(topo.total_length, topo.bend_count))
}

/// Ordinary least squares `y = a + b x`; returns `(a, b)`.
fn line_fit(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "a line fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 1e-12 * (1.0 + mx * mx)) {
        return Err(Error::InsufficientData(
            "degenerate fit: all straight-pipe rows have the same length".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

fn piped(data: &[MeasurementRecord]) -> impl Iterator<Item = &MeasurementRecord> {
    data.iter().filter(|r| r.topology.endpoints == Endpoints::PipedTanks)
}

/// Fits the radio law: a least-squares line over uncensored straight rows,
/// then the first-bend term as the mean residual of uncensored one-bend rows
/// (rows with more bends are used only when no one-bend row is available).
pub fn fit_radio(data: &[MeasurementRecord]) -> Result<RadioModel> {
    let data = unique_configurations(data);
    let straight: Vec<(f64, f64)> = piped(&data)
        .filter(|r| r.topology.bend_count == 0)
        .filter_map(|r| r.rssi_dbm.detected().map(|v| (r.topology.total_length, v.mean)))
        .collect();
    if straight.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "radio fit needs at least 2 uncensored straight-pipe rows, got {}",
            straight.len()
        )));
    }
    let (intercept, slope) = line_fit(&straight)?;

    let bent = |pred: &dyn Fn(u32) -> bool| -> Vec<f64> {
        piped(&data)
            .filter(|r| pred(r.topology.bend_count))
            .filter_map(|r| {
                r.rssi_dbm
                    .detected()
                    .map(|v| v.mean - (intercept + slope * r.topology.total_length))
            })
            .collect()
    };
    let mut residuals = bent(&|b| b == 1);
    if residuals.is_empty() {
        residuals = bent(&|b| b >= 1);
    }
    if residuals.is_empty() {
        return Err(Error::InsufficientData(
            "radio fit needs at least 1 uncensored bent-pipe row".into(),
        ));
    }
    let first_bend = residuals.iter().sum::<f64>() / residuals.len() as f64;
    RadioModel::new(intercept, slope, first_bend)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MolecularFit {
    pub model: MolecularModel,
    /// Geometric-mean per-bend factor before clamping.
    pub unclamped_bend_factor: f64,
    /// Per-bend factor implied by each bent row, `(topology, factor)`.
    pub row_factors: Vec<(PipeTopology, f64)>,
}

/// Fits the molecular law: least-squares line over straight rows, then the
/// per-bend factor as the geometric mean over bent rows of
/// `(measured / line)^(1 / bends)`, clamped to [`BEND_FACTOR_RANGE`].
pub fn fit_molecular(data: &[MeasurementRecord]) -> Result<MolecularFit> {
    let data = unique_configurations(data);
    let straight: Vec<(f64, f64)> = piped(&data)
        .filter(|r| r.topology.bend_count == 0)
        .filter_map(|r| r.delay_spread_s.detected().map(|v| (r.topology.total_length, v.mean)))
        .collect();
    if straight.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "molecular fit needs at least 2 straight-pipe rows with delay spreads, got {}",
            straight.len()
        )));
    }
    let (intercept, slope) = line_fit(&straight)?;

    let mut row_factors = Vec::new();
    for r in piped(&data).filter(|r| r.topology.bend_count >= 1) {
        let Some(v) = r.delay_spread_s.detected() else {
            continue;
        };
        let line = intercept + slope * r.topology.total_length;
        if !(line > 0.0) || !(v.mean > 0.0) {
            return Err(Error::domain(format!(
                "{}: non-positive delay spread in bend-factor fit",
                r.topology.display_name()
            )));
        }
        let factor = (v.mean / line).powf(1.0 / r.topology.bend_count as f64);
        row_factors.push((r.topology.clone(), factor));
    }
    if row_factors.is_empty() {
        return Err(Error::InsufficientData(
            "molecular fit needs at least 1 bent-pipe row with a delay spread".into(),
        ));
    }
    let log_mean = row_factors.iter().map(|(_, f)| f.ln()).sum::<f64>() / row_factors.len() as f64;
    let unclamped = log_mean.exp();
    let clamped = unclamped.clamp(BEND_FACTOR_RANGE.0, BEND_FACTOR_RANGE.1);
    Ok(MolecularFit {
        model: MolecularModel::new(intercept, slope, clamped)?,
        unclamped_bend_factor: unclamped,
        row_factors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Feasibility {
    pub radio_up: bool,
    pub molecular_up: bool,
}

/// Which links can be established through the topology.
pub fn classify_feasibility(rm: &RadioModel, mm: &MolecularModel, topo: &PipeTopology) -> Result<Feasibility> {
    match topo.endpoints {
        Endpoints::SealedTanks => Ok(Feasibility {
            radio_up: false,
            molecular_up: false,
        }),
        Endpoints::PipedTanks => {
            let tau = predict_delay_spread(mm, topo)?;
            Ok(Feasibility {
                radio_up: predict_rssi(rm, topo)?.is_detected(),
                molecular_up: tau.is_finite() && tau > 0.0,
            })
        }
        other => Err(Error::Unsupported(format!(
            "feasibility is only classified for sealed tanks, got {other:?}"
        ))),
    }
}

/// Feasibility the measurements themselves show.
pub fn observed_feasibility(rec: &MeasurementRecord) -> Feasibility {
    Feasibility {
        radio_up: rec.rssi_dbm.is_detected(),
        molecular_up: rec.delay_spread_s.is_detected(),
    }
}

fn fmt_num(v: f64) -> String {
    v.to_string()
}

/// Writes `shape,length_m,bends,rssi_dbm,rssi_sd,delay_s,delay_sd`, with
/// `NS` for censored cells.
pub fn write_dataset_csv<W: Write>(data: &[MeasurementRecord], out: W, header: &[String]) -> Result<()> {
    let mut out = out;
    for line in header {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DATASET_HEADER)?;
    let cells = |c: Censored<Reading>| match c {
        Censored::Detected(r) => (fmt_num(r.mean), fmt_num(r.sd)),
        Censored::NoSignal => (NO_SIGNAL_TOKEN.to_string(), NO_SIGNAL_TOKEN.to_string()),
    };
    for rec in data {
        let (rm, rs) = cells(rec.rssi_dbm);
        let (dm, ds) = cells(rec.delay_spread_s);
        w.write_record([
            rec.topology.shape_label.clone(),
            fmt_num(rec.topology.total_length),
            rec.topology.bend_count.to_string(),
            rm,
            rs,
            dm,
            ds,
        ])?;
    }
    w.flush()?;
    Ok(())
}

const DATASET_HEADER: [&str; 7] = [
    "shape", "length_m", "bends", "rssi_dbm", "rssi_sd", "delay_s", "delay_sd",
];

/// Reads the dataset CSV format written by [`write_dataset_csv`].
pub fn read_dataset_csv<R: Read>(input: R) -> Result<Vec<MeasurementRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let mut out = Vec::new();
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
            if rec.iter().ne(DATASET_HEADER.iter().copied()) {
                return Err(Error::parse(
                    line,
                    format!("expected header `{}`", DATASET_HEADER.join(",")),
                ));
            }
            header_seen = true;
            continue;
        }
        if rec.len() != DATASET_HEADER.len() {
            return Err(Error::parse(line, format!("expected 7 fields, got {}", rec.len())));
        }
        let num = |field: &str, name: &str| -> Result<f64> {
            field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(line, format!("{name}: not a finite number: {field:?}")))
        };
        let reading = |mean: &str, sd: &str, name: &str| -> Result<Censored<Reading>> {
            match (mean == NO_SIGNAL_TOKEN, sd == NO_SIGNAL_TOKEN) {
                (true, true) => Ok(Censored::NoSignal),
                (false, false) => Ok(Censored::Detected(Reading::new(num(mean, name)?, num(sd, name)?))),
                _ => Err(Error::parse(
                    line,
                    format!("{name}: mean and sd must both be {NO_SIGNAL_TOKEN} or both numeric"),
                )),
            }
        };
        let length = num(&rec[1], "length_m")?;
        let bends: u32 = rec[2]
            .parse()
            .map_err(|_| Error::parse(line, format!("bends: not a non-negative integer: {:?}", &rec[2])))?;
        let label = rec[0].to_string();
        let endpoints = Endpoints::from_label(&label);
        let topology =
            PipeTopology::new(length, bends, label, endpoints).map_err(|e| Error::parse(line, e.to_string()))?;
        let record = MeasurementRecord {
            topology,
            rssi_dbm: reading(&rec[3], &rec[4], "rssi")?,
            delay_spread_s: reading(&rec[5], &rec[6], "delay")?,
        };
        record.validate().map_err(|e| Error::parse(line, e.to_string()))?;
        out.push(record);
    }
    if !header_seen {
        return Err(Error::parse(1, "missing dataset header"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn find<'a>(data: &'a [MeasurementRecord], name: &str) -> &'a MeasurementRecord {
        data.iter()
            .find(|r| r.topology.display_name() == name)
            .unwrap_or_else(|| panic!("no row {name}"))
    }

    #[test]
    fn builtin_rows() {
        let data = builtin_dataset();
        assert_eq!(data.len(), 15);
        let s = find(&data, "Straight (0 bend, 3.6m)");
        assert_eq!(s.rssi_dbm, Censored::Detected(Reading::new(-79.0, 1.0)));
        assert_eq!(s.delay_spread_s, Censored::Detected(Reading::new(3.57, 0.4)));
        let l = find(&data, "L-Shape (1 bend, 4.8m)");
        assert_eq!(l.rssi_dbm, Censored::NoSignal);
        assert_eq!(l.delay_spread_s, Censored::Detected(Reading::new(6.24, 0.5)));
        let t = find(&data, "1 Sealed Tank (2.5m)");
        assert_eq!(t.rssi_dbm, Censored::NoSignal);
        assert_eq!(t.delay_spread_s, Censored::NoSignal);
        assert_eq!(t.topology.endpoints, Endpoints::SealedTanks);
        for r in &data {
            r.validate().unwrap();
        }
    }

    #[test]
    fn unique_configurations_keep_last_measurement() {
        let u = unique_configurations(&builtin_dataset());
        assert_eq!(u.len(), 12);
        let straight = u
            .iter()
            .find(|r| r.topology.bend_count == 0 && r.topology.total_length == 3.6)
            .unwrap();
        assert_eq!(straight.rssi_dbm.detected().unwrap().mean, -80.0);
        assert_eq!(
            u.iter()
                .filter(|r| r.topology.endpoints == Endpoints::PipedTanks)
                .count(),
            8
        );
    }

    #[test]
    fn radio_law_examples() {
        let m = RadioModel::new(-51.6, -8.0, -10.0).unwrap();
        let straight = PipeTopology::pipe(3.6, 0).unwrap();
        let Censored::Detected(v) = predict_rssi(&m, &straight).unwrap() else {
            panic!()
        };
        assert!((v - -80.4).abs() < 1e-9);
        let bent = PipeTopology::pipe(4.8, 1).unwrap();
        assert!((m.evaluate(4.8, 1) - -100.0).abs() < 1e-9);
        assert_eq!(predict_rssi(&m, &bent).unwrap(), Censored::NoSignal);
        assert_eq!(m.evaluate(0.0, 0), -51.6);
        assert_eq!(m.evaluate(3.0, 2), m.evaluate(3.0, 1));
    }

    #[test]
    fn molecular_law_examples() {
        let m = MolecularModel::new(1.41, 0.6, 1.45).unwrap();
        let t = predict_delay_spread(&m, &PipeTopology::pipe(4.8, 1).unwrap()).unwrap();
        assert!((t - 4.29 * 1.45).abs() < 1e-9);
        let m2 = MolecularModel::new(1.41, 0.6, 1.5).unwrap();
        let u = predict_delay_spread(&m2, &PipeTopology::pipe(3.9, 2).unwrap()).unwrap();
        assert!((u - 3.75 * 2.25).abs() < 1e-9);
        assert!((u - 8.81).abs() / 8.81 < 0.05);
        let z = MolecularModel::new(1.41, 0.6, 1.2345).unwrap();
        assert_eq!(z.evaluate(2.0, 0), 1.41 + 1.2);
    }

    #[test]
    fn baselines_are_not_modeled() {
        let rm = RadioModel::new(-50.0, -8.0, -10.0).unwrap();
        let free = PipeTopology::new(4.0, 0, "Free Space", Endpoints::FreeSpace).unwrap();
        assert!(matches!(predict_rssi(&rm, &free), Err(Error::Unsupported(_))));
    }

    #[test]
    fn comment_like_labels_are_rejected() {
        assert!(PipeTopology::new(1.0, 0, "#1", Endpoints::PipedTanks).is_err());
        let text = "shape,length_m,bends,rssi_dbm,rssi_sd,delay_s,delay_sd\n\"#x\",1,0,NS,NS,1,0.1\n";
        assert!(matches!(
            read_dataset_csv(text.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn degenerate_radio_fit() {
        let rec = row("Straight", 2.0, 0, Some((-60.0, 1.0)), Some((2.0, 0.1)));
        let bent = row("L-Shape", 2.0, 1, Some((-75.0, 1.0)), Some((3.0, 0.1)));
        let mut dup = rec.clone();
        dup.topology.shape_label = "Other".into();
        let err = fit_radio(&[rec.clone(), dup, bent.clone()]).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
        // same length twice, different readings: still degenerate
        let err = line_fit(&[(2.0, -60.0), (2.0, -61.0)]).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    #[test]
    fn all_censored_fit_fails() {
        let data: Vec<_> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&l| row("Straight", l, 0, None, None))
            .collect();
        assert!(fit_radio(&data).is_err());
        assert!(fit_molecular(&data).is_err());
    }

    #[test]
    fn sealed_tanks_block_both_links() {
        let rm = RadioModel::new(-50.0, -8.0, -10.0).unwrap();
        let mm = MolecularModel::new(1.4, 0.6, 1.4).unwrap();
        let tank = PipeTopology::new(2.5, 0, "1 Sealed Tank", Endpoints::SealedTanks).unwrap();
        let f = classify_feasibility(&rm, &mm, &tank).unwrap();
        assert!(!f.radio_up && !f.molecular_up);
    }

    #[test]
    fn dataset_csv_round_trip() {
        let data = builtin_dataset();
        let mut buf = Vec::new();
        write_dataset_csv(&data, &mut buf, &["builtin".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\nL-Shape,4.8,1,NS,NS,6.24,0.5\n"));
        assert_eq!(read_dataset_csv(buf.as_slice()).unwrap(), data);
    }

    #[test]
    fn dataset_csv_errors() {
        let h = "shape,length_m,bends,rssi_dbm,rssi_sd,delay_s,delay_sd\n";
        assert!(read_dataset_csv(format!("{h}Straight,1,0,NS,1,2,0.1\n").as_bytes()).is_err());
        assert!(read_dataset_csv(format!("{h}Straight,1,-1,-60,1,2,0.1\n").as_bytes()).is_err());
        assert!(read_dataset_csv(format!("{h}Straight,0,0,-60,1,2,0.1\n").as_bytes()).is_err());
        assert!(read_dataset_csv(format!("{h}Straight,1,0,-120,1,2,0.1\n").as_bytes()).is_err());
        assert!(read_dataset_csv("a,b\n".as_bytes()).is_err());
        assert!(read_dataset_csv(h.as_bytes()).unwrap().is_empty());
    }
}
