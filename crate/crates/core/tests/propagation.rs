use std::io::Cursor;

use molcomm::propagation::{
    builtin_dataset, classify_feasibility, fit_molecular, fit_radio, predict_delay_spread, predict_rssi,
    read_dataset_csv, unique_configurations, write_dataset_csv, Censored, Endpoints, MeasurementRecord, PipeTopology,
    RadioModel, Reading, BEND_FACTOR_RANGE,
};

/// Least-squares slope and intercept from the normal equations.
fn normal_equations(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (sxx, sxy) = points
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + p.0 * p.0, a.1 + p.0 * p.1));
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    ((sy - slope * sx) / n, slope)
}

fn record(label: &str, length: f64, bends: u32, rssi: Option<f64>, delay: Option<f64>) -> MeasurementRecord {
    let c = |v: Option<f64>| v.map_or(Censored::NoSignal, |m| Censored::Detected(Reading::new(m, 0.5)));
    MeasurementRecord {
        topology: PipeTopology::new(length, bends, label, Endpoints::from_label(label)).unwrap(),
        rssi_dbm: c(rssi),
        delay_spread_s: c(delay),
    }
}

fn find<'a>(data: &'a [MeasurementRecord], label: &str, length: f64) -> &'a MeasurementRecord {
    data.iter()
        .find(|r| r.topology.shape_label == label && r.topology.total_length == length)
        .unwrap()
}

#[test]
fn builtin_rows() {
    let data = builtin_dataset();
    let straight = find(&data, "Straight", 3.6);
    assert_eq!(straight.rssi_dbm, Censored::Detected(Reading::new(-79.0, 1.0)));
    assert_eq!(straight.delay_spread_s, Censored::Detected(Reading::new(3.57, 0.4)));
    let l = find(&data, "L-Shape", 4.8);
    assert_eq!(l.rssi_dbm, Censored::NoSignal);
    assert_eq!(l.delay_spread_s, Censored::Detected(Reading::new(6.24, 0.5)));
    let tank = find(&data, "1 Sealed Tank", 2.5);
    assert_eq!(
        (tank.rssi_dbm, tank.delay_spread_s),
        (Censored::NoSignal, Censored::NoSignal)
    );
    assert_eq!(unique_configurations(&data).len(), 12);
}

#[test]
fn radio_fit_matches_normal_equations() {
    let m = fit_radio(&builtin_dataset()).unwrap();
    let (a, b) = normal_equations(&[(1.3, -62.0), (2.5, -71.0), (3.6, -80.0)]);
    assert!((m.intercept_dbm - a).abs() < 1e-9 && (m.slope_db_per_m - b).abs() < 1e-9);
    assert!((m.slope_db_per_m + 7.83).abs() < 0.01);
    // mean one-bend residual over the two uncensored one-bend rows
    let bend = ((-92.0 - (a + b * 3.7)) + (-87.0 - (a + b * 2.6))) / 2.0;
    assert!((m.first_bend_loss_db - bend).abs() < 1e-9);
}

#[test]
fn radio_model_arithmetic() {
    let m = RadioModel::new(-51.6, -8.0, -10.0).unwrap();
    assert!((m.evaluate(3.6, 0) + 80.4).abs() < 1e-9);
    assert_eq!(m.evaluate(0.0, 0), -51.6);
    let l = PipeTopology::pipe(4.8, 1).unwrap();
    assert_eq!(predict_rssi(&m, &l).unwrap(), Censored::NoSignal);
}

#[test]
fn radio_fit_recovers_exact_law() {
    let law = |l: f64, bends: u32| -50.0 - 8.0 * l + if bends > 0 { -12.0 } else { 0.0 };
    let data: Vec<_> = [(1.0, 0), (2.0, 0), (3.5, 0), (2.2, 1), (3.0, 2)]
        .iter()
        .map(|&(l, b)| record("Pipe", l, b, Some(law(l, b)), Some(1.0 + l)))
        .collect();
    let m = fit_radio(&data).unwrap();
    assert!((m.intercept_dbm + 50.0).abs() < 1e-9);
    assert!((m.slope_db_per_m + 8.0).abs() < 1e-9);
    assert!((m.first_bend_loss_db + 12.0).abs() < 1e-9);
}

#[test]
fn molecular_fit_matches_normal_equations() {
    let fit = fit_molecular(&builtin_dataset()).unwrap();
    let (a, b) = normal_equations(&[(1.3, 2.20), (2.5, 2.91), (3.6, 3.57)]);
    assert!((fit.model.tau_intercept_s - a).abs() < 1e-9 && (fit.model.slope_s_per_m - b).abs() < 1e-9);
    assert!((b - 0.595).abs() < 1e-3 && (a - 1.41).abs() < 0.02);
    assert_eq!(fit.row_factors.len(), 5);
    for (topo, f) in &fit.row_factors {
        assert!((1.18..=1.57).contains(f), "{}: {f}", topo.display_name());
    }
    let (lo, hi) = BEND_FACTOR_RANGE;
    assert!((lo..=hi).contains(&fit.unclamped_bend_factor));
    assert_eq!(fit.model.bend_factor, fit.unclamped_bend_factor);
}

#[test]
fn molecular_fit_recovers_exact_law() {
    let law = |l: f64, bends: u32| (1.2 + 0.7 * l) * 1.4f64.powi(bends as i32);
    let data: Vec<_> = [(1.0, 0), (2.0, 0), (3.0, 0), (2.5, 1), (4.0, 2)]
        .iter()
        .map(|&(l, b)| record("Pipe", l, b, None, Some(law(l, b))))
        .collect();
    let m = fit_molecular(&data).unwrap().model;
    assert!((m.tau_intercept_s - 1.2).abs() < 1e-9);
    assert!((m.slope_s_per_m - 0.7).abs() < 1e-9);
    assert!((m.bend_factor - 1.4).abs() < 1e-9);
    let t = PipeTopology::pipe(3.3, 0).unwrap();
    assert!((predict_delay_spread(&m, &t).unwrap() - law(3.3, 0)).abs() < 1e-9);
}

#[test]
fn feasibility_examples() {
    let data = builtin_dataset();
    let rm = fit_radio(&data).unwrap();
    let mm = fit_molecular(&data).unwrap().model;
    let f = classify_feasibility(&rm, &mm, &PipeTopology::pipe(4.8, 1).unwrap()).unwrap();
    assert!(!f.radio_up && f.molecular_up);
    let f = classify_feasibility(&rm, &mm, &PipeTopology::pipe(1.3, 0).unwrap()).unwrap();
    assert!(f.radio_up && f.molecular_up);
    let tank = PipeTopology::new(2.5, 0, "1 Sealed Tank", Endpoints::SealedTanks).unwrap();
    let f = classify_feasibility(&rm, &mm, &tank).unwrap();
    assert!(!f.radio_up && !f.molecular_up);
}

#[test]
fn dataset_csv_round_trips() {
    let data = builtin_dataset();
    let mut buf = Vec::new();
    write_dataset_csv(&data, &mut buf, &["generated".to_string()]).unwrap();
    assert_eq!(read_dataset_csv(Cursor::new(buf)).unwrap(), data);
}

#[test]
fn censored_only_dataset_cannot_be_fitted() {
    let data: Vec<_> = [1.0, 2.0, 3.0]
        .iter()
        .map(|&l| record("Pipe", l, 0, None, None))
        .collect();
    assert!(fit_radio(&data).is_err());
    assert!(fit_molecular(&data).is_err());
}
