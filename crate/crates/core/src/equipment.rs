//! Test-bed equipment figures. Only the receiver sensitivity enters any
//! model; the rest is carried as metadata for reports.

/// Zigbee receiver sensitivity, dBm.
pub const RECEIVER_SENSITIVITY_DBM: f64 = -99.0;
/// Zigbee transmit power, mW.
pub const TRANSMIT_POWER_MW: f64 = 1.0;
pub const PEAK_ANTENNA_GAIN_DBI: f64 = 2.1;
pub const MEAN_ANTENNA_GAIN_DBI: f64 = -1.2;
pub const RADIO_BAND_GHZ: f64 = 2.4;
pub const RADIO_CHANNELS: u32 = 16;

/// Spray duration of one molecular emission, seconds.
pub const SPRAY_DURATION_S: f64 = 0.5;
/// Fan-induced air flow, m/s. Not mapped onto any model parameter.
pub const AIR_FLOW_M_PER_S: f64 = 14.0;

pub const PIPE_THICKNESS_M: f64 = 0.002;
pub const PIPE_DIAMETER_M: f64 = 0.04;
pub const TANK_VOLUME_CM3: f64 = 3600.0;
/// Approximate waveguide band of the pipe, GHz.
pub const PIPE_WAVEGUIDE_BAND_GHZ: (f64, f64) = (4.0, 6.0);

/// Converts milliwatts to dBm.
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// `(name, value)` rows describing the test bed, for report headers.
pub fn metadata() -> Vec<(&'static str, String)> {
    vec![
        ("radio_module", "Telegesis ETRX357 (Zigbee)".into()),
        ("radio_band_ghz", RADIO_BAND_GHZ.to_string()),
        ("radio_channels", RADIO_CHANNELS.to_string()),
        ("transmit_power_dbm", mw_to_dbm(TRANSMIT_POWER_MW).to_string()),
        ("receiver_sensitivity_dbm", RECEIVER_SENSITIVITY_DBM.to_string()),
        ("peak_antenna_gain_dbi", PEAK_ANTENNA_GAIN_DBI.to_string()),
        ("molecular_sensor", "MQ3 alcohol sensor".into()),
        ("chemical_carrier", "alcohol".into()),
        ("sensor_response", "linear".into()),
        ("air_flow_m_per_s", AIR_FLOW_M_PER_S.to_string()),
        ("pipe_diameter_m", PIPE_DIAMETER_M.to_string()),
        ("pipe_thickness_m", PIPE_THICKNESS_M.to_string()),
        ("tank_volume_cm3", TANK_VOLUME_CM3.to_string()),
        ("pipe_material", "iron".into()),
        ("pipe_bend_deg", "90".into()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_milliwatt_is_zero_dbm() {
        assert_eq!(mw_to_dbm(TRANSMIT_POWER_MW), 0.0);
    }
}
