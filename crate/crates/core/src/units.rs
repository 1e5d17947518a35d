//! Physical constants and decibel helpers.

use std::f64::consts::PI;

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;

/// Free-space wavelength in meters.
pub fn wavelength(f_hz: f64) -> f64 {
    C0 / f_hz
}

/// Free-space wavenumber in rad/m.
pub fn wavenumber(f_hz: f64) -> f64 {
    2.0 * PI * f_hz / C0
}

/// Voltage ratio to decibels. Zero maps to negative infinity.
pub fn mag_to_db(mag: f64) -> f64 {
    20.0 * mag.log10()
}

pub fn db_to_mag(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_round_trip() {
        for db in [-120.0, -41.28, -3.0, 0.0, 6.0] {
            assert!((mag_to_db(db_to_mag(db)) - db).abs() < 1e-12);
        }
        assert_eq!(mag_to_db(0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn wavelength_at_5p9ghz() {
        assert!((wavelength(5.9e9) - 0.050_812_28).abs() < 1e-7);
        assert!((wavenumber(5.9e9) * wavelength(5.9e9) - 2.0 * PI).abs() < 1e-12);
    }
}
