//! Unit conventions and decibel/wavelength conversions.
//!
//! Internal units everywhere: frequency THz, distance km, power W, time ps.
//! The THz/ps pairing makes frequency-time products dimensionless, which
//! keeps every argument of the closed-form expression O(1)..O(1e3).

/// Speed of light in nm·THz (equivalently nm/ps).
pub const C_NM_THZ: f64 = 299_792.458;

/// ln(10)/10: dB/km to 1/km power attenuation.
pub fn db_per_km_to_inv_km(db: f64) -> f64 {
    db * std::f64::consts::LN_10 / 10.0
}

pub fn inv_km_to_db_per_km(alpha: f64) -> f64 {
    alpha * 10.0 / std::f64::consts::LN_10
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watt_to_dbm(watt: f64) -> f64 {
    10.0 * (watt * 1e3).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn wavelength_nm_to_thz(lambda_nm: f64) -> f64 {
    C_NM_THZ / lambda_nm
}

pub fn thz_to_wavelength_nm(f_thz: f64) -> f64 {
    C_NM_THZ / f_thz
}
