//! Bundled synthetic wideband scenario: a 452-channel S+C+L plan over a
//! synthetic ultra-low-loss fiber.
//!
//! The measured spectra of the fiber this scenario is patterned after are
//! not publicly available as data, so the tables here are synthetic
//! stand-ins with the right shape and magnitude: a parabolic attenuation
//! spectrum with a 0.17 dB/km floor and a triangular Raman gain profile
//! peaking at a 14 THz shift and vanishing at 20 THz. The repository's
//! `data/` CSV files are generated from these functions.

use crate::model::{
    beta2_at_shift, build_channel_plan, convert_dispersion, BandSegment, ChannelPlan, FiberProfile,
};
use crate::units::{db_per_km_to_inv_km, dbm_to_watt, wavelength_nm_to_thz};

/// Channel bandwidth (40 GBd), THz.
pub const SYMBOL_RATE_THZ: f64 = 0.04;
/// Center-to-center spacing, THz.
pub const SPACING_THZ: f64 = 0.04005;
/// Uniform launch power, dBm.
pub const LAUNCH_POWER_DBM: f64 = -2.0;

pub const L_BAND_COUNT: usize = 160;
pub const C_BAND_COUNT: usize = 100;
pub const S_BAND_COUNT: usize = 192;
pub const CHANNEL_COUNT: usize = L_BAND_COUNT + C_BAND_COUNT + S_BAND_COUNT;

/// First L-band channel center, THz absolute.
const L_BAND_START_THZ: f64 = 184.5;
/// Guard band between the L and C blocks (~5 nm), THz.
const C_L_GAP_THZ: f64 = 0.610;
/// Guard band between the C and S blocks (~10 nm), THz.
const S_C_GAP_THZ: f64 = 1.289;

/// Attenuation parabola: dB/km floor and curvature around the minimum.
const ATTEN_MIN_DB_PER_KM: f64 = 0.17;
const ATTEN_MIN_FREQ_THZ: f64 = 191.0;
const ATTEN_CURVATURE_DB_PER_THZ2: f64 = 2.0e-4;

/// Triangular Raman gain: linear rise to the peak shift, linear decay to
/// zero at the cutoff. 1/(W·km·THz) and THz.
pub const RAMAN_SLOPE: f64 = 0.0284;
pub const RAMAN_PEAK_SHIFT_THZ: f64 = 14.0;
pub const RAMAN_CUTOFF_SHIFT_THZ: f64 = 20.0;

/// Dispersion figures quoted for the reference fiber.
pub const DISPERSION_D: f64 = 18.0;
pub const DISPERSION_SLOPE: f64 = 0.067;
pub const DISPERSION_LAMBDA_NM: f64 = 1540.0;
pub const GAMMA: f64 = 1.2;
pub const SPAN_LENGTH_KM: f64 = 80.0;

fn c_band_start() -> f64 {
    L_BAND_START_THZ + L_BAND_COUNT as f64 * SPACING_THZ + C_L_GAP_THZ
}

fn s_band_start() -> f64 {
    c_band_start() + C_BAND_COUNT as f64 * SPACING_THZ + S_C_GAP_THZ
}

/// The three band segments (L, C, S in ascending frequency) with a uniform
/// modulation format.
pub fn scl_band_segments(excess_kurtosis: f64) -> Vec<BandSegment> {
    let seg = |start: f64, count: usize| BandSegment {
        start_frequency: start,
        channel_count: count,
        symbol_rate: SYMBOL_RATE_THZ,
        spacing: SPACING_THZ,
        launch_power: dbm_to_watt(LAUNCH_POWER_DBM),
        excess_kurtosis,
    };
    vec![
        seg(L_BAND_START_THZ, L_BAND_COUNT),
        seg(c_band_start(), C_BAND_COUNT),
        seg(s_band_start(), S_BAND_COUNT),
    ]
}

/// The full 452-channel plan, reference frequency at the spectral center.
pub fn scl_plan(excess_kurtosis: f64) -> ChannelPlan {
    build_channel_plan(&scl_band_segments(excess_kurtosis), None)
        .expect("bundled plan is valid by construction")
}

/// Channel index ranges of the L, C and S blocks within [`scl_plan`].
pub fn scl_band_ranges() -> (
    std::ops::Range<usize>,
    std::ops::Range<usize>,
    std::ops::Range<usize>,
) {
    (
        0..L_BAND_COUNT,
        L_BAND_COUNT..L_BAND_COUNT + C_BAND_COUNT,
        L_BAND_COUNT + C_BAND_COUNT..CHANNEL_COUNT,
    )
}

/// Synthetic attenuation spectrum in dB/km, 0.5 THz sampling over
/// 183..207 THz.
pub fn attenuation_db_table() -> Vec<(f64, f64)> {
    let mut rows = Vec::new();
    let mut f = 183.0;
    while f <= 207.0 + 1e-9 {
        let df = f - ATTEN_MIN_FREQ_THZ;
        rows.push((f, ATTEN_MIN_DB_PER_KM + ATTEN_CURVATURE_DB_PER_THZ2 * df * df));
        f += 0.5;
    }
    rows
}

/// Frequency-flat attenuation at the parabola floor, same sampling.
pub fn flat_attenuation_db_table() -> Vec<(f64, f64)> {
    attenuation_db_table()
        .into_iter()
        .map(|(f, _)| (f, ATTEN_MIN_DB_PER_KM))
        .collect()
}

/// Synthetic triangular Raman gain table in 1/(W·km), 0.5 THz sampling of
/// the shift axis up to the cutoff.
pub fn raman_gain_table() -> Vec<(f64, f64)> {
    let peak = RAMAN_SLOPE * RAMAN_PEAK_SHIFT_THZ;
    let mut rows = Vec::new();
    let mut s = 0.0;
    while s <= RAMAN_CUTOFF_SHIFT_THZ + 1e-9 {
        let g = if s <= RAMAN_PEAK_SHIFT_THZ {
            RAMAN_SLOPE * s
        } else {
            peak * (RAMAN_CUTOFF_SHIFT_THZ - s) / (RAMAN_CUTOFF_SHIFT_THZ - RAMAN_PEAK_SHIFT_THZ)
        };
        rows.push((s, g));
        s += 0.5;
    }
    rows
}

fn to_linear(table: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    table
        .into_iter()
        .map(|(f, db)| (f, db_per_km_to_inv_km(db)))
        .collect()
}

/// Taylor dispersion coefficients re-referenced from the quoted wavelength
/// to the plan's reference frequency.
pub fn scl_dispersion(reference_thz: f64) -> (f64, f64) {
    let (beta2, beta3) =
        convert_dispersion(DISPERSION_D, DISPERSION_SLOPE, DISPERSION_LAMBDA_NM).unwrap();
    let f_quoted = wavelength_nm_to_thz(DISPERSION_LAMBDA_NM);
    (beta2_at_shift(beta2, beta3, reference_thz - f_quoted), beta3)
}

/// The bundled wideband fiber: parabolic loss, triangular Raman gain.
pub fn scl_fiber() -> FiberProfile {
    let reference = scl_plan(0.0).reference_frequency();
    let (beta2, beta3) = scl_dispersion(reference);
    FiberProfile::new(
        to_linear(attenuation_db_table()),
        raman_gain_table(),
        beta2,
        beta3,
        GAMMA,
        SPAN_LENGTH_KM,
    )
    .expect("bundled fiber is valid by construction")
}

/// Frequency-flat comparison fiber: flat loss, no ISRS, no dispersion
/// slope. Isolates the plan geometry from every frequency-dependent fiber
/// effect.
pub fn scl_fiber_flat_no_isrs() -> FiberProfile {
    let reference = scl_plan(0.0).reference_frequency();
    let (beta2, _) = scl_dispersion(reference);
    let zero_gain: Vec<(f64, f64)> = raman_gain_table()
        .into_iter()
        .map(|(s, _)| (s, 0.0))
        .collect();
    FiberProfile::new(
        to_linear(flat_attenuation_db_table()),
        zero_gain,
        beta2,
        0.0,
        GAMMA,
        SPAN_LENGTH_KM,
    )
    .expect("flat fiber is valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn plan_matches_published_headline_figures() {
        let plan = scl_plan(0.0);
        assert_eq!(plan.len(), 452);
        // Total power: 452 channels at -2 dBm.
        assert_relative_eq!(plan.total_power(), 452.0 * 1e-3 * 10f64.powf(-0.2), max_relative = 1e-12);
        assert_relative_eq!(plan.total_power(), 0.2852, max_relative = 1e-3);
        // Occupied spectrum close to 20 THz.
        let span = plan.channels().last().unwrap().center_frequency
            - plan.channels()[0].center_frequency;
        assert!((span - 20.0).abs() < 0.1, "span {span} THz");
    }

    #[test]
    fn bands_cover_scl_wavelengths() {
        let plan = scl_plan(0.0);
        let (l, _, s) = scl_band_ranges();
        let lambda_first = plan.wavelength_nm(l.start);
        let lambda_last = plan.wavelength_nm(s.end - 1);
        assert!(lambda_first > 1620.0 && lambda_first < 1630.0, "{lambda_first}");
        assert!(lambda_last > 1460.0 && lambda_last < 1470.0, "{lambda_last}");
    }

    #[test]
    fn fiber_tables_cover_the_plan() {
        let plan = scl_plan(0.0);
        let fiber = scl_fiber();
        for i in 0..plan.len() {
            assert!(fiber.attenuation_at(plan.absolute_frequency(i)).is_ok());
        }
    }

    #[test]
    fn attenuation_has_its_floor_at_the_minimum() {
        let fiber = scl_fiber();
        let floor = db_per_km_to_inv_km(ATTEN_MIN_DB_PER_KM);
        let at_min = fiber.attenuation_at(ATTEN_MIN_FREQ_THZ).unwrap();
        assert_relative_eq!(at_min, floor, max_relative = 1e-12);
        assert!(fiber.attenuation_at(204.0).unwrap() > at_min);
        assert!(fiber.attenuation_at(185.0).unwrap() > at_min);
    }

    #[test]
    fn raman_gain_peaks_at_fourteen_thz() {
        let fiber = scl_fiber();
        assert_relative_eq!(
            fiber.raman_gain_at(RAMAN_PEAK_SHIFT_THZ),
            RAMAN_SLOPE * RAMAN_PEAK_SHIFT_THZ,
            max_relative = 1e-12
        );
        assert_eq!(fiber.raman_gain_at(RAMAN_CUTOFF_SHIFT_THZ), 0.0);
        assert!(fiber.raman_gain_at(17.0) > 0.0);
    }

    #[test]
    fn dispersion_is_rereferenced_to_plan_center() {
        let reference = scl_plan(0.0).reference_frequency();
        let (beta2, beta3) = scl_dispersion(reference);
        // The plan center sits below the quoted 1540 nm frequency, so the
        // local beta2 is slightly more negative.
        assert!(beta2 < -22.66);
        assert!(beta2 > -23.0);
        assert_relative_eq!(beta3, 0.14326425710446783, max_relative = 1e-12);
    }
}
