//! Domain types: fiber profile, channel plan, link specification, and the
//! parameter conversions shared by all pipeline stages.
//!
//! All types are immutable after construction and validate their invariants
//! in the constructor; operations are pure functions.

use crate::error::{Error, Result};
use crate::units::C_NM_THZ;

/// A sampled spectral table with linear interpolation, sorted by strictly
/// increasing abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTable {
    points: Vec<(f64, f64)>,
}

impl SpectralTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("spectral table is empty"));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::invalid(format!(
                    "spectral table abscissae must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::invalid("spectral table contains non-finite entries"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn min_abscissa(&self) -> f64 {
        self.points[0].0
    }

    pub fn max_abscissa(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    /// Linear interpolation; `None` outside the tabulated range.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        if x < self.min_abscissa() || x > self.max_abscissa() {
            return None;
        }
        let idx = self
            .points
            .partition_point(|&(px, _)| px <= x)
            .min(self.points.len() - 1);
        if idx == 0 {
            return Some(self.points[0].1);
        }
        let (x0, y0) = self.points[idx - 1];
        let (x1, y1) = self.points[idx];
        if x == x0 {
            return Some(y0);
        }
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }
}

/// Fiber parameters over one span.
///
/// The attenuation table maps absolute frequency (THz) to power attenuation
/// (1/km). The Raman gain table maps frequency shift (THz, >= 0) to the
/// normalized gain coefficient g_R/A_eff (1/(W·km)); lookups extend it
/// antisymmetrically to negative shifts and clamp to zero beyond the last
/// sample. Dispersion is carried as beta2/beta3 Taylor coefficients at the
/// channel plan's reference frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberProfile {
    attenuation: SpectralTable,
    raman_gain: SpectralTable,
    /// ps^2/km at the reference frequency.
    pub beta2: f64,
    /// ps^3/km.
    pub beta3: f64,
    /// Nonlinearity coefficient, 1/(W·km).
    pub gamma: f64,
    /// Span length, km.
    pub span_length: f64,
}

impl FiberProfile {
    pub fn new(
        attenuation: Vec<(f64, f64)>,
        raman_gain: Vec<(f64, f64)>,
        beta2: f64,
        beta3: f64,
        gamma: f64,
        span_length: f64,
    ) -> Result<Self> {
        let attenuation = SpectralTable::new(attenuation)
            .map_err(|e| Error::invalid(format!("attenuation table: {e}")))?;
        if attenuation.points().iter().any(|&(_, a)| a < 0.0) {
            return Err(Error::invalid("attenuation must be non-negative"));
        }
        let raman_gain = SpectralTable::new(raman_gain)
            .map_err(|e| Error::invalid(format!("raman gain table: {e}")))?;
        if raman_gain.min_abscissa() < 0.0 {
            return Err(Error::invalid("raman gain shifts must be >= 0"));
        }
        if raman_gain.min_abscissa() == 0.0 && raman_gain.points()[0].1 != 0.0 {
            return Err(Error::invalid("raman gain at zero shift must be 0"));
        }
        if !(span_length > 0.0) {
            return Err(Error::invalid("span_length must be positive"));
        }
        if !(gamma >= 0.0) {
            return Err(Error::invalid("gamma must be non-negative"));
        }
        if !beta2.is_finite() || !beta3.is_finite() {
            return Err(Error::invalid("dispersion coefficients must be finite"));
        }
        Ok(Self {
            attenuation,
            raman_gain,
            beta2,
            beta3,
            gamma,
            span_length,
        })
    }

    /// Flat-loss fiber over `[f_min, f_max]` THz, mostly for tests and
    /// reduced configurations.
    pub fn flat_loss(
        alpha_inv_km: f64,
        f_min: f64,
        f_max: f64,
        raman_gain: Vec<(f64, f64)>,
        beta2: f64,
        beta3: f64,
        gamma: f64,
        span_length: f64,
    ) -> Result<Self> {
        Self::new(
            vec![(f_min, alpha_inv_km), (f_max, alpha_inv_km)],
            raman_gain,
            beta2,
            beta3,
            gamma,
            span_length,
        )
    }

    pub fn attenuation_table(&self) -> &SpectralTable {
        &self.attenuation
    }

    pub fn raman_gain_table(&self) -> &SpectralTable {
        &self.raman_gain
    }

    /// Power attenuation (1/km) at an absolute frequency. Errors if the
    /// frequency falls outside the tabulated spectrum.
    pub fn attenuation_at(&self, f_abs_thz: f64) -> Result<f64> {
        self.attenuation.interpolate(f_abs_thz).ok_or_else(|| {
            Error::invalid(format!(
                "frequency {f_abs_thz} THz outside attenuation table [{}, {}]",
                self.attenuation.min_abscissa(),
                self.attenuation.max_abscissa()
            ))
        })
    }

    /// Raman gain coefficient for a signed frequency shift, 1/(W·km).
    ///
    /// Positive shift means the interferer sits at a higher frequency, so
    /// the channel of interest is amplified (power flows toward lower
    /// frequencies). Antisymmetric in the shift; zero beyond the table.
    pub fn raman_gain_at(&self, shift_thz: f64) -> f64 {
        let mag = shift_thz.abs();
        let first = self.raman_gain.points()[0];
        let g = if mag > self.raman_gain.max_abscissa() {
            0.0
        } else if mag < first.0 {
            // Table starting above zero shift: anchor to g(0) = 0.
            first.1 * mag / first.0
        } else {
            self.raman_gain.interpolate(mag).unwrap_or(0.0)
        };
        if shift_thz < 0.0 {
            -g
        } else {
            g
        }
    }

    /// Returns a copy with every Raman gain entry set to zero (ISRS
    /// disabled), keeping the rest of the profile.
    pub fn without_isrs(&self) -> Self {
        let zeroed: Vec<(f64, f64)> = self
            .raman_gain
            .points()
            .iter()
            .map(|&(s, _)| (s, 0.0))
            .collect();
        Self {
            raman_gain: SpectralTable { points: zeroed },
            ..self.clone()
        }
    }
}

/// One WDM channel. The center frequency is relative to the plan's
/// reference frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    /// THz, relative to the reference frequency.
    pub center_frequency: f64,
    /// THz.
    pub bandwidth: f64,
    /// W.
    pub launch_power: f64,
    /// Excess kurtosis of the modulation format; 0 for Gaussian, -1 for
    /// constant-modulus.
    pub excess_kurtosis: f64,
}

impl Channel {
    pub fn new(
        center_frequency: f64,
        bandwidth: f64,
        launch_power: f64,
        excess_kurtosis: f64,
    ) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return Err(Error::invalid("channel bandwidth must be positive"));
        }
        if !(launch_power > 0.0) {
            return Err(Error::invalid("channel launch power must be positive"));
        }
        if !(-2.0..=0.0).contains(&excess_kurtosis) {
            return Err(Error::invalid(format!(
                "excess kurtosis {excess_kurtosis} outside the supported [-2, 0] range"
            )));
        }
        if !center_frequency.is_finite() {
            return Err(Error::invalid("channel frequency must be finite"));
        }
        Ok(Self {
            center_frequency,
            bandwidth,
            launch_power,
            excess_kurtosis,
        })
    }
}

/// An ordered, non-overlapping set of channels around a reference frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPlan {
    channels: Vec<Channel>,
    /// THz, absolute.
    reference_frequency: f64,
    /// W; always the recomputed sum of launch powers.
    total_power: f64,
}

impl ChannelPlan {
    pub fn new(channels: Vec<Channel>, reference_frequency: f64) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::invalid("channel plan is empty"));
        }
        if !reference_frequency.is_finite() || reference_frequency <= 0.0 {
            return Err(Error::invalid("reference frequency must be positive"));
        }
        for w in channels.windows(2) {
            if !(w[1].center_frequency > w[0].center_frequency) {
                return Err(Error::invalid(
                    "channels must be sorted by strictly increasing frequency",
                ));
            }
            let min_gap = 0.5 * (w[0].bandwidth + w[1].bandwidth);
            let gap = w[1].center_frequency - w[0].center_frequency;
            if gap + 1e-12 < min_gap {
                return Err(Error::invalid(format!(
                    "channels at {} and {} THz overlap (spacing {:.6} < required {:.6})",
                    w[0].center_frequency, w[1].center_frequency, gap, min_gap
                )));
            }
        }
        let total_power = crate::kahan::sum(
            &channels.iter().map(|c| c.launch_power).collect::<Vec<_>>(),
        );
        Ok(Self {
            channels,
            reference_frequency,
            total_power,
        })
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn reference_frequency(&self) -> f64 {
        self.reference_frequency
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    pub fn absolute_frequency(&self, idx: usize) -> f64 {
        self.reference_frequency + self.channels[idx].center_frequency
    }

    pub fn wavelength_nm(&self, idx: usize) -> f64 {
        C_NM_THZ / self.absolute_frequency(idx)
    }

    /// Copy of the plan with every launch power scaled by `factor`.
    pub fn scaled_power(&self, factor: f64) -> Result<Self> {
        let channels = self
            .channels
            .iter()
            .map(|c| Channel {
                launch_power: c.launch_power * factor,
                ..*c
            })
            .collect();
        Self::new(channels, self.reference_frequency)
    }

    /// Copy of the plan with a uniform excess kurtosis.
    pub fn with_kurtosis(&self, kurtosis: f64) -> Result<Self> {
        let channels = self
            .channels
            .iter()
            .map(|c| {
                Channel::new(c.center_frequency, c.bandwidth, c.launch_power, kurtosis)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(channels, self.reference_frequency)
    }
}

/// A contiguous block of equally spaced channels, used to assemble plans
/// band by band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSegment {
    /// Absolute center frequency of the segment's first channel, THz.
    pub start_frequency: f64,
    pub channel_count: usize,
    /// Channel bandwidth (symbol rate), THz.
    pub symbol_rate: f64,
    /// Center-to-center spacing, THz.
    pub spacing: f64,
    /// Per-channel launch power, W.
    pub launch_power: f64,
    /// Excess kurtosis of the segment's modulation format.
    pub excess_kurtosis: f64,
}

/// Expands band segments into a sorted, validated plan.
///
/// The reference frequency defaults to the spectral center (mean of the
/// lowest and highest channel frequencies) unless overridden.
pub fn build_channel_plan(
    segments: &[BandSegment],
    reference_override: Option<f64>,
) -> Result<ChannelPlan> {
    if segments.is_empty() {
        return Err(Error::invalid("no band segments given"));
    }
    let mut absolute: Vec<(f64, BandSegment)> = Vec::new();
    for seg in segments {
        if seg.channel_count == 0 {
            return Err(Error::invalid("band segment has zero channels"));
        }
        if !(seg.spacing > 0.0) {
            return Err(Error::invalid("band segment spacing must be positive"));
        }
        for k in 0..seg.channel_count {
            absolute.push((seg.start_frequency + k as f64 * seg.spacing, *seg));
        }
    }
    absolute.sort_by(|a, b| a.0.total_cmp(&b.0));

    let f_min = absolute.first().unwrap().0;
    let f_max = absolute.last().unwrap().0;
    let reference = reference_override.unwrap_or(0.5 * (f_min + f_max));

    let channels = absolute
        .into_iter()
        .map(|(f_abs, seg)| {
            Channel::new(
                f_abs - reference,
                seg.symbol_rate,
                seg.launch_power,
                seg.excess_kurtosis,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    ChannelPlan::new(channels, reference)
}

/// Optional ASE/transceiver SNR contributions, dB.
#[derive(Debug, Clone, PartialEq)]
pub enum SnrSpectrum {
    Uniform(f64),
    PerChannel(Vec<f64>),
}

impl SnrSpectrum {
    pub fn value_at(&self, idx: usize) -> f64 {
        match self {
            SnrSpectrum::Uniform(v) => *v,
            SnrSpectrum::PerChannel(v) => v[idx],
        }
    }

    fn validate(&self, n_channels: usize, what: &str) -> Result<()> {
        match self {
            SnrSpectrum::Uniform(v) if v.is_finite() => Ok(()),
            SnrSpectrum::Uniform(v) => {
                Err(Error::invalid(format!("{what} SNR {v} dB is not finite")))
            }
            SnrSpectrum::PerChannel(v) => {
                if v.len() != n_channels {
                    return Err(Error::invalid(format!(
                        "{what} SNR vector length {} does not match {n_channels} channels",
                        v.len()
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::invalid(format!("{what} SNR contains non-finite values")));
                }
                Ok(())
            }
        }
    }
}

/// Multi-span link description.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub fiber: FiberProfile,
    /// Number of identical spans with ideal launch-power restoration.
    pub span_count: u32,
    /// Coherence exponent in the n^(1+eps) span scaling; 0 means fully
    /// incoherent accumulation.
    pub coherence_epsilon: f64,
    pub snr_ase_db: Option<SnrSpectrum>,
    pub snr_trx_db: Option<SnrSpectrum>,
}

impl LinkSpec {
    pub fn new(fiber: FiberProfile, span_count: u32) -> Result<Self> {
        if span_count == 0 {
            return Err(Error::invalid("span count must be >= 1"));
        }
        Ok(Self {
            fiber,
            span_count,
            coherence_epsilon: 0.0,
            snr_ase_db: None,
            snr_trx_db: None,
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::invalid("coherence epsilon must be >= 0"));
        }
        self.coherence_epsilon = epsilon;
        Ok(self)
    }

    pub fn with_snr_ase(mut self, snr: SnrSpectrum) -> Self {
        self.snr_ase_db = Some(snr);
        self
    }

    pub fn with_snr_trx(mut self, snr: SnrSpectrum) -> Self {
        self.snr_trx_db = Some(snr);
        self
    }

    pub fn validate_against(&self, plan: &ChannelPlan) -> Result<()> {
        if let Some(s) = &self.snr_ase_db {
            s.validate(plan.len(), "ASE")?;
        }
        if let Some(s) = &self.snr_trx_db {
            s.validate(plan.len(), "transceiver")?;
        }
        Ok(())
    }
}

/// Converts the engineering dispersion pair (D, S) at `lambda_ref` into
/// Taylor coefficients:
///
///   beta2 = -D·lambda^2/(2·pi·c)
///   beta3 = (lambda^2/(2·pi·c))^2 · (S + 2D/lambda)
///
/// Units: D ps/(nm·km), S ps/(nm^2·km), lambda nm -> (ps^2/km, ps^3/km).
pub fn convert_dispersion(d: f64, s: f64, lambda_ref_nm: f64) -> Result<(f64, f64)> {
    if !(lambda_ref_nm > 0.0) {
        return Err(Error::invalid("reference wavelength must be positive"));
    }
    let factor = lambda_ref_nm * lambda_ref_nm / (2.0 * std::f64::consts::PI * C_NM_THZ);
    let beta2 = -d * factor;
    let beta3 = factor * factor * (s + 2.0 * d / lambda_ref_nm);
    Ok((beta2, beta3))
}

/// Re-references beta2 from the frequency it was specified at to a new
/// reference, `df_thz = f_new - f_old`. beta3 is assumed constant.
pub fn beta2_at_shift(beta2: f64, beta3: f64, df_thz: f64) -> f64 {
    beta2 + 2.0 * std::f64::consts::PI * beta3 * df_thz
}
