//! Closed-form per-channel nonlinear-interference evaluation.
//!
//! For the channel of interest i the inverse nonlinear SNR is the sum of a
//! self-phase-modulation term, a cross-phase-modulation sum over all
//! interferers k != i weighted by (n + 5/6·Phi), and a logarithmic
//! correction proportional to Phi·n_tilde that only contributes for
//! multi-span links and non-Gaussian formats. The effective per-channel
//! parameters (alpha, alpha_bar, C_r) come from the profile fit, which is
//! what extends the expression to bandwidths where no analytic solution of
//! the Raman equations exists.
//!
//! Phase-mismatch factors, with f relative to the reference frequency and
//! beta2/beta3 referenced there:
//!
//!   phi_i   = (3/2)·pi^2·(beta2 + 2·pi·beta3·f_i)
//!   phi_ik  = -2·pi^2·(f_k - f_i)·[beta2 + pi·beta3·(f_i + f_k)]
//!   phi     = -4·pi^2·[beta2 + pi·beta3·(f_i + f_k)]·L
//!
//! Inner sums accumulate in fixed (ascending-k) order with compensated
//! summation, so results do not depend on the parallel schedule.

use crate::error::{Error, Result};
use crate::exec;
use crate::fit::EffectiveParams;
use crate::kahan::KahanSum;
use crate::model::{ChannelPlan, LinkSpec, SnrSpectrum};
use crate::units::linear_to_db;

use std::f64::consts::PI;

/// Per-channel inverse-SNR breakdown, linear domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelNli {
    /// -10·log10(spm + xpm + kurtosis corrections).
    pub snr_nli_db: f64,
    pub spm_inverse: f64,
    pub xpm_inverse: f64,
    /// All kurtosis-proportional contributions (XPM weight and the
    /// multi-span logarithmic term).
    pub kurtosis_correction_inverse: f64,
}

impl ChannelNli {
    pub fn from_inverses(spm: f64, xpm: f64, kurt: f64) -> Self {
        let total = spm + xpm + kurt;
        Self {
            snr_nli_db: -linear_to_db(total),
            spm_inverse: spm,
            xpm_inverse: xpm,
            kurtosis_correction_inverse: kurt,
        }
    }

    pub fn total_inverse(&self) -> f64 {
        self.spm_inverse + self.xpm_inverse + self.kurtosis_correction_inverse
    }
}

/// Closed-form evaluation result for a whole plan.
#[derive(Debug, Clone, PartialEq)]
pub struct NliResult {
    pub channels: Vec<ChannelNli>,
}

impl NliResult {
    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn snr_nli_db(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.snr_nli_db).collect()
    }
}

/// Geometry- and fit-derived factors for one channel.
#[derive(Debug, Clone, Copy)]
struct ChannelTerms {
    /// (alpha + alpha_bar - P_tot·C_r·f)^2
    t: f64,
    /// alpha + alpha_bar
    a: f64,
    /// alpha_bar·(2·alpha + alpha_bar)
    saturation: f64,
}

impl ChannelTerms {
    fn new(p: &EffectiveParams, p_tot: f64, f: f64) -> Self {
        let base = p.alpha + p.alpha_bar - p_tot * p.c_r * f;
        Self {
            t: base * base,
            a: p.alpha + p.alpha_bar,
            saturation: p.alpha_bar * (2.0 * p.alpha + p.alpha_bar),
        }
    }
}

fn spm_phase(beta2: f64, beta3: f64, f_i: f64) -> f64 {
    1.5 * PI * PI * (beta2 + 2.0 * PI * beta3 * f_i)
}

fn pair_phase(beta2: f64, beta3: f64, f_i: f64, f_k: f64) -> f64 {
    -2.0 * PI * PI * (f_k - f_i) * (beta2 + PI * beta3 * (f_i + f_k))
}

fn span_phase(beta2: f64, beta3: f64, f_i: f64, f_k: f64, span_length: f64) -> f64 {
    -4.0 * PI * PI * (beta2 + PI * beta3 * (f_i + f_k)) * span_length
}

/// asinh(phi·c)/phi, continuous through phi = 0 where it tends to c.
#[inline]
fn asinh_over(phi: f64, c: f64) -> f64 {
    if phi == 0.0 {
        c
    } else {
        (phi * c).asinh() / phi
    }
}

/// atan(phi·c)/phi, continuous through phi = 0 where it tends to c.
#[inline]
fn atan_over(phi: f64, c: f64) -> f64 {
    if phi == 0.0 {
        c
    } else {
        (phi * c).atan() / phi
    }
}

/// Evaluates the closed form for every channel of the plan.
///
/// `params` must align with `plan` index by index. The fiber inside `link`
/// supplies gamma, dispersion and span length; `link.span_count` and
/// `link.coherence_epsilon` control the span scaling.
pub fn compute_nli(
    plan: &ChannelPlan,
    params: &[EffectiveParams],
    link: &LinkSpec,
) -> Result<NliResult> {
    if params.len() != plan.len() {
        return Err(Error::invalid(format!(
            "{} parameter sets for {} channels",
            params.len(),
            plan.len()
        )));
    }
    for (idx, p) in params.iter().enumerate() {
        if !(p.alpha > 0.0) || !(p.alpha_bar > 0.0) {
            return Err(Error::for_channel(
                idx,
                Error::invalid("effective attenuation parameters must be positive"),
            ));
        }
    }

    let fiber = &link.fiber;
    let gamma2 = fiber.gamma * fiber.gamma;
    let beta2 = fiber.beta2;
    let beta3 = fiber.beta3;
    let p_tot = plan.total_power();
    let n = f64::from(link.span_count);
    let n_tilde = if link.span_count == 1 { 0.0 } else { n };
    let n_pow = if link.coherence_epsilon == 0.0 {
        n
    } else {
        n.powf(1.0 + link.coherence_epsilon)
    };

    let terms: Vec<ChannelTerms> = plan
        .channels()
        .iter()
        .zip(params)
        .map(|(c, p)| ChannelTerms::new(p, p_tot, c.center_frequency))
        .collect();

    let channels = exec::map_indexed(plan.len(), |i| -> Result<ChannelNli> {
        let ch_i = plan.channels()[i];
        let (f_i, b_i, p_i) = (ch_i.center_frequency, ch_i.bandwidth, ch_i.launch_power);
        let par_i = &params[i];
        let tm_i = &terms[i];

        // Self-channel term.
        let phi_i = spm_phase(beta2, beta3, f_i);
        let spm_bracket = (tm_i.t - par_i.alpha * par_i.alpha) / par_i.alpha
            * asinh_over(phi_i, b_i * b_i / (PI * par_i.alpha))
            + (tm_i.a * tm_i.a - tm_i.t) / tm_i.a * asinh_over(phi_i, b_i * b_i / (PI * tm_i.a));
        let spm = 4.0 / 9.0 * PI * gamma2 * p_i * p_i * n_pow
            / (b_i * b_i * tm_i.saturation)
            * spm_bracket;
        if !spm.is_finite() {
            return Err(Error::NonFinite { i, k: i });
        }

        // Interferer sum, fixed ascending order.
        let mut xpm = KahanSum::new();
        let mut kurt = KahanSum::new();
        for (k, ch_k) in plan.channels().iter().enumerate() {
            if k == i {
                continue;
            }
            let (f_k, b_k, p_k) = (ch_k.center_frequency, ch_k.bandwidth, ch_k.launch_power);
            let par_k = &params[k];
            let tm_k = &terms[k];

            let phi_ik = pair_phase(beta2, beta3, f_i, f_k);
            let common = 32.0 / 27.0 * gamma2 * p_k * p_k / b_k;
            let bracket = (tm_k.t - par_k.alpha * par_k.alpha) / par_k.alpha
                * atan_over(phi_ik, b_i / par_k.alpha)
                + (tm_k.a * tm_k.a - tm_k.t) / tm_k.a * atan_over(phi_ik, b_i / tm_k.a);
            let main = common / tm_k.saturation * bracket;
            debug_assert!(main > 0.0, "interferer ({i}, {k}) contribution {main}");
            if !main.is_finite() {
                return Err(Error::NonFinite { i, k });
            }
            xpm.add(n * main);

            let kurt_k = ch_k.excess_kurtosis;
            if kurt_k != 0.0 {
                let mut correction = 5.0 / 6.0 * kurt_k * main;
                if n_tilde != 0.0 {
                    let phi = span_phase(beta2, beta3, f_i, f_k, fiber.span_length);
                    let delta = 2.0 * (f_k - f_i).abs();
                    let log_bracket =
                        (delta - b_k) * ((delta - b_k) / (delta + b_k)).ln() + 2.0 * b_k;
                    correction += common * 5.0 / 3.0 * kurt_k * PI * n_tilde * tm_k.t
                        / (phi.abs() * b_k * b_k * par_k.alpha * par_k.alpha * tm_k.a * tm_k.a)
                        * log_bracket;
                }
                if !correction.is_finite() {
                    return Err(Error::NonFinite { i, k });
                }
                kurt.add(correction);
            }
        }

        let result = ChannelNli::from_inverses(spm, xpm.value(), kurt.value());
        if !result.total_inverse().is_finite() {
            return Err(Error::NonFinite { i, k: i });
        }
        Ok(result)
    });

    Ok(NliResult {
        channels: channels.into_iter().collect::<Result<Vec<_>>>()?,
    })
}

/// Combines the nonlinear SNR with optional amplifier and transceiver
/// contributions: inverse SNRs add. Missing contributions count as
/// noiseless (infinite SNR).
pub fn total_snr(nli: &NliResult, link: &LinkSpec) -> Result<Vec<f64>> {
    let inverse_of = |spec: &Option<SnrSpectrum>, idx: usize| -> f64 {
        match spec {
            None => 0.0,
            Some(s) => 10f64.powf(-s.value_at(idx) / 10.0),
        }
    };
    if let Some(SnrSpectrum::PerChannel(v)) = &link.snr_ase_db {
        if v.len() != nli.len() {
            return Err(Error::invalid("ASE SNR vector length mismatch"));
        }
    }
    if let Some(SnrSpectrum::PerChannel(v)) = &link.snr_trx_db {
        if v.len() != nli.len() {
            return Err(Error::invalid("transceiver SNR vector length mismatch"));
        }
    }
    Ok((0..nli.len())
        .map(|i| {
            let inv = nli.channels[i].total_inverse()
                + inverse_of(&link.snr_ase_db, i)
                + inverse_of(&link.snr_trx_db, i);
            -linear_to_db(inv)
        })
        .collect())
}
