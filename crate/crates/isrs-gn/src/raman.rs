//! Coupled per-channel power evolution over one span: intrinsic loss plus
//! inter-channel stimulated Raman scattering.
//!
//! For channel i at relative frequency f_i the solver integrates
//!
//!   dP_i/dz = -alpha(f_i) P_i + P_i * sum_{k != i} g(f_k - f_i) P_k
//!
//! with g the antisymmetric extension of the fiber's Raman gain table:
//! g > 0 when the interferer sits at a higher frequency, so power flows
//! toward lower frequencies and, with alpha = 0, total power is conserved
//! pairwise. The photon-energy ratio of the exact Raman equations is
//! deliberately omitted; the downstream closed form is derived for this
//! power-transfer convention.

use crate::error::{Error, Result};
use crate::exec;
use crate::model::{ChannelPlan, FiberProfile};

/// Parallelize the right-hand side only when a row is worth a task.
const PAR_RHS_MIN_CHANNELS: usize = 64;

/// Spatial sampling specification for one span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZGrid {
    /// Upper bound on the RK4 integration step, km.
    pub max_step_km: f64,
    /// Number of uniformly spaced output samples over [0, L], including
    /// both endpoints. Decoupled from the integration step so the fit
    /// conditioning does not depend on it.
    pub output_samples: usize,
}

impl Default for ZGrid {
    fn default() -> Self {
        Self {
            max_step_km: 0.05,
            output_samples: 201,
        }
    }
}

impl ZGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_step_km > 0.0) {
            return Err(Error::invalid("z step must be positive"));
        }
        if self.output_samples < 2 {
            return Err(Error::invalid("need at least 2 output samples"));
        }
        Ok(())
    }
}

/// Sampled power profiles along one span, `powers[channel][sample]` in W.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerEvolution {
    z_samples: Vec<f64>,
    powers: Vec<Vec<f64>>,
}

impl PowerEvolution {
    pub fn z_samples(&self) -> &[f64] {
        &self.z_samples
    }

    pub fn channel_count(&self) -> usize {
        self.powers.len()
    }

    /// Power samples of one channel, W.
    pub fn channel_powers(&self, idx: usize) -> &[f64] {
        &self.powers[idx]
    }

    /// Profile of one channel normalized to its launch power.
    pub fn normalized_profile(&self, idx: usize) -> Vec<f64> {
        let p0 = self.powers[idx][0];
        self.powers[idx].iter().map(|p| p / p0).collect()
    }

    pub fn span_length(&self) -> f64 {
        *self.z_samples.last().unwrap()
    }
}

/// Precomputed pairwise gain matrix g(f_k - f_i), row-major, zero diagonal.
struct GainMatrix {
    n: usize,
    rows: Vec<f64>,
}

impl GainMatrix {
    fn build(plan: &ChannelPlan, fiber: &FiberProfile) -> Self {
        let n = plan.len();
        let mut rows = vec![0.0; n * n];
        for i in 0..n {
            let f_i = plan.channels()[i].center_frequency;
            for k in 0..n {
                if k != i {
                    let f_k = plan.channels()[k].center_frequency;
                    rows[i * n + k] = fiber.raman_gain_at(f_k - f_i);
                }
            }
        }
        Self { n, rows }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }
}

/// dP/dz for the current state. The equation is autonomous, so no z
/// argument is needed.
fn rhs(out: &mut [f64], p: &[f64], alpha: &[f64], gain: &GainMatrix) {
    let eval = |i: usize, slot: &mut f64| {
        let mut isrs = 0.0;
        for (g, pk) in gain.row(i).iter().zip(p) {
            isrs += g * pk;
        }
        *slot = p[i] * (isrs - alpha[i]);
    };
    if gain.n >= PAR_RHS_MIN_CHANNELS {
        exec::for_each_slot(out, eval);
    } else {
        for (i, slot) in out.iter_mut().enumerate() {
            eval(i, slot);
        }
    }
}

/// Integrates the coupled Raman power equations over one span with a
/// classical fixed-step fourth-order scheme.
///
/// The integration step is the largest value not exceeding
/// `z_grid.max_step_km` that lands exactly on every output sample.
pub fn solve_raman(
    plan: &ChannelPlan,
    fiber: &FiberProfile,
    z_grid: &ZGrid,
) -> Result<PowerEvolution> {
    z_grid.validate()?;
    let n = plan.len();
    let span = fiber.span_length;

    // Per-channel attenuation at the channel's absolute frequency; fails
    // early if the plan sticks out of the tabulated spectrum.
    let alpha: Vec<f64> = (0..n)
        .map(|i| {
            fiber
                .attenuation_at(plan.absolute_frequency(i))
                .map_err(|e| Error::for_channel(i, e))
        })
        .collect::<Result<Vec<_>>>()?;

    let gain = GainMatrix::build(plan, fiber);

    let n_out = z_grid.output_samples;
    let dz_out = span / (n_out - 1) as f64;
    let substeps = (dz_out / z_grid.max_step_km).ceil().max(1.0) as usize;
    let h = dz_out / substeps as f64;

    let mut state: Vec<f64> = plan.channels().iter().map(|c| c.launch_power).collect();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    let mut z_samples = Vec::with_capacity(n_out);
    let mut powers: Vec<Vec<f64>> = vec![Vec::with_capacity(n_out); n];

    let record = |z: f64, state: &[f64], z_samples: &mut Vec<f64>, powers: &mut Vec<Vec<f64>>| -> Result<()> {
        for (i, &p) in state.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::StepFailure {
                    z,
                    channel: i,
                    reason: "non-finite",
                });
            }
            if p <= 0.0 {
                return Err(Error::StepFailure {
                    z,
                    channel: i,
                    reason: "non-positive",
                });
            }
            powers[i].push(p);
        }
        z_samples.push(z);
        Ok(())
    };

    record(0.0, &state, &mut z_samples, &mut powers)?;

    for j in 1..n_out {
        for _ in 0..substeps {
            rk4_step(&mut state, h, &alpha, &gain, &mut k1, &mut k2, &mut k3, &mut k4, &mut tmp);
        }
        // Nominal sample position; the last sample is the span end exactly.
        let z = if j == n_out - 1 { span } else { j as f64 * dz_out };
        record(z, &state, &mut z_samples, &mut powers)?;
    }

    Ok(PowerEvolution { z_samples, powers })
}

#[allow(clippy::too_many_arguments)]
fn rk4_step(
    state: &mut [f64],
    h: f64,
    alpha: &[f64],
    gain: &GainMatrix,
    k1: &mut [f64],
    k2: &mut [f64],
    k3: &mut [f64],
    k4: &mut [f64],
    tmp: &mut [f64],
) {
    let half = 0.5 * h;
    rhs(k1, state, alpha, gain);
    for i in 0..state.len() {
        tmp[i] = state[i] + half * k1[i];
    }
    rhs(k2, tmp, alpha, gain);
    for i in 0..state.len() {
        tmp[i] = state[i] + half * k2[i];
    }
    rhs(k3, tmp, alpha, gain);
    for i in 0..state.len() {
        tmp[i] = state[i] + h * k3[i];
    }
    rhs(k4, tmp, alpha, gain);
    let sixth = h / 6.0;
    for i in 0..state.len() {
        state[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}
