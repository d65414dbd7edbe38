//! Full-pipeline orchestration for a multi-span link.
//!
//! One evaluation runs: Raman solve over span 1 -> per-channel profile fit
//! -> closed-form evaluation for n spans -> optional total-SNR combination.
//! Spans are identical with ideal per-channel launch-power restoration, so
//! the fit runs once and its parameters hold for every span.
//!
//! [`LinkEngine`] memoizes the solve+fit stages keyed on everything those
//! stages depend on (plan frequencies/bandwidths/powers, attenuation and
//! gain tables, span length, z grid), which lets format/span-count sweeps
//! skip the expensive stages.

use crate::error::{Error, Result};
use crate::fit::{fit_all, EffectiveParams};
use crate::model::{ChannelPlan, FiberProfile, LinkSpec};
use crate::nli::{compute_nli, total_snr, ChannelNli};
use crate::raman::{solve_raman, PowerEvolution, ZGrid};

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub z_grid: ZGrid,
    /// Retain the sampled power evolution in the result (for diagnostics
    /// dumps); off by default to keep results small.
    pub keep_power_evolution: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            z_grid: ZGrid::default(),
            keep_power_evolution: false,
        }
    }
}

/// Wall-clock milliseconds per stage; zero for stages served from cache.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub raman_ms: f64,
    pub fit_ms: f64,
    pub nli_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelResult {
    /// nm, from the channel's absolute frequency.
    pub wavelength_nm: f64,
    /// THz, absolute.
    pub frequency_thz: f64,
    pub nli: ChannelNli,
    /// Present when the link specifies ASE and/or transceiver SNR.
    pub snr_tot_db: Option<f64>,
    pub params: EffectiveParams,
}

impl ChannelResult {
    pub fn snr_nli_db(&self) -> f64 {
        self.nli.snr_nli_db
    }
}

#[derive(Debug, Clone)]
pub struct LinkResult {
    pub channels: Vec<ChannelResult>,
    pub timings: StageTimings,
    pub power_evolution: Option<PowerEvolution>,
}

impl LinkResult {
    pub fn snr_nli_db(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.nli.snr_nli_db).collect()
    }
}

struct CachedStages {
    evolution: PowerEvolution,
    params: Vec<EffectiveParams>,
}

/// Exact bit-pattern key over everything the solve+fit stages consume.
type CacheKey = Vec<u64>;

fn cache_key(plan: &ChannelPlan, fiber: &FiberProfile, grid: &ZGrid) -> CacheKey {
    let mut key = Vec::new();
    key.push(plan.reference_frequency().to_bits());
    for c in plan.channels() {
        key.push(c.center_frequency.to_bits());
        key.push(c.bandwidth.to_bits());
        key.push(c.launch_power.to_bits());
    }
    for &(x, y) in fiber.attenuation_table().points() {
        key.push(x.to_bits());
        key.push(y.to_bits());
    }
    for &(x, y) in fiber.raman_gain_table().points() {
        key.push(x.to_bits());
        key.push(y.to_bits());
    }
    key.push(fiber.span_length.to_bits());
    key.push(grid.max_step_km.to_bits());
    key.push(grid.output_samples as u64);
    key
}

/// Pipeline runner with solve+fit memoization across evaluations.
pub struct LinkEngine {
    cache: Mutex<HashMap<CacheKey, Arc<CachedStages>>>,
    fit_runs: AtomicUsize,
}

impl Default for LinkEngine {
    fn default() -> Self {
        Self::new()
    }
}

impl LinkEngine {
    pub fn new() -> Self {
        Self {
            cache: Mutex::new(HashMap::new()),
            fit_runs: AtomicUsize::new(0),
        }
    }

    /// Number of times the solve+fit stages actually ran (cache misses).
    pub fn fit_runs(&self) -> usize {
        self.fit_runs.load(Ordering::Relaxed)
    }

    pub fn evaluate(
        &self,
        plan: &ChannelPlan,
        link: &LinkSpec,
        options: &EvalOptions,
    ) -> Result<LinkResult> {
        let started = Instant::now();
        options.z_grid.validate()?;
        link.validate_against(plan)?;

        let key = cache_key(plan, &link.fiber, &options.z_grid);
        let cached = self.cache.lock().unwrap().get(&key).cloned();

        let (stages, raman_ms, fit_ms) = match cached {
            Some(hit) => (hit, 0.0, 0.0),
            None => {
                let t0 = Instant::now();
                let evolution = solve_raman(plan, &link.fiber, &options.z_grid)
                    .map_err(|e| Error::in_stage("raman", e))?;
                let raman_ms = t0.elapsed().as_secs_f64() * 1e3;

                let t1 = Instant::now();
                let params = fit_all(&evolution, plan, &link.fiber)
                    .map_err(|e| Error::in_stage("fit", e))?;
                let fit_ms = t1.elapsed().as_secs_f64() * 1e3;
                self.fit_runs.fetch_add(1, Ordering::Relaxed);

                let entry = Arc::new(CachedStages { evolution, params });
                self.cache.lock().unwrap().insert(key, entry.clone());
                (entry, raman_ms, fit_ms)
            }
        };

        let t2 = Instant::now();
        let nli = compute_nli(plan, &stages.params, link)
            .map_err(|e| Error::in_stage("closed-form", e))?;
        let totals = if link.snr_ase_db.is_some() || link.snr_trx_db.is_some() {
            Some(total_snr(&nli, link).map_err(|e| Error::in_stage("total-snr", e))?)
        } else {
            None
        };
        let nli_ms = t2.elapsed().as_secs_f64() * 1e3;

        let channels = (0..plan.len())
            .map(|i| ChannelResult {
                wavelength_nm: plan.wavelength_nm(i),
                frequency_thz: plan.absolute_frequency(i),
                nli: nli.channels[i],
                snr_tot_db: totals.as_ref().map(|t| t[i]),
                params: stages.params[i],
            })
            .collect();

        Ok(LinkResult {
            channels,
            timings: StageTimings {
                raman_ms,
                fit_ms,
                nli_ms,
                total_ms: started.elapsed().as_secs_f64() * 1e3,
            },
            power_evolution: options.keep_power_evolution.then(|| stages.evolution.clone()),
        })
    }
}

/// One-shot evaluation without cross-evaluation caching.
pub fn evaluate_link(
    plan: &ChannelPlan,
    link: &LinkSpec,
    options: &EvalOptions,
) -> Result<LinkResult> {
    LinkEngine::new().evaluate(plan, link, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::t_tilde_of;
    use crate::model::{Channel, ChannelPlan, FiberProfile, SnrSpectrum};
    use approx::assert_relative_eq;

    fn flat_fiber(alpha: f64) -> FiberProfile {
        FiberProfile::flat_loss(
            alpha,
            150.0,
            250.0,
            vec![(0.0, 0.0), (20.0, 0.0)],
            -22.6,
            0.0,
            1.2,
            80.0,
        )
        .unwrap()
    }

    fn small_plan(kurtosis: f64) -> ChannelPlan {
        let channels = [-0.1f64, -0.05, 0.0, 0.05, 0.1]
            .iter()
            .map(|&f| Channel::new(f, 0.04, 1e-3, kurtosis).unwrap())
            .collect();
        ChannelPlan::new(channels, 193.4).unwrap()
    }

    #[test]
    fn pipeline_collapses_to_direct_evaluation_without_isrs() {
        let alpha = 0.0461;
        let plan = ChannelPlan::new(vec![Channel::new(0.0, 0.04, 1e-3, 0.0).unwrap()], 193.4).unwrap();
        let link = LinkSpec::new(flat_fiber(alpha), 1).unwrap();
        let full = evaluate_link(&plan, &link, &EvalOptions::default()).unwrap();

        let params = vec![EffectiveParams {
            alpha,
            alpha_bar: alpha,
            c_r: 0.0,
            t_tilde: t_tilde_of(plan.total_power(), 0.0, 0.0, alpha),
            fit_residual: 0.0,
        }];
        let direct = compute_nli(&plan, &params, &link).unwrap();
        assert_relative_eq!(
            full.channels[0].nli.snr_nli_db,
            direct.channels[0].snr_nli_db,
            epsilon = 1e-6
        );
    }

    #[test]
    fn span_scaling_is_linear_for_gaussian() {
        let plan = small_plan(0.0);
        let link1 = LinkSpec::new(flat_fiber(0.046), 1).unwrap();
        let link3 = LinkSpec::new(flat_fiber(0.046), 3).unwrap();
        let r1 = evaluate_link(&plan, &link1, &EvalOptions::default()).unwrap();
        let r3 = evaluate_link(&plan, &link3, &EvalOptions::default()).unwrap();
        for (a, b) in r1.channels.iter().zip(&r3.channels) {
            assert_relative_eq!(
                b.nli.total_inverse() / a.nli.total_inverse(),
                3.0,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn repeated_evaluation_is_bit_identical() {
        let plan = small_plan(-0.68);
        let link = LinkSpec::new(flat_fiber(0.046), 2).unwrap();
        let a = evaluate_link(&plan, &link, &EvalOptions::default()).unwrap();
        let b = evaluate_link(&plan, &link, &EvalOptions::default()).unwrap();
        assert_eq!(a.channels, b.channels);
    }

    #[test]
    fn cache_skips_solve_and_fit_for_format_sweeps() {
        let engine = LinkEngine::new();
        let link = LinkSpec::new(flat_fiber(0.046), 1).unwrap();
        let opts = EvalOptions::default();

        let gaussian = engine.evaluate(&small_plan(0.0), &link, &opts).unwrap();
        assert_eq!(engine.fit_runs(), 1);

        // Same powers and fiber, different format and span count: served
        // from cache.
        let qam = engine.evaluate(&small_plan(-0.619), &link, &opts).unwrap();
        assert_eq!(engine.fit_runs(), 1);
        assert_eq!(qam.timings.raman_ms, 0.0);
        assert_eq!(qam.timings.fit_ms, 0.0);
        for (g, q) in gaussian.channels.iter().zip(&qam.channels) {
            assert_eq!(g.params, q.params);
        }

        // Changing launch power invalidates the cache.
        let plan_hot = small_plan(0.0).scaled_power(2.0).unwrap();
        engine.evaluate(&plan_hot, &link, &opts).unwrap();
        assert_eq!(engine.fit_runs(), 2);
    }

    #[test]
    fn total_snr_never_exceeds_nli_snr() {
        let plan = small_plan(0.0);
        let link = LinkSpec::new(flat_fiber(0.046), 3)
            .unwrap()
            .with_snr_ase(SnrSpectrum::Uniform(24.0))
            .with_snr_trx(SnrSpectrum::Uniform(26.0));
        let result = evaluate_link(&plan, &link, &EvalOptions::default()).unwrap();
        for c in &result.channels {
            let tot = c.snr_tot_db.unwrap();
            assert!(tot <= c.nli.snr_nli_db, "{tot} > {}", c.nli.snr_nli_db);
        }
    }

    #[test]
    fn power_evolution_retained_on_request() {
        let plan = small_plan(0.0);
        let link = LinkSpec::new(flat_fiber(0.046), 1).unwrap();
        let opts = EvalOptions {
            keep_power_evolution: true,
            ..Default::default()
        };
        let result = evaluate_link(&plan, &link, &opts).unwrap();
        let evo = result.power_evolution.expect("evolution kept");
        assert_eq!(evo.channel_count(), plan.len());
    }

    #[test]
    fn stage_errors_carry_the_stage_label() {
        // Plan outside the attenuation table: the raman stage fails.
        let plan = small_plan(0.0);
        let fiber = FiberProfile::flat_loss(
            0.046,
            250.0,
            260.0,
            vec![(0.0, 0.0), (20.0, 0.0)],
            -22.6,
            0.0,
            1.2,
            80.0,
        )
        .unwrap();
        let link = LinkSpec::new(fiber, 1).unwrap();
        let err = evaluate_link(&plan, &link, &EvalOptions::default()).unwrap_err();
        assert!(err.to_string().contains("raman"), "{err}");
        assert!(err.is_input_error());
    }
}
