//! Monte-Carlo and prediction-error studies. Trials run on the rayon pool;
//! trial `i` draws from ChaCha stream `i` of the master seed, and results are
//! reduced in trial order so the output does not depend on thread count.

use nalgebra::{Matrix4, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::lift;
use crate::optimizer::frame_design;
use crate::tracking::{information_increment, pcrlb_trace, propagate, TargetState};

use super::campaign::{
    frame_problem, motion, node_lift, p3_reference, run_campaign_with_powers, with_powers,
    FrameRecord,
};
use super::scenario::Scenario;

/// RNG of trial `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Per-node target powers for one trial, exponential with the given mean.
pub fn draw_powers(rng: &mut ChaCha8Rng, nodes: usize, mean: f64) -> Result<Vec<f64>> {
    let exp = Exp::new(1.0 / mean)
        .map_err(|e| Error::InvalidArgument(format!("exponential mean {mean}: {e}")))?;
    Ok((0..nodes).map(|_| exp.sample(rng)).collect())
}

/// Trial-averaged frame metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub frame: usize,
    pub zeta: f64,
    pub pcrlb_trace: f64,
    pub crlb_x: f64,
    pub crlb_y: f64,
    pub crlb_vx: f64,
    pub crlb_vy: f64,
    pub pd: Vec<f64>,
    pub pd_bench: Vec<f64>,
    /// Fraction of trials whose design passed the acceptance gate.
    pub accepted: f64,
    pub iterations: f64,
    pub trials: usize,
}

fn average(runs: &[Vec<FrameRecord>]) -> Vec<AggregateRecord> {
    let t = runs.len() as f64;
    let first = &runs[0];
    first
        .iter()
        .enumerate()
        .map(|(i, r0)| {
            let nodes = r0.pd.len();
            let mut a = AggregateRecord {
                frame: r0.frame,
                zeta: r0.zeta,
                pcrlb_trace: 0.0,
                crlb_x: 0.0,
                crlb_y: 0.0,
                crlb_vx: 0.0,
                crlb_vy: 0.0,
                pd: vec![0.0; nodes],
                pd_bench: vec![0.0; nodes],
                accepted: 0.0,
                iterations: 0.0,
                trials: runs.len(),
            };
            for run in runs {
                let r = &run[i];
                a.pcrlb_trace += r.pcrlb_trace;
                a.crlb_x += r.crlb_x;
                a.crlb_y += r.crlb_y;
                a.crlb_vx += r.crlb_vx;
                a.crlb_vy += r.crlb_vy;
                for n in 0..nodes {
                    a.pd[n] += r.pd[n];
                    a.pd_bench[n] += r.pd_bench[n];
                }
                a.accepted += if r.accepted { 1.0 } else { 0.0 };
                a.iterations += r.iterations as f64;
            }
            for v in [
                &mut a.pcrlb_trace,
                &mut a.crlb_x,
                &mut a.crlb_y,
                &mut a.crlb_vx,
                &mut a.crlb_vy,
                &mut a.accepted,
                &mut a.iterations,
            ] {
                *v /= t;
            }
            a.pd.iter_mut()
                .chain(a.pd_bench.iter_mut())
                .for_each(|v| *v /= t);
            a
        })
        .collect()
}

/// Averages campaigns over random target powers for every ζ in `zetas`.
/// Each trial reuses one power draw across all ζ values.
pub fn run_monte_carlo(s: &Scenario, zetas: &[f64]) -> Result<Vec<AggregateRecord>> {
    let mc = s
        .monte_carlo
        .ok_or_else(|| Error::scenario("monte_carlo", "Monte-Carlo block required"))?;
    let runs: Vec<Vec<Vec<FrameRecord>>> = (0..mc.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(s.seed, trial);
            let powers = draw_powers(&mut rng, s.nodes.len(), mc.power_mean)?;
            zetas
                .iter()
                .map(|&z| run_campaign_with_powers(s, z, &powers).map(|c| c.records))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.context(format!("trial {trial}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (zi, _) in zetas.iter().enumerate() {
        let per_zeta: Vec<Vec<FrameRecord>> = runs.iter().map(|r| r[zi].clone()).collect();
        out.extend(average(&per_zeta));
    }
    Ok(out)
}

/// Per-frame spread of the exact PCRLB trace under prediction errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRecord {
    pub frame: usize,
    pub zeta: f64,
    pub pcrlb_min: f64,
    pub pcrlb_mean: f64,
    pub pcrlb_max: f64,
    pub pcrlb_error_free: f64,
    pub pcrlb_reference: f64,
    pub trials: usize,
}

/// One mismatched campaign: codes designed at a perturbed prediction,
/// information accumulated at the true state. Returns the trace per frame.
pub fn mismatched_campaign(
    s: &Scenario,
    zeta: f64,
    rng: &mut ChaCha8Rng,
    position_variance: f64,
    velocity_variance: f64,
) -> Result<Vec<f64>> {
    let nodes = with_powers(s, &s.target_powers())?;
    let reference = lift(&p3_reference(s.pulses())?);
    let model = motion(s);
    let pos = Normal::new(0.0, position_variance.sqrt())
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let vel = Normal::new(0.0, velocity_variance.sqrt())
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut state = s.initial_state;
    let mut j = Matrix4::identity() * s.initial_information;
    let mut out = Vec::with_capacity(s.frames);
    for k in 1..=s.frames {
        let ctx = |e: Error| e.context(format!("frame {k}"));
        state = propagate(&state, &model);
        let noise = Vector4::new(
            pos.sample(rng),
            vel.sample(rng),
            pos.sample(rng),
            vel.sample(rng),
        );
        let predicted = TargetState::from_vector(&(state.to_vector() + noise));
        let prior = model.predict_information(&j);
        let fp = frame_problem(s, &nodes, &predicted, prior, zeta, &reference).map_err(ctx)?;
        let codes = frame_design(&fp).map_err(ctx)?.codes;
        let mut info = prior;
        for (n, (node, c)) in nodes.iter().zip(&codes).enumerate() {
            let (exact, h) = node_lift(node, &state)
                .map_err(|e| e.context(format!("frame {k}, node {}", n + 1)))?;
            let r = exact.exact_noise(c.as_vector()).map_err(ctx)?;
            info += information_increment(&h, &[1.0 / r[0], 1.0 / r[1], 1.0 / r[2]]);
        }
        j = (info + info.transpose()) * 0.5;
        out.push(pcrlb_trace(&j).map_err(ctx)?);
    }
    Ok(out)
}

/// Robustness study over the ζ values of the robustness block (or `zetas`
/// when given). One row per frame per ζ.
pub fn run_robustness(s: &Scenario, zetas: Option<&[f64]>) -> Result<Vec<RobustnessRecord>> {
    let rb = s
        .robustness
        .clone()
        .ok_or_else(|| Error::scenario("robustness", "robustness block required"))?;
    let zetas = zetas.unwrap_or(&rb.zetas);
    let reference = run_campaign_with_powers(s, 0.0, &s.target_powers())?.records;
    let mut out = Vec::new();
    for (zi, &zeta) in zetas.iter().enumerate() {
        let error_free = run_campaign_with_powers(s, zeta, &s.target_powers())?.records;
        let traces: Vec<Vec<f64>> = (0..rb.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(s.seed, zi * rb.trials + trial);
                mismatched_campaign(
                    s,
                    zeta,
                    &mut rng,
                    rb.position_variance,
                    rb.velocity_variance,
                )
                .map_err(|e| e.context(format!("trial {trial}")))
            })
            .collect::<Result<Vec<_>>>()?;
        for k in 0..s.frames {
            let col = traces.iter().map(|t| t[k]);
            let min = col.clone().fold(f64::INFINITY, f64::min);
            let max = col.clone().fold(f64::NEG_INFINITY, f64::max);
            let mean = col.sum::<f64>() / rb.trials as f64;
            out.push(RobustnessRecord {
                frame: k + 1,
                zeta,
                pcrlb_min: min,
                pcrlb_mean: mean,
                pcrlb_max: max,
                pcrlb_error_free: error_free[k].pcrlb_trace,
                pcrlb_reference: reference[k].pcrlb_trace,
                trials: rb.trials,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_mean_sanity() {
        let mut rng = trial_rng(7, 0);
        let draws = draw_powers(&mut rng, 100_000, 0.5).unwrap();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a = draw_powers(&mut trial_rng(1, 0), 4, 0.5).unwrap();
        let b = draw_powers(&mut trial_rng(1, 1), 4, 0.5).unwrap();
        let c = draw_powers(&mut trial_rng(1, 0), 4, 0.5).unwrap();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
