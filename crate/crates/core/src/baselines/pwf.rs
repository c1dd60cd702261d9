//! Iterative polite water-filling.
//!
//! Each iteration enforces the optimal transmit structure directly: the
//! equivalent covariance `Q_l = Ω̂_l^{1/2} Σ_l Ω̂_l^{1/2}` water-fills the
//! pre- and post-whitened channel `H̄_l = Ω_l^{-1/2} H_{l,l} Ω̂_l^{-1/2}`.
//! A single water level shared by all links spends the whole physical power
//! budget `Σ_l tr(Σ_l)`; with power coefficients `c_{l,i} = (G† Ω̂^{-1} G)_{ii}`
//! per equivalent subchannel, the level is found exactly by the same
//! active-set solve as plain water-filling after substituting q = c·p.
//!
//! The reverse covariances then follow from the covariance transformation
//! `Σ̂_l ∝ w_l (Ω_l^{-1} − (Ω_l + H Σ H†)^{-1})` — the relation the forward
//! and reverse solutions satisfy at any stationary point — which feeds the
//! next iteration's pre-whiteners. Both sides start from zero covariances,
//! so the first forward pass sees `Ω_l = Ω̂_l = I` and is already optimal on
//! parallel (non-interfering) channels.
//!
//! Enforcing the structure every step converges very fast when it converges,
//! but has no guarantee; runs that hit the iteration cap with the trailing
//! rate window still moving are reported `converged = false`.

use web_time::Instant;

use crate::dual_link::{
    init_covariances, residual, transform, IterationRecord, IterationTrace, SolveResult,
};
use crate::error::{Error, Result};
use crate::hermitian::{inv_sqrt_pd_mat, symmetrize_unchecked, CMat, HermitianPsd};
use crate::network::{CovarianceSet, Direction, NetworkSpec};

use super::BaselineConfig;

/// The shared water level ν for equivalent powers `d_i = (ν w_i − 1/g_i)_+`
/// calibrated so the physical power `Σ c_i d_i` spends the whole budget.
/// Same active-set resolution as [`water_fill_weighted`], with cost-weighted
/// prefix sums; exact up to rounding.
fn shared_water_level(gains: &[f64], weights: &[f64], costs: &[f64], budget: f64) -> Result<f64> {
    let mut active: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    if active.is_empty() {
        return Err(Error::AllGainsZero);
    }
    let threshold = |i: usize| 1.0 / (weights[i] * gains[i]);
    active.sort_by(|&a, &b| threshold(a).total_cmp(&threshold(b)));

    let mut cost_over_gain = 0.0;
    let mut cost_weight = 0.0;
    for (k, &i) in active.iter().enumerate() {
        cost_over_gain += costs[i] / gains[i];
        cost_weight += costs[i] * weights[i];
        let candidate = (budget + cost_over_gain) / cost_weight;
        let next = active.get(k + 1).map(|&j| threshold(j));
        if candidate > threshold(i) && next.map_or(true, |t| candidate <= t) {
            return Ok(candidate);
        }
    }
    Err(Error::MultiplierSearch(
        "no water level satisfies the power budget".into(),
    ))
}

/// One forward polite water-filling pass. `previous` supplies the forward
/// interference (updated links see the others' last covariances), `reverse`
/// the pre-whiteners.
fn pwf_forward_pass(
    spec: &NetworkSpec,
    previous: &[HermitianPsd],
    reverse: &[HermitianPsd],
) -> Result<Vec<HermitianPsd>> {
    let links = spec.links();
    let own_omegas = spec.omega_all(previous, Direction::Forward);
    let reverse_omegas = spec.omega_all(reverse, Direction::Reverse);

    let mut basis: Vec<CMat> = Vec::with_capacity(links); // right singular vectors G
    let mut pre_inv_sqrt: Vec<CMat> = Vec::with_capacity(links);
    let mut pooled_gains: Vec<f64> = Vec::new();
    let mut pooled_weights: Vec<f64> = Vec::new();
    let mut pooled_costs: Vec<f64> = Vec::new();
    let mut spans: Vec<(usize, usize)> = Vec::with_capacity(links);

    for l in 0..links {
        let post = inv_sqrt_pd_mat(&own_omegas[l])?;
        let pre = inv_sqrt_pd_mat(&reverse_omegas[l])?;
        let whitened = &post * spec.channel(l, l) * &pre;
        let svd = whitened
            .try_svd(false, true, f64::EPSILON, 10_000)
            .ok_or(Error::SvdFailure)?;
        let g = svd.v_t.expect("requested right singular vectors").adjoint();
        let pre_inv = &pre * &pre;
        // physical power consumed by one unit on equivalent subchannel i
        let cost_mat = g.adjoint() * &pre_inv * &g;

        let start = pooled_gains.len();
        for (i, s) in svd.singular_values.iter().enumerate() {
            pooled_gains.push(s * s);
            pooled_weights.push(spec.weights()[l]);
            pooled_costs.push(cost_mat[(i, i)].re);
        }
        spans.push((start, pooled_gains.len()));
        basis.push(g);
        pre_inv_sqrt.push(pre);
    }

    let level = shared_water_level(
        &pooled_gains,
        &pooled_weights,
        &pooled_costs,
        spec.total_power(),
    )?;

    let mut out = Vec::with_capacity(links);
    for l in 0..links {
        let (start, end) = spans[l];
        let g = &basis[l];
        let mut d = CMat::zeros(g.ncols(), g.ncols());
        for i in start..end {
            let p = if pooled_gains[i] > 0.0 {
                (level * pooled_weights[i] - 1.0 / pooled_gains[i]).max(0.0)
            } else {
                0.0
            };
            d[(i - start, i - start)] = num_complex::Complex64::new(p, 0.0);
        }
        let equivalent = g * d * g.adjoint();
        let sigma = symmetrize_unchecked(&(&pre_inv_sqrt[l] * equivalent * &pre_inv_sqrt[l]));
        out.push(HermitianPsd::try_new(sigma)?);
    }
    Ok(out)
}

/// Iterative polite water-filling over the whole network. The forward
/// covariances start from the configured initialization (so all algorithms
/// can share one starting point); the reverse side starts from their
/// covariance transformation.
pub fn pwf_solve(spec: &NetworkSpec, config: &BaselineConfig) -> Result<SolveResult> {
    config.validate()?;
    let solver = &config.solver;

    let mut sigma: Vec<HermitianPsd> = init_covariances(spec, solver)?.entries().to_vec();
    // Seed the reverse side from the same starting point so the first
    // forward pass already sees representative pre-whiteners. On parallel
    // channels and single links the reverse interference is identity no
    // matter what, which keeps the first-pass-optimal property intact.
    let mut sigma_hat: Vec<HermitianPsd> = {
        let omegas = spec.omega_all(&sigma, Direction::Forward);
        transform(spec, &sigma, &omegas, Direction::Forward)?.0
    };

    let mut rate = 0.0;
    let mut forward_rates: Vec<f64> = Vec::new();
    let mut trace = solver.record_trace.then(IterationTrace::default);
    let mut converged = false;
    let mut iterations = 0;

    for n in 1..=solver.max_iters {
        let started = Instant::now();
        let previous = rate;

        sigma = pwf_forward_pass(spec, &sigma, &sigma_hat).map_err(|e| e.at_iteration(n))?;
        let omegas = spec.omega_all(&sigma, Direction::Forward);
        rate = crate::network::wsr_given_omegas(spec, &sigma, &omegas, Direction::Forward)
            .map_err(|e| e.at_iteration(n))?;

        let (hat, _mu) =
            transform(spec, &sigma, &omegas, Direction::Forward).map_err(|e| e.at_iteration(n))?;
        sigma_hat = hat;
        let omega_hats = spec.omega_all(&sigma_hat, Direction::Reverse);
        let reverse_rate =
            crate::network::wsr_given_omegas(spec, &sigma_hat, &omega_hats, Direction::Reverse)
                .map_err(|e| e.at_iteration(n))?;

        forward_rates.push(rate);
        if let Some(trace) = trace.as_mut() {
            let fwd_set = CovarianceSet::from_parts(Direction::Forward, sigma.clone());
            let rev_set = CovarianceSet::from_parts(Direction::Reverse, sigma_hat.clone());
            let kkt_residual =
                residual(spec, &fwd_set, &rev_set).map_err(|e| e.at_iteration(n))?;
            trace.records.push(IterationRecord {
                iteration: n,
                forward_wsr: rate,
                reverse_wsr: reverse_rate,
                kkt_residual,
                elapsed: started.elapsed(),
            });
        }

        iterations = n;
        if (rate - previous).abs() <= solver.tol {
            converged = true;
            break;
        }
    }

    if !converged {
        // A flat trailing window would have tripped the step tolerance, so
        // after the cap this stays false for oscillating runs.
        let window = config.oscillation_window.min(forward_rates.len());
        let tail = &forward_rates[forward_rates.len() - window..];
        let spread = tail.iter().cloned().fold(f64::MIN, f64::max)
            - tail.iter().cloned().fold(f64::MAX, f64::min);
        converged = spread <= solver.tol;
    }

    Ok(SolveResult {
        sigma: CovarianceSet::from_parts(Direction::Forward, sigma),
        sigma_hat: CovarianceSet::from_parts(Direction::Reverse, sigma_hat),
        wsr: rate,
        iterations,
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::water_fill;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn test_channel(rows: usize, cols: usize, seed: &mut u64) -> CMat {
        CMat::from_fn(rows, cols, |_, _| {
            let mut next = || {
                *seed = seed
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            };
            c(next(), next())
        })
    }

    #[test]
    fn single_user_matches_water_filling_in_first_pass() {
        let mut seed = 5u64;
        let h = test_channel(3, 3, &mut seed);
        let spec = NetworkSpec::new(vec![vec![h.clone()]], vec![1.0], 20.0, None).unwrap();

        let gains: Vec<f64> = (h.adjoint() * &h).symmetric_eigenvalues().iter().copied().collect();
        let powers = water_fill(&gains, 1.0, 20.0).unwrap();
        let capacity: f64 = gains.iter().zip(&powers).map(|(g, p)| (1.0 + g * p).ln()).sum();

        let config = BaselineConfig {
            solver: crate::dual_link::SolverConfig {
                record_trace: true,
                ..Default::default()
            },
            ..Default::default()
        };
        let result = pwf_solve(&spec, &config).unwrap();
        assert!(result.converged);
        // Already optimal after the first forward pass.
        let first = result.trace.as_ref().unwrap().records[0].forward_wsr;
        assert!((first - capacity).abs() <= 1e-8 * capacity);
        assert!((result.wsr - capacity).abs() <= 1e-8 * capacity);
    }

    #[test]
    fn parallel_channels_are_solved_in_the_first_pass() {
        // Two non-interfering scalar links: joint water-filling over both.
        let zero = CMat::zeros(1, 1);
        let h = |x: f64| CMat::from_row_slice(1, 1, &[c(x, 0.0)]);
        let spec = NetworkSpec::new(
            vec![vec![h(1.0), zero.clone()], vec![zero, h(2.0)]],
            vec![1.0, 1.0],
            5.0,
            None,
        )
        .unwrap();
        let config = BaselineConfig {
            solver: crate::dual_link::SolverConfig {
                record_trace: true,
                ..Default::default()
            },
            ..Default::default()
        };
        let result = pwf_solve(&spec, &config).unwrap();

        let powers = water_fill(&[1.0, 4.0], 1.0, 5.0).unwrap();
        let expected: f64 = powers
            .iter()
            .zip([1.0, 4.0])
            .map(|(p, g)| (1.0 + g * p).ln())
            .sum();
        let first = result.trace.as_ref().unwrap().records[0].forward_wsr;
        assert!((first - expected).abs() <= 1e-10 * expected);
    }

    #[test]
    fn power_budget_is_spent_exactly() {
        let mut seed = 33u64;
        let channels: Vec<Vec<CMat>> = (0..3)
            .map(|_| (0..3).map(|_| test_channel(2, 2, &mut seed)).collect())
            .collect();
        let spec = NetworkSpec::new(channels, vec![1.0, 0.7, 0.9], 50.0, None).unwrap();
        let result = pwf_solve(&spec, &BaselineConfig::default()).unwrap();
        assert!((result.sigma.total_trace() - 50.0).abs() <= 1e-9 * 50.0);
        assert!((result.sigma_hat.total_trace() - 50.0).abs() <= 1e-9 * 50.0);
    }

    #[test]
    fn converged_pwf_satisfies_the_stationarity_residual() {
        let mut seed = 101u64;
        let channels: Vec<Vec<CMat>> = (0..3)
            .map(|l| {
                (0..3)
                    .map(|k| {
                        let scale = if l == k { 1.0 } else { 0.3 };
                        test_channel(2, 2, &mut seed) * c(scale, 0.0)
                    })
                    .collect()
            })
            .collect();
        let spec = NetworkSpec::new(channels, vec![1.0, 1.0, 1.0], 30.0, None).unwrap();
        let config = BaselineConfig {
            solver: crate::dual_link::SolverConfig {
                tol: 1e-11,
                max_iters: 2000,
                ..Default::default()
            },
            ..Default::default()
        };
        let result = pwf_solve(&spec, &config).unwrap();
        assert!(result.converged);
        let res = residual(&spec, &result.sigma, &result.sigma_hat).unwrap();
        assert!(res < 1e-5, "residual {res}");
    }
}

