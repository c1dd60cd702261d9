//! Weighted-MMSE block-coordinate solver.
//!
//! The weighted sum-rate problem is rewritten as a weighted sum-MSE problem
//! over three variable blocks: receive filters `U_l`, MSE weights `W_l`, and
//! square transmit beamformers `V_l` with `Σ_l = V_l V_l†`. Each block update
//! is the exact minimizer with the others fixed, so the rate is
//! nondecreasing over full iterations:
//!
//! - `U_l = T_l^{-1} H_{l,l} V_l` with `T_l` the total received covariance,
//! - `W_l = I + V_l† H_{l,l}† Ω_l^{-1} H_{l,l} V_l` (the inverse MSE matrix),
//! - `V_l = (A_l + μI)^{-1} B_l` with
//!   `A_l = Σ_k w_k H_{k,l}† U_k W_k U_k† H_{k,l}`, `B_l = w_l H_{l,l}† U_l W_l`,
//!   and `μ ≥ 0` the smallest multiplier keeping `Σ tr(V V†) ≤ P_T`.
//!
//! The multiplier search works in the eigenbasis of each `A_l`, where the
//! transmit power is an explicit rational function of `μ`, and bisects to a
//! relative power accuracy of 1e-13.

use web_time::Instant;

use crate::dual_link::{
    forward_to_reverse, init_covariances, residual, IterationRecord, IterationTrace, SolveResult,
};
use crate::error::{Error, Result};
use crate::hermitian::{inv_pd_mat, sqrt_psd_mat, symmetrize_unchecked, CMat, HermitianPsd};
use crate::network::{CovarianceSet, Direction, NetworkSpec};
use num_complex::Complex64;

use super::BaselineConfig;

struct EigenSystem {
    /// Eigenvalues of A_l, clamped to be nonnegative.
    lambda: Vec<f64>,
    /// Eigenvectors of A_l.
    q: CMat,
    /// B_l rotated into the eigenbasis.
    b_rotated: CMat,
}

impl EigenSystem {
    fn new(a: &CMat, b: &CMat) -> Self {
        let eig = a.clone().symmetric_eigen();
        let b_rotated = eig.eigenvectors.adjoint() * b;
        Self {
            lambda: eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect(),
            q: eig.eigenvectors,
            b_rotated,
        }
    }

    /// tr(V(μ) V(μ)†) = Σ_{i,j} |b̃_ij|² / (λ_i + μ)².
    fn power(&self, mu: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.b_rotated.nrows() {
            let denom = self.lambda[i] + mu;
            for j in 0..self.b_rotated.ncols() {
                let b2 = self.b_rotated[(i, j)].norm_sqr();
                if b2 == 0.0 {
                    continue;
                }
                if denom <= 0.0 {
                    return f64::INFINITY;
                }
                acc += b2 / (denom * denom);
            }
        }
        acc
    }

    fn beamformer(&self, mu: f64) -> CMat {
        let mut v = self.b_rotated.clone();
        for i in 0..v.nrows() {
            let denom = self.lambda[i] + mu;
            for j in 0..v.ncols() {
                if v[(i, j)].norm_sqr() == 0.0 {
                    continue;
                }
                v[(i, j)] /= Complex64::new(denom, 0.0);
            }
        }
        &self.q * v
    }
}

/// Smallest μ ≥ 0 with total power within the budget, found by bisection.
fn solve_multiplier(systems: &[EigenSystem], budget: f64) -> Result<f64> {
    let total = |mu: f64| systems.iter().map(|s| s.power(mu)).sum::<f64>();
    if total(0.0) <= budget {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1e-6;
    let mut guard = 0;
    while total(hi) > budget {
        lo = hi;
        hi *= 4.0;
        guard += 1;
        if guard > 400 {
            return Err(Error::MultiplierSearch(
                "no bracket for the power multiplier".into(),
            ));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-15 * hi {
            break;
        }
    }
    let mu = hi;
    let p = total(mu);
    if !(p.is_finite()) || (p - budget).abs() > 1e-10 * budget {
        return Err(Error::MultiplierSearch(format!(
            "bisection left power {p} for budget {budget}"
        )));
    }
    Ok(mu)
}

/// WMMSE from the configured initialization.
pub fn wmmse_solve(spec: &NetworkSpec, config: &BaselineConfig) -> Result<SolveResult> {
    config.validate()?;
    let sigma0 = init_covariances(spec, &config.solver)?;
    wmmse_solve_from(spec, &sigma0, config)
}

/// WMMSE from an explicit forward covariance starting point.
pub fn wmmse_solve_from(
    spec: &NetworkSpec,
    sigma0: &CovarianceSet,
    config: &BaselineConfig,
) -> Result<SolveResult> {
    config.validate()?;
    let links = spec.links();
    let weights = spec.weights();

    let mut v: Vec<CMat> = sigma0
        .entries()
        .iter()
        .map(|s| sqrt_psd_mat(s.matrix()))
        .collect::<Result<_>>()?;

    let covs = |v: &[CMat]| -> Result<Vec<HermitianPsd>> {
        v.iter()
            .map(|vl| HermitianPsd::try_new(symmetrize_unchecked(&(vl * vl.adjoint()))))
            .collect()
    };

    let mut sigma = covs(&v)?;
    let mut omegas = spec.omega_all(&sigma, Direction::Forward);
    let mut rate = crate::network::wsr_given_omegas(spec, &sigma, &omegas, Direction::Forward)?;

    let mut trace = config.solver.record_trace.then(IterationTrace::default);
    let mut converged = false;
    let mut iterations = 0;

    for n in 1..=config.solver.max_iters {
        let started = Instant::now();
        let previous = rate;

        // Receive filters and MSE weights at the current transmit covariances.
        let mut filters: Vec<CMat> = Vec::with_capacity(links);
        let mut mse_weights: Vec<CMat> = Vec::with_capacity(links);
        for l in 0..links {
            let h = spec.channel(l, l);
            let total = &omegas[l] + spec.signal_cov(&sigma[l], l, Direction::Forward);
            let total_inv = inv_pd_mat(&total).map_err(|e| e.at_iteration(n))?;
            let u = &total_inv * h * &v[l];
            let om_inv = inv_pd_mat(&omegas[l]).map_err(|e| e.at_iteration(n))?;
            let hv = h * &v[l];
            let w = CMat::identity(v[l].ncols(), v[l].ncols())
                + symmetrize_unchecked(&(hv.adjoint() * om_inv * &hv));
            filters.push(u);
            mse_weights.push(w);
        }

        // Transmit update under the sum power constraint.
        let mut systems: Vec<EigenSystem> = Vec::with_capacity(links);
        for l in 0..links {
            let tx_dim = spec.tx_antennas()[l];
            let mut a = CMat::zeros(tx_dim, tx_dim);
            for k in 0..links {
                if k != l && spec.is_masked(k, l) {
                    continue;
                }
                let h = spec.channel(k, l);
                let uw = &filters[k] * &mse_weights[k];
                a += (h.adjoint() * (&uw * filters[k].adjoint()) * h)
                    * Complex64::new(weights[k], 0.0);
            }
            let h = spec.channel(l, l);
            let b = (h.adjoint() * &filters[l] * &mse_weights[l]) * Complex64::new(weights[l], 0.0);
            systems.push(EigenSystem::new(&symmetrize_unchecked(&a), &b));
        }
        let mu = solve_multiplier(&systems, spec.total_power()).map_err(|e| e.at_iteration(n))?;
        v = systems.iter().map(|s| s.beamformer(mu)).collect();

        sigma = covs(&v).map_err(|e| e.at_iteration(n))?;
        omegas = spec.omega_all(&sigma, Direction::Forward);
        rate = crate::network::wsr_given_omegas(spec, &sigma, &omegas, Direction::Forward)
            .map_err(|e| e.at_iteration(n))?;

        if let Some(trace) = trace.as_mut() {
            let fwd_set = CovarianceSet::from_parts(Direction::Forward, sigma.clone());
            let hat = forward_to_reverse(spec, &fwd_set).map_err(|e| e.at_iteration(n))?;
            let reverse_rate = crate::network::reverse_weighted_sum_rate(spec, &hat)
                .map_err(|e| e.at_iteration(n))?;
            let kkt_residual = residual(spec, &fwd_set, &hat).map_err(|e| e.at_iteration(n))?;
            trace.records.push(IterationRecord {
                iteration: n,
                forward_wsr: rate,
                reverse_wsr: reverse_rate,
                kkt_residual,
                elapsed: started.elapsed(),
            });
        }

        iterations = n;
        if (rate - previous).abs() <= config.solver.tol {
            converged = true;
            break;
        }
    }

    let sigma_set = CovarianceSet::from_parts(Direction::Forward, sigma);
    let sigma_hat = forward_to_reverse(spec, &sigma_set)?;
    Ok(SolveResult {
        sigma: sigma_set,
        sigma_hat,
        wsr: rate,
        iterations,
        converged,
        trace,
    })
}
