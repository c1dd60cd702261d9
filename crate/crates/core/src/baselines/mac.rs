//! Sum-capacity ground truth for multiaccess-shaped networks.
//!
//! When every link terminates at one physical receiver and interference is
//! peeled off in a fixed decoding order, the sum rate telescopes to the
//! concave function `log|I + Σ_l H_l P_l H_l†|`. Its maximum over the
//! power-constrained PSD covariances is the MAC sum capacity, and every
//! stationary point is global, which makes an independent convex solver a
//! trustworthy reference for the fixed-point algorithms.
//!
//! The maximization runs projected gradient ascent with a backtracking step
//! and the exact Frobenius projection onto `{P ⪰ 0, Σ tr(P) ≤ P_T}`
//! (eigenvalue soft-thresholding with a shared level).

use crate::error::{Error, Result};
use crate::hermitian::{inv_pd_mat, logdet_pd_mat, symmetrize_unchecked, CMat};
use crate::network::NetworkSpec;
use num_complex::Complex64;

/// Checks the MAC shape and returns the per-user uplink channels.
///
/// Requirements: identical channels into every (physical) receiver row,
/// equal receive antenna counts, equal weights, and a cancellation mask that
/// encodes one total decoding order (a strict triangle in either
/// orientation).
fn validate_mac(spec: &NetworkSpec) -> Result<(Vec<CMat>, f64)> {
    let links = spec.links();
    let rx = spec.rx_antennas()[0];
    if spec.rx_antennas().iter().any(|&n| n != rx) {
        return Err(Error::InvalidNetwork(
            "not MAC-shaped: receive antenna counts differ".into(),
        ));
    }
    for k in 0..links {
        for l in 1..links {
            if spec.channel(l, k) != spec.channel(0, k) {
                return Err(Error::InvalidNetwork(format!(
                    "not MAC-shaped: channel ({l}, {k}) differs from ({}, {k})",
                    0
                )));
            }
        }
    }
    let w = spec.weights()[0];
    if spec
        .weights()
        .iter()
        .any(|&x| (x - w).abs() > 1e-12 * w.abs())
    {
        return Err(Error::InvalidNetwork(
            "not MAC-shaped: link weights differ".into(),
        ));
    }
    let lower = |l: usize, k: usize| k < l;
    let upper = |l: usize, k: usize| k > l;
    let matches = |f: &dyn Fn(usize, usize) -> bool| {
        (0..links).all(|l| (0..links).all(|k| l == k || spec.is_masked(l, k) == f(l, k)))
    };
    if !matches(&lower) && !matches(&upper) {
        return Err(Error::InvalidNetwork(
            "not MAC-shaped: cancellation mask is not a strict decoding order".into(),
        ));
    }
    let h = (0..links).map(|k| spec.channel(0, k).clone()).collect();
    Ok((h, w))
}

/// Frobenius projection of Hermitian blocks onto the PSD cone intersected
/// with the trace ball of radius `budget`: eigenvalues are shifted down by a
/// common level θ ≥ 0 and clipped at zero.
fn project(blocks: &[CMat], budget: f64) -> Vec<CMat> {
    let eigs: Vec<_> = blocks
        .iter()
        .map(|b| symmetrize_unchecked(b).symmetric_eigen())
        .collect();
    let mut all: Vec<f64> = eigs
        .iter()
        .flat_map(|e| e.eigenvalues.iter().copied())
        .collect();
    all.sort_by(|a, b| b.total_cmp(a));

    let clipped: f64 = all.iter().map(|&l| l.max(0.0)).sum();
    let mut theta = 0.0;
    if clipped > budget {
        // Largest active prefix of sorted eigenvalues: θ from the running sum.
        let mut running = 0.0;
        for (count, &lam) in all.iter().enumerate() {
            running += lam;
            let candidate = (running - budget) / (count + 1) as f64;
            let next = all.get(count + 1).copied().unwrap_or(f64::NEG_INFINITY);
            if candidate >= next && candidate <= lam {
                theta = candidate;
                break;
            }
        }
    }
    eigs.into_iter()
        .map(|e| {
            let d = CMat::from_diagonal(
                &e.eigenvalues
                    .map(|l| Complex64::new((l - theta).max(0.0), 0.0)),
            );
            symmetrize_unchecked(&(&e.eigenvectors * d * e.eigenvectors.adjoint()))
        })
        .collect()
}

/// Sum capacity of a MAC-shaped network (weighted by the common link
/// weight), computed independently of the fixed-point solvers.
pub fn mac_capacity_oracle(spec: &NetworkSpec) -> Result<f64> {
    let (channels, weight) = validate_mac(spec)?;
    let budget = spec.total_power();
    let rx = channels[0].nrows();

    let objective = |blocks: &[CMat]| -> Result<f64> {
        let mut m = CMat::identity(rx, rx);
        for (h, p) in channels.iter().zip(blocks) {
            m += h * p * h.adjoint();
        }
        logdet_pd_mat(&symmetrize_unchecked(&m))
    };
    let gradient = |blocks: &[CMat]| -> Result<Vec<CMat>> {
        let mut m = CMat::identity(rx, rx);
        for (h, p) in channels.iter().zip(blocks) {
            m += h * p * h.adjoint();
        }
        let inv = inv_pd_mat(&symmetrize_unchecked(&m))?;
        Ok(channels
            .iter()
            .map(|h| symmetrize_unchecked(&(h.adjoint() * &inv * h)))
            .collect())
    };

    let total_tx: usize = spec.tx_antennas().iter().sum();
    let mut point: Vec<CMat> = spec
        .tx_antennas()
        .iter()
        .map(|&n| CMat::identity(n, n) * Complex64::new(budget / total_tx as f64, 0.0))
        .collect();
    let mut value = objective(&point)?;
    let mut step = 1.0;
    let tol = 1e-8 * budget.max(1.0);

    for _ in 0..500_000 {
        let grad = gradient(&point)?;

        // Stationarity: how far a unit probe step moves after projection.
        let probe: Vec<CMat> = point.iter().zip(&grad).map(|(p, g)| p + g).collect();
        let probe = project(&probe, budget);
        let movement: f64 = point
            .iter()
            .zip(&probe)
            .map(|(p, q)| (p - q).norm_squared())
            .sum::<f64>()
            .sqrt();
        if movement <= tol {
            return Ok(weight * value);
        }

        // Backtracking ascent step along the projection arc.
        loop {
            let candidate: Vec<CMat> = point
                .iter()
                .zip(&grad)
                .map(|(p, g)| p + g * Complex64::new(step, 0.0))
                .collect();
            let candidate = project(&candidate, budget);
            let cand_value = objective(&candidate)?;
            if cand_value > value || step < 1e-16 {
                point = candidate;
                value = cand_value;
                step = (step * 1.5).min(1e6);
                break;
            }
            step *= 0.5;
        }
    }
    Err(Error::MultiplierSearch(
        "projected gradient ascent did not reach the stationarity target".into(),
    ))
}

/// Build a MAC-shaped network: `users` links into one `rx_antennas` receiver,
/// unit weights, and a successive-decoding mask. `channels[k]` is the uplink
/// of user `k`.
pub fn mac_network(channels: Vec<CMat>, total_power: f64) -> Result<NetworkSpec> {
    let users = channels.len();
    let grid = (0..users)
        .map(|_| channels.clone())
        .collect::<Vec<Vec<CMat>>>();
    let mask = (0..users)
        .map(|l| (0..users).map(|k| k < l).collect())
        .collect();
    NetworkSpec::new(grid, vec![1.0; users], total_power, Some(mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual_link::{solve, SolverConfig};

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
    fn single_user_equals_water_filling_capacity() {
        let mut seed = 4u64;
        let h = test_channel(3, 2, &mut seed);
        let spec = mac_network(vec![h.clone()], 8.0).unwrap();
        let oracle = mac_capacity_oracle(&spec).unwrap();

        let gains: Vec<f64> = (h.adjoint() * &h)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        let powers = crate::hermitian::water_fill(&gains, 1.0, 8.0).unwrap();
        let capacity: f64 = gains.iter().zip(&powers).map(|(g, p)| (1.0 + g * p).ln()).sum();
        assert!(
            (oracle - capacity).abs() <= 1e-6 * capacity,
            "oracle {oracle} vs water-filling {capacity}"
        );
    }

    #[test]
    fn two_user_scalar_mac_closed_form() {
        // h = [1, 1], P_T = 2: capacity log(1 + p1 + p2) = ln 3.
        let one = CMat::from_row_slice(1, 1, &[c(1.0, 0.0)]);
        let spec = mac_network(vec![one.clone(), one], 2.0).unwrap();
        let oracle = mac_capacity_oracle(&spec).unwrap();
        assert!((oracle - 3f64.ln()).abs() < 1e-7, "oracle {oracle}");
    }

    #[test]
    fn fixed_point_solver_agrees_with_the_oracle() {
        let mut seed = 21u64;
        let channels: Vec<CMat> = (0..3).map(|_| test_channel(2, 2, &mut seed)).collect();
        let spec = mac_network(channels, 10.0).unwrap();
        let oracle = mac_capacity_oracle(&spec).unwrap();
        let result = solve(&spec, &SolverConfig::default()).unwrap();
        assert!(
            (result.wsr - oracle).abs() <= 1e-3 * oracle,
            "dual link {} vs oracle {oracle}",
            result.wsr
        );
    }

    #[test]
    fn rejects_non_mac_networks() {
        let mut seed = 9u64;
        let channels: Vec<Vec<CMat>> = (0..2)
            .map(|_| (0..2).map(|_| test_channel(2, 2, &mut seed)).collect())
            .collect();
        let spec = NetworkSpec::new(channels, vec![1.0, 1.0], 5.0, None).unwrap();
        assert!(mac_capacity_oracle(&spec).is_err());
    }
}
