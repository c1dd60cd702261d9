//! Colored noise and weighted power constraints, reduced to the white-noise
//! sum-power problem by pre- and post-whitening.
//!
//! A network with per-link noise covariance `W_l` and weighted power
//! constraint `Σ tr(Σ_l Ŵ_l) ≤ P_T` is equivalent to a white-noise network
//! with channels `H'_{l,k} = W_l^{-1/2} H_{l,k} Ŵ_k^{-1/2}` and plain sum
//! power constraint. Solve the equivalent network, then map the solution
//! back with `Σ_l = Ŵ_l^{-1/2} Σ'_l Ŵ_l^{-1/2}`.
//!
//! The pre-whitener index is the transmitter's weight matrix `Ŵ_k`, which is
//! the dimensionally consistent choice for a non-square coupling `H_{l,k}`.

use crate::error::{Error, Result};
use crate::hermitian::{
    inv_sqrt_pd_mat, logdet_pd_mat, symmetrize_unchecked, CMat, HermitianPsd,
};
use crate::network::{CovarianceSet, Direction, NetworkSpec};

fn validate_pd_blocks(
    mats: Vec<CMat>,
    dims: &[usize],
    what: &str,
) -> Result<Vec<HermitianPsd>> {
    if mats.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} {what} matrices for {} links",
            mats.len(),
            dims.len()
        )));
    }
    let mut out = Vec::with_capacity(mats.len());
    for (l, m) in mats.into_iter().enumerate() {
        if m.nrows() != dims[l] || m.ncols() != dims[l] {
            return Err(Error::DimensionMismatch(format!(
                "{what} matrix of link {l} is {}x{}, expected {}x{}",
                m.nrows(),
                m.ncols(),
                dims[l],
                dims[l]
            )));
        }
        let h = HermitianPsd::try_new(m)?;
        // Positive definiteness is required up front; the whitener inverts these.
        inv_sqrt_pd_mat(h.matrix())?;
        out.push(h);
    }
    Ok(out)
}

/// Per-link receiver noise covariances `W_l`, each positive definite.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    covariances: Vec<HermitianPsd>,
}

impl NoiseModel {
    pub fn try_new(spec: &NetworkSpec, covariances: Vec<CMat>) -> Result<Self> {
        Ok(Self {
            covariances: validate_pd_blocks(covariances, spec.rx_antennas(), "noise")?,
        })
    }

    pub fn identity(spec: &NetworkSpec) -> Self {
        Self {
            covariances: spec
                .rx_antennas()
                .iter()
                .map(|&n| HermitianPsd::identity(n))
                .collect(),
        }
    }

    pub fn get(&self, l: usize) -> &HermitianPsd {
        &self.covariances[l]
    }

    pub fn covariances(&self) -> &[HermitianPsd] {
        &self.covariances
    }
}

/// Per-link transmit power weight matrices `Ŵ_l`, each positive definite.
#[derive(Debug, Clone)]
pub struct PowerWeights {
    weights: Vec<HermitianPsd>,
}

impl PowerWeights {
    pub fn try_new(spec: &NetworkSpec, weights: Vec<CMat>) -> Result<Self> {
        Ok(Self {
            weights: validate_pd_blocks(weights, spec.tx_antennas(), "power weight")?,
        })
    }

    pub fn identity(spec: &NetworkSpec) -> Self {
        Self {
            weights: spec
                .tx_antennas()
                .iter()
                .map(|&n| HermitianPsd::identity(n))
                .collect(),
        }
    }

    pub fn get(&self, l: usize) -> &HermitianPsd {
        &self.weights[l]
    }

    pub fn weights(&self) -> &[HermitianPsd] {
        &self.weights
    }
}

/// Build the white-noise, sum-power equivalent of a colored-noise network:
/// `H'_{l,k} = W_l^{-1/2} H_{l,k} Ŵ_k^{-1/2}`, identity noise, same budget,
/// same weights and cancellation mask.
pub fn to_equivalent(
    spec: &NetworkSpec,
    noise: &NoiseModel,
    power_weights: &PowerWeights,
) -> Result<NetworkSpec> {
    let links = spec.links();
    if noise.covariances().len() != links || power_weights.weights().len() != links {
        return Err(Error::DimensionMismatch(
            "whitening blocks do not match the network size".into(),
        ));
    }
    let post: Vec<CMat> = noise
        .covariances()
        .iter()
        .map(|w| inv_sqrt_pd_mat(w.matrix()))
        .collect::<Result<_>>()?;
    let pre: Vec<CMat> = power_weights
        .weights()
        .iter()
        .map(|w| inv_sqrt_pd_mat(w.matrix()))
        .collect::<Result<_>>()?;
    let channels = (0..links)
        .map(|l| {
            (0..links)
                .map(|k| &post[l] * spec.channel(l, k) * &pre[k])
                .collect()
        })
        .collect();
    NetworkSpec::new(
        channels,
        spec.weights().to_vec(),
        spec.total_power(),
        Some(spec.cancel_mask().to_vec()),
    )
}

/// Map a solution of the equivalent network back to the original one:
/// `Σ_l = Ŵ_l^{-1/2} Σ'_l Ŵ_l^{-1/2}`. Preserves the weighted power,
/// `tr(Σ_l Ŵ_l) = tr(Σ'_l)`.
pub fn recover_solution(
    sigma_prime: &CovarianceSet,
    power_weights: &PowerWeights,
) -> Result<CovarianceSet> {
    if sigma_prime.direction() != Direction::Forward {
        return Err(Error::DimensionMismatch(
            "only forward covariances live on the transmit side".into(),
        ));
    }
    if sigma_prime.len() != power_weights.weights().len() {
        return Err(Error::DimensionMismatch(format!(
            "{} covariances for {} power weights",
            sigma_prime.len(),
            power_weights.weights().len()
        )));
    }
    let mut entries = Vec::with_capacity(sigma_prime.len());
    for l in 0..sigma_prime.len() {
        let w = inv_sqrt_pd_mat(power_weights.get(l).matrix())?;
        let m = &w * sigma_prime.get(l).matrix() * &w;
        entries.push(HermitianPsd::try_new(symmetrize_unchecked(&m))?);
    }
    Ok(CovarianceSet::from_parts(Direction::Forward, entries))
}

/// Weighted transmit power `Σ_l tr(Σ_l Ŵ_l)` of a forward covariance set.
pub fn weighted_power(sigma: &CovarianceSet, power_weights: &PowerWeights) -> Result<f64> {
    if sigma.len() != power_weights.weights().len() {
        return Err(Error::DimensionMismatch(
            "covariances and power weights disagree on link count".into(),
        ));
    }
    let mut acc = 0.0;
    for l in 0..sigma.len() {
        acc += (sigma.get(l).matrix() * power_weights.get(l).matrix()).trace().re;
    }
    Ok(acc)
}

/// Rate of forward link `l` under colored noise: the interference-plus-noise
/// covariance is `W_l + Σ_{k≠l} H Σ H†` instead of starting from identity.
/// This is the direct-evaluation side of the whitening equivalence.
pub fn colored_link_rate(
    spec: &NetworkSpec,
    noise: &NoiseModel,
    sigma: &CovarianceSet,
    l: usize,
) -> Result<f64> {
    let mut omega = noise.get(l).matrix().clone();
    for k in 0..spec.links() {
        if k == l || spec.is_masked(l, k) {
            continue;
        }
        let h = spec.channel(l, k);
        omega += h * sigma.get(k).matrix() * h.adjoint();
    }
    let omega = symmetrize_unchecked(&omega);
    let h = spec.channel(l, l);
    let total = &omega + symmetrize_unchecked(&(h * sigma.get(l).matrix() * h.adjoint()));
    Ok(logdet_pd_mat(&total)? - logdet_pd_mat(&omega)?)
}

/// Weighted sum-rate under colored noise.
pub fn colored_weighted_sum_rate(
    spec: &NetworkSpec,
    noise: &NoiseModel,
    sigma: &CovarianceSet,
) -> Result<f64> {
    let mut acc = 0.0;
    for l in 0..spec.links() {
        acc += spec.weights()[l] * colored_link_rate(spec, noise, sigma, l)?;
    }
    Ok(acc)
}
