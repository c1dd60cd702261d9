//! Interference network model: channels, link weights, power budget, and the
//! forward/reverse rate expressions.
//!
//! A network has `L` mutually interfering links. Link `l` transmits from a
//! node with `tx_antennas[l]` antennas to a node with `rx_antennas[l]`
//! antennas over the direct channel `H[l][l]`; `H[l][k]` couples transmitter
//! `k` into receiver `l`. Noise is white with identity covariance (colored
//! noise is handled by the [`crate::whitening`] transform). Interference that
//! is removed by successive decoding or dirty-paper coding is modeled by the
//! cancellation mask: a masked `(l, k)` pair behaves exactly like a zero
//! channel matrix.
//!
//! The reverse (dual) network swaps the roles of all transmitters and
//! receivers and conjugate-transposes every channel. Reverse-link operations
//! never materialize that network; they index the forward channels
//! accordingly.

pub mod json;

use crate::error::{Error, Result};
use crate::hermitian::{
    check_finite, logdet_pd_mat, symmetrize_unchecked, CMat, HermitianPsd,
};

/// Convert an average channel gain in dB to linear scale: g = 10^(dB/10).
pub fn gain_db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Which side of the rate duality a quantity lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    pub fn flipped(self) -> Direction {
        match self {
            Direction::Forward => Direction::Reverse,
            Direction::Reverse => Direction::Forward,
        }
    }
}

/// Immutable description of a B-MAC interference network.
#[derive(Debug, Clone)]
pub struct NetworkSpec {
    tx_antennas: Vec<usize>,
    rx_antennas: Vec<usize>,
    weights: Vec<f64>,
    total_power: f64,
    channels: Vec<Vec<CMat>>,
    cancel_mask: Vec<Vec<bool>>,
}

impl NetworkSpec {
    /// Build and validate a network. `channels[l][k]` must have shape
    /// `rx_antennas[l] x tx_antennas[k]`; antenna counts are derived from the
    /// channel shapes. `cancel_mask[l][k] = true` treats `H[l][k]` as zero;
    /// the diagonal must be unmasked.
    pub fn new(
        channels: Vec<Vec<CMat>>,
        weights: Vec<f64>,
        total_power: f64,
        cancel_mask: Option<Vec<Vec<bool>>>,
    ) -> Result<Self> {
        let links = channels.len();
        if links == 0 {
            return Err(Error::InvalidNetwork("network has no links".into()));
        }
        if weights.len() != links {
            return Err(Error::InvalidNetwork(format!(
                "{} weights for {} links",
                weights.len(),
                links
            )));
        }
        for (l, &w) in weights.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidNetwork(format!(
                    "weight of link {l} must be positive, got {w}"
                )));
            }
        }
        if !(total_power > 0.0) || !total_power.is_finite() {
            return Err(Error::InvalidNetwork(format!(
                "total power must be positive, got {total_power}"
            )));
        }

        let rx_antennas: Vec<usize> = (0..links).map(|l| channels[l][0].nrows()).collect();
        let tx_antennas: Vec<usize> = (0..links).map(|k| channels[0][k].ncols()).collect();
        for l in 0..links {
            if channels[l].len() != links {
                return Err(Error::InvalidNetwork(format!(
                    "channel row {l} has {} entries, expected {links}",
                    channels[l].len()
                )));
            }
            for k in 0..links {
                let h = &channels[l][k];
                if h.nrows() != rx_antennas[l] || h.ncols() != tx_antennas[k] {
                    return Err(Error::InvalidNetwork(format!(
                        "channel ({l}, {k}) is {}x{}, expected {}x{}",
                        h.nrows(),
                        h.ncols(),
                        rx_antennas[l],
                        tx_antennas[k]
                    )));
                }
                check_finite(h)?;
            }
            if tx_antennas[l] == 0 || rx_antennas[l] == 0 {
                return Err(Error::InvalidNetwork(format!(
                    "link {l} has an empty antenna array"
                )));
            }
        }

        let cancel_mask = match cancel_mask {
            Some(mask) => {
                if mask.len() != links || mask.iter().any(|row| row.len() != links) {
                    return Err(Error::InvalidNetwork("cancel mask shape mismatch".into()));
                }
                for (l, row) in mask.iter().enumerate() {
                    if row[l] {
                        return Err(Error::InvalidNetwork(format!(
                            "cancel mask must not mask the direct channel of link {l}"
                        )));
                    }
                }
                mask
            }
            None => vec![vec![false; links]; links],
        };

        Ok(Self {
            tx_antennas,
            rx_antennas,
            weights,
            total_power,
            channels,
            cancel_mask,
        })
    }

    pub fn links(&self) -> usize {
        self.weights.len()
    }

    pub fn tx_antennas(&self) -> &[usize] {
        &self.tx_antennas
    }

    pub fn rx_antennas(&self) -> &[usize] {
        &self.rx_antennas
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    /// Raw channel matrix from transmitter `k` into receiver `l`
    /// (ignores the cancellation mask).
    pub fn channel(&self, l: usize, k: usize) -> &CMat {
        &self.channels[l][k]
    }

    pub fn is_masked(&self, l: usize, k: usize) -> bool {
        self.cancel_mask[l][k]
    }

    pub fn cancel_mask(&self) -> &[Vec<bool>] {
        &self.cancel_mask
    }

    /// The dual network: transmitter and receiver roles swapped, channels
    /// conjugate-transposed, weights and power budget unchanged.
    pub fn reversed(&self) -> NetworkSpec {
        let links = self.links();
        let channels = (0..links)
            .map(|l| (0..links).map(|k| self.channels[k][l].adjoint()).collect())
            .collect();
        let cancel_mask = (0..links)
            .map(|l| (0..links).map(|k| self.cancel_mask[k][l]).collect())
            .collect();
        NetworkSpec {
            tx_antennas: self.rx_antennas.clone(),
            rx_antennas: self.tx_antennas.clone(),
            weights: self.weights.clone(),
            total_power: self.total_power,
            channels,
            cancel_mask,
        }
    }

    /// Covariance dimension of link `l` on the given side: transmit antennas
    /// forward, receive antennas reverse.
    pub fn covariance_dim(&self, l: usize, direction: Direction) -> usize {
        match direction {
            Direction::Forward => self.tx_antennas[l],
            Direction::Reverse => self.rx_antennas[l],
        }
    }

    /// Dimension the interference-plus-noise covariance of link `l` acts on.
    fn omega_dim(&self, l: usize, direction: Direction) -> usize {
        match direction {
            Direction::Forward => self.rx_antennas[l],
            Direction::Reverse => self.tx_antennas[l],
        }
    }

    /// Interference-plus-noise covariance of link `l`:
    /// forward `Ω_l = I + Σ_{k≠l} H_{l,k} Σ_k H_{l,k}†`,
    /// reverse `Ω̂_l = I + Σ_{k≠l} H_{k,l}† Σ̂_k H_{k,l}`.
    pub(crate) fn omega_one(
        &self,
        covs: &[HermitianPsd],
        l: usize,
        direction: Direction,
    ) -> CMat {
        let dim = self.omega_dim(l, direction);
        let mut om = CMat::identity(dim, dim);
        for k in 0..self.links() {
            if k == l {
                continue;
            }
            let masked = match direction {
                Direction::Forward => self.cancel_mask[l][k],
                Direction::Reverse => self.cancel_mask[k][l],
            };
            if masked {
                continue;
            }
            let sig = covs[k].matrix();
            match direction {
                Direction::Forward => {
                    let h = &self.channels[l][k];
                    om += h * sig * h.adjoint();
                }
                Direction::Reverse => {
                    let h = &self.channels[k][l];
                    om += h.adjoint() * sig * h;
                }
            }
        }
        symmetrize_unchecked(&om)
    }

    pub(crate) fn omega_all(&self, covs: &[HermitianPsd], direction: Direction) -> Vec<CMat> {
        (0..self.links())
            .map(|l| self.omega_one(covs, l, direction))
            .collect()
    }

    /// Signal covariance `H Σ H†` seen at the receiving side of link `l`.
    pub(crate) fn signal_cov(&self, cov: &HermitianPsd, l: usize, direction: Direction) -> CMat {
        let h = &self.channels[l][l];
        let m = match direction {
            Direction::Forward => h * cov.matrix() * h.adjoint(),
            Direction::Reverse => h.adjoint() * cov.matrix() * h,
        };
        symmetrize_unchecked(&m)
    }
}

/// Per-link transmit covariance matrices for one side of the duality.
///
/// Every entry is a validated [`HermitianPsd`] and the total trace respects
/// the power budget it was constructed under.
#[derive(Debug, Clone)]
pub struct CovarianceSet {
    direction: Direction,
    entries: Vec<HermitianPsd>,
}

impl CovarianceSet {
    /// Validate raw matrices against a network: per-link dimensions, the
    /// Hermitian PSD invariant, and total trace within the power budget
    /// (a relative slack of 1e-9 absorbs rounding).
    pub fn try_new(spec: &NetworkSpec, direction: Direction, mats: Vec<CMat>) -> Result<Self> {
        if mats.len() != spec.links() {
            return Err(Error::DimensionMismatch(format!(
                "{} covariance matrices for {} links",
                mats.len(),
                spec.links()
            )));
        }
        let mut entries = Vec::with_capacity(mats.len());
        for (l, m) in mats.into_iter().enumerate() {
            let want = spec.covariance_dim(l, direction);
            if m.nrows() != want || m.ncols() != want {
                return Err(Error::DimensionMismatch(format!(
                    "covariance of link {l} is {}x{}, expected {want}x{want}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            entries.push(HermitianPsd::try_new(m)?);
        }
        let set = Self { direction, entries };
        let budget = spec.total_power();
        if set.total_trace() > budget * (1.0 + 1e-9) {
            return Err(Error::InvalidNetwork(format!(
                "total covariance trace {} exceeds power budget {budget}",
                set.total_trace()
            )));
        }
        Ok(set)
    }

    /// Assemble from entries that are already validated (solver internal).
    pub(crate) fn from_parts(direction: Direction, entries: Vec<HermitianPsd>) -> Self {
        Self { direction, entries }
    }

    pub fn zeros(spec: &NetworkSpec, direction: Direction) -> Self {
        let entries = (0..spec.links())
            .map(|l| HermitianPsd::zeros(spec.covariance_dim(l, direction)))
            .collect();
        Self { direction, entries }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, l: usize) -> &HermitianPsd {
        &self.entries[l]
    }

    pub fn entries(&self) -> &[HermitianPsd] {
        &self.entries
    }

    pub fn total_trace(&self) -> f64 {
        self.entries.iter().map(|e| e.trace()).sum()
    }
}

fn check_compatible(spec: &NetworkSpec, set: &CovarianceSet, expect: Direction) -> Result<()> {
    if set.direction() != expect {
        return Err(Error::DimensionMismatch(format!(
            "expected a {expect:?} covariance set, got {:?}",
            set.direction()
        )));
    }
    if set.len() != spec.links() {
        return Err(Error::DimensionMismatch(format!(
            "covariance set has {} links, network has {}",
            set.len(),
            spec.links()
        )));
    }
    for l in 0..set.len() {
        let want = spec.covariance_dim(l, expect);
        if set.get(l).dim() != want {
            return Err(Error::DimensionMismatch(format!(
                "covariance of link {l} has dim {}, expected {want}",
                set.get(l).dim()
            )));
        }
    }
    Ok(())
}

/// `Ω_l = I + Σ_{k≠l} H_{l,k} Σ_k H_{l,k}†` with masked pairs skipped.
/// Positive definite by construction.
pub fn forward_interference_cov(
    spec: &NetworkSpec,
    sigma: &CovarianceSet,
    l: usize,
) -> Result<HermitianPsd> {
    check_compatible(spec, sigma, Direction::Forward)?;
    check_link(spec, l)?;
    Ok(HermitianPsd::from_construction(spec.omega_one(
        sigma.entries(),
        l,
        Direction::Forward,
    )))
}

/// Reverse-link counterpart `Ω̂_l = I + Σ_{k≠l} H_{k,l}† Σ̂_k H_{k,l}`.
pub fn reverse_interference_cov(
    spec: &NetworkSpec,
    sigma_hat: &CovarianceSet,
    l: usize,
) -> Result<HermitianPsd> {
    check_compatible(spec, sigma_hat, Direction::Reverse)?;
    check_link(spec, l)?;
    Ok(HermitianPsd::from_construction(spec.omega_one(
        sigma_hat.entries(),
        l,
        Direction::Reverse,
    )))
}

fn check_link(spec: &NetworkSpec, l: usize) -> Result<()> {
    if l >= spec.links() {
        return Err(Error::DimensionMismatch(format!(
            "link index {l} out of range for {} links",
            spec.links()
        )));
    }
    Ok(())
}

/// Rate of one link given the interference covariance of its side, computed
/// as `logdet(Ω + HΣH†) − logdet(Ω)` so Ω is never inverted explicitly.
pub(crate) fn rate_given_omega(
    spec: &NetworkSpec,
    cov: &HermitianPsd,
    omega: &CMat,
    l: usize,
    direction: Direction,
) -> Result<f64> {
    let total = omega + spec.signal_cov(cov, l, direction);
    Ok(logdet_pd_mat(&total)? - logdet_pd_mat(omega)?)
}

/// Achievable rate of forward link `l` in nats:
/// `log|I + H_{l,l} Σ_l H_{l,l}† Ω_l^{-1}|`.
pub fn link_rate(spec: &NetworkSpec, sigma: &CovarianceSet, l: usize) -> Result<f64> {
    check_compatible(spec, sigma, Direction::Forward)?;
    check_link(spec, l)?;
    let omega = spec.omega_one(sigma.entries(), l, Direction::Forward);
    rate_given_omega(spec, sigma.get(l), &omega, l, Direction::Forward)
}

/// Achievable rate of reverse link `l` in nats:
/// `log|I + H_{l,l}† Σ̂_l H_{l,l} Ω̂_l^{-1}|`.
pub fn reverse_link_rate(spec: &NetworkSpec, sigma_hat: &CovarianceSet, l: usize) -> Result<f64> {
    check_compatible(spec, sigma_hat, Direction::Reverse)?;
    check_link(spec, l)?;
    let omega = spec.omega_one(sigma_hat.entries(), l, Direction::Reverse);
    rate_given_omega(spec, sigma_hat.get(l), &omega, l, Direction::Reverse)
}

pub(crate) fn wsr_given_omegas(
    spec: &NetworkSpec,
    covs: &[HermitianPsd],
    omegas: &[CMat],
    direction: Direction,
) -> Result<f64> {
    let mut acc = 0.0;
    for l in 0..spec.links() {
        acc += spec.weights()[l] * rate_given_omega(spec, &covs[l], &omegas[l], l, direction)?;
    }
    Ok(acc)
}

/// Weighted sum-rate `Σ_l w_l I_l(Σ)` of the forward links.
pub fn weighted_sum_rate(spec: &NetworkSpec, sigma: &CovarianceSet) -> Result<f64> {
    check_compatible(spec, sigma, Direction::Forward)?;
    let omegas = spec.omega_all(sigma.entries(), Direction::Forward);
    wsr_given_omegas(spec, sigma.entries(), &omegas, Direction::Forward)
}

/// Weighted sum-rate of the reverse links.
pub fn reverse_weighted_sum_rate(spec: &NetworkSpec, sigma_hat: &CovarianceSet) -> Result<f64> {
    check_compatible(spec, sigma_hat, Direction::Reverse)?;
    let omegas = spec.omega_all(sigma_hat.entries(), Direction::Reverse);
    wsr_given_omegas(spec, sigma_hat.entries(), &omegas, Direction::Reverse)
}
