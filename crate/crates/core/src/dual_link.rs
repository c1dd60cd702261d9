//! Fixed-point weighted sum-rate solver that alternates between forward and
//! reverse links.
//!
//! One iteration maps the forward covariances to reverse covariances through
//! the closed-form covariance transformation
//!
//! ```text
//! Σ̂_l ∝ w_l (Ω_l^{-1} − (Ω_l + H_{l,l} Σ_l H_{l,l}†)^{-1})
//! ```
//!
//! normalized so the reverse links spend the full power budget, then applies
//! the mirrored map to come back to the forward side. The weighted sum-rate
//! is nondecreasing across iterations and the two directions converge to a
//! common value at a stationary point of the problem; both properties are
//! exercised by the test suite rather than assumed.
//!
//! The difference of inverses is evaluated in the algebraically equivalent
//! product form `Ω^{-1} S (Ω + S)^{-1}` with `S = HΣH†`, which stays accurate
//! when `S` is small. After every update each covariance is re-validated;
//! a failed check aborts the solve with the iteration index attached.

use web_time::Instant;

use crate::error::{Error, Result};
use crate::hermitian::{
    inv_pd_mat, relative_distance_floored, symmetrize_unchecked, CMat, HermitianPsd,
};
use crate::network::{CovarianceSet, Direction, NetworkSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use std::time::Duration;

/// How the forward covariances are initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// Uniform power split: `Σ_l = (P_T / Σ_k tx_k) I`.
    ScaledIdentity,
    /// `Σ_l = A A†` with seeded complex Gaussian `A`, scaled to the budget.
    RandomSeeded(u64),
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Stop once `|R − R'| ≤ tol` between consecutive iterations (nats).
    pub tol: f64,
    pub max_iters: usize,
    pub init: InitStrategy,
    /// Record per-iteration rates, residuals and timings.
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 500,
            init: InitStrategy::ScaledIdentity,
            record_trace: false,
        }
    }
}

impl SolverConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// One row of a solver trace. `forward_wsr` is the rate after the full
/// iteration, `reverse_wsr` the rate after the mid-iteration reverse update.
/// For the fixed-point solver both sequences interleave nondecreasingly
/// (up to a 1e-9 relative rounding slack); the baselines reuse the record
/// without that guarantee.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub iteration: usize,
    pub forward_wsr: f64,
    pub reverse_wsr: f64,
    pub kkt_residual: f64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn forward_rates(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.forward_wsr)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub sigma: CovarianceSet,
    pub sigma_hat: CovarianceSet,
    /// Forward weighted sum-rate at the returned point, in nats.
    pub wsr: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Option<IterationTrace>,
}

/// Initial forward covariances with total trace exactly the power budget.
pub fn init_covariances(spec: &NetworkSpec, config: &SolverConfig) -> Result<CovarianceSet> {
    config.validate()?;
    let budget = spec.total_power();
    let entries = match config.init {
        InitStrategy::ScaledIdentity => {
            let total_tx: usize = spec.tx_antennas().iter().sum();
            let per_antenna = budget / total_tx as f64;
            spec.tx_antennas()
                .iter()
                .map(|&n| {
                    HermitianPsd::try_new(
                        CMat::identity(n, n) * num_complex::Complex64::new(per_antenna, 0.0),
                    )
                })
                .collect::<Result<Vec<_>>>()?
        }
        InitStrategy::RandomSeeded(seed) => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
            let mut raw: Vec<CMat> = Vec::with_capacity(spec.links());
            for &n in spec.tx_antennas() {
                let mut a = CMat::zeros(n, n);
                for c in 0..n {
                    for r in 0..n {
                        let re = gauss();
                        let im = gauss();
                        a[(r, c)] = num_complex::Complex64::new(re, im)
                            * std::f64::consts::FRAC_1_SQRT_2;
                    }
                }
                raw.push(&a * a.adjoint());
            }
            let total: f64 = raw.iter().map(|m| m.trace().re).sum();
            if !(total > 0.0) {
                return Err(Error::InvalidConfig(
                    "random initialization produced zero total power".into(),
                ));
            }
            let scale = num_complex::Complex64::new(budget / total, 0.0);
            raw.into_iter()
                .map(|m| HermitianPsd::try_new(m * scale))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(CovarianceSet::from_parts(Direction::Forward, entries))
}

/// The covariance transformation for one direction. Input covariances and
/// interference matrices belong to `direction`; the output covariances belong
/// to the flipped direction and their traces sum exactly to the budget.
/// Also returns the power multiplier (the trace-weighted denominator over
/// the budget).
pub(crate) fn transform(
    spec: &NetworkSpec,
    covs: &[HermitianPsd],
    omegas: &[CMat],
    direction: Direction,
) -> Result<(Vec<HermitianPsd>, f64)> {
    let links = spec.links();
    let mut xs: Vec<CMat> = Vec::with_capacity(links);
    let mut denom = 0.0;
    for l in 0..links {
        let signal = spec.signal_cov(&covs[l], l, direction);
        let total = &omegas[l] + &signal;
        let om_inv = inv_pd_mat(&omegas[l])?;
        let total_inv = inv_pd_mat(&total)?;
        // Ω^{-1} − (Ω+S)^{-1} rewritten as Ω^{-1} S (Ω+S)^{-1}.
        let x = symmetrize_unchecked(&(om_inv * signal * total_inv));
        denom += spec.weights()[l] * x.trace().re;
        xs.push(x);
    }
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::DegenerateNetwork);
    }
    let budget = spec.total_power();
    let out = xs
        .into_iter()
        .enumerate()
        .map(|(l, x)| {
            let scale = num_complex::Complex64::new(budget * spec.weights()[l] / denom, 0.0);
            HermitianPsd::try_new(x * scale)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((out, denom / budget))
}

fn check_input(spec: &NetworkSpec, set: &CovarianceSet, expect: Direction) -> Result<()> {
    if set.direction() != expect || set.len() != spec.links() {
        return Err(Error::DimensionMismatch(format!(
            "expected a {expect:?} covariance set over {} links",
            spec.links()
        )));
    }
    for l in 0..set.len() {
        if set.get(l).dim() != spec.covariance_dim(l, expect) {
            return Err(Error::DimensionMismatch(format!(
                "covariance of link {l} has dim {}",
                set.get(l).dim()
            )));
        }
    }
    Ok(())
}

/// Map forward covariances to reverse covariances (algorithm step 6).
pub fn forward_to_reverse(spec: &NetworkSpec, sigma: &CovarianceSet) -> Result<CovarianceSet> {
    check_input(spec, sigma, Direction::Forward)?;
    let omegas = spec.omega_all(sigma.entries(), Direction::Forward);
    let (entries, _) = transform(spec, sigma.entries(), &omegas, Direction::Forward)?;
    Ok(CovarianceSet::from_parts(Direction::Reverse, entries))
}

/// Map reverse covariances to forward covariances (algorithm step 8).
pub fn reverse_to_forward(spec: &NetworkSpec, sigma_hat: &CovarianceSet) -> Result<CovarianceSet> {
    check_input(spec, sigma_hat, Direction::Reverse)?;
    let omegas = spec.omega_all(sigma_hat.entries(), Direction::Reverse);
    let (entries, _) = transform(spec, sigma_hat.entries(), &omegas, Direction::Reverse)?;
    Ok(CovarianceSet::from_parts(Direction::Forward, entries))
}

/// Scale floor for per-link stationarity mismatches: covariances this far
/// below the power budget are spent links and carry no information.
pub fn residual_floor(spec: &NetworkSpec) -> f64 {
    1e-6 * spec.total_power()
}

/// Stationarity residual: the worst per-link relative Frobenius mismatch of
/// the two covariance transformations evaluated at `(Σ, Σ̂)`, with the norms
/// floored at a small fraction of the power budget so links that converge to
/// zero power read as stationary. Zero exactly at a fixed point.
pub fn residual(spec: &NetworkSpec, sigma: &CovarianceSet, sigma_hat: &CovarianceSet) -> Result<f64> {
    check_input(spec, sigma, Direction::Forward)?;
    check_input(spec, sigma_hat, Direction::Reverse)?;
    let predicted_hat = forward_to_reverse(spec, sigma)?;
    let predicted_fwd = reverse_to_forward(spec, sigma_hat)?;
    let floor = residual_floor(spec);
    let mut worst: f64 = 0.0;
    for l in 0..spec.links() {
        worst = worst
            .max(relative_distance_floored(
                predicted_hat.get(l).matrix(),
                sigma_hat.get(l).matrix(),
                floor,
            ))
            .max(relative_distance_floored(
                predicted_fwd.get(l).matrix(),
                sigma.get(l).matrix(),
                floor,
            ));
    }
    Ok(worst)
}

/// Solve starting from the configured initialization.
pub fn solve(spec: &NetworkSpec, config: &SolverConfig) -> Result<SolveResult> {
    let sigma0 = init_covariances(spec, config)?;
    solve_from(spec, &sigma0, config)
}

/// Solve from an explicit forward starting point. The starting covariances
/// should spend the full budget; the first reverse update renormalizes power
/// in any case.
pub fn solve_from(
    spec: &NetworkSpec,
    sigma0: &CovarianceSet,
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    check_input(spec, sigma0, Direction::Forward)?;

    let mut sigma: Vec<HermitianPsd> = sigma0.entries().to_vec();
    let mut omegas = spec.omega_all(&sigma, Direction::Forward);
    let mut rate = crate::network::wsr_given_omegas(spec, &sigma, &omegas, Direction::Forward)?;

    let mut sigma_hat: Vec<HermitianPsd> = Vec::new();
    let mut trace = config.record_trace.then(IterationTrace::default);
    let mut converged = false;
    let mut iterations = 0;

    for n in 1..=config.max_iters {
        let started = Instant::now();
        let previous = rate;

        let (hat, _mu) = transform(spec, &sigma, &omegas, Direction::Forward)
            .map_err(|e| e.at_iteration(n))?;
        let omega_hats = spec.omega_all(&hat, Direction::Reverse);
        let reverse_rate =
            crate::network::wsr_given_omegas(spec, &hat, &omega_hats, Direction::Reverse)
                .map_err(|e| e.at_iteration(n))?;

        let (fwd, _mu_hat) = transform(spec, &hat, &omega_hats, Direction::Reverse)
            .map_err(|e| e.at_iteration(n))?;
        sigma = fwd;
        sigma_hat = hat;
        omegas = spec.omega_all(&sigma, Direction::Forward);
        rate = crate::network::wsr_given_omegas(spec, &sigma, &omegas, Direction::Forward)
            .map_err(|e| e.at_iteration(n))?;

        if let Some(trace) = trace.as_mut() {
            // The reverse half of the fixed-point mismatch is zero by
            // construction (Σ was just produced from Σ̂), so the residual
            // reduces to the forward half.
            let (predicted_hat, _) = transform(spec, &sigma, &omegas, Direction::Forward)
                .map_err(|e| e.at_iteration(n))?;
            let floor = residual_floor(spec);
            let mut worst: f64 = 0.0;
            for l in 0..spec.links() {
                worst = worst.max(relative_distance_floored(
                    predicted_hat[l].matrix(),
                    sigma_hat[l].matrix(),
                    floor,
                ));
            }
            trace.records.push(IterationRecord {
                iteration: n,
                forward_wsr: rate,
                reverse_wsr: reverse_rate,
                kkt_residual: worst,
                elapsed: started.elapsed(),
            });
        }

        iterations = n;
        if (rate - previous).abs() <= config.tol {
            converged = true;
            break;
        }
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
    use crate::hermitian::{relative_distance, water_fill};
    use crate::network::weighted_sum_rate;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar_mat(x: f64) -> CMat {
        CMat::from_row_slice(1, 1, &[c(x, 0.0)])
    }

    fn siso_spec(power: f64) -> NetworkSpec {
        NetworkSpec::new(vec![vec![scalar_mat(1.0)]], vec![1.0], power, None).unwrap()
    }

    /// Deterministic complex channel for tests.
    fn test_channel(rows: usize, cols: usize, seed: &mut u64) -> CMat {
        CMat::from_fn(rows, cols, |_, _| {
            let mut next = || {
                *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            };
            c(next(), next())
        })
    }

    fn random_spec(links: usize, tx: usize, rx: usize, power: f64, seed: u64) -> NetworkSpec {
        let mut s = seed.wrapping_add(1);
        let channels = (0..links)
            .map(|_| (0..links).map(|_| test_channel(rx, tx, &mut s)).collect())
            .collect();
        let weights = (0..links).map(|l| 0.5 + 0.5 * (l as f64 + 1.0) / links as f64).collect();
        NetworkSpec::new(channels, weights, power, None).unwrap()
    }

    #[test]
    fn scaled_identity_init_splits_power_uniformly() {
        let spec = random_spec(2, 2, 2, 100.0, 3);
        let init = init_covariances(&spec, &SolverConfig::default()).unwrap();
        for l in 0..2 {
            let m = init.get(l).matrix();
            assert!((m[(0, 0)].re - 25.0).abs() < 1e-12);
            assert!((m[(1, 1)].re - 25.0).abs() < 1e-12);
            assert!(m[(0, 1)].norm() < 1e-15);
        }
    }

    #[test]
    fn random_init_is_deterministic_and_budgeted() {
        let spec = random_spec(3, 2, 3, 50.0, 9);
        let config = SolverConfig {
            init: InitStrategy::RandomSeeded(42),
            ..SolverConfig::default()
        };
        let a = init_covariances(&spec, &config).unwrap();
        let b = init_covariances(&spec, &config).unwrap();
        for l in 0..3 {
            assert_eq!(a.get(l).matrix(), b.get(l).matrix());
        }
        assert!((a.total_trace() - 50.0).abs() <= 1e-12 * 50.0);
    }

    #[test]
    fn scalar_transform_returns_full_power() {
        // L = 1, w = 1, H = 1, Σ = P_T collapses the transformation to Σ̂ = P_T.
        let spec = siso_spec(7.0);
        let sigma =
            CovarianceSet::try_new(&spec, Direction::Forward, vec![scalar_mat(7.0)]).unwrap();
        let hat = forward_to_reverse(&spec, &sigma).unwrap();
        assert!((hat.get(0).matrix()[(0, 0)].re - 7.0).abs() < 1e-12);

        let back = reverse_to_forward(&spec, &hat).unwrap();
        assert!((back.get(0).matrix()[(0, 0)].re - 7.0).abs() < 1e-12);
    }

    #[test]
    fn transform_conserves_power_budget() {
        let spec = random_spec(4, 3, 2, 33.0, 17);
        let sigma = init_covariances(
            &spec,
            &SolverConfig {
                init: InitStrategy::RandomSeeded(5),
                ..SolverConfig::default()
            },
        )
        .unwrap();
        let hat = forward_to_reverse(&spec, &sigma).unwrap();
        assert!((hat.total_trace() - 33.0).abs() <= 1e-9 * 33.0);
        let back = reverse_to_forward(&spec, &hat).unwrap();
        assert!((back.total_trace() - 33.0).abs() <= 1e-9 * 33.0);
    }

    #[test]
    fn transform_matches_woodbury_route() {
        // Independent algebraic path: Ω^{-1} − (Ω+HΣH†)^{-1}
        // = Ω^{-1} H (Σ^{-1} + H† Ω^{-1} H)^{-1} H† Ω^{-1} for invertible Σ.
        let spec = random_spec(2, 2, 2, 10.0, 23);
        let sigma = init_covariances(
            &spec,
            &SolverConfig {
                init: InitStrategy::RandomSeeded(11),
                ..SolverConfig::default()
            },
        )
        .unwrap();
        let hat = forward_to_reverse(&spec, &sigma).unwrap();

        let omegas = spec.omega_all(sigma.entries(), Direction::Forward);
        let mut xs = Vec::new();
        let mut denom = 0.0;
        for l in 0..2 {
            let h = spec.channel(l, l);
            let om_inv = inv_pd_mat(&omegas[l]).unwrap();
            let sig_inv = inv_pd_mat(sigma.get(l).matrix()).unwrap();
            let inner = inv_pd_mat(&(sig_inv + h.adjoint() * &om_inv * h)).unwrap();
            let x = symmetrize_unchecked(&(&om_inv * h * inner * h.adjoint() * &om_inv));
            denom += spec.weights()[l] * x.trace().re;
            xs.push(x);
        }
        for l in 0..2 {
            let expected = &xs[l] * c(10.0 * spec.weights()[l] / denom, 0.0);
            assert!(relative_distance(&expected, hat.get(l).matrix()) < 1e-8);
        }
    }

    #[test]
    fn siso_solve_reaches_capacity_in_one_effective_iteration() {
        let spec = siso_spec(100.0);
        let result = solve(&spec, &SolverConfig::default()).unwrap();
        assert!(result.converged);
        assert!(result.iterations <= 2);
        assert!((result.wsr - 101f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn single_user_mimo_matches_water_filling() {
        let mut seed = 77u64;
        let h = test_channel(3, 3, &mut seed);
        let spec = NetworkSpec::new(vec![vec![h.clone()]], vec![1.0], 10.0, None).unwrap();
        let result = solve(&spec, &SolverConfig::default()).unwrap();

        // Independent oracle: water-filling over the eigenvalues of H†H.
        let gram = h.adjoint() * &h;
        let gains: Vec<f64> = gram.symmetric_eigenvalues().iter().copied().collect();
        let powers = water_fill(&gains, 1.0, 10.0).unwrap();
        let capacity: f64 = gains
            .iter()
            .zip(&powers)
            .map(|(g, p)| (1.0 + g * p).ln())
            .sum();
        assert!(
            (result.wsr - capacity).abs() <= 1e-6 * capacity,
            "solver {} vs water-filling {capacity}",
            result.wsr
        );
    }

    #[test]
    fn monotone_and_interleaved_rates() {
        let spec = random_spec(4, 2, 3, 40.0, 51);
        let config = SolverConfig {
            record_trace: true,
            ..SolverConfig::default()
        };
        let result = solve(&spec, &config).unwrap();
        let trace = result.trace.as_ref().unwrap();
        let mut previous = f64::NEG_INFINITY;
        for record in &trace.records {
            // reverse update does not decrease the forward rate before it,
            // forward update does not decrease the reverse rate.
            assert!(record.reverse_wsr >= previous - 1e-9 * previous.abs().max(1.0));
            assert!(record.forward_wsr >= record.reverse_wsr - 1e-9 * record.reverse_wsr.abs());
            previous = record.forward_wsr;
        }
    }

    #[test]
    fn converged_point_is_a_fixed_point_with_small_residual() {
        let spec = random_spec(3, 2, 2, 30.0, 99);
        let config = SolverConfig {
            tol: 1e-12,
            max_iters: 5000,
            ..SolverConfig::default()
        };
        let result = solve(&spec, &config).unwrap();
        assert!(result.converged);
        let res = residual(&spec, &result.sigma, &result.sigma_hat).unwrap();
        assert!(res < 1e-6, "residual {res} at {} iterations", result.iterations);

        // Re-entering from the converged point barely moves the iterate
        // (zero-power links measured against the budget floor).
        let hat = forward_to_reverse(&spec, &result.sigma).unwrap();
        let next = reverse_to_forward(&spec, &hat).unwrap();
        let floor = residual_floor(&spec);
        for l in 0..spec.links() {
            assert!(
                relative_distance_floored(
                    next.get(l).matrix(),
                    result.sigma.get(l).matrix(),
                    floor
                ) < 1e-6
            );
        }
    }

    #[test]
    fn random_point_has_nonzero_residual() {
        let spec = random_spec(3, 2, 2, 30.0, 5);
        let config = SolverConfig {
            init: InitStrategy::RandomSeeded(1),
            ..SolverConfig::default()
        };
        let sigma = init_covariances(&spec, &config).unwrap();
        let other = init_covariances(
            &spec,
            &SolverConfig {
                init: InitStrategy::RandomSeeded(2),
                ..SolverConfig::default()
            },
        )
        .unwrap();
        // A generic reverse set: transform of an unrelated forward set.
        let hat = forward_to_reverse(&spec, &other).unwrap();
        assert!(residual(&spec, &sigma, &hat).unwrap() > 1e-3);
    }

    #[test]
    fn single_link_water_filling_optimum_is_stationary() {
        let mut seed = 13u64;
        let h = test_channel(2, 2, &mut seed);
        let spec = NetworkSpec::new(vec![vec![h.clone()]], vec![1.0], 12.0, None).unwrap();

        // Closed-form optimum: eigenvectors of H†H, water-filled eigenvalues.
        let gram = (h.adjoint() * &h).clone();
        let eig = gram.symmetric_eigen();
        let gains: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let powers = water_fill(&gains, 1.0, 12.0).unwrap();
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(
            powers.iter().map(|&p| c(p, 0.0)).collect::<Vec<_>>(),
        ));
        let sigma_mat = &eig.eigenvectors * d * eig.eigenvectors.adjoint();
        let sigma =
            CovarianceSet::try_new(&spec, Direction::Forward, vec![sigma_mat]).unwrap();
        let hat = forward_to_reverse(&spec, &sigma).unwrap();
        assert!(residual(&spec, &sigma, &hat).unwrap() < 1e-8);
    }

    #[test]
    fn dead_direct_channels_are_degenerate() {
        let mut seed = 3u64;
        let spec = NetworkSpec::new(
            vec![
                vec![CMat::zeros(2, 2), test_channel(2, 2, &mut seed)],
                vec![test_channel(2, 2, &mut seed), CMat::zeros(2, 2)],
            ],
            vec![1.0, 1.0],
            10.0,
            None,
        )
        .unwrap();
        let sigma = init_covariances(&spec, &SolverConfig::default()).unwrap();
        assert!(matches!(
            forward_to_reverse(&spec, &sigma),
            Err(Error::DegenerateNetwork)
        ));
        // And the solver reports the failing iteration.
        match solve(&spec, &SolverConfig::default()) {
            Err(Error::Solver { iteration, .. }) => assert_eq!(iteration, 1),
            other => panic!("expected a solver error, got {other:?}"),
        }
    }

    #[test]
    fn one_dead_link_among_live_ones_is_fine() {
        let mut seed = 29u64;
        let spec = NetworkSpec::new(
            vec![
                vec![test_channel(2, 2, &mut seed), test_channel(2, 2, &mut seed)],
                vec![test_channel(2, 2, &mut seed), CMat::zeros(2, 2)],
            ],
            vec![1.0, 1.0],
            10.0,
            None,
        )
        .unwrap();
        let result = solve(&spec, &SolverConfig::default()).unwrap();
        assert!(result.converged);
        assert!(result.wsr > 0.0);
        // The dead link ends up with zero power.
        assert!(result.sigma.get(1).trace() < 1e-12);
    }

    #[test]
    fn solve_rejects_bad_config() {
        let spec = siso_spec(1.0);
        let bad = SolverConfig {
            tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(solve(&spec, &bad).is_err());
        let bad = SolverConfig {
            max_iters: 0,
            ..SolverConfig::default()
        };
        assert!(solve(&spec, &bad).is_err());
    }

    #[test]
    fn power_is_conserved_at_every_iterate() {
        let spec = random_spec(5, 2, 2, 64.0, 7);
        let config = SolverConfig {
            max_iters: 20,
            tol: 1e-15,
            record_trace: true,
            ..SolverConfig::default()
        };
        let result = solve(&spec, &config).unwrap();
        assert!((result.sigma.total_trace() - 64.0).abs() <= 1e-9 * 64.0);
        assert!((result.sigma_hat.total_trace() - 64.0).abs() <= 1e-9 * 64.0);
        let wsr = weighted_sum_rate(&spec, &result.sigma).unwrap();
        assert!((wsr - result.wsr).abs() < 1e-10 * wsr.abs().max(1.0));
    }
}
