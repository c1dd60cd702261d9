//! Lagrangian machinery for the equivalent problem in which the
//! interference covariances are free variables tied by equality constraints:
//!
//! ```text
//! F(Σ, Ω, Λ, μ) = Σ_l w_l (log|Ω_l + H_{l,l} Σ_l H_{l,l}†| − log|Ω_l|)
//!               + μ (P_T − Σ_l tr Σ_l)
//!               + Σ_l tr(Λ_l (Ω_l − I − Σ_{k≠l} H_{l,k} Σ_k H_{l,k}†))
//! ```
//!
//! This module evaluates `F`, its matrix gradients, the closed-form
//! multipliers `Λ_l = w_l (Ω_l^{-1} − (Ω_l + HΣH†)^{-1})`,
//! `μ = Σ tr(Λ_l) / P_T`, the scaling invariance
//! `F(Σ/α, Ω/α, αΛ, αμ) = F(Σ, Ω, Λ, μ)`, and the four first-order
//! conditions a converged forward/reverse pair must satisfy. Everything is
//! runnable diagnostics, not proof machinery.
//!
//! Gradients use the convention `dF = Re tr(∇† dX)` for Hermitian
//! perturbations; the finite-difference checks pin it down. In the
//! interference term of `∇_{Σ_l} F` the multiplier carries the index of the
//! receiving link, `Σ_{k≠l} H_{k,l}† Λ_k H_{k,l}`, which is what
//! differentiating `F` yields (and the only reading the finite-difference
//! oracle accepts).

use serde::Serialize;

use crate::dual_link::{residual, residual_floor, SolveResult};
use crate::error::{Error, Result};
use crate::hermitian::{
    inv_pd_mat, logdet_pd_mat, relative_distance_floored, symmetrize_unchecked, CMat,
    HermitianPsd,
};
use crate::network::{CovarianceSet, Direction, NetworkSpec};
use num_complex::Complex64;

/// Lagrange multipliers of the equality-constrained form: one Hermitian
/// `Λ_l` per interference constraint and the scalar power multiplier `μ`.
/// `P_T μ = Σ_l tr(Λ_l)` holds for multipliers extracted by this module.
#[derive(Debug, Clone)]
pub struct MultiplierState {
    pub lambda: Vec<CMat>,
    pub mu: f64,
}

fn check_lambda_shapes(spec: &NetworkSpec, m: &MultiplierState) -> Result<()> {
    if m.lambda.len() != spec.links() {
        return Err(Error::DimensionMismatch(format!(
            "{} multiplier matrices for {} links",
            m.lambda.len(),
            spec.links()
        )));
    }
    for (l, lam) in m.lambda.iter().enumerate() {
        let want = spec.rx_antennas()[l];
        if lam.nrows() != want || lam.ncols() != want {
            return Err(Error::DimensionMismatch(format!(
                "multiplier of link {l} is {}x{}, expected {want}x{want}",
                lam.nrows(),
                lam.ncols()
            )));
        }
    }
    Ok(())
}

/// Interference covariances `Ω_l(Σ)` of every forward link, packaged for the
/// Lagrangian evaluations below.
pub fn interference_omegas(spec: &NetworkSpec, sigma: &CovarianceSet) -> Result<Vec<HermitianPsd>> {
    if sigma.direction() != Direction::Forward {
        return Err(Error::DimensionMismatch(
            "interference covariances are defined for forward sets".into(),
        ));
    }
    Ok(spec
        .omega_all(sigma.entries(), Direction::Forward)
        .into_iter()
        .map(HermitianPsd::from_construction)
        .collect())
}

/// Evaluate `F` on raw matrices. The covariances may be slightly indefinite
/// (finite-difference probes land here); only `Ω_l` and
/// `Ω_l + H Σ H†` must be positive definite.
pub fn lagrangian_raw(
    spec: &NetworkSpec,
    sigma: &[CMat],
    omega: &[CMat],
    m: &MultiplierState,
) -> Result<f64> {
    let links = spec.links();
    let mut value = 0.0;
    let mut trace_sum = 0.0;
    for l in 0..links {
        let h = spec.channel(l, l);
        let signal = symmetrize_unchecked(&(h * &sigma[l] * h.adjoint()));
        let total = &omega[l] + &signal;
        value += spec.weights()[l] * (logdet_pd_mat(&total)? - logdet_pd_mat(&omega[l])?);
        trace_sum += sigma[l].trace().re;

        // constraint slack Ω_l − I − Σ_{k≠l} H Σ H†
        let dim = omega[l].nrows();
        let mut slack = &omega[l] - CMat::identity(dim, dim);
        for k in 0..links {
            if k == l || spec.is_masked(l, k) {
                continue;
            }
            let hk = spec.channel(l, k);
            slack -= hk * &sigma[k] * hk.adjoint();
        }
        value += (&m.lambda[l] * slack).trace().re;
    }
    value += m.mu * (spec.total_power() - trace_sum);
    Ok(value)
}

/// The Lagrangian `F(Σ, Ω, Λ, μ)`. Equals the weighted sum-rate whenever the
/// constraints hold: `Ω_l = I + Σ_{k≠l} H Σ H†` and `Σ tr Σ_l = P_T`.
pub fn lagrangian(
    spec: &NetworkSpec,
    sigma: &CovarianceSet,
    omega: &[HermitianPsd],
    m: &MultiplierState,
) -> Result<f64> {
    check_lambda_shapes(spec, m)?;
    let sigma_mats: Vec<CMat> = sigma.entries().iter().map(|e| e.matrix().clone()).collect();
    let omega_mats: Vec<CMat> = omega.iter().map(|e| e.matrix().clone()).collect();
    lagrangian_raw(spec, &sigma_mats, &omega_mats, m)
}

/// `∇_{Σ_l} F = w_l H_{l,l}† (Ω_l + HΣH†)^{-1} H_{l,l} − μI
///             − Σ_{k≠l} H_{k,l}† Λ_k H_{k,l}`.
pub fn grad_sigma_raw(
    spec: &NetworkSpec,
    sigma: &[CMat],
    omega: &[CMat],
    m: &MultiplierState,
) -> Result<Vec<CMat>> {
    let links = spec.links();
    let total_inv: Vec<CMat> = (0..links)
        .map(|l| {
            let h = spec.channel(l, l);
            let total = &omega[l] + symmetrize_unchecked(&(h * &sigma[l] * h.adjoint()));
            inv_pd_mat(&total)
        })
        .collect::<Result<_>>()?;
    let mut grads = Vec::with_capacity(links);
    for l in 0..links {
        let h = spec.channel(l, l);
        let tx = spec.tx_antennas()[l];
        let mut g = (h.adjoint() * &total_inv[l] * h) * Complex64::new(spec.weights()[l], 0.0);
        g -= CMat::identity(tx, tx) * Complex64::new(m.mu, 0.0);
        for k in 0..links {
            if k == l || spec.is_masked(k, l) {
                continue;
            }
            let hk = spec.channel(k, l);
            g -= hk.adjoint() * &m.lambda[k] * hk;
        }
        grads.push(symmetrize_unchecked(&g));
    }
    Ok(grads)
}

pub fn grad_sigma(
    spec: &NetworkSpec,
    sigma: &CovarianceSet,
    omega: &[HermitianPsd],
    m: &MultiplierState,
) -> Result<Vec<CMat>> {
    check_lambda_shapes(spec, m)?;
    let sigma_mats: Vec<CMat> = sigma.entries().iter().map(|e| e.matrix().clone()).collect();
    let omega_mats: Vec<CMat> = omega.iter().map(|e| e.matrix().clone()).collect();
    grad_sigma_raw(spec, &sigma_mats, &omega_mats, m)
}

/// `∇_{Ω_l} F = w_l ((Ω_l + HΣH†)^{-1} − Ω_l^{-1}) + Λ_l`.
pub fn grad_omega_raw(
    spec: &NetworkSpec,
    sigma: &[CMat],
    omega: &[CMat],
    m: &MultiplierState,
) -> Result<Vec<CMat>> {
    let links = spec.links();
    let mut grads = Vec::with_capacity(links);
    for l in 0..links {
        let h = spec.channel(l, l);
        let total = &omega[l] + symmetrize_unchecked(&(h * &sigma[l] * h.adjoint()));
        let total_inv = inv_pd_mat(&total)?;
        let omega_inv = inv_pd_mat(&omega[l])?;
        let g = (total_inv - omega_inv) * Complex64::new(spec.weights()[l], 0.0) + &m.lambda[l];
        grads.push(symmetrize_unchecked(&g));
    }
    Ok(grads)
}

pub fn grad_omega(
    spec: &NetworkSpec,
    sigma: &CovarianceSet,
    omega: &[HermitianPsd],
    m: &MultiplierState,
) -> Result<Vec<CMat>> {
    check_lambda_shapes(spec, m)?;
    let sigma_mats: Vec<CMat> = sigma.entries().iter().map(|e| e.matrix().clone()).collect();
    let omega_mats: Vec<CMat> = omega.iter().map(|e| e.matrix().clone()).collect();
    grad_omega_raw(spec, &sigma_mats, &omega_mats, m)
}

/// Closed-form multipliers at `(Σ, Ω(Σ))`:
/// `Λ_l = w_l (Ω_l^{-1} − (Ω_l + HΣH†)^{-1})`, `μ = Σ_l tr(Λ_l) / P_T`.
/// With these, `∇_Ω F` vanishes at `(Σ, Ω(Σ))`, and the reverse covariances
/// of the covariance transformation are `Σ̂_l = Λ_l / μ`. A zero `Σ` yields
/// the degenerate state `Λ = 0, μ = 0`.
pub fn extract_multipliers(spec: &NetworkSpec, sigma: &CovarianceSet) -> Result<MultiplierState> {
    if sigma.direction() != Direction::Forward {
        return Err(Error::DimensionMismatch(
            "multipliers are extracted from forward covariances".into(),
        ));
    }
    let omegas = spec.omega_all(sigma.entries(), Direction::Forward);
    let mut lambda = Vec::with_capacity(spec.links());
    let mut trace_sum = 0.0;
    for l in 0..spec.links() {
        let signal = spec.signal_cov(sigma.get(l), l, Direction::Forward);
        let total = &omegas[l] + &signal;
        let omega_inv = inv_pd_mat(&omegas[l])?;
        let total_inv = inv_pd_mat(&total)?;
        // Ω^{-1} − (Ω+S)^{-1} in the cancellation-free product form.
        let lam = symmetrize_unchecked(&(&omega_inv * signal * total_inv))
            * Complex64::new(spec.weights()[l], 0.0);
        trace_sum += lam.trace().re;
        lambda.push(lam);
    }
    Ok(MultiplierState {
        lambda,
        mu: trace_sum / spec.total_power(),
    })
}

/// Result of one scaling-invariance evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingCheck {
    pub alpha: f64,
    /// F at the unscaled point.
    pub f_value: f64,
    /// |F(Σ/α, Ω/α, αΛ, αμ) − F(Σ, Ω, Λ, μ)|.
    pub f_deviation: f64,
    /// max_l ‖∇_{Ω_l} F‖ at (Σ/α, Ω/α, αΛ, αμ); zero because the scaled
    /// point keeps Ω/α a minimizer of the convex Ω-direction.
    pub grad_omega_norm: f64,
}

/// Evaluate the scaling invariance of `F` at a feasible `Σ` (full budget
/// spent), with `Ω`, `Λ`, `μ` derived from `Σ` by this module.
pub fn check_scaling_invariance(
    spec: &NetworkSpec,
    sigma: &CovarianceSet,
    alpha: f64,
) -> Result<ScalingCheck> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "scaling factor must be positive, got {alpha}"
        )));
    }
    let budget = spec.total_power();
    if (sigma.total_trace() - budget).abs() > 1e-6 * budget {
        return Err(Error::InvalidConfig(format!(
            "scaling invariance needs a full-budget point, trace sum {}",
            sigma.total_trace()
        )));
    }
    let omega_mats = spec.omega_all(sigma.entries(), Direction::Forward);
    let sigma_mats: Vec<CMat> = sigma.entries().iter().map(|e| e.matrix().clone()).collect();
    let m = extract_multipliers(spec, sigma)?;
    let f_value = lagrangian_raw(spec, &sigma_mats, &omega_mats, &m)?;

    let inv_alpha = Complex64::new(1.0 / alpha, 0.0);
    let scaled_sigma: Vec<CMat> = sigma_mats.iter().map(|s| s * inv_alpha).collect();
    let scaled_omega: Vec<CMat> = omega_mats.iter().map(|o| o * inv_alpha).collect();
    let scaled_m = MultiplierState {
        lambda: m
            .lambda
            .iter()
            .map(|l| l * Complex64::new(alpha, 0.0))
            .collect(),
        mu: m.mu * alpha,
    };
    let f_scaled = lagrangian_raw(spec, &scaled_sigma, &scaled_omega, &scaled_m)?;
    let grads = grad_omega_raw(spec, &scaled_sigma, &scaled_omega, &scaled_m)?;
    let grad_omega_norm = grads.iter().map(|g| g.norm()).fold(0.0, f64::max);

    Ok(ScalingCheck {
        alpha,
        f_value,
        f_deviation: (f_scaled - f_value).abs(),
        grad_omega_norm,
    })
}

/// Residuals of the four first-order conditions at a forward/reverse pair.
///
/// The covariance-transformation equations are checked as relative Frobenius
/// mismatches (norms floored at a small fraction of the budget so zero-power
/// links read as stationary). The two gradient conditions are stationarity
/// of `F` in the transmit covariances over the PSD cone: the literal matrix
/// equalities `μΩ̂_l = w H†(Ω+HΣH†)^{-1}H` and its reverse mirror only hold
/// at optima with full-rank covariances; at boundary optima the slack is the
/// cone multiplier, so the check verifies `μΩ̂_l − w H†(·)^{-1}H ⪰ 0`
/// together with complementary slackness against `Σ_l`. Both collapse to
/// the equality check whenever the covariances are full rank.
#[derive(Debug, Clone, Serialize)]
pub struct SaddlePointReport {
    /// `Σ̂_l = (w_l/μ)(Ω_l^{-1} − (Ω_l + HΣH†)^{-1})`
    pub pwfs_forward: f64,
    /// cone stationarity of `∇_{Σ_l} F`: `μΩ̂_l ⪰ w H†(Ω+HΣH†)^{-1}H`
    /// with `tr(Σ_l ·) = 0`
    pub sigma_stationarity: f64,
    /// `Σ_l = (w_l/μ̂)(Ω̂_l^{-1} − (Ω̂_l + H†Σ̂H)^{-1})`
    pub pwfs_reverse: f64,
    /// reverse mirror: `μ̂Ω_l ⪰ w H(H†Σ̂H + Ω̂)^{-1}H†` with `tr(Σ̂_l ·) = 0`
    pub sigma_hat_stationarity: f64,
    pub mu: f64,
    pub mu_hat: f64,
}

impl SaddlePointReport {
    pub fn max_residual(&self) -> f64 {
        self.pwfs_forward
            .max(self.sigma_stationarity)
            .max(self.pwfs_reverse)
            .max(self.sigma_hat_stationarity)
    }
}

/// Cone-stationarity residual of `slack = μΩ − w H (·)^{-1} H`: how far the
/// slack is from PSD plus how far it is from being orthogonal to the
/// covariance it complements.
fn cone_residual(slack: &CMat, cov: &CMat, scale: f64, floor: f64) -> f64 {
    let min_eig = crate::hermitian::min_eigenvalue(slack);
    let psd_violation = (-min_eig).max(0.0) / scale;
    let pairing = (cov * slack).trace().re.abs() / (cov.norm().max(floor) * scale);
    psd_violation.max(pairing)
}

/// Check the four first-order conditions at a solve result. All four vanish
/// at a stationary pair; a generic pair violates at least one.
pub fn saddle_point_check(spec: &NetworkSpec, result: &SolveResult) -> Result<SaddlePointReport> {
    let sigma = &result.sigma;
    let sigma_hat = &result.sigma_hat;
    let floor = residual_floor(spec);
    let links = spec.links();
    let budget = spec.total_power();

    let omegas = spec.omega_all(sigma.entries(), Direction::Forward);
    let omega_hats = spec.omega_all(sigma_hat.entries(), Direction::Reverse);

    // Multipliers that satisfy the power constraints on each side.
    let mut forward_terms = Vec::with_capacity(links);
    let mut reverse_terms = Vec::with_capacity(links);
    let mut mu = 0.0;
    let mut mu_hat = 0.0;
    for l in 0..links {
        let w = Complex64::new(spec.weights()[l], 0.0);
        let signal = spec.signal_cov(sigma.get(l), l, Direction::Forward);
        let total = &omegas[l] + &signal;
        let term = symmetrize_unchecked(&(inv_pd_mat(&omegas[l])? * &signal * inv_pd_mat(&total)?)) * w;
        mu += term.trace().re / budget;
        forward_terms.push((term, total));

        let signal_hat = spec.signal_cov(sigma_hat.get(l), l, Direction::Reverse);
        let total_hat = &omega_hats[l] + &signal_hat;
        let term_hat = symmetrize_unchecked(
            &(inv_pd_mat(&omega_hats[l])? * &signal_hat * inv_pd_mat(&total_hat)?),
        ) * w;
        mu_hat += term_hat.trace().re / budget;
        reverse_terms.push((term_hat, total_hat));
    }

    let mut pwfs_forward: f64 = 0.0;
    let mut sigma_stationarity: f64 = 0.0;
    let mut pwfs_reverse: f64 = 0.0;
    let mut sigma_hat_stationarity: f64 = 0.0;
    for l in 0..links {
        let h = spec.channel(l, l);
        let w = spec.weights()[l];

        let (term, total) = &forward_terms[l];
        let predicted_hat = term * Complex64::new(1.0 / mu, 0.0);
        pwfs_forward = pwfs_forward.max(relative_distance_floored(
            &predicted_hat,
            sigma_hat.get(l).matrix(),
            floor,
        ));

        let gain = symmetrize_unchecked(&(h.adjoint() * inv_pd_mat(total)? * h))
            * Complex64::new(w, 0.0);
        let slack = &omega_hats[l] * Complex64::new(mu, 0.0) - gain;
        let scale = mu * omega_hats[l].norm();
        sigma_stationarity = sigma_stationarity.max(cone_residual(
            &slack,
            sigma.get(l).matrix(),
            scale,
            floor,
        ));

        let (term_hat, total_hat) = &reverse_terms[l];
        let predicted_fwd = term_hat * Complex64::new(1.0 / mu_hat, 0.0);
        pwfs_reverse = pwfs_reverse.max(relative_distance_floored(
            &predicted_fwd,
            sigma.get(l).matrix(),
            floor,
        ));

        let gain_hat = symmetrize_unchecked(&(h * inv_pd_mat(total_hat)? * h.adjoint()))
            * Complex64::new(w, 0.0);
        let slack_hat = &omegas[l] * Complex64::new(mu_hat, 0.0) - gain_hat;
        let scale_hat = mu_hat * omegas[l].norm();
        sigma_hat_stationarity = sigma_hat_stationarity.max(cone_residual(
            &slack_hat,
            sigma_hat.get(l).matrix(),
            scale_hat,
            floor,
        ));
    }

    Ok(SaddlePointReport {
        pwfs_forward,
        sigma_stationarity,
        pwfs_reverse,
        sigma_hat_stationarity,
        mu,
        mu_hat,
    })
}

/// Agreement of the analytic gradients with central finite differences of
/// `F` along random Hermitian directions.
#[derive(Debug, Clone, Serialize)]
pub struct GradientCheckStats {
    pub directions: usize,
    pub step: f64,
    pub max_rel_err_sigma: f64,
    pub max_rel_err_omega: f64,
}

/// Central finite differences of `lagrangian` against `grad_sigma` and
/// `grad_omega` along `directions` random Hermitian directions per link,
/// at the point `(Σ, Ω(Σ))` with random Hermitian `Λ` and random `μ > 0`.
pub fn finite_difference_check(
    spec: &NetworkSpec,
    sigma: &CovarianceSet,
    directions: usize,
    step: f64,
    seed: u64,
) -> Result<GradientCheckStats> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let links = spec.links();

    let sigma_mats: Vec<CMat> = sigma.entries().iter().map(|e| e.matrix().clone()).collect();
    let omega_mats = spec.omega_all(sigma.entries(), Direction::Forward);
    let m = MultiplierState {
        lambda: (0..links)
            .map(|l| {
                let n = spec.rx_antennas()[l];
                let raw = CMat::from_fn(n, n, |_, _| {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                });
                symmetrize_unchecked(&raw)
            })
            .collect(),
        mu: rng.gen_range(0.1..2.0),
    };

    let random_hermitian = |n: usize, rng: &mut rand_chacha::ChaCha12Rng| {
        let raw = CMat::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let s = symmetrize_unchecked(&raw);
        let norm = s.norm();
        s * Complex64::new(1.0 / norm.max(1e-12), 0.0)
    };

    let grads_sigma = grad_sigma_raw(spec, &sigma_mats, &omega_mats, &m)?;
    let grads_omega = grad_omega_raw(spec, &sigma_mats, &omega_mats, &m)?;

    let mut max_rel_err_sigma: f64 = 0.0;
    let mut max_rel_err_omega: f64 = 0.0;
    for _ in 0..directions {
        for l in 0..links {
            // Σ_l direction
            let d = random_hermitian(spec.tx_antennas()[l], &mut rng);
            let mut plus = sigma_mats.clone();
            let mut minus = sigma_mats.clone();
            plus[l] += &d * Complex64::new(step, 0.0);
            minus[l] -= &d * Complex64::new(step, 0.0);
            let fd = (lagrangian_raw(spec, &plus, &omega_mats, &m)?
                - lagrangian_raw(spec, &minus, &omega_mats, &m)?)
                / (2.0 * step);
            let analytic = (grads_sigma[l].adjoint() * &d).trace().re;
            let scale = analytic.abs().max(fd.abs()).max(1e-6);
            max_rel_err_sigma = max_rel_err_sigma.max((fd - analytic).abs() / scale);

            // Ω_l direction
            let d = random_hermitian(spec.rx_antennas()[l], &mut rng);
            let mut plus = omega_mats.clone();
            let mut minus = omega_mats.clone();
            plus[l] += &d * Complex64::new(step, 0.0);
            minus[l] -= &d * Complex64::new(step, 0.0);
            let fd = (lagrangian_raw(spec, &sigma_mats, &plus, &m)?
                - lagrangian_raw(spec, &sigma_mats, &minus, &m)?)
                / (2.0 * step);
            let analytic = (grads_omega[l].adjoint() * &d).trace().re;
            let scale = analytic.abs().max(fd.abs()).max(1e-6);
            max_rel_err_omega = max_rel_err_omega.max((fd - analytic).abs() / scale);
        }
    }

    Ok(GradientCheckStats {
        directions,
        step,
        max_rel_err_sigma,
        max_rel_err_omega,
    })
}

/// Full diagnostics bundle for one solve result, serialized by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub wsr: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Fixed-point mismatch of the covariance transformation pair.
    pub transformation_residual: f64,
    pub saddle_point: SaddlePointReport,
    pub scaling: Vec<ScalingCheck>,
    pub gradient_check: GradientCheckStats,
}

pub fn diagnostics_report(
    spec: &NetworkSpec,
    result: &SolveResult,
    alphas: &[f64],
    fd_directions: usize,
    seed: u64,
) -> Result<DiagnosticsReport> {
    let saddle_point = saddle_point_check(spec, result)?;
    let scaling = alphas
        .iter()
        .map(|&a| check_scaling_invariance(spec, &result.sigma, a))
        .collect::<Result<Vec<_>>>()?;
    let gradient_check = finite_difference_check(spec, &result.sigma, fd_directions, 1e-5, seed)?;
    Ok(DiagnosticsReport {
        wsr: result.wsr,
        converged: result.converged,
        iterations: result.iterations,
        transformation_residual: residual(spec, &result.sigma, &result.sigma_hat)?,
        saddle_point,
        scaling,
        gradient_check,
    })
}
