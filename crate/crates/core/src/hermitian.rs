//! Dense complex Hermitian kernel used by every solver in this crate.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>` throughout. The checked
//! [`HermitianPsd`] wrapper marks values that have passed the Hermitian and
//! positive-semidefinite validation; covariance and interference matrices are
//! carried in that form across module boundaries.
//!
//! All rates and log-determinants produced by this crate are in natural log
//! (nats). Conversion to bits is left to the presentation layer.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, row-major semantics at the JSON boundary.
pub type CMat = DMatrix<Complex64>;

/// Relative Frobenius tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_REL_TOL: f64 = 1e-10;

/// Eigenvalues above `-PSD_FLOOR_REL * trace` count as zero.
pub const PSD_FLOOR_REL: f64 = 1e-10;

/// Relative eigenvalue floor below which a matrix is treated as singular.
pub const PD_MIN_EIG_REL: f64 = 1e-12;

pub(crate) fn check_finite(m: &CMat) -> Result<()> {
    for (col, column) in m.column_iter().enumerate() {
        for (row, z) in column.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
    }
    Ok(())
}

fn check_square(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

/// Hermitian part (A + A†)/2 of a square matrix.
pub fn symmetrize(a: &CMat) -> Result<CMat> {
    check_square(a)?;
    check_finite(a)?;
    Ok(symmetrize_unchecked(a))
}

pub(crate) fn symmetrize_unchecked(a: &CMat) -> CMat {
    let mut s = a.adjoint();
    s += a;
    s.scale_mut(0.5);
    s
}

/// A square complex matrix validated to be Hermitian and positive
/// semidefinite up to the kernel tolerances. The stored matrix is the
/// Hermitian part of the input, so downstream arithmetic sees an exactly
/// Hermitian value.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianPsd {
    mat: CMat,
}

impl HermitianPsd {
    /// Validate and wrap a matrix. Fails if the input is not square, has
    /// non-finite entries, deviates from Hermitian symmetry by more than
    /// [`HERMITIAN_REL_TOL`] in relative Frobenius norm, or has an
    /// eigenvalue below the PSD floor. Eigenvalues within the floor are
    /// treated as zero; nothing larger is ever clipped.
    pub fn try_new(mat: CMat) -> Result<Self> {
        check_square(&mat)?;
        check_finite(&mat)?;
        let norm = mat.norm();
        let deviation = (&mat - mat.adjoint()).norm() * 0.5;
        let tolerance = HERMITIAN_REL_TOL * norm;
        if deviation > tolerance {
            return Err(Error::NotHermitian {
                deviation,
                tolerance,
            });
        }
        let sym = symmetrize_unchecked(&mat);
        let trace = sym.trace().re;
        // The norm term absorbs eigensolver noise on matrices with near-zero
        // trace, and the absolute term covers covariances of starved links
        // that underflow to denormal magnitudes.
        let floor = -(PSD_FLOOR_REL * trace.max(0.0) + 1e-12 * norm + 1e-300);
        if sym.nrows() > 0 {
            let min_eig = min_eigenvalue(&sym);
            if min_eig < floor {
                return Err(Error::NotPsd { min_eig, floor });
            }
        }
        Ok(Self { mat: sym })
    }

    /// Wrap a matrix known to be Hermitian PSD by construction
    /// (e.g. I + Σ H Σ H†). Symmetrizes but skips the eigenvalue check.
    pub(crate) fn from_construction(mat: CMat) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self {
            mat: symmetrize_unchecked(&mat),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMat::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMat::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    /// Real part of the trace (the imaginary part is zero by symmetry).
    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }
}

impl AsRef<CMat> for HermitianPsd {
    fn as_ref(&self) -> &CMat {
        &self.mat
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub(crate) fn min_eigenvalue(m: &CMat) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Cholesky factorization that actually certifies positive definiteness.
///
/// nalgebra's complex Cholesky happily takes complex square roots of
/// negative pivots, so an indefinite Hermitian input "succeeds" with nearly
/// imaginary diagonal entries. Genuine factorizations of PD matrices have
/// strictly positive real pivots with only rounding-level imaginary parts.
fn cholesky_pd(m: &CMat) -> Result<nalgebra::Cholesky<Complex64, nalgebra::Dyn>> {
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite {
        context: "Cholesky factorization failed",
    })?;
    for z in chol.l_dirty().diagonal().iter() {
        if !(z.re > 0.0) || !z.re.is_finite() || z.im.abs() > 1e-8 * z.re {
            return Err(Error::NotPositiveDefinite {
                context: "non-positive Cholesky pivot",
            });
        }
    }
    Ok(chol)
}

/// Inverse of a Hermitian positive definite matrix via Cholesky.
///
/// Indefinite or singular inputs are reported as errors; the kernel never
/// regularizes on the caller's behalf.
pub fn inv_pd(a: &HermitianPsd) -> Result<HermitianPsd> {
    Ok(HermitianPsd::from_construction(inv_pd_mat(a.matrix())?))
}

pub(crate) fn inv_pd_mat(m: &CMat) -> Result<CMat> {
    let inv = cholesky_pd(m)?.inverse();
    check_finite(&inv)?;
    Ok(symmetrize_unchecked(&inv))
}

/// Inverse square root A^{-1/2} of a Hermitian positive definite matrix,
/// computed from the eigendecomposition.
pub fn inv_sqrt_pd(a: &HermitianPsd) -> Result<HermitianPsd> {
    Ok(HermitianPsd::from_construction(inv_sqrt_pd_mat(
        a.matrix(),
    )?))
}

pub(crate) fn inv_sqrt_pd_mat(m: &CMat) -> Result<CMat> {
    let dim = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let trace = m.trace().re;
    let threshold = PD_MIN_EIG_REL * trace.max(0.0) / dim.max(1) as f64;
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig <= threshold {
        return Err(Error::NotPositiveDefinite {
            context: "eigenvalue at or below the positive definite floor",
        });
    }
    let d = CMat::from_diagonal(
        &eig.eigenvalues
            .map(|l| Complex64::new(1.0 / l.sqrt(), 0.0)),
    );
    let v = eig.eigenvectors;
    Ok(symmetrize_unchecked(&(&v * d * v.adjoint())))
}

/// Matrix square root A^{1/2} of a Hermitian PSD matrix.
pub(crate) fn sqrt_psd_mat(m: &CMat) -> Result<CMat> {
    let eig = m.clone().symmetric_eigen();
    let d = CMat::from_diagonal(
        &eig.eigenvalues
            .map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
    );
    let v = eig.eigenvectors;
    Ok(symmetrize_unchecked(&(&v * d * v.adjoint())))
}

/// Natural-log determinant of a Hermitian positive definite matrix,
/// accumulated from the Cholesky factor instead of an explicit determinant.
pub fn logdet_pd(a: &HermitianPsd) -> Result<f64> {
    logdet_pd_mat(a.matrix())
}

pub(crate) fn logdet_pd_mat(m: &CMat) -> Result<f64> {
    let chol = cholesky_pd(m)?;
    let acc: f64 = chol.l_dirty().diagonal().iter().map(|z| z.re.ln()).sum();
    Ok(2.0 * acc)
}

/// Water-filling with a single weight shared by every subchannel.
/// See [`water_fill_weighted`].
pub fn water_fill(gains: &[f64], weight: f64, budget: f64) -> Result<Vec<f64>> {
    let weights = vec![weight; gains.len()];
    water_fill_weighted(gains, &weights, budget)
}

/// Water-filling of parallel channels: maximizes Σ w_i log(1 + g_i p_i)
/// subject to Σ p_i = budget, p_i ≥ 0.
///
/// The allocation is p_i = (ν w_i − 1/g_i)_+ with a single water level ν.
/// Per-entry weights let a caller pool subchannels of several links under
/// one shared level. The active set is resolved exactly by sorting the
/// activation thresholds 1/(w_i g_i), so Σ p_i = budget holds to rounding.
///
/// Zero gains are legal and receive zero power; all-zero gains are an error.
pub fn water_fill_weighted(gains: &[f64], weights: &[f64], budget: f64) -> Result<Vec<f64>> {
    if gains.len() != weights.len() {
        return Err(Error::InvalidWaterFill(format!(
            "{} gains but {} weights",
            gains.len(),
            weights.len()
        )));
    }
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::InvalidWaterFill(format!("budget {budget} not positive")));
    }
    for (&g, &w) in gains.iter().zip(weights) {
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::InvalidWaterFill(format!("gain {g} invalid")));
        }
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::InvalidWaterFill(format!("weight {w} not positive")));
        }
    }

    let mut active: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    if active.is_empty() {
        return Err(Error::AllGainsZero);
    }
    // Activation threshold of channel i: p_i > 0 iff ν > 1/(w_i g_i).
    let threshold = |i: usize| 1.0 / (weights[i] * gains[i]);
    active.sort_by(|&a, &b| threshold(a).total_cmp(&threshold(b)));

    let mut inv_gain_sum = 0.0;
    let mut weight_sum = 0.0;
    let mut level = f64::NAN;
    for (k, &i) in active.iter().enumerate() {
        inv_gain_sum += 1.0 / gains[i];
        weight_sum += weights[i];
        let candidate = (budget + inv_gain_sum) / weight_sum;
        let next = active.get(k + 1).map(|&j| threshold(j));
        if candidate > threshold(i) && next.map_or(true, |t| candidate <= t) {
            level = candidate;
            break;
        }
    }
    debug_assert!(level.is_finite(), "water level search must terminate");

    let mut power = vec![0.0; gains.len()];
    for &i in &active {
        power[i] = (level * weights[i] - 1.0 / gains[i]).max(0.0);
    }
    Ok(power)
}

/// Relative Frobenius distance ‖A − B‖ / max(‖A‖, ‖B‖); zero when both
/// matrices vanish.
pub fn relative_distance(a: &CMat, b: &CMat) -> f64 {
    relative_distance_floored(a, b, 0.0)
}

/// Relative Frobenius distance with an absolute scale floor. Links whose
/// covariances decay toward zero power never numerically "arrive"; measured
/// against their own vanishing norm the mismatch stays O(1) forever, so
/// stationarity checks normalize by `max(‖A‖, ‖B‖, floor)` with a floor tied
/// to the power budget.
pub fn relative_distance_floored(a: &CMat, b: &CMat, floor: f64) -> f64 {
    let scale = a.norm().max(b.norm()).max(floor);
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Deterministic pseudo-random Hermitian PD matrix for kernel tests.
    fn random_pd(dim: usize, seed: u64) -> HermitianPsd {
        let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
        let mut next = || {
            state = state
                .wrapping_mul(2862933555777941757)
                .wrapping_add(3037000493);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = CMat::from_fn(dim, dim, |_, _| c(next(), next()));
        let m = &a * a.adjoint() + CMat::identity(dim, dim) * c(0.1, 0.0);
        HermitianPsd::try_new(m).unwrap()
    }

    #[test]
    fn symmetrize_identity_is_identity() {
        let i = CMat::identity(3, 3);
        assert_eq!(symmetrize(&i).unwrap(), i);
    }

    #[test]
    fn symmetrize_keeps_hermitian_input() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 1.0), c(2.0, -1.0), c(3.0, 0.0)]);
        assert_eq!(symmetrize(&a).unwrap(), a);
    }

    #[test]
    fn symmetrize_hand_case() {
        // (A + A†)/2 for [[1, 2], [0, 1]] is [[1, 1], [1, 1]].
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let expected =
            CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(symmetrize(&a).unwrap(), expected);
    }

    #[test]
    fn symmetrize_rejects_non_square() {
        let a = CMat::zeros(2, 3);
        assert!(matches!(symmetrize(&a), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn inv_pd_identity() {
        let i = HermitianPsd::identity(4);
        let inv = inv_pd(&i).unwrap();
        assert!(relative_distance(inv.matrix(), i.matrix()) < 1e-14);
    }

    #[test]
    fn inv_pd_diagonal() {
        let d = HermitianPsd::try_new(CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(2.0, 0.0),
            c(4.0, 0.0),
        ])))
        .unwrap();
        let inv = inv_pd(&d).unwrap();
        assert!((inv.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((inv.matrix()[(1, 1)].re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn inv_pd_multiply_back() {
        let a = random_pd(3, 7);
        let b = inv_pd(&a).unwrap();
        let prod = a.matrix() * b.matrix();
        assert!((prod - CMat::identity(3, 3)).norm() < 1e-8);
        // output satisfies the type invariant
        assert!(HermitianPsd::try_new(b.matrix().clone()).is_ok());
    }

    #[test]
    fn inv_pd_rejects_indefinite() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(inv_pd_mat(&m).is_err());
        let n = CMat::from_row_slice(1, 1, &[c(-1.0, 0.0)]);
        assert!(inv_pd_mat(&n).is_err());
    }

    #[test]
    fn inv_sqrt_pd_identity_and_diagonal() {
        let i = HermitianPsd::identity(2);
        assert!(relative_distance(inv_sqrt_pd(&i).unwrap().matrix(), i.matrix()) < 1e-14);

        let d = HermitianPsd::try_new(CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(4.0, 0.0),
            c(9.0, 0.0),
        ])))
        .unwrap();
        let s = inv_sqrt_pd(&d).unwrap();
        assert!((s.matrix()[(0, 0)].re - 0.5).abs() < 1e-14);
        assert!((s.matrix()[(1, 1)].re - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn inv_sqrt_pd_multiply_back_and_commutes() {
        let a = random_pd(4, 11);
        let s = inv_sqrt_pd(&a).unwrap();
        let sas = s.matrix() * a.matrix() * s.matrix();
        assert!((sas - CMat::identity(4, 4)).norm() < 1e-8);
        let comm = s.matrix() * a.matrix() - a.matrix() * s.matrix();
        assert!(comm.norm() / a.matrix().norm() < 1e-8);
    }

    #[test]
    fn inv_sqrt_pd_rejects_indefinite() {
        let m = CMat::from_row_slice(1, 1, &[c(0.0, 0.0)]);
        assert!(inv_sqrt_pd_mat(&m).is_err());
    }

    #[test]
    fn logdet_identity_is_zero() {
        assert_eq!(logdet_pd(&HermitianPsd::identity(5)).unwrap(), 0.0);
    }

    #[test]
    fn logdet_diagonal() {
        let e = std::f64::consts::E;
        let d = HermitianPsd::try_new(CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(e, 0.0),
            c(e * e, 0.0),
        ])))
        .unwrap();
        assert!((logdet_pd(&d).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn logdet_matches_eigenvalue_sum() {
        // Independent route: sum of log eigenvalues.
        let a = random_pd(5, 23);
        let direct = logdet_pd(&a).unwrap();
        let eig_sum: f64 = a
            .matrix()
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .map(|l| l.ln())
            .sum();
        assert!((direct - eig_sum).abs() < 1e-10 * direct.abs().max(1.0));
    }

    #[test]
    fn logdet_rejects_indefinite() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        assert!(logdet_pd_mat(&m).is_err());
    }

    #[test]
    fn water_fill_single_channel_gets_budget() {
        let p = water_fill(&[1.0], 1.0, 42.0).unwrap();
        assert_eq!(p, vec![42.0]);
    }

    #[test]
    fn water_fill_two_channel_closed_form() {
        // Both channels active: ν = 1.125, p = [0.125, 0.875].
        let p = water_fill(&[1.0, 4.0], 1.0, 1.0).unwrap();
        assert!((p[0] - 0.125).abs() < 1e-12);
        assert!((p[1] - 0.875).abs() < 1e-12);
    }

    #[test]
    fn water_fill_drops_weak_channel() {
        // Second channel sits below the water level: scalar KKT gives [0.5, 0].
        let p = water_fill(&[1.0, 0.01], 1.0, 0.5).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn water_fill_all_zero_gains_errors() {
        assert!(matches!(
            water_fill(&[0.0, 0.0], 1.0, 1.0),
            Err(Error::AllGainsZero)
        ));
    }

    #[test]
    fn hermitian_psd_rejects_asymmetric() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            HermitianPsd::try_new(a),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn hermitian_psd_rejects_negative() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        assert!(matches!(HermitianPsd::try_new(a), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn hermitian_psd_accepts_zero() {
        assert!(HermitianPsd::try_new(CMat::zeros(3, 3)).is_ok());
    }

    #[test]
    fn hermitian_psd_rejects_non_finite() {
        let a = CMat::from_row_slice(1, 1, &[c(f64::NAN, 0.0)]);
        assert!(matches!(
            HermitianPsd::try_new(a),
            Err(Error::NonFinite { .. })
        ));
    }

    proptest! {
        #[test]
        fn water_fill_sums_to_budget_and_slack(
            gains in proptest::collection::vec(0.0f64..10.0, 1..12),
            weights in proptest::collection::vec(0.05f64..4.0, 12),
            budget in 0.01f64..500.0,
        ) {
            prop_assume!(gains.iter().any(|&g| g > 0.0));
            let weights = &weights[..gains.len()];
            let p = water_fill_weighted(&gains, weights, budget).unwrap();

            let total: f64 = p.iter().sum();
            prop_assert!((total - budget).abs() <= 1e-10 * budget);

            // Recover the water level from any active channel, then check
            // complementary slackness on every channel.
            let active = p.iter().position(|&x| x > 0.0).unwrap();
            let level = (p[active] + 1.0 / gains[active]) / weights[active];
            for i in 0..p.len() {
                if p[i] > 0.0 {
                    let implied = level * weights[i] - 1.0 / gains[i];
                    prop_assert!((p[i] - implied).abs() <= 1e-9 * (1.0 + p[i].abs()));
                } else if gains[i] > 0.0 {
                    prop_assert!(level * weights[i] <= 1.0 / gains[i] + 1e-9);
                }
            }
        }

        #[test]
        fn symmetrize_output_is_hermitian(seed in 0u64..1000) {
            let dim = 3;
            let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
            let mut next = || {
                state = state.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let a = CMat::from_fn(dim, dim, |_, _| c(next(), next()));
            let s = symmetrize(&a).unwrap();
            prop_assert!((&s - s.adjoint()).norm() < 1e-14);
        }
    }
}
