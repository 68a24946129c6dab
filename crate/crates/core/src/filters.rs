//! Steady-state Kalman and guaranteed-cost robust filter design.
//!
//! The Kalman filter solves the standard estimation Riccati equation for the
//! nominal plant. The robust filter solves the guaranteed-cost Riccati
//! equation, an over-bounding construction for uncertainties
//! `||Delta|| <= 1` that inflates the process noise by `(1/eps) D1 D1^T`
//! and deflates the measurement term by `eps E1^T E1`; its stabilizing
//! solution `Q~` is the design covariance the filter gains derive from.
//! The scaling parameter `epsilon` is tuned by scanning the design value
//! `Q+ = Q~(1,1)` and refining around its minimum. (Note that `Q~(1,1)`
//! is the scan objective, not a certified hard bound on the realized error
//! variance at the scan optimum; see the closed-loop analysis tests.)

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{log_spaced, MeasurementModel, ProcessModel, UncertaintyModel};
use crate::par;
use crate::solvers::{self, CareProblem, CareSolution};

/// Number of points in the default logarithmic epsilon scan.
pub const DEFAULT_SCAN_POINTS: usize = 200;

/// Default epsilon scan range.
pub const DEFAULT_SCAN_RANGE: (f64, f64) = (1e-2, 1e6);

/// Relative width of the refined epsilon bracket at termination.
const REFINE_REL_TOL: f64 = 1e-4;

/// Below this relative variation of the bound across the refined bracket the
/// optimum is reported as the bracket midpoint.
const FLAT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Kalman,
    Robust,
}

/// A designed feedback filter `x^' = L x^ + F x + N w` together with its
/// design covariance (`P` for Kalman, the bound `Q~` for robust).
#[derive(Debug, Clone)]
pub struct FilterDesign {
    /// Filter system matrix (`A - K H`, or the robust closed loop).
    pub l: DMatrix<f64>,
    /// True-state injection (`K H`, or `Q~ H^T (J S J^T)^-1 H`).
    pub f: DMatrix<f64>,
    /// Measurement-noise injection, `2 x m` (`K J`, or `Q~ H^T (J S J^T)^-1 J`).
    pub n: DMatrix<f64>,
    /// Design covariance: Riccati solution the gains were derived from.
    pub design_cov: DMatrix<f64>,
    pub kind: FilterKind,
    /// Scaling parameter of the robust design; absent for Kalman.
    pub epsilon: Option<f64>,
}

/// Result of scanning the guaranteed-cost bound over epsilon.
#[derive(Debug, Clone)]
pub struct EpsilonScanResult {
    /// Coarse grid: `(epsilon, Q+)` with `None` marking infeasible points.
    pub grid: Vec<(f64, Option<f64>)>,
    pub epsilon_opt: f64,
    pub q_plus_opt: f64,
    /// Set when the optimum sits at the edge of the scanned range.
    pub boundary_flag: bool,
}

/// Design the steady-state Kalman filter for a plant/measurement pair.
///
/// Also used with the dual-homodyne measurement when computing the standard
/// quantum limit; the gain algebra is identical for either channel count.
pub fn design_kalman(proc: &ProcessModel, meas: &MeasurementModel) -> Result<FilterDesign> {
    let jsj_inv = 1.0 / meas.jsj();
    let prob = CareProblem {
        a: proc.a.clone(),
        q_const: proc.grg(),
        m_quad: meas.h.transpose() * &meas.h * jsj_inv,
    };
    let sol = solvers::solve_care(&prob)?;
    let gain = &sol.x * meas.h.transpose() * jsj_inv;
    let f = &gain * &meas.h;
    let l = &proc.a - &f;
    let n = &gain * &meas.j;
    Ok(FilterDesign {
        l,
        f,
        n,
        design_cov: sol.x,
        kind: FilterKind::Kalman,
        epsilon: None,
    })
}

/// Solve the guaranteed-cost Riccati equation
///
/// ```text
/// A Q + Q A^T + Q (eps E1^T E1 - H^T (J S J^T)^-1 H) Q
///     + (1/eps) D1 D1^T + G R G^T = 0
/// ```
///
/// for its stabilizing solution `Q~`. Epsilons without a certified
/// stabilizing solution yield [`Error::InfeasibleEpsilon`].
pub fn robust_riccati(
    proc: &ProcessModel,
    meas: &MeasurementModel,
    unc: &UncertaintyModel,
    epsilon: f64,
) -> Result<CareSolution> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let jsj_inv = 1.0 / meas.jsj();
    let prob = CareProblem {
        a: proc.a.clone(),
        q_const: proc.grg() + &unc.d1 * unc.d1.transpose() / epsilon,
        m_quad: meas.h.transpose() * &meas.h * jsj_inv - unc.e1te1() * epsilon,
    };
    let sol = match solvers::solve_care(&prob) {
        Ok(sol) => sol,
        Err(Error::NoStabilizingSolution(_)) | Err(Error::Certification(_)) => {
            return Err(Error::InfeasibleEpsilon { epsilon });
        }
        Err(e) => return Err(e),
    };
    // The design covariance must be PSD.
    let min_eig = sol
        .x
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -1e-10 * sol.x.norm() {
        return Err(Error::InfeasibleEpsilon { epsilon });
    }
    Ok(sol)
}

/// Build the robust filter at a given epsilon from the stabilizing `Q~`.
pub fn design_robust(
    proc: &ProcessModel,
    meas: &MeasurementModel,
    unc: &UncertaintyModel,
    epsilon: f64,
) -> Result<FilterDesign> {
    let sol = robust_riccati(proc, meas, unc, epsilon)?;
    let q = sol.x;
    let jsj_inv = 1.0 / meas.jsj();
    let f = &q * meas.h.transpose() * jsj_inv * &meas.h;
    let l = &proc.a + &q * unc.e1te1() * epsilon - &f;
    let n = &q * meas.h.transpose() * jsj_inv * &meas.j;
    if !solvers::is_hurwitz(&l) {
        return Err(Error::DesignFailure(format!(
            "robust filter matrix not Hurwitz at epsilon = {epsilon:e}"
        )));
    }
    Ok(FilterDesign {
        l,
        f,
        n,
        design_cov: q,
        kind: FilterKind::Robust,
        epsilon: Some(epsilon),
    })
}

/// Scan `Q+ = Q~(eps)(1,1)` over `[scan_lo, scan_hi]` (200 log-spaced points)
/// and refine the best bracket by golden section down to a relative epsilon
/// interval of 1e-4.
pub fn optimize_epsilon(
    proc: &ProcessModel,
    meas: &MeasurementModel,
    unc: &UncertaintyModel,
    scan_lo: f64,
    scan_hi: f64,
) -> Result<EpsilonScanResult> {
    optimize_epsilon_grid(proc, meas, unc, scan_lo, scan_hi, DEFAULT_SCAN_POINTS)
}

/// [`optimize_epsilon`] with an explicit coarse-grid resolution.
pub fn optimize_epsilon_grid(
    proc: &ProcessModel,
    meas: &MeasurementModel,
    unc: &UncertaintyModel,
    scan_lo: f64,
    scan_hi: f64,
    scan_points: usize,
) -> Result<EpsilonScanResult> {
    if !(scan_lo > 0.0 && scan_hi > scan_lo) {
        return Err(Error::InvalidParameter(format!(
            "epsilon scan range must satisfy 0 < lo < hi, got [{scan_lo}, {scan_hi}]"
        )));
    }
    if scan_points < 2 {
        return Err(Error::InvalidParameter(format!(
            "epsilon scan needs at least 2 points, got {scan_points}"
        )));
    }
    let eps_grid = log_spaced(scan_lo, scan_hi, scan_points);
    let q_plus_at = |eps: f64| -> Option<f64> {
        match robust_riccati(proc, meas, unc, eps) {
            Ok(sol) => Some(sol.x[(0, 0)]),
            Err(_) => None,
        }
    };
    let grid: Vec<(f64, Option<f64>)> =
        par::map(&eps_grid, |&eps| (eps, q_plus_at(eps)));

    let best_idx = grid
        .iter()
        .enumerate()
        .filter_map(|(i, (_, q))| q.map(|q| (i, q)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .ok_or(Error::NoFeasibleEpsilon {
            lo: scan_lo,
            hi: scan_hi,
        })?;

    let (mut best_eps, mut best_q) = (grid[best_idx].0, grid[best_idx].1.unwrap());

    // Golden-section refinement in log(eps) on the bracket around the best
    // coarse point; infeasible evaluations count as +inf.
    let lo = grid[best_idx.saturating_sub(1)].0;
    let hi = grid[(best_idx + 1).min(grid.len() - 1)].0;
    let eval = |ln_eps: f64| q_plus_at(ln_eps.exp()).unwrap_or(f64::INFINITY);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    while (b - a) > REFINE_REL_TOL {
        // log-interval width bounds the relative epsilon interval
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = eval(x2);
        }
    }
    let (mut ref_eps, ref_q) = if f1 <= f2 {
        (x1.exp(), f1)
    } else {
        (x2.exp(), f2)
    };
    if f1.is_finite() && f2.is_finite() {
        let (qmin, qmax) = (f1.min(f2), f1.max(f2));
        if qmax - qmin < FLAT_TOL * qmin {
            ref_eps = (0.5 * (a + b)).exp();
        }
    }
    if ref_q < best_q {
        best_eps = ref_eps;
        best_q = ref_q;
    }

    let boundary_flag = (best_eps - scan_lo) / scan_lo < 1e-3
        || (scan_hi - best_eps) / scan_hi < 1e-3;

    Ok(EpsilonScanResult {
        grid,
        epsilon_opt: best_eps,
        q_plus_opt: best_q,
        boundary_flag,
    })
}
