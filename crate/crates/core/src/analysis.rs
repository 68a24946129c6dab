//! Closed-loop error analysis under realized uncertainty.
//!
//! Any designed filter can be evaluated against any realized plant by
//! augmenting the two into a single linear stochastic system and solving a
//! Lyapunov equation for its steady-state covariance; the phase estimation
//! error variance is the (1,1) entry of the error block. The dual-homodyne
//! standard quantum limit re-designs a Kalman filter per realized plant with
//! the doubled measurement noise of the heterodyne-equivalent scheme.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::filters::{self, FilterDesign};
use crate::model::{
    build_dual_homodyne_measurement, build_homodyne_measurement, build_process_model,
    realize_plant, Delta, ProcessModel, ResonantParams, UncertaintyModel,
};
use crate::par;
use crate::solvers;

/// Plant and filter stacked into `x_bar' = A_bar x_bar + B_bar w_bar` with
/// `x_bar = (x, x^)` and `w_bar = (v, w)`.
#[derive(Debug, Clone)]
pub struct AugmentedSystem {
    /// `[[A + D1 Delta E1, 0], [F, L]]`.
    pub a_bar: DMatrix<f64>,
    /// `[[G, 0], [0, N]]`, `4 x (1 + m)`.
    pub b_bar: DMatrix<f64>,
    /// `[I, -I]`: maps the augmented state onto the estimation error.
    pub error_selector: DMatrix<f64>,
}

/// Steady-state covariance of the augmented loop and the error block
/// extracted from it.
#[derive(Debug, Clone)]
pub struct ErrorCovariance {
    /// Solution of `A_bar P + P A_bar^T + B_bar B_bar^T = 0`.
    pub p_s: DMatrix<f64>,
    /// `P1 - P2 - P2^T + P3`, the error covariance.
    pub sigma: DMatrix<f64>,
    /// `Sigma(1,1)`: phase error variance in rad^2.
    pub sigma2: f64,
}

/// Which uncertain parameter a sweep varies; the other is held at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Delta1,
    Delta2,
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepAxis::Delta1 => write!(f, "delta1"),
            SweepAxis::Delta2 => write!(f, "delta2"),
        }
    }
}

/// One evaluated grid point; `None` marks an unstable-loop gap (or, for the
/// SQL column, a point that was not requested).
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub delta: f64,
    pub sigma2_robust: Option<f64>,
    pub sigma2_kalman: Option<f64>,
    pub sigma2_sql: Option<f64>,
}

/// A full delta sweep comparing the fixed robust and Kalman designs (and
/// optionally the per-point SQL) against the realized plant.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub mu1: f64,
    pub mu2: f64,
    /// Epsilon chosen for the robust design by the scan.
    pub epsilon_opt: f64,
    /// Design value `Q~(1,1)` of the robust filter (the scan objective).
    pub q_plus: f64,
    pub include_sql: bool,
    pub points: Vec<SweepPoint>,
}

/// Stack a realized plant and a filter design into the augmented system.
pub fn augment(plant: &ProcessModel, filter: &FilterDesign) -> Result<AugmentedSystem> {
    let dims_ok = plant.a.shape() == (2, 2)
        && plant.g.shape() == (2, 1)
        && filter.l.shape() == (2, 2)
        && filter.f.shape() == (2, 2)
        && filter.n.nrows() == 2;
    if !dims_ok {
        return Err(Error::InvalidInput(
            "augment expects a 2-state plant and filter".into(),
        ));
    }
    let m = filter.n.ncols();
    let mut a_bar = DMatrix::zeros(4, 4);
    a_bar.view_mut((0, 0), (2, 2)).copy_from(&plant.a);
    a_bar.view_mut((2, 0), (2, 2)).copy_from(&filter.f);
    a_bar.view_mut((2, 2), (2, 2)).copy_from(&filter.l);

    let mut b_bar = DMatrix::zeros(4, 1 + m);
    b_bar.view_mut((0, 0), (2, 1)).copy_from(&plant.g);
    b_bar.view_mut((2, 1), (2, m)).copy_from(&filter.n);

    let mut error_selector = DMatrix::zeros(2, 4);
    for i in 0..2 {
        error_selector[(i, i)] = 1.0;
        error_selector[(i, i + 2)] = -1.0;
    }
    Ok(AugmentedSystem {
        a_bar,
        b_bar,
        error_selector,
    })
}

/// Steady-state estimation error of an augmented loop via the Lyapunov
/// equation.
pub fn closed_loop_error(aug: &AugmentedSystem) -> Result<ErrorCovariance> {
    if !solvers::is_hurwitz(&aug.a_bar) {
        return Err(Error::UnstableLoop {
            max_re: solvers::max_real_part(&aug.a_bar),
        });
    }
    let w = &aug.b_bar * aug.b_bar.transpose();
    let p_s = solvers::solve_lyapunov(&aug.a_bar, &w)?;
    let sigma_raw = &aug.error_selector * &p_s * aug.error_selector.transpose();
    let sigma = 0.5 * (&sigma_raw + sigma_raw.transpose());
    let sigma2 = sigma[(0, 0)];
    Ok(ErrorCovariance { p_s, sigma, sigma2 })
}

/// Averaging time needed for a target relative standard error when
/// estimating `sigma2` as a time average of the squared error.
///
/// For the stationary Gaussian error `e(t)` with autocovariance
/// `C(tau) = c exp(A_bar tau) P_S c^T`,
///
/// ```text
/// Var[(1/T) int e^2 dt] ~ (4/T) int_0^inf C(tau)^2 dtau,
/// ```
///
/// and the integral is another Lyapunov solve with rank-one forcing. Loops
/// with slow, badly tracked plant modes need orders of magnitude more
/// averaging than the nominal loop; sizing windows from this formula keeps
/// Monte-Carlo validation both honest and affordable.
pub fn averaging_time(aug: &AugmentedSystem, rel_stderr: f64) -> Result<f64> {
    if !(rel_stderr > 0.0) || !rel_stderr.is_finite() {
        return Err(Error::InvalidInput(format!(
            "relative stderr target must be positive, got {rel_stderr}"
        )));
    }
    let err = closed_loop_error(aug)?;
    let c = aug.error_selector.row(0).clone_owned();
    let y = &err.p_s * c.transpose();
    let z = solvers::solve_lyapunov(&aug.a_bar, &(&y * y.transpose()))?;
    let integral = (&c * &z * c.transpose())[(0, 0)];
    Ok(4.0 * integral / (rel_stderr * err.sigma2).powi(2))
}

/// Standard quantum limit at a realized uncertainty: the error covariance of
/// a Kalman filter that knows the true plant but measures through the
/// dual-homodyne (heterodyne-equivalent) channel with doubled noise.
pub fn sql_sigma2(
    params: &ResonantParams,
    unc: &UncertaintyModel,
    d: &Delta,
    alpha_mag: f64,
) -> Result<f64> {
    let nominal = build_process_model(params)?;
    let plant = realize_plant(&nominal, unc, d)?;
    let meas = build_dual_homodyne_measurement(alpha_mag)?;
    let design = filters::design_kalman(&plant, &meas)?;
    Ok(design.design_cov[(0, 0)])
}

/// Uniformly spaced delta grid on `[-1, 1]`.
pub fn uniform_delta_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
        .collect()
}

/// Default 41-point sweep grid.
pub fn default_delta_grid() -> Vec<f64> {
    uniform_delta_grid(41)
}

/// Sweep one uncertain parameter over a grid, comparing the nominal-design
/// Kalman filter and the robust filter (designed once, at the scanned
/// optimal epsilon) on the realized plant; optionally also the per-point SQL.
///
/// Unstable closed loops are recorded as gaps, not errors.
pub fn sweep(
    params: &ResonantParams,
    alpha_mag: f64,
    unc: &UncertaintyModel,
    axis: SweepAxis,
    grid: &[f64],
    include_sql: bool,
) -> Result<SweepResult> {
    sweep_with_scan(
        params,
        alpha_mag,
        unc,
        axis,
        grid,
        include_sql,
        filters::DEFAULT_SCAN_RANGE.0,
        filters::DEFAULT_SCAN_RANGE.1,
        filters::DEFAULT_SCAN_POINTS,
    )
}

/// [`sweep`] with an explicit epsilon scan range/resolution for the robust
/// design.
#[allow(clippy::too_many_arguments)]
pub fn sweep_with_scan(
    params: &ResonantParams,
    alpha_mag: f64,
    unc: &UncertaintyModel,
    axis: SweepAxis,
    grid: &[f64],
    include_sql: bool,
    scan_lo: f64,
    scan_hi: f64,
    scan_points: usize,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty delta grid".into()));
    }
    if grid.iter().any(|d| !d.is_finite() || d.abs() > 1.0) {
        return Err(Error::InvalidInput("delta grid must lie in [-1, 1]".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "delta grid must be strictly increasing".into(),
        ));
    }

    let proc = build_process_model(params)?;
    let meas = build_homodyne_measurement(alpha_mag)?;
    let kalman = filters::design_kalman(&proc, &meas)?;
    let scan =
        filters::optimize_epsilon_grid(&proc, &meas, unc, scan_lo, scan_hi, scan_points)?;
    let robust = filters::design_robust(&proc, &meas, unc, scan.epsilon_opt)?;

    let eval = |delta: &f64| -> Result<SweepPoint> {
        let d = match axis {
            SweepAxis::Delta1 => Delta::new(*delta, 0.0)?,
            SweepAxis::Delta2 => Delta::new(0.0, *delta)?,
        };
        let plant = realize_plant(&proc, unc, &d)?;
        let mut point = SweepPoint {
            delta: *delta,
            sigma2_robust: None,
            sigma2_kalman: None,
            sigma2_sql: None,
        };
        for (design, slot) in [(&robust, 0), (&kalman, 1)] {
            match closed_loop_error(&augment(&plant, design)?) {
                Ok(err) => {
                    if slot == 0 {
                        point.sigma2_robust = Some(err.sigma2);
                    } else {
                        point.sigma2_kalman = Some(err.sigma2);
                    }
                }
                Err(Error::UnstableLoop { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        if include_sql {
            match sql_sigma2(params, unc, &d, alpha_mag) {
                Ok(s) => point.sigma2_sql = Some(s),
                Err(Error::UnstableLoop { .. })
                | Err(Error::NoStabilizingSolution(_))
                | Err(Error::InfeasibleEpsilon { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(point)
    };

    let points: Vec<SweepPoint> = par::map(grid, eval)
        .into_iter()
        .collect::<Result<_>>()?;

    Ok(SweepResult {
        axis,
        mu1: unc.mu1,
        mu2: unc.mu2,
        epsilon_opt: scan.epsilon_opt,
        q_plus: scan.q_plus_opt,
        include_sql,
        points,
    })
}
