//! Resonant-noise plant, homodyne/dual-homodyne measurement models and the
//! structured uncertainty description.
//!
//! The phase noise is a second-order resonance driven by unit white noise,
//! with transfer function `kappa / (s^2 + 2 zeta omega_r s + omega_r^2)`.
//! All frequencies are in rad/s.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Parameters of the resonant noise process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonantParams {
    /// Drive-to-phase gain (dimensionless).
    pub kappa: f64,
    /// Damping factor (dimensionless).
    pub zeta: f64,
    /// Resonant frequency (rad/s).
    pub omega_r: f64,
}

impl ResonantParams {
    pub fn new(kappa: f64, zeta: f64, omega_r: f64) -> Result<Self> {
        let p = Self {
            kappa,
            zeta,
            omega_r,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_r > 0.0) || !self.omega_r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "omega_r must be positive, got {}",
                self.omega_r
            )));
        }
        if !(self.zeta > 0.0) || !self.zeta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "zeta must be positive, got {}",
                self.zeta
            )));
        }
        if !self.kappa.is_finite() {
            return Err(Error::InvalidParameter("kappa must be finite".into()));
        }
        Ok(())
    }

    /// A plant with `kappa = 0` carries no noise drive; downstream Riccati
    /// solutions collapse to zero.
    pub fn is_degenerate(&self) -> bool {
        self.kappa == 0.0
    }
}

/// State-space realization `x' = A x + G v` of the resonant noise, with the
/// state `(phi, phi_dot)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessModel {
    /// Companion-form system matrix `[[0, 1], [-omega_r^2, -2 zeta omega_r]]`.
    pub a: DMatrix<f64>,
    /// Drive injection `[0; kappa]`.
    pub g: DMatrix<f64>,
    /// Process-noise intensity (unity white noise).
    pub r: f64,
    /// Set when `kappa = 0`.
    pub degenerate: bool,
}

impl ProcessModel {
    /// Constant Riccati/Lyapunov term `G R G^T`.
    pub fn grg(&self) -> DMatrix<f64> {
        &self.g * self.g.transpose() * self.r
    }
}

/// Linearized measurement `theta = H x + J w` for one `(H, J, S)` detector
/// configuration; `m = 1` for homodyne, `m = 2` for dual-homodyne.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    /// Output map, `[1 0]` in both configurations.
    pub h: DMatrix<f64>,
    /// Noise injection, `1 x m`, every entry `1/(2|alpha|)`.
    pub j: DMatrix<f64>,
    /// Measurement-noise intensity, identity `m x m`.
    pub s: DMatrix<f64>,
    /// Coherent amplitude `|alpha|`.
    pub alpha_mag: f64,
    /// Photon flux `|alpha|^2`.
    pub photon_flux: f64,
}

impl MeasurementModel {
    /// Number of measurement-noise channels.
    pub fn noise_channels(&self) -> usize {
        self.j.ncols()
    }

    /// Scalar measurement-noise intensity `J S J^T`.
    pub fn jsj(&self) -> f64 {
        (&self.j * &self.s * self.j.transpose())[(0, 0)]
    }
}

/// Structured uncertainty `A -> A + D1 Delta E1` in the plant matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyModel {
    /// Injection column `[0; 1]`.
    pub d1: DMatrix<f64>,
    /// Output scaling `diag(-mu1 omega_r^2, -2 mu2 zeta omega_r)`.
    pub e1: DMatrix<f64>,
    /// Uncertainty level in the `omega_r^2` term, `[0, 1)`.
    pub mu1: f64,
    /// Uncertainty level in the damping term, `[0, 1)`.
    pub mu2: f64,
}

impl UncertaintyModel {
    pub fn new(params: &ResonantParams, mu1: f64, mu2: f64) -> Result<Self> {
        params.validate()?;
        for (name, mu) in [("mu1", mu1), ("mu2", mu2)] {
            if !(0.0..1.0).contains(&mu) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0, 1), got {mu}"
                )));
            }
        }
        let d1 = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let e1 = DMatrix::from_row_slice(
            2,
            2,
            &[
                -mu1 * params.omega_r * params.omega_r,
                0.0,
                0.0,
                -2.0 * mu2 * params.zeta * params.omega_r,
            ],
        );
        Ok(Self { d1, e1, mu1, mu2 })
    }

    /// `E1^T E1`, the uncertainty weight in the robust Riccati equation.
    pub fn e1te1(&self) -> DMatrix<f64> {
        self.e1.transpose() * &self.e1
    }
}

/// A realized uncertainty `Delta = [delta1 delta2]` with `||Delta|| <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta {
    delta1: f64,
    delta2: f64,
}

impl Delta {
    pub fn new(delta1: f64, delta2: f64) -> Result<Self> {
        let norm_sq = delta1 * delta1 + delta2 * delta2;
        if !(norm_sq <= 1.0) {
            return Err(Error::ConstraintViolation {
                norm: norm_sq.sqrt(),
            });
        }
        Ok(Self { delta1, delta2 })
    }

    pub fn zero() -> Self {
        Self {
            delta1: 0.0,
            delta2: 0.0,
        }
    }

    pub fn delta1(&self) -> f64 {
        self.delta1
    }

    pub fn delta2(&self) -> f64 {
        self.delta2
    }
}

/// Build the companion-form state-space realization of the resonant noise.
pub fn build_process_model(params: &ResonantParams) -> Result<ProcessModel> {
    params.validate()?;
    let a = DMatrix::from_row_slice(
        2,
        2,
        &[
            0.0,
            1.0,
            -params.omega_r * params.omega_r,
            -2.0 * params.zeta * params.omega_r,
        ],
    );
    let g = DMatrix::from_column_slice(2, 1, &[0.0, params.kappa]);
    Ok(ProcessModel {
        a,
        g,
        r: 1.0,
        degenerate: params.is_degenerate(),
    })
}

/// Magnitude (dB) and phase (degrees, continuous from 0 at DC towards -180)
/// of the noise transfer function over a frequency grid.
pub fn frequency_response(
    params: &ResonantParams,
    omegas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    params.validate()?;
    if omegas.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidInput(
            "frequency grid must be finite and nonnegative".into(),
        ));
    }
    let wr2 = params.omega_r * params.omega_r;
    let mut out = Vec::with_capacity(omegas.len());
    let mut prev_phase: Option<f64> = None;
    for &w in omegas {
        let re_den = wr2 - w * w;
        let im_den = 2.0 * params.zeta * params.omega_r * w;
        let den_mag = re_den.hypot(im_den);
        let mag_db = 20.0 * (params.kappa.abs() / den_mag).log10();
        // G = kappa * conj(den) / |den|^2.
        let mut phase = (-params.kappa * im_den)
            .atan2(params.kappa * re_den)
            .to_degrees();
        if let Some(prev) = prev_phase {
            while phase - prev > 180.0 {
                phase -= 360.0;
            }
            while phase - prev < -180.0 {
                phase += 360.0;
            }
        }
        prev_phase = Some(phase);
        out.push((mag_db, phase));
    }
    Ok(out)
}

/// Single-homodyne measurement: one detector, `J S J^T = 1/(4 |alpha|^2)`.
pub fn build_homodyne_measurement(alpha_mag: f64) -> Result<MeasurementModel> {
    build_measurement(alpha_mag, 1)
}

/// Dual-homodyne measurement: beam-split onto two detectors; the vacuum port
/// doubles the noise intensity to `J S J^T = 1/(2 |alpha|^2)`.
pub fn build_dual_homodyne_measurement(alpha_mag: f64) -> Result<MeasurementModel> {
    build_measurement(alpha_mag, 2)
}

fn build_measurement(alpha_mag: f64, m: usize) -> Result<MeasurementModel> {
    if !(alpha_mag > 0.0) || !alpha_mag.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha_mag must be positive, got {alpha_mag}"
        )));
    }
    let h = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let j = DMatrix::from_element(1, m, 1.0 / (2.0 * alpha_mag));
    let s = DMatrix::identity(m, m);
    Ok(MeasurementModel {
        h,
        j,
        s,
        alpha_mag,
        photon_flux: alpha_mag * alpha_mag,
    })
}

/// Apply a realized uncertainty to the plant: `A -> A + D1 Delta E1`, with
/// `G` and `R` unchanged.
pub fn realize_plant(
    model: &ProcessModel,
    unc: &UncertaintyModel,
    d: &Delta,
) -> Result<ProcessModel> {
    let norm_sq = d.delta1() * d.delta1() + d.delta2() * d.delta2();
    if !(norm_sq <= 1.0) {
        return Err(Error::ConstraintViolation {
            norm: norm_sq.sqrt(),
        });
    }
    let delta = DMatrix::from_row_slice(1, 2, &[d.delta1(), d.delta2()]);
    let a = &model.a + &unc.d1 * delta * &unc.e1;
    Ok(ProcessModel {
        a,
        g: model.g.clone(),
        r: model.r,
        degenerate: model.degenerate,
    })
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2, "invalid log grid");
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Nominal parameter values used throughout: `kappa = 1`, `zeta = 0.01`,
/// `omega_r = 2 pi * 1000` rad/s (a 1 kHz resonance, quoted as 6.283e3),
/// `|alpha| = 6e8`.
pub fn nominal_params() -> ResonantParams {
    ResonantParams {
        kappa: 1.0,
        zeta: 0.01,
        omega_r: 1000.0 * std::f64::consts::TAU,
    }
}

/// Nominal coherent amplitude.
pub const NOMINAL_ALPHA: f64 = 6e8;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::is_hurwitz;

    const OMEGA_R: f64 = 6.283e3;

    fn nominal() -> ResonantParams {
        ResonantParams::new(1.0, 0.01, OMEGA_R).unwrap()
    }

    #[test]
    fn process_model_has_companion_structure() {
        let m = build_process_model(&nominal()).unwrap();
        assert_eq!(m.a[(0, 0)], 0.0);
        assert_eq!(m.a[(0, 1)], 1.0);
        assert_eq!(m.a[(1, 0)], -OMEGA_R * OMEGA_R);
        assert_eq!(m.a[(1, 1)], -2.0 * 0.01 * OMEGA_R);
        assert!((m.a[(1, 0)] - -3.94761e7).abs() < 0.5e2);
        assert!((m.a[(1, 1)] - -125.66).abs() < 1e-10);
        assert_eq!(m.g[(0, 0)], 0.0);
        assert_eq!(m.g[(1, 0)], 1.0);
        assert_eq!(m.r, 1.0);
        assert!(!m.degenerate);
    }

    #[test]
    fn critically_damped_plant_has_repeated_root() {
        let p = ResonantParams::new(1.0, 1.0, 100.0).unwrap();
        let m = build_process_model(&p).unwrap();
        let eigs = m.a.complex_eigenvalues();
        for l in eigs.iter() {
            assert!((l.re - -100.0).abs() < 1e-6 && l.im.abs() < 1e-6, "{l}");
        }
    }

    #[test]
    fn zero_gain_plant_is_degenerate() {
        let p = ResonantParams::new(0.0, 0.01, OMEGA_R).unwrap();
        let m = build_process_model(&p).unwrap();
        assert_eq!(m.g[(1, 0)], 0.0);
        assert!(m.degenerate);
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(ResonantParams::new(1.0, 0.0, OMEGA_R).is_err());
        assert!(ResonantParams::new(1.0, -0.1, OMEGA_R).is_err());
        assert!(ResonantParams::new(1.0, 0.01, 0.0).is_err());
        assert!(ResonantParams::new(1.0, 0.01, -1.0).is_err());
    }

    #[test]
    fn frequency_response_anchors() {
        // Analytic oracle: |G(0)| = kappa/omega_r^2, |G(j omega_r)| =
        // kappa/(2 zeta omega_r^2), phase 0 and -90 degrees.
        let p = nominal();
        let resp = frequency_response(&p, &[0.0, OMEGA_R]).unwrap();
        let dc_expect = 20.0 * (1.0 / (OMEGA_R * OMEGA_R)).log10();
        assert!((resp[0].0 - dc_expect).abs() < 1e-9);
        assert!((resp[0].0 - -151.93).abs() < 0.05);
        assert!(resp[0].1.abs() < 1e-12);
        let res_expect = 20.0 * (1.0 / (2.0 * 0.01 * OMEGA_R * OMEGA_R)).log10();
        assert!((resp[1].0 - res_expect).abs() < 1e-9);
        assert!((resp[1].0 - -117.95).abs() < 0.05);
        assert!((resp[1].1 - -90.0).abs() < 1e-9);
    }

    #[test]
    fn frequency_response_rolls_off_at_minus_40db_per_decade() {
        let p = nominal();
        let resp = frequency_response(&p, &[1e3 * OMEGA_R, 1e4 * OMEGA_R]).unwrap();
        assert!((resp[1].0 - resp[0].0 - -40.0).abs() < 0.01);
        assert!(resp[1].1 < -179.9 && resp[1].1 >= -180.0);
    }

    #[test]
    fn frequency_response_rejects_negative_frequencies() {
        assert!(frequency_response(&nominal(), &[-1.0]).is_err());
    }

    #[test]
    fn resonance_peak_exceeds_dc_by_inverse_two_zeta() {
        for zeta in [0.01, 0.005, 0.001] {
            let p = ResonantParams::new(2.5, zeta, 500.0).unwrap();
            let resp = frequency_response(&p, &[0.0, 500.0]).unwrap();
            let lift_db = 20.0 * (1.0 / (2.0 * zeta)).log10();
            assert!((resp[1].0 - resp[0].0 - lift_db).abs() < 0.01);
        }
    }

    #[test]
    fn homodyne_measurement_values() {
        let m = build_homodyne_measurement(6e8).unwrap();
        assert_eq!(m.noise_channels(), 1);
        assert!((m.jsj() - 6.9444e-19).abs() < 1e-23);
        assert_eq!(m.h[(0, 0)], 1.0);
        assert_eq!(m.h[(0, 1)], 0.0);
        let unit = build_homodyne_measurement(0.5).unwrap();
        assert_eq!(unit.j[(0, 0)], 1.0);
        assert!(build_homodyne_measurement(-1.0).is_err());
    }

    #[test]
    fn dual_homodyne_doubles_noise_intensity() {
        let dual = build_dual_homodyne_measurement(6e8).unwrap();
        assert_eq!(dual.noise_channels(), 2);
        assert!((dual.jsj() - 1.3889e-18).abs() < 1e-22);
        for alpha in [6e8, 0.5, 3.7e2] {
            let single = build_homodyne_measurement(alpha).unwrap();
            let dual = build_dual_homodyne_measurement(alpha).unwrap();
            assert_eq!(dual.jsj() / single.jsj(), 2.0);
        }
        assert!(build_dual_homodyne_measurement(0.0).is_err());
    }

    #[test]
    fn realized_plant_perturbs_second_row_only() {
        let p = nominal();
        let m = build_process_model(&p).unwrap();
        let unc = UncertaintyModel::new(&p, 0.5, 0.0).unwrap();

        let zero = realize_plant(&m, &unc, &Delta::zero()).unwrap();
        assert_eq!(zero.a, m.a);

        let d = Delta::new(-1.0, 0.0).unwrap();
        let realized = realize_plant(&m, &unc, &d).unwrap();
        // Oracle: entry (2,1) = -omega_r^2 (1 - 0.5).
        let expect = -OMEGA_R * OMEGA_R * 0.5;
        assert!((realized.a[(1, 0)] - expect).abs() < 1e-6 * expect.abs());
        assert!((realized.a[(1, 0)] - -1.97380e7).abs() < 1e2);
        assert_eq!(realized.a[(0, 0)], m.a[(0, 0)]);
        assert_eq!(realized.a[(0, 1)], m.a[(0, 1)]);
        assert_eq!(realized.a[(1, 1)], m.a[(1, 1)]);
        assert_eq!(realized.g, m.g);
    }

    #[test]
    fn delta_outside_unit_ball_is_rejected() {
        assert!(Delta::new(0.9, 0.9).is_err());
        assert!(Delta::new(1.0, 0.0).is_ok());
        assert!(Delta::new(0.6, 0.8).is_ok());
        let p = nominal();
        let m = build_process_model(&p).unwrap();
        let unc = UncertaintyModel::new(&p, 0.5, 0.5).unwrap();
        let bad = Delta {
            delta1: 0.9,
            delta2: 0.9,
        };
        assert!(matches!(
            realize_plant(&m, &unc, &bad),
            Err(Error::ConstraintViolation { .. })
        ));
    }

    #[test]
    fn uncertainty_levels_validated() {
        let p = nominal();
        assert!(UncertaintyModel::new(&p, 1.0, 0.0).is_err());
        assert!(UncertaintyModel::new(&p, -0.1, 0.0).is_err());
        assert!(UncertaintyModel::new(&p, 0.0, 0.999).is_ok());
        let unc = UncertaintyModel::new(&p, 0.5, 0.25).unwrap();
        assert_eq!(unc.e1[(0, 0)], -0.5 * OMEGA_R * OMEGA_R);
        assert_eq!(unc.e1[(1, 1)], -2.0 * 0.25 * 0.01 * OMEGA_R);
        assert_eq!(unc.e1[(0, 1)], 0.0);
        assert_eq!(unc.d1[(0, 0)], 0.0);
        assert_eq!(unc.d1[(1, 0)], 1.0);
    }

    #[test]
    fn plant_is_hurwitz_for_positive_damping() {
        for (zeta, omega) in [(0.01, 6.283e3), (1.0, 100.0), (0.3, 1e-2), (1.9, 4e4)] {
            let p = ResonantParams::new(1.0, zeta, omega).unwrap();
            let m = build_process_model(&p).unwrap();
            assert!(is_hurwitz(&m.a), "zeta={zeta} omega={omega}");
        }
    }

    #[test]
    fn realized_plant_is_affine_in_delta() {
        let p = nominal();
        let m = build_process_model(&p).unwrap();
        let unc = UncertaintyModel::new(&p, 0.7, 0.4).unwrap();
        for (d1, d2) in [(0.3, 0.4), (-0.5, 0.1), (0.0, -0.9)] {
            let d = Delta::new(d1, d2).unwrap();
            let r = realize_plant(&m, &unc, &d).unwrap();
            let slope1 = -0.7 * OMEGA_R * OMEGA_R;
            let slope2 = -2.0 * 0.4 * 0.01 * OMEGA_R;
            assert!((r.a[(1, 0)] - (m.a[(1, 0)] + slope1 * d1)).abs() < 1e-6);
            assert!((r.a[(1, 1)] - (m.a[(1, 1)] + slope2 * d2)).abs() < 1e-10);
        }
    }

    #[test]
    fn log_grid_endpoints_and_monotonicity() {
        let g = log_spaced(OMEGA_R / 100.0, OMEGA_R * 100.0, 400);
        assert_eq!(g.len(), 400);
        assert!((g[0] - OMEGA_R / 100.0).abs() < 1e-9 * OMEGA_R);
        assert!((g[399] - OMEGA_R * 100.0).abs() < 1e-6 * OMEGA_R);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
