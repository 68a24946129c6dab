//! Continuous-time algebraic Riccati and Lyapunov solvers for small dense
//! systems, with residual and stability certification.
//!
//! The Riccati solver handles the canonical form
//!
//! ```text
//! A X + X A^T - X M X + Q = 0
//! ```
//!
//! where the quadratic coefficient `M` may be indefinite (the guaranteed-cost
//! equation subtracts a scaled uncertainty term from the measurement term).
//! Solutions come from the stable invariant subspace of the 2n x 2n
//! Hamiltonian `[[A, -M], [-Q, -A^T]]`, computed through an ordered real
//! Schur decomposition of the balanced Hamiltonian, followed by one Newton
//! correction solved as a Lyapunov equation. Every solve is certified: the
//! relative residual is evaluated in the original (unbalanced) coordinates
//! and must come out below [`RESIDUAL_TOL`].

mod schur;

pub use schur::balance;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Certification threshold on relative residuals of returned solutions.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Relative symmetry tolerance required of problem data.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues closer to the imaginary axis than this fraction of the
/// Hamiltonian spectral radius make the stable/antistable split meaningless.
const AXIS_TOL: f64 = 1e-9;

/// A continuous-time algebraic Riccati problem `A X + X A^T - X M X + Q = 0`.
///
/// `q_const` is the constant term (`G R G^T`, possibly inflated by the
/// uncertainty channel) and `m_quad` the coefficient of the quadratic term
/// (`H^T (J S J^T)^-1 H`, possibly deflated by `eps E1^T E1`).
#[derive(Debug, Clone)]
pub struct CareProblem {
    pub a: DMatrix<f64>,
    pub q_const: DMatrix<f64>,
    pub m_quad: DMatrix<f64>,
}

/// A certified stabilizing Riccati solution.
#[derive(Debug, Clone)]
pub struct CareSolution {
    /// The symmetric stabilizing solution.
    pub x: DMatrix<f64>,
    /// `A - X M`, Hurwitz for a stabilizing solution.
    pub closed_loop: DMatrix<f64>,
    /// `||A X + X A^T - X M X + Q|| / max(||X||, 1)` in Frobenius norms.
    pub residual_rel: f64,
    pub stabilizing: bool,
}

fn check_square(name: &str, m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "{name} must be {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_symmetric(name: &str, m: &DMatrix<f64>) -> Result<()> {
    let asym = (m - m.transpose()).norm();
    if asym > SYMMETRY_TOL * m.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidInput(format!(
            "{name} is not symmetric (relative asymmetry {:e})",
            asym / m.norm()
        )));
    }
    Ok(())
}

/// True iff every eigenvalue of `a` has real part below
/// `-1e-12 * max(1, spectral radius)`.
pub fn is_hurwitz(a: &DMatrix<f64>) -> bool {
    assert_eq!(a.nrows(), a.ncols(), "is_hurwitz requires a square matrix");
    if a.nrows() == 0 {
        return true;
    }
    let (_, b) = balance(a);
    let eigs = b.complex_eigenvalues();
    let rho = eigs.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let tol = -1e-12 * rho.max(1.0);
    eigs.iter().all(|l| l.re < tol)
}

/// Largest eigenvalue real part of `a` (balanced before the eigensolve).
pub fn max_real_part(a: &DMatrix<f64>) -> f64 {
    let (_, b) = balance(a);
    b.complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Spectral radius of `a`.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    let (_, b) = balance(a);
    b.complex_eigenvalues()
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max)
}

/// Residual matrix `A X + X A^T - X M X + Q` of a Riccati candidate.
fn care_residual_matrix(prob: &CareProblem, x: &DMatrix<f64>) -> DMatrix<f64> {
    &prob.a * x + x * prob.a.transpose() - x * &prob.m_quad * x + &prob.q_const
}

/// Relative Riccati residual `||res|| / max(||X||, 1)`.
pub fn care_residual(prob: &CareProblem, x: &DMatrix<f64>) -> f64 {
    care_residual_matrix(prob, x).norm() / x.norm().max(1.0)
}

/// Relative Lyapunov residual `||A P + P A^T + W|| / max(||P||, 1)`.
pub fn lyapunov_residual(a: &DMatrix<f64>, w: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    (a * p + p * a.transpose() + w).norm() / p.norm().max(1.0)
}

/// Solve `A X + X A^T - X M X + Q = 0` for the stabilizing `X`.
pub fn solve_care(prob: &CareProblem) -> Result<CareSolution> {
    let n = prob.a.nrows();
    check_square("A", &prob.a, n)?;
    check_square("Q_const", &prob.q_const, n)?;
    check_square("M_quad", &prob.m_quad, n)?;
    if n == 0 {
        return Err(Error::InvalidInput("empty Riccati problem".into()));
    }
    check_symmetric("Q_const", &prob.q_const)?;
    check_symmetric("M_quad", &prob.m_quad)?;

    // Hamiltonian of the filter-form equation: [[A^T, -M], [-Q, -A]].
    // Its stable invariant subspace [U1; U2] yields X = U2 U1^-1 with
    // A X + X A^T - X M X + Q = 0 and A - X M Hurwitz.
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&prob.a.transpose());
    h.view_mut((0, n), (n, n)).copy_from(&(-&prob.m_quad));
    h.view_mut((n, 0), (n, n)).copy_from(&(-&prob.q_const));
    h.view_mut((n, n), (n, n)).copy_from(&(-&prob.a));

    let (d, hb) = balance(&h);
    let mut s = schur::real_schur(&hb)?;

    let eigs = schur::quasi_eigenvalues(&s.t, &s.blocks);
    let rho = eigs
        .iter()
        .map(|(re, im)| re.hypot(*im))
        .fold(0.0, f64::max);
    if eigs.iter().any(|(re, _)| re.abs() <= AXIS_TOL * rho) {
        return Err(Error::NoStabilizingSolution(format!(
            "Hamiltonian eigenvalue within {AXIS_TOL:e} of the imaginary axis"
        )));
    }

    let n_stable = schur::reorder_stable_first(&mut s)?;
    if n_stable != n {
        return Err(Error::NoStabilizingSolution(format!(
            "Hamiltonian has {n_stable} stable eigenvalues, expected {n}"
        )));
    }

    // Stable invariant subspace of H, mapped back through the balancing.
    let mut u1 = DMatrix::zeros(n, n);
    let mut u2 = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            u1[(i, j)] = d[i] * s.q[(i, j)];
            u2[(i, j)] = d[n + i] * s.q[(n + i, j)];
        }
    }
    // X = U2 U1^-1, computed as the solution of U1^T X^T = U2^T.
    let xt = u1.transpose().lu().solve(&u2.transpose()).ok_or_else(|| {
        Error::NoStabilizingSolution("stable subspace is not a graph (U1 singular)".into())
    })?;
    let mut x = xt.transpose();
    x = 0.5 * (&x + x.transpose());

    // One Newton correction, solved as a Lyapunov equation on the closed loop.
    let mut best_res = care_residual(prob, &x);
    let closed = &prob.a - &x * &prob.m_quad;
    if is_hurwitz(&closed) {
        let res_mat = care_residual_matrix(prob, &x);
        if let Ok(delta) = lyapunov_unchecked(&closed, &res_mat) {
            let mut refined = &x + delta;
            refined = 0.5 * (&refined + refined.transpose());
            let res_refined = care_residual(prob, &refined);
            if res_refined < best_res {
                x = refined;
                best_res = res_refined;
            }
        }
    }

    if best_res > RESIDUAL_TOL {
        return Err(Error::Certification(format!(
            "Riccati residual {best_res:e} exceeds {RESIDUAL_TOL:e}"
        )));
    }
    let closed_loop = &prob.a - &x * &prob.m_quad;
    if !is_hurwitz(&closed_loop) {
        return Err(Error::NoStabilizingSolution(
            "computed solution does not stabilize the closed loop".into(),
        ));
    }
    Ok(CareSolution {
        x,
        closed_loop,
        residual_rel: best_res,
        stabilizing: true,
    })
}

/// Solve `A P + P A^T + W = 0` for symmetric PSD `P`, requiring `A` Hurwitz
/// and `W` symmetric PSD.
pub fn solve_lyapunov(a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    check_square("A", a, n)?;
    check_square("W", w, n)?;
    check_symmetric("W", w)?;
    let w_sym = 0.5 * (w + w.transpose());
    let eig_min = w_sym
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if eig_min < -SYMMETRY_TOL * w_sym.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidInput(format!(
            "W is not positive semidefinite (min eigenvalue {eig_min:e})"
        )));
    }
    if !is_hurwitz(a) {
        return Err(Error::UnstableSystem {
            max_re: max_real_part(a),
        });
    }
    let p = lyapunov_unchecked(a, &w_sym)?;
    let res = lyapunov_residual(a, &w_sym, &p);
    if res > RESIDUAL_TOL {
        return Err(Error::Certification(format!(
            "Lyapunov residual {res:e} exceeds {RESIDUAL_TOL:e}"
        )));
    }
    Ok(p)
}

/// Lyapunov solve without definiteness or stability checks; used for Newton
/// corrections where `W` is a residual of either sign.
fn lyapunov_unchecked(a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let (d, ab) = balance(a);
    // W' = D^-1 W D^-T (diagonal D, exact powers of two).
    let mut wb = w.clone();
    for i in 0..n {
        for j in 0..n {
            wb[(i, j)] /= d[i] * d[j];
        }
    }

    // Column-stacked linear system (I (x) A + A (x) I) vec(P) = -vec(W).
    let m = n * n;
    let mut k = DMatrix::zeros(m, m);
    let mut rhs = DVector::zeros(m);
    for j in 0..n {
        for i in 0..n {
            let r = i + j * n;
            for l in 0..n {
                k[(r, l + j * n)] += ab[(i, l)];
                k[(r, i + l * n)] += ab[(j, l)];
            }
            rhs[r] = -wb[(i, j)];
        }
    }
    let lu = k.clone().lu();
    let mut sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Certification("singular Lyapunov operator".into()))?;
    // One step of iterative refinement with the same factorization.
    let resid = &rhs - &k * &sol;
    if let Some(corr) = lu.solve(&resid) {
        sol += corr;
    }

    let mut p = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            p[(i, j)] = sol[i + j * n] * d[i] * d[j];
        }
    }
    Ok(0.5 * (&p + p.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    /// Independent residual oracle: plain matrix arithmetic, no solver code.
    fn residual_oracle(prob: &CareProblem, x: &DMatrix<f64>) -> f64 {
        let n = x.nrows();
        let mut res = prob.q_const.clone();
        for i in 0..n {
            for j in 0..n {
                let mut ax = 0.0;
                let mut xa = 0.0;
                let mut xmx = 0.0;
                for k in 0..n {
                    ax += prob.a[(i, k)] * x[(k, j)];
                    xa += x[(i, k)] * prob.a[(j, k)];
                    for l in 0..n {
                        xmx += x[(i, k)] * prob.m_quad[(k, l)] * x[(l, j)];
                    }
                }
                res[(i, j)] += ax + xa - xmx;
            }
        }
        res.norm() / x.norm().max(1.0)
    }

    #[test]
    fn scalar_care_has_unit_solution() {
        let prob = CareProblem {
            a: DMatrix::from_element(1, 1, 0.0),
            q_const: DMatrix::from_element(1, 1, 1.0),
            m_quad: DMatrix::from_element(1, 1, 1.0),
        };
        let sol = solve_care(&prob).unwrap();
        assert!(rel(sol.x[(0, 0)], 1.0) < 1e-12);
        assert!(rel(sol.closed_loop[(0, 0)], -1.0) < 1e-12);
        assert!(sol.stabilizing);
    }

    #[test]
    fn nominal_kalman_care_matches_reference_covariance() {
        // kappa = 1, zeta = 0.01, omega_r = 2 pi kHz, |alpha| = 6e8.
        let omega_r: f64 = 1000.0 * std::f64::consts::TAU;
        let zeta = 0.01;
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[0.0, 1.0, -omega_r * omega_r, -2.0 * zeta * omega_r],
        );
        let q = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let jsj_inv = 4.0 * 6e8_f64 * 6e8;
        let m = DMatrix::from_row_slice(2, 2, &[jsj_inv, 0.0, 0.0, 0.0]);
        let prob = CareProblem {
            a,
            q_const: q,
            m_quad: m,
        };
        let sol = solve_care(&prob).unwrap();
        assert!(rel(sol.x[(0, 0)], 3.33785970e-14) < 1e-6, "{}", sol.x[(0, 0)]);
        assert!(rel(sol.x[(0, 1)], 8.02174133e-10) < 1e-6, "{}", sol.x[(0, 1)]);
        assert!(rel(sol.x[(1, 1)], 3.99751822e-5) < 1e-6, "{}", sol.x[(1, 1)]);
        assert!(sol.residual_rel <= RESIDUAL_TOL);
        assert!(residual_oracle(&prob, &sol.x) <= RESIDUAL_TOL);
    }

    #[test]
    fn care_rejects_axis_eigenvalues() {
        // Undamped oscillator, no measurement: Hamiltonian eigenvalues sit on
        // the imaginary axis.
        let prob = CareProblem {
            a: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, 0.0]),
            q_const: DMatrix::zeros(2, 2),
            m_quad: DMatrix::zeros(2, 2),
        };
        match solve_care(&prob) {
            Err(Error::NoStabilizingSolution(_)) => {}
            other => panic!("expected NoStabilizingSolution, got {other:?}"),
        }
    }

    #[test]
    fn care_rejects_dimension_mismatch_and_asymmetry() {
        let prob = CareProblem {
            a: DMatrix::identity(2, 2),
            q_const: DMatrix::identity(3, 3),
            m_quad: DMatrix::identity(2, 2),
        };
        assert!(matches!(solve_care(&prob), Err(Error::InvalidInput(_))));

        let prob = CareProblem {
            a: -DMatrix::identity(2, 2),
            q_const: DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.1, 1.0]),
            m_quad: DMatrix::identity(2, 2),
        };
        assert!(matches!(solve_care(&prob), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn scalar_lyapunov() {
        let a = DMatrix::from_element(1, 1, -1.0);
        let w = DMatrix::from_element(1, 1, 2.0);
        let p = solve_lyapunov(&a, &w).unwrap();
        assert!(rel(p[(0, 0)], 1.0) < 1e-14);
    }

    #[test]
    fn lyapunov_zero_noise_gives_zero() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 3.0, 0.0, -2.0]);
        let p = solve_lyapunov(&a, &DMatrix::zeros(2, 2)).unwrap();
        assert!(p.norm() == 0.0);
    }

    #[test]
    fn lyapunov_rejects_unstable_system() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, 0.0]);
        let w = DMatrix::identity(2, 2);
        assert!(matches!(
            solve_lyapunov(&a, &w),
            Err(Error::UnstableSystem { .. })
        ));
    }

    #[test]
    fn lyapunov_matches_kronecker_oracle_on_random_systems() {
        let mut rng = StdRng::seed_from_u64(42);
        for trial in 0..40 {
            let n = 2 + trial % 3;
            // Hurwitz by construction: shift a random matrix left of its
            // spectral radius estimate (Gershgorin bound).
            let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let shift: f64 = a.iter().map(|v: &f64| v.abs()).sum::<f64>() + 0.5;
            for i in 0..n {
                a[(i, i)] -= shift;
            }
            let v = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let w = &v * v.transpose();

            let p = solve_lyapunov(&a, &w).unwrap();

            // Independent oracle: assemble and solve the vectorized system
            // with dense full-pivot LU, no balancing, separate code path.
            let m = n * n;
            let mut kmat = DMatrix::zeros(m, m);
            let mut rhs = DVector::zeros(m);
            for i in 0..n {
                for j in 0..n {
                    let r = i + j * n;
                    for l in 0..n {
                        kmat[(r, l + j * n)] += a[(i, l)];
                        kmat[(r, i + l * n)] += a[(j, l)];
                    }
                    rhs[r] = -w[(i, j)];
                }
            }
            let sol = kmat.full_piv_lu().solve(&rhs).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let expect = sol[i + j * n];
                    assert!(
                        (p[(i, j)] - expect).abs() <= 1e-9 * p.norm().max(1e-300),
                        "trial {trial} entry ({i},{j}): {} vs {}",
                        p[(i, j)],
                        expect
                    );
                }
            }
        }
    }

    #[test]
    fn is_hurwitz_examples() {
        let omega_r: f64 = 6.283e3;
        let damped = DMatrix::from_row_slice(
            2,
            2,
            &[0.0, 1.0, -omega_r * omega_r, -2.0 * 0.01 * omega_r],
        );
        assert!(is_hurwitz(&damped));
        let undamped =
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -omega_r * omega_r, 0.0]);
        assert!(!is_hurwitz(&undamped));
        assert!(!is_hurwitz(&DMatrix::from_element(1, 1, 1.0)));
    }

    #[test]
    fn care_solution_invariant_under_diagonal_rescaling() {
        let mut rng = StdRng::seed_from_u64(5);
        for trial in 0..30 {
            let a = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-2.0..2.0));
            let g = DMatrix::from_fn(2, 1, |_, _| rng.random_range(-1.0..1.0));
            let h = DMatrix::from_fn(1, 2, |_, _| rng.random_range(-1.0..1.0));
            let q = &g * g.transpose() + DMatrix::identity(2, 2) * 0.1;
            let m = h.transpose() * &h;
            let prob = CareProblem {
                a: a.clone(),
                q_const: q.clone(),
                m_quad: m.clone(),
            };
            let x = solve_care(&prob).unwrap().x;

            let t = DMatrix::from_diagonal(&DVector::from_vec(vec![
                2f64.powi(rng.random_range(-6..6)),
                2f64.powi(rng.random_range(-6..6)),
            ]));
            let t_inv = t.clone().try_inverse().unwrap();
            let prob_t = CareProblem {
                a: &t * &a * &t_inv,
                q_const: &t * &q * t.transpose(),
                m_quad: t_inv.transpose() * &m * &t_inv,
            };
            let x_t = solve_care(&prob_t).unwrap().x;
            let x_back = &t_inv * &x_t * t_inv.transpose();
            for i in 0..2 {
                for j in 0..2 {
                    assert!(
                        (x_back[(i, j)] - x[(i, j)]).abs()
                            <= 1e-8 * x[(i, j)].abs().max(1e-30),
                        "trial {trial} entry ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn care_monotone_in_constant_term() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..30 {
            let a = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-2.0..2.0));
            let h = DMatrix::from_fn(1, 2, |_, _| rng.random_range(-1.0..1.0));
            let m = h.transpose() * &h + DMatrix::identity(2, 2) * 1e-3;
            let va = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
            let vb = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
            let qa = &va * va.transpose();
            let qb = &qa + &vb * vb.transpose();
            let xa = solve_care(&CareProblem {
                a: a.clone(),
                q_const: qa,
                m_quad: m.clone(),
            })
            .unwrap()
            .x;
            let xb = solve_care(&CareProblem {
                a,
                q_const: qb,
                m_quad: m,
            })
            .unwrap()
            .x;
            let diff = &xb - &xa;
            let min_eig = diff
                .symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert!(min_eig >= -1e-10 * xb.norm(), "min eig {min_eig}");
        }
    }
}
