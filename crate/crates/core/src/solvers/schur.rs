//! Balancing, real Schur decomposition and invariant-subspace reordering
//! for small dense matrices.
//!
//! The Riccati and Lyapunov solvers work on Hamiltonian and closed-loop
//! matrices whose entries span many orders of magnitude (measurement-noise
//! inverses near 1e18 against unit process noise), so every eigenvalue
//! computation here goes through radix-2 diagonal balancing first. The
//! scaling factors are exact powers of two and introduce no rounding.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Parlett-Reinsch diagonal balancing with radix-2 scaling.
///
/// Returns `(d, b)` with `b = D^-1 A D` and `D = diag(d)`; each `d[i]` is a
/// power of two so the similarity is exact in floating point.
pub fn balance(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    const RADIX_SQ: f64 = 4.0;

    let n = a.nrows();
    let mut b = a.clone();
    let mut d = DVector::from_element(n, 1.0);
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut c: f64 = (0..n).filter(|&j| j != i).map(|j| b[(j, i)].abs()).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| b[(i, j)].abs()).sum();
            if c == 0.0 || r == 0.0 || !c.is_finite() || !r.is_finite() {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            while c < r / RADIX {
                f *= RADIX;
                c *= RADIX_SQ;
            }
            while c >= r * RADIX {
                f /= RADIX;
                c /= RADIX_SQ;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                d[i] *= f;
                for j in 0..n {
                    b[(i, j)] /= f;
                }
                for j in 0..n {
                    b[(j, i)] *= f;
                }
            }
        }
        if converged {
            return (d, b);
        }
    }
}

/// A real Schur factorization `A = Q T Q^T` with the diagonal block layout
/// of the quasi-triangular factor tracked explicitly.
pub struct RealSchur {
    pub q: DMatrix<f64>,
    pub t: DMatrix<f64>,
    /// Sizes (1 or 2) of the diagonal blocks of `t`, in order.
    pub blocks: Vec<usize>,
}

/// Eigenvalues `(re, im)` of a quasi-triangular matrix, read off its blocks.
pub fn quasi_eigenvalues(t: &DMatrix<f64>, blocks: &[usize]) -> Vec<(f64, f64)> {
    let mut eigs = Vec::with_capacity(t.nrows());
    let mut p = 0;
    for &bs in blocks {
        if bs == 1 {
            eigs.push((t[(p, p)], 0.0));
        } else {
            let half_tr = 0.5 * (t[(p, p)] + t[(p + 1, p + 1)]);
            let half_diff = 0.5 * (t[(p, p)] - t[(p + 1, p + 1)]);
            let disc = half_diff * half_diff + t[(p, p + 1)] * t[(p + 1, p)];
            if disc < 0.0 {
                let im = (-disc).sqrt();
                eigs.push((half_tr, im));
                eigs.push((half_tr, -im));
            } else {
                let root = disc.sqrt();
                eigs.push((half_tr + root, 0.0));
                eigs.push((half_tr - root, 0.0));
            }
        }
        p += bs;
    }
    eigs
}

/// Real Schur decomposition of a balanced matrix, with 2x2 blocks that have
/// real eigenvalues split into 1x1 blocks so every remaining 2x2 block is a
/// genuine complex-conjugate pair.
pub fn real_schur(a: &DMatrix<f64>) -> Result<RealSchur> {
    let n = a.nrows();
    // max_niter = 0 runs until convergence, matching what nalgebra's own
    // `Schur::new` and `complex_eigenvalues` do; bounded iteration counts
    // spuriously reject benign 4x4 Hamiltonians.
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Certification("real Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let mut s = RealSchur {
        q,
        t,
        blocks: Vec::new(),
    };

    // Deflate subdiagonal entries that are negligible against their
    // neighbouring diagonal, then record the block layout.
    let mut i = 0;
    while i < n {
        if i + 1 < n {
            let sub = s.t[(i + 1, i)];
            let scale = s.t[(i, i)].abs() + s.t[(i + 1, i + 1)].abs();
            if sub != 0.0 && sub.abs() > f64::EPSILON * scale {
                s.blocks.push(2);
                i += 2;
                continue;
            }
            s.t[(i + 1, i)] = 0.0;
        }
        s.blocks.push(1);
        i += 1;
    }

    // Split real-eigenvalue 2x2 blocks so selection can treat the two
    // eigenvalues independently.
    let mut bi = 0;
    let mut row = 0;
    while bi < s.blocks.len() {
        if s.blocks[bi] == 2 {
            let half_diff = 0.5 * (s.t[(row, row)] - s.t[(row + 1, row + 1)]);
            let disc = half_diff * half_diff + s.t[(row, row + 1)] * s.t[(row + 1, row)];
            if disc >= 0.0 {
                split_real_block(&mut s.q, &mut s.t, row);
                s.blocks[bi] = 1;
                s.blocks.insert(bi + 1, 1);
            }
        }
        row += s.blocks[bi];
        bi += 1;
    }
    Ok(s)
}

/// Triangularize a 2x2 diagonal block with real eigenvalues by an exact
/// Givens rotation, leaving two 1x1 blocks.
fn split_real_block(q: &mut DMatrix<f64>, t: &mut DMatrix<f64>, p: usize) {
    let (a, b) = (t[(p, p)], t[(p, p + 1)]);
    let (c, d) = (t[(p + 1, p)], t[(p + 1, p + 1)]);
    let half_tr = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let disc = (half_diff * half_diff + b * c).max(0.0);
    let root = disc.sqrt();
    let lambda = if half_tr >= 0.0 {
        half_tr + root
    } else {
        half_tr - root
    };
    // Eigenvector of [[a, b], [c, d]] for lambda; pick the better-scaled form.
    let (v0, v1) = if b.abs() + (lambda - a).abs() >= c.abs() + (lambda - d).abs() {
        (b, lambda - a)
    } else {
        (lambda - d, c)
    };
    let norm = (v0 * v0 + v1 * v1).sqrt();
    if norm == 0.0 {
        // Already triangular to working precision.
        t[(p + 1, p)] = 0.0;
        return;
    }
    let (cs, sn) = (v0 / norm, v1 / norm);
    let rot = DMatrix::from_row_slice(2, 2, &[cs, -sn, sn, cs]);
    apply_local_transform(q, t, p, &rot);
    t[(p + 1, p)] = 0.0;
}

/// Apply the orthogonal transform `g` to rows/columns `p..p+g.nrows()` of the
/// Schur pair: `T <- G^T T G`, `Q <- Q G`.
fn apply_local_transform(q: &mut DMatrix<f64>, t: &mut DMatrix<f64>, p: usize, g: &DMatrix<f64>) {
    let n = t.nrows();
    let k = g.nrows();
    let cols = {
        let view = t.view((0, p), (n, k)) * g;
        view
    };
    t.view_mut((0, p), (n, k)).copy_from(&cols);
    let rows = g.transpose() * t.view((p, 0), (k, n));
    t.view_mut((p, 0), (k, n)).copy_from(&rows);
    let qcols = q.view((0, p), (n, k)) * g;
    q.view_mut((0, p), (n, k)).copy_from(&qcols);
}

/// Swap the adjacent diagonal blocks of sizes `n1` and `n2` starting at row
/// `p` (direct swap via the Sylvester equation for the trailing block's
/// invariant subspace).
fn swap_adjacent(
    q: &mut DMatrix<f64>,
    t: &mut DMatrix<f64>,
    p: usize,
    n1: usize,
    n2: usize,
) -> Result<()> {
    let a11 = t.view((p, p), (n1, n1)).clone_owned();
    let a12 = t.view((p, p + n1), (n1, n2)).clone_owned();
    let a22 = t.view((p + n1, p + n1), (n2, n2)).clone_owned();

    // Solve A11 X - X A22 = -A12 (column-stacked Kronecker form).
    let m = n1 * n2;
    let mut k = DMatrix::zeros(m, m);
    let mut rhs = DVector::zeros(m);
    for j in 0..n2 {
        for i in 0..n1 {
            let r = i + j * n1;
            for l in 0..n1 {
                k[(r, l + j * n1)] += a11[(i, l)];
            }
            for l in 0..n2 {
                k[(r, i + l * n1)] -= a22[(l, j)];
            }
            rhs[r] = -a12[(i, j)];
        }
    }
    let x = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Certification("Schur block swap: singular Sylvester system".into()))?;

    // Columns of [X; I] span the invariant subspace of the trailing block;
    // a full QR turns that into an orthogonal transform bringing it first.
    let ns = n1 + n2;
    let mut m_sub = DMatrix::zeros(ns, n2);
    for j in 0..n2 {
        for i in 0..n1 {
            m_sub[(i, j)] = x[i + j * n1];
        }
        m_sub[(n1 + j, j)] = 1.0;
    }
    let g = qr_full_q(&m_sub);
    apply_local_transform(q, t, p, &g);

    // The swap must leave the lower-left block at roundoff level.
    let t_norm = t.norm();
    let mut spill: f64 = 0.0;
    for i in n2..ns {
        for j in 0..n2 {
            spill = spill.max(t[(p + i, p + j)].abs());
        }
    }
    if spill > 1e3 * f64::EPSILON * t_norm.max(1.0) {
        return Err(Error::Certification(format!(
            "Schur block swap rejected: residual {spill:e} against norm {t_norm:e}"
        )));
    }
    for i in n2..ns {
        for j in 0..n2 {
            t[(p + i, p + j)] = 0.0;
        }
    }
    Ok(())
}

/// Full orthogonal factor of the QR decomposition of a (possibly tall)
/// matrix, via Householder reflections.
fn qr_full_q(m: &DMatrix<f64>) -> DMatrix<f64> {
    let rows = m.nrows();
    let cols = m.ncols();
    let mut r = m.clone();
    let mut q = DMatrix::identity(rows, rows);
    for k in 0..cols.min(rows.saturating_sub(1)) {
        let mut norm_sq = 0.0;
        for i in k..rows {
            norm_sq += r[(i, k)] * r[(i, k)];
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[(k, k)] >= 0.0 { -norm } else { norm };
        let mut v = DVector::zeros(rows);
        v[k] = r[(k, k)] - alpha;
        for i in k + 1..rows {
            v[i] = r[(i, k)];
        }
        let v_norm_sq = v.dot(&v);
        if v_norm_sq == 0.0 {
            continue;
        }
        let beta = 2.0 / v_norm_sq;
        // r <- H r, q <- q H with H = I - beta v v^T
        let rv = r.transpose() * &v;
        r -= &v * (rv.transpose() * beta);
        let qv = &q * &v;
        q -= qv * (v.transpose() * beta);
    }
    q
}

/// Reorder a real Schur form so that all eigenvalues with negative real part
/// come first. Returns the number of leading (stable) rows.
pub fn reorder_stable_first(s: &mut RealSchur) -> Result<usize> {
    let block_re = |t: &DMatrix<f64>, start: usize, size: usize| -> f64 {
        if size == 1 {
            t[(start, start)]
        } else {
            0.5 * (t[(start, start)] + t[(start + 1, start + 1)])
        }
    };

    let mut stable: Vec<bool> = Vec::with_capacity(s.blocks.len());
    {
        let mut row = 0;
        for &bs in &s.blocks {
            stable.push(block_re(&s.t, row, bs) < 0.0);
            row += bs;
        }
    }

    let mut next = 0;
    while let Some(j) = (next..s.blocks.len()).find(|&j| stable[j]) {
        for k in (next..j).rev() {
            let p: usize = s.blocks[..k].iter().sum();
            swap_adjacent(&mut s.q, &mut s.t, p, s.blocks[k], s.blocks[k + 1])?;
            s.blocks.swap(k, k + 1);
            stable.swap(k, k + 1);
        }
        next += 1;
    }
    Ok(s.blocks[..next].iter().sum())
}
