//! Monte-Carlo validation of the steady-state algebra.
//!
//! Integrates the augmented plant/filter loop as a linear SDE with
//! Euler-Maruyama and estimates the stationary phase-error variance from one
//! long trajectory, with batch-means error bars. Runs are bit-reproducible:
//! the seed fully determines the ChaCha8 increment stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::analysis::{self, AugmentedSystem};
use crate::error::{Error, Result};
use crate::filters::FilterDesign;
use crate::model::ProcessModel;
use crate::solvers;

/// Number of batches used for the batch-means standard error.
pub const NUM_BATCHES: usize = 20;

/// Explicit-integration stability guard: `dt * rho(A_bar)` must stay below
/// this bound.
pub const DT_RHO_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    /// Integration step (s).
    pub dt: f64,
    /// Transient discarded before averaging (s).
    pub t_settle: f64,
    /// Averaging window (s).
    pub t_measure: f64,
    pub seed: u64,
    pub scheme: Scheme,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-8,
            t_settle: 0.05,
            t_measure: 0.5,
            seed: 1,
            scheme: Scheme::EulerMaruyama,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimResult {
    /// Time-averaged squared phase error (rad^2).
    pub sigma2_hat: f64,
    /// Batch-means standard error of `sigma2_hat` (rad^2).
    pub stderr: f64,
    /// Number of averaged samples.
    pub n_samples: u64,
    /// Seed the run was generated from.
    pub seed: u64,
}

/// Integrate the augmented loop and estimate the stationary error variance.
pub fn simulate(aug: &AugmentedSystem, cfg: &SimConfig) -> Result<SimResult> {
    if !(cfg.dt > 0.0) || !cfg.dt.is_finite() {
        return Err(Error::InvalidConfig(format!("dt must be positive, got {}", cfg.dt)));
    }
    if !(cfg.t_settle > 0.0) || !(cfg.t_measure > 0.0) {
        return Err(Error::InvalidConfig(
            "t_settle and t_measure must be positive".into(),
        ));
    }
    let rho = solvers::spectral_radius(&aug.a_bar);
    if cfg.dt * rho >= DT_RHO_LIMIT {
        return Err(Error::InvalidConfig(format!(
            "dt * rho(A_bar) = {:e} violates the {DT_RHO_LIMIT} stability guard",
            cfg.dt * rho
        )));
    }
    if !solvers::is_hurwitz(&aug.a_bar) {
        return Err(Error::UnstableLoop {
            max_re: solvers::max_real_part(&aug.a_bar),
        });
    }

    let n = aug.a_bar.nrows();
    let nw = aug.b_bar.ncols();
    if n != 4 || nw > 3 || nw == 0 {
        return Err(Error::InvalidInput(format!(
            "simulate expects the 4-state augmented loop with 1-3 noise channels, got {n} states, {nw} channels"
        )));
    }
    let n_settle = (cfg.t_settle / cfg.dt).ceil() as u64;
    let n_measure = (cfg.t_measure / cfg.dt).ceil() as u64;
    let batch_len = n_measure / NUM_BATCHES as u64;
    if batch_len == 0 {
        return Err(Error::InvalidConfig(format!(
            "t_measure must cover at least {NUM_BATCHES} steps"
        )));
    }

    // Fixed-size copies keep the hot loop free of allocation and bounds
    // checks; runs cover up to ~1e9 steps.
    let mut a = [[0.0f64; 4]; 4];
    let mut b = [[0.0f64; 3]; 4];
    for i in 0..4 {
        for (j, aij) in a[i].iter_mut().enumerate() {
            *aij = aug.a_bar[(i, j)];
        }
        for (k, bik) in b[i].iter_mut().take(nw).enumerate() {
            *bik = aug.b_bar[(i, k)];
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sqrt_dt = cfg.dt.sqrt();
    let dt = cfg.dt;
    let mut x = [0.0f64; 4];

    macro_rules! step {
        () => {{
            let mut dw = [0.0f64; 3];
            for w in dw.iter_mut().take(nw) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *w = z * sqrt_dt;
            }
            let mut xn = [0.0f64; 4];
            for i in 0..4 {
                let drift =
                    a[i][0] * x[0] + a[i][1] * x[1] + a[i][2] * x[2] + a[i][3] * x[3];
                let diff = b[i][0] * dw[0] + b[i][1] * dw[1] + b[i][2] * dw[2];
                xn[i] = x[i] + dt * drift + diff;
            }
            x = xn;
        }};
    }

    for _ in 0..n_settle {
        step!();
    }

    let mut batch_means = [0.0f64; NUM_BATCHES];
    for mean in batch_means.iter_mut() {
        let mut acc = 0.0f64;
        for _ in 0..batch_len {
            step!();
            let e = x[0] - x[2];
            acc += e * e;
        }
        *mean = acc / batch_len as f64;
    }

    let sigma2_hat = batch_means.iter().sum::<f64>() / NUM_BATCHES as f64;
    let var_between = batch_means
        .iter()
        .map(|m| (m - sigma2_hat) * (m - sigma2_hat))
        .sum::<f64>()
        / (NUM_BATCHES as f64 - 1.0);
    let stderr = (var_between / NUM_BATCHES as f64).sqrt();

    Ok(SimResult {
        sigma2_hat,
        stderr,
        n_samples: batch_len * NUM_BATCHES as u64,
        seed: cfg.seed,
    })
}

/// Convenience composition: augment a plant/filter pair and simulate it.
pub fn simulate_sweep_point(
    plant: &ProcessModel,
    filter: &FilterDesign,
    cfg: &SimConfig,
) -> Result<SimResult> {
    simulate(&analysis::augment(plant, filter)?, cfg)
}
