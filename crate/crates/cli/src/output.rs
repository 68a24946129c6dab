//! CSV rendering. All numeric output uses lowercase scientific notation with
//! 9 significant digits, `.` decimal separator, `,` field separator and LF
//! line endings; the header row is always present.

use rpf_core::analysis::SweepResult;
use rpf_core::filters::EpsilonScanResult;
use rpf_core::validate::ValidationRow;

/// 9 significant digits, lowercase scientific.
pub fn fmt9(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn bode_csv(rows: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("omega_rad_s,freq_hz,mag_db,phase_deg\n");
    for (omega, mag_db, phase_deg) in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt9(*omega),
            fmt9(omega / std::f64::consts::TAU),
            fmt9(*mag_db),
            fmt9(*phase_deg)
        ));
    }
    out
}

pub struct DesignReport {
    pub p: [f64; 3],
    pub k: [f64; 2],
    pub epsilon_opt: f64,
    pub q_plus_opt: f64,
    pub qtilde: [f64; 3],
    pub boundary_flag: bool,
}

pub fn design_csv(r: &DesignReport) -> String {
    let mut out = String::from("quantity,value\n");
    for (name, v) in [
        ("kalman_p11", r.p[0]),
        ("kalman_p12", r.p[1]),
        ("kalman_p22", r.p[2]),
        ("kalman_k1", r.k[0]),
        ("kalman_k2", r.k[1]),
        ("epsilon_opt", r.epsilon_opt),
        ("q_plus_opt", r.q_plus_opt),
        ("qtilde11", r.qtilde[0]),
        ("qtilde12", r.qtilde[1]),
        ("qtilde22", r.qtilde[2]),
    ] {
        out.push_str(&format!("{name},{}\n", fmt9(v)));
    }
    out.push_str(&format!("epsilon_boundary_flag,{}\n", r.boundary_flag));
    out
}

pub fn eps_scan_csv(scan: &EpsilonScanResult) -> String {
    let mut out = String::from("epsilon,q_plus,feasible\n");
    for (eps, q) in &scan.grid {
        match q {
            Some(q) => out.push_str(&format!("{},{},true\n", fmt9(*eps), fmt9(*q))),
            None => out.push_str(&format!("{},,false\n", fmt9(*eps))),
        }
    }
    out
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from("delta,sigma2_robust,sigma2_kalman,sigma2_sql\n");
    let cell = |v: Option<f64>| v.map(fmt9).unwrap_or_else(|| "gap".into());
    for p in &result.points {
        let sql = if result.include_sql {
            cell(p.sigma2_sql)
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt9(p.delta),
            cell(p.sigma2_robust),
            cell(p.sigma2_kalman),
            sql
        ));
    }
    out
}

pub fn sweep_filename(result: &SweepResult) -> String {
    format!(
        "sweep_{}_mu1_{}_mu2_{}.csv",
        result.axis, result.mu1, result.mu2
    )
}

pub fn validate_csv(rows: &[ValidationRow]) -> String {
    let mut out = String::from(
        "point,mu1,mu2,delta1,delta2,sigma2_lyapunov,sigma2_hat,stderr,t_measure_s,seed,pass\n",
    );
    for r in rows {
        let opt = |v: f64| if v.is_finite() { fmt9(v) } else { String::new() };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.label.replace(',', ";"),
            r.mu1,
            r.mu2,
            r.delta1,
            r.delta2,
            fmt9(r.sigma2_lyapunov),
            opt(r.sigma2_hat),
            opt(r.stderr),
            fmt9(r.t_measure),
            r.seed,
            r.pass
        ));
    }
    out
}

pub fn validate_table(rows: &[ValidationRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<34} {:>14} {:>14} {:>10} {:>8}  result\n",
        "point", "sigma2_lyap", "sigma2_hat", "stderr", "T (s)"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<34} {:>14} {:>14} {:>10} {:>8.2}  {}{}\n",
            r.label,
            fmt9(r.sigma2_lyapunov),
            if r.sigma2_hat.is_finite() {
                fmt9(r.sigma2_hat)
            } else {
                "-".into()
            },
            if r.stderr.is_finite() {
                format!("{:.2e}", r.stderr)
            } else {
                "-".into()
            },
            r.t_measure,
            if r.pass { "pass" } else { "FAIL" },
            if r.note.is_empty() {
                String::new()
            } else {
                format!(" ({})", r.note)
            }
        ));
    }
    out
}
