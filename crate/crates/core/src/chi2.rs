//! Chi-square reference distribution for the classical portmanteau test.

use serde::Serialize;
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::error::{Error, Result};

/// Upper tail `P(X > x)` for `X ~ chi2(dof)`.
pub fn chi2_sf(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(dof as f64 / 2.0, x / 2.0)
}

pub fn chi2_cdf(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_lr(dof as f64 / 2.0, x / 2.0)
}

/// The `(1 - alpha)` quantile, by bracketing and bisection to 1e-10.
pub fn chi2_critical_value(dof: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidLevel(alpha));
    }
    if dof == 0 {
        return Err(Error::InvalidArgument("chi-square needs dof >= 1".into()));
    }
    let mut lo = 0.0;
    let mut hi = dof as f64 + 10.0;
    while chi2_sf(hi, dof) > alpha {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-10 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if chi2_sf(mid, dof) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Chi2Decision {
    pub statistic: f64,
    pub dof: usize,
    pub alpha: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Rejects when `stat` exceeds the `(1 - alpha)` chi-square quantile.
pub fn chi2_test(stat: f64, dof: usize, alpha: f64) -> Result<Chi2Decision> {
    if !(stat >= 0.0) {
        return Err(Error::InvalidArgument(format!("statistic must be >= 0, got {stat}")));
    }
    let critical_value = chi2_critical_value(dof, alpha)?;
    Ok(Chi2Decision {
        statistic: stat,
        dof,
        alpha,
        critical_value,
        p_value: chi2_sf(stat, dof),
        reject: stat > critical_value,
    })
}
