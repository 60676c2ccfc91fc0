//! Normalization constants of the fractional and logarithmic Laplacians.
//!
//! All functions are pure; `dim` is the space dimension N ≥ 1 and `s` the
//! order.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{digamma, gamma, ln_gamma, EULER_GAMMA};

fn check_dim(dim: usize) -> Result<()> {
    if dim < 1 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    Ok(())
}

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid(format!("order s = {s} outside (0,1)")));
    }
    Ok(())
}

/// C_{N,s} = s 4^s Γ(N/2+s) / (π^{N/2} Γ(1-s)).
pub fn frac_constant(dim: usize, s: f64) -> Result<f64> {
    check_dim(dim)?;
    check_order(s)?;
    let h = dim as f64 / 2.0;
    Ok(s * 4f64.powf(s) * gamma(h + s) / (PI.powf(h) * gamma(1.0 - s)))
}

/// Constants of the logarithmic Laplacian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogConstants {
    /// C_N = π^{-N/2} Γ(N/2)
    pub c_log: f64,
    /// ρ_N = 2 ln 2 + ψ(N/2) − γ
    pub rho: f64,
    /// ω_{N−1} = 2π^{N/2}/Γ(N/2), the surface measure of the unit sphere
    pub omega: f64,
}

pub fn log_constants(dim: usize) -> Result<LogConstants> {
    check_dim(dim)?;
    let h = dim as f64 / 2.0;
    let g = gamma(h);
    let ph = PI.powf(h);
    Ok(LogConstants {
        c_log: g / ph,
        rho: 2.0 * 2f64.ln() + digamma(h) - EULER_GAMMA,
        omega: 2.0 * ph / g,
    })
}

/// κ_{N,s} = s Γ(N/2−s) / (4^s π^{N/2} Γ(1+s)), the Riesz kernel constant.
pub fn riesz_constant(dim: usize, s: f64) -> Result<f64> {
    check_dim(dim)?;
    let h = dim as f64 / 2.0;
    if !(s > 0.0 && s < h) {
        return Err(Error::invalid(format!(
            "Riesz kernel needs 0 < s < N/2 (got s = {s}, N = {dim})"
        )));
    }
    Ok(s * gamma(h - s) / (4f64.powf(s) * PI.powf(h) * gamma(1.0 + s)))
}

/// κ_N = (2π)^{-N} ∫_{B_1} ln²|ξ| dξ = (2π)^{-N} ω_{N−1} · 2/N³.
pub fn kappa_form(dim: usize) -> Result<f64> {
    let lc = log_constants(dim)?;
    let n = dim as f64;
    Ok((2.0 * PI).powf(-n) * lc.omega * 2.0 / (n * n * n))
}

/// τ(s) − 1 where τ(s) = C_{N,s}/(s C_N) = 4^s Γ(N/2+s)/(Γ(N/2)Γ(1−s)),
/// evaluated without cancellation for small s.
pub fn tau_minus_one(dim: usize, s: f64) -> Result<f64> {
    check_dim(dim)?;
    check_order(s)?;
    let h = dim as f64 / 2.0;
    let log_tau = s * 4f64.ln() + ln_gamma(h + s) - ln_gamma(h) - ln_gamma(1.0 - s);
    Ok(log_tau.exp_m1())
}

/// Grid maximum of |1 − C_{N,s}/(C_N s)| / s, an operational stand-in for the
/// nonconstructive constant D_N. Grid points must lie in (0, 1/4].
pub fn estimate_d_bound(dim: usize, s_grid: &[f64]) -> Result<f64> {
    if s_grid.is_empty() {
        return Err(Error::invalid("empty s grid"));
    }
    let mut best = 0.0f64;
    for &s in s_grid {
        if !(s > 0.0 && s <= 0.25) {
            return Err(Error::invalid(format!("grid order {s} outside (0, 1/4]")));
        }
        best = best.max(d_ratio(dim, s)?);
    }
    Ok(best)
}

/// |1 − τ(s)| / s for a single order.
pub fn d_ratio(dim: usize, s: f64) -> Result<f64> {
    Ok(tau_minus_one(dim, s)?.abs() / s)
}

/// Default grid used for `ConstantSet::d_bound`: 1/4 · 2^{-k}, k = 0..=20.
pub fn default_d_grid() -> Vec<f64> {
    (0..=20).map(|k| 0.25 * 0.5f64.powi(k)).collect()
}

/// Lower bound 2^{2s} Γ(1+s) Γ(N/2+s) / Γ(N/2) for λ_{1,s}(B_1).
pub fn ball_eigenvalue_bound(dim: usize, s: f64) -> Result<f64> {
    check_dim(dim)?;
    check_order(s)?;
    let h = dim as f64 / 2.0;
    Ok(4f64.powf(s) * gamma(1.0 + s) * gamma(h + s) / gamma(h))
}

/// r_0 = 2 exp((ψ(N/2) − γ)/2), the radius at which the logarithmic
/// first eigenvalue of a ball changes sign.
pub fn zero_radius(dim: usize) -> Result<f64> {
    check_dim(dim)?;
    let h = dim as f64 / 2.0;
    Ok(2.0 * (0.5 * (digamma(h) - EULER_GAMMA)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantSet {
    #[serde(skip)]
    pub dim: usize,
    #[serde(skip)]
    pub s: f64,
    pub c_frac: f64,
    pub c_log: f64,
    pub rho: f64,
    pub omega: f64,
    /// `None` when s ≥ N/2 (kernel undefined)
    pub kappa_riesz: Option<f64>,
    pub kappa_form: f64,
    #[serde(skip)]
    pub d_bound: f64,
}

impl ConstantSet {
    pub fn new(dim: usize, s: f64) -> Result<Self> {
        let lc = log_constants(dim)?;
        Ok(Self {
            dim,
            s,
            c_frac: frac_constant(dim, s)?,
            c_log: lc.c_log,
            rho: lc.rho,
            omega: lc.omega,
            kappa_riesz: riesz_constant(dim, s).ok(),
            kappa_form: kappa_form(dim)?,
            d_bound: estimate_d_bound(dim, &default_d_grid())?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_values() {
        assert!((frac_constant(1, 0.5).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!((frac_constant(2, 0.5).unwrap() - 0.5 / PI).abs() < 1e-15);
        assert!((riesz_constant(1, 0.25).unwrap() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!((riesz_constant(2, 0.5).unwrap() - 0.5 / PI).abs() < 1e-15);

        let one = log_constants(1).unwrap();
        assert!((one.c_log - 1.0).abs() < 1e-15);
        assert!((one.omega - 2.0).abs() < 1e-15);
        assert!((one.rho + 2.0 * EULER_GAMMA).abs() < 1e-14);

        let two = log_constants(2).unwrap();
        assert!((two.c_log - 1.0 / PI).abs() < 1e-15);
        assert!((two.rho - (2.0 * 2f64.ln() - 2.0 * EULER_GAMMA)).abs() < 1e-14);

        assert!((kappa_form(1).unwrap() - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn omega_times_c_log_is_two() {
        for dim in 1..=5 {
            let lc = log_constants(dim).unwrap();
            assert!((lc.omega * lc.c_log - 2.0).abs() < 1e-14, "N = {dim}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(frac_constant(0, 0.5).is_err());
        assert!(frac_constant(1, 0.0).is_err());
        assert!(frac_constant(1, 1.0).is_err());
        assert!(riesz_constant(1, 0.5).is_err());
        assert!(log_constants(0).is_err());
        assert!(estimate_d_bound(1, &[]).is_err());
        assert!(estimate_d_bound(1, &[0.3]).is_err());
    }

    #[test]
    fn riesz_constant_is_linear_in_small_s() {
        let a = riesz_constant(3, 1e-4).unwrap() / 1e-4;
        let b = riesz_constant(3, 1e-5).unwrap() / 1e-5;
        assert!((a - b).abs() / b < 1e-3);
    }

    #[test]
    fn bound_values() {
        assert!((ball_eigenvalue_bound(1, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((zero_radius(1).unwrap() - (-EULER_GAMMA).exp()).abs() < 1e-15);
    }

    #[test]
    fn d_bound_is_nonnegative_and_finite() {
        for dim in 1..=4 {
            let d = estimate_d_bound(dim, &[0.25]).unwrap();
            assert!(d.is_finite() && d >= 0.0);
        }
    }
}
