//! Quadratic forms E_s and E_L on the line, the δ-decomposition of E_s and
//! the expansion inequalities.
//!
//! With y = x + z every double integral reduces to a single integral over the
//! lag z of one of
//!
//! ```text
//! Q(z) = ∫ (u(x+z) − u(x)) (v(x+z) − v(x)) dx,   P(z) = ∫ u(x) v(x+z) dx,
//! ```
//!
//! which are themselves computed by adaptive quadrature. Q(z) = 2⟨u,v⟩ − P(z) − P(−z).

use crate::constants::{frac_constant, kappa_form, log_constants};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_breaks, Estimate, Quad};
use crate::testlab::{BumpKind, Field, TestFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct FormValue {
    pub value: f64,
    /// named sub-integrals; `value` is their sum
    pub parts: Vec<(&'static str, f64)>,
    pub est_error: f64,
}

impl FormValue {
    fn from_parts(parts: Vec<(&'static str, f64)>, est_error: f64) -> Self {
        Self {
            value: parts.iter().map(|p| p.1).sum(),
            parts,
            est_error,
        }
    }

    pub fn part(&self, name: &str) -> Option<f64> {
        self.parts.iter().find(|p| p.0 == name).map(|p| p.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSplit {
    pub delta: f64,
    /// C ∫_{|z|<δ} (…) the truncated energy E_s^δ
    pub e_near: f64,
    /// κ_{δ,s} = C ω δ^{−2s}/(2s)
    pub kappa_mass: f64,
    /// ⟨k_{δ,s} * u, v⟩
    pub conv_term: f64,
    /// ⟨u, v⟩
    pub l2: f64,
}

impl DeltaSplit {
    pub fn reconstruct(&self) -> f64 {
        self.e_near + self.kappa_mass * self.l2 - self.conv_term
    }
}

const OUTER_BUDGET: usize = 8000;

fn inner_quad(abs_tol: f64) -> Quad {
    Quad {
        abs_tol,
        rel_tol: 1e-13,
        max_intervals: 2000,
    }
}

/// Pair of 1D fields with their support hull and kinks.
struct Pair<'a, U: Field + ?Sized, V: Field + ?Sized> {
    u: &'a U,
    v: &'a V,
    u_box: (f64, f64),
    v_box: (f64, f64),
    u_kinks: Vec<f64>,
    v_kinks: Vec<f64>,
    /// absolute floor for the inner integrals, 1e-13 ‖u‖‖v‖
    inner_abs: f64,
}

fn support_1d<F: Field + ?Sized>(f: &F) -> Result<(f64, f64)> {
    if f.dim() != 1 {
        return Err(Error::Unsupported(format!("forms are implemented for N = 1, got N = {}", f.dim())));
    }
    let b = f
        .support_box()
        .ok_or_else(|| Error::Unsupported("forms need compactly supported functions".into()))?;
    Ok((b.lo[0], b.hi[0]))
}

impl<'a, U: Field + ?Sized, V: Field + ?Sized> Pair<'a, U, V> {
    fn new(u: &'a U, v: &'a V) -> Result<Self> {
        let u_box = support_1d(u)?;
        let v_box = support_1d(v)?;
        let mut u_kinks = u.kinks();
        u_kinks.extend([u_box.0, u_box.1]);
        let mut v_kinks = v.kinks();
        v_kinks.extend([v_box.0, v_box.1]);
        let mut pair = Self {
            u,
            v,
            u_box,
            v_box,
            u_kinks,
            v_kinks,
            inner_abs: 0.0,
        };
        let nu = pair.self_l2(u, u_box, &pair.u_kinks)?;
        let nv = pair.self_l2(v, v_box, &pair.v_kinks)?;
        pair.inner_abs = (1e-13 * (nu * nv).sqrt()).max(f64::MIN_POSITIVE);
        Ok(pair)
    }

    fn self_l2<F: Field + ?Sized>(&self, f: &F, bx: (f64, f64), kinks: &[f64]) -> Result<f64> {
        let pts = Self::points(bx.0, bx.1, kinks.iter().copied());
        let q = Quad {
            abs_tol: 0.0,
            rel_tol: 1e-8,
            max_intervals: 2000,
        };
        Ok(integrate_breaks(|x| f.value(&[x]).powi(2), &pts, &q)?.value)
    }

    fn points(lo: f64, hi: f64, extra: impl Iterator<Item = f64>) -> Vec<f64> {
        let mut p: Vec<f64> = extra.filter(|x| *x > lo && *x < hi).collect();
        p.push(lo);
        p.push(hi);
        p.sort_by(f64::total_cmp);
        p.dedup();
        p
    }

    fn l2(&self) -> Result<f64> {
        let lo = self.u_box.0.max(self.v_box.0);
        let hi = self.u_box.1.min(self.v_box.1);
        if hi <= lo {
            return Ok(0.0);
        }
        let pts = Self::points(lo, hi, self.u_kinks.iter().chain(&self.v_kinks).copied());
        Ok(integrate_breaks(|x| self.u.value(&[x]) * self.v.value(&[x]), &pts, &inner_quad(self.inner_abs))?.value)
    }

    /// P(z) = ∫ u(x) v(x+z) dx
    fn p(&self, z: f64) -> f64 {
        let lo = self.u_box.0.max(self.v_box.0 - z);
        let hi = self.u_box.1.min(self.v_box.1 - z);
        if hi <= lo {
            return 0.0;
        }
        let pts = Self::points(lo, hi, self.u_kinks.iter().copied().chain(self.v_kinks.iter().map(|k| k - z)));
        integrate_breaks(|x| self.u.value(&[x]) * self.v.value(&[x + z]), &pts, &inner_quad(self.inner_abs))
            .map(|e| e.value)
            .unwrap_or(f64::NAN)
    }

    /// Q(z) = ∫ (u(x+z) − u(x)) (v(x+z) − v(x)) dx
    fn q(&self, z: f64) -> f64 {
        let lo = self.u_box.0.min(self.v_box.0) - z;
        let hi = self.u_box.1.max(self.v_box.1);
        let all = self.u_kinks.iter().chain(&self.v_kinks).copied();
        let shifted = self.u_kinks.iter().chain(&self.v_kinks).map(|k| k - z);
        let pts = Self::points(lo, hi, all.chain(shifted));
        integrate_breaks(
            |x| {
                let du = self.u.value(&[x + z]) - self.u.value(&[x]);
                let dv = self.v.value(&[x + z]) - self.v.value(&[x]);
                du * dv
            },
            &pts,
            &inner_quad(self.inner_abs),
        )
        .map(|e| e.value)
        .unwrap_or(f64::NAN)
    }

    /// Lag beyond which P(±z) vanishes.
    fn reach(&self) -> f64 {
        (self.v_box.0 - self.u_box.1).abs().max((self.v_box.1 - self.u_box.0).abs())
    }

    /// Lags where Q or P lose smoothness.
    fn lag_breaks(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for a in self.u_kinks.iter().chain(&self.v_kinks) {
            for b in self.u_kinks.iter().chain(&self.v_kinks) {
                let d = (a - b).abs();
                if d > 0.0 {
                    out.push(d);
                }
            }
        }
        out
    }

    /// Small-lag cut below which Q is replaced by Q(z0)(z/z0)^α.
    fn origin_cut(&self) -> f64 {
        let first = self.lag_breaks().into_iter().fold(self.reach(), f64::min);
        1e-4 * first.min(1.0)
    }

    fn origin_model(&self, z0: f64) -> (f64, f64) {
        let q0 = self.q(z0);
        let q1 = self.q(0.5 * z0);
        let alpha = if q0 * q1 > 0.0 {
            (q0 / q1).log2().clamp(1.0, 2.0)
        } else {
            2.0
        };
        (q0, alpha)
    }

    /// ∫_lo^hi g(z) q(z) dz with lag breakpoints.
    fn integrate_q<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64, abs_tol: f64) -> Result<Estimate> {
        self.integrate_lag(|z| g(z) * self.q(z), lo, hi, abs_tol)
    }

    fn integrate_lag<G: Fn(f64) -> f64>(&self, h: G, lo: f64, hi: f64, abs_tol: f64) -> Result<Estimate> {
        if hi <= lo {
            return Ok(Estimate::default());
        }
        let pts = Self::points(lo, hi, self.lag_breaks().into_iter());
        let q = Quad {
            abs_tol,
            rel_tol: 0.0,
            max_intervals: OUTER_BUDGET,
        };
        let est = integrate_breaks(h, &pts, &q)?;
        if !est.value.is_finite() {
            return Err(Error::Quadrature {
                context: "form: inner integral failed".into(),
                achieved: f64::INFINITY,
                requested: abs_tol,
            });
        }
        Ok(est)
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// E_s(u,v) = C_{1,s} ∫_0^∞ z^{−1−2s} Q(z) dz.
///
/// Parts: `near` (z < 1), `far` (1 ≤ z ≤ Z) and `mass`, the closed-form tail
/// 2⟨u,v⟩ C Z^{−2s}/(2s) beyond the reach Z of the supports.
pub fn energy_s<U: Field + ?Sized, V: Field + ?Sized>(u: &U, v: &V, s: f64, tol: f64) -> Result<FormValue> {
    check_tol(tol)?;
    let c = frac_constant(1, s)?;
    let pair = Pair::new(u, v)?;
    let reach = pair.reach().max(1.0);
    let l2 = pair.l2()?;
    let z0 = pair.origin_cut();
    let (q0, alpha) = pair.origin_model(z0);
    let kernel = |z: f64| z.powf(-1.0 - 2.0 * s);
    let near = pair.integrate_q(kernel, z0, 1.0, 0.25 * tol / c)?;
    let far = pair.integrate_q(kernel, 1.0, reach, 0.25 * tol / c)?;
    let origin = q0 * z0.powf(-2.0 * s) / (alpha - 2.0 * s);
    let tail = 2.0 * l2 * reach.powf(-2.0 * s) / (2.0 * s);
    Ok(FormValue::from_parts(
        vec![
            ("near", c * (origin + near.value)),
            ("far", c * far.value),
            ("mass", c * tail),
        ],
        c * (near.error + far.error),
    ))
}

/// E_L(u,v) = ⟨u,v⟩_{H^0_0} − C_1 ∬_{|x−y|≥1} u(x)v(y)/|x−y| + ρ_1 ⟨u,v⟩.
///
/// Parts: `near` (the H^0_0 product), `far` (with its minus sign) and `mass`.
pub fn energy_log<U: Field + ?Sized, V: Field + ?Sized>(u: &U, v: &V, tol: f64) -> Result<FormValue> {
    check_tol(tol)?;
    let lc = log_constants(1)?;
    let pair = Pair::new(u, v)?;
    let l2 = pair.l2()?;
    let z0 = pair.origin_cut().min(0.5);
    let (q0, alpha) = pair.origin_model(z0);
    let near = pair.integrate_q(|z| 1.0 / z, z0, 1.0, 0.25 * tol)?;
    let reach = pair.reach();
    let far = pair.integrate_lag(|z| (pair.p(z) + pair.p(-z)) / z, 1.0, reach, 0.25 * tol)?;
    Ok(FormValue::from_parts(
        vec![
            ("near", lc.c_log * (q0 / alpha + near.value)),
            ("far", -lc.c_log * far.value),
            ("mass", lc.rho * l2),
        ],
        lc.c_log * (near.error + far.error),
    ))
}

/// E_s(u,v) = E_s^δ(u,v) + κ_{δ,s}⟨u,v⟩ − ⟨k_{δ,s} * u, v⟩.
pub fn delta_split<U: Field + ?Sized, V: Field + ?Sized>(
    u: &U,
    v: &V,
    s: f64,
    delta: f64,
    tol: f64,
) -> Result<DeltaSplit> {
    check_tol(tol)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta = {delta} outside (0,1)")));
    }
    let c = frac_constant(1, s)?;
    let pair = Pair::new(u, v)?;
    let l2 = pair.l2()?;
    let z0 = pair.origin_cut().min(0.5 * delta);
    let (q0, alpha) = pair.origin_model(z0);
    let kernel = |z: f64| z.powf(-1.0 - 2.0 * s);
    let near = pair.integrate_q(kernel, z0, delta, 0.25 * tol / c)?;
    let conv = pair.integrate_lag(|z| kernel(z) * (pair.p(z) + pair.p(-z)), delta, pair.reach(), 0.25 * tol / c)?;
    Ok(DeltaSplit {
        delta,
        e_near: c * (q0 * z0.powf(-2.0 * s) / (alpha - 2.0 * s) + near.value),
        kappa_mass: delta_mass(s, delta)?,
        conv_term: c * conv.value,
        l2,
    })
}

/// κ_{δ,s} = C_{1,s} ω_0 δ^{−2s}/(2s) with ω_0 = 2.
pub fn delta_mass(s: f64, delta: f64) -> Result<f64> {
    Ok(frac_constant(1, s)? * 2.0 * delta.powf(-2.0 * s) / (2.0 * s))
}

/// Slacks of the first and second order expansion bounds of E_s(u,u)
/// around s = 0:
///
/// ```text
/// slack1 = 2s B − |E_s(u,u) − ‖u‖²|
/// slack2 = 4s² B − |E_s(u,u) − ‖u‖² − s E_L(u,u)|,   B = κ_1‖u‖²_{L¹} + ‖Δu‖²_{L²}.
/// ```
pub fn expansion_residuals(u: &TestFunction, s: f64) -> Result<(f64, f64)> {
    if u.dim() != 1 {
        return Err(Error::Unsupported("expansion residuals are implemented for N = 1".into()));
    }
    if u.kind == BumpKind::Hat {
        return Err(Error::invalid("expansion bounds need a C² function"));
    }
    if u.amplitude == 0.0 {
        return Ok((0.0, 0.0));
    }
    let tol = 1e-12;
    let (lo, hi) = support_1d(u)?;
    let q = inner_quad(1e-16);
    let l1 = integrate(|x| u.value(&[x]).abs(), lo, hi, &q)?.value;
    let lap2 = integrate(|x| u.laplacian(&[x]).powi(2), lo, hi, &q)?.value;
    let l2 = integrate(|x| u.value(&[x]).powi(2), lo, hi, &q)?.value;
    let bound = kappa_form(1)? * l1 * l1 + lap2;
    let es = energy_s(u, u, s, tol)?.value;
    let el = energy_log(u, u, tol)?.value;
    let slack1 = 2.0 * s * bound - (es - l2).abs();
    let slack2 = 4.0 * s * s * bound - (es - l2 - s * el).abs();
    Ok((slack1, slack2))
}

/// Minimum slack over `r_samples` of
///
/// ```text
/// |r^{2s} − 1|/s ≤ 2(|ln r| 1_{r≤1} + r⁴ 1_{r>1}),
/// |(r^{2s} − 1)/s − 2 ln r| ≤ 4s(ln² r 1_{r≤1} + r⁴ 1_{r>1}).
/// ```
pub fn elementary_bounds_check(r_samples: &[f64], s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid(format!("order s = {s} outside (0,1)")));
    }
    let mut worst = f64::INFINITY;
    for &r in r_samples {
        let (a, b) = elementary_slacks(r, s)?;
        worst = worst.min(a).min(b);
    }
    Ok(worst)
}

/// Slacks of the two elementary inequalities at a single r.
pub fn elementary_slacks(r: f64, s: f64) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("sample r = {r} must be positive")));
    }
    let ln = r.ln();
    let quot = (2.0 * s * ln).exp_m1() / s;
    let (b1, b2) = if r <= 1.0 {
        (2.0 * ln.abs(), 4.0 * s * ln * ln)
    } else {
        (2.0 * r.powi(4), 4.0 * s * r.powi(4))
    };
    Ok((b1 - quot.abs(), b2 - (quot - 2.0 * ln).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;
    use crate::testlab::make_bump;
    use std::f64::consts::{E, PI};

    fn bump(kind: BumpKind, c: f64, r: f64, a: f64) -> TestFunction {
        make_bump(kind, &[c], r, a).unwrap()
    }

    /// (1/π) ∫_0^Ξ σ(ξ) Û(ξ)² dξ for a bump about its own center.
    fn fourier_energy(u: &TestFunction, sigma: impl Fn(f64) -> f64, cutoff: f64) -> f64 {
        let gl = GaussLegendre::new(20);
        let mut acc = 0.0;
        let mut hi = 1.0f64;
        for _ in 0..60 {
            acc += gl.integrate(|x| sigma(x) * u.fourier_even(x).unwrap().powi(2), 0.5 * hi, hi);
            hi *= 0.5;
        }
        let panels = (cutoff - 1.0).ceil() as usize;
        for p in 0..panels {
            let a = 1.0 + p as f64;
            acc += gl.integrate(|x| sigma(x) * u.fourier_even(x).unwrap().powi(2), a, a + 1.0);
        }
        acc / PI
    }

    #[test]
    fn zero_function_gives_zero_forms() {
        let z = bump(BumpKind::Smooth, 0.0, 1.0, 0.0);
        let u = bump(BumpKind::Smooth, 0.3, 0.5, 1.0);
        assert_eq!(energy_s(&z, &u, 0.3, 1e-10).unwrap().value, 0.0);
        assert_eq!(energy_log(&z, &u, 1e-10).unwrap().value, 0.0);
        assert_eq!(expansion_residuals(&z, 0.1).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn fractional_energy_matches_fourier_side() {
        let u = bump(BumpKind::PolynomialC2, 0.2, 0.9, 1.0);
        for s in [0.1, 0.25, 0.6] {
            let spatial = energy_s(&u, &u, s, 1e-11).unwrap();
            // |Û|² ≤ (110/(r³ξ⁴))², tail below 1e-10 well before ξ = 400
            let fourier = fourier_energy(&u, |x| x.powf(2.0 * s), 400.0);
            assert!((spatial.value - fourier).abs() < 1e-8, "s={s}: {} vs {fourier}", spatial.value);
            assert!(spatial.value >= 0.0);
        }
    }

    #[test]
    fn log_energy_matches_fourier_side() {
        let u = bump(BumpKind::PolynomialC2, 0.0, 1.3, 0.7);
        let spatial = energy_log(&u, &u, 1e-11).unwrap();
        let fourier = fourier_energy(&u, |x| 2.0 * x.ln(), 400.0);
        assert!((spatial.value - fourier).abs() < 1e-8, "{} vs {fourier}", spatial.value);
        let parts: f64 = spatial.parts.iter().map(|p| p.1).sum();
        assert!((parts - spatial.value).abs() < 1e-12);
    }

    #[test]
    fn separated_supports_give_negative_log_form() {
        let u = bump(BumpKind::Smooth, 0.0, 0.4, 1.0);
        let v = bump(BumpKind::Smooth, 2.0, 0.4, 1.0);
        let e = energy_log(&u, &v, 1e-11).unwrap();
        assert!(e.value < 0.0);
        assert!(e.part("near").unwrap().abs() < 1e-14);
        assert_eq!(e.part("mass").unwrap(), 0.0);
        assert!((e.value - e.part("far").unwrap()).abs() < 1e-14);
    }

    #[test]
    fn delta_mass_limit_and_kernel_mass() {
        // δ → 1, s = 1/2
        let k = delta_mass(0.5, 1.0 - 1e-15).unwrap();
        assert!((k - 2.0 / PI).abs() < 1e-12);
        // ∫_{|z|≥δ} C|z|^{−1−2s} dz = κ_{δ,s}
        let (s, delta) = (0.2f64, 0.3f64);
        let c = frac_constant(1, s).unwrap();
        // z = δ/t turns the tail into ∫_0^1 δ^{−2s} t^{2s−1} dt
        let tail = crate::quadrature::integrate_algebraic_left(|_| delta.powf(-2.0 * s), 0.0, 1.0, 2.0 * s, &Quad::abs(1e-14))
            .unwrap()
            .value;
        assert!((2.0 * c * tail - delta_mass(s, delta).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn delta_reconstruction() {
        let u = bump(BumpKind::Smooth, 0.1, 0.8, 1.0);
        let v = bump(BumpKind::PolynomialC2, -0.2, 0.6, 0.5);
        for s in [0.05, 0.25] {
            let e = energy_s(&u, &v, s, 1e-11).unwrap().value;
            for delta in [0.1, 0.3, 0.9] {
                let d = delta_split(&u, &v, s, delta, 1e-11).unwrap();
                assert!((d.reconstruct() - e).abs() < 1e-8, "s={s} δ={delta}");
            }
        }
    }

    #[test]
    fn expansion_bounds_hold() {
        let u = bump(BumpKind::Smooth, 0.0, 1.0, 1.0);
        for s in [0.25, 0.1, 0.05] {
            let (a, b) = expansion_residuals(&u, s).unwrap();
            assert!(a >= 0.0 && b >= 0.0, "s={s}: {a} {b}");
        }
        assert!(expansion_residuals(&bump(BumpKind::Hat, 0.0, 1.0, 1.0), 0.1).is_err());
    }

    #[test]
    fn elementary_bounds() {
        let (a, _) = elementary_slacks(1.0, 0.3).unwrap();
        assert_eq!(a, 0.0);
        let lhs = ((0.5f64).exp() - 1.0) / 0.25;
        assert!((lhs - 2.5949).abs() < 1e-4);
        let (a, _) = elementary_slacks(E, 0.25).unwrap();
        assert!((a - (2.0 * E.powi(4) - lhs)).abs() < 1e-12);
        assert!((2.0 * E.powi(4) - 109.196).abs() < 1e-3);
        let samples: Vec<f64> = (0..=600).map(|i| 10f64.powf(-3.0 + i as f64 / 100.0)).collect();
        for s in [0.01, 0.1, 0.5, 0.99] {
            assert!(elementary_bounds_check(&samples, s).unwrap() >= 0.0);
        }
        assert!(elementary_slacks(0.0, 0.1).is_err());
    }

    #[test]
    fn symmetry_and_bilinearity() {
        let u = bump(BumpKind::Smooth, 0.1, 0.8, 1.0);
        let v = bump(BumpKind::PolynomialC2, -0.2, 0.6, 0.5);
        let a = energy_s(&u, &v, 0.2, 1e-12).unwrap().value;
        let b = energy_s(&v, &u, 0.2, 1e-12).unwrap().value;
        assert!((a - b).abs() < 1e-10);
        let a = energy_log(&u, &v, 1e-12).unwrap().value;
        let b = energy_log(&v, &u, 1e-12).unwrap().value;
        assert!((a - b).abs() < 1e-10);
    }
}
