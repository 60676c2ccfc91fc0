//! Pointwise evaluation of (−Δ)^s and L_Δ.
//!
//! Spatial evaluation integrates the symmetrized second difference in polar
//! form: for a field u and a point x,
//!
//! ```text
//! ∫_{ℝ^N} (u(x) − u(x+z)) g(|z|) dz = ∫_0^∞ S(ρ) g(ρ) ρ^{N−1} dρ,
//! S(ρ) = ½ ∫_{S^{N−1}} (2u(x) − u(x+ρθ) − u(x−ρθ)) dθ,
//! ```
//!
//! which removes the principal value for C² fields. Beyond the far edge of
//! the support only the `u(x)` term survives and is integrated in closed form.
//! Fourier evaluation (N = 1) integrates symbol · û against the inverse
//! transform up to a cutoff with a per-family tail bound.

use std::f64::consts::PI;

use crate::constants::{frac_constant, log_constants, riesz_constant, tau_minus_one};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_breaks, Estimate, GaussLegendre, Quad};
use crate::testlab::{BumpKind, Field, TestFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Spatial,
    Fourier,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Frac(f64),
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorEval {
    pub value: f64,
    pub est_error: f64,
    pub method: Method,
    pub order: Order,
}

const MAX_PANELS: usize = 20_000;

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Radial geometry of a field around a point: support distance range and
/// breakpoints for the radial integrals.
struct Radial<'a, F: Field + ?Sized> {
    u: &'a F,
    x: Vec<f64>,
    ux: f64,
    far: f64,
    breaks: Vec<f64>,
}

impl<'a, F: Field + ?Sized> Radial<'a, F> {
    fn new(u: &'a F, x: &[f64]) -> Result<Self> {
        if x.len() != u.dim() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, field lives in dimension {}",
                x.len(),
                u.dim()
            )));
        }
        if u.dim() > 2 {
            return Err(Error::Unsupported(format!("operator evaluation in dimension {}", u.dim())));
        }
        let bbox = u
            .support_box()
            .ok_or_else(|| Error::Unsupported("operator evaluation needs bounded support".into()))?;
        let (near, far) = bbox.distance_range(x);
        let mut breaks = vec![near, far];
        if u.dim() == 1 {
            breaks.extend(u.kinks().iter().map(|k| (k - x[0]).abs()));
        }
        breaks.retain(|b| *b > 0.0 && *b <= far);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        Ok(Self {
            u,
            x: x.to_vec(),
            ux: u.value(x),
            far,
            breaks,
        })
    }

    fn dim(&self) -> usize {
        self.x.len()
    }

    /// Surface measure ω_{N−1}.
    fn omega(&self) -> f64 {
        if self.dim() == 1 {
            2.0
        } else {
            2.0 * PI
        }
    }

    /// Breakpoints of [lo, hi] for radial integration.
    fn points(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut p = vec![lo];
        p.extend(self.breaks.iter().copied().filter(|b| *b > lo && *b < hi));
        p.push(hi);
        p
    }

    /// Radius below which S is replaced by the local model S(ρ0)(ρ/ρ0)^α;
    /// the second difference loses all digits to cancellation near ρ = 0.
    fn origin_cut(&self) -> f64 {
        let first = self.breaks.first().copied().unwrap_or(self.far);
        1e-4 * first.min(self.far).min(1.0)
    }

    /// (S(ρ0), α) with α fitted from S(ρ0) and S(ρ0/2), clamped to [1, 2].
    fn origin_model(&self, rho0: f64) -> (f64, f64) {
        let s0 = self.second_difference(rho0);
        let s1 = self.second_difference(0.5 * rho0);
        let alpha = if s0 * s1 > 0.0 {
            (s0 / s1).log2().clamp(1.0, 2.0)
        } else {
            2.0
        };
        (s0, alpha)
    }

    fn angular_quad(&self) -> Quad {
        let scale = self.ux.abs().max(1e-300);
        Quad {
            abs_tol: 1e-15 * scale.max(1.0),
            rel_tol: 1e-13,
            max_intervals: 2000,
        }
    }

    /// Half-sphere second difference S(ρ).
    fn second_difference(&self, rho: f64) -> f64 {
        let u = self.u;
        match self.dim() {
            1 => {
                let x = self.x[0];
                2.0 * self.ux - u.value(&[x + rho]) - u.value(&[x - rho])
            }
            _ => {
                let (x, y) = (self.x[0], self.x[1]);
                let q = self.angular_quad();
                integrate(
                    |t| {
                        let (c, s) = (rho * t.cos(), rho * t.sin());
                        2.0 * self.ux - u.value(&[x + c, y + s]) - u.value(&[x - c, y - s])
                    },
                    0.0,
                    PI,
                    &q,
                )
                .map(|e| e.value)
                .unwrap_or(f64::NAN)
            }
        }
    }

    /// Spherical integral P(ρ) = ∫_{S^{N−1}} u(x+ρθ) dθ.
    fn sphere_mean(&self, rho: f64) -> f64 {
        let u = self.u;
        match self.dim() {
            1 => {
                let x = self.x[0];
                u.value(&[x + rho]) + u.value(&[x - rho])
            }
            _ => {
                let (x, y) = (self.x[0], self.x[1]);
                let q = self.angular_quad();
                integrate(
                    |t| u.value(&[x + rho * t.cos(), y + rho * t.sin()]),
                    0.0,
                    2.0 * PI,
                    &q,
                )
                .map(|e| e.value)
                .unwrap_or(f64::NAN)
            }
        }
    }
}

fn nan_guard(est: Estimate, context: &str, requested: f64) -> Result<Estimate> {
    if est.value.is_finite() {
        Ok(est)
    } else {
        Err(Error::Quadrature {
            context: format!("{context}: inner angular integral failed"),
            achieved: f64::INFINITY,
            requested,
        })
    }
}

/// Pointwise (−Δ)^s u(x) by the symmetrized singular integral.
pub fn frac_lap_point<F: Field + ?Sized>(u: &F, s: f64, x: &[f64], tol: f64) -> Result<OperatorEval> {
    check_tol(tol)?;
    let c = frac_constant(u.dim(), s)?;
    let rad = Radial::new(u, x)?;
    let big_r = rad.far.max(f64::MIN_POSITIVE);
    let q = Quad {
        abs_tol: tol / c,
        rel_tol: 0.0,
        max_intervals: MAX_PANELS,
    };
    let rho0 = rad.origin_cut();
    let near = integrate_breaks(
        |rho| rad.second_difference(rho) * rho.powf(-1.0 - 2.0 * s),
        &rad.points(rho0, big_r),
        &q,
    )?;
    let near = nan_guard(near, "frac_lap_point", tol)?;
    let (s0, alpha) = rad.origin_model(rho0);
    let origin = s0 * rho0.powf(-2.0 * s) / (alpha - 2.0 * s);
    let tail = rad.omega() * rad.ux * big_r.powf(-2.0 * s) / (2.0 * s);
    Ok(OperatorEval {
        value: c * (origin + near.value + tail),
        est_error: c * near.error,
        method: Method::Spatial,
        order: Order::Frac(s),
    })
}

/// Pointwise L_Δ u(x): near part on B_1(x), far part beyond, plus ρ_N u(x).
pub fn log_lap_point<F: Field + ?Sized>(u: &F, x: &[f64], tol: f64) -> Result<OperatorEval> {
    check_tol(tol)?;
    let lc = log_constants(u.dim())?;
    let rad = Radial::new(u, x)?;
    let q = Quad {
        abs_tol: 0.5 * tol / lc.c_log,
        rel_tol: 0.0,
        max_intervals: MAX_PANELS,
    };
    let near_hi = rad.far.min(1.0);
    let rho0 = rad.origin_cut();
    let near = integrate_breaks(|rho| rad.second_difference(rho) / rho, &rad.points(rho0, near_hi), &q)?;
    let near = nan_guard(near, "log_lap_point", tol)?;
    let (s0, alpha) = rad.origin_model(rho0);
    let near = near + Estimate { value: s0 / alpha, error: 0.0 };
    // S(ρ) = ω u(x) on (far, 1) when the support ends inside the unit ball
    let gap = if rad.far < 1.0 {
        rad.omega() * rad.ux * (-(rad.far.max(f64::MIN_POSITIVE)).ln())
    } else {
        0.0
    };
    let far = if rad.far > 1.0 {
        nan_guard(
            integrate_breaks(|rho| rad.sphere_mean(rho) / rho, &rad.points(1.0, rad.far), &q)?,
            "log_lap_point",
            tol,
        )?
    } else {
        Estimate::default()
    };
    Ok(OperatorEval {
        value: lc.c_log * (near.value + gap - far.value) + lc.rho * rad.ux,
        est_error: lc.c_log * (near.error + far.error),
        method: Method::Spatial,
        order: Order::Log,
    })
}

/// sup over `points` of |((−Δ)^s u − u)/s − L_Δ u|.
///
/// Evaluated through the fused kernel C_N(τ(s)ρ^{−2s} − 1) so the O(s)
/// difference is computed without cancellation.
pub fn diff_quotient_sup<F: Field + ?Sized>(u: &F, s: f64, points: &[Vec<f64>], tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let mut sup = 0.0f64;
    for x in points {
        sup = sup.max(diff_quotient_point(u, s, x, tol)?.abs());
    }
    Ok(sup)
}

/// Signed ((−Δ)^s u(x) − u(x))/s − L_Δ u(x).
pub fn diff_quotient_point<F: Field + ?Sized>(u: &F, s: f64, x: &[f64], tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let dim = u.dim();
    let lc = log_constants(dim)?;
    let tm1 = tau_minus_one(dim, s)?;
    let log_tau = tm1.ln_1p();
    let rad = Radial::new(u, x)?;
    // C_N (τ ρ^{−2s} − 1)
    let kernel = |rho: f64| lc.c_log * (log_tau - 2.0 * s * rho.ln()).exp_m1();
    let q = Quad {
        abs_tol: 0.25 * tol / lc.c_log,
        rel_tol: 0.0,
        max_intervals: MAX_PANELS,
    };
    let big_r = rad.far.max(f64::MIN_POSITIVE);
    let near_hi = big_r.min(1.0);
    let rho0 = rad.origin_cut();
    let near = integrate_breaks(
        |rho| rad.second_difference(rho) * kernel(rho) / rho,
        &rad.points(rho0, near_hi),
        &q,
    )?;
    let near = nan_guard(near, "diff_quotient", tol)?;
    let (s0, alpha) = rad.origin_model(rho0);
    let tau = 1.0 + tm1;
    let origin = lc.c_log * s0 * (tau * rho0.powf(-2.0 * s) / (alpha - 2.0 * s) - 1.0 / alpha);
    // on (far, 1) the second difference is ω u(x): ∫ C_N(τρ^{−2s}−1)/ρ dρ in closed form
    let gap = if big_r < 1.0 {
        let a = big_r;
        // ∫_a^1 (τ ρ^{−2s} − 1)/ρ dρ = τ (a^{−2s} − 1)/(2s) + ln a
        let pow = (-2.0 * s * a.ln()).exp_m1() / (2.0 * s);
        rad.omega() * rad.ux * lc.c_log * (tau * pow + a.ln())
    } else {
        0.0
    };
    let far = if big_r > 1.0 {
        nan_guard(
            integrate_breaks(
                |rho| rad.sphere_mean(rho) * kernel(rho) / rho,
                &rad.points(1.0, big_r),
                &q,
            )?,
            "diff_quotient",
            tol,
        )?
    } else {
        Estimate::default()
    };
    // u(x)·(f_N(s) − ρ_N) with f_N(s) = (τ(s) − 1)/s
    let mass = rad.ux * (tm1 / s - lc.rho);
    Ok(origin + near.value + gap - far.value + mass)
}

/// Fourier multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Symbol {
    /// |ξ|^p (p = 2s for the fractional Laplacian)
    Power(f64),
    /// 2 ln|ξ|
    Log,
}

impl Symbol {
    fn eval(&self, xi: f64) -> f64 {
        match *self {
            Symbol::Power(p) => {
                if p == 0.0 {
                    1.0
                } else {
                    xi.powf(p)
                }
            }
            Symbol::Log => 2.0 * xi.ln(),
        }
    }

    fn order(&self) -> Order {
        match *self {
            Symbol::Power(p) => Order::Frac(0.5 * p),
            Symbol::Log => Order::Log,
        }
    }
}

/// Upper envelope of |Û(ξ)| for a bump family, valid for ξ ≥ `valid_from`.
#[derive(Debug, Clone, Copy)]
enum Envelope {
    /// K ξ^{−m}
    Power { k: f64, m: f64 },
    /// K (ξ r)^{−3/4} exp(−√(ξ r))
    Stretched { k: f64, r: f64, valid_from: f64 },
}

impl Envelope {
    fn for_bump(u: &TestFunction) -> Envelope {
        let (a, r) = (u.amplitude.abs(), u.radius);
        match u.kind {
            // A r (sin(k/2)/(k/2))² ≤ 4A/(r ξ²)
            BumpKind::Hat => Envelope::Power { k: 4.0 * a / r, m: 2.0 },
            // A r · 96 |j₃(k)|/k³ ≤ 96·1.15 A/(r³ ξ⁴), since |k j₃(k)| < 1.15
            BumpKind::PolynomialC2 => Envelope::Power {
                k: 110.4 * a / (r * r * r),
                m: 4.0,
            },
            // fitted asymptotic envelope 8 k^{−3/4} e^{−√k} of the unit bump, with margin
            BumpKind::Smooth => Envelope::Stretched {
                k: 12.0 * a * r,
                r,
                valid_from: 5.0 / r,
            },
        }
    }

    /// (1/π) ∫_Ξ^∞ |σ(ξ)| env(ξ) dξ
    fn tail(&self, symbol: Symbol, cutoff: f64) -> f64 {
        match (*self, symbol) {
            (Envelope::Power { k, m }, Symbol::Power(p)) => {
                if m - p <= 1.0 {
                    f64::INFINITY
                } else {
                    k * cutoff.powf(p - m + 1.0) / ((m - p - 1.0) * PI)
                }
            }
            (Envelope::Power { k, m }, Symbol::Log) => {
                // ∫ 2 ln ξ ξ^{−m} = 2 Ξ^{1−m}(ln Ξ/(m−1) + 1/(m−1)²), valid for Ξ ≥ 1
                let e = m - 1.0;
                2.0 * k * cutoff.powf(-e) * (cutoff.ln().abs() / e + 1.0 / (e * e)) / PI
            }
            (Envelope::Stretched { k, r, valid_from }, symbol) => {
                if cutoff < valid_from {
                    return f64::INFINITY;
                }
                // substitute ξ = Ξ + t/(1−t)
                let q = Quad {
                    abs_tol: 1e-18,
                    rel_tol: 1e-6,
                    max_intervals: 2000,
                };
                integrate(
                    |t| {
                        if t >= 1.0 {
                            return 0.0;
                        }
                        let xi = cutoff + t / (1.0 - t);
                        let kr = xi * r;
                        symbol.eval(xi).abs() * k * kr.powf(-0.75) * (-kr.sqrt()).exp()
                            / ((1.0 - t) * (1.0 - t))
                    },
                    0.0,
                    1.0,
                    &q,
                )
                .map(|e| e.value / PI)
                .unwrap_or(f64::INFINITY)
            }
        }
    }
}

/// Precomputed cosine transform of a 1D bump on [0, Ξ], reusable across
/// points (|x − c| ≤ reach) and symbols.
#[derive(Debug, Clone)]
pub struct FourierProfile {
    center: f64,
    cutoff: f64,
    reach: f64,
    envelope: Envelope,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<f64>,
}

impl FourierProfile {
    pub fn new(u: &TestFunction, cutoff: f64, reach: f64) -> Result<Self> {
        if u.dim() != 1 {
            return Err(Error::Unsupported("Fourier evaluation only for N = 1".into()));
        }
        if !(cutoff > 0.0) || !(reach >= 0.0) {
            return Err(Error::invalid("cutoff must be positive and reach nonnegative"));
        }
        let gl = GaussLegendre::new(16);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        // geometric grading towards ξ = 0 for the log/power singularity
        let first = cutoff.min(1.0);
        let mut hi = first;
        for _ in 0..60 {
            let lo = 0.5 * hi;
            for (x, w) in gl.mapped(lo, hi) {
                nodes.push(x);
                weights.push(w);
            }
            hi = lo;
        }
        let width = PI / (u.radius + reach).max(1e-3);
        let panels = ((cutoff - first) / width).ceil() as usize;
        for p in 0..panels {
            let a = first + p as f64 * width;
            let b = (a + width).min(cutoff);
            if b <= a {
                break;
            }
            for (x, w) in gl.mapped(a, b) {
                nodes.push(x);
                weights.push(w);
            }
        }
        let values = nodes
            .iter()
            .map(|&xi| u.fourier_even(xi))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            center: u.center[0],
            cutoff,
            reach,
            envelope: Envelope::for_bump(u),
            nodes,
            weights,
            values,
        })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn tail_bound(&self, symbol: Symbol) -> f64 {
        self.envelope.tail(symbol, self.cutoff)
    }

    pub fn evaluate(&self, symbol: Symbol, x: f64, tol: f64) -> Result<OperatorEval> {
        check_tol(tol)?;
        let d = x - self.center;
        if d.abs() > self.reach * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "point at distance {} exceeds the profile reach {}",
                d.abs(),
                self.reach
            )));
        }
        let tail = self.tail_bound(symbol);
        if tail > tol {
            return Err(Error::FourierTail {
                tail,
                tol,
                cutoff: self.cutoff,
            });
        }
        let mut acc = 0.0;
        let mut mag = 0.0;
        for ((&xi, &w), &v) in self.nodes.iter().zip(&self.weights).zip(&self.values) {
            let term = w * symbol.eval(xi) * v * (xi * d).cos();
            acc += term;
            mag += term.abs();
        }
        Ok(OperatorEval {
            value: acc / PI,
            est_error: tail + 1e-15 * mag / PI * (self.nodes.len() as f64).sqrt(),
            method: Method::Fourier,
            order: symbol.order(),
        })
    }
}

/// Smallest cutoff of the form 2^j whose tail bound is below `tol`.
pub fn auto_cutoff(u: &TestFunction, symbol: Symbol, tol: f64) -> Result<f64> {
    let env = Envelope::for_bump(u);
    let mut cutoff = 8.0 / u.radius;
    while env.tail(symbol, cutoff) > tol {
        cutoff *= 2.0;
        if cutoff > 1e9 {
            return Err(Error::FourierTail {
                tail: env.tail(symbol, cutoff),
                tol,
                cutoff,
            });
        }
    }
    Ok(cutoff)
}

/// Inverse-transform quadrature of symbol(ξ)·û(ξ) over |ξ| ≤ cutoff.
pub fn symbol_point(u: &TestFunction, symbol: Symbol, x: &[f64], cutoff: f64, tol: f64) -> Result<OperatorEval> {
    if x.len() != 1 || u.dim() != 1 {
        return Err(Error::Unsupported("Fourier evaluation only for N = 1".into()));
    }
    let reach = (x[0] - u.center[0]).abs();
    FourierProfile::new(u, cutoff, reach)?.evaluate(symbol, x[0], tol)
}

/// Riesz potential ∫_{B_r} κ_{N,s} |x−y|^{2s−N} f(y) dy in N = 1.
///
/// The algebraic singularity at y = x is removed by t = w^{1/(2s)} on each
/// side of x.
pub fn riesz_potential<F: Field + ?Sized>(f: &F, r: f64, s: f64, x: &[f64], tol: f64) -> Result<f64> {
    check_tol(tol)?;
    if f.dim() != 1 || x.len() != 1 {
        return Err(Error::Unsupported("Riesz potential only for N = 1".into()));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::invalid(format!("ball radius {r} outside (0,1]")));
    }
    if !(s > 0.0 && s <= 0.25) {
        return Err(Error::invalid(format!("order {s} outside (0, 1/4]")));
    }
    let kappa = riesz_constant(1, s)?;
    let x = x[0];
    let p = 2.0 * s;
    let inv_p = 1.0 / p;
    let q = Quad {
        abs_tol: 0.25 * tol / kappa,
        rel_tol: 0.0,
        max_intervals: MAX_PANELS,
    };
    let mut kinks: Vec<f64> = f.kinks();
    kinks.push(-r);
    kinks.push(r);
    let mut total = Estimate::default();
    for dir in [-1.0f64, 1.0] {
        // t ∈ (t_lo, t_hi): y = x + dir·t stays inside (−r, r)
        let edge_in = if dir > 0.0 { -r - x } else { x - r };
        let edge_out = if dir > 0.0 { r - x } else { x + r };
        let t_lo = edge_in.max(0.0);
        let t_hi = edge_out;
        if t_hi <= t_lo {
            continue;
        }
        let mut w_pts: Vec<f64> = kinks
            .iter()
            .map(|k| dir * (k - x))
            .filter(|t| *t > t_lo && *t < t_hi)
            .map(|t| t.powf(p))
            .collect();
        w_pts.push(t_lo.powf(p));
        w_pts.push(t_hi.powf(p));
        w_pts.sort_by(f64::total_cmp);
        w_pts.dedup();
        let est = integrate_breaks(|w| f.value(&[x + dir * w.powf(inv_p)]), &w_pts, &q)?;
        total = total + est * inv_p;
    }
    Ok(kappa * total.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testlab::{make_bump, ConstantField};

    fn bump(kind: BumpKind, c: f64, r: f64, a: f64) -> TestFunction {
        make_bump(kind, &[c], r, a).unwrap()
    }

    #[test]
    fn zero_function_gives_zero() {
        let z = bump(BumpKind::Smooth, 0.0, 1.0, 0.0);
        assert_eq!(frac_lap_point(&z, 0.3, &[0.2], 1e-10).unwrap().value, 0.0);
        assert_eq!(log_lap_point(&z, &[0.2], 1e-10).unwrap().value, 0.0);
        assert_eq!(diff_quotient_sup(&z, 0.1, &[vec![0.0]], 1e-10).unwrap(), 0.0);
        let zp = bump(BumpKind::PolynomialC2, 0.0, 1.0, 0.0);
        assert_eq!(symbol_point(&zp, Symbol::Power(0.5), &[0.1], 100.0, 1e-2).unwrap().value, 0.0);
        assert_eq!(riesz_potential(&z, 0.5, 0.2, &[0.1], 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn linearity_in_amplitude() {
        let u = bump(BumpKind::Smooth, 0.1, 0.9, 1.0);
        let v = bump(BumpKind::Smooth, 0.1, 0.9, -2.5);
        let a = frac_lap_point(&u, 0.3, &[0.4], 1e-12).unwrap().value;
        let b = frac_lap_point(&v, 0.3, &[0.4], 1e-12).unwrap().value;
        assert!((b + 2.5 * a).abs() < 1e-12);
    }

    #[test]
    fn far_field_log_is_negative() {
        let u = bump(BumpKind::Smooth, 0.0, 0.5, 1.0);
        let val = log_lap_point(&u, &[2.0], 1e-10).unwrap().value;
        assert!(val < 0.0);
        // only −C_1 ∫ u(y)/|x−y| dy survives
        let direct = integrate(|y| u.value(&[y]) / (2.0 - y), -0.5, 0.5, &Quad::default()).unwrap();
        assert!((val + direct.value).abs() < 1e-10);
    }

    #[test]
    fn spatial_matches_fourier_at_center() {
        let u = bump(BumpKind::Smooth, 0.0, 1.0, 1.0);
        let tol = 1e-9;
        let s = 0.25;
        let spatial = frac_lap_point(&u, s, &[0.0], tol).unwrap();
        let cutoff = auto_cutoff(&u, Symbol::Power(2.0 * s), tol).unwrap();
        let fourier = symbol_point(&u, Symbol::Power(2.0 * s), &[0.0], cutoff, tol).unwrap();
        assert!((spatial.value - fourier.value).abs() < 1e-6, "{spatial:?} vs {fourier:?}");

        let spatial = log_lap_point(&u, &[0.0], tol).unwrap();
        let cutoff = auto_cutoff(&u, Symbol::Log, tol).unwrap();
        let fourier = symbol_point(&u, Symbol::Log, &[0.0], cutoff, tol).unwrap();
        assert!((spatial.value - fourier.value).abs() < 1e-6, "{spatial:?} vs {fourier:?}");
    }

    #[test]
    fn polynomial_bump_cross_method() {
        let u = bump(BumpKind::PolynomialC2, 0.0, 1.0, 1.0);
        let tol = 1e-8;
        let spatial = frac_lap_point(&u, 0.25, &[0.0], tol).unwrap();
        let cutoff = auto_cutoff(&u, Symbol::Power(0.5), tol).unwrap();
        let fourier = symbol_point(&u, Symbol::Power(0.5), &[0.0], cutoff, tol).unwrap();
        assert!((spatial.value - fourier.value).abs() < spatial.est_error + fourier.est_error + 1e-9);
    }

    #[test]
    fn identity_symbol_recovers_function() {
        let u = bump(BumpKind::PolynomialC2, 0.2, 0.7, 1.3);
        let tol = 1e-8;
        let cutoff = auto_cutoff(&u, Symbol::Power(0.0), tol).unwrap();
        for x in [0.2, 0.4, 0.85, 1.5] {
            let e = symbol_point(&u, Symbol::Power(0.0), &[x], cutoff, tol).unwrap();
            assert!((e.value - u.value(&[x])).abs() < tol, "x={x}: {} vs {}", e.value, u.value(&[x]));
        }
    }

    #[test]
    fn fourier_tail_failure_is_reported() {
        let u = bump(BumpKind::PolynomialC2, 0.0, 1.0, 1.0);
        let r = symbol_point(&u, Symbol::Power(0.5), &[0.0], 10.0, 1e-10);
        assert!(matches!(r, Err(Error::FourierTail { .. })));
    }

    #[test]
    fn envelope_bounds_polynomial_transform() {
        let u = bump(BumpKind::PolynomialC2, 0.0, 0.8, 1.0);
        let env = Envelope::for_bump(&u);
        let Envelope::Power { k, m } = env else { panic!() };
        for i in 1..4000 {
            let xi = 0.37 * i as f64;
            assert!(u.fourier_even(xi).unwrap().abs() <= k * xi.powf(-m) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn envelope_bounds_smooth_transform() {
        let u = bump(BumpKind::Smooth, 0.0, 0.6, 1.0);
        let Envelope::Stretched { k, r, valid_from } = Envelope::for_bump(&u) else { panic!() };
        let mut xi = valid_from;
        while xi < 800.0 {
            let kr = xi * r;
            let env = k * kr.powf(-0.75) * (-kr.sqrt()).exp();
            assert!(u.fourier_even(xi).unwrap().abs() <= env, "xi = {xi}");
            xi += 0.173;
        }
    }

    #[test]
    fn translation_equivariance() {
        let u = bump(BumpKind::Smooth, 0.0, 0.8, 1.0);
        let v = bump(BumpKind::Smooth, 0.37, 0.8, 1.0);
        for x in [0.0, 0.3, 1.2] {
            let a = frac_lap_point(&u, 0.2, &[x], 1e-12).unwrap().value;
            let b = frac_lap_point(&v, 0.2, &[x + 0.37], 1e-12).unwrap().value;
            assert!((a - b).abs() < 1e-10);
            let a = log_lap_point(&u, &[x], 1e-12).unwrap().value;
            let b = log_lap_point(&v, &[x + 0.37], 1e-12).unwrap().value;
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn fractional_scaling_identity() {
        // u_r(x) = u(x/r): (−Δ)^s u_r(x) = r^{−2s} ((−Δ)^s u)(x/r)
        let r = 1.7;
        let s = 0.35;
        let u = bump(BumpKind::Smooth, 0.0, 1.0, 1.0);
        let ur = bump(BumpKind::Smooth, 0.0, r, 1.0);
        for x in [0.0, 0.5, 2.4] {
            let a = frac_lap_point(&ur, s, &[x], 1e-12).unwrap().value;
            let b = frac_lap_point(&u, s, &[x / r], 1e-12).unwrap().value;
            assert!((a - r.powf(-2.0 * s) * b).abs() < 1e-10);
        }
    }

    #[test]
    fn fused_difference_quotient_matches_naive() {
        let u = bump(BumpKind::Smooth, 0.1, 0.9, 1.0);
        for s in [0.2, 0.05] {
            for x in [0.0, 0.5, 1.5] {
                let fused = diff_quotient_point(&u, s, &[x], 1e-12).unwrap();
                let fl = frac_lap_point(&u, s, &[x], 1e-13).unwrap().value;
                let ll = log_lap_point(&u, &[x], 1e-13).unwrap().value;
                let naive = (fl - u.value(&[x])) / s - ll;
                assert!((fused - naive).abs() < 1e-9, "s={s} x={x}: {fused} vs {naive}");
            }
        }
    }

    #[test]
    fn two_dimensional_operator_matches_radial_reference() {
        // at the center of a radial bump the angular integral is 2π(u(0) − f(ρ))
        let u = make_bump(BumpKind::PolynomialC2, &[0.0, 0.0], 1.0, 1.0).unwrap();
        let s = 0.3;
        let c = frac_constant(2, s).unwrap();
        let direct = integrate(
            // 1 − (1 − ρ²)³ expanded to avoid cancellation
            |rho| 2.0 * PI * (3.0 - 3.0 * rho * rho + rho.powi(4)) * rho.powf(1.0 - 2.0 * s),
            0.0,
            1.0,
            &Quad::default(),
        )
        .unwrap()
        .value
            + 2.0 * PI / (2.0 * s);
        let op = frac_lap_point(&u, s, &[0.0, 0.0], 1e-10).unwrap();
        assert!((op.value - c * direct).abs() < 1e-8, "{} vs {}", op.value, c * direct);
    }

    #[test]
    fn riesz_potential_constant_density() {
        let one = ConstantField { dim: 1, value: 1.0 };
        let v = riesz_potential(&one, 1.0, 0.25, &[0.0], 1e-12).unwrap();
        let expected = 4.0 / (2.0 * PI).sqrt();
        assert!((v - expected).abs() < 1e-10, "{v} vs {expected}");
    }

    #[test]
    fn riesz_potential_holder_bound() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let f = bump(BumpKind::Smooth, 0.1, 0.5, 1.0);
        let r = 0.6;
        for s in [0.05, 0.25] {
            let kappa = riesz_constant(1, s).unwrap();
            // explicit constant 2 ω κ / s for the unit ball, scaled by r^s
            let bound = 2.0 * 2.0 * kappa / s;
            let mut worst = 0.0f64;
            for _ in 0..40 {
                let x = rng.gen_range(-1.5..1.5);
                let y = rng.gen_range(-1.5..1.5);
                let ux = riesz_potential(&f, r, s, &[x], 1e-11).unwrap();
                let uy = riesz_potential(&f, r, s, &[y], 1e-11).unwrap();
                let ratio = (ux - uy).abs() / (r.powf(s) * (x - y).abs().powf(s));
                worst = worst.max(ratio);
            }
            assert!(worst.is_finite() && worst <= bound, "s={s}: {worst} > {bound}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let u = bump(BumpKind::Smooth, 0.0, 1.0, 1.0);
        assert!(frac_lap_point(&u, 0.3, &[0.0], 0.0).is_err());
        assert!(frac_lap_point(&u, 1.3, &[0.0], 1e-8).is_err());
        assert!(frac_lap_point(&u, 0.3, &[0.0, 1.0], 1e-8).is_err());
        assert!(riesz_potential(&u, 1.5, 0.1, &[0.0], 1e-8).is_err());
        assert!(riesz_potential(&u, 0.5, 0.3, &[0.0], 1e-8).is_err());
    }
}
