//! Compactly supported test functions and computational domains.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_breaks, GaussLegendre, Quad};

/// Axis-aligned box `[lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BBox {
    /// Smallest and largest Euclidean distance from `x` to points of the box.
    pub fn distance_range(&self, x: &[f64]) -> (f64, f64) {
        let mut near = 0.0;
        let mut far = 0.0;
        for ((xi, lo), hi) in x.iter().zip(&self.lo).zip(&self.hi) {
            let d_lo = xi - lo;
            let d_hi = hi - xi;
            let n = if d_lo < 0.0 {
                -d_lo
            } else if d_hi < 0.0 {
                -d_hi
            } else {
                0.0
            };
            let f = d_lo.abs().max(d_hi.abs());
            near += n * n;
            far += f * f;
        }
        (near.sqrt(), far.sqrt())
    }
}

/// A real function on ℝ^N with bounded support, evaluated pointwise.
pub trait Field: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// Box containing the support; `None` for fields without bounded support.
    fn support_box(&self) -> Option<BBox>;
    /// 1D only: abscissae where the field loses smoothness (kinks, support ends).
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<F: Field + ?Sized> Field for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn support_box(&self) -> Option<BBox> {
        (**self).support_box()
    }
    fn kinks(&self) -> Vec<f64> {
        (**self).kinks()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BumpKind {
    /// e·exp(−1/(1−ρ²)), infinitely smooth
    Smooth,
    /// (1−ρ²)³, C² across the support boundary
    PolynomialC2,
    /// (1−ρ)₊, Lipschitz
    Hat,
}

/// Radial bump `amplitude · f(|x − center| / radius)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub kind: BumpKind,
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
}

pub fn make_bump(kind: BumpKind, center: &[f64], radius: f64, amplitude: f64) -> Result<TestFunction> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("bump radius must be positive, got {radius}")));
    }
    if center.is_empty() {
        return Err(Error::invalid("bump center must have at least one coordinate"));
    }
    Ok(TestFunction {
        kind,
        center: center.to_vec(),
        radius,
        amplitude,
    })
}

impl TestFunction {
    pub fn has_closed_fourier(&self) -> bool {
        !matches!(self.kind, BumpKind::Smooth)
    }

    fn rho(&self, x: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        d2.sqrt() / self.radius
    }

    /// Radial profile (f, f', f'') at ρ ∈ [0, ∞).
    fn profile(&self, rho: f64) -> (f64, f64, f64) {
        if rho >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        match self.kind {
            BumpKind::Smooth => {
                let q = 1.0 - rho * rho;
                let f = (1.0 - 1.0 / q).exp();
                let g1 = -2.0 * rho / (q * q);
                let g2 = -2.0 / (q * q) - 8.0 * rho * rho / (q * q * q);
                (f, f * g1, f * (g1 * g1 + g2))
            }
            BumpKind::PolynomialC2 => {
                let q = 1.0 - rho * rho;
                (q * q * q, -6.0 * rho * q * q, -6.0 * q * q + 24.0 * rho * rho * q)
            }
            BumpKind::Hat => (1.0 - rho, -1.0, 0.0),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let rho = self.rho(x);
        if rho == 0.0 || rho >= 1.0 {
            return vec![0.0; x.len()];
        }
        let (_, d1, _) = self.profile(rho);
        let scale = self.amplitude * d1 / (self.radius * rho * self.radius);
        x.iter().zip(&self.center).map(|(a, c)| scale * (a - c)).collect()
    }

    /// Pointwise Laplacian (almost everywhere for the hat).
    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let rho = self.rho(x);
        if rho >= 1.0 {
            return 0.0;
        }
        let n = self.center.len() as f64;
        let (_, d1, d2) = self.profile(rho);
        let radial = if rho > 0.0 {
            d1 / rho
        } else {
            // f'(ρ)/ρ → f''(0)
            match self.kind {
                BumpKind::Hat => 0.0,
                _ => d2,
            }
        };
        self.amplitude * (d2 + (n - 1.0) * radial) / (self.radius * self.radius)
    }

    /// Cosine transform about the center in 1D:
    /// Û(ξ) = ∫ u(c + t) cos(ξ t) dt, so that û(ξ) = e^{−iξc} Û(ξ).
    pub fn fourier_even(&self, xi: f64) -> Result<f64> {
        if self.center.len() != 1 {
            return Err(Error::Unsupported("Fourier transform only for N = 1".into()));
        }
        let k = (xi * self.radius).abs();
        let scale = self.amplitude * self.radius;
        let unit = match self.kind {
            BumpKind::Hat => {
                if k < 1e-4 {
                    1.0 - k * k / 12.0
                } else {
                    let x = 0.5 * k;
                    let sinc = x.sin() / x;
                    sinc * sinc
                }
            }
            BumpKind::PolynomialC2 => poly_bump_cosine_transform(k),
            BumpKind::Smooth => smooth_bump_cosine_transform(k),
        };
        Ok(scale * unit)
    }
}

/// ∫_{-1}^{1} (1−t²)³ cos(k t) dt = 96 j₃(k)/k³.
fn poly_bump_cosine_transform(k: f64) -> f64 {
    if k < 4.0 {
        // Σ (−1)^m k^{2m}/(2m)! · B(m+1/2, 4)
        let mut sum = 0.0f64;
        let mut term_pow = 1.0f64; // k^{2m}/(2m)!
        let mut beta = 32.0f64 / 35.0; // B(1/2, 4)
        for m in 0..40 {
            let mf = m as f64;
            let contrib = term_pow * beta;
            sum += if m % 2 == 0 { contrib } else { -contrib };
            if contrib.abs() < 1e-18 * sum.abs().max(1e-300) && m > 4 {
                break;
            }
            term_pow *= k * k / ((2.0 * mf + 1.0) * (2.0 * mf + 2.0));
            // B(m+3/2,4)/B(m+1/2,4) = (m+1/2)/(m+9/2)
            beta *= (mf + 0.5) / (mf + 4.5);
        }
        sum
    } else {
        let (s, c) = k.sin_cos();
        let k2 = k * k;
        let j3 = (15.0 / (k2 * k2) - 6.0 / k2) * s - (15.0 / (k2 * k) - 1.0 / k) * c;
        96.0 * j3 / (k2 * k)
    }
}

/// 2 ∫_0^1 e·exp(−1/(1−t²)) cos(k t) dt by panel Gauss–Legendre.
fn smooth_bump_cosine_transform(k: f64) -> f64 {
    thread_local! {
        static GL: GaussLegendre = GaussLegendre::new(20);
    }
    let panels = 24 + (k / 2.0).ceil() as usize;
    GL.with(|gl| {
        let mut acc = 0.0;
        for p in 0..panels {
            let a = p as f64 / panels as f64;
            let b = (p + 1) as f64 / panels as f64;
            acc += gl.integrate(
                |t| {
                    let q = 1.0 - t * t;
                    if q <= 0.0 {
                        0.0
                    } else {
                        (1.0 - 1.0 / q).exp() * (k * t).cos()
                    }
                },
                a,
                b,
            );
        }
        2.0 * acc
    })
}

impl Field for TestFunction {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.amplitude * self.profile(self.rho(x)).0
    }
    fn support_box(&self) -> Option<BBox> {
        Some(BBox {
            lo: self.center.iter().map(|c| c - self.radius).collect(),
            hi: self.center.iter().map(|c| c + self.radius).collect(),
        })
    }
    fn kinks(&self) -> Vec<f64> {
        let c = self.center[0];
        match self.kind {
            BumpKind::Hat => vec![c - self.radius, c, c + self.radius],
            _ => vec![c - self.radius, c + self.radius],
        }
    }
}

/// Constant function on all of ℝ^N (used for Riesz-potential checks).
#[derive(Debug, Clone, Copy)]
pub struct ConstantField {
    pub dim: usize,
    pub value: f64,
}

impl Field for ConstantField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[f64]) -> f64 {
        self.value
    }
    fn support_box(&self) -> Option<BBox> {
        None
    }
}

/// Sum of fields, `Σ c_i u_i`.
pub struct Combination<'a> {
    pub terms: Vec<(f64, &'a dyn Field)>,
}

impl Field for Combination<'_> {
    fn dim(&self) -> usize {
        self.terms.first().map(|t| t.1.dim()).unwrap_or(1)
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.value(x)).sum()
    }
    fn support_box(&self) -> Option<BBox> {
        let mut boxes = self.terms.iter().map(|t| t.1.support_box());
        let mut acc = boxes.next()??;
        for b in boxes {
            let b = b?;
            for i in 0..acc.lo.len() {
                acc.lo[i] = acc.lo[i].min(b.lo[i]);
                acc.hi[i] = acc.hi[i].max(b.hi[i]);
            }
        }
        Some(acc)
    }
    fn kinks(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.terms.iter().flat_map(|t| t.1.kinks()).collect();
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }
}

/// Weighted norm ∫ |u(x)| / (1+|x|)^{N+2s} dx for compactly supported u.
pub fn l1s_norm(u: &TestFunction, s: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::invalid("order must be nonnegative"));
    }
    if u.amplitude == 0.0 {
        return Ok(0.0);
    }
    let n = u.dim() as f64;
    let q = Quad {
        abs_tol: 0.0,
        rel_tol: 1e-10,
        max_intervals: 4000,
    };
    match u.dim() {
        1 => {
            let mut pts = u.kinks();
            pts.push(0.0);
            pts.retain(|p| *p >= u.center[0] - u.radius && *p <= u.center[0] + u.radius);
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let est = integrate_breaks(
                |x| u.value(&[x]).abs() / (1.0 + x.abs()).powf(n + 2.0 * s),
                &pts,
                &q,
            )?;
            Ok(est.value)
        }
        2 => {
            let (cx, cy) = (u.center[0], u.center[1]);
            let inner = q.with_budget(2000);
            let est = integrate(
                |rho| {
                    let ring = integrate(
                        |theta| {
                            let (x, y) = (cx + rho * theta.cos(), cy + rho * theta.sin());
                            let r = (x * x + y * y).sqrt();
                            u.value(&[x, y]).abs() / (1.0 + r).powf(n + 2.0 * s)
                        },
                        0.0,
                        2.0 * std::f64::consts::PI,
                        &inner,
                    )
                    .map(|e| e.value)
                    .unwrap_or(f64::NAN);
                    ring * rho
                },
                0.0,
                u.radius,
                &q,
            )?;
            if est.value.is_nan() {
                return Err(Error::Quadrature {
                    context: "l1s_norm angular integral".into(),
                    achieved: f64::INFINITY,
                    requested: q.rel_tol,
                });
            }
            Ok(est.value)
        }
        d => Err(Error::Unsupported(format!("l1s_norm in dimension {d}"))),
    }
}

/// Interval or rectangle; the open set Ω used for Dirichlet problems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Rectangle { x: [f64; 2], y: [f64; 2] },
}

impl Domain {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Domain::Interval { a, b } => a < b,
            Domain::Rectangle { x, y } => x[0] < x[1] && y[0] < y[1],
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("degenerate domain {self:?}")))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
        }
    }

    fn axes(&self) -> Vec<(f64, f64)> {
        match *self {
            Domain::Interval { a, b } => vec![(a, b)],
            Domain::Rectangle { x, y } => vec![(x[0], x[1]), (y[0], y[1])],
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.axes().iter().zip(x).all(|(&(lo, hi), &v)| v > lo && v < hi)
    }

    /// Distance to the complement; zero outside the open set.
    pub fn delta(&self, x: &[f64]) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        self.axes()
            .iter()
            .zip(x)
            .map(|(&(lo, hi), &v)| (v - lo).min(hi - v))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn measure(&self) -> f64 {
        self.axes().iter().map(|(lo, hi)| hi - lo).product()
    }

    /// Image under x ↦ r·x.
    pub fn scaled(&self, r: f64) -> Domain {
        match *self {
            Domain::Interval { a, b } => Domain::Interval { a: r * a, b: r * b },
            Domain::Rectangle { x, y } => Domain::Rectangle {
                x: [r * x[0], r * x[1]],
                y: [r * y[0], r * y[1]],
            },
        }
    }

    pub fn id(&self) -> String {
        match *self {
            Domain::Interval { a, b } => format!("interval({a},{b})"),
            Domain::Rectangle { x, y } => format!("rectangle({},{})x({},{})", x[0], x[1], y[0], y[1]),
        }
    }
}

pub fn domain_delta(dom: &Domain, x: &[f64]) -> f64 {
    dom.delta(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn central_laplacian(u: &TestFunction, x: &[f64], h: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..x.len() {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[i] += h;
            m[i] -= h;
            acc += u.value(&p) - 2.0 * u.value(x) + u.value(&m);
        }
        acc / (h * h)
    }

    #[test]
    fn smooth_bump_basics() {
        let u = make_bump(BumpKind::Smooth, &[0.0], 1.0, 1.0).unwrap();
        assert!((u.value(&[0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(u.value(&[1.0]), 0.0);
        assert_eq!(u.value(&[-1.0]), 0.0);
        assert_eq!(u.gradient(&[0.0]), vec![0.0]);
        assert!(make_bump(BumpKind::Smooth, &[0.0], 0.0, 1.0).is_err());
        assert!(make_bump(BumpKind::Smooth, &[0.0], -1.0, 1.0).is_err());
    }

    #[test]
    fn laplacian_matches_finite_differences() {
        let bumps = [
            make_bump(BumpKind::Smooth, &[0.2], 0.8, 1.3).unwrap(),
            make_bump(BumpKind::PolynomialC2, &[-0.1], 1.1, 0.7).unwrap(),
            make_bump(BumpKind::Smooth, &[0.1, -0.2], 0.9, 1.0).unwrap(),
            make_bump(BumpKind::PolynomialC2, &[0.0, 0.0], 1.0, 2.0).unwrap(),
        ];
        for u in &bumps {
            let n = u.dim();
            for t in [0.0, 0.13, 0.37, 0.61] {
                let x: Vec<f64> = (0..n).map(|i| u.center[i] + t * u.radius / (n as f64).sqrt()).collect();
                let fd = central_laplacian(u, &x, 1e-4);
                assert!((fd - u.laplacian(&x)).abs() < 1e-6, "{:?} at {x:?}: {fd} vs {}", u.kind, u.laplacian(&x));
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let u = make_bump(BumpKind::Smooth, &[0.3, 0.1], 1.0, 1.0).unwrap();
        let x = [0.5, -0.2];
        let g = u.gradient(&x);
        let h = 1e-6;
        for i in 0..2 {
            let mut p = x;
            let mut m = x;
            p[i] += h;
            m[i] -= h;
            let fd = (u.value(&p) - u.value(&m)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn polynomial_bump_laplacian_continuous_at_boundary() {
        let u = make_bump(BumpKind::PolynomialC2, &[0.0], 1.0, 1.0).unwrap();
        assert!(u.laplacian(&[1.0 - 1e-7]).abs() < 1e-5);
        assert_eq!(u.laplacian(&[1.0 + 1e-7]), 0.0);
    }

    #[test]
    fn compact_support_sampled() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bumps = [
            make_bump(BumpKind::Smooth, &[0.5], 0.7, 2.0).unwrap(),
            make_bump(BumpKind::PolynomialC2, &[0.0, 1.0], 0.4, 1.0).unwrap(),
            make_bump(BumpKind::Hat, &[-1.0], 0.3, 1.0).unwrap(),
        ];
        for u in &bumps {
            for _ in 0..1000 {
                let dir: Vec<f64> = (0..u.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                let dist = u.radius * (1.0 + rng.gen_range(0.0..5.0));
                let x: Vec<f64> = (0..u.dim()).map(|i| u.center[i] + dist * dir[i] / norm).collect();
                assert_eq!(u.value(&x), 0.0);
            }
        }
    }

    #[test]
    fn cosine_transforms_match_quadrature() {
        let q = Quad::default();
        for kind in [BumpKind::Smooth, BumpKind::PolynomialC2, BumpKind::Hat] {
            let u = make_bump(kind, &[0.3], 0.8, 1.5).unwrap();
            for xi in [0.0, 0.5, 3.0, 5.1, 17.0, 60.0] {
                let direct = integrate_breaks(
                    |t| u.value(&[0.3 + t]) * (xi * t).cos(),
                    &[-0.8, 0.0, 0.8],
                    &Quad { max_intervals: 20000, ..q },
                )
                .unwrap()
                .value;
                let closed = u.fourier_even(xi).unwrap();
                assert!((direct - closed).abs() < 1e-11, "{kind:?} xi={xi}: {direct} vs {closed}");
            }
        }
    }

    #[test]
    fn l1s_norm_properties() {
        let zero = make_bump(BumpKind::Smooth, &[0.0], 1.0, 0.0).unwrap();
        assert_eq!(l1s_norm(&zero, 0.3).unwrap(), 0.0);

        let u = make_bump(BumpKind::PolynomialC2, &[0.4], 0.9, 1.0).unwrap();
        let v = make_bump(BumpKind::PolynomialC2, &[0.4], 0.9, 3.5).unwrap();
        let a = l1s_norm(&u, 0.2).unwrap();
        let b = l1s_norm(&v, 0.2).unwrap();
        assert!((b - 3.5 * a).abs() < 1e-12 * b);

        let mut prev = f64::INFINITY;
        for s in [0.0, 0.1, 0.25, 0.5, 0.9] {
            let val = l1s_norm(&u, s).unwrap();
            assert!(val <= prev);
            prev = val;
        }

        // tiny bump at the origin: weight ≈ 1
        let eps = 1e-4;
        let tiny = make_bump(BumpKind::PolynomialC2, &[0.0], eps, 1.0).unwrap();
        let l1 = eps * 32.0 / 35.0;
        assert!((l1s_norm(&tiny, 0.5).unwrap() - l1).abs() < 1e-3 * l1);
    }

    #[test]
    fn l1s_norm_two_dimensions() {
        let u = make_bump(BumpKind::PolynomialC2, &[0.0, 0.0], 1e-3, 1.0).unwrap();
        // ∫ (1−ρ²)³ over the unit disk = π/4
        let l1 = std::f64::consts::PI / 4.0 * 1e-6;
        assert!((l1s_norm(&u, 0.1).unwrap() - l1).abs() < 1e-2 * l1);
    }

    #[test]
    fn domain_distance() {
        let i = Domain::Interval { a: -1.0, b: 1.0 };
        assert_eq!(domain_delta(&i, &[0.0]), 1.0);
        assert_eq!(domain_delta(&i, &[0.75]), 0.25);
        assert_eq!(domain_delta(&i, &[1.5]), 0.0);
        assert_eq!(domain_delta(&i, &[1.0]), 0.0);
        let r = Domain::Rectangle { x: [0.0, 2.0], y: [0.0, 1.0] };
        assert!((domain_delta(&r, &[1.0, 0.3]) - 0.3).abs() < 1e-15);
        assert!(domain_delta(&r, &[1.0, 0.5]) <= 0.5);
        assert_eq!(domain_delta(&r, &[-0.1, 0.5]), 0.0);
    }

    #[test]
    fn domain_config_roundtrip() {
        let d: Domain = serde_json::from_str(r#"{"kind":"interval","a":-1,"b":1}"#).unwrap();
        assert_eq!(d, Domain::Interval { a: -1.0, b: 1.0 });
        let r: Domain = serde_json::from_str(r#"{"kind":"rectangle","x":[0,1],"y":[0,2]}"#).unwrap();
        assert_eq!(r.dim(), 2);
        assert_eq!(r.measure(), 2.0);
    }
}
