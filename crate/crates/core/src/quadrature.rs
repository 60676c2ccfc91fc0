//! Quadrature rules: globally adaptive Gauss–Kronrod (G10/K21) with
//! breakpoints, fixed Gauss–Legendre panels, and a change of variables for
//! algebraic endpoint singularities.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_745_084_566,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights attached to XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Tolerances and budget for adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quad {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

impl Quad {
    pub fn abs(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: 0.0,
            ..Self::default()
        }
    }

    pub fn with_budget(mut self, max_intervals: usize) -> Self {
        self.max_intervals = max_intervals;
        self
    }
}

/// An integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

impl std::ops::Mul<f64> for Estimate {
    type Output = Estimate;
    fn mul(self, c: f64) -> Estimate {
        Estimate {
            value: self.value * c,
            error: self.error * c.abs(),
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, bool) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut fv = [0.0; 21];
    fv[20] = fc;
    let mut resk = WGK[10] * fc;
    let mut resabs = WGK[10] * fc.abs();
    let mut resg = 0.0;
    for (j, (&x, &w)) in XGK[..10].iter().zip(&WGK[..10]).enumerate() {
        let dx = half * x;
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        resk += w * (f1 + f2);
        resabs += w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for (j, &w) in WGK[..10].iter().enumerate() {
        resasc += w * ((fv[2 * j] - mean).abs() + (fv[2 * j + 1] - mean).abs());
    }
    let value = resk * half;
    let (resabs, resasc) = (resabs * half.abs(), resasc * half.abs());
    let mut error = ((resk - resg) * half).abs();
    // QUADPACK error scaling and roundoff floor
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    let limited = resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && error <= floor;
    if limited {
        error = floor;
    }
    (value, error, limited)
}

/// Adaptive integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, q: &Quad) -> Result<Estimate> {
    integrate_breaks(f, &[a, b], q)
}

/// Adaptive integration over the union of consecutive segments of `points`
/// (which must be nondecreasing). Zero-length segments are skipped.
pub fn integrate_breaks<F: Fn(f64) -> f64>(f: F, points: &[f64], q: &Quad) -> Result<Estimate> {
    if points.len() < 2 {
        return Ok(Estimate::default());
    }
    let mut heap = BinaryHeap::new();
    // panels whose error is at the roundoff floor are not split further
    let mut done: Vec<Panel> = Vec::new();
    let mut total = 0.0;
    let mut err = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            if b < a {
                return Err(Error::invalid(format!("breakpoints not sorted: {a} > {b}")));
            }
            continue;
        }
        let (v, e, limited) = kronrod21(&f, a, b);
        total += v;
        err += e;
        let panel = Panel { a, b, value: v, error: e };
        if limited {
            done.push(panel);
        } else {
            heap.push(panel);
        }
    }
    let target = |t: f64| q.abs_tol.max(q.rel_tol * t.abs());
    while err > target(total) {
        let Some(worst) = heap.pop() else {
            // everything left is roundoff-limited; report the honest error
            break;
        };
        if heap.len() + done.len() + 2 > q.max_intervals {
            return Err(Error::Quadrature {
                context: "adaptive Gauss-Kronrod".into(),
                achieved: err,
                requested: target(total),
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) <= 64.0 * f64::EPSILON * mid.abs() {
            // panel at machine resolution: keep its estimate, it cannot be refined
            done.push(worst);
            continue;
        }
        let (v1, e1, l1) = kronrod21(&f, worst.a, mid);
        let (v2, e2, l2) = kronrod21(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        for (panel, limited) in [
            (Panel { a: worst.a, b: mid, value: v1, error: e1 }, l1),
            (Panel { a: mid, b: worst.b, value: v2, error: e2 }, l2),
        ] {
            if limited {
                done.push(panel);
            } else {
                heap.push(panel);
            }
        }
    }
    // re-sum to remove drift from incremental updates
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(done);
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = pairwise_sum(panels.iter().map(|p| p.value));
    let error: f64 = panels.iter().map(|p| p.error).sum();
    Ok(Estimate { value, error })
}

/// ∫_a^b (t - a)^{p-1} g(t) dt for p in (0, 1], via t = a + w^{1/p}; the
/// transformed integrand is smooth when `g` is.
pub fn integrate_algebraic_left<F: Fn(f64) -> f64>(
    g: F,
    a: f64,
    b: f64,
    p: f64,
    q: &Quad,
) -> Result<Estimate> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("algebraic exponent {p} outside (0,1]")));
    }
    let len = b - a;
    let top = len.powf(p);
    let inv_p = 1.0 / p;
    let est = integrate(|w| g(a + w.powf(inv_p)), 0.0, top, q)?;
    Ok(est * inv_p)
}

/// Pairwise summation; deterministic for a fixed input order.
pub fn pairwise_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    fn rec(v: &[f64]) -> f64 {
        if v.len() <= 8 {
            return v.iter().sum();
        }
        let (l, r) = v.split_at(v.len() / 2);
        rec(l) + rec(r)
    }
    rec(&v)
}

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrate over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, w * h))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let gl = GaussLegendre::new(8);
        let sum: f64 = gl.weights.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        // degree 15 is integrated exactly
        let v = gl.integrate(|x| x.powi(14) + x.powi(15), -1.0, 1.0);
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        let v = gl.integrate(|x| x * x, 0.0, 3.0);
        assert!((v - 9.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_smooth_and_singular() {
        let q = Quad::default();
        let e = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, &q).unwrap();
        assert!((e.value - 2.0).abs() < 1e-13);
        let e = integrate(|x| x.sqrt(), 0.0, 1.0, &q).unwrap();
        assert!((e.value - 2.0 / 3.0).abs() < 1e-12);
        // log singularity at the endpoint
        let e = integrate(|x| if x > 0.0 { x.ln() } else { 0.0 }, 0.0, 1.0, &q).unwrap();
        assert!((e.value + 1.0).abs() < 1e-11);
    }

    #[test]
    fn adaptive_reports_budget_failure() {
        let q = Quad::abs(1e-14).with_budget(3);
        let r = integrate(|x| (1.0 / (x + 1e-9)).sin(), 0.0, 1.0, &q);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn algebraic_substitution_handles_strong_singularity() {
        // ∫_0^1 t^{-0.9} dt = 10
        let q = Quad::default();
        let e = integrate_algebraic_left(|_| 1.0, 0.0, 1.0, 0.1, &q).unwrap();
        assert!((e.value - 10.0).abs() < 1e-10);
        // ∫_0^2 t^{-1/2} cos t dt
        let e = integrate_algebraic_left(|t| t.cos(), 0.0, 2.0, 0.5, &q).unwrap();
        let reference = integrate(|w: f64| 2.0 * (w * w).cos(), 0.0, 2f64.sqrt(), &q).unwrap();
        assert!((e.value - reference.value).abs() < 1e-12);
    }

    #[test]
    fn breakpoints_must_be_sorted() {
        let r = integrate_breaks(|x| x, &[0.0, 1.0, 0.5], &Quad::default());
        assert!(r.is_err());
    }
}
