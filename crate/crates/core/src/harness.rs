//! The s-sweep: eigenpairs of (A_frac(s), M) along a grid of small orders and
//! of (A_log, M) on the same mesh, with slope fits, eigenfunction distances,
//! pointwise diagnostics and the report written by the `sweep` command.
//!
//! Eigenvalue indices `k` are 1-based throughout this module.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{ball_eigenvalue_bound, zero_radius};
use crate::error::{Error, Result};
use crate::fem::{assemble_frac, assemble_log, assemble_mass, mesh_domain, FormMatrix, Mesh, PiecewiseLinear};
use crate::spectra::{solve_generalized, subspace_distance, Spectrum};
use crate::testlab::Domain;

/// Default order grid.
pub const DEFAULT_S_GRID: [f64; 7] = [0.1, 0.07, 0.05, 0.035, 0.025, 0.0175, 0.0125];

/// Factor used for "bounded uniformly in s" surrogates.
pub const UNIFORMITY_FACTOR: f64 = 3.0;

fn default_s_grid() -> Vec<f64> {
    DEFAULT_S_GRID.to_vec()
}
fn default_k() -> usize {
    4
}
fn default_quad_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub domain: Domain,
    /// panels per axis
    pub n: usize,
    #[serde(default = "default_s_grid")]
    pub s_grid: Vec<f64>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(default)]
    pub seed: u64,
    /// worker threads for the per-s stage; results do not depend on it
    #[serde(default)]
    pub workers: Option<usize>,
}

impl SweepConfig {
    pub fn new(domain: Domain, n: usize) -> Self {
        Self {
            domain,
            n,
            s_grid: default_s_grid(),
            k: default_k(),
            quad_tol: default_quad_tol(),
            seed: 0,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if self.s_grid.is_empty() {
            return Err(Error::invalid("empty s grid"));
        }
        if self.s_grid.iter().any(|&s| !(s > 0.0 && s <= 0.25)) {
            return Err(Error::invalid("s grid must lie in (0, 1/4]"));
        }
        if self.s_grid.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::invalid("s grid must be strictly decreasing"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if !(self.quad_tol > 0.0) {
            return Err(Error::invalid("quad_tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub mesh: Mesh,
    pub mass: FormMatrix,
    /// one spectrum per grid order, same order as `config.s_grid`
    pub spectra: Vec<Spectrum>,
    pub log_spectrum: Spectrum,
}

impl SweepResult {
    pub fn s_grid(&self) -> &[f64] {
        &self.config.s_grid
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn eigenvalue(&self, si: usize, k: usize) -> f64 {
        self.spectra[si].eigenvalues[k - 1]
    }

    pub fn diff_quotient(&self, si: usize, k: usize) -> f64 {
        (self.eigenvalue(si, k) - 1.0) / self.config.s_grid[si]
    }

    pub fn log_eigenvalue(&self, k: usize) -> f64 {
        self.log_spectrum.eigenvalues[k - 1]
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.config.k {
            return Err(Error::invalid(format!("index k = {k} outside 1..={}", self.config.k)));
        }
        Ok(())
    }
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Assemble and solve on the configured mesh for every grid order and for the
/// logarithmic form.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mesh = mesh_domain(&cfg.domain, cfg.n)?;
    let size = mesh.interior_count();
    if cfg.k > size {
        return Err(Error::invalid(format!("k = {} exceeds the {size} basis functions", cfg.k)));
    }
    // one extra pair so the cluster of the k-th eigenvalue is resolved
    let kk = (cfg.k + 2).min(size);
    let mass = assemble_mass(&mesh)?;
    let log = assemble_log(&mesh, cfg.quad_tol)?;
    let log_spectrum = solve_generalized(&log, &mass, kk)?;
    let spectra = with_pool(cfg.workers, || {
        cfg.s_grid
            .par_iter()
            .map(|&s| {
                let a = assemble_frac(&mesh, s, cfg.quad_tol)?;
                solve_generalized(&a, &mass, kk).map_err(|e| Error::invalid(format!("solve failed at s = {s}: {e}")))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(SweepResult {
        config: cfg.clone(),
        mesh,
        mass,
        spectra,
        log_spectrum,
    })
}

/// Quadratic extrapolation to 0 through three (s, q) points (Neville).
fn extrapolate3(p: &[(f64, f64)]) -> f64 {
    let [(x0, y0), (x1, y1), (x2, y2)] = [p[0], p[1], p[2]];
    let l0 = x1 * x2 / ((x0 - x1) * (x0 - x2));
    let l1 = x0 * x2 / ((x1 - x0) * (x1 - x2));
    let l2 = x0 * x1 / ((x2 - x0) * (x2 - x1));
    l0 * y0 + l1 * y1 + l2 * y2
}

fn extrapolate2(p: &[(f64, f64)]) -> f64 {
    let [(x0, y0), (x1, y1)] = [p[0], p[1]];
    (x1 * y0 - x0 * y1) / (x1 - x0)
}

/// Richardson limit s → 0 of the difference quotients q(s) and its spread.
///
/// Uses the quadratic extrapolant through the three smallest orders; the
/// residual compares it with the extrapolant of the next triple (or with the
/// linear extrapolant when only three points exist).
pub fn richardson_slope(s: &[f64], q: &[f64]) -> Result<(f64, f64)> {
    if s.len() != q.len() {
        return Err(Error::DimensionMismatch("orders and quotients differ in length".into()));
    }
    if s.len() < 3 {
        return Err(Error::invalid("slope fit needs at least 3 orders"));
    }
    let mut pts: Vec<(f64, f64)> = s.iter().copied().zip(q.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best = extrapolate3(&pts[..3]);
    let other = if pts.len() >= 4 {
        extrapolate3(&pts[1..4])
    } else {
        extrapolate2(&pts[..2])
    };
    Ok((best, (best - other).abs()))
}

/// Richardson-extrapolated slope of λ_{k,s} at s = 0 with its spread.
pub fn slope_fit(res: &SweepResult, k: usize) -> Result<(f64, f64)> {
    res.check_k(k)?;
    let q: Vec<f64> = (0..res.spectra.len()).map(|i| res.diff_quotient(i, k)).collect();
    richardson_slope(res.s_grid(), &q)
}

/// Cluster subspace distance between φ_{k,s} and φ_{k,L} along the grid;
/// `None` where the cluster dimensions differ.
pub fn eigfun_convergence(res: &SweepResult, k: usize) -> Result<Vec<Option<f64>>> {
    res.check_k(k)?;
    let (_, v) = res.log_spectrum.cluster_block(k - 1);
    res.spectra
        .iter()
        .map(|sp| {
            let (_, u) = sp.cluster_block(k - 1);
            if u.ncols() != v.ncols() {
                return Ok(None);
            }
            subspace_distance(&u, &v, &res.mass.entries).map(Some)
        })
        .collect()
}

/// ‖φ_{k,s} − φ_{k,L}‖_{L²} under the sign convention, with the sign of the
/// mass inner product (positive when aligned).
pub fn aligned_distance(res: &SweepResult, k: usize) -> Result<Vec<(f64, f64)>> {
    res.check_k(k)?;
    let m = &res.mass.entries;
    let phi_l = res.log_spectrum.vector(k - 1);
    Ok(res
        .spectra
        .iter()
        .map(|sp| {
            let phi = sp.vector(k - 1);
            let d = &phi - &phi_l;
            (d.dot(&(m * &d)).sqrt(), phi.dot(&(m * &phi_l)))
        })
        .collect())
}

/// Max interior nodal magnitude of φ_{k,s} per grid order.
pub fn linfty_profile(res: &SweepResult, k: usize) -> Result<Vec<f64>> {
    res.check_k(k)?;
    Ok(res
        .spectra
        .iter()
        .map(|sp| sp.vector(k - 1).amax())
        .collect())
}

/// max over interior nodes of |φ_{k,s}(x)| / δ_Ω(x)^s per grid order.
pub fn decay_profile(res: &SweepResult, k: usize) -> Result<Vec<f64>> {
    res.check_k(k)?;
    let nodes = res.mesh.interior_nodes();
    Ok(res
        .spectra
        .iter()
        .zip(res.s_grid())
        .map(|(sp, &s)| {
            let v = sp.vector(k - 1);
            nodes
                .iter()
                .zip(v.iter())
                .map(|(x, phi)| phi.abs() / res.config.domain.delta(x).powf(s))
                .fold(0.0, f64::max)
        })
        .collect())
}

/// max over interior nodes with δ_Ω < 1 of |φ_{k,s}(x)|·(−ln δ_Ω(x))^τ per
/// grid order; a log-scaled boundary profile that is reported, not asserted.
pub fn log_decay_profile(res: &SweepResult, k: usize, tau: f64) -> Result<Vec<f64>> {
    res.check_k(k)?;
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("exponent τ = {tau} must be positive")));
    }
    let nodes = res.mesh.interior_nodes();
    Ok(res
        .spectra
        .iter()
        .map(|sp| {
            let v = sp.vector(k - 1);
            nodes
                .iter()
                .zip(v.iter())
                .filter_map(|(x, phi)| {
                    let d = res.config.domain.delta(x);
                    (d < 1.0).then(|| phi.abs() * (-d.ln()).powf(tau))
                })
                .fold(0.0, f64::max)
        })
        .collect())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn check_ball(domain: &Domain, x0: &[f64], r: f64) -> Result<()> {
    if !(r > 0.0) || r > domain.delta(x0) {
        return Err(Error::invalid(format!(
            "ball of radius {r} around {x0:?} leaves the domain (δ = {})",
            domain.delta(x0)
        )));
    }
    Ok(())
}

/// Oscillation max − min of nodal values of φ_{k,s} in B_r(x0), per order
/// (outer) and radius (inner).
pub fn oscillation_modulus(res: &SweepResult, k: usize, x0: &[f64], radii: &[f64]) -> Result<Vec<Vec<f64>>> {
    res.check_k(k)?;
    for &r in radii {
        check_ball(&res.config.domain, x0, r)?;
    }
    let nodes = res.mesh.interior_nodes();
    Ok(res
        .spectra
        .iter()
        .map(|sp| {
            let v = sp.vector(k - 1);
            radii
                .iter()
                .map(|&r| {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for (x, phi) in nodes.iter().zip(v.iter()) {
                        if dist(x, x0) <= r {
                            lo = lo.min(*phi);
                            hi = hi.max(*phi);
                        }
                    }
                    if hi >= lo {
                        hi - lo
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect())
}

/// sup over node pairs in B_{r/8}(x0) of |φ(x) − φ(y)| / |x − y|^{3s}, per order.
pub fn holder_quotient(res: &SweepResult, k: usize, x0: &[f64], r: f64) -> Result<Vec<f64>> {
    res.check_k(k)?;
    check_ball(&res.config.domain, x0, r)?;
    let nodes = res.mesh.interior_nodes();
    let inside: Vec<usize> = (0..nodes.len()).filter(|&i| dist(&nodes[i], x0) <= r / 8.0).collect();
    Ok(res
        .spectra
        .iter()
        .zip(res.s_grid())
        .map(|(sp, &s)| {
            let v = sp.vector(k - 1);
            let mut best = 0.0f64;
            for (a, &i) in inside.iter().enumerate() {
                for &j in &inside[a + 1..] {
                    let q = (v[i] - v[j]).abs() / dist(&nodes[i], &nodes[j]).powf(3.0 * s);
                    best = best.max(q);
                }
            }
            best
        })
        .collect())
}

/// ∫_{|y|<t0} (φ(x) − φ(x+y)) |y|^{−1−2s} dy for a piecewise-linear φ, in
/// closed form on each linear piece of the symmetrized difference.
pub fn truncated_integral(phi: &PiecewiseLinear, x: f64, s: f64, t0: f64) -> f64 {
    // breakpoints of D(y) = 2φ(x) − φ(x+y) − φ(x−y) on (0, t0)
    let mut ys: Vec<f64> = phi
        .nodes
        .iter()
        .map(|n| (n - x).abs())
        .filter(|y| *y > 0.0 && *y < t0)
        .collect();
    ys.push(0.0);
    ys.push(t0);
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let fx = phi.eval(x);
    let d = |y: f64| 2.0 * fx - phi.eval(x + y) - phi.eval(x - y);
    let p = 2.0 * s;
    let mut acc = 0.0;
    for w in ys.windows(2) {
        let (a, b) = (w[0], w[1]);
        // D linear on (a, b): evaluate at interior points to avoid kinks at the ends
        let (ya, yb) = (a + 0.25 * (b - a), a + 0.75 * (b - a));
        let beta = (d(yb) - d(ya)) / (yb - ya);
        let alpha = d(ya) - beta * ya;
        // ∫_a^b (α + βy) y^{−1−p} dy
        let lin = beta * (b.powf(1.0 - p) - a.powf(1.0 - p)) / (1.0 - p);
        let con = if a == 0.0 {
            0.0
        } else {
            alpha * (a.powf(-p) - b.powf(-p)) / p
        };
        acc += lin + con;
    }
    acc
}

/// Per order: max over interior nodes with δ_Ω > r of the truncated-kernel
/// integral of φ_{k,s} (1D meshes).
pub fn truncated_kernel_stat(res: &SweepResult, k: usize, t0: f64, r: f64) -> Result<Vec<f64>> {
    res.check_k(k)?;
    if !(t0 > 0.0 && r > 0.0) {
        return Err(Error::invalid("t0 and r must be positive"));
    }
    if res.mesh.dim() != 1 {
        return Err(Error::Unsupported("truncated-kernel statistic on 1D meshes only".into()));
    }
    let nodes = res.mesh.interior_nodes();
    let qualifying: Vec<usize> = (0..nodes.len()).filter(|&i| res.config.domain.delta(&nodes[i]) > r).collect();
    if qualifying.is_empty() {
        return Err(Error::invalid(format!("no interior node has δ_Ω > {r}")));
    }
    res.spectra
        .iter()
        .zip(res.s_grid())
        .map(|(sp, &s)| {
            let v = sp.vector(k - 1);
            let phi = PiecewiseLinear::from_interior(&res.mesh, v.as_slice())?;
            Ok(qualifying
                .iter()
                .map(|&i| truncated_integral(&phi, nodes[i][0], s, t0).abs())
                .fold(0.0, f64::max))
        })
        .collect()
}

/// Sampled Hölder–Zygmund seminorm and the worst violation of the
/// first-difference bound |v(x+h) − v(x)| ≤ v_τ |h|^τ / (1 − 2^{τ−1}).
///
/// Each sample (x, h) is extended by the dyadic chain (x, 2^j h) so the
/// seminorm covers the scales the bound telescopes over.
pub fn zygmund_check<F: Fn(f64) -> f64>(v: F, tau: f64, sample: &[(f64, f64)]) -> Result<(f64, f64)> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid(format!("exponent τ = {tau} outside (0,1)")));
    }
    if sample.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    let mut v_tau = 0.0f64;
    for &(x, h) in sample {
        let mut hh = h;
        for _ in 0..48 {
            if hh == 0.0 {
                break;
            }
            let q = (2.0 * v(x + hh) - v(x + 2.0 * hh) - v(x)).abs() / hh.abs().powf(tau);
            v_tau = v_tau.max(q);
            hh *= 2.0;
        }
    }
    let c = v_tau / (1.0 - 2f64.powf(tau - 1.0));
    let mut worst = f64::NEG_INFINITY;
    for &(x, h) in sample {
        let viol = (v(x + h) - v(x)).abs() - c * h.abs().powf(tau);
        worst = worst.max(viol);
    }
    Ok((v_tau, worst))
}

/// max/min over a positive sequence.
pub fn max_min_ratio(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub s: f64,
    pub bk_bound: f64,
    pub lambda1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub dim: usize,
    pub zero_radius: f64,
    pub rows: Vec<BoundRow>,
    /// max relative defect of λ_{k,s}(rΩ) r^{2s} = λ_{k,s}(Ω)
    pub frac_scaling_defect: f64,
    /// max |λ_{k,L}(rΩ) + 2 ln r − λ_{k,L}(Ω)|
    pub log_scaling_defect: f64,
    /// |λ_{k,L}| change between the mesh and its coarsening, used as tolerance
    pub log_mesh_tolerance: f64,
    pub checks: Vec<Check>,
}

/// Lower-bound, zero-radius and scaling checks on Ω = (−1, 1) with `n` panels.
pub fn bound_checks(dim: usize, s_grid: &[f64], n: usize, k: usize, quad_tol: f64) -> Result<BoundReport> {
    if dim != 1 {
        return Err(Error::Unsupported("Galerkin bound checks are implemented for N = 1".into()));
    }
    let unit = Domain::Interval { a: -1.0, b: 1.0 };
    let r = 2.0f64;
    let mesh = mesh_domain(&unit, n)?;
    let big = mesh_domain(&unit.scaled(r), n)?;
    let coarse = mesh_domain(&unit, n / 2)?;
    let m = assemble_mass(&mesh)?;
    let mb = assemble_mass(&big)?;
    let mc = assemble_mass(&coarse)?;
    let k = k.min(mesh.interior_count()).min(coarse.interior_count());

    let mut rows = Vec::new();
    let mut frac_defect = 0.0f64;
    for &s in s_grid {
        let a = solve_generalized(&assemble_frac(&mesh, s, quad_tol)?, &m, k)?;
        let b = solve_generalized(&assemble_frac(&big, s, quad_tol)?, &mb, k)?;
        for j in 0..k {
            let scaled = b.eigenvalues[j] * r.powf(2.0 * s);
            frac_defect = frac_defect.max((scaled - a.eigenvalues[j]).abs() / a.eigenvalues[j].abs());
        }
        rows.push(BoundRow {
            s,
            bk_bound: ball_eigenvalue_bound(dim, s)?,
            lambda1: a.eigenvalues[0],
        });
    }
    let la = solve_generalized(&assemble_log(&mesh, quad_tol)?, &m, k)?;
    let lb = solve_generalized(&assemble_log(&big, quad_tol)?, &mb, k)?;
    let lc = solve_generalized(&assemble_log(&coarse, quad_tol)?, &mc, k)?;
    let mut log_defect = 0.0f64;
    let mut mesh_tol = 0.0f64;
    for j in 0..k {
        log_defect = log_defect.max((lb.eigenvalues[j] + 2.0 * r.ln() - la.eigenvalues[j]).abs());
        mesh_tol = mesh_tol.max((la.eigenvalues[j] - lc.eigenvalues[j]).abs());
    }
    let bk_ok = rows.iter().all(|row| row.lambda1 >= row.bk_bound);
    let checks = vec![
        Check::new("bk_lower_bound", bk_ok, format!("{} orders", rows.len())),
        Check::new("frac_scaling", frac_defect <= 1e-8, format!("relative defect {frac_defect:e}")),
        Check::new(
            "log_scaling",
            log_defect <= mesh_tol.max(1e-10),
            format!("defect {log_defect:e}, mesh tolerance {mesh_tol:e}"),
        ),
    ];
    Ok(BoundReport {
        dim,
        zero_radius: zero_radius(dim)?,
        rows,
        frac_scaling_defect: frac_defect,
        log_scaling_defect: log_defect,
        log_mesh_tolerance: mesh_tol,
        checks,
    })
}

/// Diagnostics evaluated on one sweep, with the geometry they used.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub t0: f64,
    pub margin: f64,
    /// per k (outer), per order (inner)
    pub supnorm: Vec<Vec<f64>>,
    pub decay: Vec<Vec<f64>>,
    pub osc: Vec<Vec<Vec<f64>>>,
    /// `None` on meshes where the statistic is not available
    pub kernel: Vec<Option<Vec<f64>>>,
}

fn domain_center(d: &Domain) -> Vec<f64> {
    match *d {
        Domain::Interval { a, b } => vec![0.5 * (a + b)],
        Domain::Rectangle { x, y } => vec![0.5 * (x[0] + x[1]), 0.5 * (y[0] + y[1])],
    }
}

/// Pointwise diagnostics at the domain center; radii are {0.2, 0.1, 0.05}·δ,
/// the truncation radius 0.25·δ and the interior margin 0.5·δ with δ the
/// center's distance to the boundary (for (−1,1): 0.2/0.1/0.05, 0.25, 0.5).
pub fn diagnostics(res: &SweepResult) -> Result<Diagnostics> {
    let center = domain_center(&res.config.domain);
    let delta = res.config.domain.delta(&center);
    let radii = vec![0.2 * delta, 0.1 * delta, 0.05 * delta];
    let (t0, margin) = (0.25 * delta, 0.5 * delta);
    let mut out = Diagnostics {
        center: center.clone(),
        radii: radii.clone(),
        t0,
        margin,
        supnorm: Vec::new(),
        decay: Vec::new(),
        osc: Vec::new(),
        kernel: Vec::new(),
    };
    for k in 1..=res.k() {
        out.supnorm.push(linfty_profile(res, k)?);
        out.decay.push(decay_profile(res, k)?);
        out.osc.push(oscillation_modulus(res, k, &center, &radii)?);
        out.kernel.push(if res.mesh.dim() == 1 {
            Some(truncated_kernel_stat(res, k, t0, margin)?)
        } else {
            None
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeRow {
    pub k: usize,
    pub slope: f64,
    pub residual: f64,
    pub lambda_l: f64,
    pub relerr: f64,
}

pub fn slope_table(res: &SweepResult) -> Result<Vec<SlopeRow>> {
    (1..=res.k())
        .map(|k| {
            let (slope, residual) = slope_fit(res, k)?;
            let lambda_l = res.log_eigenvalue(k);
            Ok(SlopeRow {
                k,
                slope,
                residual,
                lambda_l,
                relerr: (slope - lambda_l).abs() / lambda_l.abs(),
            })
        })
        .collect()
}

/// Relative slope tolerance of the main check.
pub const SLOPE_REL_TOL: f64 = 0.05;
/// Bound on the eigenfunction cluster distance at the smallest order.
pub const EIGFUN_TOL: f64 = 0.05;

/// Pass/fail checks over a finished sweep.
pub fn evaluate_checks(res: &SweepResult, diag: &Diagnostics) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let kmax = res.k().min(4);
    let last = res.spectra.len() - 1;

    // ascending order and simple ground state
    let ascending = res
        .spectra
        .iter()
        .all(|sp| sp.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    let simple = res.spectra.iter().all(|sp| sp.cluster_block(0).0.len() == 1);
    checks.push(Check::new("eigenvalue_order", ascending && simple, "ascending, λ₁ simple"));

    // λ_{k,s} → 1 monotonically as s decreases
    let mut to_one = true;
    for k in 1..=kmax {
        let gaps: Vec<f64> = (0..res.spectra.len()).map(|i| (res.eigenvalue(i, k) - 1.0).abs()).collect();
        to_one &= gaps.windows(2).all(|w| w[1] <= w[0]);
    }
    checks.push(Check::new("limit_one", to_one, format!("k ≤ {kmax}")));

    let slopes = if res.spectra.len() >= 3 { Some(slope_table(res)?) } else { None };
    if let Some(rows) = &slopes {
        let worst = rows[..kmax].iter().map(|r| r.relerr).fold(0.0, f64::max);
        checks.push(Check::new(
            "slopes",
            worst <= SLOPE_REL_TOL,
            format!("max relative error {worst:.3e} for k ≤ {kmax}"),
        ));
        // Richardson limits bracketed by the discrete log eigenvalues
        let l1 = res.log_eigenvalue(1);
        let bracket = rows.iter().all(|r| {
            let tol = 10.0 * r.residual + 1e-8 * r.lambda_l.abs().max(1.0);
            r.slope >= l1 - tol && r.slope <= r.lambda_l + tol
        });
        checks.push(Check::new("bracketing", bracket, "λ_{1,L} ≤ slope_k ≤ λ_{k,L} within extrapolation spread"));
    }

    // eigenfunction convergence
    let mut worst_dist = 0.0f64;
    let mut comparable = true;
    for k in 1..=kmax {
        match eigfun_convergence(res, k)?[last] {
            Some(d) => worst_dist = worst_dist.max(d),
            None => comparable = false,
        }
    }
    checks.push(Check::new(
        "eigfun_distance",
        comparable && worst_dist <= EIGFUN_TOL,
        format!("max cluster distance {worst_dist:.3e} at s = {}", res.s_grid()[last]),
    ));
    let aligned = aligned_distance(res, 1)?;
    let monotone = aligned.windows(2).all(|w| w[1].0 <= 1.1 * w[0].0) && aligned.iter().all(|a| a.1 > 0.0);
    checks.push(Check::new("ground_state_alignment", monotone, "positive alignment, distance decreasing within 10%"));

    // uniformity surrogates
    let mut ratio = 0.0f64;
    for k in 0..kmax {
        ratio = ratio.max(max_min_ratio(&diag.supnorm[k])).max(max_min_ratio(&diag.decay[k]));
        if let Some(kern) = &diag.kernel[k] {
            ratio = ratio.max(max_min_ratio(kern));
        }
    }
    checks.push(Check::new(
        "uniform_bounds",
        ratio <= UNIFORMITY_FACTOR,
        format!("max/min ratio {ratio:.3}"),
    ));
    let osc_monotone = diag.osc[..kmax]
        .iter()
        .flatten()
        .all(|per_r| per_r.windows(2).all(|w| w[1] <= w[0]));
    checks.push(Check::new("oscillation_monotone", osc_monotone, "osc nonincreasing as the radius shrinks"));

    // Galerkin lower bound, valid for intervals by scaling from (−1, 1)
    if let Domain::Interval { a, b } = res.config.domain {
        let radius = 0.5 * (b - a);
        let mut ok = true;
        for (i, &s) in res.s_grid().iter().enumerate() {
            ok &= res.eigenvalue(i, 1) >= radius.powf(-2.0 * s) * ball_eigenvalue_bound(1, s)?;
        }
        checks.push(Check::new("bk_lower_bound", ok, "λ_{1,s} ≥ R^{−2s}·2^{2s}Γ(1+s)Γ(1/2+s)/Γ(1/2)"));
    }

    // Zygmund first-difference bound on the ground state interpolant
    if res.mesh.dim() == 1 {
        let sp = &res.spectra[last];
        let phi = PiecewiseLinear::from_interior(&res.mesh, sp.vector(0).as_slice())?;
        let (lo, hi) = match res.config.domain {
            Domain::Interval { a, b } => (a, b),
            _ => unreachable!(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(res.config.seed);
        let sample: Vec<(f64, f64)> = (0..1000)
            .map(|_| (rng.gen_range(lo..hi), rng.gen_range(1e-4..0.5) * (hi - lo)))
            .collect();
        let (_, viol) = zygmund_check(|x| phi.eval(x), 0.5, &sample)?;
        checks.push(Check::new("zygmund_bound", viol <= 0.0, format!("worst violation {viol:.3e}")));
    }
    Ok(checks)
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

/// Write the CSV tables and report.json; returns whether every check passed.
pub fn write_outputs(res: &SweepResult, dir: &Path) -> Result<bool> {
    std::fs::create_dir_all(dir)?;
    let k = res.k();
    let mut eig = String::from("s,k,lambda,diffquot\n");
    for (i, &s) in res.s_grid().iter().enumerate() {
        for j in 1..=k {
            writeln!(eig, "{},{},{},{}", fmt(s), j, fmt(res.eigenvalue(i, j)), fmt(res.diff_quotient(i, j))).unwrap();
        }
    }
    std::fs::write(dir.join("eigenvalues.csv"), eig)?;

    let mut logs = String::from("k,lambda_L\n");
    for j in 1..=k {
        writeln!(logs, "{},{}", j, fmt(res.log_eigenvalue(j))).unwrap();
    }
    std::fs::write(dir.join("logeigs.csv"), logs)?;

    let mut slopes = String::from("k,slope,residual,lambda_L,relerr\n");
    if res.spectra.len() >= 3 {
        for row in slope_table(res)? {
            writeln!(
                slopes,
                "{},{},{},{},{}",
                row.k,
                fmt(row.slope),
                fmt(row.residual),
                fmt(row.lambda_l),
                fmt(row.relerr)
            )
            .unwrap();
        }
    }
    std::fs::write(dir.join("slopes.csv"), slopes)?;

    let diag = diagnostics(res)?;
    let mut d = String::from("s,k,supnorm,decaystat");
    for i in 1..=diag.radii.len() {
        write!(d, ",osc_r{i}").unwrap();
    }
    d.push_str(",kernelstat\n");
    for (i, &s) in res.s_grid().iter().enumerate() {
        for j in 0..k {
            write!(d, "{},{},{},{}", fmt(s), j + 1, fmt(diag.supnorm[j][i]), fmt(diag.decay[j][i])).unwrap();
            for o in &diag.osc[j][i] {
                write!(d, ",{}", fmt(*o)).unwrap();
            }
            let kern = diag.kernel[j].as_ref().map_or("nan".to_string(), |v| fmt(v[i]));
            writeln!(d, ",{kern}").unwrap();
        }
    }
    std::fs::write(dir.join("diagnostics.csv"), d)?;

    let checks = evaluate_checks(res, &diag)?;
    let all = checks.iter().all(|c| c.pass);
    let report = serde_json::json!({
        "domain": res.config.domain.id(),
        "n": res.config.n,
        "pass": all,
        "checks": checks,
    });
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(all)
}

/// Mass-normalized nodal vector of the k-th eigenfunction at grid index si.
pub fn eigenvector(res: &SweepResult, si: usize, k: usize) -> DVector<f64> {
    res.spectra[si].vector(k - 1)
}

/// Cluster block of φ_{k,L}.
pub fn log_cluster(res: &SweepResult, k: usize) -> DMatrix<f64> {
    res.log_spectrum.cluster_block(k - 1).1
}
