//! Continuous piecewise-linear Galerkin matrices for E_s, E_L and the L²
//! pairing, with basis functions extended by zero outside the domain.
//!
//! On a uniform grid the stiffness matrices are Toeplitz: the (i, j) entry
//! depends only on the offset m = i − j and equals the operator applied to the
//! autocorrelation of the hat function, which is h·B(·/h) with B the centered
//! cubic B-spline. In 1D both operators act on B in closed form through fourth
//! central differences:
//!
//! ```text
//! (−Δ)^s B(m) = C_{1,s} / (2s(1−2s)(2−2s)(3−2s)) · Δ⁴|t|^{3−2s} (m)
//! L_Δ B(m)    = (1/12) ((ρ_1 + 11/3) Δ⁴|t|³ − 2 Δ⁴ |t|³ ln|t|) (m)
//! ```
//!
//! Far offsets use Gauss–Legendre on the four polynomial pieces of B instead,
//! since the fourth difference cancels badly there.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{frac_constant, log_constants};
use crate::error::{Error, Result};
use crate::forms::{energy_log, energy_s};
use crate::operators::{frac_lap_point, log_lap_point};
use crate::quadrature::GaussLegendre;
use crate::testlab::{BBox, Domain, Field};

/// Grid on an interval or rectangle; basis functions sit on interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub domain: Domain,
    /// node coordinates per axis, boundary nodes included
    pub axes: Vec<Vec<f64>>,
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Interior nodes per axis.
    pub fn interior_per_axis(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len() - 2).collect()
    }

    pub fn interior_count(&self) -> usize {
        self.interior_per_axis().iter().product()
    }

    /// Coordinates of the p-th interior basis function (x fastest).
    pub fn interior_node(&self, p: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        let mut rest = p;
        for axis in &self.axes {
            let n = axis.len() - 2;
            out.push(axis[1 + rest % n]);
            rest /= n;
        }
        out
    }

    pub fn interior_nodes(&self) -> Vec<Vec<f64>> {
        (0..self.interior_count()).map(|p| self.interior_node(p)).collect()
    }

    /// Uniform step per axis, `None` if some axis is not uniform.
    pub fn uniform_steps(&self) -> Option<Vec<f64>> {
        self.axes
            .iter()
            .map(|a| {
                let n = a.len() - 1;
                let h = (a[n] - a[0]) / n as f64;
                let uniform = a
                    .iter()
                    .enumerate()
                    .all(|(i, x)| (x - (a[0] + i as f64 * h)).abs() <= 1e-12 * h.max(a[0].abs()));
                uniform.then_some(h)
            })
            .collect()
    }
}

fn check_axis(nodes: &[f64]) -> Result<()> {
    if nodes.len() < 3 {
        return Err(Error::invalid("a mesh axis needs at least 2 panels"));
    }
    if nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("mesh nodes must be strictly increasing"));
    }
    Ok(())
}

fn uniform_axis(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / n as f64;
    (0..=n).map(|i| if i == n { b } else { a + i as f64 * h }).collect()
}

/// Uniform mesh of (a, b) with n panels.
pub fn mesh_interval(a: f64, b: f64, n: usize) -> Result<Mesh> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 panels, got {n}")));
    }
    let domain = Domain::Interval { a, b };
    domain.validate()?;
    Ok(Mesh {
        domain,
        axes: vec![uniform_axis(a, b, n)],
    })
}

/// Interval mesh with arbitrary nodes; the first and last are the endpoints.
pub fn mesh_from_nodes(nodes: Vec<f64>) -> Result<Mesh> {
    check_axis(&nodes)?;
    let domain = Domain::Interval {
        a: nodes[0],
        b: nodes[nodes.len() - 1],
    };
    Ok(Mesh {
        domain,
        axes: vec![nodes],
    })
}

/// Uniform tensor mesh of a rectangle.
pub fn mesh_rect(x: [f64; 2], y: [f64; 2], nx: usize, ny: usize) -> Result<Mesh> {
    if nx < 2 || ny < 2 {
        return Err(Error::invalid("need at least 2 panels per axis"));
    }
    let domain = Domain::Rectangle { x, y };
    domain.validate()?;
    Ok(Mesh {
        domain,
        axes: vec![uniform_axis(x[0], x[1], nx), uniform_axis(y[0], y[1], ny)],
    })
}

/// Uniform mesh of a configured domain with n panels per axis.
pub fn mesh_domain(domain: &Domain, n: usize) -> Result<Mesh> {
    match *domain {
        Domain::Interval { a, b } => mesh_interval(a, b, n),
        Domain::Rectangle { x, y } => mesh_rect(x, y, n, n),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormKind {
    Frac,
    Log,
    Mass,
}

impl FormKind {
    fn code(self) -> u8 {
        match self {
            FormKind::Frac => 0,
            FormKind::Log => 1,
            FormKind::Mass => 2,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(FormKind::Frac),
            1 => Ok(FormKind::Log),
            2 => Ok(FormKind::Mass),
            _ => Err(Error::Format(format!("unknown matrix kind code {c}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormMatrix {
    pub kind: FormKind,
    /// order of the fractional form; 0 for log and mass
    pub s: f64,
    pub entries: DMatrix<f64>,
    pub quad_tol: f64,
    /// space dimension N
    pub dim: usize,
}

impl FormMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    /// max |A_ij − A_ji|
    pub fn asymmetry(&self) -> f64 {
        let a = &self.entries;
        let mut worst = 0.0f64;
        for i in 0..a.nrows() {
            for j in 0..i {
                worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
            }
        }
        worst
    }

    /// xᵀ A x
    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(x);
        v.dot(&(&self.entries * &v))
    }
}

/// Centered cubic B-spline, the autocorrelation of the unit hat.
pub fn cubic_bspline(t: f64) -> f64 {
    let a = t.abs();
    if a >= 2.0 {
        0.0
    } else if a >= 1.0 {
        let b = 2.0 - a;
        b * b * b / 6.0
    } else {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    }
}

fn fourth_difference(f: impl Fn(f64) -> f64, m: f64) -> f64 {
    f(m - 2.0) - 4.0 * f(m - 1.0) + 6.0 * f(m) - 4.0 * f(m + 1.0) + f(m + 2.0)
}

/// Offsets from which the fourth-difference formulas are replaced by quadrature.
const FAR_OFFSET: usize = 4;

fn far_integral(kernel: impl Fn(f64) -> f64, m: f64) -> f64 {
    thread_local! {
        static GL: GaussLegendre = GaussLegendre::new(24);
    }
    GL.with(|gl| {
        [-2.0, -1.0, 0.0, 1.0]
            .iter()
            .map(|&a| gl.integrate(|t| cubic_bspline(t) * kernel((m - t).abs()), a, a + 1.0))
            .sum()
    })
}

/// (−Δ)^s B at integer offsets 0..count.
pub fn frac_offsets(s: f64, count: usize) -> Result<Vec<f64>> {
    let c = frac_constant(1, s)?;
    let a = 1.0 - 2.0 * s;
    // t² (|t|^{1−2s} − 1)/(1−2s); Δ⁴ annihilates the t² subtracted here
    let g = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        let l = t.abs().ln();
        let q = if a == 0.0 { l } else { (a * l).exp_m1() / a };
        t * t * q
    };
    let k = c / (2.0 * s * (2.0 - 2.0 * s) * (3.0 - 2.0 * s));
    Ok((0..count)
        .map(|m| {
            if m < FAR_OFFSET {
                k * fourth_difference(g, m as f64)
            } else {
                -c * far_integral(|d| d.powf(-1.0 - 2.0 * s), m as f64)
            }
        })
        .collect())
}

/// L_Δ B at integer offsets 0..count.
pub fn log_offsets(count: usize) -> Result<Vec<f64>> {
    let lc = log_constants(1)?;
    let cube = |t: f64| t.abs().powi(3);
    let cube_log = |t: f64| if t == 0.0 { 0.0 } else { t.abs().powi(3) * t.abs().ln() };
    Ok((0..count)
        .map(|m| {
            if m < FAR_OFFSET {
                let mf = m as f64;
                ((lc.rho + 11.0 / 3.0) * fourth_difference(cube, mf) - 2.0 * fourth_difference(cube_log, mf)) / 12.0
            } else {
                -lc.c_log * far_integral(|d| 1.0 / d, m as f64)
            }
        })
        .collect())
}

fn toeplitz(values: &[f64]) -> DMatrix<f64> {
    let n = values.len();
    DMatrix::from_fn(n, n, |i, j| values[i.abs_diff(j)])
}

fn check_quad_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("quad_tol must be positive, got {tol}")));
    }
    Ok(())
}

pub fn assemble_mass(mesh: &Mesh) -> Result<FormMatrix> {
    let per_axis: Vec<DMatrix<f64>> = mesh.axes.iter().map(|a| mass_1d(a)).collect();
    let entries = kron_axes(&per_axis);
    Ok(FormMatrix {
        kind: FormKind::Mass,
        s: 0.0,
        entries,
        quad_tol: 0.0,
        dim: mesh.dim(),
    })
}

fn mass_1d(nodes: &[f64]) -> DMatrix<f64> {
    let n = nodes.len() - 2;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let (hl, hr) = (nodes[i + 1] - nodes[i], nodes[i + 2] - nodes[i + 1]);
        m[(i, i)] = (hl + hr) / 3.0;
        if i + 1 < n {
            m[(i, i + 1)] = hr / 6.0;
            m[(i + 1, i)] = hr / 6.0;
        }
    }
    m
}

/// Kronecker product with the x axis varying fastest.
fn kron_axes(mats: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut acc = mats[0].clone();
    for m in &mats[1..] {
        acc = m.kronecker(&acc);
    }
    acc
}

/// Galerkin matrix of E_s.
pub fn assemble_frac(mesh: &Mesh, s: f64, quad_tol: f64) -> Result<FormMatrix> {
    check_quad_tol(quad_tol)?;
    let entries = match (mesh.dim(), mesh.uniform_steps()) {
        (1, Some(h)) => {
            let h = h[0];
            let vals = frac_offsets(s, mesh.interior_count())?;
            toeplitz(&vals) * h.powf(1.0 - 2.0 * s)
        }
        (1, None) => assemble_by_forms(mesh, |u, v| energy_s(u, v, s, quad_tol).map(|f| f.value))?,
        (2, Some(h)) => assemble_rect_uniform(mesh, &h, Some(s), quad_tol)?,
        _ => return Err(Error::Unsupported("nonuniform rectangle meshes".into())),
    };
    Ok(FormMatrix {
        kind: FormKind::Frac,
        s,
        entries,
        quad_tol,
        dim: mesh.dim(),
    })
}

/// Galerkin matrix of E_L.
pub fn assemble_log(mesh: &Mesh, quad_tol: f64) -> Result<FormMatrix> {
    check_quad_tol(quad_tol)?;
    let entries = match (mesh.dim(), mesh.uniform_steps()) {
        (1, Some(h)) => {
            let h = h[0];
            let n = mesh.interior_count();
            let vals = log_offsets(n)?;
            let two_ln_h = 2.0 * h.ln();
            let vals: Vec<f64> = vals
                .iter()
                .enumerate()
                .map(|(m, v)| h * (v - two_ln_h * cubic_bspline(m as f64)))
                .collect();
            toeplitz(&vals)
        }
        (1, None) => assemble_by_forms(mesh, |u, v| energy_log(u, v, quad_tol).map(|f| f.value))?,
        (2, Some(h)) => assemble_rect_uniform(mesh, &h, None, quad_tol)?,
        _ => return Err(Error::Unsupported("nonuniform rectangle meshes".into())),
    };
    Ok(FormMatrix {
        kind: FormKind::Log,
        s: 0.0,
        entries,
        quad_tol,
        dim: mesh.dim(),
    })
}

/// Q1 assembly on a rectangle mesh; same contracts as the 1D assemblers.
pub fn assemble_rect(mesh: &Mesh, kind: FormKind, s: f64, quad_tol: f64) -> Result<FormMatrix> {
    if mesh.dim() != 2 {
        return Err(Error::DimensionMismatch("assemble_rect needs a rectangle mesh".into()));
    }
    match kind {
        FormKind::Frac => assemble_frac(mesh, s, quad_tol),
        FormKind::Log => assemble_log(mesh, quad_tol),
        FormKind::Mass => assemble_mass(mesh),
    }
}

/// Hat function with arbitrary left/right widths.
#[derive(Debug, Clone, Copy)]
pub struct Hat {
    pub left: f64,
    pub center: f64,
    pub right: f64,
}

impl Field for Hat {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: &[f64]) -> f64 {
        let x = x[0];
        if x <= self.left || x >= self.right {
            0.0
        } else if x <= self.center {
            (x - self.left) / (self.center - self.left)
        } else {
            (self.right - x) / (self.right - self.center)
        }
    }
    fn support_box(&self) -> Option<BBox> {
        Some(BBox {
            lo: vec![self.left],
            hi: vec![self.right],
        })
    }
    fn kinks(&self) -> Vec<f64> {
        vec![self.left, self.center, self.right]
    }
}

fn mesh_hats(mesh: &Mesh) -> Vec<Hat> {
    let a = &mesh.axes[0];
    (1..a.len() - 1)
        .map(|i| Hat {
            left: a[i - 1],
            center: a[i],
            right: a[i + 1],
        })
        .collect()
}

/// Entry-by-entry assembly through the quadrature forms (nonuniform meshes).
fn assemble_by_forms(mesh: &Mesh, form: impl Fn(&Hat, &Hat) -> Result<f64> + Sync) -> Result<DMatrix<f64>> {
    let hats = mesh_hats(mesh);
    let n = hats.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            form(&hats[i], &hats[j]).map_err(|e| match e {
                Error::Quadrature { context, achieved, requested } => Error::Quadrature {
                    context: format!("{context} (entry {i},{j})"),
                    achieved,
                    requested,
                },
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let mut m = DMatrix::zeros(n, n);
    for (&(i, j), v) in pairs.iter().zip(values) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    Ok(m)
}

/// Autocorrelation of the Q1 hat: h_x h_y B(x/h_x) B(y/h_y).
#[derive(Debug, Clone, Copy)]
struct TensorSpline {
    hx: f64,
    hy: f64,
}

impl Field for TensorSpline {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.hx * self.hy * cubic_bspline(x[0] / self.hx) * cubic_bspline(x[1] / self.hy)
    }
    fn support_box(&self) -> Option<BBox> {
        Some(BBox {
            lo: vec![-2.0 * self.hx, -2.0 * self.hy],
            hi: vec![2.0 * self.hx, 2.0 * self.hy],
        })
    }
}

/// ∫∫ G(y) k(|z − y|) dy by tensor Gauss–Legendre over the 16 pieces of G.
fn tensor_far(g: &TensorSpline, z: [f64; 2], kernel: impl Fn(f64) -> f64) -> f64 {
    let gl = GaussLegendre::new(16);
    let mut acc = 0.0;
    for px in -2..2 {
        for py in -2..2 {
            let (ax, ay) = (px as f64 * g.hx, py as f64 * g.hy);
            acc += gl.integrate(
                |yx| {
                    gl.integrate(
                        |yy| {
                            let d = ((z[0] - yx).powi(2) + (z[1] - yy).powi(2)).sqrt();
                            g.value(&[yx, yy]) * kernel(d)
                        },
                        ay,
                        ay + g.hy,
                    )
                },
                ax,
                ax + g.hx,
            );
        }
    }
    acc
}

fn assemble_rect_uniform(mesh: &Mesh, h: &[f64], s: Option<f64>, quad_tol: f64) -> Result<DMatrix<f64>> {
    let g = TensorSpline { hx: h[0], hy: h[1] };
    let per = mesh.interior_per_axis();
    let (nx, ny) = (per[0], per[1]);
    let scale = h[0] * h[1] * s.map_or(1.0, |s| h[0].min(h[1]).powf(-2.0 * s));
    let offsets: Vec<(usize, usize)> = (0..ny).flat_map(|my| (0..nx).map(move |mx| (mx, my))).collect();
    let values: Vec<f64> = offsets
        .par_iter()
        .map(|&(mx, my)| {
            let z = [mx as f64 * g.hx, my as f64 * g.hy];
            let near = mx <= 2 && my <= 2;
            match s {
                Some(s) => {
                    if near {
                        frac_lap_point(&g, s, &z, quad_tol * scale).map(|e| e.value)
                    } else {
                        let c = frac_constant(2, s)?;
                        Ok(-c * tensor_far(&g, z, |d| d.powf(-2.0 - 2.0 * s)))
                    }
                }
                None => {
                    if near {
                        log_lap_point(&g, &z, quad_tol * scale).map(|e| e.value)
                    } else {
                        let lc = log_constants(2)?;
                        Ok(-lc.c_log * tensor_far(&g, z, |d| 1.0 / (d * d)))
                    }
                }
            }
            .map_err(|e| match e {
                Error::Quadrature { context, achieved, requested } => Error::Quadrature {
                    context: format!("{context} (offset {mx},{my})"),
                    achieved,
                    requested,
                },
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let n = nx * ny;
    Ok(DMatrix::from_fn(n, n, |p, q| {
        let (ix, iy) = (p % nx, p / nx);
        let (jx, jy) = (q % nx, q / nx);
        values[ix.abs_diff(jx) + nx * iy.abs_diff(jy)]
    }))
}

/// Continuous piecewise-linear function from interior nodal values on a 1D
/// mesh, zero outside the domain.
#[derive(Debug, Clone)]
pub struct PiecewiseLinear {
    pub nodes: Vec<f64>,
    /// values at all nodes, boundary zeros included
    pub values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn from_interior(mesh: &Mesh, interior: &[f64]) -> Result<Self> {
        if mesh.dim() != 1 {
            return Err(Error::Unsupported("piecewise-linear fields are 1D".into()));
        }
        if interior.len() != mesh.interior_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} nodal values for {} interior nodes",
                interior.len(),
                mesh.interior_count()
            )));
        }
        let mut values = Vec::with_capacity(interior.len() + 2);
        values.push(0.0);
        values.extend_from_slice(interior);
        values.push(0.0);
        Ok(Self {
            nodes: mesh.axes[0].clone(),
            values,
        })
    }

    /// Index i of the element [x_i, x_{i+1}] containing x.
    fn element(&self, x: f64) -> Option<usize> {
        let n = self.nodes.len();
        if !(x >= self.nodes[0] && x <= self.nodes[n - 1]) {
            return None;
        }
        let i = self.nodes.partition_point(|&t| t <= x);
        Some(i.saturating_sub(1).min(n - 2))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.element(x) {
            None => 0.0,
            Some(i) => {
                let (a, b) = (self.nodes[i], self.nodes[i + 1]);
                let t = (x - a) / (b - a);
                self.values[i] * (1.0 - t) + self.values[i + 1] * t
            }
        }
    }
}

impl Field for PiecewiseLinear {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x[0])
    }
    fn support_box(&self) -> Option<BBox> {
        Some(BBox {
            lo: vec![self.nodes[0]],
            hi: vec![self.nodes[self.nodes.len() - 1]],
        })
    }
    fn kinks(&self) -> Vec<f64> {
        self.nodes.clone()
    }
}

const MAGIC: &[u8; 4] = b"NLFM";
const FORMAT_VERSION: u32 = 1;

/// Binary layout: magic, version u32, kind u8, N u32, s f64, size u64, then
/// size² row-major f64 entries, all little-endian.
pub fn write_matrix<W: Write>(mut w: W, m: &FormMatrix) -> Result<()> {
    let n = m.size();
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&[m.kind.code()])?;
    w.write_all(&(m.dim as u32).to_le_bytes())?;
    w.write_all(&m.s.to_le_bytes())?;
    w.write_all(&(n as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * n * n);
    for i in 0..n {
        for j in 0..n {
            buf.extend_from_slice(&m.entries[(i, j)].to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix<R: Read>(mut r: R) -> Result<FormMatrix> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, not a matrix file".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let mut k = [0u8; 1];
    r.read_exact(&mut k)?;
    let kind = FormKind::from_code(k[0])?;
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let s = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let mut data = vec![0u8; 8 * n * n];
    r.read_exact(&mut data)?;
    let vals: Vec<f64> = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(FormMatrix {
        kind,
        s,
        entries: DMatrix::from_row_slice(n, n, &vals),
        quad_tol: 0.0,
        dim,
    })
}

pub fn save_matrix(path: &Path, m: &FormMatrix) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_matrix(std::io::BufWriter::new(f), m)
}

pub fn load_matrix(path: &Path) -> Result<FormMatrix> {
    let f = std::fs::File::open(path)?;
    read_matrix(std::io::BufReader::new(f))
}
