//! Sampled signals on centered uniform grids.
//!
//! A [`Grid1D`] holds `n` samples at `t_k = (k − n/2)Δ`. [`Signal`] and
//! [`Field2D`] carry complex samples; every integral in the crate uses the
//! Riemann rule implemented by [`quad_norm`].

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("unknown family descriptor: {0}")]
    UnknownDescriptor(String),
    #[error("family member {0} does not decay at the grid boundary (relative edge {1:e})")]
    BoundaryLeak(String, f64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("parse: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(n: usize, dx: f64) -> Result<Self, GridError> {
        if n < 4 || !n.is_power_of_two() {
            return Err(GridError::InvalidGrid(format!("n = {n} must be a power of two ≥ 4")));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(GridError::InvalidGrid(format!("Δ = {dx} must be positive")));
        }
        Ok(Self { n, dx })
    }

    /// Self-dual grid with `Δ = n^{−1/2}`.
    pub fn self_dual(n: usize) -> Result<Self, GridError> {
        Self::new(n, 1.0 / (n as f64).sqrt())
    }

    /// The desk-scale default: `n = 256`, `Δ = 1/16`.
    pub fn desk() -> Self {
        Self { n: 256, dx: 1.0 / 16.0 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn center(&self) -> usize {
        self.n / 2
    }

    pub fn t(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.t(k)).collect()
    }

    pub fn dual_dx(&self) -> f64 {
        1.0 / (self.n as f64 * self.dx)
    }

    pub fn is_self_dual(&self) -> bool {
        (self.dx * self.dx * self.n as f64 - 1.0).abs() < 1e-12
    }

    pub fn t_min(&self) -> f64 {
        self.t(0)
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.n - 1)
    }

    /// Index of the sample at `t`, if `t` is a grid point (within 1e-9 cells).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let r = t / self.dx + (self.n / 2) as f64;
        let k = r.round();
        if (r - k).abs() < 1e-9 && k >= 0.0 && (k as usize) < self.n {
            Some(k as usize)
        } else {
            None
        }
    }
}

/// Common view over [`Signal`] and [`Field2D`] used by the operator engine.
pub trait Sampled: Clone + Send + Sync {
    fn grids(&self) -> Vec<Grid1D>;
    fn values(&self) -> &[C64];
    fn values_mut(&mut self) -> &mut [C64];
    fn with_values(&self, v: Vec<C64>) -> Self;

    fn dim(&self) -> usize {
        self.grids().len()
    }

    fn shape(&self) -> Vec<usize> {
        self.grids().iter().map(|g| g.n()).collect()
    }

    fn cell(&self) -> f64 {
        self.grids().iter().map(|g| g.dx()).product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub grid: Grid1D,
    pub values: Vec<C64>,
}

impl Signal {
    pub fn new(grid: Grid1D, values: Vec<C64>) -> Result<Self, GridError> {
        if values.len() != grid.n() {
            return Err(GridError::GridMismatch(format!(
                "{} values on a grid of {}",
                values.len(),
                grid.n()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> C64) -> Self {
        Self { grid, values: grid.points().into_iter().map(f).collect() }
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self { grid, values: vec![C64::new(0.0, 0.0); grid.n()] }
    }

    pub fn conj(&self) -> Self {
        self.with_values(self.values.iter().map(|v| v.conj()).collect())
    }

    pub fn scale(&self, s: C64) -> Self {
        self.with_values(self.values.iter().map(|v| v * s).collect())
    }

    pub fn norm2(&self) -> f64 {
        quad_norm(self, 2.0)
    }

    pub fn normalized(&self) -> Self {
        self.scale(C64::new(1.0 / self.norm2(), 0.0))
    }

    /// `⟨self, other⟩ = ∫ self · conj(other)`.
    pub fn inner(&self, other: &Signal) -> C64 {
        inner(self, other)
    }

    /// `f(t) ↦ f(−t)` on the grid; the unpaired sample `t_0 = −nΔ/2` maps outside and becomes 0.
    pub fn reflect(&self) -> Self {
        let n = self.grid.n();
        let mut v = vec![C64::new(0.0, 0.0); n];
        for (k, out) in v.iter_mut().enumerate().skip(1) {
            *out = self.values[n - k];
        }
        self.with_values(v)
    }

    /// Time-frequency shift `π(x₀,ξ₀)f(t) = e^{2πiξ₀t} f(t − x₀)`.
    ///
    /// Integer-cell shifts are exact; fractional shifts use band-limited interpolation.
    pub fn tf_shift(&self, x0: f64, xi0: f64) -> Self {
        let shifted = shift_samples(&self.values, self.grid, -x0);
        let g = self.grid;
        self.with_values(
            shifted
                .into_iter()
                .enumerate()
                .map(|(k, v)| v * C64::from_polar(1.0, 2.0 * PI * xi0 * g.t(k)))
                .collect(),
        )
    }

    pub fn edge_ratio(&self) -> f64 {
        edge_ratio(&self.values)
    }
}

impl Sampled for Signal {
    fn grids(&self) -> Vec<Grid1D> {
        vec![self.grid]
    }
    fn values(&self) -> &[C64] {
        &self.values
    }
    fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }
    fn with_values(&self, v: Vec<C64>) -> Self {
        assert_eq!(v.len(), self.values.len());
        Self { grid: self.grid, values: v }
    }
}

/// Samples `F(x_j, y_k)` stored row-major at `values[j·n_y + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub grid_x: Grid1D,
    pub grid_y: Grid1D,
    pub values: Vec<C64>,
}

impl Field2D {
    pub fn new(grid_x: Grid1D, grid_y: Grid1D, values: Vec<C64>) -> Result<Self, GridError> {
        if values.len() != grid_x.n() * grid_y.n() {
            return Err(GridError::GridMismatch(format!(
                "{} values for a {}×{} field",
                values.len(),
                grid_x.n(),
                grid_y.n()
            )));
        }
        Ok(Self { grid_x, grid_y, values })
    }

    pub fn from_fn(grid_x: Grid1D, grid_y: Grid1D, f: impl Fn(f64, f64) -> C64) -> Self {
        let mut values = Vec::with_capacity(grid_x.n() * grid_y.n());
        for j in 0..grid_x.n() {
            for k in 0..grid_y.n() {
                values.push(f(grid_x.t(j), grid_y.t(k)));
            }
        }
        Self { grid_x, grid_y, values }
    }

    pub fn nx(&self) -> usize {
        self.grid_x.n()
    }

    pub fn ny(&self) -> usize {
        self.grid_y.n()
    }

    pub fn at(&self, j: usize, k: usize) -> C64 {
        self.values[j * self.ny() + k]
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Value at the grid point nearest to `(x, y)`.
    pub fn nearest(&self, x: f64, y: f64) -> C64 {
        let j = ((x / self.grid_x.dx()).round() as isize + self.grid_x.center() as isize)
            .clamp(0, self.nx() as isize - 1) as usize;
        let k = ((y / self.grid_y.dx()).round() as isize + self.grid_y.center() as isize)
            .clamp(0, self.ny() as isize - 1) as usize;
        self.at(j, k)
    }

    /// Relative modulus on the outermost `w` rows/columns.
    pub fn edge_ratio(&self, w: usize) -> f64 {
        let m = self.max_modulus();
        if m == 0.0 {
            return 0.0;
        }
        let (nx, ny) = (self.nx(), self.ny());
        let mut e: f64 = 0.0;
        for j in 0..nx {
            for k in 0..ny {
                if j < w || j >= nx - w || k < w || k >= ny - w {
                    e = e.max(self.at(j, k).norm());
                }
            }
        }
        e / m
    }
}

impl Sampled for Field2D {
    fn grids(&self) -> Vec<Grid1D> {
        vec![self.grid_x, self.grid_y]
    }
    fn values(&self) -> &[C64] {
        &self.values
    }
    fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }
    fn with_values(&self, v: Vec<C64>) -> Self {
        assert_eq!(v.len(), self.values.len());
        Self { grid_x: self.grid_x, grid_y: self.grid_y, values: v }
    }
}

/// `F(x, y) = f(x) · conj(g(y))`.
pub fn tensor(f: &Signal, g: &Signal) -> Field2D {
    let mut values = Vec::with_capacity(f.values.len() * g.values.len());
    for a in &f.values {
        for b in &g.values {
            values.push(a * b.conj());
        }
    }
    Field2D { grid_x: f.grid, grid_y: g.grid, values }
}

/// `(Σ|F|^p · cell)^{1/p}`, or `max|F|` for `p = ∞`.
pub fn quad_norm<S: Sampled>(f: &S, p: f64) -> f64 {
    lp_norm(f.values().iter().map(|v| v.norm()), p, f.cell())
}

pub(crate) fn lp_norm(vals: impl Iterator<Item = f64>, p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        vals.fold(0.0, f64::max)
    } else {
        (vals.map(|a| a.powf(p)).sum::<f64>() * cell).powf(1.0 / p)
    }
}

pub fn inner<S: Sampled>(a: &S, b: &S) -> C64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x * y.conj())
        .sum::<C64>()
        * a.cell()
}

/// `min_c ‖a − c·b‖₂ / ‖a‖₂` over unimodular `c`.
pub fn phase_aligned_error<S: Sampled>(a: &S, b: &S) -> f64 {
    let ab = inner(a, b);
    let c = if ab.norm() > 0.0 { ab / ab.norm() } else { C64::new(1.0, 0.0) };
    let num: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - c * y).norm_sqr())
        .sum();
    let den: f64 = a.values().iter().map(|x| x.norm_sqr()).sum();
    (num / den).sqrt()
}

/// `max ||a| − |b|| / max|a|`.
pub fn modulus_sup_error<S: Sampled>(a: &S, b: &S) -> f64 {
    let m = a.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x.norm() - y.norm()).abs())
        .fold(0.0, f64::max)
        / m
}

pub(crate) fn edge_ratio(v: &[C64]) -> f64 {
    let m = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let n = v.len();
    let e = v[0].norm().max(v[1].norm()).max(v[n - 1].norm()).max(v[n - 2].norm());
    if m > 0.0 { e / m } else { 0.0 }
}

/// Samples of the band-limited interpolant of `v` at `t_k + s`, zero where
/// `t_k + s` leaves the grid. Integer-cell shifts are exact index moves.
pub fn shift_samples(v: &[C64], grid: Grid1D, s: f64) -> Vec<C64> {
    let n = grid.n();
    let cells = s / grid.dx();
    let zero = C64::new(0.0, 0.0);
    if (cells - cells.round()).abs() < 1e-9 {
        let m = cells.round() as isize;
        return (0..n as isize)
            .map(|k| {
                let src = k + m;
                if src >= 0 && src < n as isize { v[src as usize] } else { zero }
            })
            .collect();
    }
    let mut buf = v.to_vec();
    crate::engine::fft_shift_inplace(&mut buf, cells);
    let (lo, hi) = (grid.t_min() - 1e-12, grid.t_max() + 1e-12);
    for (k, b) in buf.iter_mut().enumerate() {
        let u = grid.t(k) + s;
        if u < lo || u > hi {
            *b = zero;
        }
    }
    buf
}

/// Signal family descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyDesc {
    Gaussian { widths: Vec<f64> },
    ChirpedGaussian { rates: Vec<f64>, width: f64 },
    Hermite { orders: Vec<usize> },
    TfShiftedGaussian { points: Vec<[f64; 2]> },
    /// Flat-top envelope `exp(−(|t|/a)^{2k})` times `e^{iπct²}`.
    ChirpedPlateau { rates: Vec<f64>, half_width: f64, order: u32 },
    /// Concatenation of several families.
    Union { parts: Vec<FamilyDesc> },
}

/// `2^{1/4} s^{−1/2} e^{−π(t/s)²}`.
pub fn gaussian(grid: Grid1D, width: f64) -> Signal {
    let a = 2f64.powf(0.25) / width.sqrt();
    Signal::from_fn(grid, |t| C64::new(a * (-PI * (t / width).powi(2)).exp(), 0.0))
}

pub fn chirped_gaussian(grid: Grid1D, rate: f64, width: f64) -> Signal {
    let g = gaussian(grid, width);
    let pts = grid.points();
    g.with_values(
        g.values
            .iter()
            .zip(pts)
            .map(|(v, t)| v * C64::from_polar(1.0, PI * rate * t * t))
            .collect(),
    )
}

/// L²-normalized Hermite function `h_k(t) ∝ H_k(√(2π)t) e^{−πt²}`.
pub fn hermite(grid: Grid1D, k: usize) -> Signal {
    Signal::from_fn(grid, |t| {
        let x = (2.0 * PI).sqrt() * t;
        // orthonormal recurrence for ψ_k(x) = H_k(x)e^{−x²/2}/√(2^k k! √π)
        let mut p0 = PI.powf(-0.25) * (-x * x / 2.0).exp();
        let mut p1 = 2f64.sqrt() * x * p0;
        if k == 0 {
            return C64::new(p0 * (2.0 * PI).sqrt().sqrt(), 0.0);
        }
        for j in 1..k {
            let p2 = (2.0 / (j as f64 + 1.0)).sqrt() * x * p1 - (j as f64 / (j as f64 + 1.0)).sqrt() * p0;
            p0 = p1;
            p1 = p2;
        }
        C64::new(p1 * (2.0 * PI).sqrt().sqrt(), 0.0)
    })
}

pub fn chirped_plateau(grid: Grid1D, rate: f64, half_width: f64, order: u32) -> Signal {
    Signal::from_fn(grid, |t| {
        C64::from_polar((-(t.abs() / half_width).powi(2 * order as i32)).exp(), PI * rate * t * t)
    })
    .normalized()
}

/// Builds the members of a family, normalized, with boundary decay asserted.
pub fn make_family(desc: &FamilyDesc, grid: Grid1D) -> Result<Vec<Signal>, GridError> {
    make_family_with_tol(desc, grid, 1e-12)
}

/// As [`make_family`], rejecting members whose edge ratio exceeds `edge_tol`.
pub fn make_family_with_tol(desc: &FamilyDesc, grid: Grid1D, edge_tol: f64) -> Result<Vec<Signal>, GridError> {
    let mut out: Vec<(String, Signal)> = Vec::new();
    match desc {
        FamilyDesc::Gaussian { widths } => {
            for &w in widths {
                if w <= 0.0 {
                    return Err(GridError::UnknownDescriptor(format!("gaussian width {w}")));
                }
                out.push((format!("gaussian({w})"), gaussian(grid, w)));
            }
        }
        FamilyDesc::ChirpedGaussian { rates, width } => {
            for &c in rates {
                out.push((format!("chirped_gaussian({c},{width})"), chirped_gaussian(grid, c, *width)));
            }
        }
        FamilyDesc::Hermite { orders } => {
            for &k in orders {
                out.push((format!("hermite({k})"), hermite(grid, k)));
            }
        }
        FamilyDesc::TfShiftedGaussian { points } => {
            for p in points {
                out.push((
                    format!("tf_shifted_gaussian({},{})", p[0], p[1]),
                    gaussian(grid, 1.0).tf_shift(p[0], p[1]),
                ));
            }
        }
        FamilyDesc::ChirpedPlateau { rates, half_width, order } => {
            for &c in rates {
                out.push((
                    format!("chirped_plateau({c},{half_width},{order})"),
                    chirped_plateau(grid, c, *half_width, *order),
                ));
            }
        }
        FamilyDesc::Union { parts } => {
            let mut all = Vec::new();
            for p in parts {
                all.extend(make_family_with_tol(p, grid, edge_tol)?);
            }
            return Ok(all);
        }
    }
    out.into_iter()
        .map(|(name, s)| {
            let e = s.edge_ratio();
            if e > edge_tol {
                return Err(GridError::BoundaryLeak(name, e));
            }
            Ok(s.normalized())
        })
        .collect()
}

pub fn write_signal_csv(s: &Signal, w: impl Write) -> Result<(), GridError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["index", "t", "re", "im"])?;
    for (k, v) in s.values.iter().enumerate() {
        wr.write_record([
            k.to_string(),
            format!("{:.17e}", s.grid.t(k)),
            format!("{:.17e}", v.re),
            format!("{:.17e}", v.im),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads `index,…,re,im` rows (extra middle columns ignored); the grid is supplied by the caller.
pub fn read_signal_csv(grid: Grid1D, r: impl Read) -> Result<Signal, GridError> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| GridError::Parse(format!("missing column {name}")))
    };
    let (ci, cr, cim) = (col("index")?, col("re")?, col("im")?);
    let mut values = vec![C64::new(0.0, 0.0); grid.n()];
    let mut seen = vec![false; grid.n()];
    for rec in rd.records() {
        let rec = rec?;
        let parse = |c: usize| -> Result<f64, GridError> {
            rec.get(c)
                .ok_or_else(|| GridError::Parse("short row".into()))?
                .trim()
                .parse::<f64>()
                .map_err(|e| GridError::Parse(e.to_string()))
        };
        let k = parse(ci)? as usize;
        if k >= grid.n() {
            return Err(GridError::GridMismatch(format!("index {k} outside grid of {}", grid.n())));
        }
        values[k] = C64::new(parse(cr)?, parse(cim)?);
        seen[k] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(GridError::GridMismatch("CSV does not cover every grid index".into()));
    }
    Signal::new(grid, values)
}

pub fn write_field_csv(f: &Field2D, w: impl Write) -> Result<(), GridError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["j", "k", "x", "y", "re", "im"])?;
    for j in 0..f.nx() {
        for k in 0..f.ny() {
            let v = f.at(j, k);
            wr.write_record([
                j.to_string(),
                k.to_string(),
                format!("{:.17e}", f.grid_x.t(j)),
                format!("{:.17e}", f.grid_y.t(k)),
                format!("{:.17e}", v.re),
                format!("{:.17e}", v.im),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// 8-bit binary PGM of `|F|`, linearly scaled to `[0, 255]`. Rows are `x`, columns `y`.
pub fn write_pgm(f: &Field2D, mut w: impl Write) -> Result<(), GridError> {
    let m = f.max_modulus();
    write!(w, "P5\n{} {}\n255\n", f.ny(), f.nx())?;
    let bytes: Vec<u8> = f
        .values
        .iter()
        .map(|v| if m > 0.0 { (v.norm() / m * 255.0).round() as u8 } else { 0 })
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn save_pgm(f: &Field2D, path: &Path) -> Result<(), GridError> {
    write_pgm(f, std::io::BufWriter::new(std::fs::File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_basics() {
        let g = Grid1D::desk();
        assert!(g.is_self_dual());
        assert_eq!(g.t(128), 0.0);
        assert_eq!(g.t(0), -8.0);
        assert!((g.dual_dx() - g.dx()).abs() < 1e-15);
        assert!(Grid1D::new(100, 0.1).is_err());
        assert!(!Grid1D::new(256, 0.1).unwrap().is_self_dual());
    }

    #[test]
    fn families() {
        let g = Grid1D::desk();
        let gs = make_family(&FamilyDesc::Gaussian { widths: vec![1.0] }, g).unwrap();
        let exact = 2f64.powf(0.25) * (-PI * 0.25).exp();
        assert!((gs[0].values[136].re - exact).abs() < 1e-12);
        assert!((quad_norm(&gs[0], 2.0) - 1.0).abs() < 1e-8);
        let c = make_family(&FamilyDesc::ChirpedGaussian { rates: vec![0.7], width: 1.0 }, g).unwrap();
        for (a, b) in c[0].values.iter().zip(&gs[0].values) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
        let h = make_family(&FamilyDesc::Hermite { orders: vec![0, 1, 2, 5] }, g).unwrap();
        for k in 1..128 {
            assert!((h[1].values[128 + k] + h[1].values[128 - k]).norm() < 1e-14);
        }
        // orthonormality under grid quadrature
        assert!(inner(&h[0], &h[2]).norm() < 1e-10);
        assert!(inner(&h[1], &h[3]).norm() < 1e-10);
        assert!((gaussian(g, 1.0).norm2() - 1.0).abs() < 1e-12);
        assert!((h[0].values[128] - gs[0].values[128]).norm() < 1e-12);
        let wide = FamilyDesc::Gaussian { widths: vec![6.0] };
        assert!(matches!(make_family(&wide, g), Err(GridError::BoundaryLeak(..))));
    }

    #[test]
    fn tensor_norm_and_spike() {
        let g = Grid1D::desk();
        let f = gaussian(g, 1.0);
        let h = hermite(g, 3);
        let t = tensor(&f, &h);
        assert!((quad_norm(&t, 2.0) - f.norm2() * h.norm2()).abs() < 1e-10);
        let mut spike = Signal::zeros(g);
        spike.values[128] = C64::new(1.0, 0.0);
        let s = tensor(&spike, &spike);
        assert_eq!(s.values.iter().filter(|v| v.norm() > 0.0).count(), 1);
    }

    #[test]
    fn norms() {
        let g = Grid1D::desk();
        let box_ = Signal::from_fn(g, |t| C64::new(if t.abs() < 0.5 { 1.0 } else { 0.0 }, 0.0));
        assert!((quad_norm(&box_, 2.0) - 1.0).abs() < 0.1);
        let f = hermite(g, 2);
        let m = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert_eq!(quad_norm(&f, f64::INFINITY), m);
    }

    #[test]
    fn tf_shift_exact_and_fractional() {
        let g = Grid1D::desk();
        let f = gaussian(g, 1.0);
        let s = f.tf_shift(0.5, 1.25);
        let want = Signal::from_fn(g, |t| {
            C64::from_polar(2f64.powf(0.25) * (-PI * (t - 0.5).powi(2)).exp(), 2.0 * PI * 1.25 * t)
        });
        assert!(phase_aligned_error(&want, &s) < 1e-13);
        let s = f.tf_shift(0.3, 0.0);
        let want = Signal::from_fn(g, |t| C64::new(2f64.powf(0.25) * (-PI * (t - 0.3).powi(2)).exp(), 0.0));
        assert!(phase_aligned_error(&want, &s) < 1e-12);
    }

    #[test]
    fn csv_roundtrip_and_pgm() {
        let g = Grid1D::new(8, 0.5).unwrap();
        let f = Signal::from_fn(g, |t| C64::new(t, -t * t / 3.0));
        let mut buf = Vec::new();
        write_signal_csv(&f, &mut buf).unwrap();
        let back = read_signal_csv(g, buf.as_slice()).unwrap();
        assert_eq!(back, f);
        let field = tensor(&f, &f);
        let mut pgm = Vec::new();
        write_pgm(&field, &mut pgm).unwrap();
        assert!(pgm.starts_with(b"P5\n8 8\n255\n"));
        assert_eq!(pgm.len(), 11 + 64);
    }
}
