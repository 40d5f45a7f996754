//! Metaplectic operators on sampled signals and fields.
//!
//! Generators act exactly on grid samples: partial Fourier transforms are
//! centered unitary DFTs, chirps are pointwise, and dilations are index remaps
//! when the matrix maps the grid to itself, band-limited resampling otherwise.
//! General symplectic matrices go through [`MetaplecticPlan`], which composes
//! partial Fourier transforms with the free-matrix pipeline
//!
//! `μ(A)F(x) = det(B)^{−1/2} Φ_{DB⁻¹}(x) ∫ e^{−2πi y·B⁻¹x} Φ_{B⁻¹A}(y) F(y) dy`.

use std::f64::consts::PI;

use nalgebra::DVector;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

use crate::grid::{C64, Field2D, Grid1D, Sampled, Signal, inner};
use crate::symplectic::{
    GeneratorAtom, GeneratorWord, Mat, SympError, SympMat, TOL_INV, TOL_SYM, asymmetry,
    make_interchange, mat_from_rows, spectral_norm, symmetrize,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("grid is not self-dual (nΔ² ≠ 1)")]
    GridNotSelfDual,
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("singular dilation matrix (|det L| = {0:e})")]
    SingularL(f64),
    #[error("matrix is not free (|det B| = {0:e})")]
    NotFree(f64),
    #[error("no dispatch strategy applies")]
    NoStrategy,
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Symp(#[from] SympError),
}

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn fft_pair(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut p = FftPlanner::new();
    (p.plan_fft_forward(n), p.plan_fft_inverse(n))
}

fn require_self_dual(grids: &[Grid1D]) -> Result<(), EngineError> {
    if grids.iter().all(|g| g.is_self_dual()) {
        Ok(())
    } else {
        Err(EngineError::GridNotSelfDual)
    }
}

/// Strides of a row-major array.
fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// Applies `op` to every 1-D line along `axis`.
fn for_each_line(values: &mut [C64], shape: &[usize], axis: usize, op: &(dyn Fn(&mut [C64], usize) + Sync)) {
    let n = shape[axis];
    let st = strides(shape);
    if st[axis] == 1 {
        values.par_chunks_mut(n).enumerate().for_each(|(i, line)| op(line, i));
        return;
    }
    // axis 0 of a 2-D array: gather / scatter columns
    let ncols = st[axis];
    let mut cols: Vec<Vec<C64>> = (0..ncols)
        .into_par_iter()
        .map(|c| {
            let mut line: Vec<C64> = (0..n).map(|j| values[j * ncols + c]).collect();
            op(&mut line, c);
            line
        })
        .collect();
    for (c, line) in cols.iter_mut().enumerate() {
        for (j, v) in line.iter().enumerate() {
            values[j * ncols + c] = *v;
        }
    }
}

/// Centered unitary DFT of one line: `out_m = Δ Σ_k v_k e^{∓2πi ν_m t_k}`.
fn centered_dft_line(line: &mut [C64], fft: &dyn Fft<f64>, dx: f64) {
    let n = line.len();
    for (k, v) in line.iter_mut().enumerate() {
        if k % 2 == 1 {
            *v = -*v;
        }
    }
    fft.process(line);
    // e^{−iπ n/2} = 1 for n divisible by 4
    for (m, v) in line.iter_mut().enumerate() {
        *v *= if m % 2 == 1 { -dx } else { dx };
    }
    debug_assert!(n.is_multiple_of(4));
}

fn dft_axis<S: Sampled>(f: &S, axis: usize, inverse: bool) -> Result<S, EngineError> {
    let grids = f.grids();
    if axis >= grids.len() {
        return Err(EngineError::DimMismatch(format!("axis {axis} of a {}-D array", grids.len())));
    }
    require_self_dual(&grids)?;
    let g = grids[axis];
    let (fw, inv) = fft_pair(g.n());
    let plan = if inverse { inv } else { fw };
    let mut v = f.values().to_vec();
    for_each_line(&mut v, &f.shape(), axis, &|line, _| centered_dft_line(line, plan.as_ref(), g.dx()));
    Ok(f.with_values(v))
}

fn dft_all<S: Sampled>(f: &S, inverse: bool) -> Result<S, EngineError> {
    let mut out = f.clone();
    for axis in 0..f.dim() {
        out = dft_axis(&out, axis, inverse)?;
    }
    Ok(out)
}

/// Unitary Fourier transform `∫ f(x) e^{−2πiξx} dx` on the self-dual grid.
pub fn fourier(f: &Signal) -> Result<Signal, EngineError> {
    dft_axis(f, 0, false)
}

pub fn inverse_fourier(f: &Signal) -> Result<Signal, EngineError> {
    dft_axis(f, 0, true)
}

pub fn fourier2d(f: &Field2D) -> Result<Field2D, EngineError> {
    dft_all(f, false)
}

/// Fourier transform in one variable; `axis` is 1 (x) or 2 (y).
pub fn partial_fourier(f: &Field2D, axis: usize) -> Result<Field2D, EngineError> {
    if !(1..=2).contains(&axis) {
        return Err(EngineError::DimMismatch(format!("axis must be 1 or 2, got {axis}")));
    }
    dft_axis(f, axis - 1, false)
}

pub fn inverse_partial_fourier(f: &Field2D, axis: usize) -> Result<Field2D, EngineError> {
    if !(1..=2).contains(&axis) {
        return Err(EngineError::DimMismatch(format!("axis must be 1 or 2, got {axis}")));
    }
    dft_axis(f, axis - 1, true)
}

/// Band-limited shift of a periodic line: `line_k ← interp(k + cells)`.
pub(crate) fn fft_shift_inplace(line: &mut [C64], cells: f64) {
    let n = line.len();
    let (fw, inv) = fft_pair(n);
    fft_shift_with(line, cells, fw.as_ref(), inv.as_ref());
}

fn fft_shift_with(line: &mut [C64], cells: f64, fw: &dyn Fft<f64>, inv: &dyn Fft<f64>) {
    let n = line.len();
    fw.process(line);
    for (m, v) in line.iter_mut().enumerate() {
        let f = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
        if m == n / 2 {
            *v *= (PI * cells).cos();
        } else {
            *v *= C64::from_polar(1.0, 2.0 * PI * f * cells / n as f64);
        }
    }
    inv.process(line);
    let s = 1.0 / n as f64;
    for v in line.iter_mut() {
        *v *= s;
    }
}

/// Shift along a line by `cells`, zeroing samples whose source leaves the grid.
fn shift_line(line: &mut [C64], cells: f64, fw: &dyn Fft<f64>, inv: &dyn Fft<f64>) {
    let n = line.len() as isize;
    if cells.abs() < 1e-13 {
        return;
    }
    if (cells - cells.round()).abs() < 1e-9 {
        let m = cells.round() as isize;
        let src: Vec<C64> = line.to_vec();
        for k in 0..n {
            let s = k + m;
            line[k as usize] = if s >= 0 && s < n { src[s as usize] } else { ZERO };
        }
        return;
    }
    fft_shift_with(line, cells, fw, inv);
    for k in 0..n {
        let u = k as f64 + cells;
        if u < -1e-9 || u > (n - 1) as f64 + 1e-9 {
            line[k as usize] = ZERO;
        }
    }
}

/// Periodic band-limited interpolation kernel at offset `δ` cells.
fn dirichlet(delta: f64, n: usize) -> f64 {
    if delta.abs() < 1e-12 {
        return 1.0;
    }
    let nf = n as f64;
    ((PI * (nf - 1.0) * delta / nf).sin() / (PI * delta / nf).sin() + (PI * delta).cos()) / nf
}

/// Dense kernel evaluating a line at fractional positions `pos[j]` (in cells).
fn interp_kernel(pos: &[f64], n: usize) -> Vec<f64> {
    let mut k = vec![0.0; pos.len() * n];
    for (j, &u) in pos.iter().enumerate() {
        if u < -1e-9 || u > (n - 1) as f64 + 1e-9 {
            continue;
        }
        for s in 0..n {
            k[j * n + s] = dirichlet(u - s as f64, n);
        }
    }
    k
}

fn apply_kernel(line: &mut [C64], kernel: &[f64]) {
    let n = line.len();
    let src = line.to_vec();
    for (j, out) in line.iter_mut().enumerate() {
        let row = &kernel[j * n..(j + 1) * n];
        let mut acc = ZERO;
        for (w, v) in row.iter().zip(&src) {
            acc += v * *w;
        }
        *out = acc;
    }
}

/// Samples of `F(L·)` (no determinant factor) on the same grid.
fn resample_linear<S: Sampled>(f: &S, l: &Mat) -> Result<Vec<C64>, EngineError> {
    let grids = f.grids();
    let dim = grids.len();
    if l.nrows() != dim || l.ncols() != dim {
        return Err(EngineError::DimMismatch(format!(
            "{}×{} dilation on a {dim}-D array",
            l.nrows(),
            l.ncols()
        )));
    }
    // index-space matrix: i ↦ M i where x_a = Δ_a i_a
    let m = Mat::from_fn(dim, dim, |a, b| l[(a, b)] * grids[b].dx() / grids[a].dx());
    let integer = m.iter().all(|v| (v - v.round()).abs() < 1e-12);
    let shape = f.shape();
    let src = f.values();
    if integer {
        let st = strides(&shape);
        let total = src.len();
        let out: Vec<C64> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let mut idx = [0isize; 2];
                let mut rem = flat;
                for a in 0..dim {
                    idx[a] = (rem / st[a]) as isize - (shape[a] / 2) as isize;
                    rem %= st[a];
                }
                let mut off = 0usize;
                for a in 0..dim {
                    let mut s = 0isize;
                    for b in 0..dim {
                        s += m[(a, b)].round() as isize * idx[b];
                    }
                    let k = s + (shape[a] / 2) as isize;
                    if k < 0 || k >= shape[a] as isize {
                        return ZERO;
                    }
                    off += k as usize * st[a];
                }
                src[off]
            })
            .collect();
        return Ok(out);
    }
    if dim == 1 {
        let n = shape[0];
        let c = (n / 2) as f64;
        let pos: Vec<f64> = (0..n).map(|j| m[(0, 0)] * (j as f64 - c) + c).collect();
        let kern = interp_kernel(&pos, n);
        let mut v = src.to_vec();
        apply_kernel(&mut v, &kern);
        return Ok(v);
    }
    if shape[0] != shape[1] {
        return Err(EngineError::Unsupported("non-integer dilation of a non-square field".into()));
    }
    let n = shape[0];
    let c = (n / 2) as f64;
    let (fw, inv) = fft_pair(n);
    let mut v = src.to_vec();
    // pivot so that |M₀₀| ≥ |M₁₀|; a row swap of M is a transpose of F
    let mut mm = m.clone();
    if m[(0, 0)].abs() < m[(1, 0)].abs() {
        mm.swap_rows(0, 1);
        let t = v.clone();
        for j in 0..n {
            for k in 0..n {
                v[j * n + k] = t[k * n + j];
            }
        }
    }
    let (a, b, cc, d) = (mm[(0, 0)], mm[(0, 1)], mm[(1, 0)], mm[(1, 1)]);
    let (alpha, beta, gamma) = (a, b / a, cc / a);
    let delta = d - cc * b / a;
    // F₂(v) = F₁(v₀, γv₀ + v₁): shift each row
    if gamma.abs() > 1e-15 {
        for_each_line(&mut v, &shape, 1, &|line, row| {
            shift_line(line, gamma * (row as f64 - c), fw.as_ref(), inv.as_ref());
        });
    }
    // F₃(w) = F₂(αw₀, δw₁)
    for (axis, s) in [(0usize, alpha), (1usize, delta)] {
        if (s - 1.0).abs() > 1e-15 {
            let pos: Vec<f64> = (0..n).map(|j| s * (j as f64 - c) + c).collect();
            let kern = interp_kernel(&pos, n);
            for_each_line(&mut v, &shape, axis, &|line, _| apply_kernel(line, &kern));
        }
    }
    // G(i) = F₃(i₀ + βi₁, i₁): shift each column
    if beta.abs() > 1e-15 {
        for_each_line(&mut v, &shape, 0, &|line, col| {
            shift_line(line, beta * (col as f64 - c), fw.as_ref(), inv.as_ref());
        });
    }
    Ok(v)
}

/// `|det L|^{1/2} F(L·)`.
pub fn dilate<S: Sampled>(l: &Mat, f: &S) -> Result<S, EngineError> {
    let det = if l.nrows() == l.ncols() { l.determinant() } else { 0.0 };
    if det.abs() < 1e-12 {
        return Err(EngineError::SingularL(det.abs()));
    }
    let s = det.abs().sqrt();
    let v = resample_linear(f, l)?;
    Ok(f.with_values(v.into_iter().map(|x| x * s).collect()))
}

fn check_sym(c: &Mat, dim: usize) -> Result<(), EngineError> {
    if c.nrows() != dim || c.ncols() != dim {
        return Err(EngineError::DimMismatch(format!("{}×{} chirp on a {dim}-D array", c.nrows(), c.ncols())));
    }
    let a = asymmetry(c);
    if a > TOL_SYM {
        return Err(EngineError::NotSymmetric(a));
    }
    Ok(())
}

/// Pointwise multiplication by `Φ_C(t) = e^{iπ t·Ct}`.
pub fn chirp_multiply<S: Sampled>(c: &Mat, f: &S) -> Result<S, EngineError> {
    let grids = f.grids();
    check_sym(c, grids.len())?;
    let mut v = f.values().to_vec();
    match grids.len() {
        1 => {
            let g = grids[0];
            for (k, x) in v.iter_mut().enumerate() {
                let t = g.t(k);
                *x *= C64::from_polar(1.0, PI * c[(0, 0)] * t * t);
            }
        }
        2 => {
            let (gx, gy) = (grids[0], grids[1]);
            let ny = gy.n();
            v.par_chunks_mut(ny).enumerate().for_each(|(j, row)| {
                let x = gx.t(j);
                for (k, val) in row.iter_mut().enumerate() {
                    let y = gy.t(k);
                    let q = c[(0, 0)] * x * x + 2.0 * c[(0, 1)] * x * y + c[(1, 1)] * y * y;
                    *val *= C64::from_polar(1.0, PI * q);
                }
            });
        }
        d => return Err(EngineError::Unsupported(format!("{d}-D arrays"))),
    }
    Ok(f.with_values(v))
}

/// `μ(V_Cᵀ) = ℱ Φ_{−C} ℱ⁻¹`.
pub fn chirp_convolve<S: Sampled>(c: &Mat, f: &S) -> Result<S, EngineError> {
    check_sym(c, f.dim())?;
    let h = dft_all(f, true)?;
    let h = chirp_multiply(&(-c), &h)?;
    dft_all(&h, false)
}

/// Partial Fourier transforms over the 1-based axes in `set` (the action of `Π_𝒥`).
fn interchange<S: Sampled>(set: &[usize], f: &S) -> Result<S, EngineError> {
    let mut out = f.clone();
    for &j in set {
        if j == 0 || j > f.dim() {
            return Err(EngineError::DimMismatch(format!("interchange index {j}")));
        }
        out = dft_axis(&out, j - 1, false)?;
    }
    Ok(out)
}

pub fn apply_atom<S: Sampled>(atom: &GeneratorAtom, f: &S) -> Result<S, EngineError> {
    if atom.dim() != f.dim() {
        return Err(EngineError::DimMismatch(format!("atom of size {} on a {}-D array", atom.dim(), f.dim())));
    }
    match atom {
        GeneratorAtom::Interchange { set, .. } => interchange(set, f),
        GeneratorAtom::Dilation { l } => dilate(&mat_from_rows(l)?, f),
        GeneratorAtom::ChirpMul { c } => chirp_multiply(&mat_from_rows(c)?, f),
        GeneratorAtom::ChirpConv { c } => chirp_convolve(&mat_from_rows(c)?, f),
    }
}

/// Applies atoms right-to-left.
pub fn apply_word<S: Sampled>(w: &GeneratorWord, f: &S) -> Result<S, EngineError> {
    let mut out = f.clone();
    for a in w.atoms.iter().rev() {
        out = apply_atom(a, &out)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Free,
    AInvertible,
    Interchange,
}

/// Precomputed execution of `μ(A) = μ_free(A Π_𝒥⁻¹) ∘ ℱ_𝒥`.
#[derive(Debug, Clone)]
pub struct MetaplecticPlan {
    pub kind: StrategyKind,
    /// 1-based axes transformed first.
    pub set: Vec<usize>,
    /// `‖B⁻¹A‖₂` of the free factor; the spread of the intermediate field.
    pub score: f64,
    pre: Mat,
    dil: Mat,
    post: Mat,
    phase: C64,
    dim: usize,
}

fn candidate_sets(n: usize) -> Vec<(StrategyKind, Vec<usize>)> {
    let all: Vec<usize> = (1..=n).collect();
    let mut out = vec![(StrategyKind::Free, vec![]), (StrategyKind::AInvertible, all.clone())];
    for mask in 1u32..(1 << n) - 1 {
        let set: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
        out.push((StrategyKind::Interchange, set));
    }
    out
}

fn free_parts(a: &Mat, n: usize) -> Option<(Mat, Mat, Mat, f64)> {
    let aa = a.view((0, 0), (n, n)).into_owned();
    let b = a.view((0, n), (n, n)).into_owned();
    let d = a.view((n, n), (n, n)).into_owned();
    let det = b.determinant();
    if det.abs() <= TOL_INV {
        return None;
    }
    let binv = b.try_inverse()?;
    Some((symmetrize(&(&binv * &aa)), binv.clone(), symmetrize(&(&d * &binv)), det))
}

impl MetaplecticPlan {
    fn from_parts(kind: StrategyKind, set: Vec<usize>, pre: Mat, dil: Mat, post: Mat, det_b: f64, dim: usize) -> Self {
        // principal branch of det(B)^{−1/2}; the modulus is carried by the dilation
        let phase = if det_b < 0.0 { C64::new(0.0, -1.0) } else { C64::new(1.0, 0.0) };
        let score = spectral_norm(&pre);
        Self { kind, set, score, pre, dil, post, phase, dim }
    }

    /// Free pipeline only; fails if the `B` block is singular.
    pub fn free(a: &SympMat) -> Result<Self, EngineError> {
        let n = a.half_dim();
        let (pre, dil, post, det) = free_parts(a.matrix(), n).ok_or_else(|| {
            EngineError::NotFree(a.blocks().1.determinant().abs())
        })?;
        Ok(Self::from_parts(StrategyKind::Free, vec![], pre, dil, post, det, n))
    }

    /// Chooses, among all `𝒥` with `A Π_𝒥⁻¹` free, the one with the smallest
    /// `‖B⁻¹A‖₂`; ties go to the earlier of free → A-invertible → interchange.
    pub fn new(a: &SympMat) -> Result<Self, EngineError> {
        let n = a.half_dim();
        let mut best: Option<Self> = None;
        for (kind, set) in candidate_sets(n) {
            let pi = make_interchange(&set, n)?;
            let ap = a.matrix() * pi.inverse().matrix();
            if let Some((pre, dil, post, det)) = free_parts(&ap, n) {
                let plan = Self::from_parts(kind, set, pre, dil, post, det, n);
                if best.as_ref().is_none_or(|b| plan.score < b.score - 1e-9) {
                    best = Some(plan);
                }
            }
        }
        best.ok_or(EngineError::NoStrategy)
    }

    pub fn apply<S: Sampled>(&self, f: &S) -> Result<S, EngineError> {
        if f.dim() != self.dim {
            return Err(EngineError::DimMismatch(format!(
                "matrix of half-dimension {} on a {}-D array",
                self.dim,
                f.dim()
            )));
        }
        let h = interchange(&self.set, f)?;
        let h = chirp_multiply(&self.pre, &h)?;
        let g = dft_all(&h, false)?;
        let g = dilate(&self.dil, &g)?;
        let mut out = chirp_multiply(&self.post, &g)?;
        if self.phase != C64::new(1.0, 0.0) {
            for v in out.values_mut() {
                *v *= self.phase;
            }
        }
        Ok(out)
    }

    /// Exact inverse of [`apply`](Self::apply), same representative (no extra phase).
    pub fn apply_inverse<S: Sampled>(&self, f: &S) -> Result<S, EngineError> {
        if f.dim() != self.dim {
            return Err(EngineError::DimMismatch(format!(
                "matrix of half-dimension {} on a {}-D array",
                self.dim,
                f.dim()
            )));
        }
        let mut h = chirp_multiply(&(-&self.post), f)?;
        let ph = self.phase.conj();
        for v in h.values_mut() {
            *v *= ph;
        }
        let dil_inv = self.dil.clone().try_inverse().ok_or(EngineError::SingularL(0.0))?;
        let h = dilate(&dil_inv, &h)?;
        let h = dft_all(&h, true)?;
        let mut h = chirp_multiply(&(-&self.pre), &h)?;
        for &j in self.set.iter().rev() {
            h = dft_axis(&h, j - 1, true)?;
        }
        Ok(h)
    }
}

/// `μ(A)F` for free `A` (the closed-form integral pipeline).
pub fn apply_free<S: Sampled>(a: &SympMat, f: &S) -> Result<S, EngineError> {
    MetaplecticPlan::free(a)?.apply(f)
}

/// `μ(A)F` up to a global unimodular constant.
pub fn apply_metaplectic<S: Sampled>(a: &SympMat, f: &S) -> Result<S, EngineError> {
    MetaplecticPlan::new(a)?.apply(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    ModulusOnly,
    UpToGlobalPhase,
}

/// Comparison discipline for metaplectic outputs, which are defined up to a constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTolerance {
    pub mode: PhaseMode,
    pub tol: f64,
}

impl PhaseTolerance {
    pub fn new(mode: PhaseMode, tol: f64) -> Self {
        assert!(tol > 0.0, "tolerance must be positive");
        Self { mode, tol }
    }

    /// Discrepancy between `a` and `b` under this mode.
    pub fn error<S: Sampled>(&self, a: &S, b: &S) -> f64 {
        match self.mode {
            PhaseMode::ModulusOnly => crate::grid::modulus_sup_error(a, b),
            PhaseMode::UpToGlobalPhase => crate::grid::phase_aligned_error(a, b),
        }
    }

    pub fn agree<S: Sampled>(&self, a: &S, b: &S) -> bool {
        self.error(a, b) <= self.tol
    }
}

/// Unimodular constant `c` minimizing `‖a − c b‖₂`.
pub fn best_phase<S: Sampled>(a: &S, b: &S) -> C64 {
    let ab = inner(a, b);
    if ab.norm() > 0.0 { ab / ab.norm() } else { C64::new(1.0, 0.0) }
}

/// `ℱΦ_C` sampled on the grid together with `|det C|^{−1/2}`, for measuring
/// the chirp transform constant (only modulus flatness is asserted).
///
/// The chirp is tapered by `exp(−(|t|/a)^{12})` with `a = 3/8` of the grid
/// extent; a hard cut at the grid edge leaves ±5% Fresnel ripple.
pub fn fourier_of_chirp(c: f64, grid: Grid1D) -> Result<(Signal, f64), EngineError> {
    let a = 0.375 * grid.n() as f64 * grid.dx();
    let one = Signal::from_fn(grid, |t| C64::new((-(t.abs() / a).powi(12)).exp(), 0.0));
    let chirp = chirp_multiply(&Mat::from_element(1, 1, c), &one)?;
    Ok((fourier(&chirp)?, c.abs().powf(-0.5)))
}

pub fn diag(v: &[f64]) -> Mat {
    Mat::from_diagonal(&DVector::from_row_slice(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian, hermite, modulus_sup_error, phase_aligned_error, quad_norm, tensor};
    use crate::symplectic::{make_ast, make_dl, make_j, make_vc, make_vct};

    fn g() -> Grid1D {
        Grid1D::desk()
    }

    fn asym_signal() -> Signal {
        // deliberately non-even so reflections show up
        let h = hermite(g(), 1);
        let s = gaussian(g(), 1.0).tf_shift(0.75, -0.5);
        h.with_values(h.values.iter().zip(&s.values).map(|(a, b)| a + b * 0.5).collect())
    }

    #[test]
    fn fourier_of_gaussian_is_gaussian() {
        let f = gaussian(g(), 1.0);
        let h = fourier(&f).unwrap();
        assert!(h.values.iter().zip(&f.values).all(|(a, b)| (a - b).norm() < 1e-8));
        let w = gaussian(g(), 2.0);
        let hw = fourier(&w).unwrap();
        assert!(phase_aligned_error(&gaussian(g(), 0.5), &hw) < 1e-10);
    }

    #[test]
    fn fourier_unitary_and_order_four() {
        let f = asym_signal();
        let mut h = f.clone();
        for _ in 0..4 {
            h = fourier(&h).unwrap();
        }
        assert!(h.values.iter().zip(&f.values).all(|(a, b)| (a - b).norm() < 1e-10));
        assert!((fourier(&f).unwrap().norm2() - f.norm2()).abs() < 1e-12);
        let not_dual = Signal::zeros(Grid1D::new(256, 0.1).unwrap());
        assert_eq!(fourier(&not_dual), Err(EngineError::GridNotSelfDual));
    }

    #[test]
    fn partial_fourier_composes() {
        let f = tensor(&asym_signal(), &hermite(g(), 2));
        let a = partial_fourier(&partial_fourier(&f, 1).unwrap(), 2).unwrap();
        let b = partial_fourier(&partial_fourier(&f, 2).unwrap(), 1).unwrap();
        let c = fourier2d(&f).unwrap();
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| (x - y).norm() < 1e-12));
        assert!(a.values.iter().zip(&c.values).all(|(x, y)| (x - y).norm() < 1e-10));
        // F₂(f⊗ḡ) = f ⊗ conj(ℱ⁻¹ g)^… : the y-factor is ℱ(ḡ) = conj(ℱ⁻¹g)
        let s = asym_signal();
        let h = hermite(g(), 2).tf_shift(0.0, 0.5);
        let lhs = partial_fourier(&tensor(&s, &h), 2).unwrap();
        let rhs = tensor(&s, &inverse_fourier(&h).unwrap());
        assert!(lhs.values.iter().zip(&rhs.values).all(|(x, y)| (x - y).norm() < 1e-10));
    }

    #[test]
    fn chirps() {
        let f = asym_signal();
        let c = Mat::from_element(1, 1, 0.7);
        assert_eq!(chirp_multiply(&Mat::zeros(1, 1), &f).unwrap(), f);
        let h = chirp_multiply(&c, &f).unwrap();
        assert!(h.values.iter().zip(&f.values).all(|(a, b)| (a.norm() - b.norm()).abs() < 1e-15));
        let back = chirp_multiply(&(-&c), &h).unwrap();
        assert!(back.values.iter().zip(&f.values).all(|(a, b)| (a - b).norm() < 1e-13));
        let cv = chirp_convolve(&c, &f).unwrap();
        assert!((cv.norm2() - f.norm2()).abs() < 1e-12);
        let back = chirp_convolve(&(-&c), &cv).unwrap();
        assert!(back.values.iter().zip(&f.values).all(|(a, b)| (a - b).norm() < 1e-12));
        let bad = Mat::from_row_slice(2, 2, &[0., 1., 0., 0.]);
        let field = tensor(&f, &f);
        assert!(matches!(chirp_multiply(&bad, &field), Err(EngineError::NotSymmetric(_))));
    }

    #[test]
    fn dilation_closed_form() {
        let f = gaussian(g(), 1.0);
        let d = dilate(&Mat::from_element(1, 1, 2.0), &f).unwrap();
        let want = Signal::from_fn(g(), |t| C64::new(2f64.powf(0.75) * (-4.0 * PI * t * t).exp(), 0.0));
        assert!(d.values.iter().zip(&want.values).all(|(a, b)| (a - b).norm() < 1e-8));
        // fractional scale, band-limited path
        let d = dilate(&Mat::from_element(1, 1, 0.6), &f).unwrap();
        let want = Signal::from_fn(g(), |t| {
            C64::new(0.6f64.sqrt() * 2f64.powf(0.25) * (-PI * (0.6 * t).powi(2)).exp(), 0.0)
        });
        assert!(d.values.iter().zip(&want.values).all(|(a, b)| (a - b).norm() < 1e-10));
        assert!((quad_norm(&d, 2.0) - 1.0).abs() < 1e-6);
        assert_eq!(dilate(&Mat::identity(1, 1), &f).unwrap(), f);
        assert!(matches!(dilate(&Mat::zeros(1, 1), &f), Err(EngineError::SingularL(_))));
    }

    #[test]
    fn dilation_2d_general() {
        let f = tensor(&gaussian(g(), 1.0), &hermite(g(), 1));
        let l = Mat::from_row_slice(2, 2, &[0.8, 0.3, -0.4, 1.1]);
        let d = dilate(&l, &f).unwrap();
        let det = l.determinant().abs().sqrt();
        let want = Field2D::from_fn(g(), g(), |x, y| {
            let u = 0.8 * x + 0.3 * y;
            let v = -0.4 * x + 1.1 * y;
            let a = gaussian(g(), 1.0).values[0].re * 0.0 + 2f64.powf(0.25) * (-PI * u * u).exp();
            let h1 = 2f64.powf(0.25) * 2.0 * PI.sqrt() * v * (-PI * v * v).exp();
            C64::new(det * a * h1, 0.0)
        });
        let err = d.values.iter().zip(&want.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8, "err {err}");
        // pivoted branch (|L₀₀| < |L₁₀|)
        let l = Mat::from_row_slice(2, 2, &[0.2, 1.0, -1.1, 0.5]);
        let d = dilate(&l, &f).unwrap();
        assert!((quad_norm(&d, 2.0) - quad_norm(&f, 2.0)).abs() < 1e-6);
    }

    #[test]
    fn generators_through_dispatcher() {
        let f = asym_signal();
        let tol = PhaseTolerance::new(PhaseMode::UpToGlobalPhase, 1e-9);
        let l = Mat::from_element(1, 1, 1.5);
        assert!(tol.agree(&dilate(&l, &f).unwrap(), &apply_metaplectic(&make_dl(&l).unwrap(), &f).unwrap()));
        let c = Mat::from_element(1, 1, -0.8);
        assert!(tol.agree(
            &chirp_multiply(&c, &f).unwrap(),
            &apply_metaplectic(&make_vc(&c).unwrap(), &f).unwrap()
        ));
        assert!(tol.agree(
            &chirp_convolve(&c, &f).unwrap(),
            &apply_metaplectic(&make_vct(&c).unwrap(), &f).unwrap()
        ));
        // μ(J) = ℱ, including for non-even input
        let fj = apply_free(&make_j(1), &f).unwrap();
        assert!(phase_aligned_error(&fourier(&f).unwrap(), &fj) < 1e-9);
        let w = GeneratorWord { atoms: vec![GeneratorAtom::Interchange { set: vec![1], n: 1 }] };
        assert_eq!(apply_word(&w, &f).unwrap(), fourier(&f).unwrap());
        assert_eq!(apply_word(&GeneratorWord::default(), &f).unwrap(), f);
    }

    #[test]
    fn ast_reproduces_stft_modulus() {
        let f = asym_signal();
        let w = gaussian(g(), 1.0);
        let plan = MetaplecticPlan::new(&make_ast(1)).unwrap();
        assert_eq!(plan.kind, StrategyKind::Interchange);
        let field = plan.apply(&tensor(&f, &w)).unwrap();
        let direct = crate::distributions::stft(&f, &w).unwrap();
        assert!(phase_aligned_error(&direct, &field) < 1e-7);
        assert!(modulus_sup_error(&direct, &field) < 1e-10);
    }

    #[test]
    fn plan_inverse_roundtrip() {
        let f = tensor(&asym_signal(), &hermite(g(), 2));
        for a in [make_ast(1), crate::symplectic::make_atau(0.25, 1), crate::symplectic::make_atau(0.0, 1)] {
            let plan = MetaplecticPlan::new(&a).unwrap();
            let back = plan.apply_inverse(&plan.apply(&f).unwrap()).unwrap();
            let err = back.values.iter().zip(&f.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(err < 1e-8, "{err}");
        }
    }

    #[test]
    fn chirp_transform_constant_measured() {
        let (h, k) = fourier_of_chirp(0.5, g()).unwrap();
        let interior: Vec<f64> = (96..160).map(|i| h.values[i].norm()).collect();
        let mean = interior.iter().sum::<f64>() / interior.len() as f64;
        assert!(interior.iter().all(|v| (v / mean - 1.0).abs() < 0.01));
        assert!((mean / k - 1.0).abs() < 0.01);
        assert!((mean / k - 1.0).abs() < 0.05);
    }
}
