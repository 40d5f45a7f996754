//! Time-frequency distributions, by direct quadrature and through `μ(A)(f⊗ḡ)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{self, EngineError, MetaplecticPlan};
use crate::grid::{C64, Field2D, Grid1D, Sampled, Signal, shift_samples, tensor};
use crate::symplectic::{
    Mat, SympError, SympMat, TOL_INV, TOL_SYM, asymmetry, from_blocks, lift_left, lift_right,
    make_ast, reassemble,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("C₁₂ is singular (|det| = {0:e})")]
    SingularC12(f64),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Symp(#[from] SympError),
}

fn shared_grid(f: &Signal, g: &Signal) -> Result<Grid1D, DistError> {
    if f.grid != g.grid {
        return Err(DistError::GridMismatch(format!("{:?} vs {:?}", f.grid, g.grid)));
    }
    Ok(f.grid)
}

/// `L` with `𝔗_L F(x,y) = F(y, y−x)`.
pub fn stft_dilation() -> Mat {
    Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 1.0])
}

/// `V_g f(x,ξ) = ∫ f(t) ḡ(t−x) e^{−2πiξt} dt`, computed as `ℱ₂ 𝔗_L (f⊗ḡ)`.
pub fn stft(f: &Signal, g: &Signal) -> Result<Field2D, DistError> {
    shared_grid(f, g)?;
    let h = engine::dilate(&stft_dilation(), &tensor(f, g))?;
    Ok(engine::partial_fourier(&h, 2)?)
}

/// Same as [`stft`] with the integrand built sample by sample.
pub fn stft_direct(f: &Signal, g: &Signal) -> Result<Field2D, DistError> {
    let grid = shared_grid(f, g)?;
    let n = grid.n() as isize;
    let c = grid.center() as isize;
    let h = Field2D::from_fn(grid, grid, |_, _| C64::new(0.0, 0.0));
    let mut v = h.values.clone();
    v.par_chunks_mut(grid.n()).enumerate().for_each(|(j, row)| {
        for (k, out) in row.iter_mut().enumerate() {
            let s = k as isize - j as isize + c;
            if s >= 0 && s < n {
                *out = f.values[k] * g.values[s as usize].conj();
            }
        }
    });
    Ok(engine::partial_fourier(&Field2D { values: v, ..h }, 2)?)
}

/// Integrand `H(x_j, t_k) = f(x_j + a t_k) · conj g(x_j − b t_k)`.
fn lag_product(f: &Signal, g: &Signal, a: f64, b: f64) -> Field2D {
    let grid = f.grid;
    let n = grid.n();
    // column k holds the two shifted copies
    let cols: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let t = grid.t(k);
            let fs = shift_samples(&f.values, grid, a * t);
            let gs = shift_samples(&g.values, grid, -b * t);
            fs.iter().zip(&gs).map(|(x, y)| x * y.conj()).collect()
        })
        .collect();
    let mut v = vec![C64::new(0.0, 0.0); n * n];
    for (k, col) in cols.iter().enumerate() {
        for (j, val) in col.iter().enumerate() {
            v[j * n + k] = *val;
        }
    }
    Field2D { grid_x: grid, grid_y: grid, values: v }
}

/// `Δ Σ_k H(x_j, t_k) e^{−2πi s ξ_m t_k}`; the fast path covers `s = ±1`.
fn scaled_transform(h: &Field2D, s: f64) -> Result<Field2D, DistError> {
    let gy = h.grid_y;
    let n = gy.n();
    if (s - 1.0).abs() < 1e-15 {
        return Ok(engine::partial_fourier(h, 2)?);
    }
    if (s + 1.0).abs() < 1e-15 {
        let t = engine::partial_fourier(h, 2)?;
        let mut v = t.values.clone();
        for j in 0..h.nx() {
            for m in 0..n {
                v[j * n + m] = t.values[j * n + (n - m) % n];
            }
        }
        return Ok(t.with_values(v));
    }
    if !gy.is_self_dual() {
        return Err(EngineError::GridNotSelfDual.into());
    }
    let kernel: Vec<C64> = (0..n * n)
        .map(|idx| {
            let (m, k) = (idx / n, idx % n);
            C64::from_polar(gy.dx(), -2.0 * PI * s * gy.t(m) * gy.t(k))
        })
        .collect();
    let mut v = vec![C64::new(0.0, 0.0); h.values.len()];
    v.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        let src = &h.values[j * n..(j + 1) * n];
        for (m, out) in row.iter_mut().enumerate() {
            let kr = &kernel[m * n..(m + 1) * n];
            *out = src.iter().zip(kr).map(|(a, b)| a * b).sum();
        }
    });
    Ok(h.with_values(v))
}

/// `W_τ(f,g)(x,ξ) = ∫ f(x+τt) ḡ(x−(1−τ)t) e^{−2πiξt} dt`.
///
/// `τ = 0, 1` use the closed Rihaczek forms; otherwise off-grid shifts are
/// band-limited interpolations and on-grid shifts are exact.
pub fn tau_wigner(f: &Signal, g: &Signal, tau: f64) -> Result<Field2D, DistError> {
    shared_grid(f, g)?;
    if tau == 0.0 {
        return rihacek(f, g);
    }
    if tau == 1.0 {
        return conj_rihacek(f, g);
    }
    let h = lag_product(f, g, tau, 1.0 - tau);
    scaled_transform(&h, 1.0)
}

/// `R(f,g)(x,ξ) = f(x) conj(ĝ(ξ)) e^{−2πiξx}`.
pub fn rihacek(f: &Signal, g: &Signal) -> Result<Field2D, DistError> {
    let grid = shared_grid(f, g)?;
    let gh = engine::fourier(g)?;
    Ok(field_indexed(grid, |j, m| {
        f.values[j] * gh.values[m].conj() * C64::from_polar(1.0, -2.0 * PI * grid.t(m) * grid.t(j))
    }))
}

/// `R*(f,g)(x,ξ) = f̂(ξ) conj(g(x)) e^{2πiξx}`.
pub fn conj_rihacek(f: &Signal, g: &Signal) -> Result<Field2D, DistError> {
    let grid = shared_grid(f, g)?;
    let fh = engine::fourier(f)?;
    Ok(field_indexed(grid, |j, m| {
        fh.values[m] * g.values[j].conj() * C64::from_polar(1.0, 2.0 * PI * grid.t(m) * grid.t(j))
    }))
}

fn field_indexed(grid: Grid1D, f: impl Fn(usize, usize) -> C64 + Sync) -> Field2D {
    let n = grid.n();
    let values = (0..n * n).into_par_iter().map(|i| f(i / n, i % n)).collect();
    Field2D { grid_x: grid, grid_y: grid, values }
}

/// `W_A(f,g) = μ(A)(f⊗ḡ)`, defined up to a global unimodular constant.
pub fn metaplectic_wigner(a: &SympMat, f: &Signal, g: &Signal) -> Result<Field2D, DistError> {
    shared_grid(f, g)?;
    if a.half_dim() != 2 {
        return Err(SympError::BadShape(format!("expected 4×4, got {}×{}", 2 * a.half_dim(), 2 * a.half_dim())).into());
    }
    Ok(MetaplecticPlan::new(a)?.apply(&tensor(f, g))?)
}

/// Symmetric `C = [[C₁₁, C₁₂], [C₁₂ᵀ, C₂₂]]` defining the atoms `Φ_C(ξ,·)T_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpAtomSpec {
    pub c11: Mat,
    pub c12: Mat,
    pub c22: Mat,
}

impl ChirpAtomSpec {
    pub fn new(c11: Mat, c12: Mat, c22: Mat) -> Result<Self, DistError> {
        let d = c11.nrows();
        for (name, m) in [("C11", &c11), ("C12", &c12), ("C22", &c22)] {
            if m.nrows() != d || m.ncols() != d {
                return Err(SympError::BadShape(format!("{name} is not {d}×{d}")).into());
            }
        }
        for m in [&c11, &c22] {
            if asymmetry(m) > TOL_SYM {
                return Err(SympError::NotSymmetric(asymmetry(m)).into());
            }
        }
        Ok(Self { c11, c12, c22 })
    }

    /// Scalar case `d = 1`.
    pub fn scalar(c11: f64, c12: f64, c22: f64) -> Self {
        let s = |v| Mat::from_element(1, 1, v);
        Self { c11: s(c11), c12: s(c12), c22: s(c22) }
    }

    pub fn dim(&self) -> usize {
        self.c11.nrows()
    }

    pub fn full(&self) -> Mat {
        from_blocks(&self.c11, &self.c12, &self.c12.transpose(), &self.c22)
    }

    /// `C₁₂^{−T}`, or `SingularC12`.
    fn c12_inv_t(&self) -> Result<Mat, DistError> {
        let det = self.c12.determinant();
        if det.abs() <= TOL_INV {
            return Err(DistError::SingularC12(det.abs()));
        }
        Ok(self.c12.clone().try_inverse().ok_or(DistError::SingularC12(det.abs()))?.transpose())
    }
}

fn scalar_spec(spec: &ChirpAtomSpec) -> Result<(f64, f64, f64), DistError> {
    if spec.dim() != 1 {
        return Err(DistError::GridMismatch("signals are one-dimensional; d must be 1".into()));
    }
    Ok((spec.c11[(0, 0)], spec.c12[(0, 0)], spec.c22[(0, 0)]))
}

/// Shared tail of the generalized families: chirp in `t`, scaled transform, outer chirp in `ξ`.
fn generalized_tail(mut h: Field2D, spec: &ChirpAtomSpec) -> Result<Field2D, DistError> {
    spec.c12_inv_t()?;
    let (c11, c12, c22) = scalar_spec(spec)?;
    let gy = h.grid_y;
    let n = gy.n();
    for (i, v) in h.values.iter_mut().enumerate() {
        let t = gy.t(i % n);
        *v *= C64::from_polar(1.0, -PI * c22 * t * t);
    }
    let mut out = scaled_transform(&h, c12)?;
    let amp = c12.abs().sqrt();
    for (i, v) in out.values.iter_mut().enumerate() {
        let xi = gy.t(i % n);
        *v *= C64::from_polar(amp, -PI * c11 * xi * xi);
    }
    Ok(out)
}

/// `𝒱_{g,C}f(x,ξ) = |det C₁₂|^{1/2} e^{−iπC₁₁ξ·ξ} ∫ f(t) ḡ(t−x) e^{−iπC₂₂t·t} e^{−2πiC₁₂ᵀξ·t} dt`.
pub fn generalized_stft(f: &Signal, g: &Signal, spec: &ChirpAtomSpec) -> Result<Field2D, DistError> {
    shared_grid(f, g)?;
    let h = engine::dilate(&stft_dilation(), &tensor(f, g))?;
    generalized_tail(h, spec)
}

/// `𝒲_{τ,C}(f,g)(x,ξ) = |det C₁₂|^{1/2} e^{−iπC₁₁ξ·ξ} ∫ f(x+τt) ḡ(x−(1−τ)t) e^{−iπC₂₂t·t} e^{−2πiC₁₂ᵀξ·t} dt`.
pub fn generalized_tau_wigner(f: &Signal, g: &Signal, tau: f64, spec: &ChirpAtomSpec) -> Result<Field2D, DistError> {
    shared_grid(f, g)?;
    spec.c12_inv_t()?;
    generalized_tail(lag_product(f, g, tau, 1.0 - tau), spec)
}

/// Matrix of the generalized STFT, `4d×4d`.
pub fn gen_stft_matrix(spec: &ChirpAtomSpec, d: usize) -> Result<SympMat, DistError> {
    if spec.dim() != d {
        return Err(SympError::BadShape(format!("spec has d = {}, requested {d}", spec.dim())).into());
    }
    let k = spec.c12_inv_t()?;
    let i = Mat::identity(d, d);
    let z = Mat::zeros(d, d);
    let (c11, c12, c22) = (&spec.c11, &spec.c12, &spec.c22);
    let kc = &k * c22;
    let ck = c11 * &k;
    let b = [
        [i.clone(), -&i, z.clone(), z.clone()],
        [-&kc, z.clone(), k.clone(), k.clone()],
        [z.clone(), z.clone(), z.clone(), -&i],
        [-c12 + c11 * &kc, z.clone(), -&ck, -&ck],
    ];
    Ok(SympMat::new(reassemble(&b))?)
}

/// Matrix of the generalized `τ`-Wigner distribution, `4d×4d`.
pub fn gen_tau_matrix(tau: f64, spec: &ChirpAtomSpec, d: usize) -> Result<SympMat, DistError> {
    if spec.dim() != d {
        return Err(SympError::BadShape(format!("spec has d = {}, requested {d}", spec.dim())).into());
    }
    let k = spec.c12_inv_t()?;
    let i = Mat::identity(d, d);
    let z = Mat::zeros(d, d);
    let (c11, c12, c22) = (&spec.c11, &spec.c12, &spec.c22);
    let kc = &k * c22;
    let ck = c11 * &k;
    let r4 = -c12 + c11 * &kc;
    let b = [
        [&i * (1.0 - tau), &i * tau, z.clone(), z.clone()],
        [-&kc, kc.clone(), &k * tau, &k * -(1.0 - tau)],
        [z.clone(), z.clone(), i.clone(), i.clone()],
        [r4.clone(), -&r4, &ck * -tau, &ck * (1.0 - tau)],
    ];
    Ok(SympMat::new(reassemble(&b))?)
}

/// `𝒰_g f = ℱ₂𝔗_L(f ⊗ μ(A′)ḡ)`: an STFT with window `conj(μ(A′)ḡ)`.
pub fn modified_window_stft(f: &Signal, g: &Signal, a_prime: &SympMat) -> Result<Field2D, DistError> {
    shared_grid(f, g)?;
    let h = engine::apply_metaplectic(a_prime, &g.conj())?.conj();
    stft(f, &h)
}

/// `𝒰̃_g f = ℱ₂𝔗_L(μ(A′)f ⊗ ḡ)`: an STFT of the transformed signal.
pub fn modified_signal_stft(f: &Signal, g: &Signal, a_prime: &SympMat) -> Result<Field2D, DistError> {
    shared_grid(f, g)?;
    stft(&engine::apply_metaplectic(a_prime, f)?, g)
}

pub fn modified_window_matrix(a_prime: &SympMat) -> SympMat {
    make_ast(a_prime.half_dim()).mul(&lift_right(a_prime))
}

pub fn modified_signal_matrix(a_prime: &SympMat) -> SympMat {
    make_ast(a_prime.half_dim()).mul(&lift_left(a_prime))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian, hermite, modulus_sup_error, phase_aligned_error, quad_norm};
    use crate::norms::{MixedNormSpec, mixed_norm};
    use crate::symplectic::{classify, ea_fa, make_atau, make_dl, make_vc};

    fn g() -> Grid1D {
        Grid1D::desk()
    }

    fn test_pair() -> (Signal, Signal) {
        let f = hermite(g(), 1).tf_shift(0.5, -0.75);
        let w = gaussian(g(), 1.2).tf_shift(-0.25, 0.5);
        (f, w)
    }

    fn max_diff(a: &Field2D, b: &Field2D) -> f64 {
        a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn stft_gaussian_closed_form() {
        let w = gaussian(g(), 1.0);
        let v = stft(&w, &w).unwrap();
        assert!((v.nearest(0.0, 0.0).norm() - 1.0).abs() < 1e-12);
        let err = (0..v.values.len())
            .map(|i| {
                let (x, xi) = (g().t(i / 256), g().t(i % 256));
                (v.values[i].norm() - (-PI * (x * x + xi * xi) / 2.0).exp()).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        let (f, h) = test_pair();
        assert!(max_diff(&stft(&f, &h).unwrap(), &stft_direct(&f, &h).unwrap()) < 1e-12);
    }

    #[test]
    fn stft_against_brute_force_quadrature() {
        let (f, w) = test_pair();
        let v = stft(&f, &w).unwrap();
        for &(j, m) in &[(128usize, 128usize), (120, 140), (135, 110)] {
            let (x, xi) = (g().t(j), g().t(m));
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..256 {
                let t = g().t(k);
                let s = k as isize - j as isize + 128;
                if (0..256).contains(&s) {
                    acc += f.values[k] * w.values[s as usize].conj() * C64::from_polar(g().dx(), -2.0 * PI * xi * t);
                }
            }
            assert!((acc - v.at(j, m)).norm() < 1e-12, "{x} {xi}");
        }
    }

    #[test]
    fn wigner_quadrature_oracle() {
        // W(γ,γ)(x,ξ) = 2 e^{−2π(x²+ξ²)} for γ = 2^{1/4}e^{−πt²}
        let w = gaussian(g(), 1.0);
        let wd = tau_wigner(&w, &w, 0.5).unwrap();
        let err = (0..wd.values.len())
            .map(|i| {
                let (x, xi) = (g().t(i / 256), g().t(i % 256));
                (wd.values[i] - C64::new(2.0 * (-2.0 * PI * (x * x + xi * xi)).exp(), 0.0)).norm()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn rihacek_forms() {
        let (f, w) = test_pair();
        let r = rihacek(&f, &w).unwrap();
        let r_gen = scaled_transform(&lag_product(&f, &w, 0.0, 1.0), 1.0).unwrap();
        assert!(max_diff(&r, &r_gen) < 1e-10);
        let rc = conj_rihacek(&f, &w).unwrap();
        let rc_gen = scaled_transform(&lag_product(&f, &w, 1.0, 0.0), 1.0).unwrap();
        assert!(max_diff(&rc, &rc_gen) < 1e-10);
        let wh = engine::fourier(&w).unwrap();
        for (p, q) in [(1.0, 1.0), (2.0, 1.0), (1.0, f64::INFINITY), (3.0, 1.5)] {
            let lhs = mixed_norm(&r, &MixedNormSpec::unweighted(p, q));
            let rhs = quad_norm(&f, p) * quad_norm(&wh, q);
            assert!((lhs / rhs - 1.0).abs() < 1e-6, "{p} {q}");
        }
    }

    #[test]
    fn wigner_even_for_even_signal() {
        let f = hermite(g(), 2);
        let w = tau_wigner(&f, &f, 0.5).unwrap();
        let n = 256;
        let mut err: f64 = 0.0;
        for j in 1..n {
            for m in 1..n {
                err = err.max((w.at(j, m).norm() - w.at(n - j, n - m).norm()).abs());
            }
        }
        assert!(err < 1e-12);
    }

    #[test]
    fn metaplectic_paths_agree() {
        let (f, w) = test_pair();
        let mw = metaplectic_wigner(&make_ast(1), &f, &w).unwrap();
        assert!(modulus_sup_error(&stft(&f, &w).unwrap(), &mw) < 1e-6);
        for tau in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let direct = tau_wigner(&f, &w, tau).unwrap();
            let via = metaplectic_wigner(&make_atau(tau, 1), &f, &w).unwrap();
            let e = modulus_sup_error(&direct, &via);
            assert!(e < 1e-6, "τ={tau}: {e}");
            assert!((quad_norm(&via, 2.0) - f.norm2() * w.norm2()).abs() < 1e-8);
        }
    }

    #[test]
    fn generalized_reductions() {
        let (f, w) = test_pair();
        let plain = ChirpAtomSpec::scalar(0.0, 1.0, 0.0);
        assert!(max_diff(&generalized_stft(&f, &w, &plain).unwrap(), &stft(&f, &w).unwrap()) < 1e-10);
        assert!(
            max_diff(
                &generalized_tau_wigner(&f, &w, 0.5, &plain).unwrap(),
                &tau_wigner(&f, &w, 0.5).unwrap()
            ) < 1e-10
        );
        assert_eq!(gen_stft_matrix(&plain, 1).unwrap(), make_ast(1));
        assert_eq!(gen_tau_matrix(0.3, &plain, 1).unwrap(), make_atau(0.3, 1));
        // C₁₁ only changes a unimodular prefactor
        let a = generalized_stft(&f, &w, &ChirpAtomSpec::scalar(0.7, 1.0, 0.0)).unwrap();
        assert!(modulus_sup_error(&stft(&f, &w).unwrap(), &a) < 1e-12);
        let bad = ChirpAtomSpec::scalar(0.0, 0.0, 1.0);
        assert!(matches!(generalized_stft(&f, &w, &bad), Err(DistError::SingularC12(_))));
        assert!(matches!(gen_tau_matrix(0.5, &bad, 1), Err(DistError::SingularC12(_))));
    }

    #[test]
    fn generalized_dual_paths() {
        let (f, w) = test_pair();
        for spec in [
            ChirpAtomSpec::scalar(0.5, 1.0, 0.25),
            ChirpAtomSpec::scalar(-0.3, -1.0, 0.5),
            ChirpAtomSpec::scalar(0.2, 0.5, -0.4),
        ] {
            let direct = generalized_stft(&f, &w, &spec).unwrap();
            let via = metaplectic_wigner(&gen_stft_matrix(&spec, 1).unwrap(), &f, &w).unwrap();
            let e = modulus_sup_error(&direct, &via);
            assert!(e < 1e-6, "{spec:?}: {e}");
            for tau in [0.25, 0.5] {
                let direct = generalized_tau_wigner(&f, &w, tau, &spec).unwrap();
                let via = metaplectic_wigner(&gen_tau_matrix(tau, &spec, 1).unwrap(), &f, &w).unwrap();
                let e = modulus_sup_error(&direct, &via);
                assert!(e < 1e-6, "{spec:?} τ={tau}: {e}");
            }
        }
    }

    #[test]
    fn generalized_classification() {
        let spec = ChirpAtomSpec::scalar(0.3, 0.8, 0.6);
        let r = classify(&gen_stft_matrix(&spec, 1).unwrap(), 1).unwrap();
        assert!(r.shift_invertible && r.ea_lower && !r.ea_upper);
        let r = classify(&gen_stft_matrix(&ChirpAtomSpec::scalar(0.3, 0.8, 0.0), 1).unwrap(), 1).unwrap();
        assert!(r.ea_upper);
        for tau in [0.0, 1.0] {
            assert!(!classify(&gen_tau_matrix(tau, &spec, 1).unwrap(), 1).unwrap().shift_invertible);
        }
        let r = classify(&gen_tau_matrix(0.5, &spec, 1).unwrap(), 1).unwrap();
        assert!(r.shift_invertible && !r.ea_upper);
        let spec0 = ChirpAtomSpec::scalar(0.3, 0.8, 0.0);
        assert!(classify(&gen_tau_matrix(0.5, &spec0, 1).unwrap(), 1).unwrap().ea_upper);
        // 2-D blocks are symplectic too
        let s2 = ChirpAtomSpec::new(
            Mat::from_row_slice(2, 2, &[1.0, 0.2, 0.2, -0.5]),
            Mat::from_row_slice(2, 2, &[1.0, 0.5, -0.3, 2.0]),
            Mat::from_row_slice(2, 2, &[0.4, 0.1, 0.1, 0.0]),
        )
        .unwrap();
        assert!(gen_stft_matrix(&s2, 2).is_ok());
        assert!(gen_tau_matrix(0.3, &s2, 2).is_ok());
    }

    #[test]
    fn modified_stfts() {
        let (f, w) = test_pair();
        let id = SympMat::identity(1);
        let v = stft(&f, &w).unwrap();
        // μ(I) is the identity up to a unimodular constant
        assert!(phase_aligned_error(&modified_window_stft(&f, &w, &id).unwrap(), &v) < 1e-12);
        assert!(phase_aligned_error(&modified_signal_stft(&f, &w, &id).unwrap(), &v) < 1e-12);
        let ap = make_vc(&Mat::from_element(1, 1, 0.5)).unwrap().mul(&make_dl(&Mat::from_element(1, 1, 1.25)).unwrap());
        let (e, _) = ea_fa(&modified_signal_matrix(&ap), 1).unwrap();
        assert!((&e - ap.matrix()).amax() < 1e-14);
        let (e, _) = ea_fa(&modified_window_matrix(&ap), 1).unwrap();
        assert!(e[(0, 1)] == 0.0 && e[(1, 0)] == 0.0 && e.determinant().abs() > 0.5);
        for (direct, m) in [
            (modified_window_stft(&f, &w, &ap).unwrap(), modified_window_matrix(&ap)),
            (modified_signal_stft(&f, &w, &ap).unwrap(), modified_signal_matrix(&ap)),
        ] {
            let via = metaplectic_wigner(&m, &f, &w).unwrap();
            assert!(modulus_sup_error(&direct, &via) < 1e-6);
        }
    }

    #[test]
    fn fundamental_identity() {
        let (f, w) = test_pair();
        let v = stft(&f, &w).unwrap();
        let vh = stft(&engine::fourier(&f).unwrap(), &engine::fourier(&w).unwrap()).unwrap();
        let n = 256;
        let mut err: f64 = 0.0;
        for j in 1..n {
            for m in 0..n {
                err = err.max((v.at(j, m).norm() - vh.at(m, n - j).norm()).abs());
            }
        }
        assert!(err < 1e-7, "{err}");
    }
}
