//! Symplectic matrix algebra.
//!
//! Dense real `2n×2n` matrices with the standard form `J = [[0, I], [-I, 0]]`,
//! constructors for the generators and for the named matrices of the
//! distributions used elsewhere in the crate, block views, the covariance
//! matrices `E_A`/`F_A`, and classification.

use nalgebra::DMatrix;
use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Mat = DMatrix<f64>;

/// Tolerance for structural identities.
pub const TOL_SYM: f64 = 1e-12;
/// Tolerance for invertibility decisions.
pub const TOL_INV: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SympError {
    #[error("singular dilation matrix (|det L| = {0:e})")]
    SingularL(f64),
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("matrix is not free (|det B| = {0:e})")]
    NotFree(f64),
    #[error("matrix is not symplectic (residual {0:e})")]
    NotSymplectic(f64),
}

/// A matrix certified symplectic at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SympMat {
    half_dim: usize,
    m: Mat,
}

impl SympMat {
    /// Wraps `m` after checking `mᵀJm = J` up to a scale-aware tolerance.
    pub fn new(m: Mat) -> Result<Self, SympError> {
        let (r, c) = m.shape();
        if r != c || r == 0 || r % 2 != 0 {
            return Err(SympError::BadShape(format!("{r}×{c} is not 2n×2n")));
        }
        let res = symplectic_residual(&m);
        let scale = 1.0 + m.norm().powi(2);
        if res > 1e-9 * scale {
            return Err(SympError::NotSymplectic(res));
        }
        Ok(Self { half_dim: r / 2, m })
    }

    fn exact(m: Mat) -> Self {
        debug_assert!(symplectic_residual(&m) <= 1e-9 * (1.0 + m.norm().powi(2)));
        Self { half_dim: m.nrows() / 2, m }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SympError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(SympError::BadShape("ragged rows".into()));
        }
        Self::new(Mat::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn half_dim(&self) -> usize {
        self.half_dim
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn into_matrix(self) -> Mat {
        self.m
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.m.nrows())
            .map(|i| self.m.row(i).iter().copied().collect())
            .collect()
    }

    /// `‖AᵀJA − J‖∞` (max-abs entry).
    pub fn residual(&self) -> f64 {
        symplectic_residual(&self.m)
    }

    pub fn det(&self) -> f64 {
        self.m.determinant()
    }

    pub fn mul(&self, other: &SympMat) -> SympMat {
        assert_eq!(self.half_dim, other.half_dim, "half_dim mismatch");
        Self::exact(&self.m * &other.m)
    }

    /// `A⁻¹ = −J Aᵀ J`, exact for symplectic input.
    pub fn inverse(&self) -> SympMat {
        let j = j_matrix(self.half_dim);
        Self::exact(-(&j * self.m.transpose() * &j))
    }

    pub fn identity(n: usize) -> SympMat {
        Self::exact(Mat::identity(2 * n, 2 * n))
    }

    /// Blocks `(A, B, C, D)` of size `n×n`.
    pub fn blocks(&self) -> (Mat, Mat, Mat, Mat) {
        let n = self.half_dim;
        (
            self.m.view((0, 0), (n, n)).into_owned(),
            self.m.view((0, n), (n, n)).into_owned(),
            self.m.view((n, 0), (n, n)).into_owned(),
            self.m.view((n, n), (n, n)).into_owned(),
        )
    }

    /// 4×4 grid of `d×d` blocks `A_{ij}` (0-based indices), for `half_dim = 2d`.
    pub fn blocks4(&self, d: usize) -> Result<[[Mat; 4]; 4], SympError> {
        if d == 0 || self.m.nrows() != 4 * d {
            return Err(SympError::BadShape(format!(
                "{}×{} matrix has no 4×4 grid of {d}×{d} blocks",
                self.m.nrows(),
                self.m.ncols()
            )));
        }
        Ok(std::array::from_fn(|i| {
            std::array::from_fn(|j| self.m.view((i * d, j * d), (d, d)).into_owned())
        }))
    }
}

/// Reassembles a matrix from a 4×4 grid of equally sized square blocks.
pub fn reassemble(b: &[[Mat; 4]; 4]) -> Mat {
    let d = b[0][0].nrows();
    let mut m = Mat::zeros(4 * d, 4 * d);
    for (i, row) in b.iter().enumerate() {
        for (j, blk) in row.iter().enumerate() {
            m.view_mut((i * d, j * d), (d, d)).copy_from(blk);
        }
    }
    m
}

/// Assembles `[[A, B], [C, D]]`.
pub fn from_blocks(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Mat {
    let n = a.nrows();
    let mut m = Mat::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(b);
    m.view_mut((n, 0), (n, n)).copy_from(c);
    m.view_mut((n, n), (n, n)).copy_from(d);
    m
}

pub fn j_matrix(n: usize) -> Mat {
    let i = Mat::identity(n, n);
    from_blocks(&Mat::zeros(n, n), &i, &(-&i), &Mat::zeros(n, n))
}

pub fn symplectic_residual(m: &Mat) -> f64 {
    let n = m.nrows() / 2;
    let j = j_matrix(n);
    (m.transpose() * &j * m - j).amax()
}

pub fn asymmetry(c: &Mat) -> f64 {
    if c.nrows() != c.ncols() {
        return f64::INFINITY;
    }
    (c - c.transpose()).amax()
}

fn check_symmetric(c: &Mat) -> Result<(), SympError> {
    let a = asymmetry(c);
    if a > TOL_SYM {
        Err(SympError::NotSymmetric(a))
    } else {
        Ok(())
    }
}

/// Nearest symmetric matrix; removes rounding asymmetry from products like `B⁻¹A`.
pub fn symmetrize(c: &Mat) -> Mat {
    (c + c.transpose()) * 0.5
}

pub fn make_j(n: usize) -> SympMat {
    SympMat::exact(j_matrix(n))
}

pub fn make_dl(l: &Mat) -> Result<SympMat, SympError> {
    if l.nrows() != l.ncols() || l.nrows() == 0 {
        return Err(SympError::BadShape("L must be square".into()));
    }
    let det = l.determinant();
    if det.abs() < 1e-12 {
        return Err(SympError::SingularL(det.abs()));
    }
    let n = l.nrows();
    let linv = l.clone().try_inverse().ok_or(SympError::SingularL(det.abs()))?;
    let z = Mat::zeros(n, n);
    Ok(SympMat::exact(from_blocks(&linv, &z, &z, &l.transpose())))
}

pub fn make_vc(c: &Mat) -> Result<SympMat, SympError> {
    check_symmetric(c)?;
    let n = c.nrows();
    let i = Mat::identity(n, n);
    Ok(SympMat::exact(from_blocks(&i, &Mat::zeros(n, n), c, &i)))
}

pub fn make_vct(c: &Mat) -> Result<SympMat, SympError> {
    check_symmetric(c)?;
    let n = c.nrows();
    let i = Mat::identity(n, n);
    Ok(SympMat::exact(from_blocks(&i, c, &Mat::zeros(n, n), &i)))
}

/// `Π_𝒥 = ∏_{j∈𝒥} Π_j` with 1-based indices; `Π_j` swaps columns `j` and `j+n`
/// of the identity and negates column `j`.
pub fn make_interchange(set: &[usize], n: usize) -> Result<SympMat, SympError> {
    let mut m = Mat::identity(2 * n, 2 * n);
    for &j in set {
        if j == 0 || j > n {
            return Err(SympError::BadShape(format!("interchange index {j} outside 1..={n}")));
        }
        let (a, b) = (j - 1, j - 1 + n);
        let mut pj = Mat::identity(2 * n, 2 * n);
        pj[(a, a)] = 0.0;
        pj[(b, b)] = 0.0;
        pj[(b, a)] = -1.0;
        pj[(a, b)] = 1.0;
        m *= pj;
    }
    Ok(SympMat::exact(m))
}

fn block4(d: usize, coef: [[f64; 4]; 4]) -> Mat {
    Mat::from_fn(4 * d, 4 * d, |r, c| {
        if r % d == c % d {
            coef[r / d][c / d]
        } else {
            0.0
        }
    })
}

/// Matrix of the STFT: `V_g f = μ(A_ST)(f⊗ḡ)`.
pub fn make_ast(d: usize) -> SympMat {
    SympMat::exact(block4(
        d,
        [
            [1.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 1.0],
            [0.0, 0.0, 0.0, -1.0],
            [-1.0, 0.0, 0.0, 0.0],
        ],
    ))
}

/// Matrix of the τ-Wigner distribution; τ = 0, 1 give the Rihacek and conjugate Rihacek matrices.
pub fn make_atau(tau: f64, d: usize) -> SympMat {
    SympMat::exact(block4(
        d,
        [
            [1.0 - tau, tau, 0.0, 0.0],
            [0.0, 0.0, tau, -(1.0 - tau)],
            [0.0, 0.0, 1.0, 1.0],
            [-1.0, 1.0, 0.0, 0.0],
        ],
    ))
}

/// Matrix of the partial Fourier transform in the second variable.
pub fn make_aft2(d: usize) -> SympMat {
    SympMat::exact(block4(
        d,
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0, 0.0],
        ],
    ))
}

/// `E_A = [[A₁₁, A₁₃], [A₂₁, A₂₃]]`, `F_A = [[A₃₁, A₃₃], [A₄₁, A₄₃]]` (1-based block indices).
pub fn ea_fa(a: &SympMat, d: usize) -> Result<(Mat, Mat), SympError> {
    let b = a.blocks4(d)?;
    let glue = |p: &Mat, q: &Mat, r: &Mat, s: &Mat| from_blocks(p, q, r, s);
    Ok((
        glue(&b[0][0], &b[0][2], &b[1][0], &b[1][2]),
        glue(&b[2][0], &b[2][2], &b[3][0], &b[3][2]),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub free: bool,
    pub shift_invertible: bool,
    #[serde(rename = "det_EA")]
    pub det_ea: f64,
    #[serde(rename = "EA_upper_block_triangular")]
    pub ea_upper: bool,
    #[serde(rename = "EA_lower_block_triangular")]
    pub ea_lower: bool,
}

/// Classification of a `4d×4d` symplectic matrix.
///
/// Triangularity is blockwise: upper means the lower-left `d×d` block of `E_A` vanishes.
pub fn classify(a: &SympMat, d: usize) -> Result<ClassReport, SympError> {
    let (ea, _) = ea_fa(a, d)?;
    let (_, b, _, _) = a.blocks();
    let det_ea = ea.determinant();
    let lower_left = ea.view((d, 0), (d, d)).amax();
    let upper_right = ea.view((0, d), (d, d)).amax();
    Ok(ClassReport {
        free: b.determinant().abs() > TOL_INV,
        shift_invertible: det_ea.abs() > TOL_INV,
        det_ea,
        ea_upper: lower_left <= TOL_SYM,
        ea_lower: upper_right <= TOL_SYM,
    })
}

/// Matrix of `μ(𝒜) ⊗ μ(ℬ)` on functions of two variables (interleaved blocks).
pub fn tensor_matrix(a: &SympMat, b: &SympMat) -> Result<SympMat, SympError> {
    let d = a.half_dim();
    if b.half_dim() != d {
        return Err(SympError::BadShape("tensor factors differ in size".into()));
    }
    let (a1, b1, c1, d1) = a.blocks();
    let (e, f, g, h) = b.blocks();
    let z = Mat::zeros(d, d);
    let grid = [
        [a1, z.clone(), b1, z.clone()],
        [z.clone(), e, z.clone(), f],
        [c1, z.clone(), d1, z.clone()],
        [z.clone(), g, z.clone(), h],
    ];
    Ok(SympMat::exact(reassemble(&grid)))
}

/// `𝒞₁`: lifts `ℬ` onto the second variable.
pub fn lift_right(b: &SympMat) -> SympMat {
    tensor_matrix(&SympMat::identity(b.half_dim()), b).expect("same size")
}

/// `𝒞₂`: lifts `𝒜` onto the first variable.
pub fn lift_left(a: &SympMat) -> SympMat {
    tensor_matrix(a, &SympMat::identity(a.half_dim())).expect("same size")
}

/// One factor of a metaplectic word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorAtom {
    /// `Π_𝒥`, 1-based indices; acts as partial Fourier transforms.
    Interchange { set: Vec<usize>, n: usize },
    /// `D_L`; acts as `|det L|^{1/2} f(L·)`.
    Dilation {
        #[serde(rename = "L")]
        l: Vec<Vec<f64>>,
    },
    /// `V_C`; acts as multiplication by `Φ_C`.
    ChirpMul {
        #[serde(rename = "C")]
        c: Vec<Vec<f64>>,
    },
    /// `V_Cᵀ`; acts as `ℱ Φ_{−C} ℱ⁻¹`.
    ChirpConv {
        #[serde(rename = "C")]
        c: Vec<Vec<f64>>,
    },
}

pub fn mat_from_rows(rows: &[Vec<f64>]) -> Result<Mat, SympError> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    if r == 0 || rows.iter().any(|x| x.len() != c) {
        return Err(SympError::BadShape("empty or ragged matrix".into()));
    }
    Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn mat_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

impl GeneratorAtom {
    pub fn dilation(l: &Mat) -> Self {
        Self::Dilation { l: mat_to_rows(l) }
    }
    pub fn chirp_mul(c: &Mat) -> Self {
        Self::ChirpMul { c: mat_to_rows(c) }
    }
    pub fn chirp_conv(c: &Mat) -> Self {
        Self::ChirpConv { c: mat_to_rows(c) }
    }

    /// Half-dimension the atom acts on.
    pub fn dim(&self) -> usize {
        match self {
            Self::Interchange { n, .. } => *n,
            Self::Dilation { l } => l.len(),
            Self::ChirpMul { c } | Self::ChirpConv { c } => c.len(),
        }
    }

    pub fn matrix(&self) -> Result<SympMat, SympError> {
        match self {
            Self::Interchange { set, n } => make_interchange(set, *n),
            Self::Dilation { l } => make_dl(&mat_from_rows(l)?),
            Self::ChirpMul { c } => make_vc(&mat_from_rows(c)?),
            Self::ChirpConv { c } => make_vct(&mat_from_rows(c)?),
        }
    }
}

/// Ordered atoms; the operator applies them right-to-left, so the symplectic
/// matrix is `atoms[0] · atoms[1] · …`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneratorWord {
    pub atoms: Vec<GeneratorAtom>,
}

impl GeneratorWord {
    pub fn product(&self, n: usize) -> Result<SympMat, SympError> {
        let mut acc = SympMat::identity(n);
        for a in &self.atoms {
            if a.dim() != n {
                return Err(SympError::BadShape(format!(
                    "atom of size {} in a word of size {n}",
                    a.dim()
                )));
            }
            acc = acc.mul(&a.matrix()?);
        }
        Ok(acc)
    }
}

/// Word `[ChirpMul(DB⁻¹), Dilation(B⁻¹), Interchange(all), ChirpMul(B⁻¹A)]`
/// for a free matrix, i.e. `A = V_{DB⁻¹} D_{B⁻¹} J V_{B⁻¹A}`.
pub fn factorize_free(a: &SympMat) -> Result<GeneratorWord, SympError> {
    let n = a.half_dim();
    let (aa, b, _, d) = a.blocks();
    let det = b.determinant();
    if det.abs() <= TOL_INV {
        return Err(SympError::NotFree(det.abs()));
    }
    let binv = b.try_inverse().ok_or(SympError::NotFree(det.abs()))?;
    Ok(GeneratorWord {
        atoms: vec![
            GeneratorAtom::chirp_mul(&symmetrize(&(&d * &binv))),
            GeneratorAtom::dilation(&binv),
            GeneratorAtom::Interchange { set: (1..=n).collect(), n },
            GeneratorAtom::chirp_mul(&symmetrize(&(&binv * &aa))),
        ],
    })
}

/// Value palette for random words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Palette {
    /// Integer entries in `{−2, …, 2}`.
    Full,
    /// Entries in `{−1, −½, 0, ½, 1}`, dilation diagonals in `{±½, ±1, ±2}`.
    Tame,
}

fn draw(rng: &mut impl Rng, palette: Palette) -> f64 {
    match palette {
        Palette::Full => rng.random_range(-2i32..=2) as f64,
        Palette::Tame => [-1.0, -0.5, 0.0, 0.5, 1.0][rng.random_range(0..5usize)],
    }
}

fn random_atom(rng: &mut impl Rng, n: usize, palette: Palette) -> GeneratorAtom {
    match rng.random_range(0..4u8) {
        0 => {
            let set: Vec<usize> = (1..=n).filter(|_| rng.random_bool(0.5)).collect();
            GeneratorAtom::Interchange { set, n }
        }
        1 => loop {
            let l = match palette {
                Palette::Full => Mat::from_fn(n, n, |_, _| draw(rng, palette)),
                Palette::Tame => {
                    let diag = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
                    Mat::from_fn(n, n, |i, j| {
                        if i == j {
                            diag[rng.random_range(0..6usize)]
                        } else if i > j {
                            draw(rng, palette)
                        } else {
                            0.0
                        }
                    })
                }
            };
            if l.determinant().abs() > 0.1 {
                break GeneratorAtom::dilation(&l);
            }
        },
        k => {
            let mut c = Mat::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = draw(rng, palette);
                    c[(i, j)] = v;
                    c[(j, i)] = v;
                }
            }
            if k == 2 {
                GeneratorAtom::chirp_mul(&c)
            } else {
                GeneratorAtom::chirp_conv(&c)
            }
        }
    }
}

/// Random word of 3–8 generators.
pub fn random_word(rng: &mut impl Rng, n: usize, palette: Palette) -> GeneratorWord {
    let len = rng.random_range(3..=8usize);
    GeneratorWord {
        atoms: (0..len).map(|_| random_atom(rng, n, palette)).collect(),
    }
}

/// Random word whose product has spectral norm at most `max_norm`, so that
/// test signals stay inside the sampling box after transformation.
pub fn random_tame_word(rng: &mut impl Rng, n: usize, max_norm: f64) -> (GeneratorWord, SympMat) {
    loop {
        let w = random_word(rng, n, Palette::Tame);
        let a = w.product(n).expect("well-formed word");
        if spectral_norm(a.matrix()) <= max_norm {
            return (w, a);
        }
    }
}

pub fn spectral_norm(m: &Mat) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}
