//! Weighted mixed norms, modulation and Wiener amalgam norms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{DistError, stft};
use crate::grid::{Field2D, Grid1D, Signal, lp_norm};
use crate::symplectic::{Mat, mat_from_rows};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormError {
    #[error("window is zero")]
    ZeroWindow,
    #[error("composition matrix is singular")]
    SingularM,
    #[error("exponent must be in (0, ∞], got {0}")]
    BadExponent(f64),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Lower bound applied to every weight value.
pub const WEIGHT_FLOOR: f64 = 1e-30;

/// Weight on the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Weight1 {
    /// `(1 + |t|)^s`
    #[serde(rename = "vs")]
    Polynomial { s: f64 },
    Constant { value: f64 },
}

impl Weight1 {
    pub fn one() -> Self {
        Weight1::Constant { value: 1.0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let v = match self {
            Weight1::Polynomial { s } => (1.0 + t.abs()).powf(*s),
            Weight1::Constant { value } => *value,
        };
        v.max(WEIGHT_FLOOR)
    }
}

/// Weight on phase space `ℝ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Weight {
    /// `v_s(z) = (1 + |z|)^s`
    #[serde(rename = "vs")]
    Polynomial { s: f64 },
    /// `m(x, ξ) = m1(x) · m2(ξ)`
    Separable { m1: Weight1, m2: Weight1 },
    /// `z ↦ base(M z)`
    Composed {
        base: Box<Weight>,
        #[serde(rename = "M")]
        m: Vec<Vec<f64>>,
    },
    Constant { value: f64 },
}

impl Weight {
    pub fn one() -> Self {
        Weight::Constant { value: 1.0 }
    }

    pub fn vs(s: f64) -> Self {
        Weight::Polynomial { s }
    }
}

pub fn weight_eval(w: &Weight, z: [f64; 2]) -> f64 {
    let v = match w {
        Weight::Polynomial { s } => (1.0 + z[0].hypot(z[1])).powf(*s),
        Weight::Separable { m1, m2 } => m1.eval(z[0]) * m2.eval(z[1]),
        Weight::Composed { base, m } => {
            let mz = [m[0][0] * z[0] + m[0][1] * z[1], m[1][0] * z[0] + m[1][1] * z[1]];
            weight_eval(base, mz)
        }
        Weight::Constant { value } => *value,
    };
    v.max(WEIGHT_FLOOR)
}

/// `w ∘ M`; fails for singular `M`.
pub fn weight_compose(w: &Weight, m: &Mat) -> Result<Weight, NormError> {
    if m.nrows() != 2 || m.ncols() != 2 || m.determinant().abs() < 1e-12 {
        return Err(NormError::SingularM);
    }
    if let Weight::Constant { .. } = w {
        return Ok(w.clone());
    }
    Ok(Weight::Composed {
        base: Box::new(w.clone()),
        m: (0..2).map(|i| (0..2).map(|j| m[(i, j)]).collect()).collect(),
    })
}

/// Extremal values of `w1/w2` over the grid `grid × grid`.
pub fn weight_equiv_ratio(w1: &Weight, w2: &Weight, grid: Grid1D) -> (f64, f64) {
    let pts = grid.points();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for &x in &pts {
        for &y in &pts {
            let r = weight_eval(w1, [x, y]) / weight_eval(w2, [x, y]);
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerAxis {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedNormSpec {
    pub p: f64,
    pub q: f64,
    pub weight: Weight,
    pub inner: InnerAxis,
}

impl MixedNormSpec {
    pub fn new(p: f64, q: f64, weight: Weight, inner: InnerAxis) -> Result<Self, NormError> {
        for e in [p, q] {
            if e.is_nan() || e <= 0.0 {
                return Err(NormError::BadExponent(e));
            }
        }
        Ok(Self { p, q, weight, inner })
    }

    pub fn unweighted(p: f64, q: f64) -> Self {
        Self::new(p, q, Weight::one(), InnerAxis::First).expect("positive exponents")
    }
}

/// `‖F‖_{L^{p,q}_m}`: inner `p`-norm along `spec.inner`, outer `q`-norm, Riemann cells.
pub fn mixed_norm(f: &Field2D, spec: &MixedNormSpec) -> f64 {
    let (nx, ny) = (f.nx(), f.ny());
    let (gx, gy) = (f.grid_x, f.grid_y);
    let wv = |j: usize, k: usize| f.at(j, k).norm() * weight_eval(&spec.weight, [gx.t(j), gy.t(k)]);
    let (outer, outer_cell): (Vec<f64>, f64) = match spec.inner {
        InnerAxis::First => (
            (0..ny).map(|k| lp_norm((0..nx).map(|j| wv(j, k)), spec.p, gx.dx())).collect(),
            gy.dx(),
        ),
        InnerAxis::Second => (
            (0..nx).map(|j| lp_norm((0..ny).map(|k| wv(j, k)), spec.p, gy.dx())).collect(),
            gx.dx(),
        ),
    };
    lp_norm(outer.into_iter(), spec.q, outer_cell)
}

fn window_norm(g: &Signal) -> Result<f64, NormError> {
    let n = g.norm2();
    if n == 0.0 || !n.is_finite() {
        return Err(NormError::ZeroWindow);
    }
    Ok(n)
}

/// `‖f‖_{M^{p,q}_m} = ‖V_g f‖_{L^{p,q}_m}`, with `g` scaled to unit norm.
pub fn modulation_norm(f: &Signal, p: f64, q: f64, m: &Weight, g: &Signal) -> Result<f64, NormError> {
    let gn = window_norm(g)?;
    let spec = MixedNormSpec::new(p, q, m.clone(), InnerAxis::First)?;
    Ok(mixed_norm(&stft(f, g)?, &spec) / gn)
}

/// `‖f‖_{W(ℱL^p_{m₁}, L^q_{m₂})} = ‖x ↦ m₂(x) ‖V_g f(x,·) m₁‖_p‖_q`.
pub fn amalgam_norm(f: &Signal, p: f64, q: f64, m1: &Weight1, m2: &Weight1, g: &Signal) -> Result<f64, NormError> {
    let gn = window_norm(g)?;
    let weight = Weight::Separable { m1: m2.clone(), m2: m1.clone() };
    let spec = MixedNormSpec::new(p, q, weight, InnerAxis::Second)?;
    Ok(mixed_norm(&stft(f, g)?, &spec) / gn)
}

/// Parses a weight from rows (used by configs that give `M` inline).
pub fn composed_from_rows(base: Weight, rows: &[Vec<f64>]) -> Result<Weight, NormError> {
    let m = mat_from_rows(rows).map_err(|_| NormError::SingularM)?;
    weight_compose(&base, &m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::fourier;
    use crate::grid::{C64, Sampled, gaussian, hermite, quad_norm, tensor};

    fn g() -> Grid1D {
        Grid1D::desk()
    }

    #[test]
    fn weights() {
        assert_eq!(weight_eval(&Weight::vs(1.0), [3.0, 4.0]), 6.0);
        let rot = Mat::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]);
        let w = weight_compose(&Weight::vs(2.0), &rot).unwrap();
        let (lo, hi) = weight_equiv_ratio(&w, &Weight::vs(2.0), g());
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        let c = Weight::Constant { value: 3.0 };
        assert_eq!(weight_compose(&c, &rot).unwrap(), c);
        assert_eq!(weight_compose(&c, &Mat::zeros(2, 2)), Err(NormError::SingularM));
        let json = serde_json::to_string(&Weight::vs(2.0)).unwrap();
        assert_eq!(json, r#"{"kind":"vs","s":2.0}"#);
        let back: Weight = serde_json::from_str(r#"{"kind":"composed","base":{"kind":"vs","s":1.0},"M":[[1,0],[0,2]]}"#).unwrap();
        assert!((weight_eval(&back, [0.0, 1.0]) - 3.0).abs() < 1e-15);
        assert!(serde_json::from_str::<Weight>(r#"{"kind":"vs","s":1.0,"extra":0}"#).is_err());
    }

    #[test]
    fn separable_and_fubini() {
        let a = hermite(g(), 1);
        let b = gaussian(g(), 1.5);
        let f = tensor(&a, &b);
        for (p, q) in [(1.0, 2.0), (2.0, 2.0), (f64::INFINITY, 1.0), (0.5, 3.0)] {
            let n = mixed_norm(&f, &MixedNormSpec::unweighted(p, q));
            assert!((n - quad_norm(&a, p) * quad_norm(&b, q)).abs() < 1e-10 * n.max(1.0), "{p} {q}");
        }
        let n = mixed_norm(&f, &MixedNormSpec::unweighted(2.0, 2.0));
        assert!((n - quad_norm(&f, 2.0)).abs() < 1e-12);
    }

    #[test]
    fn modulation_and_amalgam_basics() {
        let w = gaussian(g(), 1.0);
        assert!((modulation_norm(&w, 2.0, 2.0, &Weight::one(), &w).unwrap() - 1.0).abs() < 1e-8);
        let one = Weight1::one();
        assert!((amalgam_norm(&w, 2.0, 2.0, &one, &one, &w).unwrap() - 1.0).abs() < 1e-8);
        let zero = Signal::zeros(g());
        assert_eq!(modulation_norm(&w, 1.0, 1.0, &Weight::one(), &zero), Err(NormError::ZeroWindow));
        assert!(matches!(
            modulation_norm(&w, 0.0, 1.0, &Weight::one(), &w),
            Err(NormError::BadExponent(_))
        ));

        let f = hermite(g(), 2).tf_shift(0.5, 0.25);
        let m1 = Weight1::Polynomial { s: 1.0 };
        let m2 = Weight1::Polynomial { s: 0.5 };
        let am = amalgam_norm(&f, 1.5, 1.5, &m1, &m2, &w).unwrap();
        let mm = modulation_norm(&f, 1.5, 1.5, &Weight::Separable { m1: m2.clone(), m2: m1.clone() }, &w).unwrap();
        assert!((am / mm - 1.0).abs() < 1e-10);

        for (p, q) in [(1.0, 2.0), (2.0, 1.0), (1.0, f64::INFINITY)] {
            let a = amalgam_norm(&f, p, q, &one, &one, &w).unwrap();
            let m =
                modulation_norm(&fourier(&f).unwrap(), p, q, &Weight::one(), &fourier(&w).unwrap()).unwrap();
            assert!((a / m - 1.0).abs() < 1e-6, "{p} {q}: {a} {m}");
        }
    }

    #[test]
    fn shift_invariance_unweighted() {
        let w = gaussian(g(), 1.0);
        let f = hermite(g(), 1);
        let a = modulation_norm(&f, 1.0, 2.0, &Weight::one(), &w).unwrap();
        let b = modulation_norm(&f.tf_shift(1.0, -0.5), 1.0, 2.0, &Weight::one(), &w).unwrap();
        assert!((a - b).abs() < 1e-7);
        let v = crate::distributions::stft(&f, &w).unwrap();
        let spec = MixedNormSpec::unweighted(0.7, 0.4);
        let sv = v.with_values(v.values.iter().map(|z| z * C64::new(0.0, -3.0)).collect());
        let (c, d) = (mixed_norm(&sv, &spec), mixed_norm(&v, &spec));
        assert!((c - 3.0 * d).abs() < 1e-12 * c, "{c} {d}");
    }
}
