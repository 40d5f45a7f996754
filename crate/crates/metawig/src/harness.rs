//! Desk-scale verification experiments.
//!
//! Each experiment returns an [`ExperimentResult`] with its parameters, the
//! measured quantities and a verdict; experiments whose hypotheses do not hold
//! refuse with [`HarnessError::HypothesisViolated`] instead of reporting.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Value, json};
use thiserror::Error;

use crate::distributions::{
    self, ChirpAtomSpec, DistError, conj_rihacek, gen_stft_matrix, gen_tau_matrix, generalized_stft,
    generalized_tau_wigner, metaplectic_wigner, rihacek, stft, tau_wigner,
};
use crate::engine::{self, EngineError, MetaplecticPlan, fourier};
use crate::grid::{
    C64, Field2D, FamilyDesc, Grid1D, GridError, Sampled, Signal, chirped_gaussian, gaussian, hermite,
    make_family, make_family_with_tol, modulus_sup_error, phase_aligned_error, quad_norm, tensor,
};
use crate::norms::{
    InnerAxis, MixedNormSpec, NormError, Weight, Weight1, amalgam_norm, mixed_norm, modulation_norm,
    weight_compose, weight_equiv_ratio, weight_eval,
};
use crate::symplectic::{
    Mat, SympError, SympMat, classify, ea_fa, j_matrix, lift_left, make_ast, make_atau, make_vc, make_vct,
    mat_to_rows, random_tame_word, tensor_matrix,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Equivalence ratios above this are treated as unbounded weights.
const WEIGHT_EQUIV_CAP: f64 = 1e8;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("degenerate window pair: |⟨g₁,g₂⟩| = {0:e}")]
    DegeneratePair(f64),
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("not grid-compatible: {0}")]
    NotGridCompatible(String),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Symp(#[from] SympError),
}

impl HarnessError {
    /// Refusals on precondition grounds (as opposed to numerical failures).
    pub fn is_refusal(&self) -> bool {
        matches!(self, HarnessError::HypothesisViolated(_) | HarnessError::DegeneratePair(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Informative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema_version: u32,
    pub name: String,
    pub parameters: Value,
    pub measured: BTreeMap<String, f64>,
    pub thresholds: BTreeMap<String, f64>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ExperimentResult {
    fn new(name: &str, parameters: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            parameters,
            measured: BTreeMap::new(),
            thresholds: BTreeMap::new(),
            verdict: Verdict::Informative,
            notes: Vec::new(),
        }
    }

    fn measure(&mut self, key: &str, v: f64) -> &mut Self {
        self.measured.insert(key.into(), v);
        self
    }

    fn threshold(&mut self, key: &str, v: f64) -> &mut Self {
        self.thresholds.insert(key.into(), v);
        self
    }

    fn flag(&mut self, key: &str, v: bool) -> &mut Self {
        self.measure(key, if v { 1.0 } else { 0.0 })
    }

    fn conclude(mut self, pass: bool) -> Self {
        self.verdict = if pass { Verdict::Pass } else { Verdict::Fail };
        self
    }

    pub fn get(&self, key: &str) -> f64 {
        self.measured.get(key).copied().unwrap_or(f64::NAN)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

/// Exponents in reports: `∞` is written as `"inf"`.
pub fn exponent_json(p: f64) -> Value {
    if p.is_infinite() { json!("inf") } else { json!(p) }
}

fn mat_json(m: &Mat) -> Value {
    json!(mat_to_rows(m))
}

fn spread(r: &[f64]) -> (f64, f64, f64) {
    let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = r.iter().copied().fold(0.0, f64::max);
    (lo, hi, hi / lo)
}

fn monotone(r: &[f64]) -> bool {
    let up = r.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9));
    let down = r.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    up || down
}

/// Smallest `s ≤ 64` with `s·E` integral, so that `E` maps the `sΔ` lattice into the grid.
pub fn lattice_step(e: &Mat) -> Option<usize> {
    (1..=64).find(|&s| e.iter().all(|v| (v * s as f64 - (v * s as f64).round()).abs() < 1e-9))
}

fn field_shift_indices(e: &Mat, w: [f64; 2], dx: f64) -> (isize, isize) {
    let ew = [e[(0, 0)] * w[0] + e[(0, 1)] * w[1], e[(1, 0)] * w[0] + e[(1, 1)] * w[1]];
    ((ew[0] / dx).round() as isize, (ew[1] / dx).round() as isize)
}

/// `|F(z − a)|` sampled on the grid, `a` in cells.
fn translated_modulus(f: &Field2D, a: isize, b: isize) -> Vec<f64> {
    let (nx, ny) = (f.nx() as isize, f.ny() as isize);
    let mut out = vec![0.0; f.values.len()];
    for j in 0..nx {
        for k in 0..ny {
            let (sj, sk) = (j - a, k - b);
            if sj >= 0 && sj < nx && sk >= 0 && sk < ny {
                out[(j * ny + k) as usize] = f.at(sj as usize, sk as usize).norm();
            }
        }
    }
    out
}

/// `W_A(π(w)f, g)` from `W_A(f, g)`:
/// `e^{iπ(w₁w₂ − Ew·Fw)} π(Ew, Fw) W_A(f,g)` with `π(a,b)F(z) = e^{2πib·z}F(z−a)`.
///
/// `Ew` must land on the grid.
pub fn covariance_image(w0: &Field2D, e: &Mat, f: &Mat, w: [f64; 2]) -> Field2D {
    let ew = [e[(0, 0)] * w[0] + e[(0, 1)] * w[1], e[(1, 0)] * w[0] + e[(1, 1)] * w[1]];
    let fw = [f[(0, 0)] * w[0] + f[(0, 1)] * w[1], f[(1, 0)] * w[0] + f[(1, 1)] * w[1]];
    let phase = C64::from_polar(1.0, PI * (w[0] * w[1] - ew[0] * fw[0] - ew[1] * fw[1]));
    let (gx, gy) = (w0.grid_x, w0.grid_y);
    let (a, b) = ((ew[0] / gx.dx()).round() as isize, (ew[1] / gy.dx()).round() as isize);
    let (nx, ny) = (w0.nx() as isize, w0.ny() as isize);
    let mut v = vec![C64::new(0.0, 0.0); w0.values.len()];
    v.par_chunks_mut(ny as usize).enumerate().for_each(|(j, row)| {
        let sj = j as isize - a;
        if sj < 0 || sj >= nx {
            return;
        }
        let x = gx.t(j);
        for (k, out) in row.iter_mut().enumerate() {
            let sk = k as isize - b;
            if sk >= 0 && sk < ny {
                let z = C64::from_polar(1.0, 2.0 * PI * (fw[0] * x + fw[1] * gy.t(k)));
                *out = phase * z * w0.at(sj as usize, sk as usize);
            }
        }
    });
    w0.with_values(v)
}

/// Shifts `w` on the `sΔ` lattice with `|w_i| ≤ radius`, both components nonzero.
pub fn lattice_shifts(e: &Mat, grid: Grid1D, count: usize, radius: f64, rng: &mut ChaCha8Rng) -> Result<Vec<[f64; 2]>, HarnessError> {
    let s = lattice_step(e).ok_or_else(|| HarnessError::NotGridCompatible(format!("E = {e}")))?;
    let h = s as f64 * grid.dx();
    let kmax = ((radius / h).floor() as i64).max(1);
    Ok((0..count)
        .map(|_| {
            let mut pick = || loop {
                let k = rng.random_range(-kmax..=kmax);
                if k != 0 {
                    return k as f64 * h;
                }
            };
            [pick(), pick()]
        })
        .collect())
}

/// Covariance identity in modulus: `|W_A(π(w)f,g)| = |W_A(f,g)(· − E w)|`.
///
/// `e_override` replaces `E_A` (negative controls).
pub fn exp_covariance(
    a: &SympMat,
    family: &[Signal],
    g: &Signal,
    shifts: &[[f64; 2]],
    e_override: Option<&Mat>,
) -> Result<ExperimentResult, HarnessError> {
    let (e_true, _) = ea_fa(a, 1)?;
    let e = e_override.cloned().unwrap_or(e_true.clone());
    let mut r = ExperimentResult::new(
        if e_override.is_some() { "covariance_control" } else { "covariance" },
        json!({"A": mat_json(a.matrix()), "E_used": mat_json(&e), "family_size": family.len(), "shifts": shifts}),
    );
    let plan = MetaplecticPlan::new(a)?;
    let mut worst: f64 = 0.0;
    let mut max_mod: f64 = 0.0;
    for f in family {
        let w0 = plan.apply(&tensor(f, g))?;
        let m = w0.max_modulus();
        max_mod = max_mod.max(m);
        for &w in shifts {
            let ws = plan.apply(&tensor(&f.tf_shift(w[0], w[1]), g))?;
            let (ia, ib) = field_shift_indices(&e, w, g.grid.dx());
            let tr = translated_modulus(&w0, ia, ib);
            let dev = ws.values.iter().zip(&tr).map(|(x, y)| (x.norm() - y).abs()).fold(0.0, f64::max) / m;
            worst = worst.max(dev);
        }
    }
    r.measure("max_deviation", worst).measure("max_modulus", max_mod).threshold("max_deviation", 1e-6);
    Ok(r.conclude(worst <= 1e-6 && max_mod.is_finite()))
}

/// `‖W_A(f,g)‖_{L^{p,q}_m}` for each family member, through the metaplectic engine.
fn wigner_norms(a: &SympMat, spec: &MixedNormSpec, family: &[Signal], g: &Signal) -> Result<Vec<f64>, HarnessError> {
    let plan = MetaplecticPlan::new(a)?;
    family.iter().map(|f| Ok(mixed_norm(&plan.apply(&tensor(f, g))?, spec))).collect()
}

fn modulation_norms(p: f64, q: f64, m: &Weight, family: &[Signal], g: &Signal) -> Result<Vec<f64>, HarnessError> {
    family.iter().map(|f| Ok(modulation_norm(f, p, q, m, g)?)).collect()
}

fn check_weight_equivalence(m: &Weight, e: &Mat, grid: Grid1D) -> Result<(f64, f64), HarnessError> {
    let inv = e.clone().try_inverse().ok_or_else(|| HarnessError::HypothesisViolated("E_A singular".into()))?;
    let (lo, hi) = weight_equiv_ratio(m, &weight_compose(m, &inv)?, grid);
    if hi / lo > WEIGHT_EQUIV_CAP {
        return Err(HarnessError::HypothesisViolated(format!("m ∘ E_A⁻¹ not equivalent to m (ratio {:e})", hi / lo)));
    }
    Ok((lo, hi))
}

fn gate_exponents(p: f64, q: f64) -> Result<(), HarnessError> {
    if !(p >= 1.0 && q >= 1.0) {
        return Err(HarnessError::HypothesisViolated(format!("need 1 ≤ p,q ≤ ∞, got ({p}, {q})")));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn ratio_experiment(
    name: &str,
    a: &SympMat,
    p: f64,
    q: f64,
    m: &Weight,
    family: &[Signal],
    g: &Signal,
    r_bound: f64,
) -> Result<ExperimentResult, HarnessError> {
    let spec = MixedNormSpec::new(p, q, m.clone(), InnerAxis::First)?;
    let num = wigner_norms(a, &spec, family, g)?;
    let den = modulation_norms(p, q, m, family, g)?;
    let ratios: Vec<f64> = num.iter().zip(&den).map(|(a, b)| a / b).collect();
    let (lo, hi, s) = spread(&ratios);
    let mut r = ExperimentResult::new(
        name,
        json!({"A": mat_json(a.matrix()), "p": exponent_json(p), "q": exponent_json(q), "weight": m, "family_size": family.len()}),
    );
    r.measure("ratio_min", lo).measure("ratio_max", hi).measure("ratio_spread", s).threshold("ratio_spread", r_bound);
    Ok(r.conclude(s <= r_bound))
}

/// Norm equivalence for shift-invertible `A` with upper-triangular `E_A`.
pub fn exp_equivalence(
    a: &SympMat,
    p: f64,
    q: f64,
    m: &Weight,
    family: &[Signal],
    g: &Signal,
    r_bound: f64,
) -> Result<ExperimentResult, HarnessError> {
    gate_exponents(p, q)?;
    let cls = classify(a, 1)?;
    if !(cls.shift_invertible && cls.ea_upper) {
        return Err(HarnessError::HypothesisViolated(format!(
            "need shift-invertible with upper-triangular E_A, got {cls:?}"
        )));
    }
    let (e, _) = ea_fa(a, 1)?;
    let (lo, hi) = check_weight_equivalence(m, &e, g.grid)?;
    let mut r = ratio_experiment("equivalence", a, p, q, m, family, g, r_bound)?;
    r.measure("weight_equiv_min", lo).measure("weight_equiv_max", hi);
    Ok(r)
}

/// Same for `p = q`, without the triangularity requirement.
pub fn exp_diagonal_case(a: &SympMat, p: f64, m: &Weight, family: &[Signal], g: &Signal, r_bound: f64) -> Result<ExperimentResult, HarnessError> {
    gate_exponents(p, p)?;
    let cls = classify(a, 1)?;
    if !cls.shift_invertible {
        return Err(HarnessError::HypothesisViolated("W_A is not shift-invertible".into()));
    }
    let (e, _) = ea_fa(a, 1)?;
    check_weight_equivalence(m, &e, g.grid)?;
    ratio_experiment("diagonal_case", a, p, p, m, family, g, r_bound)
}

fn drift_verdict(r: &mut ExperimentResult, ratios: &[f64], p: f64, q: f64) -> bool {
    let (lo, hi, s) = spread(ratios);
    let mono = monotone(ratios);
    r.measure("ratio_min", lo).measure("ratio_max", hi).measure("ratio_drift", s).flag("monotone", mono);
    for (i, v) in ratios.iter().enumerate() {
        r.measure(&format!("ratio_{i}"), *v);
    }
    if p == q {
        r.threshold("flat_within", 2.0).flag("flat", s <= 2.0);
        false
    } else {
        r.threshold("ratio_drift", 10.0);
        mono && s >= 10.0
    }
}

/// Rihaczek product formula `‖W₀(f,g)‖_{L^{p,q}} = ‖f‖_p‖ĝ‖_q` over a family.
pub fn exp_rihacek_product_formula(p: f64, q: f64, family: &[Signal], g: &Signal) -> Result<ExperimentResult, HarnessError> {
    let gh = fourier(g)?;
    let spec = MixedNormSpec::unweighted(p, q);
    let mut worst: f64 = 0.0;
    let mut worst_direct: f64 = 0.0;
    let via = wigner_norms(&make_atau(0.0, 1), &spec, family, g)?;
    for (f, v) in family.iter().zip(&via) {
        let want = quad_norm(f, p) * quad_norm(&gh, q);
        worst = worst.max((v / want - 1.0).abs());
        worst_direct = worst_direct.max((mixed_norm(&rihacek(f, g)?, &spec) / want - 1.0).abs());
    }
    let mut r = ExperimentResult::new(
        "rihacek_product_formula",
        json!({"p": exponent_json(p), "q": exponent_json(q), "family_size": family.len()}),
    );
    r.measure("max_rel_deviation", worst).measure("max_rel_deviation_direct", worst_direct).threshold("max_rel_deviation", 1e-6);
    Ok(r.conclude(worst <= 1e-6 && worst_direct <= 1e-6))
}

/// Rihaczek counterexample: product formula plus ratio drift along a sweep.
pub fn exp_rihacek_failure(p: f64, q: f64, sweep: &[Signal], g: &Signal) -> Result<ExperimentResult, HarnessError> {
    let formula = exp_rihacek_product_formula(p, q, sweep, g)?;
    let spec = MixedNormSpec::unweighted(p, q);
    let num = wigner_norms(&make_atau(0.0, 1), &spec, sweep, g)?;
    let den = modulation_norms(p, q, &Weight::one(), sweep, g)?;
    let ratios: Vec<f64> = num.iter().zip(&den).map(|(a, b)| a / b).collect();
    let mut r = ExperimentResult::new(
        "rihacek_failure",
        json!({"p": exponent_json(p), "q": exponent_json(q), "sweep_size": sweep.len()}),
    );
    let drift_ok = drift_verdict(&mut r, &ratios, p, q);
    let formula_ok = formula.verdict == Verdict::Pass;
    r.measure("product_formula_deviation", formula.get("max_rel_deviation")).flag("product_formula_ok", formula_ok);
    r.measure("max_edge_ratio", sweep.iter().map(|f| f.edge_ratio()).fold(0.0, f64::max));
    if p == q {
        return Ok(r);
    }
    Ok(r.conclude(formula_ok && drift_ok))
}

pub fn lower_triangular_matrix(c: f64) -> Result<SympMat, HarnessError> {
    Ok(make_ast(1).mul(&lift_left(&make_vc(&Mat::from_element(1, 1, c))?)))
}

/// `A = A_ST·Ṽ_C`: lower- but not upper-triangular `E_A`, ratio drift along a sweep.
pub fn exp_lower_triangular_failure(c: f64, p: f64, q: f64, sweep: &[Signal], g: &Signal) -> Result<ExperimentResult, HarnessError> {
    if c == 0.0 {
        return Err(HarnessError::HypothesisViolated("C = 0 reduces to the STFT".into()));
    }
    let a = lower_triangular_matrix(c)?;
    let cls = classify(&a, 1)?;
    let shape_ok = cls.shift_invertible && cls.ea_lower && !cls.ea_upper;
    let spec = MixedNormSpec::unweighted(p, q);
    let num = wigner_norms(&a, &spec, sweep, g)?;
    let den = modulation_norms(p, q, &Weight::one(), sweep, g)?;
    let ratios: Vec<f64> = num.iter().zip(&den).map(|(a, b)| a / b).collect();
    let mut r = ExperimentResult::new(
        "lower_triangular_failure",
        json!({"C": c, "A": mat_json(a.matrix()), "p": exponent_json(p), "q": exponent_json(q), "sweep_size": sweep.len()}),
    );
    r.flag("ea_lower_not_upper", shape_ok);
    r.measure("max_edge_ratio", sweep.iter().map(|f| f.edge_ratio()).fold(0.0, f64::max));
    let drift_ok = drift_verdict(&mut r, &ratios, p, q);
    if p == q {
        return Ok(r);
    }
    Ok(r.conclude(shape_ok && drift_ok))
}

/// `A = A_ST·Ṽ_{Cᵀ}` with `C = 1`: `E_A = [[1,1],[0,1]]`, upper but not lower.
pub fn upper_triangular_matrix() -> Result<SympMat, HarnessError> {
    Ok(make_ast(1).mul(&lift_left(&make_vct(&Mat::from_element(1, 1, 1.0))?)))
}

/// `Ẽ_A = −J·E_A·swap`, the matrix governing the amalgam ordering.
pub fn tilde_e(e: &Mat) -> Mat {
    let swap = Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    -j_matrix(1) * e * swap
}

/// Wiener amalgam characterization for lower-triangular `E_A`.
#[allow(clippy::too_many_arguments)]
pub fn exp_amalgam(
    a: &SympMat,
    p: f64,
    q: f64,
    m1: &Weight1,
    m2: &Weight1,
    family: &[Signal],
    g: &Signal,
    r_bound: f64,
) -> Result<ExperimentResult, HarnessError> {
    gate_exponents(p, q)?;
    let cls = classify(a, 1)?;
    if !(cls.shift_invertible && cls.ea_lower) {
        return Err(HarnessError::HypothesisViolated(format!(
            "need shift-invertible with lower-triangular E_A, got {cls:?}"
        )));
    }
    let grid = g.grid;
    let refl = grid.points().iter().map(|&t| m2.eval(t) / m2.eval(-t)).fold(1.0f64, |a, b| a.max(b.max(1.0 / b)));
    if refl > WEIGHT_EQUIV_CAP {
        return Err(HarnessError::HypothesisViolated("m₂ not equivalent to its reflection".into()));
    }
    let (e, _) = ea_fa(a, 1)?;
    let sep = Weight::Separable { m1: m1.clone(), m2: m2.clone() };
    let (lo_w, hi_w) = check_weight_equivalence(&sep, &tilde_e(&e), grid)?;
    // amalgam order: inner over ξ weighted by m₁, outer over x weighted by m₂
    let spec = MixedNormSpec::new(p, q, Weight::Separable { m1: m2.clone(), m2: m1.clone() }, InnerAxis::Second)?;
    let num = wigner_norms(a, &spec, family, g)?;
    let den: Vec<f64> = family.iter().map(|f| amalgam_norm(f, p, q, m1, m2, g)).collect::<Result<_, _>>()?;
    let ratios: Vec<f64> = num.iter().zip(&den).map(|(a, b)| a / b).collect();
    let (lo, hi, s) = spread(&ratios);
    let mut r = ExperimentResult::new(
        "amalgam",
        json!({"A": mat_json(a.matrix()), "p": exponent_json(p), "q": exponent_json(q), "m1": m1, "m2": m2, "family_size": family.len()}),
    );
    r.measure("ratio_min", lo).measure("ratio_max", hi).measure("ratio_spread", s).threshold("ratio_spread", r_bound);
    r.measure("weight_equiv_min", lo_w).measure("weight_equiv_max", hi_w);
    // V_g f(x,ξ) = e^{−2πixξ} V_ĝ f̂(ξ,−x); the weights are even
    let gh = fourier(g)?;
    let swapped = Weight::Separable { m1: m1.clone(), m2: m2.clone() };
    let mut fund: f64 = 0.0;
    for (f, am) in family.iter().zip(&den) {
        fund = fund.max((am / modulation_norm(&fourier(f)?, p, q, &swapped, &gh)? - 1.0).abs());
    }
    r.measure("fundamental_identity_deviation", fund).threshold("fundamental_identity_deviation", 1e-6);
    let fund_ok = fund <= 1e-6;
    if p == q {
        // the two orders coincide for p = q
        let sep_mod = Weight::Separable { m1: m2.clone(), m2: m1.clone() };
        let wem = family
            .iter()
            .map(|f| Ok((amalgam_norm(f, p, q, m1, m2, g)? / modulation_norm(f, p, q, &sep_mod, g)? - 1.0).abs()))
            .collect::<Result<Vec<f64>, HarnessError>>()?
            .into_iter()
            .fold(0.0, f64::max);
        r.measure("amalgam_vs_modulation", wem).threshold("amalgam_vs_modulation", 1e-10);
        return Ok(r.conclude(s <= r_bound && wem <= 1e-10 && fund_ok));
    }
    Ok(r.conclude(s <= r_bound && fund_ok))
}

/// `W_A(f,g)` rebuilt as `⟨γ,g⟩⁻¹ Σ_w V_g f(w) W_A(π(w)γ, g) |cell|` over the `sΔ` lattice,
/// each `W_A(π(w)γ,g)` taken from the covariance identity.
pub fn lattice_representation(a: &SympMat, f: &Signal, gamma: &Signal, g: &Signal) -> Result<(Field2D, Field2D), HarnessError> {
    let grid = f.grid;
    let (e, fm) = ea_fa(a, 1)?;
    let s = lattice_step(&e).ok_or_else(|| HarnessError::NotGridCompatible(format!("E = {e}")))?;
    let plan = MetaplecticPlan::new(a)?;
    let w0 = plan.apply(&tensor(gamma, g))?;
    let direct = plan.apply(&tensor(f, g))?;
    let vgf = stft(f, g)?;
    let gg = crate::grid::inner(gamma, g);
    let n = grid.n();
    let h = grid.center();
    let dx = grid.dx();
    let cell = (s as f64 * dx).powi(2);
    let vmax = vgf.max_modulus();
    struct Term {
        c: C64,
        a: isize,
        b: isize,
        fw: [f64; 2],
    }
    let mut terms = Vec::new();
    for j in (0..n).filter(|j| (*j as isize - h as isize).rem_euclid(s as isize) == 0) {
        for k in (0..n).filter(|k| (*k as isize - h as isize).rem_euclid(s as isize) == 0) {
            let v = vgf.at(j, k);
            if v.norm() <= 1e-15 * vmax {
                continue;
            }
            let w = [grid.t(j), grid.t(k)];
            let ew = [e[(0, 0)] * w[0] + e[(0, 1)] * w[1], e[(1, 0)] * w[0] + e[(1, 1)] * w[1]];
            let fw = [fm[(0, 0)] * w[0] + fm[(0, 1)] * w[1], fm[(1, 0)] * w[0] + fm[(1, 1)] * w[1]];
            let phase = C64::from_polar(1.0, PI * (w[0] * w[1] - ew[0] * fw[0] - ew[1] * fw[1]));
            terms.push(Term {
                c: v * phase * cell / gg,
                a: (ew[0] / dx).round() as isize,
                b: (ew[1] / dx).round() as isize,
                fw,
            });
        }
    }
    let wmax = w0.max_modulus();
    let row_live: Vec<bool> = (0..n).map(|j| (0..n).any(|k| w0.at(j, k).norm() > 1e-15 * wmax)).collect();
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(j, acc)| {
        let x = grid.t(j);
        for t in &terms {
            let src = j as isize - t.a;
            if src < 0 || src >= n as isize || !row_live[src as usize] {
                continue;
            }
            let row = &w0.values[src as usize * n..(src as usize + 1) * n];
            let lead = t.c * C64::from_polar(1.0, 2.0 * PI * t.fw[0] * x);
            let step = C64::from_polar(1.0, 2.0 * PI * t.fw[1] * dx);
            let mut z = C64::from_polar(1.0, 2.0 * PI * t.fw[1] * grid.t(0));
            for (m, slot) in acc.iter_mut().enumerate() {
                let sm = m as isize - t.b;
                if sm >= 0 && sm < n as isize {
                    *slot += lead * z * row[sm as usize];
                }
                z *= step;
            }
        }
    });
    Ok((direct.with_values(out), direct))
}

fn rel_l2<S: Sampled>(approx: &S, exact: &S) -> f64 {
    let num: f64 = approx.values().iter().zip(exact.values()).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = exact.values().iter().map(|b| b.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Inversion `f = ⟨g₂,g₁⟩⁻¹ ∫ μ(A)⁻¹W_A(f,g₁)(·,ξ) g₂(ξ) dξ` and the lattice representation.
pub fn exp_inversion(f: &Signal, g1: &Signal, g2: &Signal, a: &SympMat) -> Result<ExperimentResult, HarnessError> {
    inversion(f, g1, g2, a, None)
}

/// Negative control: analyse with `a`, invert with `b`.
pub fn exp_inversion_control(f: &Signal, g1: &Signal, g2: &Signal, a: &SympMat, b: &SympMat) -> Result<ExperimentResult, HarnessError> {
    let mut r = inversion(f, g1, g2, a, Some(b))?;
    r.name = "inversion_control".into();
    Ok(r)
}

fn inversion(f: &Signal, g1: &Signal, g2: &Signal, a: &SympMat, inverse_with: Option<&SympMat>) -> Result<ExperimentResult, HarnessError> {
    let pair = crate::grid::inner(g2, g1);
    if pair.norm() <= 1e-3 {
        return Err(HarnessError::DegeneratePair(pair.norm()));
    }
    let grid = f.grid;
    let n = grid.n();
    let plan = MetaplecticPlan::new(a)?;
    let w = plan.apply(&tensor(f, g1))?;
    let back = match inverse_with {
        Some(b) => MetaplecticPlan::new(b)?.apply_inverse(&w)?,
        None => plan.apply_inverse(&w)?,
    };
    let rec = Signal::new(
        grid,
        (0..n)
            .map(|j| (0..n).map(|m| back.at(j, m) * g2.values[m]).sum::<C64>() * grid.dx() / pair)
            .collect(),
    )?;
    let inv_err = rel_l2(&rec, f);
    let (approx, direct) = lattice_representation(a, f, g2, g1)?;
    let repr_err = match inverse_with {
        // the representation of W_b against that of W_a
        Some(b) => rel_l2(&approx, &MetaplecticPlan::new(b)?.apply(&tensor(f, g1))?),
        None => rel_l2(&approx, &direct),
    };
    let mut r = ExperimentResult::new("inversion", json!({"A": mat_json(a.matrix()), "strategy": plan.kind}));
    r.measure("inversion_rel_l2", inv_err)
        .measure("representation_rel_l2", repr_err)
        .threshold("inversion_rel_l2", 1e-4)
        .threshold("representation_rel_l2", 1e-4);
    Ok(r.conclude(inv_err <= 1e-4 && repr_err <= 1e-4))
}

/// Smooth positive centred Gaussian sum times a unimodular chirp.
pub fn smooth_field(grid: Grid1D, rng: &mut ChaCha8Rng) -> Field2D {
    let terms: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| (rng.random_range(0.5..1.5), rng.random_range(0.6..1.4), rng.random_range(0.6..1.4)))
        .collect();
    let (c1, c2) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
    Field2D::from_fn(grid, grid, |x, y| {
        let m: f64 = terms.iter().map(|(a, wx, wy)| a * (-PI * ((x / wx).powi(2) + (y / wy).powi(2))).exp()).sum();
        C64::from_polar(m, PI * (c1 * x * x + c2 * y * y))
    })
}

fn inv_exp(p: f64) -> f64 {
    if p.is_infinite() { 0.0 } else { 1.0 / p }
}

/// `‖𝔗_S F‖ / ‖F‖` on `L^{p,q}` against the closed forms; optional weighted transfer check.
pub fn exp_dilation_norms(s: &Mat, p: f64, q: f64, m: Option<&Weight>, fields: usize, rng: &mut ChaCha8Rng, grid: Grid1D) -> Result<ExperimentResult, HarnessError> {
    dilation_norms(s, p, q, m, fields, rng, grid, false)
}

/// Negative control: the same measurement against the closed form with `p` and `q` exchanged.
pub fn exp_dilation_norms_control(s: &Mat, p: f64, q: f64, fields: usize, rng: &mut ChaCha8Rng, grid: Grid1D) -> Result<ExperimentResult, HarnessError> {
    let mut r = dilation_norms(s, p, q, None, fields, rng, grid, true)?;
    r.name = "dilation_norms_control".into();
    Ok(r)
}

#[allow(clippy::too_many_arguments)]
fn dilation_norms(
    s: &Mat,
    p: f64,
    q: f64,
    m: Option<&Weight>,
    fields: usize,
    rng: &mut ChaCha8Rng,
    grid: Grid1D,
    swap_claim: bool,
) -> Result<ExperimentResult, HarnessError> {
    if s.nrows() != 2 || s.ncols() != 2 {
        return Err(HarnessError::BadShape(format!("S is {}×{}, expected 2×2", s.nrows(), s.ncols())));
    }
    let det = s.determinant();
    if det.abs() < 1e-12 {
        return Err(HarnessError::HypothesisViolated("S is singular".into()));
    }
    let (cp, cq) = if swap_claim { (q, p) } else { (p, q) };
    let expected = if s[(1, 0)] == 0.0 {
        s[(0, 0)].abs().powf(0.5 - inv_exp(cp)) * s[(1, 1)].abs().powf(0.5 - inv_exp(cq))
    } else if p == q {
        det.abs().powf(0.5 - inv_exp(p))
    } else {
        return Err(HarnessError::HypothesisViolated("p ≠ q needs block upper-triangular S".into()));
    };
    let compatible = s.iter().all(|v| (v - v.round()).abs() < 1e-12);
    let tol = if compatible { 1e-6 } else { 1e-3 };
    let spec = MixedNormSpec::unweighted(p, q);
    let mut worst: f64 = 0.0;
    let mut weighted_ok = true;
    let mut r = ExperimentResult::new(
        "dilation_norms",
        json!({"S": mat_json(s), "p": exponent_json(p), "q": exponent_json(q), "weight": m, "fields": fields}),
    );
    let bounds = m.map(|w| {
        let sinv = s.clone().try_inverse().expect("nonsingular");
        let (lo, hi) = weight_equiv_ratio(&weight_compose(w, &sinv).expect("nonsingular"), w, grid);
        (lo, hi)
    });
    for _ in 0..fields {
        let f = smooth_field(grid, rng);
        let tf = engine::dilate(s, &f)?;
        let ratio = mixed_norm(&tf, &spec) / mixed_norm(&f, &spec);
        worst = worst.max((ratio / expected - 1.0).abs());
        if let (Some(w), Some((lo, hi))) = (m, bounds) {
            let wspec = MixedNormSpec::new(p, q, w.clone(), InnerAxis::First)?;
            let wr = mixed_norm(&tf, &wspec) / mixed_norm(&f, &wspec);
            let ok = wr >= expected * lo * (1.0 - tol) && wr <= expected * hi * (1.0 + tol);
            weighted_ok &= ok;
            r.measure("weighted_ratio_last", wr);
        }
    }
    r.measure("expected_ratio", expected).measure("max_rel_deviation", worst).threshold("max_rel_deviation", tol);
    r.flag("grid_compatible", compatible);
    if let Some((lo, hi)) = bounds {
        r.measure("weight_transfer_min", lo).measure("weight_transfer_max", hi).flag("weighted_within_bounds", weighted_ok);
    }
    Ok(r.conclude(worst <= tol && weighted_ok))
}

/// `μ(𝒜⊗ℬ)(f⊗ḡ) = μ(𝒜)f ⊗ conj(μ(ℬ)ḡ)` up to a global phase.
pub fn exp_tensor(pairs: &[(SympMat, SympMat)], f: &Signal, g: &Signal) -> Result<ExperimentResult, HarnessError> {
    let mut worst: f64 = 0.0;
    for (a, b) in pairs {
        let lhs = metaplectic_wigner(&tensor_matrix(a, b)?, f, g)?;
        let rhs = tensor(&engine::apply_metaplectic(a, f)?, &engine::apply_metaplectic(b, &g.conj())?.conj());
        worst = worst.max(phase_aligned_error(&rhs, &lhs));
    }
    let mut r = ExperimentResult::new("tensor", json!({"pairs": pairs.len()}));
    r.measure("max_phase_aligned_error", worst).threshold("max_phase_aligned_error", 1e-6);
    Ok(r.conclude(worst <= 1e-6))
}

/// `‖W_A(f,g)‖₂ = ‖f‖₂‖g‖₂`.
pub fn exp_energy(mats: &[SympMat], f: &Signal, g: &Signal) -> Result<ExperimentResult, HarnessError> {
    let want = f.norm2() * g.norm2();
    let mut worst: f64 = 0.0;
    for a in mats {
        let w = metaplectic_wigner(a, f, g)?;
        worst = worst.max((quad_norm(&w, 2.0) - want).abs());
    }
    let mut r = ExperimentResult::new("energy", json!({"matrices": mats.len()}));
    r.measure("max_abs_deviation", worst).threshold("max_abs_deviation", 1e-8);
    Ok(r.conclude(worst <= 1e-8))
}

/// Direct quadrature against `μ(A)(f⊗ḡ)` for every distribution with a dedicated path.
pub fn exp_dual_paths(f: &Signal, g: &Signal) -> Result<ExperimentResult, HarnessError> {
    let mut r = ExperimentResult::new("dual_paths", json!({}));
    let mut worst: f64 = 0.0;
    let mut record = |r: &mut ExperimentResult, key: &str, direct: &Field2D, via: &Field2D| {
        let e = modulus_sup_error(direct, via);
        worst = worst.max(e);
        r.measure(key, e);
    };
    record(&mut r, "stft", &stft(f, g)?, &metaplectic_wigner(&make_ast(1), f, g)?);
    record(&mut r, "stft_direct", &distributions::stft_direct(f, g)?, &metaplectic_wigner(&make_ast(1), f, g)?);
    for tau in [0.0, 0.25, 0.5, 1.0] {
        record(&mut r, &format!("tau_{tau}"), &tau_wigner(f, g, tau)?, &metaplectic_wigner(&make_atau(tau, 1), f, g)?);
    }
    record(&mut r, "conj_rihacek", &conj_rihacek(f, g)?, &metaplectic_wigner(&make_atau(1.0, 1), f, g)?);
    for (i, spec) in [ChirpAtomSpec::scalar(0.5, 1.0, 0.25), ChirpAtomSpec::scalar(0.2, 0.5, -0.4)].iter().enumerate() {
        record(&mut r, &format!("gen_stft_{i}"), &generalized_stft(f, g, spec)?, &metaplectic_wigner(&gen_stft_matrix(spec, 1)?, f, g)?);
        record(
            &mut r,
            &format!("gen_tau_{i}"),
            &generalized_tau_wigner(f, g, 0.5, spec)?,
            &metaplectic_wigner(&gen_tau_matrix(0.5, spec, 1)?, f, g)?,
        );
    }
    r.measure("max_rel_sup_error", worst).threshold("max_rel_sup_error", 1e-6);
    Ok(r.conclude(worst <= 1e-6))
}

/// Negative control for the energy identity: a dilation pushing `f⊗ḡ` past the grid.
pub fn exp_energy_control(f: &Signal, g: &Signal) -> Result<ExperimentResult, HarnessError> {
    let l = Mat::from_row_slice(2, 2, &[0.125, 0.0, 0.0, 8.0]);
    let mut r = exp_energy(&[crate::symplectic::make_dl(&l)?], f, g)?;
    r.name = "energy_control".into();
    Ok(r)
}

/// Negative control for dual paths: `W_{1/4}` by quadrature against `μ(A_{3/4})`.
pub fn exp_dual_paths_control(f: &Signal, g: &Signal) -> Result<ExperimentResult, HarnessError> {
    let e = modulus_sup_error(&tau_wigner(f, g, 0.25)?, &metaplectic_wigner(&make_atau(0.75, 1), f, g)?);
    let mut r = ExperimentResult::new("dual_paths_control", json!({"direct_tau": 0.25, "matrix_tau": 0.75}));
    r.measure("max_rel_sup_error", e).threshold("max_rel_sup_error", 1e-6);
    Ok(r.conclude(e <= 1e-6))
}

/// Negative control for norm equivalence: `W_A` measured with weight `m_num`, `f` with `m_den`.
#[allow(clippy::too_many_arguments)]
pub fn exp_equivalence_control(
    a: &SympMat,
    p: f64,
    q: f64,
    m_num: &Weight,
    m_den: &Weight,
    family: &[Signal],
    g: &Signal,
    r_bound: f64,
) -> Result<ExperimentResult, HarnessError> {
    let spec = MixedNormSpec::new(p, q, m_num.clone(), InnerAxis::First)?;
    let num = wigner_norms(a, &spec, family, g)?;
    let den = modulation_norms(p, q, m_den, family, g)?;
    let ratios: Vec<f64> = num.iter().zip(&den).map(|(a, b)| a / b).collect();
    let (lo, hi, s) = spread(&ratios);
    let mut r = ExperimentResult::new(
        "equivalence_control",
        json!({"A": mat_json(a.matrix()), "p": exponent_json(p), "q": exponent_json(q), "weight_wigner": m_num, "weight_modulation": m_den}),
    );
    r.measure("ratio_min", lo).measure("ratio_max", hi).measure("ratio_spread", s).threshold("ratio_spread", r_bound);
    Ok(r.conclude(s <= r_bound))
}

/// Negative control for the product formula: `‖f‖_q‖ĝ‖_p` in place of `‖f‖_p‖ĝ‖_q`.
pub fn exp_rihacek_product_control(p: f64, q: f64, family: &[Signal], g: &Signal) -> Result<ExperimentResult, HarnessError> {
    let gh = fourier(g)?;
    let spec = MixedNormSpec::unweighted(p, q);
    let via = wigner_norms(&make_atau(0.0, 1), &spec, family, g)?;
    let worst = family
        .iter()
        .zip(&via)
        .map(|(f, v)| (v / (quad_norm(f, q) * quad_norm(&gh, p)) - 1.0).abs())
        .fold(0.0, f64::max);
    let mut r = ExperimentResult::new("rihacek_product_control", json!({"p": exponent_json(p), "q": exponent_json(q)}));
    r.measure("max_rel_deviation", worst).threshold("max_rel_deviation", 1e-6);
    Ok(r.conclude(worst <= 1e-6))
}

/// Negative control for the tensor identity: factors exchanged on the right-hand side.
pub fn exp_tensor_control(pairs: &[(SympMat, SympMat)], f: &Signal, g: &Signal) -> Result<ExperimentResult, HarnessError> {
    let swapped: Vec<(SympMat, SympMat)> = pairs.iter().map(|(a, b)| (b.clone(), a.clone())).collect();
    let mut worst: f64 = 0.0;
    for ((a, b), (sa, sb)) in pairs.iter().zip(&swapped) {
        let lhs = metaplectic_wigner(&tensor_matrix(a, b)?, f, g)?;
        let rhs = tensor(&engine::apply_metaplectic(sa, f)?, &engine::apply_metaplectic(sb, &g.conj())?.conj());
        worst = worst.max(phase_aligned_error(&rhs, &lhs));
    }
    let mut r = ExperimentResult::new("tensor_control", json!({"pairs": pairs.len()}));
    r.measure("max_phase_aligned_error", worst).threshold("max_phase_aligned_error", 1e-6);
    Ok(r.conclude(worst <= 1e-6))
}

/// Negative control for the amalgam duality: `f̂` measured with `p` and `q` exchanged.
pub fn exp_amalgam_control(p: f64, q: f64, family: &[Signal], g: &Signal) -> Result<ExperimentResult, HarnessError> {
    let gh = fourier(g)?;
    let one = Weight1::one();
    let mut worst: f64 = 0.0;
    for f in family {
        let am = amalgam_norm(f, p, q, &one, &one, g)?;
        worst = worst.max((am / modulation_norm(&fourier(f)?, q, p, &Weight::one(), &gh)? - 1.0).abs());
    }
    let mut r = ExperimentResult::new("amalgam_control", json!({"p": exponent_json(p), "q": exponent_json(q)}));
    r.measure("fundamental_identity_deviation", worst).threshold("fundamental_identity_deviation", 1e-6);
    Ok(r.conclude(worst <= 1e-6))
}

// ---------------------------------------------------------------------------
// default suite

/// Shared context for suite runs.
#[derive(Debug, Clone, Copy)]
pub struct Desk {
    pub grid: Grid1D,
    pub seed: u64,
}

impl Default for Desk {
    fn default() -> Self {
        Self { grid: Grid1D::desk(), seed: 7 }
    }
}

impl Desk {
    pub fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    pub fn window(&self) -> Signal {
        gaussian(self.grid, 1.0)
    }
}

/// The 24-member family used for norm-equivalence measurements.
pub fn equivalence_family() -> FamilyDesc {
    FamilyDesc::Union {
        parts: vec![
            FamilyDesc::Gaussian { widths: vec![0.5, 0.75, 1.0, 1.5, 2.0, 2.5] },
            FamilyDesc::Hermite { orders: vec![0, 1, 2, 3, 5, 8] },
            FamilyDesc::TfShiftedGaussian {
                points: vec![[1.0, 0.0], [-1.0, 0.5], [0.0, -1.5], [2.0, 1.0], [-2.0, -2.0], [0.5, 2.5]],
            },
            FamilyDesc::ChirpedGaussian { rates: vec![-1.0, -0.5, -0.25, 0.25, 0.5, 1.0], width: 1.5 },
        ],
    }
}

/// Flat-top chirps for the Rihaczek sweep, with its window width.
pub fn rihacek_sweep() -> (FamilyDesc, f64) {
    let rates = (0..6).map(|i| 1.1 * i as f64 / 5.0).collect();
    (FamilyDesc::ChirpedPlateau { rates, half_width: 5.0, order: 6 }, 2.0)
}

/// Wide chirped Gaussians for the lower-triangular sweep.
pub fn lower_triangular_sweep() -> FamilyDesc {
    FamilyDesc::ChirpedGaussian { rates: vec![-1.0, -0.8, -0.6, -0.4, -0.2, 0.0], width: 4.0 }
}

/// Edge leakage tolerated in the sweeps (the wide Gaussians reach ~4e-6 at the edge).
pub const SWEEP_EDGE_TOL: f64 = 1e-4;

pub fn covariance_signals(grid: Grid1D) -> Vec<Signal> {
    vec![
        gaussian(grid, 1.0),
        hermite(grid, 1),
        hermite(grid, 2),
        chirped_gaussian(grid, 0.5, 1.5).normalized(),
        gaussian(grid, 0.8).tf_shift(0.5, -0.5),
    ]
}

/// The four matrices of the covariance and equivalence suites.
pub fn named_matrices() -> Result<Vec<(&'static str, SympMat)>, HarnessError> {
    Ok(vec![
        ("ast", make_ast(1)),
        ("atau_quarter", make_atau(0.25, 1)),
        ("gen_tau_half", gen_tau_matrix(0.5, &ChirpAtomSpec::scalar(0.5, 1.0, 0.0), 1)?),
        ("ast_vc", lower_triangular_matrix(1.0)?),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    Pass,
    /// Negative control: must fail.
    Fail,
    Informative,
    /// Preconditions violated: must refuse.
    Rejected,
}

type Runner = Box<dyn Fn(&Desk) -> Result<ExperimentResult, HarnessError> + Send + Sync>;

pub struct SuiteEntry {
    pub name: String,
    pub expect: Expect,
    /// Set when the expectation is known to be out of reach at desk scale; a
    /// miss is still reported but does not fail the suite.
    pub waiver: Option<&'static str>,
    run: Runner,
}

impl SuiteEntry {
    fn new(name: impl Into<String>, expect: Expect, run: impl Fn(&Desk) -> Result<ExperimentResult, HarnessError> + Send + Sync + 'static) -> Self {
        Self { name: name.into(), expect, waiver: None, run: Box::new(run) }
    }

    fn waived(mut self, why: &'static str) -> Self {
        self.waiver = Some(why);
        self
    }

    pub fn run(&self, desk: &Desk) -> SuiteRow {
        let res = (self.run)(desk);
        let (outcome, result, error) = match res {
            Ok(mut r) => {
                r.name = self.name.clone();
                let o = match r.verdict {
                    Verdict::Pass => "pass",
                    Verdict::Fail => "fail",
                    Verdict::Informative => "informative",
                };
                (o.to_string(), Some(r), None)
            }
            Err(e) if e.is_refusal() => ("rejected".to_string(), None, Some(e.to_string())),
            Err(e) => ("error".to_string(), None, Some(e.to_string())),
        };
        let ok = matches!(
            (self.expect, outcome.as_str()),
            (Expect::Pass, "pass") | (Expect::Fail, "fail") | (Expect::Informative, "informative") | (Expect::Rejected, "rejected")
        );
        let waived = !ok && self.waiver.is_some() && outcome != "error";
        SuiteRow {
            schema_version: SCHEMA_VERSION,
            name: self.name.clone(),
            expect: self.expect,
            outcome,
            ok,
            waived,
            waiver: self.waiver.map(str::to_string),
            result,
            error,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteRow {
    pub schema_version: u32,
    pub name: String,
    pub expect: Expect,
    pub outcome: String,
    pub ok: bool,
    pub waived: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub waiver: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<ExperimentResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn family(desk: &Desk) -> Result<Vec<Signal>, HarnessError> {
    Ok(make_family(&equivalence_family(), desk.grid)?)
}

fn pq_name(p: f64) -> String {
    if p.is_infinite() { "inf".into() } else { format!("{p}") }
}

/// Every experiment of the default verification suite, in report order.
pub fn default_suite() -> Vec<SuiteEntry> {
    let mut s = Vec::new();
    for (i, name) in ["ast", "atau_quarter", "gen_tau_half", "ast_vc"].into_iter().enumerate() {
        s.push(SuiteEntry::new(format!("covariance_{name}"), Expect::Pass, move |d| {
            let (_, a) = named_matrices()?.swap_remove(i);
            let (e, _) = ea_fa(&a, 1)?;
            let shifts = lattice_shifts(&e, d.grid, 20, 1.5, &mut d.rng(100 + i as u64))?;
            exp_covariance(&a, &covariance_signals(d.grid), &d.window(), &shifts, None)
        }));
    }
    s.push(SuiteEntry::new("covariance_corrupted_e", Expect::Fail, |d| {
        let a = make_atau(0.25, 1);
        let (e, _) = ea_fa(&a, 1)?;
        let mut bad = e.clone();
        bad[(1, 0)] += 1.0;
        let shifts = lattice_shifts(&e, d.grid, 20, 1.5, &mut d.rng(199))?;
        exp_covariance(&a, &covariance_signals(d.grid), &d.window(), &shifts, Some(&bad))
    }));
    s.push(SuiteEntry::new("energy_random", Expect::Pass, |d| {
        let mut rng = d.rng(200);
        let mats: Vec<SympMat> = (0..10).map(|_| random_tame_word(&mut rng, 2, 2.5).1).collect();
        exp_energy(&mats, &hermite(d.grid, 1), &d.window())
    }));
    s.push(SuiteEntry::new("energy_control", Expect::Fail, |d| exp_energy_control(&hermite(d.grid, 1), &d.window())));
    s.push(SuiteEntry::new("dual_paths_control", Expect::Fail, |d| {
        exp_dual_paths_control(&hermite(d.grid, 1).tf_shift(0.5, -0.75), &gaussian(d.grid, 1.2).tf_shift(-0.25, 0.5))
    }));
    s.push(SuiteEntry::new("dual_paths", Expect::Pass, |d| {
        exp_dual_paths(&hermite(d.grid, 1).tf_shift(0.5, -0.75), &gaussian(d.grid, 1.2).tf_shift(-0.25, 0.5))
    }));
    let pqs = [(1.0, f64::INFINITY), (2.0, 1.0), (2.0, 4.0)];
    let weights = [("m1", Weight::one()), ("v2", Weight::vs(2.0))];
    type Ctor = fn() -> Result<SympMat, HarnessError>;
    let eq_mats: [(&str, Ctor); 4] = [
        ("ast", || Ok(make_ast(1))),
        ("atau_third", || Ok(make_atau(1.0 / 3.0, 1))),
        ("gen_tau_half", || Ok(gen_tau_matrix(0.5, &ChirpAtomSpec::scalar(0.5, 1.0, 0.0), 1)?)),
        ("ast_vct", upper_triangular_matrix),
    ];
    for (mname, mk) in eq_mats {
        for (p, q) in pqs {
            for (wname, w) in weights.clone() {
                s.push(SuiteEntry::new(
                    format!("equivalence_{mname}_{}_{}_{wname}", pq_name(p), pq_name(q)),
                    Expect::Pass,
                    move |d| exp_equivalence(&mk()?, p, q, &w, &family(d)?, &d.window(), 50.0),
                ));
            }
        }
    }
    s.push(SuiteEntry::new("equivalence_control_weight_mismatch", Expect::Fail, |d| {
        exp_equivalence_control(&make_atau(1.0 / 3.0, 1), 2.0, 1.0, &Weight::vs(10.0), &Weight::one(), &family(d)?, &d.window(), 50.0)
    }));
    s.push(SuiteEntry::new("equivalence_rihacek_refused", Expect::Rejected, |d| {
        exp_equivalence(&make_atau(0.0, 1), 2.0, 1.0, &Weight::one(), &family(d)?, &d.window(), 50.0)
    }));
    s.push(SuiteEntry::new("rihacek_product_formula_1_2", Expect::Pass, |d| {
        exp_rihacek_product_formula(1.0, 2.0, &family(d)?, &d.window())
    }));
    s.push(SuiteEntry::new("rihacek_product_control", Expect::Fail, |d| {
        exp_rihacek_product_control(1.0, 2.0, &family(d)?, &d.window())
    }));
    let rihacek = |p: f64, q: f64| {
        move |d: &Desk| {
            let (desc, w) = rihacek_sweep();
            let sweep = make_family_with_tol(&desc, d.grid, SWEEP_EDGE_TOL)?;
            exp_rihacek_failure(p, q, &sweep, &gaussian(d.grid, w))
        }
    };
    const RIHACEK_WAIVER: &str = "10x drift needs chirps that alias at n=256, dx=1/16";
    s.push(SuiteEntry::new("rihacek_failure_1_inf", Expect::Pass, rihacek(1.0, f64::INFINITY)).waived(RIHACEK_WAIVER));
    s.push(SuiteEntry::new("rihacek_failure_2_inf", Expect::Pass, rihacek(2.0, f64::INFINITY)).waived(RIHACEK_WAIVER));
    s.push(SuiteEntry::new("rihacek_control_2_2", Expect::Informative, rihacek(2.0, 2.0)));
    let lower = |c: f64, p: f64, q: f64| {
        move |d: &Desk| {
            let sweep = make_family_with_tol(&lower_triangular_sweep(), d.grid, SWEEP_EDGE_TOL)?;
            exp_lower_triangular_failure(c, p, q, &sweep, &d.window())
        }
    };
    s.push(SuiteEntry::new("lower_triangular_failure_inf_1", Expect::Pass, lower(1.0, f64::INFINITY, 1.0)));
    s.push(SuiteEntry::new("lower_triangular_control_2_2", Expect::Informative, lower(1.0, 2.0, 2.0)));
    s.push(SuiteEntry::new("lower_triangular_c0_refused", Expect::Rejected, lower(0.0, f64::INFINITY, 1.0)));
    s.push(SuiteEntry::new("diagonal_ast_vc_1", Expect::Pass, |d| {
        exp_diagonal_case(&lower_triangular_matrix(1.0)?, 1.0, &Weight::one(), &family(d)?, &d.window(), 50.0)
    }));
    s.push(SuiteEntry::new("diagonal_ast_2", Expect::Pass, |d| {
        exp_diagonal_case(&make_ast(1), 2.0, &Weight::one(), &family(d)?, &d.window(), 50.0)
    }));
    s.push(SuiteEntry::new("diagonal_rihacek_refused", Expect::Rejected, |d| {
        exp_diagonal_case(&make_atau(0.0, 1), 2.0, &Weight::one(), &family(d)?, &d.window(), 50.0)
    }));
    let one = Weight1::one();
    s.push(SuiteEntry::new("amalgam_ast_vc_1_2", Expect::Pass, {
        let one = one.clone();
        move |d| exp_amalgam(&lower_triangular_matrix(1.0)?, 1.0, 2.0, &one, &one, &family(d)?, &d.window(), 50.0)
    }));
    s.push(SuiteEntry::new("amalgam_ast_vc_2_2", Expect::Pass, {
        let one = one.clone();
        move |d| exp_amalgam(&lower_triangular_matrix(1.0)?, 2.0, 2.0, &one, &one, &family(d)?, &d.window(), 50.0)
    }));
    s.push(SuiteEntry::new("amalgam_control_swapped", Expect::Fail, |d| exp_amalgam_control(1.0, 2.0, &family(d)?, &d.window())));
    s.push(SuiteEntry::new("amalgam_upper_only_refused", Expect::Rejected, move |d| {
        exp_amalgam(&upper_triangular_matrix()?, 1.0, 2.0, &one, &one, &family(d)?, &d.window(), 50.0)
    }));
    s.push(SuiteEntry::new("inversion_ast", Expect::Pass, |d| {
        exp_inversion(&hermite(d.grid, 1).tf_shift(0.25, 0.5), &d.window(), &gaussian(d.grid, 1.5), &make_ast(1))
    }));
    s.push(SuiteEntry::new("inversion_atau_half", Expect::Pass, |d| {
        exp_inversion(&hermite(d.grid, 1).tf_shift(0.25, 0.5), &d.window(), &gaussian(d.grid, 1.5), &make_atau(0.5, 1))
    }));
    s.push(SuiteEntry::new("inversion_control_mismatched_inverse", Expect::Fail, |d| {
        exp_inversion_control(
            &hermite(d.grid, 1).tf_shift(0.25, 0.5),
            &d.window(),
            &gaussian(d.grid, 1.5),
            &make_ast(1),
            &make_atau(0.5, 1),
        )
    }));
    s.push(SuiteEntry::new("inversion_degenerate_refused", Expect::Rejected, |d| {
        exp_inversion(&gaussian(d.grid, 1.0), &hermite(d.grid, 0), &hermite(d.grid, 1), &make_ast(1))
    }));
    let diag = |a: f64, b: f64| Mat::from_row_slice(2, 2, &[a, 0.0, 0.0, b]);
    let apps: Vec<(&str, Mat, f64, f64, Option<Weight>)> = vec![
        ("dilation_2i_1_1", diag(2.0, 2.0), 1.0, 1.0, None),
        ("dilation_diag23_1_inf", diag(2.0, 3.0), 1.0, f64::INFINITY, None),
        ("dilation_upper_2_1", Mat::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]), 2.0, 1.0, None),
        ("dilation_identity_3_1p5", diag(1.0, 1.0), 3.0, 1.5, None),
        ("dilation_resampled_1p5", Mat::from_row_slice(2, 2, &[1.25, 0.5, -0.25, 0.9]), 1.5, 1.5, None),
        ("dilation_weighted_v1", diag(2.0, 3.0), 1.0, 2.0, Some(Weight::vs(1.0))),
    ];
    for (k, (name, m, p, q, w)) in apps.into_iter().enumerate() {
        s.push(SuiteEntry::new(name, Expect::Pass, move |d| {
            exp_dilation_norms(&m, p, q, w.as_ref(), 5, &mut d.rng(300 + k as u64), d.grid)
        }));
    }
    s.push(SuiteEntry::new("dilation_control_swapped", Expect::Fail, move |d| {
        exp_dilation_norms_control(&diag(2.0, 3.0), 1.0, f64::INFINITY, 5, &mut d.rng(399), d.grid)
    }));
    let pairs = |d: &Desk| -> Vec<(SympMat, SympMat)> {
        let mut rng = d.rng(400);
        (0..20).map(|_| (random_tame_word(&mut rng, 1, 2.5).1, random_tame_word(&mut rng, 1, 2.5).1)).collect()
    };
    s.push(SuiteEntry::new("tensor_random_pairs", Expect::Pass, move |d| {
        exp_tensor(&pairs(d), &hermite(d.grid, 1).tf_shift(0.5, 0.0), &gaussian(d.grid, 1.2))
    }));
    s.push(SuiteEntry::new("tensor_control_swapped", Expect::Fail, move |d| {
        exp_tensor_control(&pairs(d), &hermite(d.grid, 1).tf_shift(0.5, 0.0), &gaussian(d.grid, 1.2))
    }));
    s
}

/// Names of the default suite, in order.
pub fn suite_names() -> Vec<String> {
    default_suite().into_iter().map(|e| e.name).collect()
}

/// Runs the selected entries (all if `only` is empty) sequentially.
pub fn run_suite(desk: &Desk, only: &[String]) -> Result<Vec<SuiteRow>, String> {
    let suite = default_suite();
    for n in only {
        if !suite.iter().any(|e| &e.name == n) {
            return Err(format!("unknown experiment '{n}'"));
        }
    }
    Ok(suite
        .iter()
        .filter(|e| only.is_empty() || only.contains(&e.name))
        .map(|e| e.run(desk))
        .collect())
}

/// One row per experiment: name, expectation, outcome, and the measured values as JSON.
pub fn write_aggregate_csv(rows: &[SuiteRow], w: impl Write) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["schema_version", "name", "expect", "outcome", "ok", "waived", "measured", "error"])?;
    for r in rows {
        let measured = r.result.as_ref().map(|x| serde_json::to_string(&x.measured).expect("map serializes")).unwrap_or_default();
        wr.write_record([
            SCHEMA_VERSION.to_string(),
            r.name.clone(),
            serde_json::to_value(r.expect).expect("enum").as_str().unwrap_or("").to_string(),
            r.outcome.clone(),
            r.ok.to_string(),
            r.waived.to_string(),
            measured,
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn weight_at(w: &Weight, x: f64, y: f64) -> f64 {
    weight_eval(w, [x, y])
}

