//! Acceptance criteria at desk scale (n = 256, Δ = 1/16, d = 1).
//!
//! One line per criterion. Criteria listed in `KNOWN_UNATTAINABLE` are
//! measured and printed but do not fail the run.

use std::time::Instant;

use metawig::distributions::{ChirpAtomSpec, gen_stft_matrix, gen_tau_matrix, modified_signal_matrix, modified_window_matrix};
use metawig::engine::diag;
use metawig::grid::{Grid1D, gaussian, hermite, make_family, make_family_with_tol};
use metawig::harness::*;
use metawig::norms::{Weight, Weight1};
use metawig::symplectic::*;

const KNOWN_UNATTAINABLE: &[usize] = &[7];

struct Line {
    id: usize,
    ok: bool,
    text: String,
}

fn max_abs(a: &Mat, b: &Mat) -> f64 {
    (a - b).amax()
}

fn c1() -> Line {
    let one = Mat::from_element(1, 1, 1.0);
    let spec = ChirpAtomSpec::scalar(0.5, 1.0, 0.25);
    let ap = SympMat::from_rows(&[vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let mats: Vec<(&str, SympMat)> = vec![
        ("J", make_j(2)),
        ("D_L", make_dl(&Mat::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 0.5])).unwrap()),
        ("V_C", make_vc(&Mat::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -2.0])).unwrap()),
        ("Pi_1", make_interchange(&[1], 2).unwrap()),
        ("Pi_2", make_interchange(&[2], 2).unwrap()),
        ("A_ST", make_ast(1)),
        ("A_1/3", make_atau(1.0 / 3.0, 1)),
        ("A_FT2", make_aft2(1)),
        ("tensor", tensor_matrix(&make_vc(&one).unwrap(), &make_j(1)).unwrap()),
        ("V~_C", lift_left(&make_vc(&one).unwrap())),
        ("gen_stft", gen_stft_matrix(&spec, 1).unwrap()),
        ("gen_tau", gen_tau_matrix(0.5, &spec, 1).unwrap()),
        ("U_g", modified_window_matrix(&ap)),
        ("U~_g", modified_signal_matrix(&ap)),
        ("A_ST V~_C", lower_triangular_matrix(1.0).unwrap()),
    ];
    let res = mats.iter().map(|(_, m)| symplectic_residual(m.matrix())).fold(0.0, f64::max);
    let det = mats.iter().map(|(_, m)| (m.det() - 1.0).abs()).fold(0.0, f64::max);
    Line {
        id: 1,
        ok: res <= 1e-12 && det <= 1e-10,
        text: format!("structural exactness over {} constructors: residual {res:.1e} (≤1e-12), |det−1| {det:.1e} (≤1e-10)", mats.len()),
    }
}

fn c2() -> Line {
    let e = |a: &SympMat| ea_fa(a, 1).unwrap().0;
    let c = 0.75;
    let ap_rows = [vec![2.0, 1.0], vec![1.0, 1.0]];
    let ap = SympMat::from_rows(&ap_rows).unwrap();
    let tau = 0.3;
    let checks = [
        max_abs(&e(&make_ast(1)), &Mat::identity(2, 2)),
        max_abs(&e(&make_atau(tau, 1)), &diag(&[1.0 - tau, tau])),
        e(&make_atau(0.0, 1)).determinant().abs(),
        e(&make_atau(1.0, 1)).determinant().abs(),
        max_abs(&e(&lower_triangular_matrix(c).unwrap()), &Mat::from_row_slice(2, 2, &[1.0, 0.0, c, 1.0])),
        max_abs(&e(&modified_signal_matrix(&ap)), ap.matrix()),
    ];
    let worst = checks.iter().copied().fold(0.0, f64::max);
    Line { id: 2, ok: worst == 0.0, text: format!("E_A golden values exact: max deviation {worst:.1e} (= 0)") }
}

fn verdict_line(id: usize, r: &ExperimentResult, key: &str, what: &str) -> Line {
    let tol = r.thresholds[key];
    Line { id, ok: r.verdict == Verdict::Pass, text: format!("{what}: {key} {:.2e} (≤{tol:.0e})", r.get(key)) }
}

fn c3(grid: Grid1D) -> Line {
    let r = exp_dual_paths(&hermite(grid, 1).tf_shift(0.5, -0.75), &gaussian(grid, 1.2).tf_shift(-0.25, 0.5)).unwrap();
    verdict_line(3, &r, "max_rel_sup_error", "dual-path agreement (stft, τ ∈ {0,¼,½,1}, generalized)")
}

fn c4(desk: &Desk) -> Line {
    let g = desk.window();
    let sig = covariance_signals(desk.grid);
    let mut worst: f64 = 0.0;
    for (i, (_, a)) in named_matrices().unwrap().into_iter().enumerate() {
        let (e, _) = ea_fa(&a, 1).unwrap();
        let shifts = lattice_shifts(&e, desk.grid, 20, 1.5, &mut desk.rng(100 + i as u64)).unwrap();
        worst = worst.max(exp_covariance(&a, &sig, &g, &shifts, None).unwrap().get("max_deviation"));
    }
    let a = make_atau(0.25, 1);
    let (e, _) = ea_fa(&a, 1).unwrap();
    let mut bad = e.clone();
    bad[(1, 0)] += 1.0;
    let shifts = lattice_shifts(&e, desk.grid, 20, 1.5, &mut desk.rng(199)).unwrap();
    let control = exp_covariance(&a, &sig, &g, &shifts, Some(&bad)).unwrap().get("max_deviation");
    Line {
        id: 4,
        ok: worst <= 1e-6 && control >= 1e-2,
        text: format!("covariance 20 shifts × 4 matrices × 5 signals: {worst:.2e} (≤1e-6); corrupted E: {control:.2e} (≥1e-2)"),
    }
}

fn c5(desk: &Desk) -> Line {
    let mut rng = desk.rng(200);
    let mats: Vec<SympMat> = (0..10).map(|_| random_tame_word(&mut rng, 2, 2.5).1).collect();
    let r = exp_energy(&mats, &hermite(desk.grid, 1), &desk.window()).unwrap();
    verdict_line(5, &r, "max_abs_deviation", "energy identity, 10 random symplectic A")
}

fn c6(desk: &Desk) -> Line {
    let family = make_family(&equivalence_family(), desk.grid).unwrap();
    let g = desk.window();
    let mats = [
        make_ast(1),
        make_atau(1.0 / 3.0, 1),
        gen_tau_matrix(0.5, &ChirpAtomSpec::scalar(0.5, 1.0, 0.0), 1).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    let mut all = true;
    for a in &mats {
        for (p, q) in [(1.0, f64::INFINITY), (2.0, 1.0), (2.0, 4.0)] {
            for m in [Weight::one(), Weight::vs(2.0)] {
                let r = exp_equivalence(a, p, q, &m, &family, &g, 50.0).unwrap();
                all &= r.verdict == Verdict::Pass;
                worst = worst.max(r.get("ratio_spread"));
            }
        }
    }
    Line { id: 6, ok: all, text: format!("norm equivalence, 3 matrices × 3 (p,q) × 2 weights, 24 signals: worst spread {worst:.2} (≤50)") }
}

fn c7(desk: &Desk) -> Line {
    let g = desk.window();
    let family = make_family(&equivalence_family(), desk.grid).unwrap();
    let formula = exp_rihacek_product_formula(1.0, 2.0, &family, &g).unwrap().get("max_rel_deviation");
    let (desc, w) = rihacek_sweep();
    let sweep = make_family_with_tol(&desc, desk.grid, SWEEP_EDGE_TOL).unwrap();
    let gw = gaussian(desk.grid, w);
    let riha = exp_rihacek_failure(1.0, f64::INFINITY, &sweep, &gw).unwrap();
    let riha_ctl = exp_rihacek_failure(2.0, 2.0, &sweep, &gw).unwrap();
    let low_sweep = make_family_with_tol(&lower_triangular_sweep(), desk.grid, SWEEP_EDGE_TOL).unwrap();
    let low = exp_lower_triangular_failure(1.0, f64::INFINITY, 1.0, &low_sweep, &g).unwrap();
    let low_ctl = exp_lower_triangular_failure(1.0, 2.0, 2.0, &low_sweep, &g).unwrap();
    let drift = |r: &ExperimentResult| (r.get("ratio_drift"), r.get("monotone") == 1.0);
    let (rd, rm) = drift(&riha);
    let (ld, lm) = drift(&low);
    let ok = formula <= 1e-6 && rm && rd >= 10.0 && lm && ld >= 10.0 && riha_ctl.get("ratio_drift") <= 2.0 && low_ctl.get("ratio_drift") <= 2.0;
    Line {
        id: 7,
        ok,
        text: format!(
            "counterexamples: product formula {formula:.1e} (≤1e-6); drift Rihaczek(1,∞) {rd:.2}× monotone={rm}, A_ST·Ṽ_C(∞,1) {ld:.2}× monotone={lm} (≥10×); p=q controls {:.3}×, {:.3}× (≤2×)",
            riha_ctl.get("ratio_drift"),
            low_ctl.get("ratio_drift")
        ),
    }
}

fn c8(desk: &Desk) -> Line {
    let cases = [
        (diag(&[2.0, 2.0]), 1.0, 1.0),
        (diag(&[2.0, 3.0]), 1.0, f64::INFINITY),
        (Mat::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]), 2.0, 1.0),
        (Mat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]), 1.0, 3.0),
    ];
    let mut worst: f64 = 0.0;
    let mut first = f64::NAN;
    for (k, (s, p, q)) in cases.iter().enumerate() {
        let r = exp_dilation_norms(s, *p, *q, None, 5, &mut desk.rng(300 + k as u64), desk.grid).unwrap();
        if k == 0 {
            first = r.get("expected_ratio");
        }
        worst = worst.max(r.get("max_rel_deviation"));
    }
    Line {
        id: 8,
        ok: worst <= 1e-6 && (first - 0.5).abs() < 1e-15,
        text: format!("dilation norm ratios, integer S: max rel deviation {worst:.1e} (≤1e-6); S=2I, p=1 → {first:.6}"),
    }
}

fn c9(desk: &Desk) -> Line {
    let mut rng = desk.rng(400);
    let pairs: Vec<(SympMat, SympMat)> =
        (0..20).map(|_| (random_tame_word(&mut rng, 1, 2.5).1, random_tame_word(&mut rng, 1, 2.5).1)).collect();
    let r = exp_tensor(&pairs, &hermite(desk.grid, 1).tf_shift(0.5, 0.0), &gaussian(desk.grid, 1.2)).unwrap();
    let jj = tensor_matrix(&make_j(1), &make_j(1)).unwrap();
    let exact = jj.matrix() == make_j(2).matrix();
    Line {
        id: 9,
        ok: r.verdict == Verdict::Pass && exact,
        text: format!("tensor operators, 20 pairs: {:.2e} (≤1e-6); tensor_matrix(J,J) = J₂ exactly: {exact}", r.get("max_phase_aligned_error")),
    }
}

fn c10(desk: &Desk) -> Line {
    let f = hermite(desk.grid, 1).tf_shift(0.25, 0.5);
    let (g1, g2) = (desk.window(), gaussian(desk.grid, 1.5));
    let a = exp_inversion(&f, &g1, &g2, &make_ast(1)).unwrap();
    let b = exp_inversion(&f, &g1, &g2, &make_atau(0.5, 1)).unwrap();
    let worst = ["inversion_rel_l2", "representation_rel_l2"]
        .iter()
        .map(|k| a.get(k).max(b.get(k)))
        .fold(0.0, f64::max);
    Line {
        id: 10,
        ok: a.verdict == Verdict::Pass && b.verdict == Verdict::Pass,
        text: format!("inversion and lattice representation under A_ST, A_½: rel L² {worst:.2e} (≤1e-4)"),
    }
}

fn c11(desk: &Desk) -> Line {
    let family = make_family(&equivalence_family(), desk.grid).unwrap();
    let one = Weight1::one();
    let a = lower_triangular_matrix(1.0).unwrap();
    let r12 = exp_amalgam(&a, 1.0, 2.0, &one, &one, &family, &desk.window(), 50.0).unwrap();
    let v = Weight1::Polynomial { s: 2.0 };
    let r22 = exp_amalgam(&a, 2.0, 2.0, &v, &one, &family, &desk.window(), 50.0).unwrap();
    let fund = r12.get("fundamental_identity_deviation").max(r22.get("fundamental_identity_deviation"));
    let collapse = r22.get("amalgam_vs_modulation");
    Line {
        id: 11,
        ok: fund <= 1e-6 && collapse <= 1e-10,
        text: format!("amalgam duality: ‖f‖_W vs ‖f̂‖_M {fund:.1e} (≤1e-6); p=q collapse {collapse:.1e} (≤1e-10)"),
    }
}

fn main() {
    let desk = Desk::default();
    let grid = desk.grid;
    let criteria: Vec<Box<dyn Fn() -> Line>> = vec![
        Box::new(c1),
        Box::new(c2),
        Box::new(move || c3(grid)),
        Box::new(move || c4(&desk)),
        Box::new(move || c5(&desk)),
        Box::new(move || c6(&desk)),
        Box::new(move || c7(&desk)),
        Box::new(move || c8(&desk)),
        Box::new(move || c9(&desk)),
        Box::new(move || c10(&desk)),
        Box::new(move || c11(&desk)),
    ];
    let mut hard_fail = Vec::new();
    for c in criteria {
        let t = Instant::now();
        let line = c();
        let known = KNOWN_UNATTAINABLE.contains(&line.id);
        let tag = match (line.ok, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known unattainable)",
            (false, false) => "FAIL",
        };
        println!("[{:>2}] {tag}: {} [{:.1}s]", line.id, line.text, t.elapsed().as_secs_f64());
        if !line.ok && !known {
            hard_fail.push(line.id);
        }
    }
    if !hard_fail.is_empty() {
        eprintln!("acceptance failed: criteria {hard_fail:?}");
        std::process::exit(1);
    }
}
