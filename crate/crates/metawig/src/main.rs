use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::json;

use metawig::distributions::{self, ChirpAtomSpec};
use metawig::engine::MetaplecticPlan;
use metawig::grid::{self, FamilyDesc, Field2D, Grid1D, Signal};
use metawig::harness::{self, Desk, SCHEMA_VERSION, exponent_json};
use metawig::norms::{self, InnerAxis, MixedNormSpec, Weight, Weight1};
use metawig::symplectic::{self, GeneratorWord, Mat, SympError, SympMat, mat_to_rows};

#[derive(Parser, Debug)]
#[command(name = "metawig", version, about = "Metaplectic time-frequency distributions on sampled grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long = "grid-n", global = true)]
    grid_n: Option<usize>,
    #[arg(long = "grid-dx", global = true)]
    grid_dx: Option<f64>,
    /// Comma-separated experiment names (verify)
    #[arg(long, global = true, value_delimiter = ',')]
    experiments: Option<Vec<String>>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Compute a distribution and write CSV, PGM and metadata
    Analyze,
    /// Classify a symplectic matrix
    Classify,
    /// Compute a modulation, amalgam or mixed norm
    Norm,
    /// Run verification experiments
    Verify,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum CommandName {
    Analyze,
    Classify,
    Norm,
    Verify,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    n: usize,
    dx: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum MatrixSpec {
    Rows { rows: Vec<Vec<f64>> },
    Word { atoms: Vec<symplectic::GeneratorAtom>, n: usize },
    Named { name: String, #[serde(default)] tau: Option<f64>, #[serde(default)] c: Option<f64>, #[serde(default)] d: Option<usize> },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
enum SignalSpec {
    Csv { csv: PathBuf },
    Family(FamilyDesc),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct DistSpec {
    name: String,
    #[serde(default)]
    tau: Option<f64>,
    #[serde(default)]
    c11: Option<f64>,
    #[serde(default)]
    c12: Option<f64>,
    #[serde(default)]
    c22: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
struct Exponent(#[serde(serialize_with = "ser_exp")] f64);

fn ser_exp<S: serde::Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
    exponent_json(*p).serialize(s)
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Exponent(v)),
            Raw::Str(s) if matches!(s.as_str(), "inf" | "infinity" | "∞") => Ok(Exponent(f64::INFINITY)),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad exponent '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum NormKind {
    Modulation,
    Amalgam,
    Mixed,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct NormSpec {
    kind: NormKind,
    p: Exponent,
    q: Exponent,
    #[serde(default)]
    weight: Option<Weight>,
    #[serde(default)]
    m1: Option<Weight1>,
    #[serde(default)]
    m2: Option<Weight1>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    #[serde(default)]
    command: Option<CommandName>,
    #[serde(default)]
    grid: Option<GridSpec>,
    #[serde(default)]
    matrix: Option<MatrixSpec>,
    #[serde(default)]
    distribution: Option<DistSpec>,
    #[serde(default)]
    signal: Option<SignalSpec>,
    #[serde(default)]
    window: Option<SignalSpec>,
    #[serde(default)]
    norm: Option<NormSpec>,
    #[serde(default)]
    experiments: Option<Vec<String>>,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default)]
    seed: Option<u64>,
}

enum Failure {
    Verification(String),
    Usage(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn numerical(e: impl std::fmt::Display) -> Failure {
    Failure::Numerical(e.to_string())
}

/// Validated settings after merging the config file and flags.
struct Run {
    cfg: RunConfig,
    grid: Grid1D,
    seed: u64,
    out: Option<PathBuf>,
    experiments: Vec<String>,
}

fn load(cli: &Cli) -> Result<Run, Failure> {
    let cfg: RunConfig = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("config: {e}")))?
        }
        None => RunConfig::default(),
    };
    if let Some(c) = cfg.command {
        let want = match cli.command {
            Command::Analyze => CommandName::Analyze,
            Command::Classify => CommandName::Classify,
            Command::Norm => CommandName::Norm,
            Command::Verify => CommandName::Verify,
        };
        if c != want {
            return Err(usage(format!("config is for '{c:?}', invoked '{want:?}'").to_lowercase()));
        }
    }
    let base = cfg.grid.map(|g| (g.n, g.dx)).unwrap_or((256, 1.0 / 16.0));
    let n = cli.grid_n.unwrap_or(base.0);
    let dx = cli.grid_dx.unwrap_or(match (cli.grid_n, cfg.grid) {
        // a new n alone keeps the grid self-dual
        (Some(n), None) => 1.0 / (n as f64).sqrt(),
        _ => base.1,
    });
    let grid = Grid1D::new(n, dx).map_err(usage)?;
    Ok(Run {
        seed: cli.seed.or(cfg.seed).unwrap_or(7),
        out: cli.out.clone().or(cfg.out.clone()),
        experiments: cli.experiments.clone().or(cfg.experiments.clone()).unwrap_or_default(),
        grid,
        cfg,
    })
}

fn matrix(spec: &MatrixSpec) -> Result<SympMat, Failure> {
    let sym = |r: Result<SympMat, SympError>| r.map_err(usage);
    match spec {
        MatrixSpec::Rows { rows } => sym(SympMat::from_rows(rows)),
        MatrixSpec::Word { atoms, n } => sym(GeneratorWord { atoms: atoms.clone() }.product(*n)),
        MatrixSpec::Named { name, tau, c, d } => {
            let d = d.unwrap_or(1);
            let c = c.unwrap_or(1.0);
            Ok(match name.as_str() {
                "j" => symplectic::make_j(2 * d),
                "ast" => symplectic::make_ast(d),
                "atau" => symplectic::make_atau(tau.ok_or_else(|| usage("atau needs tau"))?, d),
                "rihacek" => symplectic::make_atau(0.0, d),
                "conj_rihacek" => symplectic::make_atau(1.0, d),
                "aft2" => symplectic::make_aft2(d),
                "ast_vc" => harness::lower_triangular_matrix(c).map_err(usage)?,
                "ast_vct" => harness::upper_triangular_matrix().map_err(usage)?,
                other => return Err(usage(format!("unknown named matrix '{other}'"))),
            })
        }
    }
}

fn signal(spec: &SignalSpec, grid: Grid1D) -> Result<Signal, Failure> {
    match spec {
        SignalSpec::Csv { csv } => {
            let f = File::open(csv).map_err(|e| usage(format!("{}: {e}", csv.display())))?;
            grid::read_signal_csv(grid, f).map_err(usage)
        }
        SignalSpec::Family(desc) => {
            let fam = grid::make_family(desc, grid).map_err(usage)?;
            match fam.len() {
                1 => Ok(fam.into_iter().next().expect("one member")),
                k => Err(usage(format!("signal descriptor must give one signal, gave {k}"))),
            }
        }
    }
}

fn signal_or_default(spec: Option<&SignalSpec>, grid: Grid1D) -> Result<Signal, Failure> {
    match spec {
        Some(s) => signal(s, grid),
        None => Ok(grid::gaussian(grid, 1.0)),
    }
}

fn atom_spec(d: &DistSpec) -> Result<ChirpAtomSpec, Failure> {
    let get = |v: Option<f64>, k: &str| v.ok_or_else(|| usage(format!("{} needs {k}", d.name)));
    Ok(ChirpAtomSpec::scalar(get(d.c11, "c11")?, get(d.c12, "c12")?, get(d.c22, "c22")?))
}

/// The field and the matrix it is `μ(A)(f⊗ḡ)` for.
fn distribution(d: &DistSpec, m: Option<&MatrixSpec>, f: &Signal, g: &Signal) -> Result<(Field2D, SympMat), Failure> {
    use distributions as ds;
    let tau = || d.tau.ok_or_else(|| usage(format!("{} needs tau", d.name)));
    let num = |r: Result<Field2D, ds::DistError>| {
        r.map_err(|e| match e {
            ds::DistError::SingularC12(_) | ds::DistError::GridMismatch(_) => usage(e),
            e => numerical(e),
        })
    };
    Ok(match d.name.as_str() {
        "stft" => (num(ds::stft(f, g))?, symplectic::make_ast(1)),
        "tau_wigner" => {
            let t = tau()?;
            (num(ds::tau_wigner(f, g, t))?, symplectic::make_atau(t, 1))
        }
        "wigner" => (num(ds::tau_wigner(f, g, 0.5))?, symplectic::make_atau(0.5, 1)),
        "rihacek" => (num(ds::rihacek(f, g))?, symplectic::make_atau(0.0, 1)),
        "conj_rihacek" => (num(ds::conj_rihacek(f, g))?, symplectic::make_atau(1.0, 1)),
        "generalized_stft" => {
            let s = atom_spec(d)?;
            let a = ds::gen_stft_matrix(&s, 1).map_err(usage)?;
            (num(ds::generalized_stft(f, g, &s))?, a)
        }
        "generalized_tau_wigner" => {
            let (s, t) = (atom_spec(d)?, tau()?);
            let a = ds::gen_tau_matrix(t, &s, 1).map_err(usage)?;
            (num(ds::generalized_tau_wigner(f, g, t, &s))?, a)
        }
        "metaplectic" => {
            let a = matrix(m.ok_or_else(|| usage("metaplectic needs a matrix"))?)?;
            if a.half_dim() != 2 {
                return Err(usage("metaplectic distribution needs a 4×4 matrix"));
            }
            (num(ds::metaplectic_wigner(&a, f, g))?, a)
        }
        other => return Err(usage(format!("unknown distribution '{other}'"))),
    })
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(v).expect("json");
    text.push('\n');
    fs::write(path, text).map_err(numerical)
}

fn out_dir(run: &Run) -> Result<PathBuf, Failure> {
    let dir = run.out.clone().ok_or_else(|| usage("--out is required"))?;
    fs::create_dir_all(&dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn mat_json(m: &Mat) -> serde_json::Value {
    json!(mat_to_rows(m))
}

fn cmd_analyze(run: &Run) -> Result<(), Failure> {
    let d = run.cfg.distribution.as_ref().ok_or_else(|| usage("analyze needs a distribution"))?;
    let f = signal_or_default(run.cfg.signal.as_ref(), run.grid)?;
    let g = signal_or_default(run.cfg.window.as_ref(), run.grid)?;
    let dir = out_dir(run)?;
    let (field, a) = distribution(d, run.cfg.matrix.as_ref(), &f, &g)?;
    if field.values.iter().any(|v| !v.is_finite()) {
        return Err(numerical("non-finite values in the distribution"));
    }
    let (e, fm) = symplectic::ea_fa(&a, 1).map_err(numerical)?;
    let class = symplectic::classify(&a, 1).map_err(numerical)?;
    let strategy = MetaplecticPlan::new(&a).ok().map(|p| json!({"kind": p.kind, "set": p.set, "score": p.score}));
    let csv = dir.join("field.csv");
    grid::write_field_csv(&field, BufWriter::new(File::create(&csv).map_err(numerical)?)).map_err(numerical)?;
    grid::save_pgm(&field, &dir.join("heatmap.pgm")).map_err(numerical)?;
    let mx = field.max_modulus();
    let peak = field.values.iter().map(|v| v.norm()).enumerate().fold((0, 0.0), |b, (i, v)| if v > b.1 { (i, v) } else { b }).0;
    let (jx, ky) = (peak / field.ny(), peak % field.ny());
    write_json(
        &dir.join("metadata.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "analyze",
            "distribution": d,
            "grid": {"n": run.grid.n(), "dx": run.grid.dx()},
            "matrix": mat_json(a.matrix()),
            "E_A": mat_json(&e),
            "F_A": mat_json(&fm),
            "class": class,
            "strategy": strategy,
            "max_modulus": mx,
            "peak": [field.grid_x.t(jx), field.grid_y.t(ky)],
            "files": ["field.csv", "heatmap.pgm"],
        }),
    )?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn cmd_classify(run: &Run) -> Result<(), Failure> {
    let spec = run.cfg.matrix.as_ref().ok_or_else(|| usage("classify needs a matrix"))?;
    let a = match spec {
        MatrixSpec::Rows { rows } => {
            let m = symplectic::mat_from_rows(rows).map_err(usage)?;
            if m.nrows() != m.ncols() || m.nrows() % 4 != 0 {
                return Err(usage(format!("need a 4d×4d matrix, got {}×{}", m.nrows(), m.ncols())));
            }
            let res = symplectic::symplectic_residual(&m);
            SympMat::new(m).map_err(|e| usage(format!("{e}: ‖AᵀJA−J‖∞ = {res:e}")))?
        }
        other => matrix(other)?,
    };
    if a.half_dim() % 2 != 0 {
        return Err(usage("classification needs a 4d×4d matrix"));
    }
    let d = a.half_dim() / 2;
    let class = symplectic::classify(&a, d).map_err(usage)?;
    let (e, fm) = symplectic::ea_fa(&a, d).map_err(usage)?;
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "classify",
        "residual": a.residual(),
        "class": class,
        "E_A": mat_json(&e),
        "F_A": mat_json(&fm),
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("json"));
    if let Some(dir) = &run.out {
        fs::create_dir_all(dir).map_err(usage)?;
        write_json(&dir.join("classify.json"), &report)?;
    }
    Ok(())
}

fn cmd_norm(run: &Run) -> Result<(), Failure> {
    let spec = run.cfg.norm.as_ref().ok_or_else(|| usage("norm needs a norm spec"))?;
    let f = signal_or_default(run.cfg.signal.as_ref(), run.grid)?;
    let g = signal_or_default(run.cfg.window.as_ref(), run.grid)?;
    let (p, q) = (spec.p.0, spec.q.0);
    let value = match spec.kind {
        NormKind::Modulation => {
            norms::modulation_norm(&f, p, q, spec.weight.as_ref().unwrap_or(&Weight::one()), &g).map_err(usage)?
        }
        NormKind::Amalgam => {
            let one = Weight1::one();
            norms::amalgam_norm(&f, p, q, spec.m1.as_ref().unwrap_or(&one), spec.m2.as_ref().unwrap_or(&one), &g)
                .map_err(usage)?
        }
        NormKind::Mixed => {
            let d = run.cfg.distribution.as_ref().ok_or_else(|| usage("mixed norm needs a distribution"))?;
            let (field, _) = distribution(d, run.cfg.matrix.as_ref(), &f, &g)?;
            let w = spec.weight.clone().unwrap_or_else(Weight::one);
            norms::mixed_norm(&field, &MixedNormSpec::new(p, q, w, InnerAxis::First).map_err(usage)?)
        }
    };
    if !value.is_finite() {
        return Err(numerical(format!("norm is {value}")));
    }
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "norm",
        "norm": spec,
        "grid": {"n": run.grid.n(), "dx": run.grid.dx()},
        "value": value,
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("json"));
    if let Some(dir) = &run.out {
        fs::create_dir_all(dir).map_err(usage)?;
        write_json(&dir.join("norm.json"), &report)?;
    }
    Ok(())
}

fn cmd_verify(run: &Run) -> Result<(), Failure> {
    let desk = Desk { grid: run.grid, seed: run.seed };
    let rows = harness::run_suite(&desk, &run.experiments).map_err(usage)?;
    let mut stdout = std::io::stdout().lock();
    for r in &rows {
        let mark = if r.ok { "ok  " } else { "FAIL" };
        let detail = match (&r.error, r.waived) {
            (Some(e), _) => e.clone(),
            (None, true) => format!("[waived: {}]", r.waiver.as_deref().unwrap_or("")),
            _ => String::new(),
        };
        writeln!(stdout, "{mark} {:<44} expect={:<12} got={:<12} {detail}", r.name, format!("{:?}", r.expect).to_lowercase(), r.outcome)
            .map_err(numerical)?;
    }
    if let Some(dir) = &run.out {
        fs::create_dir_all(dir).map_err(usage)?;
        let f = File::create(dir.join("verify.csv")).map_err(numerical)?;
        harness::write_aggregate_csv(&rows, BufWriter::new(f)).map_err(numerical)?;
        write_json(
            &dir.join("verify.json"),
            &json!({"schema_version": SCHEMA_VERSION, "command": "verify", "seed": run.seed, "rows": rows}),
        )?;
    }
    let waived = rows.iter().filter(|r| r.waived).count();
    let bad = rows.iter().filter(|r| !r.ok && !r.waived).count();
    writeln!(
        stdout,
        "{} experiments, {} as expected, {waived} waived, {bad} unexpected",
        rows.len(),
        rows.len() - bad - waived
    )
    .map_err(numerical)?;
    if bad > 0 {
        return Err(Failure::Verification(format!("{bad} experiment(s) did not meet expectation")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let res = load(&cli).and_then(|run| match cli.command {
        Command::Analyze => cmd_analyze(&run),
        Command::Classify => cmd_classify(&run),
        Command::Norm => cmd_norm(&run),
        Command::Verify => cmd_verify(&run),
    });
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Verification(m) | Failure::Usage(m) | Failure::Numerical(m) => m,
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
