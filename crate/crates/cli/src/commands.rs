use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use monosparse::experiments::{
    emit_report, read_sim_csv_file, run, CsvRecord, ExperimentKind, ExperimentSpec, Metrics,
};
use monosparse::{
    apply_corner, compile as compile_tree, feature_reorder, generate, generate_with_empty_fraction,
    quantize, random_queries, simulate as run_sim, CamArray, EnergyParams, Error, Reordering,
    SparsitySpec, Strategy, TreeModel,
};

use crate::{
    CompileArgs, ExperimentArgs, GenArgs, ReorderArgs, ReportArgs, SimulateArgs, CALIB_ENV,
};

pub const EXIT_INVALID: u8 = 1;
pub const EXIT_ASSERTION: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    /// Harness invariants failed; the report was still written.
    Violations(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_io() => EXIT_IO,
            CliError::Core(_) => EXIT_INVALID,
            CliError::Violations(_) => EXIT_ASSERTION,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Violations(v) => {
                write!(f, "{} invariant violation(s):", v.len())?;
                for line in v.iter().take(20) {
                    write!(f, "\n  {line}")?;
                }
                Ok(())
            }
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()).into());
    }
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e).into())
}

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut body = body.to_string();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e).into())
}

fn parse_json(path: &Path) -> Result<Value> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())).into())
}

fn load_array(path: &Path) -> Result<CamArray> {
    Ok(CamArray::from_json_str(&read(path)?)?)
}

fn to_pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

/// `--calib`, then the environment variable, then the bundled default.
fn load_params(flag: Option<&Path>) -> Result<EnergyParams> {
    let env = std::env::var_os(CALIB_ENV).map(PathBuf::from);
    match flag.map(Path::to_path_buf).or(env) {
        Some(p) => Ok(EnergyParams::load(&p)?),
        None => Ok(EnergyParams::default_calibration()),
    }
}

pub fn gen(a: GenArgs) -> Result<()> {
    let array = if a.exact {
        generate_with_empty_fraction(a.lambda, a.rows, a.cols, a.seed)?
    } else {
        generate(&SparsitySpec::new(a.rows, a.cols, a.lambda, a.mu, a.seed))?
    };
    write(&a.output, &array.to_json_string())?;
    if let (Some(n), Some(path)) = (a.queries, &a.queries_out) {
        let q = random_queries(&array, n, a.seed);
        write(path, &serde_json::to_string(&q).expect("queries serialize"))?;
    }
    eprintln!(
        "wrote {}x{} array with sparsity {:.4} to {}",
        a.rows,
        a.cols,
        array.sparsity(),
        a.output.display()
    );
    Ok(())
}

fn load_bounds(path: &Path) -> Result<Vec<(f64, f64)>> {
    let v = parse_json(path)?;
    let parsed = if v.is_object() {
        serde_json::from_value::<Metrics>(v).map(|m| m.feature_bounds)
    } else {
        serde_json::from_value::<Vec<(f64, f64)>>(v)
    };
    parsed.map_err(|e| Error::Schema(format!("{}: {e}", path.display())).into())
}

pub fn compile(a: CompileArgs) -> Result<()> {
    let tree = TreeModel::from_json_str(&read(&a.tree)?)?;
    let bounds = match &a.bounds {
        Some(p) => load_bounds(p)?,
        None => vec![(0.0, 1.0); tree.n_features()],
    };
    let mut array = compile_tree(&tree, &bounds)?;
    if let Some(levels) = a.levels {
        array = quantize(&array, levels)?;
    }
    write(&a.output, &array.to_json_string())?;
    eprintln!(
        "compiled {} leaves x {} features (sparsity {:.4}) to {}",
        array.n_rows(),
        array.n_cols(),
        array.sparsity(),
        a.output.display()
    );
    Ok(())
}

pub fn reorder(a: ReorderArgs) -> Result<()> {
    let array = load_array(&a.array)?;
    let (layout, perm) = feature_reorder(&array);
    write(&a.output, &layout.to_json_string())?;
    write(&a.perm_out, &to_pretty(&perm))?;
    Ok(())
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let array = load_array(&a.array)?;
    let perm: Option<Reordering> = match &a.perm {
        Some(p) => {
            let perm: Reordering = serde_json::from_value(parse_json(p)?)
                .map_err(|e| Error::Schema(format!("{}: {e}", p.display())))?;
            perm.validate()?;
            if perm.row_perm.len() != array.n_rows() || perm.col_perm.len() != array.n_cols() {
                return Err(Error::InvalidArgument(format!(
                    "permutation is {}x{} but the array is {}x{}",
                    perm.row_perm.len(),
                    perm.col_perm.len(),
                    array.n_rows(),
                    array.n_cols()
                ))
                .into());
            }
            Some(perm)
        }
        None => None,
    };
    let mut queries: Vec<Vec<f64>> = match (&a.queries, a.random_queries) {
        (Some(p), _) => serde_json::from_value(parse_json(p)?).map_err(|e| {
            Error::Schema(format!(
                "{}: expected a list of query vectors: {e}",
                p.display()
            ))
        })?,
        (None, Some(n)) => random_queries(&array, n, a.seed),
        (None, None) => {
            return Err(
                Error::InvalidArgument("give --queries FILE or --random-queries N".into()).into(),
            )
        }
    };
    if let (Some(perm), Some(_)) = (&perm, &a.queries) {
        queries = queries
            .iter()
            .map(|q| perm.permute_query(q))
            .collect::<monosparse::Result<_>>()?;
    }
    let mut params = load_params(a.calib.as_deref())?;
    if let Some(c) = a.corner {
        params = apply_corner(&params, c);
    }
    let mut report = run_sim(&array, a.tile, &queries, a.strategy, &params)?;
    if let Some(perm) = &perm {
        for rows in &mut report.matched_rows {
            *rows = perm.map_back(rows)?;
        }
    }
    if a.no_matches {
        report.matched_rows.clear();
    }
    println!("{}", to_pretty(&report));
    Ok(())
}

fn experiment_spec(a: &ExperimentArgs) -> Result<ExperimentSpec> {
    let base = match &a.config {
        Some(p) => {
            let mut v = parse_json(p)?;
            if let (Some(kind), Some(obj)) = (a.kind, v.as_object_mut()) {
                match obj.get("kind") {
                    Some(k) if k != kind.as_str() => {
                        return Err(Error::InvalidArgument(format!(
                            "--kind {} conflicts with config kind {k}",
                            kind.as_str()
                        ))
                        .into())
                    }
                    _ => {
                        obj.insert("kind".into(), json!(kind.as_str()));
                    }
                }
            }
            ExperimentSpec::from_json_value(&v)?
        }
        None => match a.kind {
            Some(kind) => ExperimentSpec::defaults(kind),
            None => return Err(Error::InvalidArgument("give --kind or --config".into()).into()),
        },
    };

    let mut o = Map::new();
    let mut set = |k: &str, v: Value| {
        o.insert(k.to_string(), v);
    };
    if let Some(v) = &a.out {
        set("output_dir", json!(v));
    }
    if let Some(v) = &a.calib {
        set("calibration", json!(v));
    }
    if let Some(v) = a.rows {
        set("rows", json!(v));
    }
    if let Some(v) = a.cols {
        set("cols", json!(v));
    }
    if let Some(t) = a.tile {
        set("tile_rows", json!(t.tile_rows));
        set("tile_cols", json!(t.tile_cols));
    }
    if let Some(v) = &a.lambda {
        set("lambdas", json!(v));
    }
    if let Some(v) = a.mu {
        set("mu", json!(v));
    }
    if let Some(v) = &a.seed {
        set("seeds", json!(v));
    }
    if let Some(v) = a.queries {
        set("queries", json!(v));
    }
    if let Some(v) = &a.strategy {
        set("strategies", json!(v));
    }
    if let Some(v) = &a.corner {
        set("corners", json!(v));
    }
    if let Some(v) = a.levels {
        set("levels", json!(v));
    }
    if let Some(v) = &a.data_dir {
        set("data_dir", json!(v));
    }
    if let Some(v) = &a.corpus_dir {
        set("corpus_dir", json!(v));
    }
    Ok(base.merged(&Value::Object(o))?)
}

pub fn experiment(a: ExperimentArgs) -> Result<()> {
    let spec = experiment_spec(&a)?;
    let params = match &spec.calibration {
        Some(p) => EnergyParams::load(p)?,
        None => load_params(None)?,
    };
    let outcome = run(&spec, &params)?;
    let written = emit_report(&outcome, &spec.output_dir)?;
    for p in &written {
        eprintln!("wrote {}", p.display());
    }
    if outcome.kind == ExperimentKind::Balance {
        eprintln!("r = {}, p = {}", outcome.summary["r"], outcome.summary["p"]);
    }
    if outcome.violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Violations(outcome.violations))
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

pub fn report(a: ReportArgs) -> Result<()> {
    let records = read_sim_csv_file(&a.csv)?;
    if records.is_empty() {
        return Err(Error::InvalidArgument(format!("{} has no rows", a.csv.display())).into());
    }
    // gains are taken against the raw row of the same configuration
    let key = |r: &CsvRecord| {
        format!(
            "{}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}",
            r.experiment, r.corner, r.lambda, r.rows, r.cols, r.tile_rows, r.tile_cols, r.seed
        )
    };
    println!(
        "{:<22} {:<11} {:<6} {:>6} {:>9} {:>7} {:>12} {:>12} {:>10}",
        "experiment",
        "strategy",
        "corner",
        "lambda",
        "array",
        "tile",
        "energy_uJ",
        "gops_per_W",
        "raw_gain"
    );
    for r in &records {
        let raw = records
            .iter()
            .find(|x| x.strategy == Some(Strategy::Raw) && key(x) == key(r))
            .and_then(|x| x.energy_uj);
        let gain = match (raw, r.energy_uj) {
            (Some(a), Some(b)) if b > 0.0 => Some(a / b),
            _ => None,
        };
        let dims = |a: Option<usize>, b: Option<usize>| match (a, b) {
            (Some(a), Some(b)) => format!("{a}x{b}"),
            _ => "-".into(),
        };
        println!(
            "{:<22} {:<11} {:<6} {:>6} {:>9} {:>7} {:>12} {:>12} {:>10}",
            r.experiment,
            r.strategy.map_or("-", |s| s.as_str()),
            r.corner.map_or("-", |c| c.as_str()),
            r.lambda.map_or_else(|| "-".into(), |l| format!("{l:.2}")),
            dims(r.rows, r.cols),
            dims(r.tile_rows, r.tile_cols),
            cell(r.energy_uj),
            cell(r.gops_per_w),
            gain.map_or_else(|| "-".into(), |g| format!("{g:.2}x")),
        );
    }
    Ok(())
}
