//! Command dispatch, file loading and report rendering for the `dissip` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use dissip_core::analysis;
use dissip_core::report::{mat_rows, rows_to_mat};
use dissip_core::riccati::default_grid;
use dissip_core::{
    Behavior, CertifyOptions, Error, IoPartition, PolyMatrix, RMat, Report, StateSpace, Status,
};

/// Exit code for malformed input, unreadable files and usage errors.
pub const EXIT_INPUT: i32 = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "dissip", version, about = "Dissipativity certificates for linear differential behaviors")]
pub struct Cli {
    /// Certificate tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    /// Number of frequencies in the Popov grid.
    #[arg(long, global = true, default_value_t = 2000)]
    pub grid: usize,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide dissipativity and build a quadratic storage function.
    Certify {
        #[arg(long)]
        behavior: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
        /// Comma-separated input variables (0-based); the rest are outputs.
        #[arg(long, value_delimiter = ',')]
        inputs: Option<Vec<usize>>,
    },
    /// Static-controllable-part and lossless-autonomous obstructions.
    Analyze {
        #[arg(long)]
        statespace: PathBuf,
        /// Output signature J; defaults to −I.
        #[arg(long)]
        sigma: Option<PathBuf>,
    },
    /// Smallest controllable superbehavior.
    Superbehavior {
        #[arg(long)]
        behavior: PathBuf,
        #[arg(long)]
        f1: Option<PathBuf>,
        #[arg(long)]
        f2: Option<PathBuf>,
    },
    /// Σ-orthogonality of two behaviors.
    Orthogonality {
        #[arg(long)]
        b1: PathBuf,
        #[arg(long)]
        b2: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
    },
    /// Intersect a strictly Σ-dissipative and a strictly −Σ-dissipative
    /// image; without files the built-in pair is used.
    EmbedDemo {
        #[arg(long)]
        sigma: Option<PathBuf>,
        #[arg(long)]
        plus: Option<PathBuf>,
        #[arg(long)]
        minus: Option<PathBuf>,
    },
}

/// Anything that ends the run with exit code 3.
#[derive(Debug)]
pub struct InputError(pub String);

impl From<Error> for InputError {
    fn from(e: Error) -> Self {
        InputError(e.to_string())
    }
}

type Res<T> = std::result::Result<T, InputError>;

fn read_json(path: &Path) -> Res<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

/// Use `v[key]` when `v` is an object carrying it (e.g. a report), else `v`.
fn unwrap_field<'a>(v: &'a Value, keys: &[&str]) -> &'a Value {
    keys.iter().find_map(|k| v.get(*k)).unwrap_or(v)
}

fn parse<T: serde::de::DeserializeOwned>(v: &Value, path: &Path) -> Res<T> {
    serde_json::from_value(v.clone()).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

/// A behavior file, or any report with a `behavior` field.
pub fn load_behavior(path: &Path) -> Res<Behavior> {
    let v = read_json(path)?;
    parse(unwrap_field(&v, &["behavior"]), path)
}

/// State-space data, or a certificate report carrying its realization.
pub fn load_statespace(path: &Path) -> Res<StateSpace> {
    let v = read_json(path)?;
    parse(unwrap_field(&v, &["statespace", "realization"]), path)
}

/// A constant matrix as nested rows, or an object with `sigma` or `J`.
pub fn load_matrix(path: &Path) -> Res<RMat> {
    let v = read_json(path)?;
    let rows: Vec<Vec<f64>> = parse(unwrap_field(&v, &["sigma", "J"]), path)?;
    Ok(rows_to_mat(&rows)?)
}

pub fn load_polymatrix(path: &Path) -> Res<PolyMatrix> {
    let v = read_json(path)?;
    parse(unwrap_field(&v, &["matrix"]), path)
}

/// Deterministic rendering. JSON keys are sorted; text mode prints the
/// header, the assumption and stage tables, then every other field.
pub fn render_report(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.to_json()).expect("reports are plain JSON");
            s.push('\n');
            s
        }
        Format::Text => render_text(report),
    }
}

fn render_text(r: &Report) -> String {
    let mut out = String::new();
    let status = serde_json::to_value(r.status).unwrap();
    out += &format!("kind     {}\nverdict  {}\nstatus   {}\n", r.kind, r.verdict, status.as_str().unwrap_or(""));
    if let Some(Value::Object(a)) = r.get("assumptions") {
        out += "\nassumption                       holds\n";
        for (k, v) in a {
            let mark = if v.as_bool() == Some(true) { "yes" } else { "NO" };
            out += &format!("  {k:<30} {mark}\n");
        }
    }
    if let Some(Value::Array(st)) = r.get("stages") {
        out += "\nstage                    result  detail\n";
        for s in st {
            let name = s["name"].as_str().unwrap_or("");
            let ok = if s["passed"].as_bool() == Some(true) { "pass" } else { "FAIL" };
            out += &format!("  {name:<22} {ok:<7} {}\n", s["detail"].as_str().unwrap_or(""));
        }
    }
    let rest: Vec<_> = r.body.iter().filter(|(k, _)| *k != "assumptions" && *k != "stages").collect();
    if !rest.is_empty() {
        out.push('\n');
    }
    for (k, v) in rest {
        let text = match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        out += &format!("{k}: {text}\n");
    }
    out
}

fn signature_or_default(j: Option<RMat>, p: usize) -> RMat {
    j.unwrap_or_else(|| -RMat::identity(p, p))
}

fn certify_cmd(cli: &Cli, behavior: &Path, sigma: &Path, inputs: &Option<Vec<usize>>) -> Res<Report> {
    let b = load_behavior(behavior)?;
    let s = load_matrix(sigma)?;
    let partition = match inputs {
        Some(ins) => {
            let outs = (0..b.w()).filter(|i| !ins.contains(i)).collect();
            let io = IoPartition { inputs: ins.clone(), outputs: outs };
            io.validate(b.w())?;
            Some(io)
        }
        None => None,
    };
    let opts = CertifyOptions { tol: cli.tol, grid: cli.grid, partition, ..Default::default() };
    let out = dissip_core::certify(&b, &s, &opts)?;
    Ok(out.to_report().with("behavior", &b))
}

fn analyze_cmd(cli: &Cli, path: &Path, sigma: &Option<PathBuf>) -> Res<Report> {
    let ss = load_statespace(path)?;
    let j = signature_or_default(sigma.as_deref().map(load_matrix).transpose()?, ss.p());
    let st = analysis::static_part_nonexistence(&ss, &j, cli.tol)?;
    let ll = analysis::lossless_obstruction(&ss.a, &ss.c, cli.tol)?;
    let (sr, lr) = (st.to_report(), ll.to_report());
    let statuses = [sr.status, lr.status];
    let status = if statuses.contains(&Status::Inconclusive) {
        Status::Inconclusive
    } else if statuses.contains(&Status::Negative) {
        Status::Negative
    } else {
        Status::Affirmative
    };
    let mut found = Vec::new();
    if sr.status == Status::Negative {
        found.push(sr.verdict.clone());
    }
    if ll.unobservable_storage_required {
        found.push(ll.verdict().to_string());
    }
    let verdict = if found.is_empty() { "no obstruction".to_string() } else { found.join("; ") };
    Ok(Report::new("analysis", verdict, status)
        .with("static", sr.to_json())
        .with("lossless", lr.to_json())
        .with("statespace", &ss)
        .with("J", mat_rows(&j)))
}

fn superbehavior_cmd(path: &Path, f1: &Option<PathBuf>, f2: &Option<PathBuf>) -> Res<Report> {
    let b = load_behavior(path)?;
    let f1 = f1.as_deref().map(load_polymatrix).transpose()?;
    let f2 = f2.as_deref().map(load_polymatrix).transpose()?;
    let sup = b.superbehavior(f1.as_ref(), f2.as_ref())?;
    let factors = b.kernel_matrix().smith_form().nontrivial_factors();
    let (m, ms) = (b.input_cardinality(), sup.input_cardinality());
    let contains = sup.contains(&b);
    let controllable = sup.is_controllable();
    let ok = contains && controllable && ms == m + factors.len();
    let (verdict, status) = if ok { ("controllable-superbehavior", Status::Affirmative) } else { ("check-failed", Status::Negative) };
    Ok(Report::new("superbehavior", verdict, status)
        .with("behavior", &sup)
        .with("original", &b)
        .with("m_original", m)
        .with("m_superbehavior", ms)
        .with("nontrivial_factors", &factors)
        .with("contains_original", contains)
        .with("controllable", controllable))
}

fn orthogonality_cmd(b1: &Path, b2: &Path, sigma: &Path) -> Res<Report> {
    let (b1, b2, s) = (load_behavior(b1)?, load_behavior(b2)?, load_matrix(sigma)?);
    Ok(analysis::orthogonality_check(&b1, &b2, &s)?.to_report())
}

/// The pair `[ξ+4; 3]`, `[2; ξ+5]` with `Σ = diag(1, −1)`.
pub fn demo_pair() -> (RMat, PolyMatrix, PolyMatrix) {
    let sigma = RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let plus = PolyMatrix::from_ints(&[&[&[4, 1]], &[&[3]]]);
    let minus = PolyMatrix::from_ints(&[&[&[2]], &[&[5, 1]]]);
    (sigma, plus, minus)
}

fn embed_cmd(cli: &Cli, sigma: &Option<PathBuf>, plus: &Option<PathBuf>, minus: &Option<PathBuf>) -> Res<Report> {
    let (s0, p0, m0) = demo_pair();
    let s = sigma.as_deref().map(load_matrix).transpose()?.unwrap_or(s0);
    let p = plus.as_deref().map(load_polymatrix).transpose()?.unwrap_or(p0);
    let m = minus.as_deref().map(load_polymatrix).transpose()?.unwrap_or(m0);
    let grid = default_grid(cli.grid, 1.0);
    match analysis::embed_both_ways(&s, &p, &m, &grid) {
        Ok((b, rep)) => Ok(rep.to_report().with("behavior", &b)),
        Err(e @ Error::StrictnessNotVerified(_)) => Ok(Report::new("embedding", "strictness-not-verified", Status::Negative)
            .with("reason", e.to_string())
            .with("error", e.code())),
        Err(e) => Err(e.into()),
    }
}

fn dispatch(cli: &Cli) -> Res<Report> {
    if !(cli.tol > 0.0) || !cli.tol.is_finite() {
        return Err(InputError(format!("--tol must be positive, got {}", cli.tol)));
    }
    if cli.grid < 2 {
        return Err(InputError(format!("--grid must be at least 2, got {}", cli.grid)));
    }
    match &cli.command {
        Command::Certify { behavior, sigma, inputs } => certify_cmd(cli, behavior, sigma, inputs),
        Command::Analyze { statespace, sigma } => analyze_cmd(cli, statespace, sigma),
        Command::Superbehavior { behavior, f1, f2 } => superbehavior_cmd(behavior, f1, f2),
        Command::Orthogonality { b1, b2, sigma } => orthogonality_cmd(b1, b2, sigma),
        Command::EmbedDemo { sigma, plus, minus } => embed_cmd(cli, sigma, plus, minus),
    }
}

/// Parse `argv`, run the command and return the exit code: 0 affirmative,
/// 1 negative, 2 inconclusive, 3 input or usage error.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_INPUT;
            }
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
    };
    let report = match dispatch(&cli) {
        Ok(r) => r,
        Err(InputError(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_INPUT;
        }
    };
    let text = render_report(&report, cli.format);
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                let _ = writeln!(stderr, "error: {}: {e}", path.display());
                return EXIT_INPUT;
            }
            let _ = writeln!(stderr, "{}", report.verdict);
        }
        None => {
            let _ = stdout.write_all(text.as_bytes());
        }
    }
    report.status.exit_code()
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_rendering_lists_assumptions() {
        let mut a = std::collections::BTreeMap::new();
        a.insert("strict_at_infinity", true);
        a.insert("unmixing", false);
        let r = Report::new("certificate", "refused:unmixing", Status::Negative).with("assumptions", a).with("m", 1);
        let t = render_report(&r, Format::Text);
        assert!(t.contains("verdict  refused:unmixing"));
        assert!(t.contains("unmixing") && t.contains("NO"));
        assert!(t.ends_with("m: 1\n"));
    }

    #[test]
    fn bad_flags_are_input_errors() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run_with(["dissip", "certify"], &mut o, &mut e), EXIT_INPUT);
        assert_eq!(run_with(["dissip", "--tol", "-1", "embed-demo"], &mut o, &mut e), EXIT_INPUT);
        assert_eq!(run_with(["dissip", "--grid", "1", "embed-demo"], &mut o, &mut e), EXIT_INPUT);
    }

    #[test]
    fn demo_runs_without_files() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run_with(["dissip", "--grid", "200", "embed-demo"], &mut o, &mut e), 0);
        let v: Value = serde_json::from_slice(&o).unwrap();
        assert_eq!(v["verdict"], "autonomous");
        assert_eq!(v["autonomous"], true);
    }
}
