//! Batch interface: algebra and morphism files, command dispatch, report emission and a
//! content-addressed result cache.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::checks::{self, CheckLine};
use crate::frobenius::{AlgebraDescription, FrobeniusAlgebra, FrobeniusError};
use crate::hochschild::{ComplexError, Complexes, Window};
use crate::linalg::{format_scalar, Scalar};
use crate::tate::TateError;
use crate::transport::{gh_invariance_check, DgMorphism, MorphismDescription, TransportError, ZigZagArrow};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InputError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schema error at key \"{key}\"")]
    Schema { key: String },
    #[error("invalid algebra: {0}")]
    Invalid(FrobeniusError),
    #[error("{0}")]
    Usage(String),
}

fn classify(err: serde_json::Error) -> InputError {
    let message = err.to_string();
    for marker in ["unknown field `", "missing field `", "duplicate field `"] {
        if let Some(rest) = message.split_once(marker).map(|(_, r)| r) {
            let key = rest.split('`').next().unwrap_or_default().to_string();
            return InputError::Schema { key };
        }
    }
    InputError::Parse { line: err.line(), message }
}

fn read(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| InputError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Parses an algebra description; missing products, differentials and pairing entries are zero.
pub fn parse_algebra_str(text: &str) -> Result<AlgebraDescription, InputError> {
    let desc: AlgebraDescription = serde_json::from_str(text).map_err(classify)?;
    let mut seen = std::collections::BTreeSet::new();
    for entry in &desc.basis {
        if !seen.insert(entry.name.as_str()) {
            return Err(InputError::Schema { key: format!("basis.{}", entry.name) });
        }
    }
    Ok(desc)
}

pub fn parse_algebra(path: &Path) -> Result<AlgebraDescription, InputError> {
    parse_algebra_str(&read(path)?)
}

/// The structured form of a description; `parse_algebra_str(&emit_algebra(d)) == d`.
pub fn emit_algebra(desc: &AlgebraDescription) -> String {
    serde_json::to_string_pretty(desc).expect("descriptions serialize") + "\n"
}

pub fn load_algebra(path: &Path) -> Result<Complexes, InputError> {
    let desc = parse_algebra(path)?;
    FrobeniusAlgebra::validate(&desc).map(Complexes::new).map_err(InputError::Invalid)
}

/// A morphism file with its algebra paths resolved relative to the file.
#[derive(Debug, Clone)]
pub struct MorphismFile {
    pub description: MorphismDescription,
    pub source: PathBuf,
    pub target: PathBuf,
}

pub fn parse_morphism(path: &Path) -> Result<MorphismFile, InputError> {
    let description: MorphismDescription = serde_json::from_str(&read(path)?).map_err(classify)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    Ok(MorphismFile { source: base.join(&description.source), target: base.join(&description.target), description })
}

/// Settings of one run, embedded verbatim in its report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub inputs: Vec<String>,
    pub min: i64,
    pub max: i64,
    pub p_cap: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    pub version: String,
}

impl RunConfig {
    pub fn window(&self) -> Window {
        Window::new(self.min, self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Section {
    fn new(title: impl Into<String>, columns: &[&str]) -> Section {
        Section { title: title.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub sections: Vec<Section>,
    pub checks: Vec<CheckLine>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Csv,
}

fn check_section(checks: &[CheckLine]) -> Section {
    let mut section = Section::new("checks", &["check", "result", "detail"]);
    for c in checks {
        section.row(vec![c.name.clone(), if c.passed { "pass" } else { "fail" }.into(), c.detail.clone()]);
    }
    section
}

/// Deterministic serialization of a report.
pub fn emit_report(report: &RunReport, format: Format) -> String {
    let mut sections = report.sections.clone();
    if !report.checks.is_empty() {
        sections.push(check_section(&report.checks));
    }
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("reports serialize") + "\n",
        Format::Text => {
            let c = &report.config;
            let mut out = format!(
                "workbench {} {} {}\nwindow [{}, {}]  p-cap {}  samples {}  seed {}\n",
                c.version,
                c.command,
                c.inputs.join(" "),
                c.min,
                c.max,
                c.p_cap.map_or("-".to_string(), |p| p.to_string()),
                c.samples,
                c.seed
            );
            for section in &sections {
                out.push('\n');
                out.push_str(&format!("{}\n", section.title));
                let mut widths: Vec<usize> = section.columns.iter().map(|h| h.chars().count()).collect();
                for row in &section.rows {
                    for (i, cell) in row.iter().enumerate() {
                        widths[i] = widths[i].max(cell.chars().count());
                    }
                }
                let line = |cells: &[String]| {
                    let padded: Vec<String> = cells
                        .iter()
                        .enumerate()
                        .map(|(i, cell)| format!("{cell}{}", " ".repeat(widths[i] - cell.chars().count())))
                        .collect();
                    padded.join("  ").trim_end().to_string() + "\n"
                };
                out.push_str(&line(&section.columns));
                for row in &section.rows {
                    out.push_str(&line(row));
                }
            }
            out
        }
        Format::Csv => {
            let mut writer = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
            let c = &report.config;
            writer
                .write_record(["#config", &c.command, &c.inputs.join(" "), &c.min.to_string(), &c.max.to_string(), &c.seed.to_string(), &c.version])
                .expect("in-memory csv");
            for section in &sections {
                writer.write_record([format!("#{}", section.title)]).expect("in-memory csv");
                writer.write_record(&section.columns).expect("in-memory csv");
                for row in &section.rows {
                    writer.write_record(row).expect("in-memory csv");
                }
            }
            String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("utf-8")
        }
    }
}

/// Errors that stop a run: bad input (exit 2) or a failed computation (exit 1).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("{0}")]
    Failure(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Input(_) => 2,
            RunError::Failure(_) => 1,
        }
    }
}

impl From<ComplexError> for RunError {
    fn from(e: ComplexError) -> Self {
        match e {
            ComplexError::NotSimplyConnected | ComplexError::IndexOutOfRange { .. } => RunError::Input(InputError::Usage(e.to_string())),
            other => RunError::Failure(other.to_string()),
        }
    }
}

impl From<TateError> for RunError {
    fn from(e: TateError) -> Self {
        match e {
            TateError::Complex(inner) => inner.into(),
            other => RunError::Failure(other.to_string()),
        }
    }
}

impl From<TransportError> for RunError {
    fn from(e: TransportError) -> Self {
        match e {
            TransportError::Description(_) | TransportError::Precondition(_) | TransportError::NotAnAlgebraMap(_) => {
                RunError::Input(InputError::Usage(e.to_string()))
            }
            TransportError::Complex(inner) => inner.into(),
            TransportError::Tate(inner) => inner.into(),
            other => RunError::Failure(other.to_string()),
        }
    }
}

pub const COMMANDS: &[&str] = &[
    "validate",
    "casimir",
    "euler",
    "hh",
    "hhcoh",
    "hhsg",
    "gh-table",
    "cup-table",
    "retract-check",
    "les-check",
    "anomaly-check",
    "transport",
    "invariance-check",
    "report",
];

fn coords(values: &[Scalar]) -> String {
    format!("({})", values.iter().map(format_scalar).collect::<Vec<_>>().join(", "))
}

fn rng(config: &RunConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(config.seed)
}

fn single_input(config: &RunConfig) -> Result<&Path, InputError> {
    match config.inputs.as_slice() {
        [one] => Ok(Path::new(one)),
        other => Err(InputError::Usage(format!("{} expects one input file, got {}", config.command, other.len()))),
    }
}

struct Output {
    sections: Vec<Section>,
    checks: Vec<CheckLine>,
}

impl Output {
    fn new() -> Self {
        Output { sections: Vec::new(), checks: Vec::new() }
    }
}

/// Runs one command.
pub fn run(config: &RunConfig) -> Result<RunReport, RunError> {
    if config.min > config.max {
        return Err(InputError::Usage(format!("--min {} exceeds --max {}", config.min, config.max)).into());
    }
    let output = match config.command.as_str() {
        "transport" => run_transport(config)?,
        "invariance-check" => run_invariance(config)?,
        "validate" => run_validate(config)?,
        command if COMMANDS.contains(&command) => {
            let cx = load_algebra(single_input(config)?)?;
            run_algebra_command(config, &cx)?
        }
        other => return Err(InputError::Usage(format!("unknown command \"{other}\"")).into()),
    };
    Ok(RunReport { config: config.clone(), sections: output.sections, checks: output.checks })
}

fn run_validate(config: &RunConfig) -> Result<Output, RunError> {
    let desc = parse_algebra(single_input(config)?)?;
    let mut out = Output::new();
    match FrobeniusAlgebra::validate(&desc) {
        Ok(alg) => {
            let mut summary = Section::new("algebra", &["name", "k", "dim", "simply connected", "χ = 0"]);
            summary.row(vec![
                alg.name().to_string(),
                alg.k().to_string(),
                alg.dim().to_string(),
                alg.is_simply_connected().to_string(),
                alg.euler_is_zero().to_string(),
            ]);
            out.sections.push(summary);
            out.checks.push(CheckLine::new("axioms (i)–(v), associativity, unit, Leibniz", &[], 1));
            let cy: Vec<String> = alg.calabi_yau_check().iter().map(|f| f.to_string()).collect();
            out.checks.push(CheckLine::new("Calabi–Yau bimodule map", &cy, 1));
        }
        Err(FrobeniusError::AxiomViolations(violations)) => {
            let mut section = Section::new("violations", &["axiom", "witness"]);
            for v in &violations {
                section.row(vec![v.axiom.id().to_string(), v.witness.clone()]);
            }
            out.sections.push(section);
            let failures: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            out.checks.push(CheckLine::new("axioms", &failures, failures.len()));
        }
        Err(other) => return Err(InputError::Invalid(other).into()),
    }
    Ok(out)
}

fn dims_section(title: &str, columns: &[&str], rows: Vec<(i64, Vec<usize>)>) -> Section {
    let mut section = Section::new(title, columns);
    for (degree, dims) in rows {
        let mut cells = vec![degree.to_string()];
        cells.extend(dims.iter().map(|d| d.to_string()));
        section.row(cells);
    }
    section
}

fn run_algebra_command(config: &RunConfig, cx: &Complexes) -> Result<Output, RunError> {
    let window = config.window();
    let mut out = Output::new();
    match config.command.as_str() {
        "casimir" => {
            let mut section = Section::new("casimir", &["left", "right", "coeff"]);
            for t in cx.alg.casimir() {
                section.row(vec![cx.alg.basis_name(t.left).into(), cx.alg.basis_name(t.right).into(), format_scalar(&t.coeff)]);
            }
            out.sections.push(section);
            let failures: Vec<String> = cx.alg.verify_casimir_identities().iter().map(|f| f.to_string()).collect();
            out.checks.push(CheckLine::new("Casimir identities", &failures, 1));
        }
        "euler" => {
            let mut section = Section::new("euler characteristic", &["χ", "zero"]);
            section.row(vec![cx.alg.format_vec(&cx.alg.euler_char()), cx.alg.euler_is_zero().to_string()]);
            out.sections.push(section);
        }
        "hh" => {
            let full = cx.hh_homology(window, false)?;
            let reduced = cx.hh_homology(window, true)?;
            let rows = full.dims().into_iter().zip(reduced.dims()).map(|((d, a), (_, b))| (d, vec![a, b])).collect();
            out.sections.push(dims_section("Hochschild homology", &["degree", "HH", "reduced HH"], rows));
        }
        "hhcoh" => {
            let top = config.p_cap.unwrap_or(0);
            let reports: Vec<_> = (0..=top).map(|p| cx.hh_cohomology_at_level(window, p)).collect::<Result<_, _>>()?;
            let mut columns = vec!["degree".to_string()];
            columns.extend((0..=top).map(|p| if p == 0 { "HH^(A,A)".to_string() } else { format!("HH^(A,Ω^{p})") }));
            let mut section = Section { title: "Hochschild cohomology".into(), columns, rows: Vec::new() };
            for degree in window.degrees() {
                let mut cells = vec![degree.to_string()];
                cells.extend(reports.iter().map(|r| r.at(degree).map_or(0, |d| d.dim()).to_string()));
                section.row(cells);
            }
            out.sections.push(section);
        }
        "hhsg" => {
            let report = cx.hh_sg(window)?;
            let k = cx.k();
            let mut section = Section::new("singular Hochschild cohomology", &["degree", "HH_sg", "HH^", "HH_(n-k+1)", "case formula"]);
            let mut failures = Vec::new();
            for (degree, dim) in report.dims() {
                let predicted = report.predicted_dim(k, degree);
                if predicted != Some(dim) {
                    failures.push(format!("degree {degree}"));
                }
                section.row(vec![
                    degree.to_string(),
                    dim.to_string(),
                    report.hh_cochain.at(degree).map_or("-".into(), |d| d.dim().to_string()),
                    report.hh_chain.at(degree - k + 1).map_or("-".into(), |d| d.dim().to_string()),
                    predicted.map_or("-".into(), |d| d.to_string()),
                ]);
            }
            out.sections.push(section);
            if !report.splittings.is_empty() {
                let mut split = Section::new("chosen splitting (pivot order)", &["degree", "included HH^ dim", "complement classes"]);
                for s in &report.splittings {
                    split.row(vec![s.degree.to_string(), s.included_dim.to_string(), s.complement.iter().map(|c| coords(c)).collect::<Vec<_>>().join(" ")]);
                }
                out.sections.push(split);
            }
            out.checks.push(CheckLine::new(format!("case split (χ = 0: {})", report.euler_zero), &failures, report.degrees.len()));
            out.checks.push(CheckLine::new("long exact sequence exact", &[], report.exactness.len()));
        }
        "les-check" => {
            let report = cx.hh_sg(window)?;
            let mut section = Section::new("long exact sequence", &["node", "image dim", "kernel dim", "exact"]);
            let mut failures = Vec::new();
            for node in &report.exactness {
                if !node.exact {
                    failures.push(node.label.clone());
                }
                section.row(vec![node.label.clone(), node.image_dim.to_string(), node.kernel_dim.to_string(), node.exact.to_string()]);
            }
            out.sections.push(section);
            out.checks.push(CheckLine::new("image = kernel at every node", &failures, report.exactness.len()));
        }
        "gh-table" => {
            let table = cx.star_table(window)?;
            let mut classes = Section::new("reduced classes", &["degree", "index", "representative"]);
            for ((degree, index), label) in table.classes.iter().zip(&table.labels) {
                classes.row(vec![degree.to_string(), index.to_string(), label.clone()]);
            }
            let mut products = Section::new("⋆ products", &["left", "right", "degree", "coordinates"]);
            for (((dl, il), (dr, ir)), (degree, values)) in &table.entries {
                products.row(vec![format!("{dl}.{il}"), format!("{dr}.{ir}"), degree.to_string(), coords(values)]);
            }
            out.sections.push(classes);
            out.sections.push(products);
            let sg = cx.hh_sg(Window::new(window.min + cx.k() - 1, window.max + cx.k() - 1))?;
            let failures = cx.gh_table_matches_cup(&table, &sg)?;
            out.checks.push(CheckLine::new("⋆ table equals the cup on HH_sg classes", &failures, table.entries.len()));
        }
        "cup-table" => {
            let report = cx.hh_sg(window)?;
            let table = cx.sg_cup_table(&report)?;
            let mut section = Section::new("cup on HH_sg", &["left", "right", "degree", "coordinates"]);
            let mut failures = Vec::new();
            for (((dl, il), (dr, ir)), (degree, values)) in &table {
                section.row(vec![format!("{dl}.{il}"), format!("{dr}.{ir}"), degree.to_string(), coords(values)]);
                let swapped = &table[&((*dr, *ir), (*dl, *il))].1;
                let s = crate::signs::sign(dl * dr);
                if *swapped != values.iter().map(|c| c * &s).collect::<Vec<_>>() {
                    failures.push(format!("({dl}.{il}, {dr}.{ir})"));
                }
            }
            out.sections.push(section);
            out.checks.push(CheckLine::new("graded commutativity", &failures, table.len()));
        }
        "retract-check" => {
            let line = checks::retract_suite(cx, window, config.samples, config.p_cap.unwrap_or(4), &mut rng(config))?;
            out.checks.push(line);
        }
        "anomaly-check" => {
            out.checks.push(checks::anomaly_suite(cx, window)?);
        }
        "report" => {
            let mut r = rng(config);
            let p = config.p_cap.unwrap_or(2);
            let mut mutation_rng = rng(config);
            out.checks.push(checks::mutation_suite(&parse_algebra(single_input(config)?)?, config.samples, &mut mutation_rng));
            let casimir: Vec<String> = cx.alg.verify_casimir_identities().iter().map(|f| f.to_string()).collect();
            out.checks.push(CheckLine::new(format!("{}: Casimir identities", cx.alg.name()), &casimir, 1));
            out.checks.extend(checks::d_squared_suite(cx, window, p)?);
            out.checks.push(checks::anomaly_suite(cx, window)?);
            out.checks.push(checks::associativity_suite(cx, window.max)?);
            out.checks.push(checks::retract_suite(cx, window, config.samples, config.p_cap.unwrap_or(4), &mut r)?);
            out.checks.push(checks::bridge_suite(cx, window, config.samples, &mut r)?);
            out.checks.extend(checks::cup_homotopy_suite(cx, config.samples, &mut r)?);
            out.checks.extend(checks::singular_suite(cx, window)?);
        }
        other => return Err(InputError::Usage(format!("unknown command \"{other}\"")).into()),
    }
    Ok(out)
}

/// Loads every algebra once per path so arrows of a zig-zag share their endpoints.
struct AlgebraCache {
    loaded: BTreeMap<PathBuf, Arc<Complexes>>,
}

impl AlgebraCache {
    fn get(&mut self, path: &Path) -> Result<Arc<Complexes>, InputError> {
        let key = std::fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf());
        if let Some(hit) = self.loaded.get(&key) {
            return Ok(hit.clone());
        }
        let cx = Arc::new(load_algebra(path)?);
        self.loaded.insert(key, cx.clone());
        Ok(cx)
    }
}

fn load_arrow(cache: &mut AlgebraCache, path: &Path) -> Result<ZigZagArrow, RunError> {
    let file = parse_morphism(path)?;
    let (source, target) = (cache.get(&file.source)?, cache.get(&file.target)?);
    let morphism = DgMorphism::from_description(source, target, &file.description)?;
    Ok(ZigZagArrow { morphism, direction: file.description.direction })
}

fn matrix_cell(m: &crate::linalg::SparseMatrix) -> String {
    let rows: Vec<String> = m.to_dense().iter().map(|r| coords(r)).collect();
    format!("[{}]", rows.join(" "))
}

fn run_transport(config: &RunConfig) -> Result<Output, RunError> {
    let window = config.window();
    let mut cache = AlgebraCache { loaded: BTreeMap::new() };
    let arrow = load_arrow(&mut cache, single_input(config)?)?;
    let phi = &arrow.morphism;
    let mut out = Output::new();
    let mut summary = Section::new("morphism", &["source", "target", "quasi-iso"]);
    summary.row(vec![phi.source.alg.name().into(), phi.target.alg.name().into(), phi.quasi_iso.to_string()]);
    out.sections.push(summary);
    let (source, target) = (phi.source.hh_sg(window)?, phi.target.hh_sg(window)?);
    match phi.transport_iso(&source, &target, window) {
        Ok(report) => {
            let mut section = Section::new("transported isomorphism", &["degree", "level", "stable", "matrix"]);
            let mut unstable = Vec::new();
            for piece in &report.degrees {
                if !piece.stable {
                    unstable.push(format!("degree {}", piece.degree));
                }
                section.row(vec![piece.degree.to_string(), piece.level.to_string(), piece.stable.to_string(), matrix_cell(&piece.composite)]);
            }
            out.sections.push(section);
            out.checks.push(CheckLine::new("isomorphism in every window degree", &[], report.degrees.len()));
            out.checks.push(CheckLine::new("stable at the next level", &unstable, report.degrees.len()));
        }
        Err(TransportError::NotInvertible { degree, window_too_small }) => {
            let reason = if window_too_small { "level too small" } else { "not a quasi-isomorphism" };
            out.checks.push(CheckLine::new("isomorphism in every window degree", &[format!("degree {degree}: {reason}")], 1));
        }
        Err(other) => return Err(other.into()),
    }
    Ok(out)
}

fn run_invariance(config: &RunConfig) -> Result<Output, RunError> {
    let window = config.window();
    if config.inputs.is_empty() {
        return Err(InputError::Usage("invariance-check expects one or more morphism files".into()).into());
    }
    let mut cache = AlgebraCache { loaded: BTreeMap::new() };
    let arrows: Vec<ZigZagArrow> =
        config.inputs.iter().map(|p| load_arrow(&mut cache, Path::new(p))).collect::<Result<_, _>>()?;
    let mut algebras = vec![arrows[0].ends().0.clone()];
    algebras.extend(arrows.iter().map(|a| a.ends().1.clone()));
    let reports: Vec<_> = algebras.iter().map(|cx| cx.hh_sg(window)).collect::<Result<_, _>>()?;
    let check = gh_invariance_check(&arrows, &reports, window)?;
    let mut out = Output::new();
    let mut maps = Section::new("composite on reduced classes", &["degree", "matrix"]);
    for (degree, m) in &check.reduced_maps {
        maps.row(vec![degree.to_string(), matrix_cell(m)]);
    }
    out.sections.push(maps);
    let mut table = Section::new("mapped ⋆ table vs target", &["left", "right", "degree", "mapped", "target"]);
    for (((dl, il), (dr, ir)), (degree, mapped)) in &check.mapped_table.entries {
        let target = check.target_table.entries.get(&((*dl, *il), (*dr, *ir))).map_or("-".to_string(), |e| coords(&e.1));
        table.row(vec![format!("{dl}.{il}"), format!("{dr}.{ir}"), degree.to_string(), coords(mapped), target]);
    }
    out.sections.push(table);
    let mismatched: Vec<String> = check
        .mapped_table
        .entries
        .iter()
        .filter(|(key, value)| check.target_table.entries.get(key) != Some(value))
        .map(|(key, _)| format!("{key:?}"))
        .collect();
    let failures: Vec<String> = check.failures.iter().map(|f| f.to_string()).collect();
    out.checks.push(CheckLine::new(
        format!("χ parity (χ = 0: {} / {})", check.euler_zero.0, check.euler_zero.1),
        &[],
        1,
    ));
    out.checks.push(CheckLine::new("reduced subspace and T(x ⋆ y) = T(x) ⋆ T(y)", &failures, check.mapped_table.entries.len()));
    out.checks.push(CheckLine::new("mapped table equals target table", &mismatched, check.mapped_table.entries.len()));
    Ok(out)
}

/// Cache key: the config together with the content hash of every file the run reads.
pub fn cache_key(config: &RunConfig) -> Result<String, InputError> {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_string(config).expect("configs serialize").as_bytes());
    let mut files: Vec<PathBuf> = config.inputs.iter().map(PathBuf::from).collect();
    if matches!(config.command.as_str(), "transport" | "invariance-check") {
        for input in &config.inputs {
            let file = parse_morphism(Path::new(input))?;
            files.push(file.source);
            files.push(file.target);
        }
    }
    for file in files {
        hasher.update(read(&file)?.as_bytes());
        hasher.update([0u8]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Runs through a cache directory; a hit returns the stored report unchanged.
pub fn run_cached(config: &RunConfig, dir: &Path) -> Result<RunReport, RunError> {
    let key = cache_key(config)?;
    let path = dir.join(format!("{key}.json"));
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(report) = serde_json::from_str::<RunReport>(&text) {
            if report.config == *config {
                return Ok(report);
            }
        }
    }
    let report = run(config)?;
    let io = |e: std::io::Error| InputError::Io { path: dir.display().to_string(), message: e.to_string() };
    std::fs::create_dir_all(dir).map_err(io)?;
    let partial = dir.join(format!("{key}.json.{}", std::process::id()));
    std::fs::write(&partial, emit_report(&report, Format::Json)).map_err(io)?;
    std::fs::rename(&partial, &path).map_err(io)?;
    Ok(report)
}

pub fn default_config(command: &str, inputs: &[&str]) -> RunConfig {
    RunConfig {
        command: command.to_string(),
        inputs: inputs.iter().map(|s| s.to_string()).collect(),
        min: 0,
        max: 8,
        p_cap: None,
        samples: 50,
        seed: 0,
        version: VERSION.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(name: &str) -> String {
        format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    #[test]
    fn parse_errors_are_classified() {
        let good = std::fs::read_to_string(fixture("S2.json")).unwrap();
        let desc = parse_algebra_str(&good).unwrap();
        assert_eq!(parse_algebra_str(&emit_algebra(&desc)).unwrap(), desc);
        let bad_rational = good.replacen("\"value\": 1", "\"value\": \"1/0\"", 1);
        assert!(matches!(parse_algebra_str(&bad_rational), Err(InputError::Parse { .. })));
        let duplicate = good.replacen("{ \"name\": \"x\", \"deg\": 2 }", "{ \"name\": \"1\", \"deg\": 2 }", 1);
        assert!(matches!(parse_algebra_str(&duplicate), Err(InputError::Schema { .. })));
        let unknown = good.replacen("\"unit\"", "\"colour\": 1, \"unit\"", 1);
        assert_eq!(parse_algebra_str(&unknown), Err(InputError::Schema { key: "colour".into() }));
        let truncated = &good[..good.len() / 2];
        assert!(matches!(parse_algebra_str(truncated), Err(InputError::Parse { line, .. }) if line > 1));
    }

    #[test]
    fn hh_command_reports_the_sphere_row() {
        let mut config = default_config("hh", &[&fixture("S3.json")]);
        config.max = 10;
        let report = run(&config).unwrap();
        let dims: Vec<String> = report.sections[0].rows.iter().map(|r| r[1].clone()).collect();
        assert_eq!(dims, ["1", "0", "1", "1", "1", "1", "1", "1", "1", "1", "1"]);
        let csv = emit_report(&report, Format::Csv);
        assert!(csv.lines().nth(2).unwrap().starts_with("degree,"));
    }

    #[test]
    fn reports_are_deterministic_and_cached_bit_identically() {
        let mut config = default_config("retract-check", &[&fixture("S2.json")]);
        config.seed = 7;
        config.samples = 20;
        let first = emit_report(&run(&config).unwrap(), Format::Json);
        assert_eq!(first, emit_report(&run(&config).unwrap(), Format::Json));
        let dir = std::env::temp_dir().join(format!("workbench-cache-test-{}", std::process::id()));
        let cached = run_cached(&config, &dir).unwrap();
        let again = run_cached(&config, &dir).unwrap();
        assert_eq!(emit_report(&cached, Format::Json), first);
        assert_eq!(emit_report(&again, Format::Json), first);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn empty_report_is_header_only() {
        let report = RunReport { config: default_config("euler", &[]), sections: vec![], checks: vec![] };
        assert_eq!(emit_report(&report, Format::Text).lines().count(), 2);
        assert_eq!(emit_report(&report, Format::Csv).lines().count(), 1);
    }

    #[test]
    fn input_errors_exit_with_two() {
        let config = default_config("hh", &["/nonexistent.json"]);
        assert_eq!(run(&config).unwrap_err().exit_code(), 2);
        let config = default_config("frobnicate", &[&fixture("S2.json")]);
        assert_eq!(run(&config).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn invariance_command_on_scaling() {
        let config = default_config("invariance-check", &[&fixture("scale2.json")]);
        let report = run(&config).unwrap();
        assert!(report.passed(), "{:?}", report.checks);
    }
}
