//! Convergence studies: for each refinement level, build the mesh, assemble,
//! solve and measure errors; then report rates.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{compute_errors, ConvergenceReport, LevelResult, Rate};
use crate::manufactured::{case_by_name, ManufacturedCase};
use crate::mesh::{load_mesh, GridKind, PolyMesh};
use crate::system::{
    assemble, build_dofmap, dirichlet_values, infsup_constant, solve_with_tolerance, INFSUP_LIMIT,
};
use crate::weak_operators::{all_local_matrices, norm_1h_matrix, LocalOperators};
use crate::{Error, Result};

/// Largest supported element order.
pub const MAX_K: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum GridSpec {
    Family(GridKind),
    /// Mesh files; `{level}` in the path is replaced by the level number.
    File(String),
}

impl GridSpec {
    /// Mesh for a level. Generated families use `2^level` cells per side.
    pub fn mesh(&self, level: u32) -> Result<PolyMesh> {
        match self {
            GridSpec::Family(kind) => {
                let n = 1usize
                    .checked_shl(level)
                    .filter(|&n| n <= 1 << 12)
                    .ok_or_else(|| Error::Config(format!("level {level} is too fine")))?;
                kind.generate(n)
            }
            GridSpec::File(pattern) => {
                let path = pattern.replace("{level}", &level.to_string());
                Ok(load_mesh(path)?.0)
            }
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Family(kind) => f.write_str(kind.name()),
            GridSpec::File(p) => write!(f, "file:{p}"),
        }
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(GridSpec::Family(GridKind::Square)),
            "quad" => Ok(GridSpec::Family(GridKind::Quad)),
            "polygon" => Ok(GridSpec::Family(GridKind::Polygon)),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(GridSpec::File(p.to_string())),
                _ => Err(Error::Config(format!(
                    "unknown grid `{s}` (expected square, quad, polygon or file:<path>)"
                ))),
            },
        }
    }
}

impl From<GridSpec> for String {
    fn from(g: GridSpec) -> String {
        g.to_string()
    }
}

impl TryFrom<String> for GridSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Markdown,
    Csv,
    Json,
}

impl Format {
    pub fn file_name(self) -> &'static str {
        match self {
            Format::Markdown => "study.md",
            Format::Csv => "study.csv",
            Format::Json => "study.json",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markdown" | "md" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown format `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub k: usize,
    pub grid: GridSpec,
    /// Inclusive `[first, last]`.
    pub levels: [u32; 2],
    pub case: String,
    /// Added to every quadrature degree.
    pub quad_bump: usize,
    /// Relative solver residual tolerance; `None` keeps `1e-10`.
    pub tol: Option<f64>,
    /// Also compute the inf-sup constant and the norm-equivalence bracket.
    pub diagnostics: bool,
    #[serde(skip)]
    pub dump_system: Option<PathBuf>,
}

impl StudyConfig {
    pub fn new(k: usize, grid: GridSpec, levels: [u32; 2], case: &str) -> Self {
        StudyConfig {
            k,
            grid,
            levels,
            case: case.to_string(),
            quad_bump: 0,
            tol: None,
            diagnostics: false,
            dump_system: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k > MAX_K {
            return Err(Error::Config(format!("k = {} exceeds the limit {MAX_K}", self.k)));
        }
        if self.levels[0] > self.levels[1] {
            return Err(Error::Config(format!(
                "levels {}..{} are not increasing",
                self.levels[0], self.levels[1]
            )));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!("tolerance {t} must lie in (0, 1)")));
            }
        }
        Ok(())
    }
}

/// Parses `A..B` (or a single level `A`).
pub fn parse_levels(s: &str) -> Result<[u32; 2]> {
    let bad = || Error::Config(format!("levels `{s}` must look like A..B"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
        None => (s, s),
    };
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    Ok([a, b])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelDiagnostics {
    pub level: u32,
    /// `None` when the problem exceeds the dense size limit.
    pub infsup: Option<f64>,
    /// Smallest and largest `|||v||| / ‖v‖_{1,h}` over random `v`.
    pub norm_ratio: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub report: ConvergenceReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostics: Option<Vec<LevelDiagnostics>>,
}

/// Number of random fields in the norm-equivalence diagnostic.
pub const NORM_SAMPLES: usize = 100;

/// Extremes of `|||v||| / ‖v‖_{1,h}` over random `v` with vanishing
/// boundary values. Seeded, so repeatable.
pub fn norm_ratio_bracket(mesh: &PolyMesh, ops: &[LocalOperators], samples: usize, seed: u64) -> [f64; 2] {
    let k = ops.first().map_or(0, |o| o.k);
    let d = build_dofmap(mesh, k);
    let norms: Vec<_> = ops.iter().map(|o| norm_1h_matrix(&o.geometry, &o.basis)).collect();
    let maps: Vec<_> = (0..mesh.n_elements()).map(|e| d.velocity_map(mesh, e)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bracket = [f64::INFINITY, 0.0f64];
    for _ in 0..samples {
        let v: Vec<f64> = (0..d.n_velocity).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (mut energy, mut discrete) = (0.0, 0.0);
        for (e, o) in ops.iter().enumerate() {
            let local: Vec<f64> = maps[e].iter().map(|g| g.map_or(0.0, |g| v[g])).collect();
            energy += o.energy(&local);
            let lv = DVector::from_column_slice(&local);
            discrete += lv.dot(&(&norms[e] * &lv));
        }
        let r = (energy / discrete).sqrt();
        bracket[0] = bracket[0].min(r);
        bracket[1] = bracket[1].max(r);
    }
    bracket
}

/// Solves one level and measures its errors.
pub fn run_level(config: &StudyConfig, case: &ManufacturedCase, level: u32) -> Result<(LevelResult, Option<LevelDiagnostics>)> {
    let start = Instant::now();
    let k = config.k;
    let mesh = config.grid.mesh(level)?;
    let ops = all_local_matrices(&mesh, k)?;
    let bump = config.quad_bump;
    let load_degree = case.load_degree() + k + bump;
    let bc_degree = case.velocity_degree() + k + 1 + bump;
    let boundary = dirichlet_values(&mesh, k, bc_degree, |x| case.velocity(x));
    let sys = assemble(&mesh, &ops, |x| case.load(x), load_degree, boundary)?;
    if let Some(dir) = &config.dump_system {
        sys.dump(dir.join(format!("level_{level}")))?;
    }
    let sol = solve_with_tolerance(&sys, &mesh, config.tol)?;
    let errors = compute_errors(&mesh, &ops, &sol, case, bump);
    let (divergence_residual, velocity_norm) = sol.divergence_residual(&ops);
    let diagnostics = if config.diagnostics {
        let size = sys.dofmap.n_velocity + sys.dofmap.n_pressure;
        let infsup = if size <= INFSUP_LIMIT {
            Some(infsup_constant(&mesh, k)?)
        } else {
            None
        };
        Some(LevelDiagnostics {
            level,
            infsup,
            norm_ratio: norm_ratio_bracket(&mesh, &ops, NORM_SAMPLES, u64::from(level)),
        })
    } else {
        None
    };
    Ok((
        LevelResult {
            level,
            h: mesh.h(),
            n_elements: mesh.n_elements(),
            n_unknowns: sys.n(),
            errors,
            rates: None,
            solver_residual: sol.residual,
            divergence_residual,
            velocity_norm,
            seconds: start.elapsed().as_secs_f64(),
        },
        diagnostics,
    ))
}

pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    config.validate()?;
    let case = case_by_name(&config.case)?;
    let mut report = ConvergenceReport::default();
    let mut diagnostics = config.diagnostics.then(Vec::new);
    for level in config.levels[0]..=config.levels[1] {
        let tag = |e: Error| Error::Level {
            level,
            source: Box::new(e),
        };
        let (result, diag) = run_level(config, &case, level).map_err(tag)?;
        report.push(result).map_err(tag)?;
        if let (Some(all), Some(d)) = (diagnostics.as_mut(), diag) {
            all.push(d);
        }
    }
    Ok(StudyResult {
        config: config.clone(),
        report,
        diagnostics,
    })
}

/// Scientific notation with a mantissa in `[0.1, 1)`, e.g. `0.3051E-03`.
pub fn format_error(x: f64) -> String {
    if x == 0.0 {
        return "0.0000E+00".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{:.3e}", x.abs());
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let exp: i32 = exp.parse::<i32>().expect("integer exponent") + 1;
    let sign = if x < 0.0 { "-" } else { "" };
    let esign = if exp < 0 { '-' } else { '+' };
    format!("{sign}0.{digits}E{esign}{:02}", exp.abs())
}

fn format_rate(r: Option<Rate>) -> String {
    match r {
        None => String::new(),
        Some(Rate::Value(v)) => format!("{v:.2}"),
        Some(Rate::Exact) => "exact".into(),
        Some(Rate::Undefined) => "-".into(),
    }
}

fn rate_field(r: Option<Rate>) -> String {
    match r {
        Some(Rate::Value(v)) => format!("{v}"),
        other => format_rate(other),
    }
}

pub const MARKDOWN_HEADER: &str =
    "| Grid | ‖Q_h u − u_h‖₀ | rate | \\|\\|\\|Q_h u − u_h\\|\\|\\| | rate | ‖p − p_h‖₀ | rate |";

pub fn emit_markdown(result: &StudyResult) -> String {
    let c = &result.config;
    let mut out = String::new();
    writeln!(
        out,
        "Case `{}`, grid `{}`, k = {} (P_{}²-P_{}²-P_{} elements)\n",
        c.case,
        c.grid,
        c.k,
        c.k,
        c.k + 1,
        c.k + 1
    )
    .unwrap();
    out.push_str(MARKDOWN_HEADER);
    out.push('\n');
    out.push_str("|---:|---:|---:|---:|---:|---:|---:|\n");
    for l in &result.report.levels {
        let r = l.rates;
        writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} |",
            l.level,
            format_error(l.errors.velocity_l2),
            format_rate(r.map(|r| r.velocity_l2)),
            format_error(l.errors.velocity_energy),
            format_rate(r.map(|r| r.velocity_energy)),
            format_error(l.errors.pressure_l2),
            format_rate(r.map(|r| r.pressure_l2)),
        )
        .unwrap();
    }
    if let Some(diag) = &result.diagnostics {
        out.push_str("\n| Grid | inf-sup β_h | min \\|\\|\\|v\\|\\|\\|/‖v‖₁,h | max \\|\\|\\|v\\|\\|\\|/‖v‖₁,h |\n");
        out.push_str("|---:|---:|---:|---:|\n");
        for d in diag {
            let beta = d.infsup.map_or("-".into(), |b| format!("{b:.4}"));
            writeln!(out, "| {} | {} | {:.4} | {:.4} |", d.level, beta, d.norm_ratio[0], d.norm_ratio[1]).unwrap();
        }
    }
    out
}

pub const CSV_HEADER: [&str; 13] = [
    "level",
    "h",
    "n_elements",
    "n_unknowns",
    "err_velocity_l2",
    "rate_velocity_l2",
    "err_velocity_energy",
    "rate_velocity_energy",
    "err_pressure_l2",
    "rate_pressure_l2",
    "solver_residual",
    "divergence_residual",
    "seconds",
];

pub fn emit_csv(result: &StudyResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for l in &result.report.levels {
        let r = l.rates;
        w.write_record([
            l.level.to_string(),
            format!("{}", l.h),
            l.n_elements.to_string(),
            l.n_unknowns.to_string(),
            format!("{:e}", l.errors.velocity_l2),
            rate_field(r.map(|r| r.velocity_l2)),
            format!("{:e}", l.errors.velocity_energy),
            rate_field(r.map(|r| r.velocity_energy)),
            format!("{:e}", l.errors.pressure_l2),
            rate_field(r.map(|r| r.pressure_l2)),
            format!("{:e}", l.solver_residual),
            format!("{:e}", l.divergence_residual),
            format!("{:.3}", l.seconds),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn emit_json(result: &StudyResult) -> Result<String> {
    let mut s = serde_json::to_string_pretty(result)?;
    s.push('\n');
    Ok(s)
}

pub fn emit(result: &StudyResult, format: Format) -> Result<String> {
    match format {
        Format::Markdown => Ok(emit_markdown(result)),
        Format::Csv => emit_csv(result),
        Format::Json => emit_json(result),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_format() {
        assert_eq!(format_error(0.3051e-3), "0.3051E-03");
        assert_eq!(format_error(0.2970), "0.2970E+00");
        assert_eq!(format_error(1.0), "0.1000E+01");
        assert_eq!(format_error(0.0), "0.0000E+00");
        assert_eq!(format_error(9.99996e-5), "0.1000E-03");
    }

    #[test]
    fn parse_inputs() {
        assert_eq!(parse_levels("3..6").unwrap(), [3, 6]);
        assert_eq!(parse_levels("4").unwrap(), [4, 4]);
        assert!(parse_levels("a..b").is_err());
        assert_eq!("polygon".parse::<GridSpec>().unwrap(), GridSpec::Family(GridKind::Polygon));
        assert_eq!(
            "file:m{level}.json".parse::<GridSpec>().unwrap(),
            GridSpec::File("m{level}.json".into())
        );
        assert!("hex".parse::<GridSpec>().is_err());
        assert!("yaml".parse::<Format>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = StudyConfig::new(5, GridSpec::Family(GridKind::Square), [1, 2], "s1");
        assert!(c.validate().is_err());
        c.k = 1;
        c.levels = [3, 2];
        assert!(c.validate().is_err());
        c.levels = [1, 2];
        assert!(c.validate().is_ok());
    }

    #[test]
    fn linear_case_reports_exact_rates() {
        let c = StudyConfig::new(0, GridSpec::Family(GridKind::Quad), [1, 2], "linear");
        let r = run_study(&c).unwrap();
        let rates = r.report.last_rates().unwrap();
        assert_eq!(rates.velocity_l2, Rate::Exact);
        assert_eq!(rates.pressure_l2, Rate::Exact);
        let md = emit_markdown(&r);
        assert!(md.contains("exact"));
    }

    #[test]
    fn csv_has_constant_field_count() {
        let c = StudyConfig::new(0, GridSpec::Family(GridKind::Square), [1, 3], "s1");
        let r = run_study(&c).unwrap();
        let text = emit_csv(&r).unwrap();
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let n = rd.headers().unwrap().len();
        assert_eq!(n, CSV_HEADER.len());
        let rows: Vec<_> = rd.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.len() == n));
    }

    #[test]
    fn json_round_trips() {
        let mut c = StudyConfig::new(1, GridSpec::Family(GridKind::Polygon), [2, 3], "s1");
        c.diagnostics = true;
        let r = run_study(&c).unwrap();
        let text = emit_json(&r).unwrap();
        let back: StudyResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back.report.levels.len(), 2);
        assert_eq!(back.config.grid, c.grid);
        assert!(back.diagnostics.unwrap()[0].infsup.unwrap() > 0.0);
    }
}
