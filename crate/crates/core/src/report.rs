//! Batch pipeline: configuration, all residual checks and detectors, and the
//! machine-readable report.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::detect::{self, Check, DetectionReport, Verdict};
use crate::error::{Error, Result};
use crate::fcq::{self, ConservationRow, FcqSeries, IndexedResidual, ParallelismRow, RSeries};
use crate::fields::{GridSpec, ScalarField, DEFAULT_N};
use crate::frame::{self, FrameBundle, StructureResiduals, SurfaceKind, SurfaceSpec};
use crate::json;
use crate::profiles::{self, ProfileSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub kind: SurfaceKind,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub profile: ProfileSpec,
}

/// Per-family thresholds; unset entries fall back to [`Tolerances::defaults`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conservation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_pairing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detect: Option<f64>,
}

/// Fully resolved thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedTolerances {
    pub gram: f64,
    pub structure: f64,
    pub conservation: f64,
    pub parallelism: f64,
    pub consistency: f64,
    pub eta_pairing: f64,
    pub detect: f64,
}

impl Tolerances {
    pub fn defaults(sampled: bool) -> ResolvedTolerances {
        if sampled {
            ResolvedTolerances {
                gram: 1e-10,
                structure: 1e-3,
                conservation: 1e-6,
                parallelism: 1e-3,
                consistency: 1e-3,
                eta_pairing: 1e-3,
                detect: detect::SAMPLED_TOL,
            }
        } else {
            ResolvedTolerances {
                gram: 1e-10,
                structure: 1e-7,
                conservation: 1e-8,
                parallelism: 1e-7,
                consistency: 1e-6,
                eta_pairing: 1e-7,
                detect: detect::ANALYTIC_TOL,
            }
        }
    }

    pub fn resolve(&self, sampled: bool) -> ResolvedTolerances {
        let d = Self::defaults(sampled);
        ResolvedTolerances {
            gram: self.gram.unwrap_or(d.gram),
            structure: self.structure.unwrap_or(d.structure),
            conservation: self.conservation.unwrap_or(d.conservation),
            parallelism: self.parallelism.unwrap_or(d.parallelism),
            consistency: self.consistency.unwrap_or(d.consistency),
            eta_pairing: self.eta_pairing.unwrap_or(d.eta_pairing),
            detect: self.detect.unwrap_or(d.detect),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Derived scalar fields to export besides the series coefficients.
    #[serde(default = "default_fields")]
    pub fields: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            fields: default_fields(),
        }
    }
}

fn default_fields() -> Vec<String> {
    ["curvature", "schwarzian", "hopf"].map(String::from).to_vec()
}

fn default_depth() -> usize {
    4
}

fn default_grid() -> GridSpec {
    GridSpec {
        n: DEFAULT_N,
        u_min: 0.0,
        u_max: 1.0,
        periodic: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub surface: SurfaceConfig,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default)]
    pub r: RSeries,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Restricts the checks of a command; absent means all of them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<String>>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported schema {} (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        self.grid.validate()?;
        self.r.validate()?;
        self.surface_spec().validate()?;
        if self.depth == 0 {
            return Err(Error::InvalidDepth(0));
        }
        if let Some(names) = &self.checks {
            for name in names {
                if !is_known_check(name) {
                    return Err(Error::InvalidConfig(format!("unknown check `{name}`")));
                }
            }
        }
        for name in &self.output.fields {
            if !DERIVED_FIELDS.contains(&name.as_str()) {
                return Err(Error::InvalidConfig(format!("unknown field `{name}`")));
            }
        }
        Ok(())
    }

    pub fn surface_spec(&self) -> SurfaceSpec {
        SurfaceSpec {
            kind: self.surface.kind,
            c: self.surface.c,
            profile: self.surface.profile.clone(),
            grid: self.grid,
        }
    }
}

pub const FRAME_CHECKS: [&str; 4] = ["gram", "structure", "eta_forms", "closedness"];
pub const SERIES_CHECKS: [&str; 4] = ["conservation", "parallelism", "consistency", "eta_pairing"];
pub const PROFILE_CHECKS: [&str; 4] = ["cmc", "musso_nicolodi", "type2_conformal", "profile_ode"];
pub const DERIVED_FIELDS: [&str; 4] = ["curvature", "schwarzian", "hopf", "musso_nicolodi"];

/// `typeN` for a positive `N`.
fn type_check_degree(name: &str) -> Option<usize> {
    name.strip_prefix("type")?.parse().ok().filter(|&d| d > 0)
}

pub fn is_known_check(name: &str) -> bool {
    FRAME_CHECKS.contains(&name)
        || SERIES_CHECKS.contains(&name)
        || PROFILE_CHECKS.contains(&name)
        || type_check_degree(name).is_some()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    FrameCheck,
    Fcq,
    Detect,
    Report,
}

impl Command {
    fn default_checks(self, depth: usize) -> Vec<String> {
        let types = (1..depth).map(|d| format!("type{d}"));
        let mut out: Vec<String> = Vec::new();
        if matches!(self, Command::FrameCheck | Command::Report) {
            out.extend(FRAME_CHECKS.map(String::from));
        }
        if matches!(self, Command::Fcq | Command::Report) {
            out.extend(SERIES_CHECKS.map(String::from));
        }
        if matches!(self, Command::Detect | Command::Report) {
            out.extend(PROFILE_CHECKS.map(String::from));
            out.extend(types);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameSection {
    pub drift: f64,
    pub gram_deviation: f64,
    pub structure: StructureResiduals,
    pub eta_form_mismatch: f64,
    pub closedness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingRow {
    pub i: i32,
    pub j: i32,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSection {
    pub depth: usize,
    pub r: Vec<f64>,
    pub conservation: Vec<ConservationRow>,
    pub parallelism: Vec<ParallelismRow>,
    pub consistency: Vec<IndexedResidual>,
    pub eta_pairing: Vec<PairingRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: Command,
    pub surface: SurfaceConfig,
    pub grid: GridSpec,
    pub depth: usize,
    pub sampled: bool,
    pub tolerances: ResolvedTolerances,
    pub requested: Vec<String>,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<FrameSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionReport>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        json::to_json_string(self)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.check == name)
    }
}

/// Fail dominates inconclusive, which dominates pass.
pub fn overall_verdict<'a>(checks: impl IntoIterator<Item = &'a Check>) -> Verdict {
    let mut out = Verdict::Pass;
    for c in checks {
        match c.verdict {
            Verdict::Fail => return Verdict::Fail,
            Verdict::Inconclusive => out = Verdict::Inconclusive,
            Verdict::Pass => {}
        }
    }
    out
}

pub struct RunOutput {
    pub report: Report,
    pub frame: Arc<FrameBundle>,
    pub series: Option<FcqSeries>,
}

fn rel(x: f64, scale: f64) -> f64 {
    x / scale.abs().max(1.0)
}

pub fn run(cfg: &RunConfig, command: Command) -> Result<RunOutput> {
    cfg.validate()?;
    let spec = cfg.surface_spec();
    let fb = Arc::new(frame::build_frame(&spec)?);
    let sampled = fb.is_sampled();
    let tol = cfg.tolerances.resolve(sampled);

    let mut requested = command.default_checks(cfg.depth);
    if let Some(only) = &cfg.checks {
        let allowed: Vec<String> = if command == Command::Report {
            only.clone()
        } else {
            requested.iter().filter(|c| only.contains(c)).cloned().collect()
        };
        requested = allowed;
    }
    let wants = |name: &str| requested.iter().any(|c| c == name);
    let wants_any = |names: &[&str]| names.iter().any(|n| wants(n));
    let max_type = requested.iter().filter_map(|c| type_check_degree(c)).max();

    let mut checks = Vec::new();
    let mut frame_section = None;
    if wants_any(&FRAME_CHECKS) {
        let structure = frame::structure_residuals(&fb)?;
        let section = FrameSection {
            drift: fb.drift,
            gram_deviation: fb.gram_deviation(),
            structure,
            eta_form_mismatch: fb.eta_form_mismatch()?,
            closedness: fb.closedness_residual()?,
        };
        if wants("gram") {
            checks.push(Check::new("gram", section.gram_deviation, tol.gram));
        }
        if wants("structure") {
            checks.push(Check::new("structure", structure.max(), tol.structure));
        }
        if wants("eta_forms") {
            checks.push(Check::new("eta_forms", section.eta_form_mismatch, tol.gram));
        }
        if wants("closedness") {
            checks.push(Check::new("closedness", section.closedness, tol.structure));
        }
        frame_section = Some(section);
    }

    let need_depth = max_type.map_or(0, |d| d + 1);
    let depth = cfg.depth.max(need_depth);
    let need_series = wants_any(&SERIES_CHECKS) || max_type.is_some();
    let series = if need_series {
        Some(fcq::extend(fb.clone(), &cfg.r, depth)?)
    } else {
        None
    };

    let mut series_section = None;
    if let (Some(s), true) = (&series, wants_any(&SERIES_CHECKS)) {
        let conservation = s.conservation_residual()?;
        let parallelism = s.parallelism_residual()?;
        let consistency = s.consistency_q_residual()?;
        let lowest = -(s.depth().min(4) as i32);
        let mut eta_pairing = Vec::new();
        for i in lowest..=0 {
            for j in lowest..=0 {
                eta_pairing.push(PairingRow {
                    i,
                    j,
                    deviation: s.eta_pairing_identity(i, j)?,
                });
            }
        }
        if wants("conservation") {
            let worst = conservation
                .iter()
                .map(|r| r.deviation.max(rel(r.offset, s.r().get(r.m))))
                .fold(0.0, f64::max);
            checks.push(Check::new("conservation", worst, tol.conservation));
        }
        if wants("parallelism") {
            let worst = parallelism.iter().map(|r| r.u.max(r.v)).fold(0.0, f64::max);
            checks.push(Check::new("parallelism", worst, tol.parallelism));
        }
        if wants("consistency") {
            let worst = consistency.iter().map(|r| r.residual).fold(0.0, f64::max);
            checks.push(Check::new("consistency", worst, tol.consistency));
        }
        if wants("eta_pairing") {
            let worst = eta_pairing.iter().map(|r| r.deviation).fold(0.0, f64::max);
            checks.push(Check::new("eta_pairing", worst, tol.eta_pairing));
        }
        series_section = Some(SeriesSection {
            depth: s.depth(),
            r: s.r().coefficients().to_vec(),
            conservation,
            parallelism,
            consistency,
            eta_pairing,
        });
    }

    let mut detection = None;
    if wants_any(&PROFILE_CHECKS) || max_type.is_some() {
        let report = match &series {
            Some(s) => detect::detect(s, tol.detect)?,
            None => profile_only_detection(&fb, tol.detect)?,
        };
        for name in PROFILE_CHECKS {
            if !wants(name) {
                continue;
            }
            if name == "profile_ode" {
                checks.extend(
                    report
                        .checks
                        .iter()
                        .filter(|c| c.check.contains("profile_ode") || c.check.contains("e_v_infinity"))
                        .cloned(),
                );
            } else if let Some(c) = report.check(name) {
                checks.push(c.clone());
            }
        }
        for name in &requested {
            if let Some(d) = type_check_degree(name) {
                if let Some(c) = report.check(&format!("type{d}_shift")) {
                    let mut c = c.clone();
                    c.check = name.clone();
                    checks.push(c);
                }
            }
        }
        detection = Some(report);
    }

    let report = Report {
        schema: SCHEMA_VERSION,
        command,
        surface: cfg.surface.clone(),
        grid: cfg.grid,
        depth,
        sampled,
        tolerances: tol,
        verdict: overall_verdict(&checks),
        requested,
        checks,
        frame: frame_section,
        series: series_section,
        detection,
    };
    Ok(RunOutput {
        report,
        frame: fb,
        series,
    })
}

fn profile_only_detection(fb: &FrameBundle, tol: f64) -> Result<DetectionReport> {
    let mut checks = vec![detect::cmc_test(fb, tol)?, detect::musso_nicolodi_test(fb, tol)?];
    if !fb.curvature.is_analytic() || fb.curvature.jet_order() >= 4 {
        checks.push(detect::type2_conformal_test(fb, tol)?);
        checks.extend(detect::profile_ode_tests(fb, tol)?);
    }
    Ok(DetectionReport {
        checks,
        types: Vec::new(),
        minimal_type: None,
        location: None,
    })
}

pub fn derived_field(fb: &FrameBundle, name: &str) -> Result<ScalarField> {
    match name {
        "curvature" => Ok(fb.curvature.clone()),
        "schwarzian" => Ok(fb.schwarzian.clone()),
        "hopf" => Ok(fb.hopf.clone()),
        "musso_nicolodi" => detect::musso_nicolodi_field(fb),
        other => Err(Error::InvalidConfig(format!("unknown field `{other}`"))),
    }
}

impl RunOutput {
    /// `report.json` plus `fields/*.csv` under `dir`.
    pub fn write_to(&self, dir: &Path, fields: &[String]) -> Result<()> {
        let field_dir = dir.join("fields");
        fs::create_dir_all(&field_dir)?;
        fs::write(dir.join("report.json"), self.report.to_json()?)?;
        for name in fields {
            let f = derived_field(&self.frame, name)?;
            f.write_csv(BufWriter::new(File::create(field_dir.join(format!("{name}.csv")))?))?;
        }
        if let Some(s) = &self.series {
            for n in 0..=s.depth() {
                let path = field_dir.join(format!("coefficient_m{n}.csv"));
                s.write_coefficient_csv(-(n as i32), BufWriter::new(File::create(path)?))?;
            }
        }
        if let ProfileSpec::Samples { .. } = self.report.surface.profile {
            let path = field_dir.join("profile_samples.csv");
            profiles::write_samples_csv(&self.frame.curvature, BufWriter::new(File::create(path)?))?;
        }
        Ok(())
    }
}
