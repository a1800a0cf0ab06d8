//! Commands behind the `toric` binary. Each command returns a serializable
//! report together with the process status it maps to.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use toric_extremal::extremal::{
    boundary_barycenter, extremal_affine, futaki_cone, futaki_form, futaki_l_relation, AffineFunction, FutakiCone,
    FutakiForm, FutakiLRelation,
};
use toric_extremal::metrics::{
    check_boundary_with, check_positivity, formal_solve, parts_identity_check, solve_extremal_1d, BoundaryCert,
    Extremal1d, MatrixField, PolySym2, PositivityReport, TOL_BC, TOL_PD,
};
use toric_extremal::polytope::{cone_angles, ConeAngle};
use toric_extremal::quadrature::AdaptiveOptions;
use toric_extremal::stability::{
    crease_scan, refine, write_samples_csv, RefineResult, ScanOptions, StabilityReport, Verdict,
};
use toric_extremal::{LabelledPolytope, PolytopeSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Residual bound for the integration-by-parts identity.
pub const TOL_PARTS: f64 = 1e-5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error(transparent)]
    Geometry(#[from] toric_extremal::Error),
    #[error("{0}")]
    Usage(String),
}

/// Process status: the exit code contract of the binary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    Error = 1,
    Destabilized = 2,
}

pub struct Outcome {
    pub json: serde_json::Value,
    pub status: Status,
}

impl Outcome {
    fn new<T: Serialize>(report: &T, status: Status) -> Self {
        Self { json: serde_json::to_value(report).expect("reports serialize"), status }
    }
}

pub fn parse_spec(text: &str, path: &Path) -> Result<PolytopeSpec, CliError> {
    serde_json::from_str(text).map_err(|e| {
        let full = e.to_string();
        // serde_json appends its own position; it is reported separately
        let message = full.rsplit_once(" at line ").map_or(full.as_str(), |(m, _)| m).to_string();
        CliError::Parse { path: path.to_path_buf(), line: e.line(), column: e.column(), message }
    })
}

pub fn load_spec(path: &Path) -> Result<PolytopeSpec, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    parse_spec(&text, path)
}

fn load(path: &Path) -> Result<(PolytopeSpec, LabelledPolytope), CliError> {
    let spec = load_spec(path)?;
    let p = spec.build()?;
    Ok((spec, p))
}

#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    pub tol_geom: f64,
    pub tol_stab: f64,
    pub tol_bc: f64,
    pub tol_pd: f64,
    pub quadrature: f64,
}

impl Tolerances {
    fn of(p: &LabelledPolytope, tol_stab: f64, tol_bc: f64, quadrature: f64) -> Self {
        Self { tol_geom: p.tol_geom(), tol_stab, tol_bc, tol_pd: TOL_PD, quadrature }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PolytopeSummary {
    pub dim: usize,
    pub facets: usize,
    pub volume: f64,
    pub barycenter: Vec<f64>,
    pub boundary_barycenter: Vec<f64>,
    pub weights: Vec<f64>,
    /// The input, so the report can be re-analyzed.
    pub spec: PolytopeSpec,
}

impl PolytopeSummary {
    fn of(spec: &PolytopeSpec, p: &LabelledPolytope) -> Self {
        let sigma = p.boundary_measure();
        Self {
            dim: p.dim(),
            facets: p.num_facets(),
            volume: p.volume(),
            barycenter: p.barycenter(),
            boundary_barycenter: boundary_barycenter(p, &sigma),
            weights: sigma.weights,
            spec: spec.clone(),
        }
    }
}

/// Scan settings shared by `analyze` and `stability`.
#[derive(Clone, Debug)]
pub struct ScanSettings {
    pub directions: Option<usize>,
    pub offsets: Option<usize>,
    pub basepoint: Option<Vec<f64>>,
    pub tol_stab: Option<f64>,
}

impl ScanSettings {
    fn options(&self, spec: &PolytopeSpec, dim: usize) -> ScanOptions {
        let mut o = ScanOptions::for_dim(dim);
        if let Some(d) = self.directions {
            o.directions = d;
        }
        if let Some(k) = self.offsets {
            o.offsets = k;
        }
        if let Some(t) = self.tol_stab {
            o.tol_stab = t;
        }
        o.basepoint = self.basepoint.clone().or_else(|| spec.basepoint.clone());
        o
    }
}

fn verdict_status(v: Verdict) -> Status {
    match v {
        Verdict::Destabilized => Status::Destabilized,
        Verdict::PositiveOnSample => Status::Pass,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GuilleminReport {
    pub boundary: BoundaryCert,
    pub positivity: PositivityReport,
    /// `|∫ S(H) f dx - 2 ∫_{∂P} f σ|` for `f = 1, x_1, ..., x_n`.
    pub parts_identity: Vec<f64>,
    pub tol_parts: f64,
    pub pass: bool,
}

fn guillemin_report(p: &LabelledPolytope, tol_bc: f64, quad_tol: f64) -> Result<GuilleminReport, CliError> {
    let h = MatrixField::guillemin(p);
    let sigma = p.boundary_measure();
    let boundary = check_boundary_with(&h, p, &sigma, 64, tol_bc);
    let positivity = check_positivity(&h, p, 24);
    let parts_identity = parts_identity_check(&h, p, &sigma, &AdaptiveOptions::graded(quad_tol))?;
    let pass = boundary.pass && positivity.pass && parts_identity.iter().all(|&r| r <= TOL_PARTS);
    Ok(GuilleminReport { boundary, positivity, parts_identity, tol_parts: TOL_PARTS, pass })
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub version: String,
    pub polytope: PolytopeSummary,
    pub zeta: AffineFunction,
    /// `Fut(1), Fut(x_1), ..., Fut(x_n)`.
    pub futaki: FutakiForm,
    pub futaki_l: FutakiLRelation,
    /// Per-vertex Delzant condition, when a lattice is given.
    pub delzant: Option<Vec<bool>>,
    pub stability: StabilityReport,
    pub guillemin: Option<GuilleminReport>,
    pub tolerances: Tolerances,
}

pub fn analyze(
    path: &Path,
    scan: &ScanSettings,
    certify: bool,
    tol_bc: f64,
    quad_tol: f64,
) -> Result<Outcome, CliError> {
    let (spec, p) = load(path)?;
    let sigma = p.boundary_measure();
    let opts = scan.options(&spec, p.dim());
    let (stability, _) = crease_scan(&p, &sigma, &opts)?;
    let delzant = match spec.lattice() {
        Some(l) => Some(p.check_delzant(&l)?),
        None => None,
    };
    let report = AnalysisReport {
        version: VERSION.into(),
        polytope: PolytopeSummary::of(&spec, &p),
        zeta: extremal_affine(&p, &sigma)?,
        futaki: futaki_form(&p),
        futaki_l: futaki_l_relation(&p)?,
        delzant,
        guillemin: if certify { Some(guillemin_report(&p, tol_bc, quad_tol)?) } else { None },
        tolerances: Tolerances::of(&p, opts.tol_stab, tol_bc, quad_tol),
        stability,
    };
    let status = verdict_status(report.stability.verdict);
    Ok(Outcome::new(&report, status))
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityOutput {
    pub version: String,
    pub report: StabilityReport,
    pub refine: Option<RefineResult>,
    /// Verdict after refinement: a refined crease below `-tol_stab` also destabilizes.
    pub verdict: Verdict,
    pub csv: Option<PathBuf>,
    pub tolerances: Tolerances,
}

pub fn stability(
    path: &Path,
    scan: &ScanSettings,
    refine_iter: Option<usize>,
    csv: Option<&Path>,
) -> Result<Outcome, CliError> {
    let (spec, p) = load(path)?;
    let sigma = p.boundary_measure();
    let opts = scan.options(&spec, p.dim());
    let (report, samples) = crease_scan(&p, &sigma, &opts)?;
    if let Some(out) = csv {
        let file =
            fs::File::create(out).map_err(|e| CliError::Io { path: out.to_path_buf(), message: e.to_string() })?;
        write_samples_csv(&samples, file)?;
    }
    let refined = match refine_iter {
        Some(n) => Some(refine(&p, &sigma, &report, None, n)?),
        None => None,
    };
    let verdict = match &refined {
        Some(r) if r.ratio < -opts.tol_stab => Verdict::Destabilized,
        _ => report.verdict,
    };
    let out = StabilityOutput {
        version: VERSION.into(),
        tolerances: Tolerances::of(&p, opts.tol_stab, TOL_BC, 0.0),
        report,
        refine: refined,
        verdict,
        csv: csv.map(Path::to_path_buf),
    };
    Ok(Outcome::new(&out, verdict_status(verdict)))
}

#[derive(Clone, Debug, Serialize)]
pub struct FutakiConeOutput {
    pub version: String,
    pub cone: FutakiCone,
    /// Labels divided by the interior point.
    pub rescaled: PolytopeSpec,
    pub rescaled_futaki_max: f64,
}

pub fn futaki_cone_cmd(path: &Path) -> Result<Outcome, CliError> {
    let (_, p) = load(path)?;
    let cone = futaki_cone(&p)?;
    let q = cone.rescaled(&p)?;
    let out = FutakiConeOutput {
        version: VERSION.into(),
        rescaled_futaki_max: futaki_form(&q).max_abs(),
        rescaled: q.spec(),
        cone,
    };
    Ok(Outcome::new(&out, Status::Pass))
}

#[derive(Clone, Debug, Serialize)]
pub struct Solve1dOutput {
    pub version: String,
    pub solution: Extremal1d,
    pub boundary: BoundaryCert,
    pub positivity: PositivityReport,
}

pub fn solve1d(alpha: f64, beta: f64, a_left: f64, a_right: f64) -> Result<Outcome, CliError> {
    let solution = solve_extremal_1d(alpha, beta, a_left, a_right)?;
    let p = toric_extremal::polytope::shapes::interval(alpha, beta, a_left, a_right);
    let h = solution.field();
    let out = Solve1dOutput {
        version: VERSION.into(),
        boundary: check_boundary_with(&h, &p, &p.boundary_measure(), 64, TOL_BC),
        positivity: check_positivity(&h, &p, 10_000),
        solution,
    };
    Ok(Outcome::new(&out, Status::Pass))
}

#[derive(Clone, Debug, Serialize)]
pub struct GuilleminOutput {
    pub version: String,
    pub check: GuilleminReport,
    pub tolerances: Tolerances,
}

/// A failed certificate is reported with status `Error`.
pub fn guillemin_check(path: &Path, tol_bc: f64, quad_tol: f64) -> Result<Outcome, CliError> {
    let (_, p) = load(path)?;
    let check = guillemin_report(&p, tol_bc, quad_tol)?;
    let status = if check.pass { Status::Pass } else { Status::Error };
    let out = GuilleminOutput { version: VERSION.into(), tolerances: Tolerances::of(&p, 0.0, tol_bc, quad_tol), check };
    Ok(Outcome::new(&out, status))
}

#[derive(Clone, Debug, Serialize)]
pub struct FormalOutput {
    pub version: String,
    pub degree: u32,
    pub residual: f64,
    pub condition_number: f64,
    pub coefficients: Vec<f64>,
    /// `H = H_G + b² Q`.
    pub q: PolySym2,
    pub boundary: BoundaryCert,
    pub positivity: PositivityReport,
}

pub fn formal_solve_cmd(path: &Path, degree: u32) -> Result<Outcome, CliError> {
    let (_, p) = load(path)?;
    let sol = formal_solve(&p, &p.boundary_measure(), degree)?;
    let positivity = check_positivity(&sol.field, &sol.polytope, 24);
    let out = FormalOutput {
        version: VERSION.into(),
        degree,
        residual: sol.residual,
        condition_number: sol.condition_number,
        coefficients: sol.coefficients,
        q: sol.q,
        boundary: sol.boundary,
        positivity,
    };
    Ok(Outcome::new(&out, Status::Pass))
}

#[derive(Clone, Debug, Serialize)]
pub struct AnglesOutput {
    pub version: String,
    pub angles: Vec<ConeAngle>,
}

pub fn angles(path: &Path, reference: &Path) -> Result<Outcome, CliError> {
    let (_, p) = load(path)?;
    let (_, r) = load(reference)?;
    let out = AnglesOutput { version: VERSION.into(), angles: cone_angles(&r, &p)? };
    Ok(Outcome::new(&out, Status::Pass))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_error_reports_position_once() {
        let text = "{\n  \"dim\": 1,\n  \"halfspaces\": [\n    {\"normal\": [1.0]}\n  ]\n}";
        let e = parse_spec(text, Path::new("p.json")).unwrap_err();
        let CliError::Parse { line, message, .. } = &e else { panic!("{e}") };
        assert_eq!(*line, 4);
        assert!(message.contains("offset") && !message.contains("at line"), "{message}");
        assert_eq!(e.to_string().matches("line").count(), 1);
    }

    #[test]
    fn scan_settings_override_spec_basepoint() {
        let spec = parse_spec(r#"{"dim":1,"halfspaces":[{"normal":[1.0],"offset":0.0},{"normal":[-1.0],"offset":1.0}],"basepoint":[0.25]}"#, Path::new("p"))
            .unwrap();
        let mut s = ScanSettings { directions: None, offsets: Some(7), basepoint: None, tol_stab: None };
        let o = s.options(&spec, 1);
        assert_eq!((o.offsets, o.basepoint.clone()), (7, Some(vec![0.25])));
        s.basepoint = Some(vec![0.5]);
        assert_eq!(s.options(&spec, 1).basepoint, Some(vec![0.5]));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(verdict_status(Verdict::Destabilized) as u8, 2);
        assert_eq!(verdict_status(Verdict::PositiveOnSample) as u8, 0);
        assert_eq!(Status::Error as u8, 1);
    }
}
