//! Scenario files, tolerance settings and whole-scenario validation.

use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::expr::{Env, ExprError, ScalarExpr};
use super::geometry::{BoundaryCurve, DomainSpec, Point};

pub const MIN_CURVE_SAMPLES: usize = 4096;
pub const OPERATOR_SAMPLES: usize = 256;
/// Smallest accepted ratio between the narrowest and widest radial gap.
pub const MIN_GAP_RATIO: f64 = 0.05;

/// An expression given either as text or as a bare number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExprSource {
    Number(f64),
    Text(String),
}

impl ExprSource {
    pub fn text(s: &str) -> ExprSource {
        ExprSource::Text(s.to_string())
    }

    fn parse(&self) -> Result<ScalarExpr, ExprError> {
        match self {
            ExprSource::Number(v) => Ok(ScalarExpr::constant(*v)),
            ExprSource::Text(s) => ScalarExpr::parse(s),
        }
    }
}

impl fmt::Display for ExprSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprSource::Number(v) => write!(f, "{v}"),
            ExprSource::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCurve {
    pub radius: ExprSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDomain {
    #[serde(default)]
    pub interior: Option<RawCurve>,
    pub exterior: RawCurve,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    MIN_CURVE_SAMPLES
}

fn one() -> ExprSource {
    ExprSource::Number(1.0)
}

fn zero() -> ExprSource {
    ExprSource::Number(0.0)
}

fn default_lambda0() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawOperator {
    #[serde(default = "one")]
    pub a11: ExprSource,
    #[serde(default = "zero")]
    pub a12: ExprSource,
    #[serde(default = "one")]
    pub a22: ExprSource,
    #[serde(default = "zero")]
    pub b1: ExprSource,
    #[serde(default = "zero")]
    pub b2: ExprSource,
    #[serde(default)]
    pub c: Option<ExprSource>,
    #[serde(default = "default_lambda0")]
    pub lambda0: f64,
}

impl Default for RawOperator {
    fn default() -> Self {
        RawOperator {
            a11: one(),
            a12: zero(),
            a22: one(),
            b1: zero(),
            b2: zero(),
            c: None,
            lambda0: default_lambda0(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawBoundary {
    #[serde(default)]
    pub interior: Option<ExprSource>,
    pub exterior: ExprSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_theta: usize,
    pub n_s: usize,
}

impl GridSpec {
    pub fn refined(self) -> GridSpec {
        GridSpec {
            n_theta: self.n_theta * 2,
            n_s: self.n_s * 2,
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n_theta, self.n_s)
    }
}

/// Numerical thresholds. `None` entries are derived from the solved field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceSet {
    pub grad_zero_tol: Option<f64>,
    pub value_zero_tol: Option<f64>,
    pub dedup_radius: Option<f64>,
    pub equal_extrema_tol: f64,
    pub linear_residual_tol: f64,
    pub interior_margin: f64,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        ToleranceSet {
            grad_zero_tol: None,
            value_zero_tol: None,
            dedup_radius: None,
            equal_extrema_tol: 1e-4,
            linear_residual_tol: 1e-10,
            interior_margin: 0.05,
        }
    }
}

/// Scenario exactly as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawScenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub domain: RawDomain,
    #[serde(default)]
    pub operator: RawOperator,
    pub boundary: RawBoundary,
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: ToleranceSet,
    #[serde(default)]
    pub reference: Option<ExprSource>,
}

impl RawScenario {
    /// Laplace problem on the annulus between two polar curves.
    pub fn annulus(r_i: &str, r_e: &str, psi_i: &str, psi_e: &str, grid: GridSpec) -> RawScenario {
        RawScenario {
            name: String::new(),
            description: String::new(),
            domain: RawDomain {
                interior: Some(RawCurve {
                    radius: ExprSource::text(r_i),
                }),
                exterior: RawCurve {
                    radius: ExprSource::text(r_e),
                },
                samples: MIN_CURVE_SAMPLES,
            },
            operator: RawOperator::default(),
            boundary: RawBoundary {
                interior: Some(ExprSource::text(psi_i)),
                exterior: ExprSource::text(psi_e),
            },
            grid,
            tolerances: ToleranceSet::default(),
            reference: None,
        }
    }

    /// Laplace problem on the region inside one polar curve.
    pub fn disk(r_e: &str, psi_e: &str, grid: GridSpec) -> RawScenario {
        let mut raw = RawScenario::annulus("1", r_e, "0", psi_e, grid);
        raw.domain.interior = None;
        raw.boundary.interior = None;
        raw
    }
}

#[derive(Debug, Clone)]
pub struct EllipticOperator {
    pub a11: ScalarExpr,
    pub a12: ScalarExpr,
    pub a22: ScalarExpr,
    pub b1: ScalarExpr,
    pub b2: ScalarExpr,
    pub c: Option<ScalarExpr>,
    pub lambda0: f64,
}

/// Coefficient values at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
    pub b1: f64,
    pub b2: f64,
    pub c: f64,
}

impl EllipticOperator {
    pub fn laplace() -> EllipticOperator {
        EllipticOperator {
            a11: ScalarExpr::constant(1.0),
            a12: ScalarExpr::constant(0.0),
            a22: ScalarExpr::constant(1.0),
            b1: ScalarExpr::constant(0.0),
            b2: ScalarExpr::constant(0.0),
            c: None,
            lambda0: default_lambda0(),
        }
    }

    pub fn at(&self, p: Point) -> Coefficients {
        let env = Env::cartesian(p.x, p.y);
        let ev = |e: &ScalarExpr| e.eval(&env).unwrap_or(f64::NAN);
        Coefficients {
            a11: ev(&self.a11),
            a12: ev(&self.a12),
            a22: ev(&self.a22),
            b1: ev(&self.b1),
            b2: ev(&self.b2),
            c: self.c.as_ref().map_or(0.0, ev),
        }
    }

    /// No first-order and no zeroth-order terms.
    pub fn is_principal_only(&self) -> bool {
        let zero = |e: &ScalarExpr| e.is_constant() && e.eval_xy(0.0, 0.0) == Ok(0.0);
        zero(&self.b1) && zero(&self.b2) && self.c.as_ref().is_none_or(zero)
    }
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub name: String,
    pub description: String,
    pub domain: DomainSpec,
    pub operator: EllipticOperator,
    pub psi_interior: Option<ScalarExpr>,
    pub psi_exterior: ScalarExpr,
    pub grid: GridSpec,
    pub tolerances: ToleranceSet,
    pub reference: Option<ScalarExpr>,
    /// Hex SHA-256 of the scenario source text.
    pub fingerprint: String,
    pub raw: RawScenario,
}

impl ScenarioSpec {
    pub fn with_grid(&self, grid: GridSpec) -> ScenarioSpec {
        let mut out = self.clone();
        out.grid = grid;
        out.raw.grid = grid;
        out
    }

    /// Boundary value on the interior (`interior = true`) or exterior curve.
    pub fn boundary_value(&self, interior: bool, theta: f64) -> f64 {
        let (curve, psi) = if interior {
            match (&self.domain.interior, &self.psi_interior) {
                (Some(c), Some(p)) => (c, p),
                _ => return f64::NAN,
            }
        } else {
            (&self.domain.exterior, &self.psi_exterior)
        };
        let r = curve.radius(theta);
        psi.eval(&Env::polar(r, theta)).unwrap_or(f64::NAN)
    }

    pub fn reference_at(&self, p: Point) -> Option<f64> {
        self.reference
            .as_ref()
            .and_then(|e| e.eval(&Env::cartesian(p.x, p.y)).ok())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Parse,
    RadiusNotAngular,
    RadiusNonPositive,
    RadiusNotPeriodic,
    CurvesNotSeparated,
    GapTooUneven,
    NotElliptic,
    PositiveZerothOrder,
    NonFiniteCoefficient,
    NonFiniteBoundaryData,
    BoundaryDataMismatch,
    GridTooCoarse,
    BadTolerance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub field: String,
    pub message: String,
    pub witness: Option<Point>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)?;
        if let Some(w) = self.witness {
            write!(f, " at ({:.6}, {:.6})", w.x, w.y)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationErrors(pub Vec<Violation>);

impl ValidationErrors {
    pub fn has(&self, kind: ViolationKind) -> bool {
        self.0.iter().any(|v| v.kind == kind)
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(#[from] ValidationErrors),
}

fn fingerprint_of(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioSpec, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, ScenarioError> {
    let raw: RawScenario = serde_json::from_str(text)?;
    let mut spec = validate_scenario(&raw)?;
    spec.fingerprint = fingerprint_of(text);
    Ok(spec)
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, kind: ViolationKind, field: &str, message: String, witness: Option<Point>) {
        self.out.push(Violation {
            kind,
            field: field.to_string(),
            message,
            witness,
        });
    }

    fn expr(&mut self, field: &str, src: &ExprSource) -> Option<ScalarExpr> {
        match src.parse() {
            Ok(e) => Some(e),
            Err(err) => {
                self.push(ViolationKind::Parse, field, err.to_string(), None);
                None
            }
        }
    }

    fn curve(&mut self, field: &str, raw: &RawCurve, samples: usize) -> Option<(BoundaryCurve, f64, f64)> {
        let e = self.expr(field, &raw.radius)?;
        if !e.depends_only_on_theta() {
            self.push(
                ViolationKind::RadiusNotAngular,
                field,
                "radius may depend on theta only".into(),
                None,
            );
            return None;
        }
        let curve = BoundaryCurve::new(e, samples);
        let mut rmin = f64::INFINITY;
        let mut rmax = 0.0f64;
        let mut bad = None;
        for k in 0..samples {
            let t = TAU * k as f64 / samples as f64;
            let r = curve.radius(t);
            if !(r.is_finite() && r > 0.0) {
                if bad.is_none() {
                    bad = Some((t, r));
                }
                continue;
            }
            rmin = rmin.min(r);
            rmax = rmax.max(r);
        }
        if let Some((t, r)) = bad {
            let w = if r.is_finite() { curve.point(t) } else { Point::new(t.cos(), t.sin()) };
            self.push(
                ViolationKind::RadiusNonPositive,
                field,
                format!("radius must be finite and positive, got {r} at theta={t:.6}"),
                Some(w),
            );
            return None;
        }
        let r0 = curve.radius(0.0);
        let r1 = curve.radius(TAU);
        if (r0 - r1).abs() > 1e-12 * rmax {
            self.push(
                ViolationKind::RadiusNotPeriodic,
                field,
                format!("r(0)={r0} differs from r(2pi)={r1}"),
                Some(curve.point(0.0)),
            );
        }
        Some((curve, rmin, rmax))
    }
}

/// Checks every scenario invariant and returns either the typed scenario or
/// the full list of violations.
pub fn validate_scenario(raw: &RawScenario) -> Result<ScenarioSpec, ValidationErrors> {
    let mut ck = Checker { out: Vec::new() };
    let samples = raw.domain.samples.max(MIN_CURVE_SAMPLES);

    let exterior = ck.curve("domain.exterior.radius", &raw.domain.exterior, samples);
    let interior = raw
        .domain
        .interior
        .as_ref()
        .map(|c| ck.curve("domain.interior.radius", c, samples));

    let mut domain = None;
    if let Some((ext, _, _)) = &exterior {
        match &interior {
            None => {
                domain = Some(DomainSpec {
                    interior: None,
                    exterior: ext.clone(),
                })
            }
            Some(Some((int, _, _))) => {
                let mut min_gap = f64::INFINITY;
                let mut max_gap = 0.0f64;
                let mut at = 0.0;
                for k in 0..samples {
                    let t = TAU * k as f64 / samples as f64;
                    let g = ext.radius(t) - int.radius(t);
                    if g < min_gap {
                        min_gap = g;
                        at = t;
                    }
                    max_gap = max_gap.max(g);
                }
                if min_gap <= 0.0 {
                    ck.push(
                        ViolationKind::CurvesNotSeparated,
                        "domain",
                        format!("exterior radius minus interior radius reaches {min_gap:.6}"),
                        Some(ext.point(at)),
                    );
                } else if min_gap / max_gap < MIN_GAP_RATIO {
                    ck.push(
                        ViolationKind::GapTooUneven,
                        "domain",
                        format!(
                            "curves nearly touch: min gap {min_gap:.6} is below {MIN_GAP_RATIO} of max gap {max_gap:.6}"
                        ),
                        Some(ext.point(at)),
                    );
                } else {
                    domain = Some(DomainSpec {
                        interior: Some(int.clone()),
                        exterior: ext.clone(),
                    });
                }
            }
            Some(None) => {}
        }
    }

    let op = &raw.operator;
    let a11 = ck.expr("operator.a11", &op.a11);
    let a12 = ck.expr("operator.a12", &op.a12);
    let a22 = ck.expr("operator.a22", &op.a22);
    let b1 = ck.expr("operator.b1", &op.b1);
    let b2 = ck.expr("operator.b2", &op.b2);
    let c = op.c.as_ref().map(|c| ck.expr("operator.c", c));
    if !(op.lambda0 > 0.0) {
        ck.push(
            ViolationKind::BadTolerance,
            "operator.lambda0",
            format!("ellipticity floor must be positive, got {}", op.lambda0),
            None,
        );
    }

    let psi_e = ck.expr("boundary.exterior", &raw.boundary.exterior);
    let psi_i = raw
        .boundary
        .interior
        .as_ref()
        .map(|p| ck.expr("boundary.interior", p));
    match (raw.domain.interior.is_some(), raw.boundary.interior.is_some()) {
        (true, false) => ck.push(
            ViolationKind::BoundaryDataMismatch,
            "boundary.interior",
            "annulus needs interior boundary data".into(),
            None,
        ),
        (false, true) => ck.push(
            ViolationKind::BoundaryDataMismatch,
            "boundary.interior",
            "simply connected domain takes exterior data only".into(),
            None,
        ),
        _ => {}
    }
    let reference = raw.reference.as_ref().and_then(|r| ck.expr("reference", r));

    if raw.grid.n_theta < 32 || raw.grid.n_s < 16 {
        ck.push(
            ViolationKind::GridTooCoarse,
            "grid",
            format!("need n_theta >= 32 and n_s >= 16, got {}", raw.grid),
            None,
        );
    }
    let tol = &raw.tolerances;
    let positive = [
        ("tolerances.grad_zero_tol", tol.grad_zero_tol),
        ("tolerances.value_zero_tol", tol.value_zero_tol),
        ("tolerances.dedup_radius", tol.dedup_radius),
        ("tolerances.equal_extrema_tol", Some(tol.equal_extrema_tol)),
        ("tolerances.linear_residual_tol", Some(tol.linear_residual_tol)),
    ];
    for (field, v) in positive {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                ck.push(
                    ViolationKind::BadTolerance,
                    field,
                    format!("must be positive, got {v}"),
                    None,
                );
            }
        }
    }
    if !(tol.interior_margin > 0.0 && tol.interior_margin <= 0.25) {
        ck.push(
            ViolationKind::BadTolerance,
            "tolerances.interior_margin",
            format!("must lie in (0, 0.25], got {}", tol.interior_margin),
            None,
        );
    }

    let (Some(domain), Some(a11), Some(a12), Some(a22), Some(b1), Some(b2), Some(psi_e)) =
        (domain, a11, a12, a22, b1, b2, psi_e)
    else {
        return Err(ValidationErrors(ck.out));
    };
    let Some(c) = c.map_or(Some(None), |c| c.map(Some)) else {
        return Err(ValidationErrors(ck.out));
    };
    let Some(psi_i) = psi_i.map_or(Some(None), |p| p.map(Some)) else {
        return Err(ValidationErrors(ck.out));
    };
    let operator = EllipticOperator {
        a11,
        a12,
        a22,
        b1,
        b2,
        c,
        lambda0: op.lambda0,
    };

    check_operator(&mut ck, &domain, &operator);
    check_boundary_data(&mut ck, &domain, psi_i.as_ref(), &psi_e, samples);

    if !ck.out.is_empty() {
        return Err(ValidationErrors(ck.out));
    }
    let canonical = serde_json::to_string(raw).unwrap_or_default();
    Ok(ScenarioSpec {
        name: raw.name.clone(),
        description: raw.description.clone(),
        domain,
        operator,
        psi_interior: psi_i,
        psi_exterior: psi_e,
        grid: raw.grid,
        tolerances: raw.tolerances,
        reference,
        fingerprint: fingerprint_of(&canonical),
        raw: raw.clone(),
    })
}

fn check_operator(ck: &mut Checker, domain: &DomainSpec, op: &EllipticOperator) {
    let n = OPERATOR_SAMPLES;
    let mut elliptic_bad: Option<(Point, f64, f64)> = None;
    let mut c_bad: Option<(Point, f64)> = None;
    let mut finite_bad: Option<Point> = None;
    for i in 0..n {
        let t = TAU * i as f64 / n as f64;
        for j in 0..n {
            let s = j as f64 / (n - 1) as f64;
            let p = domain.point(t, s);
            let k = op.at(p);
            let vals = [k.a11, k.a12, k.a22, k.b1, k.b2, k.c];
            if vals.iter().any(|v| !v.is_finite()) {
                finite_bad.get_or_insert(p);
                continue;
            }
            let det = k.a11 * k.a22 - k.a12 * k.a12;
            if (k.a11 <= 0.0 || det < op.lambda0) && elliptic_bad.is_none() {
                elliptic_bad = Some((p, k.a11, det));
            }
            if k.c > 0.0 && c_bad.is_none() {
                c_bad = Some((p, k.c));
            }
        }
    }
    if let Some(p) = finite_bad {
        ck.push(
            ViolationKind::NonFiniteCoefficient,
            "operator",
            "a coefficient is undefined or non-finite".into(),
            Some(p),
        );
    }
    if let Some((p, a11, det)) = elliptic_bad {
        ck.push(
            ViolationKind::NotElliptic,
            "operator",
            format!(
                "ellipticity violated: a11={a11}, a11*a22-a12^2={det} (floor {})",
                op.lambda0
            ),
            Some(p),
        );
    }
    if let Some((p, c)) = c_bad {
        ck.push(
            ViolationKind::PositiveZerothOrder,
            "operator.c",
            format!("zeroth-order coefficient must be <= 0, got {c}"),
            Some(p),
        );
    }
}

fn check_boundary_data(
    ck: &mut Checker,
    domain: &DomainSpec,
    psi_i: Option<&ScalarExpr>,
    psi_e: &ScalarExpr,
    samples: usize,
) {
    let mut check = |field: &str, curve: &BoundaryCurve, psi: &ScalarExpr| {
        for k in 0..samples {
            let t = TAU * k as f64 / samples as f64;
            let r = curve.radius(t);
            let v = psi.eval(&Env::polar(r, t));
            let ok = matches!(v, Ok(v) if v.is_finite());
            if !ok {
                let msg = match v {
                    Err(e) => e.to_string(),
                    Ok(v) => format!("value {v}"),
                };
                ck.push(
                    ViolationKind::NonFiniteBoundaryData,
                    field,
                    msg,
                    Some(curve.point(t)),
                );
                return;
            }
        }
    };
    check("boundary.exterior", &domain.exterior, psi_e);
    if let (Some(curve), Some(psi)) = (&domain.interior, psi_i) {
        check("boundary.interior", curve, psi);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn annulus(ri: &str, re: &str, psi_i: &str, psi_e: &str) -> RawScenario {
        let grid = GridSpec {
            n_theta: 64,
            n_s: 32,
        };
        RawScenario::annulus(ri, re, psi_i, psi_e, grid)
    }

    #[test]
    fn wavy_annulus_is_valid() {
        let raw = annulus("2+sin(3*theta)", "6+sin(4*theta)", "log(r)", "log(r)");
        assert!(validate_scenario(&raw).is_ok());
    }

    #[test]
    fn touching_wavy_curves_rejected() {
        let raw = annulus("2+sin(3*theta)", "4+sin(4*theta)", "log(r)", "log(r)");
        let err = validate_scenario(&raw).unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert!(err.0[0].witness.is_some());
    }

    #[test]
    fn equal_wavy_curves_shifted_are_valid() {
        let raw = annulus("3+sin(3*theta)", "4+sin(3*theta)", "log(r)", "log(r)");
        assert!(validate_scenario(&raw).is_ok());
    }

    #[test]
    fn crossing_curves_rejected() {
        let raw = annulus("2+sin(theta)", "2.5", "0", "1");
        let err = validate_scenario(&raw).unwrap_err();
        assert!(err.has(ViolationKind::CurvesNotSeparated));
    }

    #[test]
    fn non_elliptic_operator() {
        let mut raw = annulus("1", "2", "0", "1");
        raw.operator.a12 = ExprSource::Number(1.5);
        let err = validate_scenario(&raw).unwrap_err();
        assert!(err.has(ViolationKind::NotElliptic));
        assert!(err.0[0].message.contains("-1.25"), "{}", err.0[0].message);
    }

    #[test]
    fn positive_c_rejected() {
        let mut raw = annulus("1", "2", "0", "1");
        raw.operator.c = Some(ExprSource::text("0.5*x"));
        assert!(validate_scenario(&raw)
            .unwrap_err()
            .has(ViolationKind::PositiveZerothOrder));
    }

    #[test]
    fn all_violations_listed() {
        let mut raw = annulus("1", "x", "foo", "1");
        raw.grid.n_s = 4;
        raw.tolerances.interior_margin = 0.5;
        let err = validate_scenario(&raw).unwrap_err();
        assert!(err.has(ViolationKind::RadiusNotAngular));
        assert!(err.has(ViolationKind::Parse));
        assert!(err.has(ViolationKind::GridTooCoarse));
        assert!(err.has(ViolationKind::BadTolerance));
    }

    #[test]
    fn non_periodic_radius_rejected() {
        let raw = annulus("1", "2+theta/10", "0", "1");
        assert!(validate_scenario(&raw)
            .unwrap_err()
            .has(ViolationKind::RadiusNotPeriodic));
    }

    #[test]
    fn boundary_data_domain_error() {
        let raw = annulus("1", "2", "log(x)", "1");
        assert!(validate_scenario(&raw)
            .unwrap_err()
            .has(ViolationKind::NonFiniteBoundaryData));
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let text = r#"{
            "name": "disk",
            "domain": { "interior": null, "exterior": { "radius": 1 } },
            "boundary": { "exterior": "cos(2*theta)" },
            "grid": { "n_theta": 64, "n_s": 32 }
        }"#;
        let spec = parse_scenario(text).unwrap();
        assert!(spec.domain.is_disk());
        assert!(spec.operator.is_principal_only());
        assert_eq!(spec.tolerances, ToleranceSet::default());
        assert_eq!(spec.fingerprint.len(), 64);
        let again = parse_scenario(text).unwrap();
        assert_eq!(spec.fingerprint, again.fingerprint);
    }
}
