//! Scenario geometry, closed-form expressions and validation.

pub mod expr;
pub mod geometry;
pub mod scenario;

pub use expr::{evaluate_expr, parse_expression, DomainError, Env, ExprError, ScalarExpr, Var};
pub use geometry::{
    map_reference, wrap_angle, BoundaryCurve, DomainSpec, GeometryError, Jacobian, Point,
};
pub use scenario::{
    load_scenario, parse_scenario, validate_scenario, EllipticOperator, ExprSource, GridSpec,
    RawScenario, ScenarioError, ScenarioSpec, ToleranceSet, ValidationErrors, Violation,
    ViolationKind,
};
