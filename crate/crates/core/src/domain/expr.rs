//! Closed-form scalar fields over the plane.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          // right-associative
//! atom    := number | ident | ident '(' sum ')' | '(' sum ')'
//! ```
//!
//! Identifiers: variables `x`, `y`, `r`, `theta`; constants `pi`, `e`;
//! functions `sin cos tan exp log sqrt abs`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error: {function}({argument})")]
pub struct DomainError {
    pub function: &'static str,
    pub argument: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    R,
    Theta,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::R => "r",
            Var::Theta => "theta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A point together with its polar coordinates, so expressions never
/// recompute `r` and `theta` inconsistently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Env {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    pub theta: f64,
}

impl Env {
    pub fn cartesian(x: f64, y: f64) -> Env {
        Env {
            x,
            y,
            r: x.hypot(y),
            theta: y.atan2(x),
        }
    }

    pub fn polar(r: f64, theta: f64) -> Env {
        Env {
            x: r * theta.cos(),
            y: r * theta.sin(),
            r,
            theta,
        }
    }

    fn get(&self, v: Var) -> f64 {
        match v {
            Var::X => self.x,
            Var::Y => self.y,
            Var::R => self.r,
            Var::Theta => self.theta,
        }
    }
}

/// Parsed expression tree. Immutable; evaluation is a pure tree walk.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarExpr {
    root: Node,
}

impl ScalarExpr {
    pub fn parse(src: &str) -> Result<ScalarExpr, ExprError> {
        let mut p = Parser { src, pos: 0 };
        let root = p.sum()?;
        p.skip_ws();
        if p.pos < src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(ScalarExpr { root })
    }

    pub fn constant(value: f64) -> ScalarExpr {
        ScalarExpr {
            root: Node::Num(value),
        }
    }

    pub fn from_node(root: Node) -> ScalarExpr {
        ScalarExpr { root }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn eval(&self, env: &Env) -> Result<f64, DomainError> {
        eval_node(&self.root, env)
    }

    pub fn eval_xy(&self, x: f64, y: f64) -> Result<f64, DomainError> {
        self.eval(&Env::cartesian(x, y))
    }

    /// True when the tree references no variable.
    pub fn is_constant(&self) -> bool {
        !mentions(&self.root, &|_| true)
    }

    /// True when the tree references only `theta` (or nothing).
    pub fn depends_only_on_theta(&self) -> bool {
        !mentions(&self.root, &|v| v != Var::Theta)
    }

    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        collect_vars(&self.root, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// Symbolic derivative with respect to `var`, treating every other
    /// variable as independent. Meaningful for expressions in one variable.
    pub fn derivative(&self, var: Var) -> ScalarExpr {
        ScalarExpr {
            root: diff(&self.root, var),
        }
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

/// Parses `src` into an expression tree.
pub fn parse_expression(src: &str) -> Result<ScalarExpr, ExprError> {
    ScalarExpr::parse(src)
}

/// Evaluates `expr` at the Cartesian point `(x, y)`.
pub fn evaluate_expr(expr: &ScalarExpr, x: f64, y: f64) -> Result<f64, DomainError> {
    expr.eval_xy(x, y)
}

fn mentions(node: &Node, pred: &dyn Fn(Var) -> bool) -> bool {
    match node {
        Node::Num(_) => false,
        Node::Var(v) => pred(*v),
        Node::Neg(a) | Node::Call(_, a) => mentions(a, pred),
        Node::Bin(_, a, b) => mentions(a, pred) || mentions(b, pred),
    }
}

fn collect_vars(node: &Node, out: &mut Vec<Var>) {
    match node {
        Node::Num(_) => {}
        Node::Var(v) => out.push(*v),
        Node::Neg(a) | Node::Call(_, a) => collect_vars(a, out),
        Node::Bin(_, a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
    }
}

fn eval_node(node: &Node, env: &Env) -> Result<f64, DomainError> {
    Ok(match node {
        Node::Num(v) => *v,
        Node::Var(v) => env.get(*v),
        Node::Neg(a) => -eval_node(a, env)?,
        Node::Bin(op, a, b) => {
            let a = eval_node(a, env)?;
            let b = eval_node(b, env)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(DomainError {
                            function: "/",
                            argument: b,
                        });
                    }
                    a / b
                }
                BinOp::Pow => {
                    let v = a.powf(b);
                    if v.is_nan() {
                        return Err(DomainError {
                            function: "^",
                            argument: a,
                        });
                    }
                    v
                }
            }
        }
        Node::Call(f, a) => {
            let a = eval_node(a, env)?;
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tan => a.tan(),
                Func::Exp => a.exp(),
                Func::Log => {
                    if a <= 0.0 {
                        return Err(DomainError {
                            function: "log",
                            argument: a,
                        });
                    }
                    a.ln()
                }
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(DomainError {
                            function: "sqrt",
                            argument: a,
                        });
                    }
                    a.sqrt()
                }
                Func::Abs => a.abs(),
            }
        }
    })
}

// Printing is fully parenthesised so that parse(print(e)) rebuilds the same tree
// up to the representation of negative literals.
fn write_node(node: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Num(v) => {
            if *v < 0.0 {
                write!(f, "(-{:?})", -v)
            } else {
                write!(f, "{v:?}")
            }
        }
        Node::Var(v) => f.write_str(v.name()),
        Node::Neg(a) => {
            f.write_str("(-")?;
            write_node(a, f)?;
            f.write_str(")")
        }
        Node::Bin(op, a, b) => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Div => "/",
                BinOp::Pow => "^",
            };
            f.write_str("(")?;
            write_node(a, f)?;
            write!(f, " {sym} ")?;
            write_node(b, f)?;
            f.write_str(")")
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(a, f)?;
            f.write_str(")")
        }
    }
}

// ---- symbolic differentiation with light constant folding ----

fn num(v: f64) -> Node {
    Node::Num(v)
}

fn is_num(n: &Node, v: f64) -> bool {
    matches!(n, Node::Num(x) if *x == v)
}

fn add(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Num(x), Node::Num(y)) => num(x + y),
        _ if is_num(&a, 0.0) => b,
        _ if is_num(&b, 0.0) => a,
        _ => Node::Bin(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Num(x), Node::Num(y)) => num(x - y),
        _ if is_num(&b, 0.0) => a,
        _ if is_num(&a, 0.0) => neg(b),
        _ => Node::Bin(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Num(x), Node::Num(y)) => num(x * y),
        _ if is_num(&a, 0.0) || is_num(&b, 0.0) => num(0.0),
        _ if is_num(&a, 1.0) => b,
        _ if is_num(&b, 1.0) => a,
        _ => Node::Bin(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    if is_num(&a, 0.0) {
        return num(0.0);
    }
    if is_num(&b, 1.0) {
        return a;
    }
    Node::Bin(BinOp::Div, Box::new(a), Box::new(b))
}

fn neg(a: Node) -> Node {
    match a {
        Node::Num(x) => num(-x),
        Node::Neg(inner) => *inner,
        other => Node::Neg(Box::new(other)),
    }
}

fn pow(a: Node, b: Node) -> Node {
    if is_num(&b, 1.0) {
        return a;
    }
    if is_num(&b, 0.0) {
        return num(1.0);
    }
    Node::Bin(BinOp::Pow, Box::new(a), Box::new(b))
}

fn call(f: Func, a: Node) -> Node {
    Node::Call(f, Box::new(a))
}

fn diff(node: &Node, var: Var) -> Node {
    match node {
        Node::Num(_) => num(0.0),
        Node::Var(v) => num(if *v == var { 1.0 } else { 0.0 }),
        Node::Neg(a) => neg(diff(a, var)),
        Node::Bin(op, a, b) => {
            let da = diff(a, var);
            let db = diff(b, var);
            let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
            match op {
                BinOp::Add => add(da, db),
                BinOp::Sub => sub(da, db),
                BinOp::Mul => add(mul(da, b), mul(a, db)),
                BinOp::Div => div(
                    sub(mul(da, b.clone()), mul(a, db)),
                    pow(b, num(2.0)),
                ),
                BinOp::Pow => {
                    if let Node::Num(n) = b {
                        // d(a^n) = n a^(n-1) a'
                        mul(mul(num(n), pow(a, num(n - 1.0))), da)
                    } else {
                        // d(a^b) = a^b (b' ln a + b a'/a)
                        let whole = pow(a.clone(), b.clone());
                        let term = add(
                            mul(db, call(Func::Log, a.clone())),
                            div(mul(b, da), a),
                        );
                        mul(whole, term)
                    }
                }
            }
        }
        Node::Call(f, a) => {
            let da = diff(a, var);
            if is_num(&da, 0.0) {
                return num(0.0);
            }
            let a = a.as_ref().clone();
            let outer = match f {
                Func::Sin => call(Func::Cos, a),
                Func::Cos => neg(call(Func::Sin, a)),
                Func::Tan => div(num(1.0), pow(call(Func::Cos, a), num(2.0))),
                Func::Exp => call(Func::Exp, a),
                Func::Log => div(num(1.0), a),
                Func::Sqrt => div(num(0.5), call(Func::Sqrt, a)),
                Func::Abs => div(a.clone(), call(Func::Abs, a)),
            };
            mul(outer, da)
        }
    }
}

// ---- parser ----

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.product()?;
        loop {
            if self.eat('+') {
                let rhs = self.product()?;
                lhs = Node::Bin(BinOp::Add, Box::new(lhs), Box::new(rhs));
            } else if self.eat('-') {
                let rhs = self.product()?;
                lhs = Node::Bin(BinOp::Sub, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                let rhs = self.unary()?;
                lhs = Node::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
            } else if self.eat('/') {
                let rhs = self.unary()?;
                lhs = Node::Bin(BinOp::Div, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.eat('-') {
            let inner = self.unary()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let inner = self.sum()?;
                if !self.eat(')') {
                    self.skip_ws();
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(start),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let name = &self.src[start..self.pos];
                if let Some(func) = Func::from_name(name) {
                    if !self.eat('(') {
                        self.skip_ws();
                        return Err(self.error("expected `(` after function name"));
                    }
                    let arg = self.sum()?;
                    if !self.eat(')') {
                        self.skip_ws();
                        return Err(self.error("expected `)`"));
                    }
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                match name {
                    "x" => Ok(Node::Var(Var::X)),
                    "y" => Ok(Node::Var(Var::Y)),
                    "r" => Ok(Node::Var(Var::R)),
                    "theta" => Ok(Node::Var(Var::Theta)),
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "e" => Ok(Node::Num(std::f64::consts::E)),
                    _ => Err(ExprError::UnknownIdentifier {
                        name: name.to_string(),
                        offset: start,
                    }),
                }
            }
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self, start: usize) -> Result<Node, ExprError> {
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
        // exponent only when digits follow, so `2*e` keeps meaning Euler's number
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut k = i + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                i = k;
            }
        }
        let text = &self.src[start..i];
        match text.parse::<f64>() {
            Ok(v) => {
                self.pos = i;
                Ok(Node::Num(v))
            }
            Err(_) => Err(ExprError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn at_theta(e: &ScalarExpr, theta: f64) -> f64 {
        e.eval(&Env::polar(1.0, theta)).unwrap()
    }

    #[test]
    fn sin_three_theta() {
        let e = parse_expression("sin(3*theta)").unwrap();
        assert!((at_theta(&e, PI / 6.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn log_radius_at_e() {
        let e = parse_expression("log(sqrt(x^2+y^2))").unwrap();
        assert!((evaluate_expr(&e, E, 0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unbalanced_paren_offset() {
        match parse_expression("sin(") {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn precedence() {
        let e = parse_expression("2+3*4^2").unwrap();
        assert_eq!(e.eval_xy(0.0, 0.0).unwrap(), 50.0);
        let e = parse_expression("-2^2").unwrap();
        assert_eq!(e.eval_xy(0.0, 0.0).unwrap(), -4.0);
        let e = parse_expression("2^3^2").unwrap();
        assert_eq!(e.eval_xy(0.0, 0.0).unwrap(), 512.0);
        let e = parse_expression("2^-1").unwrap();
        assert_eq!(e.eval_xy(0.0, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn product_and_trig() {
        let e = parse_expression("x*y").unwrap();
        assert_eq!(e.eval_xy(2.0, 3.0).unwrap(), 6.0);
        let e = parse_expression("5+cos(2*theta)").unwrap();
        assert!((at_theta(&e, PI / 2.0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let e = parse_expression("sqrt(x)").unwrap();
        let err = e.eval_xy(-1.0, 0.0).unwrap_err();
        assert_eq!(err.function, "sqrt");
        assert_eq!(err.argument, -1.0);
        let e = parse_expression("log(x)").unwrap();
        assert_eq!(e.eval_xy(0.0, 1.0).unwrap_err().function, "log");
    }

    #[test]
    fn unknown_identifier() {
        match parse_expression("2*z + 1") {
            Err(ExprError::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "z");
                assert_eq!(offset, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scientific_literals_and_euler() {
        assert_eq!(parse_expression("2e3").unwrap().eval_xy(0., 0.).unwrap(), 2000.0);
        assert_eq!(parse_expression("2*e").unwrap().eval_xy(0., 0.).unwrap(), 2.0 * E);
        assert_eq!(parse_expression("1.5E-1").unwrap().eval_xy(0., 0.).unwrap(), 0.15);
    }

    #[test]
    fn theta_derivative_matches_finite_difference() {
        let e = parse_expression("2+sin(3*theta)*exp(cos(theta))/(3+cos(theta))^2").unwrap();
        let d = e.derivative(Var::Theta);
        let dd = d.derivative(Var::Theta);
        for k in 0..17 {
            let t = 0.37 * k as f64;
            let h = 1e-5;
            let fd = (at_theta(&e, t + h) - at_theta(&e, t - h)) / (2.0 * h);
            let fdd = (at_theta(&d, t + h) - at_theta(&d, t - h)) / (2.0 * h);
            assert!((at_theta(&d, t) - fd).abs() < 1e-8, "first derivative at {t}");
            assert!((at_theta(&dd, t) - fdd).abs() < 1e-7, "second derivative at {t}");
        }
    }

    #[test]
    fn constant_detection() {
        assert!(parse_expression("pi/2 + 1").unwrap().is_constant());
        assert!(!parse_expression("theta").unwrap().is_constant());
        assert!(parse_expression("1+sin(theta)").unwrap().depends_only_on_theta());
        assert!(!parse_expression("1+x").unwrap().depends_only_on_theta());
    }
}
