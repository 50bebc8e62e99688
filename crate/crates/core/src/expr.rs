//! Arithmetic expressions over named real variables.
//!
//! Objectives and constraint-map bounds are written in a small infix language:
//! real literals, identifiers matching `[A-Za-z_][A-Za-z0-9_]*`, the binary
//! operators `+ - * / ^`, unary minus and the functions `sqrt`, `abs`, `exp`,
//! `log`, `min` and `max`.
//!
//! Precedence from loosest to tightest is `+ -`, then `* /`, then unary minus,
//! then `^`. `^` is right-associative, so `-z_1^2` is `-(z_1^2)` and
//! `2^3^2` is `2^(3^2)`.
//!
//! For hot loops an [`Expr`] is compiled against an ordered slot list into a
//! [`CompiledExpr`], which evaluates on a plain `&[f64]`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sqrt,
    Abs,
    Exp,
    Log,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

/// Expression tree. Literals produced by the parser are always finite and
/// non-negative; a leading minus becomes [`Expr::Neg`].
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    InvalidNumber(String),
    UnknownFunction(String),
    WrongArity {
        name: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at offset {offset}: {kind}")]
pub struct ParseError {
    /// Byte offset into the source text.
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected token {t:?}"),
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of input"),
            ParseErrorKind::InvalidNumber(s) => write!(f, "invalid number literal {s:?}"),
            ParseErrorKind::UnknownFunction(s) => write!(f, "unknown function {s:?}"),
            ParseErrorKind::WrongArity {
                name,
                expected,
                found,
            } => write!(f, "{name} takes {expected} argument(s), got {found}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    SqrtOfNegative,
    LogOfNonPositive,
    DivisionByZero,
    NegativeBaseFractionalPower,
    NonFinite,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::SqrtOfNegative => "square root of a negative number",
            DomainKind::LogOfNonPositive => "logarithm of a non-positive number",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::NegativeBaseFractionalPower => "negative base raised to a fractional power",
            DomainKind::NonFinite => "non-finite result",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain error in `{subexpr}`: {kind}")]
    Domain { kind: DomainKind, subexpr: String },
}

// ---------------------------------------------------------------------------
// Lexing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("{v}"),
            Tok::Ident(s) => s.clone(),
            Tok::Op(c) => c.to_string(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Comma => ",".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push((i, Tok::Op(c as char)));
                i += 1;
            }
            b'(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            b',' => {
                out.push((i, Tok::Comma));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                match text.parse::<f64>() {
                    Ok(v) if v.is_finite() => out.push((start, Tok::Num(v))),
                    _ => {
                        return Err(ParseError {
                            offset: start,
                            kind: ParseErrorKind::InvalidNumber(text.to_string()),
                        })
                    }
                }
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset: i,
                    kind: ParseErrorKind::UnexpectedChar(ch),
                });
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parsing

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    /// Premature end of input is reported at the last token consumed, the
    /// one that still needed an operand or a closing delimiter.
    fn end_error(&self) -> ParseError {
        let offset = self.toks.last().map(|(o, _)| *o).unwrap_or(0);
        ParseError {
            offset,
            kind: ParseErrorKind::UnexpectedEnd,
        }
    }

    fn unexpected(&self) -> ParseError {
        match self.toks.get(self.pos) {
            Some((o, t)) => ParseError {
                offset: *o,
                kind: ParseErrorKind::UnexpectedToken(t.describe()),
            },
            None => self.end_error(),
        }
    }

    fn expect(&mut self, want: &Tok) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t == want => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected()),
        }
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.multiplicative()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.multiplicative()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            // right operand may carry its own sign: 2^-1
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some((offset, tok)) = self.toks.get(self.pos).cloned() else {
            return Err(self.end_error());
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.pos += 1;
                let e = self.additive()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if let Some(Tok::LParen) = self.peek() {
                    let func = Func::from_name(&name).ok_or(ParseError {
                        offset,
                        kind: ParseErrorKind::UnknownFunction(name.clone()),
                    })?;
                    self.pos += 1;
                    let mut args = vec![self.additive()?];
                    while let Some(Tok::Comma) = self.peek() {
                        self.pos += 1;
                        args.push(self.additive()?);
                    }
                    self.expect(&Tok::RParen)?;
                    if args.len() != func.arity() {
                        return Err(ParseError {
                            offset,
                            kind: ParseErrorKind::WrongArity {
                                name,
                                expected: func.arity(),
                                found: args.len(),
                            },
                        });
                    }
                    Ok(Expr::Call(func, args))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            _ => Err(self.unexpected()),
        }
    }
}

/// Parses `text` into an expression tree.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.additive()?;
    if p.pos != p.toks.len() {
        return Err(p.unexpected());
    }
    Ok(e)
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Prints with explicit grouping; the output reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(name) => f.write_str(name),
            Expr::Neg(inner) => write!(f, "(-({inner}))"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl Expr {
    /// Distinct variable names, sorted.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(n) => {
                out.insert(n.clone());
            }
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Resolves every variable to its position in `slots`.
    pub fn compile<S: AsRef<str>>(&self, slots: &[S]) -> Result<CompiledExpr, EvalError> {
        let names: Vec<String> = slots.iter().map(|s| s.as_ref().to_string()).collect();
        let index: HashMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(k, n)| (n.as_str(), k))
            .collect();
        let root = lower(self, &index)?;
        Ok(CompiledExpr { root, names })
    }

    pub fn evaluate(&self, env: &HashMap<String, f64>) -> Result<f64, EvalError> {
        let names: Vec<String> = self.variables().into_iter().collect();
        let compiled = self.compile(&names)?;
        let mut values = Vec::with_capacity(names.len());
        for n in &names {
            values.push(*env.get(n).ok_or_else(|| EvalError::Unbound(n.clone()))?);
        }
        compiled.eval(&values)
    }

    /// Central-difference gradient with respect to `vars`, taken at `env`.
    ///
    /// `step = None` uses `1e-6 * max(1, |v|)` for each coordinate value `v`.
    pub fn grad_fd<S: AsRef<str>>(
        &self,
        env: &HashMap<String, f64>,
        vars: &[S],
        step: Option<f64>,
    ) -> Result<Vec<f64>, EvalError> {
        let mut names: Vec<String> = self.variables().into_iter().collect();
        for v in vars {
            if !names.iter().any(|n| n == v.as_ref()) {
                names.push(v.as_ref().to_string());
            }
        }
        let compiled = self.compile(&names)?;
        let mut values = Vec::with_capacity(names.len());
        for n in &names {
            values.push(*env.get(n).ok_or_else(|| EvalError::Unbound(n.clone()))?);
        }
        let slots: Vec<usize> = vars
            .iter()
            .map(|v| names.iter().position(|n| n == v.as_ref()).unwrap())
            .collect();
        compiled.grad_fd(&values, &slots, step)
    }
}

// ---------------------------------------------------------------------------
// Compiled form

#[derive(Debug, Clone)]
enum Node {
    Num(f64),
    Slot(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

fn lower(e: &Expr, index: &HashMap<&str, usize>) -> Result<Node, EvalError> {
    Ok(match e {
        Expr::Num(v) => Node::Num(*v),
        Expr::Var(n) => Node::Slot(
            *index
                .get(n.as_str())
                .ok_or_else(|| EvalError::Unbound(n.clone()))?,
        ),
        Expr::Neg(inner) => Node::Neg(Box::new(lower(inner, index)?)),
        Expr::Bin(op, a, b) => Node::Bin(*op, Box::new(lower(a, index)?), Box::new(lower(b, index)?)),
        Expr::Call(f, args) => Node::Call(
            *f,
            args.iter()
                .map(|a| lower(a, index))
                .collect::<Result<_, _>>()?,
        ),
    })
}

/// An expression with variables resolved to slot positions. Immutable and
/// `Sync`; evaluation is pure.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    root: Node,
    names: Vec<String>,
}

impl CompiledExpr {
    pub fn slots(&self) -> &[String] {
        &self.names
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        assert_eq!(values.len(), self.names.len(), "slot count mismatch");
        self.eval_node(&self.root, values)
    }

    fn domain(&self, kind: DomainKind, node: &Node) -> EvalError {
        EvalError::Domain {
            kind,
            subexpr: self.render(node),
        }
    }

    fn eval_node(&self, node: &Node, v: &[f64]) -> Result<f64, EvalError> {
        match node {
            Node::Num(x) => Ok(*x),
            Node::Slot(k) => Ok(v[*k]),
            Node::Neg(e) => Ok(-self.eval_node(e, v)?),
            Node::Bin(op, a, b) => {
                let x = self.eval_node(a, v)?;
                let y = self.eval_node(b, v)?;
                let r = match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(self.domain(DomainKind::DivisionByZero, node));
                        }
                        x / y
                    }
                    BinOp::Pow => power(x, y).map_err(|k| self.domain(k, node))?,
                };
                if r.is_finite() {
                    Ok(r)
                } else {
                    Err(self.domain(DomainKind::NonFinite, node))
                }
            }
            Node::Call(f, args) => {
                let x = self.eval_node(&args[0], v)?;
                let r = match f {
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(self.domain(DomainKind::SqrtOfNegative, node));
                        }
                        x.sqrt()
                    }
                    Func::Abs => x.abs(),
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(self.domain(DomainKind::LogOfNonPositive, node));
                        }
                        x.ln()
                    }
                    Func::Min => x.min(self.eval_node(&args[1], v)?),
                    Func::Max => x.max(self.eval_node(&args[1], v)?),
                };
                if r.is_finite() {
                    Ok(r)
                } else {
                    Err(self.domain(DomainKind::NonFinite, node))
                }
            }
        }
    }

    fn render(&self, node: &Node) -> String {
        match node {
            Node::Num(x) => format!("{x:?}"),
            Node::Slot(k) => self.names[*k].clone(),
            Node::Neg(e) => format!("-({})", self.render(e)),
            Node::Bin(op, a, b) => format!("({} {} {})", self.render(a), op.symbol(), self.render(b)),
            Node::Call(f, args) => {
                let inner: Vec<String> = args.iter().map(|a| self.render(a)).collect();
                format!("{}({})", f.name(), inner.join(", "))
            }
        }
    }

    /// Central differences in the listed slots.
    pub fn grad_fd(
        &self,
        values: &[f64],
        slots: &[usize],
        step: Option<f64>,
    ) -> Result<Vec<f64>, EvalError> {
        let mut work = values.to_vec();
        let mut grad = Vec::with_capacity(slots.len());
        for &k in slots {
            let x0 = values[k];
            let h = step.unwrap_or(1e-6 * x0.abs().max(1.0));
            work[k] = x0 + h;
            let fp = self.eval(&work)?;
            work[k] = x0 - h;
            let fm = self.eval(&work)?;
            work[k] = x0;
            grad.push((fp - fm) / (2.0 * h));
        }
        Ok(grad)
    }
}

fn power(base: f64, exp: f64) -> Result<f64, DomainKind> {
    if exp.fract() == 0.0 && exp.abs() <= 1024.0 {
        let n = exp.abs() as u32;
        let mut acc = 1.0;
        for _ in 0..n {
            acc *= base;
        }
        if exp >= 0.0 {
            Ok(acc)
        } else if acc == 0.0 {
            Err(DomainKind::DivisionByZero)
        } else {
            Ok(1.0 / acc)
        }
    } else if base < 0.0 {
        Err(DomainKind::NegativeBaseFractionalPower)
    } else if base == 0.0 {
        if exp > 0.0 {
            Ok(0.0)
        } else {
            Err(DomainKind::DivisionByZero)
        }
    } else {
        Ok((exp * base.ln()).exp())
    }
}
