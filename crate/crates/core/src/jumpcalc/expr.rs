//! Arithmetic expressions over named variables, with `dt(·)`/`dx(·)` operator
//! atoms, symbolic differentiation and a compiled stack evaluator.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Func(Func, Box<Expr>),
    Dt(Box<Expr>),
    Dx(Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
}

use Expr::*;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| Error::Expression(format!("bad number '{text}'")))?;
            out.push(Tok::Num(v));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Expression(format!("unexpected character '{c}' in '{s}'")));
        }
    }
    Ok(out)
}

/// Name resolution for the parser.
pub struct Scope<'a> {
    pub variables: &'a [String],
    pub parameters: &'a BTreeMap<String, f64>,
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    scope: &'a Scope<'a>,
    src: String,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Expression(format!("{msg} in '{}'", self.src))
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            // Right associative; exponent may carry a sign.
            let exp = self.unary()?;
            return Ok(Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Num(v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat('(') {
                    let inner = self.expr()?;
                    if !self.eat(')') {
                        return Err(self.err("missing ')'"));
                    }
                    return match name.as_str() {
                        "dt" => Ok(Dt(Box::new(inner))),
                        "dx" => Ok(Dx(Box::new(inner))),
                        "exp" => Ok(Func(Func::Exp, Box::new(inner))),
                        "ln" => Ok(Func(Func::Ln, Box::new(inner))),
                        "sqrt" => Ok(Func(Func::Sqrt, Box::new(inner))),
                        _ => Err(self.err(&format!("unknown function '{name}'"))),
                    };
                }
                if let Some(i) = self.scope.variables.iter().position(|v| *v == name) {
                    Ok(Var(i))
                } else if let Some(v) = self.scope.parameters.get(&name) {
                    Ok(Num(*v))
                } else {
                    Err(self.err(&format!("undeclared name '{name}'")))
                }
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("missing ')'"));
                }
                Ok(e)
            }
            Some(t) => Err(self.err(&format!("unexpected token {t:?}"))),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

pub fn parse(src: &str, scope: &Scope) -> Result<Expr> {
    let toks = tokenize(src)?;
    if toks.is_empty() {
        return Err(Error::Expression("empty expression".into()));
    }
    let mut p = Parser { toks, pos: 0, scope, src: src.to_string() };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

impl Expr {
    pub fn has_operator(&self) -> bool {
        match self {
            Num(_) | Var(_) => false,
            Dt(_) | Dx(_) => true,
            Neg(a) | Func(_, a) => a.has_operator(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.has_operator() || b.has_operator(),
        }
    }

    pub fn uses_var(&self, v: usize) -> bool {
        match self {
            Num(_) => false,
            Var(i) => *i == v,
            Neg(a) | Func(_, a) | Dt(a) | Dx(a) => a.uses_var(v),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.uses_var(v) || b.uses_var(v),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Num(_) => true,
            Var(_) | Dt(_) | Dx(_) => false,
            Neg(a) | Func(_, a) => a.is_constant(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Tree-walk evaluation (operator atoms are rejected).
    pub fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Num(v) => *v,
            Var(i) => vars[*i],
            Neg(a) => -a.eval(vars),
            Add(a, b) => a.eval(vars) + b.eval(vars),
            Sub(a, b) => a.eval(vars) - b.eval(vars),
            Mul(a, b) => a.eval(vars) * b.eval(vars),
            Div(a, b) => a.eval(vars) / b.eval(vars),
            Pow(a, b) => pow(a.eval(vars), b.eval(vars)),
            Func(f, a) => apply(*f, a.eval(vars)),
            Dt(_) | Dx(_) => f64::NAN,
        }
    }

    /// ∂/∂(variable v), lightly simplified.
    pub fn diff(&self, v: usize) -> Expr {
        if !self.uses_var(v) {
            return Num(0.0);
        }
        match self {
            Num(_) => Num(0.0),
            Var(i) => Num(if *i == v { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.diff(v)),
            Add(a, b) => add(a.diff(v), b.diff(v)),
            Sub(a, b) => sub(a.diff(v), b.diff(v)),
            Mul(a, b) => add(mul(a.diff(v), (**b).clone()), mul((**a).clone(), b.diff(v))),
            Div(a, b) => {
                let num = sub(mul(a.diff(v), (**b).clone()), mul((**a).clone(), b.diff(v)));
                div(num, mul((**b).clone(), (**b).clone()))
            }
            Pow(a, b) => {
                if b.is_constant() {
                    let n = b.eval(&[]);
                    mul(mul(Num(n), pow_e((**a).clone(), Num(n - 1.0))), a.diff(v))
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    let t1 = mul(b.diff(v), Func(Func::Ln, a.clone()));
                    let t2 = div(mul((**b).clone(), a.diff(v)), (**a).clone());
                    mul(self.clone(), add(t1, t2))
                }
            }
            Func(f, a) => {
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Ln => div(Num(1.0), (**a).clone()),
                    Func::Sqrt => div(Num(0.5), self.clone()),
                };
                mul(outer, a.diff(v))
            }
            Dt(_) | Dx(_) => Num(f64::NAN),
        }
    }

    pub fn compile(&self) -> Program {
        let mut code = Vec::new();
        emit(self, &mut code);
        Program { code }
    }

    pub fn display(&self, names: &[String]) -> String {
        match self {
            Num(v) => format!("{v}"),
            Var(i) => names[*i].clone(),
            Neg(a) => format!("-({})", a.display(names)),
            Add(a, b) => format!("{} + {}", a.display(names), b.display(names)),
            Sub(a, b) => format!("{} - ({})", a.display(names), b.display(names)),
            Mul(a, b) => format!("({})*({})", a.display(names), b.display(names)),
            Div(a, b) => format!("({})/({})", a.display(names), b.display(names)),
            Pow(a, b) => format!("({})^({})", a.display(names), b.display(names)),
            Func(f, a) => format!("{f:?}({})", a.display(names)).to_lowercase(),
            Dt(a) => format!("dt({})", a.display(names)),
            Dx(a) => format!("dx({})", a.display(names)),
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b == b.round() && b.abs() < 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

fn apply(f: Func, x: f64) -> f64 {
    match f {
        Func::Exp => x.exp(),
        Func::Ln => x.ln(),
        Func::Sqrt => x.sqrt(),
    }
}

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Num(x) if *x == v)
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Num(v) => Num(-v),
        a => Neg(Box::new(a)),
    }
}

pub fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) => Num(x + y),
        _ if is_num(&a, 0.0) => b,
        _ if is_num(&b, 0.0) => a,
        _ => Add(Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) => Num(x - y),
        _ if is_num(&b, 0.0) => a,
        _ if is_num(&a, 0.0) => neg(b),
        _ => Sub(Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) => Num(x * y),
        _ if is_num(&a, 0.0) || is_num(&b, 0.0) => Num(0.0),
        _ if is_num(&a, 1.0) => b,
        _ if is_num(&b, 1.0) => a,
        _ => Mul(Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) => Num(x / y),
        _ if is_num(&a, 0.0) => Num(0.0),
        _ if is_num(&b, 1.0) => a,
        _ => Div(Box::new(a), Box::new(b)),
    }
}

fn pow_e(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) => Num(pow(*x, *y)),
        _ if is_num(&b, 0.0) => Num(1.0),
        _ if is_num(&b, 1.0) => a,
        _ => Pow(Box::new(a), Box::new(b)),
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Push(f64),
    Load(usize),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    PowI(i32),
    Call(Func),
}

/// Postfix program for fast repeated evaluation.
#[derive(Debug, Clone)]
pub struct Program {
    code: Vec<Op>,
}

fn emit(e: &Expr, code: &mut Vec<Op>) {
    match e {
        Num(v) => code.push(Op::Push(*v)),
        Var(i) => code.push(Op::Load(*i)),
        Neg(a) => {
            emit(a, code);
            code.push(Op::Neg);
        }
        Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => {
            emit(a, code);
            emit(b, code);
            code.push(match e {
                Add(..) => Op::Add,
                Sub(..) => Op::Sub,
                Mul(..) => Op::Mul,
                _ => Op::Div,
            });
        }
        Pow(a, b) => {
            emit(a, code);
            if let Num(n) = **b {
                if n == n.round() && n.abs() < 64.0 {
                    code.push(Op::PowI(n as i32));
                    return;
                }
            }
            emit(b, code);
            code.push(Op::Pow);
        }
        Func(f, a) => {
            emit(a, code);
            code.push(Op::Call(*f));
        }
        Dt(_) | Dx(_) => code.push(Op::Push(f64::NAN)),
    }
}

impl Program {
    pub fn eval(&self, vars: &[f64]) -> f64 {
        let mut stack = [0.0f64; 32];
        let mut sp = 0usize;
        for op in &self.code {
            match *op {
                Op::Push(v) => {
                    stack[sp] = v;
                    sp += 1;
                }
                Op::Load(i) => {
                    stack[sp] = vars[i];
                    sp += 1;
                }
                Op::Neg => stack[sp - 1] = -stack[sp - 1],
                Op::PowI(n) => stack[sp - 1] = stack[sp - 1].powi(n),
                Op::Call(f) => stack[sp - 1] = apply(f, stack[sp - 1]),
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow => {
                    let b = stack[sp - 1];
                    let a = stack[sp - 2];
                    sp -= 1;
                    stack[sp - 1] = match op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        Op::Div => a / b,
                        _ => a.powf(b),
                    };
                }
            }
        }
        stack[0]
    }
}

/// Differential operator of a linear term.
#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    One,
    Dt(Expr),
    Dx(Expr),
}

/// Expand into Σ coefficient·atom. Products of two operator atoms are rejected.
pub fn linearize(e: &Expr) -> Result<Vec<(Expr, Atom)>> {
    Ok(match e {
        Num(_) | Var(_) | Func(..) if !e.has_operator() => vec![(e.clone(), Atom::One)],
        Func(..) => return Err(Error::Expression("derivative inside a nonlinear function".into())),
        Dt(a) | Dx(a) => {
            if a.has_operator() {
                return Err(Error::Expression("nested derivative operators are not supported".into()));
            }
            vec![(Num(1.0), if matches!(e, Dt(_)) { Atom::Dt((**a).clone()) } else { Atom::Dx((**a).clone()) })]
        }
        Neg(a) => linearize(a)?.into_iter().map(|(c, t)| (neg(c), t)).collect(),
        Add(a, b) => {
            let mut v = linearize(a)?;
            v.extend(linearize(b)?);
            v
        }
        Sub(a, b) => {
            let mut v = linearize(a)?;
            v.extend(linearize(b)?.into_iter().map(|(c, t)| (neg(c), t)));
            v
        }
        Mul(a, b) => {
            let (la, lb) = (linearize(a)?, linearize(b)?);
            let mut v = Vec::new();
            for (ca, ta) in &la {
                for (cb, tb) in &lb {
                    let atom = match (ta, tb) {
                        (Atom::One, t) | (t, Atom::One) => t.clone(),
                        _ => return Err(Error::Expression("product of two derivative terms".into())),
                    };
                    v.push((mul(ca.clone(), cb.clone()), atom));
                }
            }
            v
        }
        Div(a, b) => {
            if b.has_operator() {
                return Err(Error::Expression("derivative in a denominator".into()));
            }
            linearize(a)?.into_iter().map(|(c, t)| (div(c, (**b).clone()), t)).collect()
        }
        Pow(a, b) => {
            if e.has_operator() {
                return Err(Error::Expression("power of a derivative term".into()));
            }
            vec![(Pow(a.clone(), b.clone()), Atom::One)]
        }
        _ => vec![(e.clone(), Atom::One)],
    })
}

impl fmt::Display for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format!("{self:?}").to_lowercase())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scope_vars() -> (Vec<String>, BTreeMap<String, f64>) {
        (vec!["u".into(), "sigma".into()], BTreeMap::from([("k2".to_string(), 4.0)]))
    }

    #[test]
    fn parse_and_eval() {
        let (v, p) = scope_vars();
        let s = Scope { variables: &v, parameters: &p };
        let e = parse("u^2/2 - k2*sigma + 1e-1*-u", &s).unwrap();
        let x = [3.0, 0.5];
        assert!((e.eval(&x) - (4.5 - 2.0 - 0.3)).abs() < 1e-15);
        assert!((e.compile().eval(&x) - e.eval(&x)).abs() < 1e-15);
        assert!(parse("u + w", &s).is_err());
        assert!(parse("u +", &s).is_err());
        assert!(parse("(u", &s).is_err());
    }

    #[test]
    fn power_is_right_associative() {
        let (v, p) = scope_vars();
        let s = Scope { variables: &v, parameters: &p };
        let e = parse("2^3^2", &s).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]), 512.0);
        let e = parse("-u^2", &s).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0]), -9.0);
    }

    #[test]
    fn symbolic_derivatives() {
        let (v, p) = scope_vars();
        let s = Scope { variables: &v, parameters: &p };
        let e = parse("u^3/3 - u*sigma + exp(sigma) + sqrt(u)", &s).unwrap();
        let x = [1.7, 0.3];
        let du = e.diff(0).eval(&x);
        let ds = e.diff(1).eval(&x);
        assert!((du - (1.7f64.powi(2) - 0.3 + 0.5 / 1.7f64.sqrt())).abs() < 1e-13);
        assert!((ds - (-1.7 + 0.3f64.exp())).abs() < 1e-13);
    }

    #[test]
    fn linearize_splits_operator_terms() {
        let (v, p) = scope_vars();
        let s = Scope { variables: &v, parameters: &p };
        let e = parse("dt(sigma) + u*dx(sigma) - k2*dx(u) + 2*u", &s).unwrap();
        let terms = linearize(&e).unwrap();
        assert_eq!(terms.len(), 4);
        assert!(matches!(terms[0].1, Atom::Dt(Var(1))));
        assert!(matches!(terms[1].1, Atom::Dx(Var(1))));
        assert_eq!(terms[2].0.eval(&[0.0, 0.0]), -4.0);
        assert_eq!(terms[3].1, Atom::One);
        assert!(linearize(&parse("dx(u)*dx(sigma)", &s).unwrap()).is_err());
        assert!(linearize(&parse("dx(dx(u))", &s).unwrap()).is_err());
    }
}
