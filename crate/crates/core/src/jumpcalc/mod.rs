//! Traveling-wave engine for 1-D systems whose equations are each stated
//! either strongly (`=`, equality of representatives) or weakly (`≈`,
//! association).
//!
//! Everything is computed in the driver parameter s ∈ [0, 1]: one variable's
//! profile is taken as the driver H_d, and every other profile is a relation
//! R_v(s) with H_v = R_v ∘ H_d. Strong equations give a first order ODE for the
//! relations; weak equations give integrated jump conditions in which every
//! nonconservative product g·(v)_x contributes [v]∫g(vars(s))R_v'(s)ds.
//! Bounded source terms carry no mass across a shock and are ignored.

pub mod expr;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{brent, HermiteTable};
use crate::profiles::{composed_heaviside, Profile};
use crate::quadrature::{integrate, QuadOptions};
use expr::{Atom, Expr, Program, Scope};

const MAX_VARS: usize = 8;
/// Nodes of the tabulated profile relations.
pub const PROFILE_NODES: usize = 4096;
const SEARCH_NODES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statement {
    Strong,
    Weak,
}

impl Statement {
    pub fn symbol(self) -> &'static str {
        match self {
            Statement::Strong => "=",
            Statement::Weak => "≈",
        }
    }
}

pub fn statement_vector(s: &[Statement]) -> String {
    let inner: Vec<&str> = s.iter().map(|x| x.symbol()).collect();
    format!("({})", inner.join(","))
}

/// One classified term of an equation written as `Σ terms = 0`.
#[derive(Debug, Clone)]
pub enum Term {
    /// coef·dt(expr), coef constant.
    TimeDerivative { coef: f64, expr: Expr },
    /// coef·dx(flux), coef constant.
    Flux { coef: f64, expr: Expr },
    /// coeff(vars)·dx(var), or ·dt(var) when `time` is set.
    Nonconservative { coeff: Expr, var: usize, time: bool },
    Source(Expr),
}

#[derive(Debug, Clone)]
struct Compiled {
    // Wave-form coefficients: the equation reads Σ_v (p_v − c q_v) v' = 0.
    p: Vec<Option<Program>>,
    q: Vec<Option<Program>>,
    time_jumps: Vec<(f64, Program)>,
    flux_jumps: Vec<(f64, Program)>,
    nonconservative: Vec<(Program, usize, bool, String)>,
}

#[derive(Debug, Clone)]
pub struct Equation {
    pub source: String,
    pub terms: Vec<Term>,
    compiled: Compiled,
}

impl Equation {
    pub fn is_conservative(&self) -> bool {
        self.compiled.nonconservative.is_empty()
    }

    /// Σ coef·[flux] / Σ coef·[density] between two states; None for a
    /// nonconservative equation or a zero density jump.
    pub fn rankine_hugoniot_speed(&self, left: &[f64], right: &[f64]) -> Option<f64> {
        if !self.is_conservative() {
            return None;
        }
        let jump = |terms: &[(f64, Program)]| terms.iter().map(|(c, p)| c * (p.eval(right) - p.eval(left))).sum::<f64>();
        let (dd, df) = (jump(&self.compiled.time_jumps), jump(&self.compiled.flux_jumps));
        (dd != 0.0 && dd.is_finite()).then(|| df / dd)
    }

    /// Variable under the time derivative, if there is a single one.
    pub fn time_variable(&self) -> Option<usize> {
        self.terms.iter().find_map(|t| match t {
            Term::TimeDerivative { expr: Expr::Var(v), .. } => Some(*v),
            Term::Nonconservative { var, time: true, .. } => Some(*var),
            _ => None,
        })
    }

    fn involves(&self, v: usize) -> bool {
        self.compiled.p[v].is_some() || self.compiled.q[v].is_some()
    }

    fn coefficient(&self, v: usize, c: f64, vars: &[f64]) -> f64 {
        let p = self.compiled.p[v].as_ref().map_or(0.0, |e| e.eval(vars));
        let q = self.compiled.q[v].as_ref().map_or(0.0, |e| e.eval(vars));
        p - c * q
    }

    /// Profile-independent part of the integrated jump: Σ k[E] − c Σ k[E].
    fn conservative_jump(&self, c: f64, left: &[f64], right: &[f64]) -> f64 {
        let j = |list: &[(f64, Program)]| list.iter().map(|(k, e)| k * (e.eval(right) - e.eval(left))).sum::<f64>();
        j(&self.compiled.flux_jumps) - c * j(&self.compiled.time_jumps)
    }
}

/// A system of 1-D equations with one statement flag per equation.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub variables: Vec<String>,
    pub parameters: BTreeMap<String, f64>,
    pub equations: Vec<Equation>,
    pub statements: Vec<Statement>,
}

fn split_relation(line: &str) -> Result<(String, String, Statement)> {
    let mut found = None;
    for (i, ch) in line.char_indices() {
        let st = match ch {
            '=' => Statement::Strong,
            '~' | '≈' => Statement::Weak,
            _ => continue,
        };
        if found.is_some() {
            return Err(Error::Expression(format!("more than one relation symbol in '{line}'")));
        }
        found = Some((i, ch.len_utf8(), st));
    }
    let (i, w, st) = found.ok_or_else(|| Error::Expression(format!("no relation symbol ('=' or '~') in '{line}'")))?;
    Ok((line[..i].to_string(), line[i + w..].to_string(), st))
}

fn classify(e: &Expr, nvars: usize) -> Result<Vec<Term>> {
    let mut out = Vec::new();
    for (coef, atom) in expr::linearize(e)? {
        let time = matches!(atom, Atom::Dt(_));
        match atom {
            Atom::One => out.push(Term::Source(coef)),
            Atom::Dt(inner) | Atom::Dx(inner) if coef.is_constant() => {
                let k = coef.eval(&[]);
                if k == 0.0 {
                    continue;
                }
                out.push(if time {
                    Term::TimeDerivative { coef: k, expr: inner }
                } else {
                    Term::Flux { coef: k, expr: inner }
                });
            }
            Atom::Dt(inner) | Atom::Dx(inner) => {
                // g·d(E) = Σ_v g ∂E/∂v · d(v)
                for v in 0..nvars {
                    let d = inner.diff(v);
                    if d.is_constant() && d.eval(&[]) == 0.0 {
                        continue;
                    }
                    out.push(Term::Nonconservative { coeff: expr::mul(coef.clone(), d), var: v, time });
                }
            }
        }
    }
    Ok(out)
}

fn compile(terms: &[Term], names: &[String]) -> Compiled {
    let n = names.len();
    let mut p: Vec<Expr> = vec![Expr::Num(0.0); n];
    let mut q: Vec<Expr> = vec![Expr::Num(0.0); n];
    let mut time_jumps = Vec::new();
    let mut flux_jumps = Vec::new();
    let mut nonconservative = Vec::new();
    for t in terms {
        match t {
            Term::TimeDerivative { coef, expr: e } | Term::Flux { coef, expr: e } => {
                let time = matches!(t, Term::TimeDerivative { .. });
                for v in 0..n {
                    let d = expr::mul(Expr::Num(*coef), e.diff(v));
                    let slot = if time { &mut q[v] } else { &mut p[v] };
                    *slot = expr::add(slot.clone(), d);
                }
                let entry = (*coef, e.compile());
                if time {
                    time_jumps.push(entry);
                } else {
                    flux_jumps.push(entry);
                }
            }
            Term::Nonconservative { coeff, var, time } => {
                let slot = if *time { &mut q[*var] } else { &mut p[*var] };
                *slot = expr::add(slot.clone(), coeff.clone());
                let op = if *time { "dt" } else { "dx" };
                let label = format!("{}*{op}({})", coeff.display(names), names[*var]);
                nonconservative.push((coeff.compile(), *var, *time, label));
            }
            Term::Source(_) => {}
        }
    }
    let prog = |e: Expr| if e.is_constant() && e.eval(&[]) == 0.0 { None } else { Some(e.compile()) };
    Compiled {
        p: p.into_iter().map(prog).collect(),
        q: q.into_iter().map(prog).collect(),
        time_jumps,
        flux_jumps,
        nonconservative,
    }
}

impl SystemSpec {
    /// Parse equations like `dt(u) + dx(u^2/2) = dx(sigma)`; `=` marks a strong
    /// statement and `~` (or `≈`) a weak one. Parameters are substituted as constants.
    pub fn new(variables: &[&str], parameters: &[(&str, f64)], equations: &[&str]) -> Result<Self> {
        if variables.is_empty() || variables.len() > MAX_VARS {
            return Err(Error::InvalidInput(format!("need 1..={MAX_VARS} variables, got {}", variables.len())));
        }
        if equations.is_empty() {
            return Err(Error::InvalidInput("system needs at least one equation".into()));
        }
        let names: Vec<String> = variables.iter().map(|s| s.to_string()).collect();
        let params: BTreeMap<String, f64> = parameters.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) || params.contains_key(n) || ["dt", "dx", "exp", "ln", "sqrt"].contains(&n.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate or reserved name '{n}'")));
            }
        }
        let scope = Scope { variables: &names, parameters: &params };
        let mut eqs = Vec::new();
        let mut statements = Vec::new();
        for line in equations {
            let (lhs, rhs, st) = split_relation(line)?;
            let l = expr::parse(&lhs, &scope)?;
            let r = expr::parse(&rhs, &scope)?;
            let terms = classify(&expr::sub(l, r), names.len())?;
            if !terms.iter().any(|t| !matches!(t, Term::Source(_))) {
                return Err(Error::Expression(format!("equation '{line}' has no derivative term")));
            }
            let compiled = compile(&terms, &names);
            eqs.push(Equation { source: line.trim().to_string(), terms, compiled });
            statements.push(st);
        }
        Ok(SystemSpec { variables: names, parameters: params, equations: eqs, statements })
    }

    /// The same equations under another statement vector.
    pub fn with_statements(&self, statements: &[Statement]) -> Result<Self> {
        if statements.len() != self.equations.len() {
            return Err(Error::StatementVector(format!(
                "{} flags for {} equations",
                statements.len(),
                self.equations.len()
            )));
        }
        let mut s = self.clone();
        s.statements = statements.to_vec();
        Ok(s)
    }

    /// u_t + (u²/2)_x = σ_x, σ_t + uσ_x = k²u_x, with u·u_x written as a flux
    /// when `conservative_first` is set.
    pub fn elastic_model(k2: f64, statements: [Statement; 2], conservative_first: bool) -> Result<Self> {
        let rel = |s: Statement| if s == Statement::Strong { "=" } else { "~" };
        let first = if conservative_first { "dt(u) + dx(u^2/2)" } else { "dt(u) + u*dx(u)" };
        SystemSpec::new(
            &["u", "sigma"],
            &[("k2", k2)],
            &[
                &format!("{first} {} dx(sigma)", rel(statements[0])),
                &format!("dt(sigma) + u*dx(sigma) {} k2*dx(u)", rel(statements[1])),
            ],
        )
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown variable '{name}'")))
    }

    pub fn statement_vector(&self) -> String {
        statement_vector(&self.statements)
    }

    fn strong(&self) -> Vec<usize> {
        (0..self.equations.len()).filter(|&e| self.statements[e] == Statement::Strong).collect()
    }
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (e, st) in self.equations.iter().zip(&self.statements) {
            writeln!(f, "[{}] {}", st.symbol(), e.source)?;
        }
        Ok(())
    }
}

/// Shock speed from the Rankine–Hugoniot relation c = [f]/[u].
pub fn rankine_hugoniot<F: Fn(f64) -> f64>(flux: F, ul: f64, ur: f64) -> Result<f64> {
    let du = ur - ul;
    if du == 0.0 || !du.is_finite() {
        return Err(Error::InvalidInput("Rankine–Hugoniot needs a nonzero jump".into()));
    }
    Ok((flux(ur) - flux(ul)) / du)
}

/// Pairing coefficient A = ∫ H K′ dξ between two Heaviside profiles.
pub fn pairing_coefficient(h: &Profile, k: &Profile) -> Result<f64> {
    if !h.is_heaviside() || !k.is_heaviside() {
        return Err(Error::InvalidInput(format!(
            "pairing needs Heaviside profiles, got {:?} and {:?}",
            h.kind, k.kind
        )));
    }
    let (a, b) = k.support();
    let mut bp: Vec<f64> = h.breakpoints().into_iter().chain(k.breakpoints()).filter(|x| *x > a && *x < b).collect();
    bp.sort_by(f64::total_cmp);
    bp.dedup();
    integrate(|x| h.value(x) * k.derivative(x, 1), a, b, &bp, &QuadOptions::default())
}

// ---------------------------------------------------------------------------
// Relations in the driver parameter.

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Fixed {
    Same,
    Power(u32),
}

/// Profile assumption replacing missing strong statements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProfileAssumption {
    /// Every variable shares the same Heaviside profile.
    Shared,
    /// H_variable = (H_of)^n.
    Power { variable: String, of: String, n: u32 },
}

/// Relations R_v(s) and slopes R_v'(s) on a uniform s-grid.
#[derive(Debug, Clone, Default)]
pub struct RelationTable {
    pub s: Vec<f64>,
    pub r: Vec<Vec<f64>>,
    pub dr: Vec<Vec<f64>>,
}

impl RelationTable {
    pub fn hermite(&self, v: usize) -> Result<HermiteTable> {
        HermiteTable::new(self.s.clone(), self.r[v].clone(), self.dr[v].clone())
    }

    fn simpson(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        let n = self.s.len() - 1;
        let h = 1.0 / n as f64;
        let mut acc = f(0) + f(n);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i);
        }
        acc * h / 3.0
    }

    /// ∫ R_w R_v' ds, the pairing coefficient of the two profiles.
    pub fn pairing(&self, w: usize, v: usize) -> f64 {
        self.simpson(|i| self.r[w][i] * self.dr[v][i])
    }
}

#[derive(Debug, Clone)]
struct Frame<'a> {
    sys: &'a SystemSpec,
    c: f64,
    left: Vec<f64>,
    jump: Vec<f64>,
    driver: usize,
    fixed: Vec<(usize, Fixed)>,
    determined: Vec<usize>,
    strong: Vec<usize>,
}

fn solve_small(m: &mut [[f64; MAX_VARS]; MAX_VARS], b: &mut [f64; MAX_VARS], n: usize) -> Option<()> {
    if n == 0 {
        return Some(());
    }
    let scale = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m[i][j].abs()).fold(0.0, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-12 * scale {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= m[col][k] * b[k];
        }
        b[col] = acc / m[col][col];
    }
    Some(())
}

impl<'a> Frame<'a> {
    fn nvars(&self) -> usize {
        self.sys.variables.len()
    }

    /// Known relations (driver and assumption-fixed) at s: (value, slope).
    fn known(&self, v: usize, s: f64) -> Option<(f64, f64)> {
        if v == self.driver {
            return Some((s, 1.0));
        }
        self.fixed.iter().find(|(w, _)| *w == v).map(|(_, f)| match f {
            Fixed::Same => (s, 1.0),
            Fixed::Power(n) => (s.powi(*n as i32), *n as f64 * s.powi(*n as i32 - 1)),
        })
    }

    fn fill(&self, s: f64, rd: &[f64], r: &mut [f64; MAX_VARS], dr: &mut [f64; MAX_VARS], vars: &mut [f64; MAX_VARS]) {
        for v in 0..self.nvars() {
            if let Some((x, dx)) = self.known(v, s) {
                r[v] = x;
                dr[v] = dx;
            } else {
                r[v] = 0.0;
                dr[v] = 0.0;
            }
        }
        for (j, &v) in self.determined.iter().enumerate() {
            r[v] = rd[j];
        }
        for v in 0..self.nvars() {
            vars[v] = self.left[v] + self.jump[v] * r[v];
        }
    }

    /// Slopes of the determined relations from the strong rows.
    fn slopes(&self, s: f64, rd: &[f64], out: &mut [f64]) -> Option<()> {
        let (mut r, mut dr, mut vars) = ([0.0; MAX_VARS], [0.0; MAX_VARS], [0.0; MAX_VARS]);
        self.fill(s, rd, &mut r, &mut dr, &mut vars);
        let m = self.determined.len();
        let mut mat = [[0.0; MAX_VARS]; MAX_VARS];
        let mut rhs = [0.0; MAX_VARS];
        for (i, &e) in self.strong.iter().enumerate() {
            let eq = &self.sys.equations[e];
            let mut b = 0.0;
            for v in 0..self.nvars() {
                if !eq.involves(v) {
                    continue;
                }
                let a = eq.coefficient(v, self.c, &vars[..self.nvars()]) * self.jump[v];
                match self.determined.iter().position(|&w| w == v) {
                    Some(j) => mat[i][j] = a,
                    None => b -= a * dr[v],
                }
            }
            rhs[i] = b;
        }
        solve_small(&mut mat, &mut rhs, m)?;
        for j in 0..m {
            if !rhs[j].is_finite() {
                return None;
            }
            out[j] = rhs[j];
        }
        Some(())
    }

    /// RK4 from R(0) = 0 over n uniform steps.
    fn integrate(&self, n: usize) -> Option<RelationTable> {
        let nv = self.nvars();
        let m = self.determined.len();
        let h = 1.0 / n as f64;
        let mut s_nodes = Vec::with_capacity(n + 1);
        let mut r = vec![Vec::with_capacity(n + 1); nv];
        let mut dr = vec![Vec::with_capacity(n + 1); nv];
        let mut y = vec![0.0; m];
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        for i in 0..=n {
            let s = i as f64 * h;
            self.slopes(s, &y, &mut k1)?;
            s_nodes.push(s);
            for v in 0..nv {
                if let Some((x, d)) = self.known(v, s) {
                    r[v].push(x);
                    dr[v].push(d);
                } else if let Some(j) = self.determined.iter().position(|&w| w == v) {
                    r[v].push(y[j]);
                    dr[v].push(k1[j]);
                } else {
                    r[v].push(0.0);
                    dr[v].push(0.0);
                }
            }
            if i == n || m == 0 {
                continue;
            }
            for j in 0..m {
                tmp[j] = y[j] + 0.5 * h * k1[j];
            }
            self.slopes(s + 0.5 * h, &tmp, &mut k2)?;
            for j in 0..m {
                tmp[j] = y[j] + 0.5 * h * k2[j];
            }
            self.slopes(s + 0.5 * h, &tmp, &mut k3)?;
            for j in 0..m {
                tmp[j] = y[j] + h * k3[j];
            }
            self.slopes(s + h, &tmp, &mut k4)?;
            for j in 0..m {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                if !y[j].is_finite() || y[j].abs() > 1e6 {
                    return None;
                }
            }
        }
        Some(RelationTable { s: s_nodes, r, dr })
    }

    /// Integrated jump of equation e: conservative part plus nonconservative pairings.
    fn weak_jump(&self, e: usize, table: &RelationTable) -> f64 {
        let eq = &self.sys.equations[e];
        let nv = self.nvars();
        let right: Vec<f64> = (0..nv).map(|v| self.left[v] + self.jump[v]).collect();
        let mut total = eq.conservative_jump(self.c, &self.left, &right);
        for (g, v, time, _) in &eq.compiled.nonconservative {
            total += self.nonconservative_integral(g, *v, *time, table);
        }
        total
    }

    fn nonconservative_integral(&self, g: &Program, v: usize, time: bool, table: &RelationTable) -> f64 {
        let nv = self.nvars();
        let factor = if time { -self.c } else { 1.0 };
        let mut vars = [0.0; MAX_VARS];
        factor
            * self.jump[v]
            * table.simpson(|i| {
                for w in 0..nv {
                    vars[w] = self.left[w] + self.jump[w] * table.r[w][i];
                }
                g.eval(&vars[..nv]) * table.dr[v][i]
            })
    }

    /// Endpoint residuals R_v(1) − 1 followed by weak jumps.
    fn residual(&self, table: &RelationTable) -> Vec<f64> {
        let mut out: Vec<f64> = self.determined.iter().map(|&v| table.r[v].last().unwrap() - 1.0).collect();
        for e in 0..self.sys.equations.len() {
            if !self.strong.contains(&e) {
                out.push(self.weak_jump(e, table));
            }
        }
        out
    }

    /// Sup over cell midpoints of the strong-row residual with cubic Hermite relations.
    fn ode_residual(&self, table: &RelationTable) -> Result<f64> {
        let nv = self.nvars();
        let tables: Vec<HermiteTable> = (0..nv).map(|v| table.hermite(v)).collect::<Result<_>>()?;
        let mut worst: f64 = 0.0;
        let mut vars = [0.0; MAX_VARS];
        let n = table.s.len() - 1;
        for i in 0..n {
            let s = 0.5 * (table.s[i] + table.s[i + 1]);
            for v in 0..nv {
                vars[v] = self.left[v] + self.jump[v] * tables[v].eval(s, 0);
            }
            for &e in &self.strong {
                let eq = &self.sys.equations[e];
                let row: f64 = (0..nv)
                    .filter(|&v| eq.involves(v))
                    .map(|v| eq.coefficient(v, self.c, &vars[..nv]) * self.jump[v] * tables[v].eval(s, 1))
                    .sum();
                worst = worst.max(row.abs());
            }
        }
        Ok(worst)
    }

    /// Smallest |pivot| of the strong-row matrix along s, relative to its scale.
    fn conditioning(&self) -> f64 {
        let m = self.determined.len();
        if m == 0 {
            return 1.0;
        }
        let mut worst = f64::INFINITY;
        // Probe along the straight path R = s; the actual relations are unknown yet.
        for i in 0..=32 {
            let s = i as f64 / 32.0;
            let rd = vec![s; m];
            let (mut r, mut dr, mut vars) = ([0.0; MAX_VARS], [0.0; MAX_VARS], [0.0; MAX_VARS]);
            self.fill(s, &rd, &mut r, &mut dr, &mut vars);
            let mut mat = [[0.0; MAX_VARS]; MAX_VARS];
            let mut scale: f64 = 0.0;
            for (a, &e) in self.strong.iter().enumerate() {
                for (b, &v) in self.determined.iter().enumerate() {
                    let eq = &self.sys.equations[e];
                    mat[a][b] = if eq.involves(v) { eq.coefficient(v, self.c, &vars[..self.nvars()]) * self.jump[v] } else { 0.0 };
                    scale = scale.max(mat[a][b].abs());
                }
            }
            let d = det(&mat, m).abs() / scale.max(1e-300).powi(m as i32);
            worst = worst.min(if d.is_finite() { d } else { 0.0 });
        }
        worst
    }
}

fn det(m: &[[f64; MAX_VARS]; MAX_VARS], n: usize) -> f64 {
    let mut a = *m;
    let mut d = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            d = -d;
        }
        d *= a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    d
}

// ---------------------------------------------------------------------------
// Single strong equation.

/// Input for `propagate_strong_profile`: a wave with a known driver profile
/// and one unknown profile. `speed = None` lets the endpoint condition fix c.
#[derive(Debug, Clone)]
pub struct WaveData {
    pub speed: Option<f64>,
    pub left: Vec<f64>,
    pub jumps: Vec<f64>,
    pub driver: usize,
    pub driver_profile: Profile,
    pub unknown: usize,
}

#[derive(Debug, Clone)]
pub struct StrongProfile {
    pub profile: Profile,
    pub speed: f64,
    /// H_unknown as a function of H_driver on [0, 1].
    pub relation: HermiteTable,
    pub endpoint_residual: f64,
    /// True when c came from the endpoint condition.
    pub speed_from_endpoint: bool,
}

/// Determine the unknown profile from one equation read strongly.
pub fn propagate_strong_profile(system: &SystemSpec, equation: usize, wave: &WaveData) -> Result<StrongProfile> {
    let nv = system.variables.len();
    let eq = system
        .equations
        .get(equation)
        .ok_or_else(|| Error::InvalidInput(format!("no equation {equation}")))?;
    if wave.left.len() != nv || wave.jumps.len() != nv || wave.driver >= nv || wave.unknown >= nv || wave.driver == wave.unknown {
        return Err(Error::InvalidInput("wave data does not match the system variables".into()));
    }
    if !wave.driver_profile.is_heaviside() {
        return Err(Error::InvalidInput("driver profile must be a Heaviside profile".into()));
    }
    for v in 0..nv {
        if v != wave.driver && v != wave.unknown && wave.jumps[v] != 0.0 && eq.involves(v) {
            return Err(Error::InvalidInput(format!(
                "variable '{}' jumps but has no profile; only one known profile is supported",
                system.variables[v]
            )));
        }
    }
    if wave.jumps[wave.unknown] == 0.0 || wave.jumps[wave.driver] == 0.0 {
        return Err(Error::InvalidInput("zero jump: the wave is not a shock in these variables".into()));
    }
    let mut frame = Frame {
        sys: system,
        c: 0.0,
        left: wave.left.clone(),
        jump: wave.jumps.clone(),
        driver: wave.driver,
        fixed: Vec::new(),
        determined: vec![wave.unknown],
        strong: vec![equation],
    };
    let endpoint = |frame: &Frame, n: usize| frame.integrate(n).map(|t| *t.r[wave.unknown].last().unwrap() - 1.0);

    let (c, from_endpoint) = match wave.speed {
        Some(c) => (c, false),
        None if eq.is_conservative() => {
            let right: Vec<f64> = (0..nv).map(|v| wave.left[v] + wave.jumps[v]).collect();
            let f = eq.conservative_jump(0.0, &wave.left, &right);
            let t = f - eq.conservative_jump(1.0, &wave.left, &right);
            if t == 0.0 {
                return Err(Error::NoStrongSolution("no time-derivative jump: speed undetermined".into()));
            }
            (f / t, true)
        }
        None => (endpoint_speed(&mut frame, |fr| endpoint(fr, SEARCH_NODES))?, true),
    };
    frame.c = c;
    let table = frame.integrate(PROFILE_NODES).ok_or_else(|| {
        Error::NoStrongSolution(format!("profile ODE is singular along the path at c = {c}"))
    })?;
    let end = table.r[wave.unknown].last().unwrap() - 1.0;
    if end.abs() > 1e-8 {
        return Err(Error::NoStrongSolution(format!(
            "endpoint condition fails: H({}) reaches {} instead of 1 at c = {c}",
            system.variables[wave.unknown],
            end + 1.0
        )));
    }
    let relation = table.hermite(wave.unknown)?;
    let label = format!("{}[strong {}]", system.variables[wave.unknown], equation + 1);
    let profile = composed_heaviside(relation.clone(), &wave.driver_profile, label)?;
    Ok(StrongProfile { profile, speed: c, relation, endpoint_residual: end, speed_from_endpoint: from_endpoint })
}

/// Scan c for sign changes of the endpoint residual, then refine by Brent.
fn endpoint_speed(frame: &mut Frame, f: impl Fn(&Frame) -> Option<f64>) -> Result<f64> {
    let scale = frame
        .left
        .iter()
        .zip(&frame.jump)
        .map(|(l, j)| l.abs().max((l + j).abs()).max(j.abs()))
        .fold(1.0, f64::max);
    let center = frame.left[frame.driver] + 0.5 * frame.jump[frame.driver];
    let n = 240;
    let grid: Vec<f64> = (0..=n).map(|i| center - 4.0 * scale + 8.0 * scale * i as f64 / n as f64).collect();
    let vals: Vec<Option<f64>> = grid
        .iter()
        .map(|&c| {
            frame.c = c;
            f(frame).filter(|v| v.is_finite())
        })
        .collect();
    for i in 0..n {
        if let (Some(a), Some(b)) = (vals[i], vals[i + 1]) {
            if a == 0.0 {
                return Ok(grid[i]);
            }
            if a * b < 0.0 {
                let mut fr = frame.clone();
                return brent(
                    |c| {
                        fr.c = c;
                        f(&fr).unwrap_or(f64::NAN)
                    },
                    grid[i],
                    grid[i + 1],
                    1e-14,
                    200,
                );
            }
        }
    }
    Err(Error::NoStrongSolution(format!(
        "no speed in [{:.3}, {:.3}] makes the profile reach its right state",
        grid[0], grid[n]
    )))
}

// ---------------------------------------------------------------------------
// Mixed statements.

/// Left state plus whatever is known on the right; `None` entries are solved for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownState {
    pub left: Vec<f64>,
    pub right: Vec<Option<f64>>,
    pub speed: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClosureOptions {
    pub assumption: Option<ProfileAssumption>,
    pub max_iter: usize,
    pub tolerance: f64,
    pub nodes: usize,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        ClosureOptions { assumption: None, max_iter: 100, tolerance: 1e-10, nodes: PROFILE_NODES }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingCoefficient {
    pub other: String,
    pub variable: String,
    /// ∫ H_other H_variable′ dξ
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingTerm {
    pub equation: usize,
    pub term: String,
    /// [v]·∫ g(vars) H_v′ dξ, the term's contribution to the jump.
    pub contribution: f64,
    pub coefficients: Vec<PairingCoefficient>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub endpoint: Vec<f64>,
    pub weak: Vec<f64>,
    pub profile_ode_sup: f64,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JumpResult {
    pub variables: Vec<String>,
    pub speed: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub jumps: Vec<f64>,
    pub statements: Vec<Statement>,
    pub statement_vector: String,
    pub assumption: Option<ProfileAssumption>,
    pub driver: String,
    pub pairings: Vec<PairingTerm>,
    pub diagnostics: Diagnostics,
    pub branch: usize,
    pub branch_count: usize,
    #[serde(skip)]
    pub relations: RelationTable,
}

impl JumpResult {
    /// Profiles of every variable, built on the given driver profile.
    pub fn profiles(&self, driver_profile: &Profile) -> Result<Vec<Profile>> {
        (0..self.variables.len())
            .map(|v| composed_heaviside(self.relations.hermite(v)?, driver_profile, self.variables[v].clone()))
            .collect()
    }

    /// Look up A(other, variable) among the reported pairings.
    pub fn pairing(&self, other: &str, variable: &str) -> Option<f64> {
        self.pairings
            .iter()
            .flat_map(|p| &p.coefficients)
            .find(|c| c.other == other && c.variable == variable)
            .map(|c| c.value)
    }
}

struct Setup {
    strong: Vec<usize>,
    fixed: Vec<(usize, Fixed)>,
    drivers: Vec<usize>,
    unknowns: Vec<Unknown>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Unknown {
    Speed,
    Right(usize),
}

fn setup(system: &SystemSpec, known: &KnownState, opts: &ClosureOptions) -> Result<Setup> {
    let nv = system.variables.len();
    let ne = system.equations.len();
    if known.left.len() != nv || known.right.len() != nv {
        return Err(Error::InvalidInput(format!("state vectors must have {nv} entries")));
    }
    let strong = system.strong();
    let (fixed, forced_driver): (Vec<(usize, Fixed)>, Option<usize>) = match &opts.assumption {
        None => (Vec::new(), None),
        Some(ProfileAssumption::Shared) => ((1..nv).map(|v| (v, Fixed::Same)).collect(), Some(0)),
        Some(ProfileAssumption::Power { variable, of, n }) => {
            let (v, d) = (system.var_index(variable)?, system.var_index(of)?);
            if v == d || *n == 0 {
                return Err(Error::InvalidInput("power assumption needs two distinct variables and n ≥ 1".into()));
            }
            (vec![(v, Fixed::Power(*n))], Some(d))
        }
    };
    if ne != nv {
        return Err(Error::StatementVector(format!("{ne} equations for {nv} variables; a single wave needs a square system")));
    }
    let needed = nv - 1 - fixed.len();
    if strong.len() == nv && opts.assumption.is_none() {
        return Err(Error::StatementVector(format!(
            "all {nv} equations strong: the profiles are over-determined; use the strong/strong compatibility check"
        )));
    }
    if strong.len() != needed {
        let why = if strong.len() > needed { "over-determined" } else { "under-determined" };
        return Err(Error::StatementVector(format!(
            "{} has {} strong statements but {needed} profile relations are free: {why}{}",
            system.statement_vector(),
            strong.len(),
            if opts.assumption.is_none() && strong.len() < needed { " (add a profile assumption or strengthen a statement)" } else { "" }
        )));
    }
    let mut unknowns = Vec::new();
    if known.speed.is_none() {
        unknowns.push(Unknown::Speed);
    }
    for (v, r) in known.right.iter().enumerate() {
        if r.is_none() {
            unknowns.push(Unknown::Right(v));
        }
    }
    if unknowns.len() != nv {
        return Err(Error::StatementVector(format!(
            "{} unknowns for {nv} jump conditions; leave exactly {nv} of (c, right states) free",
            unknowns.len()
        )));
    }
    let drivers: Vec<usize> = match forced_driver {
        Some(d) => vec![d],
        None => {
            // Time variables of strong equations first.
            let mut v: Vec<usize> = strong.iter().filter_map(|&e| system.equations[e].time_variable()).collect();
            v.extend(0..nv);
            let mut seen = Vec::new();
            v.retain(|x| {
                let fresh = !seen.contains(x);
                seen.push(*x);
                fresh
            });
            v
        }
    };
    Ok(Setup { strong, fixed, drivers, unknowns })
}

struct Problem<'a> {
    system: &'a SystemSpec,
    known: &'a KnownState,
    setup: Setup,
}

impl<'a> Problem<'a> {
    fn frame(&self, x: &[f64], driver: usize) -> Frame<'a> {
        let nv = self.system.variables.len();
        let mut right: Vec<f64> = self.known.right.iter().map(|r| r.unwrap_or(f64::NAN)).collect();
        let mut c = self.known.speed.unwrap_or(f64::NAN);
        for (u, val) in self.setup.unknowns.iter().zip(x) {
            match u {
                Unknown::Speed => c = *val,
                Unknown::Right(v) => right[*v] = *val,
            }
        }
        let fixed_vars: Vec<usize> = self.setup.fixed.iter().map(|f| f.0).collect();
        Frame {
            sys: self.system,
            c,
            left: self.known.left.clone(),
            jump: (0..nv).map(|v| right[v] - self.known.left[v]).collect(),
            driver,
            fixed: self.setup.fixed.clone(),
            determined: (0..nv).filter(|v| *v != driver && !fixed_vars.contains(v)).collect(),
            strong: self.setup.strong.clone(),
        }
    }

    fn choose_driver(&self, x: &[f64]) -> usize {
        let mut best = (self.setup.drivers[0], -1.0);
        for &d in &self.setup.drivers {
            let fr = self.frame(x, d);
            if fr.jump[d].abs() < 1e-12 {
                continue;
            }
            let score = fr.conditioning();
            if score > best.1 + 1e-9 {
                best = (d, score);
            }
        }
        best.0
    }

    fn residual(&self, x: &[f64], driver: usize, nodes: usize) -> Option<(Vec<f64>, RelationTable)> {
        let fr = self.frame(x, driver);
        let table = fr.integrate(nodes)?;
        let r = fr.residual(&table);
        r.iter().all(|v| v.is_finite()).then_some((r, table))
    }

    /// Damped Newton with a forward-difference Jacobian. Returns (x, trace, iterations).
    fn newton(&self, x0: &[f64], driver: usize, nodes: usize, opts: &ClosureOptions) -> (Option<Vec<f64>>, Vec<f64>, usize) {
        let n = x0.len();
        let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut x = x0.to_vec();
        let mut trace = Vec::new();
        let Some((mut r, _)) = self.residual(&x, driver, nodes) else {
            return (None, trace, 0);
        };
        let mut rn = norm(&r);
        trace.push(rn);
        for it in 0..opts.max_iter {
            if rn < opts.tolerance {
                return (Some(x), trace, it);
            }
            let mut jac = nalgebra::DMatrix::<f64>::zeros(n, n);
            for j in 0..n {
                let h = 1e-7 * x[j].abs().max(1.0);
                let mut xp = x.clone();
                xp[j] += h;
                let Some((rp, _)) = self.residual(&xp, driver, nodes) else {
                    return (None, trace, it);
                };
                for i in 0..n {
                    jac[(i, j)] = (rp[i] - r[i]) / h;
                }
            }
            let rhs = nalgebra::DVector::from_iterator(n, r.iter().map(|v| -v));
            let Some(dx) = jac.lu().solve(&rhs) else {
                return (None, trace, it);
            };
            let mut lambda = 1.0;
            let mut accepted = false;
            while lambda > 1e-6 {
                let xt: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + lambda * d).collect();
                if let Some((rt, _)) = self.residual(&xt, driver, nodes) {
                    let tn = norm(&rt);
                    if tn < rn {
                        x = xt;
                        r = rt;
                        rn = tn;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            trace.push(rn);
            if !accepted {
                return (None, trace, it);
            }
        }
        (if rn < opts.tolerance { Some(x) } else { None }, trace, opts.max_iter)
    }

    fn starts(&self) -> Vec<Vec<f64>> {
        let k = self.known;
        let scale = k
            .left
            .iter()
            .chain(k.right.iter().flatten())
            .chain(k.speed.iter())
            .fold(1.0f64, |m, v| m.max(v.abs()));
        let center = k.left.iter().sum::<f64>() / k.left.len() as f64;
        let per: Vec<Vec<f64>> = self
            .setup
            .unknowns
            .iter()
            .map(|u| match u {
                Unknown::Speed => [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0].iter().map(|f| center + f * scale).collect(),
                Unknown::Right(v) => [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0].iter().map(|f| k.left[*v] + f * scale).collect(),
            })
            .collect();
        let mut out = vec![Vec::new()];
        for opts in &per {
            out = out
                .into_iter()
                .flat_map(|p: Vec<f64>| {
                    opts.iter().map(move |o| {
                        let mut q = p.clone();
                        q.push(*o);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// Close the jump conditions of a mixed statement vector. Every root found
/// from a spread of initial guesses is returned, sorted by decreasing speed
/// and flagged with its branch index; no selection rule is applied.
pub fn mixed_jump_conditions(system: &SystemSpec, known: &KnownState, opts: &ClosureOptions) -> Result<Vec<JumpResult>> {
    let setup = setup(system, known, opts)?;
    let problem = Problem { system, known, setup };
    let starts = problem.starts();

    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(starts.len()).max(1);
    let chunk = starts.len().div_ceil(workers);
    let outcomes: Vec<(Option<(Vec<f64>, usize)>, Vec<f64>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = starts
            .chunks(chunk)
            .map(|group| {
                let problem = &problem;
                scope.spawn(move || {
                    group
                        .iter()
                        .map(|x0| {
                            let d = problem.choose_driver(x0);
                            let (x, trace, _) = problem.newton(x0, d, SEARCH_NODES.min(opts.nodes), opts);
                            (x.map(|x| (x, d)), trace)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("closure worker panicked")).collect()
    });

    let mut roots: Vec<JumpResult> = Vec::new();
    let mut best_trace: Vec<f64> = Vec::new();
    for (found, trace) in outcomes {
        if best_trace.is_empty() || trace.last().copied().unwrap_or(f64::INFINITY) < best_trace.last().copied().unwrap_or(f64::INFINITY) {
            best_trace = trace;
        }
        let Some((x, driver)) = found else { continue };
        let (x, trace, iters) = problem.newton(&x, driver, opts.nodes, opts);
        let Some(x) = x else {
            best_trace = trace;
            continue;
        };
        let fr = problem.frame(&x, driver);
        let scale = fr.jump.iter().fold(0.0f64, |m, j| m.max(j.abs()));
        if fr.jump[driver].abs() < 1e-8 * scale.max(1.0) || fr.determined.iter().any(|&v| fr.jump[v].abs() < 1e-8) {
            continue;
        }
        if roots.iter().any(|r| {
            (r.speed - fr.c).abs() < 1e-7 * (1.0 + fr.c.abs())
                && r.jumps.iter().zip(&fr.jump).all(|(a, b)| (a - b).abs() < 1e-7 * (1.0 + b.abs()))
        }) {
            continue;
        }
        roots.push(build_result(&problem, &fr, opts, iters + trace.len())?);
    }
    if roots.is_empty() {
        return Err(Error::NoClosure {
            reason: format!("no start converged for {}", system.statement_vector()),
            trace: best_trace,
        });
    }
    roots.sort_by(|a, b| b.speed.total_cmp(&a.speed));
    let count = roots.len();
    for (i, r) in roots.iter_mut().enumerate() {
        r.branch = i;
        r.branch_count = count;
    }
    Ok(roots)
}

fn build_result(problem: &Problem, fr: &Frame, opts: &ClosureOptions, iterations: usize) -> Result<JumpResult> {
    let system = problem.system;
    let nv = system.variables.len();
    let table = fr
        .integrate(opts.nodes)
        .ok_or_else(|| Error::NoClosure { reason: "profile ODE failed at the root".into(), trace: vec![] })?;
    let endpoint: Vec<f64> = fr.determined.iter().map(|&v| table.r[v].last().unwrap() - 1.0).collect();
    let weak: Vec<f64> = (0..system.equations.len())
        .filter(|e| !fr.strong.contains(e))
        .map(|e| fr.weak_jump(e, &table))
        .collect();
    let profile_ode_sup = fr.ode_residual(&table)?;
    let mut pairings = Vec::new();
    for (e, eq) in system.equations.iter().enumerate() {
        for (g, v, time, label) in &eq.compiled.nonconservative {
            let coefficients = (0..nv)
                .filter(|w| eq.terms.iter().any(|t| matches!(t, Term::Nonconservative { coeff, var, time: tt } if var == v && tt == time && coeff.uses_var(*w))))
                .map(|w| PairingCoefficient {
                    other: system.variables[w].clone(),
                    variable: system.variables[*v].clone(),
                    value: table.pairing(w, *v),
                })
                .collect();
            pairings.push(PairingTerm {
                equation: e,
                term: label.clone(),
                contribution: fr.nonconservative_integral(g, *v, *time, &table),
                coefficients,
            });
        }
    }
    let right: Vec<f64> = (0..nv).map(|v| fr.left[v] + fr.jump[v]).collect();
    Ok(JumpResult {
        variables: system.variables.clone(),
        speed: fr.c,
        left: fr.left.clone(),
        right,
        jumps: fr.jump.clone(),
        statements: system.statements.clone(),
        statement_vector: system.statement_vector(),
        assumption: opts.assumption.clone(),
        driver: system.variables[fr.driver].clone(),
        pairings,
        diagnostics: Diagnostics { endpoint, weak, profile_ode_sup, newton_iterations: iterations },
        branch: 0,
        branch_count: 0,
        relations: table,
    })
}

// ---------------------------------------------------------------------------
// All-strong statements.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum CompatibilityVerdict {
    Compatible,
    Incompatible,
    InvalidWave { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityProbe {
    pub origin: String,
    pub speed: f64,
    pub right: Vec<f64>,
    /// Largest gap between relation curves (point-set distance) or endpoint miss.
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Compatibility {
    pub verdict: CompatibilityVerdict,
    pub tolerance: f64,
    pub min_discrepancy: f64,
    pub probes: Vec<CompatibilityProbe>,
}

fn invalid(reason: String, tolerance: f64) -> Compatibility {
    Compatibility {
        verdict: CompatibilityVerdict::InvalidWave { reason },
        tolerance,
        min_discrepancy: f64::NAN,
        probes: vec![],
    }
}

fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let d = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let one = |a: &[Vec<f64>], b: &[Vec<f64>]| a.iter().map(|p| b.iter().map(|q| d(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    one(a, b).max(one(b, a))
}

/// Decide whether all-strong statements admit a common profile relation.
///
/// Each strong equation is dropped in turn; the remaining ones determine the
/// relation curve s ↦ (H_v) which must end at (1, …, 1). The curves are
/// compared in the H-cube at several probe parameter sets (the given state
/// with the speeds each equation alone would impose, and the closures obtained
/// by weakening one equation). The verdict is incompatible iff every probe
/// shows a discrepancy above `tolerance`.
pub fn strong_strong_compatibility(system: &SystemSpec, left: &[f64], right: &[f64], speed: Option<f64>, tolerance: f64) -> Compatibility {
    let nv = system.variables.len();
    if left.len() != nv || right.len() != nv {
        return invalid(format!("state vectors must have {nv} entries"), tolerance);
    }
    if system.statements.iter().any(|s| *s != Statement::Strong) {
        return invalid(format!("{} is not all-strong", system.statement_vector()), tolerance);
    }
    if let Some(v) = (0..nv).find(|&v| right[v] == left[v]) {
        return invalid(format!("zero jump in '{}'", system.variables[v]), tolerance);
    }
    let ne = system.equations.len();
    if ne <= 1 {
        return Compatibility { verdict: CompatibilityVerdict::Compatible, tolerance, min_discrepancy: 0.0, probes: vec![] };
    }
    if ne != nv {
        return invalid(format!("{ne} equations for {nv} variables"), tolerance);
    }
    let jump: Vec<f64> = (0..nv).map(|v| right[v] - left[v]).collect();
    let subsets: Vec<Vec<usize>> = (0..ne).map(|drop| (0..ne).filter(|e| *e != drop).collect()).collect();

    let frame_for = |subset: &Vec<usize>, c: f64, left: &[f64], jump: &[f64], driver: usize| Frame {
        sys: system,
        c,
        left: left.to_vec(),
        jump: jump.to_vec(),
        driver,
        fixed: vec![],
        determined: (0..nv).filter(|v| *v != driver).collect(),
        strong: subset.clone(),
    };
    let best_frame = |subset: &Vec<usize>, c: f64, left: &[f64], jump: &[f64]| {
        let mut order: Vec<usize> = subset.iter().filter_map(|&e| system.equations[e].time_variable()).collect();
        order.extend(0..nv);
        order
            .into_iter()
            .map(|d| frame_for(subset, c, left, jump, d))
            .map(|f| {
                let k = f.conditioning();
                (f, k)
            })
            .fold(None::<(Frame, f64)>, |acc, (f, k)| match acc {
                Some((g, kg)) if kg + 1e-9 >= k => Some((g, kg)),
                _ => Some((f, k)),
            })
            .unwrap()
            .0
    };

    // Probe parameter sets.
    let mut probes: Vec<(String, f64, Vec<f64>)> = Vec::new();
    if let Some(c) = speed {
        probes.push(("given".into(), c, right.to_vec()));
    }
    for (i, subset) in subsets.iter().enumerate() {
        let mut f = best_frame(subset, 0.0, left, &jump);
        let first = f.determined[0];
        if let Ok(c) = endpoint_speed(&mut f, |fr| fr.integrate(SEARCH_NODES).map(|t| t.r[first].last().unwrap() - 1.0)) {
            probes.push((format!("speed without equation {}", i + 1), c, right.to_vec()));
        }
    }
    for weak in 0..ne {
        let mut st = vec![Statement::Strong; ne];
        st[weak] = Statement::Weak;
        let Ok(mixed) = system.with_statements(&st) else { continue };
        let known = KnownState {
            left: left.to_vec(),
            right: (0..nv).map(|v| if v == 0 { Some(right[0]) } else { None }).collect(),
            speed: None,
        };
        if let Ok(list) = mixed_jump_conditions(&mixed, &known, &ClosureOptions { nodes: SEARCH_NODES, ..Default::default() }) {
            for r in list {
                probes.push((format!("closure {}", mixed.statement_vector()), r.speed, r.right.clone()));
            }
        }
    }

    let mut records = Vec::new();
    for (origin, c, r) in probes {
        let jump: Vec<f64> = (0..nv).map(|v| r[v] - left[v]).collect();
        let mut curves = Vec::new();
        let mut disc: f64 = 0.0;
        for subset in &subsets {
            let f = best_frame(subset, c, left, &jump);
            match f.integrate(SEARCH_NODES) {
                Some(t) => {
                    for v in 0..nv {
                        disc = disc.max((t.r[v].last().unwrap() - 1.0).abs());
                    }
                    let pts: Vec<Vec<f64>> = (0..t.s.len()).step_by(4).map(|i| (0..nv).map(|v| t.r[v][i]).collect()).collect();
                    curves.push(pts);
                }
                None => disc = f64::INFINITY,
            }
        }
        for i in 0..curves.len() {
            for j in i + 1..curves.len() {
                disc = disc.max(hausdorff(&curves[i], &curves[j]));
            }
        }
        records.push(CompatibilityProbe { origin, speed: c, right: r, discrepancy: disc });
    }
    let min = records.iter().map(|p| p.discrepancy).fold(f64::INFINITY, f64::min);
    let verdict = if min > tolerance { CompatibilityVerdict::Incompatible } else { CompatibilityVerdict::Compatible };
    Compatibility { verdict, tolerance, min_discrepancy: min, probes: records }
}
