//! Static checks run before a strategy is admitted.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

/// Where in the program a diagnostic points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "section", content = "index")]
pub enum Location {
    Header,
    FirstMove,
    Register(usize),
    /// 1-based rule index.
    Rule(usize),
    Default,
    /// 1-based update index.
    Update(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub location: Location,
    pub message: String,
}

impl Diagnostic {
    pub fn rule_index(&self) -> Option<usize> {
        match self.location {
            Location::Rule(i) => Some(i),
            _ => None,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        let loc = match self.location {
            Location::Header => "header".to_string(),
            Location::FirstMove => "first".to_string(),
            Location::Register(i) => format!("register {}", i + 1),
            Location::Rule(i) => format!("rule {i}"),
            Location::Default => "default".to_string(),
            Location::Update(i) => format!("update {i}"),
        };
        write!(f, "{sev} [{loc}]: {}", self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Int,
    Num,
    Bool,
    Act,
}

impl Ty {
    fn name(self) -> &'static str {
        match self {
            Ty::Int => "integer",
            Ty::Num => "number",
            Ty::Bool => "boolean",
            Ty::Act => "action",
        }
    }

    fn numeric(self) -> bool {
        matches!(self, Ty::Int | Ty::Num)
    }
}

struct Checker<'a> {
    spec: &'a StrategySpec,
    out: Vec<Diagnostic>,
    loc: Location,
}

impl Checker<'_> {
    fn error(&mut self, message: String) {
        self.out.push(Diagnostic { severity: Severity::Error, location: self.loc, message });
    }

    fn warn(&mut self, message: String) {
        self.out.push(Diagnostic { severity: Severity::Warning, location: self.loc, message });
    }

    fn check_move(&mut self, m: &Move) {
        if let Move::Mix(p) = m {
            if !(0.0..=1.0).contains(p) {
                self.error(format!("probability {p} outside [0, 1]"));
            }
        }
    }

    fn check_var(&mut self, v: &Var) {
        let declared = self.spec.registers.iter().position(|r| r.name == v.name);
        match (declared, v.slot) {
            (None, _) => self.error(format!("undeclared register `{}`", v.name)),
            (Some(i), Some(s)) if i == s => {}
            _ => self.error(format!("register `{}` is not bound to its declaration", v.name)),
        }
    }

    /// Infers the type of `e`, reporting problems; `None` means already reported.
    fn ty(&mut self, e: &Expr) -> Option<Ty> {
        match e {
            Expr::Int(_) => Some(Ty::Int),
            Expr::Num(x) => {
                if !x.is_finite() {
                    self.error("non-finite number literal".into());
                }
                Some(Ty::Num)
            }
            Expr::Bool(_) => Some(Ty::Bool),
            Expr::Act(_) => Some(Ty::Act),
            Expr::Var(v) => {
                self.check_var(v);
                Some(Ty::Int)
            }
            Expr::Get(acc) => Some(match acc {
                Accessor::MyLast(k) | Accessor::OppLast(k) => {
                    self.check_window(*k);
                    Ty::Act
                }
                Accessor::CoopRate(_, w) => {
                    if let Some(w) = w {
                        self.check_window(*w);
                    }
                    Ty::Num
                }
                Accessor::Pattern(_, p) => {
                    if p.is_empty() {
                        self.error("empty pattern".into());
                    }
                    self.check_window(p.len());
                    Ty::Bool
                }
                Accessor::Rand => Ty::Num,
                _ => Ty::Int,
            }),
            Expr::Unary(UnOp::Not, inner) => {
                let t = self.ty(inner)?;
                if t != Ty::Bool {
                    self.error(format!("`not` expects a boolean, found {}", t.name()));
                }
                Some(Ty::Bool)
            }
            Expr::Unary(UnOp::Neg, inner) => {
                let t = self.ty(inner)?;
                if !t.numeric() {
                    self.error(format!("negation expects a number, found {}", t.name()));
                    return None;
                }
                Some(t)
            }
            Expr::Binary(op, l, r) => {
                let (lt, rt) = (self.ty(l), self.ty(r));
                let (lt, rt) = (lt?, rt?);
                use BinOp::*;
                match op {
                    And | Or => {
                        if lt != Ty::Bool || rt != Ty::Bool {
                            self.error(format!("`{}` expects booleans, found {} and {}", op.symbol(), lt.name(), rt.name()));
                        }
                        Some(Ty::Bool)
                    }
                    Eq | Ne => {
                        let ok = (lt.numeric() && rt.numeric()) || lt == rt;
                        if !ok {
                            self.error(format!("cannot compare {} with {}", lt.name(), rt.name()));
                        }
                        Some(Ty::Bool)
                    }
                    Lt | Le | Gt | Ge => {
                        if !lt.numeric() || !rt.numeric() {
                            self.error(format!("`{}` expects numbers, found {} and {}", op.symbol(), lt.name(), rt.name()));
                        }
                        Some(Ty::Bool)
                    }
                    Add | Sub | Mul | Div | Rem => {
                        if !lt.numeric() || !rt.numeric() {
                            self.error(format!("`{}` expects numbers, found {} and {}", op.symbol(), lt.name(), rt.name()));
                            return None;
                        }
                        if matches!(op, Div | Rem) && matches!(r.as_ref(), Expr::Int(0)) {
                            self.error("division by literal zero".into());
                        }
                        Some(if lt == Ty::Int && rt == Ty::Int { Ty::Int } else { Ty::Num })
                    }
                }
            }
            Expr::Call(f, args) => {
                if args.len() != f.arity() {
                    self.error(format!("`{}` takes {} argument(s)", f.name(), f.arity()));
                    return None;
                }
                let tys: Vec<Option<Ty>> = args.iter().map(|a| self.ty(a)).collect();
                let tys: Vec<Ty> = tys.into_iter().collect::<Option<_>>()?;
                if tys.iter().any(|t| !t.numeric()) {
                    self.error(format!("`{}` expects numbers", f.name()));
                    return None;
                }
                Some(if tys.iter().all(|&t| t == Ty::Int) { Ty::Int } else { Ty::Num })
            }
        }
    }

    fn check_window(&mut self, k: usize) {
        if k == 0 {
            self.error("window must be at least 1".into());
        } else if k > MAX_WINDOW {
            self.error(format!("window {k} exceeds {MAX_WINDOW}"));
        }
    }

    fn guard(&mut self, e: &Expr) {
        if let Some(t) = self.ty(e) {
            if t != Ty::Bool {
                self.error(format!("guard must be a boolean, found {}", t.name()));
            }
        }
    }
}

/// Value of an expression that depends on no game state, registers or randomness.
pub fn const_bool(e: &Expr) -> Option<bool> {
    match e {
        Expr::Bool(b) => Some(*b),
        Expr::Unary(UnOp::Not, inner) => const_bool(inner).map(|b| !b),
        Expr::Binary(BinOp::And, l, r) => match (const_bool(l), const_bool(r)) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
        Expr::Binary(BinOp::Or, l, r) => match (const_bool(l), const_bool(r)) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
        _ => None,
    }
}

/// Runs every static check; an empty result means the spec is admissible.
pub fn validate(spec: &StrategySpec) -> Vec<Diagnostic> {
    let mut c = Checker { spec, out: Vec::new(), loc: Location::Header };

    if spec.name.trim().is_empty() {
        c.error("strategy name is empty".into());
    }
    for (what, n) in [("rules", spec.rules.len()), ("registers", spec.registers.len()), ("updates", spec.updates.len())] {
        if n > MAX_ITEMS {
            c.error(format!("{n} {what} exceed the limit of {MAX_ITEMS}"));
        }
    }

    let mut seen = HashSet::new();
    for (i, r) in spec.registers.iter().enumerate() {
        c.loc = Location::Register(i);
        if !seen.insert(r.name.as_str()) {
            c.error(format!("register `{}` declared twice", r.name));
        }
        if r.min > r.max {
            c.error(format!("register `{}` has empty range [{}, {}]", r.name, r.min, r.max));
        } else if !(r.min..=r.max).contains(&r.init) {
            c.error(format!("register `{}` starts at {} outside [{}, {}]", r.name, r.init, r.min, r.max));
        }
    }

    c.loc = Location::FirstMove;
    c.check_move(&spec.first_move);

    let mut shadowed_from = None;
    for (i, rule) in spec.rules.iter().enumerate() {
        c.loc = Location::Rule(i + 1);
        c.guard(&rule.guard);
        c.check_move(&rule.action);
        match const_bool(&rule.guard) {
            Some(true) if shadowed_from.is_none() => shadowed_from = Some(i + 1),
            Some(false) => c.warn("guard is always false; rule never fires".into()),
            _ => {}
        }
    }
    if let Some(i) = shadowed_from {
        c.loc = Location::Rule(i);
        c.warn(format!("rules after index {i} unreachable, including the default"));
    }

    c.loc = Location::Default;
    c.check_move(&spec.default_action);

    for (i, u) in spec.updates.iter().enumerate() {
        c.loc = Location::Update(i + 1);
        c.check_var(&u.target);
        if let Some(t) = c.ty(&u.value) {
            if t != Ty::Int {
                c.error(format!("register `{}` assigned a {}", u.target.name, t.name()));
            }
        }
        if let Some(g) = &u.guard {
            c.guard(g);
        }
        if u.value.uses_rand() || u.guard.as_ref().is_some_and(Expr::uses_rand) {
            c.error("rand() is not allowed in register updates".into());
        }
    }

    c.out
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn diags(src: &str) -> Vec<Diagnostic> {
        validate(&parse(src).unwrap())
    }

    #[test]
    fn allc_is_clean() {
        assert!(diags(r#"strategy "allc" attitude=cooperative { first: C rules: default: C }"#).is_empty());
    }

    #[test]
    fn undeclared_register() {
        let d = diags(r#"strategy "x" attitude=aggressive { first: C rules: if grudge > 0 -> D default: C }"#);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Error);
        assert!(d[0].message.contains("grudge"));
        assert_eq!(d[0].rule_index(), Some(1));
    }

    #[test]
    fn literal_true_shadows_the_rest() {
        let d = diags(r#"strategy "x" attitude=neutral { first: C rules: if true -> D if round > 3 -> C default: C }"#);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Warning);
        assert!(d[0].message.contains("rules after index 1 unreachable"));
    }

    #[test]
    fn type_errors() {
        let d = diags(r#"strategy "x" attitude=neutral { first: C rules: if opp_last(1) < 3 -> D if round -> D default: C }"#);
        assert_eq!(d.iter().filter(|d| d.severity == Severity::Error).count(), 2);
        let d = diags(r#"strategy "x" attitude=neutral { first: C rules: if opp_last(1) == 1 -> D default: C }"#);
        assert!(has_errors(&d));
    }

    #[test]
    fn probabilities_in_range() {
        let d = diags(r#"strategy "x" attitude=neutral { first: mix(1.5) rules: if round > 2 -> mix(0.5) default: C }"#);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].location, Location::FirstMove);
    }

    #[test]
    fn register_checks() {
        let d = diags(
            r#"strategy "x" attitude=neutral { first: C registers: a = 5 in [0, 3] b = 0 in [2, 1] a = 0 in [0, 1]
               rules: default: C updates: a := coop_rate(opp) a := 1 if rand() < 0.5 }"#,
        );
        let errs: Vec<_> = d.iter().filter(|d| d.severity == Severity::Error).collect();
        assert_eq!(errs.len(), 5, "{d:#?}");
    }
}
