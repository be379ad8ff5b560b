//! Interpreter for parsed strategies.
//!
//! `decide` uses checked integer arithmetic and reports overflow as an
//! [`EvalError`]. Register updates saturate and then clamp to the declared
//! bounds, so they can only fail on division by zero.

use std::sync::Arc;

use rand::Rng;

use super::ast::*;
use crate::error::EvalError;
use crate::game::{Action, GameView, Strategy};
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Int(i64),
    Num(f64),
    Bool(bool),
    /// A move, or `None` when the look-back reaches before round 0.
    Act(Option<Action>),
}

impl Value {
    fn type_name(self) -> &'static str {
        match self {
            Value::Int(_) => "integer",
            Value::Num(_) => "number",
            Value::Bool(_) => "boolean",
            Value::Act(_) => "action",
        }
    }

    fn as_num(self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(i as f64),
            Value::Num(x) => Some(x),
            _ => None,
        }
    }
}

/// Per-match register state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registers(pub Vec<i64>);

impl Registers {
    pub fn initial(spec: &StrategySpec) -> Self {
        Registers(spec.registers.iter().map(|r| r.init.clamp(r.min, r.max.max(r.min))).collect())
    }

    pub fn get(&self, slot: usize) -> i64 {
        self.0[slot]
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Arith {
    Checked,
    Saturating,
}

struct Ctx<'v, 'r> {
    view: &'v GameView<'v>,
    regs: &'r [i64],
    rng: Option<&'r mut StreamRng>,
    arith: Arith,
}

fn err<T>(msg: impl Into<String>) -> Result<T, EvalError> {
    Err(EvalError(msg.into()))
}

fn coop_rate(history: &[Action], coops: u32, window: Option<usize>) -> f64 {
    match window {
        None if history.is_empty() => 0.0,
        None => coops as f64 / history.len() as f64,
        Some(w) => {
            let tail = &history[history.len().saturating_sub(w)..];
            if tail.is_empty() {
                0.0
            } else {
                tail.iter().filter(|&&a| a == Action::Cooperate).count() as f64 / tail.len() as f64
            }
        }
    }
}

fn suffix_matches(history: &[Action], pattern: &[Action]) -> bool {
    history.len() >= pattern.len() && history[history.len() - pattern.len()..] == *pattern
}

impl Ctx<'_, '_> {
    fn accessor(&mut self, acc: &Accessor) -> Result<Value, EvalError> {
        let v = self.view;
        Ok(match acc {
            Accessor::Round => Value::Int(v.round() as i64),
            Accessor::TotalRounds => Value::Int(v.total_rounds() as i64),
            Accessor::MyLast(k) => Value::Act(v.my_last(*k)),
            Accessor::OppLast(k) => Value::Act(v.opp_last(*k)),
            Accessor::MyCoops => Value::Int(v.my_coops() as i64),
            Accessor::OppCoops => Value::Int(v.opp_coops() as i64),
            Accessor::MyDefects => Value::Int(v.my_defects() as i64),
            Accessor::OppDefects => Value::Int(v.opp_defects() as i64),
            Accessor::MyScore => Value::Int(v.my_score()),
            Accessor::OppScore => Value::Int(v.opp_score()),
            Accessor::CoopRate(Who::My, w) => Value::Num(coop_rate(v.my_history(), v.my_coops(), *w)),
            Accessor::CoopRate(Who::Opp, w) => Value::Num(coop_rate(v.opp_history(), v.opp_coops(), *w)),
            Accessor::ConsecOppDefects => Value::Int(v.consec_opp_defects() as i64),
            Accessor::ConsecOppCoops => Value::Int(v.consec_opp_coops() as i64),
            Accessor::ConsecMyDefects => Value::Int(v.consec_my_defects() as i64),
            Accessor::ConsecMutualDefects => Value::Int(v.consec_mutual_defects() as i64),
            Accessor::Pattern(Who::My, p) => Value::Bool(suffix_matches(v.my_history(), p)),
            Accessor::Pattern(Who::Opp, p) => Value::Bool(suffix_matches(v.opp_history(), p)),
            Accessor::Rand => match self.rng.as_deref_mut() {
                Some(rng) => Value::Num(rng.gen::<f64>()),
                None => return err("rand() is not available in register updates"),
            },
        })
    }

    fn int_op(&self, op: BinOp, a: i64, b: i64) -> Result<i64, EvalError> {
        if matches!(op, BinOp::Div | BinOp::Rem) && b == 0 {
            return err("division by zero");
        }
        let r = match self.arith {
            Arith::Checked => match op {
                BinOp::Add => a.checked_add(b),
                BinOp::Sub => a.checked_sub(b),
                BinOp::Mul => a.checked_mul(b),
                BinOp::Div => a.checked_div(b),
                BinOp::Rem => a.checked_rem(b),
                _ => unreachable!(),
            },
            Arith::Saturating => Some(match op {
                BinOp::Add => a.saturating_add(b),
                BinOp::Sub => a.saturating_sub(b),
                BinOp::Mul => a.saturating_mul(b),
                BinOp::Div => a.saturating_div(b),
                BinOp::Rem => a.checked_rem(b).unwrap_or(0),
                _ => unreachable!(),
            }),
        };
        r.ok_or_else(|| EvalError(format!("integer overflow in {a} {} {b}", op.symbol())))
    }

    fn eval(&mut self, e: &Expr) -> Result<Value, EvalError> {
        match e {
            Expr::Int(i) => Ok(Value::Int(*i)),
            Expr::Num(x) => Ok(Value::Num(*x)),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Act(a) => Ok(Value::Act(Some(*a))),
            Expr::Var(var) => match var.slot {
                Some(s) => Ok(Value::Int(self.regs[s])),
                None => err(format!("undeclared register `{}`", var.name)),
            },
            Expr::Get(acc) => self.accessor(acc),
            Expr::Unary(UnOp::Not, inner) => match self.eval(inner)? {
                Value::Bool(b) => Ok(Value::Bool(!b)),
                v => err(format!("`not` applied to {}", v.type_name())),
            },
            Expr::Unary(UnOp::Neg, inner) => match self.eval(inner)? {
                Value::Int(i) => match self.arith {
                    Arith::Checked => i.checked_neg().map(Value::Int).ok_or_else(|| EvalError("integer overflow".into())),
                    Arith::Saturating => Ok(Value::Int(i.saturating_neg())),
                },
                Value::Num(x) => Ok(Value::Num(-x)),
                v => err(format!("negation applied to {}", v.type_name())),
            },
            Expr::Binary(BinOp::And, l, r) => match self.eval(l)? {
                Value::Bool(false) => Ok(Value::Bool(false)),
                Value::Bool(true) => self.expect_bool(r).map(Value::Bool),
                v => err(format!("`and` applied to {}", v.type_name())),
            },
            Expr::Binary(BinOp::Or, l, r) => match self.eval(l)? {
                Value::Bool(true) => Ok(Value::Bool(true)),
                Value::Bool(false) => self.expect_bool(r).map(Value::Bool),
                v => err(format!("`or` applied to {}", v.type_name())),
            },
            Expr::Binary(op, l, r) => {
                let (a, b) = (self.eval(l)?, self.eval(r)?);
                self.binary(*op, a, b)
            }
            Expr::Call(f, args) => {
                let vals = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>, _>>()?;
                match (f, vals.as_slice()) {
                    (Func::Abs, [Value::Int(i)]) => match self.arith {
                        Arith::Checked => i.checked_abs().map(Value::Int).ok_or_else(|| EvalError("integer overflow".into())),
                        Arith::Saturating => Ok(Value::Int(i.saturating_abs())),
                    },
                    (Func::Abs, [Value::Num(x)]) => Ok(Value::Num(x.abs())),
                    (Func::Min, [Value::Int(a), Value::Int(b)]) => Ok(Value::Int(*a.min(b))),
                    (Func::Max, [Value::Int(a), Value::Int(b)]) => Ok(Value::Int(*a.max(b))),
                    (Func::Min | Func::Max, [a, b]) => match (a.as_num(), b.as_num()) {
                        (Some(x), Some(y)) => Ok(Value::Num(if *f == Func::Min { x.min(y) } else { x.max(y) })),
                        _ => err(format!("`{}` applied to non-numbers", f.name())),
                    },
                    _ => err(format!("bad arguments to `{}`", f.name())),
                }
            }
        }
    }

    fn expect_bool(&mut self, e: &Expr) -> Result<bool, EvalError> {
        match self.eval(e)? {
            Value::Bool(b) => Ok(b),
            v => err(format!("expected boolean, got {}", v.type_name())),
        }
    }

    fn binary(&self, op: BinOp, a: Value, b: Value) -> Result<Value, EvalError> {
        use BinOp::*;
        match (op, a, b) {
            (Add | Sub | Mul | Div | Rem, Value::Int(x), Value::Int(y)) => self.int_op(op, x, y).map(Value::Int),
            (Add | Sub | Mul | Div | Rem, _, _) => match (a.as_num(), b.as_num()) {
                (Some(x), Some(y)) => Ok(Value::Num(match op {
                    Add => x + y,
                    Sub => x - y,
                    Mul => x * y,
                    Div => x / y,
                    _ => x % y,
                })),
                _ => err(format!("arithmetic on {} and {}", a.type_name(), b.type_name())),
            },
            (Eq | Ne, Value::Act(x), Value::Act(y)) => {
                // A missing move equals nothing.
                let same = matches!((x, y), (Some(p), Some(q)) if p == q);
                Ok(Value::Bool(if op == Eq { same } else { !same }))
            }
            (Eq | Ne, Value::Bool(x), Value::Bool(y)) => Ok(Value::Bool((x == y) == (op == Eq))),
            (Eq | Ne | Lt | Le | Gt | Ge, Value::Int(x), Value::Int(y)) => Ok(Value::Bool(compare(op, x, y))),
            (Eq | Ne | Lt | Le | Gt | Ge, _, _) => match (a.as_num(), b.as_num()) {
                (Some(x), Some(y)) => Ok(Value::Bool(compare(op, x, y))),
                _ => err(format!("`{}` on {} and {}", op.symbol(), a.type_name(), b.type_name())),
            },
            (And | Or, _, _) => unreachable!("short-circuit operators handled in eval"),
        }
    }
}

fn compare<T: PartialOrd>(op: BinOp, x: T, y: T) -> bool {
    match op {
        BinOp::Eq => x == y,
        BinOp::Ne => x != y,
        BinOp::Lt => x < y,
        BinOp::Le => x <= y,
        BinOp::Gt => x > y,
        BinOp::Ge => x >= y,
        _ => unreachable!(),
    }
}

fn realize(m: &Move, rng: &mut StreamRng) -> Action {
    match *m {
        Move::Pure(a) => a,
        Move::Mix(p) => {
            if rng.gen::<f64>() < p {
                Action::Cooperate
            } else {
                Action::Defect
            }
        }
    }
}

/// Chooses the next action: the first move in round 0, otherwise the action
/// of the first rule whose guard holds, falling back to the default.
pub fn decide(
    spec: &StrategySpec,
    view: &GameView<'_>,
    registers: &Registers,
    rng: &mut StreamRng,
) -> Result<Action, EvalError> {
    if view.round() == 0 {
        return Ok(realize(&spec.first_move, rng));
    }
    let mut chosen = &spec.default_action;
    {
        let mut ctx = Ctx { view, regs: &registers.0, rng: Some(&mut *rng), arith: Arith::Checked };
        for rule in &spec.rules {
            if ctx.expect_bool(&rule.guard)? {
                chosen = &rule.action;
                break;
            }
        }
    }
    Ok(realize(chosen, rng))
}

/// Applies the guarded assignments in order, each seeing the effect of the
/// ones before it, and clamps every result to its register's bounds.
pub fn update_registers(spec: &StrategySpec, view: &GameView<'_>, registers: &mut Registers) -> Result<(), EvalError> {
    for u in &spec.updates {
        let slot = match u.target.slot {
            Some(s) => s,
            None => return err(format!("undeclared register `{}`", u.target.name)),
        };
        let mut ctx = Ctx { view, regs: &registers.0, rng: None, arith: Arith::Saturating };
        if let Some(g) = &u.guard {
            if !ctx.expect_bool(g)? {
                continue;
            }
        }
        let value = match ctx.eval(&u.value)? {
            Value::Int(i) => i,
            v => return err(format!("register `{}` assigned a {}", u.target.name, v.type_name())),
        };
        let decl = &spec.registers[slot];
        registers.0[slot] = value.clamp(decl.min, decl.max.max(decl.min));
    }
    Ok(())
}

/// A running instance of a parsed strategy.
#[derive(Debug, Clone)]
pub struct DslStrategy {
    spec: Arc<StrategySpec>,
    registers: Registers,
}

impl DslStrategy {
    pub fn new(spec: Arc<StrategySpec>) -> Self {
        let registers = Registers::initial(&spec);
        DslStrategy { spec, registers }
    }

    pub fn registers(&self) -> &Registers {
        &self.registers
    }
}

impl Strategy for DslStrategy {
    fn decide(&mut self, view: &GameView<'_>, rng: &mut StreamRng) -> Result<Action, EvalError> {
        decide(&self.spec, view, &self.registers, rng)
    }

    fn observe(&mut self, view: &GameView<'_>) -> Result<(), EvalError> {
        if self.spec.updates.is_empty() {
            return Ok(());
        }
        update_registers(&self.spec, view, &mut self.registers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::game::{History, PayoffMatrix, Side, C, D};
    use rand::SeedableRng;

    fn spec(src: &str) -> StrategySpec {
        parse(src).unwrap()
    }

    fn hist(a: &str, b: &str) -> History {
        let a = crate::game::actions_from_str(a).unwrap();
        let b = crate::game::actions_from_str(b).unwrap();
        History::from_actions(&a, &b, 100, PayoffMatrix::default())
    }

    const TFT: &str = r#"strategy "tft" attitude=neutral { first: C rules: if opp_last(1) == D -> D default: C }"#;

    #[test]
    fn tft_first_move_and_retaliation() {
        let s = spec(TFT);
        let regs = Registers::initial(&s);
        let mut rng = StreamRng::seed_from_u64(0);
        let h = hist("", "");
        assert_eq!(decide(&s, &h.view(Side::A), &regs, &mut rng).unwrap(), C);
        let h = hist("CC", "CD");
        assert_eq!(decide(&s, &h.view(Side::A), &regs, &mut rng).unwrap(), D);
    }

    #[test]
    fn score_comparison_guard() {
        let s = spec(r#"strategy "x" attitude=aggressive { first: C rules: if my_score < opp_score -> D default: C }"#);
        let h = hist("CCDCC", "DCDCC"); // 0+3+1+3+3 = 10 vs 5+3+1+3+3 = 15
        let v = h.view(Side::A);
        assert_eq!((v.my_score(), v.opp_score()), (10, 15));
        let mut rng = StreamRng::seed_from_u64(0);
        assert_eq!(decide(&s, &v, &Registers::initial(&s), &mut rng).unwrap(), D);
    }

    #[test]
    fn gradual_counter_updates() {
        let s = spec(
            r#"strategy "g" attitude=neutral { first: C registers: punish = 2 in [0, 100]
               rules: default: C updates: punish := punish + 1 if opp_last(1) == D }"#,
        );
        let mut regs = Registers::initial(&s);
        update_registers(&s, &hist("C", "D").view(Side::A), &mut regs).unwrap();
        assert_eq!(regs.0, vec![3]);
        let mut regs = Registers::initial(&s);
        update_registers(&s, &hist("C", "C").view(Side::A), &mut regs).unwrap();
        assert_eq!(regs.0, vec![2]);
    }

    #[test]
    fn updates_clamp() {
        let s = spec(
            r#"strategy "g" attitude=neutral { first: C registers: n = 100 in [0, 100]
               rules: default: C updates: n := n + 1 if true m := 0 }"#,
        );
        let mut regs = Registers::initial(&s);
        // `m` is undeclared; updates run in order, so `n` is clamped before the failure.
        let e = update_registers(&s, &hist("C", "C").view(Side::A), &mut regs);
        assert_eq!(regs.0, vec![100]);
        assert!(e.is_err());
        let s = spec(
            r#"strategy "g" attitude=neutral { first: C registers: n = 100 in [0, 100]
               rules: default: C updates: n := n * 9223372036854775807 }"#,
        );
        let mut regs = Registers::initial(&s);
        update_registers(&s, &hist("C", "C").view(Side::A), &mut regs).unwrap();
        assert_eq!(regs.0, vec![100]);
    }

    #[test]
    fn overflow_in_decide_is_an_error() {
        let s = spec(
            r#"strategy "x" attitude=neutral { first: C rules: if 9223372036854775807 + round > 0 -> D default: C }"#,
        );
        let h = hist("C", "C");
        let mut rng = StreamRng::seed_from_u64(0);
        assert!(decide(&s, &h.view(Side::A), &Registers::initial(&s), &mut rng).is_err());
    }

    #[test]
    fn rng_consumed_only_when_reached() {
        let s = spec(
            r#"strategy "x" attitude=neutral { first: C rules:
               if opp_last(1) == D and rand() < 0.5 -> D
               if opp_last(1) == C -> mix(0.5)
               default: C }"#,
        );
        let regs = Registers::initial(&s);
        // Opponent defected: one draw for rand(), none for the action.
        let mut r1 = StreamRng::seed_from_u64(4);
        let mut r2 = StreamRng::seed_from_u64(4);
        decide(&s, &hist("C", "D").view(Side::A), &regs, &mut r1).unwrap();
        let _: f64 = r2.gen();
        assert_eq!(r1.gen::<u64>(), r2.gen::<u64>());
        // Opponent cooperated: the first guard short-circuits, the mixture draws once.
        let mut r1 = StreamRng::seed_from_u64(4);
        let mut r2 = StreamRng::seed_from_u64(4);
        decide(&s, &hist("C", "C").view(Side::A), &regs, &mut r1).unwrap();
        let _: f64 = r2.gen();
        assert_eq!(r1.gen::<u64>(), r2.gen::<u64>());
    }

    #[test]
    fn missing_history_compares_unequal() {
        let s = spec(r#"strategy "x" attitude=neutral { first: C rules: if opp_last(3) != D -> D default: C }"#);
        let mut rng = StreamRng::seed_from_u64(0);
        let h = hist("C", "C");
        assert_eq!(decide(&s, &h.view(Side::A), &Registers::initial(&s), &mut rng).unwrap(), D);
    }

    #[test]
    fn pattern_and_rates() {
        let s = spec(
            r#"strategy "x" attitude=neutral { first: C rules:
               if pattern(opp, "DCD") -> D
               if coop_rate(opp, 4) < 0.5 -> D
               default: C }"#,
        );
        let regs = Registers::initial(&s);
        let mut rng = StreamRng::seed_from_u64(0);
        let at = |a: &str, b: &str, rng: &mut StreamRng| decide(&s, &hist(a, b).view(Side::A), &regs, rng).unwrap();
        assert_eq!(at("CCCC", "CDCD", &mut rng), D);
        assert_eq!(at("CCCC", "CCDC", &mut rng), C);
        assert_eq!(at("CCCCC", "CCDDD", &mut rng), D);
    }
}
