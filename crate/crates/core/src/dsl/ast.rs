use crate::bank::Attitude;
use crate::game::Action;

/// Longest look-back any accessor may use.
pub const MAX_WINDOW: usize = 20;
/// Upper bound on rules, registers and register updates.
pub const MAX_ITEMS: usize = 64;

/// A parsed strategy program.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpec {
    pub name: String,
    pub attitude: Attitude,
    /// Natural-language text carried in the `#>` header.
    pub description: Option<String>,
    pub first_move: Move,
    pub registers: Vec<RegisterDecl>,
    pub rules: Vec<Rule>,
    pub default_action: Move,
    pub updates: Vec<Update>,
}

/// A concrete move or a cooperate-with-probability mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Move {
    Pure(Action),
    Mix(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegisterDecl {
    pub name: String,
    pub init: i64,
    pub min: i64,
    pub max: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub guard: Expr,
    pub action: Move,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub target: Var,
    pub value: Expr,
    pub guard: Option<Expr>,
}

/// A register reference; `slot` is resolved at parse time when declared.
#[derive(Debug, Clone, PartialEq)]
pub struct Var {
    pub name: String,
    pub slot: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Who {
    My,
    Opp,
}

impl Who {
    pub fn keyword(self) -> &'static str {
        match self {
            Who::My => "my",
            Who::Opp => "opp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Accessor {
    Round,
    TotalRounds,
    MyLast(usize),
    OppLast(usize),
    MyCoops,
    OppCoops,
    MyDefects,
    OppDefects,
    MyScore,
    OppScore,
    /// Cooperation fraction over the last `window` moves, or the whole history.
    CoopRate(Who, Option<usize>),
    ConsecOppDefects,
    ConsecOppCoops,
    ConsecMyDefects,
    ConsecMutualDefects,
    /// Suffix match of the player's history against a fixed move string.
    Pattern(Who, Vec<Action>),
    Rand,
}

impl Accessor {
    /// Name for the zero-argument accessors.
    pub fn plain_name(&self) -> Option<&'static str> {
        Some(match self {
            Accessor::Round => "round",
            Accessor::TotalRounds => "total_rounds",
            Accessor::MyCoops => "my_coops",
            Accessor::OppCoops => "opp_coops",
            Accessor::MyDefects => "my_defects",
            Accessor::OppDefects => "opp_defects",
            Accessor::MyScore => "my_score",
            Accessor::OppScore => "opp_score",
            Accessor::ConsecOppDefects => "consec_opp_defects",
            Accessor::ConsecOppCoops => "consec_opp_coops",
            Accessor::ConsecMyDefects => "consec_my_defects",
            Accessor::ConsecMutualDefects => "consec_mutual_defects",
            _ => return None,
        })
    }

    pub fn from_plain_name(name: &str) -> Option<Self> {
        Some(match name {
            "round" => Accessor::Round,
            "total_rounds" => Accessor::TotalRounds,
            "my_coops" => Accessor::MyCoops,
            "opp_coops" => Accessor::OppCoops,
            "my_defects" => Accessor::MyDefects,
            "opp_defects" => Accessor::OppDefects,
            "my_score" => Accessor::MyScore,
            "opp_score" => Accessor::OppScore,
            "consec_opp_defects" => Accessor::ConsecOppDefects,
            "consec_opp_coops" => Accessor::ConsecOppCoops,
            "consec_my_defects" => Accessor::ConsecMyDefects,
            "consec_mutual_defects" => Accessor::ConsecMutualDefects,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "or",
            BinOp::And => "and",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Min,
    Max,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Min => "min",
            Func::Max => "max",
            Func::Abs => "abs",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            Func::Abs => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Num(f64),
    Bool(bool),
    Act(Action),
    Var(Var),
    Get(Accessor),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// Visits every node, parents before children.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Unary(_, e) => e.walk(f),
            Expr::Binary(_, l, r) => {
                l.walk(f);
                r.walk(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.walk(f)),
            _ => {}
        }
    }

    pub fn uses_rand(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::Get(Accessor::Rand)));
        found
    }
}

impl StrategySpec {
    /// True when no construct can draw from the strategy's random stream.
    pub fn is_deterministic(&self) -> bool {
        let pure = |m: &Move| matches!(m, Move::Pure(_));
        pure(&self.first_move)
            && pure(&self.default_action)
            && self.rules.iter().all(|r| pure(&r.action) && !r.guard.uses_rand())
            && self
                .updates
                .iter()
                .all(|u| !u.value.uses_rand() && !u.guard.as_ref().is_some_and(Expr::uses_rand))
    }
}
