use std::fmt::Write;

use super::ast::*;
use super::parser::HEADER_PREFIX;
use crate::game::actions_to_string;

/// Renders a spec as canonical `.ipd` source. Re-parsing the output yields
/// a structurally equal spec.
pub fn pretty_print(spec: &StrategySpec) -> String {
    let mut out = String::new();
    if let Some(desc) = &spec.description {
        for line in desc.split('\n') {
            let _ = writeln!(out, "{HEADER_PREFIX} {line}");
        }
    }
    let _ = writeln!(out, "strategy \"{}\" attitude={} {{", spec.name, spec.attitude);
    let _ = writeln!(out, "  first: {}", fmt_move(&spec.first_move));
    if !spec.registers.is_empty() {
        out.push_str("  registers:\n");
        for r in &spec.registers {
            let _ = writeln!(out, "    {} = {} in [{}, {}]", r.name, r.init, r.min, r.max);
        }
    }
    out.push_str("  rules:\n");
    for rule in &spec.rules {
        let _ = writeln!(out, "    if {} -> {}", fmt_expr(&rule.guard), fmt_move(&rule.action));
    }
    let _ = writeln!(out, "  default: {}", fmt_move(&spec.default_action));
    if !spec.updates.is_empty() {
        out.push_str("  updates:\n");
        for u in &spec.updates {
            let _ = write!(out, "    {} := {}", u.target.name, fmt_expr(&u.value));
            if let Some(g) = &u.guard {
                let _ = write!(out, " if {}", fmt_expr(g));
            }
            out.push('\n');
        }
    }
    out.push_str("}\n");
    out
}

pub fn fmt_move(m: &Move) -> String {
    match m {
        Move::Pure(a) => a.to_string(),
        Move::Mix(p) => format!("mix({p:?})"),
    }
}

pub fn fmt_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

const NOT_PREC: u8 = 3;
const UNARY_PREC: u8 = 7;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, _, _) => op.precedence(),
        Expr::Unary(UnOp::Not, _) => NOT_PREC,
        Expr::Unary(UnOp::Neg, _) => UNARY_PREC,
        _ => u8::MAX,
    }
}

fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    let paren = prec(e) < min_prec;
    if paren {
        out.push('(');
    }
    match e {
        Expr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Num(v) => {
            let _ = write!(out, "{v:?}");
        }
        Expr::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Expr::Act(a) => {
            let _ = write!(out, "{a}");
        }
        Expr::Var(v) => out.push_str(&v.name),
        Expr::Get(acc) => write_accessor(out, acc),
        Expr::Unary(UnOp::Not, inner) => {
            out.push_str("not ");
            write_expr(out, inner, NOT_PREC);
        }
        Expr::Unary(UnOp::Neg, inner) => {
            out.push('-');
            write_expr(out, inner, UNARY_PREC);
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            // Comparisons do not chain; everything else is left-associative.
            let left_min = if op.is_comparison() { p + 1 } else { p };
            write_expr(out, l, left_min);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, r, p + 1);
        }
        Expr::Call(f, args) => {
            out.push_str(f.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, 0);
            }
            out.push(')');
        }
    }
    if paren {
        out.push(')');
    }
}

fn write_accessor(out: &mut String, acc: &Accessor) {
    if let Some(name) = acc.plain_name() {
        out.push_str(name);
        return;
    }
    let _ = match acc {
        Accessor::MyLast(k) => write!(out, "my_last({k})"),
        Accessor::OppLast(k) => write!(out, "opp_last({k})"),
        Accessor::CoopRate(who, Some(w)) => write!(out, "coop_rate({}, {w})", who.keyword()),
        Accessor::CoopRate(who, None) => write!(out, "coop_rate({})", who.keyword()),
        Accessor::Pattern(who, moves) => write!(out, "pattern({}, \"{}\")", who.keyword(), actions_to_string(moves)),
        Accessor::Rand => write!(out, "rand()"),
        _ => unreachable!("plain accessors handled above"),
    };
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    #[test]
    fn reparses_with_parentheses_where_needed() {
        let src = r#"#> Line one
#>
strategy "x" attitude=aggressive {
  first: mix(0.25)
  registers:
    n = -1 in [-5, 5]
  rules:
    if (round - 1) - (2 - n) > 0 and not (true or false) -> D
    if (opp_last(2) != C) == false -> mix(1.0)
  default: D
  updates:
    n := -(n + 1) * 2 if pattern(opp, "CD") or coop_rate(my, 3) < 0.5
}
"#;
        let spec = parse(src).unwrap();
        let printed = pretty_print(&spec);
        let again = parse(&printed).unwrap();
        assert_eq!(spec, again, "\n{printed}");
        assert!(printed.contains("round - 1 - (2 - n) > 0"), "{printed}");
        assert!(printed.starts_with("#> Line one\n#> \nstrategy"));
    }
}
