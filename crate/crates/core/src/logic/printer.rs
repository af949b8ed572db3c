//! Canonical printer. `parse(print(f)) == f` for every well-formed formula,
//! and `print(parse(t)) == t` whenever `t` is already in canonical form.

use super::Formula;
use std::fmt;

/// Binding strength; parentheses are inserted when a child binds looser than
/// its context requires.
fn level(f: &Formula) -> u8 {
    match f {
        Formula::Forall(..) | Formula::Exists(..) | Formula::ExistsUnique(..) => 0,
        Formula::Iff(..) => 1,
        Formula::Implies(..) => 2,
        Formula::Or(..) => 3,
        Formula::And(..) => 4,
        Formula::Not(..) => 5,
        Formula::Adj(..) | Formula::Eq(..) | Formula::Rel(..) => 6,
    }
}

fn write_prec(f: &Formula, min: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    if level(f) < min {
        write!(out, "(")?;
        write_prec(f, 0, out)?;
        return write!(out, ")");
    }
    match f {
        Formula::Forall(v, b) => {
            write!(out, "forall {v} : ")?;
            write_prec(b, 0, out)
        }
        Formula::Exists(v, b) => {
            write!(out, "exists {v} : ")?;
            write_prec(b, 0, out)
        }
        Formula::ExistsUnique(v, b) => {
            write!(out, "existsu {v} : ")?;
            write_prec(b, 0, out)
        }
        Formula::Iff(l, r) => {
            write_prec(l, 1, out)?;
            write!(out, " <-> ")?;
            write_prec(r, 2, out)
        }
        Formula::Implies(l, r) => {
            write_prec(l, 3, out)?;
            write!(out, " -> ")?;
            write_prec(r, 2, out)
        }
        Formula::Or(l, r) => {
            write_prec(l, 3, out)?;
            write!(out, " | ")?;
            write_prec(r, 4, out)
        }
        Formula::And(l, r) => {
            write_prec(l, 4, out)?;
            write!(out, " & ")?;
            write_prec(r, 5, out)
        }
        Formula::Not(x) => match **x {
            Formula::Rel(..) => {
                write!(out, "!")?;
                write_prec(x, 6, out)
            }
            _ => {
                write!(out, "!(")?;
                write_prec(x, 0, out)?;
                write!(out, ")")
            }
        },
        Formula::Adj(a, b) => write!(out, "{a} ~ {b}"),
        Formula::Eq(a, b) => write!(out, "{a} = {b}"),
        Formula::Rel(name, args) => write!(out, "{name}({})", args.join(", ")),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_prec(self, 0, f)
    }
}

/// Canonical concrete syntax for a formula.
pub fn print(f: &Formula) -> String {
    f.to_string()
}
