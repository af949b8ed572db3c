//! Plain recursive evaluator used as an independent oracle in tests.
//!
//! No compilation, no candidate restriction, no memoization: quantifiers
//! scan every vertex and the environment is a name-keyed map. The optimized
//! evaluator must agree with this one exactly.

use super::{Environment, EvalError, Formula, Structure};
use std::collections::HashMap;

pub fn evaluate(s: &Structure, f: &Formula, env: &Environment) -> Result<bool, EvalError> {
    let mut bindings: HashMap<String, usize> =
        env.iter().map(|(k, v)| (k.clone(), v)).collect();
    go(s, f, &mut bindings)
}

fn look(bindings: &HashMap<String, usize>, v: &str) -> Result<usize, EvalError> {
    bindings
        .get(v)
        .copied()
        .ok_or_else(|| EvalError::UnboundVariable(v.to_string()))
}

fn go(
    s: &Structure,
    f: &Formula,
    bindings: &mut HashMap<String, usize>,
) -> Result<bool, EvalError> {
    match f {
        Formula::Adj(a, b) => Ok(s
            .graph()
            .has_edge(look(bindings, a)?, look(bindings, b)?)),
        Formula::Eq(a, b) => Ok(look(bindings, a)? == look(bindings, b)?),
        Formula::Rel(name, args) => {
            let rel = s
                .relations()
                .get(name)
                .ok_or_else(|| EvalError::UnknownRelation(name.clone()))?;
            if rel.arity() != args.len() {
                return Err(EvalError::ArityMismatch {
                    relation: name.clone(),
                    expected: rel.arity(),
                    got: args.len(),
                });
            }
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(look(bindings, a)? as u32);
            }
            Ok(rel.contains(&vals))
        }
        Formula::Not(x) => Ok(!go(s, x, bindings)?),
        Formula::And(l, r) => Ok(go(s, l, bindings)? && go(s, r, bindings)?),
        Formula::Or(l, r) => Ok(go(s, l, bindings)? || go(s, r, bindings)?),
        Formula::Implies(l, r) => Ok(!go(s, l, bindings)? || go(s, r, bindings)?),
        Formula::Iff(l, r) => {
            let lv = go(s, l, bindings)?;
            let rv = go(s, r, bindings)?;
            Ok(lv == rv)
        }
        Formula::Forall(v, b) => {
            let saved = bindings.get(v).copied();
            let mut out = true;
            for x in 0..s.graph().n() {
                bindings.insert(v.clone(), x);
                if !go(s, b, bindings)? {
                    out = false;
                    break;
                }
            }
            restore(bindings, v, saved);
            Ok(out)
        }
        Formula::Exists(v, b) => {
            let saved = bindings.get(v).copied();
            let mut out = false;
            for x in 0..s.graph().n() {
                bindings.insert(v.clone(), x);
                if go(s, b, bindings)? {
                    out = true;
                    break;
                }
            }
            restore(bindings, v, saved);
            Ok(out)
        }
        Formula::ExistsUnique(v, b) => {
            let saved = bindings.get(v).copied();
            let mut count = 0usize;
            for x in 0..s.graph().n() {
                bindings.insert(v.clone(), x);
                if go(s, b, bindings)? {
                    count += 1;
                }
            }
            restore(bindings, v, saved);
            Ok(count == 1)
        }
    }
}

fn restore(bindings: &mut HashMap<String, usize>, v: &str, saved: Option<usize>) {
    match saved {
        Some(x) => {
            bindings.insert(v.to_string(), x);
        }
        None => {
            bindings.remove(v);
        }
    }
}
