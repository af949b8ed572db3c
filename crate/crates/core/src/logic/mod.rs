//! First-order formulas over graphs: abstract syntax, concrete syntax, and
//! two evaluators (an optimized one and a plain reference oracle).
//!
//! Formulas range over vertex variables with adjacency (`x ~ y`), equality
//! (`x = y`), and named interpreted relations of arity one to three
//! (`CN(x, y)`), closed under the usual connectives and quantifiers.
//! Quantifiers bind a single variable; the surface syntax `exists x y : f`
//! is sugar for nested quantifiers, and `existsu` is the unique-existence
//! quantifier.

mod eval;
mod parser;
mod printer;
pub mod reference;

pub use eval::{evaluate, evaluate_with, EvalError};
pub use parser::{parse, ParseError};
pub use printer::print;

use crate::graph::Graph;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;
use thiserror::Error;

/// Formula AST. Variables are symbolic lowercase names; relation names are
/// capitalized, matching the concrete grammar.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Adj(String, String),
    Eq(String, String),
    Rel(String, Vec<String>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
    ExistsUnique(String, Box<Formula>),
}

impl Formula {
    pub fn adj(a: impl Into<String>, b: impl Into<String>) -> Formula {
        Formula::Adj(a.into(), b.into())
    }

    pub fn var_eq(a: impl Into<String>, b: impl Into<String>) -> Formula {
        Formula::Eq(a.into(), b.into())
    }

    pub fn rel(name: impl Into<String>, args: &[&str]) -> Formula {
        Formula::Rel(name.into(), args.iter().map(|a| a.to_string()).collect())
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Formula {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    pub fn iff(l: Formula, r: Formula) -> Formula {
        Formula::Iff(Box::new(l), Box::new(r))
    }

    pub fn forall(v: impl Into<String>, body: Formula) -> Formula {
        Formula::Forall(v.into(), Box::new(body))
    }

    pub fn exists(v: impl Into<String>, body: Formula) -> Formula {
        Formula::Exists(v.into(), Box::new(body))
    }

    pub fn exists_unique(v: impl Into<String>, body: Formula) -> Formula {
        Formula::ExistsUnique(v.into(), Box::new(body))
    }

    /// Left-associated conjunction of a non-empty list.
    pub fn and_all(mut parts: Vec<Formula>) -> Formula {
        assert!(!parts.is_empty(), "and_all needs at least one conjunct");
        let mut acc = parts.remove(0);
        for p in parts {
            acc = Formula::and(acc, p);
        }
        acc
    }

    pub fn is_sentence(&self) -> bool {
        free_vars(self).is_empty()
    }

    /// Names of interpreted relations appearing anywhere in the formula.
    pub fn relation_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| {
            if let Formula::Rel(name, _) = f {
                out.insert(name.clone());
            }
        });
        out
    }

    fn walk(&self, visit: &mut impl FnMut(&Formula)) {
        visit(self);
        match self {
            Formula::Adj(..) | Formula::Eq(..) | Formula::Rel(..) => {}
            Formula::Not(x) => x.walk(visit),
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Iff(l, r) => {
                l.walk(visit);
                r.walk(visit);
            }
            Formula::Forall(_, b) | Formula::Exists(_, b) | Formula::ExistsUnique(_, b) => {
                b.walk(visit)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("interpreted relation atom {0} cannot be complemented")]
    RelAtomPresent(String),
}

/// The variables occurring free in `f`. For a would-be sentence this doubles
/// as the unbound-variable report.
pub fn free_vars(f: &Formula) -> BTreeSet<String> {
    fn rec(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let hit = |v: &String, bound: &Vec<String>, out: &mut BTreeSet<String>| {
            if !bound.iter().any(|b| b == v) {
                out.insert(v.clone());
            }
        };
        match f {
            Formula::Adj(a, b) | Formula::Eq(a, b) => {
                hit(a, bound, out);
                hit(b, bound, out);
            }
            Formula::Rel(_, args) => {
                for a in args {
                    hit(a, bound, out);
                }
            }
            Formula::Not(x) => rec(x, bound, out),
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Iff(l, r) => {
                rec(l, bound, out);
                rec(r, bound, out);
            }
            Formula::Forall(v, b) | Formula::Exists(v, b) | Formula::ExistsUnique(v, b) => {
                bound.push(v.clone());
                rec(b, bound, out);
                bound.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    rec(f, &mut Vec::new(), &mut out);
    out
}

/// All variable names occurring in `f`, bound or free.
pub fn all_var_names(f: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    f.walk(&mut |f| match f {
        Formula::Adj(a, b) | Formula::Eq(a, b) => {
            out.insert(a.clone());
            out.insert(b.clone());
        }
        Formula::Rel(_, args) => out.extend(args.iter().cloned()),
        Formula::Forall(v, _) | Formula::Exists(v, _) | Formula::ExistsUnique(v, _) => {
            out.insert(v.clone());
        }
        _ => {}
    });
    out
}

fn fresh_name(base: &str, used: &BTreeSet<String>) -> String {
    for k in 1u32.. {
        let candidate = format!("{base}{k}");
        if !used.contains(&candidate) {
            return candidate;
        }
    }
    unreachable!()
}

/// Renames bound variables so that none of them belongs to `avoid`. The
/// result is semantically equivalent to `f`.
pub fn alpha_rename(f: &Formula, avoid: &BTreeSet<String>) -> Formula {
    fn rec(
        f: &Formula,
        avoid: &BTreeSet<String>,
        used: &mut BTreeSet<String>,
        map: &mut Vec<(String, String)>,
    ) -> Formula {
        let subst = |v: &String, map: &Vec<(String, String)>| -> String {
            map.iter()
                .rev()
                .find(|(from, _)| from == v)
                .map(|(_, to)| to.clone())
                .unwrap_or_else(|| v.clone())
        };
        match f {
            Formula::Adj(a, b) => Formula::Adj(subst(a, map), subst(b, map)),
            Formula::Eq(a, b) => Formula::Eq(subst(a, map), subst(b, map)),
            Formula::Rel(name, args) => {
                Formula::Rel(name.clone(), args.iter().map(|a| subst(a, map)).collect())
            }
            Formula::Not(x) => Formula::not(rec(x, avoid, used, map)),
            Formula::And(l, r) => Formula::and(rec(l, avoid, used, map), rec(r, avoid, used, map)),
            Formula::Or(l, r) => Formula::or(rec(l, avoid, used, map), rec(r, avoid, used, map)),
            Formula::Implies(l, r) => {
                Formula::implies(rec(l, avoid, used, map), rec(r, avoid, used, map))
            }
            Formula::Iff(l, r) => Formula::iff(rec(l, avoid, used, map), rec(r, avoid, used, map)),
            Formula::Forall(v, b) | Formula::Exists(v, b) | Formula::ExistsUnique(v, b) => {
                let new_v = if avoid.contains(v) {
                    let nv = fresh_name(v, used);
                    used.insert(nv.clone());
                    nv
                } else {
                    v.clone()
                };
                map.push((v.clone(), new_v.clone()));
                let body = rec(b, avoid, used, map);
                map.pop();
                match f {
                    Formula::Forall(..) => Formula::forall(new_v, body),
                    Formula::Exists(..) => Formula::exists(new_v, body),
                    _ => Formula::exists_unique(new_v, body),
                }
            }
        }
    }
    let mut used: BTreeSet<String> = all_var_names(f);
    used.extend(avoid.iter().cloned());
    rec(f, avoid, &mut used, &mut Vec::new())
}

/// Simultaneously renames free occurrences of variables according to `map`,
/// alpha-renaming bound variables first so no capture can occur.
pub fn rename_free(f: &Formula, map: &BTreeMap<String, String>) -> Formula {
    let avoid: BTreeSet<String> = map.values().cloned().collect();
    let safe = alpha_rename(f, &avoid);
    fn rec(f: &Formula, map: &BTreeMap<String, String>, bound: &mut Vec<String>) -> Formula {
        let subst = |v: &String, bound: &Vec<String>| -> String {
            if bound.iter().any(|b| b == v) {
                v.clone()
            } else {
                map.get(v).cloned().unwrap_or_else(|| v.clone())
            }
        };
        match f {
            Formula::Adj(a, b) => Formula::Adj(subst(a, bound), subst(b, bound)),
            Formula::Eq(a, b) => Formula::Eq(subst(a, bound), subst(b, bound)),
            Formula::Rel(name, args) => {
                Formula::Rel(name.clone(), args.iter().map(|a| subst(a, bound)).collect())
            }
            Formula::Not(x) => Formula::not(rec(x, map, bound)),
            Formula::And(l, r) => Formula::and(rec(l, map, bound), rec(r, map, bound)),
            Formula::Or(l, r) => Formula::or(rec(l, map, bound), rec(r, map, bound)),
            Formula::Implies(l, r) => Formula::implies(rec(l, map, bound), rec(r, map, bound)),
            Formula::Iff(l, r) => Formula::iff(rec(l, map, bound), rec(r, map, bound)),
            Formula::Forall(v, b) | Formula::Exists(v, b) | Formula::ExistsUnique(v, b) => {
                bound.push(v.clone());
                let body = rec(b, map, bound);
                bound.pop();
                match f {
                    Formula::Forall(..) => Formula::forall(v.clone(), body),
                    Formula::Exists(..) => Formula::exists(v.clone(), body),
                    _ => Formula::exists_unique(v.clone(), body),
                }
            }
        }
    }
    rec(&safe, map, &mut Vec::new())
}

/// Negates every adjacency atom in place, leaving equality untouched, so the
/// result holds on a graph exactly when `f` holds on its complement. Fails
/// if an interpreted relation atom is present.
pub fn complement_formula(f: &Formula) -> Result<Formula, TransformError> {
    Ok(match f {
        Formula::Adj(a, b) => Formula::not(Formula::Adj(a.clone(), b.clone())),
        Formula::Eq(..) => f.clone(),
        Formula::Rel(name, _) => return Err(TransformError::RelAtomPresent(name.clone())),
        Formula::Not(x) => Formula::not(complement_formula(x)?),
        Formula::And(l, r) => Formula::and(complement_formula(l)?, complement_formula(r)?),
        Formula::Or(l, r) => Formula::or(complement_formula(l)?, complement_formula(r)?),
        Formula::Implies(l, r) => {
            Formula::implies(complement_formula(l)?, complement_formula(r)?)
        }
        Formula::Iff(l, r) => Formula::iff(complement_formula(l)?, complement_formula(r)?),
        Formula::Forall(v, b) => Formula::forall(v.clone(), complement_formula(b)?),
        Formula::Exists(v, b) => Formula::exists(v.clone(), complement_formula(b)?),
        Formula::ExistsUnique(v, b) => Formula::exists_unique(v.clone(), complement_formula(b)?),
    })
}

/// Removes doubled negations everywhere; useful when comparing transforms
/// that introduce them.
pub fn eliminate_double_negation(f: &Formula) -> Formula {
    match f {
        Formula::Not(x) => match &**x {
            Formula::Not(y) => eliminate_double_negation(y),
            _ => Formula::not(eliminate_double_negation(x)),
        },
        Formula::Adj(..) | Formula::Eq(..) | Formula::Rel(..) => f.clone(),
        Formula::And(l, r) => {
            Formula::and(eliminate_double_negation(l), eliminate_double_negation(r))
        }
        Formula::Or(l, r) => {
            Formula::or(eliminate_double_negation(l), eliminate_double_negation(r))
        }
        Formula::Implies(l, r) => {
            Formula::implies(eliminate_double_negation(l), eliminate_double_negation(r))
        }
        Formula::Iff(l, r) => {
            Formula::iff(eliminate_double_negation(l), eliminate_double_negation(r))
        }
        Formula::Forall(v, b) => Formula::forall(v.clone(), eliminate_double_negation(b)),
        Formula::Exists(v, b) => Formula::exists(v.clone(), eliminate_double_negation(b)),
        Formula::ExistsUnique(v, b) => {
            Formula::exists_unique(v.clone(), eliminate_double_negation(b))
        }
    }
}

/// Expands every unique-existence quantifier into its standard
/// exists/forall form with a fresh comparison variable.
pub fn desugar_exists_unique(f: &Formula) -> Formula {
    match f {
        Formula::Adj(..) | Formula::Eq(..) | Formula::Rel(..) => f.clone(),
        Formula::Not(x) => Formula::not(desugar_exists_unique(x)),
        Formula::And(l, r) => {
            Formula::and(desugar_exists_unique(l), desugar_exists_unique(r))
        }
        Formula::Or(l, r) => Formula::or(desugar_exists_unique(l), desugar_exists_unique(r)),
        Formula::Implies(l, r) => {
            Formula::implies(desugar_exists_unique(l), desugar_exists_unique(r))
        }
        Formula::Iff(l, r) => Formula::iff(desugar_exists_unique(l), desugar_exists_unique(r)),
        Formula::Forall(v, b) => Formula::forall(v.clone(), desugar_exists_unique(b)),
        Formula::Exists(v, b) => Formula::exists(v.clone(), desugar_exists_unique(b)),
        Formula::ExistsUnique(v, b) => {
            let body = desugar_exists_unique(b);
            let mut used = all_var_names(&body);
            used.insert(v.clone());
            let w = fresh_name(v, &used);
            let mut map = BTreeMap::new();
            map.insert(v.clone(), w.clone());
            let body_w = rename_free(&body, &map);
            Formula::exists(
                v.clone(),
                Formula::and(
                    body,
                    Formula::forall(w.clone(), Formula::implies(body_w, Formula::Eq(w, v.clone()))),
                ),
            )
        }
    }
}

// ============================================================================
// Structures and environments
// ============================================================================

/// Finite relation table of arity 1 to 3 over vertex ids, stored as a sorted
/// tuple list (unused slots zero).
#[derive(Debug)]
pub struct Relation {
    arity: usize,
    tuples: Vec<[u32; 3]>,
    index: OnceLock<Vec<HashMap<u32, Vec<u32>>>>,
}

impl Relation {
    pub fn new(arity: usize, mut tuples: Vec<[u32; 3]>) -> Relation {
        assert!((1..=3).contains(&arity), "relation arity must be 1..=3");
        for t in tuples.iter_mut() {
            for slot in t.iter_mut().skip(arity) {
                *slot = 0;
            }
        }
        tuples.sort_unstable();
        tuples.dedup();
        Relation {
            arity,
            tuples,
            index: OnceLock::new(),
        }
    }

    pub fn unary(vals: impl IntoIterator<Item = u32>) -> Relation {
        Relation::new(1, vals.into_iter().map(|v| [v, 0, 0]).collect())
    }

    pub fn binary(pairs: impl IntoIterator<Item = (u32, u32)>) -> Relation {
        Relation::new(2, pairs.into_iter().map(|(a, b)| [a, b, 0]).collect())
    }

    pub fn ternary(triples: impl IntoIterator<Item = [u32; 3]>) -> Relation {
        Relation::new(3, triples.into_iter().collect())
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, args: &[u32]) -> bool {
        debug_assert_eq!(args.len(), self.arity);
        let mut key = [0u32; 3];
        key[..args.len()].copy_from_slice(args);
        self.tuples.binary_search(&key).is_ok()
    }

    pub fn tuples(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.tuples.iter().map(move |t| &t[..self.arity])
    }

    /// Per-position lookup: value at `pos` -> indices of matching tuples.
    fn position_index(&self) -> &Vec<HashMap<u32, Vec<u32>>> {
        self.index.get_or_init(|| {
            let mut maps: Vec<HashMap<u32, Vec<u32>>> = vec![HashMap::new(); self.arity];
            for (i, t) in self.tuples.iter().enumerate() {
                for (pos, map) in maps.iter_mut().enumerate() {
                    map.entry(t[pos]).or_default().push(i as u32);
                }
            }
            maps
        })
    }

    /// Values seen at `quant_pos` among tuples whose `bound_pos` equals
    /// `bound_val`; a superset filter for quantifier candidates.
    pub(crate) fn project_matching(
        &self,
        quant_pos: usize,
        bound_pos: usize,
        bound_val: u32,
        mut emit: impl FnMut(u32),
    ) {
        if let Some(idxs) = self.position_index()[bound_pos].get(&bound_val) {
            for &i in idxs {
                emit(self.tuples[i as usize][quant_pos]);
            }
        }
    }

    pub(crate) fn project_all(&self, quant_pos: usize, mut emit: impl FnMut(u32)) {
        for t in &self.tuples {
            emit(t[quant_pos]);
        }
    }
}

/// Named relation tables for interpreted atoms.
pub type Relations = BTreeMap<String, Relation>;

/// A graph plus named interpreted relation tables.
pub struct Structure {
    graph: Graph,
    relations: Relations,
}

impl Structure {
    pub fn new(graph: Graph, relations: Relations) -> Structure {
        for (name, rel) in &relations {
            for t in rel.tuples() {
                for &v in t {
                    assert!(
                        (v as usize) < graph.n(),
                        "relation {name} references vertex {v} outside the graph"
                    );
                }
            }
        }
        Structure { graph, relations }
    }

    /// A bare graph with no interpreted relations.
    pub fn graph_only(graph: Graph) -> Structure {
        Structure {
            graph,
            relations: Relations::new(),
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn relations(&self) -> &Relations {
        &self.relations
    }
}

/// Partial map from variable names to vertices; evaluation requires it to
/// bind every free variable of the formula.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Environment {
    bindings: BTreeMap<String, usize>,
}

impl Environment {
    pub fn new() -> Environment {
        Environment::default()
    }

    pub fn bind(mut self, name: impl Into<String>, v: usize) -> Environment {
        self.bindings.insert(name.into(), v);
        self
    }

    pub fn insert(&mut self, name: impl Into<String>, v: usize) {
        self.bindings.insert(name.into(), v);
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.bindings.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, usize)> {
        self.bindings.iter().map(|(k, &v)| (k, v))
    }
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_vars_of_open_formula() {
        let f = parse("exists x1 : x ~ x1 & !(x1 = y)").unwrap();
        let fv: Vec<String> = free_vars(&f).into_iter().collect();
        assert_eq!(fv, vec!["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn alpha_rename_avoids_capture() {
        let f = parse("exists x : x ~ y").unwrap();
        let avoid: BTreeSet<String> = ["x".to_string()].into_iter().collect();
        let renamed = alpha_rename(&f, &avoid);
        assert_eq!(renamed, parse("exists x1 : x1 ~ y").unwrap());
        assert_eq!(free_vars(&renamed), free_vars(&f));
    }

    #[test]
    fn alpha_rename_handles_shadowing() {
        let f = parse("exists x : x ~ y & (exists x : x = y)").unwrap();
        let avoid: BTreeSet<String> = ["x".to_string()].into_iter().collect();
        let renamed = alpha_rename(&f, &avoid);
        // Both binders renamed, independently.
        assert!(free_vars(&renamed).contains("y"));
        assert!(!all_var_names(&renamed)
            .iter()
            .any(|v| v == "x" && free_vars(&renamed).contains("x")));
    }

    #[test]
    fn rename_free_is_capture_avoiding() {
        // Renaming the free y to x must not let the binder capture it.
        let f = parse("exists x : x ~ y").unwrap();
        let mut map = BTreeMap::new();
        map.insert("y".to_string(), "x".to_string());
        let renamed = rename_free(&f, &map);
        assert_eq!(renamed, parse("exists x1 : x1 ~ x").unwrap());
    }

    #[test]
    fn complement_swaps_adjacency_atoms() {
        let f = parse("exists x : exists y : x ~ y").unwrap();
        let c = complement_formula(&f).unwrap();
        assert_eq!(c, parse("exists x : exists y : !(x ~ y)").unwrap());
    }

    #[test]
    fn complement_leaves_equality_alone() {
        let f = parse("forall x : x = x").unwrap();
        assert_eq!(complement_formula(&f).unwrap(), f);
    }

    #[test]
    fn complement_rejects_interpreted_atoms() {
        let f = parse("forall x : InC0(x)").unwrap();
        assert_eq!(
            complement_formula(&f),
            Err(TransformError::RelAtomPresent("InC0".to_string()))
        );
    }

    #[test]
    fn complement_is_involution_modulo_double_negation() {
        let samples = [
            "exists x : exists y : x ~ y & !(x = y)",
            "forall x : (exists y : x ~ y) -> (exists z : !(x ~ z))",
            "existsu x : forall y : x ~ y | x = y",
        ];
        for text in samples {
            let f = parse(text).unwrap();
            let twice = complement_formula(&complement_formula(&f).unwrap()).unwrap();
            assert_eq!(
                eliminate_double_negation(&twice),
                eliminate_double_negation(&f),
                "{text}"
            );
        }
    }

    #[test]
    fn desugar_exists_unique_shape() {
        let f = parse("existsu x : x ~ y").unwrap();
        let d = desugar_exists_unique(&f);
        assert_eq!(
            d,
            parse("exists x : x ~ y & (forall x1 : x1 ~ y -> x1 = x)").unwrap()
        );
    }

    #[test]
    fn relation_membership_and_dedup() {
        let r = Relation::binary([(1, 2), (1, 2), (0, 3)]);
        assert_eq!(r.len(), 2);
        assert!(r.contains(&[1, 2]));
        assert!(!r.contains(&[2, 1]));
    }
}
