//! Builders for the clique-partition predicates (central membership, part
//! common-neighbourhood, derived edges, neighbourhood-size comparison), the
//! relativization transform, composed sentences, exact oracle tables, and
//! bounded spectrum search.
//!
//! Every predicate comes in two builds. The *interpreted* build leaves
//! `InC0`/`CN`/`Hedge` as relation atoms to be bound to [`OracleTables`],
//! which makes evaluation exact with respect to the witness partition. The
//! *pure* build inlines those predicates as plain graph formulas, so the
//! output is a genuine first-order sentence about the graph alone.

use crate::graph::{Graph, GraphError, PartitionedGraph};
use crate::logic::{
    alpha_rename, free_vars, parse, rename_free, Formula, Relation, Relations,
};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Default vertex cap for exhaustive spectrum search.
pub const SPECTRUM_CAP: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("expected a sentence; free variables: {0:?}")]
    NotASentence(Vec<String>),
    #[error("interpreted relation atom {0} is not allowed in this input")]
    RelAtomPresent(String),
    #[error("vertex {0} is not in a side part")]
    NotSidePart(usize),
    #[error("spectrum search over {n}-vertex graphs exceeds the cap {cap}; satisfiability over all graph sizes is undecidable, only bounded search is offered")]
    SpectrumCapExceeded { n: usize, cap: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// The four partition predicates with first-order definitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredicateKind {
    /// One free variable `x`: the neighbourhood of `x` contains three
    /// pairwise non-adjacent vertices (the definable test for central
    /// membership).
    InC0,
    /// Two free variables `x, y`: `x` is central, `y` sits in a side part,
    /// and `x` is adjacent to every vertex of that part.
    Cn,
    /// Three free variables `x, y, z`: `x` and `y` are distinct central
    /// vertices joined in the derived graph of the central clique against
    /// the side part of `z`.
    Hedge,
    /// Two free variables `x, y`: some side part wires a matching that
    /// saturates the common neighbourhood of `y`'s part minus `x`'s side and
    /// leaves a spare on the other side, certifying a strictly larger
    /// common neighbourhood.
    Bigger,
}

const IN_C0_TEXT: &str = "exists x1 x2 x3 : x ~ x1 & x ~ x2 & x ~ x3 \
    & !(x1 = x2) & !(x1 = x3) & !(x2 = x3) \
    & !(x1 ~ x2) & !(x1 ~ x3) & !(x2 ~ x3)";

const CN_TEXT: &str =
    "InC0(x) & !InC0(y) & x ~ y & (forall z : !InC0(z) & z ~ y -> x ~ z)";

const HEDGE_TEXT: &str = "InC0(x) & InC0(y) & !InC0(z) & !(x = y) \
    & (exists z1 : (z1 = z | !InC0(z1) & z1 ~ z) & x ~ z1 & y ~ z1)";

const BIGGER_TEXT: &str = "!InC0(x) & !InC0(y) & !(x = y) & !(x ~ y) & (exists z : \
    (forall y1 : CN(y1, y) & !CN(y1, x) -> (existsu x1 : CN(x1, x) & !CN(x1, y) & Hedge(x1, y1, z))) \
    & (forall x1 : forall y1 : forall y2 : CN(x1, x) & !CN(x1, y) & CN(y1, y) & !CN(y1, x) \
        & CN(y2, y) & !CN(y2, x) & Hedge(x1, y1, z) & Hedge(x1, y2, z) -> y1 = y2) \
    & (exists x1 : CN(x1, x) & !CN(x1, y) & (forall y1 : CN(y1, y) & !CN(y1, x) -> !Hedge(x1, y1, z))))";

fn parse_template(text: &str) -> Formula {
    parse(text).expect("builtin formula text parses")
}

/// Builds one of the partition predicates. With `interpreted = true` the
/// predicates stay as relation atoms (`InC0`, `CN`, `Hedge`) for evaluation
/// against [`OracleTables`]; otherwise they are inlined into pure graph
/// language.
pub fn build_base_formula(kind: PredicateKind, interpreted: bool) -> Formula {
    let f = match kind {
        PredicateKind::InC0 => {
            if interpreted {
                return Formula::rel("InC0", &["x"]);
            }
            parse_template(IN_C0_TEXT)
        }
        PredicateKind::Cn => parse_template(CN_TEXT),
        PredicateKind::Hedge => parse_template(HEDGE_TEXT),
        PredicateKind::Bigger => parse_template(BIGGER_TEXT),
    };
    if interpreted {
        f
    } else {
        inline_predicates(&f)
    }
}

/// Replaces every `InC0`/`CN`/`Hedge`/`Bigger` relation atom by its graph
/// definition, renaming the definition's bound variables so nothing in scope
/// is captured.
pub fn inline_predicates(f: &Formula) -> Formula {
    fn instantiate(template: &Formula, params: &[&str], args: &[String], scope: &BTreeSet<String>) -> Formula {
        let mut avoid = scope.clone();
        avoid.extend(args.iter().cloned());
        let safe = alpha_rename(template, &avoid);
        let map: BTreeMap<String, String> = params
            .iter()
            .map(|p| p.to_string())
            .zip(args.iter().cloned())
            .collect();
        rename_free(&safe, &map)
    }

    fn rec(f: &Formula, scope: &mut BTreeSet<String>) -> Formula {
        match f {
            Formula::Rel(name, args) => {
                let (template, params): (Formula, &[&str]) = match name.as_str() {
                    "InC0" if args.len() == 1 => (parse_template(IN_C0_TEXT), &["x"]),
                    "CN" if args.len() == 2 => (parse_template(CN_TEXT), &["x", "y"]),
                    "Hedge" if args.len() == 3 => (parse_template(HEDGE_TEXT), &["x", "y", "z"]),
                    "Bigger" if args.len() == 2 => (parse_template(BIGGER_TEXT), &["x", "y"]),
                    _ => return f.clone(),
                };
                let expanded = instantiate(&template, params, args, scope);
                // Definitions may reference each other (CN and Hedge use
                // InC0; Bigger uses CN and Hedge), so keep expanding.
                rec(&expanded, scope)
            }
            Formula::Adj(..) | Formula::Eq(..) => f.clone(),
            Formula::Not(x) => Formula::not(rec(x, scope)),
            Formula::And(l, r) => Formula::and(rec(l, scope), rec(r, scope)),
            Formula::Or(l, r) => Formula::or(rec(l, scope), rec(r, scope)),
            Formula::Implies(l, r) => Formula::implies(rec(l, scope), rec(r, scope)),
            Formula::Iff(l, r) => Formula::iff(rec(l, scope), rec(r, scope)),
            Formula::Forall(v, b) | Formula::Exists(v, b) | Formula::ExistsUnique(v, b) => {
                let inserted = scope.insert(v.clone());
                let body = rec(b, scope);
                if inserted {
                    scope.remove(v);
                }
                match f {
                    Formula::Forall(..) => Formula::forall(v.clone(), body),
                    Formula::Exists(..) => Formula::exists(v.clone(), body),
                    _ => Formula::exists_unique(v.clone(), body),
                }
            }
        }
    }
    let mut scope = free_vars(f);
    rec(f, &mut scope)
}

// ============================================================================
// Oracle tables
// ============================================================================

/// Ground-truth tables for the partition predicates, computed directly from
/// the witness partition (no formula evaluation involved):
///
/// - `InC0(v)` iff `v` lies in the central clique;
/// - `CN(x, y)` iff `x` is central, `y` lies in side part `C_i`, and `x` is
///   a common neighbour of `C_i`;
/// - `Hedge(x, y, z)` iff `x != y` are central, `z` lies in side part `C_i`,
///   and some vertex of `C_i` is adjacent to both `x` and `y`.
#[derive(Debug)]
pub struct OracleTables {
    in_c0: Vec<u32>,
    cn: Vec<(u32, u32)>,
    hedge: Vec<[u32; 3]>,
}

impl OracleTables {
    pub fn in_c0(&self) -> &[u32] {
        &self.in_c0
    }

    pub fn cn(&self) -> &[(u32, u32)] {
        &self.cn
    }

    pub fn hedge(&self) -> &[[u32; 3]] {
        &self.hedge
    }

    /// Relation tables keyed by the atom names used in the builders.
    pub fn to_relations(&self) -> Relations {
        let mut rels = Relations::new();
        rels.insert("InC0".to_string(), Relation::unary(self.in_c0.iter().copied()));
        rels.insert("CN".to_string(), Relation::binary(self.cn.iter().copied()));
        rels.insert("Hedge".to_string(), Relation::ternary(self.hedge.iter().copied()));
        rels
    }
}

/// Computes [`OracleTables`] combinatorially from the witness partition.
pub fn oracle_tables(pg: &PartitionedGraph) -> OracleTables {
    let g = pg.graph();
    let in_c0: Vec<u32> = pg.central().iter().map(|&v| v as u32).collect();
    let c0_set = pg.part_set(0);

    let mut cn = Vec::new();
    let mut hedge = Vec::new();
    for i in 1..pg.parts().len() {
        let ncis = pg.part_common_neighborhood(i).intersection(&c0_set);
        for x in ncis.iter() {
            for &y in &pg.parts()[i] {
                cn.push((x as u32, y as u32));
            }
        }
        let part_mask = pg.part_set(i);
        let central = pg.central();
        for (ai, &a) in central.iter().enumerate() {
            for &b in &central[ai + 1..] {
                let witnessed = g
                    .row(a)
                    .iter()
                    .zip(g.row(b))
                    .zip(part_mask.words())
                    .any(|((x, y), z)| x & y & z != 0);
                if witnessed {
                    for &z in &pg.parts()[i] {
                        hedge.push([a as u32, b as u32, z as u32]);
                        hedge.push([b as u32, a as u32, z as u32]);
                    }
                }
            }
        }
    }
    OracleTables { in_c0, cn, hedge }
}

// ============================================================================
// Relativization
// ============================================================================

fn check_plain_sentence(phi: &Formula) -> Result<(), FormulaError> {
    let fv = free_vars(phi);
    if !fv.is_empty() {
        return Err(FormulaError::NotASentence(fv.into_iter().collect()));
    }
    if let Some(name) = phi.relation_names().into_iter().next() {
        return Err(FormulaError::RelAtomPresent(name));
    }
    Ok(())
}

/// Relativizes a sentence `phi` to a formula with free variables `x, y`:
/// adjacency atoms `a ~ b` become `Hedge(a, b, y)`, every quantifier is
/// restricted to `CN(., x)`, and the result is conjoined with
/// `!InC0(x) & !InC0(y)`. Under the oracle interpretation, with `x` in side
/// part `C_i` and `y` in side part `C_j`, the result holds exactly when the
/// derived graph of `N(C_i)` against `C_j` models `phi`.
pub fn relativize(phi: &Formula, interpreted: bool) -> Result<Formula, FormulaError> {
    check_plain_sentence(phi)?;
    let avoid: BTreeSet<String> = ["x".to_string(), "y".to_string()].into_iter().collect();
    let safe = alpha_rename(phi, &avoid);

    fn transform(f: &Formula) -> Formula {
        match f {
            Formula::Adj(a, b) => Formula::Rel(
                "Hedge".to_string(),
                vec![a.clone(), b.clone(), "y".to_string()],
            ),
            Formula::Eq(..) => f.clone(),
            Formula::Rel(..) => unreachable!("checked to be over adjacency/equality atoms"),
            Formula::Not(x) => Formula::not(transform(x)),
            Formula::And(l, r) => Formula::and(transform(l), transform(r)),
            Formula::Or(l, r) => Formula::or(transform(l), transform(r)),
            Formula::Implies(l, r) => Formula::implies(transform(l), transform(r)),
            Formula::Iff(l, r) => Formula::iff(transform(l), transform(r)),
            Formula::Exists(v, b) => Formula::exists(
                v.clone(),
                Formula::and(Formula::rel("CN", &[v, "x"]), transform(b)),
            ),
            Formula::ExistsUnique(v, b) => Formula::exists_unique(
                v.clone(),
                Formula::and(Formula::rel("CN", &[v, "x"]), transform(b)),
            ),
            Formula::Forall(v, b) => Formula::forall(
                v.clone(),
                Formula::implies(Formula::rel("CN", &[v, "x"]), transform(b)),
            ),
        }
    }

    let body = Formula::and_all(vec![
        Formula::not(Formula::rel("InC0", &["x"])),
        Formula::not(Formula::rel("InC0", &["y"])),
        transform(&safe),
    ]);
    Ok(if interpreted { body } else { inline_predicates(&body) })
}

/// The sentence `exists x y : Phi(x, y)` for the relativization `Phi` of
/// `phi`: some pair of side parts yields a derived graph modelling `phi`.
pub fn build_probe(phi: &Formula, interpreted: bool) -> Result<Formula, FormulaError> {
    let rel = relativize(phi, interpreted)?;
    Ok(Formula::exists("x", Formula::exists("y", rel)))
}

/// Composes two sentences into the scale-sensitive sentence
/// `exists x y : Phi1(x, y) & !(exists xp yp : Bigger(xp, x) & Phi0(xp, yp))`:
/// it holds when `phi1` is realized by some part pair whose first
/// neighbourhood size cannot be beaten by any part realizing `phi0`.
pub fn build_alternator(
    phi0: &Formula,
    phi1: &Formula,
    interpreted: bool,
) -> Result<Formula, FormulaError> {
    let phi1_rel = relativize(phi1, interpreted)?;
    let phi0_rel = {
        let base = relativize(phi0, interpreted)?;
        let mut map = BTreeMap::new();
        map.insert("x".to_string(), "xp".to_string());
        map.insert("y".to_string(), "yp".to_string());
        rename_free(&base, &map)
    };
    let bigger = {
        let base = build_base_formula(PredicateKind::Bigger, interpreted);
        let mut map = BTreeMap::new();
        map.insert("x".to_string(), "xp".to_string());
        map.insert("y".to_string(), "x".to_string());
        rename_free(&base, &map)
    };
    let inner = Formula::exists(
        "xp",
        Formula::exists("yp", Formula::and(bigger, phi0_rel)),
    );
    Ok(Formula::exists(
        "x",
        Formula::exists(
            "y",
            Formula::and(phi1_rel, Formula::not(inner)),
        ),
    ))
}

// ============================================================================
// Combinatorial oracles for Bigger
// ============================================================================

/// Combinatorial semantics of the `Bigger` formula: with `x` in side part
/// `C_i` and `y` in side part `C_j`, true iff some side part `C_k` witnesses,
/// in the derived graph over the central clique, a matching in which every
/// vertex of `N(C_j) \ N(C_i)` has exactly one neighbour in
/// `N(C_i) \ N(C_j)`, no vertex is shared, and at least one vertex of
/// `N(C_i) \ N(C_j)` stays unmatched.
pub fn oracle_bigger(pg: &PartitionedGraph, x: usize, y: usize) -> Result<bool, FormulaError> {
    let n = pg.graph().n();
    if x >= n {
        return Err(FormulaError::Graph(GraphError::InvalidVertex { vertex: x, n }));
    }
    if y >= n {
        return Err(FormulaError::Graph(GraphError::InvalidVertex { vertex: y, n }));
    }
    let i = pg.part_of(x);
    let j = pg.part_of(y);
    if i == 0 {
        return Err(FormulaError::NotSidePart(x));
    }
    if j == 0 {
        return Err(FormulaError::NotSidePart(y));
    }
    if x == y || pg.graph().has_edge(x, y) {
        return Ok(false);
    }
    let c0 = pg.part_set(0);
    let ni = pg.part_common_neighborhood(i).intersection(&c0);
    let nj = pg.part_common_neighborhood(j).intersection(&c0);
    let side_a: Vec<usize> = ni.iter().filter(|&v| !nj.contains(v)).collect();
    let side_b: Vec<usize> = nj.iter().filter(|&v| !ni.contains(v)).collect();

    let g = pg.graph();
    for k in 1..pg.parts().len() {
        let mask = pg.part_set(k);
        let derived_edge = |a: usize, b: usize| -> bool {
            g.row(a)
                .iter()
                .zip(g.row(b))
                .zip(mask.words())
                .any(|((p, q), m)| p & q & m != 0)
        };
        let mut used = vec![false; side_a.len()];
        let mut ok = true;
        for &b in &side_b {
            let mut matched: Option<usize> = None;
            for (ai, &a) in side_a.iter().enumerate() {
                if derived_edge(a, b) {
                    if matched.is_some() {
                        matched = None;
                        ok = false;
                        break;
                    }
                    matched = Some(ai);
                }
            }
            if !ok {
                break;
            }
            match matched {
                Some(ai) if !used[ai] => used[ai] = true,
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && used.iter().any(|&u| !u) {
            return Ok(true);
        }
        if ok && side_b.is_empty() && !side_a.is_empty() {
            return Ok(true);
        }
    }
    Ok(false)
}

// ============================================================================
// Induced-subgraph sentence
// ============================================================================

/// Sentence asserting that the smallest unipolar, non-co-unipolar graph
/// occurs as an induced subgraph. Literals are pushed to the shallowest
/// quantifier where both endpoints are bound, and vertices are ordered
/// edges-first, so evaluation prunes early.
pub fn build_unip() -> Formula {
    let h = crate::graph::smallest_unipolar_not_counipolar();
    induced_subgraph_sentence(h)
}

/// `exists v1 .. vh :` pairwise distinct with adjacency exactly matching `h`.
pub fn induced_subgraph_sentence(h: &Graph) -> Formula {
    let n = h.n();
    assert!(n >= 1, "pattern graph must be non-empty");
    // Order vertices so each next one has as many edges as possible into the
    // already-placed prefix.
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let first = (0..n).max_by_key(|&v| h.degree(v)).unwrap();
    order.push(first);
    placed[first] = true;
    while order.len() < n {
        let next = (0..n)
            .filter(|&v| !placed[v])
            .max_by_key(|&v| {
                (
                    order.iter().filter(|&&u| h.has_edge(u, v)).count(),
                    std::cmp::Reverse(v),
                )
            })
            .unwrap();
        order.push(next);
        placed[next] = true;
    }
    let var = |idx: usize| format!("v{}", idx + 1);
    // Innermost level first.
    let mut formula: Option<Formula> = None;
    for level in (0..n).rev() {
        let mut lits = Vec::new();
        for earlier in 0..level {
            let (u, v) = (order[earlier], order[level]);
            lits.push(Formula::not(Formula::var_eq(var(earlier), var(level))));
            let atom = Formula::adj(var(earlier), var(level));
            lits.push(if h.has_edge(u, v) { atom } else { Formula::not(atom) });
        }
        if let Some(inner) = formula.take() {
            lits.push(inner);
        }
        let body = if lits.is_empty() {
            Formula::var_eq(var(level), var(level))
        } else {
            Formula::and_all(lits)
        };
        formula = Some(Formula::exists(var(level), body));
    }
    formula.unwrap()
}

// ============================================================================
// Spectrum search
// ============================================================================

/// Whether some labelled graph on exactly `n` vertices satisfies `phi`,
/// by exhaustive search over all `2^C(n,2)` graphs. `n` must not exceed
/// `cap`; there is no general algorithm for unbounded `n`.
pub fn spectrum_contains(phi: &Formula, n: usize, cap: usize) -> Result<bool, FormulaError> {
    if n > cap {
        return Err(FormulaError::SpectrumCapExceeded { n, cap });
    }
    let fv = free_vars(phi);
    if !fv.is_empty() {
        return Err(FormulaError::NotASentence(fv.into_iter().collect()));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    let env = crate::logic::Environment::new();
    let rels = Relations::new();
    for mask in 0u64..1 << pairs.len() {
        let mut g = Graph::new(n);
        for (b, &(u, v)) in pairs.iter().enumerate() {
            if mask >> b & 1 == 1 {
                g.add_edge(u, v);
            }
        }
        if crate::logic::evaluate_with(&g, &rels, phi, &env)
            .expect("sentence over adjacency/equality cannot fail")
        {
            return Ok(true);
        }
    }
    Ok(false)
}

/// The side-part pairs realizing `phi`: true iff some `i, j > 0` make the
/// derived graph of `N(C_i)` against `C_j` model `phi`. This is the
/// combinatorial ground truth that the probe sentence encodes in logic;
/// `size_cap` restricts the scan to base sets `N(C_i)` of at most that many
/// vertices (pass `usize::MAX` for the full scan).
pub fn probe_holds_combinatorial(
    pg: &PartitionedGraph,
    phi: &Formula,
    size_cap: usize,
) -> Result<bool, FormulaError> {
    check_plain_sentence(phi)?;
    let g = pg.graph();
    let c0 = pg.part_set(0);
    let env = crate::logic::Environment::new();
    let rels = Relations::new();
    let mut bases: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 1..pg.parts().len() {
        let ni = pg.part_common_neighborhood(i).intersection(&c0);
        let verts: Vec<usize> = ni.iter().collect();
        if verts.len() <= size_cap {
            bases.push((i, verts));
        }
    }
    bases.sort_by_key(|(_, v)| v.len());
    for (_, verts) in &bases {
        for j in 1..pg.parts().len() {
            let witness = pg.part_set(j);
            let view = crate::graph::DerivedGraphView::new(g, verts, &witness);
            if crate::logic::evaluate_with(&view, &rels, phi, &env)
                .expect("plain sentence cannot fail")
            {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Materialized variant used for cross-validation at small sizes.
pub fn derived_part_graph(pg: &PartitionedGraph, i: usize, j: usize) -> (Graph, Vec<usize>) {
    let c0 = pg.part_set(0);
    let s = pg.part_common_neighborhood(i).intersection(&c0);
    let t = pg.part_set(j);
    crate::graph::derived_graph(pg.graph(), &s, &t).expect("parts are in range")
}

// ============================================================================
// Tests
// ============================================================================
