//! Optimized evaluator with Tarskian semantics.
//!
//! The formula is compiled to an arena with interned variables. Two
//! optimizations are applied, both semantically transparent (exact agreement
//! with [`super::reference`] is part of the test suite):
//!
//! - quantifier candidates are restricted by atoms that guard the body: a
//!   conjunct `v ~ w`, `v = w`, `!(v ~ w)` or `R(.., v, ..)` with the other
//!   variable already bound narrows the values `v` can take (for `forall`,
//!   guards are read from the antecedent of a top-level implication, where
//!   skipped values satisfy the formula vacuously);
//! - subformulas with at most two free variables are memoized per
//!   evaluation call, keyed by subformula identity and the bound values.

use super::{Environment, Formula, Relation, Relations, Structure};
use crate::bits::{self, Ones};
use crate::graph::GraphAccess;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("relation {relation} has arity {expected} but the atom has {got} arguments")]
    ArityMismatch {
        relation: String,
        expected: usize,
        got: usize,
    },
}

type VarId = u32;
type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum QuantKind {
    Forall,
    Exists,
    ExistsUnique,
}

#[derive(Debug)]
enum Node {
    Adj(VarId, VarId),
    Eq(VarId, VarId),
    Rel { rel: u32, args: Vec<VarId> },
    Not(NodeId),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
    Implies(NodeId, NodeId),
    Iff(NodeId, NodeId),
    Quant {
        kind: QuantKind,
        var: VarId,
        body: NodeId,
    },
}

/// Candidate filter for one quantifier, derived from a guarding atom.
#[derive(Debug)]
enum Guard {
    Neighbors(VarId),
    NonNeighbors(VarId),
    Equal(VarId),
    RelProject {
        rel: u32,
        arity: usize,
        quant_pos: usize,
        bound: Option<(usize, VarId)>,
    },
}

struct Compiled {
    nodes: Vec<Node>,
    free: Vec<Vec<VarId>>,
    guards: Vec<Vec<Guard>>,
    var_names: Vec<String>,
    rel_names: Vec<String>,
    root: NodeId,
}

struct Compiler {
    nodes: Vec<Node>,
    free: Vec<Vec<VarId>>,
    guards: Vec<Vec<Guard>>,
    var_ids: HashMap<String, VarId>,
    var_names: Vec<String>,
    rel_ids: HashMap<String, u32>,
    rel_names: Vec<String>,
}

fn merge_sorted(a: &[VarId], b: &[VarId]) -> Vec<VarId> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        if out.last() != Some(&next) {
            out.push(next);
        }
    }
    out
}

impl Compiler {
    fn var(&mut self, name: &str) -> VarId {
        if let Some(&id) = self.var_ids.get(name) {
            return id;
        }
        let id = self.var_names.len() as VarId;
        self.var_ids.insert(name.to_string(), id);
        self.var_names.push(name.to_string());
        id
    }

    fn rel(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.rel_ids.get(name) {
            return id;
        }
        let id = self.rel_names.len() as u32;
        self.rel_ids.insert(name.to_string(), id);
        self.rel_names.push(name.to_string());
        id
    }

    fn push(&mut self, node: Node, free: Vec<VarId>, guards: Vec<Guard>) -> NodeId {
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node);
        self.free.push(free);
        self.guards.push(guards);
        id
    }

    fn go(&mut self, f: &Formula) -> NodeId {
        match f {
            Formula::Adj(a, b) => {
                let (a, b) = (self.var(a), self.var(b));
                self.push(Node::Adj(a, b), merge_sorted(&[a], &[b]), Vec::new())
            }
            Formula::Eq(a, b) => {
                let (a, b) = (self.var(a), self.var(b));
                self.push(Node::Eq(a, b), merge_sorted(&[a], &[b]), Vec::new())
            }
            Formula::Rel(name, args) => {
                let rel = self.rel(name);
                let ids: Vec<VarId> = args.iter().map(|a| self.var(a)).collect();
                let mut free = ids.clone();
                free.sort_unstable();
                free.dedup();
                self.push(Node::Rel { rel, args: ids }, free, Vec::new())
            }
            Formula::Not(x) => {
                let c = self.go(x);
                self.push(Node::Not(c), self.free[c as usize].clone(), Vec::new())
            }
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
                let lc = self.go(l);
                let rc = self.go(r);
                let free = merge_sorted(&self.free[lc as usize], &self.free[rc as usize]);
                let node = match f {
                    Formula::And(..) => Node::And(lc, rc),
                    Formula::Or(..) => Node::Or(lc, rc),
                    Formula::Implies(..) => Node::Implies(lc, rc),
                    _ => Node::Iff(lc, rc),
                };
                self.push(node, free, Vec::new())
            }
            Formula::Forall(v, b) | Formula::Exists(v, b) | Formula::ExistsUnique(v, b) => {
                let var = self.var(v);
                let kind = match f {
                    Formula::Forall(..) => QuantKind::Forall,
                    Formula::Exists(..) => QuantKind::Exists,
                    _ => QuantKind::ExistsUnique,
                };
                let guards = self.extract_guards(kind, var, b);
                let body = self.go(b);
                let free: Vec<VarId> = self.free[body as usize]
                    .iter()
                    .copied()
                    .filter(|&x| x != var)
                    .collect();
                self.push(Node::Quant { kind, var, body }, free, guards)
            }
        }
    }

    /// Conjuncts guarding the quantified variable. For existentials these
    /// are the top-level conjuncts of the body (the body implies each, so a
    /// witness must satisfy them); for universals they come from the
    /// antecedent of a top-level implication (values violating the
    /// antecedent satisfy the body vacuously).
    fn extract_guards(&mut self, kind: QuantKind, var: VarId, body: &Formula) -> Vec<Guard> {
        let source = match kind {
            QuantKind::Exists | QuantKind::ExistsUnique => Some(body),
            QuantKind::Forall => match body {
                Formula::Implies(g, _) => Some(&**g),
                _ => None,
            },
        };
        let mut chain = Vec::new();
        if let Some(src) = source {
            collect_conjuncts(src, &mut chain);
        }
        let mut guards = Vec::new();
        for atom in chain {
            match atom {
                Formula::Adj(a, b) => {
                    let (a, b) = (self.var(a), self.var(b));
                    if a == var && b != var {
                        guards.push(Guard::Neighbors(b));
                    } else if b == var && a != var {
                        guards.push(Guard::Neighbors(a));
                    }
                }
                Formula::Eq(a, b) => {
                    let (a, b) = (self.var(a), self.var(b));
                    if a == var && b != var {
                        guards.push(Guard::Equal(b));
                    } else if b == var && a != var {
                        guards.push(Guard::Equal(a));
                    }
                }
                Formula::Not(inner) => {
                    if let Formula::Adj(a, b) = &**inner {
                        let (a, b) = (self.var(a), self.var(b));
                        if a == var && b != var {
                            guards.push(Guard::NonNeighbors(b));
                        } else if b == var && a != var {
                            guards.push(Guard::NonNeighbors(a));
                        }
                    }
                }
                Formula::Rel(name, args) => {
                    let ids: Vec<VarId> = args.iter().map(|a| self.var(a)).collect();
                    let positions: Vec<usize> = ids
                        .iter()
                        .enumerate()
                        .filter(|(_, &id)| id == var)
                        .map(|(p, _)| p)
                        .collect();
                    if positions.len() == 1 {
                        let rel = self.rel(name);
                        let quant_pos = positions[0];
                        let bound = ids
                            .iter()
                            .enumerate()
                            .find(|(p, &id)| *p != quant_pos && id != var)
                            .map(|(p, &id)| (p, id));
                        guards.push(Guard::RelProject {
                            rel,
                            arity: ids.len(),
                            quant_pos,
                            bound,
                        });
                    }
                }
                _ => {}
            }
        }
        guards
    }
}

fn collect_conjuncts<'f>(f: &'f Formula, out: &mut Vec<&'f Formula>) {
    match f {
        Formula::And(l, r) => {
            collect_conjuncts(l, out);
            collect_conjuncts(r, out);
        }
        other => out.push(other),
    }
}

fn compile(f: &Formula) -> Compiled {
    let mut c = Compiler {
        nodes: Vec::new(),
        free: Vec::new(),
        guards: Vec::new(),
        var_ids: HashMap::new(),
        var_names: Vec::new(),
        rel_ids: HashMap::new(),
        rel_names: Vec::new(),
    };
    let root = c.go(f);
    Compiled {
        nodes: c.nodes,
        free: c.free,
        guards: c.guards,
        var_names: c.var_names,
        rel_names: c.rel_names,
        root,
    }
}

struct Evaluator<'a, G: GraphAccess + ?Sized> {
    graph: &'a G,
    n: usize,
    row_words: usize,
    c: &'a Compiled,
    rels: Vec<Option<&'a Relation>>,
    env: Vec<Option<u32>>,
    memo: HashMap<u64, bool>,
    cand_bufs: Vec<Vec<u64>>,
    tmp_bufs: Vec<Vec<u64>>,
    depth: usize,
}

const MEMO_VALUE_LIMIT: u32 = 1 << 24;

impl<'a, G: GraphAccess + ?Sized> Evaluator<'a, G> {
    fn lookup(&self, var: VarId) -> Result<usize, EvalError> {
        self.env[var as usize]
            .map(|v| v as usize)
            .ok_or_else(|| EvalError::UnboundVariable(self.c.var_names[var as usize].clone()))
    }

    fn memo_key(&self, node: NodeId) -> Option<u64> {
        if node as usize >= 1 << 16 {
            return None;
        }
        let free = &self.c.free[node as usize];
        if free.len() > 2 {
            return None;
        }
        let mut key = (node as u64) << 48;
        for (slot, &v) in free.iter().enumerate() {
            let val = self.env[v as usize]?;
            if val >= MEMO_VALUE_LIMIT - 1 {
                return None;
            }
            key |= u64::from(val + 1) << (24 * slot);
        }
        Some(key)
    }

    fn eval(&mut self, node: NodeId) -> Result<bool, EvalError> {
        let key = self.memo_key(node);
        if let Some(k) = key {
            if let Some(&hit) = self.memo.get(&k) {
                return Ok(hit);
            }
        }
        let out = match &self.c.nodes[node as usize] {
            Node::Adj(a, b) => {
                let (x, y) = (self.lookup(*a)?, self.lookup(*b)?);
                self.graph.adjacent(x, y)
            }
            Node::Eq(a, b) => self.lookup(*a)? == self.lookup(*b)?,
            Node::Rel { rel, args } => {
                let relation = self.rels[*rel as usize]
                    .ok_or_else(|| EvalError::UnknownRelation(self.c.rel_names[*rel as usize].clone()))?;
                if relation.arity() != args.len() {
                    return Err(EvalError::ArityMismatch {
                        relation: self.c.rel_names[*rel as usize].clone(),
                        expected: relation.arity(),
                        got: args.len(),
                    });
                }
                let mut vals = [0u32; 3];
                for (slot, &a) in vals.iter_mut().zip(args) {
                    *slot = self.lookup(a)? as u32;
                }
                relation.contains(&vals[..args.len()])
            }
            Node::Not(x) => !self.eval(*x)?,
            Node::And(l, r) => {
                let (l, r) = (*l, *r);
                self.eval(l)? && self.eval(r)?
            }
            Node::Or(l, r) => {
                let (l, r) = (*l, *r);
                self.eval(l)? || self.eval(r)?
            }
            Node::Implies(l, r) => {
                let (l, r) = (*l, *r);
                !self.eval(l)? || self.eval(r)?
            }
            Node::Iff(l, r) => {
                let (l, r) = (*l, *r);
                let lv = self.eval(l)?;
                let rv = self.eval(r)?;
                lv == rv
            }
            Node::Quant { kind, var, body } => {
                let (kind, var, body) = (*kind, *var, *body);
                self.eval_quant(node, kind, var, body)?
            }
        };
        if let Some(k) = key {
            self.memo.insert(k, out);
        }
        Ok(out)
    }

    fn eval_quant(
        &mut self,
        node: NodeId,
        kind: QuantKind,
        var: VarId,
        body: NodeId,
    ) -> Result<bool, EvalError> {
        self.depth += 1;
        while self.cand_bufs.len() < self.depth {
            self.cand_bufs.push(vec![0u64; self.row_words]);
            self.tmp_bufs.push(vec![0u64; self.row_words]);
        }
        let mut cand = std::mem::take(&mut self.cand_bufs[self.depth - 1]);
        let mut tmp = std::mem::take(&mut self.tmp_bufs[self.depth - 1]);
        let restricted = self.build_candidates(node, &mut cand, &mut tmp);

        let saved = self.env[var as usize];
        let result = (|| -> Result<bool, EvalError> {
            let mut count = 0u32;
            let mut verdict = match kind {
                QuantKind::Forall => true,
                QuantKind::Exists => false,
                QuantKind::ExistsUnique => false,
            };
            let mut visit = |this: &mut Self, v: usize| -> Result<Option<bool>, EvalError> {
                this.env[var as usize] = Some(v as u32);
                let holds = this.eval(body)?;
                match kind {
                    QuantKind::Exists => {
                        if holds {
                            return Ok(Some(true));
                        }
                    }
                    QuantKind::Forall => {
                        if !holds {
                            return Ok(Some(false));
                        }
                    }
                    QuantKind::ExistsUnique => {
                        if holds {
                            count += 1;
                            if count > 1 {
                                return Ok(Some(false));
                            }
                        }
                    }
                }
                Ok(None)
            };
            if restricted {
                for v in Ones::new(&cand) {
                    if let Some(early) = visit(self, v)? {
                        verdict = early;
                        return Ok(verdict);
                    }
                }
            } else {
                for v in 0..self.n {
                    if let Some(early) = visit(self, v)? {
                        verdict = early;
                        return Ok(verdict);
                    }
                }
            }
            if kind == QuantKind::ExistsUnique {
                verdict = count == 1;
            }
            Ok(verdict)
        })();
        self.env[var as usize] = saved;
        self.cand_bufs[self.depth - 1] = cand;
        self.tmp_bufs[self.depth - 1] = tmp;
        self.depth -= 1;
        result
    }

    /// Intersects all applicable guards into `cand`. Returns false when no
    /// guard applied (callers then scan the full vertex range). Guards whose
    /// auxiliary variable is unbound, or whose relation is missing or of
    /// mismatched arity, are skipped; the body evaluation reports those
    /// errors if they matter.
    fn build_candidates(&self, node: NodeId, cand: &mut [u64], tmp: &mut [u64]) -> bool {
        let guards = &self.c.guards[node as usize];
        if guards.is_empty() {
            return false;
        }
        let mut restricted = false;
        let full_tail = bits::tail_mask(self.n);
        let init_full = |words: &mut [u64]| {
            words.fill(u64::MAX);
            if let Some(last) = words.last_mut() {
                *last = full_tail;
            }
        };
        init_full(cand);
        for guard in guards {
            match guard {
                Guard::Neighbors(w) => {
                    if let Some(val) = self.env[*w as usize] {
                        self.graph.neighbors_into(val as usize, tmp);
                        bits::and_assign(cand, tmp);
                        restricted = true;
                    }
                }
                Guard::NonNeighbors(w) => {
                    if let Some(val) = self.env[*w as usize] {
                        self.graph.neighbors_into(val as usize, tmp);
                        for t in tmp.iter_mut() {
                            *t = !*t;
                        }
                        if let Some(last) = tmp.last_mut() {
                            *last &= full_tail;
                        }
                        bits::and_assign(cand, tmp);
                        restricted = true;
                    }
                }
                Guard::Equal(w) => {
                    if let Some(val) = self.env[*w as usize] {
                        tmp.fill(0);
                        if (val as usize) < self.n {
                            bits::set_bit(tmp, val as usize);
                        }
                        bits::and_assign(cand, tmp);
                        restricted = true;
                    }
                }
                Guard::RelProject {
                    rel,
                    arity,
                    quant_pos,
                    bound,
                } => {
                    let Some(relation) = self.rels[*rel as usize] else {
                        continue;
                    };
                    if relation.arity() != *arity {
                        continue;
                    }
                    tmp.fill(0);
                    let n = self.n;
                    let mut emit = |v: u32| {
                        if (v as usize) < n {
                            bits::set_bit(tmp, v as usize);
                        }
                    };
                    match bound {
                        Some((pos, var)) => {
                            let Some(val) = self.env[*var as usize] else {
                                continue;
                            };
                            relation.project_matching(*quant_pos, *pos, val, &mut emit);
                        }
                        None => relation.project_all(*quant_pos, &mut emit),
                    }
                    bits::and_assign(cand, tmp);
                    restricted = true;
                }
            }
        }
        restricted
    }
}

/// Evaluates `f` over any graph-like adjacency provider plus interpreted
/// relation tables.
pub fn evaluate_with<G: GraphAccess + ?Sized>(
    graph: &G,
    relations: &Relations,
    f: &Formula,
    env: &Environment,
) -> Result<bool, EvalError> {
    let compiled = compile(f);
    let rels: Vec<Option<&Relation>> = compiled
        .rel_names
        .iter()
        .map(|name| relations.get(name))
        .collect();
    let n = graph.vertex_count();
    let mut slots = vec![None; compiled.var_names.len()];
    for (name, v) in env.iter() {
        if let Some(idx) = compiled.var_names.iter().position(|x| x == name) {
            slots[idx] = Some(u32::try_from(v).expect("vertex id fits in u32"));
        }
    }
    let mut ev = Evaluator {
        graph,
        n,
        row_words: bits::words_for(n).max(1),
        c: &compiled,
        rels,
        env: slots,
        memo: HashMap::new(),
        cand_bufs: Vec::new(),
        tmp_bufs: Vec::new(),
        depth: 0,
    };
    ev.eval(compiled.root)
}

/// Evaluates `f` on a structure under `env` (standard semantics; quantifiers
/// range over all vertices).
pub fn evaluate(s: &Structure, f: &Formula, env: &Environment) -> Result<bool, EvalError> {
    evaluate_with(s.graph(), s.relations(), f, env)
}
