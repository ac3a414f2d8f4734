//! Incremental evaluator for flat programs.
//!
//! The evaluator keeps one ground program that only grows. Each shot adds
//! the instances enabled by atoms never seen before (semi-naive: every new
//! instance uses at least one new atom) and then recomputes truth values of
//! the whole store against the shot's facts only. Truth is propagated with
//! per-instance counters; instances with negation or aggregates wait until
//! the strata below them are complete.

mod compile;

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

use crate::analysis::{check_stratifiable, NotStratifiedError};
use crate::facts::{FactSet, Tuple};
use crate::lang::{assignment, AggFunc, Aggregate, Builtin, CmpOp, Condition, EvalError, Pred, Program, Term, Value};
use crate::symbol::Symbol;

use compile::{compile_rule, Arg, CAggregate, CRule, IndexRegistry, Pattern, Step, Subst};

type AtomId = u32;
type InstId = u32;

const UNSEEN: u32 = u32::MAX;
const NO_ATOM: AtomId = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundError {
    #[error("rule {rule} is not flat")]
    NotFlat { rule: usize },
    #[error("rule {rule}: variable `{variable}` is not bound")]
    Unsafe { rule: usize, variable: Symbol },
    #[error(transparent)]
    NotStratified(#[from] NotStratifiedError),
    #[error("rule {rule}: {source}")]
    Eval { rule: usize, source: EvalError },
    #[error("ground program exceeds the limit of {limit} rule instances")]
    ResourceLimit { limit: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ShotStats {
    pub ground_rules_total: usize,
    pub ground_rules_new: usize,
    /// Rule instances that fired in this shot.
    pub derivations: u64,
}

#[derive(Clone, Debug, Default)]
pub struct ShotResult {
    /// The unique answer set; includes the shot's facts.
    pub answer: FactSet,
    /// Heads of fired instances of non-`#temp` rules.
    pub persistent: FactSet,
    pub stats: ShotStats,
}

struct Instance {
    rule: u32,
    /// `NO_ATOM` for rules with aggregates, whose head is found per shot.
    head: AtomId,
    pos: Box<[AtomId]>,
    neg: Box<[AtomId]>,
    /// Grounding-time bindings, kept for rules with aggregates.
    subst: Option<Box<[Option<Value>]>>,
}

pub struct Evaluator {
    rules: Arc<Vec<CRule>>,
    num_strata: usize,
    /// Positive occurrences: predicate -> (rule, literal).
    occurs: FxHashMap<Pred, Vec<(usize, usize)>>,
    index_specs: Vec<(Pred, Vec<usize>)>,
    indexes: Vec<FxHashMap<Tuple, Vec<AtomId>>>,
    pred_indexes: FxHashMap<Pred, Vec<usize>>,
    limit: Option<usize>,

    atoms: Vec<(Pred, Tuple)>,
    atom_ids: FxHashMap<Pred, FxHashMap<Tuple, AtomId>>,
    seen_seq: Vec<u32>,
    next_seq: u32,
    pending: VecDeque<AtomId>,
    instances: Vec<Instance>,
    watchers: Vec<Vec<InstId>>,
    unconditional: Vec<InstId>,
    unconditional_done: bool,

    gen: u32,
    in_truth: bool,
    true_gen: Vec<u32>,
    persist_gen: Vec<u32>,
    inst_gen: Vec<u32>,
    missing: Vec<u32>,
    true_list: Vec<AtomId>,
    true_by_pred: FxHashMap<Pred, Vec<AtomId>>,
    persistent_list: Vec<AtomId>,
    queue: Vec<AtomId>,
    ready: Vec<Vec<InstId>>,
    derivations: u64,
}

impl Evaluator {
    /// Loads a flat, safe, stratified program. Errors name rules by their
    /// position in `program`.
    pub fn load_program(program: &Program) -> Result<Evaluator, GroundError> {
        Evaluator::load_with_ids(program, &(0..program.len()).collect::<Vec<_>>())
    }

    /// As [`Evaluator::load_program`], reporting rule `i` as `ids[i]`.
    pub fn load_with_ids(program: &Program, ids: &[usize]) -> Result<Evaluator, GroundError> {
        for (i, r) in program.rules.iter().enumerate() {
            if !r.is_flat() {
                return Err(GroundError::NotFlat { rule: ids[i] });
            }
        }
        let strat = check_stratifiable(program)?;
        let mut stratum_of = vec![0; program.len()];
        for (s, rules) in strat.strata.iter().enumerate() {
            for &r in rules {
                stratum_of[r] = s;
            }
        }
        let mut registry = IndexRegistry::default();
        let mut rules = Vec::with_capacity(program.len());
        for (i, r) in program.rules.iter().enumerate() {
            rules.push(compile_rule(r, ids[i], stratum_of[i], &mut registry)?);
        }
        let mut occurs: FxHashMap<Pred, Vec<(usize, usize)>> = FxHashMap::default();
        for (r, rule) in rules.iter().enumerate() {
            for (i, p) in rule.pos.iter().enumerate() {
                occurs.entry(p.pred).or_default().push((r, i));
            }
        }
        let mut pred_indexes: FxHashMap<Pred, Vec<usize>> = FxHashMap::default();
        for (i, (p, _)) in registry.specs.iter().enumerate() {
            pred_indexes.entry(*p).or_default().push(i);
        }
        let num_strata = strat.strata.len().max(1);
        Ok(Evaluator {
            rules: Arc::new(rules),
            num_strata,
            occurs,
            indexes: vec![FxHashMap::default(); registry.specs.len()],
            index_specs: registry.specs,
            pred_indexes,
            limit: None,
            atoms: Vec::new(),
            atom_ids: FxHashMap::default(),
            seen_seq: Vec::new(),
            next_seq: 0,
            pending: VecDeque::new(),
            instances: Vec::new(),
            watchers: Vec::new(),
            unconditional: Vec::new(),
            unconditional_done: false,
            gen: 0,
            in_truth: false,
            true_gen: Vec::new(),
            persist_gen: Vec::new(),
            inst_gen: Vec::new(),
            missing: Vec::new(),
            true_list: Vec::new(),
            true_by_pred: FxHashMap::default(),
            persistent_list: Vec::new(),
            queue: Vec::new(),
            ready: vec![Vec::new(); num_strata],
            derivations: 0,
        })
    }

    /// Caps the number of stored rule instances; exceeding it fails the shot.
    pub fn with_limit(mut self, limit: Option<usize>) -> Evaluator {
        self.limit = limit;
        self
    }

    /// Number of internal strata.
    pub fn strata(&self) -> usize {
        self.num_strata
    }

    pub fn ground_rules(&self) -> usize {
        self.instances.len()
    }

    pub fn shot(&mut self, facts: &FactSet) -> Result<ShotResult, GroundError> {
        self.gen += 1;
        self.in_truth = false;
        self.derivations = 0;
        self.true_list.clear();
        self.persistent_list.clear();
        self.queue.clear();
        for v in self.true_by_pred.values_mut() {
            v.clear();
        }
        for r in &mut self.ready {
            r.clear();
        }
        let before = self.instances.len();

        let mut input = Vec::with_capacity(facts.len());
        for p in facts.preds() {
            for t in facts.tuples(p) {
                input.push(self.intern(p, t.clone()));
            }
        }
        let result = self.evaluate(&input);
        self.in_truth = false;
        result?;

        let mut answer = FactSet::new();
        for &a in &self.true_list {
            let (p, t) = &self.atoms[a as usize];
            answer.insert_tuple(*p, t.clone());
        }
        let mut persistent = FactSet::new();
        for &a in &self.persistent_list {
            let (p, t) = &self.atoms[a as usize];
            persistent.insert_tuple(*p, t.clone());
        }
        Ok(ShotResult {
            answer,
            persistent,
            stats: ShotStats {
                ground_rules_total: self.instances.len(),
                ground_rules_new: self.instances.len() - before,
                derivations: self.derivations,
            },
        })
    }

    fn evaluate(&mut self, input: &[AtomId]) -> Result<(), GroundError> {
        // grounding
        for &a in input {
            self.mark_seen(a);
        }
        if !self.unconditional_done {
            self.unconditional_done = true;
            let rules = self.rules.clone();
            for (r, rule) in rules.iter().enumerate() {
                if rule.pos.is_empty() {
                    let mut found = Vec::new();
                    let subst = vec![None; rule.nvars];
                    let chosen = Vec::new();
                    self.exec(rule, 0, 0, subst, chosen, 0, usize::MAX, &mut found)?;
                    for (chosen, subst) in found {
                        self.create_instance(r, chosen, subst)?;
                    }
                }
            }
        }
        self.drain_pending()?;

        // truth
        self.in_truth = true;
        for &a in input {
            self.set_true(a);
        }
        for k in 0..self.unconditional.len() {
            let i = self.unconditional[k];
            self.inst_gen[i as usize] = self.gen;
            self.missing[i as usize] = 0;
            self.make_ready(i);
        }
        for s in 0..self.num_strata {
            loop {
                self.propagate();
                match self.ready[s].pop() {
                    Some(i) => self.eval_deferred(i)?,
                    None => break,
                }
            }
        }
        debug_assert!(self.ready.iter().all(Vec::is_empty));
        Ok(())
    }

    fn intern(&mut self, pred: Pred, args: Tuple) -> AtomId {
        let ids = self.atom_ids.entry(pred).or_default();
        if let Some(&id) = ids.get(&args) {
            return id;
        }
        let id = self.atoms.len() as AtomId;
        ids.insert(args.clone(), id);
        self.atoms.push((pred, args));
        self.seen_seq.push(UNSEEN);
        self.watchers.push(Vec::new());
        self.true_gen.push(0);
        self.persist_gen.push(0);
        id
    }

    fn lookup(&self, pred: Pred, args: &[Value]) -> Option<AtomId> {
        self.atom_ids.get(&pred).and_then(|m| m.get(args)).copied()
    }

    fn mark_seen(&mut self, a: AtomId) {
        if self.seen_seq[a as usize] != UNSEEN {
            return;
        }
        self.seen_seq[a as usize] = self.next_seq;
        self.next_seq += 1;
        let (pred, args) = &self.atoms[a as usize];
        if let Some(idx) = self.pred_indexes.get(pred) {
            for &i in idx {
                let key: Tuple = self.index_specs[i].1.iter().map(|&k| args[k]).collect();
                self.indexes[i].entry(key).or_default().push(a);
            }
        }
        self.pending.push_back(a);
    }

    /// Delta grounding for every atom that became seen.
    fn drain_pending(&mut self) -> Result<(), GroundError> {
        let rules = self.rules.clone();
        while let Some(a) = self.pending.pop_front() {
            let (pred, args) = self.atoms[a as usize].clone();
            let seq = self.seen_seq[a as usize];
            let Some(occ) = self.occurs.get(&pred).cloned() else {
                continue;
            };
            for (r, lit) in occ {
                let rule = &rules[r];
                let mut subst = vec![None; rule.nvars];
                if !unify(&rule.pos[lit], &args, &mut subst) {
                    continue;
                }
                let mut chosen = vec![NO_ATOM; rule.pos.len()];
                chosen[lit] = a;
                let mut found = Vec::new();
                self.exec(rule, lit, 0, subst, chosen, seq, lit, &mut found)?;
                for (chosen, subst) in found {
                    self.create_instance(r, chosen, subst)?;
                }
            }
        }
        Ok(())
    }

    /// Runs `rule.plans[plan]` from `step`. Literals before `start` may only
    /// use atoms seen strictly before `seq`, later ones atoms seen up to
    /// `seq`, so each combination is produced once.
    #[allow(clippy::too_many_arguments)]
    fn exec(
        &self,
        rule: &CRule,
        plan: usize,
        step: usize,
        mut subst: Subst,
        chosen: Vec<AtomId>,
        seq: u32,
        start: usize,
        out: &mut Vec<(Vec<AtomId>, Subst)>,
    ) -> Result<(), GroundError> {
        let steps = &rule.plans[plan].steps;
        let mut k = step;
        while k < steps.len() {
            match &steps[k] {
                Step::Assign { var, expr } => {
                    let v = expr
                        .eval(&subst)
                        .map_err(|source| GroundError::Eval { rule: rule.id, source })?;
                    subst[*var as usize] = Some(v);
                }
                Step::Check(b) => {
                    if !b
                        .holds(&subst)
                        .map_err(|source| GroundError::Eval { rule: rule.id, source })?
                    {
                        return Ok(());
                    }
                }
                Step::Join { lit, index, key } => {
                    let pattern = &rule.pos[*lit];
                    let key: Tuple = key
                        .iter()
                        .map(|&i| pattern.args[i].value(&subst).expect("bound key"))
                        .collect();
                    let Some(bucket) = self.indexes[*index].get(&key) else {
                        return Ok(());
                    };
                    let strict = *lit < start;
                    for &a in bucket {
                        let s = self.seen_seq[a as usize];
                        if s > seq || (strict && s == seq) {
                            break;
                        }
                        let mut next = subst.clone();
                        if unify(pattern, &self.atoms[a as usize].1, &mut next) {
                            let mut c = chosen.clone();
                            c[*lit] = a;
                            self.exec(rule, plan, k + 1, next, c, seq, start, out)?;
                        }
                    }
                    return Ok(());
                }
            }
            k += 1;
        }
        out.push((chosen, subst));
        Ok(())
    }

    fn create_instance(&mut self, r: usize, pos: Vec<AtomId>, subst: Subst) -> Result<(), GroundError> {
        if let Some(limit) = self.limit {
            if self.instances.len() >= limit {
                return Err(GroundError::ResourceLimit { limit });
            }
        }
        let rules = self.rules.clone();
        let rule = &rules[r];
        let id = self.instances.len() as InstId;
        let (head, neg, keep) = if rule.partial() {
            (NO_ATOM, Vec::new(), Some(subst.into_boxed_slice()))
        } else {
            let h = rule.head.ground(&subst).expect("safe head");
            let head = self.intern(rule.head.pred, h);
            let neg: Vec<AtomId> = rule
                .neg
                .iter()
                .map(|p| {
                    let t = p.ground(&subst).expect("safe negative literal");
                    self.intern(p.pred, t)
                })
                .collect();
            (head, neg, None)
        };
        for &a in &pos {
            self.watchers[a as usize].push(id);
        }
        if pos.is_empty() {
            self.unconditional.push(id);
        }
        let npos = pos.len() as u32;
        let in_truth = self.in_truth;
        let mut missing = npos;
        if in_truth {
            missing = pos.iter().filter(|&&a| self.true_gen[a as usize] != self.gen).count() as u32;
        }
        self.instances.push(Instance {
            rule: r as u32,
            head,
            pos: pos.into_boxed_slice(),
            neg: neg.into_boxed_slice(),
            subst: keep,
        });
        self.inst_gen.push(if in_truth { self.gen } else { 0 });
        self.missing.push(missing);
        if head != NO_ATOM {
            self.mark_seen(head);
        }
        if in_truth && missing == 0 {
            self.make_ready(id);
        }
        Ok(())
    }

    fn set_true(&mut self, a: AtomId) -> bool {
        if self.true_gen[a as usize] == self.gen {
            return false;
        }
        self.true_gen[a as usize] = self.gen;
        self.true_list.push(a);
        let pred = self.atoms[a as usize].0;
        self.true_by_pred.entry(pred).or_default().push(a);
        self.queue.push(a);
        true
    }

    fn is_true(&self, a: AtomId) -> bool {
        self.true_gen[a as usize] == self.gen
    }

    fn fire(&mut self, rule: usize, head: AtomId) {
        self.derivations += 1;
        self.set_true(head);
        if !self.rules[rule].temp && self.persist_gen[head as usize] != self.gen {
            self.persist_gen[head as usize] = self.gen;
            self.persistent_list.push(head);
        }
    }

    fn make_ready(&mut self, i: InstId) {
        let inst = &self.instances[i as usize];
        let r = inst.rule as usize;
        let rule = &self.rules[r];
        if rule.deferred() {
            let s = rule.stratum;
            self.ready[s].push(i);
        } else {
            let head = inst.head;
            self.fire(r, head);
        }
    }

    fn propagate(&mut self) {
        while let Some(a) = self.queue.pop() {
            for k in 0..self.watchers[a as usize].len() {
                let i = self.watchers[a as usize][k] as usize;
                if self.inst_gen[i] != self.gen {
                    self.inst_gen[i] = self.gen;
                    self.missing[i] = self.instances[i].pos.len() as u32;
                }
                self.missing[i] -= 1;
                if self.missing[i] == 0 {
                    self.make_ready(i as InstId);
                }
            }
        }
    }

    fn eval_deferred(&mut self, i: InstId) -> Result<(), GroundError> {
        let rules = self.rules.clone();
        let inst = &self.instances[i as usize];
        let r = inst.rule as usize;
        let rule = &rules[r];
        if !rule.partial() {
            if inst.neg.iter().all(|&a| !self.is_true(a)) {
                let head = inst.head;
                self.fire(r, head);
            }
            return Ok(());
        }
        let mut subst: Subst = inst.subst.as_deref().expect("partial instance").to_vec();
        let err = |source| GroundError::Eval { rule: rule.id, source };
        // assignments from builtins and aggregates, to a fixpoint
        loop {
            let mut changed = false;
            for b in &rule.late {
                if let Some((v, e)) = b.assignment(&|v| subst[v as usize].is_some()) {
                    subst[v as usize] = Some(e.eval(&subst).map_err(err)?);
                    changed = true;
                }
            }
            for agg in &rule.aggs {
                if let Arg::Var(g) = agg.guard {
                    if agg.op == CmpOp::Eq
                        && subst[g as usize].is_none()
                        && agg.globals.iter().all(|v| subst[*v as usize].is_some())
                    {
                        let value = self.aggregate(agg, &subst).map_err(err)?;
                        subst[g as usize] = Some(Value::Int(value));
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for b in &rule.late {
            if b.vars().iter().any(|v| subst[*v as usize].is_none()) || !b.holds(&subst).map_err(err)? {
                return Ok(());
            }
        }
        for agg in &rule.aggs {
            let Some(guard) = agg.guard.value(&subst) else {
                return Ok(());
            };
            let value = self.aggregate(agg, &subst).map_err(err)?;
            if !agg.op.holds(Value::Int(value), guard) {
                return Ok(());
            }
        }
        for p in &rule.neg {
            let Some(t) = p.ground(&subst) else {
                return Ok(());
            };
            if self.lookup(p.pred, &t).is_some_and(|a| self.is_true(a)) {
                return Ok(());
            }
        }
        let Some(h) = rule.head.ground(&subst) else {
            return Ok(());
        };
        let head = self.intern(rule.head.pred, h);
        self.mark_seen(head);
        self.drain_pending()?;
        self.fire(r, head);
        Ok(())
    }

    /// Aggregate value over the atoms true so far in this shot.
    fn aggregate(&self, agg: &CAggregate, subst: &Subst) -> Result<i64, EvalError> {
        let mut tuples: FxHashSet<Vec<Value>> = FxHashSet::default();
        for e in &agg.elements {
            let mut base = subst.clone();
            for &v in &e.locals {
                base[v as usize] = None;
            }
            let mut matches = vec![base];
            for p in &e.atoms {
                let mut next = Vec::new();
                let atoms = self.true_by_pred.get(&p.pred).map(Vec::as_slice).unwrap_or(&[]);
                for s in &matches {
                    for &a in atoms {
                        let mut m = s.clone();
                        if unify(p, &self.atoms[a as usize].1, &mut m) {
                            next.push(m);
                        }
                    }
                }
                matches = next;
            }
            'element: for mut s in matches {
                loop {
                    let mut changed = false;
                    for b in &e.builtins {
                        if let Some((v, x)) = b.assignment(&|v| s[v as usize].is_some()) {
                            s[v as usize] = Some(x.eval(&s)?);
                            changed = true;
                        }
                    }
                    if !changed {
                        break;
                    }
                }
                for b in &e.builtins {
                    if b.vars().iter().any(|v| s[*v as usize].is_none()) || !b.holds(&s)? {
                        continue 'element;
                    }
                }
                if let Some(t) = e.terms.iter().map(|t| t.value(&s)).collect::<Option<Vec<_>>>() {
                    tuples.insert(t);
                }
            }
        }
        fold_aggregate(agg.func, tuples.iter())
    }
}

fn fold_aggregate<'a>(func: AggFunc, tuples: impl Iterator<Item = &'a Vec<Value>>) -> Result<i64, EvalError> {
    match func {
        AggFunc::Count => Ok(tuples.count() as i64),
        AggFunc::Sum => {
            let mut sum: i64 = 0;
            for t in tuples {
                match t.first() {
                    Some(Value::Int(w)) => sum = sum.checked_add(*w).ok_or(EvalError::Overflow)?,
                    Some(Value::Sym(s)) => return Err(EvalError::NotAnInteger(*s)),
                    None => {}
                }
            }
            Ok(sum)
        }
    }
}

/// Binds the unbound variables of `p` to `args`; fails on any clash.
fn unify(p: &Pattern, args: &[Value], s: &mut Subst) -> bool {
    if p.args.len() != args.len() {
        return false;
    }
    for (a, v) in p.args.iter().zip(args) {
        match a {
            Arg::Const(c) => {
                if c != v {
                    return false;
                }
            }
            Arg::Var(x) => match s[*x as usize] {
                Some(b) if b != *v => return false,
                Some(_) => {}
                None => s[*x as usize] = Some(*v),
            },
        }
    }
    true
}

/// Result of evaluating a built-in under a substitution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinOutcome {
    Holds(bool),
    /// An assignment `V = e` bound `V`.
    Binds(Symbol, Value),
}

pub fn eval_builtin(b: &Builtin, subst: &BTreeMap<Symbol, Value>) -> Result<BuiltinOutcome, EvalError> {
    let lookup = |s: Symbol| subst.get(&s).copied();
    if let Some((v, e)) = assignment(b, &|s| subst.contains_key(&s)) {
        return Ok(BuiltinOutcome::Binds(v, e.eval(&lookup)?));
    }
    Ok(BuiltinOutcome::Holds(
        b.op.holds(b.lhs.eval(&lookup)?, b.rhs.eval(&lookup)?),
    ))
}

/// Evaluates an aggregate literal over `interpretation` with the global
/// variables fixed by `subst`. With `= T` and `T` unbound, binds `T`.
pub fn eval_aggregate(
    agg: &Aggregate,
    subst: &BTreeMap<Symbol, Value>,
    interpretation: &FactSet,
) -> Result<BuiltinOutcome, EvalError> {
    let mut tuples: FxHashSet<Vec<Value>> = FxHashSet::default();
    for e in &agg.elements {
        let mut matches = vec![subst.clone()];
        for c in &e.condition {
            let Condition::Atom(a) = c else { continue };
            let mut next = Vec::new();
            for s in &matches {
                'tuple: for t in interpretation.tuples(a.predicate()) {
                    let mut m = s.clone();
                    for (term, v) in a.terms.iter().zip(t.iter()) {
                        match term {
                            Term::Const(c) if c != v => continue 'tuple,
                            Term::Const(_) => {}
                            Term::Var(x) => match m.get(x) {
                                Some(b) if b != v => continue 'tuple,
                                Some(_) => {}
                                None => {
                                    m.insert(*x, *v);
                                }
                            },
                        }
                    }
                    next.push(m);
                }
            }
            matches = next;
        }
        'element: for mut s in matches {
            let builtins: Vec<&Builtin> = e
                .condition
                .iter()
                .filter_map(|c| match c {
                    Condition::Builtin(b) => Some(b),
                    Condition::Atom(_) => None,
                })
                .collect();
            loop {
                let mut changed = false;
                for b in &builtins {
                    if let Some((v, x)) = assignment(b, &|y| s.contains_key(&y)) {
                        let val = x.eval(&|y| s.get(&y).copied())?;
                        s.insert(v, val);
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            for b in &builtins {
                let lookup = |y: Symbol| s.get(&y).copied();
                match (b.lhs.eval(&lookup), b.rhs.eval(&lookup)) {
                    (Ok(l), Ok(r)) if b.op.holds(l, r) => {}
                    (Err(EvalError::Unbound(_)), _) | (_, Err(EvalError::Unbound(_))) | (Ok(_), Ok(_)) => {
                        continue 'element
                    }
                    (Err(x), _) | (_, Err(x)) => return Err(x),
                }
            }
            let t: Option<Vec<Value>> = e
                .terms
                .iter()
                .map(|t| match t {
                    Term::Const(c) => Some(*c),
                    Term::Var(v) => s.get(v).copied(),
                })
                .collect();
            if let Some(t) = t {
                tuples.insert(t);
            }
        }
    }
    let value = Value::Int(fold_aggregate(agg.func, tuples.iter())?);
    match agg.guard {
        Term::Var(g) if agg.op == CmpOp::Eq && !subst.contains_key(&g) => Ok(BuiltinOutcome::Binds(g, value)),
        Term::Var(g) => Ok(BuiltinOutcome::Holds(
            agg.op.holds(value, *subst.get(&g).ok_or(EvalError::Unbound(g))?),
        )),
        Term::Const(c) => Ok(BuiltinOutcome::Holds(agg.op.holds(value, c))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{load_program, parse_facts, parse_program, GroundAtom};
    use crate::rewrite::flatten;

    fn facts(src: &str) -> FactSet {
        if src.trim().is_empty() {
            return FactSet::new();
        }
        parse_facts(src).unwrap().into_iter().collect()
    }

    fn eval(src: &str) -> Evaluator {
        Evaluator::load_program(&load_program(src).unwrap()).unwrap()
    }

    fn atom(s: &str) -> GroundAtom {
        parse_facts(&format!("{s}.")).unwrap().remove(0)
    }

    fn subst(pairs: &[(&str, Value)]) -> BTreeMap<Symbol, Value> {
        pairs.iter().map(|(k, v)| (Symbol::intern(k), *v)).collect()
    }

    #[test]
    fn evaluator_is_send() {
        fn is_send<T: Send>() {}
        is_send::<Evaluator>();
    }

    #[test]
    fn rejects_non_flat() {
        let p = load_program("a :- b in [2].").unwrap();
        assert!(matches!(
            Evaluator::load_program(&p),
            Err(GroundError::NotFlat { rule: 0 })
        ));
    }

    #[test]
    fn p4_flat_is_one_stratum() {
        let (flat, _) = flatten(
            &load_program(
                "a(X) :- b(X) always in [2].
             b(Y) :- a(X) in [1], Y=X+1, c(Y).
             d(X) :- b(X) at least 2 in [4].
             e(X,Y) :- a(X), b(Y).",
            )
            .unwrap(),
        );
        let e = Evaluator::load_program(&flat.program).unwrap();
        assert_eq!(e.strata(), 1);
    }

    #[test]
    fn empty_program_echoes_facts() {
        let mut e = Evaluator::load_program(&Program::default()).unwrap();
        let f = facts("a(1). b.");
        assert_eq!(e.shot(&f).unwrap().answer, f);
        assert!(e.shot(&FactSet::new()).unwrap().answer.is_empty());
    }

    #[test]
    fn p2_flat_tick_zero() {
        let (flat, _) = flatten(&load_program("c(X) :- b(X). d(X) :- c(X) in [1].").unwrap());
        let mut e = Evaluator::load_program(&flat.program).unwrap();
        // the aux fact for `c in [1]` at tick 0 is c(5) itself
        let mut input = facts("b(5).");
        input.insert(GroundAtom::new("aux__1__c", vec![Value::Int(5)]));
        let r = e.shot(&input).unwrap();
        assert!(r.answer.contains(&atom("c(5)")));
        assert!(r.answer.contains(&atom("d(5)")));
    }

    #[test]
    fn repeated_shot_reuses_ground_program() {
        let mut e = eval("p(X,Z) :- e(X,Y), p(Y,Z). p(X,Y) :- e(X,Y).");
        let f = facts("e(1,2). e(2,3). e(3,4).");
        let first = e.shot(&f).unwrap();
        assert!(first.stats.ground_rules_new > 0);
        assert!(first.answer.contains(&atom("p(1,4)")));
        let second = e.shot(&f).unwrap();
        assert_eq!(second.stats.ground_rules_new, 0);
        assert_eq!(second.stats.ground_rules_total, first.stats.ground_rules_total);
        assert_eq!(second.answer, first.answer);
    }

    #[test]
    fn earlier_facts_are_not_true_later() {
        let mut e = eval("q(X) :- p(X), not r(X).");
        let r1 = e.shot(&facts("p(1). r(1). p(2).")).unwrap();
        assert!(!r1.answer.contains(&atom("q(1)")));
        assert!(r1.answer.contains(&atom("q(2)")));
        let r2 = e.shot(&facts("p(1).")).unwrap();
        assert!(r2.answer.contains(&atom("q(1)")));
        assert!(!r2.answer.contains(&atom("q(2)")));
        assert!(!r2.answer.contains(&atom("p(2)")));
    }

    #[test]
    fn stratified_negation_chain() {
        let mut e = eval(
            "reach(X) :- start(X). reach(Y) :- reach(X), edge(X,Y).
             unreached(X) :- node(X), not reach(X).
             ok :- not bad. bad :- unreached(X).",
        );
        let r = e
            .shot(&facts("start(1). edge(1,2). node(1). node(2). node(3)."))
            .unwrap();
        assert!(r.answer.contains(&atom("unreached(3)")));
        assert!(r.answer.contains(&atom("bad")));
        assert!(!r.answer.contains(&atom("ok")));
        let r = e
            .shot(&facts("start(1). edge(1,2). edge(2,3). node(1). node(2). node(3)."))
            .unwrap();
        assert!(!r.answer.contains(&atom("bad")));
        assert!(r.answer.contains(&atom("ok")));
    }

    #[test]
    fn aggregates_assign_and_compare() {
        let mut e = eval(
            "total(T) :- #sum{N,C: carPassing(C,N)} = T.
             busy :- #count{C: carPassing(C,N)} >= 2.
             next(S) :- total(T), S = T + 1.",
        );
        let r = e.shot(&facts("carPassing(c1,2). carPassing(c2,3).")).unwrap();
        assert!(r.answer.contains(&atom("total(5)")));
        assert!(r.answer.contains(&atom("next(6)")));
        assert!(r.answer.contains(&atom("busy")));
        let r = e.shot(&facts("")).unwrap();
        assert!(r.answer.contains(&atom("total(0)")));
        assert!(!r.answer.contains(&atom("busy")));
    }

    #[test]
    fn aggregate_with_global_variable() {
        let mut e = eval("deg(X,D) :- node(X), #count{Y: edge(X,Y)} = D.");
        let r = e.shot(&facts("node(1). node(2). edge(1,2). edge(1,3).")).unwrap();
        assert!(r.answer.contains(&atom("deg(1,2)")));
        assert!(r.answer.contains(&atom("deg(2,0)")));
    }

    #[test]
    fn temp_rules_are_not_persistent() {
        let mut e = eval("#temp c(X) :- b(X). d(X) :- c(X). c(X) :- a(X).");
        let r = e.shot(&facts("b(1). a(2).")).unwrap();
        assert!(r.answer.contains(&atom("c(1)")));
        assert!(!r.persistent.contains(&atom("c(1)")));
        assert!(r.persistent.contains(&atom("c(2)")));
        assert!(r.persistent.contains(&atom("d(1)")));
    }

    #[test]
    fn resource_limit() {
        let mut e = eval("p(X,Y) :- a(X), a(Y).").with_limit(Some(5));
        let err = e.shot(&facts("a(1). a(2). a(3).")).unwrap_err();
        assert_eq!(err, GroundError::ResourceLimit { limit: 5 });
    }

    #[test]
    fn arithmetic_error_names_rule() {
        let mut e = eval("q. r(Y) :- p(X), Y = 10 / X.");
        let err = e.shot(&facts("p(0).")).unwrap_err();
        assert_eq!(
            err,
            GroundError::Eval {
                rule: 1,
                source: EvalError::DivisionByZero
            }
        );
    }

    #[test]
    fn builtin_evaluation() {
        let p = parse_program("h :- Y = X+1, W >= Et, 5 < 3.").unwrap();
        let b = |i: usize| match &p.rules[0].body[i] {
            crate::lang::BodyLiteral::Builtin(b) => b.clone(),
            _ => unreachable!(),
        };
        assert_eq!(
            eval_builtin(&b(0), &subst(&[("X", Value::Int(3))])).unwrap(),
            BuiltinOutcome::Binds(Symbol::intern("Y"), Value::Int(4))
        );
        assert_eq!(
            eval_builtin(&b(1), &subst(&[("W", Value::Int(30)), ("Et", Value::Int(30))])).unwrap(),
            BuiltinOutcome::Holds(true)
        );
        assert_eq!(
            eval_builtin(&b(2), &BTreeMap::new()).unwrap(),
            BuiltinOutcome::Holds(false)
        );
    }

    #[test]
    fn aggregate_evaluation() {
        let p = parse_program(
            "h(T) :- #sum{N,C: carPassing(C,N)} = T. g(T) :- #count{X: p(X)} = T. k(T) :- #sum{N: w(C,N)} = T.",
        )
        .unwrap();
        let agg = |r: usize| p.rules[r].aggregates().next().unwrap().clone();
        let interp = facts("carPassing(c1,2). carPassing(c2,3). w(a,4). w(b,4).");
        assert_eq!(
            eval_aggregate(&agg(0), &BTreeMap::new(), &interp).unwrap(),
            BuiltinOutcome::Binds(Symbol::intern("T"), Value::Int(5))
        );
        assert_eq!(
            eval_aggregate(&agg(1), &BTreeMap::new(), &interp).unwrap(),
            BuiltinOutcome::Binds(Symbol::intern("T"), Value::Int(0))
        );
        // duplicate tuples collapse: {4} once
        assert_eq!(
            eval_aggregate(&agg(2), &BTreeMap::new(), &interp).unwrap(),
            BuiltinOutcome::Binds(Symbol::intern("T"), Value::Int(4))
        );
    }
}
