//! Reference evaluator: a direct reading of the operational semantics,
//! recomputed from scratch at every step. The engine is tested against it.
//!
//! Observations are indexed families: two observed time points with equal
//! sets are counted twice. `always` over an empty observation is false.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::analysis::{check_stratifiable, NotStratifiedError, Stratification};
use crate::lang::{
    aggregate_globals, assignment, AggFunc, Aggregate, Atom, BodyLiteral, Builtin, Condition, EvalError, GroundAtom,
    Modality, Program, Rule, StreamingLiteral, Term, Value, WindowSet,
};
use crate::symbol::Symbol;

pub type AtomSet = BTreeSet<GroundAtom>;
pub type Substitution = BTreeMap<Symbol, Value>;

/// ⟨S_0, ..., S_n⟩.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stream {
    pub sets: Vec<AtomSet>,
}

impl Stream {
    pub fn new(sets: Vec<AtomSet>) -> Stream {
        Stream { sets }
    }

    /// Index of the last time point. Panics on an empty stream.
    pub fn n(&self) -> usize {
        self.sets.len() - 1
    }

    pub fn last(&self) -> &AtomSet {
        self.sets.last().expect("empty stream")
    }

    fn last_mut(&mut self) -> &mut AtomSet {
        self.sets.last_mut().expect("empty stream")
    }

    /// Adds `background` to every time point.
    pub fn with_background(mut self, background: &[GroundAtom]) -> Stream {
        for s in &mut self.sets {
            s.extend(background.iter().cloned());
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Trigger {
    /// Index of the rule in the program.
    pub rule: usize,
    pub subst: Substitution,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error(transparent)]
    NotStratified(#[from] NotStratifiedError),
    #[error("rule {rule}: {source}")]
    Eval { rule: usize, source: EvalError },
}

/// `{(n-d, S_{n-d}) | d ∈ D, n-d ≥ 0}`, most recent first.
pub fn backward_observation<'a>(stream: &'a Stream, window: &WindowSet) -> Vec<(usize, &'a AtomSet)> {
    let n = stream.n();
    window
        .offsets()
        .iter()
        .filter(|&&d| d as usize <= n)
        .map(|&d| (n - d as usize, &stream.sets[n - d as usize]))
        .collect()
}

/// Table 1 for a ground atom under a modality.
pub fn entails_ground(
    stream: &Stream,
    negated: bool,
    atom: &GroundAtom,
    modality: &Modality,
    window: &WindowSet,
) -> bool {
    let obs = backward_observation(stream, window);
    let hits = obs.iter().filter(|(_, s)| s.contains(atom)).count() as u64;
    let positive = match modality {
        Modality::AtLeast(c) => hits >= *c,
        Modality::In => hits >= 1,
        Modality::Bare => stream.last().contains(atom),
        Modality::AtMost(c) => hits <= *c,
        Modality::Always => !obs.is_empty() && hits == obs.len() as u64,
        Modality::Count(Term::Const(Value::Int(c))) => *c >= 0 && hits == *c as u64,
        Modality::Count(_) => false,
    };
    positive != negated
}

/// Table 1 for a ground streaming literal. Non-ground literals are not
/// entailed.
pub fn entails(stream: &Stream, lit: &StreamingLiteral) -> bool {
    match ground_atom(&lit.atom, &Substitution::new()) {
        Some(a) => entails_ground(stream, lit.negated, &a, &lit.modality, &lit.window),
        None => false,
    }
}

pub fn ground_atom(atom: &Atom, subst: &Substitution) -> Option<GroundAtom> {
    let args = atom
        .terms
        .iter()
        .map(|t| term_value(t, subst))
        .collect::<Option<Vec<_>>>()?;
    Some(GroundAtom { pred: atom.pred, args })
}

fn term_value(t: &Term, subst: &Substitution) -> Option<Value> {
    match t {
        Term::Const(c) => Some(*c),
        Term::Var(v) => subst.get(v).copied(),
    }
}

/// Extends `subst` so that `atom` matches `ground`.
fn unify(atom: &Atom, ground: &GroundAtom, subst: &Substitution) -> Option<Substitution> {
    if atom.pred != ground.pred || atom.terms.len() != ground.args.len() {
        return None;
    }
    let clash = atom.terms.iter().zip(&ground.args).any(|(t, g)| match t {
        Term::Const(c) => c != g,
        Term::Var(v) => subst.get(v).is_some_and(|b| b != g),
    });
    if clash {
        return None;
    }
    let mut out = subst.clone();
    for (t, g) in atom.terms.iter().zip(&ground.args) {
        match t {
            Term::Const(c) if c != g => return None,
            Term::Const(_) => {}
            Term::Var(v) => match out.get(v) {
                Some(b) if b != g => return None,
                Some(_) => {}
                None => {
                    out.insert(*v, *g);
                }
            },
        }
    }
    Some(out)
}

/// All applicable triggers of the given rules on `stream`.
pub fn applicable_triggers(program: &Program, rules: &[usize], stream: &Stream) -> Result<Vec<Trigger>, OracleError> {
    let mut out = Vec::new();
    for &r in rules {
        for subst in
            rule_substitutions(&program.rules[r], stream).map_err(|source| OracleError::Eval { rule: r, source })?
        {
            out.push(Trigger { rule: r, subst });
        }
    }
    Ok(out)
}

/// Substitutions under which `rule` is applicable: a join over the atoms
/// observed by positive streaming literals, then assignments, then a check
/// of every body literal.
fn rule_substitutions(rule: &Rule, stream: &Stream) -> Result<BTreeSet<Substitution>, EvalError> {
    let mut bound: BTreeSet<Symbol> = BTreeSet::new();
    let positives: Vec<Observed> = rule
        .streaming_literals()
        .filter(|l| !l.negated)
        .map(|lit| {
            let obs = backward_observation(stream, &effective_window(lit));
            let keys: Vec<usize> = lit
                .atom
                .terms
                .iter()
                .enumerate()
                .filter(|(_, t)| match t {
                    Term::Const(_) => true,
                    Term::Var(v) => bound.contains(v),
                })
                .map(|(i, _)| i)
                .collect();
            let mut candidates: HashMap<Vec<Value>, Vec<&GroundAtom>> = HashMap::new();
            let mut seen: BTreeSet<&GroundAtom> = BTreeSet::new();
            for g in obs.iter().flat_map(|(_, s)| s.iter()) {
                if g.pred == lit.atom.pred && g.args.len() == lit.atom.terms.len() && seen.insert(g) {
                    candidates
                        .entry(keys.iter().map(|&i| g.args[i]).collect())
                        .or_default()
                        .push(g);
                }
            }
            bound.extend(lit.atom.vars());
            bound.extend(lit.count_var());
            Observed {
                lit,
                obs,
                keys,
                candidates,
            }
        })
        .collect();
    let mut out = BTreeSet::new();
    join(rule, stream, &positives, Substitution::new(), &mut out)?;
    Ok(out)
}

/// A positive literal with its observation and the atoms it may match,
/// grouped by the arguments fixed by earlier literals.
struct Observed<'a> {
    lit: &'a StreamingLiteral,
    obs: Vec<(usize, &'a AtomSet)>,
    keys: Vec<usize>,
    candidates: HashMap<Vec<Value>, Vec<&'a GroundAtom>>,
}

fn join(
    rule: &Rule,
    stream: &Stream,
    positives: &[Observed],
    subst: Substitution,
    out: &mut BTreeSet<Substitution>,
) -> Result<(), EvalError> {
    let Some((first, rest)) = positives.split_first() else {
        if let Some(s) = complete(rule, stream, subst)? {
            out.insert(s);
        }
        return Ok(());
    };
    let key: Option<Vec<Value>> = first
        .keys
        .iter()
        .map(|&i| term_value(&first.lit.atom.terms[i], &subst))
        .collect();
    let Some(matches) = key.and_then(|k| first.candidates.get(&k)) else {
        return Ok(());
    };
    for &g in matches {
        let Some(mut next) = unify(&first.lit.atom, g, &subst) else {
            continue;
        };
        if let Some(cv) = first.lit.count_var() {
            next.entry(cv).or_insert_with(|| {
                let hits = first.obs.iter().filter(|(_, s)| s.contains(g)).count();
                Value::Int(hits as i64)
            });
        }
        join(rule, stream, rest, next, out)?;
    }
    Ok(())
}

fn effective_window(lit: &StreamingLiteral) -> WindowSet {
    match lit.modality {
        Modality::Bare => WindowSet::current(),
        _ => lit.window.clone(),
    }
}

/// Runs assignments to a fixpoint, then checks every body literal. Returns
/// the completed substitution when the rule is applicable.
fn complete(rule: &Rule, stream: &Stream, mut subst: Substitution) -> Result<Option<Substitution>, EvalError> {
    loop {
        let mut changed = false;
        for l in &rule.body {
            match l {
                BodyLiteral::Builtin(b) => {
                    if let Some((v, e)) = assignment(b, &|s| subst.contains_key(&s)) {
                        let value = e.eval(&|s| subst.get(&s).copied())?;
                        subst.insert(v, value);
                        changed = true;
                    }
                }
                BodyLiteral::Aggregate(a) => {
                    let globals = aggregate_globals(rule, a);
                    if globals.iter().all(|g| subst.contains_key(g)) {
                        if let Some(v) = a.assigns(&|s| subst.contains_key(&s)) {
                            let value = aggregate_value(a, &subst, stream.last())?;
                            subst.insert(v, Value::Int(value));
                            changed = true;
                        }
                    }
                }
                BodyLiteral::Stream(_) => {}
            }
        }
        if !changed {
            break;
        }
    }
    for l in &rule.body {
        let ok = match l {
            BodyLiteral::Stream(s) => {
                let Some(g) = ground_atom(&s.atom, &subst) else {
                    return Ok(None);
                };
                let modality = match &s.modality {
                    Modality::Count(Term::Var(v)) => match subst.get(v) {
                        // a counting term is never mapped to 0
                        Some(Value::Int(0)) | Some(Value::Sym(_)) | None => return Ok(None),
                        Some(c) => Modality::Count(Term::Const(*c)),
                    },
                    m => m.clone(),
                };
                entails_ground(stream, s.negated, &g, &modality, &effective_window(s))
            }
            BodyLiteral::Builtin(b) => match builtin_holds(b, &subst) {
                Some(r) => r?,
                None => return Ok(None),
            },
            BodyLiteral::Aggregate(a) => {
                let Some(guard) = term_value(&a.guard, &subst) else {
                    return Ok(None);
                };
                let value = aggregate_value(a, &subst, stream.last())?;
                a.op.holds(Value::Int(value), guard)
            }
        };
        if !ok {
            return Ok(None);
        }
    }
    if ground_atom(&rule.head, &subst).is_none() {
        return Ok(None);
    }
    Ok(Some(subst))
}

/// `None` when a variable is unbound.
fn builtin_holds(b: &Builtin, subst: &Substitution) -> Option<Result<bool, EvalError>> {
    let lookup = |s: Symbol| subst.get(&s).copied();
    let l = match b.lhs.eval(&lookup) {
        Err(EvalError::Unbound(_)) => return None,
        r => r,
    };
    let r = match b.rhs.eval(&lookup) {
        Err(EvalError::Unbound(_)) => return None,
        r => r,
    };
    Some(l.and_then(|l| r.map(|r| b.op.holds(l, r))))
}

/// `#count` / `#sum` over the current set, with the rule's global variables
/// fixed by `subst`. Tuples from all elements are pooled; `#sum` adds the
/// first components, which must be integers.
pub fn aggregate_value(agg: &Aggregate, subst: &Substitution, current: &AtomSet) -> Result<i64, EvalError> {
    let mut tuples: BTreeSet<Vec<Value>> = BTreeSet::new();
    for e in &agg.elements {
        let atoms: Vec<&Atom> = e
            .condition
            .iter()
            .filter_map(|c| match c {
                Condition::Atom(a) => Some(a),
                Condition::Builtin(_) => None,
            })
            .collect();
        let builtins: Vec<&Builtin> = e
            .condition
            .iter()
            .filter_map(|c| match c {
                Condition::Builtin(b) => Some(b),
                Condition::Atom(_) => None,
            })
            .collect();
        let mut matches = vec![subst.clone()];
        for a in atoms {
            let mut next = Vec::new();
            for s in &matches {
                for g in current.iter().filter(|g| g.pred == a.pred) {
                    if let Some(m) = unify(a, g, s) {
                        next.push(m);
                    }
                }
            }
            matches = next;
        }
        'outer: for mut s in matches {
            loop {
                let mut changed = false;
                for b in &builtins {
                    if let Some((v, e)) = assignment(b, &|x| s.contains_key(&x)) {
                        let value = e.eval(&|x| s.get(&x).copied())?;
                        s.insert(v, value);
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            for b in &builtins {
                match builtin_holds(b, &s) {
                    Some(Ok(true)) => {}
                    Some(Ok(false)) | None => continue 'outer,
                    Some(Err(e)) => return Err(e),
                }
            }
            let Some(t) = e.terms.iter().map(|t| term_value(t, &s)).collect::<Option<Vec<_>>>() else {
                continue;
            };
            tuples.insert(t);
        }
    }
    Ok(match agg.func {
        AggFunc::Count => tuples.len() as i64,
        AggFunc::Sum => {
            let mut sum: i64 = 0;
            for t in &tuples {
                match t.first() {
                    Some(Value::Int(w)) => sum = sum.checked_add(*w).ok_or(EvalError::Overflow)?,
                    Some(Value::Sym(s)) => return Err(EvalError::NotAnInteger(*s)),
                    None => {}
                }
            }
            sum
        }
    })
}

/// Adds the trigger's head to the last set.
pub fn apply_trigger(program: &Program, stream: &mut Stream, trigger: &Trigger) {
    let head =
        ground_atom(&program.rules[trigger.rule].head, &trigger.subst).expect("trigger does not ground its head");
    stream.last_mut().insert(head);
}

/// Stratum application, applying every fresh trigger of a round at once.
/// Within a stratum all same-stratum dependencies are monotone, so this is
/// one of the sequential applications.
pub fn stratum_outcome(program: &Program, stratum: &[usize], stream: &Stream) -> Result<Stream, OracleError> {
    let mut current = stream.clone();
    saturate(program, stratum, &mut current)?;
    Ok(current)
}

/// [`stratum_outcome`] in place; only the last set changes.
fn saturate(program: &Program, stratum: &[usize], stream: &mut Stream) -> Result<(), OracleError> {
    loop {
        let before = stream.last().len();
        for t in applicable_triggers(program, stratum, stream)? {
            apply_trigger(program, stream, &t);
        }
        if stream.last().len() == before {
            return Ok(());
        }
    }
}

/// Stratum application one trigger at a time; `choose` picks among the
/// fresh applicable triggers and returns an index.
pub fn stratum_outcome_with(
    program: &Program,
    stratum: &[usize],
    stream: &Stream,
    mut choose: impl FnMut(&[Trigger]) -> usize,
) -> Result<Stream, OracleError> {
    let mut current = stream.clone();
    let mut applied: BTreeSet<Trigger> = BTreeSet::new();
    loop {
        let fresh: Vec<Trigger> = applicable_triggers(program, stratum, &current)?
            .into_iter()
            .filter(|t| !applied.contains(t))
            .collect();
        if fresh.is_empty() {
            return Ok(current);
        }
        let t = fresh[choose(&fresh).min(fresh.len() - 1)].clone();
        apply_trigger(program, &mut current, &t);
        applied.insert(t);
    }
}

/// Σ_{Π_k}: the stream after applying every stratum in order.
pub fn final_stratum_stream(program: &Program, strat: &Stratification, stream: &Stream) -> Result<Stream, OracleError> {
    let mut current = stream.clone();
    for s in &strat.strata {
        saturate(program, s, &mut current)?;
    }
    Ok(current)
}

/// R(P, Σ).
pub fn outcome_over_strata(program: &Program, stream: &Stream) -> Result<AtomSet, OracleError> {
    let strat = check_stratifiable(program)?;
    outcome_with(program, &strat, stream)
}

/// R(P, Σ) under a caller-supplied stratification.
pub fn outcome_with(program: &Program, strat: &Stratification, stream: &Stream) -> Result<AtomSet, OracleError> {
    Ok(final_stratum_stream(program, strat, stream)?.last().clone())
}

/// 𝒫(P, Σ): the atoms of R that are input facts or heads of an applicable
/// non-`#temp` rule on the final stratum stream.
pub fn persistent_outcome(program: &Program, stream: &Stream) -> Result<AtomSet, OracleError> {
    let strat = check_stratifiable(program)?;
    let last = final_stratum_stream(program, &strat, stream)?;
    persistent_part(program, stream.last(), &last)
}

fn persistent_part(program: &Program, input: &AtomSet, last: &Stream) -> Result<AtomSet, OracleError> {
    let durable: Vec<usize> = (0..program.len()).filter(|&r| !program.rules[r].temp).collect();
    let mut out = input.clone();
    for t in applicable_triggers(program, &durable, last)? {
        out.insert(ground_atom(&program.rules[t.rule].head, &t.subst).expect("ground head"));
    }
    debug_assert!(out.is_subset(last.last()));
    Ok(out)
}

/// Streaming model at every time point: entry `i` is the model of P on
/// ⟨S_0, ..., S_i⟩.
pub fn streaming_models(program: &Program, stream: &Stream) -> Result<Vec<AtomSet>, OracleError> {
    let strat = check_stratifiable(program)?;
    streaming_models_with(program, &strat, stream)
}

pub fn streaming_models_with(
    program: &Program,
    strat: &Stratification,
    stream: &Stream,
) -> Result<Vec<AtomSet>, OracleError> {
    let mut persisted: Vec<AtomSet> = Vec::with_capacity(stream.sets.len());
    let mut models = Vec::with_capacity(stream.sets.len());
    for input in &stream.sets {
        let mut prefix = Stream::new(persisted.clone());
        prefix.sets.push(input.clone());
        let last = final_stratum_stream(program, strat, &prefix)?;
        models.push(last.last().clone());
        persisted.push(persistent_part(program, input, &last)?);
    }
    Ok(models)
}

/// Tick-by-tick streaming model: feeds one input set at a time and keeps
/// the persisted prefix ⟨S′_0, ..., S′_{n-1}⟩.
#[derive(Clone, Debug)]
pub struct StreamingOracle {
    program: Program,
    strat: Stratification,
    background: Vec<GroundAtom>,
    persisted: Vec<AtomSet>,
}

impl StreamingOracle {
    pub fn new(program: &Program, background: &[GroundAtom]) -> Result<StreamingOracle, OracleError> {
        Ok(StreamingOracle {
            strat: check_stratifiable(program)?,
            program: program.clone(),
            background: background.to_vec(),
            persisted: Vec::new(),
        })
    }

    /// Model at the next time point for input `facts`.
    pub fn step(&mut self, facts: impl IntoIterator<Item = GroundAtom>) -> Result<AtomSet, OracleError> {
        let mut input: AtomSet = facts.into_iter().collect();
        input.extend(self.background.iter().cloned());
        let mut prefix = Stream::new(std::mem::take(&mut self.persisted));
        prefix.sets.push(input.clone());
        let result = self
            .strat
            .strata
            .iter()
            .try_for_each(|st| saturate(&self.program, st, &mut prefix))
            .and_then(|()| persistent_part(&self.program, &input, &prefix));
        let model = prefix.sets.pop().expect("pushed");
        self.persisted = prefix.sets;
        self.persisted.push(result?);
        Ok(model)
    }

    /// Skips a time point, persisting only its input.
    pub fn skip(&mut self, facts: impl IntoIterator<Item = GroundAtom>) {
        let mut input: AtomSet = facts.into_iter().collect();
        input.extend(self.background.iter().cloned());
        self.persisted.push(input);
    }
}

/// Streaming model of P on Σ.
pub fn streaming_model(program: &Program, stream: &Stream) -> Result<AtomSet, OracleError> {
    Ok(streaming_models(program, stream)?.pop().unwrap_or_default())
}

/// Constants of the program and the stream.
pub fn active_domain(program: &Program, stream: &Stream) -> BTreeSet<Value> {
    let mut dom = program.constants();
    for s in &stream.sets {
        for a in s {
            dom.extend(a.args.iter().copied());
        }
    }
    dom
}

/// Applicable triggers by enumerating every substitution of the variables
/// in positive streaming atoms over the active domain (counting variables
/// over `1..=|D|`). Exponential; for cross-checking only.
pub fn applicable_triggers_exhaustive(
    program: &Program,
    rules: &[usize],
    stream: &Stream,
) -> Result<Vec<Trigger>, OracleError> {
    let dom: Vec<Value> = active_domain(program, stream).into_iter().collect();
    let mut out = Vec::new();
    for &r in rules {
        let rule = &program.rules[r];
        let mut vars: BTreeMap<Symbol, Vec<Value>> = BTreeMap::new();
        for l in rule.streaming_literals().filter(|l| !l.negated) {
            for v in l.atom.vars() {
                vars.insert(v, dom.clone());
            }
        }
        for l in rule.streaming_literals().filter(|l| !l.negated) {
            if let Some(cv) = l.count_var() {
                vars.entry(cv)
                    .or_insert_with(|| (1..=l.window.offsets().len() as i64).map(Value::Int).collect());
            }
        }
        let vars: Vec<(Symbol, Vec<Value>)> = vars.into_iter().collect();
        let mut found = BTreeSet::new();
        let mut idx = vec![0usize; vars.len()];
        if vars.iter().all(|(_, d)| !d.is_empty()) {
            loop {
                let subst: Substitution = vars.iter().zip(&idx).map(|((v, d), &i)| (*v, d[i])).collect();
                if let Some(s) =
                    complete(rule, stream, subst).map_err(|source| OracleError::Eval { rule: r, source })?
                {
                    found.insert(s);
                }
                // odometer increment
                let mut k = 0;
                while k < idx.len() {
                    idx[k] += 1;
                    if idx[k] < vars[k].1.len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == idx.len() {
                    break;
                }
            }
        }
        out.extend(found.into_iter().map(|subst| Trigger { rule: r, subst }));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{load_program, parse_facts};

    fn set(src: &str) -> AtomSet {
        if src.trim().is_empty() {
            return AtomSet::new();
        }
        parse_facts(src).unwrap().into_iter().collect()
    }

    fn stream(sets: &[&str]) -> Stream {
        Stream::new(sets.iter().map(|s| set(s)).collect())
    }

    fn ex1() -> Stream {
        stream(&["a(2). b(5).", "a(3). c(7).", "b(5).", "a(3)."])
    }

    fn lit(src: &str) -> StreamingLiteral {
        let p = load_program(&format!("h :- {src}.")).unwrap();
        let l = p.rules[0].streaming_literals().next().unwrap().clone();
        l
    }

    #[test]
    fn observation_example_1() {
        let s = ex1();
        let w = WindowSet::from_offsets([0, 1, 3]).unwrap();
        let obs = backward_observation(&s, &w);
        let idx: Vec<usize> = obs.iter().map(|(i, _)| *i).collect();
        assert_eq!(idx, vec![3, 2, 0]);
        assert_eq!(*obs[0].1, set("a(3)."));
        assert_eq!(*obs[1].1, set("b(5)."));
        assert_eq!(*obs[2].1, set("a(2). b(5)."));
    }

    #[test]
    fn observation_edges() {
        let s = ex1();
        let obs = backward_observation(&s, &WindowSet::current());
        assert_eq!(obs.len(), 1);
        assert_eq!(obs[0].0, 3);
        let short = stream(&["a.", "b."]);
        assert!(backward_observation(&short, &WindowSet::from_offsets([5]).unwrap()).is_empty());
    }

    #[test]
    fn entailment_table() {
        let s = ex1();
        assert!(entails(&s, &lit("b(5) at least 2 in {0,1,3}")));
        assert!(!entails(&s, &lit("b(5) at least 3 in {0,1,3}")));
        assert!(entails(&s, &lit("a(3)")));
        assert!(entails(&s, &lit("not b(5)")));
        let s = stream(&["a.", "", "a."]);
        assert!(entails(&s, &lit("a count 2 in [2]")));
        assert!(!entails(&s, &lit("a count 1 in [2]")));
        assert!(entails(&s, &lit("not a count 1 in [2]")));
        assert!(!entails(&s, &lit("a always in [2]")));
        assert!(entails(&s, &lit("a always in {0,2}")));
        assert!(entails(&s, &lit("a at most 2 in [2]")));
    }

    #[test]
    fn always_needs_an_observed_tick() {
        let s = stream(&["a."]);
        assert!(entails(&s, &lit("a always in [5]")));
        assert!(!entails(&s, &lit("a always in {3}")));
        assert!(entails(&s, &lit("not a always in {3}")));
    }

    #[test]
    fn triggers_example_2() {
        let p = load_program("c(X) :- b(X) at least 2 in {0,1,3}.").unwrap();
        let s = ex1();
        let t = applicable_triggers(&p, &[0], &s).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].subst[&Symbol::intern("X")], Value::Int(5));
        let mut s2 = s.clone();
        apply_trigger(&p, &mut s2, &t[0]);
        assert_eq!(*s2.last(), set("a(3). c(5)."));
        assert_eq!(s2.sets[..3], s.sets[..3]);
        // idempotent
        let mut s3 = s2.clone();
        apply_trigger(&p, &mut s3, &t[0]);
        assert_eq!(s3, s2);
    }

    #[test]
    fn fact_rule_trigger() {
        let p = load_program("p.").unwrap();
        let t = applicable_triggers(&p, &[0], &stream(&[""])).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t[0].subst.is_empty());
    }

    #[test]
    fn count_variable_binds_exact_count() {
        let p = load_program("carPassing(C,N) :- car(C) count N in [20].").unwrap();
        let mut sets = vec![""; 25];
        sets[10] = "car(c1).";
        sets[15] = "car(c1).";
        sets[24] = "car(c1).";
        let s = stream(&sets);
        let t = applicable_triggers(&p, &[0], &s).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].subst[&Symbol::intern("N")], Value::Int(3));
        let none = applicable_triggers(&p, &[0], &stream(&["", ""])).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn stratum_example_3() {
        let p = load_program("c(X) :- b(X). d(X) :- c(X) in [1].").unwrap();
        let out = stratum_outcome(&p, &[0, 1], &stream(&["b(5)."])).unwrap();
        assert_eq!(*out.last(), set("b(5). c(5). d(5)."));
        let same = stratum_outcome(&p, &[], &stream(&["b(5)."])).unwrap();
        assert_eq!(*same.last(), set("b(5)."));
    }

    #[test]
    fn streaming_model_example_3() {
        let p = load_program("c(X) :- b(X). d(X) :- c(X) in [1].").unwrap();
        let s = stream(&["b(5).", "c(7)."]);
        let models = streaming_models(&p, &s).unwrap();
        assert_eq!(models[0], set("b(5). c(5). d(5)."));
        assert_eq!(models[1], set("c(7). d(7). d(5)."));
        assert_eq!(
            outcome_over_strata(&p, &stream(&["b(5). c(5). d(5).", "c(7)."])).unwrap(),
            models[1]
        );
    }

    #[test]
    fn streaming_model_example_4() {
        let p = load_program("#temp c(X) :- b(X). d(X) :- c(X) in [1].").unwrap();
        assert_eq!(persistent_outcome(&p, &stream(&["b(5)."])).unwrap(), set("b(5). d(5)."));
        let m = streaming_model(&p, &stream(&["b(5).", "c(7)."])).unwrap();
        assert_eq!(m, set("c(7). d(7)."));
    }

    #[test]
    fn persistence_through_either_rule() {
        let p = load_program("#temp c :- b. c :- a.").unwrap();
        assert_eq!(persistent_outcome(&p, &stream(&["a. b."])).unwrap(), set("a. b. c."));
        assert_eq!(persistent_outcome(&p, &stream(&["b."])).unwrap(), set("b."));
    }

    #[test]
    fn streaming_oracle_matches_batch() {
        let p = load_program("#temp c(X) :- b(X). d(X) :- c(X) in [1].").unwrap();
        let s = stream(&["b(5).", "c(7).", "b(1)."]);
        let mut o = StreamingOracle::new(&p, &[]).unwrap();
        let stepped: Vec<AtomSet> = s.sets.iter().map(|x| o.step(x.iter().cloned()).unwrap()).collect();
        assert_eq!(stepped, streaming_models(&p, &s).unwrap());
    }

    #[test]
    fn empty_program() {
        let p = Program::default();
        let s = ex1();
        assert_eq!(streaming_model(&p, &s).unwrap(), *s.last());
        assert_eq!(persistent_outcome(&p, &s).unwrap(), *s.last());
    }

    #[test]
    fn negation_and_builtins() {
        let p = load_program("b(Y) :- a(X), Y=X+1, not c(Y). t(T) :- #sum{N,C: w(C,N)} = T.").unwrap();
        let s = stream(&["a(1). a(2). c(3). w(x,4). w(y,4)."]);
        let m = streaming_model(&p, &s).unwrap();
        assert!(m.contains(&GroundAtom::new("b", vec![Value::Int(2)])));
        assert!(!m.contains(&GroundAtom::new("b", vec![Value::Int(3)])));
        assert!(m.contains(&GroundAtom::new("t", vec![Value::Int(8)])));
    }

    #[test]
    fn arithmetic_errors_name_the_rule() {
        let p = load_program("q. b(Y) :- a(X), Y=X/0.").unwrap();
        let err = streaming_model(&p, &stream(&["a(1)."])).unwrap_err();
        assert_eq!(
            err,
            OracleError::Eval {
                rule: 1,
                source: EvalError::DivisionByZero
            }
        );
    }

    #[test]
    fn exhaustive_matches_join() {
        let p = load_program(
            "a(X) :- b(X) always in [2]. b(Y) :- a(X) in [1], Y=X+1, c(Y). e(X,Y) :- a(X), b(Y). n(X,N) :- b(X) count N in [3].",
        )
        .unwrap();
        let s = stream(&["b(1). c(2).", "b(1). a(1). c(2).", "b(1). b(2). c(3)."]);
        let all: Vec<usize> = (0..p.len()).collect();
        assert_eq!(
            applicable_triggers(&p, &all, &s).unwrap(),
            applicable_triggers_exhaustive(&p, &all, &s).unwrap()
        );
    }
}
