//! Compilation of flat rules into join plans over numbered variables.

use std::collections::BTreeSet;

use rustc_hash::FxHashMap;

use crate::lang::{
    aggregate_globals, AggFunc, ArithOp, Atom, BodyLiteral, Builtin, CmpOp, Condition, EvalError, Expr, Pred, Rule,
    Term, Value,
};
use crate::symbol::Symbol;

use super::GroundError;

pub(crate) type VarId = u16;
pub(crate) type Subst = Vec<Option<Value>>;

#[derive(Clone, Debug)]
pub(crate) enum Arg {
    Var(VarId),
    Const(Value),
}

impl Arg {
    pub(crate) fn value(&self, s: &Subst) -> Option<Value> {
        match self {
            Arg::Var(v) => s[*v as usize],
            Arg::Const(c) => Some(*c),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Pattern {
    pub pred: Pred,
    pub args: Vec<Arg>,
}

impl Pattern {
    pub(crate) fn ground(&self, s: &Subst) -> Option<Box<[Value]>> {
        self.args.iter().map(|a| a.value(s)).collect()
    }

    fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.args.iter().filter_map(|a| match a {
            Arg::Var(v) => Some(*v),
            Arg::Const(_) => None,
        })
    }
}

#[derive(Clone, Debug)]
pub(crate) enum CExpr {
    Const(Value),
    Var(VarId, Symbol),
    Bin(Box<CExpr>, ArithOp, Box<CExpr>),
}

impl CExpr {
    pub(crate) fn eval(&self, s: &Subst) -> Result<Value, EvalError> {
        match self {
            CExpr::Const(c) => Ok(*c),
            CExpr::Var(v, name) => s[*v as usize].ok_or(EvalError::Unbound(*name)),
            CExpr::Bin(l, op, r) => {
                let a = int_of(l.eval(s)?)?;
                let b = int_of(r.eval(s)?)?;
                let out = match op {
                    ArithOp::Add => a.checked_add(b),
                    ArithOp::Sub => a.checked_sub(b),
                    ArithOp::Mul => a.checked_mul(b),
                    ArithOp::Div => {
                        if b == 0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a.checked_div(b)
                    }
                };
                out.map(Value::Int).ok_or(EvalError::Overflow)
            }
        }
    }

    fn vars(&self, out: &mut Vec<VarId>) {
        match self {
            CExpr::Const(_) => {}
            CExpr::Var(v, _) => out.push(*v),
            CExpr::Bin(l, _, r) => {
                l.vars(out);
                r.vars(out);
            }
        }
    }

    fn as_var(&self) -> Option<VarId> {
        match self {
            CExpr::Var(v, _) => Some(*v),
            _ => None,
        }
    }
}

fn int_of(v: Value) -> Result<i64, EvalError> {
    match v {
        Value::Int(i) => Ok(i),
        Value::Sym(s) => Err(EvalError::NotAnInteger(s)),
    }
}

#[derive(Clone, Debug)]
pub(crate) struct CBuiltin {
    pub lhs: CExpr,
    pub op: CmpOp,
    pub rhs: CExpr,
}

impl CBuiltin {
    pub(crate) fn vars(&self) -> Vec<VarId> {
        let mut v = Vec::new();
        self.lhs.vars(&mut v);
        self.rhs.vars(&mut v);
        v
    }

    /// `V = e` / `e = V` with `V` unbound and `e` bound under `bound`.
    pub(crate) fn assignment(&self, bound: &impl Fn(VarId) -> bool) -> Option<(VarId, &CExpr)> {
        if self.op != CmpOp::Eq {
            return None;
        }
        let all = |e: &CExpr| {
            let mut v = Vec::new();
            e.vars(&mut v);
            v.into_iter().all(bound)
        };
        if let Some(v) = self.lhs.as_var() {
            if !bound(v) && all(&self.rhs) {
                return Some((v, &self.rhs));
            }
        }
        if let Some(v) = self.rhs.as_var() {
            if !bound(v) && all(&self.lhs) {
                return Some((v, &self.lhs));
            }
        }
        None
    }

    pub(crate) fn holds(&self, s: &Subst) -> Result<bool, EvalError> {
        Ok(self.op.holds(self.lhs.eval(s)?, self.rhs.eval(s)?))
    }
}

#[derive(Clone, Debug)]
pub(crate) struct CElement {
    pub terms: Vec<Arg>,
    pub atoms: Vec<Pattern>,
    pub builtins: Vec<CBuiltin>,
    /// Element-local variables, reset before each element is evaluated.
    pub locals: Vec<VarId>,
}

#[derive(Clone, Debug)]
pub(crate) struct CAggregate {
    pub func: AggFunc,
    pub elements: Vec<CElement>,
    pub op: CmpOp,
    pub guard: Arg,
    pub globals: Vec<VarId>,
}

#[derive(Clone, Debug)]
pub(crate) enum Step {
    /// Join positive literal `lit` through index `index`; `key` lists the
    /// argument positions bound on entry.
    Join {
        lit: usize,
        index: usize,
        key: Vec<usize>,
    },
    Assign {
        var: VarId,
        expr: CExpr,
    },
    Check(CBuiltin),
}

#[derive(Clone, Debug)]
pub(crate) struct Plan {
    pub steps: Vec<Step>,
}

#[derive(Clone, Debug)]
pub(crate) struct CRule {
    /// Rule index reported in errors.
    pub id: usize,
    pub temp: bool,
    pub stratum: usize,
    pub nvars: usize,
    pub head: Pattern,
    pub pos: Vec<Pattern>,
    pub neg: Vec<Pattern>,
    pub aggs: Vec<CAggregate>,
    /// Builtins that need aggregate results; evaluated per shot.
    pub late: Vec<CBuiltin>,
    /// `plans[i]` grounds the rule starting from a new atom for `pos[i]`;
    /// a rule without positive literals has one plan with no start.
    pub plans: Vec<Plan>,
}

impl CRule {
    /// Instances must wait until lower strata are complete.
    pub(crate) fn deferred(&self) -> bool {
        !self.neg.is_empty() || !self.aggs.is_empty()
    }

    /// Head and negative atoms are only known per shot.
    pub(crate) fn partial(&self) -> bool {
        !self.aggs.is_empty()
    }
}

/// Registry of `(predicate, bound positions)` indexes shared by all plans.
#[derive(Default)]
pub(crate) struct IndexRegistry {
    pub specs: Vec<(Pred, Vec<usize>)>,
    ids: FxHashMap<(Pred, Vec<usize>), usize>,
}

impl IndexRegistry {
    fn get(&mut self, pred: Pred, key: Vec<usize>) -> usize {
        if let Some(&i) = self.ids.get(&(pred, key.clone())) {
            return i;
        }
        let i = self.specs.len();
        self.specs.push((pred, key.clone()));
        self.ids.insert((pred, key), i);
        i
    }
}

struct Vars {
    ids: FxHashMap<Symbol, VarId>,
    names: Vec<Symbol>,
}

impl Vars {
    fn id(&mut self, s: Symbol) -> VarId {
        if let Some(&v) = self.ids.get(&s) {
            return v;
        }
        let v = self.names.len() as VarId;
        self.names.push(s);
        self.ids.insert(s, v);
        v
    }

    fn arg(&mut self, t: &Term) -> Arg {
        match t {
            Term::Var(v) => Arg::Var(self.id(*v)),
            Term::Const(c) => Arg::Const(*c),
        }
    }

    fn pattern(&mut self, a: &Atom) -> Pattern {
        Pattern {
            pred: a.predicate(),
            args: a.terms.iter().map(|t| self.arg(t)).collect(),
        }
    }

    fn expr(&mut self, e: &Expr) -> CExpr {
        match e {
            Expr::Term(Term::Const(c)) => CExpr::Const(*c),
            Expr::Term(Term::Var(v)) => CExpr::Var(self.id(*v), *v),
            Expr::Binary(l, op, r) => CExpr::Bin(Box::new(self.expr(l)), *op, Box::new(self.expr(r))),
        }
    }

    fn builtin(&mut self, b: &Builtin) -> CBuiltin {
        CBuiltin {
            lhs: self.expr(&b.lhs),
            op: b.op,
            rhs: self.expr(&b.rhs),
        }
    }
}

pub(crate) fn compile_rule(
    rule: &Rule,
    id: usize,
    stratum: usize,
    registry: &mut IndexRegistry,
) -> Result<CRule, GroundError> {
    let mut vars = Vars {
        ids: FxHashMap::default(),
        names: Vec::new(),
    };
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut builtins = Vec::new();
    let mut aggs = Vec::new();
    for l in &rule.body {
        match l {
            BodyLiteral::Stream(s) => {
                if !s.is_degenerate() {
                    return Err(GroundError::NotFlat { rule: id });
                }
                let p = vars.pattern(&s.atom);
                if s.negated {
                    neg.push(p);
                } else {
                    pos.push(p);
                }
            }
            BodyLiteral::Builtin(b) => builtins.push(vars.builtin(b)),
            BodyLiteral::Aggregate(a) => {
                let globals: Vec<VarId> = aggregate_globals(rule, a).into_iter().map(|g| vars.id(g)).collect();
                let mut elements = Vec::new();
                for e in &a.elements {
                    let mut atoms = Vec::new();
                    let mut ebuiltins = Vec::new();
                    for c in &e.condition {
                        match c {
                            Condition::Atom(at) => atoms.push(vars.pattern(at)),
                            Condition::Builtin(b) => ebuiltins.push(vars.builtin(b)),
                        }
                    }
                    let terms: Vec<Arg> = e.terms.iter().map(|t| vars.arg(t)).collect();
                    let mut mentioned: BTreeSet<VarId> = BTreeSet::new();
                    for t in &terms {
                        if let Arg::Var(v) = t {
                            mentioned.insert(*v);
                        }
                    }
                    for p in &atoms {
                        mentioned.extend(p.vars());
                    }
                    for b in &ebuiltins {
                        mentioned.extend(b.vars());
                    }
                    let locals = mentioned.into_iter().filter(|v| !globals.contains(v)).collect();
                    elements.push(CElement {
                        terms,
                        atoms,
                        builtins: ebuiltins,
                        locals,
                    });
                }
                let guard = vars.arg(&a.guard);
                aggs.push(CAggregate {
                    func: a.func,
                    elements,
                    op: a.op,
                    guard,
                    globals,
                });
            }
        }
    }
    let head = vars.pattern(&rule.head);

    // Variables fixed at grounding time: positives, then assignments.
    let mut ground_bound: BTreeSet<VarId> = pos
        .iter()
        .flat_map(|p: &Pattern| p.vars().collect::<Vec<_>>())
        .collect();
    let mut ground_builtins = vec![false; builtins.len()];
    loop {
        let mut changed = false;
        for (i, b) in builtins.iter().enumerate() {
            if ground_builtins[i] {
                continue;
            }
            if b.vars().iter().all(|v| ground_bound.contains(v)) {
                ground_builtins[i] = true;
                changed = true;
            } else if let Some((v, _)) = b.assignment(&|v| ground_bound.contains(&v)) {
                ground_bound.insert(v);
                ground_builtins[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let early: Vec<CBuiltin> = builtins
        .iter()
        .zip(&ground_builtins)
        .filter(|(_, g)| **g)
        .map(|(b, _)| b.clone())
        .collect();
    let late: Vec<CBuiltin> = builtins
        .iter()
        .zip(&ground_builtins)
        .filter(|(_, g)| !**g)
        .map(|(b, _)| b.clone())
        .collect();
    if aggs.is_empty() {
        let mut needed: Vec<VarId> = head.vars().collect();
        for p in &neg {
            needed.extend(p.vars());
        }
        for b in &late {
            needed.extend(b.vars());
        }
        if let Some(v) = needed.into_iter().find(|v| !ground_bound.contains(v)) {
            return Err(GroundError::Unsafe {
                rule: id,
                variable: vars.names[v as usize],
            });
        }
    }

    let plans = if pos.is_empty() {
        vec![build_plan(&pos, &early, None, registry)]
    } else {
        (0..pos.len())
            .map(|i| build_plan(&pos, &early, Some(i), registry))
            .collect()
    };
    Ok(CRule {
        id,
        temp: rule.temp,
        stratum,
        nvars: vars.names.len(),
        head,
        pos,
        neg,
        aggs,
        late,
        plans,
    })
}

fn build_plan(pos: &[Pattern], builtins: &[CBuiltin], start: Option<usize>, registry: &mut IndexRegistry) -> Plan {
    let mut bound: BTreeSet<VarId> = BTreeSet::new();
    let mut remaining: Vec<usize> = (0..pos.len()).filter(|&i| Some(i) != start).collect();
    if let Some(s) = start {
        bound.extend(pos[s].vars());
    }
    let mut placed = vec![false; builtins.len()];
    let mut steps = Vec::new();
    loop {
        loop {
            let mut changed = false;
            for (i, b) in builtins.iter().enumerate() {
                if placed[i] {
                    continue;
                }
                if b.vars().iter().all(|v| bound.contains(v)) {
                    steps.push(Step::Check(b.clone()));
                    placed[i] = true;
                    changed = true;
                } else if let Some((v, e)) = b.assignment(&|v| bound.contains(&v)) {
                    steps.push(Step::Assign {
                        var: v,
                        expr: e.clone(),
                    });
                    bound.insert(v);
                    placed[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if remaining.is_empty() {
            break;
        }
        // most bound arguments first
        let (k, &lit) = remaining
            .iter()
            .enumerate()
            .max_by_key(|(k, &i)| {
                let n = pos[i]
                    .args
                    .iter()
                    .filter(|a| match a {
                        Arg::Const(_) => true,
                        Arg::Var(v) => bound.contains(v),
                    })
                    .count();
                (n, std::cmp::Reverse(*k))
            })
            .expect("non-empty");
        remaining.remove(k);
        let key: Vec<usize> = pos[lit]
            .args
            .iter()
            .enumerate()
            .filter(|(_, a)| match a {
                Arg::Const(_) => true,
                Arg::Var(v) => bound.contains(v),
            })
            .map(|(i, _)| i)
            .collect();
        let index = registry.get(pos[lit].pred, key.clone());
        steps.push(Step::Join { lit, index, key });
        bound.extend(pos[lit].vars());
    }
    debug_assert!(placed.iter().all(|p| *p));
    Plan { steps }
}
