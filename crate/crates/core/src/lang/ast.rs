use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::symbol::Symbol;

/// A ground constant: a 64-bit integer or a symbolic constant.
///
/// Ordering follows the usual ASP convention: integers first, then symbols
/// in lexicographic order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Value {
    Int(i64),
    Sym(Symbol),
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Int(_), Value::Sym(_)) => Ordering::Less,
            (Value::Sym(_), Value::Int(_)) => Ordering::Greater,
            (Value::Sym(a), Value::Sym(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Sym(Symbol::intern(s))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Term {
    Var(Symbol),
    Const(Value),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Symbol::intern(name))
    }

    pub fn as_var(&self) -> Option<Symbol> {
        match self {
            Term::Var(v) => Some(*v),
            Term::Const(_) => None,
        }
    }
}

/// Predicate identity: name plus arity.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct Pred {
    pub name: Symbol,
    pub arity: usize,
}

impl Pred {
    pub fn new(name: &str, arity: usize) -> Pred {
        Pred {
            name: Symbol::intern(name),
            arity,
        }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

/// `p(t1,...,tn)`; a zero-arity atom is written without parentheses.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Atom {
    pub pred: Symbol,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, terms: Vec<Term>) -> Atom {
        Atom {
            pred: Symbol::intern(pred),
            terms,
        }
    }

    pub fn predicate(&self) -> Pred {
        Pred {
            name: self.pred,
            arity: self.terms.len(),
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.terms.iter().filter_map(Term::as_var)
    }

    pub fn is_ground(&self) -> bool {
        self.terms.iter().all(|t| matches!(t, Term::Const(_)))
    }
}

/// A predicate atom with constants only.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GroundAtom {
    pub pred: Symbol,
    pub args: Vec<Value>,
}

impl GroundAtom {
    pub fn new(pred: &str, args: Vec<Value>) -> GroundAtom {
        GroundAtom {
            pred: Symbol::intern(pred),
            args,
        }
    }

    pub fn predicate(&self) -> Pred {
        Pred {
            name: self.pred,
            arity: self.args.len(),
        }
    }
}

impl Ord for GroundAtom {
    fn cmp(&self, other: &Self) -> Ordering {
        self.pred
            .cmp(&other.pred)
            .then_with(|| self.args.len().cmp(&other.args.len()))
            .then_with(|| self.args.cmp(&other.args))
    }
}

impl PartialOrd for GroundAtom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// How a window set was written in the source.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum WindowForm {
    Set,
    Interval(u32),
}

/// Non-empty set of offsets into the past, kept sorted and deduplicated.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct WindowSet {
    offsets: Vec<u32>,
    form: WindowForm,
}

impl WindowSet {
    /// Returns `None` for an empty offset set.
    pub fn from_offsets(offsets: impl IntoIterator<Item = u32>) -> Option<WindowSet> {
        let set: BTreeSet<u32> = offsets.into_iter().collect();
        if set.is_empty() {
            return None;
        }
        Some(WindowSet {
            offsets: set.into_iter().collect(),
            form: WindowForm::Set,
        })
    }

    /// `[w]`, i.e. `{0,...,w}`. Returns `None` for `w = 0`.
    pub fn interval(w: u32) -> Option<WindowSet> {
        if w == 0 {
            return None;
        }
        Some(WindowSet {
            offsets: (0..=w).collect(),
            form: WindowForm::Interval(w),
        })
    }

    /// `{0}`, the window of a degenerate literal.
    pub fn current() -> WindowSet {
        WindowSet {
            offsets: vec![0],
            form: WindowForm::Set,
        }
    }

    pub fn offsets(&self) -> &[u32] {
        &self.offsets
    }

    pub fn form(&self) -> WindowForm {
        self.form
    }

    pub fn max(&self) -> u32 {
        *self.offsets.last().expect("window sets are non-empty")
    }

    pub fn min(&self) -> u32 {
        self.offsets[0]
    }

    pub fn contains(&self, d: u32) -> bool {
        self.offsets.binary_search(&d).is_ok()
    }

    /// Same offsets, explicit-set surface form.
    pub fn canonical(&self) -> WindowSet {
        WindowSet {
            offsets: self.offsets.clone(),
            form: WindowForm::Set,
        }
    }
}

/// Temporal modality of a streaming literal.
///
/// `In`, `AtMost` and `Bare` are surface shortcuts that only exist between
/// parsing and desugaring.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Modality {
    AtLeast(u64),
    Always,
    Count(Term),
    In,
    AtMost(u64),
    Bare,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct StreamingLiteral {
    pub negated: bool,
    pub atom: Atom,
    pub modality: Modality,
    pub window: WindowSet,
}

impl StreamingLiteral {
    /// The degenerate literal `a`, i.e. `a at least 1 in {0}` after desugaring.
    pub fn bare(atom: Atom, negated: bool) -> StreamingLiteral {
        StreamingLiteral {
            negated,
            atom,
            modality: Modality::Bare,
            window: WindowSet::current(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        match self.modality {
            Modality::Bare => true,
            Modality::AtLeast(1) | Modality::In => self.window.offsets() == [0],
            _ => false,
        }
    }

    /// Positive `at least` / `always` literals; negation and counting are
    /// non-harmless.
    pub fn is_harmless(&self) -> bool {
        !self.negated
            && matches!(
                self.modality,
                Modality::AtLeast(_) | Modality::Always | Modality::In | Modality::Bare
            )
    }

    /// The counting variable, if the modality is `count X`.
    pub fn count_var(&self) -> Option<Symbol> {
        match &self.modality {
            Modality::Count(Term::Var(v)) => Some(*v),
            _ => None,
        }
    }

    /// Variables bound when this literal holds positively.
    pub fn vars(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.atom.vars().chain(self.count_var())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn holds(self, lhs: Value, rhs: Value) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn as_str(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("arithmetic on non-integer constant `{0}`")]
    NotAnInteger(Symbol),
    #[error("unbound variable `{0}`")]
    Unbound(Symbol),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Expr {
    Term(Term),
    Binary(Box<Expr>, ArithOp, Box<Expr>),
}

impl Expr {
    pub fn vars(&self, out: &mut Vec<Symbol>) {
        match self {
            Expr::Term(Term::Var(v)) => out.push(*v),
            Expr::Term(Term::Const(_)) => {}
            Expr::Binary(l, _, r) => {
                l.vars(out);
                r.vars(out);
            }
        }
    }

    pub fn as_var(&self) -> Option<Symbol> {
        match self {
            Expr::Term(Term::Var(v)) => Some(*v),
            _ => None,
        }
    }

    /// Evaluates under `lookup`; fails on unbound variables and arithmetic errors.
    pub fn eval(&self, lookup: &impl Fn(Symbol) -> Option<Value>) -> Result<Value, EvalError> {
        match self {
            Expr::Term(Term::Const(c)) => Ok(*c),
            Expr::Term(Term::Var(v)) => lookup(*v).ok_or(EvalError::Unbound(*v)),
            Expr::Binary(l, op, r) => {
                let a = int_of(l.eval(lookup)?)?;
                let b = int_of(r.eval(lookup)?)?;
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
}

fn int_of(v: Value) -> Result<i64, EvalError> {
    match v {
        Value::Int(i) => Ok(i),
        Value::Sym(s) => Err(EvalError::NotAnInteger(s)),
    }
}

/// Comparison built-in `lhs op rhs`. With `=` and one side an unbound
/// variable, it acts as an assignment.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Builtin {
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
}

impl Builtin {
    pub fn vars(&self) -> Vec<Symbol> {
        let mut v = Vec::new();
        self.lhs.vars(&mut v);
        self.rhs.vars(&mut v);
        v
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum AggFunc {
    Count,
    Sum,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Condition {
    Atom(Atom),
    Builtin(Builtin),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AggElement {
    pub terms: Vec<Term>,
    pub condition: Vec<Condition>,
}

/// `#count{...} op T` / `#sum{...} op T`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Aggregate {
    pub func: AggFunc,
    pub elements: Vec<AggElement>,
    pub op: CmpOp,
    pub guard: Term,
}

impl Aggregate {
    /// Predicates read by the element conditions.
    pub fn preds(&self) -> impl Iterator<Item = Pred> + '_ {
        self.elements.iter().flat_map(|e| {
            e.condition.iter().filter_map(|c| match c {
                Condition::Atom(a) => Some(a.predicate()),
                Condition::Builtin(_) => None,
            })
        })
    }

    /// All variables mentioned inside the elements.
    pub fn element_vars(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for e in &self.elements {
            out.extend(e.terms.iter().filter_map(Term::as_var));
            for c in &e.condition {
                match c {
                    Condition::Atom(a) => out.extend(a.vars()),
                    Condition::Builtin(b) => out.extend(b.vars()),
                }
            }
        }
        out
    }

    /// Guard variable when the aggregate assigns it (`= T` with `T` unbound).
    pub fn assigns(&self, bound: &impl Fn(Symbol) -> bool) -> Option<Symbol> {
        match (self.op, self.guard) {
            (CmpOp::Eq, Term::Var(v)) if !bound(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum BodyLiteral {
    Stream(StreamingLiteral),
    Builtin(Builtin),
    Aggregate(Aggregate),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Rule {
    pub temp: bool,
    pub head: Atom,
    pub body: Vec<BodyLiteral>,
}

impl Rule {
    pub fn streaming_literals(&self) -> impl Iterator<Item = &StreamingLiteral> {
        self.body.iter().filter_map(|l| match l {
            BodyLiteral::Stream(s) => Some(s),
            _ => None,
        })
    }

    pub fn aggregates(&self) -> impl Iterator<Item = &Aggregate> {
        self.body.iter().filter_map(|l| match l {
            BodyLiteral::Aggregate(a) => Some(a),
            _ => None,
        })
    }

    pub fn is_flat(&self) -> bool {
        self.streaming_literals().all(StreamingLiteral::is_degenerate)
    }
}

/// Line/column of a rule in its source text (1-based).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// An ordered list of rules. Source positions are kept beside the rules so
/// that structural equality ignores them.
#[derive(Clone, Debug, Default)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub positions: Vec<Pos>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules
    }
}

impl Eq for Program {}

impl Program {
    pub fn new(rules: Vec<Rule>) -> Program {
        let positions = vec![Pos::default(); rules.len()];
        Program { rules, positions }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn head_preds(&self) -> BTreeSet<Pred> {
        self.rules.iter().map(|r| r.head.predicate()).collect()
    }

    /// Every predicate mentioned anywhere in the program.
    pub fn predicates(&self) -> BTreeSet<Pred> {
        let mut out = self.head_preds();
        for r in &self.rules {
            for l in &r.body {
                match l {
                    BodyLiteral::Stream(s) => {
                        out.insert(s.atom.predicate());
                    }
                    BodyLiteral::Aggregate(a) => out.extend(a.preds()),
                    BodyLiteral::Builtin(_) => {}
                }
            }
        }
        out
    }

    /// Constants occurring anywhere in the rules.
    pub fn constants(&self) -> BTreeSet<Value> {
        fn term(t: &Term, out: &mut BTreeSet<Value>) {
            if let Term::Const(c) = t {
                out.insert(*c);
            }
        }
        fn expr(e: &Expr, out: &mut BTreeSet<Value>) {
            match e {
                Expr::Term(t) => term(t, out),
                Expr::Binary(l, _, r) => {
                    expr(l, out);
                    expr(r, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        for r in &self.rules {
            r.head.terms.iter().for_each(|t| term(t, &mut out));
            for l in &r.body {
                match l {
                    BodyLiteral::Stream(s) => s.atom.terms.iter().for_each(|t| term(t, &mut out)),
                    BodyLiteral::Builtin(b) => {
                        expr(&b.lhs, &mut out);
                        expr(&b.rhs, &mut out);
                    }
                    BodyLiteral::Aggregate(a) => {
                        term(&a.guard, &mut out);
                        for e in &a.elements {
                            e.terms.iter().for_each(|t| term(t, &mut out));
                            for c in &e.condition {
                                match c {
                                    Condition::Atom(at) => at.terms.iter().for_each(|t| term(t, &mut out)),
                                    Condition::Builtin(b) => {
                                        expr(&b.lhs, &mut out);
                                        expr(&b.rhs, &mut out);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn is_flat(&self) -> bool {
        self.rules.iter().all(Rule::is_flat)
    }

    pub fn has_temp_rules(&self) -> bool {
        self.rules.iter().any(|r| r.temp)
    }
}
