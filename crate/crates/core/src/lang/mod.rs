//! The rule language: syntax tree, parser, printer, desugaring and safety.

mod ast;
mod error;
mod lexer;
mod parser;
mod print;

use std::collections::BTreeSet;

pub use ast::*;
pub use error::{ParseError, ParseErrorKind, ParseErrors, SafetyError, SafetyViolation};
pub use parser::{parse_fact_line, parse_facts, parse_program, WireLine, RESERVED_PREFIX};

use crate::symbol::Symbol;

/// Rewrites surface shortcuts into the three core modalities.
///
/// * `a` becomes `a at least 1 in {0}`
/// * `a in D` becomes `a at least 1 in D`
/// * `a at most c in D` becomes `not a at least c+1 in D`
/// * `[w]` becomes the explicit set `{0,...,w}`
pub fn desugar(program: &Program) -> Program {
    let rules = program
        .rules
        .iter()
        .map(|r| Rule {
            temp: r.temp,
            head: r.head.clone(),
            body: r
                .body
                .iter()
                .map(|l| match l {
                    BodyLiteral::Stream(s) => BodyLiteral::Stream(desugar_literal(s)),
                    other => other.clone(),
                })
                .collect(),
        })
        .collect();
    Program {
        rules,
        positions: program.positions.clone(),
    }
}

pub fn desugar_literal(l: &StreamingLiteral) -> StreamingLiteral {
    let (negated, modality) = match &l.modality {
        Modality::Bare | Modality::In => (l.negated, Modality::AtLeast(1)),
        Modality::AtMost(c) => (!l.negated, Modality::AtLeast(c + 1)),
        m => (l.negated, m.clone()),
    };
    StreamingLiteral {
        negated,
        atom: l.atom.clone(),
        modality,
        window: l.window.canonical(),
    }
}

/// Parses and desugars in one step.
pub fn load_program(src: &str) -> Result<Program, ParseErrors> {
    parse_program(src).map(|p| desugar(&p))
}

/// Returns the first safety violation, in rule order.
pub fn check_safety(program: &Program) -> Result<(), SafetyError> {
    for (i, rule) in program.rules.iter().enumerate() {
        if let Some(e) = rule_violations(i, rule).into_iter().next() {
            return Err(e);
        }
    }
    Ok(())
}

/// Every safety violation in the program.
pub fn safety_violations(program: &Program) -> Vec<SafetyError> {
    program
        .rules
        .iter()
        .enumerate()
        .flat_map(|(i, r)| rule_violations(i, r))
        .collect()
}

/// Variables the rule body binds: positive streaming literals, then
/// assignments (`X = expr`, `#agg{..} = X`) whose inputs are bound.
pub fn bound_variables(rule: &Rule) -> BTreeSet<Symbol> {
    let mut bound: BTreeSet<Symbol> = BTreeSet::new();
    for l in rule.streaming_literals().filter(|l| !l.negated) {
        bound.extend(l.vars());
    }
    loop {
        let before = bound.len();
        for l in &rule.body {
            match l {
                BodyLiteral::Builtin(b) => {
                    if let Some((v, _)) = assignment(b, &|s| bound.contains(&s)) {
                        bound.insert(v);
                    }
                }
                BodyLiteral::Aggregate(a) => {
                    let globals = aggregate_globals(rule, a);
                    if globals.iter().all(|g| bound.contains(g)) {
                        if let Some(v) = a.assigns(&|s| bound.contains(&s)) {
                            bound.insert(v);
                        }
                    }
                }
                BodyLiteral::Stream(_) => {}
            }
        }
        if bound.len() == before {
            return bound;
        }
    }
}

/// If `b` is `V = e` (or `e = V`) with `V` unbound and `e` fully bound,
/// returns `V` and the side to evaluate.
pub fn assignment<'a>(b: &'a Builtin, bound: &impl Fn(Symbol) -> bool) -> Option<(Symbol, &'a Expr)> {
    if b.op != CmpOp::Eq {
        return None;
    }
    let all_bound = |e: &Expr| {
        let mut v = Vec::new();
        e.vars(&mut v);
        v.into_iter().all(bound)
    };
    if let Some(v) = b.lhs.as_var() {
        if !bound(v) && all_bound(&b.rhs) {
            return Some((v, &b.rhs));
        }
    }
    if let Some(v) = b.rhs.as_var() {
        if !bound(v) && all_bound(&b.lhs) {
            return Some((v, &b.lhs));
        }
    }
    None
}

/// Element variables of `agg` that also occur elsewhere in the rule.
pub fn aggregate_globals(rule: &Rule, agg: &Aggregate) -> BTreeSet<Symbol> {
    let mut outside: BTreeSet<Symbol> = rule.head.vars().collect();
    for l in &rule.body {
        match l {
            BodyLiteral::Stream(s) => outside.extend(s.vars()),
            BodyLiteral::Builtin(b) => outside.extend(b.vars()),
            BodyLiteral::Aggregate(other) if !std::ptr::eq(other, agg) => {
                outside.extend(other.element_vars());
                outside.extend(other.guard.as_var());
            }
            BodyLiteral::Aggregate(_) => {}
        }
    }
    agg.element_vars().into_iter().filter(|v| outside.contains(v)).collect()
}

fn rule_violations(index: usize, rule: &Rule) -> Vec<SafetyError> {
    let bound = bound_variables(rule);
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut unbound = |v: Symbol, violation: SafetyViolation, out: &mut Vec<SafetyError>| {
        if seen.insert((v, violation as u8)) {
            out.push(SafetyError {
                rule: index,
                variable: v,
                violation,
            });
        }
    };
    for v in rule.head.vars() {
        if !bound.contains(&v) {
            unbound(v, SafetyViolation::Unbound, &mut out);
        }
    }
    for l in &rule.body {
        match l {
            BodyLiteral::Stream(s) if s.negated => {
                if let Some(cv) = s.count_var() {
                    unbound(cv, SafetyViolation::NegatedCountVariable, &mut out);
                }
                for v in s.atom.vars() {
                    if !bound.contains(&v) {
                        unbound(v, SafetyViolation::Unbound, &mut out);
                    }
                }
            }
            BodyLiteral::Stream(_) => {}
            BodyLiteral::Builtin(b) => {
                for v in b.vars() {
                    if !bound.contains(&v) {
                        unbound(v, SafetyViolation::Unbound, &mut out);
                    }
                }
            }
            BodyLiteral::Aggregate(a) => {
                if let Term::Var(g) = a.guard {
                    if !bound.contains(&g) {
                        unbound(g, SafetyViolation::Unbound, &mut out);
                    }
                }
                let globals = aggregate_globals(rule, a);
                for g in &globals {
                    if !bound.contains(g) {
                        unbound(*g, SafetyViolation::Unbound, &mut out);
                    }
                }
                for e in &a.elements {
                    let mut local: BTreeSet<Symbol> = globals.clone();
                    for c in &e.condition {
                        if let Condition::Atom(at) = c {
                            local.extend(at.vars());
                        }
                    }
                    // assignments inside the element condition
                    loop {
                        let before = local.len();
                        for c in &e.condition {
                            if let Condition::Builtin(b) = c {
                                if let Some((v, _)) = assignment(b, &|s| local.contains(&s)) {
                                    local.insert(v);
                                }
                            }
                        }
                        if local.len() == before {
                            break;
                        }
                    }
                    let mut used: Vec<Symbol> = e.terms.iter().filter_map(Term::as_var).collect();
                    for c in &e.condition {
                        if let Condition::Builtin(b) = c {
                            used.extend(b.vars());
                        }
                    }
                    for v in used {
                        if !local.contains(&v) {
                            unbound(v, SafetyViolation::Unbound, &mut out);
                        }
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const PVS: &str = "
        workingPanel(P) :- energyDelivered(P,W) at least 1 in [4], energyThreshold(Et), W>=Et.
        reachable(cea,P2) :- link(cea,P2), workingPanel(P2).
        reachable(P1,P3) :- reachable(P1,P2), link(P2,P3), workingPanel(P3).
        unlinked :- workingPanel(P), not reachable(cea,P).
        regularFunctioning :- unlinked at most 2 in [3].
        alert :- not regularFunctioning.
        callMaintenance :- alert always in [5].
    ";

    fn lit(src: &str) -> StreamingLiteral {
        let p = parse_program(&format!("h :- {src}.")).unwrap();
        let BodyLiteral::Stream(s) = &p.rules[0].body[0] else {
            panic!()
        };
        s.clone()
    }

    #[test]
    fn desugar_in() {
        let d = desugar_literal(&lit("a in {1,3}"));
        assert_eq!(d.modality, Modality::AtLeast(1));
        assert_eq!(d.window.offsets(), &[1, 3]);
        assert!(!d.negated);
        assert_eq!(d.to_string(), "a at least 1 in {1,3}");
    }

    #[test]
    fn desugar_bare_is_degenerate() {
        let d = desugar_literal(&lit("a"));
        assert_eq!(d.modality, Modality::AtLeast(1));
        assert_eq!(d.window.offsets(), &[0]);
        assert!(d.is_degenerate());
        assert_eq!(d.to_string(), "a at least 1 in {0}");
    }

    #[test]
    fn desugar_at_most() {
        let d = desugar_literal(&lit("unlinked at most 2 in [3]"));
        assert!(d.negated);
        assert_eq!(d.modality, Modality::AtLeast(3));
        assert_eq!(d.window.form(), WindowForm::Set);
        assert_eq!(d.to_string(), "not unlinked at least 3 in {0,1,2,3}");
        // double negation cancels
        let d = desugar_literal(&lit("not a at most 0 in {1}"));
        assert!(!d.negated);
        assert_eq!(d.modality, Modality::AtLeast(1));
    }

    #[test]
    fn safety_head_variable() {
        let p = load_program("a(X) :- b(Y).").unwrap();
        let e = check_safety(&p).unwrap_err();
        assert_eq!(e.variable, Symbol::intern("X"));
        assert_eq!(e.rule, 0);
        assert_eq!(e.violation, SafetyViolation::Unbound);
    }

    #[test]
    fn safety_negative_literal() {
        let p = load_program("a :- not b(X).").unwrap();
        assert_eq!(check_safety(&p).unwrap_err().variable, Symbol::intern("X"));
    }

    #[test]
    fn safety_pvs_ok() {
        check_safety(&load_program(PVS).unwrap()).unwrap();
    }

    #[test]
    fn safety_assignments_bind() {
        check_safety(&load_program("b(Y) :- a(X) in [1], Y=X+1, c(Y).").unwrap()).unwrap();
        check_safety(&load_program("tot(T) :- #sum{N,C: carPassing(C,N)}=T.").unwrap()).unwrap();
        check_safety(&load_program("c(C,N) :- car(C) count N in [20].").unwrap()).unwrap();
        let p = load_program("b(Y) :- a(X), Y>X.").unwrap();
        assert_eq!(check_safety(&p).unwrap_err().variable, Symbol::intern("Y"));
        let p = load_program("t(T) :- #count{X: q(X,Y)}=T, r(Z), Z>Y.").unwrap();
        assert!(check_safety(&p).is_err());
    }

    #[test]
    fn safety_negated_count_variable() {
        let p = load_program("a(X) :- p(X,N), not b(X) count N in [3].").unwrap();
        let e = check_safety(&p).unwrap_err();
        assert_eq!(e.violation, SafetyViolation::NegatedCountVariable);
    }

    #[test]
    fn round_trip_pvs() {
        let p = parse_program(PVS).unwrap();
        let printed = p.to_string();
        assert_eq!(parse_program(&printed).unwrap(), p);
        assert!(printed.contains("unlinked at most 2 in [3]"));
    }

    #[test]
    fn desugar_idempotent_pvs() {
        let once = desugar(&parse_program(PVS).unwrap());
        assert_eq!(desugar(&once), once);
    }
}
