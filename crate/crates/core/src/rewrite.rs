//! Program rewriting: every non-degenerate streaming atom becomes an atom
//! over a fresh auxiliary predicate, giving a flat program and the mapping
//! τ from streaming-atom signatures to auxiliary predicates.

use std::collections::HashMap;
use std::fmt;

use crate::facts::{FactSet, Tuple};
use crate::lang::{
    Atom, BodyLiteral, Modality, Pred, Program, Rule, StreamingLiteral, Term, Value, WindowSet, RESERVED_PREFIX,
};
use crate::symbol::Symbol;

/// Modality of a window operator, with the counting term reduced to a
/// constant or a marker for "variable".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WindowMode {
    AtLeast(u64),
    Always,
    CountConst(i64),
    CountVar,
}

/// What a window operator computes; independent of the literal's terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    pub pred: Pred,
    pub mode: WindowMode,
    pub window: WindowSet,
}

impl Signature {
    /// Signature of a desugared, non-degenerate literal.
    pub fn of(lit: &StreamingLiteral) -> Signature {
        let mode = match &lit.modality {
            Modality::AtLeast(c) => WindowMode::AtLeast(*c),
            Modality::In => WindowMode::AtLeast(1),
            Modality::Always => WindowMode::Always,
            Modality::Count(Term::Var(_)) => WindowMode::CountVar,
            Modality::Count(Term::Const(Value::Int(c))) => WindowMode::CountConst(*c),
            Modality::Count(Term::Const(Value::Sym(_))) => WindowMode::CountConst(-1),
            Modality::AtMost(_) | Modality::Bare => panic!("literal is not desugared: {lit}"),
        };
        Signature {
            pred: lit.atom.predicate(),
            mode,
            window: lit.window.canonical(),
        }
    }

    /// Arity of the auxiliary predicate.
    pub fn aux_arity(&self) -> usize {
        self.pred.arity + usize::from(self.mode == WindowMode::CountVar)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.pred)?;
        match self.mode {
            WindowMode::AtLeast(c) => write!(f, "at least {c}")?,
            WindowMode::Always => write!(f, "always")?,
            WindowMode::CountConst(c) => write!(f, "count {c}")?,
            WindowMode::CountVar => write!(f, "count _")?,
        }
        write!(f, " in {}", self.window)
    }
}

/// τ: signatures to auxiliary predicates, numbered in order of first use.
#[derive(Clone, Debug, Default)]
pub struct TauMapping {
    entries: Vec<(Signature, Pred)>,
    index: HashMap<Signature, usize>,
}

impl TauMapping {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(Signature, Pred)] {
        &self.entries
    }

    pub fn get(&self, sig: &Signature) -> Option<Pred> {
        self.index.get(sig).map(|&i| self.entries[i].1)
    }

    pub fn aux(&self, i: usize) -> Pred {
        self.entries[i].1
    }

    pub fn signature(&self, i: usize) -> &Signature {
        &self.entries[i].0
    }

    pub fn position(&self, sig: &Signature) -> Option<usize> {
        self.index.get(sig).copied()
    }

    pub fn is_aux(pred: Pred) -> bool {
        pred.name.as_str().starts_with(RESERVED_PREFIX)
    }

    fn intern(&mut self, sig: Signature) -> usize {
        if let Some(&i) = self.index.get(&sig) {
            return i;
        }
        let k = self.entries.len() + 1;
        let aux = Pred {
            name: Symbol::intern(&format!("{RESERVED_PREFIX}{k}__{}", sig.pred.name)),
            arity: sig.aux_arity(),
        };
        self.entries.push((sig.clone(), aux));
        self.index.insert(sig, k - 1);
        k - 1
    }
}

/// A program whose streaming literals are all degenerate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatProgram {
    pub program: Program,
}

/// Rewrites a desugared program. Rule `i` of the result corresponds to rule
/// `i` of the input.
pub fn flatten(program: &Program) -> (FlatProgram, TauMapping) {
    let mut tau = TauMapping::default();
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
                    BodyLiteral::Stream(s) if s.is_degenerate() => {
                        BodyLiteral::Stream(StreamingLiteral::bare(s.atom.clone(), s.negated))
                    }
                    BodyLiteral::Stream(s) => {
                        let i = tau.intern(Signature::of(s));
                        let mut terms = s.atom.terms.clone();
                        if let Modality::Count(t @ Term::Var(_)) = &s.modality {
                            terms.push(*t);
                        }
                        let atom = Atom {
                            pred: tau.aux(i).name,
                            terms,
                        };
                        BodyLiteral::Stream(StreamingLiteral::bare(atom, s.negated))
                    }
                    other => other.clone(),
                })
                .collect(),
        })
        .collect();
    let flat = Program {
        rules,
        positions: program.positions.clone(),
    };
    (FlatProgram { program: flat }, tau)
}

/// Holding tuples for one signature: for variable-count signatures each
/// tuple carries its count as the last component.
pub type Holding = Vec<Tuple>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("auxiliary {aux}: tuple of length {found} does not match arity {expected}")]
pub struct ArityMismatch {
    pub aux: Pred,
    pub expected: usize,
    pub found: usize,
}

/// H′: turns holding tuples (indexed by τ position) into aux facts.
pub fn materialize_aux(
    tau: &TauMapping,
    holding: impl IntoIterator<Item = (usize, Holding)>,
    out: &mut FactSet,
) -> Result<(), ArityMismatch> {
    for (i, tuples) in holding {
        let aux = tau.aux(i);
        for t in tuples {
            if t.len() != aux.arity {
                return Err(ArityMismatch {
                    aux,
                    expected: aux.arity,
                    found: t.len(),
                });
            }
            out.insert_tuple(aux, t);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{load_program, GroundAtom};

    const P4: &str = "
        a(X) :- b(X) always in [2].
        b(Y) :- a(X) in [1], Y=X+1, c(Y).
        d(X) :- b(X) at least 2 in [4].
        e(X,Y) :- a(X), b(Y).
    ";

    #[test]
    fn p4_flat() {
        let (flat, tau) = flatten(&load_program(P4).unwrap());
        assert_eq!(tau.len(), 3);
        assert!(flat.program.is_flat());
        let text = flat.program.to_string();
        assert_eq!(
            text,
            "a(X) :- aux__1__b(X).\n\
             b(Y) :- aux__2__a(X), Y=X+1, c(Y).\n\
             d(X) :- aux__3__b(X).\n\
             e(X,Y) :- a(X), b(Y).\n"
        );
        assert_eq!(tau.signature(0).mode, WindowMode::Always);
        assert_eq!(tau.signature(1).mode, WindowMode::AtLeast(1));
        assert_eq!(tau.signature(2).mode, WindowMode::AtLeast(2));
        assert_eq!(tau.signature(2).window.offsets(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn flat_program_unchanged() {
        let p = load_program("a(X) :- b(X), not c(X).").unwrap();
        let (flat, tau) = flatten(&p);
        assert!(tau.is_empty());
        assert_eq!(flat.program.to_string(), "a(X) :- b(X), not c(X).\n");
    }

    #[test]
    fn count_variable_extends_arity() {
        let (flat, tau) = flatten(&load_program("carPassing(C,N) :- car(C) count N in [20].").unwrap());
        assert_eq!(flat.program.to_string(), "carPassing(C,N) :- aux__1__car(C,N).\n");
        assert_eq!(tau.aux(0).arity, 2);
    }

    #[test]
    fn identical_atoms_share() {
        let p =
            load_program("x(X) :- p(X) in [2]. y(Y) :- p(Y) at least 1 in {0,1,2}, not p(Y) always in [2].").unwrap();
        let (flat, tau) = flatten(&p);
        assert_eq!(tau.len(), 2);
        assert_eq!(
            flat.program.to_string(),
            "x(X) :- aux__1__p(X).\ny(Y) :- aux__1__p(Y), not aux__2__p(Y).\n"
        );
    }

    #[test]
    fn deterministic_names() {
        let p = load_program(P4).unwrap();
        assert_eq!(flatten(&p).0, flatten(&p).0);
    }

    #[test]
    fn materialize() {
        let (_, tau) = flatten(&load_program("h(C,N) :- car(C) count N in [20]. a(X) :- b(X) always in [2].").unwrap());
        let mut out = FactSet::new();
        let c1 = Value::Sym(Symbol::intern("c1"));
        materialize_aux(
            &tau,
            vec![(0, vec![vec![c1, Value::Int(3)].into_boxed_slice()])],
            &mut out,
        )
        .unwrap();
        materialize_aux(&tau, vec![(1, vec![vec![Value::Int(5)].into_boxed_slice()])], &mut out).unwrap();
        assert!(out.contains(&GroundAtom::new("aux__1__car", vec![c1, Value::Int(3)])));
        assert!(out.contains(&GroundAtom::new("aux__2__b", vec![Value::Int(5)])));
        let empty: Vec<(usize, Holding)> = Vec::new();
        let mut none = FactSet::new();
        materialize_aux(&tau, empty, &mut none).unwrap();
        assert!(none.is_empty());
        let bad = materialize_aux(&tau, vec![(0, vec![vec![c1].into_boxed_slice()])], &mut none);
        assert!(bad.is_err());
    }
}
