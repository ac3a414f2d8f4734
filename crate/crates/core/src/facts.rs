//! Ground atom sets grouped by predicate.

use std::collections::BTreeSet;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::lang::{GroundAtom, Pred, Value};

pub type Tuple = Box<[Value]>;

#[derive(Clone, Debug, Default)]
pub struct FactSet {
    by_pred: FxHashMap<Pred, FxHashSet<Tuple>>,
    len: usize,
}

impl FactSet {
    pub fn new() -> FactSet {
        FactSet::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn insert_tuple(&mut self, pred: Pred, args: Tuple) -> bool {
        debug_assert_eq!(pred.arity, args.len());
        let added = self.by_pred.entry(pred).or_default().insert(args);
        self.len += usize::from(added);
        added
    }

    pub fn insert(&mut self, atom: GroundAtom) -> bool {
        let pred = atom.predicate();
        self.insert_tuple(pred, atom.args.into_boxed_slice())
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.by_pred
            .get(&atom.predicate())
            .is_some_and(|s| s.contains(atom.args.as_slice()))
    }

    pub fn contains_tuple(&self, pred: Pred, args: &[Value]) -> bool {
        self.by_pred.get(&pred).is_some_and(|s| s.contains(args))
    }

    pub fn tuples(&self, pred: Pred) -> impl Iterator<Item = &Tuple> {
        self.by_pred.get(&pred).into_iter().flatten()
    }

    pub fn count(&self, pred: Pred) -> usize {
        self.by_pred.get(&pred).map_or(0, FxHashSet::len)
    }

    pub fn preds(&self) -> impl Iterator<Item = Pred> + '_ {
        self.by_pred.iter().filter(|(_, s)| !s.is_empty()).map(|(p, _)| *p)
    }

    pub fn iter(&self) -> impl Iterator<Item = GroundAtom> + '_ {
        self.by_pred.iter().flat_map(|(p, s)| {
            s.iter().map(move |t| GroundAtom {
                pred: p.name,
                args: t.to_vec(),
            })
        })
    }

    pub fn extend(&mut self, other: &FactSet) {
        for (p, s) in &other.by_pred {
            for t in s {
                self.insert_tuple(*p, t.clone());
            }
        }
    }

    /// Copies the atoms of `other` whose predicate satisfies `keep`.
    pub fn extend_filtered(&mut self, other: &FactSet, mut keep: impl FnMut(Pred) -> bool) {
        for (p, s) in &other.by_pred {
            if keep(*p) {
                for t in s {
                    self.insert_tuple(*p, t.clone());
                }
            }
        }
    }

    pub fn to_set(&self) -> BTreeSet<GroundAtom> {
        self.iter().collect()
    }
}

impl FromIterator<GroundAtom> for FactSet {
    fn from_iter<I: IntoIterator<Item = GroundAtom>>(iter: I) -> Self {
        let mut s = FactSet::new();
        for a in iter {
            s.insert(a);
        }
        s
    }
}

impl PartialEq for FactSet {
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len && self.iter().all(|a| other.contains(&a))
    }
}

impl Eq for FactSet {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_and_query() {
        let mut s = FactSet::new();
        assert!(s.insert(GroundAtom::new("a", vec![Value::Int(1)])));
        assert!(!s.insert(GroundAtom::new("a", vec![Value::Int(1)])));
        assert!(s.insert(GroundAtom::new("a", vec![])));
        assert_eq!(s.len(), 2);
        assert_eq!(s.count(Pred::new("a", 1)), 1);
        assert!(s.contains(&GroundAtom::new("a", vec![])));
        let t: FactSet = s.iter().collect();
        assert_eq!(t, s);
    }
}
