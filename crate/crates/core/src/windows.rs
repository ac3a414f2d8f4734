//! Window operators over a bounded history of persisted atoms.

use std::collections::VecDeque;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::facts::{FactSet, Tuple};
use crate::lang::{Pred, Value};
use crate::rewrite::{Holding, Signature, TauMapping, WindowMode};

/// Per-predicate ring of the persisted extensions of completed ticks, most
/// recent first. Only predicates observed through some window are kept, and
/// only as far back as the largest offset on that predicate.
#[derive(Clone, Debug, Default)]
pub struct History {
    keep: FxHashMap<Pred, usize>,
    slots: FxHashMap<Pred, VecDeque<FxHashSet<Tuple>>>,
    n: usize,
}

impl History {
    pub fn new(signatures: impl IntoIterator<Item = Signature>) -> History {
        let mut keep: FxHashMap<Pred, usize> = FxHashMap::default();
        for sig in signatures {
            let e = keep.entry(sig.pred).or_default();
            *e = (*e).max(sig.window.max() as usize);
        }
        History {
            keep,
            slots: FxHashMap::default(),
            n: 0,
        }
    }

    pub fn for_tau(tau: &TauMapping) -> History {
        History::new(tau.entries().iter().map(|(s, _)| s.clone()))
    }

    /// Index of the tick currently being evaluated.
    pub fn tick(&self) -> usize {
        self.n
    }

    /// Number of ticks, current included, that `pred` must be visible for.
    pub fn depth(&self, pred: Pred) -> usize {
        self.keep.get(&pred).map_or(0, |k| k + 1)
    }

    /// Stored completed ticks for `pred`.
    pub fn stored(&self, pred: Pred) -> usize {
        self.slots.get(&pred).map_or(0, VecDeque::len)
    }

    /// Closes the current tick with its persisted set.
    pub fn advance(&mut self, persisted: &FactSet) {
        for (&pred, &keep) in &self.keep {
            if keep == 0 {
                continue;
            }
            let ring = self.slots.entry(pred).or_default();
            ring.push_front(persisted.tuples(pred).cloned().collect());
            ring.truncate(keep);
        }
        self.n += 1;
    }

    /// Persisted extension of `pred` at tick `n - d`, for `1 <= d <= n`.
    fn slot(&self, pred: Pred, d: usize) -> Option<&FxHashSet<Tuple>> {
        self.slots.get(&pred).and_then(|r| r.get(d - 1))
    }
}

/// Occurrence counts over the observed ticks, plus the number of observed
/// ticks. Offset 0 reads `current`.
fn count(sig: &Signature, history: &History, current: &FactSet) -> (FxHashMap<Tuple, u64>, u64) {
    let mut counts: FxHashMap<Tuple, u64> = FxHashMap::default();
    let mut observed = 0;
    for &d in sig.window.offsets() {
        let d = d as usize;
        if d > history.n {
            break;
        }
        observed += 1;
        if d == 0 {
            for t in current.tuples(sig.pred) {
                *counts.entry(t.clone()).or_default() += 1;
            }
        } else if let Some(slot) = history.slot(sig.pred, d) {
            for t in slot {
                *counts.entry(t.clone()).or_default() += 1;
            }
        }
    }
    (counts, observed)
}

/// Tuples `t` held at least `c` times over the observed ticks.
pub fn eval_at_least(sig: &Signature, history: &History, current: &FactSet) -> Holding {
    let WindowMode::AtLeast(c) = sig.mode else {
        panic!("not an at-least operator: {sig}")
    };
    let (counts, _) = count(sig, history, current);
    counts.into_iter().filter(|(_, k)| *k >= c).map(|(t, _)| t).collect()
}

/// Tuples held at every observed tick; nothing when no tick is observed.
pub fn eval_always(sig: &Signature, history: &History, current: &FactSet) -> Holding {
    assert_eq!(sig.mode, WindowMode::Always, "not an always operator: {sig}");
    let (counts, observed) = count(sig, history, current);
    if observed == 0 {
        return Vec::new();
    }
    counts
        .into_iter()
        .filter(|(_, k)| *k == observed)
        .map(|(t, _)| t)
        .collect()
}

/// Constant count: tuples held exactly `c` times. Variable count: every
/// tuple with its count appended; counts are never zero.
pub fn eval_count(sig: &Signature, history: &History, current: &FactSet) -> Holding {
    let (counts, _) = count(sig, history, current);
    match sig.mode {
        WindowMode::CountConst(c) => counts
            .into_iter()
            .filter(|(_, k)| c >= 0 && *k == c as u64)
            .map(|(t, _)| t)
            .collect(),
        WindowMode::CountVar => counts
            .into_iter()
            .map(|(t, k)| {
                let mut v = t.into_vec();
                v.push(Value::Int(k as i64));
                v.into_boxed_slice()
            })
            .collect(),
        _ => panic!("not a count operator: {sig}"),
    }
}

pub fn evaluate(sig: &Signature, history: &History, current: &FactSet) -> Holding {
    match sig.mode {
        WindowMode::AtLeast(_) => eval_at_least(sig, history, current),
        WindowMode::Always => eval_always(sig, history, current),
        WindowMode::CountConst(_) | WindowMode::CountVar => eval_count(sig, history, current),
    }
}
