//! Per-tick orchestration: window operators and evaluator shots run
//! subprogram by subprogram in processing order, streaming-recursive parts
//! loop to a fixpoint, and the persisted part of each tick feeds the history.
//!
//! Inside a macro-node the components are split further into phases. A new
//! phase starts when a component reads a predicate through negation or an
//! aggregate and that predicate is still growing in a recursive loop of the
//! current phase; each phase has its own evaluator.

use std::io;
use std::time::{Duration, Instant};

use crossbeam_channel::Receiver;
use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

use crate::analysis::{
    build_scg, build_sdg, build_split_plan, is_valid_ordering, order_components, rule_dependencies, NotStratifiedError,
    SplitPlan,
};
use crate::facts::FactSet;
use crate::ground::{Evaluator, GroundError, ShotStats};
use crate::lang::{check_safety, BodyLiteral, GroundAtom, Pred, Program, SafetyError};
use crate::rewrite::{flatten, materialize_aux, FlatProgram, TauMapping};
use crate::windows::{evaluate, History};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Safety(#[from] SafetyError),
    #[error(transparent)]
    NotStratified(#[from] NotStratifiedError),
    #[error("ordering is not a valid processing order for this program")]
    InvalidOrdering,
    #[error(transparent)]
    Ground(#[from] GroundError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    /// One evaluator per phase for the whole run.
    #[default]
    Incremental,
    /// Fresh evaluators at every tick.
    Scratch,
}

#[derive(Clone, Debug, Default)]
pub struct EngineConfig {
    pub mode: Mode,
    /// Cap on stored ground rule instances per evaluator.
    pub ground_limit: Option<usize>,
    /// Component ordering to use instead of the deterministic one.
    pub ordering: Option<Vec<usize>>,
}

#[derive(Clone, Debug)]
struct PhaseSpec {
    rules: Vec<usize>,
    heads: FxHashSet<Pred>,
    reads: FxHashSet<Pred>,
    recursive: bool,
    /// Window operators over predicates final before the phase starts.
    pre_ops: Vec<usize>,
    /// Window operators over this phase's own predicates.
    loop_ops: Vec<usize>,
    program: Program,
}

#[derive(Clone, Debug)]
struct MacroSpec {
    phases: Vec<PhaseSpec>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TickStats {
    pub ground_rules_total: usize,
    pub ground_rules_new: usize,
    pub shots: usize,
}

#[derive(Clone, Debug)]
pub struct TickResult {
    pub tick: usize,
    /// S_n ∪ O_n, background included.
    pub atoms: FactSet,
    /// The part of the tick kept in the history.
    pub persisted: FactSet,
    pub stats: TickStats,
}

pub struct Engine {
    program: Program,
    plan: SplitPlan,
    flat: FlatProgram,
    tau: TauMapping,
    macros: Vec<MacroSpec>,
    evaluators: Vec<Vec<Evaluator>>,
    history: History,
    background: FactSet,
    config: EngineConfig,
}

impl Engine {
    /// Sets up the engine for a desugared program.
    pub fn init(program: &Program, background: &[GroundAtom], config: EngineConfig) -> Result<Engine, EngineError> {
        check_safety(program)?;
        let sdg = build_sdg(program);
        let scg = build_scg(&sdg);
        let ordering = match &config.ordering {
            Some(o) if is_valid_ordering(&scg, o) => o.clone(),
            Some(_) => return Err(EngineError::InvalidOrdering),
            None => order_components(&scg),
        };
        let plan = build_split_plan(program, sdg, scg, ordering)?;
        let (flat, tau) = flatten(program);
        let aux_index: FxHashMap<Pred, usize> = tau.entries().iter().enumerate().map(|(i, (_, p))| (*p, i)).collect();

        let mut macros = Vec::new();
        for m in &plan.macro_nodes {
            let mut comps = m.components.clone();
            comps.sort_unstable();
            let mut phases: Vec<PhaseSpec> = Vec::new();
            let mut current: Vec<usize> = Vec::new();
            let mut recursive = false;
            let mut tainted: FxHashSet<Pred> = FxHashSet::default();
            let mut groups: Vec<(Vec<usize>, bool)> = Vec::new();
            for &c in &comps {
                let preds: Vec<Pred> = plan.scg.components[c].clone();
                let rules: Vec<usize> = m
                    .rules
                    .iter()
                    .copied()
                    .filter(|&r| preds.contains(&program.rules[r].head.predicate()))
                    .collect();
                let deps: Vec<_> = rules
                    .iter()
                    .flat_map(|&r| rule_dependencies(&program.rules[r]))
                    .collect();
                if deps.iter().any(|(p, l)| l.non_harmless && tainted.contains(p)) {
                    groups.push((std::mem::take(&mut current), recursive));
                    recursive = false;
                    tainted.clear();
                }
                current.push(c);
                if plan.scg.is_streaming_recursive(c) {
                    recursive = true;
                    tainted.extend(preds.iter().copied());
                } else if deps.iter().any(|(p, _)| tainted.contains(p)) {
                    tainted.extend(preds.iter().copied());
                }
            }
            if !current.is_empty() {
                groups.push((current, recursive));
            }

            for (comps, recursive) in groups {
                let heads: FxHashSet<Pred> = comps
                    .iter()
                    .flat_map(|&c| plan.scg.components[c].iter().copied())
                    .collect();
                let rules: Vec<usize> = m
                    .rules
                    .iter()
                    .copied()
                    .filter(|&r| heads.contains(&program.rules[r].head.predicate()))
                    .collect();
                let mut reads: FxHashSet<Pred> = FxHashSet::default();
                let mut loop_ops = Vec::new();
                let mut pre_ops = Vec::new();
                for &r in &rules {
                    for l in &flat.program.rules[r].body {
                        match l {
                            BodyLiteral::Stream(s) => {
                                let p = s.atom.predicate();
                                reads.insert(p);
                                if let Some(&op) = aux_index.get(&p) {
                                    if heads.contains(&tau.signature(op).pred) {
                                        if !loop_ops.contains(&op) {
                                            loop_ops.push(op);
                                        }
                                    } else if !pre_ops.contains(&op) {
                                        pre_ops.push(op);
                                    }
                                }
                            }
                            BodyLiteral::Aggregate(a) => reads.extend(a.preds()),
                            BodyLiteral::Builtin(_) => {}
                        }
                    }
                }
                let sub = Program::new(rules.iter().map(|&r| flat.program.rules[r].clone()).collect());
                phases.push(PhaseSpec {
                    rules,
                    heads,
                    reads,
                    recursive,
                    pre_ops,
                    loop_ops,
                    program: sub,
                });
            }
            macros.push(MacroSpec { phases });
        }

        let history = History::for_tau(&tau);
        let mut engine = Engine {
            program: program.clone(),
            plan,
            flat,
            tau,
            macros,
            evaluators: Vec::new(),
            history,
            background: background.iter().cloned().collect(),
            config,
        };
        engine.evaluators = engine.fresh_evaluators()?;
        Ok(engine)
    }

    fn fresh_evaluators(&self) -> Result<Vec<Vec<Evaluator>>, GroundError> {
        self.macros
            .iter()
            .map(|m| {
                m.phases
                    .iter()
                    .map(|p| Ok(Evaluator::load_with_ids(&p.program, &p.rules)?.with_limit(self.config.ground_limit)))
                    .collect()
            })
            .collect()
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn plan(&self) -> &SplitPlan {
        &self.plan
    }

    pub fn flat(&self) -> &FlatProgram {
        &self.flat
    }

    pub fn tau(&self) -> &TauMapping {
        &self.tau
    }

    /// Index of the next tick.
    pub fn tick(&self) -> usize {
        self.history.tick()
    }

    /// Number of subprograms (macro-nodes).
    pub fn subprograms(&self) -> usize {
        self.macros.len()
    }

    /// Number of evaluator phases across all subprograms.
    pub fn phases(&self) -> usize {
        self.macros.iter().map(|m| m.phases.len()).sum()
    }

    /// Processes one tick. On error the history is left untouched; see
    /// [`Engine::skip_tick`].
    pub fn on_tick(&mut self, input: impl IntoIterator<Item = GroundAtom>) -> Result<TickResult, EngineError> {
        let mut current: FactSet = input.into_iter().collect();
        current.extend(&self.background);
        let mut persisted = current.clone();
        let mut aux = FactSet::new();
        let mut computed = vec![false; self.tau.len()];
        let mut stats = TickStats::default();
        if self.config.mode == Mode::Scratch {
            self.evaluators = self.fresh_evaluators()?;
        }
        for (m, spec) in self.macros.iter().enumerate() {
            for (k, phase) in spec.phases.iter().enumerate() {
                for &op in &phase.pre_ops {
                    if !computed[op] {
                        computed[op] = true;
                        let holding = evaluate(self.tau.signature(op), &self.history, &current);
                        materialize_aux(&self.tau, [(op, holding)], &mut aux).expect("operator arity");
                    }
                }
                let ev = &mut self.evaluators[m][k];
                loop {
                    for &op in &phase.loop_ops {
                        let holding = evaluate(self.tau.signature(op), &self.history, &current);
                        materialize_aux(&self.tau, [(op, holding)], &mut aux).expect("operator arity");
                    }
                    let mut shot_input = FactSet::new();
                    shot_input.extend_filtered(&current, |p| phase.reads.contains(&p));
                    shot_input.extend_filtered(&aux, |p| phase.reads.contains(&p));
                    let result = ev.shot(&shot_input)?;
                    add_stats(&mut stats, result.stats);
                    let before = current.len();
                    current.extend_filtered(&result.answer, |p| phase.heads.contains(&p));
                    persisted.extend_filtered(&result.persistent, |p| phase.heads.contains(&p));
                    if !phase.recursive || current.len() == before {
                        break;
                    }
                }
            }
        }
        stats.ground_rules_total = self.ground_rules_total();
        let tick = self.history.tick();
        self.history.advance(&persisted);
        Ok(TickResult {
            tick,
            atoms: current,
            persisted,
            stats,
        })
    }

    /// Closes a failed tick: only its input (and background) is persisted,
    /// and evaluators are rebuilt since a failed shot may be incomplete.
    pub fn skip_tick(&mut self, input: impl IntoIterator<Item = GroundAtom>) -> Result<(), EngineError> {
        let mut persisted: FactSet = input.into_iter().collect();
        persisted.extend(&self.background);
        self.history.advance(&persisted);
        self.evaluators = self.fresh_evaluators()?;
        Ok(())
    }
}

fn add_stats(acc: &mut TickStats, s: ShotStats) {
    acc.ground_rules_new += s.ground_rules_new;
    acc.shots += 1;
}

/// A tick as delivered by a source.
#[derive(Clone, Debug)]
pub struct TickInput {
    pub facts: Vec<GroundAtom>,
    pub arrival: Instant,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TickRecord {
    pub tick: usize,
    /// Nanoseconds since the start of the run.
    pub arrival_ns: u64,
    pub emit_ns: u64,
    pub latency_ns: u64,
    /// Ticks still queued when this one was dequeued.
    pub queue_len: usize,
    pub ground_rules_total: usize,
    pub ground_rules_new: usize,
    pub failed: bool,
}

#[derive(Clone, Debug)]
pub struct TickOutput {
    pub record: TickRecord,
    /// `None` for a failed tick.
    pub atoms: Option<FactSet>,
    /// The tick as it arrived.
    pub input: Vec<GroundAtom>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FailurePolicy {
    #[default]
    FailFast,
    Skip,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LatencySummary {
    pub min_ns: u64,
    pub mean_ns: f64,
    pub p50_ns: u64,
    pub p95_ns: u64,
    pub p99_ns: u64,
    pub max_ns: u64,
}

impl LatencySummary {
    pub fn from_samples(samples: &[u64]) -> LatencySummary {
        if samples.is_empty() {
            return LatencySummary::default();
        }
        let mut s = samples.to_vec();
        s.sort_unstable();
        let q = |p: f64| s[(((s.len() - 1) as f64) * p).round() as usize];
        LatencySummary {
            min_ns: s[0],
            mean_ns: s.iter().map(|&x| x as f64).sum::<f64>() / s.len() as f64,
            p50_ns: q(0.5),
            p95_ns: q(0.95),
            p99_ns: q(0.99),
            max_ns: s[s.len() - 1],
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    /// Ticks dequeued and processed, failed ones included.
    pub accepted: usize,
    pub failed: usize,
    pub total: Duration,
    pub latency: LatencySummary,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("tick {tick}: {source}")]
    Tick {
        tick: usize,
        source: EngineError,
        summary: RunSummary,
    },
    #[error("output: {source}")]
    Sink { source: io::Error, summary: RunSummary },
}

impl RunError {
    pub fn summary(&self) -> &RunSummary {
        match self {
            RunError::Tick { summary, .. } | RunError::Sink { summary, .. } => summary,
        }
    }
}

fn nanos_since(start: Instant, t: Instant) -> u64 {
    t.saturating_duration_since(start).as_nanos() as u64
}

/// Consumes ticks from `rx` in FIFO order until the channel closes,
/// handing each output to `emit`. Nothing is dropped: every tick that
/// arrives is processed.
pub fn run(
    engine: &mut Engine,
    rx: Receiver<TickInput>,
    start: Instant,
    policy: FailurePolicy,
    mut emit: impl FnMut(&TickOutput) -> io::Result<()>,
) -> Result<RunSummary, RunError> {
    let mut latencies = Vec::new();
    let mut summary = RunSummary::default();
    let finish = |summary: &mut RunSummary, latencies: &[u64]| {
        summary.total = start.elapsed();
        summary.latency = LatencySummary::from_samples(latencies);
    };
    while let Ok(input) = rx.recv() {
        let queue_len = rx.len();
        let tick = engine.tick();
        let result = engine.on_tick(input.facts.iter().cloned());
        let emit_at = Instant::now();
        let mut record = TickRecord {
            tick,
            arrival_ns: nanos_since(start, input.arrival),
            emit_ns: nanos_since(start, emit_at),
            latency_ns: emit_at.saturating_duration_since(input.arrival).as_nanos() as u64,
            queue_len,
            ..TickRecord::default()
        };
        summary.accepted += 1;
        latencies.push(record.latency_ns);
        let output = match result {
            Ok(r) => {
                record.ground_rules_total = r.stats.ground_rules_total;
                record.ground_rules_new = r.stats.ground_rules_new;
                TickOutput {
                    record,
                    atoms: Some(r.atoms),
                    input: input.facts,
                }
            }
            Err(e) => {
                log::warn!("tick {tick} failed: {e}");
                summary.failed += 1;
                if policy == FailurePolicy::FailFast {
                    finish(&mut summary, &latencies);
                    return Err(RunError::Tick {
                        tick,
                        source: e,
                        summary,
                    });
                }
                if let Err(e2) = engine.skip_tick(input.facts.iter().cloned()) {
                    finish(&mut summary, &latencies);
                    return Err(RunError::Tick {
                        tick,
                        source: e2,
                        summary,
                    });
                }
                record.failed = true;
                TickOutput {
                    record,
                    atoms: None,
                    input: input.facts,
                }
            }
        };
        if let Err(source) = emit(&output) {
            finish(&mut summary, &latencies);
            return Err(RunError::Sink { source, summary });
        }
    }
    finish(&mut summary, &latencies);
    Ok(summary)
}

impl Engine {
    /// Stored ground rule instances over all evaluators.
    pub fn ground_rules_total(&self) -> usize {
        self.evaluators.iter().flatten().map(Evaluator::ground_rules).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{load_program, parse_facts};
    use crate::oracle::{AtomSet, StreamingOracle};

    fn facts(src: &str) -> Vec<GroundAtom> {
        if src.trim().is_empty() {
            return Vec::new();
        }
        parse_facts(src).unwrap()
    }

    fn set(src: &str) -> AtomSet {
        facts(src).into_iter().collect()
    }

    fn engine(src: &str) -> Engine {
        Engine::init(&load_program(src).unwrap(), &[], EngineConfig::default()).unwrap()
    }

    const P4: &str = "
        a(X) :- b(X) always in [2].
        b(Y) :- a(X) in [1], Y=X+1, c(Y).
        d(X) :- b(X) at least 2 in [4].
        e(X,Y) :- a(X), b(Y).
    ";

    #[test]
    fn example_3() {
        let mut e = engine("c(X) :- b(X). d(X) :- c(X) in [1].");
        assert_eq!(
            e.on_tick(facts("b(5).")).unwrap().atoms.to_set(),
            set("b(5). c(5). d(5).")
        );
        assert_eq!(
            e.on_tick(facts("c(7).")).unwrap().atoms.to_set(),
            set("c(7). d(7). d(5).")
        );
    }

    #[test]
    fn example_4() {
        let mut e = engine("#temp c(X) :- b(X). d(X) :- c(X) in [1].");
        let t0 = e.on_tick(facts("b(5).")).unwrap();
        assert_eq!(t0.atoms.to_set(), set("b(5). c(5). d(5)."));
        assert_eq!(t0.persisted.to_set(), set("b(5). d(5)."));
        assert_eq!(e.on_tick(facts("c(7).")).unwrap().atoms.to_set(), set("c(7). d(7)."));
    }

    #[test]
    fn empty_program_echoes() {
        let mut e = engine("");
        assert_eq!(e.on_tick(facts("a. b(1).")).unwrap().atoms.to_set(), set("a. b(1)."));
    }

    #[test]
    fn p4_structure() {
        let e = engine(P4);
        assert_eq!(e.subprograms(), 2);
        assert_eq!(e.tau().len(), 3);
        assert_eq!(e.phases(), 2);
        let flat = engine("a(X) :- b(X), not c(X).");
        assert_eq!(flat.subprograms(), 1);
        assert!(flat.tau().is_empty());
    }

    #[test]
    fn pvs_operators() {
        let e = engine(
            "workingPanel(P) :- energyDelivered(P,W) at least 1 in [4], energyThreshold(Et), W>=Et.
             reachable(cea,P2) :- link(cea,P2), workingPanel(P2).
             reachable(P1,P3) :- reachable(P1,P2), link(P2,P3), workingPanel(P3).
             unlinked :- workingPanel(P), not reachable(cea,P).
             regularFunctioning :- unlinked at most 2 in [3].
             alert :- not regularFunctioning.
             callMaintenance :- alert always in [5].",
        );
        let sigs: Vec<String> = e.tau().entries().iter().map(|(s, _)| s.to_string()).collect();
        assert_eq!(
            sigs,
            vec![
                "energyDelivered/2 at least 1 in {0,1,2,3,4}",
                "unlinked/0 at least 3 in {0,1,2,3}",
                "alert/0 always in {0,1,2,3,4,5}",
            ]
        );
    }

    #[test]
    fn p4_against_oracle() {
        let program = load_program(P4).unwrap();
        let ticks = [
            "b(1). c(2).",
            "b(1). c(2). c(3).",
            "b(1). c(3).",
            "b(1). b(2). c(3).",
            "c(3).",
            "",
            "b(2).",
        ];
        let mut e = Engine::init(&program, &[], EngineConfig::default()).unwrap();
        let mut o = StreamingOracle::new(&program, &[]).unwrap();
        for t in ticks {
            let got = e.on_tick(facts(t)).unwrap().atoms.to_set();
            assert_eq!(got, o.step(facts(t)).unwrap(), "at {t}");
        }
    }

    #[test]
    fn negation_inside_recursive_macro() {
        // q grows through the windowed loop; r reads it negatively in the
        // same macro-node and must see its final extension
        let src = "p(X) :- s(X). p(Y) :- q(X) in [1], n(X,Y). q(X) :- p(X). r(X) :- s(X), not q(X).";
        let program = load_program(src).unwrap();
        let mut e = Engine::init(&program, &[], EngineConfig::default()).unwrap();
        let mut o = StreamingOracle::new(&program, &[]).unwrap();
        for t in ["s(1). n(1,2). n(2,3).", "s(3). n(3,4). n(4,5).", "s(5). n(1,5)."] {
            assert_eq!(e.on_tick(facts(t)).unwrap().atoms.to_set(), o.step(facts(t)).unwrap());
        }
    }

    #[test]
    fn window_over_earlier_phase() {
        let src = "p(X) :- s(X). p(Y) :- q(X) in [1], n(X,Y). q(X) :- p(X). r(X) :- s(X), not q(X) always in [1].";
        let program = load_program(src).unwrap();
        let mut e = Engine::init(&program, &[], EngineConfig::default()).unwrap();
        let mut o = StreamingOracle::new(&program, &[]).unwrap();
        for t in ["s(1). n(1,2).", "s(2). s(3). n(2,3).", "s(3). n(1,3).", "s(4)."] {
            assert_eq!(
                e.on_tick(facts(t)).unwrap().atoms.to_set(),
                o.step(facts(t)).unwrap(),
                "at {t}"
            );
        }
    }

    #[test]
    fn scratch_matches_incremental() {
        let program = load_program(P4).unwrap();
        let mut inc = Engine::init(&program, &[], EngineConfig::default()).unwrap();
        let mut scr = Engine::init(
            &program,
            &[],
            EngineConfig {
                mode: Mode::Scratch,
                ..EngineConfig::default()
            },
        )
        .unwrap();
        for t in ["b(1). c(2).", "b(1). c(2).", "b(1). c(2)."] {
            let a = inc.on_tick(facts(t)).unwrap();
            let b = scr.on_tick(facts(t)).unwrap();
            assert_eq!(a.atoms, b.atoms);
        }
        // repeated input: nothing new to ground
        assert_eq!(inc.on_tick(facts("b(1). c(2).")).unwrap().stats.ground_rules_new, 0);
    }

    #[test]
    fn background_every_tick() {
        let program = load_program("ok(X) :- thr(T), v(X), X >= T.").unwrap();
        let bg = facts("thr(3).");
        let mut e = Engine::init(&program, &bg, EngineConfig::default()).unwrap();
        let r = e.on_tick(facts("v(2). v(4).")).unwrap().atoms.to_set();
        assert_eq!(r, set("thr(3). v(2). v(4). ok(4)."));
        let r = e.on_tick(facts("v(5).")).unwrap().atoms.to_set();
        assert_eq!(r, set("thr(3). v(5). ok(5)."));
    }

    #[test]
    fn invalid_ordering_rejected() {
        let program = load_program("b :- a in [1]. a :- x.").unwrap();
        let sdg = build_sdg(&program);
        let scg = build_scg(&sdg);
        let mut bad = order_components(&scg);
        bad.reverse();
        let cfg = EngineConfig {
            ordering: Some(bad),
            ..EngineConfig::default()
        };
        assert!(matches!(
            Engine::init(&program, &[], cfg),
            Err(EngineError::InvalidOrdering)
        ));
    }

    #[test]
    fn failed_tick_policies() {
        let program = load_program("r(Y) :- p(X), Y = 10 / X. q(X) :- p(X) in [1].").unwrap();
        let (tx, rx) = crossbeam_channel::unbounded();
        let start = Instant::now();
        for t in ["p(1).", "p(0).", "p(2)."] {
            tx.send(TickInput {
                facts: facts(t),
                arrival: Instant::now(),
            })
            .unwrap();
        }
        drop(tx);
        let mut e = Engine::init(&program, &[], EngineConfig::default()).unwrap();
        let mut outs = Vec::new();
        let summary = run(&mut e, rx, start, FailurePolicy::Skip, |o| {
            outs.push(o.clone());
            Ok(())
        })
        .unwrap();
        assert_eq!(summary.accepted, 3);
        assert_eq!(summary.failed, 1);
        assert!(outs[1].record.failed);
        let last = outs[2].atoms.as_ref().unwrap().to_set();
        assert_eq!(last, set("p(2). r(5). q(2). q(0)."));

        let (tx, rx) = crossbeam_channel::unbounded();
        for t in ["p(1).", "p(0).", "p(2)."] {
            tx.send(TickInput {
                facts: facts(t),
                arrival: Instant::now(),
            })
            .unwrap();
        }
        drop(tx);
        let mut e = Engine::init(&program, &[], EngineConfig::default()).unwrap();
        let err = run(&mut e, rx, start, FailurePolicy::FailFast, |_| Ok(())).unwrap_err();
        assert!(matches!(err, RunError::Tick { tick: 1, .. }));
        assert_eq!(err.summary().accepted, 2);
    }

    #[test]
    fn fifo_burst_in_order() {
        let program = load_program("c(X) :- b(X).").unwrap();
        let (tx, rx) = crossbeam_channel::unbounded();
        for i in 0..10 {
            tx.send(TickInput {
                facts: facts(&format!("b({i}).")),
                arrival: Instant::now(),
            })
            .unwrap();
        }
        drop(tx);
        let mut e = Engine::init(&program, &[], EngineConfig::default()).unwrap();
        let mut seen = Vec::new();
        let summary = run(&mut e, rx, Instant::now(), FailurePolicy::FailFast, |o| {
            seen.push((o.record.tick, o.record.queue_len));
            Ok(())
        })
        .unwrap();
        assert_eq!(summary.accepted, 10);
        assert_eq!(
            seen.iter().map(|s| s.0).collect::<Vec<_>>(),
            (0..10).collect::<Vec<_>>()
        );
        assert_eq!(seen[0].1, 9);
        assert_eq!(seen[9].1, 0);
    }

    #[test]
    fn empty_run() {
        let (tx, rx) = crossbeam_channel::unbounded::<TickInput>();
        drop(tx);
        let mut e = engine("a :- b.");
        let s = run(&mut e, rx, Instant::now(), FailurePolicy::FailFast, |_| Ok(())).unwrap();
        assert_eq!(s.accepted, 0);
    }
}
