//! Dependency analysis: stream dependency graph, its component graph,
//! stratification, component ordering and the subprogram split.
//!
//! Arc labels carry two independent facts about a dependency `p -> q`:
//! whether `p` is read through a non-degenerate streaming literal
//! (`windowed`, which orders subprograms), and whether it is read through a
//! non-harmless literal (negation, `count`, aggregates), which forces `p`
//! into a strictly lower stratum.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use thiserror::Error;

use crate::lang::{BodyLiteral, Pred, Program};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ArcLabel {
    pub windowed: bool,
    pub non_harmless: bool,
}

impl ArcLabel {
    fn merge(&mut self, other: ArcLabel) {
        self.windowed |= other.windowed;
        self.non_harmless |= other.non_harmless;
    }
}

/// Nodes are head predicates; `arcs[(p, q)]` exists iff some rule with head
/// `q` mentions `p` in its body.
#[derive(Clone, Debug, Default)]
pub struct StreamDependencyGraph {
    pub nodes: BTreeSet<Pred>,
    pub arcs: BTreeMap<(Pred, Pred), ArcLabel>,
}

impl StreamDependencyGraph {
    pub fn successors(&self, p: Pred) -> impl Iterator<Item = (Pred, ArcLabel)> + '_ {
        self.arcs
            .range((p, min_pred())..)
            .take_while(move |((from, _), _)| *from == p)
            .map(|((_, to), l)| (*to, *l))
    }
}

fn min_pred() -> Pred {
    Pred {
        name: crate::Symbol::intern(""),
        arity: 0,
    }
}

/// Arcs contributed by each body literal of `rule`, keyed by body predicate.
pub fn rule_dependencies(rule: &crate::lang::Rule) -> Vec<(Pred, ArcLabel)> {
    let mut out = Vec::new();
    for l in &rule.body {
        match l {
            BodyLiteral::Stream(s) => out.push((
                s.atom.predicate(),
                ArcLabel {
                    windowed: !s.is_degenerate(),
                    non_harmless: !s.is_harmless(),
                },
            )),
            BodyLiteral::Aggregate(a) => {
                for p in a.preds() {
                    out.push((
                        p,
                        ArcLabel {
                            windowed: false,
                            non_harmless: true,
                        },
                    ));
                }
            }
            BodyLiteral::Builtin(_) => {}
        }
    }
    out
}

pub fn build_sdg(program: &Program) -> StreamDependencyGraph {
    let nodes = program.head_preds();
    let mut arcs: BTreeMap<(Pred, Pred), ArcLabel> = BTreeMap::new();
    for rule in &program.rules {
        let q = rule.head.predicate();
        for (p, label) in rule_dependencies(rule) {
            if nodes.contains(&p) {
                arcs.entry((p, q)).or_default().merge(label);
            }
        }
    }
    StreamDependencyGraph { nodes, arcs }
}

/// Condensation of the SDG. Components are sorted sets of predicates and are
/// numbered in a topological order of the condensation.
#[derive(Clone, Debug, Default)]
pub struct StreamComponentGraph {
    pub components: Vec<Vec<Pred>>,
    pub component_of: HashMap<Pred, usize>,
    /// Arcs between distinct components with lifted labels.
    pub arcs: BTreeMap<(usize, usize), ArcLabel>,
    /// Labels of arcs inside each component (self-loops included).
    pub internal: Vec<ArcLabel>,
    /// `precedes[a][b]`: a path from `a` to `b` crosses a windowed arc.
    precedes: Vec<Vec<bool>>,
    reaches: Vec<Vec<bool>>,
}

impl StreamComponentGraph {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `a ≺ b`: some path from `a` to `b` contains a windowed arc.
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.precedes[a][b]
    }

    /// Some path (possibly of length zero) leads from `a` to `b`.
    pub fn reaches(&self, a: usize, b: usize) -> bool {
        a == b || self.reaches[a][b]
    }

    /// Smallest predicate of the component, used for deterministic tie-breaks.
    pub fn key(&self, c: usize) -> &Pred {
        &self.components[c][0]
    }

    /// The component has a cycle through a windowed arc.
    pub fn is_streaming_recursive(&self, c: usize) -> bool {
        self.internal[c].windowed
    }
}

pub fn build_scg(sdg: &StreamDependencyGraph) -> StreamComponentGraph {
    let mut graph: DiGraph<Pred, ()> = DiGraph::new();
    let mut index: HashMap<Pred, NodeIndex> = HashMap::new();
    for p in &sdg.nodes {
        index.insert(*p, graph.add_node(*p));
    }
    for (p, q) in sdg.arcs.keys() {
        graph.add_edge(index[p], index[q], ());
    }
    // tarjan_scc yields components in reverse topological order.
    let mut sccs = tarjan_scc(&graph);
    sccs.reverse();
    let components: Vec<Vec<Pred>> = sccs
        .iter()
        .map(|c| {
            let mut preds: Vec<Pred> = c.iter().map(|n| graph[*n]).collect();
            preds.sort();
            preds
        })
        .collect();
    let mut component_of = HashMap::new();
    for (i, c) in components.iter().enumerate() {
        for p in c {
            component_of.insert(*p, i);
        }
    }
    let n = components.len();
    let mut arcs: BTreeMap<(usize, usize), ArcLabel> = BTreeMap::new();
    let mut internal = vec![ArcLabel::default(); n];
    for ((p, q), label) in &sdg.arcs {
        let (a, b) = (component_of[p], component_of[q]);
        if a == b {
            internal[a].merge(*label);
        } else {
            arcs.entry((a, b)).or_default().merge(*label);
        }
    }
    // Components are topologically numbered, so a reverse sweep sees every
    // successor before its predecessors.
    let mut precedes = vec![vec![false; n]; n];
    let mut reaches = vec![vec![false; n]; n];
    for a in (0..n).rev() {
        for (&(from, b), label) in arcs.range((a, 0)..(a + 1, 0)) {
            debug_assert_eq!(from, a);
            reaches[a][b] = true;
            for c in 0..n {
                if reaches[b][c] {
                    reaches[a][c] = true;
                }
                if precedes[b][c] || (label.windowed && reaches[b][c]) {
                    precedes[a][c] = true;
                }
            }
            if label.windowed {
                precedes[a][b] = true;
            }
        }
    }
    StreamComponentGraph {
        components,
        component_of,
        arcs,
        internal,
        precedes,
        reaches,
    }
}

/// Ordered partition of rule indices into strata.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Stratification {
    pub strata: Vec<Vec<usize>>,
}

impl Stratification {
    /// Checks both stratification conditions against `program`: rules
    /// defining a predicate read harmlessly sit in the same or an earlier
    /// stratum; non-harmlessly, in a strictly earlier one.
    pub fn is_valid_for(&self, program: &Program) -> bool {
        let mut stratum_of = vec![usize::MAX; program.len()];
        for (s, rules) in self.strata.iter().enumerate() {
            for &r in rules {
                if r >= program.len() || stratum_of[r] != usize::MAX {
                    return false;
                }
                stratum_of[r] = s;
            }
        }
        if stratum_of.contains(&usize::MAX) {
            return false;
        }
        let mut defining: HashMap<Pred, Vec<usize>> = HashMap::new();
        for (i, r) in program.rules.iter().enumerate() {
            defining.entry(r.head.predicate()).or_default().push(i);
        }
        for (i, rule) in program.rules.iter().enumerate() {
            let s = stratum_of[i];
            for (p, label) in rule_dependencies(rule) {
                for &d in defining.get(&p).map(Vec::as_slice).unwrap_or(&[]) {
                    let ok = if label.non_harmless {
                        stratum_of[d] < s
                    } else {
                        stratum_of[d] <= s
                    };
                    if !ok {
                        return false;
                    }
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("program is not stratified: cycle through a non-harmless dependency: {}", display_cycle(.cycle))]
pub struct NotStratifiedError {
    pub cycle: Vec<Pred>,
}

fn display_cycle(cycle: &[Pred]) -> String {
    let mut s = String::new();
    for (i, p) in cycle.iter().enumerate() {
        if i > 0 {
            s.push_str(" -> ");
        }
        let _ = write!(s, "{p}");
    }
    if let Some(first) = cycle.first() {
        let _ = write!(s, " -> {first}");
    }
    s
}

/// Accepts the program iff no dependency cycle contains a non-harmless arc,
/// and returns the stratification that places each rule as low as possible.
pub fn check_stratifiable(program: &Program) -> Result<Stratification, NotStratifiedError> {
    let sdg = build_sdg(program);
    let scg = build_scg(&sdg);
    for ((p, q), label) in &sdg.arcs {
        if label.non_harmless && scg.component_of[p] == scg.component_of[q] {
            return Err(NotStratifiedError {
                cycle: cycle_through(&sdg, &scg, *p, *q),
            });
        }
    }
    // level(C) = max over incoming arcs of level(B) + [non-harmless]
    let mut level = vec![0usize; scg.len()];
    for ((a, b), label) in &scg.arcs {
        // arcs are visited by source in topological order
        let candidate = level[*a] + usize::from(label.non_harmless);
        if candidate > level[*b] {
            level[*b] = candidate;
        }
    }
    // BTreeMap range order is by source, which is topological; a second
    // pass is not needed because every arc's source level is final when
    // visited.
    let mut by_level: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, rule) in program.rules.iter().enumerate() {
        let c = scg.component_of[&rule.head.predicate()];
        by_level.entry(level[c]).or_default().push(i);
    }
    Ok(Stratification {
        strata: by_level.into_values().collect(),
    })
}

/// A cycle `p -> q -> ... -> p` inside one component.
fn cycle_through(sdg: &StreamDependencyGraph, scg: &StreamComponentGraph, p: Pred, q: Pred) -> Vec<Pred> {
    if p == q {
        return vec![p];
    }
    let comp = scg.component_of[&p];
    let mut parent: HashMap<Pred, Pred> = HashMap::new();
    let mut queue = VecDeque::from([q]);
    while let Some(x) = queue.pop_front() {
        if x == p {
            break;
        }
        for (y, _) in sdg.successors(x) {
            if scg.component_of[&y] == comp && y != q && !parent.contains_key(&y) {
                parent.insert(y, x);
                queue.push_back(y);
            }
        }
    }
    let mut path = vec![p];
    let mut cur = p;
    while let Some(&prev) = parent.get(&cur) {
        path.push(prev);
        cur = prev;
    }
    path.reverse();
    // path runs q ... p; rotate so the cycle starts at p
    let mut cycle = vec![p];
    cycle.extend(path.into_iter().filter(|x| *x != p));
    cycle
}

/// Deterministic ordering of the component graph: no later component
/// precedes an earlier one. Among the components that may come next, one
/// that can join the currently open macro-node is preferred, then the one
/// with the smallest predicate.
pub fn order_components(scg: &StreamComponentGraph) -> Vec<usize> {
    let mut open: Vec<usize> = Vec::new();
    order_components_with(scg, |scg, order, candidates| {
        // track the macro-node that the order built so far would end with
        if let Some(&last) = order.last() {
            if open.iter().all(|&m| !scg.precedes(m, last)) {
                open.push(last);
            } else {
                open = vec![last];
            }
        }
        let mut best = 0;
        for (i, &c) in candidates.iter().enumerate() {
            let joins = |x: usize| open.iter().all(|&m| !scg.precedes(m, x));
            let better = match (joins(c), joins(candidates[best])) {
                (true, false) => true,
                (false, true) => false,
                _ => scg.key(c) < scg.key(candidates[best]),
            };
            if better {
                best = i;
            }
        }
        best
    })
}

/// Builds an ordering by repeatedly letting `choose` pick among the
/// components whose `≺`-predecessors are all placed. A component that would
/// close the open macro-node is offered only once every component the open
/// macro-node depends on is placed. `choose` receives the graph, the order
/// so far and the candidates, and returns an index into the candidates.
pub fn order_components_with(
    scg: &StreamComponentGraph,
    mut choose: impl FnMut(&StreamComponentGraph, &[usize], &[usize]) -> usize,
) -> Vec<usize> {
    let n = scg.len();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut open: Vec<usize> = Vec::new();
    while order.len() < n {
        let closed = open.iter().all(|&m| (0..n).all(|b| placed[b] || !scg.reaches(b, m)));
        let candidates: Vec<usize> = (0..n)
            .filter(|&c| !placed[c])
            .filter(|&c| (0..n).all(|b| placed[b] || b == c || !scg.precedes(b, c)))
            .filter(|&c| closed || joins(scg, &open, c))
            .collect();
        let pick = candidates[choose(scg, &order, &candidates).min(candidates.len() - 1)];
        if !joins(scg, &open, pick) {
            open.clear();
        }
        open.push(pick);
        placed[pick] = true;
        order.push(pick);
    }
    order
}

/// `c` is alongside every member of `group`.
fn joins(scg: &StreamComponentGraph, group: &[usize], c: usize) -> bool {
    group.iter().all(|&m| !scg.precedes(m, c) && !scg.precedes(c, m))
}

/// Maximal runs of mutually alongside components.
fn group_ordering(scg: &StreamComponentGraph, ordering: &[usize]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &c in ordering {
        match groups.last_mut() {
            Some(g) if joins(scg, g, c) => g.push(c),
            _ => groups.push(vec![c]),
        }
    }
    groups
}

/// No later component precedes an earlier one, and no macro-node depends
/// on a later macro-node.
pub fn is_valid_ordering(scg: &StreamComponentGraph, order: &[usize]) -> bool {
    let mut seen = vec![false; scg.len()];
    for &c in order {
        if c >= scg.len() || seen[c] {
            return false;
        }
        seen[c] = true;
    }
    if seen.iter().any(|s| !s) {
        return false;
    }
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            if scg.precedes(order[j], order[i]) {
                return false;
            }
        }
    }
    let groups = group_ordering(scg, order);
    for (i, g) in groups.iter().enumerate() {
        for later in &groups[i + 1..] {
            if later.iter().any(|&b| g.iter().any(|&a| scg.reaches(b, a))) {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MacroNode {
    /// Components in ordering position.
    pub components: Vec<usize>,
    pub preds: BTreeSet<Pred>,
    /// Indices of the rules whose head predicate belongs to this macro-node.
    pub rules: Vec<usize>,
    /// The subset of `rules` that is streaming-recursive.
    pub recursive_rules: Vec<usize>,
}

impl MacroNode {
    pub fn is_recursive(&self) -> bool {
        !self.recursive_rules.is_empty()
    }
}

/// Program splitting: macro-nodes in processing order, their subprograms,
/// and a stratification for the reference semantics.
#[derive(Clone, Debug)]
pub struct SplitPlan {
    pub sdg: StreamDependencyGraph,
    pub scg: StreamComponentGraph,
    pub ordering: Vec<usize>,
    pub macro_nodes: Vec<MacroNode>,
    pub stratification: Stratification,
}

/// Groups maximal runs of mutually alongside components into macro-nodes
/// and assigns rules to them by head predicate.
pub fn build_split_plan(
    program: &Program,
    sdg: StreamDependencyGraph,
    scg: StreamComponentGraph,
    ordering: Vec<usize>,
) -> Result<SplitPlan, NotStratifiedError> {
    let stratification = check_stratifiable(program)?;
    let groups = group_ordering(&scg, &ordering);
    let mut macro_of: HashMap<usize, usize> = HashMap::new();
    for (m, g) in groups.iter().enumerate() {
        for &c in g {
            macro_of.insert(c, m);
        }
    }
    let mut macro_nodes: Vec<MacroNode> = groups
        .iter()
        .map(|g| MacroNode {
            components: g.clone(),
            preds: g.iter().flat_map(|&c| scg.components[c].iter().copied()).collect(),
            rules: Vec::new(),
            recursive_rules: Vec::new(),
        })
        .collect();
    for (i, rule) in program.rules.iter().enumerate() {
        let head = rule.head.predicate();
        let comp = scg.component_of[&head];
        let node = &mut macro_nodes[macro_of[&comp]];
        node.rules.push(i);
        let recursive = scg.is_streaming_recursive(comp)
            && rule_dependencies(rule)
                .iter()
                .any(|(p, _)| scg.component_of.get(p) == Some(&comp));
        if recursive {
            node.recursive_rules.push(i);
        }
    }
    Ok(SplitPlan {
        sdg,
        scg,
        ordering,
        macro_nodes,
        stratification,
    })
}

/// Full analysis with the deterministic ordering.
pub fn plan(program: &Program) -> Result<SplitPlan, NotStratifiedError> {
    let sdg = build_sdg(program);
    let scg = build_scg(&sdg);
    let ordering = order_components(&scg);
    build_split_plan(program, sdg, scg, ordering)
}

impl SplitPlan {
    /// Line-oriented dump of the graphs and the split.
    pub fn describe(&self, program: &Program) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# stream dependency graph");
        for p in &self.sdg.nodes {
            let _ = writeln!(s, "node {p}");
        }
        for ((p, q), l) in &self.sdg.arcs {
            let _ = writeln!(s, "arc {p} -> {q}{}", label_suffix(*l));
        }
        let _ = writeln!(s, "# stream component graph");
        for (i, c) in self.scg.components.iter().enumerate() {
            let _ = writeln!(
                s,
                "component C{i} = {{{}}}{}",
                join(c),
                if self.scg.is_streaming_recursive(i) {
                    " recursive"
                } else {
                    ""
                }
            );
        }
        for ((a, b), l) in &self.scg.arcs {
            let _ = writeln!(s, "arc C{a} -> C{b}{}", label_suffix(*l));
        }
        let _ = writeln!(
            s,
            "ordering {}",
            self.ordering
                .iter()
                .map(|c| format!("C{c}"))
                .collect::<Vec<_>>()
                .join(" ")
        );
        let _ = writeln!(s, "# subprograms");
        for (i, m) in self.macro_nodes.iter().enumerate() {
            let preds: Vec<Pred> = m.preds.iter().copied().collect();
            let _ = writeln!(s, "macro M{i} = {{{}}}", join(&preds));
            for &r in &m.rules {
                let flag = if m.recursive_rules.contains(&r) {
                    "  % streaming-recursive"
                } else {
                    ""
                };
                let _ = writeln!(s, "  r{r}: {}{flag}", program.rules[r]);
            }
        }
        let _ = writeln!(s, "# stratification");
        for (i, st) in self.stratification.strata.iter().enumerate() {
            let _ = writeln!(
                s,
                "stratum {i}: {}",
                st.iter().map(|r| format!("r{r}")).collect::<Vec<_>>().join(" ")
            );
        }
        s
    }

    /// Both graphs in Graphviz DOT syntax.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph sdg {\n");
        for p in &self.sdg.nodes {
            let _ = writeln!(s, "  \"{p}\";");
        }
        for ((p, q), l) in &self.sdg.arcs {
            let _ = writeln!(s, "  \"{p}\" -> \"{q}\"{};", dot_label(*l));
        }
        s.push_str("}\ndigraph scg {\n");
        for (i, c) in self.scg.components.iter().enumerate() {
            let _ = writeln!(s, "  C{i} [label=\"{{{}}}\"];", join(c));
        }
        for ((a, b), l) in &self.scg.arcs {
            let _ = writeln!(s, "  C{a} -> C{b}{};", dot_label(*l));
        }
        s.push_str("}\n");
        s
    }
}

fn join(preds: &[Pred]) -> String {
    preds.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join(",")
}

fn label_suffix(l: ArcLabel) -> &'static str {
    match (l.windowed, l.non_harmless) {
        (true, true) => " [<, non-harmless]",
        (true, false) => " [<]",
        (false, true) => " [non-harmless]",
        (false, false) => "",
    }
}

fn dot_label(l: ArcLabel) -> &'static str {
    if l.windowed {
        " [label=\"<\"]"
    } else {
        ""
    }
}
