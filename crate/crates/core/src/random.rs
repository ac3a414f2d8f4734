//! Seeded random programs and streams for differential testing.
//!
//! Programs are drawn as text and kept only if they load, are safe and are
//! stratifiable. Values are small integers, so arithmetic never fails.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::analysis::check_stratifiable;
use crate::lang::{check_safety, load_program, GroundAtom, Pred, Program, Value};

#[derive(Clone, Debug)]
pub struct ProgramParams {
    pub max_rules: usize,
    pub preds: usize,
    pub max_arity: usize,
    /// Largest window offset.
    pub max_offset: u32,
    /// Constants are drawn from `1..=domain`.
    pub domain: i64,
    pub p_window: f64,
    pub p_negation: f64,
    pub p_temp: f64,
    pub p_count: f64,
    pub p_builtin: f64,
    pub p_aggregate: f64,
}

impl Default for ProgramParams {
    fn default() -> ProgramParams {
        ProgramParams {
            max_rules: 8,
            preds: 6,
            max_arity: 2,
            max_offset: 4,
            domain: 3,
            p_window: 0.5,
            p_negation: 0.35,
            p_temp: 0.2,
            p_count: 0.15,
            p_builtin: 0.2,
            p_aggregate: 0.08,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StreamParams {
    pub ticks: usize,
    pub max_atoms: usize,
    pub domain: i64,
}

impl Default for StreamParams {
    fn default() -> StreamParams {
        StreamParams {
            ticks: 15,
            max_atoms: 20,
            domain: 3,
        }
    }
}

/// A generated program with its source text and predicate signature.
#[derive(Clone, Debug)]
pub struct RandomProgram {
    pub text: String,
    pub program: Program,
    pub preds: Vec<Pred>,
}

const VARS: [&str; 3] = ["X", "Y", "Z"];

struct RuleGen<'a, R> {
    rng: &'a mut R,
    params: &'a ProgramParams,
    preds: &'a [Pred],
    bound: Vec<String>,
    fresh: usize,
}

impl<R: Rng> RuleGen<'_, R> {
    fn constant(&mut self) -> String {
        self.rng.gen_range(1..=self.params.domain).to_string()
    }

    fn window(&mut self) -> String {
        let max = self.params.max_offset;
        if self.rng.gen_bool(0.75) {
            format!("[{}]", self.rng.gen_range(1..=max))
        } else {
            let mut offs: Vec<u32> = (0..=max).filter(|_| self.rng.gen_bool(0.5)).collect();
            if offs.is_empty() {
                offs.push(self.rng.gen_range(0..=max));
            }
            let s: Vec<String> = offs.iter().map(u32::to_string).collect();
            format!("{{{}}}", s.join(","))
        }
    }

    /// Positive literal; binds its variables.
    fn positive(&mut self) -> String {
        let pred = *self.preds.choose(self.rng).unwrap();
        let mut terms = Vec::new();
        for _ in 0..pred.arity {
            if self.rng.gen_bool(0.15) {
                terms.push(self.constant());
            } else {
                let v = VARS.choose(self.rng).unwrap().to_string();
                terms.push(v);
            }
        }
        let atom = atom_text(pred, &terms);
        let mut vars: Vec<String> = terms.iter().filter(|t| is_var(t)).cloned().collect();
        let lit = if self.rng.gen_bool(self.params.p_count) {
            let n = format!("N{}", self.fresh);
            self.fresh += 1;
            vars.push(n.clone());
            format!("{atom} count {n} in {}", self.window())
        } else if self.rng.gen_bool(self.params.p_window) {
            let w = self.window();
            match self.rng.gen_range(0..3) {
                0 => format!("{atom} in {w}"),
                1 => format!("{atom} at least {} in {w}", self.rng.gen_range(1..=3)),
                _ => format!("{atom} always in {w}"),
            }
        } else {
            atom
        };
        for v in vars {
            if !self.bound.contains(&v) {
                self.bound.push(v);
            }
        }
        lit
    }

    fn bound_term(&mut self) -> String {
        if self.bound.is_empty() || self.rng.gen_bool(0.2) {
            self.constant()
        } else {
            self.bound.choose(self.rng).unwrap().clone()
        }
    }

    fn negative(&mut self) -> String {
        let pred = *self.preds.choose(self.rng).unwrap();
        let terms: Vec<String> = (0..pred.arity).map(|_| self.bound_term()).collect();
        let atom = atom_text(pred, &terms);
        if !self.rng.gen_bool(self.params.p_window) {
            return format!("not {atom}");
        }
        let w = self.window();
        match self.rng.gen_range(0..5) {
            0 => format!("not {atom} in {w}"),
            1 => format!("not {atom} always in {w}"),
            2 => format!("not {atom} at least {} in {w}", self.rng.gen_range(1..=3)),
            3 => format!("{atom} at most {} in {w}", self.rng.gen_range(0..=2)),
            _ => format!("not {atom} count {} in {w}", self.rng.gen_range(1..=3)),
        }
    }

    fn builtin(&mut self) -> String {
        if !self.bound.is_empty() && self.rng.gen_bool(0.3) {
            let x = self.bound.choose(self.rng).unwrap().clone();
            let v = format!("V{}", self.fresh);
            self.fresh += 1;
            let lim = self.params.domain + 1;
            self.bound.push(v.clone());
            return format!("{v} = {x} + 1, {v} <= {lim}");
        }
        let op = ["!=", "<", "<=", ">=", "=", ">"].choose(self.rng).unwrap();
        let a = self.bound_term();
        let b = self.bound_term();
        format!("{a} {op} {b}")
    }

    fn aggregate(&mut self) -> Option<String> {
        let unary: Vec<Pred> = self.preds.iter().copied().filter(|p| p.arity >= 1).collect();
        let pred = *unary.choose(self.rng)?;
        let mut terms = vec!["A".to_owned()];
        for _ in 1..pred.arity {
            terms.push(self.bound_term());
        }
        let func = if self.rng.gen_bool(0.5) { "#count" } else { "#sum" };
        let op = ["=", ">=", "<", "!="].choose(self.rng).unwrap();
        Some(format!(
            "{func}{{A : {}}} {op} {}",
            atom_text(pred, &terms),
            self.rng.gen_range(0..=3)
        ))
    }

    fn head(&mut self, pred: Pred) -> String {
        let terms: Vec<String> = (0..pred.arity).map(|_| self.bound_term()).collect();
        atom_text(pred, &terms)
    }
}

fn is_var(t: &str) -> bool {
    t.starts_with(|c: char| c.is_ascii_uppercase())
}

fn atom_text(pred: Pred, terms: &[String]) -> String {
    if terms.is_empty() {
        pred.name.as_str().to_owned()
    } else {
        format!("{}({})", pred.name, terms.join(","))
    }
}

fn rule_text<R: Rng>(rng: &mut R, params: &ProgramParams, preds: &[Pred]) -> String {
    let mut g = RuleGen {
        rng,
        params,
        preds,
        bound: Vec::new(),
        fresh: 0,
    };
    let mut body = Vec::new();
    for _ in 0..g.rng.gen_range(1..=2) {
        body.push(g.positive());
    }
    if g.rng.gen_bool(params.p_negation) {
        body.push(g.negative());
    }
    if g.rng.gen_bool(params.p_builtin) {
        body.push(g.builtin());
    }
    if g.rng.gen_bool(params.p_aggregate) {
        if let Some(a) = g.aggregate() {
            body.push(a);
        }
    }
    let head_pred = *preds.choose(g.rng).unwrap();
    let head = g.head(head_pred);
    let temp = if g.rng.gen_bool(params.p_temp) { "#temp " } else { "" };
    format!("{temp}{head} :- {}.", body.join(", "))
}

pub fn random_preds<R: Rng>(rng: &mut R, params: &ProgramParams) -> Vec<Pred> {
    (0..params.preds)
        .map(|i| Pred::new(&format!("p{i}"), rng.gen_range(0..=params.max_arity)))
        .collect()
}

/// Draws programs until one is safe and stratifiable.
pub fn random_program<R: Rng>(rng: &mut R, params: &ProgramParams) -> RandomProgram {
    loop {
        let preds = random_preds(rng, params);
        let n = rng.gen_range(1..=params.max_rules);
        let mut text = String::new();
        for _ in 0..n {
            writeln!(text, "{}", rule_text(rng, params, &preds)).unwrap();
        }
        let Ok(program) = load_program(&text) else { continue };
        if check_safety(&program).is_err() || check_stratifiable(&program).is_err() {
            continue;
        }
        return RandomProgram { text, program, preds };
    }
}

pub fn random_tick<R: Rng>(rng: &mut R, preds: &[Pred], params: &StreamParams) -> Vec<GroundAtom> {
    let k = rng.gen_range(0..=params.max_atoms);
    let mut out: Vec<GroundAtom> = (0..k)
        .map(|_| {
            let p = *preds.choose(rng).unwrap();
            let args = (0..p.arity)
                .map(|_| Value::Int(rng.gen_range(1..=params.domain)))
                .collect();
            GroundAtom { pred: p.name, args }
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

pub fn random_stream<R: Rng>(rng: &mut R, preds: &[Pred], params: &StreamParams) -> Vec<Vec<GroundAtom>> {
    (0..params.ticks).map(|_| random_tick(rng, preds, params)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn seeded_and_valid() {
        let p = ProgramParams::default();
        let a = random_program(&mut ChaCha8Rng::seed_from_u64(7), &p);
        let b = random_program(&mut ChaCha8Rng::seed_from_u64(7), &p);
        assert_eq!(a.text, b.text);
        for seed in 0..200 {
            let r = random_program(&mut ChaCha8Rng::seed_from_u64(seed), &p);
            assert!(r.program.len() <= 8);
            assert!(r.program.predicates().len() <= 6);
            assert!(r
                .program
                .rules
                .iter()
                .flat_map(|r| r.streaming_literals())
                .all(|l| l.window.max() <= 4));
        }
    }

    #[test]
    fn features_appear() {
        let p = ProgramParams::default();
        let texts: String = (0..300)
            .map(|s| random_program(&mut ChaCha8Rng::seed_from_u64(s), &p).text)
            .collect();
        for needle in ["not ", "#temp", "count N", "always", "at most", "#sum", "#count", "+ 1"] {
            assert!(texts.contains(needle), "{needle}");
        }
    }

    #[test]
    fn stream_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let preds = random_preds(&mut rng, &ProgramParams::default());
        let s = random_stream(&mut rng, &preds, &StreamParams::default());
        assert_eq!(s.len(), 15);
        assert!(s.iter().all(|t| t.len() <= 20));
    }
}
