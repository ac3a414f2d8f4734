//! Stratum application is confluent, and the outcome does not depend on the
//! stratification chosen.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sreason_core::analysis::{build_scg, build_sdg, check_stratifiable, Stratification};
use sreason_core::oracle::{final_stratum_stream, outcome_with, stratum_outcome, stratum_outcome_with, Stream};
use sreason_core::random::{random_program, random_stream, ProgramParams, StreamParams};
use sreason_core::Program;

fn small_stream(rng: &mut ChaCha8Rng, preds: &[sreason_core::Pred]) -> Stream {
    let params = StreamParams {
        ticks: rng.gen_range(1..=4),
        max_atoms: 8,
        domain: 3,
    };
    Stream::new(
        random_stream(rng, preds, &params)
            .into_iter()
            .map(|t| t.into_iter().collect())
            .collect(),
    )
}

#[test]
fn random_orders_agree() {
    let mut sampled = 0;
    let mut seed = 0u64;
    while sampled < 100 {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rp = random_program(&mut rng, &ProgramParams::default());
        let stream = small_stream(&mut rng, &rp.preds);
        let strat = check_stratifiable(&rp.program).unwrap();
        let mut before = stream.clone();
        for stratum in &strat.strata {
            let Ok(batch) = stratum_outcome(&rp.program, stratum, &before) else {
                break;
            };
            // strata deriving fewer than two atoms have only one order
            if batch.last().len() >= before.last().len() + 2 {
                sampled += 1;
                for k in 0..100u64 {
                    let mut pick = ChaCha8Rng::seed_from_u64(seed * 1000 + k);
                    let seq =
                        stratum_outcome_with(&rp.program, stratum, &before, |ts| pick.gen_range(0..ts.len())).unwrap();
                    assert_eq!(seq.last(), batch.last(), "seed {seed} order {k}\n{}", rp.text);
                }
            }
            before = batch;
        }
    }
}

/// Valid stratifications obtained by topologically sorting the components
/// at random and giving each its own stratum, then merging neighbours when
/// still valid.
fn random_stratification(program: &Program, rng: &mut ChaCha8Rng) -> Stratification {
    let scg = build_scg(&build_sdg(program));
    let n = scg.len();
    let mut order: Vec<usize> = Vec::new();
    while order.len() < n {
        let ready: Vec<usize> = (0..n)
            .filter(|c| !order.contains(c))
            .filter(|&c| (0..n).all(|b| b == c || order.contains(&b) || !scg.reaches(b, c)))
            .collect();
        order.push(ready[rng.gen_range(0..ready.len())]);
    }
    let mut strata: Vec<Vec<usize>> = Vec::new();
    for c in order {
        let rules: Vec<usize> = (0..program.len())
            .filter(|&r| scg.component_of[&program.rules[r].head.predicate()] == c)
            .collect();
        if rules.is_empty() {
            continue;
        }
        if let Some(last) = strata.last_mut() {
            if rng.gen_bool(0.5) {
                let mut merged = last.clone();
                merged.extend(&rules);
                let mut trial = strata.clone();
                *trial.last_mut().unwrap() = merged;
                if (Stratification { strata: trial.clone() }).is_valid_for_prefix(program) {
                    strata = trial;
                    continue;
                }
            }
        }
        strata.push(rules);
    }
    Stratification { strata }
}

trait PrefixValid {
    fn is_valid_for_prefix(&self, program: &Program) -> bool;
}

impl PrefixValid for Stratification {
    /// Validity over the rules placed so far.
    fn is_valid_for_prefix(&self, program: &Program) -> bool {
        let placed: BTreeSet<usize> = self.strata.iter().flatten().copied().collect();
        let sub = Program::new(placed.iter().map(|&r| program.rules[r].clone()).collect());
        let index = |r: usize| placed.iter().position(|&x| x == r).unwrap();
        Stratification {
            strata: self
                .strata
                .iter()
                .map(|s| s.iter().map(|&r| index(r)).collect())
                .collect(),
        }
        .is_valid_for(&sub)
    }
}

#[test]
fn stratification_independence() {
    let mut multi = 0;
    for seed in 0..300u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rp = random_program(&mut rng, &ProgramParams::default());
        let stream = small_stream(&mut rng, &rp.preds);
        let base = check_stratifiable(&rp.program).unwrap();
        let Ok(want) = outcome_with(&rp.program, &base, &stream) else {
            continue;
        };
        let mut seen = BTreeSet::new();
        seen.insert(base.strata.clone());
        for _ in 0..10 {
            let s = random_stratification(&rp.program, &mut rng);
            assert!(s.is_valid_for(&rp.program), "seed {seed}: {:?}\n{}", s.strata, rp.text);
            assert_eq!(
                outcome_with(&rp.program, &s, &stream).unwrap(),
                want,
                "seed {seed}\n{}",
                rp.text
            );
            seen.insert(s.strata);
        }
        if seen.len() > 1 {
            multi += 1;
        }
    }
    assert!(multi >= 50, "only {multi} programs with several stratifications");
}

#[test]
fn final_stream_keeps_history() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rp = random_program(&mut rng, &ProgramParams::default());
    let stream = small_stream(&mut rng, &rp.preds);
    let strat = check_stratifiable(&rp.program).unwrap();
    let fin = final_stratum_stream(&rp.program, &strat, &stream).unwrap();
    assert_eq!(fin.sets[..fin.n()], stream.sets[..stream.n()]);
    assert!(stream.last().is_subset(fin.last()));
}
