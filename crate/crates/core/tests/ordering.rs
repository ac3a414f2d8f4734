//! Engine output is the same for every valid processing order.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sreason_core::analysis::{build_scg, build_sdg, is_valid_ordering, order_components_with};
use sreason_core::engine::{Engine, EngineConfig};
use sreason_core::random::{random_program, random_stream, ProgramParams, StreamParams};

#[test]
fn outputs_identical_across_orderings() {
    let mut multi = 0;
    let mut seed = 0u64;
    while multi < 60 {
        seed += 1;
        assert!(seed < 5000, "too few programs with several orderings");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rp = random_program(&mut rng, &ProgramParams::default());
        let scg = build_scg(&build_sdg(&rp.program));
        let orderings: BTreeSet<Vec<usize>> = (0..12)
            .map(|_| order_components_with(&scg, |_, _, c| rng.gen_range(0..c.len())))
            .collect();
        if orderings.len() < 2 {
            continue;
        }
        multi += 1;
        let stream = random_stream(
            &mut rng,
            &rp.preds,
            &StreamParams {
                ticks: 8,
                ..StreamParams::default()
            },
        );
        let mut outputs: Vec<Vec<_>> = Vec::new();
        for o in &orderings {
            assert!(is_valid_ordering(&scg, o));
            let cfg = EngineConfig {
                ordering: Some(o.clone()),
                ..EngineConfig::default()
            };
            let mut e = Engine::init(&rp.program, &[], cfg).unwrap();
            let out: Vec<_> = stream
                .iter()
                .map_while(|t| {
                    e.on_tick(t.iter().cloned())
                        .ok()
                        .map(|r| (r.atoms.to_set(), r.persisted.to_set()))
                })
                .collect();
            outputs.push(out);
        }
        for (o, out) in orderings.iter().zip(&outputs) {
            assert_eq!(out, &outputs[0], "seed {seed} ordering {o:?}\n{}", rp.text);
        }
    }
}
