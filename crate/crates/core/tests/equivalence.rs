//! Engine output against the reference streaming models on random programs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sreason_core::engine::{Engine, EngineConfig, EngineError, Mode};
use sreason_core::ground::GroundError;
use sreason_core::oracle::{OracleError, StreamingOracle};
use sreason_core::random::{random_program, random_stream, ProgramParams, StreamParams};

/// Runs one seeded case; returns a description of the first divergence.
fn check_seed(seed: u64, mode: Mode) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rp = random_program(&mut rng, &ProgramParams::default());
    let stream = random_stream(&mut rng, &rp.preds, &StreamParams::default());
    let cfg = EngineConfig {
        mode,
        ..EngineConfig::default()
    };
    let mut engine = Engine::init(&rp.program, &[], cfg).map_err(|e| format!("init: {e}\n{}", rp.text))?;
    let mut oracle = StreamingOracle::new(&rp.program, &[]).unwrap();
    for (n, tick) in stream.iter().enumerate() {
        let want = oracle.step(tick.iter().cloned());
        let got = engine.on_tick(tick.iter().cloned());
        match (got, want) {
            (Ok(g), Ok(w)) => {
                let g = g.atoms.to_set();
                if g != w {
                    let extra: Vec<_> = g.difference(&w).map(ToString::to_string).collect();
                    let missing: Vec<_> = w.difference(&g).map(ToString::to_string).collect();
                    return Err(format!(
                        "seed {seed} tick {n}: extra {extra:?} missing {missing:?}\n{}",
                        rp.text
                    ));
                }
            }
            (Err(EngineError::Ground(GroundError::Eval { .. })), Err(OracleError::Eval { .. })) => return Ok(()),
            (g, w) => {
                return Err(format!(
                    "seed {seed} tick {n}: engine {:?} oracle {:?}\n{}",
                    g.err(),
                    w.err(),
                    rp.text
                ))
            }
        }
    }
    Ok(())
}

#[test]
fn random_programs_incremental() {
    let failures: Vec<String> = (0..1000)
        .filter_map(|s| check_seed(s, Mode::Incremental).err())
        .collect();
    assert!(
        failures.is_empty(),
        "{} failures, first:\n{}",
        failures.len(),
        failures[0]
    );
}

#[test]
fn random_programs_scratch() {
    let failures: Vec<String> = (1000..1200)
        .filter_map(|s| check_seed(s, Mode::Scratch).err())
        .collect();
    assert!(
        failures.is_empty(),
        "{} failures, first:\n{}",
        failures.len(),
        failures[0]
    );
}
