//! Seeded workload generators: Heavy Join, photo-voltaic grids, content
//! caching and random programs.

use std::collections::BTreeSet;
use std::fmt::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sreason_core::random::{random_program, random_stream, ProgramParams, StreamParams};
use sreason_core::{GroundAtom, Symbol, Value};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("{0}")]
    Parameter(String),
    #[error("fault script names panel {row}:{col}, outside the {rows}x{cols} grid")]
    NoSuchPanel {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Workload {
    pub program: String,
    /// Facts injected into every tick.
    pub background: Option<String>,
    pub stream: Vec<Vec<GroundAtom>>,
}

impl Workload {
    pub fn stream_text(&self) -> String {
        stream_text(&self.stream)
    }
}

pub fn stream_text(stream: &[Vec<GroundAtom>]) -> String {
    let mut s = String::new();
    for tick in stream {
        for a in tick {
            let _ = writeln!(s, "{a}.");
        }
        s.push_str("#end.\n");
    }
    s
}

fn sym(s: &str) -> Value {
    Value::Sym(Symbol::intern(s))
}

pub fn heavy_join_program(w: u32) -> String {
    format!("a(X,Y) :- b(X,Z) in [{w}], c(Z,Y) in [{w}].\n")
}

/// `events` facts per tick, half `b` and half `c`, distinct within a tick.
/// Join keys are uniform over a key space a quarter the size of the tick.
pub fn heavy_join(w: u32, events: usize, ticks: usize, seed: u64) -> Result<Workload, GenError> {
    if w == 0 {
        return Err(GenError::Parameter("window size must be at least 1".into()));
    }
    if events < 2 {
        return Err(GenError::Parameter("at least 2 events per tick".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outer = events as i64;
    let keys = (events as i64 / 4).max(2);
    let nb = events / 2;
    let nc = events - nb;
    let mut draw = |n: usize, pred: &str, key_first: bool| {
        let mut set = BTreeSet::new();
        while set.len() < n {
            let o = rng.gen_range(1..=outer);
            let k = rng.gen_range(1..=keys);
            set.insert(if key_first { (k, o) } else { (o, k) });
        }
        set.into_iter()
            .map(|(x, y)| GroundAtom::new(pred, vec![Value::Int(x), Value::Int(y)]))
            .collect::<Vec<_>>()
    };
    let stream = (0..ticks)
        .map(|_| {
            let mut t = draw(nb, "b", false);
            t.extend(draw(nc, "c", true));
            t
        })
        .collect();
    Ok(Workload {
        program: heavy_join_program(w),
        background: None,
        stream,
    })
}

pub const PVS_PROGRAM: &str = "\
workingPanel(P) :- energyDelivered(P,W) at least 1 in [4], energyThreshold(Et), W>=Et.
reachable(cea,P2) :- link(cea,P2), workingPanel(P2).
reachable(P1,P3) :- reachable(P1,P2), link(P2,P3), workingPanel(P3).
unlinked :- workingPanel(P), not reachable(cea,P).
regularFunctioning :- unlinked at most 2 in [3].
alert :- not regularFunctioning.
callMaintenance :- alert always in [5].
";

pub const PVS_THRESHOLD: i64 = 10;

/// Panels that deliver no usable energy over an inclusive tick range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fault {
    pub panels: Vec<(usize, usize)>,
    pub from: usize,
    pub to: usize,
}

impl FromStr for Fault {
    type Err = String;

    /// `R:C[,R:C...]@FROM-TO`, e.g. `0:2,1:2@5-20`.
    fn from_str(s: &str) -> Result<Fault, String> {
        let (panels, range) = s.split_once('@').ok_or_else(|| format!("missing `@` in fault `{s}`"))?;
        let (from, to) = range
            .split_once('-')
            .ok_or_else(|| format!("missing `-` in fault range `{range}`"))?;
        let num = |x: &str| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad number `{x}` in fault `{s}`"))
        };
        let panels = panels
            .split(',')
            .map(|p| {
                let (r, c) = p.split_once(':').ok_or_else(|| format!("panel `{p}` is not R:C"))?;
                Ok((num(r)?, num(c)?))
            })
            .collect::<Result<Vec<_>, String>>()?;
        let (from, to) = (num(from)?, num(to)?);
        if from > to {
            return Err(format!("empty fault range `{range}`"));
        }
        Ok(Fault { panels, from, to })
    }
}

pub fn panel(r: usize, c: usize) -> String {
    format!("p_{r}_{c}")
}

/// Grid `link` facts (both directions between 4-neighbours, plus the
/// control unit attached to panel 0:0) and the threshold.
pub fn pvs_background(rows: usize, cols: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "energyThreshold({PVS_THRESHOLD}).");
    let _ = writeln!(s, "link(cea,{}).", panel(0, 0));
    for r in 0..rows {
        for c in 0..cols {
            if r + 1 < rows {
                let _ = writeln!(s, "link({},{}).", panel(r, c), panel(r + 1, c));
                let _ = writeln!(s, "link({},{}).", panel(r + 1, c), panel(r, c));
            }
            if c + 1 < cols {
                let _ = writeln!(s, "link({},{}).", panel(r, c), panel(r, c + 1));
                let _ = writeln!(s, "link({},{}).", panel(r, c + 1), panel(r, c));
            }
        }
    }
    s
}

/// Healthy panels deliver between the threshold and five times it; faulty
/// ones deliver 0.
pub fn pvs(rows: usize, cols: usize, ticks: usize, faults: &[Fault], seed: u64) -> Result<Workload, GenError> {
    if rows < 2 || cols < 2 {
        return Err(GenError::Parameter("grid must be at least 2x2".into()));
    }
    for f in faults {
        for &(row, col) in &f.panels {
            if row >= rows || col >= cols {
                return Err(GenError::NoSuchPanel { row, col, rows, cols });
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<Vec<Value>> = (0..rows)
        .map(|r| (0..cols).map(|c| sym(&panel(r, c))).collect())
        .collect();
    let stream = (0..ticks)
        .map(|t| {
            let mut tick = Vec::with_capacity(rows * cols);
            for (r, row) in names.iter().enumerate() {
                for (c, name) in row.iter().enumerate() {
                    let faulty = faults
                        .iter()
                        .any(|f| (f.from..=f.to).contains(&t) && f.panels.contains(&(r, c)));
                    let w = if faulty {
                        0
                    } else {
                        rng.gen_range(PVS_THRESHOLD..=5 * PVS_THRESHOLD)
                    };
                    tick.push(GroundAtom::new("energyDelivered", vec![*name, Value::Int(w)]));
                }
            }
            tick
        })
        .collect();
    Ok(Workload {
        program: PVS_PROGRAM.to_owned(),
        background: Some(pvs_background(rows, cols)),
        stream,
    })
}

/// Content caching policy: popular contents enter the cache and stay until
/// their popularity has been low throughout a shorter window.
pub fn caching_program(window: u32) -> String {
    let keep = (window / 5).max(1);
    format!(
        "\
highPop(C) :- popularity(C,L), L >= 70.
lowPop(C) :- popularity(C,L), L < 30.
cache(C) :- highPop(C) at least 3 in [{window}].
cache(C) :- cache(C) in {{1}}, not lowPop(C) always in [{keep}].
uncache(C) :- cache(C) in {{1}}, not cache(C).
#temp cached(N) :- #count{{C : cache(C)}} = N.
"
    )
}

/// One `popularity(cK,L)` fact per content per tick; levels follow a
/// bounded random walk over 0..=100.
pub fn caching(contents: usize, ticks: usize, window: u32, seed: u64) -> Result<Workload, GenError> {
    if !(1..=500).contains(&contents) {
        return Err(GenError::Parameter("contents must be within 1..=500".into()));
    }
    if window == 0 {
        return Err(GenError::Parameter("window size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<Value> = (0..contents).map(|k| sym(&format!("c{k}"))).collect();
    let mut level: Vec<i64> = (0..contents).map(|_| rng.gen_range(0..=100)).collect();
    let stream = (0..ticks)
        .map(|_| {
            names
                .iter()
                .zip(level.iter_mut())
                .map(|(name, l)| {
                    *l = (*l + rng.gen_range(-15..=15)).clamp(0, 100);
                    GroundAtom::new("popularity", vec![*name, Value::Int(*l)])
                })
                .collect()
        })
        .collect();
    Ok(Workload {
        program: caching_program(window),
        background: None,
        stream,
    })
}

/// A random safe, stratified program with a matching stream.
pub fn random(ticks: usize, seed: u64) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rp = random_program(&mut rng, &ProgramParams::default());
    let params = StreamParams {
        ticks,
        ..StreamParams::default()
    };
    let stream = random_stream(&mut rng, &rp.preds, &params);
    Workload {
        program: rp.text,
        background: None,
        stream,
    }
}
