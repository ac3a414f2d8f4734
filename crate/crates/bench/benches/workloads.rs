use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use sreason_cli::gen::{self, Fault, Workload};
use sreason_core::engine::{Engine, EngineConfig, Mode};
use sreason_core::lang::{load_program, parse_facts};
use sreason_core::oracle::StreamingOracle;

fn engine(w: &Workload, mode: Mode) -> Engine {
    let program = load_program(&w.program).unwrap();
    let bg = w
        .background
        .as_deref()
        .map(|b| parse_facts(b).unwrap())
        .unwrap_or_default();
    let cfg = EngineConfig {
        mode,
        ..EngineConfig::default()
    };
    Engine::init(&program, &bg, cfg).unwrap()
}

fn run_all(mut e: Engine, w: &Workload) -> usize {
    w.stream
        .iter()
        .map(|t| e.on_tick(t.iter().cloned()).unwrap().atoms.len())
        .sum()
}

fn modes(c: &mut Criterion, group: &str, w: &Workload) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    for (name, mode) in [("incremental", Mode::Incremental), ("scratch", Mode::Scratch)] {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter_batched(|| engine(w, mode), |e| run_all(e, w), BatchSize::LargeInput)
        });
    }
    g.finish();
}

fn heavy_join(c: &mut Criterion) {
    for w in [2, 20] {
        let wl = gen::heavy_join(w, 100, 30, 1).unwrap();
        modes(c, &format!("heavy_join_w{w}"), &wl);
    }
}

fn pvs(c: &mut Criterion) {
    let faults: Vec<Fault> = ["0:3,1:3,2:3,3:3,4:3,5:3,6:3@8-22", "3:0,3:1,3:2,3:4,3:5,3:6@18-34"]
        .iter()
        .map(|f| f.parse().unwrap())
        .collect();
    for n in [5, 8, 12] {
        let wl = gen::pvs(
            n,
            n,
            60,
            &faults
                .iter()
                .filter(|f| f.panels.iter().all(|&(r, c)| r < n && c < n))
                .cloned()
                .collect::<Vec<_>>(),
            1,
        )
        .unwrap();
        modes(c, &format!("pvs_{n}x{n}"), &wl);
    }
}

fn caching(c: &mut Criterion) {
    let wl = gen::caching(200, 60, 10, 1).unwrap();
    modes(c, "caching_200", &wl);
}

fn oracle(c: &mut Criterion) {
    let wl = gen::pvs(5, 5, 30, &[], 1).unwrap();
    let program = load_program(&wl.program).unwrap();
    let bg = parse_facts(wl.background.as_deref().unwrap()).unwrap();
    let mut g = c.benchmark_group("pvs_5x5_reference");
    g.sample_size(10);
    g.bench_function("oracle", |b| {
        b.iter(|| {
            let mut o = StreamingOracle::new(&program, &bg).unwrap();
            wl.stream
                .iter()
                .map(|t| o.step(t.iter().cloned()).unwrap().len())
                .sum::<usize>()
        })
    });
    g.bench_function("engine", |b| {
        b.iter_batched(
            || engine(&wl, Mode::Incremental),
            |e| run_all(e, &wl),
            BatchSize::LargeInput,
        )
    });
    g.finish();
}

criterion_group!(benches, heavy_join, pvs, caching, oracle);
criterion_main!(benches);
