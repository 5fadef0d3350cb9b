//! Sequential against data-parallel execution of the hot loops.

use std::time::Duration;

use cpnunfold_core::approx::fixed_point_with_status;
use cpnunfold_core::io::text;
use cpnunfold_core::net::ColoredNet;
use cpnunfold_core::par::Exec;
use cpnunfold_core::semantics::explore;
use cpnunfold_core::unfold::{unfold_with, UnfoldOptions};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn referendum(n: u32) -> ColoredNet {
    let src = include_str!("../fixtures/referendum5.net").replace("[1,5]", &format!("[1,{n}]"));
    text::parse(&src).unwrap()
}

/// A ring of `k` places over `[0,n-1]` with a token chasing its successor.
fn ring(k: usize, n: u32) -> ColoredNet {
    let mut src = format!("domain D = [0,{}]\nvar x : D\n", n - 1);
    for i in 0..k {
        let init = if i == 0 { " = 1'(0)" } else { "" };
        src += &format!("place p{i} : D{init}\n");
    }
    for i in 0..k {
        src += &format!(
            "transition t{i} [x != {}]\narc p{i} -> t{i} : 1'(x)\narc t{i} -> p{} : 1'(x+1)\n",
            n - 1,
            (i + 1) % k
        );
    }
    text::parse(&src).unwrap()
}

fn bench_unfold(c: &mut Criterion) {
    let mut g = c.benchmark_group("unfold");
    for (id, net) in [
        ("referendum-50000", referendum(50_000)),
        ("ring-64x2000", ring(64, 2000)),
    ] {
        for (name, exec) in MODES {
            let opts = UnfoldOptions {
                exec,
                ..Default::default()
            };
            g.bench_function(BenchmarkId::new(name, id), |b| {
                b.iter(|| unfold_with(&net, &opts).unwrap())
            });
        }
    }
    g.finish();
}

fn bench_explore(c: &mut Criterion) {
    let mut g = c.benchmark_group("explore");
    let net = referendum(8);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "referendum-8"), |b| {
            b.iter(|| explore(&net, usize::MAX, exec).unwrap())
        });
    }
    g.finish();
}

fn bench_fixed_point(c: &mut Criterion) {
    let mut g = c.benchmark_group("fixed_point");
    let net = ring(64, 400);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "ring-64x400"), |b| {
            b.iter(|| fixed_point_with_status(&net, Duration::from_secs(60), exec))
        });
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_unfold, bench_explore, bench_fixed_point
}
criterion_main!(benches);
