use criterion::{criterion_group, criterion_main, Criterion};
use relpca::terms::{eval_closed, parse_term};
use relpca::workbench::{run, Command, Workbench};
use relpca::{Backend, Budget};
use std::hint::black_box;

fn normalize(c: &mut Criterion) {
    let b = Backend::sk(1);
    let t = parse_term(r"(\x y z. x z (y z)) (\x y. x) (\x y. x) o0").unwrap();
    c.bench_function("sk/normalize", |bn| bn.iter(|| eval_closed(&b, black_box(&t), 10_000)));
}

fn commands(c: &mut Criterion) {
    let budget = Budget::default();
    for (label, src, cmd) in [
        ("check/sk", relpca_bench::SK, Command::Check),
        ("synthesize/sk", relpca_bench::SK, Command::Synthesize),
        ("slice/nabla2", relpca_bench::NABLA2, Command::Slice),
        ("product/kk", relpca_bench::PRODUCT, Command::Product),
        ("density/qs", relpca_bench::DENSITY, Command::Density),
    ] {
        let wb = Workbench::load(src, &budget).unwrap();
        c.bench_function(label, |bn| bn.iter(|| run(cmd, &wb, &budget, false)));
    }
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = normalize, commands
}
criterion_main!(benches);
