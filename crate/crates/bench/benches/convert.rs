use criterion::{criterion_group, criterion_main, Criterion};
use netschem::asc::{parse_asc, serialize_asc, ParseMode};
use netschem::baseline::baseline_asc;
use netschem::extract::compile_asc;
use netschem::metrics::bleu4;
use netschem::PinMapRegistry;

fn bench(c: &mut Criterion) {
    let reg = PinMapRegistry::builtin();
    let nets = netschem_bench::netlists();
    c.bench_function("baseline_all_fixtures", |bench| {
        bench.iter(|| nets.iter().map(|(_, n)| baseline_asc(n, &reg).unwrap().symbols.len()).sum::<usize>())
    });

    let texts: Vec<String> = nets.iter().map(|(_, n)| serialize_asc(&baseline_asc(n, &reg).unwrap())).collect();
    c.bench_function("parse_and_compile_all_fixtures", |bench| {
        bench.iter(|| {
            texts
                .iter()
                .map(|t| compile_asc(&parse_asc(t, ParseMode::Strict).unwrap(), &reg, ParseMode::Strict).unwrap().elements.len())
                .sum::<usize>()
        })
    });
    c.bench_function("bleu4_fixture_pairs", |bench| {
        bench.iter(|| texts.windows(2).map(|w| bleu4(&w[0], &w[1])).sum::<f64>())
    });
}

criterion_group!(benches, bench);
criterion_main!(benches);
