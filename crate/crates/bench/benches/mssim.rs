use criterion::{criterion_group, criterion_main, Criterion};
use netschem::asc::{decode_text, parse_asc, ParseMode};
use netschem::metrics::{mssim, SsimParams};
use netschem::render::{render, RenderConfig};
use netschem::PinMapRegistry;

fn bench(c: &mut Criterion) {
    let reg = PinMapRegistry::builtin();
    let cfg = RenderConfig::default();
    let load = |name: &str| {
        let bytes = std::fs::read(netschem_bench::fixtures().join("asc").join(name)).unwrap();
        parse_asc(&decode_text(&bytes).unwrap(), ParseMode::Lenient).unwrap()
    };
    let a = load("band_pass.asc");
    let b = load("tline_match.asc");
    c.bench_function("render_band_pass", |bench| bench.iter(|| render(&a, &cfg, &reg).unwrap()));

    let (ia, ib) = (render(&a, &cfg, &reg).unwrap(), render(&b, &cfg, &reg).unwrap());
    let p = SsimParams::default();
    c.bench_function("mssim_rendered_pair", |bench| bench.iter(|| mssim(&ia, &ib, &p).unwrap()));
}

criterion_group!(benches, bench);
criterion_main!(benches);
