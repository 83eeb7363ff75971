use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use netschem::metrics::{ged_anytime, ged_exact, netlist_to_graph, CircuitGraph, NodeLabel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(rng: &mut ChaCha8Rng, components: usize, nets: usize) -> CircuitGraph {
    const LETTERS: [char; 6] = ['R', 'C', 'L', 'V', 'D', 'Q'];
    let mut g = CircuitGraph::default();
    for _ in 0..components {
        g.add_node(NodeLabel::Component(LETTERS[rng.gen_range(0..LETTERS.len())]));
    }
    for _ in 0..nets {
        g.add_node(NodeLabel::Net);
    }
    for c in 0..components {
        for _ in 0..2 {
            g.add_edge(c, components + rng.gen_range(0..nets));
        }
    }
    g
}

fn exact(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("ged_exact");
    for n in [4usize, 6, 8] {
        let a = random_graph(&mut rng, n / 2, n - n / 2);
        let b = random_graph(&mut rng, n / 2, n - n / 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &(a, b), |bench, (a, b)| {
            bench.iter(|| ged_exact(black_box(a), black_box(b)).unwrap())
        });
    }
    group.finish();
}

fn anytime(c: &mut Criterion) {
    let graphs: Vec<CircuitGraph> = netschem_bench::netlists().iter().map(|(_, n)| netlist_to_graph(n)).collect();
    let mut group = c.benchmark_group("ged_anytime");
    group.sample_size(10);
    group.bench_function("fixture_self_pairs", |bench| {
        bench.iter(|| graphs.iter().map(|g| ged_anytime(g, g, 1.0).ged).sum::<u64>())
    });
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = random_graph(&mut rng, 8, 6);
    let b = random_graph(&mut rng, 8, 6);
    group.bench_function("random_14_nodes_50ms", |bench| bench.iter(|| ged_anytime(&a, &b, 0.05)));
    group.finish();
}

criterion_group!(benches, exact, anytime);
criterion_main!(benches);
