use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use sdgscope_bench::fixture;
use sdgscope_core::burst::top_bursts;
use sdgscope_core::cooccur::{self, build_network, ClusterParams};
use sdgscope_core::corpus::build_citation_graph;
use sdgscope_core::interlink::sdg_cocitation_matrix;
use sdgscope_core::BurstParams;
use sdgscope_core::YearRange;

fn network(c: &mut Criterion) {
    let mut group = c.benchmark_group("cooccur");
    for n in [1_000, 10_000] {
        let f = fixture(n);
        group.bench_with_input(BenchmarkId::new("build_network", n), &f, |b, f| {
            b.iter(|| build_network(black_box(&f.set), &f.corpus, 5).unwrap())
        });
        let net = build_network(&f.set, &f.corpus, 5).unwrap();
        group.bench_with_input(BenchmarkId::new("cluster", n), &net, |b, net| {
            b.iter(|| cooccur::cluster(black_box(net), &ClusterParams::default()))
        });
    }
    group.finish();
}

fn bursts(c: &mut Criterion) {
    let f = fixture(10_000);
    let net = build_network(&f.set, &f.corpus, 5).unwrap();
    let terms = net.terms().to_vec();
    let years = YearRange::new(2000, 2017).unwrap();
    c.bench_function("burst/top_bursts_10k", |b| {
        b.iter(|| top_bursts(black_box(&f.set), &f.corpus, &terms, years, 60, &BurstParams::default()).unwrap())
    });
}

fn interlink(c: &mut Criterion) {
    let f = fixture(10_000);
    let graph = build_citation_graph(&f.corpus);
    c.bench_function("interlink/cocitation_10k", |b| {
        b.iter(|| sdg_cocitation_matrix(black_box(&f.assignments), &f.corpus, &graph, &f.set))
    });
}

criterion_group!(benches, network, bursts, interlink);
criterion_main!(benches);
