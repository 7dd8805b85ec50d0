use criterion::{black_box, criterion_group, criterion_main, Criterion};
use sk_core::algebra_k::parse_kmono;
use sk_core::duality::{verify_co_tr_identity, verify_tr_co_identity};
use sk_core::examples::{transformer_da, whitehead_dd};
use sk_core::kdual::parse_dual;
use sk_core::perturbation::trace_action;
use sk_core::structures::{check_dd, check_kda};
use sk_core::{DualMono, Idem, KMono};

fn trace(c: &mut Criterion) {
    let a: Vec<KMono> = vec![parse_kmono("U", Some(Idem::I0)).unwrap(), KMono::Z, KMono::SIGMA];
    let b: Vec<DualMono> = vec![parse_dual("z.s.th", None).unwrap()];
    c.bench_function("trace m(U, Z, σ; zsθ)", |bn| bn.iter(|| trace_action(black_box(&a), black_box(&b))));
    let t5 = vec![parse_kmono("T^5", None).unwrap()];
    let phi5 = vec![parse_dual("f+", None).unwrap(); 5];
    c.bench_function("trace m(T^5; φ₊^5)", |bn| bn.iter(|| trace_action(black_box(&t5), black_box(&phi5))));
}

fn duality(c: &mut Criterion) {
    let mut g = c.benchmark_group("duality");
    g.sample_size(10);
    g.bench_function("Tr ⊠ Co = id (2, 2)", |bn| bn.iter(|| verify_tr_co_identity(2, 2)));
    g.bench_function("Co ⊠ Tr = id (2, 2)", |bn| bn.iter(|| verify_co_tr_identity(2, 2)));
    g.finish();
}

fn structures(c: &mut Criterion) {
    let mut g = c.benchmark_group("structures");
    g.sample_size(10);
    let dd = whitehead_dd();
    g.bench_function("Whitehead DD relation", |bn| bn.iter(|| check_dd(black_box(&dd))));
    let t = transformer_da();
    g.bench_function("transformer DA relation (2, 2)", |bn| bn.iter(|| check_kda(&t, 2, 2)));
    g.finish();
}

criterion_group!(benches, trace, duality, structures);
criterion_main!(benches);
