use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use momentlab::bounds::bound_sheet;
use momentlab::clifford::synth::synthesize_unitary;
use momentlab::clifford::tableau::sample_clifford;
use momentlab::coupling::{coupled_step_with, Correction, StepDraw};
use momentlab::haar::{haar_span, sample_haar};
use momentlab::tensor::dense::eigh;
use momentlab::tensor::krylov::{hermitian_eigs, EigOptions};
use momentlab::tensor::vector::random_vector;
use momentlab::tensor::SolverChoice;
use momentlab::walk::{moment_operator, WalkContext, WalkKind, WalkSpec};
use momentlab::{ComplexMatrix, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn walk_apply(c: &mut Criterion) {
    let spec = WalkSpec::new(WalkKind::Local, 4, 2).unwrap();
    let mut ctx = WalkContext::for_spec(&spec, 1).unwrap();
    let op = moment_operator(&spec, &mut ctx).unwrap();
    let x = random_vector(op.dim(), &mut ChaCha8Rng::seed_from_u64(1));
    let mut y = vec![C64::new(0.0, 0.0); op.dim()];
    c.bench_function("local walk apply n=4 t=2", |b| b.iter(|| op.apply(black_box(&x), &mut y)));
}

fn eigensolvers(c: &mut Criterion) {
    let h = ComplexMatrix::random_hermitian(256, &mut ChaCha8Rng::seed_from_u64(2));
    c.bench_function("dense eigh 256", |b| b.iter(|| eigh(black_box(&h), false).unwrap()));

    let spec = WalkSpec::new(WalkKind::Local, 3, 2).unwrap();
    let mut ctx = WalkContext::for_spec(&spec, 1).unwrap();
    let op = moment_operator(&spec, &mut ctx).unwrap();
    let opts = EigOptions::largest(1).deflating(ctx.fixed_space(&spec).unwrap()).with_solver(SolverChoice::Krylov);
    let mut group = c.benchmark_group("krylov");
    group.sample_size(10);
    group.bench_function("deflated top eigenvalue n=3 t=2", |b| b.iter(|| hermitian_eigs(op.as_ref(), &opts).unwrap()));
    group.finish();
}

fn clifford(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    c.bench_function("sample tableau n=16", |b| b.iter(|| sample_clifford(16, &mut rng).unwrap()));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    c.bench_function("synthesize unitary n=4", |b| {
        b.iter_batched(|| sample_clifford(4, &mut rng).unwrap(), |t| synthesize_unitary(&t).unwrap(), BatchSize::SmallInput)
    });
}

fn haar(c: &mut Criterion) {
    c.bench_function("haar span d=4 t=3", |b| b.iter(|| haar_span(black_box(4), 3).unwrap()));
}

fn coupling(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = sample_haar(8, &mut rng);
    let y = sample_haar(8, &mut rng);
    c.bench_function("coupled step n=3", |b| {
        b.iter_batched(
            || StepDraw::sample(3, &mut rng).unwrap(),
            |draw| coupled_step_with(&x, &y, &draw, Correction::Optimal).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn bounds(c: &mut Criterion) {
    let ns: Vec<u32> = (2..=64).collect();
    let ts: Vec<u64> = (0..=20).map(|k| 1 << k).collect();
    c.bench_function("bound sheet 63x21", |b| b.iter(|| bound_sheet(&ns, &ts, 1e-2).unwrap()));
}

criterion_group!(benches, walk_apply, eigensolvers, clifford, haar, coupling, bounds);
criterion_main!(benches);
