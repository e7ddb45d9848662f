use momentlab::bounds::{self, lambert_bound_check, lambert_w_minus1, reduction_inequality_check, reduction_length};
use momentlab::clifford::moments::{clifford_projector, projector_difference_spectrum, sample_clifford_unitary, ProjectorMethod};
use momentlab::clifford::synth::{conjugation_mismatch, equal_up_to_phase, synthesize_unitary};
use momentlab::clifford::tableau::{sample_clifford, CliffordTableau};
use momentlab::coupling::{coupled_step_with, replica_check, Correction, StepDraw};
use momentlab::haar::{
    apply_moment, frame_operator, frame_spectrum, haar_projector, moment_matrix, qubit_haar_span, sample_haar, to_copy_major,
};
use momentlab::tensor::dense::{eigh, polar_unitary, psd_check};
use momentlab::tensor::krylov::{hermitian_eigs, EigOptions};
use momentlab::tensor::layout::{devectorize, partial_trace, unravel, vectorize};
use momentlab::tensor::{densify, kron_lift, DenseOperator, LocalOperator, SolverChoice};
use momentlab::verify::{self, CommandKind, RunConfig};
use momentlab::walk::{moment_operator, WalkContext, WalkKind, WalkSpec};
use momentlab::{ComplexMatrix, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const REDUCTION_CROSSOVER: u64 = 1352;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

fn re_tr_adj(v: &ComplexMatrix, a: &ComplexMatrix) -> f64 {
    v.adjoint().matmul(a).trace().re
}

proptest! {
    #![proptest_config(config())]

    // entrywise oracle: (L on sites s, s+1 mod n)[J, I] = L[(j_s j_s+1), (i_s i_s+1)] times deltas elsewhere
    #[test]
    fn kron_lift_matches_entrywise_embedding(d in 2usize..=3, n in 3usize..=4, site_pick in 0usize..4, seed in any::<u64>()) {
        let site = site_pick % n;
        let dims = vec![d; n];
        let local = ComplexMatrix::ginibre(d * d, d * d, &mut rng(seed));
        let lift = kron_lift(LocalOperator::Dense(local.clone()), site, &dims).unwrap();
        let dense = densify(&lift);
        let total = d.pow(n as u32);
        let next = (site + 1) % n;
        let mut worst = 0.0f64;
        for row in 0..total {
            let j = unravel(row, &dims);
            for col in 0..total {
                let i = unravel(col, &dims);
                let spectators = (0..n).filter(|&q| q != site && q != next).all(|q| i[q] == j[q]);
                let expect = if spectators { local[(j[site] * d + j[next], i[site] * d + i[next])] } else { C64::new(0.0, 0.0) };
                worst = worst.max((dense[(row, col)] - expect).norm());
            }
        }
        prop_assert!(worst <= 1e-12, "max deviation {worst}");
    }

    #[test]
    fn partial_trace_preserves_trace_and_positivity(a in 2usize..=3, b in 2usize..=3, c in 1usize..=2, mask in 1u8..7, seed in any::<u64>()) {
        let dims = [a, b, c];
        let total = a * b * c;
        let g = ComplexMatrix::ginibre(total, total, &mut rng(seed));
        let rho = g.matmul(&g.adjoint());
        let keep: Vec<usize> = (0..3).filter(|q| mask & (1 << q) != 0).collect();
        let reduced = partial_trace(&rho, &keep, &dims).unwrap();
        let kept_dim: usize = keep.iter().map(|&q| dims[q]).product();
        prop_assert_eq!(reduced.rows(), kept_dim);
        let scale = rho.trace().re;
        prop_assert!((reduced.trace() - rho.trace()).norm() <= 1e-10 * scale);
        prop_assert!(reduced.hermitian_deviation() <= 1e-10 * scale);
        prop_assert!(psd_check(&reduced, 1e-9 * scale).unwrap().psd);
    }

    #[test]
    fn vectorization_is_an_isometry(d in 1usize..=9, seed in any::<u64>()) {
        let a = ComplexMatrix::ginibre(d, d, &mut rng(seed));
        let v = vectorize(&a).unwrap();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((norm - a.frobenius_norm()).abs() <= 1e-12 * (1.0 + norm));
        prop_assert!(devectorize(&v).unwrap().max_abs_diff(&a) == 0.0);
    }

    #[test]
    fn krylov_matches_dense_extremes(dim in 20usize..=90, seed in any::<u64>()) {
        let h = ComplexMatrix::random_hermitian(dim, &mut rng(seed));
        let (vals, _) = eigh(&h, false).unwrap();
        let op = DenseOperator::new(h).unwrap();
        let krylov = |opts: EigOptions| hermitian_eigs(&op, &opts.with_solver(SolverChoice::Krylov).with_seed(seed)).unwrap().values;
        let top = krylov(EigOptions::largest(2));
        let bottom = krylov(EigOptions::smallest(1));
        let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!((top[0] - vals[dim - 1]).abs() <= 1e-8 * scale);
        prop_assert!((top[1] - vals[dim - 2]).abs() <= 1e-8 * scale);
        prop_assert!((bottom[0] - vals[0]).abs() <= 1e-8 * scale);
    }

    #[test]
    fn polar_unitary_maximizes_overlap(d in 1usize..=6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = ComplexMatrix::ginibre(d, d, &mut r);
        let polar = polar_unitary(&a).unwrap();
        prop_assert!(polar.unitary.is_unitary(1e-10));
        let best = re_tr_adj(&polar.unitary, &a);
        let nuclear: f64 = polar.singular_values.iter().sum();
        prop_assert!((best - nuclear).abs() <= 1e-10 * (1.0 + nuclear));
        for _ in 0..16 {
            let v = sample_haar(d, &mut r);
            prop_assert!(re_tr_adj(&v, &a) <= best + 1e-10);
        }
        prop_assert!(re_tr_adj(&ComplexMatrix::identity(d), &a) <= best + 1e-10);
    }

    #[test]
    fn haar_projector_absorbs_haar_moments(d in 2usize..=3, t in 1usize..=2, seed in any::<u64>()) {
        let p = haar_projector(d, t).unwrap().matrix;
        let m = moment_matrix(&sample_haar(d, &mut rng(seed)), t);
        prop_assert!(m.matmul(&p).max_abs_diff(&p) <= 1e-10);
        prop_assert!(p.matmul(&m).max_abs_diff(&p) <= 1e-10);
    }

    #[test]
    fn tableau_composition_is_a_homomorphism(n in 1usize..=3, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = sample_clifford(n, &mut r).unwrap();
        let b = sample_clifford(n, &mut r).unwrap();
        let ua = synthesize_unitary(&a).unwrap();
        let ub = synthesize_unitary(&b).unwrap();
        prop_assert!(conjugation_mismatch(&a, &ua) <= 1e-10);
        let uab = synthesize_unitary(&a.compose(&b).unwrap()).unwrap();
        prop_assert!(equal_up_to_phase(&uab, &ua.matmul(&ub), 1e-10));
        let round = a.compose(&a.inverse()).unwrap();
        prop_assert_eq!(round, CliffordTableau::identity(n));
        prop_assert_eq!(CliffordTableau::from_bytes(&a.to_bytes()).unwrap(), a);
    }

    // V = 1 is one of the candidates the polar step optimizes over, so every draw obeys it
    #[test]
    fn optimal_correction_never_loses_to_identity(n in 1usize..=3, seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = 1 << n;
        let x = sample_haar(d, &mut r);
        let y = sample_haar(d, &mut r);
        let draw = StepDraw::sample(n, &mut r).unwrap();
        let dist = |(p, q): (ComplexMatrix, ComplexMatrix)| (&p - &q).frobenius_norm();
        let opt = dist(coupled_step_with(&x, &y, &draw, Correction::Optimal).unwrap());
        let id = dist(coupled_step_with(&x, &y, &draw, Correction::Identity).unwrap());
        prop_assert!(opt <= id + 1e-10, "optimal {opt} > identity {id}");
        let before = (&x - &y).frobenius_norm();
        prop_assert!(opt <= before + 1e-10);
    }

    #[test]
    fn replica_trick_reproduces_trace_of_square(d in 1usize..=8, seed in any::<u64>()) {
        let a = ComplexMatrix::ginibre(d, d, &mut rng(seed));
        let check = replica_check(&a).unwrap();
        prop_assert!(check.deviation <= 1e-10 * (1.0 + check.direct.norm()));
    }

    #[test]
    fn reduction_length_satisfies_inequality(t in 1u64..(1 << 40)) {
        let len = reduction_length(t).unwrap();
        prop_assert!(reduction_inequality_check(len.improved, t).unwrap().holds);
        prop_assert!(reduction_inequality_check(len.legacy, t).unwrap().holds);
    }

    // crossover located by an independent float sweep over 1..=2^20 and frozen
    #[test]
    fn improved_length_is_shorter_past_crossover(t in REDUCTION_CROSSOVER..(1 << 40)) {
        let len = reduction_length(t).unwrap();
        prop_assert!(len.improved < len.legacy, "t={t}: {} vs {}", len.improved, len.legacy);
    }

    #[test]
    fn lambert_branch_inverts_and_obeys_bound(x in 1e-3f64..50.0) {
        let arg = -(-x - 1.0).exp();
        let w = lambert_w_minus1(arg).unwrap();
        prop_assert!(w <= -1.0);
        prop_assert!((w * w.exp() - arg).abs() <= 1e-12 * arg.abs().max(1e-300));
        prop_assert!(lambert_bound_check(x).unwrap().holds);
    }

    #[test]
    fn gap_bounds_are_self_consistent(n in 1u32..=64, t in 1u64..=1 << 20) {
        let gb = bounds::gap_bounds(n, t).unwrap();
        prop_assert!(gb.consistent);
        // g rounds to 1.0 in f64 from n = 11 on; the gap itself stays positive
        prop_assert!(gb.unconditional_delta > 0.0 && gb.unconditional_g <= 1.0 && gb.unconditional_g > 0.0);
        prop_assert!(gb.legacy_delta > 0.0 && gb.legacy_g <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn frame_spectrum_routes_agree(d in 2usize..=4, t in 1usize..=2) {
        let s = frame_operator(d, t).unwrap();
        let (vals, _) = eigh(&s, false).unwrap();
        let mut dense: Vec<f64> = vals.into_iter().filter(|v| *v > 1e-9).collect();
        dense.reverse();
        let fast = frame_spectrum(d, t).unwrap();
        prop_assert_eq!(dense.len(), fast.len());
        for (a, b) in dense.iter().zip(&fast) {
            prop_assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn identical_configs_give_identical_reports(seed in any::<u64>(), n in 2usize..=3) {
        let mut cfg = RunConfig::new(CommandKind::Coupling);
        (cfg.n, cfg.samples, cfg.seed) = (n, 40, seed);
        let a = verify::run(&cfg).unwrap().render().unwrap();
        let b = verify::run(&cfg).unwrap().render().unwrap();
        prop_assert_eq!(a, b);
        let mut cfg = RunConfig::new(CommandKind::Bounds);
        cfg.seed = seed;
        let a = verify::run(&cfg).unwrap().render().unwrap();
        let b = verify::run(&cfg).unwrap().render().unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn crossover_is_tight() {
    let len = reduction_length(REDUCTION_CROSSOVER - 1).unwrap();
    assert!(len.improved >= len.legacy);
}

#[test]
fn clifford_projector_dominates_haar() {
    for (n, t) in [(1, 1), (1, 4), (1, 5), (2, 2), (2, 3)] {
        let cl = clifford_projector(n, t, ProjectorMethod::Enumerate, &mut rng(7)).unwrap();
        let haar = qubit_haar_span(n, t).unwrap();
        let spec = projector_difference_spectrum(&cl.basis, &haar).unwrap();
        let min = spec.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-9, "n={n} t={t}: P_Cl - P_H has eigenvalue {min}");
        // a 3-design: equal ranks up to t = 3
        if t <= 3 {
            assert_eq!(cl.rank(), haar.rank(), "n={n} t={t}");
        }
    }
}

#[test]
fn clifford_moments_fix_the_clifford_range() {
    let (n, t) = (1, 5);
    let cl = clifford_projector(n, t, ProjectorMethod::Enumerate, &mut rng(3)).unwrap();
    assert!(cl.rank() > cl.haar_rank);
    let mut r = rng(11);
    for _ in 0..3 {
        let u = sample_clifford_unitary(n, &mut r).unwrap();
        for q in cl.basis.columns() {
            let x = to_copy_major(q, n, t).unwrap();
            let y = apply_moment(&u, t, &x);
            let err = x.iter().zip(&y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err <= 1e-10, "moved by {err}");
        }
    }
}

#[test]
fn moment_operators_are_contractions_with_unit_fixed_space() {
    for (kind, n, t) in [
        (WalkKind::Local, 2, 1),
        (WalkKind::Local, 3, 1),
        (WalkKind::Local, 2, 2),
        (WalkKind::Sigma, 2, 2),
        (WalkKind::Sigma, 3, 1),
    ] {
        let spec = WalkSpec::new(kind, n, t).unwrap();
        let mut ctx = WalkContext::for_spec(&spec, 5).unwrap();
        let op = moment_operator(&spec, &mut ctx).unwrap();
        let m = densify(op.as_ref());
        assert!(m.hermitian_deviation() <= 1e-12, "{kind} n={n} t={t}");
        let (vals, _) = eigh(&m, false).unwrap();
        assert!(vals[0] >= -1e-10 && vals[vals.len() - 1] <= 1.0 + 1e-10, "{kind} n={n} t={t}: {vals:?}");
        let ones = vals.iter().filter(|v| (*v - 1.0).abs() <= 1e-9).count();
        assert_eq!(ones, ctx.fixed_space(&spec).unwrap().rank(), "{kind} n={n} t={t}");
    }
}
