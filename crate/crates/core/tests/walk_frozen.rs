//! Gap values frozen from independent runs (dense full spectra where they fit, Krylov
//! otherwise) and, where one was recognized, the matching closed form.

use momentlab::tensor::krylov::EigOptions;
use momentlab::tensor::SolverChoice;
use momentlab::walk::checks::brickwork_conversion_check;
use momentlab::walk::{hamiltonian_report, spectral_gap, WalkContext, WalkKind, WalkSpec};

const TOL: f64 = 1e-9;

fn gap(kind: WalkKind, n: usize, t: usize, solver: SolverChoice) -> f64 {
    let spec = WalkSpec::new(kind, n, t).unwrap();
    let mut ctx = WalkContext::for_spec(&spec, 9).unwrap();
    let opts = EigOptions::default().with_solver(solver).with_dense_cap(1 << 12);
    let report = spectral_gap(&spec, &mut ctx, &opts).unwrap();
    assert!(report.fixed_space_verified, "{kind} n={n} t={t}");
    report.g_value
}

#[test]
fn local_walk_three_qubits_second_moment() {
    let ctx = WalkContext::new(3, 2, 9).unwrap();
    let h = hamiltonian_report(&ctx, &EigOptions::default().with_solver(SolverChoice::Dense).with_dense_cap(1 << 12)).unwrap();
    assert!((h.gap - 1.2).abs() <= TOL, "{}", h.gap);
    assert!(h.frustration_free());
    for solver in [SolverChoice::Dense, SolverChoice::Krylov] {
        let g = gap(WalkKind::Local, 3, 2, solver);
        assert!((g - 0.6).abs() <= TOL, "{solver:?}: {g}");
    }
}

#[test]
fn local_walk_four_qubits_second_moment() {
    // g = 1/2 + sqrt(2)/5 and Δ = n (1 - g)
    let g_exact = 0.5 + 2f64.sqrt() / 5.0;
    let ctx = WalkContext::new(4, 2, 9).unwrap();
    let h = hamiltonian_report(&ctx, &EigOptions::default()).unwrap();
    assert!((h.gap - 0.868629150101521).abs() <= TOL, "{}", h.gap);
    assert!((h.gap - 4.0 * (1.0 - g_exact)).abs() <= TOL);
    let g = gap(WalkKind::Local, 4, 2, SolverChoice::Krylov);
    assert!((g - 0.782842712474620).abs() <= TOL, "{g}");
    assert!((g - g_exact).abs() <= TOL);
}

#[test]
fn brickwork_walks_four_qubits() {
    let g = gap(WalkKind::Brickwork, 4, 2, SolverChoice::Krylov);
    assert!((g - 0.32).abs() <= TOL, "{g}");
    let g = gap(WalkKind::CliffordBrickwork, 4, 2, SolverChoice::Krylov);
    assert!((g - 0.32).abs() <= TOL, "{g}");
    // first moments are mixed exactly by one layer pair
    let g = gap(WalkKind::Brickwork, 4, 1, SolverChoice::Dense);
    assert!(g.abs() <= TOL, "{g}");
}

#[test]
fn brickwork_gap_respects_detectability_conversion() {
    let mut ctx = WalkContext::new(4, 2, 9).unwrap();
    let check = brickwork_conversion_check(&mut ctx, &EigOptions::default()).unwrap();
    assert!(check.holds, "g = {} vs bound {}", check.g_brickwork, check.bound);
    assert!((check.g_brickwork - 0.32).abs() <= TOL);
}
