//! End-to-end runs of the global solver, the verifier and the local shoot on
//! small problems.

use ricci_tube::certificates::{check_global, check_local};
use ricci_tube::geometry::{eval_h1, eval_h2};
use ricci_tube::problem::{tightest_envelope, OrbitData, ProblemData, SmoothProfile};
use ricci_tube::solver::{
    fixed_point_solve, local_shoot, verify, FixedPointOptions, Grid, Provenance,
};
use ricci_tube::structure::HomogeneousStructure;
use ricci_tube::Error;

fn torus(sigma: f64) -> ProblemData {
    ProblemData::new(
        HomogeneousStructure::abelian(2).unwrap(),
        sigma,
        vec![SmoothProfile::Constant(1.0); 2],
        vec![1.0; 2],
        vec![1.0; 2],
        false,
    )
    .unwrap()
}

fn solve(p: &ProblemData, nodes: usize) -> ricci_tube::solver::MetricSolution {
    let env = tightest_envelope(p, 1.0).unwrap();
    let cert = check_global(p, &env).unwrap();
    let g = Grid::new(nodes, p.sigma).unwrap();
    fixed_point_solve(p, &cert, &g, &FixedPointOptions::default()).unwrap()
}

#[test]
fn torus_global_solution_verifies() {
    let p = torus(0.05);
    let sol = solve(&p, 2001);
    let rep = verify(&sol, &p).unwrap();
    eprintln!("{rep:?} {:?}", sol.provenance);
    assert!(rep.sigma_bar_defect <= 1e-6, "{rep:?}");
    assert!(rep.orbit_defect <= 1e-6, "{rep:?}");
    assert_eq!(sol.f_at(0), &[1.0, 1.0]);
    assert_eq!(sol.f_at(2000), &[1.0, 1.0]);
    let head = eval_h1(sol.f_at(0), sol.fp_at(0), &p.structure).unwrap()
        - sol.h[0] * sol.h[0] * eval_h2(sol.f_at(0), &[1.0, 1.0], &p.structure).unwrap();
    assert!(head.abs() <= 1e-10, "{head}");
}

#[test]
fn global_and_local_solutions_coincide() {
    let p = torus(0.05);
    let sol = solve(&p, 2001);
    let (f0, fp0, h0) = (sol.f_at(0).to_vec(), sol.fp_at(0).to_vec(), sol.h[0]);
    // δ^a = −f′(0)/h(0), so δ_k = −a_k f′_k(0)/h(0)
    let delta: Vec<f64> = f0.iter().zip(&fp0).map(|(a, d)| -a * d / h0).collect();
    let od = OrbitData::new(0.0, f0, delta).unwrap();
    let g = Grid::new(2001, p.sigma).unwrap();
    let loc = local_shoot(&od, &p, &g, 0.5).unwrap();
    let mut worst = 0.0_f64;
    for (j, r) in loc.r.iter().enumerate() {
        assert_eq!(*r, sol.r[j]);
        for i in 0..2 {
            worst = worst.max((loc.f_at(j)[i] - sol.f_at(j)[i]).abs());
        }
        worst = worst.max((loc.h[j] - sol.h[j]).abs());
    }
    assert!(worst <= 1e-6, "{worst}");
    let Provenance::LocalShoot { h_at_tau, lhs, .. } = loc.provenance else {
        panic!()
    };
    assert!((-1.0 / (h_at_tau * h_at_tau) - lhs).abs() <= 1e-8);
    assert_eq!(check_local(&od, &p).unwrap().1, lhs);
}

#[test]
fn refinement_improves_residual() {
    let p = torus(0.05);
    let coarse = verify(&solve(&p, 2001), &p).unwrap();
    let fine = verify(&solve(&p, 4001), &p).unwrap();
    eprintln!("{} {}", coarse.worst(), fine.worst());
    assert!(fine.worst() <= coarse.worst() || fine.worst() <= 1e-9);
}

#[test]
fn solver_is_deterministic() {
    let p = torus(0.05);
    let a = solve(&p, 401);
    let b = solve(&p, 401);
    assert_eq!(a, b);
}

#[test]
fn single_iteration_cap_reports_no_convergence() {
    let p = torus(0.05);
    let env = tightest_envelope(&p, 1.0).unwrap();
    let cert = check_global(&p, &env).unwrap();
    let g = Grid::new(201, p.sigma).unwrap();
    let opts = FixedPointOptions {
        max_iter: 1,
        ..FixedPointOptions::default()
    };
    assert!(matches!(
        fixed_point_solve(&p, &cert, &g, &opts),
        Err(Error::NoConvergence { iterations: 1, .. })
    ));
}
