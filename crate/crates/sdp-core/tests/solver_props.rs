//! Property tests: solver soundness against an independent eigenvalue
//! routine, and Jacobi eigendecomposition against nalgebra's solver.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use sdp_core::{solve, sym_eig, SdpBlock, SdpProblem, SolveOptions, SolveStatus};

fn sym_matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-3.0f64..3.0, n * n).prop_map(move |v| {
        let raw = DMatrix::from_vec(n, n, v);
        0.5 * (&raw + raw.transpose())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobi_matches_lapack_style_eigenvalues(m in sym_matrix(5)) {
        let (vals, vecs) = sym_eig(&m).unwrap();
        // Reconstruction and orthonormality.
        let recon = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        prop_assert!((&recon - &m).norm() <= 1e-10 * m.norm().max(1.0));
        let gram = vecs.transpose() * &vecs;
        prop_assert!((gram - DMatrix::<f64>::identity(5, 5)).norm() <= 1e-10);
        // Independent oracle: nalgebra's symmetric eigenvalue solver.
        let mut reference = m.clone().symmetric_eigen().eigenvalues.as_slice().to_vec();
        reference.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in vals.iter().zip(reference.iter()) {
            prop_assert!((a - b).abs() <= 1e-9 * m.norm().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn optimal_solves_are_feasible_under_independent_recheck(
        f0 in sym_matrix(3),
        c in -2.0f64..2.0,
    ) {
        // minimize c*y s.t. f0 + y I >= 0 and [20 - y, 0; 0, 20 + y] >= 0.
        // Always feasible: entries of f0 lie in [-3, 3], so lambda_min(f0)
        // is at least -9 and the box [max(0, -lambda_min), 20] is nonempty.
        let b1 = SdpBlock::new(f0, vec![DMatrix::identity(3, 3)]).unwrap();
        let b2 = SdpBlock::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![20.0, 20.0])),
            vec![DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0]))],
        )
        .unwrap();
        let problem = SdpProblem::new(DVector::from_vec(vec![c]), vec![b1, b2]).unwrap();
        let opts = SolveOptions::default();
        let sol = solve(&problem, &opts).unwrap();
        prop_assert!(sol.status == SolveStatus::Optimal, "status {:?}", sol.status);
        for block in problem.blocks() {
            let evaluated = block.eval(&sol.y);
            let min = evaluated
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            prop_assert!(min >= -opts.feas_tol, "block min eig {min}");
        }
    }

    #[test]
    fn solutions_are_bitwise_deterministic(f0 in sym_matrix(3)) {
        let mk = || {
            let b = SdpBlock::new(f0.clone(), vec![DMatrix::identity(3, 3)]).unwrap();
            SdpProblem::new(DVector::from_vec(vec![1.0]), vec![b]).unwrap()
        };
        let a = solve(&mk(), &SolveOptions::default()).unwrap();
        let b = solve(&mk(), &SolveOptions::default()).unwrap();
        prop_assert_eq!(a.y[0].to_bits(), b.y[0].to_bits());
        prop_assert_eq!(a.iterations, b.iterations);
    }
}

#[test]
fn dump_load_round_trip_multi_block() {
    let b1 = SdpBlock::new(
        DMatrix::from_row_slice(2, 2, &[0.25, -1.5e-7, -1.5e-7, 3.0]),
        vec![
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        ],
    )
    .unwrap();
    let b2 = SdpBlock::new(
        DMatrix::from_row_slice(1, 1, &[std::f64::consts::PI]),
        vec![
            DMatrix::from_row_slice(1, 1, &[1e-300]),
            DMatrix::from_row_slice(1, 1, &[-7.25]),
        ],
    )
    .unwrap();
    let p = SdpProblem::new(DVector::from_vec(vec![1.0, 0.01]), vec![b1, b2]).unwrap();
    let mut buf = Vec::new();
    p.write_text(&mut buf).unwrap();
    let q = SdpProblem::read_text(buf.as_slice()).unwrap();
    assert_eq!(p.objective(), q.objective());
    for (a, b) in p.blocks().iter().zip(q.blocks()) {
        assert_eq!(a.f0(), b.f0(), "f0 must round-trip bit-exactly");
        for i in 0..p.num_vars() {
            assert_eq!(a.coeff(i), b.coeff(i));
        }
    }
}
