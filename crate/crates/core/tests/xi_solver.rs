use kquant::{check_stieltjes_solvable, hankel_matrices, moment_residuals, solve_xi, xi_moments, ScalingDistribution};

#[test]
fn published_example_solution_satisfies_moment_system() {
    let atoms = [4.8651, 9.6827, 24.519, 130.90];
    let weights = [0.41166, 0.56810, 0.020241, 1.4709e-6];
    let m = xi_moments(7, 49).unwrap();
    let res = moment_residuals(&m, &atoms, &weights);
    assert_eq!(res.len(), 7);
    let worst = res.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    assert!(worst <= 5e-3, "{res:?}");
}

#[test]
fn solved_example_is_exact_to_tolerance() {
    let d = solve_xi(7, 49).unwrap();
    assert_eq!(d.atoms.len(), 4);
    assert!(d.moment_residual <= 1e-8);
    let res = moment_residuals(&xi_moments(7, 49).unwrap(), &d.atoms, &d.weights);
    assert!(res.iter().all(|r| r.abs() <= 1e-8), "{res:?}");
    assert!(d.atoms.iter().all(|&z| z > 0.0));
    assert!(d.atoms.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn hankel_pairs_are_positive_definite_over_the_grid() {
    for k in (3..=15).step_by(2) {
        for ratio in 2..=10 {
            let pair = hankel_matrices(&xi_moments(k, k * ratio).unwrap());
            let c = check_stieltjes_solvable(&pair);
            assert!(c.solvable, "k={k} n={} {c:?}", k * ratio);
        }
    }
}

#[test]
fn solutions_over_a_grid_survive_json() {
    for (k, ratio) in [(3, 2), (5, 4), (9, 81), (11, 3)] {
        let d = solve_xi(k, k * ratio).unwrap();
        assert!(d.moment_residual <= 1e-8, "k={k}");
        let back = ScalingDistribution::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(back, d);
    }
}

#[test]
fn even_and_non_dividing_parameters_are_rejected() {
    assert!(solve_xi(4, 16).is_err());
    assert!(solve_xi(7, 50).is_err());
    assert!(xi_moments(1, 5).is_err());
}
