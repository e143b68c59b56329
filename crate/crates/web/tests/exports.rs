use sgdlab_web::{double_well_trajectory, escape_probabilities, himmelblau_trajectory};

#[test]
fn trajectory_has_one_point_per_stride() {
    let xs = double_well_trajectory("stable", 1.5, 0.01, 0.5, 1000, 10, 1).unwrap();
    assert_eq!(xs.len(), 101);
    assert_eq!(xs[0], 0.5);
    assert!(xs.iter().all(|x| x.is_finite()));
}

#[test]
fn trajectory_is_seeded() {
    let a = double_well_trajectory("gaussian", 1.5, 0.01, 0.5, 500, 1, 9).unwrap();
    let b = double_well_trajectory("gaussian", 1.5, 0.01, 0.5, 500, 1, 9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bad_inputs_are_errors() {
    assert!(double_well_trajectory("cauchy", 1.5, 0.01, 0.5, 10, 1, 1).is_err());
    assert!(double_well_trajectory("stable", 2.5, 0.01, 0.5, 10, 1, 1).is_err());
    assert!(escape_probabilities(1.0, -1.0, 5.0, 1.0, 0, 1).is_err());
}

#[test]
fn analytic_escape_matches_table_row() {
    let v = escape_probabilities(1.0, 3.0, 5.0, 1.0, 0, 1).unwrap();
    assert!((v[1] - 2.8722).abs() < 1e-3);
    assert!((v[2] - 0.0426).abs() < 1e-3 && (v[3] - 0.9575).abs() < 1e-3);
    assert!(v[4].is_nan() && v[5].is_nan());
}

#[test]
fn simulated_escape_is_a_split() {
    let v = escape_probabilities(1.0, 1.0, 5.0, 1.0, 2000, 4).unwrap();
    assert!((v[4] + v[5] - 1.0).abs() < 1e-12);
    assert!((v[4] - 0.2857).abs() < 0.05, "{v:?}");
}

#[test]
fn himmelblau_path_is_flat_pairs() {
    let p = himmelblau_trajectory(1e-4, 1.2, 1000, 100, 2).unwrap();
    assert_eq!(p.len(), 2 * 11);
    assert!((p[0] + 0.270845).abs() < 1e-12 && (p[1] + 0.923039).abs() < 1e-12);
}
