//! Validate a Gauss–Markov model and compare the empirical state covariance
//! of a long trajectory against the Lyapunov solution.

use nrdf::gauss_source::{simulate, stationary_state_cov, validate_model};
use nrdf::StateSpaceModel;

fn main() -> nrdf::Result<()> {
    let model = StateSpaceModel::from_json_str(
        r#"{"A": [[0.8, 0.2], [0.0, 0.5]], "B": [[1.0], [0.5]],
            "C": [[1.0, 0.0], [0.0, 1.0]], "G": [[0.3, 0.0], [0.0, 0.3]]}"#,
    )?;
    let diags = validate_model(&model);
    println!("diagnostics: {}", if diags.is_empty() { "none".to_string() } else { format!("{diags:?}") });

    let pi = stationary_state_cov(&model)?;
    let traj = simulate(&model, 200_000, 7)?;
    let mut emp = nalgebra::DMatrix::<f64>::zeros(2, 2);
    for x in traj.states.iter().skip(1000) {
        emp += x * x.transpose();
    }
    emp /= (traj.len() - 1000) as f64;
    println!("stationary covariance:{pi}");
    println!("empirical covariance:{emp}");

    // an unobservable unstable mode is caught by the PBH test
    let bad = StateSpaceModel::from_row_slices(2, 1, 1, &[1.1, 0.0, 0.0, 0.5], &[1.0, 1.0], &[0.0, 1.0], &[1.0]);
    for d in validate_model(&bad) {
        println!("rejected: {d}");
    }
    Ok(())
}
