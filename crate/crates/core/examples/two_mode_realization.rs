//! Two active modes sharing one scalar channel.
//!
//! The power split solves the total-distortion identity, but no linear
//! decoder of a single scalar symbol can reach the water-filling distortion
//! for two modes; the design is returned inside the error for inspection.

use nrdf::realization::{design_steady_state, solve_fixed_point, FixedPointConfig};
use nrdf::sim::run_chain;
use nrdf::{Error, StateSpaceModel};

fn main() -> nrdf::Result<()> {
    let model = StateSpaceModel::from_row_slices(
        2,
        2,
        2,
        &[0.0; 4],
        &[0.0; 4],
        &[1.0, 0.0, 0.0, 1.0],
        &[1.2f64.sqrt(), 0.0, 0.0, 1.0],
    );
    let (d, q) = (0.5, 0.1);
    match design_steady_state(&model, d, q, 1e-9, 10_000) {
        Ok(_) => println!("design met D exactly"),
        Err(Error::DistortionMismatch { analytic, target, design, .. }) => {
            println!("alpha = {:?}, P = {:.4}", design.alpha, design.p);
            println!("per-mode distortion {:?} vs water level {}", design.per_mode_distortion(), design.alloc.xi);
            println!("analytic {analytic:.6} vs target {target}");
            let best = design.lambda.iter().sum::<f64>() - design.lambda[0] * design.p / (design.p + q);
            println!("best any scalar linear scheme can do: {best:.6}");
            let r = run_chain(&model, &design, 1_000_000, 5, 10_000)?;
            println!("simulated {:.6} +/- {:.6}", r.empirical_distortion, r.stderr_distortion);
        }
        Err(e) => return Err(e),
    }

    // a correlated 2x2 source: the identity has no root in [0, 1]
    let model = StateSpaceModel::from_row_slices(
        2, 2, 2, &[0.5, 0.2, 0.0, 0.3], &[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, 1.0],
    );
    match solve_fixed_point(&model, 1.0, &FixedPointConfig::default()) {
        Ok(fp) => println!("converged with k = {}", fp.design.alloc.k_active()),
        Err(e) => println!("{e}"),
    }
    Ok(())
}
