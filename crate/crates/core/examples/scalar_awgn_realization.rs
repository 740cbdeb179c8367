//! Steady-state encoder/decoder for an AR(1) source over an AWGN channel,
//! and the exported design JSON.

use nrdf::realization::{analytic_distortion, design_steady_state};
use nrdf::StateSpaceModel;

fn main() -> nrdf::Result<()> {
    let model = StateSpaceModel::scalar(0.9, 1.0, 1.0, 1.0);
    let design = design_steady_state(&model, 0.5, 1.0, 1e-9, 10_000)?;

    println!("innovation variance  {:.6}", design.lambda[0]);
    println!("rate                 {:.6} nats", design.rate_nats);
    println!("capacity at P={:.4}   {:.6} nats", design.p, design.channel().capacity());
    println!("analytic distortion  {:.6}", analytic_distortion(&design, &design.lambda));
    println!("filter error var     {:.6}", design.sigma[(0, 0)]);
    assert!(design.invariant_violations(&model).is_empty());

    print!("{}", design.to_json());
    Ok(())
}
