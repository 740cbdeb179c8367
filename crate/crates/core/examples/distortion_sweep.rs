//! Design-and-simulate sweep over a distortion grid, written as CSV.

use std::sync::atomic::AtomicBool;

use nrdf::sim::{sweep, write_sweep_csv, SweepConfig};
use nrdf::StateSpaceModel;

fn main() -> std::io::Result<()> {
    let model = StateSpaceModel::scalar(0.8, 1.0, 1.0, 0.7);
    let cfg = SweepConfig {
        q: 0.5,
        steps: 200_000,
        base_seed: 11,
        ..SweepConfig::default()
    };
    let rows = sweep(&model, &[0.2, 0.4, 0.8, 5.0], &cfg, &AtomicBool::new(false));
    write_sweep_csv(std::io::stdout().lock(), &rows, cfg.q, false)
}
