//! Rate–distortion curve of a two-dimensional Gauss–Markov source observed
//! in noise, with the water level and number of active modes.

use nrdf::nrdf_gauss::{rdf_curve, write_rdf_csv};
use nrdf::realization::FixedPointConfig;
use nrdf::StateSpaceModel;

fn main() -> nrdf::Result<()> {
    let model = StateSpaceModel::from_row_slices(
        2,
        2,
        2,
        &[0.9, 0.0, 0.0, 0.3],
        &[1.0, 0.0, 0.0, 1.0],
        &[1.0, 0.0, 0.0, 1.0],
        &[0.5, 0.0, 0.0, 0.5],
    );
    let grid: Vec<f64> = (1..=14).map(|i| 0.5 * i as f64).collect();
    let rows = rdf_curve(&model, &grid, &FixedPointConfig::default())?;
    write_rdf_csv(std::io::stdout().lock(), &rows, false)?;
    Ok(())
}
