//! Finite-alphabet rate curves: a binary source at horizon 0 (the classical
//! curve) and a two-stage binary Markov source.

use nrdf::discrete::{hamming, solve_nrdf, FiniteSource, SolverConfig};

fn main() -> nrdf::Result<()> {
    let cfg = SolverConfig::default();
    let src = FiniteSource::binary_hamming(0.5);
    println!("D,rate_nats,ln2-Hb(D),s");
    for i in 1..=9 {
        let d = 0.05 * i as f64;
        let sol = solve_nrdf(&src, d, &cfg)?;
        let hb = -(d * d.ln() + (1.0 - d) * (1.0 - d).ln());
        println!("{d:.2},{:.9},{:.9},{:.6}", sol.rate_nats, 2f64.ln() - hb, sol.s);
    }

    let markov = FiniteSource::new(
        vec![2, 2],
        vec![2, 2],
        vec![vec![vec![0.5, 0.5]], vec![vec![0.9, 0.1], vec![0.1, 0.9]]],
        vec![hamming(2), hamming(2)],
    )?;
    println!("\nMarkov source, 2 stages");
    for d in [0.05, 0.1, 0.2, 0.3] {
        let sol = solve_nrdf(&markov, d, &cfg)?;
        println!(
            "D = {d}: total {:.6} nats, per stage {:.6}, Markov-in-X violation {:.1e}",
            sol.rate_nats,
            sol.rate_per_stage(),
            sol.kernels.markov_violation(&markov)
        );
    }
    Ok(())
}
