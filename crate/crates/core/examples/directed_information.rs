//! Directed information of hand-built causal kernels, and its convexity
//! along a mixture of causally conditioned laws.

use nrdf::discrete::{causal_mixture, directed_information, hamming, CausalKernelFamily, FiniteSource};

fn main() -> nrdf::Result<()> {
    let src = FiniteSource::iid(2, &[0.5, 0.5], &hamming(2))?;

    // binary symmetric channel with crossover 0.1 at each stage
    let bsc = CausalKernelFamily::from_fn(&src, |_, _, xh, y| if xh % 2 == y { 0.9 } else { 0.1 });
    // stage-1 output copies the previous output, ignoring the source
    let echo = CausalKernelFamily::from_fn(&src, |i, yp, xh, y| match i {
        0 => if xh == y { 1.0 } else { 0.0 },
        _ => if yp == y { 1.0 } else { 0.0 },
    });

    let di_bsc = directed_information(&src, &bsc)?;
    let di_echo = directed_information(&src, &echo)?;
    println!("BSC(0.1) twice: {di_bsc:.6} nats (2 x (ln2 - Hb(0.1)))");
    println!("copy then echo: {di_echo:.6} nats (ln 2)");

    for theta in [0.25, 0.5, 0.75] {
        let mix = causal_mixture(&src, &bsc, &echo, theta);
        let di = directed_information(&src, &mix)?;
        let chord = theta * di_echo + (1.0 - theta) * di_bsc;
        println!("theta {theta}: I = {di:.6} <= {chord:.6}");
    }
    Ok(())
}
