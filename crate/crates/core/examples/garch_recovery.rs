//! Simulates a GARCH(1,1) and recovers its parameters by maximum likelihood.

use hnn::baselines::{fit_garch11, simulate_garch11};

fn main() -> hnn::Result<()> {
    let (eps, _) = simulate_garch11(0.1, 0.1, 0.8, 20_000, 42);
    let start = std::time::Instant::now();
    let m = fit_garch11(&eps)?;
    println!(
        "omega = {:.4}  alpha = {:.4}  beta = {:.4}  loglik = {:.2}  ({} iterations, {:?})",
        m.omega,
        m.alpha,
        m.beta,
        m.log_likelihood,
        m.iterations,
        start.elapsed()
    );
    let next = m.forecast(&eps, 1);
    println!("one-step variance after the sample: {next:.4}");
    Ok(())
}
