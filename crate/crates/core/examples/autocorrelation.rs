//! Integrated autocorrelation time and binned jackknife errors on an AR(1)
//! series with known `tau_int = (1 + phi) / (2 (1 - phi))`.
//!
//!     cargo run --example autocorrelation -- 0.8

use lattice_gauge::stats::{jackknife_mean, tau_int};
use lattice_gauge::RandomStream;

fn main() -> lattice_gauge::Result<()> {
    let phi: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.8);
    let mut rng = RandomStream::new([42, 0], [0, 0]);
    let noise = (1.0 - phi * phi).sqrt();
    let mut x = 0.0;
    let series: Vec<f64> = (0..200_000)
        .map(|_| {
            x = phi * x + noise * rng.normal();
            x
        })
        .collect();

    let t = tau_int(&series);
    println!(
        "tau_int {:.3} (exact {:.3}), window {}",
        t.tau,
        (1.0 + phi) / (2.0 * (1.0 - phi)),
        t.window
    );
    println!("bin\tmean\t\terror");
    for bin in [1, 2, 5, 10, 20, 50, 100] {
        let j = jackknife_mean(&series, bin)?;
        println!("{bin}\t{:+.5}\t{:.5}", j.value, j.error);
    }
    println!("expected plateau {:.5}", (2.0 * t.tau / series.len() as f64).sqrt());
    Ok(())
}
