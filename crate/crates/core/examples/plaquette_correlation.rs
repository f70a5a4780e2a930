//! Connected correlation of plaquettes separated along the time axis and
//! the exponential fit for the correlation length. At strong coupling the
//! signal drops like `w1^{4x}`, so only the first separations are resolved.
//!
//!     cargo run --release --example plaquette_correlation -- 1.5

use lattice_gauge::observables::{mass_gap_fit, plaquette_correlation, CorrelationMeasurer};
use lattice_gauge::{Algorithm, Configuration, GroupId, LatticeShape, Sampler, SamplerParams};

fn main() -> lattice_gauge::Result<()> {
    let beta: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1.5);
    let shape = LatticeShape::periodic(&[4, 4, 4, 8])?;
    let separations = [0, 1, 2, 3, 4];
    let measurer = CorrelationMeasurer::new(&shape, 3, &separations)?;
    let params = SamplerParams::new(beta, Algorithm::OverrelaxMix, 5).with_or_ratio(3);
    let sampler = Sampler::new(params, 1)?;

    let mut cfg = Configuration::cold_start(&shape, GroupId::SU2);
    sampler.run_chain(&mut cfg, 0..200, 0, |_, _, _| Ok(()))?;
    let mut samples = Vec::new();
    sampler.run_chain(&mut cfg, 200..4200, 1, |_, c, _| {
        samples.push(measurer.measure(c));
        Ok(())
    })?;

    let table = plaquette_correlation(&samples, &separations, None)?;
    for (x, f) in table.separations.iter().zip(&table.values) {
        println!("f({x}) = {:+.3e} +- {:.1e}", f.value, f.error);
    }
    match mass_gap_fit(&table, 1) {
        Ok(fit) => println!(
            "xi = {:.3} +- {:.3} over {}",
            fit.value("xi").unwrap(),
            fit.error("xi").unwrap(),
            fit.window
        ),
        Err(e) => println!("no correlation length: {e}"),
    }
    Ok(())
}
