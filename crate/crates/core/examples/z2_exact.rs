//! Heat-bath Z2 on the open 2x2 lattice against exact enumeration of all
//! 2^4 configurations.
//!
//!     cargo run --example z2_exact

use lattice_gauge::observables::plaquette_average;
use lattice_gauge::oracle::{exact_tiny_lattice, ExactObservable};
use lattice_gauge::stats::summarize;
use lattice_gauge::{Algorithm, Configuration, GroupId, LatticeShape, Sampler, SamplerParams};

fn main() -> lattice_gauge::Result<()> {
    let shape = LatticeShape::open(&[2, 2])?;
    println!("beta\texact\t\tmonte carlo");
    for beta in [0.3, 0.7, 1.5] {
        let exact = exact_tiny_lattice(GroupId::Z2, &shape, beta, &ExactObservable::PlaquetteAverage)?;

        let sampler = Sampler::new(SamplerParams::new(beta, Algorithm::Heatbath, 1), 1)?;
        let mut cfg = Configuration::cold_start(&shape, GroupId::Z2);
        let mut series = Vec::new();
        sampler.run_chain(&mut cfg, 0..200_000, 1, |s, c, _| {
            if s >= 1000 {
                series.push(plaquette_average(c));
            }
            Ok(())
        })?;
        let est = summarize(&series, None, false)?;
        println!("{beta}\t{exact:.6}\t{:.6} +- {:.6}", est.mean, est.error);
    }
    Ok(())
}
