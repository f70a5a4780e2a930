//! A lattice with one plaquette: `<Re Tr U / N>` is `tanh beta` for Z2 and a
//! ratio of Bessel functions for U(1) (`I1/I0`) and SU(2) (`I2(2b)/I1(2b)`).
//!
//!     cargo run --example single_plaquette -- 1.5

use lattice_gauge::observables::plaquette_average;
use lattice_gauge::oracle::{single_plaquette_expectation, single_plaquette_shape};
use lattice_gauge::stats::summarize;
use lattice_gauge::{Algorithm, Configuration, GroupId, Sampler, SamplerParams};

fn main() -> lattice_gauge::Result<()> {
    let beta: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1.0);
    let shape = single_plaquette_shape();
    for group in [GroupId::Z2, GroupId::U1, GroupId::SU2] {
        let exact = single_plaquette_expectation(group, beta)?;
        for algorithm in [Algorithm::Metropolis, Algorithm::Heatbath] {
            let sampler = Sampler::new(SamplerParams::new(beta, algorithm, 7), 1)?;
            let mut cfg = Configuration::cold_start(&shape, group);
            let mut xs = Vec::new();
            sampler.run_chain(&mut cfg, 0..100_000, 1, |_, c, _| {
                xs.push(plaquette_average(c));
                Ok(())
            })?;
            let s = summarize(&xs, None, true)?;
            println!(
                "{group:>3} {algorithm:<10} {:.5} +- {:.5}  exact {exact:.5}  tau_int {:.2}",
                s.mean, s.error, s.tau_int.tau
            );
        }
    }
    Ok(())
}
