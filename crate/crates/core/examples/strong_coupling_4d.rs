//! SU(2) in four dimensions at small beta. To leading order in the strong
//! coupling expansion `W(R, T) ~ w1^{RT}`, so the Creutz ratio and the
//! area coefficient approach `-log w1`.
//!
//!     cargo run --release --example strong_coupling_4d -- 0.5

use lattice_gauge::observables::{
    all_planes, creutz_ratio, loop_expectation_table, perimeter_area_fit, plaquette_average, LoopMeasurer,
};
use lattice_gauge::oracle::single_plaquette_expectation;
use lattice_gauge::stats::summarize;
use lattice_gauge::{Algorithm, Configuration, GroupId, LatticeShape, Sampler, SamplerParams};

fn main() -> lattice_gauge::Result<()> {
    let beta: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.5);
    let shape = LatticeShape::periodic(&[6, 6, 6, 6])?;
    let measurer = LoopMeasurer::new(&shape, &all_planes(4), 3, 3)?;
    let sampler = Sampler::new(SamplerParams::new(beta, Algorithm::Heatbath, 2024), 1)?;

    let mut cfg = Configuration::cold_start(&shape, GroupId::SU2);
    sampler.run_chain(&mut cfg, 0..100, 0, |_, _, _| Ok(()))?;
    let mut loops = Vec::new();
    let mut plaq = Vec::new();
    sampler.run_chain(&mut cfg, 100..2100, 1, |_, c, _| {
        loops.push(measurer.measure(c));
        plaq.push(plaquette_average(c));
        Ok(())
    })?;

    let w1 = single_plaquette_expectation(GroupId::SU2, beta)?;
    let p = summarize(&plaq, None, false)?;
    println!("plaquette {:.5} +- {:.5}   w1 = {w1:.5}", p.mean, p.error);
    println!("-log w1   {:.4}", -w1.ln());

    let table = loop_expectation_table(&loops, None)?;
    let chi = creutz_ratio(&table, 2, 2)?;
    println!("chi(2,2)  {:.4} +- {:.4}", chi.value, chi.error);
    match perimeter_area_fit(&table) {
        Ok(fit) => println!(
            "d         {:.4} +- {:.4}",
            fit.value("d").unwrap(),
            fit.error("d").unwrap()
        ),
        Err(e) => println!("d         not determined: {e}"),
    }
    Ok(())
}
