//! Wilson loops in 2D U(1) with open boundaries. The loops obey an exact
//! area law `w1^{RT}`, so Creutz ratios and the fitted string tension should
//! all reproduce `-log w1`.
//!
//!     cargo run --example area_law_2d

use lattice_gauge::observables::{creutz_ratio, loop_expectation_table, perimeter_area_fit, LoopMeasurer};
use lattice_gauge::oracle::{single_plaquette_expectation, two_dim_exact_loop};
use lattice_gauge::{Algorithm, Configuration, GroupId, LatticeShape, Sampler, SamplerParams};

fn main() -> lattice_gauge::Result<()> {
    let beta = 2.0;
    let shape = LatticeShape::open(&[16, 16])?;
    let measurer = LoopMeasurer::new(&shape, &[(0, 1)], 4, 4)?;
    let sampler = Sampler::new(SamplerParams::new(beta, Algorithm::Heatbath, 11), 1)?;

    let mut cfg = Configuration::cold_start(&shape, GroupId::U1);
    let mut samples = Vec::new();
    sampler.run_chain(&mut cfg, 0..200, 0, |_, _, _| Ok(()))?;
    sampler.run_chain(&mut cfg, 200..5200, 1, |_, c, _| {
        samples.push(measurer.measure(c));
        Ok(())
    })?;
    let table = loop_expectation_table(&samples, None)?;

    println!("R T  W(R,T)               exact");
    for r in 1..=4 {
        for t in 1..=4 {
            let w = table.get(r, t).expect("in table");
            let exact = two_dim_exact_loop(GroupId::U1, beta, r, t)?;
            println!("{r} {t}  {:.5} +- {:.5}  {exact:.5}", w.value, w.error);
        }
    }

    let sigma = -single_plaquette_expectation(GroupId::U1, beta)?.ln();
    println!("\n-log w1 = {sigma:.4}");
    for rt in 2..=3 {
        let chi = creutz_ratio(&table, rt, rt)?;
        println!("chi({rt},{rt}) = {:.4} +- {:.4}", chi.value, chi.error);
    }
    let fit = perimeter_area_fit(&table)?;
    for p in ["c", "d"] {
        println!("{p} = {:.4} +- {:.4}", fit.value(p).unwrap(), fit.error(p).unwrap());
    }
    Ok(())
}
