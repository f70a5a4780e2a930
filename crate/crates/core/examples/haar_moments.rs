//! At beta = 0 every update draws links from Haar measure, where
//! `<Re Tr U> = 0` and `<|Tr U|^2> = 1` for U(1), SU(2) and SU(3).
//!
//!     cargo run --release --example haar_moments

use lattice_gauge::stats::summarize;
use lattice_gauge::{Algorithm, Configuration, GroupId, LatticeShape, Sampler, SamplerParams};

fn main() -> lattice_gauge::Result<()> {
    let shape = LatticeShape::periodic(&[4, 4, 4, 4])?;
    for group in [GroupId::U1, GroupId::SU2, GroupId::SU3] {
        for algorithm in [Algorithm::Metropolis, Algorithm::Heatbath] {
            let sampler = Sampler::new(SamplerParams::new(0.0, algorithm, 3), 1)?;
            let mut cfg = Configuration::cold_start(&shape, group);
            let therm = if algorithm == Algorithm::Metropolis { 300 } else { 10 };
            sampler.run_chain(&mut cfg, 0..therm, 0, |_, _, _| Ok(()))?;
            let (mut re, mut sq) = (Vec::new(), Vec::new());
            sampler.run_chain(&mut cfg, therm..therm + 300, 1, |_, c, _| {
                let n = c.link_count() as f64;
                re.push(c.links().map(|u| u.re_trace()).sum::<f64>() / n);
                sq.push(c.links().map(|u| u.trace().norm_sqr()).sum::<f64>() / n);
                Ok(())
            })?;
            let (a, b) = (summarize(&re, None, false)?, summarize(&sq, None, false)?);
            println!(
                "{group:>3} {algorithm:<10} <Re Tr U> = {:+.4} +- {:.4}   <|Tr U|^2> = {:.4} +- {:.4}",
                a.mean, a.error, b.mean, b.error
            );
        }
    }
    Ok(())
}
