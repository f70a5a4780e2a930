//! Wilson action of a smooth SU(2) connection discretized with spacing eps
//! against the Yang-Mills integral `(1/2) sum_{mu<nu} int |F_{mu nu}|^2`.
//! The relative deviation shrinks linearly in eps.
//!
//!     cargo run --release --example bch_continuum

use lattice_gauge::oracle::bch::{bch_action_check, convergence_order, SmoothConnection};

fn main() -> lattice_gauge::Result<()> {
    let ndims = 3;
    let conn = SmoothConnection::su2_catalog(ndims)?;
    let sides = vec![1.0; ndims];
    let eps = [0.2, 0.1, 0.05, 0.025];
    let mut dev = Vec::new();
    println!("eps\tlattice\t\tcontinuum\tratio - 1");
    for &e in &eps {
        let c = bch_action_check(&conn, e, &sides)?;
        dev.push((c.ratio - 1.0).abs());
        println!(
            "{e}\t{:.8}\t{:.8}\t{:+.3e}",
            c.lattice_sum,
            c.continuum_integral,
            c.ratio - 1.0
        );
    }
    println!("observed order {:.3}", convergence_order(&eps, &dev));
    Ok(())
}
