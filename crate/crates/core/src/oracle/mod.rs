//! Ground truth that does not go through the sampler: exact enumeration for
//! Z2, one-plaquette quadratures, the 2D factorized loops, the leading
//! strong-coupling prediction and a continuum check of the Wilson action.

pub mod bch;
mod quadrature;

pub use bch::{bch_action_check, BchCheck, CurvatureEvaluator, Profile, SmoothConnection};
pub use quadrature::integrate;

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::group::GroupId;
use crate::lattice::{Boundary, LatticeShape, LoopSpec};

/// Largest lattice (in links) accepted by [`exact_tiny_lattice`].
pub const MAX_ENUMERATED_LINKS: usize = 24;

/// Absolute tolerance requested from the quadrature for `w1`.
pub const QUADRATURE_TOL: f64 = 1e-13;

/// What [`exact_tiny_lattice`] computes.
#[derive(Clone, Debug, PartialEq)]
pub enum ExactObservable {
    /// `<(1/#P) sum_p u_p>`.
    PlaquetteAverage,
    /// `<W>` of one closed loop.
    WilsonLoop(LoopSpec),
    /// `<avg P(p) P(p + x e_axis)> - <avg P>^2` over same-plane pairs, the
    /// quantity estimated by the plaquette correlation measurement.
    PlaquetteCorrelation { axis: usize, separation: usize },
}

/// Exact Gibbs expectation on a Z2 lattice by summing all `2^#links` states.
///
/// Plaquette variables are recomputed here from bit masks rather than through
/// the action module. The action only takes values `2k` (k = number of
/// negative plaquettes), so state counts and observable sums are accumulated
/// as integers per `k` and weighted at the end; the result does not depend on
/// summation order.
pub fn exact_tiny_lattice(
    group: GroupId,
    shape: &LatticeShape,
    beta: f64,
    observable: &ExactObservable,
) -> Result<f64> {
    if group != GroupId::Z2 {
        return Err(Error::usage(format!("exact enumeration supports Z2 only, not {group}")));
    }
    if !(beta >= 0.0) {
        return Err(Error::usage(format!("beta must be >= 0, got {beta}")));
    }
    let links = shape.enumerate_links();
    if links.len() > MAX_ENUMERATED_LINKS {
        return Err(Error::usage(format!(
            "{} links exceed the enumeration limit of {MAX_ENUMERATED_LINKS}",
            links.len()
        )));
    }
    let bit =
        |l: &crate::lattice::LinkIndex| -> u32 { 1 << links.iter().position(|m| m == l).expect("link is enumerated") };
    let plaquettes = shape.enumerate_plaquettes();
    let masks: Vec<u32> = plaquettes
        .iter()
        .map(|p| {
            shape
                .plaquette_links(p)
                .expect("enumerated plaquette")
                .iter()
                .fold(0, |m, (l, _)| m ^ bit(l))
        })
        .collect();
    let np = masks.len();
    if np == 0 {
        return Err(Error::usage("lattice has no plaquettes"));
    }

    let observable_mask: Option<u32> = match observable {
        ExactObservable::WilsonLoop(spec) => Some(shape.loop_links(spec)?.iter().fold(0, |m, (l, _)| m ^ bit(l))),
        _ => None,
    };
    let pairs: Vec<(usize, usize)> = match *observable {
        ExactObservable::PlaquetteCorrelation { axis, separation } => {
            if axis >= shape.ndims() {
                return Err(Error::usage(format!("axis {axis} out of range")));
            }
            let mut out = Vec::new();
            for (a, p) in plaquettes.iter().enumerate() {
                let mut s = Some(p.site);
                for _ in 0..separation {
                    s = s.and_then(|s| shape.shift(&s, axis, true));
                }
                if let Some(s) = s {
                    if let Some(b) = plaquettes.iter().position(|q| q.site == s && q.plane == p.plane) {
                        out.push((a, b));
                    }
                }
            }
            if out.is_empty() {
                return Err(Error::usage("no plaquette pairs at this separation"));
            }
            out
        }
        _ => Vec::new(),
    };

    let mut count = vec![0u64; np + 1];
    let mut sums = vec![0i64; np + 1];
    let mut signs = vec![0i8; np];
    for state in 0u32..(1u32 << links.len()) {
        let mut k = 0;
        for (s, m) in signs.iter_mut().zip(&masks) {
            let neg = (state & m).count_ones() & 1 == 1;
            *s = if neg { -1 } else { 1 };
            k += neg as usize;
        }
        count[k] += 1;
        if let Some(m) = observable_mask {
            sums[k] += if (state & m).count_ones() & 1 == 1 { -1 } else { 1 };
        } else if !pairs.is_empty() {
            sums[k] += pairs.iter().map(|&(a, b)| (signs[a] * signs[b]) as i64).sum::<i64>();
        }
    }

    let weights: Vec<f64> = (0..=np).map(|k| (-2.0 * beta * k as f64).exp()).collect();
    let z: f64 = count.iter().zip(&weights).map(|(&c, w)| c as f64 * w).sum();
    let mean_of = |f: &dyn Fn(usize) -> f64| -> f64 { (0..=np).map(|k| f(k) * weights[k]).sum::<f64>() / z };
    let plaq = mean_of(&|k| count[k] as f64 * (np as f64 - 2.0 * k as f64) / np as f64);
    Ok(match observable {
        ExactObservable::PlaquetteAverage => plaq,
        ExactObservable::WilsonLoop(_) => mean_of(&|k| sums[k] as f64),
        ExactObservable::PlaquetteCorrelation { .. } => {
            let npairs = pairs.len() as f64;
            mean_of(&|k| sums[k] as f64 / npairs) - plaq * plaq
        }
    })
}

/// `w1(beta) = <(1/N) Re Tr U_p>` for one plaquette with free links.
///
/// After gauge fixing the plaquette variable is Haar distributed, tilted by
/// `exp(beta Re Tr U)`:
/// - U(1): `int cos t e^{b cos t} / int e^{b cos t}` over `[0, pi]`;
/// - SU(2): class angle `t` with Haar weight `sin^2 t`, `Re Tr U = 2 cos t`;
/// - Z2: `tanh(beta)` from the two-point weights.
pub fn single_plaquette_expectation(group: GroupId, beta: f64) -> Result<f64> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::usage(format!("beta must be finite and >= 0, got {beta}")));
    }
    match group {
        GroupId::Z2 => Ok(beta.tanh()),
        GroupId::U1 => {
            // the factor e^{-beta} keeps the integrands bounded for large beta
            let w = |t: f64| (beta * (t.cos() - 1.0)).exp();
            let num = integrate(|t| t.cos() * w(t), 0.0, PI, QUADRATURE_TOL);
            let den = integrate(w, 0.0, PI, QUADRATURE_TOL);
            Ok(num / den)
        }
        GroupId::SU2 => {
            let w = |t: f64| t.sin().powi(2) * (2.0 * beta * (t.cos() - 1.0)).exp();
            let num = integrate(|t| t.cos() * w(t), 0.0, PI, QUADRATURE_TOL);
            let den = integrate(w, 0.0, PI, QUADRATURE_TOL);
            Ok(num / den)
        }
        GroupId::SU3 => Err(Error::usage(
            "single-plaquette quadrature is available for Z2, U1 and SU2 only",
        )),
    }
}

/// `<(1/N) W(R, T)> = w1^{RT}` on an open 2D lattice: with a maximal tree
/// gauge fixed to the identity the plaquette variables become independent
/// Haar-tilted elements, and the loop is the ordered product of the `RT`
/// plaquettes it encloses.
pub fn two_dim_exact_loop(group: GroupId, beta: f64, r: usize, t: usize) -> Result<f64> {
    Ok(single_plaquette_expectation(group, beta)?.powi((r * t) as i32))
}

/// Leading strong-coupling prediction `w1^{RT}` in any dimension; valid for
/// small beta with relative corrections of order `w1^4`.
pub fn strong_coupling_leading(group: GroupId, beta: f64, r: usize, t: usize) -> Result<f64> {
    two_dim_exact_loop(group, beta, r, t)
}

/// The 2D open `2 x 2` lattice with a single plaquette.
pub fn single_plaquette_shape() -> LatticeShape {
    LatticeShape::new(&[2, 2], Boundary::Open).expect("valid shape")
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::lattice::Site;

    // Independent reference: Bessel-function ratios evaluated with mpmath,
    // U(1): I1(b)/I0(b); SU(2): I2(2b)/I1(2b).
    const U1_W1: [(f64, f64); 3] = [
        (0.5, 0.242_499_612_580_801_945),
        (1.0, 0.446_389_965_896_534_507),
        (2.0, 0.697_774_657_964_007_982),
    ];
    const SU2_W1: [(f64, f64); 3] = [
        (0.5, 0.240_193_723_870_089_741),
        (1.0, 0.433_127_426_722_311_758),
        (2.0, 0.658_047_267_359_359_586),
    ];

    #[test]
    fn quadrature_matches_bessel_ratios() {
        for (b, w) in U1_W1 {
            assert!((single_plaquette_expectation(GroupId::U1, b).unwrap() - w).abs() < 1e-10);
        }
        for (b, w) in SU2_W1 {
            assert!((single_plaquette_expectation(GroupId::SU2, b).unwrap() - w).abs() < 1e-10);
        }
    }

    fn riemann(f: impl Fn(f64) -> f64, n: usize) -> f64 {
        let h = PI / n as f64;
        (0..n).map(|i| f((i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn quadrature_matches_brute_force_riemann_sum() {
        let b = 1.0;
        let n = 1_000_000;
        let w = riemann(|t| t.cos() * (b * t.cos()).exp(), n) / riemann(|t| (b * t.cos()).exp(), n);
        assert!((single_plaquette_expectation(GroupId::U1, b).unwrap() - w).abs() < 1e-8);
        let ws = riemann(|t| t.cos() * t.sin().powi(2) * (2.0 * b * t.cos()).exp(), n)
            / riemann(|t| t.sin().powi(2) * (2.0 * b * t.cos()).exp(), n);
        assert!((single_plaquette_expectation(GroupId::SU2, b).unwrap() - ws).abs() < 1e-8);
    }

    #[test]
    fn quadrature_limits() {
        for g in [GroupId::U1, GroupId::SU2] {
            assert!(single_plaquette_expectation(g, 0.0).unwrap().abs() < 1e-12);
            assert!(single_plaquette_expectation(g, 1e4).unwrap() > 0.999);
        }
        assert!(single_plaquette_expectation(GroupId::SU3, 1.0).is_err());
        assert!(single_plaquette_expectation(GroupId::U1, -1.0).is_err());
    }

    #[test]
    fn halving_the_tolerance_is_stable() {
        for b in [0.3, 1.0, 5.0] {
            let w = |t: f64| t.sin().powi(2) * (2.0 * b * (t.cos() - 1.0)).exp();
            let coarse = integrate(|t| t.cos() * w(t), 0.0, PI, 2e-13) / integrate(w, 0.0, PI, 2e-13);
            let fine = integrate(|t| t.cos() * w(t), 0.0, PI, 1e-13) / integrate(w, 0.0, PI, 1e-13);
            assert!((coarse - fine).abs() < 1e-9);
        }
    }

    #[test]
    fn enumeration_single_plaquette_is_tanh() {
        let shape = single_plaquette_shape();
        for b in [0.0, 0.3, 0.7, 1.5] {
            let e = exact_tiny_lattice(GroupId::Z2, &shape, b, &ExactObservable::PlaquetteAverage).unwrap();
            assert!((e - b.tanh()).abs() < 1e-14, "beta {b}: {e}");
            let spec = shape.rectangular_loop(Site::new(&[0, 0]), (0, 1), 1, 1).unwrap();
            let w = exact_tiny_lattice(GroupId::Z2, &shape, b, &ExactObservable::WilsonLoop(spec)).unwrap();
            assert!((w - two_dim_exact_loop(GroupId::Z2, b, 1, 1).unwrap()).abs() < 1e-10);
        }
        let big = exact_tiny_lattice(GroupId::Z2, &shape, 40.0, &ExactObservable::PlaquetteAverage).unwrap();
        assert!((big - 1.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_beta_zero_and_limits() {
        let shape = LatticeShape::periodic(&[3, 3]).unwrap();
        let e = exact_tiny_lattice(GroupId::Z2, &shape, 0.0, &ExactObservable::PlaquetteAverage).unwrap();
        assert!(e.abs() < 1e-15);
        let too_big = LatticeShape::periodic(&[4, 4]).unwrap();
        assert!(exact_tiny_lattice(GroupId::Z2, &too_big, 0.5, &ExactObservable::PlaquetteAverage).is_err());
        assert!(exact_tiny_lattice(GroupId::U1, &shape, 0.5, &ExactObservable::PlaquetteAverage).is_err());
    }

    #[test]
    fn open_2d_loops_factorize() {
        // On an open 3 x 3 lattice the plaquettes are independent after gauge fixing.
        let shape = LatticeShape::open(&[3, 3]).unwrap();
        let b = 0.7;
        let spec = shape.rectangular_loop(Site::new(&[0, 0]), (0, 1), 2, 2).unwrap();
        let w = exact_tiny_lattice(GroupId::Z2, &shape, b, &ExactObservable::WilsonLoop(spec)).unwrap();
        assert!((w - b.tanh().powi(4)).abs() < 1e-12);
        let f = exact_tiny_lattice(
            GroupId::Z2,
            &shape,
            b,
            &ExactObservable::PlaquetteCorrelation { axis: 0, separation: 1 },
        )
        .unwrap();
        // independent plaquettes: <P_a P_b> = w1^2 = <P>^2
        assert!(f.abs() < 1e-12);
    }
}
