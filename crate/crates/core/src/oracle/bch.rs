//! Continuum check of the Wilson action for smooth connections.
//!
//! With links `U(x, x + eps e_j) = exp(eps A_j(x))` the plaquette is
//! `exp(eps^2 F_jk + O(eps^3))`, so summing `Re Tr(I - U_p)` over a box should
//! approach `(eps^{4-n} / 4) S_YM(A)` with `S_YM = -int sum_{j,k} Tr F_jk^2`.
//! The connections come from a small catalog with closed-form derivatives.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::{AlgebraElement, CMatrix, GroupId};
use crate::lattice::MAX_DIMS;

/// A real coefficient function of `x` with closed-form gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    Const(f64),
    /// `c0 + grad . x`
    Linear {
        c0: f64,
        grad: [f64; MAX_DIMS],
    },
    /// `amp * sin(wave . x + phase)`
    Sine {
        amp: f64,
        wave: [f64; MAX_DIMS],
        phase: f64,
    },
    /// `amp * x_a * x_b`
    Product {
        amp: f64,
        a: usize,
        b: usize,
    },
}

impl Profile {
    pub fn value(&self, x: &[f64; MAX_DIMS]) -> f64 {
        match *self {
            Profile::Const(c) => c,
            Profile::Linear { c0, grad } => c0 + dot(&grad, x),
            Profile::Sine { amp, wave, phase } => amp * (dot(&wave, x) + phase).sin(),
            Profile::Product { amp, a, b } => amp * x[a] * x[b],
        }
    }

    /// `d/dx_k` of the profile.
    pub fn derivative(&self, k: usize, x: &[f64; MAX_DIMS]) -> f64 {
        match *self {
            Profile::Const(_) => 0.0,
            Profile::Linear { grad, .. } => grad[k],
            Profile::Sine { amp, wave, phase } => amp * wave[k] * (dot(&wave, x) + phase).cos(),
            Profile::Product { amp, a, b } => {
                let mut d = 0.0;
                if k == a {
                    d += amp * x[b];
                }
                if k == b {
                    d += amp * x[a];
                }
                d
            }
        }
    }

    /// The gradient component `d/dx_k` as a profile of its own (used for pure
    /// gauge shifts `A_j -> A_j + d_j lambda`).
    fn gradient_profile(&self, k: usize) -> Result<Profile> {
        match *self {
            Profile::Const(_) => Ok(Profile::Const(0.0)),
            Profile::Linear { grad, .. } => Ok(Profile::Const(grad[k])),
            Profile::Sine { amp, wave, phase } => Ok(Profile::Sine {
                amp: amp * wave[k],
                wave,
                phase: phase + std::f64::consts::FRAC_PI_2,
            }),
            Profile::Product { .. } => Err(Error::usage("gauge shifts support constant, linear and sine profiles")),
        }
    }

    fn max_axis(&self) -> Option<usize> {
        match *self {
            Profile::Product { a, b, .. } => Some(a.max(b)),
            _ => None,
        }
    }
}

fn dot(a: &[f64; MAX_DIMS], b: &[f64; MAX_DIMS]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `A_j(x) = sum_a c_{j,a}(x) T_a` with generators `T = i` for U(1) and
/// `T_a = i sigma_a / 2` for SU(2). Each coefficient is a sum of profiles.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothConnection {
    group: GroupId,
    ndims: usize,
    coefficients: Vec<Vec<Vec<Profile>>>,
}

impl SmoothConnection {
    pub fn new(group: GroupId, ndims: usize, coefficients: Vec<Vec<Profile>>) -> Result<Self> {
        let generators = match group {
            GroupId::U1 => 1,
            GroupId::SU2 => 3,
            _ => return Err(Error::usage(format!("no smooth connections for {group}"))),
        };
        if !(2..=MAX_DIMS).contains(&ndims) || coefficients.len() != ndims {
            return Err(Error::usage(format!(
                "expected {ndims} components in 2..={MAX_DIMS} dimensions, got {}",
                coefficients.len()
            )));
        }
        for c in &coefficients {
            if c.len() != generators {
                return Err(Error::usage(format!(
                    "{group} components need {generators} coefficients"
                )));
            }
            if c.iter().filter_map(Profile::max_axis).any(|a| a >= ndims) {
                return Err(Error::usage("profile refers to an axis outside the connection"));
            }
        }
        let coefficients = coefficients
            .into_iter()
            .map(|c| c.into_iter().map(|p| vec![p]).collect())
            .collect();
        Ok(Self {
            group,
            ndims,
            coefficients,
        })
    }

    /// `A = 0`.
    pub fn zero(group: GroupId, ndims: usize) -> Result<Self> {
        let g = if group == GroupId::SU2 { 3 } else { 1 };
        Self::new(group, ndims, vec![vec![Profile::Const(0.0); g]; ndims])
    }

    /// U(1) connection with constant curvature `F_01 = i f`:
    /// `A_0 = -i f x_1 / 2`, `A_1 = i f x_0 / 2`.
    pub fn abelian_constant_curvature(ndims: usize, f: f64) -> Result<Self> {
        let mut g0 = [0.0; MAX_DIMS];
        g0[1] = -0.5 * f;
        let mut g1 = [0.0; MAX_DIMS];
        g1[0] = 0.5 * f;
        let mut c = vec![vec![Profile::Const(0.0)]; ndims];
        c[0] = vec![Profile::Linear { c0: 0.0, grad: g0 }];
        c[1] = vec![Profile::Linear { c0: 0.0, grad: g1 }];
        Self::new(GroupId::U1, ndims, c)
    }

    /// A non-Abelian SU(2) connection mixing trigonometric and polynomial
    /// coefficients, so that the commutator term of `F` does not vanish.
    pub fn su2_catalog(ndims: usize) -> Result<Self> {
        let sine = |amp, wave: [f64; 4], phase| Profile::Sine { amp, wave, phase };
        let lin = |c0, grad: [f64; 4]| Profile::Linear { c0, grad };
        let all = vec![
            vec![
                sine(0.8, [0.0, 1.0, 0.5, 0.0], 0.3),
                Profile::Product { amp: 0.6, a: 0, b: 1 },
                Profile::Const(0.4),
            ],
            vec![
                Profile::Const(0.5),
                sine(0.7, [1.0, 0.0, 0.0, 0.5], 0.1),
                lin(0.2, [0.3, 0.0, 0.2, 0.0]),
            ],
            vec![
                lin(-0.3, [0.0, 0.5, 0.0, 0.0]),
                Profile::Const(0.2),
                sine(0.6, [0.5, 0.5, 0.0, 0.0], 0.7),
            ],
            vec![
                sine(0.5, [0.0, 0.0, 1.0, 0.0], 0.2),
                lin(0.1, [0.0, 0.0, 0.0, 0.4]),
                Profile::Product { amp: 0.3, a: 0, b: 2 },
            ],
        ];
        Self::new(GroupId::SU2, ndims, all.into_iter().take(ndims).collect())
    }

    /// `A_j -> A_j + d_j lambda` for a U(1) connection (a smooth gauge
    /// transformation; the curvature is unchanged).
    pub fn abelian_gauge_shift(&self, lambda: Profile) -> Result<Self> {
        if self.group != GroupId::U1 {
            return Err(Error::usage("closed-form gauge shifts are implemented for U1 only"));
        }
        if lambda.max_axis().is_some_and(|a| a >= self.ndims) {
            return Err(Error::usage("gauge function refers to an axis outside the connection"));
        }
        let mut out = self.clone();
        for (j, comp) in out.coefficients.iter_mut().enumerate() {
            comp[0].push(lambda.gradient_profile(j)?);
        }
        Ok(out)
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn ndims(&self) -> usize {
        self.ndims
    }

    fn algebra_matrix(&self, c: &[f64]) -> CMatrix {
        match self.group {
            GroupId::U1 => CMatrix::scalar(Complex64::new(0.0, c[0])),
            _ => *AlgebraElement::su2([c[0], c[1], c[2]]).matrix(),
        }
    }

    fn component_matrix(&self, j: usize, x: &[f64; MAX_DIMS]) -> CMatrix {
        let mut c = [0.0; 3];
        for (a, terms) in self.coefficients[j].iter().enumerate() {
            c[a] = terms.iter().map(|p| p.value(x)).sum();
        }
        self.algebra_matrix(&c)
    }

    fn derivative_matrix(&self, j: usize, k: usize, x: &[f64; MAX_DIMS]) -> CMatrix {
        let mut c = [0.0; 3];
        for (a, terms) in self.coefficients[j].iter().enumerate() {
            c[a] = terms.iter().map(|p| p.derivative(k, x)).sum();
        }
        self.algebra_matrix(&c)
    }

    fn point(&self, x: &[f64]) -> Result<[f64; MAX_DIMS]> {
        if x.len() != self.ndims {
            return Err(Error::usage(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.ndims
            )));
        }
        let mut p = [0.0; MAX_DIMS];
        p[..x.len()].copy_from_slice(x);
        Ok(p)
    }

    /// `A_j(x)`.
    pub fn component(&self, j: usize, x: &[f64]) -> Result<AlgebraElement> {
        let p = self.point(x)?;
        AlgebraElement::new(self.group, self.component_matrix(j, &p))
    }

    /// `d A_j / d x_k` at `x`.
    pub fn derivative(&self, j: usize, k: usize, x: &[f64]) -> Result<AlgebraElement> {
        let p = self.point(x)?;
        AlgebraElement::new(self.group, self.derivative_matrix(j, k, &p))
    }

    pub fn curvature(&self) -> CurvatureEvaluator<'_> {
        CurvatureEvaluator { conn: self }
    }
}

/// `F_jk = d_j A_k - d_k A_j + [A_j, A_k]`.
#[derive(Clone, Copy, Debug)]
pub struct CurvatureEvaluator<'a> {
    conn: &'a SmoothConnection,
}

impl CurvatureEvaluator<'_> {
    fn matrix(&self, j: usize, k: usize, x: &[f64; MAX_DIMS]) -> CMatrix {
        let c = self.conn;
        let aj = c.component_matrix(j, x);
        let ak = c.component_matrix(k, x);
        c.derivative_matrix(k, j, x)
            .sub(&c.derivative_matrix(j, k, x))
            .add(&aj.mul(&ak).sub(&ak.mul(&aj)))
    }

    pub fn at(&self, j: usize, k: usize, x: &[f64]) -> Result<AlgebraElement> {
        let p = self.conn.point(x)?;
        AlgebraElement::new(self.conn.group, self.matrix(j, k, &p))
    }

    /// `-sum_{j,k} Tr F_jk^2` at `x` (non-negative).
    fn energy_density(&self, x: &[f64; MAX_DIMS]) -> f64 {
        let n = self.conn.ndims;
        let mut s = 0.0;
        for j in 0..n {
            for k in j + 1..n {
                let f = self.matrix(j, k, x);
                s -= 2.0 * f.mul(&f).trace().re;
            }
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct BchCheck {
    pub lattice_sum: f64,
    pub continuum_integral: f64,
    /// `lattice_sum / continuum_integral`, defined as 1 when both vanish.
    pub ratio: f64,
}

/// Compare the Wilson action of `exp(eps A)` links with the Yang-Mills
/// integral over the box `[0, L_0] x ... x [0, L_{n-1}]`.
///
/// The box is tiled half-open: each plane contributes one plaquette per
/// `eps`-cell, anchored at the cell's lower corner, and the continuum
/// integral uses the midpoint rule on the same cells.
pub fn bch_action_check(conn: &SmoothConnection, epsilon: f64, box_sides: &[f64]) -> Result<BchCheck> {
    let n = conn.ndims;
    if box_sides.len() != n {
        return Err(Error::usage(format!(
            "box has {} sides but the connection lives in {n} dimensions",
            box_sides.len()
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::usage("epsilon must be positive"));
    }
    let cells: Vec<usize> = box_sides
        .iter()
        .map(|&l| {
            let m = l / epsilon;
            if (m - m.round()).abs() > 1e-9 * m.max(1.0) || m.round() < 1.0 {
                Err(Error::usage(format!(
                    "epsilon {epsilon} does not divide the box side {l}"
                )))
            } else {
                Ok(m.round() as usize)
            }
        })
        .collect::<Result<_>>()?;
    let total: usize = cells.iter().product();
    let order = conn.group.order() as f64;
    let curvature = conn.curvature();
    let link = |j: usize, x: &[f64; MAX_DIMS]| -> CMatrix {
        let a = conn.component_matrix(j, x).scale_real(epsilon);
        *AlgebraElement::new(conn.group, a)
            .expect("algebra element")
            .exp_map()
            .matrix()
    };

    let mut lattice = 0.0;
    let mut continuum = 0.0;
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let mut x = [0.0; MAX_DIMS];
        let mut mid = [0.0; MAX_DIMS];
        for d in 0..n {
            x[d] = idx[d] as f64 * epsilon;
            mid[d] = (idx[d] as f64 + 0.5) * epsilon;
        }
        for mu in 0..n {
            for nu in mu + 1..n {
                let mut x_mu = x;
                x_mu[mu] += epsilon;
                let mut x_nu = x;
                x_nu[nu] += epsilon;
                let a = link(mu, &x).mul(&link(nu, &x_mu));
                let b = link(nu, &x).mul(&link(mu, &x_nu));
                lattice += order - a.mul_adj(&b).trace().re;
            }
        }
        continuum += curvature.energy_density(&mid);
        for d in (0..n).rev() {
            idx[d] += 1;
            if idx[d] < cells[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    // midpoint rule: cell volume eps^n, times the eps^{4-n}/4 prefactor
    let continuum = continuum * epsilon.powi(4) / 4.0;
    let ratio = if lattice == 0.0 && continuum == 0.0 {
        1.0
    } else {
        lattice / continuum
    };
    Ok(BchCheck {
        lattice_sum: lattice,
        continuum_integral: continuum,
        ratio,
    })
}

/// Observed convergence order from `|ratio - 1|` at several `eps`: the
/// least-squares slope of `log |ratio - 1|` against `log eps`.
pub fn convergence_order(eps: &[f64], deviations: &[f64]) -> f64 {
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = deviations.iter().map(|d| d.abs().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Closed form of the lattice sum for the constant-curvature U(1)
/// connection: every plaquette in the `(0, 1)` plane has phase `eps^2 f`.
pub fn abelian_closed_form(f: f64, epsilon: f64, box_sides: &[f64]) -> f64 {
    let cells: f64 = box_sides.iter().map(|l| (l / epsilon).round()).product();
    cells * (1.0 - (epsilon * epsilon * f).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_connection() {
        let c = SmoothConnection::zero(GroupId::SU2, 3).unwrap();
        let r = bch_action_check(&c, 0.25, &[1.0; 3]).unwrap();
        assert_eq!((r.lattice_sum, r.continuum_integral, r.ratio), (0.0, 0.0, 1.0));
    }

    #[test]
    fn abelian_matches_closed_form() {
        let f = 1.7;
        for n in [2, 3] {
            let c = SmoothConnection::abelian_constant_curvature(n, f).unwrap();
            let sides = vec![1.0; n];
            let r = bch_action_check(&c, 0.05, &sides).unwrap();
            let exact = abelian_closed_form(f, 0.05, &sides);
            assert!((r.lattice_sum / exact - 1.0).abs() < 1e-8);
            let cont = 0.05f64.powi(4 - n as i32) * f * f / 2.0;
            assert!((r.continuum_integral / cont - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = SmoothConnection::su2_catalog(4).unwrap();
        let x = [0.3, 0.7, 0.2, 0.9];
        for j in 0..4 {
            for k in 0..4 {
                let d = c.derivative(j, k, &x).unwrap();
                let mut errs = Vec::new();
                for h in [1e-3, 5e-4] {
                    let mut xp = x;
                    let mut xm = x;
                    xp[k] += h;
                    xm[k] -= h;
                    let fd = c
                        .component(j, &xp)
                        .unwrap()
                        .matrix()
                        .sub(c.component(j, &xm).unwrap().matrix())
                        .scale_real(0.5 / h);
                    errs.push(fd.sub(d.matrix()).frobenius_norm());
                }
                // central differences: error ~ h^2, or exact for polynomials of degree <= 2
                assert!(
                    errs[0] < 1e-6 && (errs[1] < 0.3 * errs[0] || errs[1] < 1e-10),
                    "{j} {k}: {errs:?}"
                );
            }
        }
    }

    #[test]
    fn curvature_antisymmetry_and_abelian_commutator() {
        let c = SmoothConnection::su2_catalog(3).unwrap();
        let f = c.curvature();
        let x = [0.1, 0.5, 0.8];
        for j in 0..3 {
            for k in 0..3 {
                let s = f.at(j, k, &x).unwrap().matrix().add(f.at(k, j, &x).unwrap().matrix());
                assert!(s.frobenius_norm() < 1e-12);
            }
        }
        let a = SmoothConnection::abelian_constant_curvature(2, 2.0).unwrap();
        let fa = a.curvature().at(0, 1, &[0.4, 0.6]).unwrap();
        assert!((fa.matrix().get(0, 0) - Complex64::new(0.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn non_abelian_ratio_converges() {
        let c = SmoothConnection::su2_catalog(2).unwrap();
        let eps = [0.1, 0.05, 0.025];
        let dev: Vec<f64> = eps
            .iter()
            .map(|&e| bch_action_check(&c, e, &[1.0, 1.0]).unwrap().ratio - 1.0)
            .collect();
        assert!(dev[0].abs() > dev[1].abs() && dev[1].abs() > dev[2].abs(), "{dev:?}");
        assert!(convergence_order(&eps, &dev) >= 0.9);
    }

    #[test]
    fn abelian_gauge_invariance() {
        let base = SmoothConnection::abelian_constant_curvature(2, 1.3).unwrap();
        let lambda = Profile::Sine {
            amp: 0.4,
            wave: [2.0, 1.0, 0.0, 0.0],
            phase: 0.2,
        };
        let shifted = base.abelian_gauge_shift(lambda).unwrap();
        let mut prev = f64::INFINITY;
        for e in [0.1, 0.05, 0.025] {
            let a = bch_action_check(&base, e, &[1.0, 1.0]).unwrap();
            let b = bch_action_check(&shifted, e, &[1.0, 1.0]).unwrap();
            // F is unchanged pointwise, so the midpoint sums agree to rounding
            assert!((a.continuum_integral / b.continuum_integral - 1.0).abs() < 1e-12);
            // plaquette phases move by O(eps^3) against eps^2 f
            let rel = (a.lattice_sum / b.lattice_sum - 1.0).abs();
            assert!(rel < 0.05 && rel < prev, "eps {e}: {rel}");
            prev = rel;
        }
    }

    #[test]
    fn dimension_mismatch_and_bad_epsilon() {
        let c = SmoothConnection::su2_catalog(2).unwrap();
        assert!(bch_action_check(&c, 0.1, &[1.0, 1.0, 1.0]).is_err());
        assert!(bch_action_check(&c, 0.3, &[1.0, 1.0]).is_err());
        assert!(SmoothConnection::new(GroupId::SU3, 2, vec![]).is_err());
    }
}
