//! Compact matrix groups Z2, U(1), SU(2), SU(3) as small dense unitary matrices.
//!
//! Every group element is stored as an `N x N` complex matrix (`N` = 1, 1, 2, 3),
//! so the plaquette and staple code path is the same for all groups.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Tolerance for algebraic identities (unitarity, determinant, skew-Hermiticity).
pub const ALGEBRA_TOL: f64 = 1e-12;

/// Largest Frobenius distance from the group that `reunitarize` will repair.
pub const DRIFT_LIMIT: f64 = 0.1;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum GroupId {
    Z2,
    U1,
    SU2,
    SU3,
}

impl GroupId {
    pub const ALL: [GroupId; 4] = [GroupId::Z2, GroupId::U1, GroupId::SU2, GroupId::SU3];

    /// Matrix order `N`.
    pub fn order(self) -> usize {
        match self {
            GroupId::Z2 | GroupId::U1 => 1,
            GroupId::SU2 => 2,
            GroupId::SU3 => 3,
        }
    }

    pub fn is_special_unitary(self) -> bool {
        matches!(self, GroupId::SU2 | GroupId::SU3)
    }

    /// Byte tag used in checkpoints.
    pub fn tag(self) -> u8 {
        match self {
            GroupId::Z2 => 0,
            GroupId::U1 => 1,
            GroupId::SU2 => 2,
            GroupId::SU3 => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupId::Z2 => "Z2",
            GroupId::U1 => "U1",
            GroupId::SU2 => "SU2",
            GroupId::SU3 => "SU3",
        }
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for GroupId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace(['(', ')'], "").as_str() {
            "Z2" => Ok(GroupId::Z2),
            "U1" => Ok(GroupId::U1),
            "SU2" => Ok(GroupId::SU2),
            "SU3" => Ok(GroupId::SU3),
            _ => Err(Error::usage(format!(
                "unknown group `{s}` (expected one of Z2, U1, SU2, SU3)"
            ))),
        }
    }
}

/// Dense complex matrix of order 1..=3 stored inline, row-major with stride 3.
#[derive(Clone, Copy, PartialEq)]
pub struct CMatrix {
    n: usize,
    a: [Complex64; 9],
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<Complex64>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect();
        f.debug_struct("CMatrix").field("rows", &rows).finish()
    }
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=3).contains(&n), "matrix order must be 1..=3");
        Self { n, a: [C0; 9] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * 4] = C1;
        }
        m
    }

    pub fn scalar(z: Complex64) -> Self {
        let mut m = Self::zeros(1);
        m.a[0] = z;
        m
    }

    /// Build from row-major entries; `rows.len()` fixes the order.
    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            for (j, &z) in row.iter().enumerate() {
                m.a[i * 3 + j] = z;
            }
        }
        m
    }

    #[inline(always)]
    pub fn order(&self) -> usize {
        self.n
    }

    #[inline(always)]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * 3 + j]
    }

    #[inline(always)]
    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.a[i * 3 + j] = z;
    }

    #[inline]
    pub fn mul(&self, o: &CMatrix) -> CMatrix {
        debug_assert_eq!(self.n, o.n);
        let n = self.n;
        let mut r = CMatrix { n, a: [C0; 9] };
        match n {
            1 => r.a[0] = self.a[0] * o.a[0],
            2 => {
                let (a, b) = (&self.a, &o.a);
                r.a[0] = a[0] * b[0] + a[1] * b[3];
                r.a[1] = a[0] * b[1] + a[1] * b[4];
                r.a[3] = a[3] * b[0] + a[4] * b[3];
                r.a[4] = a[3] * b[1] + a[4] * b[4];
            }
            _ => {
                for i in 0..n {
                    for k in 0..n {
                        let s = self.a[i * 3 + k];
                        for j in 0..n {
                            r.a[i * 3 + j] += s * o.a[k * 3 + j];
                        }
                    }
                }
            }
        }
        r
    }

    /// `self * o^dagger` without forming the adjoint.
    #[inline]
    pub fn mul_adj(&self, o: &CMatrix) -> CMatrix {
        let n = self.n;
        let mut r = CMatrix { n, a: [C0; 9] };
        for i in 0..n {
            for j in 0..n {
                let mut s = C0;
                for k in 0..n {
                    s += self.a[i * 3 + k] * o.a[j * 3 + k].conj();
                }
                r.a[i * 3 + j] = s;
            }
        }
        r
    }

    /// `self^dagger * o` without forming the adjoint.
    #[inline]
    pub fn adj_mul(&self, o: &CMatrix) -> CMatrix {
        let n = self.n;
        let mut r = CMatrix { n, a: [C0; 9] };
        for i in 0..n {
            for j in 0..n {
                let mut s = C0;
                for k in 0..n {
                    s += self.a[k * 3 + i].conj() * o.a[k * 3 + j];
                }
                r.a[i * 3 + j] = s;
            }
        }
        r
    }

    #[inline]
    pub fn adjoint(&self) -> CMatrix {
        let n = self.n;
        let mut r = CMatrix { n, a: [C0; 9] };
        for i in 0..n {
            for j in 0..n {
                r.a[j * 3 + i] = self.a[i * 3 + j].conj();
            }
        }
        r
    }

    #[inline]
    pub fn add(&self, o: &CMatrix) -> CMatrix {
        let mut r = *self;
        r.add_assign(o);
        r
    }

    #[inline]
    pub fn add_assign(&mut self, o: &CMatrix) {
        for (x, y) in self.a.iter_mut().zip(o.a.iter()) {
            *x += *y;
        }
    }

    #[inline]
    pub fn sub(&self, o: &CMatrix) -> CMatrix {
        let mut r = *self;
        for (x, y) in r.a.iter_mut().zip(o.a.iter()) {
            *x -= *y;
        }
        r
    }

    #[inline]
    pub fn scale(&self, s: Complex64) -> CMatrix {
        let mut r = *self;
        for x in r.a.iter_mut() {
            *x *= s;
        }
        r
    }

    #[inline]
    pub fn scale_real(&self, s: f64) -> CMatrix {
        self.scale(Complex64::new(s, 0.0))
    }

    #[inline]
    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.a[i * 4]).sum()
    }

    /// `Re Tr(self * o)` without forming the product.
    #[inline]
    pub fn re_trace_mul(&self, o: &CMatrix) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for k in 0..n {
                s += (self.a[i * 3 + k] * o.a[k * 3 + i]).re;
            }
        }
        s
    }

    /// `Tr(self * o^dagger)` without forming the product.
    #[inline]
    pub fn trace_mul_adj(&self, o: &CMatrix) -> Complex64 {
        let n = self.n;
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                s += self.a[i * 3 + k] * o.a[i * 3 + k].conj();
            }
        }
        s
    }

    pub fn det(&self) -> Complex64 {
        let a = &self.a;
        match self.n {
            1 => a[0],
            2 => a[0] * a[4] - a[1] * a[3],
            _ => {
                a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                    + a[2] * (a[3] * a[7] - a[4] * a[6])
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn entries(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.n).flat_map(move |i| (0..self.n).map(move |j| self.get(i, j)))
    }

    pub fn is_finite(&self) -> bool {
        self.entries().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Gauss-Jordan inverse with partial pivoting; `None` if singular.
    pub fn inverse(&self) -> Option<CMatrix> {
        let n = self.n;
        let mut m = *self;
        let mut inv = CMatrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| {
                    m.get(x, col)
                        .norm()
                        .partial_cmp(&m.get(y, col).norm())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            if m.get(pivot, col).norm() < 1e-300 {
                return None;
            }
            if pivot != col {
                for j in 0..n {
                    m.a.swap(pivot * 3 + j, col * 3 + j);
                    inv.a.swap(pivot * 3 + j, col * 3 + j);
                }
            }
            let p = C1 / m.get(col, col);
            for j in 0..n {
                m.a[col * 3 + j] *= p;
                inv.a[col * 3 + j] *= p;
            }
            for i in 0..n {
                if i != col {
                    let f = m.get(i, col);
                    if f != C0 {
                        for j in 0..n {
                            let (mc, ic) = (m.a[col * 3 + j], inv.a[col * 3 + j]);
                            m.a[i * 3 + j] -= f * mc;
                            inv.a[i * 3 + j] -= f * ic;
                        }
                    }
                }
            }
        }
        Some(inv)
    }

    /// `|| self^dagger self - I ||_F`.
    pub fn unitarity_defect(&self) -> f64 {
        self.adj_mul(self).sub(&CMatrix::identity(self.n)).frobenius_norm()
    }

    /// Matrix exponential by scaling and squaring with a [6/6] Pade approximant.
    pub fn exp_pade(&self) -> CMatrix {
        // c_k = (2q-k)! q! / ((2q)! k! (q-k)!) for q = 6
        const PADE: [f64; 7] = [
            1.0,
            0.5,
            5.0 / 44.0,
            1.0 / 66.0,
            1.0 / 792.0,
            1.0 / 15840.0,
            1.0 / 665280.0,
        ];
        let n = self.n;
        let norm = self.norm_one();
        let squarings = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let x = self.scale_real(0.5f64.powi(squarings as i32));
        let mut num = CMatrix::identity(n);
        let mut den = CMatrix::identity(n);
        let mut power = CMatrix::identity(n);
        for (k, &c) in PADE.iter().enumerate().skip(1) {
            power = power.mul(&x);
            let term = power.scale_real(c);
            num.add_assign(&term);
            if k % 2 == 0 {
                den.add_assign(&term);
            } else {
                den = den.sub(&term);
            }
        }
        let mut r = den
            .inverse()
            .expect("Pade denominator is invertible for scaled arguments")
            .mul(&num);
        for _ in 0..squarings {
            r = r.mul(&r);
        }
        r
    }
}

/// An element of one of the supported groups.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElement {
    group: GroupId,
    m: CMatrix,
}

/// An element of the Lie algebra: skew-Hermitian, and traceless for SU(N).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgebraElement {
    group: GroupId,
    m: CMatrix,
}

impl GroupElement {
    pub fn identity(group: GroupId) -> Self {
        Self {
            group,
            m: CMatrix::identity(group.order()),
        }
    }

    /// Wrap a matrix after checking the group invariants at `ALGEBRA_TOL`.
    pub fn from_matrix(group: GroupId, m: CMatrix) -> Result<Self> {
        if m.order() != group.order() {
            return Err(Error::usage(format!(
                "{group} expects order {}, got {}",
                group.order(),
                m.order()
            )));
        }
        let e = Self { group, m };
        match e.invariant_violation(ALGEBRA_TOL) {
            None => Ok(e),
            Some(msg) => Err(Error::usage(format!("not an element of {group}: {msg}"))),
        }
    }

    /// Wrap a matrix the caller knows to be in the group.
    #[inline]
    pub fn from_matrix_unchecked(group: GroupId, m: CMatrix) -> Self {
        Self { group, m }
    }

    /// U(1) phase `e^{i theta}`.
    pub fn u1(theta: f64) -> Self {
        Self::from_matrix_unchecked(GroupId::U1, CMatrix::scalar(Complex64::from_polar(1.0, theta)))
    }

    /// Z2 element `+1` or `-1`.
    pub fn z2(positive: bool) -> Self {
        let v = if positive { 1.0 } else { -1.0 };
        Self::from_matrix_unchecked(GroupId::Z2, CMatrix::scalar(Complex64::new(v, 0.0)))
    }

    /// SU(2) element `a0 I + i (a1 s1 + a2 s2 + a3 s3)` for a unit quaternion.
    pub fn su2_from_quaternion(a: [f64; 4]) -> Self {
        Self::from_matrix_unchecked(GroupId::SU2, quaternion_matrix(a))
    }

    #[inline(always)]
    pub fn group(&self) -> GroupId {
        self.group
    }

    #[inline(always)]
    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    /// Description of the first violated invariant, if any.
    pub fn invariant_violation(&self, tol: f64) -> Option<String> {
        let m = &self.m;
        match self.group {
            GroupId::Z2 => {
                let z = m.get(0, 0);
                (z.im != 0.0 || (z.re != 1.0 && z.re != -1.0)).then(|| format!("Z2 entry {z} is not exactly +-1"))
            }
            GroupId::U1 => {
                let d = (m.get(0, 0).norm() - 1.0).abs();
                (d > tol).then(|| format!("|U1 entry| deviates from 1 by {d:.3e}"))
            }
            _ => {
                let u = m.unitarity_defect();
                if u > tol {
                    return Some(format!("unitarity defect {u:.3e}"));
                }
                let d = (m.det() - C1).norm();
                (d > tol).then(|| format!("determinant deviates from 1 by {d:.3e}"))
            }
        }
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.invariant_violation(tol).is_none()
    }

    #[inline]
    fn debug_check(self) -> Self {
        debug_assert!(
            self.is_valid(1e-10),
            "group invariant violated: {:?}",
            self.invariant_violation(1e-10)
        );
        self
    }

    /// Group product `self * b`.
    pub fn multiply(&self, b: &GroupElement) -> Result<GroupElement> {
        if self.group != b.group {
            return Err(Error::GroupMismatch {
                left: self.group,
                right: b.group,
            });
        }
        Ok(Self::from_matrix_unchecked(self.group, self.m.mul(&b.m)).debug_check())
    }

    /// Exact inverse (conjugate transpose).
    #[inline]
    pub fn inverse(&self) -> GroupElement {
        Self::from_matrix_unchecked(self.group, self.m.adjoint())
    }

    #[inline]
    pub fn trace(&self) -> Complex64 {
        self.m.trace()
    }

    #[inline]
    pub fn re_trace(&self) -> f64 {
        self.m.trace().re
    }

    /// Sample from the normalized Haar measure.
    ///
    /// SU(N) uses a complex Gaussian matrix orthonormalized by Gram-Schmidt with
    /// positive diagonal of the triangular factor (the phase convention that
    /// makes the result Haar on U(N)), followed by removal of the determinant
    /// phase.
    pub fn haar_sample(rng: &mut RandomStream, group: GroupId) -> GroupElement {
        match group {
            GroupId::Z2 => Self::z2(rng.uniform() < 0.5),
            GroupId::U1 => Self::u1(TAU * rng.uniform()),
            GroupId::SU2 | GroupId::SU3 => {
                let n = group.order();
                let mut z = CMatrix::zeros(n);
                let s = std::f64::consts::FRAC_1_SQRT_2;
                for i in 0..n {
                    for j in 0..n {
                        z.set(i, j, Complex64::new(s * rng.normal(), s * rng.normal()));
                    }
                }
                let q = gram_schmidt_columns(&z);
                Self::from_matrix_unchecked(group, remove_det_phase(&q)).debug_check()
            }
        }
    }

    /// `exp(spread * X)` for a standard Gaussian algebra element `X`; for Z2 a
    /// sign flip with probability `min(spread, 1)`. The law is invariant under
    /// inversion.
    pub fn random_near_identity(rng: &mut RandomStream, group: GroupId, spread: f64) -> Result<GroupElement> {
        if !(spread > 0.0) {
            return Err(Error::usage(format!("proposal spread must be > 0, got {spread}")));
        }
        Ok(match group {
            GroupId::Z2 => Self::z2(rng.uniform() >= spread.min(1.0)),
            _ => AlgebraElement::gaussian(rng, group).scale(spread).exp_map(),
        })
    }

    /// Project back onto the group: polar (nearest unitary) projection, then
    /// determinant-phase correction for SU(N).
    pub fn reunitarize(&self) -> Result<GroupElement> {
        let r = project_to_group(self.group, &self.m)?;
        Ok(r.debug_check())
    }

    /// Quaternion coordinates of an SU(2) element.
    pub fn su2_quaternion(&self) -> [f64; 4] {
        quaternion_coords(&self.m)
    }
}

/// Nearest group element to `m`, erroring when `m` is further than
/// `DRIFT_LIMIT` (Frobenius) from the result.
pub fn project_to_group(group: GroupId, m: &CMatrix) -> Result<GroupElement> {
    if !m.is_finite() {
        return Err(Error::Numerical("non-finite matrix entries".into()));
    }
    let p = match group {
        GroupId::Z2 => {
            let v = if m.get(0, 0).re >= 0.0 { 1.0 } else { -1.0 };
            CMatrix::scalar(Complex64::new(v, 0.0))
        }
        GroupId::U1 => {
            let z = m.get(0, 0);
            if z.norm() == 0.0 {
                return Err(Error::NumericalDrift { distance: 1.0 });
            }
            CMatrix::scalar(z / z.norm())
        }
        _ => remove_det_phase(&polar_unitary(m).ok_or(Error::NumericalDrift {
            distance: f64::INFINITY,
        })?),
    };
    let distance = m.sub(&p).frobenius_norm();
    if distance > DRIFT_LIMIT {
        return Err(Error::NumericalDrift { distance });
    }
    Ok(GroupElement::from_matrix_unchecked(group, p))
}

/// Unitary polar factor by the Newton iteration `X <- (X + X^-dagger) / 2`.
fn polar_unitary(m: &CMatrix) -> Option<CMatrix> {
    let mut x = *m;
    for _ in 0..60 {
        let next = x.add(&x.inverse()?.adjoint()).scale_real(0.5);
        let change = next.sub(&x).frobenius_norm();
        x = next;
        if change < 1e-15 {
            break;
        }
    }
    Some(x)
}

fn remove_det_phase(u: &CMatrix) -> CMatrix {
    let n = u.order() as f64;
    let phase = u.det().arg();
    u.scale(Complex64::from_polar(1.0, -phase / n))
}

/// Modified Gram-Schmidt on the columns; normalizing by the positive column
/// norm makes every diagonal entry of the implied triangular factor positive.
fn gram_schmidt_columns(z: &CMatrix) -> CMatrix {
    let n = z.order();
    let mut q = *z;
    for j in 0..n {
        for k in 0..j {
            let mut proj = C0;
            for i in 0..n {
                proj += q.get(i, k).conj() * q.get(i, j);
            }
            for i in 0..n {
                let v = q.get(i, j) - proj * q.get(i, k);
                q.set(i, j, v);
            }
        }
        let norm = (0..n).map(|i| q.get(i, j).norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            let v = q.get(i, j) / norm;
            q.set(i, j, v);
        }
    }
    q
}

pub(crate) fn quaternion_matrix(a: [f64; 4]) -> CMatrix {
    CMatrix::from_rows(&[
        &[Complex64::new(a[0], a[3]), Complex64::new(a[2], a[1])],
        &[Complex64::new(-a[2], a[1]), Complex64::new(a[0], -a[3])],
    ])
}

/// Coordinates of the projection of a 2x2 block onto the real span of
/// `{I, i s1, i s2, i s3}`.
pub(crate) fn quaternion_coords(w: &CMatrix) -> [f64; 4] {
    quaternion_coords_block(w, 0, 1)
}

pub(crate) fn quaternion_coords_block(w: &CMatrix, p: usize, q: usize) -> [f64; 4] {
    let (w00, w01, w10, w11) = (w.get(p, p), w.get(p, q), w.get(q, p), w.get(q, q));
    [
        0.5 * (w00.re + w11.re),
        0.5 * (w01.im + w10.im),
        0.5 * (w01.re - w10.re),
        0.5 * (w00.im - w11.im),
    ]
}

impl AlgebraElement {
    /// Wrap a matrix after checking skew-Hermiticity (and tracelessness for SU(N)).
    pub fn new(group: GroupId, m: CMatrix) -> Result<Self> {
        if m.order() != group.order() {
            return Err(Error::usage(format!(
                "{group} algebra expects order {}, got {}",
                group.order(),
                m.order()
            )));
        }
        let skew = m.add(&m.adjoint()).frobenius_norm();
        if skew > ALGEBRA_TOL * (1.0 + m.frobenius_norm()) {
            return Err(Error::usage(format!(
                "matrix is not skew-Hermitian (defect {skew:.3e})"
            )));
        }
        if group.is_special_unitary() && m.trace().norm() > ALGEBRA_TOL * (1.0 + m.frobenius_norm()) {
            return Err(Error::usage("SU(N) algebra element must be traceless"));
        }
        if group == GroupId::Z2 && m.frobenius_norm() != 0.0 {
            return Err(Error::usage("the Z2 algebra is trivial"));
        }
        Ok(Self { group, m })
    }

    pub fn zero(group: GroupId) -> Self {
        Self {
            group,
            m: CMatrix::zeros(group.order()),
        }
    }

    /// `i theta` in the U(1) algebra.
    pub fn u1(theta: f64) -> Self {
        Self {
            group: GroupId::U1,
            m: CMatrix::scalar(Complex64::new(0.0, theta)),
        }
    }

    /// `i (c1 s1 + c2 s2 + c3 s3) / 2` in the SU(2) algebra.
    pub fn su2(c: [f64; 3]) -> Self {
        Self {
            group: GroupId::SU2,
            m: quaternion_matrix([0.0, 0.5 * c[0], 0.5 * c[1], 0.5 * c[2]]),
        }
    }

    /// `i sum_a c_a T_a` with `T_a` the Gell-Mann matrices over 2.
    pub fn su3(c: [f64; 8]) -> Self {
        let h = |re: f64, im: f64| Complex64::new(re, im);
        let s3 = 1.0 / 3f64.sqrt();
        // Hermitian H = sum c_a lambda_a / 2
        let d0 = 0.5 * (c[2] + s3 * c[7]);
        let d1 = 0.5 * (-c[2] + s3 * c[7]);
        let d2 = 0.5 * (-2.0 * s3 * c[7]);
        let h01 = h(0.5 * c[0], -0.5 * c[1]);
        let h02 = h(0.5 * c[3], -0.5 * c[4]);
        let h12 = h(0.5 * c[5], -0.5 * c[6]);
        let herm = CMatrix::from_rows(&[
            &[h(d0, 0.0), h01, h02],
            &[h01.conj(), h(d1, 0.0), h12],
            &[h02.conj(), h12.conj(), h(d2, 0.0)],
        ]);
        Self {
            group: GroupId::SU3,
            m: herm.scale(Complex64::i()),
        }
    }

    /// Standard Gaussian element: independent N(0,1) coordinates in the
    /// generator basis above (zero for Z2).
    pub fn gaussian(rng: &mut RandomStream, group: GroupId) -> Self {
        match group {
            GroupId::Z2 => Self::zero(group),
            GroupId::U1 => Self::u1(rng.normal()),
            GroupId::SU2 => Self::su2([rng.normal(), rng.normal(), rng.normal()]),
            GroupId::SU3 => {
                let mut c = [0.0; 8];
                c.iter_mut().for_each(|x| *x = rng.normal());
                Self::su3(c)
            }
        }
    }

    #[inline(always)]
    pub fn group(&self) -> GroupId {
        self.group
    }

    #[inline(always)]
    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            group: self.group,
            m: self.m.scale_real(s),
        }
    }

    pub fn add(&self, o: &AlgebraElement) -> Self {
        Self {
            group: self.group,
            m: self.m.add(&o.m),
        }
    }

    /// Commutator `[self, o]`.
    pub fn commutator(&self, o: &AlgebraElement) -> Self {
        Self {
            group: self.group,
            m: self.m.mul(&o.m).sub(&o.m.mul(&self.m)),
        }
    }

    /// Matrix exponential. Closed forms for N = 1, 2; Pade scaling and
    /// squaring for SU(3).
    pub fn exp_map(&self) -> GroupElement {
        let m = match self.group {
            GroupId::Z2 => CMatrix::identity(1),
            GroupId::U1 => CMatrix::scalar(self.m.get(0, 0).exp()),
            GroupId::SU2 => {
                // m = i theta n.s, so m^2 = -theta^2 I and det m = theta^2
                let theta = self.m.det().re.max(0.0).sqrt();
                let sinc = if theta < 1e-4 {
                    1.0 - theta * theta / 6.0 + theta.powi(4) / 120.0
                } else {
                    theta.sin() / theta
                };
                CMatrix::identity(2)
                    .scale_real(theta.cos())
                    .add(&self.m.scale_real(sinc))
            }
            GroupId::SU3 => self.m.exp_pade(),
        };
        GroupElement::from_matrix_unchecked(self.group, m).debug_check()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(k: u64) -> RandomStream {
        RandomStream::for_link(0xABCD, k, 0)
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        a.sub(b).frobenius_norm() <= tol
    }

    #[test]
    fn trace_shortcuts_match_products() {
        for group in GroupId::ALL {
            let a = GroupElement::haar_sample(&mut stream(1), group);
            let b = GroupElement::haar_sample(&mut stream(2), group);
            let (a, b) = (a.matrix(), b.matrix());
            assert!((a.trace_mul_adj(b) - a.mul_adj(b).trace()).norm() < 1e-14);
            assert!((a.re_trace_mul(b) - a.mul(b).trace().re).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_is_neutral() {
        let mut rng = stream(1);
        for g in GroupId::ALL {
            let u = GroupElement::haar_sample(&mut rng, g);
            let p = GroupElement::identity(g).multiply(&u).unwrap();
            assert_eq!(p, u);
        }
    }

    #[test]
    fn inverse_cancels() {
        let mut rng = stream(2);
        for g in GroupId::ALL {
            for _ in 0..50 {
                let u = GroupElement::haar_sample(&mut rng, g);
                let p = u.multiply(&u.inverse()).unwrap();
                assert!(close(p.matrix(), &CMatrix::identity(g.order()), 1e-12));
            }
        }
        let z = GroupElement::u1(0.7).inverse();
        assert!((z.matrix().get(0, 0) - Complex64::from_polar(1.0, -0.7)).norm() < 1e-15);
    }

    #[test]
    fn group_mismatch_is_rejected() {
        let a = GroupElement::identity(GroupId::SU2);
        let b = GroupElement::identity(GroupId::SU3);
        assert!(matches!(a.multiply(&b), Err(Error::GroupMismatch { .. })));
    }

    #[test]
    fn products_of_haar_samples_stay_in_group() {
        let mut rng = stream(3);
        for g in [GroupId::SU2, GroupId::SU3] {
            for _ in 0..100 {
                let a = GroupElement::haar_sample(&mut rng, g);
                let b = GroupElement::haar_sample(&mut rng, g);
                assert!(a.multiply(&b).unwrap().is_valid(1e-12));
            }
        }
    }

    #[test]
    fn re_trace_values() {
        assert_eq!(GroupElement::identity(GroupId::SU3).re_trace(), 3.0);
        assert!((GroupElement::u1(0.3).re_trace() - 0.3f64.cos()).abs() < 1e-15);
        let mut rng = stream(4);
        for g in GroupId::ALL {
            let u = GroupElement::haar_sample(&mut rng, g);
            assert!((u.re_trace() - u.inverse().re_trace()).abs() < 1e-14);
        }
    }

    #[test]
    fn re_trace_is_conjugation_invariant() {
        let mut rng = stream(5);
        for g in GroupId::ALL {
            for _ in 0..50 {
                let u = GroupElement::haar_sample(&mut rng, g);
                let v = GroupElement::haar_sample(&mut rng, g);
                let c = v.multiply(&u).unwrap().multiply(&v.inverse()).unwrap();
                assert!((c.re_trace() - u.re_trace()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exp_of_zero_and_u1() {
        for g in GroupId::ALL {
            let e = AlgebraElement::zero(g).exp_map();
            assert_eq!(*e.matrix(), CMatrix::identity(g.order()));
        }
        let e = AlgebraElement::u1(1.1).exp_map();
        assert!((e.matrix().get(0, 0) - Complex64::from_polar(1.0, 1.1)).norm() < 1e-15);
    }

    #[test]
    fn su2_exp_error_is_cubic() {
        // ||exp(m) - (I + m + m^2/2)|| ~ ||m||^3 / 6
        let dir = AlgebraElement::su2([0.3, -0.8, 0.5]);
        let unit = dir.scale(1.0 / dir.matrix().frobenius_norm());
        let err = |h: f64| {
            let m = unit.scale(h);
            let series = CMatrix::identity(2)
                .add(m.matrix())
                .add(&m.matrix().mul(m.matrix()).scale_real(0.5));
            m.exp_map().matrix().sub(&series).frobenius_norm()
        };
        let (e3, e4) = (err(1e-3), err(1e-4));
        let order = (e3 / e4).log10();
        assert!((order - 3.0).abs() < 0.05, "observed order {order}");
    }

    #[test]
    fn exp_of_negative_is_inverse() {
        let mut rng = stream(6);
        for g in [GroupId::U1, GroupId::SU2, GroupId::SU3] {
            for _ in 0..50 {
                let m = AlgebraElement::gaussian(&mut rng, g).scale(2.5);
                let a = m.exp_map();
                let b = m.scale(-1.0).exp_map();
                assert!(close(a.inverse().matrix(), b.matrix(), 1e-12));
                assert!(a.is_valid(1e-12));
            }
        }
    }

    #[test]
    fn su3_exp_matches_taylor_series() {
        let mut rng = stream(7);
        let m = AlgebraElement::gaussian(&mut rng, GroupId::SU3).scale(0.9);
        let mut sum = CMatrix::identity(3);
        let mut term = CMatrix::identity(3);
        for k in 1..40 {
            term = term.mul(m.matrix()).scale_real(1.0 / k as f64);
            sum.add_assign(&term);
        }
        assert!(close(m.exp_map().matrix(), &sum, 1e-13));
    }

    /// Two-sample Kolmogorov-Smirnov distance.
    fn ks_distance(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        d
    }

    #[test]
    fn proposals_are_symmetric_under_inversion() {
        let n = 100_000;
        // critical value at the 0.1% level for two samples of size n
        let crit = 1.95 * (2.0 / n as f64).sqrt();
        for group in [GroupId::U1, GroupId::SU2, GroupId::SU3] {
            let mut r1 = RandomStream::for_link(17, 1, 0);
            let mut r2 = RandomStream::for_link(17, 2, 0);
            let fwd: Vec<GroupElement> = (0..n)
                .map(|_| GroupElement::random_near_identity(&mut r1, group, 0.7).unwrap())
                .collect();
            let inv: Vec<GroupElement> = (0..n)
                .map(|_| {
                    GroupElement::random_near_identity(&mut r2, group, 0.7)
                        .unwrap()
                        .inverse()
                })
                .collect();
            let re = |v: &[GroupElement]| v.iter().map(|u| u.trace().re).collect::<Vec<_>>();
            let im = |v: &[GroupElement]| v.iter().map(|u| u.trace().im).collect::<Vec<_>>();
            let d_re = ks_distance(re(&fwd), re(&inv));
            assert!(d_re < crit, "{group}: Re Tr KS distance {d_re}");
            if group != GroupId::SU2 {
                let d_im = ks_distance(im(&fwd), im(&inv));
                assert!(d_im < crit, "{group}: Im Tr KS distance {d_im}");
            }
        }
    }

    #[test]
    fn near_identity_limits_and_errors() {
        let mut rng = stream(8);
        for g in [GroupId::U1, GroupId::SU2, GroupId::SU3] {
            let r = GroupElement::random_near_identity(&mut rng, g, 1e-9).unwrap();
            assert!(close(r.matrix(), &CMatrix::identity(g.order()), 1e-7));
            assert!(r.is_valid(1e-12));
        }
        assert!(GroupElement::random_near_identity(&mut rng, GroupId::SU2, 0.0).is_err());
        assert!(GroupElement::random_near_identity(&mut rng, GroupId::SU2, -1.0).is_err());
        // spread >= 1 always flips a Z2 link
        for _ in 0..100 {
            let r = GroupElement::random_near_identity(&mut rng, GroupId::Z2, 1.5).unwrap();
            assert_eq!(r.re_trace(), -1.0);
        }
    }

    #[test]
    fn reunitarize_cases() {
        let mut rng = stream(9);
        let u = GroupElement::haar_sample(&mut rng, GroupId::SU2);
        let r = u.reunitarize().unwrap();
        assert!(close(r.matrix(), u.matrix(), 1e-14));

        let z = CMatrix::scalar(Complex64::from_polar(1.0001, 0.4));
        let r = project_to_group(GroupId::U1, &z).unwrap();
        assert!((r.matrix().get(0, 0) - Complex64::from_polar(1.0, 0.4)).norm() < 1e-15);

        let far = CMatrix::identity(2).scale_real(1.5);
        assert!(matches!(
            project_to_group(GroupId::SU2, &far),
            Err(Error::NumericalDrift { .. })
        ));
    }

    #[test]
    fn reunitarize_su3_perturbation() {
        let mut rng = stream(10);
        let u = GroupElement::haar_sample(&mut rng, GroupId::SU3);
        let mut e = CMatrix::zeros(3);
        for i in 0..3 {
            for j in 0..3 {
                e.set(i, j, Complex64::new(rng.normal(), rng.normal()));
            }
        }
        let e = e.scale_real(1e-8 / e.frobenius_norm());
        let r = project_to_group(GroupId::SU3, &u.matrix().add(&e)).unwrap();
        assert!(r.matrix().unitarity_defect() < 1e-14);
        assert!((r.matrix().det() - C1).norm() < 1e-14);
        assert!(close(r.matrix(), u.matrix(), 1e-7));

        // Oracle: the unitary polar factor of A is W V^dagger from the SVD A = W S V^dagger.
        let a = u.matrix().add(&e);
        let na = nalgebra::Matrix3::from_fn(|i, j| a.get(i, j));
        let svd = na.svd(true, true);
        let polar = svd.u.unwrap() * svd.v_t.unwrap();
        let det = polar.determinant();
        let polar = polar * Complex64::from_polar(1.0, -det.arg() / 3.0);
        let oracle = CMatrix::from_rows(&[
            &[polar[(0, 0)], polar[(0, 1)], polar[(0, 2)]],
            &[polar[(1, 0)], polar[(1, 1)], polar[(1, 2)]],
            &[polar[(2, 0)], polar[(2, 1)], polar[(2, 2)]],
        ]);
        assert!(close(r.matrix(), &oracle, 1e-13));
    }

    #[test]
    fn from_matrix_validates() {
        assert!(GroupElement::from_matrix(GroupId::Z2, CMatrix::scalar(Complex64::new(0.5, 0.0))).is_err());
        assert!(GroupElement::from_matrix(GroupId::SU2, CMatrix::identity(2).scale_real(-1.0)).is_ok());
        assert!(GroupElement::from_matrix(GroupId::SU2, CMatrix::identity(3)).is_err());
        let phase = CMatrix::identity(2).scale(Complex64::from_polar(1.0, 0.3));
        assert!(GroupElement::from_matrix(GroupId::SU2, phase).is_err());
        assert!(AlgebraElement::new(GroupId::SU2, CMatrix::identity(2)).is_err());
        assert!(AlgebraElement::new(GroupId::SU3, AlgebraElement::su3([1.0; 8]).m).is_ok());
    }

    #[test]
    fn quaternion_roundtrip() {
        let q = [0.5, 0.5, -0.5, 0.5];
        let u = GroupElement::su2_from_quaternion(q);
        assert!(u.is_valid(1e-14));
        assert_eq!(u.su2_quaternion(), q);
    }
}
