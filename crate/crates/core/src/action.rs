//! Gauge field configurations and the Wilson action
//! `S = sum_p Re Tr(I - U_p)`, with no `1/N` normalization.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{project_to_group, CMatrix, GroupElement, GroupId};
use crate::lattice::{DirectedLink, Geometry, LatticeShape, LinkIndex, PlaquetteIndex, Site};
use crate::rng::RandomStream;

/// Value of the Wilson action; always `>= 0`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ActionValue(pub f64);

impl ActionValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// One group element per positively oriented link, stored densely in link
/// enumeration order.
#[derive(Clone, Debug)]
pub struct Configuration {
    geometry: Arc<Geometry>,
    group: GroupId,
    links: Vec<CMatrix>,
}

impl Configuration {
    pub fn cold_start(shape: &LatticeShape, group: GroupId) -> Self {
        Self::cold_start_on(Arc::new(Geometry::new(shape.clone())), group)
    }

    pub fn cold_start_on(geometry: Arc<Geometry>, group: GroupId) -> Self {
        let links = vec![CMatrix::identity(group.order()); geometry.link_count()];
        Self { geometry, group, links }
    }

    /// Independent Haar-distributed links, drawn in link order from `rng`.
    pub fn hot_start(shape: &LatticeShape, group: GroupId, rng: &mut RandomStream) -> Self {
        let mut cfg = Self::cold_start(shape, group);
        for m in cfg.links.iter_mut() {
            *m = *GroupElement::haar_sample(rng, group).matrix();
        }
        cfg
    }

    /// Build from explicit link values in enumeration order.
    pub fn from_links(geometry: Arc<Geometry>, group: GroupId, links: Vec<GroupElement>) -> Result<Self> {
        if links.len() != geometry.link_count() {
            return Err(Error::usage(format!(
                "expected {} links, got {}",
                geometry.link_count(),
                links.len()
            )));
        }
        if let Some(bad) = links.iter().find(|u| u.group() != group) {
            return Err(Error::GroupMismatch {
                left: group,
                right: bad.group(),
            });
        }
        Ok(Self {
            geometry,
            group,
            links: links.iter().map(|u| *u.matrix()).collect(),
        })
    }

    pub fn geometry(&self) -> &Arc<Geometry> {
        &self.geometry
    }

    pub fn shape(&self) -> &LatticeShape {
        self.geometry.shape()
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    #[inline]
    pub fn link(&self, id: usize) -> GroupElement {
        GroupElement::from_matrix_unchecked(self.group, self.links[id])
    }

    #[inline]
    pub fn link_matrix(&self, id: usize) -> &CMatrix {
        &self.links[id]
    }

    pub fn links(&self) -> impl Iterator<Item = GroupElement> + '_ {
        self.links
            .iter()
            .map(|m| GroupElement::from_matrix_unchecked(self.group, *m))
    }

    /// Value on a link addressed by site and direction; reading the reverse
    /// traversal is `link_value(..).inverse()`.
    pub fn link_value(&self, l: &LinkIndex) -> Result<GroupElement> {
        let id = self
            .geometry
            .link_id(l)
            .ok_or_else(|| Error::usage(format!("link {l:?} is not in the lattice")))?;
        Ok(self.link(id))
    }

    pub fn set_link(&mut self, id: usize, u: GroupElement) -> Result<()> {
        if u.group() != self.group {
            return Err(Error::GroupMismatch {
                left: self.group,
                right: u.group(),
            });
        }
        if id >= self.links.len() {
            return Err(Error::usage(format!("link id {id} out of range")));
        }
        self.links[id] = *u.matrix();
        Ok(())
    }

    #[inline]
    pub(crate) fn set_link_matrix(&mut self, id: usize, m: CMatrix) {
        self.links[id] = m;
    }

    /// Ordered product along a directed path, inverting reversed links.
    #[inline]
    pub fn path_product(&self, path: &[DirectedLink]) -> CMatrix {
        let mut it = path.iter();
        let first = it.next().expect("nonempty path");
        let mut acc = self.directed(first);
        for d in it {
            acc = if d.reversed {
                acc.mul_adj(&self.links[d.link])
            } else {
                acc.mul(&self.links[d.link])
            };
        }
        acc
    }

    #[inline]
    fn directed(&self, d: &DirectedLink) -> CMatrix {
        if d.reversed {
            self.links[d.link].adjoint()
        } else {
            self.links[d.link]
        }
    }

    /// `U_p` for the plaquette with enumeration id `p`.
    #[inline]
    pub fn plaquette_matrix(&self, p: usize) -> CMatrix {
        self.path_product(self.geometry.plaquette_links(p))
    }

    pub fn plaquette_product(&self, p: &PlaquetteIndex) -> Result<GroupElement> {
        let links = self.shape().plaquette_links(p)?;
        let path: Vec<DirectedLink> = links
            .iter()
            .map(|&l| self.geometry.directed(l))
            .collect::<Result<_>>()?;
        Ok(GroupElement::from_matrix_unchecked(
            self.group,
            self.path_product(&path),
        ))
    }

    pub fn wilson_action(&self) -> ActionValue {
        let n = self.group.order() as f64;
        let s = (0..self.geometry.plaquettes().len())
            .map(|p| n - self.plaquette_matrix(p).trace().re)
            .sum();
        ActionValue(s)
    }

    /// Sum of the staple paths of link `id`: `sum_{p contains l} Re Tr U_p =
    /// Re Tr(U_l * staple_sum)`.
    #[inline]
    pub fn staple_sum(&self, id: usize) -> CMatrix {
        let mut acc = CMatrix::zeros(self.group.order());
        for st in self.geometry.staples(id) {
            acc.add_assign(&self.path_product(st));
        }
        acc
    }

    /// `S(cfg with l -> new) - S(cfg)` from the staples of `l` alone.
    pub fn local_action_delta(&self, l: &LinkIndex, new: &GroupElement) -> Result<f64> {
        if new.group() != self.group {
            return Err(Error::GroupMismatch {
                left: self.group,
                right: new.group(),
            });
        }
        let id = self
            .geometry
            .link_id(l)
            .ok_or_else(|| Error::usage(format!("link {l:?} is not in the lattice")))?;
        Ok(self.local_action_delta_id(id, new.matrix()))
    }

    #[inline]
    pub(crate) fn local_action_delta_id(&self, id: usize, new: &CMatrix) -> f64 {
        let staples = self.staple_sum(id);
        -new.sub(&self.links[id]).re_trace_mul(&staples)
    }

    /// `U(x, y) -> g(x) U(x, y) g(y)^-1` with `g` indexed by site index.
    pub fn gauge_transform(&self, g: &[GroupElement]) -> Result<Configuration> {
        let shape = self.shape();
        if g.len() != shape.site_count() {
            return Err(Error::usage(format!(
                "gauge transformation needs {} site values, got {}",
                shape.site_count(),
                g.len()
            )));
        }
        if let Some(bad) = g.iter().find(|u| u.group() != self.group) {
            return Err(Error::GroupMismatch {
                left: self.group,
                right: bad.group(),
            });
        }
        let mut out = self.clone();
        for (id, l) in self.geometry.links().iter().enumerate() {
            let head = shape.shift(&l.site, l.dir, true).expect("link exists");
            let gx = g[shape.site_index(&l.site)].matrix();
            let gy = g[shape.site_index(&head)].matrix();
            out.links[id] = gx.mul(&self.links[id]).mul_adj(gy);
        }
        Ok(out)
    }

    /// Random gauge transformation field, one Haar element per site.
    pub fn random_gauge(&self, rng: &mut RandomStream) -> Vec<GroupElement> {
        (0..self.shape().site_count())
            .map(|_| GroupElement::haar_sample(rng, self.group))
            .collect()
    }

    /// Project every link back onto the group.
    pub fn reunitarize(&mut self) -> Result<()> {
        for m in self.links.iter_mut() {
            *m = *project_to_group(self.group, m)?.matrix();
        }
        Ok(())
    }

    /// Largest invariant violation over all links (0 when all are exact).
    pub fn max_unitarity_defect(&self) -> f64 {
        self.links
            .iter()
            .map(|m| {
                let mut d = m.unitarity_defect();
                if self.group.is_special_unitary() {
                    d = d.max((m.det() - num_complex::Complex64::new(1.0, 0.0)).norm());
                }
                d
            })
            .fold(0.0, f64::max)
    }

    pub fn site(&self, index: usize) -> Site {
        self.shape().site_at(index)
    }
}
