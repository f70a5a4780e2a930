//! Finite hypercubic lattices: sites, links, plaquettes, staples and loops.
//!
//! Only positively oriented links are stored. A traversal against the storage
//! orientation is a [`DirectedLink`] with `reversed = true`, and consumers apply
//! the inverse at read time.

use std::fmt;

use crate::error::{Error, Result};

pub const MAX_DIMS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticeShape {
    extents: Vec<usize>,
    boundary: Boundary,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    coords: [usize; MAX_DIMS],
    ndims: u8,
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

/// The positively oriented link from `site` to `site + e_dir`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LinkIndex {
    pub site: Site,
    pub dir: usize,
}

/// A stored link (by enumeration id) and the direction it is traversed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DirectedLink {
    pub link: usize,
    pub reversed: bool,
}

impl DirectedLink {
    fn fwd(link: usize) -> Self {
        Self { link, reversed: false }
    }
    fn rev(link: usize) -> Self {
        Self { link, reversed: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PlaquetteIndex {
    pub site: Site,
    /// Axis pair `(mu, nu)` with `mu < nu`.
    pub plane: (usize, usize),
}

/// One step of a lattice path along `axis`, forwards or backwards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Step {
    pub axis: usize,
    pub forward: bool,
}

impl Step {
    pub fn plus(axis: usize) -> Self {
        Self { axis, forward: true }
    }
    pub fn minus(axis: usize) -> Self {
        Self { axis, forward: false }
    }
}

/// A closed directed lattice path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopSpec {
    pub start: Site,
    pub steps: Vec<Step>,
}

impl Site {
    pub fn new(coords: &[usize]) -> Self {
        assert!(coords.len() <= MAX_DIMS);
        let mut c = [0; MAX_DIMS];
        c[..coords.len()].copy_from_slice(coords);
        Self {
            coords: c,
            ndims: coords.len() as u8,
        }
    }

    pub fn origin(ndims: usize) -> Self {
        Self::new(&vec![0; ndims])
    }

    pub fn coords(&self) -> &[usize] {
        &self.coords[..self.ndims as usize]
    }

    pub fn ndims(&self) -> usize {
        self.ndims as usize
    }
}

impl LatticeShape {
    pub fn new(extents: &[usize], boundary: Boundary) -> Result<Self> {
        if !(2..=MAX_DIMS).contains(&extents.len()) {
            return Err(Error::usage(format!(
                "lattice dimension must be 2..=4, got {}",
                extents.len()
            )));
        }
        if let Some(&l) = extents.iter().find(|&&l| l < 2) {
            return Err(Error::usage(format!("every extent must be >= 2, got {l}")));
        }
        extents
            .iter()
            .try_fold(1usize, |acc, &l| acc.checked_mul(l))
            .and_then(|v| v.checked_mul(extents.len() * 16))
            .filter(|&v| v <= u32::MAX as usize)
            .ok_or_else(|| Error::usage("lattice too large"))?;
        Ok(Self {
            extents: extents.to_vec(),
            boundary,
        })
    }

    pub fn periodic(extents: &[usize]) -> Result<Self> {
        Self::new(extents, Boundary::Periodic)
    }

    pub fn open(extents: &[usize]) -> Result<Self> {
        Self::new(extents, Boundary::Open)
    }

    pub fn ndims(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn site_count(&self) -> usize {
        self.extents.iter().product()
    }

    /// Lexicographic site index, last axis fastest.
    pub fn site_index(&self, s: &Site) -> usize {
        s.coords()
            .iter()
            .zip(&self.extents)
            .fold(0, |acc, (&c, &l)| acc * l + c)
    }

    pub fn site_at(&self, mut index: usize) -> Site {
        let n = self.ndims();
        let mut c = [0; MAX_DIMS];
        for a in (0..n).rev() {
            c[a] = index % self.extents[a];
            index /= self.extents[a];
        }
        Site::new(&c[..n])
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.site_count()).map(|i| self.site_at(i))
    }

    pub fn contains(&self, s: &Site) -> bool {
        s.ndims() == self.ndims() && s.coords().iter().zip(&self.extents).all(|(&c, &l)| c < l)
    }

    /// `s + sign * e_axis`, or `None` when it leaves an open lattice.
    pub fn shift(&self, s: &Site, axis: usize, forward: bool) -> Option<Site> {
        let l = self.extents[axis];
        let c = s.coords[axis];
        let next = match (forward, self.boundary) {
            (true, Boundary::Periodic) => (c + 1) % l,
            (false, Boundary::Periodic) => (c + l - 1) % l,
            (true, Boundary::Open) => (c + 1 < l).then_some(c + 1)?,
            (false, Boundary::Open) => c.checked_sub(1)?,
        };
        let mut r = *s;
        r.coords[axis] = next;
        Some(r)
    }

    fn link_exists(&self, l: &LinkIndex) -> bool {
        self.contains(&l.site)
            && l.dir < self.ndims()
            && (self.boundary == Boundary::Periodic || l.site.coords[l.dir] + 1 < self.extents[l.dir])
    }

    /// Every positively oriented link once, ordered by site then direction.
    pub fn enumerate_links(&self) -> Vec<LinkIndex> {
        let n = self.ndims();
        self.sites()
            .flat_map(|site| (0..n).map(move |dir| LinkIndex { site, dir }))
            .filter(|l| self.link_exists(l))
            .collect()
    }

    /// Every plaquette once, ordered by site then plane.
    pub fn enumerate_plaquettes(&self) -> Vec<PlaquetteIndex> {
        let planes = self.planes();
        self.sites()
            .flat_map(|site| planes.iter().map(move |&plane| PlaquetteIndex { site, plane }))
            .filter(|p| self.plaquette_exists(p))
            .collect()
    }

    /// Axis pairs `(mu, nu)` with `mu < nu`.
    pub fn planes(&self) -> Vec<(usize, usize)> {
        let n = self.ndims();
        (0..n).flat_map(|mu| (mu + 1..n).map(move |nu| (mu, nu))).collect()
    }

    fn plaquette_exists(&self, p: &PlaquetteIndex) -> bool {
        let (mu, nu) = p.plane;
        self.contains(&p.site)
            && mu < nu
            && nu < self.ndims()
            && (self.boundary == Boundary::Periodic
                || (p.site.coords[mu] + 1 < self.extents[mu] && p.site.coords[nu] + 1 < self.extents[nu]))
    }

    /// The cycle `x -> x+mu -> x+mu+nu -> x+nu -> x` as links plus reversal flags.
    pub fn plaquette_links(&self, p: &PlaquetteIndex) -> Result<[(LinkIndex, bool); 4]> {
        if !self.plaquette_exists(p) {
            return Err(Error::usage(format!("plaquette {p:?} is not in the lattice")));
        }
        let (mu, nu) = p.plane;
        let x = p.site;
        let xm = self.shift(&x, mu, true).expect("checked");
        let xn = self.shift(&x, nu, true).expect("checked");
        Ok([
            (LinkIndex { site: x, dir: mu }, false),
            (LinkIndex { site: xm, dir: nu }, false),
            (LinkIndex { site: xn, dir: mu }, true),
            (LinkIndex { site: x, dir: nu }, true),
        ])
    }

    /// The three-link paths from `head(l)` back to `tail(l)` that close `l`
    /// into a plaquette, ordered by the transverse axis, upper before lower.
    pub fn staples(&self, l: &LinkIndex) -> Result<Vec<[(LinkIndex, bool); 3]>> {
        if !self.link_exists(l) {
            return Err(Error::usage(format!("link {l:?} is not in the lattice")));
        }
        let mu = l.dir;
        let x = l.site;
        let xm = self.shift(&x, mu, true).expect("link exists");
        let mut out = Vec::with_capacity(2 * (self.ndims() - 1));
        for nu in (0..self.ndims()).filter(|&nu| nu != mu) {
            // x + nu exists iff x + mu + nu does: they share the nu coordinate
            if let Some(xn) = self.shift(&x, nu, true) {
                out.push([
                    (LinkIndex { site: xm, dir: nu }, false),
                    (LinkIndex { site: xn, dir: mu }, true),
                    (LinkIndex { site: x, dir: nu }, true),
                ]);
            }
            if let (Some(xd), Some(xmd)) = (self.shift(&x, nu, false), self.shift(&xm, nu, false)) {
                out.push([
                    (LinkIndex { site: xmd, dir: nu }, true),
                    (LinkIndex { site: xd, dir: mu }, true),
                    (LinkIndex { site: xd, dir: nu }, false),
                ]);
            }
        }
        Ok(out)
    }

    /// `R` steps `+mu`, `T` steps `+nu`, `R` steps `-mu`, `T` steps `-nu`.
    pub fn rectangular_loop(&self, origin: Site, plane: (usize, usize), r: usize, t: usize) -> Result<LoopSpec> {
        let (mu, nu) = plane;
        let n = self.ndims();
        if mu >= n || nu >= n || mu == nu {
            return Err(Error::usage(format!("invalid plane {plane:?} for {n} dimensions")));
        }
        if r < 1 || t < 1 {
            return Err(Error::usage("loop sides must be >= 1"));
        }
        if !self.contains(&origin) {
            return Err(Error::usage(format!("origin {origin:?} outside the lattice")));
        }
        match self.boundary {
            Boundary::Periodic => {
                if r >= self.extents[mu] || t >= self.extents[nu] {
                    return Err(Error::usage(format!(
                        "{r}x{t} loop would wind around the {}x{} torus plane",
                        self.extents[mu], self.extents[nu]
                    )));
                }
            }
            Boundary::Open => {
                if origin.coords[mu] + r >= self.extents[mu] || origin.coords[nu] + t >= self.extents[nu] {
                    return Err(Error::usage(format!(
                        "{r}x{t} loop at {origin:?} exceeds the open lattice"
                    )));
                }
            }
        }
        let steps = std::iter::repeat_n(Step::plus(mu), r)
            .chain(std::iter::repeat_n(Step::plus(nu), t))
            .chain(std::iter::repeat_n(Step::minus(mu), r))
            .chain(std::iter::repeat_n(Step::minus(nu), t))
            .collect();
        Ok(LoopSpec { start: origin, steps })
    }

    /// Resolve a loop into the links it traverses; fails unless it is a
    /// nonempty closed path inside the lattice.
    pub fn loop_links(&self, spec: &LoopSpec) -> Result<Vec<(LinkIndex, bool)>> {
        if spec.steps.is_empty() {
            return Err(Error::usage("loop has no steps"));
        }
        if !self.contains(&spec.start) {
            return Err(Error::usage("loop start outside the lattice"));
        }
        let mut at = spec.start;
        let mut out = Vec::with_capacity(spec.steps.len());
        for step in &spec.steps {
            if step.axis >= self.ndims() {
                return Err(Error::usage(format!("step axis {} out of range", step.axis)));
            }
            let next = self
                .shift(&at, step.axis, step.forward)
                .ok_or_else(|| Error::usage("loop leaves the open lattice"))?;
            if step.forward {
                out.push((
                    LinkIndex {
                        site: at,
                        dir: step.axis,
                    },
                    false,
                ));
            } else {
                out.push((
                    LinkIndex {
                        site: next,
                        dir: step.axis,
                    },
                    true,
                ));
            }
            at = next;
        }
        if at != spec.start {
            return Err(Error::usage("loop is not closed"));
        }
        Ok(out)
    }
}

/// Precomputed index tables for one lattice shape.
#[derive(Clone, Debug)]
pub struct Geometry {
    shape: LatticeShape,
    links: Vec<LinkIndex>,
    /// site_index * ndims + dir -> link id
    link_ids: Vec<Option<u32>>,
    plaquettes: Vec<PlaquetteIndex>,
    plaquette_links: Vec<[DirectedLink; 4]>,
    staples: Vec<Vec<[DirectedLink; 3]>>,
    classes: Vec<Vec<usize>>,
}

impl Geometry {
    pub fn new(shape: LatticeShape) -> Self {
        let n = shape.ndims();
        let links = shape.enumerate_links();
        let mut link_ids = vec![None; shape.site_count() * n];
        for (id, l) in links.iter().enumerate() {
            link_ids[shape.site_index(&l.site) * n + l.dir] = Some(id as u32);
        }
        let resolve = |(l, rev): (LinkIndex, bool)| {
            let id = link_ids[shape.site_index(&l.site) * n + l.dir].expect("link enumerated") as usize;
            if rev {
                DirectedLink::rev(id)
            } else {
                DirectedLink::fwd(id)
            }
        };
        let plaquettes = shape.enumerate_plaquettes();
        let plaquette_links = plaquettes
            .iter()
            .map(|p| shape.plaquette_links(p).expect("enumerated").map(resolve))
            .collect();
        let staples = links
            .iter()
            .map(|l| {
                shape
                    .staples(l)
                    .expect("enumerated")
                    .into_iter()
                    .map(|s| s.map(resolve))
                    .collect()
            })
            .collect();
        let classes = checkerboard_classes(&shape, &links);
        Self {
            shape,
            links,
            link_ids,
            plaquettes,
            plaquette_links,
            staples,
            classes,
        }
    }

    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn ndims(&self) -> usize {
        self.shape.ndims()
    }

    pub fn links(&self) -> &[LinkIndex] {
        &self.links
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn link_id(&self, l: &LinkIndex) -> Option<usize> {
        if !self.shape.contains(&l.site) || l.dir >= self.ndims() {
            return None;
        }
        self.link_ids[self.shape.site_index(&l.site) * self.ndims() + l.dir].map(|v| v as usize)
    }

    /// Link id for `site + axis`, if that link exists.
    #[inline]
    pub fn link_id_at(&self, site_index: usize, dir: usize) -> Option<usize> {
        self.link_ids[site_index * self.ndims() + dir].map(|v| v as usize)
    }

    pub fn plaquettes(&self) -> &[PlaquetteIndex] {
        &self.plaquettes
    }

    pub fn plaquette_links(&self, p: usize) -> &[DirectedLink; 4] {
        &self.plaquette_links[p]
    }

    pub fn staples(&self, link: usize) -> &[[DirectedLink; 3]] {
        &self.staples[link]
    }

    /// Link classes updated one after another; no two links of a class share
    /// a plaquette.
    pub fn checkerboard_classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn directed(&self, (l, rev): (LinkIndex, bool)) -> Result<DirectedLink> {
        let id = self
            .link_id(&l)
            .ok_or_else(|| Error::usage(format!("link {l:?} is not in the lattice")))?;
        Ok(if rev {
            DirectedLink::rev(id)
        } else {
            DirectedLink::fwd(id)
        })
    }

    pub fn loop_links(&self, spec: &LoopSpec) -> Result<Vec<DirectedLink>> {
        self.shape
            .loop_links(spec)?
            .into_iter()
            .map(|l| self.directed(l))
            .collect()
    }
}

/// Colouring of one axis such that neighbouring coordinates (including the
/// periodic wrap) differ by +-1 modulo `modulus`.
fn axis_colouring(extent: usize, periodic: bool, modulus: usize) -> Vec<usize> {
    if modulus == 2 || !periodic || extent.is_multiple_of(2) {
        return (0..extent).map(|c| c % 2).collect();
    }
    // Odd periodic extent with modulus 3: `up` steps of +1 then -1 steps, with
    // up - down = 0 (mod 3) so the wrap-around step is consistent too.
    let up = (2 * extent) % 3;
    let mut colours = Vec::with_capacity(extent);
    let mut c = 0usize;
    for i in 0..extent {
        colours.push(c);
        c = if i < up { (c + 1) % 3 } else { (c + 2) % 3 };
    }
    debug_assert_eq!(c, 0);
    colours
}

fn checkerboard_classes(shape: &LatticeShape, links: &[LinkIndex]) -> Vec<Vec<usize>> {
    let periodic = shape.boundary() == Boundary::Periodic;
    let modulus = if periodic && shape.extents().iter().any(|l| l % 2 == 1) {
        3
    } else {
        2
    };
    let colourings: Vec<Vec<usize>> = shape
        .extents()
        .iter()
        .map(|&l| axis_colouring(l, periodic, modulus))
        .collect();
    let n = shape.ndims();
    let mut classes = vec![Vec::new(); n * modulus];
    for (id, l) in links.iter().enumerate() {
        let colour = l
            .site
            .coords()
            .iter()
            .zip(&colourings)
            .map(|(&c, col)| col[c])
            .sum::<usize>()
            % modulus;
        classes[l.dir * modulus + colour].push(id);
    }
    classes.retain(|c| !c.is_empty());
    classes
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn link_counts() {
        assert_eq!(
            LatticeShape::periodic(&[4, 4, 4, 4]).unwrap().enumerate_links().len(),
            1024
        );
        assert_eq!(LatticeShape::periodic(&[3, 3]).unwrap().enumerate_links().len(), 18);
        let open = LatticeShape::open(&[2, 2]).unwrap().enumerate_links();
        assert_eq!(open.len(), 4);
    }

    #[test]
    fn plaquette_counts() {
        assert_eq!(
            LatticeShape::periodic(&[4, 4, 4, 4])
                .unwrap()
                .enumerate_plaquettes()
                .len(),
            1536
        );
        assert_eq!(LatticeShape::periodic(&[3, 3]).unwrap().enumerate_plaquettes().len(), 9);
        assert_eq!(LatticeShape::open(&[2, 2]).unwrap().enumerate_plaquettes().len(), 1);
    }

    #[test]
    fn invalid_shapes() {
        assert!(LatticeShape::periodic(&[4]).is_err());
        assert!(LatticeShape::periodic(&[4, 4, 4, 4, 4]).is_err());
        assert!(LatticeShape::periodic(&[4, 1]).is_err());
    }

    #[test]
    fn cardinalities_for_small_shapes() {
        let extents = [2, 3, 4];
        for n in 2..=4 {
            let mut shapes: Vec<Vec<usize>> = vec![vec![]];
            for _ in 0..n {
                shapes = shapes
                    .into_iter()
                    .flat_map(|s| {
                        extents.iter().map(move |&l| {
                            let mut t = s.clone();
                            t.push(l);
                            t
                        })
                    })
                    .collect();
            }
            for ext in shapes {
                let sites: usize = ext.iter().product();
                let p = LatticeShape::periodic(&ext).unwrap();
                let links = p.enumerate_links();
                let plaqs = p.enumerate_plaquettes();
                assert_eq!(links.len(), n * sites);
                assert_eq!(plaqs.len(), n * (n - 1) / 2 * sites);
                assert_eq!(links.iter().collect::<HashSet<_>>().len(), links.len());
                assert_eq!(plaqs.iter().collect::<HashSet<_>>().len(), plaqs.len());

                let o = LatticeShape::open(&ext).unwrap();
                let open_links: usize = (0..n).map(|mu| sites / ext[mu] * (ext[mu] - 1)).sum();
                assert_eq!(o.enumerate_links().len(), open_links);
            }
        }
    }

    #[test]
    fn lexicographic_order_last_axis_fastest() {
        let s = LatticeShape::periodic(&[2, 3]).unwrap();
        let coords: Vec<Vec<usize>> = s.sites().map(|x| x.coords().to_vec()).collect();
        assert_eq!(coords[0], vec![0, 0]);
        assert_eq!(coords[1], vec![0, 1]);
        assert_eq!(coords[3], vec![1, 0]);
        let links = s.enumerate_links();
        assert_eq!((links[0].site.coords().to_vec(), links[0].dir), (vec![0, 0], 0));
        assert_eq!((links[1].site.coords().to_vec(), links[1].dir), (vec![0, 0], 1));
    }

    #[test]
    fn plaquette_cycle_at_origin() {
        let s = LatticeShape::periodic(&[4, 4]).unwrap();
        let o = Site::origin(2);
        let p = PlaquetteIndex { site: o, plane: (0, 1) };
        let links = s.plaquette_links(&p).unwrap();
        assert_eq!(links[0], (LinkIndex { site: o, dir: 0 }, false));
        assert_eq!(
            links[1],
            (
                LinkIndex {
                    site: Site::new(&[1, 0]),
                    dir: 1
                },
                false
            )
        );
        assert_eq!(
            links[2],
            (
                LinkIndex {
                    site: Site::new(&[0, 1]),
                    dir: 0
                },
                true
            )
        );
        assert_eq!(links[3], (LinkIndex { site: o, dir: 1 }, true));
    }

    #[test]
    fn single_open_plaquette_uses_all_links() {
        let s = LatticeShape::open(&[2, 2]).unwrap();
        let p = s.enumerate_plaquettes()[0];
        let used: HashSet<LinkIndex> = s.plaquette_links(&p).unwrap().iter().map(|x| x.0).collect();
        let all: HashSet<LinkIndex> = s.enumerate_links().into_iter().collect();
        assert_eq!(used, all);
    }

    fn walk(shape: &LatticeShape, start: Site, path: &[(LinkIndex, bool)]) -> Site {
        let mut at = start;
        for &(l, rev) in path {
            let head = shape.shift(&l.site, l.dir, true).unwrap();
            if rev {
                assert_eq!(at, head);
                at = l.site;
            } else {
                assert_eq!(at, l.site);
                at = head;
            }
        }
        at
    }

    #[test]
    fn plaquettes_and_staples_are_closed_paths() {
        let s = LatticeShape::periodic(&[3, 2, 4]).unwrap();
        for p in s.enumerate_plaquettes() {
            assert_eq!(walk(&s, p.site, &s.plaquette_links(&p).unwrap()), p.site);
        }
        for l in s.enumerate_links() {
            let head = s.shift(&l.site, l.dir, true).unwrap();
            for st in s.staples(&l).unwrap() {
                assert_eq!(walk(&s, head, &st), l.site);
            }
        }
    }

    #[test]
    fn staple_counts() {
        let s2 = LatticeShape::periodic(&[4, 4]).unwrap();
        let s4 = LatticeShape::periodic(&[3, 3, 3, 3]).unwrap();
        let o = LatticeShape::open(&[2, 2]).unwrap();
        assert!(s2.enumerate_links().iter().all(|l| s2.staples(l).unwrap().len() == 2));
        assert!(s4.enumerate_links().iter().all(|l| s4.staples(l).unwrap().len() == 6));
        assert!(o.enumerate_links().iter().all(|l| o.staples(l).unwrap().len() == 1));
    }

    /// Each plaquette containing a link appears exactly once among its staples.
    #[test]
    fn staples_match_plaquettes() {
        for shape in [
            LatticeShape::periodic(&[2, 3, 2]).unwrap(),
            LatticeShape::periodic(&[3, 3]).unwrap(),
            LatticeShape::open(&[3, 4]).unwrap(),
            LatticeShape::periodic(&[2, 2, 2, 2]).unwrap(),
        ] {
            let geo = Geometry::new(shape.clone());
            for id in 0..geo.link_count() {
                // plaquettes (as sets of links) containing this link
                let mut from_plaqs: Vec<Vec<usize>> = (0..geo.plaquettes().len())
                    .filter(|&p| geo.plaquette_links(p).iter().any(|d| d.link == id))
                    .map(|p| {
                        let mut v: Vec<usize> = geo.plaquette_links(p).iter().map(|d| d.link).collect();
                        v.sort();
                        v
                    })
                    .collect();
                let mut from_staples: Vec<Vec<usize>> = geo
                    .staples(id)
                    .iter()
                    .map(|s| {
                        let mut v: Vec<usize> = s.iter().map(|d| d.link).chain([id]).collect();
                        v.sort();
                        v
                    })
                    .collect();
                from_plaqs.sort();
                from_staples.sort();
                assert_eq!(from_plaqs, from_staples, "{shape:?} link {id}");
            }
        }
    }

    #[test]
    fn rectangular_loop_shape() {
        let s = LatticeShape::periodic(&[5, 5, 5]).unwrap();
        let lp = s.rectangular_loop(Site::new(&[1, 2, 3]), (0, 2), 2, 3).unwrap();
        assert_eq!(lp.steps.len(), 10);
        assert!(s.loop_links(&lp).is_ok());

        let one = s.rectangular_loop(Site::origin(3), (0, 1), 1, 1).unwrap();
        let p = PlaquetteIndex {
            site: Site::origin(3),
            plane: (0, 1),
        };
        assert_eq!(s.loop_links(&one).unwrap(), s.plaquette_links(&p).unwrap().to_vec());

        assert!(s.rectangular_loop(Site::origin(3), (0, 1), 5, 1).is_err());
        let o = LatticeShape::open(&[4, 4]).unwrap();
        assert!(o.rectangular_loop(Site::new(&[1, 1]), (0, 1), 2, 2).is_ok());
        assert!(o.rectangular_loop(Site::new(&[2, 1]), (0, 1), 2, 2).is_err());
    }

    #[test]
    fn open_loops_must_stay_inside_and_close() {
        let o = LatticeShape::open(&[3, 3]).unwrap();
        let bad = LoopSpec {
            start: Site::origin(2),
            steps: vec![Step::minus(0), Step::plus(0)],
        };
        assert!(o.loop_links(&bad).is_err());
        let open_path = LoopSpec {
            start: Site::origin(2),
            steps: vec![Step::plus(0), Step::plus(1)],
        };
        assert!(o.loop_links(&open_path).is_err());
        let back_and_forth = LoopSpec {
            start: Site::origin(2),
            steps: vec![Step::plus(0), Step::plus(0), Step::minus(0), Step::minus(0)],
        };
        assert_eq!(o.loop_links(&back_and_forth).unwrap().len(), 4);
    }

    #[test]
    fn checkerboard_classes_share_no_plaquette() {
        for shape in [
            LatticeShape::periodic(&[4, 4, 4, 4]).unwrap(),
            LatticeShape::periodic(&[3, 3]).unwrap(),
            LatticeShape::periodic(&[5, 2, 3]).unwrap(),
            LatticeShape::periodic(&[2, 2]).unwrap(),
            LatticeShape::open(&[3, 5]).unwrap(),
        ] {
            let geo = Geometry::new(shape.clone());
            let mut seen = vec![false; geo.link_count()];
            for class in geo.checkerboard_classes() {
                let members: HashSet<usize> = class.iter().copied().collect();
                for &l in class {
                    assert!(!seen[l]);
                    seen[l] = true;
                    for st in geo.staples(l) {
                        assert!(st.iter().all(|d| !members.contains(&d.link)), "{shape:?}");
                    }
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
        let even = Geometry::new(LatticeShape::periodic(&[4, 4, 4, 4]).unwrap());
        assert_eq!(even.checkerboard_classes().len(), 8);
    }
}
