//! Boxes and finite lattice regions.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// The box `Lambda_L = [-L, L]^d`, optionally with a cutoff `a < L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub d: usize,
    pub half_side: usize,
    pub cutoff: Option<usize>,
}

impl BoxSpec {
    pub fn new(d: usize, half_side: usize) -> Self {
        Self {
            d,
            half_side,
            cutoff: None,
        }
    }

    pub fn with_cutoff(mut self, a: usize) -> Self {
        self.cutoff = Some(a);
        self
    }

    pub fn side(&self) -> usize {
        2 * self.half_side + 1
    }

    pub fn volume(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    /// Bonds with exactly one endpoint in the box: `2d (2L+1)^{d-1}`.
    pub fn boundary_bonds(&self) -> usize {
        2 * self.d * self.side().pow(self.d as u32 - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.d) {
            return domain(format!("dimension must be 1, 2 or 3, got {}", self.d));
        }
        if let Some(a) = self.cutoff {
            if a >= self.half_side && a != 0 {
                return domain(format!("cutoff a = {a} must be below L = {}", self.half_side));
            }
        }
        Ok(())
    }
}

pub type Site = [i64; 3];

/// A finite set of lattice sites in `Z^d` (unused coordinates are zero).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    dim: usize,
    sites: Vec<Site>,
    set: HashSet<Site>,
}

impl Region {
    pub fn from_sites(dim: usize, sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return domain(format!("dimension must be 1, 2 or 3, got {dim}"));
        }
        let mut list: Vec<Site> = sites.into_iter().collect();
        for s in &list {
            if s[dim..].iter().any(|&c| c != 0) {
                return domain("site has nonzero coordinates beyond the dimension");
            }
        }
        list.sort_unstable();
        list.dedup();
        if list.is_empty() {
            return domain("region must be nonempty");
        }
        let set = list.iter().copied().collect();
        Ok(Self {
            dim,
            sites: list,
            set,
        })
    }

    /// `Lambda_L` centred at the origin.
    pub fn cube(dim: usize, half_side: usize) -> Self {
        let l = half_side as i64;
        let mut sites = Vec::new();
        crate::special::for_each_cube_point(dim, l, |p| sites.push(*p));
        Self::from_sites(dim, sites).expect("cube is a valid region")
    }

    pub fn single_site(dim: usize) -> Self {
        Self::from_sites(dim, [[0; 3]]).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn contains(&self, s: &Site) -> bool {
        self.set.contains(s)
    }

    pub fn neighbors(&self, s: &Site) -> impl Iterator<Item = Site> + '_ {
        let s = *s;
        (0..self.dim).flat_map(move |k| {
            [-1i64, 1].into_iter().map(move |dx| {
                let mut t = s;
                t[k] += dx;
                t
            })
        })
    }

    pub fn components(&self) -> usize {
        let mut seen: HashSet<Site> = HashSet::with_capacity(self.len());
        let mut count = 0;
        for start in &self.sites {
            if seen.contains(start) {
                continue;
            }
            count += 1;
            let mut queue = VecDeque::from([*start]);
            seen.insert(*start);
            while let Some(cur) = queue.pop_front() {
                for nb in self.neighbors(&cur) {
                    if self.contains(&nb) && seen.insert(nb) {
                        queue.push_back(nb);
                    }
                }
            }
        }
        count
    }

    pub fn ensure_connected(&self) -> Result<()> {
        match self.components() {
            1 => Ok(()),
            components => Err(Error::Disconnected { components }),
        }
    }

    /// Number of nearest-neighbour bonds with exactly one endpoint inside.
    pub fn boundary_bonds(&self) -> usize {
        self.sites
            .iter()
            .map(|s| self.neighbors(s).filter(|nb| !self.contains(nb)).count())
            .sum()
    }

    pub fn bounding_box(&self) -> (Site, Site) {
        let mut lo = self.sites[0];
        let mut hi = self.sites[0];
        for s in &self.sites {
            for k in 0..self.dim {
                lo[k] = lo[k].min(s[k]);
                hi[k] = hi[k].max(s[k]);
            }
        }
        (lo, hi)
    }

    /// True when the region fills its bounding box.
    pub fn is_box(&self) -> bool {
        let (lo, hi) = self.bounding_box();
        let vol: i64 = (0..self.dim).map(|k| hi[k] - lo[k] + 1).product();
        vol as usize == self.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_counts() {
        let b = BoxSpec::new(2, 3);
        assert_eq!(b.volume(), 49);
        assert_eq!(b.boundary_bonds(), 28);
        assert_eq!(Region::cube(2, 3).boundary_bonds(), 28);
        assert_eq!(Region::cube(3, 1).boundary_bonds(), 54);
        assert!(BoxSpec::new(1, 3).with_cutoff(3).validate().is_err());
    }

    #[test]
    fn connectivity() {
        let r = Region::from_sites(2, [[0, 0, 0], [1, 0, 0], [3, 0, 0]]).unwrap();
        assert_eq!(r.components(), 2);
        assert!(matches!(r.ensure_connected(), Err(Error::Disconnected { components: 2 })));
        assert!(!r.is_box());
        assert_eq!(Region::single_site(3).boundary_bonds(), 6);
        assert!(Region::from_sites(1, [[0, 1, 0]]).is_err());
    }
}
