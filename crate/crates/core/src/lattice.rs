//! The d-dimensional Cartesian grid that hosts the circuit.
//!
//! Qubits are indexed row-major with axis 0 (the cut axis `x`) varying
//! slowest, so the subsystem "all sites left of a cut" is an index prefix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// Parity of an integer, e.g. a time step.
    pub fn of(value: usize) -> Self {
        if value % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// A lattice site given by its coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Site {
    pub coords: Vec<usize>,
}

impl Site {
    pub fn new(coords: impl Into<Vec<usize>>) -> Self {
        Self { coords: coords.into() }
    }

    /// Parity of the coordinate sum.
    pub fn parity(&self) -> Parity {
        Parity::of(self.coords.iter().sum())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    extents: Vec<usize>,
    boundary: Vec<Boundary>,
}

impl LatticeSpec {
    pub fn new(extents: Vec<usize>, boundary: Vec<Boundary>) -> Result<Self> {
        if extents.is_empty() {
            return Err(Error::InvalidArgument("lattice needs at least one axis".into()));
        }
        if extents.len() != boundary.len() {
            return Err(Error::InvalidArgument(format!(
                "{} extents but {} boundary conditions",
                extents.len(),
                boundary.len()
            )));
        }
        if let Some(axis) = extents.iter().position(|&e| e == 0) {
            return Err(Error::InvalidArgument(format!("extent of axis {axis} is zero")));
        }
        Ok(Self { extents, boundary })
    }

    /// The protocol geometry `4L x L x ... x L`: open along `x`, periodic
    /// along every other axis.
    pub fn protocol(d: usize, l: usize) -> Result<Self> {
        if d == 0 || l == 0 {
            return Err(Error::InvalidArgument(format!("invalid protocol geometry d={d} L={l}")));
        }
        let mut extents = vec![l; d];
        extents[0] = 4 * l;
        let mut boundary = vec![Boundary::Periodic; d];
        boundary[0] = Boundary::Open;
        let spec = Self::new(extents, boundary)?;
        spec.check_bipartite()?;
        Ok(spec)
    }

    /// Rejects odd periodic extents, for which the gate graph is not
    /// bipartite and same-time gates would not commute.
    pub fn check_bipartite(&self) -> Result<()> {
        for (axis, (&e, &b)) in self.extents.iter().zip(&self.boundary).enumerate() {
            if b == Boundary::Periodic && e % 2 == 1 {
                return Err(Error::Config(format!(
                    "periodic axis {axis} has odd extent {e}; periodic extents must be even"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn boundary(&self) -> &[Boundary] {
        &self.boundary
    }

    pub fn num_sites(&self) -> usize {
        self.extents.iter().product()
    }

    fn check_site(&self, s: &Site) -> Result<()> {
        if s.coords.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "site has {} coordinates, lattice has {} axes",
                s.coords.len(),
                self.dim()
            )));
        }
        for (&c, &e) in s.coords.iter().zip(&self.extents) {
            crate::error::check_index(c, e)?;
        }
        Ok(())
    }

    pub fn site_index(&self, s: &Site) -> Result<usize> {
        self.check_site(s)?;
        Ok(s.coords
            .iter()
            .zip(&self.extents)
            .fold(0, |acc, (&c, &e)| acc * e + c))
    }

    pub fn site_of(&self, index: usize) -> Result<Site> {
        crate::error::check_index(index, self.num_sites())?;
        let mut coords = vec![0; self.dim()];
        let mut rest = index;
        for axis in (0..self.dim()).rev() {
            coords[axis] = rest % self.extents[axis];
            rest /= self.extents[axis];
        }
        Ok(Site { coords })
    }

    pub fn parity_of_index(&self, index: usize) -> Result<Parity> {
        Ok(self.site_of(index)?.parity())
    }

    /// `{s + e_i}` over the axes in order; open-boundary targets outside the
    /// system are omitted, periodic ones wrap.
    pub fn target_sites(&self, s: &Site) -> Result<Vec<Site>> {
        self.check_site(s)?;
        let mut out = Vec::with_capacity(self.dim());
        for axis in 0..self.dim() {
            if let Some(c) = self.step(axis, s.coords[axis]) {
                let mut t = s.clone();
                t.coords[axis] = c;
                out.push(t);
            }
        }
        Ok(out)
    }

    fn step(&self, axis: usize, c: usize) -> Option<usize> {
        let e = self.extents[axis];
        match self.boundary[axis] {
            Boundary::Open if c + 1 >= e => None,
            Boundary::Open => Some(c + 1),
            Boundary::Periodic => Some((c + 1) % e),
        }
    }

    /// Target qubit indices of every site, indexed by site, axes in order.
    pub fn target_table(&self) -> Vec<Vec<usize>> {
        let strides = self.strides();
        (0..self.num_sites())
            .map(|i| {
                let site = self.site_of(i).expect("index in range");
                (0..self.dim())
                    .filter_map(|axis| {
                        let c = site.coords[axis];
                        self.step(axis, c)
                            .map(|n| i - c * strides[axis] + n * strides[axis])
                    })
                    .collect()
            })
            .collect()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for axis in (0..self.dim() - 1).rev() {
            strides[axis] = strides[axis + 1] * self.extents[axis + 1];
        }
        strides
    }

    /// Groups of qubit indices by x-coordinate, in increasing x. The union of
    /// the first `k` groups is the subsystem left of cut boundary `k`.
    pub fn cut_prefix_groups(&self) -> Vec<Vec<usize>> {
        let slab = self.num_sites() / self.extents[0];
        (0..self.extents[0])
            .map(|k| (k * slab..(k + 1) * slab).collect())
            .collect()
    }

    /// Cut position in centered coordinates (0 = central cut) for slab
    /// boundary `k`, `0 <= k <= extents[0]`.
    pub fn centered_cut(&self, k: usize) -> i64 {
        k as i64 - (self.extents[0] / 2) as i64
    }

    /// Centered coordinates of every slab boundary, from left to right.
    pub fn cut_positions(&self) -> Vec<i64> {
        (0..=self.extents[0]).map(|k| self.centered_cut(k)).collect()
    }
}
