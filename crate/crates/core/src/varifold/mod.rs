//! Atomic representations of general `m`-varifolds in `R^n`.
//!
//! A [`DiscreteVarifold`] is a finite sum of weighted point masses on
//! `R^n x G(n, m)`. Several atoms may share a position with different planes,
//! which is how non-rectifiable plane distributions are expressed. Samples of
//! an [`AnalyticFamily`] remember the family and resolution they came from so
//! that analytic first-variation data can be paired with quadrature.

mod family;
pub mod io;

use std::collections::HashMap;

use nalgebra::DMatrix;

pub use family::{AnalyticFamily, Ball, DeltaMeasure, FlatDisc, PlaneBundle, ProductSlab, SphereShell};

use crate::error::{Error, Result};
use crate::geom::{Point, Subspace};
use crate::spatial::SpatialIndex;

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub position: Point,
    pub plane: Subspace,
    pub weight: f64,
}

impl Atom {
    pub fn new(position: Point, plane: Subspace, weight: f64) -> Self {
        Atom {
            position,
            plane,
            weight,
        }
    }
}

/// Provenance of a sampled varifold.
#[derive(Clone, Debug)]
pub struct SampleSource {
    pub family: AnalyticFamily,
    pub h: f64,
}

#[derive(Clone, Debug)]
pub struct DiscreteVarifold {
    m: usize,
    n: usize,
    atoms: Vec<Atom>,
    index: SpatialIndex,
    fiber_of: Vec<usize>,
    fibers: Vec<Vec<usize>>,
    source: Option<SampleSource>,
}

impl DiscreteVarifold {
    pub fn new(m: usize, n: usize, atoms: Vec<Atom>) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::Argument(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
        }
        for (i, atom) in atoms.iter().enumerate() {
            if !(atom.weight > 0.0 && atom.weight.is_finite()) {
                return Err(Error::Argument(format!(
                    "atom {i} has non-positive or non-finite weight {}",
                    atom.weight
                )));
            }
            if atom.position.len() != n || atom.plane.ambient_dim() != n || atom.plane.dim() != m {
                return Err(Error::Argument(format!(
                    "atom {i} does not live in R^{n} x G({n}, {m})"
                )));
            }
        }
        let coords: Vec<f64> = atoms.iter().flat_map(|a| a.position.iter().copied()).collect();
        let weights: Vec<f64> = atoms.iter().map(|a| a.weight).collect();
        let index = SpatialIndex::new(n, coords, weights);

        let mut by_position: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut fibers: Vec<Vec<usize>> = Vec::new();
        let mut fiber_of = Vec::with_capacity(atoms.len());
        for (i, atom) in atoms.iter().enumerate() {
            // +0.0 and -0.0 are the same point
            let key: Vec<u64> = atom.position.iter().map(|x| (x + 0.0).to_bits()).collect();
            let id = *by_position.entry(key).or_insert_with(|| {
                fibers.push(Vec::new());
                fibers.len() - 1
            });
            fibers[id].push(i);
            fiber_of.push(id);
        }
        Ok(DiscreteVarifold {
            m,
            n,
            atoms,
            index,
            fiber_of,
            fibers,
            source: None,
        })
    }

    /// The zero varifold.
    pub fn zero(m: usize, n: usize) -> Result<Self> {
        Self::new(m, n, Vec::new())
    }

    pub(crate) fn with_source(mut self, family: AnalyticFamily, h: f64) -> Self {
        self.source = Some(SampleSource { family, h });
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn index(&self) -> &SpatialIndex {
        &self.index
    }

    pub fn source(&self) -> Option<&SampleSource> {
        self.source.as_ref()
    }

    pub fn family(&self) -> Option<&AnalyticFamily> {
        self.source.as_ref().map(|s| &s.family)
    }

    /// `||V||(R^n)`.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// `||V|| B(a, r)` for the closed ball.
    pub fn weight_ball_mass(&self, a: &Point, r: f64) -> f64 {
        self.index.ball_weight(a.as_slice(), r)
    }

    /// Atom indices in the closed ball `B(a, r)`, ascending.
    pub fn ball_atoms(&self, a: &Point, r: f64) -> Vec<usize> {
        self.index.ball_query(a.as_slice(), r)
    }

    /// Groups of atoms sharing a position, ordered by first member.
    pub fn fibers(&self) -> &[Vec<usize>] {
        &self.fibers
    }

    /// The fiber containing atom `i`.
    pub fn fiber_of(&self, i: usize) -> &[usize] {
        &self.fibers[self.fiber_of[i]]
    }

    /// The normalized plane distribution `V^(x)` at an atom position.
    pub fn disintegrate(&self, x: &Point) -> Result<Vec<(Subspace, f64)>> {
        let members = self.fiber_at(x)?;
        let total: f64 = members.iter().map(|&i| self.atoms[i].weight).sum();
        Ok(members
            .iter()
            .map(|&i| (self.atoms[i].plane.clone(), self.atoms[i].weight / total))
            .collect())
    }

    fn fiber_at(&self, x: &Point) -> Result<&[usize]> {
        if x.len() != self.n {
            return Err(Error::Argument(format!(
                "point in R^{} for a varifold in R^{}",
                x.len(),
                self.n
            )));
        }
        match self.index.ball_query(x.as_slice(), 0.0).first() {
            Some(&i) => Ok(self.fiber_of(i)),
            None => Err(Error::EmptyFiber(x.iter().copied().collect())),
        }
    }

    /// Fiber-averaged projection `q(x) = sum_i p_i P_i`.
    pub fn mean_projection(&self, x: &Point) -> Result<DMatrix<f64>> {
        let members = self.fiber_at(x)?;
        Ok(self.fiber_mean_projection(members))
    }

    pub(crate) fn fiber_mean_projection(&self, members: &[usize]) -> DMatrix<f64> {
        let total: f64 = members.iter().map(|&i| self.atoms[i].weight).sum();
        let mut q = DMatrix::zeros(self.n, self.n);
        for &i in members {
            q += self.atoms[i].plane.proj() * (self.atoms[i].weight / total);
        }
        q
    }

    /// `V` restricted to `E x G(n, m)`; weights unchanged.
    pub fn restrict<F>(&self, in_set: F) -> DiscreteVarifold
    where
        F: Fn(&Point) -> bool,
    {
        let atoms = self.atoms.iter().filter(|a| in_set(&a.position)).cloned().collect();
        DiscreteVarifold::new(self.m, self.n, atoms).expect("restriction keeps invariants")
    }

    /// Push-forward under `x -> factor * x`: positions scale by `factor`,
    /// weights by `factor^m`.
    pub fn dilate(&self, factor: f64) -> Result<DiscreteVarifold> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::Argument(format!(
                "dilation factor must be positive, got {factor}"
            )));
        }
        let scale = factor.powi(self.m as i32);
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom::new(&a.position * factor, a.plane.clone(), a.weight * scale))
            .collect();
        let mut out = DiscreteVarifold::new(self.m, self.n, atoms)?;
        if let Some(src) = &self.source {
            out.source = Some(SampleSource {
                family: src.family.dilate(factor),
                h: src.h * factor,
            });
        }
        Ok(out)
    }

    /// Largest distance from `a` to an atom, 0 for the zero varifold.
    pub fn support_radius_about(&self, a: &Point) -> f64 {
        self.atoms.iter().map(|x| (&x.position - a).norm()).fold(0.0, f64::max)
    }
}
