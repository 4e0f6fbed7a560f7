//! Closed sets with nearest-point projectors.
//!
//! A [`SetDescriptor`] is the serializable description of a set. Every
//! family validates its parameters, knows its ambient dimension, and returns
//! a [`ProjectionResult`] for any finite query of that dimension.

mod complex;
mod curve;
mod euclid;
mod matrix;

pub use complex::{Domain, MagnitudeSpec, NonnegReal, SparsePhase, Sparsity, SphereProduct, Support};
pub use curve::{warm_local_project, CurveMap, CurveParam, CurvePiece, ParamCurve};
pub(crate) use euclid::nearest_in_union;
pub use euclid::{Affine, BoxProduct, Cylinder, Diagonal, EpigraphQuadratic, Interval, Product};
pub use matrix::{LowRank, Toeplitz};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::phase::lift::{LiftedKind, LiftedSet};
use crate::primitives::{Point, ProjectionResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SetDescriptor {
    Affine(Affine),
    BoxProduct(BoxProduct),
    SphereProduct(SphereProduct),
    EpigraphQuadratic(EpigraphQuadratic),
    LowRank(LowRank),
    Toeplitz(Toeplitz),
    Sparsity(Sparsity),
    SparsePhase(SparsePhase),
    Support(Support),
    NonnegReal(NonnegReal),
    Cylinder(Cylinder),
    ParamCurve(ParamCurve),
    Product(Product),
    Diagonal(Diagonal),
    Lifted(LiftedSet),
}

macro_rules! dispatch {
    ($self:ident, $s:ident => $e:expr) => {
        match $self {
            SetDescriptor::Affine($s) => $e,
            SetDescriptor::BoxProduct($s) => $e,
            SetDescriptor::SphereProduct($s) => $e,
            SetDescriptor::EpigraphQuadratic($s) => $e,
            SetDescriptor::LowRank($s) => $e,
            SetDescriptor::Toeplitz($s) => $e,
            SetDescriptor::Sparsity($s) => $e,
            SetDescriptor::SparsePhase($s) => $e,
            SetDescriptor::Support($s) => $e,
            SetDescriptor::NonnegReal($s) => $e,
            SetDescriptor::Cylinder($s) => $e,
            SetDescriptor::ParamCurve($s) => $e,
            SetDescriptor::Product($s) => $e,
            SetDescriptor::Diagonal($s) => $e,
            SetDescriptor::Lifted($s) => $e,
        }
    };
}

impl SetDescriptor {
    pub fn family(&self) -> &'static str {
        match self {
            SetDescriptor::Affine(_) => "affine",
            SetDescriptor::BoxProduct(_) => "box-product",
            SetDescriptor::SphereProduct(_) => "sphere-product",
            SetDescriptor::EpigraphQuadratic(_) => "epigraph-quadratic",
            SetDescriptor::LowRank(_) => "low-rank",
            SetDescriptor::Toeplitz(_) => "toeplitz",
            SetDescriptor::Sparsity(_) => "sparsity",
            SetDescriptor::SparsePhase(_) => "sparse-phase",
            SetDescriptor::Support(_) => "support",
            SetDescriptor::NonnegReal(_) => "nonneg-real",
            SetDescriptor::Cylinder(_) => "cylinder",
            SetDescriptor::ParamCurve(_) => "param-curve",
            SetDescriptor::Product(_) => "product",
            SetDescriptor::Diagonal(_) => "diagonal",
            SetDescriptor::Lifted(_) => "lifted",
        }
    }

    pub fn dimension(&self) -> usize {
        dispatch!(self, s => s.dimension())
    }

    pub fn validate(&self) -> Result<()> {
        dispatch!(self, s => s.validate())
    }

    /// All nearest points of `q` (or one representative, see
    /// [`ProjectionResult`]).
    pub fn project(&self, q: &Point) -> Result<ProjectionResult> {
        q.check_dim(self.dimension())?;
        dispatch!(self, s => s.project(q))
    }

    /// Distance from `p` to the set.
    pub fn membership_residual(&self, p: &Point) -> Result<f64> {
        Ok(self.project(p)?.distance)
    }

    pub fn as_curve(&self) -> Option<&ParamCurve> {
        match self {
            SetDescriptor::ParamCurve(c) => Some(c),
            _ => None,
        }
    }

    pub fn lifted(which: LiftedKind) -> Self {
        SetDescriptor::Lifted(LiftedSet { which })
    }

    /// Parses and validates a JSON description.
    pub fn from_json(text: &str) -> Result<Self> {
        let set: SetDescriptor = serde_json::from_str(text)?;
        set.validate()?;
        Ok(set)
    }
}

macro_rules! impl_from {
    ($($variant:ident),*) => {
        $(impl From<$variant> for SetDescriptor {
            fn from(s: $variant) -> Self {
                SetDescriptor::$variant(s)
            }
        })*
    };
}

impl_from!(
    Affine,
    BoxProduct,
    SphereProduct,
    EpigraphQuadratic,
    LowRank,
    Toeplitz,
    Sparsity,
    SparsePhase,
    Support,
    NonnegReal,
    Cylinder,
    ParamCurve,
    Product,
    Diagonal
);

/// Enumerates every `choose`-subset of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, choose: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if choose > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..choose).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..choose).rev().find(|&i| idx[i] < i + n - choose) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..choose {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Enumeration of tied nearest points is capped; beyond it one
/// representative is returned with the multivalued flag set.
pub(crate) const MAX_ENUMERATED: u128 = 4096;
