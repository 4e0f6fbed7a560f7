//! Iteration drivers producing traces.
//!
//! Block `k` of an alternating trace holds `a_k`, a projection of
//! `b_{k-1}` onto `A`, and `b_k`, a projection of `a_k` onto `B`. The start
//! `a_0` and its projection `b_0` are kept on the trace itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primitives::{angle_between, dist, select, Point, TiePolicy, Tolerances};
use crate::sets::{warm_local_project, CurveParam, Diagonal, ParamCurve, Product, SetDescriptor};

/// Iterates whose norm exceeds this are reported as diverged.
pub const DIVERGENCE_NORM: f64 = 1e8;

/// Angle value stored when a leg is too short for the angle to be defined.
pub const ANGLE_SENTINEL: f64 = -1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxIter,
    Stationary,
    Diverged,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::MaxIter => "max-iter",
            StopReason::Stationary => "stationary",
            StopReason::Diverged => "diverged",
        }
    }
}

/// How the `A`-step of a block is known to satisfy the proximal normal
/// condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Certificate {
    #[default]
    Global,
    LocalWarm,
    GlobalFallback,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub a: Point,
    pub b: Point,
    pub r: f64,
    pub step_a: f64,
    pub step_b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub multivalued_hit: bool,
    #[serde(default)]
    pub certificate: Certificate,
}

impl TraceRecord {
    pub fn has_alpha(&self) -> bool {
        self.alpha >= 0.0
    }

    pub fn has_beta(&self) -> bool {
        self.beta >= 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub stop_reason: StopReason,
    pub start: Point,
    pub start_b: Point,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn a_points(&self) -> impl Iterator<Item = &Point> {
        self.records.iter().map(|r| &r.a)
    }

    pub fn b_points(&self) -> impl Iterator<Item = &Point> {
        self.records.iter().map(|r| &r.b)
    }

    /// `b_{k-1}` for the record at position `i`.
    pub fn prev_b(&self, i: usize) -> &Point {
        if i == 0 {
            &self.start_b
        } else {
            &self.records[i - 1].b
        }
    }

    /// `a_{k-1}` for the record at position `i`.
    pub fn prev_a(&self, i: usize) -> &Point {
        if i == 0 {
            &self.start
        } else {
            &self.records[i - 1].a
        }
    }
}

/// Accumulates blocks and applies the stopping rules shared by all drivers.
pub struct TraceBuilder {
    tol: Tolerances,
    start: Point,
    start_b: Point,
    records: Vec<TraceRecord>,
}

impl TraceBuilder {
    pub fn new(start: Point, start_b: Point, tol: Tolerances) -> Self {
        TraceBuilder {
            tol,
            start,
            start_b,
            records: Vec::new(),
        }
    }

    fn angle(&self, u: Point, v: Point) -> f64 {
        angle_between(u.as_slice(), v.as_slice(), self.tol.tol_step).unwrap_or(ANGLE_SENTINEL)
    }

    pub fn prev_a(&self) -> &Point {
        self.records.last().map_or(&self.start, |r| &r.a)
    }

    pub fn prev_b(&self) -> &Point {
        self.records.last().map_or(&self.start_b, |r| &r.b)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records block `(a, b)` and reports whether iteration must stop.
    pub fn push(&mut self, a: Point, b: Point, multivalued_hit: bool, certificate: Certificate) -> Option<StopReason> {
        let prev_a = self.prev_a();
        let prev_b = self.prev_b();
        let step_a = dist(a.as_slice(), prev_a.as_slice());
        let step_b = dist(b.as_slice(), prev_b.as_slice());
        let alpha = self.angle(prev_b - &a, &b - &a);
        let beta = self.angle(&a - &b, prev_b - &b);
        let r = dist(a.as_slice(), b.as_slice());
        let k = self.records.len() + 1;
        let diverged = a.norm() > DIVERGENCE_NORM;
        self.records.push(TraceRecord {
            k,
            a,
            b,
            r,
            step_a,
            step_b,
            alpha,
            beta,
            multivalued_hit,
            certificate,
        });
        if diverged {
            Some(StopReason::Diverged)
        } else if step_a < self.tol.tol_step && step_b < self.tol.tol_step {
            Some(StopReason::Stationary)
        } else if k >= self.tol.max_iter {
            Some(StopReason::MaxIter)
        } else {
            None
        }
    }

    pub fn finish(self, stop_reason: StopReason) -> Trace {
        Trace {
            records: self.records,
            stop_reason,
            start: self.start,
            start_b: self.start_b,
        }
    }
}

fn project_select(set: &SetDescriptor, q: &Point, policy: &TiePolicy, k: usize) -> Result<(Point, bool)> {
    let mut r = set.project(q).map_err(|e| e.at_iteration(k))?;
    let p = select(&mut r, policy);
    Ok((p, r.multivalued))
}

fn check_start(a: &SetDescriptor, b: &SetDescriptor, x0: &Point, tol: &Tolerances) -> Result<()> {
    tol.validate()?;
    b.check_same_dimension(a)?;
    x0.check_dim(a.dimension())
}

impl SetDescriptor {
    fn check_same_dimension(&self, other: &SetDescriptor) -> Result<()> {
        if self.dimension() != other.dimension() {
            return Err(Error::DimensionMismatch {
                expected: other.dimension(),
                found: self.dimension(),
            });
        }
        Ok(())
    }
}

/// Alternating projections `b_k in P_B(a_k)`, `a_{k+1} in P_A(b_k)` from
/// `a0`.
pub fn run_alternating(
    a: &SetDescriptor,
    b: &SetDescriptor,
    a0: &Point,
    tol: &Tolerances,
    policy: &TiePolicy,
) -> Result<Trace> {
    check_start(a, b, a0, tol)?;
    let (b0, _) = project_select(b, a0, policy, 0)?;
    let mut builder = TraceBuilder::new(a0.clone(), b0, *tol);
    let mut k = 1;
    loop {
        let (ak, hit_a) = project_select(a, builder.prev_b(), policy, k)?;
        let (bk, hit_b) = project_select(b, &ak, policy, k)?;
        if let Some(reason) = builder.push(ak, bk, hit_a || hit_b, Certificate::Global) {
            return Ok(builder.finish(reason));
        }
        k += 1;
    }
}

/// Whether `candidate` is at least as close to `prev_b` as `prev_a` is, the
/// decrease half of the prox-block condition.
pub fn enforce_prox_block(prev_b: &Point, candidate: &Point, prev_a: &Point) -> bool {
    let new = dist(prev_b.as_slice(), candidate.as_slice());
    let old = dist(prev_b.as_slice(), prev_a.as_slice());
    new <= old + 1e-12 * old.max(1.0)
}

/// Alternating projections whose `A`-steps are local projections onto a
/// curve, warm-started at the previous curve location.
///
/// A local step that fails the decrease condition is replaced by the global
/// projection and the block is certified as a fallback.
pub fn run_local_alternating(
    curve: &ParamCurve,
    b: &SetDescriptor,
    start: &CurveParam,
    tol: &Tolerances,
    policy: &TiePolicy,
) -> Result<Trace> {
    tol.validate()?;
    curve.validate()?;
    let a0 = curve
        .point_at(start)
        .ok_or_else(|| Error::invalid("start location is not on the curve"))?;
    a0.check_dim(b.dimension())?;
    let (b0, _) = project_select(b, &a0, policy, 0)?;
    let mut builder = TraceBuilder::new(a0, b0, *tol);
    let mut param = *start;
    let mut k = 1;
    loop {
        let q = builder.prev_b().clone();
        let (cand, cand_param) = warm_local_project(curve, &q, &param).map_err(|e| e.at_iteration(k))?;
        let (ak, certificate, hit_a) = if enforce_prox_block(&q, &cand, builder.prev_a()) {
            param = cand_param;
            (cand, Certificate::LocalWarm, false)
        } else {
            let (mut r, global_param) = curve.project_with_param(&q).map_err(|e| e.at_iteration(k))?;
            let p = select(&mut r, policy);
            param = global_param;
            (p, Certificate::GlobalFallback, r.multivalued)
        };
        let (bk, hit_b) = project_select(b, &ak, policy, k)?;
        if let Some(reason) = builder.push(ak, bk, hit_a || hit_b, certificate) {
            return Ok(builder.finish(reason));
        }
        k += 1;
    }
}

/// Douglas-Rachford iterates `x_{k+1} = x_k + P_A(2 P_B x_k - x_k) - P_B x_k`.
///
/// Shadows are recorded for every stored `x`, including the last one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DRTrace {
    pub x: Vec<Point>,
    pub shadow_b: Vec<Point>,
    pub shadow_a: Vec<Point>,
    pub multivalued_hit: Vec<bool>,
    pub stop_reason: StopReason,
}

impl DRTrace {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Trace view with `a_k = x_k` and `b_k = P_B(x_k)`, for diagnostics and
    /// output. The first iterate becomes the start.
    pub fn to_trace(&self, tol: &Tolerances) -> Trace {
        let mut builder = TraceBuilder::new(self.x[0].clone(), self.shadow_b[0].clone(), *tol);
        for i in 1..self.x.len() {
            builder.push(
                self.x[i].clone(),
                self.shadow_b[i].clone(),
                self.multivalued_hit[i],
                Certificate::Global,
            );
        }
        builder.finish(self.stop_reason)
    }
}

pub fn run_douglas_rachford(
    a: &SetDescriptor,
    b: &SetDescriptor,
    x0: &Point,
    tol: &Tolerances,
    policy: &TiePolicy,
) -> Result<DRTrace> {
    check_start(a, b, x0, tol)?;
    let mut trace = DRTrace {
        x: Vec::new(),
        shadow_b: Vec::new(),
        shadow_a: Vec::new(),
        multivalued_hit: Vec::new(),
        stop_reason: StopReason::MaxIter,
    };
    let mut x = x0.clone();
    let mut k = 0;
    loop {
        let (pb, hit_b) = project_select(b, &x, policy, k)?;
        let reflected = pb.scale(2.0).axpy(-1.0, &x);
        let (pa, hit_a) = project_select(a, &reflected, policy, k)?;
        let next = x.axpy(1.0, &pa).axpy(-1.0, &pb);
        trace.x.push(x);
        trace.shadow_b.push(pb);
        trace.shadow_a.push(pa);
        trace.multivalued_hit.push(hit_a || hit_b);
        if let Some(reason) = stop_after(&trace, &next, k + 1, tol) {
            trace.stop_reason = reason;
            if reason != StopReason::Diverged {
                let (pb, hit_b) = project_select(b, &next, policy, k + 1)?;
                let (pa, hit_a) = project_select(a, &pb.scale(2.0).axpy(-1.0, &next), policy, k + 1)?;
                trace.shadow_b.push(pb);
                trace.shadow_a.push(pa);
                trace.multivalued_hit.push(hit_a || hit_b);
            } else {
                trace.shadow_b.push(next.clone());
                trace.shadow_a.push(next.clone());
                trace.multivalued_hit.push(false);
            }
            trace.x.push(next);
            return Ok(trace);
        }
        x = next;
        k += 1;
    }
}

fn stop_after(trace: &DRTrace, next: &Point, updates: usize, tol: &Tolerances) -> Option<StopReason> {
    let x = trace.x.last().expect("nonempty");
    if next.norm() > DIVERGENCE_NORM {
        Some(StopReason::Diverged)
    } else if dist(next.as_slice(), x.as_slice()) < tol.tol_step {
        Some(StopReason::Stationary)
    } else if updates >= tol.max_iter {
        Some(StopReason::MaxIter)
    } else {
        None
    }
}

/// Averaged projections over `components`, realized as alternating
/// projections between the diagonal (`A`) and the product (`B`). Each
/// `a_k` is the current average replicated, each `b_k` lists the component
/// projections.
pub fn run_averaged(components: &[SetDescriptor], x0: &Point, tol: &Tolerances, policy: &TiePolicy) -> Result<Trace> {
    let (diagonal, product) = averaged_sets(components)?;
    x0.check_dim(components[0].dimension())?;
    let a0 = Point::from_vec(diagonal.replicate(x0.as_slice()));
    run_alternating(&diagonal.into(), &product.into(), &a0, tol, policy)
}

pub fn averaged_sets(components: &[SetDescriptor]) -> Result<(Diagonal, Product)> {
    let first = components
        .first()
        .ok_or_else(|| Error::invalid("averaged projections need at least one component"))?;
    let n = first.dimension();
    for c in components {
        if c.dimension() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: c.dimension(),
            });
        }
    }
    let diagonal = Diagonal {
        copies: components.len(),
        dim: n,
    };
    Ok((diagonal, Product::new(components.to_vec())?))
}
