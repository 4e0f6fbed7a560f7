use serde::{Deserialize, Serialize};

use super::{binomial, combinations, MAX_ENUMERATED};
use crate::error::{Error, Result};
use crate::phase::dft::{dft, idft};
use crate::primitives::{dist, Point, ProjectionResult};

/// Target Fourier modulus per frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MagnitudeSpec {
    pub m: Vec<f64>,
}

impl MagnitudeSpec {
    pub fn new(m: Vec<f64>) -> Result<Self> {
        let spec = MagnitudeSpec { m };
        spec.validate()?;
        Ok(spec)
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// `dist(0, B)`.
    pub fn norm(&self) -> f64 {
        self.m.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.m.is_empty() {
            return Err(Error::invalid("magnitude spec needs at least one frequency"));
        }
        if self.m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("magnitudes"));
        }
        if self.m.iter().any(|&v| v < 0.0) {
            return Err(Error::invalid("magnitudes must be nonnegative"));
        }
        Ok(())
    }
}

/// Whether moduli are imposed on the coordinates themselves or on their
/// Fourier transform.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    #[default]
    Signal,
    Frequency,
}

/// Product of circles `|z_w| = m_w`, either directly or after the DFT.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereProduct {
    pub m: MagnitudeSpec,
    #[serde(default)]
    pub domain: Domain,
}

/// Scales each complex pair to its target modulus. Returns whether a zero
/// pair was met; such a pair is sent to `(m, 0)`.
fn scale_pairs(z: &mut [f64], m: &[f64]) -> bool {
    let mut degenerate = false;
    for (pair, &mw) in z.chunks_exact_mut(2).zip(m) {
        let rho = pair[0].hypot(pair[1]);
        if rho == 0.0 {
            degenerate = true;
            pair[0] = mw;
            pair[1] = 0.0;
        } else {
            let s = mw / rho;
            pair[0] *= s;
            pair[1] *= s;
        }
    }
    degenerate
}

impl SphereProduct {
    pub fn new(m: Vec<f64>, domain: Domain) -> Result<Self> {
        Ok(SphereProduct {
            m: MagnitudeSpec::new(m)?,
            domain,
        })
    }

    pub fn dimension(&self) -> usize {
        2 * self.m.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.m.validate()
    }

    pub fn project(&self, q: &Point) -> Result<ProjectionResult> {
        let x = q.as_slice();
        let (p, degenerate) = match self.domain {
            Domain::Signal => {
                let mut p = x.to_vec();
                let deg = scale_pairs(&mut p, &self.m.m);
                (p, deg)
            }
            Domain::Frequency => {
                let mut y = dft(x);
                let deg = scale_pairs(&mut y, &self.m.m);
                (idft(&y), deg)
            }
        };
        let d = dist(x, &p);
        let p = Point::from_vec(p);
        Ok(if degenerate {
            ProjectionResult::representative(p, d)
        } else {
            ProjectionResult::unique(p, d)
        })
    }
}

/// Keep-masks selecting the `k` largest scores, one mask per tie pattern at
/// the cut. The flag reports that enumeration was capped.
fn top_k_masks(scores: &[f64], k: usize) -> (Vec<Vec<bool>>, bool) {
    let n = scores.len();
    if k >= n {
        return (vec![vec![true; n]], false);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    if k == 0 {
        return (vec![vec![false; n]], false);
    }
    let cut = scores[order[k - 1]];
    if cut == 0.0 {
        let mask = (0..n).map(|i| scores[i] > 0.0).collect();
        return (vec![mask], false);
    }
    let slack = 1e-12 * cut;
    let above: Vec<usize> = (0..n).filter(|&i| scores[i] > cut + slack).collect();
    let tied: Vec<usize> = (0..n).filter(|&i| (scores[i] - cut).abs() <= slack).collect();
    let need = k - above.len();
    let mut base = vec![false; n];
    above.iter().for_each(|&i| base[i] = true);
    let capped = binomial(tied.len(), need) > MAX_ENUMERATED;
    let picks = if capped {
        vec![(0..need).collect()]
    } else {
        combinations(tied.len(), need)
    };
    let masks = picks
        .into_iter()
        .map(|pick| {
            let mut m = base.clone();
            pick.iter().for_each(|&j| m[tied[j]] = true);
            m
        })
        .collect();
    (masks, capped)
}

fn collect(q: &Point, candidates: Vec<Vec<f64>>, capped: bool) -> ProjectionResult {
    let d = dist(q.as_slice(), &candidates[0]);
    let points: Vec<Point> = candidates.into_iter().map(Point::from_vec).collect();
    let mut r = ProjectionResult::enumerated(points, d);
    r.multivalued |= capped;
    r
}

fn validate_k(n: usize, k: usize, family: &str) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid(format!("{family} needs n >= 1")));
    }
    if k > n {
        return Err(Error::invalid(format!("{family}: k = {k} exceeds n = {n}")));
    }
    Ok(())
}

/// Complex vectors with at most `k` nonzero entries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sparsity {
    pub n: usize,
    pub k: usize,
}

impl Sparsity {
    pub fn dimension(&self) -> usize {
        2 * self.n
    }

    pub fn validate(&self) -> Result<()> {
        validate_k(self.n, self.k, "sparsity")
    }

    pub fn project(&self, q: &Point) -> Result<ProjectionResult> {
        let x = q.as_slice();
        let moduli: Vec<f64> = x.chunks_exact(2).map(|p| p[0].hypot(p[1])).collect();
        let (masks, capped) = top_k_masks(&moduli, self.k);
        let candidates = masks
            .iter()
            .map(|mask| {
                x.chunks_exact(2)
                    .zip(mask)
                    .flat_map(|(p, &keep)| if keep { [p[0], p[1]] } else { [0.0, 0.0] })
                    .collect()
            })
            .collect();
        Ok(collect(q, candidates, capped))
    }
}

/// Signals whose transform has at most `k` entries with nonzero imaginary
/// part.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsePhase {
    pub n: usize,
    pub k: usize,
}

impl SparsePhase {
    pub fn dimension(&self) -> usize {
        2 * self.n
    }

    pub fn validate(&self) -> Result<()> {
        validate_k(self.n, self.k, "sparse-phase")
    }

    pub fn project(&self, q: &Point) -> Result<ProjectionResult> {
        let y = dft(q.as_slice());
        let imag: Vec<f64> = y.chunks_exact(2).map(|p| p[1].abs()).collect();
        let (masks, capped) = top_k_masks(&imag, self.k);
        let candidates = masks
            .iter()
            .map(|mask| {
                let yk: Vec<f64> = y
                    .chunks_exact(2)
                    .zip(mask)
                    .flat_map(|(p, &keep)| [p[0], if keep { p[1] } else { 0.0 }])
                    .collect();
                idft(&yk)
            })
            .collect();
        Ok(collect(q, candidates, capped))
    }
}

/// Complex vectors vanishing outside the index set `support`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub n: usize,
    pub support: Vec<usize>,
}

impl Support {
    pub fn dimension(&self) -> usize {
        2 * self.n
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("support needs n >= 1"));
        }
        if let Some(&i) = self.support.iter().find(|&&i| i >= self.n) {
            return Err(Error::invalid(format!(
                "support index {i} out of range for n = {}",
                self.n
            )));
        }
        Ok(())
    }

    pub fn project(&self, q: &Point) -> Result<ProjectionResult> {
        let x = q.as_slice();
        let mut p = vec![0.0; x.len()];
        for &i in &self.support {
            p[2 * i] = x[2 * i];
            p[2 * i + 1] = x[2 * i + 1];
        }
        let d = dist(x, &p);
        Ok(ProjectionResult::unique(Point::from_vec(p), d))
    }
}

/// Complex vectors with real, nonnegative entries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonnegReal {
    pub n: usize,
}

impl NonnegReal {
    pub fn dimension(&self) -> usize {
        2 * self.n
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("nonneg-real needs n >= 1"));
        }
        Ok(())
    }

    pub fn project(&self, q: &Point) -> Result<ProjectionResult> {
        let x = q.as_slice();
        let p: Vec<f64> = x.chunks_exact(2).flat_map(|c| [c[0].max(0.0), 0.0]).collect();
        let d = dist(x, &p);
        Ok(ProjectionResult::unique(Point::from_vec(p), d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sphere_product_examples() {
        let s = SphereProduct::new(vec![1.0, 1.0], Domain::Signal).unwrap();
        let r = s.project(&pt(&[2.0, 0.0, 0.0, 3.0])).unwrap();
        assert_eq!((r.chosen(), r.multivalued), (&pt(&[1.0, 0.0, 0.0, 1.0]), false));
        let r = s.project(&pt(&[1.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(r.distance, 0.0);
        let r = s.project(&pt(&[0.0, 0.0, 0.0, 3.0])).unwrap();
        assert_eq!((r.chosen(), r.multivalued), (&pt(&[1.0, 0.0, 0.0, 1.0]), true));
    }

    #[test]
    fn frequency_sphere_product_is_conjugated() {
        let s = SphereProduct::new(vec![1.0, 2.0, 0.5, 1.5], Domain::Frequency).unwrap();
        let q = pt(&[0.3, -0.2, 1.1, 0.4, -0.7, 0.9, 0.05, 0.6]);
        let r = s.project(&q).unwrap();
        let y = dft(r.chosen().as_slice());
        for (w, pair) in y.chunks_exact(2).enumerate() {
            assert!((pair[0].hypot(pair[1]) - s.m.m[w]).abs() < 1e-12);
        }
        let direct = SphereProduct::new(s.m.m.clone(), Domain::Signal).unwrap();
        let rf = direct.project(&Point::from_vec(dft(q.as_slice()))).unwrap();
        assert!((rf.distance - r.distance).abs() < 1e-12);
    }

    #[test]
    fn sparsity_examples() {
        let s = Sparsity { n: 2, k: 1 };
        let r = s.project(&pt(&[3.0, 0.0, -5.0, 0.0])).unwrap();
        assert_eq!(r.points, vec![pt(&[0.0, 0.0, -5.0, 0.0])]);
        let r = s.project(&pt(&[2.0, 0.0, 0.0, 2.0])).unwrap();
        assert_eq!(r.points, vec![pt(&[2.0, 0.0, 0.0, 0.0]), pt(&[0.0, 0.0, 0.0, 2.0])]);
        assert!(r.multivalued);
        let q = pt(&[1.0, 2.0, 3.0, 4.0]);
        let r = Sparsity { n: 2, k: 2 }.project(&q).unwrap();
        assert_eq!((r.chosen(), r.distance), (&q, 0.0));
    }

    #[test]
    fn sparse_phase_examples() {
        let s = SparsePhase { n: 2, k: 1 };
        let y = [1.0, 0.1, 1.0, 3.0];
        let q = pt(&idft(&y));
        let r = s.project(&q).unwrap();
        let yp = dft(r.chosen().as_slice());
        for (a, b) in yp.iter().zip([1.0, 0.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let real = pt(&idft(&[0.5, 0.0, -2.0, 0.0]));
        let r = s.project(&real).unwrap();
        assert!(r.distance < 1e-15);
    }

    #[test]
    fn nonneg_real_and_support() {
        let r = NonnegReal { n: 2 }.project(&pt(&[-1.0, 2.0, 3.0, -1.0])).unwrap();
        assert_eq!(r.chosen(), &pt(&[0.0, 0.0, 3.0, 0.0]));
        let r = NonnegReal { n: 1 }.project(&pt(&[0.0, 5.0])).unwrap();
        assert_eq!(r.chosen(), &pt(&[0.0, 0.0]));
        let s = Support { n: 2, support: vec![0] };
        let r = s.project(&pt(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(r.chosen(), &pt(&[1.0, 2.0, 0.0, 0.0]));
        assert!(Support { n: 2, support: vec![2] }.validate().is_err());
    }
}
