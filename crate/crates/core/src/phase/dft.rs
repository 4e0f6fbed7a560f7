//! Unitary discrete Fourier transform on interleaved complex vectors.
//!
//! Forward kernel `exp(+2 pi i t w / N) / sqrt(N)`. Twiddles at multiples of
//! a quarter turn are exact so that the two-point transform is the real
//! matrix `[[1, 1], [1, -1]] / sqrt(2)` without rounding residue.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::primitives::Point;

fn twiddle(j: usize, n: usize, sign: f64) -> Complex64 {
    let j = j % n;
    if (4 * j).is_multiple_of(n) {
        return match 4 * j / n {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, sign),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -sign),
        };
    }
    let angle = sign * std::f64::consts::TAU * j as f64 / n as f64;
    Complex64::from_polar(1.0, angle)
}

pub fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

pub fn to_interleaved(z: &[Complex64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

fn transform(x: &[f64], sign: f64) -> Vec<f64> {
    let z = to_complex(x);
    let n = z.len();
    let scale = (n as f64).sqrt() / n as f64;
    let out: Vec<Complex64> = (0..n)
        .map(|w| {
            z.iter()
                .enumerate()
                .map(|(t, v)| twiddle(t * w, n, sign) * v)
                .sum::<Complex64>()
                * scale
        })
        .collect();
    to_interleaved(&out)
}

/// Forward transform of an interleaved signal of even length.
pub fn dft(x: &[f64]) -> Vec<f64> {
    debug_assert!(x.len().is_multiple_of(2) && !x.is_empty());
    transform(x, 1.0)
}

pub fn idft(x: &[f64]) -> Vec<f64> {
    debug_assert!(x.len().is_multiple_of(2) && !x.is_empty());
    transform(x, -1.0)
}

/// A complex signal of length `n` stored as a point in dimension `2n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    values: Point,
}

impl Signal {
    pub fn new(values: Point) -> Result<Self> {
        if !values.dim().is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "a complex signal needs an even number of reals, got {}",
                values.dim()
            )));
        }
        Ok(Signal { values })
    }

    pub fn from_complex(z: &[Complex64]) -> Result<Self> {
        Signal::new(Point::new(to_interleaved(z))?)
    }

    pub fn len(&self) -> usize {
        self.values.dim() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self) -> &Point {
        &self.values
    }

    pub fn into_point(self) -> Point {
        self.values
    }

    pub fn complex(&self) -> Vec<Complex64> {
        to_complex(self.values.as_slice())
    }

    pub fn dft(&self) -> Signal {
        Signal {
            values: Point::from_vec(dft(self.values.as_slice())),
        }
    }

    pub fn idft(&self) -> Signal {
        Signal {
            values: Point::from_vec(idft(self.values.as_slice())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Textbook evaluation with `cos`/`sin` of the full angle.
    fn naive(x: &[f64]) -> Vec<f64> {
        let n = x.len() / 2;
        let mut out = vec![0.0; 2 * n];
        for w in 0..n {
            for t in 0..n {
                let a = std::f64::consts::TAU * (t * w) as f64 / n as f64;
                let (c, s) = (a.cos(), a.sin());
                out[2 * w] += c * x[2 * t] - s * x[2 * t + 1];
                out[2 * w + 1] += s * x[2 * t] + c * x[2 * t + 1];
            }
        }
        out.iter().map(|v| v / (n as f64).sqrt()).collect()
    }

    #[test]
    fn two_point_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(dft(&[1.0, 0.0, 0.0, 0.0]), vec![h, 0.0, h, 0.0]);
        let y = dft(&[1.0, 0.0, 1.0, 0.0]);
        assert!((y[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(&y[1..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn unitary_and_invertible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1usize, 2, 4, 8, 16] {
            let x: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = dft(&x);
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((nx - ny).abs() < 1e-13);
            let back = idft(&y);
            for (a, b) in x.iter().zip(&back) {
                assert!((a - b).abs() < 1e-13);
            }
            for (a, b) in y.iter().zip(naive(&x)) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }
}
