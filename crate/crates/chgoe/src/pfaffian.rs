//! Dense antisymmetric matrices and their Pfaffians.

use crate::error::{Error, Result};
use crate::specfun::LogScaled;

/// Real antisymmetric matrix of even dimension, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct AntisymmetricMatrix {
    dim: usize,
    a: Vec<f64>,
}

impl AntisymmetricMatrix {
    /// Builds the matrix from its strictly upper triangle, given row by row.
    pub fn from_upper(dim: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != dim * dim.saturating_sub(1) / 2 {
            return Err(Error::Shape(format!(
                "{} upper entries supplied for dimension {dim}",
                upper.len()
            )));
        }
        let mut it = upper.iter();
        Self::from_fn(dim, |_, _| *it.next().unwrap())
    }

    /// Builds the matrix from `f(i, j)` evaluated for `i < j`.
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(dim: usize, mut f: F) -> Result<Self> {
        if dim % 2 != 0 {
            return Err(Error::Shape(format!("odd dimension {dim}")));
        }
        let mut a = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i + 1..dim {
                let v = f(i, j);
                a[i * dim + j] = v;
                a[j * dim + i] = -v;
            }
        }
        Ok(AntisymmetricMatrix { dim, a })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.dim + j]
    }

    /// Row-major copy of all entries.
    pub fn to_dense(&self) -> Vec<f64> {
        self.a.clone()
    }

    /// `c * A`.
    pub fn scaled(&self, c: f64) -> Self {
        AntisymmetricMatrix { dim: self.dim, a: self.a.iter().map(|v| c * v).collect() }
    }

    /// `P A P^T` for the permutation sending row `i` to row `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.dim;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[perm[i] * n + perm[j]] = self.a[i * n + j];
            }
        }
        AntisymmetricMatrix { dim: n, a }
    }

    pub fn pfaffian(&self) -> f64 {
        pfaffian(self)
    }
}

/// Pfaffian with `pf(A)^2 = det(A)`; closed forms up to dimension 4,
/// pivoted Parlett-Reid reduction above.
pub fn pfaffian(m: &AntisymmetricMatrix) -> f64 {
    let g = |i: usize, j: usize| m.get(i, j);
    match m.dim {
        0 => 1.0,
        2 => g(0, 1),
        4 => g(0, 1) * g(2, 3) - g(0, 2) * g(1, 3) + g(0, 3) * g(1, 2),
        _ => pfaffian_log(m).to_f64(),
    }
}

/// Pfaffian accumulated in the log domain, for matrices whose Pfaffian
/// leaves the floating-point range.
pub fn pfaffian_log(m: &AntisymmetricMatrix) -> LogScaled {
    let n = m.dim;
    if n == 0 {
        return LogScaled::ONE;
    }
    let mut a = m.a.clone();
    let mut sign = 1i8;
    let mut logm = 0.0;
    let mut k = 0;
    while k + 1 < n {
        // largest entry in column k below the diagonal
        let mut kp = k + 1;
        let mut best = a[(k + 1) * n + k].abs();
        for i in k + 2..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                kp = i;
            }
        }
        if best == 0.0 {
            return LogScaled::ZERO;
        }
        if kp != k + 1 {
            swap_rc(&mut a, n, k + 1, kp);
            sign = -sign;
        }
        let piv = a[k * n + k + 1];
        if piv < 0.0 {
            sign = -sign;
        }
        logm += piv.abs().ln();
        if k + 2 < n {
            let tau: Vec<f64> = (k + 2..n).map(|j| a[k * n + j] / piv).collect();
            let col: Vec<f64> = (k + 2..n).map(|i| a[i * n + k + 1]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[i * n + j] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    LogScaled::new(sign, logm)
}

fn swap_rc(a: &mut [f64], n: usize, r: usize, s: usize) {
    for j in 0..n {
        a.swap(r * n + j, s * n + j);
    }
    for i in 0..n {
        a.swap(i * n + r, i * n + s);
    }
}
