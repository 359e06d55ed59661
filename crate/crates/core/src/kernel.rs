//! Base kernels and the extended kernel on duplicated covariates.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Kernel family for the decision function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    /// `exp(-|x - y|^2 / (2 sigma^2))`
    Gaussian {
        sigma: f64,
    },
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        let spec = KernelSpec::Gaussian { sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Gaussian { sigma } if sigma.is_finite() && sigma > 0.0 => Ok(()),
            KernelSpec::Gaussian { sigma } => Err(Error::InvalidInput(format!(
                "gaussian bandwidth must be finite and positive, got {sigma}"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Gaussian { .. } => "gaussian",
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match *self {
            KernelSpec::Linear => None,
            KernelSpec::Gaussian { sigma } => Some(sigma),
        }
    }

    /// Base kernel `k(x, y)`. Slices must have equal length.
    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match *self {
            KernelSpec::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            KernelSpec::Gaussian { sigma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

/// `k(x_i, x_j) + [k == h]`: the kernel between duplicates `(x_i, e_k)` and
/// `(x_j, e_h)`. Duplicate indices are 1-based.
pub fn extended_kernel(spec: &KernelSpec, xi: &[f64], k: usize, xj: &[f64], h: usize) -> Result<f64> {
    spec.validate()?;
    if xi.len() != xj.len() {
        return Err(Error::DimensionMismatch {
            expected: xi.len(),
            found: xj.len(),
        });
    }
    if k == 0 || h == 0 {
        return Err(Error::InvalidInput("duplicate indices are 1-based".into()));
    }
    Ok(spec.eval(xi, xj) + if k == h { 1.0 } else { 0.0 })
}

/// Dense symmetric Gram matrix of the base kernel over a point set,
/// stored row-major.
#[derive(Debug, Clone)]
pub struct Gram {
    n: usize,
    values: Vec<f64>,
}

impl Gram {
    pub fn new<'a, I>(spec: &KernelSpec, rows: I) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        let n = rows.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = spec.eval(rows[i], rows[j]);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self { n, values }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Adds `delta` to every diagonal entry.
    pub fn add_to_diagonal(&mut self, delta: f64) {
        for i in 0..self.n {
            self.values[i * self.n + i] += delta;
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let m = DMatrix::from_row_slice(self.n, self.n, &self.values);
        SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Smallest eigenvalue of an arbitrary symmetric matrix given row-major.
pub fn min_eigenvalue(n: usize, values: &[f64]) -> f64 {
    let m = DMatrix::from_row_slice(n, n, values);
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
