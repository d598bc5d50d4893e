//! Sampling real (optionally row-correlated) Wishart matrices and comparing
//! their smallest eigenvalues with the analytic curves.

use std::path::Path;

pub use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), one stream per sample index";

/// Sampler parameters. `correlation = None` means `C = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub p: usize,
    pub n: usize,
    pub correlation: Option<DMatrix<f64>>,
    pub num_samples: usize,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(p: usize, n: usize, num_samples: usize, seed: u64) -> Result<Self> {
        let c = SamplerConfig { p, n, correlation: None, num_samples, seed };
        c.validate()?;
        Ok(c)
    }

    pub fn with_correlation(mut self, c: DMatrix<f64>) -> Result<Self> {
        self.correlation = Some(c);
        self.validate()?;
        Ok(self)
    }

    pub fn nu(&self) -> usize {
        self.n - self.p
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.num_samples == 0 {
            return Err(Error::Domain("p and num_samples must be positive".into()));
        }
        if self.n < self.p {
            return Err(Error::Domain(format!("n = {} must be at least p = {}", self.n, self.p)));
        }
        if let Some(c) = &self.correlation {
            validate_correlation(c)?;
            if c.nrows() != self.p {
                return Err(Error::Shape(format!("correlation matrix is {}x{}, expected {}x{}", c.nrows(), c.ncols(), self.p, self.p)));
            }
        }
        Ok(())
    }
}

/// Where the random numbers came from.
#[derive(Clone, Debug, PartialEq)]
pub struct RngProvenance {
    pub algorithm: String,
    pub seed: u64,
    /// sample `i` uses stream `first_stream + i`
    pub first_stream: u64,
    pub num_streams: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub config: SamplerConfig,
    pub smallest_eigenvalues: Vec<f64>,
    pub rng: RngProvenance,
    /// multiplier already applied to the eigenvalues (`4p` after [`microscopic_rescale`])
    pub scale: f64,
}

/// Checks symmetry (to 1e-12 relative to the largest entry) and positive definiteness.
pub fn validate_correlation(c: &DMatrix<f64>) -> Result<()> {
    if c.nrows() != c.ncols() || c.nrows() == 0 {
        return Err(Error::InvalidMatrix(format!("correlation matrix must be square, got {}x{}", c.nrows(), c.ncols())));
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("correlation matrix has non-finite entries".into()));
    }
    let scale = c.amax().max(f64::MIN_POSITIVE);
    for i in 0..c.nrows() {
        for j in 0..i {
            if (c[(i, j)] - c[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::InvalidMatrix(format!("correlation matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    c.clone().cholesky().map(|_| ()).ok_or(Error::NotPositiveDefinite)
}

/// Reads a `p x p` correlation matrix from a headerless CSV file.
pub fn load_correlation_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::InvalidMatrix(format!("row {}: {s:?}: {e}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let p = rows.len();
    if p == 0 || rows.iter().any(|r| r.len() != p) {
        return Err(Error::InvalidMatrix(format!("{}: expected a square matrix with p rows of p entries", path.display())));
    }
    let c = DMatrix::from_fn(p, p, |i, j| rows[i][j]);
    validate_correlation(&c)?;
    Ok(c)
}

/// Writes `c` as CSV with 17 significant digits.
pub fn write_correlation_csv(path: &Path, c: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    for i in 0..c.nrows() {
        w.write_record((0..c.ncols()).map(|j| format!("{:.16e}", c[(i, j)])))
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// `C_ij = rho^{|i-j|}`.
pub fn exp_decay_correlation(p: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| rho.powi((i as i64 - j as i64).unsigned_abs() as i32))
}

/// `tr(C^{-1}) / p`: the factor by which the hard-edge scale of `L G` differs
/// from the uncorrelated one.
pub fn harmonic_scale(c: &DMatrix<f64>) -> Result<f64> {
    let chol = c.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.inverse().trace() / c.nrows() as f64)
}

/// Exponential-decay stand-in normalised so that `tr(C^{-1}) = p`.
/// Returns the matrix and the factor `h` it was multiplied by.
pub fn normalized_exp_decay(p: usize, rho: f64) -> Result<(DMatrix<f64>, f64)> {
    let c = exp_decay_correlation(p, rho);
    let h = harmonic_scale(&c)?;
    Ok((c * h, h))
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Smallest eigenvalue of `M M^T` for lower-triangular `M`, by inverse iteration
/// with triangular solves; falls back to a dense SVD if it stalls.
pub fn smallest_eig_lower(m: &DMatrix<f64>) -> Option<f64> {
    let p = m.nrows();
    if (0..p).any(|i| m[(i, i)] == 0.0) {
        return None;
    }
    let mut y: Vec<f64> = (0..p).map(|i| 1.0 + i as f64 / p as f64).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let n0 = norm(&y);
    y.iter_mut().for_each(|v| *v /= n0);
    let mut w = vec![0.0; p];
    let mut lambda = f64::NAN;
    for _ in 0..400 {
        // M^T w = y (back substitution); column i of M is row i of M^T
        for i in (0..p).rev() {
            let col = m.column(i);
            let mut s = y[i];
            for j in i + 1..p {
                s -= col[j] * w[j];
            }
            w[i] = s / col[i];
        }
        // M x = w (forward substitution), column oriented
        let mut x = w.clone();
        for j in 0..p {
            let col = m.column(j);
            x[j] /= col[j];
            let xj = x[j];
            for i in j + 1..p {
                x[i] -= col[i] * xj;
            }
        }
        let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let new = 1.0 / dot;
        let nx = norm(&x);
        y.iter_mut().zip(&x).for_each(|(a, b)| *a = b / nx);
        if (new - lambda).abs() <= 1e-14 * new.abs() {
            return Some(new);
        }
        lambda = new;
    }
    let s = m.clone().singular_values();
    let v = s.min();
    (v > 0.0).then_some(v * v)
}

/// One sample: smallest eigenvalue of `W W^T`, `W = L G`.
fn one_sample(cfg: &SamplerConfig, chol_l: Option<&DMatrix<f64>>, index: u64) -> Result<f64> {
    let mut rng = rng_for(cfg.seed, index);
    let (p, n) = (cfg.p, cfg.n);
    // entries of G in row-major order fill G^T column by column
    let gt = DMatrix::<f64>::from_iterator(n, p, (0..n * p).map(|_| StandardNormal.sample(&mut rng)));
    // G^T = Q R, so W W^T = (L R^T)(L R^T)^T with L R^T lower triangular
    let rt = gt.qr().r().transpose();
    let m = match chol_l {
        Some(l) => l * rt,
        None => rt,
    };
    match smallest_eig_lower(&m) {
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(Error::Sample { index: index as usize, msg: "singular or non-convergent factor".into() }),
    }
}

/// Draws `num_samples` matrices and records their smallest eigenvalues.
/// The result depends only on the config, not on the thread count.
pub fn sample_batch(config: &SamplerConfig) -> Result<SampleBatch> {
    config.validate()?;
    let chol = match &config.correlation {
        Some(c) => Some(c.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.l()),
        None => None,
    };
    let vals = (0..config.num_samples as u64)
        .into_par_iter()
        .map(|i| one_sample(config, chol.as_ref(), i))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleBatch {
        config: config.clone(),
        smallest_eigenvalues: vals,
        rng: RngProvenance {
            algorithm: RNG_ALGORITHM.into(),
            seed: config.seed,
            first_stream: 0,
            num_streams: config.num_samples as u64,
        },
        scale: 1.0,
    })
}

/// Fraction of samples above `t`, with its binomial standard error.
pub fn empirical_gap(batch: &SampleBatch, t: f64) -> (f64, f64) {
    let n = batch.smallest_eigenvalues.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let above = batch.smallest_eigenvalues.iter().filter(|&&x| x > t).count();
    let e = above as f64 / n as f64;
    (e, (e * (1.0 - e) / n as f64).sqrt())
}

/// Kolmogorov-Smirnov distance between the sample CDF and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / n) - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// [`ks_distance`] for a batch, evaluating `cdf` in parallel.
pub fn ks_distance_batch<F: Fn(f64) -> f64 + Sync>(batch: &SampleBatch, cdf: F) -> f64 {
    let mut s = batch.smallest_eigenvalues.clone();
    s.sort_by(f64::total_cmp);
    let f: Vec<f64> = s.par_iter().map(|&x| cdf(x)).collect();
    let n = s.len() as f64;
    f.iter()
        .enumerate()
        .map(|(i, &f)| (((i + 1) as f64 / n) - f).max(f - i as f64 / n))
        .fold(0.0, f64::max)
}

/// A CDF tabulated on a grid uniform in `sqrt(x)` over `[0, hi]` (the hard-edge
/// laws are smooth in `sqrt(x)`), linearly interpolated; 1 beyond `hi`.
#[derive(Clone, Debug)]
pub struct TabulatedCdf {
    hi: f64,
    values: Vec<f64>,
}

impl TabulatedCdf {
    pub fn new<F: Fn(f64) -> Result<f64> + Sync>(cdf: F, hi: f64, points: usize) -> Result<Self> {
        let points = points.max(2);
        let values = (0..points)
            .into_par_iter()
            .map(|i| {
                let r = i as f64 / (points - 1) as f64;
                cdf(hi * r * r)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TabulatedCdf { hi, values })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.values[0];
        }
        if x >= self.hi {
            return 1.0;
        }
        let pos = (x / self.hi).sqrt() * (self.values.len() - 1) as f64;
        let i = pos.floor() as usize;
        let f = pos - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }
}

/// Maps each eigenvalue `lambda` to `u = 4 p lambda`.
pub fn microscopic_rescale(batch: &SampleBatch) -> SampleBatch {
    let f = 4.0 * batch.config.p as f64;
    SampleBatch {
        smallest_eigenvalues: batch.smallest_eigenvalues.iter().map(|x| x * f).collect(),
        scale: batch.scale * f,
        ..batch.clone()
    }
}

/// Undoes [`microscopic_rescale`].
pub fn unscale(batch: &SampleBatch) -> SampleBatch {
    let f = batch.scale;
    SampleBatch {
        smallest_eigenvalues: batch.smallest_eigenvalues.iter().map(|x| x / f).collect(),
        scale: 1.0,
        ..batch.clone()
    }
}

/// Histogram of the batch on `bins` equal bins over `[lo, hi]`, normalised as
/// a density with respect to all samples. Returns `(bin_centre, density)`.
pub fn histogram(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<(f64, f64)> {
    let w = (hi - lo) / bins as f64;
    let mut c = vec![0usize; bins];
    for &x in samples {
        if x >= lo && x < hi {
            c[(((x - lo) / w) as usize).min(bins - 1)] += 1;
        }
    }
    let n = samples.len() as f64;
    c.iter().enumerate().map(|(i, &k)| (lo + (i as f64 + 0.5) * w, k as f64 / (n * w))).collect()
}
