//! Finite-`p` gap probability `E_{p,2k}(t)` and smallest-eigenvalue density
//! `P_{p,2k}(t)`, plus the classical closed forms for `k = 0, 1`.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::kernels::{xi_from_family, xi_small_vec, KernelSpec, PolynomialFamily};
use crate::microscopic;
use crate::pfaffian::AntisymmetricMatrix;
use crate::quad::{integrate, integrate_to_inf, Tol};
use crate::sop::{half_power_average, partition_z};
use crate::specfun::{laguerre_monic, ln_factorial, ln_gamma_pos, tricomi_u, tricomi_u0, LogScaled};

const LN2: f64 = std::f64::consts::LN_2;
const LN_PI: f64 = 1.144_729_885_849_400_2;

/// `p` rows, topology `nu = 2k`, spectral point `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiniteSpec {
    pub p: usize,
    pub k: usize,
    pub t: f64,
}

impl FiniteSpec {
    pub fn new(p: usize, k: usize, t: f64) -> Result<Self> {
        if p == 0 {
            return domain("p must be at least 1");
        }
        if !(t >= 0.0) || !t.is_finite() {
            return domain(format!("t must be finite and non-negative, got {t}"));
        }
        Ok(FiniteSpec { p, k, t })
    }
}

/// Log of the t-independent constant in front of the gap (`gamma = 0`) or
/// density (`gamma = 1`) Pfaffian.
fn ln_constant(p: usize, k: usize, gamma: u32) -> f64 {
    let (pf, kf) = (p as f64, k as f64);
    let lg = ln_gamma_pos;
    let mut s = 0.0;
    for l in 0..k {
        let lf = l as f64;
        s += (lf + 1.0) * 2.0 * LN2 + lg(2.0 * lf + 1.0) + lg(pf + lf + 2.0) + (lf - 1.0) * pf.ln()
            - lg(lf + 1.0)
            - lg(pf + 2.0 * lf + 1.0);
    }
    let common = -0.5 * LN_PI + lg(pf + 1.0) + lg(0.5 * (pf + 1.0)) - lg(pf + kf + 1.0);
    let even = k % 2 == 0;
    s + common
        + match (gamma, even) {
            (0, true) => -0.5 * kf * LN2 + 1.5 * kf * pf.ln() - lg(0.5 * (pf + kf + 1.0)),
            (0, false) => -0.5 * (kf + 3.0) * LN2 + 0.5 * (3.0 * kf - 1.0) * pf.ln() - lg(0.5 * (pf + kf)),
            (_, true) => -0.5 * (kf + 5.0) * LN2 + 0.5 * (3.0 * kf - 1.0) * pf.ln() - lg(0.5 * (pf + kf)),
            (_, false) => -0.5 * (kf + 6.0) * LN2 + 1.5 * kf * pf.ln() - lg(0.5 * (pf + kf + 1.0)),
        }
}

/// Deep in the tail both `E` and `P` (which carry `e^{-pt/2}` times a polynomial
/// of bounded degree) underflow; the kernel entries could overflow there.
fn underflows(p: usize, k: usize, t: f64) -> bool {
    let d = ((p + k + 2) * (k + 2)) as f64;
    0.5 * p as f64 * t - d * t.ln().max(0.0) > 800.0
}

/// Pfaffian of the `k x k` kernel (k even) or of the kernel bordered by `xi` (k odd).
pub(crate) fn kernel_pfaffian(k: usize, spec: &KernelSpec) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    let fam = PolynomialFamily::new(spec.gamma, spec.l, spec.t)?;
    let xi = xi_from_family(&fam, k, spec);
    if k % 2 == 0 {
        return Ok(AntisymmetricMatrix::from_fn(k, |a, b| xi[a][b])?.pfaffian());
    }
    let v = xi_small_vec(k, spec)?;
    let m = AntisymmetricMatrix::from_fn(k + 1, |a, b| if b == k { v[a] } else { xi[a][b] })?;
    Ok(m.pfaffian())
}

/// Gap probability `E_{p,2k}(t)`: probability that no eigenvalue lies in `[0, t]`.
pub fn gap_finite(spec: FiniteSpec) -> Result<f64> {
    let FiniteSpec { p, k, t } = FiniteSpec::new(spec.p, spec.k, spec.t)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    if underflows(p, k, t) {
        return Ok(0.0);
    }
    let (pf, kf) = (p as f64, k as f64);
    let (l, a, power) = if k % 2 == 0 {
        (p + k, 0.5 * (pf + kf + 1.0), -0.5 * kf * kf + 0.5)
    } else {
        (p + k + 1, 0.5 * (pf + kf), -0.5 * kf * kf + 1.0)
    };
    let ks = KernelSpec::new(0, l, t)?;
    let pf_val = kernel_pfaffian(k, &ks)?;
    let u = tricomi_u(a, 1.5, 0.5 * t)?;
    let lpre = ln_constant(p, k, 0) + power * (4.0 * pf * t).ln() - 0.5 * pf * t + ln_gamma_pos(a)
        - LN2
        - 0.5 * (2.0 * pf).ln();
    Ok((u.mul_exp(lpre) * LogScaled::from_f64(pf_val)).to_f64())
}

/// Density `P_{p,2k}(t)` of the smallest eigenvalue, as a density in `t`.
pub fn smallest_finite(spec: FiniteSpec) -> Result<f64> {
    let FiniteSpec { p, k, t } = FiniteSpec::new(spec.p, spec.k, spec.t)?;
    if t == 0.0 {
        return Ok(if k == 0 { f64::INFINITY } else { 0.0 });
    }
    if p == 1 && k % 2 == 0 {
        // a single eigenvalue: chi-square law with 2k+1 degrees of freedom
        let h = k as f64 + 0.5;
        return Ok(((h - 1.0) * t.ln() - 0.5 * t - h * LN2 - ln_gamma_pos(h)).exp());
    }
    if underflows(p, k, t) {
        return Ok(0.0);
    }
    let (pf, kf) = (p as f64, k as f64);
    let (l, a, power) = if k % 2 == 0 {
        (p + k - 1, 0.5 * (pf + kf + 2.0), -0.5 * kf * kf + 1.0)
    } else {
        (p + k, 0.5 * (pf + kf + 1.0), -0.5 * kf * kf + 0.5)
    };
    let ks = KernelSpec::new(1, l, t)?;
    let pf_val = kernel_pfaffian(k, &ks)?;
    let u = tricomi_u(a, 2.5, 0.5 * t)?;
    // the trailing 4p turns the measure d(4pt) into dt
    let lpre = ln_constant(p, k, 1) + power * (4.0 * pf * t).ln() - 0.5 * pf * t + ln_gamma_pos(a)
        - LN2
        - 1.5 * (2.0 * pf).ln()
        + (4.0 * pf).ln();
    Ok((u.mul_exp(lpre) * LogScaled::from_f64(pf_val)).to_f64())
}

/// `E_{p,0}(t) = e^{-pt/2} (Z_{p,1}/Z_{p,0}) <det^{-1/2}(X+t)>_{p,1}`, an independent route for `k = 0`.
pub fn gap_k0_via_average(p: usize, t: f64) -> Result<f64> {
    if p == 0 || !(t > 0.0) {
        return domain(format!("gap_k0_via_average needs p >= 1, t > 0; got p={p}, t={t}"));
    }
    let r = partition_z(p, 1)? / partition_z(p, 0)? * half_power_average(p, 1, t)?;
    Ok(r.mul_exp(-0.5 * p as f64 * t).to_f64())
}

/// Closed form of `P_{p,0}(t)`.
pub fn closed_form_k0(p: usize, t: f64) -> Result<f64> {
    if p < 2 || !(t > 0.0) {
        return domain(format!("closed_form_k0 needs p >= 2, t > 0; got p={p}, t={t}"));
    }
    let pf = p as f64;
    let u = tricomi_u0(0.5 * (pf - 1.0), -0.5, 0.5 * t)?;
    let l = ln_factorial(p as u64) - (pf - 0.5) * LN2 - ln_gamma_pos(0.5 * pf) - 0.5 * t.ln() - 0.5 * pf * t;
    Ok(u.mul_exp(l).to_f64())
}

/// Closed form of `P_{p,2}(t)`. The second bracket term carries a factor `t/2`
/// (Kummer transform of the `k = 1` Pfaffian expression); without it the
/// printed two-term form is not normalised.
pub fn closed_form_k1(p: usize, t: f64) -> Result<f64> {
    if p < 2 || !(t > 0.0) {
        return domain(format!("closed_form_k1 needs p >= 2, t > 0; got p={p}, t={t}"));
    }
    let pf = p as f64;
    let z = 0.5 * t;
    let sgn = |n: usize| if n % 2 == 0 { 1.0 } else { -1.0 };
    let a = tricomi_u0(0.5 * (pf - 1.0), -0.5, z)?
        * laguerre_monic(p as i64 - 1, 2.0, -t).mul_f64(sgn(p - 1)).mul_exp(-ln_factorial(p as u64 - 1));
    let b = tricomi_u(0.5 * (pf + 1.0), 0.5, z)?
        * laguerre_monic(p as i64 - 2, 3.0, -t).mul_f64(sgn(p - 2) * z).mul_exp(-ln_factorial(p as u64 - 2));
    let l = ln_gamma_pos(0.5 * (pf + 1.0)) - 0.5 * (2.0 * std::f64::consts::PI).ln() + 0.5 * t.ln() - 0.5 * pf * t;
    Ok(a.add(b).mul_exp(l).to_f64())
}

/// Which curve a [`DistributionCurve`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    /// finite-`p` gap probability `E`
    Gap,
    /// finite-`p` smallest-eigenvalue density `P`
    Smallest,
    /// hard-edge gap probability
    MicroGap,
    /// hard-edge smallest-eigenvalue density
    MicroSmallest,
    /// microscopic level density `rho_nu`
    Density,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Finite,
    Microscopic,
    Density,
}

impl Quantity {
    pub fn regime(self) -> Regime {
        match self {
            Quantity::Gap | Quantity::Smallest => Regime::Finite,
            Quantity::MicroGap | Quantity::MicroSmallest => Regime::Microscopic,
            Quantity::Density => Regime::Density,
        }
    }

    pub fn is_gap(self) -> bool {
        matches!(self, Quantity::Gap | Quantity::MicroGap)
    }
}

/// Tabulated `(abscissa, value)` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionCurve {
    pub regime: Regime,
    pub quantity: Quantity,
    /// `None` in the microscopic limit.
    pub p: Option<usize>,
    pub nu: usize,
    pub samples: Vec<(f64, f64)>,
}

/// Curve parameters: `p` (finite regime only) and `nu` (`2k` except for the density).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveParams {
    pub p: Option<usize>,
    pub nu: usize,
}

/// Evaluates `quantity` at one abscissa.
pub fn evaluate(quantity: Quantity, params: CurveParams, x: f64) -> Result<f64> {
    let need_even = || {
        if params.nu % 2 != 0 {
            domain(format!("only even nu = 2k is supported, got {}", params.nu))
        } else {
            Ok(params.nu / 2)
        }
    };
    let need_p = || params.p.ok_or_else(|| Error::Domain("finite-p quantity needs p".into()));
    match quantity {
        Quantity::Gap => gap_finite(FiniteSpec::new(need_p()?, need_even()?, x)?),
        Quantity::Smallest => smallest_finite(FiniteSpec::new(need_p()?, need_even()?, x)?),
        Quantity::MicroGap => microscopic::gap_micro(need_even()?, x),
        Quantity::MicroSmallest => microscopic::smallest_micro(need_even()?, x),
        Quantity::Density => microscopic::micro_density(params.nu as u32, x),
    }
}

/// Evaluates `quantity` on a strictly increasing positive grid, in parallel.
pub fn tabulate(quantity: Quantity, params: CurveParams, grid: &[f64]) -> Result<DistributionCurve> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("grid must be strictly increasing");
    }
    if grid.iter().any(|&x| !(x >= 0.0)) {
        return domain("grid must be non-negative");
    }
    let samples = grid
        .par_iter()
        .map(|&x| {
            evaluate(quantity, params, x)
                .map(|v| (x, v))
                .map_err(|e| Error::AtPoint { abscissa: x, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DistributionCurve {
        regime: quantity.regime(),
        quantity,
        p: if quantity.regime() == Regime::Finite { params.p } else { None },
        nu: params.nu,
        samples,
    })
}

/// Evenly spaced grid of `n` points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `int_0^inf P_{p,2k}(t) dt` by adaptive quadrature.
pub fn smallest_normalization(p: usize, k: usize, rel: f64) -> Result<f64> {
    let mut err = None;
    let mut f = |t: f64| match smallest_finite(FiniteSpec { p, k, t }) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    };
    // the k = 0 density has an integrable t^{-1/2} edge: substitute t = s^2
    let g = |s: f64| 2.0 * s * f(s * s);
    let (v, _) = integrate_to_inf(g, 0.0, Tol { abs: 0.0, rel, max_intervals: 2000 })?;
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Direct `p`-fold quadrature of the defining integrals, for `p <= 3`. Test oracles.
pub mod oracle {
    use super::*;

    fn nested(p: usize, f: &dyn Fn(&[f64]) -> f64, tol: f64) -> Result<f64> {
        // ordered region 0 < y_1 < ... < y_p, outermost variable y_p on [0, inf)
        fn level(depth: usize, upper: f64, ys: &mut Vec<f64>, f: &dyn Fn(&[f64]) -> f64, tol: f64) -> Result<f64> {
            if depth == 0 {
                return Ok(f(ys));
            }
            let mut err = None;
            let v = {
                let mut g = |y: f64| {
                    ys.push(y);
                    let r = level(depth - 1, y, ys, f, tol);
                    ys.pop();
                    r.unwrap_or_else(|e| {
                        err.get_or_insert(e);
                        0.0
                    })
                };
                let t = Tol { abs: 1e-300, rel: tol, max_intervals: 400 };
                if upper.is_infinite() { integrate_to_inf(&mut g, 0.0, t)?.0 } else { integrate(&mut g, 0.0, upper, t)?.0 }
            };
            match err {
                Some(e) => Err(e),
                None => Ok(v),
            }
        }
        level(p, f64::INFINITY, &mut Vec::with_capacity(p), f, tol)
    }

    fn vandermonde(y: &[f64]) -> f64 {
        let mut d = 1.0;
        for i in 0..y.len() {
            for j in i + 1..y.len() {
                d *= (y[i] - y[j]).abs();
            }
        }
        d
    }

    /// `E_{p,nu}(t)` from its defining `p`-fold integral.
    pub fn gap_brute(p: usize, nu: usize, t: f64) -> Result<f64> {
        if !(1..=3).contains(&p) {
            return domain("gap_brute supports 1 <= p <= 3");
        }
        let e = 0.5 * (nu as f64 - 1.0);
        let f = |y: &[f64]| y.iter().map(|&x| (x + t).powf(e) * (-0.5 * x).exp()).product::<f64>() * vandermonde(y);
        let v = nested(p, &f, 1e-11)?;
        let z = partition_z(p, nu as i64)?;
        Ok(LogScaled::from_f64(v).mul_exp(ln_factorial(p as u64) - 0.5 * p as f64 * t).div_ls(z))
    }

    /// `P_{p,nu}(t)` from its defining `(p-1)`-fold integral.
    pub fn smallest_brute(p: usize, nu: usize, t: f64) -> Result<f64> {
        if !(1..=3).contains(&p) {
            return domain("smallest_brute supports 1 <= p <= 3");
        }
        let e = 0.5 * (nu as f64 - 1.0);
        let f = |y: &[f64]| y.iter().map(|&x| x * (x + t).powf(e) * (-0.5 * x).exp()).product::<f64>() * vandermonde(y);
        let v = nested(p - 1, &f, 1e-11)?;
        let z = partition_z(p, nu as i64)?;
        let l = (p as f64).ln() + ln_factorial(p as u64 - 1) + e * t.ln() - 0.5 * p as f64 * t;
        Ok(LogScaled::from_f64(v).mul_exp(l).div_ls(z))
    }

    trait DivLs {
        fn div_ls(self, z: LogScaled) -> f64;
    }

    impl DivLs for LogScaled {
        fn div_ls(self, z: LogScaled) -> f64 {
            (self / z).to_f64()
        }
    }
}
