//! Hard-edge limits in the variable `u = 4pt`: gap probability, smallest
//! eigenvalue density and the microscopic level density.

use crate::error::{domain, Error, Result};
use crate::pfaffian::{pfaffian_log, AntisymmetricMatrix};
use crate::quad::{gauss_legendre, gl_converged};
use crate::specfun::{bessel_i, bessel_j_table, ln_factorial, LogScaled};

fn check_u(u: f64) -> Result<()> {
    if !(u >= 0.0) || !u.is_finite() {
        return domain(format!("u must be finite and non-negative, got {u}"));
    }
    Ok(())
}

fn kr(gamma: u32, x: f64) -> f64 {
    if gamma == 0 { 1.0 } else { x / (x + 1.0) }
}

fn gl_order(u: f64) -> usize {
    (20.0 + 3.0 * u.sqrt()).ceil() as usize
}

/// `I_n(x) e^{-x}` for `n` in `lo..=hi`: the top two orders from the series,
/// the rest by the (stable) downward recurrence.
fn bessel_i_run(lo: u32, hi: u32, x: f64) -> Vec<f64> {
    let sc = |n: u32| bessel_i(n, x).map(|v| v.mul_exp(-x).to_f64()).unwrap_or(f64::NAN);
    let len = (hi - lo + 1) as usize;
    let mut v = vec![0.0; len];
    v[len - 1] = sc(hi);
    if len == 1 {
        return v;
    }
    v[len - 2] = sc(hi - 1);
    if x == 0.0 {
        if lo == 0 {
            v[0] = 1.0;
        }
        return v;
    }
    for i in (0..len - 2).rev() {
        let n = (lo as usize + i + 1) as f64;
        v[i] = v[i + 2] + 2.0 * n / x * v[i + 1];
    }
    v
}

/// Bordering entry `xi_a(u)` divided by `(sqrt(u)/2)^{2 gamma + a}` and by `e^{sqrt u}`.
fn xi_small_reduced(a: u32, gamma: u32, u: f64) -> f64 {
    let s = u.sqrt();
    let n = 2 * gamma + a;
    let i = bessel_i_run(n, n + 1, s);
    i[0] + kr(gamma, 0.5 * s) * i[1]
}

/// `xi_a(u)`, the hard-edge limit of the bordering vector.
pub fn xi_small_lim(a: u32, gamma: u32, u: f64) -> Result<f64> {
    check_u(u)?;
    let h = 0.5 * u.sqrt();
    let v = LogScaled::from_f64(xi_small_reduced(a, gamma, u));
    Ok(v.mul_exp((2 * gamma + a) as f64 * h.ln() + 2.0 * h).to_f64())
}

/// Kernel entries `Xi_ab(u)` for `a, b < k`, divided by
/// `(sqrt(u)/2)^{a+b+2} e^{2 sqrt u}`.
fn xi_big_reduced(k: u32, gamma: u32, u: f64) -> Result<Vec<Vec<f64>>> {
    let kk = k as usize;
    let mut out = vec![vec![0.0; kk]; kk];
    if k < 2 {
        return Ok(out);
    }
    let h = 0.5 * u.sqrt();
    let g2 = 2 * gamma;
    let pairs: Vec<(usize, usize)> = (0..kk).flat_map(|a| (a + 1..kk).map(move |b| (a, b))).collect();
    let integrand = |s: f64, acc: &mut [f64], w: f64| {
        let x = h * s;
        if x == 0.0 {
            return;
        }
        let i = bessel_i_run(g2, g2 + k, 2.0 * x);
        let r = kr(gamma, x);
        let br = x * (1.0 / r - r) - g2 as f64 - 1.0;
        // the scaled Bessel product carries e^{-4x}; rescale to e^{-2 sqrt u} overall
        let e = w * 0.25 * (4.0 * x - 4.0 * h).exp();
        for (slot, &(a, b)) in acc.iter_mut().zip(&pairs) {
            let (af, bf) = (a as f64, b as f64);
            let (ia, ia1, ib, ib1) = (i[a], i[a + 1], i[b], i[b + 1]);
            let body = 2.0 * (bf - af) * ia * ib
                + r * br * (ia * ib1 - ia1 * ib)
                + r * (2.0 * bf * ia1 * ib - 2.0 * af * ia * ib1);
            *slot += e * s.powi((a + b + 1) as i32) * body;
        }
    };
    let rule = |n: usize| {
        let g = gauss_legendre(n);
        let mut acc = vec![0.0; pairs.len()];
        for (x, w) in g.0.iter().zip(&g.1) {
            integrand(0.5 * (1.0 + x), &mut acc, 0.5 * w);
        }
        acc
    };
    let mut n = gl_order(u);
    let mut prev = rule(n);
    let mut done = false;
    for _ in 0..8 {
        n *= 2;
        let cur = rule(n);
        let scale = cur.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let ok = cur.iter().zip(&prev).all(|(c, p)| (c - p).abs() <= 1e-11 * scale.max(1e-300));
        prev = cur;
        if ok {
            done = true;
            break;
        }
    }
    if !done {
        return Err(Error::Quadrature(format!("kernel limit at u={u} not converged at order {n}")));
    }
    for (v, &(a, b)) in prev.iter().zip(&pairs) {
        out[a][b] = *v;
        out[b][a] = -*v;
    }
    Ok(out)
}

/// `Xi_ab(u)`, the hard-edge limit of the two-point kernel entries.
pub fn xi_big_lim(a: u32, b: u32, gamma: u32, u: f64) -> Result<f64> {
    check_u(u)?;
    let k = a.max(b) + 1;
    let m = xi_big_reduced(k, gamma, u)?;
    let h = 0.5 * u.sqrt();
    let v = LogScaled::from_f64(m[a as usize][b as usize]);
    Ok(v.mul_exp((a + b + 2) as f64 * h.ln() + 4.0 * h).to_f64())
}

/// Log-domain Pfaffian of the (bordered) limiting kernel matrix, including the
/// row/column scalings removed by the reduced entries.
fn limit_pfaffian(k: u32, gamma: u32, u: f64) -> Result<LogScaled> {
    if k == 0 {
        return Ok(LogScaled::ONE);
    }
    let m = xi_big_reduced(k, gamma, u)?;
    let h = 0.5 * u.sqrt();
    let lh = h.ln();
    let kk = k as usize;
    // rows a < k scaled by h^{a+1} e^{sqrt u}
    let mut lscale: f64 = (0..k).map(|a| (a + 1) as f64 * lh + 2.0 * h).sum();
    let pf = if k % 2 == 0 {
        pfaffian_log(&AntisymmetricMatrix::from_fn(kk, |a, b| m[a][b])?)
    } else {
        // border row scaled by h^{2 gamma - 1}
        lscale += (2.0 * gamma as f64 - 1.0) * lh;
        let xi: Vec<f64> = (0..k).map(|a| xi_small_reduced(a, gamma, u)).collect();
        pfaffian_log(&AntisymmetricMatrix::from_fn(kk + 1, |a, b| if b == kk { xi[a] } else { m[a][b] })?)
    };
    Ok(pf.mul_exp(lscale))
}

/// Far in the tail both curves underflow; skip the quadrature there.
fn underflows(k: usize, u: f64) -> bool {
    let kf = k as f64;
    -u / 8.0 + (kf + 1.0) * u.sqrt() + (kf * kf + 2.0) * u.ln().max(0.0) < -760.0
}

fn ln_prefactor(k: u32) -> f64 {
    (0..k as u64)
        .map(|l| (l + 1) as f64 * 4f64.ln() + ln_factorial(2 * l) - ln_factorial(l))
        .sum()
}

/// Hard-edge gap probability `E_{2k}(u)`.
pub fn gap_micro(k: usize, u: f64) -> Result<f64> {
    check_u(u)?;
    if u == 0.0 {
        return Ok(1.0);
    }
    if underflows(k, u) {
        return Ok(0.0);
    }
    let k = k as u32;
    let kf = k as f64;
    let mut l = ln_prefactor(k) - 0.5 * kf * kf * u.ln() - u / 8.0 - 0.5 * u.sqrt();
    if k % 2 == 1 {
        l += 0.5 * u.ln() - 4f64.ln();
    }
    Ok(limit_pfaffian(k, 0, u)?.mul_exp(l).to_f64())
}

/// Hard-edge density of the smallest eigenvalue, `-dE_{2k}/du`.
pub fn smallest_micro(k: usize, u: f64) -> Result<f64> {
    check_u(u)?;
    if u == 0.0 {
        return Ok(if k == 0 { f64::INFINITY } else { 0.0 });
    }
    if underflows(k, u) {
        return Ok(0.0);
    }
    let k = k as u32;
    let kf = k as f64;
    let mut l = ln_prefactor(k) - 8f64.ln() + (u.sqrt() + 2.0).ln() - 0.5 * (kf * kf + 1.0) * u.ln() - u / 8.0
        - 0.5 * u.sqrt();
    if k % 2 == 1 {
        l -= 0.5 * u.ln();
    }
    Ok(limit_pfaffian(k, 1, u)?.mul_exp(l).to_f64())
}

/// Microscopic level density `rho_nu(u)` of the hard edge.
pub fn micro_density(nu: u32, u: f64) -> Result<f64> {
    check_u(u)?;
    if u == 0.0 {
        return Ok(match nu {
            0 => f64::INFINITY,
            1 => 0.125,
            _ => 0.0,
        });
    }
    let s = u.sqrt();
    let j = bessel_j_table(nu + 1, s);
    let jn = j[nu as usize];
    let jm = if nu == 0 { -j[1] } else { j[nu as usize - 1] };
    let jp = j[nu as usize + 1];
    let int = gl_converged(|x| bessel_j_table(nu, x)[nu as usize], 0.0, s, gl_order(u), 1e-11)?;
    Ok(0.25 * (jn * jn - jm * jp) + jn / (4.0 * s) * (1.0 - int))
}
