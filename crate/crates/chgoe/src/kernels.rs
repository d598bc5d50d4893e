//! Pfaffian kernel entries at the degenerate point `kappa = -t`, and the
//! two-argument kernel (SOP sum and Christoffel-Darboux form).

use crate::error::{domain, Error, Result};
use crate::sop::{partition_z_t, sop, sop_moment, sop_norm, LaguerreCache, LaguerreCombination, WeightParams};
use crate::specfun::{ln_factorial, tricomi_u, LogScaled};

/// Kernel index set: weight exponent `gamma`, size index `l`, and point `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub gamma: u32,
    pub l: usize,
    pub t: f64,
}

impl KernelSpec {
    pub fn new(gamma: u32, l: usize, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return domain(format!("kernel needs t > 0, got {t}"));
        }
        Ok(KernelSpec { gamma, l, t })
    }

    pub fn parity(&self) -> usize {
        self.l % 2
    }
}

/// The polynomials entering the kernel of size index `l`: `R_0..R_{l-1}` for
/// even `l`, hatted `R^_0..R^_{l-2}` (with `2K = l-1`) for odd `l`.
pub struct PolynomialFamily {
    polys: Vec<LaguerreCombination>,
    /// `R_2K` and the projection coefficients `m_i/m_2K`, odd `l` only.
    hat: Option<(LaguerreCombination, Vec<LogScaled>)>,
    norms: Vec<LogScaled>,
}

impl PolynomialFamily {
    pub fn new(gamma: u32, l: usize, t: f64) -> Result<Self> {
        let params = WeightParams::new(gamma, t)?;
        let count = if l % 2 == 0 { l } else { l.saturating_sub(1) };
        let polys = (0..count).map(|i| sop(i, &params)).collect::<Result<Vec<_>>>()?;
        let norms = (0..count / 2).map(|j| sop_norm(j, &params)).collect::<Result<Vec<_>>>()?;
        let hat = if l % 2 == 1 && l >= 3 {
            let k2 = l - 1;
            let mt = sop_moment(k2, &params)?;
            if mt.is_zero() || !mt.log_magnitude.is_finite() {
                return Err(Error::Degenerate(format!("int w R_{k2} vanishes at t={t}")));
            }
            let c = (0..count).map(|i| Ok(sop_moment(i, &params)? / mt)).collect::<Result<Vec<_>>>()?;
            Some((sop(k2, &params)?, c))
        } else {
            None
        };
        Ok(PolynomialFamily { polys, hat, norms })
    }

    pub fn pairs(&self) -> usize {
        self.norms.len()
    }

    /// Derivatives `d^o P_i(y)` for `o = 0..orders`.
    fn derivs(&self, i: usize, orders: u32, cache: &LaguerreCache, top: &[LogScaled]) -> Vec<LogScaled> {
        (0..orders)
            .map(|o| {
                let v = self.polys[i].eval_cached(o, cache);
                match &self.hat {
                    Some((_, c)) => v.sub(c[i] * top[o as usize]),
                    None => v,
                }
            })
            .collect()
    }

    fn top_derivs(&self, orders: u32, cache: &LaguerreCache) -> Vec<LogScaled> {
        match &self.hat {
            Some((r, _)) => (0..orders).map(|o| r.eval_cached(o, cache)).collect(),
            None => Vec::new(),
        }
    }

    /// Upper triangle of `S_ab = sum_j [d^a P_{2j+1} d^b P_{2j} - d^b P_{2j+1} d^a P_{2j}]/r_j` at `y`.
    fn skew_sums(&self, y: f64, n: usize) -> Vec<Vec<LogScaled>> {
        let cache = LaguerreCache::new(y);
        let top = self.top_derivs(n as u32, &cache);
        let mut acc = vec![vec![Vec::with_capacity(self.pairs()); n]; n];
        for j in 0..self.pairs() {
            let odd = self.derivs(2 * j + 1, n as u32, &cache, &top);
            let even = self.derivs(2 * j, n as u32, &cache, &top);
            let inv = self.norms[j].recip();
            for a in 0..n {
                for b in a + 1..n {
                    acc[a][b].push(odd[a] * even[b] * inv);
                    acc[a][b].push(-(odd[b] * even[a] * inv));
                }
            }
        }
        acc.into_iter().map(|row| row.into_iter().map(LogScaled::sum).collect()).collect()
    }

    /// Two-argument kernel `sum_j [P_{2j+1}(x) P_{2j}(y) - P_{2j+1}(y) P_{2j}(x)]/r_j`.
    pub fn kernel(&self, x: f64, y: f64) -> f64 {
        let (cx, cy) = (LaguerreCache::new(x), LaguerreCache::new(y));
        let (tx, ty) = (self.top_derivs(1, &cx), self.top_derivs(1, &cy));
        let mut terms = Vec::new();
        for j in 0..self.pairs() {
            let (ox, ex) = (self.derivs(2 * j + 1, 1, &cx, &tx)[0], self.derivs(2 * j, 1, &cx, &tx)[0]);
            let (oy, ey) = (self.derivs(2 * j + 1, 1, &cy, &ty)[0], self.derivs(2 * j, 1, &cy, &ty)[0]);
            let inv = self.norms[j].recip();
            terms.push(ox * ey * inv);
            terms.push(-(oy * ex * inv));
        }
        LogScaled::sum(terms).to_f64()
    }
}

/// The `n x n` matrix `Xi_ab^(gamma,l)(t)`, `a, b < n`.
pub fn xi_big_matrix(n: usize, spec: &KernelSpec) -> Result<Vec<Vec<f64>>> {
    if n > 0 && n - 1 + 2 > spec.l {
        return Err(Error::Index(format!("kernel order {} exceeds l-2 = {}", n - 1, spec.l as i64 - 2)));
    }
    let fam = PolynomialFamily::new(spec.gamma, spec.l, spec.t)?;
    Ok(xi_from_family(&fam, n, spec))
}

pub(crate) fn xi_from_family(fam: &PolynomialFamily, n: usize, spec: &KernelSpec) -> Vec<Vec<f64>> {
    let s = fam.skew_sums(-spec.t, n);
    let lt = spec.t.ln();
    let mut m = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
            let p = (2 * spec.gamma as usize + a + b + 1) as f64;
            let v = s[a][b].mul_exp(p * lt).to_f64() * sign;
            m[a][b] = v;
            m[b][a] = -v;
        }
    }
    m
}

/// `Xi_ab^(gamma,l)(t) = (-1)^(a+b) t^(2gamma+a+b+1) sum_j [d^a R_{2j+1} d^b R_{2j} - d^b R_{2j+1} d^a R_{2j}]/r_j`
/// at `kappa = -t`, with hatted polynomials for odd `l`.
pub fn xi_big(a: usize, b: usize, spec: &KernelSpec) -> Result<f64> {
    if a + 2 > spec.l || b + 2 > spec.l {
        return Err(Error::Index(format!("xi_big({a},{b}) needs a, b <= l-2 = {}", spec.l as i64 - 2)));
    }
    let m = xi_big_matrix(a.max(b) + 1, spec)?;
    Ok(m[a][b])
}

/// `xi_a^(gamma,l)(t)`, the bordering vector for odd `k`.
pub fn xi_small(a: usize, spec: &KernelSpec) -> Result<f64> {
    if a + 2 > spec.l {
        return Err(Error::Index(format!("xi_small({a}) needs a <= l-2 = {}", spec.l as i64 - 2)));
    }
    Ok(xi_small_ratio(a, spec, xi_ratio(spec)?))
}

fn xi_ratio(spec: &KernelSpec) -> Result<LogScaled> {
    let g = spec.gamma as f64;
    let aa = g + 0.5 * (spec.l as f64 - 1.0);
    let z = 0.5 * spec.t;
    Ok(tricomi_u(aa, g + 0.5, z)? / tricomi_u(aa, g + 1.5, z)?)
}

pub(crate) fn xi_small_vec(n: usize, spec: &KernelSpec) -> Result<Vec<f64>> {
    let r = xi_ratio(spec)?;
    Ok((0..n).map(|a| xi_small_ratio(a, spec, r)).collect())
}

fn xi_small_ratio(a: usize, spec: &KernelSpec, ratio: LogScaled) -> f64 {
    let (l, t) = (spec.l as i64, spec.t);
    let (g2, ai) = (2 * spec.gamma as i64, a as i64);
    let cache = LaguerreCache::new(-t);
    let n1 = l - ai - 2;
    let mut v = cache.value(n1, (g2 + ai) as f64).mul_exp(-ln_factorial(n1 as u64));
    let n2 = l - ai - 3;
    if n2 >= 0 {
        let second = cache.value(n2, (g2 + ai + 1) as f64).mul_exp(-ln_factorial(n2 as u64)) * ratio;
        v = v.sub(second);
    }
    let sign = if (ai + l) % 2 == 0 { 1 } else { -1 };
    (LogScaled::new(sign, (g2 + ai) as f64 * t.ln()) * v).to_f64()
}

/// Two-argument kernel as the explicit SOP sum.
pub fn kernel_sum(kappa_a: f64, kappa_b: f64, gamma: u32, l: usize, t: f64) -> Result<f64> {
    Ok(PolynomialFamily::new(gamma, l, t)?.kernel(kappa_a, kappa_b))
}

/// Christoffel-Darboux closed form of the two-argument kernel,
/// `Z_{l-2}/Z_l [ (da-db)^2 F/(ka-kb) - 2 (da-db) F/(ka-kb)^2 ]` with
/// `F = L(a)L(b) - rho1 (L'(a)L(b) + L(a)L'(b)) + rho2 L'(a)L'(b)`, `L = L_l^(2gamma-2)`.
///
/// Agrees with [`kernel_sum`] for both parities of `l`.
pub fn kernel_cd(kappa_a: f64, kappa_b: f64, gamma: u32, l: usize, t: f64) -> Result<f64> {
    if kappa_a == kappa_b {
        return domain("kernel_cd is singular at coinciding arguments");
    }
    if l < 2 {
        return domain(format!("kernel_cd needs l >= 2, got {l}"));
    }
    let g = gamma as f64;
    let z = 0.5 * t;
    let aa = g + 0.5 * (l as f64 - 1.0);
    let den = tricomi_u(aa, g + 1.5, z)?;
    let r1 = (tricomi_u(aa, g + 0.5, z)? / den).to_f64();
    let r2 = (tricomi_u(aa, g - 0.5, z)? / den).to_f64();
    let mu = 2.0 * g - 2.0;
    let (ca, cb) = (LaguerreCache::new(kappa_a), LaguerreCache::new(kappa_b));
    let li = l as i64;
    let la: Vec<LogScaled> = (0..4).map(|o| ca.deriv(li, mu, o)).collect();
    let lb: Vec<LogScaled> = (0..4).map(|o| cb.deriv(li, mu, o)).collect();
    // F as a map (i, j) -> coefficient of L^(i)(a) L^(j)(b)
    let f = vec![((0, 0), 1.0), ((1, 0), -r1), ((0, 1), -r1), ((1, 1), r2)];
    let diff = |f: &Vec<((usize, usize), f64)>| {
        let mut out = Vec::new();
        for &((i, j), c) in f {
            out.push(((i + 1, j), c));
            out.push(((i, j + 1), -c));
        }
        out
    };
    let ev = |f: &Vec<((usize, usize), f64)>| LogScaled::sum(f.iter().map(|&((i, j), c)| la[i] * lb[j] * LogScaled::from_f64(c)));
    let n1 = diff(&f);
    let n2 = diff(&n1);
    let d = kappa_a - kappa_b;
    let body = ev(&n2).mul_f64(1.0 / d).sub(ev(&n1).mul_f64(2.0 / (d * d)));
    let pre = partition_z_t(l - 2, gamma, t)? / partition_z_t(l, gamma, t)?;
    Ok((pre * body).to_f64())
}
