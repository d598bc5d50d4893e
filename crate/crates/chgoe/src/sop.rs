//! The shifted square-root weight `w_gamma(x,t) = x^gamma (x+t)^(-1/2) e^(-x/2)`,
//! its partition functions, and the skew-orthogonal polynomials built on it.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::error::{domain, Error, Result};
use crate::quad::{integrate, integrate_to_inf, Tol};
use crate::specfun::{
    falling_factorial, laguerre_monic_table, ln_factorial, ln_gamma_pos, tricomi_u, tricomi_u0, LogScaled,
};

const LN2: f64 = std::f64::consts::LN_2;

/// `(gamma, t)` pair of the weight; `eta` is kept at one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightParams {
    pub gamma: u32,
    pub t: f64,
    pub eta: f64,
}

impl WeightParams {
    pub fn new(gamma: u32, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return domain(format!("weight needs t > 0, got {t}"));
        }
        Ok(WeightParams { gamma, t, eta: 1.0 })
    }

    fn g(&self) -> f64 {
        self.gamma as f64
    }
}

/// One term `coeff * L_order^(mu)(y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaguerreTerm {
    pub order: i64,
    pub mu: f64,
    pub coeff: LogScaled,
}

/// A polynomial as a finite sum of monic Laguerre polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct LaguerreCombination {
    pub terms: Vec<LaguerreTerm>,
    pub gamma: u32,
    pub t: f64,
    /// Polynomial index `j` of `R_j`.
    pub index: usize,
    pub hatted: bool,
}

impl LaguerreCombination {
    fn new(params: &WeightParams, index: usize, hatted: bool) -> Self {
        LaguerreCombination { terms: Vec::new(), gamma: params.gamma, t: params.t, index, hatted }
    }

    fn push(&mut self, order: i64, mu: f64, coeff: LogScaled) {
        if order >= 0 && !coeff.is_zero() {
            self.terms.push(LaguerreTerm { order, mu, coeff });
        }
    }

    /// Generic combination, e.g. for tests of the skew product.
    pub fn from_terms(terms: Vec<(i64, f64, f64)>, params: &WeightParams) -> Self {
        let mut c = Self::new(params, 0, false);
        for (a, mu, v) in terms {
            c.push(a, mu, LogScaled::from_f64(v));
        }
        c.index = c.terms.iter().map(|t| t.order.max(0) as usize).max().unwrap_or(0);
        c
    }

    pub fn parity(&self) -> usize {
        self.index % 2
    }

    pub fn degree(&self) -> i64 {
        self.terms.iter().map(|t| t.order).max().unwrap_or(-1)
    }

    pub fn scaled(&self, c: LogScaled) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff = t.coeff * c;
        }
        out
    }

    /// Value at `y`.
    pub fn eval(&self, y: f64) -> LogScaled {
        self.eval_deriv(0, y)
    }

    /// `order`-th derivative at `y`, exact term by term.
    pub fn eval_deriv(&self, order: u32, y: f64) -> LogScaled {
        let cache = LaguerreCache::new(y);
        self.eval_cached(order, &cache)
    }

    pub fn eval_cached(&self, order: u32, cache: &LaguerreCache) -> LogScaled {
        LogScaled::sum(self.terms.iter().map(|t| t.coeff * cache.deriv(t.order, t.mu, order)))
    }

    pub fn eval_f64(&self, y: f64) -> f64 {
        self.eval(y).to_f64()
    }
}

/// Memoised monic Laguerre tables at a fixed argument.
pub struct LaguerreCache {
    y: f64,
    tables: RefCell<HashMap<u64, Vec<LogScaled>>>,
}

impl LaguerreCache {
    pub fn new(y: f64) -> Self {
        LaguerreCache { y, tables: RefCell::new(HashMap::new()) }
    }

    pub fn value(&self, a: i64, mu: f64) -> LogScaled {
        if a < 0 {
            return LogScaled::ZERO;
        }
        let a = a as usize;
        let mut tabs = self.tables.borrow_mut();
        let tab = tabs.entry(mu.to_bits()).or_default();
        if tab.len() <= a {
            *tab = laguerre_monic_table((2 * a).max(8), mu, self.y);
        }
        tab[a]
    }

    /// `d^o/dy^o L_a^(mu)(y)`.
    pub fn deriv(&self, a: i64, mu: f64, o: u32) -> LogScaled {
        let o64 = o as i64;
        if a < o64 || a < 0 {
            return LogScaled::ZERO;
        }
        self.value(a - o64, mu + o as f64) * falling_factorial(a as u64, o)
    }
}

/// `x^gamma (x+t)^(-1/2) e^(-x/2)`.
pub fn weight(x: f64, params: &WeightParams) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return domain(format!("weight needs x >= 0, got {x}"));
    }
    let xg = if params.gamma == 0 { 1.0 } else { x.powi(params.gamma as i32) };
    Ok(xg / (x + params.t).sqrt() * (-0.5 * params.eta * x).exp())
}

fn w(x: f64, p: &WeightParams) -> f64 {
    let xg = if p.gamma == 0 { 1.0 } else { x.powi(p.gamma as i32) };
    xg / (x + p.t).sqrt() * (-0.5 * x).exp()
}

/// `int_0^inf x^(gamma+m) (x+t)^(-1/2) e^(-x/2) dx
///  = Gamma(gamma+m+1) t^(gamma+m+1/2) U(gamma+m+1, gamma+m+3/2, t/2)`.
pub fn weight_moment(m: u32, params: &WeightParams) -> Result<LogScaled> {
    let s = params.g() + m as f64;
    let u = tricomi_u(s + 1.0, s + 1.5, 0.5 * params.t)?;
    Ok(u.mul_exp(ln_gamma_pos(s + 1.0) + (s + 0.5) * params.t.ln()))
}

/// Selberg constant `Z_{p,nu}` of the unshifted ensemble with weight `x^((nu-1)/2) e^(-x/2)`.
pub fn partition_z(p: usize, nu: i64) -> Result<LogScaled> {
    if p == 0 {
        return domain("partition_z needs p >= 1");
    }
    if nu < 0 {
        return domain(format!("partition_z diverges for nu = {nu}"));
    }
    let nu = nu as f64;
    let pf = p as f64;
    let mut l = 0.5 * pf * (pf + nu) * LN2;
    for j in 0..p {
        let jf = j as f64;
        l += ln_gamma_pos(0.5 * (jf + 3.0)) + ln_gamma_pos(0.5 * (jf + nu + 1.0)) - ln_gamma_pos(1.5);
    }
    Ok(LogScaled::exp(l))
}

/// `Z_{p,gamma}(t)`, the partition function of the shifted weight. `p = 0` gives one.
pub fn partition_z_t(p: usize, gamma: u32, t: f64) -> Result<LogScaled> {
    if !(t > 0.0) {
        return domain(format!("partition_z_t needs t > 0, got {t}"));
    }
    if p == 0 {
        return Ok(LogScaled::ONE);
    }
    let (pf, g) = (p as f64, gamma as f64);
    let mut l = 0.5 * pf * (pf + 2.0 * g) * LN2;
    for j in 0..p {
        let jf = j as f64;
        l += ln_gamma_pos(0.5 * (jf + 3.0)) + ln_gamma_pos(0.5 * (jf + 2.0 * g + 2.0)) - ln_gamma_pos(1.5);
    }
    Ok(tricomi_u(0.5 * pf, 0.5 * (1.0 - 2.0 * g), 0.5 * t)?.mul_exp(l))
}

/// `<det^(-1/2)(X + t)>_{p,nu} = 2^(-p/2) U(p/2, (2-nu)/2, t/2)`.
pub fn half_power_average(p: usize, nu: u32, t: f64) -> Result<LogScaled> {
    if p == 0 || !(t > 0.0) {
        return domain(format!("half_power_average needs p >= 1 and t > 0, got p={p}, t={t}"));
    }
    let pf = p as f64;
    Ok(tricomi_u(0.5 * pf, 0.5 * (2.0 - nu as f64), 0.5 * t)?.mul_exp(-0.5 * pf * LN2))
}

/// `R_2j(y,t) = L_2j^(2g)(y) - 2j U(j+g+1/2, g+1/2, t/2)/U(j+g+1/2, g+3/2, t/2) L_{2j-1}^(2g+1)(y)`.
pub fn sop_even(j: usize, params: &WeightParams) -> Result<LaguerreCombination> {
    let g = params.g();
    let mut c = LaguerreCombination::new(params, 2 * j, false);
    c.push(2 * j as i64, 2.0 * g, LogScaled::ONE);
    if j > 0 {
        let d1 = d1(j, params)?;
        c.push(2 * j as i64 - 1, 2.0 * g + 1.0, d1);
    }
    Ok(c)
}

fn d1(j: usize, p: &WeightParams) -> Result<LogScaled> {
    let (g, z, jf) = (p.g(), 0.5 * p.t, j as f64);
    let a = jf + g + 0.5;
    let r = tricomi_u(a, g + 0.5, z)? / tricomi_u(a, g + 1.5, z)?;
    Ok(-(r.mul_f64(2.0 * jf)))
}

/// Odd polynomial `R_{2j+1}` in its five-term form (the `L_2j^(2g)` term removed).
pub fn sop_odd(j: usize, params: &WeightParams) -> Result<LaguerreCombination> {
    let (g, z, jf) = (params.g(), 0.5 * params.t, j as f64);
    let mut c = LaguerreCombination::new(params, 2 * j + 1, false);
    let ji = j as i64;
    c.push(2 * ji + 1, 2.0 * g, LogScaled::ONE);
    if j == 0 {
        return Ok(c);
    }
    let a = jf + g + 0.5;
    let den = tricomi_u(a, g + 1.5, z)?;
    let d1 = -(tricomi_u(a, g + 0.5, z)? / den).mul_f64(2.0 * jf);
    let d1v = d1.to_f64();
    let d2 = -d1v + d1v * d1v - 4.0 * jf * (jf + 1.0) * (tricomi_u(a, g - 0.5, z)? / den).to_f64();
    let d3 = -2.0 * (2.0 * jf - 1.0) * (g + jf) * d1v;
    c.push(2 * ji - 1, 2.0 * g, LogScaled::from_f64(-4.0 * jf * (g + jf)));
    c.push(2 * ji, 2.0 * g + 1.0, d1);
    c.push(2 * ji - 1, 2.0 * g + 1.0, LogScaled::from_f64(d2));
    c.push(2 * ji - 2, 2.0 * g + 1.0, LogScaled::from_f64(d3));
    Ok(c)
}

/// `R_i` of either parity.
pub fn sop(i: usize, params: &WeightParams) -> Result<LaguerreCombination> {
    if i % 2 == 0 { sop_even(i / 2, params) } else { sop_odd(i / 2, params) }
}

/// `r_j = 2 (2j)! Gamma(2j+2g+2) U(j+1, 1/2-g, t/2) / U(j, 1/2-g, t/2)`.
pub fn sop_norm(j: usize, params: &WeightParams) -> Result<LogScaled> {
    let (g, z, jf) = (params.g(), 0.5 * params.t, j as f64);
    let b = 0.5 - g;
    let r = tricomi_u(jf + 1.0, b, z)? / tricomi_u0(jf, b, z)?;
    Ok(r.mul_exp(LN2 + ln_factorial(2 * j as u64) + ln_gamma_pos(2.0 * jf + 2.0 * g + 2.0)))
}

/// `int_0^inf w R_i dx` in closed form.
///
/// Even index: `Z_{2j+1}/((2j+1) Z_{2j})`. Odd index: `-2t d/dt` of the even one,
/// which is what integrating the odd polynomial by parts yields.
pub fn sop_moment(i: usize, params: &WeightParams) -> Result<LogScaled> {
    let j = i / 2;
    let (g, z, jf, t) = (params.g(), 0.5 * params.t, j as f64, params.t);
    let even = partition_z_t(2 * j + 1, params.gamma, t)?
        / partition_z_t(2 * j, params.gamma, t)?.mul_f64(2.0 * jf + 1.0);
    if i % 2 == 0 {
        return Ok(even);
    }
    let b = 0.5 - g;
    let mut s = (tricomi_u(jf + 1.5, b + 1.0, z)? / tricomi_u(jf + 0.5, b, z)?).mul_f64(jf + 0.5);
    if j > 0 {
        s = s.sub((tricomi_u(jf + 1.0, b + 1.0, z)? / tricomi_u(jf, b, z)?).mul_f64(jf));
    }
    Ok(even * s.mul_f64(t))
}

/// Hatted polynomials for odd kernel sizes: `R^_j = R_j - (m_j/m_2K) R_2K` for
/// `j < 2K` and `R^_2K = R_2K / m_2K`, with `m_i = int w R_i`.
pub fn sop_hat(j: usize, k2: usize, params: &WeightParams) -> Result<LaguerreCombination> {
    if k2 % 2 != 0 || j > k2 {
        return Err(Error::Index(format!("sop_hat needs j <= 2K with 2K even, got j={j}, 2K={k2}")));
    }
    let top = sop(k2, params)?;
    let mt = sop_moment(k2, params)?;
    if mt.is_zero() || !mt.log_magnitude.is_finite() {
        return Err(Error::Degenerate(format!("int w R_{k2} vanishes at t={}", params.t)));
    }
    if j == k2 {
        let mut h = top.scaled(mt.recip());
        h.hatted = true;
        return Ok(h);
    }
    let mut h = sop(j, params)?;
    let c = -(sop_moment(j, params)? / mt);
    for term in top.scaled(c).terms {
        h.terms.push(term);
    }
    h.hatted = true;
    Ok(h)
}

/// `int_0^inf w f dx` by quadrature; oracle only.
pub fn weight_integral_oracle(f: &LaguerreCombination, params: &WeightParams) -> Result<f64> {
    let (scale, _) = integrate_to_inf(|x| w(x, params) * f.eval_f64(x).abs(), 0.0, Tol::rel(1e-6))?;
    let tol = Tol { abs: 1e-14 * scale, rel: 1e-13, max_intervals: 4000 };
    let (v, _) = integrate_to_inf(|x| w(x, params) * f.eval_f64(x), 0.0, tol)?;
    Ok(v)
}

/// Skew product `<f,g> = int_0^inf dy int_0^y dx w(x)w(y)[f(x)g(y) - f(y)g(x)]`
/// by nested adaptive quadrature; a test oracle, not used on the fast path.
pub fn skew_product_oracle(f: &LaguerreCombination, g: &LaguerreCombination, params: &WeightParams) -> Result<f64> {
    let abs_mass = |h: &LaguerreCombination| {
        integrate_to_inf(|x| w(x, params) * h.eval_f64(x).abs(), 0.0, Tol::rel(1e-6)).map(|r| r.0)
    };
    let (sf, sg) = (abs_mass(f)?, abs_mass(g)?);
    let mut err: Option<Error> = None;
    let mut partial = |h: &LaguerreCombination, scale: f64, y: f64| {
        let tol = Tol { abs: 1e-14 * scale, rel: 1e-12, max_intervals: 500 };
        match integrate(|x| w(x, params) * h.eval_f64(x), 0.0, y, tol) {
            Ok((v, _)) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        }
    };
    let outer = |y: f64| {
        let (fy, gy) = (f.eval_f64(y), g.eval_f64(y));
        w(y, params) * (gy * partial(f, sf, y) - fy * partial(g, sg, y))
    };
    let (v, _) = integrate_to_inf(outer, 0.0, Tol { abs: 1e-13 * sf * sg, rel: 1e-10, max_intervals: 1000 })?;
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn weight_values() {
        let p = WeightParams::new(0, 1.0).unwrap();
        assert_eq!(weight(0.0, &p).unwrap(), 1.0);
        let q = WeightParams::new(1, 0.5).unwrap();
        assert!(rel(weight(2.0, &q).unwrap(), 2.0 / 2.5f64.sqrt() * (-1.0f64).exp()) < 1e-15);
        assert!(weight(-1.0, &q).is_err());
        assert!(WeightParams::new(0, 0.0).is_err());
    }

    #[test]
    fn moments_match_quadrature() {
        let p = WeightParams::new(0, 4.0).unwrap();
        let (q, _) = integrate_to_inf(|x| (x + 4.0f64).powf(-0.5) * (-0.5 * x).exp(), 0.0, Tol::rel(1e-13)).unwrap();
        assert!(rel(weight_moment(0, &p).unwrap().to_f64(), q) < 1e-9);
        let p2 = WeightParams::new(0, 2.0).unwrap();
        let expect = 2f64.sqrt() * tricomi_u(1.0, 1.5, 1.0).unwrap().to_f64();
        assert!(rel(weight_moment(0, &p2).unwrap().to_f64(), expect) < 1e-14);
        assert!(rel(weight_moment(0, &p2).unwrap().to_f64(), partition_z_t(1, 0, 2.0).unwrap().to_f64()) < 1e-11);
        for g in [0u32, 1] {
            for m in [1u32, 3] {
                let pp = WeightParams::new(g, 0.7).unwrap();
                let (q, _) = integrate_to_inf(|x| x.powi(m as i32) * w(x, &pp), 0.0, Tol::rel(1e-13)).unwrap();
                assert!(rel(weight_moment(m, &pp).unwrap().to_f64(), q) < 1e-10);
            }
        }
    }

    #[test]
    fn selberg_constants() {
        assert!(rel(partition_z(1, 1).unwrap().to_f64(), 2.0) < 1e-14);
        assert!(rel(partition_z(1, 0).unwrap().to_f64(), (2.0 * std::f64::consts::PI).sqrt()) < 1e-14);
        assert!(partition_z(1, -1).is_err());
    }

    #[test]
    fn shifted_partition_function_asymptote() {
        for p in 1..=6usize {
            for g in [0u32, 1] {
                let t = 1e6;
                let v = partition_z_t(p, g, t).unwrap().mul_exp(0.5 * p as f64 * t.ln())
                    / partition_z(p, 2 * g as i64 + 1).unwrap();
                assert!((v.to_f64() - 1.0).abs() < 1e-3, "p={p} g={g}");
            }
        }
    }

    #[test]
    fn half_power_average_routes() {
        let v = half_power_average(1, 1, 3.0).unwrap().to_f64();
        let (q, _) = integrate_to_inf(|x| (x + 3.0f64).powf(-0.5) * (-0.5 * x).exp(), 0.0, Tol::rel(1e-13)).unwrap();
        assert!(rel(v, q / 2.0) < 1e-9);
        for (p, g, t) in [(3usize, 0u32, 1.0), (4, 1, 2.0)] {
            let l = partition_z(p, 2 * g as i64 + 1).unwrap() * half_power_average(p, 2 * g + 1, t).unwrap();
            assert!(rel(l.to_f64(), partition_z_t(p, g, t).unwrap().to_f64()) < 1e-10);
        }
        let t = 1e6;
        let v = half_power_average(3, 2, t).unwrap().mul_exp(1.5 * t.ln()).to_f64();
        assert!((v - 1.0).abs() < 1e-3);
    }

    #[test]
    fn polynomial_shapes() {
        let p = WeightParams::new(0, 1.0).unwrap();
        let r0 = sop_even(0, &p).unwrap();
        assert_eq!(r0.terms.len(), 1);
        assert_eq!((r0.terms[0].order, r0.terms[0].mu), (0, 0.0));
        let r1 = sop_odd(0, &p).unwrap();
        for y in [-1.0, 0.3, 4.0] {
            assert!((r1.eval_f64(y) - (y - 1.0)).abs() < 1e-14);
        }
        for i in 0..9 {
            let r = sop(i, &p).unwrap();
            assert_eq!(r.terms[0].order, i as i64);
            assert_eq!(r.terms[0].coeff, LogScaled::ONE);
            assert_eq!(r.degree(), i as i64);
        }
    }

    #[test]
    fn norms_positive_and_ratio_identity() {
        for g in [0u32, 1] {
            for t in [0.01, 0.5, 3.0, 40.0, 100.0] {
                let p = WeightParams::new(g, t).unwrap();
                for j in 0..=6 {
                    assert_eq!(sop_norm(j, &p).unwrap().sign, 1);
                }
            }
        }
        let p = WeightParams::new(0, 2.0).unwrap();
        assert!(rel(sop_norm(0, &p).unwrap().to_f64(), 2.0 * tricomi_u(1.0, 0.5, 1.0).unwrap().to_f64()) < 1e-14);
        let p = WeightParams::new(0, 1.0).unwrap();
        let j = 1usize;
        let lhs = sop_norm(j, &p).unwrap();
        let rhs = partition_z_t(2 * j + 2, 0, 1.0).unwrap()
            / partition_z_t(2 * j, 0, 1.0).unwrap().mul_f64(((2 * j + 2) * (2 * j + 1)) as f64);
        assert!(rel(lhs.to_f64(), rhs.to_f64()) < 1e-10);
    }

    #[test]
    fn partition_function_as_norm_product() {
        for g in [0u32, 1] {
            for t in [0.3, 2.0] {
                let p = WeightParams::new(g, t).unwrap();
                for n in 2..=4usize {
                    let mut prod = LogScaled::exp(ln_factorial(n as u64));
                    for j in 0..n / 2 {
                        prod = prod * sop_norm(j, &p).unwrap();
                    }
                    if n % 2 == 1 {
                        prod = prod * sop_moment(n - 1, &p).unwrap();
                    }
                    let z = partition_z_t(n, g, t).unwrap();
                    assert!(rel(prod.to_f64(), z.to_f64()) < 1e-9, "g={g} t={t} n={n}");
                }
            }
        }
    }

    #[test]
    fn closed_form_moments_match_quadrature() {
        for g in [0u32, 1] {
            for t in [0.1, 1.0, 5.0] {
                let p = WeightParams::new(g, t).unwrap();
                for i in 0..6 {
                    let q = weight_integral_oracle(&sop(i, &p).unwrap(), &p).unwrap();
                    let c = sop_moment(i, &p).unwrap().to_f64();
                    assert!((c - q).abs() < 1e-9 * c.abs().max(sop_moment(0, &p).unwrap().to_f64()), "g={g} t={t} i={i}: {c} vs {q}");
                }
            }
        }
    }

    #[test]
    fn hatted_polynomials_project_out_moments() {
        let p = WeightParams::new(0, 1.0).unwrap();
        let k2 = 4;
        let top = sop_hat(k2, k2, &p).unwrap();
        assert!((weight_integral_oracle(&top, &p).unwrap() - 1.0).abs() < 1e-10);
        for j in 0..k2 {
            let h = sop_hat(j, k2, &p).unwrap();
            let scale = sop_moment(j, &p).unwrap().to_f64().abs();
            assert!(weight_integral_oracle(&h, &p).unwrap().abs() <= 1e-9 * scale.max(1.0), "j={j}");
        }
        assert!(sop_hat(5, 4, &p).is_err());
    }

    #[test]
    fn skew_product_basics() {
        let p = WeightParams::new(0, 1.0).unwrap();
        let f = LaguerreCombination::from_terms(vec![(2, 0.0, 1.0), (1, 1.0, -0.3)], &p);
        let g = LaguerreCombination::from_terms(vec![(3, 0.0, 1.0), (0, 0.0, 2.0)], &p);
        assert_eq!(skew_product_oracle(&f, &f, &p).unwrap(), 0.0);
        let a = skew_product_oracle(&f, &g, &p).unwrap();
        let b = skew_product_oracle(&g, &f, &p).unwrap();
        assert!((a + b).abs() < 1e-9 * a.abs());
    }
}
