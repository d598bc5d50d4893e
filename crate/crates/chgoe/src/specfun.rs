//! Scalar special functions, carried in the log domain where they can overflow.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Div, Mul, Neg};

use crate::error::{domain, Result};
use crate::quad::{integrate, Tol};

/// A real number stored as `sign * exp(log_magnitude)`.
///
/// `sign == 0` means exactly zero; `log_magnitude` is then ignored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogScaled {
    pub log_magnitude: f64,
    pub sign: i8,
}

impl LogScaled {
    pub const ZERO: LogScaled = LogScaled { log_magnitude: f64::NEG_INFINITY, sign: 0 };
    pub const ONE: LogScaled = LogScaled { log_magnitude: 0.0, sign: 1 };

    pub fn new(sign: i8, log_magnitude: f64) -> Self {
        if sign == 0 || log_magnitude == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogScaled { log_magnitude, sign: sign.signum() }
        }
    }

    /// Positive number `exp(l)`.
    pub fn exp(l: f64) -> Self {
        Self::new(1, l)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogScaled { log_magnitude: x.abs().ln(), sign: if x > 0.0 { 1 } else { -1 } }
        }
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => s as f64 * self.log_magnitude.exp(),
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn abs(self) -> Self {
        if self.sign == 0 { self } else { LogScaled { sign: 1, ..self } }
    }

    /// `self^e` for a positive value.
    pub fn powf(self, e: f64) -> Self {
        debug_assert!(self.sign > 0 || e == e.trunc());
        match self.sign {
            0 => if e == 0.0 { Self::ONE } else { Self::ZERO },
            1 => Self::exp(self.log_magnitude * e),
            _ => {
                let s = if (e as i64) % 2 == 0 { 1 } else { -1 };
                Self::new(s, self.log_magnitude * e)
            }
        }
    }

    pub fn recip(self) -> Self {
        assert!(self.sign != 0, "reciprocal of zero");
        LogScaled { log_magnitude: -self.log_magnitude, sign: self.sign }
    }

    /// Log-sum-exp addition.
    pub fn add(self, o: Self) -> Self {
        if self.sign == 0 {
            return o;
        }
        if o.sign == 0 {
            return self;
        }
        let (big, small) = if self.log_magnitude >= o.log_magnitude { (self, o) } else { (o, self) };
        let r = (small.log_magnitude - big.log_magnitude).exp();
        if big.sign == small.sign {
            LogScaled { log_magnitude: big.log_magnitude + r.ln_1p(), sign: big.sign }
        } else if r == 1.0 {
            Self::ZERO
        } else {
            LogScaled { log_magnitude: big.log_magnitude + (-r).ln_1p(), sign: big.sign }
        }
    }

    pub fn sub(self, o: Self) -> Self {
        self.add(-o)
    }

    pub fn mul_f64(self, x: f64) -> Self {
        self * Self::from_f64(x)
    }

    pub fn sum<I: IntoIterator<Item = LogScaled>>(it: I) -> Self {
        let v: Vec<LogScaled> = it.into_iter().filter(|x| x.sign != 0).collect();
        let m = v.iter().map(|x| x.log_magnitude).fold(f64::NEG_INFINITY, f64::max);
        if v.is_empty() {
            return Self::ZERO;
        }
        let s: f64 = v.iter().map(|x| x.sign as f64 * (x.log_magnitude - m).exp()).sum();
        Self::from_f64(s).mul_exp(m)
    }

    /// Multiply by `exp(l)`.
    pub fn mul_exp(self, l: f64) -> Self {
        if self.sign == 0 { self } else { LogScaled { log_magnitude: self.log_magnitude + l, ..self } }
    }
}

impl Mul for LogScaled {
    type Output = LogScaled;
    fn mul(self, o: Self) -> Self {
        if self.sign == 0 || o.sign == 0 {
            return Self::ZERO;
        }
        LogScaled { log_magnitude: self.log_magnitude + o.log_magnitude, sign: self.sign * o.sign }
    }
}

impl Div for LogScaled {
    type Output = LogScaled;
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Neg for LogScaled {
    type Output = LogScaled;
    fn neg(self) -> Self {
        LogScaled { sign: -self.sign, ..self }
    }
}

impl PartialOrd for LogScaled {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        self.to_f64_cmp_key().partial_cmp(&o.to_f64_cmp_key())
    }
}

impl LogScaled {
    fn to_f64_cmp_key(self) -> (i8, f64) {
        match self.sign {
            0 => (0, 0.0),
            1 => (1, self.log_magnitude),
            _ => (-1, -self.log_magnitude),
        }
    }
}

impl fmt::Display for LogScaled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s => write!(f, "{}exp({})", if s < 0 { "-" } else { "" }, self.log_magnitude),
        }
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_406;

/// `ln Gamma(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("ln_gamma needs x > 0, got {x}"));
    }
    Ok(ln_gamma_pos(x))
}

pub(crate) fn ln_gamma_pos(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x < 12.0 {
        // shift up, then Stirling
        let n = (12.0 - x).ceil() as usize;
        let mut prod = 1.0;
        for i in 0..n {
            prod *= x + i as f64;
        }
        return stirling(x + n as f64) - prod.ln();
    }
    stirling(x)
}

fn stirling(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    let series = r
        * (1.0 / 12.0
            - r2 * (1.0 / 360.0
                - r2 * (1.0 / 1260.0
                    - r2 * (1.0 / 1680.0
                        - r2 * (1.0 / 1188.0 - r2 * (691.0 / 360_360.0 - r2 * (1.0 / 156.0)))))));
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + series
}

/// `ln n!`.
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma_pos(n as f64 + 1.0)
}

/// Monic Laguerre polynomials `L_n^(mu)(y)` for `n = 0..=n_max`.
///
/// Three-term recurrence with periodic rescaling so that high orders at
/// negative argument do not overflow.
pub fn laguerre_monic_table(n_max: usize, mu: f64, y: f64) -> Vec<LogScaled> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(LogScaled::ONE);
    let (mut l0, mut l1, mut scale) = (0.0f64, 1.0f64, 0.0f64);
    for n in 0..n_max {
        let nf = n as f64;
        let l2 = (y - (2.0 * nf + mu + 1.0)) * l1 - nf * (nf + mu) * l0;
        l0 = l1;
        l1 = l2;
        let m = l1.abs().max(l0.abs());
        if m > 1e100 || (m < 1e-100 && m > 0.0) {
            l0 /= m;
            l1 /= m;
            scale += m.ln();
        }
        out.push(LogScaled::from_f64(l1).mul_exp(scale));
    }
    out
}

/// Monic Laguerre polynomial `L_a^(mu)(y) = y^a + ...`; `a = -1` gives zero.
pub fn laguerre_monic(a: i64, mu: f64, y: f64) -> LogScaled {
    if a < 0 {
        return LogScaled::ZERO;
    }
    laguerre_monic_table(a as usize, mu, y)[a as usize]
}

/// `a!/(a-o)!`, exact product for small `o`.
pub fn falling_factorial(a: u64, o: u32) -> LogScaled {
    if o as u64 > a {
        return LogScaled::ZERO;
    }
    if o <= 20 {
        let p: f64 = (0..o as u64).map(|i| (a - i) as f64).product();
        if p.is_finite() {
            return LogScaled::from_f64(p);
        }
    }
    LogScaled::exp(ln_factorial(a) - ln_factorial(a - o as u64))
}

/// `d^order/dy^order L_a^(mu)(y) = a!/(a-order)! L_{a-order}^(mu+order)(y)`.
pub fn laguerre_monic_deriv(a: i64, mu: f64, order: u32, y: f64) -> LogScaled {
    let o = order as i64;
    if a < 0 || o > a {
        return LogScaled::ZERO;
    }
    laguerre_monic(a - o, mu + o as f64, y) * falling_factorial(a as u64, order)
}

fn softplus(v: f64) -> f64 {
    if v > 0.0 { v + (-v).exp().ln_1p() } else { v.exp().ln_1p() }
}

/// Tricomi's confluent hypergeometric function
/// `U(a,b,t) = 1/Gamma(a) int_0^inf z^(a-1) (1+z)^(b-a-1) e^(-tz) dz`, for `a, t > 0`.
///
/// The integral is taken in `v = ln z`, where the log-integrand has a single
/// maximum; the quadrature runs on both sides of it with the integrand
/// normalised to one at the peak.
pub fn tricomi_u(a: f64, b: f64, t: f64) -> Result<LogScaled> {
    if !(a > 0.0) || !(t > 0.0) || !b.is_finite() || !a.is_finite() || !t.is_finite() {
        return domain(format!("tricomi_u needs a > 0 and t > 0, got a={a}, t={t}"));
    }
    let c = b - a - 1.0;
    let lt = t.ln();
    let phi = |v: f64| a * v + c * softplus(v) - t * v.exp();
    // phi'(v) = 0  <=>  ln(a + c*sigma(v)) - v - ln t = 0, strictly decreasing in v
    let g = |v: f64| {
        let s = 1.0 / (1.0 + (-v).exp());
        (a + c * s).ln() - v - lt
    };
    let (mut lo, mut hi) = (-1.0 - lt.abs(), 1.0 + lt.abs());
    while g(lo) < 0.0 {
        lo = 2.0 * lo - 1.0;
    }
    while g(hi) > 0.0 {
        hi = 2.0 * hi + 1.0;
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if g(m) > 0.0 { lo = m } else { hi = m }
    }
    let vs = 0.5 * (lo + hi);
    let ps = phi(vs);
    const DROP: f64 = 46.0;
    let edge = |dir: f64| {
        let mut step = 1.0;
        let mut v = vs + dir * step;
        while phi(v) > ps - DROP {
            step *= 1.6;
            v = vs + dir * step;
        }
        v
    };
    let (vl, vr) = (edge(-1.0), edge(1.0));
    let f = |v: f64| (phi(v) - ps).exp();
    let tol = Tol { abs: 0.0, rel: 1e-14, max_intervals: 2000 };
    let (i1, _) = integrate(f, vl, vs, tol)?;
    let (i2, _) = integrate(f, vs, vr, tol)?;
    Ok(LogScaled::exp(ps + (i1 + i2).ln() - ln_gamma_pos(a)))
}

/// `U(a,b,t)` with the convention `U(0,b,t) = 1`.
pub fn tricomi_u0(a: f64, b: f64, t: f64) -> Result<LogScaled> {
    if a == 0.0 { Ok(LogScaled::ONE) } else { tricomi_u(a, b, t) }
}

/// Modified Bessel function `I_n(x)` by its positive power series.
pub fn bessel_i(n: u32, x: f64) -> Result<LogScaled> {
    if !(x >= 0.0) {
        return domain(format!("bessel_i needs x >= 0, got {x}"));
    }
    if x == 0.0 {
        return Ok(if n == 0 { LogScaled::ONE } else { LogScaled::ZERO });
    }
    let nf = n as f64;
    let q = 0.25 * x * x;
    let (mut term, mut sum, mut scale) = (1.0f64, 1.0f64, 0.0f64);
    let mut m = 0.0;
    loop {
        term *= q / ((m + 1.0) * (m + nf + 1.0));
        sum += term;
        m += 1.0;
        if sum > 1e250 {
            term /= sum;
            scale += sum.ln();
            sum = 1.0;
        }
        if term < 1e-17 * sum && m > 0.5 * x {
            break;
        }
    }
    Ok(LogScaled::exp(nf * (0.5 * x).ln() - ln_gamma_pos(nf + 1.0) + sum.ln() + scale))
}

/// `I_n(x) e^{-x}` as a plain real.
pub fn bessel_i_scaled(n: u32, x: f64) -> f64 {
    match bessel_i(n, x) {
        Ok(v) => v.mul_exp(-x).to_f64(),
        Err(_) => f64::NAN,
    }
}

/// Bessel functions `J_0..=J_n_max` at `x` by Miller's backward recurrence,
/// normalised with `J_0 + 2 sum_k J_2k = 1`.
pub fn bessel_j_table(n_max: u32, x: f64) -> Vec<f64> {
    let nm = n_max as usize;
    if x == 0.0 {
        let mut v = vec![0.0; nm + 1];
        v[0] = 1.0;
        return v;
    }
    let top = (n_max as f64).max(x);
    let mut start = (top + 30.0 + 3.0 * top.sqrt() + 10.0 * top.cbrt()) as usize;
    start += start % 2;
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let v = 2.0 * k as f64 / x * j[k] - j[k + 1];
        j[k - 1] = v;
        if v.abs() > 1e250 {
            for e in j.iter_mut().skip(k - 1) {
                *e *= 1e-250;
            }
            norm *= 1e-250;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j[k - 1];
        }
    }
    norm += j[0];
    j.truncate(nm + 1);
    j.iter().map(|v| v / norm).collect()
}

/// Bessel function of the first kind `J_n(x)`, `x >= 0`.
pub fn bessel_j(n: u32, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return domain(format!("bessel_j needs x >= 0, got {x}"));
    }
    Ok(bessel_j_table(n, x)[n as usize])
}

/// `J_n` for signed integer order, using `J_{-n} = (-1)^n J_n`.
pub fn bessel_j_signed(n: i64, x: f64) -> Result<f64> {
    let v = bessel_j(n.unsigned_abs() as u32, x)?;
    Ok(if n < 0 && n % 2 != 0 { -v } else { v })
}

/// `K_{m+1/2}(x)` for `m >= -1`, from the elementary closed forms and upward recurrence.
pub fn bessel_k_half(m: i32, x: f64) -> Result<LogScaled> {
    if !(x > 0.0) {
        return domain(format!("bessel_k_half needs x > 0, got {x}"));
    }
    if m < -1 {
        return domain(format!("bessel_k_half needs m >= -1, got {m}"));
    }
    // work with e^x K, which stays moderate
    let base = (std::f64::consts::PI / (2.0 * x)).sqrt();
    let (mut km, mut k) = (base, base); // K_{-1/2}, K_{1/2}
    let mut scale = 0.0;
    for i in 0..m.max(0) {
        let s = i as f64 + 0.5;
        let kn = km + 2.0 * s / x * k;
        km = k;
        k = kn;
        if k > 1e250 {
            km /= k;
            scale += k.ln();
            k = 1.0;
        }
    }
    Ok(LogScaled::exp(k.ln() + scale - x))
}
