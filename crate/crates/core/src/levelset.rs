//! Dyadic superlevel decomposition of nonnegative fields and the discrete
//! series and Hoelder inequalities built on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{FhsError, Result};
use crate::field::ScalarField;
use crate::fractional::{rhs_energy, CurvatureField};
use crate::mesh::{SubsetMask, SurfaceMesh};
use crate::params::{p_star, FracParams};

const REL_TOL: f64 = 1e-12;

/// Superlevel measures `a_i = |{u > 2^i}|` on the window `i_min..=i_max`.
/// Below the window `a_i` stays equal to `a_{i_min}`; above it `a_i = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicDecomposition {
    pub i_min: i32,
    pub i_max: i32,
    /// `a[k] = a_{i_min + k}`; the last entry is 0.
    pub a: Vec<f64>,
    /// `d[k] = |{2^i < u <= 2^{i+1}}|` for `i = i_min + k`.
    pub d: Vec<f64>,
}

impl DyadicDecomposition {
    /// The decomposition of the zero field.
    pub fn empty() -> Self {
        DyadicDecomposition {
            i_min: 0,
            i_max: 0,
            a: Vec::new(),
            d: Vec::new(),
        }
    }

    /// Builds a decomposition from a non-increasing, nonnegative sequence
    /// starting at index `i_min`. A trailing zero is appended if missing.
    pub fn from_sequence(i_min: i32, mut a: Vec<f64>) -> Result<Self> {
        if a.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(FhsError::InvalidSequence(
                "entries must be finite and nonnegative".into(),
            ));
        }
        if a.windows(2).any(|w| w[1] > w[0]) {
            return Err(FhsError::InvalidSequence("sequence must be non-increasing".into()));
        }
        if a.iter().all(|v| *v == 0.0) {
            return Ok(DyadicDecomposition::empty());
        }
        if *a.last().unwrap() != 0.0 {
            a.push(0.0);
        }
        let d = (0..a.len())
            .map(|k| a[k] - a.get(k + 1).copied().unwrap_or(0.0))
            .collect();
        let i_max = i_min + a.len() as i32 - 1;
        Ok(DyadicDecomposition { i_min, i_max, a, d })
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `a_i` for any integer `i`.
    pub fn a_at(&self, i: i32) -> f64 {
        if self.a.is_empty() || i >= self.i_max {
            0.0
        } else if i <= self.i_min {
            self.a[0]
        } else {
            self.a[(i - self.i_min) as usize]
        }
    }

    /// `d_i` for any integer `i`.
    pub fn d_at(&self, i: i32) -> f64 {
        if self.a.is_empty() || i < self.i_min || i > self.i_max {
            0.0
        } else {
            self.d[(i - self.i_min) as usize]
        }
    }

    /// Largest relative gap between `a_i` and `sum_{j >= i} d_j` on the window.
    pub fn telescoping_defect(&self) -> f64 {
        let mut acc = 0.0;
        let mut worst: f64 = 0.0;
        for k in (0..self.a.len()).rev() {
            acc += self.d[k];
            let scale = self.a[k].max(f64::MIN_POSITIVE);
            worst = worst.max((acc - self.a[k]).abs() / scale);
        }
        worst
    }
}

/// Smallest `i` with `2^i >= x`, for `x > 0`.
fn ceil_log2(x: f64) -> i32 {
    let mut i = x.log2().ceil() as i32;
    while 2f64.powi(i) < x {
        i += 1;
    }
    while 2f64.powi(i - 1) >= x {
        i -= 1;
    }
    i
}

pub fn dyadic_decompose(mesh: &SurfaceMesh, u: &ScalarField) -> Result<DyadicDecomposition> {
    u.check_len(mesh)?;
    let min = u.values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < 0.0 {
        return Err(FhsError::NonnegativityViolation(min));
    }
    if u.is_zero() {
        return Ok(DyadicDecomposition::empty());
    }
    let (lo, hi) = u
        .support_ids
        .iter()
        .map(|&e| u.values[e])
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let i_max = ceil_log2(hi);
    let i_min = ceil_log2(lo) - 1;
    let len = (i_max - i_min + 1) as usize;
    let mut a = vec![0.0; len];
    let mut d = vec![0.0; len];
    for &e in &u.support_ids {
        let v = u.values[e];
        let area = mesh.areas[e];
        // v lies in (2^j, 2^{j+1}] with j = ceil_log2(v) - 1.
        let j = ceil_log2(v) - 1;
        d[(j - i_min) as usize] += area;
    }
    for (k, ak) in a.iter_mut().enumerate() {
        let t = 2f64.powi(i_min + k as i32);
        *ak = u
            .support_ids
            .iter()
            .filter(|&&e| u.values[e] > t)
            .map(|&e| mesh.areas[e])
            .sum();
    }
    Ok(DyadicDecomposition { i_min, i_max, a, d })
}

fn check_exponents(n: usize, s: f64, p: f64) -> Result<()> {
    if !(n >= 1 && s > 0.0 && p >= 1.0 && s * p < n as f64) {
        return Err(FhsError::Precondition(format!(
            "need 0 < s, p >= 1, sp < n; got n={n}, s={s}, p={p}"
        )));
    }
    Ok(())
}

fn finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(FhsError::DivergentSeries)
    }
}

/// `sum_i 2^{pi} a_i^{(n-sp)/n}`, with the constant tail below the window
/// summed in closed form.
pub fn series_lhs(dec: &DyadicDecomposition, n: usize, s: f64, p: f64) -> Result<f64> {
    check_exponents(n, s, p)?;
    if dec.is_empty() {
        return Ok(0.0);
    }
    let e = (n as f64 - s * p) / n as f64;
    // Every i <= i_min carries a_{i_min}.
    let mut sum = dec.a[0].powf(e) * 2f64.powf(p * (dec.i_min + 1) as f64) / (2f64.powf(p) - 1.0);
    for (k, &ak) in dec.a.iter().enumerate().skip(1) {
        if ak > 0.0 {
            sum += 2f64.powf(p * (dec.i_min + k as i32) as f64) * ak.powf(e);
        }
    }
    finite(sum)
}

/// `2^{p*} sum_{a_i != 0} 2^{pi} a_i^{-sp/n} a_{i+1}`, tail included.
pub fn series_rhs(dec: &DyadicDecomposition, n: usize, s: f64, p: f64) -> Result<f64> {
    check_exponents(n, s, p)?;
    if dec.is_empty() {
        return Ok(0.0);
    }
    let e = -s * p / n as f64;
    // For i < i_min both a_i and a_{i+1} equal a_{i_min}.
    let mut sum = dec.a[0].powf(1.0 + e) * 2f64.powf(p * dec.i_min as f64) / (2f64.powf(p) - 1.0);
    for k in 0..dec.a.len() - 1 {
        let (ak, ak1) = (dec.a[k], dec.a[k + 1]);
        if ak > 0.0 {
            sum += 2f64.powf(p * (dec.i_min + k as i32) as f64) * ak.powf(e) * ak1;
        }
    }
    finite(2f64.powf(p_star(n, s, p)) * sum)
}

/// The right-hand series re-indexed as
/// `2^{p*-p} sum_i 2^{pi} a_{i-1}^{-sp/n} a_i`.
pub fn series_rhs_shifted(dec: &DyadicDecomposition, n: usize, s: f64, p: f64) -> Result<f64> {
    check_exponents(n, s, p)?;
    if dec.is_empty() {
        return Ok(0.0);
    }
    let e = -s * p / n as f64;
    let mut sum = dec.a[0].powf(1.0 + e) * 2f64.powf(p * (dec.i_min + 1) as f64) / (2f64.powf(p) - 1.0);
    for i in dec.i_min + 1..=dec.i_max {
        let (prev, cur) = (dec.a_at(i - 1), dec.a_at(i));
        if prev > 0.0 {
            sum += 2f64.powf(p * i as f64) * prev.powf(e) * cur;
        }
    }
    finite(2f64.powf(p_star(n, s, p) - p) * sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

impl InequalityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        InequalityCheck {
            lhs,
            rhs,
            ok: lhs <= rhs + REL_TOL * rhs,
        }
    }

    /// `lhs / rhs`, or 0 when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.rhs == 0.0 && self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

/// `sum x^t1 y^t2 <= (sum x)^t1 (sum y)^t2` for `t1 + t2 >= 1`.
pub fn generalized_holder_check(x: &[f64], y: &[f64], t1: f64, t2: f64) -> Result<InequalityCheck> {
    if !(t1 >= 0.0 && t2 >= 0.0) {
        return Err(FhsError::Precondition(format!(
            "exponents must be nonnegative, got {t1}, {t2}"
        )));
    }
    if t1 + t2 < 1.0 {
        return Err(FhsError::ExponentViolation(t1 + t2));
    }
    if x.len() != y.len() {
        return Err(FhsError::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.iter().chain(y).any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(FhsError::InvalidSequence(
            "entries must be finite and nonnegative".into(),
        ));
    }
    // 0^0 = 1 would count zero entries; a zero exponent means the factor is absent.
    let pow = |v: f64, t: f64| if t == 0.0 { 1.0 } else { v.powf(t) };
    let lhs: f64 = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 || **b > 0.0)
        .map(|(a, b)| pow(*a, t1) * pow(*b, t2))
        .sum();
    let rhs = pow(x.iter().sum(), t1) * pow(y.iter().sum(), t2);
    Ok(InequalityCheck::new(lhs, rhs))
}

/// Discrete form of
/// `int |x|^{tau gamma}|u|^tau <= (int |x|^{beta alpha}|u|^alpha)^{tau/alpha}
///  (int |x|^{tau alpha (gamma-beta)/(alpha-tau)})^{(alpha-tau)/alpha}`
/// with per-point radii `r`, values `u` and weights `w`.
pub fn weighted_holder_points(
    r: &[f64],
    u: &[f64],
    w: &[f64],
    tau: f64,
    gamma: f64,
    alpha_exp: f64,
    beta_exp: f64,
) -> Result<InequalityCheck> {
    if !(tau > 0.0) {
        return Err(FhsError::Precondition(format!("tau must be positive, got {tau}")));
    }
    if !(alpha_exp > tau) {
        return Err(FhsError::ExponentOrder { alpha_exp, tau });
    }
    if r.len() != u.len() || r.len() != w.len() {
        return Err(FhsError::LengthMismatch {
            expected: r.len(),
            got: u.len().min(w.len()),
        });
    }
    if r.iter().any(|x| !(*x > 0.0)) {
        return Err(FhsError::Precondition("radii must be positive".into()));
    }
    let third = tau * alpha_exp * (gamma - beta_exp) / (alpha_exp - tau);
    let (mut lhs, mut first, mut second) = (0.0, 0.0, 0.0);
    for ((&ri, &ui), &wi) in r.iter().zip(u).zip(w) {
        let ui = ui.abs();
        lhs += ri.powf(tau * gamma) * ui.powf(tau) * wi;
        first += ri.powf(beta_exp * alpha_exp) * ui.powf(alpha_exp) * wi;
        second += ri.powf(third) * wi;
    }
    let rhs = first.powf(tau / alpha_exp) * second.powf((alpha_exp - tau) / alpha_exp);
    Ok(InequalityCheck::new(lhs, rhs))
}

/// [`weighted_holder_points`] over the elements of `subset`, with radii
/// taken at element centroids.
pub fn weighted_holder_split(
    mesh: &SurfaceMesh,
    subset: &SubsetMask,
    u: &ScalarField,
    tau: f64,
    gamma: f64,
    alpha_exp: f64,
    beta_exp: f64,
) -> Result<InequalityCheck> {
    u.check_len(mesh)?;
    if subset.len() != mesh.len() {
        return Err(FhsError::LengthMismatch {
            expected: mesh.len(),
            got: subset.len(),
        });
    }
    let ids: Vec<usize> = subset.indices().collect();
    let r: Vec<f64> = ids.iter().map(|&e| mesh.centroids[e].norm()).collect();
    let v: Vec<f64> = ids.iter().map(|&e| u.values[e]).collect();
    let w: Vec<f64> = ids.iter().map(|&e| mesh.areas[e]).collect();
    weighted_holder_points(&r, &v, &w, tau, gamma, alpha_exp, beta_exp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LqCheck {
    pub lq_integral: f64,
    pub dyadic_sum: f64,
    pub ok: bool,
}

/// `sum_e |u_e|^q A_e >= sum_j 2^{jq} d_j`.
pub fn lq_lower_bound_check(dec: &DyadicDecomposition, mesh: &SurfaceMesh, u: &ScalarField, q: f64) -> Result<LqCheck> {
    u.check_len(mesh)?;
    if !(q > 0.0) {
        return Err(FhsError::Precondition(format!("q must be positive, got {q}")));
    }
    let lq_integral = u.lq_integral(mesh, q);
    let dyadic_sum: f64 = dec
        .d
        .iter()
        .enumerate()
        .map(|(k, dk)| 2f64.powf((dec.i_min + k as i32) as f64 * q) * dk)
        .sum();
    Ok(LqCheck {
        lq_integral,
        dyadic_sum,
        ok: lq_integral >= dyadic_sum - REL_TOL * lq_integral,
    })
}

/// Energy divided by the left-hand dyadic series: an empirical value of the
/// constant in the energy lower bound.
pub fn energy_lower_bound_ratio(
    mesh: &SurfaceMesh,
    u: &ScalarField,
    params: &FracParams,
    h: &CurvatureField,
) -> Result<f64> {
    let dec = dyadic_decompose(mesh, u)?;
    if dec.is_empty() {
        return Err(FhsError::ZeroDenominator);
    }
    let denom = series_lhs(&dec, params.n, params.s, params.p)?;
    if denom == 0.0 {
        return Err(FhsError::ZeroDenominator);
    }
    Ok(rhs_energy(mesh, u, params, h)?.total / denom)
}

/// A random bounded, non-increasing, eventually-zero sequence: sorted draws
/// with magnitudes log-uniform over `[1e-6, 1e6]` and a zeroed suffix.
pub fn random_admissible_sequence<R: Rng>(rng: &mut R) -> DyadicDecomposition {
    let len = rng.gen_range(1..=24usize);
    let mut a: Vec<f64> = (0..len).map(|_| 10f64.powf(rng.gen_range(-6.0..=6.0))).collect();
    a.sort_by(|x, y| y.total_cmp(x));
    let keep = rng.gen_range(1..=len);
    a.truncate(keep);
    let i_min = rng.gen_range(-12..=12);
    DyadicDecomposition::from_sequence(i_min, a).expect("sorted positive draws form a valid sequence")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesCheckSummary {
    pub cases: usize,
    pub passed: usize,
    pub failed: usize,
    pub worst_ratio: f64,
    pub worst_case_seed: u64,
}

/// Checks the series inequality on `cases` random sequences. Case `k` uses
/// the generator seeded with `seed + k`.
pub fn check_series(cases: usize, seed: u64, n: usize, s: f64, p: f64) -> Result<SeriesCheckSummary> {
    check_exponents(n, s, p)?;
    let mut summary = SeriesCheckSummary {
        cases,
        passed: 0,
        failed: 0,
        worst_ratio: 0.0,
        worst_case_seed: seed,
    };
    for k in 0..cases as u64 {
        let case_seed = seed.wrapping_add(k);
        let dec = random_admissible_sequence(&mut ChaCha8Rng::seed_from_u64(case_seed));
        let check = InequalityCheck::new(series_lhs(&dec, n, s, p)?, series_rhs(&dec, n, s, p)?);
        if check.ok {
            summary.passed += 1;
        } else {
            summary.failed += 1;
        }
        if check.ratio() > summary.worst_ratio {
            summary.worst_ratio = check.ratio();
            summary.worst_case_seed = case_seed;
        }
    }
    Ok(summary)
}
