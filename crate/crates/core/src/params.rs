//! The parameter tuple of the weighted interpolation inequality, its
//! admissibility conditions, and the Hoelder split used for the second case.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{FhsError, Result};

const BALANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub n: usize,
    pub s: f64,
    pub p: f64,
    pub alpha: f64,
    pub a: f64,
    pub q: f64,
    pub gamma: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    Case1,
    Case2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderSplit {
    pub a1: f64,
    pub a2: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub delta: f64,
    pub halvings: usize,
}

/// `n p / (n - s p)`.
pub fn p_star(n: usize, s: f64, p: f64) -> f64 {
    let nf = n as f64;
    nf * p / (nf - s * p)
}

/// The exponent `tau` fixed by the balance condition.
pub fn derive_tau(n: usize, s: f64, p: f64, q: f64, a: f64, gamma: f64) -> Result<f64> {
    let nf = n as f64;
    if !(s * p < nf) {
        return Err(FhsError::InadmissibleParams(format!(
            "sp = {} must be < n = {n}",
            s * p
        )));
    }
    let inv = a / p_star(n, s, p) + (1.0 - a) / q - gamma / nf;
    if !(inv > 0.0) {
        return Err(FhsError::NonpositiveTau(inv));
    }
    Ok(1.0 / inv)
}

impl FracParams {
    /// Builds the tuple with `tau` derived from the balance condition.
    pub fn new(n: usize, s: f64, p: f64, alpha: f64, a: f64, q: f64, gamma: f64) -> Result<Self> {
        let tau = derive_tau(n, s, p, q, a, gamma)?;
        Ok(FracParams {
            n,
            s,
            p,
            alpha,
            a,
            q,
            gamma,
            tau,
        })
    }

    /// Like [`FracParams::new`], failing unless the tuple is admissible.
    pub fn admissible(n: usize, s: f64, p: f64, alpha: f64, a: f64, q: f64, gamma: f64) -> Result<Self> {
        let params = FracParams::new(n, s, p, alpha, a, q, gamma)?;
        params.ensure_admissible()?;
        Ok(params)
    }

    pub fn ensure_admissible(&self) -> Result<()> {
        let v = validate(self);
        if v.is_empty() {
            Ok(())
        } else {
            let msgs: Vec<String> = v.into_iter().map(|v| v.message).collect();
            Err(FhsError::InadmissibleParams(msgs.join("; ")))
        }
    }

    pub fn p_star(&self) -> f64 {
        p_star(self.n, self.s, self.p)
    }

    /// `1/tau + gamma/n - a/p* - (1-a)/q`.
    pub fn balance_residual(&self) -> f64 {
        1.0 / self.tau + self.gamma / self.n as f64 - self.a / self.p_star() - (1.0 - self.a) / self.q
    }

    /// True when `a = 1` or `q = p*`, where `gamma >= -a s` is required.
    pub fn endpoint(&self) -> bool {
        self.a == 1.0 || (self.q - self.p_star()).abs() <= BALANCE_TOL * self.q
    }

    /// Parses "n=2,s=0.5,p=1,alpha=0.5,a=1,q=2,gamma=-0.5"; `tau` is derived
    /// and any supplied value is ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut n = None;
        let (mut s, mut p, mut alpha, mut a, mut q, mut gamma) = (None, None, None, None, None, None);
        for part in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| FhsError::Parse(format!("expected key=value, got {part:?}")))?;
            let num: f64 = v.trim().parse().map_err(|e| FhsError::Parse(format!("{k}: {e}")))?;
            match k.trim() {
                "n" => n = Some(num as usize),
                "s" => s = Some(num),
                "p" => p = Some(num),
                "alpha" => alpha = Some(num),
                "a" => a = Some(num),
                "q" => q = Some(num),
                "gamma" => gamma = Some(num),
                "tau" => {}
                other => return Err(FhsError::Parse(format!("unknown parameter {other:?}"))),
            }
        }
        let need = |name: &str, v: Option<f64>| v.ok_or_else(|| FhsError::Parse(format!("missing parameter {name}")));
        let n = n.ok_or_else(|| FhsError::Parse("missing parameter n".into()))?;
        let s = need("s", s)?;
        let p = need("p", p)?;
        FracParams::new(
            n,
            s,
            p,
            alpha.unwrap_or(s),
            need("a", a)?,
            q.unwrap_or(p),
            need("gamma", gamma)?,
        )
    }
}

impl fmt::Display for FracParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={},s={},p={},alpha={},a={},q={},gamma={},tau={}",
            self.n, self.s, self.p, self.alpha, self.a, self.q, self.gamma, self.tau
        )
    }
}

/// Every violated admissibility condition; empty means admissible.
pub fn validate(params: &FracParams) -> Vec<Violation> {
    let FracParams {
        n,
        s,
        p,
        alpha,
        a,
        q,
        gamma,
        tau,
    } = *params;
    let nf = n as f64;
    let mut out = Vec::new();
    fn check(out: &mut Vec<Violation>, ok: bool, code: &'static str, message: String) {
        if !ok {
            out.push(Violation { code, message });
        }
    }
    check(
        &mut out,
        n == 1 || n == 2,
        "dimension",
        format!("n = {n} must be 1 or 2"),
    );
    check(
        &mut out,
        s > 0.0 && s < 1.0,
        "s_range",
        format!("s = {s} must lie in (0,1)"),
    );
    check(
        &mut out,
        alpha > 0.0 && alpha < 1.0,
        "alpha_range",
        format!("alpha = {alpha} must lie in (0,1)"),
    );
    check(&mut out, p >= 1.0, "p_range", format!("p = {p} must be >= 1"));
    check(&mut out, q >= 1.0, "q_range", format!("q = {q} must be >= 1"));
    check(
        &mut out,
        a > 0.0 && a <= 1.0,
        "a_range",
        format!("a = {a} must lie in (0,1]"),
    );
    check(
        &mut out,
        gamma <= 0.0,
        "gamma_sign",
        format!("gamma = {gamma} must be <= 0"),
    );
    check(&mut out, tau > 0.0, "tau_sign", format!("tau = {tau} must be positive"));
    check(
        &mut out,
        s * p < nf,
        "subcritical",
        format!("sp = {} must be < n = {n}", s * p),
    );
    if !out.is_empty() {
        return out;
    }
    let r = params.balance_residual();
    check(
        &mut out,
        r.abs() <= BALANCE_TOL,
        "balance",
        format!("balance residual {r:e} exceeds {BALANCE_TOL:e}"),
    );
    if params.endpoint() {
        check(
            &mut out,
            gamma >= -a * s - BALANCE_TOL,
            "endpoint_gamma",
            format!("gamma = {gamma} < -a s = {} with a = 1 or q = p*", -a * s),
        );
    }
    check(
        &mut out,
        1.0 / tau + gamma / nf > 0.0,
        "weight_window",
        format!("1/tau + gamma/n = {} must be positive", 1.0 / tau + gamma / nf),
    );
    out
}

/// Which branch of the proof applies: `1/tau <= a/p + (1-a)/q` or not.
pub fn classify_case(params: &FracParams) -> Result<CaseTag> {
    let FracParams {
        s, p, a, q, gamma, tau, ..
    } = *params;
    let bound = a / p + (1.0 - a) / q;
    if 1.0 / tau <= bound + BALANCE_TOL * bound.max(1.0) {
        return Ok(CaseTag::Case1);
    }
    if params.endpoint() {
        return Err(FhsError::InconsistentParams(format!(
            "second case with a = 1 or q = p* contradicts gamma >= -a s (gamma = {gamma})"
        )));
    }
    if !(gamma < -a * s) {
        return Err(FhsError::InconsistentParams(format!(
            "second case requires gamma < -a s, got {gamma}"
        )));
    }
    Ok(CaseTag::Case2)
}

/// `A(a) = a/p* + (1-a)/q`.
fn a_fn(params: &FracParams, a: f64) -> f64 {
    a / params.p_star() + (1.0 - a) / params.q
}

fn split_at(params: &FracParams, delta: f64) -> HolderSplit {
    let sign = if params.q > params.p_star() { 1.0 } else { -1.0 };
    let a1 = params.a - sign * delta;
    let a2 = params.a + sign * delta;
    let nf = params.n as f64;
    let gamma2 = -a2 * params.s;
    HolderSplit {
        a1,
        a2,
        tau1: 1.0 / a_fn(params, a1),
        tau2: 1.0 / (a_fn(params, a2) - gamma2 / nf),
        gamma1: 0.0,
        gamma2,
        delta,
        halvings: 0,
    }
}

/// Machine check of a split: every failed postcondition, empty when valid.
pub fn check_holder_split(params: &FracParams, split: &HolderSplit) -> Vec<String> {
    let mut bad = Vec::new();
    let tau = params.tau;
    let nf = params.n as f64;
    let ordered = if params.q > params.p_star() {
        0.0 < split.a1 && split.a1 < params.a && params.a < split.a2 && split.a2 < 1.0
    } else {
        0.0 < split.a2 && split.a2 < params.a && params.a < split.a1 && split.a1 < 1.0
    };
    if !ordered {
        bad.push(format!(
            "a1 = {}, a2 = {} not ordered around a = {}",
            split.a1, split.a2, params.a
        ));
    }
    let subs = [
        (split.a1, split.tau1, split.gamma1),
        (split.a2, split.tau2, split.gamma2),
    ];
    for (i, &(ai, ti, gi)) in subs.iter().enumerate() {
        let sub = FracParams {
            a: ai,
            tau: ti,
            gamma: gi,
            ..*params
        };
        if !(ti > tau) {
            bad.push(format!("tau{} = {ti} not > tau = {tau}", i + 1));
        }
        let r = sub.balance_residual();
        if r.abs() > BALANCE_TOL {
            bad.push(format!("balance residual {r:e} for sub-tuple {}", i + 1));
        }
        let case1 = 1.0 / ti <= ai / params.p + (1.0 - ai) / params.q + BALANCE_TOL;
        if !case1 {
            bad.push(format!("sub-tuple {} is not in the first case", i + 1));
        }
        if gi < -ai * params.s - BALANCE_TOL {
            bad.push(format!("gamma{} = {gi} < -a{} s", i + 1, i + 1));
        }
        let weight = tau * ti * (params.gamma - gi) / (ti - tau);
        let ok = if i == 0 { weight > -nf } else { weight < -nf };
        if !ok {
            bad.push(format!(
                "weight exponent {weight} on the wrong side of -n for sub-tuple {}",
                i + 1
            ));
        }
    }
    // A is increasing in a when q > p* and decreasing when q < p*.
    let (lo, mid, hi) = (a_fn(params, split.a1), a_fn(params, params.a), a_fn(params, split.a2));
    if !(lo < mid && mid < hi) {
        bad.push(format!(
            "A(a) not strictly monotone across the split: {lo}, {mid}, {hi}"
        ));
    }
    bad
}

/// Chooses `a1`, `a2` on either side of `a` with `tau1, tau2 > tau`,
/// halving the offset until every postcondition holds.
pub fn construct_holder_split(params: &FracParams) -> Result<HolderSplit> {
    if classify_case(params)? != CaseTag::Case2 {
        return Err(FhsError::Precondition(
            "Hoelder split needs parameters in the second case".into(),
        ));
    }
    let mut delta = params.a.min(1.0 - params.a) / 2.0;
    for halvings in 0..=50 {
        let mut split = split_at(params, delta);
        split.halvings = halvings;
        if check_holder_split(params, &split).is_empty() {
            return Ok(split);
        }
        delta *= 0.5;
    }
    Err(FhsError::SplitNotFound { halvings: 50, delta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn derive_tau_examples() {
        assert!(close(derive_tau(2, 0.5, 1.0, 2.0, 1.0, -0.5).unwrap(), 1.0));
        assert!(close(derive_tau(2, 0.5, 1.0, 2.0, 1.0, 0.0).unwrap(), 4.0 / 3.0));
        assert!(close(derive_tau(2, 0.5, 1.0, 2.0, 0.5, -0.5).unwrap(), 8.0 / 7.0));
        assert!(matches!(
            derive_tau(2, 0.5, 1.0, 2.0, 1.0, 2.0),
            Err(FhsError::NonpositiveTau(_))
        ));
    }

    #[test]
    fn validate_examples() {
        let sobolev = FracParams::new(2, 0.5, 1.0, 0.5, 1.0, 2.0, 0.0).unwrap();
        assert!(validate(&sobolev).is_empty());
        assert!(close(sobolev.tau, sobolev.p_star()));
        let hardy = FracParams::new(2, 0.5, 1.0, 0.5, 1.0, 2.0, -0.5).unwrap();
        assert!(validate(&hardy).is_empty());
        assert!(close(hardy.tau, 1.0));
        let bad = FracParams::new(2, 0.5, 1.0, 0.5, 1.0, 2.0, -1.0).unwrap();
        let v = validate(&bad);
        assert!(v.iter().any(|v| v.code == "endpoint_gamma"), "{v:?}");
        let worked = FracParams::new(2, 0.5, 1.0, 0.5, 0.5, 2.0, -0.5).unwrap();
        assert!(validate(&worked).is_empty());
        let mut off = hardy;
        off.tau = 1.1;
        assert!(validate(&off).iter().any(|v| v.code == "balance"));
    }

    #[test]
    fn classify_examples() {
        let hardy = FracParams::new(2, 0.5, 1.0, 0.5, 1.0, 2.0, -0.5).unwrap();
        assert_eq!(classify_case(&hardy).unwrap(), CaseTag::Case1);
        let worked = FracParams::new(2, 0.5, 1.0, 0.5, 0.5, 2.0, -0.5).unwrap();
        assert_eq!(classify_case(&worked).unwrap(), CaseTag::Case2);
        let sobolev = FracParams::new(2, 0.5, 1.0, 0.5, 1.0, 2.0, 0.0).unwrap();
        assert_eq!(classify_case(&sobolev).unwrap(), CaseTag::Case1);
        let inconsistent = FracParams::new(2, 0.5, 1.0, 0.5, 1.0, 2.0, -1.0).unwrap();
        assert!(matches!(
            classify_case(&inconsistent),
            Err(FhsError::InconsistentParams(_))
        ));
    }

    #[test]
    fn worked_split() {
        let worked = FracParams::new(2, 0.5, 1.0, 0.5, 0.5, 2.0, -0.5).unwrap();
        let split = construct_holder_split(&worked).unwrap();
        assert!(split.a1 < 0.5 && 0.5 < split.a2);
        assert_eq!(split.gamma1, 0.0);
        assert!(close(split.gamma2, -split.a2 * 0.5));
        assert!(split.tau1 > 8.0 / 7.0 && split.tau2 > 8.0 / 7.0);
        assert!(check_holder_split(&worked, &split).is_empty());
        let hardy = FracParams::new(2, 0.5, 1.0, 0.5, 1.0, 2.0, -0.5).unwrap();
        assert!(matches!(construct_holder_split(&hardy), Err(FhsError::Precondition(_))));
        // q < p*: the ordering flips.
        let low_q = FracParams::new(2, 0.5, 1.0, 0.5, 0.5, 1.0, -0.5).unwrap();
        assert!(close(low_q.tau, 8.0 / 9.0));
        let split = construct_holder_split(&low_q).unwrap();
        assert!(split.a2 < 0.5 && 0.5 < split.a1);
    }

    #[test]
    fn parse_round_trip() {
        let p = FracParams::parse("n=2,s=0.5,p=1,alpha=0.5,a=1,q=2,gamma=-0.5").unwrap();
        assert!(close(p.tau, 1.0));
        assert!(FracParams::parse("n=2,s=0.5").is_err());
        assert!(FracParams::parse("n=2,s=0.5,p=1,a=1,gamma=0,zeta=1").is_err());
    }

    fn admissible_tuple() -> impl Strategy<Value = FracParams> {
        (
            1usize..=2,
            0.05f64..0.95,
            1.0f64..3.0,
            0.05f64..0.95,
            0.05f64..=1.0,
            1.0f64..6.0,
            0.0f64..1.0,
        )
            .prop_filter_map("admissible", |(n, s, p, alpha, a, q, g)| {
                if s * p >= n as f64 * 0.95 {
                    return None;
                }
                let gamma = -g * a * s;
                let params = FracParams::new(n, s, p, alpha, a, q, gamma).ok()?;
                Some(params)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn derived_tau_validates(params in admissible_tuple()) {
            prop_assert!(validate(&params).is_empty(), "{:?}", validate(&params));
            prop_assert!(params.balance_residual().abs() <= 1e-12);
        }
    }

    proptest! {
        #[test]
        fn case2_forces_gamma_below_minus_as(params in admissible_tuple(), extra in 0.0f64..2.0) {
            let gamma = params.gamma - extra * params.s;
            if let Ok(p) = FracParams::new(params.n, params.s, params.p, params.alpha, params.a, params.q, gamma) {
                if let Ok(CaseTag::Case2) = classify_case(&p) {
                    prop_assert!(p.gamma < -p.a * p.s);
                    let split = construct_holder_split(&p).unwrap();
                    prop_assert!(check_holder_split(&p, &split).is_empty());
                }
            }
        }
    }
}
