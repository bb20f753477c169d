//! Certified windows of `β` for which every `p_j a_j / a_{n+1}` sits just
//! above `β`, found by exact simultaneous-approximation search.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::domains::EllipsoidSpec;
use crate::error::{Error, Result};
use crate::numeric::{cmp_power, root_bracket, Rational};

/// Default number of `p_n` values scanned before giving up.
pub const DEFAULT_SEARCH_SPAN: u64 = 1_000_000;

/// A tuple `(p_1, ..., p_n)` and the open window of `β` it certifies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirichletWitness {
    pub p: Vec<u64>,
    pub window: (Rational, Rational),
    /// Upper bound on `p_j a_j / a_{n+1} − β` over the window.
    pub quality: Rational,
}

impl DirichletWitness {
    pub fn contains(&self, beta: &Rational) -> bool {
        self.window.0 < *beta && *beta < self.window.1
    }
}

fn split(base: &EllipsoidSpec) -> Result<(&[Rational], &Rational)> {
    let caps = base.capacities();
    if caps.len() < 2 {
        return Err(Error::InvalidArgument(
            "base needs n + 1 >= 2 capacities".into(),
        ));
    }
    let n = caps.len() - 1;
    Ok((&caps[..n], &caps[n]))
}

fn targets(lower: &[Rational], top: &Rational, p: &[u64]) -> Vec<Rational> {
    lower
        .iter()
        .zip(p)
        .map(|(a, &pj)| Rational::from(pj) * a / top)
        .collect()
}

/// Exact check of `|p_n a_n / a_j − p_j|^{n−1} <= 1/p_n` for all `j < n`.
fn approx_ok(lower: &[Rational], p: &[u64]) -> Result<bool> {
    let n = lower.len();
    if n < 2 {
        return Ok(true);
    }
    let pn = p[n - 1];
    let inv = Rational::ratio(1, pn as i64);
    for j in 0..n - 1 {
        let d = (Rational::from(pn) * &lower[n - 1] / &lower[j] - Rational::from(p[j])).abs();
        if cmp_power(&d, &inv, (n - 1) as u32)? == Ordering::Greater {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest rational `d <= A p_n^{−1/(n−1)}` found by bisection, accurate to
/// `2^{−64}` of the window width.
fn inner_offset(big_a: &Rational, pn: u64, n: usize) -> Result<Rational> {
    let inv = Rational::ratio(1, pn as i64);
    let res = &inv * Rational::new(1, num_bigint::BigInt::from(1u8) << 64)?;
    let (lo, _) = root_bracket(&inv, (n - 1) as u32, &res)?;
    Ok(big_a * lo)
}

fn window_for(lower: &[Rational], top: &Rational, p: &[u64]) -> Result<(Rational, Rational)> {
    let n = lower.len();
    let t = targets(lower, top, p);
    let m = t.iter().min().expect("n >= 1").clone();
    if n == 1 {
        let x = m;
        let lo = &x - x.pow(-2);
        return Ok((lo, x));
    }
    let big_a = lower.iter().map(|a| a / top).max().expect("n >= 1");
    let d = inner_offset(&big_a, p[n - 1], n)?;
    Ok((&m - d, m))
}

fn witness(lower: &[Rational], top: &Rational, p: Vec<u64>) -> Result<DirichletWitness> {
    let window = window_for(lower, top, &p)?;
    let max_t = targets(lower, top, &p).into_iter().max().expect("n >= 1");
    let quality = max_t - &window.0;
    Ok(DirichletWitness { p, window, quality })
}

fn tuple_for(lower: &[Rational], pn: u64) -> Option<Vec<u64>> {
    let n = lower.len();
    let mut p = Vec::with_capacity(n);
    for aj in &lower[..n - 1] {
        let pj = (Rational::from(pn) * &lower[n - 1] / aj).round_half_down();
        let pj = u64::try_from(pj).ok()?;
        if pj == 0 {
            return None;
        }
        p.push(pj);
    }
    p.push(pn);
    Some(p)
}

/// Witness with `p_n >= p_n_min`, scanning at most [`DEFAULT_SEARCH_SPAN`] values.
pub fn dirichlet_tuple(base: &EllipsoidSpec, p_n_min: u64) -> Result<DirichletWitness> {
    dirichlet_tuple_with_ceiling(base, p_n_min, p_n_min.saturating_add(DEFAULT_SEARCH_SPAN))
}

/// Witness with `p_n_min <= p_n <= ceiling`.
///
/// For `n = 1` the window is `(x − x^{−2}, x)` with `x = r a_1/a_2` for the
/// smallest `r` giving `x >= p_n_min`. For `n >= 2` the first `p_n` whose
/// nearest-integer tuple passes the approximation test is used, and the
/// window is `(m − A p_n^{−1/(n−1)}, m)` with the left end rounded inward.
pub fn dirichlet_tuple_with_ceiling(
    base: &EllipsoidSpec,
    p_n_min: u64,
    ceiling: u64,
) -> Result<DirichletWitness> {
    let (lower, top) = split(base)?;
    let p_n_min = p_n_min.max(1);
    if lower.len() == 1 {
        let r = (Rational::from(p_n_min) * top / &lower[0]).ceil();
        let r = u64::try_from(r)
            .map_err(|_| Error::InvalidArgument("r exceeds 64 bits".into()))?
            .max(1);
        return witness(lower, top, vec![r]);
    }
    let mut pn = p_n_min;
    while pn <= ceiling {
        if let Some(p) = tuple_for(lower, pn) {
            if approx_ok(lower, &p)? {
                return witness(lower, top, p);
            }
        }
        pn += 1;
    }
    Err(Error::SearchExhausted { limit: ceiling })
}

/// A witness whose window contains `beta`, found by scanning upward.
pub fn witness_for_beta(base: &EllipsoidSpec, beta: &Rational) -> Result<DirichletWitness> {
    let (lower, top) = split(base)?;
    if lower.len() == 1 {
        let r = (beta * top / &lower[0]).floor() + 1;
        let r = u64::try_from(r)
            .map_err(|_| Error::InvalidArgument("r exceeds 64 bits".into()))?
            .max(1);
        let w = witness(lower, top, vec![r])?;
        return check_contains(w, beta);
    }
    let big_a = lower.iter().map(|a| a / top).max().expect("n >= 1");
    let n = lower.len();
    let mut last = None;
    for pn in 1..=DEFAULT_SEARCH_SPAN {
        let Some(p) = tuple_for(lower, pn) else {
            continue;
        };
        if !approx_ok(lower, &p)? {
            continue;
        }
        let w = witness(lower, top, p)?;
        if w.contains(beta) {
            return Ok(w);
        }
        let far = Rational::from(pn) * &lower[n - 1] / top - Rational::from(3i64) * &big_a;
        last = Some(w);
        if far > *beta {
            break;
        }
    }
    match last {
        Some(w) => check_contains(w, beta),
        None => Err(Error::SearchExhausted {
            limit: DEFAULT_SEARCH_SPAN,
        }),
    }
}

fn check_contains(w: DirichletWitness, beta: &Rational) -> Result<DirichletWitness> {
    if w.contains(beta) {
        Ok(w)
    } else {
        Err(Error::OutsideWindow {
            beta: beta.to_string(),
            lo: w.window.0.to_string(),
            hi: w.window.1.to_string(),
        })
    }
}

/// Per-`j` margins confirming `0 < p_j a_j / a_{n+1} − β`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BetaCertificate {
    pub beta: Rational,
    pub margins: Vec<Rational>,
}

/// Checks that `witness` is a valid witness for `base`.
pub fn validate_witness(base: &EllipsoidSpec, witness: &DirichletWitness) -> Result<()> {
    let (lower, top) = split(base)?;
    let n = lower.len();
    let bad = |why: &str| {
        Err(Error::InvalidArgument(format!(
            "witness invalid for base: {why}"
        )))
    };
    if witness.p.len() != n {
        return bad("wrong tuple length");
    }
    if witness.p.contains(&0) {
        return bad("entries must be positive");
    }
    let (lo, hi) = &witness.window;
    if lo >= hi {
        return bad("empty window");
    }
    if !approx_ok(lower, &witness.p)? {
        return bad("approximation inequality fails");
    }
    let t = targets(lower, top, &witness.p);
    let m = t.iter().min().expect("n >= 1");
    if hi > m {
        return bad("window extends above min_j p_j a_j / a_{n+1}");
    }
    // The left end must lie inside the interval the tuple certifies.
    let gap = m - lo;
    if n == 1 {
        if gap > m.pow(-2) {
            return bad("window extends below x - x^-2");
        }
    } else {
        let big_a = lower.iter().map(|a| a / top).max().expect("n >= 1");
        let inv = Rational::ratio(1, witness.p[n - 1] as i64);
        if cmp_power(&(&gap / &big_a), &inv, (n - 1) as u32)? == Ordering::Greater {
            return bad("window extends below m - A p_n^(-1/(n-1))");
        }
    }
    let max_t = t.iter().max().expect("n >= 1");
    if witness.quality < (max_t - lo) {
        return bad("quality understates the margin");
    }
    Ok(())
}

/// Certifies that `beta` lies in the witness window and that every
/// `β a_{n+1} / a_j` is non-integral.
pub fn certify_beta(
    base: &EllipsoidSpec,
    beta: &Rational,
    witness: &DirichletWitness,
) -> Result<BetaCertificate> {
    validate_witness(base, witness)?;
    let (lower, top) = split(base)?;
    if !witness.contains(beta) {
        return Err(Error::OutsideWindow {
            beta: beta.to_string(),
            lo: witness.window.0.to_string(),
            hi: witness.window.1.to_string(),
        });
    }
    for (j, aj) in lower.iter().enumerate() {
        let r = beta * top / aj;
        if r.is_integer() {
            return Err(Error::DegenerateInput {
                location: format!("j={}", j + 1),
                detail: format!("beta a_(n+1) / a_j = {r} is an integer"),
            });
        }
    }
    let margins: Vec<Rational> = targets(lower, top, &witness.p)
        .into_iter()
        .map(|t| t - beta)
        .collect();
    if margins.iter().any(|m| !m.is_positive()) {
        return Err(Error::OutsideWindow {
            beta: beta.to_string(),
            lo: witness.window.0.to_string(),
            hi: witness.window.1.to_string(),
        });
    }
    Ok(BetaCertificate {
        beta: beta.clone(),
        margins,
    })
}
