//! Helpers shared by the integration tests.

#![allow(dead_code)]

use orbitgauge::numeric::{ExtRational, Rational};
use orbitgauge::persistence::{Bar, CertifiedBarcode};
use rand::rngs::StdRng;
use rand::Rng;

pub fn q(s: &str) -> Rational {
    s.parse().unwrap()
}

pub fn qs(v: &[&str]) -> Vec<Rational> {
    v.iter().map(|s| q(s)).collect()
}

/// A barcode with at most four bars on a grid of sixths, window either
/// infinite or a multiple of 1/4.
pub fn random_barcode(rng: &mut StdRng, degree: i64) -> CertifiedBarcode {
    let window = if rng.gen_ratio(1, 4) {
        ExtRational::Infinite
    } else {
        ExtRational::Finite(Rational::ratio(rng.gen_range(4..40), 4))
    };
    let mut bars = Vec::new();
    for _ in 0..rng.gen_range(0..=4) {
        let birth = Rational::ratio(rng.gen_range(1..40), 6);
        if window <= birth {
            continue;
        }
        let cert_end = if rng.gen_ratio(1, 3) {
            window.clone()
        } else {
            let end = &birth + Rational::ratio(rng.gen_range(1..30), 5);
            std::cmp::min(ExtRational::Finite(end), window.clone())
        };
        bars.push(Bar { birth, cert_end });
    }
    CertifiedBarcode::new(degree, window, bars).unwrap()
}

fn finite_endpoints(bc: &CertifiedBarcode) -> Vec<Rational> {
    let mut out = Vec::new();
    for b in bc.bars() {
        out.push(b.birth.clone());
        if let ExtRational::Finite(e) = &b.cert_end {
            out.push(e.clone());
        }
    }
    if let ExtRational::Finite(w) = bc.window_end() {
        out.push(w.clone());
    }
    out
}

// Rational c with lo < c² < hi, by bisection.
fn sqrt_between(lo: &Rational, hi: &Rational) -> Rational {
    let mut a = Rational::zero();
    let mut b = hi.clone().max(Rational::one());
    loop {
        let mid = a.midpoint(&b);
        let sq = mid.pow(2);
        if sq <= *lo {
            a = mid;
        } else if sq >= *hi {
            b = mid;
        } else {
            return mid;
        }
    }
}

fn le_ext(x: &Rational, w: &ExtRational) -> bool {
    match w {
        ExtRational::Infinite => true,
        ExtRational::Finite(w) => x <= w,
    }
}

/// Whether some `s` has `rank_src(s, c²s) > dim_tgt(cs)`, testing every
/// piece on which both counts are constant.
pub fn obstructed(src: &CertifiedBarcode, tgt: &CertifiedBarcode, c: &Rational) -> bool {
    let b = c.pow(2);
    let mut events: Vec<Rational> = Vec::new();
    for bar in src.bars() {
        events.push(bar.birth.clone());
        if let ExtRational::Finite(e) = &bar.cert_end {
            events.push(e / &b);
        }
    }
    for bar in tgt.bars() {
        events.push(&bar.birth / c);
    }
    if let ExtRational::Finite(w) = src.window_end() {
        events.push(w / &b);
    }
    if let ExtRational::Finite(w) = tgt.window_end() {
        events.push(w / c);
    }
    events.sort();
    events.dedup();
    let mut probes = Vec::new();
    match events.first() {
        Some(first) => probes.push(first / Rational::from(2i64)),
        None => probes.push(Rational::one()),
    }
    for w in events.windows(2) {
        probes.push(w[0].midpoint(&w[1]));
    }
    if let Some(last) = events.last() {
        probes.push(last + Rational::one());
    }
    probes.into_iter().any(|s| {
        let t = &b * &s;
        let u = c * &s;
        if !le_ext(&t, src.window_end()) || !le_ext(&u, tgt.window_end()) {
            return false;
        }
        let rank = src
            .bars()
            .iter()
            .filter(|x| x.birth < s && x.cert_end >= t)
            .count();
        let dim = tgt.bars().iter().filter(|x| x.birth < u).count();
        rank > dim
    })
}

/// Supremum of obstructed `b >= 1` for one pair of barcodes, by checking one
/// point inside every interval between candidate breakpoints.
pub fn brute_force_sup(src: &CertifiedBarcode, tgt: &CertifiedBarcode) -> ExtRational {
    let mut ends = finite_endpoints(src);
    ends.extend(finite_endpoints(tgt));
    let one = Rational::one();
    let mut cands = vec![one.clone()];
    for x in &ends {
        for y in &ends {
            if x > y {
                let r = x / y;
                cands.push(r.pow(2));
                cands.push(r);
            }
        }
    }
    cands.retain(|c| *c >= one);
    cands.sort();
    cands.dedup();
    let top = cands.last().unwrap().clone();
    if obstructed(src, tgt, &(top.clone().max(one.clone()) + Rational::one())) {
        return ExtRational::Infinite;
    }
    // Highest interval first: the first obstructed one fixes the supremum.
    for w in cands.windows(2).rev() {
        let c = sqrt_between(&w[0], &w[1]);
        if obstructed(src, tgt, &c) {
            return ExtRational::Finite(w[1].clone());
        }
    }
    ExtRational::Finite(one)
}

/// [`brute_force_sup`] maximized over degrees present on both sides.
pub fn brute_force_multi(src: &[CertifiedBarcode], tgt: &[CertifiedBarcode]) -> ExtRational {
    let mut best = ExtRational::Finite(Rational::one());
    for s in src {
        for t in tgt.iter().filter(|t| t.degree() == s.degree()) {
            best = best.max(brute_force_sup(s, t));
        }
    }
    best
}
