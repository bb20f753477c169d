//! Certified barcodes and the implantation obstruction.
//!
//! A [`CertifiedBarcode`] in degree `k` lists every generator born below its
//! window together with a guaranteed survival end. Within the window,
//! `dim CH^s_k = #{birth < s}` and the structure map `CH^s → CH^t` is
//! injective on the bars with `t <= cert_end`.
//!
//! An obstruction to a `√b`-implantation of the source module into the
//! target is any `s` with `rank_src(s, b·s) > dim_tgt(√b·s)`; it certifies
//! that the fine hemidistance from the target domain to the source domain is
//! at least `b`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{root_bracket, ExtRational, Rational};
use crate::reeb::{OrbitFamily, Period, ReebOrbit};

/// One bar: born at `birth`, certified to survive up to `cert_end`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bar {
    pub birth: Rational,
    pub cert_end: ExtRational,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "BarcodeRecord", into = "BarcodeRecord")]
pub struct CertifiedBarcode {
    degree: i64,
    window_end: ExtRational,
    bars: Vec<Bar>,
}

#[derive(Serialize, Deserialize)]
struct BarcodeRecord {
    degree: i64,
    window_end: ExtRational,
    bars: Vec<(Rational, ExtRational)>,
}

impl TryFrom<BarcodeRecord> for CertifiedBarcode {
    type Error = Error;
    fn try_from(r: BarcodeRecord) -> Result<Self> {
        let bars = r
            .bars
            .into_iter()
            .map(|(birth, cert_end)| Bar { birth, cert_end })
            .collect();
        CertifiedBarcode::new(r.degree, r.window_end, bars)
    }
}

impl From<CertifiedBarcode> for BarcodeRecord {
    fn from(b: CertifiedBarcode) -> Self {
        BarcodeRecord {
            degree: b.degree,
            window_end: b.window_end,
            bars: b
                .bars
                .into_iter()
                .map(|bar| (bar.birth, bar.cert_end))
                .collect(),
        }
    }
}

impl CertifiedBarcode {
    /// Builds a barcode, checking `0 < birth < cert_end <= window_end`.
    pub fn new(degree: i64, window_end: ExtRational, mut bars: Vec<Bar>) -> Result<Self> {
        if let ExtRational::Finite(w) = &window_end {
            if !w.is_positive() {
                return Err(Error::InvalidArgument(format!(
                    "window end {w} must be positive"
                )));
            }
        }
        for bar in &bars {
            if !bar.birth.is_positive() {
                return Err(Error::InvalidArgument(format!(
                    "bar birth {} must be positive",
                    bar.birth
                )));
            }
            if bar.cert_end <= bar.birth {
                return Err(Error::InvalidArgument(format!(
                    "bar ({}, {}) is empty",
                    bar.birth, bar.cert_end
                )));
            }
            if bar.cert_end > window_end {
                return Err(Error::InvalidArgument(format!(
                    "bar end {} exceeds window end {}",
                    bar.cert_end, window_end
                )));
            }
        }
        bars.sort();
        Ok(CertifiedBarcode {
            degree,
            window_end,
            bars,
        })
    }

    /// A barcode with no bars, certified up to `window_end`.
    pub fn empty(degree: i64, window_end: ExtRational) -> Result<Self> {
        CertifiedBarcode::new(degree, window_end, Vec::new())
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn window_end(&self) -> &ExtRational {
        &self.window_end
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    fn check_query(&self, x: &Rational) -> Result<()> {
        if !x.is_positive() {
            return Err(Error::InvalidArgument(format!(
                "query value {x} must be positive"
            )));
        }
        if self.window_end < ExtRational::Finite(x.clone()) {
            return Err(Error::InvalidArgument(format!(
                "query value {x} exceeds window end {}",
                self.window_end
            )));
        }
        if self.bars.iter().any(|b| b.birth == *x) {
            return Err(Error::QueryAtBirth {
                value: x.to_string(),
            });
        }
        Ok(())
    }

    /// `dim CH^x_k = #{bars: birth < x}`.
    pub fn dim(&self, x: &Rational) -> Result<usize> {
        self.check_query(x)?;
        Ok(self.bars.iter().filter(|b| b.birth < *x).count())
    }

    /// Certified lower bound on the rank of `CH^s_k → CH^t_k`:
    /// `#{bars: birth < s and t <= cert_end}`.
    pub fn rank(&self, s: &Rational, t: &Rational) -> Result<usize> {
        if s > t {
            return Err(Error::InvalidArgument(format!(
                "rank needs s <= t, got s = {s}, t = {t}"
            )));
        }
        self.check_query(s)?;
        self.check_query(t)?;
        Ok(self
            .bars
            .iter()
            .filter(|b| b.birth < *s && b.cert_end >= *t)
            .count())
    }
}

/// Certified barcode in `degree` from a complete list of orbits below `window_end`.
///
/// The caller guarantees that `orbits` contains every closed orbit whose
/// period (or period bound) lies below `window_end`. Fails if an orbit of
/// adjacent degree, an orbit of unknown index or a degenerate orbit lies
/// inside the window, if a corner family's bound is below the window end,
/// or if index parity is not constant within a family.
pub fn barcode_from_orbits(
    orbits: &[ReebOrbit],
    degree: i64,
    window_end: &ExtRational,
) -> Result<CertifiedBarcode> {
    let mut bars = Vec::new();
    let mut parity: BTreeMap<FamilyKey, (i64, &ReebOrbit)> = BTreeMap::new();
    for o in orbits {
        let below = *window_end > *o.period.value();
        match &o.period {
            Period::LowerBound(t) => {
                if below {
                    return Err(Error::HypothesisViolated(format!(
                        "corner family {:?} N={} has period bound {t} below window end {window_end}",
                        o.family, o.multiplicity
                    )));
                }
            }
            Period::Exact(t) => {
                if !below {
                    continue;
                }
                let Some(cz) = o.cz else {
                    return Err(Error::HypothesisViolated(format!(
                        "orbit {:?} of unknown index inside the window",
                        o.family
                    )));
                };
                if !o.nondegenerate {
                    return Err(Error::HypothesisViolated(format!(
                        "degenerate orbit {:?} inside the window",
                        o.family
                    )));
                }
                if (cz - degree).abs() == 1 {
                    return Err(Error::HypothesisViolated(format!(
                        "orbit {:?} N={} of index {cz} at period {t} is adjacent to degree {degree}",
                        o.family, o.multiplicity
                    )));
                }
                let key = FamilyKey::of(&o.family);
                if let Some((p, other)) = parity.get(&key) {
                    if (p - cz).rem_euclid(2) != 0 {
                        return Err(Error::HypothesisViolated(format!(
                            "index parity changes within family {:?} (N={} vs N={})",
                            o.family, other.multiplicity, o.multiplicity
                        )));
                    }
                } else {
                    parity.insert(key, (cz, o));
                }
                if cz == degree {
                    bars.push(Bar {
                        birth: t.clone(),
                        cert_end: window_end.clone(),
                    });
                }
            }
        }
    }
    CertifiedBarcode::new(degree, window_end.clone(), bars)
}

/// Family identity ignoring multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct FamilyKey(OrbitFamily);

impl FamilyKey {
    fn of(f: &OrbitFamily) -> Self {
        FamilyKey(*f)
    }
}

/// Largest window end at most `cap` for which [`barcode_from_orbits`] can
/// succeed in `degree`.
pub fn max_window(orbits: &[ReebOrbit], degree: i64, cap: &ExtRational) -> ExtRational {
    let mut w = cap.clone();
    for o in orbits {
        let blocks = match (&o.period, o.cz) {
            (Period::LowerBound(_), _) => true,
            (Period::Exact(_), None) => true,
            (Period::Exact(_), Some(cz)) => !o.nondegenerate || (cz - degree).abs() == 1,
        };
        if blocks && w > *o.period.value() {
            w = ExtRational::Finite(o.period.value().clone());
        }
    }
    w
}

/// Degree-`degree` barcode of any ellipsoid of complex dimension `dim`:
/// every orbit has index at least `dim + 1`, so for `degree < dim` the
/// barcode is empty for all filtration levels.
pub fn ellipsoid_certified_empty(dim: usize, degree: i64) -> Result<CertifiedBarcode> {
    if degree >= dim as i64 {
        return Err(Error::HypothesisViolated(format!(
            "ellipsoid barcodes in degree {degree} are not empty for dimension {dim}"
        )));
    }
    CertifiedBarcode::empty(degree, ExtRational::Infinite)
}

/// The barcode of `a^{-1} X` given that of `X`: every endpoint divided by `a`.
pub fn scale_barcode(bc: &CertifiedBarcode, a: &Rational) -> Result<CertifiedBarcode> {
    if *a < Rational::one() {
        return Err(Error::InvalidArgument(format!(
            "scale factor {a} must be >= 1"
        )));
    }
    let bars = bc
        .bars
        .iter()
        .map(|b| Bar {
            birth: &b.birth / a,
            cert_end: b.cert_end.div_by(a),
        })
        .collect();
    CertifiedBarcode::new(bc.degree, bc.window_end.div_by(a), bars)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ImplantationBound {
    /// Supremum of the certifiable `b`; at least 1.
    pub value: ExtRational,
    /// False when `value` is a supremum approached from below.
    pub attained: bool,
    pub degree_used: Option<i64>,
    /// Filtration level of the exact check that confirmed the bound.
    pub witness_s: Option<Rational>,
    /// The `b < value` at which the exact check was run.
    pub witness_b: Option<Rational>,
}

fn ext_square_ratio(g: &ExtRational, p: &Rational) -> ExtRational {
    match g {
        ExtRational::Finite(g) => ExtRational::Finite((g / p).pow(2)),
        ExtRational::Infinite => ExtRational::Infinite,
    }
}

fn ext_min(a: ExtRational, b: ExtRational) -> ExtRational {
    std::cmp::min(a, b)
}

struct Candidate {
    value: ExtRational,
    degree: i64,
    p: Rational,
    e: ExtRational,
    g: ExtRational,
}

/// Exact obstruction check at `b = c²`; returns the `s` used.
fn verify(
    src: &CertifiedBarcode,
    tgt: &CertifiedBarcode,
    cand: &Candidate,
) -> Result<(Rational, Rational)> {
    let c = match &cand.value {
        ExtRational::Infinite => Rational::from(2i64),
        ExtRational::Finite(v) => {
            let one = Rational::one();
            let res = (v - &one) / (Rational::from(8i64) * v);
            let (lo, _) = root_bracket(v, 2, &res)?;
            let c = if lo.pow(2) < *v {
                lo
            } else {
                lo - &res / Rational::from(2i64)
            };
            c.max(one)
        }
    };
    let b = c.pow(2);
    let upper = ext_min(cand.e.div_by(&b), cand.g.div_by(&c));
    let p = &cand.p;
    let span = match &upper {
        ExtRational::Finite(u) => u - p,
        ExtRational::Infinite => p.clone(),
    };
    for k in 2..64i64 {
        let s = p + &span / Rational::from(k);
        let bs = &b * &s;
        let cs = &c * &s;
        let (Ok(r), Ok(d)) = (src.rank(&s, &bs), tgt.dim(&cs)) else {
            continue;
        };
        if r > d {
            return Ok((s, b));
        }
        return Err(Error::EngineMismatch(format!(
            "candidate {} in degree {} failed its exact check at s = {s}, b = {b}: rank {r} <= dim {d}",
            cand.value, cand.degree
        )));
    }
    Err(Error::EngineMismatch(format!(
        "no admissible query point for candidate {}",
        cand.value
    )))
}

/// Supremum of `b` certified by a rank obstruction, over all shared degrees.
///
/// For a source birth `p` and `r >= 1`, let `e` be the `r`-th largest
/// certified end among source bars born at or before `p`, and `g` the
/// `r`-th smallest target birth (or the target window end when there are
/// fewer than `r` bars). Every `b < min(e/p, (g/p)²)` is obstructed at some
/// `s` slightly above `p`, and every obstruction arises this way. Degrees
/// without a target barcode are skipped.
pub fn implantation_lower_bound(
    source: &[CertifiedBarcode],
    target: &[CertifiedBarcode],
) -> Result<ImplantationBound> {
    let mut best: Option<(Candidate, &CertifiedBarcode, &CertifiedBarcode)> = None;
    for src in source {
        let Some(tgt) = target.iter().find(|t| t.degree == src.degree) else {
            continue;
        };
        let tgt_births: Vec<&Rational> = tgt.bars.iter().map(|b| &b.birth).collect();
        let mut births: Vec<&Rational> = src.bars.iter().map(|b| &b.birth).collect();
        births.dedup();
        for p in births {
            let mut ends: Vec<&ExtRational> = src
                .bars
                .iter()
                .filter(|b| b.birth <= *p)
                .map(|b| &b.cert_end)
                .collect();
            ends.sort_by(|x, y| y.cmp(x));
            for (i, e) in ends.into_iter().enumerate() {
                let g = match tgt_births.get(i) {
                    Some(g) => ExtRational::Finite((*g).clone()),
                    None => tgt.window_end.clone(),
                };
                let value = ext_min(e.div_by(p), ext_square_ratio(&g, p));
                if value <= Rational::one() {
                    continue;
                }
                let cand = Candidate {
                    value,
                    degree: src.degree,
                    p: p.clone(),
                    e: e.clone(),
                    g,
                };
                verify(src, tgt, &cand)?;
                if best.as_ref().is_none_or(|(b, _, _)| cand.value > b.value) {
                    best = Some((cand, src, tgt));
                }
            }
        }
    }
    match best {
        None => Ok(ImplantationBound {
            value: ExtRational::Finite(Rational::one()),
            attained: true,
            degree_used: None,
            witness_s: None,
            witness_b: None,
        }),
        Some((cand, src, tgt)) => {
            let (s, b) = verify(src, tgt, &cand)?;
            Ok(ImplantationBound {
                value: cand.value,
                attained: false,
                degree_used: Some(cand.degree),
                witness_s: Some(s),
                witness_b: Some(b),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::SinkholeSpec;
    use crate::reeb::sinkhole_spectrum;
    use proptest::prelude::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn fin(s: &str) -> ExtRational {
        ExtRational::Finite(q(s))
    }

    fn bar(b: &str, e: &str) -> Bar {
        Bar {
            birth: q(b),
            cert_end: e.parse().unwrap(),
        }
    }

    fn sinkhole_barcode() -> CertifiedBarcode {
        let spec = SinkholeSpec::new(1, vec![q("1/10"), q("1/3")], None).unwrap();
        let orbits = sinkhole_spectrum(&spec, &q("9/10")).unwrap();
        barcode_from_orbits(&orbits, -1, &fin("9/10")).unwrap()
    }

    #[test]
    fn sinkhole_barcode_example() {
        let bc = sinkhole_barcode();
        assert_eq!(bc.bars(), &[bar("1/10", "9/10"), bar("1/3", "9/10")]);
        assert_eq!(bc.rank(&q("1/5"), &q("1/5")).unwrap(), 1);
        assert_eq!(bc.rank(&q("1/2"), &q("4/5")).unwrap(), 2);
        assert_eq!(bc.rank(&q("1/20"), &q("1/20")).unwrap(), 0);
        assert_eq!(bc.dim(&q("1/5")).unwrap(), 1);
        assert!(matches!(
            bc.rank(&q("1/3"), &q("1/2")),
            Err(Error::QueryAtBirth { .. })
        ));
        assert!(matches!(
            bc.rank(&q("1/5"), &q("1")),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn adjacent_degree_rejected() {
        let spec = SinkholeSpec::new(1, vec![q("1/10"), q("1/3")], None).unwrap();
        let orbits = sinkhole_spectrum(&spec, &q("9/10")).unwrap();
        assert!(matches!(
            barcode_from_orbits(&orbits, -2, &fin("9/10")),
            Err(Error::HypothesisViolated(_))
        ));
        assert!(barcode_from_orbits(&[], 5, &fin("3"))
            .unwrap()
            .bars()
            .is_empty());
    }

    #[test]
    fn scale_examples() {
        let bc = CertifiedBarcode::new(-3, fin("34/133"), vec![bar("1/100", "34/133")]).unwrap();
        assert_eq!(scale_barcode(&bc, &q("1")).unwrap(), bc);
        let s = scale_barcode(&bc, &q("2")).unwrap();
        assert_eq!(s.bars(), &[bar("1/200", "17/133")]);
        assert!(scale_barcode(&bc, &q("1/2")).is_err());
    }

    #[test]
    fn implantation_examples() {
        let src = CertifiedBarcode::new(-3, fin("34/133"), vec![bar("1/100", "34/133")]).unwrap();
        let tgt = ellipsoid_certified_empty(2, -3).unwrap();
        let r = implantation_lower_bound(&[src], &[tgt]).unwrap();
        assert_eq!(r.value, fin("3400/133"));
        assert!(!r.attained);
        assert_eq!(r.degree_used, Some(-3));

        let r = implantation_lower_bound(&[], &[]).unwrap();
        assert_eq!(r.value, fin("1"));
        assert!(r.attained);

        let src = CertifiedBarcode::new(-1, fin("9/10"), vec![bar("1/10", "9/10")]).unwrap();
        let tgt = CertifiedBarcode::new(-1, fin("9/10"), vec![bar("1/3", "9/10")]).unwrap();
        let r = implantation_lower_bound(&[src], &[tgt]).unwrap();
        assert_eq!(r.value, fin("9"));
        assert!(!r.attained);
    }

    #[test]
    fn infinite_value_when_unconstrained() {
        let src = CertifiedBarcode::new(0, ExtRational::Infinite, vec![bar("1", "inf")]).unwrap();
        let tgt = CertifiedBarcode::empty(0, ExtRational::Infinite).unwrap();
        let r = implantation_lower_bound(&[src], &[tgt]).unwrap();
        assert_eq!(r.value, ExtRational::Infinite);
    }

    #[test]
    fn missing_target_degree_skipped() {
        let src = CertifiedBarcode::new(4, fin("2"), vec![bar("1", "2")]).unwrap();
        let tgt = CertifiedBarcode::empty(3, fin("10")).unwrap();
        assert_eq!(
            implantation_lower_bound(&[src], &[tgt]).unwrap().value,
            fin("1")
        );
    }

    #[test]
    fn max_window_examples() {
        let spec = SinkholeSpec::new(1, vec![q("1/10"), q("1/3")], None).unwrap();
        let orbits = sinkhole_spectrum(&spec, &q("9/10")).unwrap();
        assert_eq!(max_window(&orbits, -1, &fin("9/10")), fin("9/10"));
        assert_eq!(max_window(&orbits, -2, &fin("9/10")), fin("1/10"));
    }

    #[test]
    fn json_round_trip() {
        let bc =
            CertifiedBarcode::new(-3, ExtRational::Infinite, vec![bar("1/100", "34/133")]).unwrap();
        let text = serde_json::to_string(&bc).unwrap();
        assert_eq!(
            text,
            r#"{"degree":-3,"window_end":"inf","bars":[["1/100","34/133"]]}"#
        );
        let back: CertifiedBarcode = serde_json::from_str(&text).unwrap();
        assert_eq!(back, bc);
        assert!(serde_json::from_str::<CertifiedBarcode>(
            r#"{"degree":0,"window_end":"1","bars":[["2","3"]]}"#
        )
        .is_err());
    }

    fn arb_barcode(degree: i64) -> impl Strategy<Value = CertifiedBarcode> {
        (
            1i64..40,
            proptest::collection::vec((1i64..40, 1i64..40), 0..4),
        )
            .prop_map(move |(w, raw)| {
                let w = Rational::from(w + 40);
                let bars = raw
                    .into_iter()
                    .map(|(b, len)| {
                        let birth = Rational::ratio(b, 1) + Rational::ratio(1, 3);
                        let end = (&birth + Rational::from(len)).min(w.clone());
                        Bar {
                            birth,
                            cert_end: ExtRational::Finite(end),
                        }
                    })
                    .collect();
                CertifiedBarcode::new(degree, ExtRational::Finite(w), bars).unwrap()
            })
    }

    proptest! {
        #[test]
        fn rank_monotone(bc in arb_barcode(0), s in 1i64..80, ds in 0i64..20, dt in 0i64..20, t in 1i64..80) {
            let w = bc.window_end().finite().unwrap().clone();
            let s = Rational::ratio(s, 2);
            let t = (&s + Rational::ratio(t, 2)).min(w.clone());
            let s2 = (&s + Rational::ratio(ds, 4)).min(t.clone());
            let t2 = (&t - Rational::ratio(dt, 4)).max(s2.clone());
            if let (Ok(a), Ok(b)) = (bc.rank(&s, &t), bc.rank(&s2, &t2)) {
                prop_assert!(a <= b);
            }
        }

        #[test]
        fn scaling_covariance(bc in arb_barcode(1), a in 1i64..5, s in 1i64..60, t in 0i64..60) {
            let a = Rational::ratio(a * 7 + 3, 7);
            let scaled = scale_barcode(&bc, &a).unwrap();
            let s = Rational::ratio(s, 3);
            let t = &s + Rational::ratio(t, 3);
            let w = scaled.window_end().finite().unwrap();
            prop_assume!(&t <= w);
            let lhs = scaled.rank(&s, &t);
            let rhs = bc.rank(&(&a * &s), &(&a * &t));
            prop_assert_eq!(lhs.is_ok(), rhs.is_ok());
            if let (Ok(x), Ok(y)) = (lhs, rhs) {
                prop_assert_eq!(x, y);
            }
        }

        #[test]
        fn enlarging_target_never_increases(src in arb_barcode(0), tgt in arb_barcode(0), extra in 1i64..40) {
            let base = implantation_lower_bound(std::slice::from_ref(&src), std::slice::from_ref(&tgt)).unwrap();
            let mut bars = tgt.bars().to_vec();
            let birth = Rational::ratio(extra, 1) + Rational::ratio(1, 5);
            let w = tgt.window_end().clone();
            if w > birth {
                bars.push(Bar { birth, cert_end: w.clone() });
                let bigger = CertifiedBarcode::new(0, w, bars).unwrap();
                let r = implantation_lower_bound(&[src], &[bigger]).unwrap();
                prop_assert!(r.value <= base.value);
            }
        }

        #[test]
        fn extending_source_never_decreases(src in arb_barcode(0), tgt in arb_barcode(0)) {
            let base = implantation_lower_bound(std::slice::from_ref(&src), std::slice::from_ref(&tgt)).unwrap();
            let w = src.window_end().clone();
            let bars = src.bars().iter().map(|b| Bar { birth: b.birth.clone(), cert_end: w.clone() }).collect();
            let longer = CertifiedBarcode::new(0, w, bars).unwrap();
            let r = implantation_lower_bound(&[longer], &[tgt]).unwrap();
            prop_assert!(r.value >= base.value);
        }
    }
}
