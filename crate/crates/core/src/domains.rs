//! Domain descriptors: ellipsoids, truncated ellipsoids, sinkhole families
//! and general radial tubes, with JSON parsing and validation.
//!
//! Descriptors are JSON objects with exactly one top-level key:
//!
//! ```json
//! {"ellipsoid": ["1", "99/70"]}
//! {"truncated": {"a": ["1", "1"], "eps": "1/100", "beta": "299/100"}}
//! {"sinkhole": {"n": 1, "eps": ["1/10", "1/3"], "base": ["2"]}}
//! {"radial_tube": {"base": ["1"], "slopes": ["3", "-1"],
//!                  "intercepts": ["1/100", "1"], "breakpoints": ["99/400"]}}
//! ```
//!
//! All scalars are strings in `p/q` or decimal form.

use std::fmt;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::numeric::Rational;

/// The ellipsoid `E(a_1, ..., a_m)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EllipsoidSpec {
    capacities: Vec<Rational>,
}

impl EllipsoidSpec {
    pub fn new(capacities: Vec<Rational>) -> Result<Self> {
        if capacities.is_empty() {
            return Err(Error::param("ellipsoid", "capacity list is empty"));
        }
        for (i, a) in capacities.iter().enumerate() {
            if !a.is_positive() {
                return Err(Error::param(
                    format!("ellipsoid[{i}]"),
                    format!("capacity {a} is not positive"),
                ));
            }
        }
        Ok(EllipsoidSpec { capacities })
    }

    pub fn capacities(&self) -> &[Rational] {
        &self.capacities
    }

    /// Complex dimension.
    pub fn dim(&self) -> usize {
        self.capacities.len()
    }

    pub fn scaled(&self, s: &Rational) -> Result<Self> {
        EllipsoidSpec::new(self.capacities.iter().map(|a| a * s).collect())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.capacities
                .iter()
                .map(|a| Value::String(a.to_string()))
                .collect(),
        )
    }
}

/// The truncated ellipsoid cut out by `min{a(ε + βu), a(1 − u)}` with `a = a_{n+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TruncatedEllipsoidSpec {
    pub base: EllipsoidSpec,
    pub epsilon: Rational,
    pub beta: Rational,
    pub theorem_strength: bool,
}

impl TruncatedEllipsoidSpec {
    pub fn new(base: EllipsoidSpec, epsilon: Rational, beta: Rational) -> Result<Self> {
        if base.dim() < 2 {
            return Err(Error::param(
                "truncated.a",
                "needs at least two capacities (n >= 1)",
            ));
        }
        if !(epsilon.is_positive() && epsilon < Rational::one()) {
            return Err(Error::param(
                "truncated.eps",
                format!("eps = {epsilon} is not in (0, 1)"),
            ));
        }
        if beta <= Rational::one() {
            return Err(Error::param(
                "truncated.beta",
                format!("beta = {beta} is not > 1"),
            ));
        }
        let theorem_strength = &epsilon * &beta * &beta < Rational::one();
        Ok(TruncatedEllipsoidSpec {
            base,
            epsilon,
            beta,
            theorem_strength,
        })
    }

    /// `n`, so that the base has `n + 1` capacities.
    pub fn n(&self) -> usize {
        self.base.dim() - 1
    }

    /// `a_{n+1}`.
    pub fn top(&self) -> &Rational {
        &self.base.capacities()[self.n()]
    }

    /// `(a_1, ..., a_n)`.
    pub fn lower(&self) -> &[Rational] {
        &self.base.capacities()[..self.n()]
    }

    pub fn to_json(&self) -> Value {
        json!({
            "a": self.base.to_json(),
            "eps": self.epsilon.to_string(),
            "beta": self.beta.to_string(),
        })
    }
}

/// A sinkhole family `W_{H_ε}` over a `2n`-dimensional base with `D` depths.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SinkholeSpec {
    pub n: usize,
    pub depths: Vec<Rational>,
    pub base: Option<EllipsoidSpec>,
}

impl SinkholeSpec {
    pub fn new(n: usize, depths: Vec<Rational>, base: Option<EllipsoidSpec>) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("sinkhole.n", "n must be positive"));
        }
        validate_depths(&depths, "sinkhole.eps")?;
        if let Some(b) = &base {
            if b.dim() != n {
                return Err(Error::param(
                    "sinkhole.base",
                    format!("expected {n} capacities, got {}", b.dim()),
                ));
            }
            for (i, a) in b.capacities().iter().enumerate() {
                if *a <= Rational::one() {
                    return Err(Error::param(
                        format!("sinkhole.base[{i}]"),
                        format!("capacity {a} is not > 1"),
                    ));
                }
            }
        }
        Ok(SinkholeSpec { n, depths, base })
    }

    /// Number of sinkholes `D`.
    pub fn count(&self) -> usize {
        self.depths.len()
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("n".into(), json!(self.n));
        m.insert(
            "eps".into(),
            Value::Array(
                self.depths
                    .iter()
                    .map(|e| Value::String(e.to_string()))
                    .collect(),
            ),
        );
        if let Some(b) = &self.base {
            m.insert("base".into(), b.to_json());
        }
        Value::Object(m)
    }
}

/// Checks `0 < ε_1 <= ... <= ε_D <= 1/2`.
pub fn validate_depths(depths: &[Rational], path: &str) -> Result<()> {
    if depths.is_empty() {
        return Err(Error::param(path, "depth list is empty"));
    }
    let half = Rational::ratio(1, 2);
    for (i, e) in depths.iter().enumerate() {
        if !e.is_positive() || *e > half {
            return Err(Error::param(
                format!("{path}[{i}]"),
                format!("depth {e} is not in (0, 1/2]"),
            ));
        }
        if i > 0 && depths[i - 1] > *e {
            return Err(Error::param(
                format!("{path}[{i}]"),
                "depths are not ascending",
            ));
        }
    }
    Ok(())
}

/// One affine piece `h(u) = slope·u + intercept` of a radial profile.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Segment {
    pub slope: Rational,
    pub intercept: Rational,
}

/// A concave piecewise-linear `h: [0,1] → [0,∞)` with `h(1) = 0`.
///
/// On each piece the tangent intercept `τ = h − u·h'` equals the piece's
/// intercept, which must be positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RadialProfile {
    segments: Vec<Segment>,
    breakpoints: Vec<Rational>,
}

impl RadialProfile {
    pub fn new(segments: Vec<Segment>, breakpoints: Vec<Rational>) -> Result<Self> {
        let path = "radial_tube";
        if segments.is_empty() {
            return Err(Error::param(format!("{path}.slopes"), "no segments"));
        }
        if breakpoints.len() + 1 != segments.len() {
            return Err(Error::param(
                format!("{path}.breakpoints"),
                format!(
                    "{} segments need {} breakpoints",
                    segments.len(),
                    segments.len() - 1
                ),
            ));
        }
        for (i, u) in breakpoints.iter().enumerate() {
            if !u.is_positive() || *u >= Rational::one() {
                return Err(Error::param(
                    format!("{path}.breakpoints[{i}]"),
                    "breakpoint not in (0, 1)",
                ));
            }
            if i > 0 && breakpoints[i - 1] >= *u {
                return Err(Error::param(
                    format!("{path}.breakpoints[{i}]"),
                    "breakpoints not ascending",
                ));
            }
        }
        for (i, s) in segments.iter().enumerate() {
            if !s.intercept.is_positive() {
                return Err(Error::param(
                    format!("{path}.intercepts[{i}]"),
                    format!("tangent intercept {} is not positive", s.intercept),
                ));
            }
            if i > 0 {
                let prev = &segments[i - 1];
                if prev.slope <= s.slope {
                    return Err(Error::param(
                        format!("{path}.slopes[{i}]"),
                        "slopes not strictly decreasing",
                    ));
                }
                let u = &breakpoints[i - 1];
                if &prev.slope * u + &prev.intercept != &s.slope * u + &s.intercept {
                    return Err(Error::param(
                        format!("{path}.breakpoints[{}]", i - 1),
                        "profile is discontinuous",
                    ));
                }
            }
        }
        let last = segments.last().expect("nonempty");
        if !(&last.slope + &last.intercept).is_zero() {
            return Err(Error::param(
                format!("{path}.intercepts"),
                "profile does not vanish at u = 1",
            ));
        }
        Ok(RadialProfile {
            segments,
            breakpoints,
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    /// `h(u)` for `u` in `[0, 1]`.
    pub fn eval(&self, u: &Rational) -> Rational {
        let i = self.breakpoints.iter().take_while(|b| *b < u).count();
        let s = &self.segments[i];
        &s.slope * u + &s.intercept
    }

    /// Tangent intercepts per segment, left to right.
    pub fn taus(&self) -> Vec<Rational> {
        self.segments.iter().map(|s| s.intercept.clone()).collect()
    }
}

/// A radial tube `{π|z|² ≤ h(u(w))}` over the ellipsoid `base`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RadialTubeSpec {
    pub base: EllipsoidSpec,
    pub profile: RadialProfile,
}

impl RadialTubeSpec {
    pub fn to_json(&self) -> Value {
        let strs = |v: Vec<&Rational>| {
            Value::Array(
                v.into_iter()
                    .map(|q| Value::String(q.to_string()))
                    .collect(),
            )
        };
        json!({
            "base": self.base.to_json(),
            "slopes": strs(self.profile.segments.iter().map(|s| &s.slope).collect()),
            "intercepts": strs(self.profile.segments.iter().map(|s| &s.intercept).collect()),
            "breakpoints": strs(self.profile.breakpoints.iter().collect()),
        })
    }
}

/// The profile of a truncated ellipsoid: slopes `(βa, −a)`, intercepts
/// `(εa, a)` and the single breakpoint `(1 − ε)/(1 + β)`.
pub fn trunc_profile(spec: &TruncatedEllipsoidSpec) -> RadialProfile {
    let a = spec.top();
    let one = Rational::one();
    let u = (&one - &spec.epsilon) / (&one + &spec.beta);
    RadialProfile::new(
        vec![
            Segment {
                slope: &spec.beta * a,
                intercept: &spec.epsilon * a,
            },
            Segment {
                slope: -a,
                intercept: a.clone(),
            },
        ],
        vec![u],
    )
    .expect("a valid truncated spec yields a valid profile")
}

/// Tagged domain descriptor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum DomainSpec {
    Ellipsoid(EllipsoidSpec),
    Truncated(TruncatedEllipsoidSpec),
    Sinkhole(SinkholeSpec),
    RadialTube(RadialTubeSpec),
}

impl DomainSpec {
    /// Canonical JSON form; parsing it back gives the same spec.
    pub fn to_json(&self) -> Value {
        match self {
            DomainSpec::Ellipsoid(e) => json!({ "ellipsoid": e.to_json() }),
            DomainSpec::Truncated(t) => json!({ "truncated": t.to_json() }),
            DomainSpec::Sinkhole(s) => json!({ "sinkhole": s.to_json() }),
            DomainSpec::RadialTube(r) => json!({ "radial_tube": r.to_json() }),
        }
    }

    /// Short identifier used in certificates.
    pub fn id(&self) -> String {
        self.to_string()
    }
}

fn join(v: &[Rational]) -> String {
    v.iter()
        .map(|q| q.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainSpec::Ellipsoid(e) => write!(f, "E({})", join(e.capacities())),
            DomainSpec::Truncated(t) => write!(
                f,
                "Trunc(a={};eps={};beta={})",
                join(t.base.capacities()),
                t.epsilon,
                t.beta
            ),
            DomainSpec::Sinkhole(s) => write!(f, "Sink(n={};eps={})", s.n, join(&s.depths)),
            DomainSpec::RadialTube(r) => {
                let slopes: Vec<Rational> =
                    r.profile.segments.iter().map(|s| s.slope.clone()).collect();
                let ints: Vec<Rational> = r
                    .profile
                    .segments
                    .iter()
                    .map(|s| s.intercept.clone())
                    .collect();
                write!(
                    f,
                    "Tube(base={};slopes={};intercepts={};breaks={})",
                    join(r.base.capacities()),
                    join(&slopes),
                    join(&ints),
                    join(&r.profile.breakpoints)
                )
            }
        }
    }
}

fn scalar(v: &Value, path: &str) -> Result<Rational> {
    match v {
        Value::String(s) => s
            .parse()
            .map_err(|e: Error| Error::param(path, e.to_string())),
        _ => Err(Error::param(path, "scalars must be strings")),
    }
}

fn scalar_list(v: &Value, path: &str) -> Result<Vec<Rational>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::param(path, "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| scalar(x, &format!("{path}[{i}]")))
        .collect()
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::param(format!("{path}.{key}"), "missing field"))
}

fn object<'a>(v: &'a Value, path: &str, allowed: &[&str]) -> Result<&'a Map<String, Value>> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::param(path, "expected an object"))?;
    for k in obj.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::param(format!("{path}.{k}"), "unknown field"));
        }
    }
    Ok(obj)
}

fn ellipsoid_at(v: &Value, path: &str) -> Result<EllipsoidSpec> {
    let caps = scalar_list(v, path)?;
    EllipsoidSpec::new(caps).map_err(|e| match e {
        Error::InvalidParameter { path: p, reason } => {
            Error::param(p.replacen("ellipsoid", path, 1), reason)
        }
        other => other,
    })
}

/// Parses and validates a domain descriptor given as JSON text.
pub fn parse_domain(text: &str) -> Result<DomainSpec> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("domain descriptor: {e}")))?;
    domain_from_value(&v)
}

/// Validates an already-parsed JSON descriptor.
pub fn domain_from_value(v: &Value) -> Result<DomainSpec> {
    let top = v
        .as_object()
        .ok_or_else(|| Error::param("$", "descriptor must be an object"))?;
    if top.len() != 1 {
        return Err(Error::param(
            "$",
            "descriptor needs exactly one top-level key",
        ));
    }
    let (key, body) = top.iter().next().expect("one key");
    match key.as_str() {
        "ellipsoid" => Ok(DomainSpec::Ellipsoid(ellipsoid_at(body, "ellipsoid")?)),
        "truncated" => {
            let obj = object(body, "truncated", &["a", "eps", "beta"])?;
            let base = ellipsoid_at(field(obj, "a", "truncated")?, "truncated.a")?;
            let eps = scalar(field(obj, "eps", "truncated")?, "truncated.eps")?;
            let beta = scalar(field(obj, "beta", "truncated")?, "truncated.beta")?;
            Ok(DomainSpec::Truncated(TruncatedEllipsoidSpec::new(
                base, eps, beta,
            )?))
        }
        "sinkhole" => {
            let obj = object(body, "sinkhole", &["n", "eps", "base"])?;
            let n = field(obj, "n", "sinkhole")?
                .as_u64()
                .ok_or_else(|| Error::param("sinkhole.n", "expected a positive integer"))?;
            let depths = scalar_list(field(obj, "eps", "sinkhole")?, "sinkhole.eps")?;
            let base = match obj.get("base") {
                Some(b) => Some(ellipsoid_at(b, "sinkhole.base")?),
                None => None,
            };
            Ok(DomainSpec::Sinkhole(SinkholeSpec::new(
                n as usize, depths, base,
            )?))
        }
        "radial_tube" => {
            let obj = object(
                body,
                "radial_tube",
                &["base", "slopes", "intercepts", "breakpoints"],
            )?;
            let base = ellipsoid_at(field(obj, "base", "radial_tube")?, "radial_tube.base")?;
            let slopes = scalar_list(field(obj, "slopes", "radial_tube")?, "radial_tube.slopes")?;
            let intercepts = scalar_list(
                field(obj, "intercepts", "radial_tube")?,
                "radial_tube.intercepts",
            )?;
            let breakpoints = match obj.get("breakpoints") {
                Some(b) => scalar_list(b, "radial_tube.breakpoints")?,
                None => Vec::new(),
            };
            if slopes.len() != intercepts.len() {
                return Err(Error::param(
                    "radial_tube.intercepts",
                    "length differs from slopes",
                ));
            }
            let segments = slopes
                .into_iter()
                .zip(intercepts)
                .map(|(slope, intercept)| Segment { slope, intercept })
                .collect();
            let profile = RadialProfile::new(segments, breakpoints)?;
            Ok(DomainSpec::RadialTube(RadialTubeSpec { base, profile }))
        }
        other => Err(Error::param(format!("$.{other}"), "unknown domain kind")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn parse_examples() {
        let e = parse_domain(r#"{"ellipsoid": ["1", "99/70"]}"#).unwrap();
        assert_eq!(
            e,
            DomainSpec::Ellipsoid(EllipsoidSpec::new(vec![q("1"), q("99/70")]).unwrap())
        );

        let t =
            parse_domain(r#"{"truncated": {"a": ["1","1"], "eps": "1/100", "beta": "299/100"}}"#)
                .unwrap();
        match t {
            DomainSpec::Truncated(t) => {
                assert!(t.theorem_strength);
                assert_eq!(&t.epsilon * &t.beta * &t.beta, q("89401/1000000"));
            }
            _ => panic!("wrong kind"),
        }

        let err = parse_domain(r#"{"sinkhole": {"n":1, "eps": ["1/2","1/10"]}}"#).unwrap_err();
        assert!(
            matches!(err, Error::InvalidParameter { ref path, .. } if path == "sinkhole.eps[1]"),
            "{err}"
        );
    }

    #[test]
    fn parse_rejects_bad_input() {
        let cases = [
            (r#"{"ellipsoid": []}"#, "ellipsoid"),
            (r#"{"ellipsoid": ["1", "-2"]}"#, "ellipsoid[1]"),
            (r#"{"ellipsoid": [1, 2]}"#, "ellipsoid[0]"),
            (
                r#"{"truncated": {"a": ["1","1"], "eps": "1", "beta": "3"}}"#,
                "truncated.eps",
            ),
            (
                r#"{"truncated": {"a": ["1","1"], "eps": "1/10", "beta": "1"}}"#,
                "truncated.beta",
            ),
            (
                r#"{"truncated": {"a": ["1"], "eps": "1/10", "beta": "3"}}"#,
                "truncated.a",
            ),
            (
                r#"{"truncated": {"a": ["1","1"], "beta": "3"}}"#,
                "truncated.eps",
            ),
            (
                r#"{"sinkhole": {"n":1, "eps": ["3/5"]}}"#,
                "sinkhole.eps[0]",
            ),
            (
                r#"{"sinkhole": {"n":1, "eps": ["1/5"], "base": ["1"]}}"#,
                "sinkhole.base[0]",
            ),
            (r#"{"torus": []}"#, "$.torus"),
        ];
        for (text, want) in cases {
            match parse_domain(text) {
                Err(Error::InvalidParameter { path, .. }) => assert_eq!(path, want, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(parse_domain("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn trunc_profile_examples() {
        let spec = TruncatedEllipsoidSpec::new(
            EllipsoidSpec::new(vec![q("1"), q("1")]).unwrap(),
            q("1/100"),
            q("3"),
        )
        .unwrap();
        let p = trunc_profile(&spec);
        assert_eq!(p.breakpoints(), &[q("99/400")]);
        assert_eq!(p.taus(), vec![q("1/100"), q("1")]);

        let spec = TruncatedEllipsoidSpec::new(
            EllipsoidSpec::new(vec![q("1"), q("1"), q("1/2")]).unwrap(),
            q("1/10"),
            q("2"),
        )
        .unwrap();
        let p = trunc_profile(&spec);
        assert_eq!(p.segments()[0].slope, q("1"));
        assert_eq!(p.segments()[1].slope, q("-1/2"));
        assert_eq!(p.breakpoints(), &[q("3/10")]);
    }

    #[test]
    fn radial_tube_parse_and_validate() {
        let text = r#"{"radial_tube": {"base": ["1"], "slopes": ["3","-1"], "intercepts": ["1/100","1"], "breakpoints": ["99/400"]}}"#;
        let d = parse_domain(text).unwrap();
        assert_eq!(domain_from_value(&d.to_json()).unwrap(), d);
        let discontinuous = r#"{"radial_tube": {"base": ["1"], "slopes": ["3","-1"], "intercepts": ["1/100","1"], "breakpoints": ["1/4"]}}"#;
        assert!(parse_domain(discontinuous).is_err());
        let convex = r#"{"radial_tube": {"base": ["1"], "slopes": ["-2","-1"], "intercepts": ["2","1"], "breakpoints": ["1/2"]}}"#;
        assert!(parse_domain(convex).is_err());
    }

    fn arb_pos() -> impl Strategy<Value = Rational> {
        (1i64..500, 1i64..100).prop_map(|(p, q)| Rational::ratio(p, q))
    }

    proptest! {
        #[test]
        fn trunc_profile_always_valid(caps in proptest::collection::vec(arb_pos(), 2..5), e in 1i64..999, b in (101i64..2000)) {
            let spec = TruncatedEllipsoidSpec::new(
                EllipsoidSpec::new(caps).unwrap(), Rational::ratio(e, 1000), Rational::ratio(b, 100)).unwrap();
            let p = trunc_profile(&spec);
            prop_assert!(p.taus().iter().all(|t| t.is_positive()));
            prop_assert!(p.eval(&Rational::one()).is_zero());
            prop_assert_eq!(p.eval(&Rational::zero()), &spec.epsilon * spec.top());
        }

        #[test]
        fn canonical_round_trip(caps in proptest::collection::vec(arb_pos(), 2..5), e in 1i64..999, b in (101i64..2000)) {
            let d = DomainSpec::Truncated(TruncatedEllipsoidSpec::new(
                EllipsoidSpec::new(caps).unwrap(), Rational::ratio(e, 1000), Rational::ratio(b, 100)).unwrap());
            let text = d.to_json().to_string();
            let back = parse_domain(&text).unwrap();
            prop_assert_eq!(back.to_json().to_string(), text);
            prop_assert_eq!(back, d);
        }
    }
}
