//! Distance-bound certificates for `d_c`, `δ_f` and `d_f`.
//!
//! A [`BoundCertificate`] states one inequality between two domains and
//! carries the rule that produced it, the rule's inputs and a SHA-256 digest
//! of the whole statement. [`replay`] recomputes the statement from the
//! inputs alone.
//!
//! Direction conventions: `δ_f(U, V)` is recorded with `from_domain = U`
//! and `to_domain = V`. A lower bound on `δ_f(U, V)` comes from an
//! obstruction to implanting the persistence module of `V` into that of `U`,
//! so `V` supplies the source barcode and `U` the target.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::diophantine::{certify_beta, dirichlet_tuple, DirichletWitness};
use crate::domains::{
    domain_from_value, validate_depths, DomainSpec, EllipsoidSpec, SinkholeSpec,
    TruncatedEllipsoidSpec,
};
use crate::error::{Error, Result};
use crate::numeric::{exp_bracket, ExtRational, Rational};
use crate::persistence::{
    barcode_from_orbits, ellipsoid_certified_empty, implantation_lower_bound, max_window,
    CertifiedBarcode, ImplantationBound,
};
use crate::reeb::{
    cz_center_axis, k_beta, sinkhole_spectrum, strong_t_bound_closed_form,
    trunc_nontrivial_period_infimum, trunc_orbits, PeriodInfimum, StrongTBound,
};

/// Identifier standing for every ellipsoid of the relevant dimension.
pub const ANY_ELLIPSOID: &str = "E(*)";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "d_c")]
    Dc,
    #[serde(rename = "delta_f")]
    DeltaF,
    #[serde(rename = "d_f")]
    Df,
}

impl Quantity {
    /// `d_c` and `d_f` do not depend on the order of the two domains.
    pub fn is_symmetric(self) -> bool {
        !matches!(self, Quantity::DeltaF)
    }

    // d_c <= δ_f (either order) <= d_f
    fn level(self) -> u8 {
        match self {
            Quantity::Dc => 0,
            Quantity::DeltaF => 1,
            Quantity::Df => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// `δ_f(truncated, ellipsoid) <= ((1+β)/β)²`.
    Coarsecvg,
    /// `d_f` of two sinkhole domains from nested inclusions.
    Uppersink,
    /// `δ_f` of two sinkhole domains from the rank obstruction.
    Quasicor,
    /// `δ_f(ellipsoid, truncated)` through the persistence engine.
    DelluPipeline,
    /// The two `δ_f` lower bounds between `V_3` and `V_4`.
    V34,
    /// Multiplicative triangle inequality.
    Triangle,
    /// `d_c <= δ_f <= d_f` and symmetry of `d_c`, `d_f`.
    Easyineq,
    /// Supplied by hand; replay checks only the digest.
    ManualInclusion,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub rule: Rule,
    pub inputs: Value,
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub quantity: Quantity,
    pub direction: Direction,
    pub from_domain: String,
    pub to_domain: String,
    pub value: Rational,
    pub attained: bool,
    pub provenance: Provenance,
}

#[allow(clippy::too_many_arguments)]
fn statement_digest(
    quantity: Quantity,
    direction: Direction,
    from: &str,
    to: &str,
    value: &Rational,
    attained: bool,
    rule: Rule,
    inputs: &Value,
) -> String {
    let body = json!({
        "quantity": quantity,
        "direction": direction,
        "from_domain": from,
        "to_domain": to,
        "value": value,
        "attained": attained,
        "rule": rule,
        "inputs": inputs,
    });
    hex::encode(Sha256::digest(body.to_string().as_bytes()))
}

#[allow(clippy::too_many_arguments)]
fn issue(
    quantity: Quantity,
    direction: Direction,
    from: String,
    to: String,
    value: Rational,
    attained: bool,
    rule: Rule,
    inputs: Value,
) -> Result<BoundCertificate> {
    if value < Rational::one() {
        return Err(Error::EngineMismatch(format!(
            "certificate value {value} is below 1"
        )));
    }
    let digest = statement_digest(
        quantity, direction, &from, &to, &value, attained, rule, &inputs,
    );
    Ok(BoundCertificate {
        quantity,
        direction,
        from_domain: from,
        to_domain: to,
        value,
        attained,
        provenance: Provenance {
            rule,
            inputs,
            digest,
        },
    })
}

impl BoundCertificate {
    /// Whether the stored digest matches the statement and inputs.
    pub fn digest_ok(&self) -> bool {
        let d = statement_digest(
            self.quantity,
            self.direction,
            &self.from_domain,
            &self.to_domain,
            &self.value,
            self.attained,
            self.provenance.rule,
            &self.provenance.inputs,
        );
        d == self.provenance.digest
    }

    /// Same inequality, ignoring provenance.
    pub fn same_statement(&self, other: &BoundCertificate) -> bool {
        self.quantity == other.quantity
            && self.direction == other.direction
            && self.from_domain == other.from_domain
            && self.to_domain == other.to_domain
            && self.value == other.value
            && self.attained == other.attained
    }

    fn covers_pair(&self, other: &BoundCertificate) -> bool {
        let ordered = self.from_domain == other.from_domain && self.to_domain == other.to_domain;
        let swapped = self.from_domain == other.to_domain && self.to_domain == other.from_domain;
        if self.quantity.is_symmetric() || other.quantity.is_symmetric() {
            ordered || swapped
        } else {
            ordered
        }
    }
}

/// `((1+β)/β)²`.
pub fn coarse_upper_value(beta: &Rational) -> Rational {
    ((Rational::one() + beta) / beta).pow(2)
}

fn coarse_cert(beta: &Rational, from: String, to: String) -> Result<BoundCertificate> {
    if !beta.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "beta = {beta} must be positive"
        )));
    }
    let inputs = json!({ "beta": beta, "from_domain": from, "to_domain": to });
    issue(
        Quantity::DeltaF,
        Direction::Upper,
        from,
        to,
        coarse_upper_value(beta),
        false,
        Rule::Coarsecvg,
        inputs,
    )
}

/// Upper bound on `δ_f` from any truncated ellipsoid with parameter `β` to
/// its ambient ellipsoid `Ê`; it does not depend on `ε`.
pub fn upper_trunc_vs_ellipsoid(beta: &Rational) -> Result<BoundCertificate> {
    coarse_cert(beta, format!("Trunc(beta={beta})"), "Ehat".into())
}

/// [`upper_trunc_vs_ellipsoid`] with both domains named in full.
pub fn upper_trunc_vs_ellipsoid_for(spec: &TruncatedEllipsoidSpec) -> Result<BoundCertificate> {
    coarse_cert(
        &spec.beta,
        DomainSpec::Truncated(spec.clone()).id(),
        DomainSpec::Ellipsoid(spec.base.clone()).id(),
    )
}

fn finite(v: &ExtRational, what: &str) -> Result<Rational> {
    v.finite()
        .cloned()
        .ok_or_else(|| Error::HypothesisViolated(format!("{what}: obstruction is unbounded")))
}

/// Everything computed on the way to [`lower_trunc_vs_all_ellipsoids`].
#[derive(Clone, Debug, Serialize)]
pub struct DelluReport {
    pub certificate: BoundCertificate,
    pub grading: i64,
    pub period_infimum: PeriodInfimum,
    pub barcode: CertifiedBarcode,
    pub implantation: ImplantationBound,
    pub closed_form: StrongTBound,
    /// Rational lower bound on `C β^e / a_{n+1}`.
    pub closed_form_lower: Rational,
}

/// Runs the ellipsoid-versus-truncation pipeline and cross-checks it
/// against the closed-form period bound.
pub fn dellu_report(
    spec: &TruncatedEllipsoidSpec,
    witness: &DirichletWitness,
) -> Result<DelluReport> {
    certify_beta(&spec.base, &spec.beta, witness)?;
    if !spec.theorem_strength {
        return Err(Error::HypothesisViolated(format!(
            "eps * beta^2 = {} is not below 1",
            &spec.epsilon * spec.beta.pow(2)
        )));
    }
    let kb = k_beta(spec)?;
    let pstar = trunc_nontrivial_period_infimum(spec);
    let min_a = spec.lower().iter().min().expect("n >= 1").clone();
    let cap = pstar.value.clone().min(min_a);
    // Corner families only carry bounds >= P*, so N = 1 suffices to list them.
    let orbits = trunc_orbits(spec, &cap, 1)?;
    let window = max_window(&orbits, kb.grading, &ExtRational::Finite(cap));
    let barcode = barcode_from_orbits(&orbits, kb.grading, &window)?;
    let target = ellipsoid_certified_empty(spec.base.dim(), kb.grading)?;
    let implantation = implantation_lower_bound(std::slice::from_ref(&barcode), &[target])?;
    let value = finite(&implantation.value, "truncated ellipsoid")?;

    let closed_form = strong_t_bound_closed_form(spec, Some(witness))?;
    if !closed_form.holds_for(&pstar.value, &spec.beta, &spec.epsilon)? {
        return Err(Error::EngineMismatch(format!(
            "P* = {} is below the closed-form bound",
            pstar.value
        )));
    }
    let closed_form_lower =
        closed_form.value_lower(&spec.beta, &Rational::ratio(1, 1 << 20))? / spec.top();
    if value < closed_form_lower {
        return Err(Error::EngineMismatch(format!(
            "pipeline value {value} is below the closed-form value {closed_form_lower}"
        )));
    }
    let to = DomainSpec::Truncated(spec.clone());
    let inputs = json!({ "domain": to.to_json(), "witness": witness });
    let certificate = issue(
        Quantity::DeltaF,
        Direction::Lower,
        ANY_ELLIPSOID.into(),
        to.id(),
        value,
        implantation.attained,
        Rule::DelluPipeline,
        inputs,
    )?;
    Ok(DelluReport {
        certificate,
        grading: kb.grading,
        period_infimum: pstar,
        barcode,
        implantation,
        closed_form,
        closed_form_lower,
    })
}

/// Lower bound on `δ_f(V, truncated)` valid for every ellipsoid `V`.
pub fn lower_trunc_vs_all_ellipsoids(
    spec: &TruncatedEllipsoidSpec,
    witness: &DirichletWitness,
) -> Result<BoundCertificate> {
    dellu_report(spec, witness).map(|r| r.certificate)
}

fn sink_id(depths: &[Rational]) -> String {
    let list: Vec<String> = depths.iter().map(|d| d.to_string()).collect();
    format!("Sink(eps={})", list.join(","))
}

fn check_pair(eps: &[Rational], zeta: &[Rational]) -> Result<()> {
    validate_depths(eps, "eps")?;
    validate_depths(zeta, "zeta")?;
    if eps.len() != zeta.len() {
        return Err(Error::InvalidArgument(format!(
            "depth lists have different lengths {} and {}",
            eps.len(),
            zeta.len()
        )));
    }
    Ok(())
}

/// Upper bound `(max_m max{ε_m/ζ_m, ζ_m/ε_m})²` on `d_f` of two sinkhole domains.
pub fn upper_sinkhole_pair(eps: &[Rational], zeta: &[Rational]) -> Result<BoundCertificate> {
    check_pair(eps, zeta)?;
    let ratio = eps
        .iter()
        .zip(zeta)
        .map(|(e, z)| (e / z).max(z / e))
        .max()
        .expect("nonempty");
    let inputs = json!({ "eps": eps, "zeta": zeta });
    issue(
        Quantity::Df,
        Direction::Upper,
        sink_id(eps),
        sink_id(zeta),
        ratio.pow(2),
        false,
        Rule::Uppersink,
        inputs,
    )
}

/// `max(1, max_m min{1/ε_m, (ζ_m/ε_m)²})`.
pub fn sinkhole_lower_closed_form(eps: &[Rational], zeta: &[Rational]) -> Rational {
    eps.iter()
        .zip(zeta)
        .map(|(e, z)| e.recip().expect("positive").min((z / e).pow(2)))
        .fold(Rational::one(), Rational::max)
}

/// Complex dimension of the base used by the sinkhole pipeline; the
/// resulting bounds do not depend on it.
pub const SINKHOLE_PIPELINE_N: usize = 1;

/// Barcode in degree `2 − 3n` of a sinkhole domain, certified for every
/// filtration level below 1.
pub fn sinkhole_barcode(n: usize, depths: &[Rational]) -> Result<CertifiedBarcode> {
    let spec = SinkholeSpec::new(n, depths.to_vec(), None)?;
    let one = Rational::one();
    let mut top = Rational::ratio(1, 2);
    for e in depths {
        let last = Rational::from_integer(e.recip()?.ceil()) - &one;
        top = top.max(last * e);
    }
    // No period lies in (b, 1), so the spectrum below b is the spectrum below 1.
    let b = top.midpoint(&one);
    let orbits = sinkhole_spectrum(&spec, &b)?;
    barcode_from_orbits(&orbits, 2 - 3 * n as i64, &ExtRational::Finite(one))
}

#[derive(Clone, Debug, Serialize)]
pub struct SinkholeLower {
    pub certificate: BoundCertificate,
    pub closed_form: Rational,
    pub pipeline: ImplantationBound,
}

/// Lower bound on `δ_f(W_ζ, W_ε)`, computed in closed form and through the
/// persistence engine; the two must agree exactly.
pub fn lower_sinkhole_report(eps: &[Rational], zeta: &[Rational]) -> Result<SinkholeLower> {
    check_pair(eps, zeta)?;
    let closed_form = sinkhole_lower_closed_form(eps, zeta);
    let src = sinkhole_barcode(SINKHOLE_PIPELINE_N, eps)?;
    let tgt = sinkhole_barcode(SINKHOLE_PIPELINE_N, zeta)?;
    let pipeline = implantation_lower_bound(&[src], &[tgt])?;
    if pipeline.value != ExtRational::Finite(closed_form.clone()) {
        return Err(Error::EngineMismatch(format!(
            "sinkhole pipeline gives {} but the closed form gives {closed_form}",
            pipeline.value
        )));
    }
    let inputs = json!({ "eps": eps, "zeta": zeta });
    let certificate = issue(
        Quantity::DeltaF,
        Direction::Lower,
        sink_id(zeta),
        sink_id(eps),
        closed_form.clone(),
        pipeline.attained,
        Rule::Quasicor,
        inputs,
    )?;
    Ok(SinkholeLower {
        certificate,
        closed_form,
        pipeline,
    })
}

pub fn lower_sinkhole_pair(eps: &[Rational], zeta: &[Rational]) -> Result<BoundCertificate> {
    lower_sinkhole_report(eps, zeta).map(|r| r.certificate)
}

/// One value of the map `x ↦ ½e^{−x}` with a certified bound on
/// `|log value − log(½e^{−x})|`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurrogateEntry {
    pub x: Rational,
    pub value: Rational,
    pub log_err: Rational,
}

/// Rational stand-in for `½e^{−x}`: table entries first, then a certified
/// series evaluation at the given accuracy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HalfExpSurrogate {
    table: Vec<SurrogateEntry>,
    accuracy: Rational,
}

impl Default for HalfExpSurrogate {
    fn default() -> Self {
        HalfExpSurrogate {
            table: Vec::new(),
            accuracy: Rational::ratio(1, 1_000_000),
        }
    }
}

impl HalfExpSurrogate {
    pub fn new(table: Vec<SurrogateEntry>, accuracy: Rational) -> Result<Self> {
        if !accuracy.is_positive() {
            return Err(Error::param("surrogate.accuracy", "must be positive"));
        }
        for (i, e) in table.iter().enumerate() {
            if !e.value.is_positive() {
                return Err(Error::param(
                    format!("surrogate[{i}].value"),
                    "must be positive",
                ));
            }
            if e.log_err.is_negative() {
                return Err(Error::param(
                    format!("surrogate[{i}].log_err"),
                    "must be nonnegative",
                ));
            }
        }
        Ok(HalfExpSurrogate { table, accuracy })
    }

    pub fn eval(&self, x: &Rational) -> Result<SurrogateEntry> {
        if let Some(e) = self.table.iter().find(|e| e.x == *x) {
            return Ok(e.clone());
        }
        let (lo, hi) = exp_bracket(&-x, &(&self.accuracy / Rational::from(4i64)))?;
        let two = Rational::from(2i64);
        if lo == hi {
            return Ok(SurrogateEntry {
                x: x.clone(),
                value: lo / two,
                log_err: Rational::zero(),
            });
        }
        let rho = (&hi - &lo) / (&two * &lo);
        let log_err = &rho / (Rational::one() - &rho);
        Ok(SurrogateEntry {
            x: x.clone(),
            value: (lo + hi) / Rational::from(4i64),
            log_err,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiembedReport {
    pub x: Vec<Rational>,
    pub y: Vec<Rational>,
    pub eps_x: Vec<Rational>,
    pub eps_y: Vec<Rational>,
    pub sup_norm: Rational,
    /// Allowed error in `log` of either bound due to the surrogate.
    pub slack: Rational,
    pub lower: Rational,
    pub upper: Rational,
    pub lower_le_upper: bool,
    /// `lower >= e^{‖x−y‖ − slack}`.
    pub sandwich_lower: bool,
    /// `upper <= e^{2‖x−y‖ + slack}`.
    pub sandwich_upper: bool,
    pub certificates: Vec<BoundCertificate>,
}

fn check_simplex_point(x: &[Rational], path: &str) -> Result<()> {
    if x.is_empty() {
        return Err(Error::param(path, "point is empty"));
    }
    for (i, v) in x.iter().enumerate() {
        if v.is_negative() {
            return Err(Error::param(
                format!("{path}[{i}]"),
                format!("{v} is negative"),
            ));
        }
        if i > 0 && x[i - 1] < *v {
            return Err(Error::param(
                format!("{path}[{i}]"),
                "coordinates are not descending",
            ));
        }
    }
    Ok(())
}

/// Checks `‖x−y‖ <= log d_f <= 2‖x−y‖` for the sinkhole domains of two
/// points of `{x_1 >= ... >= x_D >= 0}`, up to the surrogate's slack.
pub fn quasiembed_verify(
    x: &[Rational],
    y: &[Rational],
    surrogate: &HalfExpSurrogate,
) -> Result<QuasiembedReport> {
    check_simplex_point(x, "x")?;
    check_simplex_point(y, "y")?;
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "points have dimensions {} and {}",
            x.len(),
            y.len()
        )));
    }
    let map = |p: &[Rational]| -> Result<(Vec<Rational>, Rational)> {
        let mut depths = Vec::with_capacity(p.len());
        let mut err = Rational::zero();
        for v in p {
            let e = surrogate.eval(v)?;
            err = err.max(e.log_err);
            depths.push(e.value);
        }
        Ok((depths, err))
    };
    let (eps_x, err_x) = map(x)?;
    let (eps_y, err_y) = map(y)?;
    validate_depths(&eps_x, "eps(x)")?;
    validate_depths(&eps_y, "eps(y)")?;

    let a = lower_sinkhole_pair(&eps_x, &eps_y)?;
    let b = lower_sinkhole_pair(&eps_y, &eps_x)?;
    let u = upper_sinkhole_pair(&eps_x, &eps_y)?;
    let lower = a.value.clone().max(b.value.clone());
    let upper = u.value.clone();
    let sup_norm = x
        .iter()
        .zip(y)
        .map(|(p, q)| (p - q).abs())
        .max()
        .expect("nonempty");
    let slack = Rational::from(2i64) * (err_x + err_y);
    let res = Rational::ratio(1, 1 << 62);
    let (_, hi) = exp_bracket(&(&sup_norm - &slack), &res)?;
    let (lo, _) = exp_bracket(&(Rational::from(2i64) * &sup_norm + &slack), &res)?;
    Ok(QuasiembedReport {
        x: x.to_vec(),
        y: y.to_vec(),
        eps_x,
        eps_y,
        lower_le_upper: lower <= upper,
        sandwich_lower: lower >= hi,
        sandwich_upper: upper <= lo,
        sup_norm,
        slack,
        lower,
        upper,
        certificates: vec![a, b, u],
    })
}

impl QuasiembedReport {
    pub fn to_csv(&self) -> String {
        format!(
            "sup_norm,lower,upper,slack\n{},{},{},{}\n",
            self.sup_norm, self.lower, self.upper, self.slack
        )
    }
}

struct DoubleKnot {
    v3: TruncatedEllipsoidSpec,
    v4: TruncatedEllipsoidSpec,
    window: Rational,
    deg5: i64,
    deg7: i64,
}

fn knot_fail(msg: impl Into<String>) -> Error {
    Error::DoubleKnotHypothesisFailed(msg.into())
}

/// The domains `V_3`, `V_4` over `E(1, ..., 1, 1−ε)` and the exact checks
/// that make degrees `2−5n` and `2−7n` separate them below `1/14`.
fn double_knot(n: u64, eps: &Rational) -> Result<DoubleKnot> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if !eps.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "eps = {eps} must be positive"
        )));
    }
    if *eps >= Rational::ratio(1, 6) {
        return Err(knot_fail(format!("eps = {eps} is not below 1/6")));
    }
    let ni = n as i64;
    let mut caps = vec![Rational::one(); n as usize];
    caps.push(Rational::one() - eps);
    let base = EllipsoidSpec::new(caps)?;
    let v3 = TruncatedEllipsoidSpec::new(base.clone(), eps.clone(), Rational::from(3i64))?;
    let v4 = TruncatedEllipsoidSpec::new(base, eps.clone(), Rational::from(4i64))?;
    let window = Rational::ratio(1, 14);
    let deg5 = 2 - 5 * ni;
    let deg7 = 2 - 7 * ni;

    let cz = |spec: &TruncatedEllipsoidSpec, mult: u64| {
        cz_center_axis(&(&spec.beta * spec.top()), spec.lower(), mult)
            .map_err(|e| knot_fail(e.to_string()))
    };
    for (spec, mult, want) in [(&v3, 1, deg5), (&v3, 2, 4 - 11 * ni), (&v4, 1, deg7)] {
        let got = cz(spec, mult)?;
        if got != want {
            return Err(knot_fail(format!(
                "center-axis index at beta = {}, N = {mult} is {got}, expected {want}",
                spec.beta
            )));
        }
    }
    for spec in [&v3, &v4] {
        let slope = &spec.beta * spec.top();
        if !spec
            .lower()
            .iter()
            .all(|a| &slope / a > Rational::from(2i64))
        {
            return Err(knot_fail(format!(
                "center-axis indices at beta = {} are not strictly decreasing",
                spec.beta
            )));
        }
        let pstar = trunc_nontrivial_period_infimum(spec);
        if pstar.value < window {
            return Err(knot_fail(format!(
                "corner families at beta = {} reach period {} below 1/14",
                spec.beta, pstar.value
            )));
        }
        if spec.lower().iter().any(|a| *a < window) {
            return Err(knot_fail("boundary orbits reach below 1/14"));
        }
    }
    Ok(DoubleKnot {
        v3,
        v4,
        window,
        deg5,
        deg7,
    })
}

fn knot_barcode(
    dk: &DoubleKnot,
    spec: &TruncatedEllipsoidSpec,
    degree: i64,
) -> Result<CertifiedBarcode> {
    let orbits = trunc_orbits(spec, &dk.window, 1).map_err(|e| knot_fail(e.to_string()))?;
    barcode_from_orbits(&orbits, degree, &ExtRational::Finite(dk.window.clone()))
        .map_err(|e| knot_fail(e.to_string()))
}

/// Lower bound `1/(14ε)` on `δ_f(V_from, V_to)` for `from_beta ∈ {3, 4}`,
/// with the engine's own value, which must be at least as large.
fn v34_lower(
    n: u64,
    eps: &Rational,
    from_beta: i64,
) -> Result<(BoundCertificate, ImplantationBound)> {
    let dk = double_knot(n, eps)?;
    let (from, to, degree) = match from_beta {
        3 => (&dk.v3, &dk.v4, dk.deg7),
        4 => (&dk.v4, &dk.v3, dk.deg5),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "from_beta must be 3 or 4, got {from_beta}"
            )))
        }
    };
    let src = knot_barcode(&dk, to, degree)?;
    let tgt = knot_barcode(&dk, from, degree)?;
    let birth = eps * to.top();
    if !src.bars().iter().any(|b| b.birth == birth) {
        return Err(knot_fail(format!(
            "no bar born at {birth} in degree {degree} at beta = {}",
            to.beta
        )));
    }
    if !tgt.bars().is_empty() {
        return Err(knot_fail(format!(
            "degree {degree} is not empty below 1/14 at beta = {}",
            from.beta
        )));
    }
    let pipeline = implantation_lower_bound(&[src], &[tgt])?;
    let claimed = (Rational::from(14i64) * eps).recip()?;
    if pipeline.value < claimed {
        return Err(Error::EngineMismatch(format!(
            "engine gives {} below the claimed 1/(14 eps) = {claimed}",
            pipeline.value
        )));
    }
    let inputs = json!({ "n": n, "eps": eps, "from_beta": from_beta });
    let cert = issue(
        Quantity::DeltaF,
        Direction::Lower,
        DomainSpec::Truncated(from.clone()).id(),
        DomainSpec::Truncated(to.clone()).id(),
        claimed,
        false,
        Rule::V34,
        inputs,
    )?;
    Ok((cert, pipeline))
}

#[derive(Clone, Debug, Serialize)]
pub struct V34Report {
    /// `1/(14ε)`, certified in both directions.
    pub lower: Rational,
    pub upper_dc: Rational,
    /// `d_c < min(δ_f(V_3,V_4), δ_f(V_4,V_3))`.
    pub strict: bool,
    pub n: u64,
    pub eps: Rational,
    /// Gradings `2−5n` and `2−7n`.
    pub degrees: (i64, i64),
    /// Engine values for `δ_f(V_3,V_4)` and `δ_f(V_4,V_3)`.
    pub engine_lower: (ExtRational, ExtRational),
    pub certificates: Vec<BoundCertificate>,
}

pub fn v34_report(n: u64, eps: &Rational) -> Result<V34Report> {
    let dk = double_knot(n, eps)?;
    let (l34, p34) = v34_lower(n, eps, 3)?;
    let (l43, p43) = v34_lower(n, eps, 4)?;
    let u3 = upper_trunc_vs_ellipsoid_for(&dk.v3)?;
    let u4 = upper_trunc_vs_ellipsoid_for(&dk.v4)?;
    let d3 = weaken(&u3, Quantity::Dc)?;
    let d4 = reversed(&weaken(&u4, Quantity::Dc)?)?;
    let dc = compose(&d3, &d4)?;
    let certificates = vec![l34.clone(), l43, u3, u4, d3, d4, dc.clone()];
    let report = consistency_check(&certificates);
    if let Some(v) = report.violations.first() {
        return Err(Error::EngineMismatch(v.detail.clone()));
    }
    let strict = report
        .strictness
        .iter()
        .find(|s| s.dc_upper == dc.value)
        .map(|s| s.strict)
        .unwrap_or(false);
    Ok(V34Report {
        lower: l34.value,
        upper_dc: dc.value,
        strict,
        n,
        eps: eps.clone(),
        degrees: (dk.deg5, dk.deg7),
        engine_lower: (p34.value, p43.value),
        certificates,
    })
}

/// Upper bounds compose multiplicatively along a chain `U → V → W`.
pub fn compose(c1: &BoundCertificate, c2: &BoundCertificate) -> Result<BoundCertificate> {
    if c1.direction != Direction::Upper || c2.direction != Direction::Upper {
        return Err(Error::ChainMismatch("only upper bounds compose".into()));
    }
    if c1.quantity != c2.quantity {
        return Err(Error::ChainMismatch(format!(
            "quantities {:?} and {:?} differ",
            c1.quantity, c2.quantity
        )));
    }
    if c1.to_domain != c2.from_domain {
        return Err(Error::ChainMismatch(format!(
            "{} does not continue into {}",
            c1.to_domain, c2.from_domain
        )));
    }
    let inputs = json!({ "first": c1, "second": c2 });
    issue(
        c1.quantity,
        Direction::Upper,
        c1.from_domain.clone(),
        c2.to_domain.clone(),
        &c1.value * &c2.value,
        false,
        Rule::Triangle,
        inputs,
    )
}

/// Moves a certificate along `d_c <= δ_f <= d_f`: uppers move down, lowers up.
pub fn weaken(c: &BoundCertificate, to: Quantity) -> Result<BoundCertificate> {
    let ok = match c.direction {
        Direction::Upper => to.level() < c.quantity.level(),
        Direction::Lower => to.level() > c.quantity.level(),
    };
    if !ok {
        return Err(Error::InvalidArgument(format!(
            "a {:?} bound on {:?} says nothing about {:?}",
            c.direction, c.quantity, to
        )));
    }
    let inputs = json!({ "op": "weaken", "to": to, "cert": c });
    issue(
        to,
        c.direction,
        c.from_domain.clone(),
        c.to_domain.clone(),
        c.value.clone(),
        c.attained,
        Rule::Easyineq,
        inputs,
    )
}

/// Swaps the two domains of a `d_c` or `d_f` certificate.
pub fn reversed(c: &BoundCertificate) -> Result<BoundCertificate> {
    if !c.quantity.is_symmetric() {
        return Err(Error::InvalidArgument("delta_f is not symmetric".into()));
    }
    let inputs = json!({ "op": "reverse", "cert": c });
    issue(
        c.quantity,
        c.direction,
        c.to_domain.clone(),
        c.from_domain.clone(),
        c.value.clone(),
        c.attained,
        Rule::Easyineq,
        inputs,
    )
}

/// A bound justified outside the engine, e.g. by an explicit inclusion.
pub fn manual_inclusion(
    quantity: Quantity,
    direction: Direction,
    from: &str,
    to: &str,
    value: Rational,
    note: &str,
) -> Result<BoundCertificate> {
    issue(
        quantity,
        direction,
        from.into(),
        to.into(),
        value,
        false,
        Rule::ManualInclusion,
        json!({ "note": note }),
    )
}

fn input<T: serde::de::DeserializeOwned>(inputs: &Value, key: &str) -> Result<T> {
    let v = inputs
        .get(key)
        .ok_or_else(|| Error::param(format!("provenance.inputs.{key}"), "missing"))?;
    serde_json::from_value(v.clone())
        .map_err(|e| Error::param(format!("provenance.inputs.{key}"), e.to_string()))
}

/// Recomputes a certificate from its recorded inputs and checks that the
/// statement matches.
pub fn replay(cert: &BoundCertificate) -> Result<()> {
    if !cert.digest_ok() {
        return Err(Error::EngineMismatch(
            "digest does not match the certificate".into(),
        ));
    }
    let inputs = &cert.provenance.inputs;
    let redone = match cert.provenance.rule {
        Rule::Coarsecvg => {
            let beta: Rational = input(inputs, "beta")?;
            coarse_cert(
                &beta,
                input(inputs, "from_domain")?,
                input(inputs, "to_domain")?,
            )?
        }
        Rule::Uppersink => upper_sinkhole_pair(
            &input::<Vec<Rational>>(inputs, "eps")?,
            &input::<Vec<Rational>>(inputs, "zeta")?,
        )?,
        Rule::Quasicor => lower_sinkhole_pair(
            &input::<Vec<Rational>>(inputs, "eps")?,
            &input::<Vec<Rational>>(inputs, "zeta")?,
        )?,
        Rule::DelluPipeline => {
            let domain: Value = input(inputs, "domain")?;
            let DomainSpec::Truncated(spec) = domain_from_value(&domain)? else {
                return Err(Error::param(
                    "provenance.inputs.domain",
                    "not a truncated ellipsoid",
                ));
            };
            lower_trunc_vs_all_ellipsoids(&spec, &input(inputs, "witness")?)?
        }
        Rule::V34 => {
            v34_lower(
                input(inputs, "n")?,
                &input(inputs, "eps")?,
                input(inputs, "from_beta")?,
            )?
            .0
        }
        Rule::Triangle => {
            let first: BoundCertificate = input(inputs, "first")?;
            let second: BoundCertificate = input(inputs, "second")?;
            replay(&first)?;
            replay(&second)?;
            compose(&first, &second)?
        }
        Rule::Easyineq => {
            let inner: BoundCertificate = input(inputs, "cert")?;
            replay(&inner)?;
            match input::<String>(inputs, "op")?.as_str() {
                "weaken" => weaken(&inner, input(inputs, "to")?)?,
                "reverse" => reversed(&inner)?,
                other => {
                    return Err(Error::param(
                        "provenance.inputs.op",
                        format!("unknown operation {other}"),
                    ))
                }
            }
        }
        Rule::ManualInclusion => return Ok(()),
    };
    if !redone.same_statement(cert) {
        return Err(Error::EngineMismatch(format!(
            "replay gives {:?} {:?} {} for {} -> {}, certificate says {}",
            redone.direction,
            redone.quantity,
            redone.value,
            cert.from_domain,
            cert.to_domain,
            cert.value
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Index of the lower certificate.
    pub lower: usize,
    /// Index of the upper certificate.
    pub upper: usize,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrictnessVerdict {
    pub first: String,
    pub second: String,
    pub dc_upper: Rational,
    pub delta_f_lower_min: Rational,
    /// `d_c < min(δ_f(first, second), δ_f(second, first))`.
    pub strict: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConsistencyReport {
    pub violations: Vec<Violation>,
    pub strictness: Vec<StrictnessVerdict>,
}

/// Flags every lower bound exceeding an upper bound it is comparable with,
/// and reports whether `d_c` is strictly below both `δ_f` on each pair where
/// that can be decided.
pub fn consistency_check(certs: &[BoundCertificate]) -> ConsistencyReport {
    let mut violations = Vec::new();
    for (i, lo) in certs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.direction == Direction::Lower)
    {
        for (j, up) in certs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.direction == Direction::Upper)
        {
            if lo.quantity.level() <= up.quantity.level()
                && lo.covers_pair(up)
                && lo.value > up.value
            {
                violations.push(Violation {
                    lower: i,
                    upper: j,
                    detail: format!(
                        "{:?}({}, {}) >= {} contradicts {:?}({}, {}) <= {}",
                        lo.quantity,
                        lo.from_domain,
                        lo.to_domain,
                        lo.value,
                        up.quantity,
                        up.from_domain,
                        up.to_domain,
                        up.value
                    ),
                });
            }
        }
    }
    let best_lower = |a: &str, b: &str| {
        certs
            .iter()
            .filter(|c| c.direction == Direction::Lower && c.quantity == Quantity::DeltaF)
            .filter(|c| c.from_domain == a && c.to_domain == b)
            .map(|c| c.value.clone())
            .max()
    };
    let mut strictness = Vec::new();
    for c in certs
        .iter()
        .filter(|c| c.direction == Direction::Upper && c.quantity == Quantity::Dc)
    {
        let (a, b) = (&c.from_domain, &c.to_domain);
        if let (Some(x), Some(y)) = (best_lower(a, b), best_lower(b, a)) {
            let m = x.min(y);
            strictness.push(StrictnessVerdict {
                first: a.clone(),
                second: b.clone(),
                strict: c.value < m,
                dc_upper: c.value.clone(),
                delta_f_lower_min: m,
            });
        }
    }
    ConsistencyReport {
        violations,
        strictness,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ElldistRow {
    pub r: u64,
    pub window: (Rational, Rational),
    pub beta: Rational,
    pub eps: Rational,
    pub lower: Rational,
    pub closed_form_lower: Rational,
    pub upper: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct ElldistReport {
    pub rows: Vec<ElldistRow>,
    pub lower_increasing: bool,
    pub upper_decreasing: bool,
    pub certificates: Vec<BoundCertificate>,
}

impl ElldistReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,beta,eps,lower,closed_form_lower,upper\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.r, row.beta, row.eps, row.lower, row.closed_form_lower, row.upper
            ));
        }
        out
    }
}

/// `9/(10β²)`, which keeps `εβ² < 1`.
pub fn elldist_eps(beta: &Rational) -> Rational {
    Rational::ratio(9, 10) / beta.pow(2)
}

fn elldist_row(base: &EllipsoidSpec, r: u64) -> Result<(ElldistRow, Vec<BoundCertificate>)> {
    let witness = dirichlet_tuple(base, r)?;
    let beta = witness.window.0.midpoint(&witness.window.1);
    let eps = elldist_eps(&beta);
    let spec = TruncatedEllipsoidSpec::new(base.clone(), eps.clone(), beta.clone())?;
    let dellu = dellu_report(&spec, &witness)?;
    let upper = upper_trunc_vs_ellipsoid_for(&spec)?;
    let row = ElldistRow {
        r,
        window: witness.window.clone(),
        beta,
        eps,
        lower: dellu.certificate.value.clone(),
        closed_form_lower: dellu.closed_form_lower,
        upper: upper.value.clone(),
    };
    Ok((row, vec![dellu.certificate, upper]))
}

/// Lower and upper bounds along the Dirichlet windows starting at each `r`,
/// computed on up to `jobs` threads; the output does not depend on `jobs`.
pub fn elldist_report(base: &EllipsoidSpec, rs: &[u64], jobs: usize) -> Result<ElldistReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<(ElldistRow, Vec<BoundCertificate>)> = pool.install(|| {
        rs.par_iter()
            .map(|&r| elldist_row(base, r))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows = Vec::new();
    let mut certificates = Vec::new();
    for (row, certs) in results {
        rows.push(row);
        certificates.extend(certs);
    }
    let lower_increasing = rows.windows(2).all(|w| w[0].lower < w[1].lower);
    let upper_decreasing = rows.windows(2).all(|w| w[0].upper > w[1].upper);
    Ok(ElldistReport {
        rows,
        lower_increasing,
        upper_decreasing,
        certificates,
    })
}
