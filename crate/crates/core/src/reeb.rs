//! Closed Reeb orbits with exact periods and Conley–Zehnder indices.
//!
//! Every supported domain is a tube `{π|z|² ≤ h(u(w))}` over an ellipsoid
//! base, and its orbits split into three kinds: lifts of base boundary
//! orbits, iterates of the orbit over the origin of the base, and families
//! born at the corners of a piecewise-linear profile. Corner families depend
//! on the smoothing of `h`; only a period lower bound survives the limit, so
//! they carry a bound and an unknown index.

use std::fmt::Write as _;

use num_bigint::BigInt;
use serde::Serialize;

use crate::diophantine::{certify_beta, DirichletWitness};
use crate::domains::{
    trunc_profile, EllipsoidSpec, RadialProfile, SinkholeSpec, TruncatedEllipsoidSpec,
};
use crate::error::{Error, Result};
use crate::numeric::{cmp_power, floor_strict, root_bracket, Rational};

/// Orbit family tag. The declaration order is the canonical sort order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind")]
pub enum OrbitFamily {
    /// An orbit over the circle in base factor `k` (1-based); in an
    /// ellipsoid every orbit is of this kind.
    BoundaryLift { k: usize },
    /// Iterates over the origin of the base.
    CenterAxis,
    /// Iterates over the center of sinkhole `m` (1-based).
    SinkholeCenter { m: usize },
    /// Orbits born at a profile corner, rotating factor `j` with winding `k`.
    CornerFamily { j: usize, k: i64 },
}

impl OrbitFamily {
    fn name(&self) -> &'static str {
        match self {
            OrbitFamily::BoundaryLift { .. } => "BoundaryLift",
            OrbitFamily::CenterAxis => "CenterAxis",
            OrbitFamily::SinkholeCenter { .. } => "SinkholeCenter",
            OrbitFamily::CornerFamily { .. } => "CornerFamily",
        }
    }

    fn index_label(&self) -> String {
        match self {
            OrbitFamily::BoundaryLift { k } => k.to_string(),
            OrbitFamily::CenterAxis => String::new(),
            OrbitFamily::SinkholeCenter { m } => m.to_string(),
            OrbitFamily::CornerFamily { j, k } => format!("{j}:{k}"),
        }
    }
}

/// Exact period, or a certified lower bound for corner families.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Period {
    Exact(Rational),
    LowerBound(Rational),
}

impl Period {
    pub fn value(&self) -> &Rational {
        match self {
            Period::Exact(t) | Period::LowerBound(t) => t,
        }
    }

    pub fn is_bound(&self) -> bool {
        matches!(self, Period::LowerBound(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ReebOrbit {
    pub family: OrbitFamily,
    pub multiplicity: u64,
    pub period: Period,
    /// `None` when the index is unknown (corner families).
    pub cz: Option<i64>,
    pub nondegenerate: bool,
}

impl ReebOrbit {
    fn exact(family: OrbitFamily, n: u64, period: Rational, cz: i64) -> Self {
        ReebOrbit {
            family,
            multiplicity: n,
            period: Period::Exact(period),
            cz: Some(cz),
            nondegenerate: true,
        }
    }
}

#[derive(Serialize)]
struct OrbitRecord<'a> {
    family: &'a OrbitFamily,
    multiplicity: u64,
    period: Option<&'a Rational>,
    period_lower_bound: Option<&'a Rational>,
    cz: Option<i64>,
    nondegenerate: bool,
}

impl Serialize for ReebOrbit {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let (period, bound) = match &self.period {
            Period::Exact(t) => (Some(t), None),
            Period::LowerBound(t) => (None, Some(t)),
        };
        OrbitRecord {
            family: &self.family,
            multiplicity: self.multiplicity,
            period,
            period_lower_bound: bound,
            cz: self.cz,
            nondegenerate: self.nondegenerate,
        }
        .serialize(serializer)
    }
}

/// Sorts by (period or bound, family tag, multiplicity).
pub fn sort_canonical(orbits: &mut [ReebOrbit]) {
    orbits.sort_by(|x, y| {
        x.period
            .value()
            .cmp(y.period.value())
            .then(x.family.cmp(&y.family))
            .then(x.multiplicity.cmp(&y.multiplicity))
    });
}

/// CSV with columns `family,m_or_k,N,period_or_bound,bound_flag,cz,nondegenerate`.
pub fn orbits_to_csv(orbits: &[ReebOrbit]) -> String {
    let mut out = String::from("family,m_or_k,N,period_or_bound,bound_flag,cz,nondegenerate\n");
    for o in orbits {
        let cz =
            o.cz.map(|c| c.to_string())
                .unwrap_or_else(|| "unknown".into());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            o.family.name(),
            o.family.index_label(),
            o.multiplicity,
            o.period.value(),
            o.period.is_bound(),
            cz,
            o.nondegenerate
        );
    }
    out
}

fn small(n: &BigInt) -> i64 {
    i64::try_from(n).expect("index sums stay far below 2^63 at any enumerable cap")
}

/// Closed-form spectrum of `E(a_1, ..., a_m)` up to `period_cap`.
///
/// The orbit `γ(k, N)` has period `N a_k` and index
/// `m − 1 + 2 Σ_j ⌊N a_k / a_j⌋`.
pub fn ellipsoid_spectrum(spec: &EllipsoidSpec, period_cap: &Rational) -> Result<Vec<ReebOrbit>> {
    if !period_cap.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "period cap {period_cap} must be positive"
        )));
    }
    let caps = spec.capacities();
    let m = caps.len() as i64;
    let mut out = Vec::new();
    for (k, ak) in caps.iter().enumerate() {
        let mut n: u64 = 1;
        loop {
            let period = Rational::from(n) * ak;
            if period > *period_cap {
                break;
            }
            let mut sum = BigInt::from(0);
            for (j, aj) in caps.iter().enumerate() {
                let (f, is_int) = floor_strict(&(&period / aj));
                if j != k && is_int {
                    return Err(Error::DegenerateInput {
                        location: format!("k={},N={},j={}", k + 1, n, j + 1),
                        detail: format!("N a_k / a_j = {} is an integer", &period / aj),
                    });
                }
                sum += f;
            }
            out.push(ReebOrbit::exact(
                OrbitFamily::BoundaryLift { k: k + 1 },
                n,
                period,
                m - 1 + 2 * small(&sum),
            ));
            n += 1;
        }
    }
    sort_canonical(&mut out);
    Ok(out)
}

/// Index of the `N`-th iterate over the origin when the profile has slope
/// `slope_at_zero` there: `n + 2N + 2 Σ_j ⌊−N·slope / a_j⌋`.
pub fn cz_center_axis(slope_at_zero: &Rational, base: &[Rational], n: u64) -> Result<i64> {
    let nn = Rational::from(n);
    let mut sum = BigInt::from(0);
    for (j, aj) in base.iter().enumerate() {
        let arg = -(&nn * slope_at_zero) / aj;
        let (f, is_int) = floor_strict(&arg);
        if is_int {
            return Err(Error::DegenerateOrbit {
                location: format!("center axis N={n}, j={}", j + 1),
                detail: format!("floor argument {arg} is an integer"),
            });
        }
        sum += f;
    }
    Ok(base.len() as i64 + 2 * n as i64 + 2 * small(&sum))
}

/// Index of the lift of a base orbit of index `cz_base` and period `T` when
/// the tangent intercept along the base boundary is `τ`:
/// `cz_base + 1 + 2⌊T/τ⌋`.
pub fn cz_boundary_lift(
    cz_base: i64,
    period_base: &Rational,
    tau_at_boundary: &Rational,
) -> Result<i64> {
    let ratio = period_base / tau_at_boundary;
    let (f, is_int) = floor_strict(&ratio);
    if is_int {
        return Err(Error::DegenerateOrbit {
            location: format!("boundary lift of period {period_base}"),
            detail: format!("T / tau = {ratio} is an integer"),
        });
    }
    Ok(cz_base + 1 + 2 * small(&f))
}

/// The same spectrum as [`ellipsoid_spectrum`], built by induction on the
/// number of factors: `E(a_1..a_m)` is the tube over `E(a_1..a_{m-1})` with
/// `h(u) = a_m(1 − u)`, starting from the disk over a point.
pub fn ellipsoid_spectrum_recursive(
    spec: &EllipsoidSpec,
    period_cap: &Rational,
) -> Result<Vec<ReebOrbit>> {
    fn build(caps: &[Rational], cap: &Rational) -> Result<Vec<ReebOrbit>> {
        let m = caps.len();
        let top = &caps[m - 1];
        let lower = &caps[..m - 1];
        let mut out = Vec::new();
        if m > 1 {
            for c in build(lower, cap)? {
                let t = c.period.value().clone();
                let cz = cz_boundary_lift(c.cz.expect("ellipsoid indices are known"), &t, top)?;
                out.push(ReebOrbit::exact(c.family, c.multiplicity, t, cz));
            }
        }
        let mut n: u64 = 1;
        loop {
            let period = Rational::from(n) * top;
            if period > *cap {
                break;
            }
            let cz = cz_center_axis(&(-top), lower, n)?;
            out.push(ReebOrbit::exact(
                OrbitFamily::BoundaryLift { k: m },
                n,
                period,
                cz,
            ));
            n += 1;
        }
        Ok(out)
    }
    if !period_cap.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "period cap {period_cap} must be positive"
        )));
    }
    let mut out = build(spec.capacities(), period_cap)?;
    sort_canonical(&mut out);
    Ok(out)
}

fn corner_ranges(
    profile: &RadialProfile,
) -> impl Iterator<Item = (&Rational, &Rational, &Rational, Rational)> {
    profile.breakpoints().iter().enumerate().map(move |(i, u)| {
        let left = &profile.segments()[i].slope;
        let right = &profile.segments()[i + 1].slope;
        (u, left, right, profile.eval(u))
    })
}

/// Orbits of the radial tube over `E(base)` with profile `h`.
///
/// Returns base-boundary lifts and center-axis iterates with period at most
/// `period_cap`, and every admissible corner family with `N <= n_cap`.
pub fn tube_orbits(
    base: &EllipsoidSpec,
    profile: &RadialProfile,
    period_cap: &Rational,
    n_cap: u64,
) -> Result<Vec<ReebOrbit>> {
    if n_cap == 0 {
        return Err(Error::InvalidArgument("N cap must be positive".into()));
    }
    let caps = base.capacities();
    let segs = profile.segments();
    let tau_boundary = &segs[segs.len() - 1].intercept;
    let mut out = Vec::new();

    let base_orbits = ellipsoid_spectrum(base, period_cap).map_err(|e| match e {
        Error::DegenerateInput { location, detail } => Error::DegenerateOrbit {
            location: format!("base orbit {location}"),
            detail,
        },
        other => other,
    })?;
    for c in base_orbits {
        let t = c.period.value().clone();
        let cz = cz_boundary_lift(c.cz.expect("known"), &t, tau_boundary)?;
        out.push(ReebOrbit::exact(c.family, c.multiplicity, t, cz));
    }

    let tau_center = &segs[0].intercept;
    let mut n: u64 = 1;
    loop {
        let period = Rational::from(n) * tau_center;
        if period > *period_cap {
            break;
        }
        let cz = cz_center_axis(&segs[0].slope, caps, n)?;
        out.push(ReebOrbit::exact(OrbitFamily::CenterAxis, n, period, cz));
        n += 1;
    }

    for (u, left, right, hu) in corner_ranges(profile) {
        for (j, aj) in caps.iter().enumerate() {
            for n in 1..=n_cap {
                let nn = Rational::from(n);
                let k_lo: BigInt = (&nn * right / aj).floor() + 1;
                let k_hi: BigInt = (&nn * left / aj).ceil() - 1;
                let mut k = k_lo;
                while k <= k_hi {
                    let bound = &nn * &hu - u * Rational::from(k.clone()) * aj;
                    out.push(ReebOrbit {
                        family: OrbitFamily::CornerFamily {
                            j: j + 1,
                            k: small(&k),
                        },
                        multiplicity: n,
                        period: Period::LowerBound(bound),
                        cz: None,
                        nondegenerate: false,
                    });
                    k += 1;
                }
            }
        }
    }
    sort_canonical(&mut out);
    Ok(out)
}

/// Orbits of a truncated ellipsoid; see [`tube_orbits`].
pub fn trunc_orbits(
    spec: &TruncatedEllipsoidSpec,
    period_cap: &Rational,
    n_cap: u64,
) -> Result<Vec<ReebOrbit>> {
    let base = EllipsoidSpec::new(spec.lower().to_vec())?;
    tube_orbits(&base, &trunc_profile(spec), period_cap, n_cap)
}

/// Exact minimum of the corner-family period bounds, with its minimizer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PeriodInfimum {
    pub value: Rational,
    pub j: usize,
    pub k: i64,
    pub multiplicity: u64,
    /// First `N` at which the scan stopped: no corner family with this many
    /// or more iterations can beat `value`.
    pub n_cut: u64,
}

/// Minimum over all admissible corner families of their period bound.
///
/// For fixed `(N, j)` the bound decreases in `k`, so only the largest
/// admissible `k` is examined; the bound exceeds `N` times the left
/// segment's intercept, which gives the cutoff in `N`.
pub fn corner_period_infimum(base: &[Rational], profile: &RadialProfile) -> Option<PeriodInfimum> {
    let mut best: Option<PeriodInfimum> = None;
    for (i, (u, left, right, hu)) in corner_ranges(profile).enumerate() {
        let c = &profile.segments()[i].intercept;
        let mut n: u64 = 1;
        loop {
            let nn = Rational::from(n);
            if let Some(b) = &best {
                if &nn * c >= b.value {
                    break;
                }
            }
            for (j, aj) in base.iter().enumerate() {
                let k: BigInt = (&nn * left / aj).ceil() - 1;
                let kq = Rational::from(k.clone());
                if &kq * aj <= &nn * right {
                    continue;
                }
                let f = &nn * &hu - u * &kq * aj;
                if best.as_ref().is_none_or(|b| f < b.value) {
                    best = Some(PeriodInfimum {
                        value: f,
                        j: j + 1,
                        k: small(&k),
                        multiplicity: n,
                        n_cut: 0,
                    });
                }
            }
            n += 1;
        }
        if let Some(b) = best.as_mut() {
            b.n_cut = b.n_cut.max(n);
        }
    }
    best
}

/// The exact infimum `P*` of all corner-family periods of a truncated ellipsoid.
pub fn trunc_nontrivial_period_infimum(spec: &TruncatedEllipsoidSpec) -> PeriodInfimum {
    corner_period_infimum(spec.lower(), &trunc_profile(spec))
        .expect("a truncated profile has one corner with admissible families")
}

/// Constants of the closed-form corner-period bound `C β^e ε`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrongTBound {
    /// Rational upper bound on the approximation constant `c`.
    pub dirichlet_constant: Rational,
    /// `min_j a_j / 4`, valid with exponent 1 when `N` is small.
    pub small_n_constant: Rational,
    /// `min_j a_j / (6c)` with exponent [`StrongTBound::large_n_exponent`].
    pub large_n_constant: Rational,
    pub large_n_exponent: Rational,
    /// `C = min(small, large)`.
    pub constant: Rational,
    /// `1` for `n = 1`, otherwise `1/(n−1)`.
    pub exponent: Rational,
}

impl StrongTBound {
    fn root_index(&self) -> u32 {
        let e = &self.exponent;
        u32::try_from(e.denom()).expect("exponent is 1/m with small m")
    }

    /// Whether `p >= C β^e ε`, decided exactly.
    pub fn holds_for(&self, p: &Rational, beta: &Rational, eps: &Rational) -> Result<bool> {
        let x = p / (&self.constant * eps);
        Ok(cmp_power(&x, beta, self.root_index())? != std::cmp::Ordering::Less)
    }

    /// A rational lower bound for `C β^e` within `resolution`.
    pub fn value_lower(&self, beta: &Rational, resolution: &Rational) -> Result<Rational> {
        let (lo, _) = root_bracket(beta, self.root_index(), resolution)?;
        Ok(&self.constant * lo)
    }
}

/// Closed-form constants bounding every corner-family period from below.
///
/// Requires a Dirichlet witness whose window certifies `β`, `β > 2` and
/// `εβ² < 1`. For `n >= 2` the constant `c = 3A(a_n/a_{n+1})^{1/(n−1)}` is
/// replaced by a rational upper bound, which only weakens the bound.
pub fn strong_t_bound_closed_form(
    spec: &TruncatedEllipsoidSpec,
    witness: Option<&DirichletWitness>,
) -> Result<StrongTBound> {
    let witness =
        witness.ok_or_else(|| Error::BetaNotCertified("no Dirichlet witness supplied".into()))?;
    certify_beta(&spec.base, &spec.beta, witness).map_err(|e| match e {
        Error::OutsideWindow { .. } => Error::BetaNotCertified(e.to_string()),
        other => other,
    })?;
    if spec.beta <= Rational::from(2i64) {
        return Err(Error::HypothesisViolated(format!(
            "closed-form bound needs beta > 2, got {}",
            spec.beta
        )));
    }
    if !spec.theorem_strength {
        return Err(Error::HypothesisViolated(
            "closed-form bound needs eps * beta^2 < 1".into(),
        ));
    }
    let n = spec.n();
    let top = spec.top();
    let lower = spec.lower();
    let c = if n == 1 {
        Rational::one()
    } else {
        let big_a = lower.iter().map(|a| a / top).max().expect("n >= 1");
        let ratio = &lower[n - 1] / top;
        let (_, hi) = root_bracket(&ratio, (n - 1) as u32, &Rational::ratio(1, 1 << 20))?;
        Rational::from(3i64) * big_a * hi
    };
    let min_a = lower.iter().min().expect("n >= 1").clone();
    let small_n_constant = &min_a / Rational::from(4i64);
    let large_n_constant = &min_a / (Rational::from(6i64) * &c);
    let (large_n_exponent, exponent) = if n == 1 {
        (Rational::from(2i64), Rational::one())
    } else {
        let e = Rational::ratio(1, (n - 1) as i64);
        (e.clone(), e)
    };
    let constant = small_n_constant.clone().min(large_n_constant.clone());
    Ok(StrongTBound {
        dirichlet_constant: c,
        small_n_constant,
        large_n_constant,
        large_n_exponent,
        constant,
        exponent,
    })
}

/// The grading `k_β`: the index of the simple center-axis orbit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KBeta {
    pub grading: i64,
    /// Some `β a_{n+1} / a_j > 2`, so center-axis indices drop by at least 2 per iterate.
    pub strictly_decreasing: bool,
}

/// Computes `k_β` and checks `k_β <= 1` and the strict-decrease condition.
pub fn k_beta(spec: &TruncatedEllipsoidSpec) -> Result<KBeta> {
    let slope = &spec.beta * spec.top();
    let grading = cz_center_axis(&slope, spec.lower(), 1)?;
    if grading > 1 {
        return Err(Error::HypothesisViolated(format!(
            "k_beta = {grading} exceeds 1"
        )));
    }
    let two = Rational::from(2i64);
    let strictly_decreasing = spec.lower().iter().any(|aj| &slope / aj > two);
    if !strictly_decreasing {
        return Err(Error::HypothesisViolated(
            "no j with beta a_{n+1} / a_j > 2".into(),
        ));
    }
    Ok(KBeta {
        grading,
        strictly_decreasing,
    })
}

/// Orbits of period at most `b` on a sinkhole domain, for `1/2 < b < 1`.
///
/// These are the iterates over the sinkhole centers, with period `N ε_m` and
/// index `n + 2N + 2n⌊−N(2 − ε_m)⌋`.
pub fn sinkhole_spectrum(spec: &SinkholeSpec, threshold_b: &Rational) -> Result<Vec<ReebOrbit>> {
    if *threshold_b <= Rational::ratio(1, 2) || *threshold_b >= Rational::one() {
        return Err(Error::param(
            "threshold_b",
            format!("b = {threshold_b} is not in (1/2, 1)"),
        ));
    }
    let n = spec.n as i64;
    let two = Rational::from(2i64);
    let mut out = Vec::new();
    for (m, eps) in spec.depths.iter().enumerate() {
        let mut count: u64 = 1;
        loop {
            let nn = Rational::from(count);
            let period = &nn * eps;
            if period > *threshold_b {
                break;
            }
            let arg = -(&nn * (&two - eps));
            let (f, is_int) = floor_strict(&arg);
            if is_int {
                return Err(Error::DegenerateOrbit {
                    location: format!("sinkhole m={}, N={count}", m + 1),
                    detail: format!("N(2 - eps_m) = {} is an integer", -arg),
                });
            }
            let cz = n + 2 * count as i64 + 2 * n * small(&f);
            if (cz - n).rem_euclid(2) != 0 {
                return Err(Error::HypothesisViolated(format!(
                    "sinkhole orbit index {cz} has the wrong parity"
                )));
            }
            out.push(ReebOrbit::exact(
                OrbitFamily::SinkholeCenter { m: m + 1 },
                count,
                period,
                cz,
            ));
            count += 1;
        }
    }
    sort_canonical(&mut out);
    Ok(out)
}
