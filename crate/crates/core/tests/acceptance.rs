//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{brute_force_sup, q, qs, random_barcode};
use orbitgauge::bounds::{
    compose, dellu_report, elldist_report, lower_sinkhole_pair, lower_sinkhole_report,
    manual_inclusion, sinkhole_barcode, upper_sinkhole_pair, v34_report, Direction, Quantity,
    SINKHOLE_PIPELINE_N,
};
use orbitgauge::diophantine::{certify_beta, dirichlet_tuple, witness_for_beta};
use orbitgauge::domains::{EllipsoidSpec, TruncatedEllipsoidSpec};
use orbitgauge::persistence::{implantation_lower_bound, scale_barcode};
use orbitgauge::reeb::{
    cz_center_axis, ellipsoid_spectrum, ellipsoid_spectrum_recursive,
    trunc_nontrivial_period_infimum, trunc_orbits, OrbitFamily,
};
use orbitgauge::{Error, ExtRational, Rational};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(ok: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: Error) -> String {
    format!("{}: {e}", e.kind())
}

fn random_rational(rng: &mut StdRng) -> Rational {
    Rational::ratio(rng.gen_range(10..200), rng.gen_range(7..60))
}

fn c1_ellipsoid_cz() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xE11);
    let mut done = 0;
    let mut orbits = 0;
    let mut retries = 0;
    while done < 50 {
        let m = rng.gen_range(2..=4);
        let caps: Vec<Rational> = (0..m).map(|_| random_rational(&mut rng)).collect();
        let spec = EllipsoidSpec::new(caps.clone()).map_err(err)?;
        let cap = caps.iter().max().unwrap() * Rational::from(10i64);
        let closed = match ellipsoid_spectrum(&spec, &cap) {
            Ok(o) => o,
            Err(Error::DegenerateInput { .. }) => {
                retries += 1;
                continue;
            }
            Err(e) => return Err(err(e)),
        };
        let recursive = ellipsoid_spectrum_recursive(&spec, &cap).map_err(err)?;
        ensure(
            closed == recursive,
            format!(
                "spectra differ for {:?}",
                caps.iter().map(|c| c.to_string()).collect::<Vec<_>>()
            ),
        )?;
        orbits += closed.len();
        done += 1;
    }
    Ok(format!(
        "50 ellipsoids, {orbits} orbits identical ({retries} degenerate draws skipped)"
    ))
}

fn c2_double_knot_indices() -> Outcome {
    let eps = q("1/1000");
    let top = Rational::one() - &eps;
    let base = [Rational::one()];
    let mut seen = Vec::new();
    for (beta, n, want) in [(3i64, 1u64, -3i64), (3, 2, -7), (4, 1, -5)] {
        let slope = Rational::from(beta) * &top;
        let got = cz_center_axis(&slope, &base, n).map_err(err)?;
        ensure(
            got == want,
            format!("beta={beta}, N={n}: got {got}, want {want}"),
        )?;

        let spec = TruncatedEllipsoidSpec::new(
            EllipsoidSpec::new(vec![Rational::one(), top.clone()]).unwrap(),
            eps.clone(),
            Rational::from(beta),
        )
        .map_err(err)?;
        let orbits = trunc_orbits(&spec, &q("1/100"), n).map_err(err)?;
        let axis = orbits
            .iter()
            .find(|o| o.family == OrbitFamily::CenterAxis && o.multiplicity == n)
            .ok_or(format!("no center-axis orbit with N={n} at beta={beta}"))?;
        ensure(
            axis.cz == Some(want),
            format!("trunc_orbits index {:?} at beta={beta}, N={n}", axis.cz),
        )?;
        seen.push(got);
    }
    Ok(format!("indices {seen:?} = (2-5n, 4-11n, 2-7n) at n=1"))
}

fn c3_v34() -> Outcome {
    let r = v34_report(1, &q("1/1000")).map_err(err)?;
    let want = q("500/7");
    ensure(r.lower == want, format!("lower {}", r.lower))?;
    let lowers: Vec<_> = r
        .certificates
        .iter()
        .filter(|c| c.direction == Direction::Lower)
        .map(|c| c.value.clone())
        .collect();
    ensure(
        lowers == vec![want.clone(), want],
        format!("lower certificates {lowers:?}"),
    )?;
    let uppers: Vec<_> = r
        .certificates
        .iter()
        .filter(|c| c.direction == Direction::Upper && c.quantity != Quantity::Dc)
        .map(|c| c.value.to_string())
        .collect();
    ensure(
        uppers == ["16/9", "25/16"],
        format!("upper factors {uppers:?}"),
    )?;
    ensure(r.upper_dc == q("25/9"), format!("d_c upper {}", r.upper_dc))?;
    ensure(r.strict, "strictness verdict false")?;
    Ok(format!(
        "lower 500/7 both ways, d_c <= {} = 16/9 * 25/16, strict",
        r.upper_dc
    ))
}

fn c4_dellu() -> Outcome {
    let beta = q("299/100");
    let eps = q("1/100");
    let base = EllipsoidSpec::new(qs(&["1", "1"])).unwrap();
    let spec = TruncatedEllipsoidSpec::new(base.clone(), eps.clone(), beta.clone()).map_err(err)?;
    let pstar = trunc_nontrivial_period_infimum(&spec);
    ensure(pstar.value == q("34/133"), format!("P* = {}", pstar.value))?;
    ensure(pstar.n_cut <= 26, format!("N_cut = {}", pstar.n_cut))?;

    // Every admissible (N, k): -N < k < N β, bound N ε + (N β − k) u with
    // u = (1 − ε)/(1 + β) = 99/399. Scaled by 39900 everything is an integer.
    let mut brute = i64::MAX;
    for n in 1..=200i64 {
        for k in -n + 1..=(299 * n - 1) / 100 {
            brute = brute.min(399 * n + 99 * (299 * n - 100 * k));
        }
    }
    let brute = Rational::ratio(brute, 39900);
    ensure(brute == pstar.value, format!("brute force gives {brute}"))?;

    let witness = witness_for_beta(&base, &beta).map_err(err)?;
    let r = dellu_report(&spec, &witness).map_err(err)?;
    ensure(
        r.certificate.value == q("3400/133"),
        format!("implantation value {}", r.certificate.value),
    )?;
    let holds = r
        .closed_form
        .holds_for(&pstar.value, &beta, &eps)
        .map_err(err)?;
    ensure(holds, "closed-form bound exceeds P*")?;
    Ok(format!(
        "P* = 34/133 (N_cut {}), lower bound 3400/133, closed form C beta eps <= P*",
        pstar.n_cut
    ))
}

fn c5_elldist() -> Outcome {
    let base = EllipsoidSpec::new(qs(&["1", "1"])).unwrap();
    let r = elldist_report(&base, &[3, 30, 300], 4).map_err(err)?;
    let lows: Vec<String> = r.rows.iter().map(|row| row.lower.to_decimal(2)).collect();
    ensure(
        r.rows.windows(2).all(|w| w[0].lower < w[1].lower),
        format!("lowers not strictly increasing: {lows:?}"),
    )?;
    ensure(
        r.rows.windows(2).all(|w| w[0].upper > w[1].upper),
        "uppers not decreasing",
    )?;
    for row in &r.rows {
        let cap = (Rational::one() + row.beta.recip().unwrap()).pow(2);
        ensure(
            row.upper <= cap,
            format!("upper {} exceeds (1+1/beta)^2 at r={}", row.upper, row.r),
        )?;
        ensure(row.upper > Rational::one(), "upper at or below 1")?;
    }
    let last = &r.rows.last().unwrap().lower;
    ensure(
        *last > Rational::from(1000i64),
        format!(
            "lowers {lows:?} increase strictly but the last is {} <= 1000",
            last.to_decimal(2)
        ),
    )?;
    Ok(format!("lowers {lows:?}"))
}

fn c6_sinkholes() -> Outcome {
    let grid = [
        qs(&["1/10", "1/3"]),
        qs(&["1/7", "2/5"]),
        qs(&["1/4", "1/2"]),
        qs(&["1/20", "3/10"]),
        qs(&["1/5", "1/5"]),
    ];
    let samples: Vec<Rational> = (1..=10).map(|k| Rational::ratio(k, 11)).collect();
    let mut pairs = 0;
    for eps in &grid {
        for zeta in &grid {
            let low = lower_sinkhole_report(eps, zeta).map_err(err)?;
            ensure(
                low.pipeline.value == ExtRational::Finite(low.closed_form.clone()),
                format!(
                    "pipeline {} vs closed form {}",
                    low.pipeline.value, low.closed_form
                ),
            )?;
            let cert = lower_sinkhole_pair(eps, zeta).map_err(err)?;
            let up = upper_sinkhole_pair(eps, zeta).map_err(err)?;
            ensure(
                cert.value <= up.value,
                format!("lower {} above upper {}", cert.value, up.value),
            )?;

            for depths in [eps, zeta] {
                let bc = sinkhole_barcode(SINKHOLE_PIPELINE_N, depths).map_err(err)?;
                for (i, s) in samples.iter().enumerate() {
                    let want = depths.iter().filter(|e| *e < s).count();
                    let dim = bc.dim(s).map_err(err)?;
                    ensure(dim == want, format!("dim({s}) = {dim}, expected {want}"))?;
                    let t = samples.get(i + 1).cloned().unwrap_or_else(|| q("21/22"));
                    let rank = bc.rank(s, &t).map_err(err)?;
                    ensure(
                        rank == want,
                        format!("rank({s},{t}) = {rank}, expected {want}"),
                    )?;
                }
            }
            pairs += 1;
        }
    }
    Ok(format!(
        "{pairs} pairs: closed form = engine <= upper, sinkrank dims at 10 levels"
    ))
}

fn c7_implantation_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x1A7);
    for i in 0..200 {
        let src = random_barcode(&mut rng, 0);
        let tgt = random_barcode(&mut rng, 0);
        let got = implantation_lower_bound(std::slice::from_ref(&src), std::slice::from_ref(&tgt))
            .map_err(err)?;
        let want = brute_force_sup(&src, &tgt);
        ensure(
            got.value == want,
            format!("pair {i}: engine {} vs grid {}", got.value, want),
        )?;
    }
    Ok("200 random pairs match the event-midpoint search".into())
}

fn c8_properties() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x8);
    let grid: Vec<Rational> = (1..80).map(|k| Rational::ratio(2 * k + 1, 14)).collect();

    // Rank covariance under scaling and monotonicity in (s, t).
    for _ in 0..200 {
        let bc = random_barcode(&mut rng, 0);
        let a = Rational::ratio(rng.gen_range(3..30), 3);
        let scaled = scale_barcode(&bc, &a).map_err(err)?;
        let pts: Vec<&Rational> = grid.iter().filter(|x| *bc.window_end() > **x).collect();
        for (i, s) in pts.iter().enumerate() {
            for t in &pts[i..] {
                let (Ok(r), Ok(rs)) = (bc.rank(s, t), scaled.rank(&(*s / &a), &(*t / &a))) else {
                    continue;
                };
                ensure(
                    r == rs,
                    format!("rank({s},{t}) = {r} but scaled rank {rs} at a = {a}"),
                )?;
                if let Ok(wider) = bc.rank(s, pts.last().unwrap()) {
                    ensure(wider <= r, "rank increases in t")?;
                }
            }
        }
    }

    // Compose associativity on random chains.
    for _ in 0..100 {
        let v: Vec<Rational> = (0..3)
            .map(|_| Rational::ratio(rng.gen_range(10..60), 10))
            .collect();
        let c: Vec<_> = (0..3)
            .map(|i| {
                manual_inclusion(
                    Quantity::Dc,
                    Direction::Upper,
                    &format!("U{i}"),
                    &format!("U{}", i + 1),
                    v[i].clone(),
                    "chain",
                )
            })
            .collect::<Result<_, _>>()
            .map_err(err)?;
        let left = compose(&compose(&c[0], &c[1]).map_err(err)?, &c[2]).map_err(err)?;
        let right = compose(&c[0], &compose(&c[1], &c[2]).map_err(err)?).map_err(err)?;
        ensure(
            left.value == right.value
                && left.from_domain == right.from_domain
                && left.to_domain == right.to_domain,
            "composition not associative",
        )?;
    }

    // Dirichlet window membership.
    let mut sampled = 0;
    for (caps, r) in [
        (vec!["1", "1"], 3u64),
        (vec!["1", "1"], 30),
        (vec!["1", "3/2"], 7),
        (vec!["1", "13/10", "2"], 5),
    ] {
        let base = EllipsoidSpec::new(qs(&caps)).unwrap();
        let w = dirichlet_tuple(&base, r).map_err(err)?;
        let (lo, hi) = w.window.clone();
        let width = &hi - &lo;
        for _ in 0..1000 {
            let t = Rational::ratio(rng.gen_range(1..1_000_000), 1_000_000);
            let beta = &lo + &width * &t;
            match certify_beta(&base, &beta, &w) {
                Ok(_) | Err(Error::DegenerateInput { .. }) => sampled += 1,
                Err(e) => {
                    return Err(format!(
                        "beta {beta} inside ({lo}, {hi}) rejected: {}",
                        err(e)
                    ))
                }
            }
        }
        for beta in [lo.clone(), hi.clone(), &lo - &width, &hi + &width] {
            let r = certify_beta(&base, &beta, &w);
            ensure(
                matches!(r, Err(Error::OutsideWindow { .. })),
                format!("beta {beta} outside window gave {r:?}"),
            )?;
        }
    }

    // Degeneracy rejection.
    let e12 = EllipsoidSpec::new(qs(&["1", "2"])).unwrap();
    ensure(
        matches!(
            ellipsoid_spectrum(&e12, &q("5")),
            Err(Error::DegenerateInput { .. })
        ),
        "E(1,2) accepted",
    )?;
    ensure(
        matches!(
            cz_center_axis(&q("3"), &qs(&["1"]), 1),
            Err(Error::DegenerateOrbit { .. })
        ),
        "integer slope ratio accepted",
    )?;
    // A window containing some β with β a_3 / a_j integral, i.e. β in ½ℤ or (13/20)ℤ.
    let base = EllipsoidSpec::new(qs(&["1", "13/10", "2"])).unwrap();
    let mut degenerate = None;
    for r in 1..200 {
        let w = dirichlet_tuple(&base, r).map_err(err)?;
        for step in [q("1/2"), q("13/20")] {
            let k = Rational::from_integer((&w.window.0 / &step).floor() + 1);
            let beta = &k * &step;
            if beta < w.window.1 {
                degenerate = Some((w.clone(), beta));
            }
        }
        if degenerate.is_some() {
            break;
        }
    }
    let (w, beta) = degenerate.ok_or("no window contains a degenerate beta")?;
    let r = certify_beta(&base, &beta, &w);
    ensure(
        matches!(r, Err(Error::DegenerateInput { .. })),
        format!("degenerate beta {beta} gave {r:?}"),
    )?;
    Ok(format!(
        "covariance, monotonicity, associativity, {sampled} window samples, degeneracy"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        (
            "1 ellipsoid CZ cross-validation",
            c1_ellipsoid_cz,
            Duration::from_secs(5),
        ),
        (
            "2 double-knot center-axis indices",
            c2_double_knot_indices,
            Duration::from_secs(1),
        ),
        (
            "3 V3/V4 bounds and strictness",
            c3_v34,
            Duration::from_secs(1),
        ),
        (
            "4 truncated ellipsoid pipeline",
            c4_dellu,
            Duration::from_secs(1),
        ),
        (
            "5 ellipsoid distance trend",
            c5_elldist,
            Duration::from_secs(10),
        ),
        ("6 sinkhole suite", c6_sinkholes, Duration::from_secs(10)),
        (
            "7 implantation oracle",
            c7_implantation_oracle,
            Duration::from_secs(30),
        ),
        ("8 property suites", c8_properties, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (name, f, limit) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > limit => {
                Err(format!("{detail}; took {took:.2?}, limit {limit:?}"))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  criterion {name} [{took:.2?}]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name} [{took:.2?}]: {detail}");
            }
        }
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
