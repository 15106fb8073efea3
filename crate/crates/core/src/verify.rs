//! Property suites shared by `melon verify` and the acceptance tests.

use std::f64::consts::PI;
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::asymptotics::{
    kappa, lambda_sum, limit_cdf_det, limit_cdf_p1, limit_cdf_schehr, m_const, moment_asymptotic,
    LimitCdfQuery,
};
use crate::dirichlet::{g_asymptotic, g_exact, z_continued, z_residue, DirichletQuery, G_exact, G_from_g, DEFAULT_TOL};
use crate::error::Result;
use crate::exact::{
    count_bounded, count_total, count_total_closed, exact_moment, height_pmf, rational_to_f64, WatermelonSpec,
};
use crate::paths::{compute_height, enumerate_all};
use crate::sampler::{
    chi_square, chi_square_critical, empirical_height, sample_watermelon, sample_watermelons, SamplerConfig,
};
use crate::special::{
    reciprocity_residual_corollary, reciprocity_residual_proposition, zeta, SeriesTolerance,
};

/// Outcome of one property check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_ms: u128,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {} ({} ms)", self.name, self.detail, self.elapsed_ms)
    }
}

fn timed(name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> Check {
    let start = Instant::now();
    let (passed, detail) = match body() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Check {
        name,
        passed,
        detail,
        elapsed_ms: start.elapsed().as_millis(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Reciprocity,
    Dirichlet,
    Identities,
    Convergence,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "reciprocity" => Ok(Self::Reciprocity),
            "dirichlet" => Ok(Self::Dirichlet),
            "identities" => Ok(Self::Identities),
            "convergence" => Ok(Self::Convergence),
            "all" => Ok(Self::All),
            other => Err(format!("unknown suite `{other}`")),
        }
    }
}

pub fn run_suite(suite: Suite) -> Vec<Check> {
    let mut out = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Reciprocity {
        out.push(reciprocity());
    }
    if all || suite == Suite::Dirichlet {
        out.push(dirichlet());
        out.push(g_machinery());
    }
    if all || suite == Suite::Identities {
        out.push(exact_oracles());
        out.push(route_cross_check());
        out.push(limit_law());
        out.push(sampler());
    }
    if all || suite == Suite::Convergence {
        out.push(table_one());
        out.push(moment_convergence());
    }
    out
}

/// `s kappa_s^(p)` as printed, rows `p = 1..5`, columns `s = 1..4`.
pub const TABLE_ONE: [[f64; 4]; 5] = [
    [1.772, 3.289, 6.391, 12.987],
    [2.577, 6.790, 18.282, 50.306],
    [3.207, 10.429, 34.371, 114.817],
    [3.742, 14.141, 53.939, 207.712],
    [4.215, 17.898, 76.536, 329.655],
];

pub fn table_one() -> Check {
    timed("table of s*kappa_s", || {
        let start = Instant::now();
        let mut worst = 0.0f64;
        for (p, row) in TABLE_ONE.iter().enumerate() {
            for (s, &want) in row.iter().enumerate() {
                let s = (s + 1) as f64;
                let v = s * kappa(p as u32 + 1, s, 1e-10)?.value;
                worst = worst.max((v - want).abs());
            }
        }
        let root_pi = (kappa(1, 1.0, 1e-10)?.value - PI.sqrt()).abs();
        let secs = start.elapsed().as_secs_f64();
        Ok((
            worst < 5e-3 && root_pi < 1e-8 && secs < 300.0,
            format!("max |s*kappa - table| = {worst:.2e} (< 5e-3), |kappa_1^(1) - sqrt(pi)| = {root_pi:.2e} (< 1e-8), {secs:.2} s"),
        ))
    })
}

pub fn exact_oracles() -> Check {
    timed("exact counts vs enumeration", || {
        let mut bad = Vec::new();
        let small = (1..=2u32).flat_map(|p| (0..=5u32).map(move |n| (p, n))).chain((0..=3).map(|n| (3, n)));
        for (p, n) in small {
            let spec = WatermelonSpec::new(p, n)?;
            let all = enumerate_all(&spec)?;
            let mut hist = std::collections::BTreeMap::<u64, BigUint>::new();
            for fam in &all {
                *hist.entry(compute_height(fam)?).or_default() += 1u32;
            }
            if BigUint::from(all.len()) != count_total(&spec).value || hist != height_pmf(&spec).counts {
                bad.push(format!("enum p={p} n={n}"));
            }
        }
        for p in 1..=4 {
            for n in 0..=30 {
                let spec = WatermelonSpec::new(p, n)?;
                if count_total(&spec) != count_total_closed(&spec) {
                    bad.push(format!("closed p={p} n={n}"));
                }
            }
        }
        Ok((
            bad.is_empty(),
            if bad.is_empty() {
                "enumeration (p<=2,n<=5; p=3,n<=3) and product formula (p<=4,n<=30) agree exactly".into()
            } else {
                format!("mismatches: {}", bad.join(", "))
            },
        ))
    })
}

pub fn reciprocity() -> Check {
    timed("theta reciprocity", || {
        let tol = SeriesTolerance::default();
        let mut cor = 0.0f64;
        for a in (0..=10).step_by(2) {
            for y in [0.3, 0.5, 1.0, 2.0, 3.0] {
                cor = cor.max(reciprocity_residual_corollary(a, y, tol)?.relative());
            }
        }
        let mut prop = 0.0f64;
        for a in 0..=6 {
            for x in [-1.0, -0.4, 0.0, 0.4, 1.0] {
                for t in [0.6, 1.0, 1.7] {
                    prop = prop.max(reciprocity_residual_proposition(a, x, t, tol)?.relative());
                }
            }
        }
        Ok((
            cor < 1e-11 && prop < 1e-9,
            format!("max corollary residual/scale {cor:.2e} (< 1e-11), proposition {prop:.2e} (< 1e-9)"),
        ))
    })
}

fn vectors_up_to(p: usize, max_norm: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..p {
        out = out
            .into_iter()
            .flat_map(|v: Vec<u32>| {
                (0..=max_norm).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .filter(|v| v.iter().sum::<u32>() <= max_norm)
            .collect();
    }
    out
}

pub fn dirichlet() -> Check {
    timed("Dirichlet series continuation", || {
        let mut red = 0.0f64;
        for a in 0..=2u32 {
            for z in [2.0, 3.5] {
                let got = z_continued(&DirichletQuery::half(vec![a], z)?, DEFAULT_TOL)?;
                red = red.max((got - 2.0 * zeta(2.0 * z - 2.0 * a as f64)?).abs());
            }
        }
        let mut special = 0.0f64;
        let mut residue = 0.0f64;
        for p in 1..=3 {
            for a in vectors_up_to(p, 2) {
                let norm: u32 = a.iter().sum();
                for k in 0..=2 {
                    let v = z_continued(&DirichletQuery::half(a.clone(), -(k as f64))?, DEFAULT_TOL)?;
                    let want = if norm == 0 && k == 0 { -1.0 } else { 0.0 };
                    special = special.max((v - want).abs());
                }
                let z0 = p as f64 / 2.0 + norm as f64;
                let h = 1e-4;
                let f = |z: f64| -> Result<f64> {
                    Ok((z - z0) * z_continued(&DirichletQuery::half(a.clone(), z)?, DEFAULT_TOL)?)
                };
                let extrap = 0.5 * (f(z0 + h)? + f(z0 - h)?);
                let want = z_residue(p, &a)?;
                residue = residue.max((extrap - want).abs() / want.abs());
            }
        }
        Ok((
            red < 1e-9 && special < 1e-9 && residue < 1e-5,
            format!(
                "p=1 reduction {red:.2e} (< 1e-9), special values {special:.2e} (< 1e-9), residue rel {residue:.2e} (< 1e-5)"
            ),
        ))
    })
}

pub fn route_cross_check() -> Check {
    timed("kappa vs lambda/M_p", || {
        let mut worst = 0.0f64;
        for p in 1..=3u32 {
            let m = m_const(p)?.to_f64().unwrap_or(f64::INFINITY);
            for k in 1..=4u32 {
                let kv = kappa(p, k as f64, 1e-10)?.value;
                let lv = lambda_sum(p, k, DEFAULT_TOL)? / m;
                worst = worst.max((kv - lv).abs() / kv.abs());
            }
        }
        Ok((worst < 1e-5, format!("max relative difference {worst:.2e} (< 1e-5) for p<=3, k<=4")))
    })
}

/// Residuals `E_exact - moment_asymptotic` for `n = 100, 400, 1600`.
pub fn moment_residuals(p: u32, s: u32) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (slot, n) in out.iter_mut().zip([100u32, 400, 1600]) {
        let exact = rational_to_f64(&exact_moment(&WatermelonSpec::new(p, n)?, s)?);
        *slot = exact - moment_asymptotic(p, n as f64, s, 1e-10)?;
    }
    Ok(out)
}

pub fn moment_convergence() -> Check {
    timed("moment residuals shrink", || {
        let mut ok = true;
        let mut parts = Vec::new();
        let mut p1s1_last = f64::NAN;
        for p in 1..=2 {
            for s in 1..=2 {
                let r = moment_residuals(p, s)?;
                let dec = r[1].abs() < r[0].abs() && r[2].abs() < r[1].abs();
                ok &= dec;
                if (p, s) == (1, 1) {
                    p1s1_last = r[2];
                }
                parts.push(format!(
                    "p={p} s={s}: {:.4} {:.4} {:.4}{}",
                    r[0],
                    r[1],
                    r[2],
                    if dec { "" } else { " (not decreasing)" }
                ));
            }
        }
        ok &= p1s1_last.abs() < 0.1;
        parts.push(format!("|r(p=1,s=1,n=1600)| = {:.4} (< 0.1)", p1s1_last.abs()));
        Ok((ok, parts.join("; ")))
    })
}

/// `P(H <= h)` over the uniform ensemble.
pub fn finite_cdf(spec: &WatermelonSpec, h: i64) -> f64 {
    if h < 0 {
        return 0.0;
    }
    let below = count_bounded(spec, h as u64 + 1).value;
    let total = count_total(spec).value;
    rational_to_f64(&BigRational::new(below.into(), total.into()))
}

pub fn limit_law() -> Check {
    timed("limit law forms and finite-n CDF", || {
        let mut cross = 0.0f64;
        for p in 1..=3 {
            for x in [0.6, 1.0, 1.5, 2.5] {
                let q = LimitCdfQuery::new(p, x)?;
                let d = limit_cdf_det(&q)?;
                cross = cross.max((d - limit_cdf_schehr(&q, 1e-15)?).abs());
                if p == 1 {
                    cross = cross.max((d - limit_cdf_p1(x)?).abs());
                }
            }
        }
        let mut monotone = true;
        for p in 1..=3 {
            let mut prev = f64::NEG_INFINITY;
            for i in 2..=50 {
                let v = limit_cdf_det(&LimitCdfQuery::new(p, i as f64 / 10.0)?)?;
                // values below 1e-15 are absolute rounding noise of the determinant
                monotone &= (-1e-9..=1.0 + 1e-9).contains(&v) && v >= prev - 1e-15;
                prev = v;
            }
        }
        let mut finite_ok = true;
        let mut worst_ratio = 0.0f64;
        let n = 400u32;
        for p in 1..=2 {
            let spec = WatermelonSpec::new(p, n)?;
            for x in [0.8, 1.2, 1.6] {
                let h = (x * (n as f64).sqrt()).ceil() as i64 - 2;
                let diff = (finite_cdf(&spec, h) - limit_cdf_det(&LimitCdfQuery::new(p, x)?)?).abs();
                let bound = 5.0 / (n as f64 * x) * 10.0;
                finite_ok &= diff < bound;
                worst_ratio = worst_ratio.max(diff / bound);
            }
        }
        Ok((
            cross < 1e-9 && monotone && finite_ok,
            format!(
                "cross-form {cross:.2e} (< 1e-9), monotone in range: {monotone}, finite-n worst diff/bound {worst_ratio:.3} (< 1)"
            ),
        ))
    })
}

pub fn sampler() -> Check {
    timed("uniform sampler", || {
        let mut chi_ok = true;
        let mut worst = 0.0f64;
        for p in 1..=2u32 {
            for n in 1..=4u32 {
                let spec = WatermelonSpec::new(p, n)?;
                let all = enumerate_all(&spec)?;
                if all.len() < 2 {
                    continue;
                }
                let draws = 10_000 * all.len() as u64;
                let sample = sample_watermelons(&SamplerConfig::new(spec, 0x5eed + n as u64, draws)?);
                let mut obs = vec![0u64; all.len()];
                for fam in &sample {
                    let k = all.binary_search_by(|x| x.steps.concat().cmp(&fam.steps.concat())).expect("sampled family is enumerated");
                    obs[k] += 1;
                }
                let probs = vec![1.0 / all.len() as f64; all.len()];
                let (stat, df) = chi_square(&obs, &probs);
                let crit = chi_square_critical(df, 1e-3);
                chi_ok &= stat < crit;
                worst = worst.max(stat / crit);
            }
        }
        let cfg = SamplerConfig::new(WatermelonSpec::new(2, 8)?, 99, 1)?;
        let replay = sample_watermelon(&cfg) == sample_watermelon(&cfg);
        let spec = WatermelonSpec::new(1, 100)?;
        let st = empirical_height(&SamplerConfig::new(spec, 2024, 10_000)?);
        let exact = rational_to_f64(&exact_moment(&spec, 1)?);
        let z = (st.sample_mean - exact).abs() / st.std_error();
        Ok((
            chi_ok && replay && z < 3.0,
            format!("worst chi2/critical {worst:.3} (< 1), replay {replay}, mean offset {z:.2} SE (< 3)"),
        ))
    })
}

pub fn g_machinery() -> Check {
    timed("g and G expansions", || {
        let mut worst = 0.0f64;
        let mut cases: Vec<(u32, Vec<u32>, f64)> = vec![
            (0, vec![0], 100.0),
            (1, vec![1], 64.0),
            (0, vec![0, 0], 100.0),
            (1, vec![0, 0], 400.0),
        ];
        for p in 1..=2 {
            for a in vectors_up_to(p, 2) {
                for k in 0..=3 {
                    for n in [100.0, 400.0] {
                        cases.push((k, a.clone(), n));
                    }
                }
            }
        }
        for (k, a, n) in &cases {
            let d = (g_exact(*k, a, *n, 1e-16)? - g_asymptotic(*k, a, *n, DEFAULT_TOL)?).abs();
            worst = worst.max(d);
        }
        let mut gid = 0.0f64;
        let tol = 1e-12;
        for (s, a, n) in [(1u32, vec![0u32], 50.0), (2, vec![0], 50.0), (3, vec![1, 0], 36.0), (4, vec![1, 1], 49.0)] {
            let e = G_exact(s, &a, n, tol)?;
            let f = G_from_g(s, &a, n, tol)?;
            gid = gid.max((e - f).abs() / e.abs().max(1.0));
        }
        Ok((
            worst < 1e-6 && gid < 2.0 * tol,
            format!(
                "max |g_exact - g_asymptotic| {worst:.2e} (< 1e-6) over {} cases, G identity {gid:.2e} (< {:.0e})",
                cases.len(),
                2.0 * tol
            ),
        ))
    })
}
