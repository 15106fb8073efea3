//! Exact uniform sampling of watermelons by sequential completion counts.
//!
//! Draw `k` of a run with seed `s` uses `ChaCha8Rng::seed_from_u64(s)` on
//! stream `k`, so every draw is reproducible on its own and the batch can be
//! split across threads without changing its contents.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF};

use crate::det::det_bareiss;
use crate::error::{MelonError, Result};
use crate::exact::{ballot_count, WatermelonSpec};
use crate::paths::{compute_height, PathFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    pub spec: WatermelonSpec,
    pub seed: u64,
    pub count: u64,
}

impl SamplerConfig {
    pub fn new(spec: WatermelonSpec, seed: u64, count: u64) -> Result<Self> {
        if count == 0 {
            return Err(MelonError::invalid("count must be at least 1"));
        }
        Ok(Self { spec, seed, count })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalStats {
    pub histogram: BTreeMap<u64, u64>,
    pub sample_mean: f64,
    pub sample_var: f64,
    pub count: u64,
}

impl EmpiricalStats {
    pub fn from_heights(heights: &[u64]) -> Self {
        let mut histogram = BTreeMap::new();
        for &h in heights {
            *histogram.entry(h).or_insert(0) += 1;
        }
        let n = heights.len() as f64;
        let mean = heights.iter().map(|&h| h as f64).sum::<f64>() / n;
        let var = if heights.len() > 1 {
            heights.iter().map(|&h| (h as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            histogram,
            sample_mean: mean,
            sample_var: var,
            count: heights.len() as u64,
        }
    }

    /// Standard error of the sample mean.
    pub fn std_error(&self) -> f64 {
        (self.sample_var / self.count as f64).sqrt()
    }
}

/// Number of ways to finish a watermelon from `positions` at time `tau`:
/// `det(ballot_count(positions_i, 2j, 2n - tau))`.
pub fn completions(positions: &[i64], tau: u64, spec: &WatermelonSpec) -> Result<BigUint> {
    let len = 2 * spec.n() as u64;
    if tau > len {
        return Err(MelonError::invalid(format!("time {tau} beyond length {len}")));
    }
    if positions.len() != spec.p() as usize {
        return Err(MelonError::invalid("one position per branch expected"));
    }
    if positions.windows(2).any(|w| w[0] >= w[1]) || positions.iter().any(|&x| x < 0) {
        return Ok(BigUint::zero());
    }
    let rest = len - tau;
    let m: Vec<Vec<BigInt>> = positions
        .iter()
        .map(|&x| {
            (0..positions.len() as i64)
                .map(|j| BigInt::from(ballot_count(x, 2 * j, rest)))
                .collect()
        })
        .collect();
    let d = det_bareiss(&m)?;
    Ok(d.to_biguint().unwrap_or_default())
}

struct Completions {
    spec: WatermelonSpec,
    memo: HashMap<(u64, Vec<i64>), BigUint>,
}

impl Completions {
    fn new(spec: WatermelonSpec) -> Self {
        Self {
            spec,
            memo: HashMap::new(),
        }
    }

    fn get(&mut self, tau: u64, pos: &[i64]) -> BigUint {
        if let Some(v) = self.memo.get(&(tau, pos.to_vec())) {
            return v.clone();
        }
        let v = completions(pos, tau, &self.spec).expect("positions and time are in range");
        self.memo.insert((tau, pos.to_vec()), v.clone());
        v
    }
}

/// Uniform integer in `[0, bound)` by rejection from 64-bit blocks.
fn uniform_below(bound: &BigUint, rng: &mut impl RngCore) -> BigUint {
    let bits = bound.bits();
    let words = bits.div_ceil(64) as usize;
    let spare = words as u64 * 64 - bits;
    loop {
        let mut digits: Vec<u64> = (0..words).map(|_| rng.next_u64()).collect();
        if let Some(top) = digits.last_mut() {
            *top >>= spare;
        }
        let v = BigUint::from_slice(
            &digits
                .iter()
                .flat_map(|d| [*d as u32, (d >> 32) as u32])
                .collect::<Vec<_>>(),
        );
        if &v < bound {
            return v;
        }
    }
}

fn draw_one(spec: &WatermelonSpec, seed: u64, index: u64, memo: &mut Completions) -> PathFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let p = spec.p() as usize;
    let len = 2 * spec.n() as u64;
    let mut pos: Vec<i64> = (0..p as i64).map(|i| 2 * i).collect();
    let mut steps = vec![Vec::with_capacity(len as usize); p];
    for tau in 0..len {
        let moves: Vec<(u32, Vec<i64>, BigUint)> = (0u32..1 << p)
            .filter_map(|mask| {
                let next: Vec<i64> = (0..p)
                    .map(|i| pos[i] + if mask & (1 << i) != 0 { 1 } else { -1 })
                    .collect();
                let w = memo.get(tau + 1, &next);
                (!w.is_zero()).then_some((mask, next, w))
            })
            .collect();
        let total: BigUint = moves.iter().map(|m| &m.2).sum();
        debug_assert_eq!(total, memo.get(tau, &pos));
        let mut u = uniform_below(&total, &mut rng);
        let mut pick = moves.len() - 1;
        for (k, (_, _, w)) in moves.iter().enumerate() {
            if &u < w {
                pick = k;
                break;
            }
            u -= w;
        }
        let (mask, next, _) = &moves[pick];
        for (i, row) in steps.iter_mut().enumerate() {
            row.push(if mask & (1 << i) != 0 { 1 } else { -1 });
        }
        pos.clone_from(next);
    }
    PathFamily {
        spec: *spec,
        steps,
    }
}

/// Worker count from `MELON_THREADS`, `None` meaning the rayon default.
fn thread_cap() -> Option<usize> {
    std::env::var("MELON_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match thread_cap().and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// All `cfg.count` draws, in draw-index order.
pub fn sample_watermelons(cfg: &SamplerConfig) -> Vec<PathFamily> {
    let spec = cfg.spec;
    with_pool(|| {
        (0..cfg.count)
            .into_par_iter()
            .map_init(|| Completions::new(spec), |memo, k| draw_one(&spec, cfg.seed, k, memo))
            .collect()
    })
}

/// The first draw of the run described by `cfg`.
pub fn sample_watermelon(cfg: &SamplerConfig) -> PathFamily {
    draw_one(&cfg.spec, cfg.seed, 0, &mut Completions::new(cfg.spec))
}

/// Height statistics over `cfg.count` independent uniform draws.
pub fn empirical_height(cfg: &SamplerConfig) -> EmpiricalStats {
    let spec = cfg.spec;
    let heights: Vec<u64> = with_pool(|| {
        (0..cfg.count)
            .into_par_iter()
            .map_init(
                || Completions::new(spec),
                |memo, k| compute_height(&draw_one(&spec, cfg.seed, k, memo)).expect("sampled families are valid"),
            )
            .collect()
    });
    EmpiricalStats::from_heights(&heights)
}

/// Pearson statistic and degrees of freedom for observed counts against
/// cell probabilities (cells with zero probability are skipped).
pub fn chi_square(observed: &[u64], probs: &[f64]) -> (f64, usize) {
    let n: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &q) in observed.iter().zip(probs) {
        if q > 0.0 {
            let e = q * n as f64;
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    (stat, cells.saturating_sub(1))
}

/// Upper `alpha` quantile of the chi-square law with `df` degrees of freedom.
pub fn chi_square_critical(df: usize, alpha: f64) -> f64 {
    let law = ChiSquared::new(df.max(1) as f64).expect("positive degrees of freedom");
    // statrs bisects to about 1e-5; polish with Newton on the upper tail
    let mut x = law.inverse_cdf(1.0 - alpha);
    for _ in 0..4 {
        let step = (law.sf(x) - alpha) / law.pdf(x);
        x += step;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{count_total, exact_moment, height_pmf, rational_to_f64};
    use crate::paths::enumerate_all;
    use proptest::prelude::*;

    fn spec(p: u32, n: u32) -> WatermelonSpec {
        WatermelonSpec::new(p, n).unwrap()
    }

    #[test]
    fn completion_examples() {
        for (p, n) in [(1, 5), (2, 4), (3, 3)] {
            let s = spec(p, n);
            let start: Vec<i64> = (0..p as i64).map(|i| 2 * i).collect();
            assert_eq!(completions(&start, 0, &s).unwrap(), count_total(&s).value);
            assert_eq!(completions(&start, 2 * n as u64, &s).unwrap(), BigUint::from(1u32));
        }
        assert_eq!(completions(&[1, 3], 1, &spec(2, 2)).unwrap(), BigUint::from(3u32));
        assert!(completions(&[0], 9, &spec(1, 2)).is_err());
    }

    #[test]
    fn config_rejects_zero_count() {
        assert!(SamplerConfig::new(spec(1, 2), 0, 0).is_err());
    }

    #[test]
    fn unique_watermelon_always_drawn() {
        let s = spec(2, 1);
        let only = enumerate_all(&s).unwrap().remove(0);
        for seed in 0..20 {
            assert_eq!(sample_watermelon(&SamplerConfig::new(s, seed, 1).unwrap()), only);
        }
    }

    #[test]
    fn fixed_seed_replays() {
        let cfg = SamplerConfig::new(spec(1, 3), 42, 1).unwrap();
        assert_eq!(sample_watermelon(&cfg), sample_watermelon(&cfg));
        let cfg = SamplerConfig::new(spec(2, 6), 7, 64).unwrap();
        assert_eq!(sample_watermelons(&cfg), sample_watermelons(&cfg));
        assert_eq!(empirical_height(&cfg), empirical_height(&cfg));
    }

    #[test]
    fn dyck_paths_equally_likely() {
        let s = spec(1, 3);
        let all = enumerate_all(&s).unwrap();
        let draws = sample_watermelons(&SamplerConfig::new(s, 1, 50_000).unwrap());
        for fam in &all {
            let f = draws.iter().filter(|d| *d == fam).count() as f64 / 50_000.0;
            assert!((f - 0.2).abs() < 0.01, "{f}");
        }
    }

    #[test]
    fn height_histogram_examples() {
        let st = empirical_height(&SamplerConfig::new(spec(1, 2), 3, 10_000).unwrap());
        assert_eq!(st.histogram.values().sum::<u64>(), 10_000);
        assert!((st.histogram[&1] as f64 / 1e4 - 0.5).abs() < 0.02);
        assert!((st.histogram[&2] as f64 / 1e4 - 0.5).abs() < 0.02);

        let s = spec(2, 3);
        let st = empirical_height(&SamplerConfig::new(s, 5, 20_000).unwrap());
        let pmf = height_pmf(&s);
        let hs: Vec<u64> = pmf.counts.keys().copied().collect();
        let obs: Vec<u64> = hs.iter().map(|h| *st.histogram.get(h).unwrap_or(&0)).collect();
        let probs: Vec<f64> = hs.iter().map(|&h| rational_to_f64(&pmf.probability(h))).collect();
        let (stat, df) = chi_square(&obs, &probs);
        assert!(stat < chi_square_critical(df, 1e-3), "{stat} df={df}");
    }

    #[test]
    fn mean_height_within_three_standard_errors() {
        let s = spec(1, 100);
        let st = empirical_height(&SamplerConfig::new(s, 2024, 10_000).unwrap());
        let exact = rational_to_f64(&exact_moment(&s, 1).unwrap());
        assert!((st.sample_mean - exact).abs() < 3.0 * st.std_error());
    }

    #[test]
    fn chi_square_helpers() {
        let (stat, df) = chi_square(&[10, 10, 0], &[0.5, 0.5, 0.0]);
        assert_eq!((stat, df), (0.0, 1));
        let c = chi_square_critical(1, 0.05);
        assert!((c - 3.841458820694124).abs() < 1e-9, "{c}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn sampled_families_are_valid(p in 1u32..=3, n in 0u32..=12, seed in any::<u64>()) {
            let s = spec(p, n);
            let fam = sample_watermelon(&SamplerConfig::new(s, seed, 1).unwrap());
            prop_assert!(fam.validate().is_ok());
        }

        #[test]
        fn move_weights_sum_to_completions(p in 1u32..=3, n in 1u32..=10, seed in any::<u64>()) {
            let s = spec(p, n);
            let fam = sample_watermelon(&SamplerConfig::new(s, seed, 1).unwrap());
            for (tau, pos) in fam.heights().iter().enumerate().take(2 * n as usize) {
                let mut sum = BigUint::zero();
                for mask in 0u32..1 << p {
                    let next: Vec<i64> = (0..p as usize)
                        .map(|i| pos[i] + if mask & (1 << i) != 0 { 1 } else { -1 })
                        .collect();
                    sum += completions(&next, tau as u64 + 1, &s).unwrap();
                }
                prop_assert_eq!(sum, completions(pos, tau as u64, &s).unwrap());
            }
        }
    }
}
