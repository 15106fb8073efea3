//! Explicit path families and the brute-force enumeration oracle.

use crate::exact::{count_total, WatermelonSpec};
use crate::error::{MelonError, Result};
use num_traits::ToPrimitive;

/// Largest ensemble `enumerate_all` will materialise.
pub const ENUMERATION_LIMIT: usize = 2_000_000;

/// A p-watermelon given by the step (+1 / -1) of each branch at each time.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathFamily {
    pub spec: WatermelonSpec,
    /// `steps[i][tau]` is the step of branch `i` between times `tau` and `tau+1`.
    pub steps: Vec<Vec<i8>>,
}

impl PathFamily {
    pub fn new(spec: WatermelonSpec, steps: Vec<Vec<i8>>) -> Result<Self> {
        let fam = Self { spec, steps };
        fam.validate()?;
        Ok(fam)
    }

    /// Branch heights at every time, `heights[tau][i]`.
    pub fn heights(&self) -> Vec<Vec<i64>> {
        let p = self.spec.p() as usize;
        let len = 2 * self.spec.n() as usize;
        let mut pos: Vec<i64> = (0..p as i64).map(|i| 2 * i).collect();
        let mut out = Vec::with_capacity(len + 1);
        out.push(pos.clone());
        for tau in 0..len {
            for (i, x) in pos.iter_mut().enumerate() {
                *x += self.steps[i][tau] as i64;
            }
            out.push(pos.clone());
        }
        out
    }

    /// Check shape, step alphabet, wall, nonintersection and endpoints.
    pub fn validate(&self) -> Result<()> {
        let p = self.spec.p() as usize;
        let len = 2 * self.spec.n() as usize;
        if self.steps.len() != p || self.steps.iter().any(|r| r.len() != len) {
            return Err(MelonError::invalid(format!(
                "step matrix must be {p} x {len}"
            )));
        }
        if self.steps.iter().flatten().any(|&s| s != 1 && s != -1) {
            return Err(MelonError::invalid("steps must be +1 or -1"));
        }
        let heights = self.heights();
        for (tau, hs) in heights.iter().enumerate() {
            if hs[0] < 0 {
                return Err(MelonError::invalid(format!("branch 0 crosses the wall at time {tau}")));
            }
            if hs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(MelonError::invalid(format!("branches touch at time {tau}")));
            }
        }
        let last = heights.last().unwrap();
        if last.iter().enumerate().any(|(i, &h)| h != 2 * i as i64) {
            return Err(MelonError::invalid("branches do not return to their start"));
        }
        Ok(())
    }
}

/// Height of a watermelon: the maximum over time of the top branch.
pub fn compute_height(fam: &PathFamily) -> Result<u64> {
    fam.validate()?;
    let top = fam.spec.p() as usize - 1;
    Ok(fam
        .heights()
        .iter()
        .map(|hs| hs[top])
        .max()
        .unwrap() as u64)
}

/// Every watermelon of the ensemble, in lexicographic order of the step
/// matrix flattened branch by branch (with -1 < +1).
pub fn enumerate_all(spec: &WatermelonSpec) -> Result<Vec<PathFamily>> {
    let total = count_total(spec).value;
    match total.to_usize() {
        Some(t) if t <= ENUMERATION_LIMIT => {}
        _ => {
            return Err(MelonError::ResourceLimit(format!(
                "{total} watermelons exceed the enumeration limit of {ENUMERATION_LIMIT}"
            )))
        }
    }
    let p = spec.p() as usize;
    let len = 2 * spec.n() as usize;
    let mut out = Vec::new();
    let mut steps = vec![vec![0i8; len]; p];
    let mut pos: Vec<i64> = (0..p as i64).map(|i| 2 * i).collect();
    walk(0, len, &mut pos, &mut steps, &mut |steps| {
        out.push(PathFamily {
            spec: *spec,
            steps: steps.to_vec(),
        })
    });
    out.sort_by_key(|a| a.steps.concat());
    Ok(out)
}

fn walk(
    tau: usize,
    len: usize,
    pos: &mut Vec<i64>,
    steps: &mut Vec<Vec<i8>>,
    emit: &mut dyn FnMut(&[Vec<i8>]),
) {
    if tau == len {
        emit(steps);
        return;
    }
    let p = pos.len();
    let remaining = (len - tau - 1) as i64;
    for mask in 0u32..(1u32 << p) {
        let next: Vec<i64> = (0..p)
            .map(|i| pos[i] + if mask & (1 << i) != 0 { 1 } else { -1 })
            .collect();
        if next[0] < 0 || next.windows(2).any(|w| w[0] >= w[1]) {
            continue;
        }
        // must still be able to come back down to 2i
        if next
            .iter()
            .enumerate()
            .any(|(i, &x)| (x - 2 * i as i64).abs() > remaining)
        {
            continue;
        }
        for i in 0..p {
            steps[i][tau] = if mask & (1 << i) != 0 { 1 } else { -1 };
        }
        let saved = std::mem::replace(pos, next);
        walk(tau + 1, len, pos, steps, emit);
        *pos = saved;
    }
}
