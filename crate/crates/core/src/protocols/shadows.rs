use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cell_rng, EstimateResult, Mode};
use crate::histstate::HistoryState;
use crate::qcore::{apply_controlled, CMatrix, C64};
use crate::{Error, Result};

/// Bootstrap resamples used for the shadow standard error.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Stream offset separating bootstrap draws from snapshot draws.
const BOOTSTRAP_STREAM: u64 = 1 << 62;

/// One randomized measurement of the clock register.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShadowSnapshot {
    /// Index into [`clifford_group`] per clock qubit.
    pub unitary_choice: Vec<u8>,
    pub outcome_bits: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ShadowEstimator {
    UStatistic,
    MedianOfMeans { batches: usize },
}

/// The 24 single-qubit Cliffords modulo global phase, generated from `H` and `S`.
pub fn clifford_group() -> &'static [CMatrix] {
    static GROUP: OnceLock<Vec<CMatrix>> = OnceLock::new();
    GROUP.get_or_init(|| {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let h = CMatrix::from_row_slice(2, 2, &[s, s, s, -s]);
        let sg = CMatrix::from_row_slice(2, 2, &[one, z, z, C64::new(0.0, 1.0)]);
        let key = |m: &CMatrix| -> Vec<i64> {
            let pivot = m.iter().find(|v| v.norm() > 1e-9).copied().unwrap();
            let phase = pivot.conj() / pivot.norm();
            m.iter()
                .flat_map(|v| {
                    let w = v * phase;
                    [(w.re * 1e8).round() as i64, (w.im * 1e8).round() as i64]
                })
                .collect()
        };
        let mut group = vec![CMatrix::identity(2, 2)];
        let mut seen = vec![key(&group[0])];
        let mut frontier = 0;
        while frontier < group.len() {
            let g = group[frontier].clone();
            frontier += 1;
            for gen in [&h, &sg] {
                let next = gen * &g;
                let k = key(&next);
                if !seen.contains(&k) {
                    seen.push(k);
                    group.push(next);
                }
            }
        }
        group
    })
}

fn stabilizer_states() -> [[C64; 2]; 6] {
    let s = FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| C64::new(re, im);
    [
        [c(1.0, 0.0), c(0.0, 0.0)],
        [c(0.0, 0.0), c(1.0, 0.0)],
        [c(s, 0.0), c(s, 0.0)],
        [c(s, 0.0), c(-s, 0.0)],
        [c(s, 0.0), c(0.0, s)],
        [c(s, 0.0), c(0.0, -s)],
    ]
}

/// Stabilizer state `U^dagger |b>` seen by one measured qubit, as an index into
/// the six single-qubit stabilizer states.
fn snapshot_label(choice: u8, bit: u8) -> u8 {
    let u = &clifford_group()[choice as usize];
    let v = [u[(bit as usize, 0)].conj(), u[(bit as usize, 1)].conj()];
    let states = stabilizer_states();
    (0..6)
        .max_by(|&a, &b| {
            let ov = |k: usize| (states[k][0].conj() * v[0] + states[k][1].conj() * v[1]).norm_sqr();
            ov(a).total_cmp(&ov(b))
        })
        .unwrap() as u8
}

/// Per-qubit shadow kernel `Tr[(3A - I)(3B - I)] = 9 |<a|b>|^2 - 4`.
fn qubit_kernel(a: u8, b: u8) -> f64 {
    let states = stabilizer_states();
    let (x, y) = (&states[a as usize], &states[b as usize]);
    let ov = (x[0].conj() * y[0] + x[1].conj() * y[1]).norm_sqr();
    9.0 * ov - 4.0
}

/// Draws `k` clock-register snapshots; snapshot `i` uses random stream `i`.
pub fn take_snapshots(psi: &HistoryState, k: usize, seed: u64) -> Result<Vec<ShadowSnapshot>> {
    let m = psi.m;
    let group = clifford_group();
    let clocks: Vec<usize> = (0..m).collect();
    (0..k)
        .into_par_iter()
        .map(|i| {
            let mut rng = cell_rng(seed, i as u64);
            let choice: Vec<u8> = (0..m).map(|_| rng.random_range(0..group.len()) as u8).collect();
            let mut s = psi.state.clone();
            for (q, &c) in choice.iter().enumerate() {
                apply_controlled(&mut s, &[], &[q], &group[c as usize])?;
            }
            let probs = s.marginal_probabilities(&clocks)?;
            let dist = WeightedIndex::new(probs.iter().map(|p| p.max(0.0)))
                .map_err(|e| Error::Validation(format!("clock distribution: {e}")))?;
            let outcome = dist.sample(&mut rng);
            let bits = (0..m).map(|q| ((outcome >> (m - 1 - q)) & 1) as u8).collect();
            Ok(ShadowSnapshot { unitary_choice: choice, outcome_bits: bits })
        })
        .collect()
}

/// Snapshots grouped into classes of identical per-qubit stabilizer labels,
/// with the class-by-class kernel matrix.
struct Compressed {
    class_of: Vec<usize>,
    kernel: Vec<f64>,
    classes: usize,
}

fn compress(snaps: &[ShadowSnapshot]) -> Compressed {
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut labels: Vec<Vec<u8>> = Vec::new();
    let class_of = snaps
        .iter()
        .map(|s| {
            let l: Vec<u8> = s
                .unitary_choice
                .iter()
                .zip(&s.outcome_bits)
                .map(|(&c, &b)| snapshot_label(c, b))
                .collect();
            *index.entry(l.clone()).or_insert_with(|| {
                labels.push(l);
                labels.len() - 1
            })
        })
        .collect();
    let c = labels.len();
    let mut kernel = vec![0.0; c * c];
    for a in 0..c {
        for b in 0..c {
            kernel[a * c + b] = labels[a].iter().zip(&labels[b]).map(|(&x, &y)| qubit_kernel(x, y)).product();
        }
    }
    Compressed { class_of, kernel, classes: c }
}

/// Weighted U-statistic `sum_{i != j} w_i w_j G_ij / sum_{i != j} w_i w_j`.
fn weighted_u(comp: &Compressed, weights: &[f64]) -> f64 {
    let c = comp.classes;
    let mut mass = vec![0.0; c];
    let mut diag = 0.0;
    let mut sq = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        let a = comp.class_of[i];
        mass[a] += w;
        diag += w * w * comp.kernel[a * c + a];
        sq += w * w;
    }
    let total: f64 = weights.iter().sum();
    let mut quad = 0.0;
    for a in 0..c {
        if mass[a] == 0.0 {
            continue;
        }
        let row = &comp.kernel[a * c..(a + 1) * c];
        quad += mass[a] * row.iter().zip(&mass).map(|(g, m)| g * m).sum::<f64>();
    }
    (quad - diag) / (total * total - sq)
}

fn u_statistic(snaps: &[ShadowSnapshot]) -> (f64, Compressed) {
    let comp = compress(snaps);
    let ones = vec![1.0; snaps.len()];
    (weighted_u(&comp, &ones), comp)
}

/// Purity estimate and standard error from recorded snapshots.
pub fn shadow_purity(snaps: &[ShadowSnapshot], estimator: ShadowEstimator, seed: u64) -> Result<(f64, f64)> {
    let k = snaps.len();
    if k < 2 {
        return Err(Error::Invalid("shadow estimate needs at least two snapshots".into()));
    }
    match estimator {
        ShadowEstimator::UStatistic => {
            let (value, comp) = u_statistic(snaps);
            let boots: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
                .into_par_iter()
                .map(|b| {
                    let mut rng = cell_rng(seed, BOOTSTRAP_STREAM + b as u64);
                    let mut w = vec![0.0; k];
                    for _ in 0..k {
                        w[rng.random_range(0..k)] += 1.0;
                    }
                    weighted_u(&comp, &w)
                })
                .collect();
            Ok((value, std_dev(&boots)))
        }
        ShadowEstimator::MedianOfMeans { batches } => {
            if batches == 0 || k / batches < 2 {
                return Err(Error::Invalid(format!(
                    "{batches} batches leave fewer than two snapshots per batch"
                )));
            }
            let size = k / batches;
            let mut vals: Vec<f64> = (0..batches)
                .map(|b| u_statistic(&snaps[b * size..(b + 1) * size]).0)
                .collect();
            let spread = std_dev(&vals) / (batches as f64).sqrt();
            vals.sort_by(|a, b| a.total_cmp(b));
            let median = if batches % 2 == 1 {
                vals[batches / 2]
            } else {
                0.5 * (vals[batches / 2 - 1] + vals[batches / 2])
            };
            Ok((median, spread))
        }
    }
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Clock purity from `k` random single-qubit Clifford snapshots, U-statistic
/// estimator with bootstrap standard error.
pub fn estimate_purity_shadows(psi: &HistoryState, k: usize, seed: u64) -> Result<EstimateResult> {
    estimate_purity_shadows_with(psi, k, seed, ShadowEstimator::UStatistic)
}

pub fn estimate_purity_shadows_with(
    psi: &HistoryState,
    k: usize,
    seed: u64,
    estimator: ShadowEstimator,
) -> Result<EstimateResult> {
    if k < 2 {
        return Err(Error::Invalid("shadow estimate needs at least two snapshots".into()));
    }
    let snaps = take_snapshots(psi, k, seed)?;
    let (value, stderr) = shadow_purity(&snaps, estimator, seed)?;
    Ok(EstimateResult {
        value: C64::new(value, 0.0),
        stderr,
        shots_used: k as u64,
        mode: Mode::Sampled,
        seed,
    })
}
