//! Reference implementations written from the definitions, sharing no code
//! with the library beyond filter coefficients and public data types.
#![allow(dead_code)]

use wfs_core::FilterBank;

// ---------------------------------------------------------------- wavelets

/// Symmetric extension via an explicit mirrored period `x ++ reverse(x)`.
fn extended(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len() as i64;
    let period: Vec<f64> = x.iter().chain(x.iter().rev()).copied().collect();
    (-(pad as i64)..n + pad as i64)
        .map(|i| period[i.rem_euclid(2 * n) as usize])
        .collect()
}

/// Full linear convolution, length `a.len() + b.len() - 1`.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &u) in a.iter().enumerate() {
        for (j, &v) in b.iter().enumerate() {
            out[i + j] += u * v;
        }
    }
    out
}

/// One analysis step: pad by `L-1`, convolve, keep every second sample.
pub fn analysis_step(x: &[f64], filter: &[f64]) -> Vec<f64> {
    let l = filter.len();
    let full = convolve(&extended(x, l - 1), filter);
    let out_len = (x.len() + l - 1) / 2;
    (0..out_len).map(|k| full[2 * k + l]).collect()
}

/// One synthesis step: zero-insertion upsampling, convolution, central crop.
pub fn synthesis_step(
    approx: &[f64],
    detail: &[f64],
    rec_lo: &[f64],
    rec_hi: &[f64],
    target: usize,
) -> Vec<f64> {
    let l = rec_lo.len();
    let upsample = |c: &[f64]| {
        let mut u = vec![0.0; 2 * c.len() - 1];
        for (k, &v) in c.iter().enumerate() {
            u[2 * k] = v;
        }
        u
    };
    let za = convolve(&upsample(approx), rec_lo);
    let zd = convolve(&upsample(detail), rec_hi);
    (0..target)
        .map(|n| {
            let i = n + l - 2;
            za.get(i).copied().unwrap_or(0.0) + zd.get(i).copied().unwrap_or(0.0)
        })
        .collect()
}

pub struct OracleBank {
    pub dec_lo: Vec<f64>,
    pub dec_hi: Vec<f64>,
    pub rec_lo: Vec<f64>,
    pub rec_hi: Vec<f64>,
}

impl OracleBank {
    pub fn from(bank: &FilterBank<f64>) -> Self {
        let l = bank.frame_len();
        Self {
            dec_lo: bank.dec_lo().padded(l),
            dec_hi: bank.dec_hi().padded(l),
            rec_lo: bank.rec_lo().padded(l),
            rec_hi: bank.rec_hi().padded(l),
        }
    }
}

/// `(approx, details with d_J first, lengths)`.
pub fn wavedec(x: &[f64], bank: &OracleBank, level: usize) -> (Vec<f64>, Vec<Vec<f64>>, Vec<usize>) {
    let mut lengths = vec![x.len()];
    let mut a = x.to_vec();
    let mut details = Vec::new();
    for _ in 0..level {
        let d = analysis_step(&a, &bank.dec_hi);
        a = analysis_step(&a, &bank.dec_lo);
        lengths.push(a.len());
        details.push(d);
    }
    details.reverse();
    (a, details, lengths)
}

pub fn waverec(approx: &[f64], details: &[Vec<f64>], lengths: &[usize], bank: &OracleBank) -> Vec<f64> {
    let level = details.len();
    let mut cur = approx.to_vec();
    for (i, d) in details.iter().enumerate() {
        let j = level - i;
        cur = synthesis_step(&cur, d, &bank.rec_lo, &bank.rec_hi, lengths[j - 1]);
    }
    cur
}

pub fn detail_only(x: &[f64], bank: &OracleBank, level: usize) -> Vec<f64> {
    let (a, mut details, lengths) = wavedec(x, bank, level);
    for d in details.iter_mut().skip(1) {
        d.iter_mut().for_each(|v| *v = 0.0);
    }
    waverec(&vec![0.0; a.len()], &details, &lengths, bank)
}

// ---------------------------------------------------------- peak detection

pub struct OracleCandidate {
    pub index: usize,
    pub height: f64,
    pub prominence: f64,
}

/// Index `t` starts a plateau that rises from the left and falls on the right.
fn starts_peak(c: &[f64], t: usize) -> Option<usize> {
    if t == 0 || t + 1 >= c.len() || c[t - 1] >= c[t] {
        return None;
    }
    let mut end = t;
    while end + 1 < c.len() && c[end + 1] == c[t] {
        end += 1;
    }
    (end + 1 < c.len() && c[end + 1] < c[t]).then_some(end)
}

/// Walk outwards until a strictly higher sample; bases are the minima seen.
fn prominence(c: &[f64], left: usize, right: usize) -> f64 {
    let h = c[left];
    let mut lb = h;
    let mut i = left;
    while i > 0 && c[i - 1] <= h {
        i -= 1;
        lb = lb.min(c[i]);
    }
    let mut rb = h;
    let mut j = right;
    while j + 1 < c.len() && c[j + 1] <= h {
        j += 1;
        rb = rb.min(c[j]);
    }
    h - lb.max(rb)
}

pub fn thresholds(c: &[f64], alpha: f64, beta: f64, floor: usize, fraction: f64) -> (f64, f64, usize) {
    let n = c.len() as f64;
    let mean = c.iter().sum::<f64>() / n;
    let var = c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let max = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = c.iter().cloned().fold(f64::INFINITY, f64::min);
    let delta = floor.max((c.len() as f64 * fraction).floor() as usize);
    (mean + alpha * var.sqrt(), beta * (max - min), delta)
}

pub fn candidates(c: &[f64], tau_h: f64, tau_p: f64) -> Vec<OracleCandidate> {
    (0..c.len())
        .filter_map(|t| {
            let end = starts_peak(c, t)?;
            let p = prominence(c, t, end);
            (c[t] >= tau_h && p >= tau_p).then_some(OracleCandidate {
                index: t,
                height: c[t],
                prominence: p,
            })
        })
        .collect()
}

/// `a` outranks `b` in the suppression order.
fn outranks(a: &OracleCandidate, b: &OracleCandidate) -> bool {
    if a.prominence != b.prominence {
        return a.prominence > b.prominence;
    }
    if a.height != b.height {
        return a.height > b.height;
    }
    a.index < b.index
}

/// Enumerates every subset of candidates and returns the unique one in which
/// each candidate is kept exactly when no kept, higher-ranked candidate lies
/// within `delta` of it.
pub fn detect_exhaustive(c: &[f64], alpha: f64, beta: f64, floor: usize, fraction: f64) -> Vec<usize> {
    let n = c.len();
    if n < 3 {
        return Vec::new();
    }
    let max = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = c.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == min {
        return Vec::new();
    }
    let (tau_h, tau_p, delta) = thresholds(c, alpha, beta, floor, fraction);
    let cands = candidates(c, tau_h, tau_p);
    let k = cands.len();
    let mut solutions = Vec::new();
    for mask in 0u32..(1 << k) {
        let kept = |i: usize| mask & (1 << i) != 0;
        let consistent = (0..k).all(|i| {
            let blocked = (0..k).any(|j| {
                j != i
                    && kept(j)
                    && outranks(&cands[j], &cands[i])
                    && cands[i].index.abs_diff(cands[j].index) < delta
            });
            kept(i) != blocked
        });
        if consistent {
            solutions.push(mask);
        }
    }
    assert_eq!(solutions.len(), 1, "fixed point must be unique for {c:?}");
    let mask = solutions[0];
    let mut out: Vec<usize> = (0..k)
        .filter(|&i| mask & (1 << i) != 0)
        .map(|i| cands[i].index)
        .collect();
    out.sort_unstable();
    out
}

// -------------------------------------------------------------- allocation

/// Floors of `K·softmax`, capped, then single grants sweeping the
/// (fraction, importance, id) order until the target or every cap is met.
pub fn allocate_reference(importance: &[f64], caps: &[usize], k: usize) -> Vec<usize> {
    let m = importance.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = importance.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = e.iter().sum();
    let q: Vec<f64> = e.iter().map(|v| k as f64 * (v / z)).collect();
    let mut budget: Vec<usize> = q
        .iter()
        .zip(caps)
        .map(|(v, &c)| (v.floor() as usize).min(c))
        .collect();
    let frac: Vec<f64> = q.iter().map(|v| v - v.floor()).collect();
    let mut order: Vec<usize> = (0..importance.len()).collect();
    order.sort_by(|&a, &b| {
        frac[b]
            .partial_cmp(&frac[a])
            .unwrap()
            .then(importance[b].partial_cmp(&importance[a]).unwrap())
            .then(a.cmp(&b))
    });
    let target = k.min(caps.iter().sum());
    while budget.iter().sum::<usize>() < target {
        for &i in &order {
            if budget.iter().sum::<usize>() < target && budget[i] < caps[i] {
                budget[i] += 1;
            }
        }
    }
    budget
}

// --------------------------------------------------------------------- MMR

fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (dot / (nu * nv)).clamp(-1.0, 1.0)
}

/// Greedy MMR re-evaluated from scratch at every step. Output in pick order.
pub fn mmr_reference(
    relevance: &[f64],
    rows: &[Vec<f64>],
    start: usize,
    end: usize,
    k: usize,
    lambda: f64,
) -> Vec<usize> {
    if k == 0 {
        return Vec::new();
    }
    let mut first = start;
    for t in start..=end {
        if relevance[t] > relevance[first] {
            first = t;
        }
    }
    let mut chosen = vec![first];
    while chosen.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for t in start..=end {
            if chosen.contains(&t) {
                continue;
            }
            let mut worst = f64::NEG_INFINITY;
            for &s in &chosen {
                worst = worst.max(cosine(&rows[t], &rows[s]));
            }
            let value = lambda * relevance[t] - (1.0 - lambda) * worst;
            match best {
                Some((_, b)) if value <= b => {}
                _ => best = Some((t, value)),
            }
        }
        chosen.push(best.unwrap().0);
    }
    chosen
}

/// Indices of the `k` largest values, ties to the lower index, sorted.
pub fn topk_reference(relevance: &[f64], start: usize, end: usize, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (start..=end).collect();
    idx.sort_by(|&a, &b| relevance[b].partial_cmp(&relevance[a]).unwrap().then(a.cmp(&b)));
    let mut out = idx[..k].to_vec();
    out.sort_unstable();
    out
}
