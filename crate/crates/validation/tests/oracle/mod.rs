//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls the library's transform, detector or reconstruction.
//! Only filter taps and simulated data come from the library.

#![allow(dead_code)]

/// Filter with `2^(level-1) - 1` zeros between taps, built by hand.
pub fn zero_inserted(taps: &[f64], level: usize) -> Vec<f64> {
    let gap = 1usize << (level - 1);
    let mut out = vec![0.0; (taps.len() - 1) * gap + 1];
    for (k, t) in taps.iter().enumerate() {
        out[k * gap] = *t;
    }
    out
}

/// `y[n] = sum_m f[m] x[(n - m) mod N]`, straight from the definition.
pub fn circ_conv(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len() as isize;
    (0..n)
        .map(|i| f.iter().enumerate().map(|(m, fm)| fm * x[(i - m as isize).rem_euclid(n) as usize]).sum())
        .collect()
}

/// `y[n] = sum_m f[m] x[(n + m) mod N]`, the adjoint of [`circ_conv`].
pub fn circ_corr(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|i| f.iter().enumerate().map(|(m, fm)| fm * x[(i + m) % n]).sum()).collect()
}

pub fn linear_conv(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Level-by-level definition with explicitly zero-inserted filters:
/// returns `(approximations, details)`, index 0 = level 1.
pub fn direct_swt(x: &[f64], h: &[f64], g: &[f64], levels: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut approx = Vec::new();
    let mut detail = Vec::new();
    let mut prev = x.to_vec();
    for j in 1..=levels {
        let a = circ_conv(&prev, &zero_inserted(h, j));
        detail.push(circ_conv(&prev, &zero_inserted(g, j)));
        approx.push(a.clone());
        prev = a;
    }
    (approx, detail)
}

/// Single-filter equivalents of level `j`: `(approximation, detail)`.
pub fn equivalent(h: &[f64], g: &[f64], j: usize) -> (Vec<f64>, Vec<f64>) {
    let mut low = vec![1.0];
    for i in 1..j {
        low = linear_conv(&low, &zero_inserted(h, i));
    }
    (linear_conv(&low, &zero_inserted(h, j)), linear_conv(&low, &zero_inserted(g, j)))
}

fn centroid(f: &[f64]) -> usize {
    let e: f64 = f.iter().map(|v| v * v).sum();
    (f.iter().enumerate().map(|(k, v)| k as f64 * v * v).sum::<f64>() / e).round() as usize
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Mask duration (ms) and scale count for the tabulated targets.
pub fn geometry(freq: f64) -> (f64, usize) {
    if freq == 45.0 {
        (200.0, 3)
    } else if freq == 55.0 {
        (180.0, 2)
    } else if freq == 85.0 {
        (150.0, 2)
    } else {
        (9000.0 / freq, 2)
    }
}

/// Home level of `freq`, then finer levels, then coarser ones.
pub fn scale_set(freq: f64, fs: f64, count: usize, levels: usize) -> Vec<usize> {
    let home = (1..=levels).find(|j| freq >= fs / 2f64.powi(*j as i32 + 1)).expect("target inside the levels");
    let mut order: Vec<usize> = (1..=home).rev().collect();
    order.extend(home + 1..=levels);
    let mut s: Vec<usize> = order.into_iter().take(count).collect();
    s.sort_unstable();
    s
}

/// Reference separation: direct per-level coefficients from equivalent
/// filters, lag-aligned energy argmax, rectangular mask, and the
/// frame-adjoint reconstruction
/// `x = sum_j 2^-j (W_j corr g_j) + 2^-J (C_J corr h_J)`.
/// Returns `(oscillatory, transient, centre)`.
pub fn reference_separate(x: &[f64], freq: f64, fs: f64, h: &[f64], g: &[f64], levels: usize) -> (Vec<f64>, Vec<f64>, usize) {
    let n = x.len();
    let (ms, count) = geometry(freq);
    let len = (ms * fs / 1000.0).round() as usize;
    let scales = scale_set(freq, fs, count, levels);

    let eq: Vec<(Vec<f64>, Vec<f64>)> = (1..=levels).map(|j| equivalent(h, g, j)).collect();
    let details: Vec<Vec<f64>> = eq.iter().map(|(_, gj)| circ_conv(x, gj)).collect();
    let deepest = circ_conv(x, &eq[levels - 1].0);

    let mut e = vec![0.0; n];
    for &j in &scales {
        let lag = centroid(&eq[j - 1].1);
        for t in 0..n {
            e[t] += details[j - 1][(t + lag) % n].powi(2);
        }
    }
    let back = len / 2;
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..n {
        let s: f64 = (0..len).map(|k| e[(i + k + n * 2 - back) % n]).sum::<f64>() / len as f64;
        if s > best.1 {
            best = (i, s);
        }
    }
    let centre = best.0;
    let start = centre.saturating_sub(len / 2).min(n - len);
    let inside = |i: usize, lag: usize| {
        let t = (i + n - lag % n) % n;
        t >= start && t < start + len
    };

    let mut total = vec![0.0; n];
    let mut osc = vec![0.0; n];
    for j in 1..=levels {
        let gj = &eq[j - 1].1;
        let lag = centroid(gj);
        let w = &details[j - 1];
        let kept: Vec<f64> =
            (0..n).map(|i| if scales.contains(&j) && inside(i, lag) { w[i] } else { 0.0 }).collect();
        let weight = 0.5f64.powi(j as i32);
        for (o, v) in osc.iter_mut().zip(circ_corr(&kept, gj)) {
            *o += weight * v;
        }
        for (o, v) in total.iter_mut().zip(circ_corr(w, gj)) {
            *o += weight * v;
        }
    }
    let hj = &eq[levels - 1].0;
    let lag = centroid(hj);
    let kept: Vec<f64> = (0..n).map(|i| if inside(i, lag) { deepest[i] } else { 0.0 }).collect();
    let weight = 0.5f64.powi(levels as i32);
    for (o, v) in osc.iter_mut().zip(circ_corr(&kept, hj)) {
        *o += weight * v;
    }
    for (o, v) in total.iter_mut().zip(circ_corr(&deepest, hj)) {
        *o += weight * v;
    }
    let trans = total.iter().zip(&osc).map(|(t, o)| t - o).collect();
    (osc, trans, centre)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
