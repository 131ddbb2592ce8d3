//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::ops::RangeInclusive;

use rand::Rng;

use projsum::evalmetrics::RougeScore;
use projsum::rnn::SentenceInputs;

pub const GRADIENT_EPSILON: f64 = 1e-5;
/// Magnitude below which gradient components are compared absolutely.
pub const GRADIENT_FLOOR: f64 = 1e-6;

pub fn random_tokens(
    rng: &mut impl Rng,
    len: RangeInclusive<usize>,
    alphabet: usize,
) -> Vec<String> {
    let n = rng.gen_range(len);
    (0..n)
        .map(|_| format!("w{}", rng.gen_range(0..alphabet)))
        .collect()
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn score(overlap: usize, cand: usize, reference: usize) -> RougeScore {
    let p = ratio(overlap, cand);
    let r = ratio(overlap, reference);
    let f = if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    };
    RougeScore {
        precision: p,
        recall: r,
        f1: f,
    }
}

/// Lists every n-gram and counts matches by linear scans, clipping each
/// distinct gram at its reference count.
pub fn oracle_rouge_n(cand: &[String], reference: &[String], n: usize) -> RougeScore {
    let grams = |t: &[String]| -> Vec<Vec<String>> {
        if t.len() < n {
            return Vec::new();
        }
        (0..=t.len() - n).map(|i| t[i..i + n].to_vec()).collect()
    };
    let cg = grams(cand);
    let rg = grams(reference);
    let mut seen: Vec<&Vec<String>> = Vec::new();
    let mut overlap = 0;
    for g in &cg {
        if seen.contains(&g) {
            continue;
        }
        seen.push(g);
        let in_cand = cg.iter().filter(|x| *x == g).count();
        let in_ref = rg.iter().filter(|x| *x == g).count();
        overlap += in_cand.min(in_ref);
    }
    score(overlap, cg.len(), rg.len())
}

/// LCS straight from its recursive definition, memoized.
pub fn oracle_lcs(a: &[String], b: &[String]) -> usize {
    fn go(
        a: &[String],
        b: &[String],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(a, b, i + 1, j + 1, memo)
        } else {
            go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// Longest common subsequence by trying every subsequence of `a`, longest
/// first. Exponential; for short inputs only.
pub fn exhaustive_lcs(a: &[String], b: &[String]) -> usize {
    let is_subsequence = |s: &[&String]| {
        let mut it = b.iter();
        s.iter().all(|x| it.any(|y| y == *x))
    };
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let k = mask.count_ones() as usize;
        if k <= best {
            continue;
        }
        let sub: Vec<&String> = (0..a.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| &a[i])
            .collect();
        if is_subsequence(&sub) {
            best = k;
        }
    }
    best
}

pub fn oracle_rouge_l(cand: &[String], reference: &[String]) -> RougeScore {
    score(oracle_lcs(cand, reference), cand.len(), reference.len())
}

/// Central differences of `f` around `x`, one coordinate at a time.
pub fn central_difference(x: &[f64], eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut v = x.to_vec();
    (0..x.len())
        .map(|i| {
            v[i] = x[i] + eps;
            let up = f(&v);
            v[i] = x[i] - eps;
            let down = f(&v);
            v[i] = x[i];
            (up - down) / (2.0 * eps)
        })
        .collect()
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRADIENT_FLOOR)
}

pub fn random_inputs(rng: &mut impl Rng, d_in: usize, n: usize) -> SentenceInputs {
    SentenceInputs {
        embeddings: (0..n)
            .map(|_| (0..d_in).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect(),
        absolute: (0..n)
            .map(|j| {
                if n == 1 {
                    0.0
                } else {
                    j as f64 / (n - 1) as f64
                }
            })
            .collect(),
        relative: (0..n).map(|j| j as f64 / n as f64).collect(),
    }
}
