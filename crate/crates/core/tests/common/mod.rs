//! Independent oracles and random instance generators shared by the
//! integration tests and the acceptance suite. Nothing here calls the
//! library's norms, covers or search code.

#![allow(dead_code)]

use rand::Rng;
use ratelearn::losses::FunctionClass;
use ratelearn::measures::JointPmf;

/// Random pmf from normalized exponentials; each cell is zeroed with
/// probability `zero_prob`.
pub fn random_pmf<R: Rng>(rng: &mut R, xs: usize, ys: usize, zero_prob: f64) -> JointPmf {
    loop {
        let w: Vec<f64> = (0..xs * ys)
            .map(|_| {
                if rng.gen::<f64>() < zero_prob {
                    0.0
                } else {
                    -rng.gen::<f64>().max(1e-300).ln()
                }
            })
            .collect();
        let s: f64 = w.iter().sum();
        if s <= 0.0 {
            continue;
        }
        let mut v: Vec<f64> = w.iter().map(|a| a / s).collect();
        // Put the rounding residue on the largest cell.
        let last = (0..v.len()).max_by(|a, b| v[*a].total_cmp(&v[*b])).unwrap();
        let rest: f64 = v
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != last)
            .map(|(_, a)| a)
            .sum();
        v[last] = 1.0 - rest;
        if let Ok(p) = JointPmf::new(xs, ys, v) {
            return p;
        }
    }
}

/// Random explicit class of `k` functions with values in `[0, bound]`; the
/// first function attains `bound` somewhere.
pub fn random_class<R: Rng>(
    rng: &mut R,
    xs: usize,
    ys: usize,
    k: usize,
    bound: f64,
) -> FunctionClass {
    let mut values: Vec<f64> = (0..k * xs * ys).map(|_| bound * rng.gen::<f64>()).collect();
    values[0] = bound;
    FunctionClass::new(xs, ys, bound, values, None).unwrap()
}

/// `max_f |Σ f (p − q)|`, evaluated straight from the function table.
pub fn norm_oracle(p: &[f64], q: &[f64], class: &FunctionClass) -> f64 {
    class
        .functions()
        .map(|f| {
            f.iter()
                .zip(p.iter().zip(q))
                .map(|(v, (a, b))| v * (a - b))
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max)
}

/// Visits every set partition of `0..n` as a block label per element
/// (restricted growth strings).
pub fn for_each_partition(n: usize, mut visit: impl FnMut(&[usize], usize)) {
    fn rec(
        i: usize,
        n: usize,
        labels: &mut Vec<usize>,
        blocks: usize,
        visit: &mut dyn FnMut(&[usize], usize),
    ) {
        if i == n {
            visit(labels, blocks);
            return;
        }
        for b in 0..=blocks {
            labels.push(b);
            rec(i + 1, n, labels, blocks.max(b + 1), visit);
            labels.pop();
        }
    }
    rec(0, n, &mut Vec::new(), 0, &mut visit);
}

/// `sup over finite partitions {A_k} of Σ_k |P(A_k) − Q(A_k)|`.
pub fn partition_sup_oracle(p: &[f64], q: &[f64]) -> f64 {
    let mut best: f64 = 0.0;
    for_each_partition(p.len(), |labels, blocks| {
        let mut mass = vec![0.0; blocks];
        for (z, &b) in labels.iter().enumerate() {
            mass[b] += p[z] - q[z];
        }
        best = best.max(mass.iter().map(|m| m.abs()).sum());
    });
    best
}

/// Smallest subset whose `dist`-balls of radius `eps` cover every index,
/// by enumerating all nonempty subsets.
pub fn subset_cover_oracle(dist: &[Vec<f64>], eps: f64) -> usize {
    let k = dist.len();
    let mut best = k;
    for mask in 1u32..(1 << k) {
        let size = mask.count_ones() as usize;
        if size >= best {
            continue;
        }
        let covers =
            (0..k).all(|i| (0..k).any(|j| mask >> j & 1 == 1 && dist[i][j] <= eps + 1e-12));
        if covers {
            best = size;
        }
    }
    best
}

/// `1 − Σ_x max_y P(x, y)`: the best 0-1 loss over all classifiers.
pub fn bayes_closed_form(p: &JointPmf) -> f64 {
    let (xs, ys) = p.dims();
    1.0 - (0..xs)
        .map(|x| (0..ys).map(|y| p.get(x, y)).fold(0.0, f64::max))
        .sum::<f64>()
}

pub fn l1(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}
