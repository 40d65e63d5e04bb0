//! Information-theoretic bounds on the operational distortion-rate
//! function.
//!
//! * [`d_ks`]: the test-channel distortion-rate function, minimizing
//!   `‖P_XU − P‖_F` over channels `Q_{U|Y}` with `I(Y; U) ≤ R`.
//! * [`theorem3_check`]: compares `D̂_n` against `max_P d_ks`, and rebuilds
//!   the time-averaged triple from an optimal quantizer to check each step
//!   of the lower-bound argument.
//! * [`single_letter_bound`]: minimax over quantizers of the averaged
//!   single-letter distortion `ρ_{F,P}(x, u) = ‖δ_(x,u) − P‖_F`.
//! * [`eq7_grid_value`]: grid evaluation of the nested sup/inf upper-bound
//!   expression built from `ρ` and rate-constrained channels.
//!
//! All informations are in bits, and `U` takes values in `Y`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::DistributionFamily;
use crate::error::{check_dims, Error, Result};
use crate::losses::FunctionClass;
use crate::measures::{check_index, f_norm_values, JointPmf};
use crate::type2::{
    codebook_size, cost_tables, minimax_map, optimal_quantizer, quantizer_distortion, unrank,
    CostKind, DhatResult, QuantizerMap, SearchBudget, EXACT_EXPECTATION_BITS,
};

/// A channel is feasible when its mutual information is at most
/// `R + FEASIBILITY_TOLERANCE`.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-10;

/// Tolerance of the inequalities asserted by [`theorem3_check`].
pub const THEOREM3_TOLERANCE: f64 = 1e-6;

/// A row-stochastic matrix `q(u | y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    in_size: usize,
    out_size: usize,
    rows: Vec<f64>,
}

impl Channel {
    pub fn new(in_size: usize, out_size: usize, rows: Vec<f64>) -> Result<Self> {
        if in_size == 0 || out_size == 0 || rows.len() != in_size * out_size {
            return Err(Error::DimensionMismatch {
                expected: format!("{in_size}x{out_size} channel"),
                found: format!("{} entries", rows.len()),
            });
        }
        for (y, row) in rows.chunks(out_size).enumerate() {
            let s: f64 = row.iter().sum();
            if row.iter().any(|q| !(*q >= 0.0)) || (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "channel row {y} is not a distribution: {row:?}"
                )));
            }
        }
        Ok(Self {
            in_size,
            out_size,
            rows,
        })
    }

    pub fn identity(size: usize) -> Self {
        let mut rows = vec![0.0; size * size];
        for i in 0..size {
            rows[i * size + i] = 1.0;
        }
        Self {
            in_size: size,
            out_size: size,
            rows,
        }
    }

    /// Every input mapped to the same output distribution.
    pub fn constant(in_size: usize, row: &[f64]) -> Result<Self> {
        Self::new(in_size, row.len(), row.repeat(in_size))
    }

    pub fn in_size(&self) -> usize {
        self.in_size
    }

    pub fn out_size(&self) -> usize {
        self.out_size
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    pub fn get(&self, y: usize, u: usize) -> f64 {
        self.rows[y * self.out_size + u]
    }

    /// Output distribution under input `p_y`.
    pub fn output(&self, p_y: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.out_size];
        for (py, row) in p_y.iter().zip(self.rows.chunks(self.out_size)) {
            for (acc, q) in r.iter_mut().zip(row) {
                *acc += py * q;
            }
        }
        r
    }
}

fn mi_unchecked(p_y: &[f64], rows: &[f64], out_size: usize) -> f64 {
    let mut r = vec![0.0; out_size];
    for (py, row) in p_y.iter().zip(rows.chunks(out_size)) {
        for (acc, q) in r.iter_mut().zip(row) {
            *acc += py * q;
        }
    }
    let mut mi = 0.0;
    for (py, row) in p_y.iter().zip(rows.chunks(out_size)) {
        if *py <= 0.0 {
            continue;
        }
        for (q, ru) in row.iter().zip(&r) {
            if *q > 0.0 {
                mi += py * q * (q / ru).log2();
            }
        }
    }
    mi.max(0.0)
}

/// `I(Y; U)` in bits for `Y ~ p_y` and `U | Y ~ q`.
pub fn mutual_information(p_y: &[f64], q: &Channel) -> Result<f64> {
    if p_y.len() != q.in_size {
        return Err(Error::DimensionMismatch {
            expected: format!("input distribution of length {}", q.in_size),
            found: format!("length {}", p_y.len()),
        });
    }
    Ok(mi_unchecked(p_y, &q.rows, q.out_size))
}

/// `P_XU(x, u) = Σ_y P(x, y) q(u | y)`.
pub fn induced_joint_xu(p: &JointPmf, q: &Channel) -> Result<JointPmf> {
    if q.in_size != p.y_size() {
        return Err(Error::DimensionMismatch {
            expected: format!("channel with {} inputs", p.y_size()),
            found: format!("{} inputs", q.in_size),
        });
    }
    JointPmf::new(p.x_size(), q.out_size, joint_xu(p, &q.rows, q.out_size))
}

fn joint_xu(p: &JointPmf, rows: &[f64], out_size: usize) -> Vec<f64> {
    let (xs, ys) = p.dims();
    let mut out = vec![0.0; xs * out_size];
    for x in 0..xs {
        for y in 0..ys {
            let pxy = p.get(x, y);
            if pxy == 0.0 {
                continue;
            }
            for u in 0..out_size {
                out[x * out_size + u] += pxy * rows[y * out_size + u];
            }
        }
    }
    out
}

/// `‖δ_(x,u) − P‖_F`.
pub fn rho_distortion(x: usize, u: usize, p: &JointPmf, class: &FunctionClass) -> Result<f64> {
    check_dims(class.dims(), p.dims())?;
    check_index("x", x, p.x_size())?;
    check_index("u", u, p.y_size())?;
    let mut v: Vec<f64> = p.probs().iter().map(|q| -q).collect();
    v[x * p.y_size() + u] += 1.0;
    Ok(f_norm_values(&v, class))
}

/// Solver settings for [`d_ks`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DksOptions {
    /// Steps per unit on each channel row's simplex grid.
    pub grid_resolution: usize,
    /// Largest number of grid channels; the resolution is lowered to fit.
    pub max_grid_points: usize,
    /// Refinement stops once the step size falls below this.
    pub tolerance: f64,
    /// Grid points used as refinement starts.
    pub starts: usize,
    pub max_iterations: usize,
}

impl Default for DksOptions {
    fn default() -> Self {
        Self {
            grid_resolution: 50,
            max_grid_points: 2_000_000,
            tolerance: 1e-4,
            starts: 3,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub grid_resolution: usize,
    pub grid_points: usize,
    pub feasible_grid_points: usize,
    pub grid_value: f64,
    pub iterations: usize,
    pub refinement_steps: usize,
    pub final_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DksResult {
    /// Distortion of the best feasible channel found; an upper bound on the
    /// infimum.
    pub value: f64,
    pub channel: Channel,
    pub achieved_mi: f64,
    pub report: SolverReport,
}

/// All compositions of `res` into `parts` nonnegative parts, as
/// probability vectors, in lexicographic order.
pub(crate) fn simplex_grid(parts: usize, res: usize) -> Vec<Vec<f64>> {
    fn rec(parts: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(parts - 1, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(parts, res, &mut Vec::new(), &mut out);
    out.into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / res as f64).collect())
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All channels whose rows lie on the simplex grid of resolution `res`.
pub(crate) fn channel_grid(size: usize, res: usize) -> Vec<Vec<f64>> {
    let rows = simplex_grid(size, res);
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..size {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                rows.iter().map(move |r| {
                    let mut c = prefix.clone();
                    c.extend_from_slice(r);
                    c
                })
            })
            .collect();
    }
    out
}

fn channel_grid_size(size: usize, res: usize) -> f64 {
    binomial(res + size - 1, size - 1).powi(size as i32)
}

struct DksProblem<'a> {
    p: &'a JointPmf,
    class: &'a FunctionClass,
    p_y: Vec<f64>,
    size: usize,
    rate: f64,
}

impl DksProblem<'_> {
    fn diff(&self, rows: &[f64]) -> Vec<f64> {
        let mut d = joint_xu(self.p, rows, self.size);
        for (a, p) in d.iter_mut().zip(self.p.probs()) {
            *a -= p;
        }
        d
    }

    fn distortion(&self, rows: &[f64]) -> f64 {
        f_norm_values(&self.diff(rows), self.class)
    }

    /// Moves `step` mass in every row from the output with the largest
    /// subgradient entry to the one with the smallest, using the active
    /// function of the norm.
    fn subgradient_move(&self, rows: &[f64], step: f64) -> Option<Vec<f64>> {
        let diff = self.diff(rows);
        let (mut best, mut active, mut sign) = (f64::NEG_INFINITY, 0, 1.0);
        for (i, f) in self.class.functions().enumerate() {
            let v: f64 = f.iter().zip(&diff).map(|(a, b)| a * b).sum();
            if v.abs() > best {
                (best, active, sign) = (v.abs(), i, v.signum());
            }
        }
        let f = self.class.function(active).ok()?;
        let (xs, ys) = self.p.dims();
        let mut out = rows.to_vec();
        let mut moved = false;
        for y in 0..ys {
            let grad: Vec<f64> = (0..self.size)
                .map(|u| {
                    sign * (0..xs)
                        .map(|x| self.p.get(x, y) * f[x * ys + u])
                        .sum::<f64>()
                })
                .collect();
            let row = &mut out[y * self.size..(y + 1) * self.size];
            let lo = (0..self.size).min_by(|a, b| grad[*a].total_cmp(&grad[*b]))?;
            let hi = (0..self.size)
                .filter(|u| row[*u] > 0.0)
                .max_by(|a, b| grad[*a].total_cmp(&grad[*b]))?;
            if grad[hi] > grad[lo] {
                let amount = step.min(row[hi]);
                row[hi] -= amount;
                row[lo] += amount;
                moved = true;
            }
        }
        moved.then_some(out)
    }

    fn mi(&self, rows: &[f64]) -> f64 {
        mi_unchecked(&self.p_y, rows, self.size)
    }

    fn feasible(&self, rows: &[f64]) -> bool {
        self.mi(rows) <= self.rate + FEASIBILITY_TOLERANCE
    }

    /// Moves an infeasible channel toward the constant channel with the same
    /// output distribution until the rate constraint holds.
    fn project(&self, rows: &[f64]) -> Vec<f64> {
        let r = {
            let mut r = vec![0.0; self.size];
            for (py, row) in self.p_y.iter().zip(rows.chunks(self.size)) {
                for (acc, q) in r.iter_mut().zip(row) {
                    *acc += py * q;
                }
            }
            r
        };
        let blend = |t: f64| -> Vec<f64> {
            rows.iter()
                .enumerate()
                .map(|(i, q)| (1.0 - t) * q + t * r[i % self.size])
                .collect()
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.feasible(&blend(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        blend(hi)
    }
}

/// Minimizes `‖P_XU − P‖_F` over channels with `I(Y; U) ≤ R`.
///
/// A simplex grid over channel rows is scanned first; the best few feasible
/// grid points are then refined by a subgradient step on the active
/// function plus pattern search over mass transfers within one row or two
/// rows at once, with infeasible candidates pulled
/// back onto the constraint set by blending toward a constant channel. The
/// returned channel is always feasible, so the value bounds the infimum
/// from above.
pub fn d_ks(
    p: &JointPmf,
    class: &FunctionClass,
    rate: f64,
    opts: &DksOptions,
) -> Result<DksResult> {
    check_dims(class.dims(), p.dims())?;
    if !(rate >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rate {rate} must be nonnegative"
        )));
    }
    if opts.grid_resolution == 0 {
        return Err(Error::InvalidArgument(
            "grid resolution must be positive".into(),
        ));
    }
    let size = p.y_size();
    let mut res = opts.grid_resolution;
    while res > 1 && channel_grid_size(size, res) > opts.max_grid_points as f64 {
        res -= 1;
    }
    let prob = DksProblem {
        p,
        class,
        p_y: p.y_marginal(),
        size,
        rate,
    };

    let grid = channel_grid(size, res);
    let mut scored: Vec<(f64, usize)> = grid
        .par_iter()
        .enumerate()
        .filter(|(_, rows)| prob.feasible(rows))
        .map(|(i, rows)| (prob.distortion(rows), i))
        .collect();
    let feasible_grid_points = scored.len();
    // Stable sort keeps grid order among equal values.
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let grid_value = scored[0].0;

    let moves = move_set(size);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut refinement_steps = 0;
    let mut final_step = 0.0;
    for &(v0, i) in scored.iter().take(opts.starts.max(1)) {
        let mut current = grid[i].clone();
        let mut value = v0;
        let mut step = 1.0 / res as f64;
        while step >= opts.tolerance && iterations < opts.max_iterations {
            iterations += 1;
            let mut improved = false;
            let sub = prob.subgradient_move(&current, step);
            let candidates = sub.into_iter().chain(
                moves
                    .iter()
                    .filter_map(|mv| apply_move(&current, mv, step, size)),
            );
            for mut cand in candidates {
                if !prob.feasible(&cand) {
                    cand = prob.project(&cand);
                }
                let v = prob.distortion(&cand);
                if v < value - 1e-15 {
                    current = cand;
                    value = v;
                    improved = true;
                    refinement_steps += 1;
                    break;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        final_step = step;
        if best.as_ref().is_none_or(|(bv, _)| value < *bv) {
            best = Some((value, current));
        }
    }
    let (value, rows) = best.expect("the constant channels are always feasible");
    let achieved_mi = prob.mi(&rows);
    Ok(DksResult {
        value,
        channel: Channel::new(size, size, renormalize(rows, size))?,
        achieved_mi,
        report: SolverReport {
            grid_resolution: res,
            grid_points: grid.len(),
            feasible_grid_points,
            grid_value,
            iterations,
            refinement_steps,
            final_step,
        },
    })
}

fn renormalize(mut rows: Vec<f64>, size: usize) -> Vec<f64> {
    for row in rows.chunks_mut(size) {
        row.iter_mut().for_each(|q| *q = q.max(0.0));
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|q| *q /= s);
    }
    rows
}

/// A transfer of mass within one row: `(row, from, to)`.
type Transfer = (usize, usize, usize);

fn move_set(size: usize) -> Vec<Vec<Transfer>> {
    let mut single = Vec::new();
    for y in 0..size {
        for a in 0..size {
            for b in 0..size {
                if a != b {
                    single.push((y, a, b));
                }
            }
        }
    }
    let mut moves: Vec<Vec<Transfer>> = single.iter().map(|t| vec![*t]).collect();
    for (i, s) in single.iter().enumerate() {
        for t in &single[i + 1..] {
            if s.0 != t.0 {
                moves.push(vec![*s, *t]);
            }
        }
    }
    moves
}

fn apply_move(rows: &[f64], mv: &[Transfer], step: f64, size: usize) -> Option<Vec<f64>> {
    let mut out = rows.to_vec();
    for &(y, a, b) in mv {
        let amount = step.min(out[y * size + a]);
        if amount <= 0.0 {
            return None;
        }
        out[y * size + a] -= amount;
        out[y * size + b] += amount;
    }
    Some(out)
}

/// Time-averaged distribution of `(X_i, Y_i, Ŷ_i)` under `P^n`, indexed
/// `(x, y, u)` row-major, built by summing over every `(x^n, y^n)`.
pub fn time_averaged_triple(q: &QuantizerMap, p: &JointPmf) -> Result<Vec<f64>> {
    let (xs, ys) = p.dims();
    if q.y_size() != ys {
        return Err(Error::DimensionMismatch {
            expected: format!("|Y| = {ys}"),
            found: format!("quantizer over |Y| = {}", q.y_size()),
        });
    }
    let n = q.n();
    let bits = n as f64 * ((xs * ys) as f64).log2();
    if bits > EXACT_EXPECTATION_BITS {
        return Err(Error::GuardExceeded(format!(
            "time-averaged triple needs 2^{bits:.1} sequence pairs"
        )));
    }
    let x_count = xs.pow(n as u32);
    let y_count = ys.pow(n as u32);
    let inv_n = 1.0 / n as f64;
    let mut triple = vec![0.0; xs * ys * ys];
    for yr in 0..y_count {
        let y_seq = unrank(yr, n, ys);
        let w = &q.codebook()[q.assignment()[yr]];
        for xr in 0..x_count {
            let x_seq = unrank(xr, n, xs);
            let prob: f64 = x_seq
                .iter()
                .zip(&y_seq)
                .map(|(&x, &y)| p.get(x, y))
                .product();
            if prob == 0.0 {
                continue;
            }
            for i in 0..n {
                triple[(x_seq[i] * ys + y_seq[i]) * ys + w[i]] += prob * inv_n;
            }
        }
    }
    Ok(triple)
}

/// Numerical check of each step of the lower-bound argument for one member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofChainCheck {
    pub p_index: usize,
    /// `max |P_{X̄Ȳ} − P|`.
    pub marginal_error: f64,
    /// `‖P_{X̄Ū} − P‖_F`.
    pub averaged_distortion: f64,
    /// `E_P ‖P_{(X^n, Ŷ^n)} − P‖_F` for the optimal quantizer.
    pub quantizer_distortion: f64,
    /// `I(Ȳ; Ū)` in bits.
    pub averaged_mi: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Report {
    pub n: usize,
    pub rate: f64,
    pub dhat: DhatResult,
    pub dks: Vec<DksResult>,
    pub max_dks: f64,
    /// `D̂_n − max_P d_ks`.
    pub slack: f64,
    pub ordering_holds: bool,
    pub chains: Vec<ProofChainCheck>,
}

impl Theorem3Report {
    pub fn all_hold(&self) -> bool {
        self.ordering_holds && self.chains.iter().all(|c| c.holds)
    }
}

/// Checks `D̂_n ≥ max_P d_ks(P, F, R)` and, for every member, that the
/// time-averaged triple of the optimal quantizer has the right `(X, Y)`
/// marginal, distortion at most the quantizer's, and `I(Ȳ; Ū) ≤ R`.
pub fn theorem3_check(
    n: usize,
    rate: f64,
    family: &DistributionFamily,
    class: &FunctionClass,
    budget: &SearchBudget,
    opts: &DksOptions,
) -> Result<Theorem3Report> {
    let dhat = optimal_quantizer(n, rate, family, class, budget)?;
    let dks = family
        .members()
        .iter()
        .map(|p| d_ks(p, class, rate, opts))
        .collect::<Result<Vec<_>>>()?;
    let max_dks = dks
        .iter()
        .map(|d| d.value)
        .fold(f64::NEG_INFINITY, f64::max);
    let (xs, ys) = family.dims();
    let mut chains = Vec::with_capacity(family.len());
    for (i, p) in family.members().iter().enumerate() {
        let triple = time_averaged_triple(&dhat.quantizer, p)?;
        let mut marginal_error: f64 = 0.0;
        let mut xu = vec![0.0; xs * ys];
        let mut yu = vec![0.0; ys * ys];
        for x in 0..xs {
            for y in 0..ys {
                let cell = &triple[(x * ys + y) * ys..(x * ys + y + 1) * ys];
                marginal_error = marginal_error.max((cell.iter().sum::<f64>() - p.get(x, y)).abs());
                for (u, t) in cell.iter().enumerate() {
                    xu[x * ys + u] += t;
                    yu[y * ys + u] += t;
                }
            }
        }
        let diff: Vec<f64> = xu.iter().zip(p.probs()).map(|(a, b)| a - b).collect();
        let averaged_distortion = f_norm_values(&diff, class);
        let p_y: Vec<f64> = yu.chunks(ys).map(|r| r.iter().sum()).collect();
        let channel_rows: Vec<f64> = yu
            .chunks(ys)
            .zip(&p_y)
            .flat_map(|(row, py)| {
                row.iter()
                    .map(move |v| if *py > 0.0 { v / py } else { 1.0 / ys as f64 })
            })
            .collect();
        let averaged_mi = mi_unchecked(&p_y, &channel_rows, ys);
        let qd = quantizer_distortion(&dhat.quantizer, p, class)?;
        let holds = marginal_error <= THEOREM3_TOLERANCE
            && averaged_distortion <= qd + THEOREM3_TOLERANCE
            && averaged_mi <= rate + THEOREM3_TOLERANCE;
        chains.push(ProofChainCheck {
            p_index: i,
            marginal_error,
            averaged_distortion,
            quantizer_distortion: qd,
            averaged_mi,
            holds,
        });
    }
    Ok(Theorem3Report {
        n,
        rate,
        slack: dhat.value - max_dks,
        ordering_holds: dhat.value >= max_dks - THEOREM3_TOLERANCE,
        dhat,
        dks,
        max_dks,
        chains,
    })
}

/// Minimax over rate-`R` quantizers of `max_P E_P[n^{-1} Σ ρ_{F,P}(X_i, Ŷ_i)]`.
///
/// The result is reported as a [`DhatResult`] whose distortions are the
/// single-letter averages.
pub fn single_letter_bound(
    n: usize,
    rate: f64,
    family: &DistributionFamily,
    class: &FunctionClass,
    budget: &SearchBudget,
) -> Result<DhatResult> {
    let m = codebook_size(n, rate)?;
    if m == 0 {
        return Err(Error::InvalidArgument("codebook would be empty".into()));
    }
    let tables = cost_tables(n, family, class, CostKind::SingleLetter, budget)?;
    let (value, map) = minimax_map(&tables, m, budget)?;
    let per_p_distortion = tables
        .iter()
        .map(|t| map.iter().enumerate().map(|(y, &w)| t[y][w]).sum())
        .collect();
    Ok(DhatResult {
        value,
        quantizer: QuantizerMap::from_map(n, family.dims().1, &map)?,
        n,
        rate,
        per_p_distortion,
        exact: true,
    })
}

/// Grids for [`eq7_grid_value`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Eq7Grids {
    pub alpha_list: Vec<f64>,
    pub delta_list: Vec<f64>,
    /// Steps per unit on the grid over `M(Y)`.
    pub p_prime_resolution: usize,
    /// Steps per unit on each channel row.
    pub channel_resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eq7Report {
    pub value: f64,
    pub alpha_count: usize,
    pub delta_count: usize,
    pub p_prime_count: usize,
    pub channel_count: usize,
    /// `(α, δ, P')` branches whose ball around `P'` holds no member.
    pub vacuous_branches: usize,
    /// `(α, δ)` pairs skipped because every `P'` branch was vacuous.
    pub vacuous_deltas: usize,
}

/// Evaluates
/// `sup_α inf_δ sup_{P'} inf_{Q: I(P'×Q) ≤ R+α} sup_{P: ‖P_Y − P'‖_V ≤ δ} E_{P×Q} ρ_{F,P}(X, U)`
/// with every continuous parameter restricted to the given grids. This is a
/// grid approximation of the expression, not a certified bound.
pub fn eq7_grid_value(
    family: &DistributionFamily,
    class: &FunctionClass,
    rate: f64,
    grids: &Eq7Grids,
) -> Result<Eq7Report> {
    check_dims(class.dims(), family.dims())?;
    if grids.alpha_list.is_empty() || grids.delta_list.is_empty() {
        return Err(Error::InvalidArgument(
            "alpha and delta grids must be nonempty".into(),
        ));
    }
    if grids.p_prime_resolution == 0 || grids.channel_resolution == 0 {
        return Err(Error::InvalidArgument(
            "grid resolutions must be positive".into(),
        ));
    }
    if !(rate >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rate {rate} must be nonnegative"
        )));
    }
    let (xs, ys) = family.dims();
    if channel_grid_size(ys, grids.channel_resolution) > 5e6 {
        return Err(Error::GuardExceeded(
            "channel grid exceeds 5e6 points".into(),
        ));
    }
    // expect[p][y * ys + u] = Σ_x P(x, y) ρ_P(x, u)
    let expect: Vec<Vec<f64>> = family
        .members()
        .iter()
        .map(|p| {
            let mut a = vec![0.0; ys * ys];
            for x in 0..xs {
                for u in 0..ys {
                    let rho = rho_distortion(x, u, p, class)?;
                    for y in 0..ys {
                        a[y * ys + u] += p.get(x, y) * rho;
                    }
                }
            }
            Ok(a)
        })
        .collect::<Result<_>>()?;
    let marginals: Vec<Vec<f64>> = family.members().iter().map(JointPmf::y_marginal).collect();
    let p_primes = simplex_grid(ys, grids.p_prime_resolution);
    let channels = channel_grid(ys, grids.channel_resolution);
    let mut vacuous_branches = 0;
    let mut vacuous_deltas = 0;
    let mut value = f64::NEG_INFINITY;
    for &alpha in &grids.alpha_list {
        let mut alpha_value = f64::INFINITY;
        for &delta in &grids.delta_list {
            // None marks a vacuous branch.
            let branches: Vec<Option<f64>> = p_primes
                .par_iter()
                .map(|pp| {
                    let ball: Vec<usize> = marginals
                        .iter()
                        .enumerate()
                        .filter(|(_, m)| {
                            m.iter().zip(pp).map(|(a, b)| (a - b).abs()).sum::<f64>()
                                <= delta + 1e-12
                        })
                        .map(|(i, _)| i)
                        .collect();
                    if ball.is_empty() {
                        return None;
                    }
                    let mut inner = f64::INFINITY;
                    for rows in &channels {
                        if mi_unchecked(pp, rows, ys) > rate + alpha + FEASIBILITY_TOLERANCE {
                            continue;
                        }
                        let worst = ball
                            .iter()
                            .map(|&i| expect[i].iter().zip(rows).map(|(a, q)| a * q).sum::<f64>())
                            .fold(f64::NEG_INFINITY, f64::max);
                        inner = inner.min(worst);
                    }
                    Some(inner)
                })
                .collect();
            vacuous_branches += branches.iter().filter(|b| b.is_none()).count();
            let delta_value = branches
                .into_iter()
                .flatten()
                .fold(f64::NEG_INFINITY, f64::max);
            if delta_value == f64::NEG_INFINITY {
                vacuous_deltas += 1;
                continue;
            }
            alpha_value = alpha_value.min(delta_value);
        }
        if alpha_value < f64::INFINITY {
            value = value.max(alpha_value);
        }
    }
    if !value.is_finite() {
        return Err(Error::InvalidArgument(
            "every (alpha, delta) branch is vacuous on these grids".into(),
        ));
    }
    Ok(Eq7Report {
        value,
        alpha_count: grids.alpha_list.len(),
        delta_count: grids.delta_list.len(),
        p_prime_count: p_primes.len(),
        channel_count: channels.len(),
        vacuous_branches,
        vacuous_deltas,
    })
}
