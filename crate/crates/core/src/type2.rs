//! Type II scheme: the encoder sees only the output sequence `y^n` and maps
//! it through a rate-limited quantizer `Y^n → Y^n`; the learner sees the
//! inputs `x^n` exactly, projects the empirical measure of
//! `(x^n, ŷ^n)` onto the family and minimizes loss under the projection.
//!
//! The quantizer minimizing the worst-case expected F-norm distortion over
//! the family is found by exhaustive branch-and-bound search for small
//! blocklengths, or by randomized local search otherwise.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::covering::DistributionFamily;
use crate::error::{check_dims, Error, Result};
use crate::losses::{argmin_loss, bayes_loss, expected_loss, FunctionClass};
use crate::measures::{check_index, f_norm_values, JointPmf};
use crate::montecarlo::sample_training;
use crate::type1::{TrialRecord, CHAIN_TOLERANCE};

/// Ties in the quantizer search are resolved within this tolerance.
const SEARCH_TIE: f64 = 1e-12;

/// Exact expectations enumerate `(|X||Y|)^n` pairs of sequences; this caps
/// `n log2(|X||Y|)`.
pub const EXACT_EXPECTATION_BITS: f64 = 20.0;

/// Work limits for the exhaustive quantizer search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchBudget {
    /// Upper limit on the number of maps `Y^n → Y^n` with at most `M`
    /// distinct images, counted before pruning.
    pub max_maps: f64,
    /// Upper limit on `|X|^n |Y|^{2n}`, the size of the per-sequence cost
    /// tables.
    pub max_table_work: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_maps: (1u64 << 25) as f64,
            max_table_work: (1u64 << 24) as f64,
        }
    }
}

/// Lexicographic rank of a sequence, position 0 most significant.
pub fn rank(seq: &[usize], alphabet: usize) -> usize {
    seq.iter().fold(0, |r, &s| r * alphabet + s)
}

/// Inverse of [`rank`].
pub fn unrank(mut r: usize, n: usize, alphabet: usize) -> Vec<usize> {
    let mut seq = vec![0; n];
    for slot in seq.iter_mut().rev() {
        *slot = r % alphabet;
        r /= alphabet;
    }
    seq
}

fn sequence_count(alphabet: usize, n: usize) -> Result<usize> {
    u32::try_from(n)
        .ok()
        .and_then(|n| alphabet.checked_pow(n))
        .filter(|c| *c <= 1 << 24)
        .ok_or_else(|| {
            Error::GuardExceeded(format!("{alphabet}^{n} sequences cannot be enumerated"))
        })
}

/// Codebook size `floor(2^{nR})`.
pub fn codebook_size(n: usize, rate: f64) -> Result<usize> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "rate {rate} must be nonnegative"
        )));
    }
    let m = (n as f64 * rate).exp2();
    Ok(if m >= 1e15 {
        usize::MAX
    } else {
        (m + 1e-9).floor() as usize
    })
}

/// A map from output sequences to a codebook of output sequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizerMap {
    n: usize,
    y_size: usize,
    /// Codeword index for each `y^n`, by rank.
    assignment: Vec<usize>,
    codebook: Vec<Vec<usize>>,
}

impl QuantizerMap {
    pub fn new(
        n: usize,
        y_size: usize,
        assignment: Vec<usize>,
        codebook: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "blocklength must be positive".into(),
            ));
        }
        let count = sequence_count(y_size, n)?;
        if assignment.len() != count {
            return Err(Error::DimensionMismatch {
                expected: format!("{count} assignments"),
                found: format!("{}", assignment.len()),
            });
        }
        let mut used = vec![false; codebook.len()];
        for &a in &assignment {
            check_index("codeword", a, codebook.len())?;
            used[a] = true;
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(Error::InvalidArgument(format!(
                "codeword {i} is never used"
            )));
        }
        let mut ranks = Vec::with_capacity(codebook.len());
        for w in &codebook {
            if w.len() != n || w.iter().any(|&s| s >= y_size) {
                return Err(Error::InvalidArgument(format!("bad codeword {w:?}")));
            }
            ranks.push(rank(w, y_size));
        }
        ranks.sort_unstable();
        if ranks.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("repeated codeword".into()));
        }
        Ok(Self {
            n,
            y_size,
            assignment,
            codebook,
        })
    }

    /// Builds the canonical quantizer from `map[rank(y^n)] = rank(ŷ^n)`;
    /// codewords are listed in increasing rank.
    pub fn from_map(n: usize, y_size: usize, map: &[usize]) -> Result<Self> {
        let count = sequence_count(y_size, n)?;
        let mut images: Vec<usize> = map.to_vec();
        images.sort_unstable();
        images.dedup();
        if let Some(&bad) = images.iter().find(|&&w| w >= count) {
            return Err(Error::IndexOutOfRange {
                what: "codeword rank",
                index: bad,
                size: count,
            });
        }
        let assignment = map
            .iter()
            .map(|w| images.binary_search(w).expect("image present"))
            .collect();
        let codebook = images.iter().map(|&w| unrank(w, n, y_size)).collect();
        Self::new(n, y_size, assignment, codebook)
    }

    pub fn identity(n: usize, y_size: usize) -> Result<Self> {
        let count = sequence_count(y_size, n)?;
        Self::from_map(n, y_size, &(0..count).collect::<Vec<_>>())
    }

    /// Sends every sequence to `codeword`.
    pub fn constant(n: usize, y_size: usize, codeword: &[usize]) -> Result<Self> {
        let count = sequence_count(y_size, n)?;
        Self::new(n, y_size, vec![0; count], vec![codeword.to_vec()])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn codebook(&self) -> &[Vec<usize>] {
        &self.codebook
    }

    /// Codebook size `M`.
    pub fn size(&self) -> usize {
        self.codebook.len()
    }

    /// `log2 M / n`.
    pub fn rate(&self) -> f64 {
        (self.size() as f64).log2() / self.n as f64
    }

    /// Codeword rank for every output sequence rank.
    pub fn rank_map(&self) -> Vec<usize> {
        let ranks: Vec<usize> = self.codebook.iter().map(|w| rank(w, self.y_size)).collect();
        self.assignment.iter().map(|&a| ranks[a]).collect()
    }

    /// `ŷ^n(y^n)`.
    pub fn apply(&self, y_seq: &[usize]) -> Result<&[usize]> {
        let j = encode_type2(y_seq, self)?;
        Ok(&self.codebook[j])
    }
}

/// Operational distortion `D̂_n` for one blocklength and rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DhatResult {
    /// Worst-case expected distortion over the family.
    pub value: f64,
    pub quantizer: QuantizerMap,
    pub n: usize,
    pub rate: f64,
    pub per_p_distortion: Vec<f64>,
    /// `false` for local-search results, which only bound `D̂_n` from above.
    pub exact: bool,
}

/// Exact `E_P ‖P_{(X^n, q(Y^n))} − P‖_F`, summing over all `(x^n, y^n)`.
pub fn quantizer_distortion(q: &QuantizerMap, p: &JointPmf, class: &FunctionClass) -> Result<f64> {
    check_dims(class.dims(), p.dims())?;
    if q.y_size != p.y_size() {
        return Err(Error::DimensionMismatch {
            expected: format!("|Y| = {}", p.y_size()),
            found: format!("quantizer over |Y| = {}", q.y_size),
        });
    }
    let (xs, ys) = p.dims();
    let n = q.n;
    let bits = n as f64 * ((xs * ys) as f64).log2();
    if bits > EXACT_EXPECTATION_BITS {
        return Err(Error::GuardExceeded(format!(
            "exact expectation over (|X||Y|)^n = 2^{bits:.1} pairs; use the Monte Carlo estimator"
        )));
    }
    let x_count = sequence_count(xs, n)?;
    let y_count = sequence_count(ys, n)?;
    let inv_n = 1.0 / n as f64;
    let mut values = vec![0.0; xs * ys];
    let mut total = 0.0;
    for yr in 0..y_count {
        let y_seq = unrank(yr, n, ys);
        let w = &q.codebook[q.assignment[yr]];
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
            values.copy_from_slice(p.probs());
            values.iter_mut().for_each(|v| *v = -*v);
            for (&x, &u) in x_seq.iter().zip(w) {
                values[x * ys + u] += inv_n;
            }
            total += prob * f_norm_values(&values, class);
        }
    }
    Ok(total)
}

/// Monte Carlo estimate of [`quantizer_distortion`]: mean and standard
/// error over `trials` sampled sequence pairs.
pub fn quantizer_distortion_mc(
    q: &QuantizerMap,
    p: &JointPmf,
    class: &FunctionClass,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64)> {
    check_dims(class.dims(), p.dims())?;
    if trials < 2 {
        return Err(Error::InvalidArgument("need at least 2 trials".into()));
    }
    let ys = p.y_size();
    let inv_n = 1.0 / q.n as f64;
    let mut values = vec![0.0; p.probs().len()];
    let mut draws = Vec::with_capacity(trials);
    for _ in 0..trials {
        let sample = sample_training(p, q.n, rng);
        let y_seq: Vec<usize> = sample.iter().map(|s| s.1).collect();
        let w = q.apply(&y_seq)?;
        values
            .iter_mut()
            .zip(p.probs())
            .for_each(|(v, pr)| *v = -pr);
        for (&(x, _), &u) in sample.iter().zip(w) {
            values[x * ys + u] += inv_n;
        }
        draws.push(f_norm_values(&values, class));
    }
    Ok(mean_and_std_err(&draws))
}

pub(crate) fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Which per-sequence distortion the cost tables hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CostKind {
    /// `‖P_{(x^n, w)} − P‖_F`.
    Empirical,
    /// `n^{-1} Σ_i ‖δ_{(x_i, w_i)} − P‖_F`.
    SingleLetter,
}

/// `table[p][rank(y^n)][rank(w)] = Σ_{x^n} P^n(x^n, y^n) · d_P(x^n, w)`.
///
/// For every map `q`, the expected distortion under member `p` is
/// `Σ_{y^n} table[p][y^n][q(y^n)]`.
pub(crate) fn cost_tables(
    n: usize,
    family: &DistributionFamily,
    class: &FunctionClass,
    kind: CostKind,
    budget: &SearchBudget,
) -> Result<Vec<Vec<Vec<f64>>>> {
    check_dims(class.dims(), family.dims())?;
    if n == 0 {
        return Err(Error::InvalidArgument(
            "blocklength must be positive".into(),
        ));
    }
    let (xs, ys) = family.dims();
    let work = (xs as f64).powi(n as i32) * (ys as f64).powi(2 * n as i32);
    if work > budget.max_table_work {
        return Err(Error::GuardExceeded(format!(
            "cost tables need |X|^n |Y|^2n = {work:.3e} evaluations (limit {:.3e}); \
             use greedy search on a smaller blocklength",
            budget.max_table_work
        )));
    }
    let x_count = sequence_count(xs, n)?;
    let y_count = sequence_count(ys, n)?;
    let inv_n = 1.0 / n as f64;
    let x_seqs: Vec<Vec<usize>> = (0..x_count).map(|r| unrank(r, n, xs)).collect();
    let y_seqs: Vec<Vec<usize>> = (0..y_count).map(|r| unrank(r, n, ys)).collect();
    let mut tables = Vec::with_capacity(family.len());
    let mut values = vec![0.0; xs * ys];
    for p in family.members() {
        // Distortion of every (x^n, w) pair.
        let rho: Vec<f64> = match kind {
            CostKind::SingleLetter => (0..xs * ys)
                .map(|z| {
                    values
                        .iter_mut()
                        .zip(p.probs())
                        .for_each(|(v, pr)| *v = -pr);
                    values[z] += 1.0;
                    f_norm_values(&values, class)
                })
                .collect(),
            CostKind::Empirical => Vec::new(),
        };
        let mut dist = vec![0.0; x_count * y_count];
        for (xr, x_seq) in x_seqs.iter().enumerate() {
            for (wr, w) in y_seqs.iter().enumerate() {
                dist[xr * y_count + wr] = match kind {
                    CostKind::Empirical => {
                        values
                            .iter_mut()
                            .zip(p.probs())
                            .for_each(|(v, pr)| *v = -pr);
                        for (&x, &u) in x_seq.iter().zip(w) {
                            values[x * ys + u] += inv_n;
                        }
                        f_norm_values(&values, class)
                    }
                    CostKind::SingleLetter => {
                        x_seq
                            .iter()
                            .zip(w)
                            .map(|(&x, &u)| rho[x * ys + u])
                            .sum::<f64>()
                            * inv_n
                    }
                };
            }
        }
        let mut table = vec![vec![0.0; y_count]; y_count];
        for (yr, y_seq) in y_seqs.iter().enumerate() {
            for (xr, x_seq) in x_seqs.iter().enumerate() {
                let prob: f64 = x_seq
                    .iter()
                    .zip(y_seq)
                    .map(|(&x, &y)| p.get(x, y))
                    .product();
                if prob == 0.0 {
                    continue;
                }
                let row = &dist[xr * y_count..(xr + 1) * y_count];
                for (t, d) in table[yr].iter_mut().zip(row) {
                    *t += prob * d;
                }
            }
        }
        tables.push(table);
    }
    Ok(tables)
}

fn per_member_cost(tables: &[Vec<Vec<f64>>], map: &[usize]) -> Vec<f64> {
    tables
        .iter()
        .map(|t| map.iter().enumerate().map(|(y, &w)| t[y][w]).sum())
        .collect()
}

fn worst(costs: &[f64]) -> f64 {
    costs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Number of maps from `count` sequences into `count` codewords using at
/// most `m` distinct images: `Σ_k C(count, k) · surj(count, k)`.
fn map_count(count: usize, m: usize) -> f64 {
    let m = m.min(count);
    // Stirling numbers of the second kind, row `count`.
    let mut stirling = vec![0.0f64; m + 1];
    stirling[0] = 1.0;
    for i in 1..=count {
        for k in (1..=m.min(i)).rev() {
            stirling[k] = k as f64 * stirling[k] + stirling[k - 1];
        }
        stirling[0] = 0.0;
    }
    let mut total = 0.0;
    let mut falling = 1.0; // count · (count−1) ⋯ (count−k+1)
    for (k, s) in stirling.iter().enumerate().skip(1) {
        falling *= (count - k + 1) as f64;
        total += falling * s;
    }
    total
}

struct Search<'a> {
    tables: &'a [Vec<Vec<f64>>],
    // suffix[p][k] = Σ_{y ≥ k} min_w tables[p][y][w]
    suffix: Vec<Vec<f64>>,
    count: usize,
    m: usize,
    map: Vec<usize>,
    uses: Vec<usize>,
    distinct: usize,
    incumbent: f64,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn cutoff(&self) -> (f64, bool) {
        match &self.best {
            Some((v, _)) => (*v - SEARCH_TIE, true),
            None => (self.incumbent + SEARCH_TIE, false),
        }
    }

    fn descend(&mut self, depth: usize, partial: &[f64]) {
        if depth == self.count {
            let value = worst(partial);
            let (cut, strict) = self.cutoff();
            if (strict && value < cut) || (!strict && value <= cut) {
                self.best = Some((value, self.map.clone()));
            }
            return;
        }
        let mut next = vec![0.0; partial.len()];
        for w in 0..self.count {
            if self.uses[w] == 0 && self.distinct == self.m {
                continue;
            }
            let mut lb = f64::NEG_INFINITY;
            for (p, t) in self.tables.iter().enumerate() {
                next[p] = partial[p] + t[depth][w];
                lb = lb.max(next[p] + self.suffix[p][depth + 1]);
            }
            let (cut, strict) = self.cutoff();
            if (strict && lb >= cut) || (!strict && lb > cut) {
                continue;
            }
            self.map[depth] = w;
            if self.uses[w] == 0 {
                self.distinct += 1;
            }
            self.uses[w] += 1;
            self.descend(depth + 1, &next);
            self.uses[w] -= 1;
            if self.uses[w] == 0 {
                self.distinct -= 1;
            }
        }
    }
}

/// Exhaustive minimax search: among maps `Y^n → Y^n` with at most `m`
/// distinct images, minimizes `max_p Σ_y tables[p][y][map[y]]`.
/// Returns the lexicographically smallest optimal map (by codeword rank).
pub(crate) fn minimax_map(
    tables: &[Vec<Vec<f64>>],
    m: usize,
    budget: &SearchBudget,
) -> Result<(f64, Vec<usize>)> {
    let count = tables[0].len();
    let m = m.min(count);
    let maps = map_count(count, m);
    if maps > budget.max_maps {
        return Err(Error::GuardExceeded(format!(
            "exhaustive quantizer search over {maps:.3e} maps exceeds the budget of {:.3e}; \
             use greedy search",
            budget.max_maps
        )));
    }
    let suffix = tables
        .iter()
        .map(|t| {
            let mut s = vec![0.0; count + 1];
            for y in (0..count).rev() {
                s[y] = s[y + 1] + t[y].iter().copied().fold(f64::INFINITY, f64::min);
            }
            s
        })
        .collect();
    // A local-search incumbent tightens pruning; it does not affect which
    // optimum is returned.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let incumbent = local_search(tables, m, 4, &mut rng).0;
    let mut search = Search {
        tables,
        suffix,
        count,
        m,
        map: vec![0; count],
        uses: vec![0; count],
        distinct: 0,
        incumbent,
        best: None,
    };
    search.descend(0, &vec![0.0; tables.len()]);
    search
        .best
        .ok_or_else(|| unreachable!("the incumbent map is always reachable"))
}

/// Randomized descent over maps with at most `m` distinct images. Moves are
/// single-sequence reassignment within the codebook and replacement of one
/// codeword by an unused sequence. Restart 0 starts from the identity map
/// when `m` allows it.
fn local_search(
    tables: &[Vec<Vec<f64>>],
    m: usize,
    restarts: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, Vec<usize>) {
    let count = tables[0].len();
    let m = m.min(count);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..restarts.max(1) {
        let mut map: Vec<usize> = if restart == 0 && m == count {
            (0..count).collect()
        } else {
            let mut all: Vec<usize> = (0..count).collect();
            all.shuffle(rng);
            let book = &all[..m];
            (0..count).map(|_| book[rng.gen_range(0..m)]).collect()
        };
        let mut value = worst(&per_member_cost(tables, &map));
        loop {
            let mut improved = false;
            let mut book: Vec<usize> = map.clone();
            book.sort_unstable();
            book.dedup();
            // Reassign one sequence.
            for y in 0..count {
                let current = map[y];
                for &w in &book {
                    if w == current {
                        continue;
                    }
                    map[y] = w;
                    let v = worst(&per_member_cost(tables, &map));
                    if v < value - SEARCH_TIE {
                        value = v;
                        improved = true;
                        break;
                    }
                    map[y] = current;
                }
            }
            // Replace a codeword, or add one when the codebook has room.
            for &old in &book {
                for new in 0..count {
                    if book.binary_search(&new).is_ok() {
                        continue;
                    }
                    let trial: Vec<usize> = map
                        .iter()
                        .map(|&w| if w == old { new } else { w })
                        .collect();
                    let v = worst(&per_member_cost(tables, &trial));
                    if v < value - SEARCH_TIE {
                        map = trial;
                        value = v;
                        improved = true;
                        break;
                    }
                }
                if improved {
                    break;
                }
            }
            if !improved && book.len() < m {
                'grow: for y in 0..count {
                    for new in 0..count {
                        if book.binary_search(&new).is_ok() {
                            continue;
                        }
                        let current = map[y];
                        map[y] = new;
                        let v = worst(&per_member_cost(tables, &map));
                        if v < value - SEARCH_TIE {
                            value = v;
                            improved = true;
                            break 'grow;
                        }
                        map[y] = current;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        let better = match &best {
            None => true,
            Some((bv, bm)) => value < bv - SEARCH_TIE || (value <= bv + SEARCH_TIE && map < *bm),
        };
        if better {
            best = Some((value, map));
        }
    }
    best.expect("at least one restart")
}

fn dhat_result(
    n: usize,
    rate: f64,
    family: &DistributionFamily,
    tables: &[Vec<Vec<f64>>],
    map: &[usize],
    exact: bool,
) -> Result<DhatResult> {
    let per_p_distortion = per_member_cost(tables, map);
    Ok(DhatResult {
        value: worst(&per_p_distortion),
        quantizer: QuantizerMap::from_map(n, family.dims().1, map)?,
        n,
        rate,
        per_p_distortion,
        exact,
    })
}

/// `D̂_n(family, F, R)` by exhaustive search over quantizers with at most
/// `floor(2^{nR})` codewords.
pub fn optimal_quantizer(
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
    let tables = cost_tables(n, family, class, CostKind::Empirical, budget)?;
    let (_, map) = minimax_map(&tables, m, budget)?;
    dhat_result(n, rate, family, &tables, &map, true)
}

/// Local-search upper bound on `D̂_n`, deterministic for a given seed.
pub fn greedy_quantizer(
    n: usize,
    rate: f64,
    family: &DistributionFamily,
    class: &FunctionClass,
    restarts: usize,
    seed: u64,
    budget: &SearchBudget,
) -> Result<DhatResult> {
    let m = codebook_size(n, rate)?;
    if m == 0 {
        return Err(Error::InvalidArgument("codebook would be empty".into()));
    }
    let tables = cost_tables(n, family, class, CostKind::Empirical, budget)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (_, map) = local_search(&tables, m, restarts, &mut rng);
    dhat_result(n, rate, family, &tables, &map, false)
}

/// Encoder: index `J` of the codeword assigned to `y_seq`.
pub fn encode_type2(y_seq: &[usize], q: &QuantizerMap) -> Result<usize> {
    if y_seq.len() != q.n {
        return Err(Error::DimensionMismatch {
            expected: format!("sequence of length {}", q.n),
            found: format!("length {}", y_seq.len()),
        });
    }
    for &y in y_seq {
        check_index("y", y, q.y_size)?;
    }
    Ok(q.assignment[rank(y_seq, q.y_size)])
}

/// Learner: projects the empirical measure of `(x^n, codeword J)` onto the
/// family in F-norm, then returns `(projected member, best function under
/// it)`. Ties go to the lowest index.
pub fn learn_type2(
    j: usize,
    x_seq: &[usize],
    q: &QuantizerMap,
    family: &DistributionFamily,
    class: &FunctionClass,
) -> Result<(usize, usize)> {
    check_dims(class.dims(), family.dims())?;
    check_index("codeword", j, q.size())?;
    if x_seq.len() != q.n {
        return Err(Error::DimensionMismatch {
            expected: format!("sequence of length {}", q.n),
            found: format!("length {}", x_seq.len()),
        });
    }
    let (xs, ys) = family.dims();
    let inv_n = 1.0 / q.n as f64;
    let mut freq = vec![0.0; xs * ys];
    for (&x, &u) in x_seq.iter().zip(&q.codebook[j]) {
        check_index("x", x, xs)?;
        freq[x * ys + u] += inv_n;
    }
    let mut diff = vec![0.0; freq.len()];
    let mut best = (0, f64::INFINITY);
    for (i, p) in family.members().iter().enumerate() {
        diff.iter_mut()
            .zip(&freq)
            .zip(p.probs())
            .for_each(|((d, e), pr)| *d = e - pr);
        let dist = f_norm_values(&diff, class);
        if dist < best.1 {
            best = (i, dist);
        }
    }
    let (f_index, _) = argmin_loss(class, family.member(best.0).probs());
    Ok((best.0, f_index))
}

/// Runs the Type II encoder and learner on `sample` and scores the result
/// against `true_p`, with bound `4‖P − P_{(X^n, Ŷ^n)}‖_F`.
pub fn type2_trial(
    sample: &[(usize, usize)],
    q: &QuantizerMap,
    family: &DistributionFamily,
    class: &FunctionClass,
    true_p: &JointPmf,
) -> Result<TrialRecord> {
    check_dims(family.dims(), true_p.dims())?;
    let (x_seq, y_seq): (Vec<usize>, Vec<usize>) = sample.iter().copied().unzip();
    let index = encode_type2(&y_seq, q)?;
    let (_, f_index) = learn_type2(index, &x_seq, q, family, class)?;
    let loss = expected_loss(f_index, class, true_p)?;
    let (_, l_star) = bayes_loss(class, true_p)?;
    let ys = true_p.y_size();
    let inv_n = 1.0 / q.n as f64;
    let mut diff: Vec<f64> = true_p.probs().iter().map(|p| -p).collect();
    for (&x, &u) in x_seq.iter().zip(&q.codebook[index]) {
        diff[x * ys + u] += inv_n;
    }
    let bound = 4.0 * f_norm_values(&diff, class);
    Ok(TrialRecord {
        index,
        f_index,
        loss,
        bayes_loss: l_star,
        excess: loss - l_star,
        bound,
        holds: loss <= l_star + bound + CHAIN_TOLERANCE,
        in_family: family.position(true_p).is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{classification_class, ClassifierFamily};

    fn class() -> FunctionClass {
        classification_class(&ClassifierFamily::all(2, 2).unwrap()).unwrap()
    }

    fn pmf(rows: [[f64; 2]; 2]) -> JointPmf {
        JointPmf::from_rows(&[rows[0].to_vec(), rows[1].to_vec()]).unwrap()
    }

    fn p_ref() -> JointPmf {
        pmf([[0.4, 0.1], [0.2, 0.3]])
    }

    #[test]
    fn ranking_is_lexicographic() {
        assert_eq!(rank(&[0, 0, 1], 2), 1);
        assert_eq!(rank(&[1, 0, 0], 2), 4);
        for r in 0..27 {
            assert_eq!(rank(&unrank(r, 3, 3), 3), r);
        }
    }

    #[test]
    fn codebook_sizes() {
        assert_eq!(codebook_size(3, 1.0 / 3.0).unwrap(), 2);
        assert_eq!(codebook_size(3, 0.5).unwrap(), 2);
        assert_eq!(codebook_size(2, 0.5).unwrap(), 2);
        assert_eq!(codebook_size(1, 0.5).unwrap(), 1);
        assert_eq!(codebook_size(4, 0.0).unwrap(), 1);
        assert!(codebook_size(2, -0.1).is_err());
    }

    #[test]
    fn quantizer_validation() {
        assert!(QuantizerMap::new(1, 2, vec![0, 1], vec![vec![0]]).is_err());
        assert!(QuantizerMap::new(1, 2, vec![0, 0], vec![vec![0], vec![1]]).is_err());
        assert!(QuantizerMap::new(1, 2, vec![0, 1], vec![vec![1], vec![1]]).is_err());
        let q = QuantizerMap::from_map(2, 2, &[3, 3, 1, 1]).unwrap();
        assert_eq!(q.codebook(), &[vec![0, 1], vec![1, 1]]);
        assert_eq!(q.assignment(), &[1, 1, 0, 0]);
        assert_eq!(q.rank_map(), vec![3, 3, 1, 1]);
        assert_eq!(q.rate(), 0.5);
    }

    #[test]
    fn identity_distortion_n1() {
        let p = p_ref();
        let c = class();
        let q = QuantizerMap::identity(1, 2).unwrap();
        // Σ_z P(z) ‖δ_z − P‖_F, term by term.
        let mut expected = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                let d = JointPmf::point_mass(2, 2, x, y).unwrap();
                expected += p.get(x, y) * crate::measures::f_distance(&d, &p, &c).unwrap();
            }
        }
        let got = quantizer_distortion(&q, &p, &c).unwrap();
        assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
    }

    #[test]
    fn point_mass_identity_is_zero() {
        let p = JointPmf::point_mass(2, 2, 1, 0).unwrap();
        let q = QuantizerMap::identity(3, 2).unwrap();
        assert!(quantizer_distortion(&q, &p, &class()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn distortion_bounded_by_two_b() {
        let c = class();
        for map in [[0usize, 0, 0, 0], [3, 2, 1, 0], [1, 1, 2, 2]] {
            let q = QuantizerMap::from_map(2, 2, &map).unwrap();
            assert!(quantizer_distortion(&q, &p_ref(), &c).unwrap() <= 2.0 * c.bound());
        }
    }

    #[test]
    fn exact_expectation_guard() {
        let q = QuantizerMap::identity(11, 2).unwrap();
        assert!(matches!(
            quantizer_distortion(&q, &p_ref(), &class()),
            Err(Error::GuardExceeded(_))
        ));
    }

    #[test]
    fn tables_agree_with_direct_sum() {
        let fam = DistributionFamily::new(vec![p_ref(), pmf([[0.1, 0.3], [0.35, 0.25]])]).unwrap();
        let tables = cost_tables(
            2,
            &fam,
            &class(),
            CostKind::Empirical,
            &SearchBudget::default(),
        )
        .unwrap();
        for map in [[0usize, 1, 2, 3], [0, 0, 3, 3], [2, 2, 2, 2]] {
            let q = QuantizerMap::from_map(2, 2, &map).unwrap();
            let via_tables = per_member_cost(&tables, &map);
            for (i, p) in fam.members().iter().enumerate() {
                let direct = quantizer_distortion(&q, p, &class()).unwrap();
                assert!((direct - via_tables[i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_rate_single_letter() {
        // n = 1, M = 1: best single codeword among the two letters.
        let fam = DistributionFamily::new(vec![p_ref(), pmf([[0.1, 0.3], [0.35, 0.25]])]).unwrap();
        let c = class();
        let candidates: Vec<f64> = (0..2)
            .map(|u| {
                let q = QuantizerMap::constant(1, 2, &[u]).unwrap();
                fam.members()
                    .iter()
                    .map(|p| quantizer_distortion(&q, p, &c).unwrap())
                    .fold(0.0, f64::max)
            })
            .collect();
        let best = candidates[0].min(candidates[1]);
        let r = optimal_quantizer(1, 0.0, &fam, &c, &SearchBudget::default()).unwrap();
        assert!((r.value - best).abs() < 1e-14);
        assert_eq!(r.quantizer.size(), 1);
    }

    #[test]
    fn greedy_is_deterministic_and_not_better() {
        let fam = DistributionFamily::new(vec![p_ref(), pmf([[0.1, 0.3], [0.35, 0.25]])]).unwrap();
        let b = SearchBudget::default();
        let exact = optimal_quantizer(2, 0.5, &fam, &class(), &b).unwrap();
        let g1 = greedy_quantizer(2, 0.5, &fam, &class(), 3, 7, &b).unwrap();
        let g2 = greedy_quantizer(2, 0.5, &fam, &class(), 3, 7, &b).unwrap();
        assert_eq!(g1, g2);
        assert!(!g1.exact && exact.exact);
        assert!(g1.value >= exact.value - 1e-12);
    }

    #[test]
    fn map_counts() {
        assert_eq!(map_count(4, 4), 256.0);
        assert_eq!(map_count(8, 8), 16_777_216.0);
        // 4 constants plus C(4,2)·(2^4 − 2) two-image maps.
        assert_eq!(map_count(4, 2), 4.0 + 6.0 * 14.0);
    }

    #[test]
    fn search_guard() {
        let fam = DistributionFamily::new(vec![p_ref()]).unwrap();
        let tight = SearchBudget {
            max_maps: 100.0,
            ..SearchBudget::default()
        };
        assert!(matches!(
            optimal_quantizer(3, 1.0, &fam, &class(), &tight),
            Err(Error::GuardExceeded(_))
        ));
    }

    #[test]
    fn encoder_examples() {
        let one = QuantizerMap::constant(2, 2, &[1, 0]).unwrap();
        assert_eq!(encode_type2(&[1, 1], &one).unwrap(), 0);
        let id = QuantizerMap::identity(3, 2).unwrap();
        assert_eq!(encode_type2(&[1, 0, 1], &id).unwrap(), 5);
        let q = QuantizerMap::from_map(2, 2, &[3, 3, 1, 1]).unwrap();
        for r in 0..4 {
            let y = unrank(r, 2, 2);
            let j = encode_type2(&y, &q).unwrap();
            assert_eq!(rank(&q.codebook()[j], 2), q.rank_map()[r]);
            // Re-encoding a codeword lands on a codeword that maps to itself
            // only when it is a fixed point; the map is consistent either way.
            assert_eq!(q.apply(&y).unwrap(), q.codebook()[j].as_slice());
        }
        assert!(encode_type2(&[1], &q).is_err());
    }

    #[test]
    fn learner_examples() {
        let c = class();
        let single = DistributionFamily::new(vec![p_ref()]).unwrap();
        let q = QuantizerMap::identity(2, 2).unwrap();
        let (ph, f) = learn_type2(0, &[1, 1], &q, &single, &c).unwrap();
        assert_eq!(ph, 0);
        assert_eq!(f, bayes_loss(&c, &p_ref()).unwrap().0);

        // Empirical of pairs (0,0),(1,1) equals member 1 exactly.
        let a = pmf([[0.25, 0.25], [0.25, 0.25]]);
        let b = pmf([[0.5, 0.0], [0.0, 0.5]]);
        let fam = DistributionFamily::new(vec![a.clone(), b.clone()]).unwrap();
        let j = encode_type2(&[0, 1], &q).unwrap();
        let (ph, _) = learn_type2(j, &[0, 1], &q, &fam, &c).unwrap();
        assert_eq!(ph, 1);

        // Empirical δ_(0,0): every g has L(g, a) = 0.5, so the distance to
        // `a` is 0.5; against `b` the best g is (1, 1) or (0, 0), also 0.5.
        // The tie goes to the lower index.
        let j = encode_type2(&[0, 0], &q).unwrap();
        let (ph, _) = learn_type2(j, &[0, 0], &q, &fam, &c).unwrap();
        assert_eq!(ph, 0);
    }

    #[test]
    fn singleton_full_rate_deterministic_p_has_zero_excess() {
        let p = JointPmf::point_mass(2, 2, 0, 1).unwrap();
        let fam = DistributionFamily::new(vec![p.clone()]).unwrap();
        let q = QuantizerMap::identity(3, 2).unwrap();
        let rec = type2_trial(&[(0, 1); 3], &q, &fam, &class(), &p).unwrap();
        assert_eq!(rec.excess, 0.0);
        assert!(rec.holds);
    }
}
