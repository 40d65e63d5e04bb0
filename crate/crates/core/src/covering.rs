//! ε-nets, covering numbers and ε-entropy of a finite distribution family
//! under the F-norm.
//!
//! Nets are subsets of the family itself. Exact minimal nets come from
//! subset enumeration by increasing size; greedy nets repeatedly take the
//! member covering the most still-uncovered members.

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::losses::FunctionClass;
use crate::measures::{f_distance, JointPmf};

/// Slack used when deciding whether a member is within `eps` of another.
pub const COVER_TOLERANCE: f64 = 1e-12;

/// Largest family for which exact covering numbers are computed.
pub const EXACT_FAMILY_LIMIT: usize = 20;

/// A nonempty finite list of pmfs with a common alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFamily {
    members: Vec<JointPmf>,
}

impl DistributionFamily {
    pub fn new(members: Vec<JointPmf>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty distribution family".into()))?;
        for m in &members[1..] {
            check_dims(first.dims(), m.dims())?;
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[JointPmf] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &JointPmf {
        &self.members[i]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.members[0].dims()
    }

    /// Index of the first member equal to `p` up to `1e-12` per entry.
    pub fn position(&self, p: &JointPmf) -> Option<usize> {
        self.members
            .iter()
            .position(|m| m.max_abs_diff(p).is_ok_and(|d| d <= 1e-12))
    }

    /// Pairwise F-norm distances.
    pub fn distance_matrix(&self, class: &FunctionClass) -> Result<Vec<Vec<f64>>> {
        check_dims(class.dims(), self.dims())?;
        let k = self.len();
        let mut d = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in i + 1..k {
                let v = f_distance(&self.members[i], &self.members[j], class)?;
                d[i][j] = v;
                d[j][i] = v;
            }
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverMode {
    Exact,
    Greedy,
}

/// A subset of a family that covers every member within `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonNet {
    pub member_indices: Vec<usize>,
    pub epsilon: f64,
    /// `max_P min_m ‖P − P_m‖_F` actually attained by this net.
    pub certified_radius: f64,
    /// `false` when the net came from the greedy search and its size is
    /// only an upper bound on the covering number.
    pub minimal: bool,
}

impl EpsilonNet {
    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }

    /// Checks that the net is a nonempty set of distinct family indices
    /// whose covering radius is within `epsilon`.
    pub fn validate(&self, family: &DistributionFamily, class: &FunctionClass) -> Result<()> {
        if self.member_indices.is_empty() {
            return Err(Error::InvalidArgument("empty net".into()));
        }
        let mut seen = vec![false; family.len()];
        for &i in &self.member_indices {
            if i >= family.len() {
                return Err(Error::IndexOutOfRange {
                    what: "net member",
                    index: i,
                    size: family.len(),
                });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!("net member {i} repeated")));
            }
        }
        let radius = covering_radius(&family.distance_matrix(class)?, &self.member_indices);
        if radius > self.epsilon + 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "net radius {radius} exceeds epsilon {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

fn covering_radius(dist: &[Vec<f64>], net: &[usize]) -> f64 {
    dist.iter()
        .map(|row| net.iter().map(|&j| row[j]).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Covering number `N_F(eps, family)` together with a net attaining it.
///
/// In greedy mode the count is an upper bound and the net is flagged as not
/// minimal.
pub fn covering_number(
    family: &DistributionFamily,
    eps: f64,
    class: &FunctionClass,
    mode: CoverMode,
) -> Result<(usize, EpsilonNet)> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {eps} must be nonnegative"
        )));
    }
    let dist = family.distance_matrix(class)?;
    let indices = match mode {
        CoverMode::Exact => {
            if family.len() > EXACT_FAMILY_LIMIT {
                return Err(Error::GuardExceeded(format!(
                    "exact covering limited to {EXACT_FAMILY_LIMIT} members, family has {}",
                    family.len()
                )));
            }
            exact_net(&dist, eps)
        }
        CoverMode::Greedy => greedy_net(&dist, eps),
    };
    let certified_radius = covering_radius(&dist, &indices);
    Ok((
        indices.len(),
        EpsilonNet {
            member_indices: indices,
            epsilon: eps,
            certified_radius,
            minimal: mode == CoverMode::Exact,
        },
    ))
}

fn cover_masks(dist: &[Vec<f64>], eps: f64) -> Vec<u32> {
    // masks[j] has bit i set when member j covers member i.
    (0..dist.len())
        .map(|j| {
            dist.iter()
                .enumerate()
                .filter(|(_, row)| row[j] <= eps + COVER_TOLERANCE)
                .fold(0u32, |m, (i, _)| m | (1 << i))
        })
        .collect()
}

fn exact_net(dist: &[Vec<f64>], eps: f64) -> Vec<usize> {
    let k = dist.len();
    let masks = cover_masks(dist, eps);
    let full: u32 = if k == 32 { u32::MAX } else { (1 << k) - 1 };
    for size in 1..=k {
        // Lexicographic combinations of `size` indices.
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let covered = combo.iter().fold(0u32, |m, &j| m | masks[j]);
            if covered == full {
                return combo;
            }
            let Some(pos) = (0..size).rev().find(|&p| combo[p] < k - size + p) else {
                break;
            };
            combo[pos] += 1;
            for q in pos + 1..size {
                combo[q] = combo[q - 1] + 1;
            }
        }
    }
    unreachable!("the whole family always covers itself")
}

fn greedy_net(dist: &[Vec<f64>], eps: f64) -> Vec<usize> {
    let k = dist.len();
    let covers = |j: usize, i: usize| dist[i][j] <= eps + COVER_TOLERANCE;
    let mut uncovered = vec![true; k];
    let mut remaining = k;
    let mut net = Vec::new();
    while remaining > 0 {
        let (best, _) = (0..k)
            .map(|j| (j, (0..k).filter(|&i| uncovered[i] && covers(j, i)).count()))
            .fold((0, 0), |acc, c| if c.1 > acc.1 { c } else { acc });
        net.push(best);
        for (i, u) in uncovered.iter_mut().enumerate() {
            if *u && covers(best, i) {
                *u = false;
                remaining -= 1;
            }
        }
    }
    net.sort_unstable();
    net
}

/// `log2 N_F(eps_n) / n` for each `(n, eps_n)`.
///
/// `n` must increase strictly and `eps_n` must not increase along the list.
pub fn entropy_rate_profile(
    family: &DistributionFamily,
    class: &FunctionClass,
    eps_sequence: &[(usize, f64)],
    mode: CoverMode,
) -> Result<Vec<(usize, f64)>> {
    for w in eps_sequence.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::InvalidArgument("n must increase strictly".into()));
        }
        if w[1].1 > w[0].1 {
            return Err(Error::InvalidArgument(format!(
                "epsilon sequence increases from {} at n={} to {} at n={}",
                w[0].1, w[0].0, w[1].1, w[1].0
            )));
        }
    }
    eps_sequence
        .iter()
        .map(|&(n, eps)| {
            if n == 0 {
                return Err(Error::InvalidArgument("n must be positive".into()));
            }
            let (count, _) = covering_number(family, eps, class, mode)?;
            Ok((n, (count as f64).log2() / n as f64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{classification_class, ClassifierFamily};

    fn class() -> FunctionClass {
        classification_class(&ClassifierFamily::all(2, 2).unwrap()).unwrap()
    }

    fn spread_family(k: usize) -> DistributionFamily {
        // Members move mass along the diagonal, pairwise F-distance ≥ 0.1.
        DistributionFamily::new(
            (0..k)
                .map(|i| {
                    let a = 0.05 + 0.9 * i as f64 / (k.max(2) - 1) as f64;
                    JointPmf::from_rows(&[vec![a / 2.0, (1.0 - a) / 2.0], vec![0.25, 0.25]])
                        .unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn singleton_family() {
        let fam = DistributionFamily::new(vec![JointPmf::uniform(2, 2).unwrap()]).unwrap();
        for eps in [0.0, 0.3, 5.0] {
            let (c, net) = covering_number(&fam, eps, &class(), CoverMode::Exact).unwrap();
            assert_eq!(c, 1);
            assert_eq!(net.member_indices, vec![0]);
        }
    }

    #[test]
    fn large_eps_gives_one() {
        let fam = spread_family(5);
        let d = fam.distance_matrix(&class()).unwrap();
        let diam = d.iter().flatten().copied().fold(0.0, f64::max);
        for mode in [CoverMode::Exact, CoverMode::Greedy] {
            assert_eq!(covering_number(&fam, diam, &class(), mode).unwrap().0, 1);
        }
    }

    #[test]
    fn zero_eps_needs_every_distinct_member() {
        let fam = spread_family(6);
        let (c, net) = covering_number(&fam, 0.0, &class(), CoverMode::Exact).unwrap();
        assert_eq!(c, 6);
        assert_eq!(net.certified_radius, 0.0);
        assert!(net.minimal);
    }

    #[test]
    fn nets_validate() {
        let fam = spread_family(6);
        for eps in [0.05, 0.2, 0.4] {
            for mode in [CoverMode::Exact, CoverMode::Greedy] {
                let (_, net) = covering_number(&fam, eps, &class(), mode).unwrap();
                net.validate(&fam, &class()).unwrap();
            }
        }
        let bad = EpsilonNet {
            member_indices: vec![0],
            epsilon: 0.01,
            certified_radius: 0.0,
            minimal: false,
        };
        assert!(bad.validate(&fam, &class()).is_err());
    }

    #[test]
    fn exact_guard() {
        let fam = spread_family(21);
        assert!(matches!(
            covering_number(&fam, 0.1, &class(), CoverMode::Exact),
            Err(Error::GuardExceeded(_))
        ));
        assert!(covering_number(&fam, 0.1, &class(), CoverMode::Greedy).is_ok());
        assert!(covering_number(&fam, -0.1, &class(), CoverMode::Greedy).is_err());
    }

    #[test]
    fn profile_examples() {
        let one = DistributionFamily::new(vec![JointPmf::uniform(2, 2).unwrap()]).unwrap();
        let seq: Vec<(usize, f64)> = [10, 100, 1000].iter().map(|&n| (n, 0.1)).collect();
        let prof = entropy_rate_profile(&one, &class(), &seq, CoverMode::Exact).unwrap();
        assert!(prof.iter().all(|(_, r)| *r == 0.0));

        // eps below every pairwise distance: the count saturates at K.
        let fam = spread_family(4);
        let seq = [(10, 0.01), (100, 0.005), (1000, 0.001)];
        let prof = entropy_rate_profile(&fam, &class(), &seq, CoverMode::Exact).unwrap();
        for (n, r) in prof {
            assert!((r - 2.0 / n as f64).abs() < 1e-15);
        }

        assert!(
            entropy_rate_profile(&fam, &class(), &[(10, 0.1), (20, 0.2)], CoverMode::Exact)
                .is_err()
        );
    }
}
