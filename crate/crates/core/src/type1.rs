//! Type I scheme: the encoder sees the whole training sequence, quantizes
//! its empirical distribution onto an ε-net of the family and sends the
//! index; the learner minimizes the loss under the decoded net member.

use serde::{Deserialize, Serialize};

use crate::covering::{covering_number, CoverMode, DistributionFamily, EpsilonNet};
use crate::error::{check_dims, Error, Result};
use crate::losses::{argmin_loss, bayes_loss, expected_loss, FunctionClass};
use crate::measures::{empirical, f_norm_values, EmpiricalMeasure, JointPmf};

/// Slack applied to every per-realization inequality check.
pub const CHAIN_TOLERANCE: f64 = 1e-9;

/// `eps_n = c / log2(n + 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub c: f64,
}

impl EpsilonSchedule {
    pub fn epsilon(&self, n: usize) -> f64 {
        self.c / ((n + 2) as f64).log2()
    }
}

/// Outcome of one training realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Transmitted index.
    pub index: usize,
    /// Learned function.
    pub f_index: usize,
    /// `L(f̂, P)` under the true distribution.
    pub loss: f64,
    /// `L*(F, P)`.
    pub bayes_loss: f64,
    pub excess: f64,
    /// Right-hand side of the proof chain, excluding `L*`.
    pub bound: f64,
    /// `loss ≤ bayes_loss + bound + CHAIN_TOLERANCE`.
    pub holds: bool,
    /// Whether the true distribution belongs to the family.
    pub in_family: bool,
}

#[derive(Debug, Clone)]
pub struct Type1Scheme {
    family: DistributionFamily,
    class: FunctionClass,
    net: EpsilonNet,
    epsilon_n: f64,
    // Learner output for each net position.
    acts: Vec<usize>,
}

impl Type1Scheme {
    /// Builds the scheme on a (minimal, in exact mode) `epsilon_n`-net.
    pub fn new(
        family: DistributionFamily,
        class: FunctionClass,
        epsilon_n: f64,
        mode: CoverMode,
    ) -> Result<Self> {
        let (_, net) = covering_number(&family, epsilon_n, &class, mode)?;
        Self::with_net(family, class, net)
    }

    /// Builds the scheme on a caller-supplied net, which must cover the
    /// family within its declared epsilon.
    pub fn with_net(
        family: DistributionFamily,
        class: FunctionClass,
        net: EpsilonNet,
    ) -> Result<Self> {
        check_dims(class.dims(), family.dims())?;
        net.validate(&family, &class)?;
        let acts = net
            .member_indices
            .iter()
            .map(|&m| argmin_loss(&class, family.member(m).probs()).0)
            .collect();
        Ok(Self {
            epsilon_n: net.epsilon,
            family,
            class,
            net,
            acts,
        })
    }

    pub fn family(&self) -> &DistributionFamily {
        &self.family
    }

    pub fn class(&self) -> &FunctionClass {
        &self.class
    }

    pub fn net(&self) -> &EpsilonNet {
        &self.net
    }

    pub fn epsilon_n(&self) -> f64 {
        self.epsilon_n
    }

    /// The net member at position `j`.
    pub fn net_member(&self, j: usize) -> Result<&JointPmf> {
        let m = self
            .net
            .member_indices
            .get(j)
            .ok_or(Error::IndexOutOfRange {
                what: "net index",
                index: j,
                size: self.net.len(),
            })?;
        Ok(self.family.member(*m))
    }

    /// Net position closest to the empirical measure in F-norm, lowest on
    /// ties.
    pub fn encode_empirical(&self, emp: &EmpiricalMeasure) -> Result<usize> {
        check_dims(self.family.dims(), emp.dims())?;
        let freq = emp.frequencies();
        let mut diff = vec![0.0; freq.len()];
        let mut best = (0, f64::INFINITY);
        for (j, &m) in self.net.member_indices.iter().enumerate() {
            for ((d, e), p) in diff
                .iter_mut()
                .zip(&freq)
                .zip(self.family.member(m).probs())
            {
                *d = e - p;
            }
            let dist = f_norm_values(&diff, &self.class);
            if dist < best.1 {
                best = (j, dist);
            }
        }
        Ok(best.0)
    }
}

/// Encoder: index of the net member nearest to the sample's empirical
/// measure.
pub fn encode_type1(sample: &[(usize, usize)], scheme: &Type1Scheme) -> Result<usize> {
    let (xs, ys) = scheme.family.dims();
    scheme.encode_empirical(&empirical(xs, ys, sample)?)
}

/// Learner: the best-in-class function under net member `j`.
pub fn learn_type1(j: usize, scheme: &Type1Scheme) -> Result<usize> {
    scheme.acts.get(j).copied().ok_or(Error::IndexOutOfRange {
        what: "net index",
        index: j,
        size: scheme.net.len(),
    })
}

/// Runs encoder and learner on `sample` and scores the result against
/// `true_p`, with bound `4‖P − P_{Z^n}‖_F + 2 eps_n`.
pub fn type1_trial(
    sample: &[(usize, usize)],
    scheme: &Type1Scheme,
    true_p: &JointPmf,
) -> Result<TrialRecord> {
    let (xs, ys) = scheme.family.dims();
    check_dims((xs, ys), true_p.dims())?;
    let emp = empirical(xs, ys, sample)?;
    let index = scheme.encode_empirical(&emp)?;
    let f_index = learn_type1(index, scheme)?;
    let loss = expected_loss(f_index, &scheme.class, true_p)?;
    let (_, l_star) = bayes_loss(&scheme.class, true_p)?;
    let gc_term = f_norm_values(emp.minus(true_p)?.values(), &scheme.class);
    let bound = 4.0 * gc_term + 2.0 * scheme.epsilon_n;
    Ok(TrialRecord {
        index,
        f_index,
        loss,
        bayes_loss: l_star,
        excess: loss - l_star,
        bound,
        holds: loss <= l_star + bound + CHAIN_TOLERANCE,
        in_family: scheme.family.position(true_p).is_some(),
    })
}

/// `log2 |net| / n`, in bits per training pair.
pub fn rate_of_scheme(scheme: &Type1Scheme, n: usize) -> f64 {
    (scheme.net.len() as f64).log2() / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{classification_class, ClassifierFamily};
    use crate::measures::f_distance;

    fn class() -> FunctionClass {
        classification_class(&ClassifierFamily::all(2, 2).unwrap()).unwrap()
    }

    fn pmf(rows: [[f64; 2]; 2]) -> JointPmf {
        JointPmf::from_rows(&[rows[0].to_vec(), rows[1].to_vec()]).unwrap()
    }

    fn two_member() -> Type1Scheme {
        let a = pmf([[0.85, 0.05], [0.05, 0.05]]);
        let b = pmf([[0.05, 0.05], [0.05, 0.85]]);
        let fam = DistributionFamily::new(vec![a, b]).unwrap();
        Type1Scheme::new(fam, class(), 0.0, CoverMode::Exact).unwrap()
    }

    #[test]
    fn single_member_net_always_sends_zero() {
        let fam = DistributionFamily::new(vec![pmf([[0.4, 0.1], [0.2, 0.3]])]).unwrap();
        let s = Type1Scheme::new(fam, class(), 0.1, CoverMode::Exact).unwrap();
        assert_eq!(encode_type1(&[(0, 1), (1, 1)], &s).unwrap(), 0);
        assert_eq!(encode_type1(&[(1, 0)], &s).unwrap(), 0);
        assert_eq!(rate_of_scheme(&s, 100), 0.0);
    }

    #[test]
    fn exact_empirical_picks_member() {
        let a = pmf([[0.5, 0.0], [0.25, 0.25]]);
        let b = pmf([[0.25, 0.25], [0.0, 0.5]]);
        let fam = DistributionFamily::new(vec![a, b]).unwrap();
        let s = Type1Scheme::new(fam, class(), 0.0, CoverMode::Exact).unwrap();
        // Empirical measure equals member 1 exactly.
        assert_eq!(
            encode_type1(&[(0, 0), (0, 1), (1, 1), (1, 1)], &s).unwrap(),
            1
        );
        assert_eq!(
            encode_type1(&[(0, 0), (0, 0), (1, 0), (1, 1)], &s).unwrap(),
            0
        );
    }

    #[test]
    fn encoder_distances_by_hand() {
        let s = two_member();
        let sample = vec![(0, 0); 10];
        let emp = empirical(2, 2, &sample).unwrap().to_pmf();
        let da = f_distance(&emp, s.net_member(0).unwrap(), &class()).unwrap();
        let db = f_distance(&emp, s.net_member(1).unwrap(), &class()).unwrap();
        // δ_(0,0) − A = [0.15, −0.05, −0.05, −0.05]: best g = (1, ·) gives 0.1.
        // δ_(0,0) − B = [0.95, −0.05, −0.05, −0.85]: g = (1, 1) gives 0.9.
        assert!((da - 0.1).abs() < 1e-12, "{da}");
        assert!((db - 0.9).abs() < 1e-12, "{db}");
        assert_eq!(encode_type1(&sample, &s).unwrap(), 0);
    }

    #[test]
    fn learner_is_pointwise_map() {
        // Product pmf with P_Y|X favouring y=1 at x=0 and y=0 at x=1.
        let p = pmf([[0.12, 0.18], [0.42, 0.28]]);
        let fam = DistributionFamily::new(vec![p.clone(), p]).unwrap();
        let net = EpsilonNet {
            member_indices: vec![0, 1],
            epsilon: 0.0,
            certified_radius: 0.0,
            minimal: false,
        };
        let s = Type1Scheme::with_net(fam, class(), net).unwrap();
        let g = ClassifierFamily::all(2, 2).unwrap();
        assert_eq!(g.maps()[learn_type1(0, &s).unwrap()], vec![1, 0]);
        assert_eq!(learn_type1(0, &s).unwrap(), learn_type1(1, &s).unwrap());
        assert!(learn_type1(2, &s).is_err());
    }

    #[test]
    fn singleton_family_has_zero_excess() {
        let p = pmf([[0.4, 0.1], [0.2, 0.3]]);
        let fam = DistributionFamily::new(vec![p.clone()]).unwrap();
        let s = Type1Scheme::new(fam, class(), 0.2, CoverMode::Exact).unwrap();
        let rec = type1_trial(&[(1, 0), (1, 0), (0, 1)], &s, &p).unwrap();
        assert_eq!(rec.excess, 0.0);
        assert!(rec.holds && rec.in_family);
    }

    #[test]
    fn out_of_family_is_flagged() {
        let s = two_member();
        let q = JointPmf::uniform(2, 2).unwrap();
        let rec = type1_trial(&[(0, 0)], &s, &q).unwrap();
        assert!(!rec.in_family);
    }

    #[test]
    fn rates() {
        let fam = DistributionFamily::new(
            (0..4)
                .map(|i| {
                    let a = 0.1 + 0.2 * i as f64;
                    pmf([[a / 2.0, (1.0 - a) / 2.0], [0.25, 0.25]])
                })
                .collect(),
        )
        .unwrap();
        let s = Type1Scheme::new(fam, class(), 0.0, CoverMode::Exact).unwrap();
        assert_eq!(s.net().len(), 4);
        assert_eq!(rate_of_scheme(&s, 2), 1.0);
    }

    #[test]
    fn schedule() {
        let s = EpsilonSchedule { c: 1.0 };
        assert_eq!(s.epsilon(2), 0.5);
        assert!(s.epsilon(4000) < s.epsilon(50));
    }
}
