mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ratelearn::covering::{covering_number, CoverMode, DistributionFamily};
use ratelearn::losses::{
    bayes_loss, classification_class, expected_loss, ClassifierFamily, FunctionClass,
};
use ratelearn::measures::{f_distance, f_norm, variational_distance, JointPmf};
use ratelearn::type2::{
    encode_type2, greedy_quantizer, optimal_quantizer, quantizer_distortion, unrank, QuantizerMap,
    SearchBudget,
};

// Instances are drawn from a seeded generator so proptest only has to pick
// the seed and the alphabet.
fn instance(seed: u64, side: usize) -> (JointPmf, JointPmf, JointPmf, FunctionClass, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = if seed.is_multiple_of(3) { 0.3 } else { 0.0 };
    let p = random_pmf(&mut rng, side, side, zero);
    let q = random_pmf(&mut rng, side, side, zero);
    let r = random_pmf(&mut rng, side, side, zero);
    let bound = 0.5 + 3.0 * rand::Rng::gen::<f64>(&mut rng);
    let class = random_class(&mut rng, side, side, 1 + (seed % 12) as usize, bound);
    let lambda = rand::Rng::gen::<f64>(&mut rng);
    (p, q, r, class, lambda)
}

fn all_classifiers(side: usize) -> FunctionClass {
    classification_class(&ClassifierFamily::all(side, side).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn norm_bounded_by_twice_b(seed in any::<u64>(), side in 2usize..=3) {
        let (p, q, _, class, _) = instance(seed, side);
        prop_assert!(f_distance(&p, &q, &class).unwrap() <= 2.0 * class.bound() + 1e-9);
    }

    #[test]
    fn norm_lipschitz_in_variational(seed in any::<u64>(), side in 2usize..=3) {
        let (p, q, r, class, _) = instance(seed, side);
        let a = f_distance(&p, &q, &class).unwrap();
        let b = f_distance(&p, &r, &class).unwrap();
        let v = variational_distance(&q, &r).unwrap();
        prop_assert!((a - b).abs() <= class.bound() * v + 1e-9);
        prop_assert!(a <= class.bound() * variational_distance(&p, &q).unwrap() + 1e-9);
    }

    #[test]
    fn norm_convex_in_first_argument(seed in any::<u64>(), side in 2usize..=3) {
        let (p, q1, q2, class, lambda) = instance(seed, side);
        let mix = q1.mix(&q2, lambda).unwrap();
        let lhs = f_distance(&mix, &p, &class).unwrap();
        let rhs = lambda * f_distance(&q1, &p, &class).unwrap()
            + (1.0 - lambda) * f_distance(&q2, &p, &class).unwrap();
        prop_assert!(lhs <= rhs + 1e-9);
    }

    #[test]
    fn norm_sign_symmetric_and_matches_oracle(seed in any::<u64>(), side in 2usize..=3) {
        let (p, q, _, class, _) = instance(seed, side);
        let mu = p.minus(&q).unwrap();
        let n = f_norm(&mu, &class).unwrap();
        prop_assert_eq!(n, f_norm(&mu.negated(), &class).unwrap());
        prop_assert!((n - norm_oracle(p.probs(), q.probs(), &class)).abs() <= 1e-12);
    }

    #[test]
    fn variational_is_partition_supremum(seed in any::<u64>(), xs in 1usize..=4, ys in 2usize..=4) {
        prop_assume!(xs * ys <= 8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_pmf(&mut rng, xs, ys, 0.2);
        let q = random_pmf(&mut rng, xs, ys, 0.2);
        let v = variational_distance(&p, &q).unwrap();
        prop_assert!((v - partition_sup_oracle(p.probs(), q.probs())).abs() <= 1e-12);
    }

    #[test]
    fn bayes_loss_lipschitz(seed in any::<u64>(), side in 2usize..=3) {
        let (p, q, _, class, _) = instance(seed, side);
        let a = bayes_loss(&class, &p).unwrap().1;
        let b = bayes_loss(&class, &q).unwrap().1;
        prop_assert!((a - b).abs() <= f_distance(&p, &q, &class).unwrap() + 1e-12);
    }

    #[test]
    fn expected_loss_linear(seed in any::<u64>(), side in 2usize..=3) {
        let (p, q, _, class, lambda) = instance(seed, side);
        let mix = p.mix(&q, lambda).unwrap();
        for f in 0..class.len() {
            let lhs = expected_loss(f, &class, &mix).unwrap();
            let rhs = lambda * expected_loss(f, &class, &p).unwrap()
                + (1.0 - lambda) * expected_loss(f, &class, &q).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }
    }

    #[test]
    fn bayes_loss_closed_form_and_certificate(seed in any::<u64>(), side in 2usize..=3) {
        let (p, _, _, _, _) = instance(seed, side);
        let class = all_classifiers(side);
        let (idx, val) = bayes_loss(&class, &p).unwrap();
        prop_assert!((val - bayes_closed_form(&p)).abs() <= 1e-12);
        prop_assert_eq!(expected_loss(idx, &class, &p).unwrap(), val);
        for f in 0..class.len() {
            prop_assert!(val <= expected_loss(f, &class, &p).unwrap());
        }
    }
}

fn random_family(seed: u64, k: usize) -> (DistributionFamily, FunctionClass) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members = (0..k).map(|_| random_pmf(&mut rng, 2, 2, 0.0)).collect();
    (
        DistributionFamily::new(members).unwrap(),
        all_classifiers(2),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covering_monotone_and_greedy_dominates(seed in any::<u64>(), k in 1usize..=8) {
        let (fam, class) = random_family(seed, k);
        let dist = fam.distance_matrix(&class).unwrap();
        let mut last = usize::MAX;
        for eps in [0.0, 0.02, 0.05, 0.1, 0.2, 0.4] {
            let (exact, net) = covering_number(&fam, eps, &class, CoverMode::Exact).unwrap();
            let (greedy, gnet) = covering_number(&fam, eps, &class, CoverMode::Greedy).unwrap();
            prop_assert_eq!(exact, subset_cover_oracle(&dist, eps));
            prop_assert!(greedy >= exact);
            prop_assert!(exact <= last);
            prop_assert!(net.certified_radius <= eps + 1e-9);
            prop_assert!(gnet.certified_radius <= eps + 1e-9);
            last = exact;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dhat_monotone_in_rate_and_below_greedy(seed in any::<u64>(), n in 1usize..=2) {
        let (fam, class) = random_family(seed, 2);
        let budget = SearchBudget::default();
        let mut last = f64::INFINITY;
        for rate in [0.0, 0.5, 1.0] {
            let opt = optimal_quantizer(n, rate, &fam, &class, &budget).unwrap();
            let greedy = greedy_quantizer(n, rate, &fam, &class, 4, seed, &budget).unwrap();
            prop_assert!(opt.value <= last + 1e-12);
            prop_assert!(opt.value <= greedy.value + 1e-12);
            prop_assert!(opt.value <= 2.0 * class.bound());
            last = opt.value;
        }
    }

    #[test]
    fn codec_consistent_and_optimum_matches_brute_force(seed in any::<u64>(), n in 1usize..=3) {
        let (fam, class) = random_family(seed, 2);
        let opt = optimal_quantizer(n, 1.0 / 3.0, &fam, &class, &SearchBudget::default()).unwrap();
        let q = &opt.quantizer;
        for r in 0..2usize.pow(n as u32) {
            let y = unrank(r, n, 2);
            let k = encode_type2(&y, q).unwrap();
            prop_assert_eq!(&q.codebook()[k][..], q.apply(&y).unwrap());
        }
        let (all, idempotent) = brute_force_dhat(&fam, &class, n, q.size());
        prop_assert!((opt.value - all).abs() <= 1e-12);
        prop_assert!(opt.value <= idempotent + 1e-12);
    }
}

/// Best worst-case distortion over every map `Y^n -> Y^n` with at most
/// `m <= 2` images, and over those that also fix their own images.
fn brute_force_dhat(
    fam: &DistributionFamily,
    class: &FunctionClass,
    n: usize,
    m: usize,
) -> (f64, f64) {
    assert!(m <= 2);
    let size = 2usize.pow(n as u32);
    let (mut all, mut idempotent) = (f64::INFINITY, f64::INFINITY);
    for a in 0..size {
        for b in a..size {
            if m == 1 && b != a {
                continue;
            }
            for mask in 0..1usize << size {
                let map: Vec<usize> = (0..size)
                    .map(|y| if mask >> y & 1 == 1 { b } else { a })
                    .collect();
                let q = QuantizerMap::from_map(n, 2, &map).unwrap();
                let v = fam
                    .members()
                    .iter()
                    .map(|p| quantizer_distortion(&q, p, class).unwrap())
                    .fold(0.0, f64::max);
                all = all.min(v);
                if map[a] == a && map[b] == b {
                    idempotent = idempotent.min(v);
                }
            }
        }
    }
    (all, idempotent)
}

// The minimax optimum over all maps can send one of its own codewords to a
// different codeword; forcing re-encoding to be idempotent costs distortion.
#[test]
fn optimum_need_not_fix_its_codewords() {
    let (fam, class) = random_family(848063301638842960, 2);
    let opt = optimal_quantizer(3, 1.0 / 3.0, &fam, &class, &SearchBudget::default()).unwrap();
    let (all, idempotent) = brute_force_dhat(&fam, &class, 3, 2);
    assert!((opt.value - all).abs() <= 1e-12);
    assert!(idempotent > all + 5e-4, "{idempotent} vs {all}");
    let moved = opt
        .quantizer
        .codebook()
        .iter()
        .any(|w| opt.quantizer.apply(w).unwrap() != &w[..]);
    assert!(moved);
}
