//! Evaluation metrics with exactly specified tie handling, so repeated
//! runs reproduce reports bit for bit.

use crate::error::{Error, Result};

/// Fraction of positions where prediction equals label.
pub fn accuracy(preds: &[usize], labels: &[usize]) -> Result<f64> {
    if preds.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "accuracy: {} predictions vs {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::Invalid("accuracy of an empty set".into()));
    }
    let hits = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Probability that a uniformly random positive outscores a uniformly
/// random negative, with ties counted half ( Mann-Whitney form, computed
/// from tie-averaged ranks).
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "roc_auc: {} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Invalid(
            "roc_auc requires both classes present".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("scores are finite"));

    // average rank within each tie group (1-based ranks)
    let mut ranks = vec![0.0; scores.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }

    let positive_rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(&r, _)| r)
        .sum();
    let u = positive_rank_sum - (positives * (positives + 1)) as f64 / 2.0;
    Ok(u / (positives * negatives) as f64)
}

/// Area under the precision-recall sweep in descending score order:
/// sum over ranks k of (recall_k - recall_{k-1}) * precision_k.
/// Ties keep their stable input order, which makes the value
/// deterministic for identical inputs.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "average_precision: {} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(Error::Invalid(
            "average_precision requires at least one positive".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores are finite")
    });

    let mut true_positives = 0usize;
    let mut ap = 0.0;
    for (k, &idx) in order.iter().enumerate() {
        if labels[idx] {
            true_positives += 1;
            let precision = true_positives as f64 / (k + 1) as f64;
            ap += precision / positives as f64;
        }
    }
    Ok(ap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn accuracy_basics() {
        assert_eq!(accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0], &[0, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 1, 0, 0], &[1, 1, 0, 1]).unwrap(), 0.75);
        assert!(accuracy(&[1], &[1, 2]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn auc_of_separated_scores_is_one() {
        let auc = roc_auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap();
        assert_eq!(auc, 1.0);
    }

    #[test]
    fn auc_of_constant_scores_is_half() {
        let auc = roc_auc(&[0.5; 6], &[true, false, true, false, false, true]).unwrap();
        assert_eq!(auc, 0.5);
    }

    #[test]
    fn auc_hand_example() {
        let auc = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap();
        assert_eq!(auc, 0.75);
    }

    #[test]
    fn auc_rejects_single_class() {
        assert!(roc_auc(&[0.1, 0.2], &[true, true]).is_err());
        assert!(roc_auc(&[0.1, 0.2], &[false, false]).is_err());
    }

    /// Brute-force positive/negative pair comparison, the independent
    /// oracle for the rank-based implementation.
    fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            if !li {
                continue;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if lj {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn auc_matches_pairwise_oracle_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let n = rng.gen_range(2..=50);
            // coarse scores force plenty of ties
            let scores: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..10) as f64) / 10.0).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            labels[0] = true;
            labels[n - 1] = false;
            let fast = roc_auc(&scores, &labels).unwrap();
            let slow = pairwise_auc(&scores, &labels);
            assert_eq!(fast, slow, "scores {scores:?} labels {labels:?}");
        }
    }

    #[test]
    fn auc_is_invariant_under_monotone_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let n = rng.gen_range(4..=30);
            let scores: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            labels[0] = true;
            labels[1] = false;
            let base = roc_auc(&scores, &labels).unwrap();
            let exp_scores: Vec<f64> = scores.iter().map(|&s| s.exp()).collect();
            let affine_scores: Vec<f64> = scores.iter().map(|&s| 3.0 * s + 7.0).collect();
            assert_eq!(base, roc_auc(&exp_scores, &labels).unwrap());
            assert_eq!(base, roc_auc(&affine_scores, &labels).unwrap());
        }
    }

    #[test]
    fn ap_perfect_ranking_is_one() {
        let ap =
            average_precision(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap();
        assert_eq!(ap, 1.0);
    }

    #[test]
    fn ap_single_positive_ranked_second() {
        let ap =
            average_precision(&[0.9, 0.8, 0.2, 0.1], &[false, true, false, false]).unwrap();
        assert_eq!(ap, 0.5);
    }

    #[test]
    fn ap_all_positive_is_one() {
        let ap = average_precision(&[0.5, 0.1, 0.9], &[true, true, true]).unwrap();
        assert_relative_eq!(ap, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn ap_rejects_no_positives() {
        assert!(average_precision(&[0.5, 0.1], &[false, false]).is_err());
    }

    /// Hand sweep over descending scores, with stable tie order.
    fn sweep_ap(scores: &[f64], labels: &[bool]) -> f64 {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
        let total: usize = labels.iter().filter(|&&l| l).count();
        let mut tp = 0;
        let mut last_recall = 0.0;
        let mut ap = 0.0;
        for (k, &idx) in order.iter().enumerate() {
            if labels[idx] {
                tp += 1;
            }
            let recall = tp as f64 / total as f64;
            let precision = tp as f64 / (k + 1) as f64;
            ap += (recall - last_recall) * precision;
            last_recall = recall;
        }
        ap
    }

    #[test]
    fn ap_matches_hand_sweep_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..100 {
            let n = rng.gen_range(2..=40);
            let scores: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..8) as f64) / 8.0).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            labels[0] = true;
            let fast = average_precision(&scores, &labels).unwrap();
            let slow = sweep_ap(&scores, &labels);
            assert_relative_eq!(fast, slow, max_relative = 1e-12);
        }
    }
}
