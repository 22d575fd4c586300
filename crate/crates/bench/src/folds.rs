//! Cross-validation splits: ten stratified folds when there are more than 30
//! examples, leave-one-out otherwise.

use elastic_core::learn::Label;
use elastic_core::seed;
use rand::seq::SliceRandom;

/// Indices of one train/validation split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Number of folds for `n` examples.
pub fn fold_count(n: usize) -> usize {
    if n > 30 {
        10
    } else {
        n
    }
}

/// Split example indices into folds. With ten folds each class is shuffled
/// and dealt round-robin, continuing from where the previous class stopped,
/// so fold sizes and class counts differ by at most one.
pub fn make_folds(labels: &[Label], seed_value: u64) -> Vec<Fold> {
    let n = labels.len();
    let k = fold_count(n);
    let mut assignment = vec![0usize; n];
    if k == n {
        for (i, a) in assignment.iter_mut().enumerate() {
            *a = i;
        }
    } else {
        let mut next = 0;
        for (c, class) in [Label::Negative, Label::Positive].into_iter().enumerate() {
            let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
            idx.shuffle(&mut seed::rng(seed::derive(seed_value, c as u64)));
            for i in idx {
                assignment[i] = next % k;
                next += 1;
            }
        }
    }
    (0..k)
        .map(|f| Fold {
            train: (0..n).filter(|&i| assignment[i] != f).collect(),
            validation: (0..n).filter(|&i| assignment[i] == f).collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(pos: usize, neg: usize) -> Vec<Label> {
        let mut v = vec![Label::Positive; pos];
        v.extend(vec![Label::Negative; neg]);
        v
    }

    #[test]
    fn small_sets_use_leave_one_out() {
        let folds = make_folds(&labels(14, 14), 1);
        assert_eq!(folds.len(), 28);
        for (i, f) in folds.iter().enumerate() {
            assert_eq!(f.validation, vec![i]);
            assert_eq!(f.train.len(), 27);
        }
    }

    #[test]
    fn boundary_and_ten_folds() {
        assert_eq!(make_folds(&labels(16, 15), 1).len(), 10);
        assert_eq!(make_folds(&labels(15, 15), 1).len(), 30);
        let folds = make_folds(&labels(67, 33), 2);
        assert_eq!(folds.len(), 10);
        assert!(folds.iter().all(|f| f.validation.len() == 10));
    }

    #[test]
    fn folds_partition_and_stratify() {
        let l = labels(41, 23);
        let folds = make_folds(&l, 3);
        let mut seen = vec![0; l.len()];
        for f in &folds {
            for &i in &f.validation {
                seen[i] += 1;
            }
            assert_eq!(f.train.len() + f.validation.len(), l.len());
            let pos = f.validation.iter().filter(|&&i| l[i] == Label::Positive).count();
            // 41 / 10 positives per fold, within one
            assert!((4..=5).contains(&pos), "{pos}");
        }
        assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn seeded() {
        let l = labels(30, 30);
        assert_eq!(make_folds(&l, 7), make_folds(&l, 7));
        assert_ne!(make_folds(&l, 7), make_folds(&l, 8));
    }
}
