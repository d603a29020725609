//! Binary detection metrics from per-sample readout peaks.

use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(predicted: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = Confusion::default();
        for (pred, target) in predicted {
            c.record(pred, target);
        }
        c
    }

    pub fn record(&mut self, predicted: bool, target: bool) {
        match (predicted, target) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// `TP / (TP + FN)`, 0 without positives.
    pub fn tpr(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `FP / (FP + TN)`, 0 without negatives.
    pub fn fpr(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: i32,
    pub tpr: f64,
    pub fpr: f64,
    pub accuracy: f64,
}

/// Confusion matrix of "peak >= threshold" decisions.
pub fn confusion_at(peaks: &[i32], targets: &[bool], threshold: i32) -> Confusion {
    Confusion::from_predictions(peaks.iter().zip(targets).map(|(&p, &t)| (p >= threshold, t)))
}

/// One ROC point per threshold; `grid` must be sorted ascending.
pub fn roc_from_peaks(peaks: &[i32], targets: &[bool], grid: &[i32]) -> Result<Vec<RocPoint>> {
    if peaks.len() != targets.len() {
        return Err(Error::invalid("peaks and targets differ in length"));
    }
    if grid.is_empty() {
        return Err(Error::invalid("threshold grid is empty"));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("threshold grid must be sorted ascending"));
    }
    Ok(grid
        .iter()
        .map(|&threshold| {
            let c = confusion_at(peaks, targets, threshold);
            RocPoint { threshold, tpr: c.tpr(), fpr: c.fpr(), accuracy: c.accuracy() }
        })
        .collect())
}

/// `n` rounded thresholds from `min(0, peaks)` to just above `1.05 * max(peaks)`,
/// so the first point predicts every sample positive and the last none.
pub fn default_grid(peaks: &[i32], n: usize) -> Vec<i32> {
    let lo = f64::from(peaks.iter().copied().min().unwrap_or(0).min(0));
    let max = f64::from(peaks.iter().copied().max().unwrap_or(0).max(0));
    let hi = libm::round(max * 1.05).max(max + 1.0);
    if n <= 1 {
        return alloc::vec![lo as i32];
    }
    (0..n).map(|k| libm::round(lo + (hi - lo) * k as f64 / (n - 1) as f64) as i32).collect()
}

/// Area under the ROC curve over every distinct threshold, with ties between
/// a positive and a negative counted as one half.
pub fn auc(peaks: &[i32], targets: &[bool]) -> f64 {
    let pos: Vec<i32> = peaks.iter().zip(targets).filter(|(_, &t)| t).map(|(&p, _)| p).collect();
    let mut neg: Vec<i32> = peaks.iter().zip(targets).filter(|(_, &t)| !t).map(|(&p, _)| p).collect();
    if pos.is_empty() || neg.is_empty() {
        return 0.0;
    }
    neg.sort_unstable();
    let mut wins = 0.0;
    for p in &pos {
        let below = neg.partition_point(|n| n < p);
        let ties = neg[below..].partition_point(|n| n == p);
        wins += below as f64 + 0.5 * ties as f64;
    }
    wins / (pos.len() * neg.len()) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn confusion_identities() {
        let c = Confusion { tp: 44, fp: 1, tn: 95, fn_: 4 };
        assert_eq!(c.total(), 144);
        assert!((c.tpr() - 44.0 / 48.0).abs() < 1e-15);
        assert!((c.fpr() - 1.0 / 96.0).abs() < 1e-15);
        assert!((c.accuracy() - 139.0 / 144.0).abs() < 1e-15);
    }

    #[test]
    fn extreme_thresholds() {
        let peaks = [5, -3, 100, 0];
        let targets = [true, false, true, false];
        let never = confusion_at(&peaks, &targets, i32::MAX);
        assert_eq!((never.tpr(), never.fpr()), (0.0, 0.0));
        assert_eq!(never.accuracy(), 0.5);
        let always = confusion_at(&peaks, &targets, i32::MIN);
        assert_eq!((always.tpr(), always.fpr()), (1.0, 1.0));
        let roc = roc_from_peaks(&peaks, &targets, &[i32::MIN, i32::MAX]).unwrap();
        assert_eq!((roc[0].tpr, roc[0].fpr), (1.0, 1.0));
        assert_eq!((roc[1].tpr, roc[1].fpr), (0.0, 0.0));
    }

    #[test]
    fn unsorted_grid_rejected() {
        assert!(roc_from_peaks(&[1], &[true], &[3, 1]).is_err());
        assert!(roc_from_peaks(&[1], &[true], &[]).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[3, 4, 1, 2], &[true, true, false, false]), 1.0);
        assert_eq!(auc(&[1, 2, 3, 4], &[true, true, false, false]), 0.0);
        assert_eq!(auc(&[2, 2], &[true, false]), 0.5);
    }

    #[test]
    fn default_grid_spans_peak_range() {
        let g = default_grid(&[0, 1000], 256);
        assert_eq!(g.len(), 256);
        assert_eq!(g[0], 0);
        assert_eq!(*g.last().unwrap(), 1050);
        let g = default_grid(&[-40, 3], 8);
        assert_eq!((g[0], *g.last().unwrap()), (-40, 4));
    }

    proptest! {
        #[test]
        fn default_grid_hits_both_corners(
            data in proptest::collection::vec((-3000i32..3000, any::<bool>()), 1..60),
            n in 2usize..300,
        ) {
            let (peaks, targets): (Vec<i32>, Vec<bool>) = data.into_iter().unzip();
            let grid = default_grid(&peaks, n);
            let roc = roc_from_peaks(&peaks, &targets, &grid).unwrap();
            let (first, last) = (roc[0], roc[roc.len() - 1]);
            let has_pos = targets.iter().any(|&t| t);
            let has_neg = targets.iter().any(|&t| !t);
            prop_assert_eq!((first.tpr, first.fpr), (f64::from(u8::from(has_pos)), f64::from(u8::from(has_neg))));
            prop_assert_eq!((last.tpr, last.fpr), (0.0, 0.0));
        }

        #[test]
        fn roc_is_monotone_and_matches_brute_force(
            data in proptest::collection::vec((-500i32..500, any::<bool>()), 1..60),
            mut grid in proptest::collection::vec(-600i32..600, 1..40),
        ) {
            grid.sort_unstable();
            let (peaks, targets): (Vec<i32>, Vec<bool>) = data.into_iter().unzip();
            let roc = roc_from_peaks(&peaks, &targets, &grid).unwrap();
            for w in roc.windows(2) {
                prop_assert!(w[1].tpr <= w[0].tpr && w[1].fpr <= w[0].fpr);
            }
            for p in &roc {
                let tp = peaks.iter().zip(&targets).filter(|(&x, &t)| t && x >= p.threshold).count();
                let pos = targets.iter().filter(|&&t| t).count();
                let expected = if pos == 0 { 0.0 } else { tp as f64 / pos as f64 };
                prop_assert_eq!(p.tpr, expected);
            }
            let shuffled: Vec<(i32, bool)> = peaks.iter().copied().zip(targets.iter().copied()).rev().collect();
            let (p2, t2): (Vec<i32>, Vec<bool>) = shuffled.into_iter().unzip();
            prop_assert_eq!(roc_from_peaks(&p2, &t2, &grid).unwrap(), roc);
        }
    }
}
