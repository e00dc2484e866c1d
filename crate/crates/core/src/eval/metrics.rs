//! Point-wise precision, recall and IoU per class.
//!
//! For class `c` with predicted set `P` and ground-truth set `G`:
//! precision `|P & G| / |P|`, recall `|P & G| / |G|`, IoU
//! `|P & G| / |P | G|`. When a denominator is empty the value is 1 if both
//! sets are empty and 0 otherwise.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::cloud::ClassId;
use crate::error::{Error, Result};
use crate::refine::Proposal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub class: ClassId,
    pub precision: f64,
    pub recall: f64,
    pub iou: f64,
    pub predicted: usize,
    pub truth: usize,
    pub intersection: usize,
}

impl ClassMetrics {
    fn from_counts(class: ClassId, predicted: usize, truth: usize, intersection: usize) -> Self {
        let both_empty = predicted == 0 && truth == 0;
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                if both_empty {
                    1.0
                } else {
                    0.0
                }
            } else {
                num as f64 / den as f64
            }
        };
        let union = predicted + truth - intersection;
        Self {
            class,
            precision: ratio(intersection, predicted),
            recall: ratio(intersection, truth),
            iou: ratio(intersection, union),
            predicted,
            truth,
            intersection,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Indexed by class id.
    pub per_class: Vec<ClassMetrics>,
    /// Mean IoU over car, pedestrian and cyclist.
    pub average_iou: f64,
    pub empty_set_convention: &'static str,
}

impl MetricsReport {
    pub fn class(&self, c: ClassId) -> &ClassMetrics {
        &self.per_class[c.as_u8() as usize]
    }
}

pub const EMPTY_SET_CONVENTION: &str = "empty denominator: 1 if both sets empty, else 0";

pub fn pointwise_metrics(pred: &[ClassId], gt: &[ClassId]) -> Result<MetricsReport> {
    if pred.len() != gt.len() {
        return Err(Error::Alignment {
            expected: gt.len(),
            found: pred.len(),
        });
    }
    let mut predicted = [0usize; 4];
    let mut truth = [0usize; 4];
    let mut inter = [0usize; 4];
    for (&p, &g) in pred.iter().zip(gt) {
        predicted[p.as_u8() as usize] += 1;
        truth[g.as_u8() as usize] += 1;
        if p == g {
            inter[p.as_u8() as usize] += 1;
        }
    }
    let per_class: Vec<ClassMetrics> = ClassId::ALL
        .iter()
        .map(|&c| {
            let k = c.as_u8() as usize;
            ClassMetrics::from_counts(c, predicted[k], truth[k], inter[k])
        })
        .collect();
    let average_iou = ClassId::FOREGROUND
        .iter()
        .map(|&c| per_class[c.as_u8() as usize].iou)
        .sum::<f64>()
        / ClassId::FOREGROUND.len() as f64;
    Ok(MetricsReport {
        per_class,
        average_iou,
        empty_set_convention: EMPTY_SET_CONVENTION,
    })
}

/// Foreground coverage of a set of proposals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProposalRecall {
    /// Covered over total foreground points; 1 when there is no foreground.
    pub recall: f64,
    pub proposals: usize,
    pub points_passed: usize,
    pub foreground_total: usize,
    pub foreground_covered: usize,
}

impl ProposalRecall {
    fn from_cover(covered: &[bool], gt: &[ClassId], proposals: usize, points_passed: usize) -> Self {
        let mut total = 0;
        let mut hit = 0;
        for (&c, &g) in covered.iter().zip(gt) {
            if g.is_foreground() {
                total += 1;
                if c {
                    hit += 1;
                }
            }
        }
        Self {
            recall: if total == 0 {
                1.0
            } else {
                hit as f64 / total as f64
            },
            proposals,
            points_passed,
            foreground_total: total,
            foreground_covered: hit,
        }
    }
}

pub fn proposal_recall(proposals: &[Proposal], gt: &[ClassId]) -> Result<ProposalRecall> {
    let mut covered = vec![false; gt.len()];
    let mut passed = 0;
    for p in proposals {
        for &i in &p.members {
            if i >= gt.len() {
                return Err(Error::Precondition(format!(
                    "proposal {} references point {i} of {}",
                    p.cluster_id,
                    gt.len()
                )));
            }
            covered[i] = true;
            passed += 1;
        }
    }
    Ok(ProposalRecall::from_cover(&covered, gt, proposals.len(), passed))
}

/// Same as [`proposal_recall`] from a per-point proposal id array
/// (0 = not in any proposal).
pub fn proposal_recall_from_labels(point_labels: &[u32], gt: &[ClassId]) -> Result<ProposalRecall> {
    if point_labels.len() != gt.len() {
        return Err(Error::Alignment {
            expected: gt.len(),
            found: point_labels.len(),
        });
    }
    let covered: Vec<bool> = point_labels.iter().map(|&l| l != 0).collect();
    let ids: BTreeSet<u32> = point_labels.iter().copied().filter(|&l| l != 0).collect();
    let passed = covered.iter().filter(|&&c| c).count();
    Ok(ProposalRecall::from_cover(&covered, gt, ids.len(), passed))
}
