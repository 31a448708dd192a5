use serde::{Deserialize, Serialize};

use super::FilterWindow;
use crate::stats::Observation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    NonFinite,
    HrOutOfRange,
    NegativeFd,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::NonFinite => "non_finite",
            RejectReason::HrOutOfRange => "hr_out_of_range",
            RejectReason::NegativeFd => "negative_fd",
        }
    }
}

/// Drops impossible rows: non-finite values, heart rates outside the window
/// and negative feature distances. Never fails.
pub fn filter_observations(
    rows: Vec<Observation>,
    window: &FilterWindow,
) -> (Vec<Observation>, Vec<(Observation, RejectReason)>) {
    let mut kept = Vec::with_capacity(rows.len());
    let mut rejected = Vec::new();
    for row in rows {
        let reason = if !row.heart_rate_bpm.is_finite() || !row.feature_distance.is_finite() {
            Some(RejectReason::NonFinite)
        } else if row.heart_rate_bpm < window.hr_min || row.heart_rate_bpm > window.hr_max {
            Some(RejectReason::HrOutOfRange)
        } else if row.feature_distance < 0.0 {
            Some(RejectReason::NegativeFd)
        } else {
            None
        };
        match reason {
            Some(r) => {
                log::info!(
                    "rejected {}/{}/{}: {}",
                    row.subject_id,
                    row.emotion,
                    row.take_index,
                    r.as_str()
                );
                rejected.push((row, r));
            }
            None => kept.push(row),
        }
    }
    (kept, rejected)
}
