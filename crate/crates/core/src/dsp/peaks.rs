//! Local-maximum peak detection with amplitude, prominence and refractory
//! constraints, shared by the heart-rate and SCR detectors.

#[derive(Debug, Clone, Copy)]
pub(crate) struct PeakParams {
    /// Absolute height a sample must exceed to count as a peak.
    pub min_height: f64,
    /// Minimum topographic prominence; 0 disables the check.
    pub min_prominence: f64,
    /// Minimum index distance between retained peaks.
    pub min_distance: usize,
}

/// Linear-interpolation percentile (0..=100) of a sample slice.
pub(crate) fn percentile(values: &[f64], pct: f64) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = pct / 100.0 * (sorted.len() - 1) as f64;
    let lo = q.floor() as usize;
    let frac = q - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac
    } else {
        sorted[lo]
    }
}

/// Prominence of the peak at `p`: height above the higher of the two key
/// saddles toward the nearest taller samples (or the record edges).
fn prominence(values: &[f64], p: usize) -> f64 {
    let h = values[p];
    let mut left_min = h;
    let mut i = p;
    while i > 0 {
        i -= 1;
        if values[i] > h {
            break;
        }
        left_min = left_min.min(values[i]);
    }
    let mut right_min = h;
    let mut i = p;
    while i + 1 < values.len() {
        i += 1;
        if values[i] > h {
            break;
        }
        right_min = right_min.min(values[i]);
    }
    h - left_min.max(right_min)
}

/// Indices of local maxima satisfying `params`, in ascending order.
///
/// When two candidates fall within `min_distance`, the taller one wins.
pub(crate) fn detect_peaks(values: &[f64], params: &PeakParams) -> Vec<usize> {
    if values.len() < 3 {
        return Vec::new();
    }
    let mut candidates: Vec<usize> = Vec::new();
    for i in 1..values.len() - 1 {
        if values[i] > values[i - 1] && values[i] >= values[i + 1] && values[i] > params.min_height
        {
            if params.min_prominence > 0.0 && prominence(values, i) <= params.min_prominence {
                continue;
            }
            candidates.push(i);
        }
    }
    if params.min_distance <= 1 {
        return candidates;
    }
    // Greedy by height, then restore index order.
    candidates.sort_by(|&a, &b| {
        values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = Vec::new();
    for &c in &candidates {
        if kept.iter().all(|&k| k.abs_diff(c) >= params.min_distance) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept
}
