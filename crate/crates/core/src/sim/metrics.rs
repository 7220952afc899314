use serde::{Deserialize, Serialize};

/// Measurements from one simulated drilling. Lengths mm, angles degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    pub mount_angle: f64,
    /// Combined entry error: face-plane offsets and straight-length delta.
    pub entry_position_error: f64,
    /// Entry offset along the ideal tool Y axis.
    pub entry_offset_y: f64,
    /// Entry offset along the ideal tool Z axis.
    pub entry_offset_z: f64,
    /// Straight drilled length inside the specimen.
    pub straight_length_measured: f64,
    pub straight_length_error: f64,
    pub rotation_goal: f64,
    pub rotation_commanded: f64,
    pub rotation_actual: f64,
    pub radius_measured: f64,
}

impl TrialReport {
    pub fn rotation_error(&self) -> f64 {
        (self.rotation_actual - self.rotation_goal).abs()
    }
}

/// Per-mount-angle statistics in the layout of the accuracy tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub mount_angle: f64,
    pub trials: usize,
    pub position_error_mean: f64,
    pub position_error_std: f64,
    pub radius_mean: f64,
    pub radius_std: f64,
    /// `|mean radius - ideal| / ideal × 100`.
    pub radius_percent_error: f64,
    pub rotation_commanded_mean: f64,
    pub rotation_actual_mean: f64,
    /// `|mean actual rotation - goal|`.
    pub rotation_error: f64,
    pub rotation_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub ideal_radius: f64,
    pub rows: Vec<SummaryRow>,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample (n - 1) standard deviation; zero for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Groups reports by goal rotation (ascending) and summarises each group.
pub fn aggregate(reports: &[TrialReport], ideal_radius: f64) -> SummaryReport {
    let mut goals: Vec<f64> = reports.iter().map(|r| r.rotation_goal).collect();
    goals.sort_by(f64::total_cmp);
    goals.dedup();
    let rows = goals
        .into_iter()
        .map(|goal| {
            let group: Vec<&TrialReport> =
                reports.iter().filter(|r| r.rotation_goal == goal).collect();
            let col = |f: fn(&TrialReport) -> f64| group.iter().map(|r| f(r)).collect::<Vec<_>>();
            let pos = col(|r| r.entry_position_error);
            let rad = col(|r| r.radius_measured);
            let actual = col(|r| r.rotation_actual);
            let radius_mean = mean(&rad);
            let actual_mean = mean(&actual);
            SummaryRow {
                mount_angle: goal,
                trials: group.len(),
                position_error_mean: mean(&pos),
                position_error_std: sample_std(&pos),
                radius_mean,
                radius_std: sample_std(&rad),
                radius_percent_error: (radius_mean - ideal_radius).abs() / ideal_radius * 100.0,
                rotation_commanded_mean: mean(&col(|r| r.rotation_commanded)),
                rotation_actual_mean: actual_mean,
                rotation_error: (actual_mean - goal).abs(),
                rotation_std: sample_std(&actual),
            }
        })
        .collect();
    SummaryReport { ideal_radius, rows }
}
