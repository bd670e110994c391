//! Time axis: chronological periods `p`, representative periods `rp`, steps
//! `k` within an rp, the mapping between them and the moving window used by
//! long-term storage.
//!
//! All indices are 1-based, matching the dataset files.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct StepRef {
    pub rp: usize,
    pub k: usize,
}

impl StepRef {
    pub fn new(rp: usize, k: usize) -> Self {
        Self { rp, k }
    }

    pub fn rp_label(&self) -> String {
        format!("rp{}", self.rp)
    }

    pub fn k_label(&self) -> String {
        format!("k{}", self.k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TemporalStructure {
    rp_weights: Vec<f64>,
    step_weights: Vec<f64>,
    gamma: Vec<StepRef>,
    moving_window: usize,
}

impl TemporalStructure {
    /// One rp of weight 1 covering `n_hours` chronological steps.
    pub fn hourly_identity(n_hours: usize) -> Result<Self> {
        if n_hours == 0 {
            return Err(Error::Temporal("hourly structure needs at least one hour".into()));
        }
        Ok(Self {
            rp_weights: vec![1.0],
            step_weights: vec![1.0; n_hours],
            gamma: (1..=n_hours).map(|k| StepRef::new(1, k)).collect(),
            moving_window: n_hours,
        })
    }

    /// Representative periods from a day → rp assignment (1-based rp per
    /// day, in chronological order). The number of rps is the largest
    /// assigned index.
    pub fn representative(assignments: &[usize], steps_per_rp: usize) -> Result<Self> {
        let n_rp = assignments.iter().copied().max().unwrap_or(0);
        Self::representative_with(assignments, n_rp, steps_per_rp)
    }

    /// As [`representative`](Self::representative) with an explicit rp count;
    /// rps no day maps to get weight 0.
    pub fn representative_with(assignments: &[usize], n_rp: usize, steps_per_rp: usize) -> Result<Self> {
        if assignments.is_empty() {
            return Err(Error::Temporal("no days to assign".into()));
        }
        if steps_per_rp == 0 {
            return Err(Error::Temporal("steps_per_rp must be at least 1".into()));
        }
        let mut rp_weights = vec![0.0; n_rp];
        let mut gamma = Vec::with_capacity(assignments.len() * steps_per_rp);
        for (d, &rp) in assignments.iter().enumerate() {
            if rp == 0 || rp > n_rp {
                return Err(Error::Temporal(format!(
                    "day {} is not assigned to an existing rp (got {rp})",
                    d + 1
                )));
            }
            rp_weights[rp - 1] += 1.0;
            gamma.extend((1..=steps_per_rp).map(|k| StepRef::new(rp, k)));
        }
        Ok(Self {
            rp_weights,
            step_weights: vec![1.0; steps_per_rp],
            moving_window: gamma.len(),
            gamma,
        })
    }

    /// Set the moving window; the horizon must be a whole number of windows.
    pub fn with_moving_window(mut self, mow: usize) -> Result<Self> {
        if mow == 0 {
            return Err(Error::Temporal("moving window must be at least 1".into()));
        }
        if self.gamma.len() % mow != 0 {
            return Err(Error::Temporal(format!(
                "horizon of {} periods is not a multiple of the moving window {mow}",
                self.gamma.len()
            )));
        }
        self.moving_window = mow;
        Ok(self)
    }

    /// Replace the step weights (multi-hour blocks).
    pub fn with_step_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.step_weights.len() {
            return Err(Error::Temporal(format!(
                "expected {} step weights, got {}",
                self.step_weights.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Temporal("step weights must be positive".into()));
        }
        self.step_weights = weights;
        Ok(self)
    }

    pub fn num_periods(&self) -> usize {
        self.gamma.len()
    }

    pub fn num_rep_periods(&self) -> usize {
        self.rp_weights.len()
    }

    pub fn num_steps(&self) -> usize {
        self.step_weights.len()
    }

    pub fn moving_window(&self) -> usize {
        self.moving_window
    }

    pub fn rp_weight(&self, rp: usize) -> f64 {
        self.rp_weights[rp - 1]
    }

    pub fn step_weight(&self, k: usize) -> f64 {
        self.step_weights[k - 1]
    }

    /// W^RP_rp · W^K_k.
    pub fn weight(&self, s: StepRef) -> f64 {
        self.rp_weight(s.rp) * self.step_weight(s.k)
    }

    /// Σ_rp W^RP · Σ_k W^K.
    pub fn total_hours(&self) -> f64 {
        self.rp_weights.iter().sum::<f64>() * self.step_weights.iter().sum::<f64>()
    }

    pub fn gamma(&self, p: usize) -> Result<StepRef> {
        self.gamma
            .get(p.wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::Temporal(format!("period {p} outside 1..={}", self.gamma.len())))
    }

    /// Every (rp, k) pair, rp-major.
    pub fn steps(&self) -> impl Iterator<Item = StepRef> + '_ {
        let nk = self.num_steps();
        (1..=self.num_rep_periods()).flat_map(move |rp| (1..=nk).map(move |k| StepRef::new(rp, k)))
    }

    /// `k--1`: previous step in the rp, wrapping from the first to the last.
    pub fn prev_cyclic(&self, s: StepRef) -> StepRef {
        if s.k > 1 {
            StepRef::new(s.rp, s.k - 1)
        } else {
            StepRef::new(s.rp, self.num_steps())
        }
    }

    /// `k++1`: next step in the rp, wrapping from the last to the first.
    pub fn next_cyclic(&self, s: StepRef) -> StepRef {
        if s.k < self.num_steps() {
            StepRef::new(s.rp, s.k + 1)
        } else {
            StepRef::new(s.rp, 1)
        }
    }

    /// Chronological periods where the inter-period state is checked.
    pub fn checkpoints(&self) -> Vec<usize> {
        (1..=self.gamma.len() / self.moving_window)
            .map(|i| i * self.moving_window)
            .collect()
    }

    /// Images of periods `(p − MOW, p]`, one entry per chronological period.
    pub fn window_members(&self, p: usize) -> Result<Vec<StepRef>> {
        if p == 0 || p % self.moving_window != 0 || p > self.gamma.len() {
            return Err(Error::Temporal(format!(
                "period {p} is not a checkpoint of window {}",
                self.moving_window
            )));
        }
        Ok(self.gamma[p - self.moving_window..p].to_vec())
    }
}
