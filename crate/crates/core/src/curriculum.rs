//! Trajectory forcing: teacher-forcing interventions whose per-step
//! frequency decays as `base^(-epoch / beta)`, so the expected stretch of
//! self-generated steps between interventions grows by `base` every `beta`
//! epochs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BASE: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurriculumSchedule {
    beta: f64,
    base: f64,
    total_epochs: usize,
}

impl CurriculumSchedule {
    pub fn new(beta: f64, base: f64, total_epochs: usize) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
        }
        if !(base > 1.0 && base.is_finite()) {
            return Err(Error::InvalidArgument(format!("base must exceed 1, got {base}")));
        }
        Ok(Self {
            beta,
            base,
            total_epochs,
        })
    }

    /// `beta = fraction * total_epochs`.
    pub fn from_fraction(fraction: f64, base: f64, total_epochs: usize) -> Result<Self> {
        Self::new(fraction * total_epochs as f64, base, total_epochs)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn total_epochs(&self) -> usize {
        self.total_epochs
    }

    pub fn intervention_frequency(&self, epoch: f64) -> Result<f64> {
        check_epoch(epoch)?;
        Ok(self.base.powf(-epoch / self.beta).clamp(f64::MIN_POSITIVE, 1.0))
    }

    /// Expected number of self-generated steps per intervention, `1/frequency`.
    pub fn expected_segment_length(&self, epoch: f64) -> Result<f64> {
        check_epoch(epoch)?;
        Ok(self.base.powf(epoch / self.beta))
    }
}

fn check_epoch(epoch: f64) -> Result<()> {
    if !(epoch >= 0.0) {
        return Err(Error::InvalidArgument(format!("epoch must be non-negative, got {epoch}")));
    }
    Ok(())
}

/// Per-step intervention decisions for one rollout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForcingPlan {
    decisions: Vec<bool>,
}

impl ForcingPlan {
    /// Whether the state fed at step `t + 1` is replaced by the expert's.
    pub fn forced(&self, t: usize) -> bool {
        self.decisions.get(t).copied().unwrap_or(false)
    }

    pub fn decisions(&self) -> &[bool] {
        &self.decisions
    }

    pub fn interventions(&self) -> usize {
        self.decisions.iter().filter(|&&d| d).count()
    }

    /// Lengths of the runs of steps ending in an intervention (the step
    /// count up to and including each intervention). A trailing run without
    /// intervention is dropped.
    pub fn segment_lengths(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut run = 0;
        for &d in &self.decisions {
            run += 1;
            if d {
                out.push(run);
                run = 0;
            }
        }
        out
    }
}

/// Draw a Bernoulli(`frequency`) intervention for each of `steps` steps.
/// The expert must cover every step it may be asked to supply.
pub fn apply_forcing(
    frequency: f64,
    steps: usize,
    expert_len: usize,
    rng: &mut impl Rng,
) -> Result<ForcingPlan> {
    if !(0.0..=1.0).contains(&frequency) {
        return Err(Error::InvalidArgument(format!(
            "forcing frequency {frequency} outside [0, 1]"
        )));
    }
    if expert_len < steps {
        return Err(Error::InvalidArgument(format!(
            "expert trajectory of length {expert_len} shorter than rollout of {steps} steps"
        )));
    }
    let decisions = (0..steps)
        .map(|_| frequency > 0.0 && rng.gen::<f64>() < frequency)
        .collect();
    Ok(ForcingPlan { decisions })
}

/// Forcing configuration of a run: either disabled or a schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Forcing {
    Off,
    Schedule(CurriculumSchedule),
}

impl Forcing {
    pub fn frequency(&self, epoch: usize) -> Result<f64> {
        match self {
            Forcing::Off => Ok(0.0),
            Forcing::Schedule(s) => s.intervention_frequency(epoch as f64),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sched() -> CurriculumSchedule {
        CurriculumSchedule::new(10.0, DEFAULT_BASE, 100).unwrap()
    }

    #[test]
    fn frequency_at_reference_epochs() {
        let s = sched();
        assert_eq!(s.intervention_frequency(0.0).unwrap(), 1.0);
        assert!((s.intervention_frequency(10.0).unwrap() - 1.0 / 1.5).abs() < 1e-12);
        assert!((s.intervention_frequency(20.0).unwrap() - 1.0 / 2.25).abs() < 1e-12);
    }

    #[test]
    fn segment_length_reference_values() {
        let s = sched();
        assert_eq!(s.expected_segment_length(0.0).unwrap(), 1.0);
        assert!((s.expected_segment_length(10.0).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn negative_epoch_rejected() {
        assert!(sched().intervention_frequency(-1.0).is_err());
        assert!(sched().expected_segment_length(-0.5).is_err());
    }

    #[test]
    fn bad_parameters_rejected() {
        assert!(CurriculumSchedule::new(0.0, 1.5, 10).is_err());
        assert!(CurriculumSchedule::new(1.0, 1.0, 10).is_err());
    }

    #[test]
    fn forcing_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let all = apply_forcing(1.0, 50, 50, &mut rng).unwrap();
        assert_eq!(all.interventions(), 50);
        let none = apply_forcing(0.0, 50, 50, &mut rng).unwrap();
        assert_eq!(none.interventions(), 0);
    }

    #[test]
    fn short_expert_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(apply_forcing(0.5, 50, 49, &mut rng).is_err());
    }

    #[test]
    fn forcing_rate_matches_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let plan = apply_forcing(0.5, 10_000, 10_000, &mut rng).unwrap();
        let rate = plan.interventions() as f64 / 10_000.0;
        assert!((rate - 0.5).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn forcing_is_reproducible() {
        let a = apply_forcing(0.3, 200, 200, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = apply_forcing(0.3, 200, 200, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn segment_lengths_partition_forced_prefix() {
        let plan = ForcingPlan {
            decisions: vec![false, true, true, false, false, true, false],
        };
        assert_eq!(plan.segment_lengths(), vec![2, 1, 3]);
    }
}
