//! Trajectory-forcing schedule: intervention frequency per epoch and a
//! Monte Carlo check of the mean self-generated segment length.
//!
//! cargo run --release --example curriculum_schedule

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ssmail::curriculum::{apply_forcing, CurriculumSchedule, DEFAULT_BASE};

fn main() -> ssmail::Result<()> {
    let epochs = 300;
    let sched = CurriculumSchedule::from_fraction(0.15, DEFAULT_BASE, epochs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    println!("epoch  frequency  expected_segment  simulated_segment");
    for epoch in (0..=epochs).step_by(45) {
        let f = sched.intervention_frequency(epoch as f64)?;
        let plan = apply_forcing(f, 100_000, 100_000, &mut rng)?;
        let segs = plan.segment_lengths();
        let sim = segs.iter().sum::<usize>() as f64 / segs.len().max(1) as f64;
        println!(
            "{epoch:5}  {f:9.5}  {:16.3}  {sim:17.3}",
            sched.expected_segment_length(epoch as f64)?
        );
    }
    Ok(())
}
