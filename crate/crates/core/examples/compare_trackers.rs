//! Simulates one scenario, runs both trackers over the same corrupted
//! detection stream, and prints their average displacement errors.

use fmotrack::kf::run_kf;
use fmotrack::metrics::ade;
use fmotrack::simulator::{builtin, corrupt, simulate};
use fmotrack::{KfParams, PhysicsTracker};

fn main() -> fmotrack::Result<()> {
    let spec = builtin::<f64>("bounce-multi")?;
    let truth = simulate(&spec)?;          // noise-free ground truth
    let frames = corrupt(&truth, &spec)?;  // seeded detection stream
    let config = spec.tracker_config()?;

    let physics = PhysicsTracker::run(&frames, &config)?;
    let kalman = run_kf(&frames, &config, &KfParams::with_sigma(spec.noise_sigma))?;
    println!(
        "physics ADE {:.4} m, kf ADE {:.4} m",
        ade(&physics, &truth)?,
        ade(&kalman, &truth)?,
    );
    Ok(())
}
