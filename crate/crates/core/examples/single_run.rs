//! Runs one simulation on a map file and prints the outcome.
//!
//! cargo run --release --example single_run -- crates/core/fixtures/uusimaa_synthetic.csv [strict|leaky|none] [seed] [max_steps]

use std::time::Instant;

use zombiesim::worldmap::load_raster;
use zombiesim::{BehaviorTable, EngineConfig, MovementParams, ScenarioPolicy, Simulation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let path = args.get(1).map(String::as_str).unwrap_or("crates/core/fixtures/uusimaa_synthetic.csv");
    let kind = args.get(2).map(String::as_str).unwrap_or("none").parse()?;
    let seed: u64 = args.get(3).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let max_steps: u32 = args.get(4).map(|s| s.parse()).transpose()?.unwrap_or(2000);

    let world = load_raster(path, None)?;
    let policy = ScenarioPolicy { kind, ..ScenarioPolicy::default() };
    let config = EngineConfig { trajectory_stride: 10, max_steps, ..EngineConfig::default() };
    let sim = Simulation::new(&world, policy, BehaviorTable::default(), MovementParams::default(), config)?;

    let start = Instant::now();
    let stragglers = std::env::var_os("STRAGGLERS").is_some();
    let out = sim.run_observed(seed, |st| {
        if stragglers && st.step() % 5 == 0 {
            let h: Vec<_> = st.healthy_humans().map(|(pos, _)| pos).collect();
            if !h.is_empty() && h.len() < 20_000 {
                let n = h.len() as f64;
                let mx = h.iter().map(|c| f64::from(c.x)).sum::<f64>() / n;
                let my = h.iter().map(|c| f64::from(c.y)).sum::<f64>() / n;
                let minx = h.iter().map(|c| c.x).min().unwrap();
                println!("step {} healthy {} mean ({mx:.1}, {my:.1}) min_x {minx}", st.step(), h.len());
            }
        }
    });
    println!(
        "winner={} end_step={} peak={} first_border={:?} elapsed={:.2?}",
        out.winner.as_str(),
        out.end_step,
        out.peak_zombies,
        out.first_border_step,
        start.elapsed()
    );
    if std::env::var_os("TRAJECTORY").is_some() {
        for p in &out.trajectory {
            println!("{:>5} {:?}", p.step, p.counts);
        }
    } else if let Some(last) = out.trajectory.last() {
        println!("final {:?}", last.counts);
    }
    Ok(())
}
