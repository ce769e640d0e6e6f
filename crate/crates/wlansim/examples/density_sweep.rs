//! Saturation throughput and collision probability versus network density,
//! side by side with the fixed-point model. Every WLAN in the generated
//! scenarios senses every other, CW stays fixed, MCS is pinned, so the only
//! moving part is how many contenders share the slot grid.
//!
//! The model assumes independent per-slot attempts. At n well above the
//! contention window the real coupled countdown process clusters into phase
//! bins and collides measurably less, so the throughput columns drift apart
//! at n = 20 and 50 while the collision columns stay close.

use wlansim::oracles::bianchi::{self, DcfScenario};
use wlansim::phy::PhyMacParams;
use wlansim::runner;

fn main() {
    let ns = [1u32, 2, 5, 10, 20, 50];
    let seeds = [1u64, 2];
    let points = runner::sweep_density(&ns, &seeds, 2.0).unwrap();
    let p = PhyMacParams::default();
    println!(
        "{:>5} {:>12} {:>12} {:>10} {:>10} {:>12} {:>10}",
        "n", "sim_mbps", "model_mbps", "sim_p", "model_p", "events", "wall_s"
    );
    for (n, pt) in ns.iter().zip(&points) {
        let sol = bianchi::solve(
            &DcfScenario { n_wlans: *n, n_agg: 1, mcs: 8, width: 1, backoff_stages: 0 },
            &p,
        )
        .unwrap();
        println!(
            "{n:>5} {:>12.3} {:>12.3} {:>10.4} {:>10.4} {:>12.0} {:>10.3}",
            pt.throughput_mean_mbps,
            sol.total_throughput_mbps,
            pt.collision_prob_mean,
            sol.collision_prob,
            pt.events_dispatched_mean,
            pt.wall_s_mean
        );
    }
}
