//! Single 1 AP + 1 STA WLAN against the closed-form renewal cycle: mean
//! backoff + DIFS + RTS/CTS/DATA/response airtime with SIFS gaps. With no
//! contention the simulator must reproduce the formula almost exactly, both
//! without aggregation and at the 40-MPDU PPDU ceiling.

use wlansim::oracles;
use wlansim::runner;
use wlansim::scenario;

fn main() {
    println!("{:>7} {:>12} {:>12} {:>8}", "n_agg", "sim_mbps", "formula", "ratio");
    for n_agg in [1u32, 40] {
        let sc = scenario::isolated(n_agg);
        let p = runner::params_for(&sc);
        let formula = oracles::isolated_throughput_mbps(n_agg, 8, 1, &p).unwrap();
        let out = runner::simulate(&sc, 1, 20.0, false, false).unwrap();
        let sim = out.stats[0].throughput_mbps;
        println!("{n_agg:>7} {sim:>12.4} {formula:>12.4} {:>8.4}", sim / formula);
    }
}
