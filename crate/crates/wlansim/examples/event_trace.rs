//! The two observability channels: the event trace (one row per simulator
//! event, machine-readable) and the per-node log (state transitions with
//! reasons). Two overlapping WLANs for a few milliseconds are enough to see
//! contention, a reservation, and a full exchange.

use wlansim::scenario;
use wlansim::sim::Simulator;

fn main() {
    let sc = scenario::fully_overlapping(2);
    let mut sim = Simulator::new(&sc, 4).unwrap();
    sim.enable_trace();
    sim.enable_node_log();
    sim.run(0.004);

    println!("== event trace (first 30 rows)");
    for line in sim.trace_csv().lines().take(31) {
        println!("{line}");
    }
    println!("\n== node log (first 30 lines)");
    for line in sim.node_log().lines().take(30) {
        println!("{line}");
    }
    println!("\n({} events dispatched in total)", sim.events_dispatched());
}
