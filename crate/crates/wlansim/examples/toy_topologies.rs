//! The four three-WLAN reference topologies, each probing one sensing
//! regime: full overlap (time sharing), a chain (middle WLAN starved by two
//! independent neighbors), additive blocking (middle AP senses only the SUM
//! of the two outer transmitters), and a spread line (everyone isolated).
//! Prints per-WLAN stats and the realized contention graph for each.

use wlansim::scenario::{self, Scenario};
use wlansim::sim::Simulator;

fn show(name: &str, sc: &Scenario) {
    let mut sim = Simulator::new(sc, 1).unwrap();
    sim.run(30.0);
    let pairs: Vec<String> =
        sim.contention_pairs().into_iter().map(|(a, b)| format!("{a}-{b}")).collect();
    println!("== {name} (contention graph: {})", if pairs.is_empty() { "none".into() } else { pairs.join(", ") });
    print!("{}", sim.stats_csv());
    println!();
}

fn main() {
    show("full overlap triangle", &scenario::full_overlap_triangle());
    show("chain, middle squeezed", &scenario::partial_chain());
    show("additive middle", &scenario::additive_middle());
    show("spread line, all isolated", &scenario::isolated_line());
}
