//! Regenerates the shipped scenario files under scenarios/ from the built-in
//! topology presets. Run from the repository root after changing a preset;
//! the scenarios_match_presets test pins the two representations together.

use std::fs;
use std::path::Path;

use wlansim::scenario::{self, Scenario};

fn main() {
    let dir = Path::new("scenarios");
    fs::create_dir_all(dir).unwrap();
    let all: Vec<(&str, Scenario)> = vec![
        ("isolated.csv", scenario::isolated(1)),
        ("two_stations.csv", scenario::two_stations()),
        ("full_overlap_triangle.csv", scenario::full_overlap_triangle()),
        ("partial_chain.csv", scenario::partial_chain()),
        ("additive_middle.csv", scenario::additive_middle()),
        ("isolated_line.csv", scenario::isolated_line()),
        ("cluster_10.csv", scenario::fully_overlapping(10)),
    ];
    for (name, sc) in &all {
        scenario::validate(sc).unwrap();
        let path = dir.join(name);
        fs::write(&path, scenario::to_csv(sc)).unwrap();
        println!("wrote {} ({} nodes)", path.display(), sc.nodes.len());
    }
}
