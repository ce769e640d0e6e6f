//! Run orchestration shared by the command-line binary, the examples and the
//! acceptance tests: simulate one scenario, evaluate an oracle over the same
//! scenario, compare the two, or sweep an axis with per-point parallelism.

use std::time::Instant;

use thiserror::Error;

use crate::oracles::bianchi::{self, DcfScenario};
use crate::oracles::ctmn::{self, CtmnError, CtmnInput, CtmnWlan};
use crate::phy::{self, Obstructions, PhyMacParams};
use crate::scenario::{self, NodeType, Scenario, ScenarioError};
use crate::sim::{SimError, Simulator};
use crate::stats::WlanStats;

/// Simulated vs analytic throughput disagreements above this fraction make
/// `compare` report failure (and the binary exit nonzero).
pub const COMPARE_TOLERANCE: f64 = 0.10;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ctmn(#[from] CtmnError),
    #[error("sweep point {point}: {source}")]
    SweepPoint {
        point: String,
        #[source]
        source: Box<RunError>,
    },
}

impl RunError {
    /// True for malformed or semantically invalid input, as opposed to a
    /// failure while running.
    pub fn is_input_error(&self) -> bool {
        matches!(self, RunError::Scenario(_) | RunError::Sim(SimError::Scenario(_)))
            || matches!(self, RunError::SweepPoint { source, .. } if source.is_input_error())
    }
}

/// PHY/MAC parameter set a scenario's directives resolve to; what the
/// simulator runs with and what the oracles must therefore use.
pub fn params_for(sc: &Scenario) -> PhyMacParams {
    PhyMacParams { cw: sc.knobs.cw, noise_dbm: sc.knobs.noise_dbm, ..PhyMacParams::default() }
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub stats: Vec<WlanStats>,
    pub stats_csv: String,
    pub trace_csv: Option<String>,
    pub node_log: Option<String>,
    pub events_dispatched: u64,
    pub wall_s: f64,
}

pub fn simulate(
    sc: &Scenario,
    seed: u64,
    time_s: f64,
    trace: bool,
    logs: bool,
) -> Result<SimOutcome, RunError> {
    let mut sim = Simulator::new(sc, seed)?;
    if trace {
        sim.enable_trace();
    }
    if logs {
        sim.enable_node_log();
    }
    let start = Instant::now();
    sim.run(time_s);
    Ok(SimOutcome {
        stats: sim.stats(),
        stats_csv: sim.stats_csv(),
        trace_csv: trace.then(|| sim.trace_csv().to_string()),
        node_log: logs.then(|| sim.node_log().to_string()),
        events_dispatched: sim.events_dispatched(),
        wall_s: start.elapsed().as_secs_f64(),
    })
}

/// Per-WLAN effective transmission parameters implied by a scenario:
/// (width, mcs, n_agg) resolved the same way the simulator resolves them.
/// MCS selection uses the weakest AP-to-STA link of the WLAN.
fn effective_link(sc: &Scenario, wlan: &str, p: &PhyMacParams) -> Result<(u8, u8, u32), RunError> {
    let ap = sc
        .nodes
        .iter()
        .find(|n| n.node_type == NodeType::Ap && n.wlan_code == wlan)
        .expect("validated scenario has one AP per WLAN");
    let width = ap.max_channel - ap.min_channel + 1;
    let mcs = match sc.knobs.mcs {
        Some(m) => m,
        None => {
            let mut weakest = f64::INFINITY;
            for sta in sc.nodes.iter().filter(|n| {
                n.node_type == NodeType::Sta && n.wlan_code == wlan
            }) {
                let d = distance(ap, sta);
                weakest = weakest
                    .min(phy::received_power_dbm(ap.tx_power_dbm, d, Obstructions::default(), p));
            }
            phy::select_mcs(weakest, width).map_err(SimError::from)?
        }
    };
    let n_agg = sc
        .knobs
        .n_agg_max
        .min(phy::max_aggregation(mcs, width, p))
        .max(1);
    Ok((width, mcs, n_agg))
}

fn distance(a: &scenario::NodeSpec, b: &scenario::NodeSpec) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt()
}

/// Builds the activity-state chain input from scenario geometry: one WLAN
/// per AP, blocking driven by AP-to-AP received powers against each AP's CCA.
pub fn ctmn_input(sc: &Scenario, p: &PhyMacParams) -> Result<CtmnInput, RunError> {
    let codes = sc.wlan_codes();
    let aps: Vec<&scenario::NodeSpec> = codes
        .iter()
        .map(|w| {
            sc.nodes
                .iter()
                .find(|n| n.node_type == NodeType::Ap && n.wlan_code == *w)
                .expect("validated scenario has one AP per WLAN")
        })
        .collect();
    let mut wlans = Vec::with_capacity(aps.len());
    for (ap, w) in aps.iter().zip(&codes) {
        let (width, mcs, n_agg) = effective_link(sc, w, p)?;
        wlans.push(CtmnWlan::from_params(n_agg, mcs, width, ap.cca_dbm, p).map_err(SimError::from)?);
    }
    let rx_dbm: Vec<Vec<f64>> = aps
        .iter()
        .map(|a| {
            aps.iter()
                .map(|b| {
                    if a.code == b.code {
                        f64::NEG_INFINITY
                    } else {
                        phy::received_power_dbm(b.tx_power_dbm, distance(a, b), Obstructions::default(), p)
                    }
                })
                .collect()
        })
        .collect();
    Ok(CtmnInput { wlans, rx_dbm })
}

/// Raw frame airtime of one exchange (RTS + CTS + DATA + response), the
/// numerator of the occupancy metric.
fn exchange_airtime_us(n_agg: u32, mcs: u8, width: u8, p: &PhyMacParams) -> Result<f64, RunError> {
    let t_data = phy::data_us(n_agg, mcs, width, p).map_err(SimError::from)?;
    Ok(phy::rts_us(p) + phy::cts_us(p) + t_data + phy::response_us(n_agg, p))
}

/// Stationary-chain predictions in the simulator's stats schema. Collisions
/// do not exist in the chain (activations are continuous), so collision_prob
/// is 0; mean_delay_ms is the saturated service time per delivered batch.
pub fn ctmn_stats(sc: &Scenario) -> Result<Vec<WlanStats>, RunError> {
    let p = params_for(sc);
    let input = ctmn_input(sc, &p)?;
    let sol = ctmn::solve(&input)?;
    let codes = sc.wlan_codes();
    let mut out = Vec::with_capacity(codes.len());
    for (i, w) in codes.iter().enumerate() {
        let (width, mcs, n_agg) = effective_link(sc, w, &p)?;
        let air = exchange_airtime_us(n_agg, mcs, width, &p)?;
        let service_us = 1.0 / input.wlans[i].service_rate_per_us;
        out.push(WlanStats {
            code: w.clone(),
            throughput_mbps: sol.throughput_mbps[i],
            mean_delay_ms: service_us / 1e3,
            collision_prob: 0.0,
            occupancy: sol.activity[i] * air / service_us,
            zero_attempts: false,
        });
    }
    Ok(out)
}

/// Fixed-point predictions in the simulator's stats schema. The model is
/// symmetric, so every WLAN gets the same row values; it assumes the
/// scenario is fully overlapping and homogeneous. mean_delay_ms is the
/// saturated per-batch access delay E[slot]/(tau(1-p)).
pub fn bianchi_stats(sc: &Scenario) -> Result<Vec<WlanStats>, RunError> {
    let p = params_for(sc);
    let codes = sc.wlan_codes();
    let (width, mcs, n_agg) = effective_link(sc, &codes[0], &p)?;
    let sol = bianchi::solve(
        &DcfScenario {
            n_wlans: codes.len() as u32,
            n_agg,
            mcs,
            width,
            backoff_stages: 0,
        },
        &p,
    )
    .map_err(SimError::from)?;
    let air = exchange_airtime_us(n_agg, mcs, width, &p)?;
    let delay_us = sol.expected_slot_us / (sol.tau * (1.0 - sol.collision_prob));
    let occupancy = (sol.tau * (1.0 - sol.collision_prob) * air
        + sol.tau * sol.collision_prob * phy::rts_us(&p))
        / sol.expected_slot_us;
    Ok(codes
        .iter()
        .map(|w| WlanStats {
            code: w.clone(),
            throughput_mbps: sol.per_wlan_throughput_mbps,
            mean_delay_ms: delay_us / 1e3,
            collision_prob: sol.collision_prob,
            occupancy,
            zero_attempts: false,
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct CompareRow {
    pub wlan_code: String,
    pub simulated_mbps: f64,
    pub analytic_mbps: f64,
    /// (simulated - analytic) / analytic.
    pub relative_error: f64,
}

#[derive(Debug, Clone)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
    pub tolerance: f64,
}

impl CompareTable {
    pub fn within_tolerance(&self) -> bool {
        self.rows.iter().all(|r| r.relative_error.abs() <= self.tolerance)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("wlan_code,simulated_mbps,ctmn_mbps,relative_error\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:+.6}\n",
                r.wlan_code, r.simulated_mbps, r.analytic_mbps, r.relative_error
            ));
        }
        out
    }
}

/// Simulates and solves the stationary chain for the same scenario, pairing
/// per-WLAN throughputs. The simulation side is returned too so callers can
/// write its stats alongside the table.
pub fn compare_with_ctmn(
    sc: &Scenario,
    seed: u64,
    time_s: f64,
) -> Result<(CompareTable, SimOutcome), RunError> {
    let analytic = ctmn_stats(sc)?;
    let outcome = simulate(sc, seed, time_s, false, false)?;
    let rows = outcome
        .stats
        .iter()
        .zip(&analytic)
        .map(|(s, a)| CompareRow {
            wlan_code: s.code.clone(),
            simulated_mbps: s.throughput_mbps,
            analytic_mbps: a.throughput_mbps,
            relative_error: (s.throughput_mbps - a.throughput_mbps) / a.throughput_mbps,
        })
        .collect();
    Ok((CompareTable { rows, tolerance: COMPARE_TOLERANCE }, outcome))
}

/// One aggregated sweep point: either one density (all seeds pooled) or one
/// seed of a fixed scenario.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub label: String,
    pub runs: u32,
    pub throughput_mean_mbps: f64,
    pub throughput_std_mbps: f64,
    pub collision_prob_mean: f64,
    pub collision_prob_std: f64,
    pub events_dispatched_mean: f64,
    pub wall_s_mean: f64,
    /// Per-seed outcomes in seed order, for per-point output files.
    pub outcomes: Vec<(u64, SimOutcome)>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn run_point(label: &str, sc: &Scenario, seeds: &[u64], time_s: f64) -> Result<SweepPoint, RunError> {
    let mut outcomes = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let o = simulate(sc, seed, time_s, false, false).map_err(|e| RunError::SweepPoint {
            point: format!("{label} seed={seed}"),
            source: Box::new(e),
        })?;
        outcomes.push((seed, o));
    }
    let thr: Vec<f64> = outcomes
        .iter()
        .map(|(_, o)| o.stats.iter().map(|s| s.throughput_mbps).sum())
        .collect();
    let coll: Vec<f64> = outcomes
        .iter()
        .map(|(_, o)| {
            let n = o.stats.len() as f64;
            o.stats.iter().map(|s| s.collision_prob).sum::<f64>() / n
        })
        .collect();
    let (tm, ts) = mean_std(&thr);
    let (cm, cs) = mean_std(&coll);
    let ev = outcomes.iter().map(|(_, o)| o.events_dispatched as f64).sum::<f64>()
        / outcomes.len() as f64;
    let wall = outcomes.iter().map(|(_, o)| o.wall_s).sum::<f64>() / outcomes.len() as f64;
    Ok(SweepPoint {
        label: label.to_string(),
        runs: outcomes.len() as u32,
        throughput_mean_mbps: tm,
        throughput_std_mbps: ts,
        collision_prob_mean: cm,
        collision_prob_std: cs,
        events_dispatched_mean: ev,
        wall_s_mean: wall,
        outcomes,
    })
}

/// Density sweep: for each n, an auto-generated fully-overlapping scenario
/// is run once per seed. Points run in parallel; the returned order is the
/// axis order regardless of completion order.
pub fn sweep_density(ns: &[u32], seeds: &[u64], time_s: f64) -> Result<Vec<SweepPoint>, RunError> {
    assert!(!ns.is_empty() && !seeds.is_empty(), "sweep axes must be non-empty");
    let mut slots: Vec<Option<Result<SweepPoint, RunError>>> = (0..ns.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for &n in ns {
            handles.push(scope.spawn(move || {
                let sc = scenario::fully_overlapping(n);
                run_point(&format!("n={n}"), &sc, seeds, time_s)
            }));
        }
        for (slot, h) in slots.iter_mut().zip(handles) {
            *slot = Some(h.join().expect("sweep worker panicked"));
        }
    });
    slots.into_iter().map(|s| s.expect("every slot filled")).collect()
}

/// Seed sweep over one fixed scenario: one point per seed.
pub fn sweep_seeds(sc: &Scenario, seeds: &[u64], time_s: f64) -> Result<Vec<SweepPoint>, RunError> {
    assert!(!seeds.is_empty(), "sweep axes must be non-empty");
    seeds
        .iter()
        .map(|&s| run_point(&format!("seed={s}"), sc, &[s], time_s))
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from(
        "point,runs,throughput_mean_mbps,throughput_std_mbps,collision_prob_mean,collision_prob_std,events_dispatched_mean,wall_clock_s_mean\n",
    );
    for p in points {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.0},{:.3}\n",
            p.label,
            p.runs,
            p.throughput_mean_mbps,
            p.throughput_std_mbps,
            p.collision_prob_mean,
            p.collision_prob_std,
            p.events_dispatched_mean,
            p.wall_s_mean
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_input_blocks_neighbors_but_not_ends() {
        let sc = scenario::partial_chain();
        let input = ctmn_input(&sc, &params_for(&sc)).unwrap();
        // A and C are mutually out of range; B hears both.
        assert!(!input.blocked(0, 0b100), "A must not sense C");
        assert!(!input.blocked(2, 0b001), "C must not sense A");
        assert!(input.blocked(1, 0b001), "B must sense A");
        assert!(input.blocked(1, 0b100), "B must sense C");
        assert!(input.blocked(0, 0b010), "A must sense B");
    }

    #[test]
    fn analytic_rows_share_the_stats_schema() {
        let sc = scenario::fully_overlapping(3);
        let rows = bianchi_stats(&sc).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.throughput_mbps > 0.0));
        assert!((rows[0].collision_prob - (1.0 - (15.0f64 / 17.0).powi(2))).abs() < 1e-12);
        let chain = scenario::partial_chain();
        let rows = ctmn_stats(&chain).unwrap();
        assert_eq!(rows.len(), 3);
        // Outer WLANs never sense each other, so they beat the middle one.
        assert!(rows[0].throughput_mbps > rows[1].throughput_mbps);
        assert!(rows[2].throughput_mbps > rows[1].throughput_mbps);
        assert!(rows.iter().all(|r| r.occupancy > 0.0 && r.occupancy < 1.0));
    }

    #[test]
    fn degenerate_density_sweep_matches_a_plain_run() {
        let points = sweep_density(&[1], &[7], 2.0).unwrap();
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].runs, 1);
        let sc = scenario::fully_overlapping(1);
        let plain = simulate(&sc, 7, 2.0, false, false).unwrap();
        assert_eq!(points[0].outcomes[0].1.stats_csv, plain.stats_csv);
        assert_eq!(points[0].outcomes[0].1.events_dispatched, plain.events_dispatched);
    }

    #[test]
    fn sweep_points_keep_axis_order() {
        let points = sweep_density(&[3, 1, 2], &[1], 0.5).unwrap();
        let labels: Vec<&str> = points.iter().map(|p| p.label.as_str()).collect();
        assert_eq!(labels, ["n=3", "n=1", "n=2"]);
    }

    #[test]
    fn compare_flags_disagreement_beyond_tolerance() {
        let sc = scenario::isolated(1);
        let (table, _) = compare_with_ctmn(&sc, 1, 5.0).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!(table.within_tolerance(), "isolated WLAN must match the chain closely");
        let forced = CompareTable {
            rows: vec![CompareRow {
                wlan_code: "A".into(),
                simulated_mbps: 12.0,
                analytic_mbps: 10.0,
                relative_error: 0.2,
            }],
            tolerance: COMPARE_TOLERANCE,
        };
        assert!(!forced.within_tolerance());
    }
}
