//! Fixed-point throughput model for n fully-overlapping RTS/CTS contenders.
//!
//! Models the channel as a sequence of virtual slots: empty (one backoff
//! slot), successful exchange, or RTS collision. Each contender transmits in
//! a slot with probability tau, independent of the others; tau and the
//! conditional collision probability p are coupled through a fixed point.

use crate::phy::{self, PhyMacParams, PhyError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcfScenario {
    /// Saturated contenders, all within sensing range of each other.
    pub n_wlans: u32,
    /// MPDUs per data frame.
    pub n_agg: u32,
    pub mcs: u8,
    /// Bonded width in basic channels.
    pub width: u8,
    /// Window-doubling retry stages. 0 keeps the window fixed at cw, in
    /// which case tau = 2/(cw+2) independent of load.
    pub backoff_stages: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcfSolution {
    /// Per-slot transmission probability of one contender.
    pub tau: f64,
    /// Probability a transmission attempt collides.
    pub collision_prob: f64,
    /// Probability a virtual slot carries at least one transmission.
    pub p_any_tx: f64,
    /// Probability a busy slot is a success.
    pub p_success_given_tx: f64,
    pub success_slot_us: f64,
    pub collision_slot_us: f64,
    pub expected_slot_us: f64,
    pub total_throughput_mbps: f64,
    pub per_wlan_throughput_mbps: f64,
}

/// Transmission probability for a given collision probability. Uses the
/// singularity-free geometric-sum form, exact at p = 1/2.
fn tau_of_p(p: f64, w: f64, stages: u32) -> f64 {
    let geom: f64 = (0..stages).map(|k| (2.0 * p).powi(k as i32)).sum();
    2.0 / (w + 1.0 + p * w * geom)
}

pub fn solve(s: &DcfScenario, p: &PhyMacParams) -> Result<DcfSolution, PhyError> {
    assert!(s.n_wlans >= 1);
    let n = s.n_wlans as f64;
    let w = (p.cw + 1) as f64;

    let mut tau = 2.0 / (w + 1.0);
    for _ in 0..10_000 {
        let coll = 1.0 - (1.0 - tau).powf(n - 1.0);
        let next = tau_of_p(coll, w, s.backoff_stages);
        if (next - tau).abs() < 1e-14 {
            tau = next;
            break;
        }
        tau = 0.5 * tau + 0.5 * next;
    }
    let coll = 1.0 - (1.0 - tau).powf(n - 1.0);

    let t_data = phy::data_us(s.n_agg, s.mcs, s.width, p)?;
    // Success slot: full exchange plus DIFS. The block-ack duration applies
    // at every aggregation level. Collision slot: RTS plus DIFS (colliders
    // give up after the missing CTS).
    let t_s = phy::rts_us(p) + phy::cts_us(p) + t_data + p.back_us + 3.0 * p.sifs_us + p.difs_us;
    let t_c = phy::rts_us(p) + p.difs_us;

    let p_any = 1.0 - (1.0 - tau).powf(n);
    let p_succ = if p_any > 0.0 {
        n * tau * (1.0 - tau).powf(n - 1.0) / p_any
    } else {
        0.0
    };
    let e_slot = (1.0 - p_any) * p.slot_us
        + p_any * p_succ * t_s
        + p_any * (1.0 - p_succ) * t_c;
    let total = p_any * p_succ * s.n_agg as f64 * p.payload_bits as f64 / e_slot;

    Ok(DcfSolution {
        tau,
        collision_prob: coll,
        p_any_tx: p_any,
        p_success_given_tx: p_succ,
        success_slot_us: t_s,
        collision_slot_us: t_c,
        expected_slot_us: e_slot,
        total_throughput_mbps: total,
        per_wlan_throughput_mbps: total / n,
    })
}
