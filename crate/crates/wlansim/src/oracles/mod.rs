//! Closed-form throughput oracles used to cross-check the simulator.
//!
//! Two models with very different assumptions:
//! * [`bianchi`]: slotted fixed-point analysis of n fully-overlapping
//!   contenders under RTS/CTS.
//! * [`ctmn`]: continuous-time Markov network over WLAN activity states,
//!   which also handles partial sensing topologies.

pub mod bianchi;
pub mod ctmn;

use crate::phy::{self, PhyMacParams, PhyError};

/// Mean backoff duration in us: the expected draw from [0, cw] slots.
pub fn mean_backoff_us(p: &PhyMacParams) -> f64 {
    p.cw as f64 / 2.0 * p.slot_us
}

/// Renewal cycle of an isolated WLAN: mean backoff, DIFS, then the full
/// RTS/CTS/DATA/BACK exchange. The block-ack duration is used at every
/// aggregation level so the value matches the fixed-point model's success
/// slot exactly.
pub fn isolated_cycle_us(n_agg: u32, mcs: u8, width: u8, p: &PhyMacParams) -> Result<f64, PhyError> {
    let t_data = phy::data_us(n_agg, mcs, width, p)?;
    Ok(mean_backoff_us(p)
        + p.difs_us
        + phy::rts_us(p)
        + phy::cts_us(p)
        + t_data
        + p.back_us
        + 3.0 * p.sifs_us)
}

/// Throughput of an isolated WLAN from the renewal cycle, Mbps.
pub fn isolated_throughput_mbps(
    n_agg: u32,
    mcs: u8,
    width: u8,
    p: &PhyMacParams,
) -> Result<f64, PhyError> {
    let cycle = isolated_cycle_us(n_agg, mcs, width, p)?;
    Ok(n_agg as f64 * p.payload_bits as f64 / cycle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isolated_cycle_reference_values() {
        let p = PhyMacParams::default();
        // 67.5 backoff + 34 DIFS + 52 + 44 + 244 + 32 + 48 = 521.5 us.
        assert!((isolated_cycle_us(1, 8, 1, &p).unwrap() - 521.5).abs() < 1e-9);
        // 40-MPDU batch: data frame grows to 5460 us.
        assert!((isolated_cycle_us(40, 8, 1, &p).unwrap() - 5737.5).abs() < 1e-9);
        let thr1 = isolated_throughput_mbps(1, 8, 1, &p).unwrap();
        assert!((thr1 - 22.48897).abs() < 1e-4);
        let thr40 = isolated_throughput_mbps(40, 8, 1, &p).unwrap();
        assert!((thr40 - 469120.0 / 5737.5).abs() < 1e-9);
        assert!((thr40 - 81.764).abs() < 1e-2);
        assert!(thr40 > 3.0 * thr1, "aggregation amortizes per-exchange overhead");
    }
}
