//! Per-WLAN counters and the derived metrics report.

/// Raw event counts accumulated by the simulator.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WlanCounters {
    pub code: String,
    /// RTS frames sent.
    pub rts_attempts: u64,
    /// Exchanges that died waiting for the CTS (the collision signal).
    pub cts_failures: u64,
    /// Exchanges that died after the data frame went out.
    pub ack_failures: u64,
    pub delivered_mpdus: u64,
    pub delivered_bits: u64,
    pub delay_sum_us: f64,
    pub delay_count: u64,
    /// Airtime of every frame sent by the WLAN's nodes.
    pub airtime_us: f64,
    pub generated: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WlanStats {
    pub code: String,
    pub throughput_mbps: f64,
    pub mean_delay_ms: f64,
    /// Fraction of RTS attempts that failed at the CTS stage.
    pub collision_prob: f64,
    /// Fraction of time the WLAN's own frames occupied the air.
    pub occupancy: f64,
    /// True when no RTS was ever sent, in which case collision_prob carries
    /// no information and is reported as zero.
    pub zero_attempts: bool,
}

pub fn compute(counters: &[WlanCounters], elapsed_us: f64) -> Vec<WlanStats> {
    assert!(elapsed_us > 0.0, "stats need elapsed time");
    counters
        .iter()
        .map(|c| {
            let zero_attempts = c.rts_attempts == 0;
            WlanStats {
                code: c.code.clone(),
                throughput_mbps: c.delivered_bits as f64 / elapsed_us,
                mean_delay_ms: if c.delay_count == 0 {
                    0.0
                } else {
                    c.delay_sum_us / c.delay_count as f64 / 1e3
                },
                collision_prob: if zero_attempts {
                    0.0
                } else {
                    c.cts_failures as f64 / c.rts_attempts as f64
                },
                occupancy: c.airtime_us / elapsed_us,
                zero_attempts,
            }
        })
        .collect()
}

/// Renders the metrics report as CSV, six decimals, one row per WLAN.
pub fn to_csv(stats: &[WlanStats]) -> String {
    let mut out = String::from("wlan_code,throughput_mbps,mean_delay_ms,collision_prob,occupancy\n");
    for s in stats {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6}\n",
            s.code, s.throughput_mbps, s.mean_delay_ms, s.collision_prob, s.occupancy
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_arithmetic() {
        let c = WlanCounters {
            code: "A".into(),
            rts_attempts: 100,
            cts_failures: 25,
            delivered_mpdus: 75,
            delivered_bits: 75 * 11728,
            delay_sum_us: 75.0 * 2000.0,
            delay_count: 75,
            airtime_us: 300_000.0,
            generated: 80,
            dropped: 0,
            ..Default::default()
        };
        let s = &compute(&[c], 1_000_000.0)[0];
        assert!((s.throughput_mbps - 0.8796).abs() < 1e-4);
        assert!((s.mean_delay_ms - 2.0).abs() < 1e-12);
        assert!((s.collision_prob - 0.25).abs() < 1e-12);
        assert!((s.occupancy - 0.3).abs() < 1e-12);
        assert!(!s.zero_attempts);
    }

    #[test]
    fn zero_attempts_is_flagged_not_nan() {
        let c = WlanCounters { code: "B".into(), ..Default::default() };
        let s = &compute(&[c], 1000.0)[0];
        assert!(s.zero_attempts);
        assert_eq!(s.collision_prob, 0.0);
        assert_eq!(s.mean_delay_ms, 0.0);
    }

    #[test]
    fn csv_shape() {
        let c = WlanCounters {
            code: "A".into(),
            rts_attempts: 4,
            cts_failures: 1,
            delivered_bits: 11728,
            delay_sum_us: 521.5,
            delay_count: 1,
            airtime_us: 416.0,
            ..Default::default()
        };
        let text = to_csv(&compute(&[c], 1000.0));
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "wlan_code,throughput_mbps,mean_delay_ms,collision_prob,occupancy"
        );
        assert_eq!(lines.next().unwrap(), "A,11.728000,0.521500,0.250000,0.416000");
        assert_eq!(lines.next(), None);
    }
}
