//! Radio arithmetic: path loss, link budgets, interference aggregation, SINR,
//! MCS selection and frame durations.
//!
//! Everything here is pure; the simulator and the analytical oracles call the
//! same functions so their timing bases cannot drift apart.

use thiserror::Error;

/// PHY and MAC constants. Defaults model an indoor 5 GHz deployment with
/// 20 MHz basic channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PhyMacParams {
    /// Carrier frequency in GHz.
    pub freq_ghz: f64,
    /// Basic channel width in MHz.
    pub channel_width_mhz: f64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
    /// Background noise floor per 20 MHz, dBm.
    pub noise_dbm: f64,
    /// Legacy OFDM symbol duration, us.
    pub legacy_symbol_us: f64,
    /// HE OFDM symbol duration (GI included), us.
    pub symbol_us: f64,
    /// Data subcarriers per 20 MHz channel.
    pub subcarriers_per_channel: u32,
    pub spatial_streams: u32,
    /// Empty backoff slot, us.
    pub slot_us: f64,
    pub sifs_us: f64,
    pub difs_us: f64,
    pub pifs_us: f64,
    /// Legacy preamble duration, us.
    pub legacy_preamble_us: f64,
    /// HE single-user preamble duration, us.
    pub he_preamble_us: f64,
    pub ack_us: f64,
    pub back_us: f64,
    /// Maximum PPDU duration, us.
    pub max_ppdu_us: f64,
    /// Bits carried per legacy OFDM symbol.
    pub legacy_symbol_bits: u32,
    /// MPDU payload size, bits.
    pub payload_bits: u32,
    pub rts_bits: u32,
    pub cts_bits: u32,
    /// Service field prepended to every PSDU, bits.
    pub service_bits: u32,
    /// MAC header per A-MPDU, bits.
    pub mac_header_bits: u32,
    /// Contention window (backoff drawn uniform on [0, cw]).
    pub cw: u32,
    pub default_tx_power_dbm: f64,
    pub default_cca_dbm: f64,
}

impl Default for PhyMacParams {
    fn default() -> Self {
        PhyMacParams {
            freq_ghz: 5.0,
            channel_width_mhz: 20.0,
            tx_gain_db: 0.0,
            rx_gain_db: 0.0,
            noise_dbm: -95.0,
            legacy_symbol_us: 4.0,
            symbol_us: 16.0,
            subcarriers_per_channel: 234,
            spatial_streams: 1,
            slot_us: 9.0,
            sifs_us: 16.0,
            difs_us: 34.0,
            pifs_us: 25.0,
            legacy_preamble_us: 20.0,
            he_preamble_us: 100.0,
            ack_us: 28.0,
            back_us: 32.0,
            max_ppdu_us: 5484.0,
            legacy_symbol_bits: 24,
            payload_bits: 11728,
            rts_bits: 160,
            cts_bits: 112,
            service_bits: 16,
            mac_header_bits: 320,
            cw: 15,
            default_tx_power_dbm: 20.0,
            default_cca_dbm: -82.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PhyError {
    #[error("link infeasible: received power {rx_dbm:.2} dBm is below the lowest MCS sensitivity for width {width}")]
    LinkInfeasible { rx_dbm: f64, width: u8 },
    #[error("aggregation overflow: {n_agg} MPDUs exceed the PPDU limit, at most {max_n_agg} fit")]
    AggregationOverflow { n_agg: u32, max_n_agg: u32 },
    #[error("invalid channel width {width}: must be 1, 2, 4 or 8 basic channels")]
    InvalidWidth { width: u8 },
}

// ---------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------

/// Per-link obstruction counts feeding the path-loss model.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Obstructions {
    pub walls: u32,
    pub floors: u32,
}

/// Indoor residential path loss in dB. Free-space-like up to 5 m, steeper
/// decay beyond, plus per-floor and per-wall penalties.
pub fn path_loss_db(distance_m: f64, freq_ghz: f64, obs: Obstructions) -> f64 {
    assert!(distance_m > 0.0, "path loss needs a positive distance");
    let f = obs.floors as f64;
    let w = obs.walls as f64;
    let floor_term = if obs.floors == 0 {
        0.0
    } else {
        18.3 * f.powf((f + 2.0) / (f + 1.0) - 0.46)
    };
    let near = distance_m.min(5.0);
    let far = if distance_m > 5.0 {
        35.0 * (distance_m / 5.0).log10()
    } else {
        0.0
    };
    40.05 + 20.0 * (freq_ghz / 2.4).log10() + 20.0 * near.log10() + far + floor_term + 5.0 * w
}

/// Link budget: transmit power plus antenna gains minus path loss, dBm.
pub fn received_power_dbm(
    tx_power_dbm: f64,
    distance_m: f64,
    obs: Obstructions,
    p: &PhyMacParams,
) -> f64 {
    tx_power_dbm + p.tx_gain_db + p.rx_gain_db - path_loss_db(distance_m, p.freq_ghz, obs)
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    if mw <= 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * mw.log10()
    }
}

/// Sums received powers in linear milliwatts. Empty input is -inf dBm.
pub fn aggregate_power_dbm(levels_dbm: &[f64]) -> f64 {
    mw_to_dbm(levels_dbm.iter().map(|&d| dbm_to_mw(d)).sum())
}

/// SINR in dB against combined interference and noise.
pub fn sinr_db(signal_dbm: f64, interference_dbm: f64, noise_dbm: f64) -> f64 {
    signal_dbm - mw_to_dbm(dbm_to_mw(interference_dbm) + dbm_to_mw(noise_dbm))
}

/// Clear-channel assessment: busy at or above the threshold.
pub fn cca_busy(power_dbm: f64, threshold_dbm: f64) -> bool {
    power_dbm >= threshold_dbm
}

// ---------------------------------------------------------------------------
// Channel sets
// ---------------------------------------------------------------------------

/// Set of basic channels as a bitmask over indices 0..=7. A transmission set
/// must be contiguous, power-of-two sized and contain the primary channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChannelSet(pub u8);

impl ChannelSet {
    pub fn single(ch: u8) -> Self {
        assert!(ch < 8);
        ChannelSet(1 << ch)
    }

    /// Inclusive range of basic channels.
    pub fn range(lo: u8, hi: u8) -> Self {
        assert!(lo <= hi && hi < 8);
        let width = hi - lo + 1;
        ChannelSet((((1u16 << width) - 1) << lo) as u8)
    }

    pub fn contains(self, ch: u8) -> bool {
        ch < 8 && self.0 & (1 << ch) != 0
    }

    pub fn width(self) -> u8 {
        self.0.count_ones() as u8
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn channels(self) -> impl Iterator<Item = u8> {
        (0..8u8).filter(move |&c| self.0 & (1 << c) != 0)
    }

    pub fn lowest(self) -> Option<u8> {
        if self.0 == 0 {
            None
        } else {
            Some(self.0.trailing_zeros() as u8)
        }
    }

    fn contiguous(self) -> bool {
        if self.0 == 0 {
            return false;
        }
        let shifted = self.0 >> self.0.trailing_zeros();
        (shifted & (shifted + 1)) == 0
    }

    /// True when usable as a transmission set anchored at `primary`.
    pub fn valid_for_tx(self, primary: u8) -> bool {
        self.contains(primary) && self.contiguous() && self.width().is_power_of_two()
    }

    pub fn intersects(self, other: ChannelSet) -> bool {
        self.0 & other.0 != 0
    }
}

impl std::fmt::Display for ChannelSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.lowest(), self.width()) {
            (Some(lo), w) if w > 1 => write!(f, "{}-{}", lo, lo + w - 1),
            (Some(lo), _) => write!(f, "{lo}"),
            (None, _) => write!(f, "none"),
        }
    }
}

// ---------------------------------------------------------------------------
// MCS ladder
// ---------------------------------------------------------------------------

pub const MCS_COUNT: u8 = 12;

/// Receiver sensitivity per MCS at 20 MHz, dBm. Each width doubling costs 3 dB.
const SENSITIVITY_20MHZ_DBM: [f64; MCS_COUNT as usize] = [
    -82.0, -79.0, -77.0, -74.0, -70.0, -66.0, -65.0, -64.0, -59.0, -57.0, -54.0, -52.0,
];

/// (bits per subcarrier, coding numerator, coding denominator) per MCS.
const MODULATION: [(u32, u32, u32); MCS_COUNT as usize] = [
    (1, 1, 2),
    (2, 1, 2),
    (2, 3, 4),
    (4, 1, 2),
    (4, 3, 4),
    (6, 2, 3),
    (6, 3, 4),
    (6, 5, 6),
    (8, 3, 4),
    (8, 5, 6),
    (10, 3, 4),
    (10, 5, 6),
];

fn check_width(width: u8) -> Result<(), PhyError> {
    if matches!(width, 1 | 2 | 4 | 8) {
        Ok(())
    } else {
        Err(PhyError::InvalidWidth { width })
    }
}

/// Sensitivity of `mcs` at a bonded width of `width` basic channels, dBm.
pub fn sensitivity_dbm(mcs: u8, width: u8) -> f64 {
    assert!(mcs < MCS_COUNT);
    SENSITIVITY_20MHZ_DBM[mcs as usize] + 3.0 * (width as f64).log2()
}

/// Highest MCS whose sensitivity the received power clears at this width.
pub fn select_mcs(rx_power_dbm: f64, width: u8) -> Result<u8, PhyError> {
    check_width(width)?;
    (0..MCS_COUNT)
        .rev()
        .find(|&m| rx_power_dbm >= sensitivity_dbm(m, width))
        .ok_or(PhyError::LinkInfeasible {
            rx_dbm: rx_power_dbm,
            width,
        })
}

/// Data bits carried per OFDM symbol at the given MCS and bonded width.
pub fn bits_per_symbol(mcs: u8, width: u8, p: &PhyMacParams) -> u32 {
    assert!(mcs < MCS_COUNT);
    check_width(width).expect("checked width");
    let (bits, num, den) = MODULATION[mcs as usize];
    let raw = p.subcarriers_per_channel * width as u32 * p.spatial_streams * bits * num;
    debug_assert_eq!(raw % den, 0, "subcarrier count must divide evenly");
    raw / den
}

// ---------------------------------------------------------------------------
// Frame durations
// ---------------------------------------------------------------------------

/// Control frame duration: legacy preamble plus payload at the legacy rate.
fn legacy_frame_us(frame_bits: u32, p: &PhyMacParams) -> f64 {
    let sym = (p.service_bits + frame_bits).div_ceil(p.legacy_symbol_bits);
    p.legacy_preamble_us + sym as f64 * p.legacy_symbol_us
}

pub fn rts_us(p: &PhyMacParams) -> f64 {
    legacy_frame_us(p.rts_bits, p)
}

pub fn cts_us(p: &PhyMacParams) -> f64 {
    legacy_frame_us(p.cts_bits, p)
}

/// A-MPDU data frame duration at the given aggregation level, us.
/// Fails when the frame would exceed the PPDU duration limit, reporting the
/// largest aggregation level that fits.
pub fn data_us(n_agg: u32, mcs: u8, width: u8, p: &PhyMacParams) -> Result<f64, PhyError> {
    assert!(n_agg >= 1, "aggregation level starts at 1");
    check_width(width)?;
    let bps = bits_per_symbol(mcs, width, p);
    let bits = p.service_bits + p.mac_header_bits + n_agg * p.payload_bits;
    let t = p.he_preamble_us + bits.div_ceil(bps) as f64 * p.symbol_us;
    if t > p.max_ppdu_us {
        Err(PhyError::AggregationOverflow {
            n_agg,
            max_n_agg: max_aggregation(mcs, width, p),
        })
    } else {
        Ok(t)
    }
}

/// Largest aggregation level whose data frame still fits in the PPDU limit.
pub fn max_aggregation(mcs: u8, width: u8, p: &PhyMacParams) -> u32 {
    let bps = bits_per_symbol(mcs, width, p) as u64;
    let symbols = ((p.max_ppdu_us - p.he_preamble_us) / p.symbol_us).floor() as u64;
    let budget = symbols * bps;
    let overhead = (p.service_bits + p.mac_header_bits) as u64;
    if budget <= overhead {
        0
    } else {
        ((budget - overhead) / p.payload_bits as u64) as u32
    }
}

/// Response frame duration: block-ack when aggregating, plain ack otherwise.
pub fn response_us(n_agg: u32, p: &PhyMacParams) -> f64 {
    if n_agg > 1 {
        p.back_us
    } else {
        p.ack_us
    }
}

/// Airtime of one full RTS/CTS/DATA/response exchange including the three
/// inter-frame spaces, us.
pub fn exchange_us(t_data_us: f64, n_agg: u32, p: &PhyMacParams) -> f64 {
    rts_us(p) + cts_us(p) + t_data_us + response_us(n_agg, p) + 3.0 * p.sifs_us
}
