//! MAC-layer building blocks: node modes, backoff draws, channel-bonding
//! policies, and the timeout and NAV windows that glue an RTS/CTS exchange
//! together.

use crate::phy::{self, ChannelSet, PhyMacParams};
use crate::rng::RandomStream;

/// What a node is doing right now. Transitions are logged by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Idle or counting down backoff.
    Sensing,
    /// Emitting a frame.
    Transmit,
    /// Locked onto an addressed frame.
    Receive,
    /// Sent RTS, awaiting CTS.
    WaitCts,
    /// Sent CTS, awaiting the data frame.
    WaitData,
    /// Sent data, awaiting the ack or block-ack.
    WaitAck,
    /// Virtual carrier sense set by an overheard reservation.
    Nav,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Sensing => "SENSING",
            Mode::Transmit => "TRANSMIT",
            Mode::Receive => "RECEIVE",
            Mode::WaitCts => "WAIT_CTS",
            Mode::WaitData => "WAIT_DATA",
            Mode::WaitAck => "WAIT_ACK",
            Mode::Nav => "NAV",
        }
    }
}

/// Uniform draw on [0, cw] backoff slots.
pub fn draw_backoff_slots(stream: &mut RandomStream, cw: u32) -> u32 {
    stream.uniform_int(0, cw)
}

/// How a transmitter widens (or not) beyond its primary channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcbPolicy {
    /// OP: always transmit on the primary channel alone.
    OnlyPrimary,
    /// SCB: the whole allocated range or nothing.
    AllOrNothing,
    /// AM: widest valid free range, ties broken toward lower channels.
    WidestFree,
    /// PU: uniform draw among all valid free ranges.
    UniformRandom,
}

impl DcbPolicy {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "OP" => Some(DcbPolicy::OnlyPrimary),
            "SCB" => Some(DcbPolicy::AllOrNothing),
            "AM" => Some(DcbPolicy::WidestFree),
            "PU" => Some(DcbPolicy::UniformRandom),
            _ => None,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            DcbPolicy::OnlyPrimary => "OP",
            DcbPolicy::AllOrNothing => "SCB",
            DcbPolicy::WidestFree => "AM",
            DcbPolicy::UniformRandom => "PU",
        }
    }
}

/// All transmission sets that are contiguous, power-of-two wide, contain the
/// primary, and lie inside both the allocation and the currently free mask.
/// Ordered by width then start channel.
pub fn valid_tx_subsets(allocated: ChannelSet, primary: u8, free: ChannelSet) -> Vec<ChannelSet> {
    let mut out = Vec::new();
    for width in [1u8, 2, 4, 8] {
        for start in 0..=(8 - width) {
            let set = ChannelSet::range(start, start + width - 1);
            if set.contains(primary)
                && set.0 & !allocated.0 == 0
                && set.0 & !free.0 == 0
            {
                out.push(set);
            }
        }
    }
    out
}

/// Applies a bonding policy at the instant the backoff expires. `free` is
/// the set of channels currently idle at the transmitter. Returns None when
/// the policy refuses to transmit (which can only happen for SCB, or when
/// even the primary is busy).
pub fn select_channels(
    policy: DcbPolicy,
    allocated: ChannelSet,
    primary: u8,
    free: ChannelSet,
    stream: &mut RandomStream,
) -> Option<ChannelSet> {
    if !free.contains(primary) {
        return None;
    }
    match policy {
        DcbPolicy::OnlyPrimary => Some(ChannelSet::single(primary)),
        DcbPolicy::AllOrNothing => {
            if allocated.0 & !free.0 == 0 {
                Some(allocated)
            } else {
                None
            }
        }
        DcbPolicy::WidestFree => valid_tx_subsets(allocated, primary, free)
            .into_iter()
            .max_by_key(|s| (s.width(), std::cmp::Reverse(s.lowest().unwrap()))),
        DcbPolicy::UniformRandom => {
            let candidates = valid_tx_subsets(allocated, primary, free);
            if candidates.is_empty() {
                None
            } else {
                let i = stream.uniform_int(0, candidates.len() as u32 - 1) as usize;
                Some(candidates[i])
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Exchange timing
// ---------------------------------------------------------------------------

/// How long a transmitter waits for the next frame of an exchange to START
/// before declaring the exchange dead: SIFS plus one slot of margin. A
/// receiver locks onto a frame the instant it begins, so the legitimate
/// response (which always starts exactly SIFS after the previous frame)
/// disarms the timer well inside this window. Keeping the window shorter
/// than SIFS + DIFS matters: a station whose RTS collided must be back in
/// contention before the first post-collision backoff slot elapses, or it
/// would systematically lag the survivors' slot grid.
pub fn rx_start_timeout_us(p: &PhyMacParams) -> f64 {
    p.sifs_us + p.slot_us
}

/// Reservation carried by an RTS, counted from the end of the RTS: the rest
/// of the exchange through the final response frame.
pub fn rts_nav_us(t_data_us: f64, n_agg: u32, p: &PhyMacParams) -> f64 {
    3.0 * p.sifs_us + phy::cts_us(p) + t_data_us + phy::response_us(n_agg, p)
}

/// Reservation carried by a CTS: the RTS reservation minus the SIFS and CTS
/// that have elapsed since.
pub fn cts_nav_us(rts_nav_us: f64, p: &PhyMacParams) -> f64 {
    rts_nav_us - p.sifs_us - phy::cts_us(p)
}
