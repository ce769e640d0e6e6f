//! Continuous-time Markov network over WLAN activity states.
//!
//! Each WLAN alternates between contending (exponential time to win the
//! channel at rate lambda) and transmitting (exponential exchange at rate
//! mu). A WLAN can only start transmitting while the aggregate power it
//! receives from the currently active set stays below its CCA threshold, so
//! the reachable state space and the transition structure encode the sensing
//! topology, including purely additive blocking where no single neighbor is
//! audible but two together are. Such chains are not reversible: a state can
//! lose a member that could never re-enter it.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::oracles::mean_backoff_us;
use crate::phy::{self, PhyMacParams, PhyError};

pub const MAX_WLANS: usize = 20;
pub const MAX_STATES: usize = 1024;

#[derive(Debug, Error, PartialEq)]
pub enum CtmnError {
    #[error("{n} WLANs exceed the {MAX_WLANS}-WLAN enumeration limit")]
    TooManyWlans { n: usize },
    #[error("{states} reachable states exceed the {MAX_STATES}-state solver limit")]
    StateSpaceTooLarge { states: usize },
    #[error("generator matrix is singular; the chain is not irreducible")]
    Singular,
    #[error(transparent)]
    Phy(#[from] PhyError),
}

#[derive(Debug, Clone)]
pub struct CtmnWlan {
    /// Rate of winning the channel while contending, per us.
    pub arrival_rate_per_us: f64,
    /// Exchange completion rate while active, per us.
    pub service_rate_per_us: f64,
    pub n_agg: u32,
    pub payload_bits: u32,
    pub cca_dbm: f64,
}

impl CtmnWlan {
    /// Rates matching the simulator's MAC: contention takes the mean backoff
    /// plus DIFS; an exchange is the RTS/CTS/DATA/response airtime with the
    /// response frame the transmitter actually elicits at this aggregation
    /// level.
    pub fn from_params(
        n_agg: u32,
        mcs: u8,
        width: u8,
        cca_dbm: f64,
        p: &PhyMacParams,
    ) -> Result<Self, PhyError> {
        let t_data = phy::data_us(n_agg, mcs, width, p)?;
        Ok(CtmnWlan {
            arrival_rate_per_us: 1.0 / (mean_backoff_us(p) + p.difs_us),
            service_rate_per_us: 1.0 / phy::exchange_us(t_data, n_agg, p),
            n_agg,
            payload_bits: p.payload_bits,
            cca_dbm,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CtmnInput {
    pub wlans: Vec<CtmnWlan>,
    /// rx_dbm[i][j]: power WLAN i's AP receives while WLAN j transmits.
    /// Diagonal entries are ignored.
    pub rx_dbm: Vec<Vec<f64>>,
}

impl CtmnInput {
    /// Whether WLAN `w` senses the channel busy in activity state `state`
    /// (bit j set = WLAN j transmitting). Powers add in linear units, so a
    /// set of individually inaudible neighbors can still block.
    pub fn blocked(&self, w: usize, state: u32) -> bool {
        let mut mw = 0.0;
        for j in 0..self.wlans.len() {
            if j != w && state & (1 << j) != 0 {
                mw += phy::dbm_to_mw(self.rx_dbm[w][j]);
            }
        }
        phy::cca_busy(phy::mw_to_dbm(mw), self.wlans[w].cca_dbm)
    }
}

#[derive(Debug, Clone)]
pub struct CtmnSolution {
    /// Reachable activity states as bitmasks, ordered by population count
    /// then numeric value. Index 0 is always the all-idle state.
    pub states: Vec<u32>,
    /// Stationary distribution over `states`.
    pub stationary: Vec<f64>,
    /// Per-WLAN probability of being active.
    pub activity: Vec<f64>,
    /// Per-WLAN long-run throughput, Mbps.
    pub throughput_mbps: Vec<f64>,
    /// Max-norm of pi * Q, a solver self-check.
    pub residual: f64,
}

pub fn solve(input: &CtmnInput) -> Result<CtmnSolution, CtmnError> {
    let n = input.wlans.len();
    if n > MAX_WLANS {
        return Err(CtmnError::TooManyWlans { n });
    }
    assert_eq!(input.rx_dbm.len(), n, "rx matrix must be n x n");
    assert!(input.rx_dbm.iter().all(|r| r.len() == n), "rx matrix must be n x n");

    // Reachable states: breadth-first from all-idle. Activation requires a
    // clear channel at the activating WLAN; deactivation is always possible
    // but never leaves the down-closed reachable set, so expanding
    // activations alone suffices.
    let mut seen: HashMap<u32, ()> = HashMap::new();
    let mut queue = VecDeque::from([0u32]);
    seen.insert(0, ());
    while let Some(s) = queue.pop_front() {
        for w in 0..n {
            if s & (1 << w) == 0 && !input.blocked(w, s) {
                let t = s | (1 << w);
                if seen.insert(t, ()).is_none() {
                    queue.push_back(t);
                }
            }
        }
        if seen.len() > MAX_STATES {
            return Err(CtmnError::StateSpaceTooLarge { states: seen.len() });
        }
    }

    let mut states: Vec<u32> = seen.into_keys().collect();
    states.sort_by_key(|&s| (s.count_ones(), s));
    let index: HashMap<u32, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let m = states.len();

    // Generator: q[a][b] is the rate from states[a] to states[b].
    let mut q = vec![vec![0.0f64; m]; m];
    for (a, &s) in states.iter().enumerate() {
        for w in 0..n {
            let bit = 1u32 << w;
            if s & bit != 0 {
                q[a][index[&(s ^ bit)]] += input.wlans[w].service_rate_per_us;
            } else if !input.blocked(w, s) {
                q[a][index[&(s | bit)]] += input.wlans[w].arrival_rate_per_us;
            }
        }
        let out: f64 = q[a].iter().sum();
        q[a][a] = -out;
    }

    let pi = stationary_distribution(&q)?;

    let mut residual = 0.0f64;
    for b in 0..m {
        let v: f64 = (0..m).map(|a| pi[a] * q[a][b]).sum();
        residual = residual.max(v.abs());
    }

    let mut activity = vec![0.0; n];
    for (i, &s) in states.iter().enumerate() {
        for (w, act) in activity.iter_mut().enumerate() {
            if s & (1 << w) != 0 {
                *act += pi[i];
            }
        }
    }
    let throughput_mbps = input
        .wlans
        .iter()
        .zip(&activity)
        .map(|(w, &a)| a * w.service_rate_per_us * w.n_agg as f64 * w.payload_bits as f64)
        .collect();

    Ok(CtmnSolution { states, stationary: pi, activity, throughput_mbps, residual })
}

/// Solves pi * Q = 0, sum(pi) = 1 by Gaussian elimination with partial
/// pivoting on the transposed system, one balance equation replaced by the
/// normalization constraint.
fn stationary_distribution(q: &[Vec<f64>]) -> Result<Vec<f64>, CtmnError> {
    let m = q.len();
    let mut a = vec![vec![0.0f64; m + 1]; m];
    for (row, arow) in a.iter_mut().enumerate().take(m - 1) {
        for col in 0..m {
            arow[col] = q[col][row];
        }
    }
    for col in 0..m {
        a[m - 1][col] = 1.0;
    }
    a[m - 1][m] = 1.0;

    for col in 0..m {
        let pivot_row = (col..m)
            .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))
            .expect("nonempty range");
        if a[pivot_row][col].abs() < 1e-300 {
            return Err(CtmnError::Singular);
        }
        a.swap(col, pivot_row);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..=m {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let mut pi = vec![0.0f64; m];
    for row in (0..m).rev() {
        let mut v = a[row][m];
        for k in row + 1..m {
            v -= a[row][k] * pi[k];
        }
        pi[row] = v / a[row][row];
    }
    Ok(pi)
}
