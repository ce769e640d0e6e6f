//! Dynamic channel bonding policies under partial-band contention. WLAN A
//! owns all eight channels; WLAN B camps on the upper half. A's policy
//! decides what happens whenever B holds channels 4-7:
//!   OP  never bonds, transmits on its primary alone;
//!   SCB wants all eight or nothing, so it stalls while B is up;
//!   AM  grabs the widest free block containing its primary;
//!   PU  draws uniformly among the valid free blocks.
//! MCS is selected per link, so wider transmissions also ride faster rates.

use wlansim::runner;
use wlansim::scenario;

fn main() {
    println!("{:>8} {:>12} {:>12}", "policy", "A_mbps", "B_mbps");
    for policy in ["OP", "SCB", "AM", "PU"] {
        let csv = format!(
            "# WLAN A: channels 0-7, primary 0; WLAN B: channels 4-7, primary 6\n\
             node_code,node_type,wlan_code,x,y,z,primary_channel,min_channel,max_channel,tx_power_dbm,cca_dbm,traffic_model,traffic_load,dcb_policy\n\
             AP_A,AP,A,0,0,0,0,0,7,20,-82,full_buffer,0,{policy}\n\
             STA_A1,STA,A,0,2,0,0,0,7,20,-82,full_buffer,0,{policy}\n\
             AP_B,AP,B,3,0,0,6,4,7,20,-82,full_buffer,0,AM\n\
             STA_B1,STA,B,3,2,0,6,4,7,20,-82,full_buffer,0,AM\n"
        );
        let (sc, warnings) = scenario::parse_csv(&csv).unwrap();
        assert!(warnings.is_empty());
        let out = runner::simulate(&sc, 1, 20.0, false, false).unwrap();
        println!(
            "{policy:>8} {:>12.3} {:>12.3}",
            out.stats[0].throughput_mbps, out.stats[1].throughput_mbps
        );
    }
}
