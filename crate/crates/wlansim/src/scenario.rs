//! Scenario files: a CSV of nodes plus optional run knobs.
//!
//! Format:
//! * `#` starts a comment line.
//! * `#!` starts a directive line setting a run knob, e.g. `#! mcs 8`.
//! * The header row must carry exactly the documented column names; extra
//!   trailing columns are ignored with a warning.
//!
//! Also home to the built-in topologies the integration suite and the
//! examples run.

use thiserror::Error;

use crate::mac::DcbPolicy;
use crate::traffic::TrafficModel;

pub const CSV_HEADER: &str = "node_code,node_type,wlan_code,x,y,z,primary_channel,min_channel,\
max_channel,tx_power_dbm,cca_dbm,traffic_model,traffic_load,dcb_policy";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeType {
    Ap,
    Sta,
}

impl NodeType {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "AP" => Some(NodeType::Ap),
            "STA" => Some(NodeType::Sta),
            _ => None,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            NodeType::Ap => "AP",
            NodeType::Sta => "STA",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub code: String,
    pub node_type: NodeType,
    pub wlan_code: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub primary_channel: u8,
    pub min_channel: u8,
    pub max_channel: u8,
    pub tx_power_dbm: f64,
    pub cca_dbm: f64,
    pub traffic_model: TrafficModel,
    pub dcb_policy: DcbPolicy,
}

/// Run knobs a scenario can override via `#!` directives.
#[derive(Debug, Clone, PartialEq)]
pub struct SimKnobs {
    /// Aggregation ceiling per data frame; the PPDU duration limit may cap
    /// it further.
    pub n_agg_max: u32,
    /// Pinned MCS for data frames; None selects per link.
    pub mcs: Option<u8>,
    /// SINR a reception must keep to survive interference, dB. None applies
    /// the default margin derived from the frame's MCS sensitivity.
    pub capture_threshold_db: Option<f64>,
    pub buffer_capacity: usize,
    pub cw: u32,
    pub noise_dbm: f64,
}

impl Default for SimKnobs {
    fn default() -> Self {
        SimKnobs {
            n_agg_max: 1,
            mcs: None,
            capture_threshold_db: None,
            buffer_capacity: 1000,
            cw: 15,
            noise_dbm: -95.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub nodes: Vec<NodeSpec>,
    pub knobs: SimKnobs,
}

impl Scenario {
    pub fn wlan_codes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for n in &self.nodes {
            if !out.contains(&n.wlan_code) {
                out.push(n.wlan_code.clone());
            }
        }
        out
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T, ScenarioError> {
    s.trim().parse().map_err(|_| ScenarioError::Parse {
        line,
        msg: format!("cannot parse {what} from {s:?}"),
    })
}

fn parse_directive(knobs: &mut SimKnobs, rest: &str, line: usize, warnings: &mut Vec<String>) -> Result<(), ScenarioError> {
    let mut it = rest.split_whitespace();
    let (Some(key), Some(value)) = (it.next(), it.next()) else {
        return Err(ScenarioError::Parse { line, msg: "directive needs a key and a value".into() });
    };
    match key {
        "n_agg_max" => {
            knobs.n_agg_max = parse_field(value, line, "n_agg_max")?;
            if knobs.n_agg_max == 0 {
                return Err(ScenarioError::Parse { line, msg: "n_agg_max must be at least 1".into() });
            }
        }
        "mcs" => {
            let m: u8 = parse_field(value, line, "mcs")?;
            if m >= crate::phy::MCS_COUNT {
                return Err(ScenarioError::Parse { line, msg: format!("mcs {m} out of range 0..=11") });
            }
            knobs.mcs = Some(m);
        }
        "capture_threshold_db" => knobs.capture_threshold_db = Some(parse_field(value, line, "capture_threshold_db")?),
        "buffer_capacity" => {
            knobs.buffer_capacity = parse_field(value, line, "buffer_capacity")?;
            if knobs.buffer_capacity == 0 {
                return Err(ScenarioError::Parse { line, msg: "buffer_capacity must be at least 1".into() });
            }
        }
        "cw" => knobs.cw = parse_field(value, line, "cw")?,
        "noise_dbm" => knobs.noise_dbm = parse_field(value, line, "noise_dbm")?,
        other => warnings.push(format!("line {line}: unknown directive {other:?} ignored")),
    }
    Ok(())
}

/// Parses a scenario file. Returns the scenario plus non-fatal warnings
/// (unknown directives, extra columns).
pub fn parse_csv(text: &str) -> Result<(Scenario, Vec<String>), ScenarioError> {
    let mut knobs = SimKnobs::default();
    let mut warnings = Vec::new();
    let mut nodes = Vec::new();
    let mut header_seen = false;
    let mut expected_cols = 14;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("#!") {
            parse_directive(&mut knobs, rest, line, &mut warnings)?;
            continue;
        }
        if trimmed.starts_with('#') {
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            let expected: Vec<&str> = CSV_HEADER.split(',').collect();
            if cols.len() < expected.len() || cols[..expected.len()] != expected[..] {
                return Err(ScenarioError::Parse {
                    line,
                    msg: format!("header must start with {CSV_HEADER:?}"),
                });
            }
            if cols.len() > expected.len() {
                warnings.push(format!(
                    "line {line}: {} extra column(s) ignored: {}",
                    cols.len() - expected.len(),
                    cols[expected.len()..].join(",")
                ));
            }
            expected_cols = cols.len();
            header_seen = true;
            continue;
        }

        let f: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if f.len() < 14 {
            return Err(ScenarioError::Parse {
                line,
                msg: format!("expected at least 14 fields, found {}", f.len()),
            });
        }
        if f.len() > expected_cols {
            warnings.push(format!("line {line}: row has more fields than the header; extras ignored"));
        }
        let node_type = NodeType::parse(f[1]).ok_or_else(|| ScenarioError::Parse {
            line,
            msg: format!("node_type must be AP or STA, found {:?}", f[1]),
        })?;
        let load: f64 = parse_field(f[12], line, "traffic_load")?;
        let traffic_model = match f[11].to_ascii_uppercase().as_str() {
            "FULL_BUFFER" => TrafficModel::FullBuffer,
            "POISSON" => TrafficModel::Poisson { packets_per_s: load },
            "DETERMINISTIC" => TrafficModel::Deterministic { packets_per_s: load },
            other => {
                return Err(ScenarioError::Parse {
                    line,
                    msg: format!("unknown traffic_model {other:?}"),
                })
            }
        };
        let dcb_policy = DcbPolicy::parse(f[13]).ok_or_else(|| ScenarioError::Parse {
            line,
            msg: format!("unknown dcb_policy {:?} (expected OP, SCB, AM or PU)", f[13]),
        })?;
        nodes.push(NodeSpec {
            code: f[0].to_string(),
            node_type,
            wlan_code: f[2].to_string(),
            x: parse_field(f[3], line, "x")?,
            y: parse_field(f[4], line, "y")?,
            z: parse_field(f[5], line, "z")?,
            primary_channel: parse_field(f[6], line, "primary_channel")?,
            min_channel: parse_field(f[7], line, "min_channel")?,
            max_channel: parse_field(f[8], line, "max_channel")?,
            tx_power_dbm: parse_field(f[9], line, "tx_power_dbm")?,
            cca_dbm: parse_field(f[10], line, "cca_dbm")?,
            traffic_model,
            dcb_policy,
        });
    }

    let scenario = Scenario { nodes, knobs };
    validate(&scenario)?;
    Ok((scenario, warnings))
}

/// Structural checks every scenario must pass before simulation: unique
/// codes, channel ranges in bounds, one AP plus at least one STA per WLAN.
pub fn validate(s: &Scenario) -> Result<(), ScenarioError> {
    if s.nodes.is_empty() {
        return Err(ScenarioError::Invalid("scenario has no nodes".into()));
    }
    let mut codes = std::collections::HashSet::new();
    for n in &s.nodes {
        if !codes.insert(n.code.as_str()) {
            return Err(ScenarioError::Invalid(format!("duplicate node_code {:?}", n.code)));
        }
        if n.max_channel >= 8 {
            return Err(ScenarioError::Invalid(format!(
                "{}: max_channel {} out of range 0..=7",
                n.code, n.max_channel
            )));
        }
        if n.min_channel > n.max_channel {
            return Err(ScenarioError::Invalid(format!(
                "{}: min_channel {} exceeds max_channel {}",
                n.code, n.min_channel, n.max_channel
            )));
        }
        if n.primary_channel < n.min_channel || n.primary_channel > n.max_channel {
            return Err(ScenarioError::Invalid(format!(
                "{}: primary_channel {} outside allocation {}..={}",
                n.code, n.primary_channel, n.min_channel, n.max_channel
            )));
        }
        let width = n.max_channel - n.min_channel + 1;
        if n.dcb_policy == DcbPolicy::AllOrNothing && !width.is_power_of_two() {
            return Err(ScenarioError::Invalid(format!(
                "{}: SCB needs a power-of-two allocation, got width {width}",
                n.code
            )));
        }
    }
    for w in s.wlan_codes() {
        let aps = s.nodes.iter().filter(|n| n.wlan_code == w && n.node_type == NodeType::Ap).count();
        let stas = s.nodes.iter().filter(|n| n.wlan_code == w && n.node_type == NodeType::Sta).count();
        if aps != 1 {
            return Err(ScenarioError::Invalid(format!("WLAN {w:?} needs exactly one AP, found {aps}")));
        }
        if stas == 0 {
            return Err(ScenarioError::Invalid(format!("WLAN {w:?} has no stations")));
        }
    }
    Ok(())
}

/// Renders a scenario back to the CSV format, directives first.
pub fn to_csv(s: &Scenario) -> String {
    let mut out = String::new();
    let d = SimKnobs::default();
    if s.knobs.n_agg_max != d.n_agg_max {
        out.push_str(&format!("#! n_agg_max {}\n", s.knobs.n_agg_max));
    }
    if let Some(m) = s.knobs.mcs {
        out.push_str(&format!("#! mcs {m}\n"));
    }
    if let Some(c) = s.knobs.capture_threshold_db {
        out.push_str(&format!("#! capture_threshold_db {c}\n"));
    }
    if s.knobs.buffer_capacity != d.buffer_capacity {
        out.push_str(&format!("#! buffer_capacity {}\n", s.knobs.buffer_capacity));
    }
    if s.knobs.cw != d.cw {
        out.push_str(&format!("#! cw {}\n", s.knobs.cw));
    }
    if s.knobs.noise_dbm != d.noise_dbm {
        out.push_str(&format!("#! noise_dbm {}\n", s.knobs.noise_dbm));
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for n in &s.nodes {
        let (model, load) = match n.traffic_model {
            TrafficModel::FullBuffer => ("FULL_BUFFER", 0.0),
            TrafficModel::Poisson { packets_per_s } => ("POISSON", packets_per_s),
            TrafficModel::Deterministic { packets_per_s } => ("DETERMINISTIC", packets_per_s),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            n.code,
            n.node_type.code(),
            n.wlan_code,
            n.x,
            n.y,
            n.z,
            n.primary_channel,
            n.min_channel,
            n.max_channel,
            n.tx_power_dbm,
            n.cca_dbm,
            model,
            load,
            n.dcb_policy.code()
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Built-in topologies
// ---------------------------------------------------------------------------

fn node(
    code: &str,
    node_type: NodeType,
    wlan: &str,
    x: f64,
    y: f64,
    cca_dbm: f64,
) -> NodeSpec {
    NodeSpec {
        code: code.to_string(),
        node_type,
        wlan_code: wlan.to_string(),
        x,
        y,
        z: 0.0,
        primary_channel: 0,
        min_channel: 0,
        max_channel: 0,
        tx_power_dbm: 20.0,
        cca_dbm,
        traffic_model: TrafficModel::FullBuffer,
        dcb_policy: DcbPolicy::WidestFree,
    }
}

/// One saturated WLAN, STA 2 m from its AP.
pub fn isolated(n_agg_max: u32) -> Scenario {
    Scenario {
        nodes: vec![
            node("AP_A", NodeType::Ap, "A", 0.0, 0.0, -82.0),
            node("STA_A1", NodeType::Sta, "A", 2.0, 0.0, -82.0),
        ],
        knobs: SimKnobs { n_agg_max, mcs: Some(8), ..SimKnobs::default() },
    }
}

/// One AP serving two STAs at equal range on opposite sides.
pub fn two_stations() -> Scenario {
    Scenario {
        nodes: vec![
            node("AP_A", NodeType::Ap, "A", 0.0, 0.0, -82.0),
            node("STA_A1", NodeType::Sta, "A", 2.0, 0.0, -82.0),
            node("STA_A2", NodeType::Sta, "A", -2.0, 0.0, -82.0),
        ],
        knobs: SimKnobs { mcs: Some(8), ..SimKnobs::default() },
    }
}

/// Three WLANs on an equilateral triangle of side 2 m, STAs pulled inward;
/// every AP senses every other, so the channel is time-shared.
pub fn full_overlap_triangle() -> Scenario {
    let h = 3.0f64.sqrt();
    let (cx, cy) = (1.0, h / 3.0);
    let aps = [(0.0, 0.0), (2.0, 0.0), (1.0, h)];
    let mut nodes = Vec::new();
    for (i, &(ax, ay)) in aps.iter().enumerate() {
        let wlan = ["A", "B", "C"][i];
        let (dx, dy) = (cx - ax, cy - ay);
        let norm = (dx * dx + dy * dy).sqrt();
        nodes.push(node(&format!("AP_{wlan}"), NodeType::Ap, wlan, ax, ay, -82.0));
        nodes.push(node(
            &format!("STA_{wlan}1"),
            NodeType::Sta,
            wlan,
            ax + 2.0 * dx / norm,
            ay + 2.0 * dy / norm,
            -82.0,
        ));
    }
    Scenario {
        nodes,
        knobs: SimKnobs {
            mcs: Some(8),
            capture_threshold_db: Some(5.0),
            ..SimKnobs::default()
        },
    }
}

/// Three WLANs on a 4 m line: neighbors sense each other, the ends do not.
/// The middle WLAN contends with both sides.
pub fn partial_chain() -> Scenario {
    let mut nodes = Vec::new();
    for (i, wlan) in ["A", "B", "C"].iter().enumerate() {
        let x = 4.0 * i as f64;
        nodes.push(node(&format!("AP_{wlan}"), NodeType::Ap, wlan, x, 0.0, -42.0));
        nodes.push(node(&format!("STA_{wlan}1"), NodeType::Sta, wlan, x, 2.0, -42.0));
    }
    Scenario {
        nodes,
        knobs: SimKnobs {
            n_agg_max: 64,
            mcs: Some(8),
            capture_threshold_db: Some(5.0),
            ..SimKnobs::default()
        },
    }
}

/// Three WLANs on a 5 m line where no single neighbor is audible to the
/// middle AP but the two together cross its CCA: purely additive blocking.
pub fn additive_middle() -> Scenario {
    let mut nodes = Vec::new();
    for (i, wlan) in ["A", "B", "C"].iter().enumerate() {
        let x = 5.0 * i as f64;
        let sta_y = if i == 1 { 3.0 } else { 2.0 };
        nodes.push(node(&format!("AP_{wlan}"), NodeType::Ap, wlan, x, 0.0, -38.0));
        nodes.push(node(&format!("STA_{wlan}1"), NodeType::Sta, wlan, x, sta_y, -38.0));
    }
    Scenario {
        nodes,
        knobs: SimKnobs {
            n_agg_max: 64,
            mcs: Some(8),
            capture_threshold_db: Some(5.0),
            ..SimKnobs::default()
        },
    }
}

/// Three WLANs spaced 10 m apart with CCA tuned so nobody senses anybody,
/// not even the two outer transmitters summed at the middle AP: each
/// should perform as if alone.
pub fn isolated_line() -> Scenario {
    let mut nodes = Vec::new();
    for (i, wlan) in ["A", "B", "C"].iter().enumerate() {
        let x = 10.0 * i as f64;
        nodes.push(node(&format!("AP_{wlan}"), NodeType::Ap, wlan, x, 0.0, -47.0));
        nodes.push(node(&format!("STA_{wlan}1"), NodeType::Sta, wlan, x, 2.0, -47.0));
    }
    Scenario {
        nodes,
        knobs: SimKnobs {
            mcs: Some(8),
            capture_threshold_db: Some(5.0),
            ..SimKnobs::default()
        },
    }
}

/// n saturated single-station WLANs dropped on the same spot: the APs sit on
/// a 5 cm circle, each station 2 m out radially. The capture threshold is
/// pinned at 60 dB so that any two overlapping transmissions destroy each
/// other at every receiver (a solo frame still decodes with ~68 dB of margin)
/// while every node stays well above every other node's sensing floor. That
/// is precisely the regime the saturation fixed-point model describes.
pub fn fully_overlapping(n: u32) -> Scenario {
    assert!(n >= 1);
    let mut nodes = Vec::new();
    for k in 0..n {
        let wlan = format!("W{k}");
        let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let (s, c) = a.sin_cos();
        nodes.push(node(&format!("AP_{wlan}"), NodeType::Ap, &wlan, 0.05 * c, 0.05 * s, -82.0));
        nodes.push(node(
            &format!("STA_{wlan}1"),
            NodeType::Sta,
            &wlan,
            2.05 * c,
            2.05 * s,
            -82.0,
        ));
    }
    Scenario {
        nodes,
        knobs: SimKnobs {
            mcs: Some(8),
            capture_threshold_db: Some(60.0),
            ..SimKnobs::default()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_everything() {
        for scenario in [
            isolated(1),
            isolated(40),
            two_stations(),
            full_overlap_triangle(),
            partial_chain(),
            additive_middle(),
            isolated_line(),
            fully_overlapping(5),
        ] {
            let text = to_csv(&scenario);
            let (parsed, warnings) = parse_csv(&text).expect("round trip parses");
            assert!(warnings.is_empty(), "{warnings:?}");
            assert_eq!(parsed, scenario);
        }
    }

    #[test]
    fn comments_directives_and_defaults() {
        let text = "\
# a comment
#! n_agg_max 64
#! mcs 8
#! future_knob 3

node_code,node_type,wlan_code,x,y,z,primary_channel,min_channel,max_channel,tx_power_dbm,cca_dbm,traffic_model,traffic_load,dcb_policy
AP_A,AP,A,0,0,0,0,0,0,20,-82,FULL_BUFFER,0,AM
STA_A1,STA,A,2,0,0,0,0,0,20,-82,FULL_BUFFER,0,AM
";
        let (s, warnings) = parse_csv(text).unwrap();
        assert_eq!(s.knobs.n_agg_max, 64);
        assert_eq!(s.knobs.mcs, Some(8));
        assert_eq!(s.knobs.buffer_capacity, 1000, "untouched knobs keep defaults");
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("future_knob"));
        assert_eq!(s.nodes.len(), 2);
    }

    #[test]
    fn extra_columns_warn_but_parse() {
        let text = format!(
            "{CSV_HEADER},notes\nAP_A,AP,A,0,0,0,0,0,0,20,-82,FULL_BUFFER,0,AM,hello\nSTA_A1,STA,A,2,0,0,0,0,0,20,-82,FULL_BUFFER,0,AM,world\n"
        );
        let (s, warnings) = parse_csv(&text).unwrap();
        assert_eq!(s.nodes.len(), 2);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("extra column"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad_header = "a,b,c\nAP_A,AP,A\n";
        let err = parse_csv(bad_header).unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line: 1, .. }), "{err}");

        let bad_field = format!("{CSV_HEADER}\nAP_A,AP,A,zero,0,0,0,0,0,20,-82,FULL_BUFFER,0,AM\nSTA_A1,STA,A,2,0,0,0,0,0,20,-82,FULL_BUFFER,0,AM\n");
        let err = parse_csv(&bad_field).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("line 2:"), "{msg}");
        assert!(msg.contains('x'), "{msg}");

        let bad_model = format!("{CSV_HEADER}\nAP_A,AP,A,0,0,0,0,0,0,20,-82,ALWAYS,0,AM\nSTA_A1,STA,A,2,0,0,0,0,0,20,-82,FULL_BUFFER,0,AM\n");
        let err = parse_csv(&bad_model).unwrap_err();
        assert!(err.to_string().contains("traffic_model"), "{err}");
    }

    #[test]
    fn structural_validation() {
        // Two APs in one WLAN.
        let text = format!("{CSV_HEADER}\nAP_A,AP,A,0,0,0,0,0,0,20,-82,FULL_BUFFER,0,AM\nAP_B,AP,A,2,0,0,0,0,0,20,-82,FULL_BUFFER,0,AM\nSTA_A1,STA,A,4,0,0,0,0,0,20,-82,FULL_BUFFER,0,AM\n");
        assert!(parse_csv(&text).unwrap_err().to_string().contains("exactly one AP"));

        // Missing STA.
        let text = format!("{CSV_HEADER}\nAP_A,AP,A,0,0,0,0,0,0,20,-82,FULL_BUFFER,0,AM\n");
        assert!(parse_csv(&text).unwrap_err().to_string().contains("no stations"));

        // Primary outside the allocation.
        let text = format!("{CSV_HEADER}\nAP_A,AP,A,0,0,0,5,0,3,20,-82,FULL_BUFFER,0,AM\nSTA_A1,STA,A,2,0,0,5,0,3,20,-82,FULL_BUFFER,0,AM\n");
        assert!(parse_csv(&text).unwrap_err().to_string().contains("outside allocation"));

        // SCB over a width-3 allocation can never transmit.
        let text = format!("{CSV_HEADER}\nAP_A,AP,A,0,0,0,0,0,2,20,-82,FULL_BUFFER,0,SCB\nSTA_A1,STA,A,2,0,0,0,0,2,20,-82,FULL_BUFFER,0,SCB\n");
        assert!(parse_csv(&text).unwrap_err().to_string().contains("power-of-two"));

        // Duplicate node codes.
        let text = format!("{CSV_HEADER}\nAP_A,AP,A,0,0,0,0,0,0,20,-82,FULL_BUFFER,0,AM\nAP_A,STA,A,2,0,0,0,0,0,20,-82,FULL_BUFFER,0,AM\n");
        assert!(parse_csv(&text).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn builtin_geometries_have_expected_shape() {
        let tri = full_overlap_triangle();
        assert_eq!(tri.nodes.len(), 6);
        // Every STA is 2 m from its own AP.
        for w in ["A", "B", "C"] {
            let ap = tri.nodes.iter().find(|n| n.code == format!("AP_{w}")).unwrap();
            let sta = tri.nodes.iter().find(|n| n.code == format!("STA_{w}1")).unwrap();
            let d = ((ap.x - sta.x).powi(2) + (ap.y - sta.y).powi(2)).sqrt();
            assert!((d - 2.0).abs() < 1e-12, "{w}: {d}");
        }
        let sweep = fully_overlapping(12);
        assert_eq!(sweep.nodes.len(), 24);
        for i in 0..12 {
            for j in 0..i {
                let a = &sweep.nodes[2 * i];
                let b = &sweep.nodes[2 * j];
                let d = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
                assert!(d <= 2.0 + 1e-12, "AP pair {i},{j} at {d} m");
            }
        }
    }
}
