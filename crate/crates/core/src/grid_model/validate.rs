use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::types::{BusKind, GridCase, LoadProfile};

/// A broken case invariant: the offending entity and the rule it fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
}

impl Violation {
    fn new(entity: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            entity: entity.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

const PROB_TOL: f64 = 1e-9;

fn in_unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

/// Connected components of the bus graph, ignoring branches that reference unknown buses.
pub fn bus_components(case: &GridCase) -> Vec<usize> {
    let n = case.buses.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for br in &case.branches {
        if let (Some(a), Some(b)) = (case.bus_index(&br.from_bus), case.bus_index(&br.to_bus)) {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }
    (0..n).map(|i| find(&mut parent, i)).collect()
}

pub fn is_connected(case: &GridCase) -> bool {
    let comps = bus_components(case);
    comps.windows(2).all(|w| w[0] == w[1])
}

fn check_unique<'a>(
    kind: &str,
    ids: impl Iterator<Item = &'a str>,
    out: &mut Vec<Violation>,
) {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            out.push(Violation::new(format!("{kind} {id}"), "duplicate id"));
        }
    }
}

/// Checks every case invariant. An empty result means the case is usable by every study.
pub fn validate(case: &GridCase) -> Vec<Violation> {
    let mut out = Vec::new();
    let bus_ids: HashSet<&str> = case.buses.iter().map(|b| b.id.as_str()).collect();
    let bus_ref = |owner: String, bus: &str, out: &mut Vec<Violation>| {
        if !bus_ids.contains(bus) {
            out.push(Violation::new(owner, format!("unknown bus {bus}")));
        }
    };

    if case.format_version != super::types::CASE_FORMAT_VERSION {
        out.push(Violation::new(
            "case",
            format!(
                "format_version {} unsupported (expected {})",
                case.format_version,
                super::types::CASE_FORMAT_VERSION
            ),
        ));
    }
    if !(case.system_frequency > 0.0) {
        out.push(Violation::new("case", "system_frequency > 0"));
    }
    if !(case.base_mva > 0.0) {
        out.push(Violation::new("case", "base_mva > 0"));
    }
    if case.buses.is_empty() {
        out.push(Violation::new("case", "at least one bus"));
    }

    check_unique("bus", case.buses.iter().map(|b| b.id.as_str()), &mut out);
    check_unique("branch", case.branches.iter().map(|b| b.id.as_str()), &mut out);
    check_unique("machine", case.machines.iter().map(|m| m.id.as_str()), &mut out);
    check_unique("renewable", case.renewables.iter().map(|r| r.id.as_str()), &mut out);
    check_unique("profile", case.profiles.iter().map(|p| p.bus.as_str()), &mut out);

    for b in &case.buses {
        let e = format!("bus {}", b.id);
        if !(b.base_kv > 0.0) {
            out.push(Violation::new(&e, "base_kv > 0"));
        }
        if !(b.v_min < b.v_max) {
            out.push(Violation::new(&e, "v_min < v_max"));
        }
        if !(b.v_set > 0.0) {
            out.push(Violation::new(&e, "v_set > 0"));
        }
        if !b.load_p.is_finite() || !b.load_q.is_finite() {
            out.push(Violation::new(&e, "finite load"));
        }
    }
    let slack_count = case.buses.iter().filter(|b| b.kind == BusKind::Slack).count();
    if slack_count != 1 {
        out.push(Violation::new(
            "case",
            format!("exactly one slack bus (found {slack_count})"),
        ));
    }

    for br in &case.branches {
        let e = format!("branch {}", br.id);
        bus_ref(e.clone(), &br.from_bus, &mut out);
        bus_ref(e.clone(), &br.to_bus, &mut out);
        if br.from_bus == br.to_bus {
            out.push(Violation::new(&e, "from_bus != to_bus"));
        }
        if br.x == 0.0 || !br.x.is_finite() {
            out.push(Violation::new(&e, "x != 0"));
        }
        if !(br.thermal_rating > 0.0) {
            out.push(Violation::new(&e, "thermal_rating > 0"));
        }
    }

    for m in &case.machines {
        let e = format!("machine {}", m.id);
        bus_ref(e.clone(), &m.bus, &mut out);
        if !(m.h > 0.0) {
            out.push(Violation::new(&e, "h > 0"));
        }
        if !(m.s_rated > 0.0) {
            out.push(Violation::new(&e, "s_rated > 0"));
        }
        if !in_unit(m.forced_outage_rate) {
            out.push(Violation::new(&e, "0 <= forced_outage_rate <= 1"));
        }
        if !(m.p_min <= m.p_set && m.p_set <= m.p_max) {
            out.push(Violation::new(&e, "p_min <= p_set <= p_max"));
        }
        if !(m.xd_t > 0.0) {
            out.push(Violation::new(&e, "xd_t > 0"));
        }
        if !(m.damping >= 0.0) {
            out.push(Violation::new(&e, "damping >= 0"));
        }
        if !in_unit(m.agc_participation) {
            out.push(Violation::new(&e, "0 <= agc_participation <= 1"));
        }
        if let Some(g) = &m.governor {
            if !(g.droop_r > 0.0) {
                out.push(Violation::new(&e, "governor droop_r > 0"));
            }
            if !(g.time_const > 0.0) {
                out.push(Violation::new(&e, "governor time_const > 0"));
            }
            if !(g.deadband >= 0.0) {
                out.push(Violation::new(&e, "governor deadband >= 0"));
            }
        }
    }

    for r in &case.renewables {
        let e = format!("renewable {}", r.id);
        bus_ref(e.clone(), &r.bus, &mut out);
        if !(r.nameplate >= 0.0) {
            out.push(Violation::new(&e, "nameplate >= 0"));
        }
        if !in_unit(r.output_fraction) {
            out.push(Violation::new(&e, "0 <= output_fraction <= 1"));
        }
        if !in_unit(r.inertia_coupling) {
            out.push(Violation::new(&e, "0 <= inertia_coupling <= 1"));
        } else if r.kind.fully_decoupled() && r.inertia_coupling != 0.0 {
            out.push(Violation::new(
                &e,
                "inertia_coupling = 0 for fully converter-decoupled plants (wind_type4, solar_pv)",
            ));
        }
        if !(r.synthetic_inertia_gain >= 0.0) {
            out.push(Violation::new(&e, "synthetic_inertia_gain >= 0"));
        }
        if !in_unit(r.forced_outage_rate) {
            out.push(Violation::new(&e, "0 <= forced_outage_rate <= 1"));
        }
        if let Some(states) = &r.output_states {
            if states.is_empty() {
                out.push(Violation::new(&e, "output_states non-empty"));
            }
            if states
                .iter()
                .any(|s| !in_unit(s.fraction) || !(s.probability >= 0.0))
            {
                out.push(Violation::new(&e, "output_states fraction and probability in [0,1]"));
            }
            let total: f64 = states.iter().map(|s| s.probability).sum();
            if (total - 1.0).abs() > PROB_TOL {
                out.push(Violation::new(&e, "output_states probabilities sum to 1"));
            }
        }
    }

    for p in &case.profiles {
        let e = format!("profile {}", p.bus);
        bus_ref(e.clone(), &p.bus, &mut out);
        check_profile(p, &e, &mut out);
    }

    if !case.allow_zero_inertia && !(case.aggregate_inertia() > 0.0) {
        out.push(Violation::new(
            "case",
            "at least one conventional machine (aggregate inertia > 0)",
        ));
    }
    if !case.buses.is_empty() && !is_connected(case) {
        let comps = bus_components(case);
        let root = comps[0];
        let stranded: Vec<&str> = case
            .buses
            .iter()
            .zip(&comps)
            .filter(|(_, c)| **c != root)
            .map(|(b, _)| b.id.as_str())
            .collect();
        out.push(Violation::new(
            "case",
            format!("network is disconnected (buses {} unreachable)", stranded.join(", ")),
        ));
    }
    out
}

fn check_profile(p: &LoadProfile, e: &str, out: &mut Vec<Violation>) {
    if p.daily_peaks.len() != LoadProfile::DAYS {
        out.push(Violation::new(
            e,
            format!("daily_peaks length = 365 (found {})", p.daily_peaks.len()),
        ));
    }
    if p.daily_peaks.iter().any(|v| !(*v >= 0.0)) {
        out.push(Violation::new(e, "daily_peaks >= 0"));
    }
    if let Some(h) = &p.hourly {
        if h.len() != LoadProfile::HOURS {
            out.push(Violation::new(
                e,
                format!("hourly length = 8760 (found {})", h.len()),
            ));
            return;
        }
        if h.iter().any(|v| !(*v >= 0.0)) {
            out.push(Violation::new(e, "hourly >= 0"));
        }
        if p.daily_peaks.len() == LoadProfile::DAYS {
            for (d, day) in h.chunks(24).enumerate() {
                let peak = day.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if peak != p.daily_peaks[d] {
                    out.push(Violation::new(
                        e,
                        format!("daily_peaks[{d}] equals the max of that day's hourly values"),
                    ));
                    break;
                }
            }
        }
    }
}
