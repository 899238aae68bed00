use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contingency::{apply_contingency, check_elements, Contingency, ContingencyKind, PostContingency};
use super::severity::{severity_index, SeverityScore, SeverityWeights};
use super::SecurityError;
use crate::grid_model::{set_penetration, validate, GridCase};
use crate::report::write_csv;
use crate::steady_state::{
    check_limits, loadability_margin, solve_ac, solve_dc, LimitReport, LoadDirection,
    LoadabilityOptions, PowerFlowOptions, ThermalViolation,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SecurityOptions {
    pub weights: SeverityWeights,
    /// Number of DC-screened contingencies re-solved with full AC power flow and loadability.
    pub top_k: usize,
}

impl Default for SecurityOptions {
    fn default() -> Self {
        Self {
            weights: SeverityWeights::default(),
            top_k: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreenStage {
    Dc,
    Ac,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedContingency {
    /// 1-based
    pub rank: usize,
    pub contingency_id: String,
    pub kind: ContingencyKind,
    pub score: SeverityScore,
    /// Model that produced the score.
    pub screen: ScreenStage,
    /// Set for contingencies that could not be solved (islanding, insufficient headroom,
    /// non-convergence).
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub penetration: f64,
    pub ranked: Vec<RankedContingency>,
    pub worst: Option<String>,
    /// Every finite score is zero.
    pub secure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub weights: SeverityWeights,
    pub top_k: usize,
    pub levels: Vec<LevelReport>,
}

impl SecurityReport {
    /// Contingencies with a non-zero score, summed over levels.
    pub fn flagged(&self) -> usize {
        self.levels
            .iter()
            .flat_map(|l| &l.ranked)
            .filter(|r| r.score.total > 0.0)
            .count()
    }
}

struct Scored {
    score: SeverityScore,
    failure: Option<String>,
}

fn failed(weights: &SeverityWeights, reason: String) -> Scored {
    Scored {
        score: SeverityScore::diverged(weights),
        failure: Some(reason),
    }
}

fn dc_screen(case: &GridCase, c: &Contingency, weights: &SeverityWeights) -> Scored {
    let post = match apply_contingency(case, c) {
        Ok(PostContingency::Feasible(p)) => p,
        Ok(PostContingency::Infeasible(why)) => return failed(weights, why.to_string()),
        Err(e) => return failed(weights, e.to_string()),
    };
    let sol = match solve_dc(&post) {
        Ok(s) => s,
        Err(e) => return failed(weights, e.to_string()),
    };
    let thermal_violations = post
        .branches
        .iter()
        .zip(&sol.branches)
        .map(|(br, f)| (br, f.p_from.abs() / br.thermal_rating))
        .filter(|(_, l)| *l > 1.0)
        .map(|(br, loading)| ThermalViolation {
            branch: br.id.clone(),
            loading,
        })
        .collect();
    let limits = LimitReport {
        thermal_violations,
        voltage_violations: Vec::new(),
        worst_loading: 0.0,
        worst_voltage_dev: 0.0,
    };
    Scored {
        score: severity_index(&limits, None, weights),
        failure: None,
    }
}

fn ac_screen(case: &GridCase, c: &Contingency, weights: &SeverityWeights) -> Scored {
    let post = match apply_contingency(case, c) {
        Ok(PostContingency::Feasible(p)) => p,
        Ok(PostContingency::Infeasible(why)) => return failed(weights, why.to_string()),
        Err(e) => return failed(weights, e.to_string()),
    };
    let limits = match solve_ac(&post, &PowerFlowOptions::default(), None)
        .and_then(|sol| check_limits(&post, &sol))
    {
        Ok(l) => l,
        Err(e) => return failed(weights, e.to_string()),
    };
    let margin = match loadability_margin(&post, &LoadDirection::uniform(), &LoadabilityOptions::default()) {
        Ok(m) => m.margin,
        Err(e) => return failed(weights, e.to_string()),
    };
    Scored {
        score: severity_index(&limits, Some(margin), weights),
        failure: None,
    }
}

/// Descending total; diverged before finite at equal totals; then contingency id.
fn order(a: (&SeverityScore, &str), b: (&SeverityScore, &str)) -> Ordering {
    b.0.total
        .total_cmp(&a.0.total)
        .then(b.0.diverged.cmp(&a.0.diverged))
        .then(a.1.cmp(b.1))
}

fn rank_level(
    case: &GridCase,
    penetration: f64,
    contingencies: &[Contingency],
    opts: &SecurityOptions,
) -> LevelReport {
    let w = &opts.weights;
    let dc: Vec<Scored> = contingencies.par_iter().map(|c| dc_screen(case, c, w)).collect();
    let mut idx: Vec<usize> = (0..contingencies.len()).collect();
    idx.sort_by(|&a, &b| order((&dc[a].score, &contingencies[a].id), (&dc[b].score, &contingencies[b].id)));

    let top: Vec<usize> = idx.iter().copied().take(opts.top_k).collect();
    let ac: Vec<(usize, Scored)> = top
        .par_iter()
        .filter(|&&i| dc[i].failure.is_none())
        .map(|&i| (i, ac_screen(case, &contingencies[i], w)))
        .collect();

    let mut entries: Vec<(usize, Scored, ScreenStage)> = dc
        .into_iter()
        .enumerate()
        .map(|(i, s)| (i, s, ScreenStage::Dc))
        .collect();
    for (i, s) in ac {
        entries[i] = (i, s, ScreenStage::Ac);
    }
    entries.sort_by(|a, b| {
        order(
            (&a.1.score, &contingencies[a.0].id),
            (&b.1.score, &contingencies[b.0].id),
        )
    });
    let ranked: Vec<RankedContingency> = entries
        .into_iter()
        .enumerate()
        .map(|(r, (i, s, screen))| RankedContingency {
            rank: r + 1,
            contingency_id: contingencies[i].id.clone(),
            kind: contingencies[i].kind,
            score: s.score,
            screen,
            failure: s.failure,
        })
        .collect();
    let secure = ranked
        .iter()
        .filter(|r| !r.score.diverged)
        .all(|r| r.score.total == 0.0);
    LevelReport {
        penetration,
        worst: ranked.first().map(|r| r.contingency_id.clone()),
        ranked,
        secure,
    }
}

/// Screens every contingency with DC power flow at each renewable output level, then
/// re-scores the `top_k` worst with AC power flow, limit checks and loadability margin.
pub fn rank_contingencies(
    case: &GridCase,
    contingencies: &[Contingency],
    levels: &[f64],
    opts: &SecurityOptions,
) -> Result<SecurityReport, SecurityError> {
    let violations = validate(case);
    if !violations.is_empty() {
        return Err(SecurityError::InvalidCase(violations));
    }
    for c in contingencies {
        check_elements(case, c)?;
    }
    let mut out = Vec::with_capacity(levels.len());
    for &p in levels {
        let at = set_penetration(case, p).map_err(|e| SecurityError::InvalidLevel(e.to_string()))?;
        out.push(rank_level(&at, p, contingencies, opts));
    }
    Ok(SecurityReport {
        weights: opts.weights,
        top_k: opts.top_k,
        levels: out,
    })
}

#[derive(Serialize)]
struct RankRow<'a> {
    penetration: f64,
    rank: usize,
    contingency_id: &'a str,
    kind: &'static str,
    total: f64,
    voltage_term: f64,
    thermal_term: f64,
    margin_term: f64,
    diverged: bool,
}

pub fn ranking_csv(report: &SecurityReport) -> String {
    write_csv(report.levels.iter().flat_map(|l| {
        l.ranked.iter().map(move |r| RankRow {
            penetration: l.penetration,
            rank: r.rank,
            contingency_id: &r.contingency_id,
            kind: r.kind.label(),
            total: r.score.total,
            voltage_term: r.score.voltage_term,
            thermal_term: r.score.thermal_term,
            margin_term: r.score.margin_term,
            diverged: r.score.diverged,
        })
    }))
}

pub fn ranking_json(report: &SecurityReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}
