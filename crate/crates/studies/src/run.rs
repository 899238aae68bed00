//! Study dispatch.

use std::path::PathBuf;

use gridplan_core::adequacy::{
    compute_elcc, penetration_sweep, sweep_csv, AdequacyResult, ElccCandidate, ElccOptions,
    ElccResult, SweepStudy, LOLE_CRITERION,
};
use gridplan_core::dynamics::{
    check_ride_through, frequency_metrics, init_equilibrium, metrics_json, renewable_monitors,
    simulate_from_equilibrium, trace_csv, FrequencyOptions, SimOptions,
};
use gridplan_core::grid_model::{load_case, set_penetration, GridCase};
use gridplan_core::report::write_csv;
use gridplan_core::security::{
    enumerate_n1, rank_contingencies, ranking_csv, ranking_json, SecurityOptions, SecurityReport,
};
use gridplan_core::small_signal::{
    intermittency_study, linearize, modes, study_json, IntermittencyConfig, IntermittencyReport,
    ModalAnalysis,
};
use gridplan_core::steady_state::{
    branch_csv, bus_csv, check_limits, limits_json, solution_json, solve_power_flow,
};
use serde::Serialize;

use crate::config::{
    AdequacyParams, DynamicsParams, PowerflowParams, SecurityParams, SmallSignalParams,
    StudyConfig, StudyParams,
};
use crate::output::{timestamp, ArtifactWriter, Manifest, TOOLKIT};
use crate::StudyError;

/// Result of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Human-readable findings; non-empty means the run is flagged.
    pub findings: Vec<String>,
    pub manifest: PathBuf,
}

impl RunOutcome {
    /// 0 when every check passed, 2 when something was flagged.
    pub fn exit_code(&self) -> u8 {
        if self.findings.is_empty() {
            0
        } else {
            2
        }
    }
}

fn at_level(case: &GridCase, level: Option<f64>) -> Result<GridCase, StudyError> {
    match level {
        Some(l) => set_penetration(case, l).map_err(|e| StudyError::Config(e.to_string())),
        None => Ok(case.clone()),
    }
}

fn exec<E: std::fmt::Display>(study: &str) -> impl Fn(E) -> StudyError + '_ {
    move |e| StudyError::Execution(format!("{study}: {e}"))
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

fn powerflow(
    case: &GridCase,
    p: &PowerflowParams,
    out: &mut ArtifactWriter,
    findings: &mut Vec<String>,
) -> Result<(), StudyError> {
    let case = at_level(case, p.penetration)?;
    let sol = solve_power_flow(&case, p.method).map_err(exec("powerflow"))?;
    let limits = check_limits(&case, &sol).map_err(exec("powerflow"))?;
    out.write("powerflow_bus.csv", &bus_csv(&sol))?;
    out.write("powerflow_branch.csv", &branch_csv(&case, &sol))?;
    out.write("powerflow_solution.json", &solution_json(&sol))?;
    out.write("powerflow_limits.json", &limits_json(&limits))?;
    for t in &limits.thermal_violations {
        findings.push(format!("powerflow: branch {} loaded at {:.3} of rating", t.branch, t.loading));
    }
    for v in &limits.voltage_violations {
        findings.push(format!("powerflow: bus {} voltage {:.4} pu outside band", v.bus, v.magnitude));
    }
    Ok(())
}

#[derive(Serialize)]
struct ElccEntry<'a> {
    plant: &'a str,
    result: ElccResult,
}

#[derive(Serialize)]
struct AdequacyReport<'a> {
    lole_criterion: f64,
    analytic: &'a [AdequacyResult],
    monte_carlo: &'a [AdequacyResult],
    elcc: Vec<ElccEntry<'a>>,
}

fn adequacy(
    case: &GridCase,
    p: &AdequacyParams,
    out: &mut ArtifactWriter,
    findings: &mut Vec<String>,
) -> Result<(), StudyError> {
    let analytic = penetration_sweep(case, &p.levels, SweepStudy::Analytic).map_err(exec("adequacy"))?;
    let mc = if p.monte_carlo {
        let study = SweepStudy::MonteCarlo {
            samples: p.samples,
            seed: p.seed,
        };
        penetration_sweep(case, &p.levels, study).map_err(exec("adequacy"))?
    } else {
        Vec::new()
    };
    let mut elcc = Vec::new();
    for id in &p.elcc_plants {
        let plant = case.renewable(id).expect("validated").clone();
        let mut base = case.clone();
        base.renewables.retain(|r| &r.id != id);
        let result = compute_elcc(&base, &ElccCandidate::Plant(plant), &ElccOptions::default())
            .map_err(exec("adequacy ELCC"))?;
        elcc.push(ElccEntry { plant: id, result });
    }
    let rows: Vec<AdequacyResult> = analytic.iter().chain(&mc).cloned().collect();
    out.write("adequacy_sweep.csv", &sweep_csv(&rows))?;
    out.write(
        "adequacy.json",
        &json(&AdequacyReport {
            lole_criterion: LOLE_CRITERION,
            analytic: &analytic,
            monte_carlo: &mc,
            elcc,
        }),
    )?;
    for r in analytic.iter().filter(|r| !r.meets_criterion()) {
        findings.push(format!(
            "adequacy: LOLE {:.4} days/yr exceeds {LOLE_CRITERION} at penetration {}",
            r.lole, r.penetration
        ));
    }
    Ok(())
}

fn security(
    case: &GridCase,
    p: &SecurityParams,
    out: &mut ArtifactWriter,
    findings: &mut Vec<String>,
) -> Result<SecurityReport, StudyError> {
    let list = p.contingencies.clone().unwrap_or_else(|| enumerate_n1(case));
    let opts = SecurityOptions {
        weights: p.weights,
        top_k: p.top_k,
    };
    let report = rank_contingencies(case, &list, &p.levels, &opts).map_err(exec("security"))?;
    out.write("security_ranking.csv", &ranking_csv(&report))?;
    out.write("security_ranking.json", &ranking_json(&report))?;
    for lvl in &report.levels {
        let hits = lvl.ranked.iter().filter(|r| r.score.total > 0.0).count();
        if hits > 0 {
            findings.push(format!(
                "security: {hits} contingencies with non-zero severity at penetration {} (worst {})",
                lvl.penetration,
                lvl.worst.as_deref().unwrap_or("-")
            ));
        }
    }
    Ok(report)
}

fn dynamics(
    case: &GridCase,
    p: &DynamicsParams,
    out: &mut ArtifactWriter,
    findings: &mut Vec<String>,
) -> Result<(), StudyError> {
    let case = at_level(case, p.penetration)?;
    let eq = init_equilibrium(&case).map_err(exec("dynamics"))?;
    let opts = SimOptions {
        horizon: p.horizon,
        step: p.step,
        governors: p.governors,
        agc: p.agc,
        synthetic_inertia: p.synthetic_inertia,
        record_every: p.record_every,
    };
    let trace = simulate_from_equilibrium(&eq, &p.events, &opts).map_err(exec("dynamics"))?;
    let freq = p
        .frequency
        .unwrap_or_else(|| FrequencyOptions::for_system(case.system_frequency));
    let metrics = frequency_metrics(&trace, &freq).map_err(exec("dynamics"))?;
    let envelope = p.envelope.clone().unwrap_or_default();
    let ride = check_ride_through(
        &trace,
        &envelope,
        &renewable_monitors(&case),
        trace.event_time.unwrap_or(0.0),
    )
    .map_err(exec("dynamics"))?;
    out.write("dynamics_trace.csv", &trace_csv(&trace))?;
    out.write("dynamics_metrics.json", &metrics_json(&trace, &metrics))?;
    out.write("ride_through.json", &json(&ride))?;
    if metrics.ufls_tripped {
        findings.push(format!(
            "dynamics: under-frequency load shedding triggered (nadir {:.3} Hz)",
            metrics.nadir
        ));
    }
    for r in ride.iter().filter(|r| !r.passed) {
        let t = r.first_violation.map(|v| v.time).unwrap_or(f64::NAN);
        findings.push(format!("dynamics: plant {} leaves the ride-through envelope at t = {t} s", r.plant));
    }
    Ok(())
}

#[derive(Serialize)]
struct LevelModes {
    penetration: f64,
    analysis: ModalAnalysis,
}

#[derive(Serialize)]
struct ModeRow {
    penetration: f64,
    frequency_hz: f64,
    damping_ratio: f64,
    sigma: f64,
    omega: f64,
    band: &'static str,
}

fn small_signal(
    case: &GridCase,
    levels: &[f64],
    damping_floor: f64,
    intermittency: Option<&IntermittencyConfig>,
    out: &mut ArtifactWriter,
    findings: &mut Vec<String>,
) -> Result<Option<IntermittencyReport>, StudyError> {
    let mut per_level = Vec::with_capacity(levels.len());
    for &l in levels {
        let at = at_level(case, Some(l))?;
        let eq = init_equilibrium(&at).map_err(exec("smallsignal"))?;
        let analysis = modes(&linearize(&eq)).map_err(exec("smallsignal"))?;
        if let Some(w) = analysis.worst_mode().filter(|w| w.damping_ratio < damping_floor) {
            findings.push(format!(
                "smallsignal: {:.3} Hz mode damped at {:.4} (< {damping_floor}) at penetration {l}",
                w.frequency_hz, w.damping_ratio
            ));
        }
        per_level.push(LevelModes {
            penetration: l,
            analysis,
        });
    }
    out.write(
        "modes.csv",
        &write_csv(per_level.iter().flat_map(|lm| {
            lm.analysis.modes.iter().map(move |m| ModeRow {
                penetration: lm.penetration,
                frequency_hz: m.frequency_hz,
                damping_ratio: m.damping_ratio,
                sigma: m.sigma,
                omega: m.omega,
                band: m.band.label(),
            })
        })),
    )?;
    out.write("modes.json", &json(&per_level))?;
    let Some(cfg) = intermittency else {
        return Ok(None);
    };
    let report = intermittency_study(case, cfg).map_err(exec("intermittency"))?;
    out.write("intermittency.json", &study_json(&report))?;
    let flagged = report.flagged();
    if flagged > 0 {
        findings.push(format!("intermittency: {flagged} event combinations flagged"));
    }
    Ok(Some(report))
}

fn execute(
    case: &GridCase,
    params: &StudyParams,
    out: &mut ArtifactWriter,
    findings: &mut Vec<String>,
) -> Result<(), StudyError> {
    match params {
        StudyParams::Powerflow(p) => powerflow(case, p, out, findings),
        StudyParams::Adequacy(p) => adequacy(case, p, out, findings),
        StudyParams::Security(p) => security(case, p, out, findings).map(|_| ()),
        StudyParams::Dynamics(p) => dynamics(case, p, out, findings),
        StudyParams::Smallsignal(p) => {
            small_signal(case, &p.levels, p.damping_floor, p.intermittency.as_ref(), out, findings).map(|_| ())
        }
        StudyParams::FullSweep(p) => {
            let ade = AdequacyParams {
                seed: p.seed,
                samples: p.samples,
                levels: p.levels.clone(),
                monte_carlo: true,
                elcc_plants: Vec::new(),
            };
            adequacy(case, &ade, out, findings)?;
            let sec = SecurityParams {
                levels: p.levels.clone(),
                weights: p.weights,
                top_k: p.top_k,
                contingencies: None,
            };
            security(case, &sec, out, findings)?;
            let ss = SmallSignalParams {
                levels: p.levels.clone(),
                damping_floor: p.damping_floor,
                intermittency: p.intermittency.clone(),
            };
            small_signal(case, &ss.levels, ss.damping_floor, ss.intermittency.as_ref(), out, findings)
                .map(|_| ())
        }
    }
}

/// Runs a study end to end: loads and checks the case, executes on a worker pool, writes
/// every report atomically and finishes with the manifest. Outputs written before an
/// execution error are removed.
pub fn run_study(cfg: &StudyConfig) -> Result<RunOutcome, StudyError> {
    let params = cfg.params()?;
    let case = load_case(&cfg.case).map_err(StudyError::Case)?;
    params.validate(&case)?;
    let workers = cfg.resolved_workers()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| StudyError::Execution(format!("worker pool: {e}")))?;

    let mut out = ArtifactWriter::new(&cfg.output_dir)?;
    let mut findings = Vec::new();
    if let Err(e) = pool.install(|| execute(&case, &params, &mut out, &mut findings)) {
        out.discard();
        return Err(e);
    }
    let exit_status = if findings.is_empty() { 0 } else { 2 };
    let manifest = Manifest {
        toolkit: TOOLKIT.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        study: cfg.kind.label().into(),
        config: cfg.clone(),
        created_unix: timestamp(),
        exit_status,
        findings: findings.clone(),
        artifacts: Vec::new(),
    };
    let manifest = out.finish(manifest)?;
    Ok(RunOutcome { findings, manifest })
}
