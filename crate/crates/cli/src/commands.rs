use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::Result;
use etas_core::coded::{
    elastic_linear_regression, encode_matrix, parse_matrix, parse_vector, plain_gradient_descent, relative_error,
    CodedError, RegressionConfig, StragglerPolicy,
};
use etas_core::configurations::{
    configuration_allocation, family_zero_waste_range, fano_plane, projective_plane, truncated_plane_q2,
    truncated_plane_q2_minus_1, zero_waste_range, zwr_task_count, Configuration, ZwrFamily,
};
use etas_core::cyclic::{
    best_shift, cyclic_tas, detect_shift, optimal_shift_join, optimal_shift_leave, shift_waste_profile,
    shift_waste_profile_leave, shifted_cyclic_tas, write_profile_tsv,
};
use etas_core::engine::{
    compare_strategies, probe_leave_depth_until, run_trace, ElasticEngine, ElasticTrace, EngineError, Strategy,
    TraceInitial,
};
use etas_core::random::random_tas_seeded;
use etas_core::verify::{verify_coded, verify_formulas, verify_hall, verify_zwr, VerifyReport};
use etas_core::zero_waste::{zero_waste_leave, HallWitness};
use etas_core::{ElasticEvent, MachineId, TaskAllocation};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::output::{
    allocation_human, allocation_tabular, compact_ranges, destination, read_file, usage, write_file, Report, Status,
};
use crate::{CodedDemoArgs, GenerateArgs, Kind, Scope, ShiftProfileArgs, SimulateArgs, TransitionArgs, VerifyArgs, ZwrArgs};

/// `fano`, `l3:<n>`, `l4:<n>`, `projective:<q>`, `q2:<q>`, `q2m1:<q>`.
pub fn parse_family(s: &str) -> Result<ZwrFamily> {
    if s == "fano" {
        return Ok(ZwrFamily::L3 { n_max: 7 });
    }
    let bad = || usage(format!("unknown family '{s}'; expected fano, l3:<n>, l4:<n>, projective:<q>, q2:<q> or q2m1:<q>"));
    let (name, value) = s.split_once(':').ok_or_else(bad)?;
    let v: usize = value.parse().map_err(|_| bad())?;
    Ok(match name {
        "l3" => ZwrFamily::L3 { n_max: v },
        "l4" => ZwrFamily::L4 { n_max: v },
        "projective" => ZwrFamily::Projective { q: v },
        "q2" => ZwrFamily::QSquared { q: v },
        "q2m1" => ZwrFamily::QSquaredMinusOne { q: v },
        _ => return Err(bad()),
    })
}

fn parse_event(s: &str) -> Result<ElasticEvent> {
    let bad = || usage(format!("bad event '{s}'; expected leave:<id>, join or join:<id>"));
    let id = |v: &str| v.parse::<u32>().map_err(|_| bad());
    match s.split_once(':') {
        Some(("leave", v)) => Ok(ElasticEvent::leave(id(v)?)),
        Some(("join", v)) => Ok(ElasticEvent::join_as(id(v)?)),
        None if s == "join" => Ok(ElasticEvent::join()),
        _ => Err(bad()),
    }
}

fn written(path: Option<&Path>) -> String {
    path.map(|p| format!("wrote {}\n", p.display())).unwrap_or_default()
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

pub fn generate(a: &GenerateArgs, dir: Option<&Path>) -> Result<Report> {
    let kind = format!("{:?}", a.kind).to_lowercase();
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| usage(format!("`generate {kind}` needs --{flag}")));
    let config = match a.kind {
        Kind::Cyclic | Kind::Shifted | Kind::Random => {
            let (n, l, f) = (need(a.n, "n")?, need(a.l, "l")?, need(a.f, "f")?);
            let alloc = match a.kind {
                Kind::Cyclic => cyclic_tas(n, l, f).map_err(usage)?,
                Kind::Shifted => shifted_cyclic_tas(n, l, f, a.shift).map_err(usage)?,
                _ => random_tas_seeded(n, l, f, a.seed).map_err(usage)?,
            };
            return emit_allocation(&alloc, a.out.as_deref(), dir, &format!("{kind}-{n}-{l}-{f}.json"));
        }
        Kind::Fano => fano_plane(),
        Kind::Projective => projective_plane(need(a.q, "q")?).map_err(usage)?,
        Kind::Q2 => truncated_plane_q2(need(a.q, "q")?).map_err(usage)?,
        Kind::Q2m1 => truncated_plane_q2_minus_1(need(a.q, "q")?).map_err(usage)?,
    };
    if a.configuration {
        return emit_configuration(&config, a.out.as_deref(), dir, &format!("{kind}-configuration.json"));
    }
    let f = a.f.unwrap_or(config.n_points);
    let alloc = configuration_allocation(&config, f).map_err(usage)?;
    emit_allocation(&alloc, a.out.as_deref(), dir, &format!("{kind}-{f}.json"))
}

fn emit_allocation(alloc: &TaskAllocation, out: Option<&Path>, dir: Option<&Path>, name: &str) -> Result<Report> {
    let path = destination(out, dir, name);
    if let Some(p) = &path {
        write_file(p, &alloc.to_json())?;
    }
    let validation = alloc.validate();
    let summary = if validation.is_ok() { "valid".to_string() } else { validation.to_string() };
    Ok(Report {
        human: format!("{}{}{summary}\n", written(path.as_deref()), allocation_human(alloc)),
        tabular: allocation_tabular(alloc),
        structured: serde_json::to_value(alloc)?,
        status: if validation.is_ok() { Status::Ok } else { Status::Failed },
    })
}

fn emit_configuration(config: &Configuration, out: Option<&Path>, dir: Option<&Path>, name: &str) -> Result<Report> {
    let path = destination(out, dir, name);
    if let Some(p) = &path {
        write_file(p, &serde_json::to_string_pretty(config)?)?;
    }
    let mut tabular = String::from("line\tpoints\n");
    for (i, line) in config.lines.iter().enumerate() {
        let pts: Vec<String> = line.iter().map(|p| p.to_string()).collect();
        tabular.push_str(&format!("{}\t{}\n", i + 1, pts.join(",")));
    }
    Ok(Report {
        human: format!("{}{config}", written(path.as_deref())),
        tabular,
        structured: serde_json::to_value(config)?,
        status: Status::Ok,
    })
}

// ---------------------------------------------------------------------------
// transition
// ---------------------------------------------------------------------------

fn read_allocation(path: &Path) -> Result<TaskAllocation> {
    let alloc = TaskAllocation::from_json(&read_file(path)?)
        .map_err(|e| usage(format!("{}: not an allocation document: {e}", path.display())))?;
    let report = alloc.validate();
    if !report.is_ok() {
        return Err(usage(format!("{}: {report}", path.display())));
    }
    Ok(alloc)
}

/// Whether the shifted strategy can use a closed-form shift for `event`.
fn closed_form_shift_applies(alloc: &TaskAllocation, event: &ElasticEvent) -> bool {
    let Some(prev) = detect_shift(alloc) else {
        return false;
    };
    let (n, l, f) = (alloc.n_machines(), alloc.redundancy(), alloc.n_tasks());
    match *event {
        ElasticEvent::Leave { machine } => alloc
            .position(machine)
            .is_some_and(|p| optimal_shift_leave(n, l, f, prev, p).is_ok()),
        ElasticEvent::Join { machine } => {
            let label = machine.unwrap_or_else(|| (1..).map(MachineId).find(|m| !alloc.contains(*m)).unwrap());
            alloc.machines().last().is_some_and(|&top| label > top) && optimal_shift_join(n, l, f, prev).is_ok()
        }
    }
}

fn infeasible_report(leaver: MachineId, witness: &HallWitness) -> Report {
    Report {
        human: format!("no zero-waste leave of machine {leaver}: {witness}\n"),
        tabular: format!(
            "feasible\tfalse\nleaver\t{leaver}\nwitness_machines\t{}\nwitness_tasks\t{}\n",
            witness.machines.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(","),
            compact_ranges(witness.neighbors.iter().copied())
        ),
        structured: json!({ "feasible": false, "leaver": leaver, "witness": witness }),
        status: Status::Failed,
    }
}

pub fn transition(a: &TransitionArgs, dir: Option<&Path>) -> Result<Report> {
    let alloc = read_allocation(&a.tas)?;
    let event = parse_event(&a.event)?;
    let strategy: Strategy = a.strategy.into();
    if strategy == Strategy::ShiftedCyclic && !a.brute_force && !closed_form_shift_applies(&alloc, &event) {
        return Err(usage(
            "no closed-form shift applies to this allocation and event; pass --brute-force to search every shift",
        ));
    }
    let mut initial = TraceInitial::new(alloc.n_machines(), alloc.redundancy(), alloc.n_tasks());
    initial.seed = Some(alloc.clone());
    let mut engine = ElasticEngine::new(&initial, strategy).map_err(usage)?;
    let (record, outcome) = match engine.apply(&event) {
        Ok(r) => r,
        Err(EngineError::Infeasible { leaver, witness, .. }) => return Ok(infeasible_report(leaver, &witness)),
        Err(e) => return Err(usage(e)),
    };
    let matching = match (strategy, event) {
        (Strategy::ZeroWaste | Strategy::ZeroWasteWithFallback, ElasticEvent::Leave { machine }) if record.feasible => {
            zero_waste_leave(&alloc, machine).ok().map(|z| z.matching)
        }
        _ => None,
    };
    let path = destination(a.out.as_deref(), dir, "transition.json");
    if let Some(p) = &path {
        write_file(p, &outcome.new_alloc.to_json())?;
    }
    let changes = outcome.changes();

    let mut human = written(path.as_deref());
    human.push_str(&format!(
        "{} of machine {} under {strategy}: {} -> {} machines",
        record.kind, record.machine, record.n_before, record.n_after
    ));
    if let Some(s) = record.shift {
        human.push_str(&format!(", shift {s}"));
    }
    human.push_str(&format!(
        "\nnecessary load change {}, total waste {}\n",
        record.delta, record.waste
    ));
    if record.degraded {
        human.push_str("no zero-waste transition existed; minimum-waste fallback used\n");
    }
    human.push_str(&format!("{:>9} {:>10} {:>9} {:>6}\n", "machine", "abandoned", "acquired", "waste"));
    let mut tabular = String::from("machine\tabandoned\tacquired\twaste\n");
    for (id, c) in &changes {
        human.push_str(&format!("{id:>9} {:>10} {:>9} {:>6}\n", c.abandoned, c.acquired, c.waste));
        tabular.push_str(&format!("{id}\t{}\t{}\t{}\n", c.abandoned, c.acquired, c.waste));
    }
    tabular.push_str(&format!("total\t\t\t{}\n", record.waste));
    if let Some(m) = &matching {
        let pairs: Vec<String> = m.assignment.iter().map(|(t, id)| format!("{t}->{id}")).collect();
        human.push_str(&format!("matching (task->machine): {}\n", pairs.join(" ")));
    }
    human.push_str(&allocation_human(&outcome.new_alloc));

    Ok(Report {
        human,
        tabular,
        structured: json!({
            "event": event,
            "strategy": strategy,
            "record": record,
            "machines": changes,
            "matching": matching,
            "allocation": outcome.new_alloc,
        }),
        status: if record.feasible { Status::Ok } else { Status::Failed },
    })
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub fn simulate(a: &SimulateArgs, dir: Option<&Path>) -> Result<Report> {
    let trace = ElasticTrace::from_json(&read_file(&a.trace)?)
        .map_err(|e| usage(format!("{}: malformed trace: {e}", a.trace.display())))?;
    if a.compare {
        let cmp = compare_strategies(&trace);
        let path = destination(a.out.as_deref(), dir, "comparison.json");
        if let Some(p) = &path {
            write_file(p, &serde_json::to_string_pretty(&cmp)?)?;
        }
        return Ok(Report {
            human: format!("{}{cmp}", written(path.as_deref())),
            tabular: cmp.to_tsv(),
            structured: serde_json::to_value(&cmp)?,
            status: Status::Ok,
        });
    }
    let strategy = a
        .strategy
        .map(Strategy::from)
        .or(trace.initial.strategy)
        .unwrap_or(Strategy::ZeroWaste);
    let report = match run_trace(&trace, strategy) {
        Ok(r) => r,
        Err(EngineError::Infeasible { index, leaver, witness }) => {
            let mut r = infeasible_report(leaver, &witness);
            r.human = format!("event {index}: {}", r.human);
            return Ok(r);
        }
        Err(e) => return Err(usage(format!("{}: {e}", a.trace.display()))),
    };
    let path = destination(a.out.as_deref(), dir, "simulation.json");
    if let Some(p) = &path {
        write_file(p, &serde_json::to_string_pretty(&report)?)?;
    }
    let infeasible = report.records.iter().filter(|r| !r.feasible).count();
    let mut human = written(path.as_deref());
    human.push_str(&format!(
        "{strategy}: {} events, cumulative waste {}, {infeasible} without a zero-waste option\n",
        report.records.len(),
        report.cumulative_waste
    ));
    if !report.records.is_empty() {
        human.push_str(&format!(
            "{:>5} {:>6} {:>8} {:>9} {:>6} {:>6}  feasible\n",
            "event", "kind", "machine", "machines", "waste", "delta"
        ));
    }
    for r in &report.records {
        human.push_str(&format!(
            "{:>5} {:>6} {:>8} {:>9} {:>6} {:>6}  {}\n",
            r.index,
            r.kind,
            r.machine.to_string(),
            format!("{}->{}", r.n_before, r.n_after),
            r.waste,
            r.delta,
            if r.degraded { "no (fallback)" } else if r.feasible { "yes" } else { "no" }
        ));
    }
    human.push_str(&format!(
        "final pool: {} machines\n",
        report.final_alloc.n_machines()
    ));
    Ok(Report {
        human,
        tabular: report.to_tsv(),
        structured: serde_json::to_value(&report)?,
        status: if infeasible == 0 { Status::Ok } else { Status::Failed },
    })
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

pub fn verify(a: &VerifyArgs) -> Result<Report> {
    let family = parse_family(&a.family)?;
    if a.lmax < 2 {
        return Err(usage("--lmax must be at least 2"));
    }
    if a.hall_nmax < 3 || a.fmax == 0 {
        return Err(usage("--hall-nmax must be at least 3 and --fmax positive"));
    }
    if a.e >= 3 {
        return Err(usage("--e must be below the coded suite's redundancy of 3"));
    }
    let mut report = VerifyReport::default();
    let run = |scope: Scope| a.scope == Scope::All || a.scope == scope;
    if run(Scope::Formulas) {
        report.merge(verify_formulas(a.lmax, a.nmax));
    }
    if run(Scope::Hall) {
        report.merge(verify_hall(a.samples, a.hall_nmax, a.fmax, a.seed));
    }
    if run(Scope::Zwr) {
        report.merge(verify_zwr(family, a.f, a.max_nodes));
    }
    if run(Scope::Coded) {
        report.merge(verify_coded(a.e, a.seed));
    }
    let mut tabular = String::from("check\tpassed\tdetail\n");
    for c in &report.checks {
        tabular.push_str(&format!("{}\t{}\t{}\n", c.name, c.passed, c.detail));
    }
    Ok(Report {
        human: format!("seed {}\n{report}\n", a.seed),
        tabular,
        structured: json!({ "seed": a.seed, "passed": report.passed(), "report": report }),
        status: if report.passed() { Status::Ok } else { Status::Failed },
    })
}

// ---------------------------------------------------------------------------
// shift-profile
// ---------------------------------------------------------------------------

pub fn shift_profile(a: &ShiftProfileArgs, dir: Option<&Path>) -> Result<Report> {
    let (n, l, f, prev) = (a.n, a.l, a.f, a.prev);
    if f == 0 || prev >= f {
        return Err(usage("--prev must be below --f"));
    }
    let (profile, plan, what) = match a.leave {
        None => (
            shift_waste_profile(n, l, f, prev).map_err(usage)?,
            optimal_shift_join(n, l, f, prev).ok(),
            format!("join {n} -> {}", n + 1),
        ),
        Some(p) => (
            shift_waste_profile_leave(n, l, f, prev, p).map_err(usage)?,
            optimal_shift_leave(n, l, f, prev, p).ok(),
            format!("leave of position {p}, {n} -> {}", n - 1),
        ),
    };
    let mut tsv = Vec::new();
    write_profile_tsv(&profile, &mut tsv)?;
    let tsv = String::from_utf8(tsv)?;
    let path = destination(a.out.as_deref(), dir, "shift-profile.tsv");
    if let Some(p) = &path {
        write_file(p, &tsv)?;
    }
    let best = best_shift(&profile).expect("F > 0");
    let mut human = written(path.as_deref());
    human.push_str(&format!(
        "{what} (L={l}, F={f}) from shift {prev}: least waste {} at shift {}\n",
        best.waste, best.shift
    ));
    match plan {
        Some(p) => human.push_str(&format!(
            "closed-form shift {} predicts waste {}, measured {}\n",
            p.shift, p.predicted_waste, profile[p.shift].waste
        )),
        None => human.push_str("no closed-form shift for these parameters\n"),
    }
    human.push_str(&tsv);
    Ok(Report {
        human,
        tabular: tsv,
        structured: json!({ "profile": profile, "best": best, "closed_form": plan }),
        status: Status::Ok,
    })
}

// ---------------------------------------------------------------------------
// zwr
// ---------------------------------------------------------------------------

pub fn zwr(a: &ZwrArgs) -> Result<Report> {
    let (range, family) = match (&a.family, a.nmax, a.l) {
        (Some(s), _, _) => {
            let family = parse_family(s)?;
            (family_zero_waste_range(family).map_err(usage)?, Some(family))
        }
        (None, Some(n_max), Some(l)) => (zero_waste_range(n_max, l).map_err(usage)?, None),
        _ => return Err(usage("give --family or both --nmax and --l")),
    };
    let label = family.map_or(format!("({}, {})", range.n_max, range.redundancy), |f| f.to_string());
    let mut human = format!(
        "{label}: zero-waste range [{}, {}], R = {}, discriminant {}\n",
        range.n_min, range.n_max, range.removable, range.discriminant
    );
    let mut tabular = format!(
        "n_max\tredundancy\tn_min\tremovable\tdiscriminant\n{}\t{}\t{}\t{}\t{}\n",
        range.n_max, range.redundancy, range.n_min, range.removable, range.discriminant
    );
    let mut structured = json!({ "family": family, "range": range });
    if a.probe {
        let config = family
            .and_then(|f| f.configuration())
            .ok_or_else(|| usage("--probe needs a --family with a known construction"))?
            .map_err(usage)?;
        let floor = a
            .floor
            .unwrap_or(range.n_min.saturating_sub(2))
            .max(range.redundancy);
        let f = a.f.unwrap_or_else(|| zwr_task_count(floor, range.n_max));
        let root = configuration_allocation(&config, f).map_err(usage)?;
        let limit = Duration::try_from_secs_f64(a.time_limit)
            .map_err(|_| usage(format!("bad --time-limit {}", a.time_limit)))?;
        let probe = probe_leave_depth_until(&root, floor, a.max_states, Some(Instant::now() + limit));
        human.push_str(&format!("probe with F = {f} down to {floor} machines\n"));
        tabular.push_str("machines\treached\tfailed_leaves\n");
        for level in &probe.levels {
            human.push_str(&format!(
                "  {:>3} machines: {:>8} removal sequences, {:>8} leaves without zero waste\n",
                level.machines, level.reached, level.failed_leaves
            ));
            tabular.push_str(&format!("{}\t{}\t{}\n", level.machines, level.reached, level.failed_leaves));
        }
        if probe.truncated {
            human.push_str("stopped early by --max-states or --time-limit; counts are partial\n");
        }
        structured["probe"] = json!({ "n_tasks": f, "report": probe });
    }
    Ok(Report {
        human,
        tabular,
        structured,
        status: Status::Ok,
    })
}

// ---------------------------------------------------------------------------
// coded-demo
// ---------------------------------------------------------------------------

fn straggler_sets(n: usize, e: usize) -> Vec<BTreeSet<MachineId>> {
    (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize <= e)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).map(|i| MachineId(i as u32 + 1)).collect())
        .collect()
}

pub fn coded_demo(a: &CodedDemoArgs) -> Result<Report> {
    if a.e >= a.l {
        return Err(usage(format!("--e must be below --l ({})", a.l)));
    }
    if a.n > 16 {
        return Err(usage("--n above 16 is not supported by the demo"));
    }
    let alloc = cyclic_tas(a.n, a.l, a.f).map_err(usage)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let (matrix, x) = match (&a.matrix, &a.vector) {
        (Some(m), Some(v)) => (
            parse_matrix(&read_file(m)?).map_err(usage)?,
            parse_vector(&read_file(v)?).map_err(usage)?,
        ),
        _ => {
            if a.rows == 0 || a.cols == 0 {
                return Err(usage("--rows and --cols must be positive"));
            }
            (
                DMatrix::from_fn(a.rows, a.cols, |_, _| rng.gen_range(-1.0..1.0)),
                DVector::from_fn(a.cols, |_, _| rng.gen_range(-1.0..1.0)),
            )
        }
    };
    if x.len() != matrix.ncols() {
        return Err(usage(format!("matrix has {} columns, vector has {} entries", matrix.ncols(), x.len())));
    }
    let coded = encode_matrix(&matrix, a.f, a.l, a.e, a.n).map_err(usage)?;
    let direct = &matrix * &x;
    let sets = match &a.stragglers {
        Some(labels) => {
            if let Some(bad) = labels.iter().find(|&&m| m == 0 || m as usize > a.n) {
                return Err(usage(format!("straggler {bad} is not a machine label in 1..={}", a.n)));
            }
            vec![labels.iter().copied().map(MachineId).collect()]
        }
        None => straggler_sets(a.n, a.e),
    };

    let mut ok = true;
    let mut human = format!(
        "({}, {}, {}) cyclic pool, {}x{} matrix, straggler tolerance {}\n",
        a.n, a.l, a.f, matrix.nrows(), matrix.ncols(), a.e
    );
    let mut tabular = String::from("stragglers\trecovered\trelative_error\n");
    let mut rounds = Vec::new();
    for s in &sets {
        let names = s.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",");
        let shown = if names.is_empty() { "none".to_string() } else { names.clone() };
        match coded.multiply(&x, &alloc, s) {
            Ok(got) => {
                let err = relative_error(&got, &direct);
                ok &= err <= 1e-9;
                human.push_str(&format!("  stragglers {shown:<8} recovered, relative error {err:.2e}\n"));
                tabular.push_str(&format!("{names}\ttrue\t{err:e}\n"));
                rounds.push(json!({ "stragglers": s, "recovered": true, "relative_error": err }));
            }
            Err(e @ CodedError::Insufficient { .. }) => {
                ok = false;
                human.push_str(&format!("  stragglers {shown:<8} not recoverable: {e}\n"));
                tabular.push_str(&format!("{names}\tfalse\t\n"));
                rounds.push(json!({ "stragglers": s, "recovered": false, "error": e.to_string() }));
            }
            Err(e) => return Err(usage(e)),
        }
    }
    let mut structured = json!({ "rounds": rounds });

    if a.regression {
        let samples = matrix.nrows();
        let y = DVector::from_fn(samples, |_, _| rng.gen_range(-1.0..1.0));
        let lr = 1.0 / (matrix.transpose() * &matrix).norm().max(f64::MIN_POSITIVE);
        let mut initial = TraceInitial::new(a.n, a.l, a.f);
        initial.nmax = Some(a.n);
        let trace = ElasticTrace {
            initial,
            events: vec![ElasticEvent::leave(a.n as u32), ElasticEvent::join()],
        };
        let config = RegressionConfig {
            straggler_tolerance: a.e,
            steps: a.steps,
            learning_rate: lr,
            stragglers: if a.e > 0 {
                StragglerPolicy::RandomEachRound { seed: a.seed }
            } else {
                StragglerPolicy::None
            },
            strategy: Strategy::Cyclic,
        };
        let run = elastic_linear_regression(&matrix, &y, &trace, &config).map_err(usage)?;
        let plain = plain_gradient_descent(&matrix, &y, a.steps, lr);
        let drift = run
            .trajectory
            .iter()
            .zip(&plain)
            .map(|(c, p)| relative_error(c, p))
            .fold(0.0, f64::max);
        ok &= drift <= 1e-6;
        human.push_str(&format!(
            "regression: {} steps, {} pool events, {} coded rounds, largest deviation from plain descent {drift:.2e}\n",
            a.steps, run.events_applied, run.rounds
        ));
        tabular.push_str(&format!("regression_drift\t{}\t{drift:e}\n", drift <= 1e-6));
        structured["regression"] = json!({
            "steps": a.steps,
            "events": run.events_applied,
            "rounds": run.rounds,
            "max_relative_deviation": drift,
            "final_weights": run.final_weights().as_slice(),
        });
    }
    Ok(Report {
        human,
        tabular,
        structured,
        status: if ok { Status::Ok } else { Status::Failed },
    })
}
