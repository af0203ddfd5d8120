use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use ttrr::critical::{
    closed_form_for, enumerate, real_count_experiment, rr_degree_count, CriticalSystem,
    EnumerateConfig, MonodromyConfig, StopReason, VarietySpec,
};
use ttrr::hamiltonian::build_second_quantized;
use ttrr::solvers::{als_run, default_rank_cap, dmrg_run, SolverConfig, SolverResult};
use ttrr::tt::{factorize, TensorTrain};
use ttrr::variety::{dim_crosscheck, segre_classify};
use ttrr::{DenseTensor, Hamiltonian, RankProfile, SecondQuantizedSpec, Shape};

use crate::config::{ExperimentConfig, ExperimentKind, HamSource};
use crate::error::CliError;
use crate::record::{ExperimentRecord, Status, TOOL_VERSION};
use crate::stats::stats_report;
use crate::tables::{reproduce_tables, TableOptions};

/// Validates, runs on a pool of `config.threads` workers when given, and
/// writes the record to `config.out`.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentRecord, CliError> {
    config.validate()?;
    let record = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Threads(e.to_string()))?
            .install(|| dispatch(config))?,
        None => dispatch(config)?,
    };
    if let Some(out) = &config.out {
        record.write(out)?;
    }
    Ok(record)
}

struct Outcome {
    status: Status,
    payload: Value,
    failures: Vec<Value>,
    summary: String,
}

impl Outcome {
    fn ok(payload: Value, summary: String) -> Self {
        Outcome {
            status: Status::Ok,
            payload,
            failures: Vec::new(),
            summary,
        }
    }
}

fn dispatch(config: &ExperimentConfig) -> Result<ExperimentRecord, CliError> {
    let start = Instant::now();
    let out = match config.kind {
        ExperimentKind::Classify => classify(config)?,
        ExperimentKind::Factorize => factorize_cmd(config)?,
        ExperimentKind::Decompress => decompress_cmd(config)?,
        ExperimentKind::Als | ExperimentKind::Dmrg => sweep(config)?,
        ExperimentKind::Stats => stats(config)?,
        ExperimentKind::Rrdeg => rrdeg(config)?,
        ExperimentKind::Enumerate => enumerate_cmd(config)?,
        ExperimentKind::Realcount => realcount(config)?,
        ExperimentKind::Tables => tables(config)?,
    };
    let mut timings = BTreeMap::new();
    timings.insert("total".to_string(), start.elapsed().as_secs_f64());
    Ok(ExperimentRecord {
        config: config.clone(),
        version: TOOL_VERSION.to_string(),
        status: out.status,
        timings,
        payload: out.payload,
        failures: out.failures,
        summary: out.summary,
    })
}

fn profile(config: &ExperimentConfig) -> Result<(Shape, RankProfile), CliError> {
    let k = Shape::new(config.k()?.to_vec()).map_err(|e| CliError::config("k", e.to_string()))?;
    let r =
        RankProfile::new(config.r()?.to_vec()).map_err(|e| CliError::config("r", e.to_string()))?;
    r.check_against(&k)
        .map_err(|e| CliError::config("r", e.to_string()))?;
    Ok((k, r))
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn input(config: &ExperimentConfig) -> Result<Value, CliError> {
    let path = config
        .input
        .as_ref()
        .ok_or_else(|| CliError::config("input", "required"))?;
    read_json(path)
}

/// Hamiltonian of dimension `n` from the configured source.
pub fn load_hamiltonian(config: &ExperimentConfig, n: usize) -> Result<Hamiltonian, CliError> {
    let h = match &config.ham {
        HamSource::Random => Hamiltonian::random_symmetric(n, config.seed()),
        HamSource::File { path } => Hamiltonian::from_json(&read_json(path)?)?,
        HamSource::SecondQuantized { path } => {
            let spec: SecondQuantizedSpec = serde_json::from_value(read_json(path)?)?;
            build_second_quantized(&spec)?
        }
    };
    if h.dim() != n {
        return Err(CliError::config(
            "ham",
            format!("Hamiltonian has dimension {} but prod k = {n}", h.dim()),
        ));
    }
    Ok(h)
}

fn solver_config(config: &ExperimentConfig) -> SolverConfig {
    let mut cfg = SolverConfig::default().with_seed(config.seed());
    if let Some(s) = config.max_sweeps {
        cfg.max_sweeps = s;
    }
    cfg
}

fn budget(config: &ExperimentConfig) -> Option<Duration> {
    config.budget_secs.map(Duration::from_secs)
}

fn classify(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (k, r) = profile(config)?;
    let segre = segre_classify(&k, &r)?;
    let dims = dim_crosscheck(&k, &r, config.seed())?;
    let summary = format!(
        "segre: {} dim {:?} degree {:?}\ndims: tt {} jacobian {} agree {}\n",
        segre.is_segre,
        segre.dim,
        segre.degree.as_ref().map(|d| d.to_string()),
        dims.tt_dimension,
        dims.jacobian_rank,
        dims.agree
    );
    let status = if dims.agree {
        Status::Ok
    } else {
        Status::RowsFailed
    };
    Ok(Outcome {
        status,
        ..Outcome::ok(json!({ "segre": segre, "dimensions": dims }), summary)
    })
}

fn factorize_cmd(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let tensor = DenseTensor::<f64>::from_json(&input(config)?)?;
    let r =
        RankProfile::new(config.r()?.to_vec()).map_err(|e| CliError::config("r", e.to_string()))?;
    let g = factorize(&tensor, &r)?;
    let err = g.decompress().max_abs_diff(&tensor);
    let summary = format!(
        "factorized {:?} at ranks {:?}; max reconstruction error {err:.3e}\n",
        tensor.shape().dims(),
        r.inner()
    );
    Ok(Outcome::ok(g.to_json(), summary))
}

fn decompress_cmd(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let train = TensorTrain::<f64>::from_json(&input(config)?)?;
    let t = train.decompress();
    let summary = format!("decompressed tensor of shape {:?}\n", t.shape().dims());
    Ok(Outcome::ok(t.to_json(), summary))
}

fn sweep_payload(res: &SolverResult) -> Value {
    json!({
        "energy": res.energy,
        "converged": res.converged,
        "sweeps": res.sweeps,
        "stationarity": res.stationarity,
        "energies": res.energies,
        "ranks": res.train.ranks().inner(),
        "train": res.train.to_json(),
    })
}

fn sweep(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let k = Shape::new(config.k()?.to_vec()).map_err(|e| CliError::config("k", e.to_string()))?;
    let h = load_hamiltonian(config, k.size())?;
    let cfg = solver_config(config);
    let res = if config.kind == ExperimentKind::Als {
        let (_, r) = profile(config)?;
        als_run(&h, &k, &r, &cfg)?
    } else {
        let cap = match &config.r {
            Some(r) => {
                RankProfile::new(r.clone()).map_err(|e| CliError::config("r", e.to_string()))?
            }
            None => default_rank_cap(&k, &cfg),
        };
        dmrg_run(&h, &k, &cap, &cfg)?
    };
    let ev = h.eigenvalues();
    let summary = format!(
        "energy {:.10} (lambda_min {:.10}) converged {} after {} sweeps, stationarity {:.3e}\n",
        res.energy, ev[0], res.converged, res.sweeps, res.stationarity
    );
    let mut payload = sweep_payload(&res);
    payload["lambda_min"] = json!(ev[0]);
    Ok(Outcome::ok(payload, summary))
}

fn stats(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (k, r) = profile(config)?;
    let h = load_hamiltonian(config, k.size())?;
    let rep = stats_report(
        &h,
        &k,
        &r,
        config.trials,
        config.seed(),
        &solver_config(config),
        None,
    )?;
    let summary = rep.render();
    Ok(Outcome::ok(serde_json::to_value(&rep)?, summary))
}

fn monodromy_config(config: &ExperimentConfig) -> MonodromyConfig {
    MonodromyConfig {
        target: config.target,
        budget: budget(config),
        ..MonodromyConfig::default()
    }
}

fn rrdeg(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (k, r) = profile(config)?;
    let sys = CriticalSystem::new(&k, &r)?;
    let mut cfg = monodromy_config(config);
    if let Some(t) = config.target {
        // The target counts critical points; the search counts sphere solutions.
        cfg.target = Some(2 * t);
    }
    let (rep, _) = rr_degree_count(&sys, config.seed(), &cfg)?;
    let closed = closed_form_for(&k, &r)?;
    let closed_value = closed.as_ref().map(|f| f.rr_degree()).transpose()?;
    let status = if rep.stop == StopReason::BudgetExceeded {
        Status::BudgetExceeded
    } else {
        Status::Ok
    };
    let bound = if rep.complete { "" } else { " (lower bound)" };
    let summary = format!(
        "critical points: {}{bound}\nstop: {:?} after {} loops, {} path failures\nclosed form: {}\n",
        rep.count,
        rep.stop,
        rep.loops,
        rep.path_failures,
        closed_value.map_or("-".to_string(), |v| v.to_string())
    );
    let payload = json!({
        "report": rep,
        "closed_form": closed,
        "closed_form_value": closed_value.map(|v| v.to_string()),
    });
    Ok(Outcome {
        status,
        ..Outcome::ok(payload, summary)
    })
}

fn enumerate_cmd(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (k, r) = profile(config)?;
    let h = load_hamiltonian(config, k.size())?;
    let cfg = EnumerateConfig {
        monodromy: monodromy_config(config),
        seed: config.seed(),
        ..EnumerateConfig::default()
    };
    let e = enumerate(&h, &k, &r, &cfg)?;
    let mut summary = format!("critical points: {} ({} real)\n", e.count, e.real_count);
    for s in e.real_points() {
        summary += &format!("  energy {:>16.10} class {:?}\n", s.energy(), s.class);
    }
    let failures = e
        .failures
        .iter()
        .map(|(i, f)| json!({"path": i, "reason": f.to_string()}))
        .collect();
    let status = if e.stop == StopReason::BudgetExceeded {
        Status::BudgetExceeded
    } else {
        Status::Ok
    };
    Ok(Outcome {
        status,
        payload: e.to_json(),
        failures,
        summary,
    })
}

fn realcount(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let spec = match config.family.as_deref() {
        Some("rnc") => VarietySpec::Rnc {
            d: config.d.ok_or_else(|| CliError::config("d", "required"))?,
        },
        Some("p1xp1") => VarietySpec::P1xP1,
        Some("tt") => VarietySpec::Tt {
            k: config.k()?.to_vec(),
            r: config.r()?.to_vec(),
        },
        _ => {
            return Err(CliError::config(
                "family",
                "one of rnc, p1xp1, tt is required",
            ))
        }
    };
    let cfg = EnumerateConfig {
        monodromy: monodromy_config(config),
        seed: config.seed(),
        ..EnumerateConfig::default()
    };
    let rep = real_count_experiment(&spec, config.samples, config.seed(), &cfg)?;
    let mut summary = String::from("real critical points -> samples\n");
    for (n, c) in &rep.histogram {
        summary += &format!("{n:>6} {c:>8}\n");
    }
    if !rep.failures.is_empty() {
        summary += &format!("{} samples failed\n", rep.failures.len());
    }
    let failures = rep
        .failures
        .iter()
        .map(serde_json::to_value)
        .collect::<Result<_, _>>()?;
    let status = if rep.failures.is_empty() {
        Status::Ok
    } else {
        Status::RowsFailed
    };
    Ok(Outcome {
        status,
        payload: serde_json::to_value(&rep)?,
        failures,
        summary,
    })
}

fn tables(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut opts = TableOptions::new(config.scale, config.seed());
    if let Some(b) = budget(config) {
        opts.budget_per_row = b;
    }
    let rep = reproduce_tables(config.scale, &opts);
    if let Some(out) = &config.out {
        let path = out.with_extension("csv");
        let text = rep.to_csv().map_err(|e| CliError::Table(e.to_string()))?;
        std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
    }
    let failures = rep
        .rows
        .iter()
        .filter(|r| !r.passed)
        .map(serde_json::to_value)
        .collect::<Result<_, _>>()?;
    Ok(Outcome {
        status: rep.status(),
        payload: serde_json::to_value(&rep)?,
        failures,
        summary: rep.render(),
    })
}
