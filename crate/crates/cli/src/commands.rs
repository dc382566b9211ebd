use std::f64::consts::PI;

use serde::Serialize;
use serde_json::{json, Value as Json};
use shorphase::montecarlo::{decay_with_qubits_using, tau_offsets};
use shorphase::number_theory::{default_register_sizes, factors_from_order, multiplicative_order};
use shorphase::phase_model::SPLITTING_STREAM_VERSION;
use shorphase::sweep::{delay_sweep, distribution_sweep, SweepSettings, TauGrid, Value};
use shorphase::{
    analytic_n4, ensemble_pe, outcome_distribution, run_pipeline, AuxOutcome, Conditioning, DelaySchedule,
    EnsembleSweepSpec, FactoringInstance, QubitPhases, SplittingModel, SweepResult,
};

use crate::config::{Convention, ExperimentConfig, Format, Rule};
use crate::CliError;

pub const ORACLE_TOL: f64 = 1e-10;
pub const ANALYTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Order,
    Sizes,
    Distribution,
    SweepDelay,
    SweepQubits,
    SweepSigma,
    OracleCheck,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Order => "order",
            Kind::Sizes => "sizes",
            Kind::Distribution => "distribution",
            Kind::SweepDelay => "sweep-delay",
            Kind::SweepQubits => "sweep-qubits",
            Kind::SweepSigma => "sweep-sigma",
            Kind::OracleCheck => "oracle-check",
        }
    }
}

/// What a command produced. `failure` is set when the command ran to
/// completion but its check did not pass; the report is still written.
pub struct Report {
    pub body: String,
    pub sidecar: Option<String>,
    pub failure: Option<String>,
}

fn require<T: Copy>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing required parameter --{flag}")))
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

/// Fills in every default the command depends on, so the result can be
/// written out and replayed verbatim.
pub fn resolve(kind: Kind, mut c: ExperimentConfig) -> Result<ExperimentConfig, CliError> {
    c.format.get_or_insert(if kind == Kind::OracleCheck { Format::Json } else { Format::Csv });
    let n = require(c.n, "n")?;
    if kind == Kind::Sizes {
        return Ok(c);
    }
    require(c.a, "a")?;
    if kind == Kind::Order {
        return Ok(c);
    }
    if c.l.is_none() && kind != Kind::SweepQubits {
        c.l = Some(default_register_sizes(n).map_err(usage)?.0);
    }
    c.convention.get_or_insert(Convention::Hamming);
    c.correct_set.get_or_insert(Rule::Nearest);

    let grid_given = c.tau_start_pi.is_some() || c.tau_stop_pi.is_some() || c.tau_points.is_some();
    if grid_given && c.tau_delta_pi.is_some() {
        return Err(CliError::Usage(
            "give either --tau-delta-pi or a --tau-start-pi/--tau-stop-pi/--tau-points grid".into(),
        ));
    }
    let (start, stop, points) = match kind {
        Kind::SweepDelay => (0.0, 4.0, 401),
        _ => (0.0, 2.0, 5),
    };
    match kind {
        Kind::SweepDelay | Kind::OracleCheck if c.tau_delta_pi.is_none() => {
            c.tau_start_pi.get_or_insert(start);
            c.tau_stop_pi.get_or_insert(stop);
            c.tau_points.get_or_insert(points);
        }
        Kind::Distribution if !grid_given => {
            c.tau_delta_pi.get_or_insert_with(|| vec![0.0, 0.4, 1.0, 1.6, 2.0]);
        }
        Kind::SweepQubits => {
            if grid_given {
                return Err(CliError::Usage("sweep-qubits takes a single --tau-delta-pi".into()));
            }
            let v = c.tau_delta_pi.get_or_insert_with(|| vec![5.0 / 3.0]);
            if v.len() != 1 {
                return Err(CliError::Usage("sweep-qubits takes a single --tau-delta-pi".into()));
            }
            c.l_min.get_or_insert(4);
            c.l_max.get_or_insert(8);
        }
        _ => {}
    }

    if kind == Kind::SweepSigma {
        c.delta.get_or_insert(1.0);
        c.sigma_ratio.get_or_insert_with(|| vec![0.0001, 0.003, 0.007, 0.011]);
        c.matching_order.get_or_insert_with(|| vec![1, 2, 3, 4]);
        c.window_pi.get_or_insert(0.2);
        c.window_points.get_or_insert(81);
        c.samples.get_or_insert(1000);
        c.seed.get_or_insert(0);
        c.tau_delta_pi = None;
        c.tau_start_pi = None;
        c.tau_stop_pi = None;
        c.tau_points = None;
    } else {
        let model = match (c.deltas.take(), c.delta.take(), c.splitting.take()) {
            (Some(deltas), _, _) => SplittingModel::PerQubit { deltas },
            (None, Some(delta), _) => SplittingModel::Identical { delta },
            (None, None, Some(m)) => m,
            (None, None, None) => SplittingModel::Identical { delta: 1.0 },
        };
        c.splitting = Some(model);
        if kind == Kind::OracleCheck {
            c.aux_delta.get_or_insert(1.3);
        }
    }
    Ok(c)
}

fn instance(c: &ExperimentConfig, l: u32) -> Result<FactoringInstance, CliError> {
    FactoringInstance::new(require(c.n, "n")?, require(c.a, "a")?, l).map_err(usage)
}

fn conditioning(c: &ExperimentConfig) -> Conditioning {
    c.s.map_or(Conditioning::AveragedOverS, Conditioning::FixedResidue)
}

fn tau_deltas(c: &ExperimentConfig) -> Result<Vec<f64>, CliError> {
    let values = match &c.tau_delta_pi {
        Some(v) => v.iter().map(|x| x * PI).collect(),
        None => TauGrid {
            start_pi: c.tau_start_pi.unwrap_or(0.0),
            stop_pi: c.tau_stop_pi.unwrap_or(0.0),
            points: c.tau_points.unwrap_or(0),
        }
        .values()
        .map_err(usage)?,
    };
    if let Some(bad) = values.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(CliError::Usage(format!("tau*Delta must be finite and non-negative, got {bad}")));
    }
    Ok(values)
}

fn settings(c: &ExperimentConfig) -> SweepSettings {
    SweepSettings {
        splitting: c.splitting.clone().unwrap_or(SplittingModel::Identical { delta: 1.0 }),
        convention: c.convention.unwrap_or(Convention::Hamming).into(),
        conditioning: conditioning(c),
        rule: c.correct_set.unwrap_or(Rule::Nearest).into(),
    }
}

fn to_kebab<T: Serialize>(v: T) -> String {
    match serde_json::to_value(v) {
        Ok(Json::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

struct Metadata(Vec<(&'static str, String)>);

impl Metadata {
    fn new(kind: Kind, c: &ExperimentConfig, inst: Option<&FactoringInstance>) -> Self {
        let mut m = vec![("command", kind.name().to_string())];
        if let Some(i) = inst {
            m.push(("instance", format!("N{}-a{}-L{}-Laux{}-r{}", i.n(), i.a(), i.l(), i.l_aux(), i.r())));
        }
        m.push(("seed", c.seed.map_or_else(|| "none".to_string(), |s| s.to_string())));
        m.push(("version", env!("CARGO_PKG_VERSION").to_string()));
        if let Some(conv) = c.convention {
            m.push(("convention", to_kebab(conv)));
        }
        if let Some(rule) = c.correct_set {
            m.push(("correct-set", to_kebab(rule)));
        }
        if kind != Kind::Order && kind != Kind::Sizes {
            m.push(("conditioning", c.s.map_or_else(|| "averaged".to_string(), |s| format!("s={s}"))));
        }
        if kind == Kind::SweepSigma {
            m.push(("splitting-stream", SPLITTING_STREAM_VERSION.to_string()));
        }
        Metadata(m)
    }

    fn line(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
    }

    fn json(&self) -> Json {
        Json::Object(self.0.iter().map(|(k, v)| (k.to_string(), Json::String(v.clone()))).collect())
    }
}

fn render_table(table: &SweepResult, meta: &Metadata, format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            table.write_csv(&mut buf, Some(&meta.line())).map_err(|e| CliError::Compute(e.to_string()))?;
            String::from_utf8(buf).map_err(|e| CliError::Compute(e.to_string()))
        }
        Format::Json => pretty(&json!({
            "metadata": meta.json(),
            "columns": table.columns(),
            "rows": table.rows(),
        })),
    }
}

fn pretty(v: &Json) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| CliError::Compute(e.to_string()))
}

fn table_report(table: &SweepResult, meta: &Metadata, c: &ExperimentConfig) -> Result<Report, CliError> {
    Ok(Report { body: render_table(table, meta, c.format.unwrap_or(Format::Csv))?, sidecar: None, failure: None })
}

pub fn run(kind: Kind, c: &ExperimentConfig) -> Result<Report, CliError> {
    match kind {
        Kind::Order => order(c),
        Kind::Sizes => sizes(c),
        Kind::Distribution => {
            let inst = instance(c, require(c.l, "l")?)?;
            let table = distribution_sweep(Default::default(), &inst, &settings(c), &tau_deltas(c)?)?;
            table_report(&table, &Metadata::new(kind, c, Some(&inst)), c)
        }
        Kind::SweepDelay => {
            let inst = instance(c, require(c.l, "l")?)?;
            let table = delay_sweep(Default::default(), &inst, &settings(c), &tau_deltas(c)?)?;
            table_report(&table, &Metadata::new(kind, c, Some(&inst)), c)
        }
        Kind::SweepQubits => sweep_qubits(c),
        Kind::SweepSigma => sweep_sigma(c),
        Kind::OracleCheck => oracle_check(c),
    }
}

fn order(c: &ExperimentConfig) -> Result<Report, CliError> {
    let (n, a) = (require(c.n, "n")?, require(c.a, "a")?);
    if n < 2 || a < 2 || a >= n {
        return Err(CliError::Usage(format!("need 1 < a < N, got a={a}, N={n}")));
    }
    let r = multiplicative_order(a, n).map_err(usage)?;
    let mut table = SweepResult::new(["N", "a", "r"]);
    table.push_row(vec![Value::Int(n), Value::Int(a), Value::Int(r)]);
    let meta = Metadata::new(Kind::Order, c, None);
    let body = match c.format.unwrap_or(Format::Csv) {
        Format::Csv => render_table(&table, &meta, Format::Csv)?,
        Format::Json => pretty(&json!({
            "metadata": meta.json(),
            "n": n,
            "a": a,
            "r": r,
            "factors": factors_from_order(n, a, r).map(|(p, q)| vec![p, q]),
        }))?,
    };
    Ok(Report { body, sidecar: None, failure: None })
}

fn sizes(c: &ExperimentConfig) -> Result<Report, CliError> {
    let n = require(c.n, "n")?;
    let (l, l_aux) = default_register_sizes(n).map_err(usage)?;
    let mut table = SweepResult::new(["N", "L", "Laux", "q"]);
    table.push_row(vec![Value::Int(n), Value::Int(l.into()), Value::Int(l_aux.into()), Value::Int(1 << l)]);
    table_report(&table, &Metadata::new(Kind::Sizes, c, None), c)
}

fn sweep_qubits(c: &ExperimentConfig) -> Result<Report, CliError> {
    let (lo, hi) = (require(c.l_min, "l-min")?, require(c.l_max, "l-max")?);
    if lo == 0 || lo > hi {
        return Err(CliError::Usage(format!("invalid L range {lo}..={hi}")));
    }
    let td = tau_deltas(c)?[0];
    let ls: Vec<u32> = (lo..=hi).collect();
    let first = instance(c, lo)?;
    let decay = decay_with_qubits_using(
        first.n(),
        first.a(),
        td,
        &ls,
        c.convention.unwrap_or(Convention::Hamming).into(),
        conditioning(c),
    )?;
    let meta = Metadata::new(Kind::SweepQubits, c, Some(&first));
    let fits = pretty(&json!({
        "metadata": meta.json(),
        "tau_delta": td,
        "l_range": [lo, hi],
        "mean_fit": decay.mean_fit,
        "output_fits": decay.output_fits,
    }))?;
    let mut report = table_report(&decay.to_table(), &meta, c)?;
    report.sidecar = Some(fits);
    Ok(report)
}

fn sweep_sigma(c: &ExperimentConfig) -> Result<Report, CliError> {
    let inst = instance(c, require(c.l, "l")?)?;
    let spec = EnsembleSweepSpec {
        inst,
        mean_delta: require(c.delta, "delta")?,
        sigma_ratios: c.sigma_ratio.clone().unwrap_or_default(),
        matching_orders: c.matching_order.clone().unwrap_or_default(),
        tau_offsets: tau_offsets(require(c.window_pi, "window-pi")?, require(c.window_points, "window-points")?),
        samples: require(c.samples, "samples")?,
        seed: require(c.seed, "seed")?,
        conditioning: conditioning(c),
        rule: c.correct_set.unwrap_or(Rule::Nearest).into(),
        convention: c.convention.unwrap_or(Convention::Hamming).into(),
    };
    let sweep = ensemble_pe(&spec)?;
    table_report(&sweep.to_table(), &Metadata::new(Kind::SweepSigma, c, Some(&inst)), c)
}

#[derive(Serialize)]
struct OracleRow {
    s: u64,
    tau_delta: f64,
    max_deviation: f64,
}

#[derive(Serialize)]
struct AnalyticRow {
    s: u64,
    tau_delta: f64,
    closed_form_deviation: f64,
    statevector_deviation: f64,
}

fn oracle_check(c: &ExperimentConfig) -> Result<Report, CliError> {
    let inst = instance(c, require(c.l, "l")?)?;
    let model = c.splitting.clone().unwrap_or(SplittingModel::Identical { delta: 1.0 });
    let convention = c.convention.unwrap_or(Convention::Hamming).into();
    let work = QubitPhases::from_model(&model, inst.l(), 0, convention)?;
    let aux = QubitPhases::identical(require(c.aux_delta, "aux-delta")?, inst.l_aux()).with_convention(convention);
    let n4_delta = match model {
        SplittingModel::Identical { delta } if (inst.n(), inst.a(), inst.l()) == (4, 3, 2) => Some(delta),
        _ => None,
    };

    let mut rows = Vec::new();
    let mut analytic = Vec::new();
    for tau in tau_deltas(c)? {
        let (t1, t2) = (tau / 2.0, tau / 3.0);
        let schedule = DelaySchedule::new(t1, t2, (tau - t1 - t2).max(0.0), tau)?;
        for s in inst.supported_residues() {
            let closed = outcome_distribution(&inst, &work, schedule.total(), Conditioning::FixedResidue(s))?;
            let sv = run_pipeline(&inst, &work, &aux, &schedule, AuxOutcome::Forced(s))?;
            let dev = closed.probs().iter().zip(&sv.work_distribution).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            rows.push(OracleRow { s, tau_delta: schedule.total(), max_deviation: dev });
            if let Some(delta) = n4_delta {
                let p = analytic_n4(schedule.total(), delta);
                let dev_of = |probs: &[f64]| (probs[0] - p).abs().max((probs[2] - p).abs());
                analytic.push(AnalyticRow {
                    s,
                    tau_delta: schedule.total() * delta,
                    closed_form_deviation: dev_of(closed.probs()),
                    statevector_deviation: dev_of(&sv.work_distribution),
                });
            }
        }
    }
    let max_dev = rows.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    let max_analytic =
        analytic.iter().map(|r| r.closed_form_deviation.max(r.statevector_deviation)).fold(0.0, f64::max);
    let passed = max_dev < ORACLE_TOL && max_analytic < ANALYTIC_TOL;
    let meta = Metadata::new(Kind::OracleCheck, c, Some(&inst));
    let body = match c.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut report = json!({
                "metadata": meta.json(),
                "tolerance": ORACLE_TOL,
                "max_deviation": max_dev,
                "passed": passed,
                "checks": rows,
            });
            if n4_delta.is_some() {
                report["analytic_tolerance"] = json!(ANALYTIC_TOL);
                report["analytic_n4"] = json!(analytic);
            }
            pretty(&report)?
        }
        Format::Csv => {
            let mut table = SweepResult::new(["s", "tau_delta", "max_deviation"]);
            for r in &rows {
                table.push_row(vec![Value::Int(r.s), Value::Real(r.tau_delta), Value::Real(r.max_deviation)]);
            }
            render_table(&table, &meta, Format::Csv)?
        }
    };
    let failure =
        (!passed).then(|| format!("oracle deviation {max_dev:.3e} (analytic {max_analytic:.3e}) exceeds tolerance"));
    Ok(Report { body, sidecar: None, failure })
}
