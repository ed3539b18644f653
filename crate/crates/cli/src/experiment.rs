//! Run kinds behind the [`Experiment`] trait, looked up by name.

use std::collections::BTreeMap;

use serde_json::{json, Value};
use zenoflux::arrival::{arrival_integral, arrival_series_with};
use zenoflux::measurement::{click_time_sampler, detection_cdf, ks_distance, ClickSample, Protocol, ProtocolConfig};
use zenoflux::propagator::{energy_decomposition, LeakGuard, DEFAULT_EPSILONS};
use zenoflux::zeno_lab::{gambler_curve, gamma_crosscheck, random_trials, roulette_curve, zeno_scan, ScanPropagator};
use zenoflux::{PropagatorConfig, PropagatorRegistry};

use crate::config::{ExperimentConfig, ProjectorKind, RunKind};
use crate::error::{CliError, Result};
use crate::output::{float, Table};
use crate::setup::Scenario;

/// What a run produced, before anything touches the disk.
#[derive(Debug, Default)]
pub struct Report {
    /// `(file stem, table)`; written as `<stem>.csv` and/or inside `<stem>.json`.
    pub tables: Vec<(String, Table)>,
    /// `(file stem, document)`; written as `<stem>.json`.
    pub documents: Vec<(String, Value)>,
    pub diagnostics: BTreeMap<String, Value>,
    /// Set when the results carry a numerical breakdown flag.
    pub breakdown: Option<String>,
}

pub struct RunContext<'a> {
    pub config: &'a ExperimentConfig,
    pub propagators: &'a PropagatorRegistry,
}

pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;

    fn run(&self, ctx: &RunContext) -> Result<Report>;
}

pub struct ExperimentRegistry {
    experiments: BTreeMap<&'static str, Box<dyn Experiment>>,
}

impl Default for ExperimentRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl ExperimentRegistry {
    pub fn empty() -> Self {
        Self {
            experiments: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(ProtocolRun));
        r.register(Box::new(ArrivalRun));
        r.register(Box::new(ZenoScanRun));
        r.register(Box::new(GamblerRun));
        r.register(Box::new(FiniteDimRun));
        r.register(Box::new(GammaCheckRun));
        r
    }

    pub fn register(&mut self, experiment: Box<dyn Experiment>) {
        self.experiments.insert(experiment.name(), experiment);
    }

    pub fn get(&self, kind: RunKind) -> Option<&dyn Experiment> {
        self.experiments.get(kind.name()).map(|e| e.as_ref())
    }
}

fn protocol_section(config: &ExperimentConfig) -> Result<crate::config::ProtocolSection> {
    config
        .protocol
        .ok_or_else(|| CliError::validation("protocol", format!("section required for run kind {}", config.run.kind)))
}

fn window_json(s: &Scenario, t: f64) -> Value {
    let w = s.validity_window(t);
    json!({"dt_min": float(w.dt_min), "dt_max": float(w.dt_max)})
}

struct ProtocolRun;

impl Experiment for ProtocolRun {
    fn name(&self) -> &'static str {
        "protocol"
    }

    fn run(&self, ctx: &RunContext) -> Result<Report> {
        let c = ctx.config;
        let p = protocol_section(c)?;
        let s = Scenario::build(c)?;
        let cfg = ProtocolConfig::with_max_step(
            s.projector(p.projector_kind)?,
            p.delta_t,
            p.k_max,
            &c.propagator.method,
            c.propagator.dt,
        );
        let protocol = Protocol::with_registry(ctx.propagators, &s.h, &cfg)?;
        let mut rec = protocol.start(&s.psi0)?;
        protocol.advance(&mut rec, p.k_max)?;

        let n = rec.survival.len();
        let rate: Vec<f64> = rec.conditional_click.iter().map(|q| q / p.delta_t).collect();
        let table = Table::new()
            .int("k", (0..n as u64).collect())
            .float("t", rec.times.clone())
            .float("P_bar", rec.survival.clone())
            .float("p_bar", rec.conditional_no_click.clone())
            .float("p", rec.conditional_click.clone())
            .float("w", rate);
        let mut report = Report {
            tables: vec![("protocol".into(), table)],
            ..Report::default()
        };

        if c.run.n_samples > 0 {
            let samples = click_time_sampler(&rec, c.run.n_samples, c.run.seed);
            let mut counts = vec![0u64; n];
            let mut undetected = 0u64;
            for smp in &samples {
                match smp {
                    ClickSample::Detected { step, .. } => counts[*step] += 1,
                    ClickSample::Undetected => undetected += 1,
                }
            }
            let cdf = detection_cdf(&rec);
            let exact: Vec<f64> = (0..n).map(|k| if k == 0 { 0.0 } else { cdf[k] - cdf[k - 1] }).collect();
            let total = samples.len() as f64;
            report.tables.push((
                "clicks".into(),
                Table::new()
                    .int("k", (0..n as u64).collect())
                    .float("t", rec.times.clone())
                    .float("P_k", exact)
                    .float("sampled", counts.iter().map(|&c| c as f64 / total).collect()),
            ));
            report.documents.push((
                "sampler".into(),
                json!({
                    "n_samples": c.run.n_samples,
                    "seed": c.run.seed,
                    "ks_distance": float(ks_distance(&samples, &rec)),
                    "undetected_fraction": float(undetected as f64 / total),
                }),
            ));
        }

        let d = &mut report.diagnostics;
        d.insert("final_survival".into(), float(*rec.survival.last().unwrap()));
        d.insert("cut_loss".into(), float(rec.cut_loss));
        d.insert("underflow_step".into(), rec.underflow.map_or(Value::Null, Value::from));
        d.insert(
            "breakdowns".into(),
            Value::Array(
                rec.breakdowns
                    .iter()
                    .map(|b| json!({"step": b.step, "p_bar": float(b.p_bar)}))
                    .collect(),
            ),
        );
        d.insert("validity_window".into(), window_json(&s, p.delta_t * p.k_max as f64));
        if !rec.breakdowns.is_empty() {
            let first = rec.breakdowns[0];
            report.breakdown = Some(format!(
                "{} no-click probabilities outside [0, 1], first p_bar = {} at step {}",
                rec.breakdowns.len(),
                first.p_bar,
                first.step
            ));
        }
        Ok(report)
    }
}

struct ArrivalRun;

impl Experiment for ArrivalRun {
    fn name(&self) -> &'static str {
        "arrival"
    }

    fn run(&self, ctx: &RunContext) -> Result<Report> {
        let c = ctx.config;
        let s = Scenario::build(c)?;
        let region = s.region()?;
        let cfg =
            PropagatorConfig::new(&c.propagator.method, c.propagator.dt).with_guard(LeakGuard::for_region(region));
        let series = arrival_series_with(
            ctx.propagators,
            &s.psi0,
            &s.h,
            region,
            c.run.t_max,
            c.run.sample_dt,
            &cfg,
        )?;
        let table = Table::new()
            .float("t", series.times.clone())
            .float("P_bar", series.region_prob.clone())
            .float("flux", series.flux.clone())
            .float("P_arr", series.arrival_density.clone())
            .float("P_dep", series.departure_density.clone())
            .float("w", series.hazard.clone());
        let mut report = Report {
            tables: vec![("arrival".into(), table)],
            ..Report::default()
        };
        let d = &mut report.diagnostics;
        d.insert(
            "max_continuity_residual".into(),
            float(series.max_continuity_residual()),
        );
        d.insert("final_survival".into(), float(*series.region_prob.last().unwrap()));
        let t_end = *series.times.last().unwrap();
        match arrival_integral(&series, 0.0, t_end) {
            Ok(total) => {
                d.insert("arrival_probability".into(), float(total));
            }
            Err(zenoflux::Error::NonMonotoneWindow { time, flux }) => {
                d.insert("arrival_probability".into(), Value::Null);
                d.insert(
                    "negative_flux".into(),
                    json!({"time": float(time), "flux": float(flux)}),
                );
            }
            Err(e) => return Err(e.into()),
        }
        Ok(report)
    }
}

struct ZenoScanRun;

impl Experiment for ZenoScanRun {
    fn name(&self) -> &'static str {
        "zeno_scan"
    }

    fn run(&self, ctx: &RunContext) -> Result<Report> {
        let c = ctx.config;
        let s = Scenario::build(c)?;
        let kind = c.protocol.map_or(ProjectorKind::Spatial, |p| p.projector_kind);
        let projector = s.projector(kind)?;
        let prop = ScanPropagator::new(&c.propagator.method, c.propagator.dt);
        let scan = zeno_scan(&s.psi0, &s.h, &projector, c.run.t_max, &c.run.delta_t_list, &prop)?;
        let plateau = scan.plateau.map_or(Value::Null, |p| {
            json!({
                "delta_t_max": float(scan.delta_t_values[p.start].max(scan.delta_t_values[p.end])),
                "delta_t_min": float(scan.delta_t_values[p.start].min(scan.delta_t_values[p.end])),
                "value": float(p.value),
                "spread": float(p.spread),
            })
        });
        let fit = scan.fitted_small_dt_exponent.map_or(Value::Null, |f| {
            json!({
                "exponent": float(f.exponent),
                "log_prefactor": float(f.log_prefactor),
                "rms": float(f.rms),
                "points": f.points,
            })
        });
        let doc = json!({
            "t_fixed": float(scan.t_fixed),
            "plateau": plateau.clone(),
            "exponent_fit": fit,
            "first_step_loss": scan.first_step_loss.iter().map(|&x| float(x)).collect::<Vec<_>>(),
            "validity_window": window_json(&s, scan.t_fixed),
        });
        let mut report = Report {
            tables: vec![(
                "zeno_scan".into(),
                Table::new()
                    .float("delta_t", scan.delta_t_values.clone())
                    .float("survival", scan.survival_at_t.clone()),
            )],
            documents: vec![("plateau".into(), doc)],
            ..Report::default()
        };
        report.diagnostics.insert("plateau".into(), plateau);
        Ok(report)
    }
}

struct GamblerRun;

impl Experiment for GamblerRun {
    fn name(&self) -> &'static str {
        "gambler"
    }

    fn run(&self, ctx: &RunContext) -> Result<Report> {
        let c = ctx.config;
        let p = protocol_section(c)?;
        let s = Scenario::build(c)?;
        let prop = ScanPropagator::new(&c.propagator.method, c.propagator.dt);
        let curve = match p.projector_kind {
            ProjectorKind::Spatial => gambler_curve(&s.psi0, &s.h, s.region()?, p.delta_t, c.run.t_max, &prop)?,
            ProjectorKind::RankOne => roulette_curve(&s.psi0, &s.h, p.delta_t, c.run.t_max, &prop)?,
            ProjectorKind::Identity => {
                return Err(CliError::validation(
                    "protocol.projector_kind",
                    "must be spatial or rank_one for gambler",
                ))
            }
        };
        let (a, b) = curve.longest_increase();
        let mut report = Report {
            tables: vec![(
                "gambler".into(),
                Table::new()
                    .float("t", curve.times.clone())
                    .float("rate", curve.rate.clone())
                    .float("survival", curve.survival.clone()),
            )],
            ..Report::default()
        };
        if !curve.times.is_empty() {
            report.diagnostics.insert(
                "longest_rate_increase".into(),
                json!({"t_start": float(curve.times[a]), "t_end": float(curve.times[b])}),
            );
        }
        Ok(report)
    }
}

struct FiniteDimRun;

impl Experiment for FiniteDimRun {
    fn name(&self) -> &'static str {
        "finite_dim"
    }

    fn run(&self, ctx: &RunContext) -> Result<Report> {
        let r = &ctx.config.run;
        let trials = random_trials(r.n_samples, (r.dim_min, r.dim_max), r.seed)?;
        let rows: Vec<Value> = trials
            .iter()
            .map(|t| {
                json!({
                    "dim": t.dim,
                    "commutator_norm": float(t.commutator_norm),
                    "magic_norm": float(t.magic_norm),
                })
            })
            .collect();
        let noncommuting: Vec<_> = trials.iter().filter(|t| t.commutator_norm > 1e-6).collect();
        let min_magic = noncommuting.iter().map(|t| t.magic_norm).fold(f64::INFINITY, f64::min);
        let mut report = Report {
            documents: vec![("finite_dim".into(), Value::Array(rows))],
            ..Report::default()
        };
        let d = &mut report.diagnostics;
        d.insert("trials".into(), Value::from(trials.len()));
        d.insert("noncommuting_trials".into(), Value::from(noncommuting.len()));
        d.insert("min_magic_norm".into(), float(min_magic));
        Ok(report)
    }
}

struct GammaCheckRun;

impl Experiment for GammaCheckRun {
    fn name(&self) -> &'static str {
        "gamma_check"
    }

    fn run(&self, ctx: &RunContext) -> Result<Report> {
        let c = ctx.config;
        let s = Scenario::build(c)?;
        let region = s.region()?;
        let d = energy_decomposition(&s.psi0, region, s.h.mass(), &DEFAULT_EPSILONS)?;
        let g = gamma_crosscheck(&s.psi0, region, &s.h, &c.propagator.method)?;
        let doc = json!({
            "gamma_from_b2": float(g.gamma_from_b2),
            "gamma_from_flux": float(g.gamma_from_flux),
            "gamma_from_protocol": float(g.gamma_from_protocol),
            "protocol_delta_t": float(g.protocol_delta_t),
            "alpha": float(g.alpha),
            "max_pairwise_deviation": float(g.max_pairwise_deviation()),
            "bulk_a": float(d.bulk_a),
            "boundary_b1": float(d.boundary_b1),
            "boundary_b2": float(d.boundary_b2),
            "e0": float(d.e0),
        });
        let mut report = Report {
            documents: vec![("gamma".into(), doc)],
            ..Report::default()
        };
        report
            .diagnostics
            .insert("max_pairwise_deviation".into(), float(g.max_pairwise_deviation()));
        Ok(report)
    }
}
