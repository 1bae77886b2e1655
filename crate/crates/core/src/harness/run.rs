use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, ExperimentKind, InstanceSpec};
use super::metrics::{compute_gain_oracle, compute_regret_series, log_checkpoints, sample_checkpoints, MetricSeries};
use crate::agents::{run_agent, EpisodeStats, RunLog};
use crate::docfmt::f17;
use crate::estimator::{build_operators, estimate_action, frobenius_distance, BlockDiagObservationOperator};
use crate::pomdp::{
    generate_instance, generate_instance_with_sigma, validate_assumptions, ModelDocument, PomdpModel, TupleCounts,
};
use crate::Result;

/// Regret results of one agent on one instance.
#[derive(Debug, Clone, Serialize)]
pub struct AgentSummary {
    pub label: String,
    pub regret: MetricSeries,
    /// `total_reward[run]` as summed from the run log.
    pub total_reward: Vec<f64>,
    pub episodes: Vec<usize>,
    pub pulls: Vec<Vec<u64>>,
    pub warnings: usize,
}

/// `(samples, frobenius_error)` pairs of one action in one run.
pub type ErrorCurve = Vec<(u64, f64)>;

/// Estimation results of one data collector on one instance.
#[derive(Debug, Clone, Serialize)]
pub struct EstimationSummary {
    pub label: String,
    /// `curves[run][action]`; the last point always uses every sample.
    pub curves: Vec<Vec<ErrorCurve>>,
    pub pulls: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceReport {
    pub seed: Option<u64>,
    pub dir: PathBuf,
    pub sha256: String,
    pub rho_star: Option<f64>,
    pub sigma_min: Vec<f64>,
    pub agents: Vec<AgentSummary>,
    pub estimation: Vec<EstimationSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub instances: Vec<InstanceReport>,
    /// Every file written, relative to the output directory, in write order.
    pub files: Vec<PathBuf>,
}

/// Instances named by the config, each with its generation seed.
pub fn load_instances(spec: &InstanceSpec) -> Result<Vec<(Option<u64>, PomdpModel)>> {
    match spec {
        InstanceSpec::File(path) => Ok(vec![(None, ModelDocument::load(path)?.to_model()?)]),
        InstanceSpec::Generated {
            states,
            actions,
            observations,
            seed,
            count,
            params,
            sigma,
        } => (0..*count as u64)
            .map(|i| {
                let s = seed + i;
                let model = match sigma {
                    Some(t) => generate_instance_with_sigma(*states, *observations, t, s, params)?,
                    None => generate_instance(*states, *actions, *observations, s, params)?,
                };
                Ok((Some(s), model))
            })
            .collect(),
    }
}

/// Collects output files and keeps the list the MANIFEST reports.
struct Writer {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn write(&mut self, rel: PathBuf, contents: &str) -> Result<()> {
        let path = self.root.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.files.push(rel);
        Ok(())
    }

    fn manifest(&self, status: &str) -> Result<()> {
        let mut s = format!("status={status}\n");
        for f in &self.files {
            let _ = writeln!(s, "{}", f.display());
        }
        fs::create_dir_all(&self.root)?;
        fs::write(self.root.join("MANIFEST"), s)?;
        Ok(())
    }
}

/// Runs every agent of `config` on every configured instance and writes the
/// CSVs. Runs go through rayon; results are merged in run order, so output
/// bytes do not depend on scheduling. On failure the files written so far
/// stay in place and `MANIFEST` says `status=incomplete`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut out = Writer {
        root: config.output_dir.clone(),
        files: Vec::new(),
    };
    out.manifest("running")?;
    match run_all(config, &mut out) {
        Ok(instances) => {
            out.manifest("complete")?;
            Ok(ExperimentReport {
                instances,
                files: out.files,
            })
        }
        Err(e) => {
            let _ = out.manifest(&format!("incomplete ({e})"));
            Err(e)
        }
    }
}

fn run_all(config: &ExperimentConfig, out: &mut Writer) -> Result<Vec<InstanceReport>> {
    config.validate()?;
    let mut reports = Vec::new();
    for (seed, model) in load_instances(&config.instance)? {
        for a in &config.agents {
            a.validate(model.num_actions())?;
        }
        let dir = PathBuf::from(seed.map_or("instance_loaded".to_string(), |s| format!("instance_{s}")));
        let doc = ModelDocument::from_model(&model, seed);
        let text = doc.to_text()?;
        let sha256 = hex(&Sha256::digest(text.as_bytes()));
        out.write(dir.join("model.json"), &text)?;

        let mut report = InstanceReport {
            seed,
            dir: dir.clone(),
            sha256,
            rho_star: None,
            sigma_min: validate_assumptions(&model).per_action_sigma_min,
            agents: Vec::new(),
            estimation: Vec::new(),
        };
        match config.kind {
            ExperimentKind::Estimation => {
                out.write(dir.join("provenance.txt"), &provenance(config, &report))?;
                run_estimation(config, &model, &dir, out, &mut report)?;
            }
            _ => {
                report.rho_star = Some(compute_gain_oracle(&model, config.m_star, config.oracle_tol)?);
                out.write(dir.join("provenance.txt"), &provenance(config, &report))?;
                run_regret(config, &model, &dir, out, &mut report)?;
            }
        }
        reports.push(report);
    }
    Ok(reports)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn provenance(config: &ExperimentConfig, report: &InstanceReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "library={} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "experiment={}", config.kind.as_str());
    let _ = writeln!(
        s,
        "instance_seed={}",
        report.seed.map_or("none".into(), |x| x.to_string())
    );
    let _ = writeln!(s, "instance_sha256={}", report.sha256);
    if let Some(rho) = report.rho_star {
        let _ = writeln!(s, "rho_star={}", f17(rho));
    }
    let sig: Vec<String> = report.sigma_min.iter().map(|&x| f17(x)).collect();
    let _ = writeln!(s, "sigma_min={}", sig.join(","));
    s.push_str("# config\n");
    for line in &config.echo {
        let _ = writeln!(s, "{line}");
    }
    s
}

struct RegretRun {
    rows: Vec<(u64, f64, f64)>,
    total_reward: f64,
    episodes: Vec<EpisodeStats>,
    pulls: Vec<u64>,
    warnings: usize,
}

fn run_many<T: Send>(config: &ExperimentConfig, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..config.runs as u64)
        .into_par_iter()
        .map(|r| f(config.base_seed + r))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

fn run_regret(
    config: &ExperimentConfig,
    model: &PomdpModel,
    dir: &Path,
    out: &mut Writer,
    report: &mut InstanceReport,
) -> Result<()> {
    let rho = report.rho_star.expect("oracle gain computed");
    let checkpoints = log_checkpoints(config.horizon as u64, config.checkpoints);
    let na = model.num_actions();
    let mut summary = String::from("agent,run,seed,total_reward,final_regret,episodes\n");
    let mut episodes_csv = String::from("agent,run,k,start,length,planned_gain,stop_action\n");

    for agent in &config.agents {
        let label = agent.label();
        let runs = run_many(config, |seed| {
            let log = run_agent(model, config.horizon, agent, seed)?;
            let rewards: Vec<f64> = log.rewards().collect();
            Ok(RegretRun {
                rows: compute_regret_series(&rewards, rho, &checkpoints)?,
                total_reward: log.total_reward(),
                pulls: log.pulls(na),
                warnings: log.warnings.len(),
                episodes: log.episodes,
            })
        })?;

        let mut csv = String::from("checkpoint,agent,run,cum_reward,regret\n");
        for (i, &c) in checkpoints.iter().enumerate() {
            for (r, run) in runs.iter().enumerate() {
                let (_, cum, reg) = run.rows[i];
                let _ = writeln!(csv, "{c},{label},{r},{},{}", f17(cum), f17(reg));
            }
        }
        out.write(dir.join(format!("regret_{label}.csv")), &csv)?;

        for (r, run) in runs.iter().enumerate() {
            let final_regret = run.rows.last().map_or(0.0, |x| x.2);
            let _ = writeln!(
                summary,
                "{label},{r},{},{},{},{}",
                config.base_seed + r as u64,
                f17(run.total_reward),
                f17(final_regret),
                run.episodes.len()
            );
            for e in &run.episodes {
                let _ = writeln!(
                    episodes_csv,
                    "{label},{r},{},{},{},{},{}",
                    e.k,
                    e.start,
                    e.length,
                    e.planned_gain.map_or(String::new(), f17),
                    e.stop_action.map_or(String::new(), |a| a.to_string())
                );
            }
        }

        let values = runs.iter().map(|r| r.rows.iter().map(|x| x.2).collect()).collect();
        report.agents.push(AgentSummary {
            label,
            regret: MetricSeries::from_runs(checkpoints.clone(), values, config.ci),
            total_reward: runs.iter().map(|r| r.total_reward).collect(),
            episodes: runs.iter().map(|r| r.episodes.len()).collect(),
            pulls: runs.iter().map(|r| r.pulls.clone()).collect(),
            warnings: runs.iter().map(|r| r.warnings).sum(),
        });
    }
    out.write(dir.join("summary.csv"), &summary)?;
    out.write(dir.join("episodes.csv"), &episodes_csv)?;

    let mut ci = String::from("checkpoint,agent,mean_regret,halfwidth95\n");
    for a in &report.agents {
        for (i, c) in a.regret.checkpoints.iter().enumerate() {
            let _ = writeln!(
                ci,
                "{c},{},{},{}",
                a.label,
                f17(a.regret.mean[i]),
                f17(a.regret.halfwidth[i])
            );
        }
    }
    out.write(dir.join("regret_ci.csv"), &ci)?;
    if config.svg {
        out.write(dir.join("regret.svg"), &regret_svg(&report.agents))?;
    }
    Ok(())
}

/// Frobenius error of each action's estimate whenever its tuple count hits
/// a checkpoint, plus one final point on all tuples of the trajectory.
pub fn estimation_curves(
    log: &RunLog,
    model: &PomdpModel,
    operators: &[BlockDiagObservationOperator],
    checkpoints: &[u64],
) -> Vec<ErrorCurve> {
    let (na, no) = (model.num_actions(), model.num_observations());
    let mut counts = TupleCounts::new(na, no);
    let mut curves: Vec<ErrorCurve> = vec![Vec::new(); na];
    let mut next = vec![0usize; na];
    let error_at = |counts: &TupleCounts, a: usize| {
        let n = counts.n(a) as f64;
        let freq: Vec<f64> = counts.counts(a).iter().map(|&c| c as f64 / n).collect();
        frobenius_distance(
            &model.transition()[a],
            &estimate_action(&operators[a], &freq).transition,
        )
    };
    for w in log.steps.windows(2) {
        let a = w[0].action as usize;
        counts.push(crate::pomdp::Tuple {
            action: a,
            next_action: w[1].action as usize,
            obs: w[0].observation as usize,
            next_obs: w[1].observation as usize,
        });
        if next[a] < checkpoints.len() && counts.n(a) == checkpoints[next[a]] {
            curves[a].push((counts.n(a), error_at(&counts, a)));
            next[a] += 1;
        }
    }
    for (a, curve) in curves.iter_mut().enumerate() {
        let n = counts.n(a);
        if n > 0 && curve.last().map(|p| p.0) != Some(n) {
            curve.push((n, error_at(&counts, a)));
        }
    }
    curves
}

fn run_estimation(
    config: &ExperimentConfig,
    model: &PomdpModel,
    dir: &Path,
    out: &mut Writer,
    report: &mut InstanceReport,
) -> Result<()> {
    let operators = build_operators(model.observation())?;
    let checkpoints = sample_checkpoints(config.min_samples, config.max_samples, config.points_per_decade);
    let na = model.num_actions();
    for agent in &config.agents {
        let label = agent.label();
        let runs: Vec<(Vec<ErrorCurve>, Vec<u64>)> = run_many(config, |seed| {
            let log = run_agent(model, config.horizon, agent, seed)?;
            Ok((estimation_curves(&log, model, &operators, &checkpoints), log.pulls(na)))
        })?;
        for a in 0..na {
            let mut csv = String::from("samples,action,run,frobenius_error\n");
            for (r, (curves, _)) in runs.iter().enumerate() {
                for &(n, e) in &curves[a] {
                    let _ = writeln!(csv, "{n},{a},{r},{}", f17(e));
                }
            }
            let name = if config.agents.len() == 1 {
                format!("estimation_action{a}.csv")
            } else {
                format!("estimation_{label}_action{a}.csv")
            };
            out.write(dir.join(name), &csv)?;
        }
        let mut pulls = String::from("agent,run,action,pulls\n");
        for (r, (_, p)) in runs.iter().enumerate() {
            for (a, n) in p.iter().enumerate() {
                let _ = writeln!(pulls, "{label},{r},{a},{n}");
            }
        }
        out.write(dir.join(format!("pulls_{label}.csv")), &pulls)?;
        let (curves, pulls) = runs.into_iter().unzip();
        report.estimation.push(EstimationSummary { label, curves, pulls });
    }
    if config.svg {
        out.write(dir.join("estimation.svg"), &estimation_svg(&report.estimation[0]))?;
    }
    Ok(())
}

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
];

/// Line plot on a 640x400 canvas; `log_axes` switches both axes to log10.
fn svg_lines(title: &str, series: &[(String, Vec<(f64, f64)>)], log_axes: bool) -> String {
    let tf = |v: f64| if log_axes { v.max(1e-300).log10() } else { v };
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.1.iter().map(|&(x, y)| (tf(x), tf(y))))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let (w, h, m) = (640.0, 400.0, 50.0);
    let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n\
         <text x=\"{m}\" y=\"25\" font-size=\"14\">{title}</text>\n\
         <rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        w - 2.0 * m,
        h - 2.0 * m
    );
    for (i, (name, data)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = data
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(tf(x)), py(tf(y))))
            .collect();
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{color}\" points=\"{}\"/>\n<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{name}</text>",
            path.join(" "),
            m + 10.0,
            m + 15.0 + 14.0 * i as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

fn regret_svg(agents: &[AgentSummary]) -> String {
    let series: Vec<_> = agents
        .iter()
        .map(|a| {
            let pts = a
                .regret
                .checkpoints
                .iter()
                .zip(&a.regret.mean)
                .map(|(&c, &m)| (c as f64, m))
                .collect();
            (a.label.clone(), pts)
        })
        .collect();
    svg_lines("mean regret", &series, false)
}

fn estimation_svg(est: &EstimationSummary) -> String {
    let na = est.curves.first().map_or(0, |c| c.len());
    let series: Vec<_> = (0..na)
        .map(|a| {
            let pts = est.curves[0][a].iter().map(|&(n, e)| (n as f64, e)).collect();
            (format!("action {a} (run 0)"), pts)
        })
        .collect();
    svg_lines("Frobenius error vs samples", &series, true)
}
