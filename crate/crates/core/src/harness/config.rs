use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::agents::{AgentConfig, Variant};
use crate::pomdp::GenParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Estimation,
    Regret,
    AblationIota,
    AblationReuse,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "estimation" => Self::Estimation,
            "regret" => Self::Regret,
            "ablation_iota" => Self::AblationIota,
            "ablation_reuse" => Self::AblationReuse,
            other => return Err(Error::Config(format!("unknown experiment kind `{other}`"))),
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Estimation => "estimation",
            Self::Regret => "regret",
            Self::AblationIota => "ablation_iota",
            Self::AblationReuse => "ablation_reuse",
        }
    }
}

/// Where instances come from: a serialized model or the random generator.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSpec {
    File(PathBuf),
    Generated {
        states: usize,
        actions: usize,
        observations: usize,
        /// Instances use seeds `seed, seed + 1, ..., seed + count - 1`.
        seed: u64,
        count: usize,
        params: GenParams,
        /// Per-action `sigma_S(O_a)` targets; overrides `p_dom`.
        sigma: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMethod {
    StudentT,
    Normal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub instance: InstanceSpec,
    pub horizon: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub agents: Vec<AgentConfig>,
    pub m_star: usize,
    pub oracle_tol: f64,
    pub checkpoints: usize,
    pub ci: CiMethod,
    /// Per-action sample range of the estimation checkpoints.
    pub min_samples: u64,
    pub max_samples: u64,
    pub points_per_decade: usize,
    pub output_dir: PathBuf,
    pub svg: bool,
    /// The normalized `key=value` lines the config was built from.
    pub echo: Vec<String>,
}

const TOP_KEYS: &[&str] = &[
    "experiment",
    "horizon",
    "runs",
    "base_seed",
    "oracle.m_star",
    "oracle.tol",
    "metrics.checkpoints",
    "metrics.ci",
    "estimation.min_samples",
    "estimation.max_samples",
    "estimation.points_per_decade",
    "output.dir",
    "output.svg",
    "instance.path",
    "instance.S",
    "instance.A",
    "instance.O",
    "instance.seed",
    "instance.count",
    "instance.p_dom",
    "instance.alpha_min",
    "instance.epsilon",
    "instance.sigma",
];

const AGENT_COMMON: &[&str] = &[
    "variant",
    "t0",
    "delta",
    "c_scale",
    "grid",
    "tol",
    "max_iter",
    "candidates",
    "eps_proj",
];

fn variant_keys(tag: &str) -> &'static [&'static str] {
    match tag {
        "aoas_ucrl" => &["sample_reuse"],
        "oas_ucrl" => &["iota"],
        "seeu_lite" => &["tau1", "tau2"],
        "psrl_pf" => &["particles", "ess_threshold", "jitter"],
        "myopic" => &["iota", "rotation_period"],
        _ => &[],
    }
}

/// Splits a flat `key = value` document. `#` starts a comment line; later
/// duplicates override earlier ones.
pub fn parse_flat(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key=value, got `{line}`", i + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", i + 1)));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn num<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    map.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
        })
        .transpose()
}

fn num_or<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str, default: T) -> Result<T> {
    Ok(num(map, key)?.unwrap_or(default))
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut map = parse_flat(&text)?;
        for (k, v) in overrides {
            map.insert(k.clone(), v.clone());
        }
        Self::from_map(&map)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_map(&parse_flat(text)?)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        // reject unknown keys up front
        for key in map.keys() {
            if TOP_KEYS.contains(&key.as_str()) {
                continue;
            }
            let parts: Vec<&str> = key.splitn(3, '.').collect();
            let known = match parts.as_slice() {
                ["agents", idx, field] if idx.parse::<usize>().is_ok() => {
                    let tag = map
                        .get(&format!("agents.{idx}.variant"))
                        .map(String::as_str)
                        .unwrap_or("");
                    AGENT_COMMON.contains(field) || variant_keys(tag).contains(field)
                }
                _ => false,
            };
            if !known {
                return Err(Error::Config(format!("unknown or inapplicable key `{key}`")));
            }
        }

        let kind = ExperimentKind::parse(
            map.get("experiment")
                .ok_or_else(|| Error::Config("missing `experiment`".into()))?,
        )?;
        let instance = match map.get("instance.path") {
            Some(p) => {
                if map.keys().any(|k| k.starts_with("instance.") && k != "instance.path") {
                    return Err(Error::Config("`instance.path` excludes generator keys".into()));
                }
                InstanceSpec::File(PathBuf::from(p))
            }
            None => {
                let need =
                    |k: &str| -> Result<usize> { num(map, k)?.ok_or_else(|| Error::Config(format!("missing `{k}`"))) };
                let defaults = GenParams::default();
                let params = GenParams {
                    p_dom: num_or(map, "instance.p_dom", defaults.p_dom)?,
                    alpha_min: num_or(map, "instance.alpha_min", defaults.alpha_min)?,
                    epsilon_floor: num(map, "instance.epsilon")?,
                    ..defaults
                };
                let sigma = map
                    .get("instance.sigma")
                    .map(|v| {
                        v.split(',')
                            .map(|x| {
                                x.trim()
                                    .parse::<f64>()
                                    .map_err(|_| Error::Config(format!("bad sigma `{x}`")))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .transpose()?;
                let actions = need("instance.A")?;
                if let Some(s) = &sigma {
                    if s.len() != actions {
                        return Err(Error::Config(format!("{} sigma targets for A = {actions}", s.len())));
                    }
                }
                InstanceSpec::Generated {
                    states: need("instance.S")?,
                    actions,
                    observations: need("instance.O")?,
                    seed: num_or(map, "instance.seed", 0)?,
                    count: num_or(map, "instance.count", 1)?,
                    params,
                    sigma,
                }
            }
        };

        let mut indices: Vec<usize> = map
            .keys()
            .filter_map(|k| k.strip_prefix("agents."))
            .filter_map(|k| k.split('.').next()?.parse().ok())
            .collect();
        indices.sort_unstable();
        indices.dedup();
        let mut agents = Vec::with_capacity(indices.len());
        for idx in indices {
            agents.push(parse_agent(map, idx)?);
        }

        let cfg = Self {
            kind,
            instance,
            horizon: num_or(map, "horizon", 100_000)?,
            runs: num_or(map, "runs", 10)?,
            base_seed: num_or(map, "base_seed", 0)?,
            agents,
            m_star: num_or(map, "oracle.m_star", 20)?,
            oracle_tol: num_or(map, "oracle.tol", 1e-6)?,
            checkpoints: num_or(map, "metrics.checkpoints", 200)?,
            ci: match map.get("metrics.ci").map(String::as_str) {
                None | Some("student_t") => CiMethod::StudentT,
                Some("normal") => CiMethod::Normal,
                Some(other) => return Err(Error::Config(format!("unknown ci method `{other}`"))),
            },
            min_samples: num_or(map, "estimation.min_samples", 1_000)?,
            max_samples: num_or(map, "estimation.max_samples", 1_000_000)?,
            points_per_decade: num_or(map, "estimation.points_per_decade", 4)?,
            output_dir: PathBuf::from(map.get("output.dir").map(String::as_str).unwrap_or("out")),
            svg: num_or(map, "output.svg", false)?,
            echo: map
                .iter()
                .filter(|(k, _)| k.as_str() != "output.dir")
                .map(|(k, v)| format!("{k}={v}"))
                .collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be >= 1".into()));
        }
        if self.horizon < 2 {
            return Err(Error::Config("horizon must be >= 2".into()));
        }
        if self.agents.is_empty() {
            return Err(Error::Config("no agents configured".into()));
        }
        if self.m_star == 0 || self.checkpoints == 0 || self.points_per_decade == 0 {
            return Err(Error::Config(
                "oracle.m_star, metrics.checkpoints and points_per_decade must be >= 1".into(),
            ));
        }
        if self.min_samples == 0 || self.min_samples > self.max_samples {
            return Err(Error::Config(
                "need 1 <= estimation.min_samples <= estimation.max_samples".into(),
            ));
        }
        if let InstanceSpec::Generated { actions, count, .. } = &self.instance {
            if *count == 0 {
                return Err(Error::Config("instance.count must be >= 1".into()));
            }
            for a in &self.agents {
                a.validate(*actions)?;
            }
        }
        if self.kind == ExperimentKind::Estimation
            && !self
                .agents
                .iter()
                .all(|a| matches!(a.variant, Variant::Myopic { .. } | Variant::Uniform))
        {
            return Err(Error::Config(
                "estimation experiments take myopic or uniform data collectors".into(),
            ));
        }
        Ok(())
    }
}

fn parse_agent(map: &BTreeMap<String, String>, idx: usize) -> Result<AgentConfig> {
    let key = |f: &str| format!("agents.{idx}.{f}");
    let tag = map
        .get(&key("variant"))
        .ok_or_else(|| Error::Config(format!("agent {idx} has no variant")))?;
    let variant = match Variant::from_tag(tag)? {
        Variant::AoasUcrl { sample_reuse } => Variant::AoasUcrl {
            sample_reuse: num_or(map, &key("sample_reuse"), sample_reuse)?,
        },
        Variant::OasUcrl { iota } => Variant::OasUcrl {
            iota: num_or(map, &key("iota"), iota)?,
        },
        Variant::SeeuLite { tau1, tau2 } => Variant::SeeuLite {
            tau1: num_or(map, &key("tau1"), tau1)?,
            tau2: num_or(map, &key("tau2"), tau2)?,
        },
        Variant::PsrlPf {
            particles,
            ess_threshold,
            jitter_concentration,
        } => Variant::PsrlPf {
            particles: num_or(map, &key("particles"), particles)?,
            ess_threshold: num_or(map, &key("ess_threshold"), ess_threshold)?,
            jitter_concentration: num_or(map, &key("jitter"), jitter_concentration)?,
        },
        Variant::Uniform => Variant::Uniform,
        Variant::Myopic { iota, rotation_period } => Variant::Myopic {
            iota: num_or(map, &key("iota"), iota)?,
            rotation_period: num_or(map, &key("rotation_period"), rotation_period)?,
        },
    };
    let mut cfg = AgentConfig::new(variant);
    cfg.t0 = num_or(map, &key("t0"), cfg.t0)?;
    cfg.delta = num_or(map, &key("delta"), cfg.delta)?;
    cfg.c_scale = num_or(map, &key("c_scale"), cfg.c_scale)?;
    cfg.planner.resolution = num_or(map, &key("grid"), cfg.planner.resolution)?;
    cfg.planner.tol = num_or(map, &key("tol"), cfg.planner.tol)?;
    cfg.planner.max_iter = num_or(map, &key("max_iter"), cfg.planner.max_iter)?;
    cfg.planner.n_candidates = num_or(map, &key("candidates"), cfg.planner.n_candidates)?;
    cfg.planner.eps_proj = num(map, &key("eps_proj"))?;
    Ok(cfg)
}
