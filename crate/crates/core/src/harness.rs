//! Monte Carlo trials, parameter sweeps and evaluation-count bookkeeping.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::{objective_group, objective_unified, select_pair_group, select_pair_unified, EffectiveChannels};
use crate::channel::{ChannelModel, ChannelRealization};
use crate::codebook::{build_codebook, ReflectionCandidate};
use crate::config::{LinkBudget, ScenarioConfig};
use crate::error::{Error, Result};
use crate::grouping::{adaptive_grouping, correlation_matrix, GroupPartition};
use crate::refine::{refine, RefineDesign, SubsurfaceState};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Unified,
    GroupBased,
    NoGrouping,
    RsUnified,
    RsGroupBased,
}

impl Scheme {
    pub const ALL: [Scheme; 5] =
        [Scheme::Unified, Scheme::GroupBased, Scheme::NoGrouping, Scheme::RsUnified, Scheme::RsGroupBased];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Unified => "unified",
            Scheme::GroupBased => "group-based",
            Scheme::NoGrouping => "no-grouping",
            Scheme::RsUnified => "rs-unified",
            Scheme::RsGroupBased => "rs-group-based",
        }
    }

    fn needs_grouping(self) -> bool {
        !matches!(self, Scheme::NoGrouping)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub scheme: Scheme,
    pub trial: u64,
    /// Design objective, bit/s.
    pub objective: f64,
    pub n_groups: usize,
    pub group_sizes: Vec<usize>,
    /// Candidate evaluations spent by this scheme's own search.
    pub evaluations: u64,
}

/// Everything about a scenario that does not change from trial to trial.
#[derive(Debug, Clone)]
pub struct Simulator<T> {
    cfg: ScenarioConfig,
    model: ChannelModel<T>,
    codebook: Vec<ReflectionCandidate<T>>,
    lb: LinkBudget<T>,
}

impl<T: Real> Simulator<T> {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            model: ChannelModel::new(cfg)?,
            codebook: build_codebook(cfg.n, cfg.l),
            lb: cfg.link_budget(),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn codebook(&self) -> &[ReflectionCandidate<T>] {
        &self.codebook
    }

    pub fn link_budget(&self) -> &LinkBudget<T> {
        &self.lb
    }

    pub fn channel_model(&self) -> &ChannelModel<T> {
        &self.model
    }

    pub fn channels(&self, trial: u64) -> Result<ChannelRealization<T>> {
        self.model.trial(trial)
    }

    /// Draws the trial's channels and runs every requested scheme on them.
    pub fn run_trial(&self, trial: u64, schemes: &[Scheme]) -> Result<Vec<TrialResult>> {
        let ch = self.channels(trial)?;
        self.run_on_channels(&ch, trial, schemes)
    }

    /// Runs the pipeline on a given channel draw.
    ///
    /// Stage one picks the unified pair over all users served together.
    /// Its reflection state defines the cascaded channels whose correlation
    /// drives the grouping; the designs are then evaluated (or re-searched)
    /// on the resulting partition.
    pub fn run_on_channels(&self, ch: &ChannelRealization<T>, trial: u64, schemes: &[Scheme]) -> Result<Vec<TrialResult>> {
        let cfg = &self.cfg;
        let t_p = T::lit(cfg.t_p);
        let l = self.codebook.len() as u64;
        let eff = EffectiveChannels::new(ch, &self.codebook)?;
        let everyone = GroupPartition::single(cfg.k);
        let stage1 = select_pair_unified(&eff, &self.codebook, &everyone, t_p, &self.lb)?;
        let stage1_idx = stage1.pair.candidate.expect("codebook search yields a candidate");

        let partition = if schemes.iter().any(|s| s.needs_grouping()) {
            let rho = correlation_matrix(eff.get(stage1_idx))?;
            Some(adaptive_grouping(&rho, T::lit(cfg.eta)))
        } else {
            None
        };

        let mut out = Vec::with_capacity(schemes.len());
        for &scheme in schemes {
            let result = |objective: T, p: &GroupPartition, evaluations: u64| TrialResult {
                scheme,
                trial,
                objective: objective.to_f64_lossy(),
                n_groups: p.num_groups(),
                group_sizes: p.sizes(),
                evaluations,
            };
            let r = match scheme {
                Scheme::NoGrouping => result(stage1.pair.objective, &everyone, stage1.evaluations),
                Scheme::Unified => {
                    let p = partition.as_ref().expect("grouping computed");
                    let h = eff.get(stage1_idx);
                    let j = objective_unified(p, h, &stage1.pair.w, t_p, &self.lb)?;
                    result(j, p, l)
                }
                Scheme::GroupBased => {
                    let p = partition.as_ref().expect("grouping computed");
                    let mut rates = Vec::with_capacity(p.num_groups());
                    let mut evals = 0;
                    for members in p.groups() {
                        let s = select_pair_group(&eff, &self.codebook, members, &self.lb)?;
                        evals += s.evaluations;
                        rates.push(s.pair.objective);
                    }
                    result(objective_group(p, &rates, t_p)?.value, p, evals)
                }
                Scheme::RsUnified => {
                    let p = partition.as_ref().expect("grouping computed");
                    let init = SubsurfaceState::from_theta(&stage1.pair.theta, cfg.subsurfaces, cfg.l)?;
                    let design = RefineDesign::Unified { partition: p, t_p };
                    let o = refine(&init, design, ch, &self.lb, cfg.rs_max_passes)?;
                    result(o.pair.objective, p, o.evaluations)
                }
                Scheme::RsGroupBased => {
                    let p = partition.as_ref().expect("grouping computed");
                    let mut rates = Vec::with_capacity(p.num_groups());
                    let mut evals = 0;
                    for members in p.groups() {
                        let start = select_pair_group(&eff, &self.codebook, members, &self.lb)?;
                        let init = SubsurfaceState::from_theta(&start.pair.theta, cfg.subsurfaces, cfg.l)?;
                        let design = RefineDesign::Group { members };
                        let o = refine(&init, design, ch, &self.lb, cfg.rs_max_passes)?;
                        evals += o.evaluations;
                        rates.push(o.pair.objective);
                    }
                    result(objective_group(p, &rates, t_p)?.value, p, evals)
                }
            };
            out.push(r);
        }
        Ok(out)
    }
}

/// Convenience wrapper building a double-precision simulator for one trial.
pub fn run_trial(cfg: &ScenarioConfig, trial: u64, schemes: &[Scheme]) -> Result<Vec<TrialResult>> {
    Simulator::<f64>::new(cfg)?.run_trial(trial, schemes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "eta")]
    Eta,
    #[serde(rename = "N")]
    N,
    #[serde(rename = "t_p")]
    Tp,
    /// No swept parameter: one grid point at the base configuration.
    #[serde(rename = "single")]
    Single,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Eta => "eta",
            SweepParam::N => "N",
            SweepParam::Tp => "t_p",
            SweepParam::Single => "single",
        }
    }

    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        match self {
            SweepParam::Eta => cfg.eta = value,
            SweepParam::Tp => cfg.t_p = value,
            SweepParam::N => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::config("n", format!("sweep value {value} is not a positive integer")));
                }
                cfg.n = value as usize;
            }
            SweepParam::Single => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub grid: Vec<f64>,
    pub trials: u64,
    pub schemes: Vec<Scheme>,
    pub base: ScenarioConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Contract("sweep grid is empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::Contract("sweep needs at least one trial".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Contract("sweep needs at least one scheme".into()));
        }
        self.base.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_param: String,
    pub value: f64,
    pub scheme: Scheme,
    #[serde(rename = "mean_J_bps")]
    pub mean_j_bps: f64,
    #[serde(rename = "stderr_J_bps")]
    pub stderr_j_bps: f64,
    #[serde(rename = "mean_NG")]
    pub mean_ng: f64,
    pub mean_evals: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn total_evaluations(&self, trials: u64) -> f64 {
        self.rows.iter().map(|r| r.mean_evals * trials as f64).sum()
    }

    pub fn get(&self, value: f64, scheme: Scheme) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.value == value && r.scheme == scheme)
    }

    pub fn series(&self, scheme: Scheme) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.scheme == scheme).collect()
    }
}

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aggregates per-trial results of one grid point, one row per scheme in
/// `schemes` order.
pub fn aggregate(param: SweepParam, value: f64, schemes: &[Scheme], trials: &[Vec<TrialResult>]) -> Vec<SweepRow> {
    schemes
        .iter()
        .map(|&scheme| {
            let picked: Vec<&TrialResult> = trials.iter().flatten().filter(|r| r.scheme == scheme).collect();
            let j: Vec<f64> = picked.iter().map(|r| r.objective).collect();
            let (mean_j_bps, stderr_j_bps) = mean_stderr(&j);
            let n = picked.len() as f64;
            SweepRow {
                sweep_param: param.name().to_string(),
                value,
                scheme,
                mean_j_bps,
                stderr_j_bps,
                mean_ng: picked.iter().map(|r| r.n_groups as f64).sum::<f64>() / n,
                mean_evals: picked.iter().map(|r| r.evaluations as f64).sum::<f64>() / n,
            }
        })
        .collect()
}

/// Runs every grid point. Trial `t` at every grid point uses the same RNG
/// stream, so grid points and schemes see common channel draws.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    run_sweep_with::<f64>(spec)
}

pub fn run_sweep_with<T: Real>(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &value in &spec.grid {
        let cfg = spec.param.apply(&spec.base, value)?;
        let sim = Simulator::<T>::new(&cfg)?;
        let trials: Vec<Vec<TrialResult>> =
            (0..spec.trials).into_par_iter().map(|t| sim.run_trial(t, &spec.schemes)).collect::<Result<_>>()?;
        let point = aggregate(spec.param, value, &spec.schemes, &trials);
        for r in &point {
            log::info!(
                "{}={} {:<14} mean_J={:.6e} stderr={:.3e} mean_NG={:.2} mean_evals={:.1}",
                r.sweep_param,
                r.value,
                r.scheme.name(),
                r.mean_j_bps,
                r.stderr_j_bps,
                r.mean_ng,
                r.mean_evals
            );
        }
        rows.extend(point);
    }
    Ok(SweepTable { rows })
}
