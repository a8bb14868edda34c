//! The two worked case studies: a simulated Phase II dose-finding trial
//! replicated under an informative and a flat prior, and the Challenger
//! O-ring field-joint data.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{credible_interval, ess, geweke_z, probability_draws};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gibbs::{run_chain, ChainConfig, PosteriorDraws};
use crate::model::{augment_with_prior, logit, sigmoid, Dataset};
use crate::prior::{BcjPrior, DesignPoint, PriorEntry};
use crate::rng::stream;

/// Master seed used when a scenario or command does not set one.
pub const DEFAULT_SEED: u64 = 20_240_229;

/// Geweke |z| bound counted as a pass.
pub const GEWEKE_PASS_BOUND: f64 = 2.0;

/// Which prior a fit used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    Bcj,
    Flat,
}

impl PriorKind {
    pub fn label(self) -> &'static str {
        match self {
            PriorKind::Bcj => "bcj",
            PriorKind::Flat => "flat",
        }
    }
}

/// Emax dose-response on the logit scale:
/// logit P(d) = logit(p_placebo) + [logit(p_max) − logit(p_placebo)]·d/(ed50 + d).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmaxTruth {
    pub p_placebo: f64,
    /// Response probability approached as d → ∞.
    pub p_max: f64,
    pub ed50: f64,
}

impl Default for EmaxTruth {
    fn default() -> Self {
        Self {
            p_placebo: 0.10,
            p_max: 0.35,
            ed50: 0.5,
        }
    }
}

impl EmaxTruth {
    pub fn validate(&self) -> Result<()> {
        let ok = |p: f64| p > 0.0 && p < 1.0;
        if !ok(self.p_placebo) || !ok(self.p_max) {
            return Err(Error::Config("Emax probabilities must lie in (0, 1)".into()));
        }
        if !(self.ed50 > 0.0) {
            return Err(Error::Config("Emax ED50 must be positive".into()));
        }
        Ok(())
    }

    pub fn e0(&self) -> f64 {
        logit(self.p_placebo)
    }

    pub fn span(&self) -> f64 {
        logit(self.p_max) - self.e0()
    }
}

pub fn emax_prob(truth: &EmaxTruth, dose: f64) -> f64 {
    sigmoid(truth.e0() + truth.span() * dose / (truth.ed50 + dose))
}

/// The two-point prior anchoring placebo at Beta(1, 9) and 4 mg at Beta(3, 7).
pub fn dose_finding_prior() -> BcjPrior {
    BcjPrior::new(vec![
        DesignPoint::new(vec![1.0, 0.0], 1.0, 9.0).expect("valid"),
        DesignPoint::new(vec![1.0, 4.0], 3.0, 7.0).expect("valid"),
    ])
    .expect("valid")
}

/// Scenario file contents; every field has the published default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub doses: Vec<f64>,
    pub per_arm: usize,
    pub truth: EmaxTruth,
    pub prior: Vec<PriorEntry>,
    pub chain: ChainConfig,
    pub replicates: usize,
    /// Clinical margin for decision probabilities.
    pub delta: f64,
    /// Doses compared against the reference dose; defaults to all others.
    pub decision_doses: Option<Vec<f64>>,
    pub reference_dose: f64,
    pub level: f64,
    /// Dose spacing of the plotted posterior curve.
    pub grid_step: f64,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            doses: vec![0.0, 0.5, 1.5, 2.5, 4.0],
            per_arm: 60,
            truth: EmaxTruth::default(),
            prior: dose_finding_prior().to_entries(),
            chain: ChainConfig::default().with_seed(DEFAULT_SEED),
            replicates: 30,
            delta: 0.05,
            decision_doses: None,
            reference_dose: 0.0,
            level: 0.95,
            grid_step: 0.1,
        }
    }
}

/// A validated dose-finding scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialScenario {
    pub doses: Vec<f64>,
    pub per_arm: usize,
    pub truth: EmaxTruth,
    pub prior: BcjPrior,
    pub chain: ChainConfig,
    pub replicates: usize,
    pub delta: f64,
    pub decision_doses: Vec<f64>,
    pub reference_dose: f64,
    pub level: f64,
    pub grid_step: f64,
}

impl Default for TrialScenario {
    fn default() -> Self {
        Self::from_file(ScenarioFile::default()).expect("default scenario is valid")
    }
}

impl TrialScenario {
    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        file.truth.validate()?;
        file.chain.validate()?;
        if file.per_arm == 0 {
            return Err(Error::Config("per_arm must be at least 1".into()));
        }
        if file.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if file.doses.is_empty() || file.doses.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::Config("doses must be non-empty, finite and non-negative".into()));
        }
        for (i, d) in file.doses.iter().enumerate() {
            if file.doses[..i].contains(d) {
                return Err(Error::Config(format!("dose {d} is listed twice")));
            }
        }
        if !file.doses.contains(&file.reference_dose) {
            return Err(Error::Config(format!(
                "reference dose {} is not one of the arm doses",
                file.reference_dose
            )));
        }
        let decision_doses = match file.decision_doses {
            Some(list) => {
                if let Some(bad) = list.iter().find(|d| !file.doses.contains(d)) {
                    return Err(Error::Config(format!("unknown dose {bad} in decision query")));
                }
                list
            }
            None => file
                .doses
                .iter()
                .copied()
                .filter(|&d| d != file.reference_dose)
                .collect(),
        };
        if !(file.level > 0.0 && file.level < 1.0) {
            return Err(Error::Config("credible level must lie in (0, 1)".into()));
        }
        if !(file.grid_step > 0.0) {
            return Err(Error::Config("grid_step must be positive".into()));
        }
        let prior = BcjPrior::from_entries(&file.prior)?;
        if prior.dim() != 2 {
            return Err(Error::Config(format!(
                "dose-finding prior entries need covariates (1, dose), got dimension {}",
                prior.dim()
            )));
        }
        Ok(Self {
            doses: file.doses,
            per_arm: file.per_arm,
            truth: file.truth,
            prior,
            chain: file.chain,
            replicates: file.replicates,
            delta: file.delta,
            decision_doses,
            reference_dose: file.reference_dose,
            level: file.level,
            grid_step: file.grid_step,
        })
    }

    /// Fully materialized configuration, suitable for reloading.
    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            doses: self.doses.clone(),
            per_arm: self.per_arm,
            truth: self.truth,
            prior: self.prior.to_entries(),
            chain: self.chain.clone(),
            replicates: self.replicates,
            delta: self.delta,
            decision_doses: Some(self.decision_doses.clone()),
            reference_dose: self.reference_dose,
            level: self.level,
            grid_step: self.grid_step,
        }
    }

    pub fn total_subjects(&self) -> usize {
        self.per_arm * self.doses.len()
    }

    fn grid(&self) -> Vec<f64> {
        let top = self.doses.iter().cloned().fold(0.0, f64::max);
        let steps = (top / self.grid_step).round() as usize;
        (0..=steps).map(|i| i as f64 * self.grid_step).collect()
    }
}

/// Draws one trial: `per_arm` subjects at every dose, design rows (1, dose).
pub fn simulate_trial<R: Rng + ?Sized>(scenario: &TrialScenario, rng: &mut R) -> Dataset {
    let mut rows = Vec::with_capacity(scenario.total_subjects());
    let mut y = Vec::with_capacity(scenario.total_subjects());
    for &d in &scenario.doses {
        let p = emax_prob(&scenario.truth, d);
        for _ in 0..scenario.per_arm {
            rows.push(vec![1.0, d]);
            y.push(u8::from(rng.random::<f64>() < p));
        }
    }
    Dataset::new(rows, y).expect("simulated rows are well formed")
}

/// Posterior summaries of one fit in one replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    /// Posterior mean response probability at each arm dose.
    pub mean: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Decision probability at each decision dose.
    pub decision: Vec<f64>,
    pub ess: Vec<f64>,
    pub geweke: Vec<f64>,
    pub curve: Vec<CurveValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveValue {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub decision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateResult {
    pub index: usize,
    pub bcj: FitResult,
    pub flat: FitResult,
}

impl ReplicateResult {
    pub fn fit(&self, kind: PriorKind) -> &FitResult {
        match kind {
            PriorKind::Bcj => &self.bcj,
            PriorKind::Flat => &self.flat,
        }
    }
}

/// Stream indices under the master seed for replicate `r`.
pub fn replicate_streams(r: usize) -> (u64, u64, u64) {
    let base = 3 * r as u64;
    (base, base + 1, base + 2)
}

fn summarize_fit(draws: &PosteriorDraws, scenario: &TrialScenario, grid: &[f64]) -> Result<FitResult> {
    let reference = probability_draws(draws, &[1.0, scenario.reference_dose])?;
    let summarize_dose = |d: f64| -> Result<(f64, f64, f64, Vec<f64>)> {
        let probs = probability_draws(draws, &[1.0, d])?;
        let mean = probs.iter().sum::<f64>() / probs.len() as f64;
        let (lo, hi) = credible_interval(&probs, scenario.level)?;
        Ok((mean, lo, hi, probs))
    };
    let decision_for = |probs: &[f64]| -> f64 {
        let hits = probs
            .iter()
            .zip(&reference)
            .filter(|(p, r)| *p - *r > scenario.delta)
            .count();
        hits as f64 / probs.len() as f64
    };

    let (mut mean, mut lo, mut hi) = (Vec::new(), Vec::new(), Vec::new());
    for &d in &scenario.doses {
        let (m, l, h, _) = summarize_dose(d)?;
        mean.push(m);
        lo.push(l);
        hi.push(h);
    }
    let decision = scenario
        .decision_doses
        .iter()
        .map(|&d| summarize_dose(d).map(|(.., probs)| decision_for(&probs)))
        .collect::<Result<Vec<_>>>()?;
    let curve = grid
        .iter()
        .map(|&d| {
            summarize_dose(d).map(|(mean, lo, hi, probs)| CurveValue {
                mean,
                lo,
                hi,
                decision: decision_for(&probs),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ess = (0..draws.dim())
        .map(|k| ess(&draws.column(k)))
        .collect::<Result<Vec<_>>>()?;
    let geweke = (0..draws.dim())
        .map(|k| geweke_z(&draws.column(k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FitResult {
        mean,
        lo,
        hi,
        decision,
        ess,
        geweke,
        curve,
    })
}

/// Simulates replicate `index` and fits it under both priors.
pub fn run_replicate(scenario: &TrialScenario, index: usize) -> Result<ReplicateResult> {
    let (data_stream, bcj_stream, flat_stream) = replicate_streams(index);
    let seed = scenario.chain.seed;
    let data = simulate_trial(scenario, &mut stream(seed, data_stream));
    let grid = scenario.grid();

    let bcj_aug = augment_with_prior(&data, Some(&scenario.prior))?;
    let bcj_draws = run_chain(&bcj_aug, &scenario.chain.clone().with_stream(bcj_stream))?;
    let flat_aug = augment_with_prior(&data, None)?;
    let flat_draws = run_chain(&flat_aug, &scenario.chain.clone().with_stream(flat_stream))?;

    Ok(ReplicateResult {
        index,
        bcj: summarize_fit(&bcj_draws, scenario, &grid)?,
        flat: summarize_fit(&flat_draws, scenario, &grid)?,
    })
}

/// Across-replicate aggregates for one prior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorAggregate {
    pub kind: PriorKind,
    pub mean: Vec<f64>,
    /// Across-replicate SD of the posterior mean; `None` with one replicate.
    pub sd: Vec<Option<f64>>,
    pub width: Vec<f64>,
    pub decision: Vec<f64>,
    pub mean_ess: Vec<f64>,
    /// Replicates with |z| ≤ 2, per coefficient.
    pub geweke_pass: Vec<usize>,
    /// Replicates with |z| ≤ 2 for every coefficient at once.
    pub geweke_pass_all: usize,
    pub curve: Vec<CurveValue>,
}

/// Tables 3/4-style report across replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationReport {
    pub doses: Vec<f64>,
    pub true_p: Vec<f64>,
    pub decision_doses: Vec<f64>,
    pub grid: Vec<f64>,
    pub replicates: usize,
    pub bcj: PriorAggregate,
    pub flat: PriorAggregate,
    pub per_replicate: Vec<ReplicateResult>,
}

impl ReplicationReport {
    pub fn aggregate(&self, kind: PriorKind) -> &PriorAggregate {
        match kind {
            PriorKind::Bcj => &self.bcj,
            PriorKind::Flat => &self.flat,
        }
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn aggregate(kind: PriorKind, reps: &[ReplicateResult]) -> PriorAggregate {
    let fits: Vec<&FitResult> = reps.iter().map(|r| r.fit(kind)).collect();
    let n = fits.len();
    let first = fits[0];
    let col_mean = |f: &dyn Fn(&FitResult) -> f64| mean_of(fits.iter().map(|r| f(r)));

    let mean: Vec<f64> = (0..first.mean.len()).map(|j| col_mean(&|r| r.mean[j])).collect();
    let sd = (0..first.mean.len())
        .map(|j| {
            (n > 1).then(|| {
                let m = mean[j];
                (fits.iter().map(|r| (r.mean[j] - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            })
        })
        .collect();
    let width = (0..first.mean.len()).map(|j| col_mean(&|r| r.hi[j] - r.lo[j])).collect();
    let decision = (0..first.decision.len()).map(|j| col_mean(&|r| r.decision[j])).collect();
    let mean_ess = (0..first.ess.len()).map(|k| col_mean(&|r| r.ess[k])).collect();
    let geweke_pass = (0..first.geweke.len())
        .map(|k| fits.iter().filter(|r| r.geweke[k].abs() <= GEWEKE_PASS_BOUND).count())
        .collect();
    let geweke_pass_all = fits
        .iter()
        .filter(|r| r.geweke.iter().all(|z| z.abs() <= GEWEKE_PASS_BOUND))
        .count();
    let curve = (0..first.curve.len())
        .map(|g| CurveValue {
            mean: col_mean(&|r| r.curve[g].mean),
            lo: col_mean(&|r| r.curve[g].lo),
            hi: col_mean(&|r| r.curve[g].hi),
            decision: col_mean(&|r| r.curve[g].decision),
        })
        .collect();
    PriorAggregate {
        kind,
        mean,
        sd,
        width,
        decision,
        mean_ess,
        geweke_pass,
        geweke_pass_all,
        curve,
    }
}

/// Runs every replicate and aggregates in replicate-index order, so the
/// report does not depend on the execution strategy.
pub fn run_replications(scenario: &TrialScenario, exec: Execution) -> Result<ReplicationReport> {
    let per_replicate = exec
        .map_indexed(scenario.replicates, |r| run_replicate(scenario, r))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicationReport {
        doses: scenario.doses.clone(),
        true_p: scenario.doses.iter().map(|&d| emax_prob(&scenario.truth, d)).collect(),
        decision_doses: scenario.decision_doses.clone(),
        grid: scenario.grid(),
        replicates: scenario.replicates,
        bcj: aggregate(PriorKind::Bcj, &per_replicate),
        flat: aggregate(PriorKind::Flat, &per_replicate),
        per_replicate,
    })
}

/// Challenger launch temperatures (°F) and field-joint O-ring incidents.
#[derive(Debug, Clone, PartialEq)]
pub struct OringData {
    pub rows: Vec<(f64, u8)>,
}

impl OringData {
    /// Design (1, temperature).
    pub fn to_dataset(&self) -> Dataset {
        let (x, y) = self.rows.iter().map(|&(t, f)| (vec![1.0, t], f)).unzip();
        Dataset::new(x, y).expect("embedded data are well formed")
    }
}

/// The 23 pre-Challenger flights in launch order (Dalal, Fowlkes & Hoadley 1989),
/// coded 1 when at least one primary field-joint O-ring showed distress.
pub fn oring_dataset() -> OringData {
    const FLIGHTS: [(f64, u8); 23] = [
        (66.0, 0),
        (70.0, 1),
        (69.0, 0),
        (68.0, 0),
        (67.0, 0),
        (72.0, 0),
        (73.0, 0),
        (70.0, 0),
        (57.0, 1),
        (63.0, 1),
        (70.0, 1),
        (78.0, 0),
        (67.0, 0),
        (53.0, 1),
        (67.0, 0),
        (75.0, 0),
        (70.0, 0),
        (81.0, 0),
        (76.0, 0),
        (79.0, 0),
        (75.0, 1),
        (76.0, 0),
        (58.0, 1),
    ];
    OringData { rows: FLIGHTS.to_vec() }
}

/// Cold anchor Beta(8, 2) at 31 °F and warm anchor Beta(1, 9) at 81 °F.
pub fn oring_prior() -> BcjPrior {
    BcjPrior::new(vec![
        DesignPoint::new(vec![1.0, 31.0], 8.0, 2.0).expect("valid"),
        DesignPoint::new(vec![1.0, 81.0], 1.0, 9.0).expect("valid"),
    ])
    .expect("valid")
}

pub const ORING_TEMPERATURES: [f64; 5] = [31.0, 50.0, 65.0, 75.0, 81.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OringRow {
    pub temperature: f64,
    pub prior: PriorKind,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Fits the O-ring data under one prior and summarizes the failure
/// probability at the reporting temperatures. BCJ uses stream 1 and flat
/// stream 2 under `chain.seed`.
pub fn oring_fit(kind: PriorKind, chain: &ChainConfig) -> Result<(PosteriorDraws, Vec<OringRow>)> {
    let data = oring_dataset().to_dataset();
    let (prior, stream) = match kind {
        PriorKind::Bcj => (Some(oring_prior()), 1),
        PriorKind::Flat => (None, 2),
    };
    let aug = augment_with_prior(&data, prior.as_ref())?;
    let draws = run_chain(&aug, &chain.clone().with_stream(stream))?
        .with_labels(vec!["(Intercept)".into(), "temp".into()])?;
    let rows = ORING_TEMPERATURES
        .iter()
        .map(|&t| {
            let probs = probability_draws(&draws, &[1.0, t])?;
            let (lo, hi) = credible_interval(&probs, 0.95)?;
            Ok(OringRow {
                temperature: t,
                prior: kind,
                mean: probs.iter().sum::<f64>() / probs.len() as f64,
                lo,
                hi,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((draws, rows))
}

/// Rows for every requested prior, in the order given.
pub fn oring_analysis(chain: &ChainConfig, priors: &[PriorKind], exec: Execution) -> Result<Vec<OringRow>> {
    let fits = exec.map_indexed(priors.len(), |i| oring_fit(priors[i], chain).map(|(_, rows)| rows));
    let mut rows = Vec::new();
    for fit in fits {
        rows.extend(fit?);
    }
    Ok(rows)
}
