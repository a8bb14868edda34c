//! Fully resolved subcommands and their execution. A [`Run`] carries every
//! setting a command needs, so a manifest holding it regenerates the same
//! outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use synprior::diagnostics::{ed50_posterior, ess, geweke_z, summarize};
use synprior::model::augment_with_prior;
use synprior::prior::validate_prior;
use synprior::ridge::equivalence_demo;
use synprior::scenarios::{
    emax_prob, oring_analysis, run_replications, PriorKind, ReplicationReport, ScenarioFile, TrialScenario,
};
use synprior::{run_chain, ChainConfig, Execution, PosteriorDraws};

use crate::error::{CliError, CliResult};
use crate::io::{self, num, pct, prob};

pub const RIDGE_LAMBDAS: [f64; 3] = [1e-3, 1.0, 1e3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Run {
    Fit {
        data: PathBuf,
        prior: Option<PathBuf>,
        intercept: bool,
        chain: ChainConfig,
        queries: Vec<Vec<f64>>,
        level: f64,
    },
    Simulate {
        scenario: ScenarioFile,
        sequential: bool,
    },
    Oring {
        chain: ChainConfig,
        priors: Vec<PriorKind>,
    },
    RidgeDemo {
        seed: u64,
        instances: usize,
        lambdas: Vec<f64>,
    },
    Diagnose {
        draws: PathBuf,
    },
}

impl Run {
    pub fn name(&self) -> &'static str {
        match self {
            Run::Fit { .. } => "fit",
            Run::Simulate { .. } => "simulate",
            Run::Oring { .. } => "oring",
            Run::RidgeDemo { .. } => "ridge-demo",
            Run::Diagnose { .. } => "diagnose",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Run::Fit { chain, .. } | Run::Oring { chain, .. } => Some(chain.seed),
            Run::Simulate { scenario, .. } => Some(scenario.chain.seed),
            Run::RidgeDemo { seed, .. } => Some(*seed),
            Run::Diagnose { .. } => None,
        }
    }
}

/// Written next to every output set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: Option<u64>,
    pub run: Run,
    pub artifacts: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Output files produced by a command, in write order.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::new(crate::error::Category::Io, format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::new(crate::error::Category::Io, format!("{}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Executes `run`, writes its artifacts and manifest into `out_dir`, and
/// returns a short human-readable report.
pub fn execute(run: &Run, out_dir: &Path) -> CliResult<String> {
    let mut out = Outputs::new(out_dir)?;
    let report = match run {
        Run::Fit {
            data,
            prior,
            intercept,
            chain,
            queries,
            level,
        } => fit(&mut out, data, prior.as_deref(), *intercept, chain, queries, *level)?,
        Run::Simulate { scenario, sequential } => simulate(&mut out, scenario, *sequential)?,
        Run::Oring { chain, priors } => oring(&mut out, chain, priors)?,
        Run::RidgeDemo {
            seed,
            instances,
            lambdas,
        } => ridge_demo(&mut out, *seed, *instances, lambdas)?,
        Run::Diagnose { draws } => diagnose(&mut out, draws)?,
    };
    let manifest = RunManifest {
        tool: "synprior".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: run.name().into(),
        seed: run.seed(),
        run: run.clone(),
        artifacts: out.files.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    out.write(MANIFEST_FILE, &(json + "\n"))?;
    Ok(report)
}

pub fn read_manifest(path: &Path) -> CliResult<RunManifest> {
    let text = io::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(format!("manifest: {e}")))
}

fn draws_csv(draws: &PosteriorDraws) -> CliResult<String> {
    let mut buf = Vec::new();
    draws.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("ascii"))
}

#[derive(Serialize)]
struct FitSummary<'a> {
    labels: &'a [String],
    n_real: usize,
    n_synthetic: usize,
    chain: &'a ChainConfig,
    approximate_pg: bool,
    prior: Option<synprior::prior::PriorReport>,
    summary: synprior::diagnostics::ChainSummary,
    ed50: Option<synprior::diagnostics::Ed50Summary>,
}

fn fit(
    out: &mut Outputs,
    data_path: &Path,
    prior_path: Option<&Path>,
    intercept: bool,
    chain: &ChainConfig,
    queries: &[Vec<f64>],
    level: f64,
) -> CliResult<String> {
    let loaded = io::parse_data_csv(&io::read_to_string(data_path)?, intercept)?;
    let prior = prior_path
        .map(|p| io::read_to_string(p).and_then(|t| io::parse_prior(&t)))
        .transpose()?;
    let p = loaded.labels.len();
    if let Some(prior) = &prior {
        if prior.dim() != p {
            return Err(CliError::usage(format!(
                "prior design points have {} covariates but the design has {p} columns ({}); \
                 include the intercept term explicitly in prior covariates",
                prior.dim(),
                loaded.labels.join(", ")
            )));
        }
    }
    let aug = augment_with_prior(&loaded.data, prior.as_ref())?;
    let draws = run_chain(&aug, chain)?.with_labels(loaded.labels.clone())?;

    let query_points: Vec<Vec<f64>> = if queries.is_empty() {
        prior
            .as_ref()
            .map(|pr| pr.points().iter().map(|pt| pt.x_tilde.clone()).collect())
            .unwrap_or_default()
    } else {
        queries
            .iter()
            .map(|q| {
                let full: Vec<f64> = if intercept { std::iter::once(1.0).chain(q.iter().copied()).collect() } else { q.clone() };
                if full.len() != p {
                    return Err(CliError::usage(format!(
                        "query {q:?} has {} values; expected {}",
                        q.len(),
                        p - usize::from(intercept)
                    )));
                }
                Ok(full)
            })
            .collect::<CliResult<_>>()?
    };

    let summary = summarize(&draws, &query_points, level)?;
    let ed50 = if p == 2 { ed50_posterior(&draws, level).ok() } else { None };
    let doc = FitSummary {
        labels: &loaded.labels,
        n_real: aug.n_real(),
        n_synthetic: aug.n_synthetic(),
        chain,
        approximate_pg: draws.approximate_pg(),
        prior: prior.as_ref().map(validate_prior),
        summary,
        ed50,
    };
    out.write("draws.csv", &draws_csv(&draws)?)?;
    out.write("summary.json", &(serde_json::to_string_pretty(&doc)? + "\n"))?;

    let mut report = String::new();
    writeln!(report, "kept draws: {}", draws.len()).unwrap();
    for c in &doc.summary.coefficients {
        writeln!(
            report,
            "{:>12}  mean {:>10.4}  sd {:>8.4}  ess {}  geweke {}",
            c.label,
            c.mean,
            c.sd,
            c.ess.map_or("-".into(), |v| format!("{v:.1}")),
            c.geweke_z.map_or("-".into(), |v| format!("{v:.3}")),
        )
        .unwrap();
    }
    for q in &doc.summary.queries {
        writeln!(report, "P(y=1 | x={:?}) = {}  [{}, {}]", q.x, prob(q.mean), prob(q.lo), prob(q.hi)).unwrap();
    }
    Ok(report)
}

pub fn table3_csv(r: &ReplicationReport) -> String {
    let mut s = String::from(
        "dose_mg,true_p_pct,bcj_mean_pct,bcj_sd_pct,flat_mean_pct,flat_sd_pct,bcj_cri_width_pp,flat_cri_width_pp\n",
    );
    let sd = |v: Option<f64>| v.map(pct).unwrap_or_default();
    for (j, &d) in r.doses.iter().enumerate() {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            num(d),
            pct(r.true_p[j]),
            pct(r.bcj.mean[j]),
            sd(r.bcj.sd[j]),
            pct(r.flat.mean[j]),
            sd(r.flat.sd[j]),
            pct(r.bcj.width[j]),
            pct(r.flat.width[j]),
        )
        .unwrap();
    }
    s
}

pub fn table4_csv(r: &ReplicationReport) -> String {
    let mut s = String::from("dose_mg,bcj,flat\n");
    for (j, &d) in r.decision_doses.iter().enumerate() {
        writeln!(s, "{},{},{}", num(d), prob(r.bcj.decision[j]), prob(r.flat.decision[j])).unwrap();
    }
    s
}

fn simulation_diagnostics_csv(r: &ReplicationReport) -> String {
    let mut s = String::from("prior,coefficient,mean_ess,geweke_pass,replicates\n");
    for agg in [&r.bcj, &r.flat] {
        for (k, e) in agg.mean_ess.iter().enumerate() {
            writeln!(s, "{},beta{k},{e:.1},{},{}", agg.kind.label(), agg.geweke_pass[k], r.replicates).unwrap();
        }
        writeln!(s, "{},all,,{},{}", agg.kind.label(), agg.geweke_pass_all, r.replicates).unwrap();
    }
    s
}

fn curve_tsv(r: &ReplicationReport, truth: &synprior::scenarios::EmaxTruth) -> (String, String) {
    let mut band = String::from("dose\tposterior_mean\tcri_lo\tcri_hi\tprior\n");
    let mut decision = String::from("dose\tdecision_prob\tprior\n");
    for agg in [&r.bcj, &r.flat] {
        for (g, &d) in r.grid.iter().enumerate() {
            let c = agg.curve[g];
            writeln!(band, "{}\t{}\t{}\t{}\t{}", num(d), prob(c.mean), prob(c.lo), prob(c.hi), agg.kind.label()).unwrap();
            writeln!(decision, "{}\t{}\t{}", num(d), prob(c.decision), agg.kind.label()).unwrap();
        }
    }
    for &d in &r.grid {
        let t = prob(emax_prob(truth, d));
        writeln!(band, "{}\t{t}\t{t}\t{t}\ttruth", num(d)).unwrap();
    }
    (band, decision)
}

fn replicates_csv(r: &ReplicationReport) -> String {
    let mut s = String::from("replicate,prior,dose_mg,mean,cri_lo,cri_hi\n");
    for rep in &r.per_replicate {
        for kind in [PriorKind::Bcj, PriorKind::Flat] {
            let fit = rep.fit(kind);
            for (j, &d) in r.doses.iter().enumerate() {
                writeln!(s, "{},{},{},{},{},{}", rep.index, kind.label(), num(d), prob(fit.mean[j]), prob(fit.lo[j]), prob(fit.hi[j])).unwrap();
            }
        }
    }
    s
}

fn simulate(out: &mut Outputs, scenario: &ScenarioFile, sequential: bool) -> CliResult<String> {
    let scenario = TrialScenario::from_file(scenario.clone())?;
    let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
    let report = run_replications(&scenario, exec)?;
    let t3 = table3_csv(&report);
    let t4 = table4_csv(&report);
    let (band, decision) = curve_tsv(&report, &scenario.truth);
    out.write("table3.csv", &t3)?;
    out.write("table4.csv", &t4)?;
    out.write("diagnostics.csv", &simulation_diagnostics_csv(&report))?;
    out.write("replicates.csv", &replicates_csv(&report))?;
    out.write("fig1_dose_response.tsv", &band)?;
    out.write("fig1_decision.tsv", &decision)?;
    Ok(format!("{t3}\n{t4}"))
}

pub fn table5_csv(rows: &[synprior::scenarios::OringRow]) -> String {
    let mut s = String::from("temp_f,prior,mean_pct,cri_lo_pct,cri_hi_pct\n");
    for r in rows {
        writeln!(s, "{},{},{},{},{}", num(r.temperature), r.prior.label(), pct(r.mean), pct(r.lo), pct(r.hi)).unwrap();
    }
    s
}

fn oring(out: &mut Outputs, chain: &ChainConfig, priors: &[PriorKind]) -> CliResult<String> {
    let rows = oring_analysis(chain, priors, Execution::Parallel)?;
    let t5 = table5_csv(&rows);
    out.write("table5.csv", &t5)?;
    Ok(t5)
}

fn ridge_demo(out: &mut Outputs, seed: u64, instances: usize, lambdas: &[f64]) -> CliResult<String> {
    let rows = equivalence_demo(seed, instances, lambdas)?;
    let mut csv = String::from("instance,n,p,lambda,max_relative_deviation,gram_deviation\n");
    for r in &rows {
        writeln!(csv, "{},{},{},{:e},{:.3e},{:.3e}", r.instance, r.n, r.p, r.lambda, r.max_relative_deviation, r.gram_deviation).unwrap();
    }
    out.write("ridge_report.csv", &csv)?;
    let mut report = String::new();
    for &lambda in lambdas {
        let worst = rows
            .iter()
            .filter(|r| r.lambda == lambda)
            .map(|r| r.max_relative_deviation)
            .fold(0.0, f64::max);
        writeln!(report, "lambda {lambda:e}: max relative deviation {worst:.3e}").unwrap();
    }
    let worst = rows.iter().map(|r| r.max_relative_deviation).fold(0.0, f64::max);
    writeln!(report, "max deviation over {} instances: {worst:.3e}", rows.len()).unwrap();
    Ok(report)
}

fn diagnose(out: &mut Outputs, path: &Path) -> CliResult<String> {
    let draws = io::parse_draws_csv(&io::read_to_string(path)?)?;
    if draws.len() < 2 {
        return Err(CliError::parse("draws file needs at least two rows"));
    }
    let mut csv = String::from("coefficient,mean,sd,ess,geweke_z\n");
    for (k, label) in draws.labels().iter().enumerate() {
        let col = draws.column(k);
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let e = ess(&col).map(|v| format!("{v:.1}")).unwrap_or_default();
        let z = geweke_z(&col).map(|v| format!("{v:.4}")).unwrap_or_default();
        writeln!(csv, "{label},{mean:.4},{sd:.4},{e},{z}").unwrap();
    }
    out.write("diagnostics.csv", &csv)?;
    Ok(csv)
}
