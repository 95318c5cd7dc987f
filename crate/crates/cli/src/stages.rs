//! Pipeline stages. Each seed of a run lives in its own `seed-<n>/`
//! directory holding the resolved config and every artifact derived from it.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use log::info;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use wildcard_core::circuits::CliffordGroup;
use wildcard_core::data::DataSet;
use wildcard_core::fit::{GstDiagnostics, RbFit};
use wildcard_core::noise::{ErrorModel, ErrorModelDoc};
use wildcard_core::scenarios::{analyze, fit_gst_model, gate_diamond_distances};
use wildcard_core::stats::ConsistencyReport;
use wildcard_core::wildcard::{frontier_2d, CutStep, Frontier, Objective, WildcardReport};

use crate::config::{Resolved, RunConfig};
use crate::error::CliError;

pub const CONFIG_FILE: &str = "config.toml";
pub const DATASET_FILE: &str = "dataset.jsonl";
pub const DESIGN_FILE: &str = "design.tsv";
pub const TRUTH_FILE: &str = "truth.json";
pub const MODEL_FILE: &str = "model.json";
pub const RB_FIT_FILE: &str = "rb_fit.json";
pub const GST_FIT_FILE: &str = "gst_fit.json";
pub const WILDCARD_FILE: &str = "wildcard.json";
pub const FRONTIER_FILE: &str = "frontier.tsv";
pub const DIAMOND_FILE: &str = "diamond.json";

/// Angles swept when tracing a two-parameter frontier.
const FRONTIER_ANGLES: usize = 24;
/// Grid points per axis for the feasible-region picture.
const FRONTIER_GRID: usize = 41;

/// Options shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Globals {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub objective: Option<String>,
}

/// One seed of a run, with its effective configuration.
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub dir: PathBuf,
    pub seed: u64,
    pub config: RunConfig,
    pub hash: String,
    pub scenario: Resolved,
}

impl SeedRun {
    fn new(root: &Path, mut config: RunConfig, seed: u64, g: &Globals) -> Result<Self, CliError> {
        config.seeds = vec![seed];
        if let Some(a) = g.alpha {
            config.alpha = a;
        }
        if let Some(o) = &g.objective {
            config.objective = o.clone();
        }
        config.validate()?;
        let hash = config.hash();
        let scenario = config.resolve(seed);
        Ok(Self {
            dir: root.join(format!("seed-{seed}")),
            seed,
            config,
            hash,
            scenario,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn objective(&self) -> Objective {
        self.config.objective.parse().expect("validated")
    }

    /// Header lines for tabular outputs.
    pub fn header(&self) -> String {
        format!("# config_hash={} seed={} scenario={}\n", self.hash, self.seed, self.config.scenario.name())
    }

    fn stamp<T: Serialize>(&self, body: T) -> Stamped<T> {
        Stamped {
            config_hash: self.hash.clone(),
            seed: self.seed,
            scenario: self.config.scenario.name().to_string(),
            body,
        }
    }

    pub fn write_json<T: Serialize>(&self, name: &str, body: T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(&self.stamp(body)).map_err(wildcard_core::Error::from)?;
        write(&self.path(name), &(text + "\n"))
    }

    pub fn write_tsv(&self, name: &str, body: &str) -> Result<(), CliError> {
        write(&self.path(name), &(self.header() + body))
    }

    pub fn read_json<T: DeserializeOwned>(&self, name: &str, stage: &str) -> Result<T, CliError> {
        let path = self.path(name);
        if !path.exists() {
            return Err(CliError::Incomplete(format!("{} is missing; run `{stage}` first", path.display())));
        }
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let stamped: Stamped<T> = serde_json::from_str(&text).map_err(wildcard_core::Error::from)?;
        Ok(stamped.body)
    }

    pub fn dataset(&self) -> Result<DataSet, CliError> {
        let path = self.path(DATASET_FILE);
        if !path.exists() {
            return Err(CliError::Incomplete(format!("{} is missing; run `simulate` first", path.display())));
        }
        let file = fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(DataSet::read_jsonl(BufReader::new(file))?)
    }

    /// The model the wildcard stage augments: the fitted model when present,
    /// otherwise the ideal target for total-error runs.
    pub fn model(&self) -> Result<ErrorModel, CliError> {
        if self.path(MODEL_FILE).exists() {
            let doc: ErrorModelDoc = self.read_json(MODEL_FILE, "fit-rb` or `fit-gst")?;
            return Ok(ErrorModel::from_doc(&doc)?);
        }
        match &self.scenario {
            Resolved::TotalError(s) => Ok(s.target()?),
            Resolved::RbDephasing(_) => Err(CliError::Incomplete(format!(
                "{} is missing; run `fit-rb` first",
                self.path(MODEL_FILE).display()
            ))),
            _ => Err(CliError::Incomplete(format!(
                "{} is missing; run `fit-gst` first",
                self.path(MODEL_FILE).display()
            ))),
        }
    }
}

/// A JSON artifact tagged with the config hash and seed that produced it.
#[derive(Serialize, Deserialize)]
pub struct Stamped<T> {
    pub config_hash: String,
    pub seed: u64,
    pub scenario: String,
    pub body: T,
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Seed runs selected by the global flags. With `--config`, seeds come from
/// the file (or `--seed`); otherwise from the `seed-*` directories under
/// `--out`.
pub fn plan(g: &Globals) -> Result<Vec<SeedRun>, CliError> {
    if let Some(path) = &g.config {
        let config = RunConfig::load(path)?;
        let root = g
            .out
            .clone()
            .or_else(|| config.out.clone())
            .unwrap_or_else(|| PathBuf::from("runs").join(config.scenario.name()));
        let seeds = g.seed.map(|s| vec![s]).unwrap_or_else(|| config.seeds.clone());
        return seeds.into_iter().map(|s| SeedRun::new(&root, config.clone(), s, g)).collect();
    }
    let Some(root) = &g.out else {
        return Err(CliError::Usage("pass --config <file> or --out <run dir>".into()));
    };
    let mut seeds = recorded_seeds(root)?;
    if let Some(s) = g.seed {
        if !seeds.contains(&s) {
            return Err(CliError::Incomplete(format!("{} has no seed-{s} directory", root.display())));
        }
        seeds = vec![s];
    }
    seeds
        .into_iter()
        .map(|s| {
            let path = root.join(format!("seed-{s}")).join(CONFIG_FILE);
            SeedRun::new(root, RunConfig::load(&path)?, s, g)
        })
        .collect()
}

/// Seeds with a `seed-<n>/config.toml` under `root`, ascending.
fn recorded_seeds(root: &Path) -> Result<Vec<u64>, CliError> {
    if !root.is_dir() {
        return Err(CliError::Incomplete(format!("run directory {} does not exist", root.display())));
    }
    let mut seeds: Vec<u64> = fs::read_dir(root)
        .map_err(|e| CliError::io(root, e))?
        .filter_map(|entry| {
            let entry = entry.ok()?;
            let name = entry.file_name().into_string().ok()?;
            let seed = name.strip_prefix("seed-")?.parse().ok()?;
            entry.path().join(CONFIG_FILE).is_file().then_some(seed)
        })
        .collect();
    if seeds.is_empty() {
        return Err(CliError::Incomplete(format!(
            "run directory {} contains no seed-*/{CONFIG_FILE}; run `simulate` first",
            root.display()
        )));
    }
    seeds.sort_unstable();
    Ok(seeds)
}

pub fn simulate(run: &SeedRun) -> Result<(), CliError> {
    let mut config_text = run.header();
    config_text.push_str(&run.config.to_toml());
    write(&run.path(CONFIG_FILE), &config_text)?;
    let header = vec![format!("config_hash={} seed={}", run.hash, run.seed)];
    let (data, truth, design) = match &run.scenario {
        Resolved::RbDephasing(s) => {
            let (design, truth, data) = s.simulate(&CliffordGroup::new())?;
            let mut tsv = String::from("depth\tcircuit\n");
            for (i, c) in design.circuits.iter().enumerate() {
                tsv.push_str(&format!("{}\t{c}\n", design.depths[i / design.per_depth]));
            }
            (data, truth, tsv)
        }
        Resolved::TotalError(s) => {
            let (_, design, truth, data) = s.simulate()?;
            (data, truth, gst_design_tsv(&design))
        }
        Resolved::GstLeakage(s) => {
            let (_, design, truth, data) = s.simulate()?;
            (data, truth, gst_design_tsv(&design))
        }
        Resolved::Custom(c) => {
            let file = fs::File::open(&c.dataset).map_err(|e| CliError::io(&c.dataset, e))?;
            let data = DataSet::read_jsonl(BufReader::new(file))?;
            let text = fs::read_to_string(&c.model).map_err(|e| CliError::io(&c.model, e))?;
            let model = ErrorModel::from_json(&text)?;
            run.write_json(MODEL_FILE, model.to_doc())?;
            let mut tsv = String::from("circuit\n");
            for c in data.circuits() {
                tsv.push_str(&format!("{c}\n"));
            }
            (data, model, tsv)
        }
    };
    let mut buf = Vec::new();
    data.write_jsonl(&mut buf, &header)?;
    write(&run.path(DATASET_FILE), &String::from_utf8(buf).expect("utf-8"))?;
    run.write_json(TRUTH_FILE, truth.to_doc())?;
    run.write_tsv(DESIGN_FILE, &design)?;
    info!("seed {}: simulated {} circuits", run.seed, data.len());
    Ok(())
}

fn gst_design_tsv(design: &wildcard_core::circuits::GstDesign) -> String {
    let mut tsv = String::from("germ\tpower\tfid_in\tfid_out\tcircuit\n");
    for e in design.entries() {
        tsv.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", e.germ, e.power, e.fid_in, e.fid_out, e.circuit));
    }
    tsv
}

#[derive(Serialize, Deserialize)]
pub struct RbFitArtifact {
    pub fit: RbFit,
    pub depths: Vec<f64>,
    pub survival: Vec<f64>,
}

pub fn fit_rb(run: &SeedRun) -> Result<(), CliError> {
    let Resolved::RbDephasing(s) = &run.scenario else {
        return Err(CliError::Usage(format!(
            "fit-rb applies to rb-dephasing runs, not `{}`",
            run.config.scenario.name()
        )));
    };
    let data = run.dataset()?;
    let design = s.design(&CliffordGroup::new())?;
    let (fit, (depths, survival), model) = s.fit(&design, &data)?;
    let converged = fit.converged;
    info!("seed {}: RB r = {:.6e}", run.seed, fit.r);
    run.write_json(RB_FIT_FILE, RbFitArtifact { fit, depths, survival })?;
    run.write_json(MODEL_FILE, model.to_doc())?;
    if !converged {
        return Err(CliError::NotConverged("RB decay fit".into()));
    }
    Ok(())
}

pub fn fit_gst(run: &SeedRun) -> Result<(), CliError> {
    let (gates, design) = match &run.scenario {
        Resolved::GstLeakage(s) => (s.gates.clone(), s.design()?),
        Resolved::TotalError(s) => (s.gates.clone(), s.design()?),
        _ => {
            return Err(CliError::Usage(format!(
                "fit-gst applies to gst-leakage and total-error runs, not `{}`",
                run.config.scenario.name()
            )))
        }
    };
    let data = run.dataset()?;
    let (model, diagnostics) = fit_gst_model(&gates, &design, &data)?;
    info!(
        "seed {}: GST fit after {} iterations, {:.2} sigma model violation",
        run.seed, diagnostics.iterations, diagnostics.sigma
    );
    let converged = diagnostics.converged;
    run.write_json(GST_FIT_FILE, &diagnostics)?;
    run.write_json(MODEL_FILE, model.to_doc())?;
    if !converged {
        return Err(CliError::NotConverged("GST fit".into()));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
pub struct WildcardArtifact {
    pub report: WildcardReport,
    pub trace: Vec<CutStep>,
    pub pre: ConsistencyReport,
    pub post: ConsistencyReport,
}

pub fn wildcard(run: &SeedRun) -> Result<(), CliError> {
    let data = run.dataset()?;
    let model = run.model()?;
    let labels: Vec<String> = model.gateset().labels().map(str::to_string).collect();
    let family = run.scenario.family(&labels)?;
    let objective = run.objective();
    let analysis = analyze(&model, &data, family, &objective, run.config.alpha)?;
    let w = &analysis.solution.w;
    info!(
        "seed {}: w = {:?}, pre {} / post {}",
        run.seed,
        w,
        verdict(analysis.pre.pass),
        verdict(analysis.post.pass)
    );
    run.write_tsv("circuits.tsv", &analysis.report.circuits_tsv())?;
    run.write_tsv("consistency_pre.tsv", &analysis.pre.to_tsv())?;
    run.write_tsv("consistency_post.tsv", &analysis.post.to_tsv())?;
    if analysis.problem.family().len() == 2 {
        let mut frontier = frontier_2d(&analysis.problem, FRONTIER_ANGLES, None)?;
        frontier.grid = feasibility_grid(&analysis.problem, &frontier, w)?;
        run.write_tsv(FRONTIER_FILE, &frontier.to_tsv())?;
    }
    run.write_json(
        WILDCARD_FILE,
        WildcardArtifact {
            report: analysis.report,
            trace: analysis.solution.trace,
            pre: analysis.pre,
            post: analysis.post,
        },
    )
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

/// Feasibility samples covering the frontier and the selected point.
fn feasibility_grid(
    problem: &wildcard_core::wildcard::WildcardProblem,
    frontier: &Frontier,
    w: &[f64],
) -> Result<Vec<(f64, f64, bool)>, CliError> {
    let extent = |k: usize| {
        let m = frontier.points.iter().map(|p| p[k]).fold(w[k], f64::max);
        if m > 0.0 {
            1.2 * m
        } else {
            1e-3
        }
    };
    let (x_max, y_max) = (extent(0), extent(1));
    let n = FRONTIER_GRID;
    let mut grid = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x = x_max * i as f64 / (n - 1) as f64;
            let y = y_max * j as f64 / (n - 1) as f64;
            grid.push((x, y, problem.is_feasible(&[x, y])?));
        }
    }
    Ok(grid)
}

#[derive(Serialize, Deserialize)]
pub struct DiamondArtifact {
    /// `ε◇` of the analysed model's gates against the ideal gates.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub model: BTreeMap<String, f64>,
    /// `ε◇` of the simulated true gates against the ideal gates.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub truth: BTreeMap<String, f64>,
    /// `ε◇` between the true and fitted RB error channels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rb_error_channel: Option<f64>,
}

pub fn diamond(run: &SeedRun) -> Result<(), CliError> {
    let artifact = match &run.scenario {
        Resolved::RbDephasing(s) => {
            let fit: RbFitArtifact = run.read_json(RB_FIT_FILE, "fit-rb")?;
            DiamondArtifact {
                model: BTreeMap::new(),
                truth: BTreeMap::new(),
                rb_error_channel: Some(s.epsilon_diamond(&fit.fit)?),
            }
        }
        Resolved::TotalError(s) => {
            let doc: ErrorModelDoc = run.read_json(TRUTH_FILE, "simulate")?;
            let truth = ErrorModel::from_doc(&doc)?;
            let model = if run.path(MODEL_FILE).exists() {
                gate_diamond_distances(run.model()?.gateset(), &s.gates)?
            } else {
                BTreeMap::new()
            };
            DiamondArtifact {
                model,
                truth: gate_diamond_distances(truth.gateset(), &s.gates)?,
                rb_error_channel: None,
            }
        }
        Resolved::GstLeakage(s) => DiamondArtifact {
            model: gate_diamond_distances(run.model()?.gateset(), &s.gates)?,
            truth: BTreeMap::new(),
            rb_error_channel: None,
        },
        Resolved::Custom(_) => {
            let model = run.model()?;
            let labels: Vec<String> = model.gateset().labels().map(str::to_string).collect();
            DiamondArtifact {
                model: gate_diamond_distances(model.gateset(), &labels)?,
                truth: BTreeMap::new(),
                rb_error_channel: None,
            }
        }
    };
    run.write_json(DIAMOND_FILE, artifact)
}

/// Loads the GST fit diagnostics when the run has them.
pub fn gst_diagnostics(run: &SeedRun) -> Result<Option<GstDiagnostics>, CliError> {
    if run.path(GST_FIT_FILE).exists() {
        run.read_json(GST_FIT_FILE, "fit-gst").map(Some)
    } else {
        Ok(None)
    }
}
