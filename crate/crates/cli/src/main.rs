//! `satcm`: pose solving, map building and synthetic benchmarks over line
//! maps.
//!
//! Exit codes: 0 success, 1 invalid input, 2 a solve was not certified.

mod batch;

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use satcm::config::Config;
use satcm::error::Error;
use satcm::eval::{evaluate, quantile, EvalReport};
use satcm::geometry::rotation_error;
use satcm::io::{read_list, write_json, GroundTruth, LabelRemap, LineMap, Query, ResultRecord};
use satcm::landscape::landscape;
use satcm::map_builder::build_map_from_manifest;
use satcm::pipeline::{outlier_ratio, relocalize, relocalize_rotation, rotation_associations};
use satcm::saturation::{SaturationKind, SaturationSpec};
use satcm::synth::{synth_scene, SceneSpec};

#[derive(Parser)]
#[command(name = "satcm", version, about = "Globally optimal camera relocalization in semantic line maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate camera poses of queries against a line map.
    Solve(SolveArgs),
    /// Build a line map from posed RGB-D frames with 2D segments.
    BuildMap(BuildMapArgs),
    /// Generate a synthetic map with queries and ground truth.
    Synth(SynthArgs),
    /// Dump objective landscapes over rotation axes as CSV.
    Landscape(LandscapeArgs),
    /// Compare results with ground truth.
    Eval(EvalArgs),
    /// Recall as a function of the prior inlier probability q.
    SweepQ(SweepArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `rotation.epsilon_r=0.02`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Saturation kind of the rotation search (identity, truncated, likelihood).
    #[arg(long)]
    saturation: Option<SaturationKind>,
    /// Prior inlier probability of the rotation saturation.
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    epsilon_r: Option<f64>,
    #[arg(long)]
    epsilon_t: Option<f64>,
}

#[derive(Args)]
struct BatchArgs {
    #[arg(long)]
    map: PathBuf,
    /// Query files, solved and reported in the order given.
    #[arg(long, num_args = 1.., required = true)]
    query: Vec<PathBuf>,
    /// Label merge table (JSON object from label to label).
    #[arg(long)]
    remap: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    batch: BatchArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Results file (JSON array); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildMapArgs {
    /// Frame manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene specification (TOML); defaults otherwise.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    /// Seed of every random choice; overrides the spec.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    queries: Option<usize>,
    #[arg(long)]
    query_lines: Option<usize>,
    #[arg(long)]
    map_lines: Option<usize>,
    #[arg(long)]
    dictionary_size: Option<usize>,
    /// Angular noise on image line normals (radians).
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    planted_clusters: Option<usize>,
    #[arg(long)]
    cluster_size: Option<usize>,
}

#[derive(Args)]
struct LandscapeArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    remap: Option<PathBuf>,
    /// Grid step over both polar angles (degrees).
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    #[arg(long, value_delimiter = ',', default_value = "identity,likelihood")]
    kinds: Vec<SaturationKind>,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Ground truth (JSON array, one entry per query).
    #[arg(long)]
    truth: PathBuf,
    /// Results written by `solve`. Without it, the queries are solved here.
    #[arg(long, conflicts_with = "query")]
    results: Option<PathBuf>,
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    query: Vec<PathBuf>,
    #[arg(long)]
    remap: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    batch: BatchArgs,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.6,0.7,0.8,0.9,0.99")]
    qs: Vec<f64>,
    /// Only search rotations; translation columns stay empty.
    #[arg(long)]
    rotation_only: bool,
    #[command(flatten)]
    config: ConfigArgs,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Status {
    Ok,
    NotCertified,
}

type CliResult = Result<Status, Error>;

fn set_key(root: &mut toml::Table, key: &str, raw: &str) -> Result<(), Error> {
    let parsed: toml::Table = toml::from_str(&format!("v = {raw}")).unwrap_or_else(|_| {
        let mut t = toml::Table::new();
        t.insert("v".into(), toml::Value::String(raw.into()));
        t
    });
    let value = parsed["v"].clone();
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::Config(format!("empty key in `{key}`")))?;
    let mut table = root;
    for p in parts {
        table = table
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{p}` is not a section")))?;
    }
    table.insert(last.into(), value);
    Ok(())
}

impl ConfigArgs {
    fn load(&self) -> Result<Config, Error> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(k) = self.saturation {
            cfg.saturation.kind = k;
        }
        if let Some(q) = self.q {
            cfg.saturation.q = q;
        }
        if let Some(e) = self.epsilon_r {
            cfg.rotation.epsilon_r = e;
        }
        if let Some(e) = self.epsilon_t {
            cfg.translation.epsilon_t = e;
        }
        if !self.set.is_empty() {
            let mut table = toml::Table::try_from(&cfg).map_err(|e| Error::Config(e.to_string()))?;
            for kv in &self.set {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got `{kv}`")))?;
                set_key(&mut table, k.trim(), v.trim())?;
            }
            cfg = Config::from_toml_str(&toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_remap(p: &Option<PathBuf>) -> Result<LabelRemap, Error> {
    p.as_deref().map_or(Ok(LabelRemap::default()), LabelRemap::load)
}

fn load_queries(paths: &[PathBuf]) -> Result<Vec<Query>, Error> {
    paths
        .iter()
        .map(|p| Query::load(p).map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display()))))
        .collect()
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn solve_all(map: &LineMap, queries: &[Query], cfg: &Config, remap: &LabelRemap, workers: usize) -> Result<Vec<ResultRecord>, Error> {
    batch::ordered_map(queries, workers, |q| relocalize(q, map, cfg, remap).map(|r| r.to_record()))
        .into_iter()
        .collect()
}

fn solve(a: SolveArgs) -> CliResult {
    let cfg = a.config.load()?;
    let map = LineMap::load(&a.batch.map)?;
    let queries = load_queries(&a.batch.query)?;
    let remap = load_remap(&a.batch.remap)?;
    let records = solve_all(&map, &queries, &cfg, &remap, a.batch.workers)?;
    emit(&a.out, &serde_json::to_string_pretty(&records)?)?;
    let uncertified = records.iter().filter(|r| !r.certified).count();
    if uncertified > 0 {
        eprintln!("{uncertified} of {} queries not certified", records.len());
        return Ok(Status::NotCertified);
    }
    Ok(Status::Ok)
}

fn build_map(a: BuildMapArgs) -> CliResult {
    let cfg = a.config.load()?;
    let (map, skipped) = build_map_from_manifest(&a.manifest, &cfg.map_builder)?;
    map.save(&a.out)?;
    eprintln!("{} lines registered, {skipped} segments without a usable 3D fit", map.lines.len());
    Ok(Status::Ok)
}

fn synth(a: SynthArgs) -> CliResult {
    let mut spec = match &a.spec {
        Some(p) => toml::from_str::<SceneSpec>(&fs::read_to_string(p)?).map_err(|e| Error::Config(e.to_string()))?,
        None => SceneSpec::default(),
    };
    let set = |dst: &mut usize, v: Option<usize>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    set(&mut spec.n_queries, a.queries);
    set(&mut spec.n_query_lines, a.query_lines);
    set(&mut spec.n_map_lines, a.map_lines);
    set(&mut spec.dictionary_size, a.dictionary_size);
    set(&mut spec.planted_clusters, a.planted_clusters);
    set(&mut spec.cluster_size, a.cluster_size);
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(n) = a.noise {
        spec.noise_rad = n;
    }
    let scene = synth_scene(&spec)?;
    let qdir = a.out_dir.join("queries");
    fs::create_dir_all(&qdir)?;
    scene.map.save(&a.out_dir.join("map.json"))?;
    let width = scene.queries.len().saturating_sub(1).to_string().len().max(4);
    for (i, q) in scene.queries.iter().enumerate() {
        q.query.save(&qdir.join(format!("query_{i:0width$}.json")))?;
    }
    let truth: Vec<GroundTruth> = scene.queries.iter().map(|q| q.ground_truth()).collect();
    write_json(&a.out_dir.join("truth.json"), &truth)?;
    fs::write(
        a.out_dir.join("spec.toml"),
        toml::to_string(&spec).map_err(|e| Error::Config(e.to_string()))?,
    )?;
    eprintln!(
        "{} map lines, {} queries written to {}",
        scene.map.lines.len(),
        scene.queries.len(),
        a.out_dir.display()
    );
    Ok(Status::Ok)
}

fn landscape_cmd(a: LandscapeArgs) -> CliResult {
    let cfg = a.config.load()?;
    let map = LineMap::load(&a.map)?;
    let query = Query::load(&a.query)?;
    let assoc = rotation_associations(&query, &map, &load_remap(&a.remap)?)?;
    fs::create_dir_all(&a.out_dir)?;
    let eps = cfg.rotation.epsilon_r;
    for kind in &a.kinds {
        let spec = SaturationSpec::new(*kind, cfg.saturation.q, eps, cfg.saturation.upper_bound)?;
        let l = landscape(&assoc, &spec, eps, a.step)?;
        let path = a.out_dir.join(format!("{kind}.csv"));
        fs::write(&path, l.to_csv())?;
        let (i, j) = l.argmax();
        println!(
            "{kind}: max {:.4} at alpha {:.2} deg, phi {:.2} deg -> {}",
            l.max,
            l.alphas[i].to_degrees(),
            l.phis[j].to_degrees(),
            path.display()
        );
    }
    Ok(Status::Ok)
}

fn eval_cmd(a: EvalArgs) -> CliResult {
    let truth: Vec<GroundTruth> = read_list(&a.truth)?;
    let remap = load_remap(&a.remap)?;
    let map = a.map.as_deref().map(LineMap::load).transpose()?;
    let queries = load_queries(&a.query)?;
    let results: Vec<ResultRecord> = match (&a.results, &map) {
        (Some(p), _) => read_list(p)?,
        (None, Some(m)) if !queries.is_empty() => solve_all(m, &queries, &a.config.load()?, &remap, a.workers)?,
        _ => return Err(Error::InvalidInput("eval needs --results, or --map with --query".into())),
    };
    let ratios = match &map {
        Some(m) if queries.len() == truth.len() && truth.iter().all(|t| !t.matches.is_empty()) => queries
            .iter()
            .zip(&truth)
            .map(|(q, t)| outlier_ratio(q, m, &remap, &t.matches))
            .collect::<Result<Vec<_>, _>>()?,
        _ => Vec::new(),
    };
    let report = evaluate(&results, &truth, &ratios)?;
    emit(&a.out, &serde_json::to_string_pretty(&report)?)?;
    eprintln!("{}", summary(&report));
    Ok(Status::Ok)
}

fn summary(r: &EvalReport) -> String {
    let f = |x: Option<f64>| x.map_or("inf".to_string(), |v| format!("{v:.2}"));
    let q = &r.rotation_quartiles_deg;
    let t = &r.translation_quartiles_cm;
    let mut s = format!(
        "{} queries, {} failed; rotation deg {}/{}/{}, translation cm {}/{}/{}; recall@5deg {:.1}%",
        r.n_queries,
        r.n_failed,
        f(q.q25),
        f(q.q50),
        f(q.q75),
        f(t.q25),
        f(t.q50),
        f(t.q75),
        100.0 * r.recall_rotation_5deg
    );
    for (cm, rec) in &r.recall_translation {
        let _ = write!(s, ", @{cm}cm {:.1}%", 100.0 * rec);
    }
    s
}

fn sweep_q(a: SweepArgs) -> CliResult {
    let base = a.config.load()?;
    let map = LineMap::load(&a.batch.map)?;
    let queries = load_queries(&a.batch.query)?;
    let remap = load_remap(&a.batch.remap)?;
    let truth: Vec<GroundTruth> = read_list(&a.truth)?;
    if truth.len() != queries.len() {
        return Err(Error::InvalidInput(format!("{} queries but {} ground-truth poses", queries.len(), truth.len())));
    }
    let mut csv = String::from("q,recall_rot_5deg,median_rot_deg,recall_t_5cm,recall_t_10cm,recall_t_15cm\n");
    for &q in &a.qs {
        let mut cfg = base.clone();
        cfg.saturation.q = q;
        cfg.validate()?;
        if a.rotation_only {
            let errs: Vec<f64> = batch::ordered_map(&queries, a.batch.workers, |qu| relocalize_rotation(qu, &map, &cfg, &remap))
                .into_iter()
                .zip(&truth)
                .map(|(r, t)| {
                    let gt = t.pose.to_pose()?;
                    Ok(r?.map_or(f64::INFINITY, |(rot, _, _)| rotation_error(&rot, gt.rotation())))
                })
                .collect::<Result<_, Error>>()?;
            let mut sorted = errs.clone();
            sorted.sort_by(f64::total_cmp);
            let recall = errs.iter().filter(|&&e| e < satcm::eval::ROTATION_RECALL_DEG).count() as f64 / errs.len() as f64;
            let med = quantile(&sorted, 0.5).filter(|m| m.is_finite()).map_or(String::new(), |m| format!("{m:.4}"));
            let _ = writeln!(csv, "{q},{recall:.4},{med},,,");
        } else {
            let results = solve_all(&map, &queries, &cfg, &remap, a.batch.workers)?;
            let r = evaluate(&results, &truth, &[])?;
            let med = r.rotation_quartiles_deg.q50.map_or(String::new(), |m| format!("{m:.4}"));
            let t: Vec<String> = r.recall_translation.iter().map(|(_, v)| format!("{v:.4}")).collect();
            let _ = writeln!(csv, "{q},{:.4},{med},{}", r.recall_rotation_5deg, t.join(","));
        }
    }
    emit(&a.out, csv.trim_end())?;
    Ok(Status::Ok)
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Solve(a) => solve(a),
        Command::BuildMap(a) => build_map(a),
        Command::Synth(a) => synth(a),
        Command::Landscape(a) => landscape_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::SweepQ(a) => sweep_q(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::NotCertified) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
