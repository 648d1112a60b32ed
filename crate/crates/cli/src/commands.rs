use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use serde::Serialize;
use serde_json::{json, Value};

use shapeforge::eval::{
    align_baseline, apply_corrections, per_property_breakdown, read_baseline_triples, read_predictions, report,
    score_inputs, CorrectionSet, EvalReport, RelationMapping,
};
use shapeforge::evidence::{distill, VerdictRecord};
use shapeforge::ingest::{
    build_dual_base, entities_of_class, read_dual_base, subsample_entities, write_dual_base, DualExample, Endpoints,
    FetchPolicy, Fetcher, HttpTransport,
};
use shapeforge::linearize::{compute_weights, export_training_set, AbstractFormat, ExportOptions};
use shapeforge::lookup::{EntityLinker, LinkTable, NoLookup, TripleLookup};
use shapeforge::manifest::{sha256_hex, RunManifest};
use shapeforge::rdf::{parse_turtle, Graph, Iri, PrefixMap};
use shapeforge::rules::{parse_rules, RuleSet};
use shapeforge::sampling::{
    assign_folds, augment_template, compute_stats, sample, selection_counts, split_by_frequency, stratify,
    AugmentStrategy, FrequencySplit, PropertyStats, SampleSpec, SamplingError, Stratum,
};
use shapeforge::shacl::{parse_shape, ShaclShape};

use crate::config::Config;
use crate::{
    AugmentArgs, CorrectArgs, DistillArgs, EvaluateArgs, ExportArgs, IngestArgs, SampleArgs, SplitArgs, StatsArgs,
    StratifyArgs, WeightsArgs,
};

const DEFAULT_RATE_LIMIT: f64 = 1.0;

/// Settings shared by every command after merging flags over the config.
pub struct Ctx {
    pub cfg: Config,
    pub seed: Option<u64>,
    pub fixtures: Option<PathBuf>,
    pub live: bool,
    pub rate_limit: f64,
    pub prefixes: PrefixMap,
}

impl Ctx {
    fn fetcher(&self) -> Result<Fetcher> {
        let dir = self.fixtures.clone().ok_or_else(|| anyhow!("--fixtures DIR is required for this command"))?;
        if !self.live {
            return Ok(Fetcher::offline(dir));
        }
        let policy = FetchPolicy::live(dir, self.rate_limit);
        Ok(Fetcher::new(policy, Endpoints::default(), Box::new(HttpTransport::new()))?)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_dataset(path: &Path) -> Result<Vec<DualExample>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_dual_base(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn write_dataset(path: &Path, examples: &[DualExample]) -> Result<()> {
    let mut buf = Vec::new();
    write_dual_base(&mut buf, examples)?;
    write_text(path, std::str::from_utf8(&buf).expect("JSON is UTF-8"))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn read_shape(path: &Path) -> Result<ShaclShape> {
    parse_shape(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

fn read_graph(path: &Path, prefixes: &PrefixMap) -> Result<Graph> {
    parse_turtle(&read_text(path)?, prefixes).with_context(|| format!("in {}", path.display()))
}

fn read_rules(path: &Path, prefixes: &PrefixMap) -> Result<RuleSet> {
    parse_rules(&read_text(path)?, prefixes).with_context(|| format!("in {}", path.display()))
}

fn read_split(path: &Path) -> Result<FrequencySplit> {
    serde_json::from_str(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

fn read_strata(path: &Path) -> Result<Vec<Stratum>> {
    serde_json::from_str(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

fn read_link_table(path: &Path, prefixes: &PrefixMap) -> Result<LinkTable> {
    let mut table = LinkTable::new();
    for (n, line) in read_text(path)?.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (text, target) =
            line.split_once('\t').ok_or_else(|| anyhow!("{}:{}: expected `text<TAB>iri`", path.display(), n + 1))?;
        let target =
            prefixes.resolve(target).ok_or_else(|| anyhow!("{}:{}: bad IRI `{target}`", path.display(), n + 1))?;
        table.insert(text, target);
    }
    Ok(table)
}

/// Refuse to overwrite any input.
fn guard_outputs(inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
    let canon = |p: &Path| fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf());
    let inputs: BTreeSet<PathBuf> = inputs.iter().map(|p| canon(p)).collect();
    for out in outputs {
        if inputs.contains(&canon(out)) {
            bail!("output {} would overwrite an input", out.display());
        }
    }
    Ok(())
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn new_manifest(command: &str, settings: &Value, seed: Option<u64>) -> RunManifest {
    RunManifest::new(command, &settings.to_string(), seed)
}

fn save_manifest(manifest: RunManifest, path: &Path) -> Result<()> {
    write_text(path, &manifest.finish().to_json())
}

fn compact(prefixes: &PrefixMap, p: &Iri) -> String {
    prefixes.compact(p).unwrap_or_else(|| p.as_str().to_string())
}

fn named_counts(prefixes: &PrefixMap, counts: &BTreeMap<Iri, usize>) -> BTreeMap<String, usize> {
    counts.iter().map(|(p, n)| (compact(prefixes, p), *n)).collect()
}

pub fn ingest(ctx: &Ctx, a: &IngestArgs) -> Result<()> {
    guard_outputs(&[&a.kg], &[&a.out])?;
    let kg = read_graph(&a.kg, &ctx.prefixes)?;
    let class = ctx.prefixes.resolve(&a.class).ok_or_else(|| anyhow!("cannot resolve class `{}`", a.class))?;
    let mut entities = match &a.entities {
        Some(path) => read_text(path)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| ctx.prefixes.resolve(l).ok_or_else(|| anyhow!("bad entity `{l}` in {}", path.display())))
            .collect::<Result<Vec<_>>>()?,
        None => entities_of_class(&kg, &class),
    };
    let limit = a.limit.or(ctx.cfg.usize("limit")?);
    if let Some(n) = limit {
        entities = subsample_entities(&entities, n, ctx.seed());
    }
    let fetcher = ctx.fetcher()?;
    let (base, diagnostics) = build_dual_base(&kg, &entities, &fetcher);
    info!("ingested {} of {} entities", base.len(), entities.len());

    let settings = json!({"class": class, "limit": limit, "live": ctx.live, "rate_limit": ctx.rate_limit});
    let mut m = new_manifest("ingest", &settings, Some(ctx.seed()));
    m.input("kg", &a.kg)?;
    if let Some(path) = &a.entities {
        m.input("entities", path)?;
    }
    write_dataset(&a.out, &base)?;
    m.output("dual_base", &a.out)?;
    if let Some(path) = &a.diagnostics {
        let text: String = diagnostics.iter().map(|d| serde_json::to_string(d).expect("serializes") + "\n").collect();
        write_text(path, &text)?;
        m.output("diagnostics", path)?;
    }
    m.detail("examples", base.len());
    m.detail("excluded", diagnostics.len());
    m.detail("network_calls", fetcher.network_calls());
    save_manifest(m, &manifest_path(&a.out))
}

pub fn distill_cmd(ctx: &Ctx, a: &DistillArgs) -> Result<()> {
    guard_outputs(&[&a.input, &a.shape, &a.rules], &[&a.out])?;
    let shape = read_shape(&a.shape)?;
    let rules = read_rules(&a.rules, &ctx.prefixes)?;
    let base = read_dataset(&a.input)?;
    let fetcher = ctx.fetcher()?;
    let aux_graph = a.aux.as_deref().map(|p| read_graph(p, &ctx.prefixes)).transpose()?;
    let aux: &dyn TripleLookup = match &aux_graph {
        Some(g) => g,
        None => &fetcher,
    };
    let out = distill(&base, &shape, &rules, aux, &fetcher);
    for d in &out.diagnostics {
        info!("{}: {}", d.entity, d.message);
    }

    let mut m = new_manifest("distill", &json!({"shape": shape.id}), None);
    m.input("shape", &a.shape)?;
    m.input("rules", &a.rules)?;
    m.input("dual_base", &a.input)?;
    if let Some(p) = &a.aux {
        m.input("aux", p)?;
    }
    write_dataset(&a.out, &out.examples)?;
    m.output("distilled", &a.out)?;
    if let Some(path) = &a.verdicts {
        let text: String = out
            .verdicts
            .iter()
            .map(|(e, v)| serde_json::to_string(&VerdictRecord::new(e, v, &ctx.prefixes)).expect("serializes") + "\n")
            .collect();
        write_text(path, &text)?;
        m.output("verdicts", path)?;
    }
    m.detail("examples_in", base.len());
    m.detail("examples_out", out.examples.len());
    m.detail("triples_checked", out.verdicts.len());
    m.detail("triples_supported", out.verdicts.iter().filter(|(_, v)| v.supported).count());
    m.detail("diagnostics", &out.diagnostics);
    save_manifest(m, &manifest_path(&a.out))
}

pub fn stats(ctx: &Ctx, a: &StatsArgs) -> Result<()> {
    let shape = read_shape(&a.shape)?;
    let dataset = read_dataset(&a.input)?;
    let tsv = compute_stats(&dataset, &shape).to_tsv(&ctx.prefixes);
    match &a.out {
        None => print!("{tsv}"),
        Some(out) => {
            guard_outputs(&[&a.input, &a.shape], &[out])?;
            let mut m = new_manifest("stats", &json!({"shape": shape.id}), None);
            m.input("shape", &a.shape)?;
            m.input("dataset", &a.input)?;
            write_text(out, &tsv)?;
            m.output("stats", out)?;
            save_manifest(m, &manifest_path(out))?;
        }
    }
    Ok(())
}

fn load_stats(path: &Path, shape: &ShaclShape, prefixes: &PrefixMap) -> Result<PropertyStats> {
    if path.extension().is_some_and(|e| e == "tsv") {
        return PropertyStats::from_tsv(&read_text(path)?, prefixes).with_context(|| format!("in {}", path.display()));
    }
    Ok(compute_stats(&read_dataset(path)?, shape))
}

pub fn split(ctx: &Ctx, a: &SplitArgs) -> Result<()> {
    let threshold_from = a.threshold_from.as_ref().unwrap_or(&a.classify);
    guard_outputs(&[&a.classify, threshold_from, &a.shape], &[&a.out])?;
    let shape = read_shape(&a.shape)?;
    let classification = load_stats(&a.classify, &shape, &ctx.prefixes)?;
    let threshold = load_stats(threshold_from, &shape, &ctx.prefixes)?;
    let result = split_by_frequency(&classification, &threshold)?;
    println!("mu_p\t{:.6}", result.mu_p);
    for p in &result.frequent {
        println!("frequent\t{}", compact(&ctx.prefixes, p));
    }
    for p in &result.rare {
        println!("rare\t{}", compact(&ctx.prefixes, p));
    }

    let mut m = new_manifest("split", &json!({"shape": shape.id}), None);
    m.input("shape", &a.shape)?;
    m.input("classify", &a.classify)?;
    m.input("threshold_from", threshold_from)?;
    write_json(&a.out, &result)?;
    m.output("split", &a.out)?;
    m.detail("mu_p", result.mu_p);
    save_manifest(m, &manifest_path(&a.out))
}

/// Spec file, then config keys, then flags.
fn resolve_spec(ctx: &Ctx, a: &SampleArgs) -> Result<SampleSpec> {
    let mut spec = match &a.spec {
        Some(path) => serde_json::from_str::<serde_json::Map<String, Value>>(&read_text(path)?)
            .with_context(|| format!("in {}", path.display()))?,
        None => serde_json::Map::new(),
    };
    let mut set = |key: &str, value: Option<Value>| {
        if let Some(v) = value {
            spec.insert(key.to_string(), v);
        }
    };
    set("kind", ctx.cfg.string("kind")?.map(Value::from));
    set("set", ctx.cfg.string("set")?.map(Value::from));
    set("size", ctx.cfg.usize("size")?.map(Value::from));
    set("seed", ctx.cfg.u64("seed")?.map(Value::from));
    set("date_cutoff", ctx.cfg.string("date_cutoff")?.map(Value::from));
    set("exposure_threshold", ctx.cfg.usize("exposure_threshold")?.map(Value::from));
    set("kind", a.kind.clone().map(Value::from));
    set("set", a.set.clone().map(Value::from));
    set("size", a.size.map(Value::from));
    set("seed", ctx.seed.map(Value::from));
    set("date_cutoff", a.date_cutoff.clone().map(Value::from));
    set("exposure_threshold", a.exposure_threshold.map(Value::from));
    let spec: SampleSpec = serde_json::from_value(Value::Object(spec)).context("invalid sample spec")?;
    spec.validate()?;
    Ok(spec)
}

pub fn sample_cmd(ctx: &Ctx, a: &SampleArgs) -> Result<()> {
    let mut inputs: Vec<&Path> = vec![&a.input, &a.shape, &a.split];
    inputs.extend(a.exclude.iter().map(PathBuf::as_path));
    guard_outputs(&inputs, &[&a.out])?;
    let spec = resolve_spec(ctx, a)?;
    let shape = read_shape(&a.shape)?;
    let split = read_split(&a.split)?;
    let base = read_dataset(&a.input)?;
    let mut exclude = BTreeSet::new();
    for path in &a.exclude {
        exclude.extend(read_dataset(path)?.iter().map(DualExample::id));
    }
    let picked = sample(&base, &spec, &shape, &split, &exclude)?;
    let selected: Vec<DualExample> = picked.iter().map(|&i| base[i].clone()).collect();
    let counts = selection_counts(&base, &picked, &shape);

    let spec_json = serde_json::to_string(&spec)?;
    let mut m = new_manifest("sample", &serde_json::to_value(&spec)?, Some(spec.seed));
    m.input("dual_base", &a.input)?;
    m.input("shape", &a.shape)?;
    m.input("split", &a.split)?;
    for (i, path) in a.exclude.iter().enumerate() {
        m.input(format!("exclude_{i}"), path)?;
    }
    write_dataset(&a.out, &selected)?;
    m.output("dataset", &a.out)?;
    m.detail("spec", &spec);
    m.detail("spec_hash", sha256_hex(spec_json));
    m.detail("size", selected.len());
    m.detail("counts", named_counts(&ctx.prefixes, &counts));
    save_manifest(m, &manifest_path(&a.out))
}

pub fn stratify_cmd(ctx: &Ctx, a: &StratifyArgs) -> Result<()> {
    guard_outputs(&[&a.input, &a.split], &[&a.out])?;
    let split = read_split(&a.split)?;
    let dataset = read_dataset(&a.input)?;
    let strata = stratify(&dataset, &split.rare, ctx.seed());
    let mut m = new_manifest("stratify", &json!({}), Some(ctx.seed()));
    m.input("dataset", &a.input)?;
    m.input("split", &a.split)?;
    write_json(&a.out, &strata)?;
    m.output("strata", &a.out)?;
    let sizes: BTreeMap<String, usize> = strata.iter().map(|s| (s.label.to_string(), s.members.len())).collect();
    m.detail("sizes", sizes);
    save_manifest(m, &manifest_path(&a.out))
}

pub fn augment(ctx: &Ctx, a: &AugmentArgs) -> Result<()> {
    guard_outputs(&[&a.base, &a.input, &a.shape, &a.split], &[&a.out])?;
    let threshold = a.threshold.or(ctx.cfg.usize("threshold")?).ok_or_else(|| anyhow!("--threshold is required"))?;
    let strategy = match a.strategy.clone().or(ctx.cfg.string("strategy")?).as_deref() {
        Some("KR0") | Some("kr0") | None => AugmentStrategy::Kr0,
        Some("KR1") | Some("kr1") => AugmentStrategy::Kr1,
        Some(other) => bail!("unknown strategy `{other}` (expected KR0 or KR1)"),
    };
    let shape = read_shape(&a.shape)?;
    let split = read_split(&a.split)?;
    let base = read_dataset(&a.base)?;
    let mut dataset = read_dataset(&a.input)?;
    let seed = ctx.seed();

    let before = selection_counts(&dataset, &(0..dataset.len()).collect::<Vec<_>>(), &shape);
    let mut targets: Vec<&Iri> = split.rare.iter().collect();
    targets.sort_by_key(|p| (before.get(*p).copied().unwrap_or(0), (*p).clone()));
    let mut skipped = BTreeMap::new();
    let mut synthetic = 0;
    for (i, target) in targets.into_iter().enumerate() {
        match augment_template(&base, &dataset, target, threshold, strategy, seed.wrapping_add(i as u64)) {
            Ok(out) => {
                synthetic += out.synthetic;
                dataset = out.dataset;
            }
            Err(e @ (SamplingError::NoTemplate(_) | SamplingError::ExhaustedDonors { .. })) => {
                warn!("{e}");
                skipped.insert(compact(&ctx.prefixes, target), e.to_string());
            }
            Err(e) => return Err(e.into()),
        }
    }
    let after = selection_counts(&dataset, &(0..dataset.len()).collect::<Vec<_>>(), &shape);

    let settings = json!({"threshold": threshold, "strategy": strategy});
    let mut m = new_manifest("augment", &settings, Some(seed));
    m.input("dual_base", &a.base)?;
    m.input("dataset", &a.input)?;
    m.input("shape", &a.shape)?;
    m.input("split", &a.split)?;
    write_dataset(&a.out, &dataset)?;
    m.output("dataset", &a.out)?;
    m.detail("synthetic", synthetic);
    m.detail("counts_before", named_counts(&ctx.prefixes, &before));
    m.detail("counts_after", named_counts(&ctx.prefixes, &after));
    if !skipped.is_empty() {
        m.detail("skipped", skipped);
    }
    save_manifest(m, &manifest_path(&a.out))
}

pub fn weights(_ctx: &Ctx, a: &WeightsArgs) -> Result<()> {
    guard_outputs(&[&a.strata], &[&a.out])?;
    let strata = read_strata(&a.strata)?;
    let w = compute_weights(&strata)?;
    for (label, value) in &w.by_label {
        println!("{label}\t{value:.6}");
    }
    let mut m = new_manifest("weights", &json!({"log_base": shapeforge::linearize::LOG_BASE}), None);
    m.input("strata", &a.strata)?;
    write_json(&a.out, &w)?;
    m.output("weights", &a.out)?;
    save_manifest(m, &manifest_path(&a.out))
}

pub fn export(ctx: &Ctx, a: &ExportArgs) -> Result<()> {
    guard_outputs(&[&a.input, &a.strata], &[&a.out])?;
    let k = a.k.or(ctx.cfg.usize("k")?).unwrap_or(5);
    let format = match a.format.clone().or(ctx.cfg.string("format")?).as_deref() {
        Some("plain") | None => AbstractFormat::Plain,
        Some("markdown") | Some("md") => AbstractFormat::Markdown,
        Some(other) => bail!("unknown abstract format `{other}` (expected plain or markdown)"),
    };
    let seed = ctx.seed();
    let dataset = read_dataset(&a.input)?;
    let strata = read_strata(&a.strata)?;
    let w = compute_weights(&strata)?;
    let folds = assign_folds(&strata, k, seed)?;
    let settings = json!({"k": k, "format": format});
    let spec_hash = sha256_hex(format!("{settings}{}", shapeforge::manifest::hash_file(&a.input)?));
    let options = ExportOptions { seed, spec_hash, format };
    let export = export_training_set(&a.out, &dataset, &strata, &w, &folds, &ctx.prefixes, &options)?;

    let mut m = new_manifest("export", &settings, Some(seed));
    m.input("dataset", &a.input)?;
    m.input("strata", &a.strata)?;
    m.output("manifest", &a.out.join("manifest.json"))?;
    for (rel, hash) in &export.files {
        m.output_hashes.insert(rel.clone(), hash.clone());
    }
    m.detail("examples", export.examples);
    m.detail("synthetic", export.synthetic);
    save_manifest(m, &a.out.join("run_manifest.json"))
}

#[derive(Serialize)]
struct EvaluationOutput {
    report: EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    corrected: Option<EvalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    corrections: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<Value>,
}

pub fn evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<()> {
    let mut inputs: Vec<&Path> = vec![&a.gold, &a.pred, &a.shape];
    inputs.extend(a.corrections.as_deref());
    let mut outputs: Vec<&Path> = vec![&a.out];
    outputs.extend(a.tsv.as_deref());
    guard_outputs(&inputs, &outputs)?;
    let shape = read_shape(&a.shape)?;
    let gold = read_dataset(&a.gold)?;
    let mut m = new_manifest("evaluate", &json!({"shape": shape.id, "baseline": a.baseline_map.is_some()}), None);
    m.input("gold", &a.gold)?;
    m.input("predictions", &a.pred)?;
    m.input("shape", &a.shape)?;

    let (predictions, baseline) = match &a.baseline_map {
        None => (read_predictions(&read_text(&a.pred)?, &ctx.prefixes)?, None),
        Some(map_path) => {
            m.input("baseline_map", map_path)?;
            let file = fs::File::open(map_path).with_context(|| format!("opening {}", map_path.display()))?;
            let mapping = RelationMapping::read_csv(file, &ctx.prefixes)?;
            let triples = read_baseline_triples(&read_text(&a.pred)?)?;
            let table;
            let fetcher;
            let linker: &dyn EntityLinker = match &a.linker {
                Some(path) => {
                    m.input("linker", path)?;
                    table = read_link_table(path, &ctx.prefixes)?;
                    &table
                }
                None => {
                    fetcher = ctx.fetcher()?;
                    &fetcher
                }
            };
            let rules = match &a.rules {
                Some(p) => {
                    m.input("rules", p)?;
                    read_rules(p, &ctx.prefixes)?
                }
                None => RuleSet::default(),
            };
            let aux_graph = match &a.aux {
                Some(p) => {
                    m.input("aux", p)?;
                    Some(read_graph(p, &ctx.prefixes)?)
                }
                None => None,
            };
            let aux: &dyn TripleLookup = match &aux_graph {
                Some(g) => g,
                None => &NoLookup,
            };
            let entities: Vec<Iri> = gold.iter().map(|e| e.entity.clone()).collect();
            let aligned = align_baseline(&entities, &triples, &mapping, linker, &rules, aux, &ctx.prefixes);
            for d in &aligned.diagnostics {
                warn!("{d}");
            }
            let summary = json!({"unmapped": aligned.unmapped, "unlinked": aligned.unlinked});
            (aligned.predictions, Some(summary))
        }
    };

    let scored = score_inputs(&gold, &predictions, &shape);
    let raw = report(&scored);
    let (corrected, corrections) = match &a.corrections {
        None => (None, None),
        Some(path) => {
            m.input("corrections", path)?;
            let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let set = CorrectionSet::read_csv(file, &ctx.prefixes)?;
            let outcome = apply_corrections(&scored, &set);
            let summary = json!({"applied": outcome.applied, "unmatched": outcome.unmatched.len()});
            (Some(outcome.report), Some(summary))
        }
    };
    let agg = &raw.aggregates;
    println!("f1_micro\t{:.4}\nf1_macro\t{:.4}\nf1_pooled\t{:.4}", agg.f1_micro, agg.f1_macro, agg.f1_pooled);

    if let Some(tsv) = &a.tsv {
        let mut systems = vec![("model", &raw)];
        if let Some(c) = &corrected {
            systems.push(("corrected", c));
        }
        let breakdown = per_property_breakdown(&systems);
        write_text(tsv, &breakdown.to_tsv(&ctx.prefixes))?;
        m.output("per_property", tsv)?;
        let plot = tsv.with_extension("plot.json");
        write_json(&plot, &breakdown.to_plot_json(&ctx.prefixes))?;
        m.output("plot", &plot)?;
    }
    write_json(&a.out, &EvaluationOutput { report: raw, corrected, corrections, baseline })?;
    m.output("report", &a.out)?;
    save_manifest(m, &manifest_path(&a.out))
}

pub fn correct(ctx: &Ctx, a: &CorrectArgs) -> Result<()> {
    let mut outputs: Vec<&Path> = vec![&a.out];
    outputs.extend(a.report.as_deref());
    guard_outputs(&[&a.gold, &a.pred, &a.shape, &a.corrections], &outputs)?;
    let shape = read_shape(&a.shape)?;
    let gold = read_dataset(&a.gold)?;
    let predictions = read_predictions(&read_text(&a.pred)?, &ctx.prefixes)?;
    let file = fs::File::open(&a.corrections).with_context(|| format!("opening {}", a.corrections.display()))?;
    let set = CorrectionSet::read_csv(file, &ctx.prefixes)?;
    let scored = score_inputs(&gold, &predictions, &shape);
    let outcome = apply_corrections(&scored, &set);
    for c in &outcome.unmatched {
        warn!("correction for {} does not match the scored graphs", c.entity);
    }

    let mut corrected = Vec::with_capacity(gold.len());
    for ((example, before), after) in gold.iter().zip(&scored.graphs).zip(&outcome.inputs.graphs) {
        let mut graph = example.graph.clone();
        for t in before.gold.difference(&after.gold) {
            graph.remove(t);
        }
        for t in after.gold.difference(&before.gold) {
            graph.insert(t.clone())?;
        }
        corrected.push(example.with_graph(graph)?);
    }

    let mut m = new_manifest("correct", &json!({"shape": shape.id}), None);
    m.input("gold", &a.gold)?;
    m.input("predictions", &a.pred)?;
    m.input("shape", &a.shape)?;
    m.input("corrections", &a.corrections)?;
    write_dataset(&a.out, &corrected)?;
    m.output("gold", &a.out)?;
    if let Some(path) = &a.report {
        write_json(path, &outcome.report)?;
        m.output("report", path)?;
    }
    m.detail("applied", outcome.applied);
    m.detail("unmatched", outcome.unmatched.len());
    save_manifest(m, &manifest_path(&a.out))
}

pub fn default_rate_limit(cfg: &Config) -> Result<f64> {
    Ok(cfg.f64("rate_limit")?.unwrap_or(DEFAULT_RATE_LIMIT))
}
