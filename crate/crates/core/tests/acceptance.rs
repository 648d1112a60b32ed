//! Acceptance suite: one line per criterion, non-zero exit on any failure.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::gen::{entity_graph, person_graph};
use common::*;
use shapeforge::eval::{
    align_baseline, apply_corrections, per_property_breakdown, read_baseline_triples, read_predictions, report, score,
    score_inputs, CorrectionSet, EvalInputs, EvalReport, Prediction, PredictionStatus, RelationMapping, ScoredGraph,
};
use shapeforge::evidence::{check_datatype_triple, date_renderings, distill, EvidenceReason};
use shapeforge::ingest::DualExample;
use shapeforge::linearize::{
    compute_weights, decode_turtlelight, encode_turtlelight, export_training_set, weights_from_counts, AbstractFormat,
    ExportOptions, LinearizeError,
};
use shapeforge::lookup::{EntityLinker, LinkTable};
use shapeforge::rdf::{parse_turtle, Graph, Iri, Literal, Term, Triple};
use shapeforge::rules::{apply_rules, RuleSet};
use shapeforge::sampling::{
    assign_folds, augment_template, compute_stats, selection_counts, split_by_frequency, stratify,
    sufficient_exposure_sample, AugmentStrategy, PropertyStats, StratumLabel,
};
use shapeforge::shacl::{pattern_count, realized_patterns, restrict_shape, ShaclShape};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($arg)+));
        }
    };
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:?}, limit {limit:?}"))
    }
}

fn proptest_runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn rdfs_label() -> Iri {
    iri("http://www.w3.org/2000/01/rdf-schema#label")
}

fn prop_named(name: &str) -> Iri {
    if name == "label" {
        rdfs_label()
    } else {
        dbo(name)
    }
}

fn example(entity: Iri, graph: Graph, page_id: u64) -> DualExample {
    let text = format!("{} is a person.", entity.local_name());
    DualExample::new(entity, text.clone(), text, graph, NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(), page_id).unwrap()
}

/// One example per subject of a fixture graph, in IRI order.
fn examples_of(g: &Graph) -> Vec<DualExample> {
    g.subjects().into_iter().enumerate().map(|(i, s)| example(s.clone(), g.description_of(s), i as u64 + 1)).collect()
}

fn acceptance_graph(name: &str) -> Graph {
    parse_turtle(&read(&format!("tests/fixtures/acceptance/{name}")), &prefixes()).unwrap()
}

// 1 ---------------------------------------------------------------------

const TABLE: &[(&str, f64, f64)] = &[
    ("birthYear", 0.77, 0.84),
    ("birthPlace", 0.11, 0.83),
    ("birthDate", 0.71, 0.77),
    ("label", 0.68, 0.73),
    ("deathYear", 0.28, 0.38),
    ("deathDate", 0.24, 0.33),
    ("deathPlace", 0.04, 0.24),
    ("nationality", 0.02, 0.14),
    ("birthName", 0.09, 0.11),
    ("alias", 0.01, 0.01),
];

fn mean_frequency_threshold() -> Check {
    let start = Instant::now();
    let kdist =
        PropertyStats::from_table(137_000, TABLE.iter().map(|(p, f, _)| (prop_named(p), (f * 137_000.0) as u64, *f)));
    let d1 = PropertyStats::from_table(1_200, TABLE.iter().map(|(p, _, f)| (prop_named(p), (f * 1_200.0) as u64, *f)));
    let mu = kdist.mean_frequency();
    let oracle = (0.77 + 0.11 + 0.71 + 0.68 + 0.28 + 0.24 + 0.04 + 0.02 + 0.09 + 0.01) / 10.0;
    ensure!((mu - 0.295).abs() <= 0.0005 && (mu - oracle).abs() < 1e-12, "mu_p = {mu}");
    let split = split_by_frequency(&d1, &kdist).map_err(|e| e.to_string())?;
    let set = |names: &[&str]| names.iter().map(|n| prop_named(n)).collect::<BTreeSet<_>>();
    let frequent = set(&["label", "birthDate", "birthPlace", "birthYear", "deathDate", "deathYear"]);
    let rare = set(&["birthName", "nationality", "deathPlace", "alias"]);
    ensure!(split.frequent == frequent, "frequent {:?}", split.frequent);
    ensure!(split.rare == rare, "rare {:?}", split.rare);
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("mu_p = {mu:.4}, 6 frequent / 4 rare"))
}

// 2 ---------------------------------------------------------------------

fn pattern_space() -> Check {
    let shape = shape();
    let count = pattern_count(&shape).map_err(|e| e.to_string())?;
    let n = shape.properties().len();
    let enumerated = (1u64..(1 << n)).count() as u64;
    ensure!(count == 1023 && count == enumerated, "pattern_count = {count}, enumerated {enumerated}");

    let graphs: Vec<Graph> = examples_of(&acceptance_graph("patterns12.ttl")).into_iter().map(|e| e.graph).collect();
    ensure!(graphs.len() == 12, "{} graphs", graphs.len());
    let realized = realized_patterns(&graphs, &shape).map_err(|e| e.to_string())?;
    let got: Vec<(Vec<String>, usize)> =
        realized.iter().map(|(p, &c)| (p.properties().iter().map(|i| i.as_str().to_string()).collect(), c)).collect();

    let mut brute: Vec<(Vec<String>, usize)> = Vec::new();
    for g in &graphs {
        let mut key: Vec<String> = Vec::new();
        for t in g.iter() {
            let p = t.predicate.as_str().to_string();
            if !key.contains(&p) {
                key.push(p);
            }
        }
        key.sort();
        match brute.iter_mut().find(|(k, _)| *k == key) {
            Some((_, c)) => *c += 1,
            None => brute.push((key, 1)),
        }
    }
    brute.sort();
    let mut got_sorted = got.clone();
    got_sorted.sort();
    ensure!(got_sorted == brute, "realized {got_sorted:?}\nbrute force {brute:?}");
    let mut sizes: Vec<usize> = got.iter().map(|(_, c)| *c).collect();
    sizes.sort();
    ensure!(sizes == [1, 1, 2, 2, 3, 3], "group sizes {sizes:?}");
    Ok(format!("1023 patterns; {} realized on 12 graphs", got.len()))
}

// 3 ---------------------------------------------------------------------

fn rule_closure() -> Check {
    let start = Instant::now();
    let input = acceptance_graph("rules30.ttl");
    let want = acceptance_graph("rules30_closure.ttl");
    ensure!(input.len() == 30 && want.len() == 43, "fixture sizes {} and {}", input.len(), want.len());
    let aux = desk_graph("aux_country.ttl");
    let rules = desk_rules();
    let closure = |g: &Graph, r: &RuleSet| apply_rules(g, r, &aux).map_err(|e| e.to_string());

    let got = closure(&input, &rules)?;
    if got != want {
        let missing: Vec<_> = want.iter().filter(|t| !got.contains(t)).collect();
        let extra: Vec<_> = got.iter().filter(|t| !want.contains(t)).collect();
        return Err(format!("missing {missing:?}\nextra {extra:?}"));
    }
    ensure!(closure(&got, &rules)? == got, "closure is not idempotent on the fixture");
    let base = rules.rules().to_vec();
    for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
        let reordered = RuleSet::new(perm.iter().map(|&i| base[i].clone()).collect());
        ensure!(closure(&input, &reordered)? == want, "rule order {perm:?} changes the closure");
    }
    within(start.elapsed(), Duration::from_secs(1))?;

    let strategy = (person_graph(), Just(vec![0usize, 1, 2]).prop_shuffle());
    proptest_runner(200)
        .run(&strategy, |(g, order)| {
            let once = apply_rules(&g, &rules, &aux).unwrap();
            prop_assert_eq!(&apply_rules(&once, &rules, &aux).unwrap(), &once);
            let reordered = RuleSet::new(order.iter().map(|&i| base[i].clone()).collect());
            prop_assert_eq!(&apply_rules(&g, &reordered, &aux).unwrap(), &once);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("hand closure (+13 triples), 6 rule orders, 200 random graphs".into())
}

// 4 ---------------------------------------------------------------------

fn evidence_filter() -> Check {
    let base = desk_base();
    ensure!(base.len() == 20, "{} examples in the annotated base", base.len());
    let out = distill(&base, &shape(), &desk_rules(), &desk_graph("aux_country.ttl"), &desk_fetcher());
    let got: BTreeSet<Triple> = out.examples.iter().flat_map(|e| e.graph.iter().cloned()).collect();
    let want: BTreeSet<Triple> = desk_graph("distill_expected.ttl").iter().cloned().collect();
    let disagreements = got.symmetric_difference(&want).count();
    ensure!(
        disagreements == 0,
        "{disagreements} disagreements: {:?}",
        got.symmetric_difference(&want).collect::<Vec<_>>()
    );

    let xsd = |t: &str| iri(&format!("http://www.w3.org/2001/XMLSchema#{t}"));
    let date = Literal::typed("1901-03-04", xsd("date"));
    let year = Literal::typed("1901", xsd("gYear"));
    let mut forms: Vec<(Literal, String)> = date_renderings(&date).into_iter().map(|f| (date.clone(), f)).collect();
    forms.extend(date_renderings(&year).into_iter().map(|f| (year.clone(), f)));
    let rendered: Vec<&str> = forms.iter().map(|(_, f)| f.as_str()).collect();
    ensure!(rendered == ["1901-03-04", "4 March 1901", "March 4, 1901", "4 March", "1901"], "renderings {rendered:?}");
    for (lit, form) in &forms {
        let t = Triple::new(dbr("Ada"), dbo("birthDate"), lit.clone());
        let v = check_datatype_triple(&format!("Ada was born on {form} in Nice."), &t);
        ensure!(v.supported && v.reason == EvidenceReason::DateForm, "{form:?}: {v:?}");
        let miss = check_datatype_triple("Ada was born on 14 March 1901 in Nice.", &t);
        ensure!(!miss.supported || form == "1901", "{form:?} found in the wrong date");
    }
    Ok(format!("{} triples kept, 0 disagreements, 5 date forms", got.len()))
}

// 5 ---------------------------------------------------------------------

fn exposure_base() -> (Vec<DualExample>, ShaclShape) {
    let props = ["label", "birthDate", "birthPlace", "nationality", "alias"];
    let shape = restrict_shape(&shape(), &props.iter().map(|p| prop_named(p)).collect()).unwrap();
    let base = (0..1000u64)
        .map(|i| {
            let s = dbr(&format!("P{i:04}"));
            let mut g = Graph::new();
            let mut add = |p: Iri, o: Term| {
                g.insert(Triple::new(s.clone(), p, o)).unwrap();
            };
            add(rdfs_label(), Literal::plain(format!("P{i}")).into());
            if i % 5 != 4 {
                let d = format!("19{:02}-01-01", i % 100);
                add(dbo("birthDate"), Literal::typed(d, iri("http://www.w3.org/2001/XMLSchema#date")).into());
            }
            if i % 2 == 1 {
                add(dbo("birthPlace"), dbr("Lyon").into());
            }
            if i % 7 == 3 {
                add(dbo("nationality"), dbr("France").into());
            }
            if i % 10 == 0 {
                add(dbo("alias"), Literal::plain(format!("A{i}")).into());
            }
            example(s, g, i + 1)
        })
        .collect();
    (base, shape)
}

fn exposure_sampler() -> Check {
    let (base, shape) = exposure_base();
    let threshold = 50;
    let stats = compute_stats(&base, &shape);
    let rare = split_by_frequency(&stats, &stats).map_err(|e| e.to_string())?.rare;
    ensure!(rare.len() == 3, "rare {rare:?}");
    let bearing = |p: &Iri| -> BTreeSet<usize> {
        (0..base.len()).filter(|&i| base[i].graph.property_set().contains(p)).collect()
    };
    let mut max_cooc = 0;
    for a in &rare {
        for b in rare.iter().filter(|b| *b > a) {
            max_cooc = max_cooc.max(bearing(a).intersection(&bearing(b)).count());
        }
    }

    let start = Instant::now();
    let mut sizes = Vec::new();
    for seed in 0..10 {
        let selected = sufficient_exposure_sample(&base, &shape, threshold, seed).map_err(|e| e.to_string())?;
        let unique: BTreeSet<usize> = selected.iter().copied().collect();
        ensure!(unique.len() == selected.len(), "seed {seed}: duplicate selections");
        let mut counts: BTreeMap<Iri, usize> = BTreeMap::new();
        for &i in &selected {
            for p in base[i].graph.property_set() {
                *counts.entry(p).or_default() += 1;
            }
        }
        ensure!(counts == selection_counts(&base, &selected, &shape), "seed {seed}: recount differs");
        for p in shape.properties() {
            let n = counts.get(&p).copied().unwrap_or(0);
            ensure!(n >= threshold, "seed {seed}: {p:?} has {n}");
        }
        let last = base[*selected.last().unwrap()].graph.property_set();
        ensure!(last.iter().any(|p| counts[p] - 1 < threshold), "seed {seed}: the last draw is not needed");
        for p in &rare {
            let n = counts[p];
            ensure!(n <= threshold + 2 * max_cooc, "seed {seed}: {p:?} has {n} > {threshold} + 2*{max_cooc}");
        }
        sizes.push(selected.len());
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!(
        "10 seeds, sample sizes {}..{}, max co-occurrence {max_cooc}",
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap()
    ))
}

// 6 ---------------------------------------------------------------------

fn rare_set() -> BTreeSet<Iri> {
    ["birthName", "nationality", "deathPlace", "alias"].iter().map(|p| dbo(p)).collect()
}

fn label_of(strata: &[shapeforge::sampling::Stratum], n: usize) -> Vec<Option<StratumLabel>> {
    let mut out = vec![None; n];
    for s in strata {
        for &m in &s.members {
            out[m] = Some(s.label.clone());
        }
    }
    out
}

fn stratification() -> Check {
    let dataset = examples_of(&acceptance_graph("strata10.ttl"));
    let expected: BTreeMap<Iri, StratumLabel> = read("tests/fixtures/acceptance/strata10_expected.tsv")
        .lines()
        .skip(1)
        .map(|l| {
            let (e, s) = l.split_once('\t').unwrap();
            let label =
                if s == "other" { StratumLabel::Other } else { StratumLabel::Property(prefixes().resolve(s).unwrap()) };
            (prefixes().resolve(e).unwrap(), label)
        })
        .collect();
    ensure!(dataset.len() == 10 && expected.len() == 10, "fixture sizes");
    for seed in 0..10 {
        let labels = label_of(&stratify(&dataset, &rare_set(), seed), dataset.len());
        for (e, label) in dataset.iter().zip(&labels) {
            ensure!(label.as_ref() == expected.get(&e.entity), "seed {seed}: {:?} in {label:?}", e.entity);
        }
    }

    let shape_props: Vec<Iri> = shape().properties().into_iter().collect();
    let rare = rare_set();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let random: Vec<DualExample> = (0..1000u64)
        .map(|i| {
            let s = dbr(&format!("R{i}"));
            let mut g = Graph::new();
            for p in &shape_props {
                if rng.random_bool(0.3) {
                    g.insert(Triple::new(s.clone(), p.clone(), Literal::plain("v"))).unwrap();
                }
            }
            example(s, g, i + 1)
        })
        .collect();
    for seed in 0..3 {
        let strata = stratify(&random, &rare, seed);
        ensure!(strata.iter().all(|s| !s.members.is_empty()), "empty stratum");
        let total: usize = strata.iter().map(|s| s.members.len()).sum();
        ensure!(total == random.len(), "{total} memberships for {} graphs", random.len());
        let labels = label_of(&strata, random.len());
        for (e, label) in random.iter().zip(&labels) {
            let present: BTreeSet<Iri> = e.graph.property_set().intersection(&rare).cloned().collect();
            let ok = match label {
                None => false,
                Some(StratumLabel::Other) => present.is_empty(),
                Some(StratumLabel::Property(p)) => present.contains(p),
            };
            ensure!(ok, "seed {seed}: {:?} with rare {present:?} in {label:?}", e.entity);
        }
        let mut shuffled: Vec<usize> = (0..random.len()).collect();
        shuffled.shuffle(&mut rng);
        let permuted: Vec<DualExample> = shuffled.iter().map(|&i| random[i].clone()).collect();
        let again = label_of(&stratify(&permuted, &rare, seed), random.len());
        ensure!(shuffled.iter().enumerate().all(|(j, &i)| again[j] == labels[i]), "seed {seed}: input order matters");
    }
    Ok("hand strata on 10 graphs x 10 seeds; partition over 1000 random graphs".into())
}

// 7 ---------------------------------------------------------------------

fn stratum_weights() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let n = rng.random_range(1..=8usize);
        let mut counts: BTreeMap<StratumLabel, usize> = BTreeMap::new();
        counts.insert(StratumLabel::Other, rng.random_range(1..=10_000));
        for i in 1..n {
            counts.insert(StratumLabel::Property(dbo(&format!("p{i}"))), rng.random_range(1..=10_000));
        }
        let w = weights_from_counts(&counts).map_err(|e| e.to_string())?;
        let mut sum = 0.0;
        for c in counts.values() {
            sum += *c as f64;
        }
        for (label, &c) in &counts {
            let want = (sum / c as f64).ln();
            let got = w.get(label).ok_or("missing weight")?;
            let err = if want == 0.0 { got.abs() } else { ((got - want) / want).abs() };
            ensure!(err <= 1e-12, "case {case}: {label} weight {got}, formula {want}");
            ensure!(got >= 0.0, "case {case}: negative weight");
        }
        for (a, &ca) in &counts {
            for (b, &cb) in &counts {
                let (wa, wb) = (w.get(a).unwrap(), w.get(b).unwrap());
                ensure!(ca >= cb || wa > wb, "case {case}: smaller stratum {a} has no larger weight");
                ensure!(ca != cb || wa == wb, "case {case}: equal strata weighted differently");
            }
        }
    }
    let reference = BTreeMap::from([
        (StratumLabel::Other, 900),
        (StratumLabel::Property(dbo("nationality")), 86),
        (StratumLabel::Property(dbo("alias")), 14),
    ]);
    let w = weights_from_counts(&reference).map_err(|e| e.to_string())?;
    ensure!((w.get(&StratumLabel::Property(dbo("alias"))).unwrap() - 4.2687).abs() < 5e-5, "alias weight");
    Ok("100 random count vectors".into())
}

// 8 ---------------------------------------------------------------------

const MALFORMED: &[&str] = &[
    "dbr:A rdfs:label \"unterminated .",
    "dbr:A rdfs:label \"x\"",
    "dbr:A rdfs:label .",
    "dbr:A ; rdfs:label \"x\" .",
    "nope:A rdfs:label \"x\" .",
    "dbr:A rdfs:label \"x\"^^ .",
    "dbr:A rdfs:label \"x\" ,, \"y\" .",
    "dbr:A\\q rdfs:label \"x\" .",
    "dbr:A rdfs:label \"bad \\u12 escape\" .",
    "\"x\" rdfs:label dbr:A .",
];

fn linearization() -> Check {
    let p = prefixes();
    proptest_runner(1000)
        .run(&entity_graph(), |g| {
            let text = encode_turtlelight(&g, &p).unwrap().text;
            let back = decode_turtlelight(&text, &p).map_err(|e| TestCaseError::fail(format!("{e}: {text}")))?;
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(encode_turtlelight(&back, &p).unwrap().text, text);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    for case in MALFORMED {
        let outcome = catch_unwind(AssertUnwindSafe(|| decode_turtlelight(case, &p)));
        match outcome {
            Ok(Err(LinearizeError::Malformed { .. })) => {}
            Ok(other) => return Err(format!("{case:?} gave {other:?}")),
            Err(_) => return Err(format!("{case:?} panicked")),
        }
    }
    Ok(format!("1000 round trips, {} malformed inputs rejected", MALFORMED.len()))
}

// 9 ---------------------------------------------------------------------

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

struct Brute {
    graphs: Vec<(usize, usize, usize)>,
    properties: Vec<(Iri, usize, usize, usize)>,
    precision_avg: f64,
    recall_avg: f64,
    micro: f64,
    macro_: f64,
    pooled: (f64, f64, f64),
    wellformed: Option<f64>,
    subject_rate: Option<f64>,
    missing: usize,
    unknown: usize,
    out_of_shape: usize,
}

fn brute_force(gold: &[DualExample], preds: &[Prediction], shape: &ShaclShape) -> Brute {
    let in_shape: Vec<Iri> = shape.properties().into_iter().collect();
    let keep = |t: &Triple| in_shape.contains(&t.predicate);
    let mut graphs = Vec::new();
    let mut pooled_triples: Vec<(Triple, char)> = Vec::new();
    let (mut present, mut wellformed, mut subject_ok, mut out_of_shape) = (0, 0, 0, 0);
    for g in gold {
        let gt: Vec<Triple> = g.graph.iter().filter(|t| keep(t)).cloned().collect();
        let pred = preds.iter().find(|p| p.entity == g.entity);
        let mut pt: Vec<Triple> = Vec::new();
        if let Some(p) = pred {
            present += 1;
            if let Some(d) = &p.decoded {
                wellformed += 1;
                if d.iter().all(|t| t.subject == p.entity) {
                    subject_ok += 1;
                }
                for t in d.iter() {
                    if keep(t) {
                        pt.push(t.clone());
                    } else {
                        out_of_shape += 1;
                    }
                }
            }
        }
        let tp = gt.iter().filter(|t| pt.contains(t)).count();
        graphs.push((tp, pt.len() - tp, gt.len() - tp));
        for t in &gt {
            pooled_triples.push((t.clone(), if pt.contains(t) { 't' } else { 'n' }));
        }
        for t in pt.iter().filter(|t| !gt.contains(t)) {
            pooled_triples.push((t.clone(), 'p'));
        }
    }
    let mut properties = Vec::new();
    for p in &in_shape {
        let of = |k: char| pooled_triples.iter().filter(|(t, c)| t.predicate == *p && *c == k).count();
        let (tp, fp, fn_) = (of('t'), of('p'), of('n'));
        if tp + fp + fn_ > 0 {
            properties.push((p.clone(), tp, fp, fn_));
        }
    }
    let mean = |xs: Vec<f64>| if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / xs.len() as f64 };
    let prf = |tp: usize, fp: usize, fn_: usize| {
        let (p, r) = (ratio(tp, tp + fp), ratio(tp, tp + fn_));
        (p, r, harmonic(p, r))
    };
    let (tp, fp, fn_) = graphs.iter().fold((0, 0, 0), |a, g| (a.0 + g.0, a.1 + g.1, a.2 + g.2));
    Brute {
        precision_avg: mean(graphs.iter().map(|g| prf(g.0, g.1, g.2).0).collect()),
        recall_avg: mean(graphs.iter().map(|g| prf(g.0, g.1, g.2).1).collect()),
        micro: mean(graphs.iter().map(|g| prf(g.0, g.1, g.2).2).collect()),
        macro_: mean(properties.iter().map(|p| prf(p.1, p.2, p.3).2).collect()),
        pooled: prf(tp, fp, fn_),
        wellformed: (present > 0).then(|| wellformed as f64 / present as f64),
        subject_rate: (wellformed > 0).then(|| subject_ok as f64 / wellformed as f64),
        missing: gold.len() - present,
        unknown: preds.iter().filter(|p| !gold.iter().any(|g| g.entity == p.entity)).count(),
        out_of_shape,
        graphs,
        properties,
    }
}

fn random_pair(rng: &mut ChaCha8Rng) -> (Vec<DualExample>, Vec<Prediction>) {
    let predicates: Vec<Iri> =
        ["label", "alias", "birthName", "birthPlace", "nationality", "spouse"].iter().map(|p| prop_named(p)).collect();
    let objects: Vec<Term> = vec![
        Literal::plain("a").into(),
        Literal::plain("b").into(),
        Literal::lang("a", "en").into(),
        dbr("X").into(),
        dbr("Y").into(),
    ];
    let random_triple = |rng: &mut ChaCha8Rng, s: &Iri| {
        Triple::new(s.clone(), predicates.choose(rng).unwrap().clone(), objects.choose(rng).unwrap().clone())
    };
    let n = rng.random_range(1..=6);
    let mut gold = Vec::new();
    let mut preds = Vec::new();
    for j in 0..n {
        let e = dbr(&format!("E{j}"));
        let gt: Vec<Triple> = (0..rng.random_range(0..6)).map(|_| random_triple(rng, &e)).collect();
        gold.push(example(e.clone(), Graph::from_triples(gt.clone()), j as u64 + 1));
        let roll = rng.random_range(0..20);
        if roll < 3 {
            continue;
        }
        if roll < 6 {
            preds.push(Prediction::from_raw(e, "dbr:E rdfs:label", &prefixes()));
            continue;
        }
        let mut pt: Vec<Triple> = gt.iter().filter(|_| rng.random_bool(0.6)).cloned().collect();
        for _ in 0..rng.random_range(0..4) {
            pt.push(random_triple(rng, &e));
        }
        if rng.random_bool(0.1) {
            pt.push(random_triple(rng, &dbr("Stranger")));
        }
        preds.push(Prediction::from_graph(e, Graph::from_triples(pt), ""));
    }
    if rng.random_bool(0.2) {
        preds.push(Prediction::from_graph(dbr("Unknown"), Graph::new(), ""));
    }
    (gold, preds)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

fn compare(r: &EvalReport, b: &Brute) -> Result<(), String> {
    ensure!(r.graphs.len() == b.graphs.len(), "graph count");
    for (g, &(tp, fp, fn_)) in r.graphs.iter().zip(&b.graphs) {
        ensure!(
            (g.counts.tp, g.counts.fp, g.counts.fn_) == (tp, fp, fn_),
            "{:?} counts {:?} vs {:?}",
            g.entity,
            g.counts,
            (tp, fp, fn_)
        );
        let p = ratio(tp, tp + fp);
        let rc = ratio(tp, tp + fn_);
        ensure!(close(g.precision, p) && close(g.recall, rc) && close(g.f1, harmonic(p, rc)), "{:?} scores", g.entity);
    }
    ensure!(
        r.properties.len() == b.properties.len(),
        "property count {} vs {}",
        r.properties.len(),
        b.properties.len()
    );
    for (p, tp, fp, fn_) in &b.properties {
        let s = r.properties.get(p).ok_or(format!("no score for {p:?}"))?;
        ensure!((s.counts.tp, s.counts.fp, s.counts.fn_) == (*tp, *fp, *fn_), "{p:?} pooled counts");
        ensure!(close(s.f1, harmonic(ratio(*tp, tp + fp), ratio(*tp, tp + fn_))), "{p:?} f1");
    }
    let a = &r.aggregates;
    ensure!(close(a.precision_example_avg, b.precision_avg), "example-averaged precision");
    ensure!(close(a.recall_example_avg, b.recall_avg), "example-averaged recall");
    ensure!(close(a.f1_micro, b.micro), "f1_micro {} vs {}", a.f1_micro, b.micro);
    ensure!(close(a.f1_macro, b.macro_), "f1_macro {} vs {}", a.f1_macro, b.macro_);
    ensure!(
        close(a.precision_pooled, b.pooled.0) && close(a.recall_pooled, b.pooled.1) && close(a.f1_pooled, b.pooled.2),
        "pooled"
    );
    let opt = |x: Option<f64>, y: Option<f64>| match (x, y) {
        (Some(x), Some(y)) => close(x, y),
        (None, None) => true,
        _ => false,
    };
    ensure!(opt(a.wellformed_rate, b.wellformed), "well-formed rate {:?} vs {:?}", a.wellformed_rate, b.wellformed);
    ensure!(
        opt(a.subject_match_rate, b.subject_rate),
        "subject match {:?} vs {:?}",
        a.subject_match_rate,
        b.subject_rate
    );
    ensure!(r.missing_predictions == b.missing, "missing");
    ensure!(r.unknown_predictions == b.unknown, "unknown");
    ensure!(r.out_of_shape == b.out_of_shape, "out of shape {} vs {}", r.out_of_shape, b.out_of_shape);
    Ok(())
}

fn label_triple(entity: &str, value: &str) -> Triple {
    Triple::new(dbr(entity), rdfs_label(), Literal::plain(value))
}

fn correction_cases() -> Result<(), String> {
    let graph = |e: &str, gold: &[&str], pred: &[&str]| ScoredGraph {
        entity: dbr(e),
        gold: gold.iter().map(|v| label_triple(e, v)).collect(),
        predicted: pred.iter().map(|v| label_triple(e, v)).collect(),
        status: PredictionStatus::WellFormed,
    };
    let inputs = EvalInputs {
        graphs: vec![graph("E", &["a", "b"], &["a", "c"]), graph("F", &["d"], &[])],
        subject_match_rate: None,
        unknown_predictions: 0,
        out_of_shape: 0,
    };
    let f1 = |tp: usize, fp: usize, fn_: usize| harmonic(ratio(tp, tp + fp), ratio(tp, tp + fn_));
    // (rows, applied, unmatched, totals, per-graph counts)
    type Case = (&'static str, usize, usize, (usize, usize, usize), [(usize, usize, usize); 2]);
    let cases: [Case; 6] = [
        ("E,c,FP,new-fact", 1, 0, (2, 0, 2), [(2, 0, 1), (0, 0, 1)]),
        ("E,b,FN,kg-noise", 1, 0, (1, 1, 1), [(1, 1, 0), (0, 0, 1)]),
        ("E,c,FP,kg-noise", 0, 0, (1, 1, 2), [(1, 1, 1), (0, 0, 1)]),
        ("E,b,FN,omission", 0, 0, (1, 1, 2), [(1, 1, 1), (0, 0, 1)]),
        ("E,b,FP,new-fact;G,a,FN,kg-noise", 0, 2, (1, 1, 2), [(1, 1, 1), (0, 0, 1)]),
        ("E,c,FP,new-fact;E,b,FN,kg-noise;F,d,FN,kg-noise", 3, 0, (2, 0, 0), [(2, 0, 0), (0, 0, 0)]),
    ];
    for (n, (rows, applied, unmatched, totals, per_graph)) in cases.iter().enumerate() {
        let mut csv = String::from("entity,triple,class,verdict\n");
        for row in rows.split(';') {
            let f: Vec<&str> = row.split(',').collect();
            csv.push_str(&format!(
                "http://dbpedia.org/resource/{e},\"dbr:{e} rdfs:label \"\"{}\"\" .\",{},{}\n",
                f[1],
                f[2],
                f[3],
                e = f[0]
            ));
        }
        let set = CorrectionSet::read_csv(csv.as_bytes(), &prefixes()).map_err(|e| e.to_string())?;
        let out = apply_corrections(&inputs, &set);
        ensure!(out.applied == *applied, "case {}: applied {}", n + 1, out.applied);
        ensure!(out.unmatched.len() == *unmatched, "case {}: unmatched {}", n + 1, out.unmatched.len());
        let t = out.report.totals;
        ensure!((t.tp, t.fp, t.fn_) == *totals, "case {}: totals {t:?}", n + 1);
        let micro = (f1(per_graph[0].0, per_graph[0].1, per_graph[0].2)
            + f1(per_graph[1].0, per_graph[1].1, per_graph[1].2))
            / 2.0;
        for (g, want) in out.report.graphs.iter().zip(per_graph) {
            ensure!((g.counts.tp, g.counts.fp, g.counts.fn_) == *want, "case {}: {:?} counts", n + 1, g.entity);
        }
        ensure!(out.report.aggregates.f1_micro == micro, "case {}: f1_micro {}", n + 1, out.report.aggregates.f1_micro);
        ensure!(out.report.aggregates.f1_pooled == f1(totals.0, totals.1, totals.2), "case {}: pooled f1", n + 1);
    }
    Ok(())
}

fn scoring() -> Check {
    let shape = shape();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for case in 0..50 {
        let (gold, preds) = random_pair(&mut rng);
        let r = score(&gold, &preds, &shape);
        compare(&r, &brute_force(&gold, &preds, &shape)).map_err(|e| format!("pair {case}: {e}"))?;
    }

    let g1 = example(dbr("One"), Graph::from_triples([label_triple("One", "a")]), 1);
    let g2 = example(dbr("Two"), Graph::from_triples([label_triple("Two", "a"), label_triple("Two", "b")]), 2);
    let preds = vec![
        Prediction::from_graph(dbr("One"), Graph::from_triples([label_triple("One", "a")]), ""),
        Prediction::from_graph(
            dbr("Two"),
            Graph::from_triples([label_triple("Two", "a"), label_triple("Two", "c")]),
            "",
        ),
    ];
    let r = score(&[g1, g2], &preds, &shape);
    ensure!(r.graphs[0].f1 == 1.0 && r.graphs[1].f1 == 0.5, "per-graph f1 {} {}", r.graphs[0].f1, r.graphs[1].f1);
    ensure!(r.aggregates.f1_micro == 0.75, "f1_micro {}", r.aggregates.f1_micro);

    correction_cases()?;
    Ok("50 random pairs, micro example 0.75, 6 correction cases".into())
}

// 10 --------------------------------------------------------------------

fn baseline_alignment() -> Check {
    let p = prefixes();
    let mapping =
        RelationMapping::read_csv(read("tests/fixtures/desk/table2.csv").as_bytes(), &p).map_err(|e| e.to_string())?;
    ensure!(mapping.len() == 5, "{} mappings", mapping.len());
    let text = read("tests/fixtures/desk/rebel.jsonl");
    let triples = read_baseline_triples(&text).map_err(|e| e.to_string())?;
    let expected: Vec<Option<Iri>> = text
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            v["expected_property"].as_str().map(iri)
        })
        .collect();

    let mut labeled = 0;
    let mut labels = BTreeSet::new();
    for (t, want) in triples.iter().zip(&expected) {
        let got = mapping.get(&t.relation).map(|(p, _)| p.clone());
        ensure!(got == *want, "{:?} mapped to {got:?}, expected {want:?}", t.relation);
        if want.is_some() {
            labeled += 1;
            labels.insert(t.relation.clone());
        }
    }
    ensure!(labels.len() == 5, "fixture covers {} of the 5 labels", labels.len());

    let linker: LinkTable = read("tests/fixtures/desk/linker.tsv")
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .map(|(text, target)| (text.to_string(), iri(target)))
        .collect();
    let entities: Vec<Iri> = triples.iter().map(|t| t.entity.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let aux = desk_graph("aux_country.ttl");
    let out = align_baseline(&entities, &triples, &mapping, &linker, &desk_rules(), &aux, &p);
    ensure!(out.predictions.len() == entities.len(), "one prediction per entity");
    let graph_of = |e: &Iri| {
        out.predictions.iter().find(|pr| pr.entity == *e).and_then(|pr| pr.decoded.clone()).unwrap_or_default()
    };
    for (t, want) in triples.iter().zip(&expected) {
        let Some(want) = want else { continue };
        let linkable = mapping.get(&t.relation).map(|(_, k)| *k) == Some(shapeforge::shacl::ConstraintKind::Datatype)
            || linker.link(&t.object).ok().flatten().is_some();
        if linkable {
            ensure!(graph_of(&t.entity).with_predicate(want).next().is_some(), "{:?} lacks {want:?}", t.entity);
        }
    }
    let mut enriched = 0;
    for e in &entities {
        let g = graph_of(e);
        for (date, year) in [("birthDate", "birthYear"), ("deathDate", "deathYear")] {
            for t in g.with_predicate(&dbo(date)) {
                let y = Literal::typed(&t.object.lexical_form()[..4], iri("http://www.w3.org/2001/XMLSchema#gYear"));
                ensure!(g.contains(&Triple::new(e.clone(), dbo(year), y)), "{e:?} lacks {year}");
                enriched += 1;
            }
        }
    }
    ensure!(enriched > 0, "no dates to enrich");
    Ok(format!("{labeled} labeled triples agree, {enriched} years derived, {} unlinked", out.unlinked))
}

// 11 --------------------------------------------------------------------

fn run_pipeline(dir: &Path, seed: u64) -> Result<(), String> {
    let p = prefixes();
    let shape = shape();
    let write = |name: &str, text: &str| std::fs::write(dir.join(name), text).map_err(|e| e.to_string());

    let base = desk_base();
    let out = distill(&base, &shape, &desk_rules(), &desk_graph("aux_country.ttl"), &desk_fetcher());
    let mut text = Vec::new();
    shapeforge::ingest::write_dual_base(&mut text, &out.examples).map_err(|e| e.to_string())?;
    write("distilled.jsonl", &String::from_utf8(text).unwrap())?;

    let stats = compute_stats(&out.examples, &shape);
    write("stats.tsv", &stats.to_tsv(&p))?;
    let split = split_by_frequency(&stats, &stats).map_err(|e| e.to_string())?;
    write("split.json", &serde_json::to_string_pretty(&split).unwrap())?;

    let mut dataset = out.examples.clone();
    let mut rare: Vec<&Iri> = split.rare.iter().collect();
    rare.sort_by_key(|r| (stats.get(r).map_or(0, |c| c.examples), (*r).clone()));
    for (i, target) in rare.into_iter().enumerate() {
        let threshold = stats.get(target).map_or(0, |c| c.examples as usize) + 2;
        if let Ok(aug) =
            augment_template(&out.examples, &dataset, target, threshold, AugmentStrategy::Kr1, seed + i as u64)
        {
            dataset = aug.dataset;
        }
    }
    let strata = stratify(&dataset, &split.rare, seed);
    let weights = compute_weights(&strata).map_err(|e| e.to_string())?;
    let folds = assign_folds(&strata, 3, seed).map_err(|e| e.to_string())?;
    let options = ExportOptions { seed, spec_hash: "fixture".into(), format: AbstractFormat::Markdown };
    export_training_set(&dir.join("export"), &dataset, &strata, &weights, &folds, &p, &options)
        .map_err(|e| e.to_string())?;

    let preds = read_predictions(&read("tests/fixtures/desk/predictions.jsonl"), &p).map_err(|e| e.to_string())?;
    let inputs = score_inputs(&out.examples, &preds, &shape);
    let plain = report(&inputs);
    let corrections = CorrectionSet::read_csv(read("tests/fixtures/desk/corrections.csv").as_bytes(), &p)
        .map_err(|e| e.to_string())?;
    let corrected = apply_corrections(&inputs, &corrections);
    write("report.json", &serde_json::to_string_pretty(&plain).unwrap())?;
    write("corrected.json", &serde_json::to_string_pretty(&corrected.report).unwrap())?;
    write("breakdown.tsv", &per_property_breakdown(&[("plain", &plain), ("corrected", &corrected.report)]).to_tsv(&p))?;
    Ok(())
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_pipeline(a.path(), 42)?;
    run_pipeline(b.path(), 42)?;
    let (fa, fb) = (files(a.path()), files(b.path()));
    ensure!(fa.keys().eq(fb.keys()), "different file sets {:?} vs {:?}", fa.keys(), fb.keys());
    let differing: Vec<&String> = fa.keys().filter(|k| fa[*k] != fb[*k]).collect();
    ensure!(differing.is_empty(), "files differ: {differing:?}");
    ensure!(fa.keys().any(|k| k.ends_with("train.jsonl")) && fa.contains_key("report.json"), "missing outputs");
    Ok(format!("{} files byte-identical across two runs", fa.len()))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("mean-frequency threshold", mean_frequency_threshold),
        ("pattern space", pattern_space),
        ("rule closure", rule_closure),
        ("evidence filter", evidence_filter),
        ("sufficient-exposure sampler", exposure_sampler),
        ("stratification", stratification),
        ("stratum weights", stratum_weights),
        ("linearization", linearization),
        ("scoring", scoring),
        ("baseline alignment", baseline_alignment),
        ("end-to-end determinism", determinism),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(check).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail} ({secs:.2}s)", n + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {why} ({secs:.2}s)", n + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
