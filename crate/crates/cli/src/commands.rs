//! One function per subcommand. Every input goes through
//! `RunManifest::read_input` so it is digested and checked against its sidecar.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use rankforge::corpus::{cap_corpus, parse_conllu_with_provenance};
use rankforge::dataset_features::CorpusStats;
use rankforge::evaluation::{family_pair_tally, loo_cv, rank_divergence, DivergenceRow, LooReport};
use rankforge::performance::{read_performance_csv, PerformanceRecord};
use rankforge::ranking::relevance::gold_order;
use rankforge::ranking::{
    feature_importance, top_k, FeatureConfig, FeatureGain, FeatureStores, GbdtModel, PairFeatureTable,
    RankingDataset, SyntacticSource,
};
use rankforge::typology::{
    crop_matrix, impute_knn, impute_missforest, load_families, load_geography, load_lineages, load_matrix_with,
    CellPolicy, TypologyStore,
};
use serde::Serialize;

use crate::artifact::{read_sidecar, write_artifact, RunManifest};
use crate::cli::{
    Command, DivergenceArgs, ExtractArgs, ImportanceArgs, ImputeArgs, LooArgs, MakeGoldArgs, RankArgs, TrainArgs,
};
use crate::error::{CliError, CliResult};
use crate::settings::{ImputeMethod, Settings};

pub fn run(command: &Command, settings: &Settings) -> CliResult<()> {
    match command {
        Command::ExtractFeatures(a) => extract_features(a, settings),
        Command::Impute(a) => impute(a, settings),
        Command::MakeGold(a) => make_gold(a, settings),
        Command::Train(a) => train(a, settings),
        Command::Rank(a) => rank(a, settings),
        Command::EvaluateLoo(a) => evaluate_loo(a, settings),
        Command::Importance(a) => importance(a, settings),
        Command::AnalyzeDivergence(a) => analyze_divergence(a, settings),
    }
}

/// Splits `KEY=PATH`; without `=` the key is `None`.
fn split_labeled(spec: &str) -> (Option<&str>, PathBuf) {
    match spec.split_once('=') {
        Some((k, p)) if !k.is_empty() && !k.contains(['/', '\\']) => (Some(k), PathBuf::from(p)),
        _ => (None, PathBuf::from(spec)),
    }
}

fn require_labeled(spec: &str, flag: &str) -> CliResult<(String, PathBuf)> {
    match split_labeled(spec) {
        (Some(k), p) => Ok((k.to_string(), p)),
        (None, _) => Err(CliError::Input(format!("{flag} expects LANG=PATH, got {spec:?}"))),
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

/// Refuses to write over a file that was read as input.
fn guard_output(out: &Path, manifest: &RunManifest) -> CliResult<()> {
    let Ok(out) = out.canonicalize() else {
        return Ok(());
    };
    for digest in manifest.inputs.values() {
        if Path::new(&digest.path).canonicalize().is_ok_and(|p| p == out) {
            return Err(CliError::Input(format!("output {} would overwrite an input", out.display())));
        }
    }
    Ok(())
}

fn utf8(bytes: Vec<u8>, path: &Path) -> CliResult<String> {
    String::from_utf8(bytes).map_err(|_| CliError::Input(format!("{}: not valid UTF-8", path.display())))
}

fn read_performance(manifest: &mut RunManifest, role: &str, path: &Path) -> CliResult<Vec<PerformanceRecord>> {
    let bytes = manifest.read_input(role, path)?;
    Ok(read_performance_csv(bytes.as_slice())?)
}

/// Pair features plus the feature configuration recorded in their sidecar.
fn read_features(
    manifest: &mut RunManifest,
    role: &str,
    path: &Path,
) -> CliResult<(PairFeatureTable, Option<FeatureConfig>)> {
    let bytes = manifest.read_input(role, path)?;
    let table = PairFeatureTable::read_tsv(bytes.as_slice())?;
    let config = read_sidecar(path)?.and_then(|s| s.manifest.feature_config);
    Ok((table, config))
}

fn read_model(manifest: &mut RunManifest, role: &str, path: &Path) -> CliResult<GbdtModel> {
    let bytes = manifest.read_input(role, path)?;
    Ok(GbdtModel::from_json(&utf8(bytes, path)?)?)
}

fn read_store(manifest: &mut RunManifest, role: &str, path: &Path) -> CliResult<TypologyStore> {
    let bytes = manifest.read_input(role, path)?;
    Ok(load_matrix_with(bytes.as_slice(), CellPolicy::Unit)?.to_store()?)
}

fn extract_features(a: &ExtractArgs, s: &Settings) -> CliResult<()> {
    let mut manifest = RunManifest::new("extract-features", s);
    manifest.feature_config = Some(s.features);
    let config = s.features;

    let mut stores = FeatureStores { dataset_options: s.dataset, ..FeatureStores::default() };
    stores.lineages = load_lineages(manifest.read_input("lineages", &a.lineages)?.as_slice())?;
    stores.geography = load_geography(manifest.read_input("geography", &a.geography)?.as_slice())?;
    if let Some(p) = &a.uriel_syntax {
        stores.syntactic_uriel = Some(read_store(&mut manifest, "syntax:uriel", p)?);
    }
    if let Some(p) = &a.grambank_syntax {
        stores.syntactic_grambank = Some(read_store(&mut manifest, "syntax:grambank", p)?);
    }
    let needed = match config.syntactic_source {
        SyntacticSource::Uriel => ("--uriel-syntax", stores.syntactic_uriel.is_none()),
        SyntacticSource::Grambank => ("--grambank-syntax", stores.syntactic_grambank.is_none()),
    };
    if needed.1 {
        return Err(CliError::Input(format!("{} is required for the selected syntactic source", needed.0)));
    }
    stores.phonological = Some(read_store(&mut manifest, "phonology", &a.phonology)?);
    stores.inventory = Some(read_store(&mut manifest, "inventory", &a.inventory)?);

    let load_corpora = |manifest: &mut RunManifest, specs: &[String], side: &str, cap: usize| {
        let mut out = BTreeMap::new();
        for spec in specs {
            let (code, path) = require_labeled(spec, &format!("--{side}-corpus"))?;
            let bytes = manifest.read_input(&format!("corpus:{side}:{code}"), &path)?;
            let corpus = parse_conllu_with_provenance(&bytes, &code, &path.display().to_string())?;
            let used = if s.full_corpus_stats { corpus } else { cap_corpus(&corpus, cap) };
            if out.insert(code.clone(), CorpusStats::from_corpus(&used, s.dataset.casefold)).is_some() {
                return Err(CliError::Input(format!("{code} given twice as a {side} corpus")));
            }
        }
        Ok::<_, CliError>(out)
    };
    stores.target_corpora = load_corpora(&mut manifest, &a.target_corpora, "target", s.target_cap)?;
    stores.source_corpora = load_corpora(&mut manifest, &a.source_corpora, "source", s.source_cap)?;

    let pick = |given: &[String], corpora: &BTreeMap<String, CorpusStats>, what: &str| {
        let codes: Vec<String> = if given.is_empty() { corpora.keys().cloned().collect() } else { given.to_vec() };
        if codes.is_empty() {
            Err(CliError::Input(format!("no {what} languages; pass --{what}s or --{what}-corpus")))
        } else {
            Ok(codes)
        }
    };
    let targets = pick(&a.targets, &stores.target_corpora, "target")?;
    let sources = pick(&a.sources, &stores.source_corpora, "source")?;

    let table = stores.assemble_all(&targets, &sources, &config, s.include_self_pairs)?;
    info!("{} pair rows, {} features", table.rows.len(), table.feature_names.len());
    let mut bytes = Vec::new();
    table.write_tsv(&mut bytes)?;
    guard_output(&a.out, &manifest)?;
    write_artifact(&a.out, &bytes, &manifest)
}

#[derive(Serialize)]
struct ImputeReportFile<'a> {
    report: &'a rankforge::typology::ImputationReport,
    manifest: &'a RunManifest,
}

fn impute(a: &ImputeArgs, s: &Settings) -> CliResult<()> {
    let mut manifest = RunManifest::new("impute", s);
    let bytes = manifest.read_input("matrix", &a.matrix)?;
    let policy = if s.impute.crop { CellPolicy::Numeric } else { CellPolicy::Binary };
    let mut matrix = load_matrix_with(bytes.as_slice(), policy)?;
    let mut crop = None;
    if s.impute.crop {
        let (cropped, report) = crop_matrix(&matrix, s.impute.feature_threshold, s.impute.language_threshold)?;
        info!(
            "crop kept {} languages x {} features; residual missing {:.4}",
            cropped.n_languages(),
            cropped.n_features(),
            report.residual_missing_fraction
        );
        matrix = cropped;
        crop = Some(report);
    }
    let (imputed, mut report) = match s.impute.method {
        ImputeMethod::Missforest => impute_missforest(&matrix, &s.missforest())?,
        ImputeMethod::Knn => impute_knn(&matrix, s.impute.k)?,
    };
    report.crop = crop;

    let mut csv = Vec::new();
    imputed.write_delimited(&mut csv, b',')?;
    let report_path = a.report.clone().unwrap_or_else(|| {
        let mut p = a.out.as_os_str().to_owned();
        p.push(".report.json");
        PathBuf::from(p)
    });
    let mut json = serde_json::to_string_pretty(&ImputeReportFile { report: &report, manifest: &manifest })
        .map_err(|e| CliError::Core(e.into()))?;
    json.push('\n');
    guard_output(&a.out, &manifest)?;
    guard_output(&report_path, &manifest)?;
    write_artifact(&a.out, &csv, &manifest)?;
    write_artifact(&report_path, json.as_bytes(), &manifest)
}

fn make_gold(a: &MakeGoldArgs, s: &Settings) -> CliResult<()> {
    let mut manifest = RunManifest::new("make-gold", s);
    let records = read_performance(&mut manifest, "performance", &a.performance)?;
    let mut by_target: BTreeMap<&str, Vec<&PerformanceRecord>> = BTreeMap::new();
    for r in &records {
        if r.source != r.target || s.include_self_pairs {
            by_target.entry(&r.target).or_default().push(r);
        }
    }
    let mut out = String::from("target\tsource\tperformance\tgold_rank\trelevance\n");
    for (target, recs) in by_target {
        let candidates = recs.iter().map(|r| rankforge::ranking::Candidate::new(r.source.clone(), r.score)).collect();
        let gold = rankforge::ranking::GoldRankingGroup::new(target, candidates, s.eval.p, s.eval.relevance_convention)?;
        for (rank, &i) in gold_order(&gold.candidates).iter().enumerate() {
            let c = &gold.candidates[i];
            writeln!(out, "{target}\t{}\t{}\t{}\t{}", c.source_code, c.performance, rank + 1, gold.relevance[i])
                .expect("write to string");
        }
    }
    guard_output(&a.out, &manifest)?;
    write_artifact(&a.out, out.as_bytes(), &manifest)
}

fn build_dataset(table: &PairFeatureTable, perf: &[PerformanceRecord], s: &Settings) -> CliResult<RankingDataset> {
    Ok(RankingDataset::from_tables(table, perf, s.eval.p, s.eval.relevance_convention, s.include_self_pairs)?)
}

fn train(a: &TrainArgs, s: &Settings) -> CliResult<()> {
    let mut manifest = RunManifest::new("train", s);
    let (table, config) = read_features(&mut manifest, "features", &a.features)?;
    let perf = read_performance(&mut manifest, "performance", &a.performance)?;
    manifest.feature_config = config;
    let dataset = build_dataset(&table, &perf, s)?;
    let mut model = rankforge::ranking::train(&dataset, &s.train, config)?;
    model.manifest = Some(serde_json::to_value(&manifest).map_err(|e| CliError::Core(e.into()))?);
    let mut json = model.to_json()?;
    json.push('\n');
    guard_output(&a.out, &manifest)?;
    write_artifact(&a.out, json.as_bytes(), &manifest)
}

fn rank(a: &RankArgs, s: &Settings) -> CliResult<()> {
    let mut manifest = RunManifest::new("rank", s);
    let model = read_model(&mut manifest, "model", &a.model)?;
    let (table, config) = read_features(&mut manifest, "features", &a.features)?;
    if let (Some(m), Some(f)) = (model.config, config) {
        if m != f {
            return Err(CliError::Input(format!(
                "model was trained on setting {}-{} features but {} holds {}-{}",
                m.syntactic_source,
                m.setting(),
                a.features.display(),
                f.syntactic_source,
                f.setting()
            )));
        }
    }
    let rows: Vec<_> = table
        .rows
        .into_iter()
        .filter(|r| r.target_code == a.target && (s.include_self_pairs || r.source_code != a.target))
        .collect();
    if rows.is_empty() {
        return Err(CliError::Input(format!("no feature rows for target {:?}", a.target)));
    }
    let scores = model.predict(&rows)?;
    let order = rankforge::ranking::rank_by_score(rows.iter().map(|r| r.source_code.as_str()), &scores);
    let score_of: BTreeMap<&str, f64> = rows.iter().map(|r| r.source_code.as_str()).zip(scores.iter().copied()).collect();
    let n = if a.all { order.len() } else { s.top_k.min(order.len()) };
    let mut out = String::new();
    for code in &order[..n] {
        if a.scores {
            writeln!(out, "{code}\t{}", score_of[code.as_str()]).expect("write to string");
        } else {
            writeln!(out, "{code}").expect("write to string");
        }
    }
    print!("{out}");
    Ok(())
}

#[derive(Serialize)]
struct LooRun<'a> {
    features: &'a str,
    performance: &'a str,
    report: &'a LooReport,
    importance: Vec<FeatureGain>,
}

#[derive(Serialize)]
struct LooFile<'a> {
    runs: Vec<LooRun<'a>>,
    manifest: &'a RunManifest,
}

fn default_feature_label(path: &Path, config: Option<FeatureConfig>) -> String {
    match config {
        Some(c) => format!("{}-{}", c.syntactic_source, c.setting()),
        None => file_stem(path),
    }
}

fn unique_labels(labels: &[String], flag: &str) -> CliResult<()> {
    let mut seen = std::collections::BTreeSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(CliError::Input(format!("duplicate {flag} label {l:?}; name inputs with LABEL=PATH")));
        }
    }
    Ok(())
}

fn evaluate_loo(a: &LooArgs, s: &Settings) -> CliResult<()> {
    let mut manifest = RunManifest::new("evaluate-loo", s);
    let mut feature_sets = Vec::new();
    for spec in &a.features {
        let (label, path) = split_labeled(spec);
        let role_hint = label.map(String::from).unwrap_or_else(|| file_stem(&path));
        let (table, config) = read_features(&mut manifest, &format!("features:{role_hint}"), &path)?;
        let label = label.map(String::from).unwrap_or_else(|| default_feature_label(&path, config));
        feature_sets.push((label, table, config));
    }
    let mut perf_sets = Vec::new();
    for spec in &a.performance {
        let (name, path) = split_labeled(spec);
        let name = name.map(String::from).unwrap_or_else(|| file_stem(&path));
        let records = read_performance(&mut manifest, &format!("performance:{name}"), &path)?;
        perf_sets.push((name, records));
    }
    unique_labels(&feature_sets.iter().map(|f| f.0.clone()).collect::<Vec<_>>(), "--features")?;
    unique_labels(&perf_sets.iter().map(|p| p.0.clone()).collect::<Vec<_>>(), "--performance")?;

    let mut reports = Vec::new();
    for (flabel, table, config) in &feature_sets {
        for (pname, perf) in &perf_sets {
            info!("leave-one-out: {flabel} x {pname}");
            let dataset = build_dataset(table, perf, s)?;
            let report = loo_cv(&dataset, &s.train, &s.eval, *config, s.std_kind)?;
            reports.push((flabel.as_str(), pname.as_str(), report));
        }
    }

    let mut summary = String::from("config");
    for (pname, _) in &perf_sets {
        summary.push('\t');
        summary.push_str(pname);
    }
    summary.push('\n');
    for (i, (flabel, _, _)) in feature_sets.iter().enumerate() {
        summary.push_str(flabel);
        for j in 0..perf_sets.len() {
            let r = &reports[i * perf_sets.len() + j].2;
            write!(summary, "\t{:.4} ({:.4})", r.mean, r.std).expect("write to string");
        }
        summary.push('\n');
    }

    let mut per_target = format!("config\tperformance\ttarget\tndcg@{}\tpredicted_top\n", s.eval.p);
    for (flabel, pname, r) in &reports {
        for t in &r.per_target {
            let top: Vec<&str> = t.predicted_order.iter().take(s.eval.p).map(String::as_str).collect();
            writeln!(per_target, "{flabel}\t{pname}\t{}\t{}\t{}", t.target, t.ndcg, top.join(","))
                .expect("write to string");
        }
    }

    let runs = reports
        .iter()
        .map(|(f, p, r)| {
            Ok(LooRun { features: f, performance: p, report: r, importance: feature_importance(&r.models)? })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut json = serde_json::to_string_pretty(&LooFile { runs, manifest: &manifest })
        .map_err(|e| CliError::Core(e.into()))?;
    json.push('\n');

    write_artifact(&a.out_dir.join("loo_summary.tsv"), summary.as_bytes(), &manifest)?;
    write_artifact(&a.out_dir.join("loo_per_target.tsv"), per_target.as_bytes(), &manifest)?;
    write_artifact(&a.out_dir.join("loo_report.json"), json.as_bytes(), &manifest)?;

    if let Some(dir) = &a.save_models {
        for (flabel, pname, r) in &reports {
            for (t, model) in r.per_target.iter().zip(&r.models) {
                let mut model = model.clone();
                model.manifest = Some(serde_json::to_value(&manifest).map_err(|e| CliError::Core(e.into()))?);
                let mut text = model.to_json()?;
                text.push('\n');
                let name = format!("{flabel}__{pname}__{}.json", t.target);
                write_artifact(&dir.join(name), text.as_bytes(), &manifest)?;
            }
        }
    }
    Ok(())
}

fn importance(a: &ImportanceArgs, s: &Settings) -> CliResult<()> {
    let mut manifest = RunManifest::new("importance", s);
    let mut models = Vec::new();
    for (i, path) in a.models.iter().enumerate() {
        models.push(read_model(&mut manifest, &format!("model:{i}"), path)?);
    }
    let ranked = feature_importance(&models)?;
    let mut out = String::from("feature\tgain\n");
    for g in top_k(&ranked, s.top_k) {
        writeln!(out, "{}\t{}", g.feature, g.gain).expect("write to string");
    }
    print!("{out}");
    if let Some(path) = &a.out {
        guard_output(path, &manifest)?;
        write_artifact(path, out.as_bytes(), &manifest)?;
    }
    Ok(())
}

fn analyze_divergence(a: &DivergenceArgs, s: &Settings) -> CliResult<()> {
    let mut manifest = RunManifest::new("analyze-divergence", s);
    let perf_a = read_performance(&mut manifest, "performance:a", &a.perf_a)?;
    let perf_b = read_performance(&mut manifest, "performance:b", &a.perf_b)?;
    let families = match &a.families {
        Some(p) => Some(load_families(manifest.read_input("families", p)?.as_slice())?),
        None => None,
    };
    let rows = rank_divergence(&perf_a, &perf_b, s.include_self_pairs)?;

    let mut all = format!("source\ttarget\trank_{}\trank_{}\tdiff\n", a.label_a, a.label_b);
    for r in &rows {
        writeln!(all, "{}\t{}\t{}\t{}\t{:+}", r.source, r.target, r.rank_a, r.rank_b, r.diff).expect("write to string");
    }

    // diff > 0: the pair sits lower in A's ranking, so B ranks it better.
    let b_better: Vec<&DivergenceRow> = rows.iter().filter(|r| r.diff > 0).collect();
    let a_better: Vec<&DivergenceRow> = rows.iter().filter(|r| r.diff < 0).collect();
    let mut table5 = format!("{} better\tdiff\t{} better\tdiff\n", a.label_b, a.label_a);
    for i in 0..a.top.min(b_better.len().max(a_better.len())) {
        let cell = |side: &[&DivergenceRow]| match side.get(i) {
            Some(r) => format!("{}\t{:+}", r.pair_code(), r.diff),
            None => "\t".to_string(),
        };
        writeln!(table5, "{}\t{}", cell(&b_better), cell(&a_better)).expect("write to string");
    }

    write_artifact(&a.out_dir.join("divergence.tsv"), all.as_bytes(), &manifest)?;
    write_artifact(&a.out_dir.join("table5.tsv"), table5.as_bytes(), &manifest)?;

    if let Some(families) = families {
        let owned = |side: &[&DivergenceRow]| side.iter().map(|r| (*r).clone()).collect::<Vec<_>>();
        let mut table6 = String::from("better_in\tfamily_pair\tcount\n");
        for (label, side) in [(&a.label_b, &b_better), (&a.label_a, &a_better)] {
            let mut tally: Vec<(String, usize)> = family_pair_tally(&owned(side), &families)?.into_iter().collect();
            tally.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
            for (pair, n) in tally {
                writeln!(table6, "{label}\t{pair}\t{n}").expect("write to string");
            }
        }
        write_artifact(&a.out_dir.join("table6.tsv"), table6.as_bytes(), &manifest)?;
    }
    Ok(())
}
