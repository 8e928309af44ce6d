//! The pipeline stages. Each stage reads the serialized outputs of earlier
//! stages from the bundle and writes its own directory.

use std::fs::{self, File};
use std::io::{self, BufReader};

use serde_json::{json, Value};

use sdgscope_core::burst::{top_bursts, write_bursts_csv};
use sdgscope_core::cooccur::{
    self, build_network, cluster_summary, write_edges_csv, write_nodes_csv, write_summary_csv,
};
use sdgscope_core::corpus::{build_citation_graph, filter, load_corpus, read_jsonl, write_jsonl};
use sdgscope_core::delineate::{expand_direct_citations, finalize, select_core, write_provenance_csv};
use sdgscope_core::indicators::{
    actor_table, growth_and_cagr, period_blocks, write_actor_csv, yearly_counts, ActorKind, ActorRow, ExternalTotals,
};
use sdgscope_core::interlink::{
    cluster_sdgs, sdg_cocitation_matrix, sdg_coclassification_matrix, write_matrix_csv, MatrixMode,
};
use sdgscope_core::numfmt::{pct, ratio};
use sdgscope_core::sdg::{
    classify_set, continent_tables, institutions_per_sdg, load_glossary, prevalence, read_assignments_csv,
    write_assignments_csv, write_continent_csv, write_institutions_csv, write_prevalence_csv, ClassifyOptions,
    Denominator, GlossaryError, SdgAssignment, SdgId,
};
use sdgscope_core::{interlink, Corpus, OrgFilter, PubIdSet};

use crate::bundle::{Bundle, InputFile, MANIFEST, SCHEMA_VERSION};
use crate::config::PipelineConfig;
use crate::error::{CliError, Stage};
use crate::report;

struct Outcome {
    summary: Value,
    inputs: Vec<InputFile>,
}

impl Outcome {
    fn new(summary: Value) -> Self {
        Outcome {
            summary,
            inputs: Vec::new(),
        }
    }
}

/// Runs one stage against the configured bundle and records it in the
/// manifest.
pub fn run_stage(config: &PipelineConfig, stage: Stage) -> Result<(), CliError> {
    config.validate()?;
    let bundle = Bundle::new(config.output_path());
    fs::create_dir_all(bundle.root())
        .map_err(|e| CliError::stage(stage, format!("{}: {e}", bundle.root().display())))?;
    let outcome = match stage {
        Stage::Ingest => ingest(config, &bundle)?,
        Stage::Delineate => delineate(config, &bundle)?,
        Stage::Indicators => indicators(config, &bundle)?,
        Stage::Cooccur => cooccur_stage(config, &bundle)?,
        Stage::Burst => burst(config, &bundle)?,
        Stage::Classify => classify(config, &bundle)?,
        Stage::Interlink => interlink_stage(config, &bundle)?,
        Stage::Report => Outcome::new(report::write_report(&bundle, config)?),
    };
    bundle.record(stage, config, outcome.summary, &outcome.inputs)?;
    log::info!("{stage}: done");
    Ok(())
}

/// Runs every stage in order, starting from a fresh manifest.
pub fn run_pipeline(config: &PipelineConfig) -> Result<(), CliError> {
    config.validate()?;
    let manifest = config.output_path().join(MANIFEST);
    if manifest.exists() {
        fs::remove_file(&manifest)
            .map_err(|e| CliError::stage(Stage::Ingest, format!("{}: {e}", manifest.display())))?;
    }
    for stage in Stage::PIPELINE {
        run_stage(config, stage)?;
    }
    Ok(())
}

fn to_io(e: impl std::fmt::Display) -> io::Error {
    io::Error::other(e.to_string())
}

fn load_ingested(bundle: &Bundle, stage: Stage) -> Result<Corpus, CliError> {
    let reader = bundle.open(stage, Stage::Ingest, "corpus.jsonl")?;
    let (corpus, report) = read_jsonl(reader).map_err(|e| CliError::stage(stage, e))?;
    if let Some(bad) = report.skipped.first() {
        return Err(CliError::stage(
            stage,
            format!(
                "ingested corpus is damaged at line {}: {}; rerun ingest",
                bad.line, bad.reason
            ),
        ));
    }
    Ok(corpus)
}

fn read_ids(bundle: &Bundle, stage: Stage, owner: Stage, name: &str, corpus: &Corpus) -> Result<PubIdSet, CliError> {
    let reader = bundle.open(stage, owner, name)?;
    let mut rdr = csv::Reader::from_reader(reader);
    let mut ids = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CliError::stage(stage, format!("{name}: {e}")))?;
        ids.push(row.get(0).unwrap_or("").to_owned());
    }
    let (set, missing) = corpus.resolve(ids.iter().map(String::as_str));
    if let Some(id) = missing.first() {
        return Err(CliError::stage(
            stage,
            format!("{name} lists unknown pub_id `{id}`; rerun {owner}"),
        ));
    }
    Ok(set)
}

fn write_ids(bundle: &Bundle, stage: Stage, name: &str, set: &PubIdSet, corpus: &Corpus) -> Result<(), CliError> {
    bundle.write_with(stage, name, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["pub_id"])?;
        for id in set.sorted_ids(corpus) {
            out.write_record([id])?;
        }
        out.flush()
    })
}

fn final_set(bundle: &Bundle, stage: Stage, corpus: &Corpus) -> Result<PubIdSet, CliError> {
    read_ids(bundle, stage, Stage::Delineate, "final_set.csv", corpus)
}

fn ingest(config: &PipelineConfig, bundle: &Bundle) -> Result<Outcome, CliError> {
    let stage = Stage::Ingest;
    let path = config.corpus_path();
    let format = config.corpus_format()?;
    let (corpus, report) = load_corpus(&path, format).map_err(|e| CliError::input(stage, e))?;
    for s in &report.skipped {
        log::warn!("{}: line {}: skipped: {}", path.display(), s.line, s.reason);
    }
    bundle.reset(stage)?;
    bundle.write_with(stage, "corpus.jsonl", |w| write_jsonl(&corpus, w).map_err(to_io))?;
    bundle.write_json(
        stage,
        "load_report.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "loaded": report.loaded,
            "skipped": report.skipped,
        }),
    )?;
    let mut outcome = Outcome::new(json!({
        "loaded": report.loaded,
        "skipped": report.skipped.len(),
        "duplicates": report.duplicates().count(),
    }));
    outcome.inputs.push(InputFile {
        role: "corpus",
        shown: config.corpus.path.display().to_string(),
        path,
    });
    Ok(outcome)
}

fn delineate(config: &PipelineConfig, bundle: &Bundle) -> Result<Outcome, CliError> {
    let stage = Stage::Delineate;
    let corpus = load_ingested(bundle, stage)?;
    let query = config.query()?;
    let years = config.years()?;
    let org_filter = config.org_filter()?;
    let graph = build_citation_graph(&corpus);
    let core = select_core(&corpus, &query, years);
    let labels = finalize(
        expand_direct_citations(&core, &graph, config.delineate.expansion_layers),
        &corpus,
        years,
        &org_filter,
    );
    let period = labels.expanded.intersection(&filter(&corpus, years, &OrgFilter::Any));
    let report = labels.report();
    let mut doc = serde_json::to_value(&report).map_err(|e| CliError::stage(stage, e))?;
    if let Value::Object(map) = &mut doc {
        map.insert("query".into(), json!(query.to_string()));
        map.insert("years".into(), json!(years.to_string()));
        map.insert("org_types".into(), json!(config.delineate.org_types));
        map.insert("expansion_layers".into(), json!(config.delineate.expansion_layers));
        map.insert("expanded_in_years".into(), json!(period.len()));
    }
    bundle.reset(stage)?;
    bundle.write_json(stage, "report.json", &doc)?;
    bundle.write_with(stage, "provenance.csv", |w| write_provenance_csv(&labels, &corpus, w))?;
    write_ids(bundle, stage, "final_set.csv", &labels.final_set, &corpus)?;
    write_ids(bundle, stage, "period_set.csv", &period, &corpus)?;
    Ok(Outcome::new(json!({
        "core": report.core,
        "cited": report.cited,
        "citing": report.citing,
        "expanded": report.expanded,
        "expanded_in_years": period.len(),
        "final": report.final_count,
        "phantoms": report.phantoms,
    })))
}

fn plural(kind: ActorKind) -> &'static str {
    match kind {
        ActorKind::Institution => "institutions",
        ActorKind::Country => "countries",
        ActorKind::Continent => "continents",
    }
}

fn min_count(config: &PipelineConfig, kind: ActorKind) -> u64 {
    match kind {
        ActorKind::Institution => config.indicators.min_count_institution,
        ActorKind::Country => config.indicators.min_count_country,
        ActorKind::Continent => config.indicators.min_count_continent,
    }
}

fn indicators(config: &PipelineConfig, bundle: &Bundle) -> Result<Outcome, CliError> {
    let stage = Stage::Indicators;
    let corpus = load_ingested(bundle, stage)?;
    let set = final_set(bundle, stage, &corpus)?;
    let years = config.years()?;
    let mut inputs = Vec::new();
    let totals = match config.external_totals_path() {
        Some(path) => {
            let file = File::open(&path).map_err(|e| CliError::input(stage, format!("{}: {e}", path.display())))?;
            let totals = ExternalTotals::read(BufReader::new(file))
                .map_err(|e| CliError::input(stage, format!("{}: {e}", path.display())))?;
            inputs.push(InputFile {
                role: "external_totals",
                shown: config
                    .indicators
                    .external_totals
                    .as_ref()
                    .expect("set")
                    .display()
                    .to_string(),
                path,
            });
            Some(totals)
        }
        None => None,
    };
    let yearly = yearly_counts(&set, &corpus, Some(years));
    let growth = match growth_and_cagr(&yearly, years.lo(), years.hi()) {
        Ok(g) => json!({ "growth_pct": pct(g.growth_pct), "cagr_pct": pct(g.cagr_pct), "error": null }),
        Err(e) => json!({ "growth_pct": null, "cagr_pct": null, "error": e.to_string() }),
    };
    let blocks =
        period_blocks(&set, &corpus, years, config.indicators.block_len).map_err(|e| CliError::stage(stage, e))?;

    bundle.reset(stage)?;
    bundle.write_with(stage, "yearly.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["year", "publications"])?;
        for (year, count) in &yearly {
            out.write_record([year.to_string(), count.to_string()])?;
        }
        out.flush()
    })?;
    bundle.write_with(stage, "blocks.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["period", "publications"])?;
        for (range, members) in &blocks {
            out.write_record([range.to_string(), members.len().to_string()])?;
        }
        out.flush()
    })?;
    let in_range: u64 = yearly.values().sum();
    bundle.write_json(
        stage,
        "growth.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "start_year": years.lo(),
            "end_year": years.hi(),
            "start_count": yearly.get(&years.lo()),
            "end_count": yearly.get(&years.hi()),
            "publications": in_range,
            "growth": growth,
        }),
    )?;

    let multiplier = config.indicators.ai_display_multiplier;
    let mut actor_counts = serde_json::Map::new();
    for kind in ActorKind::ALL {
        let min = min_count(config, kind);
        let full = actor_table(&set, &corpus, kind, years, totals.as_ref(), min);
        actor_counts.insert(plural(kind).into(), json!(full.raw.len()));
        let mut raw: Vec<ActorRow> = full.raw;
        let mut ranked: Vec<ActorRow> = full.ranked;
        for (range, members) in &blocks {
            let t = actor_table(members, &corpus, kind, *range, None, min);
            raw.extend(t.raw);
            ranked.extend(t.ranked);
        }
        bundle.write_with(stage, &format!("{}.csv", plural(kind)), |w| {
            write_actor_csv(&raw, multiplier, w)
        })?;
        bundle.write_with(stage, &format!("{}_ranked.csv", plural(kind)), |w| {
            write_actor_csv(&ranked, multiplier, w)
        })?;
    }
    let mut summary = json!({
        "publications": in_range,
        "years": years.len(),
        "blocks": blocks.len(),
        "activity_index": totals.is_some(),
    });
    if let Value::Object(map) = &mut summary {
        map.extend(actor_counts);
    }
    Ok(Outcome { summary, inputs })
}

fn core_set(bundle: &Bundle, stage: Stage, corpus: &Corpus) -> Result<PubIdSet, CliError> {
    let reader = bundle.open(stage, Stage::Delineate, "provenance.csv")?;
    let mut rdr = csv::Reader::from_reader(reader);
    let mut ids = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CliError::stage(stage, format!("provenance.csv: {e}")))?;
        if row.get(1) == Some("core") {
            ids.push(row.get(0).unwrap_or("").to_owned());
        }
    }
    Ok(corpus.resolve(ids.iter().map(String::as_str)).0)
}

fn cooccur_stage(config: &PipelineConfig, bundle: &Bundle) -> Result<Outcome, CliError> {
    let stage = Stage::Cooccur;
    let corpus = load_ingested(bundle, stage)?;
    let set = final_set(bundle, stage, &corpus)?;
    let core = core_set(bundle, stage, &corpus)?;
    let network = build_network(&set, &corpus, config.cooccur.min_occurrence).map_err(|e| CliError::stage(stage, e))?;
    let assignment = cooccur::cluster(&network, &config.cluster_params());
    let summaries = cluster_summary(&network, &assignment, &set, &corpus, &core, config.cooccur.top_terms);
    bundle.reset(stage)?;
    bundle.write_with(stage, "nodes.csv", |w| write_nodes_csv(&network, &assignment, w))?;
    bundle.write_with(stage, "edges.csv", |w| write_edges_csv(&network, &assignment, w))?;
    bundle.write_with(stage, "clusters.csv", |w| write_summary_csv(&summaries, w))?;
    bundle.write_with(stage, "network.graphml", |w| {
        cooccur::write_graphml(&network, &assignment, w)
    })?;
    let summary = json!({
        "terms": network.len(),
        "links": network.total_links(),
        "total_link_strength": network.total_link_strength(),
        "clusters": assignment.n_clusters,
    });
    bundle.write_json(
        stage,
        "summary.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "publications": set.len(),
            "min_occurrence": config.cooccur.min_occurrence,
            "resolution": config.cooccur.resolution,
            "min_cluster_size": config.cooccur.min_cluster_size,
            "seed": config.cooccur.seed,
            "restarts": config.cooccur.restarts,
            "terms": network.len(),
            "links": network.total_links(),
            "total_link_strength": network.total_link_strength(),
            "clusters": assignment.n_clusters,
            "modularity": ratio(assignment.quality),
        }),
    )?;
    Ok(Outcome::new(summary))
}

fn burst(config: &PipelineConfig, bundle: &Bundle) -> Result<Outcome, CliError> {
    let stage = Stage::Burst;
    let corpus = load_ingested(bundle, stage)?;
    let set = final_set(bundle, stage, &corpus)?;
    let reader = bundle.open(stage, Stage::Cooccur, "nodes.csv")?;
    let mut rdr = csv::Reader::from_reader(reader);
    let mut terms = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CliError::stage(stage, format!("nodes.csv: {e}")))?;
        terms.push(row.get(0).unwrap_or("").to_owned());
    }
    let years = config.years()?;
    let params = config.burst_params();
    let bursts =
        top_bursts(&set, &corpus, &terms, years, config.burst.top_k, &params).map_err(|e| CliError::stage(stage, e))?;
    bundle.reset(stage)?;
    bundle.write_with(stage, "bursts.csv", |w| write_bursts_csv(&bursts, w))?;
    bundle.write_json(
        stage,
        "summary.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "s": params.s,
            "gamma": params.gamma,
            "top_k": config.burst.top_k,
            "years": years.to_string(),
            "terms_scanned": terms.len(),
            "bursts_reported": bursts.len(),
        }),
    )?;
    Ok(Outcome::new(json!({
        "terms_scanned": terms.len(),
        "bursts_reported": bursts.len(),
    })))
}

fn classify(config: &PipelineConfig, bundle: &Bundle) -> Result<Outcome, CliError> {
    let stage = Stage::Classify;
    let path = config.glossary_path();
    let glossary = load_glossary(&path).map_err(|e| match e {
        GlossaryError::Io { source, .. } => CliError::input(stage, format!("glossary {}: {source}", path.display())),
        other => CliError::input(stage, format!("{}: {other}", path.display())),
    })?;
    let corpus = load_ingested(bundle, stage)?;
    let period = read_ids(bundle, stage, Stage::Delineate, "period_set.csv", &corpus)?;
    let set = final_set(bundle, stage, &corpus)?;
    let options = ClassifyOptions {
        scan_text: config.sdg.scan_text,
    };
    let assignments = classify_set(&period, &corpus, &glossary, options);
    let prev = prevalence(&assignments);
    let in_final: Vec<SdgAssignment> = assignments.iter().copied().filter(|a| set.contains(a.doc)).collect();
    let final_prev = prevalence(&in_final);
    let tables = continent_tables(&in_final, &corpus);
    let institutions = institutions_per_sdg(&in_final, &corpus, &config.org_filter()?);

    bundle.reset(stage)?;
    bundle.write_with(stage, "assignments.csv", |w| {
        write_assignments_csv(&assignments, &corpus, w)
    })?;
    bundle.write_with(stage, "prevalence.csv", |w| write_prevalence_csv(&prev, w))?;
    bundle.write_with(stage, "prevalence_final.csv", |w| write_prevalence_csv(&final_prev, w))?;
    bundle.write_with(stage, "continent_counts.csv", |w| {
        write_continent_csv(&tables.counts, w)
    })?;
    bundle.write_with(stage, "continent_row_pct.csv", |w| {
        write_continent_csv(&tables.row_pct, w)
    })?;
    bundle.write_with(stage, "continent_col_pct.csv", |w| {
        write_continent_csv(&tables.col_pct, w)
    })?;
    bundle.write_with(stage, "institutions.csv", |w| write_institutions_csv(&institutions, w))?;
    let per_sdg: Vec<Value> = SdgId::all()
        .map(|id| {
            json!({
                "sdg": id.get(),
                "count": prev.count(id),
                "pct_of_classified": prev.pct(id, Denominator::Classified),
                "pct_of_all": prev.pct(id, Denominator::All),
            })
        })
        .collect();
    bundle.write_json(
        stage,
        "summary.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "glossary_terms": glossary.term_count(),
            "scan_text": options.scan_text,
            "publications": prev.total,
            "classified": prev.classified,
            "classified_pct": prev.classified_pct(),
            "final_publications": final_prev.total,
            "final_classified": final_prev.classified,
            "final_classified_pct": final_prev.classified_pct(),
            "excluded_no_affiliation": tables.excluded_no_affiliation,
            "institutions_total": institutions.total_institutions,
            "prevalence": per_sdg,
        }),
    )?;
    let mut outcome = Outcome::new(json!({
        "publications": prev.total,
        "classified": prev.classified,
        "final_classified": final_prev.classified,
        "glossary_terms": glossary.term_count(),
    }));
    outcome.inputs.push(InputFile {
        role: "glossary",
        shown: config.sdg.glossary.display().to_string(),
        path,
    });
    Ok(outcome)
}

fn interlink_stage(config: &PipelineConfig, bundle: &Bundle) -> Result<Outcome, CliError> {
    let stage = Stage::Interlink;
    let corpus = load_ingested(bundle, stage)?;
    let set = final_set(bundle, stage, &corpus)?;
    let reader = bundle.open(stage, Stage::Classify, "assignments.csv")?;
    let assignments: Vec<SdgAssignment> = read_assignments_csv(reader, &corpus)
        .map_err(|e| CliError::stage(stage, format!("assignments.csv: {e}")))?
        .into_iter()
        .filter(|a| set.contains(a.doc))
        .collect();
    let graph = build_citation_graph(&corpus);
    let cocitation = sdg_cocitation_matrix(&assignments, &corpus, &graph, &set);
    let coclassification = sdg_coclassification_matrix(&assignments, &corpus);
    let mode = config.interlink_mode()?;
    let chosen = match mode {
        MatrixMode::Cocitation => &cocitation,
        MatrixMode::Coclassification => &coclassification,
    };
    let clusters = cluster_sdgs(chosen, &config.interlink_cluster_params());
    let members: Vec<Vec<u8>> = (0..clusters.n_clusters as u32)
        .map(|c| clusters.members(c).map(|i| SdgId::from_index(i).get()).collect())
        .collect();

    bundle.reset(stage)?;
    bundle.write_with(stage, "cocitation.csv", |w| write_matrix_csv(&cocitation, w))?;
    bundle.write_with(stage, "coclassification.csv", |w| {
        write_matrix_csv(&coclassification, w)
    })?;
    bundle.write_with(stage, "nodes.csv", |w| interlink::write_nodes_csv(chosen, &clusters, w))?;
    bundle.write_with(stage, "sdg_network.graphml", |w| {
        interlink::write_graphml(chosen, &clusters, w)
    })?;
    bundle.write_json(
        stage,
        "summary.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "mode": mode.as_str(),
            "publications": assignments.len(),
            "cocitation_link_strength": cocitation.total_link_strength(),
            "coclassification_link_strength": coclassification.total_link_strength(),
            "clusters": clusters.n_clusters,
            "modularity": ratio(clusters.quality),
            "cluster_members": members,
        }),
    )?;
    Ok(Outcome::new(json!({
        "mode": mode.as_str(),
        "cocitation_link_strength": cocitation.total_link_strength(),
        "coclassification_link_strength": coclassification.total_link_strength(),
        "clusters": clusters.n_clusters,
    })))
}
