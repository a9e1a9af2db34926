//! Batch front end for the event coreference pipeline: rule reasoning,
//! clustering, baseline, scoring, validation, stats, and derivation traces.
//!
//! Exit codes: 0 success, 1 domain error (mismatched universes, missing
//! edges), 2 input or validation error (unreadable or malformed files).

mod io;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ontocoref_core::baseline::{default_lexicon, lemma_baseline, lemma_filter, Lexicon};
use ontocoref_core::cluster::{clusters, ClusterMode};
use ontocoref_core::compat::Gazetteer;
use ontocoref_core::corpus::{corpus_stats, load_corpus, Corpus};
use ontocoref_core::engine::{
    evaluate_with, explain, measure, CorefGraph, EngineConfig, Scope, SubeventView,
    DEFAULT_POSSIBLE_WEIGHT,
};
use ontocoref_core::metrics::{score_run, Averaging, Partition, RunScore};
use ontocoref_core::model::{MentionId, MentionPair};
use ontocoref_core::ontology::{check_cardinality, default_profiles, load_profiles, ProfileStore};
use ontocoref_core::ruledsl::{
    default_rules, parse_rules, rule_count_report, ParseOptions, RuleSet,
};

use report::{Metric, ScoreTable};

#[derive(Parser)]
#[command(
    name = "ontocoref",
    version,
    about = "Rule-based event coreference over structured event descriptions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply the coreference rules to a corpus and write the derived graph.
    Reason(ReasonArgs),
    /// Turn a derived graph into a clustering (connected components).
    Cluster(ClusterArgs),
    /// Score response clusterings against a key.
    Score(ScoreArgs),
    /// Cluster mentions by shared predicate lemma.
    Baseline(BaselineArgs),
    /// Validate a corpus file, optionally against event type profiles.
    Validate(ValidateArgs),
    /// Print corpus summary counts.
    Stats(StatsArgs),
    /// Print the derivation trace for a mention pair.
    Explain(ExplainArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Doc,
    Topic,
    Global,
}

impl From<ScopeArg> for Scope {
    fn from(value: ScopeArg) -> Scope {
        match value {
            ScopeArg::Doc => Scope::WithinDocument,
            ScopeArg::Topic => Scope::WithinTopic,
            ScopeArg::Global => Scope::CrossTopic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Certain,
    Possible,
    Combined,
}

impl From<ModeArg> for ClusterMode {
    fn from(value: ModeArg) -> ClusterMode {
        match value {
            ModeArg::Certain => ClusterMode::CertainOnly,
            ModeArg::Possible => ClusterMode::PossibleOnly,
            ModeArg::Combined => ClusterMode::Combined,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Muc,
    B3,
    Ceafm,
    Blanc,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum AvgArg {
    Micro,
    Macro,
}

#[derive(Clone, Copy, ValueEnum)]
enum ViewArg {
    Certain,
    Possible,
    All,
}

impl From<ViewArg> for SubeventView {
    fn from(value: ViewArg) -> SubeventView {
        match value {
            ViewArg::Certain => SubeventView::Certain,
            ViewArg::Possible => SubeventView::Possible,
            ViewArg::All => SubeventView::All,
        }
    }
}

/// Inputs shared by the commands that run the rule engine.
#[derive(Args)]
struct EngineInputs {
    /// Corpus file (line-delimited JSON).
    #[arg(long)]
    corpus: PathBuf,
    /// Rule file; the built-in rule set is used when omitted.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Profile file; the built-in profiles are used when omitted.
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Location ancestry fixture for place containment.
    #[arg(long)]
    gazetteer: Option<PathBuf>,
    /// Pairing scope for rule evaluation.
    #[arg(long, value_enum, default_value = "topic")]
    scope: ScopeArg,
    /// Enable rules whose two type guards differ.
    #[arg(long)]
    enable_cross_type: bool,
    /// Reject rules naming roles their profile does not declare, instead of
    /// keeping them with a warning.
    #[arg(long)]
    strict_roles: bool,
    /// Edge classes a certain-strength hasCoref condition may consume.
    #[arg(long, value_enum, default_value = "certain")]
    subevent_certain_view: ViewArg,
    /// Edge classes a possible-strength hasCoref condition may consume.
    #[arg(long, value_enum, default_value = "all")]
    subevent_possible_view: ViewArg,
}

#[derive(Args)]
struct ReasonArgs {
    #[command(flatten)]
    inputs: EngineInputs,
    /// Output path for the derived graph.
    #[arg(long)]
    out: PathBuf,
    /// Optional output path for the full derivation log.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Print per-type rule counts before evaluating.
    #[arg(long)]
    rule_report: bool,
    /// Keep outputs free of timestamps and other run-varying content.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    seedless_deterministic: bool,
}

#[derive(Args)]
struct ClusterArgs {
    /// Corpus file, providing the mention universe.
    #[arg(long)]
    corpus: PathBuf,
    /// Graph file produced by `reason`.
    #[arg(long)]
    graph: PathBuf,
    /// Which edge strengths to cluster.
    #[arg(long, value_enum, default_value = "combined")]
    mode: ModeArg,
    /// Output path for the mention-cluster map.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// Response file(s) in the mention-cluster map format; one table row each.
    #[arg(long, required = true)]
    response: Vec<PathBuf>,
    /// Key: a corpus file with gold sections (.jsonl) or a mention-cluster map.
    #[arg(long)]
    key: PathBuf,
    /// Restrict a corpus key to lemmas in this lexicon before extracting gold.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Corpus file; required only for --scope doc.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Metrics to report.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    metrics: Vec<MetricArg>,
    /// Aggregation across topics.
    #[arg(long, value_enum, default_value = "micro")]
    avg: AvgArg,
    /// Scoring universe: per document, per topic, or one global universe.
    #[arg(long, value_enum, default_value = "topic")]
    scope: ScopeArg,
    /// Also write the table as JSON.
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    /// Corpus file.
    #[arg(long)]
    corpus: PathBuf,
    /// Restrict to lemmas in this lexicon first (pass `builtin` for the
    /// shipped lexicon).
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Lemma class scope.
    #[arg(long, value_enum, default_value = "topic")]
    scope: ScopeArg,
    /// Output path for the mention-cluster map.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Corpus file.
    #[arg(long)]
    corpus: PathBuf,
    /// Validate mention roles and types against these profiles
    /// (pass `builtin` for the shipped profiles).
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Location ancestry fixture.
    #[arg(long)]
    gazetteer: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Corpus file.
    #[arg(long)]
    corpus: PathBuf,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    inputs: EngineInputs,
    /// Weight reported for a possible-only pair.
    #[arg(long, default_value_t = DEFAULT_POSSIBLE_WEIGHT)]
    possible_weight: f64,
    /// First mention id.
    mention_a: String,
    /// Second mention id.
    mention_b: String,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl std::fmt::Display) -> Failure {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }

    fn domain(message: impl std::fmt::Display) -> Failure {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Reason(args) => cmd_reason(args),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Score(args) => cmd_score(args),
        Command::Baseline(args) => cmd_baseline(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Explain(args) => cmd_explain(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

// ---------------------------------------------------------------------------
// Shared loading
// ---------------------------------------------------------------------------

fn load_profile_store(path: Option<&Path>) -> Result<ProfileStore, Failure> {
    match path {
        None => Ok(default_profiles()),
        Some(p) if p.as_os_str() == "builtin" => Ok(default_profiles()),
        Some(p) => load_profiles(p).map_err(Failure::input),
    }
}

fn load_rule_set(
    path: Option<&Path>,
    store: &ProfileStore,
    options: ParseOptions,
) -> Result<RuleSet, Failure> {
    let rules = match path {
        None => default_rules(store, options).map_err(Failure::input)?,
        Some(p) => parse_rules(p, store, options).map_err(Failure::input)?,
    };
    for warning in rules.warnings() {
        eprintln!("warning: {warning}");
    }
    Ok(rules)
}

fn load_corpus_file(path: &Path, gazetteer: Option<&Path>) -> Result<Corpus, Failure> {
    let corpus = load_corpus(path).map_err(Failure::input)?;
    match gazetteer {
        Some(g) => {
            let gaz = Gazetteer::load(g).map_err(Failure::input)?;
            Ok(corpus.with_gazetteer(&gaz))
        }
        None => Ok(corpus),
    }
}

fn load_lexicon_file(path: &Path) -> Result<Lexicon, Failure> {
    if path.as_os_str() == "builtin" {
        Ok(default_lexicon())
    } else {
        Lexicon::load(path).map_err(Failure::input)
    }
}

struct EngineRun {
    corpus: Corpus,
    graph: CorefGraph,
    rules: RuleSet,
}

fn run_engine(inputs: &EngineInputs) -> Result<EngineRun, Failure> {
    let profiles = load_profile_store(inputs.profiles.as_deref())?;
    let options = ParseOptions {
        legacy_verbatim: !inputs.strict_roles,
        enable_cross_type: inputs.enable_cross_type,
    };
    let rules = load_rule_set(inputs.rules.as_deref(), &profiles, options)?;
    let corpus = load_corpus_file(&inputs.corpus, inputs.gazetteer.as_deref())?;
    let config = EngineConfig {
        scope: inputs.scope.into(),
        certain_reads: inputs.subevent_certain_view.into(),
        possible_reads: inputs.subevent_possible_view.into(),
    };
    let graph = evaluate_with(&corpus, &rules, &profiles, &config);
    for warning in graph.warnings() {
        eprintln!("warning: {warning}");
    }
    Ok(EngineRun {
        corpus,
        graph,
        rules,
    })
}

fn write_file(path: &Path, content: &str) -> Result<(), Failure> {
    std::fs::write(path, content)
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_reason(args: ReasonArgs) -> Result<(), Failure> {
    let run = run_engine(&args.inputs)?;
    let graph = &run.graph;
    if args.rule_report {
        print!("{}", rule_count_report(&run.rules));
    }
    write_file(&args.out, &graph.serialize())?;

    if let Some(log_path) = &args.log {
        let mut log = String::new();
        if !args.seedless_deterministic {
            let now = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            log.push_str(&format!("# generated-at: {now}\n"));
        }
        for (pair, firings) in graph.derivations() {
            for firing in firings {
                log.push_str(&format!(
                    "{} {} {} {} round={}\n",
                    pair.first(),
                    firing.strength,
                    pair.second(),
                    firing.rule_id,
                    firing.iteration
                ));
                for witness in &firing.witnesses {
                    log.push_str(&format!("  {} :: {}\n", witness.condition, witness.witness));
                }
            }
        }
        write_file(log_path, &log)?;
    }

    let (certain, possible) = graph.counts();
    println!("certain: {certain}, possible: {possible}");
    println!("rounds: {}", graph.rounds());
    Ok(())
}

fn cmd_cluster(args: ClusterArgs) -> Result<(), Failure> {
    let corpus = load_corpus_file(&args.corpus, None)?;
    let text = std::fs::read_to_string(&args.graph)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", args.graph.display())))?;
    let graph = CorefGraph::parse_serialized(&text, corpus.universe()).map_err(Failure::domain)?;
    let partition = clusters(&graph, args.mode.into());

    let topic_of: BTreeMap<MentionId, String> = corpus
        .mentions()
        .map(|m| (m.id.clone(), m.topic_id.clone()))
        .collect();
    let map = io::ResponseMap::from_global(&partition, &topic_of);
    write_file(&args.out, &map.render())?;
    println!("blocks: {}", partition.len());
    Ok(())
}

/// Partitions per scoring unit (topic, document, or one global universe).
/// Global keeps blocks that span topics intact; the others split them.
fn scoped_partitions(
    map: &io::ResponseMap,
    scope: ScopeArg,
    corpus: Option<&Corpus>,
) -> Result<BTreeMap<String, Partition>, Failure> {
    match scope {
        ScopeArg::Topic => map.per_topic().map_err(Failure::input),
        ScopeArg::Global => {
            let merged = map.global().map_err(Failure::input)?;
            Ok(BTreeMap::from([("_global".to_string(), merged)]))
        }
        ScopeArg::Doc => {
            let corpus = corpus.ok_or_else(|| Failure::input("--scope doc requires --corpus"))?;
            let per_topic = map.per_topic().map_err(Failure::input)?;
            let mut out = BTreeMap::new();
            for topic in corpus.topics() {
                let Some(partition) = per_topic.get(&topic.id) else {
                    continue;
                };
                for doc in &topic.documents {
                    let universe: BTreeSet<MentionId> =
                        doc.mentions.iter().map(|m| m.id.clone()).collect();
                    out.insert(
                        format!("{}/{}", topic.id, doc.id),
                        partition.restrict(&universe),
                    );
                }
            }
            Ok(out)
        }
    }
}

fn load_key(path: &Path, lexicon: Option<&Path>) -> Result<io::ResponseMap, Failure> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        let mut corpus = load_corpus(path).map_err(Failure::input)?;
        if let Some(lex_path) = lexicon {
            let lexicon = load_lexicon_file(lex_path)?;
            corpus = lemma_filter(&corpus, &lexicon);
        }
        if corpus.gold_partitions().is_empty() {
            return Err(Failure::input(format!(
                "{} carries no gold sections",
                path.display()
            )));
        }
        Ok(io::ResponseMap::from_partitions(corpus.gold_partitions()))
    } else {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
        io::ResponseMap::parse(&text).map_err(Failure::input)
    }
}

fn cmd_score(args: ScoreArgs) -> Result<(), Failure> {
    let corpus = match &args.corpus {
        Some(path) => Some(load_corpus_file(path, None)?),
        None => None,
    };
    let key_map = load_key(&args.key, args.lexicon.as_deref())?;
    let keys = scoped_partitions(&key_map, args.scope, corpus.as_ref())?;

    let averaging = match args.avg {
        AvgArg::Micro => Averaging::Micro,
        AvgArg::Macro => Averaging::Macro,
    };

    let mut rows: Vec<(String, RunScore)> = Vec::new();
    for response_path in &args.response {
        let text = std::fs::read_to_string(response_path)
            .map_err(|e| Failure::input(format!("cannot read {}: {e}", response_path.display())))?;
        let map = io::ResponseMap::parse(&text).map_err(Failure::input)?;
        let responses = scoped_partitions(&map, args.scope, corpus.as_ref())?;
        let run = score_run(&responses, &keys, averaging).map_err(Failure::domain)?;
        let label = response_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| response_path.display().to_string());
        rows.push((label, run));
    }

    let metrics: Vec<Metric> = if args.metrics.iter().any(|m| matches!(m, MetricArg::All)) {
        Metric::ALL.to_vec()
    } else {
        args.metrics
            .iter()
            .map(|m| match m {
                MetricArg::Muc => Metric::Muc,
                MetricArg::B3 => Metric::B3,
                MetricArg::Ceafm => Metric::CeafM,
                MetricArg::Blanc => Metric::Blanc,
                MetricArg::All => unreachable!("handled above"),
            })
            .collect()
    };

    let table = ScoreTable { metrics, rows };
    print!("{}", table.render_text());
    if let Some(json_path) = &args.json_out {
        write_file(json_path, &table.render_json())?;
    }
    Ok(())
}

fn cmd_baseline(args: BaselineArgs) -> Result<(), Failure> {
    let mut corpus = load_corpus_file(&args.corpus, None)?;
    if let Some(lex_path) = &args.lexicon {
        let lexicon = load_lexicon_file(lex_path)?;
        let before = corpus.num_mentions();
        corpus = lemma_filter(&corpus, &lexicon);
        println!(
            "lexicon filter: {} of {before} mentions kept",
            corpus.num_mentions()
        );
    }
    let partition = lemma_baseline(&corpus, args.scope.into()).map_err(Failure::domain)?;
    let topic_of: BTreeMap<MentionId, String> = corpus
        .mentions()
        .map(|m| (m.id.clone(), m.topic_id.clone()))
        .collect();
    let map = io::ResponseMap::from_global(&partition, &topic_of);
    write_file(&args.out, &map.render())?;
    println!(
        "mentions: {}, blocks: {}",
        partition.universe().len(),
        partition.len()
    );
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Failure> {
    let corpus = load_corpus_file(&args.corpus, args.gazetteer.as_deref())?;

    if let Some(profile_path) = &args.profiles {
        let profiles = load_profile_store(Some(profile_path))?;
        let mut role_errors = Vec::new();
        for mention in corpus.mentions() {
            if !profiles.has_type(&mention.event_type) {
                eprintln!(
                    "warning: {}: unknown event type {:?}",
                    mention.id, mention.event_type
                );
                continue;
            }
            for (role, _) in mention.roles() {
                if !profiles.role_valid(&mention.event_type, role) {
                    role_errors.push(format!(
                        "{}: role {role:?} is not declared for {:?}",
                        mention.id, mention.event_type
                    ));
                }
            }
        }
        for warning in check_cardinality(&corpus, &profiles) {
            eprintln!("warning: {warning}");
        }
        if !role_errors.is_empty() {
            return Err(Failure::input(role_errors.join("\n")));
        }
    }

    let stats = corpus_stats(&corpus);
    println!(
        "ok: {} topic(s), {} doc(s), {} mention(s)",
        stats.topics, stats.documents, stats.mentions
    );
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<(), Failure> {
    let corpus = load_corpus_file(&args.corpus, None)?;
    print!("{}", corpus_stats(&corpus));
    Ok(())
}

fn cmd_explain(args: ExplainArgs) -> Result<(), Failure> {
    if !(0.0..=1.0).contains(&args.possible_weight) {
        return Err(Failure::input("--possible-weight must be in [0,1]"));
    }
    let run = run_engine(&args.inputs)?;
    for id in [&args.mention_a, &args.mention_b] {
        if run.corpus.get(&MentionId::from(id.as_str())).is_none() {
            return Err(Failure::input(format!("unknown mention id {id:?}")));
        }
    }
    let pair = MentionPair::new(
        MentionId::from(args.mention_a.as_str()),
        MentionId::from(args.mention_b.as_str()),
    )
    .map_err(Failure::input)?;

    let trace = explain(&run.graph, &pair).map_err(Failure::domain)?;
    for firing in trace {
        println!(
            "{} {} {} via {} round={}",
            pair.first(),
            firing.strength,
            pair.second(),
            firing.rule_id,
            firing.iteration
        );
        for witness in &firing.witnesses {
            println!("  {} :: {}", witness.condition, witness.witness);
        }
    }
    let value = measure(&run.graph, &pair, args.possible_weight);
    println!("measure: {}", value.value());
    Ok(())
}
