//! Command-line definitions and the handler behind each subcommand.

use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use kgalign_core::channels::{cross_kg_with_cache, self_attention_adjacency, AdjacencyPattern};
use kgalign_core::eval::{
    evaluate_alignment, seed_sweep, RankDirection, SweepDataset, DEFAULT_SWEEP_FRACTIONS,
};
use kgalign_core::kg::{
    split_entity_seeds, Direction, Interner, KnowledgeGraph, RelationId, SeedAlignments,
};
use kgalign_core::model::{encode_both, Side};
use kgalign_core::objectives::Implication;
use kgalign_core::rules::{
    complete_with_transferred, mine_rules, transfer_rules, HornRule, MiningConfig,
};
use kgalign_core::synth::isomorphic_pair;
use kgalign_core::trainer::{train, AlignmentProblem, GraphData, PreparedProblem, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, ParseError, Result};
use crate::formats::checkpoint::{parse_checkpoint, write_checkpoint};
use crate::formats::config::parse_config;
use crate::formats::reports::{adjacency_tsv, loss_csv, metrics_json, sweep_csv};
use crate::formats::rules::{
    grounding_records, parse_groundings, parse_rules, resolve_grounding, write_completion_stats,
    write_groundings, write_rules, write_stats, RuleRecord,
};
use crate::formats::triples::{parse_kg, parse_pairs, resolve_seeds, write_kg, write_pairs};

/// Entity alignment between two knowledge graphs: rule mining, transfer and
/// grounding, then a two-channel graph encoder trained on seed alignments.
#[derive(Debug, Parser)]
#[command(name = "kgalign", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine Horn rules from one graph; writes a rule file and a statistics table.
    Mine(MineArgs),
    /// Carry rules of one graph over to the other through relation seeds.
    Transfer(TransferArgs),
    /// Ground own and transferred rules; writes the completed graph and the groundings.
    Ground(GroundArgs),
    /// Train the encoder; writes a checkpoint and the per-epoch loss history.
    Train(TrainArgs),
    /// Score a checkpoint on the held-out seed alignments; writes metrics JSON.
    Eval(EvalArgs),
    /// Train and evaluate once per seed fraction; writes a CSV table.
    Sweep(SweepArgs),
    /// Write one channel's weighted adjacency as `i<TAB>j<TAB>weight`.
    DumpAdjacency(DumpArgs),
    /// Generate a pair of isomorphic random graphs with full seed alignments.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct Overwrite {
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    /// Triple file of the graph.
    #[arg(long)]
    pub kg: PathBuf,
    /// Output rule file.
    #[arg(long)]
    pub rules_out: PathBuf,
    /// Output statistics table.
    #[arg(long)]
    pub stats_out: PathBuf,
    /// Minimum PCA confidence of a kept rule.
    #[arg(long, default_value_t = 0.8)]
    pub min_pca_conf: f64,
    /// Maximum number of premises (1 or 2).
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub max_premises: u8,
    /// Minimum number of supporting bindings of a kept rule.
    #[arg(long, default_value_t = 2)]
    pub min_support: u64,
    #[command(flatten)]
    pub overwrite: Overwrite,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TransferDirection {
    /// Source rules belong to the left column of the relation seeds.
    LeftToRight,
    /// Source rules belong to the right column of the relation seeds.
    RightToLeft,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    /// Rules mined from the source graph.
    #[arg(long)]
    pub source_rules: PathBuf,
    /// Rules mined from the target graph; transferred duplicates of these are dropped.
    #[arg(long)]
    pub target_rules: PathBuf,
    /// Relation seed alignments (`left<TAB>right`).
    #[arg(long)]
    pub relation_seeds: PathBuf,
    #[arg(long, value_enum, default_value_t = TransferDirection::LeftToRight)]
    pub direction: TransferDirection,
    /// Output rule file for the target graph.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overwrite: Overwrite,
}

#[derive(Debug, Args)]
pub struct GroundArgs {
    /// Triple file of the graph.
    #[arg(long)]
    pub kg: PathBuf,
    /// The graph's own rules.
    #[arg(long)]
    pub rules: PathBuf,
    /// Rules transferred from the other graph.
    #[arg(long)]
    pub transferred: Option<PathBuf>,
    /// Output triple file of the completed graph.
    #[arg(long)]
    pub kg_out: PathBuf,
    /// Output grounding records.
    #[arg(long)]
    pub groundings_out: PathBuf,
    /// Output statistics table.
    #[arg(long)]
    pub stats_out: PathBuf,
    #[command(flatten)]
    pub overwrite: Overwrite,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Triple file of the left graph (usually the completed one).
    #[arg(long)]
    pub kg1: PathBuf,
    /// Triple file of the right graph.
    #[arg(long)]
    pub kg2: PathBuf,
    /// Grounding records of the left graph.
    #[arg(long)]
    pub groundings1: Option<PathBuf>,
    /// Grounding records of the right graph.
    #[arg(long)]
    pub groundings2: Option<PathBuf>,
    /// Entity seed alignments (`left<TAB>right`), split into train and test.
    #[arg(long)]
    pub entity_seeds: PathBuf,
    /// Relation seed alignments; without them only entities are aligned.
    #[arg(long)]
    pub relation_seeds: Option<PathBuf>,
    /// Training configuration (`key = value` lines); defaults apply to absent keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed of every random choice; overrides `rng_seed` from the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output checkpoint.
    #[arg(long)]
    pub checkpoint_out: PathBuf,
    /// Output loss history CSV.
    #[arg(long)]
    pub loss_out: PathBuf,
    #[command(flatten)]
    pub overwrite: Overwrite,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirectionArg {
    SourceToTarget,
    TargetToSource,
    Averaged,
}

impl From<DirectionArg> for RankDirection {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::SourceToTarget => RankDirection::SourceToTarget,
            DirectionArg::TargetToSource => RankDirection::TargetToSource,
            DirectionArg::Averaged => RankDirection::Averaged,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Left graph file used for training.
    #[arg(long)]
    pub kg1: PathBuf,
    /// Right graph file used for training.
    #[arg(long)]
    pub kg2: PathBuf,
    /// Entity seed alignments used for training; the test split is recomputed from the checkpoint's configuration.
    #[arg(long)]
    pub entity_seeds: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value_t = DirectionArg::SourceToTarget)]
    pub direction: DirectionArg,
    /// Cut-offs N of Hits@N.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 10])]
    pub hits: Vec<usize>,
    /// Output metrics JSON.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overwrite: Overwrite,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Seed fractions used for training.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SWEEP_FRACTIONS)]
    pub fractions: Vec<f64>,
    #[arg(long, value_enum, default_value_t = DirectionArg::SourceToTarget)]
    pub direction: DirectionArg,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overwrite: Overwrite,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SideArg {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ChannelArg {
    /// Self-attention weights computed from the initial entity embeddings.
    SelfAttention,
    /// Cross-graph relation weights.
    CrossKg,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    /// Triple file of the graph on `--side`, as used for training.
    #[arg(long)]
    pub kg: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum)]
    pub side: SideArg,
    #[arg(long, value_enum)]
    pub channel: ChannelArg,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overwrite: Overwrite,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory; receives kg1.tsv, kg2.tsv, entity_seeds.tsv and relation_seeds.tsv.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub entities: usize,
    #[arg(long, default_value_t = 300)]
    pub triples: usize,
    #[arg(long, default_value_t = 5)]
    pub relations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub overwrite: Overwrite,
}

/// Parses `args` (program name first) and runs the chosen command.
///
/// `--help` and `--version` print and return `Ok`.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string())),
    };
    match cli.command {
        Command::Mine(a) => mine(a),
        Command::Transfer(a) => transfer(a),
        Command::Ground(a) => ground(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::DumpAdjacency(a) => dump(a),
        Command::Synth(a) => synth(a),
    }
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| match source.kind() {
        io::ErrorKind::NotFound => CliError::MissingFile(path.to_path_buf()),
        _ => CliError::Io {
            path: path.to_path_buf(),
            source,
        },
    })
}

fn source_name(path: &Path) -> String {
    path.display().to_string()
}

/// Refuses to touch any output before all of them are known to be writable.
fn check_outputs(paths: &[&Path], overwrite: &Overwrite) -> Result<()> {
    for path in paths {
        if !overwrite.force && path.exists() {
            return Err(CliError::OutputExists(path.to_path_buf()));
        }
    }
    Ok(())
}

fn write_output(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_kg(path: &Path) -> Result<KnowledgeGraph> {
    parse_kg(&read_input(path)?, &source_name(path)).map_err(CliError::Parse)
}

fn load_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    parse_pairs(&read_input(path)?, &source_name(path)).map_err(CliError::Parse)
}

fn load_rules(path: &Path) -> Result<Vec<RuleRecord>> {
    parse_rules(&read_input(path)?, &source_name(path)).map_err(CliError::Parse)
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<TrainConfig> {
    let mut config = match path {
        Some(p) => parse_config(&read_input(p)?, &source_name(p)).map_err(CliError::Config)?,
        None => TrainConfig::default(),
    };
    if let Some(seed) = seed {
        config.rng_seed = seed;
    }
    Ok(config)
}

fn mine(args: MineArgs) -> Result<()> {
    check_outputs(&[&args.rules_out, &args.stats_out], &args.overwrite)?;
    if !(0.0..=1.0).contains(&args.min_pca_conf) {
        return Err(CliError::Usage(format!(
            "--min-pca-conf {} outside [0, 1]",
            args.min_pca_conf
        )));
    }
    let kg = load_kg(&args.kg)?;
    let config = MiningConfig {
        max_premises: args.max_premises as usize,
        min_pca_confidence: args.min_pca_conf,
        min_support: args.min_support,
    };
    let mined = mine_rules(&kg, &config);
    let records: Vec<RuleRecord> = mined
        .iter()
        .map(|m| RuleRecord::from_mined(m, |r| kg.relation_label(r).to_string()))
        .collect();
    write_output(&args.rules_out, &write_rules(&records))?;
    write_output(
        &args.stats_out,
        &write_stats(Some(records.len()), None, None, None),
    )?;
    eprintln!("mined {} rules", records.len());
    Ok(())
}

/// Interns every relation label of a rule file.
fn intern_rules(
    records: &[RuleRecord],
    source: &str,
    interner: &mut Interner,
) -> Result<Vec<HornRule>> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.to_rule(|label| Some(RelationId(interner.intern(label))))
                .expect("interning resolves every label")
                .map_err(|e| CliError::Parse(ParseError::new(source, i + 1, e.to_string())))
        })
        .collect()
}

fn transfer(args: TransferArgs) -> Result<()> {
    check_outputs(&[&args.out], &args.overwrite)?;
    let source_records = load_rules(&args.source_rules)?;
    let target_records = load_rules(&args.target_rules)?;
    let pairs = load_pairs(&args.relation_seeds)?;

    let (mut source_labels, mut target_labels) = (Interner::default(), Interner::default());
    let source_rules = intern_rules(
        &source_records,
        &source_name(&args.source_rules),
        &mut source_labels,
    )?;
    let target_rules = intern_rules(
        &target_records,
        &source_name(&args.target_rules),
        &mut target_labels,
    )?;
    let oriented: Vec<(&str, &str)> = pairs
        .iter()
        .map(|(l, r)| match args.direction {
            TransferDirection::LeftToRight => (l.as_str(), r.as_str()),
            TransferDirection::RightToLeft => (r.as_str(), l.as_str()),
        })
        .collect();
    let relation_pairs: Vec<(RelationId, RelationId)> = oriented
        .iter()
        .map(|(s, t)| {
            (
                RelationId(source_labels.intern(s)),
                RelationId(target_labels.intern(t)),
            )
        })
        .collect();
    let seeds = SeedAlignments::new(Vec::new(), relation_pairs).map_err(|e| match e {
        kgalign_core::Error::ConflictingRelationPair { .. } => CliError::Parse(ParseError::new(
            source_name(&args.relation_seeds),
            0,
            relabel_conflict(&e, &source_labels, &target_labels),
        )),
        other => other.into(),
    })?;

    let moved = transfer_rules(&source_rules, &seeds, Direction::Forward, &target_rules);
    let records: Vec<RuleRecord> = moved
        .iter()
        .map(|r| RuleRecord::from_rule(r, |id| target_labels.label(id.0).to_string()))
        .collect();
    write_output(&args.out, &write_rules(&records))?;
    eprintln!("transferred {} rules", records.len());
    Ok(())
}

fn relabel_conflict(e: &kgalign_core::Error, source: &Interner, target: &Interner) -> String {
    match e {
        kgalign_core::Error::ConflictingRelationPair {
            relation,
            first,
            second,
        } => {
            let id = |s: &str| s.parse::<u32>().ok();
            match (id(relation), id(first), id(second)) {
                (Some(r), Some(a), Some(b))
                    if (r as usize) < source.len()
                        && (a as usize) < target.len()
                        && (b as usize) < target.len() =>
                {
                    format!(
                        "relation `{}` is aligned to both `{}` and `{}`",
                        source.label(r),
                        target.label(a),
                        target.label(b)
                    )
                }
                _ => e.to_string(),
            }
        }
        _ => e.to_string(),
    }
}

fn ground(args: GroundArgs) -> Result<()> {
    check_outputs(
        &[&args.kg_out, &args.groundings_out, &args.stats_out],
        &args.overwrite,
    )?;
    let kg = load_kg(&args.kg)?;
    let resolve_file = |path: &Path| -> Result<Vec<HornRule>> {
        let records = load_rules(path)?;
        let mut rules = Vec::new();
        for (i, record) in records.iter().enumerate() {
            match record.to_rule(|label| kg.relation_id(label)) {
                Some(rule) => rules.push(rule.map_err(|e| {
                    CliError::Parse(ParseError::new(source_name(path), i + 1, e.to_string()))
                })?),
                None => eprintln!(
                    "{}:{}: skipping rule over relations absent from the graph",
                    source_name(path),
                    i + 1
                ),
            }
        }
        Ok(rules)
    };
    let own = resolve_file(&args.rules)?;
    let transferred = match &args.transferred {
        Some(p) => resolve_file(p)?,
        None => Vec::new(),
    };
    let (completed, groundings, stats) = complete_with_transferred(&kg, &own, &transferred);
    let records = grounding_records(&completed, &groundings, &transferred);
    write_output(&args.kg_out, &write_kg(&completed))?;
    write_output(&args.groundings_out, &write_groundings(&records))?;
    let stats_text = match args.transferred {
        Some(_) => write_completion_stats(&stats),
        None => write_stats(Some(stats.rules), None, Some(stats.groundings), None),
    };
    write_output(&args.stats_out, &stats_text)?;
    eprintln!(
        "{} groundings, {} -> {} triples",
        groundings.len(),
        kg.num_triples(),
        completed.num_triples()
    );
    Ok(())
}

/// Both graphs, their groundings and all seed alignments, resolved by label.
struct Dataset {
    graphs: [GraphData; 2],
    seeds: SeedAlignments,
}

fn load_groundings(path: Option<&Path>, kg: &KnowledgeGraph) -> Result<Vec<Implication>> {
    let Some(path) = path else {
        return Ok(Vec::new());
    };
    let records =
        parse_groundings(&read_input(path)?, &source_name(path)).map_err(CliError::Parse)?;
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (premises, conclusion) = resolve_grounding(r, kg).map_err(|e| {
                CliError::Parse(ParseError::new(source_name(path), i + 1, e.to_string()))
            })?;
            Ok(Implication {
                premises,
                conclusion,
            })
        })
        .collect()
}

fn load_dataset(args: &DataArgs) -> Result<Dataset> {
    let left = load_kg(&args.kg1)?;
    let right = load_kg(&args.kg2)?;
    let entity_pairs = load_pairs(&args.entity_seeds)?;
    let relation_pairs = match &args.relation_seeds {
        Some(p) => load_pairs(p)?,
        None => Vec::new(),
    };
    let seeds = resolve_seeds(&entity_pairs, &relation_pairs, &left, &right)?;
    let groundings = [
        load_groundings(args.groundings1.as_deref(), &left)?,
        load_groundings(args.groundings2.as_deref(), &right)?,
    ];
    let [g1, g2] = groundings;
    Ok(Dataset {
        graphs: [
            GraphData {
                kg: left,
                groundings: g1,
            },
            GraphData {
                kg: right,
                groundings: g2,
            },
        ],
        seeds,
    })
}

fn train_cmd(args: TrainArgs) -> Result<()> {
    check_outputs(&[&args.checkpoint_out, &args.loss_out], &args.overwrite)?;
    let config = load_config(args.data.config.as_deref(), args.data.seed)?;
    config.validate()?;
    let data = load_dataset(&args.data)?;
    let (train_pairs, test_pairs) = split_entity_seeds(
        &data.seeds.entity_pairs,
        config.train_fraction,
        config.rng_seed,
    );
    let problem = PreparedProblem::new(AlignmentProblem {
        graphs: data.graphs,
        train_pairs,
        relation_pairs: data.seeds.relation_pairs,
    });
    let outcome = train(&problem, &config)?;
    write_output(
        &args.checkpoint_out,
        &write_checkpoint(&outcome.checkpoint, &config),
    )?;
    write_output(&args.loss_out, &loss_csv(&outcome.history))?;
    if let (Some(first), Some(last)) = (outcome.history.first(), outcome.history.last()) {
        eprintln!(
            "trained {} epochs on {} pairs ({} held out): loss {} -> {}",
            last.epoch,
            problem.entity_pairs.len(),
            test_pairs.len(),
            first.total,
            last.total
        );
    }
    Ok(())
}

fn eval_cmd(args: EvalArgs) -> Result<()> {
    check_outputs(&[&args.out], &args.overwrite)?;
    let left = load_kg(&args.kg1)?;
    let right = load_kg(&args.kg2)?;
    let pairs = load_pairs(&args.entity_seeds)?;
    let seeds = resolve_seeds(&pairs, &[], &left, &right)?;
    let (checkpoint, config) = parse_checkpoint(
        &read_input(&args.checkpoint)?,
        &source_name(&args.checkpoint),
    )
    .map_err(CliError::Parse)?;
    let shape = checkpoint.params.shape();
    if shape.entities != [left.num_entities(), right.num_entities()]
        || shape.relations != [left.num_relations(), right.num_relations()]
    {
        return Err(kgalign_core::Error::Shape(format!(
            "checkpoint covers {:?} entities and {:?} relations, graphs have [{}, {}] and [{}, {}]",
            shape.entities,
            shape.relations,
            left.num_entities(),
            right.num_entities(),
            left.num_relations(),
            right.num_relations()
        ))
        .into());
    }
    let (_, test) = split_entity_seeds(&seeds.entity_pairs, config.train_fraction, config.rng_seed);
    let patterns = [AdjacencyPattern::new(&left), AdjacencyPattern::new(&right)];
    let [l, r] = encode_both(&checkpoint.params, &patterns, config.cross_row_normalize);
    let report = evaluate_alignment(&test, &l, &r, &args.hits, args.direction.into())?;
    write_output(&args.out, &metrics_json(&report))?;
    eprintln!("evaluated {} test pairs: MRR {}", report.n_test, report.mrr);
    Ok(())
}

fn sweep_cmd(args: SweepArgs) -> Result<()> {
    check_outputs(&[&args.out], &args.overwrite)?;
    let config = load_config(args.data.config.as_deref(), args.data.seed)?;
    config.validate()?;
    let data = load_dataset(&args.data)?;
    let dataset = SweepDataset {
        graphs: data.graphs,
        entity_pairs: data.seeds.entity_pairs,
        relation_pairs: data.seeds.relation_pairs,
    };
    let rows = seed_sweep(&dataset, &config, &args.fractions, args.direction.into())?;
    for row in &rows {
        if let Err(e) = &row.metrics {
            eprintln!("fraction {}: {e}; row skipped", row.fraction);
        }
    }
    write_output(&args.out, &sweep_csv(&rows))?;
    Ok(())
}

fn dump(args: DumpArgs) -> Result<()> {
    check_outputs(&[&args.out], &args.overwrite)?;
    let kg = load_kg(&args.kg)?;
    let (checkpoint, config) = parse_checkpoint(
        &read_input(&args.checkpoint)?,
        &source_name(&args.checkpoint),
    )
    .map_err(CliError::Parse)?;
    let side = match args.side {
        SideArg::Left => Side::Left,
        SideArg::Right => Side::Right,
    };
    let params = &checkpoint.params;
    let (s, o) = (side.index(), side.other().index());
    if params.entities[s].nrows() != kg.num_entities()
        || params.relations[s].nrows() != kg.num_relations()
    {
        return Err(kgalign_core::Error::Shape(String::from(
            "checkpoint does not match the graph",
        ))
        .into());
    }
    let pattern = AdjacencyPattern::new(&kg);
    let adjacency = match args.channel {
        ChannelArg::SelfAttention => {
            self_attention_adjacency(&pattern, &params.entities[s], &params.attention)
        }
        ChannelArg::CrossKg => {
            cross_kg_with_cache(
                &pattern,
                &params.relations[s],
                &params.relations[o],
                config.cross_row_normalize,
            )
            .adjacency
        }
    };
    write_output(&args.out, &adjacency_tsv(&adjacency, &kg))
}

fn synth(args: SynthArgs) -> Result<()> {
    let names = [
        "kg1.tsv",
        "kg2.tsv",
        "entity_seeds.tsv",
        "relation_seeds.tsv",
    ];
    let paths: Vec<PathBuf> = names.iter().map(|n| args.out_dir.join(n)).collect();
    check_outputs(
        &paths.iter().map(PathBuf::as_path).collect::<Vec<_>>(),
        &args.overwrite,
    )?;
    if args.entities < 2 || args.relations == 0 {
        return Err(CliError::Usage(String::from(
            "need at least 2 entities and 1 relation",
        )));
    }
    fs::create_dir_all(&args.out_dir).map_err(|source| CliError::Io {
        path: args.out_dir.clone(),
        source,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let pair = isomorphic_pair(args.entities, args.triples, args.relations, &mut rng);
    let triples = |kg: &KnowledgeGraph, e: &str, r: &str| -> String {
        kg.triples()
            .iter()
            .map(|t| format!("{e}{}\t{r}{}\t{e}{}\n", t.head.0, t.relation.0, t.tail.0))
            .collect()
    };
    let entity_labels: Vec<(String, String)> = pair
        .seeds
        .entity_pairs
        .iter()
        .map(|(l, r)| (format!("a{}", l.0), format!("b{}", r.0)))
        .collect();
    let relation_labels: Vec<(String, String)> = pair
        .seeds
        .relation_pairs
        .iter()
        .map(|(l, r)| (format!("ra{}", l.0), format!("rb{}", r.0)))
        .collect();
    write_output(&paths[0], &triples(&pair.left, "a", "ra"))?;
    write_output(&paths[1], &triples(&pair.right, "b", "rb"))?;
    write_output(
        &paths[2],
        &write_pairs(entity_labels.iter().map(|(a, b)| (a.as_str(), b.as_str()))),
    )?;
    write_output(
        &paths[3],
        &write_pairs(
            relation_labels
                .iter()
                .map(|(a, b)| (a.as_str(), b.as_str())),
        ),
    )?;
    Ok(())
}
