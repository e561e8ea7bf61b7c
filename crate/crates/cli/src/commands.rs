use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use braillekit::augment::{self, AnnotatedExample, AugmentConfig, AugmenterRegistry};
use braillekit::bkft::{self, InitContext, InitializerRegistry, SyllableTokenMap};
use braillekit::braille::{self, BrailleSequence};
use braillekit::dataset::{self, Direction, ParallelExample, TaskType};
use braillekit::kb::{Attribute, Language};
use braillekit::metrics::{self, MetricConfig, MetricReport, Tokenize};
use braillekit::tokenizer;
use braillekit::toy::{self, ExperimentReport, InitMode, SyntheticSpec, ToyPair, TrainConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::{
    AugmentArgs, Cli, CodecArgs, Command, EvalArgs, InitEmbedArgs, KbQuery, PerturbArgs,
    RenderArgs, TrainArgs, TranscribeArgs, UsageError,
};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T> {
    s.parse().map_err(usage)
}

struct Ctx {
    config: Config,
    out: Option<PathBuf>,
}

impl Ctx {
    fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.config.seed).unwrap_or(0)
    }

    fn sink(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(io::BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(io::BufWriter::new(io::stdout().lock())),
        })
    }

    fn emit(&self, text: &str) -> Result<()> {
        let mut w = self.sink()?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    fn emit_json<T: Serialize>(&self, value: &T) -> Result<()> {
        self.emit(&(serde_json::to_string_pretty(value)? + "\n"))
    }

    fn emit_jsonl<T: Serialize>(&self, rows: &[T]) -> Result<()> {
        let mut w = self.sink()?;
        dataset::write_jsonl(&mut w, rows)?;
        w.flush()?;
        Ok(())
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_corpus<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    dataset::read_jsonl(open(path)?).with_context(|| path.display().to_string())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    open(path)?
        .lines()
        .collect::<io::Result<_>>()
        .map_err(Into::into)
}

fn text_or_stdin(text: Option<String>) -> Result<Vec<String>> {
    match text {
        Some(t) => Ok(vec![t]),
        None => io::stdin()
            .lock()
            .lines()
            .collect::<io::Result<_>>()
            .map_err(Into::into),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(jobs) = cli.jobs.or(config.jobs) {
        if jobs == 0 {
            return Err(usage("--jobs must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()?;
    }
    let ctx = Ctx {
        config,
        out: cli.out,
    };
    if cli.version {
        let mut s = format!("braillekit {}\n", env!("CARGO_PKG_VERSION"));
        for (name, sum) in ctx.config.resources.checksums()? {
            s.push_str(&format!("{sum}  {name}\n"));
        }
        return ctx.emit(&s);
    }
    let Some(command) = cli.command else {
        use clap::CommandFactory;
        let _ = Cli::command().write_help(&mut io::stderr());
        return Err(usage("a subcommand is required"));
    };
    match command {
        Command::Codec(a) => codec(&ctx, a),
        Command::Validate { input } => validate(&ctx, &input),
        Command::Perturb(a) => perturb(&ctx, a),
        Command::Tokenize(a) => {
            let kb = ctx.config.resources.kb(parse(&a.language)?)?;
            let seq = BrailleSequence::parse(&a.text)?;
            ctx.emit_jsonl(&tokenizer::segment(&seq, &kb).tokens)
        }
        Command::Wordseg(a) => {
            let kb = ctx.config.resources.kb(parse(&a.language)?)?;
            ctx.emit(&format!("{}\n", tokenizer::word_segment(&a.text, &kb)?))
        }
        Command::Kb { query } => kb(&ctx, query),
        Command::InitEmbed(a) => init_embed(&ctx, a),
        Command::Augment(a) => augment(&ctx, a),
        Command::Transcribe(a) => transcribe(&ctx, a),
        Command::Render(a) => render(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::Train(a) => train(&ctx, a),
        Command::Ingest { input } => {
            let report = dataset::ingest(read_corpus(&input)?);
            for (id, issues) in &report.rejected {
                eprintln!("rejected {id}: {}", serde_json::to_string(issues)?);
            }
            eprintln!(
                "kept {}, rejected {}, duplicates {}",
                report.kept.len(),
                report.rejected.len(),
                report.duplicates
            );
            ctx.emit_jsonl(&report.kept)
        }
    }
}

fn codec(ctx: &Ctx, a: CodecArgs) -> Result<()> {
    let mut out = String::new();
    for line in text_or_stdin(a.text)? {
        let converted = if a.direction.to_unicode {
            braille::ascii_to_unicode(&line)?
        } else {
            braille::unicode_to_ascii(&line)?
        };
        out.push_str(&converted);
        out.push('\n');
    }
    ctx.emit(&out)
}

#[derive(Serialize)]
struct ValidationSummary {
    total: usize,
    clean: usize,
    invalid: Vec<Invalid>,
}

#[derive(Serialize)]
struct Invalid {
    id: String,
    issues: Vec<dataset::Issue>,
}

fn validate(ctx: &Ctx, input: &Path) -> Result<()> {
    let corpus: Vec<ParallelExample> = read_corpus(input)?;
    let invalid: Vec<Invalid> = corpus
        .iter()
        .filter_map(|ex| {
            let issues = dataset::validate_example(ex);
            (!issues.is_empty()).then(|| Invalid {
                id: ex.id.clone(),
                issues,
            })
        })
        .collect();
    let summary = ValidationSummary {
        total: corpus.len(),
        clean: corpus.len() - invalid.len(),
        invalid,
    };
    ctx.emit_json(&summary)?;
    match summary.invalid.len() {
        0 => Ok(()),
        n => Err(anyhow!("{n} of {} examples have issues", summary.total)),
    }
}

fn perturb(ctx: &Ctx, a: PerturbArgs) -> Result<()> {
    let seed = ctx.seed(a.seed);
    let mut out = String::new();
    for (i, line) in text_or_stdin(a.text)?.iter().enumerate() {
        let seq = BrailleSequence::parse(line)?;
        out.push_str(
            &braille::perturb_dots(&seq, a.rate, augment::example_seed(seed, i))?.to_string(),
        );
        out.push('\n');
    }
    ctx.emit(&out)
}

#[derive(Serialize)]
struct KbStats {
    zh_entries: usize,
    zh_words: usize,
    zh_attributes: usize,
    en_entries: usize,
    char_readings: usize,
    rules: usize,
}

fn kb(ctx: &Ctx, query: KbQuery) -> Result<()> {
    let res = &ctx.config.resources;
    match query {
        KbQuery::Lookup { fragment, language } => {
            let kb = res.kb(parse(&language)?)?;
            ctx.emit_json(&kb.lookup(&fragment))
        }
        KbQuery::Inverse {
            counterpart,
            language,
        } => {
            let kb = res.kb(parse(&language)?)?;
            let frags: Vec<&str> = kb
                .inverse_lookup(&counterpart)
                .into_iter()
                .map(|f| f.as_str())
                .collect();
            ctx.emit_json(&frags)
        }
        KbQuery::Stats => {
            let zh = res.zh_kb()?;
            ctx.emit_json(&KbStats {
                zh_entries: zh.len(),
                zh_words: zh.words().len(),
                zh_attributes: zh.attributes().len(),
                en_entries: res.en_kb()?.len(),
                char_readings: res.readings()?.len(),
                rules: res.transcriber()?.rules.rules().len(),
            })
        }
        KbQuery::Sample {
            attribute,
            exclude,
            seed,
        } => {
            let zh = res.zh_kb()?;
            let Ok(attribute) = attribute.parse::<Attribute>();
            ctx.emit_json(zh.sample_compatible(&attribute, &exclude, ctx.seed(seed))?)
        }
    }
}

fn init_embed(ctx: &Ctx, a: InitEmbedArgs) -> Result<()> {
    let res = &ctx.config.resources;
    let registry = InitializerRegistry::default();
    let init = registry.get(&a.init).map_err(|e| usage(e.to_string()))?;
    let (kc, ke) = (res.zh_kb()?, res.en_kb()?);
    let fragments: Vec<String> = match &a.fragments {
        Some(p) => read_lines(p)?
            .into_iter()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect(),
        None => {
            let mut all: Vec<String> = kc
                .fragments()
                .into_iter()
                .chain(ke.fragments())
                .map(|f| f.as_str().to_string())
                .collect();
            all.sort();
            all.dedup();
            all
        }
    };
    let (mut vocab, mut table) = bkft::load_embeddings(&a.embeddings)?;
    bkft::extend_vocab(&mut vocab, &mut table, &fragments)?;
    let syllables = SyllableTokenMap::build(&vocab, &res.readings()?);
    let report = init.initialize(InitContext {
        table: &mut table,
        vocab: &vocab,
        kc: &kc,
        ke: &ke,
        syllables: &syllables,
        seed: ctx.seed(a.seed),
    });
    bkft::save_embeddings(&a.save, &vocab, &table)?;
    ctx.emit_json(&report)
}

fn augment(ctx: &Ctx, a: AugmentArgs) -> Result<()> {
    let res = &ctx.config.resources;
    let section = &ctx.config.augment;
    let config = AugmentConfig {
        k: a.k.or(section.k).unwrap_or(1),
        min_sim: a.min_sim.or(section.min_sim).unwrap_or(0.0),
        attributes: a.attributes.map(|v| {
            v.iter()
                .map(|s| {
                    let Ok(attr) = s.parse::<Attribute>();
                    attr
                })
                .collect()
        }),
    };
    let rate = a.rate.or(section.rate).unwrap_or(0.15);
    let zh = AugmenterRegistry::standard(&res.zh_kb()?, config.clone(), rate);
    let en = AugmenterRegistry::standard(&res.en_kb()?, config, rate);
    let (zh_aug, en_aug) = (
        zh.get(&a.strategy).map_err(|e| usage(e.to_string()))?,
        en.get(&a.strategy)?,
    );
    let zh_kb = res.zh_kb()?;
    let corpus: Vec<AnnotatedExample> = read_corpus(&a.input)?;
    let seed = ctx.seed(a.seed);
    let tag_spans = a.strategy == "syntax-tree";
    let out = corpus
        .par_iter()
        .enumerate()
        .map(|(i, ex)| {
            let ex = if tag_spans && ex.spans.is_empty() {
                augment::tag(&ex.example, &zh_kb)?
            } else {
                ex.clone()
            };
            match ex.example.language {
                Language::Chinese => zh_aug.augment_one(&ex, seed, i),
                Language::English => en_aug.augment_one(&ex, seed, i),
            }
        })
        .collect::<Vec<_>>();
    let mut kept = Vec::with_capacity(out.len());
    for (ex, result) in corpus.iter().zip(out) {
        match result {
            Ok(aug) => kept.push(aug),
            Err(e) if a.keep_going => eprintln!("skipped {}: {e}", ex.example.id),
            Err(e) => {
                return Err(anyhow::Error::new(e).context(format!("example {}", ex.example.id)))
            }
        }
    }
    ctx.emit_jsonl(&kept)
}

fn transcribe(ctx: &Ctx, a: TranscribeArgs) -> Result<()> {
    let t = ctx.config.resources.transcriber()?;
    let pinyin: Option<Vec<String>> = a
        .pinyin
        .map(|p| p.split_whitespace().map(String::from).collect());
    let seq = dataset::transcribe_mixed(&a.text, parse(&a.language)?, pinyin.as_deref(), &t)?;
    ctx.emit(&format!("{seq}\n"))
}

fn template(ctx: &Ctx, name: &str) -> Result<(String, String)> {
    let direct = Path::new(name);
    let path = if direct.is_file() {
        direct.to_path_buf()
    } else {
        let dir = ctx
            .config
            .resources
            .templates
            .clone()
            .unwrap_or_else(|| PathBuf::from("templates"));
        let candidate = dir.join(format!("{name}.txt"));
        if !candidate.is_file() {
            return Err(usage(format!("template {name:?} not found")));
        }
        candidate
    };
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut text = String::new();
    File::open(&path)?.read_to_string(&mut text)?;
    Ok((id, text.trim_end_matches('\n').to_string()))
}

fn render(ctx: &Ctx, a: RenderArgs) -> Result<()> {
    let direction = match a.direction.as_str() {
        "braille-to-text" => Direction::BrailleToText,
        "text-to-braille" => Direction::TextToBraille,
        other => return Err(usage(format!("unknown direction {other:?}"))),
    };
    let task: TaskType = parse(&a.task)?;
    let (id, text) = template(ctx, &a.template)?;
    let corpus: Vec<ParallelExample> = read_corpus(&a.input)?;
    let records = corpus
        .iter()
        .map(|ex| dataset::render_instruction(&id, &text, ex, direction, task))
        .collect::<Result<Vec<_>, _>>()?;
    ctx.emit_jsonl(&records)
}

fn eval(ctx: &Ctx, a: EvalArgs) -> Result<()> {
    let section = &ctx.config.eval;
    let defaults = MetricConfig::default();
    let tokenize: Tokenize = match a.tokenize.as_ref().or(section.tokenize.as_ref()) {
        Some(t) => parse(t)?,
        None => defaults.tokenize,
    };
    let config = MetricConfig {
        tokenize,
        max_n: a.max_n.or(section.max_n).unwrap_or(defaults.max_n),
        char_n: section.char_n.unwrap_or(defaults.char_n),
        word_n: section.word_n.unwrap_or(defaults.word_n),
        beta: section.beta.unwrap_or(defaults.beta),
        ter_shifts: !a.no_ter_shifts && section.ter_shifts.unwrap_or(defaults.ter_shifts),
    };
    let names = a
        .metrics
        .or_else(|| section.metrics.clone())
        .unwrap_or_else(|| ["bleu", "chrf", "cer", "ter"].map(String::from).to_vec());
    let registry = metrics::MetricRegistry::with_config(&config);
    for n in &names {
        registry.get(n).map_err(|e| usage(e.to_string()))?;
    }
    let hyps = read_lines(&a.hyp)?;
    let refs = read_lines(&a.reference)?;
    let h: Vec<&str> = hyps.iter().map(String::as_str).collect();
    let r: Vec<&str> = refs.iter().map(String::as_str).collect();
    let parts = names
        .par_iter()
        .map(|n| metrics::evaluate(&h, &r, &[n.as_str()], &config))
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = MetricReport {
        per_pair: vec![Default::default(); h.len()],
        corpus: Default::default(),
        stats: Default::default(),
        config,
    };
    for part in parts {
        for (dst, src) in report.per_pair.iter_mut().zip(part.per_pair) {
            dst.extend(src);
        }
        report.corpus.extend(part.corpus);
        report.stats.extend(part.stats);
    }
    ctx.emit_json(&report)
}

fn train(ctx: &Ctx, a: TrainArgs) -> Result<()> {
    let section = &ctx.config.train;
    let spec = SyntheticSpec {
        shuffled_kb: a.shuffled_kb,
        ..SyntheticSpec::default()
    };
    let mut task = toy::synthetic_task(&spec, a.task_seed);
    if let Some(dir) = &a.dump_corpora {
        fs::create_dir_all(dir)?;
        for (name, pairs) in [
            ("zh", &task.train_c),
            ("en", &task.train_e),
            ("heldout", &task.heldout),
        ] {
            let path = dir.join(format!("{name}.jsonl"));
            dataset::write_jsonl(io::BufWriter::new(File::create(&path)?), pairs)?;
        }
        return Ok(());
    }
    if let Some(p) = &a.corpus_zh {
        task.train_c = read_corpus::<ToyPair>(p)?;
    }
    if let Some(p) = &a.corpus_en {
        task.train_e = read_corpus::<ToyPair>(p)?;
    }
    let modes = a
        .init
        .iter()
        .map(|s| match s.as_str() {
            "bkft" => Ok(InitMode::Bkft),
            "random" => Ok(InitMode::Random),
            other => Err(usage(format!("unknown init mode {other:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let base = TrainConfig {
        learning_rate: a.learning_rate.or(section.learning_rate).unwrap_or(0.5),
        batch_size: a.batch_size.or(section.batch_size).unwrap_or(25),
        epochs: a.epochs.or(section.epochs).unwrap_or(30),
        momentum: section.momentum.unwrap_or(0.0),
        max_seq_len: section
            .max_seq_len
            .unwrap_or(TrainConfig::default().max_seq_len),
        ..TrainConfig::default()
    };
    let seeds = a
        .seeds
        .or_else(|| section.seeds.clone())
        .unwrap_or_else(|| (1..=5).collect());
    let target = a.target.or(section.target).unwrap_or(0.9);
    let arms = modes
        .par_iter()
        .map(|&init_mode| {
            let cfg = TrainConfig {
                init_mode,
                ..base.clone()
            };
            toy::run_experiment(&task, &[cfg], &seeds, target)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = ExperimentReport {
        target_accuracy: target,
        seeds,
        arms: arms.into_iter().flat_map(|r| r.arms).collect(),
    };
    let json = serde_json::to_string_pretty(&report)? + "\n";
    match &a.report {
        Some(p) => fs::write(p, &json).with_context(|| format!("writing {}", p.display()))?,
        None => ctx.emit(&json)?,
    }
    for arm in &report.arms {
        eprintln!(
            "{}: median epochs to {target} = {}, median final accuracy = {:.4}",
            arm.init_mode.strategy(),
            arm.median_epochs_to_target,
            arm.median_final_accuracy
        );
    }
    Ok(())
}
