//! A position-wise classifier `p(y | s) = softmax(E[s] W + b)` trained by
//! mean negative log-likelihood. It is small enough to check gradients by
//! finite differences and to compare embedding initializations quickly.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bkft::{
    extend_vocab, EmbeddingTable, InitContext, InitReport, InitializerRegistry, SyllableTokenMap,
    VocabIndex,
};
use crate::braille::BrailleFragment;
use crate::braille::BRAILLE_ASCII;
use crate::kb::{CharPinyin, KnowledgeBase, Language, PriorEntry};
use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum ToyError {
    #[error("token id {id} out of range at position {position}")]
    InvalidTokenId { position: usize, id: usize },
    #[error("input and target lengths differ ({inputs} vs {targets})")]
    LengthMismatch { inputs: usize, targets: usize },
    #[error("configurations differ beyond init_mode")]
    ConfigMismatch,
    #[error("corpus {0} is empty")]
    EmptyCorpus(&'static str),
    #[error("invalid hyperparameter: {0}")]
    InvalidConfig(&'static str),
    #[error("loss increased from {before} to {after} at step {step}")]
    NotMonotone {
        step: usize,
        before: f64,
        after: f64,
    },
    #[error("initializer: {0}")]
    Init(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub embeddings: EmbeddingTable,
    /// `dim x classes`, row-major.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    /// Dense, same layout as the embedding table.
    pub embeddings: Vec<f64>,
    /// Embedding rows that appear in the batch, ascending.
    pub rows: Vec<usize>,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Gradients {
    pub fn norm(&self) -> f64 {
        self.embeddings
            .iter()
            .chain(&self.w)
            .chain(&self.b)
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

/// Aligned input tokens and target classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyPair {
    pub inputs: Vec<usize>,
    pub targets: Vec<usize>,
}

impl ToyModel {
    pub fn new(embeddings: EmbeddingTable, classes: usize) -> Self {
        let d = embeddings.dim();
        ToyModel {
            embeddings,
            w: vec![0.0; d * classes],
            b: vec![0.0; classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.b.len()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.dim()
    }

    fn check(&self, inputs: &[usize], targets: &[usize]) -> Result<(), ToyError> {
        if inputs.len() != targets.len() {
            return Err(ToyError::LengthMismatch {
                inputs: inputs.len(),
                targets: targets.len(),
            });
        }
        for (position, (&s, &y)) in inputs.iter().zip(targets).enumerate() {
            if s >= self.embeddings.rows() {
                return Err(ToyError::InvalidTokenId { position, id: s });
            }
            if y >= self.classes() {
                return Err(ToyError::InvalidTokenId { position, id: y });
            }
        }
        Ok(())
    }

    pub fn logits(&self, token: usize) -> Vec<f64> {
        let e = self.embeddings.row(token);
        let k = self.classes();
        let mut z = self.b.clone();
        for (i, &x) in e.iter().enumerate() {
            let row = &self.w[i * k..(i + 1) * k];
            for (zj, wj) in z.iter_mut().zip(row) {
                *zj += x * wj;
            }
        }
        z
    }

    pub fn predict(&self, token: usize) -> usize {
        let z = self.logits(token);
        let mut best = 0;
        for (j, &v) in z.iter().enumerate() {
            if v > z[best] {
                best = j;
            }
        }
        best
    }
}

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

/// Mean over positions of `-log p(y_t | s_t)`.
pub fn forward_nll(model: &ToyModel, inputs: &[usize], targets: &[usize]) -> Result<f64, ToyError> {
    model.check(inputs, targets)?;
    if inputs.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = inputs
        .iter()
        .zip(targets)
        .map(|(&s, &y)| -log_softmax(&model.logits(s))[y])
        .sum();
    Ok(total / inputs.len() as f64)
}

/// Loss and its exact gradient with respect to every parameter.
pub fn backward(
    model: &ToyModel,
    inputs: &[usize],
    targets: &[usize],
) -> Result<(f64, Gradients), ToyError> {
    model.check(inputs, targets)?;
    let (d, k) = (model.dim(), model.classes());
    let mut g = Gradients {
        embeddings: vec![0.0; model.embeddings.as_flat().len()],
        rows: inputs.to_vec(),
        w: vec![0.0; d * k],
        b: vec![0.0; k],
    };
    g.rows.sort_unstable();
    g.rows.dedup();
    if inputs.is_empty() {
        return Ok((0.0, g));
    }
    let scale = 1.0 / inputs.len() as f64;
    let mut loss = 0.0;
    for (&s, &y) in inputs.iter().zip(targets) {
        let lp = log_softmax(&model.logits(s));
        loss -= lp[y];
        let dz: Vec<f64> = lp
            .iter()
            .enumerate()
            .map(|(j, l)| (l.exp() - f64::from(u8::from(j == y))) * scale)
            .collect();
        let e = model.embeddings.row(s);
        for i in 0..d {
            let w_row = &model.w[i * k..(i + 1) * k];
            let gw_row = &mut g.w[i * k..(i + 1) * k];
            let mut ge = 0.0;
            for j in 0..k {
                gw_row[j] += e[i] * dz[j];
                ge += w_row[j] * dz[j];
            }
            g.embeddings[s * d + i] += ge;
        }
        for (gb, z) in g.b.iter_mut().zip(&dz) {
            *gb += z;
        }
    }
    Ok((loss * scale, g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    C,
    E,
}

/// Alternates while both corpora have batches left, then appends the rest.
pub fn schedule_labels(n_c: usize, n_e: usize) -> Vec<Source> {
    let mut out = Vec::with_capacity(n_c + n_e);
    let (mut c, mut e) = (0, 0);
    while c < n_c || e < n_e {
        if c < n_c && (c <= e || e == n_e) {
            out.push(Source::C);
            c += 1;
        } else {
            out.push(Source::E);
            e += 1;
        }
    }
    out
}

/// `(source, batch index within that corpus)` for one epoch; batch order
/// within each corpus is shuffled by `seed`.
pub fn schedule_batches(n_c: usize, n_e: usize, seed: u64) -> Vec<(Source, usize)> {
    let mut rng = rng::stream(seed, &[0x5343_4844]);
    let mut order_c: Vec<usize> = (0..n_c).collect();
    let mut order_e: Vec<usize> = (0..n_e).collect();
    order_c.shuffle(&mut rng);
    order_e.shuffle(&mut rng);
    let (mut ic, mut ie) = (order_c.into_iter(), order_e.into_iter());
    schedule_labels(n_c, n_e)
        .into_iter()
        .map(|s| match s {
            Source::C => (s, ic.next().expect("label count matches")),
            Source::E => (s, ie.next().expect("label count matches")),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    Bkft,
    Random,
}

impl InitMode {
    pub fn strategy(self) -> &'static str {
        match self {
            InitMode::Bkft => "bkft",
            InitMode::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_seq_len: usize,
    /// Pairs per batch.
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub init_mode: InitMode,
    /// Heavy-ball coefficient; 0 is plain gradient descent.
    pub momentum: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            max_seq_len: 1024,
            batch_size: 8,
            epochs: 3,
            seed: 0,
            init_mode: InitMode::Bkft,
            momentum: 0.0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), ToyError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ToyError::InvalidConfig("learning_rate must be positive"));
        }
        if self.max_seq_len == 0 || self.batch_size == 0 {
            return Err(ToyError::InvalidConfig(
                "max_seq_len and batch_size must be positive",
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(ToyError::InvalidConfig("momentum must be in [0, 1)"));
        }
        Ok(())
    }

    fn same_except_init(&self, other: &TrainConfig) -> bool {
        TrainConfig {
            init_mode: other.init_mode,
            ..self.clone()
        } == *other
    }
}

fn flatten<'a>(
    pairs: impl Iterator<Item = &'a ToyPair>,
    max_len: usize,
) -> (Vec<usize>, Vec<usize>) {
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for p in pairs {
        let n = p.inputs.len().min(max_len);
        inputs.extend_from_slice(&p.inputs[..n]);
        targets.extend_from_slice(&p.targets[..n]);
    }
    (inputs, targets)
}

pub fn token_accuracy(model: &ToyModel, pairs: &[ToyPair]) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for p in pairs {
        for (&s, &y) in p.inputs.iter().zip(&p.targets) {
            hit += usize::from(model.predict(s) == y);
            total += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

struct Optimizer {
    lr: f64,
    momentum: f64,
    velocity: Option<Gradients>,
}

impl Optimizer {
    fn step(&mut self, model: &mut ToyModel, g: Gradients) {
        let g = if self.momentum > 0.0 {
            let v = match self.velocity.take() {
                Some(mut v) => {
                    let mu = self.momentum;
                    let blend = |v: &mut [f64], g: &[f64]| {
                        v.iter_mut().zip(g).for_each(|(a, b)| *a = mu * *a + b)
                    };
                    blend(&mut v.embeddings, &g.embeddings);
                    blend(&mut v.w, &g.w);
                    blend(&mut v.b, &g.b);
                    v
                }
                None => g,
            };
            self.velocity = Some(v.clone());
            v
        } else {
            g
        };
        let lr = self.lr;
        let apply = |p: &mut [f64], g: &[f64]| p.iter_mut().zip(g).for_each(|(a, b)| *a -= lr * b);
        if self.momentum > 0.0 {
            apply(model.embeddings.as_flat_mut(), &g.embeddings);
        } else {
            let d = model.dim();
            for &r in &g.rows {
                apply(
                    model.embeddings.row_mut(r),
                    &g.embeddings[r * d..(r + 1) * d],
                );
            }
        }
        apply(&mut model.w, &g.w);
        apply(&mut model.b, &g.b);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub init: InitReport,
    /// Mean batch loss per epoch.
    pub losses: Vec<f64>,
    pub initial_accuracy: f64,
    /// Held-out token accuracy after each epoch.
    pub heldout_accuracy: Vec<f64>,
    /// First epoch (0 = before training) reaching the target accuracy.
    pub epochs_to_target: Option<usize>,
}

/// Trains `model` in place with interleaved batches.
pub fn train(
    model: &mut ToyModel,
    corpus_c: &[ToyPair],
    corpus_e: &[ToyPair],
    heldout: &[ToyPair],
    config: &TrainConfig,
    target_accuracy: f64,
) -> Result<RunReport, ToyError> {
    config.validate()?;
    let batches_c: Vec<&[ToyPair]> = corpus_c.chunks(config.batch_size).collect();
    let batches_e: Vec<&[ToyPair]> = corpus_e.chunks(config.batch_size).collect();
    let mut opt = Optimizer {
        lr: config.learning_rate,
        momentum: config.momentum,
        velocity: None,
    };
    let initial_accuracy = token_accuracy(model, heldout);
    let mut epochs_to_target = (initial_accuracy >= target_accuracy).then_some(0);
    let mut losses = Vec::with_capacity(config.epochs);
    let mut heldout_accuracy = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let schedule = schedule_batches(
            batches_c.len(),
            batches_e.len(),
            rng::mix(&[config.seed, epoch as u64]),
        );
        let mut sum = 0.0;
        for (src, i) in &schedule {
            let batch = match src {
                Source::C => batches_c[*i],
                Source::E => batches_e[*i],
            };
            let (inputs, targets) = flatten(batch.iter(), config.max_seq_len);
            let (loss, g) = backward(model, &inputs, &targets)?;
            sum += loss;
            opt.step(model, g);
        }
        losses.push(if schedule.is_empty() {
            0.0
        } else {
            sum / schedule.len() as f64
        });
        let acc = token_accuracy(model, heldout);
        heldout_accuracy.push(acc);
        if epochs_to_target.is_none() && acc >= target_accuracy {
            epochs_to_target = Some(epoch + 1);
        }
    }
    Ok(RunReport {
        seed: config.seed,
        init: InitReport::default(),
        losses,
        initial_accuracy,
        heldout_accuracy,
        epochs_to_target,
    })
}

/// Full-batch gradient descent; with `check_monotone` any loss increase
/// larger than `1e-12` is an error.
pub fn train_full_batch(
    model: &mut ToyModel,
    inputs: &[usize],
    targets: &[usize],
    learning_rate: f64,
    steps: usize,
    check_monotone: bool,
) -> Result<Vec<f64>, ToyError> {
    let mut opt = Optimizer {
        lr: learning_rate,
        momentum: 0.0,
        velocity: None,
    };
    let mut losses = Vec::with_capacity(steps + 1);
    for step in 0..steps {
        let (loss, g) = backward(model, inputs, targets)?;
        if check_monotone {
            if let Some(&prev) = losses.last() {
                if loss > prev + 1e-12 {
                    return Err(ToyError::NotMonotone {
                        step,
                        before: prev,
                        after: loss,
                    });
                }
            }
        }
        losses.push(loss);
        opt.step(model, g);
    }
    losses.push(forward_nll(model, inputs, targets)?);
    Ok(losses)
}

/// Everything one experiment arm needs: a pretrained vocabulary and head,
/// the knowledge bases and the data.
#[derive(Debug, Clone)]
pub struct ToyTask {
    pub vocab: VocabIndex,
    /// Braille rows are zero.
    pub embeddings: EmbeddingTable,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub kc: KnowledgeBase,
    pub ke: KnowledgeBase,
    pub syllables: SyllableTokenMap,
    pub train_c: Vec<ToyPair>,
    pub train_e: Vec<ToyPair>,
    pub heldout: Vec<ToyPair>,
}

impl ToyTask {
    pub fn initialized_model(
        &self,
        mode: InitMode,
        seed: u64,
    ) -> Result<(ToyModel, InitReport), ToyError> {
        let registry = InitializerRegistry::default();
        let init = registry
            .get(mode.strategy())
            .map_err(|e| ToyError::Init(e.to_string()))?;
        let mut table = self.embeddings.clone();
        let report = init.initialize(InitContext {
            table: &mut table,
            vocab: &self.vocab,
            kc: &self.kc,
            ke: &self.ke,
            syllables: &self.syllables,
            seed,
        });
        Ok((
            ToyModel {
                embeddings: table,
                w: self.w.clone(),
                b: self.b.clone(),
            },
            report,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub init_mode: InitMode,
    pub config: TrainConfig,
    pub runs: Vec<RunReport>,
    /// Median of `epochs_to_target`, counting runs that never reach the
    /// target as `epochs + 1`.
    pub median_epochs_to_target: f64,
    pub median_final_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub target_accuracy: f64,
    pub seeds: Vec<u64>,
    pub arms: Vec<ArmReport>,
}

impl ExperimentReport {
    pub fn arm(&self, mode: InitMode) -> Option<&ArmReport> {
        self.arms.iter().find(|a| a.init_mode == mode)
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Trains every arm on identical data and schedules for each seed.
pub fn run_experiment(
    task: &ToyTask,
    configs: &[TrainConfig],
    seeds: &[u64],
    target_accuracy: f64,
) -> Result<ExperimentReport, ToyError> {
    if task.train_c.is_empty() {
        return Err(ToyError::EmptyCorpus("C"));
    }
    if task.train_e.is_empty() {
        return Err(ToyError::EmptyCorpus("E"));
    }
    if configs.windows(2).any(|w| !w[0].same_except_init(&w[1])) {
        return Err(ToyError::ConfigMismatch);
    }
    let mut arms = Vec::new();
    for cfg in configs {
        let mut runs = Vec::new();
        for &seed in seeds {
            let (mut model, init) = task.initialized_model(cfg.init_mode, seed)?;
            let run_cfg = TrainConfig {
                seed,
                ..cfg.clone()
            };
            let mut run = train(
                &mut model,
                &task.train_c,
                &task.train_e,
                &task.heldout,
                &run_cfg,
                target_accuracy,
            )?;
            run.init = init;
            runs.push(run);
        }
        let epochs: Vec<f64> = runs
            .iter()
            .map(|r| r.epochs_to_target.unwrap_or(cfg.epochs + 1) as f64)
            .collect();
        let finals: Vec<f64> = runs
            .iter()
            .map(|r| {
                r.heldout_accuracy
                    .last()
                    .copied()
                    .unwrap_or(r.initial_accuracy)
            })
            .collect();
        arms.push(ArmReport {
            init_mode: cfg.init_mode,
            config: cfg.clone(),
            median_epochs_to_target: median(&epochs),
            median_final_accuracy: median(&finals),
            runs,
        });
    }
    Ok(ExperimentReport {
        target_accuracy,
        seeds: seeds.to_vec(),
        arms,
    })
}

/// Sizes and noise levels of the synthetic task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub chinese_fragments: usize,
    pub english_fragments: usize,
    pub homophones: usize,
    pub classes: usize,
    pub dim: usize,
    pub train_pairs: usize,
    pub heldout_pairs: usize,
    pub pair_len: usize,
    /// Standard deviation of per-token noise around the class centroid.
    pub noise: f64,
    /// Scale of the pretrained head.
    pub head_scale: f64,
    /// Replace the KBs with a random permutation of their counterparts.
    pub shuffled_kb: bool,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            chinese_fragments: 150,
            english_fragments: 50,
            homophones: 3,
            classes: 16,
            dim: 32,
            train_pairs: 500,
            heldout_pairs: 100,
            pair_len: 4,
            noise: 1.0,
            head_scale: 4.0,
            shuffled_kb: false,
        }
    }
}

fn letters(mut i: usize) -> String {
    let mut s = Vec::new();
    loop {
        s.push((b'a' + (i % 26) as u8) as char);
        i /= 26;
        if i == 0 {
            break;
        }
    }
    s.iter().rev().collect()
}

/// The `i`-th two-cell fragment over the non-blank Braille ASCII characters.
fn synthetic_fragment(i: usize) -> String {
    let cells: Vec<char> = BRAILLE_ASCII.chars().skip(1).collect();
    let n = cells.len();
    [cells[(i / n) % n], cells[i % n]].iter().collect()
}

/// Synthetic Braille-to-class task. Every Chinese fragment reads as one
/// syllable whose homophone characters share the fragment's class; every
/// English fragment stands for one word of its class. Pretrained embeddings
/// are class centroids plus noise and the head scores centroids.
pub fn synthetic_task(spec: &SyntheticSpec, seed: u64) -> ToyTask {
    let mut r = rng::stream(seed, &[0x5441_534b]);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let d = spec.dim;
    let centroids: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| (0..d).map(|_| normal.sample(&mut r)).collect())
        .collect();

    let nc = spec.chinese_fragments;
    let ne = spec.english_fragments;
    let class_c: Vec<usize> = (0..nc).map(|_| r.gen_range(0..spec.classes)).collect();
    let class_e: Vec<usize> = (0..ne).map(|_| r.gen_range(0..spec.classes)).collect();

    let mut vocab = VocabIndex::new();
    let mut flat = Vec::new();
    let mut readings = CharPinyin::default();
    let mut token =
        |vocab: &mut VocabIndex, name: String, class: usize, r: &mut rand_chacha::ChaCha8Rng| {
            vocab.push(name).expect("synthetic names are unique");
            flat.extend(
                centroids[class]
                    .iter()
                    .map(|m| m + spec.noise * normal.sample(r)),
            );
        };
    let syllable = |i: usize| format!("{}1", letters(i));
    for (i, &c) in class_c.iter().enumerate() {
        for h in 0..spec.homophones {
            let ch = char::from_u32(0x4E00 + (i * spec.homophones + h) as u32).expect("CJK block");
            readings.insert(ch, syllable(i));
            token(&mut vocab, ch.to_string(), c, &mut r);
        }
    }
    let word = |i: usize| format!("w{}", letters(i));
    for (i, &c) in class_e.iter().enumerate() {
        token(&mut vocab, word(i), c, &mut r);
    }
    let mut embeddings = EmbeddingTable::from_flat(d, flat).expect("finite synthetic embeddings");

    let frags: Vec<String> = (0..nc + ne).map(synthetic_fragment).collect();
    let frag_rows = extend_vocab(&mut vocab, &mut embeddings, &frags).expect("distinct fragments");

    let mut zh_counterparts: Vec<usize> = (0..nc).collect();
    let mut en_counterparts: Vec<usize> = (0..ne).collect();
    if spec.shuffled_kb {
        let mut pr = rng::stream(seed, &[0x5348_5546]);
        zh_counterparts.shuffle(&mut pr);
        en_counterparts.shuffle(&mut pr);
    }
    let entry = |f: &str, counterpart: String, language| PriorEntry {
        fragment: BrailleFragment::new(f).expect("synthetic fragment is valid"),
        counterpart,
        language,
        frequency: 1,
    };
    let kc = KnowledgeBase::from_entries(
        Language::Chinese,
        (0..nc)
            .map(|i| entry(&frags[i], syllable(zh_counterparts[i]), Language::Chinese))
            .collect(),
    );
    let ke = KnowledgeBase::from_entries(
        Language::English,
        (0..ne)
            .map(|i| entry(&frags[nc + i], word(en_counterparts[i]), Language::English))
            .collect(),
    );
    let syllables = SyllableTokenMap::build(&vocab, &readings);

    let k = spec.classes;
    let mut w = vec![0.0; d * k];
    for (j, c) in centroids.iter().enumerate() {
        for i in 0..d {
            w[i * k + j] = spec.head_scale * c[i] / d as f64;
        }
    }
    let b = vec![0.0; k];

    let target = |f: usize| if f < nc { class_c[f] } else { class_e[f - nc] };
    let zh_share = nc as f64 / (nc + ne) as f64;
    let n_train_c = (spec.train_pairs as f64 * zh_share).round() as usize;
    let make_pairs = |count: usize,
                      pool: std::ops::Range<usize>,
                      cover: bool,
                      r: &mut rand_chacha::ChaCha8Rng| {
        let mut next_cover = pool.start;
        (0..count)
            .map(|_| {
                let picks: Vec<usize> = (0..spec.pair_len)
                    .map(|_| {
                        if cover && next_cover < pool.end {
                            next_cover += 1;
                            next_cover - 1
                        } else {
                            r.gen_range(pool.clone())
                        }
                    })
                    .collect();
                ToyPair {
                    inputs: picks.iter().map(|&f| frag_rows[f]).collect(),
                    targets: picks.iter().map(|&f| target(f)).collect(),
                }
            })
            .collect::<Vec<_>>()
    };
    let train_c = make_pairs(n_train_c, 0..nc, true, &mut r);
    let train_e = make_pairs(spec.train_pairs - n_train_c, nc..nc + ne, true, &mut r);
    let n_held_c = (spec.heldout_pairs as f64 * zh_share).round() as usize;
    let mut heldout = make_pairs(n_held_c, 0..nc, false, &mut r);
    heldout.extend(make_pairs(
        spec.heldout_pairs - n_held_c,
        nc..nc + ne,
        false,
        &mut r,
    ));

    ToyTask {
        vocab,
        embeddings,
        w,
        b,
        kc,
        ke,
        syllables,
        train_c,
        train_e,
        heldout,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(rows: usize, dim: usize, classes: usize, seed: u64) -> ToyModel {
        let mut r = rng::stream(seed, &[1]);
        let n = Normal::new(0.0, 1.0).unwrap();
        let e = EmbeddingTable::from_flat(dim, (0..rows * dim).map(|_| n.sample(&mut r)).collect())
            .unwrap();
        let mut m = ToyModel::new(e, classes);
        m.w.iter_mut().for_each(|x| *x = n.sample(&mut r));
        m.b.iter_mut().for_each(|x| *x = n.sample(&mut r));
        m
    }

    #[test]
    fn uniform_model_loss_is_log_classes() {
        let m = ToyModel::new(EmbeddingTable::zeros(3, 2), 5);
        assert!((forward_nll(&m, &[0, 1, 2], &[0, 3, 4]).unwrap() - 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn peaked_logits_have_tiny_loss_and_gradient() {
        let mut m = ToyModel::new(EmbeddingTable::zeros(1, 1), 3);
        m.b = vec![50.0, 0.0, 0.0];
        let (loss, g) = backward(&m, &[0], &[0]).unwrap();
        assert!(loss < 1e-3);
        assert!(g.norm() < 1e-8);
    }

    #[test]
    fn invalid_ids() {
        let m = ToyModel::new(EmbeddingTable::zeros(2, 2), 3);
        assert_eq!(
            forward_nll(&m, &[0, 2], &[0, 0]),
            Err(ToyError::InvalidTokenId { position: 1, id: 2 })
        );
        assert!(matches!(
            backward(&m, &[0], &[3]),
            Err(ToyError::InvalidTokenId { .. })
        ));
    }

    #[test]
    fn unused_rows_get_zero_gradient() {
        let m = tiny(5, 3, 4, 2);
        let (_, g) = backward(&m, &[1, 3], &[0, 2]).unwrap();
        for row in [0, 2, 4] {
            assert!(g.embeddings[row * 3..row * 3 + 3].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn schedules() {
        use Source::*;
        assert_eq!(schedule_labels(2, 2), vec![C, E, C, E]);
        assert_eq!(schedule_labels(3, 1), vec![C, E, C, C]);
        assert_eq!(schedule_labels(0, 3), vec![E, E, E]);
        assert_eq!(schedule_labels(1, 3), vec![C, E, E, E]);
        let s = schedule_batches(4, 2, 7);
        let mut c: Vec<usize> = s.iter().filter(|x| x.0 == C).map(|x| x.1).collect();
        c.sort_unstable();
        assert_eq!(c, vec![0, 1, 2, 3]);
        assert_eq!(s, schedule_batches(4, 2, 7));
    }

    #[test]
    fn full_batch_descent_is_monotone() {
        let mut m = tiny(6, 4, 3, 5);
        let inputs = [0, 1, 2, 3, 4, 5];
        let targets = [0, 1, 2, 0, 1, 2];
        let losses = train_full_batch(&mut m, &inputs, &targets, 0.05, 200, true).unwrap();
        assert!(losses.last().unwrap() < &losses[0]);
    }

    #[test]
    fn one_epoch_one_loss_point() {
        let spec = SyntheticSpec {
            chinese_fragments: 2,
            english_fragments: 1,
            classes: 2,
            dim: 4,
            train_pairs: 2,
            heldout_pairs: 1,
            pair_len: 1,
            ..Default::default()
        };
        let mut task = synthetic_task(&spec, 1);
        task.train_c.truncate(1);
        task.train_e.truncate(1);
        let cfgs = [
            TrainConfig {
                epochs: 1,
                ..Default::default()
            },
            TrainConfig {
                epochs: 1,
                init_mode: InitMode::Random,
                ..Default::default()
            },
        ];
        let rep = run_experiment(&task, &cfgs, &[1, 2], 0.9).unwrap();
        for arm in &rep.arms {
            for run in &arm.runs {
                assert_eq!(run.losses.len(), 1);
            }
        }
        let bad = [
            cfgs[0].clone(),
            TrainConfig {
                epochs: 2,
                ..cfgs[1].clone()
            },
        ];
        assert_eq!(
            run_experiment(&task, &bad, &[1], 0.9),
            Err(ToyError::ConfigMismatch)
        );
    }

    #[test]
    fn synthetic_task_shape() {
        let task = synthetic_task(&SyntheticSpec::default(), 0);
        assert_eq!(task.train_c.len() + task.train_e.len(), 500);
        assert_eq!(task.heldout.len(), 100);
        assert_eq!(task.kc.len(), 150);
        assert_eq!(task.ke.len(), 50);
        assert_eq!(task.vocab.len(), 150 * 3 + 50 + 200);
    }
}
