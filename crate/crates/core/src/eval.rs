//! Document embeddings, nearest neighbours, contextual word similarity and
//! text-classification metrics.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::corpus::{tokenize, ClassId, Document, IdentityId};
use crate::error::{Error, Result};
use crate::identity::{infer_document_identities, infer_identity};
use crate::model::{dot, EmbeddingModel};

pub const DEFAULT_L2: f64 = 1.0;

/// Mean sense vector of a document plus token bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentVector {
    pub values: Vec<f64>,
    pub known_tokens: usize,
    pub skipped_tokens: usize,
}

/// Averages the sense vectors of `doc`.
///
/// Uses the document's own identities when it carries them; otherwise each
/// token's identity is inferred from the rest of the document first.
/// Tokens without a matching sense are skipped. An empty result is the
/// zero vector.
pub fn document_embedding(model: &EmbeddingModel, doc: &Document) -> DocumentVector {
    let identities: Vec<Option<IdentityId>> = if doc.is_identity_labeled() && !doc.is_empty() {
        doc.identities.iter().copied().map(Some).collect()
    } else {
        infer_document_identities(model, &doc.words)
    };
    let mut values = vec![0.0; model.dim()];
    let mut known = 0usize;
    for (&w, id) in doc.words.iter().zip(&identities) {
        let row = id.and_then(|i| {
            ((w as usize) < model.words.len())
                .then(|| model.senses.row(w, i))
                .flatten()
        });
        if let Some(row) = row {
            for (v, s) in values.iter_mut().zip(model.sense(row)) {
                *v += s;
            }
            known += 1;
        }
    }
    if known > 0 {
        values.iter_mut().for_each(|v| *v /= known as f64);
    }
    DocumentVector {
        values,
        known_tokens: known,
        skipped_tokens: doc.words.len() - known,
    }
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let denom = norm(u) * norm(v);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((dot(u, v) / denom).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub row: u32,
    pub similarity: f64,
}

/// Top-`k` sense rows by cosine to `query`, descending, ties by row.
///
/// The query row is always excluded; other senses of the same word are
/// excluded too when `exclude_same_word` is set.
pub fn nearest_neighbors(model: &EmbeddingModel, query: u32, k: usize, exclude_same_word: bool) -> Result<Vec<Neighbor>> {
    if query as usize >= model.num_senses() {
        return Err(Error::UnknownSense(format!("row {query}")));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let q = model.sense(query);
    let q_norm = norm(q);
    let q_word = model.senses.sense(query).word;
    let mut all = Vec::with_capacity(model.num_senses());
    for row in 0..model.num_senses() as u32 {
        if row == query || (exclude_same_word && model.senses.sense(row).word == q_word) {
            continue;
        }
        let v = model.sense(row);
        let denom = q_norm * norm(v);
        let similarity = if denom == 0.0 { 0.0 } else { (dot(q, v) / denom).clamp(-1.0, 1.0) };
        all.push(Neighbor { row, similarity });
    }
    let by_rank = |a: &Neighbor, b: &Neighbor| b.similarity.total_cmp(&a.similarity).then(a.row.cmp(&b.row));
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, by_rank);
        all.truncate(k);
    }
    all.sort_by(by_rank);
    Ok(all)
}

/// One line of a contextual similarity dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityPair {
    pub word1: String,
    pub context1: Vec<String>,
    pub position1: usize,
    pub word2: String,
    pub context2: Vec<String>,
    pub position2: usize,
    pub human_score: f64,
}

/// Splits a context around its `<b>target</b>` marker and tokenizes it.
/// Returns the tokens and the target position.
pub fn parse_marked_context(text: &str, word: &str, stopwords: &HashSet<String>) -> std::result::Result<(Vec<String>, usize), String> {
    let (before, rest) = text
        .split_once("<b>")
        .ok_or_else(|| "context has no <b> marker".to_string())?;
    let (target, after) = rest
        .split_once("</b>")
        .ok_or_else(|| "context has no </b> marker".to_string())?;
    let target = target.trim().to_lowercase();
    if target != word.to_lowercase() {
        return Err(format!("marked token `{target}` differs from `{word}`"));
    }
    let mut tokens = tokenize(before, stopwords);
    let position = tokens.len();
    tokens.push(target);
    tokens.extend(tokenize(after, stopwords));
    Ok((tokens, position))
}

/// Parses `word1 \t context1 \t word2 \t context2 \t score` lines.
pub fn parse_similarity_pairs(text: &str, stopwords: &HashSet<String>, path: &Path) -> Result<Vec<SimilarityPair>> {
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: String| Error::format(path, n + 1, m);
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 tab-separated fields, found {}", fields.len())));
        }
        let word1 = fields[0].trim().to_lowercase();
        let word2 = fields[2].trim().to_lowercase();
        let (context1, position1) = parse_marked_context(fields[1], &word1, stopwords).map_err(bad)?;
        let (context2, position2) = parse_marked_context(fields[3], &word2, stopwords).map_err(bad)?;
        let human_score = fields[4]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad score `{}`", fields[4].trim())))?;
        pairs.push(SimilarityPair {
            word1,
            context1,
            position1,
            word2,
            context2,
            position2,
            human_score,
        });
    }
    Ok(pairs)
}

pub fn load_similarity_pairs(path: impl AsRef<Path>, stopwords: &HashSet<String>) -> Result<Vec<SimilarityPair>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_similarity_pairs(&text, stopwords, path)
}

fn contextual_sense(model: &EmbeddingModel, word: &str, context: &[String], position: usize) -> Result<u32> {
    let target = model.word_id(word).ok_or_else(|| Error::UnknownWord(word.to_string()))?;
    let mut ids = Vec::with_capacity(context.len());
    let mut target_at = None;
    for (i, token) in context.iter().enumerate() {
        if i == position {
            target_at = Some(ids.len());
            ids.push(target);
        } else if let Some(id) = model.word_id(token) {
            ids.push(id);
        }
    }
    let target_at = target_at.ok_or_else(|| Error::InvalidParameter(format!("position {position} outside context")))?;
    let identity = infer_identity(model, &ids, target_at)?;
    Ok(model.senses.row(target, identity).expect("inferred identity has a sense"))
}

/// Cosine between the senses picked for each word from its own context.
pub fn contextual_similarity(model: &EmbeddingModel, pair: &SimilarityPair) -> Result<f64> {
    let a = contextual_sense(model, &pair.word1, &pair.context1, pair.position1)?;
    let b = contextual_sense(model, &pair.word2, &pair.context2, pair.position2)?;
    cosine(model.sense(a), model.sense(b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityEvaluation {
    pub spearman: f64,
    pub used: usize,
    pub skipped: usize,
}

/// Spearman correlation between model and human scores. Pairs with an
/// out-of-vocabulary word are skipped.
pub fn evaluate_similarity(model: &EmbeddingModel, pairs: &[SimilarityPair]) -> Result<SimilarityEvaluation> {
    let mut ours = Vec::new();
    let mut human = Vec::new();
    let mut skipped = 0;
    for pair in pairs {
        match contextual_similarity(model, pair) {
            Ok(s) => {
                ours.push(s);
                human.push(pair.human_score);
            }
            Err(Error::UnknownWord(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(SimilarityEvaluation {
        spearman: spearman(&ours, &human)?,
        used: ours.len(),
        skipped,
    })
}

/// 1-based ranks with ties sharing their mean rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two observations"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant sequence"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// One-vs-rest L2-regularized logistic regression.
///
/// Each binary model minimizes `l2/2 ‖w‖² + Σ log(1 + exp(-y (w·x + b)))`
/// with an unpenalized bias, solved by Newton's method.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticClassifier {
    /// One row per class: `dim` weights followed by the bias.
    pub weights: Vec<Vec<f64>>,
    pub dim: usize,
}

const NEWTON_MAX_ITERS: usize = 100;
const NEWTON_TOL: f64 = 1e-10;

fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn fit_binary(x: &DMatrix<f64>, y: &[f64], l2: f64) -> Result<DVector<f64>> {
    let (n, p) = x.shape();
    let d = p - 1;
    let objective = |w: &DVector<f64>| -> f64 {
        let z = x * w;
        let reg = 0.5 * l2 * w.rows(0, d).norm_squared();
        reg + z.iter().zip(y).map(|(zi, yi)| log1p_exp(-yi * zi)).sum::<f64>()
    };
    let mut w = DVector::zeros(p);
    let mut f = objective(&w);
    for _ in 0..NEWTON_MAX_ITERS {
        let z = x * &w;
        let mut r = DVector::zeros(n);
        let mut curv = DVector::zeros(n);
        for i in 0..n {
            let s = crate::trainer::sigmoid(y[i] * z[i]);
            r[i] = -y[i] * (1.0 - s);
            curv[i] = s * (1.0 - s);
        }
        let mut grad = x.tr_mul(&r);
        for j in 0..d {
            grad[j] += l2 * w[j];
        }
        if grad.norm() <= NEWTON_TOL * (1.0 + f.abs()) {
            break;
        }
        let mut xd = x.clone();
        for (i, mut row) in xd.row_iter_mut().enumerate() {
            row *= curv[i];
        }
        let mut h = x.tr_mul(&xd);
        for j in 0..d {
            h[(j, j)] += l2;
        }
        // a tiny ridge keeps the bias direction positive definite when all
        // curvatures underflow
        let mut ridge = 0.0;
        let step = loop {
            let mut hr = h.clone();
            if ridge > 0.0 {
                for j in 0..p {
                    hr[(j, j)] += ridge;
                }
            }
            if let Some(ch) = hr.cholesky() {
                break ch.solve(&(-&grad));
            }
            ridge = if ridge == 0.0 { 1e-12 } else { ridge * 10.0 };
            if ridge > 1e6 {
                return Err(Error::Numerical("logistic regression Hessian is not positive definite".into()));
            }
        };
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..60 {
            let cand = &w + &step * t;
            let fc = objective(&cand);
            if fc <= f + 1e-4 * t * slope {
                w = cand;
                improved = f - fc > 0.0;
                f = fc;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok(w)
}

/// Fits one binary model per class observed in `labels`.
pub fn train_classifier(features: &[Vec<f64>], labels: &[ClassId], l2: f64) -> Result<LogisticClassifier> {
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: features.len(),
            right: labels.len(),
        });
    }
    if !(l2.is_finite() && l2 > 0.0) {
        return Err(Error::InvalidParameter(format!("l2 must be positive, got {l2}")));
    }
    let dim = features.first().map_or(0, Vec::len);
    if let Some(f) = features.iter().find(|f| f.len() != dim) {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: f.len(),
        });
    }
    let distinct: HashSet<ClassId> = labels.iter().copied().collect();
    if distinct.len() < 2 {
        return Err(Error::SingleClass);
    }
    let classes = *labels.iter().max().expect("non-empty") as usize + 1;
    let x = DMatrix::from_fn(features.len(), dim + 1, |i, j| if j < dim { features[i][j] } else { 1.0 });
    let mut weights = Vec::with_capacity(classes);
    for c in 0..classes as ClassId {
        if !distinct.contains(&c) {
            // absent class: always scores below every fitted one
            let mut w = vec![0.0; dim + 1];
            w[dim] = f64::NEG_INFINITY;
            weights.push(w);
            continue;
        }
        let y: Vec<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
        weights.push(fit_binary(&x, &y, l2)?.iter().copied().collect());
    }
    Ok(LogisticClassifier { weights, dim })
}

impl LogisticClassifier {
    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    /// Per-class decision values `w·x + b`.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: x.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .map(|w| dot(&w[..self.dim], x) + w[self.dim])
            .collect())
    }

    /// Highest-scoring class; ties go to the lowest id.
    pub fn predict(&self, x: &[f64]) -> Result<ClassId> {
        let scores = self.scores(x)?;
        let mut best = 0;
        for (c, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = c;
            }
        }
        Ok(best as ClassId)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub predicted: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[gold][predicted]`
    pub confusion: Vec<Vec<u64>>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Micro/macro F1, per-class metrics and the confusion matrix.
///
/// Macro-F1 averages only classes that occur in gold or predictions.
pub fn classification_report(predictions: &[ClassId], gold: &[ClassId]) -> Result<ClassificationReport> {
    if predictions.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::InvalidParameter("classification report needs at least one instance".into()));
    }
    let classes = predictions.iter().chain(gold).max().map_or(0, |&m| m as usize + 1);
    let mut confusion = vec![vec![0u64; classes]; classes];
    for (&p, &g) in predictions.iter().zip(gold) {
        confusion[g as usize][p as usize] += 1;
    }
    let mut per_class = Vec::with_capacity(classes);
    let (mut tp_all, mut fp_all, mut fn_all) = (0u64, 0u64, 0u64);
    let mut macro_sum = 0.0;
    let mut macro_n = 0usize;
    for c in 0..classes {
        let tp = confusion[c][c];
        let support: u64 = confusion[c].iter().sum();
        let predicted: u64 = confusion.iter().map(|row| row[c]).sum();
        let (fp, fn_) = (predicted - tp, support - tp);
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
        let f1 = ratio(2 * tp, 2 * tp + fp + fn_);
        if support + predicted > 0 {
            macro_sum += f1;
            macro_n += 1;
        }
        per_class.push(ClassMetrics {
            precision: ratio(tp, predicted),
            recall: ratio(tp, support),
            f1,
            support,
            predicted,
        });
    }
    Ok(ClassificationReport {
        micro_f1: ratio(2 * tp_all, 2 * tp_all + fp_all + fn_all),
        macro_f1: macro_sum / macro_n as f64,
        accuracy: ratio(tp_all, gold.len() as u64),
        per_class,
        confusion,
    })
}

impl ClassificationReport {
    /// `key=value` lines followed by an aligned per-class table.
    pub fn render(&self, class_names: &[String]) -> String {
        let name = |c: usize| class_names.get(c).cloned().unwrap_or_else(|| c.to_string());
        let mut out = String::new();
        let _ = writeln!(out, "micro_f1={:.6}", self.micro_f1);
        let _ = writeln!(out, "macro_f1={:.6}", self.macro_f1);
        let _ = writeln!(out, "accuracy={:.6}", self.accuracy);
        for (c, m) in self.per_class.iter().enumerate() {
            let n = name(c);
            let _ = writeln!(out, "class.{n}.precision={:.6}", m.precision);
            let _ = writeln!(out, "class.{n}.recall={:.6}", m.recall);
            let _ = writeln!(out, "class.{n}.f1={:.6}", m.f1);
            let _ = writeln!(out, "class.{n}.support={}", m.support);
        }
        let width = (0..self.per_class.len()).map(|c| name(c).len()).max().unwrap_or(0).max(5);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  {:>9}  {:>7}", "class", "precision", "recall", "f1", "support");
        for (c, m) in self.per_class.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}",
                name(c),
                m.precision,
                m.recall,
                m.f1,
                m.support
            );
        }
        out
    }
}

/// Outcome of [`evaluate_classification`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationOutcome {
    pub report: ClassificationReport,
    pub predictions: Vec<ClassId>,
    pub gold: Vec<ClassId>,
    /// Test tokens without a usable sense.
    pub skipped_tokens: usize,
}

/// Embeds both splits, fits the classifier on `train` and scores `test`.
///
/// Training documents use their own identities when labeled; test
/// documents are always inferred token by token.
pub fn evaluate_classification(
    model: &EmbeddingModel,
    train: &crate::corpus::LabeledCorpus,
    test: &crate::corpus::LabeledCorpus,
    l2: f64,
) -> Result<ClassificationOutcome> {
    let train_x: Vec<Vec<f64>> = train.docs.iter().map(|d| document_embedding(model, d).values).collect();
    let clf = train_classifier(&train_x, &train.labels()?, l2)?;
    let gold = test.labels()?;
    let mut predictions = Vec::with_capacity(gold.len());
    let mut skipped_tokens = 0;
    for doc in &test.docs {
        let unlabeled = Document::new(doc.words.clone(), doc.label);
        let v = document_embedding(model, &unlabeled);
        skipped_tokens += v.skipped_tokens;
        predictions.push(clf.predict(&v.values)?);
    }
    Ok(ClassificationOutcome {
        report: classification_report(&predictions, &gold)?,
        predictions,
        gold,
        skipped_tokens,
    })
}
