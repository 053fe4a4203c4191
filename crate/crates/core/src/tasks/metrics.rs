use crate::error::{Error, Result};

/// Rank of a positive among itself and `negatives`, by descending score.
/// Tied scores share the mean rank of their block.
pub fn mean_rank(positive: f64, negatives: &[f64]) -> f64 {
    let above = negatives.iter().filter(|&&s| s > positive).count() as f64;
    let tied = negatives.iter().filter(|&&s| s == positive).count() as f64;
    1.0 + above + tied / 2.0
}

/// Mean reciprocal rank.
pub fn mrr(ranks: &[f64]) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::Undefined("mrr of an empty query set".into()));
    }
    if let Some(r) = ranks.iter().find(|&&r| r.is_nan() || r < 1.0) {
        return Err(Error::Argument(format!("rank {r} is below 1")));
    }
    Ok(ranks.iter().map(|r| 1.0 / r).sum::<f64>() / ranks.len() as f64)
}

/// Average precision of one ranked relevance list.
pub fn average_precision(ranked: &[bool]) -> Result<f64> {
    let n_rel = ranked.iter().filter(|&&r| r).count();
    if n_rel == 0 {
        return Err(Error::Undefined("query without relevant items".into()));
    }
    let mut hits = 0;
    let mut total = 0.0;
    for (k, &rel) in ranked.iter().enumerate() {
        if rel {
            hits += 1;
            total += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(total / n_rel as f64)
}

/// Mean average precision over ranked relevance lists.
pub fn map_metric(queries: &[Vec<bool>]) -> Result<f64> {
    if queries.is_empty() {
        return Err(Error::Undefined("map of an empty query set".into()));
    }
    let mut sum = 0.0;
    for q in queries {
        sum += average_precision(q)?;
    }
    Ok(sum / queries.len() as f64)
}

/// Average precision from raw scores. Within a block of tied scores the
/// relevant items are placed at evenly spaced positions, so a single
/// relevant item sits at the block's mean rank.
pub fn average_precision_scored(scores: &[f64], relevant: &[bool]) -> Result<f64> {
    if scores.len() != relevant.len() {
        return Err(Error::Argument(format!(
            "{} scores for {} relevance flags",
            scores.len(),
            relevant.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("average_precision"));
    }
    let n_rel = relevant.iter().filter(|&&r| r).count();
    if n_rel == 0 {
        return Err(Error::Undefined("query without relevant items".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut pos, mut hits, mut total) = (0usize, 0usize, 0.0);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let block = j - i;
        let rel = order[i..j].iter().filter(|&&k| relevant[k]).count();
        for k in 1..=rel {
            let at = pos as f64 + k as f64 * (block + 1) as f64 / (rel + 1) as f64;
            total += (hits + k) as f64 / at;
        }
        hits += rel;
        pos += block;
        i = j;
    }
    Ok(total / n_rel as f64)
}

fn check_labels(predictions: &[usize], labels: &[usize]) -> Result<()> {
    if predictions.is_empty() {
        return Err(Error::Undefined("f1 of empty inputs".into()));
    }
    if predictions.len() != labels.len() {
        return Err(Error::Argument(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    Ok(())
}

/// Micro-averaged F1 pooled over classes.
pub fn micro_f1(predictions: &[usize], labels: &[usize], n_classes: usize) -> Result<f64> {
    check_labels(predictions, labels)?;
    if let Some(&c) = labels.iter().chain(predictions).find(|&&c| c >= n_classes) {
        return Err(Error::Index {
            index: c,
            len: n_classes,
        });
    }
    let tp = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count() as f64;
    // each miss is one false positive and one false negative
    let miss = predictions.len() as f64 - tp;
    Ok(tp / (tp + miss))
}

/// The least frequent class among `labels`; ties go to the larger id.
pub fn minority_class(labels: &[usize]) -> Option<usize> {
    let mut counts = std::collections::BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    counts
        .into_iter()
        .min_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(c, _)| c)
}

/// Binary F1 with the rarest label class as positive.
pub fn minority_f1(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    check_labels(predictions, labels)?;
    let c = minority_class(labels).expect("non-empty");
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fn_ = 0.0;
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p == c, l == c) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            _ => {}
        }
    }
    Ok(2.0 * tp / (2.0 * tp + fp + fn_))
}
