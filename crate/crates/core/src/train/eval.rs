use std::path::Path;

use rayon::prelude::*;

use super::Model;
use crate::data::LabeledCloud;
use crate::numeric::argmax;
use crate::rng::{derive_indexed, seeded, STREAM_EVAL};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

/// Classifies every cloud. Stride sampling for cloud `i` is seeded from the
/// model seed and `i`, so results are independent of thread scheduling.
pub fn evaluate<T: Real>(model: &Model<T>, test: &[LabeledCloud<T>]) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::EmptyInput("test set is empty".into()));
    }
    let classes = model.num_classes();
    if let Some(bad) = test.iter().find(|c| c.label >= classes) {
        return Err(Error::Data(format!("test label {} but the model has {classes} classes", bad.label)));
    }
    let seed = model.config().seed;
    let predictions: Vec<(usize, usize)> = test
        .par_iter()
        .enumerate()
        .map(|(i, item)| {
            let mut rng = seeded(derive_indexed(seed, STREAM_EVAL, i as u64));
            let logits = model.predict(&item.cloud, &mut rng)?;
            let predicted = argmax(&logits).ok_or_else(|| Error::State("model produced no logits".into()))?;
            Ok((item.label, predicted))
        })
        .collect::<Result<_>>()?;
    let mut confusion = vec![vec![0usize; classes]; classes];
    for &(truth, predicted) in &predictions {
        confusion[truth][predicted] += 1;
    }
    let correct = (0..classes).map(|c| confusion[c][c]).sum();
    Ok(Evaluation { accuracy: correct as f64 / test.len() as f64, correct, total: test.len(), confusion })
}

/// Header row `truth\predicted,<class…>`, then one row per true class.
pub fn write_confusion_csv(path: &Path, eval: &Evaluation, class_names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let name = |i: usize| class_names.get(i).cloned().unwrap_or_else(|| i.to_string());
    let mut header = vec!["truth\\predicted".to_string()];
    header.extend((0..eval.confusion.len()).map(name));
    w.write_record(&header).map_err(|e| Error::Data(e.to_string()))?;
    for (i, row) in eval.confusion.iter().enumerate() {
        let mut rec = vec![name(i)];
        rec.extend(row.iter().map(|c| c.to_string()));
        w.write_record(&rec).map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
