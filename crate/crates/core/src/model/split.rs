use rand::seq::SliceRandom;

use crate::bias::LabeledRecord;
use crate::error::{Error, Result};
use crate::seed;

/// Stratified train/test partition over (group, label) cells.
///
/// The total train size is `round(fraction · n)`; it is spread over the cells
/// by largest remainder so each cell's train share is within one record of
/// `fraction · n_cell`. Both sides keep the input order.
pub fn split(
    data: &[LabeledRecord],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledRecord>, Vec<LabeledRecord>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::validation(
            "train_fraction",
            format!("{train_fraction} is not in (0, 1)"),
        ));
    }

    let mut cells: [Vec<usize>; 4] = Default::default();
    for (i, r) in data.iter().enumerate() {
        cells[2 * r.record.group.index() + r.label as usize].push(i);
    }
    for (c, members) in cells.iter().enumerate() {
        if members.len() < 2 {
            return Err(Error::DegenerateDataset(format!(
                "cell (group={}, label={}) has {} records; stratified split needs at least 2",
                c / 2,
                c % 2,
                members.len()
            )));
        }
    }

    let total_train = (train_fraction * data.len() as f64).round() as usize;
    let quotas: Vec<f64> = cells.iter().map(|m| train_fraction * m.len() as f64).collect();
    let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut by_remainder: Vec<usize> = (0..4).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut missing = total_train.saturating_sub(alloc.iter().sum());
    for &c in by_remainder.iter().cycle().take(4 * 4) {
        if missing == 0 {
            break;
        }
        if alloc[c] < cells[c].len() - 1 && (alloc[c] as f64) < quotas[c] {
            alloc[c] += 1;
            missing -= 1;
        }
    }
    // Every cell keeps at least one record on each side.
    for (a, m) in alloc.iter_mut().zip(&cells) {
        *a = (*a).clamp(1, m.len() - 1);
    }

    let mut rng = seed::rng(seed);
    let mut in_train = vec![false; data.len()];
    for (members, &k) in cells.iter_mut().zip(&alloc) {
        members.shuffle(&mut rng);
        for &i in &members[..k] {
            in_train[i] = true;
        }
    }

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (r, t) in data.iter().zip(in_train) {
        if t {
            train.push(r.clone());
        } else {
            test.push(r.clone());
        }
    }
    Ok((train, test))
}
