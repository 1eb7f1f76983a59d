use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Sum the pattern weights of each panel's sub-images and renormalize.
///
/// `panel_of[d]` names the panel (an index below `panels`) of document `d`.
pub fn aggregate_panels(weights: ArrayView2<'_, f64>, panel_of: &[Option<usize>], panels: usize) -> Result<Array2<f64>> {
    if panel_of.len() != weights.nrows() {
        return Err(Error::shape(format!("{} panel entries for {} sub-images", panel_of.len(), weights.nrows())));
    }
    let mut out = Array2::zeros((panels, weights.ncols()));
    for (d, panel) in panel_of.iter().enumerate() {
        let p = panel
            .filter(|&p| p < panels)
            .ok_or_else(|| Error::input(format!("sub-image {d} is not mapped to a panel")))?;
        let mut row = out.row_mut(p);
        row += &weights.row(d);
    }
    for (p, mut row) in out.rows_mut().into_iter().enumerate() {
        let total = row.sum();
        if !(total > 0.0) {
            return Err(Error::input(format!("panel {p} has no sub-images")));
        }
        row.mapv_inplace(|v| v / total);
    }
    Ok(out)
}

/// Per-document sum of the weights of a set of 1-based pattern numbers.
pub fn pattern_subset_score(weights: ArrayView2<'_, f64>, patterns: &[usize]) -> Result<Vec<f64>> {
    let k = weights.ncols();
    if let Some(&bad) = patterns.iter().find(|&&p| p == 0 || p > k) {
        return Err(Error::input(format!("pattern {bad} outside 1..={k}")));
    }
    let mut set = patterns.to_vec();
    set.sort_unstable();
    set.dedup();
    Ok(weights
        .rows()
        .into_iter()
        .map(|row| set.iter().map(|&p| row[p - 1]).sum::<f64>().clamp(0.0, 1.0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn aggregation_examples() {
        let w = array![[0.2, 0.8]];
        assert_eq!(aggregate_panels(w.view(), &[Some(0)], 1).unwrap(), w);
        let w = array![[1.0, 0.0], [0.0, 1.0], [0.3, 0.7]];
        let agg = aggregate_panels(w.view(), &[Some(0), Some(0), Some(1)], 2).unwrap();
        assert_eq!(agg, array![[0.5, 0.5], [0.3, 0.7]]);
        assert!(agg.rows().into_iter().all(|r| (r.sum() - 1.0).abs() < 1e-10));
        assert!(matches!(aggregate_panels(w.view(), &[Some(0), None, Some(1)], 2), Err(Error::Input(_))));
        assert!(matches!(aggregate_panels(w.view(), &[Some(0), Some(0), Some(0)], 2), Err(Error::Input(_))));
    }

    #[test]
    fn subset_scores() {
        let w = array![[0.1, 0.2, 0.7], [0.5, 0.5, 0.0]];
        let all = pattern_subset_score(w.view(), &[1, 2, 3]).unwrap();
        assert!(all.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert_eq!(pattern_subset_score(w.view(), &[]).unwrap(), vec![0.0, 0.0]);
        let one = pattern_subset_score(w.view(), &[2]).unwrap();
        let two = pattern_subset_score(w.view(), &[2, 3]).unwrap();
        assert!(one.iter().zip(&two).all(|(a, b)| b >= a));
        assert!(matches!(pattern_subset_score(w.view(), &[4]), Err(Error::Input(_))));
        assert!(matches!(pattern_subset_score(w.view(), &[0]), Err(Error::Input(_))));
    }
}
