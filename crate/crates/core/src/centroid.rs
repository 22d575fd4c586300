//! Means in DTW space, k-means, agglomerative prototypes and nearest-neighbor
//! classification.
//!
//! The variation of a matrix `Y` with respect to a set of series is
//! `F(Y) = sum_i min_phi ||x_i (x)_phi Y - Y||^2`, i.e. the summed squared
//! elastic Euclidean distances. A mean minimises `F`. The update keeps the
//! active paths fixed and moves every cell towards the samples aligned to it:
//! `Y' = Y + eta * sum_i (X_i - Y)` with `X_i = x_i (x)_{phi_i} Y`. At
//! `eta = 1/N` this is the plain average of the embeddings, and cells that no
//! active path visits keep their value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elastic::{elastic_euclidean, elastic_euclidean_cost};
use crate::error::{Error, Result};
use crate::learn::{Example, Label};
use crate::matrix::WeightMatrix;
use crate::warp::{dtw_distance, TimeSeries, WarpingPath};

/// Summed squared elastic Euclidean distance from `data` to `y`.
pub fn variation(y: &WeightMatrix, data: &[TimeSeries]) -> Result<f64> {
    let costs: Vec<f64> = data
        .par_iter()
        .map(|x| elastic_euclidean_cost(x, y))
        .collect::<Result<_>>()?;
    Ok(costs.iter().sum())
}

fn active_paths(y: &WeightMatrix, data: &[TimeSeries]) -> Result<Vec<(f64, WarpingPath)>> {
    data.par_iter()
        .map(|x| elastic_euclidean(x, y).map(|m| (m.cost, m.path)))
        .collect()
}

fn apply_update(y: &WeightMatrix, data: &[TimeSeries], paths: &[WarpingPath], eta: f64) -> WeightMatrix {
    let (rows, cols) = y.shape();
    let mut sums = vec![0.0; rows * cols];
    let mut counts = vec![0u32; rows * cols];
    for (x, path) in data.iter().zip(paths) {
        for (i, j) in path.cells() {
            sums[i * cols + j] += x[i];
            counts[i * cols + j] += 1;
        }
    }
    let mut next = y.clone();
    for i in 0..rows {
        for j in 0..cols {
            let c = counts[i * cols + j];
            if c > 0 {
                let old = y[(i, j)];
                next[(i, j)] = (1.0 - eta * f64::from(c)) * old + eta * sums[i * cols + j];
            }
        }
    }
    next
}

/// One update with fixed active paths, `Y + eta * sum_i (X_i - Y)`.
pub fn mean_step(y: &WeightMatrix, data: &[TimeSeries], eta: f64) -> Result<WeightMatrix> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidParameter("step size must be positive".into()));
    }
    let paths: Vec<WarpingPath> = active_paths(y, data)?.into_iter().map(|(_, p)| p).collect();
    Ok(apply_update(y, data, &paths, eta))
}

/// Step size of the mean update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MeanRate {
    /// `1/N`, the averaging update.
    InverseCount,
    Constant { eta: f64 },
}

impl MeanRate {
    fn eta(&self, n: usize) -> f64 {
        match *self {
            MeanRate::InverseCount => 1.0 / n as f64,
            MeanRate::Constant { eta } => eta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanConfig {
    /// `n`, at least the longest series.
    pub rows: usize,
    /// Elasticity `m`.
    pub cols: usize,
    pub rate: MeanRate,
    pub max_iters: usize,
    pub tol: f64,
}

impl MeanConfig {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            rate: MeanRate::InverseCount,
            max_iters: 50,
            tol: 1e-6,
        }
    }

    /// `rows` = longest series, `cols` = `rows`.
    pub fn square_for(data: &[TimeSeries]) -> Self {
        let n = data.iter().map(|x| x.len()).max().unwrap_or(1);
        Self::new(n, n)
    }

    fn validate(&self, data: &[TimeSeries]) -> Result<()> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidDims {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if let Some(x) = data.iter().find(|x| x.len() > self.rows) {
            return Err(Error::SeriesTooLong {
                len: x.len(),
                rows: self.rows,
            });
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive".into()));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidParameter("tol must be non-negative".into()));
        }
        if let MeanRate::Constant { eta } = self.rate {
            if !(eta.is_finite() && eta > 0.0) {
                return Err(Error::InvalidParameter("step size must be positive".into()));
            }
        }
        Ok(())
    }
}

/// A fitted mean and its variation.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanState {
    pub y: WeightMatrix,
    pub variation: f64,
    pub iterations: usize,
    /// Variation before the first update and after each one.
    pub trace: Vec<f64>,
}

/// Index of the series minimising the summed DTW distance to the others;
/// the first one wins ties.
pub fn medoid(data: &[TimeSeries]) -> Result<usize> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let d = pairwise_dtw(data, None)?;
    let mut best = (0, f64::INFINITY);
    for (i, row) in d.iter().enumerate() {
        let s: f64 = row.iter().sum();
        if s < best.1 {
            best = (i, s);
        }
    }
    Ok(best.0)
}

/// Identical-row matrix whose rows are `x` resampled to `cols` samples.
pub fn identical_row_start(x: &TimeSeries, rows: usize, cols: usize) -> Result<WeightMatrix> {
    WeightMatrix::identical_rows(rows, x.resampled(cols)?.values())
}

/// Mean of `data` started from the identical-row matrix of its medoid.
pub fn compute_mean(data: &[TimeSeries], config: &MeanConfig) -> Result<MeanState> {
    config.validate(data)?;
    let start = identical_row_start(&data[medoid(data)?], config.rows, config.cols)?;
    compute_mean_from(data, start, config)
}

/// Mean of `data` started from `start`.
pub fn compute_mean_from(
    data: &[TimeSeries],
    start: WeightMatrix,
    config: &MeanConfig,
) -> Result<MeanState> {
    config.validate(data)?;
    if start.shape() != (config.rows, config.cols) {
        return Err(Error::ShapeMismatch {
            expected: (config.rows, config.cols),
            actual: start.shape(),
        });
    }
    let eta = config.rate.eta(data.len());
    let mut y = start;
    let mut current = active_paths(&y, data)?;
    let mut f = current.iter().map(|(c, _)| c).sum::<f64>();
    let mut trace = vec![f];
    let mut iterations = 0;
    while iterations < config.max_iters {
        let paths: Vec<WarpingPath> = current.into_iter().map(|(_, p)| p).collect();
        y = apply_update(&y, data, &paths, eta);
        iterations += 1;
        current = active_paths(&y, data)?;
        let next = current.iter().map(|(c, _)| c).sum::<f64>();
        trace.push(next);
        let done = (f - next).abs() <= config.tol * f.max(1.0);
        f = next;
        if done {
            break;
        }
    }
    Ok(MeanState {
        y,
        variation: f,
        iterations,
        trace,
    })
}

/// Symmetric matrix of DTW distances, computed in parallel.
pub fn pairwise_dtw(data: &[TimeSeries], band: Option<usize>) -> Result<Vec<Vec<f64>>> {
    let n = data.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let dists: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| dtw_distance(&data[i], &data[j], band))
        .collect::<Result<_>>()?;
    let mut d = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(dists) {
        d[i][j] = v;
        d[j][i] = v;
    }
    Ok(d)
}

/// Cluster membership of every series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub members: Vec<Vec<usize>>,
}

impl ClusterAssignment {
    fn from_labels(labels: Vec<usize>, k: usize) -> Self {
        let mut members = vec![Vec::new(); k];
        for (i, &c) in labels.iter().enumerate() {
            members[c].push(i);
        }
        Self { labels, members }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub mean: MeanConfig,
    pub max_iters: usize,
}

impl KMeansConfig {
    pub fn new(mean: MeanConfig) -> Self {
        Self { mean, max_iters: 30 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<WeightMatrix>,
    pub assignment: ClusterAssignment,
    /// Total within-cluster variation after each Lloyd iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

fn nearest(x: &TimeSeries, centroids: &[WeightMatrix]) -> Result<(usize, f64)> {
    let mut best = (0, f64::INFINITY);
    for (c, y) in centroids.iter().enumerate() {
        let d = elastic_euclidean_cost(x, y)?;
        if d < best.1 {
            best = (c, d);
        }
    }
    Ok(best)
}

fn farthest_first(data: &[TimeSeries], k: usize) -> Result<Vec<usize>> {
    let mut chosen = vec![medoid(data)?];
    let mut gap: Vec<f64> = data
        .par_iter()
        .map(|x| dtw_distance(x, &data[chosen[0]], None))
        .collect::<Result<_>>()?;
    while chosen.len() < k {
        let mut next = 0;
        let mut far = f64::NEG_INFINITY;
        for (i, &g) in gap.iter().enumerate() {
            if g > far && !chosen.contains(&i) {
                far = g;
                next = i;
            }
        }
        chosen.push(next);
        let fresh: Vec<f64> = data
            .par_iter()
            .map(|x| dtw_distance(x, &data[next], None))
            .collect::<Result<_>>()?;
        for (g, f) in gap.iter_mut().zip(fresh) {
            *g = g.min(f);
        }
    }
    Ok(chosen)
}

/// Lloyd k-means under the elastic Euclidean distance. Initial centroids are
/// chosen farthest-first starting from the medoid; each centroid is then
/// refined by [`compute_mean_from`] on its members, warm-started from its
/// previous value. An empty cluster takes over the series farthest from its
/// own centroid.
pub fn kmeans(data: &[TimeSeries], k: usize, config: &KMeansConfig) -> Result<KMeansResult> {
    config.mean.validate(data)?;
    if k == 0 || k > data.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must lie in 1..={}",
            data.len()
        )));
    }
    let (rows, cols) = (config.mean.rows, config.mean.cols);
    let mut centroids = farthest_first(data, k)?
        .into_iter()
        .map(|i| identical_row_start(&data[i], rows, cols))
        .collect::<Result<Vec<_>>>()?;

    let mut labels: Option<Vec<usize>> = None;
    let mut objective_trace = Vec::new();
    let mut iterations = 0;
    while iterations < config.max_iters.max(1) {
        let near: Vec<(usize, f64)> = data
            .par_iter()
            .map(|x| nearest(x, &centroids))
            .collect::<Result<_>>()?;
        let mut new_labels: Vec<usize> = near.iter().map(|&(c, _)| c).collect();
        let mut dist: Vec<f64> = near.iter().map(|&(_, d)| d).collect();
        // reseed empty clusters
        for c in 0..k {
            if new_labels.contains(&c) {
                continue;
            }
            let mut sizes = vec![0usize; k];
            for &l in &new_labels {
                sizes[l] += 1;
            }
            let mut far = None;
            for (i, &d) in dist.iter().enumerate() {
                if sizes[new_labels[i]] > 1 && far.is_none_or(|(_, fd)| d > fd) {
                    far = Some((i, d));
                }
            }
            let (i, _) = far.expect("k <= N leaves a cluster with two members");
            new_labels[i] = c;
            dist[i] = 0.0;
            centroids[c] = identical_row_start(&data[i], rows, cols)?;
        }
        if labels.as_ref() == Some(&new_labels) {
            break;
        }
        iterations += 1;
        let assignment = ClusterAssignment::from_labels(new_labels.clone(), k);
        let updated: Vec<MeanState> = assignment
            .members
            .par_iter()
            .zip(centroids.par_iter())
            .map(|(members, y)| {
                let subset: Vec<TimeSeries> = members.iter().map(|&i| data[i].clone()).collect();
                compute_mean_from(&subset, y.clone(), &config.mean)
            })
            .collect::<Result<_>>()?;
        objective_trace.push(updated.iter().map(|s| s.variation).sum());
        centroids = updated.into_iter().map(|s| s.y).collect();
        labels = Some(new_labels);
    }
    let labels = labels.expect("at least one iteration runs");
    Ok(KMeansResult {
        centroids,
        assignment: ClusterAssignment::from_labels(labels, k),
        objective_trace,
        iterations,
    })
}

/// One merge of a dendrogram: clusters `a` and `b` (ids below `n` are
/// leaves, id `n + s` is the cluster created by merge `s`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

/// Ward-linkage dendrogram over a symmetric distance matrix, via
/// Lance-Williams updates on squared distances. Ties go to the
/// lexicographically smallest pair of live cluster ids.
pub fn ward_linkage(dist: &[Vec<f64>]) -> Result<Vec<Merge>> {
    let n = dist.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if dist.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParameter("distance matrix must be square".into()));
    }
    let mut d2: Vec<Vec<f64>> = dist.iter().map(|r| r.iter().map(|v| v * v).collect()).collect();
    let mut size = vec![1usize; n];
    let mut id: Vec<usize> = (0..n).collect();
    let mut alive = vec![true; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for j in i + 1..n {
                if !alive[j] {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((v, bi, bj)) => {
                        d2[i][j] < v
                            || (d2[i][j] == v && (id[i].min(id[j]), id[i].max(id[j])) < (id[bi].min(id[bj]), id[bi].max(id[bj])))
                    }
                };
                if better {
                    best = Some((d2[i][j], i, j));
                }
            }
        }
        let (v, i, j) = best.expect("two live clusters remain");
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if !alive[k] || k == i || k == j {
                continue;
            }
            let nk = size[k] as f64;
            let updated = ((ni + nk) * d2[i][k] + (nj + nk) * d2[j][k] - nk * v) / (ni + nj + nk);
            d2[i][k] = updated;
            d2[k][i] = updated;
        }
        let (a, b) = (id[i].min(id[j]), id[i].max(id[j]));
        merges.push(Merge {
            a,
            b,
            height: v.max(0.0).sqrt(),
            size: size[i] + size[j],
        });
        size[i] += size[j];
        id[i] = n + step;
        alive[j] = false;
    }
    Ok(merges)
}

/// How an AHC prototype is grown along the dendrogram.
#[derive(Debug, Clone, PartialEq)]
pub struct AhcConfig {
    pub mean: MeanConfig,
    /// Iteration cap of the mean computed at every intermediate merge.
    pub merge_iters: usize,
}

impl AhcConfig {
    pub fn new(mean: MeanConfig) -> Self {
        Self { mean, merge_iters: 3 }
    }
}

/// Prototype of one class from its Ward dendrogram. Leaves start as
/// identical-row matrices of their series. At every merge the new prototype
/// starts from the best of the size-weighted blend of the two child
/// prototypes and the children themselves, measured by variation over the
/// union of their members, and is refined by a few mean updates over that
/// union. The root is refined with the full iteration budget.
pub fn ahc_prototype(data: &[TimeSeries], config: &AhcConfig) -> Result<MeanState> {
    config.mean.validate(data)?;
    let n = data.len();
    let (rows, cols) = (config.mean.rows, config.mean.cols);
    if n == 1 {
        let start = identical_row_start(&data[0], rows, cols)?;
        return compute_mean_from(data, start, &config.mean);
    }
    let merges = ward_linkage(&pairwise_dtw(data, None)?)?;
    let mut protos: Vec<Option<WeightMatrix>> = data
        .iter()
        .map(|x| identical_row_start(x, rows, cols).map(Some))
        .collect::<Result<_>>()?;
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let step_config = MeanConfig {
        max_iters: config.merge_iters.max(1),
        ..config.mean.clone()
    };
    for (s, merge) in merges.iter().enumerate() {
        let pa = protos[merge.a].take().expect("cluster merged once");
        let pb = protos[merge.b].take().expect("cluster merged once");
        let mut union = std::mem::take(&mut members[merge.a]);
        let wa = union.len() as f64;
        union.append(&mut std::mem::take(&mut members[merge.b]));
        let total = union.len() as f64;
        let blend = pa.scaled(wa / total).add_scaled((total - wa) / total, &pb)?;
        let subset: Vec<TimeSeries> = union.iter().map(|&i| data[i].clone()).collect();
        let mut start = blend;
        let mut start_var = variation(&start, &subset)?;
        for child in [pa, pb] {
            let v = variation(&child, &subset)?;
            if v < start_var {
                start = child;
                start_var = v;
            }
        }
        let cfg = if s + 1 == merges.len() {
            &config.mean
        } else {
            &step_config
        };
        let state = compute_mean_from(&subset, start, cfg)?;
        if s + 1 == merges.len() {
            return Ok(state);
        }
        protos.push(Some(state.y));
        members.push(union);
    }
    unreachable!("a dendrogram over two or more leaves has a root merge")
}

/// One prototype per class.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet {
    pub mode: PrototypeMode,
    pub entries: Vec<(Label, WeightMatrix)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrototypeMode {
    Kme,
    Ahc,
}

impl PrototypeMode {
    pub fn name(self) -> &'static str {
        match self {
            PrototypeMode::Kme => "kme",
            PrototypeMode::Ahc => "ahc",
        }
    }
}

fn by_class(data: &[Example]) -> Result<Vec<(Label, Vec<TimeSeries>)>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut classes: Vec<(Label, Vec<TimeSeries>)> = Vec::new();
    for ex in data {
        match classes.iter_mut().find(|(l, _)| *l == ex.label) {
            Some((_, v)) => v.push(ex.series.clone()),
            None => classes.push((ex.label, vec![ex.series.clone()])),
        }
    }
    classes.sort_by_key(|(l, _)| *l);
    Ok(classes)
}

/// Per-class mean, i.e. k-means with `k = 1` on every class.
pub fn kme_prototypes(data: &[Example], config: &MeanConfig) -> Result<PrototypeSet> {
    let entries = by_class(data)?
        .into_iter()
        .map(|(label, series)| compute_mean(&series, config).map(|s| (label, s.y)))
        .collect::<Result<_>>()?;
    Ok(PrototypeSet {
        mode: PrototypeMode::Kme,
        entries,
    })
}

/// Per-class Ward-linkage prototype, see [`ahc_prototype`].
pub fn ahc_prototypes(data: &[Example], config: &AhcConfig) -> Result<PrototypeSet> {
    let entries = by_class(data)?
        .into_iter()
        .map(|(label, series)| ahc_prototype(&series, config).map(|s| (label, s.y)))
        .collect::<Result<_>>()?;
    Ok(PrototypeSet {
        mode: PrototypeMode::Ahc,
        entries,
    })
}

/// Reference set of a nearest-neighbor classifier.
#[derive(Debug, Clone, Copy)]
pub enum References<'a> {
    /// Every training example, compared by DTW.
    All {
        examples: &'a [Example],
        band: Option<usize>,
    },
    /// Prototype matrices, compared by the elastic Euclidean distance.
    Prototypes(&'a PrototypeSet),
}

/// Label of the nearest reference; the first one wins ties.
pub fn nn_classify(x: &TimeSeries, refs: References<'_>) -> Result<Label> {
    let mut best: Option<(Label, f64)> = None;
    let mut consider = |label: Label, d: f64| {
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((label, d));
        }
    };
    match refs {
        References::All { examples, band } => {
            for ex in examples {
                consider(ex.label, dtw_distance(x, &ex.series, band)?);
            }
        }
        References::Prototypes(set) => {
            for (label, y) in &set.entries {
                consider(*label, elastic_euclidean_cost(x, y)?);
            }
        }
    }
    best.map(|(l, _)| l).ok_or(Error::EmptyDataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::new(v.to_vec()).unwrap()
    }

    #[test]
    fn variation_of_empty_set_is_zero() {
        let y = WeightMatrix::zeros(2, 2).unwrap();
        assert_eq!(variation(&y, &[]).unwrap(), 0.0);
    }

    #[test]
    fn variation_identical_rows_is_summed_squared_dtw() {
        let z = ts(&[0.5, -1.0, 2.0]);
        let y = WeightMatrix::identical_rows(4, z.values()).unwrap();
        let data = [ts(&[1.0, 2.0, 3.0]), ts(&[0.0, -1.0, -1.0, 4.0])];
        let expected: f64 = data
            .iter()
            .map(|x| dtw_distance(x, &z, None).unwrap().powi(2))
            .sum();
        assert!((variation(&y, &data).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn singleton_step_reaches_zero() {
        let x = ts(&[1.0, -2.0, 0.5, 3.0]);
        let y = WeightMatrix::from_rows(&[vec![0.1, 0.2], vec![0.3, -0.4], vec![1.0, 1.0], vec![0.0, 2.0]])
            .unwrap();
        let next = mean_step(&y, std::slice::from_ref(&x), 1.0).unwrap();
        assert_eq!(variation(&next, &[x]).unwrap(), 0.0);
    }

    #[test]
    fn duplicate_pair_reaches_zero() {
        let x = ts(&[0.3, 1.5, -0.7]);
        let y = WeightMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, -1.0]]).unwrap();
        let data = [x.clone(), x];
        let next = mean_step(&y, &data, 0.5).unwrap();
        assert_eq!(variation(&next, &data).unwrap(), 0.0);
    }

    #[test]
    fn unvisited_cells_keep_their_value() {
        let x = ts(&[1.0, 2.0]);
        let y = WeightMatrix::from_rows(&[vec![0.0, 9.0, 9.0], vec![9.0, 9.0, 0.0], vec![7.0, 7.0, 7.0]])
            .unwrap();
        let next = mean_step(&y, std::slice::from_ref(&x), 1.0).unwrap();
        let path = elastic_euclidean(&x, &y).unwrap().path;
        let on_path: Vec<_> = path.cells().collect();
        for i in 0..3 {
            for j in 0..3 {
                if !on_path.contains(&(i, j)) {
                    assert_eq!(next[(i, j)], y[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn mean_step_errors() {
        let y = WeightMatrix::zeros(2, 2).unwrap();
        assert!(matches!(mean_step(&y, &[], 0.5), Err(Error::EmptyDataset)));
        assert!(matches!(
            mean_step(&y, &[ts(&[1.0, 2.0, 3.0])], 0.5),
            Err(Error::SeriesTooLong { .. })
        ));
    }

    #[test]
    fn compute_mean_singleton_and_duplicates() {
        let x = ts(&[0.0, 1.0, 4.0, 1.0]);
        let cfg = MeanConfig::new(4, 3);
        let s = compute_mean(std::slice::from_ref(&x), &cfg).unwrap();
        assert_eq!(s.trace[1], 0.0);
        assert_eq!(s.variation, 0.0);
        let s = compute_mean(&[x.clone(), x], &cfg).unwrap();
        assert_eq!(s.variation, 0.0);
    }

    #[test]
    fn compute_mean_beats_each_member() {
        let data = [
            ts(&[0.0, 1.0, 2.0, 1.0, 0.0]),
            ts(&[0.0, 0.0, 1.0, 2.0, 1.0]),
            ts(&[1.0, 2.0, 1.0, 0.0, 0.0]),
        ];
        let cfg = MeanConfig::new(5, 5);
        let s = compute_mean(&data, &cfg).unwrap();
        assert!(s.variation <= s.trace[0]);
        for x in &data {
            let y = WeightMatrix::identical_rows(5, x.values()).unwrap();
            assert!(s.variation <= variation(&y, &data).unwrap() + 1e-12);
        }
        for w in s.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn medoid_minimises_summed_distance() {
        let data = [ts(&[0.0]), ts(&[1.0]), ts(&[10.0])];
        assert_eq!(medoid(&data).unwrap(), 1);
    }

    #[test]
    fn kmeans_k_equals_n_is_exact() {
        let data = [ts(&[0.0, 1.0]), ts(&[5.0, 5.0]), ts(&[-3.0, 2.0])];
        let r = kmeans(&data, 3, &KMeansConfig::new(MeanConfig::new(2, 2))).unwrap();
        assert_eq!(*r.objective_trace.last().unwrap(), 0.0);
        let mut l = r.assignment.labels.clone();
        l.sort_unstable();
        assert_eq!(l, vec![0, 1, 2]);
    }

    #[test]
    fn kmeans_k_one_is_the_mean() {
        let data = [ts(&[0.0, 1.0, 0.0]), ts(&[1.0, 0.0, 0.0]), ts(&[0.0, 0.0, 1.0])];
        let cfg = MeanConfig::new(3, 3);
        let r = kmeans(&data, 1, &KMeansConfig::new(cfg.clone())).unwrap();
        let m = compute_mean(&data, &cfg).unwrap();
        assert_eq!(r.centroids[0], m.y);
    }

    #[test]
    fn kmeans_separates_bundles() {
        let data = [
            ts(&[0.0, 0.1, 0.0, 0.1]),
            ts(&[10.0, 10.1, 10.0, 10.0]),
            ts(&[0.1, 0.0, 0.0, 0.0]),
            ts(&[10.1, 10.0, 10.1, 10.0]),
            ts(&[0.0, 0.0, 0.1, 0.1]),
        ];
        let r = kmeans(&data, 2, &KMeansConfig::new(MeanConfig::new(4, 2))).unwrap();
        let l = &r.assignment.labels;
        assert_eq!(l[0], l[2]);
        assert_eq!(l[0], l[4]);
        assert_eq!(l[1], l[3]);
        assert_ne!(l[0], l[1]);
        for w in r.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn kmeans_rejects_bad_k() {
        let data = [ts(&[0.0])];
        let cfg = KMeansConfig::new(MeanConfig::new(1, 1));
        assert!(kmeans(&data, 0, &cfg).is_err());
        assert!(kmeans(&data, 2, &cfg).is_err());
    }

    #[test]
    fn ward_joins_tight_pairs_first() {
        let d = vec![
            vec![0.0, 1.0, 9.0, 10.0],
            vec![1.0, 0.0, 10.0, 9.0],
            vec![9.0, 10.0, 0.0, 1.5],
            vec![10.0, 9.0, 1.5, 0.0],
        ];
        let m = ward_linkage(&d).unwrap();
        assert_eq!((m[0].a, m[0].b), (0, 1));
        assert_eq!((m[1].a, m[1].b), (2, 3));
        assert_eq!((m[2].a, m[2].b), (4, 5));
        assert_eq!(m[2].size, 4);
        assert!(m[0].height <= m[1].height && m[1].height <= m[2].height);
    }

    #[test]
    fn ward_lance_williams_matches_centroid_formula() {
        // for Euclidean points Ward height^2 = 2 |A||B| / (|A|+|B|) ||cA - cB||^2
        let pts = [0.0f64, 1.0, 5.0, 7.0, 20.0];
        let d: Vec<Vec<f64>> = pts
            .iter()
            .map(|a| pts.iter().map(|b| (a - b).abs()).collect())
            .collect();
        let m = ward_linkage(&d).unwrap();
        let root = m.last().unwrap();
        // root splits {0,1,5,7} and {20}
        let ca = (0.0 + 1.0 + 5.0 + 7.0) / 4.0;
        let expected = (2.0 * 4.0 * 1.0 / 5.0 * (ca - 20.0f64).powi(2)).sqrt();
        assert!((root.height - expected).abs() < 1e-9);
    }

    #[test]
    fn ahc_small_classes() {
        let x = ts(&[1.0, 3.0, 2.0]);
        let cfg = AhcConfig::new(MeanConfig::new(3, 3));
        let s = ahc_prototype(std::slice::from_ref(&x), &cfg).unwrap();
        assert_eq!(s.variation, 0.0);
        let pair = [x.clone(), ts(&[1.0, 1.0, 2.0])];
        let s = ahc_prototype(&pair, &cfg).unwrap();
        let best_member = pair
            .iter()
            .map(|z| variation(&identical_row_start(z, 3, 3).unwrap(), &pair).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(s.variation <= best_member);
    }

    #[test]
    fn prototypes_one_per_class() {
        let data = vec![
            Example::new(ts(&[0.0, 0.0, 1.0]), Label::Negative),
            Example::new(ts(&[5.0, 5.0, 6.0]), Label::Positive),
            Example::new(ts(&[0.0, 1.0, 1.0]), Label::Negative),
            Example::new(ts(&[5.0, 6.0, 6.0]), Label::Positive),
        ];
        let cfg = MeanConfig::new(3, 3);
        for set in [
            kme_prototypes(&data, &cfg).unwrap(),
            ahc_prototypes(&data, &AhcConfig::new(cfg.clone())).unwrap(),
        ] {
            assert_eq!(set.entries.len(), 2);
            assert_eq!(set.entries[0].0, Label::Negative);
            for ex in &data {
                assert_eq!(nn_classify(&ex.series, References::Prototypes(&set)).unwrap(), ex.label);
            }
        }
    }

    #[test]
    fn nn_all_rules() {
        let data = vec![
            Example::new(ts(&[0.0, 1.0]), Label::Negative),
            Example::new(ts(&[2.0, 3.0]), Label::Positive),
        ];
        let refs = References::All {
            examples: &data,
            band: None,
        };
        assert_eq!(nn_classify(&ts(&[2.0, 3.0]), refs).unwrap(), Label::Positive);
        // equidistant: first reference wins
        assert_eq!(nn_classify(&ts(&[1.0, 2.0]), refs).unwrap(), Label::Negative);
        let one = References::All {
            examples: &data[1..],
            band: None,
        };
        assert_eq!(nn_classify(&ts(&[-9.0]), one).unwrap(), Label::Positive);
        let none = References::All {
            examples: &[],
            band: None,
        };
        assert!(nn_classify(&ts(&[0.0]), none).is_err());
    }
}
