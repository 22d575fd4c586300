//! The alignment recurrence shared by DTW, the elastic inner product and the
//! elastic Euclidean distance.
//!
//! Every proximity in this crate fills a `k x m` grid with
//! `s[i][j] = local(i, j) + opt(s[i-1][j], s[i][j-1], s[i-1][j-1])`, where
//! `opt` is `min` for distances and `max` for the inner product. Indices here
//! are 0-based; [`WarpingPath`] stores 1-based points.

use crate::warp::WarpingPath;

/// Whether the recurrence keeps the smallest or the largest predecessor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Minimize,
    Maximize,
}

impl Objective {
    /// Score of an unreachable cell.
    #[inline]
    pub fn unreachable(self) -> f64 {
        match self {
            Objective::Minimize => f64::INFINITY,
            Objective::Maximize => f64::NEG_INFINITY,
        }
    }

    #[inline]
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Objective::Minimize => a < b,
            Objective::Maximize => a > b,
        }
    }

    #[inline]
    fn pick(self, a: f64, b: f64) -> f64 {
        if self.better(b, a) {
            b
        } else {
            a
        }
    }
}

/// Score of cell `(i, j)` from its predecessors. The diagonal is compared
/// first, then `(i-1, j)`, then `(i, j-1)`; missing predecessors at the
/// borders are skipped.
#[inline(always)]
fn cell(objective: Objective, term: f64, i: usize, j: usize, up: f64, left: f64, diag: f64) -> f64 {
    match (i, j) {
        (0, 0) => term,
        (0, _) => term + left,
        (_, 0) => term + up,
        _ => term + objective.pick(objective.pick(diag, up), left),
    }
}

/// Columns of row `i` inside the band.
#[inline]
fn band_range(i: usize, cols: usize, band: Option<usize>) -> std::ops::Range<usize> {
    match band {
        None => 0..cols,
        Some(r) => i.saturating_sub(r).min(cols)..(i + r + 1).min(cols),
    }
}

/// Dense score matrix of a filled recurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    rows: usize,
    cols: usize,
    objective: Objective,
    scores: Vec<f64>,
}

impl ScoreMatrix {
    /// Fill the full `rows x cols` score matrix. `local(i, j)` is called exactly
    /// once for every in-band cell, in row-major order; out-of-band cells
    /// hold [`Objective::unreachable`].
    pub fn fill<F>(
        rows: usize,
        cols: usize,
        objective: Objective,
        band: Option<usize>,
        mut local: F,
    ) -> Self
    where
        F: FnMut(usize, usize) -> f64,
    {
        debug_assert!(rows >= 1 && cols >= 1);
        let worst = objective.unreachable();
        let mut scores = vec![worst; rows * cols];
        for i in 0..rows {
            for j in band_range(i, cols, band) {
                let term = local(i, j);
                let up = if i > 0 { scores[(i - 1) * cols + j] } else { worst };
                let left = if j > 0 { scores[i * cols + j - 1] } else { worst };
                let diag = if i > 0 && j > 0 { scores[(i - 1) * cols + j - 1] } else { worst };
                scores[i * cols + j] = cell(objective, term, i, j, up, left, diag);
            }
        }
        Self {
            rows,
            cols,
            objective,
            scores,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    /// Score at 0-based `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[i * self.cols + j]
    }

    /// Score of the full alignment, `s[k-1][m-1]`.
    pub fn value(&self) -> f64 {
        self.get(self.rows - 1, self.cols - 1)
    }

    /// Trace an optimal path back from the last cell. Among predecessors that
    /// attain the optimum, the diagonal wins, then `(i-1, j)`, then `(i, j-1)`.
    pub fn traceback(&self) -> WarpingPath {
        let (mut i, mut j) = (self.rows - 1, self.cols - 1);
        let mut points = Vec::with_capacity(self.rows + self.cols - 1);
        points.push((i + 1, j + 1));
        while i > 0 || j > 0 {
            if i == 0 {
                j -= 1;
            } else if j == 0 {
                i -= 1;
            } else {
                let diag = self.get(i - 1, j - 1);
                let up = self.get(i - 1, j);
                let left = self.get(i, j - 1);
                let best = self.objective.pick(self.objective.pick(diag, up), left);
                if diag == best {
                    i -= 1;
                    j -= 1;
                } else if up == best {
                    i -= 1;
                } else {
                    j -= 1;
                }
            }
            points.push((i + 1, j + 1));
        }
        points.reverse();
        WarpingPath::from_points_unchecked(points)
    }
}

/// Final score of the recurrence using two rolling rows, `O(cols)` memory.
/// Performs the same floating-point operations as [`ScoreMatrix::fill`], so
/// the result is bit-identical to `ScoreMatrix::fill(..).value()`.
pub fn final_score<F>(
    rows: usize,
    cols: usize,
    objective: Objective,
    band: Option<usize>,
    mut local: F,
) -> f64
where
    F: FnMut(usize, usize) -> f64,
{
    debug_assert!(rows >= 1 && cols >= 1);
    let worst = objective.unreachable();
    let mut prev = vec![worst; cols];
    let mut curr = vec![worst; cols];
    for i in 0..rows {
        curr.fill(worst);
        for j in band_range(i, cols, band) {
            let term = local(i, j);
            let up = if i > 0 { prev[j] } else { worst };
            let left = if j > 0 { curr[j - 1] } else { worst };
            let diag = if i > 0 && j > 0 { prev[j - 1] } else { worst };
            curr[j] = cell(objective, term, i, j, up, left, diag);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[cols - 1]
}
