//! Rectangular linear sum assignment.
//!
//! Shortest augmenting path with dual potentials (Jonker–Volgenant style),
//! the same family of algorithm as the rectangular solver in SciPy. For an
//! `r × c` cost matrix it assigns every row when `r <= c` and every column
//! otherwise, minimizing the total cost over all such maximum-cardinality
//! assignments. Runs in `O(min(r,c)² · max(r,c))`.

/// Dense row-major cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    /// Panics if any cost is NaN or infinite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "cost matrix shape");
        assert!(data.iter().all(|c| c.is_finite()), "costs must be finite");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    fn transposed(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }
}

/// Optimal assignment as `(row, col)` pairs sorted by row.
pub fn linear_sum_assignment(cost: &CostMatrix) -> Vec<(usize, usize)> {
    if cost.rows == 0 || cost.cols == 0 {
        return Vec::new();
    }
    if cost.rows > cost.cols {
        let mut pairs: Vec<(usize, usize)> = solve_wide(&cost.transposed())
            .into_iter()
            .enumerate()
            .map(|(col, row)| (row, col))
            .collect();
        pairs.sort_unstable();
        return pairs;
    }
    solve_wide(cost).into_iter().enumerate().collect()
}

/// Sum of the assigned costs, accumulated in row order.
pub fn assignment_cost(cost: &CostMatrix, pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(i, j)| cost.get(i, j)).sum()
}

const NONE: usize = usize::MAX;

/// `rows <= cols`; returns the column assigned to each row.
fn solve_wide(cost: &CostMatrix) -> Vec<usize> {
    let (nr, nc) = (cost.rows, cost.cols);
    debug_assert!(nr <= nc);
    let mut u = vec![0.0f64; nr];
    let mut v = vec![0.0f64; nc];
    let mut shortest = vec![f64::INFINITY; nc];
    let mut path = vec![NONE; nc];
    let mut col4row = vec![NONE; nr];
    let mut row4col = vec![NONE; nc];
    let mut visited_rows = vec![false; nr];
    let mut visited_cols = vec![false; nc];
    let mut remaining: Vec<usize> = Vec::with_capacity(nc);

    for cur_row in 0..nr {
        // Dijkstra over reduced costs from `cur_row` to the nearest free column.
        remaining.clear();
        remaining.extend((0..nc).rev());
        visited_rows.fill(false);
        visited_cols.fill(false);
        shortest.fill(f64::INFINITY);

        let mut min_val = 0.0;
        let mut i = cur_row;
        let sink = loop {
            visited_rows[i] = true;
            let mut best = NONE;
            let mut lowest = f64::INFINITY;
            for (slot, &j) in remaining.iter().enumerate() {
                let reduced = min_val + cost.get(i, j) - u[i] - v[j];
                if reduced < shortest[j] {
                    path[j] = i;
                    shortest[j] = reduced;
                }
                // Prefer a free column on ties so the search stops early.
                if shortest[j] < lowest || (shortest[j] == lowest && row4col[j] == NONE) {
                    lowest = shortest[j];
                    best = slot;
                }
            }
            min_val = lowest;
            let j = remaining.swap_remove(best);
            visited_cols[j] = true;
            if row4col[j] == NONE {
                break j;
            }
            i = row4col[j];
        };

        u[cur_row] += min_val;
        for r in 0..nr {
            if visited_rows[r] && r != cur_row {
                u[r] += min_val - shortest[col4row[r]];
            }
        }
        for c in 0..nc {
            if visited_cols[c] {
                v[c] -= min_val - shortest[c];
            }
        }

        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur_row {
                break;
            }
        }
    }
    col4row
}
