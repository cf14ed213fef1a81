//! Sparse LU factorization of a simplex basis with Markowitz pivoting,
//! plus product-form eta updates between refactorizations.
//!
//! The factorization records the Gaussian elimination `E B = U` where `E`
//! is a sequence of row operations (stored as L columns) and `U` is stored
//! row-wise in pivot order. Basis columns are addressed by basis position.

const THRESHOLD: f64 = 0.1;
const SEARCH_COLUMNS: usize = 4;
const SINGULAR_TOL: f64 = 1e-11;

/// Outcome of a failed factorization: the basis positions that could not be
/// pivoted and the rows left without a pivot.
#[derive(Debug, Clone)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

#[derive(Debug, Default, Clone)]
pub(crate) struct LuFactors {
    m: usize,
    piv_row: Vec<usize>,
    piv_col: Vec<usize>,
    piv_val: Vec<f64>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    eta_pos: Vec<usize>,
    eta_piv: Vec<f64>,
    eta_start: Vec<usize>,
    eta_idx: Vec<usize>,
    eta_val: Vec<f64>,
}

impl LuFactors {
    pub fn num_etas(&self) -> usize {
        self.eta_pos.len()
    }

    /// Factorizes the m×m matrix whose column `p` is `columns[p]` given as
    /// `(row, value)` pairs.
    pub fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut cols: Vec<Vec<(usize, f64)>> = columns
            .iter()
            .map(|c| c.iter().copied().filter(|&(_, v)| v != 0.0).collect())
            .collect();
        let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (j, col) in cols.iter().enumerate() {
            for &(i, _) in col {
                row_cols[i].push(j);
            }
        }
        let mut row_count: Vec<usize> = row_cols.iter().map(Vec::len).collect();
        let mut row_done = vec![false; m];
        let mut col_done = vec![false; m];
        let mut slot = vec![usize::MAX; m];

        let mut f = LuFactors { m, ..Default::default() };
        f.l_start.push(0);
        f.u_start.push(0);

        for _step in 0..m {
            let Some((p, q)) = choose_pivot(&cols, &row_cols, &row_count, &row_done, &col_done) else {
                break;
            };
            let column = std::mem::take(&mut cols[q]);
            let piv = column.iter().find(|&&(i, _)| i == p).map(|&(_, v)| v).unwrap_or(0.0);
            let l_begin = f.l_idx.len();
            for &(i, v) in &column {
                if i != p {
                    f.l_idx.push(i);
                    f.l_val.push(v / piv);
                    row_count[i] -= 1;
                }
            }
            let l_end = f.l_idx.len();
            row_done[p] = true;
            col_done[q] = true;

            for jj in 0..row_cols[p].len() {
                let j = row_cols[p][jj];
                if col_done[j] {
                    continue;
                }
                let col = &mut cols[j];
                let Some(k) = col.iter().position(|&(i, _)| i == p) else {
                    continue;
                };
                let apj = col.swap_remove(k).1;
                f.u_idx.push(j);
                f.u_val.push(apj);
                if l_begin == l_end {
                    continue;
                }
                for (k, &(i, _)) in col.iter().enumerate() {
                    slot[i] = k;
                }
                for t in l_begin..l_end {
                    let i = f.l_idx[t];
                    let delta = f.l_val[t] * apj;
                    if slot[i] != usize::MAX {
                        col[slot[i]].1 -= delta;
                    } else {
                        slot[i] = col.len();
                        col.push((i, -delta));
                        row_cols[i].push(j);
                        row_count[i] += 1;
                    }
                }
                for &(i, _) in col.iter() {
                    slot[i] = usize::MAX;
                }
            }
            row_count[p] = 0;
            f.piv_row.push(p);
            f.piv_col.push(q);
            f.piv_val.push(piv);
            f.l_start.push(l_end);
            f.u_start.push(f.u_idx.len());
        }

        if f.piv_row.len() < m {
            let positions = (0..m).filter(|&j| !col_done[j]).collect();
            let rows = (0..m).filter(|&i| !row_done[i]).collect();
            return Err(Singular { positions, rows });
        }
        Ok(f)
    }

    /// Solves `B x = b` in place; `b` is indexed by row on entry and by basis
    /// position on exit.
    pub fn ftran(&self, b: &mut [f64], work: &mut [f64]) {
        let m = self.m;
        for k in 0..m {
            let bp = b[self.piv_row[k]];
            if bp != 0.0 {
                for t in self.l_start[k]..self.l_start[k + 1] {
                    b[self.l_idx[t]] -= self.l_val[t] * bp;
                }
            }
        }
        for k in (0..m).rev() {
            let mut s = b[self.piv_row[k]];
            for t in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_val[t] * work[self.u_idx[t]];
            }
            work[self.piv_col[k]] = s / self.piv_val[k];
        }
        b.copy_from_slice(&work[..m]);
        for e in 0..self.eta_pos.len() {
            let r = self.eta_pos[e];
            let xr = b[r] / self.eta_piv[e];
            b[r] = xr;
            if xr != 0.0 {
                for t in self.eta_start[e]..self.eta_start[e + 1] {
                    b[self.eta_idx[t]] -= self.eta_val[t] * xr;
                }
            }
        }
    }

    /// Solves `Bᵀ y = c` in place; `c` is indexed by basis position on entry
    /// and by row on exit.
    pub fn btran(&self, c: &mut [f64], work: &mut [f64]) {
        let m = self.m;
        for e in (0..self.eta_pos.len()).rev() {
            let r = self.eta_pos[e];
            let mut s = c[r];
            for t in self.eta_start[e]..self.eta_start[e + 1] {
                s -= self.eta_val[t] * c[self.eta_idx[t]];
            }
            c[r] = s / self.eta_piv[e];
        }
        for k in 0..m {
            let w = c[self.piv_col[k]] / self.piv_val[k];
            work[self.piv_row[k]] = w;
            if w != 0.0 {
                for t in self.u_start[k]..self.u_start[k + 1] {
                    c[self.u_idx[t]] -= self.u_val[t] * w;
                }
            }
        }
        for k in (0..m).rev() {
            let mut s = 0.0;
            for t in self.l_start[k]..self.l_start[k + 1] {
                s += self.l_val[t] * work[self.l_idx[t]];
            }
            work[self.piv_row[k]] -= s;
        }
        c.copy_from_slice(&work[..m]);
    }

    /// Records the replacement of the basic column at position `r` by a column
    /// whose FTRAN image is `alpha` (indexed by basis position).
    pub fn push_eta(&mut self, r: usize, alpha: &[f64]) {
        if self.eta_start.is_empty() {
            self.eta_start.push(0);
        }
        self.eta_pos.push(r);
        self.eta_piv.push(alpha[r]);
        for (i, &a) in alpha.iter().enumerate() {
            if i != r && a.abs() > 1e-14 {
                self.eta_idx.push(i);
                self.eta_val.push(a);
            }
        }
        self.eta_start.push(self.eta_idx.len());
    }
}

fn choose_pivot(
    cols: &[Vec<(usize, f64)>],
    row_cols: &[Vec<usize>],
    row_count: &[usize],
    row_done: &[bool],
    col_done: &[bool],
) -> Option<(usize, usize)> {
    let m = cols.len();
    // column singletons
    for j in 0..m {
        if !col_done[j] && cols[j].len() == 1 && cols[j][0].1.abs() > SINGULAR_TOL {
            return Some((cols[j][0].0, j));
        }
    }
    // row singletons that pass the stability threshold
    for i in 0..m {
        if row_done[i] || row_count[i] != 1 {
            continue;
        }
        for &j in &row_cols[i] {
            if col_done[j] {
                continue;
            }
            if let Some(&(_, v)) = cols[j].iter().find(|&&(r, _)| r == i) {
                let cmax = cols[j].iter().fold(0.0f64, |a, &(_, x)| a.max(x.abs()));
                if v.abs() > SINGULAR_TOL && v.abs() >= THRESHOLD * cmax {
                    return Some((i, j));
                }
            }
        }
    }
    // Markowitz search over the sparsest few columns
    let mut order: Vec<(usize, usize)> = (0..m)
        .filter(|&j| !col_done[j])
        .map(|j| (cols[j].len(), j))
        .collect();
    if order.is_empty() {
        return None;
    }
    let take = SEARCH_COLUMNS.min(order.len());
    order.select_nth_unstable(take - 1);
    order.truncate(take);
    order.sort_unstable();
    let mut best: Option<(usize, usize, usize)> = None;
    for &(count, j) in &order {
        let cmax = cols[j].iter().fold(0.0f64, |a, &(_, x)| a.max(x.abs()));
        if cmax <= SINGULAR_TOL {
            continue;
        }
        for &(i, v) in &cols[j] {
            if v.abs() < THRESHOLD * cmax {
                continue;
            }
            let cost = (row_count[i].saturating_sub(1)) * (count.saturating_sub(1));
            let better = match best {
                None => true,
                Some((bc, bi, bj)) => (cost, i, j) < (bc, bi, bj),
            };
            if better {
                best = Some((cost, i, j));
            }
        }
    }
    if best.is_none() {
        // fall back to any column with a usable entry
        for j in 0..m {
            if col_done[j] {
                continue;
            }
            let cmax = cols[j].iter().fold(0.0f64, |a, &(_, x)| a.max(x.abs()));
            if cmax <= SINGULAR_TOL {
                continue;
            }
            if let Some(&(i, _)) = cols[j].iter().find(|&&(_, v)| v.abs() >= THRESHOLD * cmax) {
                return Some((i, j));
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_cols(a: &[Vec<f64>]) -> Vec<Vec<(usize, f64)>> {
        let m = a.len();
        (0..m)
            .map(|j| (0..m).filter(|&i| a[i][j] != 0.0).map(|i| (i, a[i][j])).collect())
            .collect()
    }

    fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    fn matvec_t(a: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
        let m = a.len();
        (0..m).map(|j| (0..m).map(|i| a[i][j] * y[i]).sum()).collect()
    }

    #[test]
    fn solves_and_updates() {
        let mut a = vec![
            vec![4.0, 0.0, 1.0, 0.0],
            vec![1.0, 3.0, 0.0, 0.0],
            vec![0.0, 2.0, 5.0, 1.0],
            vec![0.0, 0.0, 1.0, 2.0],
        ];
        let mut lu = LuFactors::factorize(4, &dense_cols(&a)).unwrap();
        let mut work = vec![0.0; 4];
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let mut x = b.clone();
        lu.ftran(&mut x, &mut work);
        for (l, r) in matvec(&a, &x).iter().zip(&b) {
            assert!((l - r).abs() < 1e-12);
        }
        let mut y = b.clone();
        lu.btran(&mut y, &mut work);
        for (l, r) in matvec_t(&a, &y).iter().zip(&b) {
            assert!((l - r).abs() < 1e-12);
        }
        // replace column 1 with (1, 1, 1, 1)
        let newcol = vec![1.0, 1.0, 1.0, 1.0];
        let mut alpha = newcol.clone();
        lu.ftran(&mut alpha, &mut work);
        lu.push_eta(1, &alpha);
        for (i, row) in a.iter_mut().enumerate() {
            row[1] = newcol[i];
        }
        let mut x = b.clone();
        lu.ftran(&mut x, &mut work);
        for (l, r) in matvec(&a, &x).iter().zip(&b) {
            assert!((l - r).abs() < 1e-12);
        }
        let mut y = b.clone();
        lu.btran(&mut y, &mut work);
        for (l, r) in matvec_t(&a, &y).iter().zip(&b) {
            assert!((l - r).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_singular_columns() {
        let a = vec![vec![1.0, 2.0, 0.0], vec![2.0, 4.0, 0.0], vec![0.0, 0.0, 1.0]];
        let err = LuFactors::factorize(3, &dense_cols(&a)).unwrap_err();
        assert_eq!(err.positions.len(), 1);
        assert_eq!(err.rows.len(), 1);
    }
}
