//! Small dense linear systems by Gaussian elimination with partial pivoting.

#[derive(Clone, Debug, PartialEq)]
pub enum LinearSolution {
    Unique(Vec<f64>),
    Inconsistent,
    /// Consistent but rank-deficient: infinitely many solutions.
    Underdetermined,
}

/// Solves `a x = b` where `a` has `b.len()` rows of equal length.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> LinearSolution {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(r, &v)| {
            let mut r = r.clone();
            r.push(v);
            r
        })
        .collect();
    let scale = m
        .iter()
        .flat_map(|r| r[..cols].iter())
        .fold(0.0f64, |s, x| s.max(x.abs()))
        .max(1.0);
    let tol = 1e-12 * scale;

    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, val) = (r..rows)
            .map(|i| (i, m[i][c].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= tol {
            continue;
        }
        m.swap(r, best);
        let p = m[r][c];
        for x in m[r][c..].iter_mut() {
            *x /= p;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && row[c] != 0.0 {
                let f = row[c];
                for (x, y) in row[c..].iter_mut().zip(&pivot_row[c..]) {
                    *x -= f * y;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }

    let rhs_tol = 1e-9 * (1.0 + b.iter().fold(0.0f64, |s, x| s.max(x.abs())));
    if m[r..].iter().any(|row| row[cols].abs() > rhs_tol) {
        return LinearSolution::Inconsistent;
    }
    if pivot_cols.len() < cols {
        return LinearSolution::Underdetermined;
    }
    let mut x = vec![0.0; cols];
    for (row, &c) in pivot_cols.iter().enumerate() {
        x[c] = m[row][cols];
    }
    LinearSolution::Unique(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unique_solution() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        match solve(&a, &[3.0, 5.0]) {
            LinearSolution::Unique(x) => {
                assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rank_deficient_cases() {
        let a = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        assert_eq!(solve(&a, &[1.0, 2.0]), LinearSolution::Underdetermined);
        assert_eq!(solve(&a, &[1.0, 3.0]), LinearSolution::Inconsistent);
    }

    #[test]
    fn overdetermined_consistent() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(solve(&a, &[1.0, 2.0, 3.0]), LinearSolution::Unique(vec![1.0, 2.0]));
        assert_eq!(solve(&a, &[1.0, 2.0, 4.0]), LinearSolution::Inconsistent);
    }
}
