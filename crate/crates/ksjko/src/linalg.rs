//! Small dense-banded solvers used by the Newton iterations.

/// Solves a symmetric tridiagonal system `A x = b` with diagonal `d` and
/// off-diagonal `e` (`e[i]` couples `i` and `i+1`) by LDL^T factorization.
/// Returns `None` if a pivot is not positive.
pub fn solve_spd_tridiagonal(d: &[f64], e: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut piv = vec![0.0; n];
    let mut l = vec![0.0; n.saturating_sub(1)];
    piv[0] = d[0];
    if !(piv[0] > 0.0) {
        return None;
    }
    for i in 1..n {
        l[i - 1] = e[i - 1] / piv[i - 1];
        piv[i] = d[i] - l[i - 1] * e[i - 1];
        if !(piv[i] > 0.0) {
            return None;
        }
    }
    let mut y = b.to_vec();
    for i in 1..n {
        y[i] -= l[i - 1] * y[i - 1];
    }
    for i in 0..n {
        y[i] /= piv[i];
    }
    for i in (0..n - 1).rev() {
        y[i] -= l[i] * y[i + 1];
    }
    Some(y)
}

/// Symmetric positive definite band matrix stored by lower diagonals:
/// `band[k][i] = A[i + k][i]` for `k = 0..=bw`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    band: Vec<Vec<f64>>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        Self {
            n,
            bw,
            band: (0..=bw).map(|k| vec![0.0; n - k.min(n)]).collect(),
        }
    }

    /// Adds `v` to `A[i][j]` (and its mirror). Entries outside the band
    /// are ignored by the caller's choice of bandwidth.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k <= self.bw {
            self.band[k][lo] += v;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k <= self.bw {
            self.band[k][lo]
        } else {
            0.0
        }
    }

    /// In-place banded Cholesky followed by the two triangular solves.
    /// Returns `None` when the matrix is not numerically positive definite.
    pub fn solve(mut self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.n;
        let bw = self.bw;
        // L stored in place: L[i][j] at band[i-j][j].
        for j in 0..n {
            let mut djj = self.band[0][j];
            for k in j.saturating_sub(bw)..j {
                let l = self.band[j - k][k];
                djj -= l * l;
            }
            if !(djj > 0.0) {
                return None;
            }
            let djj = djj.sqrt();
            self.band[0][j] = djj;
            for i in j + 1..(j + bw + 1).min(n) {
                let mut s = self.band[i - j][j];
                let lo = i.saturating_sub(bw).max(j.saturating_sub(bw));
                for k in lo..j {
                    s -= self.band[i - k][k] * self.band[j - k][k];
                }
                self.band[i - j][j] = s / djj;
            }
        }
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.band[i - k][k] * y[k];
            }
            y[i] = s / self.band[0][i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.band[k - i][i] * y[k];
            }
            y[i] = s / self.band[0][i];
        }
        Some(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_band() {
        let d = [4.0, 5.0, 6.0, 3.0];
        let e = [1.0, -1.0, 0.5];
        let b = [1.0, 2.0, 3.0, 4.0];
        let x = solve_spd_tridiagonal(&d, &e, &b).unwrap();
        let mut m = BandMatrix::zeros(4, 1);
        for i in 0..4 {
            m.add(i, i, d[i]);
        }
        for i in 0..3 {
            m.add(i + 1, i, e[i]);
        }
        let y = m.clone().solve(&b).unwrap();
        for i in 0..4 {
            assert!((x[i] - y[i]).abs() < 1e-14);
            let mut r = d[i] * x[i];
            if i > 0 {
                r += e[i - 1] * x[i - 1];
            }
            if i < 3 {
                r += e[i] * x[i + 1];
            }
            assert!((r - b[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn wider_band_solves() {
        let n = 7;
        let mut m = BandMatrix::zeros(n, 2);
        for i in 0..n {
            m.add(i, i, 6.0);
            if i + 1 < n {
                m.add(i + 1, i, -1.0);
            }
            if i + 2 < n {
                m.add(i + 2, i, 0.5);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let x = m.clone().solve(&b).unwrap();
        for i in 0..n {
            let r: f64 = (0..n).map(|j| m.get(i, j) * x[j]).sum();
            assert!((r - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_rejected() {
        assert!(solve_spd_tridiagonal(&[1.0, -1.0], &[0.0], &[1.0, 1.0]).is_none());
    }
}
