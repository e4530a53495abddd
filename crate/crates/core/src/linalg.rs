//! Tridiagonal linear algebra: pivoted LU solves, bordered (arrowhead)
//! systems via Givens QR, and the symmetric-tridiagonal eigensolver
//! (Sturm bisection plus inverse iteration).

/// Tridiagonal matrix: `lower[i]` = A[i+1][i], `upper[i]` = A[i][i+1].
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub diag: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Tridiag {
        Tridiag {
            diag: vec![0.0; n],
            lower: vec![0.0; n.saturating_sub(1)],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * x[i + 1];
            }
            y[i] = v;
        }
        y
    }

    /// LU with partial pivoting; row swaps create a second superdiagonal.
    pub fn lu(&self) -> TridiagLu {
        let n = self.n();
        let mut d = self.diag.clone();
        let mut u1 = self.upper.clone();
        u1.push(0.0);
        let mut u2 = vec![0.0; n];
        let mut l = vec![0.0; n];
        let mut swapped = vec![false; n];
        for k in 0..n.saturating_sub(1) {
            let sub = self.lower[k];
            if sub.abs() > d[k].abs() {
                swapped[k] = true;
                let old_dk = d[k];
                let old_u1k = u1[k];
                let old_u2k = u2[k];
                d[k] = sub;
                u1[k] = d[k + 1];
                u2[k] = u1[k + 1];
                let m = old_dk / d[k];
                l[k] = m;
                d[k + 1] = old_u1k - m * u1[k];
                u1[k + 1] = old_u2k - m * u2[k];
            } else {
                if d[k] == 0.0 {
                    l[k] = 0.0;
                    continue;
                }
                let m = sub / d[k];
                l[k] = m;
                d[k + 1] -= m * u1[k];
                u1[k + 1] -= m * u2[k];
            }
        }
        let min_pivot = d.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        TridiagLu {
            d,
            u1,
            u2,
            l,
            swapped,
            min_pivot,
        }
    }
}

/// Pivoted LU factors of a tridiagonal matrix.
pub struct TridiagLu {
    d: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    l: Vec<f64>,
    swapped: Vec<bool>,
    /// Smallest absolute pivot, a cheap singularity witness.
    pub min_pivot: f64,
}

impl TridiagLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut y = b.to_vec();
        for k in 0..n.saturating_sub(1) {
            if self.swapped[k] {
                y.swap(k, k + 1);
            }
            let yk = y[k];
            y[k + 1] -= self.l[k] * yk;
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let mut v = y[k];
            if k + 1 < n {
                v -= self.u1[k] * x[k + 1];
            }
            if k + 2 < n {
                v -= self.u2[k] * x[k + 2];
            }
            let p = if self.d[k] != 0.0 { self.d[k] } else { 1e-300 };
            x[k] = v / p;
        }
        x
    }
}

/// Solves the arrowhead system [T c; r^T s] [x; y] = rhs by Givens QR.
///
/// Stable even when T itself is singular, which happens exactly at
/// bifurcation points in the continuation corrector.
pub fn solve_arrow(
    t: &Tridiag,
    col: &[f64],
    row: &[f64],
    corner: f64,
    rhs: &[f64],
) -> Option<Vec<f64>> {
    let n = t.n();
    assert_eq!(col.len(), n);
    assert_eq!(row.len(), n);
    assert_eq!(rhs.len(), n + 1);
    // Band storage for R: three upper diagonals plus the border column.
    let mut d = t.diag.clone();
    let mut u1 = t.upper.clone();
    u1.push(0.0);
    let mut u2 = vec![0.0; n];
    let mut c = col.to_vec();
    let mut b: Vec<f64> = rhs[..n].to_vec();
    // Border row: entries at columns k and k+1 are tracked explicitly;
    // columns >= k+2 are the original `row` entries scaled by the product
    // of all cosine factors applied to the border row so far.
    let mut tail_k = row[0];
    let mut tail_k1 = if n > 1 { row[1] } else { 0.0 };
    let mut tail_c = corner;
    let mut tail_b = rhs[n];
    let mut cum_cs = 1.0;

    let givens = |a: f64, bb: f64| -> (f64, f64) {
        let h = a.hypot(bb);
        if h == 0.0 {
            (1.0, 0.0)
        } else {
            (a / h, bb / h)
        }
    };

    for k in 0..n {
        // Rotate rows (k, k+1) to annihilate the subdiagonal of T.
        if k + 1 < n {
            let sub = t.lower[k];
            let (cs, sn) = givens(d[k], sub);
            let rk = [d[k], u1[k], u2[k], c[k], b[k]];
            let rk1 = [
                sub,
                d[k + 1],
                u1[k + 1],
                c[k + 1],
                b[k + 1],
            ];
            d[k] = cs * rk[0] + sn * rk1[0];
            u1[k] = cs * rk[1] + sn * rk1[1];
            u2[k] = cs * rk[2] + sn * rk1[2];
            c[k] = cs * rk[3] + sn * rk1[3];
            b[k] = cs * rk[4] + sn * rk1[4];
            d[k + 1] = -sn * rk[1] + cs * rk1[1];
            u1[k + 1] = -sn * rk[2] + cs * rk1[2];
            c[k + 1] = -sn * rk[3] + cs * rk1[3];
            b[k + 1] = -sn * rk[4] + cs * rk1[4];
        }
        // Rotate rows (k, border) to annihilate the border entry at col k.
        let fresh = if k + 2 < n { cum_cs * row[k + 2] } else { 0.0 };
        let (cs, sn) = givens(d[k], tail_k);
        let rk = [d[k], u1[k], u2[k], c[k], b[k]];
        let tl = [tail_k, tail_k1, fresh, tail_c, tail_b];
        d[k] = cs * rk[0] + sn * tl[0];
        u1[k] = cs * rk[1] + sn * tl[1];
        u2[k] = cs * rk[2] + sn * tl[2];
        c[k] = cs * rk[3] + sn * tl[3];
        b[k] = cs * rk[4] + sn * tl[4];
        tail_k = -sn * rk[1] + cs * tl[1];
        tail_k1 = -sn * rk[2] + cs * tl[2];
        tail_c = -sn * rk[3] + cs * tl[3];
        tail_b = -sn * rk[4] + cs * tl[4];
    }
    // Remaining 1x1 equation for the border unknown.
    if tail_c.abs() < 1e-300 {
        return None;
    }
    let y = tail_b / tail_c;
    let mut x = vec![0.0; n + 1];
    x[n] = y;
    for k in (0..n).rev() {
        let mut v = b[k] - c[k] * y;
        if k + 1 < n {
            v -= u1[k] * x[k + 1];
        }
        if k + 2 < n {
            v -= u2[k] * x[k + 2];
        }
        if d[k].abs() < 1e-300 {
            return None;
        }
        x[k] = v / d[k];
    }
    Some(x)
}

/// Number of eigenvalues of the symmetric tridiagonal (d, e) strictly
/// below `lambda`, by the Sturm/LDLT pivot count.
pub fn sturm_count(d: &[f64], e: &[f64], lambda: f64) -> usize {
    let n = d.len();
    if n == 0 {
        return 0;
    }
    let guard = 1e-300;
    let mut count = 0;
    let mut q = d[0] - lambda;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let q_safe = if q.abs() < guard {
            if q >= 0.0 {
                guard
            } else {
                -guard
            }
        } else {
            q
        };
        q = (d[i] - lambda) - e[i - 1] * e[i - 1] / q_safe;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `count` smallest eigenvalues of the symmetric tridiagonal (d, e),
/// each located by index-targeted bisection to machine precision.
pub fn smallest_eigenvalues(d: &[f64], e: &[f64], count: usize) -> Vec<f64> {
    let n = d.len();
    assert!(count <= n);
    // Gershgorin bounds.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let el = if i > 0 { e[i - 1].abs() } else { 0.0 };
        let er = if i < n - 1 { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - el - er);
        hi = hi.max(d[i] + el + er);
    }
    let scale = hi.abs().max(lo.abs()).max(1.0);
    lo -= 1e-12 * scale;
    hi += 1e-12 * scale;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let mut a = lo;
        let mut b = hi;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if (b - a) <= 4.0 * f64::EPSILON * mid.abs().max(1e-3) {
                break;
            }
            if sturm_count(d, e, mid) <= k {
                a = mid;
            } else {
                b = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

/// Eigenvector for an isolated eigenvalue of the symmetric tridiagonal
/// (d, e) by shifted inverse iteration. Returns a unit vector with the
/// sign fixed so the largest-magnitude entry is positive.
pub fn inverse_iteration(d: &[f64], e: &[f64], lambda: f64) -> Vec<f64> {
    let n = d.len();
    let scale = d
        .iter()
        .map(|v| v.abs())
        .chain(e.iter().map(|v| v.abs()))
        .fold(1.0f64, f64::max);
    // Tiny shift off the exact eigenvalue keeps the factorization usable.
    let shifted = lambda + 1e-13 * scale;
    let mut t = Tridiag::zeros(n);
    for i in 0..n {
        t.diag[i] = d[i] - shifted;
    }
    for i in 0..n - 1 {
        t.lower[i] = e[i];
        t.upper[i] = e[i];
    }
    let lu = t.lu();
    // Deterministic quasi-random start vector.
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i.wrapping_mul(2654435761)) % 1000) as f64 / 1000.0)
        .collect();
    normalize(&mut x);
    for _ in 0..5 {
        let mut y = lu.solve(&x);
        normalize(&mut y);
        x = y;
    }
    let imax = x
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    if x[imax] < 0.0 {
        for v in &mut x {
            *v = -*v;
        }
    }
    x
}

fn normalize(x: &mut [f64]) {
    let n = (x.iter().map(|v| v * v).sum::<f64>()).sqrt();
    if n > 0.0 {
        for v in x.iter_mut() {
            *v /= n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let mut p = k;
            for i in k + 1..n {
                if a[i][k].abs() > a[p][k].abs() {
                    p = i;
                }
            }
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let m = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= m * a[k][j];
                }
                b[i] -= m * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let mut v = b[k];
            for j in k + 1..n {
                v -= a[k][j] * x[j];
            }
            x[k] = v / a[k][k];
        }
        x
    }

    fn rng_seq(seed: u64, n: usize) -> Vec<f64> {
        let mut s = seed.wrapping_add(12345);
        (0..n)
            .map(|_| {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    fn random_tridiag(seed: u64, n: usize) -> Tridiag {
        let vals = rng_seq(seed, 3 * n);
        let mut t = Tridiag::zeros(n);
        t.diag.copy_from_slice(&vals[..n]);
        t.lower.copy_from_slice(&vals[n..2 * n - 1]);
        t.upper.copy_from_slice(&vals[2 * n..3 * n - 1]);
        t
    }

    fn to_dense(t: &Tridiag) -> Vec<Vec<f64>> {
        let n = t.n();
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            dense[i][i] = t.diag[i];
            if i + 1 < n {
                dense[i + 1][i] = t.lower[i];
                dense[i][i + 1] = t.upper[i];
            }
        }
        dense
    }

    #[test]
    fn pivoted_lu_matches_dense() {
        for seed in 0..8u64 {
            let n = 9;
            let t = random_tridiag(seed, n);
            let b = rng_seq(seed + 100, n);
            let x = t.lu().solve(&b);
            let xd = dense_solve(&mut to_dense(&t), &mut b.clone());
            for i in 0..n {
                assert!(
                    (x[i] - xd[i]).abs() < 1e-9 * (1.0 + xd[i].abs()),
                    "seed {seed} i {i}: {} vs {}",
                    x[i],
                    xd[i]
                );
            }
        }
    }

    #[test]
    fn arrow_solve_matches_dense_even_with_singular_block() {
        for seed in 0..8u64 {
            let n = 8;
            let mut t = random_tridiag(seed, n);
            if seed == 0 {
                // Singular tridiagonal block; the bordered system stays regular.
                t.diag[0] = 0.0;
                t.upper[0] = 0.0;
                t.lower[0] = 0.0;
            }
            let col = rng_seq(seed + 7, n);
            let row = rng_seq(seed + 13, n);
            let corner = 0.7;
            let rhs = rng_seq(seed + 19, n + 1);
            let x = solve_arrow(&t, &col, &row, corner, &rhs).unwrap();
            let mut dense = vec![vec![0.0; n + 1]; n + 1];
            let base = to_dense(&t);
            for i in 0..n {
                dense[i][..n].copy_from_slice(&base[i]);
                dense[i][n] = col[i];
                dense[n][i] = row[i];
            }
            dense[n][n] = corner;
            let xd = dense_solve(&mut dense, &mut rhs.clone());
            for i in 0..=n {
                assert!(
                    (x[i] - xd[i]).abs() < 1e-8 * (1.0 + xd[i].abs()),
                    "seed {seed} i {i}: {} vs {}",
                    x[i],
                    xd[i]
                );
            }
        }
    }

    #[test]
    fn sturm_bisection_tight_binding_chain() {
        // d_i = 2, e_i = -1: eigenvalues 2 - 2 cos(k pi / (n+1)).
        let n = 40;
        let d = vec![2.0; n];
        let e = vec![-1.0; n - 1];
        let evs = smallest_eigenvalues(&d, &e, 5);
        for (k, ev) in evs.iter().enumerate() {
            let exact =
                2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((ev - exact).abs() < 1e-12, "k={k}: {ev} vs {exact}");
        }
        let v = inverse_iteration(&d, &e, evs[0]);
        let t = Tridiag {
            diag: d.clone(),
            lower: e.clone(),
            upper: e.clone(),
        };
        let tv = t.apply(&v);
        for i in 0..n {
            assert!((tv[i] - evs[0] * v[i]).abs() < 1e-10);
        }
    }
}
