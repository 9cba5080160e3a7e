//! Dense nonsymmetric eigen solver.
//!
//! Pipeline: Parlett-Reinsch balancing, Householder reduction to upper
//! Hessenberg form, Francis double-shift QR for the eigenvalues (the shift
//! and deflation logic follows the classic EISPACK/JAMA hqr), then inverse
//! iteration on the Hessenberg matrix for the right eigenvectors.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::matrix::Mat;

/// Eigenvalues and (optionally) unit right eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<Complex64>,
    /// vectors[i] is the right eigenvector for values[i], unit 2-norm.
    pub vectors: Option<Vec<Vec<Complex64>>>,
}

pub const MAX_EIG_DIM: usize = 256;

/// Eigen decomposition of a real square matrix, eigenvectors included.
pub fn eig_dense(a: &Mat) -> Result<EigenPairs> {
    eig(a, true)
}

/// Eigenvalues only; skips the inverse-iteration pass.
pub fn eig_values(a: &Mat) -> Result<Vec<Complex64>> {
    Ok(eig(a, false)?.values)
}

fn eig(a: &Mat, want_vectors: bool) -> Result<EigenPairs> {
    if a.rows() != a.cols() {
        return Err(Error::Shape(format!(
            "eigen solver needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n == 0 || n > MAX_EIG_DIM {
        return Err(Error::InvalidArgument(format!(
            "eigen solver supports 1..={MAX_EIG_DIM} rows, got {n}"
        )));
    }
    if a.data().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("eigen solver input".into()));
    }

    if n == 1 {
        let v = if want_vectors {
            Some(vec![vec![Complex64::new(1.0, 0.0)]])
        } else {
            None
        };
        return Ok(EigenPairs {
            values: vec![Complex64::new(a[(0, 0)], 0.0)],
            vectors: v,
        });
    }

    let mut balanced = a.clone();
    let scale = balance(&mut balanced);
    let (hess, q) = hessenberg(&balanced);

    let mut working = hess.clone();
    let values = francis_qr(&mut working)?;

    let vectors = if want_vectors {
        Some(eigenvectors(a, &hess, &q, &scale, &values))
    } else {
        None
    };

    Ok(EigenPairs { values, vectors })
}

/// Parlett-Reinsch balancing (scaling pass only). Returns the diagonal of D
/// where the matrix is overwritten with D^-1 A D; eigenvectors of the
/// balanced matrix map back through elementwise multiplication by D.
fn balance(a: &mut Mat) -> Vec<f64> {
    const RADIX: f64 = 2.0;
    let n = a.rows();
    let mut scale = vec![1.0f64; n];
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut c: f64 = (0..n).filter(|&j| j != i).map(|j| a[(j, i)].abs()).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            let g = r * RADIX;
            while c >= g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                let g = 1.0 / f;
                scale[i] *= f;
                converged = false;
                for j in 0..n {
                    a[(i, j)] *= g;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
        if converged {
            return scale;
        }
    }
}

/// Householder reduction to upper Hessenberg form. Returns (H, Q) with
/// B = Q H Q^T, Q orthogonal.
fn hessenberg(b: &Mat) -> (Mat, Mat) {
    let n = b.rows();
    let mut h = b.clone();
    // Householder vectors, one per reduced column.
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(n.saturating_sub(2));

    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<f64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let alpha = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if alpha == 0.0 {
            vs.push(Vec::new());
            continue;
        }
        let alpha = if v[0] >= 0.0 { -alpha } else { alpha };
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            vs.push(Vec::new());
            continue;
        }
        let beta = 2.0 / vnorm2;

        // H <- P H with P = I - beta v v^T acting on rows k+1..n
        for j in k..n {
            let dot: f64 = (k + 1..n).map(|i| v[i - k - 1] * h[(i, j)]).sum();
            let t = beta * dot;
            for i in k + 1..n {
                h[(i, j)] -= t * v[i - k - 1];
            }
        }
        // H <- H P acting on columns k+1..n
        for i in 0..n {
            let dot: f64 = (k + 1..n).map(|j| v[j - k - 1] * h[(i, j)]).sum();
            let t = beta * dot;
            for j in k + 1..n {
                h[(i, j)] -= t * v[j - k - 1];
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
        vs.push(v);
    }

    // Accumulate Q by applying the reflectors to I from the right, last first.
    let mut q = Mat::identity(n);
    for k in (0..vs.len()).rev() {
        let v = &vs[k];
        if v.is_empty() {
            continue;
        }
        let beta = 2.0 / v.iter().map(|x| x * x).sum::<f64>();
        for i in 0..n {
            let dot: f64 = (k + 1..n).map(|j| v[j - k - 1] * q[(i, j)]).sum();
            let t = beta * dot;
            for j in k + 1..n {
                q[(i, j)] -= t * v[j - k - 1];
            }
        }
    }
    (h, q)
}

/// Francis double-shift QR on an upper Hessenberg matrix; returns all
/// eigenvalues with complex conjugate pairs adjacent. The matrix is consumed.
///
/// A subdiagonal entry deflates when |h(l,l-1)| <= eps * (|h(l-1,l-1)| + |h(l,l)|),
/// with the matrix norm substituted when the diagonal pair vanishes.
fn francis_qr(hm: &mut Mat) -> Result<Vec<Complex64>> {
    let nn = hm.rows() as isize;
    let size = hm.rows();
    let budget = 100 * size;
    let mut spent = 0usize;

    let mut d = vec![0.0f64; size];
    let mut e = vec![0.0f64; size];

    let idx = |i: isize, j: isize| (i as usize, j as usize);

    let mut n = nn - 1;
    let low: isize = 0;
    let high = nn - 1;
    let eps = f64::EPSILON;
    let mut exshift = 0.0f64;
    let (mut p, mut q, mut r): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let (mut s, mut z): (f64, f64);
    let (mut w, mut x, mut y): (f64, f64, f64);

    let mut norm = 0.0f64;
    for i in 0..nn {
        for j in (i - 1).max(0)..nn {
            norm += hm[idx(i, j)].abs();
        }
    }

    let mut iter = 0;
    while n >= low {
        // Look for a single small subdiagonal element.
        let mut l = n;
        while l > low {
            s = hm[idx(l - 1, l - 1)].abs() + hm[idx(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if hm[idx(l, l - 1)].abs() <= eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One root found.
            hm[idx(n, n)] += exshift;
            d[n as usize] = hm[idx(n, n)];
            e[n as usize] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // Two roots found.
            w = hm[idx(n, n - 1)] * hm[idx(n - 1, n)];
            p = (hm[idx(n - 1, n - 1)] - hm[idx(n, n)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            hm[idx(n, n)] += exshift;
            hm[idx(n - 1, n - 1)] += exshift;
            x = hm[idx(n, n)];

            if q >= 0.0 {
                // Real pair.
                z = if p >= 0.0 { p + z } else { p - z };
                d[(n - 1) as usize] = x + z;
                d[n as usize] = d[(n - 1) as usize];
                if z != 0.0 {
                    d[n as usize] = x - w / z;
                }
                e[(n - 1) as usize] = 0.0;
                e[n as usize] = 0.0;
            } else {
                // Complex pair.
                d[(n - 1) as usize] = x + p;
                d[n as usize] = x + p;
                e[(n - 1) as usize] = z;
                e[n as usize] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            // No convergence yet; form a shift.
            x = hm[idx(n, n)];
            y = 0.0;
            w = 0.0;
            if l < n {
                y = hm[idx(n - 1, n - 1)];
                w = hm[idx(n, n - 1)] * hm[idx(n - 1, n)];
            }

            // Wilkinson's original ad hoc shift.
            if iter == 10 {
                exshift += x;
                for i in low..=n {
                    hm[idx(i, i)] -= x;
                }
                s = hm[idx(n, n - 1)].abs() + hm[idx(n - 1, n - 2)].abs();
                y = 0.75 * s;
                x = y;
                w = -0.4375 * s * s;
            }

            // MATLAB's ad hoc shift.
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=n {
                        hm[idx(i, i)] -= s;
                    }
                    exshift += s;
                    w = 0.964;
                    y = w;
                    x = y;
                }
            }

            iter += 1;
            spent += 1;
            if spent > budget {
                return Err(Error::Convergence(format!(
                    "QR exceeded {budget} iterations on rows {l}..={n} of a {size}x{size} matrix"
                )));
            }

            // Look for two consecutive small subdiagonal elements.
            let mut m = n - 2;
            while m >= l {
                z = hm[idx(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / hm[idx(m + 1, m)] + hm[idx(m, m + 1)];
                q = hm[idx(m + 1, m + 1)] - z - r - s;
                r = hm[idx(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if hm[idx(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs()
                            * (hm[idx(m - 1, m - 1)].abs()
                                + z.abs()
                                + hm[idx(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in m + 2..=n {
                hm[idx(i, i - 2)] = 0.0;
                if i > m + 2 {
                    hm[idx(i, i - 3)] = 0.0;
                }
            }

            // Double QR step on rows l..=n and columns m..=n.
            for k in m..n {
                let notlast = k != n - 1;
                if k != m {
                    p = hm[idx(k, k - 1)];
                    q = hm[idx(k + 1, k - 1)];
                    r = if notlast { hm[idx(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }

                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        hm[idx(k, k - 1)] = -s * x;
                    } else if l != m {
                        hm[idx(k, k - 1)] = -hm[idx(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..nn {
                        p = hm[idx(k, j)] + q * hm[idx(k + 1, j)];
                        if notlast {
                            p += r * hm[idx(k + 2, j)];
                            hm[idx(k + 2, j)] -= p * z;
                        }
                        hm[idx(k, j)] -= p * x;
                        hm[idx(k + 1, j)] -= p * y;
                    }

                    for i in 0..=n.min(k + 3) {
                        p = x * hm[idx(i, k)] + y * hm[idx(i, k + 1)];
                        if notlast {
                            p += z * hm[idx(i, k + 2)];
                            hm[idx(i, k + 2)] -= p * r;
                        }
                        hm[idx(i, k)] -= p;
                        hm[idx(i, k + 1)] -= p * q;
                    }
                }
            }
        }
        let _ = high;
    }

    Ok(d
        .into_iter()
        .zip(e)
        .map(|(re, im)| Complex64::new(re, im))
        .collect())
}

/// Right eigenvectors via inverse iteration on the Hessenberg matrix, mapped
/// back through the Householder basis and the balancing scales, then checked
/// against the original matrix. Conjugate pairs are solved once.
fn eigenvectors(
    a: &Mat,
    hess: &Mat,
    q: &Mat,
    scale: &[f64],
    values: &[Complex64],
) -> Vec<Vec<Complex64>> {
    let n = a.rows();
    let norm_f = a.frobenius_norm();
    let mut out: Vec<Option<Vec<Complex64>>> = vec![None; n];

    for i in 0..n {
        if out[i].is_some() {
            continue;
        }
        let lambda = values[i];
        let y = inverse_iteration(hess, lambda, i);
        // Hessenberg basis -> balanced basis -> original basis.
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for row in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for col in 0..n {
                acc += q[(row, col)] * y[col];
            }
            v[row] = acc * scale[row];
        }
        normalize(&mut v);
        let v = polish(a, lambda, v, norm_f);

        if lambda.im != 0.0 {
            // Partner of the conjugate pair gets the conjugated vector.
            for j in 0..n {
                if j != i && out[j].is_none() && values[j] == lambda.conj() {
                    out[j] = Some(v.iter().map(|z| z.conj()).collect());
                    break;
                }
            }
        }
        out[i] = Some(v);
    }

    out.into_iter().map(|v| v.unwrap()).collect()
}

fn normalize(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
}

fn residual(a: &Mat, lambda: Complex64, v: &[Complex64]) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for i in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            acc += a[(i, j)] * v[j];
        }
        sum += (acc - lambda * v[i]).norm_sqr();
    }
    sum.sqrt()
}

/// One or two rounds of inverse iteration on the full matrix sharpen vectors
/// whose Hessenberg solve was degraded by the back-transformation.
fn polish(a: &Mat, lambda: Complex64, v: Vec<Complex64>, norm_f: f64) -> Vec<Complex64> {
    let target = 1e-10 * norm_f.max(f64::MIN_POSITIVE);
    let mut best = v;
    let mut best_res = residual(a, lambda, &best);
    for _ in 0..2 {
        if best_res <= target {
            break;
        }
        match solve_shifted_dense(a, lambda, &best) {
            Some(mut y) => {
                normalize(&mut y);
                let res = residual(a, lambda, &y);
                if res < best_res {
                    best = y;
                    best_res = res;
                } else {
                    break;
                }
            }
            None => break,
        }
    }
    best
}

/// Inverse iteration on (H - lambda I) with the start vector seeded from the
/// eigenvalue index so coincident eigenvalues do not all share one start.
fn inverse_iteration(hess: &Mat, lambda: Complex64, index: usize) -> Vec<Complex64> {
    let n = hess.rows();
    let hnorm = hess.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut rng = crate::numerics::rng::CounterRng::stream(0x5eed_e16e, index as u64);
    let mut b: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(1.0 + 0.25 * rng.next_f64(), 0.0))
        .collect();
    normalize(&mut b);

    let mut best = b.clone();
    let mut best_res = f64::INFINITY;
    for _ in 0..4 {
        let mut y = match solve_hessenberg_shifted(hess, lambda, &b, hnorm) {
            Some(y) => y,
            None => break,
        };
        normalize(&mut y);
        if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            break;
        }
        let res = residual(hess, lambda, &y);
        if res < best_res {
            best = y.clone();
            best_res = res;
        }
        if res <= 1e-12 * hnorm {
            break;
        }
        b = y;
    }
    best
}

/// Solve (H - lambda I) x = b for upper Hessenberg H using Gaussian
/// elimination with adjacent-row pivoting. Exact zero pivots are replaced by
/// eps * |H| so the solve survives singular shifts (the standard inverse
/// iteration trick).
fn solve_hessenberg_shifted(
    hess: &Mat,
    lambda: Complex64,
    b: &[Complex64],
    hnorm: f64,
) -> Option<Vec<Complex64>> {
    let n = hess.rows();
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = Complex64::new(hess[(i, j)], 0.0);
        }
        m[i * n + i] -= lambda;
    }
    let mut rhs = b.to_vec();
    let tiny = f64::EPSILON * hnorm;

    for k in 0..n - 1 {
        // Only row k+1 has a nonzero below the diagonal in column k.
        if m[(k + 1) * n + k].norm() > m[k * n + k].norm() {
            for j in k..n {
                m.swap(k * n + j, (k + 1) * n + j);
            }
            rhs.swap(k, k + 1);
        }
        let mut pivot = m[k * n + k];
        if pivot.norm() < tiny {
            pivot = Complex64::new(tiny.max(f64::MIN_POSITIVE), 0.0);
            m[k * n + k] = pivot;
        }
        let mult = m[(k + 1) * n + k] / pivot;
        if mult.norm() != 0.0 {
            for j in k..n {
                let t = m[k * n + j];
                m[(k + 1) * n + j] -= mult * t;
            }
            let t = rhs[k];
            rhs[k + 1] -= mult * t;
        }
    }
    let mut pivot = m[(n - 1) * n + (n - 1)];
    if pivot.norm() < tiny {
        pivot = Complex64::new(tiny.max(f64::MIN_POSITIVE), 0.0);
        m[(n - 1) * n + (n - 1)] = pivot;
    }

    // Back substitution on the resulting upper triangle.
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for j in i + 1..n {
            acc -= m[i * n + j] * x[j];
        }
        x[i] = acc / m[i * n + i];
        if !x[i].re.is_finite() || !x[i].im.is_finite() {
            return None;
        }
    }
    Some(x)
}

/// Dense shifted solve used by the polish step; full partial pivoting.
fn solve_shifted_dense(a: &Mat, lambda: Complex64, b: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = a.rows();
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = Complex64::new(a[(i, j)], 0.0);
        }
        m[i * n + i] -= lambda;
    }
    let mut rhs = b.to_vec();
    let tiny = f64::EPSILON * a.frobenius_norm().max(f64::MIN_POSITIVE);

    for k in 0..n {
        let mut piv_row = k;
        let mut piv_mag = m[k * n + k].norm();
        for i in k + 1..n {
            let mag = m[i * n + k].norm();
            if mag > piv_mag {
                piv_mag = mag;
                piv_row = i;
            }
        }
        if piv_row != k {
            for j in 0..n {
                m.swap(k * n + j, piv_row * n + j);
            }
            rhs.swap(k, piv_row);
        }
        let mut pivot = m[k * n + k];
        if pivot.norm() < tiny {
            pivot = Complex64::new(tiny.max(f64::MIN_POSITIVE), 0.0);
            m[k * n + k] = pivot;
        }
        for i in k + 1..n {
            let mult = m[i * n + k] / pivot;
            if mult.norm() == 0.0 {
                continue;
            }
            for j in k..n {
                let t = m[k * n + j];
                m[i * n + j] -= mult * t;
            }
            let t = rhs[k];
            rhs[i] -= mult * t;
        }
    }

    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for j in i + 1..n {
            acc -= m[i * n + j] * x[j];
        }
        x[i] = acc / m[i * n + i];
        if !x[i].re.is_finite() || !x[i].im.is_finite() {
            return None;
        }
    }
    Some(x)
}
