use super::{axpy, dot, norm, DenseMatrix, LinalgError, Result};

/// Orthonormal basis `Q` (rows × cols) for the column space of `a` via
/// Householder reflections.
///
/// Rank-deficient input still yields orthonormal columns; the reflector
/// for a zero column is skipped, which leaves the corresponding unit
/// vector in place.
pub fn thin_qr(a: &DenseMatrix) -> Result<DenseMatrix> {
    let (m, n) = (a.rows(), a.cols());
    if n > m {
        return Err(LinalgError::Dimension(format!(
            "thin QR needs rows >= cols, got {m}x{n}"
        )));
    }
    let mut work = a.clone();
    // reflectors[k] acts on rows k..m; None when skipped
    let mut reflectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
    for k in 0..n {
        let col = &work.column(k)[k..];
        let alpha = norm(col);
        if alpha == 0.0 {
            reflectors.push(None);
            continue;
        }
        let mut v = col.to_vec();
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vnorm = norm(&v);
        if vnorm == 0.0 {
            reflectors.push(None);
            continue;
        }
        for x in v.iter_mut() {
            *x /= vnorm;
        }
        for j in k..n {
            let tail = &mut work.column_mut(j)[k..];
            let d = dot(&v, tail);
            axpy(-2.0 * d, &v, tail);
        }
        reflectors.push(Some(v));
    }

    let mut q = DenseMatrix::zeros(m, n);
    for j in 0..n {
        let col = q.column_mut(j);
        col[j] = 1.0;
        for k in (0..n).rev() {
            if let Some(v) = &reflectors[k] {
                let tail = &mut col[k..];
                let d = dot(v, tail);
                axpy(-2.0 * d, v, tail);
            }
        }
    }
    Ok(q)
}
