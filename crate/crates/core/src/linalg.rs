//! Small dense/banded linear-algebra helpers: closed-form 2x2 matrix
//! exponentials, the dominant eigenvalue of a nonnegative 2x2 matrix, and a
//! banded Cholesky factorization used by the shift-inverted eigenvalue
//! refinement.

pub(crate) type Mat2 = [[f64; 2]; 2];

/// exp(A) for a 2x2 matrix in closed form.
///
/// With tau = tr(A)/2 and q^2 = ((a11-a22)/2)^2 + a12 a21,
/// exp(A) = e^tau [ cosh(q) I + sinh(q)/q (A - tau I) ],
/// with the hyperbolic pair replaced by (cos, sinc) when q^2 < 0.
pub(crate) fn expm2(a: &Mat2) -> Mat2 {
    let tau = 0.5 * (a[0][0] + a[1][1]);
    let q2 = 0.25 * (a[0][0] - a[1][1]).powi(2) + a[0][1] * a[1][0];
    let (c, s) = if q2 >= 0.0 {
        let q = q2.sqrt();
        let sinc = if q < 1e-8 {
            1.0 + q2 / 6.0
        } else {
            q.sinh() / q
        };
        (q.cosh(), sinc)
    } else {
        let q = (-q2).sqrt();
        let sinc = if q < 1e-8 { 1.0 + q2 / 6.0 } else { q.sin() / q };
        (q.cos(), sinc)
    };
    let et = tau.exp();
    [
        [et * (c + s * (a[0][0] - tau)), et * s * a[0][1]],
        [et * s * a[1][0], et * (c + s * (a[1][1] - tau))],
    ]
}

pub(crate) fn matmul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Dominant (Perron) eigenvalue of a nonnegative 2x2 matrix. The
/// discriminant (m11-m22)^2 + 4 m12 m21 is nonnegative for nonnegative
/// off-diagonal entries, so the spectrum is real.
pub(crate) fn dominant_eig2(m: &Mat2) -> f64 {
    let tr = m[0][0] + m[1][1];
    let disc = (m[0][0] - m[1][1]).powi(2) + 4.0 * m[0][1] * m[1][0];
    0.5 * (tr + disc.max(0.0).sqrt())
}

/// Cholesky factorization A = L L^T of a symmetric positive-definite banded
/// matrix with half-bandwidth `bw`. Storage is row-major lower bands:
/// `l[i*(bw+1) + (i-j)]` holds L[i][j] for 0 <= i-j <= bw.
pub(crate) struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    /// `entry(i, j)` supplies A[i][j] for j <= i, i-j <= bw. Returns `None`
    /// if a pivot is not strictly positive (matrix not positive definite).
    pub(crate) fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Option<Self> {
        let stride = bw + 1;
        let mut l = vec![0.0; n * stride];
        for j in 0..n {
            // diagonal
            let mut s = entry(j, j);
            let t0 = j.saturating_sub(bw);
            for t in t0..j {
                let v = l[j * stride + (j - t)];
                s -= v * v;
            }
            if s <= 0.0 {
                return None;
            }
            let diag = s.sqrt();
            l[j * stride] = diag;
            // column below the diagonal
            let imax = (j + bw).min(n - 1);
            for i in (j + 1)..=imax {
                let mut s = entry(i, j);
                let t0 = j.saturating_sub(bw).max(i.saturating_sub(bw));
                for t in t0..j {
                    s -= l[i * stride + (i - t)] * l[j * stride + (j - t)];
                }
                l[i * stride + (i - j)] = s / diag;
            }
        }
        Some(Self { n, bw, l })
    }

    /// Solve A x = b in place.
    pub(crate) fn solve(&self, b: &mut [f64]) {
        let stride = self.bw + 1;
        // forward: L y = b
        for i in 0..self.n {
            let mut s = b[i];
            let t0 = i.saturating_sub(self.bw);
            for t in t0..i {
                s -= self.l[i * stride + (i - t)] * b[t];
            }
            b[i] = s / self.l[i * stride];
        }
        // backward: L^T x = y
        for i in (0..self.n).rev() {
            let mut s = b[i];
            let imax = (i + self.bw).min(self.n - 1);
            for t in (i + 1)..=imax {
                s -= self.l[t * stride + (t - i)] * b[t];
            }
            b[i] = s / self.l[i * stride];
        }
    }
}
