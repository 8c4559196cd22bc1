//! Eigenvalues of small dense real matrices: balancing, Householder reduction
//! to Hessenberg form, then Francis double-shift QR.

use nalgebra::{Complex, DMatrix};
use thiserror::Error;

pub const MAX_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("matrix must be square with order 1..={MAX_ORDER}, got {rows}x{cols}")]
    Shape { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("QR iteration did not converge; {} eigenvalues found before giving up", found.len())]
    NoConvergence { found: Vec<Complex<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Sorted by decreasing real part, then by imaginary part.
    pub eigenvalues: Vec<Complex<f64>>,
    /// Largest real part among eigenvalues with nonzero imaginary part.
    pub leading_pair_real: Option<f64>,
}

impl Spectrum {
    /// Largest real part over the whole spectrum.
    pub fn abscissa(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// The eigenvalue with largest real part among those with positive imaginary part.
    pub fn leading_pair(&self) -> Option<Complex<f64>> {
        self.eigenvalues
            .iter()
            .filter(|z| z.im > 0.0)
            .copied()
            .max_by(|a, b| a.re.total_cmp(&b.re))
    }
}

pub fn eigenvalues(matrix: &DMatrix<f64>) -> Result<Spectrum, EigenError> {
    let n = matrix.nrows();
    if n == 0 || n != matrix.ncols() || n > MAX_ORDER {
        return Err(EigenError::Shape { rows: matrix.nrows(), cols: matrix.ncols() });
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(EigenError::NonFinite);
    }
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| matrix[(i, j)]).collect()).collect();
    balance(&mut a);
    hessenberg(&mut a);
    let mut eig = hqr(&mut a)?;
    eig.sort_by(|x, y| y.re.total_cmp(&x.re).then(x.im.total_cmp(&y.im)));
    let scale = matrix.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let leading_pair_real = eig
        .iter()
        .filter(|z| z.im.abs() > 1e-14 * scale)
        .map(|z| z.re)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
    Ok(Spectrum { eigenvalues: eig, leading_pair_real })
}

/// Diagonal similarity by powers of two so rows and columns have comparable norms.
fn balance(a: &mut [Vec<f64>]) {
    const RADIX: f64 = 2.0;
    let n = a.len();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[i][j] /= f;
                    a[j][i] *= f;
                }
            }
        }
    }
}

fn hessenberg(a: &mut [Vec<f64>]) {
    let n = a.len();
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<f64> = (k + 1..n).map(|i| a[i][k]).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= vn);
        // A <- (I - 2vv^T) A (I - 2vv^T), acting on rows/columns k+1..n.
        for j in 0..n {
            let dot: f64 = (0..v.len()).map(|i| v[i] * a[k + 1 + i][j]).sum();
            for i in 0..v.len() {
                a[k + 1 + i][j] -= 2.0 * v[i] * dot;
            }
        }
        for row in a.iter_mut() {
            let dot: f64 = (0..v.len()).map(|j| row[k + 1 + j] * v[j]).sum();
            for j in 0..v.len() {
                row[k + 1 + j] -= 2.0 * dot * v[j];
            }
        }
        for i in k + 2..n {
            a[i][k] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroys `a`).
fn hqr(a: &mut [Vec<f64>]) -> Result<Vec<Complex<f64>>, EigenError> {
    let n = a.len();
    let mut out = Vec::with_capacity(n);
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l >= 1 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nu][nu];
            if l == nu {
                out.push(Complex::new(x + t, 0.0));
                nn -= 1;
                break;
            }
            let mut y = a[nu - 1][nu - 1];
            let mut w = a[nu][nu - 1] * a[nu - 1][nu];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    let z = p + sign(z, p);
                    let hi = x + z;
                    let lo = if z != 0.0 { x - w / z } else { hi };
                    out.push(Complex::new(hi, 0.0));
                    out.push(Complex::new(lo, 0.0));
                } else {
                    out.push(Complex::new(x + p, z));
                    out.push(Complex::new(x + p, -z));
                }
                nn -= 2;
                break;
            }
            if its == 60 {
                return Err(EigenError::NoConvergence { found: out });
            }
            if its == 10 || its == 20 || its == 40 {
                // Exceptional shift.
                t += x;
                for i in 0..=nu {
                    a[i][i] -= x;
                }
                let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let (mut p, mut q, mut r);
            let mut m = nu - 2;
            loop {
                let z = a[m][m];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - ss;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            let mut k = m;
            while k < nu {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = if k != nu - 1 { a[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k != nu - 1 {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[i][k] + y * a[i][k + 1];
                        if k != nu - 1 {
                            pp += z * a[i][k + 2];
                            a[i][k + 2] -= pp * r;
                        }
                        a[i][k + 1] -= pp * q;
                        a[i][k] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(out)
}
