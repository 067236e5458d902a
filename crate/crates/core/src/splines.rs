//! Univariate B-spline kernels on open (clamped) knot vectors.

use crate::{Error, Result};

/// Open knot vector: first and last knots repeated `degree + 1` times.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

/// Nonzero basis functions at a parameter value.
///
/// `ders[k][j]` is the k-th derivative of function `first + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEval {
    pub span: usize,
    pub first: usize,
    pub ders: Vec<Vec<f64>>,
}

impl KnotVector {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        let n = knots.len();
        if n < 2 * (degree + 1) {
            return Err(Error::Domain(format!(
                "{n} knots cannot form an open knot vector of degree {degree}"
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Domain("knots must be finite and nondecreasing".into()));
        }
        let (a, b) = (knots[0], knots[n - 1]);
        if a == b {
            return Err(Error::Domain("knot vector has zero length".into()));
        }
        let start = knots.iter().take_while(|&&k| k == a).count();
        let end = knots.iter().rev().take_while(|&&k| k == b).count();
        if start != degree + 1 || end != degree + 1 {
            return Err(Error::Domain(format!(
                "end knots must have multiplicity {}",
                degree + 1
            )));
        }
        for chunk in knots[start..n - end].chunk_by(|x, y| x == y) {
            if chunk.len() > degree {
                return Err(Error::Domain(format!(
                    "interior knot {} exceeds multiplicity {degree}",
                    chunk[0]
                )));
            }
        }
        Ok(Self { degree, knots })
    }

    /// Open uniform knot vector with `elements` spans on `[a, b]`.
    pub fn uniform(degree: usize, elements: usize, a: f64, b: f64) -> Self {
        assert!(elements > 0 && b > a);
        let mut knots = vec![a; degree + 1];
        let h = (b - a) / elements as f64;
        knots.extend((1..elements).map(|i| a + i as f64 * h));
        knots.extend(std::iter::repeat(b).take(degree + 1));
        Self { degree, knots }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn first(&self) -> f64 {
        self.knots[0]
    }

    pub fn last(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Distinct knot values.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v = self.knots.clone();
        v.dedup();
        v
    }

    pub fn num_elements(&self) -> usize {
        self.breakpoints().len() - 1
    }

    /// Span index `s` with `t_s <= xi < t_{s+1}`; the right end maps to the last nonempty span.
    pub fn find_span(&self, xi: f64) -> Result<usize> {
        if !(xi >= self.first() && xi <= self.last()) {
            return Err(Error::Domain(format!(
                "parameter {xi} outside [{}, {}]",
                self.first(),
                self.last()
            )));
        }
        let n = self.num_basis();
        if xi >= self.knots[n] {
            return Ok(n - 1);
        }
        // Last index with knots[s] <= xi.
        let s = self.knots.partition_point(|&k| k <= xi) - 1;
        Ok(s)
    }

    /// Basis values and derivatives up to `nders` at `xi`.
    pub fn eval(&self, xi: f64, nders: usize) -> Result<BasisEval> {
        let span = self.find_span(xi)?;
        Ok(self.eval_in_span(xi, span, nders))
    }

    /// Same as [`eval`](Self::eval) with the span fixed by the caller, so points on an
    /// element boundary can be evaluated from either side.
    pub fn eval_in_span(&self, xi: f64, span: usize, nders: usize) -> BasisEval {
        let p = self.degree;
        let t = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = xi - t[span + 1 - j];
            right[j] = t[span + j] - xi;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = vec![vec![0.0; p + 1]; nders + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=nders.min(p) {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r + 1 <= pk + 1 { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = p as f64;
        for k in 1..=nders.min(p) {
            for v in ders[k].iter_mut() {
                *v *= fac;
            }
            fac *= (p - k) as f64;
        }
        BasisEval {
            span,
            first: span - p,
            ders,
        }
    }

    /// Bisect every nonempty span.
    pub fn dyadic_refine(&self) -> KnotVector {
        let mut knots = Vec::with_capacity(2 * self.knots.len());
        for w in self.knots.windows(2) {
            knots.push(w[0]);
            if w[1] > w[0] {
                knots.push(0.5 * (w[0] + w[1]));
            }
        }
        knots.push(self.last());
        KnotVector {
            degree: self.degree,
            knots,
        }
    }
}

/// Coefficients `c_j` with `coarse_i = Σ c_j fine_j`, by Boehm knot insertion.
pub fn two_scale_row(coarse: &KnotVector, fine: &KnotVector, i: usize) -> Result<Vec<(usize, f64)>> {
    if i >= coarse.num_basis() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: coarse.num_basis(),
        });
    }
    if coarse.degree != fine.degree || coarse.first() != fine.first() || coarse.last() != fine.last() {
        return Err(Error::Structure("knot vectors are not nested".into()));
    }
    // Multiset difference fine \ coarse.
    let mut inserted = Vec::new();
    let (mut a, mut b) = (0, 0);
    while b < fine.knots.len() {
        if a < coarse.knots.len() && coarse.knots[a] == fine.knots[b] {
            a += 1;
        } else if a < coarse.knots.len() && coarse.knots[a] < fine.knots[b] {
            return Err(Error::Structure("coarse knot missing from fine knot vector".into()));
        } else {
            inserted.push(fine.knots[b]);
        }
        b += 1;
    }
    if a != coarse.knots.len() {
        return Err(Error::Structure("coarse knot missing from fine knot vector".into()));
    }
    let p = coarse.degree;
    let mut t = coarse.knots.clone();
    let mut c = vec![0.0; coarse.num_basis()];
    c[i] = 1.0;
    for x in inserted {
        let k = t.partition_point(|&v| v <= x) - 1;
        let mut next = Vec::with_capacity(c.len() + 1);
        for j in 0..=c.len() {
            let v = if j + p <= k {
                c[j]
            } else if j > k {
                c[j - 1]
            } else {
                let alpha = (x - t[j]) / (t[j + p] - t[j]);
                alpha * c[j] + (1.0 - alpha) * c[j - 1]
            };
            next.push(v);
        }
        t.insert(k + 1, x);
        c = next;
    }
    Ok(c.into_iter()
        .enumerate()
        .filter(|(_, v)| *v != 0.0)
        .collect())
}

/// Two-scale rows of every function of `coarse` into its dyadic refinement.
pub fn two_scale_table(coarse: &KnotVector) -> Vec<Vec<(usize, f64)>> {
    let fine = coarse.dyadic_refine();
    (0..coarse.num_basis())
        .map(|i| two_scale_row(coarse, &fine, i).expect("dyadic refinement is nested"))
        .collect()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            } else {
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}
