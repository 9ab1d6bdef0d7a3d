//! Small numerical helpers shared by the solvers.

/// Radical inverse of `index` in `base` (van der Corput).
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

/// Deterministic 2D Halton sequence in the unit square. `seed` offsets the
/// starting index so different callers draw disjoint blocks.
pub fn halton_2d(n: usize, seed: u64) -> Vec<(f64, f64)> {
    (0..n as u64)
        .map(|k| {
            let i = k + 1 + seed;
            (radical_inverse(i, 2), radical_inverse(i, 3))
        })
        .collect()
}

/// Outcome of a bracketed bisection.
#[derive(Debug, Clone)]
pub struct Bisection {
    pub root: f64,
    pub lo: f64,
    pub hi: f64,
    /// Every probe as `(x, f(x))`, in evaluation order.
    pub probes: Vec<(f64, f64)>,
}

/// Bisection on `[lo, hi]` given the already-evaluated end values; stops after
/// `max_steps` halvings or when the bracket is narrower than `width_tol`.
/// Returns `None` when the end values do not differ in sign.
pub fn bisect<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    f_hi: f64,
    width_tol: f64,
    max_steps: usize,
) -> Option<Bisection>
where
    F: FnMut(f64) -> f64,
{
    if f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0 {
        return None;
    }
    let mut probes = vec![(lo, f_lo), (hi, f_hi)];
    if f_lo == 0.0 {
        return Some(Bisection {
            root: lo,
            lo,
            hi: lo,
            probes,
        });
    }
    if f_hi == 0.0 {
        return Some(Bisection {
            root: hi,
            lo: hi,
            hi,
            probes,
        });
    }
    for _ in 0..max_steps {
        if (hi - lo).abs() <= width_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        probes.push((mid, f_mid));
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(Bisection {
        root: 0.5 * (lo + hi),
        lo,
        hi,
        probes,
    })
}

/// Piecewise-linear interpolation of `(xs, ys)` at `x`, clamped at the ends.
/// `xs` must be non-decreasing.
pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&v| v <= x).clamp(1, n - 1);
    let (x0, x1) = (xs[k - 1], xs[k]);
    if x1 == x0 {
        return ys[k];
    }
    let t = (x - x0) / (x1 - x0);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}

/// Natural cubic spline through `(xs, ys)`; `xs` strictly increasing.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len();
        assert!(n >= 2 && n == ys.len());
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the second derivatives.
            let mut c_prime = vec![0.0; n];
            let mut d_prime = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let a = h0;
                let b = 2.0 * (h0 + h1);
                let c = h1;
                let d = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
                let denom = b - a * c_prime[i - 1];
                c_prime[i] = c / denom;
                d_prime[i] = (d - a * d_prime[i - 1]) / denom;
            }
            for i in (1..n - 1).rev() {
                m[i] = d_prime[i] - c_prime[i] * m[i + 1];
            }
        }
        Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let k = self.xs.partition_point(|&v| v <= x).clamp(1, n - 1);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        a * self.ys[k - 1]
            + b * self.ys[k]
            + ((a * a * a - a) * self.m[k - 1] + (b * b * b - b) * self.m[k]) * h * h / 6.0
    }
}

/// Ordinary least-squares line `y = slope x + intercept`, with `r^2`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some((slope, intercept, r2))
}

/// Finite-difference weights at `x0` for derivatives `0..=max_order` on the
/// (possibly nonuniform) nodes `xs` (Fornberg's recursion). Row `m` holds the
/// weights of the `m`-th derivative.
pub fn fd_weights(x0: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}
