use crate::problem::LinearProgram;

/// Row and column scale factors: the solver works on `R A C` with
/// `x = C x'` and row `i` multiplied by `R_i`.
#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}

impl Scaling {
    pub fn identity(n: usize, m: usize) -> Self {
        Self {
            row: vec![1.0; m],
            col: vec![1.0; n],
        }
    }

    /// Geometric-mean scaling, a few alternating passes, rounded to powers of two
    /// so that scaling itself introduces no rounding error.
    pub fn equilibrate(p: &LinearProgram) -> Self {
        let n = p.num_vars();
        let m = p.num_rows();
        let mut s = Self::identity(n, m);
        for _ in 0..4 {
            for (i, c) in p.constraints.iter().enumerate() {
                let (lo, hi) = extremes(c.coeffs.iter().map(|&(j, a)| a * s.col[j]));
                if hi > 0.0 {
                    s.row[i] = pow2(1.0 / (lo * hi).sqrt());
                }
            }
            let mut lo = vec![f64::INFINITY; n];
            let mut hi = vec![0.0f64; n];
            for (i, c) in p.constraints.iter().enumerate() {
                for &(j, a) in &c.coeffs {
                    let v = (a * s.row[i]).abs();
                    if v > 0.0 {
                        lo[j] = lo[j].min(v);
                        hi[j] = hi[j].max(v);
                    }
                }
            }
            for j in 0..n {
                if hi[j] > 0.0 {
                    s.col[j] = pow2(1.0 / (lo[j] * hi[j]).sqrt());
                }
            }
        }
        s
    }
}

fn extremes(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for v in it {
        let v = v.abs();
        if v > 0.0 {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

fn pow2(v: f64) -> f64 {
    if !v.is_finite() || v <= 0.0 {
        return 1.0;
    }
    2f64.powi(v.log2().round().clamp(-60.0, 60.0) as i32)
}
