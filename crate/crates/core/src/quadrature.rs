//! One- and two-dimensional quadrature.
//!
//! Sums are accumulated in a fixed order so identical inputs give
//! bit-identical outputs.

/// Value with an error estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate { value: self.value + rhs.value, error: self.error + rhs.error }
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Estimate {
        iter.fold(Estimate::default(), |a, b| a + b)
    }
}

// Kronrod 15-point abscissae and weights; Gauss 7-point weights on the odd nodes.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Single Gauss–Kronrod 7/15 panel. Returns (K15 value, |K15 − G7|).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Estimate {
    gk15_abs(f, a, b).0
}

/// [`gk15`] plus the K15 integral of `|f|`, the scale of rounding noise.
fn gk15_abs<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (Estimate, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for j in 0..7 {
        let x = h * XGK[j];
        let (fl, fr) = (f(c - x), f(c + x));
        let s = fl + fr;
        kron += WGK[j] * s;
        abs += WGK[j] * (fl.abs() + fr.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (Estimate { value: kron * h, error: ((kron - gauss) * h).abs() }, abs * h.abs())
}

/// Adaptive Gauss–Kronrod on [a, b] by recursive bisection.
pub fn integrate<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Estimate {
    if a == b {
        return Estimate::default();
    }
    let whole = gk15_abs(f, a, b);
    let mut budget = MAX_PANELS;
    refine(f, a, b, whole, abs_tol, rel_tol, 0, &mut budget)
}

/// Panels one adaptive call may split into before giving up on the tolerance.
const MAX_PANELS: u32 = 1 << 12;

const MAX_DEPTH: u32 = 40;
/// Differences below this multiple of `ε·∫|f|` are rounding noise.
const NOISE: f64 = 1000.0 * f64::EPSILON;

fn refine<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    (whole, abs): (Estimate, f64),
    abs_tol: f64,
    rel_tol: f64,
    depth: u32,
    budget: &mut u32,
) -> Estimate {
    let tol = abs_tol.max(rel_tol * whole.value.abs());
    // |K15 − G7| overestimates the K15 error for smooth integrands.
    if whole.error <= tol || whole.error <= NOISE * abs || depth >= MAX_DEPTH || *budget < 2 {
        return whole;
    }
    *budget -= 2;
    let m = 0.5 * (a + b);
    let left = gk15_abs(f, a, m);
    let right = gk15_abs(f, m, b);
    refine(f, a, m, left, 0.5 * abs_tol, rel_tol, depth + 1, budget) + refine(f, m, b, right, 0.5 * abs_tol, rel_tol, depth + 1, budget)
}

/// Adaptive integration over consecutive panels `[p_k, p_{k+1}]`.
pub fn integrate_panels<F: FnMut(f64) -> f64>(f: &mut F, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> Estimate {
    let n = breaks.len().saturating_sub(1).max(1) as f64;
    breaks.windows(2).map(|w| integrate(f, w[0], w[1], abs_tol / n, rel_tol)).sum()
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Tensor Gauss–Legendre on [0,1]²; error from comparing `n` and `2n` nodes.
pub fn integrate_unit_square<F: FnMut(f64, f64) -> f64>(f: &mut F, n: usize) -> Estimate {
    let coarse = tensor_gl(f, n);
    let fine = tensor_gl(f, 2 * n);
    Estimate { value: fine, error: (fine - coarse).abs() }
}

fn tensor_gl<F: FnMut(f64, f64) -> f64>(f: &mut F, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let mut total = 0.0;
    for i in 0..n {
        let u = 0.5 * (x[i] + 1.0);
        let mut row = 0.0;
        for j in 0..n {
            let v = 0.5 * (x[j] + 1.0);
            row += w[j] * f(u, v);
        }
        total += w[i] * row;
    }
    total * 0.25
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_sum_to_two() {
        let s: f64 = WGK[7] + 2.0 * WGK[..7].iter().sum::<f64>();
        assert!((s - 2.0).abs() < 1e-15);
        let g: f64 = WG[3] + 2.0 * WG[..3].iter().sum::<f64>();
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn kronrod_exact_for_high_degree_polynomials() {
        // Kronrod 15 is exact through degree 22
        for k in 0..=22 {
            let est = gk15(&mut |x: f64| x.powi(k), 0.0, 1.0);
            assert!((est.value - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "degree {k}");
        }
        // Gauss 7 is exact through degree 13
        let est = gk15(&mut |x: f64| x.powi(13), 0.0, 1.0);
        assert!(est.error < 1e-14);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let mut f = |x: f64| 1.0 / (1e-4 + x * x);
        let est = integrate(&mut f, -1.0, 1.0, 1e-12, 1e-13);
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((est.value - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn zero_length_interval() {
        assert_eq!(integrate(&mut |x: f64| x, 2.0, 2.0, 1e-12, 0.0).value, 0.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        for k in 0..20 {
            let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k)).sum();
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((s - exact).abs() < 1e-14, "degree {k}");
        }
    }

    #[test]
    fn unit_square() {
        let est = integrate_unit_square(&mut |u: f64, v: f64| (u * v).exp(), 12);
        // ∫∫ e^{uv} = Σ 1/(k·k!)
        let mut exact = 0.0;
        let mut fact = 1.0;
        for k in 1..30 {
            fact *= k as f64;
            exact += 1.0 / (k as f64 * fact);
        }
        assert!((est.value - exact).abs() < 1e-14);
    }
}
