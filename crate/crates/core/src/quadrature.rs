//! Quadrature rules and low-discrepancy samples.

/// Degree-2 rule: barycentric points and weights (weights sum to 1).
pub const TRI3: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

/// Degree-5 seven-point rule (weights sum to 1).
pub fn tri7() -> [([f64; 3], f64); 7] {
    let s = 15f64.sqrt();
    let a1 = (6.0 - s) / 21.0;
    let b1 = (9.0 + 2.0 * s) / 21.0;
    let w1 = (155.0 - s) / 1200.0;
    let a2 = (6.0 + s) / 21.0;
    let b2 = (9.0 - 2.0 * s) / 21.0;
    let w2 = (155.0 + s) / 1200.0;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 9.0 / 40.0),
        ([a1, a1, b1], w1),
        ([a1, b1, a1], w1),
        ([b1, a1, a1], w1),
        ([a2, a2, b2], w2),
        ([a2, b2, a2], w2),
        ([b2, a2, a2], w2),
    ]
}

/// Two-point Gauss nodes on [0, 1] with weights 1/2.
pub const GAUSS2_UNIT: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// Gauss-Legendre nodes and weights on [a, b].
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            if n == 1 {
                dp = 1.0;
            }
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((mid + half * x, half * w));
    }
    out.reverse();
    out
}

/// Radical inverse in base `b` of `i`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// The `i`-th two-dimensional Halton point (bases 2 and 3).
pub fn halton2(i: u64) -> [f64; 2] {
    [radical_inverse(i, 2), radical_inverse(i, 3)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..12 {
            let q = gauss_legendre(n, 0.0, 2.0);
            for d in 0..(2 * n) {
                let s: f64 = q.iter().map(|&(x, w)| w * x.powi(d as i32)).sum();
                let exact = 2f64.powi(d as i32 + 1) / (d as f64 + 1.0);
                assert!((s - exact).abs() < 1e-12 * exact, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn tri7_degree_five() {
        // ∫ over the reference triangle of l1^a l2^b = a! b! 2 / (a+b+2)! times area 1/2
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                let s: f64 = tri7().iter().map(|(l, w)| w * l[0].powi(a as i32) * l[1].powi(b as i32)).sum();
                let exact = fact(a) * fact(b) * 2.0 / fact(a + b + 2);
                assert!((s - exact).abs() < 1e-14, "{a} {b}");
            }
        }
    }

    #[test]
    fn halton_prefix() {
        assert_eq!(halton2(1), [0.5, 1.0 / 3.0]);
        assert_eq!(halton2(2), [0.25, 2.0 / 3.0]);
    }
}
