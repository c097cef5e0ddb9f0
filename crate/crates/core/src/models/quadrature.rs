//! Deterministic quadrature used for reference values.

/// `∫_a^b f` by double-exponential quadrature on `pieces` equal subintervals.
pub fn integrate<F>(f: F, a: f64, b: f64, pieces: usize, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let pieces = pieces.max(1);
    let width = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == pieces { b } else { lo + width };
            quadrature::integrate(&f, lo, hi, tol / pieces as f64).integral
        })
        .sum()
}
