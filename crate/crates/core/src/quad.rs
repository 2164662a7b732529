//! 1-D quadrature for piecewise-smooth integrands.
//!
//! Each smooth piece is mapped through x = a + (b - a) sin²t, which turns
//! inverse square-root endpoint singularities into bounded integrands, and
//! then handed to tanh-sinh.

/// Integrates `f` over `[a, b]`, splitting at every breakpoint strictly
/// inside the interval. `abs_tol` is the target absolute error per piece.
pub fn integrate_piecewise<F>(f: F, a: f64, b: f64, breakpoints: &[f64], abs_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    if b <= a {
        return 0.0;
    }
    let mut knots: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&t| t > a && t < b && t.is_finite())
        .collect();
    knots.sort_by(|x, y| x.total_cmp(y));
    knots.dedup();
    let mut edges = Vec::with_capacity(knots.len() + 2);
    edges.push(a);
    edges.extend(knots);
    edges.push(b);
    edges
        .windows(2)
        .map(|w| {
            let (lo, width) = (w[0], w[1] - w[0]);
            let g = |t: f64| {
                let (sin, cos) = t.sin_cos();
                f(lo + width * sin * sin) * 2.0 * width * sin * cos
            };
            quadrature::double_exponential::integrate(g, 0.0, std::f64::consts::FRAC_PI_2, abs_tol)
                .integral
        })
        .sum()
}
