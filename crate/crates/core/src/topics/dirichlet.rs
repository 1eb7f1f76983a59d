use super::special::ln_gamma;
use crate::error::{Error, Result};

/// Dirichlet density `Γ(Σα) / Π Γ(α_i) · Π π_i^(α_i − 1)` at an interior
/// point of the simplex.
pub fn dirichlet_pdf(pi: &[f64], alpha: &[f64]) -> Result<f64> {
    Ok(dirichlet_ln_pdf(pi, alpha)?.exp())
}

pub fn dirichlet_ln_pdf(pi: &[f64], alpha: &[f64]) -> Result<f64> {
    if pi.len() != alpha.len() || pi.is_empty() {
        return Err(Error::shape(format!("{} weights against {} concentrations", pi.len(), alpha.len())));
    }
    if alpha.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::Numeric("concentrations must be positive".into()));
    }
    if pi.iter().any(|p| !(*p > 0.0 && *p < 1.0 || pi.len() == 1 && *p == 1.0))
        || (pi.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::Numeric("point is not inside the simplex".into()));
    }
    let norm = ln_gamma(alpha.iter().sum()) - alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>();
    Ok(norm + pi.iter().zip(alpha).map(|(p, a)| (a - 1.0) * p.ln()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Gauss-Legendre nodes and weights on [0, 1] by Newton iteration on P_n.
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        (1..=n)
            .map(|i| {
                let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let step = p1 / dp;
                    x -= step;
                    if step.abs() < 1e-16 {
                        break;
                    }
                }
                let w = 2.0 / ((1.0 - x * x) * dp * dp);
                (0.5 * (x + 1.0), 0.5 * w)
            })
            .collect()
    }

    /// Integrate over the 2-simplex with the collapsed-square map
    /// `π1 = u, π2 = (1 − u) v`.
    fn simplex_mass(alpha: &[f64]) -> f64 {
        let rule = gauss_legendre(40);
        let mut total = 0.0;
        for &(u, wu) in &rule {
            for &(v, wv) in &rule {
                let p1 = u;
                let p2 = (1.0 - u) * v;
                let pi = [p1, p2, 1.0 - p1 - p2];
                total += wu * wv * (1.0 - u) * dirichlet_pdf(&pi, alpha).unwrap();
            }
        }
        total
    }

    #[test]
    fn closed_form_values() {
        for p in [0.1, 0.5, 0.93] {
            assert!((dirichlet_pdf(&[p, 1.0 - p], &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!((dirichlet_pdf(&[0.5, 0.5], &[2.0, 2.0]).unwrap() - 1.5).abs() < 1e-13);
    }

    #[test]
    fn integrates_to_one() {
        assert!((simplex_mass(&[2.0, 1.0, 1.0]) - 1.0).abs() < 1e-6);
        assert!((simplex_mass(&[3.0, 2.0, 4.0]) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(dirichlet_pdf(&[0.5, 0.6], &[1.0, 1.0]), Err(Error::Numeric(_))));
        assert!(matches!(dirichlet_pdf(&[0.0, 1.0], &[1.0, 1.0]), Err(Error::Numeric(_))));
        assert!(matches!(dirichlet_pdf(&[0.5, 0.5], &[1.0, 0.0]), Err(Error::Numeric(_))));
        assert!(matches!(dirichlet_pdf(&[0.5, 0.5], &[1.0]), Err(Error::Shape(_))));
    }
}
