//! Convergence-order fitting on a step-size ladder.

use crate::error::{Error, Result};

/// Least-squares slope of `ln err` against `ln h`.
pub fn convergence_order_fit(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InputDomain(format!(
            "order fit needs at least 3 ladder points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|&(h, e)| !(h.is_finite() && h > 0.0 && e.is_finite() && e > 0.0))
    {
        return Err(Error::InputDomain(
            "order fit needs positive finite step sizes and errors".into(),
        ));
    }
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|&(h, e)| (h.ln(), e.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InputDomain("ladder step sizes must differ".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let hs = [4e-3, 2e-3, 1e-3, 5e-4];
        let lin: Vec<_> = hs.iter().map(|&h| (h, h)).collect();
        assert!((convergence_order_fit(&lin).unwrap() - 1.0).abs() < 1e-12);
        let half: Vec<_> = hs.iter().map(|&h| (h, 3.0 * h.sqrt())).collect();
        assert!((convergence_order_fit(&half).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_short_or_bad_ladders() {
        assert!(convergence_order_fit(&[(1e-3, 1e-3), (2e-3, 2e-3)]).is_err());
        assert!(convergence_order_fit(&[(1e-3, 0.0), (2e-3, 1.0), (4e-3, 1.0)]).is_err());
        assert!(convergence_order_fit(&[(1e-3, 1.0), (1e-3, 2.0), (1e-3, 3.0)]).is_err());
    }
}
