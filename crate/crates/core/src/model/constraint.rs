use ndarray::{Array1, ArrayView1};

use crate::error::{HnnError, Result};

/// Rescales a positive variance path so that its mean equals `nu`.
pub fn constrain_variance(raw: ArrayView1<'_, f64>, nu: f64) -> Result<Array1<f64>> {
    let m = positive_mean(raw)?;
    Ok(raw.mapv(|r| r * (nu / m)))
}

/// Chain rule through the normaliser: gradient with respect to the raw
/// path given the gradient with respect to the constrained path.
///
/// With `v_i = ν r_i / m` and `m = mean(r)`:
/// `∂L/∂r_j = (ν/m) g_j − ν/(n m²) Σ_i g_i r_i`.
pub fn constrain_backward(raw: ArrayView1<'_, f64>, nu: f64, d_constrained: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    if raw.len() != d_constrained.len() {
        return Err(HnnError::Shape("constraint gradient length differs from path".into()));
    }
    let m = positive_mean(raw)?;
    let n = raw.len() as f64;
    let cross = d_constrained.dot(&raw) * nu / (n * m * m);
    Ok(d_constrained.mapv(|g| g * nu / m - cross))
}

fn positive_mean(raw: ArrayView1<'_, f64>) -> Result<f64> {
    if raw.is_empty() {
        return Err(HnnError::Shape("empty variance path".into()));
    }
    if raw.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(HnnError::Domain("raw variance path must be positive and finite".into()));
    }
    Ok(raw.sum() / raw.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn constant_path_maps_to_nu() {
        let out = constrain_variance(array![2.5, 2.5, 2.5].view(), 0.4).unwrap();
        assert!(out.iter().all(|v| (v - 0.4).abs() < 1e-15));
    }

    #[test]
    fn mean_equals_nu_and_ratios_survive() {
        let raw = array![0.1, 3.0, 0.7, 12.0, 0.02];
        let out = constrain_variance(raw.view(), 0.63).unwrap();
        assert!((out.mean().unwrap() - 0.63).abs() < 1e-12);
        for i in 0..5 {
            for j in 0..5 {
                assert!((out[i] / out[j] - raw[i] / raw[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let raw = array![0.4, 1.3, 0.8, 2.1];
        let g = array![0.3, -1.1, 0.7, 0.2];
        let nu = 0.55;
        let analytic = constrain_backward(raw.view(), nu, g.view()).unwrap();
        let f = |r: &Array1<f64>| constrain_variance(r.view(), nu).unwrap().dot(&g);
        let h = 1e-6;
        for j in 0..4 {
            let (mut p, mut m) = (raw.clone(), raw.clone());
            p[j] += h;
            m[j] -= h;
            let fd = (f(&p) - f(&m)) / (2.0 * h);
            assert!((fd - analytic[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn nonpositive_path_rejected() {
        assert!(constrain_variance(array![1.0, 0.0].view(), 0.5).is_err());
    }
}
