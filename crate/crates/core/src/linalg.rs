//! Dense vector helpers on `[f64]`.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn norm1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `ℓ_p` norm for `p ∈ [1, ∞]`. General exponents are evaluated on the
/// max-rescaled vector so large entries do not overflow.
pub fn norm_p(x: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        norm1(x)
    } else if p == 2.0 {
        norm2(x)
    } else if p.is_infinite() {
        norm_inf(x)
    } else {
        let m = norm_inf(x);
        if m == 0.0 || !m.is_finite() {
            return m;
        }
        m * x
            .iter()
            .map(|v| (v.abs() / m).powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Dual exponent `q` with `1/p + 1/q = 1`.
pub fn dual_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add_scaled(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_agree_on_special_exponents() {
        let x = [3.0, -4.0, 0.0];
        assert_eq!(norm_p(&x, 2.0), 5.0);
        assert_eq!(norm_p(&x, 1.0), 7.0);
        assert_eq!(norm_p(&x, f64::INFINITY), 4.0);
        let generic = norm_p(&x, 1.5);
        let direct = (3f64.powf(1.5) + 4f64.powf(1.5)).powf(1.0 / 1.5);
        assert!((generic - direct).abs() < 1e-12);
    }

    #[test]
    fn dual_exponents() {
        assert_eq!(dual_exponent(2.0), 2.0);
        assert!(dual_exponent(1.0).is_infinite());
        assert!((dual_exponent(1.5) - 3.0).abs() < 1e-15);
    }
}
