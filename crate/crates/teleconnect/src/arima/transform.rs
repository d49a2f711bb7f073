//! Unconstrained reparameterization of AR/MA coefficients through partial
//! autocorrelations.
//!
//! An unconstrained vector z maps through tanh to partial autocorrelations
//! in (-1, 1), and a Levinson-type recursion maps those to coefficients of
//! a polynomial 1 - a_1 B - ... - a_k B^k that is guaranteed stationary.
//! MA coefficients use the same map with a sign flip, which makes the
//! image exactly the invertibility region.

/// Partial autocorrelations -> coefficients of a stationary polynomial.
pub(crate) fn partials_to_coeffs(r: &[f64]) -> Vec<f64> {
    let k = r.len();
    let mut a = vec![0.0; k];
    for i in 0..k {
        let ri = r[i];
        let mut next = a.clone();
        next[i] = ri;
        for j in 0..i {
            next[j] = a[j] - ri * a[i - 1 - j];
        }
        a = next;
    }
    a.truncate(k);
    a
}

/// Inverse map; returns None when the polynomial is not stationary
/// (some partial autocorrelation falls outside (-1, 1)).
pub(crate) fn coeffs_to_partials(coeffs: &[f64]) -> Option<Vec<f64>> {
    let k = coeffs.len();
    let mut a = coeffs.to_vec();
    let mut r = vec![0.0; k];
    for i in (0..k).rev() {
        let ri = a[i];
        if !(ri.abs() < 1.0) {
            return None;
        }
        r[i] = ri;
        let denom = 1.0 - ri * ri;
        let mut prev = vec![0.0; i];
        for j in 0..i {
            prev[j] = (a[j] + ri * a[i - 1 - j]) / denom;
        }
        a = prev;
    }
    Some(r)
}

/// Unconstrained -> AR coefficients.
pub(crate) fn unconstrained_to_ar(z: &[f64]) -> Vec<f64> {
    let partials: Vec<f64> = z.iter().map(|v| v.tanh()).collect();
    partials_to_coeffs(&partials)
}

#[allow(dead_code)] // inverse maps exercised by tests
/// AR coefficients -> unconstrained, None if not stationary.
pub(crate) fn ar_to_unconstrained(phi: &[f64]) -> Option<Vec<f64>> {
    let partials = coeffs_to_partials(phi)?;
    Some(partials.iter().map(|r| clamp_atanh(*r)).collect())
}

/// Unconstrained -> MA coefficients (invertible).
pub(crate) fn unconstrained_to_ma(z: &[f64]) -> Vec<f64> {
    unconstrained_to_ar(z).iter().map(|a| -a).collect()
}

#[allow(dead_code)]
/// MA coefficients -> unconstrained, None if not invertible.
pub(crate) fn ma_to_unconstrained(theta: &[f64]) -> Option<Vec<f64>> {
    let negated: Vec<f64> = theta.iter().map(|t| -t).collect();
    ar_to_unconstrained(&negated)
}

/// True when the AR polynomial 1 - phi_1 B - ... has all roots outside the
/// unit circle.
pub(crate) fn is_stationary(phi: &[f64]) -> bool {
    phi.is_empty() || coeffs_to_partials(phi).is_some()
}

/// True when the MA polynomial 1 + theta_1 B + ... has all roots outside
/// the unit circle.
pub(crate) fn is_invertible(theta: &[f64]) -> bool {
    theta.is_empty() || {
        let negated: Vec<f64> = theta.iter().map(|t| -t).collect();
        coeffs_to_partials(&negated).is_some()
    }
}

#[allow(dead_code)]
fn clamp_atanh(r: f64) -> f64 {
    r.clamp(-0.999_999, 0.999_999).atanh()
}
