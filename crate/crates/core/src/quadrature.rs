//! Globally adaptive Gauss-Kronrod (7, 15) integration.

use thiserror::Error;

use crate::scalar::Scalar;

#[allow(clippy::excessive_precision)]
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

#[allow(clippy::excessive_precision)]
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

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("adaptive quadrature stopped after {intervals} intervals: value {value}, relative error {achieved:e} > {requested:e}")]
    NotConverged {
        value: f64,
        achieved: f64,
        requested: f64,
        intervals: usize,
    },
    #[error("integrand returned a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_error: T,
    pub intervals: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn kronrod<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> Segment<T> {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center);
    let mut res_k = fc * T::lit(WGK[7]);
    let mut res_g = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half_len * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        res_k += T::lit(WGK[j]) * (f1 + f2);
        if j % 2 == 1 {
            res_g += T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let value = res_k * half_len;
    let error = ((res_k - res_g) * half_len).abs();
    Segment { a, b, value, error }
}

/// Integrates `f` over the union of consecutive intervals given by
/// `breakpoints` (at least two, increasing) until the summed error estimate is
/// below `rel_tol * |value|`.
pub fn integrate<T: Scalar, F: Fn(T) -> T>(
    f: F,
    breakpoints: &[T],
    rel_tol: T,
    max_intervals: usize,
) -> Result<QuadResult<T>, QuadError> {
    assert!(breakpoints.len() >= 2, "need at least one interval");
    let mut segments: Vec<Segment<T>> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod(&f, w[0], w[1]))
        .collect();
    let mut evaluations = 15 * segments.len();

    loop {
        let value = segments.iter().fold(T::zero(), |acc, s| acc + s.value);
        let error = segments.iter().fold(T::zero(), |acc, s| acc + s.error);
        if !value.is_finite() || !error.is_finite() {
            return Err(QuadError::NonFinite);
        }
        // Errors below roundoff of the accumulated sum cannot be reduced further.
        let floor = T::epsilon() * T::lit(50.0) * value.abs();
        if error <= rel_tol * value.abs() || error <= floor {
            return Ok(QuadResult {
                value,
                abs_error: error,
                intervals: segments.len(),
                evaluations,
            });
        }
        if segments.len() >= max_intervals {
            return Err(QuadError::NotConverged {
                value: value.as_f64(),
                achieved: (error / value.abs()).as_f64(),
                requested: rel_tol.as_f64(),
                intervals: segments.len(),
            });
        }
        let (worst, _) =
            segments
                .iter()
                .enumerate()
                .fold((0, T::neg_infinity()), |(bi, be), (i, s)| {
                    if s.error > be {
                        (i, s.error)
                    } else {
                        (bi, be)
                    }
                });
        let s = segments.swap_remove(worst);
        let mid = T::lit(0.5) * (s.a + s.b);
        segments.push(kronrod(&f, s.a, mid));
        segments.push(kronrod(&f, mid, s.b));
        evaluations += 30;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact_on_one_panel() {
        let r = integrate(|x: f64| x.powi(6) - 2.0 * x, &[0.0, 2.0], 1e-14, 1).unwrap();
        assert_relative_eq!(r.value, 128.0 / 7.0 - 4.0, max_relative = 1e-14);
    }

    #[test]
    fn peaked_lorentzian() {
        let eps = 1e-4f64;
        let r = integrate(|x: f64| 1.0 / (eps + x * x), &[-1.0, 0.0, 1.0], 1e-12, 500).unwrap();
        let exact = 2.0 / eps.sqrt() * (1.0 / eps.sqrt()).atan();
        assert_relative_eq!(r.value, exact, max_relative = 1e-11);
    }

    #[test]
    fn reports_non_convergence() {
        let err = integrate(|x: f64| x.sqrt().recip(), &[0.0, 1.0], 1e-14, 4).unwrap_err();
        assert!(matches!(err, QuadError::NotConverged { intervals: 4, .. }));
    }

    #[test]
    fn single_precision() {
        let r = integrate(|x: f32| x.sin(), &[0.0, std::f32::consts::PI], 1e-6, 50).unwrap();
        assert!((r.value - 2.0).abs() < 1e-5);
    }
}
