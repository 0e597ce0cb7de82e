//! Scalar special functions: the odd Jacobi theta function, the Kronecker
//! function phi, the Eisenstein-type logarithmic derivative E1 and the
//! Weierstrass-type function wp, uniformly over three realizations
//! (elliptic, trigonometric/hyperbolic, rational).
//!
//! The elliptic theta is
//!
//! ```text
//! theta(x) = sum_{k in Z} exp( pi i tau (k + 1/2)^2 + 2 pi i (x + 1/2)(k + 1/2) )
//! ```
//!
//! and the Kronecker function is the quotient
//!
//! ```text
//! phi(h, z) = theta'(0) theta(h + z) / (theta(h) theta(z)),
//! ```
//!
//! with degenerations `coth(h) + coth(z)` and `1/h + 1/z`. All functions are
//! pure; evaluation near a pole of the active lattice is reported as
//! [`Error::PoleProximity`].

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default exclusion radius around lattice poles, in the natural lattice
/// metric of each variant.
pub const POLE_EXCLUSION_RADIUS: f64 = 1e-3;

/// Hard floor below which evaluation is refused even on the raw paths
/// (protects against outright division blow-ups).
const POLE_HARD_FLOOR: f64 = 1e-12;

/// Absolute tolerance for the dropped tail of the truncated theta series.
pub const THETA_TAIL_TOL: f64 = 1e-14;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Selects the functional realization of phi, E1 and wp.
///
/// `Elliptic` carries the modulus tau with Im(tau) > 0; the degenerate
/// variants carry no parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FunctionVariant {
    Elliptic { tau: Complex64 },
    Trigonometric,
    Rational,
}

impl FunctionVariant {
    /// Construct the elliptic variant, validating the modulus and verifying
    /// the unitarity normalization phi(h,q) phi(h,-q) = wp(h) - wp(q) at
    /// reference points. A failure indicates tau is outside the precision
    /// envelope of the truncated series.
    pub fn elliptic(tau: Complex64) -> Result<Self> {
        ensure_tau(tau)?;
        let v = FunctionVariant::Elliptic { tau };
        for (h, q) in [
            (c(0.17, 0.11), c(0.23, -0.07)),
            (c(-0.31, 0.05), c(0.12, 0.19)),
        ] {
            let lhs = v.phi(h, q)? * v.phi(h, -q)?;
            let rhs = v.wp(h)? - v.wp(q)?;
            let res = (lhs - rhs).norm();
            if res > 1e-11 {
                return Err(Error::Config(format!(
                    "elliptic variant with tau = {tau} fails the unitarity \
                     normalization check (residual {res:.3e})"
                )));
            }
        }
        Ok(v)
    }

    pub fn name(&self) -> &'static str {
        match self {
            FunctionVariant::Elliptic { .. } => "elliptic",
            FunctionVariant::Trigonometric => "trigonometric",
            FunctionVariant::Rational => "rational",
        }
    }

    pub fn is_elliptic(&self) -> bool {
        matches!(self, FunctionVariant::Elliptic { .. })
    }

    /// Distance from `x` to the nearest pole lattice point.
    ///
    /// Rational: the lattice is {0}. Trigonometric: i pi Z. Elliptic:
    /// Z + tau Z.
    pub fn pole_distance(&self, x: Complex64) -> f64 {
        self.pole_distance_scaled(x, 1)
    }

    /// Distance from `x` to the nearest point of the pole lattice refined by
    /// `divisor` (lattice / divisor). Used for Planck-slot arguments of
    /// families whose coefficients shift the argument by fractional lattice
    /// vectors.
    pub fn pole_distance_scaled(&self, x: Complex64, divisor: u32) -> f64 {
        let d = divisor as f64;
        match self {
            FunctionVariant::Rational => x.norm(),
            FunctionVariant::Trigonometric => {
                let period = PI / d;
                let dy = x.im - (x.im / period).round() * period;
                (x.re * x.re + dy * dy).sqrt()
            }
            FunctionVariant::Elliptic { tau } => {
                // x ~ (alpha + beta tau) / d; scan the four surrounding
                // lattice points of the sheared grid.
                let beta = x.im * d / tau.im;
                let alpha = x.re * d - beta * tau.re;
                let mut best = f64::INFINITY;
                for nb in [beta.floor(), beta.ceil()] {
                    for na in [alpha.floor(), alpha.ceil()] {
                        let p = (c(na, 0.0) + tau * nb) / d;
                        best = best.min((x - p).norm());
                    }
                }
                best
            }
        }
    }

    fn guard(&self, x: Complex64, context: &str, radius: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::PoleProximity {
                context: format!("{context}: non-finite argument"),
                value: x,
                distance: 0.0,
            });
        }
        let dist = self.pole_distance(x);
        if dist < radius {
            return Err(Error::PoleProximity {
                context: context.to_string(),
                value: x,
                distance: dist,
            });
        }
        Ok(())
    }

    /// The Kronecker function phi(h, z), guarded by the default
    /// pole-exclusion radius on h, z and (elliptic) h + z.
    pub fn phi(&self, h: Complex64, z: Complex64) -> Result<Complex64> {
        self.guard(h, "phi: first argument", POLE_EXCLUSION_RADIUS)?;
        self.guard(z, "phi: second argument", POLE_EXCLUSION_RADIUS)?;
        if self.is_elliptic() {
            self.guard(h + z, "phi: argument sum", POLE_EXCLUSION_RADIUS)?;
        }
        self.phi_raw(h, z)
    }

    /// phi(h, z) with only the hard safety floor applied. Intended for limit
    /// probes (small-h expansions) that deliberately step inside the default
    /// exclusion radius.
    pub fn phi_raw(&self, h: Complex64, z: Complex64) -> Result<Complex64> {
        self.guard(h, "phi: first argument", POLE_HARD_FLOOR)?;
        self.guard(z, "phi: second argument", POLE_HARD_FLOOR)?;
        match self {
            FunctionVariant::Rational => Ok(1.0 / h + 1.0 / z),
            FunctionVariant::Trigonometric => Ok(coth(h) + coth(z)),
            FunctionVariant::Elliptic { tau } => {
                let tp0 = theta_deriv_unchecked(Complex64::default(), *tau, 1);
                Ok(tp0 * theta_unchecked(h + z, *tau)
                    / (theta_unchecked(h, *tau) * theta_unchecked(z, *tau)))
            }
        }
    }

    /// E1(z): theta'(z)/theta(z), coth(z) or 1/z. The h^0 coefficient of
    /// phi(h, z) as h -> 0.
    pub fn e1(&self, z: Complex64) -> Result<Complex64> {
        self.guard(z, "e1: argument", POLE_EXCLUSION_RADIUS)?;
        match self {
            FunctionVariant::Rational => Ok(1.0 / z),
            FunctionVariant::Trigonometric => Ok(coth(z)),
            FunctionVariant::Elliptic { tau } => {
                Ok(theta_deriv_unchecked(z, *tau, 1) / theta_unchecked(z, *tau))
            }
        }
    }

    /// E1'(z). Equals -wp(z) up to the variant's additive constant.
    pub fn e1_deriv(&self, z: Complex64) -> Result<Complex64> {
        self.guard(z, "e1': argument", POLE_EXCLUSION_RADIUS)?;
        match self {
            FunctionVariant::Rational => Ok(-1.0 / (z * z)),
            FunctionVariant::Trigonometric => {
                let s = z.sinh();
                Ok(-1.0 / (s * s))
            }
            FunctionVariant::Elliptic { tau } => {
                let t = theta_unchecked(z, *tau);
                let t1 = theta_deriv_unchecked(z, *tau, 1);
                let t2 = theta_deriv_unchecked(z, *tau, 2);
                Ok(t2 / t - (t1 / t) * (t1 / t))
            }
        }
    }

    /// The Weierstrass-type function wp(z): 1/z^2, 1/sinh^2(z), or the
    /// elliptic -E1'(z) + c with c = -theta'''(0) / (3 theta'(0)).
    pub fn wp(&self, z: Complex64) -> Result<Complex64> {
        match self {
            FunctionVariant::Rational => {
                self.guard(z, "wp: argument", POLE_EXCLUSION_RADIUS)?;
                Ok(1.0 / (z * z))
            }
            FunctionVariant::Trigonometric => {
                self.guard(z, "wp: argument", POLE_EXCLUSION_RADIUS)?;
                let s = z.sinh();
                Ok(1.0 / (s * s))
            }
            FunctionVariant::Elliptic { tau } => {
                let e1d = self.e1_deriv(z)?;
                let tp0 = theta_deriv_unchecked(Complex64::default(), *tau, 1);
                let tp3 = theta_deriv_unchecked(Complex64::default(), *tau, 3);
                Ok(-e1d - tp3 / (3.0 * tp0))
            }
        }
    }

    /// Derivative of phi in its second argument, computed analytically as
    /// phi(h, z) (E1(h + z) - E1(z)).
    pub fn phi_dz(&self, h: Complex64, z: Complex64) -> Result<Complex64> {
        self.guard(h, "phi_dz: first argument", POLE_EXCLUSION_RADIUS)?;
        self.guard(z, "phi_dz: second argument", POLE_EXCLUSION_RADIUS)?;
        self.guard(h + z, "phi_dz: argument sum", POLE_EXCLUSION_RADIUS)?;
        let phi = self.phi_raw(h, z)?;
        let e1_sum = self.e1(h + z)?;
        let e1_z = self.e1(z)?;
        Ok(phi * (e1_sum - e1_z))
    }
}

fn ensure_tau(tau: Complex64) -> Result<()> {
    if !tau.is_finite() || !(tau.im > 0.0) {
        return Err(Error::InvalidTau(tau));
    }
    Ok(())
}

fn coth(z: Complex64) -> Complex64 {
    z.cosh() / z.sinh()
}

/// Truncation radius K such that the dropped tail of the (order-times
/// differentiated) theta series stays below [`THETA_TAIL_TOL`].
///
/// Term magnitudes obey |term| <= exp(-pi Im(tau) m^2 + 2 pi |Im x| m) with
/// m = |k + 1/2|; differentiation contributes a polynomial factor
/// (2 pi m)^order folded into the bound logarithmically.
fn truncation_radius(x_im_abs: f64, tau_im: f64, order: u32) -> i64 {
    let target = THETA_TAIL_TOL.ln() - 2.0;
    let mut k: i64 = 4;
    loop {
        let m = k as f64 + 0.5;
        let log_mag = -PI * tau_im * m * m
            + 2.0 * PI * x_im_abs * m
            + order as f64 * (2.0 * PI * (m + 1.0)).ln();
        // Beyond K the term ratio must decay at least as exp(-2) so the tail
        // is bounded by a geometric series.
        let decaying = PI * tau_im * (2.0 * m + 1.0) - 2.0 * PI * x_im_abs > 2.0;
        if log_mag < target && decaying {
            return k;
        }
        k += 1;
        if k > 4000 {
            return 4000;
        }
    }
}

fn theta_unchecked(x: Complex64, tau: Complex64) -> Complex64 {
    theta_series(x, tau, 0)
}

fn theta_deriv_unchecked(x: Complex64, tau: Complex64, order: u32) -> Complex64 {
    theta_series(x, tau, order)
}

fn theta_series(x: Complex64, tau: Complex64, order: u32) -> Complex64 {
    let kmax = truncation_radius(x.im.abs(), tau.im, order);
    let i = Complex64::i();
    let mut sum = Complex64::default();
    for k in -kmax..=kmax {
        let m = k as f64 + 0.5;
        let exponent = PI * i * (tau * (m * m) + (x + 0.5) * (2.0 * m));
        let mut term = exponent.exp();
        for _ in 0..order {
            term *= 2.0 * PI * i * m;
        }
        sum += term;
    }
    sum
}

/// The odd theta function of the series above, truncated so the dropped tail
/// is below [`THETA_TAIL_TOL`].
pub fn theta(x: Complex64, tau: Complex64) -> Result<Complex64> {
    ensure_tau(tau)?;
    Ok(theta_unchecked(x, tau))
}

/// Term-wise derivative of the theta series, orders 1..=3.
pub fn theta_deriv(x: Complex64, tau: Complex64, order: u32) -> Result<Complex64> {
    ensure_tau(tau)?;
    if !(1..=3).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    Ok(theta_deriv_unchecked(x, tau, order))
}

#[cfg(test)]
mod tests {
    use super::*;

    const I: Complex64 = Complex64::new(0.0, 1.0);

    fn tau_i() -> Complex64 {
        c(0.0, 1.0)
    }

    #[test]
    fn theta_vanishes_at_origin() {
        let v = theta(Complex64::default(), tau_i()).unwrap();
        assert!(v.norm() < 1e-14, "theta(0) = {v}");
    }

    #[test]
    fn theta_is_odd() {
        let x = c(-0.3, 0.1);
        let a = theta(x, tau_i()).unwrap();
        let b = theta(-x, tau_i()).unwrap();
        assert!((a + b).norm() < 1e-14);
    }

    #[test]
    fn theta_rejects_lower_half_plane_tau() {
        assert!(matches!(
            theta(c(0.1, 0.0), c(0.0, -1.0)),
            Err(Error::InvalidTau(_))
        ));
        assert!(matches!(
            theta_deriv(c(0.1, 0.0), c(1.0, 0.0), 1),
            Err(Error::InvalidTau(_))
        ));
    }

    #[test]
    fn theta_deriv_rejects_unsupported_order() {
        assert!(matches!(
            theta_deriv(c(0.1, 0.0), tau_i(), 4),
            Err(Error::UnsupportedOrder(4))
        ));
        assert!(matches!(
            theta_deriv(c(0.1, 0.0), tau_i(), 0),
            Err(Error::UnsupportedOrder(0))
        ));
    }

    #[test]
    fn even_theta_derivatives_vanish_at_origin() {
        let v = theta_deriv(Complex64::default(), tau_i(), 2).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn phi_rational_value() {
        let v = FunctionVariant::Rational;
        let got = v.phi(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((got - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn phi_dz_rational_value() {
        let v = FunctionVariant::Rational;
        let got = v.phi_dz(c(1.0, 0.0), c(2.0, 0.0)).unwrap();
        assert!((got - c(-0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn e1_rational_value_and_oddness() {
        let v = FunctionVariant::Rational;
        assert!((v.e1(c(2.0, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        for variant in [
            FunctionVariant::Rational,
            FunctionVariant::Trigonometric,
            FunctionVariant::elliptic(tau_i()).unwrap(),
        ] {
            let z = c(0.23, 0.11);
            let a = variant.e1(z).unwrap();
            let b = variant.e1(-z).unwrap();
            assert!((a + b).norm() < 1e-12, "{}: {a} vs {b}", variant.name());
        }
    }

    #[test]
    fn wp_rational_value_and_evenness() {
        let v = FunctionVariant::Rational;
        assert!((v.wp(c(2.0, 0.0)).unwrap() - c(0.25, 0.0)).norm() < 1e-15);
        for variant in [
            FunctionVariant::Rational,
            FunctionVariant::Trigonometric,
            FunctionVariant::elliptic(tau_i()).unwrap(),
        ] {
            let z = c(0.31, -0.17);
            let a = variant.wp(z).unwrap();
            let b = variant.wp(-z).unwrap();
            assert!((a - b).norm() < 1e-12, "{}", variant.name());
        }
    }

    #[test]
    fn phi_rejects_pole_proximity() {
        let v = FunctionVariant::Rational;
        assert!(matches!(
            v.phi(c(1e-5, 0.0), c(1.0, 0.0)),
            Err(Error::PoleProximity { .. })
        ));
        let t = FunctionVariant::Trigonometric;
        assert!(matches!(
            t.phi(c(0.0, PI), c(0.4, 0.0)),
            Err(Error::PoleProximity { .. })
        ));
        // Elliptic also excludes the argument sum near a lattice point.
        let e = FunctionVariant::elliptic(tau_i()).unwrap();
        assert!(matches!(
            e.phi(c(0.5, 0.5), c(0.5, 0.5)),
            Err(Error::PoleProximity { .. })
        ));
    }

    #[test]
    fn phi_is_symmetric_across_variants() {
        let pts = [
            (c(0.21, 0.07), c(-0.34, 0.12)),
            (c(-0.11, -0.23), c(0.42, 0.05)),
        ];
        for variant in [
            FunctionVariant::Rational,
            FunctionVariant::Trigonometric,
            FunctionVariant::elliptic(tau_i()).unwrap(),
        ] {
            for (h, z) in pts {
                let a = variant.phi(h, z).unwrap();
                let b = variant.phi(z, h).unwrap();
                assert!((a - b).norm() < 1e-12, "{}", variant.name());
            }
        }
    }

    #[test]
    fn pole_distance_matches_lattice_geometry() {
        let r = FunctionVariant::Rational;
        assert!((r.pole_distance(c(0.3, 0.4)) - 0.5).abs() < 1e-15);
        let t = FunctionVariant::Trigonometric;
        assert!((t.pole_distance(c(0.0, PI + 0.1)) - 0.1).abs() < 1e-12);
        let e = FunctionVariant::Elliptic { tau: tau_i() };
        assert!((e.pole_distance(c(1.0, 0.9)) - 0.1).abs() < 1e-12);
        // Refined lattice for Planck-slot arguments.
        assert!((e.pole_distance_scaled(c(0.5, 0.5), 2) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn elliptic_constructor_validates_tau() {
        assert!(FunctionVariant::elliptic(c(0.3, -1.0)).is_err());
        assert!(FunctionVariant::elliptic(I).is_ok());
    }
}
