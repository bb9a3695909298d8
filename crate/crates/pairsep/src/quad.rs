//! Numerical quadrature over the unit disk.
//!
//! The disk rule is a tensor product in the coordinates `(v, phi)` with
//! `v = u^2`: Gauss-Legendre in `v` on `[0, 1]` and a uniform (periodic
//! trapezoid) rule in `phi` on `[0, 2*pi)`. The substitution makes the
//! radial Jacobian constant, `d2u = (1/2) dv dphi`, and turns the
//! quadratic pupil phase into a polynomial in `v`.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Gauss-Legendre nodes and weights on the standard interval `[-1, 1]`.
///
/// Computed by Newton iteration on the Legendre recurrence from the
/// Chebyshev initial guess; accurate to machine precision for the orders
/// used here.
pub fn gauss_legendre_std(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "Gauss-Legendre order must be at least 1");
    let nf = n as f64;
    // P_n(x) and P_n'(x) via the three-term recurrence
    let eval = |x: f64| -> (f64, f64) {
        let mut p0 = 1.0;
        let mut p1 = x;
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        if n == 1 {
            (x, 1.0)
        } else {
            (p1, nf * (x * p1 - p0) / (x * x - 1.0))
        }
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-like initial guess for the i-th root (descending)
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let (pn, d) = eval(x);
            pp = d;
            let dx = pn / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (pn2, d2) = eval(x);
                pp = d2;
                x -= pn2 / d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// Gauss-Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let scale = 0.5 * (b - a);
    let shift = 0.5 * (b + a);
    gauss_legendre_std(n)
        .into_iter()
        .map(|(x, w)| (shift + scale * x, scale * w))
        .collect()
}

/// A single node of the disk rule.
#[derive(Debug, Clone, Copy)]
pub struct DiskNode {
    /// Cartesian pupil coordinate `u_x`.
    pub x: f64,
    /// Cartesian pupil coordinate `u_y`.
    pub y: f64,
    /// Squared radius `v = u^2`.
    pub v: f64,
    /// Polar angle.
    pub phi: f64,
    /// Area weight; the weights sum to `pi`, the disk area.
    pub weight: f64,
}

/// Tensor quadrature rule over the unit disk.
#[derive(Debug, Clone)]
pub struct DiskRule {
    radial_order: usize,
    angular_order: usize,
    nodes: Vec<DiskNode>,
}

impl DiskRule {
    /// Builds a rule with `radial_order` Gauss-Legendre nodes in `v` and
    /// `angular_order` uniform nodes in `phi`.
    pub fn new(radial_order: usize, angular_order: usize) -> Self {
        assert!(radial_order >= 1 && angular_order >= 4);
        let radial = gauss_legendre(radial_order, 0.0, 1.0);
        let dphi = 2.0 * std::f64::consts::PI / angular_order as f64;
        let mut nodes = Vec::with_capacity(radial_order * angular_order);
        for &(v, wv) in &radial {
            let u = v.sqrt();
            for j in 0..angular_order {
                let phi = dphi * j as f64;
                let (sin_phi, cos_phi) = phi.sin_cos();
                nodes.push(DiskNode {
                    x: u * cos_phi,
                    y: u * sin_phi,
                    v,
                    phi,
                    // d2u = (1/2) dv dphi
                    weight: 0.5 * wv * dphi,
                });
            }
        }
        Self {
            radial_order,
            angular_order,
            nodes,
        }
    }

    /// Default angular resolution: four angular nodes per radial node.
    pub fn standard(radial_order: usize) -> Self {
        Self::new(radial_order, 4 * radial_order)
    }

    /// A rule with both orders doubled, for self-checks.
    pub fn refined(&self) -> Self {
        Self::new(self.radial_order * 2, self.angular_order * 2)
    }

    pub fn radial_order(&self) -> usize {
        self.radial_order
    }

    pub fn angular_order(&self) -> usize {
        self.angular_order
    }

    pub fn nodes(&self) -> &[DiskNode] {
        &self.nodes
    }

    /// Integrates `f` over the unit disk with the plain area measure.
    pub fn integrate<F: Fn(&DiskNode) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().map(|n| n.weight * f(n)).sum()
    }

    /// Complex-valued counterpart of [`integrate`](Self::integrate).
    pub fn integrate_complex<F: Fn(&DiskNode) -> Complex64>(&self, f: F) -> Complex64 {
        self.nodes
            .iter()
            .map(|n| f(n) * n.weight)
            .fold(Complex64::new(0.0, 0.0), |a, b| a + b)
    }

    /// Integrates with this rule and its refinement; errors if they
    /// disagree by more than `tolerance` in absolute value.
    pub fn integrate_checked<F: Fn(&DiskNode) -> f64>(
        &self,
        operation: &'static str,
        tolerance: f64,
        f: F,
    ) -> Result<f64> {
        let coarse = self.integrate(&f);
        let fine = self.refined().integrate(&f);
        let discrepancy = (coarse - fine).abs();
        if discrepancy > tolerance {
            return Err(Error::QuadratureNonconvergence {
                operation,
                discrepancy,
                tolerance,
            });
        }
        Ok(fine)
    }
}

/// Absolute tolerance used by the order-n vs order-2n self-checks.
pub const SELF_CHECK_TOL: f64 = 1e-10;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_five_point_reference() {
        // classical 5-point nodes/weights on [-1, 1]
        let rule = gauss_legendre_std(5);
        let x_ref = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683_1,
            0.0,
            0.538_469_310_105_683_1,
            0.906_179_845_938_664,
        ];
        let w_ref = [
            0.236_926_885_056_189_08,
            0.478_628_670_499_366_47,
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_47,
            0.236_926_885_056_189_08,
        ];
        for (i, &(x, w)) in rule.iter().enumerate() {
            assert_abs_diff_eq!(x, x_ref[i], epsilon = 1e-14);
            assert_abs_diff_eq!(w, w_ref[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        // an n-point rule is exact through degree 2n - 1
        for n in [2usize, 7, 16, 64] {
            let rule = gauss_legendre(n, 0.0, 1.0);
            for degree in 0..(2 * n).min(40) {
                let integral: f64 = rule
                    .iter()
                    .map(|&(x, w)| w * x.powi(degree as i32))
                    .sum();
                let exact = 1.0 / (degree as f64 + 1.0);
                assert_abs_diff_eq!(integral, exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn disk_rule_area_and_moments() {
        let rule = DiskRule::standard(64);
        assert_abs_diff_eq!(
            rule.integrate(|_| 1.0),
            std::f64::consts::PI,
            epsilon = 1e-12
        );
        // centroid vanishes by symmetry
        assert_abs_diff_eq!(rule.integrate(|n| n.x), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(rule.integrate(|n| n.y), 0.0, epsilon = 1e-13);
        // int u^2 d2u = pi/2
        assert_abs_diff_eq!(
            rule.integrate(|n| n.v),
            std::f64::consts::PI / 2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn disk_rule_oscillatory_self_check() {
        let rule = DiskRule::standard(64);
        let val = rule
            .integrate_checked("test oscillatory", SELF_CHECK_TOL, |n| {
                (2.0 * std::f64::consts::PI * (0.7 * n.x + 0.3 * n.y) + n.v).cos()
            })
            .unwrap();
        assert!(val.is_finite());
    }

    #[test]
    fn disk_rule_node_count() {
        let rule = DiskRule::new(8, 32);
        assert_eq!(rule.nodes().len(), 8 * 32);
        assert_eq!(rule.radial_order(), 8);
        assert_eq!(rule.angular_order(), 32);
    }
}
