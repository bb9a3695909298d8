//! Aperture geometry, pupil phase, and the two-source photon state.
//!
//! A photon emitted by either member of the pair carries the pupil phase
//! `Psi(u; l) = 2*pi*(l_x*u_x + l_y*u_y) + pi*l_z*u^2` across the unit
//! disk. The inner product of the two source states sets the eigenvalue
//! pair of the photon density operator, and aperture-weighted averages of
//! the phase gradient set the information bounds downstream.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{DiskNode, DiskRule, SELF_CHECK_TOL};

/// Dimensionless 3D pair semi-separation `(l_x, l_y, l_z)`.
///
/// Transverse components are in units of `sigma_0 = lambda * z_O / R` and
/// the axial component in units of `zeta_0 = lambda * z_O^2 / R^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationVector {
    pub l_x: f64,
    pub l_y: f64,
    pub l_z: f64,
}

impl SeparationVector {
    pub const fn new(l_x: f64, l_y: f64, l_z: f64) -> Self {
        Self { l_x, l_y, l_z }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    /// Transverse magnitude `l_perp = sqrt(l_x^2 + l_y^2)`.
    pub fn l_perp(&self) -> f64 {
        self.l_x.hypot(self.l_y)
    }

    /// Polar angle of the transverse separation.
    pub fn phi_l(&self) -> f64 {
        self.l_y.atan2(self.l_x)
    }

    pub fn norm(&self) -> f64 {
        (self.l_x * self.l_x + self.l_y * self.l_y + self.l_z * self.l_z).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.l_x, self.l_y, self.l_z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn is_finite(&self) -> bool {
        self.l_x.is_finite() && self.l_y.is_finite() && self.l_z.is_finite()
    }
}

impl fmt::Display for SeparationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.l_x, self.l_y, self.l_z)
    }
}

/// Pupil phase `Psi(u; l)` at a disk point given in Cartesian pupil
/// coordinates, with `v = u^2`.
pub fn phase_psi_xy(x: f64, y: f64, v: f64, l: SeparationVector) -> f64 {
    2.0 * PI * (l.l_x * x + l.l_y * y) + PI * l.l_z * v
}

/// Pupil phase at a disk point given in polar form `(u, phi)`.
pub fn phase_psi(u: f64, phi: f64, l: SeparationVector) -> f64 {
    let (s, c) = phi.sin_cos();
    phase_psi_xy(u * c, u * s, u * u, l)
}

/// Gradient of the pupil phase with respect to `(l_x, l_y, l_z)`; it does
/// not depend on the separation itself.
pub fn phase_gradient(node: &DiskNode) -> [f64; 3] {
    [2.0 * PI * node.x, 2.0 * PI * node.y, PI * node.v]
}

/// Aperture weight kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApertureKind {
    /// `|P(u)|^2 = 1/pi` on the unit disk (Airy point-spread function).
    ClearCircular,
    /// A user-supplied nonnegative weight, normalized to unit integral.
    GeneralWeighted,
}

struct ApertureNode {
    node: DiskNode,
    /// `|P(u)|^2` at the node.
    weight: f64,
    /// `P(u) = sqrt(|P(u)|^2)` for real nonnegative pupils.
    amplitude: f64,
}

/// Normalized pupil weight `|P(u)|^2` on the unit disk together with the
/// quadrature rule used to integrate against it.
///
/// Only real nonnegative pupil functions are represented; the amplitude
/// is recovered as the square root of the weight.
#[derive(Clone)]
pub struct ApertureModel {
    kind: ApertureKind,
    weight_fn: Arc<dyn Fn(&DiskNode) -> f64 + Send + Sync>,
    rule: DiskRule,
    nodes: Arc<Vec<ApertureNode>>,
}

impl fmt::Debug for ApertureModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ApertureModel")
            .field("kind", &self.kind)
            .field("radial_order", &self.rule.radial_order())
            .field("angular_order", &self.rule.angular_order())
            .finish()
    }
}

impl ApertureModel {
    /// Clear circular aperture with the given radial quadrature order
    /// (angular order is four times the radial order).
    pub fn clear_circular(radial_order: usize) -> Self {
        let weight_fn: Arc<dyn Fn(&DiskNode) -> f64 + Send + Sync> =
            Arc::new(|_| std::f64::consts::FRAC_1_PI);
        Self::build(ApertureKind::ClearCircular, weight_fn, DiskRule::standard(radial_order))
    }

    /// Clear circular aperture at the library default order (64 radial
    /// by 256 angular nodes).
    pub fn default_clear() -> Self {
        Self::clear_circular(64)
    }

    /// General weighted aperture. The supplied weight is `|P(u)|^2` up to
    /// scale; it is rescaled so its integral over the disk is exactly one
    /// under the constructed rule.
    pub fn general_weighted<F>(weight: F, radial_order: usize) -> Result<Self>
    where
        F: Fn(&DiskNode) -> f64 + Send + Sync + 'static,
    {
        let rule = DiskRule::standard(radial_order);
        let raw = Arc::new(weight);
        let norm = rule.integrate(|n| raw(n));
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Domain(format!(
                "aperture weight integral must be positive and finite, got {norm}"
            )));
        }
        for node in rule.nodes() {
            if raw(node) < 0.0 {
                return Err(Error::Domain(
                    "aperture weight must be nonnegative on the disk".into(),
                ));
            }
        }
        let weight_fn: Arc<dyn Fn(&DiskNode) -> f64 + Send + Sync> =
            Arc::new(move |n| raw(n) / norm);
        Ok(Self::build(ApertureKind::GeneralWeighted, weight_fn, rule))
    }

    fn build(
        kind: ApertureKind,
        weight_fn: Arc<dyn Fn(&DiskNode) -> f64 + Send + Sync>,
        rule: DiskRule,
    ) -> Self {
        let nodes = rule
            .nodes()
            .iter()
            .map(|&node| {
                let weight = weight_fn(&node);
                ApertureNode {
                    node,
                    weight,
                    amplitude: weight.sqrt(),
                }
            })
            .collect();
        Self {
            kind,
            weight_fn,
            rule,
            nodes: Arc::new(nodes),
        }
    }

    pub fn kind(&self) -> ApertureKind {
        self.kind
    }

    pub fn rule(&self) -> &DiskRule {
        &self.rule
    }

    pub fn radial_order(&self) -> usize {
        self.rule.radial_order()
    }

    /// Same aperture on a rule with both orders doubled.
    pub fn refined(&self) -> Self {
        Self::build(self.kind, Arc::clone(&self.weight_fn), self.rule.refined())
    }

    /// Weight `|P(u)|^2` at an arbitrary disk point.
    pub fn weight_at(&self, node: &DiskNode) -> f64 {
        (self.weight_fn)(node)
    }

    /// Unweighted integral of `f` over the disk (plain area measure).
    pub fn integrate_plain<F: Fn(&DiskNode) -> f64>(&self, f: F) -> f64 {
        self.rule.integrate(f)
    }

    /// Weighted average `int f(u) |P(u)|^2 d2u` without a self-check.
    pub fn average_unchecked<F: Fn(&DiskNode) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .map(|an| an.node.weight * an.weight * f(&an.node))
            .sum()
    }

    /// Weighted average with an order-n vs order-2n self-check.
    pub fn average<F: Fn(&DiskNode) -> f64>(&self, f: F) -> Result<f64> {
        let coarse = self.average_unchecked(&f);
        let fine = self.refined().average_unchecked(&f);
        let discrepancy = (coarse - fine).abs();
        if discrepancy > SELF_CHECK_TOL {
            return Err(Error::QuadratureNonconvergence {
                operation: "aperture_average",
                discrepancy,
                tolerance: SELF_CHECK_TOL,
            });
        }
        Ok(fine)
    }

    /// Weighted complex integral `int f(u) |P(u)|^2 d2u`, unchecked.
    pub fn average_complex_unchecked<F: Fn(&DiskNode) -> Complex64>(&self, f: F) -> Complex64 {
        self.nodes
            .iter()
            .map(|an| f(&an.node) * (an.node.weight * an.weight))
            .fold(Complex64::new(0.0, 0.0), |a, b| a + b)
    }

    /// Integral `int P(u) g(u) d2u` against the pupil amplitude,
    /// unchecked; `g` may be complex.
    pub fn amplitude_integral<F: Fn(&DiskNode) -> Complex64>(&self, g: F) -> Complex64 {
        self.nodes
            .iter()
            .map(|an| g(&an.node) * (an.node.weight * an.amplitude))
            .fold(Complex64::new(0.0, 0.0), |a, b| a + b)
    }

    /// Real-valued integral against the pupil amplitude, unchecked.
    pub fn amplitude_integral_real<F: Fn(&DiskNode) -> f64>(&self, g: F) -> f64 {
        self.nodes
            .iter()
            .map(|an| an.node.weight * an.amplitude * g(&an.node))
            .sum()
    }

    /// Checks `int |P|^2 d2u = 1` on the held rule.
    pub fn verify_normalization(&self, tolerance: f64) -> Result<()> {
        let total = self.average_unchecked(|_| 1.0);
        if (total - 1.0).abs() > tolerance {
            return Err(Error::Domain(format!(
                "aperture weight integrates to {total}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Overlap `Delta = <K_-|K_+>` rendered real nonnegative, together with
/// the phase constant that does so.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapDelta {
    /// `|<K_-|K_+>|`, in `[0, 1]`.
    pub delta: f64,
    /// Phase constant `phi_0` in `(-pi/2, pi/2]`; zero whenever the raw
    /// overlap integral is already real nonnegative.
    pub phase_constant: f64,
}

/// Computes `D = int |P(u)|^2 exp(-2i Psi(u; l)) d2u` and returns
/// `delta = |D|` with the phase constant `phi_0 = -arg(D)/2`.
///
/// Self-checked against a doubled quadrature rule.
pub fn overlap_delta(l: SeparationVector, ap: &ApertureModel) -> Result<OverlapDelta> {
    let integrand = |n: &DiskNode| {
        Complex64::from_polar(1.0, -2.0 * phase_psi_xy(n.x, n.y, n.v, l))
    };
    let coarse = ap.average_complex_unchecked(integrand);
    let fine = ap.refined().average_complex_unchecked(integrand);
    let discrepancy = (coarse - fine).norm();
    if discrepancy > SELF_CHECK_TOL {
        return Err(Error::QuadratureNonconvergence {
            operation: "overlap_delta",
            discrepancy,
            tolerance: SELF_CHECK_TOL,
        });
    }
    let delta = fine.norm();
    let arg = fine.im.atan2(fine.re);
    let mut phase_constant = if arg.abs() < 1e-14 && fine.re >= 0.0 {
        0.0
    } else {
        -0.5 * arg
    };
    // reduce to (-pi/2, pi/2]
    if phase_constant <= -FRAC_PI_2 {
        phase_constant += PI;
    }
    Ok(OverlapDelta {
        delta: delta.min(1.0),
        phase_constant,
    })
}

/// Eigenvalue pair `(1 +/- Delta)/2` of the two-source photon density
/// operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub delta: f64,
    pub e_plus: f64,
    pub e_minus: f64,
}

/// Eigen-decomposition of the pair state from the overlap `delta`.
pub fn eigen_decompose(delta: f64) -> Result<EigenPair> {
    const TOL: f64 = 1e-12;
    if !delta.is_finite() || delta < -TOL || delta > 1.0 + TOL {
        return Err(Error::Domain(format!(
            "overlap delta must lie in [0, 1], got {delta}"
        )));
    }
    let d = delta.clamp(0.0, 1.0);
    Ok(EigenPair {
        delta: d,
        e_plus: (1.0 + d) / 2.0,
        e_minus: (1.0 - d) / 2.0,
    })
}

/// Converts a physical separation (lengths) into the dimensionless
/// separation vector, given wavelength, centroid distance, and aperture
/// radius: `sigma_0 = lambda z_O / R`, `zeta_0 = lambda z_O^2 / R^2`.
pub fn normalize_separation(
    physical: [f64; 3],
    wavelength: f64,
    centroid_distance: f64,
    aperture_radius: f64,
) -> Result<SeparationVector> {
    if !(wavelength > 0.0 && centroid_distance > 0.0 && aperture_radius > 0.0) {
        return Err(Error::Domain(
            "wavelength, centroid distance, and aperture radius must be positive".into(),
        ));
    }
    let sigma0 = wavelength * centroid_distance / aperture_radius;
    let zeta0 = wavelength * centroid_distance * centroid_distance
        / (aperture_radius * aperture_radius);
    Ok(SeparationVector::new(
        physical[0] / sigma0,
        physical[1] / sigma0,
        physical[2] / zeta0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn clear() -> ApertureModel {
        ApertureModel::default_clear()
    }

    #[test]
    fn phase_direct_substitution() {
        // u = (0.5, 0), l = (0.1, 0, 0) -> pi/10
        let l = SeparationVector::new(0.1, 0.0, 0.0);
        assert_abs_diff_eq!(phase_psi(0.5, 0.0, l), PI / 10.0, epsilon = 1e-15);
        // zero separation
        assert_eq!(phase_psi(0.7, 1.3, SeparationVector::zero()), 0.0);
        // u^2 = 0.25, l = (0, 0, 1) -> pi/4
        let lz = SeparationVector::new(0.0, 0.0, 1.0);
        assert_abs_diff_eq!(phase_psi(0.5, 2.0, lz), PI / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn clear_aperture_moments() {
        let ap = clear();
        assert_abs_diff_eq!(ap.average(|n| n.v).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ap.average(|n| n.v * n.v).unwrap(), 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ap.average(|n| n.x * n.y).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ap.average(|n| n.x * n.x).unwrap(), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(ap.average(|n| n.x).unwrap(), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ap.average(|n| n.y).unwrap(), 0.0, epsilon = 1e-13);
        ap.verify_normalization(1e-12).unwrap();
    }

    #[test]
    fn overlap_identical_states() {
        let od = overlap_delta(SeparationVector::zero(), &clear()).unwrap();
        assert_abs_diff_eq!(od.delta, 1.0, epsilon = 1e-12);
        assert_eq!(od.phase_constant, 0.0);
    }

    #[test]
    fn overlap_axial_closed_form() {
        // |sin(pi l_z)| / (pi l_z); at l_z = 0.5 this is 2/pi
        let ap = clear();
        let od = overlap_delta(SeparationVector::new(0.0, 0.0, 0.5), &ap).unwrap();
        assert_abs_diff_eq!(od.delta, 2.0 / PI, epsilon = 1e-10);
        for lz in [0.25_f64, 0.8, 1.0] {
            let od = overlap_delta(SeparationVector::new(0.0, 0.0, lz), &ap).unwrap();
            let oracle = ((PI * lz).sin() / (PI * lz)).abs();
            assert_abs_diff_eq!(od.delta, oracle, epsilon = 1e-10);
        }
    }

    #[test]
    fn overlap_transverse_airy_closed_form() {
        // |2 J1(4 pi l_perp) / (4 pi l_perp)|; reference values from an
        // arbitrary-precision evaluator
        let ap = clear();
        for (lp, expected) in [
            (0.05, 0.95145707694414585),
            (0.1, 0.81517683099217881),
            (0.25, 0.18119175498741525),
        ] {
            let od = overlap_delta(SeparationVector::new(lp, 0.0, 0.0), &ap).unwrap();
            assert_abs_diff_eq!(od.delta, expected, epsilon = 1e-10);
            // pure transverse: raw overlap already real nonnegative below
            // the first Airy zero
            assert_eq!(od.phase_constant, 0.0);
        }
    }

    #[test]
    fn overlap_transverse_brute_force_2d() {
        // independent brute-force Cartesian midpoint quadrature
        let lp = 0.1;
        let n = 2000;
        let h = 2.0 / n as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for i in 0..n {
            let x = -1.0 + (i as f64 + 0.5) * h;
            for j in 0..n {
                let y = -1.0 + (j as f64 + 0.5) * h;
                if x * x + y * y <= 1.0 {
                    let psi = 2.0 * PI * lp * x;
                    re += (-2.0 * psi).cos();
                    im += (-2.0 * psi).sin();
                }
            }
        }
        let cell = h * h / PI;
        let brute = Complex64::new(re * cell, im * cell).norm();
        let od = overlap_delta(SeparationVector::new(lp, 0.0, 0.0), &clear()).unwrap();
        // midpoint rule over a jagged disk boundary is only ~1e-4 accurate
        assert_abs_diff_eq!(od.delta, brute, epsilon = 2e-4);
    }

    #[test]
    fn overlap_general_separation_reference() {
        // |D| and phi_0 at l = (0.1, 0.2, 0.3), frozen from an
        // arbitrary-precision quadrature
        let od = overlap_delta(SeparationVector::new(0.1, 0.2, 0.3), &clear()).unwrap();
        assert_abs_diff_eq!(od.delta, 0.29463431027583918, epsilon = 1e-10);
        assert_abs_diff_eq!(
            od.phase_constant,
            0.33467782411371513 / 2.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn eigen_decompose_formula() {
        let ep = eigen_decompose(0.0).unwrap();
        assert_eq!((ep.e_plus, ep.e_minus), (0.5, 0.5));
        let ep = eigen_decompose(1.0).unwrap();
        assert_eq!((ep.e_plus, ep.e_minus), (1.0, 0.0));
        let ep = eigen_decompose(0.5).unwrap();
        assert_eq!((ep.e_plus, ep.e_minus), (0.75, 0.25));
        assert!(eigen_decompose(1.1).is_err());
        assert!(eigen_decompose(-0.1).is_err());
        // within tolerance of the boundary is accepted and clamped
        assert_eq!(eigen_decompose(1.0 + 1e-13).unwrap().e_plus, 1.0);
    }

    #[test]
    fn normalize_separation_definition() {
        let lam = 500e-9;
        let z = 1.0;
        let r = 0.01;
        let sigma0 = lam * z / r;
        let zeta0 = lam * z * z / (r * r);
        let l = normalize_separation([sigma0, 0.0, 0.0], lam, z, r).unwrap();
        assert_abs_diff_eq!(l.l_x, 1.0, epsilon = 1e-12);
        let l = normalize_separation([0.0, 0.0, zeta0], lam, z, r).unwrap();
        assert_abs_diff_eq!(l.l_z, 1.0, epsilon = 1e-12);
        let l = normalize_separation([50e-6, 0.0, 0.0], lam, z, r).unwrap();
        assert_abs_diff_eq!(l.l_x, 1.0, epsilon = 1e-12);
        assert!(normalize_separation([0.0; 3], -1.0, z, r).is_err());
        assert!(normalize_separation([0.0; 3], lam, 0.0, r).is_err());
    }

    #[test]
    fn general_weighted_normalizes() {
        let ap = ApertureModel::general_weighted(|n| (-2.0 * n.v).exp(), 64).unwrap();
        ap.verify_normalization(1e-12).unwrap();
        assert_eq!(ap.kind(), ApertureKind::GeneralWeighted);
    }

    #[test]
    fn general_weighted_rejects_negative() {
        assert!(ApertureModel::general_weighted(|n| 0.5 - n.v, 32).is_err());
    }

    #[test]
    fn delta_monotone_in_transverse_separation() {
        // monotone nonincreasing on [0, first Airy zero ~ 0.3049]
        let ap = clear();
        let mut prev = f64::INFINITY;
        for i in 0..=30 {
            let lp = 0.30 * i as f64 / 30.0;
            let d = overlap_delta(SeparationVector::new(lp, 0.0, 0.0), &ap)
                .unwrap()
                .delta;
            assert!(d <= prev + 1e-12, "delta not monotone at l_perp = {lp}");
            prev = d;
        }
    }

    proptest! {
        #[test]
        fn overlap_inversion_symmetry(
            lx in -0.8f64..0.8, ly in -0.8f64..0.8, lz in -0.8f64..0.8
        ) {
            let ap = ApertureModel::clear_circular(32);
            let a = overlap_delta(SeparationVector::new(lx, ly, lz), &ap).unwrap();
            let b = overlap_delta(SeparationVector::new(-lx, -ly, -lz), &ap).unwrap();
            prop_assert!((a.delta - b.delta).abs() < 1e-12);
        }

        #[test]
        fn refinement_stability(lx in -1.0f64..1.0, lz in -1.0f64..1.0) {
            // doubling the rule changes delta by less than 1e-10 for |l| <= 1
            let l = SeparationVector::new(lx, 0.0, lz);
            if l.norm() <= 1.0 {
                let coarse = overlap_delta(l, &ApertureModel::clear_circular(64)).unwrap();
                let fine = overlap_delta(l, &ApertureModel::clear_circular(128)).unwrap();
                prop_assert!((coarse.delta - fine.delta).abs() < 1e-10);
            }
        }
    }
}
