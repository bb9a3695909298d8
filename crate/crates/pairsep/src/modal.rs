//! Mode bases on the unit disk and per-photon projection probabilities.
//!
//! Two families are provided: the first four Zernike modes (piston,
//! x-tilt, y-tilt, defocus), which act as matched filters for the small
//! separation coordinates, and the complete sine-cosine Fourier basis
//! `trig(2*pi*m*u^2) * trig(n*phi)` that attains the quantum bound for
//! purely transverse or purely axial separations.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::bessel::{bessel_j_sequence, MAX_ORDER};
use crate::error::{Error, Result};
use crate::optics::{overlap_delta, phase_psi_xy, ApertureModel, SeparationVector};
use crate::quad::{gauss_legendre, DiskNode};

/// Tolerance on the probability sum rule `sum(p) <= 1`.
pub const PROBABILITY_SUM_TOL: f64 = 1e-10;

/// The four trigonometric families of the sine-cosine basis, named by the
/// radial factor followed by the angular factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SinCosFamily {
    /// `cos(2 pi m u^2) cos(n phi)`, `m, n >= 0`
    CosCos,
    /// `cos(2 pi m u^2) sin(n phi)`, `m >= 0, n >= 1`
    CosSin,
    /// `sin(2 pi m u^2) cos(n phi)`, `m >= 1, n >= 0`
    SinCos,
    /// `sin(2 pi m u^2) sin(n phi)`, `m, n >= 1`
    SinSin,
}

impl SinCosFamily {
    pub const ALL: [SinCosFamily; 4] = [
        SinCosFamily::CosCos,
        SinCosFamily::CosSin,
        SinCosFamily::SinCos,
        SinCosFamily::SinSin,
    ];

    /// Radial factor is a cosine.
    pub fn radial_cos(self) -> bool {
        matches!(self, SinCosFamily::CosCos | SinCosFamily::CosSin)
    }

    /// Angular factor is a cosine.
    pub fn angular_cos(self) -> bool {
        matches!(self, SinCosFamily::CosCos | SinCosFamily::SinCos)
    }

    fn min_m(self) -> u32 {
        if self.radial_cos() {
            0
        } else {
            1
        }
    }

    fn min_n(self) -> u32 {
        if self.angular_cos() {
            0
        } else {
            1
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SinCosFamily::CosCos => "CC",
            SinCosFamily::CosSin => "CS",
            SinCosFamily::SinCos => "SC",
            SinCosFamily::SinSin => "SS",
        }
    }
}

/// Identifier of a single projection mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeId {
    /// Zernike mode `Z_n`, `n` in `1..=4`.
    Zernike(u8),
    /// Sine-cosine basis element.
    SinCos { family: SinCosFamily, m: u32, n: u32 },
}

impl ModeId {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModeId::Zernike(n) if (1..=4).contains(&n) => Ok(()),
            ModeId::Zernike(n) => Err(Error::InvalidMode(format!(
                "Zernike index {n} outside 1..=4"
            ))),
            ModeId::SinCos { family, m, n } => {
                if m < family.min_m() || n < family.min_n() {
                    Err(Error::InvalidMode(format!(
                        "{}({m},{n}) violates the index ranges of the family",
                        family.label()
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Mode value at a disk point given as `(x, y, v = u^2, phi)`.
    /// Assumes a validated index.
    pub(crate) fn eval_raw(&self, x: f64, y: f64, v: f64, phi: f64) -> f64 {
        match *self {
            ModeId::Zernike(1) => 1.0 / PI.sqrt(),
            ModeId::Zernike(2) => 2.0 / PI.sqrt() * x,
            ModeId::Zernike(3) => 2.0 / PI.sqrt() * y,
            ModeId::Zernike(4) => (3.0 / PI).sqrt() * (2.0 * v - 1.0),
            ModeId::Zernike(_) => f64::NAN,
            ModeId::SinCos { family, m, n } => {
                let cm = if m == 0 { 1.0 } else { 2.0 };
                let cn = if n == 0 { 1.0 } else { 2.0 };
                let radial_arg = 2.0 * PI * m as f64 * v;
                let radial = if family.radial_cos() {
                    radial_arg.cos()
                } else {
                    radial_arg.sin()
                };
                let angular = if family.angular_cos() {
                    (n as f64 * phi).cos()
                } else {
                    (n as f64 * phi).sin()
                };
                (cm * cn / PI).sqrt() * radial * angular
            }
        }
    }

    fn eval_node(&self, node: &DiskNode) -> f64 {
        self.eval_raw(node.x, node.y, node.v, node.phi)
    }

    pub fn label(&self) -> String {
        match *self {
            ModeId::Zernike(n) => format!("Z{n}"),
            ModeId::SinCos { family, m, n } => format!("{}{m}{n}", family.label()),
        }
    }
}

/// Zernike mode value (`n` in `1..=4`) at polar pupil point `(u, phi)`.
pub fn zernike_eval(n: u8, u: f64, phi: f64) -> Result<f64> {
    let mode = ModeId::Zernike(n);
    mode.validate()?;
    let (s, c) = phi.sin_cos();
    Ok(mode.eval_raw(u * c, u * s, u * u, phi))
}

/// Sine-cosine mode value at polar pupil point `(u, phi)`.
pub fn sincos_eval(family: SinCosFamily, m: u32, n: u32, u: f64, phi: f64) -> Result<f64> {
    let mode = ModeId::SinCos { family, m, n };
    mode.validate()?;
    let (s, c) = phi.sin_cos();
    Ok(mode.eval_raw(u * c, u * s, u * u, phi))
}

/// Ordered set of projection modes.
#[derive(Debug, Clone)]
pub struct ModeSet {
    modes: Vec<ModeId>,
}

impl ModeSet {
    pub fn new(modes: Vec<ModeId>) -> Result<Self> {
        for m in &modes {
            m.validate()?;
        }
        Ok(Self { modes })
    }

    /// The measurement of the Zernike protocol: `{Z1, Z2, Z3, Z4}`.
    pub fn zernike_first_four() -> Self {
        Self {
            modes: (1..=4).map(ModeId::Zernike).collect(),
        }
    }

    /// All sine-cosine modes with `m <= m_max` and `n <= n_max`, every
    /// family, in a fixed deterministic order.
    pub fn sincos_up_to(m_max: u32, n_max: u32) -> Self {
        let mut modes = Vec::new();
        for family in SinCosFamily::ALL {
            for m in family.min_m()..=m_max {
                for n in family.min_n()..=n_max {
                    modes.push(ModeId::SinCos { family, m, n });
                }
            }
        }
        Self { modes }
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ModeId> {
        self.modes.iter()
    }
}

/// Largest deviation from orthonormality, `max |<A|A'> - delta_AA'|`,
/// over all mode pairs, by quadrature with the plain disk measure.
pub fn orthonormality_residual(modes: &ModeSet, ap: &ApertureModel) -> Result<f64> {
    let rule = ap.rule();
    let values: Vec<Vec<f64>> = modes
        .iter()
        .map(|m| rule.nodes().iter().map(|n| m.eval_node(n)).collect())
        .collect();
    let weights: Vec<f64> = rule.nodes().iter().map(|n| n.weight).collect();
    let mut residual = 0.0_f64;
    for i in 0..values.len() {
        for j in i..values.len() {
            let overlap: f64 = weights
                .iter()
                .zip(values[i].iter().zip(values[j].iter()))
                .map(|(w, (a, b))| w * a * b)
                .sum();
            let target = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((overlap - target).abs());
        }
    }
    Ok(residual)
}

/// Which of the two conjugate source states an overlap refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Overlap `<A|K_sign> = int P(u) exp(sign * i(phi_0 - Psi)) A(u) d2u`
/// by 2D quadrature, with the phase constant fixed by [`overlap_delta`].
pub fn mode_overlap_amplitude(
    mode: &ModeId,
    l: SeparationVector,
    sign: Sign,
    ap: &ApertureModel,
) -> Result<Complex64> {
    mode.validate()?;
    let phi0 = overlap_delta(l, ap)?.phase_constant;
    let s = sign.value();
    Ok(ap.amplitude_integral(|n| {
        let psi = phase_psi_xy(n.x, n.y, n.v, l);
        Complex64::from_polar(mode.eval_node(n), s * (phi0 - psi))
    }))
}

/// Sine-cosine overlap with a transversely separated pair (`l_z = 0`,
/// `phi_0 = 0`), reduced to a single radial Bessel integral.
///
/// The complex amplitude factorizes as `value * exp(i * phase)` with a
/// real `value` and a constant phase fixed by `n mod 4`; the magnitudes
/// for the two signs coincide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseOverlap {
    /// Signed real factor `sqrt(c_m c_n) * trig(n phi_l) *
    /// int_0^1 trig(2 pi m v) J_n(2 pi l_perp sqrt(v)) dv`.
    pub value: f64,
    /// Constant phase, one of `0`, `pi/2`, `-pi/2`, `pi`.
    pub phase: f64,
}

impl TransverseOverlap {
    pub fn magnitude(&self) -> f64 {
        self.value.abs()
    }

    pub fn amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.value, self.phase)
    }
}

/// Radial Gauss-Legendre node count for the oscillatory sine-cosine
/// integrals.
pub(crate) fn sincos_radial_nodes(m: u32, l_perp: f64) -> usize {
    let osc = 8 * m as usize;
    let bessel = (4.0 * l_perp.ceil() * PI).ceil() as usize;
    (64usize).max(osc + bessel)
}

pub fn sincos_overlap_transverse(
    mode: &ModeId,
    l_perp: f64,
    phi_l: f64,
    sign: Sign,
) -> Result<TransverseOverlap> {
    mode.validate()?;
    let (family, m, n) = match *mode {
        ModeId::SinCos { family, m, n } => (family, m, n),
        ModeId::Zernike(_) => {
            return Err(Error::Domain(
                "transverse overlap reduction applies to sine-cosine modes only".into(),
            ))
        }
    };
    if !(l_perp >= 0.0) {
        return Err(Error::Domain(format!(
            "l_perp must be nonnegative, got {l_perp}"
        )));
    }
    if n as i64 > MAX_ORDER {
        return Err(Error::BesselRange {
            order: n as i64,
            argument: 2.0 * PI * l_perp,
        });
    }

    let rule = gauss_legendre(sincos_radial_nodes(m, l_perp), 0.0, 1.0);
    let mut integral = 0.0;
    for &(v, w) in &rule {
        let radial_arg = 2.0 * PI * m as f64 * v;
        let radial = if family.radial_cos() {
            radial_arg.cos()
        } else {
            radial_arg.sin()
        };
        let j = bessel_j_sequence(n as usize, 2.0 * PI * l_perp * v.sqrt())?[n as usize];
        integral += w * radial * j;
    }

    let cm: f64 = if m == 0 { 1.0 } else { 2.0 };
    let cn: f64 = if n == 0 { 1.0 } else { 2.0 };
    let angular = if family.angular_cos() {
        (n as f64 * phi_l).cos()
    } else {
        (n as f64 * phi_l).sin()
    };
    let value = (cm * cn).sqrt() * angular * integral;

    // (-i)^n for the plus sign, (+i)^n for the minus sign
    let phase = match (n % 4, sign) {
        (0, _) => 0.0,
        (1, Sign::Plus) => -FRAC_PI_2,
        (1, Sign::Minus) => FRAC_PI_2,
        (2, _) => PI,
        (3, Sign::Plus) => FRAC_PI_2,
        (3, Sign::Minus) => -FRAC_PI_2,
        _ => unreachable!(),
    };
    Ok(TransverseOverlap { value, phase })
}

/// Exact per-photon probability of projecting onto Zernike mode `n`:
/// `P_n = (int P Z_n cos Psi)^2 + (int P Z_n sin Psi)^2`.
pub fn zernike_probability_exact(n: u8, l: SeparationVector, ap: &ApertureModel) -> Result<f64> {
    let mode = ModeId::Zernike(n);
    mode.validate()?;
    let c = ap.amplitude_integral_real(|node| {
        mode.eval_node(node) * phase_psi_xy(node.x, node.y, node.v, l).cos()
    });
    let s = ap.amplitude_integral_real(|node| {
        mode.eval_node(node) * phase_psi_xy(node.x, node.y, node.v, l).sin()
    });
    Ok(c * c + s * s)
}

/// Leading-order small-separation probability, its gradient, and whether
/// the raw expression had to be clamped into `[0, 1]`. The gradient is
/// zeroed on a clamped channel.
pub(crate) fn small_l_probability_and_gradient(
    n: u8,
    l: SeparationVector,
) -> (f64, [f64; 3], bool) {
    let pi2 = PI * PI;
    let (raw, grad): (f64, [f64; 3]) = match n {
        1 => (
            1.0 - pi2 * (l.l_x * l.l_x + l.l_y * l.l_y + l.l_z * l.l_z / 12.0),
            [
                -2.0 * pi2 * l.l_x,
                -2.0 * pi2 * l.l_y,
                -pi2 * l.l_z / 6.0,
            ],
        ),
        2 => (pi2 * l.l_x * l.l_x, [2.0 * pi2 * l.l_x, 0.0, 0.0]),
        3 => (pi2 * l.l_y * l.l_y, [0.0, 2.0 * pi2 * l.l_y, 0.0]),
        4 => (
            pi2 * l.l_z * l.l_z / 12.0,
            [0.0, 0.0, pi2 * l.l_z / 6.0],
        ),
        _ => unreachable!("validated Zernike index"),
    };
    let clamped = !(0.0..=1.0).contains(&raw);
    (
        raw.clamp(0.0, 1.0),
        if clamped { [0.0; 3] } else { grad },
        clamped,
    )
}

/// Leading-order small-separation probabilities of the four Zernike
/// channels, clamped to `[0, 1]`. Intended for `|l|` up to roughly 0.3;
/// accuracy degrades quadratically beyond.
pub fn zernike_probability_small(n: u8, l: SeparationVector) -> Result<f64> {
    ModeId::Zernike(n).validate()?;
    Ok(small_l_probability_and_gradient(n, l).0)
}

/// Which probability expressions back the channel model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbabilityModel {
    /// Exact 2D quadrature of the projection integrals.
    Exact,
    /// Leading-order small-separation expansion (Zernike set only).
    SmallL,
}

impl ProbabilityModel {
    pub fn label(self) -> &'static str {
        match self {
            ProbabilityModel::Exact => "exact",
            ProbabilityModel::SmallL => "small-l",
        }
    }
}

/// Per-channel probabilities plus the complement channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProbabilities {
    /// Probabilities aligned with the ordered mode set.
    pub p: Vec<f64>,
    /// Complement probability of the remaining, unmeasured modes.
    pub p_bar: f64,
    /// Whether any small-separation expression had to be clamped.
    pub clamped: bool,
}

impl ChannelProbabilities {
    /// Verifies each entry lies in `[0, 1]` and the channel sum closes to
    /// one.
    pub fn validate(&self) -> Result<()> {
        for (i, &p) in self.p.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability(format!(
                    "channel {i} probability {p} outside [0, 1]"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.p_bar) {
            return Err(Error::InvalidProbability(format!(
                "complement probability {} outside [0, 1]",
                self.p_bar
            )));
        }
        let total: f64 = self.p.iter().sum::<f64>() + self.p_bar;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidProbability(format!(
                "channel probabilities sum to {total}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Assembles the per-channel probabilities of a mode set and the
/// complement channel. Errors if the mode probabilities sum beyond one,
/// which signals a non-orthonormal set or a quadrature failure.
pub fn channel_probabilities(
    modes: &ModeSet,
    l: SeparationVector,
    ap: &ApertureModel,
    model: ProbabilityModel,
) -> Result<ChannelProbabilities> {
    let (p, clamped) = match model {
        ProbabilityModel::Exact => {
            let cache = ExactModelCache::new(modes, ap);
            (cache.probabilities(l), false)
        }
        ProbabilityModel::SmallL => {
            let mut p = Vec::with_capacity(modes.len());
            let mut clamped = false;
            for mode in modes.iter() {
                let idx = match *mode {
                    ModeId::Zernike(n) => n,
                    ModeId::SinCos { .. } => {
                        return Err(Error::Domain(
                            "the small-separation model is defined for the Zernike set only"
                                .into(),
                        ))
                    }
                };
                let value = zernike_probability_small(idx, l)?;
                // detect clamping by recomputing the raw expression range
                if idx == 1 {
                    let pi2 = PI * PI;
                    let raw = 1.0
                        - pi2 * (l.l_x * l.l_x + l.l_y * l.l_y + l.l_z * l.l_z / 12.0);
                    if raw < 0.0 {
                        clamped = true;
                    }
                } else if value >= 1.0 {
                    clamped = true;
                }
                p.push(value);
            }
            (p, clamped)
        }
    };
    let sum: f64 = p.iter().sum();
    if sum > 1.0 + PROBABILITY_SUM_TOL {
        return Err(Error::ProbabilitySum {
            sum,
            tolerance: PROBABILITY_SUM_TOL,
        });
    }
    Ok(ChannelProbabilities {
        p,
        p_bar: (1.0 - sum).max(0.0),
        clamped,
    })
}

/// Projection amplitudes of one mode with their parameter gradients:
/// `c = int P A cos Psi`, `s = int P A sin Psi`, differentiated under the
/// integral sign.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ModeAmplitudes {
    pub c: f64,
    pub s: f64,
    pub dc: [f64; 3],
    pub ds: [f64; 3],
}

impl ModeAmplitudes {
    pub fn probability(&self) -> f64 {
        self.c * self.c + self.s * self.s
    }

    pub fn probability_gradient(&self) -> [f64; 3] {
        let mut g = [0.0; 3];
        for mu in 0..3 {
            g[mu] = 2.0 * self.c * self.dc[mu] + 2.0 * self.s * self.ds[mu];
        }
        g
    }
}

/// Precomputed quadrature tables for fast repeated evaluation of the
/// exact channel model at many separations (the maximum-likelihood hot
/// path).
pub(crate) struct ExactModelCache {
    // per node: position, v, and combined weight * pupil amplitude
    xs: Vec<f64>,
    ys: Vec<f64>,
    vs: Vec<f64>,
    w_amp: Vec<f64>,
    // mode-major node values
    mode_values: Vec<Vec<f64>>,
}

impl ExactModelCache {
    pub fn new(modes: &ModeSet, ap: &ApertureModel) -> Self {
        let nodes = ap.rule().nodes();
        let mut xs = Vec::with_capacity(nodes.len());
        let mut ys = Vec::with_capacity(nodes.len());
        let mut vs = Vec::with_capacity(nodes.len());
        let mut w_amp = Vec::with_capacity(nodes.len());
        for n in nodes {
            xs.push(n.x);
            ys.push(n.y);
            vs.push(n.v);
            w_amp.push(n.weight * ap.weight_at(n).sqrt());
        }
        let mode_values = modes
            .iter()
            .map(|m| nodes.iter().map(|n| m.eval_node(n)).collect())
            .collect();
        Self {
            xs,
            ys,
            vs,
            w_amp,
            mode_values,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.mode_values.len()
    }

    /// Amplitudes and gradients of every mode at the given separation.
    pub fn amplitudes(&self, l: SeparationVector) -> Vec<ModeAmplitudes> {
        let mut out = vec![
            ModeAmplitudes {
                c: 0.0,
                s: 0.0,
                dc: [0.0; 3],
                ds: [0.0; 3],
            };
            self.n_modes()
        ];
        let two_pi = 2.0 * PI;
        for i in 0..self.xs.len() {
            let (x, y, v, wa) = (self.xs[i], self.ys[i], self.vs[i], self.w_amp[i]);
            let psi = two_pi * (l.l_x * x + l.l_y * y) + PI * l.l_z * v;
            let (sin_psi, cos_psi) = psi.sin_cos();
            let g = [two_pi * x, two_pi * y, PI * v];
            for (k, amp) in out.iter_mut().enumerate() {
                let a = wa * self.mode_values[k][i];
                let ac = a * cos_psi;
                let as_ = a * sin_psi;
                amp.c += ac;
                amp.s += as_;
                for mu in 0..3 {
                    amp.dc[mu] -= as_ * g[mu];
                    amp.ds[mu] += ac * g[mu];
                }
            }
        }
        out
    }

    /// Channel probabilities only (no gradients), slightly cheaper.
    pub fn probabilities(&self, l: SeparationVector) -> Vec<f64> {
        let two_pi = 2.0 * PI;
        let mut cs = vec![(0.0_f64, 0.0_f64); self.n_modes()];
        for i in 0..self.xs.len() {
            let psi = two_pi * (l.l_x * self.xs[i] + l.l_y * self.ys[i]) + PI * l.l_z * self.vs[i];
            let (sin_psi, cos_psi) = psi.sin_cos();
            let wa = self.w_amp[i];
            for (k, acc) in cs.iter_mut().enumerate() {
                let a = wa * self.mode_values[k][i];
                acc.0 += a * cos_psi;
                acc.1 += a * sin_psi;
            }
        }
        cs.iter().map(|&(c, s)| c * c + s * s).collect()
    }
}
