//! Classical Fisher information of modal photon counting and the
//! Cramér-Rao bounds it implies.
//!
//! The information of a mode set is summed over every counting channel,
//! including the complement channel that collects photons missing all
//! measured modes. Truncation sweeps over the sine-cosine basis document
//! the convergence of the classical information to the quantum bound.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::bessel::bessel_j_sequence;
use crate::error::{Error, Result};
use crate::modal::{
    sincos_radial_nodes, small_l_probability_and_gradient, ExactModelCache, ModeId, ModeSet,
    ProbabilityModel,
};
use crate::optics::{ApertureModel, SeparationVector};
use crate::qfi::InfoMatrix;
use crate::quad::gauss_legendre;

/// Channels with probability below this threshold are handled by the
/// small-probability rule instead of the `(dP)^2 / P` quotient.
pub const SMALL_PROBABILITY: f64 = 1e-14;

/// How channel-probability derivatives are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    /// Differentiate under the integral sign (or the closed forms for the
    /// small-separation model).
    Analytic,
    /// Central finite differences with step `max(1e-5, 1e-3 |l|)` per
    /// coordinate, or an explicit override.
    CentralFd { step: Option<f64> },
}

/// Reference to a counting channel in a Fisher computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelRef {
    /// Index into the ordered mode set.
    Mode(usize),
    /// The complement channel.
    Complement,
}

/// Fisher matrix together with the small-probability bookkeeping.
#[derive(Debug, Clone)]
pub struct FisherOutcome {
    pub matrix: InfoMatrix,
    /// Channels below [`SMALL_PROBABILITY`] that contributed their known
    /// finite `(dP)^2 / P` limit.
    pub limit_channels: Vec<ChannelRef>,
    /// Channels below [`SMALL_PROBABILITY`] that were dropped as zero.
    pub dropped_channels: Vec<ChannelRef>,
}

struct ChannelData {
    p: f64,
    grad: [f64; 3],
    /// Amplitude gradients `(dC, dS)` when the exact model provides them;
    /// these carry the finite information limit of a vanishing channel.
    amp_grads: Option<([f64; 3], [f64; 3])>,
    /// Known closed-form limit of `(dP)^2 / P` for the small-separation
    /// matched filters.
    small_l_limit: Option<Matrix3<f64>>,
}

fn exact_channels(modes: &ModeSet, l: SeparationVector, ap: &ApertureModel) -> Vec<ChannelData> {
    let cache = ExactModelCache::new(modes, ap);
    cache
        .amplitudes(l)
        .iter()
        .map(|a| ChannelData {
            p: a.probability(),
            grad: a.probability_gradient(),
            amp_grads: Some((a.dc, a.ds)),
            small_l_limit: None,
        })
        .collect()
}

fn small_l_channels(modes: &ModeSet, l: SeparationVector) -> Result<Vec<ChannelData>> {
    modes
        .iter()
        .map(|mode| {
            let idx = match *mode {
                ModeId::Zernike(n) => n,
                ModeId::SinCos { .. } => {
                    return Err(Error::Domain(
                        "the small-separation model is defined for the Zernike set only".into(),
                    ))
                }
            };
            let (p, grad, _) = small_l_probability_and_gradient(idx, l);
            let limit = match idx {
                2 => Some(Matrix3::from_diagonal(&Vector3::new(
                    4.0 * PI * PI,
                    0.0,
                    0.0,
                ))),
                3 => Some(Matrix3::from_diagonal(&Vector3::new(
                    0.0,
                    4.0 * PI * PI,
                    0.0,
                ))),
                4 => Some(Matrix3::from_diagonal(&Vector3::new(
                    0.0,
                    0.0,
                    PI * PI / 3.0,
                ))),
                _ => None,
            };
            Ok(ChannelData {
                p,
                grad,
                amp_grads: None,
                small_l_limit: limit,
            })
        })
        .collect()
}

fn model_probabilities(
    modes: &ModeSet,
    l: SeparationVector,
    ap: &ApertureModel,
    model: ProbabilityModel,
) -> Result<Vec<f64>> {
    match model {
        ProbabilityModel::Exact => Ok(ExactModelCache::new(modes, ap).probabilities(l)),
        ProbabilityModel::SmallL => modes
            .iter()
            .map(|mode| match *mode {
                ModeId::Zernike(n) => Ok(small_l_probability_and_gradient(n, l).0),
                ModeId::SinCos { .. } => Err(Error::Domain(
                    "the small-separation model is defined for the Zernike set only".into(),
                )),
            })
            .collect(),
    }
}

/// Classical Fisher information matrix of photon counting over `modes`
/// plus the complement channel:
/// `J_{mu nu} = sum_k (d_mu P_k)(d_nu P_k) / P_k`.
pub fn fisher_matrix(
    modes: &ModeSet,
    l: SeparationVector,
    ap: &ApertureModel,
    model: ProbabilityModel,
    deriv: DerivativeMode,
) -> Result<FisherOutcome> {
    let mut channels = match model {
        ProbabilityModel::Exact => exact_channels(modes, l, ap),
        ProbabilityModel::SmallL => small_l_channels(modes, l)?,
    };

    if let DerivativeMode::CentralFd { step } = deriv {
        let h = step.unwrap_or_else(|| (1e-3 * l.norm()).max(1e-5));
        for mu in 0..3 {
            let mut fwd = l.as_array();
            let mut bwd = l.as_array();
            fwd[mu] += h;
            bwd[mu] -= h;
            let pf = model_probabilities(modes, SeparationVector::from_array(fwd), ap, model)?;
            let pb = model_probabilities(modes, SeparationVector::from_array(bwd), ap, model)?;
            for (k, ch) in channels.iter_mut().enumerate() {
                ch.grad[mu] = (pf[k] - pb[k]) / (2.0 * h);
            }
        }
        // finite differences carry no amplitude-level information
        for ch in channels.iter_mut() {
            ch.amp_grads = None;
            ch.small_l_limit = None;
        }
    }

    // complement channel closes the distribution
    let p_sum: f64 = channels.iter().map(|c| c.p).sum();
    let mut grad_sum = [0.0; 3];
    for ch in &channels {
        for mu in 0..3 {
            grad_sum[mu] += ch.grad[mu];
        }
    }
    channels.push(ChannelData {
        p: (1.0 - p_sum).max(0.0),
        grad: [-grad_sum[0], -grad_sum[1], -grad_sum[2]],
        amp_grads: None,
        small_l_limit: None,
    });

    let mut j = Matrix3::zeros();
    let mut limit_channels = Vec::new();
    let mut dropped_channels = Vec::new();
    let n_modes = channels.len() - 1;
    for (k, ch) in channels.iter().enumerate() {
        let reference = if k < n_modes {
            ChannelRef::Mode(k)
        } else {
            ChannelRef::Complement
        };
        if ch.p >= SMALL_PROBABILITY {
            let g = Vector3::from_column_slice(&ch.grad);
            j += g * g.transpose() / ch.p;
        } else if let Some((dc, ds)) = ch.amp_grads {
            // vanishing channel whose amplitudes go to zero linearly:
            // (dP)^2 / P -> 4 (dC dC^T + dS dS^T)
            let dc = Vector3::from_column_slice(&dc);
            let ds = Vector3::from_column_slice(&ds);
            j += 4.0 * (dc * dc.transpose() + ds * ds.transpose());
            limit_channels.push(reference);
        } else if let Some(limit) = ch.small_l_limit {
            j += limit;
            limit_channels.push(reference);
        } else {
            dropped_channels.push(reference);
        }
    }

    Ok(FisherOutcome {
        matrix: InfoMatrix::from_matrix(j),
        limit_channels,
        dropped_channels,
    })
}

/// Cramér-Rao bound derived from an information matrix.
#[derive(Debug, Clone)]
pub struct CrbResult {
    pub fisher: InfoMatrix,
    /// Full inverse, or the pseudo-inverse when singular.
    pub crb: Matrix3<f64>,
    /// Diagonal bound per coordinate; `+inf` marks a coordinate that the
    /// measurement does not constrain at all.
    pub per_coordinate: [f64; 3],
    /// Smallest Fisher eigenvalue.
    pub conditioning: f64,
    pub singular: bool,
}

impl CrbResult {
    /// Per-coordinate reciprocals `1 / J_{ii}`, the single-parameter
    /// bounds that ignore cross-coordinate uncertainty. Exposed alongside
    /// the joint (matrix-inverse) bound used everywhere else.
    pub fn per_coordinate_reciprocal(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, item) in out.iter_mut().enumerate() {
            let d = self.fisher.entry(i, i);
            *item = if d > SMALL_PROBABILITY {
                1.0 / d
            } else {
                f64::INFINITY
            };
        }
        out
    }
}

/// Inverts the information matrix: full inverse when the smallest
/// eigenvalue exceeds `1e-10 * trace`, otherwise a pseudo-inverse with
/// the singular flag set and `+inf` sentinels on unconstrained
/// coordinates. Degeneracy is data, not failure.
pub fn crb_from_fisher(fisher: &InfoMatrix) -> CrbResult {
    let sym = (fisher.as_matrix() + fisher.as_matrix().transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let min_eig = eig.eigenvalues.min();
    let threshold = 1e-10 * sym.trace().abs();
    let singular = min_eig <= threshold;

    let mut inv_diag = Vector3::zeros();
    for i in 0..3 {
        let lambda = eig.eigenvalues[i];
        inv_diag[i] = if lambda > threshold { 1.0 / lambda } else { 0.0 };
    }
    let crb = eig.eigenvectors * Matrix3::from_diagonal(&inv_diag) * eig.eigenvectors.transpose();

    let mut per_coordinate = [0.0; 3];
    for i in 0..3 {
        // null-space projection of the i-th coordinate axis
        let mut null_weight = 0.0;
        for k in 0..3 {
            if eig.eigenvalues[k] <= threshold {
                null_weight += eig.eigenvectors[(i, k)] * eig.eigenvectors[(i, k)];
            }
        }
        per_coordinate[i] = if null_weight > 1e-8 {
            f64::INFINITY
        } else {
            crb[(i, i)]
        };
    }

    CrbResult {
        fisher: *fisher,
        crb,
        per_coordinate,
        conditioning: min_eig,
        singular,
    }
}

/// One level of a transverse truncation sweep.
#[derive(Debug, Clone, Copy)]
pub struct TransverseFiLevel {
    /// Modes with both indices at or below this level are included.
    pub level: u32,
    /// Information of the truncated counting measurement, complement
    /// channel included.
    pub j_xx: f64,
    pub j_yy: f64,
    /// Bare sums `4 sum (d|<A|K+>|)^2` without the complement channel.
    pub j_xx_mode_sum: f64,
    pub j_yy_mode_sum: f64,
    /// Probability left outside the included modes.
    pub complement_probability: f64,
}

/// Transverse-separation Fisher information of the sine-cosine basis,
/// accumulated level by level up to `(m_max, n_max)`.
///
/// Valid for a purely transverse separation (`l_z = 0`, `phi_0 = 0`) on
/// the clear aperture, where every overlap reduces to a single radial
/// Bessel integral with an `l`-independent phase.
pub fn sincos_fi_transverse(
    l_perp: f64,
    phi_l: f64,
    m_max: u32,
    n_max: u32,
) -> Result<Vec<TransverseFiLevel>> {
    if !(l_perp > 0.0) {
        return Err(Error::Domain(format!(
            "transverse truncation sweep requires l_perp > 0, got {l_perp}"
        )));
    }
    let nodes = gauss_legendre(sincos_radial_nodes(m_max, l_perp), 0.0, 1.0);
    let n_nodes = nodes.len();

    // Bessel table J_n(2 pi l_perp sqrt(v_i)) for n = 0..=n_max+1
    let mut bessel = vec![vec![0.0; n_nodes]; n_max as usize + 2];
    for (i, &(v, _)) in nodes.iter().enumerate() {
        let seq = bessel_j_sequence(n_max as usize + 1, 2.0 * PI * l_perp * v.sqrt())?;
        for (n, &jn) in seq.iter().enumerate() {
            bessel[n][i] = jn;
        }
    }
    // radial trig tables
    let mut cos_mv = vec![vec![0.0; n_nodes]; m_max as usize + 1];
    let mut sin_mv = vec![vec![0.0; n_nodes]; m_max as usize + 1];
    for m in 0..=m_max as usize {
        for (i, &(v, _)) in nodes.iter().enumerate() {
            let (s, c) = (2.0 * PI * m as f64 * v).sin_cos();
            cos_mv[m][i] = c;
            sin_mv[m][i] = s;
        }
    }

    let radial_pair = |radial_cos: bool, m: usize, n: usize| -> (f64, f64) {
        // I = int trig(2 pi m v) J_n(2 pi l_perp sqrt v) dv and dI/dl_perp
        let trig = if radial_cos { &cos_mv[m] } else { &sin_mv[m] };
        let mut value = 0.0;
        let mut deriv = 0.0;
        for (i, &(v, w)) in nodes.iter().enumerate() {
            let t = trig[i];
            value += w * t * bessel[n][i];
            let jm = if n == 0 { -bessel[1][i] } else { bessel[n - 1][i] };
            let jprime = 0.5 * (jm - bessel[n + 1][i]);
            deriv += w * t * jprime * 2.0 * PI * v.sqrt();
        }
        (value, deriv)
    };

    let (sin_phi, cos_phi) = phi_l.sin_cos();
    let mut j_xx_ms = 0.0;
    let mut j_yy_ms = 0.0;
    let mut p_sum = 0.0;
    let mut dp_x = 0.0;
    let mut dp_y = 0.0;
    let mut out = Vec::with_capacity(m_max.max(n_max) as usize + 1);

    for level in 0..=m_max.max(n_max) {
        for family in crate::modal::SinCosFamily::ALL {
            let m_lo = if family.radial_cos() { 0 } else { 1 };
            let n_lo = if family.angular_cos() { 0 } else { 1 };
            for m in m_lo..=level.min(m_max) {
                for n in n_lo..=level.min(n_max) {
                    if m.max(n) != level {
                        continue; // already counted at a lower level
                    }
                    let cm: f64 = if m == 0 { 1.0 } else { 2.0 };
                    let cn: f64 = if n == 0 { 1.0 } else { 2.0 };
                    let (value, deriv) =
                        radial_pair(family.radial_cos(), m as usize, n as usize);
                    let nf = n as f64;
                    let (t, t_prime) = if family.angular_cos() {
                        ((nf * phi_l).cos(), -nf * (nf * phi_l).sin())
                    } else {
                        ((nf * phi_l).sin(), nf * (nf * phi_l).cos())
                    };
                    let norm = (cm * cn).sqrt();
                    let r = norm * t * value;
                    let dr_dlp = norm * t * deriv;
                    let dr_dphi = norm * t_prime * value;
                    let dx = cos_phi * dr_dlp - sin_phi * dr_dphi / l_perp;
                    let dy = sin_phi * dr_dlp + cos_phi * dr_dphi / l_perp;
                    j_xx_ms += 4.0 * dx * dx;
                    j_yy_ms += 4.0 * dy * dy;
                    p_sum += r * r;
                    dp_x += 2.0 * r * dx;
                    dp_y += 2.0 * r * dy;
                }
            }
        }
        let p_bar = (1.0 - p_sum).max(0.0);
        let (cx, cy) = if p_bar > SMALL_PROBABILITY {
            (dp_x * dp_x / p_bar, dp_y * dp_y / p_bar)
        } else {
            (0.0, 0.0)
        };
        out.push(TransverseFiLevel {
            level,
            j_xx: j_xx_ms + cx,
            j_yy: j_yy_ms + cy,
            j_xx_mode_sum: j_xx_ms,
            j_yy_mode_sum: j_yy_ms,
            complement_probability: p_bar,
        });
    }
    Ok(out)
}

/// One level of an axial truncation sweep.
#[derive(Debug, Clone, Copy)]
pub struct AxialFiLevel {
    /// Radial index cutoff; modes `CC_{m0}` and `SC_{m0}` with `m` at or
    /// below this level are included.
    pub level: u32,
    /// Information of the truncated counting measurement, complement
    /// channel included.
    pub j_zz: f64,
    /// Bare sum without the complement channel.
    pub j_zz_mode_sum: f64,
    pub complement_probability: f64,
}

/// Axial-separation Fisher information of the radial (`n = 0`)
/// sine-cosine modes, accumulated in the radial cutoff up to `m_max`.
///
/// Valid for a purely axial separation (`l_perp = 0`), where only the
/// angle-independent modes couple and every amplitude reduces to a real
/// symmetrized integral over `t = u^2 - 1/2`.
pub fn sincos_fi_axial(l_z: f64, m_max: u32) -> Result<Vec<AxialFiLevel>> {
    let nodes = gauss_legendre((64usize).max(8 * m_max as usize), -0.5, 0.5);

    let mut j_zz_ms = 0.0;
    let mut p_sum = 0.0;
    let mut dp_z = 0.0;
    let mut out = Vec::with_capacity(m_max as usize + 1);

    for m in 0..=m_max {
        let cm: f64 = if m == 0 { 1.0 } else { 2.0 };
        let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
        let two_pi_m = 2.0 * PI * m as f64;

        // CC_{m0}: r = sqrt(c_m) (-1)^m int cos(pi lz t) cos(2 pi m t) dt
        let mut r = 0.0;
        let mut dr = 0.0;
        for &(t, w) in &nodes {
            let c = (two_pi_m * t).cos();
            r += w * (PI * l_z * t).cos() * c;
            dr += w * (-PI * t) * (PI * l_z * t).sin() * c;
        }
        r *= cm.sqrt() * parity;
        dr *= cm.sqrt() * parity;
        j_zz_ms += 4.0 * dr * dr;
        p_sum += r * r;
        dp_z += 2.0 * r * dr;

        if m >= 1 {
            // SC_{m0}: r = -sqrt(c_m) (-1)^m int sin(pi lz t) sin(2 pi m t) dt
            let mut r = 0.0;
            let mut dr = 0.0;
            for &(t, w) in &nodes {
                let s = (two_pi_m * t).sin();
                r += w * (PI * l_z * t).sin() * s;
                dr += w * PI * t * (PI * l_z * t).cos() * s;
            }
            r *= -cm.sqrt() * parity;
            dr *= -cm.sqrt() * parity;
            j_zz_ms += 4.0 * dr * dr;
            p_sum += r * r;
            dp_z += 2.0 * r * dr;
        }

        let p_bar = (1.0 - p_sum).max(0.0);
        let complement = if p_bar > SMALL_PROBABILITY {
            dp_z * dp_z / p_bar
        } else {
            0.0
        };
        out.push(AxialFiLevel {
            level: m,
            j_zz: j_zz_ms + complement,
            j_zz_mode_sum: j_zz_ms,
            complement_probability: p_bar,
        });
    }
    Ok(out)
}
