//! Photon-counting simulation and maximum-likelihood estimation.
//!
//! Frames of `M` photons are drawn from the multinomial distribution over
//! the measured channels plus an undetected bucket, with quantum
//! efficiency folded in as compounded probabilities `eta * p_k`. The
//! estimator minimizes the multinomial negative log-likelihood over the
//! nonnegative octant through the squaring parametrization `l_i = t_i^2`.
//!
//! Reproducibility contract: frames are drawn from a counter-based
//! ChaCha8 stream whose key is the base seed and whose stream index is
//! the frame index, so parallel and serial runs agree bit for bit.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::modal::{
    small_l_probability_and_gradient, ChannelProbabilities, ExactModelCache, ModeId, ModeSet,
    ProbabilityModel,
};
use crate::optics::{ApertureModel, SeparationVector};
use crate::optim::{bfgs, nelder_mead, OptimOptions, OptimResult};

/// One multinomial realization of a counting frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CountsFrame {
    /// Detected counts per measured channel.
    pub counts: Vec<u64>,
    /// Photons that landed in no measured channel (complement modes plus
    /// quantum-efficiency losses).
    pub undetected: u64,
    /// Photons emitted into the frame.
    pub total_emitted: u64,
    /// Declared quantum efficiency in `(0, 1]`.
    pub efficiency: f64,
}

impl CountsFrame {
    pub fn detected(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn validate_efficiency(efficiency: f64) -> Result<()> {
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(Error::InvalidProbability(format!(
            "quantum efficiency must lie in (0, 1], got {efficiency}"
        )));
    }
    Ok(())
}

pub(crate) fn sample_frame_with_rng(
    photons: u64,
    probs: &ChannelProbabilities,
    efficiency: f64,
    rng: &mut ChaCha8Rng,
) -> Result<CountsFrame> {
    validate_efficiency(efficiency)?;
    probs.validate()?;
    for (i, &p) in probs.p.iter().enumerate() {
        let eff = efficiency * p;
        if !(0.0..=1.0).contains(&eff) {
            return Err(Error::InvalidProbability(format!(
                "effective probability {eff} of channel {i} outside [0, 1]"
            )));
        }
    }

    // sequential conditional binomial draws over (eta p_1, ..., eta p_N)
    let mut counts = Vec::with_capacity(probs.p.len());
    let mut remaining = photons;
    let mut remaining_prob = 1.0_f64;
    for &p in &probs.p {
        let eff = efficiency * p;
        let conditional = if remaining_prob > 0.0 {
            (eff / remaining_prob).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = if remaining == 0 || conditional <= 0.0 {
            0
        } else if conditional >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, conditional)
                .expect("validated binomial parameters")
                .sample(rng)
        };
        counts.push(draw);
        remaining -= draw;
        remaining_prob -= eff;
    }

    Ok(CountsFrame {
        counts,
        undetected: remaining,
        total_emitted: photons,
        efficiency,
    })
}

/// Draws one frame of `photons` photons; deterministic given the seed.
pub fn sample_frame(
    photons: u64,
    probs: &ChannelProbabilities,
    efficiency: f64,
    seed: u64,
) -> Result<CountsFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_frame_with_rng(photons, probs, efficiency, &mut rng)
}

/// Precomputed state for repeated likelihood evaluations against one
/// measurement geometry.
pub(crate) struct LikelihoodModel<'a> {
    modes: &'a ModeSet,
    model: ProbabilityModel,
    cache: Option<ExactModelCache>,
}

impl<'a> LikelihoodModel<'a> {
    pub fn new(modes: &'a ModeSet, model: ProbabilityModel, ap: &ApertureModel) -> Self {
        let cache = match model {
            ProbabilityModel::Exact => Some(ExactModelCache::new(modes, ap)),
            ProbabilityModel::SmallL => None,
        };
        Self {
            modes,
            model,
            cache,
        }
    }

    fn channel_probs_and_grads(&self, l: SeparationVector) -> Result<(Vec<f64>, Vec<[f64; 3]>)> {
        match self.model {
            ProbabilityModel::Exact => {
                let amps = self.cache.as_ref().unwrap().amplitudes(l);
                Ok((
                    amps.iter().map(|a| a.probability()).collect(),
                    amps.iter().map(|a| a.probability_gradient()).collect(),
                ))
            }
            ProbabilityModel::SmallL => {
                let mut p = Vec::with_capacity(self.modes.len());
                let mut g = Vec::with_capacity(self.modes.len());
                for mode in self.modes.iter() {
                    let idx = match *mode {
                        ModeId::Zernike(n) => n,
                        ModeId::SinCos { .. } => {
                            return Err(Error::Domain(
                                "the small-separation model is defined for the Zernike set only"
                                    .into(),
                            ))
                        }
                    };
                    let (pi, gi, _) = small_l_probability_and_gradient(idx, l);
                    p.push(pi);
                    g.push(gi);
                }
                Ok((p, g))
            }
        }
    }

    /// Negative log-likelihood; `+inf` sentinel when a channel with
    /// nonzero counts has nonpositive model probability.
    pub fn nll(&self, frame: &CountsFrame, l: SeparationVector) -> Result<f64> {
        let (p, _) = self.channel_probs_and_grads(l)?;
        Ok(Self::assemble_nll(frame, &p).0)
    }

    pub fn nll_and_gradient(
        &self,
        frame: &CountsFrame,
        l: SeparationVector,
    ) -> Result<(f64, [f64; 3])> {
        let (p, g) = self.channel_probs_and_grads(l)?;
        let (nll, finite) = Self::assemble_nll(frame, &p);
        if !finite {
            return Ok((f64::INFINITY, [0.0; 3]));
        }
        let p_bar: f64 = (1.0 - p.iter().sum::<f64>()).max(0.0);
        let mut grad = [0.0; 3];
        for (k, (&pk, gk)) in p.iter().zip(g.iter()).enumerate() {
            let m = frame.counts[k] as f64;
            if m > 0.0 {
                for mu in 0..3 {
                    grad[mu] -= m * gk[mu] / pk;
                }
            }
        }
        if frame.undetected > 0 {
            let mut gbar = [0.0; 3];
            for gk in &g {
                for mu in 0..3 {
                    gbar[mu] -= gk[mu];
                }
            }
            let m = frame.undetected as f64;
            for mu in 0..3 {
                grad[mu] -= m * gbar[mu] / p_bar;
            }
        }
        Ok((nll, grad))
    }

    fn assemble_nll(frame: &CountsFrame, p: &[f64]) -> (f64, bool) {
        let mut nll = 0.0;
        for (k, &pk) in p.iter().enumerate() {
            let m = frame.counts[k] as f64;
            if m > 0.0 {
                if pk <= 0.0 {
                    return (f64::INFINITY, false);
                }
                nll -= m * pk.ln();
            }
        }
        if frame.undetected > 0 {
            let p_bar = (1.0 - p.iter().sum::<f64>()).max(0.0);
            if p_bar <= 0.0 {
                return (f64::INFINITY, false);
            }
            nll -= frame.undetected as f64 * p_bar.ln();
        }
        (nll, true)
    }
}

/// Multinomial negative log-likelihood of a frame at separation `l`,
/// `-sum_k m_k ln P_k(l) - mbar ln Pbar(l)`.
///
/// The combinatorial factor `M! / (mbar! prod m_k!)` and the
/// quantum-efficiency factor of the likelihood are omitted: both are
/// independent of `l`, so they shift the value without moving the
/// minimizer. The declared frame efficiency therefore never enters, and
/// the estimate is efficiency-independent by construction.
pub fn neg_log_likelihood(
    frame: &CountsFrame,
    modes: &ModeSet,
    l: SeparationVector,
    model: ProbabilityModel,
    ap: &ApertureModel,
) -> Result<f64> {
    if frame.counts.len() != modes.len() {
        return Err(Error::Domain(format!(
            "frame has {} channels but the mode set has {}",
            frame.counts.len(),
            modes.len()
        )));
    }
    LikelihoodModel::new(modes, model, ap).nll(frame, l)
}

/// Estimator controls.
#[derive(Debug, Clone)]
pub struct MlOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub step_tolerance: f64,
    /// Additional starting points; the best final likelihood wins.
    pub extra_starts: Vec<SeparationVector>,
}

impl Default for MlOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gradient_tolerance: 1e-8,
            step_tolerance: 1e-10,
            extra_starts: Vec::new(),
        }
    }
}

/// Maximum-likelihood estimate of the separation vector.
#[derive(Debug, Clone, Copy)]
pub struct EstimationResult {
    /// Estimate in the nonnegative octant.
    pub l_hat: SeparationVector,
    pub nll_at_optimum: f64,
    pub converged: bool,
    pub iterations: usize,
    pub init: SeparationVector,
    /// Whether the Nelder-Mead restart was needed.
    pub used_fallback: bool,
}

fn estimate_single_start(
    model: &LikelihoodModel<'_>,
    frame: &CountsFrame,
    init: SeparationVector,
    opts: &MlOptions,
) -> Result<EstimationResult> {
    // octant restriction by squaring: l_i = t_i^2 leaves the optimizer
    // unconstrained and makes boundary optima stationary
    let t0 = [init.l_x.sqrt(), init.l_y.sqrt(), init.l_z.sqrt()];
    let to_l = |t: &[f64; 3]| SeparationVector::new(t[0] * t[0], t[1] * t[1], t[2] * t[2]);

    let objective = |t: &[f64; 3]| -> f64 { model.nll(frame, to_l(t)).unwrap_or(f64::INFINITY) };
    let gradient = |t: &[f64; 3]| -> [f64; 3] {
        match model.nll_and_gradient(frame, to_l(t)) {
            Ok((_, g)) => [g[0] * 2.0 * t[0], g[1] * 2.0 * t[1], g[2] * 2.0 * t[2]],
            Err(_) => [0.0; 3],
        }
    };

    let optim_opts = OptimOptions {
        gradient_tolerance: opts.gradient_tolerance,
        step_tolerance: opts.step_tolerance,
        max_iterations: opts.max_iterations,
    };
    let mut used_fallback = false;
    let mut result: OptimResult = bfgs(objective, gradient, t0, &optim_opts);
    if result.line_search_failed {
        used_fallback = true;
        let fallback = nelder_mead(objective, t0, 0.1, &optim_opts);
        let better = if fallback.value < result.value {
            fallback
        } else {
            result
        };
        // honest convergence: re-check the gradient at the final point
        let g = gradient(&better.x);
        let gnorm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        result = OptimResult {
            converged: gnorm < opts.gradient_tolerance,
            iterations: result.iterations + fallback.iterations,
            ..better
        };
    }

    Ok(EstimationResult {
        l_hat: to_l(&result.x),
        nll_at_optimum: result.value,
        converged: result.converged,
        iterations: result.iterations,
        init,
        used_fallback,
    })
}

/// Maximum-likelihood estimation over the nonnegative octant, started
/// from `init`. Non-convergence is flagged in the result, never silent.
pub fn ml_estimate(
    frame: &CountsFrame,
    modes: &ModeSet,
    init: SeparationVector,
    model: ProbabilityModel,
    ap: &ApertureModel,
    opts: &MlOptions,
) -> Result<EstimationResult> {
    if frame.counts.len() != modes.len() {
        return Err(Error::Domain(format!(
            "frame has {} channels but the mode set has {}",
            frame.counts.len(),
            modes.len()
        )));
    }
    if !(init.l_x >= 0.0 && init.l_y >= 0.0 && init.l_z >= 0.0) {
        return Err(Error::Domain(format!(
            "initial guess must lie in the nonnegative octant, got {init}"
        )));
    }
    let likelihood = LikelihoodModel::new(modes, model, ap);
    let mut best = estimate_single_start(&likelihood, frame, init, opts)?;
    for &start in &opts.extra_starts {
        let candidate = estimate_single_start(&likelihood, frame, start, opts)?;
        if candidate.nll_at_optimum < best.nll_at_optimum {
            best = candidate;
        }
    }
    Ok(best)
}

/// Batch configuration for repeated frames at a fixed truth.
#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub l_true: SeparationVector,
    pub photons_per_frame: u64,
    pub frames: u32,
    pub base_seed: u64,
    pub efficiency: f64,
    /// Starting point of every estimation; the protocol default is
    /// `(1/4, 1/4, 1/4)`.
    pub init: SeparationVector,
    pub model: ProbabilityModel,
}

impl BatchConfig {
    pub fn new(l_true: SeparationVector) -> Self {
        Self {
            l_true,
            photons_per_frame: 100_000,
            frames: 500,
            base_seed: 0,
            efficiency: 1.0,
            init: SeparationVector::new(0.25, 0.25, 0.25),
            model: ProbabilityModel::Exact,
        }
    }
}

/// Sample statistics of a batch of maximum-likelihood estimates.
#[derive(Debug, Clone, Copy)]
pub struct BatchEstimate {
    pub mean: [f64; 3],
    /// Unbiased sample variance per coordinate.
    pub sample_variance: [f64; 3],
    /// `mean - truth`.
    pub bias: [f64; 3],
    /// `sample_variance * photons_per_frame`, comparable with the
    /// per-photon Cramér-Rao bound.
    pub per_photon_variance: [f64; 3],
    pub non_converged: u32,
    pub frames: u32,
    pub photons_per_frame: u64,
}

/// Draws `frames` independent frames (stream = frame index) and runs the
/// estimator on each; deterministic for a fixed `(base_seed, config)`
/// regardless of thread count.
pub fn batch_estimate(
    cfg: &BatchConfig,
    modes: &ModeSet,
    ap: &ApertureModel,
    opts: &MlOptions,
) -> Result<BatchEstimate> {
    if cfg.frames < 2 {
        return Err(Error::Domain(
            "batch estimation needs at least two frames".into(),
        ));
    }
    let probs = crate::modal::channel_probabilities(modes, cfg.l_true, ap, cfg.model)?;
    let likelihood = LikelihoodModel::new(modes, cfg.model, ap);

    let results: Vec<EstimationResult> = (0..cfg.frames)
        .into_par_iter()
        .map(|frame_index| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.base_seed);
            rng.set_stream(frame_index as u64);
            let frame =
                sample_frame_with_rng(cfg.photons_per_frame, &probs, cfg.efficiency, &mut rng)?;
            estimate_single_start(&likelihood, &frame, cfg.init, opts)
        })
        .collect::<Result<Vec<_>>>()?;

    let n = results.len() as f64;
    let mut mean = [0.0; 3];
    for r in &results {
        let a = r.l_hat.as_array();
        for d in 0..3 {
            mean[d] += a[d] / n;
        }
    }
    let mut variance = [0.0; 3];
    for r in &results {
        let a = r.l_hat.as_array();
        for d in 0..3 {
            variance[d] += (a[d] - mean[d]) * (a[d] - mean[d]) / (n - 1.0);
        }
    }
    let truth = cfg.l_true.as_array();
    let mut bias = [0.0; 3];
    let mut per_photon = [0.0; 3];
    for d in 0..3 {
        bias[d] = mean[d] - truth[d];
        per_photon[d] = variance[d] * cfg.photons_per_frame as f64;
    }
    Ok(BatchEstimate {
        mean,
        sample_variance: variance,
        bias,
        per_photon_variance: per_photon,
        non_converged: results.iter().filter(|r| !r.converged).count() as u32,
        frames: cfg.frames,
        photons_per_frame: cfg.photons_per_frame,
    })
}

/// Per-frame generator of the reproducibility contract; for callers that
/// need the identical stream outside of [`batch_estimate`].
pub fn frame_rng(base_seed: u64, frame_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(frame_index);
    rng
}

/// Convenience draw of one uniform value from a frame stream.
pub fn frame_uniform(base_seed: u64, frame_index: u64) -> f64 {
    frame_rng(base_seed, frame_index).gen::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modal::channel_probabilities;
    use approx::assert_abs_diff_eq;

    fn clear() -> ApertureModel {
        ApertureModel::default_clear()
    }

    fn zern() -> ModeSet {
        ModeSet::zernike_first_four()
    }

    fn probs_at(l: SeparationVector) -> ChannelProbabilities {
        channel_probabilities(&zern(), l, &clear(), ProbabilityModel::Exact).unwrap()
    }

    #[test]
    fn zero_photons_gives_zero_frame() {
        let probs = probs_at(SeparationVector::new(0.25, 0.25, 0.25));
        let frame = sample_frame(0, &probs, 1.0, 7).unwrap();
        assert_eq!(frame.detected(), 0);
        assert_eq!(frame.undetected, 0);
    }

    #[test]
    fn degenerate_distribution_fills_first_channel() {
        let probs = ChannelProbabilities {
            p: vec![1.0, 0.0, 0.0, 0.0],
            p_bar: 0.0,
            clamped: false,
        };
        let frame = sample_frame(100, &probs, 1.0, 3).unwrap();
        assert_eq!(frame.counts[0], 100);
        assert_eq!(frame.undetected, 0);
    }

    #[test]
    fn counts_conserve_photons() {
        let probs = probs_at(SeparationVector::new(0.25, 0.25, 0.25));
        for seed in 0..20 {
            let frame = sample_frame(10_000, &probs, 1.0, seed).unwrap();
            assert_eq!(frame.detected() + frame.undetected, 10_000);
        }
    }

    #[test]
    fn efficiency_shifts_counts_to_undetected() {
        let probs = probs_at(SeparationVector::new(0.25, 0.25, 0.25));
        let full = sample_frame(200_000, &probs, 1.0, 11).unwrap();
        let half = sample_frame(200_000, &probs, 0.5, 11).unwrap();
        let ratio = half.detected() as f64 / full.detected() as f64;
        assert!((ratio - 0.5).abs() < 0.02, "ratio {ratio}");
        assert!(sample_frame(10, &probs, 0.0, 1).is_err());
        assert!(sample_frame(10, &probs, 1.5, 1).is_err());
    }

    #[test]
    fn sampler_is_deterministic() {
        let probs = probs_at(SeparationVector::new(0.2, 0.1, 0.3));
        let a = sample_frame(50_000, &probs, 1.0, 99).unwrap();
        let b = sample_frame(50_000, &probs, 1.0, 99).unwrap();
        assert_eq!(a, b);
        let c = sample_frame(50_000, &probs, 1.0, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sampler_marginals_within_binomial_bands() {
        // empirical channel means over many frames stay within 5 sigma
        let l = SeparationVector::new(0.25, 0.25, 0.25);
        let probs = probs_at(l);
        let m = 10_000u64;
        let frames = 1_000u64;
        let mut sums = vec![0.0; probs.p.len()];
        for i in 0..frames {
            let mut rng = frame_rng(2024, i);
            let frame = sample_frame_with_rng(m, &probs, 1.0, &mut rng).unwrap();
            for (k, &c) in frame.counts.iter().enumerate() {
                sums[k] += c as f64;
            }
        }
        for (k, &p) in probs.p.iter().enumerate() {
            let mean = sums[k] / frames as f64;
            let expected = m as f64 * p;
            let sigma_mean = (m as f64 * p * (1.0 - p) / frames as f64).sqrt();
            let pull = (mean - expected).abs() / sigma_mean;
            assert!(pull < 5.0, "channel {k}: pull {pull:.2}");
        }
    }

    #[test]
    fn nll_zero_at_perfect_first_channel() {
        let frame = CountsFrame {
            counts: vec![1000, 0, 0, 0],
            undetected: 0,
            total_emitted: 1000,
            efficiency: 1.0,
        };
        let nll = neg_log_likelihood(
            &frame,
            &zern(),
            SeparationVector::zero(),
            ProbabilityModel::Exact,
            &clear(),
        )
        .unwrap();
        // P1(0) = 1 up to quadrature roundoff
        assert_abs_diff_eq!(nll, 0.0, epsilon = 1e-7);
    }

    #[test]
    fn nll_infinite_on_zero_probability_with_counts() {
        // the small-separation model gives P4 = 0 exactly at l_z = 0
        let frame = CountsFrame {
            counts: vec![10, 0, 0, 5],
            undetected: 0,
            total_emitted: 15,
            efficiency: 1.0,
        };
        let nll = neg_log_likelihood(
            &frame,
            &zern(),
            SeparationVector::new(0.1, 0.0, 0.0),
            ProbabilityModel::SmallL,
            &clear(),
        )
        .unwrap();
        assert!(nll.is_infinite());
    }

    #[test]
    fn nll_independent_of_declared_efficiency() {
        let l = SeparationVector::new(0.25, 0.25, 0.25);
        let probs = probs_at(l);
        let frame = sample_frame(100_000, &probs, 0.8, 5).unwrap();
        let mut declared_full = frame.clone();
        declared_full.efficiency = 1.0;
        let ap = clear();
        for test_l in [
            SeparationVector::new(0.1, 0.2, 0.3),
            SeparationVector::new(0.25, 0.25, 0.25),
        ] {
            let a =
                neg_log_likelihood(&frame, &zern(), test_l, ProbabilityModel::Exact, &ap).unwrap();
            let b = neg_log_likelihood(
                &declared_full,
                &zern(),
                test_l,
                ProbabilityModel::Exact,
                &ap,
            )
            .unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn nll_prefers_truth_over_doubled_separation() {
        let l = SeparationVector::new(0.25, 0.25, 0.25);
        let l2 = SeparationVector::new(0.5, 0.5, 0.5);
        let probs = probs_at(l);
        let ap = clear();
        let modes = zern();
        let likelihood = LikelihoodModel::new(&modes, ProbabilityModel::Exact, &ap);
        let mut wins = 0;
        for seed in 0..100 {
            let mut rng = frame_rng(31, seed);
            let frame = sample_frame_with_rng(100_000, &probs, 1.0, &mut rng).unwrap();
            if likelihood.nll(&frame, l).unwrap() < likelihood.nll(&frame, l2).unwrap() {
                wins += 1;
            }
        }
        assert!(wins >= 99, "truth preferred in only {wins}/100 frames");
    }

    #[test]
    fn nll_even_in_each_coordinate() {
        // the 4-Zernike exact model depends on |l_x|, |l_y|, |l_z| only,
        // so the octant restriction loses no likelihood value
        let probs = probs_at(SeparationVector::new(0.2, 0.15, 0.25));
        let frame = sample_frame(50_000, &probs, 1.0, 8).unwrap();
        let ap = clear();
        let modes = zern();
        let likelihood = LikelihoodModel::new(&modes, ProbabilityModel::Exact, &ap);
        for l in [
            SeparationVector::new(0.17, 0.21, 0.09),
            SeparationVector::new(0.3, 0.05, 0.22),
        ] {
            let base = likelihood.nll(&frame, l).unwrap();
            for flipped in [
                SeparationVector::new(-l.l_x, l.l_y, l.l_z),
                SeparationVector::new(l.l_x, -l.l_y, l.l_z),
                SeparationVector::new(l.l_x, l.l_y, -l.l_z),
            ] {
                let v = likelihood.nll(&frame, flipped).unwrap();
                assert_abs_diff_eq!(v, base, epsilon = 1e-9 * base.abs().max(1.0));
            }
        }
    }

    #[test]
    fn ml_estimate_recovers_noiseless_truth() {
        // expected counts rounded to integers act as a noiseless frame
        let l = SeparationVector::new(0.25, 0.25, 0.25);
        let probs = probs_at(l);
        let m = 1_000_000u64;
        let counts: Vec<u64> = probs
            .p
            .iter()
            .map(|p| (p * m as f64).round() as u64)
            .collect();
        let undetected = m - counts.iter().sum::<u64>();
        let frame = CountsFrame {
            counts,
            undetected,
            total_emitted: m,
            efficiency: 1.0,
        };
        let est = ml_estimate(
            &frame,
            &zern(),
            SeparationVector::new(0.25, 0.25, 0.25),
            ProbabilityModel::Exact,
            &clear(),
            &MlOptions::default(),
        )
        .unwrap();
        for (hat, truth) in est.l_hat.as_array().iter().zip(l.as_array()) {
            assert!(
                (hat - truth).abs() < 1e-3,
                "estimate {hat} vs truth {truth}"
            );
        }
        assert!(est.nll_at_optimum.is_finite());
    }

    #[test]
    fn ml_estimate_degenerate_frame_goes_to_origin() {
        let frame = CountsFrame {
            counts: vec![10_000, 0, 0, 0],
            undetected: 0,
            total_emitted: 10_000,
            efficiency: 1.0,
        };
        let est = ml_estimate(
            &frame,
            &zern(),
            SeparationVector::new(0.25, 0.25, 0.25),
            ProbabilityModel::Exact,
            &clear(),
            &MlOptions::default(),
        )
        .unwrap();
        assert!(est.l_hat.norm() < 0.02, "drifted to {}", est.l_hat);
    }

    #[test]
    fn ml_estimate_rejects_negative_init() {
        let frame = CountsFrame {
            counts: vec![1, 0, 0, 0],
            undetected: 0,
            total_emitted: 1,
            efficiency: 1.0,
        };
        assert!(ml_estimate(
            &frame,
            &zern(),
            SeparationVector::new(-0.1, 0.0, 0.0),
            ProbabilityModel::Exact,
            &clear(),
            &MlOptions::default(),
        )
        .is_err());
    }

    #[test]
    fn estimator_ignores_declared_efficiency() {
        let probs = probs_at(SeparationVector::new(0.25, 0.25, 0.25));
        let frame = sample_frame(100_000, &probs, 0.5, 17).unwrap();
        let mut redeclared = frame.clone();
        redeclared.efficiency = 1.0;
        let ap = clear();
        let a = ml_estimate(
            &frame,
            &zern(),
            SeparationVector::new(0.25, 0.25, 0.25),
            ProbabilityModel::Exact,
            &ap,
            &MlOptions::default(),
        )
        .unwrap();
        let b = ml_estimate(
            &redeclared,
            &zern(),
            SeparationVector::new(0.25, 0.25, 0.25),
            ProbabilityModel::Exact,
            &ap,
            &MlOptions::default(),
        )
        .unwrap();
        assert_eq!(a.l_hat.as_array(), b.l_hat.as_array());
    }

    #[test]
    fn nll_decreases_from_init() {
        let probs = probs_at(SeparationVector::new(0.15, 0.2, 0.3));
        let frame = sample_frame(50_000, &probs, 1.0, 23).unwrap();
        let ap = clear();
        let modes = zern();
        let init = SeparationVector::new(0.25, 0.25, 0.25);
        let est = ml_estimate(
            &frame,
            &modes,
            init,
            ProbabilityModel::Exact,
            &ap,
            &MlOptions::default(),
        )
        .unwrap();
        let nll_init =
            neg_log_likelihood(&frame, &modes, init, ProbabilityModel::Exact, &ap).unwrap();
        assert!(est.nll_at_optimum <= nll_init);
    }

    #[test]
    fn batch_estimate_is_reproducible() {
        let mut cfg = BatchConfig::new(SeparationVector::new(0.25, 0.25, 0.25));
        cfg.photons_per_frame = 5_000;
        cfg.frames = 4;
        cfg.base_seed = 42;
        let modes = zern();
        let ap = clear();
        let a = batch_estimate(&cfg, &modes, &ap, &MlOptions::default()).unwrap();
        let b = batch_estimate(&cfg, &modes, &ap, &MlOptions::default()).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.sample_variance, b.sample_variance);
        // thread count must not matter
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = pool.install(|| batch_estimate(&cfg, &modes, &ap, &MlOptions::default()).unwrap());
        assert_eq!(a.mean, c.mean);
    }

    #[test]
    fn frame_streams_are_independent() {
        let a = frame_uniform(7, 0);
        let b = frame_uniform(7, 1);
        assert_ne!(a, b);
        assert_eq!(frame_uniform(7, 1), b);
    }
}
