//! Scenario runners: compute, write CSV (and optionally SVG), return
//! artifact locations.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiments::config::{ExperimentConfig, ModalDirection, Scenario};
use crate::experiments::output::{format_float, CsvDocument};
use crate::experiments::plot;
use crate::fisher::{
    crb_from_fisher, fisher_matrix, sincos_fi_axial, sincos_fi_transverse, DerivativeMode,
};
use crate::modal::ModeSet;
use crate::montecarlo::{batch_estimate, BatchConfig, MlOptions};
use crate::optics::{ApertureModel, SeparationVector};
use crate::qfi::{
    qfi_clear_analytic, qfi_phase_covariance, qfi_state_derivative_detailed, InfoMatrix,
};

/// Locations of the files one run produced.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub csv_path: PathBuf,
    pub svg_path: Option<PathBuf>,
    pub rows: usize,
}

/// Creates the output directory and verifies it is writable.
pub fn prepare_output_dir(dir: &str) -> Result<PathBuf> {
    let path = PathBuf::from(dir);
    std::fs::create_dir_all(&path)?;
    let probe = path.join(".write-probe");
    std::fs::write(&probe, b"probe")?;
    std::fs::remove_file(&probe)?;
    Ok(path)
}

fn common_metadata(doc: &mut CsvDocument, cfg: &ExperimentConfig) {
    doc.add_metadata("tool", concat!("pairsep ", env!("CARGO_PKG_VERSION")));
    doc.add_metadata("crb-convention", "3x3 matrix inverse (joint estimation)");
    doc.add_metadata("config", &cfg.resolved_toml());
}

fn maybe_plot(
    cfg: &ExperimentConfig,
    csv_path: &Path,
) -> Result<Option<PathBuf>> {
    if !cfg.emit_plots {
        return Ok(None);
    }
    let svg_path = csv_path.with_extension("svg");
    plot::plot_csv_file(csv_path, &svg_path)?;
    Ok(Some(svg_path))
}

/// Runs a Cramér-Rao sweep over the configured grid and curves; one CSV
/// row per (curve, grid point). Singular points are recorded, not fatal.
pub fn run_crb_sweep(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    if !matches!(
        cfg.scenario,
        Scenario::CrbSweepTransverse | Scenario::CrbSweepAxial
    ) {
        return Err(Error::Config(format!(
            "run_crb_sweep cannot execute scenario '{}'",
            cfg.scenario.label()
        )));
    }
    cfg.validate()?;
    let out_dir = prepare_output_dir(&cfg.output_dir)?;
    let ap = ApertureModel::clear_circular(cfg.quadrature_order);
    let modes = ModeSet::zernike_first_four();
    let grid = cfg.grid.as_ref().expect("validated");
    let grid_values = grid.values();
    let curves = cfg.curves();

    // every (curve, grid value) pair, ordered
    let points: Vec<(usize, SeparationVector)> = curves
        .iter()
        .enumerate()
        .flat_map(|(ci, curve)| {
            grid_values
                .iter()
                .map(move |&v| (ci, cfg.point(curve, v)))
                .collect::<Vec<_>>()
        })
        .collect();

    let results: Vec<Vec<String>> = points
        .par_iter()
        .map(|&(ci, l)| -> Result<Vec<String>> {
            let outcome = fisher_matrix(&modes, l, &ap, cfg.model, DerivativeMode::Analytic)?;
            let crb = crb_from_fisher(&outcome.matrix);
            let j = outcome.matrix;
            Ok(vec![
                ci.to_string(),
                format_float(l.l_x),
                format_float(l.l_y),
                format_float(l.l_z),
                format_float(j.entry(0, 0)),
                format_float(j.entry(1, 1)),
                format_float(j.entry(2, 2)),
                format_float(j.entry(0, 1)),
                format_float(j.entry(0, 2)),
                format_float(j.entry(1, 2)),
                format_float(crb.per_coordinate[0]),
                format_float(crb.per_coordinate[1]),
                format_float(crb.per_coordinate[2]),
                (crb.singular as u8).to_string(),
                cfg.model.label().to_string(),
                cfg.quadrature_order.to_string(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;

    let mut doc = CsvDocument::new(&[
        "curve",
        "lx",
        "ly",
        "lz",
        "j_xx",
        "j_yy",
        "j_zz",
        "j_xy",
        "j_xz",
        "j_yz",
        "crb_xx",
        "crb_yy",
        "crb_zz",
        "singular",
        "model",
        "quadrature_order",
    ]);
    common_metadata(&mut doc, cfg);
    let sweep_label = grid.coordinate.label();
    let (y_cols, yscale) = match cfg.scenario {
        Scenario::CrbSweepAxial => ("crb_zz", "log"),
        _ => ("crb_xx,crb_yy", "linear"),
    };
    doc.add_metadata(
        "plot",
        &format!("x={sweep_label} y={y_cols} group=curve yscale={yscale}"),
    );
    for row in results {
        doc.push_row(row);
    }

    let csv_path = out_dir.join(format!("{}.csv", cfg.scenario.label()));
    doc.write_to(&csv_path)?;
    let svg_path = maybe_plot(cfg, &csv_path)?;
    Ok(RunArtifacts {
        csv_path,
        svg_path,
        rows: doc.len(),
    })
}

/// Runs Monte Carlo variance studies: one batch of frames per grid
/// point, compared against the per-photon bound at the truth.
pub fn run_mc_variance(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    if cfg.scenario != Scenario::McVariance {
        return Err(Error::Config(format!(
            "run_mc_variance cannot execute scenario '{}'",
            cfg.scenario.label()
        )));
    }
    cfg.validate()?;
    if cfg.frames < 2 {
        return Err(Error::Config(
            "mc-variance needs at least two frames".into(),
        ));
    }
    let out_dir = prepare_output_dir(&cfg.output_dir)?;
    let ap = ApertureModel::clear_circular(cfg.quadrature_order);
    let modes = ModeSet::zernike_first_four();
    let grid = cfg.grid.as_ref().expect("validated");
    let grid_values = grid.values();
    let curves = cfg.curves();

    let mut doc = CsvDocument::new(&[
        "curve",
        "lx",
        "ly",
        "lz",
        "mean_lx",
        "mean_ly",
        "mean_lz",
        "bias_lx",
        "bias_ly",
        "bias_lz",
        "ppvar_lx",
        "ppvar_ly",
        "ppvar_lz",
        "crb_xx",
        "crb_yy",
        "crb_zz",
        "frames",
        "photons",
        "base_seed",
        "non_converged",
    ]);
    common_metadata(&mut doc, cfg);
    doc.add_metadata(
        "plot",
        &format!(
            "x={} y=ppvar_lx,crb_xx group=curve yscale=linear",
            grid.coordinate.label()
        ),
    );
    doc.add_metadata("seeding", "per-point seed = base_seed + point index; per-frame stream = frame index");

    // batches parallelize internally over frames; points run in sequence
    let mut point_index = 0u64;
    for (ci, curve) in curves.iter().enumerate() {
        for &v in &grid_values {
            let l = cfg.point(curve, v);
            let mut batch_cfg = BatchConfig::new(l);
            batch_cfg.photons_per_frame = cfg.photons;
            batch_cfg.frames = cfg.frames;
            batch_cfg.base_seed = cfg.base_seed.wrapping_add(point_index);
            batch_cfg.efficiency = cfg.efficiency;
            batch_cfg.model = cfg.model;
            let batch = batch_estimate(&batch_cfg, &modes, &ap, &MlOptions::default())?;
            let fisher = fisher_matrix(&modes, l, &ap, cfg.model, DerivativeMode::Analytic)?;
            let crb = crb_from_fisher(&fisher.matrix);
            doc.push_row(vec![
                ci.to_string(),
                format_float(l.l_x),
                format_float(l.l_y),
                format_float(l.l_z),
                format_float(batch.mean[0]),
                format_float(batch.mean[1]),
                format_float(batch.mean[2]),
                format_float(batch.bias[0]),
                format_float(batch.bias[1]),
                format_float(batch.bias[2]),
                format_float(batch.per_photon_variance[0]),
                format_float(batch.per_photon_variance[1]),
                format_float(batch.per_photon_variance[2]),
                format_float(crb.per_coordinate[0]),
                format_float(crb.per_coordinate[1]),
                format_float(crb.per_coordinate[2]),
                batch.frames.to_string(),
                batch.photons_per_frame.to_string(),
                batch_cfg.base_seed.to_string(),
                batch.non_converged.to_string(),
            ]);
            point_index += 1;
        }
    }

    let csv_path = out_dir.join("mc-variance.csv");
    doc.write_to(&csv_path)?;
    let svg_path = maybe_plot(cfg, &csv_path)?;
    Ok(RunArtifacts {
        csv_path,
        svg_path,
        rows: doc.len(),
    })
}

/// Truncation-level convergence of the sine-cosine information toward
/// the quantum bound.
pub fn run_modal_convergence(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    if cfg.scenario != Scenario::ModalConvergence {
        return Err(Error::Config(format!(
            "run_modal_convergence cannot execute scenario '{}'",
            cfg.scenario.label()
        )));
    }
    cfg.validate()?;
    let out_dir = prepare_output_dir(&cfg.output_dir)?;
    let modal = cfg.modal.as_ref().expect("validated");
    let q = qfi_clear_analytic();

    let (doc, name) = match modal.direction {
        ModalDirection::Transverse => {
            let levels =
                sincos_fi_transverse(modal.l_perp, modal.phi_l, modal.max_level, modal.max_level)?;
            let mut doc = CsvDocument::new(&[
                "level",
                "j_xx",
                "j_yy",
                "j_xx_mode_sum",
                "j_yy_mode_sum",
                "complement_probability",
                "qfi_xx",
                "qfi_yy",
            ]);
            common_metadata(&mut doc, cfg);
            doc.add_metadata("plot", "x=level y=j_xx,qfi_xx yscale=linear");
            for lv in levels {
                doc.push_row(vec![
                    lv.level.to_string(),
                    format_float(lv.j_xx),
                    format_float(lv.j_yy),
                    format_float(lv.j_xx_mode_sum),
                    format_float(lv.j_yy_mode_sum),
                    format_float(lv.complement_probability),
                    format_float(q.entry(0, 0)),
                    format_float(q.entry(1, 1)),
                ]);
            }
            (doc, "modal-convergence-transverse.csv")
        }
        ModalDirection::Axial => {
            let levels = sincos_fi_axial(modal.l_z, modal.max_level)?;
            let mut doc = CsvDocument::new(&[
                "level",
                "j_zz",
                "j_zz_mode_sum",
                "complement_probability",
                "qfi_zz",
            ]);
            common_metadata(&mut doc, cfg);
            doc.add_metadata("plot", "x=level y=j_zz,qfi_zz yscale=linear");
            for lv in levels {
                doc.push_row(vec![
                    lv.level.to_string(),
                    format_float(lv.j_zz),
                    format_float(lv.j_zz_mode_sum),
                    format_float(lv.complement_probability),
                    format_float(q.entry(2, 2)),
                ]);
            }
            (doc, "modal-convergence-axial.csv")
        }
    };

    let csv_path = out_dir.join(name);
    doc.write_to(&csv_path)?;
    let svg_path = maybe_plot(cfg, &csv_path)?;
    Ok(RunArtifacts {
        csv_path,
        svg_path,
        rows: doc.len(),
    })
}

/// Cross-route certification of the quantum information matrix.
#[derive(Debug, Clone)]
pub struct QfiReport {
    pub analytic: InfoMatrix,
    pub phase_covariance: InfoMatrix,
    pub state_derivative: InfoMatrix,
    /// Largest entrywise disagreement between any two routes over the
    /// probe separations.
    pub max_discrepancy: f64,
    /// Largest imaginary residue seen by the state-derivative route.
    pub max_imag_residual: f64,
    pub crb_diagonal: [f64; 3],
    /// Route agreement within 1e-6.
    pub passed: bool,
}

impl QfiReport {
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let fmt_matrix = |m: &InfoMatrix| -> String {
            (0..3)
                .map(|i| {
                    format!(
                        "  [{:>18.12} {:>18.12} {:>18.12}]",
                        m.entry(i, 0),
                        m.entry(i, 1),
                        m.entry(i, 2)
                    )
                })
                .collect::<Vec<_>>()
                .join("\n")
        };
        s.push_str("quantum information report (per photon, clear circular aperture)\n\n");
        s.push_str("closed form:\n");
        s.push_str(&fmt_matrix(&self.analytic));
        s.push_str("\nphase-covariance route:\n");
        s.push_str(&fmt_matrix(&self.phase_covariance));
        s.push_str("\nstate-derivative route:\n");
        s.push_str(&fmt_matrix(&self.state_derivative));
        s.push_str(&format!(
            "\n\nmax route discrepancy: {:.3e}\n",
            self.max_discrepancy
        ));
        s.push_str(&format!(
            "max imaginary residual: {:.3e}\n",
            self.max_imag_residual
        ));
        s.push_str(&format!(
            "H_zz = {:.10}\n",
            self.state_derivative.entry(2, 2)
        ));
        s.push_str(&format!(
            "per-photon CRB diagonal: [{}, {}, {}]\n",
            format_float(self.crb_diagonal[0]),
            format_float(self.crb_diagonal[1]),
            format_float(self.crb_diagonal[2])
        ));
        s.push_str(if self.passed {
            "result: PASS\n"
        } else {
            "result: FAIL (route discrepancy above 1e-6)\n"
        });
        s
    }
}

/// Computes all three information routes, their worst disagreement over
/// a probe grid of separations, and writes `qfi-report.txt`.
pub fn run_qfi_report(cfg: &ExperimentConfig) -> Result<QfiReport> {
    if cfg.scenario != Scenario::QfiReport {
        return Err(Error::Config(format!(
            "run_qfi_report cannot execute scenario '{}'",
            cfg.scenario.label()
        )));
    }
    cfg.validate()?;
    let out_dir = prepare_output_dir(&cfg.output_dir)?;
    let ap = ApertureModel::clear_circular(cfg.quadrature_order);

    let analytic = qfi_clear_analytic();
    let phase_covariance = qfi_phase_covariance(&ap)?;

    let mut max_discrepancy = phase_covariance.max_abs_diff(&analytic);
    let mut max_imag = 0.0_f64;
    let mut state = None;
    for l in [
        SeparationVector::zero(),
        SeparationVector::new(0.05, 0.0, 0.25),
        SeparationVector::new(0.25, 0.25, 0.25),
        SeparationVector::new(1.0, 0.05, 1.0),
    ] {
        let detail = qfi_state_derivative_detailed(l, &ap)?;
        max_discrepancy = max_discrepancy
            .max(detail.matrix.max_abs_diff(&phase_covariance))
            .max(detail.matrix.max_abs_diff(&analytic));
        max_imag = max_imag.max(detail.max_imag_residual);
        state = Some(detail.matrix);
    }
    let state_derivative = state.expect("probe grid is nonempty");
    let crb = crb_from_fisher(&phase_covariance);

    let report = QfiReport {
        analytic,
        phase_covariance,
        state_derivative,
        max_discrepancy,
        max_imag_residual: max_imag,
        crb_diagonal: crb.per_coordinate,
        passed: max_discrepancy < 1e-6,
    };
    std::fs::write(out_dir.join("qfi-report.txt"), report.render_text())?;
    Ok(report)
}
