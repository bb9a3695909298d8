//! SVG line charts rendered from CSV documents.
//!
//! Plot emission is a pure function of the CSV bytes: the chart layout,
//! series selection, and scales all come from the document's `plot`
//! metadata hint (`x=<col> y=<col>,<col> [group=<col>] [yscale=log]`),
//! so re-running emission on the same file reproduces identical output.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::output::CsvDocument;

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

struct PlotHint {
    x: String,
    y: Vec<String>,
    group: Option<String>,
    log_y: bool,
}

fn parse_hint(doc: &CsvDocument) -> Result<PlotHint> {
    let hints = doc.metadata("plot");
    let hint = hints
        .first()
        .ok_or_else(|| Error::Config("CSV document carries no plot hint".into()))?;
    let mut x = None;
    let mut y = Vec::new();
    let mut group = None;
    let mut log_y = false;
    for part in hint.split_whitespace() {
        if let Some((key, value)) = part.split_once('=') {
            match key {
                "x" => x = Some(value.to_string()),
                "y" => y = value.split(',').map(|s| s.to_string()).collect(),
                "group" => group = Some(value.to_string()),
                "yscale" => log_y = value == "log",
                _ => {}
            }
        }
    }
    let x = x.ok_or_else(|| Error::Config("plot hint is missing x=".into()))?;
    if y.is_empty() {
        return Err(Error::Config("plot hint is missing y=".into()));
    }
    Ok(PlotHint { x, y, group, log_y })
}

fn nice_ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    (0..=count)
        .map(|i| lo + (hi - lo) * i as f64 / count as f64)
        .collect()
}

/// Renders the chart described by the document's plot hint.
pub fn render_svg(doc: &CsvDocument) -> Result<String> {
    let hint = parse_hint(doc)?;
    let xs = doc.column_f64(&hint.x)?;
    let groups: Vec<String> = match &hint.group {
        Some(col) => {
            let idx = doc
                .column_index(col)
                .ok_or_else(|| Error::Config(format!("CSV has no column '{col}'")))?;
            doc.rows().iter().map(|r| r[idx].clone()).collect()
        }
        None => vec![String::new(); xs.len()],
    };

    // series keyed by (y column, group label), in deterministic order
    let mut series: BTreeMap<(usize, String), Vec<(f64, f64)>> = BTreeMap::new();
    for (yi, ycol) in hint.y.iter().enumerate() {
        let ys = doc.column_f64(ycol)?;
        for ((&x, &y), g) in xs.iter().zip(ys.iter()).zip(groups.iter()) {
            if !x.is_finite() || !y.is_finite() {
                continue; // infinite bounds are data, but not plottable
            }
            if hint.log_y && y <= 0.0 {
                continue;
            }
            series
                .entry((yi, g.clone()))
                .or_default()
                .push((x, y));
        }
    }
    if series.values().all(|v| v.is_empty()) {
        return Err(Error::Config("no finite data points to plot".into()));
    }

    let transform_y = |y: f64| if hint.log_y { y.log10() } else { y };
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for pts in series.values() {
        for &(x, y) in pts {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(transform_y(y));
            y_max = y_max.max(transform_y(y));
        }
    }
    if x_max <= x_min {
        x_max = x_min + 1.0;
    }
    if y_max <= y_min {
        y_max = y_min + 1.0;
    }

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + plot_h - (transform_y(y) - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // axes
    svg.push_str(&format!(
        "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"black\"/>\n",
        MARGIN_LEFT,
        MARGIN_TOP + plot_h,
        MARGIN_LEFT + plot_w,
        MARGIN_TOP + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"black\"/>\n",
        MARGIN_LEFT,
        MARGIN_TOP,
        MARGIN_LEFT,
        MARGIN_TOP + plot_h
    ));

    // ticks and labels
    for t in nice_ticks(x_min, x_max, 5) {
        let px = sx(t);
        svg.push_str(&format!(
            "<line x1=\"{px:.3}\" y1=\"{:.3}\" x2=\"{px:.3}\" y2=\"{:.3}\" stroke=\"black\"/>\n",
            MARGIN_TOP + plot_h,
            MARGIN_TOP + plot_h + 6.0
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.3}\" y=\"{:.3}\" font-size=\"12\" text-anchor=\"middle\">{:.4}</text>\n",
            MARGIN_TOP + plot_h + 20.0,
            t
        ));
    }
    for t in nice_ticks(y_min, y_max, 5) {
        let py = MARGIN_TOP + plot_h - (t - y_min) / (y_max - y_min) * plot_h;
        svg.push_str(&format!(
            "<line x1=\"{:.3}\" y1=\"{py:.3}\" x2=\"{:.3}\" y2=\"{py:.3}\" stroke=\"black\"/>\n",
            MARGIN_LEFT - 6.0,
            MARGIN_LEFT
        ));
        let label = if hint.log_y {
            format!("1e{t:.2}")
        } else {
            format!("{t:.4}")
        };
        svg.push_str(&format!(
            "<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"12\" text-anchor=\"end\">{label}</text>\n",
            MARGIN_LEFT - 10.0,
            py + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 14.0,
        hint.x
    ));

    // polylines and legend
    for (si, ((yi, group), pts)) in series.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = PALETTE[si % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        let label = if group.is_empty() {
            hint.y[*yi].clone()
        } else {
            format!("{} [{group}]", hint.y[*yi])
        };
        let ly = MARGIN_TOP + 16.0 * si as f64 + 10.0;
        svg.push_str(&format!(
            "<line x1=\"{:.3}\" y1=\"{ly:.3}\" x2=\"{:.3}\" y2=\"{ly:.3}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
            MARGIN_LEFT + plot_w + 10.0,
            MARGIN_LEFT + plot_w + 34.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"12\">{label}</text>\n",
            MARGIN_LEFT + plot_w + 40.0,
            ly + 4.0
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Reads a CSV file and writes the chart it describes.
pub fn plot_csv_file(csv_path: &Path, svg_path: &Path) -> Result<()> {
    let doc = CsvDocument::load(csv_path)?;
    std::fs::write(svg_path, render_svg(&doc)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::output::format_float;

    fn sample_doc() -> CsvDocument {
        let mut doc = CsvDocument::new(&["x", "a", "b", "curve"]);
        doc.add_metadata("plot", "x=x y=a,b group=curve yscale=linear");
        for i in 0..10 {
            let x = i as f64 / 9.0;
            doc.push_row(vec![
                format_float(x),
                format_float(x * x),
                format_float(1.0 - x),
                "0".to_string(),
            ]);
        }
        doc
    }

    #[test]
    fn renders_deterministic_svg() {
        let doc = sample_doc();
        let a = render_svg(&doc).unwrap();
        let b = render_svg(&doc).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("polyline"));
    }

    #[test]
    fn log_scale_skips_nonpositive() {
        let mut doc = CsvDocument::new(&["x", "a"]);
        doc.add_metadata("plot", "x=x y=a yscale=log");
        doc.push_row(vec!["0".into(), "0".into()]);
        doc.push_row(vec!["1".into(), "10".into()]);
        doc.push_row(vec!["2".into(), "100".into()]);
        let svg = render_svg(&doc).unwrap();
        assert!(svg.contains("polyline"));
    }

    #[test]
    fn missing_hint_is_an_error() {
        let doc = CsvDocument::new(&["x", "a"]);
        assert!(render_svg(&doc).is_err());
    }
}
