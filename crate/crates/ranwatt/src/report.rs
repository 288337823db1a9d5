//! Rendering of explanation artifacts: per-instance bar charts, beeswarm
//! summaries, feature rankings, and metrics tables.
//!
//! SVG output is built by pure string concatenation with fixed-precision
//! coordinates, so identical inputs produce identical bytes. Positive
//! contributions render orange (#ff7f0e), negative ones blue (#1f77b4);
//! beeswarm points shade from blue (low feature value) to red (#d62728,
//! high feature value).

use crate::ensemble::{Metrics, ModelKind};
use crate::explain::{Attribution, GlobalSummary};
use crate::{Error, Result};

const POSITIVE_COLOR: &str = "#ff7f0e";
const NEGATIVE_COLOR: &str = "#1f77b4";
const LOW_VALUE_RGB: (f64, f64, f64) = (31.0, 119.0, 180.0); // #1f77b4
const HIGH_VALUE_RGB: (f64, f64, f64) = (214.0, 39.0, 40.0); // #d62728

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Compact numeric label: integers plain, everything else up to four
/// decimals with trailing zeros trimmed.
fn fmt_value(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0');
        s.trim_end_matches('.').to_string()
    }
}

/// Renders a per-instance attribution as a horizontal bar chart.
///
/// Bars are sorted by decreasing `|phi|` (ties by name), lengths are
/// proportional to `|phi|`, and a side column lists the raw feature
/// values. The header shows the predicted power in watts.
pub fn render_instance_bars(attr: &Attribution, width: u32, height: u32) -> Result<String> {
    let d = attr.feature_names.len();
    if width < 320 {
        return Err(Error::invalid(format!("width {width} is too small, need 320")));
    }
    let top = 64.0;
    let bottom = 16.0;
    let row_h = (f64::from(height) - top - bottom) / d as f64;
    if row_h < 9.0 {
        return Err(Error::invalid(format!(
            "height {height} is too small for {d} features"
        )));
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        attr.phi[b]
            .abs()
            .total_cmp(&attr.phi[a].abs())
            .then_with(|| attr.feature_names[a].cmp(&attr.feature_names[b]))
    });
    let max_abs = attr.phi.iter().fold(0.0f64, |m, p| m.max(p.abs())).max(1e-300);

    let label_w = 168.0;
    let value_w = 104.0;
    let bar_x0 = label_w;
    let bar_x1 = f64::from(width) - value_w;
    let center = (bar_x0 + bar_x1) / 2.0;
    let half = (bar_x1 - bar_x0) / 2.0 - 6.0;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"12\" y=\"24\" font-size=\"16\" font-weight=\"bold\" fill=\"#111111\">\
         Predicted power: {:.2} W</text>\n",
        attr.prediction
    ));
    svg.push_str(&format!(
        "<text x=\"12\" y=\"44\" font-size=\"11\" fill=\"#555555\">baseline {:.2} W, \
         method {}{}</text>\n",
        attr.base_value,
        attr.method.tag(),
        attr.note
            .as_deref()
            .map(|n| format!(" ({})", xml_escape(n)))
            .unwrap_or_default()
    ));
    svg.push_str(&format!(
        "<line x1=\"{center:.2}\" y1=\"{top:.2}\" x2=\"{center:.2}\" y2=\"{:.2}\" \
         stroke=\"#333333\" stroke-width=\"1\"/>\n",
        f64::from(height) - bottom
    ));

    for (row, &j) in order.iter().enumerate() {
        let y = top + row as f64 * row_h;
        let bar_y = y + row_h * 0.18;
        let bar_h = row_h * 0.64;
        let text_y = y + row_h * 0.5 + 4.0;
        let phi = attr.phi[j];

        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{text_y:.2}\" font-size=\"11\" text-anchor=\"end\" \
             fill=\"#111111\">{}</text>\n",
            label_w - 8.0,
            xml_escape(&attr.feature_names[j])
        ));
        if phi != 0.0 {
            let len = phi.abs() / max_abs * half;
            let (x, color) = if phi > 0.0 {
                (center, POSITIVE_COLOR)
            } else {
                (center - len, NEGATIVE_COLOR)
            };
            svg.push_str(&format!(
                "<rect class=\"bar\" x=\"{x:.2}\" y=\"{bar_y:.2}\" width=\"{len:.2}\" \
                 height=\"{bar_h:.2}\" fill=\"{color}\"/>\n"
            ));
            let (label_x, anchor) = if phi > 0.0 {
                (center + len + 4.0, "start")
            } else {
                (center - len - 4.0, "end")
            };
            svg.push_str(&format!(
                "<text x=\"{label_x:.2}\" y=\"{text_y:.2}\" font-size=\"10\" \
                 text-anchor=\"{anchor}\" fill=\"#333333\">{phi:+.3}</text>\n"
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{text_y:.2}\" font-size=\"10\" text-anchor=\"end\" \
             fill=\"#555555\">{}</text>\n",
            f64::from(width) - 10.0,
            xml_escape(&fmt_value(attr.feature_values[j]))
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn value_color(t: f64) -> String {
    let lerp = |a: f64, b: f64| (a + t * (b - a)).round() as u8;
    format!(
        "rgb({},{},{})",
        lerp(LOW_VALUE_RGB.0, HIGH_VALUE_RGB.0),
        lerp(LOW_VALUE_RGB.1, HIGH_VALUE_RGB.1),
        lerp(LOW_VALUE_RGB.2, HIGH_VALUE_RGB.2)
    )
}

/// Renders a global summary as a beeswarm: one row per feature (most
/// important on top), one point per explained instance, horizontal
/// position by attribution, color by normalized feature value.
///
/// Points in the same horizontal bin stack symmetrically around the row
/// centerline, so the layout is deterministic without any random jitter.
pub fn render_summary(summary: &GlobalSummary, width: u32, height: u32) -> Result<String> {
    let d = summary.features.len();
    if d == 0 || summary.n_instances == 0 {
        return Err(Error::invalid("summary has no features or no instances"));
    }
    if width < 400 {
        return Err(Error::invalid(format!("width {width} is too small, need 400")));
    }
    let top = 56.0;
    let bottom = 48.0;
    let row_h = (f64::from(height) - top - bottom) / d as f64;
    if row_h < 9.0 {
        return Err(Error::invalid(format!(
            "height {height} is too small for {d} features"
        )));
    }

    let label_w = 176.0;
    let legend_w = 72.0;
    let plot_x0 = label_w;
    let plot_x1 = f64::from(width) - legend_w;
    let plot_w = plot_x1 - plot_x0;

    let mut phi_min = f64::INFINITY;
    let mut phi_max = f64::NEG_INFINITY;
    for f in &summary.features {
        for &(_, p) in &f.points {
            phi_min = phi_min.min(p);
            phi_max = phi_max.max(p);
        }
    }
    if phi_min == phi_max {
        phi_min -= 1.0;
        phi_max += 1.0;
    }
    let pad = (phi_max - phi_min) * 0.05;
    phi_min -= pad;
    phi_max += pad;
    let xmap = |p: f64| plot_x0 + (p - phi_min) / (phi_max - phi_min) * plot_w;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"12\" y=\"24\" font-size=\"15\" font-weight=\"bold\" fill=\"#111111\">\
         Feature impact summary</text>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"12\" y=\"42\" font-size=\"11\" fill=\"#555555\">{} instances, \
         method {}</text>\n",
        summary.n_instances,
        summary.method.tag()
    ));

    if phi_min < 0.0 && phi_max > 0.0 {
        let zero_x = xmap(0.0);
        svg.push_str(&format!(
            "<line x1=\"{zero_x:.2}\" y1=\"{top:.2}\" x2=\"{zero_x:.2}\" y2=\"{:.2}\" \
             stroke=\"#999999\" stroke-width=\"1\" stroke-dasharray=\"3,3\"/>\n",
            f64::from(height) - bottom
        ));
    }

    let bin_w = 6.0f64;
    let n_bins = (plot_w / bin_w).ceil() as usize;
    for (row, feature) in summary.features.iter().enumerate() {
        let cy = top + (row as f64 + 0.5) * row_h;
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\" \
             fill=\"#111111\">{}</text>\n",
            label_w - 8.0,
            cy + 4.0,
            xml_escape(&feature.name)
        ));

        let mut val_min = f64::INFINITY;
        let mut val_max = f64::NEG_INFINITY;
        for &(v, _) in &feature.points {
            val_min = val_min.min(v);
            val_max = val_max.max(v);
        }

        // Deterministic swarm: count bin occupancy first to scale the
        // vertical stacking unit, then place points in instance order.
        let mut counts = vec![0usize; n_bins];
        let bin_of = |p: f64| {
            (((xmap(p) - plot_x0) / bin_w) as usize).min(n_bins - 1)
        };
        for &(_, p) in &feature.points {
            counts[bin_of(p)] += 1;
        }
        let max_stack = counts.iter().copied().max().unwrap_or(1).max(1);
        let unit = if max_stack > 1 {
            (row_h / 2.0 - 4.0) / ((max_stack / 2) as f64 + 0.5)
        } else {
            0.0
        };

        let mut placed = vec![0usize; n_bins];
        for &(v, p) in &feature.points {
            let bin = bin_of(p);
            let o = placed[bin];
            placed[bin] += 1;
            let dy = if o == 0 {
                0.0
            } else if o % 2 == 1 {
                unit * o.div_ceil(2) as f64
            } else {
                -unit * (o / 2) as f64
            };
            let t = if val_max > val_min {
                (v - val_min) / (val_max - val_min)
            } else {
                0.5
            };
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{}\" \
                 fill-opacity=\"0.8\"/>\n",
                xmap(p),
                cy + dy,
                value_color(t)
            ));
        }
    }

    // Horizontal axis: end labels and a caption.
    let axis_y = f64::from(height) - bottom;
    svg.push_str(&format!(
        "<line x1=\"{plot_x0:.2}\" y1=\"{axis_y:.2}\" x2=\"{plot_x1:.2}\" y2=\"{axis_y:.2}\" \
         stroke=\"#333333\" stroke-width=\"1\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{plot_x0:.2}\" y=\"{:.2}\" font-size=\"10\" fill=\"#555555\">{}</text>\n",
        axis_y + 14.0,
        xml_escape(&fmt_value(phi_min))
    ));
    svg.push_str(&format!(
        "<text x=\"{plot_x1:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\" \
         fill=\"#555555\">{}</text>\n",
        axis_y + 14.0,
        xml_escape(&fmt_value(phi_max))
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\" \
         fill=\"#111111\">contribution to predicted power [W]</text>\n",
        (plot_x0 + plot_x1) / 2.0,
        axis_y + 30.0
    ));

    // Value-color legend.
    let legend_x = f64::from(width) - legend_w + 18.0;
    let legend_top = top + 8.0;
    let legend_h = 96.0f64;
    let steps = 12;
    for s in 0..steps {
        let t = 1.0 - s as f64 / (steps - 1) as f64;
        svg.push_str(&format!(
            "<rect x=\"{legend_x:.2}\" y=\"{:.2}\" width=\"10\" height=\"{:.2}\" \
             fill=\"{}\"/>\n",
            legend_top + s as f64 * legend_h / steps as f64,
            legend_h / steps as f64 + 0.5,
            value_color(t)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\" fill=\"#555555\">high</text>\n",
        legend_x + 14.0,
        legend_top + 8.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\" fill=\"#555555\">low</text>\n",
        legend_x + 14.0,
        legend_top + legend_h
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\" fill=\"#555555\">value</text>\n",
        legend_x - 4.0,
        legend_top - 6.0
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// One attribution source feeding the ranking: a single explained
/// instance or a whole summary.
pub enum RankSource<'a> {
    Instance(&'a Attribution),
    Summary(&'a GlobalSummary),
}

/// A (model, explainer) cell for [`rank_features`].
pub struct RankEntry<'a> {
    pub model: String,
    pub explainer: String,
    pub source: RankSource<'a>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    pub feature: String,
    /// Mean of the per-cell scores.
    pub aggregate: f64,
    pub per_cell: Vec<f64>,
}

/// Features ranked by aggregate importance across model/explainer cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingTable {
    /// Cell labels, `model/explainer`, in entry order.
    pub cells: Vec<String>,
    /// Rows sorted by decreasing aggregate score (ties by name).
    pub rows: Vec<RankRow>,
}

/// Builds a cross-model, cross-explainer feature ranking.
///
/// Each entry contributes one score per feature: `|phi|` for an instance
/// attribution, the mean absolute attribution for a summary. All entries
/// must cover the same feature set.
pub fn rank_features(entries: &[RankEntry<'_>]) -> Result<RankingTable> {
    if entries.is_empty() {
        return Err(Error::invalid("ranking needs at least one entry"));
    }

    let mut canonical: Vec<String> = match &entries[0].source {
        RankSource::Instance(a) => a.feature_names.clone(),
        RankSource::Summary(s) => s.features.iter().map(|f| f.name.clone()).collect(),
    };
    canonical.sort();

    let mut per_feature: Vec<Vec<f64>> = vec![Vec::with_capacity(entries.len()); canonical.len()];
    for entry in entries {
        let mut scores: Vec<(String, f64)> = match &entry.source {
            RankSource::Instance(a) => a
                .feature_names
                .iter()
                .zip(&a.phi)
                .map(|(n, p)| (n.clone(), p.abs()))
                .collect(),
            RankSource::Summary(s) => s
                .features
                .iter()
                .map(|f| (f.name.clone(), f.mean_abs_phi))
                .collect(),
        };
        scores.sort_by(|a, b| a.0.cmp(&b.0));
        let names: Vec<&String> = scores.iter().map(|(n, _)| n).collect();
        if names.len() != canonical.len() || names.iter().zip(&canonical).any(|(a, b)| *a != b) {
            return Err(Error::invalid(format!(
                "entry {}/{} covers a different feature set",
                entry.model, entry.explainer
            )));
        }
        for (j, (_, score)) in scores.iter().enumerate() {
            per_feature[j].push(*score);
        }
    }

    let mut rows: Vec<RankRow> = canonical
        .into_iter()
        .zip(per_feature)
        .map(|(feature, per_cell)| {
            let aggregate = per_cell.iter().sum::<f64>() / per_cell.len() as f64;
            RankRow {
                feature,
                aggregate,
                per_cell,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.aggregate
            .total_cmp(&a.aggregate)
            .then_with(|| a.feature.cmp(&b.feature))
    });

    Ok(RankingTable {
        cells: entries
            .iter()
            .map(|e| format!("{}/{}", e.model, e.explainer))
            .collect(),
        rows,
    })
}

impl RankingTable {
    /// Aligned human-readable table.
    pub fn to_text(&self) -> String {
        let name_w = self
            .rows
            .iter()
            .map(|r| r.feature.len())
            .chain(["feature".len()])
            .max()
            .unwrap_or(7);
        let cell_w = self.cells.iter().map(|c| c.len()).chain([9]).max().unwrap_or(9);

        let mut out = String::new();
        out.push_str(&format!("{:<4}  {:<name_w$}  {:>cell_w$}", "rank", "feature", "aggregate"));
        for cell in &self.cells {
            out.push_str(&format!("  {cell:>cell_w$}"));
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str(&format!(
                "{:<4}  {:<name_w$}  {:>cell_w$.4}",
                i + 1,
                row.feature,
                row.aggregate
            ));
            for score in &row.per_cell {
                out.push_str(&format!("  {score:>cell_w$.4}"));
            }
            out.push('\n');
        }
        out
    }

    /// Tab-separated form whose numbers round-trip exactly.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("feature\taggregate");
        for cell in &self.cells {
            out.push('\t');
            out.push_str(cell);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{}\t{}", row.feature, row.aggregate));
            for score in &row.per_cell {
                out.push_str(&format!("\t{score}"));
            }
            out.push('\n');
        }
        out
    }
}

/// The two textual forms of a metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTables {
    /// Aligned table with five-decimal MSE columns and a unit footnote.
    pub aligned: String,
    /// Tab-separated form whose numbers round-trip exactly.
    pub structured: String,
}

/// Formats per-model train/test MSE as aligned text and structured text.
pub fn emit_metrics_table(rows: &[(ModelKind, Metrics)]) -> Result<MetricsTables> {
    if rows.is_empty() {
        return Err(Error::invalid("metrics table needs at least one row"));
    }
    for (_, m) in rows {
        if !m.train_mse.is_finite() || !m.test_mse.is_finite() {
            return Err(Error::invalid("metrics contain a non-finite value"));
        }
    }

    let name_w = rows
        .iter()
        .map(|(k, _)| k.display_name().len())
        .chain(["Model".len()])
        .max()
        .unwrap_or(5);
    let train_h = "Train MSE [W]";
    let test_h = "Test MSE [W]";

    let mut aligned = format!("{:<name_w$}  {train_h}  {test_h}\n", "Model");
    for (kind, m) in rows {
        aligned.push_str(&format!(
            "{:<name_w$}  {:>13.5}  {:>12.5}\n",
            kind.display_name(),
            m.train_mse,
            m.test_mse
        ));
    }
    aligned.push_str(
        "\nNote: MSE values are dimensionally W^2; the [W] unit label is retained \
         from the source reporting convention.\n",
    );

    let mut structured = String::from("model\ttrain_mse\ttest_mse\n");
    for (kind, m) in rows {
        structured.push_str(&format!("{}\t{}\t{}\n", kind.tag(), m.train_mse, m.test_mse));
    }

    Ok(MetricsTables { aligned, structured })
}

impl MetricsTables {
    /// Rebuilds both table forms from the structured TSV representation.
    pub fn from_structured(text: &str) -> Result<MetricsTables> {
        let mut lines = text.lines();
        match lines.next() {
            Some("model\ttrain_mse\ttest_mse") => {}
            _ => return Err(Error::parse("metrics TSV missing its header line")),
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(format!(
                    "metrics TSV row {}: expected 3 fields, found {}",
                    i + 2,
                    fields.len()
                )));
            }
            let kind = ModelKind::parse(fields[0])?;
            let parse_num = |s: &str, col: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(format!("metrics TSV row {}: bad {col} {s:?}", i + 2)))
            };
            rows.push((
                kind,
                Metrics {
                    train_mse: parse_num(fields[1], "train_mse")?,
                    test_mse: parse_num(fields[2], "test_mse")?,
                },
            ));
        }
        emit_metrics_table(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::AttributionMethod;

    fn sample_attribution() -> Attribution {
        Attribution::new(
            vec!["airtime".into(), "nRBs".into(), "bsr".into(), "snr".into()],
            vec![0.53, 12.0, 3000.0, 21.5],
            vec![2.0, -1.0, 0.5, 0.0],
            11.5,
            13.53,
            AttributionMethod::ShapExact,
            None,
            None,
        )
        .unwrap()
    }

    fn bar_widths(svg: &str) -> Vec<f64> {
        svg.lines()
            .filter(|l| l.contains("class=\"bar\""))
            .map(|l| {
                let start = l.find("width=\"").unwrap() + 7;
                let end = l[start..].find('"').unwrap() + start;
                l[start..end].parse().unwrap()
            })
            .collect()
    }

    #[test]
    fn bars_are_sorted_and_proportional() {
        let svg = render_instance_bars(&sample_attribution(), 860, 360).unwrap();
        let widths = bar_widths(&svg);
        // Zero-contribution features draw no bar.
        assert_eq!(widths.len(), 3);
        // Document order follows decreasing |phi|: 2.0, 1.0, 0.5.
        assert!(widths[0] > widths[1] && widths[1] > widths[2]);
        // Pixel lengths proportional to |phi| within a pixel.
        assert!((widths[0] - 2.0 * widths[1]).abs() <= 1.0);
        assert!((widths[1] - 2.0 * widths[2]).abs() <= 1.0);
    }

    #[test]
    fn bars_use_sign_colors_and_show_prediction() {
        let svg = render_instance_bars(&sample_attribution(), 860, 360).unwrap();
        assert!(svg.contains("Predicted power: 13.53 W"));
        let orange = svg.matches(POSITIVE_COLOR).count();
        let blue = svg.matches(NEGATIVE_COLOR).count();
        assert_eq!(orange, 2); // phi = 2.0 and 0.5
        assert_eq!(blue, 1); // phi = -1.0
        // Raw feature values appear in the side column.
        assert!(svg.contains(">3000<"));
        assert!(svg.contains(">0.53<"));
    }

    #[test]
    fn bar_rendering_is_byte_deterministic() {
        let attr = sample_attribution();
        let a = render_instance_bars(&attr, 860, 360).unwrap();
        let b = render_instance_bars(&attr, 860, 360).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bars_reject_too_small_canvas() {
        assert!(render_instance_bars(&sample_attribution(), 860, 80).is_err());
        assert!(render_instance_bars(&sample_attribution(), 100, 360).is_err());
    }

    fn sample_summary() -> GlobalSummary {
        let names = vec!["airtime".into(), "bsr".into()];
        let values = vec![vec![0.1, 100.0], vec![0.9, 300.0], vec![0.5, 200.0]];
        let phis = vec![vec![-0.5, 0.1], vec![1.5, -0.2], vec![0.2, 0.05]];
        GlobalSummary::build(AttributionMethod::ShapSampled, Some(7), &names, &values, &phis)
            .unwrap()
    }

    #[test]
    fn summary_renders_a_point_per_instance_per_feature() {
        let svg = render_summary(&sample_summary(), 900, 420).unwrap();
        assert_eq!(svg.matches("<circle").count(), 6);
        assert!(svg.contains("contribution to predicted power [W]"));
        // Extreme feature values take the endpoint colors.
        assert!(svg.contains("rgb(31,119,180)"));
        assert!(svg.contains("rgb(214,39,40)"));
        let a = render_summary(&sample_summary(), 900, 420).unwrap();
        assert_eq!(svg, a);
    }

    #[test]
    fn summary_rejects_empty_input() {
        let names: Vec<String> = vec!["a".into()];
        let empty = GlobalSummary {
            method: AttributionMethod::Lime,
            seed: None,
            n_instances: 0,
            features: vec![],
        };
        assert!(render_summary(&empty, 900, 400).is_err());
        let _ = names;
    }

    #[test]
    fn ranking_aggregates_across_cells() {
        let attr = sample_attribution();
        let summary = GlobalSummary::build(
            AttributionMethod::Lime,
            Some(1),
            &attr.feature_names,
            &[attr.feature_values.clone()],
            &[vec![1.0, 3.0, 0.2, 0.1]],
        )
        .unwrap();
        let table = rank_features(&[
            RankEntry {
                model: "gb".into(),
                explainer: "shap".into(),
                source: RankSource::Instance(&attr),
            },
            RankEntry {
                model: "gb".into(),
                explainer: "lime".into(),
                source: RankSource::Summary(&summary),
            },
        ])
        .unwrap();
        assert_eq!(table.cells, vec!["gb/shap", "gb/lime"]);
        // nRBs: (1.0 + 3.0)/2 = 2.0 beats airtime (2.0 + 1.0)/2 = 1.5.
        assert_eq!(table.rows[0].feature, "nRBs");
        assert_eq!(table.rows[0].aggregate, 2.0);
        assert_eq!(table.rows[1].feature, "airtime");
        let text = table.to_text();
        assert!(text.starts_with("rank"));
        let tsv = table.to_tsv();
        assert!(tsv.lines().count() == 5);
    }

    #[test]
    fn ranking_rejects_mismatched_feature_sets() {
        let attr = sample_attribution();
        let other = Attribution::new(
            vec!["x".into()],
            vec![1.0],
            vec![0.5],
            0.0,
            0.5,
            AttributionMethod::Lime,
            None,
            None,
        )
        .unwrap();
        assert!(rank_features(&[
            RankEntry {
                model: "gb".into(),
                explainer: "shap".into(),
                source: RankSource::Instance(&attr),
            },
            RankEntry {
                model: "rf".into(),
                explainer: "shap".into(),
                source: RankSource::Instance(&other),
            },
        ])
        .is_err());
    }

    #[test]
    fn metrics_table_formats_five_decimals_and_round_trips() {
        let rows = vec![
            (
                ModelKind::GBoost,
                Metrics {
                    train_mse: 1.23456,
                    test_mse: 0.1,
                },
            ),
            (
                ModelKind::Forest,
                Metrics {
                    train_mse: 0.00001,
                    test_mse: 2.0,
                },
            ),
        ];
        let tables = emit_metrics_table(&rows).unwrap();
        let lines: Vec<&str> = tables.aligned.lines().collect();
        assert_eq!(lines[0], "Model              Train MSE [W]  Test MSE [W]");
        assert_eq!(lines[1], "Gradient Boosting        1.23456       0.10000");
        assert_eq!(lines[2], "Random Forest            0.00001       2.00000");
        assert!(tables.aligned.contains("dimensionally W^2"));

        // Structured values parse back bitwise.
        for (line, (_, m)) in tables.structured.lines().skip(1).zip(&rows) {
            let cells: Vec<&str> = line.split('\t').collect();
            assert_eq!(cells[1].parse::<f64>().unwrap(), m.train_mse);
            assert_eq!(cells[2].parse::<f64>().unwrap(), m.test_mse);
        }
    }

    #[test]
    fn metrics_table_rejects_empty_or_non_finite() {
        assert!(emit_metrics_table(&[]).is_err());
        assert!(emit_metrics_table(&[(
            ModelKind::Forest,
            Metrics {
                train_mse: f64::NAN,
                test_mse: 0.0
            }
        )])
        .is_err());
    }
}
