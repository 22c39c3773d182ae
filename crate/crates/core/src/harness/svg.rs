//! Native SVG regret plots: median cumulative regret per policy with an IQR band.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::output::LongRow;
use super::stats::quantile;
use super::{BoundParams, ExperimentResult};
use crate::algorithms::exploration_length;
use crate::error::{Error, Result};
use crate::instances::{estc_upper_bound, lower_bound};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

struct Series {
    label: String,
    /// `(x, median, q1, q3)`; bands are drawn when `q1 < q3` somewhere.
    points: Vec<(f64, f64, f64, f64)>,
    dashed: bool,
}

/// Median/IQR curves at the largest horizon of each policy, in first-seen order.
fn policy_series(rows: &[LongRow]) -> Vec<Series> {
    let mut policies: Vec<&str> = Vec::new();
    for r in rows {
        if !policies.contains(&r.policy.as_str()) {
            policies.push(&r.policy);
        }
    }
    policies
        .into_iter()
        .map(|policy| {
            let horizon = rows
                .iter()
                .filter(|r| r.policy == policy)
                .map(|r| r.horizon)
                .max()
                .unwrap_or(0);
            let mut by_round: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
            for r in rows
                .iter()
                .filter(|r| r.policy == policy && r.horizon == horizon)
            {
                by_round.entry(r.round).or_default().push(r.cum_regret);
            }
            let points = by_round
                .into_iter()
                .map(|(t, v)| {
                    (
                        t as f64,
                        quantile(&v, 0.5),
                        quantile(&v, 0.25),
                        quantile(&v, 0.75),
                    )
                })
                .collect();
            Series {
                label: format!("{policy} (n={horizon})"),
                points,
                dashed: false,
            }
        })
        .collect()
}

fn bound_series(bounds: &BoundParams, xs: &[f64]) -> Vec<Series> {
    let (d, s) = (bounds.d as f64, bounds.s as f64);
    let upper = xs
        .iter()
        .filter_map(|&t| {
            let n1 = exploration_length(t as usize, bounds.d, bounds.s, bounds.r_max, bounds.c_min)
                .ok()?;
            let v = estc_upper_bound(t, d, s, bounds.r_max, bounds.c_min, n1 as f64, 1.0);
            Some((t, v, v, v))
        })
        .collect();
    let lower = xs
        .iter()
        .map(|&t| {
            let v = lower_bound(t, d, s, bounds.c_min);
            (t, v, v, v)
        })
        .collect();
    vec![
        Series {
            label: "ESTC upper bound".into(),
            points: upper,
            dashed: true,
        },
        Series {
            label: "minimax lower bound".into(),
            points: lower,
            dashed: true,
        },
    ]
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Round tick spacing: 1, 2 or 5 times a power of ten, about `target` ticks.
fn tick_step(range: f64, target: f64) -> f64 {
    if !(range > 0.0) {
        return 1.0;
    }
    let raw = range / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn render(series: &[Series], title: &str) -> String {
    let empirical_max = series
        .iter()
        .filter(|s| !s.dashed)
        .flat_map(|s| s.points.iter().map(|p| p.3))
        .fold(0.0f64, f64::max);
    let all_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.3))
        .fold(0.0f64, f64::max);
    // bounds can dwarf the curves; keep them from flattening the data
    let y_max = if empirical_max > 0.0 {
        all_max.min(3.0 * empirical_max)
    } else {
        all_max.max(1.0)
    };
    let x_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .fold(1.0f64, f64::max);
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let sx = |x: f64| LEFT + x / x_max * pw;
    let sy = |y: f64| TOP + ph - y / y_max * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<defs><clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath></defs>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );

    // axes and ticks
    let _ = writeln!(
        out,
        r#"<path d="M{LEFT},{TOP} V{} H{}" fill="none" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw
    );
    let xs = tick_step(x_max, 5.0);
    let mut t = 0.0;
    while t <= x_max * (1.0 + 1e-9) {
        let x = sx(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            fmt_tick(t)
        );
        t += xs;
    }
    let ys = tick_step(y_max, 5.0);
    let mut t = 0.0;
    while t <= y_max * (1.0 + 1e-9) {
        let y = sy(t);
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#dddddd"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT - 5.0,
            LEFT + pw,
            LEFT - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
        t += ys;
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">round</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">cumulative regret</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    let _ = writeln!(out, r#"<g clip-path="url(#plot)">"#);
    for (k, s) in series.iter().enumerate() {
        let color = if s.dashed {
            "#555555"
        } else {
            PALETTE[k % PALETTE.len()]
        };
        if s.points.is_empty() {
            continue;
        }
        if !s.dashed && s.points.iter().any(|p| p.2 < p.3) {
            let mut d = String::new();
            for (i, p) in s.points.iter().enumerate() {
                let _ = write!(
                    d,
                    "{}{:.2},{:.2} ",
                    if i == 0 { "M" } else { "L" },
                    sx(p.0),
                    sy(p.3)
                );
            }
            for p in s.points.iter().rev() {
                let _ = write!(d, "L{:.2},{:.2} ", sx(p.0), sy(p.2));
            }
            let _ = writeln!(
                out,
                r#"<path d="{}Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                d
            );
        }
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1)))
            .collect();
        let dash = if s.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"{dash}/>"#,
            pts.join(" ")
        );
    }
    let _ = writeln!(out, "</g>");

    for (k, s) in series.iter().enumerate() {
        let color = if s.dashed {
            "#555555"
        } else {
            PALETTE[k % PALETTE.len()]
        };
        let y = TOP + 10.0 + 20.0 * k as f64;
        let x = LEFT + pw + 12.0;
        let dash = if s.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            out,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            x + 22.0,
            x + 28.0,
            y + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn write_svg(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Plots long-form rows (as read back from the CSV).
pub fn plot_rows(rows: &[LongRow], path: &Path) -> Result<()> {
    write_svg(
        path,
        &render(&policy_series(rows), "median cumulative regret (IQR band)"),
    )
}

/// Plots an experiment, adding the theoretical bounds when they were requested.
pub fn emit_svg(result: &ExperimentResult, path: &Path) -> Result<()> {
    let rows: Vec<LongRow> = result.long_rows().collect();
    let mut series = policy_series(&rows);
    if let Some(bounds) = &result.bounds {
        let mut xs: Vec<f64> = series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0))
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        series.extend(bound_series(bounds, &xs));
    }
    write_svg(
        path,
        &render(&series, "median cumulative regret (IQR band)"),
    )
}
