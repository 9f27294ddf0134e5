//! File formats: CSV tables with a header row and 17 significant digits,
//! and plain-text SVG plots.

use std::fmt::Write as _;
use std::io;

use crate::analysis::Fig2Record;
use crate::dynamics::TrajectoryReport;
use crate::error::Result;
use crate::stability::{strang_boundaries, Axis, CriticalSteplength, RegionGrid, StabilityKind};

/// Scientific notation with 17 significant digits, enough to round-trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer<W: io::Write>(w: W, header: &[&str]) -> io::Result<csv::Writer<W>> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

fn finish<W: io::Write>(mut w: csv::Writer<W>) -> io::Result<()> {
    w.flush()
}

/// Columns `eps, h, semitrace, class`, rows in grid order.
pub fn write_region_csv<W: io::Write>(grid: &RegionGrid, w: W) -> io::Result<()> {
    let mut out = csv_writer(w, &["eps", "h", "semitrace", "class"])?;
    for c in &grid.cells {
        out.write_record([
            fmt_f64(c.eps),
            fmt_f64(c.h),
            fmt_f64(c.semitrace),
            c.kind.as_str().to_string(),
        ])?;
    }
    finish(out)
}

/// Columns `h, alpha_m, beta_m, gamma_m` on the nodes of `h_axis`; nodes
/// outside `(0, m pi)` are skipped.
pub fn write_boundaries_csv<W: io::Write>(m: usize, h_axis: &Axis, w: W) -> Result<()> {
    let mut out = csv_writer(w, &["h", "alpha_m", "beta_m", "gamma_m"]).map_err(io_err)?;
    for h in h_axis.values() {
        let Ok(b) = strang_boundaries(m, h) else {
            continue;
        };
        out.write_record([
            fmt_f64(h),
            fmt_f64(b.alpha_m),
            fmt_f64(b.beta_m),
            fmt_f64(b.gamma_m),
        ])
        .map_err(|e| io_err(e.into()))?;
    }
    finish(out).map_err(io_err)
}

fn io_err(e: io::Error) -> crate::Error {
    crate::Error::OutOfRange(format!("write failed: {e}"))
}

/// Columns `m, h_m`.
pub fn write_hm_table_csv<W: io::Write>(rows: &[CriticalSteplength], w: W) -> io::Result<()> {
    let mut out = csv_writer(w, &["m", "h_m"])?;
    for r in rows {
        out.write_record([r.m.to_string(), fmt_f64(r.h_m)])?;
    }
    finish(out)
}

/// Columns `r, k, eps_star, F, exceptional`.
pub fn write_fig2_csv<W: io::Write>(records: &[Fig2Record], w: W) -> io::Result<()> {
    let mut out = csv_writer(w, &["r", "k", "eps_star", "F", "exceptional"])?;
    for r in records {
        out.write_record([
            fmt_f64(r.r),
            fmt_f64(r.k),
            fmt_f64(r.eps_star),
            fmt_f64(r.f),
            r.exceptional.to_string(),
        ])?;
    }
    finish(out)
}

/// Columns `step, q_1.., p_1..`.
pub fn write_trajectory_csv<W: io::Write>(report: &TrajectoryReport, w: W) -> io::Result<()> {
    let d = report.dim;
    let mut header = vec!["step".to_string()];
    if d == 1 {
        header.extend(["q".to_string(), "p".to_string()]);
    } else {
        header.extend((1..=d).map(|i| format!("q{i}")));
        header.extend((1..=d).map(|i| format!("p{i}")));
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(&header)?;
    for i in 0..report.len() {
        let mut row = vec![i.to_string()];
        row.extend(report.state(i).iter().map(|&x| fmt_f64(x)));
        out.write_record(&row)?;
    }
    out.flush()
}

const PLOT_W: f64 = 640.0;
const PLOT_H: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn kind_color(kind: StabilityKind) -> &'static str {
    match kind {
        StabilityKind::Stable => "#8fb8de",
        StabilityKind::LinearlyUnstable => "#d9534f",
        StabilityKind::ExponentiallyUnstable => "#ffffff",
    }
}

fn axis_labels(
    svg: &mut String,
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    x: (&str, f64, f64),
    y: (&str, f64, f64),
) {
    let _ = write!(
        svg,
        r##"<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#000"/>
<text x="{xm}" y="{yb}" text-anchor="middle" font-size="14">{xl}</text>
<text x="{x0}" y="{yt}" text-anchor="start" font-size="11">{x1:.3}</text>
<text x="{xr}" y="{yt}" text-anchor="end" font-size="11">{x2:.3}</text>
<text x="{xl2}" y="{ym}" text-anchor="middle" font-size="14" transform="rotate(-90 {xl2} {ym})">{yl}</text>
<text x="{xn}" y="{ybot}" text-anchor="end" font-size="11">{y1:.3}</text>
<text x="{xn}" y="{ytop}" text-anchor="end" font-size="11">{y2:.3}</text>
"##,
        xm = x0 + w / 2.0,
        yb = y0 + h + 40.0,
        xl = x.0,
        yt = y0 + h + 16.0,
        x1 = x.1,
        xr = x0 + w,
        x2 = x.2,
        xl2 = x0 - 40.0,
        ym = y0 + h / 2.0,
        yl = y.0,
        xn = x0 - 4.0,
        ybot = y0 + h,
        y1 = y.1,
        ytop = y0 + 10.0,
        y2 = y.2,
    );
}

/// Stability region with `h` across and `eps` upward. Equal neighbouring
/// cells in a row are merged into one rectangle.
pub fn region_svg(grid: &RegionGrid, title: &str) -> String {
    let (nh, ne) = (grid.h_axis.nodes, grid.eps_axis.nodes);
    let (x0, y0) = (MARGIN, MARGIN / 2.0);
    let cw = PLOT_W / nh as f64;
    let ch = PLOT_H / ne as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" shape-rendering="crispEdges">"#,
        PLOT_W + 1.5 * MARGIN,
        PLOT_H + 1.5 * MARGIN
    );
    let _ = writeln!(svg, r#"<title>{}</title>"#, escape(title));
    for i in 0..ne {
        let row = grid.row(i);
        let y = y0 + PLOT_H - (i + 1) as f64 * ch;
        let mut j = 0;
        while j < nh {
            let kind = row[j].kind;
            let start = j;
            while j < nh && row[j].kind == kind {
                j += 1;
            }
            if kind == StabilityKind::ExponentiallyUnstable {
                continue;
            }
            let _ = writeln!(
                svg,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
                x0 + start as f64 * cw,
                y,
                (j - start) as f64 * cw,
                ch,
                kind_color(kind)
            );
        }
    }
    axis_labels(
        &mut svg,
        x0,
        y0,
        PLOT_W,
        PLOT_H,
        ("h", grid.h_axis.start, grid.h_axis.end),
        ("eps", grid.eps_axis.start, grid.eps_axis.end),
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn polyline(
    svg: &mut String,
    pts: &[(f64, f64)],
    frame: (f64, f64, f64, f64),
    xr: (f64, f64),
    yr: (f64, f64),
) {
    let (x0, y0, w, h) = frame;
    let sx = |x: f64| x0 + (x - xr.0) / (xr.1 - xr.0) * w;
    let sy = |y: f64| y0 + h - (y - yr.0) / (yr.1 - yr.0) * h;
    let coords: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y)))
        .collect();
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#1f4e79" stroke-width="1.5"/>"##,
        coords.join(" ")
    );
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo {
        0.05 * (hi - lo)
    } else {
        lo.abs().max(1e-300) * 0.05 + 1e-300
    };
    (lo - pad, hi + pad)
}

type Panel = (&'static str, fn(&Fig2Record) -> f64);

/// Two panels over `r`: `eps*` on the left, `F + 1` on the right, with the
/// exceptional members circled.
pub fn fig2_svg(records: &[Fig2Record], h_star: f64) -> String {
    let pw = PLOT_W / 2.0 - MARGIN / 2.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}">"#,
        PLOT_W + 1.5 * MARGIN,
        PLOT_H + 1.5 * MARGIN
    );
    let _ = writeln!(svg, "<title>three-stage family at h = {h_star}</title>");
    let xr = padded_range(records.iter().map(|r| r.r));
    let panels: [Panel; 2] = [("eps*", |r| r.eps_star), ("F + 1", |r| r.deficit)];
    for (p, (name, value)) in panels.iter().enumerate() {
        let x0 = MARGIN + p as f64 * (pw + MARGIN);
        let y0 = MARGIN / 2.0;
        let yr = padded_range(records.iter().map(value));
        let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.r, value(r))).collect();
        polyline(&mut svg, &pts, (x0, y0, pw, PLOT_H), xr, yr);
        for r in records.iter().filter(|r| r.exceptional) {
            let cx = x0 + (r.r - xr.0) / (xr.1 - xr.0) * pw;
            let cy = y0 + PLOT_H - (value(r) - yr.0) / (yr.1 - yr.0) * PLOT_H;
            let _ = writeln!(
                svg,
                r##"<circle cx="{cx:.3}" cy="{cy:.3}" r="4" fill="none" stroke="#c00"/>"##
            );
        }
        axis_labels(
            &mut svg,
            x0,
            y0,
            pw,
            PLOT_H,
            ("r", xr.0, xr.1),
            (name, yr.0, yr.1),
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::catalog_scheme;
    use crate::stability::scan_region;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, -3.0e-300, std::f64::consts::PI, 1.0 / 3.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(digits.len(), 17);
        }
    }

    #[test]
    fn hm_csv_has_header() {
        let rows = [CriticalSteplength {
            m: 1,
            h_m: std::f64::consts::PI,
        }];
        let mut buf = Vec::new();
        write_hm_table_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "m,h_m\n1,3.1415926535897931e0\n");
    }

    #[test]
    fn region_outputs() {
        let s = catalog_scheme("krk", None).unwrap();
        let g = scan_region(
            &s,
            Axis::new(-1.0, 2.0, 8).unwrap(),
            Axis::new(0.0, 3.0, 8).unwrap(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_region_csv(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 65);
        assert!(text.starts_with("eps,h,semitrace,class\n"));
        let svg = region_svg(&g, "KRK");
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<rect"));
    }

    #[test]
    fn boundaries_skip_out_of_domain() {
        let mut buf = Vec::new();
        write_boundaries_csv(2, &Axis::new(0.0, 8.0, 8).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // h = 0 and h = 7 lie outside (0, 2 pi)
        assert_eq!(text.lines().count(), 1 + 6);
    }
}
