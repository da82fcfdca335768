//! Static SVG figures.

use std::error::Error;
use std::path::Path;

use plotters::prelude::*;
use tma_core::{EnsembleSummary, SweepPoint, TrialRecord};

type PlotResult = Result<(), Box<dyn Error>>;

const SIZE: (u32, u32) = (900, 650);
const PALETTE: [RGBColor; 4] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
];

fn color(i: usize) -> RGBColor {
    PALETTE[i % PALETTE.len()]
}

fn bounds(points: impl Iterator<Item = (f64, f64)>) -> ((f64, f64), (f64, f64)) {
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for (x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return ((0.0, 1.0), (0.0, 1.0));
    }
    let pad = |a: f64, b: f64| {
        let m = ((b - a) * 0.05).max(1e-9);
        (a - m, b + m)
    };
    (pad(x0, x1), pad(y0, y1))
}

/// Target track with each run's observer path and estimated target track.
pub fn trajectory(path: &Path, records: &[TrialRecord]) -> PlotResult {
    let all = records.iter().flat_map(|r| {
        r.rows
            .iter()
            .flat_map(|row| [(row.p.x, row.p.y), (row.p_o.x, row.p_o.y)])
    });
    let ((x0, x1), (y0, y1)) = bounds(all);
    // equal scaling on both axes
    let half = (x1 - x0).max(y1 - y0) / 2.0;
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("trajectories", ("sans-serif", 22))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(55)
        .build_cartesian_2d(cx - half..cx + half, cy - half..cy + half)?;
    chart
        .configure_mesh()
        .x_desc("x [m]")
        .y_desc("y [m]")
        .draw()?;

    if let Some(first) = records.first() {
        chart
            .draw_series(LineSeries::new(
                first.rows.iter().map(|r| (r.p.x, r.p.y)),
                BLACK.stroke_width(2),
            ))?
            .label("target")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK));
    }
    for (i, rec) in records.iter().enumerate() {
        let c = color(i);
        chart
            .draw_series(LineSeries::new(
                rec.rows.iter().map(|r| (r.p_o.x, r.p_o.y)),
                c,
            ))?
            .label(format!("observer ({})", rec.estimator.name()))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], c));
        let faint = c.mix(0.5);
        chart
            .draw_series(
                rec.rows
                    .iter()
                    .step_by(5)
                    .map(|r| Circle::new((r.p_hat.x, r.p_hat.y), 2, faint.filled())),
            )?
            .label(format!("estimate ({})", rec.estimator.name()))
            .legend(move |(x, y)| Circle::new((x + 10, y), 3, faint.filled()));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()?;
    root.present()?;
    Ok(())
}

/// Mean `e_s` against step index, log scale.
pub fn error_curves(path: &Path, summary: &EnsembleSummary) -> PlotResult {
    let positive = |v: f64| v.max(1e-12);
    let steps = summary.estimators.first().map_or(1, |s| s.mean_e_s.len());
    let ((_, _), (y0, y1)) = bounds(
        summary
            .estimators
            .iter()
            .flat_map(|s| s.mean_e_s.iter().map(|&v| (0.0, positive(v).log10()))),
    );

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(
            format!("mean state error, {} trials", summary.n_trials),
            ("sans-serif", 22),
        )
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(65)
        .build_cartesian_2d(
            0.0..steps as f64,
            (10f64.powf(y0)..10f64.powf(y1)).log_scale(),
        )?;
    chart
        .configure_mesh()
        .x_desc("step k")
        .y_desc("mean e_s")
        .draw()?;
    for (i, s) in summary.estimators.iter().enumerate() {
        let c = color(i);
        chart
            .draw_series(LineSeries::new(
                s.mean_e_s
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| (k as f64, positive(v))),
                c.stroke_width(2),
            ))?
            .label(s.estimator.name())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], c));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()?;
    root.present()?;
    Ok(())
}

/// Position MSE against the swept noise level. The x axis is the bearing
/// noise when it varies, otherwise the position noise on a log scale.
pub fn mse_curves(path: &Path, points: &[SweepPoint]) -> PlotResult {
    let theta_varies = points
        .windows(2)
        .any(|w| w[0].level.sigma_theta_deg != w[1].level.sigma_theta_deg);
    let x_of = |p: &SweepPoint| {
        if theta_varies {
            p.level.sigma_theta_deg
        } else {
            p.level.sigma_p.max(1e-12).log10()
        }
    };
    let positive = |v: f64| v.max(1e-12);
    let kinds: Vec<_> = points
        .first()
        .map(|p| p.summary.estimators.iter().map(|s| s.estimator).collect())
        .unwrap_or_default();
    let ((x0, x1), (y0, y1)) = bounds(points.iter().flat_map(|p| {
        p.summary
            .estimators
            .iter()
            .map(move |s| (x_of(p), positive(s.mse_pos).log10()))
    }));
    let x_desc = if theta_varies {
        "bearing noise sigma_theta [deg]"
    } else {
        "log10 position noise sigma_p [m]"
    };

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("position MSE", ("sans-serif", 22))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(65)
        .build_cartesian_2d(x0..x1, (10f64.powf(y0)..10f64.powf(y1)).log_scale())?;
    chart
        .configure_mesh()
        .x_desc(x_desc)
        .y_desc("MSE [m^2]")
        .draw()?;
    for (i, kind) in kinds.iter().enumerate() {
        let c = color(i);
        let series: Vec<(f64, f64)> = points
            .iter()
            .filter_map(|p| p.summary.get(*kind).map(|s| (x_of(p), positive(s.mse_pos))))
            .collect();
        chart.draw_series(series.iter().map(|&pt| Circle::new(pt, 4, c.filled())))?;
        chart
            .draw_series(LineSeries::new(series, c.stroke_width(2)))?
            .label(kind.name())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], c));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()?;
    root.present()?;
    Ok(())
}
