use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{FrameResult, FrameStatus, HarnessError};
use crate::detectors::DetectorKind;

pub const FRAMES_CSV_HEADER: &str = "k,x_err,y_err,z_err,psi_err,theta_err,phi_err,t_fe,n_miss,n_m,status";
const SUMMARY_CSV_HEADER: &str = "detector,frames,failed,t_fe,n_miss,e_x,e_y,e_z,e_psi,e_theta,e_phi";

/// Chart file stem, axis label and unit for each pose component.
pub const CHART_COMPONENTS: [(&str, &str, &str); 6] = [
    ("x", "x", "m"),
    ("y", "y", "m"),
    ("z", "z", "m"),
    ("psi", "heading ψ", "deg"),
    ("theta", "pitch θ", "deg"),
    ("phi", "roll φ", "deg"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSummary {
    pub detector: DetectorKind,
    pub frames: usize,
    pub failed: usize,
    /// Mean extraction time over all frames, seconds.
    pub mean_t_fe: f64,
    /// Mean number of missed beacons over all frames.
    pub mean_n_miss: f64,
    /// Mean absolute pose error over successful frames, `None` if there were none.
    pub mean_abs_error: Option<[f64; 6]>,
}

impl DetectorSummary {
    pub fn accuracy(&self) -> Result<[f64; 6], HarnessError> {
        self.mean_abs_error.ok_or(HarnessError::EmptyInput("no successful frames"))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Per-detector averages: timing and misses over every frame, pose errors
/// over frames with status `Ok`.
pub fn summarize(results: &[(DetectorKind, Vec<FrameResult>)]) -> Result<Vec<DetectorSummary>, HarnessError> {
    if results.is_empty() {
        return Err(HarnessError::EmptyInput("no detector results"));
    }
    results
        .iter()
        .map(|(kind, frames)| {
            if frames.is_empty() {
                return Err(HarnessError::EmptyInput("detector has no frames"));
            }
            let ok: Vec<&FrameResult> = frames.iter().filter(|f| f.status == FrameStatus::Ok).collect();
            let mean_abs_error = (!ok.is_empty())
                .then(|| std::array::from_fn(|i| mean(ok.iter().map(|f| f.error.to_array()[i].abs()))));
            Ok(DetectorSummary {
                detector: *kind,
                frames: frames.len(),
                failed: frames.len() - ok.len(),
                mean_t_fe: mean(frames.iter().map(|f| f.t_fe)),
                mean_n_miss: mean(frames.iter().map(|f| f.n_miss as f64)),
                mean_abs_error,
            })
        })
        .collect()
}

/// Frame table text; floats use the shortest representation that parses
/// back to the same value.
pub fn write_frames_csv(frames: &[FrameResult]) -> String {
    let mut s = String::from(FRAMES_CSV_HEADER);
    s.push('\n');
    for f in frames {
        let e = f.error;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            f.k, e.x, e.y, e.z, e.psi, e.theta, e.phi, f.t_fe, f.n_miss, f.n_m, f.status
        )
        .unwrap();
    }
    s
}

/// One parsed row of a frame table.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCsvRow {
    pub k: usize,
    pub error: [f64; 6],
    pub t_fe: f64,
    pub n_miss: usize,
    pub n_m: usize,
    pub status: FrameStatus,
}

pub fn parse_frames_csv(text: &str) -> Result<Vec<FrameCsvRow>, HarnessError> {
    let bad = |line: usize, what: &str| HarnessError::Config(format!("frames csv line {line}: {what}"));
    let mut lines = text.lines();
    if lines.next() != Some(FRAMES_CSV_HEADER) {
        return Err(bad(1, "unexpected header"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 11 {
                return Err(bad(i + 2, "expected 11 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 2, "bad number"));
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad(i + 2, "bad count"));
            Ok(FrameCsvRow {
                k: int(f[0])?,
                error: [num(f[1])?, num(f[2])?, num(f[3])?, num(f[4])?, num(f[5])?, num(f[6])?],
                t_fe: num(f[7])?,
                n_miss: int(f[8])?,
                n_m: int(f[9])?,
                status: FrameStatus::parse(f[10]).ok_or_else(|| bad(i + 2, "bad status"))?,
            })
        })
        .collect()
}

pub fn write_summary_csv(summary: &[DetectorSummary]) -> String {
    let mut s = String::from(SUMMARY_CSV_HEADER);
    s.push('\n');
    for d in summary {
        write!(s, "{},{},{},{},{}", d.detector, d.frames, d.failed, d.mean_t_fe, d.mean_n_miss).unwrap();
        match d.mean_abs_error {
            Some(e) => e.iter().for_each(|v| write!(s, ",{v}").unwrap()),
            None => s.push_str(",NA,NA,NA,NA,NA,NA"),
        }
        s.push('\n');
    }
    s
}

fn color(kind: DetectorKind) -> &'static str {
    match kind {
        DetectorKind::Harris => "#1f77b4",
        DetectorKind::Susan => "#2ca02c",
        DetectorKind::Fast => "#d62728",
    }
}

/// Line chart of one error component against frame index, one polyline per
/// detector. Failed frames are left out of the polylines.
pub fn render_error_chart(results: &[(DetectorKind, Vec<FrameResult>)], component: usize) -> String {
    const W: f64 = 720.0;
    const H: f64 = 360.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 50.0;
    let (_, label, unit) = CHART_COMPONENTS[component];

    let value = |f: &FrameResult| f.error.to_array()[component];
    let ok = |f: &&FrameResult| f.status == FrameStatus::Ok;
    let max_k = results.iter().flat_map(|(_, r)| r).map(|f| f.k).max().unwrap_or(0).max(1) as f64;
    let mut span = results.iter().flat_map(|(_, r)| r).filter(ok).map(|f| value(f).abs()).fold(0.0, f64::max);
    if !(span > 0.0 && span.is_finite()) {
        span = 1.0;
    }
    let px = |k: usize| LEFT + (W - LEFT - RIGHT) * k as f64 / max_k;
    let py = |v: f64| TOP + (H - TOP - BOTTOM) * (0.5 - 0.5 * v / span);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#).unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">Estimation error of {label}</text>"#,
        W / 2.0
    )
    .unwrap();
    // axes and zero line
    writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    )
    .unwrap();
    writeln!(s, r##"<line x1="{LEFT}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="#999" stroke-dasharray="4 3"/>"##, py(0.0), W - RIGHT).unwrap();
    for v in [span, 0.0, -span] {
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.3}</text>"#,
            LEFT - 6.0,
            py(v) + 4.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">frame k</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 12.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">error ({unit})</text>"#,
        H / 2.0,
        H / 2.0
    )
    .unwrap();

    for (slot, (kind, frames)) in results.iter().enumerate() {
        let points: Vec<String> =
            frames.iter().filter(ok).map(|f| format!("{:.2},{:.2}", px(f.k), py(value(f)))).collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            color(*kind),
            points.join(" ")
        )
        .unwrap();
        let ly = TOP + 14.0 + 16.0 * slot as f64;
        writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}" font-family="sans-serif" font-size="12" fill="{}">{kind}</text>"#,
            W - RIGHT - 60.0,
            color(*kind)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `frames_<detector>.csv`, `summary.csv` and `error_<component>.svg`.
pub fn emit_reports(
    results: &[(DetectorKind, Vec<FrameResult>)],
    summary: &[DetectorSummary],
    out_dir: impl AsRef<Path>,
) -> Result<(), HarnessError> {
    if results.iter().all(|(_, r)| r.is_empty()) {
        return Err(HarnessError::EmptyInput("no frames to report"));
    }
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir)?;
    for (kind, frames) in results {
        fs::write(dir.join(format!("frames_{kind}.csv")), write_frames_csv(frames))?;
    }
    fs::write(dir.join("summary.csv"), write_summary_csv(summary))?;
    for (i, (stem, _, _)) in CHART_COMPONENTS.iter().enumerate() {
        fs::write(dir.join(format!("error_{stem}.svg")), render_error_chart(results, i))?;
    }
    Ok(())
}
