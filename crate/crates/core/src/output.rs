//! Run artifacts: CSV tables, JSON summaries and static SVG charts.
//!
//! Every number written here goes through [`sig6`], so two runs with the same
//! configuration produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{self, HistogramSummary, HurstEstimate, RunningStats};
use crate::decision::Profile;
use crate::error::{Error, Result};
use crate::experiments::SimulationConfig;
use crate::market::SimulationOutput;

/// Formats `x` with 6 significant digits, `%g` style.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x` rounded to 6 significant digits.
pub fn round6(x: f64) -> f64 {
    sig6(x).parse().unwrap_or(x)
}

/// Rounds every float in a JSON tree to 6 significant digits.
fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round6).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}

pub fn index_csv(index: &[f64]) -> String {
    let mut out = String::from("step,index\n");
    for (t, v) in index.iter().enumerate() {
        let _ = writeln!(out, "{t},{}", sig6(*v));
    }
    out
}

pub fn agents_csv(out: &SimulationOutput) -> String {
    let mut s = String::from("id,profile,degree,cash,shares,wealth\n");
    for a in &out.agents {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            a.id,
            a.profile,
            a.degree,
            sig6(a.cash),
            a.shares,
            sig6(a.wealth)
        );
    }
    s
}

pub fn returns_csv(out: &SimulationOutput) -> String {
    let mut s = String::from("step,agent_id,profile,r\n");
    for r in &out.return_samples {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.step,
            r.agent,
            out.agents[r.agent as usize].profile,
            sig6(f64::from(r.r))
        );
    }
    s
}

/// Statistics derived from one run's output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunAnalysis {
    pub hurst: std::result::Result<HurstEstimate, String>,
    /// Exact moments over every post-warm-up return, per profile.
    pub return_moments: [RunningStats; 3],
    /// Histograms of the sampled returns, per profile.
    pub return_histograms: [std::result::Result<HistogramSummary, String>; 3],
    /// Interdecile range of all sampled returns pooled.
    pub pooled_interdecile_range: Option<f64>,
}

impl RunAnalysis {
    pub fn of(out: &SimulationOutput) -> Self {
        let histograms = Profile::ALL.map(|p| {
            analysis::return_histogram(&out.sampled_returns(p)).map_err(|e| e.to_string())
        });
        let pooled: Vec<f64> = out.return_samples.iter().map(|s| f64::from(s.r)).collect();
        RunAnalysis {
            hurst: analysis::hurst_rs(&out.index).map_err(|e| e.to_string()),
            return_moments: out.return_stats,
            return_histograms: histograms,
            pooled_interdecile_range: (!pooled.is_empty())
                .then(|| analysis::interdecile_range(&pooled)),
        }
    }

    pub fn to_json(&self) -> Value {
        let per_profile = |f: &dyn Fn(usize) -> Value| -> Value {
            Profile::ALL
                .iter()
                .map(|p| (p.as_str().to_string(), f(p.index())))
                .collect::<serde_json::Map<_, _>>()
                .into()
        };
        let err_or = |r: &std::result::Result<Value, String>| match r {
            Ok(v) => v.clone(),
            Err(e) => json!({ "error": e }),
        };
        let mut v = json!({
            "hurst": err_or(&self.hurst.as_ref().map(to_json).map_err(Clone::clone)),
            "return_moments": per_profile(&|i| {
                let s = &self.return_moments[i];
                json!({ "count": s.count, "mean": s.mean, "sd": s.sd(), "sem": s.sem() })
            }),
            "return_histograms": per_profile(&|i| {
                err_or(&self.return_histograms[i].as_ref().map(to_json).map_err(Clone::clone))
            }),
            "pooled_interdecile_range": self.pooled_interdecile_range,
        });
        round_json(&mut v);
        v
    }
}

pub fn summary_json(out: &SimulationOutput, analysis: &RunAnalysis) -> Value {
    let stats = out.wealth_stats();
    let wealth: serde_json::Map<String, Value> = Profile::ALL
        .iter()
        .map(|p| {
            let v = match stats[p.index()] {
                Some(s) => json!({ "mean": s.mean, "sd": s.sd, "count": s.count }),
                None => Value::Null,
            };
            (p.as_str().to_string(), v)
        })
        .collect();
    let degrees: Vec<usize> = out.agents.iter().map(|a| a.degree).collect();
    let degree_fit = match degree_fit(&degrees) {
        Some((slope, r2)) => json!({ "exponent": slope, "r2": r2 }),
        None => Value::Null,
    };
    let fits: serde_json::Map<String, Value> = Profile::ALL
        .iter()
        .map(|p| {
            let v = match &analysis.return_histograms[p.index()] {
                Ok(h) => json!({ "gaussian_r2": h.gaussian.r2, "mean": h.mean, "sd": h.sd }),
                Err(_) => Value::Null,
            };
            (p.as_str().to_string(), v)
        })
        .collect();
    let mut body = json!({
        "seed": out.config.seed,
        "steps_run": out.index.len() - 1,
        "final_index": out.index.last().copied(),
        "network": {
            "checksum": format!("{:016x}", out.network_checksum),
            "hub": out.hub,
            "hub_degree": out.hub.map(|h| out.agents[h].degree),
            "degree_fit": degree_fit,
        },
        "wealth": wealth,
        "hub_wealth": out.hub_wealth(),
        "hurst": analysis.hurst.as_ref().ok().map(|h| h.h),
        "return_fits": fits,
        "diagnostics": to_json(&out.diagnostics),
    });
    round_json(&mut body);
    // The config echo keeps inputs exactly as given.
    body["config"] = to_json(&out.config);
    body
}

fn degree_fit(degrees: &[usize]) -> Option<(f64, f64)> {
    crate::network::fit_degree_exponent(degrees).ok().map(|f| (f.slope, f.r2))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value");
    s.push('\n');
    s
}

/// Deterministic directory name for a run of `command` under `config`.
pub fn run_dir_name(command: &str, config: &SimulationConfig) -> String {
    let text = config.to_toml();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{command}-seed{}-{:08x}", config.seed, h as u32)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

/// Writes the CSVs, `summary.json`, `analysis.json` and `config.toml` of one
/// run into `dir`, creating it if needed.
pub fn write_run(dir: &Path, out: &SimulationOutput) -> Result<RunAnalysis> {
    fs::create_dir_all(dir)?;
    let analysis = RunAnalysis::of(out);
    write(dir, "config.toml", &out.config.to_toml())?;
    write(dir, "index.csv", &index_csv(&out.index))?;
    write(dir, "agents.csv", &agents_csv(out))?;
    write(dir, "returns.csv", &returns_csv(out))?;
    write(dir, "summary.json", &pretty(&summary_json(out, &analysis)))?;
    write(dir, "analysis.json", &pretty(&analysis.to_json()))?;
    Ok(analysis)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut v = to_json(value);
    round_json(&mut v);
    fs::write(path, pretty(&v))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Reading back run artifacts

fn csv_rows(text: &str, header: &str) -> Result<Vec<Vec<String>>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == header => {}
        other => {
            return Err(Error::Parse(format!(
                "expected header `{header}`, found `{}`",
                other.unwrap_or("")
            )))
        }
    }
    Ok(lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|f| f.trim().to_string()).collect())
        .collect())
}

fn num(field: &str, line: usize) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: not a number: `{field}`")))
}

/// Reads the index column of an `index.csv`.
pub fn read_index_csv(text: &str) -> Result<Vec<f64>> {
    csv_rows(text, "step,index")?
        .iter()
        .enumerate()
        .map(|(i, row)| match row.as_slice() {
            [_, v] => num(v, i + 2),
            _ => Err(Error::Parse(format!("line {}: expected 2 fields", i + 2))),
        })
        .collect()
}

/// `(profile, wealth)` pairs from an `agents.csv`.
pub fn read_agents_csv(text: &str) -> Result<Vec<(Profile, f64)>> {
    csv_rows(text, "id,profile,degree,cash,shares,wealth")?
        .iter()
        .enumerate()
        .map(|(i, row)| match row.as_slice() {
            [_, p, _, _, _, w] => Ok((p.parse().map_err(Error::Parse)?, num(w, i + 2)?)),
            _ => Err(Error::Parse(format!("line {}: expected 6 fields", i + 2))),
        })
        .collect()
}

/// `(profile, r)` pairs from a `returns.csv`.
pub fn read_returns_csv(text: &str) -> Result<Vec<(Profile, f64)>> {
    csv_rows(text, "step,agent_id,profile,r")?
        .iter()
        .enumerate()
        .map(|(i, row)| match row.as_slice() {
            [_, _, p, r] => Ok((p.parse().map_err(Error::Parse)?, num(r, i + 2)?)),
            _ => Err(Error::Parse(format!("line {}: expected 4 fields", i + 2))),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// SVG charts

const W: f64 = 720.0;
const H: f64 = 420.0;
const PAD_L: f64 = 70.0;
const PAD_R: f64 = 20.0;
const PAD_T: f64 = 40.0;
const PAD_B: f64 = 50.0;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let (x0, x1) = bounds(xs);
        let (y0, y1) = bounds(ys);
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        PAD_L + (x - self.x0) / (self.x1 - self.x0) * (W - PAD_L - PAD_R)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD_B - (y - self.y0) / (self.y1 - self.y0) * (H - PAD_T - PAD_B)
    }
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = it
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn header(title: &str, xlabel: &str, ylabel: &str, f: &Frame) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>
<line x1="{PAD_L}" y1="{}" x2="{}" y2="{}" stroke="black"/>
<line x1="{PAD_L}" y1="{PAD_T}" x2="{PAD_L}" y2="{}" stroke="black"/>
<text x="{}" y="{}" text-anchor="middle">{}</text>
<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>
"#,
        W / 2.0,
        escape(title),
        H - PAD_B,
        W - PAD_R,
        H - PAD_B,
        H - PAD_B,
        (PAD_L + W - PAD_R) / 2.0,
        H - 12.0,
        escape(xlabel),
        H / 2.0,
        H / 2.0,
        escape(ylabel),
    );
    for i in 0..=4 {
        let fx = f.x0 + (f.x1 - f.x0) * i as f64 / 4.0;
        let fy = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            f.px(fx),
            H - PAD_B + 16.0,
            sig_short(fx)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            PAD_L - 6.0,
            f.py(fy) + 4.0,
            sig_short(fy)
        );
    }
    s
}

fn sig_short(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.abs() >= 1e5 || x.abs() < 1e-3 {
        format!("{x:.2e}")
    } else {
        trim_zeros(&format!("{x:.3}")).to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line chart of `ys` against its position.
pub fn line_chart_svg(title: &str, xlabel: &str, ylabel: &str, ys: &[f64]) -> String {
    let f = Frame::new((0..ys.len().max(2)).map(|i| i as f64), ys.iter().copied());
    let mut s = header(title, xlabel, ylabel, &f);
    // Thin very long series to at most ~4000 vertices.
    let step = (ys.len() / 4000).max(1);
    let pts: Vec<String> = ys
        .iter()
        .enumerate()
        .step_by(step)
        .map(|(i, y)| format!("{:.1},{:.1}", f.px(i as f64), f.py(*y)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="{}" stroke-width="1" points="{}"/>"#,
        COLORS[0],
        pts.join(" ")
    );
    s.push_str("</svg>\n");
    s
}

/// Overlaid step histograms, one per labelled series.
pub fn histogram_svg(title: &str, xlabel: &str, series: &[(&str, &HistogramSummary)]) -> String {
    let f = Frame::new(
        series.iter().flat_map(|(_, h)| h.edges.iter().copied()).collect::<Vec<_>>().into_iter(),
        series
            .iter()
            .flat_map(|(_, h)| h.counts.iter().map(|&c| c as f64))
            .chain([0.0])
            .collect::<Vec<_>>()
            .into_iter(),
    );
    let mut s = header(title, xlabel, "count", &f);
    for (k, (label, h)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut pts = vec![format!("{:.1},{:.1}", f.px(h.edges[0]), f.py(0.0))];
        for (i, &c) in h.counts.iter().enumerate() {
            pts.push(format!("{:.1},{:.1}", f.px(h.edges[i]), f.py(c as f64)));
            pts.push(format!("{:.1},{:.1}", f.px(h.edges[i + 1]), f.py(c as f64)));
        }
        pts.push(format!("{:.1},{:.1}", f.px(*h.edges.last().unwrap()), f.py(0.0)));
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            W - PAD_R - 150.0,
            PAD_T + 16.0 * (k as f64 + 1.0),
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Renders `index.svg`, `wealth_hist.svg` and `returns_hist.svg` from the
/// CSVs of a run directory. Returns the paths written.
pub fn plot_run_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let index = read_index_csv(&fs::read_to_string(dir.join("index.csv"))?)?;
    written.push(write(
        dir,
        "index.svg",
        &line_chart_svg("Market index", "step", "index", &index),
    )?);

    let by_profile = |pairs: &[(Profile, f64)]| -> Vec<(Profile, HistogramSummary)> {
        Profile::ALL
            .iter()
            .filter_map(|&p| {
                let xs: Vec<f64> = pairs.iter().filter(|(q, _)| *q == p).map(|(_, x)| *x).collect();
                analysis::return_histogram(&xs).ok().map(|h| (p, h))
            })
            .collect()
    };
    let labelled = |hs: &[(Profile, HistogramSummary)]| -> Vec<(String, HistogramSummary)> {
        hs.iter()
            .map(|(p, h)| (format!("{p} (mean {})", sig_short(h.mean)), h.clone()))
            .collect()
    };

    let agents = read_agents_csv(&fs::read_to_string(dir.join("agents.csv"))?)?;
    let wealth = labelled(&by_profile(&agents));
    if !wealth.is_empty() {
        let refs: Vec<(&str, &HistogramSummary)> = wealth.iter().map(|(l, h)| (l.as_str(), h)).collect();
        written.push(write(
            dir,
            "wealth_hist.svg",
            &histogram_svg("Final wealth by profile", "wealth", &refs),
        )?);
    }

    let returns_path = dir.join("returns.csv");
    if returns_path.exists() {
        let returns = read_returns_csv(&fs::read_to_string(returns_path)?)?;
        let hs = labelled(&by_profile(&returns));
        if !hs.is_empty() {
            let refs: Vec<(&str, &HistogramSummary)> = hs.iter().map(|(l, h)| (l.as_str(), h)).collect();
            written.push(write(
                dir,
                "returns_hist.svg",
                &histogram_svg("Per-step wealth returns by profile", "return", &refs),
            )?);
        }
    }
    Ok(written)
}
