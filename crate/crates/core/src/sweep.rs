//! Parameter sweeps over (κ, N_S) and best-receiver region maps.
//!
//! Sweep files are flat `key = value` lines; `#` starts a comment. Keys:
//!
//! | key | meaning |
//! |---|---|
//! | `preset` | starting grid: `fig3a`, `fig3b` or `fig5` (default `fig3a`) |
//! | `kappa_scale`, `ns_scale` | `log` or `lin` |
//! | `kappa_min`, `kappa_max`, `kappa_points` | reflectivity axis |
//! | `ns_min`, `ns_max`, `ns_points` | signal photon axis |
//! | `n_b`, `k_modes` | background photons, mode pairs |
//! | `opa_gain`, `pc_mu`, `pc_nu` | receiver parameters |
//! | `receivers` | comma list from `dhd, opa, pc, ci` |
//! | `snr_source` | `formula` or `engine` for the QI receivers |

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chernoff::ChernoffCache;
use crate::error::{QiError, Result};
use crate::gaussian::{QiScenario, DEFAULT_OPA_GAIN, DEFAULT_PC_MU, DEFAULT_PC_NU};
use crate::receiver::{parse_receivers, receiver_snr, Receiver, SnrSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisScale {
    Lin,
    Log,
}

impl FromStr for AxisScale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lin" | "linear" => Ok(AxisScale::Lin),
            "log" | "logarithmic" => Ok(AxisScale::Log),
            other => Err(format!("unknown axis scale '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub scale: AxisScale,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn log(min: f64, max: f64, points: usize) -> Self {
        Self { scale: AxisScale::Log, min, max, points }
    }

    pub fn lin(min: f64, max: f64, points: usize) -> Self {
        Self { scale: AxisScale::Lin, min, max, points }
    }

    /// Grid values; the end points are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        if n < 2 {
            return vec![self.min; n];
        }
        let last = (n - 1) as f64;
        (0..n)
            .map(|i| {
                if i == 0 {
                    return self.min;
                }
                if i == n - 1 {
                    return self.max;
                }
                let f = i as f64 / last;
                match self.scale {
                    AxisScale::Lin => self.min + f * (self.max - self.min),
                    AxisScale::Log => (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }

    fn check(&self, name: &str, upper: Option<f64>, problems: &mut Vec<String>) {
        if self.points < 2 {
            problems.push(format!("{name}_points must be >= 2, got {}", self.points));
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            problems.push(format!("{name} range must be finite"));
        } else if !(self.min < self.max) {
            problems.push(format!("{name}_min ({}) must be < {name}_max ({})", self.min, self.max));
        }
        if self.scale == AxisScale::Log && !(self.min > 0.0) {
            problems.push(format!("log axis {name} requires {name}_min > 0, got {}", self.min));
        }
        if self.min < 0.0 {
            problems.push(format!("{name}_min must be >= 0, got {}", self.min));
        }
        if let Some(u) = upper {
            if self.max > u {
                problems.push(format!("{name}_max must be <= {u}, got {}", self.max));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kappa: Axis,
    pub n_s: Axis,
    pub n_b: f64,
    pub k_modes: f64,
    pub opa_gain: f64,
    pub pc_mu: f64,
    pub pc_nu: f64,
    pub receivers: Vec<Receiver>,
    pub snr_source: SnrSource,
}

/// Grid points per axis in the built-in presets.
pub const PRESET_POINTS: usize = 41;

impl SweepSpec {
    /// Built-in grids: `fig3a` (N_B = 30), `fig3b` (N_B = 100), `fig5`.
    pub fn preset(name: &str) -> Option<Self> {
        let fig3 = |n_b| Self {
            kappa: Axis::log(1e-4, 1e-1, PRESET_POINTS),
            n_s: Axis::log(1e-4, 2e-2, PRESET_POINTS),
            n_b,
            k_modes: 1e7,
            opa_gain: DEFAULT_OPA_GAIN,
            pc_mu: DEFAULT_PC_MU,
            pc_nu: DEFAULT_PC_NU,
            receivers: Receiver::ALL.to_vec(),
            snr_source: SnrSource::Formula,
        };
        match name.trim().to_ascii_lowercase().as_str() {
            "fig3a" => Some(fig3(30.0)),
            "fig3b" => Some(fig3(100.0)),
            "fig5" => Some(Self {
                kappa: Axis::log(1e-4, 1.0, PRESET_POINTS),
                n_s: Axis::log(1e-4, 1.0, PRESET_POINTS),
                ..fig3(30.0)
            }),
            _ => None,
        }
    }

    /// Parses a sweep file on top of its preset (default `fig3a`) and
    /// validates it, listing every problem found.
    pub fn parse(text: &str) -> Result<Self> {
        let mut problems = Vec::new();
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => entries.push((lineno + 1, k.trim().to_string(), v.trim().to_string())),
                None => problems.push(format!("line {}: expected 'key = value'", lineno + 1)),
            }
        }
        let preset = entries
            .iter()
            .rev()
            .find(|(_, k, _)| k == "preset")
            .map(|(_, _, v)| v.clone())
            .unwrap_or_else(|| "fig3a".into());
        let mut spec = match Self::preset(&preset) {
            Some(s) => s,
            None => {
                problems.push(format!("preset: unknown preset '{preset}'"));
                Self::preset("fig3a").expect("built-in preset")
            }
        };
        for (lineno, key, value) in &entries {
            if key == "preset" {
                continue;
            }
            if let Err(e) = spec.set(key, value) {
                problems.push(format!("line {lineno}: {e}"));
            }
        }
        if let Err(QiError::Spec(more)) = spec.validate() {
            problems.extend(more);
        }
        if problems.is_empty() {
            Ok(spec)
        } else {
            Err(QiError::Spec(problems))
        }
    }

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let num = || value.parse::<f64>().map_err(|_| format!("{key}: '{value}' is not a number"));
        let count = || value.parse::<usize>().map_err(|_| format!("{key}: '{value}' is not a count"));
        match key {
            "kappa_scale" => self.kappa.scale = value.parse()?,
            "kappa_min" => self.kappa.min = num()?,
            "kappa_max" => self.kappa.max = num()?,
            "kappa_points" => self.kappa.points = count()?,
            "ns_scale" => self.n_s.scale = value.parse()?,
            "ns_min" => self.n_s.min = num()?,
            "ns_max" => self.n_s.max = num()?,
            "ns_points" => self.n_s.points = count()?,
            "n_b" => self.n_b = num()?,
            "k_modes" => self.k_modes = num()?,
            "opa_gain" => self.opa_gain = num()?,
            "pc_mu" => self.pc_mu = num()?,
            "pc_nu" => self.pc_nu = num()?,
            "receivers" => self.receivers = parse_receivers(value).map_err(|e| format!("{key}: {e}"))?,
            "snr_source" => self.snr_source = value.parse().map_err(|e| format!("{key}: {e}"))?,
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        self.kappa.check("kappa", Some(1.0), &mut problems);
        self.n_s.check("ns", None, &mut problems);
        let probe = QiScenario {
            kappa: 0.0,
            n_s: 0.0,
            ..self.scenario(0.0, 0.0)
        };
        if let Err(QiError::Domain(msg)) = probe.validate() {
            problems.extend(msg.split("; ").map(str::to_string));
        }
        if self.receivers.is_empty() {
            problems.push("receivers must name at least one receiver".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(QiError::Spec(problems))
        }
    }

    pub fn scenario(&self, kappa: f64, n_s: f64) -> QiScenario {
        QiScenario {
            kappa,
            n_s,
            n_b: self.n_b,
            k_modes: self.k_modes,
            opa_gain: self.opa_gain,
            pc_mu: self.pc_mu,
            pc_nu: self.pc_nu,
        }
    }
}

/// One grid point of a region map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub kappa: f64,
    pub n_s: f64,
    /// SNR per receiver in [`Receiver::ALL`] order; `None` if not compared.
    pub snr: [Option<f64>; 4],
    pub best: Receiver,
    /// Best SNR over the runner-up, `>= 1`.
    pub margin: f64,
}

impl RegionCell {
    pub fn snr_of(&self, receiver: Receiver) -> Option<f64> {
        self.snr[receiver_slot(receiver)]
    }
}

fn receiver_slot(receiver: Receiver) -> usize {
    Receiver::ALL.iter().position(|&r| r == receiver).expect("listed receiver")
}

/// Winner and margin among the compared receivers. Ties go to the earlier
/// receiver in [`Receiver::ALL`].
pub fn classify(snr: &[Option<f64>; 4]) -> Option<(Receiver, f64)> {
    let mut ranked: Vec<(Receiver, f64)> = Receiver::ALL
        .iter()
        .zip(snr)
        .filter_map(|(&r, v)| v.map(|v| (r, v)))
        .collect();
    if ranked.is_empty() {
        return None;
    }
    // stable sort keeps column order among ties
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (best, top) = ranked[0];
    let margin = match ranked.get(1) {
        None => f64::INFINITY,
        Some(&(_, second)) if second == top => 1.0,
        Some(&(_, second)) => top / second,
    };
    Some((best, margin))
}

/// Region map over a κ-major grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMap {
    pub spec: SweepSpec,
    pub kappas: Vec<f64>,
    pub n_s_values: Vec<f64>,
    /// Row `i * n_s_values.len() + j` holds `(kappas[i], n_s_values[j])`.
    pub cells: Vec<RegionCell>,
}

pub const CSV_HEADER: &str = "kappa,n_s,snr_dhd,snr_opa,snr_pc,snr_ci,best,margin";

fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Evaluates every grid point, in parallel on the current rayon pool.
pub fn run_sweep(spec: &SweepSpec, cache: &ChernoffCache) -> Result<RegionMap> {
    spec.validate()?;
    let kappas = spec.kappa.values();
    let n_s_values = spec.n_s.values();
    let points: Vec<(f64, f64)> = kappas
        .iter()
        .flat_map(|&k| n_s_values.iter().map(move |&n| (k, n)))
        .collect();
    let cells = points
        .par_iter()
        .map(|&(kappa, n_s)| evaluate_cell(spec, cache, kappa, n_s))
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionMap {
        spec: spec.clone(),
        kappas,
        n_s_values,
        cells,
    })
}

fn evaluate_cell(spec: &SweepSpec, cache: &ChernoffCache, kappa: f64, n_s: f64) -> Result<RegionCell> {
    let scenario = spec.scenario(kappa, n_s);
    let mut snr = [None; 4];
    for &r in &spec.receivers {
        let value = if r == Receiver::Ci {
            cache.get(n_s, spec.n_b, kappa, spec.k_modes)?.snr_ci
        } else {
            receiver_snr(r, &scenario, spec.snr_source)?
        };
        snr[receiver_slot(r)] = Some(value);
    }
    let (best, margin) = classify(&snr).expect("receivers validated non-empty");
    Ok(RegionCell { kappa, n_s, snr, best, margin })
}

/// Axis-aligned grid vertex `(i, j)`, cell `(i, j)` spans `[i, i+1] x [j, j+1]`.
type Vertex = (i64, i64);

impl RegionMap {
    pub fn cell(&self, i: usize, j: usize) -> &RegionCell {
        &self.cells[i * self.n_s_values.len() + j]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.cells.len() * 160);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            let _ = write!(out, "{},{}", fmt_float(c.kappa), fmt_float(c.n_s));
            for v in c.snr {
                out.push(',');
                if let Some(v) = v {
                    out.push_str(&fmt_float(v));
                }
            }
            let _ = writeln!(out, ",{},{}", c.best.label(), fmt_float(c.margin));
        }
        out
    }

    /// Number of cells won by `receiver`.
    pub fn count(&self, receiver: Receiver) -> usize {
        self.cells.iter().filter(|c| c.best == receiver).count()
    }

    /// 4-connected components of equal best receiver, largest first.
    pub fn regions(&self) -> Vec<(Receiver, Vec<(usize, usize)>)> {
        let (nk, nn) = (self.kappas.len(), self.n_s_values.len());
        let mut seen = vec![false; nk * nn];
        let mut out = Vec::new();
        for start in 0..nk * nn {
            if seen[start] {
                continue;
            }
            let label = self.cells[start].best;
            let mut stack = vec![start];
            seen[start] = true;
            let mut members = Vec::new();
            while let Some(idx) = stack.pop() {
                let (i, j) = (idx / nn, idx % nn);
                members.push((i, j));
                let mut visit = |ii: usize, jj: usize| {
                    let n = ii * nn + jj;
                    if !seen[n] && self.cells[n].best == label {
                        seen[n] = true;
                        stack.push(n);
                    }
                };
                if i > 0 {
                    visit(i - 1, j);
                }
                if i + 1 < nk {
                    visit(i + 1, j);
                }
                if j > 0 {
                    visit(i, j - 1);
                }
                if j + 1 < nn {
                    visit(i, j + 1);
                }
            }
            members.sort_unstable();
            out.push((label, members));
        }
        out.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.1[0].cmp(&b.1[0])));
        out
    }

    /// Outer boundary of a set of cells as a closed vertex loop.
    fn outline(cells: &[(usize, usize)]) -> Vec<Vertex> {
        let inside: std::collections::HashSet<(i64, i64)> =
            cells.iter().map(|&(i, j)| (i as i64, j as i64)).collect();
        // counter-clockwise cell edges whose neighbour lies outside
        let mut next: HashMap<Vertex, Vec<Vertex>> = HashMap::new();
        for &(i, j) in &inside {
            let sides = [
                ((i, j - 1), (i, j), (i + 1, j)),
                ((i + 1, j), (i + 1, j), (i + 1, j + 1)),
                ((i, j + 1), (i + 1, j + 1), (i, j + 1)),
                ((i - 1, j), (i, j + 1), (i, j)),
            ];
            for (neighbour, a, b) in sides {
                if !inside.contains(&neighbour) {
                    next.entry(a).or_default().push(b);
                }
            }
        }
        for v in next.values_mut() {
            v.sort_unstable();
        }
        let mut loops: Vec<Vec<Vertex>> = Vec::new();
        let mut starts: Vec<Vertex> = next.keys().copied().collect();
        starts.sort_unstable();
        for s in starts {
            while next.get(&s).is_some_and(|v| !v.is_empty()) {
                let mut path = vec![s];
                let mut cur = s;
                let mut prev_dir = (0i64, 0i64);
                loop {
                    let outs = next.get_mut(&cur).expect("edge exists");
                    // at pinch points keep the tightest left turn
                    let pick = (0..outs.len())
                        .max_by_key(|&k| {
                            let d = (outs[k].0 - cur.0, outs[k].1 - cur.1);
                            prev_dir.0 * d.1 - prev_dir.1 * d.0
                        })
                        .expect("non-empty");
                    let to = outs.remove(pick);
                    prev_dir = (to.0 - cur.0, to.1 - cur.1);
                    cur = to;
                    if cur == s {
                        break;
                    }
                    path.push(cur);
                }
                loops.push(path);
            }
        }
        let area = |l: &Vec<Vertex>| -> i64 {
            (0..l.len())
                .map(|k| {
                    let (a, b) = (l[k], l[(k + 1) % l.len()]);
                    a.0 * b.1 - b.0 * a.1
                })
                .sum()
        };
        loops.into_iter().max_by_key(area).unwrap_or_default()
    }

    /// Heatmap with one filled polygon per connected region.
    pub fn to_svg(&self) -> String {
        const CELL: f64 = 12.0;
        const PAD: f64 = 60.0;
        let (nk, nn) = (self.kappas.len() as f64, self.n_s_values.len() as f64);
        let (w, h) = (nk * CELL + 2.0 * PAD, nn * CELL + 2.0 * PAD);
        let px = |v: Vertex| (PAD + v.0 as f64 * CELL, PAD + (nn - v.1 as f64) * CELL);
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(
            out,
            r#"<title>best receiver, N_B = {}, K = {}</title>"#,
            fmt_float(self.spec.n_b),
            fmt_float(self.spec.k_modes)
        );
        for (label, cells) in self.regions() {
            let points: Vec<String> = Self::outline(&cells)
                .into_iter()
                .map(|v| {
                    let (x, y) = px(v);
                    format!("{x},{y}")
                })
                .collect();
            let _ = writeln!(
                out,
                r#"<polygon class="region" data-receiver="{}" data-cells="{}" fill="{}" stroke="black" stroke-width="1" points="{}"/>"#,
                label.label(),
                cells.len(),
                color(label),
                points.join(" ")
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">reflectivity κ ({} to {})</text>"#,
            w / 2.0,
            h - PAD / 3.0,
            fmt_short(self.spec.kappa.min),
            fmt_short(self.spec.kappa.max)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14" transform="rotate(-90 {} {})">signal photons N_S ({} to {})</text>"#,
            PAD / 3.0,
            h / 2.0,
            PAD / 3.0,
            h / 2.0,
            fmt_short(self.spec.n_s.min),
            fmt_short(self.spec.n_s.max)
        );
        for (k, r) in Receiver::ALL.iter().enumerate() {
            let x = PAD + k as f64 * 70.0;
            let _ = writeln!(
                out,
                r#"<rect x="{x}" y="{}" width="12" height="12" fill="{}"/><text x="{}" y="{}" font-size="12">{}</text>"#,
                PAD / 3.0 - 10.0,
                color(*r),
                x + 16.0,
                PAD / 3.0,
                r.label()
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn fmt_short(v: f64) -> String {
    format!("{v:e}")
}

fn color(r: Receiver) -> &'static str {
    match r {
        Receiver::Dhd => "#4c72b0",
        Receiver::Opa => "#dd8452",
        Receiver::Pc => "#55a868",
        Receiver::Ci => "#c44e52",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SweepSpec {
        let mut s = SweepSpec::preset("fig3a").unwrap();
        s.kappa.points = 6;
        s.n_s.points = 5;
        s.receivers = Receiver::QUANTUM.to_vec();
        s
    }

    #[test]
    fn axis_values() {
        let a = Axis::log(1e-4, 1e-1, 4);
        let v = a.values();
        assert_eq!(v[0], 1e-4);
        assert_eq!(v[3], 1e-1);
        assert!((v[1] - 1e-3).abs() < 1e-15);
        let l = Axis::lin(0.0, 1.0, 5).values();
        assert_eq!(l, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn parse_overrides_preset() {
        let spec = SweepSpec::parse(
            "# comment\npreset = fig3b\nkappa_points = 7 # trailing\nreceivers = dhd, pc\n",
        )
        .unwrap();
        assert_eq!(spec.n_b, 100.0);
        assert_eq!(spec.kappa.points, 7);
        assert_eq!(spec.receivers, vec![Receiver::Dhd, Receiver::Pc]);
    }

    #[test]
    fn parse_lists_every_problem() {
        let err = SweepSpec::parse(
            "kappa_points = 1\nns_min = 0\nbogus = 3\nn_b = -1\nopa_gain = x\njunk line\n",
        )
        .unwrap_err();
        let QiError::Spec(list) = err else { panic!("expected spec error") };
        let text = list.join("\n");
        for needle in ["kappa_points", "log axis ns", "unknown key 'bogus'", "n_b", "opa_gain", "line 6"] {
            assert!(text.contains(needle), "missing {needle} in\n{text}");
        }
    }

    #[test]
    fn min_must_be_below_max() {
        let err = SweepSpec::parse("kappa_min = 0.5\nkappa_max = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("kappa_min"));
    }

    #[test]
    fn classify_picks_maximum() {
        let (b, m) = classify(&[Some(2.0), Some(1.0), Some(4.0), None]).unwrap();
        assert_eq!(b, Receiver::Pc);
        assert_eq!(m, 2.0);
        let (b, m) = classify(&[Some(0.0), Some(0.0), None, None]).unwrap();
        assert_eq!((b, m), (Receiver::Dhd, 1.0));
        let (_, m) = classify(&[Some(1.0), None, None, None]).unwrap();
        assert!(m.is_infinite());
        assert!(classify(&[None; 4]).is_none());
    }

    #[test]
    fn sweep_is_kappa_major_and_consistent() {
        let spec = small_spec();
        let map = run_sweep(&spec, &ChernoffCache::new()).unwrap();
        assert_eq!(map.cells.len(), 30);
        assert_eq!(map.cell(1, 0).kappa, map.kappas[1]);
        assert_eq!(map.cell(1, 0).n_s, map.n_s_values[0]);
        for c in &map.cells {
            let best = c.snr_of(c.best).unwrap();
            assert!(c.snr.iter().flatten().all(|&v| v <= best));
            assert!(c.margin >= 1.0);
        }
        let csv = map.to_csv();
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().count(), 31);
        assert!(csv.lines().nth(1).unwrap().ends_with(&format!(",{}", fmt_float(map.cells[0].margin))));
        assert_eq!(csv, run_sweep(&spec, &ChernoffCache::new()).unwrap().to_csv());
    }

    #[test]
    fn outline_of_l_shape() {
        let cells = vec![(0, 0), (1, 0), (0, 1)];
        let loop_ = RegionMap::outline(&cells);
        assert_eq!(loop_.len(), 8);
        let area: i64 = (0..loop_.len())
            .map(|k| {
                let (a, b) = (loop_[k], loop_[(k + 1) % loop_.len()]);
                a.0 * b.1 - b.0 * a.1
            })
            .sum();
        assert_eq!(area, 6);
    }

    #[test]
    fn svg_has_polygon_per_region() {
        let map = run_sweep(&small_spec(), &ChernoffCache::new()).unwrap();
        let svg = map.to_svg();
        assert_eq!(svg.matches("<polygon").count(), map.regions().len());
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
