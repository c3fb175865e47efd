//! File formats: plain-text trace files and JSON network files with a
//! canonical writer. Byte-level format descriptions live in docs/formats.md.

use crate::config::SimConfig;
use crate::geometry::{Point, Trace, TraceKind};
use crate::growth::{RunReport, TerminationRecord};
use crate::network::FractureNetwork;
use crate::region::Rect;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

pub const TRACE_FORMAT_VERSION: u32 = 1;
pub const NETWORK_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed row: {msg}")]
    Malformed { path: String, line: usize, msg: String },
    #[error("{path}: unsupported format version {found} (expected {expected})")]
    Version { path: String, found: String, expected: u32 },
    #[error("{path}: empty file")]
    Empty { path: String },
    #[error("{0}: invalid network file: {1}")]
    BadNetwork(String, String),
}

/// Header + polylines loaded from a trace file.
#[derive(Debug, Clone)]
pub struct TraceFile {
    pub units: Option<String>,
    pub domain: Option<Rect>,
    pub traces: Vec<Trace>,
    /// Vertices found outside the declared domain (warned, not rejected).
    pub out_of_domain: usize,
}

/// Parse the plain-text trace format: `#`-prefixed header lines, then one
/// polyline per line as semicolon-separated "x y" vertex pairs.
pub fn load_traces(path: &str) -> Result<TraceFile, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.into(),
        source,
    })?;
    parse_traces(&text, path)
}

pub fn parse_traces(text: &str, path: &str) -> Result<TraceFile, IoError> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| IoError::Empty { path: path.into() })?;
    let expected = format!("# fracsim traces v{TRACE_FORMAT_VERSION}");
    if first.trim() != expected {
        return Err(IoError::Version {
            path: path.into(),
            found: first.trim().to_string(),
            expected: TRACE_FORMAT_VERSION,
        });
    }
    let mut units = None;
    let mut domain = None;
    let mut traces = Vec::new();
    let mut out_of_domain = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(u) = rest.strip_prefix("units ") {
                units = Some(u.trim().to_string());
            } else if let Some(d) = rest.strip_prefix("domain ") {
                let vals: Vec<f64> = d
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| IoError::Malformed {
                        path: path.into(),
                        line: lineno,
                        msg: format!("bad domain header: {e}"),
                    })?;
                if vals.len() != 4 || vals[2] <= vals[0] || vals[3] <= vals[1] {
                    return Err(IoError::Malformed {
                        path: path.into(),
                        line: lineno,
                        msg: "domain header needs `xmin ymin xmax ymax`".into(),
                    });
                }
                domain = Some(Rect::new(vals[0], vals[1], vals[2], vals[3]));
            }
            continue;
        }
        let mut vertices = Vec::new();
        for pair in line.split(';') {
            let mut it = pair.split_whitespace();
            let (x, y) = match (it.next(), it.next(), it.next()) {
                (Some(x), Some(y), None) => (x, y),
                _ => {
                    return Err(IoError::Malformed {
                        path: path.into(),
                        line: lineno,
                        msg: format!("expected `x y`, got \"{pair}\""),
                    })
                }
            };
            let parse = |t: &str| {
                t.parse::<f64>().map_err(|e| IoError::Malformed {
                    path: path.into(),
                    line: lineno,
                    msg: format!("bad number \"{t}\": {e}"),
                })
            };
            let p = Point::new(parse(x)?, parse(y)?).map_err(|e| IoError::Malformed {
                path: path.into(),
                line: lineno,
                msg: e.to_string(),
            })?;
            if let Some(d) = &domain {
                if !d.contains(&p) {
                    out_of_domain += 1;
                }
            }
            vertices.push(p);
        }
        if vertices.len() < 2 {
            return Err(IoError::Malformed {
                path: path.into(),
                line: lineno,
                msg: "polyline needs at least 2 vertices".into(),
            });
        }
        let trace = Trace::from_polyline(&vertices, TraceKind::Known).map_err(|e| {
            IoError::Malformed { path: path.into(), line: lineno, msg: e.to_string() }
        })?;
        traces.push(trace);
    }
    if traces.is_empty() {
        return Err(IoError::Empty { path: path.into() });
    }
    Ok(TraceFile { units, domain, traces, out_of_domain })
}

pub fn save_traces(
    path: &str,
    traces: &[Trace],
    units: Option<&str>,
    domain: Option<Rect>,
) -> Result<(), IoError> {
    let mut out = String::new();
    out.push_str(&format!("# fracsim traces v{TRACE_FORMAT_VERSION}\n"));
    if let Some(u) = units {
        out.push_str(&format!("# units {u}\n"));
    }
    if let Some(d) = domain {
        out.push_str(&format!("# domain {} {} {} {}\n", fmt(d.xmin), fmt(d.ymin), fmt(d.xmax), fmt(d.ymax)));
    }
    for t in traces {
        let verts = t.polyline();
        let row: Vec<String> = verts.iter().map(|p| format!("{} {}", fmt(p.x), fmt(p.y))).collect();
        out.push_str(&row.join("; "));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Converter: two-column vertex CSV, polylines separated by blank lines or a
/// literal `---` marker line.
pub fn parse_vertex_csv(text: &str, path: &str) -> Result<Vec<Trace>, IoError> {
    let mut traces = Vec::new();
    let mut current: Vec<Point> = Vec::new();
    let mut flush = |current: &mut Vec<Point>, lineno: usize| -> Result<(), IoError> {
        if current.len() == 1 {
            return Err(IoError::Malformed {
                path: path.into(),
                line: lineno,
                msg: "polyline needs at least 2 vertices".into(),
            });
        }
        if current.len() >= 2 {
            let t = Trace::from_polyline(current, TraceKind::Known).map_err(|e| {
                IoError::Malformed { path: path.into(), line: lineno, msg: e.to_string() }
            })?;
            traces.push(t);
        }
        current.clear();
        Ok(())
    };
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line == "---" {
            flush(&mut current, lineno)?;
            continue;
        }
        if lineno == 1 && line.to_ascii_lowercase().starts_with("x") {
            continue; // header row
        }
        let mut it = line.split(',');
        let (x, y) = match (it.next(), it.next()) {
            (Some(x), Some(y)) => (x.trim(), y.trim()),
            _ => {
                return Err(IoError::Malformed {
                    path: path.into(),
                    line: lineno,
                    msg: "expected `x,y`".into(),
                })
            }
        };
        let parse = |t: &str| {
            t.parse::<f64>().map_err(|e| IoError::Malformed {
                path: path.into(),
                line: lineno,
                msg: format!("bad number \"{t}\": {e}"),
            })
        };
        current.push(Point::new(parse(x)?, parse(y)?).map_err(|e| IoError::Malformed {
            path: path.into(),
            line: lineno,
            msg: e.to_string(),
        })?);
    }
    flush(&mut current, usize::MAX)?;
    if traces.is_empty() {
        return Err(IoError::Empty { path: path.into() });
    }
    Ok(traces)
}

/// On-disk network file: traces plus run provenance. The writer is canonical
/// (fixed field order, shortest round-trip float formatting), so reloading and
/// re-serializing is byte-identical.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub format_version: u32,
    pub domain: [f64; 4],
    pub rng_seed: u64,
    pub config: Option<SimConfig>,
    pub report: Option<RunReport>,
    pub traces: Vec<NetworkTrace>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkTrace {
    pub kind: TraceKind,
    pub origin: [f64; 2],
    /// Vertices from the side-B tip through the origin to the side-A tip.
    pub vertices: Vec<[f64; 2]>,
    /// Index of the origin within `vertices`.
    pub origin_index: usize,
    pub terminations: Vec<TerminationRecord>,
}

impl NetworkFile {
    pub fn from_network(
        net: &FractureNetwork,
        config: Option<&SimConfig>,
        report: Option<&RunReport>,
    ) -> Self {
        let traces = net
            .traces
            .iter()
            .enumerate()
            .map(|(id, t)| NetworkTrace {
                kind: t.kind,
                origin: [t.origin.x, t.origin.y],
                vertices: t.polyline().iter().map(|p| [p.x, p.y]).collect(),
                origin_index: t.side_b.len(),
                terminations: report
                    .map(|r| {
                        r.terminations
                            .iter()
                            .filter(|rec| rec.trace == id)
                            .copied()
                            .collect()
                    })
                    .unwrap_or_default(),
            })
            .collect();
        NetworkFile {
            format_version: NETWORK_FORMAT_VERSION,
            domain: [net.domain.xmin, net.domain.ymin, net.domain.xmax, net.domain.ymax],
            rng_seed: config.map(|c| c.rng_seed).unwrap_or(0),
            config: config.cloned(),
            report: report.cloned(),
            traces,
        }
    }

    pub fn to_traces(&self) -> Result<Vec<Trace>, IoError> {
        self.traces
            .iter()
            .map(|nt| {
                let verts: Vec<Point> = nt
                    .vertices
                    .iter()
                    .map(|v| Point::new(v[0], v[1]))
                    .collect::<Result<_, _>>()
                    .map_err(|e| IoError::BadNetwork("<network>".into(), e.to_string()))?;
                if verts.len() < 2 {
                    return Err(IoError::BadNetwork(
                        "<network>".into(),
                        "trace with fewer than 2 vertices".into(),
                    ));
                }
                let mut t = Trace::from_polyline(&verts, nt.kind)
                    .map_err(|e| IoError::BadNetwork("<network>".into(), e.to_string()))?;
                // Restore the bilateral split at the stored origin.
                if nt.origin_index > 0 && nt.origin_index < verts.len() {
                    let all = t.side_a;
                    let (b, a) = all.split_at(nt.origin_index);
                    t.side_b = b
                        .iter()
                        .rev()
                        .map(|s| crate::geometry::Segment::new(s.end, s.start).unwrap())
                        .collect();
                    t.side_a = a.to_vec();
                    t.origin = verts[nt.origin_index];
                }
                Ok(t)
            })
            .collect()
    }

    pub fn canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }
}

pub fn save_network(
    path: &str,
    net: &FractureNetwork,
    config: Option<&SimConfig>,
    report: Option<&RunReport>,
) -> Result<(), IoError> {
    let file = NetworkFile::from_network(net, config, report);
    write_atomic(path, file.canonical_json().as_bytes())
}

pub fn load_network(path: &str) -> Result<NetworkFile, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.into(),
        source,
    })?;
    let nf: NetworkFile = serde_json::from_str(&text)
        .map_err(|e| IoError::BadNetwork(path.into(), e.to_string()))?;
    if nf.format_version != NETWORK_FORMAT_VERSION {
        return Err(IoError::Version {
            path: path.into(),
            found: nf.format_version.to_string(),
            expected: NETWORK_FORMAT_VERSION,
        });
    }
    Ok(nf)
}

fn fmt(v: f64) -> String {
    // Shortest representation that parses back exactly.
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

fn write_atomic(path: &str, bytes: &[u8]) -> Result<(), IoError> {
    let wrap = |source: std::io::Error| IoError::File { path: path.into(), source };
    if let Some(parent) = Path::new(path).parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(wrap)?;
        }
    }
    let mut f = std::fs::File::create(path).map_err(wrap)?;
    f.write_all(bytes).map_err(wrap)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_vertex_polyline_loads() {
        let text = "# fracsim traces v1\n0 0; 0 10\n";
        let tf = parse_traces(text, "mem").unwrap();
        assert_eq!(tf.traces.len(), 1);
        let seg = &tf.traces[0].side_a[0];
        assert!((seg.azimuth - 0.0).abs() < 1e-12);
        assert!((seg.length - 10.0).abs() < 1e-12);
    }

    #[test]
    fn version_mismatch_and_empty() {
        assert!(matches!(
            parse_traces("# fracsim traces v99\n0 0; 1 1\n", "mem"),
            Err(IoError::Version { .. })
        ));
        assert!(matches!(parse_traces("", "mem"), Err(IoError::Empty { .. })));
        assert!(matches!(
            parse_traces("# fracsim traces v1\n", "mem"),
            Err(IoError::Empty { .. })
        ));
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let text = "# fracsim traces v1\n0 0; 1 1\n0 0; nope 3\n";
        match parse_traces(text, "mem") {
            Err(IoError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected malformed error, got {other:?}"),
        }
        // Single-vertex polyline is malformed too.
        assert!(parse_traces("# fracsim traces v1\n1 2\n", "mem").is_err());
    }

    #[test]
    fn out_of_domain_counts_but_loads() {
        let text = "# fracsim traces v1\n# domain 0 0 10 10\n0 0; 50 50\n";
        let tf = parse_traces(text, "mem").unwrap();
        assert_eq!(tf.out_of_domain, 1);
        assert_eq!(tf.traces.len(), 1);
    }

    #[test]
    fn trace_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.txt");
        let p2 = dir.path().join("b.txt");
        let text = "# fracsim traces v1\n# units m\n0 0; 10.25 5.125; 20.0625 9.5\n3 4; 6 8\n";
        let tf = parse_traces(text, "mem").unwrap();
        save_traces(p1.to_str().unwrap(), &tf.traces, tf.units.as_deref(), tf.domain).unwrap();
        let tf2 = load_traces(p1.to_str().unwrap()).unwrap();
        save_traces(p2.to_str().unwrap(), &tf2.traces, tf2.units.as_deref(), tf2.domain).unwrap();
        let b1 = std::fs::read(&p1).unwrap();
        let b2 = std::fs::read(&p2).unwrap();
        assert_eq!(b1, b2);
        // Vertices preserved exactly.
        for (a, b) in tf.traces.iter().zip(&tf2.traces) {
            for (pa, pb) in a.polyline().iter().zip(b.polyline().iter()) {
                assert!(pa.dist(pb) < 1e-9);
            }
        }
    }

    #[test]
    fn segment_count_identity() {
        // Segments == vertices - polylines.
        let text = "# fracsim traces v1\n0 0; 1 0; 2 1\n5 5; 6 6\n0 9; 4 9; 8 9; 9 9\n";
        let tf = parse_traces(text, "mem").unwrap();
        let vertices: usize = tf.traces.iter().map(|t| t.polyline().len()).sum();
        let segments: usize = tf.traces.iter().map(|t| t.segment_count()).sum();
        assert_eq!(segments, vertices - tf.traces.len());
    }

    #[test]
    fn vertex_csv_converter() {
        let text = "x,y\n0,0\n1,1\n\n5,5\n6,5\n7,4\n";
        let traces = parse_vertex_csv(text, "mem").unwrap();
        assert_eq!(traces.len(), 2);
        assert_eq!(traces[1].segment_count(), 2);
    }

    #[test]
    fn network_round_trip_byte_identical() {
        use crate::config::SimConfig;
        use crate::growth::run_simulation;
        let cfg = SimConfig::from_toml_str(
            r#"
domain = [0.0, 0.0, 500.0, 500.0]
seeds = { mode = "fixed_count", count = 5 }
segment_length = 10.0
angle_mean = 70.0
angle_std = 12.0
sector_radius = 50.0
max_iterations = 10
rng_seed = 7
variogram = { nugget = 1.0, sill = 2.0, range = 50.0 }
"#,
        )
        .unwrap();
        let out = run_simulation(&cfg, &[]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("net.json");
        let p2 = dir.path().join("net2.json");
        save_network(p1.to_str().unwrap(), &out.network, Some(&cfg), Some(&out.report)).unwrap();
        let nf = load_network(p1.to_str().unwrap()).unwrap();
        std::fs::write(&p2, nf.canonical_json()).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());

        // Geometry survives the round trip.
        let traces = nf.to_traces().unwrap();
        for (a, b) in out.network.traces.iter().zip(&traces) {
            assert_eq!(a.segment_count(), b.segment_count());
            for (pa, pb) in a.polyline().iter().zip(b.polyline().iter()) {
                assert!(pa.dist(pb) < 1e-9);
            }
        }
    }
}
