//! Parametric sewing-pattern representation: panels of typed edges with a
//! rigid 3D placement, plus stitch pairs joining panel edges.
//!
//! The canonical JSON document format is fixed here: keys sorted, floats
//! printed with at most six fractional digits (trailing zeros trimmed), arrays
//! ordered as in the pattern. `parse_pattern` and `serialize_pattern` are
//! inverse on canonical documents.

use serde::Deserialize;

use crate::curve;
use crate::error::{Error, Result};
use crate::geom::{Quat, Vec2, Vec3};

pub const MAX_PANELS: usize = 64;
pub const MAX_EDGES: usize = 64;
pub const MIN_EDGES: usize = 3;

/// Tolerance for positional loop closure between consecutive edges, in cm.
pub const CLOSURE_TOL: f64 = 1e-6;
/// Stitched edges whose arc lengths differ by more than this fraction warn.
pub const STITCH_LENGTH_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Line,
    Quad,
    Cubic,
    Arc,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Line => "line",
            EdgeKind::Quad => "quad",
            EdgeKind::Cubic => "cubic",
            EdgeKind::Arc => "arc",
        }
    }

    pub fn from_str(s: &str) -> Option<EdgeKind> {
        match s {
            "line" => Some(EdgeKind::Line),
            "quad" => Some(EdgeKind::Quad),
            "cubic" => Some(EdgeKind::Cubic),
            "arc" => Some(EdgeKind::Arc),
            _ => None,
        }
    }

    pub const ALL: [EdgeKind; 4] = [EdgeKind::Line, EdgeKind::Quad, EdgeKind::Cubic, EdgeKind::Arc];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcParams {
    pub radius: f64,
    pub large_arc: bool,
    pub sweep: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub start: usize,
    pub end: usize,
    pub kind: EdgeKind,
    /// Control points in panel-local absolute coordinates; 0, 1, or 2 entries.
    pub control: Vec<Vec2>,
    pub arc: Option<ArcParams>,
}

impl EdgeSpec {
    pub fn line(start: usize, end: usize) -> Self {
        EdgeSpec {
            start,
            end,
            kind: EdgeKind::Line,
            control: Vec::new(),
            arc: None,
        }
    }

    pub fn quad(start: usize, end: usize, ctrl: Vec2) -> Self {
        EdgeSpec {
            start,
            end,
            kind: EdgeKind::Quad,
            control: vec![ctrl],
            arc: None,
        }
    }

    pub fn cubic(start: usize, end: usize, c1: Vec2, c2: Vec2) -> Self {
        EdgeSpec {
            start,
            end,
            kind: EdgeKind::Cubic,
            control: vec![c1, c2],
            arc: None,
        }
    }

    pub fn arc(start: usize, end: usize, radius: f64, large_arc: bool, sweep: bool) -> Self {
        EdgeSpec {
            start,
            end,
            kind: EdgeKind::Arc,
            control: Vec::new(),
            arc: Some(ArcParams {
                radius,
                large_arc,
                sweep,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub name: String,
    pub vertices: Vec<Vec2>,
    pub edges: Vec<EdgeSpec>,
    pub rotation: Quat,
    pub translation: Vec3,
}

impl Panel {
    pub fn vertex(&self, i: usize) -> Vec2 {
        self.vertices[i]
    }

    /// Largest pairwise distance between the panel's vertices.
    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.vertices.len() {
            for j in (i + 1)..self.vertices.len() {
                d = d.max(self.vertices[i].dist(self.vertices[j]));
            }
        }
        d
    }
}

/// (panel index, edge index) reference into a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeRef {
    pub panel: usize,
    pub edge: usize,
}

/// Unordered pair of stitched edges, stored canonically with `first < second`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Stitch {
    pub first: EdgeRef,
    pub second: EdgeRef,
}

impl Stitch {
    pub fn new(a: EdgeRef, b: EdgeRef) -> Self {
        if a <= b {
            Stitch { first: a, second: b }
        } else {
            Stitch { first: b, second: a }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SewingPattern {
    pub panels: Vec<Panel>,
    pub stitches: Vec<Stitch>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub code: String,
    pub message: String,
    pub location: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, code: &str, message: String, location: String) {
        self.errors.push(Finding {
            code: code.to_string(),
            message,
            location,
        });
    }

    fn warning(&mut self, code: &str, message: String, location: String) {
        self.warnings.push(Finding {
            code: code.to_string(),
            message,
            location,
        });
    }

    pub fn to_json(&self) -> serde_json::Value {
        let fold = |fs: &[Finding]| {
            fs.iter()
                .map(|f| {
                    serde_json::json!({
                        "code": f.code,
                        "message": f.message,
                        "location": f.location,
                    })
                })
                .collect::<Vec<_>>()
        };
        serde_json::json!({
            "valid": self.is_valid(),
            "errors": fold(&self.errors),
            "warnings": fold(&self.warnings),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternStats {
    pub panel_count: usize,
    pub edge_counts: Vec<usize>,
    pub stitch_count: usize,
}

pub fn pattern_stats(p: &SewingPattern) -> PatternStats {
    PatternStats {
        panel_count: p.panels.len(),
        edge_counts: p.panels.iter().map(|pl| pl.edges.len()).collect(),
        stitch_count: p.stitches.len(),
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcDoc {
    radius: f64,
    large_arc: bool,
    sweep: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    start: usize,
    end: usize,
    kind: String,
    #[serde(default)]
    control: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    arc: Option<ArcDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PanelDoc {
    name: String,
    rotation: [f64; 4],
    translation: [f64; 3],
    vertices: Vec<[f64; 2]>,
    edges: Vec<EdgeDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternDoc {
    panels: Vec<PanelDoc>,
    #[serde(default)]
    stitches: Vec<[[usize; 2]; 2]>,
}

/// Parse a pattern-JSON document, canonicalize stitch ordering, and validate.
pub fn parse_pattern(text: &str) -> Result<SewingPattern> {
    let pattern = parse_pattern_unchecked(text)?;
    let report = validate_pattern(&pattern);
    if let Some(err) = report.errors.first() {
        return Err(Error::Invariant(format!(
            "{} at {}: {}",
            err.code, err.location, err.message
        )));
    }
    Ok(pattern)
}

/// Parse without running the validator, so callers can report the full
/// finding list themselves. Schema and finiteness checks still apply.
pub fn parse_pattern_unchecked(text: &str) -> Result<SewingPattern> {
    let doc: PatternDoc =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let mut panels = Vec::with_capacity(doc.panels.len());
    for pd in doc.panels {
        let mut edges = Vec::with_capacity(pd.edges.len());
        for ed in pd.edges {
            let kind = EdgeKind::from_str(&ed.kind)
                .ok_or_else(|| Error::Schema(format!("unknown edge kind {:?}", ed.kind)))?;
            edges.push(EdgeSpec {
                start: ed.start,
                end: ed.end,
                kind,
                control: ed
                    .control
                    .unwrap_or_default()
                    .iter()
                    .map(|c| Vec2::new(c[0], c[1]))
                    .collect(),
                arc: ed.arc.map(|a| ArcParams {
                    radius: a.radius,
                    large_arc: a.large_arc,
                    sweep: a.sweep,
                }),
            });
        }
        panels.push(Panel {
            name: pd.name,
            vertices: pd.vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect(),
            edges,
            rotation: Quat::new(
                pd.rotation[0],
                pd.rotation[1],
                pd.rotation[2],
                pd.rotation[3],
            ),
            translation: Vec3::new(pd.translation[0], pd.translation[1], pd.translation[2]),
        });
    }
    let stitches = doc
        .stitches
        .iter()
        .map(|s| {
            Stitch::new(
                EdgeRef {
                    panel: s[0][0],
                    edge: s[0][1],
                },
                EdgeRef {
                    panel: s[1][0],
                    edge: s[1][1],
                },
            )
        })
        .collect();
    let pattern = SewingPattern { panels, stitches };

    if let Some(f) = first_nonfinite(&pattern) {
        return Err(Error::Numeric(f));
    }
    Ok(pattern)
}

fn first_nonfinite(p: &SewingPattern) -> Option<String> {
    for (i, panel) in p.panels.iter().enumerate() {
        if !panel.rotation.is_finite() || !panel.translation.is_finite() {
            return Some(format!("panel {i} placement"));
        }
        if panel.vertices.iter().any(|v| !v.is_finite()) {
            return Some(format!("panel {i} vertices"));
        }
        for (j, e) in panel.edges.iter().enumerate() {
            if e.control.iter().any(|c| !c.is_finite()) {
                return Some(format!("panel {i} edge {j} control"));
            }
            if let Some(a) = &e.arc {
                if !a.radius.is_finite() {
                    return Some(format!("panel {i} edge {j} arc radius"));
                }
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Serialization

/// Format a float with at most 6 fractional digits, trailing zeros trimmed.
pub fn fmt_float(v: f64) -> String {
    let mut s = format!("{:.6}", v);
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

fn push_vec2_list(out: &mut String, pts: &[Vec2]) {
    out.push('[');
    for (i, p) in pts.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!("[{},{}]", fmt_float(p.x), fmt_float(p.y)));
    }
    out.push(']');
}

/// Serialize a pattern to its canonical JSON document.
pub fn serialize_pattern(p: &SewingPattern) -> String {
    let mut out = String::new();
    out.push_str("{\"panels\":[");
    for (i, panel) in p.panels.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str("{\"edges\":[");
        for (j, e) in panel.edges.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push('{');
            if let Some(a) = &e.arc {
                out.push_str(&format!(
                    "\"arc\":{{\"large_arc\":{},\"radius\":{},\"sweep\":{}}},",
                    a.large_arc,
                    fmt_float(a.radius),
                    a.sweep
                ));
            }
            if !e.control.is_empty() {
                out.push_str("\"control\":");
                push_vec2_list(&mut out, &e.control);
                out.push(',');
            }
            out.push_str(&format!(
                "\"end\":{},\"kind\":\"{}\",\"start\":{}}}",
                e.end,
                e.kind.as_str(),
                e.start
            ));
        }
        out.push_str(&format!("],\"name\":{}", serde_json::to_string(&panel.name).unwrap()));
        out.push_str(&format!(
            ",\"rotation\":[{},{},{},{}]",
            fmt_float(panel.rotation.x),
            fmt_float(panel.rotation.y),
            fmt_float(panel.rotation.z),
            fmt_float(panel.rotation.w)
        ));
        out.push_str(&format!(
            ",\"translation\":[{},{},{}]",
            fmt_float(panel.translation.x),
            fmt_float(panel.translation.y),
            fmt_float(panel.translation.z)
        ));
        out.push_str(",\"vertices\":");
        push_vec2_list(&mut out, &panel.vertices);
        out.push('}');
    }
    out.push_str("],\"stitches\":[");
    for (i, s) in p.stitches.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!(
            "[[{},{}],[{},{}]]",
            s.first.panel, s.first.edge, s.second.panel, s.second.edge
        ));
    }
    out.push_str("]}");
    out
}

// ---------------------------------------------------------------------------
// Validation

pub fn validate_pattern(p: &SewingPattern) -> ValidationReport {
    let mut rep = ValidationReport::default();

    if p.panels.is_empty() || p.panels.len() > MAX_PANELS {
        rep.error(
            "panel_count",
            format!("pattern has {} panels, expected 1..={}", p.panels.len(), MAX_PANELS),
            "pattern".to_string(),
        );
    }

    for (i, panel) in p.panels.iter().enumerate() {
        let loc = |j: Option<usize>| match j {
            Some(j) => format!("panel {i} edge {j}"),
            None => format!("panel {i}"),
        };
        if panel.edges.len() < MIN_EDGES || panel.edges.len() > MAX_EDGES {
            rep.error(
                "edge_count",
                format!(
                    "panel has {} edges, expected {}..={}",
                    panel.edges.len(),
                    MIN_EDGES,
                    MAX_EDGES
                ),
                loc(None),
            );
        }
        if (panel.rotation.norm() - 1.0).abs() > 1e-9 {
            rep.error(
                "rotation_norm",
                format!("rotation norm {} is not 1", panel.rotation.norm()),
                loc(None),
            );
        }

        let mut structural_ok = true;
        for (j, e) in panel.edges.iter().enumerate() {
            if e.start >= panel.vertices.len() || e.end >= panel.vertices.len() {
                rep.error(
                    "vertex_index",
                    format!("edge references vertex out of range ({} vertices)", panel.vertices.len()),
                    loc(Some(j)),
                );
                structural_ok = false;
                continue;
            }
            let expect = match e.kind {
                EdgeKind::Line | EdgeKind::Arc => 0,
                EdgeKind::Quad => 1,
                EdgeKind::Cubic => 2,
            };
            if e.control.len() != expect {
                rep.error(
                    "control_count",
                    format!(
                        "{} edge has {} control points, expected {}",
                        e.kind.as_str(),
                        e.control.len(),
                        expect
                    ),
                    loc(Some(j)),
                );
            }
            match (&e.kind, &e.arc) {
                (EdgeKind::Arc, None) => {
                    rep.error("arc_params", "arc edge missing arc parameters".into(), loc(Some(j)));
                }
                (EdgeKind::Arc, Some(a)) => {
                    let chord = panel.vertex(e.start).dist(panel.vertex(e.end));
                    if a.radius <= 0.0 {
                        rep.error(
                            "arc_radius",
                            format!("arc radius {} must be positive", a.radius),
                            loc(Some(j)),
                        );
                    } else if a.radius < chord / 2.0 - curve::ARC_INFLATE_TOL * chord {
                        rep.error(
                            "arc_radius",
                            format!("arc radius {} < half chord {}", a.radius, chord / 2.0),
                            loc(Some(j)),
                        );
                    }
                }
                (_, Some(_)) => {
                    rep.error(
                        "arc_params",
                        format!("{} edge carries arc parameters", e.kind.as_str()),
                        loc(Some(j)),
                    );
                }
                _ => {}
            }
        }

        // Closure is positional: each edge must end where the next one starts.
        if structural_ok && !panel.edges.is_empty() {
            for j in 0..panel.edges.len() {
                let k = (j + 1) % panel.edges.len();
                let end = panel.vertex(panel.edges[j].end);
                let next_start = panel.vertex(panel.edges[k].start);
                let gap = end.dist(next_start);
                if gap > CLOSURE_TOL {
                    rep.error(
                        "open_loop",
                        format!("open loop: edge {j} ends {gap:.6} cm from edge {k}'s start"),
                        loc(Some(j)),
                    );
                }
            }
        }

        if structural_ok && panel.edges.len() >= MIN_EDGES {
            if let Some((a, b)) = boundary_self_intersects(panel) {
                rep.warning(
                    "self_intersection",
                    format!("boundary segments of edges {a} and {b} intersect"),
                    loc(None),
                );
            }
        }
    }

    let mut seen = std::collections::HashSet::new();
    for (k, s) in p.stitches.iter().enumerate() {
        let loc = format!("stitch {k}");
        let mut refs_ok = true;
        for r in [s.first, s.second] {
            let ok = r.panel < p.panels.len() && p.panels.get(r.panel).map_or(false, |pl| r.edge < pl.edges.len());
            if !ok {
                rep.error(
                    "dangling_stitch",
                    format!("dangling stitch reference (panel {}, edge {})", r.panel, r.edge),
                    loc.clone(),
                );
                refs_ok = false;
            }
        }
        if s.first == s.second {
            rep.error("self_stitch", "stitch joins an edge to itself".into(), loc.clone());
            refs_ok = false;
        }
        if s.first > s.second {
            rep.error("stitch_order", "stitch pair not canonically ordered".into(), loc.clone());
        }
        if refs_ok {
            for r in [s.first, s.second] {
                if !seen.insert(r) {
                    rep.error(
                        "duplicate_stitch_edge",
                        format!("edge (panel {}, edge {}) appears in more than one stitch", r.panel, r.edge),
                        loc.clone(),
                    );
                }
            }
            let la = curve::edge_arc_length(&p.panels[s.first.panel], &p.panels[s.first.panel].edges[s.first.edge]);
            let lb = curve::edge_arc_length(&p.panels[s.second.panel], &p.panels[s.second.panel].edges[s.second.edge]);
            if let (Ok(la), Ok(lb)) = (la, lb) {
                let base = (la + lb) / 2.0;
                if base > 0.0 {
                    let mismatch = (la - lb).abs() / base;
                    if mismatch > STITCH_LENGTH_TOL {
                        rep.warning(
                            "length_mismatch",
                            format!("length mismatch {:.1}%", mismatch * 100.0),
                            loc.clone(),
                        );
                    }
                }
            }
        }
    }

    rep
}

/// Coarse self-intersection test on the discretized boundary.
fn boundary_self_intersects(panel: &Panel) -> Option<(usize, usize)> {
    const N: usize = 8;
    let mut segs: Vec<(usize, Vec2, Vec2)> = Vec::new();
    for (j, e) in panel.edges.iter().enumerate() {
        let Ok(poly) = curve::discretize_edge(panel, e, N) else {
            return None;
        };
        for w in poly.points.windows(2) {
            segs.push((j, w[0], w[1]));
        }
    }
    let n = segs.len();
    for a in 0..n {
        for b in (a + 2)..n {
            if a == 0 && b == n - 1 {
                continue; // closing adjacency
            }
            let (ea, p1, p2) = segs[a];
            let (eb, p3, p4) = segs[b];
            if segments_cross(p1, p2, p3, p4) {
                return Some((ea, eb));
            }
        }
    }
    None
}

fn segments_cross(p1: Vec2, p2: Vec2, p3: Vec2, p4: Vec2) -> bool {
    let d1 = p2.sub(p1);
    let d2 = p4.sub(p3);
    let denom = d1.cross(d2);
    if denom.abs() < 1e-15 {
        return false;
    }
    let t = p3.sub(p1).cross(d2) / denom;
    let u = p3.sub(p1).cross(d1) / denom;
    let eps = 1e-9;
    t > eps && t < 1.0 - eps && u > eps && u < 1.0 - eps
}

// ---------------------------------------------------------------------------

/// A unit square panel with four line edges, identity placement.
/// Widely used as the minimal valid fixture.
pub fn square_panel(name: &str, side: f64) -> Panel {
    Panel {
        name: name.to_string(),
        vertices: vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(side, 0.0),
            Vec2::new(side, side),
            Vec2::new(0.0, side),
        ],
        edges: vec![
            EdgeSpec::line(0, 1),
            EdgeSpec::line(1, 2),
            EdgeSpec::line(2, 3),
            EdgeSpec::line(3, 0),
        ],
        rotation: Quat::IDENTITY,
        translation: Vec3::new(0.0, 0.0, 0.0),
    }
}
