//! Deterministic BoxMesh construction: discretize each panel boundary,
//! triangulate it in 2D, lift it rigidly into 3D, and bridge stitched edge
//! pairs with sample-aligned triangle strips.

use std::collections::HashMap;

use crate::curve;
use crate::error::{Error, Result};
use crate::geom::{Vec2, Vec3};
use crate::pattern::{fmt_float, Panel, SewingPattern};
use crate::polygon::{self, SimplePolygon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceLabel {
    Panel(usize),
    Stitch(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub face_labels: Vec<FaceLabel>,
}

impl BoxMesh {
    pub fn bbox(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::new(f64::MAX, f64::MAX, f64::MAX);
        let mut hi = Vec3::new(f64::MIN, f64::MIN, f64::MIN);
        for v in &self.vertices {
            lo = Vec3::new(lo.x.min(v.x), lo.y.min(v.y), lo.z.min(v.z));
            hi = Vec3::new(hi.x.max(v.x), hi.y.max(v.y), hi.z.max(v.z));
        }
        (lo, hi)
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        triangle_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }
}

pub fn triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    b.sub(a).cross(c.sub(a)).norm() * 0.5
}

/// How many segments each edge is discretized into.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingSpec {
    /// Fixed segment count per edge.
    Count(usize),
    /// Target segment length in cm.
    SegmentLength(f64),
    /// max(panel diameter / 16, 0.5 cm) per panel.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildConfig {
    pub samples_per_edge: SamplingSpec,
    pub face_budget: usize,
    pub stitch_rows: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            samples_per_edge: SamplingSpec::Auto,
            face_budget: 1600,
            stitch_rows: 1,
        }
    }
}

/// Rigidly lift 2D panel-local points into 3D: X = R * (x, y, 0) + T.
pub fn place_panel(panel: &Panel, boundary: &[Vec2]) -> Vec<Vec3> {
    boundary
        .iter()
        .map(|p| {
            panel
                .rotation
                .rotate(Vec3::new(p.x, p.y, 0.0))
                .add(panel.translation)
        })
        .collect()
}

fn target_segment_length(panel: &Panel, spec: SamplingSpec, coarsen: f64) -> Option<f64> {
    match spec {
        SamplingSpec::Count(_) => None,
        SamplingSpec::SegmentLength(l) => Some(l * coarsen),
        SamplingSpec::Auto => Some((panel.diameter() / 16.0).max(0.5) * coarsen),
    }
}

/// Per-panel, per-edge segment counts, with stitched pairs sharing the max.
fn edge_sample_counts(
    p: &SewingPattern,
    cfg: &BuildConfig,
    coarsen: f64,
) -> Result<Vec<Vec<usize>>> {
    let mut counts: Vec<Vec<usize>> = Vec::with_capacity(p.panels.len());
    for panel in &p.panels {
        let mut row = Vec::with_capacity(panel.edges.len());
        for e in &panel.edges {
            let n = match target_segment_length(panel, cfg.samples_per_edge, coarsen) {
                None => {
                    let SamplingSpec::Count(c) = cfg.samples_per_edge else {
                        unreachable!()
                    };
                    ((c as f64 / coarsen).round() as usize).max(1)
                }
                Some(target) => {
                    let len = curve::edge_arc_length(panel, e)?;
                    ((len / target).ceil() as usize).max(1)
                }
            };
            row.push(n);
        }
        counts.push(row);
    }
    for s in &p.stitches {
        let a = counts[s.first.panel][s.first.edge];
        let b = counts[s.second.panel][s.second.edge];
        let n = a.max(b);
        counts[s.first.panel][s.first.edge] = n;
        counts[s.second.panel][s.second.edge] = n;
    }
    Ok(counts)
}

struct PanelMeshPart {
    /// Boundary points in panel-local 2D, edge samples concatenated.
    boundary2: Vec<Vec2>,
    /// boundary index offset of each edge's first sample.
    edge_offsets: Vec<usize>,
    /// segment count per edge.
    edge_counts: Vec<usize>,
    triangles: Vec<[usize; 3]>,
}

fn build_panel_part(panel: &Panel, counts: &[usize]) -> Result<PanelMeshPart> {
    let mut boundary2 = Vec::new();
    let mut edge_offsets = Vec::with_capacity(panel.edges.len());
    for (j, e) in panel.edges.iter().enumerate() {
        edge_offsets.push(boundary2.len());
        let poly = curve::discretize_edge(panel, e, counts[j])?;
        // Last point of each edge is the next edge's first sample.
        boundary2.extend_from_slice(&poly.points[..poly.points.len() - 1]);
    }
    let polygon = SimplePolygon::new(boundary2.clone())?;
    let triangles = polygon::triangulate_polygon(&polygon)?;
    Ok(PanelMeshPart {
        boundary2,
        edge_offsets,
        edge_counts: counts.to_vec(),
        triangles,
    })
}

/// Global boundary-vertex indices of an edge's n+1 samples within a panel.
fn edge_vertex_indices(part: &PanelMeshPart, base: usize, edge: usize) -> Vec<usize> {
    let n = part.edge_counts[edge];
    let off = part.edge_offsets[edge];
    let total = part.boundary2.len();
    (0..=n).map(|k| base + (off + k) % total).collect()
}

fn strip_area(verts: &[Vec3], a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() - 1;
    let mut acc = 0.0;
    for j in 0..n {
        acc += triangle_area(verts[a[j]], verts[b[j]], verts[a[j + 1]]);
        acc += triangle_area(verts[b[j]], verts[b[j + 1]], verts[a[j + 1]]);
    }
    acc
}

fn build_once(p: &SewingPattern, cfg: &BuildConfig, coarsen: f64) -> Result<BoxMesh> {
    let counts = edge_sample_counts(p, cfg, coarsen)?;
    let mut mesh = BoxMesh {
        vertices: Vec::new(),
        faces: Vec::new(),
        face_labels: Vec::new(),
    };
    let mut parts = Vec::with_capacity(p.panels.len());
    let mut bases = Vec::with_capacity(p.panels.len());
    for (i, panel) in p.panels.iter().enumerate() {
        let part = build_panel_part(panel, &counts[i])?;
        let base = mesh.vertices.len();
        mesh.vertices.extend(place_panel(panel, &part.boundary2));
        for t in &part.triangles {
            mesh.faces.push([base + t[0], base + t[1], base + t[2]]);
            mesh.face_labels.push(FaceLabel::Panel(i));
        }
        parts.push(part);
        bases.push(base);
    }

    let (lo, hi) = if mesh.vertices.is_empty() {
        (Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 0.0))
    } else {
        mesh.bbox()
    };
    let diag = hi.sub(lo).norm().max(1e-30);
    let degenerate_floor = 1e-12 * diag * diag;

    for (k, s) in p.stitches.iter().enumerate() {
        let a = edge_vertex_indices(&parts[s.first.panel], bases[s.first.panel], s.first.edge);
        let b = edge_vertex_indices(&parts[s.second.panel], bases[s.second.panel], s.second.edge);
        if a.len() != b.len() {
            return Err(Error::Stitch(format!(
                "stitched edges received unequal sample counts ({} vs {})",
                a.len() - 1,
                b.len() - 1
            )));
        }
        // Pairing orientation: forward or reversed, whichever bridge is smaller.
        let rev: Vec<usize> = b.iter().rev().copied().collect();
        let fwd_area = strip_area(&mesh.vertices, &a, &b);
        let rev_area = strip_area(&mesh.vertices, &a, &rev);
        let b = if rev_area < fwd_area { rev } else { b };

        emit_strip(&mut mesh, &a, &b, cfg.stitch_rows, k, degenerate_floor);
    }
    Ok(mesh)
}

fn emit_strip(
    mesh: &mut BoxMesh,
    a: &[usize],
    b: &[usize],
    rows: usize,
    stitch: usize,
    degenerate_floor: f64,
) {
    let rows = rows.max(1);
    let n = a.len() - 1;
    // Row 0 is edge a, row `rows` is edge b; intermediate rows are new vertices.
    let mut row_indices: Vec<Vec<usize>> = Vec::with_capacity(rows + 1);
    row_indices.push(a.to_vec());
    for r in 1..rows {
        let t = r as f64 / rows as f64;
        let mut row = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let pa = mesh.vertices[a[j]];
            let pb = mesh.vertices[b[j]];
            row.push(mesh.vertices.len());
            mesh.vertices.push(pa.add(pb.sub(pa).scale(t)));
        }
        row_indices.push(row);
    }
    row_indices.push(b.to_vec());

    for r in 0..rows {
        let top = &row_indices[r];
        let bot = &row_indices[r + 1];
        for j in 0..n {
            for tri in [
                [top[j], bot[j], top[j + 1]],
                [bot[j], bot[j + 1], top[j + 1]],
            ] {
                let area = triangle_area(
                    mesh.vertices[tri[0]],
                    mesh.vertices[tri[1]],
                    mesh.vertices[tri[2]],
                );
                if area > degenerate_floor {
                    mesh.faces.push(tri);
                    mesh.face_labels.push(FaceLabel::Stitch(stitch));
                }
            }
        }
    }
}

/// Build a BoxMesh, coarsening the sampling until the face budget is met.
pub fn build_boxmesh(p: &SewingPattern, cfg: &BuildConfig) -> Result<BoxMesh> {
    if cfg.face_budget < 4 {
        return Err(Error::Config(format!(
            "face budget {} < 4",
            cfg.face_budget
        )));
    }
    let mut coarsen = 1.0;
    loop {
        let counts = edge_sample_counts(p, cfg, coarsen)?;
        let mesh = build_once(p, cfg, coarsen)?;
        if mesh.faces.len() <= cfg.face_budget {
            return Ok(mesh);
        }
        if counts.iter().flatten().all(|&n| n == 1) {
            return Err(Error::Budget(format!(
                "minimum sampling still yields {} faces > budget {}",
                mesh.faces.len(),
                cfg.face_budget
            )));
        }
        coarsen *= 2.0;
    }
}

/// Coarsen an over-budget mesh by rebuilding from its source pattern.
pub fn remesh_to_budget(p: &SewingPattern, cfg: &BuildConfig, budget: usize) -> Result<BoxMesh> {
    let cfg = BuildConfig {
        face_budget: budget,
        ..*cfg
    };
    build_boxmesh(p, &cfg)
}

/// Map the mesh bounding box into [-1, 1]^3 with an isotropic scale; the
/// longest axis spans exactly [-1, 1]. Returns (mesh, scale, center) with
/// normalized = (x - center) * scale.
pub fn normalize_mesh(m: &BoxMesh) -> Result<(BoxMesh, f64, Vec3)> {
    if m.vertices.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let (lo, hi) = m.bbox();
    let center = lo.add(hi).scale(0.5);
    let ext = hi.sub(lo);
    let longest = ext.x.max(ext.y).max(ext.z);
    let scale = if longest > 0.0 { 2.0 / longest } else { 1.0 };
    let mut out = m.clone();
    for v in &mut out.vertices {
        *v = v.sub(center).scale(scale);
    }
    Ok((out, scale, center))
}

pub fn denormalize_mesh(m: &BoxMesh, scale: f64, center: Vec3) -> BoxMesh {
    let mut out = m.clone();
    for v in &mut out.vertices {
        *v = v.scale(1.0 / scale).add(center);
    }
    out
}

// ---------------------------------------------------------------------------
// OBJ I/O (triangles only, labels as usemtl groups)

pub fn export_obj(m: &BoxMesh) -> String {
    let mut out = String::new();
    for v in &m.vertices {
        out.push_str(&format!(
            "v {} {} {}\n",
            fmt_float(v.x),
            fmt_float(v.y),
            fmt_float(v.z)
        ));
    }
    let mut current: Option<FaceLabel> = None;
    for (f, label) in m.faces.iter().zip(&m.face_labels) {
        if current != Some(*label) {
            match label {
                FaceLabel::Panel(i) => out.push_str(&format!("usemtl panel_{i}\n")),
                FaceLabel::Stitch(k) => out.push_str(&format!("usemtl stitch_{k}\n")),
            }
            current = Some(*label);
        }
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    out
}

pub fn import_obj(text: &str) -> Result<BoxMesh> {
    let mut mesh = BoxMesh {
        vertices: Vec::new(),
        faces: Vec::new(),
        face_labels: Vec::new(),
    };
    // Unlabeled faces fall into an implicit panel 0 group.
    let mut current = FaceLabel::Panel(0);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut coord = |name: &str| -> Result<f64> {
                    it.next()
                        .ok_or_else(|| {
                            Error::Format(format!("line {}: missing {name}", lineno + 1))
                        })?
                        .parse::<f64>()
                        .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))
                };
                let (x, y, z) = (coord("x")?, coord("y")?, coord("z")?);
                mesh.vertices.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let idx: Vec<&str> = it.collect();
                if idx.len() != 3 {
                    return Err(Error::Format(format!(
                        "line {}: triangles only ({} indices)",
                        lineno + 1,
                        idx.len()
                    )));
                }
                let mut tri = [0usize; 3];
                for (k, token) in idx.iter().enumerate() {
                    let head = token.split('/').next().unwrap();
                    let v: i64 = head
                        .parse()
                        .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
                    if v < 1 || v as usize > mesh.vertices.len() {
                        return Err(Error::Format(format!(
                            "line {}: face index {v} out of range",
                            lineno + 1
                        )));
                    }
                    tri[k] = (v - 1) as usize;
                }
                mesh.faces.push(tri);
                mesh.face_labels.push(current);
            }
            Some("usemtl") => {
                let name = it.next().unwrap_or("");
                current = if let Some(i) = name.strip_prefix("panel_") {
                    FaceLabel::Panel(i.parse().map_err(|_| {
                        Error::Format(format!("line {}: bad material {name}", lineno + 1))
                    })?)
                } else if let Some(k) = name.strip_prefix("stitch_") {
                    FaceLabel::Stitch(k.parse().map_err(|_| {
                        Error::Format(format!("line {}: bad material {name}", lineno + 1))
                    })?)
                } else {
                    return Err(Error::Format(format!(
                        "line {}: unknown material {name}",
                        lineno + 1
                    )));
                };
            }
            _ => {} // comments, empty lines, other records
        }
    }
    Ok(mesh)
}

/// Sum of face areas per label, used by area-conservation checks.
pub fn area_by_label(m: &BoxMesh) -> HashMap<FaceLabel, f64> {
    let mut acc: HashMap<FaceLabel, f64> = HashMap::new();
    for f in 0..m.faces.len() {
        *acc.entry(m.face_labels[f]).or_insert(0.0) += m.face_area(f);
    }
    acc
}
