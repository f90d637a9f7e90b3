//! Mesh tokenization for autoregressive consumption: a direct per-face
//! coordinate scheme (strict bottom-to-top order) and a compressive scheme
//! (blocked coordinates + patchified vertex fans), both with exact
//! detokenizers on canonicalized quantized meshes.
//!
//! The vertical axis is y; canonical vertex order sorts by (y, z, x).

use std::collections::{BTreeMap, HashMap};

use serde::Deserialize;

use crate::boxmesh::BoxMesh;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_TOKENS: usize = 10_000;
pub const DEFAULT_RESOLUTION: u32 = 128;
pub const DEFAULT_BLOCK_SIZE: u32 = 16;

/// Vertex bins stored as (x, y, z) integer triples in [0, resolution)^3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedMesh {
    pub vertices: Vec<[u32; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub resolution: u32,
    /// Faces dropped because quantization collapsed their vertices.
    pub dropped_degenerate: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Direct,
    Compressive,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Direct => "direct",
            Scheme::Compressive => "compressive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeshTokenSequence {
    pub tokens: Vec<u32>,
    pub scheme: Scheme,
    pub resolution: u32,
    /// 0 for the direct scheme.
    pub block_size: u32,
}

impl MeshTokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn vocab_size(&self) -> usize {
        match self.scheme {
            Scheme::Direct => self.resolution as usize + 1,
            Scheme::Compressive => {
                let nb = (self.resolution / self.block_size) as usize;
                let b = self.block_size as usize;
                nb * nb * nb + b * b * b + 2
            }
        }
    }
}

fn sort_key(v: &[u32; 3]) -> (u32, u32, u32) {
    (v[1], v[2], v[0]) // bottom-to-top: y, then z, then x
}

fn rotate_min_first(f: [usize; 3]) -> [usize; 3] {
    let m = *f.iter().min().unwrap();
    if f[0] == m {
        f
    } else if f[1] == m {
        [f[1], f[2], f[0]]
    } else {
        [f[2], f[0], f[1]]
    }
}

/// Sort vertices bottom-to-top, re-index, rotate faces lowest-index-first,
/// sort and dedup the face list.
fn canonicalize(
    vertices: Vec<[u32; 3]>,
    faces: Vec<[usize; 3]>,
    resolution: u32,
    dropped: usize,
) -> QuantizedMesh {
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.sort_by_key(|&i| sort_key(&vertices[i]));
    let mut remap = vec![0usize; vertices.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    let vertices: Vec<[u32; 3]> = order.iter().map(|&i| vertices[i]).collect();
    let mut faces: Vec<[usize; 3]> = faces
        .iter()
        .map(|f| rotate_min_first([remap[f[0]], remap[f[1]], remap[f[2]]]))
        .collect();
    faces.sort();
    faces.dedup();
    QuantizedMesh {
        vertices,
        faces,
        resolution,
        dropped_degenerate: dropped,
    }
}

/// Quantize a normalized mesh ([-1, 1] coordinates) onto an integer grid.
/// bin(x) = clamp(floor((x + 1) / 2 * M), 0, M - 1); duplicates merge and
/// collapsed faces are dropped (counted).
pub fn quantize_mesh(m: &BoxMesh, resolution: u32) -> Result<QuantizedMesh> {
    if resolution < 2 {
        return Err(Error::Config(format!("resolution {resolution} < 2")));
    }
    let res = resolution as f64;
    let bin = |x: f64| -> Result<u32> {
        if !(-1.0 - 1e-6..=1.0 + 1e-6).contains(&x) {
            return Err(Error::Range(format!("coordinate {x} outside [-1, 1]")));
        }
        Ok((((x + 1.0) / 2.0 * res).floor() as i64).clamp(0, resolution as i64 - 1) as u32)
    };
    // Only vertices referenced by faces survive; the tokenized form cannot
    // represent isolated points.
    let mut bin_index: HashMap<[u32; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut vertex_map: HashMap<usize, usize> = HashMap::new();
    for f in &m.faces {
        for &vi in f {
            if let std::collections::hash_map::Entry::Vacant(e) = vertex_map.entry(vi) {
                let v = m.vertices[vi];
                let b = [bin(v.x)?, bin(v.y)?, bin(v.z)?];
                let idx = *bin_index.entry(b).or_insert_with(|| {
                    vertices.push(b);
                    vertices.len() - 1
                });
                e.insert(idx);
            }
        }
    }
    let mut faces = Vec::with_capacity(m.faces.len());
    let mut dropped = 0usize;
    for f in &m.faces {
        let g = [vertex_map[&f[0]], vertex_map[&f[1]], vertex_map[&f[2]]];
        if g[0] == g[1] || g[1] == g[2] || g[0] == g[2] {
            dropped += 1;
        } else {
            faces.push(g);
        }
    }
    Ok(canonicalize(vertices, faces, resolution, dropped))
}

/// Bin centers of a quantized vertex: x = -1 + (bin + 0.5) * 2 / M.
pub fn dequantize_bin(bin: u32, resolution: u32) -> f64 {
    -1.0 + (bin as f64 + 0.5) * 2.0 / resolution as f64
}

// ---------------------------------------------------------------------------
// Direct scheme

/// Nine coordinate tokens per face (three vertices, (y, z, x) each) plus EOS.
pub fn tokenize_mesh_direct(q: &QuantizedMesh, max_tokens: usize) -> Result<MeshTokenSequence> {
    let needed = 9 * q.faces.len() + 1;
    if needed > max_tokens {
        return Err(Error::Length {
            got: needed,
            max: max_tokens,
        });
    }
    let mut tokens = Vec::with_capacity(needed);
    for f in &q.faces {
        for &vi in f {
            let v = q.vertices[vi];
            tokens.extend_from_slice(&[v[1], v[2], v[0]]);
        }
    }
    tokens.push(q.resolution); // EOS
    Ok(MeshTokenSequence {
        tokens,
        scheme: Scheme::Direct,
        resolution: q.resolution,
        block_size: 0,
    })
}

fn detokenize_direct(s: &MeshTokenSequence) -> Result<QuantizedMesh> {
    let eos = s.resolution;
    let n = s.tokens.len();
    if n == 0 || s.tokens[n - 1] != eos {
        return Err(Error::MalformedSequence {
            position: n.saturating_sub(1),
            reason: "sequence must end with EOS".into(),
        });
    }
    let body = &s.tokens[..n - 1];
    if let Some(pos) = body.iter().position(|&t| t >= eos) {
        return Err(Error::MalformedSequence {
            position: pos,
            reason: format!("coordinate token {} out of range", body[pos]),
        });
    }
    if body.len() % 9 != 0 {
        return Err(Error::MalformedSequence {
            position: n - 1,
            reason: format!("truncated face: {} coordinate tokens (not a multiple of 9)", body.len()),
        });
    }
    let mut bin_index: HashMap<[u32; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for chunk in body.chunks(9) {
        let mut tri = [0usize; 3];
        for (k, v9) in chunk.chunks(3).enumerate() {
            let b = [v9[2], v9[0], v9[1]]; // (y, z, x) tokens -> (x, y, z) bins
            tri[k] = *bin_index.entry(b).or_insert_with(|| {
                vertices.push(b);
                vertices.len() - 1
            });
        }
        faces.push(tri);
    }
    Ok(canonicalize(vertices, faces, s.resolution, 0))
}

// ---------------------------------------------------------------------------
// Compressive scheme

struct BlockLayout {
    nb: u32,
    b: u32,
}

impl BlockLayout {
    fn new(resolution: u32, block_size: u32) -> Result<BlockLayout> {
        if block_size == 0 || resolution % block_size != 0 {
            return Err(Error::Config(format!(
                "block size {block_size} does not divide resolution {resolution}"
            )));
        }
        Ok(BlockLayout {
            nb: resolution / block_size,
            b: block_size,
        })
    }

    fn n_blocks(&self) -> u32 {
        self.nb * self.nb * self.nb
    }

    fn n_offsets(&self) -> u32 {
        self.b * self.b * self.b
    }

    fn patch_start(&self) -> u32 {
        self.n_blocks() + self.n_offsets()
    }

    fn eos(&self) -> u32 {
        self.patch_start() + 1
    }

    /// (block id, offset id) of a vertex bin triple (x, y, z).
    fn encode(&self, v: [u32; 3]) -> (u32, u32) {
        let (bx, by, bz) = (v[0] / self.b, v[1] / self.b, v[2] / self.b);
        let (ox, oy, oz) = (v[0] % self.b, v[1] % self.b, v[2] % self.b);
        let block = (by * self.nb + bz) * self.nb + bx;
        let offset = (oy * self.b + oz) * self.b + ox;
        (block, offset)
    }

    fn decode(&self, block: u32, offset: u32) -> [u32; 3] {
        let bx = block % self.nb;
        let bz = (block / self.nb) % self.nb;
        let by = block / (self.nb * self.nb);
        let ox = offset % self.b;
        let oz = (offset / self.b) % self.b;
        let oy = offset / (self.b * self.b);
        [bx * self.b + ox, by * self.b + oy, bz * self.b + oz]
    }
}

/// Block/offset encoding used by the compressive scheme; exposed for
/// exhaustive bijection checks.
pub fn block_offset_encode(v: [u32; 3], resolution: u32, block_size: u32) -> Result<(u32, u32)> {
    Ok(BlockLayout::new(resolution, block_size)?.encode(v))
}

pub fn block_offset_decode(
    block: u32,
    offset: u32,
    resolution: u32,
    block_size: u32,
) -> Result<[u32; 3]> {
    Ok(BlockLayout::new(resolution, block_size)?.decode(block, offset))
}

/// Patchified, blocked tokenization: greedy max-degree patch centers, fan
/// boundary walks, block tokens elided while the block is unchanged.
pub fn tokenize_mesh_compressive(
    q: &QuantizedMesh,
    block_size: u32,
    max_tokens: usize,
) -> Result<MeshTokenSequence> {
    let layout = BlockLayout::new(q.resolution, block_size)?;
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); q.vertices.len()];
    for (fi, f) in q.faces.iter().enumerate() {
        for &v in f {
            incident[v].push(fi);
        }
    }
    let mut visited = vec![false; q.faces.len()];
    let mut unvisited_count: Vec<usize> = incident.iter().map(|fs| fs.len()).collect();
    let mut remaining = q.faces.len();

    let mut tokens: Vec<u32> = Vec::new();
    let mut last_block: Option<u32> = None;
    let emit_vertex = |tokens: &mut Vec<u32>, last_block: &mut Option<u32>, v: [u32; 3]| {
        let (block, offset) = layout.encode(v);
        if *last_block != Some(block) {
            tokens.push(block);
            *last_block = Some(block);
        }
        tokens.push(layout.n_blocks() + offset);
    };

    while remaining > 0 {
        // Center with the most unvisited incident faces; ties -> lowest index.
        let center = (0..q.vertices.len())
            .max_by(|&a, &b| {
                unvisited_count[a]
                    .cmp(&unvisited_count[b])
                    .then(b.cmp(&a))
            })
            .unwrap();
        debug_assert!(unvisited_count[center] > 0);

        // Directed outer edges of the center's unvisited fan, preserving the
        // face winding (center, u, w).
        let mut out_edges: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new(); // u -> [(w, face)]
        let mut in_degree: HashMap<usize, usize> = HashMap::new();
        for &fi in &incident[center] {
            if visited[fi] {
                continue;
            }
            let f = q.faces[fi];
            let (u, w) = if f[0] == center {
                (f[1], f[2])
            } else if f[1] == center {
                (f[2], f[0])
            } else {
                (f[0], f[1])
            };
            out_edges.entry(u).or_default().push((w, fi));
            *in_degree.entry(w).or_insert(0) += 1;
        }
        for targets in out_edges.values_mut() {
            targets.sort();
        }

        // Chain starts: vertices with more out-edges than in-edges; for pure
        // loops, the lowest remaining vertex. Each chain is its own patch.
        loop {
            let start = out_edges
                .iter()
                .find(|(u, ts)| !ts.is_empty() && ts.len() > in_degree.get(u).copied().unwrap_or(0))
                .map(|(u, _)| *u)
                .or_else(|| {
                    out_edges
                        .iter()
                        .find(|(_, ts)| !ts.is_empty())
                        .map(|(u, _)| *u)
                });
            let Some(start) = start else { break };

            tokens.push(layout.patch_start());
            emit_vertex(&mut tokens, &mut last_block, q.vertices[center]);
            emit_vertex(&mut tokens, &mut last_block, q.vertices[start]);
            let mut cur = start;
            while let Some(targets) = out_edges.get_mut(&cur) {
                if targets.is_empty() {
                    break;
                }
                let (next, fi) = targets.remove(0);
                *in_degree.get_mut(&next).unwrap() -= 1;
                visited[fi] = true;
                remaining -= 1;
                for &v in &q.faces[fi] {
                    unvisited_count[v] -= 1;
                }
                emit_vertex(&mut tokens, &mut last_block, q.vertices[next]);
                cur = next;
            }
        }
    }
    tokens.push(layout.eos());
    if tokens.len() > max_tokens {
        return Err(Error::Length {
            got: tokens.len(),
            max: max_tokens,
        });
    }
    Ok(MeshTokenSequence {
        tokens,
        scheme: Scheme::Compressive,
        resolution: q.resolution,
        block_size,
    })
}

fn detokenize_compressive(s: &MeshTokenSequence) -> Result<QuantizedMesh> {
    let layout = BlockLayout::new(s.resolution, s.block_size)?;
    let mut bin_index: HashMap<[u32; 3], usize> = HashMap::new();
    let mut vertices: Vec<[u32; 3]> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut intern = |vertices: &mut Vec<[u32; 3]>, b: [u32; 3]| -> usize {
        *bin_index.entry(b).or_insert_with(|| {
            vertices.push(b);
            vertices.len() - 1
        })
    };

    let mut patch: Vec<usize> = Vec::new();
    let mut patch_pos = 0usize;
    let mut block: Option<u32> = None;
    let mut saw_eos = false;
    let mut in_patch = false;

    let flush = |patch: &mut Vec<usize>, faces: &mut Vec<[usize; 3]>, pos: usize| -> Result<()> {
        if patch.is_empty() {
            return Ok(());
        }
        if patch.len() < 3 {
            return Err(Error::MalformedSequence {
                position: pos,
                reason: format!("truncated patch with {} vertices", patch.len()),
            });
        }
        let center = patch[0];
        for w in patch[1..].windows(2) {
            faces.push([center, w[0], w[1]]);
        }
        patch.clear();
        Ok(())
    };

    for (i, &t) in s.tokens.iter().enumerate() {
        if saw_eos {
            return Err(Error::MalformedSequence {
                position: i,
                reason: "tokens after EOS".into(),
            });
        }
        if t == layout.eos() {
            flush(&mut patch, &mut faces, patch_pos)?;
            saw_eos = true;
        } else if t == layout.patch_start() {
            flush(&mut patch, &mut faces, patch_pos)?;
            in_patch = true;
            patch_pos = i;
        } else if t < layout.n_blocks() {
            if !in_patch {
                return Err(Error::MalformedSequence {
                    position: i,
                    reason: "coordinate token before any PatchStart".into(),
                });
            }
            block = Some(t);
        } else if t < layout.patch_start() {
            if !in_patch {
                return Err(Error::MalformedSequence {
                    position: i,
                    reason: "coordinate token before any PatchStart".into(),
                });
            }
            let Some(block) = block else {
                return Err(Error::MalformedSequence {
                    position: i,
                    reason: "offset token before any block token".into(),
                });
            };
            let v = layout.decode(block, t - layout.n_blocks());
            let idx = intern(&mut vertices, v);
            patch.push(idx);
        } else {
            return Err(Error::MalformedSequence {
                position: i,
                reason: format!("token {t} out of vocabulary"),
            });
        }
    }
    if !saw_eos {
        return Err(Error::MalformedSequence {
            position: s.tokens.len().saturating_sub(1),
            reason: "sequence must end with EOS".into(),
        });
    }
    Ok(canonicalize(vertices, faces, s.resolution, 0))
}

/// Exact inverse of either tokenizer on canonicalized quantized meshes.
pub fn detokenize_mesh(s: &MeshTokenSequence) -> Result<QuantizedMesh> {
    match s.scheme {
        Scheme::Direct => detokenize_direct(s),
        Scheme::Compressive => detokenize_compressive(s),
    }
}

// ---------------------------------------------------------------------------
// Loss

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeLoss {
    pub sum: f64,
    pub per_token: f64,
}

/// Summed cross-entropy of the target tokens under the predicted rows.
pub fn shape_loss(pred: &[Vec<f64>], target: &MeshTokenSequence) -> Result<ShapeLoss> {
    if pred.len() != target.tokens.len() {
        return Err(Error::Shape(format!(
            "{} prediction rows vs {} target tokens",
            pred.len(),
            target.tokens.len()
        )));
    }
    let vocab = target.vocab_size();
    let mut sum = 0.0;
    for (i, row) in pred.iter().enumerate() {
        if row.len() != vocab {
            return Err(Error::Shape(format!(
                "row {i} has width {}, vocab size {vocab}",
                row.len()
            )));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::Shape(format!("row {i} sums to {s}")));
        }
        sum -= row[target.tokens[i] as usize].max(f64::MIN_POSITIVE).ln();
    }
    Ok(ShapeLoss {
        sum,
        per_token: sum / target.tokens.len() as f64,
    })
}

// ---------------------------------------------------------------------------
// Token file format

pub fn write_mesh_token_file(s: &MeshTokenSequence) -> String {
    let mut out = format!(
        "{{\"scheme\":\"{}\",\"resolution\":{},\"block_size\":{},\"tokens\":[",
        s.scheme.as_str(),
        s.resolution,
        s.block_size
    );
    for (i, t) in s.tokens.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&t.to_string());
    }
    out.push_str("]}");
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshTokenDoc {
    scheme: String,
    resolution: u32,
    block_size: u32,
    tokens: Vec<u32>,
}

pub fn read_mesh_token_file(text: &str) -> Result<MeshTokenSequence> {
    let doc: MeshTokenDoc = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let scheme = match doc.scheme.as_str() {
        "direct" => Scheme::Direct,
        "compressive" => Scheme::Compressive,
        other => return Err(Error::Schema(format!("unknown scheme {other:?}"))),
    };
    Ok(MeshTokenSequence {
        tokens: doc.tokens,
        scheme,
        resolution: doc.resolution,
        block_size: doc.block_size,
    })
}
