//! Structured pattern tokenization: a discrete token skeleton
//! (SoG / SoP / name / R / edge-with-stitch-slot / EoP / EoG) with aligned
//! continuous parameter rows, its exact detokenizer, and the associated
//! cross-entropy + L2 training loss.
//!
//! Edge rows use the ten-channel layout (2 end-vertex + 4 control + 3 arc +
//! 1 reserved); pose rows carry quaternion + translation in seven channels.

use std::collections::HashMap;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geom::{Quat, Vec2, Vec3};
use crate::pattern::{ArcParams, EdgeKind, EdgeRef, EdgeSpec, Panel, SewingPattern, Stitch};

pub const STITCH_SLOTS: usize = 128;
pub const PARAM_WIDTH: usize = 10;
pub const POSE_CHANNELS: usize = 7;
pub const EDGE_CHANNELS: usize = 10;

const NUM_SPECIALS: u32 = 5;
const SLOTS_PER_KIND: u32 = (STITCH_SLOTS + 1) as u32; // Free + S0..S127

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Token {
    SoG,
    EoG,
    SoP,
    EoP,
    Pose,
    /// Index into the vocab name list; index == names.len() is UNK_PANEL.
    Name(usize),
    /// Edge of a given kind carrying an optional stitch slot.
    Edge(EdgeKind, Option<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternVocab {
    /// Sorted, unique panel names.
    names: Vec<String>,
}

impl PatternVocab {
    pub fn new(names: &[String]) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Vocab("panel name list is empty".into()));
        }
        let mut sorted = names.to_vec();
        sorted.sort();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateName(w[0].clone()));
            }
        }
        Ok(PatternVocab { names: sorted })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn size(&self) -> usize {
        NUM_SPECIALS as usize + self.names.len() + 1 + 4 * SLOTS_PER_KIND as usize
    }

    fn name_base(&self) -> u32 {
        NUM_SPECIALS
    }

    fn edge_base(&self) -> u32 {
        NUM_SPECIALS + self.names.len() as u32 + 1
    }

    pub fn encode(&self, t: Token) -> u32 {
        match t {
            Token::SoG => 0,
            Token::EoG => 1,
            Token::SoP => 2,
            Token::EoP => 3,
            Token::Pose => 4,
            Token::Name(i) => {
                debug_assert!(i <= self.names.len());
                self.name_base() + i as u32
            }
            Token::Edge(kind, slot) => {
                let k = EdgeKind::ALL.iter().position(|&x| x == kind).unwrap() as u32;
                let s = match slot {
                    None => 0,
                    Some(s) => {
                        debug_assert!(s < STITCH_SLOTS);
                        s as u32 + 1
                    }
                };
                self.edge_base() + k * SLOTS_PER_KIND + s
            }
        }
    }

    pub fn decode(&self, id: u32) -> Option<Token> {
        match id {
            0 => return Some(Token::SoG),
            1 => return Some(Token::EoG),
            2 => return Some(Token::SoP),
            3 => return Some(Token::EoP),
            4 => return Some(Token::Pose),
            _ => {}
        }
        if id < self.edge_base() {
            return Some(Token::Name((id - self.name_base()) as usize));
        }
        let rel = id - self.edge_base();
        if rel >= 4 * SLOTS_PER_KIND {
            return None;
        }
        let kind = EdgeKind::ALL[(rel / SLOTS_PER_KIND) as usize];
        let s = rel % SLOTS_PER_KIND;
        let slot = if s == 0 { None } else { Some((s - 1) as usize) };
        Some(Token::Edge(kind, slot))
    }

    /// Index of a name in the vocab, or the UNK index when absent.
    pub fn name_index(&self, name: &str) -> usize {
        self.names
            .binary_search_by(|n| n.as_str().cmp(name))
            .unwrap_or(self.names.len())
    }

    pub fn name_of(&self, index: usize) -> &str {
        if index < self.names.len() {
            &self.names[index]
        } else {
            "unknown"
        }
    }

    /// Stable content hash of the vocabulary layout.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"patternforge-vocab-v1\n");
        for n in &self.names {
            h.update(n.as_bytes());
            h.update(b"\n");
        }
        h.update(format!("slots={STITCH_SLOTS}\n").as_bytes());
        let d = h.finalize();
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Human-readable id table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str("id\ttoken\n");
        for id in 0..self.size() as u32 {
            let desc = match self.decode(id).unwrap() {
                Token::SoG => "<SoG>".to_string(),
                Token::EoG => "<EoG>".to_string(),
                Token::SoP => "<SoP>".to_string(),
                Token::EoP => "<EoP>".to_string(),
                Token::Pose => "<R>".to_string(),
                Token::Name(i) => format!("name:{}", self.name_of(i)),
                Token::Edge(kind, slot) => match slot {
                    None => format!("edge:{}:free", kind.as_str()),
                    Some(s) => format!("edge:{}:S{s}", kind.as_str()),
                },
            };
            out.push_str(&format!("{id}\t{desc}\n"));
        }
        out
    }
}

/// Build a vocabulary from panel names with a printable id table.
pub fn vocab_spec(names: &[String]) -> Result<(PatternVocab, String)> {
    let v = PatternVocab::new(names)?;
    let table = v.table();
    Ok((v, table))
}

// ---------------------------------------------------------------------------
// Quantization

#[derive(Debug, Clone, PartialEq)]
pub struct QuantConfig {
    pub quantize: bool,
    pub bins: usize,
    pub edge_ranges: [(f64, f64); EDGE_CHANNELS],
    pub pose_ranges: [(f64, f64); POSE_CHANNELS],
}

impl QuantConfig {
    pub fn lossless() -> Self {
        QuantConfig {
            quantize: false,
            ..QuantConfig::quantized(256)
        }
    }

    /// Coordinate channels span [-150, 150] cm, quaternion channels [-1, 1],
    /// flag channels [0, 1].
    pub fn quantized(bins: usize) -> Self {
        assert!(bins >= 2);
        let coord = (-150.0, 150.0);
        let flag = (0.0, 1.0);
        QuantConfig {
            quantize: true,
            bins,
            edge_ranges: [
                coord, coord, coord, coord, coord, coord, coord, flag, flag, flag,
            ],
            pose_ranges: [
                (-1.0, 1.0),
                (-1.0, 1.0),
                (-1.0, 1.0),
                (-1.0, 1.0),
                coord,
                coord,
                coord,
            ],
        }
    }

    fn snap(&self, v: f64, range: (f64, f64), what: &str) -> Result<f64> {
        if !self.quantize {
            return Ok(v);
        }
        let (lo, hi) = range;
        if v < lo || v > hi {
            return Err(Error::Range(format!("{what}: {v} outside [{lo}, {hi}]")));
        }
        let width = (hi - lo) / self.bins as f64;
        let bin = (((v - lo) / width).floor() as i64).clamp(0, self.bins as i64 - 1);
        Ok(lo + (bin as f64 + 0.5) * width)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternTokenSequence {
    pub tokens: Vec<u32>,
    pub params: Vec<[f64; PARAM_WIDTH]>,
}

impl PatternTokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Tokenize

/// Continuous row for one edge: end vertex, control points, arc parameters.
fn edge_row(panel: &Panel, e: &EdgeSpec, q: &QuantConfig) -> Result<[f64; PARAM_WIDTH]> {
    let mut row = [0.0; PARAM_WIDTH];
    let end = panel.vertex(e.end);
    row[0] = end.x;
    row[1] = end.y;
    for (i, c) in e.control.iter().enumerate() {
        row[2 + 2 * i] = c.x;
        row[3 + 2 * i] = c.y;
    }
    if let Some(a) = &e.arc {
        row[6] = a.radius;
        row[7] = if a.large_arc { 1.0 } else { 0.0 };
        row[8] = if a.sweep { 1.0 } else { 0.0 };
    }
    for (i, v) in row.iter_mut().enumerate() {
        *v = q.snap(*v, q.edge_ranges[i], &format!("edge channel {i}"))?;
    }
    Ok(row)
}

fn pose_row(panel: &Panel, q: &QuantConfig) -> Result<[f64; PARAM_WIDTH]> {
    let mut row = [0.0; PARAM_WIDTH];
    let vals = [
        panel.rotation.x,
        panel.rotation.y,
        panel.rotation.z,
        panel.rotation.w,
        panel.translation.x,
        panel.translation.y,
        panel.translation.z,
    ];
    for i in 0..POSE_CHANNELS {
        row[i] = q.snap(vals[i], q.pose_ranges[i], &format!("pose channel {i}"))?;
    }
    Ok(row)
}

pub fn tokenize_pattern(
    p: &SewingPattern,
    v: &PatternVocab,
    q: &QuantConfig,
) -> Result<PatternTokenSequence> {
    if p.stitches.len() > STITCH_SLOTS {
        return Err(Error::Vocab(format!(
            "{} stitches exceed {} slots",
            p.stitches.len(),
            STITCH_SLOTS
        )));
    }
    // Which stitch does each edge belong to?
    let mut edge_stitch: HashMap<EdgeRef, usize> = HashMap::new();
    for (k, s) in p.stitches.iter().enumerate() {
        edge_stitch.insert(s.first, k);
        edge_stitch.insert(s.second, k);
    }
    // Slots assigned by order of first appearance in the panel/edge walk.
    let mut stitch_slot: HashMap<usize, usize> = HashMap::new();
    let mut next_slot = 0usize;

    let zero = [0.0; PARAM_WIDTH];
    let mut tokens = vec![v.encode(Token::SoG)];
    let mut params = vec![zero];
    for (i, panel) in p.panels.iter().enumerate() {
        tokens.push(v.encode(Token::SoP));
        params.push(zero);
        tokens.push(v.encode(Token::Name(v.name_index(&panel.name))));
        params.push(zero);
        tokens.push(v.encode(Token::Pose));
        params.push(pose_row(panel, q)?);
        for (j, e) in panel.edges.iter().enumerate() {
            let slot = edge_stitch.get(&EdgeRef { panel: i, edge: j }).map(|&k| {
                *stitch_slot.entry(k).or_insert_with(|| {
                    let s = next_slot;
                    next_slot += 1;
                    s
                })
            });
            tokens.push(v.encode(Token::Edge(e.kind, slot)));
            params.push(edge_row(panel, e, q)?);
        }
        tokens.push(v.encode(Token::EoP));
        params.push(zero);
    }
    tokens.push(v.encode(Token::EoG));
    params.push(zero);
    Ok(PatternTokenSequence { tokens, params })
}

// ---------------------------------------------------------------------------
// Detokenize

fn malformed(position: usize, reason: impl Into<String>) -> Error {
    Error::MalformedSequence {
        position,
        reason: reason.into(),
    }
}

/// Exact inverse of `tokenize_pattern` up to quantization. Panels are rebuilt
/// in token order with vertices in edge order; stitches come from matched
/// slots. With `lenient` set, slots that appear only once are dropped with a
/// warning instead of failing.
pub fn detokenize_pattern(
    s: &PatternTokenSequence,
    v: &PatternVocab,
    _q: &QuantConfig,
    lenient: bool,
) -> Result<SewingPattern> {
    if s.tokens.len() != s.params.len() {
        return Err(Error::Shape(format!(
            "{} tokens but {} param rows",
            s.tokens.len(),
            s.params.len()
        )));
    }
    let tok = |i: usize| -> Result<Token> {
        v.decode(s.tokens[i])
            .ok_or_else(|| malformed(i, format!("unknown token id {}", s.tokens[i])))
    };
    if s.tokens.is_empty() || tok(0)? != Token::SoG {
        return Err(malformed(0, "sequence must begin with SoG"));
    }

    let mut panels = Vec::new();
    let mut slot_uses: HashMap<usize, Vec<EdgeRef>> = HashMap::new();
    let mut i = 1;
    loop {
        match tok(i)? {
            Token::EoG => {
                if i + 1 != s.tokens.len() {
                    return Err(malformed(i, "EoG before end of sequence"));
                }
                break;
            }
            Token::SoP => {}
            other => return Err(malformed(i, format!("expected SoP or EoG, got {other:?}"))),
        }
        i += 1;
        let Token::Name(name_idx) = tok(i)? else {
            return Err(malformed(i, "expected panel name token after SoP"));
        };
        i += 1;
        if tok(i)? != Token::Pose {
            return Err(malformed(i, "expected R token after panel name"));
        }
        let pose = &s.params[i];
        i += 1;

        let mut kinds = Vec::new();
        let mut rows = Vec::new();
        loop {
            match tok(i)? {
                Token::Edge(kind, slot) => {
                    if let Some(slot) = slot {
                        slot_uses.entry(slot).or_default().push(EdgeRef {
                            panel: panels.len(),
                            edge: kinds.len(),
                        });
                    }
                    kinds.push(kind);
                    rows.push(s.params[i]);
                    i += 1;
                }
                Token::EoP => {
                    if kinds.len() < 3 {
                        return Err(malformed(
                            i,
                            format!("panel has {} edges, need >= 3", kinds.len()),
                        ));
                    }
                    i += 1;
                    break;
                }
                other => {
                    return Err(malformed(i, format!("expected edge token or EoP, got {other:?}")))
                }
            }
        }

        let n = kinds.len();
        // vertex k is the end of edge k-1; edge k runs from vertex k to k+1.
        let mut vertices = vec![Vec2::new(0.0, 0.0); n];
        for (k, row) in rows.iter().enumerate() {
            vertices[(k + 1) % n] = Vec2::new(row[0], row[1]);
        }
        let mut edges = Vec::with_capacity(n);
        for (k, (kind, row)) in kinds.iter().zip(&rows).enumerate() {
            let (start, end) = (k, (k + 1) % n);
            edges.push(match kind {
                EdgeKind::Line => EdgeSpec::line(start, end),
                EdgeKind::Quad => EdgeSpec::quad(start, end, Vec2::new(row[2], row[3])),
                EdgeKind::Cubic => EdgeSpec::cubic(
                    start,
                    end,
                    Vec2::new(row[2], row[3]),
                    Vec2::new(row[4], row[5]),
                ),
                EdgeKind::Arc => EdgeSpec {
                    start,
                    end,
                    kind: EdgeKind::Arc,
                    control: Vec::new(),
                    arc: Some(ArcParams {
                        radius: row[6],
                        large_arc: row[7] >= 0.5,
                        sweep: row[8] >= 0.5,
                    }),
                },
            });
        }
        let rotation = Quat::new(pose[0], pose[1], pose[2], pose[3]);
        if rotation.norm() < 1e-6 {
            return Err(malformed(i - 1, "degenerate quaternion in R row"));
        }
        // Renormalize only when quantization actually perturbed the norm, so
        // the lossless path reproduces the input bit-exactly.
        let rotation = if (rotation.norm() - 1.0).abs() > 1e-9 {
            rotation.normalized()
        } else {
            rotation
        };
        panels.push(Panel {
            name: v.name_of(name_idx).to_string(),
            vertices,
            edges,
            rotation,
            translation: Vec3::new(pose[4], pose[5], pose[6]),
        });
    }

    let mut stitches = Vec::new();
    let mut slots: Vec<_> = slot_uses.into_iter().collect();
    slots.sort_by_key(|(slot, _)| *slot);
    for (slot, uses) in slots {
        match uses.len() {
            2 => stitches.push(Stitch::new(uses[0], uses[1])),
            1 if lenient => {
                eprintln!("warning: dropping unmatched stitch slot S{slot}");
            }
            1 => return Err(Error::UnmatchedStitch(slot)),
            n => {
                return Err(malformed(
                    0,
                    format!("stitch slot S{slot} appears {n} times, expected 2"),
                ))
            }
        }
    }
    Ok(SewingPattern { panels, stitches })
}

// ---------------------------------------------------------------------------
// Loss

#[derive(Debug, Clone)]
pub struct PredictedPattern {
    /// Per position, a probability row over the full vocabulary.
    pub token_probs: Vec<Vec<f64>>,
    /// Per position, a continuous row aligned with the target layout.
    pub params: Vec<[f64; PARAM_WIDTH]>,
}

/// Active continuous channel count implied by a target token.
pub fn active_channels(v: &PatternVocab, token_id: u32) -> usize {
    match v.decode(token_id) {
        Some(Token::Edge(..)) => EDGE_CHANNELS,
        Some(Token::Pose) => POSE_CHANNELS,
        _ => 0,
    }
}

/// Mean cross-entropy on tokens plus lambda times the mean squared error over
/// the continuous channels active at each target position.
pub fn pattern_loss(
    pred: &PredictedPattern,
    target: &PatternTokenSequence,
    v: &PatternVocab,
    lambda: f64,
) -> Result<f64> {
    let n = target.tokens.len();
    if pred.token_probs.len() != n || pred.params.len() != n {
        return Err(Error::Shape(format!(
            "prediction length {} / {} vs target {}",
            pred.token_probs.len(),
            pred.params.len(),
            n
        )));
    }
    let vocab_size = v.size();
    let mut ce = 0.0;
    let mut sq = 0.0;
    let mut active_total = 0usize;
    for (i, row) in pred.token_probs.iter().enumerate() {
        if row.len() != vocab_size {
            return Err(Error::Shape(format!(
                "probability row {i} has width {}, vocab size {vocab_size}",
                row.len()
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Shape(format!("probability row {i} sums to {sum}")));
        }
        ce -= row[target.tokens[i] as usize].max(f64::MIN_POSITIVE).ln();
        let active = active_channels(v, target.tokens[i]);
        for c in 0..active {
            let d = pred.params[i][c] - target.params[i][c];
            sq += d * d;
        }
        active_total += active;
    }
    let mse = if active_total > 0 {
        sq / active_total as f64
    } else {
        0.0
    };
    Ok(ce / n as f64 + lambda * mse)
}

/// One-hot, exact-parameter prediction for a target sequence.
pub fn one_hot_prediction(target: &PatternTokenSequence, v: &PatternVocab) -> PredictedPattern {
    let vocab_size = v.size();
    PredictedPattern {
        token_probs: target
            .tokens
            .iter()
            .map(|&t| {
                let mut row = vec![0.0; vocab_size];
                row[t as usize] = 1.0;
                row
            })
            .collect(),
        params: target.params.clone(),
    }
}

// ---------------------------------------------------------------------------
// Token file format

pub fn write_token_file(s: &PatternTokenSequence, v: &PatternVocab) -> String {
    use crate::pattern::fmt_float;
    let mut out = String::from("{\"params\":[");
    for (i, row) in s.params.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        for (j, x) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt_float(*x));
        }
        out.push(']');
    }
    out.push_str("],\"tokens\":[");
    for (i, t) in s.tokens.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&t.to_string());
    }
    out.push_str(&format!("],\"vocab_hash\":\"{}\"}}", v.hash()));
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TokenFileDoc {
    vocab_hash: String,
    tokens: Vec<u32>,
    params: Vec<Vec<f64>>,
}

pub fn read_token_file(text: &str, v: &PatternVocab) -> Result<PatternTokenSequence> {
    let doc: TokenFileDoc = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    if doc.vocab_hash != v.hash() {
        return Err(Error::Vocab(format!(
            "vocab hash mismatch: file {} vs active {}",
            doc.vocab_hash,
            v.hash()
        )));
    }
    let mut params = Vec::with_capacity(doc.params.len());
    for (i, row) in doc.params.iter().enumerate() {
        if row.len() != PARAM_WIDTH {
            return Err(Error::Schema(format!(
                "param row {i} has width {}, expected {PARAM_WIDTH}",
                row.len()
            )));
        }
        let mut fixed = [0.0; PARAM_WIDTH];
        fixed.copy_from_slice(row);
        params.push(fixed);
    }
    Ok(PatternTokenSequence {
        tokens: doc.tokens,
        params,
    })
}
