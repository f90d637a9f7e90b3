//! Area-weighted uniform surface sampling and point-cloud distances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boxmesh::BoxMesh;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::kdtree::KdTree;
use crate::pattern::fmt_float;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    /// Source triangle and barycentric coordinates (u, v) of each point.
    pub provenance: Vec<(usize, f64, f64)>,
    pub seed: u64,
}

/// Uniform sampling over the surface: area-weighted triangle choice followed
/// by a uniform barycentric point. Deterministic given the seed.
pub fn sample_surface(m: &BoxMesh, n: usize, seed: u64) -> Result<PointCloud> {
    if m.faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    assert!(n >= 1, "sample count must be >= 1");
    let mut cum = Vec::with_capacity(m.faces.len());
    let mut acc = 0.0;
    for f in 0..m.faces.len() {
        acc += m.face_area(f);
        cum.push(acc);
    }
    if acc <= 0.0 {
        return Err(Error::Geometry("mesh has zero surface area".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut provenance = Vec::with_capacity(n);
    for _ in 0..n {
        let r = rng.gen_range(0.0..acc);
        let f = cum.partition_point(|&c| c <= r).min(m.faces.len() - 1);
        let (mut u, mut v) = (rng.gen::<f64>(), rng.gen::<f64>());
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        let [ia, ib, ic] = m.faces[f];
        let (a, b, c) = (m.vertices[ia], m.vertices[ib], m.vertices[ic]);
        let p = a.add(b.sub(a).scale(u)).add(c.sub(a).scale(v));
        points.push(p);
        provenance.push((f, u, v));
    }
    Ok(PointCloud {
        points,
        provenance,
        seed,
    })
}

/// Symmetric Chamfer distance: mean of unsquared nearest-neighbor distances,
/// averaged over both directions.
pub fn chamfer(a: &PointCloud, b: &PointCloud) -> f64 {
    assert!(!a.points.is_empty() && !b.points.is_empty());
    let ta = KdTree::build(&a.points);
    let tb = KdTree::build(&b.points);
    let mean_ab: f64 = a
        .points
        .iter()
        .map(|p| tb.nearest_sq(*p).sqrt())
        .sum::<f64>()
        / a.points.len() as f64;
    let mean_ba: f64 = b
        .points
        .iter()
        .map(|p| ta.nearest_sq(*p).sqrt())
        .sum::<f64>()
        / b.points.len() as f64;
    0.5 * (mean_ab + mean_ba)
}

/// Symmetric Hausdorff distance: the greatest nearest-neighbor distance over
/// both directions.
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> f64 {
    assert!(!a.points.is_empty() && !b.points.is_empty());
    let ta = KdTree::build(&a.points);
    let tb = KdTree::build(&b.points);
    let max_ab = a
        .points
        .iter()
        .map(|p| tb.nearest_sq(*p))
        .fold(0.0f64, f64::max);
    let max_ba = b
        .points
        .iter()
        .map(|p| ta.nearest_sq(*p))
        .fold(0.0f64, f64::max);
    max_ab.max(max_ba).sqrt()
}

/// O(n^2) reference implementations, kept as independent oracles.
pub mod brute {
    use super::PointCloud;

    fn nearest(p: crate::geom::Vec3, cloud: &PointCloud) -> f64 {
        cloud
            .points
            .iter()
            .map(|q| {
                let d = p.sub(*q);
                d.dot(d)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn chamfer(a: &PointCloud, b: &PointCloud) -> f64 {
        let mean_ab: f64 =
            a.points.iter().map(|p| nearest(*p, b).sqrt()).sum::<f64>() / a.points.len() as f64;
        let mean_ba: f64 =
            b.points.iter().map(|p| nearest(*p, a).sqrt()).sum::<f64>() / b.points.len() as f64;
        0.5 * (mean_ab + mean_ba)
    }

    pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> f64 {
        let max_ab = a.points.iter().map(|p| nearest(*p, b)).fold(0.0f64, f64::max);
        let max_ba = b.points.iter().map(|p| nearest(*p, a)).fold(0.0f64, f64::max);
        max_ab.max(max_ba).sqrt()
    }
}

/// XYZ text export: one "x y z" line per point, 6 decimal places.
pub fn export_xyz(cloud: &PointCloud) -> String {
    let mut out = String::new();
    for p in &cloud.points {
        out.push_str(&format!(
            "{} {} {}\n",
            fmt_float(p.x),
            fmt_float(p.y),
            fmt_float(p.z)
        ));
    }
    out
}

pub fn import_xyz(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut coord = || -> Result<f64> {
            it.next()
                .ok_or_else(|| Error::Format(format!("line {}: short xyz row", lineno + 1)))?
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))
        };
        points.push(Vec3::new(coord()?, coord()?, coord()?));
    }
    Ok(PointCloud {
        provenance: vec![(0, 0.0, 0.0); points.len()],
        points,
        seed: 0,
    })
}
