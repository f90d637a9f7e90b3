//! Pattern-level evaluation: panel correspondence, per-panel shape and
//! placement metrics, stitch precision, and the aggregate report with
//! BoxMesh Chamfer/Hausdorff distances.

use serde::{Deserialize, Serialize};

use crate::assign::min_cost_assignment;
use crate::boxmesh::{build_boxmesh, BuildConfig};
use crate::curve::discretize_edge;
use crate::error::Result;
use crate::geom::Vec2;
use crate::pattern::{Panel, SewingPattern, Stitch};
use crate::polygon::{polygon_iou, SimplePolygon};
use crate::sampling::{chamfer, hausdorff, sample_surface};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelMatch {
    /// (pred panel index, gt panel index)
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_pred: Vec<usize>,
    pub unmatched_gt: Vec<usize>,
}

fn transl_cost(a: &Panel, b: &Panel) -> f64 {
    a.translation.dist(b.translation)
}

/// Stage 1 matches panels sharing a name (nearest translation when a name
/// repeats); stage 2 assigns the remainder by minimum-cost translation
/// distance. Leftovers stay unmatched.
pub fn match_panels(pred: &SewingPattern, gt: &SewingPattern) -> PanelMatch {
    let mut pairs = Vec::new();
    let mut pred_free: Vec<usize> = (0..pred.panels.len()).collect();
    let mut gt_free: Vec<usize> = (0..gt.panels.len()).collect();

    let mut names: Vec<&str> = pred.panels.iter().map(|p| p.name.as_str()).collect();
    names.sort();
    names.dedup();
    for name in names {
        let ps: Vec<usize> = pred_free
            .iter()
            .copied()
            .filter(|&i| pred.panels[i].name == name)
            .collect();
        let gs: Vec<usize> = gt_free
            .iter()
            .copied()
            .filter(|&j| gt.panels[j].name == name)
            .collect();
        if ps.is_empty() || gs.is_empty() {
            continue;
        }
        let cost: Vec<Vec<f64>> = ps
            .iter()
            .map(|&i| {
                gs.iter()
                    .map(|&j| transl_cost(&pred.panels[i], &gt.panels[j]))
                    .collect()
            })
            .collect();
        for (r, col) in min_cost_assignment(&cost).into_iter().enumerate() {
            if let Some(c) = col {
                pairs.push((ps[r], gs[c]));
                pred_free.retain(|&i| i != ps[r]);
                gt_free.retain(|&j| j != gs[c]);
            }
        }
    }

    if !pred_free.is_empty() && !gt_free.is_empty() {
        let cost: Vec<Vec<f64>> = pred_free
            .iter()
            .map(|&i| {
                gt_free
                    .iter()
                    .map(|&j| transl_cost(&pred.panels[i], &gt.panels[j]))
                    .collect()
            })
            .collect();
        let asg = min_cost_assignment(&cost);
        let mut taken_pred = Vec::new();
        let mut taken_gt = Vec::new();
        for (r, col) in asg.into_iter().enumerate() {
            if let Some(c) = col {
                pairs.push((pred_free[r], gt_free[c]));
                taken_pred.push(pred_free[r]);
                taken_gt.push(gt_free[c]);
            }
        }
        pred_free.retain(|i| !taken_pred.contains(i));
        gt_free.retain(|j| !taken_gt.contains(j));
    }

    pairs.sort();
    PanelMatch {
        pairs,
        unmatched_pred: pred_free,
        unmatched_gt: gt_free,
    }
}

/// Boundary vertex loop in canonical edge order.
fn boundary_loop(p: &Panel) -> Vec<Vec2> {
    p.edges.iter().map(|e| p.vertex(e.start)).collect()
}

/// Resample a closed polyline to n points by uniform arc length, keeping the
/// first point at parameter 0.
fn resample_closed(pts: &[Vec2], n: usize) -> Vec<Vec2> {
    if pts.len() == n {
        return pts.to_vec();
    }
    let m = pts.len();
    let mut cum = vec![0.0; m + 1];
    for i in 0..m {
        cum[i + 1] = cum[i] + pts[i].dist(pts[(i + 1) % m]);
    }
    let total = cum[m];
    if total <= 0.0 {
        return vec![pts[0]; n];
    }
    (0..n)
        .map(|k| {
            let s = total * k as f64 / n as f64;
            let seg = cum.partition_point(|&c| c <= s).min(m) - 1;
            let seg_len = cum[seg + 1] - cum[seg];
            let t = if seg_len > 0.0 { (s - cum[seg]) / seg_len } else { 0.0 };
            pts[seg].lerp(pts[(seg + 1) % m], t)
        })
        .collect()
}

/// Mean boundary distance after searching all cyclic shifts and both
/// orientations. Both loops are resampled densely by arc length so that
/// vertex splits along a straight run do not inflate the distance.
pub fn panel_l2(pred: &Panel, gt: &Panel) -> f64 {
    let a = boundary_loop(pred);
    let b = boundary_loop(gt);
    let n = 16 * a.len().max(b.len());
    let a = resample_closed(&a, n);
    let b = resample_closed(&b, n);
    let reversed: Vec<Vec2> = (0..n).map(|i| b[(n - i) % n]).collect();
    let mut best = f64::INFINITY;
    for cand in [&b, &reversed] {
        for shift in 0..n {
            let mean: f64 = (0..n)
                .map(|i| a[i].dist(cand[(i + shift) % n]))
                .sum::<f64>()
                / n as f64;
            if mean < best {
                best = mean;
            }
        }
    }
    best
}

/// Region overlap of the discretized 2D boundaries (16 samples per edge) in
/// the panels' own local frames.
pub fn panel_iou_metric(pred: &Panel, gt: &Panel) -> Result<f64> {
    let poly = |p: &Panel| -> Result<SimplePolygon> {
        let mut pts = Vec::new();
        for e in &p.edges {
            let line = discretize_edge(p, e, 16)?;
            pts.extend_from_slice(&line.points[..line.points.len() - 1]);
        }
        SimplePolygon::new(pts)
    };
    polygon_iou(&poly(pred)?, &poly(gt)?)
}

/// Sign-aligned quaternion L2 (double cover folded out).
pub fn rot_l2(pred: &Panel, gt: &Panel) -> f64 {
    let (p, g) = (pred.rotation, gt.rotation);
    let diff = |s: f64| {
        ((p.x - s * g.x).powi(2)
            + (p.y - s * g.y).powi(2)
            + (p.z - s * g.z).powi(2)
            + (p.w - s * g.w).powi(2))
        .sqrt()
    };
    diff(1.0).min(diff(-1.0))
}

pub fn transl_l2(pred: &Panel, gt: &Panel) -> f64 {
    pred.translation.dist(gt.translation)
}

/// (panels_acc, edges_acc): panel-count equality and the fraction of matched
/// panels whose edge counts agree.
pub fn count_acc(pred: &SewingPattern, gt: &SewingPattern, m: &PanelMatch) -> (f64, f64) {
    let panels_acc = if pred.panels.len() == gt.panels.len() {
        1.0
    } else {
        0.0
    };
    let edges_acc = if m.pairs.is_empty() {
        0.0
    } else {
        m.pairs
            .iter()
            .filter(|&&(i, j)| pred.panels[i].edges.len() == gt.panels[j].edges.len())
            .count() as f64
            / m.pairs.len() as f64
    };
    (panels_acc, edges_acc)
}

/// Fraction of predicted stitches that map, through the panel match, onto a
/// ground-truth stitch with the same edge indices.
pub fn stitch_precision(pred: &SewingPattern, gt: &SewingPattern, m: &PanelMatch) -> f64 {
    if pred.stitches.is_empty() {
        return if gt.stitches.is_empty() { 1.0 } else { 0.0 };
    }
    let map: std::collections::HashMap<usize, usize> = m.pairs.iter().copied().collect();
    let correct = pred
        .stitches
        .iter()
        .filter(|s| {
            let (Some(&pa), Some(&pb)) = (map.get(&s.first.panel), map.get(&s.second.panel))
            else {
                return false;
            };
            let mapped = Stitch::new(
                crate::pattern::EdgeRef {
                    panel: pa,
                    edge: s.first.edge,
                },
                crate::pattern::EdgeRef {
                    panel: pb,
                    edge: s.second.edge,
                },
            );
            gt.stitches.contains(&mapped)
        })
        .count();
    correct as f64 / pred.stitches.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Percent in [0, 100]; unmatched panels count as 0.
    pub panel_iou: f64,
    /// cm, mean over matched panels.
    pub panel_l2: f64,
    pub rot_l2: f64,
    /// cm
    pub transl_l2: f64,
    pub panels_acc: f64,
    pub edges_acc: f64,
    pub stitch_precision: f64,
    /// cm
    pub cd_boxmesh: f64,
    /// cm
    pub hd_boxmesh: f64,
    pub unmatched_pred: usize,
    pub unmatched_gt: usize,
}

/// Full evaluation of a predicted pattern against ground truth. Per-panel
/// means run over matched pairs (IoU additionally counts unmatched panels as
/// 0); both BoxMeshes are built with the same config and sampled with the
/// same seed.
pub fn evaluate_patterns(
    pred: &SewingPattern,
    gt: &SewingPattern,
    cfg: &BuildConfig,
    n_points: usize,
    seed: u64,
) -> Result<MetricReport> {
    let m = match_panels(pred, gt);
    let mut iou_sum = 0.0;
    let mut l2_sum = 0.0;
    let mut rot_sum = 0.0;
    let mut transl_sum = 0.0;
    for &(i, j) in &m.pairs {
        let (p, g) = (&pred.panels[i], &gt.panels[j]);
        iou_sum += panel_iou_metric(p, g)?;
        l2_sum += panel_l2(p, g);
        rot_sum += rot_l2(p, g);
        transl_sum += transl_l2(p, g);
    }
    let iou_denom = m.pairs.len() + m.unmatched_pred.len() + m.unmatched_gt.len();
    let matched = m.pairs.len().max(1) as f64;
    let (panels_acc, edges_acc) = count_acc(pred, gt, &m);
    let precision = stitch_precision(pred, gt, &m);

    let mesh_p = build_boxmesh(pred, cfg)?;
    let mesh_g = build_boxmesh(gt, cfg)?;
    let cloud_p = sample_surface(&mesh_p, n_points, seed)?;
    let cloud_g = sample_surface(&mesh_g, n_points, seed)?;

    Ok(MetricReport {
        panel_iou: 100.0 * iou_sum / iou_denom.max(1) as f64,
        panel_l2: l2_sum / matched,
        rot_l2: rot_sum / matched,
        transl_l2: transl_sum / matched,
        panels_acc,
        edges_acc,
        stitch_precision: precision,
        cd_boxmesh: chamfer(&cloud_p, &cloud_g),
        hd_boxmesh: hausdorff(&cloud_p, &cloud_g),
        unmatched_pred: m.unmatched_pred.len(),
        unmatched_gt: m.unmatched_gt.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxmesh::SamplingSpec;
    use crate::geom::{Quat, Vec3};
    use crate::pattern::{square_panel, EdgeRef, EdgeSpec};

    fn two_panel_pattern() -> SewingPattern {
        let mut a = square_panel("front", 10.0);
        a.translation = Vec3::new(0.0, 0.0, 5.0);
        let mut b = square_panel("back", 10.0);
        b.translation = Vec3::new(0.0, 0.0, -5.0);
        SewingPattern {
            panels: vec![a, b],
            stitches: vec![Stitch::new(
                EdgeRef { panel: 0, edge: 0 },
                EdgeRef { panel: 1, edge: 0 },
            )],
        }
    }

    #[test]
    fn identity_match_and_perfect_metrics() {
        let p = two_panel_pattern();
        let m = match_panels(&p, &p);
        assert_eq!(m.pairs, vec![(0, 0), (1, 1)]);
        assert!(m.unmatched_pred.is_empty() && m.unmatched_gt.is_empty());
        for &(i, j) in &m.pairs {
            assert_eq!(panel_l2(&p.panels[i], &p.panels[j]), 0.0);
            assert!(panel_iou_metric(&p.panels[i], &p.panels[j]).unwrap() > 0.9999);
            assert_eq!(rot_l2(&p.panels[i], &p.panels[j]), 0.0);
            assert_eq!(transl_l2(&p.panels[i], &p.panels[j]), 0.0);
        }
        assert_eq!(count_acc(&p, &p, &m), (1.0, 1.0));
        assert_eq!(stitch_precision(&p, &p, &m), 1.0);
    }

    #[test]
    fn missing_panel_goes_unmatched() {
        let gt = two_panel_pattern();
        let pred = SewingPattern {
            panels: vec![gt.panels[0].clone()],
            stitches: vec![],
        };
        let m = match_panels(&pred, &gt);
        assert_eq!(m.pairs, vec![(0, 0)]);
        assert_eq!(m.unmatched_gt, vec![1]);
        let (panels_acc, edges_acc) = count_acc(&pred, &gt, &m);
        assert_eq!(panels_acc, 0.0);
        assert_eq!(edges_acc, 1.0);
        assert_eq!(stitch_precision(&pred, &gt, &m), 0.0);
    }

    #[test]
    fn same_name_panels_matched_by_translation() {
        let mut a = square_panel("sleeve", 8.0);
        a.translation = Vec3::new(-20.0, 0.0, 0.0);
        let mut b = square_panel("sleeve", 8.0);
        b.translation = Vec3::new(20.0, 0.0, 0.0);
        let gt = SewingPattern {
            panels: vec![a.clone(), b.clone()],
            stitches: vec![],
        };
        let pred = SewingPattern {
            panels: vec![b, a],
            stitches: vec![],
        };
        let m = match_panels(&pred, &gt);
        assert_eq!(m.pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn panel_l2_invariant_to_cyclic_renumbering() {
        let p = square_panel("front", 10.0);
        // Same square with the vertex loop rotated by one.
        let q = Panel {
            name: "front".into(),
            vertices: vec![
                p.vertices[1],
                p.vertices[2],
                p.vertices[3],
                p.vertices[0],
            ],
            edges: (0..4).map(|k| EdgeSpec::line(k, (k + 1) % 4)).collect(),
            rotation: Quat::IDENTITY,
            translation: Vec3::new(0.0, 0.0, 0.0),
        };
        assert_eq!(panel_l2(&p, &q), 0.0);
    }

    #[test]
    fn split_edge_square_keeps_iou_one() {
        let p = square_panel("front", 10.0);
        // Same region, bottom edge split at its midpoint.
        let q = Panel {
            name: "front".into(),
            vertices: vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(5.0, 0.0),
                Vec2::new(10.0, 0.0),
                Vec2::new(10.0, 10.0),
                Vec2::new(0.0, 10.0),
            ],
            edges: (0..5).map(|k| EdgeSpec::line(k, (k + 1) % 5)).collect(),
            rotation: Quat::IDENTITY,
            translation: Vec3::new(0.0, 0.0, 0.0),
        };
        assert!((panel_iou_metric(&p, &q).unwrap() - 1.0).abs() < 1e-9);
        assert!(panel_l2(&p, &q) < 1.0);
        assert_ne!(p.edges.len(), q.edges.len());
    }

    #[test]
    fn shifted_square_iou_third() {
        let p = square_panel("a", 1.0);
        let mut q = square_panel("a", 1.0);
        for v in &mut q.vertices {
            *v = v.add(Vec2::new(0.5, 0.0));
        }
        assert!((panel_iou_metric(&p, &q).unwrap() - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn rot_l2_double_cover_and_half_turn() {
        let mut a = square_panel("a", 1.0);
        let mut b = a.clone();
        b.rotation = Quat::new(-0.0, -0.0, -0.0, -1.0);
        assert_eq!(rot_l2(&a, &b), 0.0);
        a.rotation = Quat::IDENTITY;
        b.rotation = Quat::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), std::f64::consts::PI);
        assert!((rot_l2(&a, &b) - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn stitch_precision_half() {
        let mut gt = two_panel_pattern();
        gt.stitches = vec![
            Stitch::new(EdgeRef { panel: 0, edge: 0 }, EdgeRef { panel: 1, edge: 0 }),
            Stitch::new(EdgeRef { panel: 0, edge: 2 }, EdgeRef { panel: 1, edge: 2 }),
        ];
        let mut pred = gt.clone();
        pred.stitches[1] =
            Stitch::new(EdgeRef { panel: 0, edge: 1 }, EdgeRef { panel: 1, edge: 1 });
        let m = match_panels(&pred, &gt);
        assert_eq!(stitch_precision(&pred, &gt, &m), 0.5);
    }

    #[test]
    fn self_evaluation_is_perfect() {
        let p = two_panel_pattern();
        let cfg = BuildConfig {
            samples_per_edge: SamplingSpec::Count(4),
            ..BuildConfig::default()
        };
        let r = evaluate_patterns(&p, &p, &cfg, 2000, 7).unwrap();
        assert!(r.panel_iou >= 99.99);
        assert!(r.panel_l2 <= 1e-9);
        assert!(r.rot_l2 <= 1e-9 && r.transl_l2 <= 1e-9);
        assert_eq!(r.panels_acc, 1.0);
        assert_eq!(r.edges_acc, 1.0);
        assert_eq!(r.stitch_precision, 1.0);
        assert!(r.cd_boxmesh <= 1e-6 && r.hd_boxmesh <= 1e-6);
        assert_eq!((r.unmatched_pred, r.unmatched_gt), (0, 0));
    }

    #[test]
    fn translated_prediction_moves_transl_and_cd() {
        // Shift along the panel normal: every sample then sits ~1 cm from
        // the other surface, so CD approaches 1 as sampling densifies.
        let gt = SewingPattern {
            panels: vec![square_panel("front", 10.0)],
            stitches: vec![],
        };
        let mut pred = gt.clone();
        pred.panels[0].translation = pred.panels[0].translation.add(Vec3::new(0.0, 0.0, 1.0));
        let cfg = BuildConfig {
            samples_per_edge: SamplingSpec::Count(4),
            ..BuildConfig::default()
        };
        let r = evaluate_patterns(&pred, &gt, &cfg, 4000, 3).unwrap();
        assert!((r.transl_l2 - 1.0).abs() < 1e-12);
        assert!(r.panel_iou >= 99.99);
        assert!((r.cd_boxmesh - 1.0).abs() < 0.05, "cd {}", r.cd_boxmesh);
        assert!(r.hd_boxmesh >= r.cd_boxmesh);
    }
}
