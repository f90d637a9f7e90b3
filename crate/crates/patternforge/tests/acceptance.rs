//! End-to-end acceptance checks; each test prints one PASS/FAIL line.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use patternforge::boxmesh::{
    build_boxmesh, denormalize_mesh, normalize_mesh, BoxMesh, BuildConfig, FaceLabel,
};
use patternforge::curve::discretize_edge;
use patternforge::geom::{Vec2, Vec3};
use patternforge::mesh_tokens::{
    block_offset_decode, block_offset_encode, quantize_mesh, shape_loss, tokenize_mesh_compressive,
    tokenize_mesh_direct, detokenize_mesh, QuantizedMesh,
};
use patternforge::metrics::evaluate_patterns;
use patternforge::pattern::serialize_pattern;
use patternforge::pattern_tokens::{
    detokenize_pattern, one_hot_prediction, pattern_loss, tokenize_pattern, PatternVocab,
    PredictedPattern, QuantConfig, PARAM_WIDTH,
};
use patternforge::polygon::{polygon_iou, raster_iou, SimplePolygon};
use patternforge::sampling::{brute, chamfer, hausdorff, sample_surface, PointCloud};
use patternforge::synth::random_pattern;

fn criterion(id: usize, desc: &str, body: impl FnOnce()) {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(()) => println!("criterion {id} ({desc}): PASS"),
        Err(e) => {
            println!("criterion {id} ({desc}): FAIL");
            std::panic::resume_unwind(e);
        }
    }
}

fn names() -> Vec<String> {
    [
        "front", "back", "sleeve_l", "sleeve_r", "collar", "cuff", "pocket", "hem",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[test]
fn criterion_1_self_evaluation_perfection() {
    criterion(1, "self-evaluation perfection", || {
        let t0 = Instant::now();
        let cfg = BuildConfig::default();
        for seed in 0..25u64 {
            let p = random_pattern(seed);
            let r = evaluate_patterns(&p, &p, &cfg, 2000, 7).unwrap();
            assert!(r.panel_iou >= 99.99, "seed {seed}: iou {}", r.panel_iou);
            assert!(r.panel_l2 <= 1e-9, "seed {seed}: l2 {}", r.panel_l2);
            assert!(r.rot_l2 <= 1e-9 && r.transl_l2 <= 1e-9, "seed {seed}");
            assert_eq!((r.panels_acc, r.edges_acc), (1.0, 1.0), "seed {seed}");
            assert_eq!(r.stitch_precision, 1.0, "seed {seed}");
            assert!(r.cd_boxmesh <= 1e-6 && r.hd_boxmesh <= 1e-6, "seed {seed}");
            assert_eq!(r.unmatched_pred + r.unmatched_gt, 0, "seed {seed}");
        }
        assert!(t0.elapsed().as_secs() < 60, "took {:?}", t0.elapsed());
    });
}

#[test]
fn criterion_2_pattern_token_round_trip() {
    criterion(2, "pattern token round trip", || {
        let v = PatternVocab::new(&names()).unwrap();
        let half_coord = 300.0 / 256.0 / 2.0;
        let half_quat = 2.0 / 256.0 / 2.0;
        for seed in 0..1000u64 {
            let p = random_pattern(seed);
            let expect_len = 2 + p
                .panels
                .iter()
                .map(|pl| 4 + pl.edges.len())
                .sum::<usize>();

            let q = QuantConfig::lossless();
            let s = tokenize_pattern(&p, &v, &q).unwrap();
            assert_eq!(s.len(), expect_len, "seed {seed}");
            let back = detokenize_pattern(&s, &v, &q, false).unwrap();
            assert_eq!(back, p, "seed {seed}: lossless round trip not exact");

            let q = QuantConfig::quantized(256);
            let s = tokenize_pattern(&p, &v, &q).unwrap();
            assert_eq!(s.len(), expect_len, "seed {seed}");
            let back = detokenize_pattern(&s, &v, &q, false).unwrap();
            assert_eq!(back.panels.len(), p.panels.len());
            assert_eq!(back.stitches, p.stitches);
            for (a, b) in back.panels.iter().zip(&p.panels) {
                assert_eq!(a.name, b.name);
                let close = |x: f64, y: f64| (x - y).abs() <= half_coord + 1e-12;
                for (va, vb) in a.vertices.iter().zip(&b.vertices) {
                    assert!(close(va.x, vb.x) && close(va.y, vb.y), "seed {seed}");
                }
                for (ea, eb) in a.edges.iter().zip(&b.edges) {
                    assert_eq!(ea.kind, eb.kind);
                    for (ca, cb) in ea.control.iter().zip(&eb.control) {
                        assert!(close(ca.x, cb.x) && close(ca.y, cb.y), "seed {seed}");
                    }
                    if let (Some(aa), Some(ab)) = (&ea.arc, &eb.arc) {
                        assert!(close(aa.radius, ab.radius), "seed {seed}");
                        assert_eq!(aa.large_arc, ab.large_arc);
                        assert_eq!(aa.sweep, ab.sweep);
                    }
                }
                assert!(close(a.translation.x, b.translation.x), "seed {seed}");
                assert!(close(a.translation.y, b.translation.y), "seed {seed}");
                assert!(close(a.translation.z, b.translation.z), "seed {seed}");
                // Renormalizing the snapped quaternion can triple the half-bin
                // error bound in the worst case.
                let qa = [a.rotation.x, a.rotation.y, a.rotation.z, a.rotation.w];
                let qb = [b.rotation.x, b.rotation.y, b.rotation.z, b.rotation.w];
                let err = |s: f64| -> f64 {
                    qa.iter()
                        .zip(&qb)
                        .map(|(x, y)| (x - s * y).abs())
                        .fold(0.0, f64::max)
                };
                assert!(
                    err(1.0).min(err(-1.0)) <= 3.0 * half_quat + 1e-12,
                    "seed {seed}"
                );
            }
        }
    });
}

fn bin_vertices(q: &QuantizedMesh) -> BTreeSet<[u32; 3]> {
    q.vertices.iter().copied().collect()
}

fn bin_faces(q: &QuantizedMesh) -> BTreeSet<[[u32; 3]; 3]> {
    q.faces
        .iter()
        .map(|f| {
            let mut tri = [q.vertices[f[0]], q.vertices[f[1]], q.vertices[f[2]]];
            let k = (0..3).min_by_key(|&i| tri[i]).unwrap();
            tri.rotate_left(k);
            tri
        })
        .collect()
}

#[test]
fn criterion_3_mesh_token_round_trip() {
    criterion(3, "mesh token round trip", || {
        let cfg = BuildConfig::default();
        for seed in 0..100u64 {
            let p = random_pattern(seed);
            let mesh = build_boxmesh(&p, &cfg).unwrap();
            let (norm, _, _) = normalize_mesh(&mesh).unwrap();
            let q = quantize_mesh(&norm, 128).unwrap();

            let direct = tokenize_mesh_direct(&q, 1_000_000).unwrap();
            let back = detokenize_mesh(&direct).unwrap();
            assert_eq!(bin_vertices(&back), bin_vertices(&q), "seed {seed}");
            assert_eq!(bin_faces(&back), bin_faces(&q), "seed {seed}");

            let comp = tokenize_mesh_compressive(&q, 16, 1_000_000).unwrap();
            let back = detokenize_mesh(&comp).unwrap();
            assert_eq!(bin_vertices(&back), bin_vertices(&q), "seed {seed}");
            assert_eq!(bin_faces(&back), bin_faces(&q), "seed {seed}");

            if q.faces.len() >= 10 {
                assert!(
                    comp.len() < direct.len(),
                    "seed {seed}: {} faces, compressive {} vs direct {}",
                    q.faces.len(),
                    comp.len(),
                    direct.len()
                );
            }
        }

        // Exhaustive block/offset bijection over the full 128^3 grid.
        for block in [8u32, 16u32] {
            let b3 = (block * block * block) as usize;
            let mut seen = vec![false; 128 * 128 * 128];
            for x in 0..128u32 {
                for y in 0..128u32 {
                    for z in 0..128u32 {
                        let v = [x, y, z];
                        let (bid, off) = block_offset_encode(v, 128, block).unwrap();
                        assert_eq!(block_offset_decode(bid, off, 128, block).unwrap(), v);
                        let code = bid as usize * b3 + off as usize;
                        assert!(!seen[code], "duplicate code at {v:?} B={block}");
                        seen[code] = true;
                    }
                }
            }
        }
    });
}

#[test]
fn criterion_4_metric_oracles() {
    criterion(4, "metric oracles", || {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let cloud = |rng: &mut ChaCha8Rng| {
            let n = rng.gen_range(10..=500);
            PointCloud {
                points: (0..n)
                    .map(|_| {
                        Vec3::new(
                            rng.gen_range(-20.0..20.0),
                            rng.gen_range(-20.0..20.0),
                            rng.gen_range(-20.0..20.0),
                        )
                    })
                    .collect(),
                provenance: vec![(0, 0.0, 0.0); n],
                seed: 0,
            }
        };
        for _ in 0..50 {
            let a = cloud(&mut rng);
            let b = cloud(&mut rng);
            let cd = chamfer(&a, &b);
            let hd = hausdorff(&a, &b);
            assert!((cd - brute::chamfer(&a, &b)).abs() <= 1e-12);
            assert!((hd - brute::hausdorff(&a, &b)).abs() <= 1e-12);
            assert!(hd >= cd);
        }

        let star = |rng: &mut ChaCha8Rng| {
            let n = rng.gen_range(5..=10);
            let two_pi = 2.0 * std::f64::consts::PI;
            let pts: Vec<Vec2> = (0..n)
                .map(|k| {
                    let a = two_pi * (k as f64 + rng.gen_range(0.0..0.4)) / n as f64;
                    let r = rng.gen_range(5.0..15.0);
                    Vec2::new(r * a.cos(), r * a.sin())
                })
                .collect();
            SimplePolygon::new(pts).unwrap()
        };
        for _ in 0..50 {
            let a = star(&mut rng);
            let b = star(&mut rng);
            let exact = polygon_iou(&a, &b).unwrap();
            let raster = raster_iou(&a, &b, 2048).unwrap();
            assert!((exact - raster).abs() <= 0.01, "{exact} vs {raster}");
        }

        let unit = |dx: f64| {
            SimplePolygon::new(vec![
                Vec2::new(dx, 0.0),
                Vec2::new(dx + 1.0, 0.0),
                Vec2::new(dx + 1.0, 1.0),
                Vec2::new(dx, 1.0),
            ])
            .unwrap()
        };
        let iou = polygon_iou(&unit(0.0), &unit(0.5)).unwrap();
        assert!((iou - 1.0 / 3.0).abs() <= 1e-6, "{iou}");
    });
}

#[test]
fn criterion_5_lift_invariants() {
    criterion(5, "rigid lift coplanarity and isometry", || {
        for seed in 0..25u64 {
            let p = random_pattern(seed);
            for panel in &p.panels {
                let mut flat = Vec::new();
                for e in &panel.edges {
                    let line = discretize_edge(panel, e, 16).unwrap();
                    flat.extend_from_slice(&line.points[..line.points.len() - 1]);
                }
                let lifted = patternforge::boxmesh::place_panel(panel, &flat);
                let (lo, hi) = lifted.iter().fold(
                    (lifted[0], lifted[0]),
                    |(mut lo, mut hi), v| {
                        lo.x = lo.x.min(v.x);
                        lo.y = lo.y.min(v.y);
                        lo.z = lo.z.min(v.z);
                        hi.x = hi.x.max(v.x);
                        hi.y = hi.y.max(v.y);
                        hi.z = hi.z.max(v.z);
                        (lo, hi)
                    },
                );
                let diag = hi.sub(lo).norm().max(1.0);
                let normal = panel.rotation.rotate(Vec3::new(0.0, 0.0, 1.0));
                for v in &lifted {
                    let d = v.sub(panel.translation).dot(normal).abs();
                    assert!(d <= 1e-9 * diag, "seed {seed}: off-plane by {d}");
                }
                for i in 0..flat.len() {
                    for j in (i + 1)..flat.len() {
                        let d2 = flat[i].dist(flat[j]);
                        let d3 = lifted[i].dist(lifted[j]);
                        assert!(
                            (d2 - d3).abs() <= 1e-9 * d2.max(1.0),
                            "seed {seed}: {d2} vs {d3}"
                        );
                    }
                }
            }
        }
    });
}

#[test]
fn criterion_6_face_budget_and_normalization() {
    criterion(6, "face budget and normalization", || {
        let cfg = BuildConfig::default();
        for seed in 0..25u64 {
            let p = random_pattern(seed);
            let mesh = build_boxmesh(&p, &cfg).unwrap();
            assert!(
                mesh.faces.len() <= 1600,
                "seed {seed}: {} faces",
                mesh.faces.len()
            );
            let (norm, scale, center) = normalize_mesh(&mesh).unwrap();
            let (lo, hi) = norm.bbox();
            for c in [lo.x, lo.y, lo.z, hi.x, hi.y, hi.z] {
                assert!(c >= -1.0 - 1e-9 && c <= 1.0 + 1e-9, "seed {seed}: {c}");
            }
            let span = (hi.x - lo.x).max(hi.y - lo.y).max(hi.z - lo.z);
            assert!((span - 2.0).abs() <= 1e-9, "seed {seed}: span {span}");
            let back = denormalize_mesh(&norm, scale, center);
            for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
                assert!(a.dist(*b) <= 1e-9, "seed {seed}");
            }
        }
    });
}

#[test]
fn criterion_7_loss_contracts() {
    criterion(7, "loss contracts", || {
        let v = PatternVocab::new(&names()).unwrap();
        let p = random_pattern(5);
        let target = tokenize_pattern(&p, &v, &QuantConfig::lossless()).unwrap();
        let one_hot = one_hot_prediction(&target, &v);
        assert!(pattern_loss(&one_hot, &target, &v, 1.0).unwrap() <= 1e-12);

        let size = v.size();
        let uniform = PredictedPattern {
            token_probs: vec![vec![1.0 / size as f64; size]; target.len()],
            params: target.params.clone(),
        };
        let loss = pattern_loss(&uniform, &target, &v, 0.0).unwrap();
        assert!((loss - (size as f64).ln()).abs() <= 1e-9, "{loss}");

        let mesh = build_boxmesh(&p, &BuildConfig::default()).unwrap();
        let q = quantize_mesh(&normalize_mesh(&mesh).unwrap().0, 128).unwrap();
        let seq = tokenize_mesh_direct(&q, 1_000_000).unwrap();
        let vocab = seq.vocab_size();
        let one_hot_rows: Vec<Vec<f64>> = seq
            .tokens
            .iter()
            .map(|&t| {
                let mut row = vec![0.0; vocab];
                row[t as usize] = 1.0;
                row
            })
            .collect();
        assert!(shape_loss(&one_hot_rows, &seq).unwrap().sum <= 1e-12);
        let uniform_rows = vec![vec![1.0 / vocab as f64; vocab]; seq.len()];
        let sl = shape_loss(&uniform_rows, &seq).unwrap();
        assert!((sl.per_token - (vocab as f64).ln()).abs() <= 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let random_row = |rng: &mut ChaCha8Rng, w: usize| -> Vec<f64> {
            let mut row: Vec<f64> = (0..w).map(|_| rng.gen_range(1e-3..1.0)).collect();
            let sum: f64 = row.iter().sum();
            for x in &mut row {
                *x /= sum;
            }
            row
        };
        for _ in 0..1000 {
            let pred = PredictedPattern {
                token_probs: (0..target.len()).map(|_| random_row(&mut rng, size)).collect(),
                params: (0..target.len())
                    .map(|_| {
                        let mut row = [0.0; PARAM_WIDTH];
                        for x in &mut row {
                            *x = rng.gen_range(-150.0..150.0);
                        }
                        row
                    })
                    .collect(),
            };
            assert!(pattern_loss(&pred, &target, &v, 1.0).unwrap() >= 0.0);
            let rows: Vec<Vec<f64>> =
                (0..seq.len()).map(|_| random_row(&mut rng, vocab)).collect();
            assert!(shape_loss(&rows, &seq).unwrap().sum >= 0.0);
        }
    });
}

#[test]
fn criterion_8_area_weighted_sampling() {
    criterion(8, "area-weighted sampling", || {
        // Triangle areas 0.5 and 1.5: the first draws with probability 1/4.
        let mesh = BoxMesh {
            vertices: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
                Vec3::new(3.0, 0.0, 1.0),
                Vec3::new(0.0, 1.0, 1.0),
            ],
            faces: vec![[0, 1, 2], [3, 4, 5]],
            face_labels: vec![FaceLabel::Panel(0); 2],
        };
        let n = 10_000;
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        let mut excursions = 0;
        for seed in 0..20u64 {
            let cloud = sample_surface(&mesh, n, seed).unwrap();
            let small = cloud.provenance.iter().filter(|(f, _, _)| *f == 0).count();
            if (small as f64 - 2500.0).abs() > 4.0 * sigma {
                excursions += 1;
            }
        }
        assert!(excursions <= 1, "{excursions} excursions past 4 sigma");
    });
}

fn run_cli(dir: &Path, args: &[&str]) -> (Vec<u8>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_patternforge"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    (out.stdout, out.stderr)
}

#[test]
fn criterion_9_cli_determinism() {
    criterion(9, "CLI determinism", || {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        let mut p = random_pattern(1);
        // Serialization rounds to 6 decimals; keep rotations exactly
        // representable so reparsed quaternions stay unit norm.
        let quats = [
            patternforge::geom::Quat::new(0.0, 0.0, 0.0, 1.0),
            patternforge::geom::Quat::new(0.5, 0.5, 0.5, 0.5),
            patternforge::geom::Quat::new(0.0, 0.6, 0.0, 0.8),
            patternforge::geom::Quat::new(0.0, 0.0, 1.0, 0.0),
        ];
        for (i, panel) in p.panels.iter_mut().enumerate() {
            panel.rotation = quats[i % quats.len()];
        }
        std::fs::write(root.join("pattern.json"), serialize_pattern(&p)).unwrap();

        let check = |args: &[&str], outputs: &[&str]| {
            let first = run_cli(root, args);
            let files: Vec<Vec<u8>> = outputs
                .iter()
                .map(|f| std::fs::read(root.join(f)).unwrap())
                .collect();
            let second = run_cli(root, args);
            assert_eq!(first.0, second.0, "stdout differs for {args:?}");
            for (f, bytes) in outputs.iter().zip(&files) {
                let again = std::fs::read(root.join(f)).unwrap();
                assert_eq!(bytes, &again, "{f} differs for {args:?}");
            }
        };

        check(&["validate", "pattern.json"], &[]);
        check(
            &[
                "boxmesh",
                "pattern.json",
                "--out",
                "mesh.obj",
                "--face-budget",
                "1000",
                "--segment-cm",
                "4",
                "--normalize",
            ],
            &["mesh.obj"],
        );
        check(
            &["sample", "mesh.obj", "--out", "cloud.xyz", "--seed", "5"],
            &["cloud.xyz"],
        );
        check(
            &["tokenize", "--kind", "pattern", "pattern.json", "--out", "pt.json"],
            &["pt.json"],
        );
        check(
            &["detokenize", "--kind", "pattern", "pt.json", "--out", "pattern2.json"],
            &["pattern2.json"],
        );
        // The lossless token path reproduces the serialized pattern exactly.
        assert_eq!(
            std::fs::read(root.join("pattern.json")).unwrap(),
            std::fs::read(root.join("pattern2.json")).unwrap()
        );
        check(
            &["tokenize", "--kind", "mesh-direct", "mesh.obj", "--out", "mtd.json"],
            &["mtd.json"],
        );
        check(
            &[
                "tokenize",
                "--kind",
                "mesh-compressive",
                "mesh.obj",
                "--out",
                "mtc.json",
            ],
            &["mtc.json"],
        );
        check(
            &["detokenize", "--kind", "mesh-direct", "mtd.json", "--out", "m2.obj"],
            &["m2.obj"],
        );
        check(
            &[
                "eval",
                "--pred",
                "pattern.json",
                "--gt",
                "pattern.json",
                "--out",
                "report.json",
                "--points",
                "2000",
            ],
            &["report.json"],
        );
        check(&["render", "pattern.json", "--out", "fig.svg"], &["fig.svg"]);
    });
}
