//! Procedural generation of valid patterns for tests and smoke runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curve::eval_edge;
use crate::geom::{Quat, Vec2, Vec3};
use crate::pattern::{EdgeRef, EdgeSpec, Panel, SewingPattern, Stitch};

const NAMES: [&str; 8] = [
    "front", "back", "sleeve_l", "sleeve_r", "collar", "cuff", "pocket", "hem",
];

fn random_unit_quat(rng: &mut ChaCha8Rng) -> Quat {
    // Shoemake's uniform quaternion sampling.
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (t2, t3) = (
        2.0 * std::f64::consts::PI * u2,
        2.0 * std::f64::consts::PI * u3,
    );
    Quat::new(a * t2.sin(), a * t2.cos(), b * t3.sin(), b * t3.cos()).normalized()
}

/// Star-shaped CCW vertex loop about the local origin.
fn random_loop(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec2> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut angles: Vec<f64> = (0..n)
        .map(|k| {
            let base = two_pi * k as f64 / n as f64;
            base + rng.gen_range(-0.25..0.25) * two_pi / n as f64
        })
        .collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    angles
        .iter()
        .map(|&a| {
            let r = rng.gen_range(5.0..15.0);
            Vec2::new(r * a.cos(), r * a.sin())
        })
        .collect()
}

fn random_panel(rng: &mut ChaCha8Rng, name: &str) -> Panel {
    let n = rng.gen_range(4..=8);
    let vertices = random_loop(rng, n);
    let mut panel = Panel {
        name: name.to_string(),
        vertices: vertices.clone(),
        edges: (0..n).map(|k| EdgeSpec::line(k, (k + 1) % n)).collect(),
        rotation: random_unit_quat(rng),
        translation: Vec3::new(
            rng.gen_range(-40.0..40.0),
            rng.gen_range(-40.0..40.0),
            rng.gen_range(-40.0..40.0),
        ),
    };
    for k in 0..n {
        let (a, b) = (vertices[k], vertices[(k + 1) % n]);
        let chord = b.sub(a);
        let clen = chord.norm();
        let mid = a.lerp(b, 0.5);
        // Small outward bulge keeps the boundary simple.
        let outward = mid.scale(1.0 / mid.norm().max(1e-9));
        let roll: f64 = rng.gen();
        panel.edges[k] = if roll < 0.5 {
            EdgeSpec::line(k, (k + 1) % n)
        } else if roll < 0.7 {
            let c = mid.add(outward.scale(rng.gen_range(0.02..0.12) * clen));
            EdgeSpec::quad(k, (k + 1) % n, c)
        } else if roll < 0.85 {
            let bulge = rng.gen_range(0.02..0.10) * clen;
            let c1 = a.lerp(b, 1.0 / 3.0).add(outward.scale(bulge));
            let c2 = a.lerp(b, 2.0 / 3.0).add(outward.scale(bulge));
            EdgeSpec::cubic(k, (k + 1) % n, c1, c2)
        } else {
            let radius = rng.gen_range(1.2..3.0) * clen;
            // Pick the sweep whose midpoint bulges away from the centroid.
            let cands = [
                EdgeSpec::arc(k, (k + 1) % n, radius, false, true),
                EdgeSpec::arc(k, (k + 1) % n, radius, false, false),
            ];
            let dist = |e: &EdgeSpec| eval_edge(&panel, e, 0.5).map(|p| p.norm()).unwrap_or(0.0);
            if dist(&cands[0]) >= dist(&cands[1]) {
                cands[0].clone()
            } else {
                cands[1].clone()
            }
        };
    }
    panel
}

/// Deterministic random pattern: 1-8 panels, mixed edge kinds, 0-6 stitches
/// over distinct edges. Always passes validation.
pub fn random_pattern(seed: u64) -> SewingPattern {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_panels = rng.gen_range(1..=8);
    let panels: Vec<Panel> = (0..n_panels)
        .map(|i| random_panel(&mut rng, NAMES[i]))
        .collect();

    let mut free: Vec<EdgeRef> = panels
        .iter()
        .enumerate()
        .flat_map(|(pi, p)| (0..p.edges.len()).map(move |e| EdgeRef { panel: pi, edge: e }))
        .collect();
    let mut stitches = Vec::new();
    let want = rng.gen_range(0..=6usize.min(free.len() / 2));
    for _ in 0..want {
        let a = free.swap_remove(rng.gen_range(0..free.len()));
        let b = free.swap_remove(rng.gen_range(0..free.len()));
        stitches.push(Stitch::new(a, b));
    }
    stitches.sort();
    SewingPattern { panels, stitches }
}
