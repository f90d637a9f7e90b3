//! Property-based round-trip and invariance checks.

use proptest::prelude::*;

use patternforge::boxmesh::{build_boxmesh, normalize_mesh, BuildConfig};
use patternforge::mesh_tokens::{
    block_offset_decode, block_offset_encode, detokenize_mesh, quantize_mesh,
    tokenize_mesh_compressive, tokenize_mesh_direct,
};
use patternforge::pattern::{parse_pattern, serialize_pattern};
use patternforge::pattern_tokens::{
    detokenize_pattern, tokenize_pattern, PatternVocab, QuantConfig,
};
use patternforge::synth::random_pattern;

fn vocab() -> PatternVocab {
    let names: Vec<String> = [
        "front", "back", "sleeve_l", "sleeve_r", "collar", "cuff", "pocket", "hem",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    PatternVocab::new(&names).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lossless_pattern_tokens_invert(seed in 0u64..10_000) {
        let p = random_pattern(seed);
        let v = vocab();
        let q = QuantConfig::lossless();
        let s = tokenize_pattern(&p, &v, &q).unwrap();
        prop_assert_eq!(detokenize_pattern(&s, &v, &q, false).unwrap(), p);
    }

    #[test]
    fn serialize_parse_is_identity_on_reparsed(seed in 0u64..10_000) {
        // One canonicalization pass (parse of the 6-decimal form), then the
        // serializer must be byte-stable.
        let mut p = random_pattern(seed);
        for panel in &mut p.panels {
            panel.rotation = patternforge::geom::Quat::new(0.5, 0.5, 0.5, 0.5);
        }
        let text = serialize_pattern(&p);
        let reparsed = parse_pattern(&text).unwrap();
        prop_assert_eq!(serialize_pattern(&reparsed), text);
    }

    #[test]
    fn mesh_tokens_invert(seed in 0u64..5_000) {
        let p = random_pattern(seed);
        let mesh = build_boxmesh(&p, &BuildConfig::default()).unwrap();
        let q = quantize_mesh(&normalize_mesh(&mesh).unwrap().0, 128).unwrap();
        let direct = tokenize_mesh_direct(&q, 1_000_000).unwrap();
        let comp = tokenize_mesh_compressive(&q, 16, 1_000_000).unwrap();
        let a = detokenize_mesh(&direct).unwrap();
        let b = detokenize_mesh(&comp).unwrap();
        prop_assert_eq!(&a.vertices, &q.vertices);
        prop_assert_eq!(b.vertices.len(), q.vertices.len());
        prop_assert_eq!(a.faces.len(), q.faces.len());
        prop_assert_eq!(b.faces.len(), q.faces.len());
    }

    #[test]
    fn block_offset_round_trips(
        x in 0u32..128, y in 0u32..128, z in 0u32..128,
        block in prop::sample::select(vec![8u32, 16, 32])
    ) {
        let v = [x, y, z];
        let (bid, off) = block_offset_encode(v, 128, block).unwrap();
        prop_assert_eq!(block_offset_decode(bid, off, 128, block).unwrap(), v);
    }
}
