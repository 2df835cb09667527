mod common;

use dsvs::corpus::{
    load_manifest, load_summary, read_feature_file, save_manifest, save_summary, write_feature_file, AnnotatedVideo,
    FeatureKind, Summary,
};
use dsvs::harness::{generate_synthetic_corpus, CorpusConfig};
use proptest::prelude::*;

use common::random_video;

fn same_video(a: &AnnotatedVideo, b: &AnnotatedVideo) {
    assert_eq!(a.id, b.id);
    assert_eq!(a.domain, b.domain);
    assert_eq!(a.n_snippets, b.n_snippets);
    assert_eq!(a.snippet_seconds, b.snippet_seconds);
    assert_eq!(a.shots, b.shots);
    assert_eq!(a.segments, b.segments);
    assert_eq!(a.features, b.features);
}

#[test]
fn manifest_roundtrip_preserves_videos() {
    let dir = tempfile::tempdir().unwrap();
    let videos: Vec<AnnotatedVideo> = (0..3)
        .map(|i| random_video(&format!("v{i}"), 30 + 7 * i, 40 + i as u64).with_domain(if i == 2 { "b" } else { "a" }))
        .collect();
    let manifest = save_manifest(&videos, dir.path()).unwrap();
    let back = load_manifest(&manifest).unwrap();
    assert_eq!(back.len(), videos.len());
    for (a, b) in videos.iter().zip(&back) {
        same_video(a, b);
    }
}

#[test]
fn synthetic_corpus_roundtrips_through_disk() {
    let mut config = CorpusConfig::default_config().with_seed(3);
    config.videos_per_domain = 2;
    config.snippets_per_video = 50;
    let videos = generate_synthetic_corpus(&config).unwrap();
    assert_eq!(videos.len(), 2 * config.domains.len());
    let dir = tempfile::tempdir().unwrap();
    let back = load_manifest(&save_manifest(&videos, dir.path()).unwrap()).unwrap();
    for (a, b) in videos.iter().zip(&back) {
        same_video(a, b);
    }
}

#[test]
fn feature_file_roundtrip_and_kind() {
    let dir = tempfile::tempdir().unwrap();
    let v = random_video("x", 25, 9);
    for name in ["f", "c"] {
        let m = v.feature(name).unwrap();
        let path = dir.path().join(format!("{name}.bin"));
        write_feature_file(&path, m).unwrap();
        let back = read_feature_file(&path, name, m.kind).unwrap();
        assert_eq!(&back, m);
    }
    let path = dir.path().join("c.bin");
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
    assert!(read_feature_file(&path, "c", FeatureKind::Probability).is_err());
}

#[test]
fn summary_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let s = Summary::new("v", vec![9, 2, 5, 2]);
    save_summary(&path, &s, 3).unwrap();
    let back = load_summary(&path).unwrap();
    assert_eq!(back.budget_snippets, 3);
    assert_eq!(back.summary(), s);
    assert_eq!(back.summary().snippet_indices, vec![2, 5, 9]);
}

#[test]
fn missing_manifest_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(load_manifest(&dir.path().join("absent.json")).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_videos_roundtrip(n in 5usize..60, seed in 0u64..1000) {
        let dir = tempfile::tempdir().unwrap();
        let v = random_video("p", n, seed).with_domain("d");
        let back = load_manifest(&save_manifest(std::slice::from_ref(&v), dir.path()).unwrap()).unwrap();
        prop_assert_eq!(back.len(), 1);
        same_video(&v, &back[0]);
    }
}
