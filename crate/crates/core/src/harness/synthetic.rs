//! Seeded synthetic corpora with rating-dependent feature clusters.
//!
//! Every informative feature family has one cluster center per rating value.
//! A domain's centers blend centers shared by all domains with
//! domain-specific ones according to its `separation`, so that at separation
//! 0 every domain looks the same and at separation 1 domains disagree on
//! which directions mark highly rated content.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{read_json, AnnotatedVideo, FeatureKind, FeatureMatrix, Segment, MAX_RATING, MIN_RATING};
use crate::error::{Error, Result};

const N_RATINGS: usize = (MAX_RATING - MIN_RATING + 1) as usize;

/// The checked-in corpus configuration.
pub const DEFAULT_SYNTHETIC_CONFIG: &str = include_str!("../../configs/synthetic.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseFamily {
    pub name: String,
    pub dim: usize,
    /// Whether cluster centers depend on the rating; otherwise every segment
    /// gets its own random direction.
    pub informative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptFamily {
    pub name: String,
    pub vocabulary: Vec<String>,
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    pub domain: String,
    /// 0: centers shared with every domain; 1: fully domain-specific.
    pub separation: f64,
    pub negative_prob: f64,
    /// Relative frequency of ratings 0, 1, 2, 3 among non-negative segments.
    pub positive_rating_weights: [f64; 4],
    /// Relative frequency of ratings −1, −2, −3 among negative segments.
    pub negative_rating_weights: [f64; 3],
    /// Probability that a segment rated ≥ 1 is repetitive.
    pub repetitive_prob: f64,
    /// Inclusive snippet-length range of ordinary segments.
    pub segment_len: (usize, usize),
    /// Inclusive snippet-length range of repetitive segments.
    pub repetitive_len: (usize, usize),
    /// Probability of an unannotated gap before a segment.
    pub gap_prob: f64,
    pub gap_len: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub seed: u64,
    pub snippet_seconds: f64,
    pub videos_per_domain: usize,
    pub snippets_per_video: usize,
    pub dense_families: Vec<DenseFamily>,
    pub concept_families: Vec<ConceptFamily>,
    /// Spread of the per-segment offset around the cluster center.
    pub segment_noise: f64,
    /// Spread of individual snippets around their segment.
    pub snippet_noise: f64,
    /// Snippet spread inside repetitive segments.
    pub repetitive_noise: f64,
    /// Logit scale of concept activations.
    pub concept_scale: f64,
    /// Probability that two neighbouring segments share a shot.
    pub shot_merge_prob: f64,
    pub domains: Vec<DomainConfig>,
}

impl CorpusConfig {
    pub fn default_config() -> Self {
        serde_json::from_str(DEFAULT_SYNTHETIC_CONFIG).expect("checked-in synthetic config parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn domain_names(&self) -> Vec<String> {
        self.domains.iter().map(|d| d.domain.clone()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.domains.is_empty() {
            return bad("no domains".into());
        }
        if self.snippets_per_video == 0 || self.videos_per_domain == 0 {
            return bad("videos need at least one snippet".into());
        }
        for d in &self.domains {
            let (a, b) = d.segment_len;
            let (ra, rb) = d.repetitive_len;
            if a == 0 || b < a || ra == 0 || rb < ra || d.gap_len.0 == 0 || d.gap_len.1 < d.gap_len.0 {
                return bad(format!("domain {}: zero-length or empty segment range", d.domain));
            }
            if d.positive_rating_weights.iter().sum::<f64>() <= 0.0
                || d.negative_rating_weights.iter().sum::<f64>() <= 0.0
            {
                return bad(format!("domain {}: rating weights sum to zero", d.domain));
            }
            for p in [d.negative_prob, d.repetitive_prob, d.gap_prob, d.separation] {
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("domain {}: probability {p} outside [0, 1]", d.domain));
                }
            }
        }
        Ok(())
    }
}

/// A domain with its realized cluster centers.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDomainSpec {
    pub config: DomainConfig,
    pub seed: u64,
    /// Unit-norm center per informative dense family and rating (index `r + 3`).
    pub centers: BTreeMap<String, Vec<Vec<f64>>>,
    /// Concept logits per concept family and rating.
    pub concept_profiles: BTreeMap<String, Vec<Vec<f64>>>,
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut x = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    x ^= x >> 31;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^ (x >> 29)
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.into_iter().map(|x| x / norm).collect()
    } else {
        v
    }
}

fn blend(shared: &[f64], own: &[f64], separation: f64) -> Vec<f64> {
    shared
        .iter()
        .zip(own)
        .map(|(s, o)| (1.0 - separation) * s + separation * o)
        .collect()
}

/// Realizes the cluster centers of every domain in `config`.
pub fn realize_domains(config: &CorpusConfig) -> Vec<SyntheticDomainSpec> {
    let mut shared_rng = ChaCha8Rng::seed_from_u64(mix(config.seed, 0, u64::MAX));
    let shared_centers: BTreeMap<&str, Vec<Vec<f64>>> = config
        .dense_families
        .iter()
        .filter(|f| f.informative)
        .map(|f| {
            (
                f.name.as_str(),
                (0..N_RATINGS).map(|_| unit(gaussian(&mut shared_rng, f.dim))).collect(),
            )
        })
        .collect();
    let shared_profiles: BTreeMap<&str, Vec<Vec<f64>>> = config
        .concept_families
        .iter()
        .map(|f| {
            (
                f.name.as_str(),
                (0..N_RATINGS)
                    .map(|_| gaussian(&mut shared_rng, f.vocabulary.len()))
                    .collect(),
            )
        })
        .collect();
    config
        .domains
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let seed = mix(config.seed, i as u64 + 1, 0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let centers = shared_centers
                .iter()
                .map(|(name, shared)| {
                    let own: Vec<Vec<f64>> = shared
                        .iter()
                        .map(|s| blend(s, &unit(gaussian(&mut rng, s.len())), d.separation))
                        .map(unit)
                        .collect();
                    (name.to_string(), own)
                })
                .collect();
            let concept_profiles = shared_profiles
                .iter()
                .map(|(name, shared)| {
                    let own = shared
                        .iter()
                        .map(|s| blend(s, &gaussian(&mut rng, s.len()), d.separation))
                        .collect();
                    (name.to_string(), own)
                })
                .collect();
            SyntheticDomainSpec {
                config: d.clone(),
                seed,
                centers,
                concept_profiles,
            }
        })
        .collect()
}

fn pick_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// A run of snippets with one rating; `annotated` is false for gaps.
struct Block {
    start: usize,
    len: usize,
    rating: i8,
    repetitive: bool,
    annotated: bool,
}

fn layout(d: &DomainConfig, n: usize, rng: &mut ChaCha8Rng) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut t = 0;
    while t < n {
        if rng.random_bool(d.gap_prob) {
            let len = rng.random_range(d.gap_len.0..=d.gap_len.1).min(n - t);
            blocks.push(Block {
                start: t,
                len,
                rating: 0,
                repetitive: false,
                annotated: false,
            });
            t += len;
            if t >= n {
                break;
            }
        }
        let rating = if rng.random_bool(d.negative_prob) {
            -1 - pick_weighted(rng, &d.negative_rating_weights) as i8
        } else {
            pick_weighted(rng, &d.positive_rating_weights) as i8
        };
        let repetitive = rating >= 1 && rng.random_bool(d.repetitive_prob);
        let range = if repetitive { d.repetitive_len } else { d.segment_len };
        let len = rng.random_range(range.0..=range.1).min(n - t);
        blocks.push(Block {
            start: t,
            len,
            rating,
            repetitive,
            annotated: true,
        });
        t += len;
    }
    blocks
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One video of `spec`'s domain.
pub fn generate_video(config: &CorpusConfig, spec: &SyntheticDomainSpec, index: usize) -> Result<AnnotatedVideo> {
    let n = config.snippets_per_video;
    let mut rng = ChaCha8Rng::seed_from_u64(mix(spec.seed, index as u64, 1));
    let blocks = layout(&spec.config, n, &mut rng);
    let seg_noise = Normal::new(0.0, config.segment_noise).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let snip = |rep: bool| {
        if rep {
            config.repetitive_noise
        } else {
            config.snippet_noise
        }
    };

    let mut features = BTreeMap::new();
    for fam in &config.dense_families {
        let mut values = Vec::with_capacity(n * fam.dim);
        for b in &blocks {
            let base: Vec<f64> = if fam.informative {
                spec.centers[&fam.name][(b.rating - MIN_RATING) as usize]
                    .iter()
                    .map(|c| c + seg_noise.sample(&mut rng))
                    .collect()
            } else {
                gaussian(&mut rng, fam.dim)
            };
            let noise = Normal::new(0.0, snip(b.repetitive)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            for _ in 0..b.len {
                values.extend(base.iter().map(|c| (c + noise.sample(&mut rng)) as f32));
            }
        }
        features.insert(
            fam.name.clone(),
            FeatureMatrix::new(fam.name.clone(), FeatureKind::Dense, n, fam.dim, values)?,
        );
    }
    for fam in &config.concept_families {
        let k = fam.vocabulary.len();
        let mut values = Vec::with_capacity(n * k);
        for b in &blocks {
            let profile = &spec.concept_profiles[&fam.name][(b.rating - MIN_RATING) as usize];
            let base: Vec<f64> = profile.iter().map(|p| p + seg_noise.sample(&mut rng)).collect();
            let noise = Normal::new(0.0, snip(b.repetitive)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            for _ in 0..b.len {
                values.extend(base.iter().map(|p| {
                    let v = sigmoid(config.concept_scale * (p + noise.sample(&mut rng)));
                    match fam.kind {
                        FeatureKind::Count => (v * 4.0).round() as f32,
                        _ => v as f32,
                    }
                }));
            }
        }
        features.insert(
            fam.name.clone(),
            FeatureMatrix::new(fam.name.clone(), fam.kind, n, k, values)?,
        );
    }

    let mut shots: Vec<(usize, usize)> = Vec::new();
    for b in &blocks {
        match shots.last_mut() {
            Some(last) if rng.random_bool(config.shot_merge_prob) => last.1 = b.start + b.len,
            _ => shots.push((b.start, b.start + b.len)),
        }
    }
    let ss = config.snippet_seconds;
    let segments = blocks
        .iter()
        .filter(|b| b.annotated)
        .map(|b| {
            let mut s = Segment::new(b.start as f64 * ss, (b.start + b.len) as f64 * ss, b.rating);
            s.repetitive = b.repetitive;
            s
        })
        .collect();
    let id = format!("{}_{:03}", spec.config.domain, index);
    Ok(AnnotatedVideo::new(id, ss, n, features, shots, segments)?.with_domain(spec.config.domain.clone()))
}

/// `videos_per_domain` videos for every domain, domain by domain.
pub fn generate_synthetic_corpus(config: &CorpusConfig) -> Result<Vec<AnnotatedVideo>> {
    config.validate()?;
    let specs = realize_domains(config);
    let mut videos = Vec::with_capacity(specs.len() * config.videos_per_domain);
    for spec in &specs {
        for i in 0..config.videos_per_domain {
            videos.push(generate_video(config, spec, i)?);
        }
    }
    Ok(videos)
}
