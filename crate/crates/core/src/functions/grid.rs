//! Component specifications, the component grid and per-video instantiation.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::components::{
    Continuity, DisparityMin, FacilityLocation, GraphCut, ProbSetCover, SaturatedCoverage, SetCover,
};
use super::modular::ALL_FEATURES;
use super::{SetFunction, Shape};
use crate::corpus::{AnnotatedVideo, FeatureKind};
use crate::error::{Error, Result};
use crate::kernels::{
    concept_matrix, similarity_matrix, ConceptInterpretation, ConceptMatrix, DistanceMatrix, SimilarityMatrix,
};

/// Feature source of components defined on snippet indices (continuity).
pub const INDICES_SOURCE: &str = "indices";
pub const DEFAULT_GRAPH_CUT_LAMBDA: f64 = 0.5;
pub const DEFAULT_SATCOV_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    SetCover,
    ProbSetCover,
    FacilityLocation,
    SaturatedCoverage,
    GraphCut,
    DisparityMin,
    Continuity,
    Modular,
}

impl ComponentKind {
    pub const STRUCTURED: [ComponentKind; 7] = [
        ComponentKind::SetCover,
        ComponentKind::ProbSetCover,
        ComponentKind::FacilityLocation,
        ComponentKind::SaturatedCoverage,
        ComponentKind::GraphCut,
        ComponentKind::DisparityMin,
        ComponentKind::Continuity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ComponentKind::SetCover => "set_cover",
            ComponentKind::ProbSetCover => "prob_set_cover",
            ComponentKind::FacilityLocation => "facility_location",
            ComponentKind::SaturatedCoverage => "saturated_coverage",
            ComponentKind::GraphCut => "graph_cut",
            ComponentKind::DisparityMin => "disparity_min",
            ComponentKind::Continuity => "continuity",
            ComponentKind::Modular => "modular",
        }
    }

    pub fn needs_concepts(self) -> bool {
        matches!(self, ComponentKind::SetCover | ComponentKind::ProbSetCover)
    }

    pub fn needs_similarity(self) -> bool {
        matches!(
            self,
            ComponentKind::FacilityLocation
                | ComponentKind::SaturatedCoverage
                | ComponentKind::GraphCut
                | ComponentKind::DisparityMin
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_cut_lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub satcov_fraction: Option<f64>,
    /// Binarizes the concept matrix at this value for coverage kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub kind: ComponentKind,
    pub feature_source: String,
    #[serde(default)]
    pub hyperparams: Hyperparams,
    /// Domains the component is enabled for; `None` enables it everywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domains: Option<Vec<String>>,
}

impl ComponentSpec {
    pub fn new(kind: ComponentKind, feature_source: impl Into<String>) -> Self {
        ComponentSpec {
            kind,
            feature_source: feature_source.into(),
            hyperparams: Hyperparams::default(),
            domains: None,
        }
    }

    pub fn graph_cut(feature_source: impl Into<String>, lambda: f64) -> Self {
        let mut s = Self::new(ComponentKind::GraphCut, feature_source);
        s.hyperparams.graph_cut_lambda = Some(lambda);
        s
    }

    pub fn lambda(&self) -> f64 {
        self.hyperparams.graph_cut_lambda.unwrap_or(DEFAULT_GRAPH_CUT_LAMBDA)
    }

    pub fn satcov_fraction(&self) -> f64 {
        self.hyperparams.satcov_fraction.unwrap_or(DEFAULT_SATCOV_FRACTION)
    }

    /// Stable identifier such as `graph_cut[0.2]:scene`.
    pub fn id(&self) -> String {
        let mut tags = Vec::new();
        if self.kind == ComponentKind::GraphCut {
            tags.push(format!("{}", self.lambda()));
        }
        if let Some(f) = self.hyperparams.satcov_fraction {
            tags.push(format!("c={f}"));
        }
        if let Some(t) = self.hyperparams.concept_threshold {
            tags.push(format!("t={t}"));
        }
        let tag = if tags.is_empty() {
            String::new()
        } else {
            format!("[{}]", tags.join(","))
        };
        format!("{}{}:{}", self.kind.as_str(), tag, self.feature_source)
    }

    pub fn enabled_for(&self, domain: Option<&str>) -> bool {
        match (&self.domains, domain) {
            (None, _) => true,
            (Some(list), Some(d)) => list.iter().any(|x| x == d),
            (Some(_), None) => false,
        }
    }

    fn incompatible(&self, reason: impl Into<String>) -> Error {
        Error::IncompatibleSource {
            component: self.id(),
            source_name: self.feature_source.clone(),
            reason: reason.into(),
        }
    }

    /// Checks the source against the video's feature families.
    pub fn check_source(&self, video: &AnnotatedVideo) -> Result<()> {
        match self.kind {
            ComponentKind::Continuity => {
                if self.feature_source != INDICES_SOURCE {
                    return Err(self.incompatible("continuity is defined on snippet indices"));
                }
            }
            ComponentKind::Modular => {
                if self.feature_source != ALL_FEATURES {
                    video.feature(&self.feature_source)?;
                }
            }
            kind => {
                let fm = video.feature(&self.feature_source)?;
                if kind.needs_similarity() && fm.kind != FeatureKind::Dense {
                    return Err(self.incompatible("similarity components need a dense feature"));
                }
                if kind.needs_concepts() && !fm.kind.is_concept() {
                    return Err(self.incompatible("coverage components need a concept feature"));
                }
                if kind == ComponentKind::ProbSetCover
                    && fm.kind == FeatureKind::Count
                    && self.hyperparams.concept_threshold.is_none()
                {
                    return Err(self.incompatible("counts are not probabilities; set a concept threshold"));
                }
            }
        }
        if let Some(l) = self.hyperparams.graph_cut_lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(self.incompatible(format!("graph cut λ must be ≥ 0, got {l}")));
            }
        }
        if let Some(f) = self.hyperparams.satcov_fraction {
            if !(f > 0.0 && f.is_finite()) {
                return Err(self.incompatible(format!("saturation fraction must be > 0, got {f}")));
            }
        }
        Ok(())
    }
}

/// The list of components a mixture is built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub components: Vec<ComponentSpec>,
}

impl GridConfig {
    /// Facility location, saturated coverage, graph cut (λ = 0.2 and 0.8) and
    /// disparity-min per dense family; set cover and probabilistic set cover
    /// per concept family; continuity on indices; one modular term over all
    /// families.
    pub fn default_for(families: &[(String, FeatureKind)]) -> Self {
        let mut components = Vec::new();
        for (name, _) in families.iter().filter(|(_, k)| *k == FeatureKind::Dense) {
            components.push(ComponentSpec::new(ComponentKind::FacilityLocation, name));
            components.push(ComponentSpec::new(ComponentKind::SaturatedCoverage, name));
            components.push(ComponentSpec::graph_cut(name, 0.2));
            components.push(ComponentSpec::graph_cut(name, 0.8));
            components.push(ComponentSpec::new(ComponentKind::DisparityMin, name));
        }
        for (name, kind) in families.iter().filter(|(_, k)| k.is_concept()) {
            components.push(ComponentSpec::new(ComponentKind::SetCover, name));
            if *kind == FeatureKind::Probability {
                components.push(ComponentSpec::new(ComponentKind::ProbSetCover, name));
            } else {
                let mut s = ComponentSpec::new(ComponentKind::ProbSetCover, name);
                s.hyperparams.concept_threshold = Some(0.5);
                components.push(s);
            }
        }
        components.push(ComponentSpec::new(ComponentKind::Continuity, INDICES_SOURCE));
        components.push(ComponentSpec::new(ComponentKind::Modular, ALL_FEATURES));
        GridConfig { components }
    }

    pub fn default_for_video(video: &AnnotatedVideo) -> Self {
        let families: Vec<(String, FeatureKind)> = video.features.iter().map(|(n, f)| (n.clone(), f.kind)).collect();
        Self::default_for(&families)
    }

    pub fn load(path: &Path) -> Result<Self> {
        crate::corpus::read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::corpus::write_json(path, self)
    }

    pub fn for_domain(&self, domain: Option<&str>) -> Self {
        GridConfig {
            components: self
                .components
                .iter()
                .filter(|c| c.enabled_for(domain))
                .cloned()
                .collect(),
        }
    }

    /// Non-modular components in grid order.
    pub fn structured(&self) -> impl Iterator<Item = &ComponentSpec> {
        self.components.iter().filter(|c| c.kind != ComponentKind::Modular)
    }

    /// Feature sources of the modular term in grid order.
    pub fn modular_sources(&self) -> Vec<String> {
        self.components
            .iter()
            .filter(|c| c.kind == ComponentKind::Modular)
            .map(|c| c.feature_source.clone())
            .collect()
    }

    pub fn keep_only(&self, keep: impl Fn(&ComponentSpec) -> bool) -> Self {
        GridConfig {
            components: self.components.iter().filter(|c| keep(c)).cloned().collect(),
        }
    }
}

/// A component bound to one video.
#[derive(Debug, Clone)]
pub struct ComponentInstance {
    pub spec: ComponentSpec,
    func: Box<dyn SetFunction>,
}

impl ComponentInstance {
    pub fn new(spec: ComponentSpec, func: Box<dyn SetFunction>) -> Self {
        ComponentInstance { spec, func }
    }

    pub fn id(&self) -> String {
        self.spec.id()
    }

    pub fn inner(&self) -> &dyn SetFunction {
        self.func.as_ref()
    }
}

impl SetFunction for ComponentInstance {
    fn name(&self) -> String {
        self.spec.id()
    }

    fn ground_size(&self) -> usize {
        self.func.ground_size()
    }

    fn shape(&self) -> Shape {
        self.func.shape()
    }

    fn is_monotone(&self) -> bool {
        self.func.is_monotone()
    }

    fn evaluate(&self, set: &[usize]) -> f64 {
        self.func.evaluate(set)
    }

    fn selected(&self) -> &[usize] {
        self.func.selected()
    }

    fn is_selected(&self, e: usize) -> bool {
        self.func.is_selected(e)
    }

    fn value(&self) -> f64 {
        self.func.value()
    }

    fn gain(&self, e: usize) -> f64 {
        self.func.gain(e)
    }

    fn insert(&mut self, e: usize) {
        self.func.insert(e)
    }

    fn reset(&mut self) {
        self.func.reset()
    }

    fn distances(&self) -> Option<&DistanceMatrix> {
        self.func.distances()
    }

    fn box_clone(&self) -> Box<dyn SetFunction> {
        Box::new(self.clone())
    }
}

/// Instantiates components for one video, sharing kernels between them.
pub struct InstanceBuilder<'a> {
    video: &'a AnnotatedVideo,
    sims: BTreeMap<String, Arc<SimilarityMatrix>>,
    dists: BTreeMap<String, Arc<DistanceMatrix>>,
    concepts: BTreeMap<(String, Option<u64>), Arc<ConceptMatrix>>,
}

impl<'a> InstanceBuilder<'a> {
    pub fn new(video: &'a AnnotatedVideo) -> Self {
        InstanceBuilder {
            video,
            sims: BTreeMap::new(),
            dists: BTreeMap::new(),
            concepts: BTreeMap::new(),
        }
    }

    pub fn similarity(&mut self, source: &str) -> Result<Arc<SimilarityMatrix>> {
        if let Some(s) = self.sims.get(source) {
            return Ok(s.clone());
        }
        let s = Arc::new(similarity_matrix(self.video.feature(source)?)?);
        self.sims.insert(source.to_string(), s.clone());
        Ok(s)
    }

    pub fn distances(&mut self, source: &str) -> Result<Arc<DistanceMatrix>> {
        if let Some(d) = self.dists.get(source) {
            return Ok(d.clone());
        }
        let d = Arc::new(self.similarity(source)?.to_distances());
        self.dists.insert(source.to_string(), d.clone());
        Ok(d)
    }

    fn concepts(&mut self, source: &str, threshold: Option<f64>) -> Result<Arc<ConceptMatrix>> {
        let key = (source.to_string(), threshold.map(f64::to_bits));
        if let Some(c) = self.concepts.get(&key) {
            return Ok(c.clone());
        }
        let mut c = concept_matrix(self.video.feature(source)?)?;
        if let Some(t) = threshold {
            c = c.binarized(t);
            c.interpretation = ConceptInterpretation::Probability;
        }
        let c = Arc::new(c);
        self.concepts.insert(key, c.clone());
        Ok(c)
    }

    /// Binds a structured component; modular terms need weights and are built
    /// from [`super::ModularFeatures`] instead.
    pub fn build(&mut self, spec: &ComponentSpec) -> Result<ComponentInstance> {
        spec.check_source(self.video)?;
        let name = spec.id();
        let src = spec.feature_source.as_str();
        let func: Box<dyn SetFunction> = match spec.kind {
            ComponentKind::SetCover => Box::new(SetCover::new(
                name,
                self.concepts(src, spec.hyperparams.concept_threshold)?,
            )),
            ComponentKind::ProbSetCover => Box::new(ProbSetCover::new(
                name,
                self.concepts(src, spec.hyperparams.concept_threshold)?,
            )),
            ComponentKind::FacilityLocation => Box::new(FacilityLocation::new(name, self.similarity(src)?)),
            ComponentKind::SaturatedCoverage => Box::new(SaturatedCoverage::new(
                name,
                self.similarity(src)?,
                spec.satcov_fraction(),
            )),
            ComponentKind::GraphCut => Box::new(GraphCut::new(name, self.similarity(src)?, spec.lambda())),
            ComponentKind::DisparityMin => Box::new(DisparityMin::new(name, self.distances(src)?)),
            ComponentKind::Continuity => Box::new(Continuity::new(name, &self.video.shots)),
            ComponentKind::Modular => {
                return Err(Error::InvalidArgument(
                    "modular terms are built from feature rows and weights".into(),
                ))
            }
        };
        Ok(ComponentInstance::new(spec.clone(), func))
    }

    pub fn build_all(&mut self, grid: &GridConfig) -> Result<Vec<ComponentInstance>> {
        grid.structured().map(|s| self.build(s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::FeatureMatrix;

    fn video() -> AnnotatedVideo {
        let mut features = BTreeMap::new();
        features.insert(
            "scene".to_string(),
            FeatureMatrix::new(
                "scene",
                FeatureKind::Dense,
                4,
                2,
                vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0, -1.0, 0.0],
            )
            .unwrap(),
        );
        features.insert(
            "objects".to_string(),
            FeatureMatrix::new("objects", FeatureKind::Probability, 4, 1, vec![0.1, 0.9, 0.5, 0.0]).unwrap(),
        );
        features.insert(
            "counts".to_string(),
            FeatureMatrix::new("counts", FeatureKind::Count, 4, 1, vec![0.0, 2.0, 1.0, 0.0]).unwrap(),
        );
        AnnotatedVideo::new("v", 2.0, 4, features, vec![(0, 2), (2, 4)], vec![]).unwrap()
    }

    #[test]
    fn default_grid_builds_for_every_family() {
        let v = video();
        let grid = GridConfig::default_for_video(&v);
        assert_eq!(grid.structured().count(), 5 + 2 + 2 + 1);
        assert_eq!(grid.modular_sources(), vec![ALL_FEATURES.to_string()]);
        let instances = InstanceBuilder::new(&v).build_all(&grid).unwrap();
        assert!(instances.iter().all(|c| c.ground_size() == 4));
        let ids: Vec<String> = instances.iter().map(|c| c.id()).collect();
        assert!(ids.contains(&"graph_cut[0.2]:scene".to_string()));
        assert!(ids.contains(&"continuity:indices".to_string()));
    }

    #[test]
    fn incompatible_sources_rejected() {
        let v = video();
        let mut b = InstanceBuilder::new(&v);
        for spec in [
            ComponentSpec::new(ComponentKind::FacilityLocation, "objects"),
            ComponentSpec::new(ComponentKind::SetCover, "scene"),
            ComponentSpec::new(ComponentKind::ProbSetCover, "counts"),
            ComponentSpec::new(ComponentKind::Continuity, "scene"),
            ComponentSpec::graph_cut("scene", -1.0),
        ] {
            assert!(
                matches!(b.build(&spec), Err(Error::IncompatibleSource { .. })),
                "{}",
                spec.id()
            );
        }
        assert!(matches!(
            b.build(&ComponentSpec::new(ComponentKind::FacilityLocation, "nope")),
            Err(Error::MissingFeature { .. })
        ));
    }

    #[test]
    fn grid_json_roundtrip_and_domain_filter() {
        let mut grid = GridConfig::default_for_video(&video());
        grid.components[0].domains = Some(vec!["cricket".into()]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.json");
        grid.save(&path).unwrap();
        let back = GridConfig::load(&path).unwrap();
        assert_eq!(back, grid);
        assert_eq!(back.for_domain(Some("cricket")).components.len(), grid.components.len());
        assert_eq!(
            back.for_domain(Some("birthday")).components.len(),
            grid.components.len() - 1
        );
    }

    #[test]
    fn builder_shares_kernels() {
        let v = video();
        let mut b = InstanceBuilder::new(&v);
        let a = b.similarity("scene").unwrap();
        let c = b.similarity("scene").unwrap();
        assert!(Arc::ptr_eq(&a, &c));
    }
}
