//! Classification of fault-diagnosis methods by location, information
//! type and data flow.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    /// A single component or data stream.
    Isolated,
    /// Multiple system parts viewed together.
    Contextual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Information {
    Meta,
    Content,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flow {
    None,
    Sequential,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MonitorTaxonomy {
    pub location: Location,
    pub info: Information,
    pub flow: Flow,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("isolated diagnosis has no data flow, got {0:?}")]
    FlowOnIsolated(Flow),
    #[error("contextual content diagnosis requires a sequential or parallel flow")]
    FlowRequired,
}

impl MonitorTaxonomy {
    pub const fn new(location: Location, info: Information, flow: Flow) -> Self {
        MonitorTaxonomy {
            location,
            info,
            flow,
        }
    }

    pub const ISOLATED_META: Self = Self::new(Location::Isolated, Information::Meta, Flow::None);
    pub const ISOLATED_CONTENT: Self =
        Self::new(Location::Isolated, Information::Content, Flow::None);
    pub const CONTEXTUAL_CONTENT_PARALLEL: Self =
        Self::new(Location::Contextual, Information::Content, Flow::Parallel);

    pub fn validate(&self) -> Result<(), TaxonomyError> {
        self.classify().map(|_| ())
    }

    /// Label of the taxonomy cell this combination belongs to.
    ///
    /// Contextual meta diagnoses form a single cell whatever the flow;
    /// contextual content diagnoses are split by flow.
    pub fn classify(&self) -> Result<&'static str, TaxonomyError> {
        use Flow as F;
        use Information as I;
        use Location as L;
        match (self.location, self.info, self.flow) {
            (L::Isolated, I::Meta, F::None) => Ok("isolated-meta"),
            (L::Isolated, I::Content, F::None) => Ok("isolated-content"),
            (L::Isolated, _, flow) => Err(TaxonomyError::FlowOnIsolated(flow)),
            (L::Contextual, I::Meta, _) => Ok("contextual-meta"),
            (L::Contextual, I::Content, F::Sequential) => Ok("contextual-content-sequential"),
            (L::Contextual, I::Content, F::Parallel) => Ok("contextual-content-parallel"),
            (L::Contextual, I::Content, F::None) => Err(TaxonomyError::FlowRequired),
        }
    }
}

/// Free-function form of [`MonitorTaxonomy::classify`].
pub fn classify(taxonomy: &MonitorTaxonomy) -> Result<&'static str, TaxonomyError> {
    taxonomy.classify()
}
