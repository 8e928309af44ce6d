//! Scientometrics engine: corpus loading, topical delineation, specialization
//! indicators, keyword co-occurrence clustering, burst detection, SDG
//! classification and SDG interlink matrices.

pub mod burst;
pub mod cooccur;
pub mod corpus;
pub mod delineate;
pub mod export;
pub mod indicators;
pub mod interlink;
pub mod numfmt;
pub mod sdg;
pub mod text;

pub use burst::{BurstInterval, BurstParams, TermYearStream};
pub use cooccur::{ClusterAssignment, ClusterParams, CooccurrenceNetwork, WeightedGraph};
pub use corpus::{
    Affiliation, CitationGraph, Continent, Corpus, CorpusFormat, DocId, NodeId, OrgFilter, OrgType, PubIdSet,
    PublicationRecord, YearRange,
};
pub use delineate::{DatasetLabels, Provenance, TopicQuery, SCHEMA_VERSION};
pub use indicators::{ActivityIndexInput, ActorKind, ExternalTotals};
pub use interlink::{MatrixMode, SdgMatrix};
pub use numfmt::Percent;
pub use sdg::{SdgAssignment, SdgGlossary, SdgId, SdgSet};
