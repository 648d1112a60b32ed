pub mod eval;
pub mod evidence;
pub mod ingest;
pub mod linearize;
pub mod lookup;
pub mod manifest;
pub mod rdf;
pub mod rules;
pub mod sampling;
pub mod shacl;
pub mod vocab;
