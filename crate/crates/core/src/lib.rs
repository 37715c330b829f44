pub mod backend;
pub mod dataprep;
pub mod evalsuite;
pub mod orchestrator;
pub mod prompting;
pub mod rag;
pub mod sandbox;
pub mod seeds;
pub mod task;
