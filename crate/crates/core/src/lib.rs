pub mod cypher;
pub mod engine;
pub mod graph;
pub mod triples;
pub mod nlp;
pub mod classifier;
pub mod entity;
pub mod builder;
pub mod service;
pub mod eval;
pub mod server;
