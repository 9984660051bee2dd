//! Core library for `mapex`, a multi-agent LLM keyphrase extraction pipeline.
//!
//! The pipeline recruits a domain-expert persona for each document, extracts
//! candidate keyphrases with that persona, refines the candidates along one of
//! two routes chosen by document length (an external-knowledge route for short
//! documents, a topic-guided route for long ones), and post-processes the
//! result. The crate also ships the surrounding machinery: corpus ingestion
//! and stats, a record/replay LLM gateway, a Wikipedia summary client with a
//! persistent cache, and an evaluation kit (stemmed F1@K, length-binned gain
//! analysis).

pub mod agents;
pub mod corpus;
pub mod evalkit;
pub mod gateway;
pub mod knowledge;
pub mod pipeline;
pub mod postprocess;
pub mod text;
