//! protoforge turns protocol specification documents into verified
//! natural-language test cases and executable testing artifacts.
//!
//! The pipeline runs in eight stages: ingest a specification into a section
//! tree, analyze it into summaries and functional modules, model each module
//! into structured representations (packet fields, state machines, message
//! sequences, protocol-specific testing points), generate test cases from the
//! enumerated testing points, verify coverage breadth and depth and refine,
//! forge executable artifacts (tester scripts plus DUT configurations) against
//! a simulated testbed, drive the small/large feedback loops, and score the
//! results. Every generative step goes through [`gateway::Gateway`], which
//! supports live, record, and deterministic replay backends so the whole
//! pipeline is testable offline.

pub mod analysis;
pub mod datafiles;
pub mod forge;
pub mod gateway;
pub mod ingest;
pub mod loops;
pub mod metrics;
pub mod modeling;
pub mod pipeline;
pub mod testbed;
pub mod testcase;
pub mod testkit;
