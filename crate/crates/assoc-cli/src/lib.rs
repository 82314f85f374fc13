//! Library surface of the command-line front end: CSV ingestion, report
//! assembly, and the simulation harness.

pub mod io;
pub mod report;
pub mod sim;
