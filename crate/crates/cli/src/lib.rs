pub mod app;
pub mod config;
pub mod par;
pub mod suites;
