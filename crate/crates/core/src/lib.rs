pub mod api;
pub mod cli;
pub mod clock;
pub mod demo;
pub mod deploy;
pub mod hash;
pub mod manifest;
pub mod notebook;
pub mod persist;
pub mod platform;
pub mod report;
pub mod sandbox;
pub mod workflow;
