//! Session service and command-line front end for the map planner: HTTP
//! API, file-system session store, layered configuration and agent
//! backends.

pub mod api;
pub mod backend;
pub mod config;
pub mod service;
pub mod session;
pub mod store;
