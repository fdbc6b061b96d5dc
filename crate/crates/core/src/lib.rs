//! Deterministic simulator of an ingress tunnel router's control plane:
//! map-cache, per-source miss rate limiting with a Count-Min Sketch, and
//! the workloads and experiments used to evaluate them.

pub mod cms;
pub mod experiment;
pub mod limiter;
pub mod map_cache;
pub mod time;
pub mod workload;
pub mod xtr;
