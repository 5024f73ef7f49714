//! Simulated smart home: virtual devices with published TDs and simple
//! state machines, an HTTP facade, event emission and virtual time.
//!
//! The world is the execution oracle for every end-to-end test: device
//! state changes only through [`WorldState::handle`] (requests routed by
//! TD base and form href) and [`WorldState::emit`], and a `tick` counter
//! stands in for wall-clock time so scenario `wait` steps run in
//! microseconds.

mod server;
mod world;

pub use server::{serve_http, WorldServer};
pub use world::{
    load_world, load_world_str, Device, InvocationRecord, SharedWorld, WorldError, WorldState,
};
