//! Planning core for locality-preserving service deployments.
//!
//! Takes a round-trip latency matrix and derives everything a deployment
//! needs: landmark levels, bunches and clusters, ring-structured service
//! instances around every landmark, and the per-request replication target
//! sets. A small latency simulator measures how interactions between node
//! pairs behave through the resulting plan, and [`oracle`] holds brute-force
//! reference checks for the planner's guarantees.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the
//! command-line driver live in the `crux` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
pub mod hierarchy;
pub mod netmap;
pub mod oracle;
pub mod replication;
pub mod ringplan;
pub mod sim;

pub use error::{Error, Result};
pub use hierarchy::{
    assign_levels, bunch_stats, closest_landmark_per_level, compute_bunches, compute_clusters,
    Bunch, BunchEntry, BunchStats, Cluster, LevelAssignment,
};
pub use netmap::{
    diameter, radius_spread, synth_map, validate, validate_with, NetworkMap, NodeId, RadiusSpread,
    SynthModel, ValidationReport, DEFAULT_R_MIN_MS,
};
pub use replication::{
    best_detour, meet_instances, read_targets, targets_for, write_targets, ReplicationPolicy,
    RequestClass, TargetSet,
};
pub use ringplan::{
    build_instances, instance_diameter, memberships, ring_index, Instance, InstanceId,
    InstancePlan, RingIndex, RingMode,
};
pub use sim::{Deployment, InteractionRecord, Plugin, PluginKind, Workload};
