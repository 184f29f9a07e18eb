pub mod dynamics;
pub mod metrics;
pub mod params;
pub mod statekit;
pub mod protocols;
pub mod dsl;
