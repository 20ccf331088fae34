pub mod adversary;
pub mod ghz;
pub mod netsim;
pub mod protocols;
pub mod seed;
pub mod stats;
pub mod verify;
