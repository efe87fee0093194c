//! Decentralized coded caching over a multi-transmitter linear network
//! with finite-field symbols.

pub mod analytics;
pub mod channel;
pub mod combin;
pub mod content;
pub mod decoder;
pub mod delivery;
pub mod error;
pub mod experiments;
pub mod gf;
pub mod placement;
pub mod seed;
pub mod sim;

pub use channel::LinearNetwork;
pub use content::{CacheMap, FileLibrary, PieceTable, SystemConfig, UserSet};
pub use delivery::{DeliveryPlan, DeliveryReport, TransmissionSchedule};
pub use error::{Error, Result};
pub use gf::{Field, FieldElement, FieldMatrix, FieldVector};
pub use placement::Placement;
pub use sim::{Delivery, TrialOutcome, TrialSetup};
