//! Live debugging sessions: the developer asks which fault-localization
//! technique to use on the next module, debugs it, then reports how every
//! technique would have fared. Sessions persist as JSON files and are served
//! over an HTTP API.

pub mod error;
pub mod http;
pub mod model;
pub mod service;
pub mod store;

pub use error::{Result, SessionError};
pub use model::{
    ArmAggregates, ArmLocation, Recommendation, RoundLogEntry, RoundOutcome, RoundReport, SessionState,
    SessionStatus, SessionSummary, SessionView,
};
pub use service::SessionService;
pub use store::{SessionStore, STORE_ENV};
