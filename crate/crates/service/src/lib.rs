//! Long-lived ranking sessions for human judges.
//!
//! A session is its labels, engine config, seed and journal of answers;
//! engine state is rebuilt by replaying the journal, so a restarted server
//! asks exactly the question it would have asked before.

pub mod api;
mod error;
pub mod http;
pub mod session;
mod store;

pub use error::ServiceError;
pub use http::{router, serve};
pub use session::{FaultPoint, Session, SessionMeta};
pub use store::SessionStore;
