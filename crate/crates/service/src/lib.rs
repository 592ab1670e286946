//! HTTP+JSON service for conducting a TITE-CRM trial.
//!
//! | method | path | body / query |
//! |---|---|---|
//! | POST | `/trials` | `{design, strategy, skeleton?}` |
//! | GET | `/trials` | |
//! | POST | `/trials/{id}/patients` | `{time}`: enrolls at the recommended dose |
//! | POST | `/trials/{id}/events` | one event-log line |
//! | GET | `/trials/{id}/recommendation` | `?at_time=` |
//! | GET | `/trials/{id}/state` | `?at_time=` |
//! | GET | `/healthz` | |
//!
//! Times are trial weeks supplied by the client.

mod app;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;

pub use app::{router, ApiError, AppState, CreateTrial, Created, EnrollRequest, StatusSummary, TrialListing, TrialView};
pub use store::{DiskStore, StoreError, TrialMeta};

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Opens `store` (or an in-memory registry) and replays its trials.
pub fn open_state(store: Option<PathBuf>) -> Result<AppState, StoreError> {
    match store {
        Some(path) => AppState::with_store(DiskStore::open(path)?),
        None => Ok(AppState::in_memory()),
    }
}

/// Serves until ctrl-c.
pub async fn serve(addr: SocketAddr, state: AppState) -> Result<(), ServeError> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| ServeError::Bind { addr, source })?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
