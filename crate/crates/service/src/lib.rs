//! File-backed storage, the HTTP API and the pieces the `competency` CLI is
//! built from.

pub mod api;
pub mod store;

use std::net::SocketAddr;
use std::sync::Arc;

pub use api::router;
pub use store::{AppendOutcome, Store, StoreError, StoreSnapshot};

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("port {port} is already in use")]
    PortInUse { port: u16 },
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ServeError {
    pub fn code(&self) -> &'static str {
        match self {
            ServeError::PortInUse { .. } => "PORT_IN_USE",
            ServeError::Bind { .. } | ServeError::Io(_) => "IO_ERROR",
            ServeError::Store(e) => e.code(),
        }
    }
}

/// Binds `addr`, then serves until `shutdown` resolves.
pub async fn serve(
    store: Arc<Store>,
    addr: SocketAddr,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| {
            if source.kind() == std::io::ErrorKind::AddrInUse {
                ServeError::PortInUse { port: addr.port() }
            } else {
                ServeError::Bind { addr, source }
            }
        })?;
    tracing::info!(addr = %listener.local_addr()?, data_dir = %store.root().display(), "listening");
    axum::serve(listener, router(store))
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}
