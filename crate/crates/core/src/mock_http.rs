//! Background HTTP servers used by the in-repo mocks.

use std::net::{SocketAddr, TcpListener};
use std::thread::JoinHandle;

use thiserror::Error;
use tokio::sync::oneshot;

#[derive(Debug, Error)]
pub enum MockError {
    #[error("port {0} is already in use")]
    PortInUse(u16),
    #[error("cannot start server: {0}")]
    Io(#[from] std::io::Error),
}

impl MockError {
    pub fn code(&self) -> &'static str {
        match self {
            MockError::PortInUse(_) => "PORT_IN_USE",
            MockError::Io(_) => "IO_ERROR",
        }
    }
}

/// A running server. Dropping the handle stops it.
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    /// Blocks until the server thread exits.
    pub fn join(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Binds 127.0.0.1:`port`; port 0 picks a free one.
pub fn bind(port: u16) -> Result<TcpListener, MockError> {
    bind_addr(SocketAddr::from(([127, 0, 0, 1], port)))
}

pub fn bind_addr(addr: SocketAddr) -> Result<TcpListener, MockError> {
    match TcpListener::bind(addr) {
        Ok(l) => Ok(l),
        Err(e) if e.kind() == std::io::ErrorKind::AddrInUse => Err(MockError::PortInUse(addr.port())),
        Err(e) => Err(e.into()),
    }
}

/// Serves `router` on its own thread and runtime.
pub fn spawn(listener: TcpListener, router: axum::Router) -> Result<ServerHandle, MockError> {
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
    let thread = std::thread::Builder::new().name(format!("mock-{}", addr.port())).spawn(move || {
        runtime.block_on(async move {
            let listener = match tokio::net::TcpListener::from_std(listener) {
                Ok(l) => l,
                Err(e) => {
                    log::error!("mock server on {addr}: {e}");
                    return;
                }
            };
            let serve = axum::serve(listener, router).with_graceful_shutdown(async {
                let _ = rx.await;
            });
            if let Err(e) = serve.await {
                log::error!("mock server on {addr}: {e}");
            }
        });
    })?;
    Ok(ServerHandle { addr, shutdown: Some(tx), thread: Some(thread) })
}
