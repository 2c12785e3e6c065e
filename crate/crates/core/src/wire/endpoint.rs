use std::fmt;
use std::io::{self, Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream};
use std::os::unix::net::{UnixListener, UnixStream};
use std::path::PathBuf;
use std::str::FromStr;

/// Where a service listens: `unix:/path`, `tcp:host:port` or `inproc:<id>`.
/// A bare path parses as `unix:`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Unix(PathBuf),
    Tcp(String),
    InProc(String),
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Unix(p) => write!(f, "unix:{}", p.display()),
            Endpoint::Tcp(a) => write!(f, "tcp:{a}"),
            Endpoint::InProc(id) => write!(f, "inproc:{id}"),
        }
    }
}

impl FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let ep = if let Some(p) = s.strip_prefix("unix:") {
            Endpoint::Unix(p.into())
        } else if let Some(a) = s.strip_prefix("tcp:") {
            Endpoint::Tcp(a.into())
        } else if let Some(id) = s.strip_prefix("inproc:") {
            Endpoint::InProc(id.into())
        } else {
            Endpoint::Unix(s.into())
        };
        match &ep {
            Endpoint::Unix(p) if p.as_os_str().is_empty() => Err(format!("empty path in `{s}`")),
            Endpoint::Tcp(a) if !a.contains(':') => Err(format!("expected host:port in `{s}`")),
            Endpoint::InProc(id) if id.is_empty() => Err(format!("empty id in `{s}`")),
            _ => Ok(ep),
        }
    }
}

impl Endpoint {
    pub fn connect(&self) -> io::Result<Conn> {
        match self {
            Endpoint::Unix(p) => UnixStream::connect(p).map(Conn::Unix),
            Endpoint::Tcp(a) => {
                let s = TcpStream::connect(a)?;
                s.set_nodelay(true)?;
                Ok(Conn::Tcp(s))
            }
            Endpoint::InProc(_) => Err(io::Error::new(
                io::ErrorKind::Unsupported,
                "in-process endpoints have no stream",
            )),
        }
    }

    pub fn bind(&self) -> io::Result<Listener> {
        match self {
            Endpoint::Unix(p) => UnixListener::bind(p).map(Listener::Unix),
            Endpoint::Tcp(a) => TcpListener::bind(a).map(Listener::Tcp),
            Endpoint::InProc(_) => Err(io::Error::new(
                io::ErrorKind::Unsupported,
                "in-process endpoints cannot be bound",
            )),
        }
    }
}

/// A connected byte stream of either flavour.
#[derive(Debug)]
pub enum Conn {
    Unix(UnixStream),
    Tcp(TcpStream),
}

impl Conn {
    pub fn try_clone(&self) -> io::Result<Conn> {
        Ok(match self {
            Conn::Unix(s) => Conn::Unix(s.try_clone()?),
            Conn::Tcp(s) => Conn::Tcp(s.try_clone()?),
        })
    }

    pub fn shutdown(&self) {
        let _ = match self {
            Conn::Unix(s) => s.shutdown(Shutdown::Both),
            Conn::Tcp(s) => s.shutdown(Shutdown::Both),
        };
    }
}

impl Read for Conn {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        match self {
            Conn::Unix(s) => s.read(buf),
            Conn::Tcp(s) => s.read(buf),
        }
    }
}

impl Write for Conn {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        match self {
            Conn::Unix(s) => s.write(buf),
            Conn::Tcp(s) => s.write(buf),
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        match self {
            Conn::Unix(s) => s.flush(),
            Conn::Tcp(s) => s.flush(),
        }
    }
}

#[derive(Debug)]
pub enum Listener {
    Unix(UnixListener),
    Tcp(TcpListener),
}

impl Listener {
    pub fn accept(&self) -> io::Result<Conn> {
        match self {
            Listener::Unix(l) => l.accept().map(|(s, _)| Conn::Unix(s)),
            Listener::Tcp(l) => {
                let (s, _) = l.accept()?;
                s.set_nodelay(true)?;
                Ok(Conn::Tcp(s))
            }
        }
    }

    /// The bound address; resolves an ephemeral TCP port.
    pub fn local_endpoint(&self) -> io::Result<Endpoint> {
        match self {
            Listener::Unix(l) => {
                let addr = l.local_addr()?;
                let path = addr
                    .as_pathname()
                    .ok_or_else(|| io::Error::new(io::ErrorKind::Other, "unnamed socket"))?;
                Ok(Endpoint::Unix(path.to_path_buf()))
            }
            Listener::Tcp(l) => Ok(Endpoint::Tcp(l.local_addr()?.to_string())),
        }
    }
}
