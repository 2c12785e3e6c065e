pub const OK: u8 = 0;
pub const CHECK: u8 = 1;
pub const USAGE: u8 = 2;
pub const IO: u8 = 3;

#[derive(Debug)]
pub enum Failure {
    /// A check or test ran and failed; its report is already printed.
    Check(Option<String>),
    Usage(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => CHECK,
            Failure::Usage(_) => USAGE,
            Failure::Io(_) => IO,
        }
    }

    pub fn message(&self) -> Option<&str> {
        match self {
            Failure::Check(m) => m.as_deref(),
            Failure::Usage(m) | Failure::Io(m) => Some(m),
        }
    }
}

pub fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(msg.to_string())
}

pub fn io(msg: impl std::fmt::Display) -> Failure {
    Failure::Io(msg.to_string())
}

pub fn read(path: &std::path::Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| io(format!("{}: {e}", path.display())))
}
