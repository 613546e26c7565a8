use std::fmt;

/// Exit-code classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config = 1,
    Validation = 2,
    Io = 3,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

impl Failure {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        Failure { kind, message: message.into() }
    }

    pub fn code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<treecoal::Error> for Failure {
    fn from(e: treecoal::Error) -> Self {
        let kind = match e {
            treecoal::Error::Io(_) => Kind::Io,
            _ => Kind::Validation,
        };
        Failure::new(kind, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(Kind::Io, e.to_string())
    }
}

/// Attaches context to a core error while keeping its class.
pub trait Context<T> {
    fn context(self, what: impl fmt::Display) -> Result<T, Failure>;
}

impl<T, E: Into<Failure>> Context<T> for Result<T, E> {
    fn context(self, what: impl fmt::Display) -> Result<T, Failure> {
        self.map_err(|e| {
            let f: Failure = e.into();
            Failure::new(f.kind, format!("{what}: {}", f.message))
        })
    }
}
