//! Name-keyed registries of interchangeable strategies.
//!
//! Solvers, initializers and sensing-matrix generators are registered under
//! stable string names so that plans, configs and the CLI can select them at
//! runtime.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

type Constructor<T> = fn() -> Box<T>;

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Constructor<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `make` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &'static str, make: Constructor<T>) -> &mut Self {
        self.entries.insert(name, make);
        self
    }

    pub fn get(&self, name: &str) -> Result<Box<T>> {
        match self.entries.get(name) {
            Some(make) => Ok(make()),
            None => Err(Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().collect::<Vec<_>>().join(", "),
            }),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

impl<T: ?Sized> std::fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("entries", &self.entries.keys().collect::<Vec<_>>())
            .finish()
    }
}
