//! Content fingerprints and seed derivation, all built on SHA-256.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Incremental, length-prefixed hasher for model and vocabulary fingerprints.
pub struct Fingerprinter(Sha256);

impl Fingerprinter {
    pub fn new(domain: &str) -> Self {
        let mut fp = Fingerprinter(Sha256::new());
        fp.str(domain);
        fp
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.0.update((b.len() as u64).to_le_bytes());
        self.0.update(b);
    }

    pub fn str(&mut self, s: &str) {
        self.bytes(s.as_bytes());
    }

    pub fn usize(&mut self, n: usize) {
        self.0.update((n as u64).to_le_bytes());
    }

    pub fn u64(&mut self, n: u64) {
        self.0.update(n.to_le_bytes());
    }

    pub fn f64(&mut self, x: f64) {
        self.0.update(x.to_bits().to_le_bytes());
    }

    pub fn finish(self) -> u64 {
        let digest = self.0.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}

/// Seed for a named component, derived from the master seed.
pub fn derive_seed(master: u64, component: &str) -> u64 {
    let mut fp = Fingerprinter::new("seed");
    fp.u64(master);
    fp.str(component);
    fp.finish()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_by_component() {
        assert_eq!(derive_seed(7, "svm"), derive_seed(7, "svm"));
        assert_ne!(derive_seed(7, "svm"), derive_seed(7, "rnn"));
        assert_ne!(derive_seed(7, "svm"), derive_seed(8, "svm"));
    }

    #[test]
    fn sha256_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
