//! Truncated content digests used to pair matrices with derived artifacts.

use sha2::{Digest, Sha256};

/// 16-hex-character digest of a byte string (first 8 bytes of SHA-256).
pub fn short_hex(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..8])
}
