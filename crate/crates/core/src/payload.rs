//! Built-in test payload handling.
//!
//! The standard antivirus test string is stored reversed so that neither the
//! source tree nor a checked-out build artifact contains the live signature
//! as a contiguous byte run. [`eicar_bytes`] reconstructs it in memory.

use serde::{Deserialize, Serialize};

/// The 68-byte test string, stored back to front.
const EICAR_REVERSED: &[u8] =
    br"*H+H$!ELIF-TSET-SURIVITNA-DRADNATS-RACIE$}7)CC7)^P(45XZP\4[PA@%P!O5X";

/// Length of the reconstructed test payload.
pub const EICAR_LEN: usize = 68;

/// MD5 of the reconstructed payload, the published reference value.
pub const EICAR_MD5: &str = "44d88612fea8a8f36de82e1278abb02f";

/// Reconstruct the canonical 68-byte antivirus test string.
pub fn eicar_bytes() -> Vec<u8> {
    EICAR_REVERSED.iter().rev().copied().collect()
}

/// Where the payload bytes of a recipe come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadSource {
    BuiltinEicar,
    UserBytes,
}

/// A resolved payload: its source plus the actual bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayloadSpec {
    pub source: PayloadSource,
    pub bytes: Vec<u8>,
}

impl PayloadSpec {
    /// The built-in test payload.
    pub fn builtin_eicar() -> Self {
        PayloadSpec {
            source: PayloadSource::BuiltinEicar,
            bytes: eicar_bytes(),
        }
    }

    /// Arbitrary caller-supplied bytes.
    pub fn user_bytes(bytes: Vec<u8>) -> Self {
        PayloadSpec {
            source: PayloadSource::UserBytes,
            bytes,
        }
    }
}
