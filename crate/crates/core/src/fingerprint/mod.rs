//! Binary molecular fingerprints and set-overlap similarity.
//!
//! Three kinds are provided: hashed circular environments ([`morgan_fingerprint`]),
//! hashed linear bond paths ([`path_fingerprint`]) and a 166-key structural
//! catalogue ([`maccs_fingerprint`]). Bit collisions in the hashed kinds are
//! expected and accepted.

mod maccs;
mod morgan;
mod path;

use std::fmt;

use fixedbitset::FixedBitSet;
use thiserror::Error;

pub use maccs::{maccs_fingerprint, MACCS_KEY_COUNT, MACCS_UNIMPLEMENTED_KEYS};
pub use morgan::morgan_fingerprint;
pub use path::path_fingerprint;

pub const DEFAULT_WIDTH: usize = 2048;
pub const DEFAULT_MORGAN_RADIUS: u32 = 2;
pub const DEFAULT_MAX_PATH_LEN: u32 = 7;

/// Fingerprint family together with the parameters that shaped its bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FingerprintKind {
    Morgan { radius: u32 },
    Path { max_path_len: u32 },
    Maccs,
}

impl fmt::Display for FingerprintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FingerprintKind::Morgan { radius } => write!(f, "morgan(radius={radius})"),
            FingerprintKind::Path { max_path_len } => write!(f, "path(max_len={max_path_len})"),
            FingerprintKind::Maccs => f.write_str("maccs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FingerprintError {
    #[error("fingerprint kinds differ: {left} vs {right}")]
    KindMismatch {
        left: FingerprintKind,
        right: FingerprintKind,
    },
    #[error("fingerprint widths differ: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },
    #[error("bad hex fingerprint: {0}")]
    BadHex(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprint {
    kind: FingerprintKind,
    bits: FixedBitSet,
}

impl Fingerprint {
    pub fn empty(kind: FingerprintKind, width: usize) -> Self {
        Fingerprint {
            kind,
            bits: FixedBitSet::with_capacity(width),
        }
    }

    /// # Panics
    /// Panics if any bit is `>= width`.
    pub fn from_bits(kind: FingerprintKind, width: usize, bits: impl IntoIterator<Item = usize>) -> Self {
        let mut fp = Fingerprint::empty(kind, width);
        for b in bits {
            fp.bits.insert(b);
        }
        fp
    }

    pub fn kind(&self) -> FingerprintKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn contains(&self, bit: usize) -> bool {
        self.bits.contains(bit)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    /// True if every bit set here is also set in `other`.
    pub fn is_subset(&self, other: &Fingerprint) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub(crate) fn set(&mut self, bit: usize) {
        self.bits.insert(bit);
    }

    /// `ceil(width / 4)` hex digits; bit 0 is the most significant bit of the
    /// first digit.
    pub fn to_hex(&self) -> String {
        let width = self.width();
        (0..width.div_ceil(4))
            .map(|d| {
                let nibble = (0..4).fold(0u32, |acc, j| {
                    let bit = d * 4 + j;
                    (acc << 1) | u32::from(bit < width && self.bits.contains(bit))
                });
                char::from_digit(nibble, 16).unwrap()
            })
            .collect()
    }

    pub fn from_hex(kind: FingerprintKind, width: usize, hex: &str) -> Result<Self, FingerprintError> {
        if hex.len() != width.div_ceil(4) {
            return Err(FingerprintError::BadHex(format!(
                "expected {} digits, got {}",
                width.div_ceil(4),
                hex.len()
            )));
        }
        let mut fp = Fingerprint::empty(kind, width);
        for (d, ch) in hex.chars().enumerate() {
            let nibble = ch
                .to_digit(16)
                .ok_or_else(|| FingerprintError::BadHex(format!("invalid digit {ch:?}")))?;
            for j in 0..4 {
                if nibble & (8 >> j) != 0 {
                    let bit = d * 4 + j;
                    if bit >= width {
                        return Err(FingerprintError::BadHex("padding bits set".into()));
                    }
                    fp.bits.insert(bit);
                }
            }
        }
        Ok(fp)
    }
}

fn check_compatible(a: &Fingerprint, b: &Fingerprint) -> Result<(), FingerprintError> {
    if a.kind != b.kind {
        return Err(FingerprintError::KindMismatch {
            left: a.kind,
            right: b.kind,
        });
    }
    if a.width() != b.width() {
        return Err(FingerprintError::WidthMismatch {
            left: a.width(),
            right: b.width(),
        });
    }
    Ok(())
}

/// `|a ∧ b| / |a ∨ b|`, or 1 when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    check_compatible(a, b)?;
    let union = a.bits.union_count(&b.bits);
    if union == 0 {
        return Ok(1.0);
    }
    Ok(a.bits.intersection_count(&b.bits) as f64 / union as f64)
}

/// `2|a ∧ b| / (|a| + |b|)`, or 1 when both are empty.
pub fn dice(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    check_compatible(a, b)?;
    let total = a.count_ones() + b.count_ones();
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * a.bits.intersection_count(&b.bits) as f64 / total as f64)
}

/// 64-bit FNV-1a over the little-endian bytes of `words`.
pub(crate) fn fnv64(words: &[u64]) -> u64 {
    use std::hash::Hasher;
    let mut h = fnv::FnvHasher::default();
    for w in words {
        h.write(&w.to_le_bytes());
    }
    h.finish()
}

/// Folds a hash into `width` bits by masking. `width` is a power of two.
pub(crate) fn fold(hash: u64, width: usize) -> usize {
    (hash & (width as u64 - 1)) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    const M2: FingerprintKind = FingerprintKind::Morgan { radius: 2 };

    #[test]
    fn similarity_examples() {
        let a = Fingerprint::from_bits(M2, 16, [1, 2, 3]);
        let b = Fingerprint::from_bits(M2, 16, [2, 3, 4]);
        let c = Fingerprint::from_bits(M2, 16, [7, 8]);
        assert_eq!(tanimoto(&a, &b).unwrap(), 0.5);
        assert!((dice(&a, &b).unwrap() - 4.0 / 6.0).abs() < 1e-9);
        assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        assert_eq!(tanimoto(&a, &c).unwrap(), 0.0);
        assert_eq!(dice(&a, &c).unwrap(), 0.0);
        let e = Fingerprint::empty(M2, 16);
        assert_eq!(tanimoto(&e, &e).unwrap(), 1.0);
        assert_eq!(dice(&e, &e).unwrap(), 1.0);
    }

    #[test]
    fn mismatches() {
        let a = Fingerprint::empty(M2, 16);
        let b = Fingerprint::empty(FingerprintKind::Maccs, 16);
        let c = Fingerprint::empty(M2, 32);
        assert!(matches!(tanimoto(&a, &b), Err(FingerprintError::KindMismatch { .. })));
        assert_eq!(
            dice(&a, &c),
            Err(FingerprintError::WidthMismatch { left: 16, right: 32 })
        );
    }

    #[test]
    fn hex_layout() {
        let fp = Fingerprint::from_bits(M2, 8, [0, 7]);
        assert_eq!(fp.to_hex(), "81");
        let fp = Fingerprint::from_bits(FingerprintKind::Maccs, 166, [0, 165]);
        let hex = fp.to_hex();
        assert_eq!(hex.len(), 42);
        assert!(hex.starts_with('8') && hex.ends_with('4'));
        assert_eq!(Fingerprint::from_hex(FingerprintKind::Maccs, 166, &hex).unwrap(), fp);
        assert!(Fingerprint::from_hex(M2, 8, "8").is_err());
        assert!(Fingerprint::from_hex(M2, 8, "8g").is_err());
        assert!(Fingerprint::from_hex(M2, 6, "83").is_err());
    }
}
