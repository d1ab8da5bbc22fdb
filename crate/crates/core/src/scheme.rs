//! Scheme-tagged keys and the text key-file format.
//!
//! ```text
//! blockveil-key v1
//! seed=<u64>
//! block=<M>
//! scheme=<proposed|naive|catmap>
//! T=<rounds>      (catmap only)
//! xor=<0|1>       (catmap only)
//! ```
//!
//! Only the seed and parameters are stored; masks and permutations are always
//! re-derived.

use std::fmt;
use std::str::FromStr;

use crate::baseline::{self, CatMapKey, NaiveShuffleKey};
use crate::cipher::{self, EncryptionKey};
use crate::error::{Error, Result};
use crate::image::ImageU8;

const MAGIC: &str = "blockveil-key v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Proposed,
    Naive,
    Catmap,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Naive => "naive",
            Scheme::Catmap => "catmap",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Scheme::Proposed),
            "naive" => Ok(Scheme::Naive),
            "catmap" => Ok(Scheme::Catmap),
            other => Err(Error::KeyFormat(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Everything a key file carries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeySpec {
    pub scheme: Scheme,
    pub seed: u64,
    pub block: usize,
    /// Cat-map iterations; ignored by the other schemes.
    pub rounds: u32,
    /// Cat-map XOR diffusion; ignored by the other schemes.
    pub xor: bool,
}

impl KeySpec {
    pub fn new(scheme: Scheme, seed: u64, block: usize) -> Self {
        Self {
            scheme,
            seed,
            block,
            rounds: baseline::DEFAULT_CATMAP_ROUNDS,
            xor: false,
        }
    }

    pub fn to_key_file(&self) -> String {
        let mut s = format!(
            "{MAGIC}\nseed={}\nblock={}\nscheme={}\n",
            self.seed, self.block, self.scheme
        );
        if self.scheme == Scheme::Catmap {
            s.push_str(&format!("T={}\nxor={}\n", self.rounds, u8::from(self.xor)));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.split('\n');
        let mut next = |what: &str| {
            lines
                .next()
                .filter(|l| !l.is_empty())
                .ok_or_else(|| Error::KeyFormat(format!("missing `{what}` line")))
        };
        if next("header")? != MAGIC {
            return Err(Error::KeyFormat(format!("first line must be `{MAGIC}`")));
        }
        let seed = field(next("seed")?, "seed")?;
        let block: usize = field(next("block")?, "block")?;
        if block == 0 {
            return Err(Error::KeyFormat("block must be positive".into()));
        }
        let scheme: Scheme = field(next("scheme")?, "scheme")?;
        let mut spec = KeySpec::new(scheme, seed, block);
        if scheme == Scheme::Catmap {
            spec.rounds = field(next("T")?, "T")?;
            spec.xor = match field::<u8>(next("xor")?, "xor")? {
                0 => false,
                1 => true,
                v => return Err(Error::KeyFormat(format!("xor must be 0 or 1, got {v}"))),
            };
        }
        if lines.any(|l| !l.is_empty()) {
            return Err(Error::KeyFormat("unexpected trailing lines".into()));
        }
        Ok(spec)
    }

    /// Resolves the spec into a concrete key for images of side `size`
    /// (only the cat map depends on the image size).
    pub fn resolve(&self, size: usize) -> Result<SchemeKey> {
        Ok(match self.scheme {
            Scheme::Proposed => SchemeKey::Proposed(EncryptionKey::derive(self.seed, self.block)?),
            Scheme::Naive => SchemeKey::Naive(NaiveShuffleKey::derive(self.seed, self.block)?),
            Scheme::Catmap => {
                SchemeKey::Catmap(CatMapKey::derive(self.seed, size, self.rounds, self.xor)?)
            }
        })
    }

    pub fn require(&self, requested: Scheme) -> Result<()> {
        if self.scheme != requested {
            return Err(Error::SchemeMismatch {
                key: self.scheme.to_string(),
                requested: requested.to_string(),
            });
        }
        Ok(())
    }
}

fn field<T: FromStr>(line: &str, name: &str) -> Result<T> {
    let value = line
        .strip_prefix(name)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| Error::KeyFormat(format!("expected `{name}=...`, got `{line}`")))?;
    value
        .parse()
        .map_err(|_| Error::KeyFormat(format!("bad value for `{name}`: `{value}`")))
}

/// A derived key of any scheme.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SchemeKey {
    Proposed(EncryptionKey),
    Naive(NaiveShuffleKey),
    Catmap(CatMapKey),
}

impl SchemeKey {
    pub fn scheme(&self) -> Scheme {
        match self {
            SchemeKey::Proposed(_) => Scheme::Proposed,
            SchemeKey::Naive(_) => Scheme::Naive,
            SchemeKey::Catmap(_) => Scheme::Catmap,
        }
    }

    pub fn encrypt(&self, img: &ImageU8) -> Result<ImageU8> {
        match self {
            SchemeKey::Proposed(k) => cipher::encrypt_image(img, k),
            SchemeKey::Naive(k) => baseline::naive_block_shuffle(img, k),
            SchemeKey::Catmap(k) => baseline::catmap_encrypt(img, k),
        }
    }

    pub fn decrypt(&self, img: &ImageU8) -> Result<ImageU8> {
        match self {
            SchemeKey::Proposed(k) => cipher::decrypt_image(img, k),
            SchemeKey::Naive(k) => baseline::naive_block_unshuffle(img, k),
            SchemeKey::Catmap(k) => baseline::catmap_decrypt(img, k),
        }
    }
}
