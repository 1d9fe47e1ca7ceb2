#![allow(dead_code)]

use std::path::PathBuf;

use ffsn::ffsn_core::{Downsample, ModelConfig, ModelWeights};

pub const TINY_SEED: u64 = 42;

/// Full-resolution front end with very small recurrent stacks.
pub fn tiny_config() -> ModelConfig {
    ModelConfig { l2m_hidden: [8, 6], sub_hidden: [4, 4], m2l_hidden: [8, 8], ..ModelConfig::default() }
}

pub fn tiny_weights() -> ModelWeights {
    ModelWeights::random(&tiny_config(), TINY_SEED).unwrap()
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Reads a checked-in fixture, or rewrites it first when `FFSN_REGEN_FIXTURES=1`.
pub fn pinned_fixture(name: &str, current: &[u8]) -> Vec<u8> {
    let path = fixture(name);
    if std::env::var("FFSN_REGEN_FIXTURES").as_deref() == Ok("1") {
        std::fs::write(&path, current).unwrap();
    }
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn tiny_mask_config() -> ModelConfig {
    tiny_config().with_downsample(Downsample::Every(2))
}
