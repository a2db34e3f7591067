use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Band;

/// Counter-based stream for one `(seed, path, band)` triple. The ChaCha key
/// carries the seed and band, the stream word carries the path id, so
/// ensemble members can be generated in any order.
pub(crate) fn band_stream(seed: u64, stream_id: u64, band: Band) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let tag: u64 = match band {
        Band::Small => 0x736d_616c_6c5f_6a70,
        Band::Big => 0x6269_675f_6a75_6d70,
    };
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream_id);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: u64 = band_stream(1, 0, Band::Small).random();
        let b: u64 = band_stream(1, 0, Band::Small).random();
        let c: u64 = band_stream(1, 1, Band::Small).random();
        let d: u64 = band_stream(1, 0, Band::Big).random();
        let e: u64 = band_stream(2, 0, Band::Small).random();
        assert_eq!(a, b);
        assert!(a != c && a != d && a != e);
    }
}
