//! Seeded fixtures shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use twinshift_core::{
    sample_channel, sample_wideband_channel, ArrayGeometry, CMat, ChannelRealization, MultiUserScene,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Narrowband channel between `n_bs` and `n_ms` antenna arrays.
pub fn channel(n_bs: usize, n_ms: usize, paths: usize, seed: u64) -> CMat {
    let tx = ArrayGeometry::square_ish(n_bs).unwrap();
    let rx = ArrayGeometry::square_ish(n_ms).unwrap();
    sample_channel(&tx, &rx, paths, &mut rng(seed)).unwrap().matrix
}

pub fn scene(users: usize, streams: usize, n_bs: usize, n_ms: usize, seed: u64) -> MultiUserScene {
    let tx = ArrayGeometry::square_ish(n_bs).unwrap();
    let rx = ArrayGeometry::square_ish(n_ms).unwrap();
    let mut r = rng(seed);
    let channels: Vec<ChannelRealization> =
        (0..users).map(|_| sample_channel(&tx, &rx, 4, &mut r).unwrap()).collect();
    MultiUserScene::new(channels, streams).unwrap()
}

pub fn wideband(n_bs: usize, n_ms: usize, subcarriers: usize, seed: u64) -> Vec<CMat> {
    let tx = ArrayGeometry::square_ish(n_bs).unwrap();
    let rx = ArrayGeometry::square_ish(n_ms).unwrap();
    sample_wideband_channel(&tx, &rx, 4, subcarriers, 8, &mut rng(seed))
        .unwrap()
        .per_subcarrier
}
