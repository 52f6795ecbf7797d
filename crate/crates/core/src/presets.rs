//! Reference cluster shapes: two 15-node clusters built from three and four
//! cloud machine types, with benchmark values drawn uniformly inside measured
//! per-type ranges.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{BenchmarkVector, ClusterSpec, NodeSpec};

/// One machine type: count, cores, memory and benchmark ranges.
#[derive(Debug, Clone, Copy)]
pub struct MachineBand {
    pub prefix: &'static str,
    pub count: usize,
    pub cpus: u32,
    pub mem_gb: f64,
    pub cpu_events: (f64, f64),
    pub ram_mib: (f64, f64),
}

const RND_WRITE_IOPS: (f64, f64) = (107.0, 108.0);
const RND_READ_IOPS: f64 = 102.0;
const SEQ_WRITE_IOPS: f64 = 483.0;
const SEQ_READ_IOPS: f64 = 481.0;

/// 5 × N1, 5 × N2, 5 × C2, all 8 cores / 32 GB.
pub const BANDS_555: [MachineBand; 3] = [
    MachineBand { prefix: "n1", count: 5, cpus: 8, mem_gb: 32.0, cpu_events: (367.0, 384.0), ram_mib: (13800.0, 14300.0) },
    MachineBand { prefix: "n2", count: 5, cpus: 8, mem_gb: 32.0, cpu_events: (458.0, 468.0), ram_mib: (17500.0, 17700.0) },
    MachineBand { prefix: "c2", count: 5, cpus: 8, mem_gb: 32.0, cpu_events: (523.0, 525.0), ram_mib: (19800.0, 19900.0) },
];

/// 5 × E2 and 4 × N1 (one performance band), 4 × N2, 2 × C2.
pub const BANDS_5442: [MachineBand; 4] = [
    MachineBand { prefix: "e2", count: 5, cpus: 6, mem_gb: 16.0, cpu_events: (368.0, 384.0), ram_mib: (13100.0, 14200.0) },
    MachineBand { prefix: "n1", count: 4, cpus: 6, mem_gb: 16.0, cpu_events: (368.0, 384.0), ram_mib: (13100.0, 14200.0) },
    MachineBand { prefix: "n2", count: 4, cpus: 8, mem_gb: 32.0, cpu_events: (469.0, 470.0), ram_mib: (17700.0, 17800.0) },
    MachineBand { prefix: "c2", count: 2, cpus: 16, mem_gb: 64.0, cpu_events: (522.0, 524.0), ram_mib: (19800.0, 19800.0) },
];

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

pub fn cluster_from_bands(bands: &[MachineBand], seed: u64) -> ClusterSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::new();
    for band in bands {
        for i in 1..=band.count {
            nodes.push(NodeSpec {
                node_id: format!("{}-{i:02}", band.prefix),
                cpus: band.cpus,
                mem_gb: band.mem_gb,
                enabled: true,
                bench: BenchmarkVector {
                    cpu_events_per_s: uniform(&mut rng, band.cpu_events),
                    ram_mib_per_s: uniform(&mut rng, band.ram_mib),
                    seq_read_iops: SEQ_READ_IOPS,
                    seq_write_iops: SEQ_WRITE_IOPS,
                    rnd_read_iops: RND_READ_IOPS,
                    rnd_write_iops: uniform(&mut rng, RND_WRITE_IOPS),
                },
            });
        }
    }
    ClusterSpec { nodes }
}

pub fn cluster_555(seed: u64) -> ClusterSpec {
    cluster_from_bands(&BANDS_555, seed)
}

pub fn cluster_5442(seed: u64) -> ClusterSpec {
    cluster_from_bands(&BANDS_5442, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let a = cluster_555(1);
        assert_eq!(a.nodes.len(), 15);
        assert_eq!(a.nodes.iter().map(|n| n.cpus).sum::<u32>(), 120);
        let b = cluster_5442(1);
        assert_eq!(b.nodes.len(), 15);
        assert_eq!(b.nodes.iter().map(|n| n.cpus).sum::<u32>(), 30 + 24 + 32 + 32);
        a.validate().unwrap();
        b.validate().unwrap();
        assert_eq!(cluster_5442(9), cluster_5442(9));
    }
}
