//! Parsers for raw sysbench and fio output.

use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::BenchmarkVector;

fn parse_number(token: &str) -> Option<f64> {
    token
        .trim()
        .trim_start_matches('(')
        .trim_end_matches([')', ','])
        .parse()
        .ok()
}

/// Reads the `events per second:` line of `sysbench cpu run`.
pub fn parse_sysbench_cpu(output: &str) -> Result<f64> {
    output
        .lines()
        .find_map(|line| {
            let (_, rest) = line.split_once("events per second:")?;
            parse_number(rest)
        })
        .ok_or_else(|| Error::BenchParse("sysbench cpu: no `events per second:` line".into()))
}

/// Reads the throughput from the `MiB transferred (… MiB/sec)` line of
/// `sysbench memory run`.
pub fn parse_sysbench_memory(output: &str) -> Result<f64> {
    output
        .lines()
        .find_map(|line| {
            if !line.contains("MiB transferred") {
                return None;
            }
            let (_, inner) = line.split_once('(')?;
            let (value, _) = inner.split_once("MiB/sec")?;
            parse_number(value)
        })
        .ok_or_else(|| Error::BenchParse("sysbench memory: no `MiB transferred` line".into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FioIops {
    pub read: f64,
    pub write: f64,
}

/// Sums `read.iops` and `write.iops` over all jobs of `fio --output-format=json`.
pub fn parse_fio_json(output: &str) -> Result<FioIops> {
    let root: Value = serde_json::from_str(output)
        .map_err(|e| Error::BenchParse(format!("fio: invalid JSON: {e}")))?;
    let jobs = root
        .get("jobs")
        .and_then(Value::as_array)
        .filter(|j| !j.is_empty())
        .ok_or_else(|| Error::BenchParse("fio: missing `jobs` array".into()))?;
    let mut total = FioIops {
        read: 0.0,
        write: 0.0,
    };
    for job in jobs {
        let iops = |dir: &str| {
            job.get(dir)
                .and_then(|d| d.get("iops"))
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::BenchParse(format!("fio: job without `{dir}.iops`")))
        };
        total.read += iops("read")?;
        total.write += iops("write")?;
    }
    Ok(total)
}

/// Assembles a benchmark vector from the four tool outputs.
pub fn bench_vector_from_outputs(
    sysbench_cpu: &str,
    sysbench_memory: &str,
    fio_sequential: &str,
    fio_random: &str,
) -> Result<BenchmarkVector> {
    let seq = parse_fio_json(fio_sequential)?;
    let rnd = parse_fio_json(fio_random)?;
    let bench = BenchmarkVector {
        cpu_events_per_s: parse_sysbench_cpu(sysbench_cpu)?,
        ram_mib_per_s: parse_sysbench_memory(sysbench_memory)?,
        seq_read_iops: seq.read,
        seq_write_iops: seq.write,
        rnd_read_iops: rnd.read,
        rnd_write_iops: rnd.write,
    };
    bench.validate()?;
    Ok(bench)
}
