//! Resumable success counting for long Bernoulli sweeps.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spider_walk::stats::{run_trial_range, RngStream};

use crate::spec::ExperimentSpec;
use crate::CliError;

/// Aggregate counts are saved after roughly this many simulated steps.
pub const CHECKPOINT_STEPS: u64 = 10_000_000;

/// Each sweep point draws its trials from its own block of stream ids.
const STREAM_BLOCK: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub done: u64,
    pub successes: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Saved {
    spec: ExperimentSpec,
    tallies: BTreeMap<String, Tally>,
}

/// Counts for every sweep point, optionally mirrored to a file.
pub struct Progress {
    path: Option<PathBuf>,
    saved: Saved,
}

impl Progress {
    /// Loads `path` if it exists. A file written for a different spec is a usage error.
    pub fn open(spec: &ExperimentSpec, path: Option<&Path>) -> Result<Self, CliError> {
        let mut saved = Saved {
            spec: spec.clone(),
            tallies: BTreeMap::new(),
        };
        if let Some(p) = path.filter(|p| p.exists()) {
            let text = fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            let loaded: Saved =
                serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            let echo = |s: &ExperimentSpec| serde_json::to_value(s).expect("spec serializes");
            if echo(&loaded.spec) != echo(spec) {
                return Err(CliError::Usage(format!(
                    "{} was written for a different experiment",
                    p.display()
                )));
            }
            saved = loaded;
        }
        Ok(Self {
            path: path.map(Path::to_path_buf),
            saved,
        })
    }

    fn store(&self) -> Result<(), CliError> {
        let Some(path) = &self.path else { return Ok(()) };
        let tmp = path.with_extension("tmp");
        let text = serde_json::to_string_pretty(&self.saved).expect("progress serializes");
        fs::write(&tmp, text)
            .and_then(|_| fs::rename(&tmp, path))
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    /// Runs the trials of sweep point `index` that are not yet counted.
    ///
    /// Trial `i` always uses stream `index * 2^40 + i`, so chunking and
    /// resumption leave the final count unchanged.
    pub fn count<F>(
        &mut self,
        key: &str,
        index: u64,
        seed: u64,
        trials: u64,
        steps_per_trial: u64,
        trial: F,
    ) -> Result<Tally, CliError>
    where
        F: Fn(&mut RngStream) -> bool + Sync + Send,
    {
        let chunk = (CHECKPOINT_STEPS / steps_per_trial.max(1)).max(1);
        let mut tally = self.saved.tallies.get(key).copied().unwrap_or_default();
        if tally.done > trials {
            return Err(CliError::Usage(format!("saved progress for {key} exceeds --trials")));
        }
        let base = index * STREAM_BLOCK;
        while tally.done < trials {
            let end = (tally.done + chunk).min(trials);
            let hits = run_trial_range(seed, base + tally.done..base + end, |_, rng| trial(rng));
            tally.successes += hits.iter().filter(|&&h| h).count() as u64;
            tally.done = end;
            self.saved.tallies.insert(key.to_string(), tally);
            self.store()?;
        }
        Ok(tally)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::Kind;
    use rand::Rng;

    fn spec() -> ExperimentSpec {
        ExperimentSpec::new(Kind::Coupon, 3, 100).resolve().unwrap()
    }

    #[test]
    fn chunked_count_matches_a_single_pass() {
        let coin = |rng: &mut RngStream| rng.random::<bool>();
        let mut a = Progress::open(&spec(), None).unwrap();
        let whole = a.count("k", 2, 9, 1000, 1, coin).unwrap();
        let mut b = Progress::open(&spec(), None).unwrap();
        let chunked = b.count("k", 2, 9, 1000, CHECKPOINT_STEPS / 7, coin).unwrap();
        assert_eq!(whole, chunked);
        assert_eq!(whole.done, 1000);
    }

    #[test]
    fn resumes_from_saved_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("progress.json");
        let coin = |rng: &mut RngStream| rng.random::<bool>();
        let full = Progress::open(&spec(), None)
            .unwrap()
            .count("k", 0, 5, 60, CHECKPOINT_STEPS / 10, coin)
            .unwrap();

        let mut first = Progress::open(&spec(), Some(&path)).unwrap();
        first.count("k", 0, 5, 30, CHECKPOINT_STEPS / 10, coin).unwrap();
        let calls = std::sync::atomic::AtomicU64::new(0);
        let mut second = Progress::open(&spec(), Some(&path)).unwrap();
        let resumed = second
            .count("k", 0, 5, 60, CHECKPOINT_STEPS / 10, |rng| {
                calls.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                coin(rng)
            })
            .unwrap();
        assert_eq!(resumed, full);
        assert_eq!(calls.into_inner(), 30);
    }

    #[test]
    fn foreign_progress_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("progress.json");
        Progress::open(&spec(), Some(&path))
            .unwrap()
            .count("k", 0, 5, 3, 1, |_| true)
            .unwrap();
        let other = ExperimentSpec::new(Kind::Coupon, 4, 100).resolve().unwrap();
        assert!(matches!(Progress::open(&other, Some(&path)), Err(CliError::Usage(_))));
    }
}
