//! JSON-lines turn traces.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::{Action, Estimates, EpisodeTrace, TurnEvent, TurnRecord, TurnRecorder};
use crate::error::{Error, Result};

/// One environment step as persisted on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub episode_id: u64,
    pub generation: u32,
    pub turn_index: u32,
    pub skirmish_index: u32,
    pub turn_in_skirmish: u32,
    pub true_left: f64,
    pub true_right: f64,
    pub est_a_left: f64,
    pub est_a_right: f64,
    pub est_b_left: f64,
    pub est_b_right: f64,
    pub action_a: Action,
    pub action_b: Action,
    pub event: TurnEvent,
    pub reward: f64,
}

impl TraceRecord {
    pub fn from_turn(generation: u32, episode_id: u64, t: &TurnRecord) -> Self {
        Self {
            episode_id,
            generation,
            turn_index: t.turn_index,
            skirmish_index: t.skirmish_index,
            turn_in_skirmish: t.turn_in_skirmish,
            true_left: t.true_left,
            true_right: t.true_right,
            est_a_left: t.est[0].left,
            est_a_right: t.est[0].right,
            est_b_left: t.est[1].left,
            est_b_right: t.est[1].right,
            action_a: t.actions[0],
            action_b: t.actions[1],
            event: t.event,
            reward: t.reward,
        }
    }

    pub fn to_turn(&self) -> TurnRecord {
        TurnRecord {
            turn_index: self.turn_index,
            skirmish_index: self.skirmish_index,
            turn_in_skirmish: self.turn_in_skirmish,
            true_left: self.true_left,
            true_right: self.true_right,
            est: [
                Estimates {
                    left: self.est_a_left,
                    right: self.est_a_right,
                },
                Estimates {
                    left: self.est_b_left,
                    right: self.est_b_right,
                },
            ],
            actions: [self.action_a, self.action_b],
            event: self.event,
            reward: self.reward,
        }
    }
}

/// Buffered writer for one trace file.
pub struct TraceWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl TraceWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            path,
            out: BufWriter::new(file),
        })
    }

    pub fn append_trace(&mut self, record: &TraceRecord) -> Result<()> {
        let line = serde_json::to_string(record).expect("trace records always serialize");
        writeln!(self.out, "{line}").map_err(|e| Error::io(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }

    /// Append every turn of an episode and flush.
    pub fn write_episode(&mut self, generation: u32, episode_id: u64, trace: &EpisodeTrace) -> Result<()> {
        for turn in &trace.turns {
            self.append_trace(&TraceRecord::from_turn(generation, episode_id, turn))?;
        }
        self.flush()
    }

    /// Recorder that streams one episode into this file.
    pub fn recorder(&mut self, generation: u32, episode_id: u64) -> TraceRecorder<'_> {
        TraceRecorder {
            writer: self,
            generation,
            episode_id,
        }
    }
}

pub struct TraceRecorder<'a> {
    writer: &'a mut TraceWriter,
    generation: u32,
    episode_id: u64,
}

impl TurnRecorder for TraceRecorder<'_> {
    fn record(&mut self, turn: &TurnRecord) -> Result<()> {
        self.writer
            .append_trace(&TraceRecord::from_turn(self.generation, self.episode_id, turn))
    }

    fn end_episode(&mut self) -> Result<()> {
        self.writer.flush()
    }
}

pub fn read_traces(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", i + 1),
        })?;
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{run_episode, EnvConfig};
    use crate::policy::PolicySpec;

    #[test]
    fn one_line_per_turn_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let mut w = TraceWriter::create(&path).unwrap();
        let trace = run_episode(
            &EnvConfig::default(),
            3,
            &PolicySpec::UniformRandom,
            &PolicySpec::GreedyEstimate,
            &mut w.recorder(0, 0),
        )
        .unwrap();
        drop(w);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 40);
        let back = read_traces(&path).unwrap();
        let turns: Vec<TurnRecord> = back.iter().map(TraceRecord::to_turn).collect();
        assert_eq!(turns, trace.turns);
    }

    #[test]
    fn keys_and_enum_spellings() {
        let rec = TraceRecord {
            episode_id: 1,
            generation: 2,
            turn_index: 3,
            skirmish_index: 0,
            turn_in_skirmish: 1,
            true_left: 1.5,
            true_right: 2.0,
            est_a_left: 1.0,
            est_a_right: 2.0,
            est_b_left: 3.0,
            est_b_right: 4.0,
            action_a: Action::Left,
            action_b: Action::Right,
            event: TurnEvent::TiebreakLeft,
            reward: 1.5,
        };
        let line = serde_json::to_string(&rec).unwrap();
        assert!(line.contains(r#""action_a":"L""#));
        assert!(line.contains(r#""action_b":"R""#));
        assert!(line.contains(r#""event":"TiebreakLeft""#));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys.len(), 15);
        assert_eq!(serde_json::from_str::<TraceRecord>(&line).unwrap(), rec);
    }

    #[test]
    fn concurrent_writers_on_distinct_files() {
        let dir = tempfile::tempdir().unwrap();
        std::thread::scope(|s| {
            for k in 0..4u64 {
                let path = dir.path().join(format!("w{k}.jsonl"));
                s.spawn(move || {
                    let mut w = TraceWriter::create(&path).unwrap();
                    for e in 0..5 {
                        let trace = run_episode(
                            &EnvConfig::default(),
                            k * 10 + e,
                            &PolicySpec::UniformRandom,
                            &PolicySpec::UniformRandom,
                            &mut (),
                        )
                        .unwrap();
                        w.write_episode(k as u32, e, &trace).unwrap();
                    }
                });
            }
        });
        for k in 0..4u32 {
            let recs = read_traces(dir.path().join(format!("w{k}.jsonl"))).unwrap();
            assert_eq!(recs.len(), 200);
            assert!(recs.iter().all(|r| r.generation == k));
        }
    }

    #[test]
    fn bad_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"nope\":1}\n").unwrap();
        let err = read_traces(&path).unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }
}
