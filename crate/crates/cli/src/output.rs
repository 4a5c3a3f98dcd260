use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

use crate::{Failure, Run};

pub fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}

/// Prefixes a CSV body with its `# config_hash=` line.
pub fn csv_with_hash(hash: &str, body: &str) -> String {
    format!("# config_hash={hash}\n{body}")
}

/// A JSON object stamped with the config, its hash and (optionally) the time.
pub struct JsonOut {
    map: Map<String, Value>,
    timestamp: bool,
}

impl JsonOut {
    pub fn new(run: &Run) -> Self {
        let mut map = Map::new();
        map.insert("command".into(), json!(run.command.name()));
        map.insert("config_hash".into(), json!(run.config.hash(run.command)));
        map.insert("config".into(), json!(run.config));
        if run.timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            map.insert("timestamp".into(), json!(secs));
        }
        JsonOut { map, timestamp: run.timestamp }
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.map.insert(key.into(), value);
    }

    /// Sets a wall-clock field unless timestamps are off.
    pub fn timed(&mut self, key: &str, seconds: f64) {
        if self.timestamp {
            self.set(key, json!(seconds));
        }
    }

    pub fn write(self, path: &Path) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(&Value::Object(self.map)).expect("JSON values serialize");
        text.push('\n');
        write_file(path, &text)
    }
}
