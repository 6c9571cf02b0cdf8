use hqr_core::{Error, Result};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

/// Run description embedded in every output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Vec<(String, String)>,
    pub seed: u64,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            config: Vec::new(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.config.iter_mut().find(|(k, _)| k == key) {
            Some(kv) => kv.1 = value,
            None => self.config.push((key.to_string(), value)),
        }
    }

    fn header(&self) -> String {
        let mut s = format!(
            "# hqr {} {}\n# seed = {}\n",
            self.version, self.command, self.seed
        );
        for (k, v) in &self.config {
            s.push_str(&format!("# {k} = {v}\n"));
        }
        s
    }
}

/// Twelve significant digits, exponent form, independent of locale.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.11e}")
    }
}

pub struct Csv {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        Csv {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns.len(), "row width");
        self.rows.push(cells);
    }

    pub fn nums(&mut self, xs: &[f64]) {
        self.row(xs.iter().map(|&x| num(x)).collect());
    }

    fn render(&self, manifest: &RunManifest) -> String {
        let mut s = manifest.header();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Output directory plus the manifest shared by its files.
pub struct Sink {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path, manifest: RunManifest) -> Result<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| Error::InvalidArgument(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            manifest,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body)
            .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))?;
        eprintln!("wrote {}", path.display());
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, table: &Csv) -> Result<()> {
        let body = table.render(&self.manifest);
        self.write(name, &body)
    }

    /// JSON document `{"manifest": …, "result": …}`.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            manifest: &'a RunManifest,
            result: &'a T,
        }
        let doc = Doc {
            manifest: &self.manifest,
            result: value,
        };
        let body = serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))? + "\n";
        self.write(name, &body)
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let mut s = self.manifest.header();
        s.push_str(body);
        self.write(name, &s)
    }

    /// Output list and wall-clock time; kept apart from the data files so
    /// those stay byte-identical across reruns.
    pub fn finish(mut self, seconds: f64) -> Result<()> {
        #[derive(Serialize)]
        struct Run<'a> {
            manifest: &'a RunManifest,
            outputs: Vec<String>,
            wall_clock_seconds: f64,
        }
        let run = Run {
            manifest: &self.manifest,
            outputs: self.written.iter().map(|p| p.display().to_string()).collect(),
            wall_clock_seconds: seconds,
        };
        let body = serde_json::to_string_pretty(&run).map_err(|e| Error::Parse(e.to_string()))? + "\n";
        let name = format!("{}.run.json", self.manifest.command.replace(' ', "_"));
        let path = self.dir.join(&name);
        fs::write(&path, body).map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }
}
