//! Output files. Every file opens with a provenance header in its own comment
//! syntax; wall time goes to a separate `timing.txt` so that reruns reproduce
//! the other files byte for byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use homog_core::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Files collected in memory and written in one sequential step.
pub struct Bundle {
    dir: PathBuf,
    header: Vec<String>,
    files: Vec<(String, String)>,
}

impl Bundle {
    pub fn new(dir: PathBuf, command: &str, echo: &str) -> Self {
        let mut header = vec![format!("homog-nd {VERSION}"), format!("command: {command}")];
        header.extend(echo.lines().filter(|l| !l.trim().is_empty()).map(|l| format!("config: {l}")));
        Bundle { dir, header, files: Vec::new() }
    }

    /// A plain-text file with `#` header lines.
    pub fn text(&mut self, name: &str, body: &str) {
        let mut s = String::new();
        for h in &self.header {
            s.push_str("# ");
            s.push_str(h);
            s.push('\n');
        }
        s.push_str(body);
        self.files.push((name.into(), s));
    }

    /// An SVG file; the header goes into an XML comment.
    pub fn svg(&mut self, name: &str, body: &str) {
        let header = self.header.join("\n  ").replace("--", "- -");
        self.files.push((name.into(), format!("<!--\n  {header}\n-->\n{body}")));
    }

    /// A JSON document; callers embed provenance as an object field.
    pub fn json(&mut self, name: &str, body: String) {
        self.files.push((name.into(), body + "\n"));
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn write(self, wall: Duration) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir).map_err(|e| io(&self.dir, e))?;
        for (name, body) in &self.files {
            let p = self.dir.join(name);
            fs::write(&p, body).map_err(|e| io(&p, e))?;
        }
        let p = self.dir.join("timing.txt");
        fs::write(&p, format!("wall_seconds = {:.3}\n", wall.as_secs_f64())).map_err(|e| io(&p, e))?;
        Ok(self.dir)
    }
}

fn io(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

/// A directory-safe label: anything but ASCII alphanumerics, `-` and `.`
/// becomes `_`; file arguments contribute only their stem.
pub fn label(s: &str) -> String {
    let p = Path::new(s);
    let base = if p.is_file() { p.file_stem().and_then(|x| x.to_str()).unwrap_or(s) } else { s };
    base.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}
