//! `#` comment header echoed at the top of every output.

use std::io::{self, Write};
use std::time::{SystemTime, UNIX_EPOCH};

pub struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(subcommand: &str, timestamp: Option<&str>) -> Self {
        let ts = match timestamp {
            Some(t) => t.to_string(),
            None => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs().to_string())
                .unwrap_or_else(|_| "0".into()),
        };
        Manifest {
            lines: vec![
                ("tool".into(), format!("kfdp {}", env!("CARGO_PKG_VERSION"))),
                ("subcommand".into(), subcommand.into()),
                ("timestamp".into(), ts),
            ],
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.lines.push((key.into(), value.to_string()));
        self
    }

    pub fn write_to(&self, out: &mut dyn Write) -> io::Result<()> {
        for (k, v) in &self.lines {
            writeln!(out, "# {k}: {v}")?;
        }
        Ok(())
    }
}
