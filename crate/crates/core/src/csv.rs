//! Minimal CSV emission shared by every export. Floats are written with 17
//! significant digits so that values round-trip exactly.

use std::fmt::Write;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Row-oriented CSV builder with LF line endings.
#[derive(Debug, Default, Clone)]
pub struct CsvWriter {
    buf: String,
}

impl CsvWriter {
    pub fn with_header<S: AsRef<str>>(columns: &[S]) -> Self {
        let mut w = CsvWriter::default();
        w.row(columns.iter().map(|c| c.as_ref().to_string()));
        w
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for f in fields {
            if !first {
                self.buf.push(',');
            }
            first = false;
            self.buf.push_str(f.as_ref());
        }
        self.buf.push('\n');
    }

    pub fn raw_line(&mut self, line: &str) {
        let _ = writeln!(self.buf, "{line}");
    }

    pub fn finish(self) -> String {
        self.buf
    }
}
