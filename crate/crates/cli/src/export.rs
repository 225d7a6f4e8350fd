//! CSV output. Floats use the shortest representation that parses back to
//! the same bits, so files are reproducible and diffable.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use quadprop::{Error, Result};

/// Shortest round-trip text for `x`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub enum Cell {
    F(f64),
    U(usize),
    S(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::U(n)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::S(s)
    }
}

pub struct CsvFile {
    writer: csv::Writer<BufWriter<File>>,
    width: usize,
}

impl CsvFile {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(BufWriter::new(file));
        writer.write_record(header)?;
        Ok(CsvFile {
            writer,
            width: header.len(),
        })
    }

    pub fn row(&mut self, cells: Vec<Cell>) -> Result<()> {
        debug_assert_eq!(cells.len(), self.width);
        let text = cells.into_iter().map(|c| match c {
            Cell::F(x) => fmt_f64(x),
            Cell::U(n) => n.to_string(),
            Cell::S(s) => s,
        });
        self.writer.write_record(text)?;
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let mut inner = self
            .writer
            .into_inner()
            .map_err(|e| Error::Io(e.to_string()))?;
        inner.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_bit_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 1.0, -0.0] {
            let back: f64 = fmt_f64(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x}");
        }
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(1e-20), "1e-20");
    }

    #[test]
    fn header_then_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut f = CsvFile::create(&path, &["t", "m", "label"]).unwrap();
        f.row(vec![0.25.into(), 3usize.into(), "a,b".into()]).unwrap();
        f.finish().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "t,m,label\n0.25,3,\"a,b\"\n");
    }
}
