//! CSV trace ingestion.
//!
//! The header is `time` followed by input stream names. Each row holds the
//! timestamp in decimal seconds and one cell per listed input; an empty cell
//! means the input has no event in that row.

use std::io::Read;

use thiserror::Error;

use crate::ast::TypedSpecification;
use crate::engine::Event;
use crate::time::{parse_decimal_secs, Time};
use crate::value::{Value, ValueType};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("the first trace column must be `time`")]
    MissingTime,
    #[error("trace column `{0}` is not a declared input stream")]
    UnknownColumn(String),
    #[error("trace column `{0}` appears more than once")]
    DuplicateColumn(String),
    #[error("row {row}: {message}")]
    Row { row: u64, message: String },
    #[error("cannot read trace: {0}")]
    Csv(#[from] csv::Error),
}

pub struct TraceReader<R: Read> {
    records: csv::StringRecordsIntoIter<R>,
    /// Input index and type for every column after `time`.
    columns: Vec<(usize, ValueType)>,
    last: Option<Time>,
}

impl<R: Read> TraceReader<R> {
    pub fn new(source: R, spec: &TypedSpecification) -> Result<TraceReader<R>, TraceError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
        let header = reader.headers()?.clone();
        let mut names = header.iter();
        if names.next() != Some("time") {
            return Err(TraceError::MissingTime);
        }
        let mut columns = Vec::new();
        for name in names {
            let index = spec.input_index(name).ok_or_else(|| TraceError::UnknownColumn(name.to_string()))?;
            if columns.iter().any(|(i, _)| *i == index) {
                return Err(TraceError::DuplicateColumn(name.to_string()));
            }
            columns.push((index, spec.inputs[index].ty));
        }
        Ok(TraceReader { records: reader.into_records(), columns, last: None })
    }

    fn event(&mut self, record: &csv::StringRecord) -> Result<Event, TraceError> {
        let row = record.position().map_or(0, |p| p.line());
        let fail = |message: String| TraceError::Row { row, message };
        let mut cells = record.iter();
        let time_text = cells.next().unwrap_or("");
        let ts = parse_decimal_secs(time_text)
            .filter(|ts| !ts.is_negative())
            .ok_or_else(|| fail(format!("`{time_text}` is not a non-negative decimal number of seconds")))?;
        if let Some(last) = self.last {
            if ts < last {
                return Err(fail(format!("timestamp {ts} is earlier than the previous row's {last}")));
            }
        }
        self.last = Some(ts);
        let mut event = Event::new(ts);
        for ((index, ty), cell) in self.columns.iter().zip(cells) {
            if cell.is_empty() {
                continue;
            }
            let value = Value::parse_as(cell, *ty).ok_or_else(|| fail(format!("`{cell}` is not a valid {ty} value")))?;
            event.values.push((*index, value));
        }
        Ok(event)
    }
}

impl<R: Read> Iterator for TraceReader<R> {
    type Item = Result<Event, TraceError>;

    fn next(&mut self) -> Option<Self::Item> {
        let record = match self.records.next()? {
            Ok(record) => record,
            Err(err) => {
                let row = err.position().map_or(0, |p| p.line());
                return Some(Err(TraceError::Row { row, message: err.to_string() }));
            }
        };
        Some(self.event(&record))
    }
}
