//! Report envelope and CSV rendering.

use collision_lab::report::{round_sig15, Sig15};
use collision_lab::Scalar;
use serde::Serialize;
use serde_json::Value;

use crate::request::{AnalysisRequest, Format};

pub const TOOL: &str = "collision-lab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Num(f64),
    Empty,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::Num)
    }

    fn render(&self) -> String {
        match self {
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format_f64(*v),
            Cell::Empty => String::new(),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Cell {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Cell {
        Cell::Text(s)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Cell {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Cell {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Cell {
        Cell::Num(v)
    }
}

/// The exact rational (or nothing) followed by the float rendering.
pub fn scalar_cells(s: &Scalar) -> [Cell; 2] {
    let exact = s.exact().map_or(Cell::Empty, |q| Cell::Text(q.to_string()));
    [exact, Cell::Num(s.to_f64())]
}

/// 15 significant digits, plain decimal notation.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{}", round_sig15(v))
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn render(&self, out: &mut String) {
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
}

/// Result of one command before rendering.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub result: Value,
    pub table: Table,
    /// False when a verification found violations.
    pub passed: bool,
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    request: &'a AnalysisRequest,
    result: &'a Value,
}

/// Renders the report. CSV output starts with one `#` line carrying the same
/// envelope minus the result, so it can be replayed as well.
pub fn render(request: &AnalysisRequest, outcome: &Outcome) -> String {
    let env = Envelope { tool: TOOL, version: VERSION, seed: request.seed, request, result: &outcome.result };
    match request.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&env).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Csv => {
            let head = serde_json::json!({
                "tool": TOOL,
                "version": VERSION,
                "seed": request.seed,
                "request": request,
            });
            let mut s = format!("# {head}\n");
            outcome.table.render(&mut s);
            s
        }
    }
}

/// `Sig15` as a JSON value.
pub fn num(v: f64) -> Value {
    serde_json::to_value(Sig15(v)).expect("float serializes")
}
