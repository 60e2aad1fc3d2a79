//! Table persistence (CSV and JSON) and SVG line charts.
//!
//! Floats are written with 17 significant digits so every value reads back
//! bit-identical. Output never contains timestamps, so identical rows give
//! identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::experiments::{CostRow, CsrPoint, QcountRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `.json` means JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) if v.is_finite() => Value::from(*v),
            Cell::Float(v) => Value::from(format_float(*v)),
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }
}

/// `%.17g`: 17 significant digits, trailing zeros trimmed, exponent form
/// outside `[1e-5, 1e17)`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// A row type with a fixed column schema.
pub trait TableRow {
    const COLUMNS: &'static [&'static str];

    fn cells(&self) -> Vec<Cell>;

    /// Extra keys carried only by the JSON form.
    fn json_extras(&self) -> Vec<(&'static str, Cell)> {
        Vec::new()
    }
}

impl TableRow for CostRow {
    const COLUMNS: &'static [&'static str] = &["M", "N", "cost_sqgpu", "cost_entanglement", "cost_monolithic"];

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.nodes.into()),
            Cell::Int(self.qubits_per_node.into()),
            Cell::Float(self.cost_sqgpu),
            Cell::Float(self.cost_entanglement),
            Cell::Float(self.cost_monolithic),
        ]
    }
}

impl TableRow for QcountRow {
    const COLUMNS: &'static [&'static str] = &["param", "Q_E", "Q_S"];

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.param),
            Cell::Int(self.q_entanglement),
            Cell::Int(self.q_sqgpu),
        ]
    }
}

impl TableRow for CsrPoint {
    const COLUMNS: &'static [&'static str] = &[
        "arch",
        "level",
        "M",
        "N",
        "Q",
        "burst_ratio",
        "trials",
        "mean_Lr",
        "mean_Li",
        "csr",
        "latency_ratio",
        "stderr_csr",
        "seed",
    ];

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Text(self.arch.to_string()),
            Cell::Text(self.level.to_string()),
            Cell::Int(self.nodes.into()),
            Cell::Int(self.qubits_per_node.into()),
            Cell::Int(self.comm_qubits),
            Cell::Float(self.burst_ratio),
            Cell::Int(self.trials.into()),
            Cell::Float(self.mean_lr),
            Cell::Float(self.mean_li),
            Cell::Float(self.csr),
            Cell::Float(self.latency_ratio),
            Cell::Float(self.stderr_csr),
            Cell::Int(self.seed),
        ]
    }

    fn json_extras(&self) -> Vec<(&'static str, Cell)> {
        vec![("mean_trial_csr", Cell::Float(self.mean_trial_csr))]
    }
}

/// Ordered `key=value` pairs written ahead of the data.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata(pub Vec<(String, String)>);

impl Metadata {
    pub fn new() -> Self {
        Metadata(vec![
            ("tool".into(), env!("CARGO_PKG_NAME").into()),
            ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ])
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }
}

pub fn render_csv<R: TableRow>(rows: &[R], meta: &Metadata) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    if !meta.0.is_empty() {
        let line: Vec<String> = meta.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(out, "# {}", line.join(" "))?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(R::COLUMNS)?;
    for row in rows {
        w.write_record(row.cells().iter().map(Cell::render))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn render_json<R: TableRow>(rows: &[R], meta: &Metadata) -> Result<Vec<u8>> {
    let metadata: Map<String, Value> = meta
        .0
        .iter()
        .map(|(k, v)| (k.clone(), Value::from(v.as_str())))
        .collect();
    let rows: Vec<Value> = rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            for (col, cell) in R::COLUMNS.iter().zip(row.cells()) {
                obj.insert((*col).to_string(), cell.to_json());
            }
            for (key, cell) in row.json_extras() {
                obj.insert(key.to_string(), cell.to_json());
            }
            Value::Object(obj)
        })
        .collect();
    let doc = serde_json::json!({
        "metadata": metadata,
        "columns": R::COLUMNS,
        "rows": rows,
    });
    let mut out = serde_json::to_vec_pretty(&doc)?;
    out.push(b'\n');
    Ok(out)
}

pub fn render_table<R: TableRow>(rows: &[R], format: Format, meta: &Metadata) -> Result<Vec<u8>> {
    match format {
        Format::Csv => render_csv(rows, meta),
        Format::Json => render_json(rows, meta),
    }
}

pub fn write_table<R: TableRow>(rows: &[R], format: Format, path: &Path, meta: &Metadata) -> Result<()> {
    let bytes = render_table(rows, format, meta)?;
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}

/// Untyped table as read back from disk; cells keep their text form.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TextTable {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl TextTable {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn f64_at(&self, row: usize, col: usize) -> Option<f64> {
        self.rows[row][col].parse().ok()
    }
}

pub fn parse_csv_table(text: &str) -> Result<TextTable> {
    let mut metadata = Vec::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        for pair in line.trim_start_matches('#').split_whitespace() {
            if let Some((k, v)) = pair.split_once('=') {
                metadata.push((k.to_string(), v.to_string()));
            }
        }
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let columns = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(TextTable {
        metadata,
        columns,
        rows,
    })
}

pub fn parse_json_table(text: &str) -> Result<TextTable> {
    let doc: Value = serde_json::from_str(text)?;
    let bad = |what: &str| Error::InvalidInput(format!("JSON table: {what}"));
    let columns: Vec<String> = doc["columns"]
        .as_array()
        .ok_or_else(|| bad("missing `columns`"))?
        .iter()
        .map(|c| c.as_str().map(str::to_string).ok_or_else(|| bad("non-string column")))
        .collect::<Result<_>>()?;
    let metadata = doc["metadata"]
        .as_object()
        .map(|m| {
            m.iter()
                .map(|(k, v)| (k.clone(), v.as_str().map_or_else(|| v.to_string(), str::to_string)))
                .collect()
        })
        .unwrap_or_default();
    let rows = doc["rows"]
        .as_array()
        .ok_or_else(|| bad("missing `rows`"))?
        .iter()
        .map(|row| {
            columns
                .iter()
                .map(|c| match &row[c] {
                    Value::String(s) => Ok(s.clone()),
                    Value::Number(n) => Ok(n.to_string()),
                    Value::Null => Err(bad(&format!("row lacks `{c}`"))),
                    other => Ok(other.to_string()),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(TextTable {
        metadata,
        columns,
        rows,
    })
}

pub fn read_table(path: &Path) -> Result<TextTable> {
    let text = fs::read_to_string(path)?;
    match Format::from_path(path) {
        Format::Csv => parse_csv_table(&text),
        Format::Json => parse_json_table(&text),
    }
}

// ─── charts ───────────────────────────────────────────────────────────────

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 190.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 70.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChartSpec {
    pub x: String,
    pub y: Vec<String>,
    /// Plot `lg y` instead of `y`.
    pub logy: bool,
    /// Split every `y` column into one series per distinct value here.
    pub group_by: Option<String>,
    /// Keep only rows whose column equals the given text.
    pub filters: Vec<(String, String)>,
    pub title: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Series for `spec`, in column order then first-appearance order of groups.
pub fn chart_series(table: &TextTable, spec: &ChartSpec) -> Result<Vec<Series>> {
    let x_col = table.column(&spec.x)?;
    let y_cols = spec
        .y
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<Vec<_>>>()?;
    if y_cols.is_empty() {
        return Err(Error::Config("no y column given".into()));
    }
    let group_col = spec.group_by.as_deref().map(|g| table.column(g)).transpose()?;
    let filters = spec
        .filters
        .iter()
        .map(|(c, v)| Ok((table.column(c)?, v.as_str())))
        .collect::<Result<Vec<_>>>()?;

    let kept: Vec<usize> = (0..table.rows.len())
        .filter(|&r| filters.iter().all(|(c, v)| table.rows[r][*c] == *v))
        .collect();
    if kept.is_empty() {
        return Err(Error::InvalidInput("table has no rows to plot".into()));
    }

    let mut series: Vec<Series> = Vec::new();
    let mut index: BTreeMap<(usize, String), usize> = BTreeMap::new();
    for (yi, &yc) in y_cols.iter().enumerate() {
        for &r in &kept {
            let group = group_col.map(|g| table.rows[r][g].clone()).unwrap_or_default();
            let slot = *index.entry((yi, group.clone())).or_insert_with(|| {
                let name = match group_col {
                    Some(g) => format!("{} {}={}", spec.y[yi], table.columns[g], group),
                    None => spec.y[yi].clone(),
                };
                series.push(Series {
                    name,
                    points: Vec::new(),
                });
                series.len() - 1
            });
            let (Some(x), Some(y)) = (table.f64_at(r, x_col), table.f64_at(r, yc)) else {
                continue;
            };
            let y = if spec.logy { y.log10() } else { y };
            if x.is_finite() && y.is_finite() {
                series[slot].points.push((x, y));
            }
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(series)
}

fn axis_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    trim_zeros(s)
}

pub fn render_svg(series: &[Series], spec: &ChartSpec) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (x_min, x_max) = axis_range(all().map(|p| p.0));
    let (y_min, y_max) = axis_range(all().map(|p| p.1));
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if let Some(title) = &spec.title {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            escape(title)
        );
    }

    // axes and ticks
    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333"/>"##
    );
    for i in 0..=5 {
        let t = f64::from(i) / 5.0;
        let xv = x_min + t * (x_max - x_min);
        let yv = y_min + t * (y_max - y_min);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            svg,
            r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#333"/><text x="{px:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"##,
            MARGIN_TOP + plot_h,
            MARGIN_TOP + plot_h + 5.0,
            MARGIN_TOP + plot_h + 20.0,
            tick_label(xv)
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{MARGIN_LEFT}" y2="{py:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"##,
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let y_label = if spec.logy {
        format!("lg {}", spec.y.join(", "))
    } else {
        spec.y.join(", ")
    };
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 20.0,
        escape(&spec.x)
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(22 {:.2}) rotate(-90)" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        escape(&y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes a line chart of `table` to `path`. Nothing is written on error.
pub fn render_chart(table: &TextTable, spec: &ChartSpec, path: &Path) -> Result<()> {
    let series = chart_series(table, spec)?;
    let svg = render_svg(&series, spec);
    fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(0.2), "0.20000000000000001");
        assert_eq!(format_float(5.0), "5");
        assert_eq!(format_float(36_748_645.261_954_83), "36748645.261954829");
        assert_eq!(format_float(9.255_549_802_686_031e17), "9.2555498026860314e17");
        assert_eq!(format_float(1.5e-7), "1.4999999999999999e-7");
        assert_eq!(format_float(f64::INFINITY), "inf");
        assert_eq!(format_float(0.0), "0");
    }

    #[test]
    fn formatted_floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, -2.5, 123_456_789.123_456_78, f64::MAX, f64::MIN_POSITIVE] {
            let back: f64 = format_float(v).parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v}");
        }
    }

    fn rows() -> Vec<QcountRow> {
        vec![
            QcountRow { param: 1, q_entanglement: 6, q_sqgpu: 3 },
            QcountRow { param: 2, q_entanglement: 12, q_sqgpu: 6 },
        ]
    }

    #[test]
    fn empty_rows_give_header_only() {
        let out = render_csv::<QcountRow>(&[], &Metadata::default()).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "param,Q_E,Q_S\n");
    }

    #[test]
    fn csv_with_metadata_parses_back() {
        let meta = Metadata::new().with("seed", 42);
        let text = String::from_utf8(render_csv(&rows(), &meta).unwrap()).unwrap();
        assert!(text.starts_with("# tool=sqgpu version="));
        let t = parse_csv_table(&text).unwrap();
        assert_eq!(t.columns, ["param", "Q_E", "Q_S"]);
        assert_eq!(t.rows[1], ["2", "12", "6"]);
        assert!(t.metadata.contains(&("seed".into(), "42".into())));
    }

    #[test]
    fn json_parses_back() {
        let bytes = render_json(&rows(), &Metadata::new()).unwrap();
        let t = parse_json_table(std::str::from_utf8(&bytes).unwrap()).unwrap();
        assert_eq!(t.rows[0], ["1", "6", "3"]);
    }

    fn chart_table() -> TextTable {
        TextTable {
            metadata: vec![],
            columns: vec!["M".into(), "csr".into(), "p".into(), "level".into()],
            rows: vec![
                vec!["8".into(), "0.9".into(), "0.1".into(), "node".into()],
                vec!["16".into(), "0.8".into(), "0.1".into(), "node".into()],
                vec!["8".into(), "0.7".into(), "0.3".into(), "node".into()],
                vec!["16".into(), "0.6".into(), "0.3".into(), "node".into()],
                vec!["8".into(), "0.5".into(), "0.3".into(), "qubit".into()],
            ],
        }
    }

    #[test]
    fn grouping_and_filters() {
        let spec = ChartSpec {
            x: "M".into(),
            y: vec!["csr".into()],
            group_by: Some("p".into()),
            filters: vec![("level".into(), "node".into())],
            ..Default::default()
        };
        let series = chart_series(&chart_table(), &spec).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series[1].points, vec![(8.0, 0.7), (16.0, 0.6)]);
        let svg = render_svg(&series, &spec);
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn unknown_column_and_empty_table() {
        let spec = ChartSpec { x: "nope".into(), y: vec!["csr".into()], ..Default::default() };
        assert!(matches!(chart_series(&chart_table(), &spec), Err(Error::UnknownColumn(_))));
        let spec = ChartSpec { x: "M".into(), y: vec!["csr".into()], ..Default::default() };
        let empty = TextTable { rows: vec![], ..chart_table() };
        assert!(chart_series(&empty, &spec).is_err());
    }
}
