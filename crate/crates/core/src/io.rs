//! Bit-stable text outputs: a fixed-key-order JSON emitter, CSV tables and
//! the field, report and branch file formats.
//!
//! Every float is written with 17 significant digits (`{:.16e}`), so a value
//! read back parses to the identical `f64`.

use crate::continuation::Branch;
use crate::field::{NodalReport, PropertyCheck, WaveField};
use crate::vorticity::VorticityFn;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// JSON value whose objects keep insertion order.
#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

impl From<f64> for Json {
    fn from(v: f64) -> Self {
        Json::Num(v)
    }
}

impl From<bool> for Json {
    fn from(v: bool) -> Self {
        Json::Bool(v)
    }
}

impl From<usize> for Json {
    fn from(v: usize) -> Self {
        Json::Int(v as i64)
    }
}

impl From<&str> for Json {
    fn from(v: &str) -> Self {
        Json::Str(v.to_string())
    }
}

impl From<String> for Json {
    fn from(v: String) -> Self {
        Json::Str(v)
    }
}

impl From<&[f64]> for Json {
    fn from(v: &[f64]) -> Self {
        Json::Arr(v.iter().map(|&x| Json::Num(x)).collect())
    }
}

impl<T: Into<Json>> From<Option<T>> for Json {
    fn from(v: Option<T>) -> Self {
        v.map_or(Json::Null, Into::into)
    }
}

/// Ordered object builder.
#[derive(Debug, Default)]
pub struct ObjBuilder(Vec<(String, Json)>);

impl ObjBuilder {
    pub fn new() -> Self {
        ObjBuilder(Vec::new())
    }

    pub fn field(mut self, key: &str, value: impl Into<Json>) -> Self {
        self.0.push((key.to_string(), value.into()));
        self
    }

    pub fn build(self) -> Json {
        Json::Obj(self.0)
    }
}

fn escape(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

impl Json {
    /// Pretty-printed text with two-space indentation and a trailing newline.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out.push('\n');
        out
    }

    fn render_into(&self, out: &mut String, depth: usize) {
        let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Json::Num(v) if v.is_finite() => out.push_str(&fmt_f64(*v)),
            Json::Num(_) => out.push_str("null"),
            Json::Str(s) => escape(s, out),
            Json::Arr(items)
                if items
                    .iter()
                    .all(|i| matches!(i, Json::Num(_) | Json::Int(_) | Json::Null)) =>
            {
                out.push('[');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    item.render_into(out, depth);
                }
                out.push(']');
            }
            Json::Arr(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push_str("[\n");
                for (k, item) in items.iter().enumerate() {
                    pad(out, depth + 1);
                    item.render_into(out, depth + 1);
                    out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
                }
                pad(out, depth);
                out.push(']');
            }
            Json::Obj(fields) => {
                if fields.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push_str("{\n");
                for (k, (key, value)) in fields.iter().enumerate() {
                    pad(out, depth + 1);
                    escape(key, out);
                    out.push_str(": ");
                    value.render_into(out, depth + 1);
                    out.push_str(if k + 1 < fields.len() { ",\n" } else { "\n" });
                }
                pad(out, depth);
                out.push('}');
            }
        }
    }
}

/// Table rendered as CSV with a header row.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// One CSV cell.
pub enum Cell {
    F(f64),
    I(usize),
    B(bool),
    S(String),
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(
            cells
                .into_iter()
                .map(|c| match c {
                    Cell::F(v) => fmt_f64(v),
                    Cell::I(i) => i.to_string(),
                    Cell::B(b) => b.to_string(),
                    Cell::S(s) => s,
                })
                .collect(),
        );
    }

    pub fn floats(&mut self, values: &[f64]) {
        self.row(values.iter().map(|&v| Cell::F(v)).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn write_text(path: &Path, text: &str) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)
}

pub fn vorticity_json(v: &VorticityFn) -> Json {
    match v {
        VorticityFn::Zero => ObjBuilder::new().field("kind", "zero").build(),
        VorticityFn::Linear { a, b } => ObjBuilder::new()
            .field("kind", "linear")
            .field("a", *a)
            .field("b", *b)
            .build(),
        VorticityFn::Polynomial { coefficients } => ObjBuilder::new()
            .field("kind", "polynomial")
            .field("coefficients", coefficients.as_slice())
            .build(),
    }
}

/// Field file; field names match the serde form of [`WaveField`].
pub fn field_json(f: &WaveField) -> Json {
    ObjBuilder::new()
        .field("regime", f.regime.as_str())
        .field("h", f.h)
        .field("period", f.period)
        .field("period_star", f.period_star)
        .field("lambda", f.lambda)
        .field("bernoulli", f.bernoulli)
        .field("m", f.m)
        .field("t", f.t)
        .field("nx", f.nx)
        .field("ny", f.ny)
        .field("vort", vorticity_json(&f.vort))
        .field("eta", f.eta.as_slice())
        .field("psi", f.psi.as_slice())
        .build()
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("malformed field file {path}: {message}")]
    Malformed { path: String, message: String },
}

pub fn read_field(path: &Path) -> Result<WaveField, ReadError> {
    let text = fs::read_to_string(path).map_err(|source| ReadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_field(&text).map_err(|message| ReadError::Malformed {
        path: path.display().to_string(),
        message,
    })
}

pub fn parse_field(text: &str) -> Result<WaveField, String> {
    let f: WaveField = serde_json::from_str(text).map_err(|e| e.to_string())?;
    f.validate().map_err(|e| e.to_string())?;
    Ok(f)
}

fn check_json(c: &PropertyCheck) -> Json {
    ObjBuilder::new()
        .field("verdict", format!("{:?}", c.verdict).to_lowercase())
        .field("margin", c.margin)
        .build()
}

/// Nodal report with booleans at top level and margins nested.
pub fn nodal_json(r: &NodalReport) -> Json {
    let props = r.properties();
    let mut b = ObjBuilder::new().field("orientation", r.orientation);
    for (name, c) in props.iter() {
        b = b.field(name, c.holds());
    }
    b = b
        .field("stagnation_margin", r.stagnation_margin)
        .field("bernoulli_sup", r.bernoulli_sup)
        .field("robin_sup", r.robin_sup)
        .field("robin_nodes", r.robin_nodes)
        .field("surface_monotone", r.surface_monotone);
    let margins = props
        .iter()
        .fold(ObjBuilder::new(), |m, (name, c)| m.field(name, check_json(c)))
        .build();
    b.field("margins", margins).build()
}

pub fn branch_header_json(b: &Branch) -> Json {
    let c = &b.config;
    let config = ObjBuilder::new()
        .field("ds", c.ds)
        .field("max_steps", c.max_steps)
        .field("newton_tol", c.newton_tol)
        .field("newton_max_iter", c.newton_max_iter)
        .field("stagnation_rel", c.stagnation_rel)
        .field("bed_rel", c.bed_rel)
        .field("unbounded_factor", c.unbounded_factor)
        .field("period_factor", c.period_factor)
        .field("loop_radius", c.loop_radius)
        .field("max_halvings", c.max_halvings)
        .field("nx", c.nx)
        .field("ny", c.ny)
        .build();
    let certificate = b.loop_report.certificate.as_ref().map(|c| {
        ObjBuilder::new()
            .field("i", c.i)
            .field("j", c.j)
            .field("distance", c.distance)
            .build()
    });
    let uniform = Json::Arr(
        b.loop_report
            .uniform_points
            .iter()
            .map(|&(i, p)| ObjBuilder::new().field("index", i).field("parameter", p).build())
            .collect(),
    );
    ObjBuilder::new()
        .field("regime", b.regime.as_str())
        .field("vorticity", vorticity_json(&b.vort))
        .field("h", b.h)
        .field("lambda_star", b.lambda_star)
        .field("tau_star", b.tau_star)
        .field("period_star", b.period_star)
        .field("config", config)
        .field("points", b.points.len())
        .field("termination", b.termination.as_str())
        .field("trivial", b.trivial)
        .field("loop_certificate", certificate)
        .field("uniform_points", uniform)
        .field("artifact_warning", b.loop_report.artifact_warning)
        .build()
}

pub const BRANCH_COLUMNS: [&str; 18] = [
    "index",
    "t",
    "parameter",
    "Q",
    "m",
    "newton_residual",
    "stagnation_margin",
    "bernoulli_sup",
    "property_i",
    "property_ii_left",
    "property_ii_right",
    "property_ii_bed",
    "property_iii_left",
    "property_iii_right",
    "surface_monotone",
    "orientation",
    "min_surface_height",
    "eta_sup",
];

pub fn branch_csv(b: &Branch) -> Csv {
    let mut csv = Csv::new(&BRANCH_COLUMNS);
    for (k, p) in b.points.iter().enumerate() {
        let mut cells = vec![
            Cell::I(k),
            Cell::F(p.t),
            Cell::F(p.parameter),
            Cell::F(p.field.bernoulli),
            Cell::F(p.field.m),
            Cell::F(p.newton_residual),
            Cell::F(p.stagnation_margin),
            Cell::F(p.bernoulli_sup),
        ];
        match &p.nodal {
            Some(r) => {
                cells.extend(r.properties().iter().map(|(_, c)| Cell::B(c.holds())));
                cells.push(Cell::B(r.surface_monotone));
                cells.push(Cell::F(r.orientation));
            }
            None => {
                cells.extend((0..7).map(|_| Cell::B(false)));
                cells.push(Cell::F(0.0));
            }
        }
        cells.push(Cell::F(p.min_surface_height));
        cells.push(Cell::F(p.eta_sup));
        csv.row(cells);
    }
    csv
}

/// Writes `branch.json`, `branch.csv` and one field file per point.
pub fn write_branch(dir: &Path, b: &Branch) -> io::Result<()> {
    write_text(&dir.join("branch.json"), &branch_header_json(b).render())?;
    write_text(&dir.join("branch.csv"), &branch_csv(b).render())?;
    for (k, p) in b.points.iter().enumerate() {
        let path = dir.join("fields").join(format!("point_{k:03}.field.json"));
        write_text(&path, &field_json(&p.field).render())?;
        if let Some(r) = &p.nodal {
            let path = dir.join("fields").join(format!("point_{k:03}.nodal.json"));
            write_text(&path, &nodal_json(r).render())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_wave::Regime;
    use crate::uniform_stream::{solve_uniform_stream, DEFAULT_NODES};

    #[test]
    fn floats_roundtrip_exactly() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn json_keeps_key_order_and_escapes() {
        let j = ObjBuilder::new()
            .field("z", 1.0)
            .field("a", "q\"x")
            .field("n", f64::NAN)
            .field("v", [1.0, 2.0].as_slice())
            .build();
        let text = j.render();
        assert!(text.find("\"z\"").unwrap() < text.find("\"a\"").unwrap());
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["a"], "q\"x");
        assert!(parsed["n"].is_null());
        assert_eq!(parsed["v"][1], 2.0);
    }

    #[test]
    fn field_file_roundtrip_is_exact() {
        let s = solve_uniform_stream(&VorticityFn::polynomial([0.3, 0.0, 0.5]), 1.0, 0.8, DEFAULT_NODES).unwrap();
        let mut f = WaveField::from_uniform_stream(&s, 4.5, Regime::VariablePeriod, 5, 9);
        f.eta[1] = 0.01;
        let back = parse_field(&field_json(&f).render()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn malformed_field_is_rejected() {
        assert!(parse_field("{").is_err());
        let s = solve_uniform_stream(&VorticityFn::Zero, 1.0, 0.8, DEFAULT_NODES).unwrap();
        let f = WaveField::from_uniform_stream(&s, 4.5, Regime::FixedPeriod, 5, 9);
        let text = field_json(&f).render().replace("\"nx\": 5", "\"nx\": 6");
        assert!(parse_field(&text).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut c = Csv::new(&["a", "b"]);
        c.floats(&[1.0, -2.5]);
        c.row(vec![Cell::I(3), Cell::B(true)]);
        assert_eq!(c.render(), "a,b\n1.0000000000000000e0,-2.5000000000000000e0\n3,true\n");
    }
}
