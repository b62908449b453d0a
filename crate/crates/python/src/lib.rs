//! Python bindings for the data pipe toolkit.

use std::net::SocketAddr;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict, PyList};

use datapipe::augtext::{AugText, Part};
use datapipe::directory::{self, DirectoryConfig, DirectoryServer, ReservedTemplate, Target};
use datapipe::formatopt;
use datapipe::harness::{self, BenchSpec, Mode, Payload};
use datapipe::wire::{self, Column, ColumnType, Compression, Format, FrameType, Schema, TransferHeader, Value};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> PyResult<T> {
    s.parse().map_err(PyValueError::new_err)
}

fn column_type(name: &str) -> PyResult<ColumnType> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "int32" => ColumnType::Int32,
        "int64" => ColumnType::Int64,
        "float64" => ColumnType::Float64,
        "bool" => ColumnType::Bool,
        "text" => ColumnType::Text,
        _ => return Err(PyValueError::new_err(format!("unknown column type {name:?}"))),
    })
}

fn wire_format(name: &str) -> PyResult<Format> {
    match name.to_ascii_lowercase().as_str() {
        "row" => Ok(Format::Row),
        "column" => Ok(Format::Column),
        _ => Err(PyValueError::new_err(format!("unknown wire format {name:?} (row, column)"))),
    }
}

fn value_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Int32(x) => x.into_pyobject(py)?.into_any(),
        Value::Int64(x) => x.into_pyobject(py)?.into_any(),
        Value::Float64(x) => x.into_pyobject(py)?.into_any(),
        Value::Bool(x) => x.into_pyobject(py)?.to_owned().into_any(),
        Value::Text(s) => s.into_pyobject(py)?.into_any(),
    })
}

/// Text that remembers which of its pieces were typed values.
#[pyclass(name = "AugText", skip_from_py_object)]
#[derive(Clone, Default)]
struct PyAugText {
    inner: AugText,
}

#[pymethods]
impl PyAugText {
    /// Builds from a list of parts: int, float, bool or str.
    #[new]
    #[pyo3(signature = (parts=None))]
    fn new(parts: Option<&Bound<'_, PyList>>) -> PyResult<Self> {
        let mut t = PyAugText::default();
        if let Some(parts) = parts {
            for p in parts.iter() {
                t.push(&p)?;
            }
        }
        Ok(t)
    }

    /// Appends one part. Python ints become INT64 parts.
    fn push(&mut self, part: &Bound<'_, PyAny>) -> PyResult<()> {
        // bool first: Python bools are ints too
        if let Ok(b) = part.cast::<pyo3::types::PyBool>() {
            self.inner.push_bool(b.is_true());
        } else if let Ok(x) = part.extract::<i64>() {
            self.inner.push_int64(x);
        } else if let Ok(x) = part.extract::<f64>() {
            self.inner.push_float64(x);
        } else if let Ok(s) = part.extract::<&str>() {
            self.inner.push_str(s);
        } else {
            return Err(PyValueError::new_err("parts must be int, float, bool or str"));
        }
        Ok(())
    }

    fn push_int32(&mut self, x: i32) {
        self.inner.push_int32(x);
    }

    /// The parts as Python values.
    fn parts<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyAny>>> {
        self.inner.parts().map(|p| value_to_py(py, &p.to_value())).collect()
    }

    fn split(&self, delim: char) -> Vec<PyAugText> {
        self.inner.split(delim).into_iter().map(|inner| PyAugText { inner }).collect()
    }

    fn __str__(&self) -> String {
        self.inner.materialize().to_owned()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        let parts: Vec<String> = self
            .inner
            .parts()
            .map(|p| match p {
                Part::Text(s) => format!("{s:?}"),
                p => {
                    let mut s = String::new();
                    p.render(&mut s);
                    s
                }
            })
            .collect();
        format!("AugText([{}])", parts.join(", "))
    }
}

/// Picks the value delimiter from typed records. Returns a dict with
/// `delimiter`, `ambiguous` and per-candidate `counts`.
#[pyfunction]
fn infer_delimiter<'py>(py: Python<'py>, records: Vec<PyRef<'py, PyAugText>>) -> PyResult<Bound<'py, PyDict>> {
    let r = formatopt::infer_delimiter(records.iter().map(|t| &t.inner)).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("delimiter", r.delimiter)?;
    d.set_item("ambiguous", r.ambiguous)?;
    d.set_item("counts", r.candidate_counts.into_iter().collect::<Vec<_>>())?;
    Ok(d)
}

/// Encodes a transfer header. `columns` is a list of (name, type) pairs.
#[pyfunction]
#[pyo3(signature = (format, codec, query_id, columns))]
fn encode_header<'py>(
    py: Python<'py>,
    format: &str,
    codec: &str,
    query_id: &str,
    columns: Vec<(String, String)>,
) -> PyResult<Bound<'py, PyBytes>> {
    let cols = columns.iter().map(|(n, t)| Ok(Column::new(n.clone(), column_type(t)?))).collect::<PyResult<_>>()?;
    let schema = Schema::new(cols).map_err(value_err)?;
    let h = TransferHeader::new(wire_format(format)?, parse(codec)?, query_id, schema);
    Ok(PyBytes::new(py, &wire::encode_header(&h).map_err(value_err)?))
}

/// Decodes a transfer header from the front of `data`. Returns the header
/// as a dict and the number of bytes it used.
#[pyfunction]
fn decode_header<'py>(py: Python<'py>, data: &[u8]) -> PyResult<(Bound<'py, PyDict>, usize)> {
    let (h, used) = wire::decode_header(data).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("format", if h.format == Format::Column { "column" } else { "row" })?;
    d.set_item("codec", h.compression.to_string())?;
    d.set_item("query_id", h.query_id)?;
    let cols: Vec<(String, &str)> = h.schema.columns().iter().map(|c| (c.name.clone(), c.ty.name())).collect();
    d.set_item("columns", cols)?;
    Ok((d, used))
}

fn to_json(obj: &Bound<'_, PyAny>) -> PyResult<serde_json::Value> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(value_err)
}

/// Encodes JSON-compatible documents with keys sent once per key set.
/// Returns the frames, concatenated, ending with end-of-stream.
#[pyfunction]
fn json_dedup_encode<'py>(py: Python<'py>, docs: &Bound<'py, PyList>) -> PyResult<Bound<'py, PyBytes>> {
    let docs = docs.iter().map(|d| to_json(&d)).collect::<PyResult<Vec<_>>>()?;
    let frames = formatopt::json_dedup_encode(&docs).map_err(value_err)?;
    let mut out = Vec::new();
    for f in &frames {
        wire::write_frame(&mut out, f.frame_type, &f.payload).map_err(value_err)?;
    }
    Ok(PyBytes::new(py, &out))
}

/// Inverse of `json_dedup_encode`.
#[pyfunction]
fn json_dedup_decode<'py>(py: Python<'py>, data: &[u8]) -> PyResult<Vec<Bound<'py, PyAny>>> {
    let mut r = data;
    let mut frames = Vec::new();
    while !r.is_empty() {
        let f = wire::read_frame(&mut r).map_err(value_err)?;
        let end = f.frame_type == FrameType::EndOfStream;
        frames.push(f);
        if end {
            break;
        }
    }
    let docs = formatopt::json_dedup_decode(&frames).map_err(value_err)?;
    let loads = py.import("json")?.getattr("loads")?;
    docs.iter().map(|d| loads.call1((d.to_string(),))).collect()
}

/// Splits a target name. Returns None for a plain file path, otherwise a
/// dict with `system`, `workers` and `query`.
#[pyfunction]
#[pyo3(signature = (target, template=None))]
fn parse_target<'py>(py: Python<'py>, target: &str, template: Option<&str>) -> PyResult<Option<Bound<'py, PyDict>>> {
    let template = template.map(ReservedTemplate::new).transpose().map_err(value_err)?;
    match directory::parse_target(target, template.as_ref()).map_err(value_err)? {
        Target::File(_) => Ok(None),
        Target::Reserved(t) => {
            let d = PyDict::new(py);
            d.set_item("system", t.system_name)?;
            d.set_item("workers", t.workers)?;
            d.set_item("query", t.query_id)?;
            Ok(Some(d))
        }
    }
}

/// The synthetic benchmark table as a list of row tuples.
#[pyfunction]
#[pyo3(signature = (n, seed=1, payload="bench_schema"))]
fn generate_dataset<'py>(py: Python<'py>, n: usize, seed: u64, payload: &str) -> PyResult<Vec<Bound<'py, PyAny>>> {
    let block = harness::generate_dataset(n, seed, parse::<Payload>(payload)?);
    (0..block.row_count())
        .map(|i| {
            let row = block.columns().iter().map(|c| value_to_py(py, &c.value(i))).collect::<PyResult<Vec<_>>>()?;
            Ok(pyo3::types::PyTuple::new(py, row)?.into_any())
        })
        .collect()
}

/// Runs one transfer of the synthetic table and returns its measurements.
/// `mode` is file_csv, pipe_text, pipe_row or pipe_column.
#[pyfunction]
#[pyo3(signature = (n, mode="pipe_column", codec="none", workers=1, seed=1, payload="bench_schema", directory=None))]
#[allow(clippy::too_many_arguments)]
fn run_transfer<'py>(
    py: Python<'py>,
    n: usize,
    mode: &str,
    codec: &str,
    workers: u32,
    seed: u64,
    payload: &str,
    directory: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = BenchSpec {
        n,
        seed,
        mode: parse::<Mode>(mode)?,
        codec: parse::<Compression>(codec)?,
        workers,
        payload: parse(payload)?,
        ..BenchSpec::default()
    };
    let directory: Option<SocketAddr> = directory.map(|a| a.parse().map_err(value_err)).transpose()?;
    let run = py
        .detach(|| {
            let scratch = std::env::temp_dir().join(format!("pydatapipe-{}", std::process::id()));
            std::fs::create_dir_all(&scratch)?;
            let r = harness::run_bench(&spec, &scratch, directory);
            let _ = std::fs::remove_dir_all(&scratch);
            r.map_err(std::io::Error::other)
        })
        .map_err(|e| PyIOError::new_err(e.to_string()))?;
    let r = run.result;
    let d = PyDict::new(py);
    d.set_item("mode", r.spec.mode.to_string())?;
    d.set_item("codec", r.spec.codec.to_string())?;
    d.set_item("rows", r.rows)?;
    d.set_item("bytes", r.bytes)?;
    d.set_item("exact", r.exact)?;
    d.set_item("codec_downgraded", r.codec_downgraded)?;
    d.set_item("export_s", r.export.as_secs_f64())?;
    d.set_item("import_s", r.import.as_secs_f64())?;
    d.set_item("total_s", r.total.as_secs_f64())?;
    Ok(d)
}

/// A directory service running in this process until `close()`.
#[pyclass(name = "Directory")]
struct PyDirectory {
    server: Option<DirectoryServer>,
    addr: SocketAddr,
}

#[pymethods]
impl PyDirectory {
    #[new]
    #[pyo3(signature = (host="127.0.0.1", port=0))]
    fn new(host: &str, port: u16) -> PyResult<Self> {
        let server = DirectoryServer::bind((host, port), DirectoryConfig::default())
            .map_err(|e| PyIOError::new_err(e.to_string()))?;
        let addr = server.local_addr();
        Ok(PyDirectory { server: Some(server), addr })
    }

    #[getter]
    fn address(&self) -> String {
        self.addr.to_string()
    }

    fn close(&mut self) {
        self.server.take();
    }

    fn __enter__(slf: PyRef<'_, Self>) -> PyRef<'_, Self> {
        slf
    }

    fn __exit__(
        &mut self,
        _ty: Option<&Bound<'_, PyAny>>,
        _v: Option<&Bound<'_, PyAny>>,
        _tb: Option<&Bound<'_, PyAny>>,
    ) {
        self.close();
    }
}

/// Checks received records against a debug mirror file. Returns the number
/// compared, or raises ValueError naming the first differing record.
#[pyfunction]
fn debug_compare(path: PathBuf, received: Vec<String>) -> PyResult<usize> {
    match datapipe::pipe::debug_compare(&path, &received).map_err(|e| PyIOError::new_err(e.to_string()))? {
        datapipe::pipe::Verdict::Ok { compared } => Ok(compared),
        datapipe::pipe::Verdict::Mismatch { record, expected, found } => {
            Err(PyValueError::new_err(format!("record {record}: mirror has {expected:?}, stream has {found:?}")))
        }
    }
}

#[pymodule]
pub fn pydatapipe(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAugText>()?;
    m.add_class::<PyDirectory>()?;
    m.add_function(wrap_pyfunction!(infer_delimiter, m)?)?;
    m.add_function(wrap_pyfunction!(encode_header, m)?)?;
    m.add_function(wrap_pyfunction!(decode_header, m)?)?;
    m.add_function(wrap_pyfunction!(json_dedup_encode, m)?)?;
    m.add_function(wrap_pyfunction!(json_dedup_decode, m)?)?;
    m.add_function(wrap_pyfunction!(parse_target, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(run_transfer, m)?)?;
    m.add_function(wrap_pyfunction!(debug_compare, m)?)?;
    Ok(())
}
