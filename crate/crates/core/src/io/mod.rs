//! File formats: edge-list graphs, the binary CSR container and solver
//! traces.

mod csr_file;
mod edgelist;
mod trace;

pub use csr_file::{csr_load, csr_save, write_csr, CSR_MAGIC};
pub use edgelist::{coupling_to_graph, graph_to_instance, parse_edgelist, write_edgelist, Edge, EdgeListGraph};
pub use trace::{
    read_trace, read_trace_csv, read_trace_jsonl, write_trace, write_trace_csv, write_trace_jsonl, TraceFormat,
    TraceRecord, TRACE_COLUMNS,
};

use std::path::Path;

use crate::error::{Error, Result};
use crate::generate::GeneratorSpec;
use crate::model::ProblemInstance;

/// Loads an instance by extension: `.icsr` is the binary CSR container,
/// `.toml` a generator description, anything else an edge-list graph read
/// as MAX-CUT.
pub fn load_instance(path: &Path) -> Result<ProblemInstance> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into());
    match path.extension().and_then(|e| e.to_str()) {
        Some("icsr") => {
            let j = csr_load(std::io::BufReader::new(std::fs::File::open(path)?))?;
            Ok(ProblemInstance::new(name, j))
        }
        Some("toml") => {
            let g: GeneratorSpec =
                toml::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Config(e.to_string()))?;
            Ok(ProblemInstance::new(g.label(), g.generate()?))
        }
        _ => {
            let g = parse_edgelist(&std::fs::read_to_string(path)?)?;
            Ok(graph_to_instance(&name, &g))
        }
    }
}
