//! Mesh and field serialization.
//!
//! Text format, one record per line, `#` starts a comment:
//!
//! ```text
//! nullmesh 1
//! dim 2
//! vertex <x_1> .. <x_n> weight <w> [radial <r>]
//! edge <a> <b>
//! boundary <v>
//! facet <v_1> .. <v_n>
//! tensor <v> <s_11> <s_12> .. <s_nn>      (row-major, optional)
//! lapse <v> <h>                            (optional)
//! ```
//!
//! Vertices are numbered in order of appearance. Tensors and lapse values,
//! when present, must cover every vertex. Floats are written in Rust's
//! shortest round-trip form, so reading back reproduces every bit.
//!
//! The JSON form carries the same data as [`MeshDocument`].

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Lapse, MeshParts, MetricField, SpatialMesh};
use crate::error::{Error, Result};

/// A mesh with optional per-vertex metric and lapse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDocument {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub edges: Vec<[usize; 2]>,
    pub boundary: Vec<usize>,
    #[serde(default)]
    pub boundary_facets: Vec<Vec<usize>>,
    pub cell_weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial: Option<Vec<f64>>,
    /// Row-major tensors, one `dim * dim` block per vertex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensors: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lapse: Option<Vec<f64>>,
}

impl MeshDocument {
    pub fn new(mesh: &SpatialMesh, metric: Option<&MetricField>, lapse: Option<&Lapse>) -> Self {
        let p = mesh.to_parts();
        let block = p.dim * p.dim;
        MeshDocument {
            dim: p.dim,
            vertices: p.vertices,
            edges: p.edges.iter().map(|&(a, b)| [a, b]).collect(),
            boundary: p.boundary,
            boundary_facets: p.boundary_facets,
            cell_weights: p.cell_weights,
            radial: p.radial,
            tensors: metric.map(|m| m.row_major().chunks(block).map(<[f64]>::to_vec).collect()),
            lapse: lapse.map(|l| l.values().to_vec()),
        }
    }

    pub fn mesh(&self) -> Result<SpatialMesh> {
        SpatialMesh::new(MeshParts {
            dim: self.dim,
            vertices: self.vertices.clone(),
            edges: self.edges.iter().map(|e| (e[0], e[1])).collect(),
            boundary: self.boundary.clone(),
            boundary_facets: self.boundary_facets.clone(),
            cell_weights: self.cell_weights.clone(),
            radial: self.radial.clone(),
        })
    }

    pub fn metric(&self) -> Result<Option<MetricField>> {
        let Some(t) = &self.tensors else {
            return Ok(None);
        };
        if t.len() != self.vertices.len() {
            return Err(Error::InvalidArgument("tensor count does not match vertices".into()));
        }
        let data: Vec<f64> = t.iter().flatten().copied().collect();
        if data.len() != t.len() * self.dim * self.dim {
            return Err(Error::InvalidArgument("tensor blocks have the wrong size".into()));
        }
        MetricField::from_row_major(self.dim, data).map(Some)
    }

    pub fn lapse(&self) -> Result<Option<Lapse>> {
        self.lapse.clone().map(Lapse::new).transpose()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("nullmesh 1\n");
        let _ = writeln!(out, "dim {}", self.dim);
        for (i, v) in self.vertices.iter().enumerate() {
            out.push_str("vertex");
            for x in v {
                let _ = write!(out, " {x:?}");
            }
            let _ = write!(out, " weight {:?}", self.cell_weights[i]);
            if let Some(r) = &self.radial {
                let _ = write!(out, " radial {:?}", r[i]);
            }
            out.push('\n');
        }
        for e in &self.edges {
            let _ = writeln!(out, "edge {} {}", e[0], e[1]);
        }
        for b in &self.boundary {
            let _ = writeln!(out, "boundary {b}");
        }
        for f in &self.boundary_facets {
            out.push_str("facet");
            for v in f {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        if let Some(t) = &self.tensors {
            for (v, block) in t.iter().enumerate() {
                let _ = write!(out, "tensor {v}");
                for x in block {
                    let _ = write!(out, " {x:?}");
                }
                out.push('\n');
            }
        }
        if let Some(l) = &self.lapse {
            for (v, h) in l.iter().enumerate() {
                let _ = writeln!(out, "lapse {v} {h:?}");
            }
        }
        out
    }

    pub fn from_text(s: &str) -> Result<Self> {
        let mut doc = MeshDocument {
            dim: 0,
            vertices: Vec::new(),
            edges: Vec::new(),
            boundary: Vec::new(),
            boundary_facets: Vec::new(),
            cell_weights: Vec::new(),
            radial: None,
            tensors: None,
            lapse: None,
        };
        let mut radial = Vec::new();
        let mut tensors: Vec<(usize, Vec<f64>)> = Vec::new();
        let mut lapse: Vec<(usize, f64)> = Vec::new();
        let mut seen_header = false;
        for (idx, raw) in s.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| Error::Parse { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            let key = toks.next().unwrap_or("");
            let rest: Vec<&str> = toks.collect();
            let float = |t: &str| t.parse::<f64>().map_err(|e| err(format!("bad number `{t}`: {e}")));
            let index = |t: &str| t.parse::<usize>().map_err(|e| err(format!("bad index `{t}`: {e}")));
            if !seen_header {
                if key != "nullmesh" || rest != ["1"] {
                    return Err(err("expected header `nullmesh 1`".into()));
                }
                seen_header = true;
                continue;
            }
            match key {
                "dim" => {
                    doc.dim = index(rest.first().copied().unwrap_or(""))?;
                }
                "vertex" => {
                    if doc.dim == 0 {
                        return Err(err("`dim` must precede vertices".into()));
                    }
                    if rest.len() < doc.dim + 2 || rest[doc.dim] != "weight" {
                        return Err(err("expected coordinates then `weight <w>`".into()));
                    }
                    let coords = rest[..doc.dim].iter().map(|t| float(t)).collect::<Result<Vec<_>>>()?;
                    doc.vertices.push(coords);
                    doc.cell_weights.push(float(rest[doc.dim + 1])?);
                    match &rest[doc.dim + 2..] {
                        [] => {}
                        ["radial", r] => radial.push((doc.vertices.len() - 1, float(r)?)),
                        other => return Err(err(format!("unexpected trailing fields {other:?}"))),
                    }
                }
                "edge" => {
                    if rest.len() != 2 {
                        return Err(err("edge needs two vertices".into()));
                    }
                    doc.edges.push([index(rest[0])?, index(rest[1])?]);
                }
                "boundary" => {
                    for t in &rest {
                        doc.boundary.push(index(t)?);
                    }
                }
                "facet" => {
                    doc.boundary_facets
                        .push(rest.iter().map(|t| index(t)).collect::<Result<Vec<_>>>()?);
                }
                "tensor" => {
                    if rest.len() != 1 + doc.dim * doc.dim {
                        return Err(err(format!("tensor needs {} entries", doc.dim * doc.dim)));
                    }
                    let v = index(rest[0])?;
                    let block = rest[1..].iter().map(|t| float(t)).collect::<Result<Vec<_>>>()?;
                    tensors.push((v, block));
                }
                "lapse" => {
                    if rest.len() != 2 {
                        return Err(err("lapse needs a vertex and a value".into()));
                    }
                    lapse.push((index(rest[0])?, float(rest[1])?));
                }
                other => return Err(err(format!("unknown record `{other}`"))),
            }
        }
        if !seen_header {
            return Err(Error::Parse {
                line: 0,
                message: "empty document".into(),
            });
        }
        let n = doc.vertices.len();
        if !radial.is_empty() {
            if radial.len() != n {
                return Err(Error::Parse {
                    line: 0,
                    message: "radial coordinate given for some vertices only".into(),
                });
            }
            doc.radial = Some(radial.into_iter().map(|(_, r)| r).collect());
        }
        doc.tensors = per_vertex(tensors, n, "tensor")?;
        doc.lapse = per_vertex(lapse, n, "lapse")?;
        Ok(doc)
    }
}

fn per_vertex<T: Clone>(items: Vec<(usize, T)>, n: usize, what: &str) -> Result<Option<Vec<T>>> {
    if items.is_empty() {
        return Ok(None);
    }
    let mut slots: Vec<Option<T>> = vec![None; n];
    for (v, x) in items {
        if v >= n {
            return Err(Error::Parse {
                line: 0,
                message: format!("{what} for unknown vertex {v}"),
            });
        }
        slots[v] = Some(x);
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(v, s)| {
            s.ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("missing {what} for vertex {v}"),
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}
