//! File formats: graph documents, amplitude maps, Matrix Market export.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amplitude::Amplitudes;
use crate::error::{GraphError, OperatorError};
use crate::graph::{EdgeSpec, MagneticGraph};
use crate::operator::SparseOperator;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VertexDoc {
    pub id: String,
    pub mu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub u: String,
    pub v: String,
    pub b: f64,
    /// Phase for the oriented pair (u, v).
    pub theta: f64,
}

/// The on-disk graph description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphDocument {
    pub root: String,
    pub mu_floor: f64,
    pub vertices: Vec<VertexDoc>,
    pub edges: Vec<EdgeDoc>,
}

/// Parse and validate a graph document.
pub fn load_graph(text: &str) -> Result<MagneticGraph, DocumentError> {
    let doc: GraphDocument = serde_json::from_str(text)?;
    let vertices = doc.vertices.into_iter().map(|v| (v.id, v.mu)).collect();
    let edges = doc
        .edges
        .into_iter()
        .map(|e| EdgeSpec {
            u: e.u,
            v: e.v,
            b: e.b,
            theta: e.theta,
        })
        .collect();
    Ok(MagneticGraph::new(
        &doc.root,
        doc.mu_floor,
        vertices,
        edges,
    )?)
}

/// Serialize a graph; vertices and edges keep construction order, so a
/// canonical document round-trips byte for byte.
pub fn save_graph(g: &MagneticGraph) -> String {
    let doc = GraphDocument {
        root: g.id(g.root()).to_owned(),
        mu_floor: g.mu_floor(),
        vertices: (0..g.len())
            .map(|i| VertexDoc {
                id: g.id(i).to_owned(),
                mu: g.mu(i),
            })
            .collect(),
        edges: g
            .edge_list()
            .iter()
            .map(|e| EdgeDoc {
                u: e.u.clone(),
                v: e.v.clone(),
                b: e.b,
                theta: e.theta,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("graph document serializes");
    s.push('\n');
    s
}

/// Amplitudes travel as a JSON map id -> [re, im].
pub fn load_amplitudes(text: &str, g: &MagneticGraph) -> Result<Amplitudes, DocumentError> {
    let doc: BTreeMap<String, [f64; 2]> = serde_json::from_str(text)?;
    let mut out = Amplitudes::new();
    for (id, [re, im]) in doc {
        let idx = g.index_of(&id).ok_or(GraphError::UnknownVertex(id))?;
        out.set(idx, Complex64::new(re, im));
    }
    Ok(out)
}

pub fn save_amplitudes(u: &Amplitudes, g: &MagneticGraph) -> String {
    let doc: BTreeMap<String, [f64; 2]> = u
        .iter()
        .map(|(idx, v)| (g.id(idx).to_owned(), [v.re, v.im]))
        .collect();
    let mut s = serde_json::to_string_pretty(&doc).expect("amplitude map serializes");
    s.push('\n');
    s
}

/// Matrix Market coordinate export, 1-based, complex general.
pub fn to_matrix_market(op: &SparseOperator) -> String {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate complex general\n");
    out.push_str(&format!("{} {} {}\n", op.nrows, op.ncols, op.nnz()));
    for &(r, c, v) in &op.entries {
        out.push_str(&format!(
            "{} {} {:.16e} {:.16e}\n",
            r + 1,
            c + 1,
            v.re,
            v.im
        ));
    }
    out
}

/// Index-to-vertex sidecar for an exported matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixSidecar {
    /// Entries are stated in the orthonormal basis delta_x / sqrt(mu(x)).
    pub basis: String,
    pub hermitian: bool,
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub row_mu: Vec<f64>,
    pub col_mu: Vec<f64>,
}

pub fn matrix_sidecar(op: &SparseOperator) -> MatrixSidecar {
    MatrixSidecar {
        basis: "sqrt_mu_normalized".into(),
        hermitian: op.hermitian,
        row_ids: op.row_ids.clone(),
        col_ids: op.col_ids.clone(),
        row_mu: op.row_mu.clone(),
        col_mu: op.col_mu.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PATH_DOC: &str = r#"{
  "root": "0",
  "mu_floor": 1.0,
  "vertices": [
    {"id": "0", "mu": 1.0},
    {"id": "1", "mu": 1.0},
    {"id": "2", "mu": 2.0}
  ],
  "edges": [
    {"u": "0", "v": "1", "b": 1.0, "theta": 0.0},
    {"u": "1", "v": "2", "b": 0.5, "theta": 0.25}
  ]
}"#;

    #[test]
    fn load_then_save_reaches_a_fixed_point() {
        let g = load_graph(PATH_DOC).unwrap();
        let saved = save_graph(&g);
        let g2 = load_graph(&saved).unwrap();
        assert_eq!(save_graph(&g2), saved);
        assert_eq!(g2.len(), 3);
        assert_eq!(g2.mu(g2.index_of("2").unwrap()), 2.0);
    }

    #[test]
    fn named_validation_errors_surface() {
        let bad = PATH_DOC.replace(
            r#"{"u": "1", "v": "2", "b": 0.5, "theta": 0.25}"#,
            r#"{"u": "1", "v": "2", "b": 0.5, "theta": 0.25},
    {"u": "2", "v": "1", "b": 2.0, "theta": -0.25}"#,
        );
        assert!(matches!(
            load_graph(&bad),
            Err(DocumentError::Graph(GraphError::AsymmetricWeight { .. }))
        ));

        let disconnected = r#"{
  "root": "0", "mu_floor": 1.0,
  "vertices": [{"id": "0", "mu": 1.0}, {"id": "1", "mu": 1.0}],
  "edges": []
}"#;
        assert!(matches!(
            load_graph(disconnected),
            Err(DocumentError::Graph(GraphError::Disconnected(_)))
        ));

        let single = r#"{
  "root": "v", "mu_floor": 0.5,
  "vertices": [{"id": "v", "mu": 0.5}],
  "edges": []
}"#;
        assert!(load_graph(single).is_ok());

        assert!(matches!(
            load_graph("{ not json"),
            Err(DocumentError::Json(_))
        ));
    }

    #[test]
    fn amplitude_map_round_trip() {
        let g = load_graph(PATH_DOC).unwrap();
        let text = r#"{"0": [1.0, -2.0], "2": [0.5, 0.0]}"#;
        let u = load_amplitudes(text, &g).unwrap();
        assert_eq!(u.get(g.index_of("0").unwrap()), Complex64::new(1.0, -2.0));
        let saved = save_amplitudes(&u, &g);
        let u2 = load_amplitudes(&saved, &g).unwrap();
        assert_eq!(u, u2);
        let unknown = r#"{"9": [1.0, 0.0]}"#;
        assert!(load_amplitudes(unknown, &g).is_err());
    }

    #[test]
    fn matrix_market_header_and_shape() {
        use crate::family::{FamilySpec, GraphFamily};
        use crate::operator::{assemble_truncation, Boundary};
        use crate::potential::Potential;

        let f = GraphFamily::build_example(&FamilySpec::HalfLineUnit).unwrap();
        let op = assemble_truncation(&f, &Potential::Zero, 10, Boundary::Dirichlet).unwrap();
        let text = to_matrix_market(&op);
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "%%MatrixMarket matrix coordinate complex general"
        );
        let dims: Vec<usize> = lines
            .next()
            .unwrap()
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(dims[0], 11);
        assert_eq!(dims[1], 11);
        assert_eq!(dims[2], op.nnz());
        assert_eq!(text.lines().count(), 2 + op.nnz());
    }
}
