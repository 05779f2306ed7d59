//! JSON mesh files: `{"vertices": [[x, y], ...], "elements": [[i0, i1, ...], ...]}`
//! with 0-based vertex indices. All other connectivity is derived on load.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{signed_area, Point, PolyMesh};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    pub vertices: Vec<Point>,
    pub elements: Vec<Vec<usize>>,
}

impl From<&PolyMesh> for MeshFile {
    fn from(mesh: &PolyMesh) -> Self {
        MeshFile {
            vertices: mesh.vertices().to_vec(),
            elements: mesh.elements().to_vec(),
        }
    }
}

/// Parses a mesh. Clockwise elements are reoriented; each reorientation is
/// reported in the returned warning list.
pub fn mesh_from_json(text: &str) -> Result<(PolyMesh, Vec<String>)> {
    let file: MeshFile = serde_json::from_str(text).map_err(|e| {
        Error::MalformedMesh(format!("line {}, column {}: {e}", e.line(), e.column()))
    })?;
    let nv = file.vertices.len();
    for (i, v) in file.vertices.iter().enumerate() {
        if !v[0].is_finite() || !v[1].is_finite() {
            return Err(Error::MalformedMesh(format!("vertex {i} is not finite")));
        }
    }
    let mut warnings = Vec::new();
    let mut elements = file.elements;
    for (e, cycle) in elements.iter_mut().enumerate() {
        if let Some(&bad) = cycle.iter().find(|&&v| v >= nv) {
            return Err(Error::Connectivity(format!(
                "element {e} references vertex {bad}, but the file has {nv} vertices"
            )));
        }
        if cycle.len() < 3 {
            continue;
        }
        let poly: Vec<Point> = cycle.iter().map(|&v| file.vertices[v]).collect();
        if signed_area(&poly) < 0.0 {
            cycle.reverse();
            warnings.push(format!("element {e} was clockwise and has been reoriented"));
        }
    }
    let mesh = PolyMesh::new(file.vertices, elements)?;
    Ok((mesh, warnings))
}

pub fn mesh_to_json(mesh: &PolyMesh) -> String {
    // serde_json prints the shortest representation that round-trips, so the
    // text is exact.
    serde_json::to_string(&MeshFile::from(mesh)).expect("mesh serializes")
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<(PolyMesh, Vec<String>)> {
    mesh_from_json(&fs::read_to_string(path)?)
}

pub fn save_mesh(mesh: &PolyMesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, mesh_to_json(mesh))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_polygon_grid, gen_square_grid};

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        for mesh in [gen_square_grid(2).unwrap(), gen_polygon_grid(3).unwrap()] {
            let path = dir.path().join("m.json");
            save_mesh(&mesh, &path).unwrap();
            let (back, warnings) = load_mesh(&path).unwrap();
            assert!(warnings.is_empty());
            assert_eq!(back.vertices(), mesh.vertices());
            assert_eq!(back.elements(), mesh.elements());
        }
    }

    #[test]
    fn missing_vertex_is_a_connectivity_error() {
        let text = r#"{"vertices": [[0,0],[1,0],[0,1]], "elements": [[0,1,3]]}"#;
        assert!(matches!(mesh_from_json(text), Err(Error::Connectivity(_))));
    }

    #[test]
    fn malformed_file_reports_position() {
        let text = "{\"vertices\": [[0,0],[1,0]],\n \"elements\": [[0,1,]]}";
        match mesh_from_json(text) {
            Err(Error::MalformedMesh(msg)) => assert!(msg.contains("line 2"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        let text = r#"{"vertices": [[0,0]], "elements": [], "extra": 1}"#;
        assert!(matches!(mesh_from_json(text), Err(Error::MalformedMesh(_))));
    }

    #[test]
    fn clockwise_element_is_reoriented() {
        let text = r#"{"vertices": [[0,0],[1,0],[1,1],[0,1]], "elements": [[0,3,2,1]]}"#;
        let (mesh, warnings) = mesh_from_json(text).unwrap();
        assert_eq!(warnings.len(), 1);
        let poly = mesh.element_polygon(0);
        assert!(signed_area(&poly) > 0.0);
        assert!((mesh.area(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_area_element_is_rejected() {
        let text = r#"{"vertices": [[0,0],[1,0],[2,0]], "elements": [[0,1,2]]}"#;
        assert!(matches!(mesh_from_json(text), Err(Error::ZeroArea { .. })));
    }

    #[test]
    fn non_manifold_edge_is_rejected() {
        let text = r#"{"vertices": [[0,0],[1,0],[0.5,1],[0.5,-1],[0.5,0.5]],
                       "elements": [[0,1,2],[1,0,3],[0,1,4]]}"#;
        assert!(matches!(mesh_from_json(text), Err(Error::Connectivity(_))));
    }
}
