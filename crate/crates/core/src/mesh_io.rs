//! OBJ and binary PLY export. Output depends only on the mesh, so equal
//! meshes give byte-identical files.

use std::io::{self, Write};

use crate::frames::SurfaceMesh;

/// Maps valid grid nodes to consecutive vertex indices (0-based).
fn vertex_indices(mesh: &SurfaceMesh) -> Vec<Option<usize>> {
    let mut next = 0;
    (0..mesh.grid.len())
        .map(|k| {
            mesh.grid.mask[k].then(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

/// Quads over grid cells whose four corners are valid, counter-clockwise
/// in the parameter domain.
fn quads(mesh: &SurfaceMesh, index: &[Option<usize>]) -> Vec<[usize; 4]> {
    let g = &mesh.grid;
    let mut out = Vec::new();
    for j in 0..g.ny() - 1 {
        for i in 0..g.nx() - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)].map(|n| index[g.index(n)]);
            if let [Some(a), Some(b), Some(c), Some(d)] = corners {
                out.push([a, b, c, d]);
            }
        }
    }
    out
}

pub fn write_obj<W: Write>(mesh: &SurfaceMesh, mut w: W) -> io::Result<()> {
    let index = vertex_indices(mesh);
    writeln!(w, "# cmcdeform h={} method={:?}", mesh.meta.h, mesh.meta.method)?;
    for k in mesh.valid_indices() {
        let p = mesh.positions[k];
        writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
    }
    for k in mesh.valid_indices() {
        let n = mesh.normals[k];
        writeln!(w, "vn {} {} {}", n.x, n.y, n.z)?;
    }
    for q in quads(mesh, &index) {
        let [a, b, c, d] = q.map(|v| v + 1);
        writeln!(w, "f {a}//{a} {b}//{b} {c}//{c} {d}//{d}")?;
    }
    w.flush()
}

pub fn obj_string(mesh: &SurfaceMesh) -> String {
    let mut buf = Vec::new();
    write_obj(mesh, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("OBJ output is ASCII")
}

/// Little-endian binary PLY with `f64` positions and normals.
pub fn write_ply<W: Write>(mesh: &SurfaceMesh, mut w: W) -> io::Result<()> {
    let index = vertex_indices(mesh);
    let faces = quads(mesh, &index);
    let nv = mesh.valid_indices().count();
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\nelement vertex {nv}\n\
         property double x\nproperty double y\nproperty double z\n\
         property double nx\nproperty double ny\nproperty double nz\n\
         element face {}\nproperty list uchar uint vertex_indices\nend_header\n",
        faces.len()
    )?;
    for k in mesh.valid_indices() {
        let (p, n) = (mesh.positions[k], mesh.normals[k]);
        for v in [p.x, p.y, p.z, n.x, n.y, n.z] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    for f in faces {
        w.write_all(&[4u8])?;
        for v in f {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
    }
    w.flush()
}
