//! Load an OBJ (or build a bumpy ellipsoid), report validity, volume and
//! geodesic diameter, then simplify it.
//!
//!     cargo run --example mesh_inspect -- [mesh.obj] [target_vertices]

use spectralweight::mesh::{geodesic_diameter, load_obj_file, simplify, validate, volume};
use spectralweight::shapes::{bumpy_ellipsoid, Bump};
use spectralweight::mesh::Point;

fn main() -> spectralweight::Result<()> {
    let mut args = std::env::args().skip(1);
    let mesh = match args.next() {
        Some(path) => load_obj_file(path)?,
        None => bumpy_ellipsoid(
            [70.0, 20.0, 12.0],
            &[Bump {
                direction: Point::new(1.0, 0.3, 0.0).normalize(),
                amplitude: 0.15,
                width: 0.5,
            }],
            4,
        ),
    };
    let target: usize = args.next().map_or(500, |s| s.parse().expect("target must be an integer"));

    let report = validate(&mesh);
    println!("{report:?}");
    let v = volume(&mesh);
    println!("volume {:.3} (watertight: {})", v.value, v.watertight);
    let d = geodesic_diameter(&mesh)?;
    println!("geodesic diameter {:.3} between vertices {:?}", d.length, d.endpoints);

    let out = simplify(&mesh, target)?;
    let s = &out.mesh;
    println!(
        "simplified to {} vertices, {} faces (target reached: {})",
        s.vertex_count(),
        s.face_count(),
        out.reached_target
    );
    println!("volume after {:.3}, diameter after {:.3}", volume(s).value, geodesic_diameter(s)?.length);
    Ok(())
}
