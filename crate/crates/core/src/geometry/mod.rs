//! Inclusion layouts, region classification and graded triangulations.

mod ellipse;
mod layout;
mod mesh;
mod mesher;

pub use ellipse::{ellipse_gap, Ellipse};
pub use layout::{build_layout, GapPair, Inclusion, InclusionLayout, OuterDomain, ShrunkRegion};
pub use mesh::{dist, signed_area, Mesh, EXTERIOR};
pub use mesher::{build_mesh, build_mesh_with, MeshOptions, Padding};

pub type Point = [f64; 2];

/// Two disks of equal radius on the horizontal midline of the unit square,
/// centred symmetrically and `delta` apart.
pub fn disk_pair(radius: f64, delta: f64) -> crate::error::Result<InclusionLayout> {
    let c = 0.5;
    let off = radius + 0.5 * delta;
    build_layout(
        OuterDomain::unit_square(),
        vec![
            Inclusion::new(Ellipse::circle([c - off, c], radius), 1),
            Inclusion::new(Ellipse::circle([c + off, c], radius), 2),
        ],
        Some(GapPair { first: 0, second: 1, delta }),
    )
}
