//! Criterion benchmarks for meshing, assembly, the preconditioned solver and
//! the 1D kernel lattice; see `benches/kernels.rs`.
