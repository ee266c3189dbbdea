//! Whitney extension of jets on closed sets, with the supporting machinery:
//! multi-indices, truncated Taylor arithmetic, a small expression language,
//! Whitney cube decompositions, partitions of unity, Faà di Bruno tables and
//! chart atlases.

pub mod atlas;
pub mod decomp;
pub mod expr;
pub mod extend;
pub mod fdb;
pub mod io;
pub mod jets;
pub mod multiindex;
pub mod pou;
pub mod taylor;
