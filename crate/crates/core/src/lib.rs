//! Trinion building blocks for moduli of flat SL(n) connections with
//! parabolic structure: the double, alcove data, integrable charts, volume
//! functions, Newton–Okounkov bodies and gluing.

pub mod alcove;
pub mod double;
pub mod glue;
pub mod integrable;
pub mod matgroup;
pub mod okounkov;
pub mod volumes;
