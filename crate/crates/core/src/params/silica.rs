//! Fused-silica material constants near room temperature.
//!
//! Constants version: 1. Bump [`SILICA_CONSTANTS_VERSION`] whenever a value
//! changes so saved reports can be traced to the set that produced them.
//!
//! | quantity            | value     | unit       | source                                           |
//! |---------------------|-----------|------------|--------------------------------------------------|
//! | refractive index n  | 1.45      | -          | Malitson, JOSA 55, 1205 (1965), at 850 nm         |
//! | dn/dT               | 1.2e-5    | 1/K        | Leviton & Frey, Proc. SPIE 6273 (2006), ~295 K    |
//! | density rho         | 2200      | kg/m^3     | Corning HPFS 7980 datasheet                       |
//! | specific heat C     | 670       | J/(kg K)   | CGS value 6.7e6 erg/(g K) common in WGM literature |
//! | diffusivity D       | 8.7e-7    | m^2/s      | k / (rho C) with k = 1.28 W/(m K)                 |
//!
//! The set is only used for bath temperatures in [`AMBIENT_RANGE_K`]. Cryogenic
//! silica is strongly temperature dependent and must be supplied by the caller.

use super::Material;

pub const SILICA_CONSTANTS_VERSION: u32 = 1;

/// Temperatures (inclusive, kelvin) served by the built-in ambient set.
pub const AMBIENT_RANGE_K: (f64, f64) = (250.0, 350.0);

pub const REFRACTIVE_INDEX: f64 = 1.45;
pub const THERMO_OPTIC_PER_K: f64 = 1.2e-5;
pub const DENSITY_KG_M3: f64 = 2200.0;
pub const SPECIFIC_HEAT_J_KG_K: f64 = 670.0;
pub const THERMAL_DIFFUSIVITY_M2_S: f64 = 8.7e-7;

pub(crate) const AMBIENT: Material = Material {
    n: REFRACTIVE_INDEX,
    dn_dt: THERMO_OPTIC_PER_K,
    rho: DENSITY_KG_M3,
    heat_capacity: SPECIFIC_HEAT_J_KG_K,
    diffusivity: THERMAL_DIFFUSIVITY_M2_S,
};
