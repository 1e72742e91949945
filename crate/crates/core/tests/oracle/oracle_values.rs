// Generated by mass_oracle.py; do not edit.
// (n, flux limit per unit mu0 for q = mu0 e^{-nr}, flux limit per unit M for Schwarzschild-AdS),
// both per unit sphere area.
pub const FLUX_LIMITS: &[(usize, f64, f64)] = &[
    (3, 0.75, 4.0),
    (4, 0.75, 6.0),
    (5, 0.625, 8.0),
    (6, 0.46875, 10.0),
];
