//! Filters, scaling functions and shearlet generators.

pub mod classical;
mod factor;
mod generator;
pub mod interp;
mod lowpass;
pub mod profile;

pub use factor::{lowpass_response, spectral_factorize, spectral_factorize_mode, FilterPair, CHECK_GRID, FACTOR_TOL};
pub use generator::{
    classical_bandlimited_2d, compact_generators, compact_shearlet_2d, compact_shearlets_3d, fit_decay,
    DecayParams, Generator, GeneratorKind, Role,
};
pub use lowpass::{
    binomial_coefficients, check_params, compensated_horner, sine_series, squared_lowpass_magnitude,
    squared_lowpass_magnitude_mode, ParamMode,
};
pub use profile::{scaling_spectrum, CompactProfile, DEFAULT_J_TRUNC};

/// Filter taps as CSV: `# K=.., L=..` header, then `index,h0,h1` rows.
pub fn filters_csv(pair: &FilterPair) -> String {
    let mut s = format!(
        "# K={} L={} taps={} dc_gain={:.16e} residual={:.16e}\nindex,h0,h1\n",
        pair.k,
        pair.l,
        pair.h0.len(),
        pair.h0.iter().sum::<f64>(),
        pair.residual
    );
    for (i, (a, b)) in pair.h0.iter().zip(&pair.h1).enumerate() {
        s.push_str(&format!("{i},{a:.16e},{b:.16e}\n"));
    }
    s
}
