//! Instruments applied to a fitted (or fittable) coupled dataset: rank
//! sweeps, activation spectra, neuron participation heatmaps, latent
//! images and factor/label association, plus their file exports.

mod assoc;
pub mod export;
mod heatmap;
mod latent;
mod spectrum;
mod sweep;

pub use assoc::{factor_digit_association, Association};
pub use heatmap::{neuron_heatmap, Heatmap};
pub use latent::{latent_images, GrayImage};
pub use spectrum::{spectrum, tail_mass, LayerSpectrum, SpectrumReport};
pub use sweep::{rank_sweep, SweepEntry, SweepReport};
