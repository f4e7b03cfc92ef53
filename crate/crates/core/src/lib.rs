//! Simulation of a cascaded phase-only SLM beam shaper.
//!
//! A Gaussian beam hits SLM1, passes a Fourier lens, hits SLM2 in the focal
//! plane and is imaged by a second lens onto the target plane. The crate
//! computes both holograms for Hermite–Gauss, Laguerre–Gauss or image-defined
//! targets, predicts the output field with finite-pixel SLM effects, scores it
//! by mode purity (directly or through a simulated off-axis interferogram),
//! and converts purity into the squeezing that survives the shaper.
//!
//! ```
//! use modeshaper::{synthesize, ModeSpec, ShaperConfig};
//!
//! let config = ShaperConfig {
//!     grid_size: 128,
//!     iterations: 10,
//!     ..ShaperConfig::realistic(ModeSpec::hg(0, 0, 5e-3))
//! };
//! let report = synthesize(&config).unwrap();
//! assert!(report.purity > 0.9);
//! ```

mod blur;
pub mod error;
pub mod field;
pub mod metrics;
pub mod modes;
pub mod optics;
pub mod pgm;
pub mod shaper;
pub mod slm;
pub mod squeeze;

pub use error::{Error, Result};
pub use field::{inner_product, normalize, power, ComplexField, GridSpec, RealField};
pub use metrics::{conversion_efficiency, measured_purity, purity, PurityReport};
pub use modes::{generate_mode, ModeFamily, ModeSpec};
pub use optics::{fourier_lens_transform, inverse_fourier_lens, Aperture, FourierLens};
pub use shaper::{simulate, synthesize, InitialPhase, ShaperConfig, SynthesisReport};
pub use slm::{apply_slm, Hologram, SlmSpec};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grids.md")]
    mod grids {}
    #[doc = include_str!("../../../book/src/modes.md")]
    mod modes {}
    #[doc = include_str!("../../../book/src/optics.md")]
    mod optics {}
    #[doc = include_str!("../../../book/src/slm.md")]
    mod slm {}
    #[doc = include_str!("../../../book/src/shaping.md")]
    mod shaping {}
    #[doc = include_str!("../../../book/src/purity.md")]
    mod purity {}
    #[doc = include_str!("../../../book/src/squeezing.md")]
    mod squeezing {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
