//! Formal conserved quantities of isothermic profile-curve surfaces in the
//! conformal 3-sphere, realised in the light cone of R^{4,1}.

pub mod detect;
pub mod error;
pub mod fcq;
pub mod fields;
pub mod frame;
pub mod json;
pub mod lorentz;
pub mod profiles;
pub mod report;

pub use detect::{detect, Check, DetectionReport, Verdict};
pub use error::{Error, Result};
pub use fcq::{extend, FcqSeries, RSeries};
pub use fields::{GridSpec, ScalarField, VectorField};
pub use frame::{build_frame, FrameBundle, SurfaceKind, SurfaceSpec};
pub use lorentz::{classify_space_form, LorentzVector, SpaceFormClass, SpaceFormTag};
pub use profiles::ProfileSpec;
pub use report::{run, Command, Report, RunConfig, RunOutput};
