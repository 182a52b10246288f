//! Kinetic solver: operator-split semi-Lagrangian advance of the scaled
//! Vlasov–Maxwell–Fokker–Planck system.

pub mod collision;
pub mod interp;
pub mod mollify;
pub mod stepper;
pub mod transport;
pub mod velocity;

pub use collision::{CollisionOp, CollisionTime, CollisionWeights};
pub use mollify::Mollifier;
pub use stepper::{KineticStepper, PicardReport, StepperConfig};
