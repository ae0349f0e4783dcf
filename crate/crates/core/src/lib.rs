//! Phone-to-TV GUI conversion.
//!
//! The pipeline parses a UI Automator hierarchy dump ([`hierarchy`]), groups
//! its leaves ([`grouping`]), matches groups against phone templates
//! ([`classify`]), maps them to TV group categories ([`transform`]), solves a
//! landscape layout ([`layout`]) and emits the TV GUI DSL ([`dsl`]) together
//! with class wireframes and evaluation metrics ([`wireframe`]).
//! [`pipeline`] strings the stages together for batch use.

pub mod classify;
pub mod config;
pub mod dsl;
pub mod grouping;
pub mod hierarchy;
pub mod layout;
pub mod pipeline;
pub mod transform;
pub mod wireframe;

pub use classify::{ClassifiedGroup, PhoneGroupCategory};
pub use grouping::{ComponentGroup, GroupingConfig, GroupingResult};
pub use hierarchy::{Bounds, DomTree, NodeId, Orientation, ScreenInfo, UiNode, WidgetKind};
pub use layout::{ConstraintSystem, LayoutSolution};
pub use transform::{SizeClass, TvGroupCategory, TvPage};
