//! Item packs on disk, batch evaluation against human bands, item-wise
//! accuracy reports, calibration over a pack and synthetic pack generation.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod synthetic;
pub mod table;

pub use dataset::{load_dataset, load_item, Dataset, LabeledSample};
pub use error::HarnessError;
pub use eval::{calibrate_dataset, evaluate, EvalResult, SamplePrediction};
pub use synthetic::{generate_pack, SyntheticConfig};
pub use table::{parse_table_csv, render_table, TableFormat};
