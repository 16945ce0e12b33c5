//! Sequence loading (OTB layout), synthetic sequences and result files.

mod otb;
mod results;
mod synth;

pub use otb::{
    format_groundtruth, load_attribute_sidecar, load_frame, load_sequence, parse_attribute_sidecar, parse_box_line,
    parse_groundtruth, Attribute, SequenceMeta, GROUNDTRUTH_FILE, IMAGE_DIR,
};
pub use results::{format_result, load_result, parse_result, save_result};
pub use synth::{generate_synthetic, render_sequence, write_sequence, Distractor, Motion, SynthSpec};
