//! Synthetic predictor maps with ground truth, rendered from known
//! parameters.

mod noise;
mod raster;
mod render;
mod script;
mod sequence;

pub use noise::{apply_noise, NoiseSpec};
pub use raster::{hand_triangles, rasterize, rasterize_hands, RasterOutput, NO_TRIANGLE};
pub use render::{
    annotation_points, crop_size, render_maps, splat_heatmap, GtPoint, RenderedFrame,
    GT_POINTS_PER_HAND, HEATMAP_RADIUS, OCCLUSION_SLACK,
};
pub use script::Script;
pub use sequence::{
    camera_config_text, frame_dir, generate_sequence, list_frames, load_gt, read_gt,
    render_sequence, save_gt, write_gt, CAMERA_FILE, GT_FILE, GT_PARAMS_FILE,
};

#[cfg(test)]
mod tests;
