//! Renders one frame with hidden beacons and distractor squares.
//!
//! `cargo run --example render_scene [out.ppm]`

use mvrp::scenegen::render_frame_detailed;
use mvrp::{intrinsics_from_fov, kc10_pfps, write_image, AnyImage, PoseVector, SceneConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("scene.ppm"));
    let intr = intrinsics_from_fov(60.0, 512, 384, 38.0)?;
    let scene = SceneConfig { distractor_count: 3, hidden_ids: vec![6, 7], rng_seed: 11, ..Default::default() };
    let frame = render_frame_detailed(&PoseVector::new(0.0, 55.0, 35.0, 0.0, 1.0, 0.0), &scene, &intr, &kc10_pfps());
    for b in &frame.beacons {
        println!("beacon {} drawn at ({:.0}, {:.0})", b.id.unwrap(), b.u.round(), b.v.round());
    }
    for (x, y) in &frame.distractors {
        println!("distractor square at ({x}, {y})");
    }
    write_image(&AnyImage::Rgb(frame.image), &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
