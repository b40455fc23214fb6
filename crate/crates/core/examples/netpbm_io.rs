//! Writes a rendered frame as PPM, reads it back and saves its value channel as PGM.
//!
//! `cargo run --example netpbm_io [out_dir]`

use mvrp::{intrinsics_from_fov, kc10_pfps, read_image, render_frame, v_channel, write_image, AnyImage, PoseVector, SceneConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(Into::into).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&dir)?;
    let intr = intrinsics_from_fov(60.0, 512, 384, 38.0)?;
    let frame = render_frame(&PoseVector::new(0.0, 60.0, 40.0, 0.0, 0.0, 0.0), &SceneConfig::default(), &intr, &kc10_pfps());

    let ppm = dir.join("beacons.ppm");
    write_image(&AnyImage::Rgb(frame.clone()), &ppm)?;
    let AnyImage::Rgb(back) = read_image(&ppm)? else { unreachable!("a PPM decodes to RGB") };
    assert_eq!(back, frame);

    let pgm = dir.join("beacons_v.pgm");
    write_image(&AnyImage::Gray(v_channel(&back)), &pgm)?;
    println!("wrote {} and {}", ppm.display(), pgm.display());
    Ok(())
}
