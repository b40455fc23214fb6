//! Runs Harris, SUSAN and FAST on one clean frame and compares them with the true beacon positions.

use std::time::Instant;

use mvrp::{
    detect, intrinsics_from_fov, kc10_pfps, project_visible_set, render_frame, v_channel, DetectorKind, PoseVector,
    SceneConfig,
};

fn main() {
    let intr = intrinsics_from_fov(60.0, 512, 384, 38.0).unwrap();
    let pose = PoseVector::new(0.0, 62.5, 42.5, 0.0, 0.0, 0.0);
    let scene = SceneConfig { noise_sigma: 0.0, ..Default::default() };
    let gray = v_channel(&render_frame(&pose, &scene, &intr, &kc10_pfps()));
    let truth = project_visible_set(&intr, &pose, &kc10_pfps());

    for kind in DetectorKind::ALL {
        let started = Instant::now();
        let corners = detect(kind, &gray).unwrap();
        let elapsed = started.elapsed();
        println!("{kind}: {} corners in {:.2} ms", corners.len(), elapsed.as_secs_f64() * 1e3);
        for t in &truth {
            let nearest = corners
                .iter()
                .map(|c| (c, c.to_pixel().distance(t)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            println!(
                "  beacon {} at ({:.2}, {:.2}): corner ({}, {}) score {:.4e}, {:.2} px away",
                t.id.unwrap(),
                t.u,
                t.v,
                nearest.0.u,
                nearest.0.v,
                nearest.0.score,
                nearest.1
            );
        }
    }
}
