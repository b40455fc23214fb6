//! Projects the seven tanker beacons at the start and end of the default approach.

use mvrp::{gen_trajectory, intrinsics_from_fov, kc10_pfps, project_visible_set, TrajectoryConfig};

fn main() {
    let intr = intrinsics_from_fov(60.0, 512, 384, 38.0).expect("valid camera");
    println!("fx = fy = {:.4}, principal point ({}, {})", intr.fx, intr.u0, intr.v0);
    let poses = gen_trajectory(&TrajectoryConfig::default());
    for pose in [poses[0], poses[poses.len() - 1]] {
        println!("pose {pose}");
        for p in project_visible_set(&intr, &pose, &kc10_pfps()) {
            println!("  beacon {}: ({:8.3}, {:8.3}) visible={}", p.id.unwrap(), p.u, p.v, p.visible);
        }
    }
}
