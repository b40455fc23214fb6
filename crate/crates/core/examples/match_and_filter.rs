//! Pairs projected beacons with detected points and removes gross matching errors.

use mvrp::correspondence::eliminate_gross_errors_traced;
use mvrp::{mutual_nearest_match, PixelPoint};

fn main() {
    let projected: Vec<PixelPoint> = [(100.0, 100.0), (200.0, 100.0), (150.0, 180.0), (300.0, 240.0), (60.0, 250.0)]
        .iter()
        .enumerate()
        .map(|(i, &(u, v))| PixelPoint { u, v, id: Some(i as u32 + 1), visible: true })
        .collect();
    // four good detections, one missing beacon, two clutter points; the
    // clutter point at (270, 260) is the only candidate near beacon 4
    let extracted: Vec<PixelPoint> = [(101.0, 99.0), (199.0, 102.0), (151.0, 181.0), (61.0, 248.0), (270.0, 260.0), (400.0, 30.0)]
        .iter()
        .map(|&(u, v)| PixelPoint::extracted(u, v))
        .collect();

    let matches = mutual_nearest_match(&projected, &extracted);
    println!("mutual nearest pairs:");
    for p in &matches.pairs {
        println!("  beacon {} -> ({}, {}), {:.2} px", p.pfp_id, p.extracted.u, p.extracted.v, p.distance);
    }
    let (clean, passes) = eliminate_gross_errors_traced(&matches, 5.0, 50.0);
    println!("after gross-error elimination ({passes} passes): beacons {:?}", clean.ids());
}
