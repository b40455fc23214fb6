//! Recovers a pose with Levenberg-Marquardt from noiseless correspondences.

use mvrp::{
    intrinsics_from_fov, kc10_pfps, lm_solve, project_visible_set, MatchSet, MatchedPair, PixelPoint, PoseVector,
    SolverConfig,
};

fn main() {
    let intr = intrinsics_from_fov(60.0, 512, 384, 38.0).unwrap();
    let pfps = kc10_pfps();
    let truth = PoseVector::new(1.2, 58.0, 38.0, 2.0, -1.5, 3.0);
    let pairs = project_visible_set(&intr, &truth, &pfps)
        .into_iter()
        .filter(|p| p.visible)
        .map(|p| MatchedPair::new(p.id.unwrap(), p, PixelPoint::extracted(p.u, p.v)))
        .collect();
    let matches = MatchSet::new(pairs);

    let init = PoseVector::new(0.4, 59.0, 37.2, 0.5, 0.0, 1.5);
    let est = lm_solve(&init, &matches, &intr, &pfps, &SolverConfig::default()).unwrap();
    println!("init      {init}");
    println!("estimate  {}", est.pose);
    println!("truth     {truth}");
    println!("error     {}", est.pose.sub(&truth));
    println!("{} iterations, converged={}, rms residual {:.3e} px", est.iterations, est.converged, est.rms_residual);
    for (i, c) in est.cost_history.iter().enumerate() {
        println!("  cost[{i}] = {c:.6e}");
    }
}
