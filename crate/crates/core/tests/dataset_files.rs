//! Synthetic datasets survive a trip through their text files.

use std::fs::File;
use std::io::BufReader;

use cmax::events::{load_calibration, load_events, load_trajectory, CameraIntrinsics};
use cmax::pipelines::{track_rotation, RotationConfig};
use cmax::synth::{gen_planar_scene, gen_rotation_scene, ConstantMotion, EdgeScene, PiecewiseRotation, SynthConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn camera() -> CameraIntrinsics<f64> {
    CameraIntrinsics::new(200.0, 200.0, 119.5, 89.5, 240, 180).unwrap()
}

fn open(dir: &std::path::Path, name: &str) -> BufReader<File> {
    BufReader::new(File::open(dir.join(name)).unwrap())
}

#[test]
fn rotation_dataset_reloads_and_tracks() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let scene = EdgeScene::random_arcs(300, (0.05, 0.2), &mut rng).unwrap();
    let omega = [0.4, 0.9, -1.5];
    let cfg = SynthConfig {
        duration: 0.06,
        seed: 11,
        ..Default::default()
    };
    let data = gen_rotation_scene(&scene, &PiecewiseRotation::constant(omega), &camera(), &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    data.write(dir.path()).unwrap();

    let (events, stats) = load_events::<f64, _>(open(dir.path(), "events.txt"), 240, 180).unwrap();
    assert_eq!(stats.out_of_bounds, 0);
    assert_eq!(events.len(), data.events.len());
    for (a, b) in events.events().iter().zip(data.events.events()) {
        assert!((a.t - b.t).abs() < 1e-9 && (a.x - b.x).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9);
        assert_eq!(a.p, b.p);
    }
    let cam = load_calibration::<f64, _>(open(dir.path(), "calib.txt"), 240, 180).unwrap();
    assert_eq!(cam, camera());

    let series = track_rotation(
        &events,
        &cam,
        &RotationConfig {
            window: events.len() / 2,
            ..Default::default()
        },
    )
    .unwrap();
    let speed = nalgebra::Vector3::from(omega).norm();
    for s in &series.samples {
        let err = (nalgebra::Vector3::from(s.omega) - nalgebra::Vector3::from(omega)).norm();
        assert!(err < 0.03 * speed, "{:?}", s.omega);
    }
    assert!(!series.samples.is_empty());
}

#[test]
fn planar_dataset_writes_its_trajectory() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let scene = EdgeScene::random_segments(20, 240.0, 180.0, 5.0, (10.0, 40.0), &mut rng).unwrap();
    let motion = ConstantMotion {
        omega: [0.0, 0.2, 0.0],
        velocity: [0.3, 0.0, 0.1],
    };
    let cfg = SynthConfig {
        duration: 0.1,
        seed: 12,
        time_step: 1e-3,
        ..Default::default()
    };
    let data = gen_planar_scene(&scene, [0.0, 0.0, -1.0], 1.0, &motion, Some(motion), &camera(), &cfg, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    data.write(dir.path()).unwrap();
    let traj = load_trajectory::<f64, _>(open(dir.path(), "poses.txt")).unwrap();
    let truth = data.trajectory.as_ref().unwrap();
    assert_eq!(traj.poses().len(), truth.poses().len());
    for t in [0.0, 0.033, 0.071, 0.1] {
        let (a, b) = (traj.interpolate(t).unwrap(), truth.interpolate(t).unwrap());
        assert!((a.center() - b.center()).norm() < 1e-8);
        assert!(a.rotation.angle_to(&b.rotation) < 1e-8);
    }
    let gt: serde_json::Value = serde_json::from_reader(open(dir.path(), "gt.json")).unwrap();
    assert_eq!(gt["truth"]["problem"], "planar");
    assert_eq!(gt["n_events"].as_u64().unwrap() as usize, data.events.len());
}
