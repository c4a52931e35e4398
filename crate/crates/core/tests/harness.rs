use tbphase::harness::{exit_code, plot_data, reconstruct_run, run_scenario, simulate, Archive, Scenario, EXIT_CONFIG, EXIT_PHYSICS};
use tbphase::Error;

fn spatial() -> Scenario {
    Scenario::from_toml(
        r#"
name = "spatial"
masses = [1.0, 1.3, 0.8]
duration = 8.0
seed = 4

[generator]
kind = "random-spatial"

[returns]
mode = "crossing"
"#,
    )
    .unwrap()
}

#[test]
fn archive_text_round_trip() {
    let scn = spatial();
    let otr = simulate(&scn).unwrap();
    let archive = Archive::from_run(&scn, &otr).unwrap();
    let back = Archive::parse(&archive.to_text().unwrap()).unwrap();
    assert_eq!(back.rows.len(), archive.rows.len());
    for (a, b) in archive.rows.iter().zip(&back.rows) {
        for (x, y) in a.iter().zip(b) {
            assert!(x == y || (x.is_nan() && y.is_nan()));
        }
    }
    assert_eq!(back.scenario.config_hash(), scn.config_hash());

    let one_shot = run_scenario(&scn, false).unwrap();
    let again = reconstruct_run(&back.scenario, &back.trajectory().unwrap()).unwrap();
    assert!((one_shot.phase.residual - again.phase.residual).abs() <= 1e-12);
    assert!((one_shot.phase.delta_theta - again.phase.delta_theta).abs() <= 1e-12);
    assert_eq!(one_shot.window.ta, again.window.ta);
}

#[test]
fn resampled_archive_keeps_the_grid() {
    let mut scn = spatial();
    scn.integrator.output_spacing = 0.25;
    let otr = simulate(&scn).unwrap();
    let archive = Archive::from_run(&scn, &otr).unwrap();
    let t = archive.times();
    assert_eq!(t.len(), 33);
    assert!(t.windows(2).all(|w| (w[1] - w[0] - 0.25).abs() < 1e-12));
}

#[test]
fn plot_phase_columns_accumulate() {
    let scn = spatial();
    let otr = simulate(&scn).unwrap();
    let data = plot_data(&Archive::from_run(&scn, &otr).unwrap()).unwrap();
    let last: Vec<f64> = data.phase.lines().last().unwrap().split_whitespace().map(|x| x.parse().unwrap()).collect();
    assert!(last.iter().all(|x| x.is_finite()));
    assert!((last[4] - last[2] - last[3]).abs() < 1e-12);
    assert!(last[1] > 0.0);
}

#[test]
fn error_classes_map_to_exit_codes() {
    assert_eq!(exit_code(&Scenario::from_toml("masses = 3").unwrap_err()), EXIT_CONFIG);
    assert_eq!(exit_code(&Error::NoReturn), EXIT_PHYSICS);
    assert_eq!(exit_code(&Error::TripleCollision), EXIT_PHYSICS);
}
