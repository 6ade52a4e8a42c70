use maobo_core::benchmarks::{preset, Benchmark, NoiseSpec, ObjectiveSpec, ProblemSpec};
use maobo_core::bo::{fit_active_models, initial_design, pairwise_distances, probe_grid, run, OptState, RunConfig};
use maobo_core::benchmarks::make_problem;
use maobo_core::report::{read_run, write_run, FRONT_FILE, REDUCTIONS_FILE, SUMMARY_FILE, TRACE_FILE};

fn light(problem: ProblemSpec, t: usize, seed: u64) -> RunConfig {
    let mut c = RunConfig::new(problem, t, seed);
    c.acquisition.candidates = 300;
    c.model.restarts = 3;
    c.model.probe_points_per_dim = 200;
    c
}

#[test]
fn affine_copies_are_close_once_twenty_points_are_seen() {
    let pairs = [
        (Benchmark::Branin, 2.0, 3.0),
        (Benchmark::StyblinskiTang, 0.5, -1.0),
        (Benchmark::Sphere, 7.0, 10.0),
    ];
    for (f, a, b) in pairs {
        let mut problem = ProblemSpec::new(
            vec![
                ObjectiveSpec::plain(f),
                ObjectiveSpec { function: f, scale: a, offset: b },
            ],
            f.default_box(),
        );
        problem.shared_noise = true;
        for seed in 0..5 {
            let mut c = light(problem.clone(), 20, seed);
            c.n_init = 20;
            let p = make_problem(&c.problem).unwrap();
            let (data, sigmas) = initial_design(&c, &p).unwrap();
            let mut state = OptState::new(data, sigmas);
            fit_active_models(&mut state, &c).unwrap();
            let d = pairwise_distances(&state, &probe_grid(&c), &c.similarity).unwrap();
            assert!(d[0].report.total < 0.05, "{f} seed {seed}: {}", d[0].report.total);
        }
    }
}

#[test]
fn removed_objective_saves_the_remaining_budget() {
    let t = 18;
    for seed in 0..2 {
        let mut c = light(preset("branin3").unwrap(), t, seed);
        c.delta_start = 10;
        let on = run(&c).unwrap();
        c.reduction = false;
        let off = run(&c).unwrap();
        assert_eq!(off.evaluations, vec![t; 3]);
        assert_eq!(on.reduction_log.len(), 1, "seed {seed}");
        let e = on.reduction_log[0];
        for j in 0..3 {
            let expected = if j == e.removed { t - (t - e.iteration) } else { t };
            assert_eq!(on.evaluations[j], expected);
            assert_eq!(off.evaluations[j] - on.evaluations[j], if j == e.removed { t - e.iteration } else { 0 });
        }
        let from_trace: usize = on.n_init * 3 + on.trace.iter().map(|r| r.active.len()).sum::<usize>();
        assert_eq!(from_trace, on.evaluations.iter().sum::<usize>());
    }
}

#[test]
fn active_set_only_shrinks_one_at_a_time() {
    let mut c = light(preset("bowl4").unwrap(), 20, 3);
    c.delta_start = 8;
    c.epsilon = 0.5;
    let r = run(&c).unwrap();
    let mut previous = 4;
    for rec in &r.trace {
        assert!(rec.active.len() <= previous && previous - rec.active.len() <= 1);
        assert!(!rec.active.is_empty());
        previous = rec.active.len();
    }
    assert_eq!(r.final_active.len(), previous);
}

#[test]
fn reduction_never_removes_the_last_objective() {
    let f = Benchmark::Sphere;
    let problem = ProblemSpec::new(
        vec![ObjectiveSpec::plain(f), ObjectiveSpec::scaled(f, 2.0), ObjectiveSpec::scaled(f, 3.0)],
        f.default_box(),
    );
    let mut c = light(problem, 12, 0);
    c.delta_start = 6;
    c.epsilon = 1.0;
    let r = run(&c).unwrap();
    assert_eq!(r.final_active.len(), 1);
    assert_eq!(r.reduction_log.len(), 2);
}

#[test]
fn artifacts_round_trip_and_repeat_byte_for_byte() {
    let mut problem = preset("branin3").unwrap();
    problem.noise = NoiseSpec::Relative { fraction: 0.02 };
    let c = light(problem, 12, 9);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run(&c).unwrap();
    write_run(a.path(), &first).unwrap();
    write_run(b.path(), &run(&c).unwrap()).unwrap();
    for name in [TRACE_FILE, FRONT_FILE, REDUCTIONS_FILE, SUMMARY_FILE] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
    assert_eq!(read_run(a.path()).unwrap(), first);
}
