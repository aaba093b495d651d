use maxperim::bodies::NamedBody;
use maxperim::measures::MeasureSpec;
use maxperim::nazarov::empirical_nazarov_perimeter;
use maxperim::perimeter::{generic_shell_perimeter, ShellOptions};

fn with_threads<R: Send>(n: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let g = MeasureSpec::<f64>::gaussian(8).unwrap();
    let opts = ShellOptions::new(100_000, 42);
    let run = || empirical_nazarov_perimeter(&g, None, 3, &opts).unwrap();
    let one = with_threads(1, run);
    let many = with_threads(5, run);
    assert_eq!(one, many);

    let ball = NamedBody::centered_ball(8, 2.5).unwrap();
    let a = with_threads(1, || generic_shell_perimeter(&ball, &g, &opts).unwrap());
    let b = with_threads(7, || generic_shell_perimeter(&ball, &g, &opts).unwrap());
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
}

#[test]
fn single_precision_tracks_double() {
    let g32 = MeasureSpec::<f32>::gaussian(3).unwrap();
    let g64 = MeasureSpec::<f64>::gaussian(3).unwrap();
    let b32 = NamedBody::<f32>::centered_ball(3, 1.5).unwrap();
    let b64 = NamedBody::<f64>::centered_ball(3, 1.5).unwrap();
    let e32 = generic_shell_perimeter(&b32, &g32, &ShellOptions::new(200_000, 1)).unwrap();
    let e64 = generic_shell_perimeter(&b64, &g64, &ShellOptions::new(200_000, 1)).unwrap();
    assert!(((e32.value as f64) - e64.value).abs() < 3.0 * (e64.stderr + e32.stderr as f64));
}
