use gaiteval::{bench_csv, bench_inference, quoted_params, BenchOptions};
use gaitmodel::ModelSize;

#[test]
fn small_grid_produces_complete_results() {
    let opts = BenchOptions { batch: 2, runs: 3, ..BenchOptions::default() };
    let results = bench_inference(&[ModelSize::Sm], &[12, 24], &opts).unwrap();
    assert_eq!(results.len(), 2);
    for r in &results {
        assert_eq!(r.size, ModelSize::Sm);
        assert_eq!(r.runs, 3);
        assert_eq!(r.batch, 2);
        assert!(r.mean_seconds > 0.0);
        assert!(r.std_seconds >= 0.0);
        assert!(r.note.is_none());
    }
    assert_eq!(results[0].period_length, 12);
    assert_eq!(results[1].period_length, 24);
    assert_eq!(results[0].param_count, results[1].param_count);

    let csv = bench_csv(&results);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "size,period_length,batch,runs,mean_seconds,std_seconds,param_count,quoted_param_count,delta_pct,note"
    );
    assert_eq!(lines.len(), 3);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "SM");
    assert_eq!(fields[1], "12");
    assert_eq!(
        fields[7].parse::<usize>().unwrap(),
        quoted_params(ModelSize::Sm)
    );
    assert!(fields[8].parse::<f64>().unwrap() < 0.0);
}

#[test]
fn tight_memory_budgets_halve_the_batch() {
    let opts = BenchOptions {
        batch: 8,
        runs: 1,
        memory_budget_bytes: 1,
        ..BenchOptions::default()
    };
    let results = bench_inference(&[ModelSize::Sm], &[12], &opts).unwrap();
    assert_eq!(results[0].batch, 1);
    assert_eq!(results[0].requested_batch, 8);
    let note = results[0].note.as_deref().unwrap();
    assert!(note.contains("batch reduced from 8 to 1"), "note: {note}");
    let csv = bench_csv(&results);
    assert!(csv.contains("memory budget"));
}
