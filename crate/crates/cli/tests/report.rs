use dpgc_cli::{BenchReport, ReportRow, COLUMNS};

const GOLDEN_HEADER: &str = "instance,seed,problem,vertices,arcs,mode,n_subgraphs,iter_patience,merge_group_size,\
merge_period,max_iterations,transport,repetitions,t_serial_s,t_mode_s,relative_time,cut_serial,cut_mode,converged,\
iterations,first_n_diff,final_n_diff,merges,relative_reused_flow,modeled_bytes,modeled_time_s";

fn row(mode: &str, relative_time: f64, converged: bool) -> ReportRow {
    ReportRow {
        instance: "x.max".into(),
        seed: None,
        problem: "raw".into(),
        vertices: 4,
        arcs: 3,
        mode: mode.into(),
        n_subgraphs: 2,
        iter_patience: 20,
        merge_group_size: 2,
        merge_period: 10,
        max_iterations: 1000,
        transport: "in_process".into(),
        repetitions: 3,
        t_serial_s: 0.5,
        t_mode_s: 0.5 * relative_time,
        relative_time,
        cut_serial: "7/2".into(),
        cut_mode: "7/2".into(),
        converged,
        iterations: 3,
        first_n_diff: 2,
        final_n_diff: 0,
        merges: 1,
        relative_reused_flow: 0.75,
        modeled_bytes: 0,
        modeled_time_s: 0.0,
    }
}

fn csv_text(report: &BenchReport) -> String {
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn header_is_stable() {
    assert_eq!(COLUMNS.join(","), GOLDEN_HEADER);
    let empty = csv_text(&BenchReport::default());
    assert_eq!(empty.trim_end(), GOLDEN_HEADER);
    let one = csv_text(&BenchReport { rows: vec![row("naive_converged", 1.5, true)] });
    let mut lines = one.lines();
    assert_eq!(lines.next(), Some(GOLDEN_HEADER));
    assert_eq!(
        lines.next(),
        Some("x.max,,raw,4,3,naive_converged,2,20,2,10,1000,in_process,3,0.5,0.75,1.5,7/2,7/2,true,3,2,0,1,0.75,0,0.0")
    );
}

#[test]
fn histogram_skips_empty_bins_and_counts_failures() {
    let report = BenchReport {
        rows: vec![
            row("serial", 1.0, true),
            row("naive_converged", 0.31, true),
            row("naive_converged", 0.35, true),
            row("naive_converged", 0.95, true),
            row("baseline_pbk", 0.2, true),
            row("baseline_pbk", 9.0, false),
        ],
    };
    let mut buf = Vec::new();
    report.write_histogram(&mut buf, 0.1).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data, ["0.200000 0.300000 1 0", "0.300000 0.400000 0 2", "0.900000 1.000000 0 1"]);
    assert!(text.contains("# baseline_pbk: 1 runs did not converge"));
    assert!(text.contains("# bin_lo bin_hi baseline_pbk naive_converged"));
}
