//! The area table of a 2D U(1) run: after adding back the perimeter term the
//! log of the loop is linear in the area with slope `-d`, and `d` matches
//! `-log(I1(beta)/I0(beta))`.

use lattice_gauge::experiment::{self, ExperimentConfig};
use lattice_gauge::oracle::single_plaquette_expectation;
use lattice_gauge::GroupId;

#[test]
fn perimeter_subtracted_loops_fall_on_the_area_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
[model]
group = "U1"
extents = [16, 16]
boundary = "open"

[sampler]
beta = 2.0
seed = 5

[schedule]
thermalization = 200
measurements = 4000

[observables]
loops_r_max = 4
loops_t_max = 4

[output]
dir = "{}"
"#,
        dir.path().display()
    );
    let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
    let out = experiment::run(&cfg, None).unwrap();
    let fit = out.analysis.summary.perimeter_area.clone().expect("perimeter-area fit");
    let (a, d, de) = (
        fit.value("a").unwrap(),
        fit.value("d").unwrap(),
        fit.error("d").unwrap(),
    );

    let exact = -single_plaquette_expectation(GroupId::U1, 2.0).unwrap().ln();
    assert!((d - exact).abs() < 3.0 * de, "d = {d} +- {de}, exact {exact}");

    experiment::report(dir.path()).unwrap();
    let table = std::fs::read_to_string(dir.path().join("area.dat")).unwrap();
    let mut rows = 0;
    for line in table.lines().skip(1) {
        let f: Vec<f64> = line.split('\t').map(|x| x.parse().unwrap()).collect();
        let (area, lw_err, sub) = (f[2], f[5], f[6]);
        if !sub.is_finite() || lw_err > 0.5 {
            continue;
        }
        let line_value = a - d * area;
        assert!(
            (sub - line_value).abs() < 3.0 * lw_err + 1e-3,
            "{line}: expected {line_value}"
        );
        rows += 1;
    }
    assert!(rows >= 10, "only {rows} usable rows");
}
