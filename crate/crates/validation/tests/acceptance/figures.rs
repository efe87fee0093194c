//! Qualitative shape of the canned figure grids: orderings, convergence,
//! crossovers.

use std::collections::BTreeMap;

use mtcache::analytics::hybrid_superior;
use mtcache::experiments::{sweep_figure, ResultRow};

const TRIALS: usize = 30;

/// Rows grouped by series label, keyed by sweep value.
fn series(id: u32) -> BTreeMap<String, Vec<ResultRow>> {
    let mut out: BTreeMap<String, Vec<ResultRow>> = BTreeMap::new();
    for r in sweep_figure(id, TRIALS, 1).unwrap().rows {
        out.entry(r.sweep_param.clone()).or_default().push(r);
    }
    out
}

fn at(rows: &[ResultRow], v: f64) -> &ResultRow {
    rows.iter()
        .find(|r| (r.sweep_value - v).abs() < 1e-9)
        .unwrap()
}

#[test]
fn fig2_finite_mean_above_limit() {
    for rows in series(2).values() {
        for r in rows {
            assert!(r.mean_delay_norm >= r.analytic_infinite * 0.99, "{r:?}");
        }
    }
}

#[test]
fn fig2_decreasing_in_memory() {
    let s = series(2);
    for l in 1..=6 {
        let means: Vec<f64> = ["l[m=2]", "l[m=4]", "l[m=6]"]
            .iter()
            .map(|k| at(&s[*k], l as f64).mean_delay_norm)
            .collect();
        assert!(means.windows(2).all(|w| w[1] < w[0]), "L={l}: {means:?}");
    }
}

#[test]
fn fig2_decreasing_in_transmitters() {
    let s = series(2);
    for (label, rows) in &s {
        let means: Vec<f64> = rows.iter().map(|r| r.mean_delay_norm).collect();
        assert!(means.windows(2).all(|w| w[1] <= w[0]), "{label}: {means:?}");
    }
}

#[test]
fn fig3_converges_to_large_file_limit() {
    let rows = &series(3)["f"];
    let gaps: Vec<f64> = rows
        .iter()
        .map(|r| (r.mean_delay_norm - r.analytic_infinite).abs())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn fig4_decentralized_beats_half_coordinated_hybrid() {
    let s = series(4);
    let hybrid = &s["m[hybrid-tdma kc=4]"];
    for h in hybrid {
        let d = at(&s["m[decentralized]"], h.sweep_value);
        assert!(d.mean_delay_norm < h.mean_delay_norm, "M={}", h.sweep_value);
        let c = at(&s["m[centralized]"], h.sweep_value);
        assert!(c.mean_delay_norm < d.mean_delay_norm, "M={}", h.sweep_value);
    }
}

#[test]
fn fig5_mostly_coordinated_hybrid_beats_decentralized() {
    let s = series(5);
    let h = at(&s["m[hybrid-tdma kc=6]"], 4.0);
    let d = at(&s["m[decentralized]"], 4.0);
    assert!(
        h.mean_delay_norm < d.mean_delay_norm,
        "hybrid {} vs decentralized {}",
        h.mean_delay_norm,
        d.mean_delay_norm
    );
}

#[test]
fn fig6_crossover_matches_superiority_predicate() {
    let s = series(6);
    let tdma = &s["kc[tdma]"];
    let reference = at(tdma, 0.0).mean_delay_norm;
    for r in tdma.iter().filter(|r| r.sweep_value > 0.0) {
        let kc = r.sweep_value as usize;
        let better = r.mean_delay_norm < reference;
        assert_eq!(
            better,
            hybrid_superior(10, kc),
            "Kc={kc}: hybrid {} vs decentralized {reference}",
            r.mean_delay_norm
        );
    }
}

#[test]
fn fig6_end_points_coincide_across_delivery() {
    let s = series(6);
    for v in [0.0, 10.0] {
        assert_eq!(
            at(&s["kc[tdma]"], v).mean_delay_norm,
            at(&s["kc[joint]"], v).mean_delay_norm
        );
    }
}
