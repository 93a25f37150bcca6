//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line; the
//! process exits nonzero if any criterion fails.

mod tolerances;

use std::f64::consts::{E, TAU};
use std::path::{Path, PathBuf};
use std::time::Instant;

use geoflow::flow::volume_rates;
use geoflow::oracles::{exact_circle_track, self_shrinker_residual};
use geoflow::singularity::{heat_bound_check, parabolic_dilate, type1_diagnostic, DensityProbe};
use geoflow::symplectic::{eta_evolution_residual, gauss_bonnet_gap};
use geoflow::{geometry_fields, FlowMode, SpaceTimeTrack, StencilOrder, StepRecord, StopReason};
use geoflow_cli::config::{DiagnosticsConfig, ProbeSpec, ProbeTime};
use geoflow_cli::trackfile::encode;
use geoflow_cli::{analyze, read_track, rescale, run, ExperimentConfig, RunSummary};

use tolerances::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

struct Timed {
    summary: RunSummary,
    seconds: f64,
}

fn run_text(dir: &Path, name: &str, text: &str) -> Timed {
    let path = dir.join(format!("{name}.cfg"));
    std::fs::write(&path, text).unwrap();
    let cfg = ExperimentConfig::from_file(&path).unwrap();
    let start = Instant::now();
    let summary = run(&cfg).unwrap();
    Timed { summary, seconds: start.elapsed().as_secs_f64() }
}

fn circle_config(ambient_dim: usize) -> String {
    format!(
        "initial = circle\ninitial.radius = 1\ninitial.ambient_dim = {ambient_dim}\ngrid = 256\n\
         solver.cfl = 0.5\nsolver.horizon = 1\nsolver.snapshot_every = 10\n\
         output.track = circle{ambient_dim}.mcft\n"
    )
}

const SYMPLECTIC_CONFIG: &str = "\
mode = map-graph
initial = shears
initial.shears = x 0.1 1; y 0.1 1
grid = 64, 64
grid.order = 4
solver.cfl = 0.5
solver.curvature_scale = 0
solver.energy_floor = 1e-6
solver.snapshot_every = 50
diagnostics.symplectic = true
output.track = symplectic.mcft
";

fn diagnostics(probes: Vec<ProbeSpec>) -> DiagnosticsConfig {
    DiagnosticsConfig {
        probes,
        slack: LEDGER_SLACK,
        type1: true,
        symplectic: false,
        dilations: Vec::new(),
        heat_radius: None,
        cubic_samples: 16,
    }
}

fn max_radius_error(track: &SpaceTimeTrack, until: f64, radius: impl Fn(&[f64]) -> f64, exact: impl Fn(f64) -> f64) -> f64 {
    let dim = track.template().ambient_dim();
    track
        .snapshots()
        .iter()
        .filter(|s| s.time <= until)
        .flat_map(|s| s.positions.chunks(dim).map(|x| (radius(x) - exact(s.time)).abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn circle_check(t: &Timed) -> (bool, String) {
    let track = &t.summary.track;
    let stop_t = t.summary.report.final_time;
    let stop_ok = matches!(t.summary.stop, StopReason::SingularityCeiling) && stop_t < 0.5;
    let stop_rel = (stop_t - 0.5).abs() / 0.5;
    let err = max_radius_error(track, CIRCLE_WINDOW_END, norm, |t| (1.0 - 2.0 * t).sqrt());
    let pass = stop_ok && stop_rel <= CIRCLE_STOP_REL && err <= CIRCLE_RADIUS_ABS && t.seconds <= CIRCLE_RUNTIME_S;
    let detail = format!(
        "stop {} at t={stop_t:.7} (rel {stop_rel:.2e}), radius err {err:.2e}, {:.1} s",
        t.summary.stop.label(),
        t.seconds
    );
    (pass, detail)
}

fn first_variation_worst(history: &[StepRecord]) -> f64 {
    volume_rates(history)
        .iter()
        .map(|r| r.defect() / (FV_REL * r.energy + FV_ABS))
        .fold(0.0, f64::max)
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut report = |id: usize, name: &'static str, v: Verdict| {
        println!("criterion {id:>2} {} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((id, name, v));
    };

    // 1. shrinking circle
    let circle2 = run_text(dir, "circle2", &circle_config(2));
    let (pass, detail) = circle_check(&circle2);
    report(1, "shrinking circle", verdict(pass, detail));

    // 2. higher codimension
    let circle3 = run_text(dir, "circle3", &circle_config(3));
    let circle5 = run_text(dir, "circle5", &circle_config(5));
    let (p3, d3) = circle_check(&circle3);
    let (p5, d5) = circle_check(&circle5);
    report(2, "circle in R^3 and R^5", verdict(p3 && p5, format!("R^3: {d3}; R^5: {d5}")));

    // 3. product torus
    let torus = run_text(
        dir,
        "torus",
        "initial = product-torus\ninitial.radii = 1, 2\ngrid = 64, 64\ngrid.order = 4\n\
         solver.cfl = 0.5\nsolver.horizon = 1\nsolver.snapshot_every = 10\n",
    );
    let err = max_radius_error(&torus.summary.track, 0.4, |x| norm(&x[..2]), |t| (1.0 - 2.0 * t).sqrt()).max(
        max_radius_error(&torus.summary.track, 0.4, |x| norm(&x[2..]), |t| (4.0 - 2.0 * t).sqrt()),
    );
    let fit = type1_diagnostic(&torus.summary.track).unwrap();
    let t0_rel = (fit.t0 - 0.5).abs() / 0.5;
    report(
        3,
        "product torus",
        verdict(
            err <= TORUS_RADIUS_ABS && t0_rel <= TYPE1_T0_REL,
            format!("radius err {err:.2e}, fitted t0 {:.6} (rel {t0_rel:.2e}), {:.1} s", fit.t0, torus.seconds),
        ),
    );

    // 4. grim reaper
    let grim = run_text(
        dir,
        "grim",
        "mode = graph\ninitial = grim-reaper\ngrid = 512\ngrid.interval = -1.2, 1.2\n\
         solver.cfl = 0.5\nsolver.horizon = 0.5\nsolver.snapshot_every = 100\n",
    );
    let err = grim.summary.report.oracle_error.unwrap();
    report(
        4,
        "grim reaper",
        verdict(
            matches!(grim.summary.stop, StopReason::Horizon) && err <= GRIM_REAPER_ABS,
            format!("stop {}, sup error {err:.2e}, {:.1} s", grim.summary.stop.label(), grim.seconds),
        ),
    );

    // 5. monotonicity ledger on the numeric circle
    let origin_fit = || vec![ProbeSpec { y0: vec![0.0, 0.0], t0: ProbeTime::Fitted }];
    let circle_analysis = analyze(&circle2.summary.track, &diagnostics(origin_fit()), 42).unwrap();
    let ledger = &circle_analysis.report.ledgers[0];
    let target = (TAU / E).sqrt();
    let limit_rel = (ledger.limit - target).abs() / target;
    report(
        5,
        "monotonicity ledger",
        verdict(
            ledger.flags.is_empty() && limit_rel <= DENSITY_LIMIT_REL,
            format!(
                "{} entries, {} flags, max increase {:.2e}, limit {:.6} vs {target:.6} (rel {limit_rel:.2e})",
                ledger.entries,
                ledger.flags.len(),
                ledger.max_increase,
                ledger.limit
            ),
        ),
    );

    // 6. dilation invariance through files
    let t0 = circle_analysis.report.type1.as_ref().unwrap().t0;
    let original_path = dir.join("circle2.mcft");
    let fixed = |y0: Vec<f64>, t0: f64| vec![ProbeSpec { y0, t0: ProbeTime::Fixed(t0) }];
    let base = analyze(&read_track(&original_path).unwrap(), &diagnostics(fixed(vec![0.0, 0.0], t0)), 42).unwrap();
    let mut worst: f64 = 0.0;
    let mut lengths_ok = true;
    for lambda in [0.5, 2.0, 10.0] {
        let out: PathBuf = dir.join(format!("dilated-{lambda}.mcft"));
        rescale(&original_path, &out, &[0.0, 0.0], t0, lambda).unwrap();
        let mut diag = diagnostics(fixed(vec![0.0, 0.0], 0.0));
        diag.type1 = false;
        let scaled = analyze(&read_track(&out).unwrap(), &diag, 42).unwrap();
        let (a, b) = (&base.report.ledgers[0].values, &scaled.report.ledgers[0].values);
        lengths_ok &= a.len() == b.len();
        for (x, y) in a.iter().zip(b) {
            worst = worst.max((x - y).abs() / x.abs());
        }
    }
    report(
        6,
        "dilation invariance",
        verdict(lengths_ok && worst <= DILATION_DENSITY_REL, format!("max relative density change {worst:.2e}")),
    );

    // 7. self-shrinker residual
    let exact = exact_circle_track(1.0, 2, 256, 0.05, 0.5 - 1.0 / 1024.0).unwrap().with_order(StencilOrder::Fourth);
    let dilated = parabolic_dilate(&exact, &DensityProbe::origin(2, 0.5), 32.0).unwrap();
    let k = dilated.len() - 1;
    let exact_residual = self_shrinker_residual(&dilated.immersion(k).unwrap(), dilated.time(k)).unwrap();
    let mut diag = diagnostics(origin_fit());
    diag.dilations = vec![32.0];
    let numeric = analyze(&circle2.summary.track, &diag, 42).unwrap();
    let shrink = &numeric.report.self_shrinker[0];
    report(
        7,
        "self-shrinker residual",
        verdict(
            exact_residual <= SHRINKER_EXACT && shrink.residual <= SHRINKER_NUMERIC,
            format!(
                "exact track {exact_residual:.2e} at s={:.6}, numeric track {:.2e} at s={:.6}",
                dilated.time(k),
                shrink.residual,
                shrink.s
            ),
        ),
    );

    // 8. heat bound on the ellipse
    let ellipse = run_text(
        dir,
        "ellipse",
        "initial = ellipse\ninitial.semi_axes = 0.9, 0.5\ngrid = 256\n\
         solver.cfl = 0.5\nsolver.horizon = 1\nsolver.snapshot_every = 10\n",
    );
    let h = TAU / 256.0;
    let excess = heat_bound_check(&ellipse.summary.track, 1.0);
    let sharp = heat_bound_check(&ellipse.summary.track, 0.9);
    let tol = HEAT_BASE + HEAT_C * h * h;
    report(
        8,
        "heat bound",
        verdict(
            excess <= tol,
            format!(
                "max |F|^2 + 2t - 1 = {excess:.3e} (tol {tol:.2e}); against r0 = 0.9: {sharp:.2e}; stop {} at t={:.6}",
                ellipse.summary.stop.label(),
                ellipse.summary.report.final_time
            ),
        ),
    );

    // 9. type-I constant
    let fit = type1_diagnostic(&circle2.summary.track).unwrap();
    let window = &fit.series[fit.window_start..];
    let c_rel = window.iter().map(|s| (s.1 - 0.5).abs() / 0.5).fold(0.0, f64::max);
    report(
        9,
        "type-I constant",
        verdict(
            c_rel <= TYPE1_CONSTANT_REL,
            format!("{} window points, worst relative deviation from 1/2 {c_rel:.2e}", window.len()),
        ),
    );

    // 11 runs before 10 so the first-variation check can cover its track
    let symplectic = run_text(dir, "symplectic", SYMPLECTIC_CONFIG);
    let mut diag = diagnostics(Vec::new());
    diag.type1 = false;
    diag.symplectic = true;
    let sym = analyze(&symplectic.summary.track, &diag, 42).unwrap().report.symplectic.unwrap();

    // 12. evolution-equation residual order
    let mut residuals = Vec::new();
    let mut residual_histories = Vec::new();
    for dims in [32, 64, 128] {
        let text = format!(
            "mode = map-graph\ninitial = shears\ninitial.shears = x 0.1 1; y 0.1 1\ngrid = {dims}, {dims}\n\
             solver.cfl = 0.2\nsolver.curvature_scale = 0\nsolver.horizon = 5e-4\nsolver.snapshot_every = 1\n"
        );
        let t = run_text(dir, &format!("residual{dims}"), &text);
        let r = eta_evolution_residual(&t.summary.track, FlowMode::MapGraph, 0.0).unwrap();
        residuals.push(r.iter().map(|s| s.residual).fold(0.0, f64::max));
        residual_histories.push(t.summary.history.clone());
    }

    // 10. first variation on every closed track
    let closed: Vec<(&str, &[StepRecord])> = vec![
        ("circle R^2", &circle2.summary.history),
        ("circle R^3", &circle3.summary.history),
        ("circle R^5", &circle5.summary.history),
        ("torus", &torus.summary.history),
        ("ellipse", &ellipse.summary.history),
        ("symplectic", &symplectic.summary.history),
        ("residual 32", &residual_histories[0]),
        ("residual 64", &residual_histories[1]),
        ("residual 128", &residual_histories[2]),
    ];
    let worst: Vec<(&str, f64)> = closed.iter().map(|(n, t)| (*n, first_variation_worst(t))).collect();
    let max = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    let detail = worst.iter().map(|(n, w)| format!("{n} {w:.3}")).collect::<Vec<_>>().join(", ");
    report(
        10,
        "first variation",
        verdict(max <= 1.0, format!("defect / (1e-3 int|H|^2 + 1e-8) worst per track: {detail}")),
    );

    // 11. symplectic flow
    let a = sym.final_affine_part.unwrap();
    let affine_dist = ((a[0][0] - 1.0).powi(2) + a[0][1].powi(2) + a[1][0].powi(2) + (a[1][1] - 1.0).powi(2)).sqrt();
    let dev = sym.final_linearity_deviation.unwrap();
    let h = 1.0 / 64.0;
    let pinch_tol = PINCHING_BASE + PINCHING_C * h * h;
    let pinch = sym.pinching_max.unwrap_or(f64::INFINITY);
    let margin = sym.min_eta_margin.unwrap_or(f64::NEG_INFINITY);
    let checks = [
        sym.max_abs_eta_prime <= LAGRANGIAN_ABS,
        sym.max_min_eta_drop <= ETA_DROP && margin >= -ETA_BOUND_SLACK,
        dev <= LINEARITY_DEV && affine_dist <= AFFINE_IDENTITY,
        pinch <= pinch_tol,
        matches!(symplectic.summary.stop, StopReason::EnergyFloor),
        symplectic.seconds <= SYMPLECTIC_RUNTIME_S,
    ];
    report(
        11,
        "symplectic flow",
        verdict(
            checks.iter().all(|c| *c),
            format!(
                "stop {} at t={:.4} in {:.1} s; sup|*w'| {:.2e}; min eta {:.4} -> {:.4}, worst drop {:.2e}, bound margin {margin:.3e}; \
                 linearity dev {dev:.2e}, |A - I| {affine_dist:.2e}; pinching max {pinch:.2e} (tol {pinch_tol:.2e})",
                symplectic.summary.stop.label(),
                symplectic.summary.report.final_time,
                symplectic.seconds,
                sym.max_abs_eta_prime,
                sym.min_eta_initial,
                sym.min_eta_final,
                sym.max_min_eta_drop,
            ),
        ),
    );

    let ratios = [residuals[0] / residuals[1], residuals[1] / residuals[2]];
    report(
        12,
        "evolution-equation residual",
        verdict(
            ratios.iter().all(|r| (RESIDUAL_RATIO.0..=RESIDUAL_RATIO.1).contains(r)),
            format!(
                "residuals {:.3e}, {:.3e}, {:.3e}; ratios {:.2}, {:.2}",
                residuals[0], residuals[1], residuals[2], ratios[0], ratios[1]
            ),
        ),
    );

    // 13. weighted energy
    report(
        13,
        "weighted energy",
        verdict(
            sym.max_weighted_energy_increase <= WEIGHTED_ENERGY_STEP && sym.energy_sandwich_violation <= ENERGY_SANDWICH,
            format!(
                "max increase {:.2e}, sandwich violation {:.2e}",
                sym.max_weighted_energy_increase, sym.energy_sandwich_violation
            ),
        ),
    );

    // 14. Gauss-Bonnet gap on torus-type surfaces
    let torus_gap = torus
        .summary
        .track
        .iter()
        .map(|item| {
            let (_, imm) = item.unwrap();
            let g = geometry_fields(&imm).unwrap();
            gauss_bonnet_gap(&g, imm.grid()).abs() / g.volume(imm.grid())
        })
        .fold(0.0, f64::max);
    report(
        14,
        "Gauss-Bonnet gap",
        verdict(
            torus_gap <= GAUSS_BONNET_REL && sym.gauss_bonnet_max_ratio <= GAUSS_BONNET_REL,
            format!("product torus {torus_gap:.2e}, symplectic graph {:.2e} (relative to area)", sym.gauss_bonnet_max_ratio),
        ),
    );

    // 15. determinism and round trip
    let mut identical = true;
    for (name, text) in [
        ("det-circle", "initial = circle\ngrid = 64\nsolver.horizon = 0.1\ndiagnostics.probes = 0 0 @ 0.5\n"),
        (
            "det-shears",
            "mode = map-graph\ninitial = shears\ninitial.shears = x 0.1 1; y 0.05 2\ngrid = 16, 16\nsolver.horizon = 1e-3\n",
        ),
    ] {
        let outputs = |tag: &str| {
            let sub = dir.join(format!("{name}-{tag}"));
            std::fs::create_dir_all(&sub).unwrap();
            let text = format!("{text}output.track = t.mcft\noutput.csv = t.csv\noutput.report = t.json\n");
            run_text(&sub, name, &text);
            ["t.mcft", "t.csv", "t.json"].map(|f| std::fs::read(sub.join(f)).unwrap())
        };
        identical &= outputs("a") == outputs("b");
    }
    let mut round_trip = true;
    for path in [original_path.clone(), dir.join("symplectic.mcft")] {
        let bytes = std::fs::read(&path).unwrap();
        round_trip &= encode(&read_track(&path).unwrap()) == bytes;
    }
    report(
        15,
        "determinism and round trip",
        verdict(identical && round_trip, format!("identical outputs {identical}, byte-exact round trip {round_trip}")),
    );

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {} of {} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
