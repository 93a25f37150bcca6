//! The `analyze` command: diagnostic suites over a stored track.

use geoflow::flow::{volume_rate_series, DisplacementField, VolumeRate};
use geoflow::oracles::self_shrinker_residual;
use geoflow::singularity::{heat_bound_check, monotonicity_ledger, parabolic_dilate, type1_diagnostic, DensityProbe};
use geoflow::symplectic::{
    alpha_from_min_eta, cubic_form_asymmetry, eta_field, eta_lower_bound, gauss_bonnet_gap, linearity_deviation,
    pinching_check, KahlerFormPair, SymplecticState, TangentTriple,
};
use geoflow::{geometry_fields, SpaceTimeTrack};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::DiagnosticsConfig;
use crate::error::CliResult;
use crate::report::{num, opt, write_json, Table};
use crate::run::resolve_probes;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerReport {
    pub y0: Vec<f64>,
    pub t0: f64,
    pub entries: usize,
    /// Indices `k` with `value[k + 1] > value[k] + slack`.
    pub flags: Vec<usize>,
    pub max_increase: f64,
    pub monotone: bool,
    pub limit: f64,
    pub limit_method: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Type1Report {
    pub t0: f64,
    pub c: f64,
    pub window_start: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShrinkerReport {
    pub lambda: f64,
    /// Rescaled time of the snapshot closest to `s = -1`.
    pub s: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstVariationReport {
    pub samples: usize,
    pub max_defect: f64,
    /// Largest `defect / int |H|^2`.
    pub max_relative_defect: f64,
}

impl FirstVariationReport {
    pub fn from_rates(rates: &[VolumeRate]) -> Option<Self> {
        (!rates.is_empty()).then(|| FirstVariationReport {
            samples: rates.len(),
            max_defect: rates.iter().map(|r| r.defect()).fold(0.0, f64::max),
            max_relative_defect: rates
                .iter()
                .filter(|r| r.energy > 0.0)
                .map(|r| r.defect() / r.energy)
                .fold(0.0, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymplecticReport {
    pub max_abs_eta_prime: f64,
    pub min_eta_initial: f64,
    pub min_eta_final: f64,
    /// Largest per-snapshot decrease of `min eta`.
    pub max_min_eta_drop: f64,
    /// Smallest `min eta - eta_lower_bound(alpha, 0, t)`.
    pub min_eta_margin: Option<f64>,
    pub max_weighted_energy_increase: f64,
    /// Largest violation of `int|H|^2 <= int|H|^2/eta <= int|H|^2 / min eta`.
    pub energy_sandwich_violation: f64,
    /// Largest `|H|^2 - 4/3 |II|^2` over all snapshots, if every snapshot is Lagrangian.
    pub pinching_max: Option<f64>,
    pub pinching_error: Option<String>,
    /// Largest `|int (|II|^2 - |H|^2)| / Area`.
    pub gauss_bonnet_max_ratio: f64,
    pub cubic_asymmetry_max: f64,
    /// Grid average of the final map's Jacobian, for torus-map tracks.
    pub final_affine_part: Option<[[f64; 2]; 2]>,
    pub final_linearity_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub snapshots: usize,
    pub first_time: f64,
    pub last_time: f64,
    pub ledgers: Vec<LedgerReport>,
    pub type1: Option<Type1Report>,
    pub type1_error: Option<String>,
    pub self_shrinker: Vec<ShrinkerReport>,
    pub first_variation: Option<FirstVariationReport>,
    pub heat_excess: Option<f64>,
    pub symplectic: Option<SymplecticReport>,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub table: Table,
}

/// Seeded random tangent triples for the cubic-form symmetry check.
pub fn random_triples(seed: u64, count: usize) -> Vec<TangentTriple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = || [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    (0..count).map(|_| (v(), v(), v())).collect()
}

struct SymplecticRow {
    min_eta: f64,
    max_abs_eta_prime: f64,
    plain: f64,
    weighted: f64,
    pinching: Result<f64, String>,
    gauss_bonnet_ratio: f64,
    cubic: f64,
}

fn symplectic_rows(track: &SpaceTimeTrack, triples: &[TangentTriple]) -> CliResult<Vec<SymplecticRow>> {
    let forms = KahlerFormPair::standard();
    let grid = track.template().grid().clone();
    (0..track.len())
        .into_par_iter()
        .map(|k| {
            let geom = geometry_fields(&track.immersion(k)?)?;
            let eta = eta_field(&geom, &forms.omega_plus)?;
            let eta_prime = eta_field(&geom, &forms.omega_minus)?;
            Ok(SymplecticRow {
                min_eta: eta.iter().copied().fold(f64::INFINITY, f64::min),
                max_abs_eta_prime: eta_prime.iter().map(|v| v.abs()).fold(0.0, f64::max),
                plain: geom.total_mean_curvature(&grid),
                weighted: geom.integrate(&grid, |p, g| g.norm2_h / eta[p]),
                pinching: pinching_check(&geom).map_err(|e| e.to_string()),
                gauss_bonnet_ratio: gauss_bonnet_gap(&geom, &grid).abs() / geom.volume(&grid),
                cubic: cubic_form_asymmetry(&geom, triples)?,
            })
        })
        .collect()
}

fn summarize_symplectic(track: &SpaceTimeTrack, rows: &[SymplecticRow]) -> CliResult<SymplecticReport> {
    let first = &rows[0];
    let last = &rows[rows.len() - 1];
    let alpha = alpha_from_min_eta(first.min_eta).ok();
    let min_eta_margin = alpha.map(|a| {
        rows.iter()
            .enumerate()
            .map(|(k, r)| r.min_eta - eta_lower_bound(a, 0.0, track.time(k) - track.time(0)))
            .fold(f64::INFINITY, f64::min)
    });
    let pairs = || rows.windows(2);
    let mut pinching_max = Some(f64::NEG_INFINITY);
    let mut pinching_error = None;
    for r in rows {
        match &r.pinching {
            Ok(v) => pinching_max = pinching_max.map(|m| m.max(*v)),
            Err(e) => {
                pinching_max = None;
                pinching_error.get_or_insert_with(|| e.clone());
            }
        }
    }
    let sandwich = rows
        .iter()
        .map(|r| (r.plain - r.weighted).max(r.weighted - r.plain / r.min_eta).max(0.0))
        .fold(0.0, f64::max);
    let (final_affine_part, final_linearity_deviation) = if track.template().ambient().is_euclidean() {
        (None, None)
    } else {
        let map = DisplacementField::from_graph(&track.last_immersion()?, [[1.0, 0.0], [0.0, 1.0]])?;
        let (a, dev) = linearity_deviation(&SymplecticState::from_map(map));
        (Some(a), Some(dev))
    };
    Ok(SymplecticReport {
        max_abs_eta_prime: rows.iter().map(|r| r.max_abs_eta_prime).fold(0.0, f64::max),
        min_eta_initial: first.min_eta,
        min_eta_final: last.min_eta,
        max_min_eta_drop: pairs().map(|w| w[0].min_eta - w[1].min_eta).fold(0.0, f64::max),
        min_eta_margin,
        max_weighted_energy_increase: pairs().map(|w| w[1].weighted - w[0].weighted).fold(0.0, f64::max),
        energy_sandwich_violation: sandwich,
        pinching_max,
        pinching_error,
        gauss_bonnet_max_ratio: rows.iter().map(|r| r.gauss_bonnet_ratio).fold(0.0, f64::max),
        cubic_asymmetry_max: rows.iter().map(|r| r.cubic).fold(0.0, f64::max),
        final_affine_part,
        final_linearity_deviation,
    })
}

fn shrinker_residuals(track: &SpaceTimeTrack, probe: &DensityProbe, lambdas: &[f64]) -> CliResult<Vec<ShrinkerReport>> {
    let before = track.before(probe.t0)?;
    lambdas
        .iter()
        .map(|&lambda| {
            let dilated = parabolic_dilate(&before, probe, lambda)?;
            let k = dilated.nearest(-1.0);
            let s = dilated.time(k);
            Ok(ShrinkerReport { lambda, s, residual: self_shrinker_residual(&dilated.immersion(k)?, s)? })
        })
        .collect()
}

pub fn analyze(track: &SpaceTimeTrack, diag: &DiagnosticsConfig, seed: u64) -> CliResult<Analysis> {
    let template = track.template();
    let euclidean = template.ambient().is_euclidean();
    let dim = template.ambient_dim();
    let surface_in_4 = template.n() == 2 && dim == 4;

    let wants_fit = diag.type1 || diag.probes.iter().any(|p| p.t0 == crate::config::ProbeTime::Fitted);
    let (type1, type1_error) = if wants_fit {
        match type1_diagnostic(track) {
            Ok(fit) => (Some(fit), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    let probes = resolve_probes(&diag.probes, type1.as_ref().map(|f| f.t0), dim)?;

    let mut ledgers = Vec::new();
    let mut ledger_values: Vec<Vec<Option<f64>>> = Vec::new();
    for probe in &probes {
        let sub = track.before(probe.t0)?;
        let ledger = monotonicity_ledger(&sub, probe, diag.slack)?;
        let mut column = vec![None; track.len()];
        for (k, v) in ledger.values.iter().enumerate() {
            column[k] = Some(*v);
        }
        ledger_values.push(column);
        ledgers.push(LedgerReport {
            y0: probe.y0.clone(),
            t0: probe.t0,
            entries: ledger.values.len(),
            flags: ledger.flags.clone(),
            max_increase: ledger.max_increase(),
            monotone: ledger.is_monotone(),
            limit: ledger.limit,
            limit_method: ledger.limit_method.to_string(),
            values: ledger.values,
        });
    }

    let shrinker_probe = match (probes.first(), &type1) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(fit)) => Some(DensityProbe::origin(dim, fit.t0)),
        (None, None) => None,
    };
    let self_shrinker = match (&shrinker_probe, euclidean && !diag.dilations.is_empty()) {
        (Some(probe), true) => shrinker_residuals(track, probe, &diag.dilations)?,
        _ => Vec::new(),
    };

    let first_variation = FirstVariationReport::from_rates(&volume_rate_series(track)?);

    let heat_excess = match diag.heat_radius {
        Some(r0) if euclidean => Some(heat_bound_check(track, r0)),
        _ => None,
    };

    let sym_rows = if diag.symplectic && surface_in_4 {
        Some(symplectic_rows(track, &random_triples(seed, diag.cubic_samples))?)
    } else {
        None
    };
    let symplectic = sym_rows.as_deref().map(|rows| summarize_symplectic(track, rows)).transpose()?;

    let mut header: Vec<String> = vec!["t".into(), "sup_ii2".into(), "type1_ratio".into()];
    header.extend((0..probes.len()).map(|k| format!("density_{k}")));
    if sym_rows.is_some() {
        header.extend(["min_eta", "max_abs_eta_prime", "int_h2", "weighted_energy", "gauss_bonnet_ratio"].map(String::from));
    }
    let mut table = Table::new(header);
    let sup_ii: Vec<f64> = match &type1 {
        Some(fit) => fit.sup_ii.iter().map(|s| s.1).collect(),
        None => (0..track.len())
            .into_par_iter()
            .map(|k| Ok(geometry_fields(&track.immersion(k)?)?.sup_norm2_ii()))
            .collect::<CliResult<Vec<f64>>>()?,
    };
    for k in 0..track.len() {
        let mut row = vec![num(track.time(k)), num(sup_ii[k]), opt(type1.as_ref().map(|f| f.series[k].1))];
        for column in &ledger_values {
            row.push(opt(column[k]));
        }
        if let Some(rows) = &sym_rows {
            let r = &rows[k];
            row.extend([r.min_eta, r.max_abs_eta_prime, r.plain, r.weighted, r.gauss_bonnet_ratio].map(num));
        }
        table.push(row);
    }

    let report = AnalysisReport {
        snapshots: track.len(),
        first_time: track.time(0),
        last_time: track.time(track.len() - 1),
        ledgers,
        type1: type1.map(|f| Type1Report { t0: f.t0, c: f.c, window_start: f.window_start }),
        type1_error,
        self_shrinker,
        first_variation,
        heat_excess,
        symplectic,
    };
    Ok(Analysis { report, table })
}

/// Runs [`analyze`] and writes the CSV and JSON outputs that are configured.
pub fn analyze_to_files(
    track: &SpaceTimeTrack,
    diag: &DiagnosticsConfig,
    seed: u64,
    csv: Option<&std::path::Path>,
    report: Option<&std::path::Path>,
) -> CliResult<Analysis> {
    let analysis = analyze(track, diag, seed)?;
    if let Some(path) = csv {
        analysis.table.write(path)?;
    }
    if let Some(path) = report {
        write_json(path, &analysis.report)?;
    }
    Ok(analysis)
}
