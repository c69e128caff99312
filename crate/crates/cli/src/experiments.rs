//! The five experiment runners and the anchor computations behind `--check`.

use std::collections::BTreeMap;

use spin_triangle::dicke::{default_time_grid, magnetization_traces, DickeIndex};
use spin_triangle::entanglement::{negativity_sweep, pair_negativity, thermal_state, threshold_temperature, Measure};
use spin_triangle::sectors::sector_analysis;
use spin_triangle::sensing::{default_tau, sensing_scan, ProtocolConfig, SensingScan, DEFAULT_DELTA_B};
use spin_triangle::spin::level_crossing_fields;
use spin_triangle::thermo::{
    detect_plateaus, eigenstate_sz, ground_state_staircase, magnetization_curve, MagnetizationCurve,
    DEFAULT_PLATEAU_MIN_WIDTH,
};
use spin_triangle::{build_hamiltonian_z, diagonalize, Error, Execution, ModelParameters};

use crate::config::{
    DynamicsConfig, Experiment, MagnetizationConfig, NegativityConfig, RunConfig, SensingConfig, SpectrumConfig,
};
use crate::error::CliError;
use crate::output::{Artifacts, Cell, GnuplotData, Table};

/// Bipartite threshold bracket used for the reference anchors.
const ANCHOR_BIPARTITE_BRACKET: (f64, f64) = (1.0, 200.0);
const ANCHOR_TRIPARTITE_BRACKET: (f64, f64) = (1.0, 300.0);
/// Anchor grid and slope for counting the 1.8 K plateaus below 60 T.
const ANCHOR_PLATEAU_POINTS: usize = 601;
const ANCHOR_PLATEAU_SLOPE: f64 = 5e-3;

/// `1` for 1.0, `2.5` for 2.5; used in file names.
fn label(x: f64) -> String {
    format!("{x}")
}

fn configs(dicke_k: &[u32], b_x: &[f64]) -> Result<Vec<(DickeIndex, f64)>, CliError> {
    let mut out = Vec::with_capacity(dicke_k.len() * b_x.len());
    for &b in b_x {
        for &k in dicke_k {
            out.push((DickeIndex::new(k)?, b));
        }
    }
    Ok(out)
}

pub fn run(experiment: Experiment, c: &RunConfig) -> Result<Artifacts, CliError> {
    let model = &c.model;
    let exec = c.execution;
    match experiment {
        Experiment::Spectrum => spectrum(c.spectrum.as_ref().ok_or_else(missing(experiment))?, model),
        Experiment::Magnetization => {
            magnetization(c.magnetization.as_ref().ok_or_else(missing(experiment))?, model, exec)
        }
        Experiment::Negativity => negativity(c.negativity.as_ref().ok_or_else(missing(experiment))?, model, exec),
        Experiment::Dynamics => dynamics(c.dynamics.as_ref().ok_or_else(missing(experiment))?, model, exec),
        Experiment::Sensing => sensing(c.sensing.as_ref().ok_or_else(missing(experiment))?, model, exec),
    }
}

fn missing(e: Experiment) -> impl FnOnce() -> CliError {
    move || CliError::Config(format!("config has no [{e}] table"))
}

pub fn spectrum(c: &SpectrumConfig, model: &ModelParameters) -> Result<Artifacts, CliError> {
    let p = model.with_b_z(c.b_z);
    let h = build_hamiltonian_z(&p)?;
    let d = diagonalize(&h)?;
    let sz = eigenstate_sz(&d);
    let j = model.j_kelvin();

    let mut eig = Table::new(&["index", "eigenvalue_kelvin", "eigenvalue_over_j", "sz_total"]);
    for (i, (&e, &m)) in d.eigenvalues().iter().zip(&sz).enumerate() {
        eig.push(vec![i.into(), e.into(), (e / j).into(), m.into()]);
    }

    // sectors are a zero-field notion
    let d0 = if c.b_z == 0.0 { d.clone() } else { diagonalize(&build_hamiltonian_z(&model.with_b_z(0.0))?)? };
    let report = sector_analysis(&d0, &model.with_b_z(0.0), c.sector_tol)?;
    let mut sectors =
        Table::new(&["s_total", "kambe_energy_kelvin", "kambe_energy_over_j", "state_count", "multiplicity"]);
    for s in &report.sectors {
        sectors.push(vec![
            s.s_total.to_string().into(),
            s.kambe_energy.into(),
            (s.kambe_energy / j).into(),
            s.state_count.into(),
            s.multiplicity.into(),
        ]);
    }

    let mut a = Artifacts::default();
    a.table("spectrum_eigenvalues.csv", eig);
    a.table("spectrum_sectors.csv", sectors);
    if c.dump_matrix {
        let m = h.matrix();
        let mut t = Table::new(&["row", "col", "re", "im"]);
        for col in 0..m.ncols() {
            for row in 0..m.nrows() {
                let z = m[(row, col)];
                if z.norm() > 0.0 {
                    t.push(vec![row.into(), col.into(), z.re.into(), z.im.into()]);
                }
            }
        }
        a.table("hamiltonian_matrix.csv", t);
    }
    Ok(a)
}

pub fn magnetization(c: &MagnetizationConfig, model: &ModelParameters, exec: Execution) -> Result<Artifacts, CliError> {
    let grid = c.b_grid.values();
    let mut curves: Vec<MagnetizationCurve> = Vec::new();
    if c.zero_temperature {
        curves.push(ground_state_staircase(model, &grid)?);
    }
    for &t in &c.temperatures {
        curves.push(magnetization_curve(model, t, &grid, exec)?);
    }

    let mut table = Table::new(&["b_tesla", "t_kelvin", "m_sz", "m_normalized"]);
    let mut plateaus = Table::new(&["t_kelvin", "b_start", "b_end", "m_normalized", "fraction_numerator"]);
    let mut gp = GnuplotData::default();
    for curve in &curves {
        let mut block = Table::new(&["b_tesla", "m_sz", "m_normalized"]);
        for pt in &curve.points {
            table.push(vec![pt.b_z.into(), curve.temperature.into(), pt.m_z.into(), pt.m_normalized.into()]);
            block.push(vec![pt.b_z.into(), pt.m_z.into(), pt.m_normalized.into()]);
        }
        gp.push(format!("T = {} K", curve.temperature), block);
        for p in detect_plateaus(curve, c.plateau_slope, c.plateau_min_width) {
            plateaus.push(vec![
                curve.temperature.into(),
                p.b_start.into(),
                p.b_end.into(),
                p.m_normalized.into(),
                p.nearest_fraction().into(),
            ]);
        }
    }

    let mut crossings = Table::new(&["s_total_below", "field_tesla"]);
    for (i, b) in level_crossing_fields(model).into_iter().enumerate() {
        crossings.push(vec![format!("{}/2", 2 * i + 1).into(), b.into()]);
    }

    let mut a = Artifacts::default();
    a.table("magnetization.csv", table);
    a.table("magnetization_plateaus.csv", plateaus);
    a.table("magnetization_crossings.csv", crossings);
    a.gnuplot.push(("magnetization.dat".into(), gp));
    Ok(a)
}

pub fn negativity(c: &NegativityConfig, model: &ModelParameters, exec: Execution) -> Result<Artifacts, CliError> {
    let b_grid = c.b_grid.values();
    let t_grid = c.t_grid.values();
    let points = negativity_sweep(model, &b_grid, &t_grid, exec)?;

    let mut table = Table::new(&["b_tesla", "t_kelvin", "n_bip", "n_trip"]);
    let mut gp = GnuplotData::default();
    for (row, &b) in points.chunks(t_grid.len()).zip(&b_grid) {
        let mut block = Table::new(&["t_kelvin", "n_bip", "n_trip"]);
        for pt in row {
            table.push(vec![pt.b_tesla.into(), pt.t_kelvin.into(), pt.n_bip.into(), pt.n_trip.into()]);
            block.push(vec![pt.t_kelvin.into(), pt.n_bip.into(), pt.n_trip.into()]);
        }
        gp.push(format!("B = {b} T"), block);
    }

    let [lo, hi] = c.threshold_bracket;
    let jobs: Vec<(f64, Measure)> =
        c.threshold_fields.iter().flat_map(|&b| [(b, Measure::Bipartite), (b, Measure::Tripartite)]).collect();
    let found = exec.map(&jobs, |&(b, m)| threshold_temperature(&model.with_b_z(b), m, (lo, hi)));
    let mut thresholds = Table::new(&["b_tesla", "measure", "threshold_kelvin", "status"]);
    for (&(b, m), r) in jobs.iter().zip(found) {
        let measure = match m {
            Measure::Bipartite => "bipartite",
            Measure::Tripartite => "tripartite",
        };
        let (t, status) = match r {
            Ok(t) => (t, "found"),
            // no sign change inside the bracket is a result, not a failure
            Err(Error::BracketDoesNotStraddle { .. }) => (f64::NAN, "not-bracketed"),
            Err(e) => return Err(e.into()),
        };
        thresholds.push(vec![b.into(), measure.into(), Cell::Float(t), status.into()]);
    }

    let mut a = Artifacts::default();
    a.table("negativity.csv", table);
    a.table("negativity_thresholds.csv", thresholds);
    a.gnuplot.push(("negativity.dat".into(), gp));
    Ok(a)
}

pub fn dynamics(c: &DynamicsConfig, model: &ModelParameters, exec: Execution) -> Result<Artifacts, CliError> {
    let p = model.with_b_z(0.0);
    let grid = match &c.theta_grid {
        Some(g) => g.values(),
        None => default_time_grid(&p),
    };
    let records = magnetization_traces(&configs(&c.dicke_k, &c.b_x)?, &p, &grid, exec)?;

    let mut a = Artifacts::default();
    let mut summary = Table::new(&["dicke_k", "b_x", "pearson_sz1_sz3", "sz1_min", "sz1_max", "sz3_min", "sz3_max"]);
    let mut gp = GnuplotData::default();
    let header: &[&str] =
        if c.include_sz2 { &["theta", "t_ps", "sz1", "sz2", "sz3"] } else { &["theta", "t_ps", "sz1", "sz3"] };
    for rec in &records {
        let mut t = Table::new(header);
        for i in 0..rec.len() {
            let mut row: Vec<Cell> = vec![rec.theta[i].into(), rec.t_ps[i].into(), rec.sz1[i].into()];
            if c.include_sz2 {
                row.push(rec.sz2[i].into());
            }
            row.push(rec.sz3[i].into());
            t.push(row);
        }
        gp.push(format!("k = {}, B_x = {} T", rec.dicke_k, rec.b_x), t.clone());
        a.table(format!("dynamics_k{}_bx{}.csv", rec.dicke_k, label(rec.b_x)), t);
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        summary.push(vec![
            rec.dicke_k.into(),
            rec.b_x.into(),
            rec.sensor_readout_correlation().into(),
            min(&rec.sz1).into(),
            max(&rec.sz1).into(),
            min(&rec.sz3).into(),
            max(&rec.sz3).into(),
        ]);
    }
    a.table("dynamics_summary.csv", summary);
    a.gnuplot.push(("dynamics.dat".into(), gp));
    Ok(a)
}

fn protocols(c: &SensingConfig, model: &ModelParameters) -> Result<Vec<ProtocolConfig>, CliError> {
    let tau_list = match (&c.tau_list, c.tau) {
        (Some(list), _) => list.clone(),
        (None, Some(tau)) => vec![tau; c.n_seq],
        (None, None) => vec![default_tau(model)?; c.n_seq],
    };
    let p = model.with_b_z(0.0);
    configs(&c.dicke_k, &c.b_x)?
        .into_iter()
        .map(|(k, b)| {
            let mut pc = ProtocolConfig::uniform(p.with_b_x(b), k, c.n_seq, tau_list[0]);
            pc.tau_list = tau_list.clone();
            pc.prune_threshold = c.prune_threshold;
            pc.leaf_budget = c.leaf_budget;
            pc.validate()?;
            Ok(pc)
        })
        .collect()
}

fn scans(pcs: &[ProtocolConfig], delta_b: f64, exec: Execution) -> Result<Vec<SensingScan>, CliError> {
    // parallelism lives inside each tree expansion
    pcs.iter().map(|pc| sensing_scan(pc, delta_b, exec).map_err(CliError::from)).collect()
}

pub fn sensing(c: &SensingConfig, model: &ModelParameters, exec: Execution) -> Result<Artifacts, CliError> {
    let pcs = protocols(c, model)?;
    let results = scans(&pcs, c.delta_b, exec)?;

    let mut a = Artifacts::default();
    let mut summary = Table::new(&[
        "dicke_k",
        "b_x",
        "alpha",
        "beta",
        "residual",
        "inverse_strictly_decreasing",
        "max_pruning_remainder",
    ]);
    let mut gp = GnuplotData::default();
    for s in &results {
        let mut t =
            Table::new(&["n_seq", "f_value", "inverse_f", "fit_inverse_f", "excluded_mass", "pruning_remainder"]);
        for e in &s.estimates {
            t.push(vec![
                e.n_seq.into(),
                e.f_value.into(),
                e.inverse.into(),
                s.fit.predict(e.n_seq as f64).into(),
                e.excluded_mass.into(),
                e.pruning_remainder.into(),
            ]);
        }
        gp.push(format!("k = {}, B_x = {} T", s.dicke_k, s.b_x), t.clone());
        a.table(format!("sensing_k{}_bx{}.csv", s.dicke_k, label(s.b_x)), t);
        let remainder = s.estimates.iter().map(|e| e.pruning_remainder).fold(0.0, f64::max);
        summary.push(vec![
            s.dicke_k.into(),
            s.b_x.into(),
            s.fit.alpha.into(),
            s.fit.beta.into(),
            s.fit.residual.into(),
            s.inverse_strictly_decreasing().to_string().into(),
            remainder.into(),
        ]);
    }
    a.table("sensing_summary.csv", summary);
    a.gnuplot.push(("sensing.dat".into(), gp));
    let protocol = serde_json::json!({ "delta_b": c.delta_b, "protocols": pcs });
    a.json.push(("sensing_protocol.json".into(), protocol));
    Ok(a)
}

/// Quantities compared against the bundled reference values. These are
/// computed at fixed anchor conditions with the run's model parameters,
/// independent of the grids in the experiment table.
pub fn reference_results(
    experiment: Experiment,
    model: &ModelParameters,
    exec: Execution,
) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    match experiment {
        Experiment::Spectrum => {
            let d = diagonalize(&build_hamiltonian_z(&model.with_b_z(0.0))?)?;
            let j = model.j_kelvin();
            let e = d.eigenvalues();
            out.insert("ground_energy_over_j".into(), e[0] / j);
            out.insert("highest_energy_over_j".into(), e[e.len() - 1] / j);
            out.insert("state_count".into(), e.len() as f64);
        }
        Experiment::Magnetization => {
            let crossings = level_crossing_fields(model);
            out.insert("first_crossing_tesla".into(), crossings[0]);
            out.insert("saturation_field_tesla".into(), crossings[crossings.len() - 1]);
            let grid = spin_triangle::dicke::linspace(0.0, 60.0, ANCHOR_PLATEAU_POINTS);
            let curve = magnetization_curve(model, 1.8, &grid, exec)?;
            let n = detect_plateaus(&curve, ANCHOR_PLATEAU_SLOPE, DEFAULT_PLATEAU_MIN_WIDTH).len();
            out.insert("plateaus_below_60t_at_1_8k".into(), n as f64);
        }
        Experiment::Negativity => {
            for (name, b) in [("n_bip_0t_1k", 0.0), ("n_bip_10t_1k", 10.0)] {
                let d = diagonalize(&build_hamiltonian_z(&model.with_b_z(b))?)?;
                out.insert(name.into(), pair_negativity(&thermal_state(&d, 1.0)?, 1, 2)?.value);
            }
            let jobs = [
                ("t_bip_0t", 0.0, Measure::Bipartite, ANCHOR_BIPARTITE_BRACKET),
                ("t_bip_10t", 10.0, Measure::Bipartite, ANCHOR_BIPARTITE_BRACKET),
                ("t_bip_30t", 30.0, Measure::Bipartite, ANCHOR_BIPARTITE_BRACKET),
                ("t_trip_10t", 10.0, Measure::Tripartite, ANCHOR_TRIPARTITE_BRACKET),
            ];
            let found = exec.map(&jobs, |&(_, b, m, bracket)| threshold_temperature(&model.with_b_z(b), m, bracket));
            for (job, t) in jobs.iter().zip(found) {
                out.insert(job.0.into(), t?);
            }
        }
        Experiment::Dynamics => {
            let p = model.with_b_z(0.0);
            let records =
                magnetization_traces(&configs(&[0, 1, 2, 3], &[1.0, 5.0])?, &p, &default_time_grid(&p), exec)?;
            let min = records.iter().map(|r| r.sensor_readout_correlation()).fold(f64::INFINITY, f64::min);
            out.insert("pearson_min".into(), min);
        }
        Experiment::Sensing => {
            let c = SensingConfig {
                dicke_k: vec![0, 1, 2, 3],
                b_x: vec![1.0, 5.0],
                n_seq: 6,
                tau: None,
                tau_list: None,
                ..SensingConfig::default()
            };
            for s in scans(&protocols(&c, model)?, DEFAULT_DELTA_B, exec)? {
                out.insert(format!("beta_k{}_bx{}", s.dicke_k, label(s.b_x)), s.fit.beta);
            }
        }
    }
    Ok(out)
}
