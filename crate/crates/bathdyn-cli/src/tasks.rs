//! One function per scenario task.

use bathdyn::dissipation::{coefficients_with_floor, solve, DissipationFunctions, MasterCoefficients};
use bathdyn::equilibrium::{classify, markov_coefficients, steady_state, SweepPoint};
use bathdyn::evolution::{coherent_occupation, evolve_master, fock_cutoff, EvolveOptions};
use bathdyn::nonmarkov::{blp_measure, trace_distance};
use bathdyn::oracle::{DiscreteBath, Eigensystem};
use bathdyn::spectrum::{bound_state, single_excitation_spectrum, BoundStateReport};
use bathdyn::{FockDensityMatrix, ReservoirKind, ReservoirModel};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Point, Scenario, Task};
use crate::error::{CliError, CliResult};
use crate::output::{Artifacts, Cell, Table};

pub fn run(sc: &Scenario) -> CliResult<Artifacts> {
    match sc.config.task {
        Task::Kernels => kernels(sc),
        Task::Dissipation => dissipation(sc),
        Task::Coefficients => coefficient_series(sc),
        Task::Steady => steady(sc),
        Task::SweepEta | Task::SweepOmegac => teff_sweep(sc),
        Task::BoundstateMap => boundstate_map(sc),
        Task::Occupation => occupation(sc),
        Task::Nonmarkov => nonmarkov(sc),
        Task::OracleCheck => oracle_check(sc),
        Task::CavityArray => cavity_array(sc),
    }
}

fn columns(sc: &Scenario, rest: &[&str]) -> Vec<String> {
    sc.axes.iter().copied().chain(rest.iter().copied()).map(String::from).collect()
}

fn prefix(p: &Point) -> Vec<Cell> {
    p.params.iter().map(|&x| Cell::Num(x)).collect()
}

fn rows_of(sc: &Scenario) -> impl Iterator<Item = usize> + '_ {
    let stride = sc.config.options.stride;
    let n = sc.grid.n_steps;
    (0..=n).step_by(stride).chain(if n % stride == 0 { None } else { Some(n) })
}

/// Runs `f` over every point in parallel, keeping point order.
fn per_point<T: Send>(sc: &Scenario, f: impl Fn(&Point) -> CliResult<T> + Sync + Send) -> CliResult<Vec<T>> {
    sc.points.par_iter().map(f).collect()
}

fn coeffs_for(sc: &Scenario, model: &ReservoirModel) -> CliResult<(DissipationFunctions, MasterCoefficients)> {
    let d = solve(model, &sc.grid)?;
    let c = coefficients_with_floor(&d, sc.config.options.u_floor)?;
    Ok((d, c))
}

fn classify_at(sc: &Scenario, c: &MasterCoefficients, value: f64) -> SweepPoint {
    let i = sc.grid.index_of(sc.t_eval);
    classify(value, c.gamma[i], c.gamma_beta[i], c.valid[i])
}

fn opt(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

fn bound_json(r: &BoundStateReport) -> Value {
    json!({
        "exists": r.exists,
        "energy": r.energy,
        "residue": r.residue,
        "margin": r.margin,
        "upper_energy": r.upper.map(|u| u.0),
        "upper_residue": r.upper.map(|u| u.1),
        "note": r.note,
    })
}

fn kernels(sc: &Scenario) -> CliResult<Artifacts> {
    let m = &sc.points[0].model;
    let mut t = Table::new("kernels", &["x", "mu_re", "mu_im", "K_re", "K_im", "nu_re", "nu_im"]);
    t.note("mu(x) = int J(w) exp(-i w x) dw, K(x) = int_0^x mu, nu(x) = int J(w) nbar(w) exp(-i w x) dw");
    for i in rows_of(sc) {
        let x = sc.grid.time(i);
        let (mu, k, nu) = (m.kernel_mu(x), m.kernel_mu_integral(x), m.kernel_nu(x));
        t.push(vec![x.into(), mu.re.into(), mu.im.into(), k.re.into(), k.im.into(), nu.re.into(), nu.im.into()]);
    }
    Ok(Artifacts { tables: vec![t], reports: vec![] })
}

fn dissipation(sc: &Scenario) -> CliResult<Artifacts> {
    let sols = per_point(sc, |p| Ok(solve(&p.model, &sc.grid)?))?;
    let mut t = Table::with_columns("dissipation", columns(sc, &["t", "u_re", "u_im", "u_abs2", "udot_re", "udot_im", "v", "vdot"]));
    for (p, d) in sc.points.iter().zip(&sols) {
        for i in rows_of(sc) {
            let mut row = prefix(p);
            row.extend([
                Cell::Num(sc.grid.time(i)),
                d.u[i].re.into(),
                d.u[i].im.into(),
                d.u[i].norm_sqr().into(),
                d.udot[i].re.into(),
                d.udot[i].im.into(),
                d.v[i].into(),
                d.vdot[i].into(),
            ]);
            t.push(row);
        }
    }
    Ok(Artifacts { tables: vec![t], reports: vec![] })
}

fn coefficient_series(sc: &Scenario) -> CliResult<Artifacts> {
    let sols = per_point(sc, |p| coeffs_for(sc, &p.model).map(|x| x.1))?;
    let mut series = Table::with_columns("coefficients", columns(sc, &["t", "Omega", "Gamma", "GammaBeta", "valid"]));
    series.note("valid = 0 marks |u| below the floor; such samples repeat the last valid value");
    let mut teff = Table::with_columns("teff", columns(sc, &["t_eval", "Gamma", "GammaBeta", "ratio", "T_eff", "marker", "kappa", "GammaBeta_M"]));
    for (p, c) in sc.points.iter().zip(&sols) {
        for i in rows_of(sc) {
            let mut row = prefix(p);
            row.extend([Cell::Num(sc.grid.time(i)), c.omega[i].into(), c.gamma[i].into(), c.gamma_beta[i].into(), c.valid[i].into()]);
            series.push(row);
        }
        let s = classify_at(sc, c, p.params.first().copied().unwrap_or(f64::NAN));
        let (kappa, gbm) = match p.model.kind {
            ReservoirKind::OhmicFamily { .. } => {
                let m = markov_coefficients(&p.model)?;
                (m.kappa, m.gamma_beta_m)
            }
            ReservoirKind::CavityArray { .. } => (f64::NAN, f64::NAN),
        };
        let mut row = prefix(p);
        row.extend([
            Cell::Num(sc.t_eval),
            s.gamma_inf.into(),
            s.gamma_beta_inf.into(),
            s.ratio.into(),
            s.t_eff.into(),
            s.marker.as_str().into(),
            kappa.into(),
            gbm.into(),
        ]);
        teff.push(row);
    }
    Ok(Artifacts { tables: vec![series, teff], reports: vec![] })
}

fn steady(sc: &Scenario) -> CliResult<Artifacts> {
    let p = &sc.points[0];
    let (_, c) = coeffs_for(sc, &p.model)?;
    let s = classify_at(sc, &c, f64::NAN);
    let mut tables = Vec::new();
    let mut report = json!({
        "t_eval": sc.t_eval,
        "gamma_inf": s.gamma_inf,
        "gamma_beta_inf": s.gamma_beta_inf,
        "ratio": s.ratio,
        "t_eff": s.t_eff,
        "marker": s.marker.as_str(),
        "bound_state": bound_json(&bound_state(&p.model)?),
    });
    if let Ok(st) = steady_state(s.gamma_inf, s.gamma_beta_inf, 0) {
        let n_max = fock_cutoff(0.0, st.ratio, 1e-12);
        let st = steady_state(s.gamma_inf, s.gamma_beta_inf, n_max)?;
        report["n_con"] = json!(st.n_con);
        report["beta_eff"] = json!(st.beta_eff);
        let mut t = Table::new("populations", &["n", "p_n"]);
        for (n, &pn) in st.populations.iter().enumerate() {
            t.push(vec![n.into(), pn.into()]);
        }
        tables.push(t);
    }
    if let ReservoirKind::OhmicFamily { .. } = p.model.kind {
        let m = markov_coefficients(&p.model)?;
        report["markov"] = json!({
            "kappa": m.kappa,
            "delta_omega": m.delta_omega,
            "omega_prime": m.omega_prime,
            "gamma_beta_m": m.gamma_beta_m,
        });
    }
    Ok(Artifacts { tables, reports: vec![("steady".into(), report)] })
}

fn teff_sweep(sc: &Scenario) -> CliResult<Artifacts> {
    let rows = per_point(sc, |p| {
        let (_, c) = coeffs_for(sc, &p.model)?;
        Ok((classify_at(sc, &c, p.params[0]), bound_state(&p.model)?))
    })?;
    let mut t = Table::with_columns("sweep", columns(sc, &["Gamma", "GammaBeta", "ratio", "T_eff", "marker", "bound_exists", "margin"]));
    t.note(format!("coefficients read at t_eval = {}", sc.t_eval));
    for (p, (s, b)) in sc.points.iter().zip(&rows) {
        let mut row = prefix(p);
        row.extend([s.gamma_inf.into(), s.gamma_beta_inf.into(), s.ratio.into(), s.t_eff.into(), s.marker.as_str().into(), b.exists.into(), b.margin.into()]);
        t.push(row);
    }
    Ok(Artifacts { tables: vec![t], reports: vec![] })
}

fn boundstate_map(sc: &Scenario) -> CliResult<Artifacts> {
    let reports = per_point(sc, |p| Ok(bound_state(&p.model)?))?;
    let mut t = Table::with_columns("boundstate", columns(sc, &["exists", "margin", "energy", "residue"]));
    for (p, r) in sc.points.iter().zip(&reports) {
        let mut row = prefix(p);
        row.extend([r.exists.into(), r.margin.into(), opt(r.energy).into(), opt(r.residue).into()]);
        t.push(row);
    }
    Ok(Artifacts { tables: vec![t], reports: vec![] })
}

fn occupation(sc: &Scenario) -> CliResult<Artifacts> {
    let alphas: Vec<_> = sc.config.initial.alpha0.iter().map(|a| a.value()).collect();
    let sols = per_point(sc, |p| coeffs_for(sc, &p.model))?;
    let mut tables = Vec::new();
    let mut reports = Vec::new();
    if !alphas.is_empty() {
        let names: Vec<String> = (0..alphas.len()).map(|k| format!("N_{k}")).collect();
        let mut cols = columns(sc, &["t"]);
        cols.extend(names);
        let mut t = Table::with_columns("occupation", cols);
        t.note(format!("N_k(t) = |alpha0_k u(t)|^2 + v(t) with alpha0 = {:?}", alphas.iter().map(|a| (a.re, a.im)).collect::<Vec<_>>()));
        for (p, (d, _)) in sc.points.iter().zip(&sols) {
            let ns = alphas.iter().map(|&a| coherent_occupation(a, &d.u, &d.v)).collect::<Result<Vec<_>, _>>()?;
            for i in rows_of(sc) {
                let mut row = prefix(p);
                row.push(Cell::Num(sc.grid.time(i)));
                row.extend(ns.iter().map(|n| Cell::Num(n[i])));
                t.push(row);
            }
        }
        tables.push(t);
    }
    if sc.config.options.evolve {
        if sc.points.len() != 1 {
            return Err(CliError::schema("options.evolve supports a single parameter point"));
        }
        let (d, c) = &sols[0];
        let o = &sc.config.options;
        let (small, n0) = match (&sc.config.initial.populations, alphas.first()) {
            (Some(p), _) => (FockDensityMatrix::from_populations(p), p.iter().enumerate().map(|(n, &x)| n as f64 * x).sum::<f64>()),
            (None, Some(&a)) => {
                let dim = fock_cutoff(a.norm_sqr(), 0.0, 1e-16);
                (FockDensityMatrix::coherent(a, dim), a.norm_sqr())
            }
            (None, None) => unreachable!("validated"),
        };
        let v_max = d.v.iter().cloned().fold(0.0, f64::max);
        let dim = o.fock_dim.unwrap_or_else(|| fock_cutoff(n0.max(small.dim() as f64), v_max + 1.0, o.leakage_bound)).max(small.dim());
        let mut rho0 = FockDensityMatrix::zeros(dim);
        for m in 0..small.dim() {
            for n in 0..small.dim() {
                rho0.set(m, n, small.get(m, n));
            }
        }
        let opts = EvolveOptions {
            output_every: o.output_every,
            allow_invalid: o.allow_invalid,
            leakage_bound: o.leakage_bound,
            ..Default::default()
        };
        let tr = evolve_master(&rho0, c, opts)?;
        let mut t = Table::new("trajectory", &["t", "mean_number", "N_formula", "purity", "trace", "min_eigenvalue", "leakage"]);
        t.note(format!("Fock dimension {dim}; N_formula = |u|^2 <n>_0 + v"));
        for p in &tr.points {
            let i = sc.grid.index_of(p.t);
            let nf = d.u[i].norm_sqr() * n0 + d.v[i];
            t.push(vec![p.t.into(), p.mean_number.into(), nf.into(), p.purity.into(), p.trace.into(), p.min_eigenvalue.into(), p.leakage.into()]);
        }
        tables.push(t);
        let s = classify_at(sc, c, f64::NAN);
        let mut report = json!({
            "dim": dim,
            "trace_drift": tr.trace_drift,
            "max_leakage": tr.max_leakage,
            "final_mean_number": tr.final_state.mean_number(),
            "marker_at_t_eval": s.marker.as_str(),
        });
        if let Ok(st) = steady_state(s.gamma_inf, s.gamma_beta_inf, dim - 1) {
            let target = FockDensityMatrix::from_populations(&st.populations);
            report["n_con"] = json!(st.n_con);
            report["distance_to_steady"] = json!(trace_distance(&tr.final_state, &target, sc.convention)?);
            report["convention"] = json!(sc.convention.as_str());
        }
        reports.push(("evolution".into(), report));
    }
    Ok(Artifacts { tables, reports })
}

fn nonmarkov(sc: &Scenario) -> CliResult<Artifacts> {
    let reports = per_point(sc, |p| Ok(blp_measure(&p.model, &sc.grid, sc.convention)?))?;
    let mut t = Table::with_columns("nonmarkov", columns(sc, &["N", "intervals", "horizon_warning"]));
    t.note(format!("pair |0><0|, |1><1| at zero temperature; horizon {}; convention {}", sc.grid.t_max, sc.convention.as_str()));
    let mut iv = Table::with_columns("nonmarkov_intervals", columns(sc, &["t_start", "t_end"]));
    for (p, r) in sc.points.iter().zip(&reports) {
        let mut row = prefix(p);
        row.extend([r.value.into(), r.intervals.len().into(), r.horizon_warning.into()]);
        t.push(row);
        for &(a, b) in &r.intervals {
            let mut row = prefix(p);
            row.extend([Cell::Num(a), Cell::Num(b)]);
            iv.push(row);
        }
    }
    Ok(Artifacts { tables: vec![t, iv], reports: vec![] })
}

fn oracle_check(sc: &Scenario) -> CliResult<Artifacts> {
    let p = &sc.points[0];
    let o = &sc.config.options;
    let bath = match p.model.kind {
        ReservoirKind::OhmicFamily { omega_c, .. } => DiscreteBath::discretize(&p.model, o.oracle_modes, o.oracle_omega_max * omega_c)?,
        ReservoirKind::CavityArray { .. } => DiscreteBath::from_cavity(&p.model)?,
    };
    bath.check_horizon(sc.grid.t_max)?;
    let eig = Eigensystem::new(&bath)?;
    let d = solve(&p.model, &sc.grid)?;
    let rows: Vec<usize> = rows_of(sc).collect();
    let oracle_u: Vec<_> = rows.par_iter().map(|&i| eig.u(sc.grid.time(i))).collect();
    let mut tu = Table::new("oracle_u", &["t", "u_re", "u_im", "oracle_re", "oracle_im", "abs_error"]);
    let mut max_u = 0.0f64;
    for (&i, uo) in rows.iter().zip(&oracle_u) {
        let err = (d.u[i] - uo).norm();
        max_u = max_u.max(err);
        tu.push(vec![sc.grid.time(i).into(), d.u[i].re.into(), d.u[i].im.into(), uo.re.into(), uo.im.into(), err.into()]);
    }
    // the thermal oracle costs O(K²) per time, so it is sampled on at most 101 times
    let n = sc.grid.n_steps;
    let mut vrows: Vec<usize> = (0..=100).map(|k| k * n / 100).collect();
    vrows.dedup();
    let oracle_v: Vec<f64> = vrows.par_iter().map(|&i| eig.v(p.model.beta, sc.grid.time(i))).collect();
    let mut tv = Table::new("oracle_v", &["t", "v", "oracle_v", "abs_error"]);
    let mut max_v = 0.0f64;
    for (&i, &vo) in vrows.iter().zip(&oracle_v) {
        let err = (d.v[i] - vo).abs();
        max_v = max_v.max(err);
        tv.push(vec![sc.grid.time(i).into(), d.v[i].into(), vo.into(), err.into()]);
    }
    let report = json!({
        "modes": bath.frequencies.len(),
        "provenance": format!("{:?}", bath.provenance),
        "recurrence_time": bath.recurrence_time,
        "max_abs_error_u": max_u,
        "max_abs_error_v": max_v,
    });
    Ok(Artifacts { tables: vec![tu, tv], reports: vec![("oracle".into(), report)] })
}

fn cavity_array(sc: &Scenario) -> CliResult<Artifacts> {
    let results = per_point(sc, |p| {
        let spec = single_excitation_spectrum(&p.model)?;
        let b = bound_state(&p.model)?;
        let (_, c) = coeffs_for(sc, &p.model)?;
        Ok((spec, b, c))
    })?;
    let mut ts = Table::with_columns("spectrum", columns(sc, &["E", "weight"]));
    let mut tb = Table::with_columns("boundstate", columns(sc, &["exists", "margin", "energy", "residue", "upper_energy", "upper_residue"]));
    tb.note("exists follows the lower-gap criterion; roots above the band are reported separately");
    let mut tc = Table::with_columns("coefficients", columns(sc, &["t", "Omega", "Gamma", "GammaBeta", "valid"]));
    let mut notes = Vec::new();
    for (p, (spec, b, c)) in sc.points.iter().zip(&results) {
        for (&e, &w) in spec.eigenvalues.iter().zip(&spec.weights) {
            let mut row = prefix(p);
            row.extend([Cell::Num(e), Cell::Num(w)]);
            ts.push(row);
        }
        let mut row = prefix(p);
        row.extend([
            b.exists.into(),
            b.margin.into(),
            opt(b.energy).into(),
            opt(b.residue).into(),
            opt(b.upper.map(|u| u.0)).into(),
            opt(b.upper.map(|u| u.1)).into(),
        ]);
        tb.push(row);
        for i in rows_of(sc) {
            let mut row = prefix(p);
            row.extend([Cell::Num(sc.grid.time(i)), c.omega[i].into(), c.gamma[i].into(), c.gamma_beta[i].into(), c.valid[i].into()]);
            tc.push(row);
        }
        notes.push(json!({ "params": p.params, "bound_state": bound_json(b) }));
    }
    Ok(Artifacts { tables: vec![ts, tb, tc], reports: vec![("cavity".into(), Value::Array(notes))] })
}
