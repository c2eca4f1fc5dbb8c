//! The five subcommands.

use rayon::prelude::*;
use serde_json::{json, Value};
use tau_core::grassmann::{self, FlowFamily, FlowGroupElement, FlowTimes, GrassmannPoint, TauParams};
use tau_core::kacmoody::{self, AffineData};
use tau_core::linalg::wrap_log;
use tau_core::rhfactor::{self, RhOptions};
use tau_core::toeplitz::{self, log_distance};
use tau_core::{BlockLoop, CircleGrid, Complex64, Error};

use crate::report::{cnum, fmt_f64, num, Check, Failure, Output, Table, Timings};
use crate::scenario::Scenario;

const NAN: Complex64 = Complex64::new(f64::NAN, f64::NAN);

fn stage_err(stage: &'static str) -> impl Fn(Error) -> Failure {
    move |e| Failure::numerical(stage, e)
}

/// Status column value for a point that failed in `stage`.
fn failed(stage: &str, e: &Error) -> String {
    match e {
        Error::SingularSystem { .. } => "off_big_cell".into(),
        _ => format!("failed:{stage}"),
    }
}

fn push_c(row: &mut Vec<String>, z: Complex64) {
    row.push(fmt_f64(z.re));
    row.push(fmt_f64(z.im));
}

fn c_cols(header: &mut Vec<String>, name: &str) {
    header.push(format!("{name}_re"));
    header.push(format!("{name}_im"));
}

fn time_header(cols: &[u32]) -> Vec<String> {
    cols.iter().map(|k| format!("t_{k}")).collect()
}

fn time_cells(cols: &[u32], times: &FlowTimes) -> Vec<String> {
    cols.iter()
        .map(|k| fmt_f64(times.get(k).map(|t| t.re).unwrap_or(0.0)))
        .collect()
}

fn times_json(times: &FlowTimes) -> Value {
    Value::Object(times.iter().map(|(k, t)| (k.to_string(), num(t.re))).collect())
}

/// The symbol of the scenario: the point itself, or the jump `g^-1 gamma`
/// once flow times are switched on.
fn symbol_of(sc: &Scenario, grid: &CircleGrid) -> Result<BlockLoop, Failure> {
    let flow = sc.flow(grid)?;
    match flow {
        Some(f) if f.times().values().any(|t| t.norm() > 0.0) => {
            let point = sc.point(grid)?;
            grassmann::jump_with(&point, &f, sc.numerics.tolerances.tail).map_err(stage_err("jump"))
        }
        _ => sc.point_loop(grid),
    }
}

fn check_indices(flow: &FlowGroupElement, idx: &[u32]) -> Result<(), Failure> {
    for &j in idx {
        flow.generator(j).map_err(|e| Failure::Schema(e.to_string()))?;
    }
    Ok(())
}

pub fn symbol(sc: &Scenario, timings: &mut Timings) -> Result<Output, Failure> {
    let grid = sc.grid();
    let phi = timings.stage("symbol", || symbol_of(sc, &grid))?;
    let mut out = Output::default();
    let r = &mut out.results;
    r.insert("n".into(), json!(phi.n()));
    r.insert("band".into(), json!([phi.k_min(), phi.k_max()]));
    r.insert("bandwidth".into(), json!(phi.bandwidth()));
    r.insert("sup_norm".into(), num(phi.sup_norm(&grid)));
    r.insert("l_half_norm".into(), num(phi.l_half_norm()));
    let winding = timings
        .stage("winding", || phi.winding_number(&grid))
        .map_err(stage_err("winding"))?;
    r.insert("winding_number".into(), json!(winding));
    if winding == 0 {
        let log_g = phi.log_geometric_mean(&grid).map_err(stage_err("geometric_mean"))?;
        r.insert("log_G".into(), cnum(log_g));
        r.insert("G".into(), cnum(log_g.exp()));
        r.insert("factorization".into(), json!("winding number zero; factorization may be attempted"));
    } else {
        r.insert("log_G".into(), Value::Null);
        r.insert("G".into(), Value::Null);
        r.insert(
            "factorization".into(),
            json!(format!("refused: det has winding number {winding}, so no canonical factorization exists")),
        );
    }
    r.insert("method".into(), json!("grid_quadrature"));
    Ok(out)
}

pub fn dn(sc: &Scenario, timings: &mut Timings) -> Result<Output, Failure> {
    let grid = sc.grid();
    let phi = timings.stage("symbol", || symbol_of(sc, &grid))?;
    let log_g = phi.log_geometric_mean(&grid).map_err(stage_err("geometric_mean"))?;
    let schedule = &sc.numerics.n_schedule;
    let logs: Vec<Complex64> = timings.stage("log_det_dn", || {
        schedule.par_iter().map(|&size| toeplitz::log_det_dn(&phi, size)).collect()
    });

    let mut table = Table::new(
        ["N", "re_logDN", "im_logDN", "re_normalized", "im_normalized", "status"]
            .map(String::from)
            .to_vec(),
    );
    let mut kept = Vec::new();
    let mut normalized = Vec::new();
    for (&size, &ld) in schedule.iter().zip(&logs) {
        let singular = tau_core::linalg::is_singular_log(ld);
        let norm = if singular { NAN } else { wrap_log(ld - log_g * (size as f64 + 1.0)) };
        let mut row = vec![size.to_string()];
        push_c(&mut row, ld);
        push_c(&mut row, norm);
        row.push(if singular { "singular".into() } else { "ok".into() });
        table.rows.push(row);
        if !singular {
            kept.push(size);
            normalized.push(norm);
        }
    }
    if kept.is_empty() {
        return Err(Failure::numerical("log_det_dn", Error::NotConverged { stage: "log_det_dn", size: schedule[schedule.len() - 1] }));
    }
    let (limit, err) = toeplitz::extrapolate_geometric(&kept, &normalized).map_err(stage_err("extrapolation"))?;
    let ratios: Vec<Value> = normalized
        .windows(3)
        .map(|w| {
            let (a, b) = ((w[1] - w[0]).norm(), (w[2] - w[1]).norm());
            if a == 0.0 { Value::Null } else { num(b / a) }
        })
        .collect();

    let fred = timings
        .stage("fredholm_det", || match sc.numerics.m_h {
            Some(m_h) => toeplitz::fredholm_det_report(&phi, &grid, m_h, sc.numerics.tolerances.tail),
            None => toeplitz::fredholm_det_auto(&phi, &grid, sc.numerics.tolerances.tail),
        })
        .map_err(stage_err("fredholm_det"))?;

    let mut out = Output::default();
    let r = &mut out.results;
    r.insert("log_G".into(), cnum(log_g));
    r.insert(
        "limit".into(),
        json!({ "method": "extrapolation", "value": cnum(limit), "error": num(err), "decrement_ratios": ratios }),
    );
    r.insert(
        "fredholm".into(),
        json!({ "method": "fredholm", "value": cnum(fred.log_value), "M_H": fred.m_h, "last_change": num(fred.last_change) }),
    );
    let gap = log_distance(limit, fred.log_value);
    out.tables.push(("dn".into(), table));
    out.checks.push(Check::new(
        "limit_vs_fredholm",
        "extrapolation/fredholm",
        gap,
        sc.numerics.tolerances.check.max(10.0 * err),
    ));
    Ok(out)
}

/// Shared setup for the flow commands.
struct FlowSetup {
    point: GrassmannPoint,
    flow: FlowGroupElement,
    points: Vec<FlowTimes>,
    cols: Vec<u32>,
    derivs: Vec<u32>,
    params: TauParams,
    opts: RhOptions,
}

fn flow_setup(sc: &Scenario) -> Result<FlowSetup, Failure> {
    let grid = sc.grid();
    let point = sc.point(&grid)?;
    let flow = sc.flow_required(&grid)?;
    if flow.n() != point.n() {
        return Err(Failure::Schema(format!("flows.n = {} but the point has size {}", flow.n(), point.n())));
    }
    let derivs = sc.derivative_indices(&flow);
    check_indices(&flow, &derivs)?;
    Ok(FlowSetup {
        point,
        flow,
        points: sc.lattice_points(),
        cols: sc.time_columns(),
        derivs,
        params: sc.tau_params(),
        opts: sc.rh_options(),
    })
}

struct TauRow {
    cells: Vec<String>,
    log_tau: Complex64,
    residuals: Vec<f64>,
    status: String,
}

fn tau_row(s: &FlowSetup, times: &FlowTimes) -> Result<TauRow, Failure> {
    let flow = s.flow.with_times(times.clone()).map_err(|e| Failure::Schema(e.to_string()))?;
    let mut row = TauRow { cells: time_cells(&s.cols, times), log_tau: NAN, residuals: Vec::new(), status: "ok".into() };
    let blank = |row: &mut TauRow, status: String| {
        push_c(&mut row.cells, row.log_tau);
        for _ in &s.derivs {
            row.cells.extend(std::iter::repeat_n("nan".to_string(), 5));
        }
        row.status = status;
    };
    let ev = match grassmann::tau_ssw(&s.point, &flow, &s.params) {
        Ok(ev) => ev,
        Err(e) => {
            blank(&mut row, failed("tau", &e));
            return Ok(row);
        }
    };
    row.log_tau = ev.log_value;
    if !ev.in_big_cell() {
        blank(&mut row, "off_big_cell".into());
        return Ok(row);
    }
    let baker = match grassmann::baker_function(&s.point, &flow, &s.opts) {
        Ok(b) => b,
        Err(e) => {
            blank(&mut row, failed("baker", &e));
            return Ok(row);
        }
    };
    push_c(&mut row.cells, ev.log_value);
    for &j in &s.derivs {
        let sato = grassmann::sato_logderiv_from(&baker, &flow, j);
        let jmu = grassmann::jmu_logderiv(&s.point, &flow, j, &s.opts);
        match (sato, jmu) {
            (Ok(a), Ok(b)) => {
                push_c(&mut row.cells, a);
                push_c(&mut row.cells, b);
                let res = (a - b).norm();
                row.cells.push(fmt_f64(res));
                row.residuals.push(res);
            }
            (Err(e), _) | (_, Err(e)) => {
                row.cells.extend(std::iter::repeat_n("nan".to_string(), 5));
                row.status = failed("derivative", &e);
            }
        }
    }
    Ok(row)
}

pub fn tau(sc: &Scenario, timings: &mut Timings) -> Result<Output, Failure> {
    let s = flow_setup(sc)?;
    let mut header = time_header(&s.cols);
    c_cols(&mut header, "log_tau");
    for j in &s.derivs {
        c_cols(&mut header, &format!("sato_{j}"));
        c_cols(&mut header, &format!("jmu_{j}"));
        header.push(format!("residual_{j}"));
    }
    header.push("status".into());

    let rows: Vec<TauRow> = timings
        .stage("tau_sweep", || s.points.par_iter().map(|t| tau_row(&s, t)).collect::<Result<_, _>>())?;

    let mut table = Table::new(header);
    let mut max_res: f64 = 0.0;
    let mut statuses = std::collections::BTreeMap::<String, u64>::new();
    for mut r in rows {
        max_res = r.residuals.iter().copied().fold(max_res, f64::max);
        *statuses.entry(r.status.clone()).or_default() += 1;
        r.cells.push(r.status);
        table.rows.push(r.cells);
    }

    let mut out = Output::default();
    out.results.insert("tau_method".into(), json!(s.params.method.name()));
    out.results.insert("derivative_methods".into(), json!(["sato", "jmu"]));
    out.results.insert("flow_family".into(), json!(s.flow.family().name()));
    out.results.insert("lattice_points".into(), json!(s.points.len()));
    out.results.insert("status_counts".into(), json!(statuses));
    out.results.insert("max_sato_jmu_residual".into(), num(max_res));
    out.checks.push(Check::new("sato_vs_jmu", "sato/jmu", max_res, sc.numerics.tolerances.check));
    out.tables.push(("tau".into(), table));
    Ok(out)
}

fn tau_value(s: &FlowSetup, times: FlowTimes) -> Result<Complex64, Error> {
    let flow = s.flow.with_times(times)?;
    Ok(grassmann::tau_ssw(&s.point, &flow, &s.params)?.log_value)
}

/// Central difference of `log tau` along `t_j`.
fn tau_fd(s: &FlowSetup, times: &FlowTimes, j: u32, h: f64) -> Result<Complex64, Error> {
    let mut plus = times.clone();
    let mut minus = times.clone();
    *plus.entry(j).or_default() += h;
    *minus.entry(j).or_default() -= h;
    let a = tau_value(s, plus)?;
    let b = tau_value(s, minus)?;
    Ok(wrap_log(a - b) / (2.0 * h))
}

struct RhRow {
    cells: Vec<String>,
    factor_residual: f64,
    dual_residual: f64,
    gap: f64,
    status: String,
}

fn rh_row(s: &FlowSetup, times: &FlowTimes, h: f64) -> Result<RhRow, Failure> {
    let flow = s.flow.with_times(times.clone()).map_err(|e| Failure::Schema(e.to_string()))?;
    let grid = flow.grid();
    let mut row = RhRow { cells: time_cells(&s.cols, times), factor_residual: 0.0, dual_residual: 0.0, gap: 0.0, status: "ok".into() };
    let width = 4 + 7 * s.derivs.len();
    let bail = |mut row: RhRow, stage: &str, e: &Error| {
        row.cells.extend(std::iter::repeat_n("nan".to_string(), width));
        row.status = failed(stage, e);
        row
    };

    let j = match grassmann::jump(&s.point, &flow) {
        Ok(j) => j,
        Err(e) => return Ok(bail(row, "jump", &e)),
    };
    let sol = match rhfactor::birkhoff_factorize_with(&j, grid, &s.opts) {
        Ok(sol) => sol,
        Err(e) => return Ok(bail(row, "birkhoff_factorize", &e)),
    };
    let dual = flow
        .to_loop(s.params.tail_tol)
        .and_then(|g| rhfactor::dual_factorize(&j, &sol, s.point.gamma(), &g, grid));
    let dual = match dual {
        Ok(d) => d,
        Err(e) => return Ok(bail(row, "dual_factorize", &e)),
    };
    row.factor_residual = sol.residual;
    row.dual_residual = dual.residual_t.max(dual.residual_s);
    for x in [sol.residual, sol.condition, dual.residual_t, dual.residual_s] {
        row.cells.push(fmt_f64(x));
    }
    for &idx in &s.derivs {
        let jmu = grassmann::jmu_logderiv(&s.point, &flow, idx, &s.opts);
        let widom = grassmann::widom_logderiv(&s.point, &flow, idx, &s.opts);
        let fd = tau_fd(s, times, idx, h);
        match (jmu, widom, fd) {
            (Ok(a), Ok(b), Ok(c)) => {
                push_c(&mut row.cells, a);
                push_c(&mut row.cells, b);
                push_c(&mut row.cells, c);
                let gap = (a - b).norm().max((a - c).norm()).max((b - c).norm());
                row.cells.push(fmt_f64(gap));
                row.gap = row.gap.max(gap);
            }
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
                row.cells.extend(std::iter::repeat_n("nan".to_string(), 7));
                row.status = failed("derivative", &e);
            }
        }
    }
    Ok(row)
}

pub fn rh(sc: &Scenario, timings: &mut Timings) -> Result<Output, Failure> {
    let s = flow_setup(sc)?;
    let h = sc.numerics.h;
    let mut header = time_header(&s.cols);
    for name in ["factor_residual", "condition", "dual_residual_t", "dual_residual_s"] {
        header.push(name.into());
    }
    for j in &s.derivs {
        c_cols(&mut header, &format!("jmu_{j}"));
        c_cols(&mut header, &format!("widom_{j}"));
        c_cols(&mut header, &format!("fd_{j}"));
        header.push(format!("max_gap_{j}"));
    }
    header.push("status".into());

    let rows: Vec<RhRow> = timings
        .stage("rh_sweep", || s.points.par_iter().map(|t| rh_row(&s, t, h)).collect::<Result<_, _>>())?;

    // Gamma_- at the first lattice point.
    let first = s.flow.with_times(s.points[0].clone()).map_err(|e| Failure::Schema(e.to_string()))?;
    let sol = timings
        .stage("factor_first_point", || {
            grassmann::jump(&s.point, &first).and_then(|j| rhfactor::birkhoff_factorize_with(&j, first.grid(), &s.opts))
        })
        .map_err(stage_err("birkhoff_factorize"))?;
    let mut coeffs = Table::new(["k", "row", "col", "re", "im"].map(String::from).to_vec());
    for k in (sol.gamma_minus.k_min()..=0).rev() {
        let block = sol.gamma_minus.coeff_or_zero(k);
        for r in 0..block.nrows() {
            for c in 0..block.ncols() {
                coeffs.rows.push(vec![
                    k.to_string(),
                    r.to_string(),
                    c.to_string(),
                    fmt_f64(block[(r, c)].re),
                    fmt_f64(block[(r, c)].im),
                ]);
            }
        }
    }

    let mut table = Table::new(header);
    let (mut fr, mut dr, mut gap, mut bad) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for mut r in rows {
        fr = fr.max(r.factor_residual);
        dr = dr.max(r.dual_residual);
        gap = gap.max(r.gap);
        if r.status != "ok" {
            bad += 1;
        }
        r.cells.push(r.status);
        table.rows.push(r.cells);
    }

    let mut out = Output::default();
    out.results.insert("factorization_method".into(), json!("galerkin_least_squares"));
    out.results.insert("derivative_methods".into(), json!(["jmu", "widom", "central_difference"]));
    out.results.insert("tau_method".into(), json!(s.params.method.name()));
    out.results.insert("depth".into(), json!(sol.depth));
    out.results.insert("fd_step".into(), num(h));
    out.results.insert("lattice_points".into(), json!(s.points.len()));
    out.results.insert("failed_points".into(), json!(bad));
    out.results.insert("max_factor_residual".into(), num(fr));
    out.results.insert("max_dual_residual".into(), num(dr));
    out.results.insert("max_derivative_gap".into(), num(gap));
    out.checks.push(Check::new("factorization_residual", "galerkin_least_squares", fr, sc.numerics.tolerances.residual));
    out.checks.push(Check::new("dual_factorization_residual", "dual_factorize", dr, sc.numerics.tolerances.residual));
    out.checks.push(Check::new("jmu_widom_fd", "jmu/widom/central_difference", gap, sc.numerics.tolerances.check));
    out.tables.push(("rh".into(), table));
    out.tables.push(("rh_gamma_minus".into(), coeffs));
    Ok(out)
}

pub fn ds(sc: &Scenario, timings: &mut Timings) -> Result<Output, Failure> {
    let s = flow_setup(sc)?;
    if s.flow.family() != FlowFamily::PrincipalA {
        return Err(Failure::Schema("ds needs the principal_A flow family".into()));
    }
    let data = AffineData::a1(s.point.n()).map_err(|e| Failure::Schema(e.to_string()))?;
    let js: Vec<u32> = match &sc.numerics.derivatives {
        Some(d) => d.clone(),
        None => s.derivs.iter().copied().filter(|&j| data.is_exponent(j as i64)).collect(),
    };
    for &j in &js {
        if !data.is_exponent(j as i64) {
            return Err(Failure::Schema(format!("{j} is not an exponent for n = {}", data.n)));
        }
    }

    let mut header = time_header(&s.cols);
    for j in &js {
        c_cols(&mut header, &format!("c_{j}"));
        c_cols(&mut header, &format!("sato_{j}"));
        header.push(format!("residual_{j}"));
    }
    header.push("status".into());

    let rows: Vec<(Vec<String>, f64, bool)> = timings.stage("ds_sweep", || {
        s.points
            .par_iter()
            .map(|times| {
                let flow = s.flow.with_times(times.clone()).map_err(|e| Failure::Schema(e.to_string()))?;
                let mut cells = time_cells(&s.cols, times);
                let mut worst: f64 = 0.0;
                let mut status = "ok".to_string();
                for &j in &js {
                    match kacmoody::ds_tau_relation_check(&s.point, &flow, j as i64, &data, &s.opts) {
                        Ok(chk) => {
                            push_c(&mut cells, chk.c_coefficient);
                            push_c(&mut cells, chk.sato_logderiv);
                            cells.push(fmt_f64(chk.residual));
                            worst = worst.max(chk.residual);
                        }
                        Err(Error::InvalidInput(m)) => return Err(Failure::Schema(m)),
                        Err(e) => {
                            cells.extend(std::iter::repeat_n("nan".to_string(), 5));
                            status = failed("ds_tau_relation_check", &e);
                        }
                    }
                }
                let ok = status == "ok";
                cells.push(status);
                Ok((cells, worst, ok))
            })
            .collect::<Result<_, Failure>>()
    })?;

    let mut table = Table::new(header);
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    for (cells, w, ok) in rows {
        worst = worst.max(w);
        bad += usize::from(!ok);
        table.rows.push(cells);
    }
    let mut out = Output::default();
    out.results.insert("affine_family".into(), json!(data.family.name()));
    out.results.insert("n".into(), json!(data.n));
    out.results.insert("central_scale".into(), num(data.central_scale()));
    out.results.insert("flows".into(), json!(js));
    out.results.insert("methods".into(), json!(["conjugation_contour", "sato"]));
    out.results.insert("lattice_points".into(), json!(s.points.len()));
    out.results.insert("failed_points".into(), json!(bad));
    out.results.insert("max_residual".into(), num(worst));
    out.results.insert("base_times".into(), times_json(&sc.base_times()));
    out.checks.push(Check::new("ds_tau_relation", "conjugation_contour/sato", worst, sc.numerics.tolerances.check));
    out.tables.push(("ds".into(), table));
    Ok(out)
}
