use nalgebra::DMatrix;
use rayon::prelude::*;
use serde_json::{json, Value};
use sutherland_core::fock::{annihilate, create, fock_dimension, gl_action, weight_space, FockOperator, FockSpace, OccupationState};
use sutherland_core::kks::{
    big_modes, compute_vk_bruteforce, coupling_attainable, couplings as coupling_map, enumerate_cells, raw_grid,
    raw_grid_size, verify_reduction, EnumRow, KksParams, CELL_CAP,
};
use sutherland_core::lie::{inner_g, sample_alcove, GPair, Scheme, C64};
use sutherland_core::polar::{
    build_kperp_basis, build_m_basis, density_sqrt, e_family, etilde_family, ftilde_family, fzero_family,
    inertia_closed_eigen, inertia_from_definition, measure_factor_closed, measure_factor_fd, rel_err, FD_STEP,
    FD_WALL_GUARD,
};

use crate::params::{resolve, scheme_for, Resolved};
use crate::report::{Check, Report, SchemeInfo};
use crate::{CaseArg, RepArgs, Suite, UsageError};

fn core_err(e: sutherland_core::Error) -> UsageError {
    UsageError(e.to_string())
}

fn basis_checks(s: &Scheme, tol: Option<f64>) -> Vec<Check> {
    let b = build_kperp_basis(s);
    let dev = (b.gram() - DMatrix::identity(b.len(), b.len())).abs().max();
    let mut k_overlap: f64 = 0.0;
    for l in build_m_basis(s) {
        let k = GPair::diagonal(&l);
        for v in b.vectors() {
            k_overlap = k_overlap.max(inner_g(&k, v).abs());
        }
    }
    let (n, r, c) = (s.n(), s.r(), s.s() - s.n());
    let counts = [
        e_family(s).len(),
        etilde_family(s).len(),
        ftilde_family(s).len() + fzero_family(s).len(),
    ];
    let want = [n * (2 * r - 1), 2 * n * c, 2 * r * c];
    vec![
        Check::measured("basis.gram", "abs", dev, tol.unwrap_or(1e-12), format!("{} vectors", b.len())),
        Check::exact(
            "basis.dimension",
            b.len() == s.dim_g() - s.dim_k(),
            format!("{} = dim G - dim K = {} - {}", b.len(), s.dim_g(), s.dim_k()),
        ),
        Check::exact("basis.families", counts == want, format!("E, E~, F~ + F~0 counts {counts:?}, expected {want:?}")),
        Check::measured("basis.orthogonal_to_k", "abs", k_overlap, tol.unwrap_or(1e-12), "B_G overlap with Lie(K)"),
    ]
}

fn inertia_checks(s: &Scheme, samples: usize, seed: u64, tol: Option<f64>) -> Result<Vec<Check>, UsageError> {
    let b = build_kperp_basis(s);
    let pts = sample_alcove(s.n(), samples, seed, 0.01);
    let per_point: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|pt| {
            let j = inertia_from_definition(&b, pt)?.matrix;
            let lam = inertia_closed_eigen(&b, pt)?;
            let mut worst: f64 = 0.0;
            for (i, l) in lam.iter().enumerate() {
                let mut col = j.column(i).into_owned();
                col[i] -= l;
                worst = worst.max(col.norm());
            }
            Ok((worst, lam.iter().cloned().fold(f64::INFINITY, f64::min)))
        })
        .collect::<sutherland_core::Result<_>>()
        .map_err(core_err)?;
    let worst = per_point.iter().map(|x| x.0).fold(0.0, f64::max);
    let min_eig = per_point.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    Ok(vec![
        Check::measured(
            "inertia.diagonalization",
            "abs",
            worst,
            tol.unwrap_or(1e-10),
            format!("max |J v - lambda v| over {} basis vectors x {samples} points", b.len()),
        ),
        Check::exact("inertia.positivity", min_eig > 0.0, format!("smallest eigenvalue {min_eig:.6}")),
    ])
}

fn density_checks(s: &Scheme, samples: usize, seed: u64, tol: Option<f64>) -> Result<Vec<Check>, UsageError> {
    let pts = sample_alcove(s.n(), samples, seed, FD_WALL_GUARD);
    let b = build_kperp_basis(s);
    let rows: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|pt| {
            let fd = measure_factor_fd(s, pt, FD_STEP)?;
            let closed = measure_factor_closed(s, pt)?;
            let det = inertia_from_definition(&b, pt)?.matrix.determinant();
            Ok((rel_err(fd, closed), density_sqrt(s, pt)?.powi(4) / det))
        })
        .collect::<sutherland_core::Result<_>>()
        .map_err(core_err)?;
    let worst = rows.iter().map(|x| x.0).fold(0.0, f64::max);
    let r0 = rows[0].1;
    let spread = rows.iter().map(|x| ((x.1 - r0) / r0).abs()).fold(0.0, f64::max);
    Ok(vec![
        Check::measured(
            "density.measure_factor",
            "rel",
            worst,
            tol.unwrap_or(1e-5),
            format!("finite differences (h = {FD_STEP:e}) vs closed form at {samples} points"),
        ),
        Check::measured(
            "density.sqrt_det",
            "rel",
            spread,
            tol.unwrap_or(1e-8),
            "spread of density^4 / det J across points",
        ),
    ])
}

fn unit(space: &FockSpace, s: &OccupationState) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); space.dim()];
    v[space.index_of(s).expect("state in space")] = C64::new(1.0, 0.0);
    v
}

fn fock_checks(modes: usize, level: u64, tol: Option<f64>) -> Result<Vec<Check>, UsageError> {
    if modes == 0 {
        return Err(UsageError("--modes must be at least 1".into()));
    }
    let tol = tol.unwrap_or(1e-12);
    let sp = FockSpace::new(modes, level).map_err(core_err)?;
    let want = fock_dimension(modes, level);
    let mut checks = vec![Check::exact(
        "fock.dimension",
        sp.dim() as u64 == want,
        format!("dim = {}, binomial({}, {}) = {want}", sp.dim(), level + modes as u64 - 1, modes - 1),
    )];
    let simple = sp.basis().iter().all(|s| weight_space(&sp, &s.weight()) == vec![s.clone()]);
    checks.push(Check::exact("fock.weight_spaces", simple, "every weight space is one-dimensional"));

    let mut top = vec![0u32; modes];
    top[0] = level as u32;
    let hw = unit(&sp, &OccupationState::new(top));
    let mut hw_ok = true;
    for i in 0..modes.saturating_sub(1) {
        let out = gl_action(&sp, i, i + 1).map_err(core_err)?.apply(&hw);
        hw_ok &= out.iter().all(|z| z.norm() == 0.0);
    }
    checks.push(Check::exact("fock.highest_weight", hw_ok, "E_{i,i+1} annihilates |m,0,...,0>"));

    let up = FockSpace::new(modes, level + 1).map_err(core_err)?;
    let down = sp.shifted(-1).map_err(core_err)?;
    let mut ccr: f64 = 0.0;
    for i in 0..modes {
        for j in 0..modes {
            let lhs = annihilate(&up, i).map_err(core_err)?.mul(&create(&sp, j).map_err(core_err)?);
            let rhs = match &down {
                Some(d) => create(d, j).map_err(core_err)?.mul(&annihilate(&sp, i).map_err(core_err)?),
                None => FockOperator::zeros(sp.dim(), sp.dim()),
            };
            let mut c = lhs.sub(&rhs);
            if i == j {
                c = c.sub(&FockOperator::identity(sp.dim()));
            }
            ccr = ccr.max(c.max_abs());
        }
    }
    checks.push(Check::measured("fock.ccr", "abs", ccr, tol, "[b_i, b_j^dagger] = delta_ij on this level"));

    if modes >= 2 && level % modes as u64 == 0 {
        let g = (level / modes as u64) as u32;
        let v = unit(&sp, &OccupationState::new(vec![g; modes]));
        let mut dev: f64 = 0.0;
        for k in 0..modes {
            for l in 0..modes {
                if k != l {
                    let op = gl_action(&sp, k, l).map_err(core_err)?.mul(&gl_action(&sp, l, k).map_err(core_err)?);
                    for (x, y) in op.apply(&v).iter().zip(&v) {
                        dev = dev.max((x - y * (g * (g + 1)) as f64).norm());
                    }
                }
            }
        }
        checks.push(Check::measured(
            "fock.hopping",
            "abs",
            dev,
            tol,
            format!("b_k^dagger b_l b_l^dagger b_k = {} on the uniform state", g * (g + 1)),
        ));
    } else {
        checks.push(Check::skipped("fock.hopping", "level is not a multiple of the mode count"));
    }
    Ok(checks)
}

fn reduction_checks(
    res: &Resolved,
    samples: usize,
    seed: u64,
    tol: Option<f64>,
    report: &mut Report,
) -> Result<Vec<Check>, UsageError> {
    let s = &res.scheme;
    let Some(p) = res.params() else {
        return Ok(vec![Check::exact(
            "reduction.admissible",
            false,
            res.admissibility.violations.join("; "),
        )]);
    };
    let vk = compute_vk_bruteforce(s, res.raw).map_err(core_err)?;
    let predicted = p.invariant_state(s.n());
    let mut checks = vec![Check::exact(
        "reduction.admissible",
        vk.dimension == 1 && vk.basis_states == vec![predicted.clone()],
        format!("brute-force dim V^K = {}, states {:?}, predicted {predicted}", vk.dimension, vk.basis_states.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
    )];
    let tol = tol.unwrap_or(1e-8);
    let rep = verify_reduction(s, &p, samples, tol, seed).map_err(core_err)?;
    checks.push(Check::measured(
        "reduction.identity",
        "rel",
        rep.max_rel_err,
        tol,
        format!("measure - spin = V_BC + C at {samples} points"),
    ));
    report.couplings = Some(rep.couplings.into());
    report.samples = Some(rep.samples.iter().map(|x| serde_json::to_value(x).unwrap()).collect());
    Ok(checks)
}

pub fn verify(
    kind: Suite,
    rep: &RepArgs,
    samples: usize,
    tol: Option<f64>,
    seed: u64,
    modes: Option<usize>,
    level: Option<u64>,
) -> Result<Report, UsageError> {
    let name = format!("verify {}", format!("{kind:?}").to_lowercase());
    let mut report = Report::new(name, seed);
    if kind == Suite::Fock {
        let modes = modes.unwrap_or(2);
        let level = level.unwrap_or(4);
        report.params = Some(json!({ "modes": modes, "level": level }));
        report.checks = fock_checks(modes, level, tol)?;
        return Ok(report);
    }
    let res = resolve(rep)?;
    let s = res.scheme;
    report.scheme = Some(SchemeInfo::from(&s));
    report.case = Some(s.case().to_string());
    report.params = Some(res.to_json());
    let mut checks = Vec::new();
    if matches!(kind, Suite::Basis | Suite::All) {
        checks.extend(basis_checks(&s, tol));
    }
    if matches!(kind, Suite::Inertia | Suite::All) {
        checks.extend(inertia_checks(&s, samples, seed, tol)?);
    }
    if matches!(kind, Suite::Density | Suite::All) {
        checks.extend(density_checks(&s, samples, seed, tol)?);
    }
    if kind == Suite::All {
        let m = modes.unwrap_or(big_modes(&s).map_err(core_err)?);
        checks.extend(fock_checks(m, level.unwrap_or(res.raw.a1), tol)?);
    }
    if matches!(kind, Suite::Reduction | Suite::All) {
        checks.extend(reduction_checks(&res, samples, seed, tol, &mut report)?);
    }
    report.checks = checks;
    Ok(report)
}

fn row_json(row: &EnumRow) -> Value {
    let r = row.raw;
    let (gamma, gamma_tilde, gamma_hat, k) = match row.predicted.params {
        Some(KksParams::I { gamma, .. }) => (Some(gamma), None, None, None),
        Some(KksParams::II { gamma, gamma_tilde, .. }) => (Some(gamma), Some(gamma_tilde), None, None),
        Some(KksParams::III { gamma, gamma_tilde, gamma_hat, k }) => (Some(gamma), Some(gamma_tilde), Some(gamma_hat), Some(k)),
        None => (None, None, None, None),
    };
    json!({
        "a1": r.a1,
        "kl1": r.kl1,
        "kl2": r.kl2,
        "kr1": r.kr1,
        "kr2": r.kr2,
        "predicted_dim": row.predicted.dimension,
        "brute_dim": row.brute_dimension,
        "state": row.predicted.state.as_ref().map(|s| s.to_string()),
        "gamma": gamma,
        "gamma_tilde": gamma_tilde,
        "gamma_hat": gamma_hat,
        "k": k,
        "a": row.couplings.map(|c| c.a),
        "b": row.couplings.map(|c| c.b),
        "c": row.couplings.map(|c| c.c),
        "C": row.couplings.map(|c| c.constant.to_string()),
    })
}

pub fn enumerate(
    case: CaseArg,
    n: usize,
    gamma_max: u64,
    a1_max: Option<u64>,
    k_max: i64,
    brute: bool,
    admissible_only: bool,
) -> Result<Report, UsageError> {
    if k_max < 0 {
        return Err(UsageError("--k-max must be non-negative".into()));
    }
    let s = scheme_for(case, n)?;
    let a1_max = a1_max.unwrap_or(gamma_max * big_modes(&s).map_err(core_err)? as u64);
    let cells = raw_grid_size(a1_max, k_max);
    if cells > CELL_CAP {
        return Err(UsageError(format!("grid has {cells} cells, above the cap of {CELL_CAP}")));
    }
    let rows = enumerate_cells(&s, &raw_grid(a1_max, k_max), brute).map_err(core_err)?;
    let mut report = Report::new("enumerate", 0);
    report.scheme = Some(SchemeInfo::from(&s));
    report.case = Some(s.case().to_string());
    report.params = Some(json!({ "a1_max": a1_max, "k_max": k_max, "gamma_max": gamma_max, "brute": brute }));

    let admissible: Vec<&EnumRow> = rows.iter().filter(|r| r.predicted.is_admissible()).collect();
    if brute {
        let bad = rows.iter().filter(|r| !r.agrees()).count();
        report.checks.push(Check::exact(
            "enumerate.agreement",
            bad == 0,
            format!("{bad} of {} cells disagree with the brute-force kernel", rows.len()),
        ));
    }
    let range_ok = admissible
        .iter()
        .all(|r| r.couplings.is_some_and(|c| coupling_attainable(s.case(), c.triple())));
    report.checks.push(Check::exact(
        "enumerate.coupling_range",
        range_ok,
        format!("{} admissible cells", admissible.len()),
    ));
    if case == CaseArg::I {
        let zero = admissible.iter().all(|r| r.raw.k_sum() == 0);
        report.checks.push(Check::exact("enumerate.zero_sum", zero, "admissible rows have kl1 + kl2 + kr1 + kr2 = 0"));
    }
    report.rows = Some(
        rows.iter()
            .filter(|r| !admissible_only || r.predicted.is_admissible())
            .map(row_json)
            .collect(),
    );
    Ok(report)
}

pub fn couplings(rep: &RepArgs) -> Result<Report, UsageError> {
    let res = resolve(rep)?;
    let mut report = Report::new("couplings", 0);
    report.scheme = Some(SchemeInfo::from(&res.scheme));
    report.case = Some(res.scheme.case().to_string());
    report.params = Some(res.to_json());
    match res.params() {
        Some(p) => {
            let c = coupling_map(&res.scheme, &p).map_err(core_err)?;
            report.checks.push(Check::exact("couplings.admissible", true, format!("{p}")));
            report.couplings = Some(c.into());
        }
        None => report.checks.push(Check::exact(
            "couplings.admissible",
            false,
            format!("inadmissible: {}", res.admissibility.violations.join("; ")),
        )),
    }
    Ok(report)
}
