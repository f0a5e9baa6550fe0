use super::{Artifact, Command, Produced, RunConfig};
use crate::counterexample::{construct, default_f0, export_figure_grid, sharpness_f0, CounterexampleParams};
use crate::density_core::{hellinger_sq_densities, Density, QuadConfig};
use crate::distances::{
    distance_sweep, gwn_tv_from_h2, limiting_deficiency_constant, pointwise_rate, product_hellinger_sq,
    product_tv_upper, deficiency_rate,
};
use crate::experiments::{estimate_tv, Model};
use crate::norms::{norm_report, within_radius, DEFAULT_NORM_GRID};
use crate::output::Table;
use crate::parametric::{fisher_information, hellinger_sq_location, metric_dimension_certificate, qmd_remainder};
use crate::Result;

pub(super) fn dispatch(c: &RunConfig) -> Result<Produced> {
    match c.command {
        Command::Construct => construct_cmd(c),
        Command::DeficiencyTable => deficiency_table(c),
        Command::McValidate => mc_validate(c),
        Command::NormsCheck => norms_check(c),
        Command::ParametricCheck => parametric_check(c),
        Command::Rates => rates(c),
    }
}

fn params(c: &RunConfig, n: u64) -> CounterexampleParams {
    let p = CounterexampleParams::new(c.beta, n);
    match c.radius {
        Some(r) => p.with_radius(r),
        None => p,
    }
}

fn table(stem: &str, table: Table) -> Artifact {
    Artifact::Table {
        stem: stem.into(),
        table,
    }
}

fn construct_cmd(c: &RunConfig) -> Result<Produced> {
    let r = construct(&params(c, c.n))?;
    let gf = r.gamma * r.f_mass;
    let value = serde_json::to_value(r.summary()).expect("summary is serializable");
    Ok(Produced {
        artifacts: vec![
            Artifact::Json {
                stem: "construct".into(),
                value,
            },
            table("figure", export_figure_grid(&r, 2001)?),
        ],
        messages: vec![format!(
            "x0={:.6e} x1={:.6e} x2={:.6e} F={:.6e} gamma={:.6} gammaF={:.6e} (3/(2n)={:.6e}) c_band={:.4}",
            r.x0,
            r.x1,
            r.x2,
            r.f_mass,
            r.gamma,
            gf,
            1.5 / c.n as f64,
            r.c_band
        )],
        validation_failure: None,
    })
}

fn deficiency_table(c: &RunConfig) -> Result<Produced> {
    let (t, reports) = distance_sweep(
        |n| {
            let r = construct(&params(c, n))?;
            Ok((r.f1, r.f2))
        },
        &c.n_grid,
    )?;
    let last = reports.last().expect("non-empty grid");
    let mut messages = vec![format!(
        "deficiency lower bound at n={}: {:.6} (limit constant 1/2 e^(-3/2)(1 - sqrt(e/pi)) = {:.7})",
        last.n,
        last.deficiency_lb,
        limiting_deficiency_constant()
    )];
    let validation_failure = (last.deficiency_lb < 0.007)
        .then(|| format!("deficiency lower bound {:.6} < 0.007 at n={}", last.deficiency_lb, last.n));
    if validation_failure.is_none() {
        messages.push("deficiency lower bound >= 0.007 at the largest n".into());
    }
    Ok(Produced {
        artifacts: vec![table("deficiency_table", t)],
        messages,
        validation_failure,
    })
}

fn mc_validate(c: &RunConfig) -> Result<Produced> {
    let mut t = Table::new([
        "n",
        "tv_gwn_mc",
        "tv_gwn_se",
        "tv_gwn_closed",
        "tv_density_mc",
        "tv_density_se",
        "tv_density_upper",
        "tv_density_lower",
        "gwn_ok",
        "density_ok",
    ]);
    let mut failures = Vec::new();
    let cfg = QuadConfig::default();
    for &n in &c.n_grid {
        let r = construct(&params(c, n))?;
        let h2 = hellinger_sq_densities(&r.f1, &r.f2, &cfg)?;
        let closed = gwn_tv_from_h2(h2, n);
        let gwn = estimate_tv(Model::Gwn { grid_m: c.grid_m }, &r.f1, &r.f2, n, c.reps, c.seed)?;
        let dens = estimate_tv(Model::Density, &r.f1, &r.f2, n, c.reps, c.seed)?;
        let upper = product_tv_upper(r.gamma * r.f_mass, n)?;
        let lower = 0.5 * product_hellinger_sq(h2, n)?;
        let gwn_ok = (gwn.value - closed).abs() <= 4.0 * gwn.std_error;
        let dens_ok = dens.value <= upper + 4.0 * dens.std_error && dens.value >= lower - 4.0 * dens.std_error;
        if !gwn_ok {
            failures.push(format!("n={n}: gwn estimate {:.4} vs closed form {closed:.4}", gwn.value));
        }
        if !dens_ok {
            failures.push(format!("n={n}: density estimate {:.4} outside [{lower:.4}, {upper:.4}]", dens.value));
        }
        t.push(vec![
            n as f64,
            gwn.value,
            gwn.std_error,
            closed,
            dens.value,
            dens.std_error,
            upper,
            lower,
            gwn_ok as u8 as f64,
            dens_ok as u8 as f64,
        ]);
    }
    Ok(Produced {
        artifacts: vec![table("mc_validate", t)],
        messages: vec![format!("{} sample sizes, {} replications each", c.n_grid.len(), c.reps)],
        validation_failure: (!failures.is_empty()).then(|| failures.join("; ")),
    })
}

fn norms_check(c: &RunConfig) -> Result<Produced> {
    let r = construct(&params(c, c.n))?;
    let mut t = Table::new([
        "j", "beta", "sup_norm", "top_deriv_sup", "holder_semi", "flat_semi", "h_norm", "bound", "member",
    ]);
    let mut failures = Vec::new();
    for (j, d) in [&r.f0, &r.f1, &r.f2].into_iter().enumerate() {
        let rep = norm_report(d, c.beta, DEFAULT_NORM_GRID)?;
        let bound = if j == 0 { r.radius } else { r.c_band * r.radius };
        let member = within_radius(rep.h_norm, bound);
        if !member {
            failures.push(format!("f{j}: ||f||_H = {} > {bound}", rep.h_norm));
        }
        t.push(vec![
            j as f64,
            c.beta,
            rep.sup_norm,
            rep.top_deriv_sup,
            rep.holder_semi,
            rep.flat_semi,
            rep.h_norm,
            bound,
            member as u8 as f64,
        ]);
    }
    Ok(Produced {
        artifacts: vec![table("norms_check", t)],
        messages: vec![format!("R={} c_band={:.4} (C_emp={:.4})", r.radius, r.c_band, r.c_emp)],
        validation_failure: (!failures.is_empty()).then(|| failures.join("; ")),
    })
}

fn parametric_check(_c: &RunConfig) -> Result<Produced> {
    let cfg = QuadConfig::new(1e-13, 60, 8)?;
    let mut failures = Vec::new();

    let mut fisher = Table::new(["theta", "fisher", "reference"]);
    for theta in [0.1, 0.2, 0.3] {
        let v = fisher_information(theta, &cfg)?;
        if (v - 160.0).abs() > 1e-6 {
            failures.push(format!("fisher({theta}) = {v}"));
        }
        fisher.push(vec![theta, v, 160.0]);
    }

    let mut hell = Table::new(["delta", "closed_form", "numeric", "abs_diff"]);
    for k in 1..=20 {
        let d = 0.01 * k as f64;
        let (cf, q) = hellinger_sq_location(0.1, 0.1 + d)?;
        if (cf - q).abs() > 1e-8 {
            failures.push(format!("hellinger(delta={d}) closed {cf} vs numeric {q}"));
        }
        hell.push(vec![d, cf, q, (cf - q).abs()]);
    }

    // The remainder is reported against both h^4 and h^3 scalings.
    let mut qmd = Table::new(["theta", "h", "remainder", "ratio_h4", "ratio_h3"]);
    for theta in [0.1, 0.2] {
        for h in [0.02, 0.01, 0.005] {
            let r = qmd_remainder(theta, h, &cfg)?;
            qmd.push(vec![theta, h, r, r / h.powi(4), r / h.powi(3)]);
        }
    }

    let mut metric = Table::new(["lo", "hi", "c_tilde", "d_bound"]);
    for (lo, hi) in [(0.1, 0.4), (0.05, 0.45), (0.2, 0.3)] {
        let m = metric_dimension_certificate((lo, hi))?;
        metric.push(vec![lo, hi, m.c_tilde, m.d_bound]);
    }

    Ok(Produced {
        artifacts: vec![
            table("parametric_fisher", fisher),
            table("parametric_hellinger", hell),
            table("parametric_qmd", qmd),
            table("parametric_metric", metric),
        ],
        messages: vec!["fisher information = 160 at theta = 0.1, 0.2, 0.3".into()],
        validation_failure: (!failures.is_empty()).then(|| failures.join("; ")),
    })
}

fn rates(c: &RunConfig) -> Result<Produced> {
    let beta = c.beta;
    let mut pointwise = Table::new(["n", "f_zero", "f_boundary", "f_one"]);
    let mut deficiency = Table::new([
        "n",
        "uniform",
        "power",
        "power_divergent",
        "shifted_power",
        "m_n",
    ]);
    let power = default_f0(beta)?;
    let uniform = Density::uniform();
    let mut warning = None;
    for &n in &c.n_grid {
        let boundary = (n as f64).powf(-beta / (beta + 1.0));
        pointwise.push(vec![
            n as f64,
            pointwise_rate(0.0, n, beta)?,
            pointwise_rate(boundary, n, beta)?,
            pointwise_rate(1.0, n, beta)?,
        ]);
        let m_n = (n as f64).ln().powi(8);
        let u = deficiency_rate(&uniform, beta, n)?;
        let p = deficiency_rate(&power, beta, n)?;
        let s = deficiency_rate(&sharpness_f0(beta, n, m_n)?, beta, n)?;
        warning = warning.or(u.warning.clone());
        deficiency.push(vec![n as f64, u.value, p.value, p.divergent as u8 as f64, s.value, m_n]);
    }
    let mut messages = vec![format!("rates for beta = {beta}")];
    messages.extend(warning);
    Ok(Produced {
        artifacts: vec![table("rates_pointwise", pointwise), table("rates_deficiency", deficiency)],
        messages,
        validation_failure: None,
    })
}
