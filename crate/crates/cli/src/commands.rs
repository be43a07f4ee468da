//! One function per subcommand. Each returns whether the run was conclusive.

use anyhow::{Context, Result};
use serde::Serialize;
use systole::complex::{dichotomy_check, Complex, DichotomyConfig, SlitGeometry};
use systole::flow::{build_skew_product, ergodicity_probe, ProbeConfig, ProbeVerdict};
use systole::laws::{law_report, DistanceBoundConfig, LawInputs};
use systole::number_theory::{build_table, cf_rows, veech_sum, VeechVerdict};
use systole::surface::{uniform_grid, SurfaceMode};
use systole::{build_surface, systole_trajectory, SlitTorusSurface};

use crate::config::RunConfig;
use crate::output::{num, Writer};

pub enum Outcome {
    Done,
    Inconclusive,
}

fn surface(cfg: &RunConfig) -> Result<SlitTorusSurface> {
    build_surface(&cfg.alpha, &cfg.surface_options()).context("building surface")
}

fn flow_surface(cfg: &RunConfig) -> Result<SlitTorusSurface> {
    match cfg.slit_length {
        Some(len) => SlitTorusSurface::with_slit_length(&cfg.alpha, &cfg.surface_options(), len)
            .context("building surface"),
        None => surface(cfg),
    }
}

#[derive(Serialize)]
struct CfReport {
    rows: usize,
    failures: Vec<usize>,
    inconclusive: Vec<usize>,
    all_ok: bool,
    precision_bits: u32,
    veech_terms_bounded: bool,
    veech_partial_upper: Option<f64>,
    veech: VeechVerdict,
}

pub fn cf(cfg: &RunConfig, w: &Writer) -> Result<Outcome> {
    let opts = cfg.surface_options().table;
    let table = build_table(&cfg.alpha, cfg.k_max, &opts).context("building convergent table")?;
    let rows = cf_rows(&table, 20);
    let cell = |b: Option<bool>| b.map_or(String::new(), |b| b.to_string());
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                r.a_k.map_or(String::new(), |a| a.to_string()),
                r.q_k.clone(),
                r.beta_lower.clone(),
                r.beta_upper.clone(),
                cell(r.good_bound_ok),
            ]
        })
        .collect();
    w.csv(
        "cf.csv",
        &[
            "k",
            "a_k",
            "q_k",
            "beta_lower",
            "beta_upper",
            "good_bound_ok",
        ],
        &csv_rows,
    )?;
    let failures: Vec<usize> = rows
        .iter()
        .filter(|r| r.good_bound_ok == Some(false))
        .map(|r| r.k)
        .collect();
    let inconclusive: Vec<usize> = rows
        .iter()
        .filter(|r| r.good_bound_ok.is_none())
        .map(|r| r.k)
        .collect();
    let v = veech_sum(&cfg.alpha, &table, 1e-3);
    let report = CfReport {
        rows: rows.len(),
        all_ok: failures.is_empty() && inconclusive.is_empty(),
        failures,
        precision_bits: table.precision(),
        veech_terms_bounded: v.terms_bounded,
        veech_partial_upper: v.partial.last().map(|i| i.to_f64_bounds().1),
        veech: v.verdict,
        inconclusive,
    };
    w.json("cf_report.json", &report)?;
    Ok(if report.inconclusive.is_empty() {
        Outcome::Done
    } else {
        Outcome::Inconclusive
    })
}

pub fn surface_cmd(cfg: &RunConfig, w: &Writer) -> Result<Outcome> {
    w.json("surface.json", &surface(cfg)?.descriptor())?;
    Ok(Outcome::Done)
}

fn trajectory(cfg: &RunConfig) -> Result<systole::surface::SystoleTrajectory> {
    let s = surface(cfg)?;
    let grid = uniform_grid(cfg.grid.start, cfg.grid.end, cfg.grid.step);
    systole_trajectory(&s, &grid).context("evaluating systole trajectory")
}

pub fn systole_cmd(cfg: &RunConfig, w: &Writer) -> Result<Outcome> {
    let tr = trajectory(cfg)?;
    let pair = |l: Option<systole::LogInterval>| match l {
        Some(l) => (num(l.lo.exp()), num(l.hi.exp())),
        None => (String::new(), String::new()),
    };
    let rows: Vec<Vec<String>> = tr
        .samples
        .iter()
        .map(|s| {
            let (lo, hi) = pair(Some(s.delta));
            let (slo, shi) = pair(s.delta_sep);
            let (nlo, nhi) = pair(s.delta_nonsep);
            let (fam, k) = s.argmin.map_or((String::new(), String::new()), |a| {
                (a.family.name().to_string(), a.k.to_string())
            });
            vec![num(s.t), lo, hi, slo, shi, nlo, nhi, fam, k]
        })
        .collect();
    let header = [
        "t",
        "delta_lo",
        "delta_hi",
        "delta_sep_lo",
        "delta_sep_hi",
        "delta_nonsep_lo",
        "delta_nonsep_hi",
        "argmin_family",
        "argmin_k",
    ];
    w.csv("systole.csv", &header, &rows)?;
    Ok(Outcome::Done)
}

pub fn laws(cfg: &RunConfig, w: &Writer) -> Result<Outcome> {
    let tr = trajectory(cfg)?;
    let inp = LawInputs {
        lambdas: &cfg.lambdas,
        burn_in: cfg.burn_in,
        divergence: &cfg.divergence,
        distance: &DistanceBoundConfig {
            k2: cfg.k2,
            t0: cfg.distance_t0,
        },
    };
    let mut rep = law_report(&tr, &inp).context("law analysis")?;
    rep.integral = thin(&rep.integral, INTEGRAL_ROWS);
    w.json("laws.json", &rep)?;
    Ok(Outcome::Done)
}

const INTEGRAL_ROWS: usize = 1000;

/// Every `ceil(len / max)`-th entry, the last one always kept.
fn thin<T: Clone>(v: &[T], max: usize) -> Vec<T> {
    let stride = v.len().div_ceil(max).max(1);
    let mut out: Vec<T> = v.iter().step_by(stride).cloned().collect();
    if !(v.len() - 1).is_multiple_of(stride) {
        out.extend(v.last().cloned());
    }
    out
}

#[derive(Serialize)]
struct ProbeSummary {
    n: u64,
    gaps: Vec<(u64, f64)>,
    flip_frequency: Vec<f64>,
    verdict: ProbeVerdict,
}

pub fn ergodicity(cfg: &RunConfig, w: &Writer) -> Result<Outcome> {
    let p = &cfg.probe;
    let s = flow_surface(cfg)?;
    let iet = build_skew_product(&s, p.n).context("building skew product")?;
    let starts: Vec<_> = p
        .starts
        .iter()
        .map(|st| iet.state(st.x, st.sheet))
        .collect();
    let pc = ProbeConfig {
        n_min: p.n_min,
        nonergodic_gap: p.nonergodic_gap,
        ergodic_gap: p.ergodic_gap,
    };
    let rep = ergodicity_probe(&iet, &starts, p.n, &pc).context("ergodicity probe")?;
    let mut rows = Vec::new();
    for (st, run) in p.starts.iter().zip(&rep.runs) {
        for &(n, avg) in &run.checkpoints {
            rows.push(vec![
                num(st.x),
                st.sheet.to_string(),
                n.to_string(),
                num(avg),
            ]);
        }
    }
    w.csv(
        "ergodicity.csv",
        &["start_x", "start_sheet", "checkpoint_n", "average"],
        &rows,
    )?;
    let summary = ProbeSummary {
        n: p.n,
        gaps: rep.gaps.clone(),
        flip_frequency: rep.runs.iter().map(|r| r.flip_frequency).collect(),
        verdict: rep.verdict,
    };
    w.json("ergodicity.json", &summary)?;
    Ok(Outcome::Done)
}

pub fn certify(cfg: &RunConfig, w: &Writer) -> Result<Outcome> {
    let c = &cfg.certificate;
    anyhow::ensure!(
        cfg.mode == SurfaceMode::Slit,
        "certify needs the slit surface"
    );
    let s = flow_surface(cfg)?;
    let g = SlitGeometry::from_surface(&s)?;
    let iet = build_skew_product(&s, c.step_cap).context("building skew product")?;
    let cx = Complex::horizontal(&g, c.t, &c.cut, &c.strips).context("building complex")?;
    let dc = DichotomyConfig {
        samples: c.samples,
        seed: cfg.seed,
        step_cap: c.step_cap,
    };
    let rep = dichotomy_check(&iet, &cx, c.n, &dc).context("dichotomy check")?;
    w.json("certify.json", &rep)?;
    Ok(Outcome::Done)
}
