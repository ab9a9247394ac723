//! Plot-ready tables: drift identity, distance-law ladder, rate feasibility.

use std::process::ExitCode;

use bmcouple::couplings::{rotation_cos_alpha, Coupling, Strategy};
use bmcouple::spaces::{gc, gs, Curvature, SpaceSpec};
use bmcouple::verify::checks::{default_drift_grid, drift_identity_check};
use bmcouple::verify::suites::{law_cases, SuiteOptions};
use bmcouple::Error;
use clap::{Args, ValueEnum};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Kind {
    DriftIdentity,
    DistanceLaws,
    Feasibility,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Markdown,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    kind: Kind,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Comma-separated curvature signs, e.g. `-1,0,1`.
    #[arg(long, allow_hyphen_values = true)]
    curvatures: Option<String>,
    #[arg(long)]
    dims: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alphas: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    rhos: Option<String>,
    /// Rates for the feasibility map.
    #[arg(long, allow_hyphen_values = true)]
    ks: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

fn list<T: std::str::FromStr>(name: &str, arg: &Option<String>, default: Vec<T>) -> Result<Vec<T>, Error> {
    let Some(text) = arg else { return Ok(default) };
    let items: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(Error::Config(format!("--{name} is an empty grid")));
    }
    items
        .into_iter()
        .map(|s| s.parse().map_err(|_| Error::Config(format!("--{name}: cannot parse `{s}`"))))
        .collect()
}

fn curvatures(arg: &Option<String>) -> Result<Vec<Curvature>, Error> {
    list::<i32>("curvatures", arg, vec![-1, 0, 1])?
        .into_iter()
        .map(|r| Curvature::from_sign(r).map_err(|e| Error::Config(e.to_string())))
        .collect()
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = self.header.join(",") + "\n";
                for r in &self.rows {
                    s += &(r.join(",") + "\n");
                }
                s
            }
            Format::Markdown => {
                let mut s = format!("| {} |\n", self.header.join(" | "));
                s += &format!("|{}\n", "---|".repeat(self.header.len()));
                for r in &self.rows {
                    s += &format!("| {} |\n", r.join(" | "));
                }
                s
            }
        }
    }
}

fn drift_table(args: &TableArgs) -> anyhow::Result<Table> {
    let (r0, d0, a0, p0) = default_drift_grid();
    let rs = if args.curvatures.is_some() { curvatures(&args.curvatures)? } else { r0 };
    let ds = list("dims", &args.dims, d0)?;
    let alphas = list("alphas", &args.alphas, a0)?;
    let rhos = list("rhos", &args.rhos, p0)?;
    let report = drift_identity_check(&rs, &ds, &alphas, &rhos, 1e-6)?;
    Ok(Table {
        header: vec!["r", "d", "alpha", "rho", "formula", "index_form", "rel_err"],
        rows: report
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.curvature.to_string(),
                    r.dim.to_string(),
                    r.alpha.to_string(),
                    r.rho.to_string(),
                    r.formula.to_string(),
                    r.quadrature.to_string(),
                    format!("{:e}", r.rel_err),
                ]
            })
            .collect(),
    })
}

fn law_table(args: &TableArgs) -> anyhow::Result<Table> {
    let seed = args.seed.unwrap_or(SuiteOptions::default().seed);
    let mut rows = Vec::new();
    for case in law_cases()? {
        let report = case.run(seed)?;
        let order = report.fitted_order.map_or("".into(), |p| p.to_string());
        for (i, h) in report.h_ladder.iter().enumerate() {
            rows.push(vec![
                case.name.to_string(),
                report.strategy.clone(),
                report.law.clone(),
                h.to_string(),
                report.sup_err[i].to_string(),
                report.mean_path_sup_err[i].to_string(),
                order.clone(),
            ]);
        }
    }
    Ok(Table {
        header: vec!["case", "strategy", "law", "h", "sup_err", "mean_path_sup_err", "fitted_order"],
        rows,
    })
}

fn feasibility_table(args: &TableArgs) -> anyhow::Result<Table> {
    let rs = curvatures(&args.curvatures)?;
    let ds = list("dims", &args.dims, vec![2usize, 3, 5])?;
    let ks = list("ks", &args.ks, vec![-4.0, -2.0, -1.0, 0.0, 0.5, 1.0, 2.0, 4.0])?;
    let rhos = list("rhos", &args.rhos, vec![0.25, 0.5, 1.0, 2.0, 3.0])?;
    let mut rows = Vec::new();
    for &r in &rs {
        for &d in &ds {
            let space = SpaceSpec::new(r, d).map_err(|e| Error::Config(e.to_string()))?;
            let d1 = (d - 1) as f64;
            for &k in &ks {
                let constructible = Coupling::new(space, Strategy::rotation(k)).is_ok();
                for &rho in &rhos {
                    if !(rho > 0.0 && rho < space.diameter()) {
                        return Err(Error::Config(format!("rho = {rho} outside (0, {})", space.diameter())).into());
                    }
                    let cos_alpha = rotation_cos_alpha(&space, k, rho);
                    let pointwise = (-1.0..=1.0).contains(&cos_alpha);
                    // |cos α| <= 1 at this ρ is k ∈ [k_lo, k_hi].
                    let scale = 2.0 * d1 / (rho * gs(r, rho));
                    let (k_lo, k_hi) = (scale * (-1.0 - gc(r, rho)), scale * (1.0 - gc(r, rho)));
                    rows.push(vec![
                        r.value().to_string(),
                        d.to_string(),
                        k.to_string(),
                        rho.to_string(),
                        cos_alpha.to_string(),
                        k_lo.to_string(),
                        k_hi.to_string(),
                        pointwise.to_string(),
                        constructible.to_string(),
                        (pointwise && constructible).to_string(),
                    ]);
                }
            }
        }
    }
    Ok(Table {
        header: vec![
            "r", "d", "k", "rho", "cos_alpha", "k_lo", "k_hi", "angle_exists", "constructible", "admits_coupling",
        ],
        rows,
    })
}

pub fn run(args: &TableArgs) -> anyhow::Result<ExitCode> {
    let table = match args.kind {
        Kind::DriftIdentity => drift_table(args)?,
        Kind::DistanceLaws => law_table(args)?,
        Kind::Feasibility => feasibility_table(args)?,
    };
    print!("{}", table.render(args.format));
    Ok(ExitCode::SUCCESS)
}
