mod args;
mod grid;

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use args::{
    AssembleArgs, ClassifyArgs, Cli, Command, CompareArgs, DensityArgs, Exponents, Format, Oracle,
    Output, Points, VolumeArgs,
};
use grid::parse_grid;
use monopush::monomial::{density_unit_cube_extended, signed_cube_density};
use monopush::oracle::{
    compare, mc_histogram_with, quadrature_volume, HistogramConfig, Spacing, Z_THRESHOLD,
};
use monopush::{
    assemble_bin_averages, assemble_density, classify, AtomSet, BoxAtom, DensityProfile, EvalPath,
    ExponentData, FrsCase, Spectrum,
};

/// Exit status 1: a statistical or numerical check failed.
/// Exit status 2: bad usage or a violated precondition.
enum Failure {
    Usage(String),
    Validation(String),
}

impl From<monopush::Error> for Failure {
    fn from(e: monopush::Error) -> Self {
        match e {
            monopush::Error::NonConvergence { .. } => Failure::Validation(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Classify(a) => cmd_classify(a),
        Command::Density(a) => cmd_density(a),
        Command::Volume(a) => cmd_volume(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Assemble(a) => cmd_assemble(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("monopush: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("monopush: {msg}");
            ExitCode::from(2)
        }
    }
}

fn exponents(e: &Exponents) -> Result<ExponentData, Failure> {
    Ok(ExponentData::new(e.a.clone(), e.b.clone())?)
}

fn points(p: &Points) -> Result<Vec<f64>, Failure> {
    match (&p.q, &p.grid) {
        (Some(q), None) => Ok(vec![*q]),
        (None, Some(g)) => parse_grid(g).map_err(Failure::Usage),
        _ => Err(Failure::Usage("give exactly one of --q or --grid".into())),
    }
}

fn write_output(out: &Output, content: &str) -> CmdResult {
    match &out.out {
        Some(path) => fs::write(path, content)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn number(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

fn cmd_classify(args: ClassifyArgs) -> CmdResult {
    let e = exponents(&args.exponents)?;
    let v = classify(&e)?;
    let case = format!("{:?}", v.frs_case);
    let parity = format!("{:?}", v.parity);
    let warning = (v.frs_case == FrsCase::Outside)
        .then_some("exponents satisfy neither continuity condition");
    let text = match args.format {
        Format::Json => {
            let mut record = json!({
                "A": e.a(),
                "B": e.b(),
                "frs_case": case,
                "distinguished_axis": v.distinguished_axis,
                "parity": parity,
                "limit_at_zero": number(v.limit_at_zero),
                "leading_exponents": {
                    "power": v.leading_exponents.power,
                    "log_power": v.leading_exponents.log_power,
                },
                "continuous": v.is_continuous(),
            });
            if let Some(w) = warning {
                record["warning"] = json!(w);
            }
            format!("{}\n", serde_json::to_string_pretty(&record).expect("record serializes"))
        }
        Format::Csv => format!(
            "frs_case,distinguished_axis,parity,limit_at_zero,leading_power,leading_log_power,warning\n{case},{},{parity},{},{},{},{}\n",
            v.distinguished_axis.map(|k| k.to_string()).unwrap_or_default(),
            v.limit_at_zero,
            v.leading_exponents.power,
            v.leading_exponents.log_power,
            warning.unwrap_or_default(),
        ),
    };
    print!("{text}");
    Ok(())
}

fn write_profile(profile: &DensityProfile, out: &Output, plot: bool) -> CmdResult {
    if plot && (out.out.is_none() || out.format != Format::Csv) {
        return Err(Failure::Usage("--plot needs --out with CSV output".into()));
    }
    let text = match out.format {
        Format::Csv => profile.to_csv(),
        Format::Json => format!("{}\n", profile.to_json()),
    };
    write_output(out, &text)?;
    if plot {
        let csv = out.out.as_ref().expect("checked above");
        write_plot_script(csv)?;
    }
    Ok(())
}

fn write_plot_script(csv: &Path) -> CmdResult {
    let script = csv.with_extension("py");
    let png = csv.with_extension("png");
    let name = |p: &Path| {
        p.file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    let text = format!(
        r#""""Plot the density profile {csv_name}."""
import csv
import math
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
q, rho = [], []
with open(here / {csv_name:?}) as fh:
    for row in csv.DictReader(fh):
        value = float(row["density"])
        if math.isfinite(value):
            q.append(float(row["q"]))
            rho.append(value)

fig, ax = plt.subplots()
ax.plot(q, rho, marker=".")
ax.set_xlabel("q")
ax.set_ylabel("density")
fig.savefig(here / {png_name:?}, dpi=150)
"#,
        csv_name = name(csv),
        png_name = name(&png),
    );
    fs::write(&script, text)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", script.display())))
}

fn cmd_density(args: DensityArgs) -> CmdResult {
    let e = exponents(&args.exponents)?;
    let grid = points(&args.points)?;
    let spec = Spectrum::from_exponents(&e)?;
    let in_domain = |q: f64| q < 1.0 && if args.signed { q > -1.0 } else { q >= 0.0 };
    if let Some(q) = grid.iter().find(|&&q| !in_domain(q)) {
        let domain = if args.signed { "(-1, 1)" } else { "[0, 1)" };
        return Err(Failure::Usage(format!("q = {q} outside {domain}")));
    }
    let evaluated = grid
        .iter()
        .map(|&q| {
            if args.signed {
                signed_cube_density(&e, &spec, q, true)
            } else {
                density_unit_cube_extended(&spec, q)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let profile = DensityProfile::new(
        grid,
        evaluated.iter().map(|r| r.value).collect(),
        evaluated.iter().map(|r| r.path).collect(),
    )?;
    write_profile(&profile, &args.output, args.plot)
}

fn cmd_volume(args: VolumeArgs) -> CmdResult {
    let e = exponents(&args.exponents)?;
    let grid = points(&args.points)?;
    let spec = Spectrum::from_exponents(&e)?;
    if let Some(q) = grid.iter().find(|&&q| !(0.0..=1.0).contains(&q)) {
        return Err(Failure::Usage(format!("q = {q} outside [0, 1]")));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &q in &grid {
        let (v, path) = if q == 0.0 {
            (e.unit_cube_mass(), EvalPath::Limit)
        } else if q == 1.0 {
            (0.0, EvalPath::Outside)
        } else {
            let r = spec.volume(q)?;
            (r.value, r.path)
        };
        rows.push((q, v, path));
    }
    let text = match args.output.format {
        Format::Csv => {
            let mut s = String::from("q,volume,path\n");
            for (q, v, p) in &rows {
                s.push_str(&format!("{q},{v},{p}\n"));
            }
            s
        }
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&json!({
                "grid": rows.iter().map(|r| r.0).collect::<Vec<_>>(),
                "values": rows.iter().map(|r| r.1).collect::<Vec<_>>(),
                "paths": rows.iter().map(|r| r.2).collect::<Vec<_>>(),
            }))
            .expect("volume serializes")
        ),
    };
    write_output(&args.output, &text)
}

fn cmd_compare(args: CompareArgs) -> CmdResult {
    let e = exponents(&args.exponents)?;
    match args.oracle {
        Oracle::Quadrature => compare_quadrature(&e, &args),
        Oracle::Mc => compare_mc(e, &args),
    }
}

fn compare_quadrature(e: &ExponentData, args: &CompareArgs) -> CmdResult {
    let grid = parse_grid(&args.grid).map_err(Failure::Usage)?;
    let spec = Spectrum::from_exponents(e)?;
    let mut rows = Vec::new();
    for &q in &grid {
        let quad = quadrature_volume(e, q, args.resolution)?;
        let v = spec.volume(q)?.value;
        rows.push((
            q,
            v,
            quad.value,
            quad.error,
            (v - quad.value).abs() <= quad.error,
        ));
    }
    let within = rows.iter().filter(|r| r.4).count();
    let text = match args.output.format {
        Format::Csv => {
            let mut s = String::from("q,volume,quadrature,error,within\n");
            for (q, v, qv, err, ok) in &rows {
                s.push_str(&format!("{q},{v},{qv},{err},{ok}\n"));
            }
            s
        }
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&json!({
                "points": rows.iter().map(|r| json!({
                    "q": r.0, "volume": r.1, "quadrature": r.2, "error": r.3, "within": r.4,
                })).collect::<Vec<_>>(),
                "passed": within == rows.len(),
            }))
            .expect("report serializes")
        ),
    };
    write_output(&args.output, &text)?;
    eprintln!(
        "compare: {within}/{} points within the quadrature error",
        rows.len()
    );
    if within == rows.len() {
        Ok(())
    } else {
        Err(Failure::Validation(
            "closed form and quadrature disagree".into(),
        ))
    }
}

fn compare_mc(e: ExponentData, args: &CompareArgs) -> CmdResult {
    let (Some(samples), Some(seed), Some(bins)) = (args.samples, args.seed, args.bins) else {
        return Err(Failure::Usage(
            "Monte Carlo comparison needs --samples, --seed and --bins".into(),
        ));
    };
    let atom = if args.signed {
        BoxAtom::signed_cube(e)
    } else {
        BoxAtom::unit_cube(e)
    };
    let atoms = AtomSet::single(atom);
    let mut config = HistogramConfig::new(samples, seed, bins);
    if args.log_bins {
        config = config.with_spacing(Spacing::Log);
    }
    let hist = mc_histogram_with(&atoms, &config)?;
    if let Some(path) = &args.histogram {
        fs::write(path, hist.to_csv())
            .map_err(|err| Failure::Usage(format!("cannot write {}: {err}", path.display())))?;
    }
    let expected = match &args.profile {
        Some(path) => DensityProfile::from_csv(&read(path)?)?,
        None => assemble_bin_averages(&atoms, &hist.bin_edges)?,
    };
    let report = compare(&expected, &hist)?;
    let text = match args.output.format {
        Format::Csv => report.to_csv(),
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&report).expect("report serializes")
        ),
    };
    write_output(&args.output, &text)?;
    let scored = report.bins.iter().filter(|b| b.scored).count();
    let pass = report
        .bins
        .iter()
        .filter(|b| b.scored && b.z.abs() <= Z_THRESHOLD)
        .count();
    eprintln!(
        "compare: {} {pass}/{scored} scored bins within {Z_THRESHOLD} sigma, max |z| = {:.3}, {} sparse bins skipped",
        if report.passed { "PASS" } else { "FAIL" },
        report.max_abs_z,
        report.bins.len() - scored,
    );
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Validation(format!(
            "only {:.1}% of bins within 5 sigma",
            100.0 * report.pass_fraction
        )))
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn cmd_assemble(args: AssembleArgs) -> CmdResult {
    let text = read(&args.atoms)?;
    let atoms = AtomSet::from_json(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", args.atoms.display())))?;
    let grid = points(&args.points)?;
    let profile = assemble_density(&atoms, &grid)?;
    write_profile(&profile, &args.output, args.plot)
}
