use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "monopush",
    version,
    about = "Densities of monomial pushforwards"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify continuity of the density at q = 0.
    Classify(ClassifyArgs),
    /// Evaluate the density on a point or grid.
    Density(DensityArgs),
    /// Evaluate the upper-tail volume V(q) on a point or grid.
    Volume(VolumeArgs),
    /// Check the closed forms against an independent oracle.
    Compare(CompareArgs),
    /// Assemble the density of a signed sum of box atoms.
    Assemble(AssembleArgs),
}

#[derive(Args, Debug)]
pub struct Exponents {
    /// Map exponents, comma separated.
    #[arg(long = "A", value_name = "a1,a2,...", value_delimiter = ',', value_parser = parse_number, required = true, allow_hyphen_values = true)]
    pub a: Vec<f64>,
    /// Measure exponents, comma separated.
    #[arg(long = "B", value_name = "b1,b2,...", value_delimiter = ',', value_parser = parse_number, required = true, allow_hyphen_values = true)]
    pub b: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct Points {
    /// A single evaluation point.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "grid")]
    pub q: Option<f64>,
    /// Grid `start:stop:count[:log]`, endpoints included.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
}

#[derive(Args, Debug)]
pub struct Output {
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Oracle {
    Mc,
    Quadrature,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub exponents: Exponents,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct DensityArgs {
    #[command(flatten)]
    pub exponents: Exponents,
    #[command(flatten)]
    pub points: Points,
    /// Use the cube [-1, 1]^n with weight |x^B| instead of [0, 1]^n.
    #[arg(long)]
    pub signed: bool,
    #[command(flatten)]
    pub output: Output,
    /// Also write a plotting script next to the CSV given by --out.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Args, Debug)]
pub struct VolumeArgs {
    #[command(flatten)]
    pub exponents: Exponents,
    #[command(flatten)]
    pub points: Points,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub exponents: Exponents,
    #[arg(long, value_enum, default_value_t = Oracle::Mc)]
    pub oracle: Oracle,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Sample the signed cube [-1, 1]^n.
    #[arg(long)]
    pub signed: bool,
    /// Geometric bin edges.
    #[arg(long)]
    pub log_bins: bool,
    /// Compare this profile CSV instead of the closed-form bin averages.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Also write the histogram as CSV.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    /// Grid for quadrature mode.
    #[arg(long, default_value = "0.05:0.95:19")]
    pub grid: String,
    /// Midpoints per axis for quadrature mode.
    #[arg(long, default_value_t = 128)]
    pub resolution: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct AssembleArgs {
    /// JSON array of atoms `{coeff, box, A, B}`.
    #[arg(long)]
    pub atoms: PathBuf,
    #[command(flatten)]
    pub points: Points,
    #[command(flatten)]
    pub output: Output,
    /// Also write a plotting script next to the CSV given by --out.
    #[arg(long)]
    pub plot: bool,
}

fn parse_number(s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| format!("`{s}` is not a number: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_parse() {
        let cli =
            Cli::try_parse_from(["monopush", "classify", "--A", "1,2, 3.5", "--B", "-0.5,0,1"])
                .unwrap();
        let Command::Classify(c) = cli.command else {
            panic!()
        };
        assert_eq!(c.exponents.a, vec![1.0, 2.0, 3.5]);
        assert_eq!(c.exponents.b, vec![-0.5, 0.0, 1.0]);
        assert!(Cli::try_parse_from(["monopush", "classify", "--A", "1,x", "--B", "0,0"]).is_err());
        assert!(Cli::try_parse_from(["monopush", "classify", "--B", "0"]).is_err());
    }
}
