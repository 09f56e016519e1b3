use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use laborscape::config::PipelineConfig;
use laborscape::crosswalk;
use laborscape::dataset::{
    load_city_attributes, validate_join, CityAttributes, EmploymentTable, IndustryTable, RiskTable,
};
use laborscape::metrics;
use laborscape::occspace;
use laborscape::regress::{self, RegressionSpec, RESULT_CSV_HEADER};
use laborscape::report::{self, ErrorKind, PipelineError};
use laborscape::structure;

#[derive(Parser)]
#[command(
    name = "laborscape",
    version,
    about = "Automation-impact analysis of regional job markets"
)]
struct Cli {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Emit machine-readable JSON where supported.
    #[arg(long, global = true)]
    json: bool,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// k-means seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Proximity threshold override.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// RCA advantage cutoff override.
    #[arg(long, global = true)]
    cutoff: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that employment, risk, and attribute inputs align.
    Validate,
    /// Aggregate annotator votes into a crosswalk and transfer risk.
    Crosswalk {
        /// Votes file (`target_code,source_code,votes`); defaults to the config entry.
        #[arg(long)]
        votes: Option<PathBuf>,
        /// Minimum votes to keep a match without adjudication.
        #[arg(long)]
        vote_threshold: Option<u32>,
        /// Adjudication decisions (`target_code,source_code`).
        #[arg(long)]
        resolutions: Option<PathBuf>,
        /// Source-taxonomy risk table to transfer onto the targets.
        #[arg(long)]
        source_risk: Option<PathBuf>,
        /// Target codes to force to zero risk, one per line.
        #[arg(long)]
        zero_override: Option<PathBuf>,
    },
    /// Run the full pipeline and write the report directory.
    Report,
    /// Print one metric table.
    Metric {
        #[arg(value_enum)]
        name: MetricName,
        /// Restrict scaling output to one occupation code.
        #[arg(long)]
        occupation: Option<String>,
        /// City division for grouped output.
        #[arg(long, value_enum)]
        group: Option<Scheme>,
    },
    /// Build or export the occupation-space network.
    Occspace {
        #[command(subcommand)]
        action: OccspaceAction,
    },
    /// Print the premium and elite city groupings.
    Cluster {
        /// Limit output to one scheme.
        #[arg(long, value_enum)]
        scheme: Option<Scheme>,
    },
    /// Fit a regression over the computed per-city metrics.
    Regress {
        #[arg(long)]
        response: String,
        #[arg(long)]
        predictor: String,
        /// Log10-transform the predictor.
        #[arg(long)]
        log_x: bool,
        /// Log10-transform the response.
        #[arg(long)]
        log_y: bool,
        /// Fit per-group lines under this division as well.
        #[arg(long, value_enum)]
        scheme: Option<Scheme>,
    },
}

#[derive(Subcommand)]
enum OccspaceAction {
    /// Compute the network and write edgelist, nodes, and JSON files.
    Build,
    /// Write the network in one format to one path.
    Export {
        #[arg(long, default_value = "edgelist")]
        format: String,
        /// Output file path.
        #[arg(long = "file")]
        file: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricName {
    Impact,
    Diversity,
    Rca,
    Proximity,
    Scaling,
    Simpson,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scheme {
    Premium,
    Elite,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("LABORSCAPE_LOG", "warn"),
    )
    .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn input_error(stage: &'static str, err: impl std::fmt::Display) -> PipelineError {
    PipelineError {
        stage,
        kind: ErrorKind::Input,
        message: err.to_string(),
    }
}

fn computation_error(stage: &'static str, err: impl std::fmt::Display) -> PipelineError {
    PipelineError {
        stage,
        kind: ErrorKind::Computation,
        message: err.to_string(),
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path).map_err(|e| input_error("config", e))?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.output_directory = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.kmeans_seed = seed;
    }
    if let Some(threshold) = cli.threshold {
        config.proximity_threshold = threshold;
    }
    if let Some(cutoff) = cli.cutoff {
        config.advantage_cutoff = cutoff;
    }
    config
        .validate_parameters()
        .map_err(|e| input_error("config", e))?;
    Ok(config)
}

fn required_path<'a>(
    path: &'a Option<PathBuf>,
    name: &str,
) -> Result<&'a PathBuf, PipelineError> {
    path.as_ref()
        .ok_or_else(|| input_error("load_inputs", format!("config is missing the {name} input")))
}

fn load_employment(config: &PipelineConfig) -> Result<EmploymentTable, PipelineError> {
    EmploymentTable::load(
        required_path(&config.employment, "employment")?,
        config.employment_schema,
    )
    .map_err(|e| input_error("load_inputs", e))
}

fn load_industry(config: &PipelineConfig) -> Result<IndustryTable, PipelineError> {
    IndustryTable::load(
        required_path(&config.industry, "industry")?,
        config.industry_schema,
    )
    .map_err(|e| input_error("load_inputs", e))
}

fn load_risk(config: &PipelineConfig) -> Result<RiskTable, PipelineError> {
    RiskTable::load(required_path(&config.risk, "risk")?).map_err(|e| input_error("load_inputs", e))
}

fn load_attributes(config: &PipelineConfig) -> Result<Vec<CityAttributes>, PipelineError> {
    load_city_attributes(required_path(&config.attributes, "attributes")?)
        .map_err(|e| input_error("load_inputs", e))
}

/// Restricts attributes to employment cities when an employment table is
/// configured, mirroring what `report` analyzes.
fn analysis_attributes(
    config: &PipelineConfig,
    attrs: Vec<CityAttributes>,
) -> Result<Vec<CityAttributes>, PipelineError> {
    if config.employment.is_none() {
        return Ok(attrs);
    }
    let emp = load_employment(config)?;
    Ok(attrs
        .into_iter()
        .filter(|a| emp.city_position(&a.city).is_some())
        .collect())
}

fn check_risk_coverage(emp: &EmploymentTable, risk: &RiskTable) -> Result<(), PipelineError> {
    let missing: Vec<&str> = emp
        .occupations()
        .iter()
        .map(|o| o.code.as_str())
        .filter(|code| !risk.contains(code))
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(input_error(
            "validate_join",
            format!("risk table missing occupations: {}", missing.join(", ")),
        ))
    }
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Validate => cmd_validate(&config, cli.json),
        Command::Report => cmd_report(&config),
        Command::Crosswalk {
            votes,
            vote_threshold,
            resolutions,
            source_risk,
            zero_override,
        } => cmd_crosswalk(
            &config,
            votes.as_ref(),
            vote_threshold.unwrap_or(config.crosswalk_threshold),
            resolutions.as_ref(),
            source_risk.as_ref(),
            zero_override.as_ref(),
        ),
        Command::Metric {
            name,
            occupation,
            group,
        } => cmd_metric(&config, cli.json, *name, occupation.as_deref(), *group),
        Command::Occspace { action } => cmd_occspace(&config, action),
        Command::Cluster { scheme } => cmd_cluster(&config, cli.json, *scheme),
        Command::Regress {
            response,
            predictor,
            log_x,
            log_y,
            scheme,
        } => cmd_regress(&config, cli.json, response, predictor, *log_x, *log_y, *scheme),
    }
}

fn cmd_validate(config: &PipelineConfig, json: bool) -> Result<(), PipelineError> {
    let emp = load_employment(config)?;
    let risk = load_risk(config)?;
    let attrs = load_attributes(config)?;
    let join = validate_join(&emp, &risk, &attrs);
    if json {
        let doc = serde_json::json!({
            "missing_risk": join.missing_risk,
            "missing_attributes": join.missing_attributes,
            "unused_risk": join.unused_risk,
            "unused_attributes": join.unused_attributes,
            "aligned": join.is_aligned(),
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("serializes"));
    } else {
        let section = |name: &str, items: &[String]| {
            if items.is_empty() {
                format!("{name}: none\n")
            } else {
                format!("{name}: {}\n", items.join(", "))
            }
        };
        print!(
            "{}{}{}{}",
            section("missing risk", &join.missing_risk),
            section("missing attributes", &join.missing_attributes),
            section("unused risk", &join.unused_risk),
            section("unused attributes", &join.unused_attributes)
        );
    }
    if join.blocks_pipeline() {
        return Err(input_error(
            "validate_join",
            format!("risk table missing occupations: {}", join.missing_risk.join(", ")),
        ));
    }
    if !join.missing_attributes.is_empty() {
        return Err(input_error(
            "validate_join",
            format!("attributes missing cities: {}", join.missing_attributes.join(", ")),
        ));
    }
    Ok(())
}

fn cmd_report(config: &PipelineConfig) -> Result<(), PipelineError> {
    let bundle = report::run_report(config)?;
    println!(
        "wrote {} files and manifest.json to {}",
        bundle.files.len(),
        config.output_directory.display()
    );
    Ok(())
}

fn cmd_crosswalk(
    config: &PipelineConfig,
    votes: Option<&PathBuf>,
    vote_threshold: u32,
    resolutions: Option<&PathBuf>,
    source_risk: Option<&PathBuf>,
    zero_override: Option<&PathBuf>,
) -> Result<(), PipelineError> {
    const STAGE: &str = "crosswalk";
    let votes_path = votes
        .or(config.votes.as_ref())
        .ok_or_else(|| input_error(STAGE, "no votes file given (flag --votes or config)"))?;
    let votes = crosswalk::VoteMatrix::load(votes_path, config.annotators)
        .map_err(|e| input_error(STAGE, e))?;
    let (mut matrix, _queue) = crosswalk::aggregate_votes(&votes, vote_threshold);

    if let Some(path) = resolutions {
        let resolutions = crosswalk::load_resolutions(path).map_err(|e| input_error(STAGE, e))?;
        for (target, chosen) in &resolutions {
            matrix
                .resolve(target, chosen)
                .map_err(|e| input_error(STAGE, e))?;
        }
    }
    let override_set: BTreeSet<String> = match zero_override.or(config.zero_override.as_ref()) {
        Some(path) => crosswalk::load_zero_override(path).map_err(|e| input_error(STAGE, e))?,
        None => BTreeSet::new(),
    };
    for code in &override_set {
        if matrix.pending().contains(code) {
            matrix.mark_override(code).map_err(|e| input_error(STAGE, e))?;
        }
    }

    let out_dir = &config.output_directory;
    std::fs::create_dir_all(out_dir).map_err(|e| computation_error(STAGE, e))?;
    matrix
        .write(out_dir.join("crosswalk.csv"), out_dir.join("crosswalk_tags.csv"))
        .map_err(|e| computation_error(STAGE, e))?;
    let queue = matrix.pending();
    crosswalk::write_queue(out_dir.join("adjudication_queue.txt"), &queue)
        .map_err(|e| computation_error(STAGE, e))?;

    if let Some(risk_path) = source_risk {
        let source = RiskTable::load(risk_path).map_err(|e| input_error(STAGE, e))?;
        let transferred = crosswalk::transfer_risk(&matrix, &source, &override_set)
            .map_err(|e| computation_error(STAGE, e))?;
        transferred
            .write(out_dir.join("target_risk.csv"))
            .map_err(|e| computation_error(STAGE, e))?;
    }
    println!(
        "crosswalk written to {} ({} rows pending adjudication)",
        out_dir.display(),
        queue.len()
    );
    Ok(())
}

fn cmd_metric(
    config: &PipelineConfig,
    json: bool,
    name: MetricName,
    occupation: Option<&str>,
    group: Option<Scheme>,
) -> Result<(), PipelineError> {
    match name {
        MetricName::Impact => {
            let emp = load_employment(config)?;
            let risk = load_risk(config)?;
            check_risk_coverage(&emp, &risk)?;
            if json {
                let mut cities: Vec<&str> = emp.cities().iter().map(String::as_str).collect();
                cities.sort();
                let rows: Vec<serde_json::Value> = cities
                    .iter()
                    .map(|city| {
                        metrics::impact_rate(&emp, &risk, city)
                            .map(|v| serde_json::json!({"city": city, "impact_rate": v}))
                    })
                    .collect::<Result<_, _>>()
                    .map_err(|e| computation_error("metrics", e))?;
                println!("{}", serde_json::to_string_pretty(&rows).expect("serializes"));
            } else {
                print!(
                    "{}",
                    report::impact_table(&emp, &risk).map_err(|e| computation_error("metrics", e))?
                );
            }
        }
        MetricName::Diversity => {
            let emp = load_employment(config)?;
            let ind = load_industry(config)?;
            if json {
                let mut cities: Vec<&str> = emp.cities().iter().map(String::as_str).collect();
                cities.sort();
                let mut rows = Vec::new();
                for city in cities {
                    let job = metrics::job_diversity(&emp, city)
                        .map_err(|e| computation_error("metrics", e))?;
                    let industry = metrics::industry_diversity(&ind, city)
                        .map_err(|e| computation_error("metrics", e))?;
                    rows.push(serde_json::json!({
                        "city": city,
                        "job_diversity": job,
                        "industry_diversity": industry,
                    }));
                }
                println!(
                    "{}",
                    serde_json::to_string_pretty(&rows).expect("serializes")
                );
            } else {
                print!(
                    "{}",
                    report::diversity_table(&emp, &ind)
                        .map_err(|e| computation_error("metrics", e))?
                );
            }
        }
        MetricName::Rca => {
            let emp = load_employment(config)?;
            let rca = metrics::rca(&emp).map_err(|e| computation_error("metrics", e))?;
            print_table(report::rca_csv(&rca), json);
        }
        MetricName::Proximity => {
            let emp = load_employment(config)?;
            let rca = metrics::rca(&emp).map_err(|e| computation_error("metrics", e))?;
            let prox = occspace::proximity(&rca, config.advantage_cutoff);
            print_table(report::proximity_csv(&prox), json);
        }
        MetricName::Scaling => {
            let emp = load_employment(config)?;
            let sizes = sizes_map(config, &emp)?;
            let groupings = match group {
                None => Vec::new(),
                Some(scheme) => vec![build_grouping(config, scheme)?],
            };
            let grouping_refs: Vec<&structure::CityGrouping> = groupings.iter().collect();
            let tables = report::scaling_tables(&emp, &sizes, &grouping_refs);
            let table = match occupation {
                None => tables.fits,
                Some(code) => {
                    if emp.occupation_position(code).is_none() {
                        return Err(input_error(
                            "load_inputs",
                            format!("unknown occupation '{code}'"),
                        ));
                    }
                    let mut out = String::new();
                    for (i, line) in tables.fits.lines().enumerate() {
                        if i == 0 || line.starts_with(&format!("{code},")) {
                            out.push_str(line);
                            out.push('\n');
                        }
                    }
                    out
                }
            };
            print_table(table, json);
        }
        MetricName::Simpson => {
            let scheme = group.unwrap_or(Scheme::Premium);
            let inputs = report::load_report_inputs(config)?;
            let analysis = report::analyze(&inputs, config)?;
            let grouping = match scheme {
                Scheme::Premium => &analysis.premium,
                Scheme::Elite => &analysis.elite,
            };
            let simpson =
                report::simpson_for_division(&analysis.frame, grouping, config.significance)
                    .map_err(|e| computation_error("regress", e))?;
            if json {
                let mut text =
                    serde_json::to_string_pretty(&simpson).expect("simpson serializes");
                text.push('\n');
                print!("{text}");
            } else {
                print!("{}", simpson.to_text());
            }
        }
        MetricName::Distance => {
            let attrs = load_attributes(config)?;
            let attrs = analysis_attributes(config, attrs)?;
            let coords_path = config.elite_coordinates.as_ref().ok_or_else(|| {
                input_error("load_inputs", "config is missing the elite_coordinates input")
            })?;
            let coords =
                structure::load_elite_coordinates(coords_path).map_err(|e| input_error("load_inputs", e))?;
            let points: Vec<(f64, f64)> = coords.iter().map(|(_, lat, lon)| (*lat, *lon)).collect();
            let distances = structure::distance_to_nearest_elite(&attrs, &points)
                .map_err(|e| computation_error("structure", e))?;
            print_table(report::distances_csv(&distances), json);
        }
    }
    Ok(())
}

/// City sizes: the attributes column when present, employment row totals
/// otherwise (the same fallback the report applies).
fn sizes_map(
    config: &PipelineConfig,
    emp: &EmploymentTable,
) -> Result<std::collections::BTreeMap<String, f64>, PipelineError> {
    let attrs = match &config.attributes {
        Some(_) => Some(load_attributes(config)?),
        None => None,
    };
    let mut out = std::collections::BTreeMap::new();
    for (i, city) in emp.cities().iter().enumerate() {
        let from_attrs = attrs.as_ref().and_then(|list| {
            list.iter()
                .find(|a| &a.city == city)
                .and_then(|a| a.size.map(|s| s as f64))
        });
        out.insert(
            city.clone(),
            from_attrs.unwrap_or_else(|| emp.city_total(i) as f64),
        );
    }
    Ok(out)
}

fn build_grouping(
    config: &PipelineConfig,
    scheme: Scheme,
) -> Result<structure::CityGrouping, PipelineError> {
    let attrs = load_attributes(config)?;
    let attrs = analysis_attributes(config, attrs)?;
    match scheme {
        Scheme::Premium => {
            structure::kmeans_premium(&attrs, config.kmeans_seed, config.kmeans_restarts)
                .map_err(|e| computation_error("structure", e))
        }
        Scheme::Elite => {
            structure::group_by_admin(&attrs).map_err(|e| computation_error("structure", e))
        }
    }
}

/// Prints a CSV table, or converts it row-wise to JSON records.
fn print_table(table: String, json: bool) {
    if !json {
        print!("{table}");
        return;
    }
    let mut lines = table.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let rows: Vec<serde_json::Value> = lines
        .map(|line| {
            let mut obj = serde_json::Map::new();
            for (key, field) in header.iter().zip(line.split(',')) {
                let value = field
                    .parse::<f64>()
                    .map(|v| serde_json::json!(v))
                    .unwrap_or_else(|_| serde_json::json!(field));
                obj.insert(key.to_string(), value);
            }
            serde_json::Value::Object(obj)
        })
        .collect();
    println!(
        "{}",
        serde_json::to_string_pretty(&rows).expect("serializes")
    );
}

fn cmd_occspace(config: &PipelineConfig, action: &OccspaceAction) -> Result<(), PipelineError> {
    let emp = load_employment(config)?;
    let risk = load_risk(config)?;
    let rca = metrics::rca(&emp).map_err(|e| computation_error("metrics", e))?;
    let prox = occspace::proximity(&rca, config.advantage_cutoff);
    let net = occspace::build_network(&prox, config.proximity_threshold);
    let closeness = occspace::closeness(&net);
    match action {
        OccspaceAction::Build => {
            let out_dir = &config.output_directory;
            std::fs::create_dir_all(out_dir).map_err(|e| computation_error("export", e))?;
            std::fs::write(
                out_dir.join("network.edgelist"),
                occspace::edgelist_string(&net),
            )
            .map_err(|e| computation_error("export", e))?;
            std::fs::write(
                out_dir.join("network.nodes.csv"),
                occspace::nodes_csv_string(&net, &closeness, &risk),
            )
            .map_err(|e| computation_error("export", e))?;
            std::fs::write(
                out_dir.join("network.json"),
                occspace::json_string(&net, &closeness, &risk),
            )
            .map_err(|e| computation_error("export", e))?;
            println!(
                "network with {} nodes / {} edges written to {}",
                net.nodes().len(),
                net.edges().len(),
                out_dir.display()
            );
        }
        OccspaceAction::Export { format, file } => {
            let format = occspace::ExportFormat::parse(format).ok_or_else(|| {
                input_error(
                    "export",
                    format!("unknown format '{format}' (edgelist|graph-xml|json)"),
                )
            })?;
            occspace::export_network(&net, &closeness, &risk, file, format)
                .map_err(|e| computation_error("export", e))?;
            println!("network written to {}", file.display());
        }
    }
    Ok(())
}

fn cmd_cluster(
    config: &PipelineConfig,
    json: bool,
    scheme: Option<Scheme>,
) -> Result<(), PipelineError> {
    let schemes: Vec<Scheme> = match scheme {
        Some(s) => vec![s],
        None => vec![Scheme::Premium, Scheme::Elite],
    };
    if json {
        let mut doc = serde_json::Map::new();
        for s in schemes {
            let grouping = build_grouping(config, s)?;
            let labels: serde_json::Map<String, serde_json::Value> = grouping
                .iter()
                .map(|(city, label)| (city.to_string(), serde_json::json!(label)))
                .collect();
            doc.insert(
                grouping.scheme.as_str().to_string(),
                serde_json::Value::Object(labels),
            );
        }
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::Value::Object(doc)).expect("serializes")
        );
    } else {
        for (i, s) in schemes.iter().enumerate() {
            let grouping = build_grouping(config, *s)?;
            if i > 0 {
                println!();
            }
            print!("{}", report::grouping_csv(&grouping));
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_regress(
    config: &PipelineConfig,
    json: bool,
    response: &str,
    predictor: &str,
    log_x: bool,
    log_y: bool,
    scheme: Option<Scheme>,
) -> Result<(), PipelineError> {
    if response == predictor {
        return Err(input_error("regress", "response and predictor must differ"));
    }
    let inputs = report::load_report_inputs(config)?;
    let analysis = report::analyze(&inputs, config)?;
    if let Some(row) = analysis.frame.values().next() {
        for metric in [response, predictor] {
            if !row.contains_key(metric) {
                let known: Vec<&str> = row.keys().map(String::as_str).collect();
                return Err(input_error(
                    "regress",
                    format!("unknown metric '{metric}'; available: {}", known.join(", ")),
                ));
            }
        }
    }
    let mut spec = RegressionSpec::new(response, predictor);
    if log_x {
        spec = spec.log_x();
    }
    if log_y {
        spec = spec.log_y();
    }
    if let Some(s) = scheme {
        spec = spec.with_grouping(match s {
            Scheme::Premium => analysis.premium.clone(),
            Scheme::Elite => analysis.elite.clone(),
        });
    }
    let fit = regress::fit(&spec, &analysis.frame).map_err(|e| computation_error("regress", e))?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&fit.results).expect("serializes")
        );
    } else {
        println!("{RESULT_CSV_HEADER}");
        for result in &fit.results {
            println!("{}", result.csv_row());
        }
    }
    for (group, reason) in &fit.skipped {
        log::warn!("group '{group}' skipped: {reason}");
    }
    Ok(())
}
