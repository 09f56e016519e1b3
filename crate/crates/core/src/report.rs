//! End-to-end pipeline: load and join inputs, compute every table, write a
//! report directory with a hashed manifest.
//!
//! Everything is built as in-memory byte strings first, so the single-metric
//! CLI commands print exactly the bytes the full report writes, and two runs
//! on identical inputs produce identical manifests. Files land on disk via
//! write-to-temp-then-rename.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::dataset::{
    load_city_attributes, validate_join, CityAttributes, EmploymentTable, IndustryTable,
    JoinReport, RiskTable,
};
use crate::metrics::{self, CityMetricVector, RcaMatrix};
use crate::occspace::{self, OccupationNetwork, ProximityMatrix};
use crate::regress::{
    self, FitReport, MetricFrame, RegressionSpec, SimpsonReport, RESULT_CSV_HEADER,
};
use crate::structure::{self, CityGrouping, PcaResult};

/// Exit-code class of a pipeline failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad inputs or configuration (exit code 2).
    Input,
    /// A computation failed (exit code 1).
    Computation,
}

/// A failure tagged with the pipeline stage it happened in.
#[derive(Debug)]
pub struct PipelineError {
    pub stage: &'static str,
    pub kind: ErrorKind,
    pub message: String,
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Input => 2,
            ErrorKind::Computation => 1,
        }
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.message)
    }
}

impl std::error::Error for PipelineError {}

pub type Result<T> = std::result::Result<T, PipelineError>;

fn input_error(stage: &'static str, err: impl fmt::Display) -> PipelineError {
    PipelineError {
        stage,
        kind: ErrorKind::Input,
        message: err.to_string(),
    }
}

fn computation_error(stage: &'static str, err: impl fmt::Display) -> PipelineError {
    PipelineError {
        stage,
        kind: ErrorKind::Computation,
        message: err.to_string(),
    }
}

/// All inputs a full report needs, loaded and join-checked.
pub struct ReportInputs {
    pub employment: EmploymentTable,
    pub industry: IndustryTable,
    pub risk: RiskTable,
    pub attributes: Vec<CityAttributes>,
    pub sector_map: Option<HashMap<String, String>>,
    pub elite_coords: Option<Vec<(String, f64, f64)>>,
    pub join: JoinReport,
}

fn require<'a>(
    stage: &'static str,
    path: &'a Option<PathBuf>,
    name: &str,
) -> Result<&'a PathBuf> {
    path.as_ref()
        .ok_or_else(|| input_error(stage, format!("config is missing the {name} input")))
}

/// Stage `validate_join`: loads employment, industry, risk, and attributes,
/// and refuses to continue when risk coverage or city attributes are
/// incomplete.
pub fn load_report_inputs(config: &PipelineConfig) -> Result<ReportInputs> {
    const STAGE: &str = "validate_join";
    config.check_paths().map_err(|e| input_error(STAGE, e))?;
    let employment = EmploymentTable::load(
        require(STAGE, &config.employment, "employment")?,
        config.employment_schema,
    )
    .map_err(|e| input_error(STAGE, e))?;
    let industry = IndustryTable::load(
        require(STAGE, &config.industry, "industry")?,
        config.industry_schema,
    )
    .map_err(|e| input_error(STAGE, e))?;
    let risk = RiskTable::load(require(STAGE, &config.risk, "risk")?)
        .map_err(|e| input_error(STAGE, e))?;
    let attributes = load_city_attributes(require(STAGE, &config.attributes, "attributes")?)
        .map_err(|e| input_error(STAGE, e))?;

    let join = validate_join(&employment, &risk, &attributes);
    if join.blocks_pipeline() {
        return Err(input_error(
            STAGE,
            format!("risk table missing occupations: {}", join.missing_risk.join(", ")),
        ));
    }
    if !join.missing_attributes.is_empty() {
        return Err(input_error(
            STAGE,
            format!(
                "attributes missing cities: {}",
                join.missing_attributes.join(", ")
            ),
        ));
    }
    for city in &join.unused_attributes {
        log::info!("attributes row '{city}' matches no employment city; ignored");
    }

    let sector_map = match &config.sector_map {
        Some(path) => Some(load_sector_map(path).map_err(|e| input_error(STAGE, e))?),
        None => None,
    };
    let elite_coords = match &config.elite_coordinates {
        Some(path) => Some(
            structure::load_elite_coordinates(path).map_err(|e| input_error(STAGE, e))?,
        ),
        None => None,
    };

    Ok(ReportInputs {
        employment,
        industry,
        risk,
        attributes,
        sector_map,
        elite_coords,
        join,
    })
}

/// Loads a `code,sector` mapping file.
fn load_sector_map(path: &Path) -> std::result::Result<HashMap<String, String>, String> {
    let content = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut out = HashMap::new();
    for (i, line) in content.lines().enumerate() {
        if i == 0 {
            if line.trim() != "code,sector" {
                return Err("sector map header must be 'code,sector'".into());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (code, sector) = line
            .split_once(',')
            .ok_or_else(|| format!("line {}: expected 2 fields", i + 1))?;
        if out
            .insert(code.trim().to_string(), sector.trim().to_string())
            .is_some()
        {
            return Err(format!("duplicate sector mapping for '{}'", code.trim()));
        }
    }
    Ok(out)
}

/// Everything a report run computes, before any file is written.
pub struct ReportBundle {
    /// Output file name to content.
    pub files: BTreeMap<String, Vec<u8>>,
    /// The manifest document (serialized separately as `manifest.json`).
    pub manifest: serde_json::Value,
}

/// Every intermediate product of a pipeline run, computed once and shared
/// by the report writer and the single-metric commands.
pub struct Analysis {
    pub metrics: Vec<CityMetricVector>,
    pub rca: RcaMatrix,
    pub proximity: ProximityMatrix,
    pub network: OccupationNetwork,
    pub closeness: BTreeMap<String, f64>,
    pub positions: BTreeMap<String, (f64, usize)>,
    pub pca: PcaResult,
    pub premium: CityGrouping,
    pub elite: CityGrouping,
    pub distances: Option<BTreeMap<String, f64>>,
    pub frame: MetricFrame,
    pub sizes: BTreeMap<String, f64>,
}

/// Stages `metrics`, `occspace`, and `structure` of the pipeline.
pub fn analyze(inputs: &ReportInputs, config: &PipelineConfig) -> Result<Analysis> {
    // metrics
    let metrics = metrics::city_metrics(&inputs.employment, &inputs.risk, &inputs.industry)
        .map_err(|e| computation_error("metrics", e))?;
    let rca = metrics::rca(&inputs.employment).map_err(|e| computation_error("metrics", e))?;

    // occupation space
    let proximity = occspace::proximity(&rca, config.advantage_cutoff);
    let network = occspace::build_network(&proximity, config.proximity_threshold);
    let closeness = occspace::closeness(&network);
    let mut positions = BTreeMap::new();
    for city in inputs.employment.cities() {
        let overlay =
            occspace::overlay(&network, &rca, &closeness, city, config.advantage_cutoff)
                .map_err(|e| computation_error("occspace", e))?;
        positions.insert(city.clone(), (overlay.position, overlay.advantaged.len()));
    }

    // industrial structure and groupings over the analysis city set
    let analysis_attrs: Vec<CityAttributes> = inputs
        .attributes
        .iter()
        .filter(|a| inputs.employment.city_position(&a.city).is_some())
        .cloned()
        .collect();
    let pca_input = match &inputs.sector_map {
        Some(map) => inputs
            .industry
            .aggregate_columns(map)
            .map_err(|e| computation_error("structure", e))?,
        None => inputs.industry.clone(),
    };
    let pca = structure::pca_industry(&pca_input, config.pca_components)
        .map_err(|e| computation_error("structure", e))?;
    let premium =
        structure::kmeans_premium(&analysis_attrs, config.kmeans_seed, config.kmeans_restarts)
            .map_err(|e| computation_error("structure", e))?;
    let elite =
        structure::group_by_admin(&analysis_attrs).map_err(|e| computation_error("structure", e))?;
    let distances = match &inputs.elite_coords {
        Some(coords) => {
            let points: Vec<(f64, f64)> = coords.iter().map(|(_, lat, lon)| (*lat, *lon)).collect();
            Some(
                structure::distance_to_nearest_elite(&analysis_attrs, &points)
                    .map_err(|e| computation_error("structure", e))?,
            )
        }
        None => None,
    };

    // per-city metric frame for the regression engine
    let mut sizes = BTreeMap::new();
    let mut frame: MetricFrame = BTreeMap::new();
    let attr_by_city: BTreeMap<&str, &CityAttributes> = analysis_attrs
        .iter()
        .map(|a| (a.city.as_str(), a))
        .collect();
    // extras present for every city participate as metrics
    let mut extra_names: Vec<String> = Vec::new();
    if let Some(first) = analysis_attrs.first() {
        for name in first.extras.keys() {
            if analysis_attrs.iter().all(|a| a.extras.contains_key(name)) {
                extra_names.push(name.clone());
            }
        }
    }
    for m in &metrics {
        let mut row: BTreeMap<String, f64> = BTreeMap::new();
        let attrs = attr_by_city
            .get(m.city.as_str())
            .expect("join validated attribute coverage");
        let city_idx = inputs
            .employment
            .city_position(&m.city)
            .expect("metrics follow employment cities");
        let size = attrs
            .size
            .map(|s| s as f64)
            .unwrap_or_else(|| inputs.employment.city_total(city_idx) as f64);
        sizes.insert(m.city.clone(), size);
        row.insert("size".into(), size);
        row.insert("impact_rate".into(), m.impact_rate);
        row.insert("job_diversity".into(), m.job_diversity);
        row.insert("industry_diversity".into(), m.industry_diversity);
        row.insert("position".into(), positions[&m.city].0);
        if let Some(d) = &distances {
            row.insert("distance_to_elite".into(), d[&m.city]);
        }
        for name in &extra_names {
            row.insert(name.clone(), attrs.extras[name]);
        }
        frame.insert(m.city.clone(), row);
    }

    Ok(Analysis {
        metrics,
        rca,
        proximity,
        network,
        closeness,
        positions,
        pca,
        premium,
        elite,
        distances,
        frame,
        sizes,
    })
}

// ---------------------------------------------------------------------------
// table builders (shared verbatim by `report` and the single-metric commands)
// ---------------------------------------------------------------------------

/// City ids may contain commas; quote them the way a CSV reader expects.
pub(crate) fn csv_field(value: &str) -> std::borrow::Cow<'_, str> {
    if value.contains(',') || value.contains('"') || value.contains('\n') {
        std::borrow::Cow::Owned(format!("\"{}\"", value.replace('"', "\"\"")))
    } else {
        std::borrow::Cow::Borrowed(value)
    }
}

pub fn city_metrics_csv(metrics: &[CityMetricVector]) -> String {
    let mut rows: Vec<&CityMetricVector> = metrics.iter().collect();
    rows.sort_by(|a, b| a.city.cmp(&b.city));
    let mut out = String::from("city,impact_rate,job_diversity,industry_diversity\n");
    for m in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            csv_field(&m.city),
            m.impact_rate,
            m.job_diversity,
            m.industry_diversity
        ));
    }
    out
}

/// `city,impact_rate` table; values identical to the `city_metrics.csv`
/// column because both go through [`metrics::impact_rate`].
pub fn impact_table(emp: &EmploymentTable, risk: &RiskTable) -> metrics::Result<String> {
    let mut cities: Vec<&str> = emp.cities().iter().map(String::as_str).collect();
    cities.sort();
    let mut out = String::from("city,impact_rate\n");
    for city in cities {
        out.push_str(&format!(
            "{},{}\n",
            csv_field(city),
            metrics::impact_rate(emp, risk, city)?
        ));
    }
    Ok(out)
}

/// `city,job_diversity,industry_diversity` table.
pub fn diversity_table(emp: &EmploymentTable, ind: &IndustryTable) -> metrics::Result<String> {
    let mut cities: Vec<&str> = emp.cities().iter().map(String::as_str).collect();
    cities.sort();
    let mut out = String::from("city,job_diversity,industry_diversity\n");
    for city in cities {
        out.push_str(&format!(
            "{},{},{}\n",
            csv_field(city),
            metrics::job_diversity(emp, city)?,
            metrics::industry_diversity(ind, city)?
        ));
    }
    Ok(out)
}

/// Long-format RCA: one `city,code,rca` row per positive cell, sorted by
/// city then code.
pub fn rca_csv(rca: &RcaMatrix) -> String {
    let mut cells: Vec<(&str, &str, f64)> = Vec::new();
    for (i, city) in rca.cities().iter().enumerate() {
        for (j, code) in rca.occupations().iter().enumerate() {
            let v = rca.value(i, j);
            if v > 0.0 {
                cells.push((city, code, v));
            }
        }
    }
    cells.sort_by(|a, b| a.0.cmp(b.0).then(a.1.cmp(b.1)));
    let mut out = String::from("city,code,rca\n");
    for (city, code, v) in cells {
        out.push_str(&format!("{},{code},{v}\n", csv_field(city)));
    }
    out
}

/// Upper-triangle proximity pairs `src,dst,phi` sorted by code pair,
/// positive entries only.
pub fn proximity_csv(prox: &ProximityMatrix) -> String {
    let occs = prox.occupations();
    let mut pairs: Vec<(&str, &str, f64)> = Vec::new();
    for i in 0..occs.len() {
        for j in (i + 1)..occs.len() {
            let v = prox.value(i, j);
            if v > 0.0 {
                let (a, b) = if occs[i] <= occs[j] {
                    (occs[i].as_str(), occs[j].as_str())
                } else {
                    (occs[j].as_str(), occs[i].as_str())
                };
                pairs.push((a, b, v));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.cmp(b.0).then(a.1.cmp(b.1)));
    let mut out = String::from("src,dst,phi\n");
    for (a, b, v) in pairs {
        out.push_str(&format!("{a},{b},{v}\n"));
    }
    out
}

pub fn positions_csv(positions: &BTreeMap<String, (f64, usize)>) -> String {
    let mut out = String::from("city,position,advantaged_count\n");
    for (city, (position, count)) in positions {
        out.push_str(&format!("{},{position},{count}\n", csv_field(city)));
    }
    out
}

pub fn distances_csv(distances: &BTreeMap<String, f64>) -> String {
    let mut out = String::from("city,distance_km\n");
    for (city, d) in distances {
        out.push_str(&format!("{},{d}\n", csv_field(city)));
    }
    out
}

pub fn pca_loadings_csv(pca: &PcaResult) -> String {
    let mut out = String::from("sector");
    for k in 0..pca.components.len() {
        out.push_str(&format!(",pc{}", k + 1));
    }
    out.push('\n');
    for (j, label) in pca.column_labels.iter().enumerate() {
        out.push_str(label);
        for comp in &pca.components {
            out.push_str(&format!(",{}", comp[j]));
        }
        out.push('\n');
    }
    out
}

pub fn pca_scores_csv(pca: &PcaResult) -> String {
    let mut order: Vec<usize> = (0..pca.row_labels.len()).collect();
    order.sort_by(|&a, &b| pca.row_labels[a].cmp(&pca.row_labels[b]));
    let mut out = String::from("city");
    for k in 0..pca.components.len() {
        out.push_str(&format!(",pc{}", k + 1));
    }
    out.push('\n');
    for i in order {
        out.push_str(&csv_field(&pca.row_labels[i]));
        for k in 0..pca.components.len() {
            out.push_str(&format!(",{}", pca.scores[i][k]));
        }
        out.push('\n');
    }
    out
}

pub fn pca_explained_csv(pca: &PcaResult) -> String {
    let mut out = String::from("pc,ratio\n");
    for (k, ratio) in pca.explained_ratio.iter().enumerate() {
        out.push_str(&format!("pc{},{}\n", k + 1, ratio));
    }
    out
}

pub fn grouping_csv(grouping: &CityGrouping) -> String {
    let mut out = String::from("city,scheme,label\n");
    for (city, label) in grouping.iter() {
        out.push_str(&format!(
            "{},{},{}\n",
            csv_field(city),
            grouping.scheme.as_str(),
            label
        ));
    }
    out
}

/// One scaling-exponent row per (occupation, group); fits that cannot run
/// (fewer than 3 cities with the occupation present) land in the skipped
/// table with the reason.
pub struct ScalingTables {
    pub fits: String,
    pub skipped: String,
}

pub fn scaling_tables(
    emp: &EmploymentTable,
    sizes: &BTreeMap<String, f64>,
    groupings: &[&CityGrouping],
) -> ScalingTables {
    let mut occs: Vec<usize> = (0..emp.occupations().len()).collect();
    occs.sort_by(|&a, &b| emp.occupations()[a].code.cmp(&emp.occupations()[b].code));
    let mut cities: Vec<&str> = emp.cities().iter().map(String::as_str).collect();
    cities.sort();

    let mut fits = format!("occupation,{RESULT_CSV_HEADER}\n");
    let mut skipped = String::from("occupation,group,reason\n");
    for &j in &occs {
        let code = &emp.occupations()[j].code;
        let mut groups: Vec<(String, Vec<&str>)> = vec![("pooled".into(), cities.clone())];
        for grouping in groupings {
            let (a, b) = grouping.scheme.labels();
            for label in [a, b] {
                let members: Vec<&str> = cities
                    .iter()
                    .filter(|c| grouping.group_of(c) == Some(label))
                    .copied()
                    .collect();
                groups.push((label.to_string(), members));
            }
        }
        for (label, members) in groups {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for city in members {
                let i = emp.city_position(city).expect("city set from table");
                let count = emp.row(i)[j];
                if count > 0 {
                    xs.push(sizes[city]);
                    ys.push(count as f64);
                }
            }
            match regress::scaling_exponent(&xs, &ys) {
                Ok(result) => {
                    let result = result.with_group(&label);
                    fits.push_str(&format!("{code},{}\n", result.csv_row()));
                }
                Err(err) => {
                    skipped.push_str(&format!("{code},{label},{err}\n"));
                }
            }
        }
    }
    ScalingTables { fits, skipped }
}

/// A named grouped regression destined for `regressions.csv`.
struct NamedFit {
    analysis: String,
    division: String,
    report: FitReport,
}

fn regression_tables(computed: &Analysis) -> Result<(String, String)> {
    let mut named: Vec<NamedFit> = Vec::new();
    let mut run = |analysis: &str, division: &str, spec: RegressionSpec| -> Result<()> {
        let report =
            regress::fit(&spec, &computed.frame).map_err(|e| computation_error("regress", e))?;
        named.push(NamedFit {
            analysis: analysis.to_string(),
            division: division.to_string(),
            report,
        });
        Ok(())
    };

    let divisions: [(&str, &CityGrouping); 2] =
        [("premium", &computed.premium), ("elite", &computed.elite)];
    for (division, grouping) in divisions {
        let with_group = |spec: RegressionSpec| spec.with_grouping((*grouping).clone());
        run(
            "impact_rate_vs_log_size",
            division,
            with_group(RegressionSpec::new("impact_rate", "size").log_x()),
        )?;
        run(
            "job_diversity_vs_log_size",
            division,
            with_group(RegressionSpec::new("job_diversity", "size").log_x()),
        )?;
        run(
            "impact_rate_vs_job_diversity",
            division,
            with_group(RegressionSpec::new("impact_rate", "job_diversity")),
        )?;
        run(
            "job_diversity_vs_industry_diversity",
            division,
            with_group(RegressionSpec::new("job_diversity", "industry_diversity")),
        )?;
        run(
            "position_vs_log_size",
            division,
            with_group(RegressionSpec::new("position", "size").log_x()),
        )?;
        if computed.distances.is_some() {
            run(
                "industry_diversity_vs_log_distance",
                division,
                with_group(RegressionSpec::new("industry_diversity", "distance_to_elite").log_x()),
            )?;
        }
        // covariates shipped in the attributes file (fixed assets, net
        // population gain, vocational resources, ...)
        let extras: Vec<String> = computed
            .frame
            .values()
            .next()
            .map(|row| {
                row.keys()
                    .filter(|k| {
                        ![
                            "size",
                            "impact_rate",
                            "job_diversity",
                            "industry_diversity",
                            "position",
                            "distance_to_elite",
                        ]
                        .contains(&k.as_str())
                    })
                    .cloned()
                    .collect()
            })
            .unwrap_or_default();
        for extra in extras {
            run(
                &format!("{extra}_vs_log_size"),
                division,
                with_group(RegressionSpec::new(extra.clone(), "size").log_x()),
            )?;
            if computed.distances.is_some() && extra == "net_population_gain" {
                run(
                    "net_population_gain_vs_log_distance",
                    division,
                    with_group(RegressionSpec::new(extra.clone(), "distance_to_elite").log_x()),
                )?;
            }
        }
    }

    // occupation-level direction check: automation risk against closeness
    let mut csv = format!("analysis,division,{RESULT_CSV_HEADER}\n");
    let mut skipped = String::from("analysis,division,group,reason\n");
    for fit in &named {
        for result in &fit.report.results {
            csv.push_str(&format!(
                "{},{},{}\n",
                fit.analysis,
                fit.division,
                result.csv_row()
            ));
        }
        for (group, reason) in &fit.report.skipped {
            skipped.push_str(&format!("{},{},{},{}\n", fit.analysis, fit.division, group, reason));
        }
    }
    Ok((csv, skipped))
}

/// Risk regressed on closeness across occupations (one pooled row).
pub fn risk_vs_closeness(
    closeness: &BTreeMap<String, f64>,
    risk: &RiskTable,
) -> regress::Result<regress::RegressionResult> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (code, c) in closeness {
        if let Some(r) = risk.get(code) {
            xs.push(*c);
            ys.push(r);
        }
    }
    regress::ols(&xs, &ys).map(|r| r.with_group("occupations"))
}

fn simpson_json(report: &SimpsonReport) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(report).expect("simpson serializes");
    text.push('\n');
    text.into_bytes()
}

/// Runs the Simpson check for one division on the standard size-impact
/// regression.
pub fn simpson_for_division(
    frame: &MetricFrame,
    grouping: &CityGrouping,
    significance: f64,
) -> regress::Result<SimpsonReport> {
    let spec = RegressionSpec::new("impact_rate", "size")
        .log_x()
        .with_grouping(grouping.clone());
    regress::simpson_check(&spec, frame, significance)
}

// ---------------------------------------------------------------------------
// assembly
// ---------------------------------------------------------------------------

/// Computes every report artifact in memory.
pub fn build_report(inputs: &ReportInputs, config: &PipelineConfig) -> Result<ReportBundle> {
    let computed = analyze(inputs, config)?;
    let mut files: BTreeMap<String, Vec<u8>> = BTreeMap::new();

    files.insert(
        "city_metrics.csv".into(),
        city_metrics_csv(&computed.metrics).into_bytes(),
    );
    files.insert("rca.csv".into(), rca_csv(&computed.rca).into_bytes());
    files.insert(
        "proximity.csv".into(),
        proximity_csv(&computed.proximity).into_bytes(),
    );
    files.insert(
        "network.edgelist".into(),
        occspace::edgelist_string(&computed.network).into_bytes(),
    );
    files.insert(
        "network.nodes.csv".into(),
        occspace::nodes_csv_string(&computed.network, &computed.closeness, &inputs.risk)
            .into_bytes(),
    );
    files.insert(
        "network.json".into(),
        occspace::json_string(&computed.network, &computed.closeness, &inputs.risk).into_bytes(),
    );
    files.insert(
        "positions.csv".into(),
        positions_csv(&computed.positions).into_bytes(),
    );
    files.insert(
        "pca_loadings.csv".into(),
        pca_loadings_csv(&computed.pca).into_bytes(),
    );
    files.insert(
        "pca_scores.csv".into(),
        pca_scores_csv(&computed.pca).into_bytes(),
    );
    files.insert(
        "pca_explained.csv".into(),
        pca_explained_csv(&computed.pca).into_bytes(),
    );
    files.insert(
        "grouping_premium.csv".into(),
        grouping_csv(&computed.premium).into_bytes(),
    );
    files.insert(
        "grouping_elite.csv".into(),
        grouping_csv(&computed.elite).into_bytes(),
    );
    if let Some(distances) = &computed.distances {
        files.insert("distances.csv".into(), distances_csv(distances).into_bytes());
    }

    let scaling = scaling_tables(
        &inputs.employment,
        &computed.sizes,
        &[&computed.premium, &computed.elite],
    );
    files.insert("scaling_exponents.csv".into(), scaling.fits.into_bytes());
    files.insert("scaling_skipped.csv".into(), scaling.skipped.into_bytes());

    let (regressions, skipped) = regression_tables(&computed)?;
    let mut regressions = regressions;
    match risk_vs_closeness(&computed.closeness, &inputs.risk) {
        Ok(result) => {
            regressions.push_str(&format!("risk_vs_closeness,none,{}\n", result.csv_row()));
        }
        Err(err) => return Err(computation_error("regress", err)),
    }
    files.insert("regressions.csv".into(), regressions.into_bytes());
    files.insert("regressions_skipped.csv".into(), skipped.into_bytes());

    for (division, grouping) in [("premium", &computed.premium), ("elite", &computed.elite)] {
        let report = simpson_for_division(&computed.frame, grouping, config.significance)
            .map_err(|e| computation_error("regress", e))?;
        files.insert(format!("simpson_{division}.json"), simpson_json(&report));
        files.insert(
            format!("simpson_{division}.txt"),
            report.to_text().into_bytes(),
        );
    }

    let manifest = manifest_document(&files, config)?;
    Ok(ReportBundle { files, manifest })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn manifest_document(
    files: &BTreeMap<String, Vec<u8>>,
    config: &PipelineConfig,
) -> Result<serde_json::Value> {
    let outputs: Vec<serde_json::Value> = files
        .iter()
        .map(|(name, content)| {
            serde_json::json!({
                "name": name,
                "sha256": sha256_hex(content),
                "bytes": content.len(),
            })
        })
        .collect();
    let mut input_hashes = serde_json::Map::new();
    let named: [(&str, &Option<PathBuf>); 7] = [
        ("employment", &config.employment),
        ("industry", &config.industry),
        ("risk", &config.risk),
        ("attributes", &config.attributes),
        ("sector_map", &config.sector_map),
        ("elite_coordinates", &config.elite_coordinates),
        ("votes", &config.votes),
    ];
    for (name, path) in named {
        if let Some(path) = path {
            let bytes = std::fs::read(path).map_err(|e| input_error("export", e))?;
            input_hashes.insert(name.to_string(), serde_json::json!(sha256_hex(&bytes)));
        }
    }
    Ok(serde_json::json!({
        "inputs": input_hashes,
        "outputs": outputs,
        "parameters": {
            "advantage_cutoff": config.advantage_cutoff,
            "proximity_threshold": config.proximity_threshold,
            "kmeans_seed": config.kmeans_seed,
            "kmeans_restarts": config.kmeans_restarts,
            "significance": config.significance,
            "pca_components": config.pca_components,
        },
    }))
}

/// Writes every bundle file plus `manifest.json` into the output directory
/// (created if missing), each atomically via temp file and rename.
pub fn write_bundle(bundle: &ReportBundle, out_dir: &Path) -> Result<()> {
    const STAGE: &str = "export";
    std::fs::create_dir_all(out_dir).map_err(|e| computation_error(STAGE, e))?;
    let mut all: Vec<(&str, Vec<u8>)> = bundle
        .files
        .iter()
        .map(|(name, content)| (name.as_str(), content.clone()))
        .collect();
    let mut manifest_text =
        serde_json::to_string_pretty(&bundle.manifest).expect("manifest serializes");
    manifest_text.push('\n');
    all.push(("manifest.json", manifest_text.into_bytes()));
    for (name, content) in all {
        let tmp = out_dir.join(format!(".tmp.{name}"));
        std::fs::write(&tmp, &content).map_err(|e| computation_error(STAGE, e))?;
        std::fs::rename(&tmp, out_dir.join(name)).map_err(|e| computation_error(STAGE, e))?;
    }
    Ok(())
}

/// Full pipeline: load, compute, write. Returns the bundle for callers
/// that want to inspect the manifest.
pub fn run_report(config: &PipelineConfig) -> Result<ReportBundle> {
    let inputs = load_report_inputs(config)?;
    let bundle = build_report(&inputs, config)?;
    write_bundle(&bundle, &config.output_directory)?;
    Ok(bundle)
}
