//! Batch conversion and evaluation over files.
//!
//! Each input page is converted independently; a failing page is recorded in
//! the report and does not stop the others. Artifacts and reports depend only
//! on the inputs and the config, never on thread scheduling.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{classify_page, ClassifiedGroup, PhoneGroupCategory};
use crate::config::{ConfigError, PipelineConfig, Resources};
use crate::dsl::{emit_dsl, EmitError};
use crate::grouping::{group_page, GroupKind, GroupingResult};
use crate::hierarchy::{parse_hierarchy_with, DomTree, HierarchyError, ScreenInfo};
use crate::layout::{layout_page, LayoutError, LayoutSolution};
use crate::transform::{build_tv_page, map_category, TransformError, TvGroupCategory, TvPage};
use crate::wireframe::{
    compute_miou, exact_match_rate, read_judgments, reduced_ratio, render_svg, render_wireframe, MiouReport, Wireframe,
    WireframeError,
};

#[derive(Debug, Error)]
pub enum PageError {
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Wireframe(#[from] WireframeError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("another input also produces outputs named `{0}`")]
    DuplicateName(String),
}

impl PageError {
    /// Short machine-readable error name for reports.
    pub fn kind(&self) -> &'static str {
        match self {
            PageError::Hierarchy(e) => match e {
                HierarchyError::MalformedXml(_) => "MalformedXml",
                HierarchyError::MalformedBounds { .. } => "MalformedBounds",
                HierarchyError::EmptyHierarchy => "EmptyHierarchy",
                HierarchyError::InvalidScreen { .. } => "InvalidScreen",
                HierarchyError::Rules(_) => "InvalidRules",
            },
            PageError::Transform(TransformError::EmptyPage) | PageError::Layout(LayoutError::EmptyPage) => "EmptyPage",
            PageError::Transform(_) => "Transform",
            PageError::Layout(LayoutError::CannotFit(_)) => "CannotFit",
            PageError::Layout(LayoutError::Infeasible { .. }) => "Infeasible",
            PageError::Layout(LayoutError::MissingSizeEntry { .. }) => "MissingSizeEntry",
            PageError::Layout(_) => "Layout",
            PageError::Emit(_) => "Emit",
            PageError::Wireframe(_) => "Wireframe",
            PageError::Io { .. } => "Io",
            PageError::DuplicateName(_) => "DuplicateName",
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
    #[error("generated and truth wireframes do not pair up: {0}")]
    PairingMismatch(String),
    #[error(transparent)]
    Judgments(WireframeError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Everything the conversion of one page produces.
#[derive(Debug, Clone)]
pub struct PageConversion {
    pub tree: DomTree,
    pub grouping: GroupingResult,
    pub classified: Vec<ClassifiedGroup>,
    /// The TV page before overflow pruning.
    pub tv_page: TvPage,
    /// The TV page that was laid out.
    pub fitted: TvPage,
    pub layout: LayoutSolution,
    pub dsl: String,
    pub wireframe: Wireframe,
    pub svg: String,
}

/// Contents of `<name>.page.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageDocument {
    pub page: TvPage,
    pub layout: LayoutSolution,
}

pub struct Pipeline {
    pub config: PipelineConfig,
    pub resources: Resources,
    pub tv_screen: ScreenInfo,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let resources = config.load_resources()?;
        let tv_screen = config.tv_screen()?;
        Ok(Self {
            config,
            resources,
            tv_screen,
        })
    }

    pub fn parse(&self, xml: &str) -> Result<DomTree, HierarchyError> {
        parse_hierarchy_with(xml, None, &self.resources.widget_rules)
    }

    pub fn group(&self, tree: &DomTree) -> GroupingResult {
        group_page(tree, &tree.screen(), &self.config.grouping)
    }

    pub fn classify(&self, tree: &DomTree, grouping: &GroupingResult) -> Vec<ClassifiedGroup> {
        classify_page(
            tree,
            grouping,
            &tree.screen(),
            &self.resources.templates,
            &self.config.classify,
        )
    }

    pub fn convert(&self, xml: &str) -> Result<PageConversion, PageError> {
        let tree = self.parse(xml)?;
        let grouping = self.group(&tree);
        let classified = self.classify(&tree, &grouping);
        let tv_page = build_tv_page(&tree, &classified, &self.tv_screen, &self.config.transform)?;
        let (fitted, layout) = layout_page(&tv_page, &self.resources.size_table, &self.config.layout)?;
        let dsl = emit_dsl(&fitted, &layout)?;
        let wireframe = render_wireframe(&fitted, &layout);
        let svg = render_svg(&fitted, &layout);
        Ok(PageConversion {
            tree,
            grouping,
            classified,
            tv_page,
            fitted,
            layout,
            dsl,
            wireframe,
            svg,
        })
    }

    fn pool(&self) -> Result<rayon::ThreadPool, PipelineError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.run.jobs)
            .build()
            .map_err(|e| PipelineError::Pool(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub kind: GroupKind,
    pub members: usize,
    pub category: PhoneGroupCategory,
    pub matched_attribute_count: usize,
    pub tv_category: TvGroupCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageSummary {
    pub original_leaf_count: usize,
    pub final_unit_count: usize,
    pub reduced_ratio: Option<f64>,
    pub groups: Vec<GroupSummary>,
    pub tv_groups: Vec<TvGroupCategory>,
    pub layout_objective: f64,
    pub pruned: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub miou: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageFailure {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageEntry {
    pub input: String,
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<PageSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<PageFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusAggregates {
    pub pages: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub mean_reduced_ratio: Option<f64>,
    pub mean_miou: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversionReport {
    pub pages: Vec<PageEntry>,
    pub aggregates: CorpusAggregates,
}

impl ConversionReport {
    /// 0 when any page converted, 2 when none did.
    pub fn exit_code(&self) -> i32 {
        if self.aggregates.succeeded > 0 {
            0
        } else {
            2
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn page_name(path: &Path) -> String {
    let file = path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    file.strip_suffix(".xml").map(str::to_string).unwrap_or(file)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PageError> {
    std::fs::write(path, bytes).map_err(|source| PageError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn convert_one(
    pipeline: &Pipeline,
    input: &Path,
    name: &str,
    out_dir: &Path,
    truth_dir: Option<&Path>,
) -> Result<PageSummary, PageError> {
    let xml = std::fs::read_to_string(input).map_err(|source| PageError::Io {
        path: input.display().to_string(),
        source,
    })?;
    let conv = pipeline.convert(&xml)?;
    let miou = match truth_dir {
        Some(dir) => {
            let truth_path = dir.join(format!("{name}.wf"));
            let truth = Wireframe::read_from(&truth_path)?;
            Some(compute_miou(&conv.wireframe, &truth)?.miou)
        }
        None => None,
    };
    let doc = PageDocument {
        page: conv.fitted.clone(),
        layout: conv.layout.clone(),
    };
    let json = serde_json::to_string_pretty(&doc).expect("page document serializes");
    let outputs = [
        (format!("{name}.page.json"), json.into_bytes()),
        (format!("{name}.tvdsl"), conv.dsl.into_bytes()),
        (format!("{name}.svg"), conv.svg.into_bytes()),
        (format!("{name}.wf"), conv.wireframe.to_bytes()),
    ];
    for (file, bytes) in &outputs {
        write_file(&out_dir.join(file), bytes)?;
    }
    let groups = conv
        .classified
        .iter()
        .map(|c| GroupSummary {
            kind: c.group.kind,
            members: c.group.members.len(),
            category: c.category,
            matched_attribute_count: c.matched_attribute_count,
            tv_category: map_category(c.category),
        })
        .collect();
    Ok(PageSummary {
        original_leaf_count: conv.grouping.original_leaf_count,
        final_unit_count: conv.grouping.final_unit_count,
        reduced_ratio: reduced_ratio(conv.grouping.original_leaf_count, conv.grouping.final_unit_count).ok(),
        groups,
        tv_groups: conv.fitted.groups.iter().map(|g| g.category).collect(),
        layout_objective: conv.layout.objective,
        pruned: conv.layout.pruned.clone(),
        outputs: outputs.into_iter().map(|(f, _)| f).collect(),
        miou,
    })
}

/// Converts every input into `out_dir`, writing four artifacts per page and
/// `report.json`. With `truth_dir`, each page's wireframe is scored against
/// `<truth_dir>/<name>.wf`.
pub fn run_convert(
    pipeline: &Pipeline,
    inputs: &[PathBuf],
    out_dir: &Path,
    truth_dir: Option<&Path>,
) -> Result<ConversionReport, PipelineError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let names: Vec<String> = inputs.iter().map(|p| page_name(p)).collect();
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for n in &names {
        *seen.entry(n.as_str()).or_default() += 1;
    }
    let pool = pipeline.pool()?;
    let entries: Vec<PageEntry> = pool.install(|| {
        inputs
            .par_iter()
            .zip(names.par_iter())
            .map(|(input, name)| {
                let result = if seen[name.as_str()] > 1 {
                    Err(PageError::DuplicateName(name.clone()))
                } else {
                    convert_one(pipeline, input, name, out_dir, truth_dir)
                };
                let (summary, error) = match result {
                    Ok(s) => (Some(s), None),
                    Err(e) => (
                        None,
                        Some(PageFailure {
                            kind: e.kind().to_string(),
                            message: e.to_string(),
                        }),
                    ),
                };
                PageEntry {
                    input: input.display().to_string(),
                    name: name.clone(),
                    summary,
                    error,
                }
            })
            .collect()
    });
    let ok: Vec<&PageSummary> = entries.iter().filter_map(|e| e.summary.as_ref()).collect();
    let aggregates = CorpusAggregates {
        pages: entries.len(),
        succeeded: ok.len(),
        failed: entries.len() - ok.len(),
        mean_reduced_ratio: mean(ok.iter().filter_map(|s| s.reduced_ratio)),
        mean_miou: mean(ok.iter().filter_map(|s| s.miou)),
    };
    let report = ConversionReport {
        pages: entries,
        aggregates,
    };
    let report_path = out_dir.join("report.json");
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&report_path, json + "\n").map_err(io_err(&report_path))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub name: String,
    pub generated: String,
    pub truth: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<MiouReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pairs: Vec<EvalPair>,
    pub mean_miou: Option<f64>,
    pub exact_match: Option<f64>,
}

fn by_stem(paths: &[PathBuf]) -> Result<BTreeMap<String, &PathBuf>, PipelineError> {
    let mut map = BTreeMap::new();
    for p in paths {
        let stem = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if map.insert(stem.clone(), p).is_some() {
            return Err(PipelineError::PairingMismatch(format!("stem `{stem}` appears twice")));
        }
    }
    Ok(map)
}

/// Scores generated wireframes against ground truth, pairing files by stem.
pub fn run_eval(
    generated: &[PathBuf],
    truth: &[PathBuf],
    judgments: Option<&Path>,
) -> Result<EvalReport, PipelineError> {
    let gen = by_stem(generated)?;
    let tru = by_stem(truth)?;
    let unpaired: Vec<&str> = gen
        .keys()
        .filter(|k| !tru.contains_key(*k))
        .chain(tru.keys().filter(|k| !gen.contains_key(*k)))
        .map(String::as_str)
        .collect();
    if !unpaired.is_empty() {
        return Err(PipelineError::PairingMismatch(format!(
            "no partner for {}",
            unpaired.join(", ")
        )));
    }
    let pairs: Vec<EvalPair> = gen
        .par_iter()
        .map(|(name, g)| {
            let t = tru[name];
            let result =
                Wireframe::read_from(g).and_then(|a| Wireframe::read_from(t).and_then(|b| compute_miou(&a, &b)));
            let (report, error) = match result {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            EvalPair {
                name: name.clone(),
                generated: g.display().to_string(),
                truth: t.display().to_string(),
                report,
                error,
            }
        })
        .collect();
    let exact_match = match judgments {
        Some(path) => {
            let file = std::fs::File::open(path).map_err(io_err(path))?;
            let js = read_judgments(file).map_err(PipelineError::Judgments)?;
            let flags: Vec<bool> = js.iter().map(|j| j.matched == 1).collect();
            Some(exact_match_rate(&flags).map_err(PipelineError::Judgments)?)
        }
        None => None,
    };
    Ok(EvalReport {
        mean_miou: mean(pairs.iter().filter_map(|p| p.report.as_ref().map(|r| r.miou))),
        pairs,
        exact_match,
    })
}

/// Aligned plain-text table of an evaluation report.
pub fn format_eval_table(report: &EvalReport) -> String {
    let width = report.pairs.iter().map(|p| p.name.len()).max().unwrap_or(0).max(4);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>8}  {:>8}  {:>8}", "page", "image", "text", "mIoU");
    let cell = |r: &MiouReport, class: &str| match r.per_class.get(class) {
        Some(c) if c.included => format!("{:.4}", c.iou),
        _ => "-".to_string(),
    };
    for p in &report.pairs {
        match (&p.report, &p.error) {
            (Some(r), _) => {
                let _ = writeln!(
                    out,
                    "{:<width$}  {:>8}  {:>8}  {:>8.4}",
                    p.name,
                    cell(r, "image"),
                    cell(r, "text"),
                    r.miou
                );
            }
            (None, e) => {
                let _ = writeln!(out, "{:<width$}  error: {}", p.name, e.as_deref().unwrap_or("unknown"));
            }
        }
    }
    match report.mean_miou {
        Some(m) => {
            let _ = writeln!(out, "{:<width$}  {:>8}  {:>8}  {:>8.4}", "mean", "", "", m);
        }
        None => {
            let _ = writeln!(out, "{:<width$}  {:>8}  {:>8}  {:>8}", "mean", "", "", "-");
        }
    }
    if let Some(em) = report.exact_match {
        let _ = writeln!(out, "exact match: {em:.4}");
    }
    out
}
