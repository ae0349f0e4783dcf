//! Template matching of component groups against the twelve phone group
//! categories.
//!
//! Each template is a list of named predicates over a group. A group takes
//! the category of the template it satisfies most often, provided that count
//! exceeds the threshold; anything else is [`PhoneGroupCategory::Others`].
//! All position and size cues are fractions of the screen, so a uniform
//! rescale of page and screen never changes a verdict.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grouping::{ComponentGroup, GroupingResult};
use crate::hierarchy::{Bounds, DomTree, NodeId, ScreenInfo, UiNode, WidgetKind};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("invalid template catalog: {0}")]
    InvalidCatalog(String),
    #[error("cannot read template catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhoneGroupCategory {
    IconInfo,
    ToolBar,
    BottomTabLayout,
    Search,
    TopTabLayout,
    PicSideInfo,
    PicInfo,
    SideNav,
    ShortVideoPlayer,
    VideoMusicPlayer,
    BigPic,
    ListView,
    Others,
}

impl PhoneGroupCategory {
    pub const ALL: [PhoneGroupCategory; 13] = [
        PhoneGroupCategory::IconInfo,
        PhoneGroupCategory::ToolBar,
        PhoneGroupCategory::BottomTabLayout,
        PhoneGroupCategory::Search,
        PhoneGroupCategory::TopTabLayout,
        PhoneGroupCategory::PicSideInfo,
        PhoneGroupCategory::PicInfo,
        PhoneGroupCategory::SideNav,
        PhoneGroupCategory::ShortVideoPlayer,
        PhoneGroupCategory::VideoMusicPlayer,
        PhoneGroupCategory::BigPic,
        PhoneGroupCategory::ListView,
        PhoneGroupCategory::Others,
    ];

    /// Tie-break rank among templates with equal match counts (lower wins).
    fn priority(self) -> usize {
        use PhoneGroupCategory::*;
        match self {
            ToolBar => 0,
            Search => 1,
            TopTabLayout => 2,
            BottomTabLayout => 3,
            SideNav => 4,
            VideoMusicPlayer => 5,
            ListView => 6,
            IconInfo => 7,
            PicSideInfo => 8,
            PicInfo => 9,
            BigPic => 10,
            ShortVideoPlayer => 11,
            Others => 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Predicate {
    HasWidget { widget: WidgetKind },
    Keyword { words: Vec<String> },
    TopBand,
    BottomBand,
    UpperHalf,
    LeftRail,
    WideGroup,
    TallGroup { fraction: f64 },
    SmallSquareImage,
    MediumImage,
    WideImage,
    TextBesideImage,
    TextBelowImage,
    TextNearImage,
    NoTextBesideImage,
    MinUnits { count: usize },
    MinRows { count: usize },
    LabeledUnits,
    BackArrowTitle,
}

impl Predicate {
    pub fn name(&self) -> String {
        match self {
            Predicate::HasWidget { widget } => format!("has_widget:{widget:?}"),
            Predicate::Keyword { words } => format!("keyword:{}", words.join("|")),
            Predicate::TopBand => "top_band".into(),
            Predicate::BottomBand => "bottom_band".into(),
            Predicate::UpperHalf => "upper_half".into(),
            Predicate::LeftRail => "left_rail".into(),
            Predicate::WideGroup => "wide_group".into(),
            Predicate::TallGroup { fraction } => format!("tall_group:{fraction}"),
            Predicate::SmallSquareImage => "small_square_image".into(),
            Predicate::MediumImage => "medium_image".into(),
            Predicate::WideImage => "wide_image".into(),
            Predicate::TextBesideImage => "text_beside_image".into(),
            Predicate::TextBelowImage => "text_below_image".into(),
            Predicate::TextNearImage => "text_near_image".into(),
            Predicate::NoTextBesideImage => "no_text_beside_image".into(),
            Predicate::MinUnits { count } => format!("min_units:{count}"),
            Predicate::MinRows { count } => format!("min_rows:{count}"),
            Predicate::LabeledUnits => "labeled_units".into(),
            Predicate::BackArrowTitle => "back_arrow_title".into(),
        }
    }

    fn eval(&self, view: &GroupView<'_>) -> bool {
        let cfg = view.cfg;
        let (w, h) = (f64::from(view.screen.width_px), f64::from(view.screen.height_px));
        let b = view.group.bounding;
        match self {
            Predicate::HasWidget { widget } => view.context.iter().any(|n| n.widget_kind == *widget),
            Predicate::Keyword { words } => view.context.iter().any(|n| {
                let rid = n.resource_id.as_deref().unwrap_or_default().to_ascii_lowercase();
                let class = n.class_name.to_ascii_lowercase();
                words
                    .iter()
                    .map(|w| w.to_ascii_lowercase())
                    .any(|w| rid.contains(&w) || class.contains(&w))
            }),
            Predicate::TopBand => f64::from(b.top) < cfg.top_band * h,
            Predicate::BottomBand => f64::from(b.bottom) > (1.0 - cfg.bottom_band) * h,
            Predicate::UpperHalf => f64::from(b.top) < 0.5 * h,
            Predicate::LeftRail => {
                f64::from(b.left) < cfg.left_band * w && f64::from(b.width()) < cfg.wide_fraction * w
            }
            Predicate::WideGroup => f64::from(b.width()) >= cfg.wide_fraction * w,
            Predicate::TallGroup { fraction } => f64::from(b.height()) >= fraction * h,
            Predicate::SmallSquareImage => view.images().any(|i| is_small_square(&i.bounds, w, cfg)),
            Predicate::MediumImage => view.images().any(|i| {
                let iw = f64::from(i.bounds.width());
                iw > cfg.icon_fraction * w && iw < cfg.wide_fraction * w
            }),
            Predicate::WideImage => view
                .images()
                .any(|i| f64::from(i.bounds.width()) >= cfg.wide_fraction * w),
            Predicate::TextBesideImage => view.any_text_beside(),
            Predicate::TextBelowImage => view.any_text_below(),
            Predicate::TextNearImage => view.any_text_beside() || view.any_text_below(),
            Predicate::NoTextBesideImage => view.images().next().is_some() && !view.any_text_beside(),
            Predicate::MinUnits { count } => view.group.units.len() >= *count,
            Predicate::MinRows { count } => view.group.row_spans.len() >= *count,
            Predicate::LabeledUnits => view
                .group
                .unit_members()
                .all(|unit| unit.iter().any(|&m| view.tree.node(m).label().is_some())),
            Predicate::BackArrowTitle => view.images().any(|i| {
                is_small_square(&i.bounds, w, cfg)
                    && f64::from(i.bounds.left) < cfg.left_band * w
                    && view.texts().any(|t| beside(&i.bounds, &t.bounds))
            }),
        }
    }
}

fn is_small_square(b: &Bounds, screen_w: f64, cfg: &ClassifyConfig) -> bool {
    let (bw, bh) = (b.width(), b.height());
    f64::from(bw) <= cfg.icon_fraction * screen_w && 4 * (bw - bh).abs() <= bw.max(bh)
}

fn beside(image: &Bounds, text: &Bounds) -> bool {
    text.left >= image.right && text.y_overlap(image) > 0
}

fn under(image: &Bounds, text: &Bounds) -> bool {
    text.top >= image.bottom && text.x_overlap(image) > 0
}

struct GroupView<'a> {
    tree: &'a DomTree,
    group: &'a ComponentGroup,
    screen: &'a ScreenInfo,
    cfg: &'a ClassifyConfig,
    /// Members plus their ancestors up to the members' common ancestor.
    context: Vec<&'a UiNode>,
}

impl<'a> GroupView<'a> {
    fn new(tree: &'a DomTree, group: &'a ComponentGroup, screen: &'a ScreenInfo, cfg: &'a ClassifyConfig) -> Self {
        let lca = tree.common_ancestor(&group.members);
        let mut ids: Vec<NodeId> = Vec::new();
        for &m in &group.members {
            ids.push(m);
            if Some(m) == lca {
                continue;
            }
            for a in tree.ancestors(m) {
                ids.push(a);
                if Some(a) == lca {
                    break;
                }
            }
        }
        ids.sort();
        ids.dedup();
        let context = ids.into_iter().map(|id| tree.node(id)).collect();
        Self {
            tree,
            group,
            screen,
            cfg,
            context,
        }
    }

    fn members(&self) -> impl Iterator<Item = &'a UiNode> + '_ {
        self.group.members.iter().map(|&m| self.tree.node(m))
    }

    fn images(&self) -> impl Iterator<Item = &'a UiNode> + '_ {
        self.members().filter(|n| n.widget_kind == WidgetKind::Image)
    }

    fn texts(&self) -> impl Iterator<Item = &'a UiNode> + '_ {
        self.members().filter(|n| n.widget_kind == WidgetKind::Text)
    }

    fn any_text_beside(&self) -> bool {
        self.images()
            .any(|i| self.texts().any(|t| beside(&i.bounds, &t.bounds)))
    }

    fn any_text_below(&self) -> bool {
        self.images().any(|i| self.texts().any(|t| under(&i.bounds, &t.bounds)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSpec {
    pub category: PhoneGroupCategory,
    pub predicates: Vec<Predicate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateCatalog {
    #[serde(rename = "template")]
    pub templates: Vec<TemplateSpec>,
}

pub const DEFAULT_TEMPLATES: &str = include_str!("../data/templates.toml");

impl TemplateCatalog {
    pub fn from_toml(text: &str) -> Result<Self, ClassifyError> {
        let catalog: TemplateCatalog =
            toml::from_str(text).map_err(|e| ClassifyError::InvalidCatalog(e.to_string()))?;
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifyError> {
        let catalog: TemplateCatalog =
            serde_json::from_str(text).map_err(|e| ClassifyError::InvalidCatalog(e.to_string()))?;
        catalog.validate()?;
        Ok(catalog)
    }

    /// Loads a catalog file; `.json` files are read as JSON, anything else as TOML.
    pub fn load(path: &Path) -> Result<Self, ClassifyError> {
        let text = std::fs::read_to_string(path).map_err(|source| ClassifyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn builtin() -> &'static TemplateCatalog {
        static CATALOG: OnceLock<TemplateCatalog> = OnceLock::new();
        CATALOG.get_or_init(|| TemplateCatalog::from_toml(DEFAULT_TEMPLATES).expect("built-in templates parse"))
    }

    fn validate(&self) -> Result<(), ClassifyError> {
        if self.templates.is_empty() {
            return Err(ClassifyError::InvalidCatalog("no templates".into()));
        }
        for t in &self.templates {
            if t.category == PhoneGroupCategory::Others {
                return Err(ClassifyError::InvalidCatalog(
                    "`Others` is the fallback and takes no template".into(),
                ));
            }
            if t.predicates.len() < 2 {
                return Err(ClassifyError::InvalidCatalog(format!(
                    "template {:?} needs at least two predicates",
                    t.category
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    /// A template must match strictly more predicates than this.
    pub threshold: usize,
    pub top_band: f64,
    pub bottom_band: f64,
    pub left_band: f64,
    /// Widest image, as a fraction of screen width, still treated as an icon.
    pub icon_fraction: f64,
    /// Fraction of screen width that counts as spanning the screen.
    pub wide_fraction: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            threshold: 2,
            top_band: 0.3,
            bottom_band: 0.3,
            left_band: 0.25,
            icon_fraction: 0.15,
            wide_fraction: 0.85,
        }
    }
}

impl ClassifyConfig {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let frac = |v: f64| v > 0.0 && v <= 1.0;
        if self.threshold < 1 {
            return Err(ClassifyError::InvalidCatalog("threshold must be at least 1".into()));
        }
        if ![
            self.top_band,
            self.bottom_band,
            self.left_band,
            self.icon_fraction,
            self.wide_fraction,
        ]
        .into_iter()
        .all(frac)
        {
            return Err(ClassifyError::InvalidCatalog(
                "band and size fractions must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedGroup {
    pub group: ComponentGroup,
    pub category: PhoneGroupCategory,
    /// Count of the best-scoring template, whether or not it cleared the threshold.
    pub matched_attribute_count: usize,
    pub matched_attribute_names: Vec<String>,
}

/// Scores `group` against every template and keeps the best one.
pub fn match_template(
    tree: &DomTree,
    group: &ComponentGroup,
    screen: &ScreenInfo,
    catalog: &TemplateCatalog,
    cfg: &ClassifyConfig,
) -> ClassifiedGroup {
    let view = GroupView::new(tree, group, screen, cfg);
    let mut best: Option<(usize, usize, PhoneGroupCategory, Vec<String>)> = None;
    for template in &catalog.templates {
        let names: Vec<String> = template
            .predicates
            .iter()
            .filter(|p| p.eval(&view))
            .map(Predicate::name)
            .collect();
        let score = (names.len(), template.category.priority());
        let better = match &best {
            None => true,
            Some((count, prio, ..)) => score.0 > *count || (score.0 == *count && score.1 < *prio),
        };
        if better {
            best = Some((score.0, score.1, template.category, names));
        }
    }
    let (count, _, category, names) = best.expect("catalog is non-empty");
    ClassifiedGroup {
        group: group.clone(),
        category: if count > cfg.threshold {
            category
        } else {
            PhoneGroupCategory::Others
        },
        matched_attribute_count: count,
        matched_attribute_names: names,
    }
}

/// Classifies every group and every ungrouped leaf, top to bottom.
pub fn classify_page(
    tree: &DomTree,
    result: &GroupingResult,
    screen: &ScreenInfo,
    catalog: &TemplateCatalog,
    cfg: &ClassifyConfig,
) -> Vec<ClassifiedGroup> {
    let mut groups: Vec<ComponentGroup> = result.groups.clone();
    groups.extend(
        result
            .ungrouped
            .iter()
            .map(|&leaf| ComponentGroup::singleton(tree, leaf)),
    );
    groups.sort_by_key(|g| (g.bounding.top, g.bounding.left, g.members.iter().min().copied()));
    groups
        .iter()
        .map(|g| match_template(tree, g, screen, catalog, cfg))
        .collect()
}
