//! Phone-to-TV group mapping and the TV page model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ClassifiedGroup, PhoneGroupCategory};
use crate::hierarchy::{Bounds, DomTree, NodeId, ScreenInfo, WidgetKind};

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("page has no classified groups")]
    EmptyPage,
    #[error("TV screen {width}x{height} is not landscape")]
    NotLandscape { width: u32, height: u32 },
    #[error("invalid transform config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TvGroupCategory {
    IconInfo,
    ToolBar,
    Search,
    TabLayout,
    Channel,
    GridLayout,
    PicInfo,
    VideoMusicPlayer,
    ListView,
}

impl TvGroupCategory {
    pub const ALL: [TvGroupCategory; 9] = [
        TvGroupCategory::IconInfo,
        TvGroupCategory::ToolBar,
        TvGroupCategory::Search,
        TvGroupCategory::TabLayout,
        TvGroupCategory::Channel,
        TvGroupCategory::GridLayout,
        TvGroupCategory::PicInfo,
        TvGroupCategory::VideoMusicPlayer,
        TvGroupCategory::ListView,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Large,
    Medium,
    Small,
}

impl SizeClass {
    pub const ALL: [SizeClass; 3] = [SizeClass::Large, SizeClass::Medium, SizeClass::Small];

    pub fn as_str(self) -> &'static str {
        match self {
            SizeClass::Large => "large",
            SizeClass::Medium => "medium",
            SizeClass::Small => "small",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Image,
    Icon,
    Text,
    Player,
}

impl ItemKind {
    pub fn is_visual(self) -> bool {
        !matches!(self, ItemKind::Text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TvItem {
    /// `item_N`, numbered in final page order.
    pub id: String,
    pub kind: ItemKind,
    /// `src_N` where N is the node carrying the item's visual content.
    pub source: String,
    pub title: String,
    pub selected: bool,
    /// Area of the item's phone bounding box, in px².
    pub phone_area: i64,
    pub members: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvGroup {
    pub category: TvGroupCategory,
    pub size_class: SizeClass,
    pub items: Vec<TvItem>,
    /// Indices into the classified groups this TV group was built from.
    pub origins: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvPage {
    pub screen: ScreenInfo,
    pub groups: Vec<TvGroup>,
}

impl TvPage {
    pub fn items(&self) -> impl Iterator<Item = &TvItem> + '_ {
        self.groups.iter().flat_map(|g| g.items.iter())
    }

    pub fn channel(&self) -> Option<&TvGroup> {
        self.groups.iter().find(|g| g.category == TvGroupCategory::Channel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformConfig {
    /// Rows with at most this many units use large cards.
    pub large_max_per_row: usize,
    /// Rows with at most this many units (and more than `large_max_per_row`) use medium cards.
    pub medium_max_per_row: usize,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            large_max_per_row: 3,
            medium_max_per_row: 5,
        }
    }
}

impl TransformConfig {
    pub fn validate(&self) -> Result<(), TransformError> {
        if self.large_max_per_row == 0 || self.medium_max_per_row < self.large_max_per_row {
            return Err(TransformError::InvalidConfig(
                "need 0 < large_max_per_row <= medium_max_per_row".into(),
            ));
        }
        Ok(())
    }

    pub fn size_class(&self, per_row: usize) -> SizeClass {
        if per_row <= self.large_max_per_row {
            SizeClass::Large
        } else if per_row <= self.medium_max_per_row {
            SizeClass::Medium
        } else {
            SizeClass::Small
        }
    }
}

pub fn map_category(phone: PhoneGroupCategory) -> TvGroupCategory {
    use PhoneGroupCategory as P;
    use TvGroupCategory as T;
    match phone {
        P::IconInfo => T::IconInfo,
        P::ToolBar => T::ToolBar,
        P::ListView => T::ListView,
        P::TopTabLayout => T::TabLayout,
        P::Search => T::Search,
        P::Others => T::GridLayout,
        P::VideoMusicPlayer => T::VideoMusicPlayer,
        P::PicSideInfo => T::PicInfo,
        P::PicInfo => T::PicInfo,
        P::BigPic => T::PicInfo,
        P::BottomTabLayout => T::Channel,
        P::SideNav => T::Channel,
        P::ShortVideoPlayer => T::VideoMusicPlayer,
    }
}

fn fallback_title(tree: &DomTree, members: &[NodeId]) -> String {
    let node = tree.node(members[0]);
    let raw = node.resource_id.as_deref().unwrap_or(&node.class_name);
    raw.rsplit(['/', '.', '$']).next().unwrap_or(raw).to_string()
}

fn build_item(tree: &DomTree, members: &[NodeId], category: TvGroupCategory, context_player: bool) -> TvItem {
    let nodes: Vec<_> = members.iter().map(|&m| tree.node(m)).collect();
    let visual = nodes
        .iter()
        .find(|n| n.widget_kind == WidgetKind::Player)
        .or_else(|| nodes.iter().find(|n| n.widget_kind.is_image_like()));
    let kind = match visual.map(|n| n.widget_kind) {
        Some(WidgetKind::Player) => ItemKind::Player,
        Some(_) if category == TvGroupCategory::IconInfo => ItemKind::Icon,
        Some(_) => ItemKind::Image,
        None if context_player => ItemKind::Player,
        None => ItemKind::Text,
    };
    let source_node = visual.copied().unwrap_or(nodes[0]);
    let labels: Vec<&str> = nodes.iter().filter_map(|n| n.label()).collect();
    let title = if labels.is_empty() && category == TvGroupCategory::Channel {
        fallback_title(tree, members)
    } else {
        labels.join(" ")
    };
    let bounding = Bounds::union_all(nodes.iter().map(|n| n.bounds)).expect("unit has members");
    TvItem {
        id: String::new(),
        kind,
        source: format!("src_{}", source_node.id.0),
        title,
        selected: nodes.iter().any(|n| n.is_selected()),
        phone_area: bounding.area(),
        members: members.to_vec(),
    }
}

fn build_group(tree: &DomTree, index: usize, classified: &ClassifiedGroup, cfg: &TransformConfig) -> TvGroup {
    let category = map_category(classified.category);
    let group = &classified.group;
    let units: Vec<&[NodeId]> = if category == TvGroupCategory::Search {
        // the query field and its buttons read as one search box
        vec![&group.members[..]]
    } else {
        group.unit_members().collect()
    };
    let context_player = category == TvGroupCategory::VideoMusicPlayer
        && tree.common_ancestor(&group.members).is_some_and(|lca| {
            tree.ancestors(lca)
                .chain([lca])
                .any(|a| tree.node(a).widget_kind == WidgetKind::Player)
        });
    let items: Vec<TvItem> = units
        .into_iter()
        .map(|u| build_item(tree, u, category, context_player))
        .collect();
    let per_row = group.units_per_row().into_iter().max().unwrap_or(1);
    TvGroup {
        category,
        size_class: cfg.size_class(per_row),
        items,
        origins: vec![index],
    }
}

/// Builds the TV page: one group per classified phone group, in phone reading
/// order, except that every Channel source is merged into a single Channel
/// placed first.
pub fn build_tv_page(
    tree: &DomTree,
    classified: &[ClassifiedGroup],
    tv_screen: &ScreenInfo,
    cfg: &TransformConfig,
) -> Result<TvPage, TransformError> {
    if !tv_screen.is_landscape() {
        return Err(TransformError::NotLandscape {
            width: tv_screen.width_px,
            height: tv_screen.height_px,
        });
    }
    if classified.is_empty() {
        return Err(TransformError::EmptyPage);
    }
    let mut channel: Option<TvGroup> = None;
    let mut rest = Vec::new();
    for (i, c) in classified.iter().enumerate() {
        let group = build_group(tree, i, c, cfg);
        if group.category != TvGroupCategory::Channel {
            rest.push(group);
            continue;
        }
        match &mut channel {
            Some(ch) => {
                ch.items.extend(group.items);
                ch.origins.extend(group.origins);
            }
            None => channel = Some(group),
        }
    }
    if let Some(ch) = &mut channel {
        ch.size_class = cfg.size_class(ch.items.len());
    }
    let mut groups: Vec<TvGroup> = channel.into_iter().chain(rest).collect();
    for (n, item) in groups.iter_mut().flat_map(|g| g.items.iter_mut()).enumerate() {
        item.id = format!("item_{n}");
    }
    Ok(TvPage {
        screen: *tv_screen,
        groups,
    })
}
