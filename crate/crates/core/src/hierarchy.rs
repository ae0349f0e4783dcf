//! UI Automator hierarchy dumps parsed into an arena-backed DOM tree.
//!
//! Nodes are stored in document (pre-)order, so a [`NodeId`] doubles as the
//! document position of a node. Bounds containment between parent and child
//! is never checked: real dumps routinely contain children that overflow
//! their parents or sit off-screen.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HierarchyError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("malformed bounds {value:?}: expected \"[x1,y1][x2,y2]\"")]
    MalformedBounds { value: String },
    #[error("hierarchy contains no nodes")]
    EmptyHierarchy,
    #[error("invalid screen size {width}x{height}")]
    InvalidScreen { width: i64, height: i64 },
    #[error("invalid widget rule table: {0}")]
    Rules(String),
}

/// Index of a node inside a [`DomTree`]; equal to its document position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Portrait,
    Landscape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScreenInfo {
    pub width_px: u32,
    pub height_px: u32,
    pub orientation: Orientation,
}

impl ScreenInfo {
    pub fn new(width_px: u32, height_px: u32, orientation: Orientation) -> Result<Self, HierarchyError> {
        if width_px == 0 || height_px == 0 {
            return Err(HierarchyError::InvalidScreen {
                width: width_px.into(),
                height: height_px.into(),
            });
        }
        Ok(Self {
            width_px,
            height_px,
            orientation,
        })
    }

    /// Screen whose orientation follows its aspect ratio.
    pub fn from_size(width_px: u32, height_px: u32) -> Result<Self, HierarchyError> {
        let orientation = if width_px > height_px {
            Orientation::Landscape
        } else {
            Orientation::Portrait
        };
        Self::new(width_px, height_px, orientation)
    }

    pub fn is_landscape(&self) -> bool {
        self.orientation == Orientation::Landscape
    }
}

/// Axis-aligned rectangle in screen pixels, right/bottom exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bounds {
    pub left: i32,
    pub top: i32,
    pub right: i32,
    pub bottom: i32,
}

impl Bounds {
    /// Panics if `left > right` or `top > bottom`.
    pub fn new(left: i32, top: i32, right: i32, bottom: i32) -> Self {
        assert!(
            left <= right && top <= bottom,
            "inverted bounds [{left},{top}][{right},{bottom}]"
        );
        Self {
            left,
            top,
            right,
            bottom,
        }
    }

    pub fn from_xywh(x: i32, y: i32, width: i32, height: i32) -> Self {
        Self::new(x, y, x + width, y + height)
    }

    pub fn width(&self) -> i32 {
        self.right - self.left
    }

    pub fn height(&self) -> i32 {
        self.bottom - self.top
    }

    pub fn area(&self) -> i64 {
        i64::from(self.width()) * i64::from(self.height())
    }

    pub fn is_empty(&self) -> bool {
        self.width() == 0 || self.height() == 0
    }

    pub fn union(&self, other: &Bounds) -> Bounds {
        Bounds {
            left: self.left.min(other.left),
            top: self.top.min(other.top),
            right: self.right.max(other.right),
            bottom: self.bottom.max(other.bottom),
        }
    }

    /// Smallest rectangle covering every input; `None` for an empty iterator.
    pub fn union_all<I: IntoIterator<Item = Bounds>>(iter: I) -> Option<Bounds> {
        iter.into_iter().reduce(|a, b| a.union(&b))
    }

    /// Twice the horizontal midpoint, kept integral.
    pub fn mid_x2(&self) -> i64 {
        i64::from(self.left) + i64::from(self.right)
    }

    /// Length of the shared X interval, zero when disjoint.
    pub fn x_overlap(&self, other: &Bounds) -> i32 {
        (self.right.min(other.right) - self.left.max(other.left)).max(0)
    }

    pub fn y_overlap(&self, other: &Bounds) -> i32 {
        (self.bottom.min(other.bottom) - self.top.max(other.top)).max(0)
    }

    /// Horizontal distance between the two rectangles, zero when they overlap or touch.
    pub fn x_gap(&self, other: &Bounds) -> i32 {
        (self.left.max(other.left) - self.right.min(other.right)).max(0)
    }

    pub fn contains(&self, other: &Bounds) -> bool {
        self.left <= other.left && self.top <= other.top && self.right >= other.right && self.bottom >= other.bottom
    }

    pub fn intersects(&self, other: &Bounds) -> bool {
        self.x_overlap(other) > 0 && self.y_overlap(other) > 0
    }

    pub fn scaled(&self, factor: i32) -> Bounds {
        Bounds::new(
            self.left * factor,
            self.top * factor,
            self.right * factor,
            self.bottom * factor,
        )
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}][{},{}]", self.left, self.top, self.right, self.bottom)
    }
}

impl FromStr for Bounds {
    type Err = HierarchyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || HierarchyError::MalformedBounds { value: s.to_string() };
        let mut rest = s;
        let mut coords = [0i32; 4];
        for pair in 0..2 {
            rest = rest.strip_prefix('[').ok_or_else(malformed)?;
            let close = rest.find(']').ok_or_else(malformed)?;
            let (x, y) = rest[..close].split_once(',').ok_or_else(malformed)?;
            coords[pair * 2] = parse_coord(x).ok_or_else(malformed)?;
            coords[pair * 2 + 1] = parse_coord(y).ok_or_else(malformed)?;
            rest = &rest[close + 1..];
        }
        if !rest.is_empty() {
            return Err(malformed());
        }
        let [left, top, right, bottom] = coords;
        if left > right || top > bottom {
            return Err(malformed());
        }
        Ok(Bounds {
            left,
            top,
            right,
            bottom,
        })
    }
}

// Strict integer: optional '-', ASCII digits only. Keeps formatting reversible.
fn parse_coord(s: &str) -> Option<i32> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WidgetKind {
    Text,
    Image,
    Button,
    TabBar,
    ActionBar,
    ListContainer,
    Player,
    SearchBox,
    SideNavContainer,
    WebContent,
    Other,
}

impl WidgetKind {
    pub fn is_image_like(self) -> bool {
        matches!(self, WidgetKind::Image | WidgetKind::Player)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UiNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub depth: usize,
    pub widget_kind: WidgetKind,
    pub bounds: Bounds,
    pub text: Option<String>,
    pub resource_id: Option<String>,
    pub class_name: String,
    /// Raw XML attributes in document order.
    pub attributes: Vec<(String, String)>,
}

impl UiNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    /// `true` when the `selected` attribute is set.
    pub fn is_selected(&self) -> bool {
        self.attr("selected") == Some("true")
    }

    /// Visible label: `text`, falling back to `content-desc`.
    pub fn label(&self) -> Option<&str> {
        self.text
            .as_deref()
            .or_else(|| self.attr("content-desc").filter(|s| !s.is_empty()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomTree {
    nodes: Vec<UiNode>,
    roots: Vec<NodeId>,
    screen: ScreenInfo,
}

impl DomTree {
    pub fn node(&self, id: NodeId) -> &UiNode {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> &[UiNode] {
        &self.nodes
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn screen(&self) -> ScreenInfo {
        self.screen
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.node(id).parent
    }

    /// Strict ancestors of `id`, nearest first.
    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.parent(id), move |&p| self.parent(p))
    }

    pub fn is_ancestor_or_self(&self, ancestor: NodeId, id: NodeId) -> bool {
        ancestor == id || self.ancestors(id).any(|a| a == ancestor)
    }

    /// Structural leaves in document order.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.nodes.iter().filter(|n| n.is_leaf()).map(|n| n.id).collect()
    }

    /// Units that take part in grouping, in document order: structural
    /// leaves plus web-content nodes (whose subtrees are opaque), minus
    /// anything with zero area.
    pub fn grouping_leaves(&self) -> Vec<NodeId> {
        self.grouping_leaves_under_roots(&self.roots)
    }

    pub fn grouping_leaves_under(&self, id: NodeId) -> Vec<NodeId> {
        self.grouping_leaves_under_roots(&[id])
    }

    fn grouping_leaves_under_roots(&self, roots: &[NodeId]) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = roots.iter().rev().copied().collect();
        while let Some(id) = stack.pop() {
            let node = self.node(id);
            if node.is_leaf() || node.widget_kind == WidgetKind::WebContent {
                if !node.bounds.is_empty() {
                    out.push(id);
                }
                continue;
            }
            stack.extend(node.children.iter().rev().copied());
        }
        out
    }

    /// Lowest common ancestor (inclusive) of a non-empty set of nodes.
    pub fn common_ancestor(&self, ids: &[NodeId]) -> Option<NodeId> {
        let (&first, rest) = ids.split_first()?;
        let mut chain: Vec<NodeId> = std::iter::once(first).chain(self.ancestors(first)).collect();
        for &id in rest {
            let pos = chain.iter().position(|&c| self.is_ancestor_or_self(c, id))?;
            chain.drain(..pos);
        }
        chain.first().copied()
    }
}

/// Ordered substring rules mapping class names and resource ids to widget kinds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidgetRules {
    #[serde(rename = "rule")]
    pub rules: Vec<WidgetRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidgetRule {
    pub field: RuleField,
    pub contains: Vec<String>,
    pub kind: WidgetKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleField {
    Class,
    ResourceId,
}

pub const DEFAULT_WIDGET_RULES: &str = include_str!("../data/widget_rules.toml");

impl WidgetRules {
    pub fn from_toml(text: &str) -> Result<Self, HierarchyError> {
        toml::from_str(text).map_err(|e| HierarchyError::Rules(e.to_string()))
    }

    pub fn builtin() -> &'static WidgetRules {
        static RULES: OnceLock<WidgetRules> = OnceLock::new();
        RULES.get_or_init(|| WidgetRules::from_toml(DEFAULT_WIDGET_RULES).expect("built-in widget rules parse"))
    }

    pub fn infer(&self, class_name: &str, resource_id: Option<&str>) -> WidgetKind {
        let rid = resource_id.map(str::to_ascii_lowercase);
        for rule in &self.rules {
            let hit = match rule.field {
                RuleField::Class => rule.contains.iter().any(|p| class_name.contains(p.as_str())),
                RuleField::ResourceId => rid.as_deref().is_some_and(|r| {
                    rule.contains
                        .iter()
                        .any(|p| r.contains(p.to_ascii_lowercase().as_str()))
                }),
            };
            if hit {
                return rule.kind;
            }
        }
        WidgetKind::Other
    }
}

/// Widget kind of `node` under the built-in rule table.
pub fn infer_widget_kind(node: &UiNode) -> WidgetKind {
    WidgetRules::builtin().infer(&node.class_name, node.resource_id.as_deref())
}

pub fn parse_hierarchy(xml_text: &str, screen: Option<ScreenInfo>) -> Result<DomTree, HierarchyError> {
    parse_hierarchy_with(xml_text, screen, WidgetRules::builtin())
}

pub fn parse_hierarchy_with(
    xml_text: &str,
    screen: Option<ScreenInfo>,
    rules: &WidgetRules,
) -> Result<DomTree, HierarchyError> {
    let doc = roxmltree::Document::parse(xml_text).map_err(|e| HierarchyError::MalformedXml(e.to_string()))?;
    let root = doc.root_element();

    let (top_elements, rotation): (Vec<roxmltree::Node>, Option<&str>) = if root.has_tag_name("hierarchy") {
        (
            root.children().filter(|n| n.is_element()).collect(),
            root.attribute("rotation"),
        )
    } else {
        (vec![root], None)
    };
    if top_elements.is_empty() {
        return Err(HierarchyError::EmptyHierarchy);
    }

    let mut nodes: Vec<UiNode> = Vec::new();
    let mut roots = Vec::with_capacity(top_elements.len());
    // (element, parent, depth)
    let mut stack: Vec<(roxmltree::Node, Option<NodeId>, usize)> =
        top_elements.iter().rev().map(|&e| (e, None, 0)).collect();
    while let Some((elem, parent, depth)) = stack.pop() {
        let id = NodeId(nodes.len());
        let mut node = element_to_node(elem, id, parent, depth, rules)?;
        node.children.clear();
        match parent {
            Some(p) => nodes[p.0].children.push(id),
            None => roots.push(id),
        }
        nodes.push(node);
        for child in elem
            .children()
            .filter(|n| n.is_element())
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
        {
            stack.push((child, Some(id), depth + 1));
        }
    }

    let screen = match screen {
        Some(s) => s,
        None => infer_screen(&nodes, &roots, rotation)?,
    };
    Ok(DomTree { nodes, roots, screen })
}

fn element_to_node(
    elem: roxmltree::Node,
    id: NodeId,
    parent: Option<NodeId>,
    depth: usize,
    rules: &WidgetRules,
) -> Result<UiNode, HierarchyError> {
    let attributes: Vec<(String, String)> = elem
        .attributes()
        .map(|a| (a.name().to_string(), a.value().to_string()))
        .collect();
    let get = |name: &str| elem.attribute(name).filter(|v| !v.is_empty()).map(str::to_string);
    let bounds: Bounds = elem.attribute("bounds").unwrap_or_default().parse()?;
    let class_name = elem.attribute("class").unwrap_or_default().to_string();
    let resource_id = get("resource-id");
    let widget_kind = rules.infer(&class_name, resource_id.as_deref());
    Ok(UiNode {
        id,
        parent,
        children: Vec::new(),
        depth,
        widget_kind,
        bounds,
        text: get("text"),
        resource_id,
        class_name,
        attributes,
    })
}

fn infer_screen(nodes: &[UiNode], roots: &[NodeId], rotation: Option<&str>) -> Result<ScreenInfo, HierarchyError> {
    let extent = Bounds::union_all(roots.iter().map(|r| nodes[r.0].bounds)).ok_or(HierarchyError::EmptyHierarchy)?;
    let (w, h) = (extent.right, extent.bottom);
    if w <= 0 || h <= 0 {
        return Err(HierarchyError::InvalidScreen {
            width: w.into(),
            height: h.into(),
        });
    }
    let orientation = match rotation.map(str::trim) {
        Some("1") | Some("3") => Orientation::Landscape,
        Some("0") | Some("2") => Orientation::Portrait,
        _ if w > h => Orientation::Landscape,
        _ => Orientation::Portrait,
    };
    ScreenInfo::new(w as u32, h as u32, orientation)
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_NODES: &str = r#"<?xml version='1.0' encoding='UTF-8' standalone='yes' ?>
<hierarchy rotation="0">
  <node index="0" text="" resource-id="" class="android.widget.FrameLayout" bounds="[0,0][1080,1920]">
    <node index="0" text="Hello" resource-id="app:id/title" class="android.widget.TextView" bounds="[0,0][540,100]" />
    <node index="1" text="" resource-id="app:id/poster" class="android.widget.ImageView" bounds="[540,0][1080,100]" />
  </node>
</hierarchy>"#;

    #[test]
    fn bounds_parse_and_format() {
        let b: Bounds = "[0,0][1080,1920]".parse().unwrap();
        assert_eq!(b, Bounds::new(0, 0, 1080, 1920));
        assert_eq!(b.to_string(), "[0,0][1080,1920]");
        assert_eq!(b.width(), 1080);
        assert_eq!(b.height(), 1920);
    }

    #[test]
    fn bounds_rejects_bad_formats() {
        for bad in [
            "",
            "[0,0]",
            "[0,0][1,1]x",
            "(0,0)(1,1)",
            "[a,0][1,1]",
            "[+1,0][2,2]",
            "[5,0][1,1]",
            "[0, 0][1,1]",
        ] {
            assert!(
                matches!(bad.parse::<Bounds>(), Err(HierarchyError::MalformedBounds { .. })),
                "{bad:?} should be rejected"
            );
        }
        assert_eq!("[-5,-2][0,0]".parse::<Bounds>().unwrap(), Bounds::new(-5, -2, 0, 0));
    }

    #[test]
    fn parses_three_node_fixture() {
        let tree = parse_hierarchy(THREE_NODES, None).unwrap();
        assert_eq!(tree.len(), 3);
        assert_eq!(tree.leaves(), vec![NodeId(1), NodeId(2)]);
        let root = tree.node(tree.roots()[0]);
        assert_eq!(root.widget_kind, WidgetKind::Other);
        assert_eq!(tree.node(NodeId(1)).widget_kind, WidgetKind::Text);
        assert_eq!(tree.node(NodeId(1)).text.as_deref(), Some("Hello"));
        assert_eq!(tree.node(NodeId(2)).text, None);
        assert_eq!(tree.node(NodeId(2)).widget_kind, WidgetKind::Image);
        let screen = tree.screen();
        assert_eq!((screen.width_px, screen.height_px), (1080, 1920));
        assert_eq!(screen.orientation, Orientation::Portrait);
    }

    #[test]
    fn empty_input_is_malformed_xml() {
        assert!(matches!(
            parse_hierarchy("", None),
            Err(HierarchyError::MalformedXml(_))
        ));
        assert!(matches!(
            parse_hierarchy("<node", None),
            Err(HierarchyError::MalformedXml(_))
        ));
    }

    #[test]
    fn empty_hierarchy_wrapper() {
        assert_eq!(
            parse_hierarchy("<hierarchy rotation=\"0\"/>", None),
            Err(HierarchyError::EmptyHierarchy)
        );
    }

    #[test]
    fn bad_bounds_attribute() {
        let xml = r#"<node class="x" bounds="[0,0][10]"/>"#;
        assert!(matches!(
            parse_hierarchy(xml, None),
            Err(HierarchyError::MalformedBounds { .. })
        ));
    }

    #[test]
    fn rotation_sets_orientation() {
        let xml = r#"<hierarchy rotation="1"><node class="a" bounds="[0,0][1920,1080]"/></hierarchy>"#;
        let tree = parse_hierarchy(xml, None).unwrap();
        assert_eq!(tree.screen().orientation, Orientation::Landscape);
    }

    #[test]
    fn explicit_screen_wins() {
        let screen = ScreenInfo::new(720, 1280, Orientation::Portrait).unwrap();
        let tree = parse_hierarchy(THREE_NODES, Some(screen)).unwrap();
        assert_eq!(tree.screen(), screen);
    }

    fn kind_of(class: &str, rid: Option<&str>) -> WidgetKind {
        WidgetRules::builtin().infer(class, rid)
    }

    #[test]
    fn widget_kind_rules() {
        assert_eq!(kind_of("android.widget.TextView", None), WidgetKind::Text);
        assert_eq!(
            kind_of("android.widget.Button", Some("searchBtn")),
            WidgetKind::SearchBox
        );
        assert_eq!(kind_of("android.widget.Button", Some("ok")), WidgetKind::Button);
        assert_eq!(kind_of("com.custom.FancyView", None), WidgetKind::Other);
        assert_eq!(kind_of("android.widget.ImageButton", None), WidgetKind::Image);
        assert_eq!(kind_of("android.app.ActionBar$Tab", None), WidgetKind::TabBar);
        assert_eq!(kind_of("android.app.ActionBar-Tab", None), WidgetKind::TabBar);
        assert_eq!(
            kind_of("androidx.appcompat.widget.Toolbar", None),
            WidgetKind::ActionBar
        );
        assert_eq!(
            kind_of("androidx.recyclerview.widget.RecyclerView", None),
            WidgetKind::ListContainer
        );
        assert_eq!(kind_of("android.widget.VideoView", None), WidgetKind::Player);
        assert_eq!(kind_of("android.webkit.WebView", None), WidgetKind::WebContent);
        assert_eq!(
            kind_of(
                "com.google.android.material.bottomnavigation.BottomNavigationView",
                None
            ),
            WidgetKind::TabBar
        );
        assert_eq!(
            kind_of("android.widget.FrameLayout", Some("app:id/nav_drawer")),
            WidgetKind::SideNavContainer
        );
        assert_eq!(
            kind_of("android.widget.LinearLayout", Some("app:id/Search_Container")),
            WidgetKind::SearchBox
        );
    }

    #[test]
    fn web_content_is_opaque_for_grouping() {
        let xml = r#"<node class="android.widget.FrameLayout" bounds="[0,0][100,100]">
            <node class="android.webkit.WebView" bounds="[0,0][100,50]">
                <node class="android.view.View" bounds="[0,0][100,20]"/>
                <node class="android.view.View" bounds="[0,20][100,40]"/>
            </node>
            <node class="android.widget.TextView" bounds="[0,50][100,60]"/>
            <node class="android.widget.TextView" bounds="[0,60][0,70]"/>
        </node>"#;
        let tree = parse_hierarchy(xml, None).unwrap();
        assert_eq!(tree.len(), 6);
        // zero-area text stays in the tree but is not a grouping leaf
        assert_eq!(tree.grouping_leaves(), vec![NodeId(1), NodeId(4)]);
    }

    #[test]
    fn common_ancestor_of_siblings_is_parent() {
        let tree = parse_hierarchy(THREE_NODES, None).unwrap();
        assert_eq!(tree.common_ancestor(&[NodeId(1), NodeId(2)]), Some(NodeId(0)));
        assert_eq!(tree.common_ancestor(&[NodeId(2)]), Some(NodeId(2)));
        assert_eq!(tree.common_ancestor(&[]), None);
    }

    #[test]
    fn custom_rules_from_toml() {
        let rules = WidgetRules::from_toml(
            r#"
[[rule]]
field = "class"
contains = ["FancyView"]
kind = "Image"
"#,
        )
        .unwrap();
        assert_eq!(rules.infer("com.custom.FancyView", None), WidgetKind::Image);
        assert_eq!(rules.infer("android.widget.TextView", None), WidgetKind::Other);
        assert!(WidgetRules::from_toml("rule = 3").is_err());
    }
}
