//! Three-level component grouping: atomic units (text pairs and captioned
//! images), rows trimmed from the DOM tree, and merged multi-row blocks.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::{Bounds, DomTree, NodeId, ScreenInfo, WidgetKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupingError {
    #[error("invalid grouping config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupingConfig {
    /// Fraction of the screen resolution below which two components count as adjacent.
    pub gap_coefficient: f64,
    /// Fraction of the screen width a subtree must span to form a row.
    pub row_width_coefficient: f64,
    /// Minimum X overlap between an image and its caption, relative to the narrower one.
    pub overlap_fraction: f64,
    /// Let two rows merge when they differ by a single component.
    pub allow_one_mismatch: bool,
    /// Slack for corner offsets when comparing rows.
    pub corner_tolerance_px: i32,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        Self {
            gap_coefficient: 0.025,
            row_width_coefficient: 0.85,
            overlap_fraction: 0.5,
            allow_one_mismatch: true,
            corner_tolerance_px: 4,
        }
    }
}

impl GroupingConfig {
    pub fn validate(&self) -> Result<(), GroupingError> {
        let bad = |msg: &str| Err(GroupingError::InvalidConfig(msg.to_string()));
        if !(self.gap_coefficient > 0.0 && self.gap_coefficient < 1.0) {
            return bad("gap_coefficient must lie in (0, 1)");
        }
        if !(self.row_width_coefficient > 0.0 && self.row_width_coefficient <= 1.0) {
            return bad("row_width_coefficient must lie in (0, 1]");
        }
        if !(self.overlap_fraction > 0.0 && self.overlap_fraction <= 1.0) {
            return bad("overlap_fraction must lie in (0, 1]");
        }
        if self.corner_tolerance_px < 0 {
            return bad("corner_tolerance_px must be non-negative");
        }
        Ok(())
    }

    pub fn row_width(&self, screen: &ScreenInfo) -> f64 {
        self.row_width_coefficient * f64::from(screen.width_px)
    }

    fn horizontal_limit(&self, screen: &ScreenInfo) -> f64 {
        self.gap_coefficient * f64::from(screen.width_px)
    }

    fn vertical_limit(&self, screen: &ScreenInfo) -> f64 {
        self.gap_coefficient * f64::from(screen.height_px)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKind {
    TextPair,
    ImageWithText,
    Row,
    MultiRow,
    Singleton,
}

impl GroupKind {
    pub fn is_atomic(self) -> bool {
        matches!(self, GroupKind::TextPair | GroupKind::ImageWithText)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentGroup {
    pub kind: GroupKind,
    pub members: Vec<NodeId>,
    pub bounding: Bounds,
    /// Contiguous member ranges, one per atomic unit or lone leaf.
    pub units: Vec<Range<usize>>,
    /// Contiguous member ranges, one per merged row (`MultiRow` only).
    pub row_spans: Vec<Range<usize>>,
}

impl ComponentGroup {
    fn from_units(tree: &DomTree, kind: GroupKind, units: &[&[NodeId]]) -> Self {
        let mut members = Vec::new();
        let mut ranges = Vec::with_capacity(units.len());
        for unit in units {
            let start = members.len();
            members.extend_from_slice(unit);
            ranges.push(start..members.len());
        }
        let bounding = Bounds::union_all(members.iter().map(|&m| tree.node(m).bounds)).expect("group has members");
        Self {
            kind,
            members,
            bounding,
            units: ranges,
            row_spans: Vec::new(),
        }
    }

    pub fn singleton(tree: &DomTree, leaf: NodeId) -> Self {
        Self::from_units(tree, GroupKind::Singleton, &[&[leaf]])
    }

    pub fn unit_members(&self) -> impl Iterator<Item = &[NodeId]> + '_ {
        self.units.iter().map(|r| &self.members[r.clone()])
    }

    /// Units per row; a plain group is a single row.
    pub fn units_per_row(&self) -> Vec<usize> {
        if self.row_spans.is_empty() {
            return vec![self.units.len()];
        }
        self.row_spans
            .iter()
            .map(|row| {
                self.units
                    .iter()
                    .filter(|u| u.start >= row.start && u.end <= row.end)
                    .count()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupingWarning {
    /// Backtracking hit a root narrower than the required row width; the
    /// whole tree under it became one row.
    DegenerateTree { root: NodeId, width: i32, required: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingResult {
    pub groups: Vec<ComponentGroup>,
    pub ungrouped: Vec<NodeId>,
    pub original_leaf_count: usize,
    pub final_unit_count: usize,
    pub warnings: Vec<GroupingWarning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowGroups {
    pub rows: Vec<ComponentGroup>,
    pub warnings: Vec<GroupingWarning>,
}

fn below(upper: &Bounds, lower: &Bounds) -> Option<i32> {
    (lower.top >= upper.bottom).then(|| lower.top - upper.bottom)
}

fn mid_distance(a: &Bounds, b: &Bounds) -> i64 {
    (a.mid_x2() - b.mid_x2()).abs()
}

/// Edge between an upper and a lower component, ordered for greedy matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Edge {
    y_gap: i32,
    x_distance: i64,
    upper: NodeId,
    lower: NodeId,
}

/// Pairs vertically stacked texts (caption above, explanation below).
///
/// `leaves` may contain non-text nodes; they never pair but still count when
/// deciding which element sits nearest below a text.
pub fn group_text_pairs(
    tree: &DomTree,
    leaves: &[NodeId],
    screen: &ScreenInfo,
    cfg: &GroupingConfig,
) -> Vec<ComponentGroup> {
    let x_limit = cfg.horizontal_limit(screen);
    let y_limit = cfg.vertical_limit(screen);
    let x_related = |a: &Bounds, b: &Bounds| a.x_overlap(b) > 0 || f64::from(a.x_gap(b)) < x_limit;
    let is_text = |id: NodeId| tree.node(id).widget_kind == WidgetKind::Text;

    let mut edges = Vec::new();
    for &upper in leaves.iter().filter(|&&id| is_text(id)) {
        let ub = tree.node(upper).bounds;
        let nearest = leaves
            .iter()
            .filter(|&&o| o != upper)
            .filter_map(|&o| {
                let ob = tree.node(o).bounds;
                x_related(&ub, &ob).then(|| below(&ub, &ob)).flatten()
            })
            .min();
        let Some(nearest) = nearest else { continue };
        for &lower in leaves.iter().filter(|&&id| id != upper && is_text(id)) {
            let lb = tree.node(lower).bounds;
            let Some(gap) = below(&ub, &lb) else { continue };
            if gap == nearest && f64::from(gap) < y_limit && x_related(&ub, &lb) {
                edges.push(Edge {
                    y_gap: gap,
                    x_distance: mid_distance(&ub, &lb),
                    upper,
                    lower,
                });
            }
        }
    }
    edges.sort();

    let mut used = HashMap::new();
    let mut pairs = Vec::new();
    for e in edges {
        if used.contains_key(&e.upper) || used.contains_key(&e.lower) {
            continue;
        }
        used.insert(e.upper, ());
        used.insert(e.lower, ());
        pairs.push(ComponentGroup::from_units(
            tree,
            GroupKind::TextPair,
            &[&[e.upper, e.lower]],
        ));
    }
    pairs.sort_by_key(|g| g.members[0]);
    pairs
}

/// Attaches captions to images: the nearest text below each image, packed
/// together with its pair partner when the caption is part of a text pair.
pub fn group_image_text(
    tree: &DomTree,
    leaves: &[NodeId],
    screen: &ScreenInfo,
    cfg: &GroupingConfig,
    pairs: &[ComponentGroup],
) -> Vec<ComponentGroup> {
    let y_limit = cfg.vertical_limit(screen);
    let partner: HashMap<NodeId, NodeId> = pairs
        .iter()
        .filter(|p| p.members.len() == 2)
        .flat_map(|p| [(p.members[0], p.members[1]), (p.members[1], p.members[0])])
        .collect();

    let mut edges = Vec::new();
    for &image in leaves
        .iter()
        .filter(|&&id| tree.node(id).widget_kind == WidgetKind::Image)
    {
        let ib = tree.node(image).bounds;
        let nearest = leaves
            .iter()
            .filter(|&&o| o != image)
            .filter_map(|&o| {
                let ob = tree.node(o).bounds;
                (ob.x_overlap(&ib) > 0 || ob.mid_x2() == ib.mid_x2())
                    .then(|| below(&ib, &ob))
                    .flatten()
            })
            .min();
        let Some(nearest) = nearest else { continue };
        for &text in leaves
            .iter()
            .filter(|&&id| tree.node(id).widget_kind == WidgetKind::Text)
        {
            let tb = tree.node(text).bounds;
            let Some(gap) = below(&ib, &tb) else { continue };
            if gap != nearest || f64::from(gap) >= y_limit {
                continue;
            }
            let narrower = f64::from(ib.width().min(tb.width()));
            let aligned = ib.mid_x2() == tb.mid_x2() || f64::from(ib.x_overlap(&tb)) > cfg.overlap_fraction * narrower;
            if aligned {
                edges.push(Edge {
                    y_gap: gap,
                    x_distance: mid_distance(&ib, &tb),
                    upper: image,
                    lower: text,
                });
            }
        }
    }
    edges.sort();

    let mut used: HashMap<NodeId, ()> = HashMap::new();
    let mut groups = Vec::new();
    for e in edges {
        let mut texts = vec![e.lower];
        texts.extend(partner.get(&e.lower).copied());
        if used.contains_key(&e.upper) || texts.iter().any(|t| used.contains_key(t)) {
            continue;
        }
        texts.sort();
        used.insert(e.upper, ());
        for &t in &texts {
            used.insert(t, ());
        }
        let mut unit = vec![e.upper];
        unit.extend(texts);
        groups.push(ComponentGroup::from_units(tree, GroupKind::ImageWithText, &[&unit]));
    }
    groups.sort_by_key(|g| g.members[0]);
    groups
}

#[derive(Debug, Clone)]
struct Unit {
    members: Vec<NodeId>,
    atomic: Option<GroupKind>,
    bounds: Bounds,
}

impl Unit {
    fn leaf(tree: &DomTree, id: NodeId) -> Self {
        Unit {
            members: vec![id],
            atomic: None,
            bounds: tree.node(id).bounds,
        }
    }

    fn first(&self) -> NodeId {
        self.members.iter().copied().min().expect("unit has members")
    }
}

enum Stop {
    /// The unit alone spans the required width.
    Unit,
    Node(NodeId),
}

/// Row grouping over plain leaves (every grouping leaf is its own unit).
pub fn group_rows(tree: &DomTree, screen: &ScreenInfo, cfg: &GroupingConfig) -> RowGroups {
    let units: Vec<Unit> = tree
        .grouping_leaves()
        .into_iter()
        .map(|id| Unit::leaf(tree, id))
        .collect();
    rows_over_units(tree, &units, screen, cfg)
}

fn rows_over_units(tree: &DomTree, units: &[Unit], screen: &ScreenInfo, cfg: &GroupingConfig) -> RowGroups {
    let required = cfg.row_width(screen);
    let wide = |b: &Bounds| f64::from(b.width()) >= required;

    let mut owner: HashMap<NodeId, usize> = HashMap::new();
    for (i, u) in units.iter().enumerate() {
        for &m in &u.members {
            owner.insert(m, i);
        }
    }
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.sort_by_key(|&i| units[i].first());

    let mut consumed = vec![false; units.len()];
    let mut warnings: Vec<GroupingWarning> = Vec::new();
    let mut rows: Vec<ComponentGroup> = Vec::new();

    for &u in &order {
        if consumed[u] {
            continue;
        }
        let unit = &units[u];
        let stop = if wide(&unit.bounds) {
            Stop::Unit
        } else {
            // Backtrack: a lone leaf starts at its parent, a fused unit at
            // the lowest common ancestor of its members.
            let start = if unit.members.len() == 1 {
                tree.parent(unit.members[0])
            } else {
                tree.common_ancestor(&unit.members)
            };
            match start {
                None => Stop::Unit,
                Some(mut node) => loop {
                    if wide(&tree.node(node).bounds) {
                        break Stop::Node(node);
                    }
                    match tree.parent(node) {
                        Some(p) => node = p,
                        None => {
                            let warning = GroupingWarning::DegenerateTree {
                                root: node,
                                width: tree.node(node).bounds.width(),
                                required,
                            };
                            if !warnings.contains(&warning) {
                                warnings.push(warning);
                            }
                            break Stop::Node(node);
                        }
                    }
                },
            }
        };

        let mut row_units = vec![u];
        if let Stop::Node(cut) = stop {
            for leaf in trimmed_leaves(tree, cut, &wide) {
                if let Some(&o) = owner.get(&leaf) {
                    if !consumed[o] && !row_units.contains(&o) {
                        row_units.push(o);
                    }
                }
            }
        }
        row_units.sort_by_key(|&i| units[i].first());
        for &i in &row_units {
            consumed[i] = true;
        }
        let slices: Vec<&[NodeId]> = row_units.iter().map(|&i| units[i].members.as_slice()).collect();
        rows.push(ComponentGroup::from_units(tree, GroupKind::Row, &slices));
    }

    rows.sort_by_key(|g| (g.bounding.top, g.bounding.left, g.members.iter().min().copied()));
    RowGroups { rows, warnings }
}

/// Leaves of the subtree at `cut`, skipping nested subtrees that are wide
/// enough to be rows of their own.
fn trimmed_leaves(tree: &DomTree, cut: NodeId, wide: &dyn Fn(&Bounds) -> bool) -> Vec<NodeId> {
    let mut out = Vec::new();
    let mut stack = vec![cut];
    while let Some(id) = stack.pop() {
        let node = tree.node(id);
        if id != cut && wide(&node.bounds) {
            continue;
        }
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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct MemberShape {
    kind: WidgetKind,
    left: i32,
    top: i32,
    bottom: i32,
}

fn row_shape(tree: &DomTree, row: &ComponentGroup) -> Vec<MemberShape> {
    let origin = row.bounding;
    row.members
        .iter()
        .map(|&m| {
            let n = tree.node(m);
            MemberShape {
                kind: n.widget_kind,
                left: n.bounds.left - origin.left,
                top: n.bounds.top - origin.top,
                bottom: n.bounds.bottom - origin.top,
            }
        })
        .collect()
}

fn shapes_match(a: &MemberShape, b: &MemberShape, tol: i32) -> bool {
    a.kind == b.kind
        && (a.left - b.left).abs() <= tol
        && (a.top - b.top).abs() <= tol
        && (a.bottom - b.bottom).abs() <= tol
}

fn rows_match(a: &[MemberShape], b: &[MemberShape], cfg: &GroupingConfig) -> bool {
    let tol = cfg.corner_tolerance_px;
    let tolerate_one = cfg.allow_one_mismatch && a.len().min(b.len()) >= 2;
    if a.len() == b.len() {
        let mismatches = a.iter().zip(b).filter(|(x, y)| !shapes_match(x, y, tol)).count();
        return mismatches == 0 || (tolerate_one && mismatches == 1);
    }
    if !tolerate_one || a.len().abs_diff(b.len()) != 1 {
        return false;
    }
    let (long, short) = if a.len() > b.len() { (a, b) } else { (b, a) };
    (0..long.len()).any(|skip| {
        long.iter()
            .enumerate()
            .filter(|&(i, _)| i != skip)
            .map(|(_, s)| s)
            .zip(short)
            .all(|(x, y)| shapes_match(x, y, tol))
    })
}

/// Merges runs of adjacent rows whose members share widget kinds and
/// relative upper-left/lower-left corners.
pub fn merge_multirow(tree: &DomTree, rows: Vec<ComponentGroup>, cfg: &GroupingConfig) -> Vec<ComponentGroup> {
    let mut out: Vec<ComponentGroup> = Vec::new();
    let mut run: Vec<ComponentGroup> = Vec::new();
    let flush = |run: &mut Vec<ComponentGroup>, out: &mut Vec<ComponentGroup>| match run.len() {
        0 => {}
        1 => out.push(run.pop().unwrap()),
        _ => out.push(combine_rows(std::mem::take(run))),
    };
    for row in rows {
        let joins = run
            .last()
            .is_some_and(|prev| rows_match(&row_shape(tree, prev), &row_shape(tree, &row), cfg));
        if !joins {
            flush(&mut run, &mut out);
        }
        run.push(row);
    }
    flush(&mut run, &mut out);
    out
}

fn combine_rows(rows: Vec<ComponentGroup>) -> ComponentGroup {
    let mut members = Vec::new();
    let mut units = Vec::new();
    let mut row_spans = Vec::new();
    let mut bounding = rows[0].bounding;
    for row in rows {
        let offset = members.len();
        units.extend(row.units.iter().map(|r| r.start + offset..r.end + offset));
        members.extend(row.members);
        row_spans.push(offset..members.len());
        bounding = bounding.union(&row.bounding);
    }
    ComponentGroup {
        kind: GroupKind::MultiRow,
        members,
        bounding,
        units,
        row_spans,
    }
}

/// Runs atomic, row and multi-row grouping over one page.
///
/// Atomic groups are fused into single units before row trimming so that a
/// row cut never separates an image from its caption.
pub fn group_page(tree: &DomTree, screen: &ScreenInfo, cfg: &GroupingConfig) -> GroupingResult {
    let leaves = tree.grouping_leaves();
    let pairs = group_text_pairs(tree, &leaves, screen, cfg);
    let captioned = group_image_text(tree, &leaves, screen, cfg, &pairs);

    let mut taken: HashMap<NodeId, ()> = HashMap::new();
    let mut units: Vec<Unit> = Vec::new();
    for g in captioned.iter().chain(pairs.iter()) {
        if g.members.iter().any(|m| taken.contains_key(m)) {
            continue;
        }
        for &m in &g.members {
            taken.insert(m, ());
        }
        units.push(Unit {
            members: g.members.clone(),
            atomic: Some(g.kind),
            bounds: g.bounding,
        });
    }
    let atomic_kind: HashMap<NodeId, GroupKind> =
        units.iter().filter_map(|u| u.atomic.map(|k| (u.first(), k))).collect();
    units.extend(
        leaves
            .iter()
            .filter(|l| !taken.contains_key(l))
            .map(|&l| Unit::leaf(tree, l)),
    );

    let RowGroups { rows, warnings } = rows_over_units(tree, &units, screen, cfg);
    let merged = merge_multirow(tree, rows, cfg);

    let mut groups = Vec::new();
    let mut ungrouped = Vec::new();
    for mut g in merged {
        if g.kind == GroupKind::Row && g.units.len() == 1 {
            let first = g.members.iter().copied().min().expect("row has members");
            match atomic_kind.get(&first) {
                Some(&kind) => g.kind = kind,
                None if g.members.len() == 1 => {
                    ungrouped.push(g.members[0]);
                    continue;
                }
                None => {}
            }
        }
        groups.push(g);
    }
    ungrouped.sort();
    let final_unit_count = groups.len() + ungrouped.len();
    GroupingResult {
        groups,
        ungrouped,
        original_leaf_count: leaves.len(),
        final_unit_count,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{parse_hierarchy, Orientation};

    fn screen() -> ScreenInfo {
        ScreenInfo::new(1080, 1920, Orientation::Portrait).unwrap()
    }

    fn node(class: &str, b: [i32; 4]) -> String {
        format!(
            r#"<node class="{class}" text="t" bounds="[{},{}][{},{}]"/>"#,
            b[0], b[1], b[2], b[3]
        )
    }

    const TEXT: &str = "android.widget.TextView";
    const IMAGE: &str = "android.widget.ImageView";

    fn flat(children: &[String]) -> DomTree {
        let xml = format!(
            r#"<hierarchy rotation="0"><node class="android.widget.FrameLayout" bounds="[0,0][1080,1920]">{}</node></hierarchy>"#,
            children.concat()
        );
        parse_hierarchy(&xml, None).unwrap()
    }

    fn pairs_of(tree: &DomTree) -> Vec<ComponentGroup> {
        group_text_pairs(tree, &tree.grouping_leaves(), &screen(), &GroupingConfig::default())
    }

    #[test]
    fn close_texts_pair() {
        let tree = flat(&[node(TEXT, [100, 200, 500, 260]), node(TEXT, [100, 270, 500, 320])]);
        let pairs = pairs_of(&tree);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].kind, GroupKind::TextPair);
        assert_eq!(pairs[0].members, vec![NodeId(1), NodeId(2)]);
        assert_eq!(pairs[0].bounding, Bounds::new(100, 200, 500, 320));
    }

    #[test]
    fn distant_texts_do_not_pair() {
        let tree = flat(&[node(TEXT, [100, 200, 500, 260]), node(TEXT, [100, 400, 500, 450])]);
        assert!(pairs_of(&tree).is_empty());
    }

    #[test]
    fn single_text_has_no_pair() {
        let tree = flat(&[node(TEXT, [100, 200, 500, 260])]);
        assert!(pairs_of(&tree).is_empty());
    }

    #[test]
    fn each_text_joins_one_pair() {
        // three stacked lines: the closest pair wins, the third stays alone
        let tree = flat(&[
            node(TEXT, [100, 200, 500, 260]),
            node(TEXT, [100, 270, 500, 320]),
            node(TEXT, [100, 325, 500, 360]),
        ]);
        let pairs = pairs_of(&tree);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].members, vec![NodeId(2), NodeId(3)]);
    }

    #[test]
    fn intervening_element_blocks_pairing() {
        let tree = flat(&[
            node(TEXT, [100, 200, 500, 260]),
            node(IMAGE, [100, 262, 500, 268]),
            node(TEXT, [100, 270, 500, 320]),
        ]);
        assert!(pairs_of(&tree).is_empty());
    }

    #[test]
    fn image_caption_grouping() {
        let tree = flat(&[node(IMAGE, [100, 100, 400, 400]), node(TEXT, [120, 410, 380, 460])]);
        let leaves = tree.grouping_leaves();
        let cfg = GroupingConfig::default();
        let groups = group_image_text(&tree, &leaves, &screen(), &cfg, &[]);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].kind, GroupKind::ImageWithText);
        assert_eq!(groups[0].members, vec![NodeId(1), NodeId(2)]);
    }

    #[test]
    fn misaligned_caption_is_not_grouped() {
        let tree = flat(&[node(IMAGE, [100, 100, 400, 400]), node(TEXT, [600, 410, 900, 460])]);
        let leaves = tree.grouping_leaves();
        let groups = group_image_text(&tree, &leaves, &screen(), &GroupingConfig::default(), &[]);
        assert!(groups.is_empty());
    }

    #[test]
    fn caption_pair_is_packed_with_image() {
        let tree = flat(&[
            node(IMAGE, [100, 100, 400, 400]),
            node(TEXT, [100, 410, 400, 450]),
            node(TEXT, [100, 455, 400, 490]),
        ]);
        let leaves = tree.grouping_leaves();
        let cfg = GroupingConfig::default();
        let pairs = group_text_pairs(&tree, &leaves, &screen(), &cfg);
        assert_eq!(pairs.len(), 1);
        let groups = group_image_text(&tree, &leaves, &screen(), &cfg, &pairs);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].members, vec![NodeId(1), NodeId(2), NodeId(3)]);
    }

    #[test]
    fn centered_wide_caption_groups() {
        let tree = flat(&[node(IMAGE, [480, 100, 600, 200]), node(TEXT, [300, 210, 780, 240])]);
        let leaves = tree.grouping_leaves();
        let groups = group_image_text(&tree, &leaves, &screen(), &GroupingConfig::default(), &[]);
        assert_eq!(groups.len(), 1);
    }

    fn nested_rows_xml() -> String {
        // root 1080 wide; two full-width rows each with three leaves
        let row = |y: i32| {
            format!(
                r#"<node class="android.widget.LinearLayout" bounds="[0,{y}][1080,{}]">{}{}{}</node>"#,
                y + 200,
                node(TEXT, [0, y, 300, y + 50]),
                node(TEXT, [300, y, 600, y + 50]),
                node(TEXT, [600, y, 900, y + 50]),
            )
        };
        format!(
            r#"<hierarchy><node class="android.widget.FrameLayout" bounds="[0,0][1080,1920]">{}{}</node></hierarchy>"#,
            row(0),
            row(500)
        )
    }

    #[test]
    fn rows_follow_wide_subtrees() {
        let tree = parse_hierarchy(&nested_rows_xml(), None).unwrap();
        let RowGroups { rows, warnings } = group_rows(&tree, &screen(), &GroupingConfig::default());
        assert!(warnings.is_empty());
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.members.len() == 3 && r.kind == GroupKind::Row));
        assert_eq!(rows[0].members, vec![NodeId(2), NodeId(3), NodeId(4)]);
    }

    #[test]
    fn backtracking_climbs_until_wide() {
        // leaf under widths 400 -> 700 -> 1080
        let xml = format!(
            r#"<node class="root" bounds="[0,0][1080,1920]">
                 <node class="a" bounds="[0,0][1080,600]">
                   <node class="b" bounds="[0,0][700,600]">
                     <node class="c" bounds="[0,0][400,600]">{}</node>
                     {}
                   </node>
                   {}
                 </node>
                 {}
               </node>"#,
            node(TEXT, [0, 0, 300, 50]),
            node(TEXT, [400, 0, 700, 50]),
            node(TEXT, [700, 0, 1080, 50]),
            node(TEXT, [0, 1000, 300, 1050]),
        );
        let tree = parse_hierarchy(&xml, None).unwrap();
        let rows = group_rows(&tree, &screen(), &GroupingConfig::default()).rows;
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].members.len(), 3);
        assert_eq!(rows[1].members.len(), 1);
    }

    #[test]
    fn full_width_leaf_is_its_own_row() {
        let tree = parse_hierarchy(&node(IMAGE, [0, 0, 1080, 400]), None).unwrap();
        let rows = group_rows(&tree, &screen(), &GroupingConfig::default());
        assert_eq!(rows.rows.len(), 1);
        assert_eq!(rows.rows[0].members, vec![NodeId(0)]);
        assert!(rows.warnings.is_empty());
    }

    #[test]
    fn narrow_root_warns_and_makes_one_row() {
        let xml = format!(
            r#"<node class="root" bounds="[0,0][500,500]">{}{}</node>"#,
            node(TEXT, [0, 0, 100, 50]),
            node(TEXT, [0, 300, 100, 350])
        );
        let tree = parse_hierarchy(&xml, None).unwrap();
        let out = group_rows(&tree, &screen(), &GroupingConfig::default());
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.rows[0].members.len(), 2);
        assert!(matches!(
            out.warnings[..],
            [GroupingWarning::DegenerateTree { root: NodeId(0), .. }]
        ));
    }

    fn row_group(tree: &DomTree, ids: &[usize]) -> ComponentGroup {
        let slices: Vec<Vec<NodeId>> = ids.iter().map(|&i| vec![NodeId(i)]).collect();
        let refs: Vec<&[NodeId]> = slices.iter().map(|v| v.as_slice()).collect();
        ComponentGroup::from_units(tree, GroupKind::Row, &refs)
    }

    #[test]
    fn identical_rows_merge() {
        let tree = flat(&[
            node(IMAGE, [0, 0, 500, 300]),
            node(TEXT, [0, 310, 500, 350]),
            node(IMAGE, [0, 400, 500, 700]),
            node(TEXT, [0, 710, 500, 750]),
        ]);
        let rows = vec![row_group(&tree, &[1, 2]), row_group(&tree, &[3, 4])];
        let merged = merge_multirow(&tree, rows, &GroupingConfig::default());
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].kind, GroupKind::MultiRow);
        assert_eq!(merged[0].members.len(), 4);
        assert_eq!(merged[0].row_spans, vec![0..2, 2..4]);
        assert_eq!(merged[0].units_per_row(), vec![2, 2]);
    }

    #[test]
    fn kind_order_matters_for_merge() {
        let tree = flat(&[
            node(IMAGE, [0, 0, 500, 40]),
            node(TEXT, [0, 50, 500, 90]),
            node(TEXT, [0, 400, 500, 440]),
            node(IMAGE, [0, 450, 500, 490]),
        ]);
        let cfg = GroupingConfig {
            allow_one_mismatch: false,
            ..Default::default()
        };
        let rows = vec![row_group(&tree, &[1, 2]), row_group(&tree, &[3, 4])];
        assert_eq!(merge_multirow(&tree, rows, &cfg).len(), 2);
    }

    #[test]
    fn one_extra_component_is_tolerated() {
        let tree = flat(&[
            node(IMAGE, [0, 0, 500, 300]),
            node(TEXT, [0, 310, 500, 350]),
            node(TEXT, [0, 355, 500, 380]),
            node(IMAGE, [0, 400, 500, 700]),
            node(TEXT, [0, 710, 500, 750]),
        ]);
        let rows = || vec![row_group(&tree, &[1, 2, 3]), row_group(&tree, &[4, 5])];
        assert_eq!(merge_multirow(&tree, rows(), &GroupingConfig::default()).len(), 1);
        let strict = GroupingConfig {
            allow_one_mismatch: false,
            ..Default::default()
        };
        assert_eq!(merge_multirow(&tree, rows(), &strict).len(), 2);
    }

    #[test]
    fn corner_tolerance_is_four_pixels() {
        let make = |shift: i32| {
            flat(&[
                node(IMAGE, [0, 0, 500, 300]),
                node(TEXT, [0, 310, 500, 350]),
                node(IMAGE, [0, 400, 500, 700]),
                node(TEXT, [shift, 710, 500, 750]),
            ])
        };
        let strict = GroupingConfig {
            allow_one_mismatch: false,
            ..Default::default()
        };
        let t4 = make(4);
        assert_eq!(
            merge_multirow(&t4, vec![row_group(&t4, &[1, 2]), row_group(&t4, &[3, 4])], &strict).len(),
            1
        );
        let t5 = make(5);
        assert_eq!(
            merge_multirow(&t5, vec![row_group(&t5, &[1, 2]), row_group(&t5, &[3, 4])], &strict).len(),
            2
        );
    }

    #[test]
    fn merging_is_transitive() {
        let mut children = Vec::new();
        for r in 0..3 {
            let y = r * 400;
            children.push(node(IMAGE, [0, y, 500, y + 300]));
            children.push(node(TEXT, [0, y + 310, 500, y + 350]));
        }
        let tree = flat(&children);
        let rows = vec![
            row_group(&tree, &[1, 2]),
            row_group(&tree, &[3, 4]),
            row_group(&tree, &[5, 6]),
        ];
        let merged = merge_multirow(&tree, rows, &GroupingConfig::default());
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].row_spans.len(), 3);
    }

    #[test]
    fn empty_page_groups_to_nothing() {
        let tree = parse_hierarchy(r#"<node class="root" bounds="[0,0][0,0]"/>"#, Some(screen())).unwrap();
        let result = group_page(&tree, &screen(), &GroupingConfig::default());
        assert!(result.groups.is_empty());
        assert!(result.ungrouped.is_empty());
        assert_eq!(result.original_leaf_count, 0);
        assert_eq!(result.final_unit_count, 0);
    }

    #[test]
    fn config_validation() {
        assert!(GroupingConfig::default().validate().is_ok());
        for cfg in [
            GroupingConfig {
                gap_coefficient: 0.0,
                ..Default::default()
            },
            GroupingConfig {
                row_width_coefficient: 1.5,
                ..Default::default()
            },
            GroupingConfig {
                overlap_fraction: 0.0,
                ..Default::default()
            },
        ] {
            assert!(cfg.validate().is_err());
        }
    }
}
