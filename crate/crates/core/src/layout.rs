//! Landscape layout of a TV page as a constraint system.
//!
//! Every TV group is one formula unit laid out left to right. Each item either
//! continues the current row (C1) or starts the next one at `left = 0` (C2),
//! and the choice is forced by the available width `r_a` left in the row:
//! C1 exactly when `r_a >= width_min`. Sizes stay inside their bounds (C3).
//! Soft constraints are minimized, never traded against hard ones; the only
//! one defined is `fill_width`, the unused width `r_tv - Σwidth` of each row.
//!
//! [`solve_layout`] finds the row partition with the least unused width by
//! dynamic programming over row breaks, then sizes each row by proportional
//! water-filling. [`brute_force_layout`] enumerates grid widths instead and
//! exists to check the solver.

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transform::{SizeClass, TvGroupCategory, TvPage};

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("page has no groups to lay out")]
    EmptyPage,
    #[error("size table has no entry for {category:?}/{size_class:?}")]
    MissingSizeEntry {
        category: TvGroupCategory,
        size_class: SizeClass,
    },
    #[error("item {item} needs {width_min} px but rows are only {row_width} px wide")]
    Infeasible {
        item: String,
        width_min: i32,
        row_width: i32,
    },
    #[error("page cannot fit the canvas: {0}")]
    CannotFit(String),
    #[error("invalid layout config: {0}")]
    InvalidConfig(String),
    #[error("invalid size table: {0}")]
    InvalidSizeTable(String),
    #[error("cannot read size table {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("solver produced a layout violating a hard constraint: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeBounds {
    pub width_min: i32,
    pub width_max: i32,
    pub height_min: i32,
    pub height_max: i32,
}

impl SizeBounds {
    pub fn new(width_min: i32, width_max: i32, height_min: i32, height_max: i32) -> Result<Self, LayoutError> {
        let b = Self {
            width_min,
            width_max,
            height_min,
            height_max,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), LayoutError> {
        if 0 < self.width_min
            && self.width_min <= self.width_max
            && 0 < self.height_min
            && self.height_min <= self.height_max
        {
            Ok(())
        } else {
            Err(LayoutError::InvalidSizeTable(format!("bad bounds {self:?}")))
        }
    }

    /// Height for a given width: the width scaled by the minimum box's aspect
    /// ratio, clamped to the height range.
    pub fn height_for(&self, width: i32) -> i32 {
        let wmin = i64::from(self.width_min);
        let h = (i64::from(width) * i64::from(self.height_min) + wmin / 2) / wmin;
        h.clamp(i64::from(self.height_min), i64::from(self.height_max)) as i32
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeEntry {
    pub all: Option<SizeBounds>,
    pub large: Option<SizeBounds>,
    pub medium: Option<SizeBounds>,
    pub small: Option<SizeBounds>,
}

impl SizeEntry {
    fn get(&self, size_class: SizeClass) -> Option<SizeBounds> {
        let specific = match size_class {
            SizeClass::Large => self.large,
            SizeClass::Medium => self.medium,
            SizeClass::Small => self.small,
        };
        specific.or(self.all)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SizeTable {
    pub entries: BTreeMap<TvGroupCategory, SizeEntry>,
}

pub const DEFAULT_SIZE_TABLE: &str = include_str!("../data/size_table.toml");

impl SizeTable {
    pub fn from_toml(text: &str) -> Result<Self, LayoutError> {
        let table: SizeTable = toml::from_str(text).map_err(|e| LayoutError::InvalidSizeTable(e.to_string()))?;
        for entry in table.entries.values() {
            for b in [entry.all, entry.large, entry.medium, entry.small]
                .into_iter()
                .flatten()
            {
                b.validate()?;
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, LayoutError> {
        let text = std::fs::read_to_string(path).map_err(|source| LayoutError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn builtin() -> &'static SizeTable {
        static TABLE: OnceLock<SizeTable> = OnceLock::new();
        TABLE.get_or_init(|| SizeTable::from_toml(DEFAULT_SIZE_TABLE).expect("built-in size table parses"))
    }

    pub fn lookup(&self, category: TvGroupCategory, size_class: SizeClass) -> Result<SizeBounds, LayoutError> {
        self.entries
            .get(&category)
            .and_then(|e| e.get(size_class))
            .ok_or(LayoutError::MissingSizeEntry { category, size_class })
    }
}

pub const FILL_WIDTH: &str = "fill_width";
const KNOWN_SOFT: [&str; 1] = [FILL_WIDTH];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub margin: i32,
    pub row_gap: i32,
    pub channel_rail_width: i32,
    pub soft_weights: BTreeMap<String, f64>,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            margin: 48,
            row_gap: 32,
            channel_rail_width: 280,
            soft_weights: BTreeMap::from([(FILL_WIDTH.to_string(), 1.0)]),
        }
    }
}

impl LayoutConfig {
    pub fn validate(&self) -> Result<(), LayoutError> {
        if self.margin < 0 || self.row_gap < 0 || self.channel_rail_width <= 0 {
            return Err(LayoutError::InvalidConfig(
                "margin and row_gap must be >= 0 and channel_rail_width > 0".into(),
            ));
        }
        for (name, weight) in &self.soft_weights {
            if !KNOWN_SOFT.contains(&name.as_str()) {
                return Err(LayoutError::InvalidConfig(format!("unknown soft constraint `{name}`")));
            }
            if !weight.is_finite() || *weight < 0.0 {
                return Err(LayoutError::InvalidConfig(format!(
                    "weight of `{name}` must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftConstraint {
    pub name: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutItem {
    pub id: String,
    pub size_bounds: SizeBounds,
    pub phone_area: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaUnit {
    /// Index of the TV group this unit lays out.
    pub group: usize,
    /// The Channel rail, stacked in its own column.
    pub rail: bool,
    pub origin_x: i32,
    pub row_width: i32,
    pub items: Vec<LayoutItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSystem {
    pub canvas_width: i32,
    pub canvas_height: i32,
    pub margin: i32,
    pub row_gap: i32,
    /// `r_tv`: width available to non-rail units.
    pub row_width: i32,
    pub max_height: i32,
    pub units: Vec<FormulaUnit>,
    pub soft: Vec<SoftConstraint>,
}

impl ConstraintSystem {
    /// A bare system: no margins, no rail, no row gaps, `fill_width` at
    /// weight 1.
    pub fn synthetic(row_width: i32, max_height: i32, units: Vec<Vec<LayoutItem>>) -> Self {
        Self {
            canvas_width: row_width,
            canvas_height: max_height,
            margin: 0,
            row_gap: 0,
            row_width,
            max_height,
            units: units
                .into_iter()
                .enumerate()
                .map(|(group, items)| FormulaUnit {
                    group,
                    rail: false,
                    origin_x: 0,
                    row_width,
                    items,
                })
                .collect(),
            soft: vec![SoftConstraint {
                name: FILL_WIDTH.into(),
                weight: 1.0,
            }],
        }
    }

    pub fn item_count(&self) -> usize {
        self.units.iter().map(|u| u.items.len()).sum()
    }

    fn fill_weight(&self) -> f64 {
        self.soft
            .iter()
            .filter(|s| s.name == FILL_WIDTH)
            .map(|s| s.weight)
            .sum()
    }
}

pub fn build_constraints(
    page: &TvPage,
    table: &SizeTable,
    cfg: &LayoutConfig,
) -> Result<ConstraintSystem, LayoutError> {
    cfg.validate()?;
    if page.groups.is_empty() {
        return Err(LayoutError::EmptyPage);
    }
    let canvas_width = page.screen.width_px as i32;
    let canvas_height = page.screen.height_px as i32;
    let has_rail = page.channel().is_some();
    let rail = if has_rail { cfg.channel_rail_width } else { 0 };
    let row_width = canvas_width - 2 * cfg.margin - rail;
    let max_height = canvas_height - 2 * cfg.margin;
    if row_width <= 0 || max_height <= 0 {
        return Err(LayoutError::InvalidConfig(format!(
            "margins and rail leave no room on a {canvas_width}x{canvas_height} canvas"
        )));
    }
    let mut units = Vec::with_capacity(page.groups.len());
    for (gi, g) in page.groups.iter().enumerate() {
        let bounds = table.lookup(g.category, g.size_class)?;
        let is_rail = g.category == TvGroupCategory::Channel;
        units.push(FormulaUnit {
            group: gi,
            rail: is_rail,
            origin_x: if is_rail { cfg.margin } else { cfg.margin + rail },
            row_width: if is_rail { cfg.channel_rail_width } else { row_width },
            items: g
                .items
                .iter()
                .map(|it| LayoutItem {
                    id: it.id.clone(),
                    size_bounds: bounds,
                    phone_area: it.phone_area,
                })
                .collect(),
        });
    }
    Ok(ConstraintSystem {
        canvas_width,
        canvas_height,
        margin: cfg.margin,
        row_gap: cfg.row_gap,
        row_width,
        max_height,
        units,
        soft: cfg
            .soft_weights
            .iter()
            .map(|(name, &weight)| SoftConstraint {
                name: name.clone(),
                weight,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// First item of a unit, at the unit origin.
    Anchor,
    /// C1: continues the current row.
    Continue,
    /// C2: wraps to the left edge of a new row.
    Wrap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedItem {
    pub id: String,
    pub unit: usize,
    pub row: usize,
    pub placement: Placement,
    /// Unit-relative position.
    pub left: i32,
    pub top: i32,
    pub width: i32,
    pub height: i32,
    /// Absolute canvas position.
    pub x: i32,
    pub y: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitLayout {
    pub group: usize,
    pub rail: bool,
    pub origin_x: i32,
    pub origin_y: i32,
    pub row_width: i32,
    /// Ranges into `LayoutSolution::items`, one per realized row.
    pub rows: Vec<Range<usize>>,
    pub height: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftResidual {
    pub name: String,
    pub unit: usize,
    pub row: usize,
    pub residual: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutSolution {
    pub items: Vec<PlacedItem>,
    pub units: Vec<UnitLayout>,
    pub pruned: Vec<String>,
    pub soft_satisfaction: Vec<SoftResidual>,
    pub objective: f64,
    /// Height of the stacked content, margins excluded.
    pub total_height: i32,
    pub overflow: bool,
}

impl LayoutSolution {
    /// Total unused row width, independent of soft-constraint weights.
    pub fn residual_sum(&self) -> i64 {
        self.units
            .iter()
            .flat_map(|u| {
                u.rows.iter().map(move |r| {
                    i64::from(u.row_width) - self.items[r.clone()].iter().map(|i| i64::from(i.width)).sum::<i64>()
                })
            })
            .sum()
    }
}

fn check_widths(system: &ConstraintSystem) -> Result<(), LayoutError> {
    for unit in &system.units {
        if let Some(item) = unit.items.iter().find(|i| i.size_bounds.width_min > unit.row_width) {
            return Err(LayoutError::Infeasible {
                item: item.id.clone(),
                width_min: item.size_bounds.width_min,
                row_width: unit.row_width,
            });
        }
    }
    Ok(())
}

/// Row lengths minimizing total unused width. A row may end before item `j`
/// only if, at its best width, the space left is narrower than item `j`'s
/// minimum; otherwise C1 would force `j` onto it. Among equal costs the
/// earliest rows are kept longest.
fn partition_rows(bounds: &[SizeBounds], row_width: i32) -> Vec<usize> {
    let n = bounds.len();
    let r = i64::from(row_width);
    let mut best: Vec<Option<(i64, Vec<usize>)>> = vec![None; n + 1];
    best[n] = Some((0, Vec::new()));
    for i in (0..n).rev() {
        let (mut smin, mut smax) = (0i64, 0i64);
        for j in i + 1..=n {
            smin += i64::from(bounds[j - 1].width_min);
            smax += i64::from(bounds[j - 1].width_max);
            if smin > r {
                break;
            }
            let filled = smax.min(r);
            if j < n && filled <= r - i64::from(bounds[j].width_min) {
                continue;
            }
            let Some((rest_cost, rest_rows)) = &best[j] else {
                continue;
            };
            let cost = r - filled + rest_cost;
            let mut rows = Vec::with_capacity(rest_rows.len() + 1);
            rows.push(j - i);
            rows.extend_from_slice(rest_rows);
            let better = match &best[i] {
                None => true,
                Some((c, rs)) => cost < *c || (cost == *c && rows > *rs),
            };
            if better {
                best[i] = Some((cost, rows));
            }
        }
    }
    best[0]
        .take()
        .expect("a partition exists when every item fits a row alone")
        .1
}

/// Widths in bounds summing to `target`, growing each item in proportion to
/// its minimum until it reaches its maximum. Requires Σmin ≤ target ≤ Σmax.
pub fn water_fill(bounds: &[SizeBounds], target: i32) -> Vec<i32> {
    let n = bounds.len();
    let mut clamped = vec![false; n];
    let mut scale = 1.0;
    loop {
        let fixed: i64 = (0..n)
            .filter(|&i| clamped[i])
            .map(|i| i64::from(bounds[i].width_max))
            .sum();
        let free: i64 = (0..n)
            .filter(|&i| !clamped[i])
            .map(|i| i64::from(bounds[i].width_min))
            .sum();
        if free == 0 {
            break;
        }
        scale = (i64::from(target) - fixed) as f64 / free as f64;
        let mut changed = false;
        for i in 0..n {
            if !clamped[i] && f64::from(bounds[i].width_min) * scale >= f64::from(bounds[i].width_max) {
                clamped[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut widths: Vec<i32> = (0..n)
        .map(|i| {
            let b = &bounds[i];
            if clamped[i] {
                b.width_max
            } else {
                ((f64::from(b.width_min) * scale).floor() as i32).clamp(b.width_min, b.width_max)
            }
        })
        .collect();
    let mut rest = i64::from(target) - widths.iter().map(|&w| i64::from(w)).sum::<i64>();
    while rest != 0 {
        let before = rest;
        for (w, b) in widths.iter_mut().zip(bounds) {
            if rest > 0 && *w < b.width_max {
                *w += 1;
                rest -= 1;
            } else if rest < 0 && *w > b.width_min {
                *w -= 1;
                rest += 1;
            }
        }
        assert_ne!(before, rest, "water_fill target outside [Σmin, Σmax]");
    }
    widths
}

/// Per-unit rows of widths, in item order.
type UnitWidths = Vec<Vec<Vec<i32>>>;

fn realize(system: &ConstraintSystem, plan: &UnitWidths) -> LayoutSolution {
    let mut items = Vec::with_capacity(system.item_count());
    let mut units = Vec::with_capacity(system.units.len());
    let mut soft_satisfaction = Vec::new();
    let mut residual_total = 0i64;
    let (mut content_y, mut rail_y) = (system.margin, system.margin);
    let (mut content_end, mut rail_end) = (system.margin, system.margin);
    let fill_weight = system.fill_weight();
    let track_fill = system.soft.iter().any(|s| s.name == FILL_WIDTH);
    for (ui, (unit, rows)) in system.units.iter().zip(plan).enumerate() {
        let cursor = if unit.rail { &mut rail_y } else { &mut content_y };
        let origin_y = *cursor;
        let mut top = 0;
        let mut k = 0;
        let mut row_ranges = Vec::with_capacity(rows.len());
        let mut unit_height = 0;
        for (ri, widths) in rows.iter().enumerate() {
            if ri > 0 {
                top += system.row_gap;
            }
            let start = items.len();
            let mut left = 0;
            let mut row_height = 0;
            for (ci, &width) in widths.iter().enumerate() {
                let item = &unit.items[k];
                let height = item.size_bounds.height_for(width);
                items.push(PlacedItem {
                    id: item.id.clone(),
                    unit: ui,
                    row: ri,
                    placement: match (k, ci) {
                        (0, _) => Placement::Anchor,
                        (_, 0) => Placement::Wrap,
                        _ => Placement::Continue,
                    },
                    left,
                    top,
                    width,
                    height,
                    x: unit.origin_x + left,
                    y: origin_y + top,
                });
                left += width;
                row_height = row_height.max(height);
                k += 1;
            }
            let residual = unit.row_width - left;
            residual_total += i64::from(residual);
            if track_fill {
                soft_satisfaction.push(SoftResidual {
                    name: FILL_WIDTH.into(),
                    unit: ui,
                    row: ri,
                    residual,
                });
            }
            row_ranges.push(start..items.len());
            top += row_height;
            unit_height = top;
        }
        units.push(UnitLayout {
            group: unit.group,
            rail: unit.rail,
            origin_x: unit.origin_x,
            origin_y,
            row_width: unit.row_width,
            rows: row_ranges,
            height: unit_height,
        });
        let end = origin_y + unit_height;
        if unit.rail {
            rail_end = end;
        } else {
            content_end = end;
        }
        *cursor = end + system.row_gap;
    }
    let total_height = content_end.max(rail_end) - system.margin;
    LayoutSolution {
        items,
        units,
        pruned: Vec::new(),
        soft_satisfaction,
        objective: fill_weight * residual_total as f64,
        total_height,
        overflow: total_height > system.max_height,
    }
}

pub fn solve_layout(system: &ConstraintSystem) -> Result<LayoutSolution, LayoutError> {
    check_widths(system)?;
    let plan: UnitWidths = system
        .units
        .iter()
        .map(|unit| {
            let bounds: Vec<SizeBounds> = unit.items.iter().map(|i| i.size_bounds).collect();
            let mut start = 0;
            partition_rows(&bounds, unit.row_width)
                .into_iter()
                .map(|len| {
                    let row = &bounds[start..start + len];
                    start += len;
                    let sum_max: i64 = row.iter().map(|b| i64::from(b.width_max)).sum();
                    water_fill(row, sum_max.min(i64::from(unit.row_width)) as i32)
                })
                .collect()
        })
        .collect();
    let solution = realize(system, &plan);
    verify_solution(system, &solution).map_err(LayoutError::Internal)?;
    Ok(solution)
}

/// Exhaustive search over widths `width_min + k·step` (plus `width_max`),
/// returning a layout with the least unused width; ties go to the most
/// even widths. Exponential in the item
/// count; meant for checking the solver on small systems.
pub fn brute_force_layout(system: &ConstraintSystem, step: i32) -> Result<LayoutSolution, LayoutError> {
    if step <= 0 {
        return Err(LayoutError::InvalidConfig("step must be positive".into()));
    }
    let mut plan: UnitWidths = Vec::with_capacity(system.units.len());
    for unit in &system.units {
        let r = unit.row_width;
        let grids: Vec<Vec<i32>> = unit
            .items
            .iter()
            .map(|it| {
                let b = it.size_bounds;
                let mut g: Vec<i32> = (0..)
                    .map(|k| b.width_min + k * step)
                    .take_while(|&w| w < b.width_max && w <= r)
                    .collect();
                if b.width_max <= r {
                    g.push(b.width_max);
                }
                g
            })
            .collect();
        let mut memo = HashMap::new();
        let Some((_, _, widths)) = search(&unit.items, &grids, r, 0, 0, &mut memo) else {
            let item = unit
                .items
                .iter()
                .find(|i| i.size_bounds.width_min > r)
                .unwrap_or(&unit.items[0]);
            return Err(LayoutError::Infeasible {
                item: item.id.clone(),
                width_min: item.size_bounds.width_min,
                row_width: r,
            });
        };
        let mut rows: Vec<Vec<i32>> = Vec::new();
        let mut used = 0;
        for (i, &w) in widths.iter().enumerate() {
            if i == 0 || r - used < unit.items[i].size_bounds.width_min {
                rows.push(Vec::new());
                used = 0;
            }
            rows.last_mut().expect("row opened").push(w);
            used += w;
        }
        plan.push(rows);
    }
    Ok(realize(system, &plan))
}

type Memo = HashMap<(usize, i32), Option<Best>>;

/// Unused width, then Σ w²/width_min (least when widths are proportional to
/// their minimums), then the widths.
type Best = (i64, f64, Vec<i32>);

fn better(a: &Best, b: &Best) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1 - 1e-9)
}

/// Best completion for items `i..` given `used` px already taken in the
/// current row.
fn search(items: &[LayoutItem], grids: &[Vec<i32>], r: i32, i: usize, used: i32, memo: &mut Memo) -> Option<Best> {
    if i == items.len() {
        let closed = if items.is_empty() { 0 } else { i64::from(r - used) };
        return Some((closed, 0.0, Vec::new()));
    }
    if let Some(hit) = memo.get(&(i, used)) {
        return hit.clone();
    }
    let wmin = items[i].size_bounds.width_min;
    let wrap = i > 0 && r - used < wmin;
    let mut best: Option<Best> = None;
    for &w in &grids[i] {
        let (closed, next_used) = if wrap { (i64::from(r - used), w) } else { (0, used + w) };
        if next_used > r {
            continue;
        }
        if let Some((cost, balance, mut tail)) = search(items, grids, r, i + 1, next_used, memo) {
            let candidate = (
                cost + closed,
                balance + f64::from(w) * f64::from(w) / f64::from(wmin),
                Vec::new(),
            );
            if best.as_ref().is_none_or(|b| better(&candidate, b)) {
                tail.insert(0, w);
                best = Some((candidate.0, candidate.1, tail));
            }
        }
    }
    memo.insert((i, used), best.clone());
    best
}

/// Checks C1 ∨ C2 and C3 for every item, row containment and pairwise
/// disjointness, reporting the first violation.
pub fn verify_solution(system: &ConstraintSystem, solution: &LayoutSolution) -> Result<(), String> {
    let mut k = 0;
    for (ui, unit) in system.units.iter().enumerate() {
        let placed = &solution.items[k..k + unit.items.len()];
        k += unit.items.len();
        let mut row_top = 0;
        let mut row_height = 0;
        for (i, (p, item)) in placed.iter().zip(&unit.items).enumerate() {
            let b = item.size_bounds;
            if p.id != item.id {
                return Err(format!("unit {ui}: expected item {} but found {}", item.id, p.id));
            }
            if !(b.width_min <= p.width
                && p.width <= b.width_max
                && b.height_min <= p.height
                && p.height <= b.height_max)
            {
                return Err(format!("{}: C3 violated by {}x{}", p.id, p.width, p.height));
            }
            if p.left + p.width > unit.row_width || p.left < 0 || p.top < 0 {
                return Err(format!("{}: outside its {} px row", p.id, unit.row_width));
            }
            if i == 0 {
                if (p.left, p.top) != (0, 0) {
                    return Err(format!("{}: first item not at the unit origin", p.id));
                }
            } else {
                let prev = &placed[i - 1];
                let r_a = unit.row_width - (prev.left + prev.width);
                let c1 = p.left == prev.left + prev.width && p.top == prev.top && r_a >= b.width_min;
                let c2 = p.left == 0 && p.top >= row_top + row_height && r_a < b.width_min;
                if c1 == c2 {
                    return Err(format!("{}: neither C1 nor C2 holds (r_a = {r_a})", p.id));
                }
                if c2 {
                    row_top = p.top;
                    row_height = 0;
                }
            }
            row_height = row_height.max(p.height);
        }
    }
    for (i, a) in solution.items.iter().enumerate() {
        for b in &solution.items[i + 1..] {
            let disjoint =
                a.x + a.width <= b.x || b.x + b.width <= a.x || a.y + a.height <= b.y || b.y + b.height <= a.y;
            if !disjoint {
                return Err(format!("{} overlaps {}", a.id, b.id));
            }
        }
    }
    Ok(())
}

/// Removes items, smallest phone area first (ties by phone document order),
/// until the page lays out inside the canvas. Groups keep at least one item.
pub fn prune_overflow(
    page: &TvPage,
    table: &SizeTable,
    cfg: &LayoutConfig,
) -> Result<(TvPage, Vec<String>), LayoutError> {
    let mut page = page.clone();
    let mut pruned = Vec::new();
    loop {
        let system = build_constraints(&page, table, cfg)?;
        let reason = match solve_layout(&system) {
            Ok(s) if !s.overflow => return Ok((page, pruned)),
            Ok(s) => format!(
                "content is {} px tall, canvas allows {}",
                s.total_height, system.max_height
            ),
            Err(e @ LayoutError::Infeasible { .. }) => e.to_string(),
            Err(e) => return Err(e),
        };
        let victim = page
            .groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.items.len() > 1)
            .flat_map(|(gi, g)| g.items.iter().enumerate().map(move |(ii, it)| (gi, ii, it)))
            .min_by_key(|(_, _, it)| (it.phone_area, it.members.first().copied()))
            .map(|(gi, ii, _)| (gi, ii));
        let Some((gi, ii)) = victim else {
            return Err(LayoutError::CannotFit(reason));
        };
        pruned.push(page.groups[gi].items.remove(ii).id);
    }
}

/// Prunes as needed, then solves. The returned page excludes pruned items.
pub fn layout_page(
    page: &TvPage,
    table: &SizeTable,
    cfg: &LayoutConfig,
) -> Result<(TvPage, LayoutSolution), LayoutError> {
    let (page, pruned) = prune_overflow(page, table, cfg)?;
    let mut solution = solve_layout(&build_constraints(&page, table, cfg)?)?;
    solution.pruned = pruned;
    Ok((page, solution))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{NodeId, Orientation, ScreenInfo};
    use crate::transform::{ItemKind, TvGroup, TvItem};

    fn item(id: &str, wmin: i32, wmax: i32) -> LayoutItem {
        LayoutItem {
            id: id.into(),
            size_bounds: SizeBounds::new(wmin, wmax, 100, 200).unwrap(),
            phone_area: 0,
        }
    }

    fn widths(s: &LayoutSolution) -> Vec<i32> {
        s.items.iter().map(|i| i.width).collect()
    }

    fn tv_item(n: usize, area: i64) -> TvItem {
        TvItem {
            id: format!("item_{n}"),
            kind: ItemKind::Image,
            source: format!("src_{n}"),
            title: format!("t{n}"),
            selected: false,
            phone_area: area,
            members: vec![NodeId(n)],
        }
    }

    fn tv_page(groups: Vec<(TvGroupCategory, SizeClass, Vec<i64>)>) -> TvPage {
        let mut n = 0;
        TvPage {
            screen: ScreenInfo::new(1920, 1080, Orientation::Landscape).unwrap(),
            groups: groups
                .into_iter()
                .enumerate()
                .map(|(gi, (category, size_class, areas))| TvGroup {
                    category,
                    size_class,
                    items: areas
                        .into_iter()
                        .map(|a| {
                            n += 1;
                            tv_item(n - 1, a)
                        })
                        .collect(),
                    origins: vec![gi],
                })
                .collect(),
        }
    }

    #[test]
    fn row_width_reserves_margins_and_rail() {
        let page = tv_page(vec![
            (TvGroupCategory::Channel, SizeClass::Large, vec![1, 1]),
            (TvGroupCategory::PicInfo, SizeClass::Medium, vec![1, 1, 1, 1]),
        ]);
        let system = build_constraints(&page, SizeTable::builtin(), &LayoutConfig::default()).unwrap();
        assert_eq!(system.row_width, 1920 - 2 * 48 - 280);
        assert_eq!(system.units[0].row_width, 280);
        assert_eq!(system.units[1].origin_x, 48 + 280);
        assert_eq!(system.max_height, 1080 - 2 * 48);
        let no_rail = tv_page(vec![(TvGroupCategory::PicInfo, SizeClass::Medium, vec![1])]);
        let system = build_constraints(&no_rail, SizeTable::builtin(), &LayoutConfig::default()).unwrap();
        assert_eq!(system.row_width, 1920 - 2 * 48);
    }

    #[test]
    fn empty_page_and_missing_entry() {
        let empty = tv_page(vec![]);
        assert!(matches!(
            build_constraints(&empty, SizeTable::builtin(), &LayoutConfig::default()),
            Err(LayoutError::EmptyPage)
        ));
        let table =
            SizeTable::from_toml("[Search]\nall = { width_min = 1, width_max = 2, height_min = 1, height_max = 2 }")
                .unwrap();
        let page = tv_page(vec![(TvGroupCategory::PicInfo, SizeClass::Small, vec![1])]);
        assert!(matches!(
            build_constraints(&page, &table, &LayoutConfig::default()),
            Err(LayoutError::MissingSizeEntry {
                category: TvGroupCategory::PicInfo,
                size_class: SizeClass::Small
            })
        ));
    }

    #[test]
    fn single_item_anchors_at_origin() {
        let s = solve_layout(&ConstraintSystem::synthetic(
            1000,
            1000,
            vec![vec![item("a", 200, 300)]],
        ))
        .unwrap();
        assert_eq!(
            (s.items[0].left, s.items[0].top, s.items[0].placement),
            (0, 0, Placement::Anchor)
        );
        assert_eq!(s.items[0].width, 300);
        assert_eq!(s.objective, 700.0);
    }

    #[test]
    fn even_fill_reaches_row_width() {
        let sys = ConstraintSystem::synthetic(
            1800,
            5000,
            vec![(0..3).map(|i| item(&i.to_string(), 400, 700)).collect()],
        );
        let s = solve_layout(&sys).unwrap();
        assert_eq!(widths(&s), [600, 600, 600]);
        assert_eq!(s.objective, 0.0);
        let b = brute_force_layout(&sys, 8).unwrap();
        assert_eq!(b.objective, 0.0);
        assert_eq!(widths(&b), [600, 600, 600]);
    }

    #[test]
    fn clamped_fill_leaves_residual() {
        let sys = ConstraintSystem::synthetic(1800, 5000, vec![vec![item("a", 400, 500), item("b", 400, 500)]]);
        let s = solve_layout(&sys).unwrap();
        assert_eq!(widths(&s), [500, 500]);
        assert_eq!(s.soft_satisfaction[0].residual, 800);
        assert_eq!(s.objective, 800.0);
        assert_eq!(brute_force_layout(&sys, 8).unwrap().objective, 800.0);
    }

    #[test]
    fn full_row_forces_wrap() {
        let sys = ConstraintSystem::synthetic(
            1800,
            5000,
            vec![(0..4).map(|i| item(&i.to_string(), 600, 600)).collect()],
        );
        let s = solve_layout(&sys).unwrap();
        let rows: Vec<_> = s.items.iter().map(|i| i.row).collect();
        assert_eq!(rows, [0, 0, 0, 1]);
        assert_eq!(s.items[3].placement, Placement::Wrap);
        assert_eq!((s.items[3].left, s.items[3].top), (0, 100));
    }

    #[test]
    fn row_breaks_are_chosen_globally() {
        // filling row one greedily with a and b strands c; wrapping b
        // lets both rows close exactly
        let sys = ConstraintSystem::synthetic(
            1000,
            5000,
            vec![vec![item("a", 500, 1000), item("b", 400, 400), item("c", 600, 600)]],
        );
        let s = solve_layout(&sys).unwrap();
        assert_eq!(widths(&s), [1000, 400, 600]);
        assert_eq!(s.objective, 0.0);
        assert_eq!(brute_force_layout(&sys, 8).unwrap().objective, 0.0);
    }

    #[test]
    fn too_wide_item_is_infeasible_for_both_solvers() {
        let sys = ConstraintSystem::synthetic(500, 5000, vec![vec![item("a", 600, 700)]]);
        assert!(matches!(solve_layout(&sys), Err(LayoutError::Infeasible { .. })));
        assert!(matches!(
            brute_force_layout(&sys, 8),
            Err(LayoutError::Infeasible { .. })
        ));
    }

    #[test]
    fn water_fill_hits_target_exactly() {
        let b = [
            SizeBounds::new(100, 150, 1, 1).unwrap(),
            SizeBounds::new(200, 1000, 1, 1).unwrap(),
            SizeBounds::new(333, 400, 1, 1).unwrap(),
        ];
        for target in [633, 700, 1001, 1234, 1550] {
            let w = water_fill(&b, target);
            assert_eq!(w.iter().sum::<i32>(), target);
            for (w, b) in w.iter().zip(&b) {
                assert!(b.width_min <= *w && *w <= b.width_max);
            }
        }
    }

    #[test]
    fn height_follows_width() {
        let b = SizeBounds::new(320, 480, 200, 320).unwrap();
        assert_eq!(b.height_for(320), 200);
        assert_eq!(b.height_for(400), 250);
        assert_eq!(b.height_for(480), 300);
        let flat = SizeBounds::new(160, 1824, 96, 96).unwrap();
        assert_eq!(flat.height_for(1000), 96);
    }

    #[test]
    fn units_stack_with_row_gap() {
        let page = tv_page(vec![
            (TvGroupCategory::Search, SizeClass::Large, vec![1]),
            (TvGroupCategory::TabLayout, SizeClass::Large, vec![1, 1, 1]),
        ]);
        let (_, s) = layout_page(&page, SizeTable::builtin(), &LayoutConfig::default()).unwrap();
        assert_eq!(s.units[0].origin_y, 48);
        assert_eq!(s.units[1].origin_y, 48 + 96 + 32);
        assert_eq!(s.items[0].x, 48);
        assert!(s.pruned.is_empty());
        assert!(!s.overflow);
    }

    #[test]
    fn overflow_prunes_smallest_phone_item_first() {
        // four large cards take two rows under the player; three share one
        // row and fit
        let page = tv_page(vec![
            (TvGroupCategory::VideoMusicPlayer, SizeClass::Large, vec![10_000]),
            (TvGroupCategory::PicInfo, SizeClass::Large, vec![500, 40, 900, 40]),
        ]);
        let (fitted, pruned) = prune_overflow(&page, SizeTable::builtin(), &LayoutConfig::default()).unwrap();
        assert_eq!(pruned, ["item_2"]);
        assert_eq!(fitted.items().count(), page.items().count() - 1);
        let system = build_constraints(&fitted, SizeTable::builtin(), &LayoutConfig::default()).unwrap();
        assert!(!solve_layout(&system).unwrap().overflow);
    }

    #[test]
    fn fitting_page_is_unchanged() {
        let page = tv_page(vec![(TvGroupCategory::PicInfo, SizeClass::Medium, vec![1, 2, 3, 4])]);
        let (fitted, pruned) = prune_overflow(&page, SizeTable::builtin(), &LayoutConfig::default()).unwrap();
        assert_eq!(fitted, page);
        assert!(pruned.is_empty());
    }

    #[test]
    fn oversized_single_item_cannot_fit() {
        let table = SizeTable::from_toml(
            "[PicInfo]\nall = { width_min = 100, width_max = 200, height_min = 2000, height_max = 3000 }",
        )
        .unwrap();
        let page = tv_page(vec![(TvGroupCategory::PicInfo, SizeClass::Large, vec![1])]);
        assert!(matches!(
            prune_overflow(&page, &table, &LayoutConfig::default()),
            Err(LayoutError::CannotFit(_))
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = LayoutConfig::default();
        cfg.soft_weights.insert("balance".into(), 1.0);
        assert!(cfg.validate().is_err());
        let cfg = LayoutConfig {
            margin: -1,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(SizeTable::from_toml(
            "[PicInfo]\nall = { width_min = 10, width_max = 5, height_min = 1, height_max = 2 }"
        )
        .is_err());
    }

    #[test]
    fn builtin_table_covers_every_category_and_class() {
        let table = SizeTable::builtin();
        for c in TvGroupCategory::ALL {
            for s in SizeClass::ALL {
                table.lookup(c, s).unwrap();
            }
        }
    }
}
