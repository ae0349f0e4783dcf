//! Class wireframes of laid-out pages and the evaluation metrics over them.
//!
//! A wireframe is a per-pixel class grid: background, image or text. Items are
//! painted in layout order and clamped to the canvas, so later items win
//! where they overlap.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::LayoutSolution;
use crate::transform::TvPage;

pub const WF_MAGIC: &[u8; 4] = b"WFRM";

#[derive(Debug, Error)]
pub enum WireframeError {
    #[error("wireframes differ in size: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: u32,
        a_height: u32,
        b_width: u32,
        b_height: u32,
    },
    #[error("not a wireframe file: {0}")]
    BadFormat(String),
    #[error("reduced ratio needs at least one original leaf")]
    ZeroLeaves,
    #[error("final unit count {final_units} exceeds original leaf count {original}")]
    InvalidCounts { original: usize, final_units: usize },
    #[error("no judgments to score")]
    EmptyJudgments,
    #[error("bad judgments file: {0}")]
    Judgments(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum PixelClass {
    Background = 0,
    Image = 1,
    Text = 2,
}

impl PixelClass {
    /// The classes scored by mIoU.
    pub const SCORED: [PixelClass; 2] = [PixelClass::Image, PixelClass::Text];

    fn name(self) -> &'static str {
        match self {
            PixelClass::Background => "background",
            PixelClass::Image => "image",
            PixelClass::Text => "text",
        }
    }

    fn fill(self) -> &'static str {
        match self {
            PixelClass::Background => "#FFFFFF",
            PixelClass::Image => "#FF0000",
            PixelClass::Text => "#00FF00",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wireframe {
    width: u32,
    height: u32,
    cells: Vec<u8>,
}

impl Wireframe {
    pub fn blank(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            cells: vec![PixelClass::Background as u8; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn get(&self, x: u32, y: u32) -> PixelClass {
        match self.cells[y as usize * self.width as usize + x as usize] {
            1 => PixelClass::Image,
            2 => PixelClass::Text,
            _ => PixelClass::Background,
        }
    }

    pub fn count(&self, class: PixelClass) -> usize {
        self.cells.iter().filter(|&&c| c == class as u8).count()
    }

    /// Paints the rectangle clipped to the canvas.
    pub fn fill_rect(&mut self, x: i64, y: i64, w: i64, h: i64, class: PixelClass) {
        let (x0, y0) = (x.max(0), y.max(0));
        let x1 = (x + w).min(i64::from(self.width));
        let y1 = (y + h).min(i64::from(self.height));
        if x0 >= x1 || y0 >= y1 {
            return;
        }
        for row in y0..y1 {
            let base = row as usize * self.width as usize;
            self.cells[base + x0 as usize..base + x1 as usize].fill(class as u8);
        }
    }

    /// `WFRM`, width and height as little-endian u32, then one class byte per
    /// pixel in row-major order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.cells.len());
        out.extend_from_slice(WF_MAGIC);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&self.cells);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireframeError> {
        if bytes.len() < 12 || &bytes[..4] != WF_MAGIC {
            return Err(WireframeError::BadFormat("missing WFRM header".into()));
        }
        let width = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        let height = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        let cells = &bytes[12..];
        if cells.len() as u64 != u64::from(width) * u64::from(height) {
            return Err(WireframeError::BadFormat(format!(
                "{width}x{height} grid needs {} bytes, found {}",
                u64::from(width) * u64::from(height),
                cells.len()
            )));
        }
        if let Some(bad) = cells.iter().find(|&&c| c > 2) {
            return Err(WireframeError::BadFormat(format!("unknown class byte {bad}")));
        }
        Ok(Self {
            width,
            height,
            cells: cells.to_vec(),
        })
    }

    pub fn read_from(path: &std::path::Path) -> Result<Self, WireframeError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// Items as `(x, y, width, height, class)` in paint order.
fn blocks(page: &TvPage, solution: &LayoutSolution) -> Vec<(i64, i64, i64, i64, PixelClass)> {
    let kinds: BTreeMap<&str, bool> = page.items().map(|i| (i.id.as_str(), i.kind.is_visual())).collect();
    solution
        .items
        .iter()
        .map(|p| {
            let class = if kinds.get(p.id.as_str()).copied().unwrap_or(false) {
                PixelClass::Image
            } else {
                PixelClass::Text
            };
            (
                i64::from(p.x),
                i64::from(p.y),
                i64::from(p.width),
                i64::from(p.height),
                class,
            )
        })
        .collect()
}

pub fn render_wireframe(page: &TvPage, solution: &LayoutSolution) -> Wireframe {
    let mut wf = Wireframe::blank(page.screen.width_px, page.screen.height_px);
    for (x, y, w, h, class) in blocks(page, solution) {
        wf.fill_rect(x, y, w, h, class);
    }
    wf
}

/// The same picture as [`render_wireframe`]: red image blocks and green text
/// blocks on white.
pub fn render_svg(page: &TvPage, solution: &LayoutSolution) -> String {
    let (cw, ch) = (i64::from(page.screen.width_px), i64::from(page.screen.height_px));
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{cw}" height="{ch}" viewBox="0 0 {cw} {ch}">"#
    );
    let _ = writeln!(
        out,
        r#"  <rect x="0" y="0" width="{cw}" height="{ch}" fill="{}"/>"#,
        PixelClass::Background.fill()
    );
    for (x, y, w, h, class) in blocks(page, solution) {
        let (x0, y0) = (x.clamp(0, cw), y.clamp(0, ch));
        let (x1, y1) = ((x + w).clamp(0, cw), (y + h).clamp(0, ch));
        if x0 < x1 && y0 < y1 {
            let _ = writeln!(
                out,
                r#"  <rect x="{x0}" y="{y0}" width="{}" height="{}" fill="{}"/>"#,
                x1 - x0,
                y1 - y0,
                class.fill()
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassIou {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub iou: f64,
    /// Whether the class occurs in either frame and so counts toward the mean.
    pub included: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiouReport {
    pub per_class: BTreeMap<String, ClassIou>,
    pub miou: f64,
}

/// Mean IoU over the image and text classes present in either frame. Two
/// blank frames agree perfectly and score 1.
pub fn compute_miou(a: &Wireframe, b: &Wireframe) -> Result<MiouReport, WireframeError> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(WireframeError::DimensionMismatch {
            a_width: a.width,
            a_height: a.height,
            b_width: b.width,
            b_height: b.height,
        });
    }
    // counts[class_in_a][class_in_b]
    let mut counts = [[0u64; 3]; 3];
    for (&ca, &cb) in a.cells.iter().zip(&b.cells) {
        counts[ca as usize][cb as usize] += 1;
    }
    let mut per_class = BTreeMap::new();
    let mut sum = 0.0;
    let mut included = 0;
    for class in PixelClass::SCORED {
        let c = class as usize;
        let tp = counts[c][c];
        let fp: u64 = (0..3).filter(|&o| o != c).map(|o| counts[c][o]).sum();
        let fn_: u64 = (0..3).filter(|&o| o != c).map(|o| counts[o][c]).sum();
        let present = tp + fp + fn_ > 0;
        let iou = if present {
            tp as f64 / (tp + fp + fn_) as f64
        } else {
            1.0
        };
        if present {
            sum += iou;
            included += 1;
        }
        per_class.insert(
            class.name().to_string(),
            ClassIou {
                tp,
                fp,
                fn_,
                iou,
                included: present,
            },
        );
    }
    let miou = if included == 0 { 1.0 } else { sum / f64::from(included) };
    Ok(MiouReport { per_class, miou })
}

/// `(j - k) / j` for `j` original leaves reduced to `k` units.
pub fn reduced_ratio(original_leaf_count: usize, final_unit_count: usize) -> Result<f64, WireframeError> {
    if original_leaf_count == 0 {
        return Err(WireframeError::ZeroLeaves);
    }
    if final_unit_count > original_leaf_count {
        return Err(WireframeError::InvalidCounts {
            original: original_leaf_count,
            final_units: final_unit_count,
        });
    }
    Ok((original_leaf_count - final_unit_count) as f64 / original_leaf_count as f64)
}

pub fn exact_match_rate(judgments: &[bool]) -> Result<f64, WireframeError> {
    if judgments.is_empty() {
        return Err(WireframeError::EmptyJudgments);
    }
    Ok(judgments.iter().filter(|&&j| j).count() as f64 / judgments.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub page_id: String,
    pub group_id: String,
    #[serde(rename = "match")]
    pub matched: u8,
}

/// Reads a `page_id,group_id,match` CSV where `match` is 0 or 1.
pub fn read_judgments<R: Read>(reader: R) -> Result<Vec<Judgment>, WireframeError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| WireframeError::Judgments(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["page_id", "group_id", "match"] {
        return Err(WireframeError::Judgments(format!(
            "expected header page_id,group_id,match, found {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<Judgment>() {
        let j = row.map_err(|e| WireframeError::Judgments(e.to_string()))?;
        if j.matched > 1 {
            return Err(WireframeError::Judgments(format!(
                "match must be 0 or 1, found {} for {}/{}",
                j.matched, j.page_id, j.group_id
            )));
        }
        out.push(j);
    }
    Ok(out)
}
