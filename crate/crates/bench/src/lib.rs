//! Synthetic pages for benchmarking.

use std::fmt::Write as _;

use tvcast_core::layout::{ConstraintSystem, LayoutItem, SizeBounds};

/// A 1080x1920 feed: a search bar, a tab strip, `rows` rows of four
/// image-and-caption cards and a five-item bottom bar.
pub fn feed_page(rows: usize) -> String {
    let mut xml =
        String::from(r#"<hierarchy rotation="0"><node class="android.widget.FrameLayout" bounds="[0,0][1080,1920]">"#);
    xml.push_str(
        r#"<node class="android.widget.LinearLayout" resource-id="app:id/search_container" bounds="[0,0][1080,120]">
<node class="android.widget.EditText" resource-id="app:id/searchText" text="Search" bounds="[20,20][900,100]"/>
<node class="android.widget.Button" resource-id="app:id/searchBtn" text="Go" bounds="[920,20][1060,100]"/></node>"#,
    );
    xml.push_str(r#"<node class="android.widget.HorizontalScrollView" bounds="[0,130][1080,230]">"#);
    for (i, t) in ["HOME", "MOVIE", "SHOW", "KIDS"].iter().enumerate() {
        let _ = write!(
            xml,
            r#"<node class="android.app.ActionBar$Tab" text="{t}" bounds="[{},130][{},230]"/>"#,
            i * 270,
            i * 270 + 270
        );
    }
    xml.push_str("</node>");
    let row_h = 300;
    let _ = write!(
        xml,
        r#"<node class="androidx.recyclerview.widget.RecyclerView" bounds="[0,240][1080,{}]">"#,
        240 + rows * row_h
    );
    for r in 0..rows {
        let top = 240 + r * row_h;
        let _ = write!(
            xml,
            r#"<node class="android.widget.LinearLayout" bounds="[0,{top}][1080,{}]">"#,
            top + 290
        );
        for c in 0..4 {
            let x = c * 270 + 10;
            let _ = write!(
                xml,
                r#"<node class="android.widget.FrameLayout" bounds="[{x},{top}][{},{}]"><node class="android.widget.ImageView" bounds="[{x},{top}][{},{}]"/><node class="android.widget.TextView" text="card {r}-{c}" bounds="[{x},{}][{},{}]"/></node>"#,
                x + 250,
                top + 290,
                x + 250,
                top + 230,
                top + 240,
                x + 250,
                top + 290
            );
        }
        xml.push_str("</node>");
    }
    xml.push_str("</node>");
    xml.push_str(r#"<node class="com.google.android.material.bottomnavigation.BottomNavigationView" bounds="[0,1800][1080,1920]">"#);
    for i in 0..5 {
        let _ = write!(
            xml,
            r#"<node class="android.widget.TextView" text="tab{i}" bounds="[{},1820][{},1900]"/>"#,
            i * 216,
            i * 216 + 216
        );
    }
    xml.push_str("</node></node></hierarchy>");
    xml
}

/// One unit of `n` items with staggered width ranges.
pub fn layout_system(n: usize, row_width: i32) -> ConstraintSystem {
    let items = (0..n)
        .map(|i| {
            let wmin = 200 + (i as i32 * 37) % 180;
            LayoutItem {
                id: format!("item_{i}"),
                size_bounds: SizeBounds::new(wmin, wmin + 160, 120, 240).expect("valid bounds"),
                phone_area: i as i64,
            }
        })
        .collect();
    ConstraintSystem::synthetic(row_width, 100_000, vec![items])
}
